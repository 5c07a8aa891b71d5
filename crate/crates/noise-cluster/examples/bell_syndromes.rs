use noise_cluster::calibrate::{build_parity_schedule, cnot_pairs, PulseTable, Stabilizer};
use noise_cluster::densecore::{embed_site, mat_exp, pauli_x, pauli_z};
use noise_cluster::device::{DeviceConfig, Geometry};
use noise_cluster::qec202::{infidelity_distance, run_rounds, Bell};
use noise_cluster::superop::{lindbladian_superop, Jump, LindbladModel, SuperOp, SuperOpKind};

fn main() -> noise_cluster::Result<()> {
    let cfg = DeviceConfig::reference(Geometry::Linear);
    let table = PulseTable::nominal(&cfg, &cnot_pairs());
    let zz_u = build_parity_schedule(&cfg, &table, Stabilizer::ZZ)?.ideal_target;
    let xx_u = build_parity_schedule(&cfg, &table, Stabilizer::XX)?.ideal_target;
    let zz = SuperOp::unitary_channel(&zz_u, 3, 2)?;
    let xx = SuperOp::unitary_channel(&xx_u, 3, 2)?;

    // the same checks followed by weak dephasing of the data and a flip of the ancilla
    let noise = lindbladian_superop(&LindbladModel::new(
        noise_cluster::densecore::CMatrix::zeros(8),
        vec![
            Jump { op: embed_site(&pauli_z(), 0, 3), rate: 0.004 },
            Jump { op: embed_site(&pauli_z(), 1, 3), rate: 0.004 },
            Jump { op: embed_site(&pauli_x(), 2, 3), rate: 0.002 },
        ],
    )?)?;
    let noise = SuperOp::new(3, 2, SuperOpKind::Channel, mat_exp(&noise.mat)?)?;
    let zz_noisy = noise.compose(&zz)?;
    let xx_noisy = noise.compose(&xx)?;

    let rounds = 4;
    for bell in Bell::ALL {
        let ideal = run_rounds(&zz, &xx, bell, rounds)?;
        let noisy = run_rounds(&zz_noisy, &xx_noisy, bell, rounds)?;
        let (key, _) = ideal.branches.iter().next().expect("one ideal branch");
        println!(
            "{:<4} ideal syndromes {key}  noisy branches {:>3}  total probability {:.12}  infidelity {:.4e}",
            bell.label(),
            noisy.branches.len(),
            noisy.total_probability(),
            infidelity_distance(&ideal, &noisy)?
        );
    }
    Ok(())
}
