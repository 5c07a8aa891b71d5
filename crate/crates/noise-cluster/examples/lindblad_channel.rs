use noise_cluster::densecore::{embed_site, mat_exp, pauli_z, sigma_minus, CMatrix, C64};
use noise_cluster::superop::{apply_channel, is_cptp, lindbladian_superop, Jump, LindbladModel, QState, SuperOp, SuperOpKind};

fn main() -> noise_cluster::Result<()> {
    // decay on qubit 1, dephasing on qubit 2, a weak ZZ coupling; times in units of the step
    let (t1, tphi) = (50.0, 80.0);
    let h = embed_site(&pauli_z(), 0, 2).matmul(&embed_site(&pauli_z(), 1, 2)).scale_re(0.01);
    let jumps = vec![
        Jump { op: embed_site(&sigma_minus(), 0, 2), rate: 1.0 / t1 },
        Jump { op: embed_site(&pauli_z(), 1, 2), rate: 1.0 / tphi },
    ];
    let gen = lindbladian_superop(&LindbladModel::new(h, jumps)?)?;
    let ch = SuperOp::new(2, 2, SuperOpKind::Channel, mat_exp(&gen.mat)?)?;
    let report = is_cptp(&ch, 1e-10);
    println!("CPTP: {} (min Choi eigenvalue {:.2e}, trace residual {:.2e})", report.pass, report.min_choi_eigenvalue, report.tp_residual);

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus_one = [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0), C64::new(s, 0.0)];
    let out = apply_channel(&ch, &QState::pure(2, 2, &plus_one)?)?;
    let rho: &CMatrix = &out.rho;
    println!("population of |1x>: {:.5} (expect e^(-1/T1) = {:.5})", rho[(2, 2)].re + rho[(3, 3)].re, (-1.0 / t1).exp());
    let expect = 0.5 * (-2.0 / tphi - 1.0 / t1).exp();
    println!("|coherence <10|rho|11>|: {:.5} (expect {expect:.5})", rho[(2, 3)].norm());
    Ok(())
}
