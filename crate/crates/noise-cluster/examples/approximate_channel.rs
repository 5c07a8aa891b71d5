use noise_cluster::approx::{approx_channel, ApproxChannelSpec};
use noise_cluster::cluster::cluster_decompose_channel;
use noise_cluster::densecore::{frobenius_norm, kron_all, mat_exp, pauli_x, pauli_z, CMatrix};
use noise_cluster::superop::{lindbladian_superop, Jump, LindbladModel, SuperOp, SuperOpKind};

fn main() -> noise_cluster::Result<()> {
    let id = CMatrix::identity(2);
    let h = &kron_all(&[pauli_z(), pauli_z(), id.clone()]).scale_re(0.03) + &kron_all(&[pauli_x(), pauli_z(), pauli_x()]).scale_re(0.01);
    let jumps = vec![
        Jump { op: kron_all(&[pauli_z(), id.clone(), id.clone()]), rate: 0.01 },
        Jump { op: kron_all(&[id.clone(), pauli_x(), pauli_x()]), rate: 0.005 },
    ];
    let g = lindbladian_superop(&LindbladModel::new(h, jumps)?)?;
    let n = SuperOp::new(3, 2, SuperOpKind::Channel, mat_exp(&g.mat)?)?;
    let dec = cluster_decompose_channel(&n)?;

    println!("order  gain   |N_approx - N|_F   CPTP   trace residual");
    for order in 1..=3 {
        for gain in [0.9, 1.0, 1.1] {
            let a = approx_channel(&ApproxChannelSpec::new(dec.clone(), order, gain))?;
            println!(
                "{order:>5}  {gain:.1}   {:.3e}          {:<5}  {:.1e}",
                frobenius_norm(&(&a.channel.mat - &n.mat)),
                a.cptp_report.pass,
                a.cptp_report.tp_residual
            );
        }
    }
    Ok(())
}
