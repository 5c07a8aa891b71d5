use noise_cluster::cluster::{cluster_decompose, cluster_decompose_channel, cluster_decompose_with, pauli_coefficients, Reduction};
use noise_cluster::densecore::{embed_site, frobenius_norm, kron_all, mat_exp, pauli_x, pauli_z, sigma_minus, CMatrix};
use noise_cluster::superop::{lindbladian_superop, Jump, LindbladModel, SuperOp, SuperOpKind};

fn main() -> noise_cluster::Result<()> {
    let id = CMatrix::identity(2);
    // ZZ crosstalk on 1-2, a three-body ZXZ term, decay on qubit 3
    let h = &kron_all(&[pauli_z(), pauli_z(), id.clone()]).scale_re(0.02) + &kron_all(&[pauli_z(), pauli_x(), pauli_z()]).scale_re(0.005);
    let jumps = vec![Jump { op: embed_site(&sigma_minus(), 2, 3), rate: 0.03 }];
    let g = lindbladian_superop(&LindbladModel::new(h, jumps)?)?;
    let n = SuperOp::new(3, 2, SuperOpKind::Channel, mat_exp(&g.mat)?)?;

    let filter = cluster_decompose(&g)?;
    let marginal = cluster_decompose_with(&g, Reduction::Marginal)?;
    let channel = cluster_decompose_channel(&n)?;
    println!("subset      filter     marginal   channel    impurity");
    for (s, c) in filter.ordered() {
        println!(
            "{:<10} {:.3e}  {:.3e}  {:.3e}  {:.1e}",
            format!("{s:?}"),
            frobenius_norm(&c.mat),
            frobenius_norm(&marginal.component(s).unwrap().mat),
            frobenius_norm(&channel.component(s).unwrap().mat),
            pauli_coefficients(c)?.purity_violation(s)
        );
    }
    println!("sum of components vs generator: {:.2e}", frobenius_norm(&(&filter.total().mat - &g.mat)));
    Ok(())
}
