use noise_cluster::densecore::{eigvals, frobenius_norm, mat_exp, mat_log_principal, mat_sqrt_psd, pauli_x, pauli_z, CMatrix, C64};

fn main() -> noise_cluster::Result<()> {
    let a = CMatrix::from_fn(4, |i, j| C64::new(0.1 * (i as f64 - j as f64), 0.05 * (i + j) as f64));
    let e = mat_exp(&a)?;
    let back = mat_log_principal(&e)?;
    println!("exp/log round trip error: {:.2e}", frobenius_norm(&(&back - &a)));

    for (i, l) in eigvals(&a)?.iter().enumerate() {
        println!("eigenvalue {i}: {:.6} {:+.6}i", l.re, l.im);
    }

    let rho = CMatrix::from_fn(2, |i, j| (pauli_x()[(i, j)] * 0.3 + pauli_z()[(i, j)] * 0.2) + if i == j { C64::new(0.5, 0.0) } else { C64::new(0.0, 0.0) });
    let s = mat_sqrt_psd(&rho)?;
    println!("sqrt(rho)^2 - rho: {:.2e}", frobenius_norm(&(&s.matmul(&s) - &rho)));
    Ok(())
}
