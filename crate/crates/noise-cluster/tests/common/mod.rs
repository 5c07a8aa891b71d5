#![allow(dead_code)]

use noise_cluster::densecore::{frobenius_norm, CMatrix, C64};
use noise_cluster::superop::{lindbladian_superop, Jump, LindbladModel, SuperOp, SuperOpKind};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Random Hermitian Hamiltonian plus two generic jumps on three qubits.
pub fn random_model(rng: &mut ChaCha8Rng) -> LindbladModel {
    let a = gaussian_matrix(rng, 8);
    let h = a.hermitian_part();
    let jumps = (0..2).map(|_| Jump { op: gaussian_matrix(rng, 8), rate: rng.random_range(0.2..1.0) }).collect();
    LindbladModel::new(h, jumps).unwrap()
}

/// Generator of a random model rescaled to the given Frobenius norm.
pub fn random_generator(rng: &mut ChaCha8Rng, norm: f64) -> SuperOp {
    let g = lindbladian_superop(&random_model(rng)).unwrap();
    let s = norm / frobenius_norm(&g.mat);
    SuperOp::new(3, 2, SuperOpKind::Generator, g.mat.scale_re(s)).unwrap()
}

/// Row-stacked superoperator of ρ ↦ γ(AρA† − ½{A†A, ρ}), built column by column.
pub fn dissipator_by_action(a: &CMatrix, gamma: f64) -> CMatrix {
    let d = a.dim();
    let ad = a.adjoint();
    let ada = ad.matmul(a);
    let mut out = CMatrix::zeros(d * d);
    for k in 0..d {
        for l in 0..d {
            let mut e = CMatrix::zeros(d);
            e[(k, l)] = C64::new(1.0, 0.0);
            let img = a.matmul(&e).matmul(&ad);
            let left = ada.matmul(&e);
            let right = e.matmul(&ada);
            for i in 0..d {
                for j in 0..d {
                    let v = img[(i, j)] - (left[(i, j)] + right[(i, j)]).scale(0.5);
                    out[(i * d + j, k * d + l)] = v.scale(gamma);
                }
            }
        }
    }
    out
}

fn bit(x: usize, q: usize, n: usize) -> usize {
    (x >> (n - q)) & 1
}

fn sub_index(x: usize, qubits: &[usize], n: usize) -> usize {
    qubits.iter().fold(0, |acc, &q| (acc << 1) | bit(x, q, n))
}

/// Embeds a superoperator on `keep` (sorted, 1-based) as g ⊗ id on n qubits.
pub fn embed_by_index(g: &CMatrix, keep: &[usize], n: usize) -> CMatrix {
    let d = 1 << n;
    let rest: Vec<usize> = (1..=n).filter(|q| !keep.contains(q)).collect();
    let ds = 1 << keep.len();
    CMatrix::from_fn(d * d, |r, c| {
        let (i, j, k, l) = (r / d, r % d, c / d, c % d);
        if sub_index(i, &rest, n) != sub_index(k, &rest, n) || sub_index(j, &rest, n) != sub_index(l, &rest, n) {
            return C64::new(0.0, 0.0);
        }
        let (is, js, ks, ls) = (sub_index(i, keep, n), sub_index(j, keep, n), sub_index(k, keep, n), sub_index(l, keep, n));
        g[(is * ds + js, ks * ds + ls)]
    })
}

/// X ↦ Tr_rest[E(X ⊗ 𝟙/d_rest)] computed entry by entry.
pub fn marginal_by_index(e: &CMatrix, keep: &[usize], n: usize) -> CMatrix {
    let d = 1 << n;
    let rest: Vec<usize> = (1..=n).filter(|q| !keep.contains(q)).collect();
    let ds = 1 << keep.len();
    let dr = (1 << rest.len()) as f64;
    let mut out = CMatrix::zeros(ds * ds);
    for r in 0..d * d {
        let (i, j) = (r / d, r % d);
        if sub_index(i, &rest, n) != sub_index(j, &rest, n) {
            continue;
        }
        for c in 0..d * d {
            let (k, l) = (c / d, c % d);
            if sub_index(k, &rest, n) != sub_index(l, &rest, n) {
                continue;
            }
            let row = sub_index(i, keep, n) * ds + sub_index(j, keep, n);
            let col = sub_index(k, keep, n) * ds + sub_index(l, keep, n);
            out[(row, col)] += e[(r, c)].unscale(dr);
        }
    }
    out
}

pub fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = CMatrix::from_fn(a.dim(), |i, j| a[(i, j)] - b[(i, j)]);
    frobenius_norm(&diff) / frobenius_norm(b).max(1e-300)
}

pub fn abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius_norm(&CMatrix::from_fn(a.dim(), |i, j| a[(i, j)] - b[(i, j)]))
}
