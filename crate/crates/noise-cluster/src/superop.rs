//! Superoperators on the doubled Hilbert space.
//!
//! Row-stacking throughout: |ρ⟩⟩ = Σ ρ_ij |e_i⟩⊗|e_j⟩, so AρB ↦ (A⊗Bᵀ)|ρ⟩⟩.
//! The doubled space is ordered (all ket factors)(all bra factors), and
//! qubit 1 is the most significant factor in each copy.

use serde::{Deserialize, Serialize};

use crate::densecore::{eigvalsh, kron, CMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

pub const CONVENTION: &str = "row-stacking";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QState {
    pub n_qubits: usize,
    pub d: usize,
    pub rho: CMatrix,
}

impl QState {
    /// Validated state: Hermitian, unit trace and PSD to 1e-10.
    pub fn new(n_qubits: usize, d: usize, rho: CMatrix) -> Result<Self> {
        check_dim(rho.dim(), n_qubits, d)?;
        let s = QState { n_qubits, d, rho };
        s.validate(1e-10)?;
        Ok(s)
    }

    /// Wraps a matrix without physicality checks.
    pub fn from_matrix(n_qubits: usize, d: usize, rho: CMatrix) -> Result<Self> {
        check_dim(rho.dim(), n_qubits, d)?;
        Ok(QState { n_qubits, d, rho })
    }

    pub fn pure(n_qubits: usize, d: usize, psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self::new(n_qubits, d, CMatrix::outer(&psi, &psi))
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let res = self.rho.hermitian_residual();
        if res > tol {
            return Err(Error::NotHermitian { residual: res });
        }
        let tr = self.rho.trace();
        if (tr - ONE).norm() > tol {
            return Err(Error::InvalidInput(format!("state trace {tr} differs from 1")));
        }
        let lo = eigvalsh(&self.rho)[0];
        if lo < -tol {
            return Err(Error::NotPsd { eigenvalue: lo });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }
}

fn check_dim(dim: usize, n_qubits: usize, d: usize) -> Result<()> {
    if n_qubits == 0 || d < 2 {
        return Err(Error::InvalidInput(format!("n_qubits={n_qubits}, d={d}")));
    }
    let expected = d.pow(n_qubits as u32);
    if dim != expected {
        return Err(Error::DimMismatch { expected, got: dim });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuperOpKind {
    Channel,
    Generator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SuperOpJson", into = "SuperOpJson")]
pub struct SuperOp {
    pub n_qubits: usize,
    pub d: usize,
    pub kind: SuperOpKind,
    pub mat: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct SuperOpJson {
    n_qubits: usize,
    d: usize,
    kind: SuperOpKind,
    convention: String,
    mat: CMatrix,
}

impl TryFrom<SuperOpJson> for SuperOp {
    type Error = Error;
    fn try_from(j: SuperOpJson) -> Result<Self> {
        if j.convention != CONVENTION {
            return Err(Error::InvalidInput(format!(
                "superoperator uses convention {:?}, expected {CONVENTION:?}",
                j.convention
            )));
        }
        SuperOp::new(j.n_qubits, j.d, j.kind, j.mat)
    }
}

impl From<SuperOp> for SuperOpJson {
    fn from(s: SuperOp) -> Self {
        SuperOpJson { n_qubits: s.n_qubits, d: s.d, kind: s.kind, convention: CONVENTION.into(), mat: s.mat }
    }
}

impl SuperOp {
    pub fn new(n_qubits: usize, d: usize, kind: SuperOpKind, mat: CMatrix) -> Result<Self> {
        let h = d.pow(n_qubits as u32);
        check_dim(mat.dim(), 2 * n_qubits, d).map_err(|_| Error::DimMismatch { expected: h * h, got: mat.dim() })?;
        Ok(SuperOp { n_qubits, d, kind, mat })
    }

    pub fn identity_channel(n_qubits: usize, d: usize) -> Self {
        let h = d.pow(n_qubits as u32);
        SuperOp { n_qubits, d, kind: SuperOpKind::Channel, mat: CMatrix::identity(h * h) }
    }

    pub fn zero_generator(n_qubits: usize, d: usize) -> Self {
        let h = d.pow(n_qubits as u32);
        SuperOp { n_qubits, d, kind: SuperOpKind::Generator, mat: CMatrix::zeros(h * h) }
    }

    /// Û for ρ ↦ UρU†, i.e. U ⊗ U*.
    pub fn unitary_channel(u: &CMatrix, n_qubits: usize, d: usize) -> Result<Self> {
        check_dim(u.dim(), n_qubits, d)?;
        Ok(SuperOp { n_qubits, d, kind: SuperOpKind::Channel, mat: kron(u, &u.conj()) })
    }

    pub fn hilbert_dim(&self) -> usize {
        self.d.pow(self.n_qubits as u32)
    }

    /// Sequential composition: `self` applied after `first`.
    pub fn compose(&self, first: &SuperOp) -> Result<SuperOp> {
        if self.mat.dim() != first.mat.dim() {
            return Err(Error::DimMismatch { expected: self.mat.dim(), got: first.mat.dim() });
        }
        Ok(SuperOp { n_qubits: self.n_qubits, d: self.d, kind: SuperOpKind::Channel, mat: self.mat.matmul(&first.mat) })
    }

    /// max |⟨⟨I|S − target|| where target is ⟨⟨I| for channels and 0 for generators.
    pub fn trace_residual(&self) -> f64 {
        let h = self.hilbert_dim();
        let n = self.mat.dim();
        let mut worst: f64 = 0.0;
        for col in 0..n {
            let mut s = ZERO;
            for a in 0..h {
                s += self.mat[(a * h + a, col)];
            }
            let (i, j) = (col / h, col % h);
            if self.kind == SuperOpKind::Channel && i == j {
                s -= ONE;
            }
            worst = worst.max(s.norm());
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub op: CMatrix,
    /// Rate in 1/s.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladModel {
    pub hamiltonian: CMatrix,
    pub jumps: Vec<Jump>,
}

impl LindbladModel {
    pub fn new(hamiltonian: CMatrix, jumps: Vec<Jump>) -> Result<Self> {
        let m = LindbladModel { hamiltonian, jumps };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let res = self.hamiltonian.hermitian_residual();
        if res > 1e-10 * self.hamiltonian.max_abs().max(1.0) {
            return Err(Error::NotHermitian { residual: res });
        }
        for j in &self.jumps {
            if !(j.rate >= 0.0) || !j.rate.is_finite() {
                return Err(Error::InvalidInput(format!("jump rate {} must be finite and ≥ 0", j.rate)));
            }
            if j.op.dim() != self.hamiltonian.dim() {
                return Err(Error::DimMismatch { expected: self.hamiltonian.dim(), got: j.op.dim() });
            }
        }
        Ok(())
    }
}

pub fn vectorize(s: &QState) -> Vec<C64> {
    s.rho.data().to_vec()
}

pub fn devectorize(v: &[C64], n_qubits: usize, d: usize) -> Result<QState> {
    let h = d.pow(n_qubits as u32);
    if v.len() != h * h {
        return Err(Error::DimMismatch { expected: h * h, got: v.len() });
    }
    QState::from_matrix(n_qubits, d, CMatrix::from_vec(h, v.to_vec())?)
}

fn infer_qubits(dim: usize, d: usize) -> Result<usize> {
    let mut n = 0;
    let mut p = 1;
    while p < dim {
        p *= d;
        n += 1;
    }
    if p != dim || n == 0 {
        return Err(Error::InvalidInput(format!("dimension {dim} is not a power of {d}")));
    }
    Ok(n)
}

/// L̂ = −i(H⊗I − I⊗Hᵀ) + Σ γ (A⊗A* − ½A†A⊗I − ½I⊗AᵀA*) for qubits.
pub fn lindbladian_superop(m: &LindbladModel) -> Result<SuperOp> {
    lindbladian_superop_d(m, 2)
}

pub fn lindbladian_superop_d(m: &LindbladModel, d: usize) -> Result<SuperOp> {
    m.validate()?;
    let h = m.hamiltonian.dim();
    let n_qubits = infer_qubits(h, d)?;
    let id = CMatrix::identity(h);
    let mi = C64::new(0.0, -1.0);
    let mut l = (&kron(&m.hamiltonian, &id) - &kron(&id, &m.hamiltonian.transpose())).scale(mi);
    for j in &m.jumps {
        if j.rate == 0.0 {
            continue;
        }
        let a = &j.op;
        let ada = a.adjoint().matmul(a);
        let mut term = kron(a, &a.conj());
        term -= &kron(&ada, &id).scale_re(0.5);
        term -= &kron(&id, &ada.transpose()).scale_re(0.5);
        l += &term.scale_re(j.rate);
    }
    Ok(SuperOp { n_qubits, d, kind: SuperOpKind::Generator, mat: l })
}

/// Applies a channel to a state. The output is not renormalized.
pub fn apply_channel(c: &SuperOp, s: &QState) -> Result<QState> {
    if c.hilbert_dim() != s.dim() {
        return Err(Error::DimMismatch { expected: c.hilbert_dim(), got: s.dim() });
    }
    devectorize(&c.mat.matvec(&vectorize(s)), s.n_qubits, s.d)
}

/// Choi matrix Σ |i⟩⟨j| ⊗ E(|i⟩⟨j|), i.e. C[(i,k),(j,l)] = S[(k,l),(i,j)].
pub fn choi_matrix(c: &SuperOp) -> CMatrix {
    let h = c.hilbert_dim();
    CMatrix::from_fn(h * h, |r, col| {
        let (i, k) = (r / h, r % h);
        let (j, l) = (col / h, col % h);
        c.mat[(k * h + l, i * h + j)]
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CptpReport {
    pub min_choi_eigenvalue: f64,
    pub tp_residual: f64,
    pub pass: bool,
}

pub fn is_cptp(c: &SuperOp, tol: f64) -> CptpReport {
    let choi = choi_matrix(c);
    let min = eigvalsh(&choi).first().copied().unwrap_or(0.0);
    let channel = SuperOp { kind: SuperOpKind::Channel, ..c.clone() };
    let tp = channel.trace_residual();
    CptpReport { min_choi_eigenvalue: min, tp_residual: tp, pass: min >= -tol && tp <= tol }
}

/// Index bookkeeping for splitting n-qudit indices into a kept subset and its complement.
#[derive(Clone, Debug)]
pub struct Split {
    /// Sorted 0-based kept sites.
    pub keep: Vec<usize>,
    pub dim_keep: usize,
    pub dim_rest: usize,
    /// Full index → (kept index, complement index).
    pub parts: Vec<(usize, usize)>,
    /// (kept, complement) → full index, laid out kept-major.
    pub join: Vec<usize>,
}

impl Split {
    /// `keep` holds 1-based qubit labels.
    pub fn new(keep: &[usize], n: usize, d: usize) -> Result<Split> {
        if keep.is_empty() {
            return Err(Error::InvalidInput("qubit subset must be nonempty".into()));
        }
        let mut sites: Vec<usize> = Vec::with_capacity(keep.len());
        for &q in keep {
            if q == 0 || q > n {
                return Err(Error::InvalidInput(format!("qubit {q} outside 1..={n}")));
            }
            sites.push(q - 1);
        }
        sites.sort_unstable();
        sites.dedup();
        if sites.len() != keep.len() {
            return Err(Error::InvalidInput("qubit subset has duplicates".into()));
        }
        let full = d.pow(n as u32);
        let dim_keep = d.pow(sites.len() as u32);
        let dim_rest = full / dim_keep;
        let mut parts = Vec::with_capacity(full);
        let mut join = vec![0; full];
        for idx in 0..full {
            let (mut ks, mut rs) = (0, 0);
            for site in 0..n {
                let digit = (idx / d.pow((n - 1 - site) as u32)) % d;
                if sites.binary_search(&site).is_ok() {
                    ks = ks * d + digit;
                } else {
                    rs = rs * d + digit;
                }
            }
            parts.push((ks, rs));
            join[ks * dim_rest + rs] = idx;
        }
        Ok(Split { keep: sites, dim_keep, dim_rest, parts, join })
    }

    pub fn labels(&self) -> Vec<usize> {
        self.keep.iter().map(|s| s + 1).collect()
    }

    fn full(&self, k: usize, r: usize) -> usize {
        self.join[k * self.dim_rest + r]
    }
}

/// Coefficient filter onto a subset: traces both copies over the complement,
/// normalized so that it inverts [`embed`].
///
/// out[(i,j),(i',j')] = d^{−2|S̄|} Σ_{a,b} g[(i a, j b),(i' a, j' b)].
/// Keeps exactly the terms that act as identity on the complement in both factors.
pub fn superop_partial_trace(g: &SuperOp, keep: &[usize]) -> Result<SuperOp> {
    let sp = Split::new(keep, g.n_qubits, g.d)?;
    let (dk, dr) = (sp.dim_keep, sp.dim_rest);
    let h = g.hilbert_dim();
    let norm = 1.0 / (dr * dr) as f64;
    let m = sp.keep.len();
    let out = CMatrix::from_fn(dk * dk, |row, col| {
        let (i, j) = (row / dk, row % dk);
        let (ip, jp) = (col / dk, col % dk);
        let mut s = ZERO;
        for a in 0..dr {
            let (fi, fip) = (sp.full(i, a), sp.full(ip, a));
            for b in 0..dr {
                let (fj, fjp) = (sp.full(j, b), sp.full(jp, b));
                s += g.mat[(fi * h + fj, fip * h + fjp)];
            }
        }
        s * norm
    });
    Ok(SuperOp { n_qubits: m, d: g.d, kind: g.kind, mat: out })
}

/// Reduced map X ↦ Tr_S̄[g(X ⊗ 𝟙/d^{|S̄|})].
///
/// This is the physical marginal of a channel with a maximally mixed
/// complement; it preserves trace preservation and complete positivity.
pub fn superop_marginal(g: &SuperOp, keep: &[usize]) -> Result<SuperOp> {
    let sp = Split::new(keep, g.n_qubits, g.d)?;
    let (dk, dr) = (sp.dim_keep, sp.dim_rest);
    let h = g.hilbert_dim();
    let norm = 1.0 / dr as f64;
    let m = sp.keep.len();
    let out = CMatrix::from_fn(dk * dk, |row, col| {
        let (i, j) = (row / dk, row % dk);
        let (ip, jp) = (col / dk, col % dk);
        let mut s = ZERO;
        for a in 0..dr {
            let r = sp.full(i, a) * h + sp.full(j, a);
            for b in 0..dr {
                s += g.mat[(r, sp.full(ip, b) * h + sp.full(jp, b))];
            }
        }
        s * norm
    });
    Ok(SuperOp { n_qubits: m, d: g.d, kind: g.kind, mat: out })
}

/// Tensors the identity superoperator onto the complement of `keep` (1-based labels).
pub fn embed(g: &SuperOp, keep: &[usize], n: usize) -> Result<SuperOp> {
    if keep.len() != g.n_qubits {
        return Err(Error::DimMismatch { expected: keep.len(), got: g.n_qubits });
    }
    let sp = Split::new(keep, n, g.d)?;
    let dk = sp.dim_keep;
    let h = g.d.pow(n as u32);
    let mut out = CMatrix::zeros(h * h);
    for i in 0..h {
        let (ik, ir) = sp.parts[i];
        for j in 0..h {
            let (jk, jr) = sp.parts[j];
            let row = i * h + j;
            let grow = ik * dk + jk;
            for ipk in 0..dk {
                let fip = sp.full(ipk, ir);
                for jpk in 0..dk {
                    let v = g.mat[(grow, ipk * dk + jpk)];
                    if v != ZERO {
                        out[(row, fip * h + sp.full(jpk, jr))] = v;
                    }
                }
            }
        }
    }
    Ok(SuperOp { n_qubits: n, d: g.d, kind: g.kind, mat: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densecore::{mat_exp, pauli_x, pauli_z, sigma_minus, I};

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed.wrapping_add(0x9E3779B97F4A7C15);
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        }
    }

    fn rand_mat(dim: usize, seed: u64) -> CMatrix {
        let mut r = lcg(seed);
        CMatrix::from_fn(dim, |_, _| C64::new(r(), r()))
    }

    fn rand_model(dim: usize, seed: u64) -> LindbladModel {
        let h = rand_mat(dim, seed).hermitian_part();
        let jumps = (0..3).map(|k| Jump { op: rand_mat(dim, seed * 7 + k), rate: 0.3 }).collect();
        LindbladModel::new(h, jumps).unwrap()
    }

    #[test]
    fn vectorize_row_major() {
        let s = QState::pure(1, 2, &[ONE, ZERO]).unwrap();
        assert_eq!(vectorize(&s), vec![ONE, ZERO, ZERO, ZERO]);
        let mut m = CMatrix::zeros(2);
        m[(1, 0)] = ONE;
        let v = QState::from_matrix(1, 2, m).unwrap();
        assert_eq!(vectorize(&v), vec![ZERO, ZERO, ONE, ZERO]);
    }

    #[test]
    fn row_stacking_sandwich() {
        let (a, b, rho) = (rand_mat(4, 1), rand_mat(4, 2), rand_mat(4, 3));
        let s = QState::from_matrix(2, 2, rho.clone()).unwrap();
        let op = SuperOp::new(2, 2, SuperOpKind::Channel, kron(&a, &b.transpose())).unwrap();
        let out = apply_channel(&op, &s).unwrap();
        assert!((&out.rho - &a.matmul(&rho).matmul(&b)).max_abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_only_generator() {
        let m = LindbladModel::new(pauli_z().scale_re(0.5), vec![]).unwrap();
        let l = lindbladian_superop(&m).unwrap();
        let expect = CMatrix::diag(&[ZERO, -I, I, ZERO]);
        assert!((&l.mat - &expect).max_abs() < 1e-15);
        assert!(l.trace_residual() < 1e-15);
    }

    #[test]
    fn dephasing_decay() {
        let gamma = 0.7;
        let m = LindbladModel::new(CMatrix::zeros(2), vec![Jump { op: pauli_z(), rate: gamma }]).unwrap();
        let l = lindbladian_superop(&m).unwrap();
        let t = 1.3;
        let c = SuperOp::new(1, 2, SuperOpKind::Channel, mat_exp(&l.mat.scale_re(t)).unwrap()).unwrap();
        let plus = QState::pure(1, 2, &[ONE, ONE]).unwrap();
        let out = apply_channel(&c, &plus).unwrap();
        assert!((out.rho[(0, 1)].re - 0.5 * (-2.0 * gamma * t).exp()).abs() < 1e-13);
    }

    #[test]
    fn amplitude_damping_population() {
        let rate = 2.0;
        let m = LindbladModel::new(CMatrix::zeros(2), vec![Jump { op: sigma_minus(), rate }]).unwrap();
        let l = lindbladian_superop(&m).unwrap();
        let c = SuperOp::new(1, 2, SuperOpKind::Channel, mat_exp(&l.mat.scale_re(0.4)).unwrap()).unwrap();
        let one = QState::pure(1, 2, &[ZERO, ONE]).unwrap();
        let out = apply_channel(&c, &one).unwrap();
        assert!((out.rho[(1, 1)].re - (-0.8f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn identity_choi_and_cptp() {
        let id = SuperOp::identity_channel(1, 2);
        let c = choi_matrix(&id);
        let expect = CMatrix::from_real(&[&[1., 0., 0., 1.], &[0.; 4], &[0.; 4], &[1., 0., 0., 1.]]);
        assert_eq!(c, expect);
        assert!(is_cptp(&id, 1e-10).pass);
    }

    #[test]
    fn lindblad_exponentials_are_cptp_and_inverses_are_not() {
        for seed in 0..5 {
            let l = lindbladian_superop(&rand_model(4, seed)).unwrap();
            let c = SuperOp::new(2, 2, SuperOpKind::Channel, mat_exp(&l.mat).unwrap()).unwrap();
            let rep = is_cptp(&c, 1e-8);
            assert!(rep.pass, "{rep:?}");
            let inv = SuperOp::new(2, 2, SuperOpKind::Channel, mat_exp(&l.mat.scale_re(-1.0)).unwrap()).unwrap();
            assert!(!is_cptp(&inv, 1e-8).pass);
        }
    }

    #[test]
    fn partial_trace_inverts_embed() {
        for keep in [vec![1], vec![2], vec![3], vec![1, 3], vec![2, 3], vec![1, 2, 3]] {
            let g = SuperOp::new(keep.len(), 2, SuperOpKind::Generator, rand_mat(4usize.pow(keep.len() as u32), 11)).unwrap();
            let e = embed(&g, &keep, 3).unwrap();
            let back = superop_partial_trace(&e, &keep).unwrap();
            assert!((&back.mat - &g.mat).max_abs() < 1e-14, "{keep:?}");
            let back = superop_marginal(&e, &keep).unwrap();
            assert!((&back.mat - &g.mat).max_abs() < 1e-14, "{keep:?}");
        }
    }

    #[test]
    fn embed_identity_and_commutation() {
        let id = embed(&SuperOp::identity_channel(1, 2), &[2], 3).unwrap();
        assert_eq!(id.mat, CMatrix::identity(64));
        let a = lindbladian_superop(&rand_model(2, 3)).unwrap();
        let b = lindbladian_superop(&rand_model(2, 4)).unwrap();
        let ea = embed(&a, &[2], 3).unwrap();
        let eb = embed(&b, &[3], 3).unwrap();
        let comm = &ea.mat.matmul(&eb.mat) - &eb.mat.matmul(&ea.mat);
        assert!(comm.max_abs() < 1e-13);
    }

    #[test]
    fn local_generator_filters() {
        let l1 = lindbladian_superop(&LindbladModel::new(pauli_x(), vec![]).unwrap()).unwrap();
        let g = embed(&l1, &[1], 2).unwrap();
        let keep1 = superop_partial_trace(&g, &[1]).unwrap();
        assert!((&keep1.mat - &l1.mat).max_abs() < 1e-15);
        assert!(superop_partial_trace(&g, &[2]).unwrap().mat.max_abs() < 1e-15);
        assert!(superop_marginal(&g, &[2]).unwrap().mat.max_abs() < 1e-15);
    }

    #[test]
    fn marginal_preserves_trace() {
        let l = lindbladian_superop(&rand_model(8, 5)).unwrap();
        let c = SuperOp::new(3, 2, SuperOpKind::Channel, mat_exp(&l.mat.scale_re(0.3)).unwrap()).unwrap();
        let m = superop_marginal(&c, &[1, 3]).unwrap();
        let rep = is_cptp(&m, 1e-10);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn json_convention_tag() {
        let s = serde_json::to_string(&SuperOp::identity_channel(1, 2)).unwrap();
        assert!(s.contains("\"convention\":\"row-stacking\""));
        let back: SuperOp = serde_json::from_str(&s).unwrap();
        assert_eq!(back, SuperOp::identity_channel(1, 2));
        let foreign = s.replace("row-stacking", "column-stacking");
        assert!(serde_json::from_str::<SuperOp>(&foreign).is_err());
    }

    #[test]
    fn subset_errors() {
        let g = SuperOp::zero_generator(2, 2);
        assert!(superop_partial_trace(&g, &[]).is_err());
        assert!(superop_partial_trace(&g, &[3]).is_err());
        assert!(embed(&SuperOp::zero_generator(1, 2), &[1, 2], 3).is_err());
    }
}
