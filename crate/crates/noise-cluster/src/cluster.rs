//! Normal form, effective Lindbladian and the cluster expansion of a noise
//! generator into components with pure m-body support.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::densecore::{eigvals, frobenius_norm, kron_all, mat_log_principal, pauli, CMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::superop::{embed, superop_marginal, superop_partial_trace, SuperOp, SuperOpKind};

/// How a generator is reduced onto a qubit subset before the recurrence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Keep only terms that are identity on the complement in both factors.
    PauliFilter,
    /// X ↦ Tr_S̄[g(X ⊗ 𝟙/d^{|S̄|})], the physical marginal.
    Marginal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionSource {
    ExactGenerator,
    ChannelBased,
}

/// Components keyed by sorted 1-based subsets, each embedded on the full space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DecompositionJson", into = "DecompositionJson")]
pub struct ClusterDecomposition {
    pub n_qubits: usize,
    pub d: usize,
    pub source: DecompositionSource,
    pub components: BTreeMap<Vec<usize>, SuperOp>,
}

#[derive(Serialize, Deserialize)]
struct ComponentJson {
    subset: Vec<usize>,
    mat: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct DecompositionJson {
    n_qubits: usize,
    #[serde(default = "two")]
    d: usize,
    source: DecompositionSource,
    components: Vec<ComponentJson>,
}

fn two() -> usize {
    2
}

impl TryFrom<DecompositionJson> for ClusterDecomposition {
    type Error = Error;
    fn try_from(j: DecompositionJson) -> Result<Self> {
        let mut components = BTreeMap::new();
        for c in j.components {
            let op = SuperOp::new(j.n_qubits, j.d, SuperOpKind::Generator, c.mat)?;
            if components.insert(c.subset.clone(), op).is_some() {
                return Err(Error::InvalidInput(format!("subset {:?} listed twice", c.subset)));
            }
        }
        let expected = subsets(j.n_qubits);
        if components.len() != expected.len() || expected.iter().any(|s| !components.contains_key(s)) {
            return Err(Error::InvalidInput("decomposition must list every nonempty subset once".into()));
        }
        Ok(ClusterDecomposition { n_qubits: j.n_qubits, d: j.d, source: j.source, components })
    }
}

impl From<ClusterDecomposition> for DecompositionJson {
    fn from(c: ClusterDecomposition) -> Self {
        let components = subsets(c.n_qubits)
            .into_iter()
            .map(|s| {
                let mat = c.components[&s].mat.clone();
                ComponentJson { subset: s, mat }
            })
            .collect();
        DecompositionJson { n_qubits: c.n_qubits, d: c.d, source: c.source, components }
    }
}

impl ClusterDecomposition {
    /// Components in recurrence order.
    pub fn ordered(&self) -> impl Iterator<Item = (&Vec<usize>, &SuperOp)> {
        subsets(self.n_qubits).into_iter().map(move |s| {
            let (k, v) = self.components.get_key_value(&s).expect("complete decomposition");
            (k, v)
        })
    }

    pub fn component(&self, subset: &[usize]) -> Option<&SuperOp> {
        self.components.get(subset)
    }

    /// Σ of all components.
    pub fn total(&self) -> SuperOp {
        let mut acc = SuperOp::zero_generator(self.n_qubits, self.d);
        for c in self.components.values() {
            acc.mat += &c.mat;
        }
        acc
    }
}

/// Nonempty subsets of {1..n}: ascending size, lexicographic within a size.
pub fn subsets(n: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).collect())
        .collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all
}

fn is_strict_subset(r: &[usize], s: &[usize]) -> bool {
    r.len() < s.len() && r.iter().all(|q| s.contains(q))
}

/// N̂ = V̂ · Û⁻¹ (x = 0 normal form).
pub fn normal_form(actual: &SuperOp, ideal_u: &CMatrix) -> Result<SuperOp> {
    let res = ideal_u.unitary_residual();
    if res > 1e-10 {
        return Err(Error::NotUnitary { residual: res });
    }
    let u_inv = SuperOp::unitary_channel(&ideal_u.adjoint(), actual.n_qubits, actual.d)?;
    actual.compose(&u_inv)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EffectiveLindbladian {
    pub generator: SuperOp,
    pub max_re_eigenvalue: f64,
    /// All eigenvalues have non-positive real part (to 1e-10).
    pub physical: bool,
}

/// L̃ = ln N̂ with a physicality report.
pub fn effective_lindbladian(n: &SuperOp) -> Result<EffectiveLindbladian> {
    let log = mat_log_principal(&n.mat).map_err(|e| match e {
        Error::BranchCut { eigenvalue } => Error::Domain(format!(
            "noise channel is too far from identity for the principal logarithm (eigenvalue {eigenvalue})"
        )),
        other => other,
    })?;
    let generator = SuperOp::new(n.n_qubits, n.d, SuperOpKind::Generator, log)?;
    let max_re = max_real_eigenvalue(&generator.mat)?;
    Ok(EffectiveLindbladian { generator, max_re_eigenvalue: max_re, physical: max_re <= 1e-10 })
}

pub fn max_real_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(eigvals(m)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

fn reduce(g: &SuperOp, s: &[usize], how: Reduction) -> Result<SuperOp> {
    match how {
        Reduction::PauliFilter => superop_partial_trace(g, s),
        Reduction::Marginal => superop_marginal(g, s),
    }
}

fn recurrence(n: usize, d: usize, source: DecompositionSource, mut first: impl FnMut(&[usize]) -> Result<SuperOp>) -> Result<ClusterDecomposition> {
    let mut components: BTreeMap<Vec<usize>, SuperOp> = BTreeMap::new();
    for s in subsets(n) {
        let mut c = embed(&first(&s)?, &s, n)?;
        for (r, lower) in &components {
            if is_strict_subset(r, &s) {
                c.mat -= &lower.mat;
            }
        }
        c.kind = SuperOpKind::Generator;
        components.insert(s, c);
    }
    Ok(ClusterDecomposition { n_qubits: n, d, source, components })
}

/// Exact-generator cluster expansion using the Pauli-filter reduction.
pub fn cluster_decompose(g: &SuperOp) -> Result<ClusterDecomposition> {
    cluster_decompose_with(g, Reduction::PauliFilter)
}

pub fn cluster_decompose_with(g: &SuperOp, how: Reduction) -> Result<ClusterDecomposition> {
    recurrence(g.n_qubits, g.d, DecompositionSource::ExactGenerator, |s| reduce(g, s, how))
}

/// First term of the channel-based recurrence: ln Tr_S̄[N(X ⊗ 𝟙/d^{|S̄|})] on S.
pub fn channel_first_term(n: &SuperOp, s: &[usize]) -> Result<SuperOp> {
    let red = superop_marginal(n, s)?;
    let log = mat_log_principal(&red.mat)?;
    SuperOp::new(red.n_qubits, red.d, SuperOpKind::Generator, log)
}

/// Channel-based cluster expansion with a maximally mixed complement.
pub fn cluster_decompose_channel(n: &SuperOp) -> Result<ClusterDecomposition> {
    let full = mat_log_principal(&n.mat)?;
    let norm = frobenius_norm(&full);
    if norm >= 0.5 {
        eprintln!("warning: ‖L̃‖_F = {norm:.3} ≥ 1/2; the channel-based expansion is outside its accuracy regime");
    }
    recurrence(n.n_qubits, n.d, DecompositionSource::ChannelBased, |s| {
        if s.len() == n.n_qubits {
            SuperOp::new(n.n_qubits, n.d, SuperOpKind::Generator, full.clone())
        } else {
            channel_first_term(n, s)
        }
    })
}

/// Two-sided Pauli expansion g = Σ c_{α,α'} (B_α ⊗ B_α'^*) with B = σ/√2 per qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTable {
    pub n_qubits: usize,
    /// Basis convention note.
    pub convention: String,
    /// Indexed by α·4ⁿ + α', each multi-index base 4 with qubit 1 most significant.
    pub coeffs: Vec<C64>,
}

impl PauliTable {
    pub fn index(&self, alpha: &[usize], alpha_p: &[usize]) -> usize {
        let enc = |a: &[usize]| a.iter().fold(0, |acc, &x| acc * 4 + x);
        enc(alpha) * 4usize.pow(self.n_qubits as u32) + enc(alpha_p)
    }

    pub fn digits(&self, idx: usize) -> (Vec<usize>, Vec<usize>) {
        let n = self.n_qubits;
        let m = 4usize.pow(n as u32);
        let dec = |mut x: usize| {
            let mut v = vec![0; n];
            for q in (0..n).rev() {
                v[q] = x % 4;
                x /= 4;
            }
            v
        };
        (dec(idx / m), dec(idx % m))
    }

    /// Largest coefficient whose support pattern is not pure on `subset`.
    ///
    /// A pure pattern is identity in both factors outside the subset and
    /// non-identity in at least one factor on every qubit of the subset. The
    /// all-identity coefficient is allowed.
    pub fn purity_violation(&self, subset: &[usize]) -> f64 {
        let mut worst: f64 = 0.0;
        for (idx, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let (a, ap) = self.digits(idx);
            if a.iter().chain(&ap).all(|&x| x == 0) {
                continue;
            }
            let pure = (0..self.n_qubits).all(|q| {
                let inside = subset.contains(&(q + 1));
                let trivial = a[q] == 0 && ap[q] == 0;
                inside != trivial
            });
            if !pure {
                worst = worst.max(c.norm());
            }
        }
        worst
    }
}

fn pauli_strings(n: usize) -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..4usize.pow(n as u32))
        .map(|mut idx| {
            let mut digits = vec![0; n];
            for q in (0..n).rev() {
                digits[q] = idx % 4;
                idx /= 4;
            }
            let factors: Vec<CMatrix> = digits.iter().map(|&k| pauli(k).scale_re(s)).collect();
            kron_all(&factors)
        })
        .collect()
}

/// Nonzeros of a Pauli string: one per row.
fn string_entries(p: &CMatrix) -> Vec<(usize, usize, C64)> {
    let mut v = Vec::with_capacity(p.dim());
    for i in 0..p.dim() {
        for j in 0..p.dim() {
            if p[(i, j)] != ZERO {
                v.push((i, j, p[(i, j)]));
            }
        }
    }
    v
}

pub fn pauli_coefficients(g: &SuperOp) -> Result<PauliTable> {
    if g.d != 2 {
        return Err(Error::InvalidInput("Pauli expansion requires d = 2".into()));
    }
    let n = g.n_qubits;
    let h = g.hilbert_dim();
    let entries: Vec<Vec<(usize, usize, C64)>> = pauli_strings(n).iter().map(string_entries).collect();
    let mut coeffs = Vec::with_capacity(entries.len() * entries.len());
    for ea in &entries {
        for eb in &entries {
            // ⟨⟨B_α ⊗ B_α'^*, g⟩⟩ = Σ conj(B_α[i,k]) B_α'[j,l] g[(i,j),(k,l)]
            let mut c = ZERO;
            for &(i, k, a) in ea {
                let ac = a.conj();
                for &(j, l, b) in eb {
                    c += ac * b * g.mat[(i * h + j, k * h + l)];
                }
            }
            coeffs.push(c);
        }
    }
    Ok(PauliTable { n_qubits: n, convention: "B = sigma/sqrt(2), Tr(B_a B_b) = delta_ab".into(), coeffs })
}

pub fn reconstruct_from_pauli(t: &PauliTable, kind: SuperOpKind) -> Result<SuperOp> {
    let n = t.n_qubits;
    let h = 1usize << n;
    let entries: Vec<Vec<(usize, usize, C64)>> = pauli_strings(n).iter().map(string_entries).collect();
    let m = entries.len();
    let mut out = CMatrix::zeros(h * h);
    for (ia, ea) in entries.iter().enumerate() {
        for (ib, eb) in entries.iter().enumerate() {
            let c = t.coeffs[ia * m + ib];
            if c == ZERO {
                continue;
            }
            for &(i, k, a) in ea {
                for &(j, l, b) in eb {
                    out[(i * h + j, k * h + l)] += c * a * b.conj();
                }
            }
        }
    }
    SuperOp::new(n, 2, kind, out)
}

/// ln(exp(1 − e^ε)/(2 − e^ε)) + e^ε − 1 − ε, for 0 < ε < ln 2.
pub fn recurrence_error_bound(eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let x = eps.exp();
    Ok(((1.0 - x).exp() / (2.0 - x)).ln() + x - 1.0 - eps)
}

/// The looser closed form (ε + eε²/2)² / (2(1 − ε − eε²/2)) + eε²/2.
pub fn recurrence_error_bound_loose(eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let e = std::f64::consts::E;
    let delta = eps + e * eps * eps / 2.0;
    if delta >= 1.0 {
        return Err(Error::Domain(format!("loose bound undefined at ε = {eps}")));
    }
    Ok(delta * delta / (2.0 * (1.0 - delta)) + e * eps * eps / 2.0)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < std::f64::consts::LN_2) {
        return Err(Error::Domain(format!("ε = {eps} outside (0, ln 2)")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densecore::{embed_site, kron, mat_exp, pauli_z, sigma_minus};
    use crate::superop::{lindbladian_superop, Jump, LindbladModel};

    fn gen(h: CMatrix, jumps: Vec<Jump>) -> SuperOp {
        lindbladian_superop(&LindbladModel::new(h, jumps).unwrap()).unwrap()
    }

    fn channel(g: &SuperOp) -> SuperOp {
        SuperOp::new(g.n_qubits, 2, SuperOpKind::Channel, mat_exp(&g.mat).unwrap()).unwrap()
    }

    #[test]
    fn subset_order() {
        let s = subsets(3);
        assert_eq!(s, vec![vec![1], vec![2], vec![3], vec![1, 2], vec![1, 3], vec![2, 3], vec![1, 2, 3]]);
    }

    #[test]
    fn normal_form_cancels_ideal() {
        let u = kron(&crate::densecore::pauli_x(), &CMatrix::identity(2));
        let ideal = SuperOp::unitary_channel(&u, 2, 2).unwrap();
        let nf = normal_form(&ideal, &u).unwrap();
        assert!((&nf.mat - &CMatrix::identity(16)).max_abs() < 1e-14);
        assert!(normal_form(&ideal, &CMatrix::zeros(4)).is_err());
    }

    #[test]
    fn effective_lindbladian_round_trip() {
        let g = gen(embed_site(&pauli_z(), 0, 2).scale_re(0.05), vec![Jump { op: embed_site(&sigma_minus(), 1, 2), rate: 0.1 }]);
        let eff = effective_lindbladian(&channel(&g)).unwrap();
        assert!((&eff.generator.mat - &g.mat).max_abs() < 1e-12);
        assert!(eff.physical);
    }

    #[test]
    fn single_qubit_support() {
        let g = gen(CMatrix::zeros(8), vec![Jump { op: embed_site(&sigma_minus(), 0, 3), rate: 0.2 }]);
        let dec = cluster_decompose_with(&g, Reduction::Marginal).unwrap();
        for (s, c) in dec.ordered() {
            let norm = frobenius_norm(&c.mat);
            if s == &vec![1] {
                assert!((&c.mat - &g.mat).max_abs() < 1e-14);
            } else {
                assert!(norm < 1e-14, "{s:?}: {norm}");
            }
        }
        let ch = cluster_decompose_channel(&channel(&g)).unwrap();
        for (s, c) in ch.ordered() {
            let target = if s == &vec![1] { g.mat.clone() } else { CMatrix::zeros(64) };
            assert!((&c.mat - &target).max_abs() < 1e-12, "{s:?}");
        }
    }

    #[test]
    fn filter_components_are_pauli_pure() {
        let mut h = kron_all(&[pauli(1), pauli(2), pauli(3)]).scale_re(0.02);
        h += &embed_site(&pauli(1), 1, 3).scale_re(0.03);
        let jumps = vec![
            Jump { op: embed_site(&sigma_minus(), 0, 3), rate: 0.05 },
            Jump { op: kron_all(&[sigma_minus(), pauli_z(), CMatrix::identity(2)]), rate: 0.03 },
        ];
        let g = gen(h, jumps);
        let dec = cluster_decompose(&g).unwrap();
        assert!((&dec.total().mat - &g.mat).max_abs() < 1e-13);
        for (s, c) in dec.ordered() {
            let t = pauli_coefficients(c).unwrap();
            assert!(t.purity_violation(s) < 1e-12, "{s:?}: {}", t.purity_violation(s));
        }
    }

    #[test]
    fn pauli_round_trip_and_commutator_pattern() {
        let g = gen(embed_site(&pauli_z(), 0, 2), vec![]);
        let t = pauli_coefficients(&g).unwrap();
        for (idx, c) in t.coeffs.iter().enumerate() {
            if c.norm() > 1e-12 {
                let (a, ap) = t.digits(idx);
                let ok = (a == vec![3, 0] && ap == vec![0, 0]) || (a == vec![0, 0] && ap == vec![3, 0]);
                assert!(ok, "{a:?} {ap:?}");
            }
        }
        let back = reconstruct_from_pauli(&t, SuperOpKind::Generator).unwrap();
        assert!((&back.mat - &g.mat).max_abs() < 1e-12);
    }

    #[test]
    fn bound_values() {
        assert!(recurrence_error_bound(1e-6).unwrap() < 1e-11);
        for eps in [0.05, 0.1, 0.2, 0.4] {
            let b = recurrence_error_bound(eps).unwrap();
            let closed = -(2.0 - eps.exp()).ln() - eps;
            assert!((b - closed).abs() < 1e-14);
            assert!(recurrence_error_bound_loose(eps).unwrap() >= b);
        }
        assert!(recurrence_error_bound(0.7).is_err());
        assert!(recurrence_error_bound(0.0).is_err());
    }

    #[test]
    fn json_lists_all_subsets() {
        let g = gen(CMatrix::zeros(4), vec![Jump { op: embed_site(&sigma_minus(), 0, 2), rate: 0.1 }]);
        let dec = cluster_decompose(&g).unwrap();
        let s = serde_json::to_string(&dec).unwrap();
        let back: ClusterDecomposition = serde_json::from_str(&s).unwrap();
        assert_eq!(back, dec);
    }
}
