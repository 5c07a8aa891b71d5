//! Truncated k-body generators, Trotterized approximate channels with a gain
//! factor, and reconstruction of a full channel from subsystem channels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_decompose_channel, recurrence_error_bound, subsets, ClusterDecomposition};
use crate::densecore::{frobenius_norm, mat_exp, mat_log_principal, CMatrix};
use crate::error::{Error, Result};
use crate::superop::{embed, is_cptp, superop_partial_trace, CptpReport, SuperOp, SuperOpKind};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxChannelSpec {
    pub decomposition: ClusterDecomposition,
    pub order: usize,
    pub gain: f64,
    /// Optional gain per component size (index 0 ↦ 1-body); overrides `gain`.
    #[serde(default)]
    pub size_gains: Option<Vec<f64>>,
}

impl ApproxChannelSpec {
    pub fn new(decomposition: ClusterDecomposition, order: usize, gain: f64) -> Self {
        ApproxChannelSpec { decomposition, order, gain, size_gains: None }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.decomposition.n_qubits;
        if self.order == 0 || self.order > n {
            return Err(Error::InvalidInput(format!("order {} outside 1..={n}", self.order)));
        }
        if !self.gain.is_finite() || self.gain < 0.0 {
            return Err(Error::InvalidInput(format!("gain {} must be finite and ≥ 0", self.gain)));
        }
        if let Some(g) = &self.size_gains {
            if g.len() < self.order || g.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidInput("size_gains must cover every order with finite values".into()));
            }
        }
        Ok(())
    }

    fn gain_for(&self, size: usize) -> f64 {
        self.size_gains.as_ref().map_or(self.gain, |g| g[size - 1])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxChannel {
    pub channel: SuperOp,
    pub cptp_report: CptpReport,
}

/// L̃_k = Σ_{|S| ≤ k} L̃^S.
pub fn truncate_k(dec: &ClusterDecomposition, k: usize) -> Result<SuperOp> {
    if k == 0 || k > dec.n_qubits {
        return Err(Error::InvalidInput(format!("order {k} outside 1..={}", dec.n_qubits)));
    }
    let mut acc = SuperOp::zero_generator(dec.n_qubits, dec.d);
    for (s, c) in dec.ordered() {
        if s.len() <= k {
            acc.mat += &c.mat;
        }
    }
    Ok(acc)
}

/// exp(g·L̃^S) computed on the subset and embedded.
pub fn component_factor(component: &SuperOp, subset: &[usize], gain: f64) -> Result<CMatrix> {
    let local = superop_partial_trace(component, subset)?;
    let e = SuperOp { mat: mat_exp(&local.mat.scale_re(gain))?, kind: SuperOpKind::Channel, ..local };
    Ok(embed(&e, subset, component.n_qubits)?.mat)
}

/// Π_{S₁} e^{gL̃^{S₁}} ··· Π_{S_k} e^{gL̃^{S_k}}, factors written in size-ascending, lexicographic order.
pub fn approx_channel(spec: &ApproxChannelSpec) -> Result<ApproxChannel> {
    spec.validate()?;
    let dec = &spec.decomposition;
    let dim = dec.d.pow(2 * dec.n_qubits as u32);
    let mut acc = CMatrix::identity(dim);
    for (s, c) in dec.ordered() {
        if s.len() > spec.order {
            continue;
        }
        acc = acc.matmul(&component_factor(c, s, spec.gain_for(s.len()))?);
    }
    let channel = SuperOp::new(dec.n_qubits, dec.d, SuperOpKind::Channel, acc)?;
    let cptp_report = is_cptp(&channel, 1e-8);
    Ok(ApproxChannel { channel, cptp_report })
}

/// V̂_approx = N̂_approx · Û.
pub fn to_standard_form(n_approx: &SuperOp, ideal_u: &CMatrix) -> Result<SuperOp> {
    let res = ideal_u.unitary_residual();
    if res > 1e-10 {
        return Err(Error::NotUnitary { residual: res });
    }
    let u = SuperOp::unitary_channel(ideal_u, n_approx.n_qubits, n_approx.d)?;
    n_approx.compose(&u)
}

/// Full-system approximate channel assembled from subsystem noise channels.
///
/// Each subsystem channel (given on its own qubits, in the order of its
/// subset) is expanded with the channel-based recurrence. A component that
/// appears in several subsystems is taken from the first-listed one after
/// checking that the copies agree within ten times the recurrence bound.
pub fn stitch_from_subsystems(subchannels: &BTreeMap<Vec<usize>, SuperOp>, n: usize, gain: f64) -> Result<SuperOp> {
    let mut covered = vec![false; n];
    let mut merged: BTreeMap<Vec<usize>, (SuperOp, f64)> = BTreeMap::new();
    for (subset, ch) in subchannels {
        if subset.len() != ch.n_qubits {
            return Err(Error::DimMismatch { expected: subset.len(), got: ch.n_qubits });
        }
        for &q in subset {
            if q == 0 || q > n {
                return Err(Error::InvalidInput(format!("qubit {q} outside 1..={n}")));
            }
            covered[q - 1] = true;
        }
        let eps = frobenius_norm(&mat_log_principal(&ch.mat)?);
        let tol = 10.0 * recurrence_error_bound(eps.clamp(1e-12, 0.69))?;
        let dec = cluster_decompose_channel(ch)?;
        for (local, comp) in dec.ordered() {
            let global: Vec<usize> = local.iter().map(|&q| subset[q - 1]).collect();
            let mut order: Vec<usize> = (0..global.len()).collect();
            order.sort_by_key(|&i| global[i]);
            let reduced = superop_partial_trace(comp, local)?;
            let reduced = permute_sites(&reduced, &order)?;
            let mut sorted = global.clone();
            sorted.sort_unstable();
            match merged.get(&sorted) {
                Some((kept, kept_tol)) => {
                    let diff = frobenius_norm(&(&kept.mat - &reduced.mat));
                    let allowed = kept_tol.max(tol).max(1e-12);
                    if diff > allowed {
                        return Err(Error::Inconsistent(format!(
                            "component {sorted:?} differs by {diff:.3e} between subsystems (allowed {allowed:.3e})"
                        )));
                    }
                }
                None => {
                    merged.insert(sorted, (reduced, tol));
                }
            }
        }
    }
    if let Some(q) = covered.iter().position(|c| !c) {
        return Err(Error::InvalidInput(format!("qubit {} is not covered by any subsystem", q + 1)));
    }
    let d = subchannels.values().next().map_or(2, |c| c.d);
    let dim = d.pow(2 * n as u32);
    let mut acc = CMatrix::identity(dim);
    for s in subsets(n) {
        if let Some((local, _)) = merged.get(&s) {
            let e = SuperOp { mat: mat_exp(&local.mat.scale_re(gain))?, kind: SuperOpKind::Channel, ..local.clone() };
            acc = acc.matmul(&embed(&e, &s, n)?.mat);
        }
    }
    SuperOp::new(n, d, SuperOpKind::Channel, acc)
}

/// Reorders the sites of a superoperator: new site i is old site `order[i]`.
fn permute_sites(g: &SuperOp, order: &[usize]) -> Result<SuperOp> {
    let m = g.n_qubits;
    if order.len() != m {
        return Err(Error::DimMismatch { expected: m, got: order.len() });
    }
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return Ok(g.clone());
    }
    let d = g.d;
    let h = g.hilbert_dim();
    let map = |idx: usize| -> usize {
        let digit = |x: usize, site: usize| (x / d.pow((m - 1 - site) as u32)) % d;
        (0..m).fold(0, |acc, i| acc * d + digit(idx, order[i]))
    };
    let perm: Vec<usize> = (0..h).map(map).collect();
    let mut out = CMatrix::zeros(h * h);
    for i in 0..h {
        for j in 0..h {
            for k in 0..h {
                for l in 0..h {
                    out[(perm[i] * h + perm[j], perm[k] * h + perm[l])] = g.mat[(i * h + j, k * h + l)];
                }
            }
        }
    }
    SuperOp::new(m, d, g.kind, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{cluster_decompose, cluster_decompose_with, Reduction};
    use crate::densecore::{embed_site, kron_all, pauli, sigma_minus};
    use crate::superop::{lindbladian_superop, Jump, LindbladModel};

    fn model_generator() -> SuperOp {
        let mut h = kron_all(&[pauli(1), pauli(1), CMatrix::identity(2)]).scale_re(0.02);
        h += &kron_all(&[pauli(3), CMatrix::identity(2), pauli(3)]).scale_re(0.015);
        h += &embed_site(&pauli(2), 2, 3).scale_re(0.01);
        let jumps = (0..3).map(|q| Jump { op: embed_site(&sigma_minus(), q, 3), rate: 0.01 * (q + 1) as f64 }).collect();
        lindbladian_superop(&LindbladModel::new(h, jumps).unwrap()).unwrap()
    }

    fn exp_channel(g: &SuperOp) -> SuperOp {
        SuperOp::new(g.n_qubits, 2, SuperOpKind::Channel, mat_exp(&g.mat).unwrap()).unwrap()
    }

    #[test]
    fn full_truncation_is_exact() {
        let g = model_generator();
        let dec = cluster_decompose(&g).unwrap();
        assert!((&truncate_k(&dec, 3).unwrap().mat - &g.mat).max_abs() < 1e-14);
        assert!(truncate_k(&dec, 0).is_err());
        assert!(truncate_k(&dec, 4).is_err());
    }

    #[test]
    fn zero_gain_is_identity_and_full_order_trotter_is_close() {
        let g = model_generator();
        let dec = cluster_decompose_with(&g, Reduction::Marginal).unwrap();
        let id = approx_channel(&ApproxChannelSpec::new(dec.clone(), 3, 0.0)).unwrap();
        assert!((&id.channel.mat - &CMatrix::identity(64)).max_abs() < 1e-15);
        let a = approx_channel(&ApproxChannelSpec::new(dec, 3, 1.0)).unwrap();
        let exact = mat_exp(&g.mat).unwrap();
        let diff = frobenius_norm(&(&a.channel.mat - &exact));
        let scale = frobenius_norm(&g.mat).powi(2);
        assert!(diff < scale, "{diff} vs {scale}");
        assert!(a.cptp_report.tp_residual < 1e-12);
    }

    #[test]
    fn standard_form_inverts_normal_form() {
        let g = model_generator();
        let v = exp_channel(&g);
        let u = kron_all(&[pauli(1), pauli(3), pauli(2)]);
        let nf = crate::cluster::normal_form(&v, &u).unwrap();
        let back = to_standard_form(&nf, &u).unwrap();
        assert!((&back.mat - &v.mat).max_abs() < 1e-12);
    }

    #[test]
    fn stitching_local_product_is_exact() {
        let singles: Vec<SuperOp> = (0..3)
            .map(|q| {
                let jumps = vec![Jump { op: sigma_minus(), rate: 0.02 + 0.01 * q as f64 }];
                let h = pauli(3).scale_re(0.01 * q as f64);
                exp_channel(&lindbladian_superop(&LindbladModel::new(h, jumps).unwrap()).unwrap())
            })
            .collect();
        let mut subs = BTreeMap::new();
        for (q, c) in singles.iter().enumerate() {
            subs.insert(vec![q + 1], c.clone());
        }
        let stitched = stitch_from_subsystems(&subs, 3, 1.0).unwrap();
        let mut expect = CMatrix::identity(64);
        for (q, c) in singles.iter().enumerate() {
            expect = expect.matmul(&embed(c, &[q + 1], 3).unwrap().mat);
        }
        assert!((&stitched.mat - &expect).max_abs() < 1e-12);
    }

    #[test]
    fn stitching_beats_naive_product() {
        let g = model_generator();
        let full = exp_channel(&g);
        let mut subs = BTreeMap::new();
        for pair in [vec![1, 2], vec![1, 3], vec![2, 3]] {
            let marginal = crate::superop::superop_marginal(&full, &pair).unwrap();
            subs.insert(pair, marginal);
        }
        let stitched = stitch_from_subsystems(&subs, 3, 1.0).unwrap();
        let mut naive = CMatrix::identity(64);
        for (pair, c) in &subs {
            naive = naive.matmul(&embed(c, pair, 3).unwrap().mat);
        }
        let target = &full.mat;
        let e_stitch = frobenius_norm(&(&stitched.mat - target));
        let e_naive = frobenius_norm(&(&naive - target));
        assert!(e_stitch < e_naive, "{e_stitch} vs {e_naive}");
        let dec = crate::cluster::cluster_decompose_channel(&full).unwrap();
        let k2 = approx_channel(&ApproxChannelSpec::new(dec, 2, 1.0)).unwrap();
        assert!(frobenius_norm(&(&stitched.mat - &k2.channel.mat)) < 1e-10);
    }

    #[test]
    fn permute_sites_swaps_qubits() {
        let a = lindbladian_superop(&LindbladModel::new(kron_all(&[pauli(1), pauli(3)]), vec![]).unwrap()).unwrap();
        let b = lindbladian_superop(&LindbladModel::new(kron_all(&[pauli(3), pauli(1)]), vec![]).unwrap()).unwrap();
        assert!((&permute_sites(&a, &[1, 0]).unwrap().mat - &b.mat).max_abs() < 1e-15);
    }
}
