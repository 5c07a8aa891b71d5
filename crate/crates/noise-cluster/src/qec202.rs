//! Repeated ZZ/XX parity checks on two data qubits with one ancilla, branched
//! over every syndrome record, plus the infidelity, honesty and accuracy
//! metrics and the gain search built on them.
//!
//! The ancilla is qubit 3 (least significant); data qubits are 1 and 2.

use std::collections::BTreeMap;

use nalgebra::{Matrix4, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{approx_channel, to_standard_form, ApproxChannelSpec};
use crate::cluster::ClusterDecomposition;
use crate::densecore::{mat_sqrt_psd, CMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::superop::{QState, SuperOp};

pub const PRUNE_THRESHOLD: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bell {
    #[serde(rename = "Phi+")]
    PhiPlus,
    #[serde(rename = "Phi-")]
    PhiMinus,
    #[serde(rename = "Psi-")]
    PsiMinus,
    #[serde(rename = "Psi+")]
    PsiPlus,
}

impl Bell {
    pub const ALL: [Bell; 4] = [Bell::PhiPlus, Bell::PhiMinus, Bell::PsiMinus, Bell::PsiPlus];

    pub fn label(self) -> &'static str {
        match self {
            Bell::PhiPlus => "Phi+",
            Bell::PhiMinus => "Phi-",
            Bell::PsiMinus => "Psi-",
            Bell::PsiPlus => "Psi+",
        }
    }

    /// Amplitudes over |00⟩, |01⟩, |10⟩, |11⟩.
    pub fn amplitudes(self) -> [C64; 4] {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match self {
            Bell::PhiPlus => [s, ZERO, ZERO, s],
            Bell::PhiMinus => [s, ZERO, ZERO, -s],
            Bell::PsiPlus => [ZERO, s, s, ZERO],
            Bell::PsiMinus => [ZERO, s, -s, ZERO],
        }
    }

    pub fn density(self) -> CMatrix {
        let a = self.amplitudes();
        CMatrix::outer(&a, &a)
    }

    /// Noiseless (ZZ, XX) syndrome pair recorded each round.
    pub fn ideal_syndrome(self) -> (u8, u8) {
        match self {
            Bell::PhiPlus => (0, 0),
            Bell::PhiMinus => (0, 1),
            Bell::PsiMinus => (1, 0),
            Bell::PsiPlus => (1, 1),
        }
    }
}

impl std::str::FromStr for Bell {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Bell::ALL
            .into_iter()
            .find(|b| b.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown Bell label {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyndromeBranch {
    pub bits: Vec<u8>,
    pub prob: f64,
    pub data_rho: CMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchTable {
    pub input: Bell,
    pub rounds: usize,
    pub branches: BTreeMap<String, SyndromeBranch>,
    pub discarded_mass: f64,
}

impl BranchTable {
    pub fn total_probability(&self) -> f64 {
        self.branches.values().map(|b| b.prob).sum()
    }
}

type Vec16 = [C64; 16];

/// Branches after some rounds, keyed by syndrome bits (first bit most
/// significant) with unnormalized data states whose trace is the probability.
#[derive(Clone, Debug)]
pub struct RawTable {
    pub input: Bell,
    pub rounds: usize,
    pub keys: Vec<u64>,
    pub states: Vec<Vec16>,
    pub discarded_mass: f64,
}

fn trace16(v: &Vec16) -> f64 {
    v[0].re + v[5].re + v[10].re + v[15].re
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.states.iter().map(trace16).sum()
    }

    pub fn to_table(&self) -> BranchTable {
        let nbits = 2 * self.rounds;
        let branches = self
            .keys
            .iter()
            .zip(&self.states)
            .map(|(&k, s)| {
                let bits: Vec<u8> = (0..nbits).map(|i| ((k >> (nbits - 1 - i)) & 1) as u8).collect();
                let label: String = bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect();
                let prob = trace16(s);
                let rho = CMatrix::from_vec(4, s.iter().map(|z| z / prob).collect()).expect("finite branch state");
                (label, SyndromeBranch { bits, prob, data_rho: rho })
            })
            .collect();
        BranchTable { input: self.input, rounds: self.rounds, branches, discarded_mass: self.discarded_mass }
    }
}

/// Data-qubit maps of a 3-qubit channel for ancilla preparation a and outcome m.
#[derive(Clone, Debug)]
pub struct BranchMaps {
    maps: [[[C64; 256]; 2]; 2],
}

impl BranchMaps {
    pub fn new(channel: &SuperOp) -> Result<Self> {
        if channel.mat.dim() != 64 {
            return Err(Error::DimMismatch { expected: 64, got: channel.mat.dim() });
        }
        let mut maps = [[[ZERO; 256]; 2]; 2];
        for (a, per_a) in maps.iter_mut().enumerate() {
            for (m, map) in per_a.iter_mut().enumerate() {
                for i in 0..4 {
                    for j in 0..4 {
                        let row = (2 * i + m) * 8 + (2 * j + m);
                        for k in 0..4 {
                            for l in 0..4 {
                                let col = (2 * k + a) * 8 + (2 * l + a);
                                map[(i * 4 + j) * 16 + k * 4 + l] = channel.mat[(row, col)];
                            }
                        }
                    }
                }
            }
        }
        Ok(BranchMaps { maps })
    }

    fn apply(&self, a: usize, m: usize, v: &Vec16) -> Vec16 {
        let map = &self.maps[a][m];
        let mut out = [ZERO; 16];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &map[r * 16..(r + 1) * 16];
            *o = row.iter().zip(v).map(|(x, y)| x * y).sum();
        }
        out
    }
}

/// Runs `rounds` rounds and returns the branch set after every round.
pub fn run_rounds_raw(zz: &SuperOp, xx: &SuperOp, input: Bell, rounds: usize) -> Result<Vec<RawTable>> {
    if rounds == 0 {
        return Err(Error::InvalidInput("at least one round is required".into()));
    }
    if rounds > 31 {
        return Err(Error::InvalidInput("at most 31 rounds are supported".into()));
    }
    let zmaps = BranchMaps::new(zz)?;
    let xmaps = BranchMaps::new(xx)?;
    let mut init = [ZERO; 16];
    init.copy_from_slice(input.density().data());
    let mut keys = vec![0u64];
    let mut states = vec![init];
    let mut discarded = 0.0;
    let mut out = Vec::with_capacity(rounds);
    for r in 1..=rounds {
        let mut nk = Vec::with_capacity(keys.len() * 4);
        let mut ns = Vec::with_capacity(keys.len() * 4);
        for (&k, s) in keys.iter().zip(&states) {
            for m in 0..2 {
                let z = zmaps.apply(0, m, s);
                let pz = trace16(&z);
                if pz < PRUNE_THRESHOLD {
                    discarded += pz.max(0.0);
                    continue;
                }
                for mx in 0..2 {
                    let x = xmaps.apply(m, mx, &z);
                    let px = trace16(&x);
                    if px < PRUNE_THRESHOLD {
                        discarded += px.max(0.0);
                        continue;
                    }
                    nk.push((k << 2) | ((m as u64) << 1) | mx as u64);
                    ns.push(x);
                }
            }
        }
        keys = nk;
        states = ns;
        out.push(RawTable { input, rounds: r, keys: keys.clone(), states: states.clone(), discarded_mass: discarded });
    }
    Ok(out)
}

/// Branch table after `rounds` rounds.
pub fn run_rounds(zz: &SuperOp, xx: &SuperOp, input: Bell, rounds: usize) -> Result<BranchTable> {
    Ok(run_rounds_raw(zz, xx, input, rounds)?.pop().expect("rounds ≥ 1").to_table())
}

/// [Tr√(√a b √a)]².
pub fn quantum_fidelity(a: &QState, b: &QState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch { expected: a.dim(), got: b.dim() });
    }
    let sa = mat_sqrt_psd(&a.rho)?;
    let m = sa.matmul(&b.rho).matmul(&sa);
    let root = mat_sqrt_psd(&m.hermitian_part())?;
    Ok(root.trace().re.powi(2))
}

/// [Σ √(p q)]².
pub fn classical_fidelity(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimMismatch { expected: p.len(), got: q.len() });
    }
    for (name, d) in [("p", p), ("q", q)] {
        if let Some(x) = d.iter().find(|x| **x < 0.0) {
            return Err(Error::InvalidInput(format!("negative probability {x} in {name}")));
        }
        let s: f64 = d.iter().sum();
        if (s - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!("{name} sums to {s}")));
        }
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum::<f64>().powi(2))
}

/// 1 − (Σ_x √(p_a p_b)·Tr√(√ρ_a ρ_b √ρ_a))² over the union of syndrome records.
pub fn infidelity_distance(a: &BranchTable, b: &BranchTable) -> Result<f64> {
    if a.rounds != b.rounds || a.input != b.input {
        return Err(Error::InvalidInput("branch tables differ in rounds or input".into()));
    }
    let mut s = 0.0;
    for (key, ba) in &a.branches {
        if let Some(bb) = b.branches.get(key) {
            let sa = mat_sqrt_psd(&ba.data_rho)?;
            let m = sa.matmul(&bb.data_rho).matmul(&sa).hermitian_part();
            s += (ba.prob * bb.prob).sqrt() * mat_sqrt_psd(&m)?.trace().re;
        }
    }
    Ok((1.0 - s * s).clamp(0.0, 1.0))
}

fn to_m4(v: &Vec16) -> Matrix4<C64> {
    Matrix4::from_row_slice(v)
}

/// √ of a small Hermitian PSD matrix, negatives clamped to zero.
fn sqrt4(v: &Vec16) -> Matrix4<C64> {
    let m = to_m4(v);
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let e = SymmetricEigen::new(h);
    let mut d = Matrix4::<C64>::zeros();
    for i in 0..4 {
        d[(i, i)] = C64::new(e.eigenvalues[i].max(0.0).sqrt(), 0.0);
    }
    e.eigenvectors * d * e.eigenvectors.adjoint()
}

fn trace_sqrt4(m: &Matrix4<C64>) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().map(|&l| l.max(0.0).sqrt()).sum()
}

/// Square roots of every branch state of a table, reused across comparisons.
pub struct RootCache {
    keys: Vec<u64>,
    roots: Vec<Matrix4<C64>>,
}

impl RootCache {
    pub fn new(t: &RawTable) -> Self {
        RootCache { keys: t.keys.clone(), roots: t.states.iter().map(sqrt4).collect() }
    }
}

/// Infidelity distance on raw tables, with √ of the first table cached.
pub fn raw_infidelity(a: &RootCache, b: &RawTable) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut s = 0.0;
    while i < a.keys.len() && j < b.keys.len() {
        match a.keys[i].cmp(&b.keys[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let r = &a.roots[i];
                s += trace_sqrt4(&(r * to_m4(&b.states[j]) * r));
                i += 1;
                j += 1;
            }
        }
    }
    (1.0 - s * s).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HonestyAccuracy {
    pub honesty: f64,
    pub accuracy: f64,
    /// Set when a ratio had a zero denominator and is reported as +∞.
    pub honesty_infinite: bool,
    pub accuracy_infinite: bool,
}

fn ratio(num: f64, den: f64) -> (f64, bool) {
    if den == 0.0 {
        (if num == 0.0 { f64::NAN } else { f64::INFINITY }, true)
    } else {
        (num / den, false)
    }
}

impl HonestyAccuracy {
    pub fn from_distances(d_ideal_actual: f64, d_ideal_approx: f64, d_actual_approx: f64) -> Self {
        let (honesty, hi) = ratio(d_ideal_approx, d_ideal_actual);
        let (accuracy, ai) = ratio(d_ideal_actual, d_actual_approx);
        HonestyAccuracy { honesty, accuracy, honesty_infinite: hi, accuracy_infinite: ai }
    }
}

/// honesty = D(ideal, approx)/D(ideal, actual); accuracy = D(ideal, actual)/D(actual, approx).
pub fn honesty_accuracy(ideal: &BranchTable, actual: &BranchTable, approx: &BranchTable) -> Result<HonestyAccuracy> {
    let dia = infidelity_distance(ideal, actual)?;
    let dip = infidelity_distance(ideal, approx)?;
    let dap = infidelity_distance(actual, approx)?;
    Ok(HonestyAccuracy::from_distances(dia, dip, dap))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub input: Bell,
    pub d_ideal_actual: f64,
    pub d_ideal_approx: f64,
    pub d_actual_approx: f64,
    pub honesty: f64,
    pub accuracy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedMetrics {
    pub round: usize,
    pub d_ideal_actual: f64,
    pub d_ideal_approx: f64,
    pub d_actual_approx: f64,
    /// Mean over inputs of the per-input ratio.
    pub honesty: f64,
    pub accuracy: f64,
    /// Ratio of the input-averaged distances.
    pub honesty_of_means: f64,
    pub accuracy_of_means: f64,
    pub min_honesty: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub gain: f64,
    pub order: usize,
    pub per_state: Vec<RoundMetrics>,
    pub averages: Vec<AveragedMetrics>,
}

impl MetricsReport {
    pub fn average_at(&self, round: usize) -> Option<&AveragedMetrics> {
        self.averages.iter().find(|a| a.round == round)
    }

    fn from_rows(gain: f64, order: usize, per_state: Vec<RoundMetrics>) -> Self {
        let mut rounds: Vec<usize> = per_state.iter().map(|r| r.round).collect();
        rounds.sort_unstable();
        rounds.dedup();
        let averages = rounds
            .into_iter()
            .map(|round| {
                let rows: Vec<&RoundMetrics> = per_state.iter().filter(|r| r.round == round).collect();
                let n = rows.len() as f64;
                let mean = |f: &dyn Fn(&RoundMetrics) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
                let dia = mean(&|r| r.d_ideal_actual);
                let dip = mean(&|r| r.d_ideal_approx);
                let dap = mean(&|r| r.d_actual_approx);
                AveragedMetrics {
                    round,
                    d_ideal_actual: dia,
                    d_ideal_approx: dip,
                    d_actual_approx: dap,
                    honesty: mean(&|r| r.honesty),
                    accuracy: mean(&|r| r.accuracy),
                    honesty_of_means: ratio(dip, dia).0,
                    accuracy_of_means: ratio(dia, dap).0,
                    min_honesty: rows.iter().map(|r| r.honesty).fold(f64::INFINITY, f64::min),
                }
            })
            .collect();
        MetricsReport { gain, order, per_state, averages }
    }
}

/// Everything needed to evaluate approximate channels of both stabilizers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizerSet {
    pub zz_decomposition: ClusterDecomposition,
    pub xx_decomposition: ClusterDecomposition,
    pub zz_ideal: CMatrix,
    pub xx_ideal: CMatrix,
    pub zz_actual: SuperOp,
    pub xx_actual: SuperOp,
}

/// Ideal and actual branch sets, built once and shared across gains.
pub struct Reference {
    pub rounds: usize,
    pub ideal: BTreeMap<Bell, Vec<RawTable>>,
    pub actual: BTreeMap<Bell, Vec<RawTable>>,
    ideal_roots: BTreeMap<(Bell, usize), RootCache>,
    actual_roots: BTreeMap<(Bell, usize), RootCache>,
    d_ideal_actual: BTreeMap<(Bell, usize), f64>,
}

impl Reference {
    pub fn new(set: &StabilizerSet, rounds: usize) -> Result<Self> {
        let zz_i = SuperOp::unitary_channel(&set.zz_ideal, 3, 2)?;
        let xx_i = SuperOp::unitary_channel(&set.xx_ideal, 3, 2)?;
        let mut ideal = BTreeMap::new();
        let mut actual = BTreeMap::new();
        let mut ideal_roots = BTreeMap::new();
        let mut actual_roots = BTreeMap::new();
        let mut d_ideal_actual = BTreeMap::new();
        for b in Bell::ALL {
            let it = run_rounds_raw(&zz_i, &xx_i, b, rounds)?;
            let at = run_rounds_raw(&set.zz_actual, &set.xx_actual, b, rounds)?;
            for r in 0..rounds {
                let ir = RootCache::new(&it[r]);
                d_ideal_actual.insert((b, r + 1), raw_infidelity(&ir, &at[r]));
                ideal_roots.insert((b, r + 1), ir);
                actual_roots.insert((b, r + 1), RootCache::new(&at[r]));
            }
            ideal.insert(b, it);
            actual.insert(b, at);
        }
        Ok(Reference { rounds, ideal, actual, ideal_roots, actual_roots, d_ideal_actual })
    }

    pub fn d_ideal_actual(&self, input: Bell, round: usize) -> f64 {
        self.d_ideal_actual[&(input, round)]
    }
}

/// Standard-form approximate channels (ZZ, XX) at order k and gain g.
pub fn approx_pair(set: &StabilizerSet, order: usize, gain: f64) -> Result<(SuperOp, SuperOp)> {
    let zz = approx_channel(&ApproxChannelSpec::new(set.zz_decomposition.clone(), order, gain))?;
    let xx = approx_channel(&ApproxChannelSpec::new(set.xx_decomposition.clone(), order, gain))?;
    Ok((to_standard_form(&zz.channel, &set.zz_ideal)?, to_standard_form(&xx.channel, &set.xx_ideal)?))
}

/// Metrics of the approximate channels at one gain, for the requested rounds.
pub fn evaluate_gain(set: &StabilizerSet, reference: &Reference, order: usize, gain: f64, rounds: &[usize]) -> Result<MetricsReport> {
    let (zz, xx) = approx_pair(set, order, gain)?;
    let mut rows = Vec::new();
    for b in Bell::ALL {
        let tables = run_rounds_raw(&zz, &xx, b, reference.rounds)?;
        for &r in rounds {
            if r == 0 || r > reference.rounds {
                return Err(Error::InvalidInput(format!("round {r} outside 1..={}", reference.rounds)));
            }
            let approx = &tables[r - 1];
            let dia = reference.d_ideal_actual(b, r);
            let dip = raw_infidelity(&reference.ideal_roots[&(b, r)], approx);
            let dap = raw_infidelity(&reference.actual_roots[&(b, r)], approx);
            let ha = HonestyAccuracy::from_distances(dia, dip, dap);
            rows.push(RoundMetrics {
                round: r,
                input: b,
                d_ideal_actual: dia,
                d_ideal_approx: dip,
                d_actual_approx: dap,
                honesty: ha.honesty,
                accuracy: ha.accuracy,
            });
        }
    }
    Ok(MetricsReport::from_rows(gain, order, rows))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GainScan {
    pub order: usize,
    pub rounds: usize,
    pub g_opt: f64,
    /// Metrics at g_opt for every round.
    pub report: MetricsReport,
    /// Metrics at the objective round for every evaluated gain, sorted by gain.
    pub scan: Vec<MetricsReport>,
}

/// Default coarse grid [0.8, 1.4] in steps of 0.01.
pub fn default_grid() -> Vec<f64> {
    (0..=60).map(|i| 0.8 + 0.01 * i as f64).map(|g| (g * 1e6).round() / 1e6).collect()
}

fn feasible(r: &MetricsReport, round: usize) -> bool {
    r.per_state.iter().filter(|m| m.round == round).all(|m| m.honesty >= 1.0)
}

fn objective(r: &MetricsReport, round: usize) -> f64 {
    r.average_at(round).map_or(f64::NEG_INFINITY, |a| a.accuracy)
}

fn pick(scan: &[MetricsReport], round: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in scan.iter().enumerate() {
        if !feasible(r, round) {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let (o, ob) = (objective(r, round), objective(&scan[b], round));
                o > ob || (o == ob && r.gain < scan[b].gain)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

fn evaluate_many(set: &StabilizerSet, reference: &Reference, order: usize, gains: &[f64], round: usize) -> Result<Vec<MetricsReport>> {
    gains.par_iter().map(|&g| evaluate_gain(set, reference, order, g, &[round])).collect()
}

/// Gain maximizing the state-averaged accuracy at `rounds` subject to honesty ≥ 1 for every input.
///
/// `refine` adds successively finer grids (each ±1 step of the previous
/// spacing) around the incumbent.
pub fn optimize_gain(set: &StabilizerSet, order: usize, rounds: usize, grid: &[f64], refine: &[f64]) -> Result<GainScan> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("gain grid is empty".into()));
    }
    let reference = Reference::new(set, rounds)?;
    optimize_gain_with(set, &reference, order, grid, refine)
}

pub fn optimize_gain_with(set: &StabilizerSet, reference: &Reference, order: usize, grid: &[f64], refine: &[f64]) -> Result<GainScan> {
    let rounds = reference.rounds;
    let mut scan = evaluate_many(set, reference, order, grid, rounds)?;
    let mut spacing = grid_spacing(grid);
    for &step in refine {
        let Some(best) = pick(&scan, rounds) else { break };
        let center = scan[best].gain;
        let n = (spacing / step).round() as i64;
        let fresh: Vec<f64> = (-n..=n)
            .map(|i| ((center + i as f64 * step) * 1e9).round() / 1e9)
            .filter(|g| *g > 0.0 && !scan.iter().any(|r| (r.gain - g).abs() < step * 1e-3))
            .collect();
        scan.extend(evaluate_many(set, reference, order, &fresh, rounds)?);
        spacing = step;
    }
    scan.sort_by(|a, b| a.gain.total_cmp(&b.gain));
    let Some(best) = pick(&scan, rounds) else {
        let max_honesty = scan
            .iter()
            .filter_map(|r| r.average_at(rounds).map(|a| a.min_honesty))
            .fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::Infeasible { max_honesty });
    };
    let g_opt = scan[best].gain;
    let all_rounds: Vec<usize> = (1..=rounds).collect();
    let report = evaluate_gain(set, reference, order, g_opt, &all_rounds)?;
    Ok(GainScan { order, rounds, g_opt, report, scan })
}

fn grid_spacing(grid: &[f64]) -> f64 {
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min).min(0.01)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densecore::{kron, ONE};

    fn ideal_parity() -> (CMatrix, CMatrix) {
        // ZZ: ancilla ^= q1 ^ q2 ; XX: ancilla ^= x-parity of data
        let zz = CMatrix::from_fn(8, |r, c| {
            let (d, a) = (c >> 1, c & 1);
            let p = ((d >> 1) ^ d) & 1;
            if r == (d << 1 | (a ^ p)) {
                ONE
            } else {
                ZERO
            }
        });
        let h = CMatrix::from_real(&[&[1.0, 1.0], &[1.0, -1.0]]).scale_re(std::f64::consts::FRAC_1_SQRT_2);
        let hh = kron(&kron(&h, &h), &CMatrix::identity(2));
        let xx = hh.matmul(&zz).matmul(&hh);
        (zz, xx)
    }

    #[test]
    fn ideal_syndromes_match_table() {
        let (zz, xx) = ideal_parity();
        let zz = SuperOp::unitary_channel(&zz, 3, 2).unwrap();
        let xx = SuperOp::unitary_channel(&xx, 3, 2).unwrap();
        for b in Bell::ALL {
            let t = run_rounds(&zz, &xx, b, 4).unwrap();
            assert_eq!(t.branches.len(), 1, "{b:?}");
            let (key, br) = t.branches.iter().next().unwrap();
            let (z, x) = b.ideal_syndrome();
            let expect: String = (0..4).map(|_| format!("{z}{x}")).collect();
            assert_eq!(key, &expect, "{b:?}");
            assert!((br.prob - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelities() {
        let a = QState::pure(1, 2, &[ONE, ZERO]).unwrap();
        let b = QState::pure(1, 2, &[ZERO, ONE]).unwrap();
        assert!((quantum_fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(quantum_fidelity(&a, &b).unwrap() < 1e-12);
        let plus = QState::pure(1, 2, &[ONE, ONE]).unwrap();
        assert!((quantum_fidelity(&a, &plus).unwrap() - 0.5).abs() < 1e-12);
        assert!((classical_fidelity(&[0.5, 0.5], &[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(classical_fidelity(&[1.5, -0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn honesty_accuracy_limits() {
        let h = HonestyAccuracy::from_distances(0.1, 0.1, 0.0);
        assert_eq!(h.honesty, 1.0);
        assert!(h.accuracy.is_infinite() && h.accuracy_infinite);
        let h = HonestyAccuracy::from_distances(0.1, 0.0, 0.1);
        assert_eq!(h.honesty, 0.0);
    }

    #[test]
    fn raw_and_table_infidelity_agree() {
        let (zz, xx) = ideal_parity();
        let zz_i = SuperOp::unitary_channel(&zz, 3, 2).unwrap();
        let xx_i = SuperOp::unitary_channel(&xx, 3, 2).unwrap();
        let mut noisy = zz_i.clone();
        let p = 0.05;
        // mix with a channel that flips the ancilla afterwards
        let flip = SuperOp::unitary_channel(&crate::densecore::embed_site(&crate::densecore::pauli_x(), 2, 3), 3, 2).unwrap();
        noisy.mat = &zz_i.mat.scale_re(1.0 - p) + &flip.mat.matmul(&zz_i.mat).scale_re(p);
        let a = run_rounds_raw(&zz_i, &xx_i, Bell::PhiPlus, 2).unwrap();
        let b = run_rounds_raw(&noisy, &xx_i, Bell::PhiPlus, 2).unwrap();
        let fast = raw_infidelity(&RootCache::new(&a[1]), &b[1]);
        let slow = infidelity_distance(&a[1].to_table(), &b[1].to_table()).unwrap();
        assert!((fast - slow).abs() < 1e-12);
        assert!((b[1].total_probability() - 1.0).abs() < 1e-12);
        // only "0000" overlaps: probability (1-p)^2
        assert!((slow - (1.0 - (1.0 - p).powi(2))).abs() < 1e-12);
    }
}
