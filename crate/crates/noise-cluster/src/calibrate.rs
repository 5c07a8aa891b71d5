//! Gate recipes built from Gaussian and Gaussian-square drive pulses, the
//! echoed cross-resonance CNOT, the parity-check schedules, and the
//! frequency/amplitude scans that fit each pulse.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densecore::{kron, pauli_x, pauli_y, pauli_z, CMatrix, C64, ZERO};
use crate::device::{DeviceConfig, DrivePulse, GateTiming, PulseEnvelope, PulseSchedule, TWO_PI};
use crate::error::{Error, Result};
use crate::propagate::{unitary_propagator, PropagateOptions};
use crate::superop::SuperOp;

/// F = (d + Tr[Û†V̂])/(d(d+1)) with Û = U⊗U*.
pub fn average_gate_fidelity(actual: &SuperOp, ideal_u: &CMatrix) -> Result<f64> {
    let res = ideal_u.unitary_residual();
    if res > 1e-10 {
        return Err(Error::NotUnitary { residual: res });
    }
    let d = ideal_u.dim();
    if actual.mat.dim() != d * d {
        return Err(Error::DimMismatch { expected: d * d, got: actual.mat.dim() });
    }
    let uhat = kron(ideal_u, &ideal_u.conj());
    let overlap: C64 = uhat.data().iter().zip(actual.mat.data()).map(|(u, v)| u.conj() * v).sum();
    let d = d as f64;
    Ok((d + overlap.re) / (d * (d + 1.0)))
}

/// Average gate fidelity of a unitary V against the target U.
pub fn unitary_fidelity(actual: &CMatrix, ideal_u: &CMatrix) -> f64 {
    let d = ideal_u.dim() as f64;
    let tr: C64 = ideal_u.data().iter().zip(actual.data()).map(|(u, v)| u.conj() * v).sum();
    (d + tr.norm_sqr()) / (d * (d + 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// exp(−iθA/2) for A ∈ {X, Y}.
pub fn rotation(axis: Axis, theta: f64) -> CMatrix {
    let a = match axis {
        Axis::X => pauli_x(),
        Axis::Y => pauli_y(),
    };
    &CMatrix::identity(2).scale_re((theta / 2.0).cos()) + &a.scale(C64::new(0.0, -(theta / 2.0).sin()))
}

pub fn rz(theta: f64) -> CMatrix {
    CMatrix::diag(&[C64::from_polar(1.0, -theta / 2.0), C64::from_polar(1.0, theta / 2.0)])
}

pub fn hadamard() -> CMatrix {
    CMatrix::from_real(&[&[1.0, 1.0], &[1.0, -1.0]]).scale_re(FRAC_1_SQRT_2)
}

/// exp(−iθ Z⊗X/2).
pub fn rzx(theta: f64) -> CMatrix {
    let zx = kron(&pauli_z(), &pauli_x());
    &CMatrix::identity(4).scale_re((theta / 2.0).cos()) + &zx.scale(C64::new(0.0, -(theta / 2.0).sin()))
}

pub fn cnot() -> CMatrix {
    CMatrix::from_real(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 0.0]])
}

/// Places a k-qubit operator on the listed 1-based qubits (first listed is
/// most significant) of an n-qubit register.
pub fn embed_op(u: &CMatrix, qubits: &[usize], n: usize) -> Result<CMatrix> {
    let k = qubits.len();
    if u.dim() != 1 << k {
        return Err(Error::DimMismatch { expected: 1 << k, got: u.dim() });
    }
    if qubits.iter().any(|&q| q == 0 || q > n) {
        return Err(Error::InvalidInput(format!("qubits {qubits:?} outside 1..={n}")));
    }
    let shifts: Vec<usize> = qubits.iter().map(|&q| n - q).collect();
    let mask: usize = shifts.iter().map(|s| 1 << s).sum();
    let sub = |idx: usize| shifts.iter().fold(0, |acc, s| (acc << 1) | ((idx >> s) & 1));
    Ok(CMatrix::from_fn(1 << n, |r, c| if r & !mask == c & !mask { u[(sub(r), sub(c))] } else { ZERO }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateKind {
    Rotation { qubit: usize, axis: Axis, angle: f64 },
    /// R_Z(−π/2) as X(−π/2), Y(−π/2), X(π/2).
    RzMinusHalfPi { qubit: usize },
    /// H as Y(π/2) then X(π).
    Hadamard { qubit: usize },
    /// R_ZX(π/2) as CR(+π/4), X_c, CR(−π/4), X_c.
    EchoedCr { control: usize, target: usize },
    Cnot { control: usize, target: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRecipe {
    pub name: String,
    pub qubits: Vec<usize>,
    pub ideal_unitary: CMatrix,
    pub kind: GateKind,
}

impl GateRecipe {
    pub fn rotation(qubit: usize, axis: Axis, angle: f64) -> Self {
        GateRecipe {
            name: format!("R{axis:?}({angle:.4})_{qubit}"),
            qubits: vec![qubit],
            ideal_unitary: rotation(axis, angle),
            kind: GateKind::Rotation { qubit, axis, angle },
        }
    }

    pub fn rz_minus_half_pi(qubit: usize) -> Self {
        GateRecipe {
            name: format!("RZ(-pi/2)_{qubit}"),
            qubits: vec![qubit],
            ideal_unitary: rz(-FRAC_PI_2),
            kind: GateKind::RzMinusHalfPi { qubit },
        }
    }

    pub fn hadamard(qubit: usize) -> Self {
        GateRecipe { name: format!("H_{qubit}"), qubits: vec![qubit], ideal_unitary: hadamard(), kind: GateKind::Hadamard { qubit } }
    }

    pub fn echoed_cr(control: usize, target: usize) -> Self {
        GateRecipe {
            name: format!("ECR_{control}{target}"),
            qubits: vec![control, target],
            ideal_unitary: rzx(FRAC_PI_2),
            kind: GateKind::EchoedCr { control, target },
        }
    }

    pub fn elementary_sequence(&self) -> Vec<(usize, Axis, f64)> {
        match self.kind {
            GateKind::Rotation { qubit, axis, angle } => vec![(qubit, axis, angle)],
            GateKind::RzMinusHalfPi { qubit } => {
                vec![(qubit, Axis::X, -FRAC_PI_2), (qubit, Axis::Y, -FRAC_PI_2), (qubit, Axis::X, FRAC_PI_2)]
            }
            GateKind::Hadamard { qubit } => vec![(qubit, Axis::Y, FRAC_PI_2), (qubit, Axis::X, PI)],
            _ => Vec::new(),
        }
    }

    /// Unitary of the pulse sequence with ideal elementary rotations, global phase included.
    pub fn realized_unitary(&self) -> CMatrix {
        match self.kind {
            GateKind::EchoedCr { .. } => {
                let xc = kron(&rotation(Axis::X, PI), &CMatrix::identity(2));
                xc.matmul(&rzx(-FRAC_PI_4)).matmul(&xc).matmul(&rzx(FRAC_PI_4))
            }
            GateKind::Cnot { control, target } => {
                let pre = kron(&GateRecipe::rz_minus_half_pi(control).realized_unitary(), &rotation(Axis::X, -FRAC_PI_2));
                GateRecipe::echoed_cr(control, target).realized_unitary().matmul(&pre)
            }
            _ => self
                .elementary_sequence()
                .iter()
                .fold(CMatrix::identity(2), |acc, &(_, axis, angle)| rotation(axis, angle).matmul(&acc)),
        }
    }

    pub fn duration(&self, timing: &GateTiming) -> f64 {
        match self.kind {
            GateKind::EchoedCr { .. } => 2.0 * (timing.cr_pulse() + timing.single_qubit),
            GateKind::Cnot { .. } => 3.0 * timing.single_qubit + 2.0 * (timing.cr_pulse() + timing.single_qubit),
            _ => self.elementary_sequence().len() as f64 * timing.single_qubit,
        }
    }

    /// Drive pulses realizing the gate, starting at t0.
    pub fn pulses(&self, cfg: &DeviceConfig, table: &PulseTable, t0: f64) -> Result<Vec<DrivePulse>> {
        let tsq = cfg.timing.single_qubit;
        match self.kind {
            GateKind::EchoedCr { control, target } => {
                let cr = table.cr(control, target)?;
                let tcr = cfg.timing.cr_pulse();
                Ok(vec![
                    cr.pulse(cfg, 1.0, t0)?,
                    table.rotation_pulse(cfg, control, Axis::X, PI, t0 + tcr)?,
                    cr.pulse(cfg, -1.0, t0 + tcr + tsq)?,
                    table.rotation_pulse(cfg, control, Axis::X, PI, t0 + 2.0 * tcr + tsq)?,
                ])
            }
            GateKind::Cnot { control, target } => {
                let mut p = GateRecipe::rz_minus_half_pi(control).pulses(cfg, table, t0)?;
                p.push(table.rotation_pulse(cfg, target, Axis::X, -FRAC_PI_2, t0)?);
                p.extend(GateRecipe::echoed_cr(control, target).pulses(cfg, table, t0 + 3.0 * tsq)?);
                Ok(p)
            }
            _ => self
                .elementary_sequence()
                .iter()
                .enumerate()
                .map(|(i, &(q, axis, angle))| table.rotation_pulse(cfg, q, axis, angle, t0 + i as f64 * tsq))
                .collect(),
        }
    }

    /// Stand-alone schedule of this gate on the full register.
    pub fn schedule(&self, cfg: &DeviceConfig, table: &PulseTable) -> Result<PulseSchedule> {
        let ideal = embed_op(&self.ideal_unitary, &self.qubits, cfg.n_qubits())?;
        PulseSchedule::new(self.pulses(cfg, table, 0.0)?, self.duration(&cfg.timing), ideal)
    }
}

/// CNOT_{ct} = e^{−iπ/4} R_ZX(π/2)·(R_Z(−π/2) ⊗ R_X(−π/2)), CR drive on the control at the target frequency.
pub fn build_cnot(cfg: &DeviceConfig, control: usize, target: usize) -> Result<GateRecipe> {
    if control == target {
        return Err(Error::InvalidInput("control and target coincide".into()));
    }
    if cfg.coupling(control, target) <= 0.0 {
        return Err(Error::InvalidInput(format!("qubits {control} and {target} are not coupled")));
    }
    Ok(GateRecipe {
        name: format!("CNOT_{control}{target}"),
        qubits: vec![control, target],
        ideal_unitary: cnot(),
        kind: GateKind::Cnot { control, target },
    })
}

/// Single-qubit recipes R_X(π/2), R_X(π), R_Y(π/2), R_Z(−π/2), H for every qubit.
pub fn build_single_qubit_gates(cfg: &DeviceConfig) -> Vec<GateRecipe> {
    (1..=cfg.n_qubits())
        .flat_map(|q| {
            [
                GateRecipe::rotation(q, Axis::X, FRAC_PI_2),
                GateRecipe::rotation(q, Axis::X, PI),
                GateRecipe::rotation(q, Axis::Y, FRAC_PI_2),
                GateRecipe::rz_minus_half_pi(q),
                GateRecipe::hadamard(q),
            ]
        })
        .collect()
}

/// Fitted drive of one qubit; R_Y and negative angles reuse it with shifted phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitPulse {
    pub qubit: usize,
    /// Drive frequency (rad/s).
    pub freq: f64,
    /// Peak amplitude for |θ| = π/2 (rad/s).
    pub amp_half_pi: f64,
    /// Peak amplitude for |θ| = π (rad/s).
    pub amp_pi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrPulse {
    pub control: usize,
    pub target: usize,
    /// Drive frequency (rad/s).
    pub freq: f64,
    /// Flat-top amplitude (rad/s).
    pub amplitude: f64,
    /// Axis phase giving R_ZX(+π/4); the opposite half adds π.
    pub phase: f64,
}

fn nearest_omega(cfg: &DeviceConfig, freq: f64) -> f64 {
    (1..=cfg.n_qubits())
        .map(|q| cfg.omega(q))
        .min_by(|a, b| (a - freq).abs().total_cmp(&(b - freq).abs()))
        .unwrap_or(freq)
}

impl CrPulse {
    pub fn envelope(&self, timing: &GateTiming, t0: f64) -> Result<PulseEnvelope> {
        PulseEnvelope::gaussian_square(self.amplitude, t0, timing.cr_pulse(), timing.cr_sigma)
    }

    /// Half rotation R_ZX(sign·π/4) starting at t0.
    pub fn pulse(&self, cfg: &DeviceConfig, sign: f64, t0: f64) -> Result<DrivePulse> {
        let phase = if sign >= 0.0 { self.phase } else { self.phase + PI };
        Ok(DrivePulse::referenced(self.control, self.envelope(&cfg.timing, t0)?, self.freq, phase, nearest_omega(cfg, self.freq)))
    }
}

/// Fitted parameters of every elementary pulse.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseTable {
    pub single: BTreeMap<usize, SingleQubitPulse>,
    pub cr: Vec<CrPulse>,
}

impl PulseTable {
    /// Resonant pulses with area-theorem amplitudes and nominal CR strength.
    pub fn nominal(cfg: &DeviceConfig, pairs: &[(usize, usize)]) -> Self {
        let mut t = PulseTable::default();
        for q in 1..=cfg.n_qubits() {
            let unit = single_unit_area(&cfg.timing);
            t.single.insert(
                q,
                SingleQubitPulse { qubit: q, freq: cfg.omega(q), amp_half_pi: FRAC_PI_4 / unit, amp_pi: FRAC_PI_2 / unit },
            );
        }
        for &(c, tq) in pairs {
            t.cr.push(CrPulse { control: c, target: tq, freq: cfg.omega(tq), amplitude: cr_nominal_amplitude(cfg, c, tq), phase: 0.0 });
        }
        t
    }

    pub fn cr(&self, control: usize, target: usize) -> Result<&CrPulse> {
        self.cr
            .iter()
            .find(|p| p.control == control && p.target == target)
            .ok_or_else(|| Error::InvalidInput(format!("no CR calibration for {control}->{target}")))
    }

    fn cr_mut(&mut self, control: usize, target: usize) -> Result<&mut CrPulse> {
        self.cr
            .iter_mut()
            .find(|p| p.control == control && p.target == target)
            .ok_or_else(|| Error::InvalidInput(format!("no CR calibration for {control}->{target}")))
    }

    pub fn rotation_pulse(&self, cfg: &DeviceConfig, qubit: usize, axis: Axis, angle: f64, t0: f64) -> Result<DrivePulse> {
        let p = self.single.get(&qubit).ok_or_else(|| Error::InvalidInput(format!("no calibration for qubit {qubit}")))?;
        let mag = angle.abs();
        let amp = if (mag - FRAC_PI_2).abs() < 1e-12 {
            p.amp_half_pi
        } else if (mag - PI).abs() < 1e-12 {
            p.amp_pi
        } else {
            p.amp_pi * mag / PI
        };
        let mut phase = match axis {
            Axis::X => 0.0,
            Axis::Y => FRAC_PI_2,
        };
        if angle < 0.0 {
            phase += PI;
        }
        let env = PulseEnvelope::gaussian(amp, t0, cfg.timing.single_qubit);
        Ok(DrivePulse::referenced(qubit, env, p.freq, phase, nearest_omega(cfg, p.freq)))
    }
}

fn single_unit_area(timing: &GateTiming) -> f64 {
    PulseEnvelope::gaussian(1.0, 0.0, timing.single_qubit).area()
}

/// Amplitude giving R_ZX(π/4) from H_eff = (JΩ/Δ) Z⊗X.
fn cr_nominal_amplitude(cfg: &DeviceConfig, control: usize, target: usize) -> f64 {
    let j = TWO_PI * cfg.coupling(control, target);
    let delta = (cfg.omega(control) - cfg.omega(target)).abs();
    let unit = PulseEnvelope { amplitude: 1.0, ..PulseEnvelope::gaussian_square(1.0, 0.0, cfg.timing.cr_pulse(), cfg.timing.cr_sigma).expect("valid timing") }.area();
    FRAC_PI_4 / 2.0 * delta / j / unit
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrids {
    pub freq_span_hz: f64,
    pub freq_step_hz: f64,
    /// Relative amplitude half-range around the estimate.
    pub amp_span: f64,
    pub amp_step: f64,
    pub golden_iters: usize,
}

impl Default for ScanGrids {
    fn default() -> Self {
        ScanGrids { freq_span_hz: 20e6, freq_step_hz: 0.1e6, amp_span: 0.5, amp_step: 0.005, golden_iters: 30 }
    }
}

impl ScanGrids {
    pub fn coarse() -> Self {
        ScanGrids { freq_span_hz: 10e6, freq_step_hz: 1e6, amp_span: 0.5, amp_step: 0.02, golden_iters: 20 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.freq_step_hz > 0.0 && self.freq_span_hz >= 0.0 && self.amp_step > 0.0 && (0.0..1.0).contains(&self.amp_span)) {
            return Err(Error::InvalidInput("scan grids need positive steps and amplitude span below 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub x: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub name: String,
    pub qubits: Vec<usize>,
    pub freq_hz: f64,
    pub amplitude: f64,
    pub achieved_fidelity: f64,
    /// Frequencies in Hz.
    pub frequency_scan: Vec<ScanPoint>,
    /// Amplitudes in rad/s.
    pub amplitude_scan: Vec<ScanPoint>,
}

fn grid(center: f64, span: f64, step: f64) -> Vec<f64> {
    let n = (span / step).round() as i64;
    (-n..=n).map(|i| center + i as f64 * step).collect()
}

fn scan(xs: &[f64], f: &(dyn Fn(f64) -> Result<f64> + Sync)) -> Result<Vec<ScanPoint>> {
    xs.par_iter().map(|&x| Ok(ScanPoint { x, fidelity: f(x)? })).collect()
}

fn best(points: &[ScanPoint]) -> ScanPoint {
    *points.iter().fold(&points[0], |b, p| if p.fidelity > b.fidelity { p } else { b })
}

fn golden_max(f: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64, iters: usize, start: ScanPoint) -> Result<ScanPoint> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let cand = if fc >= fd { ScanPoint { x: c, fidelity: fc } } else { ScanPoint { x: d, fidelity: fd } };
    Ok(if cand.fidelity > start.fidelity { cand } else { start })
}

fn check_informative(points: &[ScanPoint], what: &str, name: &str) -> Result<()> {
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.fidelity), h.max(p.fidelity)));
    if !(hi - lo > 1e-12) {
        return Err(Error::CalibrationFailed(format!(
            "{name}: fidelity flat at {hi:.6} across the {what} grid of {} points",
            points.len()
        )));
    }
    Ok(())
}

/// Which fitted pulse a recipe calibrates.
#[derive(Clone, Copy, Debug)]
enum Target {
    Half(usize),
    Full(usize),
    Cr(usize, usize),
}

fn target_of(recipe: &GateRecipe) -> Result<Target> {
    match recipe.kind {
        GateKind::Rotation { qubit, axis: Axis::X, angle } if (angle - FRAC_PI_2).abs() < 1e-12 => Ok(Target::Half(qubit)),
        GateKind::Rotation { qubit, axis: Axis::X, angle } if (angle - PI).abs() < 1e-12 => Ok(Target::Full(qubit)),
        GateKind::EchoedCr { control, target } => Ok(Target::Cr(control, target)),
        _ => Err(Error::InvalidInput(format!("{} has no free pulse parameters; calibrate R_X(π/2), R_X(π) or the echoed CR", recipe.name))),
    }
}

fn with_params(table: &PulseTable, t: Target, freq: f64, amp: f64) -> Result<PulseTable> {
    let mut out = table.clone();
    match t {
        Target::Half(q) | Target::Full(q) => {
            let p = out.single.get_mut(&q).ok_or_else(|| Error::InvalidInput(format!("no entry for qubit {q}")))?;
            p.freq = freq;
            if matches!(t, Target::Half(_)) {
                p.amp_half_pi = amp;
            } else {
                p.amp_pi = amp;
            }
        }
        Target::Cr(c, tq) => {
            let p = out.cr_mut(c, tq)?;
            p.freq = freq;
            p.amplitude = amp;
        }
    }
    Ok(out)
}

fn current(table: &PulseTable, t: Target) -> Result<(f64, f64)> {
    match t {
        Target::Half(q) => table.single.get(&q).map(|p| (p.freq, p.amp_half_pi)),
        Target::Full(q) => table.single.get(&q).map(|p| (p.freq, p.amp_pi)),
        Target::Cr(c, tq) => table.cr(c, tq).ok().map(|p| (p.freq, p.amplitude)),
    }
    .ok_or_else(|| Error::InvalidInput("recipe has no entry in the pulse table".into()))
}

/// Dissipationless average gate fidelity of a recipe with the given table.
pub fn coherent_fidelity(recipe: &GateRecipe, cfg: &DeviceConfig, table: &PulseTable) -> Result<f64> {
    let sched = recipe.schedule(cfg, table)?;
    let opts = PropagateOptions { dissipation: false, ..PropagateOptions::default() };
    let u = unitary_propagator(cfg, &sched, &opts)?;
    Ok(unitary_fidelity(&u, &sched.ideal_target))
}

/// Frequency scan at fixed amplitude, then amplitude scan at the best
/// frequency, each followed by golden-section refinement.
pub fn calibrate_pulse(recipe: &GateRecipe, cfg: &DeviceConfig, table: &PulseTable, grids: &ScanGrids) -> Result<(CalibrationResult, PulseTable)> {
    grids.validate()?;
    let t = target_of(recipe)?;
    let (f0, a0) = current(table, t)?;
    let mut table = table.clone();
    if let Target::Cr(c, tq) = t {
        // sign of the effective ZX term depends on the detuning sign
        let flipped = {
            let mut alt = table.clone();
            alt.cr_mut(c, tq)?.phase += PI;
            alt
        };
        if coherent_fidelity(recipe, cfg, &flipped)? > coherent_fidelity(recipe, cfg, &table)? {
            table = flipped;
        }
    }

    let fid_freq = |w: f64| coherent_fidelity(recipe, cfg, &with_params(&table, t, w, a0)?);
    let step_w = TWO_PI * grids.freq_step_hz;
    let freqs = grid(f0, TWO_PI * grids.freq_span_hz, step_w);
    let fscan = scan(&freqs, &fid_freq)?;
    check_informative(&fscan, "frequency", &recipe.name)?;
    let fbest = golden_max(&fid_freq, best(&fscan).x - step_w, best(&fscan).x + step_w, grids.golden_iters, best(&fscan))?;

    let fid_amp = |a: f64| coherent_fidelity(recipe, cfg, &with_params(&table, t, fbest.x, a)?);
    let step_a = a0 * grids.amp_step;
    let amps = grid(a0, a0 * grids.amp_span, step_a);
    let ascan = scan(&amps, &fid_amp)?;
    check_informative(&ascan, "amplitude", &recipe.name)?;
    let abest = golden_max(&fid_amp, best(&ascan).x - step_a, best(&ascan).x + step_a, grids.golden_iters, best(&ascan))?;

    let fitted = with_params(&table, t, fbest.x, abest.x)?;
    let result = CalibrationResult {
        name: recipe.name.clone(),
        qubits: recipe.qubits.clone(),
        freq_hz: fbest.x / TWO_PI,
        amplitude: abest.x,
        achieved_fidelity: abest.fidelity.clamp(0.0, 1.0),
        frequency_scan: fscan.into_iter().map(|p| ScanPoint { x: p.x / TWO_PI, ..p }).collect(),
        amplitude_scan: ascan,
    };
    Ok((result, fitted))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stabilizer {
    ZZ,
    XX,
}

impl Stabilizer {
    pub const ALL: [Stabilizer; 2] = [Stabilizer::ZZ, Stabilizer::XX];

    pub fn name(self) -> &'static str {
        match self {
            Stabilizer::ZZ => "zz",
            Stabilizer::XX => "xx",
        }
    }
}

/// Parity-check circuit as layers of gates on disjoint qubits; ancilla is qubit 3.
/// CNOTs run from the higher-frequency qubit to the lower one.
pub fn parity_circuit(cfg: &DeviceConfig, stabilizer: Stabilizer) -> Result<Vec<Vec<GateRecipe>>> {
    let h = GateRecipe::hadamard;
    Ok(match stabilizer {
        Stabilizer::ZZ => vec![vec![h(1), h(3)], vec![build_cnot(cfg, 3, 1)?], vec![h(1), h(3)], vec![build_cnot(cfg, 2, 3)?]],
        Stabilizer::XX => vec![vec![h(3)], vec![build_cnot(cfg, 3, 1)?], vec![h(2), h(3)], vec![build_cnot(cfg, 2, 3)?], vec![h(2)]],
    })
}

/// CNOT pairs used by the parity circuits.
pub fn cnot_pairs() -> Vec<(usize, usize)> {
    vec![(3, 1), (2, 3)]
}

/// Layers concatenated back to back; ideal target is the product of gate unitaries.
pub fn build_parity_schedule(cfg: &DeviceConfig, table: &PulseTable, stabilizer: Stabilizer) -> Result<PulseSchedule> {
    let n = cfg.n_qubits();
    let mut t = 0.0;
    let mut pulses = Vec::new();
    let mut ideal = CMatrix::identity(1 << n);
    for layer in parity_circuit(cfg, stabilizer)? {
        let mut dur: f64 = 0.0;
        for g in &layer {
            pulses.extend(g.pulses(cfg, table, t)?);
            ideal = embed_op(&g.ideal_unitary, &g.qubits, n)?.matmul(&ideal);
            dur = dur.max(g.duration(&cfg.timing));
        }
        t += dur;
    }
    PulseSchedule::new(pulses, t, ideal)
}

/// Every fitted pulse of a device, with per-pulse scan records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceCalibration {
    pub table: PulseTable,
    pub results: Vec<CalibrationResult>,
}

/// Calibrates R_X(π/2), R_X(π) on every qubit, then each echoed CR used by the parity circuits.
pub fn calibrate_device(cfg: &DeviceConfig, grids: &ScanGrids) -> Result<DeviceCalibration> {
    cfg.validate()?;
    let pairs = cnot_pairs();
    for &(c, t) in &pairs {
        build_cnot(cfg, c, t)?;
    }
    let mut table = PulseTable::nominal(cfg, &pairs);
    let mut results = Vec::new();
    let mut recipes: Vec<GateRecipe> = (1..=cfg.n_qubits())
        .flat_map(|q| [GateRecipe::rotation(q, Axis::X, FRAC_PI_2), GateRecipe::rotation(q, Axis::X, PI)])
        .collect();
    recipes.extend(pairs.iter().map(|&(c, t)| GateRecipe::echoed_cr(c, t)));
    for r in &recipes {
        let (res, fitted) = calibrate_pulse(r, cfg, &table, grids)?;
        table = fitted;
        results.push(res);
    }
    Ok(DeviceCalibration { table, results })
}
