//! Time-ordered propagators of the driven, dissipative device.
//!
//! The channel is obtained by integrating dV/dt = L(t)·V column-wise from
//! V(0) = I with an adaptive Dormand–Prince 5(4) pair in the rotating frame.

use serde::{Deserialize, Serialize};

use crate::densecore::{CMatrix, C64, ZERO};
use crate::device::{max_frame_frequency, DeviceConfig, Frame, HamiltonianBuilder, PulseSchedule};
use crate::error::{Error, Result};
use crate::superop::{is_cptp, lindbladian_superop, CptpReport, LindbladModel, SuperOp, SuperOpKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagateOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Overrides the default cap of 1/(20·f_max).
    pub max_step: Option<f64>,
    pub dissipation: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions { rtol: 1e-9, atol: 1e-12, max_step: None, dissipation: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropagatorResult {
    pub channel: SuperOp,
    pub cptp_report: CptpReport,
    pub step_count: usize,
    pub est_error: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IntegrationStats {
    pub steps: usize,
    pub rejected: usize,
    pub est_error: f64,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand–Prince 5(4) integration of y' = f(t, y) from t0 to t1.
pub fn dp5<F>(mut f: F, y: &mut Vec<C64>, t0: f64, t1: f64, opts: &PropagateOptions, h_max: f64, stats: &mut IntegrationStats) -> Result<()>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y.len();
    if t1 <= t0 {
        return Ok(());
    }
    let mut k: Vec<Vec<C64>> = vec![vec![ZERO; n]; 7];
    let mut tmp = vec![ZERO; n];
    let mut ynew = vec![ZERO; n];
    let mut t = t0;
    let span = t1 - t0;
    let mut h = h_max.min(span).min(span * 0.01_f64.max(1e-3));
    f(t, y, &mut k[0]);
    while t < t1 {
        if t + h > t1 || (t1 - (t + h)) < 1e-9 * h {
            h = t1 - t;
        }
        if h < 1e-14 * span.max(t.abs()) {
            return Err(Error::StepUnderflow { t });
        }
        for s in 1..7 {
            tmp.copy_from_slice(y);
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j] * h;
                if a != 0.0 {
                    for (t_i, k_i) in tmp.iter_mut().zip(kj) {
                        *t_i += k_i * a;
                    }
                }
            }
            f(t + C[s] * h, &tmp, &mut k[s]);
        }
        ynew.copy_from_slice(&tmp);
        let mut err: f64 = 0.0;
        let mut err_abs2: f64 = 0.0;
        for i in 0..n {
            let mut e = ZERO;
            for (s, ks) in k.iter().enumerate() {
                if E[s] != 0.0 {
                    e += ks[i] * E[s];
                }
            }
            let e2 = (e * h).norm_sqr();
            let sc = opts.atol + opts.rtol * y[i].norm_sqr().max(ynew[i].norm_sqr()).sqrt();
            err = err.max(e2 / (sc * sc));
            err_abs2 = err_abs2.max(e2);
        }
        let err = err.sqrt();
        let err_abs = err_abs2.sqrt();
        if err <= 1.0 {
            t += h;
            std::mem::swap(y, &mut ynew);
            k.swap(0, 6);
            stats.steps += 1;
            stats.est_error += err_abs;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(h_max);
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= fac;
        }
    }
    Ok(())
}

/// Sparse entries of a generator matrix, row-major.
struct SparseRows {
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseRows {
    fn from_dense(m: &CMatrix) -> Self {
        let n = m.dim();
        let rows = (0..n)
            .map(|i| m.row(i).iter().enumerate().filter(|(_, v)| **v != ZERO).map(|(j, &v)| (j, v)).collect())
            .collect();
        SparseRows { rows }
    }
}

/// out = (−i(H⊗I − I⊗Hᵀ) + D)·V, where V holds `cols` columns per row.
fn apply_generator(h: &CMatrix, diss: &SparseRows, v: &[C64], out: &mut [C64], cols: usize) {
    let d = h.dim();
    for (i, row) in diss.rows.iter().enumerate() {
        let o = &mut out[i * cols..(i + 1) * cols];
        o.fill(ZERO);
        for &(k, val) in row {
            axpy(o, val, &v[k * cols..(k + 1) * cols]);
        }
    }
    let mi = C64::new(0.0, -1.0);
    for i in 0..d {
        for k in 0..d {
            let hik = h[(i, k)];
            if hik == ZERO {
                continue;
            }
            let c = mi * hik;
            for j in 0..d {
                // H⊗I: [(i,j),(k,j)] = H_ik ; I⊗Hᵀ: [(j,k),(j,i)] = H_ik
                let (r1, s1) = (i * d + j, k * d + j);
                axpy(&mut out[r1 * cols..(r1 + 1) * cols], c, &v[s1 * cols..(s1 + 1) * cols]);
                let (r2, s2) = (j * d + k, j * d + i);
                axpy(&mut out[r2 * cols..(r2 + 1) * cols], -c, &v[s2 * cols..(s2 + 1) * cols]);
            }
        }
    }
}

#[inline]
fn axpy(o: &mut [C64], a: C64, x: &[C64]) {
    for (oj, xj) in o.iter_mut().zip(x) {
        *oj += a * xj;
    }
}

fn breakpoints(sched: &PulseSchedule, t0: f64, t1: f64) -> Vec<f64> {
    let mut pts = vec![t0, t1];
    for p in &sched.pulses {
        for t in [p.envelope.t0, p.envelope.t_end()] {
            if t > t0 && t < t1 {
                pts.push(t);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    pts
}

fn step_cap(cfg: &DeviceConfig, sched: &PulseSchedule, opts: &PropagateOptions) -> f64 {
    if let Some(h) = opts.max_step {
        return h;
    }
    let f = max_frame_frequency(cfg, sched);
    let mut cap = if f > 0.0 { 1.0 / (20.0 * f) } else { sched.total_duration / 4.0 };
    for p in &sched.pulses {
        cap = cap.min(p.envelope.sigma / 2.0);
    }
    cap
}

fn dissipator(cfg: &DeviceConfig) -> Result<CMatrix> {
    let dim = 1 << cfg.n_qubits();
    let m = LindbladModel::new(CMatrix::zeros(dim), cfg.jumps())?;
    Ok(lindbladian_superop(&m)?.mat)
}

/// Channel of the schedule over [0, total_duration].
pub fn propagator(cfg: &DeviceConfig, sched: &PulseSchedule) -> Result<PropagatorResult> {
    propagator_with(cfg, sched, &PropagateOptions::default())
}

pub fn propagator_with(cfg: &DeviceConfig, sched: &PulseSchedule, opts: &PropagateOptions) -> Result<PropagatorResult> {
    propagator_window(cfg, sched, 0.0, sched.total_duration, opts)
}

/// Channel over the window [t0, t1] of the schedule.
pub fn propagator_window(cfg: &DeviceConfig, sched: &PulseSchedule, t0: f64, t1: f64, opts: &PropagateOptions) -> Result<PropagatorResult> {
    cfg.validate()?;
    sched.validate()?;
    if t0 < 0.0 || t1 > sched.total_duration * (1.0 + 1e-12) || t1 < t0 {
        return Err(Error::Domain(format!("window [{t0:e}, {t1:e}] outside the schedule")));
    }
    let n = cfg.n_qubits();
    let d = 1usize << n;
    let dd = d * d;
    let builder = HamiltonianBuilder::new(cfg);
    let diss = if opts.dissipation { dissipator(cfg)? } else { CMatrix::zeros(dd) };
    let h_max = step_cap(cfg, sched, opts);
    let mut y: Vec<C64> = CMatrix::identity(dd).into_vec();
    let mut stats = IntegrationStats::default();
    let pts = breakpoints(sched, t0, t1);
    let diss = SparseRows::from_dense(&diss);
    let mut rhs = |t: f64, v: &[C64], out: &mut [C64]| {
        let h = builder.at(&sched.pulses, t, Frame::Rotating);
        apply_generator(&h, &diss, v, out, dd);
    };
    for w in pts.windows(2) {
        dp5(&mut rhs, &mut y, w[0], w[1], opts, h_max, &mut stats)?;
    }
    let channel = SuperOp::new(n, 2, SuperOpKind::Channel, CMatrix::from_vec(dd, y)?)?;
    let cptp_report = is_cptp(&channel, 1e-7);
    Ok(PropagatorResult { channel, cptp_report, step_count: stats.steps, est_error: stats.est_error })
}

/// Dissipationless propagator U(t1, t0) from the Schrödinger equation.
pub fn unitary_propagator(cfg: &DeviceConfig, sched: &PulseSchedule, opts: &PropagateOptions) -> Result<CMatrix> {
    let builder = HamiltonianBuilder::new(cfg);
    let d = builder.dim();
    let h_max = step_cap(cfg, sched, opts);
    let mut y = CMatrix::identity(d).into_vec();
    let mut stats = IntegrationStats::default();
    let mi = C64::new(0.0, -1.0);
    let mut rhs = |t: f64, u: &[C64], out: &mut [C64]| {
        let h = builder.at(&sched.pulses, t, Frame::Rotating);
        for i in 0..d {
            let o = &mut out[i * d..(i + 1) * d];
            o.fill(ZERO);
            for k in 0..d {
                let hik = h[(i, k)];
                if hik == ZERO {
                    continue;
                }
                let c = mi * hik;
                for (oj, uj) in o.iter_mut().zip(&u[k * d..(k + 1) * d]) {
                    *oj += c * uj;
                }
            }
        }
    };
    for w in breakpoints(sched, 0.0, sched.total_duration).windows(2) {
        dp5(&mut rhs, &mut y, w[0], w[1], opts, h_max, &mut stats)?;
    }
    CMatrix::from_vec(d, y)
}
