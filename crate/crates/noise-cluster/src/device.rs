//! Fixed-frequency transmon processor model: static Hamiltonian, transverse
//! couplings, microwave drives, and the Gaussian / Gaussian-square envelopes.
//!
//! Frequencies in configs are ordinary frequencies (Hz). Internally every
//! Hamiltonian is in angular units (rad/s), with ħ = 1.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::densecore::{embed_site, pauli_z, sigma_minus, sigma_plus, CMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::superop::{Jump, LindbladModel};

pub const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Linear,
    Triangle,
}

impl Geometry {
    pub fn name(self) -> &'static str {
        match self {
            Geometry::Linear => "linear",
            Geometry::Triangle => "triangle",
        }
    }
}

impl std::str::FromStr for Geometry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Geometry::Linear),
            "triangle" => Ok(Geometry::Triangle),
            other => Err(Error::InvalidInput(format!("unknown geometry {other:?}"))),
        }
    }
}

/// Gate durations that the calibration treats as fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateTiming {
    /// Single-qubit Gaussian pulse length (s).
    pub single_qubit: f64,
    /// Gaussian-square rise/fall width σ for cross-resonance pulses (s).
    pub cr_sigma: f64,
    /// Flat-top length of each cross-resonance half pulse (s).
    pub cr_flat: f64,
}

impl Default for GateTiming {
    fn default() -> Self {
        GateTiming { single_qubit: 10e-9, cr_sigma: 5e-9, cr_flat: 25e-9 }
    }
}

impl GateTiming {
    pub fn cr_pulse(&self) -> f64 {
        self.cr_flat + 6.0 * self.cr_sigma
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeviceConfigJson", into = "DeviceConfigJson")]
pub struct DeviceConfig {
    /// ω_q/2π per qubit (Hz).
    pub qubit_freqs: Vec<f64>,
    /// J_jk/2π (Hz), keyed by 1-based (j, k) with j < k.
    pub couplings: BTreeMap<(usize, usize), f64>,
    /// T1 per qubit (s).
    pub t1_times: Vec<f64>,
    /// Tφ per qubit (s).
    pub tphi_times: Vec<f64>,
    pub geometry: Geometry,
    pub timing: GateTiming,
}

#[derive(Serialize, Deserialize)]
struct DeviceConfigJson {
    freqs_ghz: Vec<f64>,
    couplings_mhz: BTreeMap<String, f64>,
    t1_us: Vec<f64>,
    tphi_us: Vec<f64>,
    geometry: Geometry,
    #[serde(default)]
    single_qubit_ns: Option<f64>,
    #[serde(default)]
    cr_sigma_ns: Option<f64>,
    #[serde(default)]
    cr_flat_ns: Option<f64>,
}

impl TryFrom<DeviceConfigJson> for DeviceConfig {
    type Error = Error;
    fn try_from(j: DeviceConfigJson) -> Result<Self> {
        let mut couplings = BTreeMap::new();
        for (key, mhz) in &j.couplings_mhz {
            let digits: Vec<usize> = key.chars().filter_map(|c| c.to_digit(10).map(|d| d as usize)).collect();
            if digits.len() != 2 {
                return Err(Error::InvalidInput(format!("coupling key {key:?} must name two qubits")));
            }
            let (a, b) = (digits[0].min(digits[1]), digits[0].max(digits[1]));
            couplings.insert((a, b), mhz * 1e6);
        }
        let d = GateTiming::default();
        let cfg = DeviceConfig {
            qubit_freqs: j.freqs_ghz.iter().map(|f| f * 1e9).collect(),
            couplings,
            t1_times: j.t1_us.iter().map(|t| t * 1e-6).collect(),
            tphi_times: j.tphi_us.iter().map(|t| t * 1e-6).collect(),
            geometry: j.geometry,
            timing: GateTiming {
                single_qubit: j.single_qubit_ns.map_or(d.single_qubit, |v| v * 1e-9),
                cr_sigma: j.cr_sigma_ns.map_or(d.cr_sigma, |v| v * 1e-9),
                cr_flat: j.cr_flat_ns.map_or(d.cr_flat, |v| v * 1e-9),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<DeviceConfig> for DeviceConfigJson {
    fn from(c: DeviceConfig) -> Self {
        DeviceConfigJson {
            freqs_ghz: c.qubit_freqs.iter().map(|f| f / 1e9).collect(),
            couplings_mhz: c.couplings.iter().map(|(&(a, b), &j)| (format!("{a}{b}"), j / 1e6)).collect(),
            t1_us: c.t1_times.iter().map(|t| t / 1e-6).collect(),
            tphi_us: c.tphi_times.iter().map(|t| t / 1e-6).collect(),
            geometry: c.geometry,
            single_qubit_ns: Some(c.timing.single_qubit / 1e-9),
            cr_sigma_ns: Some(c.timing.cr_sigma / 1e-9),
            cr_flat_ns: Some(c.timing.cr_flat / 1e-9),
        }
    }
}

impl DeviceConfig {
    /// Three qubits at 4.8, 5.2, 5.0 GHz, J/2π = 4 MHz, T1 = 100 µs, Tφ = 200 µs.
    pub fn reference(geometry: Geometry) -> Self {
        let mut couplings = BTreeMap::new();
        couplings.insert((1, 2), if geometry == Geometry::Triangle { 4e6 } else { 0.0 });
        couplings.insert((1, 3), 4e6);
        couplings.insert((2, 3), 4e6);
        DeviceConfig {
            qubit_freqs: vec![4.8e9, 5.2e9, 5.0e9],
            couplings,
            t1_times: vec![100e-6; 3],
            tphi_times: vec![200e-6; 3],
            geometry,
            timing: GateTiming::default(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.qubit_freqs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        if n == 0 {
            return Err(Error::InvalidInput("device needs at least one qubit".into()));
        }
        if self.t1_times.len() != n || self.tphi_times.len() != n {
            return Err(Error::InvalidInput("T1/Tφ lists must match the qubit count".into()));
        }
        if self.qubit_freqs.iter().any(|&f| !(f > 0.0) || !f.is_finite()) {
            return Err(Error::InvalidInput("qubit frequencies must be positive".into()));
        }
        if self.t1_times.iter().chain(&self.tphi_times).any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidInput("T1 and Tφ must be positive".into()));
        }
        for (&(a, b), &j) in &self.couplings {
            if a == 0 || b > n || a >= b {
                return Err(Error::InvalidInput(format!("coupling ({a},{b}) outside qubits 1..={n}")));
            }
            if !(j >= 0.0) || !j.is_finite() {
                return Err(Error::InvalidInput(format!("coupling ({a},{b}) must be ≥ 0")));
            }
        }
        if self.geometry == Geometry::Linear && self.coupling(1, 2) != 0.0 {
            return Err(Error::InvalidInput("linear geometry requires J12 = 0".into()));
        }
        let t = &self.timing;
        if !(t.single_qubit > 0.0 && t.cr_sigma > 0.0 && t.cr_flat >= 0.0) {
            return Err(Error::InvalidInput("gate timings must be positive".into()));
        }
        Ok(())
    }

    /// J/2π (Hz) between 1-based qubits, zero if absent.
    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        let key = (a.min(b), a.max(b));
        self.couplings.get(&key).copied().unwrap_or(0.0)
    }

    pub fn active_couplings(&self) -> Vec<((usize, usize), f64)> {
        self.couplings.iter().filter(|(_, &j)| j > 0.0).map(|(&k, &j)| (k, j)).collect()
    }

    /// Angular frequency of a 1-based qubit.
    pub fn omega(&self, q: usize) -> f64 {
        TWO_PI * self.qubit_freqs[q - 1]
    }

    /// Same device with every coupling removed.
    pub fn without_couplings(&self) -> Self {
        let mut c = self.clone();
        for j in c.couplings.values_mut() {
            *j = 0.0;
        }
        c
    }

    /// Relaxation σ₋ at rate 1/T1 and dephasing σ_z at rate 1/Tφ on each qubit.
    pub fn jumps(&self) -> Vec<Jump> {
        let n = self.n_qubits();
        let mut out = Vec::with_capacity(2 * n);
        for q in 0..n {
            out.push(Jump { op: embed_site(&pauli_z(), q, n), rate: 1.0 / self.tphi_times[q] });
            out.push(Jump { op: embed_site(&sigma_minus(), q, n), rate: 1.0 / self.t1_times[q] });
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Gaussian,
    GaussianSquare,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    pub shape: Shape,
    /// Peak amplitude (rad/s).
    pub amplitude: f64,
    pub t0: f64,
    pub t_pulse: f64,
    pub sigma: f64,
}

fn gaussian(t: f64, a: f64, t0: f64, tp: f64, sigma: f64) -> f64 {
    let x = t - (t0 + 0.5 * tp);
    a * (-x * x / (2.0 * sigma * sigma)).exp()
}

impl PulseEnvelope {
    /// Gaussian with σ = t_pulse/8.
    pub fn gaussian(amplitude: f64, t0: f64, t_pulse: f64) -> Self {
        PulseEnvelope { shape: Shape::Gaussian, amplitude, t0, t_pulse, sigma: t_pulse / 8.0 }
    }

    /// Gaussian-square with 3σ rise and fall.
    pub fn gaussian_square(amplitude: f64, t0: f64, t_pulse: f64, sigma: f64) -> Result<Self> {
        let e = PulseEnvelope { shape: Shape::GaussianSquare, amplitude, t0, t_pulse, sigma };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_pulse > 0.0 && self.sigma > 0.0) || !self.amplitude.is_finite() {
            return Err(Error::InvalidInput("envelope needs positive duration and width".into()));
        }
        match self.shape {
            Shape::Gaussian if (self.sigma - self.t_pulse / 8.0).abs() > 1e-9 * self.t_pulse => {
                Err(Error::InvalidInput("gaussian envelope requires sigma = t_pulse/8".into()))
            }
            Shape::GaussianSquare if self.t_pulse < 6.0 * self.sigma * (1.0 - 1e-12) => {
                Err(Error::InvalidInput("gaussian-square envelope requires t_pulse ≥ 6σ".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.t_pulse
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// ∫Ω dt over the pulse.
    pub fn area(&self) -> f64 {
        let unit = PulseEnvelope { amplitude: 1.0, ..*self };
        self.amplitude * simpson(|t| envelope_value(&unit, t), self.t0, self.t_end(), 4000)
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Envelope Ω(t) in rad/s; zero outside [t0, t0 + t_pulse].
pub fn envelope_value(e: &PulseEnvelope, t: f64) -> f64 {
    if t < e.t0 || t > e.t_end() {
        return 0.0;
    }
    match e.shape {
        Shape::Gaussian => gaussian(t, e.amplitude, e.t0, e.t_pulse, e.sigma),
        Shape::GaussianSquare => {
            let s3 = 3.0 * e.sigma;
            if t < e.t0 + s3 {
                gaussian(t, e.amplitude, e.t0, 6.0 * e.sigma, e.sigma)
            } else if t <= e.t_end() - s3 {
                e.amplitude
            } else {
                gaussian(t, e.amplitude, e.t_end() - 6.0 * e.sigma, 6.0 * e.sigma, e.sigma)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrivePulse {
    /// 1-based driven qubit.
    pub qubit: usize,
    pub envelope: PulseEnvelope,
    /// Drive angular frequency ω_dr (rad/s).
    pub freq: f64,
    /// Lab-frame phase φ_dr (rad).
    pub phase: f64,
}

impl DrivePulse {
    /// Pulse whose rotation axis, seen in the frame of `ref_omega`, has
    /// azimuth `axis_phase` at the pulse start regardless of t0.
    pub fn referenced(qubit: usize, envelope: PulseEnvelope, freq: f64, axis_phase: f64, ref_omega: f64) -> Self {
        let phase = axis_phase - (freq - ref_omega) * envelope.t0;
        DrivePulse { qubit, envelope, freq, phase }
    }

    pub fn shifted(&self, dt: f64, ref_omega: f64) -> Self {
        let axis = self.phase + (self.freq - ref_omega) * self.envelope.t0;
        let env = PulseEnvelope { t0: self.envelope.t0 + dt, ..self.envelope };
        DrivePulse::referenced(self.qubit, env, self.freq, axis, ref_omega)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub pulses: Vec<DrivePulse>,
    pub total_duration: f64,
    /// Intended unitary on all qubits, in the rotating frame.
    pub ideal_target: CMatrix,
}

impl PulseSchedule {
    pub fn new(mut pulses: Vec<DrivePulse>, total_duration: f64, ideal_target: CMatrix) -> Result<Self> {
        pulses.sort_by(|a, b| a.envelope.t0.total_cmp(&b.envelope.t0));
        let s = PulseSchedule { pulses, total_duration, ideal_target };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_duration > 0.0) {
            return Err(Error::InvalidInput("schedule duration must be positive".into()));
        }
        let tol = 1e-15 + 1e-12 * self.total_duration;
        for p in &self.pulses {
            p.envelope.validate()?;
            if p.envelope.t0 < -tol || p.envelope.t_end() > self.total_duration + tol {
                return Err(Error::InvalidInput(format!("pulse on qubit {} exceeds the schedule window", p.qubit)));
            }
            if !(p.freq > 0.0) {
                return Err(Error::InvalidInput("drive frequency must be positive".into()));
            }
        }
        let res = self.ideal_target.unitary_residual();
        if res > 1e-10 {
            return Err(Error::NotUnitary { residual: res });
        }
        Ok(())
    }

    /// Concatenates `other` after `self`, re-referencing pulse phases.
    pub fn then(&self, other: &PulseSchedule, cfg: &DeviceConfig) -> Result<PulseSchedule> {
        let dt = self.total_duration;
        let mut pulses = self.pulses.clone();
        for p in &other.pulses {
            let reference = reference_omega(cfg, p);
            pulses.push(p.shifted(dt, reference));
        }
        PulseSchedule::new(pulses, dt + other.total_duration, other.ideal_target.matmul(&self.ideal_target))
    }
}

/// Frame frequency against which a pulse's axis is referenced: the nearest qubit frequency.
pub fn reference_omega(cfg: &DeviceConfig, p: &DrivePulse) -> f64 {
    (1..=cfg.n_qubits())
        .map(|q| cfg.omega(q))
        .min_by(|a, b| (a - p.freq).abs().total_cmp(&(b - p.freq).abs()))
        .unwrap_or(p.freq)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    Rotating,
}

/// Precomputed operators for fast evaluation of H(t).
#[derive(Clone, Debug)]
pub struct HamiltonianBuilder {
    n: usize,
    omegas: Vec<f64>,
    sigma_p: Vec<CMatrix>,
    /// (J in rad/s, ω_j − ω_k, σ₊_j σ₋_k)
    hops: Vec<(f64, f64, CMatrix)>,
    hq: CMatrix,
}

impl HamiltonianBuilder {
    pub fn new(cfg: &DeviceConfig) -> Self {
        let n = cfg.n_qubits();
        let omegas: Vec<f64> = (1..=n).map(|q| cfg.omega(q)).collect();
        let sigma_p: Vec<CMatrix> = (0..n).map(|q| embed_site(&sigma_plus(), q, n)).collect();
        let sigma_m: Vec<CMatrix> = (0..n).map(|q| embed_site(&sigma_minus(), q, n)).collect();
        let hops = cfg
            .active_couplings()
            .into_iter()
            .map(|((a, b), j)| (TWO_PI * j, omegas[a - 1] - omegas[b - 1], sigma_p[a - 1].matmul(&sigma_m[b - 1])))
            .collect();
        let mut hq = CMatrix::zeros(1 << n);
        for (q, w) in omegas.iter().enumerate() {
            hq += &embed_site(&pauli_z(), q, n).scale_re(0.5 * w);
        }
        HamiltonianBuilder { n, omegas, sigma_p, hops, hq }
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Adds c·X + c̄·X† to `h`.
    fn add_with_adjoint(h: &mut CMatrix, x: &CMatrix, c: C64) {
        let dim = h.dim();
        for i in 0..dim {
            for j in 0..dim {
                let v = x[(i, j)];
                if v != ZERO {
                    h[(i, j)] += c * v;
                    h[(j, i)] += (c * v).conj();
                }
            }
        }
    }

    pub fn at(&self, pulses: &[DrivePulse], t: f64, frame: Frame) -> CMatrix {
        let mut h = match frame {
            Frame::Lab => self.hq.clone(),
            Frame::Rotating => CMatrix::zeros(self.dim()),
        };
        for (j, dw, op) in &self.hops {
            let c = match frame {
                Frame::Lab => C64::new(*j, 0.0),
                Frame::Rotating => C64::from_polar(*j, -dw * t),
            };
            Self::add_with_adjoint(&mut h, op, c);
        }
        for p in pulses {
            let omega = envelope_value(&p.envelope, t);
            if omega == 0.0 {
                continue;
            }
            let arg = match frame {
                Frame::Lab => p.freq * t + p.phase,
                Frame::Rotating => (p.freq - self.omegas[p.qubit - 1]) * t + p.phase,
            };
            Self::add_with_adjoint(&mut h, &self.sigma_p[p.qubit - 1], C64::from_polar(omega, arg));
        }
        h
    }
}

/// H(t) = H_q + H_int + H_dr(t) in the lab frame, or e^{iH_q t}(H_int + H_dr)e^{−iH_q t} in the rotating frame.
pub fn hamiltonian_at(cfg: &DeviceConfig, sched: &PulseSchedule, t: f64, frame: Frame) -> Result<CMatrix> {
    if !(0.0..=sched.total_duration * (1.0 + 1e-12)).contains(&t) {
        return Err(Error::Domain(format!("t = {t:e} outside [0, {:e}]", sched.total_duration)));
    }
    for p in &sched.pulses {
        if p.qubit == 0 || p.qubit > cfg.n_qubits() {
            return Err(Error::InvalidInput(format!("pulse targets qubit {}", p.qubit)));
        }
    }
    Ok(HamiltonianBuilder::new(cfg).at(&sched.pulses, t, frame))
}

/// Largest oscillation frequency (Hz) present in the rotating-frame Hamiltonian.
pub fn max_frame_frequency(cfg: &DeviceConfig, sched: &PulseSchedule) -> f64 {
    let mut f: f64 = 0.0;
    for ((a, b), _) in cfg.active_couplings() {
        f = f.max((cfg.qubit_freqs[a - 1] - cfg.qubit_freqs[b - 1]).abs());
    }
    for p in &sched.pulses {
        f = f.max((p.freq / TWO_PI - cfg.qubit_freqs[p.qubit - 1]).abs());
    }
    f
}

/// Lindblad model at time t in the chosen frame, with the device dissipators.
pub fn lindblad_model_at(cfg: &DeviceConfig, sched: &PulseSchedule, t: f64, frame: Frame) -> Result<LindbladModel> {
    LindbladModel::new(hamiltonian_at(cfg, sched, t, frame)?, cfg.jumps())
}
