//! Staged, resumable end-to-end run: calibrate → simulate-propagators →
//! decompose → build-approx → run-202 / optimize-gain → report.
//!
//! Every artifact is JSON stamped with the hash of its inputs; a stage whose
//! stamp matches is not recomputed.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::approx::{approx_channel, to_standard_form, ApproxChannelSpec};
use crate::calibrate::{average_gate_fidelity, build_parity_schedule, calibrate_device, DeviceCalibration, ScanGrids, Stabilizer};
use crate::cluster::{cluster_decompose_channel, effective_lindbladian, normal_form, ClusterDecomposition};
use crate::densecore::{frobenius_norm, CMatrix};
use crate::device::{DeviceConfig, Geometry, PulseSchedule};
use crate::error::{Error, Result};
use crate::propagate::propagator;
use crate::qec202::{default_grid, evaluate_gain, optimize_gain_with, Bell, GainScan, MetricsReport, Reference, StabilizerSet};
use crate::superop::{CptpReport, SuperOp};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "NOISE_CLUSTER_THREADS";

/// Caps the global rayon pool at $NOISE_CLUSTER_THREADS when set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| Error::InvalidInput(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
        // a pool built earlier in the process wins; that is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub stage: String,
    pub input_hash: String,
    pub tool_version: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub stamp: Stamp,
    pub data: T,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StageEntry {
    pub input_hash: String,
    pub output: String,
    pub output_hash: String,
    pub completed_unix: u64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_path: Option<String>,
    pub config_hash: String,
    pub stages: BTreeMap<String, StageEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationData {
    pub config: DeviceConfig,
    pub grids: ScanGrids,
    pub calibration: DeviceCalibration,
    pub schedules: Vec<(Stabilizer, PulseSchedule)>,
    /// Wall-clock seconds spent calibrating.
    #[serde(default)]
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizerChannel {
    pub stabilizer: Stabilizer,
    pub ideal: CMatrix,
    pub channel: SuperOp,
    pub average_fidelity: f64,
    pub cptp: CptpReport,
    pub step_count: usize,
    pub duration: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizerDecomposition {
    pub stabilizer: Stabilizer,
    pub generator_norm: f64,
    pub max_re_eigenvalue: f64,
    pub physical: bool,
    pub decomposition: ClusterDecomposition,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxData {
    pub order: usize,
    pub gain: f64,
    pub channels: Vec<(Stabilizer, SuperOp, CptpReport)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Run202Data {
    pub order: usize,
    pub gain: f64,
    pub rounds: usize,
    pub report: MetricsReport,
}

/// Stage runner for one device configuration, writing under `out_dir/<geometry>/`.
pub struct Pipeline {
    pub out_dir: PathBuf,
    pub config: DeviceConfig,
    pub config_path: Option<PathBuf>,
    pub grids: ScanGrids,
    /// Report progress on stderr.
    pub verbose: bool,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(fs::File::open(path)?))?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("json.tmp");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        serde_json::to_writer(&mut w, value)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn tag(x: f64) -> String {
    format!("{x}").replace('.', "p")
}

impl Pipeline {
    pub fn new(out_dir: impl Into<PathBuf>, config: DeviceConfig) -> Self {
        Pipeline { out_dir: out_dir.into(), config, config_path: None, grids: ScanGrids::default(), verbose: false }
    }

    pub fn geometry(&self) -> Geometry {
        self.config.geometry
    }

    pub fn dir(&self) -> PathBuf {
        self.out_dir.join(self.geometry().name())
    }

    fn manifest_path(&self) -> PathBuf {
        self.out_dir.join("manifest.json")
    }

    fn log(&self, msg: &str) {
        if self.verbose {
            eprintln!("[{}] {msg}", self.geometry().name());
        }
    }

    pub fn config_hash(&self) -> Result<String> {
        Ok(sha256_hex(&serde_json::to_vec(&self.config)?))
    }

    fn record(&self, key: &str, input_hash: &str, output: &Path) -> Result<()> {
        let path = self.manifest_path();
        let mut m: RunManifest = if path.exists() { read_json(&path)? } else { RunManifest::default() };
        m.tool_version = TOOL_VERSION.into();
        m.config_hash = self.config_hash()?;
        m.config_path = self.config_path.as_ref().map(|p| p.display().to_string());
        let completed_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        m.stages.insert(
            format!("{}/{key}", self.geometry().name()),
            StageEntry {
                input_hash: input_hash.into(),
                output: output.strip_prefix(&self.out_dir).unwrap_or(output).display().to_string(),
                output_hash: sha256_hex(&fs::read(output)?),
                completed_unix,
            },
        );
        fs::create_dir_all(&self.out_dir)?;
        let mut w = BufWriter::new(fs::File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, &m)?;
        w.flush()?;
        Ok(())
    }

    /// Loads a cached artifact if its stamp matches, else computes and stores it.
    fn cached<T, F>(&self, stage: &str, key: &str, file: &Path, input_hash: String, compute: F) -> Result<Artifact<T>>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let stamp = Stamp { stage: stage.into(), input_hash, tool_version: TOOL_VERSION.into() };
        if file.exists() {
            if let Ok(a) = read_json::<Artifact<T>>(file) {
                if a.stamp == stamp {
                    self.log(&format!("{key}: up to date"));
                    return Ok(a);
                }
            }
        }
        self.log(&format!("{key}: computing"));
        let art = Artifact { stamp, data: compute()? };
        write_json(file, &art)?;
        self.record(key, &art.stamp.input_hash, file)?;
        Ok(art)
    }

    fn require(&self, file: &Path, stage: &str) -> Result<String> {
        if !file.exists() {
            return Err(Error::MissingStage {
                path: file.display().to_string(),
                stage: format!("{stage} --geometry {}", self.geometry().name()),
            });
        }
        Ok(sha256_hex(&fs::read(file)?))
    }

    pub fn pulses_path(&self) -> PathBuf {
        self.dir().join("pulses.json")
    }

    pub fn propagators_path(&self) -> PathBuf {
        self.dir().join("propagators.json")
    }

    pub fn decomposition_path(&self) -> PathBuf {
        self.dir().join("decomposition.json")
    }

    pub fn approx_path(&self, order: usize, gain: f64) -> PathBuf {
        self.dir().join(format!("approx_k{order}_g{}.json", tag(gain)))
    }

    pub fn run202_path(&self, order: usize, gain: f64, rounds: usize) -> PathBuf {
        self.dir().join(format!("run202_k{order}_g{}_l{rounds}.json", tag(gain)))
    }

    pub fn gain_path(&self, order: usize) -> PathBuf {
        self.dir().join(format!("gain_k{order}.json"))
    }

    pub fn calibrate(&self) -> Result<Artifact<CalibrationData>> {
        self.config.validate()?;
        let input = sha256_hex(&serde_json::to_vec(&(&self.config, &self.grids))?);
        let path = self.pulses_path();
        self.cached("calibrate", "calibrate", &path, input, || {
            let start = std::time::Instant::now();
            let calibration = calibrate_device(&self.config, &self.grids)?;
            let schedules = Stabilizer::ALL
                .iter()
                .map(|&s| Ok((s, build_parity_schedule(&self.config, &calibration.table, s)?)))
                .collect::<Result<_>>()?;
            Ok(CalibrationData {
                config: self.config.clone(),
                grids: self.grids,
                calibration,
                schedules,
                elapsed_s: start.elapsed().as_secs_f64(),
            })
        })
    }

    pub fn simulate_propagators(&self) -> Result<Artifact<Vec<StabilizerChannel>>> {
        let src = self.pulses_path();
        let input = self.require(&src, "calibrate")?;
        self.cached("simulate-propagators", "simulate-propagators", &self.propagators_path(), input, || {
            let cal: Artifact<CalibrationData> = read_json(&src)?;
            cal.data
                .schedules
                .iter()
                .map(|(s, sched)| {
                    let p = propagator(&cal.data.config, sched)?;
                    Ok(StabilizerChannel {
                        stabilizer: *s,
                        ideal: sched.ideal_target.clone(),
                        average_fidelity: average_gate_fidelity(&p.channel, &sched.ideal_target)?,
                        channel: p.channel,
                        cptp: p.cptp_report,
                        step_count: p.step_count,
                        duration: sched.total_duration,
                    })
                })
                .collect()
        })
    }

    pub fn decompose(&self) -> Result<Artifact<Vec<StabilizerDecomposition>>> {
        let src = self.propagators_path();
        let input = self.require(&src, "simulate-propagators")?;
        self.cached("decompose", "decompose", &self.decomposition_path(), input, || {
            let chans: Artifact<Vec<StabilizerChannel>> = read_json(&src)?;
            chans
                .data
                .iter()
                .map(|c| {
                    let n = normal_form(&c.channel, &c.ideal)?;
                    let eff = effective_lindbladian(&n)?;
                    Ok(StabilizerDecomposition {
                        stabilizer: c.stabilizer,
                        generator_norm: frobenius_norm(&eff.generator.mat),
                        max_re_eigenvalue: eff.max_re_eigenvalue,
                        physical: eff.physical,
                        decomposition: cluster_decompose_channel(&n)?,
                    })
                })
                .collect()
        })
    }

    /// Decompositions plus ideal and actual channels, as the code simulation needs them.
    pub fn stabilizer_set(&self) -> Result<(StabilizerSet, String)> {
        let dpath = self.decomposition_path();
        let dh = self.require(&dpath, "decompose")?;
        let ppath = self.propagators_path();
        let ph = self.require(&ppath, "simulate-propagators")?;
        let dec: Artifact<Vec<StabilizerDecomposition>> = read_json(&dpath)?;
        let chans: Artifact<Vec<StabilizerChannel>> = read_json(&ppath)?;
        let find_d = |s: Stabilizer| {
            dec.data.iter().find(|d| d.stabilizer == s).ok_or_else(|| Error::Inconsistent(format!("no {} decomposition", s.name())))
        };
        let find_c = |s: Stabilizer| {
            chans.data.iter().find(|c| c.stabilizer == s).ok_or_else(|| Error::Inconsistent(format!("no {} channel", s.name())))
        };
        let (zc, xc) = (find_c(Stabilizer::ZZ)?, find_c(Stabilizer::XX)?);
        let set = StabilizerSet {
            zz_decomposition: find_d(Stabilizer::ZZ)?.decomposition.clone(),
            xx_decomposition: find_d(Stabilizer::XX)?.decomposition.clone(),
            zz_ideal: zc.ideal.clone(),
            xx_ideal: xc.ideal.clone(),
            zz_actual: zc.channel.clone(),
            xx_actual: xc.channel.clone(),
        };
        Ok((set, sha256_hex(format!("{dh}{ph}").as_bytes())))
    }

    pub fn build_approx(&self, order: usize, gain: f64) -> Result<Artifact<ApproxData>> {
        let (set, h) = self.stabilizer_set()?;
        let input = sha256_hex(format!("{h}/k{order}/g{gain}").as_bytes());
        let key = format!("build-approx k={order} g={gain}");
        self.cached("build-approx", &key, &self.approx_path(order, gain), input, || {
            let mut channels = Vec::new();
            for (s, dec, ideal) in [
                (Stabilizer::ZZ, &set.zz_decomposition, &set.zz_ideal),
                (Stabilizer::XX, &set.xx_decomposition, &set.xx_ideal),
            ] {
                let a = approx_channel(&ApproxChannelSpec::new(dec.clone(), order, gain))?;
                channels.push((s, to_standard_form(&a.channel, ideal)?, a.cptp_report));
            }
            Ok(ApproxData { order, gain, channels })
        })
    }

    pub fn run_202(&self, order: usize, gain: f64, rounds: usize) -> Result<Artifact<Run202Data>> {
        let (set, h) = self.stabilizer_set()?;
        let input = sha256_hex(format!("{h}/k{order}/g{gain}/l{rounds}").as_bytes());
        let key = format!("run-202 k={order} g={gain} l={rounds}");
        self.cached("run-202", &key, &self.run202_path(order, gain, rounds), input, || {
            let reference = Reference::new(&set, rounds)?;
            let all: Vec<usize> = (1..=rounds).collect();
            let report = evaluate_gain(&set, &reference, order, gain, &all)?;
            Ok(Run202Data { order, gain, rounds, report })
        })
    }

    /// Optimized gain, or an actionable error if `optimize-gain` has not run.
    pub fn optimized_gain(&self, order: usize) -> Result<f64> {
        let p = self.gain_path(order);
        self.require(&p, &format!("optimize-gain --order {order}"))?;
        Ok(read_json::<Artifact<GainScan>>(&p)?.data.g_opt)
    }

    pub fn optimize_gain(&self, order: usize, rounds: usize, grid: Option<Vec<f64>>) -> Result<Artifact<GainScan>> {
        let (set, h) = self.stabilizer_set()?;
        let grid = grid.unwrap_or_else(default_grid);
        let refine = default_refinement(order);
        let input = sha256_hex(serde_json::to_vec(&(&h, order, rounds, &grid, &refine))?.as_slice());
        let key = format!("optimize-gain k={order}");
        self.cached("optimize-gain", &key, &self.gain_path(order), input, || {
            let reference = Reference::new(&set, rounds)?;
            optimize_gain_with(&set, &reference, order, &grid, &refine)
        })
    }

    /// Every stage for both orders.
    pub fn run_all(&self, rounds: usize) -> Result<Vec<Artifact<GainScan>>> {
        self.calibrate()?;
        self.simulate_propagators()?;
        self.decompose()?;
        let mut out = Vec::new();
        for k in [2, 3] {
            let scan = self.optimize_gain(k, rounds, None)?;
            self.build_approx(k, scan.data.g_opt)?;
            out.push(scan);
        }
        Ok(out)
    }
}

/// Successive refinement steps: 1e-3 then 1e-4 for the highest order, none otherwise.
pub fn default_refinement(order: usize) -> Vec<f64> {
    if order >= 3 {
        vec![1e-3, 1e-4]
    } else {
        Vec::new()
    }
}

/// Parses "start:stop:step" into an inclusive grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad grid {s:?}; expected start:stop:step"))))
        .collect::<Result<_>>()?;
    let [a, b, h] = parts[..] else {
        return Err(Error::InvalidInput(format!("bad grid {s:?}; expected start:stop:step")));
    };
    if !(h > 0.0 && b >= a && a > 0.0) {
        return Err(Error::InvalidInput(format!("grid {s:?} needs 0 < start ≤ stop and step > 0")));
    }
    let n = ((b - a) / h + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((a + i as f64 * h) * 1e9).round() / 1e9).collect())
}

/// Figures emitted by `report`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// Linear geometry: per-input and averaged metrics vs gain at the final round.
    GainLinear,
    /// State-averaged metrics vs round at the optimal gain, both geometries.
    Rounds,
    /// State-averaged honesty and accuracy vs gain, both geometries, both averaging variants.
    HonestyAccuracy,
    /// Triangle geometry counterpart of the linear gain figure.
    GainTriangle,
}

impl Figure {
    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            4 => Ok(Figure::GainLinear),
            5 => Ok(Figure::Rounds),
            6 => Ok(Figure::HonestyAccuracy),
            7 => Ok(Figure::GainTriangle),
            _ => Err(Error::InvalidInput(format!("figure {n} is not available; choose 4, 5, 6 or 7"))),
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Figure::GainLinear | Figure::GainTriangle => &[
                "geometry", "order", "round", "gain", "input", "d_ideal_actual", "d_ideal_approx", "d_actual_approx", "honesty",
                "accuracy", "honesty_of_means", "accuracy_of_means", "is_g_opt",
            ],
            Figure::Rounds => &[
                "geometry", "order", "g_opt", "round", "d_ideal_actual", "d_ideal_approx", "d_actual_approx", "honesty", "accuracy",
                "honesty_of_means", "accuracy_of_means", "min_honesty",
            ],
            Figure::HonestyAccuracy => &[
                "geometry", "order", "gain", "honesty", "accuracy", "honesty_of_means", "accuracy_of_means", "min_honesty",
            ],
        }
    }
}

fn load_scan(out_dir: &Path, geometry: Geometry, order: usize) -> Result<GainScan> {
    let p = out_dir.join(geometry.name()).join(format!("gain_k{order}.json"));
    if !p.exists() {
        return Err(Error::MissingStage {
            path: p.display().to_string(),
            stage: format!("optimize-gain --geometry {} --order {order}", geometry.name()),
        });
    }
    Ok(read_json::<Artifact<GainScan>>(&p)?.data)
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Writes the CSV of a figure from the optimize-gain artifacts under `out_dir`.
pub fn report<W: std::io::Write>(out_dir: &Path, figure: Figure, sink: W) -> Result<usize> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(figure.columns())?;
    let mut rows = 0;
    match figure {
        Figure::GainLinear | Figure::GainTriangle => {
            let geometry = if figure == Figure::GainLinear { Geometry::Linear } else { Geometry::Triangle };
            for order in [2, 3] {
                let scan = load_scan(out_dir, geometry, order)?;
                for r in &scan.scan {
                    let round = scan.rounds;
                    let opt = if r.gain == scan.g_opt { "1" } else { "0" };
                    for m in r.per_state.iter().filter(|m| m.round == round) {
                        w.write_record([
                            geometry.name().to_string(),
                            order.to_string(),
                            round.to_string(),
                            num(r.gain),
                            m.input.label().to_string(),
                            num(m.d_ideal_actual),
                            num(m.d_ideal_approx),
                            num(m.d_actual_approx),
                            num(m.honesty),
                            num(m.accuracy),
                            num(m.honesty),
                            num(m.accuracy),
                            opt.to_string(),
                        ])?;
                        rows += 1;
                    }
                    let a = r.average_at(round).ok_or_else(|| Error::Inconsistent("scan lacks the objective round".into()))?;
                    w.write_record([
                        geometry.name().to_string(),
                        order.to_string(),
                        round.to_string(),
                        num(r.gain),
                        "average".to_string(),
                        num(a.d_ideal_actual),
                        num(a.d_ideal_approx),
                        num(a.d_actual_approx),
                        num(a.honesty),
                        num(a.accuracy),
                        num(a.honesty_of_means),
                        num(a.accuracy_of_means),
                        opt.to_string(),
                    ])?;
                    rows += 1;
                }
            }
        }
        Figure::Rounds => {
            for geometry in [Geometry::Linear, Geometry::Triangle] {
                for order in [2, 3] {
                    let scan = load_scan(out_dir, geometry, order)?;
                    for a in &scan.report.averages {
                        w.write_record([
                            geometry.name().to_string(),
                            order.to_string(),
                            num(scan.g_opt),
                            a.round.to_string(),
                            num(a.d_ideal_actual),
                            num(a.d_ideal_approx),
                            num(a.d_actual_approx),
                            num(a.honesty),
                            num(a.accuracy),
                            num(a.honesty_of_means),
                            num(a.accuracy_of_means),
                            num(a.min_honesty),
                        ])?;
                        rows += 1;
                    }
                }
            }
        }
        Figure::HonestyAccuracy => {
            for geometry in [Geometry::Linear, Geometry::Triangle] {
                for order in [2, 3] {
                    let scan = load_scan(out_dir, geometry, order)?;
                    for r in &scan.scan {
                        let a = r.average_at(scan.rounds).ok_or_else(|| Error::Inconsistent("scan lacks the objective round".into()))?;
                        w.write_record([
                            geometry.name().to_string(),
                            order.to_string(),
                            num(r.gain),
                            num(a.honesty),
                            num(a.accuracy),
                            num(a.honesty_of_means),
                            num(a.accuracy_of_means),
                            num(a.min_honesty),
                        ])?;
                        rows += 1;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(rows)
}

/// Number of per-input rows plus the average row per gain point.
pub fn rows_per_gain() -> usize {
    Bell::ALL.len() + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0.8:1.4:0.01").unwrap();
        assert_eq!(g.len(), 61);
        assert_eq!(g[0], 0.8);
        assert_eq!(*g.last().unwrap(), 1.4);
        assert_eq!(g, default_grid());
        assert!(parse_grid("1:0.5:0.1").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn missing_stage_names_producer() {
        let dir = tempfile::tempdir().unwrap();
        let p = Pipeline::new(dir.path(), DeviceConfig::reference(Geometry::Linear));
        let err = p.decompose().unwrap_err().to_string();
        assert!(err.contains("simulate-propagators --geometry linear"), "{err}");
        let err = report(dir.path(), Figure::Rounds, Vec::new()).unwrap_err().to_string();
        assert!(err.contains("optimize-gain"), "{err}");
    }

    #[test]
    fn figure_numbers() {
        assert_eq!(Figure::from_number(4).unwrap(), Figure::GainLinear);
        assert!(Figure::from_number(3).is_err());
        assert_eq!(Figure::GainLinear.columns().len(), Figure::GainTriangle.columns().len());
    }
}
