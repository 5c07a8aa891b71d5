use std::time::Instant;

use noise_cluster::calibrate::{average_gate_fidelity, build_parity_schedule, calibrate_device, ScanGrids, Stabilizer};
use noise_cluster::device::{DeviceConfig, Geometry};
use noise_cluster::propagate::propagator;

fn main() -> noise_cluster::Result<()> {
    let geometry: Geometry = std::env::args().nth(1).unwrap_or_else(|| "linear".into()).parse()?;
    let coarse = std::env::args().any(|a| a == "--coarse");
    let cfg = DeviceConfig::reference(geometry);
    let grids = if coarse { ScanGrids::coarse() } else { ScanGrids::default() };
    let t = Instant::now();
    let cal = calibrate_device(&cfg, &grids)?;
    for r in &cal.results {
        println!("{:<16} f = {:.6} GHz  A = {:.4e} rad/s  F = {:.8}", r.name, r.freq_hz / 1e9, r.amplitude, r.achieved_fidelity);
    }
    println!("calibration took {:.1} s", t.elapsed().as_secs_f64());
    for s in Stabilizer::ALL {
        let sched = build_parity_schedule(&cfg, &cal.table, s)?;
        let p = propagator(&cfg, &sched)?;
        let f = average_gate_fidelity(&p.channel, &sched.ideal_target)?;
        println!("{} stabilizer: duration {:.0} ns, average fidelity {:.4}", s.name(), sched.total_duration * 1e9, f);
    }
    Ok(())
}
