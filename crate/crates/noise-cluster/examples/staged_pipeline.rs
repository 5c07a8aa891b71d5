use noise_cluster::calibrate::ScanGrids;
use noise_cluster::device::{DeviceConfig, Geometry};
use noise_cluster::pipeline::{parse_grid, report, Figure, Pipeline};

fn main() -> noise_cluster::Result<()> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("noise-cluster-example"));
    let mut p = Pipeline::new(&out, DeviceConfig::reference(Geometry::Linear));
    p.grids = ScanGrids::coarse();
    p.verbose = true;
    p.calibrate()?;
    for c in p.simulate_propagators()?.data {
        println!("{} average fidelity {:.4}", c.stabilizer.name(), c.average_fidelity);
    }
    p.decompose()?;
    let rounds = 4;
    for (k, grid) in [(2, "0.9:1.4:0.05"), (3, "0.98:1.04:0.01")] {
        let s = p.optimize_gain(k, rounds, Some(parse_grid(grid)?))?;
        println!("order {k}: g_opt = {}", s.data.g_opt);
    }
    // running again reuses every stage
    p.calibrate()?;
    report(&out, Figure::GainLinear, std::io::stdout().lock())?;
    Ok(())
}
