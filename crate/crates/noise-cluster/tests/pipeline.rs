use std::fs;

use noise_cluster::calibrate::ScanGrids;
use noise_cluster::device::{DeviceConfig, Geometry};
use noise_cluster::pipeline::{parse_grid, report, rows_per_gain, Figure, Pipeline, RunManifest};
use noise_cluster::Error;

#[test]
fn stages_are_idempotent_and_reports_follow_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = Pipeline::new(dir.path(), DeviceConfig::reference(Geometry::Linear));
    p.grids = ScanGrids::coarse();

    assert!(matches!(p.simulate_propagators(), Err(Error::MissingStage { .. })));

    let cal = p.calibrate().unwrap();
    let chans = p.simulate_propagators().unwrap();
    p.decompose().unwrap();
    for c in &chans.data {
        assert!(c.cptp.pass, "{:?}", c.cptp);
        assert!(c.average_fidelity > 0.9 && c.average_fidelity < 1.0);
    }

    let rounds = 2;
    let g2 = p.optimize_gain(2, rounds, Some(parse_grid("1.0:1.4:0.1").unwrap())).unwrap();
    let g3 = p.optimize_gain(3, rounds, Some(parse_grid("1.0:1.04:0.02").unwrap())).unwrap();
    assert_eq!(p.optimized_gain(2).unwrap(), g2.data.g_opt);
    let run = p.run_202(3, g3.data.g_opt, rounds).unwrap();
    assert_eq!(run.data.report.averages.len(), rounds);

    // a second pass reuses every artifact byte for byte
    let snapshot = |name: &str| fs::read(p.dir().join(name)).unwrap();
    let before: Vec<_> = ["pulses.json", "propagators.json", "decomposition.json", "gain_k2.json"].iter().map(|n| snapshot(n)).collect();
    assert_eq!(p.calibrate().unwrap().stamp, cal.stamp);
    p.simulate_propagators().unwrap();
    p.decompose().unwrap();
    p.optimize_gain(2, rounds, Some(parse_grid("1.0:1.4:0.1").unwrap())).unwrap();
    let after: Vec<_> = ["pulses.json", "propagators.json", "decomposition.json", "gain_k2.json"].iter().map(|n| snapshot(n)).collect();
    assert!(before == after);

    let manifest: RunManifest = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    for key in ["linear/calibrate", "linear/simulate-propagators", "linear/decompose", "linear/optimize-gain k=2"] {
        assert!(manifest.stages.contains_key(key), "{key} missing from manifest");
    }

    let mut a = Vec::new();
    let rows = report(dir.path(), Figure::GainLinear, &mut a).unwrap();
    let mut b = Vec::new();
    report(dir.path(), Figure::GainLinear, &mut b).unwrap();
    assert_eq!(a, b);
    let n_gains = g2.data.scan.len() + g3.data.scan.len();
    assert_eq!(rows, n_gains * rows_per_gain());
    let mut rdr = csv::Reader::from_reader(a.as_slice());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, Figure::GainLinear.columns());
    let records: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), rows);
    assert_eq!(records.iter().filter(|r| &r[4] == "average").count(), n_gains);
    assert_eq!(records.iter().filter(|r| &r[12] == "1").count(), 2 * rows_per_gain());

    // the triangle artifacts are absent, so the cross-geometry figures name the missing stage
    let err = report(dir.path(), Figure::Rounds, Vec::new()).unwrap_err();
    assert!(err.to_string().contains("--geometry triangle"), "{err}");
}
