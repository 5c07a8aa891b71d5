use noise_cluster::calibrate::{average_gate_fidelity, cnot_pairs, Axis, GateRecipe, PulseTable};
use noise_cluster::device::{DeviceConfig, Geometry};
use noise_cluster::propagate::propagator;

fn main() -> noise_cluster::Result<()> {
    let cfg = DeviceConfig::reference(Geometry::Linear);
    // nominal amplitudes from pulse areas, before any calibration
    let table = PulseTable::nominal(&cfg, &cnot_pairs());
    for recipe in [
        GateRecipe::rotation(1, Axis::X, std::f64::consts::FRAC_PI_2),
        GateRecipe::rotation(2, Axis::X, std::f64::consts::PI),
        GateRecipe::hadamard(3),
        GateRecipe::echoed_cr(3, 1),
    ] {
        let sched = recipe.schedule(&cfg, &table)?;
        let p = propagator(&cfg, &sched)?;
        let f = average_gate_fidelity(&p.channel, &sched.ideal_target)?;
        println!("{:<14} {:>4.0} ns  {:>6} steps  average fidelity {:.5}", recipe.name, sched.total_duration * 1e9, p.step_count, f);
    }
    Ok(())
}
