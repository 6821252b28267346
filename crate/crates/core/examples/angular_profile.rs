//! Loss probability against the collision-axis angle θ for the globally and
//! partially repulsive drives at I/I_sat = 100, Δ = 1.5 f_trap.

use std::f64::consts::PI;
use tweezer_sim::collision::{angular_profile, presets, AtomicSpecies, RadialGrid, TrapConfig};

fn main() {
    let trap = TrapConfig::default();
    let species = AtomicSpecies::ytterbium_174();
    let detuning = 1.5 * trap.depth_hz;
    let thetas: Vec<f64> = (0..=18).map(|k| k as f64 * PI / 18.0).collect();
    let drives = [
        ("global", presets::globally_repulsive(100.0, detuning)),
        ("partial", presets::partially_repulsive(100.0, detuning)),
    ];
    let profiles: Vec<_> = drives
        .iter()
        .map(|(_, d)| angular_profile(d, &species, &trap, &thetas, 0.0, &RadialGrid::default()).expect("profile"))
        .collect();

    println!("{:>6} {:>10} {:>10}", "theta", drives[0].0, drives[1].0);
    for (k, theta) in thetas.iter().enumerate() {
        println!("{:>6.0} {:>10.4} {:>10.4}", theta.to_degrees(), profiles[0][k].1, profiles[1][k].1);
    }
}
