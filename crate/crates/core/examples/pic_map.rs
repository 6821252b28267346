//! P_ic maps for the three polarization/field regimes.

use tweezer_sim::collision::{pic_sweep, presets, AtomicSpecies, QuadratureSpec, TrapConfig};

fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let yb = AtomicSpecies::ytterbium_174();
    let trap = TrapConfig::default();
    let quadrature = QuadratureSpec {
        max_refinements: 0,
        ..QuadratureSpec::default()
    };
    let s = geomspace(10.0, 1000.0, 12);
    let d: Vec<f64> = (0..10).map(|j| 0.1 + 0.2 * j as f64).collect();

    for (name, drive) in [
        ("globally repulsive", presets::globally_repulsive(1.0, 1.0)),
        ("partially repulsive", presets::partially_repulsive(1.0, 1.0)),
        ("sigma- at 8.6 G", presets::sigma_minus_high_field(1.0, 1.0)),
    ] {
        let map = pic_sweep(&drive, &s, &d, &yb, &trap, &quadrature)?;
        let peak = map.argmax.expect("at least one valid cell");
        println!(
            "{name}: max P_ic = {:.4} at I/I_sat = {:.1}, delta/f_trap = {:.2}",
            peak.value, peak.saturation, peak.delta_over_ftrap
        );
        for (j, col) in map.column_peaks().iter().enumerate() {
            if let Some(p) = col {
                println!("  delta/f_trap {:.2}: best {:.4} at s = {:.1}", d[j], p.value, p.saturation);
            }
        }
        if !map.failures.is_empty() {
            println!("  {} failed cells", map.failures.len());
        }
    }
    Ok(())
}
