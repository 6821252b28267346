//! Weighted Gerchberg–Saxton mask for a 10 × 10 tweezer array.

use tweezer_sim::hologram::{gaussian_incident, run_wgs, target_grid, HologramState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (h, w) = (512, 512);
    let spots = target_grid(10, 10, 12, (h, w))?;
    let state = HologramState::new(h, w, spots, gaussian_incident(h, w, 0.45), 0)?;
    let out = run_wgs(state, 100, 0.98)?;

    for (k, u) in out.history.iter().enumerate().step_by(5) {
        println!("iteration {k:3}: uniformity {u:.4}");
    }
    println!(
        "best mask after {} iterations: uniformity {:.4}, efficiency {:.3}, converged {}",
        out.best_iteration, out.report.uniformity, out.report.efficiency, out.converged
    );
    println!("largest Parseval deviation {:.2e}", out.max_parseval_error);
    Ok(())
}
