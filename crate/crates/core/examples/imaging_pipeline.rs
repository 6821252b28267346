//! Synthetic fluorescence imaging: classification accuracy and the
//! three-image estimates with growing out-of-plane background.

use tweezer_sim::imaging::{analyze, classification_accuracy, simulate_sequence, ImagingScenario};

fn main() {
    let base = ImagingScenario::default();
    for scale in [0.0, 1.0, 10.0] {
        let scenario = ImagingScenario {
            background_peak: base.background_peak * scale,
            ..base.clone()
        };
        let seq = simulate_sequence(&scenario, 7).expect("synthesis");
        let a = analyze(&seq.frames, &seq.calibration, &seq.sites, &scenario.filter).expect("analysis");
        let e = a.estimate;
        println!(
            "background x{scale:>4}: accuracy {:.4}  estimated F {:.4}  f_fp {:.4}  f_fn {:.4}  loss {:.4}  threshold {:.2} (means {:.2}, {:.2})",
            classification_accuracy(&a.occupancy, &seq.truth),
            e.fidelity,
            e.false_positive,
            e.false_negative,
            e.loss,
            a.threshold.threshold,
            a.threshold.means[0],
            a.threshold.means[1],
        );
    }
}
