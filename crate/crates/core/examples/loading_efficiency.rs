//! Single-atom loading with and without blue-detuned enhancement, array-size
//! independence, and MOT overlap uniformity with a fixed or rotating cloud.

use tweezer_sim::loading::{
    array_efficiency, coefficient_of_variation, exact_efficiency, loading_efficiency, mot_overlap_profile,
    LoadingParams, MotMode,
};

const P_IC: f64 = 0.517;

fn main() {
    let params = LoadingParams::default();
    let mc = loading_efficiency(&params, P_IC).expect("monte carlo");
    let exact = exact_efficiency(&params, P_IC).expect("exact");
    let red_only = exact_efficiency(&params, 0.0).expect("baseline");
    println!(
        "enhanced: MC {:.4} [{:.4}, {:.4}]  exact {exact:.4}   red only: {red_only:.4}",
        mc.p_single, mc.lower, mc.upper
    );

    for n in [16, 144, 1024] {
        let a = array_efficiency(&params, P_IC, &vec![params.mean_occupancy; n], 20).expect("array");
        println!(
            "{n:>5} sites: {:.4} [{:.4}, {:.4}]  exact {:.4}",
            a.estimate.p_single,
            a.estimate.lower,
            a.estimate.upper,
            a.exact_mean()
        );
    }

    for (name, mode) in [("fixed", MotMode::Fixed), ("rotating", MotMode::Rotating { radius: 80e-6 })] {
        let lambda = mot_overlap_profile(61, 49, 2.8e-6, 60e-6, mode, params.mean_occupancy).expect("profile");
        println!("{name:>8} MOT: occupancy CV {:.3}", coefficient_of_variation(&lambda));
    }
}
