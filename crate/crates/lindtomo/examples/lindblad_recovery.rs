//! Fit a time-independent Hamiltonian + Lindblad model to synthetic shot
//! counts and compare the recovered jump rates and detuning to the truth.

use lindtomo::dynamics::{jumps_from_lindblad, restricted_jump_ops, LindbladModel};
use lindtomo::lindfit::{deviation_delta, fit_lindblad, FitMode};
use lindtomo::linalg::{c, CMat};
use lindtomo::optimize::OptimConfig;
use lindtomo::spamfit::SpamEstimate;
use lindtomo::synth::{generate, SpamTruth};

fn main() -> lindtomo::Result<()> {
    let jumps = restricted_jump_ops(1)?;
    let mut h = CMat::zeros(2, 2);
    h[(1, 1)] = c(0.8, 0.0); // detuning, rad/us
    let truth = LindbladModel::from_jumps(
        h,
        &[(0.09, jumps[0].clone()), (0.06, jumps[1].clone())],
    )?;
    // Irregular spacing so no detuning alias fits every sample equally well.
    let times = vec![0.0, 0.3, 0.7, 1.3, 2.1, 3.4, 5.0, 6.6, 8.0];
    let ds = generate(&truth, &SpamTruth::ideal(1)?, &times, 5_000, 5)?;

    let spam = SpamEstimate::ideal(1)?;
    let config = OptimConfig {
        n_starts: 3,
        ..OptimConfig::default()
    };
    let est = fit_lindblad(&ds, &spam, FitMode::Restricted, &config)?;
    let fitted = jumps_from_lindblad(&est.model)?;
    let mut rates = fitted.rates.clone();
    rates.sort_by(|a, b| b.partial_cmp(a).unwrap());
    println!("truth rates:  dephasing 0.090, damping 0.060 MHz");
    println!("fitted rates: {:.3} and {:.3} MHz", rates[0], rates[1]);
    let hf = est.model.hamiltonian();
    println!(
        "detuning: truth 0.800, fitted {:.3} rad/us",
        (hf[(1, 1)] - hf[(0, 0)]).re
    );
    for t in [10.0, 40.0, 80.0] {
        println!(
            "delta(fit, truth) at {t:>5.1} us: {:.4}",
            deviation_delta(&est.model, &truth, t)?
        );
    }
    Ok(())
}
