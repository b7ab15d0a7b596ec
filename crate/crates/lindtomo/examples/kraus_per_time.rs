//! Fit an independent Kraus channel at every delay time of a synthetic
//! dataset and compare each fitted channel to the exact propagator channel
//! via the diamond norm.

use lindtomo::dynamics::{
    choi_of_kraus, choi_of_superop, diamond_distance, liouvillian, restricted_jump_ops,
    LindbladModel,
};
use lindtomo::krausfit::fit_kraus;
use lindtomo::linalg::CMat;
use lindtomo::optimize::OptimConfig;
use lindtomo::spamfit::SpamEstimate;
use lindtomo::synth::{generate, SpamTruth};

fn main() -> lindtomo::Result<()> {
    let jumps = restricted_jump_ops(1)?;
    let model = LindbladModel::from_jumps(
        CMat::zeros(2, 2),
        &[(0.09, jumps[0].clone()), (0.06, jumps[1].clone())],
    )?;
    let times = [0.0, 2.0, 5.0, 10.0, 20.0];
    let ds = generate(&model, &SpamTruth::ideal(1)?, &times, 5_000, 2)?;

    let spam = SpamEstimate::ideal(1)?;
    let config = OptimConfig {
        n_starts: 3,
        ..OptimConfig::default()
    };
    let est = fit_kraus(&ds, &spam, &config, false)?;
    for (t, why) in &est.failures {
        println!("t = {t:>5.1} us: FAILED ({why})");
    }

    let sup = liouvillian(&model)?;
    println!("{:>8} {:>12} {:>16} {:>14}", "t_us", "loglike", "completeness", "diamond_to_truth");
    for e in &est.entries {
        let truth_choi = choi_of_superop(&sup, e.time_us)?;
        let fit_choi = choi_of_kraus(&e.kraus)?;
        let d = diamond_distance(&fit_choi, &truth_choi)?;
        println!(
            "{:>8.1} {:>12.1} {:>16.2e} {:>14.4}",
            e.time_us,
            e.loglike,
            e.kraus.completeness_error(),
            d
        );
    }
    Ok(())
}
