//! Fit state-preparation and measurement errors from time-zero counts and
//! compare against the ground truth: a thermal initial state (weight 0.88)
//! and a 4% symmetric readout error.

use lindtomo::dynamics::LindbladModel;
use lindtomo::linalg::{c, CMat};
use lindtomo::optimize::OptimConfig;
use lindtomo::qcore::{DensityMatrix, Povm};
use lindtomo::spamfit::{fit_spam, thermal_fit};
use lindtomo::synth::{generate, SpamTruth};

fn main() -> lindtomo::Result<()> {
    let m0 = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.04, 0.0)]);
    let truth = SpamTruth {
        rho0: DensityMatrix::thermal(0.88)?,
        povm: Povm::new(vec![m0.clone(), CMat::identity(2, 2) - &m0])?,
    };
    let idle = LindbladModel::new(CMat::zeros(2, 2), CMat::zeros(3, 3))?;
    let ds = generate(&idle, &truth, &[0.0], 10_000, 1)?;

    let est = fit_spam(&ds.records, &OptimConfig::default())?;
    let (a, dist) = thermal_fit(&est.rho0)?;
    println!("thermal weight: fitted {a:.4} (truth 0.88)");
    println!("thermal-fit distance: {dist:.4}");
    println!(
        "readout error M0[1,1]: fitted {:.4} (truth 0.04)",
        est.povm.elements()[0][(1, 1)].re
    );
    println!(
        "log-likelihood {:.1} after {} iterations over {} starts",
        est.loglike, est.report.iterations, est.report.starts_tried
    );
    Ok(())
}
