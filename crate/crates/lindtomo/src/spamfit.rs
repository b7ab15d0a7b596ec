//! Maximum-likelihood estimation of state-preparation and measurement
//! errors from the counts recorded at time zero.
//!
//! The initial state `rho0` and the POVM are fit jointly: `rho0` and the
//! first `n_out - 1` POVM elements are Cholesky parameterized (PSD by
//! construction), the last element is `I - sum` of the others, and its
//! positivity is enforced by a ramped hinge penalty.

use rayon::prelude::*;

use crate::linalg::{c, dag, min_eig_hermitian, CMat};
use crate::optimize::{
    default_starts, golden_section_min, maximize, Block, BlockKind, FitReport, OptimConfig,
    ParamSpace, StartKind,
};
use crate::qcore::{outcome_prob_raw, trace_distance, DensityMatrix, Povm};
use crate::synth::SequenceRecord;
use crate::{Error, Result};

/// Joint SPAM estimate.
#[derive(Debug, Clone)]
pub struct SpamEstimate {
    pub rho0: DensityMatrix,
    pub povm: Povm,
    pub loglike: f64,
    pub report: FitReport,
}

impl SpamEstimate {
    /// Perfect SPAM (ground state, projective z measurement) as a stand-in
    /// estimate, e.g. when fitting channels without a SPAM fit.
    pub fn ideal(n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        Ok(Self {
            rho0: DensityMatrix::basis_state(dim, 0)?,
            povm: Povm::projective_z(n_qubits),
            loglike: 0.0,
            report: FitReport {
                best_loglike: 0.0,
                params: vec![],
                starts_tried: 0,
                converged: true,
                iterations: 0,
                wall_time_s: 0.0,
            },
        })
    }
}

/// Parameter layout: `rho0` followed by the first `n_out - 1` POVM elements.
pub fn param_space(n_qubits: usize) -> ParamSpace {
    let dim = 1usize << n_qubits;
    let mut blocks = vec![Block::new("rho0", BlockKind::PsdCholesky, dim)];
    for o in 0..dim - 1 {
        blocks.push(Block::new(
            &format!("povm_{o}"),
            BlockKind::PsdCholesky,
            dim,
        ));
    }
    ParamSpace::new(blocks)
}

/// Ideal-SPAM starting point, slightly smoothed toward the maximally mixed
/// state so every outcome starts with nonzero probability.
pub fn physics_start(n_qubits: usize) -> Result<Vec<f64>> {
    let dim = 1usize << n_qubits;
    let space = param_space(n_qubits);
    let mut x = vec![0.0; space.len()];
    let mixed = CMat::identity(dim, dim).scale(1.0 / dim as f64);
    let ground = DensityMatrix::basis_state(dim, 0)?;
    let rho = ground.matrix().scale(0.95) + mixed.scale(0.05);
    space.encode_psd(&mut x, 0, &rho)?;
    for o in 0..dim - 1 {
        let mut proj = CMat::zeros(dim, dim);
        proj[(o, o)] = c(1.0, 0.0);
        let el = proj.scale(0.9) + CMat::identity(dim, dim).scale(0.1 / dim as f64);
        space.encode_psd(&mut x, o + 1, &el)?;
    }
    Ok(x)
}

/// Decode a parameter vector into `(rho0, povm_elements)`; the last element
/// is `I - sum` and may be slightly non-PSD during optimization.
pub fn decode(space: &ParamSpace, x: &[f64], dim: usize) -> Result<(CMat, Vec<CMat>)> {
    let rho = space.decode_psd(x, 0, true)?;
    let mut elements = Vec::with_capacity(dim);
    let mut sum = CMat::zeros(dim, dim);
    for o in 0..dim - 1 {
        let el = space.decode_psd(x, o + 1, false)?;
        sum += &el;
        elements.push(el);
    }
    elements.push(CMat::identity(dim, dim) - sum);
    Ok((rho, elements))
}

/// Multinomial log-likelihood of the time-zero records under a SPAM model.
/// Probabilities are clamped below at 1e-12.
pub fn loglike_spam(
    rho0: &CMat,
    elements: &[CMat],
    records: &[SequenceRecord],
) -> Result<f64> {
    let mut total = 0.0;
    for rec in records {
        let u = rec.basis.unitary() * rec.prep.unitary();
        let rho_meas = &u * rho0 * dag(&u);
        for (o, el) in elements.iter().enumerate() {
            let n = rec.counts[o];
            if n == 0 {
                continue;
            }
            let p = outcome_prob_raw(&rho_meas, el)?.max(1e-12);
            total += n as f64 * p.ln();
        }
    }
    Ok(total)
}

/// Fit `rho0` and the POVM from time-zero records.
///
/// The hinge penalty `barrier * sum min(0, eig(I - sum M_o))^2` is ramped by
/// `barrier_growth` until the decoded last element is PSD within 1e-8.
pub fn fit_spam(records: &[SequenceRecord], config: &OptimConfig) -> Result<SpamEstimate> {
    let t0_records: Vec<SequenceRecord> = records
        .iter()
        .filter(|r| r.time_us == 0.0)
        .cloned()
        .collect();
    if t0_records.is_empty() {
        return Err(Error::InsufficientData(
            "no time-zero records for SPAM estimation".into(),
        ));
    }
    let n_qubits = t0_records[0].prep.n_qubits();
    let dim = 1usize << n_qubits;
    let space = param_space(n_qubits);
    let starts = default_starts(
        &space,
        &StartKind::Spam { n_qubits },
        config.n_starts,
        config.seed,
    )?;

    let mut barrier = config.barrier_init;
    let mut starts = starts;
    let mut last_result: Option<(CMat, Vec<CMat>, FitReport, f64)> = None;
    for _round in 0..8 {
        let space_ref = &space;
        let recs = &t0_records;
        let objective = move |x: &[f64]| -> f64 {
            let (rho, elements) = match decode(space_ref, x, dim) {
                Ok(v) => v,
                Err(_) => return -1e12,
            };
            let wmin = min_eig_hermitian(elements.last().unwrap()).unwrap_or(-1.0);
            let penalty = if wmin < 0.0 { barrier * wmin * wmin } else { 0.0 };
            loglike_spam(&rho, &elements, recs).unwrap_or(-1e12) - penalty
        };
        let report = maximize(&objective, space.len(), &starts, config)?;
        let (rho, elements) = decode(&space, &report.params, dim)?;
        let wmin = min_eig_hermitian(elements.last().unwrap())?;
        if wmin >= -1e-8 {
            return finish_spam(rho, elements, report, &t0_records);
        }
        // Re-seed the next round from this round's best point.
        starts = vec![report.params.clone()];
        barrier *= config.barrier_growth;
        last_result = Some((rho, elements, report, wmin));
    }
    // Penalty ramping stalls once the violation drops below what the
    // finite-difference gradient can resolve. If the residual after all
    // rounds is small, repair it instead of failing: clamp the last element
    // to the PSD cone and restore exact completeness.
    let (rho, elements, report, wmin) = last_result.expect("at least one round ran");
    if wmin >= -1e-4 {
        return finish_spam(rho, elements, report, &t0_records);
    }
    Err(Error::Optimizer(format!(
        "POVM completeness violated (min eigenvalue {wmin:.2e}) after barrier ramp"
    )))
}

/// Clamp the residual negativity of the closing POVM element, restore exact
/// completeness, fix the SPAM gauge, and assemble the estimate.
fn finish_spam(
    rho: CMat,
    mut elements: Vec<CMat>,
    report: FitReport,
    t0_records: &[SequenceRecord],
) -> Result<SpamEstimate> {
    let last = elements.pop().unwrap();
    elements.push(clamp_psd(&last)?);
    let elements = symmetric_normalize(elements)?;
    let (rho, elements) = fix_gauge(rho, elements)?;
    let loglike = loglike_spam(&rho, &elements, t0_records)?;
    Ok(SpamEstimate {
        rho0: DensityMatrix::new(rho)?,
        povm: Povm::new(elements)?,
        loglike,
        report,
    })
}

/// Time-zero data determines state and measurement only jointly: the
/// depolarization-like reparameterization
/// `rho -> (1 - mu) rho + mu I/d`, `M_i -> (M_i - mu Tr[M_i] I/d)/(1 - mu)`
/// leaves every outcome probability unchanged for all preparations and
/// bases, so the likelihood is exactly flat along it and the optimizer can
/// land anywhere on the orbit. Fix the gauge at the extremal-measurement
/// representative: push `mu` to the positive-semidefiniteness boundary, so
/// the POVM is as sharp as it can be and the flat direction is carried by
/// the state.
fn fix_gauge(rho: CMat, elements: Vec<CMat>) -> Result<(CMat, Vec<CMat>)> {
    let d = rho.nrows();
    let df = d as f64;
    let mut mu = f64::INFINITY;
    for m in &elements {
        let t = m.trace().re;
        if t <= 1e-9 {
            // A null element already sits on the boundary.
            return Ok((rho, elements));
        }
        let wmin = crate::linalg::eigh(m)?.0[0].max(0.0);
        mu = mu.min(df * wmin / t);
    }
    if !(1e-12..=0.999).contains(&mu) {
        return Ok((rho, elements));
    }
    let id = CMat::identity(d, d);
    let rho = rho.scale(1.0 - mu) + id.scale(mu / df);
    let elements = elements
        .into_iter()
        .map(|m| {
            let t = m.trace().re;
            clamp_psd(&((m - id.scale(mu * t / df)).unscale(1.0 - mu)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rho, symmetric_normalize(elements)?))
}

/// Restore exact POVM completeness: `M_i -> S^{-1/2} M_i S^{-1/2}` with
/// `S = sum M_i`. Preserves positivity; the identity sum holds to machine
/// precision afterwards.
fn symmetric_normalize(elements: Vec<CMat>) -> Result<Vec<CMat>> {
    let dim = elements[0].nrows();
    let s: CMat = elements
        .iter()
        .fold(CMat::zeros(dim, dim), |acc, m| acc + m);
    let (vals, vecs) = crate::linalg::eigh(&s)?;
    if vals.iter().any(|&w| w <= 1e-10) {
        return Err(Error::InvalidModel(
            "POVM element sum is singular; cannot normalize".into(),
        ));
    }
    let inv_sqrt = &vecs
        * CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            vals.len(),
            vals.iter().map(|&w| c(1.0 / w.sqrt(), 0.0)),
        ))
        * dag(&vecs);
    Ok(elements
        .into_iter()
        .map(|m| &inv_sqrt * m * &inv_sqrt)
        .collect())
}

/// Project a nearly-PSD Hermitian matrix onto the PSD cone.
fn clamp_psd(m: &CMat) -> Result<CMat> {
    let (vals, vecs) = crate::linalg::eigh(m)?;
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&w| c(w.max(0.0), 0.0)),
    ));
    Ok(&vecs * d * dag(&vecs))
}

/// Worst-case trace distance between the classical outputs of two
/// measurements: `max_rho D(E_a(rho), E_b(rho))` where `E` maps a state to
/// its outcome distribution. Maximized over Cholesky-parameterized inputs.
pub fn measurement_channel_distance(a: &Povm, b: &Povm, config: &OptimConfig) -> Result<f64> {
    use crate::qcore::{cholesky_decode, cholesky_encode, CholeskyParam};
    if a.dim() != b.dim() || a.n_outcomes() != b.n_outcomes() {
        return Err(Error::DimMismatch(
            "measurement_channel_distance: POVMs differ in shape".into(),
        ));
    }
    let dim = a.dim();
    let n_params = dim * dim;
    let (a, b) = (a.clone(), b.clone());
    let objective = move |x: &[f64]| -> f64 {
        let p = match CholeskyParam::new(dim, x.to_vec()) {
            Ok(p) => p,
            Err(_) => return -1e6,
        };
        let rho = match cholesky_decode(&p, true) {
            Ok(r) => r,
            Err(_) => return -1e6,
        };
        let mut dist = 0.0;
        for (ea, eb) in a.elements().iter().zip(b.elements()) {
            let pa = outcome_prob_raw(&rho, ea).unwrap_or(0.0);
            let pb = outcome_prob_raw(&rho, eb).unwrap_or(0.0);
            dist += 0.5 * (pa - pb).abs();
        }
        dist
    };
    let mixed = CMat::identity(dim, dim).scale(1.0 / dim as f64);
    let base = cholesky_encode(&mixed)?.reals;
    let starts = crate::optimize::perturbed_starts(&base, config.n_starts.max(6), config.seed, 0.4);
    let report = maximize(&objective, n_params, &starts, config)?;
    Ok(report.best_loglike)
}

/// Best thermal approximation of a single-qubit state: the weight `a`
/// minimizing the trace distance to `a|0><0| + (1-a)|1><1|`, found by
/// golden-section search to 1e-4.
pub fn thermal_fit(rho: &DensityMatrix) -> Result<(f64, f64)> {
    if rho.dim() != 2 {
        return Err(Error::Unsupported("thermal_fit is single-qubit".into()));
    }
    let f = |a: f64| -> f64 {
        let th = DensityMatrix::thermal(a).expect("a in [0,1]");
        trace_distance(rho, &th).unwrap_or(f64::INFINITY)
    };
    let (a, d) = golden_section_min(f, 0.0, 1.0, 1e-4);
    Ok((a, d))
}

/// Convenience parallel map used by callers fitting several independent
/// datasets (e.g. per-seed repetitions).
pub fn fit_spam_many(
    datasets: &[Vec<SequenceRecord>],
    config: &OptimConfig,
) -> Result<Vec<SpamEstimate>> {
    datasets
        .par_iter()
        .map(|recs| fit_spam(recs, config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::LindbladModel;
    use crate::linalg::max_abs;
    use crate::qcore::tensor;
    use crate::synth::{generate, SpamTruth};

    fn zero_model(dim: usize) -> LindbladModel {
        LindbladModel::new(CMat::zeros(dim, dim), CMat::zeros(dim * dim - 1, dim * dim - 1))
            .unwrap()
    }

    /// Truth SPAM with thermal weight `a` and a symmetric |1> -> |0| readout
    /// error `eps` on each qubit.
    fn noisy_truth(a: f64, eps: f64) -> SpamTruth {
        let rho0 = DensityMatrix::thermal(a).unwrap();
        let m0 = CMat::from_row_slice(
            2,
            2,
            &[c(1.0 - 0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(eps, 0.0)],
        );
        let m1 = CMat::identity(2, 2) - &m0;
        SpamTruth {
            rho0,
            povm: Povm::new(vec![m0, m1]).unwrap(),
        }
    }

    #[test]
    fn thermal_fit_examples() {
        let (a, d) = thermal_fit(&DensityMatrix::basis_state(2, 0).unwrap()).unwrap();
        assert!((a - 1.0).abs() < 1e-3 && d < 1e-3);

        let rho_a = DensityMatrix::new(crate::reference::rho0_qubit_a()).unwrap();
        let (a, d) = thermal_fit(&rho_a).unwrap();
        assert!((a - 0.86).abs() <= 0.01, "a = {a}");
        assert!((d - 0.01).abs() <= 0.005, "d = {d}");

        let rho_b = DensityMatrix::new(crate::reference::rho0_qubit_b()).unwrap();
        let (a, d) = thermal_fit(&rho_b).unwrap();
        assert!((a - 0.88).abs() <= 0.01, "a = {a}");
        assert!((d - 0.02).abs() <= 0.01, "d = {d}");
    }

    #[test]
    fn loglike_truth_beats_perturbations() {
        let truth = noisy_truth(0.9, 0.04);
        let ds = generate(&zero_model(2), &truth, &[0.0], 100_000, 5).unwrap();
        let recs: Vec<SequenceRecord> = ds.records.clone();
        let ll_truth =
            loglike_spam(truth.rho0.matrix(), truth.povm.elements(), &recs).unwrap();
        // Perturb the state diagonal.
        let rho_p = DensityMatrix::thermal(0.8).unwrap();
        let ll_p = loglike_spam(rho_p.matrix(), truth.povm.elements(), &recs).unwrap();
        assert!(ll_truth > ll_p);
        // All-counts-on-impossible-outcome stays finite via the clamp.
        let mut impossible = recs[0].clone();
        let proj_povm = Povm::projective_z(1);
        impossible.counts = vec![0, impossible.shots];
        let ll = loglike_spam(
            DensityMatrix::basis_state(2, 0).unwrap().matrix(),
            proj_povm.elements(),
            &[impossible],
        )
        .unwrap();
        assert!(ll.is_finite() && ll < -1e4);
    }

    #[test]
    fn fit_recovers_thermal_state_and_readout_error() {
        let truth = noisy_truth(0.88, 0.04);
        let ds = generate(&zero_model(2), &truth, &[0.0], 10_000, 42).unwrap();
        let cfg = OptimConfig::default();
        let est = fit_spam(&ds.records, &cfg).unwrap();
        let (a, _) = thermal_fit(&est.rho0).unwrap();
        assert!((a - 0.88).abs() <= 0.02, "thermal weight {a}");
        let m0_11 = est.povm.elements()[0][(1, 1)].re;
        assert!((m0_11 - 0.04).abs() <= 0.02, "readout error {m0_11}");
        assert!(est.report.converged);
        // Physicality by construction.
        assert!(crate::linalg::min_eig_hermitian(est.rho0.matrix()).unwrap() > -1e-9);
    }

    #[test]
    fn measurement_channel_distance_cases() {
        let cfg = OptimConfig::default();
        let proj = Povm::projective_z(1);
        let d = measurement_channel_distance(&proj, &proj, &cfg).unwrap();
        assert!(d.abs() < 1e-9);

        // A 4% readout error is detectable at distance ~0.04 on |1>.
        let truth = noisy_truth(0.9, 0.04);
        let d = measurement_channel_distance(&truth.povm, &proj, &cfg).unwrap();
        assert!((d - 0.04).abs() < 0.01, "distance {d}");
    }

    /// Repair two-decimal rounding: hermitize, clamp to PSD, then apply the
    /// symmetric normalization `M -> S^{-1/2} M S^{-1/2}` with `S = sum M_o`
    /// so the elements form an exact POVM.
    fn repair_povm(mats: &[CMat]) -> Povm {
        use crate::linalg::{eigh, hermitize};
        let clamped: Vec<CMat> = mats
            .iter()
            .map(|m| clamp_psd(&hermitize(m)).unwrap())
            .collect();
        let mut sum = CMat::zeros(mats[0].nrows(), mats[0].ncols());
        for m in &clamped {
            sum += m;
        }
        let (vals, vecs) = eigh(&sum).unwrap();
        let inv_sqrt = &vecs
            * CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                vals.len(),
                vals.iter().map(|&w| c(1.0 / w.sqrt(), 0.0)),
            ))
            * dag(&vecs);
        Povm::new(clamped.iter().map(|m| &inv_sqrt * m * &inv_sqrt).collect()).unwrap()
    }

    #[test]
    fn two_qubit_published_joint_vs_product_distance() {
        let joint = repair_povm(&crate::reference::povm_two_qubit());
        let pa = crate::reference::povm_m0_qubit_a();
        let pb = crate::reference::povm_m0_qubit_b();
        let elems_a = [pa.clone(), CMat::identity(2, 2) - &pa];
        let elems_b = [pb.clone(), CMat::identity(2, 2) - &pb];
        let product_mats: Vec<CMat> = (0..4)
            .map(|o| tensor(&elems_a[o / 2], &elems_b[o % 2]))
            .collect();
        let product = repair_povm(&product_mats);
        let cfg = OptimConfig::default();
        // Correlated readout error in the joint measurement is visible as a
        // small but nonzero worst-case distance from the product model.
        let d = measurement_channel_distance(&joint, &product, &cfg).unwrap();
        assert!(d > 0.01 && d < 0.15, "distance {d}");
        assert!(
            max_abs(&(joint.elements()[0].clone() - joint.elements()[0].adjoint())) < 1e-12
        );
    }

    #[test]
    fn no_time_zero_records_is_an_error() {
        let truth = SpamTruth::ideal(1).unwrap();
        let ds = generate(&zero_model(2), &truth, &[0.0, 1.0], 100, 3).unwrap();
        let later: Vec<SequenceRecord> = ds
            .records
            .into_iter()
            .filter(|r| r.time_us > 0.0)
            .collect();
        assert!(fit_spam(&later, &OptimConfig::default()).is_err());
    }
}
