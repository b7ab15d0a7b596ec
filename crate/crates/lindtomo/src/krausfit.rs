//! Per-time maximum-likelihood estimation of Kraus operators.
//!
//! Each delay time is fit independently: `dim^2` complex Kraus operators
//! parameterized by their raw entries, with trace preservation
//! (`sum K^dag K = I`) enforced by a ramped quadratic penalty and checked at
//! 1e-6 on the result.

use rayon::prelude::*;

use crate::dynamics::{damping_dephasing_kraus, kraus_tensor, KrausSet};
use crate::linalg::{c, dag, max_abs, CMat};
use crate::optimize::{default_starts, maximize, Block, BlockKind, FitReport, OptimConfig, ParamSpace, StartKind};
use crate::qcore::outcome_prob_raw;
use crate::spamfit::SpamEstimate;
use crate::synth::{ideal_prep_state, Dataset, SequenceRecord};
use crate::{Error, Result};

/// Fitted channel at one delay time.
#[derive(Debug, Clone)]
pub struct KrausTimeEstimate {
    pub time_us: f64,
    pub kraus: KrausSet,
    pub loglike: f64,
    pub report: FitReport,
}

/// Per-time channel estimates; failed times are reported, not fatal.
#[derive(Debug, Clone)]
pub struct KrausEstimate {
    pub entries: Vec<KrausTimeEstimate>,
    pub failures: Vec<(f64, String)>,
}

impl KrausEstimate {
    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.time_us).collect()
    }
}

/// One unconstrained real block holding `dim^2` operators of `dim^2` complex
/// entries each.
pub fn param_space(dim: usize) -> ParamSpace {
    ParamSpace::new(vec![Block::new(
        "kraus",
        BlockKind::Real,
        2 * dim.pow(4),
    )])
}

/// Pack Kraus operators as column-major (re, im) entry pairs, operator by
/// operator.
pub fn pack_kraus(ops: &[CMat]) -> Vec<f64> {
    let mut x = Vec::with_capacity(ops.len() * 2 * ops[0].len());
    for op in ops {
        for z in op.iter() {
            x.push(z.re);
            x.push(z.im);
        }
    }
    x
}

/// Inverse of [`pack_kraus`] for `dim^2` operators of size `dim`.
pub fn unpack_kraus(x: &[f64], dim: usize) -> Vec<CMat> {
    let n_ops = dim * dim;
    let per_op = 2 * dim * dim;
    assert_eq!(x.len(), n_ops * per_op);
    (0..n_ops)
        .map(|m| {
            let s = &x[m * per_op..(m + 1) * per_op];
            CMat::from_iterator(dim, dim, (0..dim * dim).map(|k| c(s[2 * k], s[2 * k + 1])))
        })
        .collect()
}

/// Physics-informed start: the amplitude-damping + dephasing channel of
/// duration `t_us` (tensor power of the single-qubit one for two qubits).
pub fn physics_start(n_qubits: usize, gamma_amp: f64, gamma_phi: f64, t_us: f64) -> Result<Vec<f64>> {
    let single = damping_dephasing_kraus(gamma_amp, gamma_phi, t_us)?;
    let set = match n_qubits {
        1 => single,
        2 => kraus_tensor(&single, &single)?,
        n => {
            return Err(Error::Unsupported(format!(
                "Kraus start supports 1 or 2 qubits, got {n}"
            )))
        }
    };
    Ok(pack_kraus(set.operators()))
}

/// `max |sum K^dag K - I|` of raw operators.
fn completeness_error_raw(ops: &[CMat]) -> f64 {
    let dim = ops[0].nrows();
    let mut s = CMat::zeros(dim, dim);
    for k in ops {
        s += dag(k) * k;
    }
    max_abs(&(s - CMat::identity(dim, dim)))
}

/// Squared Frobenius norm of `sum K^dag K - I` (smooth penalty form).
fn completeness_penalty_raw(ops: &[CMat]) -> f64 {
    let dim = ops[0].nrows();
    let mut s = CMat::zeros(dim, dim);
    for k in ops {
        s += dag(k) * k;
    }
    (s - CMat::identity(dim, dim))
        .iter()
        .map(|z| z.norm_sqr())
        .sum()
}

/// Log-likelihood of one time slice under raw Kraus operators and a SPAM
/// estimate; probabilities clamped below at 1e-12.
pub fn loglike_kraus_raw(
    ops: &[CMat],
    spam: &SpamEstimate,
    records: &[&SequenceRecord],
) -> Result<f64> {
    let mut total = 0.0;
    for rec in records {
        let rho_s = ideal_prep_state(&rec.prep, &spam.rho0)?;
        let mut rho_t = CMat::zeros(rho_s.dim(), rho_s.dim());
        for k in ops {
            rho_t += k * rho_s.matrix() * dag(k);
        }
        let ub = rec.basis.unitary();
        let rho_meas = &ub * rho_t * dag(&ub);
        for (o, el) in spam.povm.elements().iter().enumerate() {
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

/// Log-likelihood of a time slice under a validated Kraus set.
pub fn loglike_kraus(
    k: &KrausSet,
    spam: &SpamEstimate,
    records: &[&SequenceRecord],
) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InsufficientData("empty time slice".into()));
    }
    loglike_kraus_raw(k.operators(), spam, records)
}

/// Rough amplitude-damping and dephasing rates read off the decay of the
/// all-ones z survival and the plus-state x coherence. Used only to seed the
/// optimizers; clamped to [1e-3, 2] MHz.
pub fn coarse_rates(data: &Dataset) -> (f64, f64) {
    let n = data.n_qubits;
    let (prep_one, basis_z, one_idx) = if n == 1 {
        ("1", "z", 1usize)
    } else {
        ("1.1", "z.z", 3usize)
    };
    let (prep_plus, basis_x) = if n == 1 { ("+", "x") } else { ("+.0", "x.z") };

    let mut amp_samples = Vec::new();
    let mut phi_samples = Vec::new();
    for rec in &data.records {
        if rec.time_us <= 0.0 {
            continue;
        }
        let t = rec.time_us;
        if rec.prep.to_string() == prep_one && rec.basis.to_string() == basis_z {
            let s = (rec.counts[one_idx] as f64 / rec.shots as f64).max(1e-3);
            let g = -s.ln() / t / n as f64;
            amp_samples.push(g);
        }
        if rec.prep.to_string() == prep_plus && rec.basis.to_string() == basis_x {
            // Ground-outcome fraction of the first qubit.
            let half = rec.counts.len() / 2;
            let f0: u64 = rec.counts[..half.max(1)].iter().sum();
            let coh = (2.0 * f0 as f64 / rec.shots as f64 - 1.0).max(1e-3);
            phi_samples.push(-coh.ln() / t);
        }
    }
    let med = |mut v: Vec<f64>| -> f64 {
        if v.is_empty() {
            return 0.05;
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let gamma_amp = med(amp_samples).clamp(1e-3, 2.0);
    // The plus-state coherence decays at gamma_phi + gamma_amp / 2.
    let gamma_phi = (med(phi_samples) - gamma_amp / 2.0).clamp(1e-3, 2.0);
    (gamma_amp, gamma_phi)
}

/// Retract a near-trace-preserving Kraus set onto the trace-preserving
/// manifold via `K -> K S^{-1/2}` with `S = sum K^dag K`.
fn retract_trace_preserving(ops: &[CMat]) -> Result<Vec<CMat>> {
    let dim = ops[0].nrows();
    let mut s = CMat::zeros(dim, dim);
    for k in ops {
        s += dag(k) * k;
    }
    let (vals, vecs) = crate::linalg::eigh(&s)?;
    if vals.iter().any(|&w| w <= 0.0) {
        return Err(Error::InvalidChannel(
            "completeness sum not positive definite".into(),
        ));
    }
    let inv_sqrt = &vecs
        * CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            vals.iter().map(|&w| crate::linalg::c(1.0 / w.sqrt(), 0.0)),
        ))
        * dag(&vecs);
    Ok(ops.iter().map(|k| k * &inv_sqrt).collect())
}

/// Fit an independent Kraus set per delay time.
///
/// With `warm_start` the best parameters of the previous time seed the next
/// one (times then fit sequentially); the default protocol is fully
/// independent parallel per-time fits.
pub fn fit_kraus(
    data: &Dataset,
    spam: &SpamEstimate,
    config: &OptimConfig,
    warm_start: bool,
) -> Result<KrausEstimate> {
    data.validate()?;
    let dim = 1usize << data.n_qubits;
    if spam.rho0.dim() != dim {
        return Err(Error::DimMismatch("SPAM estimate dim != dataset dim".into()));
    }
    let (gamma_amp, gamma_phi) = coarse_rates(data);
    let n_qubits = data.n_qubits;

    let fit_one = |t: f64, extra_start: Option<&Vec<f64>>| -> Result<KrausTimeEstimate> {
        let records = data.at_time(t);
        let space = param_space(dim);
        let mut starts = default_starts(
            &space,
            &StartKind::Kraus {
                n_qubits,
                gamma_amp,
                gamma_phi,
                t_us: t,
            },
            config.n_starts,
            config.seed,
        )?;
        if let Some(x) = extra_start {
            starts.insert(0, x.clone());
        }
        let total_shots: f64 = records.iter().map(|r| r.shots as f64).sum();

        let mut barrier = config.barrier_init;
        let mut last_report: Option<FitReport> = None;
        for _round in 0..8 {
            let spam_ref = spam;
            let recs = &records;
            let objective = move |x: &[f64]| -> f64 {
                let ops = unpack_kraus(x, dim);
                let ll = loglike_kraus_raw(&ops, spam_ref, recs).unwrap_or(-1e12);
                ll - barrier * total_shots * completeness_penalty_raw(&ops)
            };
            let report = maximize(&objective, space.len(), &starts, config)?;
            let mut ops = unpack_kraus(&report.params, dim);
            if completeness_error_raw(&ops) <= 1e-3 {
                // Close enough for the exact retraction K -> K S^{-1/2} with
                // S = sum K^dag K, which restores trace preservation to
                // machine precision with a negligible likelihood change.
                ops = retract_trace_preserving(&ops)?;
            }
            if completeness_error_raw(&ops) <= 1e-6 {
                let kraus = KrausSet::new_fitted(ops.clone(), t)?;
                let loglike = loglike_kraus_raw(&ops, spam, &records)?;
                return Ok(KrausTimeEstimate {
                    time_us: t,
                    kraus,
                    loglike,
                    report,
                });
            }
            starts = vec![report.params.clone()];
            last_report = Some(report);
            barrier *= config.barrier_growth;
        }
        Err(Error::Optimizer(format!(
            "trace preservation not reached at t = {t} (deviation {:.2e})",
            last_report
                .map(|r| completeness_error_raw(&unpack_kraus(&r.params, dim)))
                .unwrap_or(f64::NAN)
        )))
    };

    let mut entries = Vec::new();
    let mut failures = Vec::new();
    if warm_start {
        let mut prev: Option<Vec<f64>> = None;
        for &t in &data.times_us {
            match fit_one(t, prev.as_ref()) {
                Ok(e) => {
                    prev = Some(e.report.params.clone());
                    entries.push(e);
                }
                Err(err) => failures.push((t, err.to_string())),
            }
        }
    } else {
        let results: Vec<(f64, Result<KrausTimeEstimate>)> = data
            .times_us
            .par_iter()
            .map(|&t| (t, fit_one(t, None)))
            .collect();
        for (t, res) in results {
            match res {
                Ok(e) => entries.push(e),
                Err(err) => failures.push((t, err.to_string())),
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::Optimizer(format!(
            "Kraus fit failed at every delay time: {failures:?}"
        )));
    }
    entries.sort_by(|a, b| a.time_us.partial_cmp(&b.time_us).unwrap());
    Ok(KrausEstimate { entries, failures })
}
