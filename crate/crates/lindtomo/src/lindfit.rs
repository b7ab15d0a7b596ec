//! Maximum-likelihood estimation of a time-independent Hamiltonian and
//! Lindblad matrix from the full dataset, in free and restricted modes, plus
//! the diamond-norm deviation between two models and steady-state analysis.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    choi_of_superop, diamond_distance, jumps_from_lindblad, liouvillian, restricted_jump_ops,
    JumpDecomposition, LindbladModel,
};
use crate::linalg::{dag, vectorize, CMat, CVec};
use crate::optimize::{
    default_starts, maximize, Block, BlockKind, FitReport, OptimConfig, ParamSpace, StartKind,
};
use crate::qcore::{outcome_prob_raw, DensityMatrix};
use crate::spamfit::SpamEstimate;
use crate::synth::{ideal_prep_state, Dataset, SequenceRecord};
use crate::{Error, Result};

/// Whether the Lindblad matrix is fully free (Cholesky-parameterized PSD) or
/// restricted to fixed dephasing + damping jump shapes with free rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    Free,
    Restricted,
}

/// Fitted generator with its jump decomposition and diagnostics.
#[derive(Debug, Clone)]
pub struct LindbladEstimate {
    pub model: LindbladModel,
    pub jumps: JumpDecomposition,
    pub loglike: f64,
    pub mode: FitMode,
    pub report: FitReport,
}

/// Parameter layout: a full Hermitian Hamiltonian block (its identity
/// component is projected out when decoding — global phase is unobservable)
/// followed by either a Cholesky-parameterized Lindblad matrix (free) or
/// per-jump rate parameters stored as square roots (restricted).
pub fn param_space(n_qubits: usize, mode: FitMode) -> Result<ParamSpace> {
    let dim = 1usize << n_qubits;
    let h = Block::new("hamiltonian", BlockKind::Hermitian, dim);
    let second = match mode {
        FitMode::Free => Block::new("lindblad", BlockKind::PsdCholesky, dim * dim - 1),
        FitMode::Restricted => Block::new(
            "sqrt_rates",
            BlockKind::Real,
            restricted_jump_ops(n_qubits)?.len(),
        ),
    };
    Ok(ParamSpace::new(vec![h, second]))
}

/// Zero Hamiltonian plus a dissipator seeded from coarse dephasing and
/// damping rates.
pub fn physics_start(
    n_qubits: usize,
    restricted: bool,
    gamma_amp: f64,
    gamma_phi: f64,
) -> Result<Vec<f64>> {
    let mode = if restricted {
        FitMode::Restricted
    } else {
        FitMode::Free
    };
    let space = param_space(n_qubits, mode)?;
    let mut x = vec![0.0; space.len()];
    let rates = start_rates(n_qubits, gamma_amp, gamma_phi)?;
    match mode {
        FitMode::Restricted => {
            let s = space.slice_mut(&mut x, 1);
            for (u, r) in s.iter_mut().zip(&rates) {
                *u = r.sqrt();
            }
        }
        FitMode::Free => {
            let ops = restricted_jump_ops(n_qubits)?;
            let pairs: Vec<(f64, CMat)> = rates.into_iter().zip(ops).collect();
            let dim = 1usize << n_qubits;
            let model = LindbladModel::from_jumps(CMat::zeros(dim, dim), &pairs)?;
            space.encode_psd(&mut x, 1, model.lindblad_matrix())?;
        }
    }
    Ok(x)
}

/// Per-jump starting rates in the order of [`restricted_jump_ops`]
/// (dephasing shapes first, then damping).
fn start_rates(n_qubits: usize, gamma_amp: f64, gamma_phi: f64) -> Result<Vec<f64>> {
    match n_qubits {
        1 => Ok(vec![gamma_phi, gamma_amp]),
        2 => Ok(vec![gamma_phi, gamma_phi, gamma_amp, gamma_amp]),
        n => Err(Error::Unsupported(format!(
            "Lindblad start supports 1 or 2 qubits, got {n}"
        ))),
    }
}

/// Decode a parameter vector into a model. The Hamiltonian trace is
/// subtracted (Tr H = 0 gauge).
pub fn decode(space: &ParamSpace, x: &[f64], n_qubits: usize, mode: FitMode) -> Result<LindbladModel> {
    let dim = 1usize << n_qubits;
    let mut h = space.decode_hermitian(x, 0);
    let tr = h.trace().re / dim as f64;
    for i in 0..dim {
        h[(i, i)] -= crate::linalg::c(tr, 0.0);
    }
    match mode {
        FitMode::Free => {
            let l = space.decode_psd(x, 1, false)?;
            LindbladModel::new(h, l)
        }
        FitMode::Restricted => {
            let ops = restricted_jump_ops(n_qubits)?;
            let pairs: Vec<(f64, CMat)> = space
                .slice(x, 1)
                .iter()
                .map(|u| u * u)
                .zip(ops)
                .collect();
            LindbladModel::from_jumps(h, &pairs)
        }
    }
}

/// Full-dataset log-likelihood: the per-time-slice likelihood summed over
/// the grid, with `rho_s(t) = exp(L t)` applied to each prepared state.
/// Propagators are computed once per call and shared across records.
pub fn loglike_lt(model: &LindbladModel, spam: &SpamEstimate, data: &Dataset) -> Result<f64> {
    if data.records.is_empty() {
        return Err(Error::InsufficientData("empty dataset".into()));
    }
    let sup = liouvillian(model)?;
    let mut total = 0.0;
    for &t in &data.times_us {
        let prop = sup.propagator(t);
        for rec in data.records.iter().filter(|r| r.time_us == t) {
            total += record_loglike(&prop, spam, rec)?;
        }
    }
    Ok(total)
}

fn record_loglike(prop: &CMat, spam: &SpamEstimate, rec: &SequenceRecord) -> Result<f64> {
    let rho_s = ideal_prep_state(&rec.prep, &spam.rho0)?;
    let rho_t = crate::dynamics::apply_propagator(prop, rho_s.matrix());
    let ub = rec.basis.unitary();
    let rho_meas = &ub * rho_t * dag(&ub);
    let mut ll = 0.0;
    for (o, el) in spam.povm.elements().iter().enumerate() {
        let n = rec.counts[o];
        if n == 0 {
            continue;
        }
        let p = outcome_prob_raw(&rho_meas, el)?.max(1e-12);
        ll += n as f64 * p.ln();
    }
    Ok(ll)
}

/// Encode an existing model into the free-mode parameter vector, e.g. to
/// warm-start the free fit from a restricted optimum. The restricted mode
/// has no general encoding (its Lindblad matrix is confined to fixed jump
/// shapes), so this always targets `FitMode::Free`.
pub fn encode_free(model: &LindbladModel) -> Result<Vec<f64>> {
    let dim = model.dim();
    let n_qubits = dim.trailing_zeros() as usize;
    let space = param_space(n_qubits, FitMode::Free)?;
    let mut x = vec![0.0; space.len()];
    space.encode_hermitian(&mut x, 0, model.hamiltonian());
    space.encode_psd(&mut x, 1, model.lindblad_matrix())?;
    Ok(x)
}

/// Fit a time-independent model to the full dataset.
pub fn fit_lindblad(
    data: &Dataset,
    spam: &SpamEstimate,
    mode: FitMode,
    config: &OptimConfig,
) -> Result<LindbladEstimate> {
    fit_lindblad_with_starts(data, spam, mode, config, &[])
}

/// As [`fit_lindblad`], with caller-supplied parameter vectors appended to
/// the default start set.
pub fn fit_lindblad_with_starts(
    data: &Dataset,
    spam: &SpamEstimate,
    mode: FitMode,
    config: &OptimConfig,
    extra_starts: &[Vec<f64>],
) -> Result<LindbladEstimate> {
    data.validate()?;
    let n_qubits = data.n_qubits;
    let dim = 1usize << n_qubits;
    if spam.rho0.dim() != dim {
        return Err(Error::DimMismatch("SPAM estimate dim != dataset dim".into()));
    }
    let space = param_space(n_qubits, mode)?;
    let (gamma_amp, gamma_phi) = crate::krausfit::coarse_rates(data);
    let mut starts = default_starts(
        &space,
        &StartKind::Lindblad {
            n_qubits,
            restricted: mode == FitMode::Restricted,
            gamma_amp,
            gamma_phi,
        },
        config.n_starts,
        config.seed,
    )?;
    for s in extra_starts {
        if s.len() != space.len() {
            return Err(Error::Optimizer(format!(
                "extra start has {} params, space expects {}",
                s.len(),
                space.len()
            )));
        }
        starts.push(s.clone());
    }

    let space_ref = &space;
    let objective = move |x: &[f64]| -> f64 {
        let model = match decode(space_ref, x, n_qubits, mode) {
            Ok(m) => m,
            Err(_) => return -1e12,
        };
        loglike_lt(&model, spam, data).unwrap_or(-1e12)
    };
    let report = maximize(&objective, space.len(), &starts, config)?;
    let model = decode(&space, &report.params, n_qubits, mode)?;
    let jumps = jumps_from_lindblad(&model)?;
    let loglike = loglike_lt(&model, spam, data)?;
    Ok(LindbladEstimate {
        model,
        jumps,
        loglike,
        mode,
        report,
    })
}

/// Diamond-norm deviation `|exp(L_a t) - exp(L_b t)|_diamond`.
pub fn deviation_delta(a: &LindbladModel, b: &LindbladModel, t_us: f64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch("deviation_delta: dims differ".into()));
    }
    let ca = choi_of_superop(&liouvillian(a)?, t_us)?;
    let cb = choi_of_superop(&liouvillian(b)?, t_us)?;
    diamond_distance(&ca, &cb)
}

/// Unique stationary state of the model's Liouvillian, from the null space
/// of the generator. Errors if the null space is not one-dimensional at the
/// 1e-8 singular-value level.
pub fn steady_state(model: &LindbladModel) -> Result<DensityMatrix> {
    let sup = liouvillian(model)?;
    let m = sup.matrix().clone();
    let n = m.nrows();
    // Right null space of the generator via the Hermitian eigenproblem of
    // L^dag L (eigenvalues are squared singular values).
    let gram = dag(&m) * &m;
    let (vals, vecs) = crate::linalg::eigh(&gram)?;
    let null_count = vals.iter().filter(|&&w| w.max(0.0).sqrt() <= 1e-8).count();
    if null_count != 1 {
        return Err(Error::DegenerateSteadyState(null_count));
    }
    let vec = CVec::from_iterator(n, vecs.column(0).iter().cloned());
    let dim = sup.dim();
    let raw = crate::linalg::unvectorize(&vec, dim);
    let herm = crate::linalg::hermitize(&raw);
    let tr = herm.trace().re;
    if tr.abs() < 1e-10 {
        return Err(Error::InvalidState(
            "stationary null vector is traceless, not a state".into(),
        ));
    }
    let rho = herm.unscale(tr);
    // Clamp eigenvalue round-off before validation.
    let (vals, vecs) = crate::linalg::eigh(&rho)?;
    let d = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&w| crate::linalg::c(w.max(0.0), 0.0)),
    ));
    let clamped = &vecs * d * dag(&vecs);
    let clamped = clamped.unscale(clamped.trace().re);
    let residual = (sup.matrix() * vectorize(&clamped)).norm();
    if residual > 1e-6 {
        return Err(Error::InvalidState(format!(
            "stationary residual {residual:.2e} too large"
        )));
    }
    DensityMatrix::new(clamped)
}

/// Per-sequence reduced deviance `2 sum_o n_o ln(n_o / (N p_o))` divided by
/// the degrees of freedom, summed over times for each (prep, basis). Values
/// far above 1 flag sequences the model cannot describe.
pub fn deviance_report(
    model: &LindbladModel,
    spam: &SpamEstimate,
    data: &Dataset,
) -> Result<Vec<(String, String, f64)>> {
    let sup = liouvillian(model)?;
    let mut acc: std::collections::BTreeMap<(String, String), (f64, usize)> =
        std::collections::BTreeMap::new();
    for &t in &data.times_us {
        let prop = sup.propagator(t);
        for rec in data.records.iter().filter(|r| r.time_us == t) {
            let rho_s = ideal_prep_state(&rec.prep, &spam.rho0)?;
            let rho_t = crate::dynamics::apply_propagator(&prop, rho_s.matrix());
            let ub = rec.basis.unitary();
            let rho_meas = &ub * rho_t * dag(&ub);
            let mut dev = 0.0;
            for (o, el) in spam.povm.elements().iter().enumerate() {
                let n = rec.counts[o] as f64;
                if n == 0.0 {
                    continue;
                }
                let p = outcome_prob_raw(&rho_meas, el)?.max(1e-12);
                dev += 2.0 * n * (n / (rec.shots as f64 * p)).ln();
            }
            let entry = acc
                .entry((rec.prep.to_string(), rec.basis.to_string()))
                .or_insert((0.0, 0));
            entry.0 += dev;
            entry.1 += rec.counts.len() - 1;
        }
    }
    Ok(acc
        .into_iter()
        .map(|((p, b), (dev, dof))| (p, b, dev / dof.max(1) as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::OptimConfig;
    use crate::spamfit::loglike_spam;
    use crate::synth::{generate, SpamTruth};

    fn damping_dephasing_model(ga: f64, gp: f64) -> LindbladModel {
        let jumps = restricted_jump_ops(1).unwrap();
        LindbladModel::from_jumps(
            CMat::zeros(2, 2),
            &[(gp, jumps[0].clone()), (ga, jumps[1].clone())],
        )
        .unwrap()
    }

    #[test]
    fn physics_start_decodes_to_seed_rates() {
        for restricted in [true, false] {
            let mode = if restricted {
                FitMode::Restricted
            } else {
                FitMode::Free
            };
            let x = physics_start(1, restricted, 0.07, 0.12).unwrap();
            let space = param_space(1, mode).unwrap();
            let model = decode(&space, &x, 1, mode).unwrap();
            let jumps = jumps_from_lindblad(&model).unwrap();
            let mut rates: Vec<f64> = jumps.rates.clone();
            rates.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert!((rates[0] - 0.12).abs() < 1e-9, "rates {rates:?}");
            assert!((rates[1] - 0.07).abs() < 1e-9, "rates {rates:?}");
            assert!(crate::linalg::max_abs(model.hamiltonian()) < 1e-12);
        }
    }

    #[test]
    fn loglike_at_time_zero_matches_spam_loglike() {
        let truth = SpamTruth::ideal(1).unwrap();
        let model = damping_dephasing_model(0.1, 0.1);
        let ds = generate(&model, &truth, &[0.0], 5_000, 7).unwrap();
        let spam = SpamEstimate::ideal(1).unwrap();
        let ll_lt = loglike_lt(&model, &spam, &ds).unwrap();
        let ll_s = loglike_spam(spam.rho0.matrix(), spam.povm.elements(), &ds.records).unwrap();
        assert!((ll_lt - ll_s).abs() < 1e-9);
    }

    #[test]
    fn steady_state_of_damping_is_ground() {
        let model = damping_dephasing_model(0.1, 0.05);
        let ss = steady_state(&model).unwrap();
        let ground = DensityMatrix::basis_state(2, 0).unwrap();
        assert!(crate::qcore::trace_distance(&ss, &ground).unwrap() < 1e-8);
    }

    #[test]
    fn steady_state_degenerate_for_zero_generator() {
        let model = LindbladModel::new(CMat::zeros(2, 2), CMat::zeros(3, 3)).unwrap();
        match steady_state(&model) {
            Err(Error::DegenerateSteadyState(n)) => assert!(n > 1, "null dim {n}"),
            other => panic!("expected degenerate steady state, got {other:?}"),
        }
    }

    #[test]
    fn deviation_delta_is_zero_for_identical_models() {
        let model = damping_dephasing_model(0.1, 0.05);
        let d = deviation_delta(&model, &model, 10.0).unwrap();
        assert!(d.abs() < 1e-9, "delta {d}");
    }

    #[test]
    fn restricted_fit_recovers_rates_and_detuning() {
        let jumps = restricted_jump_ops(1).unwrap();
        // Detuning of 0.8 rad/us plus dephasing 0.12 and damping 0.05 MHz.
        let mut h = CMat::zeros(2, 2);
        h[(1, 1)] = crate::linalg::c(0.8, 0.0);
        let model = LindbladModel::from_jumps(
            h,
            &[(0.12, jumps[0].clone()), (0.05, jumps[1].clone())],
        )
        .unwrap();
        let truth = SpamTruth::ideal(1).unwrap();
        let times = [0.0, 1.0, 2.0, 4.0, 8.0];
        let ds = generate(&model, &truth, &times, 20_000, 23).unwrap();
        let spam = SpamEstimate::ideal(1).unwrap();
        let cfg = OptimConfig {
            n_starts: 3,
            ..OptimConfig::default()
        };
        let est = fit_lindblad(&ds, &spam, FitMode::Restricted, &cfg).unwrap();
        let mut rates: Vec<f64> = est.jumps.rates.clone();
        rates.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((rates[0] - 0.12).abs() < 0.12 * 0.3, "rates {rates:?}");
        assert!((rates[1] - 0.05).abs() < 0.05 * 0.3, "rates {rates:?}");
        // Detuning recovered in the traceless gauge: H11 - H00 = 0.8.
        let h_fit = est.model.hamiltonian();
        let det = (h_fit[(1, 1)] - h_fit[(0, 0)]).re;
        assert!((det - 0.8).abs() < 0.05, "detuning {det}");
        // Free mode fits at least as well (nested models).
        let free = fit_lindblad(&ds, &spam, FitMode::Free, &cfg).unwrap();
        assert!(free.loglike >= est.loglike - 1.0, "free {} restricted {}", free.loglike, est.loglike);
        // Deviance diagnostic is finite and modest for a well-specified model.
        let dev = deviance_report(&est.model, &spam, &ds).unwrap();
        for (_, _, d) in &dev {
            assert!(d.is_finite());
        }
    }
}
