//! Discrete-time non-Markovianity from per-time channel estimates: the sum
//! of positive trace-distance increments, maximized over pairs of initial
//! states.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::krausfit::KrausEstimate;
use crate::qcore::{trace_distance, DensityMatrix, PrepLabel};
use crate::synth::ideal_prep_state;
use crate::{Error, Result};

/// Non-Markovianity report for the best-discriminating prep pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkovReport {
    pub n_markov: f64,
    pub best_pair: (String, String),
    /// (time_us, trace distance) for the best pair.
    pub distance_series: Vec<(f64, f64)>,
    /// ((t_i, t_{i+1}), positive part of D(t_{i+1}) - D(t_i)).
    pub increments: Vec<((f64, f64), f64)>,
}

/// Trace distance between the two evolved states at every estimated time.
pub fn distance_series(
    k: &KrausEstimate,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
) -> Result<Vec<(f64, f64)>> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimMismatch("distance_series: state dims differ".into()));
    }
    k.entries
        .iter()
        .map(|e| {
            let a = crate::dynamics::kraus_apply(&e.kraus, rho1)?;
            let b = crate::dynamics::kraus_apply(&e.kraus, rho2)?;
            Ok((e.time_us, trace_distance(&a, &b)?))
        })
        .collect()
}

/// Positive-increment sum of a distance series.
pub fn positive_increment_sum(series: &[(f64, f64)]) -> (f64, Vec<((f64, f64), f64)>) {
    let mut total = 0.0;
    let mut increments = Vec::new();
    for w in series.windows(2) {
        let gain = (w[1].1 - w[0].1).max(0.0);
        total += gain;
        increments.push(((w[0].0, w[1].0), gain));
    }
    (total, increments)
}

/// Exhaustive search over unordered pairs of candidate preparations (as
/// ideal pure states); returns the pair with the largest positive-increment
/// sum.
pub fn n_markov(k: &KrausEstimate, candidate_preps: &[PrepLabel]) -> Result<MarkovReport> {
    if candidate_preps.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two candidate preparations".into(),
        ));
    }
    let dim = 1usize << candidate_preps[0].n_qubits();
    let ground = DensityMatrix::basis_state(dim, 0)?;
    let states: Vec<(String, DensityMatrix)> = candidate_preps
        .iter()
        .map(|p| Ok((p.to_string(), ideal_prep_state(p, &ground)?)))
        .collect::<Result<_>>()?;
    n_markov_from_states(k, &states)
}

/// As [`n_markov`] but over explicitly supplied labeled states (e.g. the
/// SPAM-corrected preparations instead of the ideal pure ones).
pub fn n_markov_from_states(
    k: &KrausEstimate,
    states: &[(String, DensityMatrix)],
) -> Result<MarkovReport> {
    if states.len() < 2 {
        return Err(Error::InsufficientData("need at least two states".into()));
    }
    if k.entries.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two times for increments".into(),
        ));
    }
    let pairs: Vec<(usize, usize)> = (0..states.len())
        .flat_map(|i| ((i + 1)..states.len()).map(move |j| (i, j)))
        .collect();
    let evaluated: Result<Vec<(usize, usize, f64, Vec<(f64, f64)>)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let series = distance_series(k, &states[i].1, &states[j].1)?;
            let (total, _) = positive_increment_sum(&series);
            Ok((i, j, total, series))
        })
        .collect();
    let evaluated = evaluated?;
    // Deterministic winner: largest sum, lexicographically first pair on ties.
    let best = evaluated
        .iter()
        .max_by(|a, b| {
            a.2.partial_cmp(&b.2)
                .unwrap()
                .then_with(|| (b.0, b.1).cmp(&(a.0, a.1)))
        })
        .expect("at least one pair");
    let (i, j, n_markov, series) = (best.0, best.1, best.2, best.3.clone());
    let (_, increments) = positive_increment_sum(&series);
    Ok(MarkovReport {
        n_markov,
        best_pair: (states[i].0.clone(), states[j].0.clone()),
        distance_series: series,
        increments,
    })
}

/// Exact (noiseless) per-time channel family of a time-independent model,
/// as if every per-time fit had returned the true channel.
pub fn exact_channel_family(
    model: &crate::dynamics::LindbladModel,
    times_us: &[f64],
) -> Result<KrausEstimate> {
    let sup = crate::dynamics::liouvillian(model)?;
    let entries = times_us
        .iter()
        .map(|&t| {
            let choi = crate::dynamics::choi_of_superop(&sup, t)?;
            Ok(crate::krausfit::KrausTimeEstimate {
                time_us: t,
                kraus: crate::dynamics::kraus_from_choi(&choi, t)?,
                loglike: 0.0,
                report: crate::optimize::FitReport {
                    best_loglike: 0.0,
                    params: vec![],
                    starts_tried: 0,
                    converged: true,
                    iterations: 0,
                    wall_time_s: 0.0,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KrausEstimate {
        entries,
        failures: vec![],
    })
}

/// Exact single-qubit marginal family of a two-qubit model: the channel
/// `rho_A -> Tr_B[exp(L t)(rho_A tensor neighbor)]`, which is CPTP at each
/// time but generally not a Markovian family.
pub fn marginal_channel_family(
    model: &crate::dynamics::LindbladModel,
    neighbor: &DensityMatrix,
    times_us: &[f64],
) -> Result<KrausEstimate> {
    use crate::linalg::{unvectorize, vectorize, CMat};
    use crate::qcore::{partial_trace_raw, tensor};
    if model.dim() != 4 || neighbor.dim() != 2 {
        return Err(Error::DimMismatch(
            "marginal family needs a two-qubit model and a single-qubit neighbor".into(),
        ));
    }
    let sup = crate::dynamics::liouvillian(model)?;
    let entries = times_us
        .iter()
        .map(|&t| {
            let prop4 = sup.propagator(t);
            // Column j of the marginal propagator is the vectorized image of
            // the j-th vectorization basis matrix.
            let mut prop2 = CMat::zeros(4, 4);
            for j in 0..4 {
                let mut e = crate::linalg::CVec::zeros(4);
                e[j] = crate::linalg::c(1.0, 0.0);
                let basis_mat = unvectorize(&e, 2);
                let joint = tensor(&basis_mat, neighbor.matrix());
                let out4 = unvectorize(&(&prop4 * vectorize(&joint)), 4);
                let out2 = partial_trace_raw(&out4, 0)?;
                prop2.set_column(j, &vectorize(&out2));
            }
            let choi = crate::dynamics::choi_of_propagator(&prop2, 2)?;
            Ok(crate::krausfit::KrausTimeEstimate {
                time_us: t,
                kraus: crate::dynamics::kraus_from_choi(&choi, t)?,
                loglike: 0.0,
                report: crate::optimize::FitReport {
                    best_loglike: 0.0,
                    params: vec![],
                    starts_tried: 0,
                    converged: true,
                    iterations: 0,
                    wall_time_s: 0.0,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KrausEstimate {
        entries,
        failures: vec![],
    })
}
