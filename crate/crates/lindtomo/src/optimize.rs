//! Generic constrained maximum-likelihood engine shared by the estimators:
//! parameter packing, multi-start quasi-Newton local search, and the
//! convergence policy.
//!
//! Constraints are handled by construction: PSD blocks are Cholesky
//! parameterized, Hermitian blocks are real-parameterized, so every real
//! vector decodes to a feasible point. Residual constraints (POVM
//! completeness, Kraus trace preservation) are penalty terms owned by the
//! calling estimator.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, CMat};
use crate::qcore::{cholesky_decode, cholesky_encode, CholeskyParam};
use crate::{Error, Result};

/// Solver configuration; also the schema of the CLI's `--config` file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    /// Gradient infinity-norm threshold.
    pub gtol: f64,
    /// Relative objective-change threshold.
    pub ftol: f64,
    pub max_iters: usize,
    pub n_starts: usize,
    pub seed: u64,
    /// Initial weight of constraint-penalty terms.
    pub barrier_init: f64,
    /// Multiplicative ramp applied per outer round until feasibility.
    pub barrier_growth: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            gtol: 1e-6,
            ftol: 1e-10,
            max_iters: 500,
            n_starts: 5,
            seed: 0,
            barrier_init: 10.0,
            barrier_growth: 10.0,
        }
    }
}

/// Outcome of a multi-start maximization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub best_loglike: f64,
    pub params: Vec<f64>,
    pub starts_tried: usize,
    pub converged: bool,
    pub iterations: usize,
    pub wall_time_s: f64,
}

/// Constraint-free parameter block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// `dim^2` reals decoding to a PSD matrix via Cholesky.
    PsdCholesky,
    /// `dim^2` reals decoding to a Hermitian matrix.
    Hermitian,
    /// `dim` unconstrained reals.
    Real,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub name: String,
    pub kind: BlockKind,
    pub dim: usize,
}

impl Block {
    pub fn new(name: &str, kind: BlockKind, dim: usize) -> Self {
        Self {
            name: name.to_string(),
            kind,
            dim,
        }
    }

    pub fn n_params(&self) -> usize {
        match self.kind {
            BlockKind::PsdCholesky | BlockKind::Hermitian => self.dim * self.dim,
            BlockKind::Real => self.dim,
        }
    }
}

/// Ordered list of parameter blocks with pack/unpack helpers.
#[derive(Debug, Clone)]
pub struct ParamSpace {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    total: usize,
}

impl ParamSpace {
    pub fn new(blocks: Vec<Block>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut total = 0;
        for b in &blocks {
            offsets.push(total);
            total += b.n_params();
        }
        Self {
            blocks,
            offsets,
            total,
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn slice<'a>(&self, x: &'a [f64], idx: usize) -> &'a [f64] {
        let b = &self.blocks[idx];
        &x[self.offsets[idx]..self.offsets[idx] + b.n_params()]
    }

    pub fn slice_mut<'a>(&self, x: &'a mut [f64], idx: usize) -> &'a mut [f64] {
        let b = &self.blocks[idx];
        &mut x[self.offsets[idx]..self.offsets[idx] + b.n_params()]
    }

    /// Decode a PSD block, optionally normalized to unit trace.
    pub fn decode_psd(&self, x: &[f64], idx: usize, normalize: bool) -> Result<CMat> {
        let b = &self.blocks[idx];
        debug_assert_eq!(b.kind, BlockKind::PsdCholesky);
        let p = CholeskyParam::new(b.dim, self.slice(x, idx).to_vec())?;
        cholesky_decode(&p, normalize)
    }

    /// Decode a Hermitian block. Layout mirrors the Cholesky one: rows in
    /// order, below-diagonal entries as (re, im) pairs followed by the real
    /// diagonal entry.
    pub fn decode_hermitian(&self, x: &[f64], idx: usize) -> CMat {
        let b = &self.blocks[idx];
        debug_assert_eq!(b.kind, BlockKind::Hermitian);
        let s = self.slice(x, idx);
        let mut m = CMat::zeros(b.dim, b.dim);
        let mut k = 0;
        for i in 0..b.dim {
            for j in 0..i {
                m[(i, j)] = c(s[k], s[k + 1]);
                m[(j, i)] = c(s[k], -s[k + 1]);
                k += 2;
            }
            m[(i, i)] = c(s[k], 0.0);
            k += 1;
        }
        m
    }

    /// Encode a PSD matrix into a block's parameter slice.
    pub fn encode_psd(&self, x: &mut [f64], idx: usize, m: &CMat) -> Result<()> {
        let b = &self.blocks[idx];
        debug_assert_eq!(b.kind, BlockKind::PsdCholesky);
        let p = cholesky_encode(m)?;
        self.slice_mut(x, idx).copy_from_slice(&p.reals);
        Ok(())
    }

    pub fn encode_hermitian(&self, x: &mut [f64], idx: usize, m: &CMat) {
        let b = &self.blocks[idx];
        debug_assert_eq!(b.kind, BlockKind::Hermitian);
        let s = self.slice_mut(x, idx);
        let mut k = 0;
        for i in 0..b.dim {
            for j in 0..i {
                s[k] = m[(i, j)].re;
                s[k + 1] = m[(i, j)].im;
                k += 2;
            }
            s[k] = m[(i, i)].re;
            k += 1;
        }
    }
}

/// Which estimator a start vector is for; selects the physics-informed
/// initial guess.
#[derive(Debug, Clone)]
pub enum StartKind {
    /// Ideal SPAM: ground state and projective z measurement.
    Spam { n_qubits: usize },
    /// Amplitude-damping + dephasing Kraus set at the given duration, with
    /// rates from a coarse exponential pre-fit.
    Kraus {
        n_qubits: usize,
        gamma_amp: f64,
        gamma_phi: f64,
        t_us: f64,
    },
    /// Restricted-form Lindblad model with pre-fit rates.
    Lindblad {
        n_qubits: usize,
        restricted: bool,
        gamma_amp: f64,
        gamma_phi: f64,
    },
}

/// Start 0 is the physics-informed guess; the remainder are seeded
/// perturbations of it.
pub fn default_starts(
    space: &ParamSpace,
    kind: &StartKind,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n < 1 {
        return Err(Error::Optimizer("need at least one start".into()));
    }
    let base = match kind {
        StartKind::Spam { n_qubits } => crate::spamfit::physics_start(*n_qubits)?,
        StartKind::Kraus {
            n_qubits,
            gamma_amp,
            gamma_phi,
            t_us,
        } => crate::krausfit::physics_start(*n_qubits, *gamma_amp, *gamma_phi, *t_us)?,
        StartKind::Lindblad {
            n_qubits,
            restricted,
            gamma_amp,
            gamma_phi,
        } => crate::lindfit::physics_start(*n_qubits, *restricted, *gamma_amp, *gamma_phi)?,
    };
    if base.len() != space.len() {
        return Err(Error::Optimizer(format!(
            "physics start has {} params, space expects {}",
            base.len(),
            space.len()
        )));
    }
    Ok(perturbed_starts(&base, n, seed, 0.05))
}

/// The base vector followed by `n - 1` Gaussian perturbations of it.
pub fn perturbed_starts(base: &[f64], n: usize, seed: u64, scale: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = Vec::with_capacity(n);
    starts.push(base.to_vec());
    for _ in 1..n {
        starts.push(
            base.iter()
                .map(|&v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v + z * scale * (1.0 + v.abs())
                })
                .collect(),
        );
    }
    starts
}

struct StartOutcome {
    value: f64,
    params: Vec<f64>,
    converged: bool,
    iterations: usize,
}

/// Maximize `objective` by quasi-Newton ascent from every start; returns the
/// best. Gradients are central finite differences with per-coordinate step
/// `1e-6 * (1 + |x_i|)`.
pub fn maximize(
    objective: &(dyn Fn(&[f64]) -> f64 + Sync),
    n_params: usize,
    starts: &[Vec<f64>],
    config: &OptimConfig,
) -> Result<FitReport> {
    if starts.is_empty() {
        return Err(Error::Optimizer("no starts supplied".into()));
    }
    let t0 = std::time::Instant::now();
    for (i, s) in starts.iter().enumerate() {
        if s.len() != n_params {
            return Err(Error::Optimizer(format!(
                "start {i} has {} params, expected {n_params}",
                s.len()
            )));
        }
        let v = objective(s);
        if !v.is_finite() {
            return Err(Error::Optimizer(format!(
                "objective not finite at start {i}: {v} at {s:?}"
            )));
        }
    }

    let outcomes: Vec<StartOutcome> = starts
        .par_iter()
        .map(|s| ascend(objective, s, config))
        .collect();

    // Deterministic winner: maximum value, earliest start on ties.
    let mut best_idx = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[best_idx].value {
            best_idx = i;
        }
    }
    // If no start converged (e.g. a nonsmooth objective near its maximum),
    // still return the best point found; `converged` records the outcome and
    // callers gate on their own acceptance criteria.
    let best = &outcomes[best_idx];
    Ok(FitReport {
        best_loglike: best.value,
        params: best.params.clone(),
        starts_tried: starts.len(),
        converged: best.converged,
        iterations: best.iterations,
        wall_time_s: t0.elapsed().as_secs_f64(),
    })
}

fn fd_gradient(f: &(dyn Fn(&[f64]) -> f64 + Sync), x: &[f64]) -> DVector<f64> {
    let n = x.len();
    let mut g = DVector::zeros(n);
    let mut xp = x.to_vec();
    for i in 0..n {
        let h = 1e-6 * (1.0 + x[i].abs());
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// BFGS ascent with backtracking line search from a single start.
fn ascend(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    start: &[f64],
    config: &OptimConfig,
) -> StartOutcome {
    let n = start.len();
    let mut x = DVector::from_column_slice(start);
    let mut fx = f(x.as_slice());
    let mut grad = fd_gradient(f, x.as_slice());
    let mut hinv: DMatrix<f64> = DMatrix::identity(n, n);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..config.max_iters {
        iterations = iter + 1;
        if grad.amax() <= config.gtol {
            converged = true;
            break;
        }
        let mut dir = &hinv * &grad;
        let mut slope = dir.dot(&grad);
        if slope <= 0.0 || !slope.is_finite() {
            hinv = DMatrix::identity(n, n);
            dir = grad.clone();
            slope = dir.dot(&grad);
        }

        // Backtracking Armijo line search (ascent).
        let mut alpha = 1.0;
        let mut accepted = false;
        let mut f_new = fx;
        let mut x_new = x.clone();
        for _ in 0..40 {
            x_new = &x + dir.scale(alpha);
            f_new = f(x_new.as_slice());
            if f_new.is_finite() && f_new >= fx + 1e-4 * alpha * slope {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // Stalled: the gradient estimate no longer produces ascent at
            // resolvable step sizes; treat as converged to FD precision.
            converged = true;
            break;
        }

        let grad_new = fd_gradient(f, x_new.as_slice());
        let s = &x_new - &x;
        let y = &grad_new - &grad;
        let sy = s.dot(&y);
        // For maximization the curvature condition is s.y < 0.
        if sy < -1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let id = DMatrix::identity(n, n);
            let left = &id - (&s * y.transpose()).scale(rho);
            hinv = &left * hinv * left.transpose() + (&s * s.transpose()).scale(rho);
        } else {
            hinv = DMatrix::identity(n, n);
        }

        let rel_change = (f_new - fx).abs() / (1.0 + fx.abs());
        x = x_new;
        grad = grad_new;
        fx = f_new;
        if rel_change <= config.ftol {
            converged = true;
            break;
        }
    }

    StartOutcome {
        value: fx,
        params: x.as_slice().to_vec(),
        converged,
        iterations,
    }
}

/// Minimize a scalar function on an interval by golden-section search.
pub fn golden_section_min(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo) > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    (xm, f(xm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl_from_origin() {
        let target = [1.5, -2.0, 0.25];
        let f = move |x: &[f64]| -> f64 {
            -x.iter()
                .zip(target.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        let report = maximize(&f, 3, &[vec![0.0; 3]], &OptimConfig::default()).unwrap();
        for (got, want) in report.params.iter().zip(target.iter()) {
            assert!((got - want).abs() < 1e-6, "got {got}, want {want}");
        }
        assert!(report.converged);
    }

    #[test]
    fn concave_objective_all_starts_agree() {
        let f = |x: &[f64]| -> f64 {
            let d0 = x[0] - 0.3;
            let d1 = x[1] + 0.7;
            -(d0 * d0 + d1 * d1 + d0.powi(4) + d1.powi(4))
        };
        let starts = perturbed_starts(&[0.0, 0.0], 5, 42, 1.0);
        let reports: Vec<FitReport> = starts
            .iter()
            .map(|s| {
                maximize(&f, 2, std::slice::from_ref(s), &OptimConfig::default()).unwrap()
            })
            .collect();
        for r in &reports {
            assert!((r.params[0] - 0.3).abs() < 1e-6);
            assert!((r.params[1] + 0.7).abs() < 1e-6);
        }
    }

    #[test]
    fn two_basin_objective_multi_start_finds_global() {
        // Double-well along x with a tilt; two local maxima near x = +-1.
        let f = |x: &[f64]| -> f64 {
            let (a, b) = (x[0], x[1]);
            -((a * a - 1.0) * (a * a - 1.0) + b * b) + 0.3 * a
        };
        // Independent oracle: dense grid search over [-2, 2]^2.
        let mut best_grid = f64::NEG_INFINITY;
        let mut left_max = f64::NEG_INFINITY;
        for i in 0..=400 {
            for j in 0..=400 {
                let x = -2.0 + i as f64 * 0.01;
                let v = f(&[x, -2.0 + j as f64 * 0.01]);
                best_grid = best_grid.max(v);
                if x < -0.05 {
                    left_max = left_max.max(v);
                }
            }
        }
        assert!(
            best_grid - left_max > 0.1,
            "test setup: basins should differ"
        );

        let starts = vec![vec![-1.2, 0.1], vec![1.2, -0.1]];
        let report = maximize(&f, 2, &starts, &OptimConfig::default()).unwrap();
        assert!(
            (report.best_loglike - best_grid).abs() < 1e-3,
            "multi-start max {} vs grid oracle {best_grid}",
            report.best_loglike
        );
    }

    #[test]
    fn nan_objective_is_reported() {
        let f = |x: &[f64]| -> f64 {
            if x[0] > 0.5 {
                f64::NAN
            } else {
                -x[0] * x[0]
            }
        };
        assert!(maximize(&f, 1, &[vec![1.0]], &OptimConfig::default()).is_err());
    }

    #[test]
    fn deterministic_given_starts() {
        let f = |x: &[f64]| -> f64 { -(x[0] - 0.2).powi(2) - (x[1] * x[1] - 1.0).powi(2) };
        let starts = perturbed_starts(&[0.0, 0.5], 4, 7, 0.3);
        let a = maximize(&f, 2, &starts, &OptimConfig::default()).unwrap();
        let b = maximize(&f, 2, &starts, &OptimConfig::default()).unwrap();
        assert_eq!(a.best_loglike, b.best_loglike);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn hermitian_block_roundtrip() {
        use crate::linalg::{hermitize, max_abs};
        use rand::{Rng, SeedableRng};
        let space = ParamSpace::new(vec![Block::new("h", BlockKind::Hermitian, 4)]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let m = hermitize(&CMat::from_fn(4, 4, |_, _| {
            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        }));
        let mut x = vec![0.0; space.len()];
        space.encode_hermitian(&mut x, 0, &m);
        let back = space.decode_hermitian(&x, 0);
        assert!(max_abs(&(back - m)) < 1e-12);
    }

    #[test]
    fn golden_section_finds_parabola_min() {
        let (x, v) = golden_section_min(|a| (a - 0.37).powi(2) + 1.0, 0.0, 1.0, 1e-6);
        assert!((x - 0.37).abs() < 1e-5);
        assert!((v - 1.0).abs() < 1e-9);
    }
}
