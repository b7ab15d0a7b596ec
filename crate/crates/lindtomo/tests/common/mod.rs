//! Test-side oracles, deliberately independent of the library's numeric
//! kernels: a Cash-Karp adaptive Runge-Kutta master-equation integrator, a
//! classical-pivot Jacobi eigensolver, and a diamond-norm search over
//! ancilla-extended pure states. Agreement between these and the library is
//! part of the acceptance gate.
#![allow(dead_code)]

use lindtomo::linalg::{c, dag, CMat, C64};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Right-hand side of the master equation:
/// `drho/dt = -i[H, rho] + sum_k gamma_k (L rho L^dag - {L^dag L, rho}/2)`.
fn master_rhs(h: &CMat, jumps: &[(f64, CMat)], rho: &CMat) -> CMat {
    let i = c(0.0, 1.0);
    let mut out = (h * rho - rho * h) * (-i);
    for (gamma, l) in jumps {
        let ld = dag(l);
        let lld = &ld * l;
        let g = c(*gamma, 0.0);
        out += (l * rho * &ld - (&lld * rho + rho * &lld).unscale(2.0)) * g;
    }
    out
}

/// Integrate the master equation with an adaptive embedded Cash-Karp 4(5)
/// scheme to absolute local tolerance `tol` per step.
pub fn rk45_evolve(h: &CMat, jumps: &[(f64, CMat)], rho0: &CMat, t_us: f64, tol: f64) -> CMat {
    // Cash-Karp tableau.
    const A: [[f64; 5]; 5] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
        [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0, 0.0, 0.0],
        [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0, 0.0],
        [
            1631.0 / 55296.0,
            175.0 / 512.0,
            575.0 / 13824.0,
            44275.0 / 110592.0,
            253.0 / 4096.0,
        ],
    ];
    const B5: [f64; 6] = [
        37.0 / 378.0,
        0.0,
        250.0 / 621.0,
        125.0 / 594.0,
        0.0,
        512.0 / 1771.0,
    ];
    const B4: [f64; 6] = [
        2825.0 / 27648.0,
        0.0,
        18575.0 / 48384.0,
        13525.0 / 55296.0,
        277.0 / 14336.0,
        1.0 / 4.0,
    ];

    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut dt = (t_us / 50.0).min(0.1).max(1e-6);
    while t < t_us {
        if t + dt > t_us {
            dt = t_us - t;
        }
        let mut k: Vec<CMat> = Vec::with_capacity(6);
        k.push(master_rhs(h, jumps, &rho));
        for stage in 0..5 {
            let mut arg = rho.clone();
            for (j, kj) in k.iter().enumerate() {
                let w = A[stage][j];
                if w != 0.0 {
                    arg += kj * c(dt * w, 0.0);
                }
            }
            k.push(master_rhs(h, jumps, &arg));
        }
        let mut hi = rho.clone();
        let mut lo = rho.clone();
        for (j, kj) in k.iter().enumerate() {
            hi += kj * c(dt * B5[j], 0.0);
            lo += kj * c(dt * B4[j], 0.0);
        }
        let err = (&hi - &lo).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if err <= tol || dt <= 1e-9 {
            rho = hi;
            t += dt;
        }
        // Standard step-size controller with safety factor.
        let scale = if err > 0.0 {
            0.9 * (tol / err).powf(0.2)
        } else {
            4.0
        };
        dt = (dt * scale.clamp(0.2, 4.0)).min(t_us.max(0.1));
    }
    rho
}

/// Hermitian eigendecomposition by classical Jacobi: at each step annihilate
/// the largest off-diagonal element. Returns ascending eigenvalues and the
/// matching eigenvector columns.
pub fn jacobi_eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = CMat::identity(n, n);
    let scale: f64 = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    for _ in 0..(40 * n * n) {
        // Locate the largest off-diagonal element.
        let (mut p, mut q, mut big) = (0, 0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if a[(i, j)].norm() > big {
                    big = a[(i, j)].norm();
                    p = i;
                    q = j;
                }
            }
        }
        if big <= 1e-15 * scale {
            break;
        }
        // Unitary 2x2 rotation that zeroes a[(p, q)].
        let apq = a[(p, q)];
        let phase = apq / c(apq.norm(), 0.0);
        let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * apq.norm());
        let tan = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
        let cos = 1.0 / (1.0 + tan * tan).sqrt();
        let sin = tan * cos;
        let (upp, upq) = (c(cos, 0.0), phase * c(sin, 0.0));
        let (uqp, uqq) = (-phase.conj() * c(sin, 0.0), c(cos, 0.0));
        for i in 0..n {
            let (aip, aiq) = (a[(i, p)], a[(i, q)]);
            a[(i, p)] = aip * upp + aiq * uqp;
            a[(i, q)] = aip * upq + aiq * uqq;
            let (vip, viq) = (v[(i, p)], v[(i, q)]);
            v[(i, p)] = vip * upp + viq * uqp;
            v[(i, q)] = vip * upq + viq * uqq;
        }
        for j in 0..n {
            let (apj, aqj) = (a[(p, j)], a[(q, j)]);
            a[(p, j)] = upp.conj() * apj + uqp.conj() * aqj;
            a[(q, j)] = upq.conj() * apj + uqq.conj() * aqj;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vecs = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &v.column(i).into_owned());
    }
    (vals, vecs)
}

/// Trace norm of a Hermitian matrix: sum of absolute eigenvalues.
pub fn trace_norm_hermitian(m: &CMat) -> f64 {
    jacobi_eigh(m).0.iter().map(|w| w.abs()).sum()
}

/// Apply a channel given by its unnormalized input-first Choi matrix
/// (`J = sum_ij |i><j| (x) Phi(|i><j|)`) to an input `x`.
fn choi_apply(j: &CMat, d: usize, x: &CMat) -> CMat {
    let mut out = CMat::zeros(d, d);
    for i in 0..d {
        for jj in 0..d {
            let w = x[(i, jj)];
            if w != C64::default() {
                for r in 0..d {
                    for s in 0..d {
                        out[(r, s)] += w * j[(i * d + r, jj * d + s)];
                    }
                }
            }
        }
    }
    out
}

/// Output of `(I_anc (x) Phi)` applied to the pure state `psi` on
/// ancilla (x) system, with `Phi` given by the Choi matrix `j`.
fn extended_output(j: &CMat, d: usize, psi: &[C64]) -> CMat {
    let n = d * d;
    let mut out = CMat::zeros(n, n);
    for k in 0..d {
        for l in 0..d {
            let mut block = CMat::zeros(d, d);
            for r in 0..d {
                for s in 0..d {
                    block[(r, s)] = psi[k * d + r] * psi[l * d + s].conj();
                }
            }
            let mapped = choi_apply(j, d, &block);
            for r in 0..d {
                for s in 0..d {
                    out[(k * d + r, l * d + s)] = mapped[(r, s)];
                }
            }
        }
    }
    out
}

/// Diamond-norm distance oracle: maximize
/// `|(I (x) (Phi_a - Phi_b))(|psi><psi|)|_1` over pure states `psi` on a
/// `d (x) d` ancilla-system space, by random sampling plus hill climbing on
/// the unit sphere. Inputs are unnormalized input-first Choi matrices.
pub fn diamond_oracle(ja: &CMat, jb: &CMat, d: usize, seed: u64) -> f64 {
    let dj = ja - jb;
    let n = d * d;
    let value = |psi: &[C64]| -> f64 { trace_norm_hermitian(&extended_output(&dj, d, psi)) };
    let normalize = |raw: &mut Vec<C64>| {
        let norm: f64 = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in raw.iter_mut() {
            *z /= c(norm, 0.0);
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<(f64, Vec<C64>)> = Vec::new();
    for _ in 0..300 {
        let mut psi: Vec<C64> = (0..n)
            .map(|_| {
                c(
                    rng.sample::<f64, _>(rand_distr::StandardNormal),
                    rng.sample::<f64, _>(rand_distr::StandardNormal),
                )
            })
            .collect();
        normalize(&mut psi);
        candidates.push((value(&psi), psi));
    }
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    candidates.truncate(4);

    let mut best = candidates[0].0;
    for (start_val, start) in candidates {
        let mut psi = start;
        let mut cur = start_val;
        let mut step = 0.3;
        while step > 1e-6 {
            // Finite-difference ascent direction over all 2n real components.
            let h = 1e-5;
            let mut grad = vec![0.0; 2 * n];
            for idx in 0..2 * n {
                let mut trial = psi.clone();
                if idx < n {
                    trial[idx] += c(h, 0.0);
                } else {
                    trial[idx - n] += c(0.0, h);
                }
                normalize(&mut trial);
                grad[idx] = (value(&trial) - cur) / h;
            }
            let gnorm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm < 1e-12 {
                break;
            }
            let mut advanced = false;
            while step > 1e-6 {
                let mut trial = psi.clone();
                for idx in 0..2 * n {
                    let delta = step * grad[idx] / gnorm;
                    if idx < n {
                        trial[idx] += c(delta, 0.0);
                    } else {
                        trial[idx - n] += c(0.0, delta);
                    }
                }
                normalize(&mut trial);
                let tv = value(&trial);
                if tv > cur + 1e-12 {
                    psi = trial;
                    cur = tv;
                    step *= 1.5;
                    advanced = true;
                    break;
                }
                step *= 0.5;
            }
            if !advanced {
                break;
            }
        }
        best = best.max(cur);
    }
    best
}
