//! Dense complex linear algebra helpers shared by every module.
//!
//! All matrices in this crate are small (at most 16x16), so everything here
//! favors clarity over asymptotic cleverness.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Shorthand for a complex scalar.
#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Conjugate transpose.
pub fn dag(m: &CMat) -> CMat {
    m.adjoint()
}

/// Kronecker product, dims multiply.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Column-stacking vectorization: `vec(m)[i + nrows*j] = m[(i, j)]`.
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_iterator(m.nrows() * m.ncols(), m.iter().cloned())
}

/// Inverse of [`vectorize`] for square matrices.
pub fn unvectorize(v: &CVec, dim: usize) -> CMat {
    assert_eq!(v.len(), dim * dim, "vector length must be dim^2");
    CMat::from_iterator(dim, dim, v.iter().cloned())
}

/// Largest elementwise deviation from Hermiticity, `max |M - M^dag|`.
pub fn hermiticity_error(m: &CMat) -> f64 {
    let d = m - dag(m);
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Hermitian part `(M + M^dag) / 2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + dag(m)).scale(0.5)
}

/// Largest elementwise magnitude.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues (ascending) and the unitary of eigenvectors as
/// columns, so `m = V diag(w) V^dag`.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    if hermiticity_error(m) > 1e-8 {
        return Err(Error::DimMismatch(format!(
            "eigh called on non-Hermitian matrix (deviation {:.2e})",
            hermiticity_error(m)
        )));
    }
    // Cyclic complex Jacobi. nalgebra's SymmetricEigen mispairs eigenvalues
    // and eigenvectors on some inputs (e.g. matrices with a zero row), and
    // every downstream physicality guarantee leans on this decomposition, so
    // the toolkit carries its own solver; all matrices here are <= 16x16.
    let n = m.nrows();
    let mut a = hermitize(m);
    let mut v = CMat::identity(n, n);
    let scale = max_abs(&a).max(1e-300);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                // Phase so the (p, q) block becomes real, then a real Givens
                // rotation that zeroes it.
                let phase = apq / c(r, 0.0);
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // Column rotation G: col_p' = cs*col_p - sn*conj(phase)*col_q,
                // col_q' = sn*phase*col_p + cs*col_q. Derived from zeroing
                // (U^dag A U)[p, q] with U the plane rotation.
                let u_pp = c(cs, 0.0);
                let u_pq = phase * c(sn, 0.0);
                let u_qp = -phase.conj() * c(sn, 0.0);
                let u_qq = c(cs, 0.0);
                // A <- U^dag A U: update columns then rows.
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * u_pp + aiq * u_qp;
                    a[(i, q)] = aip * u_pq + aiq * u_qq;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = u_pp.conj() * apj + u_qp.conj() * aqj;
                    a[(q, j)] = u_pq.conj() * apj + u_qq.conj() * aqj;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * u_pp + viq * u_qp;
                    v[(i, q)] = vip * u_pq + viq * u_qq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.partial_cmp(&a[(y, y)].re).unwrap());
    let mut vals = Vec::with_capacity(n);
    let mut vecs = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vals.push(a[(i, i)].re);
        vecs.set_column(k, &v.column(i));
    }
    Ok((vals, vecs))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig_hermitian(m: &CMat) -> Result<f64> {
    Ok(eigh(m)?.0[0])
}

/// Square root of a PSD Hermitian matrix, with small negative eigenvalues
/// clamped to zero.
pub fn psd_sqrt(m: &CMat) -> Result<CMat> {
    let (vals, vecs) = eigh(m)?;
    let d = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&w| c(w.max(0.0).sqrt(), 0.0)),
    ));
    Ok(&vecs * d * dag(&vecs))
}

/// Trace norm `Tr sqrt(M^dag M)` of a Hermitian matrix (sum of |eigenvalues|).
pub fn trace_norm_hermitian(m: &CMat) -> Result<f64> {
    Ok(eigh(m)?.0.iter().map(|w| w.abs()).sum())
}

/// Trace norm of a general matrix: sum of singular values, computed from
/// the Hermitian eigenvalues of `M^dag M`.
pub fn trace_norm(m: &CMat) -> f64 {
    let gram = dag(m) * m;
    eigh(&gram)
        .map(|(vals, _)| vals.iter().map(|&w| w.max(0.0).sqrt()).sum())
        .unwrap_or(f64::NAN)
}

/// Lower-triangular Cholesky-like factor `A` with `A A^dag = m` for a PSD
/// Hermitian matrix. Singular matrices are handled by a tiny diagonal jitter.
pub fn psd_factor(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    let mut jitter = 0.0f64;
    for _ in 0..6 {
        let shifted = hermitize(m) + CMat::identity(n, n).scale(jitter);
        if let Some(chol) = nalgebra::Cholesky::new(shifted) {
            return Ok(chol.l());
        }
        jitter = if jitter == 0.0 { 1e-14 } else { jitter * 100.0 };
    }
    Err(Error::InvalidState(
        "matrix is not positive semidefinite within tolerance".into(),
    ))
}

/// One-norm (max column sum) used by the exponential scaling heuristic.
fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling-and-squaring with a degree-13 Pade
/// approximant.
pub fn expm(m: &CMat) -> CMat {
    const THETA_13: f64 = 5.371920351148152;
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "expm requires a square matrix");

    let norm = one_norm(m);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let a = m.scale(0.5f64.powi(s as i32));

    // Pade-13 coefficients (Higham 2005).
    let b: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];

    let id = CMat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]))
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + id.scale(b[1]);
    let u = &a * u_inner;
    let v = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]))
        + a6.scale(b[6])
        + a4.scale(b[4])
        + a2.scale(b[2])
        + id.scale(b[0]);

    let num = &v + &u;
    let den = &v - &u;
    let mut r = den
        .lu()
        .solve(&num)
        .expect("Pade denominator is singular; input matrix is pathological");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Real inner product `Re Tr[A^dag B]` (Hilbert-Schmidt).
pub fn hs_inner_re(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Complex trace of a product, `Tr[A B]`, without forming the product.
pub fn trace_of_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}
