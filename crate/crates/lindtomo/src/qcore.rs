//! Quantum state and measurement primitives: density matrices, POVMs, the
//! traceless Hermitian operator basis, Cholesky parameterizations, and the
//! pulse labels of the prepare-evolve-measure protocol.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::{
    c, dag, hermiticity_error, hermitize, kron, max_abs, min_eig_hermitian, psd_factor,
    trace_norm_hermitian, CMat, CVec,
};
use crate::{Error, Result};

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = -1e-9;

/// A d x d complex Hermitian PSD unit-trace state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and positive semidefiniteness;
    /// stores the Hermitian part to scrub numerical noise at the 1e-10 level.
    pub fn new(mat: CMat) -> Result<Self> {
        let n = mat.nrows();
        if n == 0 || n != mat.ncols() {
            return Err(Error::DimMismatch("density matrix must be square".into()));
        }
        let herr = hermiticity_error(&mat);
        if herr > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herr:.2e})"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let sym = hermitize(&mat);
        let wmin = min_eig_hermitian(&sym)?;
        if wmin < PSD_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {wmin:.2e})"
            )));
        }
        Ok(Self { mat: sym })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// Pure state `|psi><psi|` from an (automatically normalized) ket.
    pub fn pure(ket: &CVec) -> Result<Self> {
        let norm = ket.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero ket".into()));
        }
        let k = ket.unscale(norm);
        Self::new(&k * k.adjoint())
    }

    /// Computational basis state `|idx><idx|`.
    pub fn basis_state(dim: usize, idx: usize) -> Result<Self> {
        if idx >= dim {
            return Err(Error::DimMismatch(format!("index {idx} out of dim {dim}")));
        }
        let mut m = CMat::zeros(dim, dim);
        m[(idx, idx)] = c(1.0, 0.0);
        Self::new(m)
    }

    /// Single-qubit thermal state `a|0><0| + (1-a)|1><1|`.
    pub fn thermal(a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidState(format!("thermal weight {a} not in [0,1]")));
        }
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = c(a, 0.0);
        m[(1, 1)] = c(1.0 - a, 0.0);
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: CMat::identity(dim, dim).scale(1.0 / dim as f64),
        }
    }

    /// Purity `Tr[rho^2]`.
    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Set of PSD elements summing to identity, one per measurement outcome.
///
/// Outcome labels are the bitstrings of the element index, most significant
/// qubit first.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<CMat>,
}

impl Povm {
    pub fn new(elements: Vec<CMat>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidPovm("no elements".into()));
        }
        let dim = elements[0].nrows();
        let mut sum = CMat::zeros(dim, dim);
        for el in &elements {
            if el.nrows() != dim || el.ncols() != dim {
                return Err(Error::DimMismatch("POVM elements differ in dim".into()));
            }
            if hermiticity_error(el) > HERMITICITY_TOL {
                return Err(Error::InvalidPovm("element not Hermitian".into()));
            }
            let wmin = min_eig_hermitian(el)?;
            if wmin < PSD_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element not PSD (min eigenvalue {wmin:.2e})"
                )));
            }
            sum += el;
        }
        let dev = max_abs(&(sum - CMat::identity(dim, dim)));
        if dev > HERMITICITY_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements do not sum to identity (deviation {dev:.2e})"
            )));
        }
        Ok(Self { elements })
    }

    /// Ideal projective z-basis measurement on `n_qubits` qubits.
    pub fn projective_z(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let elements = (0..dim)
            .map(|i| {
                let mut m = CMat::zeros(dim, dim);
                m[(i, i)] = c(1.0, 0.0);
                m
            })
            .collect();
        Self { elements }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn n_outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    /// Bitstring label of outcome `idx` ("0"/"1", "00".."11", ...).
    pub fn outcome_label(&self, idx: usize) -> String {
        let n_qubits = self.dim().trailing_zeros() as usize;
        format!("{idx:0n_qubits$b}", n_qubits = n_qubits.max(1))
    }
}

/// Hilbert-Schmidt orthogonal set of traceless Hermitian operators with
/// `Tr[s_i s_j] = dim * delta_ij` (unnormalized Pauli tensor products).
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    dim: usize,
    operators: Vec<CMat>,
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// `sigma_- = |0><1|`.
pub fn sigma_minus() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)])
}

/// Build the traceless Hermitian basis for `dim` a power of two.
pub fn hermitian_basis(dim: usize) -> Result<HermitianBasis> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::Unsupported(format!(
            "hermitian_basis requires a power-of-two dim >= 2, got {dim}"
        )));
    }
    let n_qubits = dim.trailing_zeros() as usize;
    let singles = [
        CMat::identity(2, 2),
        pauli_x(),
        pauli_y(),
        pauli_z(),
    ];
    let mut operators = Vec::with_capacity(dim * dim - 1);
    for code in 0..(4usize.pow(n_qubits as u32)) {
        if code == 0 {
            continue; // skip the identity
        }
        let mut op = CMat::identity(1, 1);
        let mut rem = code;
        // Most significant qubit corresponds to the highest base-4 digit.
        for q in (0..n_qubits).rev() {
            let digit = (rem / 4usize.pow(q as u32)) % 4;
            rem %= 4usize.pow(q as u32);
            op = kron(&op, &singles[digit]);
        }
        operators.push(op);
    }
    Ok(HermitianBasis { dim, operators })
}

impl HermitianBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[CMat] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Expansion coefficients of `m` on the basis: `c_i = Tr[s_i m] / dim`.
    ///
    /// Only the traceless part of `m` is representable; the identity
    /// component is dropped.
    pub fn project(&self, m: &CMat) -> Vec<crate::linalg::C64> {
        self.operators
            .iter()
            .map(|s| crate::linalg::trace_of_product(s, m) / c(self.dim as f64, 0.0))
            .collect()
    }

    /// Rebuild a matrix from expansion coefficients (traceless by
    /// construction).
    pub fn assemble(&self, coeffs: &[crate::linalg::C64]) -> CMat {
        assert_eq!(coeffs.len(), self.operators.len());
        let mut m = CMat::zeros(self.dim, self.dim);
        for (co, s) in coeffs.iter().zip(&self.operators) {
            m += s.map(|z| z * co);
        }
        m
    }
}

/// `dim^2` real numbers encoding a lower-triangular complex matrix `A`
/// (real diagonal), so `A A^dag` is PSD by construction.
///
/// Layout: rows in order, within each row the off-diagonal entries as
/// (re, im) pairs followed by the real diagonal entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyParam {
    pub dim: usize,
    pub reals: Vec<f64>,
}

impl CholeskyParam {
    pub fn new(dim: usize, reals: Vec<f64>) -> Result<Self> {
        if reals.len() != dim * dim {
            return Err(Error::DimMismatch(format!(
                "expected {} reals for dim {dim}, got {}",
                dim * dim,
                reals.len()
            )));
        }
        Ok(Self { dim, reals })
    }

    /// The lower-triangular factor `A`.
    pub fn factor(&self) -> CMat {
        let mut a = CMat::zeros(self.dim, self.dim);
        let mut k = 0;
        for i in 0..self.dim {
            for j in 0..i {
                a[(i, j)] = c(self.reals[k], self.reals[k + 1]);
                k += 2;
            }
            a[(i, i)] = c(self.reals[k], 0.0);
            k += 1;
        }
        a
    }
}

/// `A A^dag`, optionally normalized to unit trace.
pub fn cholesky_decode(p: &CholeskyParam, normalize: bool) -> Result<CMat> {
    let a = p.factor();
    let m = &a * dag(&a);
    if normalize {
        let tr = m.trace().re;
        if tr < 1e-300 {
            return Err(Error::InvalidState(
                "cannot normalize: decoded matrix has zero trace".into(),
            ));
        }
        Ok(m.unscale(tr))
    } else {
        Ok(m)
    }
}

/// Inverse of [`cholesky_decode`] (without normalization) on PSD matrices.
pub fn cholesky_encode(psd: &CMat) -> Result<CholeskyParam> {
    let dim = psd.nrows();
    let a = psd_factor(psd)?;
    let mut reals = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..i {
            reals.push(a[(i, j)].re);
            reals.push(a[(i, j)].im);
        }
        reals.push(a[(i, i)].re);
    }
    CholeskyParam::new(dim, reals)
}

/// Kronecker product of two operators; dims multiply.
pub fn tensor(a: &CMat, b: &CMat) -> CMat {
    kron(a, b)
}

/// Trace distance `|a - b|_1 / 2` between two states.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(format!(
            "trace_distance: dims {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    trace_distance_raw(a.matrix(), b.matrix())
}

/// Trace distance on raw Hermitian matrices (used where intermediate states
/// carry harmless numerical noise).
pub fn trace_distance_raw(a: &CMat, b: &CMat) -> Result<f64> {
    Ok(0.5 * trace_norm_hermitian(&(a - b))?)
}

/// Outcome probability `Re Tr[rho M]`.
pub fn outcome_prob(rho: &DensityMatrix, element: &CMat) -> Result<f64> {
    outcome_prob_raw(rho.matrix(), element)
}

pub fn outcome_prob_raw(rho: &CMat, element: &CMat) -> Result<f64> {
    if rho.nrows() != element.nrows() || rho.ncols() != element.ncols() {
        return Err(Error::DimMismatch("outcome_prob: dims differ".into()));
    }
    let tr = crate::linalg::trace_of_product(rho, element);
    Ok(tr.re)
}

/// Partial trace of a two-qubit state, keeping subsystem 0 (first factor)
/// or 1 (second factor).
pub fn partial_trace(rho: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    DensityMatrix::new(partial_trace_raw(rho.matrix(), keep)?)
}

pub fn partial_trace_raw(m: &CMat, keep: usize) -> Result<CMat> {
    if m.nrows() != 4 || m.ncols() != 4 {
        return Err(Error::Unsupported(
            "partial_trace supports dim 4 only".into(),
        ));
    }
    if keep > 1 {
        return Err(Error::DimMismatch(format!("keep must be 0 or 1, got {keep}")));
    }
    let mut out = CMat::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                // index (a, b) of the full matrix with a = i*2+k etc.
                let (r, c_) = if keep == 0 {
                    (i * 2 + k, j * 2 + k)
                } else {
                    (k * 2 + i, k * 2 + j)
                };
                out[(i, j)] += m[(r, c_)];
            }
        }
    }
    Ok(out)
}

/// Per-qubit preparation symbol: one of the six cardinal states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrepSymbol {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

pub const PREP_SYMBOLS: [PrepSymbol; 6] = [
    PrepSymbol::Zero,
    PrepSymbol::One,
    PrepSymbol::Plus,
    PrepSymbol::Minus,
    PrepSymbol::PlusI,
    PrepSymbol::MinusI,
];

impl PrepSymbol {
    pub fn as_str(self) -> &'static str {
        match self {
            PrepSymbol::Zero => "0",
            PrepSymbol::One => "1",
            PrepSymbol::Plus => "+",
            PrepSymbol::Minus => "-",
            PrepSymbol::PlusI => "+i",
            PrepSymbol::MinusI => "-i",
        }
    }

    /// The exact preparation rotation (perfect-pulse assumption).
    pub fn unitary(self) -> CMat {
        match self {
            PrepSymbol::Zero => CMat::identity(2, 2),
            PrepSymbol::One => rot_x(std::f64::consts::PI),
            PrepSymbol::Plus => rot_y(std::f64::consts::FRAC_PI_2),
            PrepSymbol::Minus => rot_y(-std::f64::consts::FRAC_PI_2),
            PrepSymbol::PlusI => rot_x(-std::f64::consts::FRAC_PI_2),
            PrepSymbol::MinusI => rot_x(std::f64::consts::FRAC_PI_2),
        }
    }
}

impl FromStr for PrepSymbol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(PrepSymbol::Zero),
            "1" => Ok(PrepSymbol::One),
            "+" => Ok(PrepSymbol::Plus),
            "-" => Ok(PrepSymbol::Minus),
            "+i" => Ok(PrepSymbol::PlusI),
            "-i" => Ok(PrepSymbol::MinusI),
            other => Err(Error::Schema(format!("unknown prep symbol {other:?}"))),
        }
    }
}

/// Per-qubit measurement basis symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisSymbol {
    Z,
    X,
    Y,
}

pub const BASIS_SYMBOLS: [BasisSymbol; 3] = [BasisSymbol::Z, BasisSymbol::X, BasisSymbol::Y];

impl BasisSymbol {
    pub fn as_str(self) -> &'static str {
        match self {
            BasisSymbol::Z => "z",
            BasisSymbol::X => "x",
            BasisSymbol::Y => "y",
        }
    }

    /// Rotation applied to the state before the fixed z-basis measurement.
    pub fn unitary(self) -> CMat {
        match self {
            BasisSymbol::Z => CMat::identity(2, 2),
            BasisSymbol::X => rot_y(-std::f64::consts::FRAC_PI_2),
            BasisSymbol::Y => rot_x(std::f64::consts::FRAC_PI_2),
        }
    }
}

impl FromStr for BasisSymbol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" => Ok(BasisSymbol::Z),
            "x" => Ok(BasisSymbol::X),
            "y" => Ok(BasisSymbol::Y),
            other => Err(Error::Schema(format!("unknown basis symbol {other:?}"))),
        }
    }
}

/// `exp(-i theta X / 2)`.
pub fn rot_x(theta: f64) -> CMat {
    let (s, co) = (theta / 2.0).sin_cos();
    CMat::from_row_slice(2, 2, &[c(co, 0.), c(0., -s), c(0., -s), c(co, 0.)])
}

/// `exp(-i theta Y / 2)`.
pub fn rot_y(theta: f64) -> CMat {
    let (s, co) = (theta / 2.0).sin_cos();
    CMat::from_row_slice(2, 2, &[c(co, 0.), c(-s, 0.), c(s, 0.), c(co, 0.)])
}

/// Per-qubit preparation label, e.g. `"+i"` or `"0.-i"` for two qubits
/// (qubits joined by `.`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PrepLabel(pub Vec<PrepSymbol>);

/// Per-qubit measurement-basis label, e.g. `"y"` or `"z.x"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BasisLabel(pub Vec<BasisSymbol>);

impl PrepLabel {
    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    /// Tensor product of the per-qubit preparation rotations.
    pub fn unitary(&self) -> CMat {
        self.0
            .iter()
            .fold(CMat::identity(1, 1), |acc, s| kron(&acc, &s.unitary()))
    }
}

impl BasisLabel {
    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn unitary(&self) -> CMat {
        self.0
            .iter()
            .fold(CMat::identity(1, 1), |acc, s| kron(&acc, &s.unitary()))
    }
}

impl fmt::Display for PrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|s| s.as_str()).collect();
        write!(f, "{}", parts.join("."))
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|s| s.as_str()).collect();
        write!(f, "{}", parts.join("."))
    }
}

impl FromStr for PrepLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let syms = s
            .split('.')
            .map(PrepSymbol::from_str)
            .collect::<Result<Vec<_>>>()?;
        if syms.is_empty() {
            return Err(Error::Schema("empty prep label".into()));
        }
        Ok(PrepLabel(syms))
    }
}

impl FromStr for BasisLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let syms = s
            .split('.')
            .map(BasisSymbol::from_str)
            .collect::<Result<Vec<_>>>()?;
        if syms.is_empty() {
            return Err(Error::Schema("empty basis label".into()));
        }
        Ok(BasisLabel(syms))
    }
}

impl TryFrom<String> for PrepLabel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PrepLabel> for String {
    fn from(l: PrepLabel) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for BasisLabel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BasisLabel> for String {
    fn from(l: BasisLabel) -> String {
        l.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_of_product;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tensor_of_identities() {
        let i2 = CMat::identity(2, 2);
        assert_eq!(tensor(&i2, &i2), CMat::identity(4, 4));
    }

    #[test]
    fn tensor_of_basis_projectors() {
        let p0 = DensityMatrix::basis_state(2, 0).unwrap();
        let p1 = DensityMatrix::basis_state(2, 1).unwrap();
        let t = tensor(p0.matrix(), p1.matrix());
        let mut expected = CMat::zeros(4, 4);
        expected[(1, 1)] = c(1.0, 0.0);
        assert!(max_abs(&(t - expected)) < 1e-15);
    }

    #[test]
    fn tensor_z_with_identity() {
        let t = tensor(&pauli_z(), &CMat::identity(2, 2));
        let expected = CMat::from_diagonal(&CVec::from_vec(vec![
            c(1., 0.),
            c(1., 0.),
            c(-1., 0.),
            c(-1., 0.),
        ]));
        assert!(max_abs(&(t - expected)) < 1e-15);
    }

    #[test]
    fn trace_distance_basics() {
        let p0 = DensityMatrix::basis_state(2, 0).unwrap();
        let p1 = DensityMatrix::basis_state(2, 1).unwrap();
        assert_abs_diff_eq!(trace_distance(&p0, &p0).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_distance(&p0, &p1).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_distance_dim_mismatch() {
        let a = DensityMatrix::basis_state(2, 0).unwrap();
        let b = DensityMatrix::maximally_mixed(4);
        assert!(trace_distance(&a, &b).is_err());
    }

    #[test]
    fn outcome_prob_projector() {
        let p0 = DensityMatrix::basis_state(2, 0).unwrap();
        let m0 = p0.matrix().clone();
        assert_abs_diff_eq!(outcome_prob(&p0, &m0).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn outcome_probs_sum_to_one() {
        let rho = DensityMatrix::maximally_mixed(2);
        let povm = Povm::projective_z(1);
        let total: f64 = povm
            .elements()
            .iter()
            .map(|m| outcome_prob(&rho, m).unwrap())
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_decode_mixed_state() {
        let p = CholeskyParam::new(2, vec![std::f64::consts::FRAC_1_SQRT_2, 0.0, 0.0, std::f64::consts::FRAC_1_SQRT_2]).unwrap();
        let m = cholesky_decode(&p, true).unwrap();
        assert!(max_abs(&(m - DensityMatrix::maximally_mixed(2).matrix().clone())) < 1e-14);
    }

    #[test]
    fn cholesky_decode_is_psd() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let reals: Vec<f64> = (0..16).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let p = CholeskyParam::new(4, reals).unwrap();
            let m = cholesky_decode(&p, false).unwrap();
            assert!(min_eig_hermitian(&m).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn cholesky_zero_trace_normalize_errors() {
        let p = CholeskyParam::new(2, vec![0.0; 4]).unwrap();
        assert!(cholesky_decode(&p, true).is_err());
    }

    #[test]
    fn hermitian_basis_dims_and_orthogonality() {
        for dim in [2usize, 4] {
            let basis = hermitian_basis(dim).unwrap();
            assert_eq!(basis.len(), dim * dim - 1);
            for (i, a) in basis.operators().iter().enumerate() {
                assert!(a.trace().norm() < 1e-12, "basis op {i} not traceless");
                for (j, b) in basis.operators().iter().enumerate() {
                    let ip = trace_of_product(a, b);
                    let expected = if i == j { dim as f64 } else { 0.0 };
                    assert!((ip.re - expected).abs() < 1e-12 && ip.im.abs() < 1e-12);
                }
            }
        }
        assert!(hermitian_basis(3).is_err());
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = DensityMatrix::thermal(0.8).unwrap();
        let b = DensityMatrix::thermal(0.6).unwrap();
        let joint = DensityMatrix::new(tensor(a.matrix(), b.matrix())).unwrap();
        let ra = partial_trace(&joint, 0).unwrap();
        let rb = partial_trace(&joint, 1).unwrap();
        assert!(max_abs(&(ra.matrix() - a.matrix())) < 1e-12);
        assert!(max_abs(&(rb.matrix() - b.matrix())) < 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let mut ket = CVec::zeros(4);
        ket[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        ket[3] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let bell = DensityMatrix::pure(&ket).unwrap();
        for keep in [0, 1] {
            let marg = partial_trace(&bell, keep).unwrap();
            assert!(
                max_abs(&(marg.matrix() - DensityMatrix::maximally_mixed(2).matrix())) < 1e-12
            );
        }
    }

    #[test]
    fn prep_unitaries_reach_cardinal_states() {
        let ground = DensityMatrix::basis_state(2, 0).unwrap();
        // Expected Bloch vectors (x, y, z) for each prep.
        let cases = [
            (PrepSymbol::Zero, (0.0, 0.0, 1.0)),
            (PrepSymbol::One, (0.0, 0.0, -1.0)),
            (PrepSymbol::Plus, (1.0, 0.0, 0.0)),
            (PrepSymbol::Minus, (-1.0, 0.0, 0.0)),
            (PrepSymbol::PlusI, (0.0, 1.0, 0.0)),
            (PrepSymbol::MinusI, (0.0, -1.0, 0.0)),
        ];
        for (sym, (x, y, z)) in cases {
            let u = sym.unitary();
            let rho = &u * ground.matrix() * dag(&u);
            let bx = trace_of_product(&pauli_x(), &rho).re;
            let by = trace_of_product(&pauli_y(), &rho).re;
            let bz = trace_of_product(&pauli_z(), &rho).re;
            assert!(
                (bx - x).abs() < 1e-12 && (by - y).abs() < 1e-12 && (bz - z).abs() < 1e-12,
                "prep {sym:?}: got ({bx}, {by}, {bz})"
            );
        }
    }

    #[test]
    fn basis_rotations_map_eigenstates_to_ground() {
        // Measuring |+> in the x basis must give outcome 0 deterministically,
        // likewise |+i> in the y basis.
        let ground = DensityMatrix::basis_state(2, 0).unwrap();
        let plus = {
            let u = PrepSymbol::Plus.unitary();
            &u * ground.matrix() * dag(&u)
        };
        let ux = BasisSymbol::X.unitary();
        let rotated = &ux * plus * dag(&ux);
        assert_abs_diff_eq!(rotated[(0, 0)].re, 1.0, epsilon = 1e-12);

        let plus_i = {
            let u = PrepSymbol::PlusI.unitary();
            &u * ground.matrix() * dag(&u)
        };
        let uy = BasisSymbol::Y.unitary();
        let rotated = &uy * plus_i * dag(&uy);
        assert_abs_diff_eq!(rotated[(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn label_parse_roundtrip() {
        for s in ["0", "-i", "+i.-", "1.+i"] {
            let l: PrepLabel = s.parse().unwrap();
            assert_eq!(l.to_string(), s);
        }
        for s in ["z", "y.x"] {
            let l: BasisLabel = s.parse().unwrap();
            assert_eq!(l.to_string(), s);
        }
        assert!("q".parse::<PrepLabel>().is_err());
    }
}
