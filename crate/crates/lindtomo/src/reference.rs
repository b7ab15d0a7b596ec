//! Reference values from a characterized pair of coupled transmon qubits:
//! fitted SPAM matrices, jump operators and rates, Hamiltonians, and device
//! parameters. These anchor the toolkit's regression and cross-check tests.
//!
//! All matrices are quoted to two decimals, so downstream comparisons must
//! budget for that rounding. Hamiltonian entries are angular frequencies in
//! rad/us; rates are in MHz; basis order is |00>, |01>, |10>, |11>.

use crate::analysis::DeviceParams;
use crate::linalg::{c, CMat};

/// Single-qubit POVM element `M_0` for qubit A (the `M_1` element is
/// `I - M_0`).
pub fn povm_m0_qubit_a() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            c(1.00, 0.0),
            c(-0.01, 0.01),
            c(-0.01, -0.01),
            c(0.04, 0.0),
        ],
    )
}

/// Single-qubit POVM element `M_0` for qubit B.
pub fn povm_m0_qubit_b() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.00, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.04, 0.0)])
}

/// Fitted initial state of qubit A.
pub fn rho0_qubit_a() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[c(0.86, 0.0), c(0.01, 0.01), c(0.01, -0.01), c(0.14, 0.0)],
    )
}

/// Fitted initial state of qubit B.
pub fn rho0_qubit_b() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[c(0.88, 0.0), c(0.01, -0.02), c(0.01, 0.02), c(0.12, 0.0)],
    )
}

/// Fitted two-qubit POVM elements, outcome order 00, 01, 10, 11.
pub fn povm_two_qubit() -> [CMat; 4] {
    let m00 = CMat::from_row_slice(
        4,
        4,
        &[
            c(1.00, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.04, 0.0), c(0.02, -0.03), c(0.0, 0.0),
            c(0.0, 0.0), c(0.02, 0.03), c(0.04, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
        ],
    );
    let m01 = CMat::from_row_slice(
        4,
        4,
        &[
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.95, 0.0), c(0.0, 0.0), c(0.01, 0.02),
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.01, -0.02), c(0.0, 0.0), c(0.04, 0.0),
        ],
    );
    let m10 = CMat::from_row_slice(
        4,
        4,
        &[
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.01, 0.0), c(-0.02, 0.02), c(0.0, 0.0),
            c(0.0, 0.0), c(-0.02, -0.02), c(0.96, 0.0), c(0.01, 0.0),
            c(0.0, 0.0), c(0.01, 0.0), c(0.01, 0.0), c(0.02, 0.0),
        ],
    );
    let m11 = CMat::from_row_slice(
        4,
        4,
        &[
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.01, 0.0), c(0.0, 0.01), c(0.0, -0.02),
            c(0.0, 0.0), c(0.0, -0.01), c(0.01, 0.0), c(-0.01, 0.0),
            c(0.0, 0.0), c(0.0, 0.02), c(-0.01, 0.0), c(0.94, 0.0),
        ],
    );
    [m00, m01, m10, m11]
}

/// Fitted initial two-qubit state.
pub fn rho0_two_qubit() -> CMat {
    CMat::from_row_slice(
        4,
        4,
        &[
            c(0.76, 0.0), c(0.01, -0.01), c(0.01, 0.01), c(0.0, 0.0),
            c(0.01, 0.01), c(0.11, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.01, -0.01), c(0.0, 0.0), c(0.12, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.02, 0.0),
        ],
    )
}

/// Freely fitted two-qubit jump operators (normalized to `Tr[LL^dag] = 1`
/// before two-decimal rounding) with their rates in MHz.
pub fn free_two_qubit_jumps() -> Vec<(f64, CMat)> {
    let l1 = CMat::from_row_slice(
        4,
        4,
        &[
            c(0.48, 0.0), c(-0.12, 0.11), c(0.0, 0.0), c(0.0, 0.0),
            c(-0.08, -0.05), c(-0.48, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(0.48, 0.0), c(-0.12, 0.11),
            c(0.0, 0.0), c(0.0, 0.0), c(-0.08, -0.05), c(-0.48, 0.0),
        ],
    );
    let l2 = CMat::from_row_slice(
        4,
        4,
        &[
            c(0.10, 0.05), c(0.63, 0.02), c(-0.01, 0.0), c(0.0, 0.0),
            c(0.28, -0.02), c(-0.10, -0.06), c(0.0, 0.0), c(-0.01, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(0.10, 0.06), c(0.63, 0.02),
            c(0.0, 0.0), c(0.0, 0.0), c(0.28, -0.02), c(-0.10, -0.06),
        ],
    );
    let l3 = CMat::from_row_slice(
        4,
        4,
        &[
            c(0.50, 0.0), c(0.0, 0.0), c(0.0, -0.02), c(0.0, 0.0),
            c(0.0, 0.0), c(0.50, 0.0), c(0.0, 0.0), c(0.0, -0.02),
            c(0.0, 0.0), c(0.0, 0.0), c(-0.50, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.50, 0.0),
        ],
    );
    let l4 = CMat::from_row_slice(
        4,
        4,
        &[
            c(-0.01, 0.0), c(0.0, -0.01), c(0.0, -0.66), c(0.0, 0.0),
            c(0.0, 0.0), c(-0.01, 0.0), c(0.0, 0.0), c(0.0, -0.66),
            c(0.0, 0.26), c(0.0, 0.0), c(0.01, 0.0), c(0.0, -0.01),
            c(0.0, 0.0), c(-0.01, 0.26), c(0.0, 0.0), c(0.01, 0.0),
        ],
    );
    vec![(0.10, l1), (0.05, l2), (0.07, l3), (0.06, l4)]
}

/// Freely fitted two-qubit Hamiltonian (rad/us).
pub fn free_two_qubit_hamiltonian() -> CMat {
    CMat::from_row_slice(
        4,
        4,
        &[
            c(0.00, 0.0), c(0.0, 0.01), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, -0.01), c(-1.03, 0.0), c(0.0, 0.02), c(-0.04, -0.02),
            c(0.0, 0.0), c(0.0, -0.02), c(-0.25, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(-0.04, 0.02), c(0.0, 0.0), c(1.33, 0.0),
        ],
    )
}

/// Hamiltonian of the restricted fit (rad/us).
pub fn restricted_two_qubit_hamiltonian() -> CMat {
    CMat::from_row_slice(
        4,
        4,
        &[
            c(0.02, 0.0), c(-0.01, 0.01), c(0.0, 0.01), c(0.02, -0.10),
            c(-0.01, -0.01), c(-1.00, 0.0), c(-0.01, 0.09), c(-0.01, -0.10),
            c(0.0, -0.01), c(-0.01, -0.09), c(-0.24, 0.0), c(0.02, 0.07),
            c(0.02, 0.10), c(-0.01, 0.10), c(0.02, -0.07), c(1.33, 0.0),
        ],
    )
}

/// Rates of the restricted fit in MHz, ordered to match the fixed jump
/// shapes of `restricted_jump_ops(2)`: dephasing on A, dephasing on B,
/// damping on A, damping on B. In the quoted source data, qubit B is the
/// least-significant index and carries dephasing 0.16 and damping 0.03;
/// qubit A carries dephasing 0.11 and damping 0.04.
pub fn restricted_two_qubit_rates() -> [f64; 4] {
    [0.11, 0.16, 0.04, 0.03]
}

/// Fitted single-qubit jump operators (qubit A, neighbor in the ground
/// state) with rates in MHz: a dephasing-like and a damping-like operator.
pub fn single_qubit_jumps() -> Vec<(f64, CMat)> {
    let l1 = CMat::from_row_slice(
        2,
        2,
        &[c(0.70, 0.05), c(0.01, -0.14), c(0.01, 0.07), c(-0.70, -0.05)],
    );
    let l2 = CMat::from_row_slice(
        2,
        2,
        &[c(-0.11, -0.01), c(0.22, -0.89), c(0.22, 0.30), c(0.11, 0.01)],
    );
    vec![(0.09, l1), (0.06, l2)]
}

/// Device parameters: coupling, anharmonicities, and detuning
/// (4744 - 4222 MHz), all in MHz.
pub fn device_params() -> DeviceParams {
    DeviceParams {
        g_mhz: 12.0,
        eta_a_mhz: -175.0,
        eta_b_mhz: -190.0,
        delta_mhz: 522.0,
    }
}
