//! Physics cross-checks: ZZ-shift extraction from a fitted two-qubit
//! Hamiltonian and from independently known device parameters, plus the
//! free-vs-restricted comparison report.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::lindfit::{deviation_delta, steady_state, LindbladEstimate};
use crate::linalg::CMat;
use crate::qcore::{trace_distance, DensityMatrix};
use crate::spamfit::SpamEstimate;
use crate::{Error, Result};

/// Transmon-pair parameters, all as ordinary (non-angular) frequencies in
/// MHz: coupling `g`, anharmonicities `eta` (negative), and qubit detuning
/// `delta = f_A - f_B`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DeviceParams {
    pub g_mhz: f64,
    pub eta_a_mhz: f64,
    pub eta_b_mhz: f64,
    pub delta_mhz: f64,
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        if self.g_mhz <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "coupling must be positive, got {}",
                self.g_mhz
            )));
        }
        Ok(())
    }
}

/// ZZ shift (MHz, i.e. omega_zz / 2 pi) from a two-qubit Hamiltonian with
/// entries in rad/us and basis order |00>, |01>, |10>, |11>. Gauge-invariant:
/// adding c*I leaves the result unchanged.
pub fn zz_from_hamiltonian(h: &CMat) -> Result<f64> {
    if h.nrows() != 4 || h.ncols() != 4 {
        return Err(Error::DimMismatch(
            "zz_from_hamiltonian expects a 4x4 Hamiltonian".into(),
        ));
    }
    let e = |i: usize| h[(i, i)].re - h[(0, 0)].re;
    Ok((e(3) - e(1) - e(2)) / TAU)
}

/// Signed dispersive ZZ shift (MHz) from device parameters:
/// `2g^2/(delta - eta_b) + 2g^2/(-delta - eta_a)`.
pub fn zz_from_device_signed(p: &DeviceParams) -> Result<f64> {
    p.validate()?;
    let den1 = p.delta_mhz - p.eta_b_mhz;
    let den2 = -p.delta_mhz - p.eta_a_mhz;
    for den in [den1, den2] {
        if den.abs() < 1e-3 {
            return Err(Error::InvalidModel(format!(
                "resonant denominator {den:.2e} MHz in ZZ formula"
            )));
        }
    }
    let g2 = 2.0 * p.g_mhz * p.g_mhz;
    Ok(g2 / den1 + g2 / den2)
}

/// Magnitude of the dispersive ZZ shift (MHz); the signed value is retained
/// in reports via [`zz_from_device_signed`].
pub fn zz_from_device(p: &DeviceParams) -> Result<f64> {
    Ok(zz_from_device_signed(p)?.abs())
}

/// Free-vs-restricted comparison: diamond deviation over a time grid,
/// steady-state distances to the fitted initial state, likelihoods, and (for
/// two qubits) the ZZ shift of both Hamiltonians.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// (time_us, diamond deviation delta(t)).
    pub deltas: Vec<(f64, f64)>,
    pub loglike_free: f64,
    pub loglike_restricted: f64,
    /// D(rho_ss, rho0) per mode; None if the steady state is degenerate.
    pub steady_distance_free: Option<f64>,
    pub steady_distance_restricted: Option<f64>,
    pub zz_free_mhz: Option<f64>,
    pub zz_restricted_mhz: Option<f64>,
}

pub fn compare_report(
    free: &LindbladEstimate,
    restricted: &LindbladEstimate,
    spam: &SpamEstimate,
    times_us: &[f64],
) -> Result<ComparisonReport> {
    if free.model.dim() != restricted.model.dim() {
        return Err(Error::DimMismatch("compare_report: model dims differ".into()));
    }
    let deltas = times_us
        .iter()
        .map(|&t| Ok((t, deviation_delta(&free.model, &restricted.model, t)?)))
        .collect::<Result<Vec<_>>>()?;
    let steady_dist = |est: &LindbladEstimate| -> Option<f64> {
        steady_state(&est.model)
            .ok()
            .and_then(|ss| trace_distance(&ss, &spam.rho0).ok())
    };
    let zz = |est: &LindbladEstimate| -> Option<f64> {
        if est.model.dim() == 4 {
            zz_from_hamiltonian(est.model.hamiltonian()).ok()
        } else {
            None
        }
    };
    Ok(ComparisonReport {
        deltas,
        loglike_free: free.loglike,
        loglike_restricted: restricted.loglike,
        steady_distance_free: steady_dist(free),
        steady_distance_restricted: steady_dist(restricted),
        zz_free_mhz: zz(free),
        zz_restricted_mhz: zz(restricted),
    })
}

/// Steady-state distance to a reference state, as quoted in comparisons.
pub fn steady_state_distance(
    est: &LindbladEstimate,
    reference: &DensityMatrix,
) -> Result<f64> {
    let ss = steady_state(&est.model)?;
    trace_distance(&ss, reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn zz_from_device_published_parameters() {
        let p = DeviceParams {
            g_mhz: 12.0,
            eta_a_mhz: -175.0,
            eta_b_mhz: -190.0,
            delta_mhz: 522.0,
        };
        let zz = zz_from_device(&p).unwrap();
        assert!((zz - 0.4255).abs() < 1e-3, "got {zz}");
        assert!(zz_from_device_signed(&p).unwrap() < 0.0);
    }

    #[test]
    fn zz_from_device_limits() {
        let mut p = DeviceParams {
            g_mhz: 1e-9,
            eta_a_mhz: -175.0,
            eta_b_mhz: -190.0,
            delta_mhz: 522.0,
        };
        assert!(zz_from_device(&p).unwrap() < 1e-15);

        // Symmetric toy case: delta = 0, equal anharmonicity.
        p = DeviceParams {
            g_mhz: 10.0,
            eta_a_mhz: -200.0,
            eta_b_mhz: -200.0,
            delta_mhz: 0.0,
        };
        let zz = zz_from_device(&p).unwrap();
        assert!((zz - 4.0 * 100.0 / 200.0).abs() < 1e-12);

        // Resonant denominator errors.
        p.delta_mhz = 200.0;
        assert!(zz_from_device(&p).is_err());
    }

    #[test]
    fn zz_relabel_symmetry() {
        let p = DeviceParams {
            g_mhz: 12.0,
            eta_a_mhz: -175.0,
            eta_b_mhz: -190.0,
            delta_mhz: 522.0,
        };
        let swapped = DeviceParams {
            g_mhz: p.g_mhz,
            eta_a_mhz: p.eta_b_mhz,
            eta_b_mhz: p.eta_a_mhz,
            delta_mhz: -p.delta_mhz,
        };
        assert!(
            (zz_from_device_signed(&p).unwrap() - zz_from_device_signed(&swapped).unwrap()).abs()
                < 1e-12
        );
    }

    #[test]
    fn zz_from_hamiltonian_cases() {
        // Uncoupled spectrum: zero shift.
        let mut h = CMat::zeros(4, 4);
        let (wa, wb) = (3.0, 5.0);
        h[(1, 1)] = c(wb, 0.0);
        h[(2, 2)] = c(wa, 0.0);
        h[(3, 3)] = c(wa + wb, 0.0);
        assert!(zz_from_hamiltonian(&h).unwrap().abs() < 1e-12);

        // Pure ZZ term at 0.5 MHz.
        let wzz = TAU * 0.5;
        h[(3, 3)] = c(wa + wb + wzz, 0.0);
        assert!((zz_from_hamiltonian(&h).unwrap() - 0.5).abs() < 1e-12);

        // Gauge invariance under c*I.
        let shifted = &h + CMat::identity(4, 4).scale(7.7);
        assert!(
            (zz_from_hamiltonian(&h).unwrap() - zz_from_hamiltonian(&shifted).unwrap()).abs()
                < 1e-12
        );
    }
}
