//! Cross-check the ZZ shift three ways: from device parameters (coupling,
//! anharmonicities, detuning), and from the published free and restricted
//! Hamiltonians.

use lindtomo::analysis::{zz_from_device, zz_from_device_signed, zz_from_hamiltonian};
use lindtomo::reference;

fn main() -> lindtomo::Result<()> {
    let p = reference::device_params();
    println!(
        "device formula: |omega_zz|/2pi = {:.4} MHz (signed {:.4})",
        zz_from_device(&p)?,
        zz_from_device_signed(&p)?
    );
    println!(
        "free Hamiltonian:       {:.4} MHz",
        zz_from_hamiltonian(&reference::free_two_qubit_hamiltonian())?
    );
    println!(
        "restricted Hamiltonian: {:.4} MHz",
        zz_from_hamiltonian(&reference::restricted_two_qubit_hamiltonian())?
    );
    Ok(())
}
