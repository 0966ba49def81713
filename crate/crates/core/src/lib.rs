//! Radial Hartree / Hartree-Fock solver and analysis toolkit for
//! closed-shell atoms, built to make the consequences of the nonlocal
//! exchange term directly computable: extra orbital nodes, exchange-driven
//! asymptotics and tunneling enhancement, length/velocity dipole
//! discrepancies, the failure of the product-form Green's function, the
//! modified zero-energy phase-shift theorem, and the non-unique solutions
//! of analytically solvable nonlinear mean-field models.
//!
//! Everything works in atomic units on a shared radial grid.

pub mod analysis;
pub mod atom;
pub mod error;
pub mod grid;
pub mod gauge;
pub mod green;
pub mod hydrogenic;
pub mod linalg;
pub mod model;
pub mod scattering;
pub mod scf;
pub mod tunneling;

pub use error::{HfError, Result};

/// Force deterministic single-threaded dense linear algebra. Called by
/// entry points; safe to call repeatedly.
pub fn set_deterministic() {
    faer::set_global_parallelism(faer::Par::Seq);
}
