//! Transfer-operator machinery for a one-parameter family of matrix product
//! states on a spin-1 chain, with disordered (site-dependent) angles.
//!
//! The crate is organized bottom-up:
//! - [`linalg`]: dense complex linear algebra (SVD rank/null space,
//!   orthonormalization, Hermitian eigensolving) shared by everything else.
//! - [`apparatus`]: the generic transfer apparatus (terminal functional,
//!   per-site transfer maps, unit section) and local-observable evaluation.
//! - [`aklt`]: the concrete angle-parametrized model: isometries, Kraus
//!   matrices, transfer operators, amplitude tables, closed-form
//!   configuration coefficients, and the injectivity condition number.
//! - [`hamiltonian`]: two-site ground spaces, nearest-neighbor projector
//!   terms, finite-chain assembly, and gap/kernel diagnostics.
//! - [`disorder`]: angle distributions, seeded sampling, Lyapunov/Birkhoff
//!   averages, twist-operator expectations, and the geometric filling-process
//!   estimator with regime diagnostics.

pub use num_complex::Complex64 as C64;

pub mod aklt;
pub mod apparatus;
pub mod disorder;
pub mod error;
pub mod hamiltonian;
pub mod linalg;

pub use error::{CoreError, CoreResult};
pub use linalg::{CMat, CVec, Tolerance};
