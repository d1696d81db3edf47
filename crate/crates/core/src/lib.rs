//! Numerical laboratory for the 2D quasi-linear hyperbolic Prandtl system in
//! its first-order reformulation.
//!
//! The crate evolves the tangential velocity `u` together with the relaxation
//! field `phi = du/dt + u du/dx + v du/dy`, the transported auxiliary field
//! `U` (through its vertical primitive `f`) and the derivative-loss-curing
//! combination `lambda = du/dx - (du/dy) * int_0^y U`, all on a Fourier x
//! Chebyshev half-strip. On top of the dynamics it provides
//!
//! * truncated anisotropic Gevrey norms `X_rho` / `Y_rho` with a shrinking
//!   analyticity radius `rho(t) = rho0 exp(-mu t)` ([`norms`], [`weights`]),
//! * a bootstrap monitor for the a priori energy estimate ([`monitor`]),
//! * exact big-rational certificates for the combinatorial weight
//!   inequalities the energy estimate relies on ([`verifier`]).

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod initdata;
pub mod monitor;
pub mod norms;
pub mod verifier;
pub mod weights;

pub use error::{Error, Result};
