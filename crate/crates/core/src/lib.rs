//! Numerical laboratory for the fundamental solution
//! I(t, x) = ∫ e^{i(t P(ξ) + ⟨x, ξ⟩)} dξ of a higher-order Schrödinger
//! equation with polynomial symbol P, and for its point-wise decay in t.

pub mod bounds;
pub mod cli;
pub mod decay;
pub mod error;
pub mod oscillatory;
pub mod partition;
pub mod quadrature;
pub mod spectral;
pub mod sphere;
pub mod symbol;

pub use error::{LabError, Result};
pub use symbol::PolynomialSymbol;
