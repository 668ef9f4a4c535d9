//! Numerical support: double-double arithmetic, compensated summation,
//! safeguarded root finding, and small least-squares fits.

pub mod dd;
pub mod fit;
pub mod kahan;
pub mod roots;

pub use dd::Dd;
pub use fit::{fit_quadratic, QuadraticFit};
pub use kahan::{sum_compensated, CompensatedSum};
pub use roots::{brent, expand_bracket, linear_fit};
