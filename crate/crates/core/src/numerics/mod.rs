//! Numerical kernel: special functions, quadrature, dense symmetric linear
//! algebra and a splittable Gaussian random source.

pub mod linalg;
pub mod quadrature;
pub mod random;
pub mod special;

pub use linalg::{cholesky_psd, regression_residual, CholeskyFactor, Regression, SymMatrix};
pub use quadrature::{
    gauss_legendre, integrate_adaptive, integrate_adaptive_panels, integrate_adaptive_panels_batch, Integral, QuadratureRule,
};
pub use random::{draw_standard_normal, RandomStream};
pub use special::{beta, gamma, log_gamma};
