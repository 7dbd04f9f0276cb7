//! Numerical toolkit: scalar abstraction (plain and dual numbers), dense
//! complex matrices with multiplication counting, and seeded randomness.

pub mod cmat;
pub mod count;
pub mod rng;
pub mod scalar;

pub use cmat::{gram, gram_full, hpd_inv_sqrt, hpd_solve, inverse, CMat, Cholesky};
pub use count::{counted_scope, MulCounter};
pub use scalar::{Dual, Real};

pub use num_complex::{Complex, Complex64};
