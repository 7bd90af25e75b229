//! Dense complex, real and exact-integer linear algebra.

mod dense;
mod int;
mod period;
mod snf;

pub use dense::{cholesky, cholesky_solve, min_eigenvalue_spd, ComplexMatrix, RealMatrix, C64};
pub use int::{rat_to_f64, IntMatrix, RationalMatrix};
pub use period::{validate_period_matrix, PeriodMatrix, SYMMETRY_TOL};
pub use snf::{lll_reduce, size_reduce, smith_normal_form, solve_affine_integer, AffineSolution, SnfResult};
