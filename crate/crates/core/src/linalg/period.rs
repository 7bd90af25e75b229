//! Points of the Siegel upper half space.

use serde::{Deserialize, Serialize};

use super::dense::{cholesky, cholesky_solve, min_eigenvalue_spd, ComplexMatrix, RealMatrix, C64};
use crate::error::{Error, Result};

/// Relative asymmetry above which a matrix is rejected outright.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Symmetric complex matrix with positive definite imaginary part.
///
/// The Cholesky factor of `Im Ω`, its inverse and a lower bound on its
/// smallest eigenvalue are cached, since every theta evaluation needs them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct PeriodMatrix {
    omega: ComplexMatrix,
    chol_im: RealMatrix,
    im_inv: RealMatrix,
    lambda_min: f64,
}

impl PeriodMatrix {
    pub fn dim(&self) -> usize {
        self.omega.rows()
    }

    pub fn omega(&self) -> &ComplexMatrix {
        &self.omega
    }

    /// Lower-triangular `L` with `Im Ω = L Lᵀ`.
    pub fn chol_im(&self) -> &RealMatrix {
        &self.chol_im
    }

    pub fn im(&self) -> RealMatrix {
        self.omega.imag_part()
    }

    pub fn im_inv(&self) -> &RealMatrix {
        &self.im_inv
    }

    /// Lower bound on the smallest eigenvalue of `Im Ω`.
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// `(Im Ω)⁻¹ v`.
    pub fn solve_im(&self, v: &[f64]) -> Vec<f64> {
        cholesky_solve(&self.chol_im, v)
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.omega[(i, j)]
    }
}

impl TryFrom<ComplexMatrix> for PeriodMatrix {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        validate_period_matrix(&m)
    }
}

impl From<PeriodMatrix> for ComplexMatrix {
    fn from(p: PeriodMatrix) -> Self {
        p.omega
    }
}

/// Checks symmetry and `Im Ω > 0`, symmetrizing away rounding noise.
pub fn validate_period_matrix(m: &ComplexMatrix) -> Result<PeriodMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "period matrix must be square, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let g = m.rows();
    let scale = m.max_abs();
    let mut asym: f64 = 0.0;
    for i in 0..g {
        for j in 0..i {
            asym = asym.max((m[(i, j)] - m[(j, i)]).norm());
        }
    }
    let rel = if scale > 0.0 { asym / scale } else { 0.0 };
    if rel > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(rel));
    }
    let mut omega = m.clone();
    for i in 0..g {
        for j in 0..i {
            let avg = (m[(i, j)] + m[(j, i)]) * 0.5;
            omega[(i, j)] = avg;
            omega[(j, i)] = avg;
        }
    }
    let im = omega.imag_part();
    let chol_im = cholesky(&im)?;
    let mut im_inv = RealMatrix::zeros(g, g);
    for j in 0..g {
        let mut e = vec![0.0; g];
        e[j] = 1.0;
        let col = cholesky_solve(&chol_im, &e);
        for i in 0..g {
            im_inv[(i, j)] = col[i];
        }
    }
    let lambda_min = min_eigenvalue_spd(&im);
    if !(lambda_min > 0.0) {
        return Err(Error::NotPositiveDefinite { pivot: 0, value: lambda_min });
    }
    Ok(PeriodMatrix { omega, chol_im, im_inv, lambda_min })
}
