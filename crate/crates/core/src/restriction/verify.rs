use serde::{Deserialize, Serialize};

use super::coeffs::{restriction_coeffs, CoeffVector};
use super::embedding::EmbeddingData;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::theta::{theta, Characteristic, ThetaValue};

/// Both sides are treated as zero below this magnitude.
pub const NEAR_ZERO: f64 = 1e-20;
/// Absolute error budget used near a common zero.
pub const NEAR_ZERO_ABS_TOL: f64 = 1e-12;
const REL_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCheck {
    pub lhs: ThetaValue,
    pub rhs: ThetaValue,
    pub rel_err: f64,
    pub abs_err: f64,
    /// Both sides below [`NEAR_ZERO`]; `abs_err` is the meaningful figure.
    pub near_zero: bool,
}

impl ExpansionCheck {
    pub fn passes(&self, rel_tol: f64) -> bool {
        if self.near_zero {
            self.abs_err <= NEAR_ZERO_ABS_TOL
        } else {
            self.rel_err <= rel_tol
        }
    }
}

/// Evaluates `θ(Φz − γ|Ω̃)` and `Σ_ε c_ε θ[Δ⁻¹ε, 0](z − Pᵀγ|Ω)`.
pub fn verify_expansion(emb: &EmbeddingData, gamma: &[C64], z: &[C64], tol: f64) -> Result<ExpansionCheck> {
    let coeffs = restriction_coeffs(emb, gamma, tol)?;
    verify_with_coeffs(emb, &coeffs, z, tol)
}

/// Same check with coefficients computed elsewhere (for the same `γ`).
pub fn verify_with_coeffs(emb: &EmbeddingData, coeffs: &CoeffVector, z: &[C64], tol: f64) -> Result<ExpansionCheck> {
    let n = emb.small_dim();
    if z.len() != n {
        return Err(Error::DimensionMismatch(format!("z of length {}, expected {n}", z.len())));
    }
    let gamma = &coeffs.gamma;
    let phiz = emb.map_point(z)?;
    let arg: Vec<C64> = phiz.iter().zip(gamma).map(|(a, b)| a - b).collect();
    let lhs = theta(&Characteristic::zero(emb.big_dim()), &arg, emb.big_omega(), tol)?;
    let rhs = expand(emb, coeffs, z, tol)?;
    let abs_err = (lhs.value - rhs.value).norm();
    let denom = lhs.value.norm().max(rhs.value.norm()).max(REL_FLOOR);
    let near_zero = lhs.value.norm() < NEAR_ZERO && rhs.value.norm() < NEAR_ZERO;
    Ok(ExpansionCheck { lhs, rhs, rel_err: abs_err / denom, abs_err, near_zero })
}

/// `Σ_ε c_ε θ[Δ⁻¹ε, 0](z − Pᵀγ|Ω)` with a combined error bound.
pub fn expand(emb: &EmbeddingData, coeffs: &CoeffVector, z: &[C64], tol: f64) -> Result<ThetaValue> {
    let w: Vec<C64> = z.iter().zip(&coeffs.small_gamma).map(|(a, b)| a - b).collect();
    let mut value = C64::new(0.0, 0.0);
    let mut tail = 0.0;
    let mut scale: f64 = 0.0;
    for (eps, c) in &coeffs.entries {
        if c.value == C64::new(0.0, 0.0) && c.tail_bound == 0.0 {
            continue;
        }
        let ch = Characteristic::from_coset(eps.rep(), emb.delta_diag());
        let t = theta(&ch, &w, emb.small_omega(), tol)?;
        value += c.value * t.value;
        tail += c.value.norm() * t.tail_bound + c.tail_bound * (t.value.norm() + t.tail_bound);
        scale = scale.max(c.value.norm() * t.scale);
    }
    Ok(ThetaValue { value, tail_bound: tail, scale })
}
