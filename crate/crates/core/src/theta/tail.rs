//! Rigorous bounds for Gaussian lattice sums truncated to an ellipsoid.
//!
//! For a positive definite `Y` with smallest eigenvalue at least `λ`, a
//! center `c` and an enumeration radius `ρ`, terms with
//! `(m − c)ᵀY(m − c) > ρ²` satisfy
//!
//! ```text
//! Σ e^{-π q(m)} (‖m − c‖ + r₀)^k
//!     ≤ P · e^{-π(1 − θs − θp)ρ²} · Σ_all e^{-πθs q(m)}
//!     ≤ P · e^{-π(1 − θs − θp)ρ²} · (1 + 1/√(θs λ))^g
//! ```
//!
//! where `P = sup_{s ≥ ρ} (s/√λ + r₀)^k e^{-πθp s²}`. The last step bounds
//! each coordinate sum of a unimodal Gaussian by its peak plus its integral.

use std::f64::consts::PI;

const SPLITS_S: [f64; 6] = [0.02, 0.05, 0.1, 0.2, 0.3, 0.45];
const SPLITS_P: [f64; 5] = [0.0, 0.05, 0.1, 0.2, 0.35];

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GaussianTail {
    pub dim: usize,
    pub lambda: f64,
    /// Offset added to `‖m − c‖` inside the polynomial factor.
    pub r0: f64,
    /// Degree of the polynomial factor.
    pub order: usize,
}

impl GaussianTail {
    fn poly_peak(&self, rho: f64, tp: f64) -> f64 {
        let k = self.order as f64;
        if self.order == 0 {
            return 1.0;
        }
        let sl = self.lambda.sqrt();
        let s_star = if tp > 0.0 {
            (-self.r0 * sl + (self.r0 * self.r0 * self.lambda + 2.0 * k / (PI * tp)).sqrt()) / 2.0
        } else {
            f64::INFINITY
        };
        let s = rho.max(s_star);
        if !s.is_finite() {
            return f64::INFINITY;
        }
        (k * (s / sl + self.r0).ln() - PI * tp * s * s).exp()
    }

    /// Bound on the neglected part of the sum, relative to the peak term.
    pub fn bound(&self, rho: f64) -> f64 {
        let mut best = f64::INFINITY;
        for &ts in &SPLITS_S {
            for &tp in &SPLITS_P {
                if ts + tp >= 0.9 || (self.order > 0 && tp == 0.0) {
                    continue;
                }
                let lattice = (1.0 + 1.0 / (ts * self.lambda).sqrt()).powi(self.dim as i32);
                let b = self.poly_peak(rho, tp) * (-PI * (1.0 - ts - tp) * rho * rho).exp() * lattice;
                best = best.min(b);
            }
        }
        best
    }

    /// Smallest radius on a geometric ladder whose bound is below `tol`.
    pub fn radius_for(&self, tol: f64) -> f64 {
        let g = self.dim as f64;
        let mut rho = ((1.0 / tol).ln().max(0.0) + g * 10f64.ln() + 5.0) / PI;
        rho = rho.sqrt();
        for _ in 0..400 {
            if self.bound(rho) <= tol {
                return rho;
            }
            rho *= 1.05;
        }
        rho
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_bound_dominates_true_tail() {
        // Y = [[1]], c = 0: the true tail beyond |n| > ρ.
        let t = GaussianTail { dim: 1, lambda: 1.0, r0: 0.0, order: 0 };
        for rho in [1.5, 2.5, 3.5] {
            let exact: f64 = (1..40)
                .filter(|&n| n as f64 > rho)
                .map(|n| 2.0 * (-PI * (n * n) as f64).exp())
                .sum();
            assert!(t.bound(rho) >= exact, "rho {rho}");
        }
    }

    #[test]
    fn derivative_bound_dominates_true_tail() {
        let t = GaussianTail { dim: 1, lambda: 1.0, r0: 0.0, order: 3 };
        for rho in [1.5, 2.5, 3.5] {
            let exact: f64 = (1..40)
                .filter(|&n| n as f64 > rho)
                .map(|n| 2.0 * (n as f64).powi(3) * (-PI * (n * n) as f64).exp())
                .sum();
            assert!(t.bound(rho) >= exact, "rho {rho}");
        }
    }

    #[test]
    fn radius_meets_tolerance() {
        let t = GaussianTail { dim: 3, lambda: 0.3, r0: 1.0, order: 2 };
        let rho = t.radius_for(1e-12);
        assert!(t.bound(rho) <= 1e-12);
        assert!(rho < 20.0);
    }
}
