//! Ratios of two-term Prym theta combinations, the form taken by the
//! angular-velocity components of the rigid body in a fluid.

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::restriction::PrymSpec;
use crate::theta::{theta, Characteristic};

/// Denominators below this multiple of their magnitude scale are refused.
pub const DENOMINATOR_TOL: f64 = 1e-14;

/// Parameters of one ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTerms {
    /// Direction `Ũ` in Prym coordinates.
    pub u: Vec<C64>,
    pub z_num: Vec<C64>,
    pub z_den: Vec<C64>,
    pub c_num: [C64; 2],
    pub c_den: [C64; 2],
    pub amp: C64,
    pub xi: C64,
}

/// ```text
/// amp·e^{t·xi} · (c₀θ(tŨ+z_num) + c₁θ[Δ⁻¹ε₁,0](tŨ+z_num)) / (same with z_den)
/// ```
/// on `Π`, with `ε₁ = (1, 0, …, 0)`.
pub fn prym_theta_ratio(spec: &PrymSpec, terms: &RatioTerms, t: f64, tol: f64) -> Result<C64> {
    let k = spec.g() + spec.n();
    for (name, v) in [("u", &terms.u), ("z_num", &terms.z_num), ("z_den", &terms.z_den)] {
        if v.len() != k {
            return Err(Error::DimensionMismatch(format!("{name} of length {}, expected {k}", v.len())));
        }
    }
    let pi = spec.pi();
    let delta = spec.embedding().delta_diag();
    let mut e1 = vec![0i64; k];
    e1[0] = 1;
    let chars = [Characteristic::zero(k), Characteristic::from_coset(&e1, delta)];
    let combo = |z: &[C64], c: &[C64; 2]| -> Result<(C64, f64)> {
        let w: Vec<C64> = z.iter().zip(&terms.u).map(|(a, u)| a + u * t).collect();
        let mut v = C64::new(0.0, 0.0);
        let mut scale: f64 = 0.0;
        for (ch, ci) in chars.iter().zip(c) {
            let th = theta(ch, &w, pi, tol)?;
            v += ci * th.value;
            scale = scale.max(ci.norm() * th.scale);
        }
        Ok((v, scale))
    };
    let (num, _) = combo(&terms.z_num, &terms.c_num)?;
    let (den, den_scale) = combo(&terms.z_den, &terms.c_den)?;
    if den.norm() == 0.0 || den.norm() < DENOMINATOR_TOL * den_scale {
        return Err(Error::DenominatorNearZero(den.norm()));
    }
    Ok(terms.amp * (terms.xi * t).exp() * num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restriction::{generate_instance, InstanceKind};

    fn spec() -> PrymSpec {
        PrymSpec::from_embedding(1, 2, generate_instance(&InstanceKind::prym(1, 2), 4).unwrap()).unwrap()
    }

    #[test]
    fn identical_terms_give_one() {
        let s = spec();
        let z = vec![C64::new(0.1, 0.2), C64::new(-0.3, 0.0), C64::new(0.4, -0.1)];
        let terms = RatioTerms {
            u: vec![C64::new(0.5, 0.0), C64::new(0.2, 0.1), C64::new(-0.1, 0.0)],
            z_num: z.clone(),
            z_den: z,
            c_num: [C64::new(1.0, 0.5), C64::new(-0.3, 0.2)],
            c_den: [C64::new(1.0, 0.5), C64::new(-0.3, 0.2)],
            amp: C64::new(1.0, 0.0),
            xi: C64::new(0.0, 0.0),
        };
        for t in [0.0, 0.7, -2.3] {
            let r = prym_theta_ratio(&s, &terms, t, 1e-12).unwrap();
            assert!((r - 1.0).norm() < 1e-14);
            assert_eq!(r, prym_theta_ratio(&s, &terms, t + 0.0, 1e-12).unwrap());
        }
    }

    #[test]
    fn zero_denominator_is_refused() {
        let s = spec();
        let z = vec![C64::new(0.0, 0.0); 3];
        let terms = RatioTerms {
            u: z.clone(),
            z_num: z.clone(),
            z_den: z,
            c_num: [C64::new(1.0, 0.0); 2],
            c_den: [C64::new(0.0, 0.0); 2],
            amp: C64::new(1.0, 0.0),
            xi: C64::new(0.0, 0.0),
        };
        assert!(matches!(prym_theta_ratio(&s, &terms, 0.0, 1e-12), Err(Error::DenominatorNearZero(_))));
    }
}
