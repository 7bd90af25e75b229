use std::f64::consts::PI;

use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::characteristic::{frac, Characteristic};
use super::tail::GaussianTail;
use crate::error::{Error, Result};
use crate::lattice::{enum_ellipsoid_with_capacity, EllipsoidSpec, PointSet, DEFAULT_CAPACITY};
use crate::linalg::{rat_to_f64, RealMatrix, PeriodMatrix, C64};

/// Points per chunk of a parallel series reduction. Partial sums are
/// combined in a fixed binary tree, so results do not depend on the
/// number of worker threads.
pub const CHUNK_SIZE: usize = 1024;

/// A series value together with a rigorous bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaValue {
    pub value: C64,
    pub tail_bound: f64,
    /// Magnitude of the largest term, the unit in which `tol` is measured.
    pub scale: f64,
}

impl ThetaValue {
    pub fn zero() -> Self {
        ThetaValue { value: C64::new(0.0, 0.0), tail_bound: 0.0, scale: 0.0 }
    }
}

/// `θ[a,b](z|Ω)` with `tail_bound ≤ tol · scale`.
pub fn theta(ch: &Characteristic, z: &[C64], omega: &PeriodMatrix, tol: f64) -> Result<ThetaValue> {
    evaluate(ch, z, omega, &[], Truncation::Tolerance(tol))
}

/// Mixed directional derivative `∂_{d₁}⋯∂_{d_k} θ[a,b](z|Ω)`, `1 ≤ k ≤ 3`.
pub fn theta_dderiv(
    ch: &Characteristic,
    z: &[C64],
    omega: &PeriodMatrix,
    dirs: &[Vec<C64>],
    tol: f64,
) -> Result<ThetaValue> {
    if dirs.is_empty() || dirs.len() > 3 {
        return Err(Error::InvalidInput(format!("{} derivative directions; expected 1 to 3", dirs.len())));
    }
    evaluate(ch, z, omega, dirs, Truncation::Tolerance(tol))
}

/// Same series truncated at an explicit radius `rho` in the metric of
/// `Im Ω`; the reported bound is the one valid for that radius.
pub fn theta_with_radius(
    ch: &Characteristic,
    z: &[C64],
    omega: &PeriodMatrix,
    dirs: &[Vec<C64>],
    rho: f64,
) -> Result<ThetaValue> {
    if dirs.len() > 3 {
        return Err(Error::InvalidInput("at most 3 derivative directions".into()));
    }
    evaluate(ch, z, omega, dirs, Truncation::Radius(rho))
}

/// Radius in the `Im Ω` metric that `theta` would use.
pub fn truncation_radius(ch: &Characteristic, z: &[C64], omega: &PeriodMatrix, order: usize, tol: f64) -> Result<f64> {
    check_dims(ch, z, omega)?;
    let red = Reduction::new(ch, z, omega)?;
    Ok(red.tail(omega, order).radius_for(tol))
}

#[derive(Debug, Clone, Copy)]
enum Truncation {
    Tolerance(f64),
    Radius(f64),
}

fn check_dims(ch: &Characteristic, z: &[C64], omega: &PeriodMatrix) -> Result<()> {
    let g = omega.dim();
    if ch.dim() != g || z.len() != g {
        return Err(Error::DimensionMismatch(format!(
            "characteristic of length {}, argument of length {}, period matrix of size {g}",
            ch.dim(),
            z.len()
        )));
    }
    if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// The series re-centred so that its largest term sits near `m = 0`.
///
/// With `v = Y⁻¹ Im z`, the characteristic is shifted by the integer
/// vector `k = −round(a + v)`, which only reindexes the sum; the real part
/// of `z` is reduced modulo `Zᵍ` using the exact multiplier `e^{2πi⟨a,m⟩}`.
/// The remaining sum `Σ_m exp(πi mΩm + 2πi m·w)` peaks at
/// `c = −(a + k + v) ∈ [−½, ½]ᵍ`.
struct Reduction {
    a_shift: Vec<f64>,
    center: Vec<f64>,
    w_re: Vec<f64>,
    /// Logarithm of the peak term including all phases.
    log_peak: C64,
    r0: f64,
}

impl Reduction {
    fn new(ch: &Characteristic, z: &[C64], omega: &PeriodMatrix) -> Result<Self> {
        let g = omega.dim();
        let x: Vec<f64> = z.iter().map(|c| c.re).collect();
        let y: Vec<f64> = z.iter().map(|c| c.im).collect();
        let kx: Vec<i64> = x.iter().map(|v| v.round() as i64).collect();
        let x0: Vec<f64> = x.iter().zip(&kx).map(|(v, &k)| v - k as f64).collect();

        let v = omega.solve_im(&y);
        let a = ch.a();
        let mut a_shift_q = Vec::with_capacity(g);
        for i in 0..g {
            let k = -(rat_to_f64(&a[i]) + v[i]).round();
            if !(k.abs() < 1e15) {
                return Err(Error::InvalidInput("argument too far from the real subspace".into()));
            }
            a_shift_q.push(a[i] + Rational64::from_integer(k as i64));
        }
        let a_shift: Vec<f64> = a_shift_q.iter().map(rat_to_f64).collect();
        let center: Vec<f64> = (0..g).map(|i| -(a_shift[i] + v[i])).collect();

        let re = omega.omega().real_part();
        let b = ch.b();
        let xa = re.mat_vec(&a_shift);
        let w_re: Vec<f64> = (0..g)
            .map(|i| {
                let w = xa[i] + x0[i] + rat_to_f64(&b[i]);
                w - w.round()
            })
            .collect();

        let mut phase = PI * dot(&a_shift, &xa) + 2.0 * PI * dot(&a_shift, &x0);
        phase += 2.0 * PI * frac_sum(a_shift_q.iter().zip(b).map(|(p, q)| p * q));
        phase += 2.0 * PI * frac_sum(a.iter().zip(&kx).map(|(p, &k)| p * k));
        let log_mag = PI * dot(&v, &y);
        let r0 = dot(&v, &v).sqrt();
        Ok(Reduction { a_shift, center, w_re, log_peak: C64::new(log_mag, phase), r0 })
    }

    fn tail(&self, omega: &PeriodMatrix, order: usize) -> GaussianTail {
        GaussianTail { dim: omega.dim(), lambda: omega.lambda_min(), r0: self.r0, order }
    }
}

fn frac_sum(terms: impl Iterator<Item = Rational64>) -> f64 {
    let s: f64 = terms.map(frac).sum();
    s - s.floor()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn evaluate(
    ch: &Characteristic,
    z: &[C64],
    omega: &PeriodMatrix,
    dirs: &[Vec<C64>],
    trunc: Truncation,
) -> Result<ThetaValue> {
    check_dims(ch, z, omega)?;
    let g = omega.dim();
    if dirs.iter().any(|d| d.len() != g) {
        return Err(Error::DimensionMismatch("derivative direction length".into()));
    }
    let dir_norm: f64 = dirs
        .iter()
        .map(|d| 2.0 * PI * d.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        .product();
    if dir_norm == 0.0 {
        return Ok(ThetaValue::zero());
    }
    let red = Reduction::new(ch, z, omega)?;
    let tail = red.tail(omega, dirs.len());
    let rho = match trunc {
        Truncation::Tolerance(tol) => {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
            }
            tail.radius_for(tol)
        }
        Truncation::Radius(rho) => rho,
    };
    let spec = EllipsoidSpec::new(omega.chol_im().clone(), red.center.clone(), rho)?;
    let points = enum_ellipsoid_with_capacity(&spec, DEFAULT_CAPACITY)?;
    let sum = sum_terms(&points, omega, &red, dirs);

    let peak = red.log_peak.exp();
    let scale = red.log_peak.re.exp() * dir_norm;
    Ok(ThetaValue { value: peak * sum, tail_bound: scale * tail.bound(rho), scale })
}

fn sum_terms(points: &PointSet, omega: &PeriodMatrix, red: &Reduction, dirs: &[Vec<C64>]) -> C64 {
    let g = omega.dim();
    let chol = omega.chol_im();
    let re = omega.omega().real_part();
    let chunks: Vec<_> = points.chunks(CHUNK_SIZE).collect();
    let partial: Vec<C64> = chunks
        .par_iter()
        .map(|chunk| {
            let mut acc = C64::new(0.0, 0.0);
            let mut d = vec![0.0; g];
            let mut mf = vec![0.0; g];
            for m in chunk.iter() {
                for i in 0..g {
                    mf[i] = m[i] as f64;
                    d[i] = mf[i] - red.center[i];
                }
                acc += term(&mf, &d, chol, &re, red, dirs);
            }
            acc
        })
        .collect();
    tree_sum(&partial)
}

fn term(m: &[f64], d: &[f64], chol: &RealMatrix, re: &RealMatrix, red: &Reduction, dirs: &[Vec<C64>]) -> C64 {
    let g = m.len();
    let mut q = 0.0;
    for i in 0..g {
        let s: f64 = (i..g).map(|j| chol[(j, i)] * d[j]).sum();
        q += s * s;
    }
    let phase = PI * re.quad_form(m) + 2.0 * PI * dot(m, &red.w_re);
    let mut t = C64::from_polar((-PI * q).exp(), phase);
    for dir in dirs {
        let s: C64 = (0..g).map(|i| dir[i] * (m[i] + red.a_shift[i])).sum();
        t *= C64::new(0.0, 2.0 * PI) * s;
    }
    t
}

/// Pairwise summation in a fixed tree shape.
pub(crate) fn tree_sum(v: &[C64]) -> C64 {
    match v.len() {
        0 => C64::new(0.0, 0.0),
        1 => v[0],
        n => {
            let (l, r) = v.split_at(n / 2);
            tree_sum(l) + tree_sum(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{validate_period_matrix, ComplexMatrix};

    fn omega_i() -> PeriodMatrix {
        validate_period_matrix(&ComplexMatrix::from_rows(&[vec![C64::new(0.0, 1.0)]]).unwrap()).unwrap()
    }

    #[test]
    fn integer_translation_is_exact() {
        let om = omega_i();
        let ch = Characteristic::zero(1);
        let t0 = theta(&ch, &[C64::new(0.0, 0.0)], &om, 1e-14).unwrap();
        let t1 = theta(&ch, &[C64::new(1.0, 0.0)], &om, 1e-14).unwrap();
        assert_eq!(t0.value, t1.value);
    }

    #[test]
    fn odd_characteristic_vanishes_at_origin() {
        let om = omega_i();
        let ch = Characteristic::from_pairs(&[(1, 2)], &[(1, 2)]).unwrap();
        let t = theta(&ch, &[C64::new(0.0, 0.0)], &om, 1e-14).unwrap();
        assert!(t.value.norm() <= 1e-15 * t.scale, "{:?}", t);
        let d = theta_dderiv(&ch, &[C64::new(0.0, 0.0)], &om, &[vec![C64::new(1.0, 0.0)]], 1e-14).unwrap();
        assert!(d.value.norm() > 0.1);
    }

    #[test]
    fn matches_direct_partial_sum() {
        let om = omega_i();
        let t = theta(&Characteristic::zero(1), &[C64::new(0.0, 0.0)], &om, 1e-14).unwrap();
        let direct: f64 = (-12i64..=12).map(|n| (-PI * (n * n) as f64).exp()).sum();
        assert!((t.value.re - direct).abs() <= 1e-14 * direct);
        assert!(t.value.im.abs() <= 1e-15);
        assert!(t.tail_bound <= 1e-14 * t.scale);
    }

    #[test]
    fn zero_direction_gives_exact_zero() {
        let om = omega_i();
        let t = theta_dderiv(&Characteristic::zero(1), &[C64::new(0.3, 0.1)], &om, &[vec![C64::new(0.0, 0.0)]], 1e-12)
            .unwrap();
        assert_eq!(t.value, C64::new(0.0, 0.0));
        assert_eq!(t.tail_bound, 0.0);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let om = omega_i();
        assert!(matches!(
            theta(&Characteristic::zero(2), &[C64::new(0.0, 0.0)], &om, 1e-10),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn tree_sum_shape() {
        let v: Vec<C64> = (0..5).map(|k| C64::new(k as f64, 0.0)).collect();
        assert_eq!(tree_sum(&v), C64::new(10.0, 0.0));
    }
}
