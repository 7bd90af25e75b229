use std::f64::consts::PI;

use super::characteristic::Characteristic;
use super::series::{tree_sum, ThetaValue};
use crate::error::{Error, Result};
use crate::lattice::{enum_cosets, polarization_diagonal, CosetIndex};
use crate::linalg::{IntMatrix, PeriodMatrix, C64};

/// Basis `θ[Δ⁻¹ε, 0](z|Ω)`, `ε ∈ Zᵍ/ΔZᵍ`, of theta functions for the
/// lattice `ΔZᵍ + ΩZᵍ`.
#[derive(Debug, Clone)]
pub struct ThetaBasis {
    pub delta: IntMatrix,
    pub omega: PeriodMatrix,
    pub cosets: Vec<CosetIndex>,
    pub elements: Vec<Characteristic>,
}

impl ThetaBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

pub fn level_basis(delta: &IntMatrix, omega: &PeriodMatrix) -> Result<ThetaBasis> {
    let diag = polarization_diagonal(delta)?;
    if diag.len() != omega.dim() {
        return Err(Error::DimensionMismatch(format!(
            "polarization of size {} for a period matrix of size {}",
            diag.len(),
            omega.dim()
        )));
    }
    let cosets = enum_cosets(delta)?;
    let elements = cosets.iter().map(|c| Characteristic::from_coset(c.rep(), &diag)).collect();
    Ok(ThetaBasis { delta: delta.clone(), omega: omega.clone(), cosets, elements })
}

/// Fourier coefficient `a_{ε+Δm}` in closed form.
pub fn fourier_coefficient(eps: &CosetIndex, m: &[i64], omega: &PeriodMatrix) -> C64 {
    let f = eps.fraction();
    let mf: Vec<f64> = m.iter().map(|&x| x as f64).collect();
    let om = omega.omega();
    let g = f.len();
    let mut e = C64::new(0.0, 0.0);
    for i in 0..g {
        for j in 0..g {
            e += om[(i, j)] * (mf[i] * mf[j] + 2.0 * f[i] * mf[j] + f[i] * f[j]);
        }
    }
    (C64::new(0.0, PI) * e).exp()
}

/// `θ_ε(z)` summed as the Fourier series `Σ_m a_{ε+Δm} e^{2πi⟨ε+Δm, Δ⁻¹z⟩}`
/// over a coordinate box, without the argument reduction or ellipsoid
/// walk used by [`super::theta`].
pub fn theta_recursion_oracle(
    eps: &CosetIndex,
    delta: &IntMatrix,
    omega: &PeriodMatrix,
    z: &[C64],
    tol: f64,
) -> Result<ThetaValue> {
    let diag = polarization_diagonal(delta)?;
    let g = omega.dim();
    if diag.len() != g || z.len() != g || eps.rep().len() != g {
        return Err(Error::DimensionMismatch("oracle inputs disagree in dimension".into()));
    }
    if eps.delta() != diag.as_slice() {
        return Err(Error::InvalidInput("coset index belongs to another polarization".into()));
    }
    let lambda = omega.lambda_min();
    let f = eps.fraction();
    // Peak of |a_{ε+Δm} e^{…}| as a function of real m.
    let v = omega.solve_im(&z.iter().map(|c| c.im).collect::<Vec<_>>());
    let center: Vec<i64> = (0..g).map(|i| (-(v[i] + f[i])).round() as i64).collect();
    let half = ((1.0 / tol).ln().max(0.0) + g as f64 * 10f64.ln() + 5.0) / (PI * lambda);
    let b = half.sqrt().ceil() as i64 + 2;

    let mut terms = Vec::new();
    let mut m = vec![0i64; g];
    let mut offs = vec![-b; g];
    let mut peak: f64 = 0.0;
    'outer: loop {
        for i in 0..g {
            m[i] = center[i] + offs[i];
        }
        let a = fourier_coefficient(eps, &m, omega);
        let mut phase = C64::new(0.0, 0.0);
        for i in 0..g {
            let k = eps.rep()[i] as f64 + diag[i] as f64 * m[i] as f64;
            phase += z[i] * (k / diag[i] as f64);
        }
        let t = a * (C64::new(0.0, 2.0 * PI) * phase).exp();
        peak = peak.max(t.norm());
        terms.push(t);
        for i in (0..g).rev() {
            offs[i] += 1;
            if offs[i] <= b {
                continue 'outer;
            }
            offs[i] = -b;
        }
        break;
    }
    // Outside the box some coordinate exceeds b − 1 in distance from the
    // real peak, so each missed term is below e^{-πλ(b−1)²} times the peak
    // up to the Gaussian shift; the factor covers the number of shells.
    let shell = (-PI * lambda * ((b - 1) as f64).powi(2)).exp();
    let count = 2.0 * g as f64 * (1.0 + 1.0 / lambda.sqrt()).powi(g as i32);
    let scale = (PI * v.iter().zip(z).map(|(a, c)| a * c.im).sum::<f64>()).exp();
    Ok(ThetaValue { value: tree_sum(&terms), tail_bound: scale * shell * count, scale: peak.max(scale) })
}
