use std::f64::consts::PI;

use num_rational::Rational64;
use rayon::prelude::*;

use super::coeffs::CoeffVector;
use super::embedding::{build_embedding, EmbeddingData};
use crate::error::{Error, Result};
use crate::lattice::{enum_cosets, enum_ellipsoid, EllipsoidSpec};
use crate::linalg::{cholesky_solve, min_eigenvalue_spd, IntMatrix, PeriodMatrix, RationalMatrix, RealMatrix, C64};
use crate::theta::tail::GaussianTail;
use crate::theta::{tree_sum, ThetaValue};

/// Prym variety of a double cover: the ambient Jacobian has dimension
/// `2g + n`, the involution swaps the first and last `g` coordinates, and
/// the polarization is `(2,…,2,1,…,1)` with `n` ones.
#[derive(Debug, Clone)]
pub struct PrymSpec {
    g: usize,
    n: usize,
    emb: EmbeddingData,
}

impl PrymSpec {
    pub fn new(g: usize, n: usize, big_omega: &PeriodMatrix) -> Result<Self> {
        if g == 0 {
            return Err(Error::InvalidInput("Prym data needs g >= 1".into()));
        }
        if big_omega.dim() != 2 * g + n {
            return Err(Error::DimensionMismatch(format!(
                "Prym data with g = {g}, n = {n} needs a period matrix of size {}, got {}",
                2 * g + n,
                big_omega.dim()
            )));
        }
        let (phi, p, delta) = prym_maps(g, n);
        let emb = build_embedding(big_omega, &phi, &p, &delta)?;
        Ok(PrymSpec { g, n, emb })
    }

    /// Wraps existing embedding data after checking it has the Prym maps.
    pub fn from_embedding(g: usize, n: usize, emb: EmbeddingData) -> Result<Self> {
        let (phi, p, delta) = prym_maps(g, n);
        if emb.phi() != &phi || emb.p() != &p || emb.delta() != &delta {
            return Err(Error::InvalidInput("embedding does not carry the Prym maps".into()));
        }
        Ok(PrymSpec { g, n, emb })
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn embedding(&self) -> &EmbeddingData {
        &self.emb
    }

    pub fn big_omega(&self) -> &PeriodMatrix {
        self.emb.big_omega()
    }

    /// `Π = PᵀΩ̃P`.
    pub fn pi(&self) -> &PeriodMatrix {
        self.emb.small_omega()
    }

    /// `γ̃ = (γ₁ + γ̃₁, …, γ_g + γ̃_g, γ_{g+1}, …, γ_{g+n})` for
    /// `γ = (γ₁, …, γ_{g+n}, γ̃₁, …, γ̃_g)`.
    pub fn reduced_gamma(&self, gamma: &[C64]) -> Result<Vec<C64>> {
        let (g, n) = (self.g, self.n);
        if gamma.len() != 2 * g + n {
            return Err(Error::DimensionMismatch(format!("gamma of length {}, expected {}", gamma.len(), 2 * g + n)));
        }
        Ok((0..g + n).map(|i| if i < g { gamma[i] + gamma[g + n + i] } else { gamma[i] }).collect())
    }
}

/// `Φ = (½I 0; 0 I; ½I 0)`, `P = (I 0; 0 I; I 0)`, `Δ = diag(2,…,2,1,…,1)`.
pub fn prym_maps(g: usize, n: usize) -> (RationalMatrix, IntMatrix, IntMatrix) {
    let rows = 2 * g + n;
    let cols = g + n;
    let mut phi = RationalMatrix::zeros(rows, cols);
    let mut p = vec![0i64; rows * cols];
    for j in 0..g {
        phi[(j, j)] = Rational64::new(1, 2);
        phi[(g + n + j, j)] = Rational64::new(1, 2);
        p[j * cols + j] = 1;
        p[(g + n + j) * cols + j] = 1;
    }
    for j in 0..n {
        phi[(g + j, g + j)] = Rational64::from_integer(1);
        p[(g + j) * cols + g + j] = 1;
    }
    let diag: Vec<i64> = (0..cols).map(|j| if j < g { 2 } else { 1 }).collect();
    (phi, IntMatrix::from_vec(rows, cols, p).expect("shape is consistent"), IntMatrix::diagonal(&diag))
}

/// Coefficients computed from the explicit parameterization
/// `m_ε = (m, 0, ε − m)`, `m ∈ Zᵍ`:
///
/// ```text
/// c_ε = Σ_m exp(πi⟨m_ε,Ω̃m_ε⟩ + πi⟨ε,γ̃⟩ − 2πi⟨m_ε,γ⟩ − πi⟨Δ⁻¹ε,ΠΔ⁻¹ε⟩)
/// ```
pub fn coeffs_prym(spec: &PrymSpec, gamma: &[C64], tol: f64) -> Result<CoeffVector> {
    let gt = spec.reduced_gamma(gamma)?;
    let cosets = enum_cosets(spec.emb.delta())?;
    let entries = cosets
        .par_iter()
        .map(|eps| coeff_prym_single(spec, gamma, eps.rep(), tol).map(|v| (eps.clone(), v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoeffVector { delta: spec.emb.delta().clone(), gamma: gamma.to_vec(), small_gamma: gt, entries, tol })
}

/// A single coefficient; `eps` must have entries in `{0, 1}` on the first
/// `g` positions and zeros after.
pub fn coeff_prym_single(spec: &PrymSpec, gamma: &[C64], eps: &[i64], tol: f64) -> Result<ThetaValue> {
    let (g, n) = (spec.g, spec.n);
    let gt = spec.reduced_gamma(gamma)?;
    if eps.len() != g + n
        || eps[..g].iter().any(|&e| e != 0 && e != 1)
        || eps[g..].iter().any(|&e| e != 0)
    {
        return Err(Error::NotInIndexSet(eps.to_vec()));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    let dim = 2 * g + n;
    let big = spec.big_omega().omega();
    let y = big.imag_part();
    let x = big.real_part();

    // m_ε = e + Zm with e = (0, 0, ε) and Z = (I; 0; −I).
    let e: Vec<f64> = (0..dim).map(|i| if i >= g + n { eps[i - g - n] as f64 } else { 0.0 }).collect();
    let zcol = |i: usize, j: usize| -> f64 {
        if i == j {
            1.0
        } else if i == g + n + j {
            -1.0
        } else {
            0.0
        }
    };
    // Magnitude: −π m_εᵀY m_ε + 2π m_ε·Im γ.
    let gamma_im: Vec<f64> = gamma.iter().map(|c| c.im).collect();
    let gram = RealMatrix::from_fn(g, g, |a, b| {
        let mut s = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                s += zcol(i, a) * y[(i, j)] * zcol(j, b);
            }
        }
        s
    });
    let ye = y.mat_vec(&e);
    let lin: Vec<f64> = (0..g)
        .map(|a| (0..dim).map(|i| zcol(i, a) * (gamma_im[i] - ye[i])).sum())
        .collect();
    let chol = crate::linalg::cholesky(&gram)?;
    let center = cholesky_solve(&chol, &lin);
    let log_peak = |mv: &[f64]| -> f64 {
        let me: Vec<f64> = (0..dim).map(|i| e[i] + (0..g).map(|a| zcol(i, a) * mv[a]).sum::<f64>()).collect();
        -PI * y.quad_form(&me) + 2.0 * PI * me.iter().zip(&gamma_im).map(|(a, b)| a * b).sum::<f64>()
    };
    let peak = log_peak(&center);

    let tail = GaussianTail { dim: g, lambda: min_eigenvalue_spd(&gram), r0: 0.0, order: 0 };
    let rho = tail.radius_for(tol);
    let points = enum_ellipsoid(&EllipsoidSpec::new(chol, center.clone(), rho)?)?;

    let pi_om = spec.pi().omega();
    let f: Vec<f64> = eps.iter().enumerate().map(|(i, &v)| v as f64 / if i < g { 2.0 } else { 1.0 }).collect();
    let mut konst = C64::new(0.0, 0.0);
    for i in 0..g + n {
        konst += C64::new(0.0, PI) * gt[i] * eps[i] as f64;
        for j in 0..g + n {
            konst -= C64::new(0.0, PI) * pi_om[(i, j)] * (f[i] * f[j]);
        }
    }

    let terms: Vec<C64> = points
        .iter()
        .map(|m| {
            let mv: Vec<f64> = m.iter().map(|&v| v as f64).collect();
            let me: Vec<f64> = (0..dim).map(|i| e[i] + (0..g).map(|a| zcol(i, a) * mv[a]).sum::<f64>()).collect();
            let phase = PI * x.quad_form(&me) - 2.0 * PI * me.iter().zip(gamma).map(|(a, c)| a * c.re).sum::<f64>();
            C64::from_polar((log_peak(&mv) - peak).exp(), phase)
        })
        .collect();
    let log_scale = C64::new(peak, 0.0) + konst;
    let scale = log_scale.re.exp();
    Ok(ThetaValue { value: log_scale.exp() * tree_sum(&terms), tail_bound: scale * tail.bound(rho), scale })
}
