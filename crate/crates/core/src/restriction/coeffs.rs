use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embedding::EmbeddingData;
use crate::error::{Error, Result};
use crate::lattice::{enum_cosets, enum_ellipsoid, map_affine, CosetIndex, SublatticeForm};
use crate::linalg::{min_eigenvalue_spd, solve_affine_integer, IntMatrix, C64};
use crate::theta::tail::GaussianTail;
use crate::theta::{tree_sum, ThetaValue, CHUNK_SIZE};

/// Expansion coefficients `c_ε`, one per coset of `Zⁿ/ΔZⁿ` in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    pub delta: IntMatrix,
    pub gamma: Vec<C64>,
    /// `Pᵀγ`.
    pub small_gamma: Vec<C64>,
    pub entries: Vec<(CosetIndex, ThetaValue)>,
    pub tol: f64,
}

impl CoeffVector {
    pub fn get(&self, rep: &[i64]) -> Option<&ThetaValue> {
        self.entries.iter().find(|(e, _)| e.rep() == rep).map(|(_, v)| v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// JSON export: `{"[0,1]": [re, im, tail_bound], …}`.
    pub fn to_json_map(&self) -> BTreeMap<String, [f64; 3]> {
        self.entries
            .iter()
            .map(|(e, v)| (serde_json::to_string(e.rep()).expect("integers serialize"), [v.value.re, v.value.im, v.tail_bound]))
            .collect()
    }

    pub fn from_json_map(delta: &IntMatrix, map: &BTreeMap<String, [f64; 3]>) -> Result<Self> {
        let mut entries = Vec::new();
        for eps in enum_cosets(delta)? {
            let key = serde_json::to_string(eps.rep()).expect("integers serialize");
            let [re, im, tail] = *map
                .get(&key)
                .ok_or_else(|| Error::InvalidInput(format!("missing coefficient for {key}")))?;
            entries.push((eps, ThetaValue { value: C64::new(re, im), tail_bound: tail, scale: 0.0 }));
        }
        if entries.len() != map.len() {
            return Err(Error::InvalidInput("coefficient map has extra keys".into()));
        }
        Ok(CoeffVector { delta: delta.clone(), gamma: Vec::new(), small_gamma: Vec::new(), entries, tol: 0.0 })
    }
}

#[derive(Serialize, Deserialize)]
struct CoeffVectorRepr {
    delta: IntMatrix,
    gamma: Vec<[f64; 2]>,
    small_gamma: Vec<[f64; 2]>,
    coeffs: BTreeMap<String, [f64; 3]>,
    tol: f64,
}

impl Serialize for CoeffVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CoeffVectorRepr {
            delta: self.delta.clone(),
            gamma: self.gamma.iter().map(|c| [c.re, c.im]).collect(),
            small_gamma: self.small_gamma.iter().map(|c| [c.re, c.im]).collect(),
            coeffs: self.to_json_map(),
            tol: self.tol,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoeffVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = CoeffVectorRepr::deserialize(d)?;
        let mut v = CoeffVector::from_json_map(&r.delta, &r.coeffs).map_err(serde::de::Error::custom)?;
        v.gamma = r.gamma.iter().map(|&[a, b]| C64::new(a, b)).collect();
        v.small_gamma = r.small_gamma.iter().map(|&[a, b]| C64::new(a, b)).collect();
        v.tol = r.tol;
        Ok(v)
    }
}

/// Coefficients of `θ(Φz − γ|Ω̃) = Σ_ε c_ε θ[Δ⁻¹ε, 0](z − Pᵀγ|Ω)`:
///
/// ```text
/// c_ε = Σ_{ΔΦᵀm = ε} exp(πi⟨m,Ω̃m⟩ − 2πi⟨m,γ⟩ + 2πi⟨ε,Δ⁻¹Pᵀγ⟩ − πi⟨Δ⁻¹ε,ΩΔ⁻¹ε⟩)
/// ```
///
/// The integer system is solved exactly and the sum runs over the
/// solution coset inside an ellipsoid of `Im Ω̃` around the peak.
pub fn restriction_coeffs(emb: &EmbeddingData, gamma: &[C64], tol: f64) -> Result<CoeffVector> {
    let gt = emb.big_dim();
    if gamma.len() != gt {
        return Err(Error::DimensionMismatch(format!("gamma of length {} for ambient dimension {gt}", gamma.len())));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    let a = emb.delta_phi_t();
    let small_gamma = emb.pull_back(gamma)?;
    let cosets = enum_cosets(emb.delta())?;
    let entries = cosets
        .par_iter()
        .map(|eps| coeff_one(emb, &a, gamma, &small_gamma, eps, tol).map(|v| (eps.clone(), v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoeffVector { delta: emb.delta().clone(), gamma: gamma.to_vec(), small_gamma, entries, tol })
}

/// `2πi⟨ε,Δ⁻¹Pᵀγ⟩ − πi⟨Δ⁻¹ε,ΩΔ⁻¹ε⟩`.
pub(crate) fn coset_constant(emb: &EmbeddingData, small_gamma: &[C64], eps: &CosetIndex) -> C64 {
    let f = eps.fraction();
    let n = f.len();
    let om = emb.small_omega().omega();
    let mut lin = C64::new(0.0, 0.0);
    let mut quad = C64::new(0.0, 0.0);
    for i in 0..n {
        lin += small_gamma[i] * (eps.rep()[i] as f64 / emb.delta_diag()[i] as f64);
        for j in 0..n {
            quad += om[(i, j)] * (f[i] * f[j]);
        }
    }
    C64::new(0.0, 2.0 * PI) * lin - C64::new(0.0, PI) * quad
}

fn coeff_one(
    emb: &EmbeddingData,
    a: &IntMatrix,
    gamma: &[C64],
    small_gamma: &[C64],
    eps: &CosetIndex,
    tol: f64,
) -> Result<ThetaValue> {
    let sol = match solve_affine_integer(a, eps.rep()) {
        Ok(s) => s,
        Err(Error::NoSolution) => return Ok(ThetaValue::zero()),
        Err(e) => return Err(e),
    };
    let big = emb.big_omega();
    let g = big.dim();
    // Peak of |exp(πi mΩ̃m − 2πi m·γ)| over real m.
    let v0 = big.solve_im(&gamma.iter().map(|c| c.im).collect::<Vec<_>>());
    let peak_log = PI * v0.iter().zip(gamma).map(|(v, c)| v * c.im).sum::<f64>();
    let konst = coset_constant(emb, small_gamma, eps);

    let (points, residual, tail_rel) = if sol.kernel_basis.is_empty() {
        let q = quad_im(big.chol_im(), &sol.particular, &v0);
        (vec![sol.particular.clone()], q, 0.0)
    } else {
        let form = SublatticeForm::new(&sol.particular, &sol.kernel_basis, big.chol_im(), &v0)?;
        let k = sol.kernel_basis.len();
        let gram = form.chol.matmul(&form.chol.transpose())?;
        let tail = GaussianTail { dim: k, lambda: min_eigenvalue_spd(&gram), r0: 0.0, order: 0 };
        let rho = tail.radius_for(tol);
        let spec = form.coefficient_ellipsoid(rho)?;
        let coeffs = enum_ellipsoid(&spec)?;
        let mut pts = Vec::with_capacity(coeffs.len());
        let mut buf = vec![0i64; g];
        for c in coeffs.iter() {
            map_affine(&sol.particular, &sol.kernel_basis, c, &mut buf)?;
            pts.push(buf.clone());
        }
        (pts, form.residual, tail.bound(rho))
    };

    let re = big.omega().real_part();
    let gamma_re: Vec<f64> = gamma.iter().map(|c| c.re).collect();
    let partial: Vec<C64> = points
        .par_chunks(CHUNK_SIZE)
        .map(|chunk| {
            let mut acc = C64::new(0.0, 0.0);
            for m in chunk {
                let mf: Vec<f64> = m.iter().map(|&x| x as f64).collect();
                let q = quad_im(big.chol_im(), m, &v0);
                let lin: f64 = mf.iter().zip(&gamma_re).map(|(a, b)| a * b).sum();
                let phase = PI * re.quad_form(&mf) - 2.0 * PI * lin;
                acc += C64::from_polar((-PI * (q - residual)).exp(), phase);
            }
            acc
        })
        .collect();
    let sum = tree_sum(&partial);
    let log_scale = C64::new(peak_log - PI * residual, 0.0) + konst;
    let scale = log_scale.re.exp();
    Ok(ThetaValue { value: log_scale.exp() * sum, tail_bound: scale * tail_rel, scale })
}

/// `(m − c)ᵀ Y (m − c)` from the Cholesky factor of `Y`.
fn quad_im(chol: &crate::linalg::RealMatrix, m: &[i64], c: &[f64]) -> f64 {
    let g = c.len();
    let d: Vec<f64> = m.iter().zip(c).map(|(&a, b)| a as f64 - b).collect();
    (0..g)
        .map(|i| {
            let s: f64 = (i..g).map(|j| chol[(j, i)] * d[j]).sum();
            s * s
        })
        .sum()
}
