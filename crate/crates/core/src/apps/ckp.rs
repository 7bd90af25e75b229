//! Finite-gap CKP potentials `V = 2∂²_x log θ(Σ tₛUₛ − γ|Ω̃)` evaluated
//! directly on the ambient Jacobian and through the Prym expansion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, PeriodMatrix, C64};
use crate::restriction::{coeffs_prym, generate_instance, InstanceKind, PrymSpec};
use crate::theta::{theta, theta_dderiv, Characteristic, ThetaValue};

/// `|θ|` below this multiple of its magnitude scale counts as a zero.
pub const THETA_ZERO_TOL: f64 = 1e-14;

/// Flow data on the Jacobian of a double cover: one direction `Uₛ` per
/// time, each of the shape `(u, u', u)` with blocks of length `g, n, g`.
#[derive(Debug, Clone)]
pub struct FlowData {
    prym: PrymSpec,
    u_vecs: Vec<Vec<C64>>,
    gamma: Vec<C64>,
    times: Vec<f64>,
}

/// On-disk form of [`FlowData`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowDataFile {
    g: usize,
    n: usize,
    big_omega: ComplexMatrix,
    u_vecs: Vec<Vec<[f64; 2]>>,
    gamma: Vec<[f64; 2]>,
    times: Vec<f64>,
}

fn to_pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

fn from_pairs(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|&[a, b]| C64::new(a, b)).collect()
}

impl Serialize for FlowData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FlowDataFile::from(self).serialize(s)
    }
}

impl From<&FlowData> for FlowDataFile {
    fn from(d: &FlowData) -> Self {
        FlowDataFile {
            g: d.prym.g(),
            n: d.prym.n(),
            big_omega: d.prym.big_omega().omega().clone(),
            u_vecs: d.u_vecs.iter().map(|u| to_pairs(u)).collect(),
            gamma: to_pairs(&d.gamma),
            times: d.times.clone(),
        }
    }
}

impl TryFrom<FlowDataFile> for FlowData {
    type Error = Error;

    fn try_from(r: FlowDataFile) -> Result<Self> {
        let om = PeriodMatrix::try_from(r.big_omega)?;
        let prym = PrymSpec::new(r.g, r.n, &om)?;
        let u = r.u_vecs.iter().map(|v| from_pairs(v)).collect();
        FlowData::new(prym, u, from_pairs(&r.gamma), r.times)
    }
}

impl<'de> Deserialize<'de> for FlowData {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        FlowData::try_from(FlowDataFile::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl FlowData {
    pub fn new(prym: PrymSpec, u_vecs: Vec<Vec<C64>>, gamma: Vec<C64>, times: Vec<f64>) -> Result<Self> {
        let (g, n) = (prym.g(), prym.n());
        let dim = 2 * g + n;
        if u_vecs.is_empty() {
            return Err(Error::InvalidInput("at least one flow direction is required".into()));
        }
        if u_vecs.len() != times.len() {
            return Err(Error::DimensionMismatch(format!("{} directions for {} times", u_vecs.len(), times.len())));
        }
        if gamma.len() != dim {
            return Err(Error::DimensionMismatch(format!("gamma of length {}, expected {dim}", gamma.len())));
        }
        for (s, u) in u_vecs.iter().enumerate() {
            if u.len() != dim {
                return Err(Error::DimensionMismatch(format!("direction {s} of length {}, expected {dim}", u.len())));
            }
            if let Some(j) = (0..g).find(|&j| u[j] != u[g + n + j]) {
                return Err(Error::PrymShapeViolation(format!("direction {s}: entry {j} differs from entry {}", g + n + j)));
            }
        }
        if times.iter().any(|t| !t.is_finite()) || gamma.iter().chain(u_vecs.iter().flatten()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(FlowData { prym, u_vecs, gamma, times })
    }

    /// Random admissible data on a generated Prym instance.
    pub fn synthetic(g: usize, n: usize, flows: usize, seed: u64) -> Result<Self> {
        let emb = generate_instance(&InstanceKind::prym(g, n), seed)?;
        let prym = PrymSpec::from_embedding(g, n, emb)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5eed));
        let mut cplx = |re: f64, im: f64| C64::new(rng.gen_range(-re..re), rng.gen_range(-im..im));
        let u_vecs = (0..flows)
            .map(|_| {
                let head: Vec<C64> = (0..g).map(|_| cplx(1.0, 0.3)).collect();
                let mid: Vec<C64> = (0..n).map(|_| cplx(1.0, 0.3)).collect();
                head.iter().chain(&mid).chain(&head).copied().collect()
            })
            .collect();
        let gamma = (0..2 * g + n).map(|_| cplx(1.0, 0.5)).collect();
        let times = (0..flows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FlowData::new(prym, u_vecs, gamma, times)
    }

    pub fn prym(&self) -> &PrymSpec {
        &self.prym
    }

    pub fn big_omega(&self) -> &PeriodMatrix {
        self.prym.big_omega()
    }

    pub fn u_vecs(&self) -> &[Vec<C64>] {
        &self.u_vecs
    }

    pub fn gamma(&self) -> &[C64] {
        &self.gamma
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Copy with different times.
    pub fn with_times(&self, times: Vec<f64>) -> Result<Self> {
        FlowData::new(self.prym.clone(), self.u_vecs.clone(), self.gamma.clone(), times)
    }

    /// Copy with a different shift `γ`.
    pub fn with_gamma(&self, gamma: Vec<C64>) -> Result<Self> {
        FlowData::new(self.prym.clone(), self.u_vecs.clone(), gamma, self.times.clone())
    }

    /// `Σ tₛUₛ − γ`.
    pub fn argument(&self) -> Vec<C64> {
        let mut z: Vec<C64> = self.gamma.iter().map(|c| -c).collect();
        for (u, &t) in self.u_vecs.iter().zip(&self.times) {
            for (zi, ui) in z.iter_mut().zip(u) {
                *zi += ui * t;
            }
        }
        z
    }

    /// `Ũₛ = (2u, u')`, the Prym coordinates of `Uₛ`.
    pub fn prym_direction(&self, s: usize) -> Vec<C64> {
        let g = self.prym.g();
        let n = self.prym.n();
        let u = &self.u_vecs[s];
        (0..g + n).map(|i| if i < g { u[i] * 2.0 } else { u[i] }).collect()
    }
}

/// `2(f″f − f′²)/f²`.
fn log_second_derivative(f: C64, d1: C64, d2: C64) -> C64 {
    (d2 * f - d1 * d1) * 2.0 / (f * f)
}

fn near_zero(f: C64, scale: f64) -> Result<()> {
    if f.norm() < THETA_ZERO_TOL * scale || f.norm() == 0.0 {
        Err(Error::NearThetaZero { value: f.norm(), scale })
    } else {
        Ok(())
    }
}

/// `2∂²log θ(Σ tₛUₛ − γ|Ω̃)` along `U₁`.
pub fn ckp_v_jacobi(data: &FlowData, tol: f64) -> Result<C64> {
    let u1 = data.u_vecs[0].clone();
    if u1.iter().all(|c| *c == C64::new(0.0, 0.0)) {
        return Ok(C64::new(0.0, 0.0));
    }
    let om = data.big_omega();
    let z = data.argument();
    let ch = Characteristic::zero(om.dim());
    let f = theta(&ch, &z, om, tol)?;
    let d1 = theta_dderiv(&ch, &z, om, std::slice::from_ref(&u1), tol)?;
    let d2 = theta_dderiv(&ch, &z, om, &[u1.clone(), u1], tol)?;
    near_zero(f.value, f.scale)?;
    Ok(log_second_derivative(f.value, d1.value, d2.value))
}

/// The same potential from the Prym expansion
/// `Σ_ε c_ε θ[Δ⁻¹ε, 0](Σ tₛŨₛ − γ̃|Π)`, differentiated along `Ũ₁`.
pub fn ckp_v_prym(data: &FlowData, tol: f64) -> Result<C64> {
    let spec = &data.prym;
    let dir = data.prym_direction(0);
    if dir.iter().all(|c| *c == C64::new(0.0, 0.0)) {
        return Ok(C64::new(0.0, 0.0));
    }
    let coeffs = coeffs_prym(spec, &data.gamma, tol)?;
    let gt = spec.reduced_gamma(&data.gamma)?;
    let mut w: Vec<C64> = gt.iter().map(|c| -c).collect();
    for s in 0..data.u_vecs.len() {
        let us = data.prym_direction(s);
        for (wi, ui) in w.iter_mut().zip(&us) {
            *wi += ui * data.times[s];
        }
    }
    let pi = spec.pi();
    let delta = spec.embedding().delta_diag();
    let mut f = C64::new(0.0, 0.0);
    let mut d1 = C64::new(0.0, 0.0);
    let mut d2 = C64::new(0.0, 0.0);
    let mut scale: f64 = 0.0;
    for (eps, c) in &coeffs.entries {
        if c.value == C64::new(0.0, 0.0) {
            continue;
        }
        let ch = Characteristic::from_coset(eps.rep(), delta);
        let t0: ThetaValue = theta(&ch, &w, pi, tol)?;
        let t1 = theta_dderiv(&ch, &w, pi, std::slice::from_ref(&dir), tol)?;
        let t2 = theta_dderiv(&ch, &w, pi, &[dir.clone(), dir.clone()], tol)?;
        f += c.value * t0.value;
        d1 += c.value * t1.value;
        d2 += c.value * t2.value;
        scale = scale.max(c.value.norm() * t0.scale);
    }
    near_zero(f, scale)?;
    Ok(log_second_derivative(f, d1, d2))
}

/// Both potentials and their relative disagreement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CkpComparison {
    pub v_jacobi: C64,
    pub v_prym: C64,
    pub rel_err: f64,
}

pub fn ckp_compare(data: &FlowData, tol: f64) -> Result<CkpComparison> {
    let v_jacobi = ckp_v_jacobi(data, tol)?;
    let v_prym = ckp_v_prym(data, tol)?;
    let denom = v_jacobi.norm().max(v_prym.norm()).max(1e-30);
    let rel_err = if v_jacobi == v_prym { 0.0 } else { (v_jacobi - v_prym).norm() / denom };
    Ok(CkpComparison { v_jacobi, v_prym, rel_err })
}
