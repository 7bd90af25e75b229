//! The Toda chain of type g₂⁽¹⁾: the first-order system `Ẋ = X∘Y`,
//! `Ẏ = CX`, its 7×7 Lax matrices, the spectral curve
//! `det(A_μ − λI) = λ(H₁(μ + 1/μ) − λ⁶ − H₂λ⁴ − H₃λ² − H₄)` and
//! conservation checks along integrated trajectories.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::ode::{integrate, OdeOptions};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

pub const CARTAN: [[f64; 3]; 3] = [[2.0, -1.0, 0.0], [-1.0, 2.0, -3.0], [0.0, -1.0, 2.0]];

/// Positivity floor for `x`; below it the square roots in the Lax entries
/// are considered lost.
pub const X_FLOOR: f64 = 1e-12;
/// Self-test threshold on the relative Lax residual.
pub const LAX_TOL: f64 = 1e-6;
/// Spectral fits with a larger relative structure residual are rejected.
pub const FIT_TOL: f64 = 1e-8;
/// Fixed spectral parameter used for isospectrality checks.
pub const SPECTRAL_MU: C64 = C64 { re: 1.0, im: 0.3 };
const FLOW_MUS: [C64; 4] = [
    C64 { re: 1.0, im: 0.0 },
    C64 { re: -1.0, im: 0.0 },
    SPECTRAL_MU,
    C64 { re: 2.0, im: 0.0 },
];
const N: usize = 7;
const SAMPLES: usize = 12;
const SAMPLE_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TodaState {
    pub x: [f64; 3],
    pub y: [f64; 3],
    pub t: f64,
}

impl TodaState {
    pub fn new(x: [f64; 3], y: [f64; 3], t: f64) -> Result<Self> {
        if x.iter().chain(&y).chain([&t]).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !(x.iter().all(|&v| v > 0.0) || x.iter().all(|&v| v < 0.0)) {
            return Err(Error::InvalidInput(format!("x = {x:?} must be componentwise positive (or componentwise negative)")));
        }
        Ok(TodaState { x, y, t })
    }

    /// `+1` in the positive chart, `−1` in the mirrored one where the
    /// Lax entries `a_k` are real.
    pub fn chart(&self) -> f64 {
        self.x[0].signum()
    }

    fn to_vec(self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    fn from_slice(v: &[f64], t: f64) -> Self {
        TodaState { x: [v[0], v[1], v[2]], y: [v[3], v[4], v[5]], t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralCoeffs {
    pub h: [f64; 4],
}

/// How the diagonal entries `b₁, b₂, b₃` of `A_μ` depend on `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalMap {
    /// `b₁ = (y₁+y₃)/4`, `b₂ = (y₁−2y₂+y₃)/4`, `b₃ = (3y₁+y₃)/4`.
    #[default]
    Verbatim,
    /// `b₁ = (y₂+y₃)/2`, `b₂ = y₃/2`, `b₃ = (y₁+y₂+y₃)/2`, which makes the
    /// Lax equation hold exactly on the invariant hyperplane
    /// `y₁ + 2y₂ + 3y₃ = 0`. Only used when requested.
    CartanConsistent,
}

impl DiagonalMap {
    fn apply(self, y: &[f64; 3]) -> [f64; 3] {
        match self {
            DiagonalMap::Verbatim => [
                (y[0] + y[2]) / 4.0,
                (y[0] - 2.0 * y[1] + y[2]) / 4.0,
                (3.0 * y[0] + y[2]) / 4.0,
            ],
            DiagonalMap::CartanConsistent => [(y[1] + y[2]) / 2.0, y[2] / 2.0, (y[0] + y[1] + y[2]) / 2.0],
        }
    }
}

pub fn toda_rhs(s: &TodaState) -> ([f64; 3], [f64; 3]) {
    let mut dx = [0.0; 3];
    let mut dy = [0.0; 3];
    for i in 0..3 {
        dx[i] = s.x[i] * s.y[i];
        dy[i] = (0..3).map(|j| CARTAN[i][j] * s.x[j]).sum();
    }
    (dx, dy)
}

/// `a₁ = (i/2)√x₃`, `a₂ = (i/2)√x₂`, `a₃ = (i/2)√x₁` (principal root).
fn a_params(x: &[f64; 3]) -> [C64; 3] {
    [x[2], x[1], x[0]].map(|v| C64::new(0.0, 0.5) * C64::new(v, 0.0).sqrt())
}

fn fill_a(a: &[C64; 3], b: &[C64; 3], mu: C64) -> ComplexMatrix {
    let z = C64::new(0.0, 0.0);
    let r2 = C64::new(SQRT_2, 0.0);
    let inv = mu.inv();
    let [a1, a2, a3] = *a;
    let [b1, b2, b3] = *b;
    let rows = [
        [b1, a2, inv * a3, z, a1, z, z],
        [a2, b2, z, r2 * a1, z, z, z],
        [mu * a3, z, b3, z, z, z, -a1],
        [z, r2 * a1, z, z, z, -r2 * a1, z],
        [a1, z, z, z, -b3, z, -inv * a3],
        [z, z, z, -r2 * a1, z, -b2, -a2],
        [z, z, -a1, z, -mu * a3, -a2, -b1],
    ];
    ComplexMatrix::from_vec(N, N, rows.concat()).expect("7x7")
}

fn fill_b(a: &[C64; 3], mu: C64) -> ComplexMatrix {
    let z = C64::new(0.0, 0.0);
    let r2 = C64::new(SQRT_2, 0.0);
    let inv = mu.inv();
    let [a1, a2, a3] = *a;
    let rows = [
        [z, a2, -inv * a3, z, -a1, z, z],
        [-a2, z, z, r2 * a1, z, z, z],
        [mu * a3, z, z, z, z, z, a1],
        [z, -r2 * a1, z, z, z, -r2 * a1, z],
        [a1, z, z, z, z, z, inv * a3],
        [z, z, z, r2 * a1, z, z, -a2],
        [z, z, -a1, z, -mu * a3, a2, z],
    ];
    ComplexMatrix::from_vec(N, N, rows.concat()).expect("7x7")
}

fn check_mu(mu: C64) -> Result<()> {
    if mu == C64::new(0.0, 0.0) || !mu.is_finite() {
        Err(Error::MuZero)
    } else {
        Ok(())
    }
}

/// The Lax matrices with the printed diagonal.
pub fn build_lax(s: &TodaState, mu: C64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    build_lax_with(s, mu, DiagonalMap::Verbatim)
}

pub fn build_lax_with(s: &TodaState, mu: C64, map: DiagonalMap) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_mu(mu)?;
    let a = a_params(&s.x);
    let b = map.apply(&s.y).map(|v| C64::new(v, 0.0));
    Ok((fill_a(&a, &b, mu), fill_b(&a, mu)))
}

/// `dA_μ/dt` along the flow, by the chain rule. `A_μ` is linear in
/// `(a, b)`, so the derivative is `A_μ` evaluated at `(ȧ, ḃ)` with
/// `ȧ_k = a_k y_j / 2` for the `x_j` under the root of `a_k`.
pub fn lax_derivative(s: &TodaState, mu: C64, map: DiagonalMap) -> Result<ComplexMatrix> {
    check_mu(mu)?;
    let (_, dy) = toda_rhs(s);
    let a = a_params(&s.x);
    let da = [a[0] * (s.y[2] / 2.0), a[1] * (s.y[1] / 2.0), a[2] * (s.y[0] / 2.0)];
    let db = map.apply(&dy).map(|v| C64::new(v, 0.0));
    Ok(fill_a(&da, &db, mu))
}

/// `‖dA_μ/dt − [A_μ, B_μ]‖_F / ‖A_μ‖_F`.
pub fn lax_residual(s: &TodaState, mu: C64, map: DiagonalMap) -> Result<f64> {
    let (a, b) = build_lax_with(s, mu, map)?;
    let da = lax_derivative(s, mu, map)?;
    let r = da.sub(&a.commutator(&b)?)?;
    Ok(r.frobenius() / a.frobenius())
}

/// Coefficients `p_0..p_11` of `det(A − λI)` recovered from samples on a
/// circle; exact for the degree-7 polynomial up to rounding.
pub fn char_poly_coeffs(a: &ComplexMatrix) -> Result<[C64; SAMPLES]> {
    if a.rows() != N || !a.is_square() {
        return Err(Error::DimensionMismatch(format!("expected a 7x7 matrix, got {}x{}", a.rows(), a.cols())));
    }
    let mut vals = [C64::new(0.0, 0.0); SAMPLES];
    for (j, v) in vals.iter_mut().enumerate() {
        let lam = C64::from_polar(SAMPLE_RADIUS, 2.0 * PI * j as f64 / SAMPLES as f64);
        let mut m = a.clone();
        for i in 0..N {
            m[(i, i)] -= lam;
        }
        *v = m.determinant()?;
    }
    let mut out = [C64::new(0.0, 0.0); SAMPLES];
    for (k, c) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (j, v) in vals.iter().enumerate() {
            acc += v * C64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / SAMPLES as f64);
        }
        *c = acc / (SAMPLES as f64 * SAMPLE_RADIUS.powi(k as i32));
    }
    Ok(out)
}

/// Result of fitting the spectral-curve form to two characteristic
/// polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFit {
    pub coeffs: SpectralCoeffs,
    /// Largest deviation from the expected shape (even coefficients,
    /// leading coefficient, coefficients above degree 7, disagreement of
    /// `H₂`, `H₃` between the two matrices, imaginary parts), relative to
    /// the largest coefficient.
    pub residual: f64,
    /// Largest odd-power coefficient inside the bracket of the form, i.e.
    /// the largest of `|p_0|, |p_2|, |p_4|, |p_6|` (relative).
    pub odd_bracket: f64,
}

/// Fits `det(A − λI) = λ(H₁s − λ⁶ − H₂λ⁴ − H₃λ² − H₄)` from two matrices
/// at spectral parameters with distinct `s = μ + 1/μ`.
pub fn fit_spectral(a1: &ComplexMatrix, mu1: C64, a2: &ComplexMatrix, mu2: C64) -> Result<SpectralFit> {
    check_mu(mu1)?;
    check_mu(mu2)?;
    let s1 = mu1 + mu1.inv();
    let s2 = mu2 + mu2.inv();
    if (s1 - s2).norm() < 1e-6 {
        return Err(Error::InvalidInput("spectral parameters must have distinct mu + 1/mu".into()));
    }
    let p = char_poly_coeffs(a1)?;
    let q = char_poly_coeffs(a2)?;
    let scale = p.iter().chain(&q).map(|c| c.norm()).fold(1.0, f64::max);

    let h1 = (p[1] - q[1]) / (s1 - s2);
    let h4 = h1 * s1 - p[1];
    let h2 = -(p[5] + q[5]) / 2.0;
    let h3 = -(p[3] + q[3]) / 2.0;

    let mut odd = 0.0f64;
    let mut res = 0.0f64;
    for c in [&p, &q] {
        for k in [0, 2, 4, 6] {
            odd = odd.max(c[k].norm());
        }
        res = res.max((c[7] + 1.0).norm());
        for v in &c[8..] {
            res = res.max(v.norm());
        }
    }
    res = res.max(odd).max((p[5] - q[5]).norm()).max((p[3] - q[3]).norm());
    for h in [h1, h2, h3, h4] {
        res = res.max(h.im.abs());
    }
    Ok(SpectralFit {
        coeffs: SpectralCoeffs { h: [h1.re, h2.re, h3.re, h4.re] },
        residual: res / scale,
        odd_bracket: odd / scale,
    })
}

/// Spectral fit of the printed matrices at `μ = ±1`, without the
/// residual threshold.
pub fn spectral_fit(s: &TodaState, map: DiagonalMap) -> Result<SpectralFit> {
    spectral_fit_at(s, map, C64::new(1.0, 0.0), C64::new(-1.0, 0.0))
}

pub fn spectral_fit_at(s: &TodaState, map: DiagonalMap, mu1: C64, mu2: C64) -> Result<SpectralFit> {
    let (a1, _) = build_lax_with(s, mu1, map)?;
    let (a2, _) = build_lax_with(s, mu2, map)?;
    fit_spectral(&a1, mu1, &a2, mu2)
}

/// `(H₁, H₂, H₃, H₄)` from the printed matrices.
pub fn spectral_coeffs(s: &TodaState) -> Result<SpectralCoeffs> {
    let fit = spectral_fit(s, DiagonalMap::Verbatim)?;
    if fit.residual > FIT_TOL {
        return Err(Error::FitResidualTooLarge(fit.residual));
    }
    Ok(fit.coeffs)
}

/// Eigenvalues of a square complex matrix (complex Schur form).
pub fn eigenvalues(a: &ComplexMatrix) -> Vec<C64> {
    let m = a.to_nalgebra();
    match m.clone().try_schur(f64::EPSILON, 0).and_then(|s| s.eigenvalues()) {
        Some(ev) => ev.iter().copied().collect(),
        None => m.schur().eigenvalues().map(|ev| ev.iter().copied().collect()).unwrap_or_default(),
    }
}

/// Largest distance between two spectra under greedy nearest matching.
pub fn spectrum_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .fold((usize::MAX, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// A root with its residual certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedRoot {
    pub root: C64,
    pub residual: f64,
    /// `Σ|p_k||r|^k`, the natural scale of the residual.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    /// Roots of `λ⁶ + c₂λ⁴ + c₃λ² + c₄ − 2c₁` (curve over `μ = 1`).
    pub over_plus_one: Vec<CertifiedRoot>,
    /// Roots of `λ⁶ + c₂λ⁴ + c₃λ² + c₄ + 2c₁` (curve over `μ = −1`).
    pub over_minus_one: Vec<CertifiedRoot>,
    /// Roots of `c₁μ² − c₄μ + c₁` (the points over `λ = 0`).
    pub mu_roots: Vec<CertifiedRoot>,
    pub warnings: Vec<String>,
}

const SEPARATION_TOL: f64 = 1e-8;

pub fn spectral_curve_fixed_points(c: &SpectralCoeffs) -> FixedPointReport {
    let [c1, c2, c3, c4] = c.h;
    let mut warnings = Vec::new();
    let mut sextic = |shift: f64, label: &str| {
        let coeffs: Vec<C64> = [c4 + shift, 0.0, c3, 0.0, c2, 0.0, 1.0].iter().map(|&v| C64::new(v, 0.0)).collect();
        let roots = poly_roots(&coeffs);
        if min_separation(&roots) < SEPARATION_TOL {
            warnings.push(format!("DegenerateDiscriminant: repeated roots over {label}"));
        }
        certify(&coeffs, &roots)
    };
    let over_plus_one = sextic(-2.0 * c1, "mu = 1");
    let over_minus_one = sextic(2.0 * c1, "mu = -1");

    let quad = [C64::new(c1, 0.0), C64::new(-c4, 0.0), C64::new(c1, 0.0)];
    let mu_roots = if c1.abs() <= 1e-300 {
        warnings.push("DegenerateDiscriminant: c1 = 0, no finite mu roots".to_string());
        Vec::new()
    } else {
        let roots = poly_roots(&quad);
        if min_separation(&roots) < SEPARATION_TOL {
            warnings.push("DegenerateDiscriminant: repeated mu roots".to_string());
        }
        certify(&quad, &roots)
    };
    FixedPointReport { over_plus_one, over_minus_one, mu_roots, warnings }
}

fn certify(coeffs: &[C64], roots: &[C64]) -> Vec<CertifiedRoot> {
    roots
        .iter()
        .map(|&r| {
            let (v, _) = horner(coeffs, r);
            let scale = coeffs.iter().enumerate().map(|(k, c)| c.norm() * r.norm().powi(k as i32)).sum();
            CertifiedRoot { root: r, residual: v.norm(), scale }
        })
        .collect()
}

fn min_separation(roots: &[C64]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            m = m.min((roots[i] - roots[j]).norm());
        }
    }
    m
}

/// Value and derivative of `Σ c_k x^k`.
fn horner(c: &[C64], x: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &ck in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + ck;
    }
    (p, dp)
}

/// All roots of `Σ c_k x^k` (leading coefficient nonzero) by
/// Durand–Kerner iteration followed by Newton polishing.
pub fn poly_roots(c: &[C64]) -> Vec<C64> {
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let monic: Vec<C64> = c.iter().map(|v| v / lead).collect();
    let bound = 1.0 + monic[..deg].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let seed = C64::from_polar(1.0, 0.4);
    let mut roots: Vec<C64> = (0..deg).map(|k| seed.powu(k as u32) * (0.5 * bound)).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..deg {
            let (p, _) = horner(&monic, roots[i]);
            let mut den = C64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    den *= roots[i] - roots[j];
                }
            }
            if den.norm() == 0.0 {
                continue;
            }
            let step = p / den;
            roots[i] -= step;
            delta = delta.max(step.norm() / roots[i].norm().max(1.0));
        }
        if delta < 1e-15 {
            break;
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..5 {
            let (p, dp) = horner(&monic, *r);
            if dp.norm() == 0.0 {
                break;
            }
            let next = *r - p / dp;
            if horner(&monic, next).0.norm() >= p.norm() {
                break;
            }
            *r = next;
        }
    }
    roots
}

/// Lax-pair treatment used for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaxMode {
    /// The chain-rule derivative matches the commutator; spectral data
    /// are read from `A_μ(X(t), Y(t))`.
    StateMatrices,
    /// The self-test failed; spectral data come from matrices transported
    /// by `Ȧ = [A, B_μ(X(t))]` alongside the state.
    MatrixFlow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TodaSample {
    pub state: TodaState,
    pub h: SpectralCoeffs,
    pub fit_residual: f64,
    pub odd_bracket: f64,
    /// Spectrum of `A_μ` at `μ = 1 + 0.3i`.
    pub spectrum: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TodaRun {
    pub map: DiagonalMap,
    pub mode: LaxMode,
    /// Largest relative Lax residual over `μ ∈ {1, −1, 2}` at the initial
    /// state.
    pub self_test_residual: f64,
    pub samples: Vec<TodaSample>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl TodaRun {
    /// `max_i max_t |H_i(t) − H_i(0)|`.
    pub fn conservation_drift(&self) -> f64 {
        let Some(first) = self.samples.first() else { return 0.0 };
        self.samples
            .iter()
            .flat_map(|s| s.h.h.iter().zip(&first.h.h).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }

    pub fn spectrum_drift(&self) -> f64 {
        let Some(first) = self.samples.first() else { return 0.0 };
        self.samples.iter().map(|s| spectrum_distance(&first.spectrum, &s.spectrum)).fold(0.0, f64::max)
    }

    pub fn max_odd_bracket(&self) -> f64 {
        self.samples.iter().map(|s| s.odd_bracket).fold(0.0, f64::max)
    }

    pub fn max_fit_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.fit_residual).fold(0.0, f64::max)
    }

    /// `t,x1,x2,x3,y1,y2,y3,H1,H2,H3,H4` with shortest round-trip floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x1,x2,x3,y1,y2,y3,H1,H2,H3,H4\n");
        for s in &self.samples {
            let st = &s.state;
            let row: Vec<String> = [st.t]
                .iter()
                .chain(&st.x)
                .chain(&st.y)
                .chain(&s.h.h)
                .map(|v| format!("{v:?}"))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TodaConfig {
    pub rtol: f64,
    pub map: DiagonalMap,
    /// Force the matrix-transport mode even when the self-test passes.
    pub force_matrix_flow: bool,
}

impl TodaConfig {
    pub fn new(rtol: f64) -> Self {
        TodaConfig { rtol, map: DiagonalMap::Verbatim, force_matrix_flow: false }
    }
}

fn check_rtol(rtol: f64) -> Result<()> {
    if !(1e-12..=1e-4).contains(&rtol) {
        return Err(Error::InvalidInput(format!("rtol {rtol:e} outside [1e-12, 1e-4]")));
    }
    Ok(())
}

fn ode_options(rtol: f64) -> OdeOptions {
    OdeOptions::new(rtol, rtol * 1e-3)
}

/// Step filter keeping `x` inside its starting chart.
fn chart_guard(sign: f64) -> impl FnMut(f64, &[f64]) -> Result<()> {
    move |t, y| {
        if y[..3].iter().all(|&v| v * sign > X_FLOOR && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::PositivityLost(t))
        }
    }
}

/// Trajectory of the state alone at `101` evenly spaced times in
/// `[s0.t, t_end]`.
pub fn toda_integrate(s0: &TodaState, t_end: f64, rtol: f64) -> Result<Vec<TodaState>> {
    let times: Vec<f64> = (0..=100).map(|k| s0.t + (t_end - s0.t) * k as f64 / 100.0).collect();
    toda_integrate_at(s0, &times, rtol)
}

pub fn toda_integrate_at(s0: &TodaState, times: &[f64], rtol: f64) -> Result<Vec<TodaState>> {
    check_rtol(rtol)?;
    let f = |_: f64, y: &[f64], dy: &mut [f64]| {
        let (dx, dyy) = toda_rhs(&TodaState::from_slice(y, 0.0));
        dy[..3].copy_from_slice(&dx);
        dy[3..].copy_from_slice(&dyy);
    };
    let sol = integrate(f, s0.t, &s0.to_vec(), times, &ode_options(rtol), chart_guard(s0.chart()))?;
    Ok(sol.samples.iter().map(|(t, v)| TodaState::from_slice(v, *t)).collect())
}

/// Largest Lax residual over `μ ∈ {1, −1, 2}`.
pub fn lax_self_test(s: &TodaState, map: DiagonalMap) -> Result<f64> {
    let mut worst = 0.0f64;
    for mu in [1.0, -1.0, 2.0] {
        worst = worst.max(lax_residual(s, C64::new(mu, 0.0), map)?);
    }
    Ok(worst)
}

/// Integrates the chain and records spectral data at each sample time.
pub fn toda_run(s0: &TodaState, times: &[f64], cfg: &TodaConfig) -> Result<TodaRun> {
    check_rtol(cfg.rtol)?;
    let self_test = lax_self_test(s0, cfg.map)?;
    let mode = if self_test <= LAX_TOL && !cfg.force_matrix_flow { LaxMode::StateMatrices } else { LaxMode::MatrixFlow };
    let (samples, acc, rej) = match mode {
        LaxMode::StateMatrices => {
            let states = toda_integrate_at(s0, times, cfg.rtol)?;
            let samples = states
                .iter()
                .map(|st| {
                    let fit = spectral_fit(st, cfg.map)?;
                    let (a, _) = build_lax_with(st, SPECTRAL_MU, cfg.map)?;
                    Ok(TodaSample {
                        state: *st,
                        h: fit.coeffs,
                        fit_residual: fit.residual,
                        odd_bracket: fit.odd_bracket,
                        spectrum: eigenvalues(&a),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (samples, 0, 0)
        }
        LaxMode::MatrixFlow => matrix_flow(s0, times, cfg)?,
    };
    Ok(TodaRun { map: cfg.map, mode, self_test_residual: self_test, samples, accepted_steps: acc, rejected_steps: rej })
}

fn matrix_flow(s0: &TodaState, times: &[f64], cfg: &TodaConfig) -> Result<(Vec<TodaSample>, usize, usize)> {
    let block = 2 * N * N;
    let mut y0 = s0.to_vec();
    for &mu in &FLOW_MUS {
        let (a, _) = build_lax_with(s0, mu, cfg.map)?;
        for v in a.data() {
            y0.push(v.re);
            y0.push(v.im);
        }
    }
    let unpack = |v: &[f64]| -> ComplexMatrix {
        let data = v.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
        ComplexMatrix::from_vec(N, N, data).expect("7x7")
    };
    let f = |_: f64, y: &[f64], dy: &mut [f64]| {
        let st = TodaState::from_slice(y, 0.0);
        let (dx, dyy) = toda_rhs(&st);
        dy[..3].copy_from_slice(&dx);
        dy[3..6].copy_from_slice(&dyy);
        let a = a_params(&st.x);
        for (k, &mu) in FLOW_MUS.iter().enumerate() {
            let off = 6 + k * block;
            let m = unpack(&y[off..off + block]);
            let b = fill_b(&a, mu);
            let c = m.commutator(&b).expect("square");
            for (i, v) in c.data().iter().enumerate() {
                dy[off + 2 * i] = v.re;
                dy[off + 2 * i + 1] = v.im;
            }
        }
    };
    let sol = integrate(f, s0.t, &y0, times, &ode_options(cfg.rtol), chart_guard(s0.chart()))?;
    let samples = sol
        .samples
        .iter()
        .map(|(t, v)| {
            let mats: Vec<ComplexMatrix> = (0..FLOW_MUS.len()).map(|k| unpack(&v[6 + k * block..6 + (k + 1) * block])).collect();
            let fit = fit_spectral(&mats[0], FLOW_MUS[0], &mats[1], FLOW_MUS[1])?;
            Ok(TodaSample {
                state: TodaState::from_slice(v, *t),
                h: fit.coeffs,
                fit_residual: fit.residual,
                odd_bracket: fit.odd_bracket,
                spectrum: eigenvalues(&mats[2]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((samples, sol.accepted, sol.rejected))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> TodaState {
        TodaState::new([1.0, 1.0, 1.0], [0.1, -0.2, 0.1], 0.0).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let (dx, dy) = toda_rhs(&TodaState::new([1.0, 1.0, 1.0], [0.0; 3], 0.0).unwrap());
        assert_eq!(dx, [0.0; 3]);
        assert_eq!(dy, [1.0, -2.0, 1.0]);
        let (dx, _) = toda_rhs(&TodaState::new([1.0, 2.0, 3.0], [1.0; 3], 0.0).unwrap());
        assert_eq!(dx, [1.0, 2.0, 3.0]);
        let (dx, dy) = toda_rhs(&TodaState::new([1e-9; 3], [0.0; 3], 0.0).unwrap());
        assert!(dx.iter().chain(&dy).all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn state_validation() {
        assert!(TodaState::new([0.0, 1.0, 1.0], [0.0; 3], 0.0).is_err());
        assert!(TodaState::new([-1.0, 1.0, 1.0], [0.0; 3], 0.0).is_err());
        assert_eq!(TodaState::new([-1.0; 3], [0.0; 3], 0.0).unwrap().chart(), -1.0);
        assert!(TodaState::new([1.0, f64::NAN, 1.0], [0.0; 3], 0.0).is_err());
    }

    #[test]
    fn lax_entries() {
        let s = TodaState::new([1.0, 1.0, 1.0], [0.3, 0.1, -0.2], 0.0).unwrap();
        let mu = C64::new(2.0, 0.5);
        let (a, _) = build_lax(&s, mu).unwrap();
        let half_i = C64::new(0.0, 0.5);
        assert_eq!(a[(0, 1)], half_i);
        assert_eq!(a[(2, 0)], mu * half_i);
        assert_eq!(a[(6, 6)], C64::new(-(0.3 - 0.2) / 4.0, 0.0));
        assert!(matches!(build_lax(&s, C64::new(0.0, 0.0)), Err(Error::MuZero)));
    }

    #[test]
    fn spectrum_has_plus_minus_pairs_and_zero() {
        let s = state();
        let (a, _) = build_lax(&s, C64::new(1.3, 0.2)).unwrap();
        let ev = eigenvalues(&a);
        assert_eq!(ev.len(), 7);
        let neg: Vec<C64> = ev.iter().map(|v| -v).collect();
        assert!(spectrum_distance(&ev, &neg) < 1e-10);
        assert!(ev.iter().any(|v| v.norm() < 1e-10));
    }

    #[test]
    fn spectral_form_and_mu_symmetry() {
        let s = TodaState::new([0.7, 1.3, 0.9], [0.2, -0.4, 0.3], 0.0).unwrap();
        let fit = spectral_fit(&s, DiagonalMap::Verbatim).unwrap();
        assert!(fit.residual < 1e-12, "{}", fit.residual);
        let a = spectral_fit_at(&s, DiagonalMap::Verbatim, C64::new(2.0, 0.0), C64::new(-1.0, 0.0)).unwrap();
        let b = spectral_fit_at(&s, DiagonalMap::Verbatim, C64::new(0.5, 0.0), C64::new(-1.0, 0.0)).unwrap();
        for (x, y) in a.coeffs.h.iter().zip(&b.coeffs.h) {
            assert!((x - y).abs() < 1e-10);
        }
        for (x, y) in a.coeffs.h.iter().zip(&fit.coeffs.h) {
            assert!((x - y).abs() < 1e-10);
        }
        // Leading coefficient of det(A − λI) is −1.
        let (m, _) = build_lax(&s, C64::new(1.0, 0.0)).unwrap();
        let p = char_poly_coeffs(&m).unwrap();
        assert!((p[7] + 1.0).norm() < 1e-12);
    }

    #[test]
    fn printed_pair_fails_the_lax_equation() {
        let s = state();
        assert!(lax_self_test(&s, DiagonalMap::Verbatim).unwrap() > 0.1);
        assert!(lax_self_test(&s, DiagonalMap::CartanConsistent).unwrap() < 1e-14);
    }

    #[test]
    fn consistent_map_needs_the_invariant_hyperplane() {
        // Off y₁ + 2y₂ + 3y₃ = 0 the alternative diagonal is not exact.
        let s = TodaState::new([1.0, 1.0, 1.0], [0.1, 0.1, 0.1], 0.0).unwrap();
        assert!(lax_self_test(&s, DiagonalMap::CartanConsistent).unwrap() > 1e-3);
    }

    #[test]
    fn short_time_taylor() {
        let s0 = TodaState::new([0.2, 0.3, 0.1], [0.0; 3], 0.0).unwrap();
        let (_, dy) = toda_rhs(&s0);
        for t in [1e-2, 5e-3] {
            let st = toda_integrate_at(&s0, &[t], 1e-12).unwrap()[0];
            for i in 0..3 {
                assert!((st.y[i] - dy[i] * t).abs() < 2.0 * t * t, "t={t}");
            }
        }
    }

    #[test]
    fn time_reversal() {
        let s0 = TodaState::new([-1.0; 3], [0.1, -0.2, 0.1], 0.0).unwrap();
        let rtol = 1e-10;
        let fwd = toda_integrate_at(&s0, &[3.0], rtol).unwrap()[0];
        let back = toda_integrate_at(&fwd, &[0.0], rtol).unwrap()[0];
        for (a, b) in back.x.iter().chain(&back.y).zip(s0.x.iter().chain(&s0.y)) {
            assert!((a - b).abs() < 1000.0 * rtol);
        }
    }

    #[test]
    fn positive_chart_blows_up() {
        let err = toda_integrate(&state(), 10.0, 1e-10).unwrap_err();
        let Error::PositivityLost(t) = err else { panic!("{err:?}") };
        assert!((1.6..1.8).contains(&t), "t = {t}");
    }

    #[test]
    fn mirrored_chart_has_real_lax_entries() {
        let s = TodaState::new([-4.0, -1.0, -9.0], [0.0; 3], 0.0).unwrap();
        let (a, _) = build_lax(&s, C64::new(1.0, 0.0)).unwrap();
        assert_eq!(a[(0, 1)], C64::new(-0.5, 0.0));
        assert_eq!(a[(0, 4)], C64::new(-1.5, 0.0));
    }

    #[test]
    fn rtol_range_is_enforced() {
        assert!(toda_integrate(&state(), 1.0, 1e-3).is_err());
        assert!(toda_integrate(&state(), 1.0, 1e-13).is_err());
    }

    #[test]
    fn fixed_points() {
        let c = SpectralCoeffs { h: [0.3, -1.2, 0.7, 0.4] };
        let r = spectral_curve_fixed_points(&c);
        assert_eq!(r.over_plus_one.len(), 6);
        assert_eq!(r.over_minus_one.len(), 6);
        for root in r.over_plus_one.iter().chain(&r.over_minus_one).chain(&r.mu_roots) {
            assert!(root.residual <= 1e-9 * root.scale, "{root:?}");
        }
        let prod = r.mu_roots[0].root * r.mu_roots[1].root;
        assert!((prod - 1.0).norm() < 1e-12);

        let d = spectral_curve_fixed_points(&SpectralCoeffs { h: [0.0, -1.2, 0.7, 0.4] });
        assert!(spectrum_distance(
            &d.over_plus_one.iter().map(|r| r.root).collect::<Vec<_>>(),
            &d.over_minus_one.iter().map(|r| r.root).collect::<Vec<_>>()
        ) < 1e-10);
        assert!(!d.warnings.is_empty());
    }
}
