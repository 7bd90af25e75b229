//! Integer points in ellipsoids, coset representatives of `Zᵍ/ΔZᵍ` and
//! affine sublattices.
//!
//! Ellipsoids are walked with the Fincke–Pohst recursion on a Cholesky
//! factor: the last coordinate is fixed first, and each deeper coordinate
//! ranges over the interval left by the remaining radius budget.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, IntMatrix, RealMatrix};

pub const DEFAULT_CAPACITY: usize = 100_000_000;

/// Relative slack on the squared radius so that points lying exactly on
/// the boundary survive rounding.
const BOUNDARY_SLACK: f64 = 1e-12;

/// `{x : ‖Tᵀ(x − c)‖ ≤ R}` with `T` lower triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSpec {
    gram_chol: RealMatrix,
    center: Vec<f64>,
    radius: f64,
}

impl EllipsoidSpec {
    pub fn new(gram_chol: RealMatrix, center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!("ellipsoid radius {radius} must be finite and positive")));
        }
        Self::new_unchecked_radius(gram_chol, center, radius)
    }

    /// Builds the spec from the Gram matrix itself rather than its factor.
    pub fn from_gram(gram: &RealMatrix, center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::new(cholesky(gram)?, center, radius)
    }

    pub(crate) fn new_unchecked_radius(gram_chol: RealMatrix, center: Vec<f64>, radius: f64) -> Result<Self> {
        let g = gram_chol.rows();
        if gram_chol.cols() != g || center.len() != g {
            return Err(Error::DimensionMismatch(format!(
                "factor {}x{} with center of length {}",
                g,
                gram_chol.cols(),
                center.len()
            )));
        }
        for i in 0..g {
            if !(gram_chol[(i, i)] > 0.0) || !gram_chol[(i, i)].is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: i, value: gram_chol[(i, i)] });
            }
            for j in i + 1..g {
                if gram_chol[(i, j)] != 0.0 {
                    return Err(Error::InvalidInput("ellipsoid factor must be lower triangular".into()));
                }
            }
        }
        if center.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(EllipsoidSpec { gram_chol, center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn gram_chol(&self) -> &RealMatrix {
        &self.gram_chol
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `‖Tᵀ(x − c)‖²`.
    pub fn norm_sq(&self, x: &[i64]) -> f64 {
        let g = self.dim();
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(&a, &c)| a as f64 - c).collect();
        (0..g)
            .map(|i| {
                let s: f64 = (i..g).map(|j| self.gram_chol[(j, i)] * d[j]).sum();
                s * s
            })
            .sum()
    }

    pub fn iter(&self) -> EllipsoidIter<'_> {
        EllipsoidIter::new(self)
    }
}

/// Lazy depth-first walk over the points of an ellipsoid.
pub struct EllipsoidIter<'a> {
    spec: &'a EllipsoidSpec,
    r2: f64,
    slack: f64,
    n: Vec<i64>,
    hi: Vec<i64>,
    shift: Vec<f64>,
    budget: Vec<f64>,
    level: usize,
    state: IterState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IterState {
    Fresh,
    Running,
    Done,
}

impl<'a> EllipsoidIter<'a> {
    fn new(spec: &'a EllipsoidSpec) -> Self {
        let g = spec.dim();
        let r2 = spec.radius * spec.radius;
        EllipsoidIter {
            spec,
            r2,
            slack: BOUNDARY_SLACK * r2.max(1e-300),
            n: vec![0; g],
            hi: vec![0; g],
            shift: vec![0.0; g],
            budget: vec![0.0; g + 1],
            level: g,
            state: IterState::Fresh,
        }
    }

    /// Sets up the admissible range of coordinate `i` given the budget
    /// left by coordinates above it; `n[i]` is placed one below the range.
    fn open_level(&mut self, i: usize) {
        let t = &self.spec.gram_chol;
        let c = &self.spec.center;
        let g = self.spec.dim();
        let s: f64 = (i + 1..g).map(|j| t[(j, i)] * (self.n[j] as f64 - c[j])).sum();
        let r = (self.budget[i + 1] + self.slack).max(0.0).sqrt();
        let tii = t[(i, i)];
        let lo = (c[i] - (s + r) / tii).ceil();
        let hi = (c[i] + (r - s) / tii).floor();
        self.shift[i] = s;
        self.n[i] = lo as i64 - 1;
        self.hi[i] = hi as i64;
        self.level = i;
    }
}

impl Iterator for EllipsoidIter<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let g = self.spec.dim();
        match self.state {
            IterState::Done => return None,
            IterState::Fresh => {
                self.state = IterState::Running;
                if g == 0 {
                    self.state = IterState::Done;
                    return Some(Vec::new());
                }
                self.budget[g] = self.r2;
                self.open_level(g - 1);
            }
            IterState::Running => {}
        }
        loop {
            let i = self.level;
            self.n[i] += 1;
            if self.n[i] > self.hi[i] {
                if i + 1 == g {
                    self.state = IterState::Done;
                    return None;
                }
                self.level = i + 1;
                continue;
            }
            let tii = self.spec.gram_chol[(i, i)];
            let comp = tii * (self.n[i] as f64 - self.spec.center[i]) + self.shift[i];
            let rest = self.budget[i + 1] - comp * comp;
            if rest < -self.slack {
                continue;
            }
            self.budget[i] = rest;
            if i == 0 {
                return Some(self.n.clone());
            }
            self.open_level(i - 1);
        }
    }
}

/// Points stored contiguously, `dim` coordinates each.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PointSet {
    dim: usize,
    coords: Vec<i64>,
    len: usize,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        PointSet { dim, coords: Vec::new(), len: 0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, p: &[i64]) {
        debug_assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
        self.len += 1;
    }

    pub fn get(&self, k: usize) -> &[i64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i64]> + '_ {
        (0..self.len).map(move |k| self.get(k))
    }

    /// Consecutive blocks of at most `size` points, for chunked reductions.
    pub fn chunks(&self, size: usize) -> impl Iterator<Item = PointChunk<'_>> + '_ {
        let size = size.max(1);
        (0..self.len.div_ceil(size)).map(move |b| {
            let lo = b * size;
            let hi = (lo + size).min(self.len);
            PointChunk { dim: self.dim, len: hi - lo, coords: &self.coords[lo * self.dim..hi * self.dim] }
        })
    }

    pub fn to_vecs(&self) -> Vec<Vec<i64>> {
        self.iter().map(<[i64]>::to_vec).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PointChunk<'a> {
    dim: usize,
    len: usize,
    coords: &'a [i64],
}

impl<'a> PointChunk<'a> {
    pub fn iter(&self) -> impl Iterator<Item = &'a [i64]> + 'a {
        let dim = self.dim;
        let coords = self.coords;
        (0..self.len()).map(move |k| &coords[k * dim..(k + 1) * dim])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn enum_ellipsoid(spec: &EllipsoidSpec) -> Result<PointSet> {
    enum_ellipsoid_with_capacity(spec, DEFAULT_CAPACITY)
}

pub fn enum_ellipsoid_with_capacity(spec: &EllipsoidSpec, capacity: usize) -> Result<PointSet> {
    let mut out = PointSet::new(spec.dim());
    if spec.dim() == 0 {
        // A zero-dimensional chunk of one empty point still needs a length.
        out.len = 1;
        return Ok(out);
    }
    for p in spec.iter() {
        if out.len >= capacity {
            return Err(Error::CapacityExceeded(capacity));
        }
        out.push(&p);
    }
    Ok(out)
}

/// Representative `ε` of a class in `Zᵍ/ΔZᵍ`, `0 ≤ ε_s < δ_s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CosetIndex {
    delta: Vec<i64>,
    rep: Vec<i64>,
}

impl CosetIndex {
    pub fn new(delta: &[i64], rep: Vec<i64>) -> Result<Self> {
        if delta.len() != rep.len() {
            return Err(Error::DimensionMismatch(format!(
                "representative of length {} for {} diagonal entries",
                rep.len(),
                delta.len()
            )));
        }
        if let Some(&d) = delta.iter().find(|&&d| d < 1) {
            return Err(Error::InvalidPolarization(format!("diagonal entry {d} is not positive")));
        }
        if rep.iter().zip(delta).any(|(&e, &d)| e < 0 || e >= d) {
            return Err(Error::InvalidInput(format!("representative {rep:?} outside 0 <= e < {delta:?}")));
        }
        Ok(CosetIndex { delta: delta.to_vec(), rep })
    }

    pub fn delta(&self) -> &[i64] {
        &self.delta
    }

    pub fn rep(&self) -> &[i64] {
        &self.rep
    }

    /// `Δ⁻¹ε` as floating point.
    pub fn fraction(&self) -> Vec<f64> {
        self.rep.iter().zip(&self.delta).map(|(&e, &d)| e as f64 / d as f64).collect()
    }
}

/// Positive diagonal entries of a polarization matrix.
pub fn polarization_diagonal(delta: &IntMatrix) -> Result<Vec<i64>> {
    if delta.rows() != delta.cols() {
        return Err(Error::InvalidPolarization("matrix is not square".into()));
    }
    let diag = delta.diag_entries()?;
    if let Some(&d) = diag.iter().find(|&&d| d < 1) {
        return Err(Error::InvalidPolarization(format!("diagonal entry {d} is not positive")));
    }
    Ok(diag)
}

/// True when `δ_s | δ_{s+1}` throughout.
pub fn is_divisibility_chain(diag: &[i64]) -> bool {
    diag.windows(2).all(|w| w[0] != 0 && w[1] % w[0] == 0)
}

/// All `δ₁⋯δ_g` representatives, last coordinate varying fastest.
///
/// Only positivity of the diagonal is required; the ordering convention
/// `(2,…,2,1,…,1)` used for Prym varieties is not a divisibility chain.
pub fn enum_cosets(delta: &IntMatrix) -> Result<Vec<CosetIndex>> {
    let diag = polarization_diagonal(delta)?;
    let total = diag
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .ok_or_else(|| Error::Overflow("number of cosets".into()))?;
    let g = diag.len();
    let mut out = Vec::with_capacity(total);
    let mut rep = vec![0i64; g];
    for _ in 0..total {
        out.push(CosetIndex { delta: diag.clone(), rep: rep.clone() });
        for s in (0..g).rev() {
            rep[s] += 1;
            if rep[s] < diag[s] {
                break;
            }
            rep[s] = 0;
        }
    }
    Ok(out)
}

/// Points `p + Σ cᵢkᵢ` of an affine sublattice inside `spec`.
pub fn enum_affine_sublattice(particular: &[i64], kernel_basis: &[Vec<i64>], spec: &EllipsoidSpec) -> Result<PointSet> {
    enum_affine_sublattice_with_capacity(particular, kernel_basis, spec, DEFAULT_CAPACITY)
}

pub fn enum_affine_sublattice_with_capacity(
    particular: &[i64],
    kernel_basis: &[Vec<i64>],
    spec: &EllipsoidSpec,
    capacity: usize,
) -> Result<PointSet> {
    let g = spec.dim();
    if particular.len() != g || kernel_basis.iter().any(|k| k.len() != g) {
        return Err(Error::DimensionMismatch("sublattice and ellipsoid dimensions differ".into()));
    }
    let r2 = spec.radius * spec.radius;
    let slack = BOUNDARY_SLACK * r2.max(1e-300);
    let mut out = PointSet::new(g);
    if kernel_basis.is_empty() {
        if spec.norm_sq(particular) <= r2 + slack {
            out.push(particular);
        }
        return Ok(out);
    }
    let form = SublatticeForm::new(particular, kernel_basis, spec.gram_chol(), spec.center())?;
    let left = r2 - form.residual;
    if left < -slack {
        return Ok(out);
    }
    let coeffs = EllipsoidSpec::new_unchecked_radius(form.chol.clone(), form.center.clone(), left.max(0.0).sqrt())?;
    let mut point = vec![0i64; g];
    for c in coeffs.iter() {
        if out.len >= capacity {
            return Err(Error::CapacityExceeded(capacity));
        }
        map_affine(particular, kernel_basis, &c, &mut point)?;
        out.push(&point);
    }
    Ok(out)
}

/// A quadratic form `‖Tᵀ(x − c)‖²` restricted to `x = p + Kc`:
/// it equals `‖Lᵀ(c − c*)‖² + residual` with `L` the factor below.
#[derive(Debug, Clone)]
pub struct SublatticeForm {
    /// Cholesky factor of the Gram matrix of the kernel basis.
    pub chol: RealMatrix,
    /// Real coefficients of the point of the affine span nearest `c`.
    pub center: Vec<f64>,
    /// Minimum of the form over the real affine span.
    pub residual: f64,
}

impl SublatticeForm {
    pub fn new(particular: &[i64], kernel_basis: &[Vec<i64>], gram_chol: &RealMatrix, center: &[f64]) -> Result<Self> {
        let g = center.len();
        let k = kernel_basis.len();
        let t = gram_chol;
        // Columns Tᵀkⱼ and the vector u = Tᵀ(p − c).
        let lift = |v: &[f64]| -> Vec<f64> { (0..g).map(|i| (i..g).map(|j| t[(j, i)] * v[j]).sum()).collect() };
        let cols: Vec<Vec<f64>> = kernel_basis
            .iter()
            .map(|kv| lift(&kv.iter().map(|&x| x as f64).collect::<Vec<_>>()))
            .collect();
        let u = lift(&particular.iter().zip(center).map(|(&p, &c)| p as f64 - c).collect::<Vec<_>>());
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        let gram = RealMatrix::from_fn(k, k, |i, j| dot(&cols[i], &cols[j]));
        let chol = cholesky(&gram).map_err(|_| Error::InvalidInput("kernel basis is linearly dependent".into()))?;
        let rhs: Vec<f64> = cols.iter().map(|c| -dot(c, &u)).collect();
        let center = crate::linalg::cholesky_solve(&chol, &rhs);
        let residual = (dot(&u, &u) - dot(&center, &rhs)).max(0.0);
        Ok(SublatticeForm { chol, center, residual })
    }

    /// Coefficient ellipsoid of radius `rho` around the nearest point.
    pub fn coefficient_ellipsoid(&self, rho: f64) -> Result<EllipsoidSpec> {
        EllipsoidSpec::new_unchecked_radius(self.chol.clone(), self.center.clone(), rho)
    }
}

/// `out = p + Σ cⱼkⱼ` with overflow checking.
pub fn map_affine(particular: &[i64], kernel_basis: &[Vec<i64>], c: &[i64], out: &mut [i64]) -> Result<()> {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = particular[i] as i128;
        for (cj, kv) in c.iter().zip(kernel_basis) {
            acc += *cj as i128 * kv[i] as i128;
        }
        *o = i64::try_from(acc).map_err(|_| Error::Overflow("sublattice point".into()))?;
    }
    Ok(())
}
