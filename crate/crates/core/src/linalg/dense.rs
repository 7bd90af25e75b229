//! Row-major dense real and complex matrices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix, row-major.
///
/// Serializes as `{"rows": r, "cols": c, "data": [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrixRepr", into = "ComplexMatrixRepr")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct ComplexMatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl TryFrom<ComplexMatrixRepr> for ComplexMatrix {
    type Error = Error;

    fn try_from(r: ComplexMatrixRepr) -> Result<Self> {
        let data = r.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        ComplexMatrix::from_vec(r.rows, r.cols, data)
    }
}

impl From<ComplexMatrix> for ComplexMatrixRepr {
    fn from(m: ComplexMatrix) -> Self {
        ComplexMatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl ComplexMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds `re + i·im` from two real matrices of equal shape.
    pub fn from_parts(re: &RealMatrix, im: &RealMatrix) -> Result<Self> {
        if re.rows() != im.rows() || re.cols() != im.cols() {
            return Err(Error::DimensionMismatch("real/imaginary parts differ in shape".into()));
        }
        let data = re.data().iter().zip(im.data()).map(|(&a, &b)| C64::new(a, b)).collect();
        Self::from_vec(re.rows(), re.cols(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &ComplexMatrix, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("shape mismatch".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(ComplexMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn commutator(&self, other: &ComplexMatrix) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    pub fn real_part(&self) -> RealMatrix {
        RealMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].re)
    }

    pub fn imag_part(&self) -> RealMatrix {
        RealMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].im)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Determinant by LU with partial pivoting.
    pub fn determinant(&self) -> Result<C64> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = C64::new(1.0, 0.0);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm()))
                .unwrap_or(k);
            if a[p * n + k] == C64::new(0.0, 0.0) {
                return Ok(C64::new(0.0, 0.0));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det *= pivot;
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..n {
                    let u = a[k * n + j];
                    a[i * n + j] -= f * u;
                }
            }
        }
        Ok(det)
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        RealMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(RealMatrix { rows: r, cols: c, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &RealMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch("inner dimensions differ".into()));
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self[(i, k)] * other[(k, j)]).sum()
        }))
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `vᵀ A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            let mut r = 0.0;
            for j in 0..self.cols {
                r += self[(i, j)] * v[j];
            }
            s += v[i] * r;
        }
        s
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl std::ops::Index<(usize, usize)> for RealMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Cholesky factor `L` with `A = L Lᵀ`, lower triangular.
pub fn cholesky(a: &RealMatrix) -> Result<RealMatrix> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch("Cholesky of a non-square matrix".into()));
    }
    let n = a.rows;
    let mut l = RealMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &RealMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Smallest eigenvalue of a symmetric positive definite matrix, shaded
/// slightly downward so it can serve as a lower bound in tail estimates.
pub fn min_eigenvalue_spd(a: &RealMatrix) -> f64 {
    if a.rows == 0 {
        return 1.0;
    }
    let eig = nalgebra::SymmetricEigen::new(a.to_nalgebra());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    min * (1.0 - 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reproduces_input() {
        let a = RealMatrix::from_rows(&[vec![4.0, 2.0, 0.4], vec![2.0, 3.0, 0.5], vec![0.4, 0.5, 2.0]])
            .unwrap();
        let l = cholesky(&a).unwrap();
        let back = l.matmul(&l.transpose()).unwrap();
        for (x, y) in back.data().iter().zip(a.data()) {
            assert!((x - y).abs() < 1e-14);
        }
        let x = cholesky_solve(&l, &[1.0, 2.0, 3.0]);
        let ax = a.mat_vec(&x);
        for (u, v) in ax.iter().zip([1.0, 2.0, 3.0]) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&a), Err(Error::NotPositiveDefinite { pivot: 1, .. })));
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let c = |re, im| C64::new(re, im);
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0)],
            vec![c(0.5, 0.0), c(-1.0, 2.0), c(3.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 1.0), c(2.0, -0.5)],
        ])
        .unwrap();
        let e = |i: usize, j: usize| m[(i, j)];
        let cof = e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
            - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
            + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
        assert!((m.determinant().unwrap() - cof).norm() < 1e-13);
    }

    #[test]
    fn json_shape() {
        let m = ComplexMatrix::from_rows(&[vec![C64::new(1.0, 2.0)]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":1,"cols":1,"data":[[1.0,2.0]]}"#);
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>(r#"{"rows":2,"cols":1,"data":[[1,2]]}"#).is_err());
    }
}
