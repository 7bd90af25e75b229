//! Exact integer and rational matrices.

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::dense::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Dense integer matrix, row-major. Serializes with plain integer data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IntMatrixRepr", into = "IntMatrixRepr")]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct IntMatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl TryFrom<IntMatrixRepr> for IntMatrix {
    type Error = Error;

    fn try_from(r: IntMatrixRepr) -> Result<Self> {
        IntMatrix::from_vec(r.rows, r.cols, r.data)
    }
}

impl From<IntMatrix> for IntMatrixRepr {
    fn from(m: IntMatrix) -> Self {
        IntMatrixRepr { rows: m.rows, cols: m.cols, data: m.data }
    }
}

impl IntMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} integer matrix",
                data.len()
            )));
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1; n])
    }

    pub fn diagonal(diag: &[i64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
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

    /// Diagonal entries, or an error if any off-diagonal entry is nonzero.
    pub fn diag_entries(&self) -> Result<Vec<i64>> {
        if self.rows != self.cols {
            return Err(Error::InvalidPolarization("matrix is not square".into()));
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j && self[(i, j)] != 0 {
                    return Err(Error::InvalidPolarization(format!(
                        "off-diagonal entry ({i},{j}) is nonzero"
                    )));
                }
            }
        }
        Ok((0..self.rows).map(|i| self[(i, i)]).collect())
    }

    /// Exact product, failing on i64 overflow.
    pub fn checked_mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch("inner dimensions differ".into()));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc: i128 = 0;
                for k in 0..self.cols {
                    acc += self[(i, k)] as i128 * other[(k, j)] as i128;
                }
                out[(i, j)] = i64::try_from(acc)
                    .map_err(|_| Error::Overflow("integer matrix product".into()))?;
            }
        }
        Ok(out)
    }

    pub fn checked_mat_vec(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch("vector length".into()));
        }
        (0..self.rows)
            .map(|i| {
                let acc: i128 = self.row(i).iter().zip(v).map(|(&a, &b)| a as i128 * b as i128).sum();
                i64::try_from(acc).map_err(|_| Error::Overflow("matrix-vector product".into()))
            })
            .collect()
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        let data = self.data.iter().map(|&x| C64::new(x as f64, 0.0)).collect();
        ComplexMatrix::from_vec(self.rows, self.cols, data).expect("shape is consistent")
    }

    /// Determinant by fraction-free (Bareiss) elimination in i128.
    pub fn determinant(&self) -> Result<i128> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a: Vec<i128> = self.data.iter().map(|&x| x as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if a[k * n + k] == 0 {
                match (k + 1..n).find(|&i| a[i * n + k] != 0) {
                    Some(p) => {
                        for j in 0..n {
                            a.swap(k * n + j, p * n + j);
                        }
                        sign = -sign;
                    }
                    None => return Ok(0),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = a[i * n + j]
                        .checked_mul(a[k * n + k])
                        .and_then(|x| x.checked_sub(a[i * n + k].checked_mul(a[k * n + j])?))
                        .ok_or_else(|| Error::Overflow("determinant".into()))?;
                    a[i * n + j] = v / prev;
                }
            }
            prev = a[k * n + k];
        }
        Ok(if n == 0 { 1 } else { sign * a[n * n - 1] })
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = i64;

    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense matrix of exact rationals. Serializes entries as `[num, den]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RationalMatrixRepr", into = "RationalMatrixRepr")]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational64>,
}

#[derive(Serialize, Deserialize)]
struct RationalMatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<[i64; 2]>,
}

impl TryFrom<RationalMatrixRepr> for RationalMatrix {
    type Error = Error;

    fn try_from(r: RationalMatrixRepr) -> Result<Self> {
        let data = r
            .data
            .iter()
            .map(|&[n, d]| {
                if d == 0 {
                    Err(Error::InvalidInput("zero denominator".into()))
                } else {
                    Ok(Rational64::new(n, d))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        RationalMatrix::from_vec(r.rows, r.cols, data)
    }
}

impl From<RationalMatrix> for RationalMatrixRepr {
    fn from(m: RationalMatrix) -> Self {
        RationalMatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|q| [*q.numer(), *q.denom()]).collect(),
        }
    }
}

impl RationalMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Rational64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} rational matrix",
                data.len()
            )));
        }
        Ok(RationalMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix { rows, cols, data: vec![Rational64::zero(); rows * cols] }
    }

    pub fn from_int(m: &IntMatrix) -> Self {
        RationalMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|&x| Rational64::from_integer(x)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Rational64] {
        &self.data
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

    pub fn mul(&self, other: &RationalMatrix) -> Result<RationalMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch("inner dimensions differ".into()));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Rational64::zero();
                for k in 0..self.cols {
                    acc += self[(i, k)] * other[(k, j)];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let want = if i == j { Rational64::one() } else { Rational64::zero() };
                    self[(i, j)] == want
                })
            })
    }

    /// Integer matrix if every entry is integral.
    pub fn to_integer(&self) -> Option<IntMatrix> {
        if self.data.iter().all(|q| q.is_integer()) {
            Some(IntMatrix {
                rows: self.rows,
                cols: self.cols,
                data: self.data.iter().map(|q| q.to_integer()).collect(),
            })
        } else {
            None
        }
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        let data = self.data.iter().map(|q| C64::new(rat_to_f64(q), 0.0)).collect();
        ComplexMatrix::from_vec(self.rows, self.cols, data).expect("shape is consistent")
    }
}

impl std::ops::Index<(usize, usize)> for RationalMatrix {
    type Output = Rational64;

    fn index(&self, (i, j): (usize, usize)) -> &Rational64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn rat_to_f64(q: &Rational64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bareiss_determinant() {
        let m = IntMatrix::from_rows(&[vec![2, -1, 0], vec![-1, 2, -3], vec![0, -1, 2]]).unwrap();
        // 2(4-3) + 1(-2-0) = 0: the affine Cartan matrix is singular.
        assert_eq!(m.determinant().unwrap(), 0);
        let u = IntMatrix::from_rows(&[vec![0, 1], vec![1, 3]]).unwrap();
        assert_eq!(u.determinant().unwrap(), -1);
    }

    #[test]
    fn rational_json_round_trip() {
        let m = RationalMatrix::from_vec(1, 2, vec![Rational64::new(1, 2), Rational64::new(-4, 2)])
            .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":1,"cols":2,"data":[[1,2],[-2,1]]}"#);
        assert_eq!(serde_json::from_str::<RationalMatrix>(&s).unwrap(), m);
    }
}
