//! Smith normal form, integer affine systems and basis size reduction.
//!
//! All reductions run on arbitrary-precision integers; results are
//! converted back to `i64` and an `Overflow` error is raised only when a
//! final entry does not fit.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use super::int::IntMatrix;
use crate::error::{Error, Result};

/// `u · a · v = d` with `u`, `v` unimodular and `d` diagonal with
/// nonnegative entries forming a divisibility chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnfResult {
    pub u: IntMatrix,
    pub v: IntMatrix,
    pub d: IntMatrix,
}

impl SnfResult {
    pub fn diagonal(&self) -> Vec<i64> {
        (0..self.d.rows().min(self.d.cols())).map(|i| self.d[(i, i)]).collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().take_while(|&&x| x != 0).count()
    }
}

type BigMat = Vec<Vec<BigInt>>;

fn big_identity(n: usize) -> BigMat {
    (0..n)
        .map(|i| (0..n).map(|j| BigInt::from((i == j) as i64)).collect())
        .collect()
}

fn to_int_matrix(m: &BigMat, rows: usize, cols: usize) -> Result<IntMatrix> {
    let mut data = Vec::with_capacity(rows * cols);
    for row in m {
        for x in row {
            data.push(x.to_i64().ok_or_else(|| Error::Overflow(format!("entry {x} exceeds i64")))?);
        }
    }
    IntMatrix::from_vec(rows, cols, data)
}

/// Row Hermite normal form by lattice reduction: returns `(h, t)` with
/// `t` unimodular, `t · a = h`, nonzero rows first with positive pivots
/// and entries above each pivot reduced into `[0, pivot)`. Keeping the
/// rows LLL-reduced (exact integer Gram–Schmidt data) keeps `t` small.
fn lll_hermite(a: &BigMat, n: usize) -> (BigMat, BigMat) {
    let m = a.len();
    let mut h = a.clone();
    let mut t = big_identity(m);
    if m == 0 {
        return (h, t);
    }
    let mut lam: BigMat = vec![vec![BigInt::zero(); m]; m];
    // dets[i + 1] is the Gram determinant of the first i + 1 rows.
    let mut dets: Vec<BigInt> = vec![BigInt::from(1); m + 1];
    let mut k = 1;
    while k < m {
        let (col1, col2) = hermite_reduce(&mut h, &mut t, &mut lam, &dets, k, k - 1, n);
        let lovasz = || {
            let lhs = BigInt::from(4) * (&dets[k - 1] * &dets[k + 1] + &lam[k][k - 1] * &lam[k][k - 1]);
            lhs < BigInt::from(3) * &dets[k] * &dets[k]
        };
        if col1 <= col2.min(n - 1) || (col1 == n && col2 == n && lovasz()) {
            hermite_swap(&mut h, &mut t, &mut lam, &mut dets, k);
            k = (k - 1).max(1);
        } else {
            for i in (0..k - 1).rev() {
                hermite_reduce(&mut h, &mut t, &mut lam, &dets, k, i, n);
            }
            k += 1;
        }
    }
    // The reduction leaves zero rows first.
    h.reverse();
    t.reverse();
    let rank = h.iter().take_while(|r| r.iter().any(|x| !x.is_zero())).count();
    for i in 0..rank {
        let c = first_nonzero(&h[i]);
        if h[i][c].is_negative() {
            negate(&mut h[i]);
            negate(&mut t[i]);
        }
        for above in 0..i {
            let q = h[above][c].div_floor(&h[i][c]);
            if !q.is_zero() {
                let (hi, ti) = (h[i].clone(), t[i].clone());
                axpy(&mut h[above], &hi, &q);
                axpy(&mut t[above], &ti, &q);
            }
        }
    }
    (h, t)
}

fn first_nonzero(row: &[BigInt]) -> usize {
    row.iter().position(|x| !x.is_zero()).unwrap_or(row.len())
}

fn negate(row: &mut [BigInt]) {
    for x in row {
        *x = -std::mem::take(x);
    }
}

/// `target -= q · src`
fn axpy(target: &mut [BigInt], src: &[BigInt], q: &BigInt) {
    for (x, y) in target.iter_mut().zip(src) {
        *x -= q * y;
    }
}

/// Nearest integer to `p / q` for `q > 0`.
fn round_div(p: &BigInt, q: &BigInt) -> BigInt {
    (BigInt::from(2) * p + q).div_floor(&(BigInt::from(2) * q))
}

fn hermite_reduce(
    h: &mut BigMat,
    t: &mut BigMat,
    lam: &mut BigMat,
    dets: &[BigInt],
    k: usize,
    i: usize,
    n: usize,
) -> (usize, usize) {
    let col1 = first_nonzero(&h[i]);
    if col1 < n && h[i][col1].is_negative() {
        for (r, row) in lam.iter_mut().enumerate() {
            for (s, x) in row.iter_mut().enumerate().take(r) {
                if r == i || s == i {
                    *x = -std::mem::take(x);
                }
            }
        }
        negate(&mut h[i]);
        negate(&mut t[i]);
    }
    let col2 = first_nonzero(&h[k]);
    let q = if col1 < n {
        h[k][col1].div_floor(&h[i][col1])
    } else if BigInt::from(2) * lam[k][i].abs() > dets[i + 1] {
        round_div(&lam[k][i], &dets[i + 1])
    } else {
        BigInt::zero()
    };
    if !q.is_zero() {
        let (hi, ti) = (h[i].clone(), t[i].clone());
        axpy(&mut h[k], &hi, &q);
        axpy(&mut t[k], &ti, &q);
        lam[k][i] -= &q * &dets[i + 1];
        for j in 0..i {
            let d = &q * &lam[i][j];
            lam[k][j] -= d;
        }
    }
    (col1, col2)
}

fn hermite_swap(h: &mut BigMat, t: &mut BigMat, lam: &mut BigMat, dets: &mut [BigInt], k: usize) {
    h.swap(k, k - 1);
    t.swap(k, k - 1);
    for j in 0..k - 1 {
        let tmp = std::mem::take(&mut lam[k][j]);
        lam[k][j] = std::mem::replace(&mut lam[k - 1][j], tmp);
    }
    let mu = lam[k][k - 1].clone();
    for i in k + 1..lam.len() {
        let next = &lam[i][k - 1] * &dets[k + 1] - &lam[i][k] * &mu;
        lam[i][k - 1] = (&lam[i][k - 1] * &mu + &lam[i][k] * &dets[k - 1]) / &dets[k];
        lam[i][k] = next / &dets[k];
    }
    dets[k] = (&dets[k - 1] * &dets[k + 1] + &mu * &mu) / &dets[k];
}

fn transpose(a: &BigMat, cols: usize) -> BigMat {
    (0..cols).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

fn mat_mul(a: &BigMat, b: &BigMat, cols: usize) -> BigMat {
    a.iter()
        .map(|r| (0..cols).map(|j| r.iter().zip(b).map(|(x, row)| x * &row[j]).sum()).collect())
        .collect()
}

/// At most one nonzero entry in every row and every column.
fn is_monomial(a: &BigMat, cols: usize) -> bool {
    a.iter().all(|r| r.iter().filter(|x| !x.is_zero()).count() <= 1)
        && (0..cols).all(|j| a.iter().filter(|r| !r[j].is_zero()).count() <= 1)
}

/// `lead` followed by the remaining indices below `len` in order.
fn completed_order(mut lead: Vec<usize>, len: usize) -> Vec<usize> {
    let rest: Vec<usize> = (0..len).filter(|i| !lead.contains(i)).collect();
    lead.extend(rest);
    lead
}

/// Alternating row and column Hermite forms until a monomial matrix
/// remains, then permutation onto the diagonal and gcd/lcm steps for
/// the divisibility chain.
pub fn smith_normal_form(a: &IntMatrix) -> Result<SnfResult> {
    let (m, n) = (a.rows(), a.cols());
    let mut d: BigMat = (0..m).map(|i| a.row(i).iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut u = big_identity(m);
    let mut v = big_identity(n);
    while !is_monomial(&d, n) {
        let (h, t) = lll_hermite(&d, n);
        u = mat_mul(&t, &u, m);
        d = h;
        if is_monomial(&d, n) {
            break;
        }
        let (h, t) = lll_hermite(&transpose(&d, n), m);
        v = mat_mul(&v, &transpose(&t, n), n);
        d = transpose(&h, m);
    }

    let mut pivots: Vec<(usize, usize)> =
        (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| !d[i][j].is_zero()).collect();
    pivots.sort_by_key(|&(_, j)| j);
    let rows = completed_order(pivots.iter().map(|p| p.0).collect(), m);
    let cols = completed_order(pivots.iter().map(|p| p.1).collect(), n);
    let mut u: BigMat = rows.iter().map(|&i| u[i].clone()).collect();
    let mut v: BigMat = v.iter().map(|r| cols.iter().map(|&j| r[j].clone()).collect()).collect();
    let mut diag: Vec<BigInt> = pivots.iter().map(|&(i, j)| d[i][j].clone()).collect();
    for (i, x) in diag.iter_mut().enumerate() {
        if x.is_negative() {
            *x = -std::mem::take(x);
            negate(&mut u[i]);
        }
    }
    for i in 0..diag.len() {
        for j in i + 1..diag.len() {
            if diag[j].is_multiple_of(&diag[i]) {
                continue;
            }
            // diag(a, b) → diag(g, ab/g) with g = sa + tb.
            let (a, b) = (diag[i].clone(), diag[j].clone());
            let e = a.extended_gcd(&b);
            let (g, s, t) = (e.gcd, e.x, e.y);
            let (ag, bg) = (&a / &g, &b / &g);
            let (ui, uj) = (u[i].clone(), u[j].clone());
            u[i] = ui.iter().zip(&uj).map(|(x, y)| &s * x + &t * y).collect();
            u[j] = ui.iter().zip(&uj).map(|(x, y)| &ag * y - &bg * x).collect();
            for row in v.iter_mut() {
                let (vi, vj) = (row[i].clone(), row[j].clone());
                row[i] = &vi + &vj;
                row[j] = &s * &ag * &vj - &t * &bg * &vi;
            }
            diag[j] = &ag * &b;
            diag[i] = g;
        }
    }
    let mut dm: BigMat = vec![vec![BigInt::zero(); n]; m];
    for (i, x) in diag.into_iter().enumerate() {
        dm[i][i] = x;
    }
    Ok(SnfResult { u: to_int_matrix(&u, m, m)?, v: to_int_matrix(&v, n, n)?, d: to_int_matrix(&dm, m, n)? })
}

/// Solution set `{particular + Σ cᵢ kernel[i]}` of an integer system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSolution {
    pub particular: Vec<i64>,
    pub kernel_basis: Vec<Vec<i64>>,
}

/// Solves `a · m = b` over the integers.
///
/// The kernel basis is LLL-reduced and the particular solution is
/// size-reduced against it, so both are short.
pub fn solve_affine_integer(a: &IntMatrix, b: &[i64]) -> Result<AffineSolution> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side of length {} for {} equations",
            b.len(),
            a.rows()
        )));
    }
    let snf = smith_normal_form(a)?;
    let (m, n) = (a.rows(), a.cols());
    let diag = snf.diagonal();
    let rank = snf.rank();
    let ub: Vec<BigInt> = (0..m)
        .map(|i| snf.u.row(i).iter().zip(b).map(|(&x, &y)| BigInt::from(x) * y).sum())
        .collect();
    let mut y = vec![BigInt::zero(); n];
    for i in 0..m {
        if i < rank {
            let (q, r) = ub[i].div_rem(&BigInt::from(diag[i]));
            if !r.is_zero() {
                return Err(Error::NoSolution);
            }
            y[i] = q;
        } else if !ub[i].is_zero() {
            return Err(Error::NoSolution);
        }
    }
    let mut particular = Vec::with_capacity(n);
    for i in 0..n {
        let s: BigInt = (0..n).map(|k| BigInt::from(snf.v[(i, k)]) * &y[k]).sum();
        particular.push(s.to_i64().ok_or_else(|| Error::Overflow("particular solution".into()))?);
    }
    let kernel: Vec<Vec<i64>> = (rank..n).map(|j| snf.v.column(j)).collect();
    let kernel_basis = lll_reduce(kernel)?;
    let particular = size_reduce(&particular, &kernel_basis)?;
    Ok(AffineSolution { particular, kernel_basis })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn to_f64(v: &[i64]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

/// Gram–Schmidt vectors and their squared norms.
fn gram_schmidt(basis: &[Vec<i64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
    let mut norms = Vec::with_capacity(basis.len());
    for b in basis {
        let mut v = to_f64(b);
        for (s, &ns) in star.iter().zip(&norms) {
            if ns > 0.0 {
                let mu = dot(&to_f64(b), s) / ns;
                for (vi, si) in v.iter_mut().zip(s) {
                    *vi -= mu * si;
                }
            }
        }
        norms.push(dot(&v, &v));
        star.push(v);
    }
    (star, norms)
}

fn sub_multiple(target: &mut [i64], q: i64, b: &[i64]) -> Result<()> {
    for (t, &x) in target.iter_mut().zip(b) {
        *t = q
            .checked_mul(x)
            .and_then(|p| t.checked_sub(p))
            .ok_or_else(|| Error::Overflow("lattice reduction".into()))?;
    }
    Ok(())
}

/// LLL reduction (δ = 3/4) of a linearly independent integer basis.
/// Only unimodular integer operations touch the basis, so the spanned
/// lattice is preserved exactly whatever the floating-point accuracy.
pub fn lll_reduce(mut basis: Vec<Vec<i64>>) -> Result<Vec<Vec<i64>>> {
    let n = basis.len();
    if n <= 1 {
        return Ok(basis);
    }
    let delta = 0.75;
    let mut k = 1;
    let mut guard = 0usize;
    while k < n {
        guard += 1;
        if guard > 100_000 {
            break;
        }
        for j in (0..k).rev() {
            let (star, norms) = gram_schmidt(&basis);
            if norms[j] == 0.0 {
                continue;
            }
            let mu = dot(&to_f64(&basis[k]), &star[j]) / norms[j];
            let q = mu.round();
            if q != 0.0 {
                let bj = basis[j].clone();
                sub_multiple(&mut basis[k], q as i64, &bj)?;
            }
        }
        let (star, norms) = gram_schmidt(&basis);
        let mu = if norms[k - 1] > 0.0 {
            dot(&to_f64(&basis[k]), &star[k - 1]) / norms[k - 1]
        } else {
            0.0
        };
        if norms[k] >= (delta - mu * mu) * norms[k - 1] {
            k += 1;
        } else {
            basis.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    Ok(basis)
}

/// Nearest-plane reduction of `v` modulo the lattice spanned by `basis`.
pub fn size_reduce(v: &[i64], basis: &[Vec<i64>]) -> Result<Vec<i64>> {
    let mut out = v.to_vec();
    if basis.is_empty() {
        return Ok(out);
    }
    let (star, norms) = gram_schmidt(basis);
    for j in (0..basis.len()).rev() {
        if norms[j] == 0.0 {
            continue;
        }
        let q = (dot(&to_f64(&out), &star[j]) / norms[j]).round();
        if q != 0.0 {
            sub_multiple(&mut out, q as i64, &basis[j])?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_snf(a: &IntMatrix) -> SnfResult {
        let r = smith_normal_form(a).unwrap();
        let uav = r.u.checked_mul(a).unwrap().checked_mul(&r.v).unwrap();
        assert_eq!(uav, r.d);
        assert_eq!(r.u.determinant().unwrap().abs(), 1);
        assert_eq!(r.v.determinant().unwrap().abs(), 1);
        let diag = r.diagonal();
        for w in diag.windows(2) {
            assert!(w[0] >= 0 && w[1] >= 0);
            if w[0] != 0 {
                assert_eq!(w[1] % w[0], 0, "divisibility chain broken: {diag:?}");
            } else {
                assert_eq!(w[1], 0);
            }
        }
        r
    }

    #[test]
    fn identity_is_fixed() {
        let r = check_snf(&IntMatrix::identity(3));
        assert_eq!(r.d, IntMatrix::identity(3));
        assert_eq!(r.u, IntMatrix::identity(3));
        assert_eq!(r.v, IntMatrix::identity(3));
    }

    #[test]
    fn two_by_two_example() {
        let r = check_snf(&IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]).unwrap());
        assert_eq!(r.diagonal(), vec![2, 4]);
    }

    #[test]
    fn zero_matrix() {
        let r = check_snf(&IntMatrix::zeros(2, 2));
        assert_eq!(r.diagonal(), vec![0, 0]);
    }

    #[test]
    fn non_square_and_gcd_fixup() {
        // diag(2, 3) must become diag(1, 6).
        let r = check_snf(&IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]).unwrap());
        assert_eq!(r.diagonal(), vec![1, 6]);
        let r = check_snf(&IntMatrix::from_rows(&[vec![4, 6, 8]]).unwrap());
        assert_eq!(r.diagonal(), vec![2]);
    }

    #[test]
    fn affine_identity() {
        let s = solve_affine_integer(&IntMatrix::identity(2), &[3, -1]).unwrap();
        assert_eq!(s.particular, vec![3, -1]);
        assert!(s.kernel_basis.is_empty());
    }

    #[test]
    fn affine_parity_obstruction() {
        let a = IntMatrix::from_rows(&[vec![2, 0]]).unwrap();
        assert_eq!(solve_affine_integer(&a, &[1]), Err(Error::NoSolution));
    }

    #[test]
    fn affine_line_matches_brute_force() {
        let a = IntMatrix::from_rows(&[vec![1, 1]]).unwrap();
        let s = solve_affine_integer(&a, &[2]).unwrap();
        assert_eq!(s.kernel_basis.len(), 1);
        let k = &s.kernel_basis[0];
        assert!(k == &vec![1, -1] || k == &vec![-1, 1]);
        // Every brute-force solution in a box lies in particular + Z·k and
        // every such point with small coefficient solves the system.
        for x in -6i64..=6 {
            for y in -6i64..=6 {
                if x + y == 2 {
                    let d0 = x - s.particular[0];
                    assert_eq!(d0 % k[0], 0);
                    let c = d0 / k[0];
                    assert_eq!(y, s.particular[1] + c * k[1]);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn snf_round_trip(rows in 1usize..5, cols in 1usize..5, seed in prop::collection::vec(-9i64..=9, 16)) {
            let data: Vec<i64> = seed.iter().cycle().take(rows * cols).copied().collect();
            check_snf(&IntMatrix::from_vec(rows, cols, data).unwrap());
        }

        #[test]
        fn affine_solutions_solve(coef in prop::collection::vec(-6i64..=6, 12), x in prop::collection::vec(-4i64..=4, 4), c in prop::collection::vec(-5i64..=5, 4)) {
            let a = IntMatrix::from_vec(3, 4, coef).unwrap();
            let b = a.checked_mat_vec(&x).unwrap();
            let s = solve_affine_integer(&a, &b).unwrap();
            let mut m = s.particular.clone();
            for (k, ci) in s.kernel_basis.iter().zip(&c) {
                for (mi, ki) in m.iter_mut().zip(k) {
                    *mi += ci * ki;
                }
            }
            prop_assert_eq!(a.checked_mat_vec(&m).unwrap(), b);
        }
    }
}
