//! Synthetic embeddings satisfying every compatibility condition by
//! construction: `Ω̃ = ΦΠ₀Φᵀ + ZMZᵀ` with `Z` spanning `ker Pᵀ`, so that
//! `Ω̃P = ΦΠ₀` and `PᵀΩ̃P = Π₀`.

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::embedding::{build_embedding, EmbeddingData, EmbeddingRecord};
use super::prym::prym_maps;
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue_spd, validate_period_matrix, ComplexMatrix, IntMatrix, RationalMatrix, C64};

pub const MAX_ATTEMPTS: usize = 10;
/// Draws whose `Im Ω̃` has a smaller eigenvalue relative to its largest
/// are rejected.
const MIN_CONDITION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// `n`-dimensional subtorus of a `g_tilde`-dimensional torus. Without
    /// options `Φ = P = (I; 0)` and `Δ = I`. A `delta` diagonal scales
    /// `Φ` by `Δ⁻¹` and `P` by `Δ`; `twist` conjugates both by a random
    /// unimodular change of basis.
    Generic {
        n: usize,
        g_tilde: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<Vec<i64>>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        twist: bool,
    },
    Prym {
        g: usize,
        n: usize,
    },
}

impl InstanceKind {
    pub fn generic(n: usize, g_tilde: usize) -> Self {
        InstanceKind::Generic { n, g_tilde, delta: None, twist: false }
    }

    pub fn prym(g: usize, n: usize) -> Self {
        InstanceKind::Prym { g, n }
    }

    pub fn big_dim(&self) -> usize {
        match *self {
            InstanceKind::Generic { g_tilde, .. } => g_tilde,
            InstanceKind::Prym { g, n } => 2 * g + n,
        }
    }

    pub fn small_dim(&self) -> usize {
        match *self {
            InstanceKind::Generic { n, .. } => n,
            InstanceKind::Prym { g, n } => g + n,
        }
    }
}

/// Instance file: the embedding plus how it was produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(flatten)]
    pub embedding: EmbeddingRecord,
    pub seed: u64,
    pub kind: InstanceKind,
}

pub fn generate_instance(kind: &InstanceKind, seed: u64) -> Result<EmbeddingData> {
    let (phi, p, delta, z) = maps_for(kind, seed)?;
    let n = phi.cols();
    let k = z.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi_c = phi.to_complex();
    let z_c = z.to_complex();
    for _ in 0..MAX_ATTEMPTS {
        let pi0 = random_siegel(&mut rng, n);
        let m = random_siegel(&mut rng, k);
        let big = phi_c
            .matmul(&pi0)?
            .matmul(&phi_c.transpose())?
            .add(&z_c.matmul(&m)?.matmul(&z_c.transpose())?)?;
        let im = big.imag_part();
        let lmax = im.frobenius();
        if min_eigenvalue_spd(&im) < MIN_CONDITION * lmax {
            continue;
        }
        let Ok(big) = validate_period_matrix(&big) else {
            continue;
        };
        return build_embedding(&big, &phi, &p, &delta);
    }
    Err(Error::DegenerateSeed(MAX_ATTEMPTS))
}

pub fn generate_instance_file(kind: &InstanceKind, seed: u64) -> Result<InstanceFile> {
    let emb = generate_instance(kind, seed)?;
    Ok(InstanceFile { embedding: EmbeddingRecord::from(&emb), seed, kind: kind.clone() })
}

/// Symmetric `n×n` complex matrix with `Im ≥ 0.6 I`.
fn random_siegel(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let mut re = vec![0.0; n * n];
    let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for i in 0..n {
        for j in 0..=i {
            let v = rng.gen_range(-0.5..0.5);
            re[i * n + j] = v;
            re[j * n + i] = v;
        }
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut im: f64 = (0..n).map(|l| a[i * n + l] * a[j * n + l]).sum::<f64>() / n as f64;
            if i == j {
                im += 0.6;
            }
            out[(i, j)] = C64::new(re[i * n + j], im);
        }
    }
    out
}

/// `(Φ, P, Δ, Z)` with `Z` an integer basis of `ker Pᵀ`.
fn maps_for(kind: &InstanceKind, seed: u64) -> Result<(RationalMatrix, IntMatrix, IntMatrix, IntMatrix)> {
    match kind {
        InstanceKind::Prym { g, n } => {
            let (g, n) = (*g, *n);
            if g == 0 || n == 0 {
                return Err(Error::InvalidInput(format!("Prym sizes need g >= 1 and n >= 1, got g = {g}, n = {n}")));
            }
            let (phi, p, delta) = prym_maps(g, n);
            let mut z = IntMatrix::zeros(2 * g + n, g);
            let mut data = z.data().to_vec();
            for j in 0..g {
                data[j * g + j] = 1;
                data[(g + n + j) * g + j] = -1;
            }
            z = IntMatrix::from_vec(2 * g + n, g, data)?;
            Ok((phi, p, delta, z))
        }
        InstanceKind::Generic { n, g_tilde, delta, twist } => {
            let (n, gt) = (*n, *g_tilde);
            if n == 0 || n >= gt {
                return Err(Error::InvalidInput(format!("generic sizes need 1 <= n < g_tilde, got n = {n}, g_tilde = {gt}")));
            }
            let diag = delta.clone().unwrap_or_else(|| vec![1; n]);
            if diag.len() != n || diag.iter().any(|&d| d < 1) {
                return Err(Error::InvalidPolarization(format!("{diag:?} is not a positive diagonal of length {n}")));
            }
            let (w, w_inv) = if *twist { unimodular(gt, seed ^ 0x9e37_79b9_7f4a_7c15) } else { (IntMatrix::identity(gt), IntMatrix::identity(gt)) };
            let mut phi = RationalMatrix::zeros(gt, n);
            let mut p = vec![0i64; gt * n];
            for i in 0..gt {
                for j in 0..n {
                    phi[(i, j)] = Rational64::new(w[(i, j)], diag[j]);
                    p[i * n + j] = w_inv[(j, i)] * diag[j];
                }
            }
            let mut z = vec![0i64; gt * (gt - n)];
            for i in 0..gt {
                for j in n..gt {
                    z[i * (gt - n) + j - n] = w[(i, j)];
                }
            }
            Ok((
                phi,
                IntMatrix::from_vec(gt, n, p)?,
                IntMatrix::diagonal(&diag),
                IntMatrix::from_vec(gt, gt - n, z)?,
            ))
        }
    }
}

/// A random product of elementary column operations and its inverse.
fn unimodular(dim: usize, seed: u64) -> (IntMatrix, IntMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![vec![0i64; dim]; dim];
    let mut inv = w.clone();
    for i in 0..dim {
        w[i][i] = 1;
        inv[i][i] = 1;
    }
    if dim >= 2 {
        for _ in 0..dim {
            let i = rng.gen_range(0..dim);
            let mut j = rng.gen_range(0..dim - 1);
            if j >= i {
                j += 1;
            }
            let s: i64 = if rng.gen_bool(0.5) { 1 } else { -1 };
            // W ← W(I + s eⱼeᵢᵀ): column i += s·column j.
            for row in w.iter_mut() {
                row[i] += s * row[j];
            }
            // W⁻¹ ← (I − s eⱼeᵢᵀ)W⁻¹: row j −= s·row i.
            let ri = inv[i].clone();
            for (x, y) in inv[j].iter_mut().zip(&ri) {
                *x -= s * y;
            }
        }
    }
    (
        IntMatrix::from_rows(&w).expect("square"),
        IntMatrix::from_rows(&inv).expect("square"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unimodular_pair_is_inverse() {
        for seed in 0..5 {
            let (w, inv) = unimodular(4, seed);
            assert_eq!(w.checked_mul(&inv).unwrap(), IntMatrix::identity(4));
            assert_eq!(w.determinant().unwrap().abs(), 1);
        }
    }

    #[test]
    fn prym_instances_have_expected_shapes() {
        let e = generate_instance(&InstanceKind::prym(1, 1), 7).unwrap();
        assert_eq!(e.big_dim(), 3);
        let e = generate_instance(&InstanceKind::prym(2, 1), 7).unwrap();
        assert_eq!(e.big_dim(), 5);
        assert_eq!(e.delta_diag(), &[2, 2, 1]);
    }

    #[test]
    fn coordinate_subtorus() {
        let e = generate_instance(&InstanceKind::generic(1, 2), 3).unwrap();
        assert_eq!(e.small_omega().entry(0, 0), e.big_omega().entry(0, 0));
    }

    #[test]
    fn twisted_and_polarized_generic() {
        let kind = InstanceKind::Generic { n: 2, g_tilde: 4, delta: Some(vec![1, 2]), twist: true };
        let e = generate_instance(&kind, 11).unwrap();
        assert!(e.compat_residual() < 1e-12);
        assert_eq!(e.delta_diag(), &[1, 2]);
    }

    #[test]
    fn invalid_sizes() {
        assert!(generate_instance(&InstanceKind::generic(0, 2), 0).is_err());
        assert!(generate_instance(&InstanceKind::generic(2, 2), 0).is_err());
        assert!(generate_instance(&InstanceKind::prym(0, 1), 0).is_err());
    }

    #[test]
    fn kind_json() {
        assert_eq!(serde_json::to_string(&InstanceKind::prym(1, 1)).unwrap(), r#"{"prym":{"g":1,"n":1}}"#);
        assert_eq!(
            serde_json::to_string(&InstanceKind::generic(1, 2)).unwrap(),
            r#"{"generic":{"n":1,"g_tilde":2}}"#
        );
    }
}
