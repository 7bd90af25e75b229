use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::polarization_diagonal;
use crate::linalg::{validate_period_matrix, ComplexMatrix, IntMatrix, PeriodMatrix, RationalMatrix};

/// Relative tolerance on `ΦΩ = Ω̃P`.
pub const COMPAT_TOL: f64 = 1e-10;

/// Embedding `z ↦ Φz` of the torus `Cⁿ/(ΔZⁿ + ΩZⁿ)` into the principally
/// polarized torus of `Ω̃`, with `Ω = PᵀΩ̃P`.
#[derive(Debug, Clone)]
pub struct EmbeddingData {
    big_omega: PeriodMatrix,
    phi: RationalMatrix,
    p: IntMatrix,
    delta: IntMatrix,
    delta_diag: Vec<i64>,
    small_omega: PeriodMatrix,
    compat_residual: f64,
}

impl EmbeddingData {
    pub fn big_omega(&self) -> &PeriodMatrix {
        &self.big_omega
    }

    pub fn phi(&self) -> &RationalMatrix {
        &self.phi
    }

    pub fn p(&self) -> &IntMatrix {
        &self.p
    }

    pub fn delta(&self) -> &IntMatrix {
        &self.delta
    }

    pub fn delta_diag(&self) -> &[i64] {
        &self.delta_diag
    }

    pub fn small_omega(&self) -> &PeriodMatrix {
        &self.small_omega
    }

    /// Relative Frobenius residual of `ΦΩ − Ω̃P`.
    pub fn compat_residual(&self) -> f64 {
        self.compat_residual
    }

    pub fn big_dim(&self) -> usize {
        self.big_omega.dim()
    }

    pub fn small_dim(&self) -> usize {
        self.small_omega.dim()
    }

    /// `Φz` for a point of the small torus.
    pub fn map_point(&self, z: &[crate::linalg::C64]) -> Result<Vec<crate::linalg::C64>> {
        self.phi.to_complex().mat_vec(z)
    }

    /// `Pᵀγ` for a point of the big torus.
    pub fn pull_back(&self, gamma: &[crate::linalg::C64]) -> Result<Vec<crate::linalg::C64>> {
        self.p.to_complex().transpose().mat_vec(gamma)
    }

    /// `ΔΦᵀ`, an integer matrix by the lattice inclusion condition.
    pub fn delta_phi_t(&self) -> IntMatrix {
        let n = self.small_dim();
        let g = self.big_dim();
        let mut data = Vec::with_capacity(n * g);
        for i in 0..n {
            for j in 0..g {
                let q = self.phi[(j, i)] * self.delta_diag[i];
                data.push(q.to_integer());
            }
        }
        IntMatrix::from_vec(n, g, data).expect("shape is consistent")
    }
}

/// Serialized form: `{big_omega, phi, p, delta}` with `phi` as rational pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub big_omega: ComplexMatrix,
    pub phi: RationalMatrix,
    pub p: IntMatrix,
    pub delta: IntMatrix,
}

impl From<&EmbeddingData> for EmbeddingRecord {
    fn from(e: &EmbeddingData) -> Self {
        EmbeddingRecord {
            big_omega: e.big_omega.omega().clone(),
            phi: e.phi.clone(),
            p: e.p.clone(),
            delta: e.delta.clone(),
        }
    }
}

/// Checks every compatibility condition and derives `Ω = PᵀΩ̃P`.
pub fn build_embedding(big_omega: &PeriodMatrix, phi: &RationalMatrix, p: &IntMatrix, delta: &IntMatrix) -> Result<EmbeddingData> {
    let emb = build_embedding_lenient(big_omega, phi, p, delta)?;
    if emb.compat_residual > COMPAT_TOL {
        return Err(Error::CompatibilityViolation(format!(
            "PhiOmega != OmegaTilde P (relative residual {:.3e})",
            emb.compat_residual
        )));
    }
    Ok(emb)
}

/// As [`build_embedding`], except that a failure of `ΦΩ = Ω̃P` is only
/// recorded in [`EmbeddingData::compat_residual`]. The exact integrality
/// conditions remain hard errors. Used to run the expansion identity on
/// deliberately corrupted period matrices.
pub fn build_embedding_lenient(
    big_omega: &PeriodMatrix,
    phi: &RationalMatrix,
    p: &IntMatrix,
    delta: &IntMatrix,
) -> Result<EmbeddingData> {
    let g = big_omega.dim();
    let n = delta.rows();
    if phi.rows() != g || phi.cols() != n || p.rows() != g || p.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected Phi and P of shape {g}x{n}, got {}x{} and {}x{}",
            phi.rows(),
            phi.cols(),
            p.rows(),
            p.cols()
        )));
    }
    if n == 0 {
        return Err(Error::DimensionMismatch("subvariety dimension must be positive".into()));
    }
    let delta_diag = polarization_diagonal(delta)?;

    let pt_phi = RationalMatrix::from_int(&p.transpose()).mul(phi)?;
    if !pt_phi.is_identity() {
        return Err(Error::CompatibilityViolation("P^T Phi != I".into()));
    }
    for i in 0..g {
        for j in 0..n {
            if !(phi[(i, j)] * delta_diag[j]).denom().is_one() {
                return Err(Error::CompatibilityViolation(format!(
                    "Phi Delta is not integral at entry ({i}, {j})"
                )));
            }
        }
    }

    let pc = p.to_complex();
    let big = big_omega.omega();
    let omega_p = big.matmul(&pc)?;
    let small = pc.transpose().matmul(&omega_p)?;
    let small_omega = validate_period_matrix(&small).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => {
            Error::CompatibilityViolation("Im(P^T OmegaTilde P) is not positive definite".into())
        }
        other => other,
    })?;

    let lhs = phi.to_complex().matmul(small_omega.omega())?;
    let diff = lhs.sub(&omega_p)?.frobenius();
    let compat_residual = diff / omega_p.frobenius().max(f64::MIN_POSITIVE);

    Ok(EmbeddingData {
        big_omega: big_omega.clone(),
        phi: phi.clone(),
        p: p.clone(),
        delta: delta.clone(),
        delta_diag,
        small_omega,
        compat_residual,
    })
}

pub fn build_embedding_from_record(rec: &EmbeddingRecord) -> Result<EmbeddingData> {
    let big = validate_period_matrix(&rec.big_omega)?;
    build_embedding(&big, &rec.phi, &rec.p, &rec.delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    fn big2() -> PeriodMatrix {
        validate_period_matrix(
            &ComplexMatrix::from_rows(&[
                vec![C64::new(0.1, 1.0), C64::new(0.2, 0.3)],
                vec![C64::new(0.2, 0.3), C64::new(-0.4, 1.5)],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn identity_embedding() {
        let om = big2();
        let id = IntMatrix::identity(2);
        let emb = build_embedding(&om, &RationalMatrix::from_int(&id), &id, &id).unwrap();
        assert_eq!(emb.small_omega().omega(), om.omega());
        assert_eq!(emb.compat_residual(), 0.0);
    }

    #[test]
    fn scaled_projection_is_rejected() {
        let om = big2();
        let id = IntMatrix::identity(2);
        let two_p = IntMatrix::diagonal(&[2, 2]);
        let err = build_embedding(&om, &RationalMatrix::from_int(&id), &two_p, &id).unwrap_err();
        assert!(matches!(err, Error::CompatibilityViolation(ref s) if s.contains("P^T Phi")));
    }

    #[test]
    fn coordinate_subtorus_requires_block_structure() {
        // P = Φ = e₁ works only when Ω̃₁₂ = 0.
        let om = big2();
        let e1 = IntMatrix::from_rows(&[vec![1], vec![0]]).unwrap();
        let one = IntMatrix::identity(1);
        let err = build_embedding(&om, &RationalMatrix::from_int(&e1), &e1, &one).unwrap_err();
        assert!(matches!(err, Error::CompatibilityViolation(_)));
        let lenient = build_embedding_lenient(&om, &RationalMatrix::from_int(&e1), &e1, &one).unwrap();
        assert!(lenient.compat_residual() > 0.1);
        assert_eq!(lenient.small_omega().entry(0, 0), om.entry(0, 0));
    }
}
