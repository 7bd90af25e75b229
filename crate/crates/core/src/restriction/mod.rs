//! Restriction of a principally polarized theta function to an abelian
//! subvariety and its expansion in the subvariety's theta basis.

mod coeffs;
mod embedding;
mod generate;
mod prym;
mod verify;

pub use coeffs::{restriction_coeffs, CoeffVector};
pub use embedding::{
    build_embedding, build_embedding_from_record, build_embedding_lenient, EmbeddingData, EmbeddingRecord, COMPAT_TOL,
};
pub use generate::{generate_instance, generate_instance_file, InstanceFile, InstanceKind, MAX_ATTEMPTS};
pub use prym::{coeff_prym_single, coeffs_prym, prym_maps, PrymSpec};
pub use verify::{expand, verify_expansion, verify_with_coeffs, ExpansionCheck, NEAR_ZERO, NEAR_ZERO_ABS_TOL};
