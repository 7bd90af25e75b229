use abelfn_core::linalg::C64;
use abelfn_core::restriction::{
    coeffs_prym, restriction_coeffs, generate_instance, verify_expansion, verify_with_coeffs, InstanceKind, PrymSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-spread..spread)))
        .collect()
}

fn kinds() -> Vec<InstanceKind> {
    vec![
        InstanceKind::prym(1, 1),
        InstanceKind::prym(1, 2),
        InstanceKind::prym(2, 1),
        InstanceKind::generic(1, 2),
        InstanceKind::generic(2, 4),
        InstanceKind::Generic { n: 2, g_tilde: 3, delta: Some(vec![1, 2]), twist: true },
        InstanceKind::Generic { n: 1, g_tilde: 3, delta: Some(vec![3]), twist: true },
        InstanceKind::Generic { n: 2, g_tilde: 4, delta: Some(vec![2, 2]), twist: true },
    ]
}

#[test]
fn expansion_identity_on_generated_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for kind in kinds() {
        for seed in 0..3 {
            let emb = generate_instance(&kind, seed).unwrap();
            for _ in 0..3 {
                let z = random_vec(&mut rng, emb.small_dim(), 0.4);
                let gamma = random_vec(&mut rng, emb.big_dim(), 0.4);
                let chk = verify_expansion(&emb, &gamma, &z, 1e-13).unwrap();
                assert!(chk.passes(1e-8), "{kind:?} seed {seed}: {chk:?}");
            }
        }
    }
}

#[test]
fn coefficient_count_matches_polarization_degree() {
    for (g, n) in [(1, 1), (2, 1), (1, 2)] {
        let emb = generate_instance(&InstanceKind::prym(g, n), 5).unwrap();
        let c = restriction_coeffs(&emb, &vec![C64::new(0.0, 0.0); emb.big_dim()], 1e-10).unwrap();
        assert_eq!(c.len(), 1 << g);
    }
}

#[test]
fn prym_paths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (g, n) in [(1, 1), (1, 2), (2, 1)] {
        for seed in 0..3 {
            let emb = generate_instance(&InstanceKind::prym(g, n), seed).unwrap();
            let spec = PrymSpec::from_embedding(g, n, emb.clone()).unwrap();
            let gamma = random_vec(&mut rng, emb.big_dim(), 0.5);
            let a = restriction_coeffs(&emb, &gamma, 1e-13).unwrap();
            let b = coeffs_prym(&spec, &gamma, 1e-13).unwrap();
            for ((ea, va), (eb, vb)) in a.entries.iter().zip(&b.entries) {
                assert_eq!(ea, eb);
                let rel = (va.value - vb.value).norm() / va.value.norm().max(vb.value.norm());
                assert!(rel <= 1e-9, "g={g} n={n} seed={seed} eps={:?} rel={rel:e}", ea.rep());
            }
        }
    }
}

#[test]
fn lattice_translation_of_gamma() {
    // Shifting γ by λ ∈ Zᵍ multiplies c_ε by exp(2πi⟨ε, Δ⁻¹Pᵀλ⟩).
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let emb = generate_instance(&InstanceKind::prym(1, 1), 2).unwrap();
    let gamma = random_vec(&mut rng, 3, 0.3);
    let lambda = [1i64, -2, 1];
    let shifted: Vec<C64> = gamma.iter().zip(&lambda).map(|(g, &l)| g + l as f64).collect();
    let a = restriction_coeffs(&emb, &gamma, 1e-13).unwrap();
    let b = restriction_coeffs(&emb, &shifted, 1e-13).unwrap();
    let pl = emb.p().transpose().checked_mat_vec(&lambda).unwrap();
    for ((eps, va), (_, vb)) in a.entries.iter().zip(&b.entries) {
        let ph: f64 = eps
            .rep()
            .iter()
            .zip(&pl)
            .zip(emb.delta_diag())
            .map(|((&e, &p), &d)| e as f64 * p as f64 / d as f64)
            .sum();
        let expected = va.value * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * ph);
        assert!((vb.value - expected).norm() <= 1e-10 * va.value.norm().max(va.scale));
    }
    let z = random_vec(&mut rng, 2, 0.3);
    assert!(verify_with_coeffs(&emb, &b, &z, 1e-13).unwrap().passes(1e-8));
}
