use abelfn_core::apps::ckp::{ckp_compare, ckp_v_jacobi, FlowData};
use abelfn_core::apps::rigid::{prym_theta_ratio, RatioTerms};
use abelfn_core::apps::toda::{
    spectral_coeffs, spectral_fit, toda_integrate, toda_run, DiagonalMap, LaxMode, TodaConfig, TodaState,
};
use abelfn_core::linalg::C64;
use abelfn_core::restriction::{coeffs_prym, PrymSpec};
use abelfn_core::theta::{theta, Characteristic};
use abelfn_core::Error;

#[test]
fn ckp_forms_agree_on_seeded_data() {
    let mut checked = 0;
    for seed in 0..20u64 {
        let (g, n) = [(1, 1), (1, 2), (2, 1), (2, 2)][seed as usize % 4];
        let d = FlowData::synthetic(g, n, 3, seed).unwrap();
        match ckp_compare(&d, 1e-13) {
            Ok(c) => {
                assert!(c.rel_err <= 1e-7, "seed {seed}: {c:?}");
                checked += 1;
            }
            Err(Error::NearThetaZero { .. }) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    assert!(checked >= 18);
}

#[test]
fn ckp_equivalence_is_stable_under_looser_tolerance() {
    for seed in 0..6u64 {
        let d = FlowData::synthetic(1, 1, 2, seed).unwrap();
        let a = ckp_compare(&d, 1e-12).unwrap().rel_err <= 1e-7;
        let b = ckp_compare(&d, 2e-12).unwrap().rel_err <= 1e-7;
        assert_eq!(a, b);
    }
}

#[test]
fn ckp_potential_ignores_lattice_shifts_of_gamma() {
    let d = FlowData::synthetic(1, 2, 2, 5).unwrap();
    let v = ckp_v_jacobi(&d, 1e-13).unwrap();
    let om = d.big_omega().omega().clone();
    let dim = om.rows();
    // γ ↦ γ + Ω̃e₁ + e₂ multiplies θ by an exponential of a linear form.
    let gamma: Vec<C64> = (0..dim)
        .map(|i| d.gamma()[i] + om[(i, 0)] + if i == 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
        .collect();
    let w = ckp_v_jacobi(&d.with_gamma(gamma).unwrap(), 1e-13).unwrap();
    assert!((v - w).norm() <= 1e-9 * v.norm().max(1.0), "{v} vs {w}");
}

#[test]
fn theta_ratio_matches_ambient_ratio() {
    let d = FlowData::synthetic(1, 2, 1, 11).unwrap();
    let spec: &PrymSpec = d.prym();
    let emb = spec.embedding();
    let g1: Vec<C64> = d.gamma().to_vec();
    let g2: Vec<C64> = g1.iter().enumerate().map(|(i, c)| c + C64::new(0.1 * i as f64, -0.05)).collect();
    let c1 = coeffs_prym(spec, &g1, 1e-13).unwrap();
    let c2 = coeffs_prym(spec, &g2, 1e-13).unwrap();
    let pick = |c: &abelfn_core::restriction::CoeffVector| [c.get(&[0, 0, 0]).unwrap().value, c.get(&[1, 0, 0]).unwrap().value];
    let z0 = vec![C64::new(0.2, 0.1), C64::new(-0.1, 0.05), C64::new(0.3, -0.2)];
    let u = d.prym_direction(0);
    let gt1 = spec.reduced_gamma(&g1).unwrap();
    let gt2 = spec.reduced_gamma(&g2).unwrap();
    let terms = RatioTerms {
        u: u.clone(),
        z_num: z0.iter().zip(&gt1).map(|(a, b)| a - b).collect(),
        z_den: z0.iter().zip(&gt2).map(|(a, b)| a - b).collect(),
        c_num: pick(&c1),
        c_den: pick(&c2),
        amp: C64::new(1.0, 0.0),
        xi: C64::new(0.0, 0.0),
    };
    let big = emb.big_omega();
    let ch = Characteristic::zero(big.dim());
    for t in [0.0, 0.4, -1.1] {
        let r = prym_theta_ratio(spec, &terms, t, 1e-13).unwrap();
        let z: Vec<C64> = z0.iter().zip(&u).map(|(a, b)| a + b * t).collect();
        let phiz = emb.map_point(&z).unwrap();
        let arg = |g: &[C64]| phiz.iter().zip(g).map(|(a, b)| a - b).collect::<Vec<_>>();
        let num = theta(&ch, &arg(&g1), big, 1e-13).unwrap().value;
        let den = theta(&ch, &arg(&g2), big, 1e-13).unwrap().value;
        let expect = num / den;
        assert!((r - expect).norm() <= 1e-7 * expect.norm(), "t = {t}: {r} vs {expect}");
    }
}

fn mirrored() -> TodaState {
    TodaState::new([-1.0; 3], [0.1, -0.2, 0.1], 0.0).unwrap()
}

fn times() -> Vec<f64> {
    (0..=100).map(|k| k as f64 * 0.1).collect()
}

#[test]
fn printed_pair_falls_back_and_conserves_spectrum() {
    let run = toda_run(&mirrored(), &times(), &TodaConfig::new(1e-10)).unwrap();
    assert_eq!(run.mode, LaxMode::MatrixFlow);
    assert!(run.self_test_residual > 0.1);
    assert!(run.conservation_drift() <= 1e-8, "{}", run.conservation_drift());
    assert!(run.spectrum_drift() <= 1e-8, "{}", run.spectrum_drift());
    assert!(run.max_odd_bracket() <= 1e-8);
}

#[test]
fn consistent_diagonal_conserves_state_invariants() {
    let mut cfg = TodaConfig::new(1e-10);
    cfg.map = DiagonalMap::CartanConsistent;
    let run = toda_run(&mirrored(), &times(), &cfg).unwrap();
    assert_eq!(run.mode, LaxMode::StateMatrices);
    assert!(run.conservation_drift() <= 1e-8, "{}", run.conservation_drift());
    assert!(run.spectrum_drift() <= 1e-8);
}

#[test]
fn drift_shrinks_with_tolerance() {
    let loose = toda_run(&mirrored(), &times(), &TodaConfig::new(1e-4)).unwrap().conservation_drift();
    let tight = toda_run(&mirrored(), &times(), &TodaConfig::new(1e-10)).unwrap().conservation_drift();
    assert!(loose >= 1e3 * tight, "{loose} vs {tight}");
    assert!(loose <= 100.0 * 1e-4);
}

#[test]
fn printed_invariants_drift_under_the_printed_flow() {
    // H read off A_μ(X(t), Y(t)) with the printed diagonal is not constant.
    let states = toda_integrate(&mirrored(), 10.0, 1e-10).unwrap();
    let h0 = spectral_coeffs(&states[0]).unwrap().h;
    let drift = states
        .iter()
        .map(|s| {
            let h = spectral_fit(s, DiagonalMap::Verbatim).unwrap().coeffs.h;
            h.iter().zip(&h0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    assert!(drift > 1e-2);
}
