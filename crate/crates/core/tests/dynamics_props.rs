use proptest::prelude::*;
use spinsim_core::dynamics::{crush_gradient, free_evolution, hard_pulse_unitary, selective_pulse_unitary};
use spinsim_core::{eigensystem, transition_catalog, CMatrix, DeviationDensityMatrix, EigenSystem, SpinSystem, C64};

fn system(offsets: Vec<f64>, j: f64, d: f64) -> EigenSystem {
    let n = offsets.len();
    let mut sys = SpinSystem::new("prop", offsets);
    for a in 0..n {
        for b in a + 1..n {
            sys = sys
                .with_j(a, b, j * (1.0 + a as f64) / (1.0 + b as f64))
                .with_d(a, b, d / (1.0 + (a + b) as f64));
        }
    }
    eigensystem(&sys, false).unwrap()
}

fn arb_system() -> impl Strategy<Value = EigenSystem> {
    (
        prop::collection::vec(-300.0..300.0f64, 1..=3),
        -20.0..20.0f64,
        -400.0..400.0f64,
    )
        .prop_map(|(o, j, d)| system(o, j, d))
}

fn arb_state(d: usize) -> impl Strategy<Value = DeviationDensityMatrix> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * d).prop_map(move |v| {
        let m = CMatrix::from_fn(d, d, |r, c| C64::new(v[r * d + c].0, v[r * d + c].1));
        DeviationDensityMatrix::from_matrix((&m + &m.adjoint()).scale_real(0.5))
    })
}

fn with_state() -> impl Strategy<Value = (EigenSystem, DeviationDensityMatrix)> {
    arb_system().prop_flat_map(|es| {
        let d = es.dim();
        (Just(es), arb_state(d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selective_pulses_compose(es in arb_system(), a in -360.0..360.0f64, b in -360.0..360.0f64, phi in 0.0..360.0f64, pick in 0usize..1000) {
        let cat = transition_catalog(&es, 0.05);
        let t = &cat.entries[pick % cat.len()];
        let ua = selective_pulse_unitary(&es, t.lower, t.upper, a, phi).unwrap();
        let ub = selective_pulse_unitary(&es, t.lower, t.upper, b, phi).unwrap();
        let uab = selective_pulse_unitary(&es, t.lower, t.upper, a + b, phi).unwrap();
        prop_assert!(ua.matmul(&ub).max_abs_diff(&uab) < 1e-12);
        let back = selective_pulse_unitary(&es, t.lower, t.upper, -a, phi).unwrap();
        prop_assert!(ua.matmul(&back).max_abs_diff(&CMatrix::identity(es.dim())) < 1e-12);
    }

    #[test]
    fn full_turn_is_plus_or_minus_identity(es in arb_system(), phi in 0.0..360.0f64) {
        let u = hard_pulse_unitary(&es, 360.0, phi);
        let sign = if es.n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(u.max_abs_diff(&CMatrix::identity(es.dim()).scale_real(sign)) < 1e-12);
    }

    #[test]
    fn evolution_keeps_populations_and_norm((es, rho) in with_state(), t in 0.0..1.0f64) {
        let out = free_evolution(&es, &rho, t);
        for (a, b) in out.populations().iter().zip(rho.populations()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((out.mat.frobenius() - rho.mat.frobenius()).abs() < 1e-12);
        prop_assert!(out.mat.hermiticity_error() < 1e-12);
    }

    #[test]
    fn crusher_is_idempotent_and_commutes_with_evolution((es, rho) in with_state(), t in 0.0..1.0f64) {
        let c = crush_gradient(&rho);
        prop_assert_eq!(crush_gradient(&c).mat, c.mat.clone());
        let a = crush_gradient(&free_evolution(&es, &rho, t));
        prop_assert!(a.mat.max_abs_diff(&c.mat) < 1e-12);
    }

    #[test]
    fn state_text_round_trip((_es, rho) in with_state()) {
        let back = DeviationDensityMatrix::parse(&rho.to_text()).unwrap();
        prop_assert!(back.mat.max_abs_diff(&rho.mat) < 1e-11);
    }
}
