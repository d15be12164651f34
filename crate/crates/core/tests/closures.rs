use alloyfreeze_core::*;
use proptest::prelude::*;

fn pd() -> PhaseDiagram64 {
    PhaseDiagram::linear(1.0, 0.0, 0.5, 0.2).unwrap()
}

proptest! {
    #[test]
    fn liquid_concentration_is_continuous_across_liquidus(theta in 0.001f64..0.999) {
        let pd = pd();
        let c = pd.liquidus(theta);
        let d = 1e-6;
        prop_assert!((pd.liquid_concentration(c - d, theta) - c).abs() <= 1e-5);
        prop_assert!((pd.liquid_concentration(c + d, theta) - c).abs() <= 1e-5);
    }

    #[test]
    fn liquid_concentration_is_continuous_across_solidus(theta in 0.001f64..0.999) {
        let pd = pd();
        let c = pd.solidus(theta);
        let target = pd.liquidus(theta);
        let d = 1e-6;
        prop_assert!((pd.liquid_concentration(c - d, theta) - target).abs() <= 1e-5);
        prop_assert!((pd.liquid_concentration(c + d, theta) - target).abs() <= 1e-5);
    }

    #[test]
    fn closures_stay_in_range(c in -1.0f64..1.5, theta in -1.0f64..2.0) {
        let pd = pd();
        let cl = pd.liquid_concentration(c, theta);
        let fs = pd.solid_fraction(c, theta);
        prop_assert!((0.0..=pd.c_e).contains(&cl));
        prop_assert!((0.0..=1.0).contains(&fs));
    }
}

#[test]
fn classification_is_total_on_sample_grid() {
    let pd = pd();
    for a in 0..=100 {
        for b in 0..=100 {
            let c = -1.0 + (pd.c_e + 2.0) * a as f64 / 100.0;
            let theta = pd.theta_e - 1.0 + (pd.theta_f - pd.theta_e + 2.0) * b as f64 / 100.0;
            let tag = pd.classify(c, theta);
            assert_eq!(Region::ALL.iter().filter(|&&r| r == tag).count(), 1);
        }
    }
}

#[test]
fn carman_kozeny_is_monotone_on_sample_grid() {
    let pp = PhysicalParams::<f64>::default();
    let n = 100;
    let fs = |k: usize| k as f64 / (n - 1) as f64;
    let eps = |k: usize| 0.01 + 0.99 * k as f64 / (n - 1) as f64;
    for a in 0..n {
        for b in 0..n {
            let v = carman_kozeny(&pp, fs(a), eps(b)).unwrap();
            assert!(v >= 0.0);
            if a + 1 < n {
                assert!(carman_kozeny(&pp, fs(a + 1), eps(b)).unwrap() >= v);
            }
            if b + 1 < n {
                assert!(carman_kozeny(&pp, fs(a), eps(b + 1)).unwrap() <= v);
            }
        }
    }
    assert!(carman_kozeny(&pp, 1.0, 0.0).is_err());
}

#[test]
fn spec_examples_of_closures() {
    let pd = pd();
    assert_eq!(pd.liquidus(pd.theta_f), 0.0);
    assert_eq!(pd.liquidus(pd.theta_e), pd.c_e);
    assert_eq!(pd.solidus(pd.theta_e), pd.c_a);
    assert_eq!(pd.classify(-0.1, 0.3), Region::NegativeExt);
    assert_eq!(pd.classify(pd.c_e / 2.0, pd.theta_f + 1.0), Region::Liquid);
    let theta = 0.5;
    let mid = 0.5 * (pd.liquidus(theta) + pd.solidus(theta));
    assert_eq!(pd.classify(mid, theta), Region::Mixture);
    assert!((pd.solid_fraction(mid, theta) - 0.5).abs() < 1e-12);
    let pp = PhysicalParams::<f64>::default();
    assert!((carman_kozeny(&pp, 1.0, 0.1).unwrap() - pp.carman_kozeny / 1e-3).abs() < 1e-6);
    assert!((carman_kozeny(&pp, 0.5, 0.5).unwrap() - pp.carman_kozeny * 0.25).abs() < 1e-12);
}
