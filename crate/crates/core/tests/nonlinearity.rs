use finsler_core::nonlinearity::*;
use proptest::prelude::*;

/// `Ψ(t)` for `f = t^q`, written out from `F = t^{q+1}/(q+1)`.
fn psi_power(p: f64, q: f64, t: f64) -> f64 {
    ((p - 1.0) * (q + 1.0) / p).powf(1.0 / p) * p / (q + 1.0 - p) * t.powf(-(q + 1.0 - p) / p)
}

fn cube_table() -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 0.0)];
    let n = 400;
    for i in 1..=n {
        // geometric grid on [1e-4, 1e4]
        let t = 10f64.powf(-4.0 + 8.0 * i as f64 / n as f64);
        pts.push((t, t.powi(3)));
    }
    pts
}

#[test]
fn primitive_examples() {
    let f = Nonlinearity::power(3.0, 2.0).unwrap();
    assert!((f.primitive(2.0).unwrap() - 4.0).abs() < 1e-14);
    assert_eq!(f.primitive(0.0).unwrap(), 0.0);
    let table = Nonlinearity::tabulated(&cube_table(), 2.0).unwrap();
    assert!((table.primitive(2.0).unwrap() - 4.0).abs() < 1e-6);
}

#[test]
fn psi_examples() {
    let f = Nonlinearity::power(3.0, 2.0).unwrap();
    assert!((f.psi(2.0).unwrap() - 0.5 * 2f64.sqrt()).abs() < 1e-9);
    assert_eq!(
        Nonlinearity::power(1.0, 2.0).unwrap().psi(1.0).unwrap(),
        f64::INFINITY
    );
    let g = Nonlinearity::power(5.0, 3.0).unwrap();
    let v = g.psi(1.0).unwrap();
    assert!((v - 4f64.cbrt()).abs() < 1e-6 * v);
}

#[test]
fn tabulated_psi_tracks_the_power_law() {
    let table = Nonlinearity::tabulated(&cube_table(), 2.0).unwrap();
    for t in [0.5, 1.0, 10.0] {
        let got = table.psi(t).unwrap();
        let want = psi_power(2.0, 3.0, t);
        assert!((got - want).abs() < 1e-4 * want, "t={t}: {got} vs {want}");
    }
}

#[test]
fn closed_form_for_the_exponent_grid() {
    for p in [2.0, 3.0, 4.0] {
        for q in [p - 0.5, p, 2.0 * p] {
            let f = Nonlinearity::power(q, p).unwrap();
            for t in [0.1, 1.0, 10.0] {
                let want = psi_power(p, q, t);
                let got = f.psi(t).unwrap();
                assert!(
                    (got - want).abs() <= 1e-6 * want,
                    "p={p} q={q} t={t}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn phi_examples() {
    let prof = Nonlinearity::power(3.0, 2.0).unwrap().profile().unwrap();
    assert!((prof.phi(0.1).unwrap() - 10.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!((prof.phi(prof.psi(5.0).unwrap()).unwrap() - 5.0).abs() < 1e-8);

    let prof = Nonlinearity::power(5.0, 3.0).unwrap().profile().unwrap();
    // Ψ(t) = 4^{1/3} t^{-1}
    let want = 4f64.cbrt() / 0.5;
    assert!((prof.phi_bisect(0.5).unwrap() - want).abs() < 1e-7 * want);
}

#[test]
fn osgood_examples() {
    let a1 = Nonlinearity::power(3.0, 2.0).unwrap().profile().unwrap();
    assert_eq!(a1.osgood(), Osgood::A1Diverges);
    assert_eq!(a1.l(1.0), None);
    assert_eq!(a1.psi_sup(), f64::INFINITY);

    let slow = Nonlinearity::power(0.5, 2.0).unwrap();
    assert_eq!(slow.classify_osgood().unwrap().osgood, Osgood::A2Converges);
    // the tail diverges as well, so there is no profile
    assert!(!slow.ko_holds().unwrap());
    assert_eq!(
        slow.profile().unwrap_err(),
        finsler_core::Error::DivergentIntegral
    );
}

#[test]
fn osgood_length_for_a_tabulated_slow_start() {
    // f = √t near zero, t³ in the tail: (A2) with (KO)
    let mut pts = vec![(0.0, 0.0)];
    for i in 1..=600 {
        let t = 10f64.powf(-6.0 + 10.0 * i as f64 / 600.0);
        pts.push((t, if t <= 1.0 { t.sqrt() } else { t.powi(3) }));
    }
    let nl = Nonlinearity::tabulated(&pts, 2.0).unwrap();
    let prof = nl.profile().unwrap();
    assert_eq!(prof.osgood(), Osgood::A2Converges);
    let l = prof.l(1.0).unwrap();
    // c ∫_0^1 (2/3 s^{3/2})^{-1/2} ds = c √(3/2) · 4 with c = √(1/2)
    let head = (0.5f64).sqrt() * 1.5f64.sqrt() * 4.0;
    assert!(l > head && l.is_finite(), "{l}");
    assert!((prof.psi_sup() - l).abs() < 1e-12);
    assert!(matches!(
        prof.phi(l * 1.01),
        Err(finsler_core::Error::OutOfRange { .. })
    ));
}

#[test]
fn spec_parsing() {
    let spec: NonlinearitySpec = serde_json::from_str(r#"{"kind":"power","q":3}"#).unwrap();
    assert_eq!(spec.build(2.0).unwrap().power_exponent(), Some(3.0));
    let spec: NonlinearitySpec =
        serde_json::from_str(r#"{"kind":"table","points":[[0,0],[1,1],[2,8]]}"#).unwrap();
    assert!(matches!(
        spec.build(2.0).unwrap().kind(),
        NonlinearityKind::Tabulated(_)
    ));
    assert!(serde_json::from_str::<NonlinearitySpec>(r#"{"kind":"power","q":3,"r":1}"#).is_err());
    assert!(NonlinearitySpec::Power { q: 3.0 }.build(1.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn psi_is_strictly_decreasing(q in 1.2..6.0f64, r in 0.01..50.0f64, factor in 1.01..10.0f64) {
        let f = Nonlinearity::power(q, 2.0).unwrap();
        prop_assert!(f.psi(r).unwrap() > f.psi(r * factor).unwrap());
    }

    #[test]
    fn phi_inverts_psi(q in 1.2..6.0f64, r in 0.01..100.0f64) {
        let prof = Nonlinearity::power(q, 2.0).unwrap().profile().unwrap();
        let s = prof.psi(r).unwrap();
        prop_assert!((prof.phi(s).unwrap() - r).abs() <= 1e-6 * r);
        prop_assert!((prof.phi_bisect(s).unwrap() - r).abs() <= 1e-6 * r);
    }

    #[test]
    fn ko_follows_the_exponent_rule(p in 2.0..4.0f64, dq in -0.9..3.0f64) {
        prop_assume!(dq.abs() > 0.05);
        let q = p - 1.0 + dq;
        prop_assume!(q > 0.0);
        let f = Nonlinearity::power(q, p).unwrap();
        prop_assert_eq!(f.ko_holds().unwrap(), dq > 0.0);
    }
}
