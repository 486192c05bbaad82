use floquet_engine::ode::C64;
use floquet_engine::protocol::*;
use floquet_engine::thermo::reversibility_check;
use floquet_engine::Error;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn carnot(period: f64) -> CycleProtocol {
    mechanical_to_bosonic(&build_carnot_protocol(1.0, 0.85, 1.0, 0.03, period).unwrap()).unwrap()
}

/// Three bosonic strokes with `omega` given by `profile` on the middle one.
fn probe_protocol(profile: Profile) -> CycleProtocol {
    let flat = |label: &str, duration: f64| Stroke {
        label: label.into(),
        duration,
        drive: Drive::Bosonic { omega: Profile::constant(1.0), lambda: ComplexProfile::constant(c(0.0, 0.0)) },
        gamma: 0.1,
        bath: Bath::Thermal { temperature: 1.0 },
    };
    let probe = Stroke {
        label: "probe".into(),
        duration: 3.0,
        drive: Drive::Bosonic { omega: profile, lambda: ComplexProfile::real(Profile::Linear { from: 0.1, to: -0.2 }) },
        gamma: 0.0,
        bath: Bath::Idle,
    };
    CycleProtocol::new("probe", vec![flat("a", 2.0), probe, flat("b", 7.0)]).unwrap()
}

#[test]
fn mech_pair_examples() {
    assert_eq!(mech_pair(1.0, 1.0), (1.0, 0.0));
    let (w, l) = mech_pair(2.0, 1.0);
    assert_eq!((w, l), (2.5, 1.5));
    assert!((w * w - l * l - 4.0).abs() < 1e-14);
    let (w, l) = mech_pair(0.5, 1.0);
    assert!((w - 0.625).abs() < 1e-15 && (l + 0.375).abs() < 1e-15);
    assert!((w - l - 1.0).abs() < 1e-15);
}

#[test]
fn mechanical_protocol_maps_to_bosonic_parameters() {
    let mech = MechanicalProtocol {
        name: "flat".into(),
        eta: 1.0,
        strokes: vec![
            MechStroke { label: "hot".into(), duration: 1.0, omega: Profile::constant(2.0), gamma: 0.1, temperature: Some(1.0) },
            MechStroke { label: "idle".into(), duration: 1.0, omega: Profile::constant(2.0), gamma: 0.0, temperature: None },
        ],
        carnot: None,
    };
    let p = mechanical_to_bosonic(&mech).unwrap();
    let hot = p.params(0.5);
    assert_eq!((hot.omega, hot.lambda), (2.5, c(1.5, 0.0)));
    let idle = p.params(1.5);
    assert_eq!((idle.gamma, idle.n, idle.m), (0.0, 0.0, c(0.0, 0.0)));
    let bad = MechanicalProtocol { eta: 0.0, ..mech };
    assert!(mechanical_to_bosonic(&bad).is_err());
}

#[test]
fn thermal_params_bose_limit() {
    let (n, m) = thermal_bath_params(1.0, c(0.0, 0.0), 1.0).unwrap();
    assert!((n - 1.0 / (1f64.exp() - 1.0)).abs() < 1e-14);
    assert!((n - 0.5820).abs() < 1e-4);
    assert_eq!(m, c(0.0, 0.0));
    let (n, _) = thermal_bath_params(1.0, c(0.0, 0.0), 1e-3).unwrap();
    assert!(n.abs() < 1e-300);
}

#[test]
fn thermal_params_squeezed() {
    let (w, l, temp) = (1.0f64, 0.3f64, 1.0f64);
    let (n, m) = thermal_bath_params(w, c(l, 0.0), temp).unwrap();
    let big = 0.91f64.sqrt();
    assert!((big - 0.9539).abs() < 1e-4);
    let coth = (big / temp).exp().mul_add(1.0, 1.0) / (big / temp).exp_m1();
    assert!((n + 0.5 - coth / (2.0 * big)).abs() < 1e-14);
    assert!((m.re + l * coth / (2.0 * big)).abs() < 1e-14);
    assert_eq!(m.im, 0.0);
    assert!(n * (n + 1.0) > m.norm_sqr());
}

#[test]
fn thermal_params_errors() {
    assert!(thermal_bath_params(1.0, c(0.0, 0.0), 0.0).is_err());
    assert!(thermal_bath_params(1.0, c(0.0, 0.0), -1.0).is_err());
    assert!(thermal_bath_params(1.0, c(1.0, 0.0), 1.0).is_err());
}

#[test]
fn carnot_constants() {
    let mech = build_carnot_protocol(1.0, 0.85, 1.0, 0.03, 1000.0).unwrap();
    let g = mech.carnot.unwrap();
    assert!((g.t_cold - 1.0 / 1.85).abs() < 1e-15);
    assert!((g.t_cold - 0.54).abs() < 0.005);
    assert!((g.inner_delta() - 0.85 / 1.85).abs() < 1e-15);
    assert!((g.inner_delta() - 0.4595).abs() < 1e-4);
    let [a, b, cc, d] = g.corners();
    assert!((g.t_cold / g.t_hot - cc / b).abs() < 1e-15);
    assert!((g.t_cold / g.t_hot - d / a).abs() < 1e-15);
}

#[test]
fn carnot_stroke_layout() {
    let period = 400.0;
    let mech = build_carnot_protocol(1.0, 0.85, 1.0, 0.03, period).unwrap();
    let p = mechanical_to_bosonic(&mech).unwrap();
    for k in 0..4 {
        let (s, e) = p.stroke_bounds(k);
        assert!((s - k as f64 * period / 4.0).abs() < 1e-12 && (e - (k + 1) as f64 * period / 4.0).abs() < 1e-12);
        let mid = 0.5 * (s + e);
        let gamma = if k % 2 == 0 { 0.03 } else { 0.0 };
        assert_eq!(p.params(mid).gamma, gamma);
        assert_eq!(mech.strokes[k].temperature, [Some(1.0), None, Some(1.0 / 1.85), None][k]);
    }
    // Idle strokes carry the placeholder bath.
    assert_eq!(p.params(150.0).n, 0.0);
    let corners = mech.carnot.unwrap().corners();
    for k in 0..4 {
        let (start, end) = mech.stroke_corner_frequencies(k);
        assert!((start - corners[k]).abs() < 1e-12, "stroke {k} start");
        assert!((end - corners[(k + 1) % 4]).abs() < 1e-12, "stroke {k} end");
    }
}

#[test]
fn carnot_rejects_deep_modulation() {
    assert!(build_carnot_protocol(1.0, 1.0, 1.0, 0.03, 100.0).is_err());
    assert!(build_carnot_protocol(1.0, 1.5, 1.0, 0.03, 100.0).is_err());
}

#[test]
fn carnot_without_modulation_is_constant() {
    let mech = build_carnot_protocol(1.0, 0.0, 1.0, 0.03, 100.0).unwrap();
    let g = mech.carnot.unwrap();
    assert_eq!(g.t_cold, g.t_hot);
    let p = mechanical_to_bosonic(&mech).unwrap();
    for i in 0..50 {
        assert!((p.mech_frequency(i as f64 * 2.0) - 1.0).abs() < 1e-15);
    }
}

#[test]
fn carnot_reversibility_is_exact() {
    for period in [100.0, 700.0, 2000.0] {
        let r = reversibility_check(&build_carnot_protocol(1.0, 0.85, 1.0, 0.03, period).unwrap()).unwrap();
        // Exact up to rounding of the corner evaluations.
        assert!(r.expansion_defect.abs() <= 4.0 * f64::EPSILON && r.compression_defect.abs() <= 4.0 * f64::EPSILON, "T = {period}: {r:?}");
    }
}

#[test]
fn otto_is_not_reversible() {
    let r = reversibility_check(&build_otto_protocol(&OttoSpec::default()).unwrap()).unwrap();
    assert!(r.expansion_defect.abs() > 1e-3 && r.compression_defect.abs() > 1e-3, "{r:?}");
}

#[test]
fn perturbed_inner_modulation_shows_as_defect() {
    let mut mech = build_carnot_protocol(1.0, 0.85, 1.0, 0.03, 1000.0).unwrap();
    let eps = 0.01;
    match &mut mech.strokes[1].omega {
        Profile::Cos3 { amplitude, .. } => *amplitude += eps,
        other => panic!("unexpected profile {other:?}"),
    }
    let r = reversibility_check(&mech).unwrap();
    // Omega_c = Delta - delta_inner, so with Delta = 1 the ratio Omega_c / Omega_b moves by -eps.
    assert!((r.expansion_defect + eps).abs() < 1e-14, "{r:?}");
    assert!(r.compression_defect.abs() <= 4.0 * f64::EPSILON);
}

#[test]
fn otto_ramp_contract() {
    let spec = OttoSpec { omega_hot: 1.0, omega_cold: 0.5, ramp: RampShape::Linear, durations: [25.0; 4], ..OttoSpec::default() };
    let p = mechanical_to_bosonic(&build_otto_protocol(&spec).unwrap()).unwrap();
    assert_eq!(p.params(30.0).gamma, 0.0);
    assert!((p.mech_frequency(25.0) - 1.0).abs() < 1e-15);
    assert!((p.mech_frequency(50.0 - 1e-9) - 0.5).abs() < 1e-9);
}

#[test]
fn otto_cosine_ramp_is_valid() {
    let spec = OttoSpec { omega_hot: 1.0, omega_cold: 0.5, ramp: RampShape::CosineRamp, ..OttoSpec::default() };
    let p = mechanical_to_bosonic(&build_otto_protocol(&spec).unwrap()).unwrap();
    assert!(validate_protocol(&p, DEFAULT_SAMPLES_PER_STROKE).is_empty());
}

#[test]
fn otto_equal_frequencies_give_static_work_strokes() {
    let spec = OttoSpec { omega_hot: 1.0, omega_cold: 1.0, ..OttoSpec::default() };
    let p = mechanical_to_bosonic(&build_otto_protocol(&spec).unwrap()).unwrap();
    for t in [110.0, 150.0, 310.0, 390.0] {
        let r = p.rates_on(t, p.schedule().piece_at(t));
        assert_eq!((r.omega_dot, r.lambda_dot), (0.0, c(0.0, 0.0)));
    }
}

#[test]
fn otto_table_endpoints_checked() {
    let spec = OttoSpec {
        ramp: RampShape::Table { s: vec![0.0, 0.5, 1.0], progress: vec![0.0, 0.4, 0.9] },
        ..OttoSpec::default()
    };
    assert!(build_otto_protocol(&spec).is_err());
}

#[test]
fn profile_rates_match_finite_differences() {
    let profiles = [
        Profile::Linear { from: 1.0, to: 0.5 },
        Profile::CosineRamp { from: 1.0, to: 0.5 },
        Profile::Cos3 { base: 1.0, amplitude: 0.85 },
        Profile::Cosine { mean: 0.5, amplitude: 0.25, shift: 0.3 },
        Profile::Parametric { omega0: 1.0, epsilon: 0.5 },
        Profile::Table { s: vec![0.0, 0.35, 1.0], values: vec![1.0, 2.0, 0.5] },
    ];
    for prof in profiles {
        let p = probe_protocol(prof.clone());
        for i in 1..10 {
            let t = 2.0 + 0.3 * i as f64;
            let h = 1e-6;
            let fd = (p.params_in_stroke(t + h, 1).omega - p.params_in_stroke(t - h, 1).omega) / (2.0 * h);
            let rate = p.rates_in_stroke(t, 1);
            assert!((fd - rate.omega_dot).abs() < 1e-6 * (1.0 + fd.abs()), "{prof:?} at {t}: {fd} vs {}", rate.omega_dot);
            assert!((rate.lambda_dot - c(-0.1, 0.0)).norm() < 1e-15);
        }
    }
}

#[test]
fn table_profile_interpolates_and_adds_breakpoints() {
    let p = probe_protocol(Profile::Table { s: vec![0.0, 0.5, 1.0], values: vec![1.0, 2.0, 1.0] });
    assert_eq!(p.schedule().cuts(), &[2.0, 3.5, 5.0]);
    assert!((p.params(2.75).omega - 1.5).abs() < 1e-15);
    assert!(Profile::Table { s: vec![0.0, 0.7], values: vec![1.0, 2.0] }.check().is_err());
    assert_eq!(Profile::CosineRamp { from: 1.0, to: 0.5 }.endpoints(0.0, 2.0, 8.0), (1.0, 0.5));
}

#[test]
fn validator_accepts_carnot() {
    assert!(validate_protocol(&carnot(300.0), DEFAULT_SAMPLES_PER_STROKE).is_empty());
}

#[test]
fn validator_flags_squeezing_bound() {
    let p = constant_protocol(1.0, 1.0, c(0.0, 0.0), 0.1, 0.1, c(0.5, 0.0)).unwrap();
    let v = validate_protocol(&p, 16);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].constraint, SQUEEZING_BOUND);
}

#[test]
fn validator_flags_missing_dissipation() {
    let p = constant_protocol(1.0, 1.0, c(0.0, 0.0), 0.0, 0.5, c(0.0, 0.0)).unwrap();
    assert!(validate_protocol(&p, 16).iter().any(|x| x.constraint == NO_DISSIPATION));
}

#[test]
fn validator_flags_frequency_bound() {
    let p = constant_protocol(1.0, 1.0, c(2.0, 0.0), 0.1, 0.5, c(0.0, 0.0)).unwrap();
    assert!(validate_protocol(&p, 16).iter().any(|x| x.constraint == FREQUENCY_BOUND));
}

#[test]
fn config_builtin_carnot() {
    let p = load_protocol(r#"{"builtin":"carnot-fig2"}"#).unwrap();
    let g = p.mechanical.as_ref().unwrap().carnot.unwrap();
    assert_eq!((g.big_delta, g.delta, g.t_hot, g.gamma0), (1.0, 0.85, 1.0, 0.03));
    assert_eq!(p.period(), 1000.0);
    let q = load_protocol(r#"{"builtin":"carnot-fig2","overrides":{"period":300}}"#).unwrap();
    assert_eq!(q.period(), 300.0);
    assert_eq!(p.with_period(300.0).unwrap().protocol, q.protocol);
}

#[test]
fn config_parametric_period_is_locked() {
    let p = load_protocol(r#"{"builtin":"parametric"}"#).unwrap();
    assert!(matches!(p.with_period(10.0), Err(Error::Config { .. })));
}

#[test]
fn config_constant_segment() {
    let p = load_protocol(r#"{"period":2,"strokes":[{"duration":2,"omega":1,"lambda":0,"gamma":0.1,"N":0.5,"M":0}]}"#).unwrap();
    let q = p.protocol.params(0.7);
    assert_eq!((q.omega, q.gamma, q.n, q.m), (1.0, 0.1, 0.5, c(0.0, 0.0)));
}

#[test]
fn config_frequency_bound_rejected() {
    let err = load_protocol(r#"{"strokes":[{"duration":1,"omega":1,"lambda":2,"gamma":0.1,"N":0.5}]}"#).unwrap_err();
    assert!(matches!(err, Error::InvalidProtocol(_)), "{err}");
}

#[test]
fn config_schema_error_has_path() {
    let err = load_protocol(r#"{"strokes":[{"duration":1,"omega":1,"gama":0.1}]}"#).unwrap_err();
    match err {
        Error::Config { path, .. } => assert!(path.starts_with("strokes[0]"), "{path}"),
        other => panic!("{other}"),
    }
    let err = load_protocol(r#"{"builtin":"carnot-fig2","overrides":{"detla":0.5}}"#).unwrap_err();
    match err {
        Error::Config { path, .. } => assert_eq!(path, "overrides.detla"),
        other => panic!("{other}"),
    }
}

#[test]
fn config_mechanical_with_profiles() {
    let text = r#"{"representation":"mechanical","eta":1,"strokes":[
        {"duration":10,"Omega":{"kind":"cosine-ramp","from":1,"to":0.5},"gamma":0.1,"temperature":1},
        {"duration":10,"Omega":{"kind":"table","s":[0,0.5,1],"values":[0.5,0.8,1]}}]}"#;
    let p = load_protocol(text).unwrap();
    assert!(p.mechanical.is_some());
    assert_eq!(p.protocol.schedule().cuts(), &[10.0, 15.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mechanical_frequency_round_trip(big in 0.01f64..20.0, eta in 0.01f64..20.0) {
        let (w, l) = mech_pair(big, eta);
        prop_assert!(((w * w - l * l).sqrt() - big).abs() < 1e-12 * big.max(1.0) * (1.0 + big / eta + eta / big));
        prop_assert!((w - l - eta).abs() < 1e-12 * (1.0 + w.abs()));
    }

    #[test]
    fn carnot_round_trip_through_protocol(delta in 0.0f64..0.95, period in 10.0f64..3000.0, s in 0.0f64..1.0) {
        let p = mechanical_to_bosonic(&build_carnot_protocol(1.0, delta, 1.0, 0.03, period).unwrap()).unwrap();
        let t = s * period;
        let k = p.stroke_at(t);
        let direct = p.mech_frequency_in_stroke(t, k);
        prop_assert!((p.params_in_stroke(t, k).mech_frequency() - direct).abs() < 1e-12);
    }

    #[test]
    fn thermal_bath_is_physical(w in 0.01f64..10.0, frac in 0.0f64..0.999, phase in 0.0f64..std::f64::consts::TAU, temp in 1e-2f64..100.0) {
        let lambda = C64::from_polar(frac * w, phase);
        let (n, m) = thermal_bath_params(w, lambda, temp).unwrap();
        prop_assert!(n >= 0.0);
        prop_assert!(n * (n + 1.0) - m.norm_sqr() > 0.0, "n = {n}, |m| = {}", m.norm());
    }

    #[test]
    fn protocols_are_periodic(s in 0.0f64..1.0, which in 0usize..3, cycles in 1i32..4) {
        let p = match which {
            0 => carnot(700.0),
            1 => mechanical_to_bosonic(&build_otto_protocol(&OttoSpec::default()).unwrap()).unwrap(),
            _ => mechanical_to_bosonic(&build_parametric_protocol(&ParametricSpec::default()).unwrap()).unwrap(),
        };
        let t = s * p.period;
        let a = p.params(t);
        let b = p.params(t + cycles as f64 * p.period);
        let scale = 1.0 + a.omega.abs();
        prop_assert!((a.omega - b.omega).abs() < 1e-12 * scale);
        prop_assert!((a.lambda - b.lambda).norm() < 1e-12 * scale);
        prop_assert_eq!(a.gamma, b.gamma);
        prop_assert!((a.n - b.n).abs() < 1e-12 * (1.0 + a.n));
        prop_assert!((a.m - b.m).norm() < 1e-12 * (1.0 + a.n));
    }
}
