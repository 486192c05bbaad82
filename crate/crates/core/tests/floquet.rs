use std::f64::consts::PI;

use floquet_engine::dynamics::{
    detect_convergence, stationary_moments, stroboscopic_fixed_point, stroboscopic_samples, FockOracle, Generator,
    SecondMoments,
};
use floquet_engine::floquet::*;
use floquet_engine::ode::C64;
use floquet_engine::protocol::*;
use floquet_engine::Error;
use proptest::prelude::*;

const ZERO: C64 = C64::new(0.0, 0.0);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() < tol
}

fn carnot(period: f64) -> CycleProtocol {
    mechanical_to_bosonic(&build_carnot_protocol(1.0, 0.85, 1.0, 0.03, period).unwrap()).unwrap()
}

fn parametric(epsilon: f64, gamma: f64) -> CycleProtocol {
    let spec = ParametricSpec { epsilon, gamma, ..ParametricSpec::default() };
    mechanical_to_bosonic(&build_parametric_protocol(&spec).unwrap()).unwrap()
}

/// Parametric protocol with damping `factor` times the stability threshold.
fn parametric_at(epsilon: f64, factor: f64) -> CycleProtocol {
    let probe = parametric(epsilon, 0.1);
    let threshold = 2.0 * UnitaryFrame::solve(&probe, 1e-10).unwrap().lambda_bar.im.abs();
    parametric(epsilon, factor * threshold)
}

/// Constant mechanical frequency `big` at mass `eta`, thermal at `T = 1`.
fn constant_mechanical(big: f64, eta: f64) -> CycleProtocol {
    let mech = MechanicalProtocol {
        name: "constant".into(),
        eta,
        strokes: vec![MechStroke {
            label: "contact".into(),
            duration: 3.0,
            omega: Profile::constant(big),
            gamma: 0.1,
            temperature: Some(1.0),
        }],
        carnot: None,
    };
    mechanical_to_bosonic(&mech).unwrap()
}

fn pure_dissipation(period: f64, n: Profile, m: ComplexProfile) -> CycleProtocol {
    CycleProtocol::new(
        "relaxation",
        vec![Stroke {
            label: "relaxation".into(),
            duration: period,
            drive: Drive::Bosonic { omega: Profile::constant(0.0), lambda: ComplexProfile::constant(ZERO) },
            gamma: 0.2,
            bath: Bath::Explicit { n, m },
        }],
    )
    .unwrap()
}

#[test]
fn no_squeezing_gives_trivial_frame() {
    let p = constant_protocol(4.0, 1.0, ZERO, 0.1, 0.5, ZERO).unwrap();
    let f = FloquetFrames::solve(&p, 1e-11).unwrap();
    let u = f.unitary();
    assert_eq!(u.sigma, Sigma::US);
    assert!(close(u.lambda_bar, c(1.0, 0.0), 1e-12));
    for s in u.samples() {
        assert_eq!((s.r2, s.r1), (ZERO, ZERO));
        assert!(close(s.j, c(1.0, 0.0), 1e-15) && close(s.z, c(1.0, 0.0), 1e-15));
    }
    for s in f.dissipative.samples() {
        assert!(close(s.g2, c(1.0, 0.0), 1e-10), "{}", s.g2);
        assert!(s.gt3.norm() < 1e-12 && s.gt4.norm() < 1e-12);
        assert!(close(s.n_tilde, c(0.5, 0.0), 1e-12));
    }
    let lc = f.limit_cycle_moments(1.7).unwrap();
    assert!((lc.moments.n - 0.5).abs() < 1e-10 && lc.moments.m.norm() < 1e-12);
}

#[test]
fn constant_squeezing_frame_values() {
    let p = constant_protocol(7.0, 1.0, c(0.3, 0.0), 0.1, 0.5, c(0.0, 0.1)).unwrap();
    let f = FloquetFrames::solve(&p, 1e-11).unwrap();
    let u = f.unitary();
    let omega = 0.91f64.sqrt();
    assert!(close(u.lambda_bar, c(omega, 0.0), 1e-9), "{}", u.lambda_bar);
    assert_eq!(u.sigma, Sigma::US);
    // Root of 2 l r^2 - 2 i w r - l/2 = 0 connected to r = 0 as l -> 0.
    let (a, b, cc) = (c(0.6, 0.0), c(0.0, -2.0), c(-0.15, 0.0));
    let disc = (b * b - a * cc * 4.0).sqrt();
    let roots = [(-b + disc) / (a * 2.0), (-b - disc) / (a * 2.0)];
    let r2 = if roots[0].norm() < roots[1].norm() { roots[0] } else { roots[1] };
    assert!((r2.im - 0.07677).abs() < 1e-5);
    assert!(close(u.r2_initial(), r2, 1e-9), "{}", u.r2_initial());
    let r1 = c(0.3, 0.0) / (c(0.0, 4.0) - r2 * 8.0 * 0.3);
    assert!((r1.im + 0.0786).abs() < 1e-4);
    assert!(close(u.r1_initial(), r1, 1e-9), "{} vs {r1}", u.r1_initial());
    let s = u.at(2.0).unwrap();
    // J from the static Pinney solution xi^2 = eta / Omega with eta = omega - lambda.
    let (eta, xi2) = (0.7, 0.7 / omega);
    assert!((eta / omega - xi2).abs() < 1e-15);
    let j = 0.5 * (1.0 / xi2 + xi2);
    assert!((j - 1.048).abs() < 1e-3);
    assert!(close(s.j, c(j, 0.0), 1e-9), "{}", s.j);
    assert!(close(s.r1p, s.r1.conj(), 1e-9));
    let d = f.dissipative.at(2.0).unwrap();
    assert!(close(d.n_tilde + 0.5, c(j, 0.0) * 1.0 + 2.0 * c(0.0, 1.0) * (c(0.0, 0.1) * s.r1 - c(0.0, -0.1) * s.r1p), 1e-9));
}

#[test]
fn constant_case_limit_cycle_matches_two_oracles() {
    let p = constant_protocol(7.0, 1.0, c(0.3, 0.0), 0.1, 0.5, c(0.0, 0.1)).unwrap();
    let f = FloquetFrames::solve(&p, 1e-11).unwrap();
    let q = p.params(0.0);
    let bare = FloquetParams {
        omega_f: c(q.omega, 0.0),
        lambda_f: q.lambda,
        lambda_fp: q.lambda.conj(),
        n_f: c(q.n, 0.0),
        m_f: q.m,
        m_fp: q.m.conj(),
        gamma_bar: q.gamma,
        at_time: 0.0,
    };
    let closed = steady_state_covariances(&bare).unwrap();
    let affine = stroboscopic_fixed_point(&p, 2.3, 1e-12).unwrap();
    let lc = f.limit_cycle_moments(2.3).unwrap();
    assert!(lc.moments.distance(&closed) < 1e-8 && lc.moments.distance(&affine) < 1e-8);
    let fp = f.floquet_parameters(2.3).unwrap();
    assert!(close(fp.lambda_fp, fp.lambda_f.conj(), 1e-9));
    assert!(close(fp.m_fp, fp.m_f.conj(), 1e-8));
    assert!(fp.n_f.im.abs() < 1e-9);
}

#[test]
fn steady_state_without_squeezing_is_thermal() {
    let fp = FloquetParams {
        omega_f: c(1.3, 0.0),
        lambda_f: ZERO,
        lambda_fp: ZERO,
        n_f: c(0.8, 0.0),
        m_f: ZERO,
        m_fp: ZERO,
        gamma_bar: 0.2,
        at_time: 0.0,
    };
    let s = steady_state_covariances(&fp).unwrap();
    assert!((s.n - 0.8).abs() < 1e-15 && s.m.norm() < 1e-15);
}

#[test]
fn closed_form_matches_linear_solve() {
    let fp = FloquetParams {
        omega_f: c(1.2, 0.0),
        lambda_f: c(0.2, 0.1),
        lambda_fp: c(0.2, -0.1),
        n_f: c(0.4, 0.0),
        m_f: c(0.05, 0.1),
        m_fp: c(0.05, -0.1),
        gamma_bar: 0.3,
        at_time: 0.0,
    };
    let raw = steady_state_covariances_raw(&fp).unwrap();
    let g = Generator {
        omega: fp.omega_f,
        lambda: fp.lambda_f,
        lambda_p: fp.lambda_fp,
        gamma: fp.gamma_bar,
        n: fp.n_f,
        m: fp.m_f,
        m_p: fp.m_fp,
    };
    let direct = stationary_moments(&g).unwrap();
    for k in 0..3 {
        assert!(close(raw[k], direct[k], 1e-12), "{k}: {} vs {}", raw[k], direct[k]);
    }
}

#[test]
fn carnot_frame_residuals_and_periodicity() {
    // The unitary periodicity defect grows like T * tol; 1e-13 keeps it below 1e-10 at T = 300.
    let f = FloquetFrames::solve(&carnot(300.0), 1e-13).unwrap();
    let u = f.unitary().diagnostics();
    assert!(u.worst() < 1e-8, "{u:?}");
    let d = f.dissipative.diagnostics();
    assert!(d.max_c2 < 1e-8 && d.max_c3 < 1e-8 && d.max_c4 < 1e-8 && d.max_c1_defect < 1e-8, "{d:?}");
    assert!(d.periodicity_defect < 1e-10 && u.periodicity_defect < 1e-10, "{d:?} {u:?}");
    for t in [0.0, 37.0, 150.0, 299.0] {
        let a = f.floquet_parameters(t).unwrap();
        let b = f.floquet_parameters(t + 300.0).unwrap();
        for (x, y) in [(a.omega_f, b.omega_f), (a.lambda_f, b.lambda_f), (a.n_f, b.n_f), (a.m_f, b.m_f)] {
            assert!(close(x, y, 1e-10), "t = {t}: {x} vs {y}");
        }
    }
}

#[test]
fn unitarily_stable_symmetries() {
    let f = FloquetFrames::solve(&carnot(300.0), 1e-12).unwrap();
    assert_eq!(f.sigma(), Sigma::US);
    for s in f.dissipative.samples() {
        let u = &s.unitary;
        assert!(u.j.im.abs() < 1e-7, "J = {}", u.j);
        assert!(s.g2.im.abs() < 1e-7);
        assert!(close(u.r1p, u.r1.conj(), 1e-7));
        if let (Some(g3), Some(g4)) = (s.g3_big, s.g4_big) {
            assert!(close(g3, g4.conj(), 1e-7));
        }
    }
}

#[test]
fn unitarily_unstable_symmetries() {
    let f = FloquetFrames::solve(&parametric_at(0.5, 1.5), 1e-12).unwrap();
    assert_eq!(f.sigma(), Sigma::UU);
    for s in f.dissipative.samples() {
        let u = &s.unitary;
        assert!(u.j.re.abs() < 1e-7, "J = {}", u.j);
        assert!(s.g2.re.abs() < 1e-7, "G2 = {}", s.g2);
        assert!((4.0 * u.r2.norm_sqr() - 1.0).abs() < 1e-7);
        if let (Some(g3), Some(g4)) = (s.g3_big, s.g4_big) {
            assert!((u.r1 * g3).re.abs() < 1e-7 && (u.r1.conj() * g4).re.abs() < 1e-7);
        }
    }
}

#[test]
fn substitution_identity_and_physicality() {
    for (p, tol) in [(carnot(300.0), 1e-12), (parametric_at(0.5, 1.5), 1e-12)] {
        let f = FloquetFrames::solve(&p, tol).unwrap();
        for lc in f.limit_cycle_samples() {
            let fp = f.floquet_parameters(lc.t).unwrap();
            let ss = steady_state_covariances(&fp).unwrap();
            assert!(ss.distance(&lc.moments) < 1e-8 * (1.0 + lc.moments.n), "t = {}", lc.t);
            assert!(lc.raw[0].im.abs() < 1e-8 * (1.0 + lc.moments.n));
            assert!((lc.raw[2] - lc.raw[1].conj()).norm() < 1e-8 * (1.0 + lc.raw[1].norm()));
            assert!(lc.moments.heisenberg_gap() >= -1e-9);
        }
    }
}

#[test]
fn stroboscopic_fixed_point_agrees_with_closed_form() {
    let p = carnot(300.0);
    let f = FloquetFrames::solve(&p, 1e-12).unwrap();
    let fp = stroboscopic_fixed_point(&p, 0.0, 1e-12).unwrap();
    assert!(fp.distance(&f.limit_cycle_moments(0.0).unwrap().moments) < 1e-7);
}

#[test]
fn parametric_resonance_without_damping_is_unitarily_unstable() {
    let u = UnitaryFrame::solve(&parametric(0.5, 0.0), 1e-10).unwrap();
    assert_eq!(u.sigma, Sigma::UU);
    assert!(u.lambda_bar.im.abs() > 1e-3);
    assert!(matches!(u.stability(), Err(Error::NoDissipation)));
}

#[test]
fn stability_verdict_matches_propagation() {
    for eps in [0.3, 0.5] {
        for factor in [0.9, 1.1] {
            let p = parametric_at(eps, factor);
            let f = FloquetFrames::solve(&p, 1e-12).unwrap();
            assert_eq!(f.stability.stable, factor > 1.0, "eps {eps}, factor {factor}");
            assert!((f.stability.ratio - 1.0 / factor).abs() < 1e-6);
            let samples = stroboscopic_samples(&SecondMoments::vacuum(), &p, 0.0, 50, 1e-12).unwrap();
            let r = detect_convergence(&samples, p.period);
            if factor > 1.0 {
                assert!(!r.diverging);
                let lc = f.limit_cycle_moments(0.0).unwrap().moments;
                let d = samples[50].distance(&lc);
                let d0 = samples[0].distance(&lc);
                assert!(d < 0.5 * d0, "eps {eps}: {d} vs {d0}");
            } else {
                assert!(r.diverging, "eps {eps}: {r:?}");
                assert!(!f.limit_cycle_moments(0.0).unwrap().stable);
            }
        }
    }
}

#[test]
fn us_protocol_is_stable_with_zero_ratio() {
    let f = FloquetFrames::solve(&carnot(300.0), 1e-11).unwrap();
    assert!(f.stability.stable);
    assert!(f.stability.ratio.abs() < 1e-9);
}

#[test]
fn no_dissipation_is_reported() {
    let p = constant_protocol(5.0, 1.0, ZERO, 0.0, 0.0, ZERO).unwrap();
    let u = UnitaryFrame::solve(&p, 1e-10).unwrap();
    assert!(matches!(u.stability(), Err(Error::NoDissipation)));
    assert!(close(u.lambda_bar, c(1.0, 0.0), 1e-12));
}

#[test]
fn spectrum_layout() {
    let s = rotating_frame_spectrum(c(1.0, 0.0), 0.2, 2);
    assert_eq!(s.len(), 6);
    assert_eq!(s[0].eigenvalue, ZERO);
    assert!(close(s[1].eigenvalue, c(-0.1, -1.0), 1e-15));
    assert!(close(s[2].eigenvalue, c(-0.1, 1.0), 1e-15));
    let s = rotating_frame_spectrum(c(1.3, 0.0), 0.4, 4);
    for line in &s {
        let re = line.eigenvalue.re / -0.2;
        assert!((re - re.round()).abs() < 1e-12 && (0.0..=4.0).contains(&re.round()));
    }
}

#[test]
fn spectrum_matches_fock_diagonalization() {
    let (lb, gb) = (1.3, 0.4);
    let o = FockOracle::new(15).unwrap();
    let g = Generator { omega: c(lb, 0.0), lambda: ZERO, lambda_p: ZERO, gamma: gb, n: ZERO, m: ZERO, m_p: ZERO };
    let eig = FockOracle::spectrum(&o.generator_matrix(&g).unwrap()).unwrap();
    for line in rotating_frame_spectrum(c(lb, 0.0), gb, 4) {
        let d = eig.iter().map(|z| (z - line.eigenvalue).norm()).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-9, "{}: {d}", line.eigenvalue);
    }
}

#[test]
fn dissipation_only_constant_bath() {
    let p = pure_dissipation(5.0, Profile::constant(0.7), ComplexProfile::constant(c(0.1, 0.05)));
    let cyc = dissipative_only_limit_cycle(&p, 1e-11).unwrap();
    for t in [0.0, 1.3, 4.9] {
        let (n, m) = cyc.at(t).unwrap();
        assert!(close(n, c(0.7, 0.0), 1e-10) && close(m, c(0.1, 0.05), 1e-10));
    }
}

#[test]
fn dissipation_only_driven_closed_form_and_pipeline() {
    let period = 10.0;
    let (gamma, nu) = (0.2, 2.0 * PI / period);
    let p = pure_dissipation(
        period,
        Profile::Cosine { mean: 0.5, amplitude: 0.25, shift: -PI / 2.0 },
        ComplexProfile::real(Profile::Cosine { mean: 0.1, amplitude: 0.05, shift: 0.3 }),
    );
    let cyc = dissipative_only_limit_cycle(&p, 1e-11).unwrap();
    let frames = FloquetFrames::solve(&p, 1e-11).unwrap();
    let relax = |mean: f64, amp: f64, shift: f64, t: f64| {
        let th = nu * t + shift;
        mean + amp * gamma * (gamma * th.cos() + nu * th.sin()) / (gamma * gamma + nu * nu)
    };
    for i in 0..20 {
        let t = period * i as f64 / 20.0;
        let (n, m) = cyc.at(t).unwrap();
        assert!((n.re - relax(0.5, 0.25, -PI / 2.0, t)).abs() < 1e-9, "t = {t}");
        assert!((m.re - relax(0.1, 0.05, 0.3, t)).abs() < 1e-9);
        let fp = frames.floquet_parameters(t).unwrap();
        assert!(fp.omega_f.norm() < 1e-12);
        assert!(close(fp.n_f, n, 1e-9) && close(fp.m_f, m, 1e-9), "t = {t}: {} vs {n}", fp.n_f);
        let lc = frames.limit_cycle_moments(t).unwrap();
        assert!(lc.moments.distance(&cyc.moments(t).unwrap()) < 1e-9);
    }
}

#[test]
fn dissipation_only_rejects_hamiltonian() {
    let p = constant_protocol(5.0, 1.0, ZERO, 0.1, 0.5, ZERO).unwrap();
    assert!(matches!(dissipative_only_limit_cycle(&p, 1e-10), Err(Error::InvalidRequest(_))));
}

#[test]
fn pinney_static_solution() {
    let u = UnitaryFrame::solve(&constant_mechanical(1.0, 1.0), 1e-11).unwrap();
    let r = pinney_crosscheck(&u).unwrap();
    let (lo, hi) = r.xi_squared_range.unwrap();
    assert!((lo - 1.0).abs() < 1e-10 && (hi - 1.0).abs() < 1e-10);
    assert!(r.max_pinney_residual.unwrap() < 1e-10);

    let (big, eta) = (0.8, 1.3);
    let u = UnitaryFrame::solve(&constant_mechanical(big, eta), 1e-11).unwrap();
    let r = pinney_crosscheck(&u).unwrap();
    let (lo, hi) = r.xi_squared_range.unwrap();
    assert!((lo - eta / big).abs() < 1e-9 && (hi - eta / big).abs() < 1e-9, "{lo} {hi}");
    let j = 0.5 * (eta / big + big / eta);
    assert!(u.samples().iter().all(|s| close(s.j, c(j, 0.0), 1e-9)));
    assert!(r.max_j_defect.unwrap() < 1e-9 && r.max_pinney_residual.unwrap() < 1e-9);
}

#[test]
fn pinney_carnot_and_parametric() {
    let r = pinney_crosscheck(FloquetFrames::solve(&carnot(300.0), 1e-12).unwrap().unitary()).unwrap();
    assert_eq!(r.inversion_failures, 0);
    assert!(r.max_pinney_residual.unwrap() < 1e-6 && r.max_j_defect.unwrap() < 1e-8, "{r:?}");
    let r = pinney_crosscheck(&UnitaryFrame::solve(&parametric(0.5, 0.0), 1e-11).unwrap()).unwrap();
    assert_eq!(r.sigma, Sigma::UU);
    assert!(r.uu_phase_defect.unwrap() < 1e-8);
}

#[test]
fn pinney_needs_constant_mass() {
    let p = constant_protocol(5.0, 1.0, c(0.3, 0.1), 0.1, 0.5, ZERO).unwrap();
    let u = UnitaryFrame::solve(&p, 1e-10).unwrap();
    assert!(pinney_crosscheck(&u).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn constant_protocols_reduce_to_static_steady_state(
        w in 0.5f64..2.0, frac in 0.0f64..0.8, phase in 0.0f64..std::f64::consts::TAU,
        gamma in 0.05f64..0.5, n in 0.0f64..1.0, mfrac in 0.0f64..0.9, mphase in 0.0f64..std::f64::consts::TAU, period in 1.0f64..10.0,
    ) {
        let lambda = C64::from_polar(frac * w, phase);
        let m = C64::from_polar(mfrac * (n * (n + 1.0)).sqrt(), mphase);
        let p = constant_protocol(period, w, lambda, gamma, n, m).unwrap();
        let f = FloquetFrames::solve(&p, 1e-11).unwrap();
        prop_assert!((f.lambda_bar() - c((w * w - lambda.norm_sqr()).sqrt(), 0.0)).norm() < 1e-8);
        let st = stationary_moments(&Generator::physical(&p.params(0.0))).unwrap();
        let lc = f.limit_cycle_moments(0.37 * period).unwrap();
        prop_assert!(lc.moments.distance(&SecondMoments::from_state(&st)) < 1e-8 * (1.0 + st[0].norm()));
        prop_assert!(lc.moments.heisenberg_gap() >= -1e-9);
    }

    #[test]
    fn carnot_floquet_parameters_are_periodic(period in 100.0f64..600.0, s in 0.0f64..1.0) {
        let f = FloquetFrames::solve(&carnot(period), 1e-12).unwrap();
        let t = s * period;
        let a = f.floquet_parameters(t).unwrap();
        let b = f.floquet_parameters(t + period).unwrap();
        prop_assert!((a.n_f - b.n_f).norm() < 1e-10 && (a.m_f - b.m_f).norm() < 1e-10);
        prop_assert!((a.lambda_f - b.lambda_f).norm() < 1e-10 && (a.omega_f - b.omega_f).norm() < 1e-10);
    }
}
