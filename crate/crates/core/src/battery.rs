//! Built-in validation battery: eight checks of the solver against closed
//! forms, an independent Fock-space oracle, direct propagation and the
//! reference Carnot engine. Each check returns measured numbers next to its
//! pass/fail verdict so that a failing check says by how much.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{
    detect_convergence, moment_field, period_map, stroboscopic_samples, FockOracle, Generator, SecondMoments,
    DEFAULT_DYNAMICS_CUTOFF, DEFAULT_SPECTRUM_CUTOFF,
};
use crate::error::Result;
use crate::floquet::{
    dissipative_only_limit_cycle, pinney_crosscheck, rotating_frame_spectrum, steady_state_covariances_raw,
    FloquetFrames, FloquetParams, UnitaryFrame,
};
use crate::ode::C64;
use crate::protocol::{
    build_carnot_protocol, build_parametric_protocol, constant_protocol, mechanical_to_bosonic, Bath, ComplexProfile,
    CycleProtocol, Drive, ParametricSpec, Profile, Stroke,
};
use crate::thermo::{floquet_ledger, quasistatic_deviation, quasistatic_reference};

/// Solver tolerance used for the long Carnot periods; identity defects at
/// the default tolerance grow with the period.
pub const LONG_PERIOD_TOL: f64 = 1e-12;
/// Default ODE tolerance elsewhere.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Bound on identities that hold exactly but are met only to solver accuracy.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Reference Carnot engine: `Delta = 1`, `delta = 0.85`, `T_H = 1`, `gamma0 = 0.03`.
pub const CARNOT: (f64, f64, f64, f64) = (1.0, 0.85, 1.0, 0.03);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Group {
    ClosedForm,
    OracleEquivalence,
    FigureReproduction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub group: Group,
    pub pass: bool,
    pub summary: String,
    pub metrics: BTreeMap<String, f64>,
    pub seconds: f64,
}

impl CriterionReport {
    fn new(id: u8, name: &'static str, group: Group) -> Self {
        CriterionReport {
            id,
            name,
            group,
            pass: true,
            summary: String::new(),
            metrics: BTreeMap::new(),
            seconds: 0.0,
        }
    }

    /// Records `value` and fails the criterion unless `ok`.
    fn check(&mut self, key: &str, value: f64, ok: bool) {
        self.metrics.insert(key.to_string(), value);
        if !ok {
            self.pass = false;
            if !self.summary.is_empty() {
                self.summary.push_str("; ");
            }
            self.summary.push_str(&format!("{key} = {value:.3e} out of bounds"));
        }
    }

    fn error(&mut self, what: &str, e: impl std::fmt::Display) {
        self.pass = false;
        if !self.summary.is_empty() {
            self.summary.push_str("; ");
        }
        self.summary.push_str(&format!("{what}: {e}"));
    }

    /// One line: `PASS [k] name: summary`.
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let detail = if self.summary.is_empty() { "all checks within tolerance" } else { &self.summary };
        format!("{verdict} [{}] {}: {detail} ({:.2} s)", self.id, self.name, self.seconds)
    }
}

/// Worst physicality defects over a set of limit cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalityTally {
    pub cycles: usize,
    pub phases: usize,
    /// Largest `|Im n| / (1 + |n|)`.
    pub max_imag_n: f64,
    /// Largest `|mbar - conj(m)| / (1 + |m|)`.
    pub max_conjugation: f64,
    /// Smallest `n (n + 1) - |m|^2`.
    pub min_heisenberg_gap: f64,
}

impl Default for PhysicalityTally {
    fn default() -> Self {
        PhysicalityTally {
            cycles: 0,
            phases: 0,
            max_imag_n: 0.0,
            max_conjugation: 0.0,
            min_heisenberg_gap: f64::INFINITY,
        }
    }
}

impl PhysicalityTally {
    pub fn record(&mut self, frames: &FloquetFrames) {
        self.cycles += 1;
        for lc in frames.limit_cycle_samples() {
            let [n, m, mbar] = lc.raw;
            self.phases += 1;
            self.max_imag_n = self.max_imag_n.max(n.im.abs() / (1.0 + n.norm()));
            self.max_conjugation = self.max_conjugation.max((mbar - m.conj()).norm() / (1.0 + m.norm()));
            self.min_heisenberg_gap = self.min_heisenberg_gap.min(n.re * (n.re + 1.0) - m.norm_sqr());
        }
    }

    pub fn merge(&mut self, other: &PhysicalityTally) {
        self.cycles += other.cycles;
        self.phases += other.phases;
        self.max_imag_n = self.max_imag_n.max(other.max_imag_n);
        self.max_conjugation = self.max_conjugation.max(other.max_conjugation);
        self.min_heisenberg_gap = self.min_heisenberg_gap.min(other.min_heisenberg_gap);
    }

    /// Reality and conjugation at the residual tolerance; the Heisenberg bound with slack `1e-9`.
    pub fn is_physical(&self) -> bool {
        self.max_imag_n <= RESIDUAL_TOL && self.max_conjugation <= RESIDUAL_TOL && self.min_heisenberg_gap >= -1e-9
    }
}

fn timed<F: FnOnce(&mut CriterionReport)>(mut r: CriterionReport, f: F) -> CriterionReport {
    let t0 = Instant::now();
    f(&mut r);
    r.seconds = t0.elapsed().as_secs_f64();
    r
}

fn record(r: &mut CriterionReport, key: &str, value: f64, bound: f64) {
    r.check(key, value, value <= bound);
}

/// Constant protocol `omega = 1, lambda = 0.3, gamma = 0.1, N = 0.5, M = 0.1i`.
pub fn constant_reference() -> Result<CycleProtocol> {
    constant_protocol(2.0 * PI, 1.0, C64::new(0.3, 0.0), 0.1, 0.5, C64::new(0.0, 0.1))
}

/// Purely dissipative protocol with sinusoidal `N_t` and `M_t`, period 10.
pub fn pure_dissipation_reference() -> Result<CycleProtocol> {
    let cosine = |mean, amplitude, shift| Profile::Cosine { mean, amplitude, shift };
    CycleProtocol::new(
        "pure-dissipation",
        vec![Stroke {
            label: "relaxation".into(),
            duration: 10.0,
            drive: Drive::Bosonic {
                omega: Profile::constant(0.0),
                lambda: ComplexProfile::constant(C64::new(0.0, 0.0)),
            },
            gamma: 0.2,
            bath: Bath::Explicit {
                n: cosine(0.6, 0.4, 0.0),
                m: ComplexProfile {
                    re: cosine(0.1, 0.05, 0.3),
                    im: cosine(-0.05, 0.02, 1.0),
                },
            },
        }],
    )
}

/// Periodic solution of `x' = gamma (mean + amplitude cos(nu t + shift) - x)`.
pub fn driven_relaxation(gamma: f64, nu: f64, mean: f64, amplitude: f64, shift: f64, t: f64) -> f64 {
    let th = nu * t + shift;
    mean + amplitude * gamma * (gamma * th.cos() + nu * th.sin()) / (gamma * gamma + nu * nu)
}

pub fn criterion_1(tally: &mut PhysicalityTally) -> CriterionReport {
    timed(CriterionReport::new(1, "constant-protocol equivalence", Group::ClosedForm), |r| {
        let run = || -> Result<(f64, f64, f64, FloquetFrames)> {
            let p = constant_reference()?;
            let frames = FloquetFrames::solve(&p, DEFAULT_TOL)?;
            let q = p.params(0.0);
            // Closed form with the bare parameters as Floquet parameters.
            let bare = FloquetParams {
                omega_f: C64::new(q.omega, 0.0),
                lambda_f: q.lambda,
                lambda_fp: q.lambda.conj(),
                n_f: C64::new(q.n, 0.0),
                m_f: q.m,
                m_fp: q.m.conj(),
                gamma_bar: q.gamma,
                at_time: 0.0,
            };
            let closed = steady_state_covariances_raw(&bare)?;
            let (mut fc, mut fa, mut ca) = (0.0f64, 0.0f64, 0.0f64);
            for k in 0..5 {
                let t = p.period * k as f64 / 5.0;
                let lc = frames.limit_cycle_moments(t)?.raw;
                let affine = period_map(&p, t, DEFAULT_TOL)?.fixed_point()?.to_state();
                for i in 0..3 {
                    fc = fc.max((lc[i] - closed[i]).norm());
                    fa = fa.max((lc[i] - affine[i]).norm());
                    ca = ca.max((closed[i] - affine[i]).norm());
                }
            }
            Ok((fc, fa, ca, frames))
        };
        match run() {
            Ok((fc, fa, ca, frames)) => {
                record(r, "floquet_vs_closed_form", fc, 1e-8);
                record(r, "floquet_vs_affine", fa, 1e-8);
                record(r, "closed_form_vs_affine", ca, 1e-8);
                tally.record(&frames);
            }
            Err(e) => r.error("solve", e),
        }
    })
    .with_runtime_bound(1.0)
}

impl CriterionReport {
    fn with_runtime_bound(mut self, seconds: f64) -> Self {
        let s = self.seconds;
        self.check("runtime_seconds", s, s < seconds);
        self
    }
}

pub fn criterion_2(tally: &mut PhysicalityTally) -> CriterionReport {
    timed(CriterionReport::new(2, "pure-dissipation reduction", Group::ClosedForm), |r| {
        let run = || -> Result<(f64, f64, FloquetFrames)> {
            let p = pure_dissipation_reference()?;
            let frames = FloquetFrames::solve(&p, DEFAULT_TOL)?;
            let direct = dissipative_only_limit_cycle(&p, DEFAULT_TOL)?;
            let (gamma, nu) = (0.2, 2.0 * PI / p.period);
            let (mut pipeline, mut analytic) = (0.0f64, 0.0f64);
            for k in 0..16 {
                let t = p.period * k as f64 / 16.0;
                let lc = frames.limit_cycle_moments(t)?.raw;
                let (nf, mf) = direct.at(t)?;
                pipeline = pipeline.max((lc[0] - nf).norm()).max((lc[1] - mf).norm());
                let n_exact = driven_relaxation(gamma, nu, 0.6, 0.4, 0.0, t);
                let m_exact = C64::new(
                    driven_relaxation(gamma, nu, 0.1, 0.05, 0.3, t),
                    driven_relaxation(gamma, nu, -0.05, 0.02, 1.0, t),
                );
                analytic = analytic.max((lc[0] - n_exact).norm()).max((lc[1] - m_exact).norm());
            }
            Ok((pipeline, analytic, frames))
        };
        match run() {
            Ok((pipeline, analytic, frames)) => {
                record(r, "pipeline_vs_periodic_solution", pipeline, 1e-9);
                record(r, "pipeline_vs_closed_form", analytic, 1e-8);
                tally.record(&frames);
            }
            Err(e) => r.error("solve", e),
        }
    })
}

/// One Carnot period: ledger numbers, stability and physicality.
#[derive(Debug, Clone, Serialize)]
pub struct CarnotPoint {
    pub period: f64,
    pub efficiency: f64,
    pub power: f64,
    pub ratio: f64,
    pub stable: bool,
    pub quasistatic_deviation: f64,
    #[serde(skip)]
    pub tally: PhysicalityTally,
}

pub fn carnot_point(period: f64, tol: f64) -> Result<CarnotPoint> {
    let (big_delta, delta, t_hot, gamma0) = CARNOT;
    let mech = build_carnot_protocol(big_delta, delta, t_hot, gamma0, period)?;
    let p = mechanical_to_bosonic(&mech)?;
    let frames = FloquetFrames::solve(&p, tol)?;
    let ledger = floquet_ledger(&frames);
    let geometry = mech.carnot.expect("builtin Carnot carries its geometry");
    let reference = quasistatic_reference(big_delta, delta, t_hot, geometry.t_cold)?;
    let mut tally = PhysicalityTally::default();
    if frames.stability.stable {
        tally.record(&frames);
    }
    Ok(CarnotPoint {
        period,
        efficiency: ledger.efficiency,
        power: ledger.power,
        ratio: frames.stability.ratio,
        stable: frames.stability.stable,
        quasistatic_deviation: quasistatic_deviation(&frames, &reference),
        tally,
    })
}

/// The 20-point Carnot sweep `T = 100, 200, ..., 2000`.
pub fn carnot_sweep_periods() -> Vec<f64> {
    (1..=20).map(|k| 100.0 * k as f64).collect()
}

pub fn criterion_3(tally: &mut PhysicalityTally) -> CriterionReport {
    timed(CriterionReport::new(3, "Carnot engine figure", Group::FigureReproduction), |r| {
        let periods = carnot_sweep_periods();
        let points: Result<Vec<CarnotPoint>> = periods.par_iter().map(|&t| carnot_point(t, LONG_PERIOD_TOL)).collect();
        let points = match points {
            Ok(p) => p,
            Err(e) => return r.error("sweep", e),
        };
        for p in &points {
            tally.merge(&p.tally);
        }
        // T_C / T_H = Delta / (Delta + delta) for the reversible construction.
        let (big_delta, delta, _, _) = CARNOT;
        let eta_c = 1.0 - big_delta / (big_delta + delta);
        let at = |t: f64| points.iter().find(|p| p.period == t).expect("period in sweep");
        // (a) the T = 1000 loop against the quasi-static loop.
        let dev = at(1000.0).quasistatic_deviation;
        r.check("a_deviation_T1000", dev, dev <= 0.05);
        // (c) interior power maximum inside [400, 1000].
        let best = points
            .iter()
            .max_by(|a, b| a.power.total_cmp(&b.power))
            .expect("non-empty sweep");
        let interior = best.period > periods[0] && best.period < periods[periods.len() - 1];
        r.check("c_max_power_period", best.period, interior && (400.0..=1000.0).contains(&best.period));
        // (b) eta increasing beyond the maximum-power point, eta(2000) in [0.9 eta_C, eta_C).
        let tail: Vec<&CarnotPoint> = points.iter().filter(|p| p.period >= best.period).collect();
        let increasing = tail.windows(2).all(|w| w[1].efficiency > w[0].efficiency);
        r.check("b_eta_increasing_beyond_max_power", if increasing { 1.0 } else { 0.0 }, increasing);
        let eta = at(2000.0).efficiency;
        r.check("b_eta_T2000_over_eta_C", eta / eta_c, eta >= 0.9 * eta_c && eta < eta_c);
        r.metrics.insert("eta_C".into(), eta_c);
        r.metrics.insert("eta_T2000".into(), eta);
    })
    .with_runtime_bound(300.0)
}

/// Parametric battery point at `gamma = factor * 2 |Im LambdaBar|`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilityPoint {
    pub epsilon: f64,
    pub factor: f64,
    pub gamma: f64,
    pub predicted_stable: bool,
    pub empirically_bounded: bool,
    pub fitted_ratio: f64,
    pub period_map_radius: f64,
}

pub fn stability_point(epsilon: f64, factor: f64) -> Result<(StabilityPoint, Option<FloquetFrames>)> {
    let probe = mechanical_to_bosonic(&build_parametric_protocol(&ParametricSpec {
        epsilon,
        ..Default::default()
    })?)?;
    let threshold = 2.0 * UnitaryFrame::solve(&probe, DEFAULT_TOL)?.lambda_bar.im.abs();
    let gamma = factor * threshold;
    let p = mechanical_to_bosonic(&build_parametric_protocol(&ParametricSpec {
        epsilon,
        gamma,
        ..Default::default()
    })?)?;
    // Near threshold the cycle amplitude scales like 1/(gammaBar - 2|Im LambdaBar|).
    let frames = FloquetFrames::solve(&p, LONG_PERIOD_TOL)?;
    let strobe = stroboscopic_samples(&SecondMoments::vacuum(), &p, 0.0, 50, DEFAULT_TOL)?;
    let conv = detect_convergence(&strobe, p.period);
    let radius = period_map(&p, 0.0, DEFAULT_TOL)?.spectral_radius()?;
    let point = StabilityPoint {
        epsilon,
        factor,
        gamma,
        predicted_stable: frames.stability.stable,
        empirically_bounded: !conv.diverging,
        fitted_ratio: conv.ratio.unwrap_or(f64::NAN),
        period_map_radius: radius,
    };
    Ok((point, frames.stability.stable.then_some(frames)))
}

pub fn criterion_4(tally: &mut PhysicalityTally) -> CriterionReport {
    timed(CriterionReport::new(4, "stability criterion", Group::OracleEquivalence), |r| {
        let mut mismatches = 0usize;
        for epsilon in [0.1, 0.3, 0.5] {
            for factor in [0.9, 1.1] {
                match stability_point(epsilon, factor) {
                    Ok((pt, frames)) => {
                        let key = format!("eps{epsilon}_x{factor}_fitted_ratio");
                        r.metrics.insert(key, pt.fitted_ratio);
                        if pt.predicted_stable != pt.empirically_bounded {
                            mismatches += 1;
                        }
                        if let Some(f) = frames {
                            tally.record(&f);
                        }
                    }
                    Err(e) => r.error(&format!("epsilon {epsilon}, factor {factor}"), e),
                }
            }
        }
        r.check("verdict_mismatches", mismatches as f64, mismatches == 0);
    })
}

pub fn criterion_5() -> CriterionReport {
    timed(CriterionReport::new(5, "rotating-frame spectrum", Group::ClosedForm), |r| {
        let run = || -> Result<f64> {
            let oracle = FockOracle::new(DEFAULT_SPECTRUM_CUTOFF)?;
            let parametric = mechanical_to_bosonic(&build_parametric_protocol(&ParametricSpec::default())?)?;
            let cases = [
                (C64::new(0.91f64.sqrt(), 0.0), 0.1),
                (UnitaryFrame::solve(&parametric, DEFAULT_TOL)?.lambda_bar, 0.1),
            ];
            let mut worst = 0.0f64;
            for (lambda_bar, gamma_bar) in cases {
                let g = Generator {
                    omega: lambda_bar,
                    lambda: C64::new(0.0, 0.0),
                    lambda_p: C64::new(0.0, 0.0),
                    gamma: gamma_bar,
                    n: C64::new(0.0, 0.0),
                    m: C64::new(0.0, 0.0),
                    m_p: C64::new(0.0, 0.0),
                };
                let eig = FockOracle::spectrum(&oracle.generator_matrix(&g)?)?;
                for line in rotating_frame_spectrum(lambda_bar, gamma_bar, 6) {
                    let d = eig.iter().map(|z| (z - line.eigenvalue).norm()).fold(f64::INFINITY, f64::min);
                    worst = worst.max(d);
                }
            }
            Ok(worst)
        };
        match run() {
            Ok(worst) => record(r, "max_eigenvalue_distance", worst, 1e-8),
            Err(e) => r.error("spectrum", e),
        }
    })
}

pub fn criterion_6(tally: &mut PhysicalityTally) -> CriterionReport {
    timed(CriterionReport::new(6, "frame residual suite", Group::ClosedForm), |r| {
        let (big_delta, delta, t_hot, gamma0) = CARNOT;
        let results: Vec<Result<(f64, [f64; 3], FloquetFrames)>> = [300.0, 700.0, 1000.0]
            .par_iter()
            .map(|&period| {
                let p = mechanical_to_bosonic(&build_carnot_protocol(big_delta, delta, t_hot, gamma0, period)?)?;
                let frames = FloquetFrames::solve(&p, LONG_PERIOD_TOL)?;
                let u = frames.unitary().diagnostics();
                let d = frames.dissipative.diagnostics();
                let pin = pinney_crosscheck(frames.unitary())?;
                let residual = [u.max_b1, u.max_b2, u.max_b0_defect, u.periodicity_defect, d.max_c1_defect, d.max_c2, d.max_c3, d.max_c4, d.periodicity_defect, d.max_nu_residual]
                    .into_iter()
                    .fold(0.0, f64::max);
                let identity = [u.j_phase_defect, u.r1p_defect, u.r1_z_defect, u.uu_phase_defect.unwrap_or(0.0), d.n_tilde_phase_defect, d.symmetry_defect, d.big_g_form_defect, d.nu_form_defect]
                    .into_iter()
                    .fold(0.0, f64::max);
                let pinney = if pin.inversion_failures > 0 {
                    f64::INFINITY
                } else {
                    [pin.max_pinney_residual, pin.max_derivative_defect, pin.max_j_defect, pin.max_r1_defect]
                        .into_iter()
                        .map(|x| x.unwrap_or(0.0))
                        .fold(0.0, f64::max)
                };
                Ok((period, [residual, identity, pinney], frames))
            })
            .collect();
        for res in results {
            match res {
                Ok((period, [residual, identity, pinney], frames)) => {
                    record(r, &format!("T{period}_frame_residual"), residual, 1e-8);
                    record(r, &format!("T{period}_symmetry_identities"), identity, 1e-7);
                    record(r, &format!("T{period}_pinney"), pinney, 1e-6);
                    if frames.stability.stable {
                        tally.record(&frames);
                    }
                }
                Err(e) => r.error("frames", e),
            }
        }
    })
}

/// Random squeezed thermal states and random protocol phases, seeded, on a
/// Fock space truncated at `cutoff`.
pub fn criterion_7(cutoff: usize) -> CriterionReport {
    timed(CriterionReport::new(7, "moment-equation oracle", Group::OracleEquivalence), |r| {
        let run = || -> Result<f64> {
            let oracle = FockOracle::new(cutoff)?;
            let (big_delta, delta, t_hot, gamma0) = CARNOT;
            let protocols = [
                mechanical_to_bosonic(&build_carnot_protocol(big_delta, delta, t_hot, gamma0, 700.0)?)?,
                mechanical_to_bosonic(&build_parametric_protocol(&ParametricSpec::default())?)?,
                constant_reference()?,
            ];
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut worst = 0.0f64;
            for k in 0..100 {
                let p = &protocols[k % protocols.len()];
                let t = rng.gen_range(0.0..p.period);
                let rho = oracle.squeezed_thermal_state(rng.gen_range(0.0..1.5), rng.gen_range(0.0..0.6), rng.gen_range(0.0..2.0 * PI));
                let g = Generator::physical(&p.params(t));
                let x = oracle.expectations(&rho);
                let fock = oracle.moment_derivatives(&g, &rho);
                let field = moment_field(&g, &x);
                let num: f64 = (0..3).map(|i| (fock[i] - field[i]).norm_sqr()).sum::<f64>().sqrt();
                let den: f64 = (0..3).map(|i| field[i].norm_sqr()).sum::<f64>().sqrt();
                worst = worst.max(num / den.max(1e-300));
            }
            Ok(worst)
        };
        match run() {
            Ok(worst) => record(r, "max_relative_defect", worst, 1e-6),
            Err(e) => r.error("oracle", e),
        }
    })
}

pub fn criterion_8(tally: &PhysicalityTally) -> CriterionReport {
    timed(CriterionReport::new(8, "physicality of limit cycles", Group::OracleEquivalence), |r| {
        r.metrics.insert("cycles".into(), tally.cycles as f64);
        r.metrics.insert("phases".into(), tally.phases as f64);
        record(r, "max_imag_n", tally.max_imag_n, RESIDUAL_TOL);
        record(r, "max_conjugation_defect", tally.max_conjugation, RESIDUAL_TOL);
        r.check("min_heisenberg_gap", tally.min_heisenberg_gap, tally.min_heisenberg_gap >= -1e-9);
        r.check("cycles", tally.cycles as f64, tally.cycles > 0);
    })
}

/// Runs every check in order with the default oracle cutoff.
pub fn run_battery() -> Vec<CriterionReport> {
    run_battery_with(DEFAULT_DYNAMICS_CUTOFF)
}

/// Runs every check in order; the physicality check covers the limit cycles
/// produced by the others. `nmax` is the Fock cutoff of the moment oracle.
pub fn run_battery_with(nmax: usize) -> Vec<CriterionReport> {
    let mut tally = PhysicalityTally::default();
    let mut out = vec![
        criterion_1(&mut tally),
        criterion_2(&mut tally),
        criterion_3(&mut tally),
        criterion_4(&mut tally),
        criterion_5(),
        criterion_6(&mut tally),
        criterion_7(nmax),
    ];
    out.push(criterion_8(&tally));
    out
}
