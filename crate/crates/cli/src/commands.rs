//! `limit-cycle`, `sweep` and `validate`.

use std::collections::BTreeMap;
use std::time::Instant;

use floquet_engine::battery::{run_battery_with, CriterionReport};
use floquet_engine::floquet::{FloquetFrames, Sigma};
use floquet_engine::sweep::{parse_period_list, sweep_periods};
use floquet_engine::thermo::{energy, floquet_ledger, StrokeLedger, ThermoLedger};
use serde::Serialize;

use crate::output::{sibling, write_json, write_text, Csv, RunManifest};
use crate::{check_tol, resolve_threads, Failure, LimitCycleArgs, SweepArgs, ValidateArgs, EXIT_OK, EXIT_UNSTABLE, EXIT_VALIDATION};

pub const LIMIT_CYCLE_HEADER: [&str; 13] = [
    "t", "Omega", "omega", "lambda_re", "lambda_im", "gamma", "N", "M_re", "M_im", "n", "m_re", "m_im", "energy",
];

#[derive(Debug, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

/// Period totals of a ledger, without the energy trace.
#[derive(Debug, Serialize)]
pub struct LedgerSummary {
    pub work: f64,
    pub heat_hot: f64,
    pub heat_cold: f64,
    pub efficiency: f64,
    pub power: f64,
    pub closure_defect: f64,
    pub strokes: Vec<StrokeLedger>,
}

impl From<ThermoLedger> for LedgerSummary {
    fn from(l: ThermoLedger) -> Self {
        LedgerSummary {
            work: l.work,
            heat_hot: l.heat_hot,
            heat_cold: l.heat_cold,
            efficiency: l.efficiency,
            power: l.power,
            closure_defect: l.closure_defect,
            strokes: l.strokes,
        }
    }
}

#[derive(Debug, Serialize)]
struct LimitCycleSummary {
    period: f64,
    lambda_bar: Complex,
    gamma_bar: f64,
    sigma: Sigma,
    /// `2 |Im LambdaBar| / gammaBar`; the cycle is an attractor below one.
    ratio: f64,
    stable: bool,
    /// Smallest `n (n + 1) - |m|^2` over the rows.
    min_heisenberg_gap: f64,
    ledger: LedgerSummary,
}

pub fn limit_cycle(a: &LimitCycleArgs) -> Result<u8, Failure> {
    check_tol(a.tol)?;
    if a.samples == 0 {
        return Err(Failure::config("--samples must be at least 1"));
    }
    let loaded = a.source.load()?;
    let p = &loaded.protocol;
    let frames = FloquetFrames::solve(p, a.tol)?;
    let mut csv = Csv::new(&LIMIT_CYCLE_HEADER);
    let mut min_gap = f64::INFINITY;
    for k in 0..a.samples {
        let t = k as f64 * p.period / a.samples as f64;
        let q = p.params(t);
        let s = frames.limit_cycle_moments(t)?.moments;
        min_gap = min_gap.min(s.heisenberg_gap());
        csv.row(&[
            t,
            p.mech_frequency(t),
            q.omega,
            q.lambda.re,
            q.lambda.im,
            q.gamma,
            q.n,
            q.m.re,
            q.m.im,
            s.n,
            s.m.re,
            s.m.im,
            energy(&s, q.omega, q.lambda),
        ]);
    }
    let st = frames.stability;
    let lb = frames.lambda_bar();
    let summary = LimitCycleSummary {
        period: p.period,
        lambda_bar: Complex { re: lb.re, im: lb.im },
        gamma_bar: st.gamma_bar,
        sigma: st.sigma,
        ratio: st.ratio,
        stable: st.stable,
        min_heisenberg_gap: min_gap,
        ledger: floquet_ledger(&frames).into(),
    };
    let summary_path = sibling(&a.out, "summary");
    let manifest_path = sibling(&a.out, "manifest");
    write_text(&a.out, &csv.into_string())?;
    write_json(&summary_path, &summary)?;
    write_json(
        &manifest_path,
        &RunManifest::new("limit-cycle", a, Some(&loaded), a.tol, &[&a.out, &summary_path]),
    )?;
    if st.stable {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "unstable: 2|Im LambdaBar|/gammaBar = {:.6} >= 1; the formal periodic solution was written to {} but is not an attractor",
            st.ratio,
            a.out.display()
        );
        Ok(EXIT_UNSTABLE)
    }
}

pub fn sweep(a: &SweepArgs) -> Result<u8, Failure> {
    check_tol(a.tol)?;
    let threads = resolve_threads(a.threads)?;
    let periods = parse_period_list(&a.periods)?;
    let loaded = a.source.load()?;
    let points = sweep_periods(|t| Ok(loaded.with_period(t)?.protocol), &periods, a.tol, threads)?;
    for pt in &points {
        if let Some(e) = &pt.error {
            eprintln!("period {}: {e}", pt.period);
        }
    }
    let manifest_path = sibling(&a.out, "manifest");
    write_json(&a.out, &points)?;
    write_json(&manifest_path, &RunManifest::new("sweep", a, Some(&loaded), a.tol, &[&a.out]))?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct GroupTally {
    passed: usize,
    total: usize,
}

#[derive(Debug, Serialize)]
struct ValidationReport {
    pass: bool,
    groups: BTreeMap<String, GroupTally>,
    criteria: Vec<CriterionReport>,
}

fn group_name(r: &CriterionReport) -> String {
    serde_json::to_value(r.group)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

pub fn validate(a: &ValidateArgs) -> Result<u8, Failure> {
    let threads = resolve_threads(a.threads)?;
    if a.nmax < 2 {
        return Err(Failure::config("--nmax must be at least 2"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::runtime(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let criteria = pool.install(|| run_battery_with(a.nmax));
    let mut groups: BTreeMap<String, GroupTally> = BTreeMap::new();
    for r in &criteria {
        println!("{}", r.line());
        let g = groups.entry(group_name(r)).or_insert(GroupTally { passed: 0, total: 0 });
        g.total += 1;
        g.passed += usize::from(r.pass);
    }
    for (name, g) in &groups {
        let verdict = if g.passed == g.total { "PASS" } else { "FAIL" };
        println!("{verdict} group {name}: {}/{} criteria", g.passed, g.total);
    }
    let pass = criteria.iter().all(|r| r.pass);
    println!(
        "{}: {}/{} criteria passed in {:.1} s",
        if pass { "PASS" } else { "FAIL" },
        criteria.iter().filter(|r| r.pass).count(),
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if let Some(out) = &a.out {
        let manifest_path = sibling(out, "manifest");
        write_json(out, &ValidationReport { pass, groups, criteria })?;
        write_json(&manifest_path, &RunManifest::new("validate", a, None, crate::output::DEFAULT_ODE_TOL, &[out]))?;
    }
    Ok(if pass { EXIT_OK } else { EXIT_VALIDATION })
}
