//! `simulate`: direct propagation of the moments with work and heat
//! integrated alongside, sampled on a uniform grid.

use floquet_engine::dynamics::{detect_convergence, moment_field, Generator, SecondMoments};
use floquet_engine::ode::{Integrator, C64};
use floquet_engine::protocol::CycleProtocol;
use floquet_engine::thermo::{energy, heat_rate, hot_strokes, work_rate};
use floquet_engine::Error;
use serde::Serialize;

use crate::output::{sibling, write_json, write_text, Csv, RunManifest};
use crate::{check_tol, Failure, SimulateArgs, EXIT_DIVERGENCE, EXIT_OK};

pub const SIMULATE_HEADER: [&str; 8] = ["t", "n", "m_re", "m_im", "energy", "W", "Q_H", "Q_C"];

/// Occupations beyond this are treated as divergence before they overflow.
const RUNAWAY_OCCUPATION: f64 = 1e100;

/// `n, m_re, m_im` of a physical Gaussian state.
pub fn parse_initial(text: &str) -> Result<SecondMoments, Failure> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::config(format!("--initial expects `n,m_re,m_im`, got `{text}`")))?;
    let [n, re, im] = parts[..] else {
        return Err(Failure::config(format!("--initial expects three numbers, got {}", parts.len())));
    };
    let s = SecondMoments::new(n, C64::new(re, im));
    if !(s.is_finite() && n >= 0.0 && s.heisenberg_gap() >= -1e-12 * (1.0 + n * n)) {
        return Err(Failure::config(format!(
            "--initial `{text}` is not a physical state: need n >= 0 and n (n + 1) >= |m|^2"
        )));
    }
    Ok(s)
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    periods: usize,
    /// Periods actually completed before stopping.
    completed_periods: usize,
    /// `|s(KT) - s((K-1)T)|` of the last completed period.
    final_stroboscopic_defect: Option<f64>,
    contraction_ratio: Option<f64>,
    converged: bool,
    diverging: bool,
    /// Per unit time, from the per-period growth of the stroboscopic differences.
    growth_rate: Option<f64>,
    work: f64,
    heat_hot: f64,
    heat_cold: f64,
    min_heisenberg_gap: f64,
    final_state: FinalState,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct FinalState {
    t: f64,
    n: f64,
    m_re: f64,
    m_im: f64,
}

struct Row {
    t: f64,
    s: SecondMoments,
    energy: f64,
    work: f64,
    /// Cumulative heat per stroke.
    heat: Vec<f64>,
}

/// Knot times: output grid plus every stroke boundary. Entries carry the
/// output index when they are on the grid; near-coincident knots merge.
fn knots(p: &CycleProtocol, periods: usize, samples: usize) -> Vec<(f64, Option<usize>)> {
    let big_t = p.period;
    let mut v: Vec<(f64, Option<usize>)> = (0..=periods * samples)
        .map(|j| (j as f64 * big_t / samples as f64, Some(j)))
        .collect();
    for i in 0..periods {
        for k in 0..p.strokes.len() {
            v.push((i as f64 * big_t + p.stroke_bounds(k).1, None));
        }
    }
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eps = 1e-12 * big_t;
    let mut out: Vec<(f64, Option<usize>)> = Vec::with_capacity(v.len());
    for (t, j) in v {
        match out.last_mut() {
            Some(last) if t - last.0 <= eps => {
                if last.1.is_none() {
                    *last = (t, j);
                }
            }
            _ => out.push((t, j)),
        }
    }
    out
}

fn field(p: &CycleProtocol) -> impl Fn(f64, usize, &[C64; 5]) -> [C64; 5] + '_ {
    move |t, piece, x| {
        let q = p.params_on(t, piece);
        let s3 = [x[0], x[1], x[2]];
        let d = moment_field(&Generator::physical(&q), &s3);
        let s = SecondMoments::from_state(&s3);
        let w = work_rate(&s, p, t, piece);
        // Undamped strokes exchange no heat; the rate is zero identically.
        let h = if q.gamma > 0.0 {
            heat_rate(&SecondMoments::from_state(&d), q.omega, q.lambda)
        } else {
            0.0
        };
        [d[0], d[1], d[2], C64::new(w, 0.0), C64::new(h, 0.0)]
    }
}

pub fn run(a: &SimulateArgs) -> Result<u8, Failure> {
    check_tol(a.tol)?;
    if a.samples == 0 {
        return Err(Failure::config("--samples must be at least 1"));
    }
    let s0 = parse_initial(&a.initial)?;
    let loaded = a.source.load()?;
    let p = &loaded.protocol;
    let strokes = p.strokes.len();
    let integrator = Integrator::new(a.tol);
    let rhs = field(p);

    let mut rows: Vec<Row> = Vec::new();
    let mut strobo: Vec<SecondMoments> = Vec::new();
    let mut heat = vec![0.0; strokes];
    let mut last_period_heat = vec![0.0; strokes];
    let mut x = [s0.n.into(), s0.m, s0.mbar, C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    let mut failure: Option<Error> = None;

    let grid = if a.periods == 0 { Vec::new() } else { knots(p, a.periods, a.samples) };
    let mut prev: Option<f64> = None;
    for &(t, j) in &grid {
        if let Some(t_prev) = prev {
            let mid = 0.5 * (t_prev + t);
            let k = p.stroke_at(mid);
            let q_before = x[4].re;
            match integrator.propagate(&rhs, x, p.schedule(), t_prev, t) {
                Ok(next) => x = next,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
            let dq = x[4].re - q_before;
            heat[k] += dq;
            if (mid / p.period) as usize + 1 == a.periods {
                last_period_heat[k] += dq;
            }
            if x[0].re.abs() > RUNAWAY_OCCUPATION {
                failure = Some(Error::NonFinite { t });
                break;
            }
        }
        prev = Some(t);
        if let Some(j) = j {
            let s = SecondMoments::from_state(&[x[0], x[1], x[2]]);
            let q = p.params(t);
            if j % a.samples == 0 {
                strobo.push(s);
            }
            rows.push(Row {
                t,
                s,
                energy: energy(&s, q.omega, q.lambda),
                work: x[3].re,
                heat: heat.clone(),
            });
        }
    }

    // Heat classification needs the sign of each stroke's heat when the
    // protocol has no thermal strokes; the last period decides.
    let hot = hot_strokes(p, &last_period_heat);
    let split = |h: &[f64]| -> (f64, f64) {
        let mut qh = 0.0;
        let mut qc = 0.0;
        for (q, &is_hot) in h.iter().zip(&hot) {
            if is_hot {
                qh += q;
            } else {
                qc += q;
            }
        }
        (qh, qc)
    };
    let mut csv = Csv::new(&SIMULATE_HEADER);
    let mut min_gap = f64::INFINITY;
    for r in &rows {
        let (qh, qc) = split(&r.heat);
        min_gap = min_gap.min(r.s.heisenberg_gap());
        csv.row(&[r.t, r.s.n, r.s.m.re, r.s.m.im, r.energy, r.work, qh, qc]);
    }

    let report = detect_convergence(&strobo, p.period);
    let diverging = failure.is_some() || report.diverging;
    let (heat_hot, heat_cold) = split(&heat);
    let last = rows.last();
    let summary = SimulateSummary {
        periods: a.periods,
        completed_periods: strobo.len().saturating_sub(1),
        final_stroboscopic_defect: report.differences.last().copied(),
        contraction_ratio: report.ratio,
        converged: report.converged && failure.is_none(),
        diverging,
        growth_rate: report.ratio.filter(|_| diverging).map(|r| r.ln() / p.period),
        work: last.map_or(0.0, |r| r.work),
        heat_hot,
        heat_cold,
        min_heisenberg_gap: min_gap,
        final_state: FinalState {
            t: last.map_or(0.0, |r| r.t),
            n: last.map_or(s0.n, |r| r.s.n),
            m_re: last.map_or(s0.m.re, |r| r.s.m.re),
            m_im: last.map_or(s0.m.im, |r| r.s.m.im),
        },
        error: failure.as_ref().map(|e| e.to_string()),
    };

    let summary_path = sibling(&a.out, "summary");
    let manifest_path = sibling(&a.out, "manifest");
    write_text(&a.out, &csv.into_string())?;
    write_json(&summary_path, &summary)?;
    write_json(
        &manifest_path,
        &RunManifest::new("simulate", a, Some(&loaded), a.tol, &[&a.out, &summary_path]),
    )?;

    if let Some(e) = &failure {
        match e {
            Error::NonFinite { .. } | Error::StepUnderflow { .. } => {}
            other => return Err(Failure::runtime(other.to_string())),
        }
    }
    if diverging {
        let rate = summary.growth_rate.map_or_else(|| "unknown".to_string(), |g| format!("{g:.6e}"));
        let why = summary.error.as_deref().unwrap_or("stroboscopic differences grow");
        eprintln!("divergence after {} periods ({why}); estimated growth rate {rate} per unit time", summary.completed_periods);
        return Ok(EXIT_DIVERGENCE);
    }
    if let Some(d) = summary.final_stroboscopic_defect {
        eprintln!("final stroboscopic defect {d:.3e} after {} periods", summary.completed_periods);
    }
    Ok(EXIT_OK)
}
