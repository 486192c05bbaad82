use std::fmt;

use serde::Serialize;

use super::{CycleProtocol, Drive};

pub const DEFAULT_SAMPLES_PER_STROKE: usize = 512;

pub const FREQUENCY_BOUND: &str = "frequency bound omega^2 > |lambda|^2";
pub const SQUEEZING_BOUND: &str = "squeezing bound N(N+1) > |M|^2";
pub const OCCUPATION: &str = "bath occupation N >= 0";
pub const NO_DISSIPATION: &str = "no dissipation in cycle";
pub const POSITIVE_FREQUENCY: &str = "mechanical frequency Omega > 0";
pub const FINITE: &str = "finite parameters";
pub const CONTINUITY: &str = "Hamiltonian continuous at stroke boundary";

/// A protocol invariant failing at a specific time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub time: f64,
    pub constraint: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at t = {}: {}", self.constraint, self.time, self.detail)
    }
}

/// Checks every protocol invariant on `samples_per_stroke + 1` points per
/// stroke (both stroke ends included as one-sided limits). Each constraint is
/// reported at most once per stroke, at its first offending time.
pub fn validate_protocol(p: &CycleProtocol, samples_per_stroke: usize) -> Vec<Violation> {
    let n = samples_per_stroke.max(1);
    let mut out = Vec::new();
    if p.strokes.iter().all(|s| s.gamma == 0.0) {
        out.push(Violation {
            time: 0.0,
            constraint: NO_DISSIPATION,
            detail: "gamma is zero on every stroke, so the limit cycle is not unique".into(),
        });
    }
    for k in 0..p.strokes.len() {
        let (start, end) = p.stroke_bounds(k);
        let mut seen: Vec<&'static str> = Vec::new();
        let mut report = |time: f64, constraint: &'static str, detail: String| {
            if !seen.contains(&constraint) {
                seen.push(constraint);
                out.push(Violation { time, constraint, detail });
            }
        };
        let mechanical = matches!(p.strokes[k].drive, Drive::Mechanical { .. });
        for i in 0..=n {
            let t = start + (end - start) * i as f64 / n as f64;
            let q = p.params_in_stroke(t, k);
            let values = [q.omega, q.lambda.re, q.lambda.im, q.gamma, q.n, q.m.re, q.m.im];
            if values.iter().any(|v| !v.is_finite()) {
                report(t, FINITE, format!("{q:?}"));
                continue;
            }
            let gap = q.omega * q.omega - q.lambda.norm_sqr();
            if !(gap > 0.0) {
                report(t, FREQUENCY_BOUND, format!("omega = {}, |lambda| = {}", q.omega, q.lambda.norm()));
            }
            if mechanical {
                let w = p.mech_frequency_in_stroke(t, k);
                if !(w > 0.0) {
                    report(t, POSITIVE_FREQUENCY, format!("Omega = {w}"));
                }
            }
            if q.gamma > 0.0 {
                if q.n < 0.0 {
                    report(t, OCCUPATION, format!("N = {}", q.n));
                }
                if !(q.n * (q.n + 1.0) > q.m.norm_sqr()) {
                    report(
                        t,
                        SQUEEZING_BOUND,
                        format!("N(N+1) = {} <= |M|^2 = {}", q.n * (q.n + 1.0), q.m.norm_sqr()),
                    );
                }
            }
        }
        let next = (k + 1) % p.strokes.len();
        if p.strokes.len() > 1 {
            let a = p.params_in_stroke(end, k);
            let b = p.params_in_stroke(if next == 0 { 0.0 } else { end }, next);
            let scale = 1.0 + a.omega.abs() + a.lambda.norm();
            let jump = (a.omega - b.omega).abs() + (a.lambda - b.lambda).norm();
            if jump > 1e-9 * scale {
                report(
                    end,
                    CONTINUITY,
                    format!(
                        "stroke `{}` ends at omega = {}, lambda = {}; stroke `{}` starts at omega = {}, lambda = {}",
                        p.strokes[k].label, a.omega, a.lambda, p.strokes[next].label, b.omega, b.lambda
                    ),
                );
            }
        }
    }
    out
}
