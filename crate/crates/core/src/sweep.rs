//! Period sweeps: independent Floquet solves per period on a worker pool.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::floquet::FloquetFrames;
use crate::protocol::CycleProtocol;
use crate::thermo::floquet_ledger;

/// One sweep point. Failed points carry `error` and leave the numbers empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub period: f64,
    pub efficiency: Option<f64>,
    pub power: Option<f64>,
    pub stable: Option<bool>,
    /// `2 |Im LambdaBar| / gammaBar`; above one the cycle is unstable.
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepPoint {
    fn failed(period: f64, e: &Error) -> Self {
        SweepPoint {
            period,
            efficiency: None,
            power: None,
            stable: None,
            ratio: None,
            error: Some(e.to_string()),
        }
    }
}

fn solve_point(p: &CycleProtocol, tol: f64) -> Result<SweepPoint> {
    let frames = FloquetFrames::solve(p, tol)?;
    let ledger = floquet_ledger(&frames);
    Ok(SweepPoint {
        period: p.period,
        efficiency: Some(ledger.efficiency),
        power: Some(ledger.power),
        stable: Some(frames.stability.stable),
        ratio: Some(frames.stability.ratio),
        error: None,
    })
}

/// Solves `build(period)` for every period on `threads` workers (0 picks
/// rayon's default). Points come back sorted by period; a failing point
/// records its error and the sweep continues.
pub fn sweep_periods<B>(build: B, periods: &[f64], tol: f64, threads: usize) -> Result<Vec<SweepPoint>>
where
    B: Fn(f64) -> Result<CycleProtocol> + Sync,
{
    let mut order: Vec<f64> = periods.to_vec();
    order.sort_by(f64::total_cmp);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidRequest(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        order
            .par_iter()
            .map(|&period| build(period).and_then(|p| solve_point(&p, tol)).unwrap_or_else(|e| SweepPoint::failed(period, &e)))
            .collect()
    }))
}

/// Parses `a,b,c` or an inclusive range `start:stop:step`.
pub fn parse_period_list(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::param("periods", format!("`{s}` is not a number")))
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::param("periods", "a range reads start:stop:step"));
        }
        let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(h > 0.0 && b >= a) {
            return Err(Error::param("periods", "a range needs step > 0 and stop >= start"));
        }
        // Counting steps avoids drift from repeated addition.
        let n = ((b - a) / h + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| a + k as f64 * h).collect());
    }
    spec.split(',').map(num).collect()
}
