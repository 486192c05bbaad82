//! Energetics of limit cycles: energy, work, heat, efficiency and power,
//! plus the quasi-static Carnot reference.
//!
//! Work is `int <dH/dt>` with `dW/dt = omega' (n + 1/2) + (lambda' m + conj(lambda') mbar)/2`
//! evaluated from analytic protocol derivatives. Heat is the remainder of
//! the energy balance, `Q = Delta<H> - W`, and is zero by definition on
//! strokes without damping. Efficiency is `-W/Q_H` and power `-W/T`, so a
//! working engine has `W < 0`.

use serde::Serialize;

use crate::dynamics::{MomentTrajectory, SecondMoments};
use crate::error::{Error, Result};
use crate::floquet::FloquetFrames;
use crate::ode::C64;
use crate::protocol::{Bath, CycleProtocol, MechanicalProtocol};

/// `<H> = omega (n + 1/2) + (lambda m + conj(lambda) mbar) / 2`.
pub fn energy(s: &SecondMoments, omega: f64, lambda: C64) -> f64 {
    omega * (s.n + 0.5) + 0.5 * (lambda * s.m + lambda.conj() * s.mbar).re
}

/// `<dH/dt>` at parameter time `t` on schedule piece `piece`.
pub fn work_rate(s: &SecondMoments, p: &CycleProtocol, t: f64, piece: usize) -> f64 {
    let r = p.rates_on(t, piece);
    r.omega_dot * (s.n + 0.5) + 0.5 * (r.lambda_dot * s.m + r.lambda_dot.conj() * s.mbar).re
}

/// Heat current `<H dot rho>`: the part of `d<H>/dt` carried by the state,
/// from the moment derivatives `ds`.
pub fn heat_rate(ds: &SecondMoments, omega: f64, lambda: C64) -> f64 {
    omega * ds.n + 0.5 * (lambda * ds.m + lambda.conj() * ds.mbar).re
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrokeLedger {
    pub label: String,
    pub work: f64,
    pub heat: f64,
    pub delta_energy: f64,
    pub damped: bool,
    /// `|Delta<H> - W|` on an undamped stroke, where the first law forces zero heat.
    pub adiabatic_defect: f64,
}

/// How the work integrals were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkRoute {
    /// Trapezoid on the trajectory grid with a Richardson correction.
    Trapezoid,
    /// Work integral co-integrated with the frame equations.
    CoIntegrated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoLedger {
    pub period: f64,
    pub route: WorkRoute,
    pub strokes: Vec<StrokeLedger>,
    /// Net work `W`, negative for an engine.
    pub work: f64,
    pub heat_hot: f64,
    pub heat_cold: f64,
    /// `-W / Q_H`.
    pub efficiency: f64,
    /// `-W / T`.
    pub power: f64,
    /// `|<H>(end) - <H>(start)|` over the cycle.
    pub closure_defect: f64,
    pub max_energy: f64,
    /// Richardson estimate of the quadrature error in `W`, trapezoid route only.
    pub quadrature_error: Option<f64>,
    /// `(t, <H>)` on the grid used.
    pub energy_trace: Vec<(f64, f64)>,
}

impl ThermoLedger {
    /// Fails when the energy does not return to its start within `rel * max|<H>|`.
    pub fn ensure_closed(&self, rel: f64) -> Result<()> {
        if self.closure_defect > rel * self.max_energy.max(1e-300) {
            return Err(Error::OpenCycle {
                defect: self.closure_defect,
            });
        }
        Ok(())
    }

    pub fn stroke_works(&self) -> Vec<f64> {
        self.strokes.iter().map(|s| s.work).collect()
    }
}

/// Which damped strokes count as the hot bath: thermal strokes at the
/// highest temperature; without thermal strokes, damped strokes that absorb heat.
pub fn hot_strokes(p: &CycleProtocol, heats: &[f64]) -> Vec<bool> {
    let t_max = p
        .strokes
        .iter()
        .filter(|s| s.gamma > 0.0)
        .filter_map(|s| match s.bath {
            Bath::Thermal { temperature } => Some(temperature),
            _ => None,
        })
        .fold(f64::NAN, f64::max);
    p.strokes
        .iter()
        .zip(heats)
        .map(|(s, &q)| {
            s.gamma > 0.0
                && match (t_max.is_nan(), &s.bath) {
                    (false, Bath::Thermal { temperature }) => *temperature == t_max,
                    (false, _) => false,
                    (true, _) => q > 0.0,
                }
        })
        .collect()
}

fn assemble(
    p: &CycleProtocol,
    route: WorkRoute,
    works: Vec<f64>,
    delta_e: Vec<f64>,
    energy_trace: Vec<(f64, f64)>,
    quadrature_error: Option<f64>,
) -> ThermoLedger {
    let mut strokes = Vec::with_capacity(p.strokes.len());
    let mut heats = Vec::with_capacity(p.strokes.len());
    for (k, s) in p.strokes.iter().enumerate() {
        let damped = s.gamma > 0.0;
        let raw = delta_e[k] - works[k];
        let heat = if damped { raw } else { 0.0 };
        heats.push(heat);
        strokes.push(StrokeLedger {
            label: s.label.clone(),
            work: works[k],
            heat,
            delta_energy: delta_e[k],
            damped,
            adiabatic_defect: if damped { 0.0 } else { raw.abs() },
        });
    }
    let hot = hot_strokes(p, &heats);
    let heat_hot: f64 = heats.iter().zip(&hot).filter(|(_, &h)| h).map(|(q, _)| q).sum();
    let heat_cold: f64 = heats.iter().zip(&hot).filter(|(_, &h)| !h).map(|(q, _)| q).sum();
    let work: f64 = works.iter().sum();
    let first = energy_trace.first().map_or(0.0, |e| e.1);
    let last = energy_trace.last().map_or(0.0, |e| e.1);
    let max_energy = energy_trace.iter().map(|e| e.1.abs()).fold(0.0, f64::max);
    ThermoLedger {
        period: p.period,
        route,
        strokes,
        work,
        heat_hot,
        heat_cold,
        efficiency: -work / heat_hot,
        power: -work / p.period,
        closure_defect: (last - first).abs(),
        max_energy,
        quadrature_error,
        energy_trace,
    }
}

/// Ledger by trapezoid quadrature over `(t, piece, moments)` samples
/// spanning exactly one period, boundary instants listed once per piece.
pub fn ledger_from_samples(samples: &[(f64, usize, SecondMoments)], p: &CycleProtocol) -> Result<ThermoLedger> {
    if samples.len() < 2 {
        return Err(Error::InvalidRequest("need at least two samples for a ledger".into()));
    }
    let span = samples.last().unwrap().0 - samples[0].0;
    if (span - p.period).abs() > 1e-9 * p.period {
        return Err(Error::InvalidRequest(format!(
            "samples span {span}, not one period {}",
            p.period
        )));
    }
    let ns = p.strokes.len();
    let mut fine = vec![0.0; ns];
    let mut coarse = vec![0.0; ns];
    let mut delta_e = vec![0.0; ns];
    let mut trace = Vec::with_capacity(samples.len());
    let value = |i: usize| {
        let (t, k, s) = &samples[i];
        let q = p.params_on(*t, *k);
        (energy(s, q.omega, q.lambda), work_rate(s, p, *t, *k))
    };
    let vals: Vec<(f64, f64)> = (0..samples.len()).map(value).collect();
    // Runs of consecutive samples on one piece.
    let mut start = 0;
    while start < samples.len() {
        let piece = samples[start].1;
        let mut end = start;
        while end + 1 < samples.len() && samples[end + 1].1 == piece && samples[end + 1].0 > samples[end].0 {
            end += 1;
        }
        let k = p.stroke_of_piece(piece);
        for i in start..end {
            let h = samples[i + 1].0 - samples[i].0;
            fine[k] += 0.5 * h * (vals[i].1 + vals[i + 1].1);
        }
        let mut i = start;
        while i < end {
            let j = (i + 2).min(end);
            // An odd tail is a single fine step in both sums.
            coarse[k] += 0.5 * (samples[j].0 - samples[i].0) * (vals[i].1 + vals[j].1);
            i = j;
        }
        delta_e[k] += vals[end].0 - vals[start].0;
        for i in start..=end {
            if trace.last().is_none_or(|&(t, _)| samples[i].0 > t) {
                trace.push((samples[i].0, vals[i].0));
            }
        }
        start = end + 1;
    }
    let works: Vec<f64> = fine.iter().zip(&coarse).map(|(f, c)| f + (f - c) / 3.0).collect();
    let err = fine.iter().zip(&coarse).map(|(f, c)| ((f - c) / 3.0).abs()).sum::<f64>();
    Ok(assemble(p, WorkRoute::Trapezoid, works, delta_e, trace, Some(err)))
}

/// Ledger over the last full period of a propagated trajectory.
pub fn work_heat_ledger(traj: &MomentTrajectory, p: &CycleProtocol) -> Result<ThermoLedger> {
    let end = traj.traj.end_time();
    let start = end - p.period;
    if start < traj.traj.start_time() - 1e-9 * p.period {
        return Err(Error::InvalidRequest("trajectory is shorter than one period".into()));
    }
    let eps = 1e-9 * p.period;
    let samples: Vec<(f64, usize, SecondMoments)> = traj.samples().filter(|(t, _, _)| *t >= start - eps).collect();
    if (samples[0].0 - start).abs() > eps {
        return Err(Error::InvalidRequest(
            "trajectory must span a whole number of periods (no sample at one period before the end)".into(),
        ));
    }
    ledger_from_samples(&samples, p)
}

/// Ledger of the closed-form limit cycle with co-integrated work.
pub fn floquet_ledger(frames: &FloquetFrames) -> ThermoLedger {
    let p = frames.protocol();
    let samples = frames.dissipative.samples();
    let ns = p.strokes.len();
    let mut first: Vec<Option<(f64, f64)>> = vec![None; ns];
    let mut last: Vec<(f64, f64)> = vec![(0.0, 0.0); ns];
    let mut trace: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
    for s in &samples {
        let u = &s.unitary;
        let k = p.stroke_of_piece(u.piece);
        let q = p.params_on(u.t, u.piece);
        let e = energy(&s.moments(), q.omega, q.lambda);
        let w = s.work.re;
        first[k].get_or_insert((w, e));
        last[k] = (w, e);
        if trace.last().is_none_or(|&(t, _)| u.t > t) {
            trace.push((u.t, e));
        }
    }
    let works = (0..ns).map(|k| last[k].0 - first[k].map_or(0.0, |f| f.0)).collect();
    let delta_e = (0..ns).map(|k| last[k].1 - first[k].map_or(0.0, |f| f.1)).collect();
    assemble(p, WorkRoute::CoIntegrated, works, delta_e, trace, None)
}

/// Same limit-cycle samples, integrated by trapezoid; the second route for [`floquet_ledger`].
pub fn floquet_trapezoid_ledger(frames: &FloquetFrames) -> Result<ThermoLedger> {
    let samples: Vec<(f64, usize, SecondMoments)> = frames
        .dissipative
        .samples()
        .iter()
        .map(|s| (s.unitary.t, s.unitary.piece, s.moments()))
        .collect();
    ledger_from_samples(&samples, frames.protocol())
}

/// `ln sinh x` for `x > 0` without overflow.
fn ln_sinh(x: f64) -> f64 {
    x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2
}

/// `(Omega/2) coth(Omega/2T)`, the thermal energy of a mode of frequency `Omega`.
pub fn thermal_energy(big_omega: f64, temperature: f64) -> f64 {
    0.5 * big_omega / (big_omega / (2.0 * temperature)).tanh()
}

/// Quasi-static work on an isotherm, `T ln[sinh(Omega_f/2T) / sinh(Omega_i/2T)]`.
pub fn isothermal_work(omega_i: f64, omega_f: f64, temperature: f64) -> f64 {
    temperature * (ln_sinh(omega_f / (2.0 * temperature)) - ln_sinh(omega_i / (2.0 * temperature)))
}

/// Closed-form quasi-static Carnot cycle through corners `a -> b -> c -> d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiStaticReference {
    pub corners: [f64; 4],
    pub t_hot: f64,
    pub t_cold: f64,
    /// `<H>` at the corners.
    pub corner_energies: [f64; 4],
    /// `W_ab, W_bc, W_cd, W_da`.
    pub stroke_works: [f64; 4],
    pub heat_hot: f64,
    pub heat_cold: f64,
    pub work: f64,
    pub efficiency: f64,
    pub carnot_efficiency: f64,
    /// `eta_C - eta`; zero when the reversibility ratios hold.
    pub reversibility_defect: f64,
}

impl QuasiStaticReference {
    pub fn from_corners(corners: [f64; 4], t_hot: f64, t_cold: f64) -> Result<Self> {
        if !(corners.iter().all(|w| w.is_finite() && *w > 0.0)) {
            return Err(Error::param("corners", format!("frequencies must be positive, got {corners:?}")));
        }
        if !(t_hot > 0.0 && t_cold > 0.0 && t_cold < t_hot) {
            return Err(Error::param("T_C", format!("need 0 < T_C < T_H, got T_C = {t_cold}, T_H = {t_hot}")));
        }
        let [wa, wb, wc, wd] = corners;
        let ea = thermal_energy(wa, t_hot);
        let eb = thermal_energy(wb, t_hot);
        let ec = thermal_energy(wc, t_cold);
        let ed = thermal_energy(wd, t_cold);
        let w_ab = isothermal_work(wa, wb, t_hot);
        let w_bc = ec - eb;
        let w_cd = isothermal_work(wc, wd, t_cold);
        let w_da = ea - ed;
        let heat_hot = eb - ea - w_ab;
        let heat_cold = ed - ec - w_cd;
        let work = w_ab + w_bc + w_cd + w_da;
        let efficiency = -work / heat_hot;
        let carnot_efficiency = 1.0 - t_cold / t_hot;
        Ok(QuasiStaticReference {
            corners,
            t_hot,
            t_cold,
            corner_energies: [ea, eb, ec, ed],
            stroke_works: [w_ab, w_bc, w_cd, w_da],
            heat_hot,
            heat_cold,
            work,
            efficiency,
            carnot_efficiency,
            reversibility_defect: carnot_efficiency - efficiency,
        })
    }

    /// Quasi-static `<H>` at frequency `big_omega` on stroke `k`: thermal on
    /// the isotherms, proportional to the frequency on the isentropes.
    pub fn energy_on_stroke(&self, k: usize, big_omega: f64) -> f64 {
        match k {
            0 => thermal_energy(big_omega, self.t_hot),
            1 => self.corner_energies[1] * big_omega / self.corners[1],
            2 => thermal_energy(big_omega, self.t_cold),
            _ => self.corner_energies[3] * big_omega / self.corners[3],
        }
    }
}

/// Quasi-static reference of the Carnot construction with depths `Delta`, `delta`.
pub fn quasistatic_reference(big_delta: f64, delta: f64, t_hot: f64, t_cold: f64) -> Result<QuasiStaticReference> {
    let inner = big_delta * delta / (big_delta + delta);
    QuasiStaticReference::from_corners([big_delta + delta, big_delta, big_delta - inner, big_delta], t_hot, t_cold)
}

/// Largest relative gap between the limit-cycle `<H>` and the quasi-static
/// `<H>` at the same frequency and stroke, over the frame grid.
pub fn quasistatic_deviation(frames: &FloquetFrames, reference: &QuasiStaticReference) -> f64 {
    let p = frames.protocol();
    frames
        .dissipative
        .samples()
        .iter()
        .map(|s| {
            let u = &s.unitary;
            let k = p.stroke_of_piece(u.piece);
            let q = p.params_on(u.t, u.piece);
            let e = energy(&s.moments(), q.omega, q.lambda);
            let qs = reference.energy_on_stroke(k, p.mech_frequency_in_stroke(u.t, k));
            ((e - qs) / qs).abs()
        })
        .fold(0.0, f64::max)
}

/// Quasi-static reversibility ratios of a four-stroke cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReversibilityReport {
    pub corners: [f64; 4],
    pub temperature_ratio: f64,
    /// `Omega_c / Omega_b - T_C / T_H`.
    pub expansion_defect: f64,
    /// `Omega_d / Omega_a - T_C / T_H`.
    pub compression_defect: f64,
}

/// Checks `T_C / T_H = Omega_c / Omega_b = Omega_d / Omega_a` for a cycle of
/// (hot contact, expansion, cold contact, compression) strokes.
pub fn reversibility_check(mech: &MechanicalProtocol) -> Result<ReversibilityReport> {
    if mech.strokes.len() != 4 {
        return Err(Error::InvalidRequest(format!(
            "reversibility needs four strokes, got {}",
            mech.strokes.len()
        )));
    }
    let (Some(t_hot), Some(t_cold)) = (mech.strokes[0].temperature, mech.strokes[2].temperature) else {
        return Err(Error::InvalidRequest("strokes 1 and 3 must be thermal".into()));
    };
    let (wa, wb) = mech.stroke_corner_frequencies(0);
    let (_, wc) = mech.stroke_corner_frequencies(1);
    let (_, wd) = mech.stroke_corner_frequencies(2);
    let ratio = t_cold / t_hot;
    Ok(ReversibilityReport {
        corners: [wa, wb, wc, wd],
        temperature_ratio: ratio,
        expansion_defect: wc / wb - ratio,
        compression_defect: wd / wa - ratio,
    })
}
