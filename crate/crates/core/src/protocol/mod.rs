//! Time-periodic engine protocols.
//!
//! A [`CycleProtocol`] is a sequence of strokes covering one period. Each
//! stroke carries a drive (bosonic `omega`/`lambda` profiles, or a mechanical
//! frequency profile at fixed `eta`), a constant damping rate and a bath.
//! Parameters are evaluated on half-open strokes `[start, end)`; the ODE
//! solvers use [`CycleProtocol::params_on`] with an explicit piece index so
//! that values at a boundary are one-sided limits from inside the piece.

mod builtins;
mod config;
mod profile;
mod validate;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{Schedule, C64};

pub use builtins::{
    build_carnot_protocol, build_otto_protocol, build_parametric_protocol, constant_protocol, CarnotGeometry,
    OttoSpec, ParametricSpec, RampShape, BUILTIN_NAMES,
};
pub use config::{load_protocol, load_protocol_file, LoadedProtocol};
pub use profile::{ComplexProfile, Profile};
pub use validate::{
    validate_protocol, Violation, CONTINUITY, DEFAULT_SAMPLES_PER_STROKE, FINITE, FREQUENCY_BOUND, NO_DISSIPATION, OCCUPATION,
    POSITIVE_FREQUENCY, SQUEEZING_BOUND,
};

/// Instantaneous protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub omega: f64,
    pub lambda: C64,
    pub gamma: f64,
    pub n: f64,
    pub m: C64,
}

impl Params {
    /// `sqrt(omega^2 - |lambda|^2)`, NaN when the frequency bound fails.
    pub fn mech_frequency(&self) -> f64 {
        (self.omega * self.omega - self.lambda.norm_sqr()).sqrt()
    }
}

/// Time derivatives of the Hamiltonian parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveRates {
    pub omega_dot: f64,
    pub lambda_dot: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Drive {
    Bosonic { omega: Profile, lambda: ComplexProfile },
    /// Mechanical frequency `Omega_t` at constant `eta`.
    Mechanical { omega_mech: Profile, eta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Bath {
    /// Squeezed-thermal bath equilibrating the instantaneous Hamiltonian.
    Thermal { temperature: f64 },
    Explicit { n: Profile, m: ComplexProfile },
    /// `N = M = 0`; only meaningful with `gamma = 0`.
    Idle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stroke {
    pub label: String,
    pub duration: f64,
    pub drive: Drive,
    pub gamma: f64,
    pub bath: Bath,
}

/// Local clock handed to profiles.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Clock {
    /// Time reduced into `[0, period)`.
    pub phase: f64,
    pub period: f64,
    /// Fraction of the stroke elapsed, in `[0, 1]`.
    pub frac: f64,
    pub duration: f64,
}

/// A validated-on-demand periodic protocol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleProtocol {
    pub name: String,
    pub period: f64,
    pub strokes: Vec<Stroke>,
    #[serde(skip)]
    schedule: Schedule,
    /// Stroke index of every schedule piece.
    #[serde(skip)]
    piece_stroke: Vec<usize>,
    #[serde(skip)]
    stroke_start: Vec<f64>,
}

impl CycleProtocol {
    /// Assembles strokes whose durations sum to the period (up to 1e-12 relative).
    pub fn new(name: impl Into<String>, strokes: Vec<Stroke>) -> Result<Self> {
        if strokes.is_empty() {
            return Err(Error::param("strokes", "at least one stroke is required"));
        }
        for s in &strokes {
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(Error::param("duration", format!("stroke `{}` has duration {}", s.label, s.duration)));
            }
            if !(s.gamma.is_finite() && s.gamma >= 0.0) {
                return Err(Error::param("gamma", format!("stroke `{}` has gamma {}", s.label, s.gamma)));
            }
            if let Bath::Thermal { temperature } = s.bath {
                if !(temperature.is_finite() && temperature > 0.0) {
                    return Err(Error::param(
                        "temperature",
                        format!("stroke `{}` has temperature {temperature}", s.label),
                    ));
                }
            }
            if let Drive::Mechanical { eta, .. } = s.drive {
                if !(eta.is_finite() && eta > 0.0) {
                    return Err(Error::param("eta", format!("must be positive, got {eta}")));
                }
            }
        }
        let period: f64 = strokes.iter().map(|s| s.duration).sum();
        let mut stroke_start = Vec::with_capacity(strokes.len());
        let mut acc = 0.0;
        for s in &strokes {
            stroke_start.push(acc);
            acc += s.duration;
        }
        let mut cuts = Vec::new();
        let mut piece_stroke = Vec::new();
        for (k, s) in strokes.iter().enumerate() {
            let start = stroke_start[k];
            if k > 0 {
                cuts.push(start);
            }
            piece_stroke.push(k);
            for f in s.knots() {
                cuts.push(start + f * s.duration);
                piece_stroke.push(k);
            }
        }
        let schedule = Schedule::new(period, cuts)?;
        Ok(CycleProtocol {
            name: name.into(),
            period,
            strokes,
            schedule,
            piece_stroke,
            stroke_start,
        })
    }

    /// Same shape with every stroke duration scaled to the new period.
    pub fn with_period(&self, period: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::param("period", format!("must be positive, got {period}")));
        }
        let scale = period / self.period;
        let strokes = self
            .strokes
            .iter()
            .map(|s| Stroke {
                duration: s.duration * scale,
                ..s.clone()
            })
            .collect();
        let mut p = CycleProtocol::new(self.name.clone(), strokes)?;
        p.period = period;
        p.schedule = Schedule::new(period, p.schedule.cuts().to_vec())?;
        Ok(p)
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn stroke_of_piece(&self, piece: usize) -> usize {
        self.piece_stroke[piece]
    }

    /// Stroke containing `t` (half-open strokes).
    pub fn stroke_at(&self, t: f64) -> usize {
        self.piece_stroke[self.schedule.piece_at(t)]
    }

    /// `[start, end)` of stroke `k` within one period.
    pub fn stroke_bounds(&self, k: usize) -> (f64, f64) {
        let start = self.stroke_start[k];
        let end = if k + 1 == self.strokes.len() {
            self.period
        } else {
            self.stroke_start[k + 1]
        };
        (start, end)
    }

    fn clock(&self, t: f64, stroke: usize) -> Clock {
        let phase = self.schedule.phase(t);
        let (start, end) = self.stroke_bounds(stroke);
        // One-sided evaluation: a phase of 0 on the last stroke means its end.
        let phase = if phase < start - 1e-12 * self.period && stroke + 1 == self.strokes.len() {
            phase + self.period
        } else {
            phase
        };
        let duration = end - start;
        Clock {
            phase,
            period: self.period,
            frac: ((phase - start) / duration).clamp(0.0, 1.0),
            duration,
        }
    }

    /// Parameters at `t`, strokes taken half-open.
    pub fn params(&self, t: f64) -> Params {
        let piece = self.schedule.piece_at(t);
        self.params_on(t, piece)
    }

    /// Parameters at `t` evaluated with the formulas of schedule piece `piece`.
    pub fn params_on(&self, t: f64, piece: usize) -> Params {
        self.params_in_stroke(t, self.piece_stroke[piece])
    }

    /// Parameters at `t` evaluated with the formulas of stroke `k`.
    pub fn params_in_stroke(&self, t: f64, k: usize) -> Params {
        let stroke = &self.strokes[k];
        let clock = self.clock(t, k);
        let (omega, lambda) = stroke.hamiltonian(&clock);
        let (n, m) = match &stroke.bath {
            Bath::Idle => (0.0, C64::new(0.0, 0.0)),
            Bath::Explicit { n, m } => (n.value(&clock), m.value(&clock)),
            Bath::Thermal { temperature } => {
                thermal_bath_params(omega, lambda, *temperature).unwrap_or((f64::NAN, C64::new(f64::NAN, f64::NAN)))
            }
        };
        Params {
            omega,
            lambda,
            gamma: stroke.gamma,
            n,
            m,
        }
    }

    /// `(omega_dot, lambda_dot)` from the analytic profile derivatives.
    pub fn rates_on(&self, t: f64, piece: usize) -> DriveRates {
        self.rates_in_stroke(t, self.piece_stroke[piece])
    }

    pub fn rates_in_stroke(&self, t: f64, k: usize) -> DriveRates {
        let clock = self.clock(t, k);
        match &self.strokes[k].drive {
            Drive::Bosonic { omega, lambda } => DriveRates {
                omega_dot: omega.derivative(&clock),
                lambda_dot: lambda.derivative(&clock),
            },
            Drive::Mechanical { omega_mech, eta } => {
                let w = omega_mech.value(&clock);
                let d = w * omega_mech.derivative(&clock) / eta;
                DriveRates {
                    omega_dot: d,
                    lambda_dot: C64::new(d, 0.0),
                }
            }
        }
    }

    /// Mechanical frequency `Omega_t` in stroke `k`.
    pub fn mech_frequency_in_stroke(&self, t: f64, k: usize) -> f64 {
        let clock = self.clock(t, k);
        match &self.strokes[k].drive {
            Drive::Mechanical { omega_mech, .. } => omega_mech.value(&clock),
            Drive::Bosonic { .. } => self.params_in_stroke(t, k).mech_frequency(),
        }
    }

    pub fn mech_frequency(&self, t: f64) -> f64 {
        self.mech_frequency_in_stroke(t, self.stroke_at(t))
    }

    /// Period average of `gamma_t`.
    pub fn mean_gamma(&self) -> f64 {
        self.strokes.iter().map(|s| s.gamma * s.duration).sum::<f64>() / self.period
    }

    /// True when `lambda_t` is identically zero by construction, not just on samples.
    pub fn lambda_vanishes(&self) -> bool {
        self.strokes.iter().all(|s| match &s.drive {
            Drive::Bosonic { lambda, .. } => {
                matches!(lambda.re, Profile::Const { value } if value == 0.0)
                    && matches!(lambda.im, Profile::Const { value } if value == 0.0)
            }
            Drive::Mechanical { omega_mech, eta } => {
                matches!(omega_mech, Profile::Const { value } if mech_pair(*value, *eta).1 == 0.0)
            }
        })
    }

    /// Constant-mass parameter shared by every stroke, if the drive is mechanical throughout.
    pub fn eta(&self) -> Option<f64> {
        let mut eta = None;
        for s in &self.strokes {
            match s.drive {
                Drive::Mechanical { eta: e, .. } => {
                    if eta.is_some_and(|x: f64| x != e) {
                        return None;
                    }
                    eta = Some(e);
                }
                Drive::Bosonic { .. } => return None,
            }
        }
        eta
    }
}

impl Stroke {
    fn knots(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut push = |p: &Profile| out.extend(p.knots());
        match &self.drive {
            Drive::Bosonic { omega, lambda } => {
                push(omega);
                push(&lambda.re);
                push(&lambda.im);
            }
            Drive::Mechanical { omega_mech, .. } => push(omega_mech),
        }
        if let Bath::Explicit { n, m } = &self.bath {
            push(n);
            push(&m.re);
            push(&m.im);
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        out.retain(|&f| f > 1e-12 && f < 1.0 - 1e-12);
        out
    }

    fn hamiltonian(&self, clock: &Clock) -> (f64, C64) {
        match &self.drive {
            Drive::Bosonic { omega, lambda } => (omega.value(clock), lambda.value(clock)),
            Drive::Mechanical { omega_mech, eta } => {
                let (w, l) = mech_pair(omega_mech.value(clock), *eta);
                (w, C64::new(l, 0.0))
            }
        }
    }
}

/// `(omega, lambda)` of a mechanical frequency at constant `eta`.
pub fn mech_pair(big_omega: f64, eta: f64) -> (f64, f64) {
    let w2 = big_omega * big_omega;
    ((eta * eta + w2) / (2.0 * eta), (w2 - eta * eta) / (2.0 * eta))
}

/// Bath parameters `(N, M)` that equilibrate `H` at temperature `temp`:
/// `N + 1/2 = omega/(2 Omega) coth(Omega/2T)`, `M = -conj(lambda)/(2 Omega) coth(Omega/2T)`.
pub fn thermal_bath_params(omega: f64, lambda: C64, temp: f64) -> Result<(f64, C64)> {
    if !(temp.is_finite() && temp > 0.0) {
        return Err(Error::param("temperature", format!("must be positive, got {temp}")));
    }
    let big2 = omega * omega - lambda.norm_sqr();
    if !(big2 > 0.0 && omega > 0.0) {
        return Err(Error::param(
            "omega",
            format!("thermal bath needs omega^2 > |lambda|^2 with omega > 0 (omega = {omega}, |lambda| = {})", lambda.norm()),
        ));
    }
    let big = big2.sqrt();
    let x = big / (2.0 * temp);
    // coth(x) - 1 = 2 / (e^{2x} - 1) keeps the low-temperature occupation accurate.
    let coth_m1 = 2.0 / (2.0 * x).exp_m1();
    let coth = 1.0 + coth_m1;
    let n = (omega - big) / (2.0 * big) + omega / (2.0 * big) * coth_m1;
    let m = -lambda.conj() / (2.0 * big) * coth;
    Ok((n, m))
}

/// A protocol in the mechanical representation: frequency profiles `Omega_t`
/// at constant `eta`, per-stroke damping and optional temperature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MechanicalProtocol {
    pub name: String,
    pub eta: f64,
    pub strokes: Vec<MechStroke>,
    /// Construction constants when built as a Carnot cycle.
    pub carnot: Option<CarnotGeometry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MechStroke {
    pub label: String,
    pub duration: f64,
    pub omega: Profile,
    pub gamma: f64,
    pub temperature: Option<f64>,
}

impl MechanicalProtocol {
    pub fn period(&self) -> f64 {
        self.strokes.iter().map(|s| s.duration).sum()
    }

    /// Same protocol with stroke durations rescaled to `period`.
    pub fn with_period(&self, period: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::param("period", format!("must be positive, got {period}")));
        }
        let scale = period / self.period();
        let mut out = self.clone();
        for s in &mut out.strokes {
            s.duration *= scale;
        }
        Ok(out)
    }

    /// One-sided frequency limits at the start and end of stroke `k`.
    pub fn stroke_corner_frequencies(&self, k: usize) -> (f64, f64) {
        let period = self.period();
        let start: f64 = self.strokes[..k].iter().map(|s| s.duration).sum();
        let s = &self.strokes[k];
        let at = |frac: f64| {
            s.omega.value(&Clock {
                phase: start + frac * s.duration,
                period,
                frac,
                duration: s.duration,
            })
        };
        (at(0.0), at(1.0))
    }
}

/// Bosonic form of a mechanical protocol.
///
/// `omega_t = (eta^2 + Omega_t^2)/(2 eta)`, `lambda_t = (Omega_t^2 - eta^2)/(2 eta)`;
/// thermal strokes get the equilibrating bath, strokes without temperature
/// get `N = M = 0`.
pub fn mechanical_to_bosonic(mech: &MechanicalProtocol) -> Result<CycleProtocol> {
    if !(mech.eta.is_finite() && mech.eta > 0.0) {
        return Err(Error::param("eta", format!("must be positive, got {}", mech.eta)));
    }
    let strokes = mech
        .strokes
        .iter()
        .map(|s| Stroke {
            label: s.label.clone(),
            duration: s.duration,
            drive: Drive::Mechanical {
                omega_mech: s.omega.clone(),
                eta: mech.eta,
            },
            gamma: s.gamma,
            bath: match s.temperature {
                Some(temperature) => Bath::Thermal { temperature },
                None => Bath::Idle,
            },
        })
        .collect();
    let p = CycleProtocol::new(mech.name.clone(), strokes)?;
    for k in 0..p.strokes.len() {
        let (a, b) = p.stroke_bounds(k);
        for i in 0..=64 {
            let t = a + (b - a) * i as f64 / 64.0;
            let w = p.mech_frequency_in_stroke(t, k);
            if !(w > 0.0) {
                return Err(Error::param(
                    "Omega",
                    format!("mechanical frequency must be positive, got {w} at t = {t}"),
                ));
            }
        }
    }
    Ok(p)
}
