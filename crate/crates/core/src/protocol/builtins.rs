use std::f64::consts::PI;

use serde::Serialize;

use super::{Bath, ComplexProfile, CycleProtocol, Drive, MechStroke, MechanicalProtocol, Profile, Stroke};
use crate::error::{Error, Result};
use crate::ode::C64;

pub const BUILTIN_NAMES: [&str; 3] = ["carnot-fig2", "otto", "parametric"];

/// Constants of the four-stroke Carnot construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarnotGeometry {
    pub big_delta: f64,
    pub delta: f64,
    pub t_hot: f64,
    pub t_cold: f64,
    pub gamma0: f64,
}

impl CarnotGeometry {
    /// Modulation depth on the adiabatic strokes, `Delta delta / (Delta + delta)`.
    pub fn inner_delta(&self) -> f64 {
        self.big_delta * self.delta / (self.big_delta + self.delta)
    }

    /// Corner frequencies `(Omega_a, Omega_b, Omega_c, Omega_d)`.
    pub fn corners(&self) -> [f64; 4] {
        let d = self.big_delta;
        [d + self.delta, d, d - self.inner_delta(), d]
    }

    pub fn carnot_efficiency(&self) -> f64 {
        1.0 - self.t_cold / self.t_hot
    }
}

/// Carnot cycle `Omega(t) = Delta + delta_t cos^3(2 pi t / T)` with equal strokes:
/// hot isotherm, isentropic expansion, cold isotherm, isentropic compression.
/// The cold temperature and the inner modulation depth are fixed by the
/// quasi-static reversibility ratios; `eta = Delta`.
pub fn build_carnot_protocol(big_delta: f64, delta: f64, t_hot: f64, gamma0: f64, period: f64) -> Result<MechanicalProtocol> {
    if !(big_delta.is_finite() && big_delta > 0.0) {
        return Err(Error::param("Delta", format!("must be positive, got {big_delta}")));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::param("delta", format!("must be non-negative, got {delta}")));
    }
    if delta >= big_delta {
        return Err(Error::param(
            "delta",
            format!("delta = {delta} >= Delta = {big_delta} drives the frequency to zero"),
        ));
    }
    if !(t_hot.is_finite() && t_hot > 0.0) {
        return Err(Error::param("T_H", format!("must be positive, got {t_hot}")));
    }
    if !(gamma0.is_finite() && gamma0 >= 0.0) {
        return Err(Error::param("gamma0", format!("must be non-negative, got {gamma0}")));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::param("period", format!("must be positive, got {period}")));
    }
    let geometry = CarnotGeometry {
        big_delta,
        delta,
        t_hot,
        t_cold: big_delta * t_hot / (big_delta + delta),
        gamma0,
    };
    let inner = geometry.inner_delta();
    let stroke = |label: &str, amplitude: f64, gamma: f64, temperature: Option<f64>| MechStroke {
        label: label.to_string(),
        duration: period / 4.0,
        omega: Profile::Cos3 { base: big_delta, amplitude },
        gamma,
        temperature,
    };
    Ok(MechanicalProtocol {
        name: "carnot".into(),
        eta: big_delta,
        strokes: vec![
            stroke("isothermal-hot", delta, gamma0, Some(t_hot)),
            stroke("isentropic-expansion", inner, 0.0, None),
            stroke("isothermal-cold", inner, gamma0, Some(geometry.t_cold)),
            stroke("isentropic-compression", delta, 0.0, None),
        ],
        carnot: Some(geometry),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RampShape {
    Linear,
    CosineRamp,
    /// Progress values in `[0, 1]` at stroke fractions `s`; must start at 0 and end at 1.
    Table { s: Vec<f64>, progress: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OttoSpec {
    pub omega_hot: f64,
    pub omega_cold: f64,
    pub ramp: RampShape,
    pub t_hot: f64,
    pub t_cold: f64,
    pub gamma_hot: f64,
    pub gamma_cold: f64,
    /// Durations of (hot contact, expansion, cold contact, compression).
    pub durations: [f64; 4],
    pub eta: f64,
}

impl Default for OttoSpec {
    fn default() -> Self {
        OttoSpec {
            omega_hot: 2.0,
            omega_cold: 1.0,
            ramp: RampShape::CosineRamp,
            t_hot: 2.0,
            t_cold: 0.5,
            gamma_hot: 0.05,
            gamma_cold: 0.05,
            durations: [100.0; 4],
            eta: 1.0,
        }
    }
}

fn ramp_profile(shape: &RampShape, from: f64, to: f64) -> Result<Profile> {
    Ok(match shape {
        RampShape::Linear => Profile::Linear { from, to },
        RampShape::CosineRamp => Profile::CosineRamp { from, to },
        RampShape::Table { s, progress } => {
            if progress.first() != Some(&0.0) || progress.last() != Some(&1.0) {
                return Err(Error::param(
                    "ramp",
                    format!("ramp table must run from progress 0 to 1, got {progress:?}"),
                ));
            }
            let p = Profile::Table {
                s: s.clone(),
                values: progress.iter().map(|v| from + (to - from) * v).collect(),
            };
            p.check().map_err(|e| Error::param("ramp", e))?;
            p
        }
    })
}

/// Otto cycle: thermalize at `omega_hot`, ramp to `omega_cold` unitarily,
/// thermalize at `omega_cold`, ramp back.
pub fn build_otto_protocol(spec: &OttoSpec) -> Result<MechanicalProtocol> {
    for (name, v) in [
        ("omega_hot", spec.omega_hot),
        ("omega_cold", spec.omega_cold),
        ("T_H", spec.t_hot),
        ("T_C", spec.t_cold),
        ("eta", spec.eta),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(name, format!("must be positive, got {v}")));
        }
    }
    if spec.durations.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::param("durations", format!("must be positive, got {:?}", spec.durations)));
    }
    let (hot, cold) = (spec.omega_hot, spec.omega_cold);
    let down = ramp_profile(&spec.ramp, hot, cold)?;
    let up = ramp_profile(&spec.ramp, cold, hot)?;
    let mk = |label: &str, duration: f64, omega: Profile, gamma: f64, temperature: Option<f64>| MechStroke {
        label: label.into(),
        duration,
        omega,
        gamma,
        temperature,
    };
    let d = spec.durations;
    Ok(MechanicalProtocol {
        name: "otto".into(),
        eta: spec.eta,
        strokes: vec![
            mk("isochoric-hot", d[0], Profile::constant(hot), spec.gamma_hot, Some(spec.t_hot)),
            mk("unitary-expansion", d[1], down, 0.0, None),
            mk("isochoric-cold", d[2], Profile::constant(cold), spec.gamma_cold, Some(spec.t_cold)),
            mk("unitary-compression", d[3], up, 0.0, None),
        ],
        carnot: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParametricSpec {
    pub omega0: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub temperature: f64,
}

impl Default for ParametricSpec {
    fn default() -> Self {
        ParametricSpec {
            omega0: 1.0,
            epsilon: 0.5,
            gamma: 0.1,
            temperature: 0.7,
        }
    }
}

/// Single-stroke parametric drive `Omega^2 = Omega0^2 (1 + epsilon cos 2 Omega0 t)`
/// with period `pi / Omega0` (principal resonance), `eta = Omega0`, and a
/// thermal bath of constant damping.
pub fn build_parametric_protocol(spec: &ParametricSpec) -> Result<MechanicalProtocol> {
    let profile = Profile::Parametric {
        omega0: spec.omega0,
        epsilon: spec.epsilon,
    };
    profile.check().map_err(|e| Error::param("epsilon", e))?;
    if !(spec.gamma.is_finite() && spec.gamma >= 0.0) {
        return Err(Error::param("gamma", format!("must be non-negative, got {}", spec.gamma)));
    }
    if !(spec.temperature.is_finite() && spec.temperature > 0.0) {
        return Err(Error::param("temperature", format!("must be positive, got {}", spec.temperature)));
    }
    Ok(MechanicalProtocol {
        name: "parametric".into(),
        eta: spec.omega0,
        strokes: vec![MechStroke {
            label: "driven".into(),
            duration: PI / spec.omega0,
            omega: profile,
            gamma: spec.gamma,
            temperature: Some(spec.temperature),
        }],
        carnot: None,
    })
}

/// Time-independent bosonic protocol with an explicit bath.
pub fn constant_protocol(period: f64, omega: f64, lambda: C64, gamma: f64, n: f64, m: C64) -> Result<CycleProtocol> {
    CycleProtocol::new(
        "constant",
        vec![Stroke {
            label: "constant".into(),
            duration: period,
            drive: Drive::Bosonic {
                omega: Profile::constant(omega),
                lambda: ComplexProfile::constant(lambda),
            },
            gamma,
            bath: Bath::Explicit {
                n: Profile::constant(n),
                m: ComplexProfile::constant(m),
            },
        }],
    )
}
