//! JSON protocol configs.
//!
//! Either `{"builtin": name, "overrides": {...}, "period": T}` or an explicit
//! stroke list in the bosonic or mechanical representation. Schema errors
//! carry the JSON path of the offending field.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::builtins::{build_carnot_protocol, build_otto_protocol, build_parametric_protocol, OttoSpec, ParametricSpec, RampShape};
use super::validate::{validate_protocol, DEFAULT_SAMPLES_PER_STROKE};
use super::{mechanical_to_bosonic, Bath, ComplexProfile, CycleProtocol, Drive, MechStroke, MechanicalProtocol, Profile, Stroke};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    builtin: Option<String>,
    #[serde(default)]
    overrides: BTreeMap<String, serde_json::Value>,
    period: Option<f64>,
    representation: Option<Representation>,
    eta: Option<f64>,
    strokes: Option<Vec<RawStroke>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Representation {
    Bosonic,
    Mechanical,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStroke {
    duration: f64,
    label: Option<String>,
    omega: Option<ProfileSpec>,
    #[serde(rename = "Omega")]
    big_omega: Option<ProfileSpec>,
    lambda: Option<ComplexSpec>,
    #[serde(default)]
    gamma: f64,
    temperature: Option<f64>,
    #[serde(rename = "N")]
    n: Option<ProfileSpec>,
    #[serde(rename = "M")]
    m: Option<ComplexSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ProfileSpec {
    Number(f64),
    Profile(Profile),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ComplexSpec {
    Real(ProfileSpec),
    Parts { re: ProfileSpec, im: Option<ProfileSpec> },
}

impl ProfileSpec {
    fn resolve(self, path: &str) -> Result<Profile> {
        let p = match self {
            ProfileSpec::Number(value) => Profile::Const { value },
            ProfileSpec::Profile(p) => p,
        };
        p.check().map_err(|message| config_err(path, message))?;
        Ok(p)
    }
}

impl ComplexSpec {
    fn resolve(self, path: &str) -> Result<ComplexProfile> {
        Ok(match self {
            ComplexSpec::Real(p) => ComplexProfile::real(p.resolve(path)?),
            ComplexSpec::Parts { re, im } => ComplexProfile {
                re: re.resolve(&format!("{path}.re"))?,
                im: match im {
                    Some(im) => im.resolve(&format!("{path}.im"))?,
                    None => Profile::constant(0.0),
                },
            },
        })
    }
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// A resolved protocol together with its mechanical form when one exists.
#[derive(Debug, Clone, Serialize)]
pub struct LoadedProtocol {
    pub builtin: Option<String>,
    pub protocol: CycleProtocol,
    pub mechanical: Option<MechanicalProtocol>,
    /// Builtins whose period is fixed by their construction.
    #[serde(skip)]
    pub period_locked: bool,
}

impl LoadedProtocol {
    fn from_mechanical(builtin: Option<String>, mech: MechanicalProtocol, period_locked: bool) -> Result<Self> {
        Ok(LoadedProtocol {
            builtin,
            protocol: mechanical_to_bosonic(&mech)?,
            mechanical: Some(mech),
            period_locked,
        })
    }

    /// The same protocol rescaled to a new period.
    pub fn with_period(&self, period: f64) -> Result<Self> {
        if self.period_locked {
            return Err(config_err("period", format!("the period of `{}` is fixed by its construction", self.protocol.name)));
        }
        match &self.mechanical {
            Some(mech) => Self::from_mechanical(self.builtin.clone(), mech.with_period(period)?, false),
            None => Ok(LoadedProtocol {
                builtin: self.builtin.clone(),
                protocol: self.protocol.with_period(period)?,
                mechanical: None,
                period_locked: false,
            }),
        }
    }

    pub fn period(&self) -> f64 {
        self.protocol.period
    }
}

/// Parses, resolves and validates a JSON protocol config.
pub fn load_protocol(text: &str) -> Result<LoadedProtocol> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(if path.is_empty() { ".".to_string() } else { path }, e.into_inner().to_string())
    })?;
    let loaded = resolve(raw)?;
    let violations = validate_protocol(&loaded.protocol, DEFAULT_SAMPLES_PER_STROKE);
    if !violations.is_empty() {
        return Err(Error::InvalidProtocol(violations));
    }
    Ok(loaded)
}

pub fn load_protocol_file(path: &Path) -> Result<LoadedProtocol> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(path.display().to_string(), e.to_string()))?;
    load_protocol(&text)
}

fn resolve(raw: RawConfig) -> Result<LoadedProtocol> {
    match raw.builtin {
        Some(name) => {
            for (field, present) in [
                ("representation", raw.representation.is_some()),
                ("eta", raw.eta.is_some()),
                ("strokes", raw.strokes.is_some()),
            ] {
                if present {
                    return Err(config_err(field, "not allowed together with `builtin`"));
                }
            }
            resolve_builtin(&name, raw.overrides, raw.period)
        }
        None => {
            if !raw.overrides.is_empty() {
                return Err(config_err("overrides", "only allowed together with `builtin`"));
            }
            let strokes = raw.strokes.ok_or_else(|| config_err("strokes", "missing: give `builtin` or `strokes`"))?;
            resolve_strokes(raw.representation.unwrap_or(Representation::Bosonic), raw.eta, raw.period, strokes)
        }
    }
}

struct Overrides {
    values: BTreeMap<String, serde_json::Value>,
    builtin: String,
}

impl Overrides {
    fn number(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.values.remove(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| config_err(format!("overrides.{key}"), format!("expected a number, got {v}"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.values.keys().next() {
            None => Ok(()),
            Some(k) => Err(config_err(
                format!("overrides.{k}"),
                format!("unknown override for builtin `{}`", self.builtin),
            )),
        }
    }
}

fn resolve_builtin(name: &str, overrides: BTreeMap<String, serde_json::Value>, period: Option<f64>) -> Result<LoadedProtocol> {
    let mut o = Overrides {
        values: overrides,
        builtin: name.to_string(),
    };
    let err_at = |e: Error| match e {
        Error::InvalidParameter { name, reason } => config_err(format!("overrides.{name}"), reason),
        other => other,
    };
    let loaded = match name {
        "carnot-fig2" => {
            let big_delta = o.number("Delta", 1.0)?;
            let delta = o.number("delta", 0.85)?;
            let t_hot = o.number("T_H", 1.0)?;
            let gamma0 = o.number("gamma0", 0.03)?;
            let period = o.number("period", period.unwrap_or(1000.0))?;
            o.finish()?;
            let mech = build_carnot_protocol(big_delta, delta, t_hot, gamma0, period).map_err(err_at)?;
            LoadedProtocol::from_mechanical(Some(name.into()), mech, false)?
        }
        "otto" => {
            let d = OttoSpec::default();
            let ramp = match o.values.remove("ramp") {
                None => d.ramp.clone(),
                Some(v) => match v.as_str() {
                    Some("linear") => RampShape::Linear,
                    Some("cosine-ramp") => RampShape::CosineRamp,
                    _ => return Err(config_err("overrides.ramp", format!("expected \"linear\" or \"cosine-ramp\", got {v}"))),
                },
            };
            let spec = OttoSpec {
                omega_hot: o.number("Omega_hot", d.omega_hot)?,
                omega_cold: o.number("Omega_cold", d.omega_cold)?,
                t_hot: o.number("T_H", d.t_hot)?,
                t_cold: o.number("T_C", d.t_cold)?,
                gamma_hot: o.number("gamma_hot", d.gamma_hot)?,
                gamma_cold: o.number("gamma_cold", d.gamma_cold)?,
                eta: o.number("eta", d.eta)?,
                durations: [o.number("period", period.unwrap_or(d.durations.iter().sum()))? / 4.0; 4],
                ramp,
            };
            o.finish()?;
            LoadedProtocol::from_mechanical(Some(name.into()), build_otto_protocol(&spec).map_err(err_at)?, false)?
        }
        "parametric" => {
            if period.is_some() || o.values.contains_key("period") {
                return Err(config_err("period", "the parametric builtin has period pi/omega0"));
            }
            let d = ParametricSpec::default();
            let spec = ParametricSpec {
                omega0: o.number("omega0", d.omega0)?,
                epsilon: o.number("epsilon", d.epsilon)?,
                gamma: o.number("gamma", d.gamma)?,
                temperature: o.number("temperature", d.temperature)?,
            };
            o.finish()?;
            LoadedProtocol::from_mechanical(Some(name.into()), build_parametric_protocol(&spec).map_err(err_at)?, true)?
        }
        other => {
            return Err(config_err(
                "builtin",
                format!("unknown builtin `{other}`; expected one of carnot-fig2, otto, parametric"),
            ))
        }
    };
    Ok(loaded)
}

fn resolve_strokes(repr: Representation, eta: Option<f64>, period: Option<f64>, raw: Vec<RawStroke>) -> Result<LoadedProtocol> {
    if raw.is_empty() {
        return Err(config_err("strokes", "at least one stroke is required"));
    }
    let eta = match (repr, eta) {
        (Representation::Mechanical, Some(e)) if e.is_finite() && e > 0.0 => Some(e),
        (Representation::Mechanical, Some(e)) => return Err(config_err("eta", format!("must be positive, got {e}"))),
        (Representation::Mechanical, None) => return Err(config_err("eta", "required for the mechanical representation")),
        (Representation::Bosonic, Some(_)) => return Err(config_err("eta", "only allowed for the mechanical representation")),
        (Representation::Bosonic, None) => None,
    };
    let mut strokes = Vec::with_capacity(raw.len());
    let mut mech_strokes = Vec::with_capacity(raw.len());
    let mut mech_ok = true;
    for (i, s) in raw.into_iter().enumerate() {
        let at = |field: &str| format!("strokes[{i}].{field}");
        if !(s.duration.is_finite() && s.duration > 0.0) {
            return Err(config_err(at("duration"), format!("must be positive, got {}", s.duration)));
        }
        if !(s.gamma.is_finite() && s.gamma >= 0.0) {
            return Err(config_err(at("gamma"), format!("must be non-negative, got {}", s.gamma)));
        }
        let label = s.label.unwrap_or_else(|| format!("stroke-{}", i + 1));
        let drive = match repr {
            Representation::Bosonic => {
                if s.big_omega.is_some() {
                    return Err(config_err(at("Omega"), "use `omega`/`lambda` in the bosonic representation"));
                }
                let omega = s.omega.ok_or_else(|| config_err(at("omega"), "missing"))?.resolve(&at("omega"))?;
                let lambda = match s.lambda {
                    Some(l) => l.resolve(&at("lambda"))?,
                    None => ComplexProfile::real(Profile::constant(0.0)),
                };
                Drive::Bosonic { omega, lambda }
            }
            Representation::Mechanical => {
                if s.omega.is_some() || s.lambda.is_some() {
                    return Err(config_err(at("omega"), "use `Omega` in the mechanical representation"));
                }
                let omega_mech = s.big_omega.ok_or_else(|| config_err(at("Omega"), "missing"))?.resolve(&at("Omega"))?;
                Drive::Mechanical {
                    omega_mech,
                    eta: eta.unwrap(),
                }
            }
        };
        let bath = match (s.temperature, s.n, s.m) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(config_err(at("temperature"), "give either `temperature` or `N`/`M`, not both"))
            }
            (Some(temperature), None, None) => {
                if !(temperature.is_finite() && temperature > 0.0) {
                    return Err(config_err(at("temperature"), format!("must be positive, got {temperature}")));
                }
                Bath::Thermal { temperature }
            }
            (None, None, None) => {
                if s.gamma > 0.0 {
                    return Err(config_err(at("temperature"), "a damped stroke needs `temperature` or `N`"));
                }
                Bath::Idle
            }
            (None, n, m) => Bath::Explicit {
                n: match n {
                    Some(n) => n.resolve(&at("N"))?,
                    None => return Err(config_err(at("N"), "missing (required when `M` is given)")),
                },
                m: match m {
                    Some(m) => m.resolve(&at("M"))?,
                    None => ComplexProfile::real(Profile::constant(0.0)),
                },
            },
        };
        if let Drive::Mechanical { omega_mech, .. } = &drive {
            let temperature = match &bath {
                Bath::Thermal { temperature } => Some(*temperature),
                Bath::Idle => None,
                Bath::Explicit { .. } => {
                    mech_ok = false;
                    None
                }
            };
            mech_strokes.push(MechStroke {
                label: label.clone(),
                duration: s.duration,
                omega: omega_mech.clone(),
                gamma: s.gamma,
                temperature,
            });
        }
        strokes.push(Stroke {
            label,
            duration: s.duration,
            drive,
            gamma: s.gamma,
            bath,
        });
    }
    let total: f64 = strokes.iter().map(|s| s.duration).sum();
    if let Some(period) = period {
        if (period - total).abs() > 1e-9 * period.abs().max(total) {
            return Err(config_err("period", format!("stroke durations sum to {total}, not {period}")));
        }
    }
    let protocol = CycleProtocol::new("custom", strokes)?;
    let mechanical = match (eta, mech_ok) {
        (Some(eta), true) => Some(MechanicalProtocol {
            name: "custom".into(),
            eta,
            strokes: mech_strokes,
            carnot: None,
        }),
        _ => None,
    };
    Ok(LoadedProtocol {
        builtin: None,
        protocol,
        mechanical,
        period_locked: false,
    })
}
