use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Clock;
use crate::ode::C64;

/// A real scalar function of time within one stroke.
///
/// `linear`, `cosine-ramp` and `table` run on the stroke's own clock
/// (fraction of the stroke elapsed); `cos3`, `cosine` and `parametric` use
/// the global phase so they stay continuous across strokes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    Const { value: f64 },
    Linear { from: f64, to: f64 },
    /// `from + (to - from)(1 - cos(pi s))/2`.
    CosineRamp { from: f64, to: f64 },
    /// `base + amplitude cos^3(2 pi t / T)`.
    Cos3 { base: f64, amplitude: f64 },
    /// `mean + amplitude cos(2 pi t / T + shift)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        shift: f64,
    },
    /// `omega0 sqrt(1 + epsilon cos(2 omega0 t))`.
    Parametric { omega0: f64, epsilon: f64 },
    /// Piecewise linear in the stroke fraction; `s` runs from 0 to 1.
    Table { s: Vec<f64>, values: Vec<f64> },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Const { value }
    }

    pub(crate) fn value(&self, c: &Clock) -> f64 {
        match self {
            Profile::Const { value } => *value,
            Profile::Linear { from, to } => from + (to - from) * c.frac,
            Profile::CosineRamp { from, to } => from + (to - from) * 0.5 * (1.0 - (PI * c.frac).cos()),
            Profile::Cos3 { base, amplitude } => base + amplitude * (2.0 * PI * c.phase / c.period).cos().powi(3),
            Profile::Cosine { mean, amplitude, shift } => mean + amplitude * (2.0 * PI * c.phase / c.period + shift).cos(),
            Profile::Parametric { omega0, epsilon } => omega0 * (1.0 + epsilon * (2.0 * omega0 * c.phase).cos()).sqrt(),
            Profile::Table { s, values } => {
                let i = table_interval(s, c.frac);
                let w = (c.frac - s[i]) / (s[i + 1] - s[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
        }
    }

    pub(crate) fn derivative(&self, c: &Clock) -> f64 {
        let k = 2.0 * PI / c.period;
        match self {
            Profile::Const { .. } => 0.0,
            Profile::Linear { from, to } => (to - from) / c.duration,
            Profile::CosineRamp { from, to } => (to - from) * 0.5 * PI * (PI * c.frac).sin() / c.duration,
            Profile::Cos3 { amplitude, .. } => {
                let x = k * c.phase;
                -3.0 * amplitude * x.cos().powi(2) * x.sin() * k
            }
            Profile::Cosine { amplitude, shift, .. } => -amplitude * k * (k * c.phase + shift).sin(),
            Profile::Parametric { omega0, epsilon } => {
                let x = 2.0 * omega0 * c.phase;
                let root = (1.0 + epsilon * x.cos()).sqrt();
                -omega0 * epsilon * omega0 * x.sin() / root
            }
            Profile::Table { s, values } => {
                let i = table_interval(s, c.frac);
                (values[i + 1] - values[i]) / ((s[i + 1] - s[i]) * c.duration)
            }
        }
    }

    /// Interior derivative discontinuities, as stroke fractions.
    pub(crate) fn knots(&self) -> Vec<f64> {
        match self {
            Profile::Table { s, .. } => s.iter().copied().filter(|&x| x > 0.0 && x < 1.0).collect(),
            _ => Vec::new(),
        }
    }

    /// Shape errors that do not depend on time.
    pub fn check(&self) -> Result<(), String> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match self {
            Profile::Const { value } => finite(&[*value]),
            Profile::Linear { from, to } | Profile::CosineRamp { from, to } => finite(&[*from, *to]),
            Profile::Cos3 { base, amplitude } => finite(&[*base, *amplitude]),
            Profile::Cosine { mean, amplitude, shift } => finite(&[*mean, *amplitude, *shift]),
            Profile::Parametric { omega0, epsilon } => {
                if !(finite(&[*omega0, *epsilon]) && *omega0 > 0.0 && epsilon.abs() < 1.0) {
                    return Err("parametric profile needs omega0 > 0 and |epsilon| < 1".into());
                }
                true
            }
            Profile::Table { s, values } => {
                if s.len() < 2 || s.len() != values.len() {
                    return Err("table needs at least two points and equal-length `s` and `values`".into());
                }
                if s[0] != 0.0 || *s.last().unwrap() != 1.0 || s.windows(2).any(|w| w[1] <= w[0]) {
                    return Err("table `s` must increase strictly from 0 to 1".into());
                }
                finite(s) && finite(values)
            }
        };
        if ok {
            Ok(())
        } else {
            Err("profile parameters must be finite".into())
        }
    }

    /// Value at the start and end of a stroke spanning `[start, start + duration]`.
    pub fn endpoints(&self, start: f64, duration: f64, period: f64) -> (f64, f64) {
        let at = |frac: f64| {
            self.value(&Clock {
                phase: start + frac * duration,
                period,
                frac,
                duration,
            })
        };
        (at(0.0), at(1.0))
    }
}

fn table_interval(s: &[f64], frac: f64) -> usize {
    let i = s.partition_point(|&x| x <= frac);
    i.clamp(1, s.len() - 1) - 1
}

/// A complex function of time as two real profiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexProfile {
    pub re: Profile,
    pub im: Profile,
}

impl ComplexProfile {
    pub fn real(p: Profile) -> Self {
        ComplexProfile {
            re: p,
            im: Profile::constant(0.0),
        }
    }

    pub fn constant(z: C64) -> Self {
        ComplexProfile {
            re: Profile::constant(z.re),
            im: Profile::constant(z.im),
        }
    }

    pub(crate) fn value(&self, c: &Clock) -> C64 {
        C64::new(self.re.value(c), self.im.value(c))
    }

    pub(crate) fn derivative(&self, c: &Clock) -> C64 {
        C64::new(self.re.derivative(c), self.im.derivative(c))
    }
}
