//! Generalized rotating frame and the Floquet Liouvillian.
//!
//! The frame `W = V U` removes all time dependence from the Liouvillian:
//! `U` (functions `r0, r1, r2`) leaves `Lambda_bar H0 + D~_t`, and `V`
//! (functions `G2, g~3, g~4`) reduces that to `Lambda_bar H0 + gamma_bar D1`.
//! Undoing the frame at time `t` gives the Floquet Liouvillian, whose
//! steady state is the limit-cycle state at phase `t`.
//!
//! Closed-form limit-cycle moments use the `g~` representation, which is
//! regular everywhere; the `G3 = z g~3`, `G4 = g~4 / z` forms are only
//! evaluated as cross-checks where `|z|` exceeds [`Z_GUARD`].

mod dissipative;
mod pinney;
mod unitary;

use serde::Serialize;

use crate::dynamics::SecondMoments;
use crate::error::{Error, Result};
use crate::ode::{periodic_linear_solution, PeriodicSolution, C64};
use crate::protocol::CycleProtocol;

pub use dissipative::{DissipativeDiagnostics, DissipativeFrame, DissipativeSample, Z_GUARD};
pub use pinney::{pinney_crosscheck, PinneyReport};
pub use unitary::{RiccatiBranch, UnitaryDiagnostics, UnitaryFrame, UnitarySample, DEGENERATE_ROOT_SEPARATION};

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// `|Im Lambda_bar|` below this fraction of `max(1, |Lambda_bar|)` counts as zero.
pub const CLASSIFICATION_TOL: f64 = 1e-9;

/// Unitary stability class of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sigma {
    /// Unitarily stable: `Lambda_bar` real.
    US,
    /// Unitarily unstable: `Lambda_bar` has an imaginary part.
    UU,
}

impl Sigma {
    /// `sigma^2`: 1 for US, -1 for UU.
    pub fn squared(self) -> f64 {
        match self {
            Sigma::US => 1.0,
            Sigma::UU => -1.0,
        }
    }
}

pub(crate) fn classify(lambda_bar: C64) -> Sigma {
    if lambda_bar.im.abs() < CLASSIFICATION_TOL * lambda_bar.norm().max(1.0) {
        Sigma::US
    } else {
        Sigma::UU
    }
}

/// Parameters of the Floquet Liouvillian at phase `at_time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloquetParams {
    #[serde(rename = "omegaF")]
    pub omega_f: C64,
    #[serde(rename = "lambdaF")]
    pub lambda_f: C64,
    #[serde(rename = "lambdaFp")]
    pub lambda_fp: C64,
    #[serde(rename = "NF")]
    pub n_f: C64,
    #[serde(rename = "MF")]
    pub m_f: C64,
    #[serde(rename = "MFp")]
    pub m_fp: C64,
    #[serde(rename = "gammaBar")]
    pub gamma_bar: f64,
    pub at_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    #[serde(rename = "gammaBar")]
    pub gamma_bar: f64,
    #[serde(rename = "imLambdaBar")]
    pub im_lambda_bar: f64,
    /// `2 |Im Lambda_bar| / gamma_bar`.
    pub ratio: f64,
    pub stable: bool,
    pub sigma: Sigma,
}

impl UnitaryFrame {
    /// Limit-cycle stability: `gamma_bar > 2 |Im Lambda_bar|`.
    pub fn stability(&self) -> Result<StabilityReport> {
        let gamma_bar = self.protocol.mean_gamma();
        if !(gamma_bar > 0.0) {
            return Err(Error::NoDissipation);
        }
        let ratio = 2.0 * self.lambda_bar.im.abs() / gamma_bar;
        Ok(StabilityReport {
            gamma_bar,
            im_lambda_bar: self.lambda_bar.im,
            ratio,
            stable: ratio < 1.0,
            sigma: self.sigma,
        })
    }
}

/// Limit-cycle moments at one phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitCycleMoments {
    pub t: f64,
    pub moments: SecondMoments,
    /// `(n, m, mbar)` before projecting `n` onto the reals.
    pub raw: [C64; 3],
    /// False when the formal periodic solution is not an attractor.
    pub stable: bool,
}

/// Both frames of one protocol.
#[derive(Debug, Clone)]
pub struct FloquetFrames {
    pub dissipative: DissipativeFrame,
    pub stability: StabilityReport,
}

impl FloquetFrames {
    pub fn solve(p: &CycleProtocol, tol: f64) -> Result<Self> {
        let unitary = UnitaryFrame::solve(p, tol)?;
        Self::from_unitary(&unitary)
    }

    pub fn from_unitary(unitary: &UnitaryFrame) -> Result<Self> {
        let stability = unitary.stability()?;
        let dissipative = DissipativeFrame::solve(unitary)?;
        Ok(FloquetFrames { dissipative, stability })
    }

    pub fn unitary(&self) -> &UnitaryFrame {
        self.dissipative.unitary()
    }

    pub fn protocol(&self) -> &CycleProtocol {
        self.unitary().protocol()
    }

    pub fn lambda_bar(&self) -> C64 {
        self.dissipative.lambda_bar()
    }

    pub fn gamma_bar(&self) -> f64 {
        self.dissipative.gamma_bar
    }

    pub fn sigma(&self) -> Sigma {
        self.dissipative.sigma()
    }

    pub fn floquet_parameters(&self, t: f64) -> Result<FloquetParams> {
        Ok(floquet_parameters_from(&self.dissipative.at(t)?, self.lambda_bar(), self.gamma_bar()))
    }

    pub fn limit_cycle_moments(&self, t: f64) -> Result<LimitCycleMoments> {
        let s = self.dissipative.at(t)?;
        Ok(self.moments_from(t, &s))
    }

    pub(crate) fn moments_from(&self, t: f64, s: &DissipativeSample) -> LimitCycleMoments {
        let h = s.moments_half;
        LimitCycleMoments {
            t,
            moments: s.moments(),
            raw: [h[0] - 0.5, h[1], h[2]],
            stable: self.stability.stable,
        }
    }

    /// Limit-cycle moments on the adaptive grid.
    pub fn limit_cycle_samples(&self) -> Vec<LimitCycleMoments> {
        self.dissipative
            .samples()
            .iter()
            .map(|s| self.moments_from(s.unitary.t, s))
            .collect()
    }
}

/// Floquet parameters from frame values at one instant.
pub fn floquet_parameters_from(s: &DissipativeSample, lambda_bar: C64, gamma_bar: f64) -> FloquetParams {
    let i = C64::i();
    let u = &s.unitary;
    let (r1, r2, z, j, r1p) = (u.r1, u.r2, u.z, u.j, u.r1p);
    let plus = gamma_bar + i * 2.0 * lambda_bar;
    let minus = gamma_bar - i * 2.0 * lambda_bar;
    let (g2, g3, g4) = (s.g2, s.gt3, s.gt4);
    let n_half = j * g2 - i * 2.0 / gamma_bar * (r1 * z * plus * g3 - r2 * minus * g4);
    FloquetParams {
        omega_f: lambda_bar * j,
        lambda_f: i * 4.0 * lambda_bar * r1,
        lambda_fp: -i * 4.0 * lambda_bar * r1p,
        n_f: n_half - 0.5,
        m_f: i * 4.0 * r1p * g2 + (z * z * plus * g3 - r2 * r2 * 4.0 * minus * g4) / gamma_bar,
        m_fp: -i * 4.0 * r1 * g2 + (-r1 * r1 * 4.0 * plus * g3 + minus * g4) / gamma_bar,
        gamma_bar,
        at_time: u.t,
    }
}

/// Steady state `(n, m, mbar)` of a quadratic Liouvillian with Floquet
/// parameters `fp`, as complex numbers.
pub fn steady_state_covariances_raw(fp: &FloquetParams) -> Result<[C64; 3]> {
    let i = C64::i();
    let g = fp.gamma_bar;
    let (w, l, lp) = (fp.omega_f, fp.lambda_f, fp.lambda_fp);
    let (nf, mf, mfp) = (fp.n_f, fp.m_f, fp.m_fp);
    let den = g * g + w * w * 4.0 - l * lp * 4.0;
    let scale = g * g + 4.0 * w.norm_sqr() + 4.0 * (l * lp).norm();
    if !(den.norm() > 1e-13 * scale) {
        return Err(Error::DegenerateSteadyState { denominator: den.norm() });
    }
    let n_half = ((nf + 0.5) * (g * g + w * w * 4.0) + mf * l * (w * 2.0 + i * g) + mfp * lp * (w * 2.0 - i * g)) / den;
    let m = (mf * (g * g - i * 2.0 * g * w - l * lp * 2.0) - mfp * lp * lp * 2.0 - lp * (nf * 2.0 + 1.0) * (w * 2.0 + i * g)) / den;
    let mbar = (mfp * (g * g + i * 2.0 * g * w - l * lp * 2.0) - mf * l * l * 2.0 - l * (nf * 2.0 + 1.0) * (w * 2.0 - i * g)) / den;
    Ok([n_half - 0.5, m, mbar])
}

pub fn steady_state_covariances(fp: &FloquetParams) -> Result<SecondMoments> {
    Ok(SecondMoments::from_state(&steady_state_covariances_raw(fp)?))
}

/// One eigenvalue `-gamma_bar n/2 + 2 i Lambda_bar k` of the rotating-frame generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumLine {
    pub n: usize,
    pub k: f64,
    pub eigenvalue: C64,
}

/// Eigenvalues of `Lambda_bar H0 + gamma_bar D1` for `n <= n_max`,
/// `k = -n/2, -n/2 + 1, ..., n/2`.
pub fn rotating_frame_spectrum(lambda_bar: C64, gamma_bar: f64, n_max: usize) -> Vec<SpectrumLine> {
    let mut out = Vec::new();
    for n in 0..=n_max {
        for step in 0..=n {
            let k = step as f64 - 0.5 * n as f64;
            let eigenvalue = C64::new(-0.5 * gamma_bar * n as f64, 0.0) + C64::i() * 2.0 * lambda_bar * k;
            out.push(SpectrumLine { n, k, eigenvalue });
        }
    }
    out
}

/// Limit cycle of a protocol without Hamiltonian (`omega = lambda = 0`):
/// `N_F' + gamma N_F = gamma N`, `M_F' + gamma M_F = gamma M`.
#[derive(Debug, Clone)]
pub struct DissipativeOnlyCycle {
    protocol: CycleProtocol,
    tol: f64,
    pub n_f: PeriodicSolution,
    pub m_f: PeriodicSolution,
}

pub fn dissipative_only_limit_cycle(p: &CycleProtocol, tol: f64) -> Result<DissipativeOnlyCycle> {
    for k in 0..p.strokes.len() {
        let (start, end) = p.stroke_bounds(k);
        for i in 0..=32 {
            let t = start + (end - start) * i as f64 / 32.0;
            let q = p.params_in_stroke(t, k);
            if q.omega != 0.0 || q.lambda != ZERO {
                return Err(Error::InvalidRequest(format!(
                    "dissipation-only limit cycle needs omega = lambda = 0, found omega = {}, lambda = {} at t = {t}",
                    q.omega, q.lambda
                )));
            }
        }
    }
    let gamma = |t: f64, k: usize| C64::new(p.params_on(t, k).gamma, 0.0);
    let n_f = periodic_linear_solution(gamma, |t, k| {
        let q = p.params_on(t, k);
        C64::new(q.gamma * q.n, 0.0)
    }, p.schedule(), tol)?;
    let m_f = periodic_linear_solution(gamma, |t, k| {
        let q = p.params_on(t, k);
        q.m * q.gamma
    }, p.schedule(), tol)?;
    Ok(DissipativeOnlyCycle {
        protocol: p.clone(),
        tol,
        n_f,
        m_f,
    })
}

impl DissipativeOnlyCycle {
    /// `(N_F(t), M_F(t))`, re-integrated from the nearest grid point.
    pub fn at(&self, t: f64) -> Result<(C64, C64)> {
        let p = &self.protocol;
        let phase = p.schedule().phase(t);
        let rhs_n = |t: f64, k: usize, x: &[C64; 1]| {
            let q = p.params_on(t, k);
            [(C64::new(q.n, 0.0) - x[0]) * q.gamma]
        };
        let rhs_m = |t: f64, k: usize, x: &[C64; 1]| {
            let q = p.params_on(t, k);
            [(q.m - x[0]) * q.gamma]
        };
        let n = self.n_f.trajectory.resume(rhs_n, phase, self.tol)?.1[0];
        let m = self.m_f.trajectory.resume(rhs_m, phase, self.tol)?.1[0];
        Ok((n, m))
    }

    pub fn moments(&self, t: f64) -> Result<SecondMoments> {
        let (n, m) = self.at(t)?;
        Ok(SecondMoments {
            n: n.re,
            m,
            mbar: m.conj(),
        })
    }
}
