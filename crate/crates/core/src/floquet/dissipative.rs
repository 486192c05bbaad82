//! Dissipative part of the frame: `G2`, `g~3`, `g~4` and the work integral.
//!
//! Every quantity is co-integrated with the unitary frame state so nothing
//! is interpolated. The state is
//! `[x, y, r1, int Lambda, G2, g~3, g~4, int gamma, W]` where `W` accumulates
//! `<dH/dt>` along the limit cycle.

use serde::Serialize;

use super::unitary::{UnitaryFrame, UnitarySample};
use super::{Sigma, ZERO};
use crate::dynamics::SecondMoments;
use crate::error::{Error, Result};
use crate::ode::{periodic_initial_value, ComplexTrajectory, Integrator, C64};
use crate::protocol::CycleProtocol;

/// `|z|` below which the `G3 = z g~3`, `G4 = g~4 / z` forms are not evaluated.
pub const Z_GUARD: f64 = 1e-6;

pub(crate) type DState = [C64; 9];

/// Limit-cycle moments `(n + 1/2, m, mbar)` from the regular `g~` form.
pub(crate) fn cycle_moments(r1: C64, r2: C64, g2: C64, g3: C64, g4: C64) -> [C64; 3] {
    let i = C64::i();
    let z = 1.0 + r1 * r2 * 4.0;
    let j = z * 2.0 - 1.0;
    let r1p = r2 * z;
    [
        j * g2 - i * 2.0 * r1 * z * g3 + i * 2.0 * r2 * g4,
        i * 4.0 * r1p * g2 + z * z * g3 - r2 * r2 * 4.0 * g4,
        -i * 4.0 * r1 * g2 - r1 * r1 * 4.0 * g3 + g4,
    ]
}

pub(crate) fn dissipative_rhs(p: &CycleProtocol) -> impl Fn(f64, usize, &DState) -> DState + '_ {
    move |t, piece, s| {
        let q = p.params_on(t, piece);
        let rates = p.rates_on(t, piece);
        let (w, l, g) = (C64::new(q.omega, 0.0), q.lambda, q.gamma);
        let (bn, bm) = (q.n + 0.5, q.m);
        let i = C64::i();
        let r2 = s[0] / s[1];
        let r1 = s[2];
        let lam = w + i * l * 2.0 * r2;
        let z = 1.0 + r1 * r2 * 4.0;
        let j = z * 2.0 - 1.0;
        let r1p = r2 * z;
        let n_tilde_half = j * bn + i * 2.0 * bm * r1 - i * 2.0 * bm.conj() * r1p;
        let src3 = bm - i * 4.0 * r2 * bn - bm.conj() * 4.0 * r2 * r2;
        let src4 = bm.conj() * z * z + i * 4.0 * r1 * z * bn - bm * 4.0 * r1 * r1;
        let mom = cycle_moments(r1, r2, s[4], s[5], s[6]);
        let power = mom[0] * rates.omega_dot + (rates.lambda_dot * mom[1] + rates.lambda_dot.conj() * mom[2]) * 0.5;
        [
            -i * w * s[0] - l.conj() * 0.5 * s[1],
            -l * 2.0 * s[0] + i * w * s[1],
            i * w * 2.0 * r1 - l * 4.0 * r1 * r2 - l * 0.5,
            lam,
            (n_tilde_half - s[4]) * g,
            -(g + i * 2.0 * lam) * s[5] + src3 * g,
            -(g - i * 2.0 * lam) * s[6] + src4 * g,
            C64::new(g, 0.0),
            power,
        ]
    }
}

/// Dissipative-frame quantities at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipativeSample {
    pub unitary: UnitarySample,
    pub g2: C64,
    pub gt3: C64,
    pub gt4: C64,
    /// `z g~3`, absent where `|z|` is below [`Z_GUARD`].
    pub g3_big: Option<C64>,
    /// `g~4 / z`, absent where `|z|` is below [`Z_GUARD`].
    pub g4_big: Option<C64>,
    pub n_tilde: C64,
    pub m_tilde: C64,
    pub mp_tilde: C64,
    pub c1: C64,
    pub c2: C64,
    pub c3: C64,
    pub c4: C64,
    /// `int_0^t <dH/dt>` along the limit cycle.
    pub work: C64,
    /// `(n + 1/2, m, mbar)` of the limit cycle.
    pub moments_half: [C64; 3],
    /// Residual of the `G3` equation written with `nu_t`, where evaluable.
    pub g3_nu_residual: Option<f64>,
    /// Spread between the three closed forms of `nu_t`, where evaluable.
    pub nu_form_defect: Option<f64>,
}

impl DissipativeSample {
    pub fn moments(&self) -> SecondMoments {
        SecondMoments {
            n: self.moments_half[0].re - 0.5,
            m: self.moments_half[1],
            mbar: self.moments_half[2],
        }
    }
}

/// Worst defects of the dissipative-frame identities over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipativeDiagnostics {
    /// `max |C1 - gamma_bar|`.
    pub max_c1_defect: f64,
    pub max_c2: f64,
    pub max_c3: f64,
    pub max_c4: f64,
    /// `|X(T) - X(0)|` for `G2`, `g~3`, `g~4`.
    pub periodicity_defect: f64,
    /// `(N~ + 1/2) / sigma` real.
    pub n_tilde_phase_defect: f64,
    /// US: `G2` real and `G3 = conj(G4)`; UU: `i G2`, `i r1 G3`, `i conj(r1) G4` real.
    pub symmetry_defect: f64,
    /// `|Im n|` and `|m - conj(mbar)|` of the limit cycle.
    pub moment_reality_defect: f64,
    /// Smallest `n (n + 1) - |m|^2` of the limit cycle.
    pub min_heisenberg_gap: f64,
    /// Agreement of the `G3`/`G4` moment formulas with the `g~` form.
    pub big_g_form_defect: f64,
    pub max_nu_residual: f64,
    pub nu_form_defect: f64,
}

impl DissipativeDiagnostics {
    pub fn worst_residual(&self) -> f64 {
        [
            self.max_c1_defect,
            self.max_c2,
            self.max_c3,
            self.max_c4,
            self.periodicity_defect,
            self.n_tilde_phase_defect,
            self.symmetry_defect,
            self.moment_reality_defect,
            self.big_g_form_defect,
            self.max_nu_residual,
            self.nu_form_defect,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Solved dissipative frame over one period.
#[derive(Debug, Clone)]
pub struct DissipativeFrame {
    pub(crate) unitary: UnitaryFrame,
    pub gamma_bar: f64,
    pub(crate) trajectory: ComplexTrajectory<9>,
}

impl DissipativeFrame {
    pub fn solve(unitary: &UnitaryFrame) -> Result<Self> {
        let p = &unitary.protocol;
        let gamma_bar = p.mean_gamma();
        if !(gamma_bar > 0.0) {
            return Err(Error::NoDissipation);
        }
        let integ = Integrator::new(unitary.tol);
        let rhs = dissipative_rhs(p);
        let u0 = unitary.initial_state();
        let start = [u0[0], u0[1], u0[2], ZERO, ZERO, ZERO, ZERO, ZERO, ZERO];
        let end = integ.propagate(&rhs, start, p.schedule(), 0.0, p.period)?;
        let (int_lambda, int_gamma) = (end[3], end[7]);
        let two_i = C64::new(0.0, 2.0);
        let p2 = int_gamma;
        let p3 = int_gamma + two_i * int_lambda;
        let p4 = int_gamma - two_i * int_lambda;
        let g2 = periodic_initial_value(end[4], (-p2).exp(), p2)?;
        let g3 = periodic_initial_value(end[5], (-p3).exp(), p3)?;
        let g4 = periodic_initial_value(end[6], (-p4).exp(), p4)?;
        let initial = [u0[0], u0[1], u0[2], ZERO, g2, g3, g4, ZERO, ZERO];
        let trajectory = integ.trajectory(&rhs, initial, p.schedule(), 0.0, p.period)?;
        Ok(DissipativeFrame {
            unitary: unitary.clone(),
            gamma_bar,
            trajectory,
        })
    }

    pub fn unitary(&self) -> &UnitaryFrame {
        &self.unitary
    }

    pub fn lambda_bar(&self) -> C64 {
        self.unitary.lambda_bar
    }

    pub fn sigma(&self) -> Sigma {
        self.unitary.sigma
    }

    pub fn period(&self) -> f64 {
        self.unitary.period()
    }

    /// Work `int_0^T <dH/dt> dt` over one limit cycle.
    pub fn cycle_work(&self) -> f64 {
        self.trajectory.last()[8].re
    }

    fn sample_from(&self, t: f64, piece: usize, s: &DState, ds: &DState) -> DissipativeSample {
        let p = &self.unitary.protocol;
        let u = self
            .unitary
            .sample_from(t, piece, &[s[0], s[1], s[2], s[3]], &[ds[0], ds[1], ds[2], ds[3]]);
        let q = p.params_on(t, piece);
        let (w, l, g) = (C64::new(q.omega, 0.0), q.lambda, q.gamma);
        let (bn, bm) = (q.n + 0.5, q.m);
        let i = C64::i();
        let (r1, r2, z, r1p, lam) = (u.r1, u.r2, u.z, u.r1p, u.lambda);
        let (g2, g3, g4) = (s[4], s[5], s[6]);
        let n_tilde_half = u.j * bn + i * 2.0 * bm * r1 - i * 2.0 * bm.conj() * r1p;
        let src3 = bm - i * 4.0 * r2 * bn - bm.conj() * 4.0 * r2 * r2;
        let src4 = bm.conj() * z * z + i * 4.0 * r1 * z * bn - bm * 4.0 * r1 * r1;
        let e_minus = (-i * 2.0 * u.r0).exp();
        let e_plus = (i * 2.0 * u.r0).exp();
        // e^{g2 - g1} = e^{-int_0^t (gamma_bar - gamma)}.
        let damp = (-(C64::new(self.gamma_bar * t, 0.0) - s[7])).exp();
        let c2 = damp * (-ds[4] - g2 * g + n_tilde_half * g);
        let c3 = damp * e_minus * (ds[5] + (g + i * 2.0 * lam) * g3 - src3 * g);
        let c4 = damp * e_plus * (ds[6] + (g - i * 2.0 * lam) * g4 - src4 * g);
        let c1 = C64::new(self.gamma_bar, 0.0) + c2;
        let moments_half = cycle_moments(r1, r2, g2, g3, g4);

        let (mut g3_big, mut g4_big, mut g3_nu_residual, mut nu_form_defect) = (None, None, None, None);
        if z.norm() > Z_GUARD {
            let big3 = z * g3;
            g3_big = Some(big3);
            g4_big = Some(g4 / z);
            let z_dot = (u.r1_dot * r2 + r1 * u.r2_dot) * 4.0;
            let nu1 = l * 4.0 * r2 + z_dot / z;
            let nu2 = l * 2.0 * r2 - l.conj() * 2.0 * r1 / z;
            let s2 = self.unitary.sigma.squared();
            let nu3 = (l * 2.0 * s2 * r1.conj() - l.conj() * 2.0 * r1) / z;
            let scale = nu1.norm().max(1.0);
            nu_form_defect = Some(((nu1 - nu2).norm().max((nu1 - nu3).norm())) / scale);
            let big3_dot = z_dot * g3 + z * ds[5];
            let src = bm * z - i * 4.0 * s2 * r1.conj() * bn - bm.conj() * 4.0 * r1.conj() * r1.conj() / z;
            let res = big3_dot + (g + i * 2.0 * w - nu1) * big3 - src * g;
            g3_nu_residual = Some(res.norm() / big3.norm().max(1.0));
        }
        DissipativeSample {
            unitary: u,
            g2,
            gt3: g3,
            gt4: g4,
            g3_big,
            g4_big,
            n_tilde: n_tilde_half - 0.5,
            m_tilde: src3 * e_minus,
            mp_tilde: src4 * e_plus,
            c1,
            c2,
            c3,
            c4,
            work: s[8],
            moments_half,
            g3_nu_residual,
            nu_form_defect,
        }
    }

    /// Frame quantities at `t` (reduced to one period), re-integrated from
    /// the nearest grid point. `work` is measured from the start of the period.
    pub fn at(&self, t: f64) -> Result<DissipativeSample> {
        let p = &self.unitary.protocol;
        let phase = p.schedule().phase(t);
        let (piece, s, ds) = self.trajectory.resume(dissipative_rhs(p), phase, self.unitary.tol)?;
        let mut out = self.sample_from(phase, piece, &s, &ds);
        out.unitary.t = t;
        Ok(out)
    }

    /// Quantities on every step of the adaptive grid, piece-boundary
    /// instants appearing once per adjacent piece.
    pub fn samples(&self) -> Vec<DissipativeSample> {
        self.trajectory
            .samples()
            .map(|(t, piece, s, ds)| self.sample_from(t, piece, s, ds))
            .collect()
    }

    /// `(t, g1, g2)` on the grid with `g2 = -ln(G2 + 1/2)` continued along
    /// the grid and `g1 = g2 + int_0^t (gamma_bar - gamma)`.
    pub fn log_frame(&self) -> Result<Vec<(f64, C64, C64)>> {
        let mut out = Vec::new();
        let mut prev_arg: Option<f64> = None;
        for (t, _, s, _) in self.trajectory.samples() {
            let v = s[4] + 0.5;
            if v.norm() == 0.0 || (v.re <= 0.0 && v.im.abs() <= 1e-12 * v.norm().max(1.0)) {
                return Err(Error::FrameLogarithm {
                    t,
                    value: format!("{v}"),
                });
            }
            let mut arg = v.arg();
            if let Some(pa) = prev_arg {
                arg += (pa - arg + std::f64::consts::PI).div_euclid(2.0 * std::f64::consts::PI) * 2.0 * std::f64::consts::PI;
            }
            prev_arg = Some(arg);
            let g2 = -C64::new(v.norm().ln(), arg);
            let g1 = g2 + C64::new(self.gamma_bar * t, 0.0) - s[7];
            out.push((t, g1, g2));
        }
        Ok(out)
    }

    pub fn diagnostics(&self) -> DissipativeDiagnostics {
        let samples = self.samples();
        let first = samples.first().expect("non-empty trajectory");
        let last = samples.last().expect("non-empty trajectory");
        let sigma = self.unitary.sigma;
        let mut d = DissipativeDiagnostics {
            max_c1_defect: 0.0,
            max_c2: 0.0,
            max_c3: 0.0,
            max_c4: 0.0,
            periodicity_defect: [
                (last.g2 - first.g2).norm(),
                (last.gt3 - first.gt3).norm(),
                (last.gt4 - first.gt4).norm(),
            ]
            .into_iter()
            .fold(0.0, f64::max),
            n_tilde_phase_defect: 0.0,
            symmetry_defect: 0.0,
            moment_reality_defect: 0.0,
            min_heisenberg_gap: f64::INFINITY,
            big_g_form_defect: 0.0,
            max_nu_residual: 0.0,
            nu_form_defect: 0.0,
        };
        let i = C64::i();
        for s in &samples {
            let scale = 1.0 + s.g2.norm() + s.gt3.norm() + s.gt4.norm();
            d.max_c1_defect = d.max_c1_defect.max((s.c1 - self.gamma_bar).norm());
            d.max_c2 = d.max_c2.max(s.c2.norm());
            d.max_c3 = d.max_c3.max(s.c3.norm());
            d.max_c4 = d.max_c4.max(s.c4.norm());
            let nt = s.n_tilde + 0.5;
            let phase = match sigma {
                Sigma::US => nt.im.abs(),
                Sigma::UU => nt.re.abs(),
            };
            d.n_tilde_phase_defect = d.n_tilde_phase_defect.max(phase / nt.norm().max(1.0));
            let u = &s.unitary;
            let sym = match (sigma, s.g3_big, s.g4_big) {
                (Sigma::US, Some(a), Some(b)) => s.g2.im.abs().max((a - b.conj()).norm()),
                (Sigma::US, _, _) => s.g2.im.abs(),
                (Sigma::UU, Some(a), Some(b)) => (i * s.g2)
                    .im
                    .abs()
                    .max((i * u.r1 * a).im.abs())
                    .max((i * u.r1.conj() * b).im.abs()),
                (Sigma::UU, _, _) => (i * s.g2).im.abs(),
            };
            d.symmetry_defect = d.symmetry_defect.max(sym / scale);
            let mh = s.moments_half;
            d.moment_reality_defect = d
                .moment_reality_defect
                .max(mh[0].im.abs().max((mh[1] - mh[2].conj()).norm()) / scale);
            d.min_heisenberg_gap = d.min_heisenberg_gap.min(s.moments().heisenberg_gap());
            if let (Some(a), Some(b)) = (s.g3_big, s.g4_big) {
                let (r1, r1p, z) = (u.r1, u.r1p, u.z);
                let alt = [
                    u.j * s.g2 - i * 2.0 * (r1 * a - r1p * b),
                    i * 4.0 * r1p * s.g2 + z * a - r1p * r1p * 4.0 / z * b,
                    -i * 4.0 * r1 * s.g2 - r1 * r1 * 4.0 / z * a + z * b,
                ];
                let dev = (0..3).map(|k| (alt[k] - mh[k]).norm()).fold(0.0, f64::max);
                d.big_g_form_defect = d.big_g_form_defect.max(dev / scale);
            }
            if let Some(r) = s.g3_nu_residual {
                d.max_nu_residual = d.max_nu_residual.max(r);
            }
            if let Some(r) = s.nu_form_defect {
                d.nu_form_defect = d.nu_form_defect.max(r);
            }
        }
        d
    }
}
