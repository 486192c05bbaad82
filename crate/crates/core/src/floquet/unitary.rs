//! Unitary part of the generalized rotating frame.
//!
//! `r2` is carried as the ratio `x / y` of a solution of the traceless
//! linear system `x' = -i w x - conj(l)/2 y`, `y' = -2 l x + i w y`, which
//! turns the Riccati equation into a linear one. Periodic `r2` are the
//! Moebius fixed points of the monodromy, i.e. its eigenvectors; along such
//! a solution `y(T)/y(0) = exp(i int Lambda)`.

use serde::Serialize;

use super::{classify, Sigma, ZERO};
use crate::error::{Error, Result};
use crate::ode::{exp_m1, monodromy_2x2, periodic_initial_value, ComplexTrajectory, Integrator, C64};
use crate::protocol::CycleProtocol;

/// Double-root separation of the monodromy below which the Riccati fixed
/// points are considered degenerate.
pub const DEGENERATE_ROOT_SEPARATION: f64 = 1e-10;

/// Unitary frame state: `[x, y, r1, int Lambda]`.
pub(crate) type UState = [C64; 4];

/// One periodic solution of the Riccati equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiccatiBranch {
    /// 0 for the `+` multiplier of the monodromy, 1 for the `-` one.
    pub id: usize,
    pub multiplier: C64,
    pub r2_initial: C64,
    pub lambda_bar: C64,
}

pub(crate) fn unitary_rhs(p: &CycleProtocol) -> impl Fn(f64, usize, &UState) -> UState + '_ {
    move |t, piece, s| {
        let q = p.params_on(t, piece);
        let (w, l) = (C64::new(q.omega, 0.0), q.lambda);
        let i = C64::i();
        let r2 = s[0] / s[1];
        [
            -i * w * s[0] - l.conj() * 0.5 * s[1],
            -l * 2.0 * s[0] + i * w * s[1],
            i * w * 2.0 * s[2] - l * 4.0 * s[2] * r2 - l * 0.5,
            w + i * l * 2.0 * r2,
        ]
    }
}

/// Frame functions `r0, r1, r2` and their residuals at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitarySample {
    pub t: f64,
    pub piece: usize,
    pub r0: C64,
    pub r1: C64,
    pub r2: C64,
    pub r1_dot: C64,
    pub r2_dot: C64,
    pub lambda: C64,
    pub j: C64,
    pub z: C64,
    pub r1p: C64,
    pub b0: C64,
    pub b1: C64,
    pub b2: C64,
}

/// Worst defects of the unitary-frame identities over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitaryDiagnostics {
    pub max_b1: f64,
    pub max_b2: f64,
    /// `max |B0 - Lambda_bar|`.
    pub max_b0_defect: f64,
    /// `|r(T) - r(0)|` for `r1` and `r2`.
    pub periodicity_defect: f64,
    /// `J = sigma j` with `j` real.
    pub j_phase_defect: f64,
    /// `r1' = sigma^2 conj(r1)`.
    pub r1p_defect: f64,
    /// `4 |r1|^2 = sigma^2 z (z - 1)`.
    pub r1_z_defect: f64,
    /// `4 |r2|^2 = 1`, only in the unitarily unstable phase.
    pub uu_phase_defect: Option<f64>,
}

impl UnitaryDiagnostics {
    pub fn worst(&self) -> f64 {
        [
            self.max_b1,
            self.max_b2,
            self.max_b0_defect,
            self.periodicity_defect,
            self.j_phase_defect,
            self.r1p_defect,
            self.r1_z_defect,
            self.uu_phase_defect.unwrap_or(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Solved unitary frame over one period.
#[derive(Debug, Clone)]
pub struct UnitaryFrame {
    pub(crate) protocol: CycleProtocol,
    pub(crate) tol: f64,
    pub lambda_bar: C64,
    pub sigma: Sigma,
    pub branch: RiccatiBranch,
    /// The other periodic branch, when it exists.
    pub rejected: Option<RiccatiBranch>,
    pub(crate) initial: UState,
    pub(crate) trajectory: ComplexTrajectory<4>,
}

impl UnitaryFrame {
    /// Solves the frame on the branch chosen by the selection rule.
    pub fn solve(p: &CycleProtocol, tol: f64) -> Result<Self> {
        Self::solve_on(p, tol, false)
    }

    /// Solves the frame on the branch the selection rule rejects.
    pub fn solve_rejected(p: &CycleProtocol, tol: f64) -> Result<Self> {
        Self::solve_on(p, tol, true)
    }

    fn solve_on(p: &CycleProtocol, tol: f64, rejected: bool) -> Result<Self> {
        let period = p.period;
        let integ = Integrator::new(tol);
        let rhs = unitary_rhs(p);
        let sweep = |xy: [C64; 2]| integ.propagate(&rhs, [xy[0], xy[1], ZERO, ZERO], p.schedule(), 0.0, period);

        let mut candidates: Vec<(RiccatiBranch, [C64; 2], UState)> = Vec::new();
        if p.lambda_vanishes() {
            // r2 = 0 exactly; the other fixed point sits at infinity.
            let xy = [ZERO, C64::new(1.0, 0.0)];
            let end = sweep(xy)?;
            let branch = RiccatiBranch {
                id: 0,
                multiplier: end[1],
                r2_initial: ZERO,
                lambda_bar: end[3] / period,
            };
            candidates.push((branch, xy, end));
        } else {
            let mono = monodromy_2x2(
                |t, k| {
                    let q = p.params_on(t, k);
                    let (w, l) = (C64::new(q.omega, 0.0), q.lambda);
                    let i = C64::i();
                    [[-i * w, -l.conj() * 0.5], [-l * 2.0, i * w]]
                },
                p.schedule(),
                tol,
            )?;
            let (mu_plus, mu_minus) = mono.multipliers();
            let separation = (mu_plus - mu_minus).norm();
            if separation < DEGENERATE_ROOT_SEPARATION * mu_plus.norm().max(1.0) {
                return Err(Error::ParametricResonanceBoundary { separation });
            }
            for (id, mu) in [mu_plus, mu_minus].into_iter().enumerate() {
                let v = mono.eigenvector(mu);
                if v[1].norm() <= 1e-14 * v[0].norm() {
                    continue;
                }
                let xy = [v[0] / v[1], C64::new(1.0, 0.0)];
                let end = sweep(xy)?;
                let branch = RiccatiBranch {
                    id,
                    multiplier: mu,
                    r2_initial: xy[0],
                    lambda_bar: end[3] / period,
                };
                candidates.push((branch, xy, end));
            }
        }
        if candidates.is_empty() {
            return Err(Error::NoRiccatiBranch("both fixed points of the monodromy lie at infinity".into()));
        }
        let chosen = select_branch(&candidates.iter().map(|c| c.0).collect::<Vec<_>>());
        let pick = if rejected {
            if candidates.len() < 2 {
                return Err(Error::NoRiccatiBranch("no second finite branch".into()));
            }
            1 - chosen
        } else {
            chosen
        };
        let other = (candidates.len() == 2).then(|| candidates[1 - pick].0);
        let (branch, xy, end) = candidates.swap_remove(pick);

        let r1_0 = if p.lambda_vanishes() {
            ZERO
        } else {
            // r1' + p1 r1 = q1 with p1 = -2i Lambda, so P1(T) = -2i int Lambda.
            let p1 = C64::new(0.0, -2.0) * end[3];
            periodic_initial_value(end[2], (-p1).exp(), p1)?
        };
        let initial = [xy[0], xy[1], r1_0, ZERO];
        let trajectory = integ.trajectory(&rhs, initial, p.schedule(), 0.0, period)?;
        let lambda_bar = branch.lambda_bar;
        Ok(UnitaryFrame {
            protocol: p.clone(),
            tol,
            lambda_bar,
            sigma: classify(lambda_bar),
            branch,
            rejected: other,
            initial,
            trajectory,
        })
    }

    pub fn protocol(&self) -> &CycleProtocol {
        &self.protocol
    }

    pub fn period(&self) -> f64 {
        self.protocol.period
    }

    pub fn r2_initial(&self) -> C64 {
        self.initial[0] / self.initial[1]
    }

    pub fn r1_initial(&self) -> C64 {
        self.initial[2]
    }

    pub(crate) fn initial_state(&self) -> UState {
        self.initial
    }

    /// Builds the sample from a frame state and its derivative.
    pub(crate) fn sample_from(&self, t: f64, piece: usize, s: &UState, ds: &UState) -> UnitarySample {
        let q = self.protocol.params_on(t, piece);
        let (w, l) = (C64::new(q.omega, 0.0), q.lambda);
        let i = C64::i();
        let r2 = s[0] / s[1];
        let r2_dot = (ds[0] * s[1] - s[0] * ds[1]) / (s[1] * s[1]);
        let r1 = s[2];
        let r1_dot = ds[2];
        let lambda = w + i * l * 2.0 * r2;
        let r0 = self.lambda_bar * t - s[3];
        let r0_dot = self.lambda_bar - ds[3];
        let z = 1.0 + r1 * r2 * 4.0;
        let e_plus = (i * 2.0 * r0).exp();
        let b2 = (-i * 2.0 * r0).exp() * (r2_dot + i * w * 2.0 * r2 - l * 2.0 * r2 * r2 + l.conj() * 0.5);
        let b1 = -r1 * r1 * 4.0 * b2 + e_plus * (r1_dot - i * w * 2.0 * r1 + l * 4.0 * r1 * r2 + l * 0.5);
        let b0 = -i * 4.0 * r1 * e_plus * b2 + r0_dot + w + i * l * 2.0 * r2;
        UnitarySample {
            t,
            piece,
            r0,
            r1,
            r2,
            r1_dot,
            r2_dot,
            lambda,
            j: z * 2.0 - 1.0,
            z,
            r1p: r2 * z,
            b0,
            b1,
            b2,
        }
    }

    /// Frame functions at `t`, reduced to one period and re-integrated from
    /// the nearest grid point.
    pub fn at(&self, t: f64) -> Result<UnitarySample> {
        let phase = self.protocol.schedule().phase(t);
        let (piece, s, ds) = self.trajectory.resume(unitary_rhs(&self.protocol), phase, self.tol)?;
        let mut out = self.sample_from(phase, piece, &s, &ds);
        out.t = t;
        Ok(out)
    }

    /// Frame functions on every step of the adaptive grid.
    pub fn samples(&self) -> Vec<UnitarySample> {
        self.trajectory
            .samples()
            .map(|(t, piece, s, ds)| self.sample_from(t, piece, s, ds))
            .collect()
    }

    pub fn grid_len(&self) -> usize {
        self.trajectory.len()
    }

    pub fn diagnostics(&self) -> UnitaryDiagnostics {
        let s2 = self.sigma.squared();
        let samples = self.samples();
        let first = samples.first().expect("non-empty trajectory");
        let last = samples.last().expect("non-empty trajectory");
        let mut d = UnitaryDiagnostics {
            max_b1: 0.0,
            max_b2: 0.0,
            max_b0_defect: 0.0,
            periodicity_defect: (last.r2 - first.r2).norm().max((last.r1 - first.r1).norm()),
            j_phase_defect: 0.0,
            r1p_defect: 0.0,
            r1_z_defect: 0.0,
            uu_phase_defect: (self.sigma == Sigma::UU).then_some(0.0),
        };
        for s in &samples {
            d.max_b1 = d.max_b1.max(s.b1.norm());
            d.max_b2 = d.max_b2.max(s.b2.norm());
            d.max_b0_defect = d.max_b0_defect.max((s.b0 - self.lambda_bar).norm());
            let jp = match self.sigma {
                Sigma::US => s.j.im.abs(),
                Sigma::UU => s.j.re.abs(),
            };
            d.j_phase_defect = d.j_phase_defect.max(jp / s.j.norm().max(1.0));
            d.r1p_defect = d.r1p_defect.max((s.r1p - s.r1.conj() * s2).norm() / s.r1.norm().max(1.0));
            let lhs = 4.0 * s.r1.norm_sqr();
            d.r1_z_defect = d.r1_z_defect.max((s.z * (s.z - 1.0) * s2 - lhs).norm() / lhs.max(1.0));
            if let Some(u) = d.uu_phase_defect.as_mut() {
                *u = u.max((4.0 * s.r2.norm_sqr() - 1.0).abs());
            }
        }
        d
    }

    /// Exponent `|e^{P(T)} - 1|` of the `r1` equation, a distance from resonance.
    pub fn r1_resonance_margin(&self) -> f64 {
        exp_m1(C64::new(0.0, -2.0) * self.lambda_bar * self.period()).norm()
    }
}

/// Index of the branch with the larger `Re Lambda_bar`; on a tie the one
/// with `Im Lambda_bar >= 0`.
pub(crate) fn select_branch(branches: &[RiccatiBranch]) -> usize {
    if branches.len() == 1 {
        return 0;
    }
    let (a, b) = (branches[0].lambda_bar, branches[1].lambda_bar);
    let scale = a.norm().max(b.norm()).max(1.0);
    if (a.re - b.re).abs() <= 1e-9 * scale {
        if a.im >= b.im {
            0
        } else {
            1
        }
    } else if a.re > b.re {
        0
    } else {
        1
    }
}
