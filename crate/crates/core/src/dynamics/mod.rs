//! Direct propagation of the Gaussian second moments, the stroboscopic
//! affine map and its fixed point, and a truncated Fock-space oracle.
//!
//! With the Liouvillian `omega H0 + lambda/2 H1 + lambda'/2 H2 + gamma(N+1) D1
//! + gamma N D2 - gamma M D3 - gamma M' D4` the moments `n = <a^dag a>`,
//! `m = <aa>`, `mbar = <a^dag a^dag>` obey
//!
//! ```text
//! n'    = i lambda m - i lambda' mbar - gamma n + gamma N
//! m'    = -(2 i omega + gamma) m - i lambda' (2n + 1) + gamma M
//! mbar' = (2 i omega - gamma) mbar + i lambda (2n + 1) + gamma M'
//! ```
//!
//! A physical Liouvillian has `lambda' = conj(lambda)`, `M' = conj(M)` and
//! real `omega`, `N`. First moments decouple and are taken to vanish.

mod fock;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{ComplexTrajectory, Integrator, C64};
use crate::protocol::{CycleProtocol, Params};

pub use fock::{FockCache, FockOracle, Super, DEFAULT_DYNAMICS_CUTOFF, DEFAULT_SPECTRUM_CUTOFF, MAX_DENSE_CUTOFF};

/// `(<a^dag a>, <aa>, <a^dag a^dag>)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMoments {
    pub n: f64,
    pub m: C64,
    pub mbar: C64,
}

impl SecondMoments {
    pub fn vacuum() -> Self {
        SecondMoments::new(0.0, C64::new(0.0, 0.0))
    }

    pub fn new(n: f64, m: C64) -> Self {
        SecondMoments { n, m, mbar: m.conj() }
    }

    /// Reads `n` from the real part of the first component.
    pub fn from_state(x: &[C64; 3]) -> Self {
        SecondMoments {
            n: x[0].re,
            m: x[1],
            mbar: x[2],
        }
    }

    pub fn to_state(&self) -> [C64; 3] {
        [C64::new(self.n, 0.0), self.m, self.mbar]
    }

    /// `n(n+1) - |m|^2`, non-negative for a physical state.
    pub fn heisenberg_gap(&self) -> f64 {
        self.n * (self.n + 1.0) - self.m.norm_sqr()
    }

    /// `|mbar - conj(m)|`.
    pub fn conjugation_defect(&self) -> f64 {
        (self.mbar - self.m.conj()).norm()
    }

    pub fn distance(&self, other: &SecondMoments) -> f64 {
        (self.n - other.n).abs() + (self.m - other.m).norm() + (self.mbar - other.mbar).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.n.is_finite() && self.m.re.is_finite() && self.m.im.is_finite() && self.mbar.re.is_finite() && self.mbar.im.is_finite()
    }
}

/// Coefficients of a quadratic Liouvillian, not necessarily Hermiticity-preserving term by term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator {
    pub omega: C64,
    pub lambda: C64,
    pub lambda_p: C64,
    pub gamma: f64,
    pub n: C64,
    pub m: C64,
    pub m_p: C64,
}

impl Generator {
    pub fn physical(p: &Params) -> Self {
        Generator {
            omega: C64::new(p.omega, 0.0),
            lambda: p.lambda,
            lambda_p: p.lambda.conj(),
            gamma: p.gamma,
            n: C64::new(p.n, 0.0),
            m: p.m,
            m_p: p.m.conj(),
        }
    }
}

/// Time derivative of `(n, m, mbar)` under `g`.
pub fn moment_field(g: &Generator, x: &[C64; 3]) -> [C64; 3] {
    let i = C64::new(0.0, 1.0);
    let two_n1 = x[0] * 2.0 + 1.0;
    [
        i * g.lambda * x[1] - i * g.lambda_p * x[2] - x[0] * g.gamma + g.n * g.gamma,
        -(i * g.omega * 2.0 + g.gamma) * x[1] - i * g.lambda_p * two_n1 + g.m * g.gamma,
        (i * g.omega * 2.0 - g.gamma) * x[2] + i * g.lambda * two_n1 + g.m_p * g.gamma,
    ]
}

/// The affine field as `x' = A x + b`.
pub fn moment_matrix(g: &Generator) -> (Matrix3<C64>, Vector3<C64>) {
    let zero = [C64::new(0.0, 0.0); 3];
    let b = moment_field(g, &zero);
    let mut a = Matrix3::zeros();
    for k in 0..3 {
        let mut e = zero;
        e[k] = C64::new(1.0, 0.0);
        let col = moment_field(g, &e);
        for r in 0..3 {
            a[(r, k)] = col[r] - b[r];
        }
    }
    (a, Vector3::new(b[0], b[1], b[2]))
}

/// Stationary `(n, m, mbar)` of a time-independent generator, by a direct 3x3 solve.
pub fn stationary_moments(g: &Generator) -> Result<[C64; 3]> {
    let (a, b) = moment_matrix(g);
    let x = a
        .lu()
        .solve(&(-b))
        .ok_or(Error::DegenerateSteadyState { denominator: 0.0 })?;
    Ok([x[0], x[1], x[2]])
}

/// `d/dt (n, m, mbar)` at time `t` under the physical protocol generator.
pub fn moment_rhs(t: f64, s: &SecondMoments, p: &CycleProtocol) -> SecondMoments {
    let d = moment_field(&Generator::physical(&p.params(t)), &s.to_state());
    SecondMoments::from_state(&d)
}

fn field_on(p: &CycleProtocol) -> impl Fn(f64, usize, &[C64; 3]) -> [C64; 3] + '_ {
    move |t, piece, x| moment_field(&Generator::physical(&p.params_on(t, piece)), x)
}

/// Dense moment trajectory.
#[derive(Debug, Clone)]
pub struct MomentTrajectory {
    pub traj: ComplexTrajectory<3>,
}

impl MomentTrajectory {
    pub fn at(&self, t: f64) -> Option<SecondMoments> {
        self.traj.eval(t).map(|x| SecondMoments::from_state(&x))
    }

    pub fn final_state(&self) -> SecondMoments {
        SecondMoments::from_state(&self.traj.last())
    }

    /// Every sample as `(t, piece, moments)`; boundary instants appear once per adjacent piece.
    pub fn samples(&self) -> impl Iterator<Item = (f64, usize, SecondMoments)> + '_ {
        self.traj.samples().map(|(t, k, x, _)| (t, k, SecondMoments::from_state(x)))
    }

    /// Largest `|m|^2 - n(n+1)` over the samples (negative when strictly physical).
    pub fn worst_heisenberg_violation(&self) -> f64 {
        self.samples().map(|(_, _, s)| -s.heisenberg_gap()).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Propagates moments from `t0` to `t1`, restarting at every protocol cut.
pub fn propagate(s0: &SecondMoments, p: &CycleProtocol, t0: f64, t1: f64, tol: f64) -> Result<MomentTrajectory> {
    let traj = Integrator::new(tol).trajectory(field_on(p), s0.to_state(), p.schedule(), t0, t1)?;
    Ok(MomentTrajectory { traj })
}

/// State after propagating from `t0` to `t1`.
pub fn propagate_to(s0: &SecondMoments, p: &CycleProtocol, t0: f64, t1: f64, tol: f64) -> Result<SecondMoments> {
    let x = Integrator::new(tol).propagate(field_on(p), s0.to_state(), p.schedule(), t0, t1)?;
    Ok(SecondMoments::from_state(&x))
}

/// States at `t0 + k T` for `k = 0..=periods`.
pub fn stroboscopic_samples(s0: &SecondMoments, p: &CycleProtocol, t0: f64, periods: usize, tol: f64) -> Result<Vec<SecondMoments>> {
    let mut out = Vec::with_capacity(periods + 1);
    let mut s = *s0;
    out.push(s);
    for k in 0..periods {
        let a = t0 + k as f64 * p.period;
        s = propagate_to(&s, p, a, a + p.period, tol)?;
        out.push(s);
    }
    Ok(out)
}

/// One-period map `v -> L v + c` on `(n, m, mbar)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub linear: Matrix3<C64>,
    pub offset: Vector3<C64>,
    pub t0: f64,
}

impl AffineMap {
    pub fn spectral_radius(&self) -> Result<f64> {
        let eig = self
            .linear
            .eigenvalues()
            .ok_or_else(|| Error::Eigen("3x3 period map did not converge".into()))?;
        Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// Solves `(I - L) v = c`.
    pub fn fixed_point(&self) -> Result<SecondMoments> {
        let radius = self.spectral_radius()?;
        if !(radius < 1.0) {
            return Err(Error::NotContractive { radius });
        }
        let lhs = Matrix3::identity() - self.linear;
        let v = lhs
            .lu()
            .solve(&self.offset)
            .ok_or(Error::NotContractive { radius })?;
        Ok(SecondMoments {
            n: v[0].re,
            m: v[1],
            mbar: v[2],
        })
    }
}

/// Builds the period map at phase `t0` from the zero vector and the three unit vectors.
pub fn period_map(p: &CycleProtocol, t0: f64, tol: f64) -> Result<AffineMap> {
    period_map_about(p, t0, [C64::new(0.0, 0.0); 3], tol)
}

/// Period map built around the base point `base`; its linear part does not depend on `base`.
pub fn period_map_about(p: &CycleProtocol, t0: f64, base: [C64; 3], tol: f64) -> Result<AffineMap> {
    let integ = Integrator::new(tol);
    let t1 = t0 + p.period;
    let f0 = integ.propagate(field_on(p), base, p.schedule(), t0, t1)?;
    let mut linear = Matrix3::zeros();
    for k in 0..3 {
        let mut e = base;
        e[k] += C64::new(1.0, 0.0);
        let fk = integ.propagate(field_on(p), e, p.schedule(), t0, t1)?;
        for r in 0..3 {
            linear[(r, k)] = fk[r] - f0[r];
        }
    }
    let base_v = Vector3::new(base[0], base[1], base[2]);
    let offset = Vector3::new(f0[0], f0[1], f0[2]) - linear * base_v;
    Ok(AffineMap { linear, offset, t0 })
}

/// Limit-cycle state at phase `t0` as the fixed point of the period map.
pub fn stroboscopic_fixed_point(p: &CycleProtocol, t0: f64, tol: f64) -> Result<SecondMoments> {
    period_map(p, t0, tol)?.fixed_point()
}

pub const CONVERGED_DIFFERENCE: f64 = 1e-9;
const FIT_WINDOW: usize = 5;

/// Verdict on a sequence of stroboscopic samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub differences: Vec<f64>,
    /// Per-period contraction ratio fitted to the last differences.
    pub ratio: Option<f64>,
    pub converged: bool,
    pub diverging: bool,
    /// `ln(ratio) / T` when diverging.
    pub growth_rate: Option<f64>,
}

/// Geometric fit of `log |s_{k+1} - s_k|` over the last five differences.
pub fn detect_convergence(samples: &[SecondMoments], period: f64) -> ConvergenceReport {
    let differences: Vec<f64> = samples.windows(2).map(|w| w[1].distance(&w[0])).collect();
    let finite = samples.iter().all(|s| s.is_finite());
    let tail: Vec<f64> = differences.iter().rev().take(FIT_WINDOW).rev().copied().collect();
    let ratio = if tail.len() >= 2 && tail.iter().all(|&d| d > 0.0 && d.is_finite()) {
        // Least-squares slope of log d against the sample index.
        let n = tail.len() as f64;
        let xm = (n - 1.0) / 2.0;
        let ym = tail.iter().map(|d| d.ln()).sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (i, d) in tail.iter().enumerate() {
            let dx = i as f64 - xm;
            sxy += dx * (d.ln() - ym);
            sxx += dx * dx;
        }
        Some((sxy / sxx).exp())
    } else {
        None
    };
    let last = differences.last().copied().unwrap_or(0.0);
    let scale = samples.last().map_or(1.0, |s| 1.0 + s.n.abs());
    let converged = finite && !differences.is_empty() && last < CONVERGED_DIFFERENCE * scale;
    let diverging = !finite || (!converged && ratio.is_some_and(|r| r > 1.0 + 1e-6));
    let growth_rate = if diverging { ratio.map(|r| r.ln() / period) } else { None };
    ConvergenceReport {
        differences,
        ratio,
        converged,
        diverging,
        growth_rate,
    }
}
