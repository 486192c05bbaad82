//! Complex ODE machinery for time-periodic coefficients.
//!
//! The integrator is an adaptive Dormand-Prince 5(4) pair with mixed
//! absolute/relative error control. Right-hand sides are piecewise smooth:
//! a [`Schedule`] declares the cut points inside one period and the
//! integrator restarts at every cut, so no step straddles a discontinuity.
//! The right-hand side receives the index of the smooth piece it is being
//! evaluated on, which makes one-sided limits at the cuts explicit.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const DEFAULT_TOL: f64 = 1e-10;

/// `|e^{P(T)} - 1|` below this value is treated as a Floquet resonance.
pub const RESONANCE_THRESHOLD: f64 = 1e-8;

const MAX_STEPS: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub fn new(tol: f64) -> Self {
        Tolerance {
            rtol: tol,
            atol: tol,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(DEFAULT_TOL)
    }
}

/// Smooth pieces of a periodic right-hand side.
///
/// `cuts` are the discontinuity locations strictly inside `(0, period)`;
/// the pieces of one period are `[0, c_0), [c_0, c_1), ..., [c_last, period)`
/// and repeat with the period.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    period: f64,
    cuts: Vec<f64>,
}

/// One smooth stretch of an integration interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub piece: usize,
}

impl Schedule {
    pub fn new(period: f64, cuts: Vec<f64>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::param("period", format!("must be positive, got {period}")));
        }
        let mut prev = 0.0;
        for &c in &cuts {
            if !(c > prev && c < period) {
                return Err(Error::param(
                    "cuts",
                    format!("cut points must be strictly increasing inside (0, {period}), got {cuts:?}"),
                ));
            }
            prev = c;
        }
        Ok(Schedule { period, cuts })
    }

    /// A single smooth piece.
    pub fn smooth(period: f64) -> Self {
        Schedule {
            period,
            cuts: Vec::new(),
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn pieces(&self) -> usize {
        self.cuts.len() + 1
    }

    /// Bounds of piece `k` within `[0, period]`.
    pub fn piece_bounds(&self, k: usize) -> (f64, f64) {
        let start = if k == 0 { 0.0 } else { self.cuts[k - 1] };
        let end = if k == self.cuts.len() {
            self.period
        } else {
            self.cuts[k]
        };
        (start, end)
    }

    /// Piece containing `t`, using half-open pieces `[start, end)`.
    pub fn piece_at(&self, t: f64) -> usize {
        let phase = self.phase(t);
        self.cuts.iter().take_while(|&&c| c <= phase).count()
    }

    /// `t` reduced into `[0, period)`.
    pub fn phase(&self, t: f64) -> f64 {
        let p = t.rem_euclid(self.period);
        if p >= self.period {
            0.0
        } else {
            p
        }
    }

    /// Splits `[t0, t1]` into smooth segments.
    pub fn segments(&self, t0: f64, t1: f64) -> Vec<Segment> {
        let mut out = Vec::new();
        if t1 <= t0 {
            return out;
        }
        let eps = 1e-12 * self.period.max(t0.abs()).max(t1.abs());
        let mut marks = vec![t0];
        let first = (t0 / self.period).floor() as i64;
        let last = (t1 / self.period).ceil() as i64;
        for k in first..=last {
            let base = k as f64 * self.period;
            for b in std::iter::once(0.0).chain(self.cuts.iter().copied()) {
                let m = base + b;
                if m > t0 + eps && m < t1 - eps {
                    marks.push(m);
                }
            }
        }
        marks.push(t1);
        marks.sort_by(f64::total_cmp);
        for w in marks.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            out.push(Segment {
                start: w[0],
                end: w[1],
                piece: self.piece_at(mid),
            });
        }
        out
    }
}

#[inline]
fn axpy<const N: usize>(y: &[C64; N], h: f64, terms: &[(f64, &[C64; N])]) -> [C64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        let s = h * c;
        for i in 0..N {
            out[i] += k[i] * s;
        }
    }
    out
}

fn is_finite<const N: usize>(x: &[C64; N]) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive Dormand-Prince integrator.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub tol: Tolerance,
    pub max_steps: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::new(DEFAULT_TOL)
    }
}

impl Integrator {
    pub fn new(tol: f64) -> Self {
        Integrator {
            tol: Tolerance::new(tol),
            max_steps: MAX_STEPS,
        }
    }

    fn err_norm<const N: usize>(&self, y: &[C64; N], y_new: &[C64; N], err: &[C64; N]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..N {
            let scale = self.tol.atol + self.tol.rtol * y[i].norm().max(y_new[i].norm());
            worst = worst.max(err[i].norm() / scale);
        }
        worst
    }

    fn initial_step<const N: usize, F>(
        &self,
        rhs: &F,
        t: f64,
        piece: usize,
        y: &[C64; N],
        f0: &[C64; N],
        span: f64,
    ) -> f64
    where
        F: Fn(f64, usize, &[C64; N]) -> [C64; N],
    {
        let scale = |i: usize| self.tol.atol + self.tol.rtol * y[i].norm();
        let rms = |v: &[C64; N]| -> f64 {
            (v.iter()
                .enumerate()
                .map(|(i, z)| (z.norm() / scale(i)).powi(2))
                .sum::<f64>()
                / N as f64)
                .sqrt()
        };
        let d0 = rms(y);
        let d1 = rms(f0);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(span);
        let y1 = axpy(y, h0, &[(1.0, f0)]);
        let f1 = rhs(t + h0, piece, &y1);
        let mut diff = [C64::new(0.0, 0.0); N];
        for i in 0..N {
            diff[i] = f1[i] - f0[i];
        }
        let d2 = rms(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Integrates across `segments`, calling `observe(t, piece, x, dx)` at the
    /// start of every segment and after every accepted step.
    pub fn run<const N: usize, F, O>(
        &self,
        rhs: F,
        x0: [C64; N],
        segments: &[Segment],
        mut observe: O,
    ) -> Result<[C64; N]>
    where
        F: Fn(f64, usize, &[C64; N]) -> [C64; N],
        O: FnMut(f64, usize, &[C64; N], &[C64; N]),
    {
        if !(self.tol.rtol > 0.0 && self.tol.atol > 0.0) {
            return Err(Error::InvalidRequest("tolerance must be positive".into()));
        }
        if !is_finite(&x0) {
            return Err(Error::NonFinite {
                t: segments.first().map_or(0.0, |s| s.start),
            });
        }
        let mut y = x0;
        let mut h_guess: Option<f64> = None;
        let mut steps = 0usize;
        for seg in segments {
            let span = seg.end - seg.start;
            if span <= 0.0 {
                continue;
            }
            let piece = seg.piece;
            let mut t = seg.start;
            let mut k1 = rhs(t, piece, &y);
            if !is_finite(&k1) {
                return Err(Error::NonFinite { t });
            }
            observe(t, piece, &y, &k1);
            let mut h = match h_guess {
                Some(h) => h.min(span),
                None => self.initial_step(&rhs, t, piece, &y, &k1, span),
            };
            let mut rejected_last = false;
            while t < seg.end {
                steps += 1;
                if steps > self.max_steps {
                    return Err(Error::StepUnderflow { t });
                }
                let remaining = seg.end - t;
                let last = h >= remaining * (1.0 - 1e-12);
                if last {
                    h = remaining;
                }
                let min_h = 16.0 * f64::EPSILON * t.abs().max(1.0);
                if h < min_h && !last {
                    return Err(Error::StepUnderflow { t });
                }
                let k2 = rhs(t + C2 * h, piece, &axpy(&y, h, &[(A21, &k1)]));
                let k3 = rhs(t + C3 * h, piece, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
                let k4 = rhs(
                    t + C4 * h,
                    piece,
                    &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
                );
                let k5 = rhs(
                    t + C5 * h,
                    piece,
                    &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
                );
                let k6 = rhs(
                    t + h,
                    piece,
                    &axpy(
                        &y,
                        h,
                        &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                    ),
                );
                let y_new = axpy(
                    &y,
                    h,
                    &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                );
                let t_new = if last { seg.end } else { t + h };
                let k7 = rhs(t_new, piece, &y_new);
                let zero = [C64::new(0.0, 0.0); N];
                let err = axpy(
                    &zero,
                    h,
                    &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
                );
                let en = self.err_norm(&y, &y_new, &err);
                if !en.is_finite() || !is_finite(&y_new) {
                    // Shrink hard; a non-finite trial usually means the step is far too long.
                    h *= 0.1;
                    rejected_last = true;
                    if h < min_h {
                        return Err(Error::NonFinite { t });
                    }
                    continue;
                }
                if en <= 1.0 {
                    t = t_new;
                    y = y_new;
                    k1 = k7;
                    observe(t, piece, &y, &k1);
                    let mut factor = if en == 0.0 {
                        5.0
                    } else {
                        (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if rejected_last {
                        factor = factor.min(1.0);
                    }
                    rejected_last = false;
                    if !last {
                        h *= factor;
                    } else {
                        h_guess = Some(h.max(h * factor));
                    }
                } else {
                    h *= (0.9 * en.powf(-0.2)).clamp(0.2, 1.0);
                    rejected_last = true;
                }
            }
            if h_guess.is_none() {
                h_guess = Some(h);
            }
        }
        Ok(y)
    }

    /// State at `t1` starting from `x0` at `t0`, restarting at every cut of `schedule`.
    pub fn propagate<const N: usize, F>(
        &self,
        rhs: F,
        x0: [C64; N],
        schedule: &Schedule,
        t0: f64,
        t1: f64,
    ) -> Result<[C64; N]>
    where
        F: Fn(f64, usize, &[C64; N]) -> [C64; N],
    {
        check_span(t0, t1)?;
        self.run(rhs, x0, &schedule.segments(t0, t1), |_, _, _, _| {})
    }

    /// Like [`Integrator::propagate`] but records every accepted step.
    pub fn trajectory<const N: usize, F>(
        &self,
        rhs: F,
        x0: [C64; N],
        schedule: &Schedule,
        t0: f64,
        t1: f64,
    ) -> Result<ComplexTrajectory<N>>
    where
        F: Fn(f64, usize, &[C64; N]) -> [C64; N],
    {
        check_span(t0, t1)?;
        let segments = schedule.segments(t0, t1);
        let mut pieces: Vec<TrajectoryPiece<N>> = Vec::with_capacity(segments.len());
        let mut current = usize::MAX;
        let mut seg_idx = 0usize;
        self.run(rhs, x0, &segments, |t, piece, x, dx| {
            // A new segment always starts with an observation at its start time.
            let starts_segment = seg_idx < segments.len()
                && t == segments[seg_idx].start
                && (current == usize::MAX || pieces[current].times.len() > 1 || t != pieces[current].times[0]);
            if starts_segment && (current == usize::MAX || *pieces[current].times.last().unwrap() == t) {
                pieces.push(TrajectoryPiece {
                    piece,
                    times: Vec::new(),
                    values: Vec::new(),
                    derivs: Vec::new(),
                });
                current = pieces.len() - 1;
                seg_idx += 1;
            }
            let p = &mut pieces[current];
            p.times.push(t);
            p.values.push(*x);
            p.derivs.push(*dx);
        })?;
        Ok(ComplexTrajectory {
            period: schedule.period(),
            pieces,
        })
    }
}

fn check_span(t0: f64, t1: f64) -> Result<()> {
    if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
        return Err(Error::InvalidRequest(format!(
            "integration interval [{t0}, {t1}] must be finite and forward"
        )));
    }
    Ok(())
}

/// Integrates a smooth `rhs` from `t0` to `t1` at tolerance `tol`.
pub fn integrate<const N: usize, F>(rhs: F, x0: [C64; N], t0: f64, t1: f64, tol: f64) -> Result<[C64; N]>
where
    F: Fn(f64, &[C64; N]) -> [C64; N],
{
    if !(tol > 0.0) {
        return Err(Error::InvalidRequest("tolerance must be positive".into()));
    }
    check_span(t0, t1)?;
    if t1 == t0 {
        return Ok(x0);
    }
    let seg = [Segment {
        start: t0,
        end: t1,
        piece: 0,
    }];
    Integrator::new(tol).run(|t, _, x| rhs(t, x), x0, &seg, |_, _, _, _| {})
}

/// Strictly increasing sample times covering one integration interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub period: f64,
    pub samples: Vec<f64>,
    /// Positions in `samples` that are piece boundaries.
    pub boundaries: Vec<usize>,
}

impl TimeGrid {
    pub fn is_strictly_increasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1] > w[0])
    }
}

/// Samples recorded on one smooth piece.
#[derive(Debug, Clone)]
pub struct TrajectoryPiece<const N: usize> {
    pub piece: usize,
    pub times: Vec<f64>,
    pub values: Vec<[C64; N]>,
    pub derivs: Vec<[C64; N]>,
}

/// Dense solution: accepted-step samples with derivatives, grouped by piece.
/// Interpolation is cubic Hermite within a piece and never crosses a cut.
#[derive(Debug, Clone)]
pub struct ComplexTrajectory<const N: usize> {
    period: f64,
    pieces: Vec<TrajectoryPiece<N>>,
}

impl<const N: usize> ComplexTrajectory<N> {
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn pieces(&self) -> &[TrajectoryPiece<N>] {
        &self.pieces
    }

    pub fn start_time(&self) -> f64 {
        self.pieces[0].times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.pieces.last().unwrap().times.last().unwrap()
    }

    pub fn first(&self) -> [C64; N] {
        self.pieces[0].values[0]
    }

    pub fn last(&self) -> [C64; N] {
        *self.pieces.last().unwrap().values.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.grid().samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Sample times with the duplicated piece-boundary instants merged.
    pub fn grid(&self) -> TimeGrid {
        let mut samples = Vec::new();
        let mut boundaries = Vec::new();
        for (k, p) in self.pieces.iter().enumerate() {
            for (i, &t) in p.times.iter().enumerate() {
                if i == 0 && k > 0 {
                    boundaries.push(samples.len() - 1);
                    continue;
                }
                samples.push(t);
            }
        }
        TimeGrid {
            period: self.period,
            samples,
            boundaries,
        }
    }

    /// Every recorded sample as `(t, piece, value, derivative)`, boundary
    /// instants appearing once per adjacent piece.
    pub fn samples(&self) -> impl Iterator<Item = (f64, usize, &[C64; N], &[C64; N])> + '_ {
        self.pieces.iter().flat_map(|p| {
            p.times
                .iter()
                .zip(p.values.iter().zip(p.derivs.iter()))
                .map(move |(&t, (x, d))| (t, p.piece, x, d))
        })
    }

    /// Recorded piece containing `t`, pieces taken half-open except the last.
    fn piece_containing(&self, t: f64) -> Option<&TrajectoryPiece<N>> {
        self.pieces
            .iter()
            .find(|p| t >= p.times[0] && t < *p.times.last().unwrap())
            .or_else(|| self.pieces.last().filter(|p| t == *p.times.last().unwrap()))
    }

    /// State at `t` to integrator accuracy, re-integrating `rhs` from the
    /// nearest earlier sample. Returns `(piece, value, derivative)`.
    ///
    /// `rhs` must be the right-hand side that produced the trajectory.
    pub fn resume<F>(&self, rhs: F, t: f64, tol: f64) -> Result<(usize, [C64; N], [C64; N])>
    where
        F: Fn(f64, usize, &[C64; N]) -> [C64; N],
    {
        let piece = self.piece_containing(t).ok_or_else(|| {
            Error::InvalidRequest(format!(
                "t = {t} outside the recorded interval [{}, {}]",
                self.start_time(),
                self.end_time()
            ))
        })?;
        let idx = match piece.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => return Ok((piece.piece, piece.values[i], piece.derivs[i])),
            Err(i) => i - 1,
        };
        let seg = [Segment {
            start: piece.times[idx],
            end: t,
            piece: piece.piece,
        }];
        let x = Integrator::new(tol).run(&rhs, piece.values[idx], &seg, |_, _, _, _| {})?;
        let dx = rhs(t, piece.piece, &x);
        Ok((piece.piece, x, dx))
    }

    /// Hermite interpolation at `t` inside the recorded interval.
    pub fn eval(&self, t: f64) -> Option<[C64; N]> {
        let piece = self.piece_containing(t)?;
        let times = &piece.times;
        let idx = match times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => return Some(piece.values[i]),
            Err(i) => i - 1,
        };
        let (t0, t1) = (times[idx], times[idx + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let (x0, x1) = (&piece.values[idx], &piece.values[idx + 1]);
        let (d0, d1) = (&piece.derivs[idx], &piece.derivs[idx + 1]);
        let mut out = [C64::new(0.0, 0.0); N];
        for i in 0..N {
            out[i] = x0[i] * h00 + d0[i] * (h10 * h) + x1[i] * h01 + d1[i] * (h11 * h);
        }
        Some(out)
    }
}

/// `e^P - 1` without cancellation for small `|P|`.
pub fn exp_m1(p: C64) -> C64 {
    let (a, b) = (p.re, p.im);
    let ea_m1 = a.exp_m1();
    let half = 0.5 * b;
    let cos_m1 = -2.0 * half.sin() * half.sin();
    C64::new(ea_m1 * b.cos() + cos_m1, a.exp() * b.sin())
}

/// Periodic solution of `x' + p(t) x = q(t)` on one period.
#[derive(Debug, Clone)]
pub struct PeriodicSolution {
    pub trajectory: ComplexTrajectory<1>,
    /// `P(T) = integral of p over one period`.
    pub p_integral: C64,
    /// `|x(T) - x(0)|` of the re-integrated solution.
    pub periodicity_defect: f64,
    /// Largest `|x' + p x - q|` over the grid.
    pub max_residual: f64,
}

impl PeriodicSolution {
    pub fn initial_value(&self) -> C64 {
        self.trajectory.first()[0]
    }

    pub fn eval(&self, t: f64) -> C64 {
        let period = self.trajectory.period();
        let phase = t.rem_euclid(period);
        self.trajectory.eval(phase).expect("phase inside one period")[0]
    }
}

/// Initial value of the periodic solution of an affine scalar equation,
/// from the particular solution started at zero (`particular`), the
/// homogeneous solution started at one (`homogeneous`) and `P(T)`.
pub fn periodic_initial_value(particular: C64, homogeneous: C64, p_integral: C64) -> Result<C64> {
    let defect = exp_m1(p_integral).norm();
    if !(defect >= RESONANCE_THRESHOLD) {
        return Err(Error::Resonance { defect });
    }
    Ok(particular / (C64::new(1.0, 0.0) - homogeneous))
}

/// Unique `T`-periodic solution of `x' + p(t) x = q(t)`.
///
/// With `P(t) = int_0^t p`, the periodic initial value is
/// `I / (e^{P(T)} - 1)` where `I = int_0^T e^{P(s)} q(s) ds`; it is obtained
/// here from one pass that co-integrates the particular and homogeneous
/// solutions together with `P`, followed by a dense re-integration.
pub fn periodic_linear_solution<P, Q>(p: P, q: Q, schedule: &Schedule, tol: f64) -> Result<PeriodicSolution>
where
    P: Fn(f64, usize) -> C64,
    Q: Fn(f64, usize) -> C64,
{
    let integ = Integrator::new(tol);
    let period = schedule.period();
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let end = integ.propagate(
        |t, k, s: &[C64; 3]| {
            let pt = p(t, k);
            [q(t, k) - pt * s[0], -pt * s[1], pt]
        },
        [zero, one, zero],
        schedule,
        0.0,
        period,
    )?;
    let x0 = periodic_initial_value(end[0], end[1], end[2])?;
    let trajectory = integ.trajectory(
        |t, k, s: &[C64; 1]| [q(t, k) - p(t, k) * s[0]],
        [x0],
        schedule,
        0.0,
        period,
    )?;
    let periodicity_defect = (trajectory.last()[0] - x0).norm();
    let max_residual = trajectory
        .samples()
        .map(|(t, k, x, d)| (d[0] + p(t, k) * x[0] - q(t, k)).norm())
        .fold(0.0, f64::max);
    Ok(PeriodicSolution {
        trajectory,
        p_integral: end[2],
        periodicity_defect,
        max_residual,
    })
}

/// One-period propagator of a traceless 2x2 linear system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monodromy2x2 {
    pub m: [[C64; 2]; 2],
}

impl Monodromy2x2 {
    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Eigenvalues `(mu_+, mu_-)` of the monodromy.
    pub fn multipliers(&self) -> (C64, C64) {
        let tr = self.trace();
        let disc = (tr * tr - self.det() * 4.0).sqrt();
        let a = (tr + disc) * 0.5;
        let b = (tr - disc) * 0.5;
        // The smaller-magnitude root comes from the product to avoid cancellation.
        if a.norm() >= b.norm() {
            (a, self.det() / a)
        } else {
            (self.det() / b, b)
        }
    }

    /// Eigenvector for multiplier `mu`, using whichever adjugate column is
    /// better conditioned.
    pub fn eigenvector(&self, mu: C64) -> [C64; 2] {
        let v1 = [self.m[0][1], mu - self.m[0][0]];
        let v2 = [mu - self.m[1][1], self.m[1][0]];
        let n1 = v1[0].norm() + v1[1].norm();
        let n2 = v2[0].norm() + v2[1].norm();
        if n1 >= n2 {
            v1
        } else {
            v2
        }
    }
}

/// Monodromy of `x' = A(t) x` for traceless `A`.
pub fn monodromy_2x2<A>(a: A, schedule: &Schedule, tol: f64) -> Result<Monodromy2x2>
where
    A: Fn(f64, usize) -> [[C64; 2]; 2],
{
    for k in 0..schedule.pieces() {
        let (s, e) = schedule.piece_bounds(k);
        for t in [s, 0.5 * (s + e)] {
            let m = a(t, k);
            let tr = (m[0][0] + m[1][1]).norm();
            let scale = m.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
            if tr > 1e-12 * scale {
                return Err(Error::param("generator", format!("trace {tr:.3e} is not zero at t = {t}")));
            }
        }
    }
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let end = Integrator::new(tol).propagate(
        |t, k, s: &[C64; 4]| {
            let m = a(t, k);
            [
                m[0][0] * s[0] + m[0][1] * s[1],
                m[1][0] * s[0] + m[1][1] * s[1],
                m[0][0] * s[2] + m[0][1] * s[3],
                m[1][0] * s[2] + m[1][1] * s[3],
            ]
        },
        [one, zero, zero, one],
        schedule,
        0.0,
        schedule.period(),
    )?;
    Ok(Monodromy2x2 {
        m: [[end[0], end[2]], [end[1], end[3]]],
    })
}
