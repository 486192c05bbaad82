//! Ermakov-Pinney reconstruction of the unitary frame.
//!
//! For a constant-mass protocol, a real periodic solution `xi` of
//! `xi'' + Omega_t^2 xi = eta^2 / xi^3` generates `r2` through
//! `r2 = i/2 + xi^2 / (i (1 + xi^2) + xi xi' / eta)`. Writing
//! `u = 1 / (r2 - i/2) - i = (p + i) / xi^2` with `p = xi xi' / eta`
//! inverts this in closed form on the unitarily stable branch:
//! `xi^2 = 1 / Im u` and `p = Re u / Im u`. The Pinney equation then reads
//! `p' = eta (p^2 + 1) / xi^2 - Omega^2 xi^2 / eta`.

use serde::Serialize;

use super::unitary::UnitaryFrame;
use super::Sigma;
use crate::error::{Error, Result};
use crate::ode::C64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinneyReport {
    pub eta: f64,
    pub sigma: Sigma,
    /// Largest `|p' - eta (p^2 + 1)/xi^2 + Omega^2 xi^2 / eta|`, US only.
    pub max_pinney_residual: Option<f64>,
    /// Largest `|d(xi^2)/dt - 2 eta p|`, US only.
    pub max_derivative_defect: Option<f64>,
    /// Largest `|J - (1/xi^2 + xi^2 + p^2/xi^2) / 2|`, US only.
    pub max_j_defect: Option<f64>,
    /// Largest deviation of `r1` from its `xi` form, US only.
    pub max_r1_defect: Option<f64>,
    /// Range of the reconstructed `xi^2`, US only.
    pub xi_squared_range: Option<(f64, f64)>,
    /// Grid points where `xi^2` came out non-positive.
    pub inversion_failures: usize,
    /// `max |4 |r2|^2 - 1|`, UU only.
    pub uu_phase_defect: Option<f64>,
    pub j_phase_defect: f64,
    pub r1p_defect: f64,
    pub r1_z_defect: f64,
}

/// Checks the frame against the Pinney equation on the frame's own grid.
pub fn pinney_crosscheck(frame: &UnitaryFrame) -> Result<PinneyReport> {
    let p = frame.protocol();
    let eta = p
        .eta()
        .ok_or_else(|| Error::InvalidRequest("the Pinney mapping needs a constant-mass mechanical protocol".into()))?;
    let diag = frame.diagnostics();
    let mut report = PinneyReport {
        eta,
        sigma: frame.sigma,
        max_pinney_residual: None,
        max_derivative_defect: None,
        max_j_defect: None,
        max_r1_defect: None,
        xi_squared_range: None,
        inversion_failures: 0,
        uu_phase_defect: diag.uu_phase_defect,
        j_phase_defect: diag.j_phase_defect,
        r1p_defect: diag.r1p_defect,
        r1_z_defect: diag.r1_z_defect,
    };
    if frame.sigma == Sigma::UU {
        return Ok(report);
    }
    let half_i = C64::new(0.0, 0.5);
    let i = C64::i();
    let (mut res, mut der, mut jd, mut r1d) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in frame.samples() {
        let w = s.r2 - half_i;
        let u = 1.0 / w - i;
        let u_dot = -s.r2_dot / (w * w);
        if !(u.im > 0.0) {
            report.inversion_failures += 1;
            continue;
        }
        let xi2 = 1.0 / u.im;
        let pp = u.re / u.im;
        let pp_dot = (u_dot.re * u.im - u.re * u_dot.im) / (u.im * u.im);
        let xi2_dot = -u_dot.im / (u.im * u.im);
        let big = p.mech_frequency_in_stroke(s.t, p.stroke_of_piece(s.piece));
        let scale = 1.0 + eta * (pp * pp + 1.0) / xi2;
        res = res.max((pp_dot - eta * (pp * pp + 1.0) / xi2 + big * big * xi2 / eta).abs() / scale);
        der = der.max((xi2_dot - 2.0 * eta * pp).abs() / (1.0 + xi2_dot.abs()));
        let j = 0.5 * (1.0 / xi2 + xi2 + pp * pp / xi2);
        jd = jd.max((s.j - j).norm() / j);
        let r1 = C64::new(pp / 4.0, -(1.0 / xi2 - xi2 + pp * pp / xi2) / 8.0);
        r1d = r1d.max((s.r1 - r1).norm() / r1.norm().max(1.0));
        lo = lo.min(xi2);
        hi = hi.max(xi2);
    }
    if report.inversion_failures == 0 {
        report.max_pinney_residual = Some(res);
        report.max_derivative_defect = Some(der);
        report.max_j_defect = Some(jd);
        report.max_r1_defect = Some(r1d);
        report.xi_squared_range = Some((lo, hi));
    }
    Ok(report)
}
