//! Scalar functionals of the flow and the conservation multipliers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{VorticityField, EPS_CLIP_REL};
use crate::spectral::SpectralOps;
use crate::stream::StreamVelocity;

/// The functional bundle every multiplier formula consumes.
///
/// `S` is `\int omega log omega`, which decreases along the dissipative
/// flows in this crate; `V = \int omega x . grad psi` is state-independent
/// and equals `-1/(4 pi)` in the continuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostics {
    /// Center of mass.
    pub m: [f64; 2],
    /// Interaction energy `E = 1/2 \int psi omega`.
    pub e: f64,
    /// Moment of inertia about the center of mass.
    pub i: f64,
    /// Entropy `\int omega log omega`.
    pub s: f64,
    /// Enstrophy-type norm `\int omega^2`.
    pub z2: f64,
    /// Kinetic-type norm `\int omega |grad psi|^2`.
    pub k: f64,
    /// Virial `\int omega x . grad psi`.
    pub v: f64,
}

impl FlowDiagnostics {
    /// Multiplier-system determinant `2 I K - V^2` (Cauchy-Schwarz slack).
    pub fn cauchy_schwarz_slack(&self) -> f64 {
        2.0 * self.i * self.k - self.v * self.v
    }
}

/// Lagrange pair making the dissipative term tangent to {E, I = const}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub a: f64,
    pub b: f64,
}

/// All seven scalars by midpoint quadrature.
///
/// `sv` must come from `omega`; `K` and `V` consume `grad psi` recovered
/// from the spectral perpendicular velocity.
pub fn diagnostics(omega: &VorticityField, sv: &StreamVelocity) -> FlowDiagnostics {
    let grid = omega.grid();
    let w = grid.cell_area();
    let vals = omega.values();
    let clip = EPS_CLIP_REL * omega.max_value();

    let mut mx = 0.0;
    let mut my = 0.0;
    for (k, &om) in vals.iter().enumerate() {
        let [x, y] = grid.position(k);
        mx += x * om;
        my += y * om;
    }
    mx *= w;
    my *= w;
    let mass = omega.mass();
    let cx = mx / mass;
    let cy = my / mass;

    let mut e = 0.0;
    let mut i = 0.0;
    let mut s = 0.0;
    let mut z2 = 0.0;
    let mut kk = 0.0;
    let mut v = 0.0;
    for (k, &om) in vals.iter().enumerate() {
        let [x, y] = grid.position(k);
        e += sv.psi[k] * om;
        let dx = x - cx;
        let dy = y - cy;
        i += (dx * dx + dy * dy) * om;
        if om > clip {
            s += om * om.ln();
        }
        z2 += om * om;
        let gx = sv.psi_x(k);
        let gy = sv.psi_y(k);
        kk += om * (gx * gx + gy * gy);
        v += om * (x * gx + y * gy);
    }
    FlowDiagnostics {
        m: [mx, my],
        e: 0.5 * w * e,
        i: 0.5 * w * i,
        s: w * s,
        z2: w * z2,
        k: w * kk,
        v: w * v,
    }
}

/// Closed-form conservation multipliers.
///
/// They solve the linear system `Z2 = b K + a V`, `-2 = b V + 2 a I`
/// (the conditions `dE/dt = 0`, `dI/dt = 0` along the constrained flow).
pub fn multipliers(d: &FlowDiagnostics) -> Result<Multipliers> {
    let denom = d.cauchy_schwarz_slack();
    let guard = 1e-8 * (2.0 * d.i * d.k);
    if denom <= guard {
        return Err(Error::DegenerateMultipliers { denom, guard });
    }
    let b = (2.0 * d.i * d.z2 + 2.0 * d.v) / denom;
    let a = -(2.0 * d.k + d.v * d.z2) / denom;
    Ok(Multipliers { a, b })
}

/// Mean-field residual `R = \int omega |grad(log omega - b psi - a|x|^2/2)|^2`.
///
/// Evaluated as `|grad omega - omega (b grad psi + a x)|^2 / omega` summed
/// over cells above the positivity clip, which avoids differentiating
/// `log omega` where the field vanishes. The instantaneous entropy
/// derivative along the constrained flow equals `-nu R`.
pub fn mf_residual(
    omega: &VorticityField,
    sv: &StreamVelocity,
    m: &Multipliers,
    ops: &SpectralOps,
) -> f64 {
    let grid = omega.grid();
    let (gx, gy) = ops.gradient(omega.values());
    let clip = EPS_CLIP_REL * omega.max_value();
    let mut r = 0.0;
    for (k, &om) in omega.values().iter().enumerate() {
        if om <= clip {
            continue;
        }
        let [x, y] = grid.position(k);
        let vx = gx[k] - om * (m.b * sv.psi_x(k) + m.a * x);
        let vy = gy[k] - om * (m.b * sv.psi_y(k) + m.a * y);
        r += (vx * vx + vy * vy) / om;
    }
    r * grid.cell_area()
}

/// Fisher information `\int |grad omega|^2 / omega`, the entropy
/// dissipation rate integrand of the unconstrained flow. Equals
/// `mf_residual` with both multipliers zero.
pub fn fisher_information(omega: &VorticityField, sv: &StreamVelocity, ops: &SpectralOps) -> f64 {
    mf_residual(omega, sv, &Multipliers { a: 0.0, b: 0.0 }, ops)
}
