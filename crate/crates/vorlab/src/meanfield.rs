//! Independent radial solver for the self-consistent Gibbs states
//! `omega = exp(b psi + a r^2/2) / Z` and their thermodynamic structure.
//!
//! The solver works on a uniform radial grid with trapezoid quadrature and
//! never touches the 2-D spectral machinery, so it can serve as a
//! cross-validation target for the grid dynamics.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{self, VorticityField};
use crate::grid::Grid;

/// Upper bound of the admissible inverse-temperature range.
pub const B_MAX: f64 = 8.0 * PI;

/// Converged radial mean-field state with its functional values.
#[derive(Debug, Clone)]
pub struct MeanFieldState {
    pub a: f64,
    pub b: f64,
    /// Uniform radial grid including r = 0.
    pub r: Vec<f64>,
    pub omega: Vec<f64>,
    /// Free-space stream function of `omega`.
    pub psi: Vec<f64>,
    /// Normalization `Z = int exp(b psi + a r^2/2)`.
    pub z: f64,
    pub e: f64,
    pub i: f64,
    pub s: f64,
    /// Free energy `S - b E - a I`.
    pub f: f64,
}

/// One row of the canonical thermodynamic table. `s` equals the dual
/// entropy value at `(e, i)` by the Legendre identity.
#[derive(Debug, Clone, Copy)]
pub struct ThermoPoint {
    pub a: f64,
    pub b: f64,
    pub f: f64,
    pub e: f64,
    pub i: f64,
    pub s: f64,
}

/// Verification summary attached to a canonical table.
#[derive(Debug, Clone, Copy, Default)]
pub struct TableChecks {
    /// Largest eigenvalue of the central-difference Hessian over interior
    /// points (negative when F is numerically concave); None when the
    /// table is too small or non-uniform for the stencil.
    pub max_hessian_eigenvalue: Option<f64>,
    /// Max relative error of the identity dF/da = -I.
    pub max_da_identity_err: f64,
    /// Max relative error of the identity dF/db = -E.
    pub max_db_identity_err: f64,
    /// Worst violation of the supporting-plane inequality for F
    /// (<= 0 up to roundoff when F is concave).
    pub max_plane_violation: f64,
}

#[derive(Debug, Clone)]
pub struct ThermoTable {
    pub points: Vec<ThermoPoint>,
    pub checks: TableChecks,
}

// ---------------------------------------------------------------------
// radial quadrature helpers (uniform grid, r-weights)
// ---------------------------------------------------------------------

/// Composite Simpson quadrature of `g(r) * 2 pi r dr`. The grids here have
/// an even interval count; Simpson removes the trapezoid's O(dr^2)
/// endpoint term at r = 0, which would otherwise cap the functional
/// accuracy near 1e-6.
fn trapz_r(r: &[f64], g: &[f64]) -> f64 {
    let dr = r[1] - r[0];
    let n = r.len();
    debug_assert!(n % 2 == 1);
    let f = |k: usize| g[k] * r[k];
    let mut acc = f(0) + f(n - 1);
    let mut k = 1;
    while k < n - 1 {
        acc += 4.0 * f(k);
        k += 2;
    }
    let mut k = 2;
    while k < n - 1 {
        acc += 2.0 * f(k);
        k += 2;
    }
    2.0 * PI * acc * dr / 3.0
}

/// Enclosed mass `m(r)` by cumulative trapezoid.
fn enclosed_mass(r: &[f64], omega: &[f64]) -> Vec<f64> {
    let dr = r[1] - r[0];
    let mut m = vec![0.0; r.len()];
    for k in 1..r.len() {
        m[k] = m[k - 1] + PI * (omega[k - 1] * r[k - 1] + omega[k] * r[k]) * dr;
    }
    m
}

/// Free-space stream function of a radial density:
/// `psi(r) = -(1/2pi) [ log r m(r) + 2 pi int_r^R s log s omega ds ]`.
fn stream_radial(r: &[f64], omega: &[f64]) -> Vec<f64> {
    let dr = r[1] - r[0];
    let n = r.len();
    let m = enclosed_mass(r, omega);
    let mut suffix = vec![0.0; n];
    let term = |j: usize| {
        if r[j] == 0.0 {
            0.0
        } else {
            r[j].ln() * r[j] * omega[j]
        }
    };
    for k in (0..n - 1).rev() {
        suffix[k] = suffix[k + 1] + PI * (term(k) + term(k + 1)) * dr;
    }
    (0..n)
        .map(|k| {
            let log_term = if r[k] == 0.0 { 0.0 } else { r[k].ln() * m[k] };
            -(log_term + suffix[k]) / (2.0 * PI)
        })
        .collect()
}

/// One application of the Gibbs map: `exp(b (psi + gauge) + a r^2/2) / Z`.
/// Any constant added to `psi` is absorbed by the normalization.
pub fn gibbs_map(r: &[f64], psi: &[f64], a: f64, b: f64, gauge: f64) -> (Vec<f64>, f64) {
    let mut expo: Vec<f64> = r
        .iter()
        .zip(psi.iter())
        .map(|(&rr, &p)| b * (p + gauge) + 0.5 * a * rr * rr)
        .collect();
    let peak = expo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for e in &mut expo {
        *e = (*e - peak).exp();
    }
    let z_shifted = trapz_r(r, &expo);
    let omega: Vec<f64> = expo.iter().map(|&e| e / z_shifted).collect();
    // true normalization constant of the unshifted exponent
    let z = z_shifted * peak.exp();
    (omega, z)
}

fn radial_grid(a: f64, b: f64) -> Vec<f64> {
    // Gaussian-type tails: exp(a r^2 / 2) below 1e-26 of the peak needs
    // r_max ~ 11 / sqrt(|a|); concentration (b > 0) only shrinks states.
    let r_max = 11.0 / (-a).sqrt();
    let m = if b > 5.0 * PI { 8193 } else { 4097 };
    let dr = r_max / (m - 1) as f64;
    (0..m).map(|k| k as f64 * dr).collect()
}

fn functionals(state: &mut MeanFieldState) {
    let r = &state.r;
    let om = &state.omega;
    let psi = &state.psi;
    let e_int: Vec<f64> = psi.iter().zip(om.iter()).map(|(&p, &o)| 0.5 * p * o).collect();
    let i_int: Vec<f64> = r.iter().zip(om.iter()).map(|(&rr, &o)| 0.5 * rr * rr * o).collect();
    let s_int: Vec<f64> = om
        .iter()
        .map(|&o| if o > 0.0 { o * o.ln() } else { 0.0 })
        .collect();
    state.e = trapz_r(r, &e_int);
    state.i = trapz_r(r, &i_int);
    state.s = trapz_r(r, &s_int);
    state.f = state.s - state.b * state.e - state.a * state.i;
}

/// Damped fixed-point iteration for the radial mean-field state.
///
/// `a < 0` and `b < 8 pi` are required; `b <= 0` always converges, and
/// large positive `b` is reached by continuation from below.
pub fn solve_mf_radial(a: f64, b: f64) -> Result<MeanFieldState> {
    check_range(a, b)?;
    if b <= 6.0 * PI {
        return solve_from_guess(a, b, None);
    }
    // continuation in b with quarter-pi steps, warm-starting each solve
    let mut state = solve_from_guess(a, 6.0 * PI, None)?;
    let mut bc = 6.0 * PI;
    while bc < b {
        bc = (bc + 0.25 * PI).min(b);
        state = solve_from_guess(a, bc, Some(&state))?;
    }
    Ok(state)
}

/// Same solver with an explicit initial profile (uniqueness checks,
/// continuation, warm starts).
pub fn solve_mf_radial_from(a: f64, b: f64, guess: &MeanFieldState) -> Result<MeanFieldState> {
    check_range(a, b)?;
    solve_from_guess(a, b, Some(guess))
}

fn check_range(a: f64, b: f64) -> Result<()> {
    if !(a < 0.0) {
        return Err(Error::InvalidConfig(format!(
            "mean-field solver needs a < 0, got {a}"
        )));
    }
    if b >= B_MAX {
        return Err(Error::InvalidInverseTemperature { b });
    }
    Ok(())
}

fn solve_from_guess(a: f64, b: f64, guess: Option<&MeanFieldState>) -> Result<MeanFieldState> {
    let r = radial_grid(a, b);
    let n = r.len();

    // initial profile: Gaussian of the right inertia scale, or the guess
    // resampled onto this grid
    let mut omega: Vec<f64> = match guess {
        None => gibbs_map(&r, &vec![0.0; n], a, 0.0, 0.0).0,
        Some(g) => {
            let resampled: Vec<f64> =
                r.iter().map(|&rr| interp_linear(&g.r, &g.omega, rr)).collect();
            let total = trapz_r(&r, &resampled);
            resampled.iter().map(|v| v / total).collect()
        }
    };

    let max_iter = 5000;
    let mut theta = 0.5;
    let mut prev_res = f64::INFINITY;
    let mut psi = stream_radial(&r, &omega);
    for iter in 0..max_iter {
        let (target, z) = gibbs_map(&r, &psi, a, b, 0.0);
        let abs_diff: Vec<f64> = target
            .iter()
            .zip(omega.iter())
            .map(|(t, o)| (t - o).abs())
            .collect();
        let res = trapz_r(&r, &abs_diff);
        if res < 1e-10 {
            let mut state = MeanFieldState {
                a,
                b,
                r,
                omega,
                psi,
                z,
                e: 0.0,
                i: 0.0,
                s: 0.0,
                f: 0.0,
            };
            functionals(&mut state);
            return Ok(state);
        }
        if res > prev_res && theta > 0.05 {
            theta *= 0.5;
        }
        prev_res = res;
        for (o, t) in omega.iter_mut().zip(target.iter()) {
            *o += theta * (t - *o);
        }
        psi = stream_radial(&r, &omega);
        if iter == max_iter - 1 {
            return Err(Error::MeanFieldNonConvergence {
                a,
                b,
                iters: max_iter,
                residual: res,
            });
        }
    }
    unreachable!()
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= *xs.last().unwrap() {
        return *ys.last().unwrap();
    }
    let dx = xs[1] - xs[0];
    let j = ((x - xs[0]) / dx) as usize;
    let t = (x - xs[j]) / dx;
    ys[j] * (1.0 - t) + ys[j + 1] * t
}

/// `F = S - b E - a I` from the state's stored functionals.
pub fn free_energy(state: &MeanFieldState) -> f64 {
    state.s - state.b * state.e - state.a * state.i
}

/// Penalized free energy `S - b E - a I` of an arbitrary radial profile
/// (used to check the minimizer property of the Gibbs states).
pub fn free_energy_of_profile(r: &[f64], omega: &[f64], a: f64, b: f64) -> f64 {
    let psi = stream_radial(r, omega);
    let e_int: Vec<f64> = psi.iter().zip(omega.iter()).map(|(&p, &o)| 0.5 * p * o).collect();
    let i_int: Vec<f64> = r.iter().zip(omega.iter()).map(|(&rr, &o)| 0.5 * rr * rr * o).collect();
    let s_int: Vec<f64> = omega
        .iter()
        .map(|&o| if o > 0.0 { o * o.ln() } else { 0.0 })
        .collect();
    trapz_r(r, &s_int) - b * trapz_r(r, &e_int) - a * trapz_r(r, &i_int)
}

/// Tail mass beyond 90% of the radial extent (truncation monitor).
pub fn tail_mass(state: &MeanFieldState) -> f64 {
    let m = enclosed_mass(&state.r, &state.omega);
    let total = *m.last().unwrap();
    let cut = (0.9 * (state.r.len() - 1) as f64) as usize;
    total - m[cut]
}

/// Virial of the state by radial quadrature through the Gauss-law
/// gradient (state independent, `-1/(4 pi)` in the continuum).
pub fn virial(state: &MeanFieldState) -> f64 {
    let m = enclosed_mass(&state.r, &state.omega);
    // int omega r psi' 2 pi r dr with psi' = -m/(2 pi r)
    let integrand: Vec<f64> = state
        .omega
        .iter()
        .zip(m.iter())
        .map(|(&o, &mm)| -o * mm / (2.0 * PI))
        .collect();
    trapz_r(&state.r, &integrand)
}

/// Solve the canonical family on the product of the two lists and verify
/// the derivative identities and concavity.
pub fn canonical_table(a_list: &[f64], b_list: &[f64]) -> Result<ThermoTable> {
    let mut points = Vec::with_capacity(a_list.len() * b_list.len());
    for &a in a_list {
        for &b in b_list {
            let st = solve_mf_radial(a, b)?;
            points.push(ThermoPoint {
                a,
                b,
                f: st.f,
                e: st.e,
                i: st.i,
                s: st.s,
            });
        }
    }

    let mut checks = TableChecks::default();
    if points.len() > 1 {
        // derivative identities dF/da = -I, dF/db = -E by central differences
        let h = 1e-3;
        for p in &points {
            let fa_p = solve_mf_radial(p.a + h, p.b)?.f;
            let fa_m = solve_mf_radial(p.a - h, p.b)?.f;
            let da = (fa_p - fa_m) / (2.0 * h);
            let err_a = (da + p.i).abs() / p.i.abs();
            checks.max_da_identity_err = checks.max_da_identity_err.max(err_a);

            let fb_p = solve_mf_radial(p.a, p.b + h)?.f;
            let fb_m = solve_mf_radial(p.a, p.b - h)?.f;
            let db = (fb_p - fb_m) / (2.0 * h);
            let err_b = (db + p.e).abs() / p.e.abs().max(1e-3);
            checks.max_db_identity_err = checks.max_db_identity_err.max(err_b);
        }

        // concavity via the supporting-plane inequality with the analytic
        // supergradient (-I, -E): F(q) <= F(p) - I_p (a_q - a_p) - E_p (b_q - b_p)
        let mut worst = f64::NEG_INFINITY;
        for p in &points {
            for q in &points {
                let plane = p.f - p.i * (q.a - p.a) - p.e * (q.b - p.b);
                worst = worst.max(q.f - plane);
            }
        }
        checks.max_plane_violation = worst;

        // central-difference Hessian on uniformly spaced tables
        checks.max_hessian_eigenvalue = hessian_check(a_list, b_list, &points);
    }

    Ok(ThermoTable { points, checks })
}

fn uniform_spacing(xs: &[f64]) -> Option<f64> {
    if xs.len() < 3 {
        return None;
    }
    let d = xs[1] - xs[0];
    for w in xs.windows(2) {
        if ((w[1] - w[0]) - d).abs() > 1e-9 * d.abs() {
            return None;
        }
    }
    Some(d)
}

fn hessian_check(a_list: &[f64], b_list: &[f64], points: &[ThermoPoint]) -> Option<f64> {
    let da = uniform_spacing(a_list)?;
    let db = uniform_spacing(b_list)?;
    let nb = b_list.len();
    let f = |ia: usize, ib: usize| points[ia * nb + ib].f;
    let mut max_eig = f64::NEG_INFINITY;
    for ia in 1..a_list.len() - 1 {
        for ib in 1..nb - 1 {
            let faa = (f(ia + 1, ib) - 2.0 * f(ia, ib) + f(ia - 1, ib)) / (da * da);
            let fbb = (f(ia, ib + 1) - 2.0 * f(ia, ib) + f(ia, ib - 1)) / (db * db);
            let fab = (f(ia + 1, ib + 1) - f(ia + 1, ib - 1) - f(ia - 1, ib + 1)
                + f(ia - 1, ib - 1))
                / (4.0 * da * db);
            // eigenvalues of [[faa, fab], [fab, fbb]]
            let tr = faa + fbb;
            let det = faa * fbb - fab * fab;
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            max_eig = max_eig.max(tr / 2.0 + disc);
        }
    }
    if max_eig.is_finite() {
        Some(max_eig)
    } else {
        None
    }
}

/// Dual problem: maximize `F(b,a) + b E + a I` over the multipliers and
/// return the state at the maximizer. The first-order conditions are
/// `I(omega_ab) = I`, `E(omega_ab) = E`, so the returned state matches the
/// targets to 1e-6 relative.
pub fn microcanonical_state(e_target: f64, i_target: f64) -> Result<MeanFieldState> {
    if !(i_target > 0.0) {
        return Err(Error::NoMaximizer {
            e: e_target,
            i: i_target,
            reason: "moment of inertia target must be positive".into(),
        });
    }
    let mut a = -1.0 / i_target;
    let mut b = 0.0_f64;
    let e_scale = e_target.abs().max(1e-3);

    let no_max = |a: f64, b: f64, reason: &str| Error::NoMaximizer {
        e: e_target,
        i: i_target,
        reason: format!("{reason} (reached a = {a:.4}, b = {b:.4})"),
    };

    for _ in 0..60 {
        let st = solve_mf_radial(a, b)?;
        let res_i = i_target - st.i;
        let res_e = e_target - st.e;
        if res_i.abs() / i_target < 1e-6 && res_e.abs() / e_scale < 1e-6 {
            return Ok(st);
        }

        // finite-difference Jacobian of (I, E) with respect to (a, b)
        let ha = 1e-4 * a.abs().max(0.1);
        let hb = 1e-4 * b.abs().max(0.1);
        let sa_p = solve_mf_radial_from(a + ha, b, &st)?;
        let sa_m = solve_mf_radial_from(a - ha, b, &st)?;
        let sb_p = solve_mf_radial_from(a, b + hb, &st)?;
        let sb_m = solve_mf_radial_from(a, b - hb, &st)?;
        let j_ia = (sa_p.i - sa_m.i) / (2.0 * ha);
        let j_ib = (sb_p.i - sb_m.i) / (2.0 * hb);
        let j_ea = (sa_p.e - sa_m.e) / (2.0 * ha);
        let j_eb = (sb_p.e - sb_m.e) / (2.0 * hb);
        let det = j_ia * j_eb - j_ib * j_ea;
        if det.abs() < 1e-14 {
            return Err(no_max(a, b, "singular response matrix"));
        }
        let mut step_a = (res_i * j_eb - res_e * j_ib) / det;
        let mut step_b = (res_e * j_ia - res_i * j_ea) / det;

        // trust region: keep a negative and b inside the admissible range
        let mut shrink = 1.0_f64;
        while a + shrink * step_a >= -1e-6 || (b + shrink * step_b) >= B_MAX {
            shrink *= 0.5;
            if shrink < 1e-6 {
                return Err(no_max(a, b, "step forced the multipliers out of range"));
            }
        }
        step_a *= shrink;
        step_b *= shrink;
        a += step_a;
        b += step_b;
        if b >= B_MAX - 1e-3 {
            return Err(no_max(a, b, "ascent pushed b to the concentration limit 8 pi"));
        }
        if b <= -600.0 {
            return Err(no_max(a, b, "ascent pushed b below any physical spread state"));
        }
        if a >= -1e-3 {
            return Err(no_max(a, b, "ascent pushed a to zero (unbounded spread)"));
        }
    }
    Err(no_max(a, b, "no convergence in 60 iterations"))
}

/// Sample the self-similar spreading Gaussian at time `t` on a grid.
pub fn oseen_field(t: f64, grid: Grid) -> Result<VorticityField> {
    field::oseen(grid, t)
}

/// Evaluate the state on a 2-D grid through its Gibbs form,
/// `omega(x) = exp(b psi(|x|) + a |x|^2/2)/Z`, interpolating `psi` and
/// extending it by the far-field log law beyond the radial extent.
pub fn resample_to_grid(state: &MeanFieldState, grid: Grid) -> Result<VorticityField> {
    let r_max = *state.r.last().unwrap();
    let psi_end = *state.psi.last().unwrap();
    let rs = state.r.clone();
    let psis = state.psi.clone();
    let (a, b) = (state.a, state.b);
    VorticityField::from_fn(grid, move |x, y| {
        let r = (x * x + y * y).sqrt();
        let psi = if r >= r_max {
            psi_end - (r / r_max).ln() / (2.0 * PI)
        } else {
            interp_cubic(&rs, &psis, r)
        };
        (b * psi + 0.5 * a * r * r).exp()
    })
}

/// Catmull-Rom interpolation on a uniform grid (psi is smooth and slowly
/// varying, so this keeps the resampling error negligible).
fn interp_cubic(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let dx = xs[1] - xs[0];
    let j = (((x - xs[0]) / dx) as usize).min(n - 2);
    let t = (x - xs[j]) / dx;
    let y0 = ys[j.saturating_sub(1)];
    let y1 = ys[j];
    let y2 = ys[j + 1];
    let y3 = ys[(j + 2).min(n - 1)];
    let a0 = -0.5 * y0 + 1.5 * y1 - 1.5 * y2 + 0.5 * y3;
    let a1 = y0 - 2.5 * y1 + 2.0 * y2 - 0.5 * y3;
    let a2 = -0.5 * y0 + 0.5 * y2;
    a0 * t * t * t + a1 * t * t + a2 * t + y1
}
