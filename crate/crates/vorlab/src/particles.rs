//! Stochastic point-vortex systems: the plain vortex SDE, the essential
//! process with the mean-field energy multiplier, and the fully projected
//! energy-conserving process, plus particle-to-grid density deposition.
//!
//! All randomness comes from counter-based streams keyed by
//! `(seed, particle, step)`, so trajectories are bitwise reproducible at
//! any thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::VorticityField;
use crate::grid::Grid;
use crate::rng::CounterRng;

/// Step index reserved for the initial sampling draws.
const INIT_STEP: u64 = u64::MAX;

/// Guard for `|grad H|^2` in the multiplier and projection formulas.
const GRAD_GUARD: f64 = 1e-14;

/// Smooth interaction kernel `g(x) = -(1/4pi) log(|x|^2 + delta^2)`.
#[derive(Debug, Clone, Copy)]
pub struct RegularizedKernel {
    pub delta: f64,
}

impl RegularizedKernel {
    pub fn new(delta: f64) -> Self {
        assert!(delta > 0.0, "kernel regularization must be positive");
        RegularizedKernel { delta }
    }

    #[inline]
    fn rho(&self, dx: f64, dy: f64) -> f64 {
        dx * dx + dy * dy + self.delta * self.delta
    }

    #[inline]
    pub fn g(&self, dx: f64, dy: f64) -> f64 {
        -self.rho(dx, dy).ln() / (4.0 * std::f64::consts::PI)
    }

    /// `grad g = -(1/2pi) x / (|x|^2 + delta^2)`.
    #[inline]
    pub fn grad(&self, dx: f64, dy: f64) -> [f64; 2] {
        let c = -1.0 / (2.0 * std::f64::consts::PI * self.rho(dx, dy));
        [c * dx, c * dy]
    }

    /// `lap g = -(1/pi) delta^2 / (|x|^2 + delta^2)^2`, strictly negative.
    #[inline]
    pub fn laplacian(&self, dx: f64, dy: f64) -> f64 {
        let rho = self.rho(dx, dy);
        -self.delta * self.delta / (std::f64::consts::PI * rho * rho)
    }

    /// Hessian of g (symmetric 2x2, [xx, xy, yy]).
    #[inline]
    pub fn hessian(&self, dx: f64, dy: f64) -> [f64; 3] {
        let rho = self.rho(dx, dy);
        let c = -1.0 / (2.0 * std::f64::consts::PI);
        [
            c * (1.0 / rho - 2.0 * dx * dx / (rho * rho)),
            c * (-2.0 * dx * dy / (rho * rho)),
            c * (1.0 / rho - 2.0 * dy * dy / (rho * rho)),
        ]
    }
}

/// N interacting vortices with their noise streams.
#[derive(Debug, Clone)]
pub struct VortexEnsemble {
    positions: Vec<[f64; 2]>,
    delta: f64,
    seed: u64,
    /// Next step index to consume from the noise streams.
    step_index: u64,
}

impl VortexEnsemble {
    /// Wrap explicit positions (diagnostics and deposition accept any
    /// count; the interacting steps require at least two particles).
    pub fn from_positions(positions: Vec<[f64; 2]>, delta: f64, seed: u64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidConfig("ensemble needs at least one particle".into()));
        }
        if positions.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidConfig("non-finite particle position".into()));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "kernel regularization must be positive, got {delta}"
            )));
        }
        Ok(VortexEnsemble {
            positions,
            delta,
            seed,
            step_index: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn positions_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.positions
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn kernel(&self) -> RegularizedKernel {
        RegularizedKernel::new(self.delta)
    }

    /// Empirical moment of inertia about the empirical center of mass.
    pub fn inertia(&self) -> f64 {
        let n = self.len() as f64;
        let (mx, my) = self
            .positions
            .iter()
            .fold((0.0, 0.0), |(ax, ay), p| (ax + p[0], ay + p[1]));
        let (cx, cy) = (mx / n, my / n);
        0.5 * self
            .positions
            .iter()
            .map(|p| {
                let dx = p[0] - cx;
                let dy = p[1] - cy;
                dx * dx + dy * dy
            })
            .sum::<f64>()
            / n
    }

    /// Mean-field energy per particle, `H/N` plus the self-energy
    /// correction `g(0)/(2N)`: an estimator of the continuum `E`.
    pub fn energy_estimate(&self) -> f64 {
        let n = self.len() as f64;
        let k = self.kernel();
        hamiltonian_n(self) / n + k.g(0.0, 0.0) / (2.0 * n)
    }
}

/// Sample positions i.i.d. from `omega` by inverse CDF over cells with
/// uniform jitter inside each cell. Deterministic in `seed`.
pub fn init_ensemble(
    omega: &VorticityField,
    n: usize,
    delta: f64,
    seed: u64,
) -> Result<VortexEnsemble> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "interacting ensemble needs n >= 2, got {n}"
        )));
    }
    omega.validate()?;
    let grid = omega.grid();
    let mut cum = Vec::with_capacity(grid.cell_count());
    let mut acc = 0.0;
    for &v in omega.values() {
        acc += v.max(0.0);
        cum.push(acc);
    }
    let total = acc;
    let h = grid.spacing();
    let positions: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let rng = CounterRng::new(seed, i as u64);
            let u = rng.uniform(INIT_STEP, 0) * total;
            let cell = match cum.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
                Ok(k) | Err(k) => k.min(cum.len() - 1),
            };
            let [cx, cy] = grid.position(cell);
            let jx = (rng.uniform(INIT_STEP, 1) - 0.5) * h;
            let jy = (rng.uniform(INIT_STEP, 2) - 0.5) * h;
            [cx + jx, cy + jy]
        })
        .collect();
    VortexEnsemble::from_positions(positions, delta, seed)
}

/// Mean-field energy `H = (1/N) sum_{j<r} g(x_j - x_r)`.
pub fn hamiltonian_n(e: &VortexEnsemble) -> f64 {
    let n = e.len();
    assert!(n >= 2, "hamiltonian needs at least a pair");
    let k = e.kernel();
    let p = e.positions();
    // parallel over rows, each row summed in index order
    let row_sums: Vec<f64> = (0..n - 1)
        .into_par_iter()
        .map(|j| {
            let mut s = 0.0;
            for r in j + 1..n {
                s += k.g(p[j][0] - p[r][0], p[j][1] - p[r][1]);
            }
            s
        })
        .collect();
    row_sums.iter().sum::<f64>() / n as f64
}

/// Per-particle interaction sums: rotational drift, `grad_i H`, `lap_i H`.
struct Forces {
    rot: Vec<[f64; 2]>,
    grad: Vec<[f64; 2]>,
    lap_total: f64,
    grad_sq: f64,
}

fn forces(e: &VortexEnsemble) -> Forces {
    let n = e.len();
    let k = e.kernel();
    let p = e.positions();
    let inv_n = 1.0 / n as f64;
    let per: Vec<([f64; 2], [f64; 2], f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rot = [0.0, 0.0];
            let mut grad = [0.0, 0.0];
            let mut lap = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dx = p[i][0] - p[j][0];
                let dy = p[i][1] - p[j][1];
                let g = k.grad(dx, dy);
                // perp gradient: (-d/dy, d/dx)
                rot[0] -= g[1];
                rot[1] += g[0];
                grad[0] += g[0];
                grad[1] += g[1];
                lap += k.laplacian(dx, dy);
            }
            (
                [rot[0] * inv_n, rot[1] * inv_n],
                [grad[0] * inv_n, grad[1] * inv_n],
                lap * inv_n,
            )
        })
        .collect();
    let mut rot = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    let mut lap_total = 0.0;
    let mut grad_sq = 0.0;
    for (r, g, l) in per {
        lap_total += l;
        grad_sq += g[0] * g[0] + g[1] * g[1];
        rot.push(r);
        grad.push(g);
    }
    Forces {
        rot,
        grad,
        lap_total,
        grad_sq,
    }
}

/// Energy multiplier `b_N = (Delta H) / |grad H|^2` (self-terms excluded).
pub fn b_n(e: &VortexEnsemble) -> Result<f64> {
    assert!(e.len() >= 2, "b_N needs at least a pair");
    let f = forces(e);
    if f.grad_sq <= GRAD_GUARD {
        return Err(Error::DegenerateConfiguration {
            grad_sq: f.grad_sq,
            guard: GRAD_GUARD,
        });
    }
    Ok(f.lap_total / f.grad_sq)
}

/// Which drift/projection the step applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VortexScheme {
    /// Rotational interaction plus noise only (no multiplier).
    Plain,
    /// Drift corrected by `-b_N grad H` (energy conserved on average).
    Essential,
    /// Full Ito-corrected process: `dH = 0` pathwise up to time
    /// discretization.
    Projected,
}

/// Diagnostic switches for the stepper.
#[derive(Debug, Clone, Copy)]
pub struct SdeOptions {
    pub noise: bool,
    pub interaction: bool,
}

impl Default for SdeOptions {
    fn default() -> Self {
        SdeOptions {
            noise: true,
            interaction: true,
        }
    }
}

/// One Euler-Maruyama step. Matched noise across schemes: the Gaussian
/// increments depend only on `(seed, particle, step_index)`.
pub fn step_ensemble(
    e: &mut VortexEnsemble,
    dt: f64,
    scheme: VortexScheme,
    opts: SdeOptions,
) -> Result<()> {
    let n = e.len();
    if n < 2 {
        return Err(Error::InvalidConfig("interacting step needs n >= 2".into()));
    }
    if !(dt >= 0.0) {
        return Err(Error::InvalidConfig(format!("dt must be >= 0, got {dt}")));
    }

    // noise increments first (independent of the scheme)
    let sqrt_2dt = (2.0 * dt).sqrt();
    let step = e.step_index;
    let seed = e.seed;
    let noise: Vec<[f64; 2]> = if opts.noise {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let rng = CounterRng::new(seed, i as u64);
                let (zx, zy) = rng.normal_pair(step, 0);
                [sqrt_2dt * zx, sqrt_2dt * zy]
            })
            .collect()
    } else {
        vec![[0.0, 0.0]; n]
    };

    let mut dx = vec![[0.0_f64; 2]; n];
    if opts.interaction {
        let f = forces(e);
        let lambda = match scheme {
            VortexScheme::Plain => 0.0,
            VortexScheme::Essential => {
                if f.grad_sq <= GRAD_GUARD {
                    return Err(Error::DegenerateConfiguration {
                        grad_sq: f.grad_sq,
                        guard: GRAD_GUARD,
                    });
                }
                -f.lap_total / f.grad_sq
            }
            VortexScheme::Projected => {
                if f.grad_sq <= GRAD_GUARD {
                    return Err(Error::DegenerateConfiguration {
                        grad_sq: f.grad_sq,
                        guard: GRAD_GUARD,
                    });
                }
                let q = hessian_quadratic_form(e, &f.grad);
                (-f.lap_total + q / f.grad_sq) / f.grad_sq
            }
        };
        for i in 0..n {
            dx[i][0] = dt * (f.rot[i][0] + lambda * f.grad[i][0]);
            dx[i][1] = dt * (f.rot[i][1] + lambda * f.grad[i][1]);
        }
        if matches!(scheme, VortexScheme::Projected) && opts.noise {
            // project the noise off the grad H direction
            let mut dot = 0.0;
            for i in 0..n {
                dot += f.grad[i][0] * noise[i][0] + f.grad[i][1] * noise[i][1];
            }
            let c = dot / f.grad_sq;
            for i in 0..n {
                dx[i][0] -= c * f.grad[i][0];
                dx[i][1] -= c * f.grad[i][1];
            }
        }
    }
    if opts.noise {
        for i in 0..n {
            dx[i][0] += noise[i][0];
            dx[i][1] += noise[i][1];
        }
    }

    for (p, d) in e.positions.iter_mut().zip(dx.iter()) {
        p[0] += d[0];
        p[1] += d[1];
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::NonFiniteField);
        }
    }
    e.step_index += 1;
    Ok(())
}

/// `grad H^T D^2 H grad H` over all particle pairs.
fn hessian_quadratic_form(e: &VortexEnsemble, grad: &[[f64; 2]]) -> f64 {
    let n = e.len();
    let k = e.kernel();
    let p = e.positions();
    let inv_n = 1.0 / n as f64;
    let per: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let h = k.hessian(p[i][0] - p[j][0], p[i][1] - p[j][1]);
                // block D2_{ii} contributes +h, block D2_{ij} contributes -h
                let gi = grad[i];
                let gj = grad[j];
                let di = [gi[0] - gj[0], gi[1] - gj[1]];
                acc += gi[0] * (h[0] * di[0] + h[1] * di[1])
                    + gi[1] * (h[1] * di[0] + h[2] * di[1]);
            }
            acc * inv_n
        })
        .collect();
    per.iter().sum()
}

/// One step of the essential process.
pub fn step_essential(e: &mut VortexEnsemble, dt: f64) -> Result<()> {
    step_ensemble(e, dt, VortexScheme::Essential, SdeOptions::default())
}

/// One step of the fully projected, H-conserving process.
pub fn step_projected(e: &mut VortexEnsemble, dt: f64) -> Result<()> {
    step_ensemble(e, dt, VortexScheme::Projected, SdeOptions::default())
}

/// One step of the plain vortex SDE (no multiplier).
pub fn step_plain(e: &mut VortexEnsemble, dt: f64) -> Result<()> {
    step_ensemble(e, dt, VortexScheme::Plain, SdeOptions::default())
}

/// RMS per-particle magnitude of the projected process's extra drift
/// relative to the essential process (decays with N).
pub fn projection_drift_rms(e: &VortexEnsemble) -> Result<f64> {
    let f = forces(e);
    if f.grad_sq <= GRAD_GUARD {
        return Err(Error::DegenerateConfiguration {
            grad_sq: f.grad_sq,
            guard: GRAD_GUARD,
        });
    }
    let q = hessian_quadratic_form(e, &f.grad);
    let lambda_proj = (-f.lap_total + q / f.grad_sq) / f.grad_sq;
    let lambda_ess = -f.lap_total / f.grad_sq;
    let extra = lambda_proj - lambda_ess;
    let n = e.len() as f64;
    Ok((f.grad_sq / n).sqrt() * extra.abs())
}

/// Gaussian-kernel deposition of the empirical measure onto a grid;
/// the result is normalized to unit mass.
pub fn deposit_density(
    e: &VortexEnsemble,
    grid: Grid,
    bandwidth: f64,
) -> Result<VorticityField> {
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "deposition bandwidth must be positive, got {bandwidth}"
        )));
    }
    let l = grid.half_width();
    let outside = e
        .positions()
        .iter()
        .filter(|p| p[0].abs() >= l || p[1].abs() >= l)
        .count();
    if outside > 0 {
        return Err(Error::ParticlesOutsideGrid { count: outside });
    }
    let n = grid.n();
    let h = grid.spacing();
    let reach = (7.0 * bandwidth / h).ceil() as isize;
    let inv_2s2 = 1.0 / (2.0 * bandwidth * bandwidth);
    let mut values = vec![0.0; grid.cell_count()];
    for p in e.positions() {
        let ix0 = ((p[0] + l) / h - 0.5).round() as isize;
        let iy0 = ((p[1] + l) / h - 0.5).round() as isize;
        for iy in (iy0 - reach).max(0)..=(iy0 + reach).min(n as isize - 1) {
            let y = grid.coord(iy as usize);
            for ix in (ix0 - reach).max(0)..=(ix0 + reach).min(n as isize - 1) {
                let x = grid.coord(ix as usize);
                let d2 = (x - p[0]) * (x - p[0]) + (y - p[1]) * (y - p[1]);
                values[iy as usize * n + ix as usize] += (-d2 * inv_2s2).exp();
            }
        }
    }
    let mut field = VorticityField::from_values(grid, values)?;
    field.normalize()?;
    Ok(field)
}
