//! Shared independent oracles for the integration tests.
//!
//! Everything here is deliberately written against the continuum formulas
//! with one-dimensional quadratures, so it never touches the spectral or
//! convolution machinery it is used to check.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Closed-form functionals of the unit Gaussian family
/// `omega(r) = exp(-r^2/(2 s2)) / (2 pi s2)` with inertia `I = s2`.
pub mod gaussian {
    use super::*;

    pub fn inertia(s2: f64) -> f64 {
        s2
    }

    pub fn entropy(s2: f64) -> f64 {
        -(2.0 * PI * s2).ln() - 1.0
    }

    pub fn z2(s2: f64) -> f64 {
        1.0 / (4.0 * PI * s2)
    }

    /// Interaction energy; dilation shifts it logarithmically.
    pub fn energy(s2: f64) -> f64 {
        // E(W) for s2 = 2, then E(lambda-dilated) = E - log(lambda)/(4 pi)
        let e_w = -(3.0 * 2.0_f64.ln() - EULER_GAMMA) / (8.0 * PI);
        e_w - (s2 / 2.0).ln() / (8.0 * PI)
    }

    /// Stream function at the origin for s2 = 2 (the self-similar profile).
    pub fn psi_w_at_origin() -> f64 {
        -(4.0_f64.ln() - EULER_GAMMA) / (4.0 * PI)
    }
}

/// Virial integral: state independent.
pub fn virial_exact() -> f64 {
    -1.0 / (4.0 * PI)
}

/// Radial profile sampled on a uniform r-grid, with quadratures built on
/// the trapezoid rule with r-weights.
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub omega: Vec<f64>,
}

impl RadialProfile {
    pub fn sample(f: impl Fn(f64) -> f64, r_max: f64, m: usize) -> Self {
        let dr = r_max / (m - 1) as f64;
        let r: Vec<f64> = (0..m).map(|k| k as f64 * dr).collect();
        let omega = r.iter().map(|&rr| f(rr)).collect();
        RadialProfile { r, omega }
    }

    fn dr(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    /// Trapezoid quadrature of `g(r) * 2 pi r dr`.
    pub fn integrate(&self, g: &[f64]) -> f64 {
        let dr = self.dr();
        let mut acc = 0.0;
        for k in 0..self.r.len() - 1 {
            let a = g[k] * self.r[k];
            let b = g[k + 1] * self.r[k + 1];
            acc += 0.5 * (a + b) * dr;
        }
        2.0 * PI * acc
    }

    pub fn mass(&self) -> f64 {
        self.integrate(&self.omega)
    }

    /// Enclosed mass `m(r)` by cumulative trapezoid.
    pub fn enclosed_mass(&self) -> Vec<f64> {
        let dr = self.dr();
        let mut m = vec![0.0; self.r.len()];
        for k in 1..self.r.len() {
            let a = self.omega[k - 1] * self.r[k - 1];
            let b = self.omega[k] * self.r[k];
            m[k] = m[k - 1] + PI * (a + b) * dr;
        }
        m
    }

    /// Free-space stream function by the radial Green representation:
    /// `psi(r) = -(1/2pi) [ log r * m(r) + int_r^R log s 2 pi s omega ds ]`.
    pub fn stream_function(&self) -> Vec<f64> {
        let m = self.enclosed_mass();
        let dr = self.dr();
        let n = self.r.len();
        // suffix integral int_r^R log s * 2 pi s omega(s) ds
        let mut suffix = vec![0.0; n];
        for k in (0..n - 1).rev() {
            let term = |j: usize| {
                if self.r[j] == 0.0 {
                    0.0
                } else {
                    self.r[j].ln() * self.r[j] * self.omega[j]
                }
            };
            suffix[k] = suffix[k + 1] + PI * (term(k) + term(k + 1)) * dr;
        }
        (0..n)
            .map(|k| {
                let log_term = if self.r[k] == 0.0 { 0.0 } else { self.r[k].ln() * m[k] };
                -(log_term + suffix[k]) / (2.0 * PI)
            })
            .collect()
    }

    /// `d psi / dr = -m(r) / (2 pi r)` (Gauss law), zero at the origin.
    pub fn stream_gradient(&self) -> Vec<f64> {
        let m = self.enclosed_mass();
        self.r
            .iter()
            .zip(m.iter())
            .map(|(&r, &mm)| if r == 0.0 { 0.0 } else { -mm / (2.0 * PI * r) })
            .collect()
    }

    pub fn energy(&self) -> f64 {
        let psi = self.stream_function();
        let integrand: Vec<f64> = psi
            .iter()
            .zip(self.omega.iter())
            .map(|(&p, &o)| 0.5 * p * o)
            .collect();
        self.integrate(&integrand)
    }

    pub fn inertia(&self) -> f64 {
        let integrand: Vec<f64> = self
            .r
            .iter()
            .zip(self.omega.iter())
            .map(|(&r, &o)| 0.5 * r * r * o)
            .collect();
        self.integrate(&integrand)
    }

    pub fn entropy(&self) -> f64 {
        let integrand: Vec<f64> = self
            .omega
            .iter()
            .map(|&o| if o > 0.0 { o * o.ln() } else { 0.0 })
            .collect();
        self.integrate(&integrand)
    }

    pub fn z2(&self) -> f64 {
        let integrand: Vec<f64> = self.omega.iter().map(|&o| o * o).collect();
        self.integrate(&integrand)
    }

    /// `K = int omega |psi'|^2` through the Gauss-law gradient.
    pub fn kinetic(&self) -> f64 {
        let g = self.stream_gradient();
        let integrand: Vec<f64> = g
            .iter()
            .zip(self.omega.iter())
            .map(|(&gg, &o)| o * gg * gg)
            .collect();
        self.integrate(&integrand)
    }

    /// `V = int omega r psi'` through the Gauss-law gradient.
    pub fn virial(&self) -> f64 {
        let g = self.stream_gradient();
        let integrand: Vec<f64> = self
            .r
            .iter()
            .zip(g.iter().zip(self.omega.iter()))
            .map(|(&r, (&gg, &o))| o * r * gg)
            .collect();
        self.integrate(&integrand)
    }
}

/// Independent 2x2 solve of the conservation system
/// `[K V; V 2I] (b, a)^T = (Z2, -2)^T`.
pub fn multipliers_from_system(i: f64, z2: f64, k: f64, v: f64) -> (f64, f64) {
    let det = k * 2.0 * i - v * v;
    let b = (z2 * 2.0 * i - v * (-2.0)) / det;
    let a = (k * (-2.0) - v * z2) / det;
    (a, b)
}

/// Mean and standard error of a sample.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Angular average of the regularized kernel on circles of radii (r, s):
/// used for the double-radial quadrature of smeared interaction energies.
pub fn kernel_circle_average(delta: f64, r: f64, s: f64, n_theta: usize) -> f64 {
    let mut acc = 0.0;
    for k in 0..n_theta {
        let th = (k as f64 + 0.5) * 2.0 * PI / n_theta as f64;
        let d2 = r * r + s * s - 2.0 * r * s * th.cos() + delta * delta;
        acc += -d2.ln() / (4.0 * PI);
    }
    acc / n_theta as f64
}

/// `E_delta = 1/2 int int g_delta(x-y) omega(x) omega(y)` for a radial
/// density, by double radial quadrature with angular reduction.
pub fn interaction_energy_radial(
    omega: impl Fn(f64) -> f64,
    delta: f64,
    r_max: f64,
    m: usize,
    n_theta: usize,
) -> f64 {
    let dr = r_max / m as f64;
    let mut acc = 0.0;
    for i in 0..m {
        let r = (i as f64 + 0.5) * dr;
        let wr = 2.0 * PI * r * omega(r) * dr;
        for j in 0..m {
            let s = (j as f64 + 0.5) * dr;
            let ws = 2.0 * PI * s * omega(s) * dr;
            acc += 0.5 * wr * ws * kernel_circle_average(delta, r, s, n_theta);
        }
    }
    acc
}

/// Independent 1-D radial solver for the inertia-preserving heat flow
/// `d_t omega = (1/r) d_r [ r (d_r omega - a r omega) ]` with
/// `a = -1/I(omega)`, Crank-Nicolson in time, second-order in `dr`.
/// Returns `omega(r)` at `t_end`.
pub struct RadialFpSolver {
    pub r: Vec<f64>,
    pub omega: Vec<f64>,
    dr: f64,
}

impl RadialFpSolver {
    pub fn new(omega0: impl Fn(f64) -> f64, r_max: f64, m: usize) -> Self {
        let dr = r_max / (m - 1) as f64;
        let r: Vec<f64> = (0..m).map(|k| k as f64 * dr).collect();
        let omega = r.iter().map(|&rr| omega0(rr)).collect();
        RadialFpSolver { r, omega, dr }
    }

    pub fn inertia(&self) -> f64 {
        let g: Vec<f64> = self
            .r
            .iter()
            .zip(self.omega.iter())
            .map(|(&rr, &o)| 0.5 * rr * rr * o)
            .collect();
        self.integrate(&g)
    }

    pub fn mass(&self) -> f64 {
        self.integrate(&self.omega)
    }

    fn integrate(&self, g: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.r.len() - 1 {
            acc += 0.5 * (g[k] * self.r[k] + g[k + 1] * self.r[k + 1]) * self.dr;
        }
        2.0 * PI * acc
    }

    /// Apply the spatial operator L[omega] at fixed multiplier `a`.
    fn apply(&self, om: &[f64], a: f64) -> Vec<f64> {
        let m = self.r.len();
        let dr = self.dr;
        let mut out = vec![0.0; m];
        // flux F = d_r omega - a r omega at half points; L = (1/r)(r F)_r
        let flux = |om: &[f64], k: usize| -> f64 {
            // half point between k and k+1
            let rh = 0.5 * (self.r[k] + self.r[k + 1]);
            (om[k + 1] - om[k]) / dr - a * rh * 0.5 * (om[k] + om[k + 1])
        };
        for k in 1..m - 1 {
            let rp = 0.5 * (self.r[k] + self.r[k + 1]);
            let rm = 0.5 * (self.r[k - 1] + self.r[k]);
            out[k] = (rp * flux(om, k) - rm * flux(om, k - 1)) / (self.r[k] * dr);
        }
        // r = 0: symmetric cell, L = 4 (omega_1 - omega_0)/dr^2 - 2 a omega
        out[0] = 4.0 * (om[1] - om[0]) / (dr * dr) - 2.0 * a * om[0];
        out[m - 1] = 0.0;
        out
    }

    /// Advance to `t_end` with explicit RK2 (small dt keeps this an
    /// independent but simple oracle).
    pub fn run(&mut self, t_end: f64, dt: f64) {
        let steps = (t_end / dt).round() as usize;
        for _ in 0..steps {
            let a1 = -1.0 / self.inertia();
            let k1 = self.apply(&self.omega, a1);
            let mid: Vec<f64> = self
                .omega
                .iter()
                .zip(k1.iter())
                .map(|(&o, &d)| o + dt * d)
                .collect();
            let i_mid = {
                let g: Vec<f64> = self
                    .r
                    .iter()
                    .zip(mid.iter())
                    .map(|(&rr, &o)| 0.5 * rr * rr * o)
                    .collect();
                self.integrate(&g)
            };
            let a2 = -1.0 / i_mid;
            let k2 = self.apply(&mid, a2);
            for ((o, &d1), &d2) in self.omega.iter_mut().zip(k1.iter()).zip(k2.iter()) {
                *o += 0.5 * dt * (d1 + d2);
            }
        }
    }
}
