//! Pseudo-spectral machinery on the periodic extension of the grid:
//! 2-D FFTs, derivative multipliers, and 2/3-rule dealiasing.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

pub type Spec = Vec<Complex<f64>>;

/// FFT plans plus wavenumber tables for one grid size.
pub struct SpectralOps {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Signed wavenumber per index, Nyquist zeroed (derivative convention).
    k: Vec<f64>,
    /// Per-axis 2/3-rule keep flags.
    keep: Vec<bool>,
}

impl SpectralOps {
    pub fn new(grid: &Grid) -> Self {
        Self::with_size(grid.n(), grid.half_width())
    }

    /// Plans for an `n x n` periodic box of half-width `l` (period `2l`).
    pub fn with_size(n: usize, l: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let dk = std::f64::consts::PI / l; // 2*pi / (2*l)
        let mut k = vec![0.0; n];
        for (j, kj) in k.iter_mut().enumerate() {
            let signed = if j <= n / 2 { j as isize } else { j as isize - n as isize };
            // Zero the Nyquist mode so derivatives of real fields stay real.
            *kj = if j == n / 2 { 0.0 } else { dk * signed as f64 };
        }
        let cut = n / 3;
        let keep = (0..n)
            .map(|j| {
                let signed = if j <= n / 2 { j as isize } else { j as isize - n as isize };
                signed.unsigned_abs() <= cut
            })
            .collect();
        SpectralOps { n, fwd, inv, k, keep }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    fn transform(&self, data: &mut Spec, forward: bool) {
        let n = self.n;
        let plan = if forward { &self.fwd } else { &self.inv };
        plan.process(data); // all rows at once
        transpose_square(data, n);
        plan.process(data);
        transpose_square(data, n);
    }

    /// Forward 2-D FFT of a real field (unnormalized).
    pub fn fft2(&self, real: &[f64]) -> Spec {
        let mut data: Spec = real.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform(&mut data, true);
        data
    }

    /// Forward 2-D FFT of complex data, in place (unnormalized).
    pub fn fft2_complex(&self, data: &mut Spec) {
        self.transform(data, true);
    }

    /// Inverse 2-D FFT, returning the real part scaled by 1/n^2.
    pub fn ifft2_real(&self, mut spec: Spec) -> Vec<f64> {
        self.transform(&mut spec, false);
        let scale = 1.0 / (self.n * self.n) as f64;
        spec.iter().map(|c| c.re * scale).collect()
    }

    /// Inverse 2-D FFT keeping both parts: returns (re, im) scaled by 1/n^2.
    pub fn ifft2_pair(&self, mut spec: Spec) -> (Vec<f64>, Vec<f64>) {
        self.transform(&mut spec, false);
        let scale = 1.0 / (self.n * self.n) as f64;
        let re = spec.iter().map(|c| c.re * scale).collect();
        let im = spec.iter().map(|c| c.im * scale).collect();
        (re, im)
    }

    #[inline]
    pub fn kx(&self, idx: usize) -> f64 {
        self.k[idx % self.n]
    }

    #[inline]
    pub fn ky(&self, idx: usize) -> f64 {
        self.k[idx / self.n]
    }

    /// Zero all modes outside the 2/3 square (dealiasing).
    pub fn dealias(&self, spec: &mut Spec) {
        let n = self.n;
        for (idx, c) in spec.iter_mut().enumerate() {
            if !(self.keep[idx % n] && self.keep[idx / n]) {
                *c = Complex::new(0.0, 0.0);
            }
        }
    }

    /// Both partial derivatives of a spectrum in one inverse transform:
    /// ifft of `(i kx - ky) F` is `f_x + i f_y` when `f` is real.
    pub fn gradient_of_spec(&self, spec: &Spec) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let packed: Spec = spec
            .iter()
            .enumerate()
            .map(|(idx, &f)| {
                let kx = self.k[idx % n];
                let ky = self.k[idx / n];
                Complex::new(0.0, kx) * f - ky * f
            })
            .collect();
        self.ifft2_pair(packed)
    }

    /// Gradient of a real field (forward + one packed inverse transform).
    pub fn gradient(&self, real: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let spec = self.fft2(real);
        self.gradient_of_spec(&spec)
    }

    /// Spectral Laplacian of a spectrum, in place.
    pub fn laplacian_spec(&self, spec: &mut Spec) {
        let n = self.n;
        for (idx, c) in spec.iter_mut().enumerate() {
            let kx = self.k[idx % n];
            let ky = self.k[idx / n];
            *c *= -(kx * kx + ky * ky);
        }
    }

    /// Spectrum of div(fx, fy) from the packed forward transform of `fx + i fy`.
    pub fn divergence_spec(&self, fx: &[f64], fy: &[f64]) -> Spec {
        let n = self.n;
        let packed: Spec = fx
            .iter()
            .zip(fy.iter())
            .map(|(&a, &b)| Complex::new(a, b))
            .collect();
        let mut c = packed;
        self.transform(&mut c, true);
        // Hermitian split: fx_hat(k) = (C(k) + conj(C(-k)))/2,
        //                  fy_hat(k) = (C(k) - conj(C(-k)))/(2i).
        let mut out = vec![Complex::new(0.0, 0.0); n * n];
        for iy in 0..n {
            let iy_neg = (n - iy) % n;
            for ix in 0..n {
                let ix_neg = (n - ix) % n;
                let idx = iy * n + ix;
                let c_k = c[idx];
                let c_nk = c[iy_neg * n + ix_neg].conj();
                let fx_hat = 0.5 * (c_k + c_nk);
                let fy_hat = Complex::new(0.0, -0.5) * (c_k - c_nk);
                let kx = self.k[ix];
                let ky = self.k[iy];
                out[idx] = Complex::new(0.0, kx) * fx_hat + Complex::new(0.0, ky) * fy_hat;
            }
        }
        out
    }
}

/// In-place square transpose, blocked for cache friendliness.
fn transpose_square(data: &mut [Complex<f64>], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + B).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn wave_field(n: usize, l: f64, mx: i32, my: i32) -> Vec<f64> {
        let g = Grid::new(l, n).unwrap();
        (0..n * n)
            .map(|k| {
                let [x, y] = g.position(k);
                (PI / l * (mx as f64 * x + my as f64 * y)).sin()
            })
            .collect()
    }

    #[test]
    fn round_trip() {
        let ops = SpectralOps::with_size(32, 3.0);
        let f = wave_field(32, 3.0, 2, 3);
        let back = ops.ifft2_real(ops.fft2(&f));
        for (a, b) in f.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_plane_wave() {
        let n = 32;
        let l = 3.0;
        let ops = SpectralOps::with_size(n, l);
        let g = Grid::new(l, n).unwrap();
        let f = wave_field(n, l, 2, 1);
        let (fx, fy) = ops.gradient(&f);
        for k in 0..n * n {
            let [x, y] = g.position(k);
            let phase = PI / l * (2.0 * x + y);
            let ex = 2.0 * PI / l * phase.cos();
            let ey = PI / l * phase.cos();
            assert!((fx[k] - ex).abs() < 1e-10, "fx mismatch at {k}");
            assert!((fy[k] - ey).abs() < 1e-10, "fy mismatch at {k}");
        }
    }

    #[test]
    fn divergence_matches_gradient_sum() {
        let n = 32;
        let l = 2.0;
        let ops = SpectralOps::with_size(n, l);
        let f = wave_field(n, l, 1, 2);
        let g = wave_field(n, l, 3, 1);
        let div = ops.ifft2_real(ops.divergence_spec(&f, &g));
        let (fx, _) = ops.gradient(&f);
        let (_, gy) = ops.gradient(&g);
        for k in 0..n * n {
            assert!((div[k] - (fx[k] + gy[k])).abs() < 1e-10);
        }
    }

    #[test]
    fn laplacian_of_wave() {
        let n = 32;
        let l = 3.0;
        let ops = SpectralOps::with_size(n, l);
        let f = wave_field(n, l, 2, 2);
        let mut spec = ops.fft2(&f);
        ops.laplacian_spec(&mut spec);
        let lap = ops.ifft2_real(spec);
        let k2 = 2.0 * (2.0 * PI / l).powi(2);
        for k in 0..n * n {
            assert!((lap[k] + k2 * f[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn dealias_zeroes_high_modes() {
        let n = 30;
        let ops = SpectralOps::with_size(n, 1.0);
        let mut spec = vec![Complex::new(1.0, 0.0); n * n];
        ops.dealias(&mut spec);
        // mode (n/2, 0) must be gone, mode (n/3, 0) kept
        assert_eq!(spec[n / 2].re, 0.0);
        assert_eq!(spec[n / 3].re, 1.0);
    }
}
