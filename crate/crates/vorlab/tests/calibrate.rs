//! Dev harness for the log-kernel self-cell constant (run with --ignored).

mod common;

use vorlab::{diagnostics, field, Grid, StreamSolver};

/// Solve c0 so that the discrete interaction energy of the self-similar
/// Gaussian matches the closed form, then Richardson-extrapolate h -> 0.
#[test]
#[ignore]
fn calibrate_self_cell_constant() {
    let e_exact = common::gaussian::energy(2.0);
    let l = 12.0;
    let mut estimates = Vec::new();
    for n in [64usize, 96, 128, 192, 256] {
        let grid = Grid::new(l, n).unwrap();
        let h = grid.spacing();
        let f = field::gaussian(grid, 2.0).unwrap();
        let solver0 = StreamSolver::with_self_cell(grid, 0.0);
        let d0 = diagnostics::diagnostics(&f, &solver0.solve(&f).unwrap());
        // dE/dc0 = h^2 Z2 / (4 pi)
        let slope = h * h * d0.z2 / (4.0 * std::f64::consts::PI);
        let c0 = (e_exact - d0.e) / slope;
        println!("n = {n:4}  h = {h:.5}  c0(h) = {c0:.12}");
        estimates.push((h, c0));
    }
    for w in estimates.windows(2) {
        let (h1, c1) = w[0];
        let (h2, c2) = w[1];
        let r2 = (h1 / h2).powi(2);
        let extrap = (r2 * c2 - c1) / (r2 - 1.0);
        println!("richardson({h1:.4} -> {h2:.4}): {extrap:.12}");
    }
}

/// Check E and V accuracy with the production constant at two resolutions.
#[test]
#[ignore]
fn probe_accuracy_with_production_constant() {
    let l = 12.0;
    for n in [128usize, 192, 256] {
        let grid = Grid::new(l, n).unwrap();
        let f = field::gaussian(grid, 2.0).unwrap();
        let solver = StreamSolver::new(grid);
        let sv = solver.solve(&f).unwrap();
        let d = diagnostics::diagnostics(&f, &sv);
        let m = diagnostics::multipliers(&d).unwrap();
        println!(
            "n = {n:4}: dE = {:+.3e}  dV = {:+.3e} dZ2 = {:+.3e} dI = {:+.3e} b = {:+.3e} a+1/I = {:+.3e}",
            d.e - common::gaussian::energy(2.0),
            d.v - common::virial_exact(),
            d.z2 - common::gaussian::z2(2.0),
            d.i - 2.0,
            m.b,
            m.a + 1.0 / d.i,
        );
        // K against the radial oracle
        let prof = common::RadialProfile::sample(
            |r| (-r * r / 4.0).exp() / (4.0 * std::f64::consts::PI),
            40.0,
            200_001,
        );
        println!("        dK = {:+.3e}  dS = {:+.3e}", d.k - prof.kinetic(), d.s - common::gaussian::entropy(2.0));
        let _ = sv;
    }
}

/// max |u . grad omega| for a discretely radial field (advection residual).
#[test]
#[ignore]
fn probe_radial_advection_residual() {
    use vorlab::spectral::SpectralOps;
    for n in [128usize, 256] {
        let grid = Grid::new(12.0, n).unwrap();
        let ops = SpectralOps::new(&grid);
        let f = field::gaussian(grid, 2.0).unwrap();
        let sv = StreamSolver::new(grid).solve(&f).unwrap();
        let (gx, gy) = ops.gradient(f.values());
        let mut max_dot = 0.0_f64;
        for k in 0..grid.cell_count() {
            max_dot = max_dot.max((sv.ux[k] * gx[k] + sv.uy[k] * gy[k]).abs());
        }
        // conservation form: div(u omega) assembled spectrally with dealiasing
        let fx: Vec<f64> = sv.ux.iter().zip(f.values()).map(|(&u, &o)| u * o).collect();
        let fy: Vec<f64> = sv.uy.iter().zip(f.values()).map(|(&u, &o)| u * o).collect();
        let mut div = ops.divergence_spec(&fx, &fy);
        ops.dealias(&mut div);
        let divr = ops.ifft2_real(div);
        let max_div = divr.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        println!("n = {n}: max|u.grad w| = {max_dot:.3e}   max|div(u w)| = {max_div:.3e}");
    }
}
