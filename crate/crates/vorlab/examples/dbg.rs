use vorlab::{field, Grid, StreamSolver, VorticityField};
fn main() {
    let grid = Grid::new(8.0, 64).unwrap();
    let solver = StreamSolver::new(grid);
    let n = grid.n();
    let base = field::gaussian(grid, 1.0).unwrap();
    let (sx, sy) = (3usize, 5usize);
    let mut shifted_vals = vec![0.0; n * n];
    for iy in 0..n {
        for ix in 0..n {
            let x = grid.coord(ix) - sx as f64 * grid.spacing();
            let y = grid.coord(iy) - sy as f64 * grid.spacing();
            shifted_vals[iy * n + ix] =
                (-(x * x + y * y) / 2.0).exp() / (2.0 * std::f64::consts::PI);
        }
    }
    let shifted = VorticityField::from_values(grid, shifted_vals).unwrap();
    let sv0 = solver.solve(&base).unwrap();
    let sv1 = solver.solve(&shifted).unwrap();
    for margin in [1usize, 4, 8, 12] {
        let mut max_u = 0.0f64;
        for iy in margin..n - sy - margin { for ix in margin..n - sx - margin {
            let d = (sv0.ux[iy*n+ix] - sv1.ux[(iy+sy)*n+ix+sx]).abs();
            if d > max_u { max_u = d; }
        }}
        println!("margin {margin:2}: max ux err {max_u:.3e}");
    }
}
