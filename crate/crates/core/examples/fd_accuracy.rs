use hflab_core::grid::{GridMapping, RadialGrid};
use hflab_core::scf::{ChannelOperator, FdOrder};

fn main() {
    for (label, order) in [("FD2", FdOrder::Two), ("FD4", FdOrder::Four)] {
        for &n in &[1000usize, 2000, 4000] {
            let grid = RadialGrid::build(1e-6, 60.0, n, GridMapping::LogUniform).unwrap();
            let v: Vec<f64> = grid.points().iter().map(|&r| -1.0 / r).collect();
            let op = ChannelOperator::new(&grid, 0, &v, None, order);
            let t = std::time::Instant::now();
            let (vals, _) = op.solve_lowest(&grid, 3, 0, &[]);
            println!(
                "{label} n={n}: e1={:+.10} err={:+.3e}  e2={:+.10} err={:+.3e} e3={:+.10} ({:?})",
                vals[0], vals[0] + 0.5, vals[1], vals[1] + 0.125, vals[2], t.elapsed()
            );
        }
    }
    // Z=18 deep state accuracy
    for (label, order) in [("FD2", FdOrder::Two), ("FD4", FdOrder::Four)] {
        let grid = RadialGrid::default_grid();
        let v: Vec<f64> = grid.points().iter().map(|&r| -18.0 / r).collect();
        let op = ChannelOperator::new(&grid, 0, &v, None, order);
        let (vals, _) = op.solve_lowest(&grid, 1, 0, &[]);
        println!("{label} Z=18: e1={:+.10} err={:+.3e}", vals[0], vals[0] + 162.0);
    }
}
