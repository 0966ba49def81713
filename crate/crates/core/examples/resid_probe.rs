use hflab_core::atom::AtomSpec;
use hflab_core::grid::RadialGrid;
use hflab_core::scf::{self, ChannelOperator, ExchangeKernel, Scheme, SolveOptions};

fn main() {
    hflab_core::set_deterministic();
    let grid = RadialGrid::default_grid();
    let atom = AtomSpec::named("Be").unwrap();
    let res = scf::solve(&atom, &grid, Scheme::Hf, &SolveOptions::default()).unwrap();

    // dense vs apply consistency on the final operator
    let v = res.local_potential_for(&res.orbitals[0].shell());
    let kernel = ExchangeKernel::build(&res.orbitals, 0, Some((1, 0)), 1.0);
    let op = ChannelOperator::new(&grid, 0, &v, Some(kernel), res.fd_order_used);
    let dense = op.dense_matrix(&grid);
    let p = &res.orbitals[0].radial;
    // u = P / sqrt(jac); dense acts in u space: H P = (dense u) * sqrt(jac) / b
    let n = grid.len();
    let u: Vec<f64> = (0..n).map(|i| p[i] / grid.jacobian(i).sqrt()).collect();
    let mut du = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += dense[(i, j)] * u[j];
        }
        du[i] = acc;
    }
    let hp_dense: Vec<f64> = (0..n)
        .map(|i| du[i] * grid.jacobian(i).sqrt() / (2.0 * grid.jacobian(i) * grid.jacobian(i)))
        .collect();
    let hp_apply = op.apply(p, &grid);
    let mut max_diff = 0.0f64;
    let mut max_at = 0usize;
    for i in 0..n {
        let d = (hp_dense[i] - hp_apply[i]).abs();
        if d > max_diff {
            max_diff = d;
            max_at = i;
        }
    }
    println!("dense-vs-apply max diff {:.3e} at r = {:.4e}", max_diff, grid.r(max_at));

    // residual distribution for 1s orbital
    let e = res.orbitals[0].energy;
    let mut worst = (0usize, 0.0f64);
    let mut total = 0.0;
    for i in 0..n {
        let r2 = (hp_apply[i] - e * p[i]).powi(2) * grid.weights()[i];
        total += r2;
        if r2 > worst.1 {
            worst = (i, r2);
        }
    }
    println!(
        "1s residual {:.3e}, worst point r = {:.4e} contributes {:.3e}",
        total.sqrt(),
        grid.r(worst.0),
        worst.1.sqrt()
    );

    // banded-path residual for the local scheme
    let res_h = scf::solve(&atom, &grid, Scheme::Hartree, &SolveOptions::default()).unwrap();
    let vh = res_h.local_potential_for(&res_h.orbitals[0].shell());
    let oph = ChannelOperator::new(&grid, 0, &vh, None, res_h.fd_order_used);
    for orb in &res_h.orbitals {
        let hp = oph.apply(&orb.radial, &grid);
        let mut worst = (0usize, 0.0f64);
        let mut total = 0.0;
        for i in 0..n {
            let r2 = (hp[i] - orb.energy * orb.radial[i]).powi(2) * grid.weights()[i];
            total += r2;
            if r2 > worst.1 {
                worst = (i, r2);
            }
        }
        println!(
            "hartree {} residual {:.3e}, worst at r = {:.4e}",
            orb.label(),
            total.sqrt(),
            grid.r(worst.0)
        );
    }
}
