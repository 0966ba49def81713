use hflab_core::atom::AtomSpec;
use hflab_core::grid::RadialGrid;
use hflab_core::scf::{self, ChannelOperator, ExchangeKernel, Scheme, SolveOptions};

fn main() {
    hflab_core::set_deterministic();
    let grid = RadialGrid::default_grid();
    let atom = AtomSpec::named("Ar").unwrap();
    let n = grid.len();
    for scheme in [Scheme::Hartree, Scheme::Hf] {
        let res = scf::solve(&atom, &grid, scheme, &SolveOptions::default()).unwrap();
        for orb in &res.orbitals {
            let v = res.local_potential_for(&orb.shell());
            let kernel = if scheme == Scheme::Hf {
                Some(ExchangeKernel::build(&res.orbitals, orb.l, Some((orb.n, orb.l)), 1.0))
            } else { None };
            let op = ChannelOperator::new(&grid, orb.l, &v, kernel, res.fd_order_used);
            let hp = op.apply(&orb.radial, &grid);
            let mut worst = (0usize, 0.0f64);
            let mut total = 0.0;
            let i_lo = grid.index_at_or_above(1e-3).unwrap();
            for i in i_lo..n {
                let r2 = (hp[i] - orb.energy * orb.radial[i]).powi(2) * grid.weights()[i];
                total += r2;
                if r2 > worst.1 { worst = (i, r2); }
            }
            println!("{scheme:?} {}: resid {:.3e} worst at r={:.4e}", orb.label(), total.sqrt(), grid.r(worst.0));
        }
    }
}
