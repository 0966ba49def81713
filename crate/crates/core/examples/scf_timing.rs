use hflab_core::atom::AtomSpec;
use hflab_core::grid::RadialGrid;
use hflab_core::scf::{self, Scheme, SolveOptions};

fn main() {
    hflab_core::set_deterministic();
    let grid = RadialGrid::default_grid();
    let args: Vec<String> = std::env::args().collect();
    let atoms: Vec<&str> = if args.len() > 1 {
        args[1].split(',').collect()
    } else {
        vec!["He", "Be", "Ne", "Ar"]
    };
    for sym in atoms {
        let atom = AtomSpec::named(sym).unwrap();
        for (scheme, passes) in [
            (Scheme::Hf, 0usize),
            (Scheme::Hf, 24),
            (Scheme::Hartree, 0),
            (Scheme::HartreeNoSelfAction, 0),
        ] {
            let mut opts = SolveOptions::default();
            opts.polish_passes = passes;
            let t = std::time::Instant::now();
            match scf::solve(&atom, &grid, scheme, &opts) {
                Ok(res) => {
                    println!(
                        "{sym:3} {scheme:<24} passes={passes:2} E={:+.8} virial={:.2e} resid={:.2e} iters={} t={:.1?}",
                        res.total_energy,
                        res.energy.virial_ratio,
                        res.max_residual,
                        res.iterations,
                        t.elapsed()
                    );
                }
                Err(e) => println!("{sym:3} {scheme:<24} passes={passes:2} FAILED: {e}"),
            }
        }
    }
}
