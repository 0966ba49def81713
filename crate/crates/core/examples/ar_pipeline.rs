use hflab_core::analysis;
use hflab_core::atom::AtomSpec;
use hflab_core::grid::{PlotTransform, RadialGrid};
use hflab_core::scattering::{self, ChannelSpec};
use hflab_core::scf::{self, tail, Scheme, SolveOptions};

fn main() {
    hflab_core::set_deterministic();
    let grid = RadialGrid::default_grid();
    let atom = AtomSpec::named("Ar").unwrap();
    let opts = SolveOptions::default();

    let t0 = std::time::Instant::now();
    let hf = scf::solve(&atom, &grid, Scheme::Hf, &opts).unwrap();
    let nsa = scf::solve(&atom, &grid, Scheme::HartreeNoSelfAction, &opts).unwrap();
    println!("solves done in {:.1?}", t0.elapsed());
    for o in &hf.orbitals {
        println!("hf {}: eps = {:+.6}", o.label(), o.energy);
    }
    for o in &nsa.orbitals {
        println!("nsa {}: eps = {:+.6}", o.label(), o.energy);
    }

    // refined tails
    let hf_refined = tail::refine_all(&hf).unwrap();
    let nsa_refined = tail::refine_all(&nsa).unwrap();
    for r in &hf_refined {
        println!(
            "hf refined {}: match r = {:.3}, diag = {:.2e}",
            r.shell.label(),
            grid.r(r.match_index),
            r.match_diagnostic
        );
    }

    // nodes
    for r in &hf_refined {
        let rep = analysis::count_nodes(r, &grid, 1e-30);
        println!(
            "hf {} nodes: {} at {:?}",
            r.shell.label(),
            rep.count,
            rep.node_positions
        );
    }
    for r in &nsa_refined {
        let rep = analysis::count_nodes(r, &grid, 1e-30);
        println!(
            "nsa {} nodes: {} at {:?}",
            r.shell.label(),
            rep.count,
            rep.node_positions
        );
    }

    // tail slopes
    let idx_1s_hf = hf.orbital_index(1, 0).unwrap();
    let idx_1s_nsa = nsa.orbital_index(1, 0).unwrap();
    let (kappa_hf, pow_hf) = hf_refined[idx_1s_hf].decay_rate(&grid, 25.0, 50.0);
    let (kappa_nsa, pow_nsa) = nsa_refined[idx_1s_nsa].decay_rate(&grid, 10.0, 20.0);
    let e3p = hf.orbital(3, 1).unwrap().energy;
    let e1s_nsa = nsa.orbital(1, 0).unwrap().energy;
    println!(
        "hf 1s tail rate {:.4} (power {:.2}) vs sqrt(2|e3p|) = {:.4}",
        kappa_hf,
        pow_hf,
        (2.0 * e3p.abs()).sqrt()
    );
    println!(
        "nsa 1s tail rate {:.4} (power {:.2}) vs sqrt(2|e1s|) = {:.4}",
        kappa_nsa,
        pow_nsa,
        (2.0 * e1s_nsa.abs()).sqrt()
    );

    // enhancement at rho = 4, both readings
    let tr = PlotTransform::default();
    for (n, l, label) in [(1u32, 0u32, "1s"), (2, 1, "2p")] {
        let i_hf = hf.orbital_index(n, l).unwrap();
        let i_nsa = nsa.orbital_index(n, l).unwrap();
        let e = analysis::tail_enhancement(&nsa_refined[i_nsa], &hf_refined[i_hf], &grid, &tr, 4.0);
        println!(
            "{label} enhancement: log10 at r(rho)={:.3} -> {:.2}; at r=rho -> {:.2}",
            e.r_of_rho, e.log10_at_r_of_rho, e.log10_at_r_equals_rho
        );
        // monotone beyond last node?
        let rep = analysis::count_nodes(&hf_refined[i_hf], &grid, 1e-30);
        let start = rep.node_positions.last().copied().unwrap_or(1.0) + 0.3;
        let prof = analysis::enhancement_profile(
            &nsa_refined[i_nsa],
            &hf_refined[i_hf],
            &grid,
            start,
            20.0,
        );
        let non_monotone = prof.windows(2).filter(|w| w[1].1 < w[0].1 - 1e-9).count();
        println!("  profile points {} non-monotone steps {}", prof.len(), non_monotone);
    }

    // predicted tail model vs refined for Be 1s analogue on Ar 1s
    let model = analysis::predict_tail(
        &hf,
        &hf.orbitals[idx_1s_hf].shell(),
        &[
            *&hf.orbital(2, 1).unwrap().shell(),
            *&hf.orbital(3, 1).unwrap().shell(),
        ],
    )
    .unwrap();
    let (mk, mp) = model.decay_rate(25.0, 50.0, 80);
    println!("model 1s tail rate {:.4} (power {:.2})", mk, mp);

    // scattering: s and p phases at a few energies + levinson
    let t1 = std::time::Instant::now();
    for l in [0u32, 1, 2] {
        let energies = scattering::default_energy_mesh(1e-4, 150.0, 64);
        let curve = scattering::phase_curve(
            |r_end| ChannelSpec::static_exchange(&hf, l, scattering::BASE_DR, r_end),
            l,
            &energies,
            50,
        );
        match curve {
            Ok(c) => {
                let rep = scattering::levinson_check(&c, &hf, 1e-2).unwrap();
                println!(
                    "l={l}: delta(0)/pi = {:.4}, born tail {:.3}, n_extra = {}, n_occ = {}, dev {:.4} ({:.1?})",
                    rep.delta_zero_over_pi,
                    c.born_tail,
                    rep.n_l_extra,
                    rep.n_l_occupied,
                    rep.deviation,
                    t1.elapsed()
                );
                let d_top = c.deltas.last().unwrap();
                println!(
                    "   delta(Emax) = {:.4}, after born subtraction {:.4}",
                    d_top,
                    d_top - c.born_tail
                );
            }
            Err(e) => println!("l={l}: FAILED {e}"),
        }
    }
}
