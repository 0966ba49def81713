//! SCF checks on one- and two-electron systems where exact or
//! independently computable references exist.

use approx::assert_relative_eq;
use hflab_core::atom::AtomSpec;
use hflab_core::grid::RadialGrid;
use hflab_core::scf::{self, Scheme, SolveOptions};

fn default_grid() -> RadialGrid {
    RadialGrid::default_grid()
}

#[test]
fn hydrogen_no_self_action_is_exact_coulomb() {
    let atom = AtomSpec::named("H").unwrap();
    let grid = default_grid();
    let res = scf::solve(&atom, &grid, Scheme::HartreeNoSelfAction, &SolveOptions::default())
        .unwrap();
    assert!(res.converged);
    let e1s = res.orbital(1, 0).unwrap().energy;
    assert!((e1s + 0.5).abs() < 1e-4, "e1s = {e1s}");
    assert!((res.total_energy + 0.5).abs() < 1e-4, "E = {}", res.total_energy);
}

#[test]
fn hydrogen_hf_self_action_cancels() {
    let atom = AtomSpec::named("H").unwrap();
    let grid = default_grid();
    let res = scf::solve(&atom, &grid, Scheme::Hf, &SolveOptions::default()).unwrap();
    let e1s = res.orbital(1, 0).unwrap().energy;
    // exchange exactly cancels the self-Hartree term for one electron
    assert!((e1s + 0.5).abs() < 1e-4, "e1s = {e1s}");
    assert!((res.total_energy + 0.5).abs() < 1e-4, "E = {}", res.total_energy);

    // cancellation itself is exact: the HF total must coincide with the
    // bare-nucleus ground state of the same discretized channel
    let v: Vec<f64> = grid.points().iter().map(|&r| -1.0 / r).collect();
    let bare = hflab_core::scf::ChannelOperator::new(
        &grid,
        0,
        &v,
        None,
        res.fd_order_used,
    );
    let (vals, _) = bare.solve_lowest(&grid, 1, 0, &[]);
    assert!(
        (res.total_energy - vals[0]).abs() < 1e-6,
        "HF total {} vs bare discrete eigenvalue {}",
        res.total_energy,
        vals[0]
    );
}

#[test]
fn hydrogen_hartree_potential_asymptotics() {
    let atom = AtomSpec::named("H").unwrap();
    let grid = default_grid();
    let res = scf::solve(&atom, &grid, Scheme::HartreeNoSelfAction, &SolveOptions::default())
        .unwrap();
    // full screening: r * U_H -> N = 1 at large r (so -Z + N = 0 total)
    let u = scf::hartree_potential(&res.orbitals, &grid, None);
    let i = grid.index_at_or_above(50.0).unwrap();
    assert_relative_eq!(grid.r(i) * u[i], 1.0, epsilon = 1e-8);
    // with the orbital's own density excluded nothing remains
    let u_ex = scf::hartree_potential(&res.orbitals, &grid, Some(0));
    assert!(u_ex.iter().all(|&v| v.abs() < 1e-12));
}

#[test]
fn helium_hf_matches_reference() {
    let atom = AtomSpec::named("He").unwrap();
    let grid = default_grid();
    let res = scf::solve(&atom, &grid, Scheme::Hf, &SolveOptions::default()).unwrap();
    assert!(res.converged);
    let e1s = res.orbital(1, 0).unwrap().energy;
    // Hartree-Fock limit values: eps_1s = -0.917956, E = -2.861680
    assert!((e1s + 0.917956).abs() < 5e-4, "e1s = {e1s}");
    assert!(
        (res.total_energy + 2.861680).abs() < 5e-4,
        "E = {}",
        res.total_energy
    );
    // eigenvalue route consistency: E = sum q e - E_ee
    assert!(
        (res.energy.eigenvalue_route - res.total_energy).abs() < 1e-6,
        "routes differ: {} vs {}",
        res.energy.eigenvalue_route,
        res.total_energy
    );
    // virial
    assert!(res.energy.virial_ratio < 1e-4, "virial {}", res.energy.virial_ratio);
    // eigen residual
    assert!(res.max_residual < 1e-8, "residual {}", res.max_residual);
}

#[test]
fn beryllium_hf_reference_and_orthonormality() {
    let atom = AtomSpec::named("Be").unwrap();
    let grid = default_grid();
    let res = scf::solve(&atom, &grid, Scheme::Hf, &SolveOptions::default()).unwrap();
    // HF limit: E = -14.573023, eps_2s = -0.309270
    assert!(
        (res.total_energy + 14.573023).abs() < 2e-3,
        "E = {}",
        res.total_energy
    );
    let e2s = res.orbital(2, 0).unwrap().energy;
    assert!((e2s + 0.309270).abs() < 2e-3, "e2s = {e2s}");
    let p1s = &res.orbital(1, 0).unwrap().radial;
    let p2s = &res.orbital(2, 0).unwrap().radial;
    assert!(grid.inner(p1s, p2s).abs() < 1e-8);
    assert_relative_eq!(grid.inner(p1s, p1s), 1.0, epsilon = 1e-8);
    assert_relative_eq!(grid.inner(p2s, p2s), 1.0, epsilon = 1e-8);
    assert!(res.max_residual < 1e-8, "residual {}", res.max_residual);
}

/// Independent double-quadrature oracle for the two-electron integral
/// F0(a,b) = int da(r) [ (1/r) int_0^r db + int_r^inf db/r' ].
/// Splits exactly at the 1/r_> kink and applies trapezoid-with-Gregory
/// end corrections to each smooth piece (a different scheme from the
/// production screening-function route).
fn f0_double_quadrature(pa: &[f64], pb: &[f64], grid: &RadialGrid) -> f64 {
    let n = grid.len();
    let h = grid.step();
    // Gregory end corrections relative to the plain trapezoid
    let delta = [-49.0 / 288.0, 77.0 / 240.0, -7.0 / 30.0, 73.0 / 720.0, -3.0 / 160.0];

    let db: Vec<f64> = (0..n)
        .map(|i| pb[i] * pb[i] * grid.jacobian(i))
        .collect();
    let db_over_r: Vec<f64> = (0..n).map(|i| db[i] / grid.r(i)).collect();

    let prefix = |f: &[f64]| -> Vec<f64> {
        let mut t = vec![0.0; n];
        for i in 1..n {
            t[i] = t[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
        }
        t
    };
    let corrected_prefix = |f: &[f64], t: &[f64], i: usize| -> f64 {
        if i < 10 {
            return t[i]; // negligible contribution region, plain trapezoid
        }
        let mut v = t[i];
        for (m, &d) in delta.iter().enumerate() {
            v += h * d * (f[m] + f[i - m]);
        }
        v
    };
    let corrected_suffix = |f: &[f64], t: &[f64], i: usize| -> f64 {
        if i + 10 > n - 1 {
            return t[n - 1] - t[i];
        }
        let mut v = t[n - 1] - t[i];
        for (m, &d) in delta.iter().enumerate() {
            v += h * d * (f[i + m] + f[n - 1 - m]);
        }
        v
    };

    let t_in = prefix(&db);
    let t_out = prefix(&db_over_r);
    let w = grid.weights();
    let mut f0 = 0.0;
    for i in 0..n {
        let inner = corrected_prefix(&db, &t_in, i) / grid.r(i)
            + corrected_suffix(&db_over_r, &t_out, i);
        f0 += w[i] * pa[i] * pa[i] * inner;
    }
    f0
}

#[test]
fn double_quadrature_oracle_reproduces_analytic_hydrogenic_f0() {
    // F0(1s,1s) for a hydrogenic charge Z is 5Z/8
    let grid = default_grid();
    let p = hflab_core::hydrogenic::sample_p(1, 0, 2.0, grid.points());
    let oracle = f0_double_quadrature(&p, &p, &grid);
    assert_relative_eq!(oracle, 1.25, epsilon = 1e-10);
}

#[test]
fn helium_exchange_self_term_equals_direct_double_quadrature() {
    // <1s|K|1s> must equal the two-electron Coulomb self-integral computed
    // by the independent double quadrature
    let atom = AtomSpec::named("He").unwrap();
    let grid = default_grid();
    let res = scf::solve(&atom, &grid, Scheme::Hf, &SolveOptions::default()).unwrap();
    let p = &res.orbital(1, 0).unwrap().radial;

    let kernel = scf::ExchangeKernel::build(&res.orbitals, 0, Some((1, 0)), 1.0);
    let kp = scf::apply_exchange(&kernel, res.orbital(1, 0).unwrap(), &grid).unwrap();
    let matrix_element = -grid.inner(p, &kp); // kernel carries the minus sign

    let f0 = f0_double_quadrature(p, p, &grid);
    assert_relative_eq!(matrix_element, f0, epsilon = 1e-8);

    // linearity and zero input
    let zero = scf::Orbital {
        n: 1,
        l: 0,
        occupancy: 2,
        energy: 0.0,
        radial: vec![0.0; grid.len()],
    };
    let kz = scf::apply_exchange(&kernel, &zero, &grid).unwrap();
    assert!(kz.iter().all(|&v| v == 0.0));

    // wrong channel errors out
    let wrong_l = scf::Orbital {
        n: 2,
        l: 1,
        occupancy: 6,
        energy: 0.0,
        radial: vec![0.0; grid.len()],
    };
    assert!(scf::apply_exchange(&kernel, &wrong_l, &grid).is_err());
}

#[test]
fn helium_fine_grid_oracle() {
    // oracle: the He HF equation is local for a single doubly occupied s
    // orbital, so an independent banded SCF at 2x and 4x density plus
    // Richardson extrapolation gives a reference total energy
    let atom = AtomSpec::named("He").unwrap();

    let solve_at = |points: usize| {
        let grid = RadialGrid::build(1e-6, 60.0, points, hflab_core::grid::GridMapping::LogUniform)
            .unwrap();
        let res = scf::solve(&atom, &grid, Scheme::Hf, &SolveOptions::default()).unwrap();
        res.total_energy
    };
    let e2 = solve_at(4000);
    let e4 = solve_at(8000);
    // fourth-order stencil: eliminate the h^4 term
    let reference = e4 + (e4 - e2) / 15.0;

    let grid = default_grid();
    let res = scf::solve(&atom, &grid, Scheme::Hf, &SolveOptions::default()).unwrap();
    assert!(
        (res.total_energy - reference).abs() < 1e-3,
        "default-grid {} vs Richardson reference {}",
        res.total_energy,
        reference
    );
}
