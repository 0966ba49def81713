//! Radial Coulomb machinery: the screening functions Y_k and the direct
//! (Hartree) potential, including the per-orbital self-density exclusion.

use crate::grid::RadialGrid;
use crate::linalg::cumulative_integral;
use crate::scf::Orbital;

/// Y_k(f; r)/r = integral of f(t) * r_<^k / r_>^{k+1} dt, evaluated on the
/// grid by two cumulative integrals in the mapped coordinate. `f` is a
/// product of two radial functions sampled on the grid.
pub fn yk_over_r(f: &[f64], k: u32, grid: &RadialGrid) -> Vec<f64> {
    let n = grid.len();
    assert_eq!(f.len(), n);
    let h = grid.step();
    let ki = k as i32;

    // inner integral: z(r) = int_0^r f t^k dt
    let inner_integrand: Vec<f64> = (0..n)
        .map(|i| f[i] * grid.r(i).powi(ki) * grid.jacobian(i))
        .collect();
    let z = cumulative_integral(&inner_integrand, h);

    // outer integral: w(r) = int_r^inf f t^{-k-1} dt
    let outer_integrand: Vec<f64> = (0..n)
        .map(|i| f[i] * grid.r(i).powi(-ki - 1) * grid.jacobian(i))
        .collect();
    let w_cum = cumulative_integral(&outer_integrand, h);
    let w_total = w_cum[n - 1];

    (0..n)
        .map(|i| {
            let r = grid.r(i);
            z[i] * r.powi(-ki - 1) + r.powi(ki) * (w_total - w_cum[i])
        })
        .collect()
}

/// Direct electrostatic potential U_H(r) of the sampled orbital set.
/// With `exclude = Some(j)`, one electron's worth of orbital j's density is
/// removed (the no-self-action construction).
pub fn hartree_potential(
    orbitals: &[Orbital],
    grid: &RadialGrid,
    exclude: Option<usize>,
) -> Vec<f64> {
    let n = grid.len();
    let mut u = vec![0.0; n];
    for (idx, orb) in orbitals.iter().enumerate() {
        let mut q = orb.occupancy as f64;
        if exclude == Some(idx) {
            q -= 1.0;
        }
        if q == 0.0 {
            continue;
        }
        let density: Vec<f64> = orb.radial.iter().map(|&p| p * p).collect();
        let y0 = yk_over_r(&density, 0, grid);
        for i in 0..n {
            u[i] += q * y0[i];
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::hydrogenic;
    use approx::assert_relative_eq;

    #[test]
    fn y0_of_hydrogen_density_matches_closed_form() {
        // rho = P_1s^2 gives Y_0/r = 1/r - e^{-2r}(1 + 1/r)
        let g = RadialGrid::default_grid();
        let p = hydrogenic::sample_p(1, 0, 1.0, g.points());
        let density: Vec<f64> = p.iter().map(|&v| v * v).collect();
        let y = yk_over_r(&density, 0, &g);
        for &i in &[200usize, 800, 1200, 1600] {
            let r = g.r(i);
            let exact = 1.0 / r - (-2.0 * r).exp() * (1.0 + 1.0 / r);
            assert_relative_eq!(y[i], exact, max_relative = 1e-9);
        }
    }

    #[test]
    fn y1_large_r_is_moment_over_r_squared() {
        let g = RadialGrid::default_grid();
        let p1 = hydrogenic::sample_p(1, 0, 1.0, g.points());
        let p2 = hydrogenic::sample_p(2, 1, 1.0, g.points());
        let f: Vec<f64> = p1.iter().zip(&p2).map(|(&a, &b)| a * b).collect();
        let y = yk_over_r(&f, 1, &g);
        let moment_integrand: Vec<f64> = f
            .iter()
            .zip(g.points())
            .map(|(&v, &r)| v * r)
            .collect();
        let moment = g.integrate(&moment_integrand);
        let i = g.index_at_or_above(30.0).unwrap();
        let r = g.r(i);
        assert_relative_eq!(y[i], moment / (r * r), max_relative = 1e-8);
    }
}
