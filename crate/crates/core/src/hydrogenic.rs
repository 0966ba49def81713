//! Closed-form hydrogenic radial functions P_nl(r) = r R_nl(r) for a point
//! charge. Used for SCF initial guesses, the analytic model lab, and as
//! reference states in tests.

/// Generalized Laguerre polynomial L_k^alpha(x) by the three-term recurrence.
pub fn laguerre_assoc(k: u32, alpha: f64, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + alpha - x;
    for j in 1..k {
        let jf = j as f64;
        let lp1 = ((2.0 * jf + 1.0 + alpha - x) * l - (jf + alpha) * lm1) / (jf + 1.0);
        lm1 = l;
        l = lp1;
    }
    l
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// P_nl(r) = r R_nl(r), normalized so that the integral of P^2 dr is 1.
pub fn radial_p(n: u32, l: u32, z: f64, r: f64) -> f64 {
    assert!(n > l, "hydrogenic state needs n > l");
    let nf = n as f64;
    let rho = 2.0 * z * r / nf;
    let norm = (2.0 * z / nf).powf(1.5)
        * (factorial(n - l - 1) / (2.0 * nf * factorial(n + l))).sqrt();
    let radial = norm * (-rho / 2.0).exp() * rho.powi(l as i32)
        * laguerre_assoc(n - l - 1, 2.0 * l as f64 + 1.0, rho);
    r * radial
}

/// Bound-state energy -Z^2 / (2 n^2).
pub fn energy(n: u32, z: f64) -> f64 {
    -z * z / (2.0 * (n as f64) * (n as f64))
}

/// Expectation value of 1/r for an (n, l) hydrogenic state: Z / n^2.
pub fn inv_r_expectation(n: u32, z: f64) -> f64 {
    z / (n as f64 * n as f64)
}

/// Sample P_nl on a set of radii.
pub fn sample_p(n: u32, l: u32, z: f64, radii: &[f64]) -> Vec<f64> {
    radii.iter().map(|&r| radial_p(n, l, z, r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use approx::assert_relative_eq;

    #[test]
    fn ground_state_closed_form() {
        for &z in &[1.0f64, 2.0, 18.0] {
            for &r in &[0.1f64, 0.5, 2.0] {
                let exact = 2.0 * z.powf(1.5) * r * (-z * r).exp();
                assert_relative_eq!(radial_p(1, 0, z, r), exact, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn two_p_closed_form() {
        // P_21 = z^{3/2}/(2 sqrt 6) (z r)^2/r * ... = (1/(2 sqrt 6)) z^{5/2} r^2 e^{-z r/2} * r^{-0}? use known form
        let z = 1.0f64;
        for &r in &[0.3, 1.0, 4.0] {
            let exact = (1.0 / (2.0 * 6.0f64.sqrt())) * z.powf(2.5) * r * r * (-z * r / 2.0).exp();
            assert_relative_eq!(radial_p(2, 1, z, r), exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn grid_normalization_and_orthogonality() {
        let g = RadialGrid::default_grid();
        for &(n, l, z) in &[(1u32, 0u32, 1.0f64), (2, 0, 1.0), (3, 0, 1.0), (2, 1, 1.0), (3, 2, 2.0)] {
            let p = sample_p(n, l, z, g.points());
            let norm = g.inner(&p, &p);
            assert_relative_eq!(norm, 1.0, max_relative = 1e-9);
        }
        let p1 = sample_p(1, 0, 1.0, g.points());
        let p2 = sample_p(2, 0, 1.0, g.points());
        let p3 = sample_p(3, 0, 1.0, g.points());
        assert!(g.inner(&p1, &p2).abs() < 1e-10);
        assert!(g.inner(&p2, &p3).abs() < 1e-10);
    }

    #[test]
    fn inv_r_matches_quadrature() {
        let g = RadialGrid::default_grid();
        let p = sample_p(2, 1, 3.0, g.points());
        let integrand: Vec<f64> = p
            .iter()
            .zip(g.points())
            .map(|(&v, &r)| v * v / r)
            .collect();
        assert_relative_eq!(
            g.integrate(&integrand),
            inv_r_expectation(2, 3.0),
            max_relative = 1e-10
        );
    }
}
