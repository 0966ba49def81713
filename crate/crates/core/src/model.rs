//! Analytically solvable nonlinear mean-field models: the 1/(r r')
//! separable interaction in a Coulomb field, the quadratic-coupling
//! oscillator analogue, and the zero-energy-excitation instability
//! criterion. Everything here is closed-form arithmetic plus small sums;
//! the point is the degenerate one-parameter families that appear at the
//! critical coupling while the total energy stays fixed.

use crate::error::{HfError, Result};
use crate::grid::RadialGrid;
use crate::hydrogenic;
use crate::scf::{ChannelOperator, FdOrder};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionKind {
    Normal,
    Singular,
}

/// One solution of the separable-Coulomb model: the N = 4l+2 electrons of
/// subshell (n, l) split into two half-filled groups with effective
/// charges Z1, Z2.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoulombModelSolution {
    pub z: f64,
    pub n: u32,
    pub l: u32,
    pub alpha_coupling: f64,
    pub particle_count: u32,
    pub z_eff_1: f64,
    pub z_eff_2: f64,
    pub kind: SolutionKind,
    pub e_total: f64,
    /// one-particle energies of the two groups
    pub e_single_1: f64,
    pub e_single_2: f64,
    /// hydrogenic mean radii (3n^2 - l(l+1)) / (2 Z_eff)
    pub mean_radius_1: f64,
    pub mean_radius_2: f64,
}

fn mean_radius(n: u32, l: u32, z_eff: f64) -> f64 {
    let nf = n as f64;
    let lf = l as f64;
    (3.0 * nf * nf - lf * (lf + 1.0)) / (2.0 * z_eff)
}

/// The symmetric fixed point Z1 = Z2 = Z [1 + (alpha/n^2)(4l+1)]^{-1}.
pub fn coulomb_normal(z: f64, n: u32, l: u32, alpha: f64) -> Result<CoulombModelSolution> {
    if z <= 0.0 || n <= l || alpha < 0.0 {
        return Err(HfError::Config(
            "model needs Z > 0, n > l, alpha >= 0".into(),
        ));
    }
    let n2 = (n * n) as f64;
    let z_eff = z / (1.0 + alpha / n2 * (4 * l + 1) as f64);
    let mut sol = CoulombModelSolution {
        z,
        n,
        l,
        alpha_coupling: alpha,
        particle_count: 4 * l + 2,
        z_eff_1: z_eff,
        z_eff_2: z_eff,
        kind: SolutionKind::Normal,
        e_total: 0.0,
        e_single_1: 0.0,
        e_single_2: 0.0,
        mean_radius_1: mean_radius(n, l, z_eff),
        mean_radius_2: mean_radius(n, l, z_eff),
    };
    finish_energies(&mut sol);
    Ok(sol)
}

/// A member of the one-parameter degenerate family at alpha = n^2, where
/// the coupled equations collapse to (2l+1)(Z1 + Z2) = Z.
pub fn coulomb_singular_family(
    z: f64,
    n: u32,
    l: u32,
    z_eff_1: f64,
) -> Result<CoulombModelSolution> {
    if z <= 0.0 || n <= l {
        return Err(HfError::Config("model needs Z > 0, n > l".into()));
    }
    let m = (2 * l + 1) as f64;
    let z_eff_2 = z / m - z_eff_1;
    if !(z_eff_1 > 0.0 && z_eff_2 > 0.0) {
        return Err(HfError::Domain(format!(
            "singular-family parameter must satisfy 0 < Z1 < Z/(2l+1) = {} (got {})",
            z / m,
            z_eff_1
        )));
    }
    let kind = if (z_eff_1 - z_eff_2).abs() < 1e-14 * z {
        SolutionKind::Normal
    } else {
        SolutionKind::Singular
    };
    let mut sol = CoulombModelSolution {
        z,
        n,
        l,
        alpha_coupling: (n * n) as f64,
        particle_count: 4 * l + 2,
        z_eff_1,
        z_eff_2,
        kind,
        e_total: 0.0,
        e_single_1: 0.0,
        e_single_2: 0.0,
        mean_radius_1: mean_radius(n, l, z_eff_1),
        mean_radius_2: mean_radius(n, l, z_eff_2),
    };
    finish_energies(&mut sol);
    Ok(sol)
}

fn finish_energies(sol: &mut CoulombModelSolution) {
    sol.e_single_1 = hydrogenic::energy(sol.n, sol.z_eff_1);
    sol.e_single_2 = hydrogenic::energy(sol.n, sol.z_eff_2);
    sol.e_total = coulomb_total_energy(sol);
}

/// Total energy as the direct sum-of-eigenvalues-minus-double-counting
/// evaluation: E = sum_k E_k - (1/2) sum_{i != k} alpha <1/r>_i <1/r>_k,
/// with <1/r> = Z_eff / n^2 for each group.
pub fn coulomb_total_energy(sol: &CoulombModelSolution) -> f64 {
    let m = (2 * sol.l + 1) as f64; // group size, N = 2m
    let n2 = (sol.n * sol.n) as f64;
    let inv_r_1 = sol.z_eff_1 / n2;
    let inv_r_2 = sol.z_eff_2 / n2;
    let sum_eps = m * (hydrogenic::energy(sol.n, sol.z_eff_1)
        + hydrogenic::energy(sol.n, sol.z_eff_2));
    // pair sum over i != k, halved: within each group m(m-1)/2 pairs,
    // across groups m^2 pairs
    let pair_sum = sol.alpha_coupling
        * (0.5 * m * (m - 1.0) * (inv_r_1 * inv_r_1 + inv_r_2 * inv_r_2)
            + m * m * inv_r_1 * inv_r_2);
    sum_eps - pair_sum
}

/// Closed form of the normal-solution energy,
/// E = -(Z^2 N / 2 n^2) [1 + alpha (N - 1) / n^2]^{-1}.
pub fn coulomb_normal_energy_closed_form(z: f64, n: u32, l: u32, alpha: f64) -> f64 {
    let n2 = (n * n) as f64;
    let big_n = (4 * l + 2) as f64;
    -z * z * big_n / (2.0 * n2) / (1.0 + alpha * (big_n - 1.0) / n2)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OscillatorModelSolution {
    pub omega: f64,
    pub beta_tilde: f64,
    pub omega_eff_1: f64,
    pub omega_eff_2: f64,
    pub group_sizes: (u32, u32),
    pub kind: SolutionKind,
    /// ground-state one-particle energies (3/2) omega_eff
    pub e_single_1: f64,
    pub e_single_2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub enum OscillatorSolutions {
    /// away from the critical coupling only the symmetric solution exists
    Normal(OscillatorModelSolution),
    /// at beta_tilde = 1 the system degenerates into the family
    /// omega_1^2 + omega_2^2 = omega^2, parameterized by omega_1
    Family { omega: f64, group_sizes: (u32, u32) },
}

/// Solve the schematic coupled system w_p^2 = w^2 - beta_tilde w_q^2.
pub fn oscillator_solutions(
    omega: f64,
    beta_tilde: f64,
    group_sizes: (u32, u32),
) -> Result<OscillatorSolutions> {
    if omega <= 0.0 || beta_tilde < 0.0 {
        return Err(HfError::Config(
            "oscillator model needs omega > 0, beta_tilde >= 0".into(),
        ));
    }
    if (beta_tilde - 1.0).abs() < 1e-14 {
        return Ok(OscillatorSolutions::Family {
            omega,
            group_sizes,
        });
    }
    let w2 = omega * omega / (1.0 + beta_tilde);
    if w2 <= 0.0 {
        return Err(HfError::Instability(format!(
            "effective frequency squared {} is not positive at beta_tilde = {}",
            w2, beta_tilde
        )));
    }
    let w = w2.sqrt();
    Ok(OscillatorSolutions::Normal(OscillatorModelSolution {
        omega,
        beta_tilde,
        omega_eff_1: w,
        omega_eff_2: w,
        group_sizes,
        kind: SolutionKind::Normal,
        e_single_1: 1.5 * w,
        e_single_2: 1.5 * w,
    }))
}

/// One member of the beta_tilde = 1 family with the first frequency given.
pub fn oscillator_family_member(
    omega: f64,
    omega_eff_1: f64,
    group_sizes: (u32, u32),
) -> Result<OscillatorModelSolution> {
    if !(omega_eff_1 > 0.0 && omega_eff_1 < omega) {
        return Err(HfError::Domain(format!(
            "family member needs 0 < omega_1 < omega (got {omega_eff_1} vs {omega})"
        )));
    }
    let w2 = omega * omega - omega_eff_1 * omega_eff_1;
    let omega_eff_2 = w2.sqrt();
    let kind = if (omega_eff_1 - omega_eff_2).abs() < 1e-14 * omega {
        SolutionKind::Normal
    } else {
        SolutionKind::Singular
    };
    Ok(OscillatorModelSolution {
        omega,
        beta_tilde: 1.0,
        omega_eff_1,
        omega_eff_2,
        group_sizes,
        kind,
        e_single_1: 1.5 * omega_eff_1,
        e_single_2: 1.5 * omega_eff_2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChiInterpretation {
    /// chi = sum_j 2 |<j|1/r|i>|^2 / (E_i - E_j): the static
    /// polarizability-like response form (negative, so 1 + alpha chi = 0
    /// has a positive root)
    InverseDenominator,
    /// chi = sum_j |<j|1/r|i>|^2 (E_j - E_i), the expression as printed;
    /// positive for excitations, so no instability exists for alpha > 0
    AsPrinted,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstabilityResult {
    pub alpha_critical: Option<f64>,
    pub chi_at_solution: f64,
    pub basis_size: usize,
    pub interpretation: ChiInterpretation,
    /// |alpha(basis) - alpha(basis/2)| / alpha(basis)
    pub drift_last_doubling: Option<f64>,
    pub z_eff_at_solution: f64,
    /// the degeneracy coupling n^2 the critical value is compared with
    pub reference_coupling: f64,
}

/// Radial 1/r matrix elements between hydrogenic-like channel states.
pub fn inv_r_matrix_element(p_j: &[f64], p_i: &[f64], grid: &RadialGrid) -> f64 {
    let f: Vec<f64> = (0..grid.len())
        .map(|i| p_j[i] * p_i[i] / grid.r(i))
        .collect();
    grid.integrate(&f)
}

/// Zero-energy-excitation criterion 1 + alpha chi = 0 for the occupied
/// (n, l) state of the separable-Coulomb model. Vacant same-l states come
/// from the discretized Coulomb channel of charge Z_eff(alpha) (discrete
/// plus box-quadrature continuum); chi is recomputed self-consistently as
/// alpha changes Z_eff, although the hydrogenic scaling makes it nearly
/// alpha-independent.
pub fn rpa_instability(
    z: f64,
    n: u32,
    l: u32,
    basis_size: usize,
    interpretation: ChiInterpretation,
    grid: &RadialGrid,
) -> Result<InstabilityResult> {
    if basis_size == 0 {
        return Ok(InstabilityResult {
            alpha_critical: None,
            chi_at_solution: 0.0,
            basis_size,
            interpretation,
            drift_last_doubling: None,
            z_eff_at_solution: z,
            reference_coupling: (n * n) as f64,
        });
    }
    let n2 = (n * n) as f64;
    let alpha_half = solve_alpha(z, n, l, basis_size / 2, interpretation, grid)?;
    let (alpha_full, chi, z_eff) = match solve_alpha(z, n, l, basis_size, interpretation, grid)? {
        Some(v) => (Some(v.0), v.1, v.2),
        None => (None, chi_value(z, n, l, basis_size, interpretation, grid)?, z),
    };
    let drift = match (alpha_full, alpha_half.map(|v| v.0)) {
        (Some(a), Some(b)) if a != 0.0 => Some(((a - b) / a).abs()),
        _ => None,
    };
    Ok(InstabilityResult {
        alpha_critical: alpha_full,
        chi_at_solution: chi,
        basis_size,
        interpretation,
        drift_last_doubling: drift,
        z_eff_at_solution: z_eff,
        reference_coupling: n2,
    })
}

fn solve_alpha(
    z: f64,
    n: u32,
    l: u32,
    basis_size: usize,
    interpretation: ChiInterpretation,
    grid: &RadialGrid,
) -> Result<Option<(f64, f64, f64)>> {
    if basis_size == 0 {
        return Ok(None);
    }
    let n2 = (n * n) as f64;
    // self-consistent loop: alpha -> Z_eff(alpha) -> chi -> alpha
    let mut alpha = n2;
    let mut chi = 0.0;
    let mut z_eff = z;
    for _ in 0..8 {
        z_eff = z / (1.0 + alpha / n2 * (4 * l + 1) as f64);
        chi = chi_for_charge(z_eff, n, l, basis_size, interpretation, grid)?;
        if chi >= 0.0 {
            return Ok(None); // 1 + alpha chi > 0 for every alpha > 0
        }
        let next = -1.0 / chi;
        if (next - alpha).abs() < 1e-12 * alpha.abs().max(1.0) {
            return Ok(Some((next, chi, z_eff)));
        }
        alpha = next;
    }
    Ok(Some((alpha, chi, z_eff)))
}

fn chi_value(
    z: f64,
    n: u32,
    l: u32,
    basis_size: usize,
    interpretation: ChiInterpretation,
    grid: &RadialGrid,
) -> Result<f64> {
    chi_for_charge(z, n, l, basis_size, interpretation, grid)
}

fn chi_for_charge(
    z_eff: f64,
    n: u32,
    l: u32,
    basis_size: usize,
    interpretation: ChiInterpretation,
    grid: &RadialGrid,
) -> Result<f64> {
    // discretized Coulomb channel of charge Z_eff: the low states are the
    // discrete spectrum, the rest quadrature the continuum in the box
    let v: Vec<f64> = grid.points().iter().map(|&r| -z_eff / r).collect();
    let op = ChannelOperator::new(grid, l, &v, None, FdOrder::Four);
    let occupied_ordinal = (n - l - 1) as usize;
    let count = basis_size + occupied_ordinal + 1;
    let (vals, vecs) = op.solve_lowest(grid, count, 0, &[]);
    let e_i = vals[occupied_ordinal];
    let p_i = &vecs[occupied_ordinal];
    let mut chi = 0.0;
    for j in 0..count {
        if j == occupied_ordinal {
            continue; // the k = j term never contributes
        }
        let m = inv_r_matrix_element(&vecs[j], p_i, grid);
        match interpretation {
            ChiInterpretation::InverseDenominator => {
                chi += 2.0 * m * m / (e_i - vals[j]);
            }
            ChiInterpretation::AsPrinted => {
                chi += m * m * (vals[j] - e_i);
            }
        }
    }
    Ok(chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_solution_limits() {
        // alpha = 0: non-interacting
        let s = coulomb_normal(10.0, 2, 0, 0.0).unwrap();
        assert_relative_eq!(s.z_eff_1, 10.0);
        assert_relative_eq!(s.e_total, 2.0 * hydrogenic::energy(2, 10.0), epsilon = 1e-14);

        // alpha = n^2: Z_eff = Z / N and E = -Z^2/(2n^2)
        let s = coulomb_normal(10.0, 2, 0, 4.0).unwrap();
        assert_relative_eq!(s.z_eff_1, 10.0 / 2.0, epsilon = 1e-14);
        assert_relative_eq!(s.e_total, -100.0 / 8.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_matches_direct_evaluation() {
        for &(z, n, l) in &[(10.0f64, 1u32, 0u32), (10.0, 2, 0), (18.0, 2, 1), (7.0, 3, 1)] {
            for &alpha in &[0.0, 0.3, 1.0, (n * n) as f64, 2.3 * (n * n) as f64] {
                let s = coulomb_normal(z, n, l, alpha).unwrap();
                let closed = coulomb_normal_energy_closed_form(z, n, l, alpha);
                assert_relative_eq!(s.e_total, closed, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn singular_family_preserves_total_energy() {
        let z = 10.0;
        let (n, l) = (2u32, 1u32);
        let normal_at_critical = coulomb_normal(z, n, l, 4.0).unwrap();
        let m = (2 * l + 1) as f64;
        let mut max_spread = 0.0f64;
        let mut e_single_varies = false;
        for k in 1..=100 {
            let z1 = z / m * k as f64 / 101.0;
            let s = coulomb_singular_family(z, n, l, z1).unwrap();
            let rel = ((s.e_total - normal_at_critical.e_total) / normal_at_critical.e_total)
                .abs();
            max_spread = max_spread.max(rel);
            if (s.e_single_1 - normal_at_critical.e_single_1).abs() > 1e-6 {
                e_single_varies = true;
            }
        }
        assert!(max_spread < 1e-12, "spread {max_spread}");
        assert!(e_single_varies, "one-particle energies must vary over the family");
        // E at the critical point is the bare single-particle value
        assert_relative_eq!(
            normal_at_critical.e_total,
            -z * z / (2.0 * (n * n) as f64),
            epsilon = 1e-12
        );
    }

    #[test]
    fn singular_family_window_and_symmetric_point() {
        let z = 10.0;
        // symmetric member reduces to the normal solution
        let s = coulomb_singular_family(z, 2, 0, z / 2.0).unwrap();
        assert_eq!(s.kind, SolutionKind::Normal);
        assert_relative_eq!(s.z_eff_1, s.z_eff_2);
        // out-of-window parameters rejected
        assert!(coulomb_singular_family(z, 2, 0, 0.0).is_err());
        assert!(coulomb_singular_family(z, 2, 0, z + 0.1).is_err());
        // size diverges as Z1 -> 0+
        let tiny = coulomb_singular_family(z, 2, 0, 1e-8).unwrap();
        assert!(tiny.mean_radius_1 > 1e8);
    }

    #[test]
    fn oscillator_solutions_and_family() {
        // beta_tilde = 0: non-interacting
        match oscillator_solutions(2.0, 0.0, (3, 3)).unwrap() {
            OscillatorSolutions::Normal(s) => {
                assert_relative_eq!(s.omega_eff_1, 2.0);
            }
            _ => panic!("expected normal solution"),
        }
        // generic beta_tilde
        match oscillator_solutions(2.0, 0.5, (3, 3)).unwrap() {
            OscillatorSolutions::Normal(s) => {
                assert_relative_eq!(s.omega_eff_1 * s.omega_eff_1, 4.0 / 1.5, epsilon = 1e-14);
            }
            _ => panic!("expected normal solution"),
        }
        // critical coupling: family with w1^2 + w2^2 = w^2
        match oscillator_solutions(2.0, 1.0, (3, 3)).unwrap() {
            OscillatorSolutions::Family { omega, .. } => {
                let m = oscillator_family_member(omega, omega / 2.0f64.sqrt(), (3, 3)).unwrap();
                assert_relative_eq!(m.omega_eff_1, m.omega_eff_2, epsilon = 1e-12);
                for k in 1..=50 {
                    let w1 = omega * k as f64 / 51.0;
                    let m = oscillator_family_member(omega, w1, (3, 3)).unwrap();
                    assert_relative_eq!(
                        m.omega_eff_1 * m.omega_eff_1 + m.omega_eff_2 * m.omega_eff_2,
                        omega * omega,
                        max_relative = 1e-12
                    );
                }
            }
            _ => panic!("expected family at beta_tilde = 1"),
        }
        // boundary members rejected
        assert!(oscillator_family_member(2.0, 0.0, (3, 3)).is_err());
        assert!(oscillator_family_member(2.0, 2.0, (3, 3)).is_err());
    }
}
