//! Wave-function analysis: node counting on tail-refined orbitals,
//! exchange admixture coefficients, the two-term asymptotic tail model,
//! and scheme-to-scheme tail enhancement factors.

use crate::atom::Shell;
use crate::error::{HfError, Result};
use crate::grid::{PlotTransform, RadialGrid};
use crate::linalg::LogVal;
use crate::scf::{Orbital, RefinedOrbital};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct NodeReport {
    pub shell: Shell,
    pub node_positions: Vec<f64>,
    pub count: usize,
    pub amplitude_floor: f64,
}

/// Margin at both grid ends inside which crossings are ignored.
const EDGE_MARGIN: f64 = 1e-3;

/// Count sign changes of a tail-refined orbital. A sign change counts when
/// the lobes on each side rise above `amplitude_floor` relative to the
/// orbital's peak (the refined log representation is exact far below f64
/// underflow, so the default floor of 1e-30 is meaningful).
pub fn count_nodes(
    refined: &RefinedOrbital,
    grid: &RadialGrid,
    amplitude_floor: f64,
) -> NodeReport {
    let n = grid.len();
    let peak_ln = refined
        .ln_mag
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let floor_ln = peak_ln + amplitude_floor.ln();

    let r_lo = grid.r_min() + EDGE_MARGIN;
    let r_hi = grid.r_max() - EDGE_MARGIN;

    // collapse to lobes: maximal same-sign runs with their peak amplitude
    struct Lobe {
        sign: i8,
        peak_ln: f64,
        first: usize,
        last: usize,
    }
    let mut lobes: Vec<Lobe> = Vec::new();
    for i in 0..n {
        let r = grid.r(i);
        if r < r_lo || r > r_hi || refined.sign[i] == 0 {
            continue;
        }
        match lobes.last_mut() {
            Some(lobe) if lobe.sign == refined.sign[i] => {
                lobe.peak_ln = lobe.peak_ln.max(refined.ln_mag[i]);
                lobe.last = i;
            }
            _ => lobes.push(Lobe {
                sign: refined.sign[i],
                peak_ln: refined.ln_mag[i],
                first: i,
                last: i,
            }),
        }
    }
    let surviving: Vec<&Lobe> = lobes.iter().filter(|l| l.peak_ln >= floor_ln).collect();

    let mut positions = Vec::new();
    for w in surviving.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.sign == b.sign {
            continue; // a sub-floor wiggle between same-sign lobes is noise
        }
        positions.push(crossing_radius(refined, grid, a.last, b.first));
    }
    NodeReport {
        shell: refined.shell,
        count: positions.len(),
        node_positions: positions,
        amplitude_floor,
    }
}

/// Interpolated crossing radius between the last point of one lobe and the
/// first point of the next, scale-free in log space.
fn crossing_radius(refined: &RefinedOrbital, grid: &RadialGrid, i_a: usize, i_b: usize) -> f64 {
    // find the adjacent pair with opposite signs between the lobes
    let mut lo = i_a;
    let mut hi = i_b.max(i_a + 1);
    for i in i_a..i_b {
        if refined.sign[i] != 0 && refined.sign[i + 1] != 0 && refined.sign[i] != refined.sign[i + 1]
        {
            lo = i;
            hi = i + 1;
            break;
        }
    }
    let scale = refined.ln_mag[lo].max(refined.ln_mag[hi]);
    let a = refined.sign[lo] as f64 * (refined.ln_mag[lo] - scale).exp();
    let b = refined.sign[hi] as f64 * (refined.ln_mag[hi] - scale).exp();
    let t = if (a - b).abs() > 0.0 { a / (a - b) } else { 0.5 };
    grid.r(lo) * (1.0 - t) + grid.r(hi) * t
}

/// Node counting on raw eigenvector samples. Errors when crossings appear
/// in the noise region of the tail, where only the refined representation
/// is trustworthy.
pub fn count_nodes_unrefined(
    orbital: &Orbital,
    grid: &RadialGrid,
    amplitude_floor: f64,
) -> Result<NodeReport> {
    let peak = orbital.radial.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let noise = 1e-10 * peak;
    let floor = peak * amplitude_floor.max(1e-10);
    let r_lo = grid.r_min() + EDGE_MARGIN;
    let r_hi = grid.r_max() - EDGE_MARGIN;

    let mut positions = Vec::new();
    let mut prev: Option<(usize, f64)> = None;
    for i in 0..grid.len() {
        let r = grid.r(i);
        let v = orbital.radial[i];
        if r < r_lo || r > r_hi || v.abs() < floor {
            continue;
        }
        if let Some((j, pv)) = prev {
            if pv.signum() != v.signum() {
                if pv.abs().max(v.abs()) < noise * 100.0 {
                    return Err(HfError::Precision(format!(
                        "sign changes of {} at r ~ {:.3} lie in the eigenvector noise floor; \
                         apply refine_tail and count on the refined representation",
                        orbital.label(),
                        r
                    )));
                }
                let t = pv / (pv - v);
                positions.push(grid.r(j) * (1.0 - t) + r * t);
            }
        }
        prev = Some((i, v));
    }
    Ok(NodeReport {
        shell: orbital.shell(),
        count: positions.len(),
        node_positions: positions,
        amplitude_floor,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MixingCoefficient {
    pub value: f64,
    pub radial_integral: f64,
    pub angular_factor: f64,
    pub selection_allowed: bool,
}

/// Dipole-channel admixture coefficient C_n = angular factor times
/// the radial overlap of P_outer * r * P_inner. The angular factor is the
/// m = 0 matrix element of cos(theta) between the two angular states;
/// both orbitals are taken positive near the origin, which fixes the sign.
pub fn mixing_coefficient(
    inner: &Orbital,
    outer: &Orbital,
    grid: &RadialGrid,
) -> MixingCoefficient {
    let l_i = inner.l;
    let l_o = outer.l;
    if l_i.abs_diff(l_o) != 1 {
        return MixingCoefficient {
            value: 0.0,
            radial_integral: 0.0,
            angular_factor: 0.0,
            selection_allowed: false,
        };
    }
    let integrand: Vec<f64> = (0..grid.len())
        .map(|i| outer.radial[i] * grid.r(i) * inner.radial[i])
        .collect();
    let radial = grid.integrate(&integrand);
    let angular = cos_theta_factor(l_i, l_o);
    MixingCoefficient {
        value: angular * radial,
        radial_integral: radial,
        angular_factor: angular,
        selection_allowed: true,
    }
}

/// <l_o 0 | cos theta | l_i 0>.
fn cos_theta_factor(l_i: u32, l_o: u32) -> f64 {
    if l_o == l_i + 1 {
        let l = l_i as f64;
        (l + 1.0) / ((2.0 * l + 1.0) * (2.0 * l + 3.0)).sqrt()
    } else {
        let l = l_i as f64;
        l / ((2.0 * l - 1.0) * (2.0 * l + 1.0)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailTerm {
    /// outer decay constant sqrt(2|E_n|)
    pub beta: f64,
    pub c_n: f64,
    pub n_outer: u32,
}

/// Asymptotic model of an exchange-contaminated inner orbital:
/// P(r) ~ r [ alpha^{3/2} e^{-alpha r}
///            - sum_n C_n beta_n^{3/2} (beta_n r)^{n-1} e^{-beta_n r} / (alpha r)^2 ].
#[derive(Debug, Clone, Serialize)]
pub struct TailModel {
    /// inner decay constant sqrt(2|E_i|)
    pub alpha: f64,
    pub n_inner: u32,
    pub terms: Vec<TailTerm>,
}

impl TailModel {
    pub fn eval_log(&self, r: f64) -> LogVal {
        let inner = LogVal::new(
            1,
            1.5 * self.alpha.ln() - self.alpha * r + r.ln(),
        );
        let mut total = inner;
        for t in &self.terms {
            let ln_mag = 1.5 * t.beta.ln() + (t.n_outer as f64 - 1.0) * (t.beta * r).ln()
                - t.beta * r
                - 2.0 * (self.alpha * r).ln()
                + r.ln()
                + t.c_n.abs().ln();
            let sign = if t.c_n >= 0.0 { -1 } else { 1 };
            total = total.add(LogVal::new(sign, ln_mag));
        }
        total
    }

    /// Fit of ln|P_model| = c + p ln r - kappa r over a window.
    pub fn decay_rate(&self, r_lo: f64, r_hi: f64, samples: usize) -> (f64, f64) {
        let mut ata = [[0.0f64; 3]; 3];
        let mut atb = [0.0f64; 3];
        for s in 0..samples {
            let r = r_lo + (r_hi - r_lo) * s as f64 / (samples - 1) as f64;
            let v = self.eval_log(r);
            if v.is_zero() {
                continue;
            }
            let row = [1.0, r.ln(), -r];
            for a in 0..3 {
                for c in 0..3 {
                    ata[a][c] += row[a] * row[c];
                }
                atb[a] += row[a] * v.ln_mag;
            }
        }
        let sol = solve3(ata, atb);
        (sol[2], sol[1])
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for k in 0..3 {
        let mut piv = k;
        for i in k + 1..3 {
            if a[i][k].abs() > a[piv][k].abs() {
                piv = i;
            }
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..3 {
            let m = a[i][k] / a[k][k];
            for j in k..3 {
                a[i][j] -= m * a[k][j];
            }
            b[i] -= m * b[k];
        }
    }
    let mut x = [0.0f64; 3];
    for k in (0..3).rev() {
        let mut s = b[k];
        for j in k + 1..3 {
            s -= a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    x
}

/// Build the tail model for an inner orbital from the dipole-allowed outer
/// shells. Outer shells violating the selection rule contribute C_n = 0
/// terms (flagged off in the mixing coefficient).
pub fn predict_tail(
    result: &crate::scf::ScfResult,
    inner_shell: &Shell,
    outer_shells: &[Shell],
) -> Result<TailModel> {
    let inner = result
        .orbital(inner_shell.n, inner_shell.l)
        .ok_or_else(|| HfError::Domain(format!("shell {} not in result", inner_shell.label())))?;
    let alpha = (2.0 * inner.energy.abs()).sqrt();
    let mut terms = Vec::new();
    for s in outer_shells {
        let outer = result
            .orbital(s.n, s.l)
            .ok_or_else(|| HfError::Domain(format!("shell {} not in result", s.label())))?;
        let mix = mixing_coefficient(inner, outer, &result.grid);
        if !mix.selection_allowed {
            continue;
        }
        terms.push(TailTerm {
            beta: (2.0 * outer.energy.abs()).sqrt(),
            c_n: mix.value,
            n_outer: outer.n,
        });
    }
    Ok(TailModel {
        alpha,
        n_inner: inner.n,
        terms,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailEnhancement {
    pub rho_eval: f64,
    /// radius solving rho(r) = rho_eval
    pub r_of_rho: f64,
    /// log10 of |P_enhanced / P_reference| at r = r_of_rho
    pub log10_at_r_of_rho: f64,
    /// same ratio read at r = rho_eval (the alternative radius reading)
    pub log10_at_r_equals_rho: f64,
}

/// Amplitude ratio of the same shell under two schemes, in log10, under
/// both readings of the evaluation abscissa.
pub fn tail_enhancement(
    reference: &RefinedOrbital,
    enhanced: &RefinedOrbital,
    grid: &RadialGrid,
    transform: &PlotTransform,
    rho_eval: f64,
) -> TailEnhancement {
    let r_rho = transform.r_of_rho(rho_eval);
    let at = |r: f64| (enhanced.ln_abs_at(r, grid) - reference.ln_abs_at(r, grid)) / 10f64.ln();
    TailEnhancement {
        rho_eval,
        r_of_rho: r_rho,
        log10_at_r_of_rho: at(r_rho),
        log10_at_r_equals_rho: at(rho_eval),
    }
}

/// Ratio profile log10|P_enh/P_ref|(r) on grid points in [r_lo, r_hi].
pub fn enhancement_profile(
    reference: &RefinedOrbital,
    enhanced: &RefinedOrbital,
    grid: &RadialGrid,
    r_lo: f64,
    r_hi: f64,
) -> Vec<(f64, f64)> {
    (0..grid.len())
        .filter(|&i| grid.r(i) >= r_lo && grid.r(i) <= r_hi)
        .map(|i| {
            (
                grid.r(i),
                (enhanced.ln_mag[i] - reference.ln_mag[i]) / 10f64.ln(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::hydrogenic;
    use approx::assert_relative_eq;

    fn orbital(n: u32, l: u32, z: f64, grid: &RadialGrid) -> Orbital {
        Orbital {
            n,
            l,
            occupancy: 1,
            energy: hydrogenic::energy(n, z),
            radial: hydrogenic::sample_p(n, l, z, grid.points()),
        }
    }

    #[test]
    fn hydrogenic_mixing_matches_analytic_overlap() {
        // 1s/2p radial overlap: int P_2p r P_1s dr = 128 sqrt(2) / 243 * sqrt(3)
        let grid = RadialGrid::default_grid();
        let inner = orbital(1, 0, 1.0, &grid);
        let outer = orbital(2, 1, 1.0, &grid);
        let mix = mixing_coefficient(&inner, &outer, &grid);
        assert!(mix.selection_allowed);
        let analytic = 128.0 * 2.0f64.sqrt() / 243.0 * 3.0f64.sqrt();
        assert_relative_eq!(mix.radial_integral, analytic, epsilon = 1e-6);
        // s-inner angular factor is 1/sqrt(3)
        assert_relative_eq!(mix.angular_factor, 1.0 / 3.0f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(mix.value, 128.0 * 2.0f64.sqrt() / 243.0, epsilon = 1e-6);
    }

    #[test]
    fn selection_rule_yields_zero_with_flag() {
        let grid = RadialGrid::default_grid();
        let a = orbital(1, 0, 1.0, &grid);
        let b = orbital(2, 0, 1.0, &grid);
        let mix = mixing_coefficient(&a, &b, &grid);
        assert!(!mix.selection_allowed);
        assert_eq!(mix.value, 0.0);
    }

    #[test]
    fn tail_model_limits() {
        // no outer shells: pure exponential with the inner rate
        let m = TailModel {
            alpha: 2.0,
            n_inner: 1,
            terms: vec![],
        };
        let (kappa, _) = m.decay_rate(10.0, 30.0, 60);
        assert_relative_eq!(kappa, 2.0, epsilon = 1e-9);

        // alpha >> beta at large r: the outer term dominates and the model
        // reduces to its single-term form
        let m2 = TailModel {
            alpha: 8.0,
            n_inner: 1,
            terms: vec![TailTerm {
                beta: 0.8,
                c_n: 0.05,
                n_outer: 3,
            }],
        };
        let r = 25.0;
        let full = m2.eval_log(r);
        let single = LogVal::new(
            -1,
            1.5 * 0.8f64.ln() + 2.0 * (0.8 * r).ln() - 0.8 * r - 2.0 * (8.0 * r).ln() + r.ln()
                + 0.05f64.ln(),
        );
        assert_eq!(full.sign, single.sign);
        assert!(
            (full.ln_mag - single.ln_mag).abs() < 1e-6 * single.ln_mag.abs(),
            "{} vs {}",
            full.ln_mag,
            single.ln_mag
        );

        // N_o identical outer terms scale the outer part linearly
        let mut m3 = m2.clone();
        for _ in 0..3 {
            m3.terms.push(m2.terms[0]);
        }
        let v2 = m2.eval_log(r);
        let v3 = m3.eval_log(r);
        assert_relative_eq!(v3.ln_mag - v2.ln_mag, 4.0f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn enhancement_of_identical_schemes_is_zero() {
        let grid = RadialGrid::default_grid();
        let refined = RefinedOrbital {
            shell: Shell {
                n: 1,
                l: 0,
                occupancy: 2,
            },
            energy: -0.5,
            match_index: 0,
            sign: vec![1; grid.len()],
            ln_mag: grid.points().iter().map(|&r| -r).collect(),
            match_diagnostic: 0.0,
        };
        let t = PlotTransform::default();
        let e = tail_enhancement(&refined, &refined, &grid, &t, 4.0);
        assert_eq!(e.log10_at_r_of_rho, 0.0);
        assert_eq!(e.log10_at_r_equals_rho, 0.0);
        // rho = 4 maps to r ~ 1.33
        assert!((e.r_of_rho - 1.33).abs() < 0.01);
    }
}
