//! The nonlocal Fock exchange for closed shells, reduced to radial
//! channels: multipole coefficients, term-wise application through the
//! Y_k screening functions, and the dense symmetric kernel samples.

use crate::error::{HfError, Result};
use crate::grid::RadialGrid;
use crate::scf::Orbital;

fn factorial(k: u32) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Squared Wigner 3j symbol (l1 k l2; 0 0 0).
pub fn three_j_000_sq(l1: u32, k: u32, l2: u32) -> f64 {
    let j = l1 + k + l2;
    if j % 2 != 0 {
        return 0.0;
    }
    if k + l2 < l1 || l1 + k < l2 || l1 + l2 < k {
        return 0.0;
    }
    let g = j / 2;
    let pre = factorial(j - 2 * l1) * factorial(j - 2 * k) * factorial(j - 2 * l2)
        / factorial(j + 1);
    let w = factorial(g) / (factorial(g - l1) * factorial(g - k) * factorial(g - l2));
    pre * w * w
}

/// One separable-multipole term of the exchange operator.
#[derive(Debug, Clone)]
pub struct ExchangeTerm {
    /// P_b samples of the occupied partner orbital.
    pub partner: Vec<f64>,
    pub k: u32,
    /// positive prefactor; the operator carries the overall minus sign
    pub coeff: f64,
}

/// Nonlocal exchange kernel for one l channel,
/// K_l(r, r') = -sum_b sum_k coeff * P_b(r) [r_<^k / r_>^{k+1}] P_b(r').
#[derive(Debug, Clone)]
pub struct ExchangeKernel {
    pub target_l: u32,
    pub terms: Vec<ExchangeTerm>,
}

impl ExchangeKernel {
    /// Build the channel kernel from the occupied set. `self_shell` names
    /// the shell the target orbital belongs to, if any: a singly occupied
    /// s shell exchanges fully with itself (one electron, exact
    /// self-action cancellation), while paired shells contribute q/2 per
    /// multipole.
    pub fn build(
        occupied: &[Orbital],
        target_l: u32,
        self_shell: Option<(u32, u32)>,
        scale: f64,
    ) -> Self {
        let mut terms = Vec::new();
        for orb in occupied {
            let q = orb.occupancy as f64;
            let spin_factor = if orb.occupancy == 1 && self_shell == Some((orb.n, orb.l)) {
                1.0
            } else {
                q / 2.0
            };
            let k_lo = target_l.abs_diff(orb.l);
            let k_hi = target_l + orb.l;
            let mut k = k_lo;
            while k <= k_hi {
                let ang = three_j_000_sq(target_l, k, orb.l);
                if ang > 0.0 {
                    let coeff = scale * spin_factor * ang;
                    if coeff != 0.0 {
                        terms.push(ExchangeTerm {
                            partner: orb.radial.clone(),
                            k,
                            coeff,
                        });
                    }
                }
                k += 2;
            }
        }
        ExchangeKernel { target_l, terms }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// (K P)(r) on the grid.
    ///
    /// The quadrature here is the one that defines the discrete channel
    /// operator: uniform weights in the mapped coordinate (so the operator
    /// matrix is exactly symmetric) plus a diagonal Euler-Maclaurin
    /// correction for the derivative kink of r_<^k/r_>^{k+1} at r' = r.
    /// It agrees entry-for-entry with `dense` under the same weights.
    pub fn apply(&self, target: &[f64], grid: &RadialGrid) -> Vec<f64> {
        let n = grid.len();
        let h = grid.step();
        let mut out = vec![0.0; n];
        let mut prefix = vec![0.0; n];
        let mut suffix = vec![0.0; n];
        for term in &self.terms {
            let ki = term.k as i32;
            // prefix_i = sum_{j<=i} rho_j r_j^k w_j ; suffix_i = sum_{j>i} rho_j r_j^{-k-1} w_j
            let mut acc = 0.0;
            for j in 0..n {
                let w = h * grid.jacobian(j);
                acc += term.partner[j] * target[j] * grid.r(j).powi(ki) * w;
                prefix[j] = acc;
            }
            acc = 0.0;
            for j in (0..n).rev() {
                suffix[j] = acc;
                let w = h * grid.jacobian(j);
                acc += term.partner[j] * target[j] * grid.r(j).powi(-ki - 1) * w;
            }
            let jump = (2 * term.k + 1) as f64;
            for i in 0..n {
                let r = grid.r(i);
                let y = prefix[i] * r.powi(-ki - 1) + suffix[i] * r.powi(ki);
                let kink = -(h * h / 12.0) * jump * grid.jacobian(i).powi(2) / (r * r)
                    * term.partner[i]
                    * target[i];
                out[i] -= term.coeff * (term.partner[i] * y + term.partner[i] * kink);
            }
        }
        out
    }

    /// Diagonal of the kink correction in the operator quadrature:
    /// (K P)(r_i) includes `kink_diag[i] * P_i` beyond the weighted kernel
    /// row sum.
    pub fn kink_diagonal(&self, grid: &RadialGrid) -> Vec<f64> {
        let n = grid.len();
        let h = grid.step();
        let mut d = vec![0.0; n];
        for term in &self.terms {
            let jump = (2 * term.k + 1) as f64;
            for i in 0..n {
                let r = grid.r(i);
                d[i] += term.coeff * (h * h / 12.0) * jump * grid.jacobian(i).powi(2)
                    / (r * r)
                    * term.partner[i]
                    * term.partner[i];
            }
        }
        d
    }

    /// Dense kernel samples K(r_i, r_j); exactly symmetric by construction.
    pub fn dense(&self, grid: &RadialGrid) -> Vec<Vec<f64>> {
        let n = grid.len();
        let mut k = vec![vec![0.0; n]; n];
        for term in &self.terms {
            let ki = term.k as i32;
            for i in 0..n {
                let ri = grid.r(i);
                let pi = term.partner[i];
                if pi == 0.0 {
                    continue;
                }
                for j in i..n {
                    let rj = grid.r(j);
                    // r_< = ri, r_> = rj here since the grid is sorted
                    let y = ri.powi(ki) / rj.powi(ki + 1);
                    let v = -term.coeff * pi * y * term.partner[j];
                    k[i][j] += v;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                k[i][j] = k[j][i];
            }
        }
        k
    }
}

/// The exchange integral applied to a sampled target orbital. Errors when
/// the kernel was assembled for a different l channel.
pub fn apply_exchange(
    kernel: &ExchangeKernel,
    target: &Orbital,
    grid: &RadialGrid,
) -> Result<Vec<f64>> {
    if kernel.target_l != target.l {
        return Err(HfError::Domain(format!(
            "exchange kernel is for l = {}, target orbital has l = {}",
            kernel.target_l, target.l
        )));
    }
    Ok(kernel.apply(&target.radial, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn three_j_squares() {
        assert_relative_eq!(three_j_000_sq(0, 0, 0), 1.0);
        assert_relative_eq!(three_j_000_sq(0, 1, 1), 1.0 / 3.0);
        assert_relative_eq!(three_j_000_sq(1, 0, 1), 1.0 / 3.0);
        assert_relative_eq!(three_j_000_sq(1, 2, 1), 2.0 / 15.0);
        assert_relative_eq!(three_j_000_sq(2, 1, 1), 2.0 / 15.0);
        assert_relative_eq!(three_j_000_sq(2, 2, 0), 1.0 / 5.0);
        // parity forbidden
        assert_eq!(three_j_000_sq(0, 1, 0), 0.0);
        assert_eq!(three_j_000_sq(1, 1, 1), 0.0);
        // triangle violated
        assert_eq!(three_j_000_sq(0, 3, 1), 0.0);
    }
}
