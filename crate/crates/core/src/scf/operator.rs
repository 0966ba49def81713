//! Radial channel operator on the mapped grid.
//!
//! P(r) = sqrt(dr/dx) u(x) turns the radial equation
//!     -P''/2 + [V(r) + l(l+1)/(2 r^2)] P = E P  (+ nonlocal exchange)
//! into the banded symmetric generalized problem
//!     (A + X) u = E B u,
//! A = -d^2/dx^2 + diag(G + 2 g'^2 W),  B = diag(2 g'^2),
//! which is solved directly by bisection/inverse iteration when local, and
//! through a projected subspace (local eigenbasis augmented with the
//! current orbitals and their exchange images) plus a dense polish when the
//! exchange term is present. The pencil form keeps every factored matrix at
//! moderate norm regardless of the grid's dynamic range.

use crate::error::{HfError, Result};
use crate::grid::RadialGrid;
use crate::linalg::{
    pencil_count_below, pencil_lowest_eigenpairs, pencil_lowest_eigenpairs_tol, SymBanded,
};
use crate::scf::exchange::ExchangeKernel;
use faer::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    Two,
    Four,
}

pub struct ChannelOperator {
    pub l: u32,
    n: usize,
    local: SymBanded,
    kinetic_only: SymBanded,
    b_diag: Vec<f64>,
    sqrt_jac: Vec<f64>,
    pub exchange: Option<ExchangeKernel>,
}

impl ChannelOperator {
    pub fn new(
        grid: &RadialGrid,
        l: u32,
        v_local: &[f64],
        exchange: Option<ExchangeKernel>,
        fd_order: FdOrder,
    ) -> Self {
        let n = grid.len();
        assert_eq!(v_local.len(), n);
        let h = grid.step();
        let p = match fd_order {
            FdOrder::Two => 1,
            FdOrder::Four => 2,
        };
        let mut a = SymBanded::zeros(n, p);
        let mut kin = SymBanded::zeros(n, p);
        let (d0, d1, d2) = match fd_order {
            FdOrder::Two => (2.0 / (h * h), -1.0 / (h * h), 0.0),
            FdOrder::Four => (
                5.0 / (2.0 * h * h),
                -4.0 / (3.0 * h * h),
                1.0 / (12.0 * h * h),
            ),
        };
        let ll = (l * (l + 1)) as f64;
        let mut b_diag = Vec::with_capacity(n);
        let mut sqrt_jac = Vec::with_capacity(n);
        for i in 0..n {
            let r = grid.r(i);
            let jac = grid.jacobian(i);
            let g = grid.liouville_term(i);
            let w = v_local[i] + ll / (2.0 * r * r);
            a.diags[0][i] = d0 + g + 2.0 * jac * jac * w;
            kin.diags[0][i] = d0 + g + jac * jac * ll / (r * r);
            b_diag.push(2.0 * jac * jac);
            sqrt_jac.push(jac.sqrt());
        }
        for i in 0..n - 1 {
            a.diags[1][i] = d1;
            kin.diags[1][i] = d1;
        }
        if p == 2 {
            for i in 0..n - 2 {
                a.diags[2][i] = d2;
                kin.diags[2][i] = d2;
            }
        }
        ChannelOperator {
            l,
            n,
            local: a,
            kinetic_only: kin,
            b_diag,
            sqrt_jac,
            exchange,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    fn u_from_p(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(&self.sqrt_jac)
            .map(|(&v, &s)| v / s)
            .collect()
    }

    fn p_from_u(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.sqrt_jac)
            .map(|(&v, &s)| v * s)
            .collect()
    }

    /// (H P)(r_i) including the exchange term; P and the result are in the
    /// P(r) representation on the grid.
    pub fn apply(&self, p: &[f64], grid: &RadialGrid) -> Vec<f64> {
        let u = self.u_from_p(p);
        let mut au = vec![0.0; self.n];
        self.local.matvec(&u, &mut au);
        let mut out: Vec<f64> = (0..self.n)
            .map(|i| au[i] * self.sqrt_jac[i] / self.b_diag[i])
            .collect();
        if let Some(k) = &self.exchange {
            let kp = k.apply(p, grid);
            for i in 0..self.n {
                out[i] += kp[i];
            }
        }
        out
    }

    /// Expectation of the kinetic operator (second derivative plus
    /// centrifugal term) in the grid quadrature.
    pub fn kinetic_expectation(&self, p: &[f64], grid: &RadialGrid) -> f64 {
        let u = self.u_from_p(p);
        let mut ku = vec![0.0; self.n];
        self.kinetic_only.matvec(&u, &mut ku);
        let tp: Vec<f64> = (0..self.n)
            .map(|i| ku[i] * self.sqrt_jac[i] / self.b_diag[i])
            .collect();
        grid.inner(p, &tp)
    }

    /// Number of pencil eigenvalues below sigma. Exact (inertia count) for
    /// local operators; with exchange this uses a projected estimate with
    /// the given basis size, which is variational from above and can only
    /// undercount marginally bound states.
    pub fn count_below(&self, grid: &RadialGrid, sigma: f64, projection: usize) -> usize {
        match &self.exchange {
            None => pencil_count_below(&self.local, &self.b_diag, sigma),
            Some(_) => {
                let m = projection.min(self.n);
                let basis = self.local_basis(m);
                let (vals, _) = self.solve_lowest_projected(grid, m, &basis, &[]);
                vals.iter().filter(|&&v| v < sigma).count()
            }
        }
    }

    /// Low eigenvectors of the local part, coarse precision: these only
    /// scaffold the projection subspace for the exchange solve.
    pub fn local_basis(&self, m: usize) -> Vec<Vec<f64>> {
        let m = m.min(self.n).max(1);
        let (_, us) = pencil_lowest_eigenpairs_tol(&self.local, &self.b_diag, m, 1e-7, 2);
        us
    }

    /// Lowest-k eigenpairs in P form (quadrature-normalized, sign-fixed).
    pub fn solve_lowest(
        &self,
        grid: &RadialGrid,
        k: usize,
        projection: usize,
        warm: &[Vec<f64>],
    ) -> (Vec<f64>, Vec<Vec<f64>>) {
        let (vals, ps) = match &self.exchange {
            None => {
                let (vals, us) = pencil_lowest_eigenpairs(&self.local, &self.b_diag, k);
                let ps = us.iter().map(|u| self.p_from_u(u)).collect();
                (vals, ps)
            }
            Some(_) => {
                let basis = self.local_basis(projection.max(k));
                self.solve_lowest_projected(grid, k, &basis, warm)
            }
        };
        let mut out_p = Vec::with_capacity(k);
        for p in ps {
            out_p.push(normalize_sign(p, grid));
        }
        (vals, out_p)
    }

    /// Projected eigensolve over `scaffold` (u-space vectors, any
    /// conditioning) augmented with the warm orbitals and their exchange
    /// images so the occupied-space coupling is represented exactly.
    pub fn solve_lowest_projected(
        &self,
        grid: &RadialGrid,
        k: usize,
        scaffold: &[Vec<f64>],
        warm: &[Vec<f64>],
    ) -> (Vec<f64>, Vec<Vec<f64>>) {
        let kernel = self.exchange.as_ref().expect("projected solve needs exchange");
        let mut basis: Vec<Vec<f64>> = scaffold.to_vec();
        for pw in warm {
            basis.push(self.u_from_p(pw));
            let kp = kernel.apply(pw, grid);
            basis.push(self.u_from_p(&kp));
        }
        // B-orthonormalize (modified Gram-Schmidt), dropping dependent columns
        let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
        for mut v in basis {
            for _ in 0..2 {
                for q in &ortho {
                    let c = b_inner(&v, q, &self.b_diag);
                    for i in 0..self.n {
                        v[i] -= c * q[i];
                    }
                }
            }
            let norm = b_inner(&v, &v, &self.b_diag).sqrt();
            if norm > 1e-8 {
                for x in v.iter_mut() {
                    *x /= norm;
                }
                ortho.push(v);
            }
        }
        let dim = ortho.len();
        // images (A + X) phi_j
        let mut images: Vec<Vec<f64>> = Vec::with_capacity(dim);
        for phi in &ortho {
            let mut a_phi = vec![0.0; self.n];
            self.local.matvec(phi, &mut a_phi);
            let p = self.p_from_u(phi);
            let kp = kernel.apply(&p, grid);
            for i in 0..self.n {
                // X_u u = 2 g'^{3/2} (K P)(r)
                a_phi[i] += 2.0 * self.sqrt_jac[i].powi(3) * kp[i];
            }
            images.push(a_phi);
        }
        let mut ht = Mat::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let v: f64 = ortho[i]
                    .iter()
                    .zip(&images[j])
                    .map(|(a, b)| a * b)
                    .sum();
                ht[(i, j)] = v;
            }
        }
        // enforce symmetry lost to quadrature in the exchange image
        for i in 0..dim {
            for j in 0..i {
                let s = 0.5 * (ht[(i, j)] + ht[(j, i)]);
                ht[(i, j)] = s;
                ht[(j, i)] = s;
            }
        }
        let evd = ht
            .self_adjoint_eigen(faer::Side::Lower)
            .expect("projected eigenproblem");
        let s = evd.S();
        let uu = evd.U();
        let kk = k.min(dim);
        let mut vals = Vec::with_capacity(kk);
        let mut vecs = Vec::with_capacity(kk);
        for idx in 0..kk {
            vals.push(s[idx]);
            let mut u = vec![0.0; self.n];
            for (j, phi) in ortho.iter().enumerate() {
                let c = uu[(j, idx)];
                if c != 0.0 {
                    for i in 0..self.n {
                        u[i] += c * phi[i];
                    }
                }
            }
            vecs.push(self.p_from_u(&u));
        }
        (vals, vecs)
    }

    /// Dense (A + X) in u form for the polish step.
    pub fn dense_matrix(&self, grid: &RadialGrid) -> Mat<f64> {
        let n = self.n;
        let h = grid.step();
        let mut a = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            for d in 0..=self.local.half_bandwidth {
                if i + d < n {
                    let v = self.local.diags[d][i];
                    a[(i, i + d)] = v;
                    a[(i + d, i)] = v;
                }
            }
        }
        if let Some(kernel) = &self.exchange {
            // X[i][j] = 2 h g'_i^{3/2} K(r_i, r_j) g'_j^{3/2}, plus the
            // diagonal kink correction of the same quadrature `apply` uses
            let kd = kernel.dense(grid);
            for i in 0..n {
                let si = 2.0 * h * self.sqrt_jac[i].powi(3);
                for j in 0..n {
                    a[(i, j)] += si * kd[i][j] * self.sqrt_jac[j].powi(3);
                }
            }
            let kink = kernel.kink_diagonal(grid);
            for i in 0..n {
                a[(i, i)] += 2.0 * self.sqrt_jac[i].powi(4) * kink[i];
            }
        }
        a
    }

    /// Rayleigh-quotient inverse iteration on the dense pencil, starting
    /// from a converged projected eigenpair.
    pub fn polish(
        &self,
        dense: &Mat<f64>,
        eps0: f64,
        p0: &[f64],
        rounds: usize,
    ) -> Result<(f64, Vec<f64>)> {
        let n = self.n;
        let mut eps = eps0;
        let mut u = self.u_from_p(p0);
        b_normalize(&mut u, &self.b_diag);
        for _ in 0..rounds {
            let mut m = dense.clone();
            let shift = eps + eps.abs().max(1.0) * 1e-12;
            for i in 0..n {
                m[(i, i)] -= shift * self.b_diag[i];
            }
            let lu = m.partial_piv_lu();
            let rhs = Mat::from_fn(n, 1, |i, _| u[i] * self.b_diag[i]);
            let z = lu.solve(&rhs);
            let mut znew: Vec<f64> = (0..n).map(|i| z[(i, 0)]).collect();
            b_normalize(&mut znew, &self.b_diag);
            // Rayleigh quotient on the pencil
            let mut az = vec![0.0; n];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += dense[(i, j)] * znew[j];
                }
                az[i] = acc;
            }
            let num: f64 = znew.iter().zip(&az).map(|(a, b)| a * b).sum();
            let den: f64 = znew
                .iter()
                .enumerate()
                .map(|(i, v)| v * v * self.b_diag[i])
                .sum();
            eps = num / den;
            u = znew;
        }
        if !eps.is_finite() {
            return Err(HfError::Conditioning {
                reason: "dense polish diverged".into(),
                nearest: eps0,
            });
        }
        Ok((eps, self.p_from_u(&u)))
    }
}

fn b_inner(x: &[f64], y: &[f64], b: &[f64]) -> f64 {
    x.iter().zip(y).zip(b).map(|((u, v), w)| u * v * w).sum()
}

fn b_normalize(x: &mut [f64], b: &[f64]) {
    let s = b_inner(x, x, b).sqrt();
    if s > 0.0 {
        for v in x.iter_mut() {
            *v /= s;
        }
    }
}

/// Quadrature-normalize and orient an orbital so it is positive at small r.
pub fn normalize_sign(mut p: Vec<f64>, grid: &RadialGrid) -> Vec<f64> {
    let norm = grid.inner(&p, &p).sqrt();
    if norm > 0.0 {
        for v in p.iter_mut() {
            *v /= norm;
        }
    }
    let peak = p.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    if let Some(first) = p.iter().find(|v| v.abs() > 0.05 * peak) {
        if *first < 0.0 {
            for v in p.iter_mut() {
                *v = -*v;
            }
        }
    }
    p
}
