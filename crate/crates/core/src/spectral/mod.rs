//! The linearized operator `L u = (grad - i h A0)^2 u - i I phi0 u` and its
//! leading eigenpairs (`L u = -lambda u`, smallest real part first).
//!
//! Internally the problem is posed on the non-lead nodes as the generalized
//! pencil `B x = lambda M x` with `M = diag(area)` and
//! `B = -M Laplace_A + i I M diag(phi0)`. The first term is Hermitian positive
//! semidefinite, so `Re lambda > 0` and `|Im lambda| <= I max|phi0|` hold for
//! the discrete spectrum exactly as in the continuum.

mod branches;
mod critical;
mod eigs;

pub use branches::{track_branches, SweepParam, BranchEvent, BranchEventKind, BranchPoint, SpectrumSweep, TrackOptions};
pub use critical::{find_ic, IcResult};
pub use eigs::{dense_eigenpairs, leading_eigenpairs, leading_eigenpairs_with, EigenOptions};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::grid::{bilinear, fv_row, ComplexField, Grid, LinkField, Params, RealField};
use crate::poisson::{solve_phi0, PoissonSolver};
use crate::sparse::CsrMatrix;

/// One eigenvalue with its eigenfunction on the full node grid.
#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub lambda: Complex64,
    pub u: ComplexField,
    /// `||L u + lambda u|| / ||u||` in the weighted norm.
    pub residual_norm: f64,
}

/// Assembled pencil for one parameter point.
#[derive(Debug, Clone)]
pub struct Operator {
    grid: Grid,
    params: Params,
    phi0: RealField,
    links: LinkField,
    node_of_dof: Vec<usize>,
    dof_of_node: Vec<Option<usize>>,
    mass: Vec<f64>,
    b: CsrMatrix,
}

/// Assembles the operator for `params` on `grid`, given the unit-current
/// potential on the same grid.
pub fn assemble_l(grid: &Grid, params: &Params, phi0: &RealField) -> Result<Operator> {
    params.validate()?;
    phi0.check_grid(grid)?;
    let links = LinkField::applied(grid, params.field);
    let mut dof_of_node = vec![None; grid.len()];
    let mut node_of_dof = Vec::new();
    for n in 0..grid.len() {
        if !grid.is_dirichlet(n) {
            dof_of_node[n] = Some(node_of_dof.len());
            node_of_dof.push(n);
        }
    }
    let mass: Vec<f64> = node_of_dof.iter().map(|&n| grid.weight(n)).collect();
    let mut rows = Vec::with_capacity(node_of_dof.len());
    for (d, &n) in node_of_dof.iter().enumerate() {
        let (i, j) = grid.ij(n);
        let a = mass[d];
        let mut row: Vec<(usize, Complex64)> = fv_row(grid, &links, i, j)
            .into_iter()
            .filter_map(|(m, c)| dof_of_node[m].map(|e| (e, -a * c)))
            .collect();
        row.push((d, Complex64::new(0.0, params.current * a * phi0[n])));
        rows.push(row);
    }
    let b = CsrMatrix::from_rows(node_of_dof.len(), rows);
    Ok(Operator {
        grid: grid.clone(),
        params: *params,
        phi0: phi0.clone(),
        links,
        node_of_dof,
        dof_of_node,
        mass,
        b,
    })
}

impl Operator {
    /// Builds `phi0` and the operator in one go.
    pub fn new(params: &Params, nx: usize, ny: usize) -> Result<Operator> {
        let grid = Grid::new(params, nx, ny)?;
        let phi0 = solve_phi0(&PoissonSolver::new(&grid))?;
        assemble_l(&grid, params, &phi0)
    }

    /// Same geometry and `phi0`, different field or current.
    pub fn with_params(&self, params: &Params) -> Result<Operator> {
        assemble_l(&self.grid, params, &self.phi0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn phi0(&self) -> &RealField {
        &self.phi0
    }

    pub fn links(&self) -> &LinkField {
        &self.links
    }

    /// Number of unknowns (non-lead nodes).
    pub fn dofs(&self) -> usize {
        self.node_of_dof.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Pencil matrix `B` on the unknowns.
    pub fn pencil(&self) -> &CsrMatrix {
        &self.b
    }

    /// Upper bound `I max|phi0|` on `|Im lambda|`.
    pub fn imag_bound(&self) -> f64 {
        self.params.current * self.phi0.max_abs()
    }

    /// Threshold below which `Im lambda` counts as zero.
    pub fn tol_im(&self) -> f64 {
        1e-6 * self.imag_bound()
    }

    pub fn restrict(&self, u: &ComplexField) -> Vec<Complex64> {
        self.node_of_dof.iter().map(|&n| u[n]).collect()
    }

    pub fn extend(&self, x: &[Complex64]) -> ComplexField {
        let mut u = ComplexField::zeros(&self.grid);
        for (d, &n) in self.node_of_dof.iter().enumerate() {
            u[n] = x[d];
        }
        u
    }

    pub fn dof(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    /// `L u` at every node (zero on lead nodes).
    pub fn apply(&self, u: &ComplexField) -> ComplexField {
        let bx = self.b.mul_vec(&self.restrict(u));
        let y: Vec<Complex64> = bx.iter().zip(&self.mass).map(|(v, m)| -v / m).collect();
        self.extend(&y)
    }

    /// Weighted norm of `L u + lambda u` relative to `||u||`.
    pub fn residual(&self, lambda: Complex64, u: &ComplexField) -> f64 {
        let x = self.restrict(u);
        let bx = self.b.mul_vec(&x);
        let mut num = 0.0;
        let mut den = 0.0;
        for d in 0..x.len() {
            let r = bx[d] - lambda * self.mass[d] * x[d];
            num += r.norm_sqr() / self.mass[d];
            den += self.mass[d] * x[d].norm_sqr();
        }
        (num / den).sqrt()
    }

    /// Discrete energy identity: `lambda = int|Du|^2 / int|u|^2
    /// + i I int phi0 |u|^2 / int|u|^2`, evaluated edge by edge.
    pub fn rayleigh_identity(&self, u: &ComplexField) -> Complex64 {
        let g = &self.grid;
        let mut grad = 0.0;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let n = g.idx(i, j);
                if i + 1 < g.nx() {
                    let c = g.wy(j) / g.dx();
                    grad += c * (self.links.x_link(i, j) * u[n + 1] - u[n]).norm_sqr();
                }
                if j + 1 < g.ny() {
                    let c = g.wx(i) / g.dy();
                    grad += c * (self.links.y_link(i, j) * u[n + g.nx()] - u[n]).norm_sqr();
                }
            }
        }
        let mod2: Vec<f64> = u.values().iter().map(|v| v.norm_sqr()).collect();
        let norm = g.integrate(&mod2);
        let pot: Vec<f64> = mod2.iter().zip(self.phi0.values()).map(|(a, p)| a * p).collect();
        Complex64::new(grad / norm, self.params.current * g.integrate(&pot) / norm)
    }
}

/// `M_jk = int u_j(x, -y) u_k(x, y)` (bilinear, no conjugation).
pub fn biorthogonality_matrix(grid: &Grid, pairs: &[EigenPair]) -> Vec<Vec<Complex64>> {
    let starred: Vec<ComplexField> = pairs.iter().map(|p| p.u.y_reflect(grid)).collect();
    starred
        .iter()
        .map(|s| {
            pairs
                .iter()
                .map(|p| bilinear(grid, s.values(), p.u.values()))
                .collect()
        })
        .collect()
}

/// Largest off-diagonal `|M_jk| / max(|M_jj|, |M_kk|)` over pairs with
/// distinct eigenvalues.
pub fn biorthogonality_defect(grid: &Grid, pairs: &[EigenPair]) -> f64 {
    let m = biorthogonality_matrix(grid, pairs);
    let mut worst = 0.0f64;
    for j in 0..pairs.len() {
        for k in 0..pairs.len() {
            if j == k || (pairs[j].lambda - pairs[k].lambda).norm() < 1e-8 {
                continue;
            }
            let scale = m[j][j].norm().max(m[k][k].norm());
            worst = worst.max(m[j][k].norm() / scale);
        }
    }
    worst
}

/// Hausdorff distance between `{lambda}` and `{conj(lambda)}`.
pub fn conjugation_defect(pairs: &[EigenPair]) -> f64 {
    let lam: Vec<Complex64> = pairs.iter().map(|p| p.lambda).collect();
    lam.iter()
        .map(|a| {
            lam.iter()
                .map(|b| (a.conj() - b).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Smallest `|u_k - c u_j^dagger|` over scalars `c`, relative to `|u_k|`,
/// where `u_j^dagger(x, y) = conj(u_j(-x, y))`.
pub fn pt_partner_defect(grid: &Grid, uj: &ComplexField, uk: &ComplexField) -> f64 {
    use crate::grid::inner;
    let d = uj.pt_conjugate(grid);
    let c = inner(grid, d.values(), uk.values()) / inner(grid, d.values(), d.values());
    (uk - &d.scaled(c)).l2_norm(grid) / uk.l2_norm(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_part_is_positive() {
        let p = Params::canonical().with_field(6.0).with_current(40.0);
        let op = Operator::new(&p, 25, 19).unwrap();
        let u = ComplexField::from_fn(op.grid(), |x, y| Complex64::new(x.cos() * y, x - y * y));
        let u = op.extend(&op.restrict(&u));
        let x = op.restrict(&u);
        let bx = op.pencil().mul_vec(&x);
        let q: Complex64 = x.iter().zip(&bx).map(|(a, b)| a.conj() * b).sum();
        // Re <x, Bx> is the gradient energy
        assert!(q.re > 0.0);
        let rq = q / x.iter().zip(op.mass()).map(|(a, m)| a.norm_sqr() * m).sum::<f64>();
        let id = op.rayleigh_identity(&u);
        assert!((rq - id).norm() < 1e-10 * id.norm(), "{rq} {id}");
    }

    #[test]
    fn zero_current_zero_field_pencil_is_real_symmetric() {
        let op = Operator::new(&Params::canonical(), 21, 16).unwrap();
        let b = op.pencil();
        for r in 0..b.nrows() {
            for (c, v) in b.row(r) {
                assert_eq!(v.im, 0.0);
                assert!((b.get(c, r) - v).norm() < 1e-12 * v.norm());
            }
        }
    }

    #[test]
    fn pencil_transpose_is_y_reflection() {
        // B^T = Y B Y is what makes the bilinear pairing with u(x,-y) orthogonal
        let p = Params::canonical().with_field(9.0).with_current(15.0);
        let op = Operator::new(&p, 21, 17).unwrap();
        let g = op.grid();
        let b = op.pencil();
        for r in 0..b.nrows() {
            let nr = op.node_of_dof[r];
            for (c, v) in b.row(r) {
                let nc = op.node_of_dof[c];
                let rr = op.dof(g.mirror_y(nc)).unwrap();
                let cc = op.dof(g.mirror_y(nr)).unwrap();
                assert!((b.get(rr, cc) - v).norm() < 1e-10 * v.norm());
            }
        }
    }
}
