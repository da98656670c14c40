//! Neumann Poisson solves on the node grid.
//!
//! The finite-volume Neumann Laplacian on boundary-inclusive nodes is the
//! tensor sum of two mirror-Neumann second-difference matrices, which the
//! type-I DCT diagonalizes exactly. Solves are therefore direct, `O(N log N)`
//! and free of any factorization state beyond the DCT plans.
//!
//! The constant mode is removed from the right-hand side and the solution,
//! so every result has zero trapezoid mean.

use std::sync::Arc;

use num_complex::Complex64;
use rustdct::{Dct1, DctPlanner};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, LinkField, RealField};

/// Cached spectral inverse of the Neumann Laplacian on one grid.
#[derive(Clone)]
pub struct PoissonSolver {
    grid: Grid,
    dct_x: Arc<dyn Dct1<f64>>,
    dct_y: Arc<dyn Dct1<f64>>,
    /// Reciprocal eigenvalues, zero for the constant mode.
    inv_eig: Vec<f64>,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver")
            .field("nx", &self.grid.nx())
            .field("ny", &self.grid.ny())
            .finish()
    }
}

fn neumann_eigs(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / (2.0 * (n - 1) as f64)).sin();
            -4.0 / (h * h) * s * s
        })
        .collect()
}

impl PoissonSolver {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = DctPlanner::new();
        let (nx, ny) = grid.shape();
        let mx = neumann_eigs(nx, grid.dx());
        let my = neumann_eigs(ny, grid.dy());
        let mut inv_eig = Vec::with_capacity(nx * ny);
        for (l, myl) in my.iter().enumerate() {
            for (k, mxk) in mx.iter().enumerate() {
                inv_eig.push(if k == 0 && l == 0 { 0.0 } else { 1.0 / (mxk + myl) });
            }
        }
        PoissonSolver {
            grid: grid.clone(),
            dct_x: planner.plan_dct1(nx),
            dct_y: planner.plan_dct1(ny),
            inv_eig,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn transform(&self, data: &mut [f64]) {
        let (nx, ny) = self.grid.shape();
        for row in data.chunks_exact_mut(nx) {
            self.dct_x.process_dct1(row);
        }
        let mut col = vec![0.0; ny];
        let mut scratch = vec![0.0; self.dct_y.get_scratch_len()];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = data[j * nx + i];
            }
            self.dct_y.process_dct1_with_scratch(&mut col, &mut scratch);
            for j in 0..ny {
                data[j * nx + i] = col[j];
            }
        }
    }

    /// Solves `L phi = rhs` in the mean-zero subspace. The trapezoid mean of
    /// `rhs` is discarded (that is the compatibility projection).
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (nx, ny) = self.grid.shape();
        assert_eq!(rhs.len(), nx * ny);
        let mut data = rhs.to_vec();
        self.transform(&mut data);
        for (v, s) in data.iter_mut().zip(&self.inv_eig) {
            *v *= s;
        }
        self.transform(&mut data);
        let scale = 4.0 / ((nx - 1) * (ny - 1)) as f64;
        for v in &mut data {
            *v *= scale;
        }
        data
    }

    /// Applies the Neumann Laplacian itself (used to check residuals).
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (nx, ny) = g.shape();
        let mut out = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let n = g.idx(i, j);
                let mut acc = 0.0;
                let ax = 1.0 / (g.dx() * g.wx(i));
                let ay = 1.0 / (g.dy() * g.wy(j));
                if i + 1 < nx {
                    acc += ax * (phi[n + 1] - phi[n]);
                }
                if i > 0 {
                    acc += ax * (phi[n - 1] - phi[n]);
                }
                if j + 1 < ny {
                    acc += ay * (phi[n + nx] - phi[n]);
                }
                if j > 0 {
                    acc += ay * (phi[n - nx] - phi[n]);
                }
                out[n] = acc;
            }
        }
        out
    }
}

/// A vector field sampled on control-volume faces.
///
/// `fx` has `(nx + 1) * ny` entries: face `0` of row `j` is the left boundary
/// face of node `(0, j)`, face `i + 1` sits between nodes `i` and `i + 1`, and
/// face `nx` is the right boundary face. `fy` is laid out the same way along
/// columns with `nx * (ny + 1)` entries. Boundary faces default to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFlux {
    nx: usize,
    ny: usize,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
}

impl EdgeFlux {
    pub fn zeros(grid: &Grid) -> Self {
        let (nx, ny) = grid.shape();
        EdgeFlux {
            nx,
            ny,
            fx: vec![0.0; (nx + 1) * ny],
            fy: vec![0.0; nx * (ny + 1)],
        }
    }

    /// Samples `f` at face midpoints (boundary faces at the boundary).
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut flux = Self::zeros(grid);
        let (nx, ny) = grid.shape();
        let face_x = |i: usize| -> f64 {
            if i == 0 {
                -grid.half_width()
            } else if i == nx {
                grid.half_width()
            } else {
                0.5 * (grid.x(i - 1) + grid.x(i))
            }
        };
        let face_y = |j: usize| -> f64 {
            if j == 0 {
                -grid.half_height()
            } else if j == ny {
                grid.half_height()
            } else {
                0.5 * (grid.y(j - 1) + grid.y(j))
            }
        };
        for j in 0..ny {
            for i in 0..=nx {
                flux.fx[j * (nx + 1) + i] = f(face_x(i), grid.y(j)).0;
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                flux.fy[j * nx + i] = f(grid.x(i), face_y(j)).1;
            }
        }
        flux
    }

    #[inline]
    pub fn x_face(&self, face: usize, j: usize) -> f64 {
        self.fx[j * (self.nx + 1) + face]
    }

    #[inline]
    pub fn y_face(&self, i: usize, face: usize) -> f64 {
        self.fy[face * self.nx + i]
    }

    pub fn is_finite(&self) -> bool {
        self.fx.iter().chain(&self.fy).all(|v| v.is_finite())
    }

    /// Conservative divergence: net outward flux of each control volume
    /// divided by its area.
    pub fn divergence(&self, grid: &Grid) -> Vec<f64> {
        let (nx, ny) = grid.shape();
        let mut out = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let net = (self.x_face(i + 1, j) - self.x_face(i, j)) * grid.wy(j)
                    + (self.y_face(i, j + 1) - self.y_face(i, j)) * grid.wx(i);
                out[grid.idx(i, j)] = net / (grid.wx(i) * grid.wy(j));
            }
        }
        out
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &EdgeFlux, b: f64) -> EdgeFlux {
        EdgeFlux {
            nx: self.nx,
            ny: self.ny,
            fx: self.fx.iter().zip(&other.fx).map(|(u, v)| a * u + b * v).collect(),
            fy: self.fy.iter().zip(&other.fy).map(|(u, v)| a * u + b * v).collect(),
        }
    }
}

fn check_flux(grid: &Grid, flux: &EdgeFlux) -> Result<()> {
    let (nx, ny) = grid.shape();
    if flux.nx != nx || flux.ny != ny {
        return Err(Error::ShapeMismatch {
            expected: (nx, ny),
            got: (flux.nx, flux.ny),
        });
    }
    if !flux.is_finite() {
        return Err(Error::NonFinite("flux"));
    }
    Ok(())
}

/// Unit-current potential: harmonic, `phi_x = -1` on the leads of both sides,
/// zero normal derivative elsewhere, zero mean.
pub fn solve_phi0(solver: &PoissonSolver) -> Result<RealField> {
    let grid = solver.grid();
    let (nx, ny) = grid.shape();
    let mut rhs = vec![0.0; grid.len()];
    for j in 0..ny {
        let cover = grid.lead_face_coverage(j);
        if cover == 0.0 {
            continue;
        }
        // outward normal derivative is -1 on the right face and +1 on the left
        for (i, g) in [(nx - 1, -cover), (0, cover)] {
            let n = grid.idx(i, j);
            rhs[n] -= g / grid.weight(n);
        }
    }
    let phi = solver.solve(&rhs);
    let field = RealField::from_vec(grid, phi)?;
    if !field.is_finite() {
        return Err(Error::LinearSolve("phi0 solve produced non-finite values".into()));
    }
    Ok(field)
}

/// Solves `Laplace(phi) = div(flux)` with zero Neumann data and zero mean.
pub fn solve_divform(solver: &PoissonSolver, flux: &EdgeFlux) -> Result<RealField> {
    let grid = solver.grid();
    check_flux(grid, flux)?;
    RealField::from_vec(grid, solver.solve(&flux.divergence(grid)))
}

/// Supercurrent `Im(conj(psi) (grad - i h A0) psi)` on interior faces.
pub fn supercurrent(grid: &Grid, links: &LinkField, psi: &ComplexField) -> EdgeFlux {
    let (re, _) = bilinear_current(grid, links, psi, psi);
    re
}

/// The complex current density
/// `(i/2)[u_i grad conj(u_j) - conj(u_j) grad u_i] - h A0 u_i conj(u_j)`
/// on interior faces, returned as real and imaginary parts. For `u_i = u_j`
/// it reduces to the supercurrent and the imaginary part vanishes.
pub fn bilinear_current(
    grid: &Grid,
    links: &LinkField,
    ui: &ComplexField,
    uj: &ComplexField,
) -> (EdgeFlux, EdgeFlux) {
    let (nx, ny) = grid.shape();
    let mut re = EdgeFlux::zeros(grid);
    let mut im = EdgeFlux::zeros(grid);
    let face = |a: usize, b: usize, u: Complex64, len: f64| -> Complex64 {
        let t = uj[a].conj() * u * ui[b] - ui[a] * u.conj() * uj[b].conj();
        t / (Complex64::new(0.0, 2.0) * len)
    };
    for j in 0..ny {
        for i in 0..nx - 1 {
            let v = face(grid.idx(i, j), grid.idx(i + 1, j), links.x_link(i, j), grid.dx());
            let k = j * (nx + 1) + i + 1;
            re.fx[k] = v.re;
            im.fx[k] = v.im;
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            let v = face(grid.idx(i, j), grid.idx(i, j + 1), links.y_link(i, j), grid.dy());
            let k = (j + 1) * nx + i;
            re.fy[k] = v.re;
            im.fy[k] = v.im;
        }
    }
    (re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Params;

    fn grid(p: &Params, nx: usize, ny: usize) -> Grid {
        Grid::new(p, nx, ny).unwrap()
    }

    fn mean(g: &Grid, v: &[f64]) -> f64 {
        g.integrate(v) / g.area()
    }

    #[test]
    fn solve_inverts_apply_on_mean_zero_data() {
        let g = grid(&Params::canonical(), 23, 17);
        let s = PoissonSolver::new(&g);
        let mut phi: Vec<f64> = (0..g.len())
            .map(|n| {
                let (i, j) = g.ij(n);
                (g.x(i) * 2.1).sin() + g.y(j).powi(3) + (i * j % 7) as f64 * 0.1
            })
            .collect();
        let m = mean(&g, &phi);
        phi.iter_mut().for_each(|v| *v -= m);
        let back = s.solve(&s.apply(&phi));
        for (a, b) in phi.iter().zip(&back) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn phi0_full_side_leads_is_minus_x() {
        let p = Params::canonical().with_lead(2.0 / 3.0);
        for (nx, ny) in [(17, 13), (64, 43)] {
            let g = grid(&p, nx, ny);
            let phi = solve_phi0(&PoissonSolver::new(&g)).unwrap();
            for n in 0..g.len() {
                let (i, _) = g.ij(n);
                assert!((phi[n] + g.x(i)).abs() < 1e-12, "{}", phi[n] + g.x(i));
            }
        }
    }

    #[test]
    fn phi0_parity() {
        let g = grid(&Params::canonical(), 61, 41);
        let phi = solve_phi0(&PoissonSolver::new(&g)).unwrap();
        for n in 0..g.len() {
            assert!((phi[n] + phi[g.mirror_x(n)]).abs() < 1e-12);
            assert!((phi[n] - phi[g.mirror_y(n)]).abs() < 1e-12);
        }
        assert!(mean(&g, phi.values()).abs() < 1e-14);
    }

    #[test]
    fn phi0_maximum_on_boundary() {
        let g = grid(&Params::canonical(), 49, 33);
        let phi = solve_phi0(&PoissonSolver::new(&g)).unwrap();
        let (mut best, mut at) = (f64::MIN, 0);
        for n in 0..g.len() {
            if phi[n] > best {
                best = phi[n];
                at = n;
            }
        }
        let (i, j) = g.ij(at);
        assert!(i == 0 || j == 0 || i + 1 == g.nx() || j + 1 == g.ny());
    }

    #[test]
    fn zero_and_constant_flux_give_zero() {
        let g = grid(&Params::canonical(), 21, 15);
        let s = PoissonSolver::new(&g);
        let phi = solve_divform(&s, &EdgeFlux::zeros(&g)).unwrap();
        assert_eq!(phi.max_abs(), 0.0);
        let phi = solve_divform(&s, &EdgeFlux::from_fn(&g, |_, _| (0.8, -0.3))).unwrap();
        assert!(phi.max_abs() < 1e-13);
    }

    #[test]
    fn gradient_flux_recovers_potential_second_order() {
        use std::f64::consts::PI;
        let p = Params::canonical();
        let (l, k) = (p.half_width, p.half_height);
        // w_n = 0 on every side
        let w = |x: f64, y: f64| (PI * x / (2.0 * l)).sin() + 0.5 * (PI * y / k).cos() * (PI * x / l).cos();
        let grad = |x: f64, y: f64| {
            (
                PI / (2.0 * l) * (PI * x / (2.0 * l)).cos()
                    - 0.5 * PI / l * (PI * y / k).cos() * (PI * x / l).sin(),
                -0.5 * PI / k * (PI * y / k).sin() * (PI * x / l).cos(),
            )
        };
        let mut errs = vec![];
        for n in [33usize, 65] {
            let g = grid(&p, n, n);
            let s = PoissonSolver::new(&g);
            let phi = solve_divform(&s, &EdgeFlux::from_fn(&g, grad)).unwrap();
            let exact: Vec<f64> = (0..g.len()).map(|m| {
                let (i, j) = g.ij(m);
                w(g.x(i), g.y(j))
            }).collect();
            let me = mean(&g, &exact);
            let err = (0..g.len()).map(|m| (phi[m] - exact[m] + me).abs()).fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[0] < 5e-3, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn supercurrent_of_real_field_vanishes() {
        let g = grid(&Params::canonical(), 19, 15);
        let u = ComplexField::from_fn(&g, |x, y| Complex64::new(x.cos() + y, 0.0));
        let js = supercurrent(&g, &LinkField::applied(&g, 0.0), &u);
        assert!(js.fx.iter().chain(&js.fy).all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn self_current_is_real_and_swap_conjugates() {
        let g = grid(&Params::canonical(), 19, 15);
        let links = LinkField::applied(&g, 3.0);
        let u = ComplexField::from_fn(&g, |x, y| Complex64::new(x.cos() + y, x * y + 0.3));
        let v = ComplexField::from_fn(&g, |x, y| Complex64::new(y.sin(), x - y * y));
        let (_, im) = bilinear_current(&g, &links, &u, &u);
        assert!(im.fx.iter().chain(&im.fy).all(|x| x.abs() < 1e-12));
        let (re_uv, im_uv) = bilinear_current(&g, &links, &u, &v);
        let (re_vu, im_vu) = bilinear_current(&g, &links, &v, &u);
        for (a, b) in re_uv.fx.iter().zip(&re_vu.fx).chain(re_uv.fy.iter().zip(&re_vu.fy)) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in im_uv.fx.iter().zip(&im_vu.fx).chain(im_uv.fy.iter().zip(&im_vu.fy)) {
            assert!((a + b).abs() < 1e-12);
        }
    }
}
