//! Link-variable discretization of `(grad - i h A)^2`.
//!
//! The edge from node `a` to its `+x` (or `+y`) neighbour `b` carries
//! `U_ab = exp(-i * integral_a^b A . dl)`, so `U_ab psi_b - psi_a` is the
//! covariant difference. For the applied potential `h A0 = h (-y, 0)` the
//! x-links are `exp(i h y dx)` and the y-links are one.
//!
//! Every node row is the finite-volume balance over its control volume: the
//! covariant flux through each interior face, divided by the cell area. On
//! side and edge nodes the boundary face carries zero covariant flux, which
//! is the natural condition `psi_x + i h y psi = 0` (resp. `psi_y = 0`). Lead
//! nodes are Dirichlet rows.

use num_complex::Complex64;

use super::{ComplexField, Grid, NodeKind};
use crate::sparse::CsrMatrix;

/// Unit-modulus phases on every grid edge.
#[derive(Debug, Clone)]
pub struct LinkField {
    nx: usize,
    ny: usize,
    /// `(nx-1) * ny`, edge `(i,j)->(i+1,j)` at `j * (nx-1) + i`.
    ux: Vec<Complex64>,
    /// `nx * (ny-1)`, edge `(i,j)->(i,j+1)` at `j * nx + i`.
    uy: Vec<Complex64>,
}

impl LinkField {
    /// Links of the applied potential `h (-y, 0)`.
    pub fn applied(grid: &Grid, h: f64) -> Self {
        let (nx, ny) = grid.shape();
        let mut ux = Vec::with_capacity((nx - 1) * ny);
        for j in 0..ny {
            let u = Complex64::from_polar(1.0, h * grid.y(j) * grid.dx());
            ux.extend(std::iter::repeat_n(u, nx - 1));
        }
        LinkField {
            nx,
            ny,
            ux,
            uy: vec![Complex64::new(1.0, 0.0); nx * (ny - 1)],
        }
    }

    /// Links of an arbitrary potential `A(x, y)`, integrated along each edge
    /// with Simpson's rule.
    pub fn from_potential(grid: &Grid, a: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (nx, ny) = grid.shape();
        let mut ux = Vec::with_capacity((nx - 1) * ny);
        for j in 0..ny {
            for i in 0..nx - 1 {
                let (x0, x1, y) = (grid.x(i), grid.x(i + 1), grid.y(j));
                let xm = 0.5 * (x0 + x1);
                let int = (x1 - x0) / 6.0 * (a(x0, y).0 + 4.0 * a(xm, y).0 + a(x1, y).0);
                ux.push(Complex64::from_polar(1.0, -int));
            }
        }
        let mut uy = Vec::with_capacity(nx * (ny - 1));
        for j in 0..ny - 1 {
            for i in 0..nx {
                let (y0, y1, x) = (grid.y(j), grid.y(j + 1), grid.x(i));
                let ym = 0.5 * (y0 + y1);
                let int = (y1 - y0) / 6.0 * (a(x, y0).1 + 4.0 * a(x, ym).1 + a(x, y1).1);
                uy.push(Complex64::from_polar(1.0, -int));
            }
        }
        LinkField { nx, ny, ux, uy }
    }

    #[inline]
    pub fn x_link(&self, i: usize, j: usize) -> Complex64 {
        self.ux[j * (self.nx - 1) + i]
    }

    #[inline]
    pub fn y_link(&self, i: usize, j: usize) -> Complex64 {
        self.uy[j * self.nx + i]
    }

    /// Same links with every phase conjugated (field `h -> -h`).
    pub fn conjugated(&self) -> Self {
        LinkField {
            nx: self.nx,
            ny: self.ny,
            ux: self.ux.iter().map(|u| u.conj()).collect(),
            uy: self.uy.iter().map(|u| u.conj()).collect(),
        }
    }
}

/// Finite-volume row of the covariant Laplacian at node `(i, j)`:
/// `sum_faces (c_e / area) (U psi_m - psi_n)`.
pub(crate) fn fv_row(grid: &Grid, links: &LinkField, i: usize, j: usize) -> Vec<(usize, Complex64)> {
    let n = grid.idx(i, j);
    let area = grid.wx(i) * grid.wy(j);
    let mut row = Vec::with_capacity(5);
    let mut diag = 0.0;
    let mut push = |m: usize, c: f64, u: Complex64| {
        row.push((m, u * (c / area)));
        diag -= c / area;
    };
    if i + 1 < grid.nx() {
        push(grid.idx(i + 1, j), grid.wy(j) / grid.dx(), links.x_link(i, j));
    }
    if i > 0 {
        push(grid.idx(i - 1, j), grid.wy(j) / grid.dx(), links.x_link(i - 1, j).conj());
    }
    if j + 1 < grid.ny() {
        push(grid.idx(i, j + 1), grid.wx(i) / grid.dy(), links.y_link(i, j));
    }
    if j > 0 {
        push(grid.idx(i, j - 1), grid.wx(i) / grid.dy(), links.y_link(i, j - 1).conj());
    }
    row.push((n, Complex64::new(diag, 0.0)));
    row
}

/// Covariant Laplacian at interior nodes for an arbitrary link field.
/// Boundary nodes are left at zero; their rows come from [`apply_bcs`].
pub fn covariant_laplacian_with(grid: &Grid, psi: &ComplexField, links: &LinkField) -> ComplexField {
    let mut out = ComplexField::zeros(grid);
    for j in 1..grid.ny() - 1 {
        for i in 1..grid.nx() - 1 {
            let v: Complex64 = fv_row(grid, links, i, j)
                .into_iter()
                .map(|(m, c)| c * psi[m])
                .sum();
            out[grid.idx(i, j)] = v;
        }
    }
    out
}

/// `(grad - i h A0)^2 psi` at interior nodes, `A0 = (-y, 0)`.
pub fn covariant_laplacian(grid: &Grid, psi: &ComplexField, h: f64) -> ComplexField {
    covariant_laplacian_with(grid, psi, &LinkField::applied(grid, h))
}

/// Closure row for one boundary node.
#[derive(Debug, Clone)]
pub struct BoundaryRow {
    pub node: usize,
    pub entries: Vec<(usize, Complex64)>,
    pub rhs: Complex64,
    pub dirichlet: bool,
}

/// Boundary rows: identity rows on lead nodes, half-cell natural rows on the
/// remaining side and edge nodes (corners included).
pub fn apply_bcs(grid: &Grid, links: &LinkField) -> Vec<BoundaryRow> {
    let mut rows = Vec::new();
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let kind = grid.kind(i, j);
            if kind == NodeKind::Interior {
                continue;
            }
            let node = grid.idx(i, j);
            let row = if kind == NodeKind::Lead {
                BoundaryRow {
                    node,
                    entries: vec![(node, Complex64::new(1.0, 0.0))],
                    rhs: Complex64::default(),
                    dirichlet: true,
                }
            } else {
                BoundaryRow {
                    node,
                    entries: fv_row(grid, links, i, j),
                    rhs: Complex64::default(),
                    dirichlet: false,
                }
            };
            rows.push(row);
        }
    }
    rows
}

/// Full node-space operator: covariant stencil inside, boundary closure on
/// the rim.
pub fn assemble_covariant_operator(grid: &Grid, h: f64) -> CsrMatrix {
    let links = LinkField::applied(grid, h);
    let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); grid.len()];
    for j in 1..grid.ny() - 1 {
        for i in 1..grid.nx() - 1 {
            rows[grid.idx(i, j)] = fv_row(grid, &links, i, j);
        }
    }
    for b in apply_bcs(grid, &links) {
        rows[b.node] = b.entries;
    }
    CsrMatrix::from_rows(grid.len(), rows)
}
