//! Tensor-product grid on the rectangle `[-L, L] x [-K, K]`, node fields and
//! the gauge-covariant finite-volume operators shared by every solver.
//!
//! Nodes sit on both boundaries. Each node owns a control volume whose area
//! is the trapezoid weight, so every integral in the crate is the trapezoid
//! rule and every discrete operator is conservative with respect to it.

mod covariant;
mod field;

pub use covariant::{
    apply_bcs, assemble_covariant_operator, covariant_laplacian, covariant_laplacian_with,
    BoundaryRow, LinkField,
};
pub(crate) use covariant::fv_row;
pub use field::{bilinear, inner, ComplexField, Field, RealField};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and geometric parameters of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Half-width `L` of the rectangle.
    pub half_width: f64,
    /// Half-height `K`.
    pub half_height: f64,
    /// Lead half-length `delta`; `0` disables the leads, `K` covers the full sides.
    pub lead_half_width: f64,
    /// Applied field `h`.
    pub field: f64,
    /// Applied current `I`.
    pub current: f64,
    /// Linear growth coefficient `Gamma` of the TDGL equation.
    pub gamma: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self::canonical()
    }
}

impl Params {
    /// `L = 1`, `K = 2/3`, `delta = 4/15`, no field, no current.
    pub fn canonical() -> Self {
        Params {
            half_width: 1.0,
            half_height: 2.0 / 3.0,
            lead_half_width: 4.0 / 15.0,
            field: 0.0,
            current: 0.0,
            gamma: 0.0,
        }
    }

    pub fn with_field(mut self, h: f64) -> Self {
        self.field = h;
        self
    }

    pub fn with_current(mut self, current: f64) -> Self {
        self.current = current;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_lead(mut self, delta: f64) -> Self {
        self.lead_half_width = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("L", self.half_width),
            ("K", self.half_height),
            ("delta", self.lead_half_width),
            ("h", self.field),
            ("I", self.current),
            ("gamma", self.gamma),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(key, "must be finite"));
            }
        }
        if self.half_width <= 0.0 {
            return Err(Error::param("L", "must be > 0"));
        }
        if self.half_height <= 0.0 {
            return Err(Error::param("K", "must be > 0"));
        }
        if self.lead_half_width < 0.0 {
            return Err(Error::param("delta", "must be >= 0"));
        }
        if self.lead_half_width > self.half_height {
            return Err(Error::param("delta", "delta must be < K"));
        }
        if self.field < 0.0 {
            return Err(Error::param("h", "must be >= 0"));
        }
        if self.current < 0.0 {
            return Err(Error::param("I", "must be >= 0"));
        }
        Ok(())
    }
}

/// Where a node sits relative to the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    /// On `x = +-L` inside the lead: Dirichlet `psi = 0`.
    Lead,
    /// On `x = +-L` outside the lead: natural covariant condition.
    Side,
    /// On `y = +-K` (corners included).
    Edge,
}

/// Uniform node grid. `x(0) = -L`, `x(nx-1) = L`, same in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    half_width: f64,
    half_height: f64,
    lead_half_width: f64,
}

impl Grid {
    /// Builds the grid and checks that each lead carries at least three nodes.
    pub fn new(params: &Params, nx: usize, ny: usize) -> Result<Grid> {
        params.validate()?;
        if nx < 5 || ny < 5 {
            return Err(Error::GridTooCoarse(format!(
                "need nx, ny >= 5, got {nx} x {ny}"
            )));
        }
        let grid = Grid {
            nx,
            ny,
            dx: 2.0 * params.half_width / (nx - 1) as f64,
            dy: 2.0 * params.half_height / (ny - 1) as f64,
            half_width: params.half_width,
            half_height: params.half_height,
            lead_half_width: params.lead_half_width,
        };
        if params.lead_half_width > 0.0 {
            let leads = (0..ny).filter(|&j| grid.is_lead_row(j)).count();
            if leads < 3 {
                return Err(Error::GridTooCoarse(format!(
                    "only {leads} lead node(s) per side; refine ny"
                )));
            }
        }
        Ok(grid)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn half_height(&self) -> f64 {
        self.half_height
    }

    pub fn lead_half_width(&self) -> f64 {
        self.lead_half_width
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Node abscissa; the grid is exactly symmetric about `x = 0`.
    pub fn x(&self, i: usize) -> f64 {
        if 2 * i + 1 == self.nx {
            0.0
        } else if 2 * i + 1 > self.nx {
            -self.x(self.nx - 1 - i)
        } else {
            -self.half_width + i as f64 * self.dx
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if 2 * j + 1 == self.ny {
            0.0
        } else if 2 * j + 1 > self.ny {
            -self.y(self.ny - 1 - j)
        } else {
            -self.half_height + j as f64 * self.dy
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, n: usize) -> (usize, usize) {
        (n % self.nx, n / self.nx)
    }

    /// Index of the node mirrored through `x = 0`.
    pub fn mirror_x(&self, n: usize) -> usize {
        let (i, j) = self.ij(n);
        self.idx(self.nx - 1 - i, j)
    }

    /// Index of the node mirrored through `y = 0`.
    pub fn mirror_y(&self, n: usize) -> usize {
        let (i, j) = self.ij(n);
        self.idx(i, self.ny - 1 - j)
    }

    /// Row `j` of the vertical sides lies in the lead (`|y| < delta`, or the
    /// whole side when `delta = K`).
    pub fn is_lead_row(&self, j: usize) -> bool {
        if self.lead_half_width <= 0.0 {
            return false;
        }
        if self.lead_half_width >= self.half_height {
            return true;
        }
        // nodes landing on the lead edge (up to rounding) are not lead nodes
        self.y(j).abs() < self.lead_half_width - 1e-12 * self.half_height
    }

    pub fn kind(&self, i: usize, j: usize) -> NodeKind {
        let on_side = i == 0 || i + 1 == self.nx;
        let on_edge = j == 0 || j + 1 == self.ny;
        if on_side && self.is_lead_row(j) {
            NodeKind::Lead
        } else if on_edge {
            NodeKind::Edge
        } else if on_side {
            NodeKind::Side
        } else {
            NodeKind::Interior
        }
    }

    pub fn is_dirichlet(&self, n: usize) -> bool {
        let (i, j) = self.ij(n);
        self.kind(i, j) == NodeKind::Lead
    }

    /// One-dimensional trapezoid weight in `x` (includes `dx`).
    pub fn wx(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.nx {
            0.5 * self.dx
        } else {
            self.dx
        }
    }

    pub fn wy(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.ny {
            0.5 * self.dy
        } else {
            self.dy
        }
    }

    /// Control-volume area of a node (trapezoid weight).
    pub fn weight(&self, n: usize) -> f64 {
        let (i, j) = self.ij(n);
        self.wx(i) * self.wy(j)
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.weight(n)).collect()
    }

    /// Total area `4 L K`.
    pub fn area(&self) -> f64 {
        4.0 * self.half_width * self.half_height
    }

    /// Length of the side face of row `j` covered by the lead.
    pub fn lead_face_coverage(&self, j: usize) -> f64 {
        if self.lead_half_width <= 0.0 {
            return 0.0;
        }
        let y = self.y(j);
        let lo = (y - 0.5 * self.dy).max(-self.half_height);
        let hi = (y + 0.5 * self.dy).min(self.half_height);
        let d = self.lead_half_width;
        (hi.min(d) - lo.max(-d)).max(0.0)
    }

    /// Trapezoid-rule integral of node values.
    pub fn integrate<T>(&self, values: &[T]) -> T
    where
        T: Copy + std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
    {
        debug_assert_eq!(values.len(), self.len());
        values
            .iter()
            .enumerate()
            .map(|(n, &v)| v * self.weight(n))
            .sum()
    }

    /// Column index pair straddling `x = 0` (equal when `nx` is odd).
    pub fn center_columns(&self) -> (usize, usize) {
        ((self.nx - 1) / 2, self.nx / 2)
    }

    /// Row index pair straddling `y = 0`.
    pub fn center_rows(&self) -> (usize, usize) {
        ((self.ny - 1) / 2, self.ny / 2)
    }

    /// Fractional index of `y` along the rows (clamped to the grid).
    pub fn y_to_index(&self, y: f64) -> f64 {
        ((y + self.half_height) / self.dy).clamp(0.0, (self.ny - 1) as f64)
    }

    pub fn x_to_index(&self, x: f64) -> f64 {
        ((x + self.half_width) / self.dx).clamp(0.0, (self.nx - 1) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spacing_from_node_counts() {
        let p = Params::canonical().with_lead(0.5);
        let g = Grid::new(&p, 5, 5).unwrap();
        assert_abs_diff_eq!(g.dx(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.dy(), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(g.x(0), -1.0);
        assert_eq!(g.x(4), 1.0);
        assert_eq!(g.y(4), 2.0 / 3.0);
        assert_eq!(g.x(2), 0.0);
    }

    #[test]
    fn lead_rows_strict_inequality() {
        let g = Grid::new(&Params::canonical(), 31, 31).unwrap();
        for j in 0..31 {
            assert_eq!(g.is_lead_row(j), g.y(j).abs() < 4.0 / 15.0, "row {j}");
        }
        // 4/15 falls exactly on a node when ny = 31 (dy = 2/45, 4/15 = 6 dy)
        assert!(!g.is_lead_row(15 + 6));
        assert!(g.is_lead_row(15 + 5));
    }

    #[test]
    fn too_coarse_rejected() {
        assert!(matches!(
            Grid::new(&Params::canonical(), 4, 31),
            Err(Error::GridTooCoarse(_))
        ));
        // canonical lead with 5 rows has a single lead node
        assert!(Grid::new(&Params::canonical(), 31, 5).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = Params::canonical();
        p.lead_half_width = 0.9;
        let err = Grid::new(&p, 33, 33).unwrap_err();
        assert!(err.to_string().contains("delta must be < K"));
        p = Params::canonical();
        p.half_width = 0.0;
        assert!(Grid::new(&p, 33, 33).is_err());
    }

    #[test]
    fn coordinates_are_mirror_symmetric() {
        let g = Grid::new(&Params::canonical(), 64, 43).unwrap();
        for i in 0..g.nx() {
            assert_eq!(g.x(i), -g.x(g.nx() - 1 - i));
        }
        for j in 0..g.ny() {
            assert_eq!(g.y(j), -g.y(g.ny() - 1 - j));
        }
    }

    #[test]
    fn weights_sum_to_area_and_leads_to_total_current() {
        let g = Grid::new(&Params::canonical(), 41, 37).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert_abs_diff_eq!(total, g.area(), epsilon = 1e-12);
        let cover: f64 = (0..g.ny()).map(|j| g.lead_face_coverage(j)).sum();
        assert_abs_diff_eq!(cover, 2.0 * 4.0 / 15.0, epsilon = 1e-12);
    }

    #[test]
    fn full_side_leads_cover_corners() {
        let p = Params::canonical().with_lead(2.0 / 3.0);
        let g = Grid::new(&p, 17, 17).unwrap();
        assert_eq!(g.kind(0, 0), NodeKind::Lead);
        assert_eq!(g.kind(16, 16), NodeKind::Lead);
        let cover: f64 = (0..g.ny()).map(|j| g.lead_face_coverage(j)).sum();
        assert_abs_diff_eq!(cover, 4.0 / 3.0, epsilon = 1e-12);
    }
}
