use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Grid;
use crate::error::{Error, Result};

/// One value per grid node, `x` fastest (`n = j * nx + i`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field<T> {
    nx: usize,
    ny: usize,
    data: Vec<T>,
}

pub type ComplexField = Field<Complex64>;
pub type RealField = Field<f64>;

impl<T: Copy + Default> Field<T> {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            nx: grid.nx(),
            ny: grid.ny(),
            data: vec![T::default(); grid.len()],
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64, f64) -> T) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                data.push(f(grid.x(i), grid.y(j)));
            }
        }
        Field {
            nx: grid.nx(),
            ny: grid.ny(),
            data,
        }
    }

    pub fn from_vec(grid: &Grid, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.shape(),
                got: (data.len(), 1),
            });
        }
        Ok(Field {
            nx: grid.nx(),
            ny: grid.ny(),
            data,
        })
    }

    pub fn map<U: Copy + Default>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field {
            nx: self.nx,
            ny: self.ny,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T> Field<T> {
    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &T {
        &self.data[j * self.nx + i]
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.shape() != grid.shape() {
            return Err(Error::ShapeMismatch {
                expected: grid.shape(),
                got: self.shape(),
            });
        }
        Ok(())
    }
}

impl<T> std::ops::Index<usize> for Field<T> {
    type Output = T;
    fn index(&self, n: usize) -> &T {
        &self.data[n]
    }
}

impl<T> std::ops::IndexMut<usize> for Field<T> {
    fn index_mut(&mut self, n: usize) -> &mut T {
        &mut self.data[n]
    }
}

impl RealField {
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

impl ComplexField {
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn scale(&mut self, c: Complex64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: Complex64) -> ComplexField {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> ComplexField {
        self.map(|v| v.conj())
    }

    /// `u^dagger(x, y) = conj(u(-x, y))`.
    pub fn pt_conjugate(&self, grid: &Grid) -> ComplexField {
        let mut out = self.clone();
        for n in 0..grid.len() {
            out.data[n] = self.data[grid.mirror_x(n)].conj();
        }
        out
    }

    /// `u^star(x, y) = u(x, -y)`.
    pub fn y_reflect(&self, grid: &Grid) -> ComplexField {
        let mut out = self.clone();
        for n in 0..grid.len() {
            out.data[n] = self.data[grid.mirror_y(n)];
        }
        out
    }

    pub fn re(&self) -> RealField {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> RealField {
        self.map(|v| v.im)
    }

    /// Value at `(0, 0)` by bilinear interpolation of the central nodes.
    pub fn center_value(&self, grid: &Grid) -> Complex64 {
        let (i0, i1) = grid.center_columns();
        let (j0, j1) = grid.center_rows();
        0.25 * (*self.at(i0, j0) + *self.at(i1, j0) + *self.at(i0, j1) + *self.at(i1, j1))
    }

    /// Values on the center line `x = 0`, one per grid row.
    pub fn center_line(&self, grid: &Grid) -> Vec<Complex64> {
        let (i0, i1) = grid.center_columns();
        (0..grid.ny())
            .map(|j| 0.5 * (*self.at(i0, j) + *self.at(i1, j)))
            .collect()
    }

    /// Bilinear interpolation at `(x, y)`, clamped to the rectangle.
    pub fn interpolate(&self, grid: &Grid, x: f64, y: f64) -> Complex64 {
        let fx = grid.x_to_index(x);
        let fy = grid.y_to_index(y);
        let i = (fx.floor() as usize).min(grid.nx() - 2);
        let j = (fy.floor() as usize).min(grid.ny() - 2);
        let (s, t) = (fx - i as f64, fy - j as f64);
        (1.0 - t) * ((1.0 - s) * *self.at(i, j) + s * *self.at(i + 1, j))
            + t * ((1.0 - s) * *self.at(i, j + 1) + s * *self.at(i + 1, j + 1))
    }

    /// Weighted (trapezoid) Hermitian norm.
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        grid.integrate(&self.data.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>())
            .sqrt()
    }
}

impl std::ops::Add for &ComplexField {
    type Output = ComplexField;
    fn add(self, rhs: &ComplexField) -> ComplexField {
        debug_assert_eq!(self.shape(), rhs.shape());
        Field {
            nx: self.nx,
            ny: self.ny,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl std::ops::Sub for &ComplexField {
    type Output = ComplexField;
    fn sub(self, rhs: &ComplexField) -> ComplexField {
        debug_assert_eq!(self.shape(), rhs.shape());
        Field {
            nx: self.nx,
            ny: self.ny,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Bilinear integral `sum w u v` (no conjugation).
pub fn bilinear(grid: &Grid, u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter()
        .zip(v)
        .enumerate()
        .map(|(n, (a, b))| a * b * grid.weight(n))
        .sum()
}

/// Hermitian inner product `sum w conj(u) v`.
pub fn inner(grid: &Grid, u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter()
        .zip(v)
        .enumerate()
        .map(|(n, (a, b))| a.conj() * b * grid.weight(n))
        .sum()
}
