//! Channel geometry and collocation-grid fields.
//!
//! The domain is `[0, L_x) x [a, b]`. The stream-wise direction is periodic and
//! sampled at `N_x` equispaced points without the duplicated end point; the
//! wall-normal direction is sampled at `N_y` equispaced points including both
//! walls. Fields are stored x-major: `values[[i, j]]` is the sample at
//! `(x_i, y_j)`.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelGrid {
    pub lx: f64,
    pub a: f64,
    pub b: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ChannelGrid {
    pub fn new(lx: f64, a: f64, b: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx.is_finite() && lx > 0.0) {
            return Err(Error::InvalidGrid(format!("L_x must be positive, got {lx}")));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidGrid(format!("walls must satisfy a < b, got a = {a}, b = {b}")));
        }
        if nx < 2 || nx % 2 != 0 {
            return Err(Error::InvalidGrid(format!("N_x must be a positive even integer, got {nx}")));
        }
        if ny < 3 {
            return Err(Error::InvalidGrid(format!("N_y must be at least 3, got {ny}")));
        }
        Ok(Self { lx, a, b, nx, ny })
    }

    /// `[0, 2pi] x [0, pi]`, the reference channel used throughout the tests.
    pub fn reference(nx: usize, ny: usize) -> Result<Self> {
        Self::new(2.0 * PI, 0.0, PI, nx, ny)
    }

    /// Fundamental stream-wise wavenumber `2 pi / L_x`.
    pub fn alpha(&self) -> f64 {
        2.0 * PI / self.lx
    }

    pub fn height(&self) -> f64 {
        self.b - self.a
    }

    pub fn area(&self) -> f64 {
        self.lx * self.height()
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.height() / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        if j == self.ny - 1 {
            self.b
        } else {
            self.a + j as f64 * self.hy()
        }
    }

    /// Number of stored non-negative x-modes, `N_x/2 + 1`.
    pub fn n_modes(&self) -> usize {
        self.nx / 2 + 1
    }

    pub fn nyquist(&self) -> usize {
        self.nx / 2
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn ensure_same(&self, other: &ChannelGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: ChannelGrid,
    values: Array2<f64>,
}

impl ScalarField {
    pub fn new(grid: ChannelGrid, values: Array2<f64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::ShapeMismatch { expected: grid.shape(), got: values.dim() });
        }
        if let Some(((i, j), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(i, j));
        }
        Ok(Self { grid, values })
    }

    /// Skips the finiteness scan; used by kernels whose inputs were already validated.
    pub(crate) fn from_parts(grid: ChannelGrid, values: Array2<f64>) -> Self {
        debug_assert_eq!(values.dim(), grid.shape());
        Self { grid, values }
    }

    pub fn zeros(grid: ChannelGrid) -> Self {
        Self { grid, values: Array2::zeros(grid.shape()) }
    }

    pub fn constant(grid: ChannelGrid, c: f64) -> Self {
        Self { grid, values: Array2::from_elem(grid.shape(), c) }
    }

    /// Samples `f(x, y)` at every collocation node.
    pub fn from_fn(grid: ChannelGrid, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        let values = Array2::from_shape_fn(grid.shape(), |(i, j)| f(grid.x(i), grid.y(j)));
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            Some(((i, j), _)) => Err(Error::NonFinite(i, j)),
            None => Ok(()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { grid: self.grid, values: &self.values * c }
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self { grid: self.grid, values: &self.values + &other.values })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self { grid: self.grid, values: &self.values - &other.values })
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self { grid: self.grid, values: &self.values * &other.values })
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &ScalarField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mut values = self.values.clone();
        Zip::from(&mut values).and(&other.values).for_each(|s, &o| *s += c * o);
        Ok(Self { grid: self.grid, values })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.mapv(f) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: ChannelGrid,
    pub u: ScalarField,
    pub v: ScalarField,
}

impl VectorField {
    pub fn new(u: ScalarField, v: ScalarField) -> Result<Self> {
        u.grid().ensure_same(v.grid())?;
        Ok(Self { grid: *u.grid(), u, v })
    }

    pub fn zeros(grid: ChannelGrid) -> Self {
        Self { grid, u: ScalarField::zeros(grid), v: ScalarField::zeros(grid) }
    }

    pub fn from_fn(grid: ChannelGrid, f: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let u = ScalarField::from_fn(grid, |x, y| f(x, y).0)?;
        let v = ScalarField::from_fn(grid, |x, y| f(x, y).1)?;
        Ok(Self { grid, u, v })
    }

    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { grid: self.grid, u: self.u.scale(c), v: self.v.scale(c) }
    }

    pub fn sub(&self, other: &VectorField) -> Result<Self> {
        Ok(Self { grid: self.grid, u: self.u.sub(&other.u)?, v: self.v.sub(&other.v)? })
    }

    pub fn add(&self, other: &VectorField) -> Result<Self> {
        Ok(Self { grid: self.grid, u: self.u.add(&other.u)?, v: self.v.add(&other.v)? })
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// Largest `|u| + |v|` over the grid, with `shift` added to `u`.
    pub fn max_speed(&self, shift: f64) -> f64 {
        Zip::from(self.u.values())
            .and(self.v.values())
            .fold(0.0_f64, |m, &u, &v| m.max((u + shift).abs() + v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(ChannelGrid::new(1.0, 0.0, 1.0, 7, 9).is_err());
        assert!(ChannelGrid::new(1.0, 0.0, 1.0, 0, 9).is_err());
        assert!(ChannelGrid::new(1.0, 0.0, 1.0, 8, 2).is_err());
        assert!(ChannelGrid::new(1.0, 1.0, 1.0, 8, 9).is_err());
        assert!(ChannelGrid::new(-1.0, 0.0, 1.0, 8, 9).is_err());
        assert!(ChannelGrid::new(f64::NAN, 0.0, 1.0, 8, 9).is_err());
    }

    #[test]
    fn spacing_and_wavenumber() {
        let g = ChannelGrid::new(3.0, -1.0, 2.0, 12, 7).unwrap();
        assert!((g.alpha() * g.lx - 2.0 * PI).abs() < 1e-15);
        assert_eq!(g.hy(), 0.5);
        assert_eq!(g.hx(), 0.25);
        assert_eq!(g.y(0), -1.0);
        assert_eq!(g.y(6), 2.0);
        assert_eq!(g.n_modes(), 7);
    }

    #[test]
    fn non_finite_values_rejected() {
        let g = ChannelGrid::reference(4, 3).unwrap();
        let mut vals = Array2::zeros((4, 3));
        vals[[2, 1]] = f64::INFINITY;
        assert_eq!(ScalarField::new(g, vals), Err(Error::NonFinite(2, 1)));
        assert!(ScalarField::new(g, Array2::zeros((3, 4))).is_err());
    }

    #[test]
    fn mismatched_grids_are_errors() {
        let g1 = ChannelGrid::reference(4, 5).unwrap();
        let g2 = ChannelGrid::reference(4, 7).unwrap();
        let f = ScalarField::zeros(g1);
        let h = ScalarField::zeros(g2);
        assert_eq!(f.add(&h), Err(Error::GridMismatch));
        assert!(VectorField::new(f, h).is_err());
    }
}
