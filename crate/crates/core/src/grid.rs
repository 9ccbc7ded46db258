//! Uniform lattices, scalar fields over them, and the centered, one-sided
//! and Laplacian finite differences.
//!
//! Points are stored row-major: the last axis varies fastest. Each axis is
//! either periodic (wraps around, extent `points * h`) or clamped (ghost
//! values are copies of the nearest boundary value, so one-sided
//! differences vanish across the boundary).

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Largest supported spatial (and control) dimension.
pub const MAX_DIM: usize = 3;

/// Short fixed-capacity real vector used for coordinates, gradients and
/// controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vector {
    len: usize,
    data: [f64; MAX_DIM],
}

impl Vector {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_DIM, "vector length {len} exceeds {MAX_DIM}");
        Vector {
            len,
            data: [0.0; MAX_DIM],
        }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut v = Vector::zeros(values.len());
        v.data[..values.len()].copy_from_slice(values);
        v
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.data[..self.len]
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.data[..self.len]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Topology {
    Periodic,
    Clamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Forward,
    Backward,
}

/// Axis-aligned uniform lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spacing: f64,
    points: Vec<usize>,
    origin: Vec<f64>,
    topology: Vec<Topology>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(
        origin: &[f64],
        spacing: f64,
        points_per_axis: &[usize],
        topology: &[Topology],
    ) -> Result<Self> {
        let dim = points_per_axis.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if origin.len() != dim || topology.len() != dim {
            return Err(Error::Config(alloc::format!(
                "grid of dimension {dim} needs {dim} origin coordinates and topologies"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Config(alloc::format!(
                "grid spacing must be positive, got {spacing}"
            )));
        }
        if let Some(n) = points_per_axis.iter().find(|&&n| n < 3) {
            return Err(Error::Config(alloc::format!(
                "every axis needs at least 3 points, got {n}"
            )));
        }
        let mut strides = alloc::vec![1usize; dim];
        for axis in (0..dim - 1).rev() {
            strides[axis] = strides[axis + 1] * points_per_axis[axis + 1];
        }
        let len = points_per_axis.iter().product();
        Ok(Grid {
            spacing,
            points: points_per_axis.to_vec(),
            origin: origin.to_vec(),
            topology: topology.to_vec(),
            strides,
            len,
        })
    }

    /// Periodic grid on `[lower, lower + n h)^d`.
    pub fn periodic(dim: usize, lower: f64, spacing: f64, points: usize) -> Result<Self> {
        Grid::new(
            &alloc::vec![lower; dim],
            spacing,
            &alloc::vec![points; dim],
            &alloc::vec![Topology::Periodic; dim],
        )
    }

    /// Clamped grid whose first and last points sit on `lower` and `upper`.
    pub fn clamped(dim: usize, lower: f64, spacing: f64, points: usize) -> Result<Self> {
        Grid::new(
            &alloc::vec![lower; dim],
            spacing,
            &alloc::vec![points; dim],
            &alloc::vec![Topology::Clamped; dim],
        )
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn points_per_axis(&self) -> &[usize] {
        &self.points
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn topology(&self) -> &[Topology] {
        &self.topology
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Physical length of an axis: `n h` when periodic, `(n-1) h` when clamped.
    pub fn extent(&self, axis: usize) -> f64 {
        match self.topology[axis] {
            Topology::Periodic => self.points[axis] as f64 * self.spacing,
            Topology::Clamped => (self.points[axis] - 1) as f64 * self.spacing,
        }
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len {
            Ok(())
        } else {
            Err(Error::Index {
                index,
                len: self.len,
            })
        }
    }

    pub fn multi_index(&self, index: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        let mut rest = index;
        for (axis, stride) in self.strides.iter().enumerate() {
            out[axis] = rest / stride;
            rest %= stride;
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> Result<usize> {
        let mut index = 0;
        for (axis, (&i, &n)) in multi.iter().zip(&self.points).enumerate() {
            if i >= n {
                return Err(Error::Index { index: i, len: n });
            }
            index += i * self.strides[axis];
        }
        Ok(index)
    }

    pub fn coords(&self, index: usize) -> Vector {
        let multi = self.multi_index(index);
        let mut x = Vector::zeros(self.dim());
        for axis in 0..self.dim() {
            x[axis] = self.origin[axis] + multi[axis] as f64 * self.spacing;
        }
        x
    }

    /// Index of the neighbor one step along `axis` in direction `step` (±1),
    /// wrapping on periodic axes and clamping on clamped ones.
    #[inline]
    pub fn neighbor(&self, index: usize, axis: usize, step: isize) -> usize {
        let n = self.points[axis];
        let stride = self.strides[axis];
        let i = (index / stride) % n;
        let j = match self.topology[axis] {
            Topology::Periodic => (i as isize + step).rem_euclid(n as isize) as usize,
            Topology::Clamped => (i as isize + step).clamp(0, n as isize - 1) as usize,
        };
        index - i * stride + j * stride
    }

    /// Nearest grid point to `x`. Periodic axes wrap; a coordinate more than
    /// half a cell outside a clamped axis is an error carrying that axis.
    pub fn nearest_index(&self, x: &[f64]) -> core::result::Result<usize, usize> {
        let mut index = 0;
        for axis in 0..self.dim() {
            let n = self.points[axis] as isize;
            let rel = (x[axis] - self.origin[axis]) / self.spacing;
            let r = libm::round(rel) as isize;
            let i = match self.topology[axis] {
                Topology::Periodic => r.rem_euclid(n),
                Topology::Clamped => {
                    if r < 0 || r >= n {
                        return Err(axis);
                    }
                    r
                }
            };
            index += i as usize * self.strides[axis];
        }
        Ok(index)
    }

    /// Indices of points at distance at least `collar` from every clamped
    /// boundary. Periodic axes contribute no restriction.
    pub fn interior_indices(&self, collar: f64) -> Vec<usize> {
        let eps = 1e-9 * self.spacing;
        (0..self.len)
            .filter(|&idx| {
                let multi = self.multi_index(idx);
                (0..self.dim()).all(|axis| match self.topology[axis] {
                    Topology::Periodic => true,
                    Topology::Clamped => {
                        let lo = multi[axis] as f64 * self.spacing;
                        let hi = (self.points[axis] - 1 - multi[axis]) as f64 * self.spacing;
                        lo + eps >= collar && hi + eps >= collar
                    }
                })
            })
            .collect()
    }

    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len).map(|i| f(&self.coords(i))).collect()
    }

    #[inline]
    pub(crate) fn central_at(&self, values: &[f64], index: usize) -> Vector {
        let mut g = Vector::zeros(self.dim());
        let inv = 0.5 / self.spacing;
        for axis in 0..self.dim() {
            let up = values[self.neighbor(index, axis, 1)];
            let down = values[self.neighbor(index, axis, -1)];
            g[axis] = (up - down) * inv;
        }
        g
    }

    #[inline]
    pub(crate) fn one_sided_at(&self, values: &[f64], index: usize, side: Side) -> Vector {
        let mut g = Vector::zeros(self.dim());
        let here = values[index];
        for axis in 0..self.dim() {
            g[axis] = match side {
                Side::Forward => (values[self.neighbor(index, axis, 1)] - here) / self.spacing,
                Side::Backward => (here - values[self.neighbor(index, axis, -1)]) / self.spacing,
            };
        }
        g
    }

    #[inline]
    pub(crate) fn laplacian_at(&self, values: &[f64], index: usize) -> f64 {
        let here = values[index];
        let mut sum = 0.0;
        for axis in 0..self.dim() {
            let up = values[self.neighbor(index, axis, 1)];
            let down = values[self.neighbor(index, axis, -1)];
            sum += up - 2.0 * here + down;
        }
        sum / (self.spacing * self.spacing)
    }
}

/// Central, forward and backward differences at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientStencil {
    pub central: Vector,
    pub forward: Vector,
    pub backward: Vector,
}

/// Scalar values over a grid at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(alloc::format!(
                "field has {} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Blowup {
                time,
                index,
                value: values[index],
            });
        }
        Ok(Field { grid, values, time })
    }

    pub fn constant(grid: Arc<Grid>, value: f64, time: f64) -> Self {
        let values = alloc::vec![value; grid.len()];
        Field { grid, values, time }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Arc<Grid>, time: f64, f: F) -> Result<Self> {
        let values = grid.sample(f);
        Field::new(grid, values, time)
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values, time }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// Centered difference `(φ(x+h e_i) − φ(x−h e_i)) / 2h` on every axis.
    pub fn gradient_central(&self, index: usize) -> Result<Vector> {
        self.grid.check_index(index)?;
        Ok(self.grid.central_at(&self.values, index))
    }

    /// Forward (`D^h`) or backward (`D^{-h}`) one-sided difference.
    pub fn gradient_one_sided(&self, index: usize, side: Side) -> Result<Vector> {
        self.grid.check_index(index)?;
        Ok(self.grid.one_sided_at(&self.values, index, side))
    }

    pub fn laplacian(&self, index: usize) -> Result<f64> {
        self.grid.check_index(index)?;
        Ok(self.grid.laplacian_at(&self.values, index))
    }

    pub fn stencil(&self, index: usize) -> Result<GradientStencil> {
        self.grid.check_index(index)?;
        Ok(GradientStencil {
            central: self.grid.central_at(&self.values, index),
            forward: self.grid.one_sided_at(&self.values, index, Side::Forward),
            backward: self.grid.one_sided_at(&self.values, index, Side::Backward),
        })
    }
}
