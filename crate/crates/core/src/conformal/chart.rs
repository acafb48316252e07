use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyp::ChartKind;

/// Row-major node grid, `j` indexes rows (y), `i` columns (x).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    nx: usize,
    ny: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(nx: usize, ny: usize, value: T) -> Self {
        Grid { nx, ny, data: vec![value; nx * ny] }
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                data.push(f(i, j));
            }
        }
        Grid { nx, ny, data }
    }

    pub fn from_vec(nx: usize, ny: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != nx * ny {
            return Err(Error::InvalidArgument(format!(
                "grid data has {} entries, expected {}",
                data.len(),
                nx * ny
            )));
        }
        Ok(Grid { nx, ny, data })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.nx + i] = v;
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Grid<U> {
        Grid { nx: self.nx, ny: self.ny, data: self.data.iter().map(f).collect() }
    }
}

impl Grid<bool> {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }
}

/// Axis-aligned rectangle in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Extent {
    pub fn square(half: f64) -> Self {
        Extent { x0: -half, x1: half, y0: -half, y1: half }
    }
}

/// A node grid over a rectangle of a stereographic chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub kind: ChartKind,
    pub nx: usize,
    pub ny: usize,
    pub extent: Extent,
}

impl Chart {
    pub fn new(kind: ChartKind, nx: usize, ny: usize, extent: Extent) -> Result<Self> {
        if nx < 16 || ny < 16 {
            return Err(Error::InvalidArgument(format!("chart resolution {nx}x{ny} below 16x16")));
        }
        let w = extent.x1 - extent.x0;
        let h = extent.y1 - extent.y0;
        if !(w.is_finite() && h.is_finite()) || w <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidArgument("chart extent must have positive area".into()));
        }
        Ok(Chart { kind, nx, ny, extent })
    }

    pub fn square(kind: ChartKind, n: usize, half: f64) -> Result<Self> {
        Chart::new(kind, n, n, Extent::square(half))
    }

    pub fn hx(&self) -> f64 {
        (self.extent.x1 - self.extent.x0) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.extent.y1 - self.extent.y0) / (self.ny - 1) as f64
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(
            self.extent.x0 + i as f64 * self.hx(),
            self.extent.y0 + j as f64 * self.hy(),
        )
    }

    /// Fractional node coordinates of a chart point, if inside the extent.
    pub fn locate(&self, z: Complex64) -> Option<(f64, f64)> {
        let fx = (z.re - self.extent.x0) / self.hx();
        let fy = (z.im - self.extent.y0) / self.hy();
        let inside = fx >= 0.0 && fy >= 0.0 && fx <= (self.nx - 1) as f64 && fy <= (self.ny - 1) as f64;
        inside.then_some((fx, fy))
    }
}
