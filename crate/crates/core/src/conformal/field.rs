use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chart::{Chart, Grid};
use crate::error::{Error, Result};
use crate::hyp::{ChartKind, HPoint, IdealPoint};

/// Width of the collar along the mask boundary treated as unreliable.
pub const COLLAR_CELLS: usize = 2;

/// Conformal metric `h = e^{2u} c₁` sampled on a chart.
///
/// `c₁` is the visual metric of `base_point`; chart coordinates are
/// stereographic coordinates of the sphere seen from that point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMetricField {
    pub chart: Chart,
    pub u: Grid<f64>,
    pub mask: Grid<bool>,
    pub base_point: HPoint,
}

impl ConformalMetricField {
    pub fn new(chart: Chart, u: Grid<f64>, mask: Grid<bool>, base_point: HPoint) -> Result<Self> {
        if u.nx() != chart.nx || u.ny() != chart.ny || mask.nx() != chart.nx || mask.ny() != chart.ny {
            return Err(Error::InvalidArgument("grid dimensions do not match the chart".into()));
        }
        for j in 0..chart.ny {
            for i in 0..chart.nx {
                if *mask.get(i, j) && !u.get(i, j).is_finite() {
                    return Err(Error::NonFinite("log-density on a masked cell"));
                }
            }
        }
        Ok(ConformalMetricField { chart, u, mask, base_point })
    }

    /// Samples `f(z)`; `None` marks cells outside the domain.
    pub fn from_fn(chart: Chart, f: impl Fn(Complex64) -> Option<f64> + Sync) -> Result<Self> {
        let rows: Vec<Vec<Option<f64>>> = (0..chart.ny)
            .into_par_iter()
            .map(|j| (0..chart.nx).map(|i| f(chart.point(i, j))).collect())
            .collect();
        let u = Grid::from_fn(chart.nx, chart.ny, |i, j| rows[j][i].unwrap_or(f64::NAN));
        let mask = Grid::from_fn(chart.nx, chart.ny, |i, j| rows[j][i].is_some_and(|v| v.is_finite()));
        ConformalMetricField::new(chart, u, mask, HPoint::origin())
    }

    /// Same field with every cell of the chart in the domain.
    pub fn full(chart: Chart, f: impl Fn(Complex64) -> f64 + Sync) -> Result<Self> {
        ConformalMetricField::from_fn(chart, |z| Some(f(z)))
    }

    pub fn ideal_at(&self, i: usize, j: usize) -> IdealPoint {
        IdealPoint::from_chart(self.chart.kind, self.chart.point(i, j))
    }

    /// Log of the c₁ density relative to the Euclidean chart metric.
    pub fn chart_log_factor(&self, i: usize, j: usize) -> f64 {
        ChartKind::round_log_density(self.chart.point(i, j))
    }

    /// Masked cells at least `COLLAR_CELLS` grid steps from any unmasked cell or the chart edge.
    pub fn reliable_mask(&self) -> Grid<bool> {
        interior_mask(&self.mask, COLLAR_CELLS)
    }
}

/// Cells whose `w`-neighbourhood (in the max norm) lies inside `mask`.
pub fn interior_mask(mask: &Grid<bool>, w: usize) -> Grid<bool> {
    let (nx, ny) = (mask.nx(), mask.ny());
    Grid::from_fn(nx, ny, |i, j| {
        if i < w || j < w || i + w >= nx || j + w >= ny {
            return false;
        }
        for jj in j - w..=j + w {
            for ii in i - w..=i + w {
                if !*mask.get(ii, jj) {
                    return false;
                }
            }
        }
        true
    })
}

/// A grid of values with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedGrid {
    pub values: Grid<f64>,
    pub valid: Grid<bool>,
}

impl MaskedGrid {
    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .as_slice()
            .iter()
            .zip(self.valid.as_slice())
            .filter_map(|(v, ok)| ok.then_some(*v))
    }

    pub fn max_valid(&self) -> Option<f64> {
        self.valid_values().fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }

    pub fn min_valid(&self) -> Option<f64> {
        self.valid_values().fold(None, |m, v| Some(m.map_or(v, |m: f64| m.min(v))))
    }
}

/// Comparison metrics available for gradient norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// The field's own metric `h`.
    Field,
    /// The round background metric `c₁`.
    Round,
    /// Complete hyperbolic metric of the attached domain.
    Hyperbolic,
    /// Thurston metric of the attached domain.
    Thurston,
}

/// Log-densities (against `c₁`) of the comparison metrics of a simply connected domain.
pub trait ConformalDomain: Sync {
    fn hyperbolic_log_density(&self, kind: ChartKind, z: Complex64) -> Result<f64>;
    fn thurston_log_density(&self, kind: ChartKind, z: Complex64) -> Result<f64>;
}
