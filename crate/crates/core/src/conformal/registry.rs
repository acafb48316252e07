//! Closed-form conformal fields with known curvature, used as oracles.
//!
//! Each entry gives `u` on a chart window together with its flat chart
//! Laplacian, so the curvature `e^{-2u}(1 - e^{-2λ}∇²u)` is available to
//! rounding error without finite differences.

use num_complex::Complex64;
use serde::Serialize;

use super::chart::{Chart, Extent};
use super::curvature::curvature;
use super::field::ConformalMetricField;
use crate::error::{Error, Result};
use crate::hyp::ChartKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalyticField {
    Round,
    Shift,
    Dilated,
    PoincareDisk,
    ScaledDisk,
    Flat,
    HalfPlane,
    Linear,
    Bump,
    Wave,
}

pub const REGISTERED_FIELDS: [AnalyticField; 10] = [
    AnalyticField::Round,
    AnalyticField::Shift,
    AnalyticField::Dilated,
    AnalyticField::PoincareDisk,
    AnalyticField::ScaledDisk,
    AnalyticField::Flat,
    AnalyticField::HalfPlane,
    AnalyticField::Linear,
    AnalyticField::Bump,
    AnalyticField::Wave,
];

const SHIFT: f64 = 1.0;
const DILATION: f64 = 2.0;
const DISK_RADIUS: f64 = 0.8;
/// Errors on the disk fields are measured on this fixed concentric disk, so that the
/// compared region does not creep towards the boundary as the grid is refined.
const DISK_EVALUATION_RADIUS: f64 = 0.7;

/// `∇² log(1 + a r²)`.
fn lap_log_quadric(a: f64, r2: f64) -> f64 {
    4.0 * a / (1.0 + a * r2).powi(2)
}

/// Error of the sampled curvature against the closed form on one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldError {
    pub resolution: usize,
    pub max_error: f64,
    pub cells: usize,
}

/// Errors at two resolutions and the observed order between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub field: AnalyticField,
    pub coarse: FieldError,
    pub fine: FieldError,
    /// `None` when the fine error is at rounding level and no order can be read off.
    pub order: Option<f64>,
}

/// Below this the discretization error is indistinguishable from rounding.
pub const ROUNDING_FLOOR: f64 = 1e-11;

impl AnalyticField {
    pub fn name(self) -> &'static str {
        match self {
            AnalyticField::Round => "round",
            AnalyticField::Shift => "shift",
            AnalyticField::Dilated => "dilated",
            AnalyticField::PoincareDisk => "poincare-disk",
            AnalyticField::ScaledDisk => "scaled-disk",
            AnalyticField::Flat => "flat",
            AnalyticField::HalfPlane => "half-plane",
            AnalyticField::Linear => "linear",
            AnalyticField::Bump => "bump",
            AnalyticField::Wave => "wave",
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        REGISTERED_FIELDS
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown analytic field '{name}'")))
    }

    pub fn extent(self) -> Extent {
        match self {
            AnalyticField::PoincareDisk | AnalyticField::ScaledDisk => Extent::square(DISK_RADIUS),
            AnalyticField::HalfPlane => Extent { x0: -0.5, x1: 0.5, y0: 0.5, y1: 1.5 },
            _ => Extent::square(1.0),
        }
    }

    pub fn chart(self, resolution: usize) -> Result<Chart> {
        Chart::new(ChartKind::North, resolution, resolution, self.extent())
    }

    /// `u(z)`, or `None` outside the field's domain.
    pub fn log_density(self, z: Complex64) -> Option<f64> {
        let r2 = z.norm_sqr();
        let (x, y) = (z.re, z.im);
        let round = (1.0 + r2).ln();
        let v = match self {
            AnalyticField::Round => 0.0,
            AnalyticField::Shift => SHIFT,
            AnalyticField::Dilated => 0.5 * DILATION.ln() + round - (1.0 + DILATION * r2).ln(),
            AnalyticField::PoincareDisk | AnalyticField::ScaledDisk => {
                if r2 >= DISK_RADIUS * DISK_RADIUS {
                    return None;
                }
                let scale = if self == AnalyticField::ScaledDisk { 1f64.cosh().ln() } else { 0.0 };
                round - (1.0 - r2).ln() + scale
            }
            AnalyticField::Flat => round - 2f64.ln(),
            AnalyticField::HalfPlane => round - 2f64.ln() - y.ln(),
            AnalyticField::Linear => 0.3 * x,
            AnalyticField::Bump => 0.4 * (-r2).exp(),
            AnalyticField::Wave => 0.2 * (2.0 * x).sin() * y.cos(),
        };
        Some(v)
    }

    /// Flat chart Laplacian `∇²u` in closed form.
    pub fn chart_laplacian(self, z: Complex64) -> f64 {
        let r2 = z.norm_sqr();
        let (x, y) = (z.re, z.im);
        let round = lap_log_quadric(1.0, r2);
        match self {
            AnalyticField::Round | AnalyticField::Shift | AnalyticField::Linear => 0.0,
            AnalyticField::Dilated => round - lap_log_quadric(DILATION, r2),
            AnalyticField::PoincareDisk | AnalyticField::ScaledDisk => round - lap_log_quadric(-1.0, r2),
            AnalyticField::Flat => round,
            AnalyticField::HalfPlane => round + 1.0 / (y * y),
            AnalyticField::Bump => 0.4 * (4.0 * r2 - 4.0) * (-r2).exp(),
            AnalyticField::Wave => -5.0 * 0.2 * (2.0 * x).sin() * y.cos(),
        }
    }

    /// Closed-form curvature at `z`.
    pub fn curvature_at(self, z: Complex64) -> Option<f64> {
        let u = self.log_density(z)?;
        let lam = ChartKind::round_log_density(z);
        Some((-2.0 * u).exp() * (1.0 - (-2.0 * lam).exp() * self.chart_laplacian(z)))
    }

    pub fn sample(self, resolution: usize) -> Result<ConformalMetricField> {
        ConformalMetricField::from_fn(self.chart(resolution)?, |z| self.log_density(z))
    }

    fn evaluated(self, z: Complex64) -> bool {
        match self {
            AnalyticField::PoincareDisk | AnalyticField::ScaledDisk => z.norm() <= DISK_EVALUATION_RADIUS,
            _ => true,
        }
    }

    /// Largest curvature error over the reliable valid cells.
    pub fn error(self, resolution: usize) -> Result<FieldError> {
        let field = self.sample(resolution)?;
        let k = curvature(&field);
        let reliable = field.reliable_mask();
        let mut max_error: f64 = 0.0;
        let mut cells = 0;
        for j in 0..field.chart.ny {
            for i in 0..field.chart.nx {
                if !*k.valid.get(i, j) || !*reliable.get(i, j) {
                    continue;
                }
                let z = field.chart.point(i, j);
                if !self.evaluated(z) {
                    continue;
                }
                let exact = self.curvature_at(z).ok_or(Error::OutsideDomain([z.re, z.im]))?;
                max_error = max_error.max((k.k.get(i, j) - exact).abs());
                cells += 1;
            }
        }
        Ok(FieldError { resolution, max_error, cells })
    }

    pub fn convergence(self, coarse: usize, fine: usize) -> Result<ConvergenceStudy> {
        let c = self.error(coarse)?;
        let f = self.error(fine)?;
        let ratio = (fine - 1) as f64 / (coarse - 1) as f64;
        let order = (f.max_error > ROUNDING_FLOOR).then(|| (c.max_error / f.max_error).ln() / ratio.ln());
        Ok(ConvergenceStudy { field: self, coarse: c, fine: f, order })
    }
}
