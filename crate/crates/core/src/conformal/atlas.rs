//! Full-sphere conformal metrics: a north/south chart pair and point evaluation.

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;

use super::chart::Chart;
use super::curvature::{curvature, CurvatureField};
use super::field::ConformalMetricField;
use crate::error::Result;
use crate::hyp::ChartKind;

/// A conformal metric `e^{2u} c₁` on the whole sphere, evaluated pointwise.
pub trait SphereDensity: Sync {
    /// `u` at a unit vector.
    fn log_density(&self, v: &Vector3<f64>) -> f64;

    /// Curvature from a five-point stencil in the better-conditioned chart.
    fn curvature_at(&self, v: &Vector3<f64>) -> f64 {
        let kind = if v.z <= 0.0 { ChartKind::North } else { ChartKind::South };
        let z = kind.from_sphere(v);
        let h = 1e-3;
        let u = |w: Complex64| self.log_density(&kind.to_sphere(w));
        let c = u(z);
        let lap = (u(z + h) + u(z - h) + u(z + Complex64::new(0.0, h)) + u(z - Complex64::new(0.0, h)) - 4.0 * c) / (h * h);
        let lam = ChartKind::round_log_density(z);
        (-2.0 * c).exp() * (1.0 - (-2.0 * lam).exp() * lap)
    }
}

/// Closure-backed density.
pub struct FnDensity<F>(pub F);

impl<F: Fn(&Vector3<f64>) -> f64 + Sync> SphereDensity for FnDensity<F> {
    fn log_density(&self, v: &Vector3<f64>) -> f64 {
        (self.0)(v)
    }
}

/// Summation order for grid reductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Fixed left-to-right order; bitwise reproducible.
    #[default]
    Sequential,
    /// Work-stealing parallel sum.
    Parallel,
}

pub(crate) fn reduce(values: Vec<f64>, mode: Reduction) -> f64 {
    match mode {
        Reduction::Sequential => values.iter().sum(),
        Reduction::Parallel => values.par_iter().sum(),
    }
}

/// Two-chart atlas: the north and south charts over `[-R, R]²` each.
#[derive(Debug, Clone)]
pub struct SphereAtlas {
    pub north: ConformalMetricField,
    pub south: ConformalMetricField,
}

/// Partition-of-unity weight for the north chart; the south chart gets `1 - χ`.
///
/// With `w = 1/z`, `χ(|z|) + χ(|w|) = 1`.
fn partition_weight(r: f64) -> f64 {
    1.0 / (1.0 + r.powi(8))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussBonnetSummary {
    pub total_curvature: f64,
    pub target: f64,
    pub relative_error: f64,
    pub area: f64,
}

impl SphereAtlas {
    pub fn from_density(density: &dyn SphereDensity, resolution: usize, half_extent: f64) -> Result<Self> {
        let north_chart = Chart::square(ChartKind::North, resolution, half_extent)?;
        let south_chart = Chart::square(ChartKind::South, resolution, half_extent)?;
        let north = ConformalMetricField::full(north_chart, |z| density.log_density(&ChartKind::North.to_sphere(z)))?;
        let south = ConformalMetricField::full(south_chart, |z| density.log_density(&ChartKind::South.to_sphere(z)))?;
        Ok(SphereAtlas { north, south })
    }

    pub fn curvature(&self) -> (CurvatureField, CurvatureField) {
        (curvature(&self.north), curvature(&self.south))
    }

    /// `∫ K dA` over the sphere, blending the charts with a smooth partition of unity.
    pub fn gauss_bonnet(&self, mode: Reduction) -> GaussBonnetSummary {
        let (kn, ks) = self.curvature();
        let mut terms = Vec::new();
        let mut areas = Vec::new();
        for (field, k) in [(&self.north, &kn), (&self.south, &ks)] {
            let (nx, ny) = (field.chart.nx, field.chart.ny);
            let cell = field.chart.hx() * field.chart.hy();
            for j in 0..ny {
                for i in 0..nx {
                    if !*k.valid.get(i, j) {
                        continue;
                    }
                    let z = field.chart.point(i, j);
                    let dens = (2.0 * (field.u.get(i, j) + ChartKind::round_log_density(z))).exp();
                    let w = partition_weight(z.norm()) * cell;
                    terms.push(k.k.get(i, j) * dens * w);
                    areas.push(dens * w);
                }
            }
        }
        let total = reduce(terms, mode);
        let area = reduce(areas, mode);
        let target = 4.0 * std::f64::consts::PI;
        GaussBonnetSummary { total_curvature: total, target, relative_error: (total - target).abs() / target, area }
    }

    /// Largest curvature disagreement between the charts on `0.8 ≤ |z| ≤ 1.25`.
    pub fn overlap_discrepancy(&self) -> f64 {
        let (kn, ks) = self.curvature();
        let mut worst: f64 = 0.0;
        let n = &self.north;
        for j in 0..n.chart.ny {
            for i in 0..n.chart.nx {
                let z = n.chart.point(i, j);
                let r = z.norm();
                if !(0.8..=1.25).contains(&r) || !*kn.valid.get(i, j) {
                    continue;
                }
                let w = 1.0 / z;
                if let Some(other) = bilinear(&self.south, &ks, w) {
                    worst = worst.max((kn.k.get(i, j) - other).abs());
                }
            }
        }
        worst
    }
}

/// Bilinear interpolation of a masked grid at a chart point.
pub(crate) fn bilinear(field: &ConformalMetricField, k: &CurvatureField, z: Complex64) -> Option<f64> {
    let (fx, fy) = field.chart.locate(z)?;
    let (i0, j0) = (fx.floor() as usize, fy.floor() as usize);
    let (i1, j1) = ((i0 + 1).min(field.chart.nx - 1), (j0 + 1).min(field.chart.ny - 1));
    let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
    for (i, j) in [(i0, j0), (i1, j0), (i0, j1), (i1, j1)] {
        if !*k.valid.get(i, j) {
            return None;
        }
    }
    let g = |i, j| *k.k.get(i, j);
    Some(
        (1.0 - tx) * (1.0 - ty) * g(i0, j0) + tx * (1.0 - ty) * g(i1, j0) + (1.0 - tx) * ty * g(i0, j1) + tx * ty * g(i1, j1),
    )
}

impl SphereDensity for SphereAtlas {
    /// Bilinear interpolation of `u` in the chart where the point has `|z| ≤ 1`.
    fn log_density(&self, v: &Vector3<f64>) -> f64 {
        let field = if v.z <= 0.0 { &self.north } else { &self.south };
        let z = field.chart.kind.from_sphere(v);
        let Some((fx, fy)) = field.chart.locate(z) else {
            return f64::NAN;
        };
        let (i0, j0) = (fx.floor() as usize, fy.floor() as usize);
        let (i1, j1) = ((i0 + 1).min(field.chart.nx - 1), (j0 + 1).min(field.chart.ny - 1));
        let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
        let g = |i, j| *field.u.get(i, j);
        (1.0 - tx) * (1.0 - ty) * g(i0, j0) + tx * (1.0 - ty) * g(i1, j0) + (1.0 - tx) * ty * g(i0, j1) + tx * ty * g(i1, j1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_sphere_total_curvature() {
        let atlas = SphereAtlas::from_density(&FnDensity(|_: &Vector3<f64>| 0.0), 129, 3.0).unwrap();
        let gb = atlas.gauss_bonnet(Reduction::Sequential);
        assert!(gb.relative_error < 0.01, "{gb:?}");
        assert!((gb.area - 4.0 * std::f64::consts::PI).abs() < 0.05 * gb.area);
    }

    #[test]
    fn perturbed_sphere_total_curvature_and_overlap() {
        let d = FnDensity(|v: &Vector3<f64>| 0.3 * v.x * v.z + 0.2 * v.y);
        let atlas = SphereAtlas::from_density(&d, 161, 3.0).unwrap();
        let gb = atlas.gauss_bonnet(Reduction::Sequential);
        assert!(gb.relative_error < 0.01, "{gb:?}");
        assert!(atlas.overlap_discrepancy() < 1e-2);
        let par = atlas.gauss_bonnet(Reduction::Parallel);
        assert!((par.total_curvature - gb.total_curvature).abs() < 1e-9);
    }

    #[test]
    fn pointwise_curvature_of_shifted_round_metric() {
        let d = FnDensity(|_: &Vector3<f64>| 0.5);
        let k = d.curvature_at(&Vector3::new(0.0, 0.6, 0.8));
        assert!((k - (-1.0f64).exp()).abs() < 1e-6);
    }
}
