use rayon::prelude::*;

use super::chart::Grid;
use super::field::{ConformalDomain, ConformalMetricField, MaskedGrid, MetricKind};
use crate::error::{Error, Result};
use crate::hyp::ChartKind;

/// Gaussian curvature of a conformal field, `K = e^{-2u} (Δ_{c₁} u + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub k: Grid<f64>,
    pub valid: Grid<bool>,
}

impl CurvatureField {
    pub fn as_masked(&self) -> MaskedGrid {
        MaskedGrid { values: self.k.clone(), valid: self.valid.clone() }
    }
}

fn stencil_ok(field: &ConformalMetricField, i: usize, j: usize) -> bool {
    let (nx, ny) = (field.chart.nx, field.chart.ny);
    if i == 0 || j == 0 || i + 1 >= nx || j + 1 >= ny {
        return false;
    }
    let m = &field.mask;
    *m.get(i, j) && *m.get(i - 1, j) && *m.get(i + 1, j) && *m.get(i, j - 1) && *m.get(i, j + 1)
}

/// Five-point Laplacian in chart coordinates (analyst's sign).
fn chart_laplacian(field: &ConformalMetricField, i: usize, j: usize) -> f64 {
    let u = &field.u;
    let (hx, hy) = (field.chart.hx(), field.chart.hy());
    let c = *u.get(i, j);
    (u.get(i + 1, j) - 2.0 * c + u.get(i - 1, j)) / (hx * hx)
        + (u.get(i, j + 1) - 2.0 * c + u.get(i, j - 1)) / (hy * hy)
}

/// Curvature by finite differences; cells without a full stencil are invalid.
///
/// The round metric is `e^{2λ}|dz|²` with `λ = log(2/(1+|z|²))`, so with the
/// positive Laplacian `Δ_{c₁} = -e^{-2λ} ∇²` the curvature becomes
/// `e^{-2u} (1 - e^{-2λ} ∇²u)`.
pub fn curvature(field: &ConformalMetricField) -> CurvatureField {
    let (nx, ny) = (field.chart.nx, field.chart.ny);
    let rows: Vec<Vec<(f64, bool)>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            (0..nx)
                .map(|i| {
                    if !stencil_ok(field, i, j) {
                        return (f64::NAN, false);
                    }
                    let lam = field.chart_log_factor(i, j);
                    let u = *field.u.get(i, j);
                    let k = (-2.0 * u).exp() * (1.0 - (-2.0 * lam).exp() * chart_laplacian(field, i, j));
                    (k, k.is_finite())
                })
                .collect()
        })
        .collect();
    CurvatureField {
        k: Grid::from_fn(nx, ny, |i, j| rows[j][i].0),
        valid: Grid::from_fn(nx, ny, |i, j| rows[j][i].1),
    }
}

/// Euclidean chart gradient of `u` by centered differences, if the stencil is inside the mask.
pub(crate) fn chart_gradient(values: &Grid<f64>, mask: &Grid<bool>, hx: f64, hy: f64, i: usize, j: usize) -> Option<(f64, f64)> {
    let (nx, ny) = (values.nx(), values.ny());
    if i == 0 || j == 0 || i + 1 >= nx || j + 1 >= ny {
        return None;
    }
    let ok = *mask.get(i, j) && *mask.get(i - 1, j) && *mask.get(i + 1, j) && *mask.get(i, j - 1) && *mask.get(i, j + 1);
    if !ok {
        return None;
    }
    let gx = (values.get(i + 1, j) - values.get(i - 1, j)) / (2.0 * hx);
    let gy = (values.get(i, j + 1) - values.get(i, j - 1)) / (2.0 * hy);
    Some((gx, gy))
}

/// `‖du‖` measured in the requested metric.
///
/// Uses `‖du‖_{c₁} = e^{-λ}|∇u|` and the rescaling rule `‖du‖_{e^{2a}g} = e^{-a}‖du‖_g`.
pub fn gradient_norm(
    field: &ConformalMetricField,
    metric: MetricKind,
    domain: Option<&dyn ConformalDomain>,
) -> Result<MaskedGrid> {
    let needs_domain = matches!(metric, MetricKind::Hyperbolic | MetricKind::Thurston);
    if needs_domain && domain.is_none() {
        return Err(Error::InvalidArgument(format!(
            "{metric:?} gradient norm requires an attached domain"
        )));
    }
    let (nx, ny) = (field.chart.nx, field.chart.ny);
    let (hx, hy) = (field.chart.hx(), field.chart.hy());
    let kind = field.chart.kind;
    let rows: Vec<Vec<(f64, bool)>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            (0..nx)
                .map(|i| {
                    let Some((gx, gy)) = chart_gradient(&field.u, &field.mask, hx, hy, i, j) else {
                        return (f64::NAN, false);
                    };
                    let z = field.chart.point(i, j);
                    let round = (-ChartKind::round_log_density(z)).exp() * gx.hypot(gy);
                    let a = match metric {
                        MetricKind::Round => Ok(0.0),
                        MetricKind::Field => Ok(*field.u.get(i, j)),
                        MetricKind::Hyperbolic => domain.unwrap().hyperbolic_log_density(kind, z),
                        MetricKind::Thurston => domain.unwrap().thurston_log_density(kind, z),
                    };
                    match a {
                        Ok(a) => ((-a).exp() * round, true),
                        Err(_) => (f64::NAN, false),
                    }
                })
                .collect()
        })
        .collect();
    Ok(MaskedGrid {
        values: Grid::from_fn(nx, ny, |i, j| rows[j][i].0),
        valid: Grid::from_fn(nx, ny, |i, j| rows[j][i].1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::chart::Chart;

    #[test]
    fn round_metric_has_unit_curvature() {
        let chart = Chart::square(ChartKind::North, 33, 1.0).unwrap();
        let f = ConformalMetricField::full(chart, |_| 0.0).unwrap();
        let k = curvature(&f);
        for v in k.as_masked().valid_values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!(!*k.valid.get(0, 5));
    }

    #[test]
    fn constant_shift_curvature() {
        let chart = Chart::square(ChartKind::South, 17, 0.5).unwrap();
        let f = ConformalMetricField::full(chart, |_| 1.0).unwrap();
        let k = curvature(&f);
        for v in k.as_masked().valid_values() {
            assert!((v - (-2.0f64).exp()).abs() < 1e-12);
            assert!((v - 0.135_335_283_236_612_7).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_rescaling_identity() {
        let chart = Chart::square(ChartKind::North, 41, 0.8).unwrap();
        let f = ConformalMetricField::full(chart, |z| 0.3 * z.re - 0.2 * z.im * z.im).unwrap();
        let round = gradient_norm(&f, MetricKind::Round, None).unwrap();
        let own = gradient_norm(&f, MetricKind::Field, None).unwrap();
        for j in 0..41 {
            for i in 0..41 {
                if *round.valid.get(i, j) {
                    let lhs = round.values.get(i, j);
                    let rhs = f.u.get(i, j).exp() * own.values.get(i, j);
                    assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs().max(1.0));
                }
            }
        }
        assert!(gradient_norm(&f, MetricKind::Thurston, None).is_err());
        let c = ConformalMetricField::full(chart, |_| 2.0).unwrap();
        assert!(gradient_norm(&c, MetricKind::Round, None).unwrap().valid_values().all(|v| v == 0.0));
    }

    #[test]
    fn masked_cells_are_excluded() {
        let chart = Chart::square(ChartKind::North, 21, 1.0).unwrap();
        let f = ConformalMetricField::from_fn(chart, |z| (z.norm() < 0.5).then_some(0.0)).unwrap();
        let k = curvature(&f);
        assert!(!*k.valid.get(0, 0));
        assert!(*k.valid.get(10, 10));
        assert!(k.valid.count() < f.mask.count());
    }
}
