use rayon::prelude::*;
use serde::Serialize;

use super::chart::Grid;
use super::curvature::chart_gradient;
use super::field::{interior_mask, ConformalDomain, ConformalMetricField, COLLAR_CELLS};
use crate::error::{Error, Result};
use crate::hyp::ChartKind;

/// Split `u = v + w + x` with `h = e^{2v} h₋₁`, `h₋₁ = e^{2w} h_Th`, `h_Th = e^{2x} c₁`.
#[derive(Debug, Clone)]
pub struct FactorDecomposition {
    pub v: Grid<f64>,
    pub w: Grid<f64>,
    pub x: Grid<f64>,
    /// Cells where all three factors are defined.
    pub valid: Grid<bool>,
    /// Masked cells the domain could not evaluate.
    pub excluded: usize,
    pub bounds: BoundsReport,
}

/// Empirical sups over the reliable interior (collar removed).
#[derive(Debug, Clone, Default, Serialize)]
pub struct BoundsReport {
    pub sup_abs_v: f64,
    pub sup_abs_w: f64,
    pub min_v: f64,
    pub max_w: f64,
    /// `‖dv‖` measured in `h₋₁`.
    pub sup_dv_hyperbolic: f64,
    /// `‖dw‖` measured in `h₋₁`.
    pub sup_dw_hyperbolic: f64,
    /// `‖dx‖` measured in `h_Th`.
    pub sup_dx_thurston: f64,
    /// `‖du‖` measured in `h`.
    pub sup_du_field: f64,
    pub cells: usize,
}

impl BoundsReport {
    /// Sign pattern `v ≥ 0`, `w ≤ 0` up to `tol`.
    pub fn signs_hold(&self, tol: f64) -> bool {
        self.min_v >= -tol && self.max_w <= tol
    }
}

pub fn factor_decomposition(field: &ConformalMetricField, domain: &dyn ConformalDomain) -> Result<FactorDecomposition> {
    let chart = field.chart;
    let (nx, ny) = (chart.nx, chart.ny);
    let kind = chart.kind;
    let rows: Vec<Vec<Option<(f64, f64)>>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            (0..nx)
                .map(|i| {
                    if !*field.mask.get(i, j) {
                        return None;
                    }
                    let z = chart.point(i, j);
                    let a = domain.hyperbolic_log_density(kind, z).ok()?;
                    let b = domain.thurston_log_density(kind, z).ok()?;
                    Some((a, b))
                })
                .collect()
        })
        .collect();
    let valid = Grid::from_fn(nx, ny, |i, j| rows[j][i].is_some());
    let excluded = field.mask.count() - valid.count();
    if valid.count() == 0 {
        return Err(Error::Degenerate("domain covers no masked cell".into()));
    }
    let hyp = Grid::from_fn(nx, ny, |i, j| rows[j][i].map_or(f64::NAN, |p| p.0));
    let th = Grid::from_fn(nx, ny, |i, j| rows[j][i].map_or(f64::NAN, |p| p.1));
    let v = Grid::from_fn(nx, ny, |i, j| field.u.get(i, j) - hyp.get(i, j));
    let w = Grid::from_fn(nx, ny, |i, j| hyp.get(i, j) - th.get(i, j));
    let x = th.clone();

    let reliable = interior_mask(&valid, COLLAR_CELLS);
    let (hx, hy) = (chart.hx(), chart.hy());
    let mut b = BoundsReport { min_v: f64::INFINITY, max_w: f64::NEG_INFINITY, ..Default::default() };
    for jj in 0..ny {
        for ii in 0..nx {
            if !*reliable.get(ii, jj) {
                continue;
            }
            b.cells += 1;
            let (vv, ww) = (*v.get(ii, jj), *w.get(ii, jj));
            b.sup_abs_v = b.sup_abs_v.max(vv.abs());
            b.sup_abs_w = b.sup_abs_w.max(ww.abs());
            b.min_v = b.min_v.min(vv);
            b.max_w = b.max_w.max(ww);
            let lam = ChartKind::round_log_density(chart.point(ii, jj));
            let norm = |g: &Grid<f64>, a: f64| {
                chart_gradient(g, &valid, hx, hy, ii, jj).map_or(0.0, |(gx, gy)| (-lam - a).exp() * gx.hypot(gy))
            };
            b.sup_dv_hyperbolic = b.sup_dv_hyperbolic.max(norm(&v, *hyp.get(ii, jj)));
            b.sup_dw_hyperbolic = b.sup_dw_hyperbolic.max(norm(&w, *hyp.get(ii, jj)));
            b.sup_dx_thurston = b.sup_dx_thurston.max(norm(&x, *th.get(ii, jj)));
            b.sup_du_field = b.sup_du_field.max(norm(&field.u, *field.u.get(ii, jj)));
        }
    }
    Ok(FactorDecomposition { v, w, x, valid, excluded, bounds: b })
}

impl FactorDecomposition {
    /// Largest `|v + w + x - u|` over valid cells.
    pub fn consistency(&self, field: &ConformalMetricField) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.v.ny() {
            for i in 0..self.v.nx() {
                if *self.valid.get(i, j) {
                    let s = self.v.get(i, j) + self.w.get(i, j) + self.x.get(i, j);
                    worst = worst.max((s - field.u.get(i, j)).abs());
                }
            }
        }
        worst
    }
}
