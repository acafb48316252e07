use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::function::CutoffFunction;
use crate::conformal::{curvature, Chart, ConformalMetricField, CurvatureField, Extent, Grid};
use crate::error::{Error, Result};
use crate::hyp::ChartKind;

/// The metrics `h_n = e^{2 φ_n(u)} c₁` on `U` and `e^{2(n+1)} c₁` on the complement.
#[derive(Debug, Clone)]
pub struct ApproxMetricSequence {
    pub base: ConformalMetricField,
    pub cutoff: CutoffFunction,
}

#[derive(Debug, Clone)]
pub struct ApproxMetric {
    pub n: i32,
    /// Defined on every chart cell.
    pub field: ConformalMetricField,
    /// Cells of `U` next to the complement where `u < n + 2`, so the glued metric may be rough.
    pub collar_flags: Grid<bool>,
    pub flagged: usize,
}

/// Level-set decomposition of the chart for a given `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionDecomposition {
    pub n: i32,
    pub u_le_n: Grid<bool>,
    pub u_between: Grid<bool>,
    pub u_le_n1: Grid<bool>,
    /// `u > n + 1` together with the complement of `U`.
    pub u_gt_n1: Grid<bool>,
}

impl RegionDecomposition {
    pub fn counts(&self) -> [usize; 4] {
        [self.u_le_n.count(), self.u_between.count(), self.u_le_n1.count(), self.u_gt_n1.count()]
    }
}

pub fn build_hn(base: &ConformalMetricField, cutoff: &CutoffFunction, n: i32) -> Result<ApproxMetric> {
    if n < 0 {
        return Err(Error::InvalidArgument(format!("approximation index {n} must be non-negative")));
    }
    let (nx, ny) = (base.chart.nx, base.chart.ny);
    let top = n as f64 + 1.0;
    let u = Grid::from_fn(nx, ny, |i, j| if *base.mask.get(i, j) { cutoff.phi_n(n, *base.u.get(i, j)) } else { top });
    let field = ConformalMetricField::new(base.chart, u, Grid::filled(nx, ny, true), base.base_point)?;
    let collar_flags = Grid::from_fn(nx, ny, |i, j| {
        if !*base.mask.get(i, j) || *base.u.get(i, j) >= n as f64 + 2.0 {
            return false;
        }
        let (i0, i1) = (i.saturating_sub(1), (i + 1).min(nx - 1));
        let (j0, j1) = (j.saturating_sub(1), (j + 1).min(ny - 1));
        (j0..=j1).any(|jj| (i0..=i1).any(|ii| !*base.mask.get(ii, jj)))
    });
    let flagged = collar_flags.count();
    Ok(ApproxMetric { n, field, collar_flags, flagged })
}

impl ApproxMetricSequence {
    pub fn new(base: ConformalMetricField, cutoff: CutoffFunction) -> Self {
        ApproxMetricSequence { base, cutoff }
    }

    pub fn metric(&self, n: i32) -> Result<ApproxMetric> {
        build_hn(&self.base, &self.cutoff, n)
    }

    pub fn regions(&self, n: i32) -> RegionDecomposition {
        region_decomposition(&self.base, n)
    }

    /// Cells where `h_n` already agrees exactly with `h`.
    pub fn stationary_mask(&self, n: i32) -> Grid<bool> {
        let (nx, ny) = (self.base.chart.nx, self.base.chart.ny);
        Grid::from_fn(nx, ny, |i, j| {
            *self.base.mask.get(i, j) && {
                let u = *self.base.u.get(i, j);
                self.cutoff.phi_n(n, u) == u
            }
        })
    }
}

pub fn region_decomposition(base: &ConformalMetricField, n: i32) -> RegionDecomposition {
    let (nx, ny) = (base.chart.nx, base.chart.ny);
    let nf = n as f64;
    let cell = |i: usize, j: usize| base.mask.get(i, j).then(|| *base.u.get(i, j));
    RegionDecomposition {
        n,
        u_le_n: Grid::from_fn(nx, ny, |i, j| cell(i, j).is_some_and(|u| u <= nf)),
        u_between: Grid::from_fn(nx, ny, |i, j| cell(i, j).is_some_and(|u| u > nf && u <= nf + 1.0)),
        u_le_n1: Grid::from_fn(nx, ny, |i, j| cell(i, j).is_some_and(|u| u <= nf + 1.0)),
        u_gt_n1: Grid::from_fn(nx, ny, |i, j| cell(i, j).is_none_or(|u| u > nf + 1.0)),
    }
}

/// Upper curvature bound of `h_n` on the transition region, given `‖du‖_h ≤ c`.
///
/// Supremum over the knots in `[0, 2]` of `(1 - φ')e^{-2φ} + e^{2(x-φ)}(-φ'')c²`;
/// the first curvature term is non-positive and is dropped.
pub fn kmax_estimate(eps: f64, c: f64, cutoff: &CutoffFunction) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("curvature pinch {eps} outside (0, 1)")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("gradient bound {c} must be finite and non-negative")));
    }
    let mut best = f64::NEG_INFINITY;
    for k in 0..cutoff.x.len() {
        let x = cutoff.x[k];
        if !(0.0..=2.0).contains(&x) {
            continue;
        }
        let (p, d, dd) = (cutoff.phi[k], cutoff.dphi[k], cutoff.ddphi[k]);
        let v = (1.0 - d) * (-2.0 * p).exp() + (2.0 * (x - p)).exp() * (-dd) * c * c;
        best = best.max(v);
    }
    Ok(best)
}

/// Supremum of `‖du‖_h` over masked cells with `lo < u < hi` (centered differences).
pub fn gradient_bound(base: &ConformalMetricField, lo: f64, hi: f64) -> f64 {
    let (nx, ny) = (base.chart.nx, base.chart.ny);
    let (hx, hy) = (base.chart.hx(), base.chart.hy());
    (1..ny.saturating_sub(1))
        .into_par_iter()
        .map(|j| {
            let mut m: f64 = 0.0;
            for i in 1..nx - 1 {
                let ok = [(i, j), (i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)].iter().all(|&(a, b)| *base.mask.get(a, b));
                let u = *base.u.get(i, j);
                if !ok || !(u > lo && u < hi) {
                    continue;
                }
                let gx = (base.u.get(i + 1, j) - base.u.get(i - 1, j)) / (2.0 * hx);
                let gy = (base.u.get(i, j + 1) - base.u.get(i, j - 1)) / (2.0 * hy);
                let lam = base.chart_log_factor(i, j);
                m = m.max((-u - lam).exp() * gx.hypot(gy));
            }
            m
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegionStats {
    pub cells: usize,
    pub min: f64,
    pub max: f64,
    /// Largest deviation from the expected value, where one is defined.
    pub max_deviation: f64,
}

impl RegionStats {
    fn empty() -> Self {
        RegionStats { cells: 0, min: f64::INFINITY, max: f64::NEG_INFINITY, max_deviation: 0.0 }
    }

    fn push(&mut self, k: f64, dev: f64) {
        self.cells += 1;
        self.min = self.min.min(k);
        self.max = self.max.max(k);
        self.max_deviation = self.max_deviation.max(dev);
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReportOptions {
    /// Curvature pinch: `K ∈ [-1 + eps, -eps]` on `U`.
    pub eps: f64,
    /// Bound on `‖du‖_h` over the transition band.
    pub gradient_bound: f64,
    /// Expected curvature on `u ≤ n`; the finite-difference curvature of `h` when absent.
    pub reference_k: Option<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    pub n: i32,
    pub k_max: f64,
    pub options: ReportOptions,
    /// `u ≤ n`: expected `K_n = K`.
    pub identity: RegionStats,
    /// `n < u < n + 2`: expected `K_n ∈ [-1 + eps, k_max]`.
    pub transition: RegionStats,
    /// `u ≥ n + 2` and the complement: expected `K_n = e^{-2(n+1)}`.
    pub constant: RegionStats,
    pub first_term_min: f64,
    pub first_term_max: f64,
    pub collar_flags: usize,
    pub holds: bool,
}

pub fn curvature_report(seq: &ApproxMetricSequence, n: i32, opts: ReportOptions) -> Result<CurvatureReport> {
    let hn = seq.metric(n)?;
    let kn = curvature(&hn.field);
    let kb = curvature(&seq.base);
    curvature_report_with(seq, &hn, &kn, &kb, opts)
}

/// Same as [`curvature_report`] with precomputed curvature fields.
pub fn curvature_report_with(
    seq: &ApproxMetricSequence,
    hn: &ApproxMetric,
    kn: &CurvatureField,
    kb: &CurvatureField,
    opts: ReportOptions,
) -> Result<CurvatureReport> {
    let n = hn.n;
    let k_max = kmax_estimate(opts.eps, opts.gradient_bound, &seq.cutoff)?;
    let nf = n as f64;
    let top = (-2.0 * (nf + 1.0)).exp();
    let (mut identity, mut transition, mut constant) = (RegionStats::empty(), RegionStats::empty(), RegionStats::empty());
    let (mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let base = &seq.base;
    let lower = -1.0 + opts.eps;
    for j in 0..base.chart.ny {
        for i in 0..base.chart.nx {
            if !*kn.valid.get(i, j) {
                continue;
            }
            let k = *kn.k.get(i, j);
            if !*base.mask.get(i, j) {
                constant.push(k, (k - top).abs());
                continue;
            }
            let u = *base.u.get(i, j);
            if u <= nf {
                let reference = match opts.reference_k {
                    Some(r) => r,
                    None if *kb.valid.get(i, j) => *kb.k.get(i, j),
                    None => continue,
                };
                identity.push(k, (k - reference).abs());
            } else if u < nf + 2.0 {
                let dev = (lower - k).max(k - k_max).max(0.0);
                transition.push(k, dev);
                let kbase = opts.reference_k.or_else(|| kb.valid.get(i, j).then(|| *kb.k.get(i, j)));
                if let Some(kbase) = kbase {
                    let (p, d, _) = seq.cutoff.phi_n3(n, u);
                    let first = d * (2.0 * (u - p)).exp() * kbase;
                    tmin = tmin.min(first);
                    tmax = tmax.max(first);
                }
            } else {
                constant.push(k, (k - top).abs());
            }
        }
    }
    let tol = opts.tolerance;
    let first_ok = tmin > tmax || (tmin >= lower - tol && tmax <= tol);
    let holds = identity.max_deviation <= tol
        && transition.max_deviation <= tol
        && constant.max_deviation <= tol
        && first_ok
        && hn.flagged == 0;
    Ok(CurvatureReport {
        n,
        k_max,
        options: opts,
        identity,
        transition,
        constant,
        first_term_min: tmin,
        first_term_max: tmax,
        collar_flags: hn.flagged,
        holds,
    })
}

/// `log cosh 1 + log((1+ρ²)/(1-ρ²))` on the unit disk: curvature `-sech² 1` and infinite boundary distance.
pub fn disk_datum_log_density(z: Complex64) -> Option<f64> {
    let r2 = z.norm_sqr();
    (r2 < 1.0).then(|| 1f64.cosh().ln() + ((1.0 + r2) / (1.0 - r2)).ln())
}

pub fn disk_datum(chart: Chart) -> Result<ConformalMetricField> {
    ConformalMetricField::from_fn(chart, disk_datum_log_density)
}

/// Chart resolving the transition band `n < u < n + 2` of the disk datum.
///
/// For `n ≥ 1` the band sits within `cosh(1) e^{-n}` of the boundary point `1`,
/// so the window zooms onto that point; for `n = 0` it is the whole disk.
pub fn disk_datum_window(n: i32, resolution: usize) -> Result<Chart> {
    if n <= 0 {
        return Chart::square(ChartKind::North, resolution, 1.1);
    }
    let s = 1f64.cosh() * (-(n as f64)).exp();
    let extent = Extent { x0: 1.0 - 2.0 * s, x1: 1.0 + 0.5 * s, y0: -1.25 * s, y1: 1.25 * s };
    Chart::new(ChartKind::North, resolution, resolution, extent)
}
