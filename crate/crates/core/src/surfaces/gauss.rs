use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::forms::FundamentalForms;
use crate::error::{Error, Result};
use crate::hyp::IdealPoint;

/// Hyperbolic Gauss map: endpoint of the exterior normal ray at every valid node.
#[derive(Debug, Clone)]
pub struct GaussMapField {
    pub nu: usize,
    pub nv: usize,
    pub ideal: Vec<Option<IdealPoint>>,
    /// Singular-value ratio of `Id + B`, that is `(1+κ₁)/(1+κ₂)`.
    pub dilatation: Vec<Option<f64>>,
    pub max_dilatation: f64,
}

pub fn gauss_map(forms: &FundamentalForms) -> Result<GaussMapField> {
    let mut ideal = Vec::with_capacity(forms.samples.len());
    let mut dil = Vec::with_capacity(forms.samples.len());
    let mut max_d: f64 = 1.0;
    for s in &forms.samples {
        let Some(s) = s else {
            ideal.push(None);
            dil.push(None);
            continue;
        };
        let [k1, k2] = s.kappa;
        if k2 <= -1.0 {
            return Err(Error::NotConvex(k2));
        }
        ideal.push(Some(IdealPoint::from_light_vector(&(s.point + s.normal))?));
        let d = (1.0 + k1) / (1.0 + k2);
        max_d = max_d.max(d);
        dil.push(Some(d));
    }
    Ok(GaussMapField { nu: forms.nu, nv: forms.nv, ideal, dilatation: dil, max_dilatation: max_d })
}

/// Area factor of the distance-`t` normal offset: `cosh²t + cosh t sinh t tr B + sinh²t det B`.
pub fn parallel_area_factor(b: &Matrix2<f64>, t: f64) -> f64 {
    let (c, s) = (t.cosh(), t.sinh());
    c * c + c * s * b.trace() + s * s * b.determinant()
}

/// Principal curvature of the distance-`s` offset of an umbilic surface of curvature `kappa`.
pub fn offset_curvature(kappa: f64, s: f64) -> f64 {
    let t = s.tanh();
    (kappa + t) / (1.0 + kappa * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum WindowMode {
    /// `κᵢ ∈ [k0, 1/k0]`.
    ConvexWindow { k0: f64 },
    /// `κᵢ ∈ [1 - k0, 1 + k0]`; statistics of `|κᵢ - 1|` where `|K| ≤ k_bound`.
    NearUmbilic { k0: f64, k_bound: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct UmbilicStats {
    pub samples: usize,
    pub max_deviation: f64,
    pub mean_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowReport {
    pub mode: WindowMode,
    pub window: (f64, f64),
    pub samples: usize,
    pub passing: usize,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub all_pass: bool,
    /// Upper bound of the Gauss-map dilatation implied by the observed curvature range.
    pub dilatation_bound: f64,
    pub membership: Vec<Option<bool>>,
    pub umbilic: Option<UmbilicStats>,
}

pub fn curvature_window_check(forms: &FundamentalForms, mode: WindowMode, intrinsic_k: Option<&[Option<f64>]>) -> Result<WindowReport> {
    let (lo, hi) = match mode {
        WindowMode::ConvexWindow { k0 } if k0 > 0.0 && k0 <= 1.0 => (k0, 1.0 / k0),
        WindowMode::NearUmbilic { k0, .. } if k0 > 0.0 => (1.0 - k0, 1.0 + k0),
        _ => return Err(Error::InvalidArgument(format!("invalid window parameters {mode:?}"))),
    };
    let (mut kmin, mut kmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut passing = 0;
    let membership: Vec<Option<bool>> = forms
        .samples
        .iter()
        .map(|s| {
            let s = s.as_ref()?;
            let [k1, k2] = s.kappa;
            kmin = kmin.min(k2);
            kmax = kmax.max(k1);
            let ok = k2 >= lo && k1 <= hi;
            passing += ok as usize;
            Some(ok)
        })
        .collect();
    let samples = membership.iter().flatten().count();
    let umbilic = match (mode, intrinsic_k) {
        (WindowMode::NearUmbilic { k_bound, .. }, Some(ks)) => {
            let devs: Vec<f64> = forms
                .samples
                .iter()
                .zip(ks)
                .filter_map(|(s, k)| {
                    let (s, k) = (s.as_ref()?, (*k)?);
                    (k.abs() <= k_bound).then(|| (s.kappa[0] - 1.0).abs().max((s.kappa[1] - 1.0).abs()))
                })
                .collect();
            Some(UmbilicStats {
                samples: devs.len(),
                max_deviation: devs.iter().copied().fold(0.0, f64::max),
                mean_deviation: if devs.is_empty() { 0.0 } else { devs.iter().sum::<f64>() / devs.len() as f64 },
            })
        }
        _ => None,
    };
    Ok(WindowReport {
        mode,
        window: (lo, hi),
        samples,
        passing,
        kappa_min: kmin,
        kappa_max: kmax,
        all_pass: samples > 0 && passing == samples,
        dilatation_bound: if kmin > -1.0 { (1.0 + kmax) / (1.0 + kmin) } else { f64::INFINITY },
        membership,
        umbilic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{fundamental_forms, SurfacePatch};

    #[test]
    fn horosphere_factor_is_exponential() {
        for t in [0.0, 0.5, 1.0, 2.0] {
            let f = parallel_area_factor(&Matrix2::identity(), t);
            assert!((f - (2.0 * t).exp()).abs() < 1e-10 * f);
        }
    }

    #[test]
    fn windows_on_closed_forms() {
        let big = fundamental_forms(&SurfacePatch::sphere(3.0, 9).unwrap());
        let r = curvature_window_check(&big, WindowMode::NearUmbilic { k0: 0.01, k_bound: 1.0 }, None).unwrap();
        assert!(r.all_pass);
        let thin = fundamental_forms(&SurfacePatch::equidistant(0.1, 1.0, 9).unwrap());
        let r = curvature_window_check(&thin, WindowMode::ConvexWindow { k0: 0.5 }, None).unwrap();
        assert_eq!(r.passing, 0);
        assert!((r.kappa_max - 0.1f64.tanh()).abs() < 1e-10);
    }
}
