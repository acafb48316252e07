use nalgebra::{Matrix2, Vector4};
use rayon::prelude::*;
use serde::Serialize;

use super::patch::{Jets, SurfacePatch};
use crate::hyp::mink;

/// Smallest admissible `det I` at a sample.
pub const MIN_METRIC_DET: f64 = 1e-10;

/// Step of the difference stencils used on analytic patches.
const ANALYTIC_STEP: f64 = 1e-3;

/// Parameter derivatives of the forms needed by the Brioschi formula and the Codazzi equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormDerivatives {
    pub e_u: f64,
    pub e_v: f64,
    pub f_u: f64,
    pub f_v: f64,
    pub g_u: f64,
    pub g_v: f64,
    pub e_vv: f64,
    pub f_uv: f64,
    pub g_uu: f64,
    pub l_v: f64,
    pub m_u: f64,
    pub m_v: f64,
    pub n_u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormSample {
    pub point: Vector4<f64>,
    pub normal: Vector4<f64>,
    pub xu: Vector4<f64>,
    pub xv: Vector4<f64>,
    pub first: Matrix2<f64>,
    pub second: Matrix2<f64>,
    pub third: Matrix2<f64>,
    /// Shape operator in the coordinate basis, `II = I·B`.
    pub shape: Matrix2<f64>,
    /// `κ₁ ≥ κ₂`.
    pub kappa: [f64; 2],
    pub derivatives: Option<FormDerivatives>,
}

#[derive(Debug, Clone)]
pub struct FundamentalForms {
    pub nu: usize,
    pub nv: usize,
    pub samples: Vec<Option<FormSample>>,
    /// Excluded nodes with the reason.
    pub excluded: Vec<(usize, usize, String)>,
}

impl FundamentalForms {
    pub fn get(&self, i: usize, j: usize) -> Option<&FormSample> {
        self.samples[j * self.nu + i].as_ref()
    }

    pub fn valid(&self) -> impl Iterator<Item = &FormSample> {
        self.samples.iter().flatten()
    }

    /// Largest violation of `II = I·B`, `III = Bᵀ I B` and self-adjointness of `B`.
    pub fn consistency(&self) -> f64 {
        self.valid()
            .map(|s| {
                let a = (s.second - s.first * s.shape).abs().max();
                let b = (s.third - s.shape.transpose() * s.first * s.shape).abs().max();
                let ib = s.first * s.shape;
                let c = (ib - ib.transpose()).abs().max();
                a.max(b).max(c)
            })
            .fold(0.0, f64::max)
    }
}

struct Local {
    first: Matrix2<f64>,
    second: Matrix2<f64>,
    normal: Vector4<f64>,
    /// `E_v, G_u, F_v`, exact from the jets.
    e_v: f64,
    g_u: f64,
    f_v: f64,
    e_u: f64,
    f_u: f64,
    g_v: f64,
}

fn local(patch: &SurfacePatch, jt: &Jets) -> Option<Local> {
    let n = patch.normal(jt)?;
    let (e, f, g) = (mink(&jt.xu, &jt.xu), mink(&jt.xu, &jt.xv), mink(&jt.xv, &jt.xv));
    if e * g - f * f < MIN_METRIC_DET {
        return None;
    }
    let (l, m, nn) = (-mink(&n, &jt.xuu), -mink(&n, &jt.xuv), -mink(&n, &jt.xvv));
    Some(Local {
        first: Matrix2::new(e, f, f, g),
        second: Matrix2::new(l, m, m, nn),
        normal: n,
        e_u: 2.0 * mink(&jt.xuu, &jt.xu),
        e_v: 2.0 * mink(&jt.xuv, &jt.xu),
        f_u: mink(&jt.xuu, &jt.xv) + mink(&jt.xu, &jt.xuv),
        f_v: mink(&jt.xuv, &jt.xv) + mink(&jt.xu, &jt.xvv),
        g_u: 2.0 * mink(&jt.xuv, &jt.xv),
        g_v: 2.0 * mink(&jt.xvv, &jt.xv),
    })
}

/// Five-point derivative `(f(-2h) - 8f(-h) + 8f(h) - f(2h)) / 12h`.
fn d5(f: impl Fn(f64) -> Option<f64>, h: f64) -> Option<f64> {
    Some((f(-2.0 * h)? - 8.0 * f(-h)? + 8.0 * f(h)? - f(2.0 * h)?) / (12.0 * h))
}

fn analytic_derivatives(patch: &SurfacePatch, u: f64, v: f64, c: &Local) -> Option<FormDerivatives> {
    let at = |du: f64, dv: f64| patch.jets_at(u + du, v + dv).ok().and_then(|jt| local(patch, &jt));
    let h = ANALYTIC_STEP;
    Some(FormDerivatives {
        e_u: c.e_u,
        e_v: c.e_v,
        f_u: c.f_u,
        f_v: c.f_v,
        g_u: c.g_u,
        g_v: c.g_v,
        e_vv: d5(|t| at(0.0, t).map(|l| l.e_v), h)?,
        f_uv: d5(|t| at(t, 0.0).map(|l| l.f_v), h)?,
        g_uu: d5(|t| at(t, 0.0).map(|l| l.g_u), h)?,
        l_v: d5(|t| at(0.0, t).map(|l| l.second[(0, 0)]), h)?,
        m_u: d5(|t| at(t, 0.0).map(|l| l.second[(0, 1)]), h)?,
        m_v: d5(|t| at(0.0, t).map(|l| l.second[(0, 1)]), h)?,
        n_u: d5(|t| at(t, 0.0).map(|l| l.second[(1, 1)]), h)?,
    })
}

fn shape_of(first: &Matrix2<f64>, second: &Matrix2<f64>) -> Option<Matrix2<f64>> {
    first.try_inverse().map(|inv| inv * second)
}

/// Eigenvalues of an `I`-self-adjoint operator, largest first.
pub fn principal_curvatures(shape: &Matrix2<f64>) -> [f64; 2] {
    let h = 0.5 * shape.trace();
    let half = 0.5 * (shape[(0, 0)] - shape[(1, 1)]);
    let disc = (half * half + shape[(0, 1)] * shape[(1, 0)]).max(0.0).sqrt();
    [h + disc, h - disc]
}

fn assemble(point: Vector4<f64>, jt: &Jets, c: &Local, derivatives: Option<FormDerivatives>) -> Option<FormSample> {
    let shape = shape_of(&c.first, &c.second)?;
    Some(FormSample {
        point,
        normal: c.normal,
        xu: jt.xu,
        xv: jt.xv,
        first: c.first,
        second: c.second,
        third: shape.transpose() * c.first * shape,
        shape,
        kappa: principal_curvatures(&shape),
        derivatives,
    })
}

/// Forms of an analytic patch at arbitrary parameters (without derivatives).
pub fn forms_at(patch: &SurfacePatch, u: f64, v: f64) -> Option<FormSample> {
    let jt = patch.jets_at(u, v).ok()?;
    let c = local(patch, &jt)?;
    assemble(jt.x, &jt, &c, None)
}

/// First, second and third fundamental forms at every node of the patch.
///
/// Analytic patches use exact jets (and five-point differences of exact
/// quantities for the form derivatives); sampled patches use centered
/// differences throughout and lose two rows of nodes at each edge for the derivatives.
pub fn fundamental_forms(patch: &SurfacePatch) -> FundamentalForms {
    let (nu, nv) = (patch.nu, patch.nv);
    let locals: Vec<Option<(Jets, Local)>> = (0..nu * nv)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nu, k / nu);
            let jt = patch.jets(i, j)?;
            local(patch, &jt).map(|l| (jt, l))
        })
        .collect();
    let samples: Vec<Option<FormSample>> = (0..nu * nv)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nu, k / nu);
            let (jt, c) = locals[k].as_ref()?;
            let der = if patch.is_analytic() {
                let (u, v) = patch.param(i, j);
                analytic_derivatives(patch, u, v, c)
            } else {
                sampled_derivatives(patch, &locals, i, j)
            };
            assemble(jt.x, jt, c, der)
        })
        .collect();
    let excluded = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_none())
        .map(|(k, _)| {
            let reason = if patch.jets(k % nu, k / nu).is_none() { "no derivative stencil" } else { "degenerate first fundamental form" };
            (k % nu, k / nu, reason.to_string())
        })
        .collect();
    FundamentalForms { nu, nv, samples, excluded }
}

fn sampled_derivatives(patch: &SurfacePatch, locals: &[Option<(Jets, Local)>], i: usize, j: usize) -> Option<FormDerivatives> {
    let (nu, nv) = (patch.nu, patch.nv);
    if i < 2 || j < 2 || i + 2 >= nu || j + 2 >= nv {
        return None;
    }
    let get = |a: usize, b: usize| locals[b * nu + a].as_ref().map(|x| &x.1);
    let (hu, hv) = (patch.hu(), patch.hv());
    let du = |f: fn(&Local) -> f64| Some((f(get(i + 1, j)?) - f(get(i - 1, j)?)) / (2.0 * hu));
    let dv = |f: fn(&Local) -> f64| Some((f(get(i, j + 1)?) - f(get(i, j - 1)?)) / (2.0 * hv));
    let e = |l: &Local| l.first[(0, 0)];
    let f = |l: &Local| l.first[(0, 1)];
    let g = |l: &Local| l.first[(1, 1)];
    let c = get(i, j)?;
    let e_vv = (e(get(i, j + 1)?) - 2.0 * e(c) + e(get(i, j - 1)?)) / (hv * hv);
    let g_uu = (g(get(i + 1, j)?) - 2.0 * g(c) + g(get(i - 1, j)?)) / (hu * hu);
    let f_uv = (f(get(i + 1, j + 1)?) - f(get(i + 1, j - 1)?) - f(get(i - 1, j + 1)?) + f(get(i - 1, j - 1)?)) / (4.0 * hu * hv);
    Some(FormDerivatives {
        e_u: du(e)?,
        e_v: dv(e)?,
        f_u: du(f)?,
        f_v: dv(f)?,
        g_u: du(g)?,
        g_v: dv(g)?,
        e_vv,
        f_uv,
        g_uu,
        l_v: dv(|l| l.second[(0, 0)])?,
        m_u: du(|l| l.second[(0, 1)])?,
        m_v: dv(|l| l.second[(0, 1)])?,
        n_u: du(|l| l.second[(1, 1)])?,
    })
}

/// Gaussian curvature of `I` alone, by the Brioschi formula.
pub fn brioschi(first: &Matrix2<f64>, d: &FormDerivatives) -> f64 {
    let (e, f, g) = (first[(0, 0)], first[(0, 1)], first[(1, 1)]);
    let a = nalgebra::Matrix3::new(
        -0.5 * d.e_vv + d.f_uv - 0.5 * d.g_uu,
        0.5 * d.e_u,
        d.f_u - 0.5 * d.e_v,
        d.f_v - 0.5 * d.g_u,
        e,
        f,
        0.5 * d.g_v,
        f,
        g,
    );
    let b = nalgebra::Matrix3::new(0.0, 0.5 * d.e_v, 0.5 * d.g_u, 0.5 * d.e_v, e, f, 0.5 * d.g_u, f, g);
    let w = e * g - f * f;
    (a.determinant() - b.determinant()) / (w * w)
}

/// Intrinsic curvature per node; `None` where the form derivatives are unavailable.
pub fn intrinsic_curvature(forms: &FundamentalForms) -> Vec<Option<f64>> {
    forms.samples.iter().map(|s| s.as_ref().and_then(|s| s.derivatives.map(|d| brioschi(&s.first, &d)))).collect()
}

/// Norm of the Codazzi tensor in coordinates.
pub fn codazzi(first: &Matrix2<f64>, second: &Matrix2<f64>, d: &FormDerivatives) -> f64 {
    let (e, f, g) = (first[(0, 0)], first[(0, 1)], first[(1, 1)]);
    let (l, m, n) = (second[(0, 0)], second[(0, 1)], second[(1, 1)]);
    let w2 = 2.0 * (e * g - f * f);
    let g111 = (g * d.e_u - 2.0 * f * d.f_u + f * d.e_v) / w2;
    let g211 = (2.0 * e * d.f_u - e * d.e_v - f * d.e_u) / w2;
    let g112 = (g * d.e_v - f * d.g_u) / w2;
    let g212 = (e * d.g_u - f * d.e_v) / w2;
    let g122 = (2.0 * g * d.f_v - g * d.g_u - f * d.g_v) / w2;
    let g222 = (e * d.g_v - 2.0 * f * d.f_v + f * d.g_u) / w2;
    let r1 = d.l_v - d.m_u - (l * g112 + m * (g212 - g111) - n * g211);
    let r2 = d.m_v - d.n_u - (l * g122 + m * (g222 - g112) - n * g212);
    r1.hypot(r2)
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussCodazzi {
    /// `|det B - (K + 1)|` per node.
    pub gauss: Vec<Option<f64>>,
    pub codazzi: Vec<Option<f64>>,
    pub max_gauss: f64,
    pub max_codazzi: f64,
    pub checked: usize,
}

pub fn gauss_codazzi_residual(forms: &FundamentalForms, intrinsic_k: &[Option<f64>]) -> GaussCodazzi {
    let gauss: Vec<Option<f64>> = forms
        .samples
        .iter()
        .zip(intrinsic_k)
        .map(|(s, k)| Some((s.as_ref()?.shape.determinant() - (k.as_ref()? + 1.0)).abs()))
        .collect();
    let codazzi: Vec<Option<f64>> = forms
        .samples
        .iter()
        .map(|s| s.as_ref().and_then(|s| s.derivatives.map(|d| codazzi(&s.first, &s.second, &d))))
        .collect();
    let max = |v: &[Option<f64>]| v.iter().flatten().fold(0.0, |a: f64, b| a.max(*b));
    GaussCodazzi {
        max_gauss: max(&gauss),
        max_codazzi: max(&codazzi),
        checked: gauss.iter().flatten().count(),
        gauss,
        codazzi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_sphere_curvatures() {
        let p = SurfacePatch::sphere(1.0, 17).unwrap();
        let forms = fundamental_forms(&p);
        let c = 1f64 / 1f64.tanh();
        for s in forms.valid() {
            assert!((s.kappa[0] - c).abs() < 1e-10 && (s.kappa[1] - c).abs() < 1e-10);
        }
        assert!(forms.consistency() < 1e-10);
        // The two pole rows are degenerate.
        assert_eq!(forms.excluded.len(), 2 * p.nv);
    }

    #[test]
    fn horosphere_has_unit_shape_operator() {
        let p = SurfacePatch::horosphere(2.0, 9).unwrap();
        let forms = fundamental_forms(&p);
        for s in forms.valid() {
            assert!((s.shape - Matrix2::identity()).abs().max() < 1e-12);
        }
        let k = intrinsic_curvature(&forms);
        let r = gauss_codazzi_residual(&forms, &k);
        assert!(r.max_gauss < 1e-9 && r.max_codazzi < 1e-9, "{} {}", r.max_gauss, r.max_codazzi);
    }
}
