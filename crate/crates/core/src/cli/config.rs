use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyp::ChartKind;
use crate::surfaces::{IdealRegion, WindowMode};

/// Parameters of every pipeline; each subcommand reads its own section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Overrides the resolution of the selected section when set.
    pub resolution: Option<usize>,
    pub deterministic: bool,
    pub curvature: CurvatureConfig,
    pub decompose: DecomposeConfig,
    pub hull: HullConfig,
    pub cutoff: CutoffConfig,
    pub approx: ApproxConfig,
    pub surface: SurfaceConfig,
    pub revolve: RevolveConfig,
    pub assemble: AssembleConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            resolution: None,
            deterministic: false,
            curvature: CurvatureConfig::default(),
            decompose: DecomposeConfig::default(),
            hull: HullConfig::default(),
            cutoff: CutoffConfig::default(),
            approx: ApproxConfig::default(),
            surface: SurfaceConfig::default(),
            revolve: RevolveConfig::default(),
            assemble: AssembleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SphereFamily {
    Round,
    /// `u ≡ c`.
    Shift { c: f64 },
    /// `u = a (v₃² - 1/3)`.
    Ellipsoidal { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurvatureSource {
    /// A density on the whole sphere, sampled on a two-chart atlas.
    Sphere { density: SphereFamily },
    /// A closed-form field compared against its symbolic curvature.
    Registered { name: String },
    /// A field file in the `conformal-field/1` format.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureConfig {
    pub source: CurvatureSource,
    pub resolution: usize,
    /// Half side of each atlas chart.
    pub half_extent: f64,
    pub gauss_bonnet_tolerance: f64,
    pub tolerance: f64,
}

impl Default for CurvatureConfig {
    fn default() -> Self {
        CurvatureConfig {
            source: CurvatureSource::Sphere { density: SphereFamily::Round },
            resolution: 129,
            half_extent: 2.0,
            gauss_bonnet_tolerance: 0.01,
            tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainConfig {
    RoundDisk { radius: f64 },
    HalfPlane { scale: f64 },
    /// Image of the unit disk under `Σ aₖ zᵏ`, coefficients as `[re, im]`.
    PowerSeries { coefficients: Vec<[f64; 2]>, qc_constant_hint: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    pub domain: DomainConfig,
    /// Target metric `scale² h₋₁`, unless a field file is given.
    pub scale: f64,
    pub field: Option<PathBuf>,
    pub resolution: usize,
    pub half_extent: f64,
    pub tolerance: f64,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig {
            domain: DomainConfig::RoundDisk { radius: 1.0 },
            scale: 1f64.cosh(),
            field: None,
            resolution: 33,
            half_extent: 1.0,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PointsConfig {
    Tetrahedron,
    Octahedron,
    /// Uniform points drawn from the pipeline seed.
    Random { count: usize },
    List { points: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HullConfig {
    pub points: PointsConfig,
    /// Sample points for the Thurston/visual comparison on the complement; 0 skips it.
    pub visual_samples: usize,
    pub visual_tolerance: f64,
    pub convexity_tolerance: f64,
}

impl Default for HullConfig {
    fn default() -> Self {
        HullConfig { points: PointsConfig::Tetrahedron, visual_samples: 10_000, visual_tolerance: 1e-4, convexity_tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffConfig {
    pub bridge_epsilon: f64,
    pub step: f64,
    pub stability_tolerance: f64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        CutoffConfig { bridge_epsilon: 0.2, step: 1e-3, stability_tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproxConfig {
    /// Cut-off CSV; built from `bridge_epsilon` when absent.
    pub cutoff: Option<PathBuf>,
    pub bridge_epsilon: f64,
    /// Base field file; the constant-curvature disk datum on zoom windows when absent.
    pub base: Option<PathBuf>,
    pub n_min: i32,
    pub n_max: i32,
    pub eps: f64,
    pub resolution: usize,
    pub tolerance: f64,
    pub complement_tolerance: f64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig {
            cutoff: None,
            bridge_epsilon: 0.2,
            base: None,
            n_min: 0,
            n_max: 5,
            eps: 0.42,
            resolution: 256,
            tolerance: 1e-3,
            complement_tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SurfaceFamily {
    Sphere { radius: f64 },
    Horosphere { half: f64 },
    Equidistant { distance: f64, half: f64 },
    PerturbedSphere { radius: f64, amplitude: f64 },
    /// A mesh previously written by `surface`, with its JSON sidecar.
    Obj { obj: PathBuf, meta: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceConfig {
    pub family: SurfaceFamily,
    pub resolution: usize,
    pub window: Option<WindowMode>,
    /// Offsets at which the tube area factor is reported.
    pub offsets: Vec<f64>,
    pub gauss_tolerance: f64,
    pub codazzi_tolerance: f64,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        SurfaceConfig {
            family: SurfaceFamily::Sphere { radius: 1.0 },
            resolution: 33,
            window: None,
            offsets: vec![0.5, 1.0],
            gauss_tolerance: 1e-5,
            codazzi_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileConfig {
    Sphere { radius: f64 },
    Flat { length: f64 },
    Plane { length: f64 },
    Equidistant { distance: f64, length: f64 },
    /// A `rho,f,fprime` CSV.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RevolveConfig {
    pub profile: ProfileConfig,
    pub samples: usize,
    pub angular_samples: usize,
    pub tolerance: f64,
    pub kappa_tolerance: f64,
}

impl Default for RevolveConfig {
    fn default() -> Self {
        RevolveConfig {
            profile: ProfileConfig::Sphere { radius: 1.0 },
            samples: 201,
            angular_samples: 32,
            tolerance: 1e-6,
            kappa_tolerance: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AssembleSource {
    Surface { family: SurfaceFamily, resolution: usize },
    /// A realized profile, moved so the axis point at unit distance sits at the origin.
    Revolve { profile: ProfileConfig, samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartChoice {
    North,
    South,
    /// The chart in which the Gauss image of the first parameter row sits near the centre.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssembleConfig {
    pub source: AssembleSource,
    pub region: IdealRegion,
    pub chart: ChartChoice,
    pub half_extent: f64,
    pub resolution: usize,
    /// Constant curvature the assembled data should have, if known.
    pub expected_curvature: Option<f64>,
    pub tolerance: f64,
}

impl Default for AssembleConfig {
    fn default() -> Self {
        AssembleConfig {
            source: AssembleSource::Revolve { profile: ProfileConfig::Sphere { radius: 1.0 }, samples: 801 },
            region: IdealRegion::Empty,
            chart: ChartChoice::Auto,
            half_extent: 1.0,
            resolution: 65,
            expected_curvature: None,
            tolerance: 1e-4,
        }
    }
}

impl ChartChoice {
    pub fn fixed(self) -> Option<ChartKind> {
        match self {
            ChartChoice::North => Some(ChartKind::North),
            ChartChoice::South => Some(ChartKind::South),
            ChartChoice::Auto => None,
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

impl PipelineConfig {
    /// Every tolerance is positive.
    pub fn validate(&self) -> Result<()> {
        positive("curvature.gauss_bonnet_tolerance", self.curvature.gauss_bonnet_tolerance)?;
        positive("curvature.tolerance", self.curvature.tolerance)?;
        positive("decompose.tolerance", self.decompose.tolerance)?;
        positive("hull.visual_tolerance", self.hull.visual_tolerance)?;
        positive("hull.convexity_tolerance", self.hull.convexity_tolerance)?;
        positive("cutoff.stability_tolerance", self.cutoff.stability_tolerance)?;
        positive("approx.tolerance", self.approx.tolerance)?;
        positive("approx.complement_tolerance", self.approx.complement_tolerance)?;
        positive("surface.gauss_tolerance", self.surface.gauss_tolerance)?;
        positive("surface.codazzi_tolerance", self.surface.codazzi_tolerance)?;
        positive("revolve.tolerance", self.revolve.tolerance)?;
        positive("revolve.kappa_tolerance", self.revolve.kappa_tolerance)?;
        positive("assemble.tolerance", self.assemble.tolerance)?;
        if self.approx.n_min > self.approx.n_max {
            return Err(Error::InvalidArgument("approx.n_min exceeds approx.n_max".into()));
        }
        Ok(())
    }

    /// Copy with relative paths joined onto `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        let mut c = self.clone();
        if let CurvatureSource::File { path } = &mut c.curvature.source {
            *path = resolve(base, path);
        }
        if let Some(p) = &mut c.decompose.field {
            *p = resolve(base, p);
        }
        for p in [&mut c.approx.cutoff, &mut c.approx.base].into_iter().flatten() {
            *p = resolve(base, p);
        }
        let families = [
            Some(&mut c.surface.family),
            match &mut c.assemble.source {
                AssembleSource::Surface { family, .. } => Some(family),
                AssembleSource::Revolve { .. } => None,
            },
        ];
        for f in families.into_iter().flatten() {
            if let SurfaceFamily::Obj { obj, meta } = f {
                *obj = resolve(base, obj);
                *meta = resolve(base, meta);
            }
        }
        let profiles = [
            Some(&mut c.revolve.profile),
            match &mut c.assemble.source {
                AssembleSource::Revolve { profile, .. } => Some(profile),
                AssembleSource::Surface { .. } => None,
            },
        ];
        for p in profiles.into_iter().flatten() {
            if let ProfileConfig::File { path } = p {
                *path = resolve(base, path);
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_json() {
        let c = PipelineConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<PipelineConfig>(&s).unwrap(), c);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn sections_are_optional_and_unknown_keys_rejected() {
        let c: PipelineConfig = serde_json::from_str(r#"{"seed": 3, "cutoff": {"bridge_epsilon": 0.1}}"#).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.cutoff.bridge_epsilon, 0.1);
        assert_eq!(c.cutoff.step, 1e-3);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"sed": 3}"#).is_err());
    }

    #[test]
    fn relative_paths_are_joined() {
        let mut c = PipelineConfig::default();
        c.approx.cutoff = Some("phi.csv".into());
        c.revolve.profile = ProfileConfig::File { path: "/abs/p.csv".into() };
        let r = c.resolved(Path::new("/cfg"));
        assert_eq!(r.approx.cutoff.unwrap(), PathBuf::from("/cfg/phi.csv"));
        assert_eq!(r.revolve.profile, ProfileConfig::File { path: "/abs/p.csv".into() });
    }

    #[test]
    fn nonpositive_tolerances_are_rejected() {
        let mut c = PipelineConfig::default();
        c.revolve.tolerance = 0.0;
        assert!(c.validate().is_err());
    }
}
