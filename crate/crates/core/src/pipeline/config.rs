use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::motion::RigidMotion;
use crate::error::{LabError, Result};
use crate::geometry::{
    BentPlane, Cone, CurveKind, CurveOnSurface, Cylinder, DerivativeMode, DomainPatch, Ellipsoid, Immersion, Mat3,
    NodeGrid, Paraboloid, ParamSurface, Plane, PolarPlane, Sphere, Vec3, Warped,
};

/// Catalog entries: name, parameter names, defaults.
pub const CATALOG: &[(&str, &[&str], &[f64])] = &[
    ("plane", &["scale"], &[1.0]),
    ("polar_plane", &[], &[]),
    ("sphere", &["radius"], &[1.0]),
    ("upper_hemisphere", &["radius"], &[1.0]),
    ("cylinder", &["radius"], &[1.0]),
    ("ellipsoid", &["a", "b", "c"], &[1.0, 1.2, 1.5]),
    ("paraboloid", &["k"], &[1.0]),
    ("cone", &["half_angle"], &[0.5]),
    ("bent_strip", &[], &[]),
    ("bent_plane", &["angle", "offset", "coefficient"], &[0.0, 0.0, 1.0]),
    ("warped_sphere", &["radius", "a", "b"], &[1.0, 0.3, 0.2]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
    /// Centered-difference jets at this stencil spacing instead of
    /// closed-form jets.
    #[serde(default)]
    pub fd_spacing: Option<f64>,
}

impl SurfaceSpec {
    pub fn named(name: &str) -> Self {
        Self { name: name.into(), params: Vec::new(), fd_spacing: None }
    }

    pub fn immersion(&self) -> Result<Arc<dyn Immersion>> {
        let (_, names, defaults) = CATALOG
            .iter()
            .find(|(n, _, _)| *n == self.name)
            .ok_or_else(|| LabError::Config(format!("unknown catalog surface `{}`", self.name)))?;
        if self.params.len() > names.len() {
            return Err(LabError::Config(format!("`{}` takes {} parameters, got {}", self.name, names.len(), self.params.len())));
        }
        let p: Vec<f64> = (0..names.len()).map(|i| self.params.get(i).copied().unwrap_or(defaults[i])).collect();
        let imm: Arc<dyn Immersion> = match self.name.as_str() {
            "plane" => Arc::new(Plane::new(p[0])),
            "polar_plane" => Arc::new(PolarPlane::default()),
            "sphere" => Arc::new(Sphere::new(p[0])),
            "upper_hemisphere" => Arc::new(Sphere::upper_hemisphere(p[0])),
            "cylinder" => Arc::new(Cylinder::new(p[0])),
            "ellipsoid" => Arc::new(Ellipsoid::new(p[0], p[1], p[2])),
            "paraboloid" => Arc::new(Paraboloid::new(p[0])),
            "cone" => Arc::new(Cone::new(p[0])),
            "bent_strip" => Arc::new(BentPlane::strip()),
            "bent_plane" => Arc::new(BentPlane::new(p[0], p[1], p[2])),
            "warped_sphere" => Arc::new(Warped::new(Arc::new(Sphere::new(p[0])), p[1], p[2])),
            _ => unreachable!(),
        };
        Ok(imm)
    }

    pub fn surface(&self) -> Result<ParamSurface> {
        let mode = match self.fd_spacing {
            None => DerivativeMode::Analytic,
            Some(spacing) => DerivativeMode::FiniteDifference { spacing, richardson: false },
        };
        ParamSurface::new(self.immersion()?, mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSpec {
    /// Draw the motion from the scenario seed; `axis`, `angle` and
    /// `translation` are ignored.
    #[serde(default)]
    pub random: bool,
    #[serde(default = "default_axis")]
    pub axis: [f64; 3],
    #[serde(default)]
    pub angle: f64,
    #[serde(default)]
    pub translation: [f64; 3],
}

fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TildeSpec {
    /// Base surface; defaults to the `surface_f` entry.
    #[serde(default)]
    pub surface: Option<SurfaceSpec>,
    /// Reflect through the plane through the origin with this normal before
    /// the motion is applied.
    #[serde(default)]
    pub reflect: Option<[f64; 3]>,
    #[serde(default)]
    pub motion: Option<MotionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    #[serde(flatten)]
    pub kind: CurveKind,
    pub interval: [f64; 2],
    #[serde(default)]
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub isometry: f64,
    /// Pointwise agreement `|f - rho o f~|`.
    pub agreement: f64,
    /// Rotation and translation error of the fitted motion.
    pub motion: f64,
    pub ellipticity: f64,
    pub straightness: f64,
    pub curvature_match: f64,
    pub continuation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            isometry: 1e-8,
            agreement: 1e-8,
            motion: 1e-8,
            ellipticity: 1e-6,
            straightness: 1e-6,
            curvature_match: 1e-5,
            continuation: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Nodes per unit parameter length.
    pub resolution: f64,
    pub curve_samples: usize,
    pub fermi_step: f64,
    pub fermi_s_max: f64,
    /// Ball radius of the growth stage in grid cells.
    pub delta_cells: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { resolution: 20.0, curve_samples: 41, fermi_step: 1e-3, fermi_s_max: 0.1, delta_cells: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageToggles {
    pub isometry: bool,
    pub orientation: bool,
    pub contact: bool,
    pub fit: bool,
    pub region_grow: bool,
    pub darboux: bool,
    pub flatlands: bool,
    /// Choose the fit point by principal-curvature matching.
    pub umbilic_search: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        Self {
            isometry: true,
            orientation: true,
            contact: true,
            fit: true,
            region_grow: true,
            darboux: false,
            flatlands: false,
            umbilic_search: false,
        }
    }
}

pub const STAGE_NAMES: [&str; 7] = ["isometry", "orientation", "contact", "fit", "region_grow", "darboux", "flatlands"];

impl StageToggles {
    pub fn none() -> Self {
        Self {
            isometry: false,
            orientation: false,
            contact: false,
            fit: false,
            region_grow: false,
            darboux: false,
            flatlands: false,
            umbilic_search: false,
        }
    }

    pub fn enabled(&self, name: &str) -> bool {
        match name {
            "isometry" => self.isometry,
            "orientation" => self.orientation,
            "contact" => self.contact,
            "fit" => self.fit,
            "region_grow" => self.region_grow,
            "darboux" => self.darboux,
            "flatlands" => self.flatlands,
            "umbilic_search" => self.umbilic_search,
            _ => false,
        }
    }

    /// Enables exactly the comma-separated stages.
    pub fn from_list(list: &str) -> Result<Self> {
        let mut t = Self::none();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let slot = match name {
                "isometry" => &mut t.isometry,
                "orientation" => &mut t.orientation,
                "contact" => &mut t.contact,
                "fit" => &mut t.fit,
                "region_grow" => &mut t.region_grow,
                "darboux" => &mut t.darboux,
                "flatlands" => &mut t.flatlands,
                "umbilic_search" => &mut t.umbilic_search,
                other => return Err(LabError::Config(format!("unknown stage `{other}`"))),
            };
            *slot = true;
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSpec {
    /// Parameter point for the jet fit; defaults to the middle of the curve.
    pub point: Option<[f64; 2]>,
}

impl Default for FitSpec {
    fn default() -> Self {
        Self { point: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DarbouxSpec {
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub nodes: usize,
    pub margin: f64,
    /// Seed region: nodes within this parameter distance of the curve.
    pub seed_radius: f64,
    pub directions: usize,
}

impl Default for DarbouxSpec {
    fn default() -> Self {
        Self { u: [-0.3, 0.3], v: [-0.3, 0.3], nodes: 41, margin: 0.05, seed_radius: 0.1, directions: 25 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlatlandsSpec {
    /// Treat agreement on the rim of the grid as given.
    pub pin_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub verdict: String,
    #[serde(default)]
    pub failed_stage: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub surface_f: SurfaceSpec,
    #[serde(default)]
    pub surface_ftilde: TildeSpec,
    #[serde(default)]
    pub curve: Option<CurveSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub stages: StageToggles,
    #[serde(default)]
    pub fit: FitSpec,
    #[serde(default)]
    pub darboux: DarbouxSpec,
    #[serde(default)]
    pub flatlands: FlatlandsSpec,
    #[serde(default)]
    pub expect: Option<Expectation>,
}

/// Resolved geometric inputs of a scenario.
#[derive(Debug, Clone)]
pub struct Setup {
    pub f: ParamSurface,
    pub ft: ParamSurface,
    /// The motion `rho` with `f = rho o f~` when `f~` is a rigid copy of `f`.
    pub expected: Option<RigidMotion>,
    pub curve: Option<CurveOnSurface>,
    pub grid: NodeGrid,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.surface_f.immersion()?;
        if let Some(s) = &self.surface_ftilde.surface {
            s.immersion()?;
        }
        let t = &self.tolerances;
        let tols = [t.isometry, t.agreement, t.motion, t.ellipticity, t.straightness, t.curvature_match, t.continuation];
        if tols.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(LabError::Config(format!("tolerances must be positive: {t:?}")));
        }
        let g = &self.grid;
        if !(g.resolution > 0.0 && g.fermi_step > 0.0 && g.fermi_s_max > 0.0 && g.delta_cells > 0.0) || g.curve_samples < 3 {
            return Err(LabError::Config(format!("bad grid settings: {g:?}")));
        }
        let needs_curve = self.stages.orientation || self.stages.contact || self.stages.region_grow || self.stages.darboux;
        if needs_curve && self.curve.is_none() {
            return Err(LabError::Config("the enabled stages need a [curve] section".into()));
        }
        if self.curve.is_none() && self.fit.point.is_none() && self.stages.fit && !self.stages.umbilic_search {
            return Err(LabError::Config("the fit stage needs a curve or [fit] point".into()));
        }
        if let Some(e) = &self.expect {
            if e.verdict != "pass" && e.verdict != "fail" {
                return Err(LabError::Config(format!("expected verdict must be pass or fail, got `{}`", e.verdict)));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.grid.resolution
    }

    pub fn setup(&self) -> Result<Setup> {
        let f = self.surface_f.surface()?;
        let base = match &self.surface_ftilde.surface {
            Some(s) => s.surface()?,
            None => f.clone(),
        };
        let same_base = self.surface_ftilde.surface.is_none();
        let mut ft = base;
        if let Some(n) = self.surface_ftilde.reflect {
            let n = Vec3::from(n);
            if n.norm() == 0.0 {
                return Err(LabError::Config("reflection normal is zero".into()));
            }
            let n = n.normalize();
            let r = Mat3::identity() - 2.0 * n * n.transpose();
            ft = ft.transformed(r, Vec3::zeros());
        }
        let mut expected = (same_base && self.surface_ftilde.reflect.is_none()).then(RigidMotion::identity);
        if let Some(m) = &self.surface_ftilde.motion {
            let rho0 = if m.random {
                RigidMotion::random(&mut ChaCha8Rng::seed_from_u64(self.seed))
            } else {
                RigidMotion::from_axis_angle(Vec3::from(m.axis), m.angle, Vec3::from(m.translation))?
            };
            ft = rho0.surface(&ft);
            expected = expected.map(|_| rho0.inverse());
        }
        let curve = match &self.curve {
            None => None,
            Some(c) => {
                let raw = CurveOnSurface::new(c.kind.clone(), c.interval)?;
                let closed = raw.is_closed() || c.closed;
                Some(raw.closed(closed).arclength(&f)?)
            }
        };
        let dom = f.domain();
        let grid = DomainPatch::new(dom.kind.clone(), self.spacing())?.grid();
        Ok(Setup { f, ft, expected, curve, grid })
    }
}

/// Scenario files shipped with the crate.
pub const BUILTIN_SCENARIOS: &[(&str, &str)] = &[
    ("sphere_self", include_str!("../../scenarios/sphere_self.toml")),
    ("ellipsoid_self", include_str!("../../scenarios/ellipsoid_self.toml")),
    ("reflected_hemisphere", include_str!("../../scenarios/reflected_hemisphere.toml")),
    ("rolled_corner", include_str!("../../scenarios/rolled_corner.toml")),
    ("bent_strip_boundary", include_str!("../../scenarios/bent_strip_boundary.toml")),
    ("flat_strip_unpinned", include_str!("../../scenarios/flat_strip_unpinned.toml")),
];

pub fn builtin(name: &str) -> Option<Result<ScenarioConfig>> {
    BUILTIN_SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, text)| ScenarioConfig::from_toml(text))
}
