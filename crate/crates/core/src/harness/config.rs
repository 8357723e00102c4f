use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::models::{CurvatureClass, SplineProfile, WarpedModel, WarpedProfile};
use crate::potential::{DensityField, GeoDomain};
use crate::submanifold::{ImmersedPatch, PatchDensity};

/// Inequality family checked by a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    SobolevDomain,
    Isoperimetric,
    MichaelSimon,
    MinimalIsoperimetric,
}

impl Theorem {
    pub fn as_str(&self) -> &'static str {
        match self {
            Theorem::SobolevDomain => "sobolev_domain",
            Theorem::Isoperimetric => "isoperimetric",
            Theorem::MichaelSimon => "michael_simon",
            Theorem::MinimalIsoperimetric => "minimal_isoperimetric",
        }
    }

    pub fn on_patch(&self) -> bool {
        matches!(self, Theorem::MichaelSimon | Theorem::MinimalIsoperimetric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    /// Mesh width for meshed domains and surface patches.
    #[serde(default = "default_h")]
    pub h: f64,
    /// Local error tolerance of geodesic and Jacobi integrations in checks.
    #[serde(default = "default_ode_tol")]
    pub ode_tol: f64,
    /// Gauss panels per direction for patch quadrature.
    #[serde(default = "default_panels")]
    pub quad_panels: usize,
}

fn default_h() -> f64 {
    0.05
}
fn default_ode_tol() -> f64 {
    crate::tolerance::ODE
}
fn default_panels() -> usize {
    16
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            h: default_h(),
            ode_tol: default_ode_tol(),
            quad_panels: default_panels(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSettings {
    #[serde(default = "default_radii")]
    pub r: Vec<f64>,
    #[serde(default = "default_sigmas")]
    pub sigma: Vec<f64>,
    #[serde(default = "default_budget")]
    pub mc_budget: usize,
    /// Coverage targets per radius.
    #[serde(default = "default_targets")]
    pub targets: usize,
    /// Random starts per coverage target besides the on-ray seed.
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_cov_tol")]
    pub coverage_tolerance: f64,
    /// Fraction of coverage targets that must be verified.
    #[serde(default = "default_cov_frac")]
    pub coverage_fraction: f64,
    /// Interior points sampled for Jacobian checks.
    #[serde(default = "default_jacobian_points")]
    pub jacobian_points: usize,
}

fn default_radii() -> Vec<f64> {
    vec![10.0]
}
fn default_sigmas() -> Vec<f64> {
    vec![0.0]
}
fn default_budget() -> usize {
    100_000
}
fn default_targets() -> usize {
    100
}
fn default_starts() -> usize {
    4
}
fn default_cov_tol() -> f64 {
    1e-6
}
fn default_cov_frac() -> f64 {
    0.99
}
fn default_jacobian_points() -> usize {
    12
}

impl Default for TransportSettings {
    fn default() -> Self {
        Self {
            r: default_radii(),
            sigma: default_sigmas(),
            mc_budget: default_budget(),
            targets: default_targets(),
            starts: default_starts(),
            coverage_tolerance: default_cov_tol(),
            coverage_fraction: default_cov_frac(),
            jacobian_points: default_jacobian_points(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    pub path: Option<PathBuf>,
    pub format: Option<ReportFormat>,
}

/// Model manifold of a domain case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub preset: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub alpha: Option<f64>,
    pub scale: Option<f64>,
    pub coeffs: Option<Vec<f64>>,
    pub knots: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
    pub slope: Option<f64>,
    pub class: Option<CurvatureClass>,
}

fn default_dim() -> usize {
    2
}

pub const MANIFOLD_PRESETS: &[(&str, &str)] = &[
    ("euclidean", "flat space, θ = 1"),
    ("cone_smoothed", "φ = αr + (1-α)(1-e^{-r}); needs alpha"),
    ("capped_paraboloid", "φ = αr + (1-α) a atan(r/a); needs alpha, optional scale a"),
    ("spline", "concave clamped spline; needs knots, values, slope"),
    ("polynomial", "φ = Σ c_i r^i; needs coeffs"),
];

fn reject_extra(preset: &str, fields: &[(&str, bool)]) -> Result<()> {
    let extra: Vec<&str> = fields.iter().filter(|(_, set)| *set).map(|(n, _)| *n).collect();
    if extra.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!("{preset} does not take {}", extra.join(", "))))
    }
}

fn need<T: Clone>(v: &Option<T>, preset: &str, field: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| Error::Config(format!("{preset} needs `{field}`")))
}

impl ManifoldSpec {
    fn set_fields(&self) -> [(&'static str, bool); 6] {
        [
            ("alpha", self.alpha.is_some()),
            ("scale", self.scale.is_some()),
            ("coeffs", self.coeffs.is_some()),
            ("knots", self.knots.is_some()),
            ("values", self.values.is_some()),
            ("slope", self.slope.is_some()),
        ]
    }

    /// Checks the preset name and that exactly its fields are present.
    pub fn check_fields(&self) -> Result<()> {
        let p = self.preset.as_str();
        let (required, optional): (&[&str], &[&str]) = match p {
            "euclidean" => (&[], &[]),
            "cone_smoothed" => (&["alpha"], &[]),
            "capped_paraboloid" => (&["alpha"], &["scale"]),
            "spline" => (&["knots", "values", "slope"], &[]),
            "polynomial" => (&["coeffs"], &[]),
            other => return Err(Error::Config(format!("unknown manifold preset `{other}`"))),
        };
        let fields = self.set_fields();
        if let Some((name, _)) = fields.iter().find(|(n, set)| required.contains(n) && !set) {
            return Err(Error::Config(format!("{p} needs `{name}`")));
        }
        let extra: Vec<(&str, bool)> = fields
            .iter()
            .map(|&(n, set)| (n, set && !required.contains(&n) && !optional.contains(&n)))
            .collect();
        reject_extra(p, &extra)
    }

    pub fn build(&self) -> Result<WarpedModel> {
        self.check_fields()?;
        let class = self.class.unwrap_or(CurvatureClass::SectionalNonneg);
        let p = self.preset.as_str();
        let profile = match p {
            "euclidean" => return Ok(WarpedModel::euclidean(self.dim)),
            "cone_smoothed" => WarpedProfile::ConeSmoothed {
                alpha: need(&self.alpha, p, "alpha")?,
            },
            "capped_paraboloid" => WarpedProfile::CappedParaboloid {
                alpha: need(&self.alpha, p, "alpha")?,
                scale: self.scale.unwrap_or(1.0),
            },
            "spline" => WarpedProfile::Spline(SplineProfile::new(
                need(&self.knots, p, "knots")?,
                need(&self.values, p, "values")?,
                need(&self.slope, p, "slope")?,
            )?),
            _ => WarpedProfile::Polynomial {
                coeffs: need(&self.coeffs, p, "coeffs")?,
            },
        };
        WarpedModel::new(self.dim, profile, class)
    }
}

/// Domain of a domain case. Balls and annuli are centred at the pole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    /// Polar triangulation of a ball, meshed at the solver width.
    MeshDisk { radius: f64 },
    /// Triangulation read from a mesh file.
    MeshFile { path: PathBuf },
}

impl DomainSpec {
    pub fn build(&self, h: f64, base: Option<&Path>) -> Result<GeoDomain> {
        let d = match self {
            DomainSpec::Ball { radius } => GeoDomain::Ball { radius: *radius },
            DomainSpec::Annulus { inner, outer } => GeoDomain::Annulus {
                inner: *inner,
                outer: *outer,
            },
            DomainSpec::MeshDisk { radius } => GeoDomain::Meshed(Arc::new(TriMesh::polar_disk(*radius, h)?)),
            DomainSpec::MeshFile { path } => {
                let full = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                GeoDomain::Meshed(Arc::new(TriMesh::read(&full)?))
            }
        };
        d.validate()?;
        Ok(d)
    }

    /// Radius of the disk the domain covers, when it is one.
    pub fn disk_radius(&self) -> Option<f64> {
        match self {
            DomainSpec::Ball { radius } | DomainSpec::MeshDisk { radius } => Some(*radius),
            _ => None,
        }
    }
}

/// Density polynomial. `coeffs` are in powers of the pole distance `r`
/// (domain cases); `coeffs_sq` in powers of `|x|²` (patch cases).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub coeffs: Option<Vec<f64>>,
    pub coeffs_sq: Option<Vec<f64>>,
}

/// Patch preset; `codim` selects the ambient dimension and applies the
/// product lift to hypersurface presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    pub preset: String,
    pub k: Option<u32>,
    pub codim: Option<usize>,
    pub radius: Option<f64>,
    pub length: Option<f64>,
    pub width: Option<f64>,
    pub growth: Option<f64>,
    pub turns: Option<f64>,
    pub half_height: Option<f64>,
    pub path: Option<PathBuf>,
}

pub const PATCH_PRESETS: &[(&str, &str)] = &[
    ("flat_disk", "flat disk, n = 2; radius, codim (default 2)"),
    ("flat_strip", "flat rectangle, n = 2; length, width, codim (default 2)"),
    ("circle", "round circle, n = 1; radius, codim (default 2)"),
    ("spiral", "logarithmic spiral arc, n = 1; growth, turns, codim (default 2)"),
    ("complex_curve", "graph z ↦ (z, z^k) in ℂ², n = 2, codim 2; k, radius"),
    ("hemisphere", "unit upper hemisphere, n = 2; codim 1 or 2 (lifted, default)"),
    ("catenoid_band", "catenoid band, n = 2; half_height, codim 1 or 2 (lifted, default)"),
    ("table", "curve through tabulated points `t x_1 … x_N`; path"),
];

impl PatchSpec {
    fn unused(&self, allowed: &[&str]) -> Result<()> {
        let fields = [
            ("k", self.k.is_some()),
            ("codim", self.codim.is_some()),
            ("radius", self.radius.is_some()),
            ("length", self.length.is_some()),
            ("width", self.width.is_some()),
            ("growth", self.growth.is_some()),
            ("turns", self.turns.is_some()),
            ("half_height", self.half_height.is_some()),
            ("path", self.path.is_some()),
        ];
        let extra: Vec<&str> = fields
            .iter()
            .filter(|(n, set)| *set && !allowed.contains(n))
            .map(|(n, _)| *n)
            .collect();
        if extra.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("patch {} does not take {}", self.preset, extra.join(", "))))
        }
    }

    /// Checks the preset name, its fields and the codimension.
    pub fn check_fields(&self) -> Result<()> {
        let allowed: &[&str] = match self.preset.as_str() {
            "flat_disk" | "circle" => &["codim", "radius"],
            "flat_strip" => &["codim", "length", "width"],
            "spiral" => &["codim", "growth", "turns"],
            "complex_curve" => &["codim", "k", "radius"],
            "hemisphere" => &["codim"],
            "catenoid_band" => &["codim", "half_height"],
            "table" => &["path"],
            other => return Err(Error::Config(format!("unknown patch preset `{other}`"))),
        };
        self.unused(allowed)?;
        let codim = self.codim.unwrap_or(2);
        match self.preset.as_str() {
            "complex_curve" if codim != 2 => Err(Error::Config("complex_curve has codim 2".into())),
            "hemisphere" | "catenoid_band" if !(1..=2).contains(&codim) => Err(Error::Config(format!(
                "{} supports codim 1 or 2, got {codim}",
                self.preset
            ))),
            "table" => need(&self.path, "table", "path").map(drop),
            _ if codim == 0 => Err(Error::Config(format!("patch {} needs codim >= 1", self.preset))),
            _ => Ok(()),
        }
    }

    pub fn build(&self, base: Option<&Path>) -> Result<ImmersedPatch> {
        self.check_fields()?;
        let codim = self.codim.unwrap_or(2);
        let hyper = |p: ImmersedPatch| -> Result<ImmersedPatch> {
            if codim == 2 {
                p.lift_codim1()
            } else {
                Ok(p)
            }
        };
        match self.preset.as_str() {
            "flat_disk" => ImmersedPatch::flat_disk(self.radius.unwrap_or(1.0), 2 + codim),
            "flat_strip" => {
                ImmersedPatch::flat_strip(self.length.unwrap_or(2.0), self.width.unwrap_or(1.0), 2 + codim)
            }
            "circle" => ImmersedPatch::circle(self.radius.unwrap_or(1.0), 1 + codim),
            "spiral" => ImmersedPatch::spiral(self.growth.unwrap_or(0.1), self.turns.unwrap_or(1.0), 1 + codim),
            "complex_curve" => ImmersedPatch::complex_curve(self.k.unwrap_or(2), self.radius.unwrap_or(1.0)),
            "hemisphere" => hyper(ImmersedPatch::hemisphere()?),
            "catenoid_band" => hyper(ImmersedPatch::catenoid_band(self.half_height.unwrap_or(0.5))?),
            _ => {
                let path = need(&self.path, "table", "path")?;
                let full = match base {
                    Some(b) if path.is_relative() => b.join(&path),
                    _ => path,
                };
                ImmersedPatch::read_curve_table(&full)
            }
        }
    }
}

/// One row-producing experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub id: String,
    pub theorem: Theorem,
    pub manifold: Option<ManifoldSpec>,
    pub domain: Option<DomainSpec>,
    pub density: Option<DensitySpec>,
    pub sigma: Option<PatchSpec>,
}

impl CaseSpec {
    pub fn validate(&self) -> Result<()> {
        let id = &self.id;
        if self.theorem.on_patch() {
            if self.sigma.is_none() {
                return Err(Error::Config(format!("case {id}: patch cases need a [case.sigma] table")));
            }
            if self.manifold.is_some() || self.domain.is_some() {
                return Err(Error::Config(format!(
                    "case {id}: patch cases live in Euclidean space and take no manifold or domain"
                )));
            }
            if let Some(p) = &self.sigma {
                p.check_fields().map_err(|e| Error::Config(format!("case {id}: {e}")))?;
            }
            if let Some(d) = &self.density {
                if d.coeffs.is_some() {
                    return Err(Error::Config(format!("case {id}: patch densities use `coeffs_sq`")));
                }
                if self.theorem == Theorem::MinimalIsoperimetric {
                    return Err(Error::Config(format!("case {id}: isoperimetric cases use f = 1")));
                }
            }
        } else {
            if self.manifold.is_none() || self.domain.is_none() {
                return Err(Error::Config(format!("case {id}: domain cases need manifold and domain")));
            }
            if self.sigma.is_some() {
                return Err(Error::Config(format!("case {id}: domain cases take no patch")));
            }
            if let Some(m) = &self.manifold {
                m.check_fields().map_err(|e| Error::Config(format!("case {id}: {e}")))?;
            }
            if let Some(d) = &self.density {
                if d.coeffs_sq.is_some() {
                    return Err(Error::Config(format!("case {id}: domain densities use `coeffs`")));
                }
                if self.theorem == Theorem::Isoperimetric {
                    return Err(Error::Config(format!("case {id}: isoperimetric cases use f = 1")));
                }
            }
        }
        Ok(())
    }

    pub fn domain_density(&self) -> DensityField {
        match self.density.as_ref().and_then(|d| d.coeffs.clone()) {
            Some(c) => DensityField::radial(c),
            None => DensityField::constant(1.0),
        }
    }

    pub fn patch_density(&self) -> PatchDensity {
        match self.density.as_ref().and_then(|d| d.coeffs_sq.clone()) {
            Some(c) => PatchDensity { coeffs: c },
            None => PatchDensity::constant(1.0),
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub transport: TransportSettings,
    pub output: Option<OutputSettings>,
    #[serde(rename = "case", default)]
    pub cases: Vec<CaseSpec>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(format!("{source}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.solver;
        if !(s.h > 0.0 && s.h < 1.0) {
            return Err(Error::Config(format!("solver.h = {} must lie in (0, 1)", s.h)));
        }
        if !(s.ode_tol > 0.0 && s.ode_tol < 1e-3) {
            return Err(Error::Config(format!("solver.ode_tol = {} must lie in (0, 1e-3)", s.ode_tol)));
        }
        if s.quad_panels == 0 {
            return Err(Error::Config("solver.quad_panels must be positive".into()));
        }
        let t = &self.transport;
        if t.r.is_empty() || t.r.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("transport.r must be a nonempty list of positive radii".into()));
        }
        if t.sigma.is_empty() || t.sigma.iter().any(|s| !(0.0..1.0).contains(s)) {
            return Err(Error::Config("transport.sigma values must lie in [0, 1)".into()));
        }
        if !(t.coverage_tolerance > 0.0) || !(t.coverage_fraction > 0.0 && t.coverage_fraction <= 1.0) {
            return Err(Error::Config("coverage tolerance and fraction must be positive".into()));
        }
        if t.mc_budget == 0 {
            return Err(Error::Config("transport.mc_budget must be positive".into()));
        }
        let mut ids = BTreeSet::new();
        for c in &self.cases {
            if !ids.insert(c.id.as_str()) {
                return Err(Error::Config(format!("duplicate case id `{}`", c.id)));
            }
            c.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 42

[solver]
h = 0.05

[[case]]
id = "disk"
theorem = "sobolev_domain"
manifold = { preset = "euclidean" }
domain = { kind = "ball", radius = 1.0 }

[[case]]
id = "curve"
theorem = "michael_simon"
sigma = { preset = "complex_curve", k = 2, codim = 2 }
"#;

    #[test]
    fn sample_parses() {
        let cfg = ExperimentConfig::parse(SAMPLE, "sample").unwrap();
        assert_eq!(cfg.cases.len(), 2);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.transport, TransportSettings::default());
        let p = cfg.cases[1].sigma.as_ref().unwrap().build(None).unwrap();
        assert_eq!(p.codim(), 2);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let bad = SAMPLE.replace("h = 0.05", "hh = 0.05");
        assert!(ExperimentConfig::parse(&bad, "bad").is_err());
        let bad = SAMPLE.replace("radius = 1.0 }", "radius = 1.0, extra = 2 }");
        assert!(ExperimentConfig::parse(&bad, "bad").is_err());
    }

    #[test]
    fn seed_is_required() {
        let bad = SAMPLE.replace("seed = 42", "");
        assert!(ExperimentConfig::parse(&bad, "bad").is_err());
    }

    #[test]
    fn presets_reject_foreign_parameters() {
        let m = ManifoldSpec {
            preset: "euclidean".into(),
            dim: 2,
            alpha: Some(0.5),
            scale: None,
            coeffs: None,
            knots: None,
            values: None,
            slope: None,
            class: None,
        };
        assert!(m.build().is_err());
        let bad = SAMPLE.replace("k = 2, codim = 2", "k = 2, codim = 3");
        let err = ExperimentConfig::parse(&bad, "bad").unwrap_err();
        assert!(err.to_string().contains("codim 2"), "{err}");
    }

    #[test]
    fn duplicate_ids_are_errors() {
        let bad = SAMPLE.replace("id = \"curve\"", "id = \"disk\"");
        assert!(ExperimentConfig::parse(&bad, "bad").is_err());
    }
}
