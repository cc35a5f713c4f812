//! Run configuration: a single TOML file naming presets and numeric
//! parameters, no inline code. Parsing is strict (unknown keys rejected) and
//! never panics on malformed input; semantic checks happen when the typed
//! scenario is built for a concrete dimension.

use serde::Deserialize;
use std::path::Path;
use thiserror::Error;

use crate::boundary::{
    ApproachFamily, BoundaryData, BoundaryProfile, CounterexampleData, DiscSeed, PiecewisePiece,
    RegularityClass,
};
use crate::geometry::{Direction, Face, PhasePoint, Position, SlabDomain};
use crate::medium::{GridField, Medium, PhaseFunction, ScalarField};
use crate::quadrature::QuadratureSpec;
use crate::solver::SolveOptions;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config error: {0}")]
    Semantic(String),
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn semantic(msg: impl Into<String>) -> ConfigError {
    ConfigError::Semantic(msg.into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub medium: MediumConfig,
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub disc: DiscConfig,
    #[serde(default)]
    pub counterexample: CounterexampleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dimension: usize,
    pub lateral_min: Vec<f64>,
    pub lateral_max: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub mu_t: FieldConfig,
    pub mu_s: FieldConfig,
    pub phase: PhaseConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldConfig {
    Constant {
        value: f64,
    },
    DepthAffine {
        intercept: f64,
        slope: f64,
    },
    Bump {
        base: f64,
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    Grid {
        path: String,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhaseConfig {
    Isotropic,
    LinearAnisotropic { coefficient: f64 },
    Scaled { factor: f64, base: Box<PhaseConfig> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub preset: PresetConfig,
    #[serde(default)]
    pub seeds: Vec<SeedConfig>,
    /// Override for the declared regularity class; defaults per preset.
    #[serde(default)]
    pub regularity: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PresetConfig {
    Constant {
        value: f64,
    },
    LateralStep {
        #[serde(default)]
        axis: usize,
        threshold: f64,
        low: f64,
        high: f64,
    },
    AngularStep {
        split: f64,
        low: f64,
        high: f64,
    },
    DirectionalLinear {
        mean: f64,
        amplitude: f64,
    },
    Counterexample {
        x_bar: Vec<f64>,
    },
    Piecewise {
        pieces: Vec<PieceConfig>,
        default: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    pub face: String,
    pub lateral: Vec<f64>,
    pub theta: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub x: Vec<f64>,
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
    #[serde(default)]
    pub theta: Option<f64>,
    pub jump: f64,
    #[serde(default = "default_approach")]
    pub approach: String,
    #[serde(default)]
    pub axis: usize,
}

fn default_approach() -> String {
    "lateral".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub angular_nodes: usize,
    pub azimuth_nodes: usize,
    pub ray_panels_per_unit: f64,
    pub tail_epsilon: f64,
    pub phase_tolerance: f64,
    pub validation_samples: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Self {
            angular_nodes: q.angular_nodes,
            azimuth_nodes: q.azimuth_nodes,
            ray_panels_per_unit: q.ray_panels_per_unit,
            tail_epsilon: q.tail_epsilon,
            phase_tolerance: q.phase_tolerance,
            validation_samples: q.validation_samples,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub lateral: Vec<usize>,
    pub depth: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lateral: vec![33],
            depth: 24,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub tol: f64,
    pub max_iterations: usize,
    pub retain_iterates: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        let o = SolveOptions::default();
        Self {
            tol: o.tol,
            max_iterations: o.max_iterations,
            retain_iterates: o.retain_iterates,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub samples: usize,
    pub probes: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 20_000,
            probes: 10,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscConfig {
    pub t_values: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl Default for DiscConfig {
    fn default() -> Self {
        Self {
            t_values: vec![0.25, 0.5, 0.75],
            offsets: vec![4e-3, 2e-3, 1e-3],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleConfig {
    pub fd_steps: Vec<f64>,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            fd_steps: vec![1e-2, 1e-3, 1e-4],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dump_iterates: bool,
}

#[allow(clippy::derivable_impls)]
impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dump_iterates: false,
        }
    }
}

/// Everything a run needs, typed for a concrete dimension.
pub struct Scenario<const D: usize> {
    pub domain: SlabDomain<D>,
    pub medium: Medium<D>,
    pub boundary: BoundaryData<D>,
    pub quad: QuadratureSpec,
    pub lateral_dims: Vec<usize>,
    pub depth_nodes: usize,
    pub solve: SolveOptions,
}

impl RunConfig {
    /// Parse from TOML text. Never panics; all failures are typed errors.
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.check_shape()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str(&text)
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension
    }

    /// Structural checks that do not depend on the concrete dimension type.
    fn check_shape(&self) -> Result<(), ConfigError> {
        let d = self.domain.dimension;
        if !(2..=3).contains(&d) {
            return Err(semantic(format!("dimension must be 2 or 3, got {d}")));
        }
        if self.domain.lateral_min.len() != d - 1 || self.domain.lateral_max.len() != d - 1 {
            return Err(semantic(format!(
                "lateral_min/lateral_max need {} entries for dimension {d}",
                d - 1
            )));
        }
        for (lo, hi) in self
            .domain
            .lateral_min
            .iter()
            .zip(self.domain.lateral_max.iter())
        {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(semantic("lateral window must be finite with min < max"));
            }
        }
        if self.grid.lateral.len() != d - 1 {
            return Err(semantic(format!(
                "grid.lateral needs {} entries for dimension {d}",
                d - 1
            )));
        }
        if self.grid.lateral.iter().any(|&n| n < 2 || n > 100_000) || self.grid.depth < 2 {
            return Err(semantic("grid node counts must be in [2, 100000]"));
        }
        if !(self.solve.tol > 0.0 && self.solve.tol.is_finite()) {
            return Err(semantic("solve.tol must be positive"));
        }
        Ok(())
    }

    /// Builds the typed scenario; `base_dir` anchors relative grid CSV paths.
    pub fn build_scenario<const D: usize>(
        &self,
        base_dir: &Path,
    ) -> Result<Scenario<D>, ConfigError> {
        if self.domain.dimension != D {
            return Err(semantic(format!(
                "config is dimension {}, scenario built for {D}",
                self.domain.dimension
            )));
        }
        let window: Vec<(f64, f64)> = self
            .domain
            .lateral_min
            .iter()
            .zip(self.domain.lateral_max.iter())
            .map(|(&lo, &hi)| (lo, hi))
            .collect();
        let domain =
            SlabDomain::<D>::new(&window).map_err(|e| semantic(format!("domain: {e}")))?;

        let medium = Medium {
            mu_t: build_field::<D>(&self.medium.mu_t, base_dir)?,
            mu_s: build_field::<D>(&self.medium.mu_s, base_dir)?,
            phase: build_phase(&self.medium.phase),
        };

        let quad = QuadratureSpec {
            angular_nodes: self.quadrature.angular_nodes,
            azimuth_nodes: self.quadrature.azimuth_nodes,
            ray_panels_per_unit: self.quadrature.ray_panels_per_unit,
            tail_epsilon: self.quadrature.tail_epsilon,
            phase_tolerance: self.quadrature.phase_tolerance,
            validation_samples: self.quadrature.validation_samples,
        };
        quad.validate()
            .map_err(|e| semantic(format!("quadrature: {e}")))?;

        let boundary = build_boundary::<D>(&self.boundary)?;

        Ok(Scenario {
            domain,
            medium,
            boundary,
            quad,
            lateral_dims: self.grid.lateral.clone(),
            depth_nodes: self.grid.depth,
            solve: SolveOptions {
                tol: self.solve.tol,
                max_iterations: self.solve.max_iterations,
                retain_iterates: self.solve.retain_iterates,
            },
        })
    }
}

fn to_array<const D: usize>(v: &[f64], what: &str) -> Result<[f64; D], ConfigError> {
    if v.len() != D {
        return Err(semantic(format!("{what} needs {D} entries, got {}", v.len())));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(semantic(format!("{what} entries must be finite")));
    }
    let mut out = [0.0; D];
    out.copy_from_slice(v);
    Ok(out)
}

fn build_field<const D: usize>(
    cfg: &FieldConfig,
    base_dir: &Path,
) -> Result<ScalarField<D>, ConfigError> {
    Ok(match cfg {
        FieldConfig::Constant { value } => {
            if !value.is_finite() {
                return Err(semantic("field value must be finite"));
            }
            ScalarField::Constant(*value)
        }
        FieldConfig::DepthAffine { intercept, slope } => {
            if !intercept.is_finite() || !slope.is_finite() {
                return Err(semantic("depth-affine parameters must be finite"));
            }
            ScalarField::DepthAffine {
                intercept: *intercept,
                slope: *slope,
            }
        }
        FieldConfig::Bump {
            base,
            amplitude,
            center,
            width,
        } => {
            if !(width.is_finite() && *width > 0.0) || !base.is_finite() || !amplitude.is_finite()
            {
                return Err(semantic("bump parameters must be finite with width > 0"));
            }
            ScalarField::Bump {
                base: *base,
                amplitude: *amplitude,
                center: to_array::<D>(center, "bump center")?,
                width: *width,
            }
        }
        FieldConfig::Grid { path } => {
            let full = base_dir.join(path);
            let text = std::fs::read_to_string(&full).map_err(|source| ConfigError::Io {
                path: full.display().to_string(),
                source,
            })?;
            ScalarField::Grid(
                GridField::<D>::from_csv_str(&text)
                    .map_err(|e| semantic(format!("grid field {path}: {e}")))?,
            )
        }
    })
}

fn build_phase(cfg: &PhaseConfig) -> PhaseFunction {
    match cfg {
        PhaseConfig::Isotropic => PhaseFunction::Isotropic,
        PhaseConfig::LinearAnisotropic { coefficient } => PhaseFunction::LinearAnisotropic {
            coefficient: *coefficient,
        },
        PhaseConfig::Scaled { factor, base } => PhaseFunction::Scaled {
            base: Box::new(build_phase(base)),
            factor: *factor,
        },
    }
}

fn parse_regularity(s: &str) -> Result<RegularityClass, ConfigError> {
    Ok(match s {
        "condition1" => RegularityClass::Condition1,
        "condition2" => RegularityClass::Condition2,
        "both" => RegularityClass::Both,
        "neither" => RegularityClass::Neither,
        other => {
            return Err(semantic(format!(
                "unknown regularity {other:?} (expected condition1, condition2, both, neither)"
            )))
        }
    })
}

fn default_regularity(preset: &PresetConfig) -> RegularityClass {
    match preset {
        PresetConfig::Constant { .. } | PresetConfig::DirectionalLinear { .. } => {
            RegularityClass::Both
        }
        PresetConfig::LateralStep { .. } => RegularityClass::Condition2,
        PresetConfig::AngularStep { .. } => RegularityClass::Condition1,
        PresetConfig::Counterexample { .. } => RegularityClass::Neither,
        PresetConfig::Piecewise { .. } => RegularityClass::Neither,
    }
}

fn build_boundary<const D: usize>(cfg: &BoundaryConfig) -> Result<BoundaryData<D>, ConfigError> {
    let profile = match &cfg.preset {
        PresetConfig::Constant { value } => {
            if !value.is_finite() {
                return Err(semantic("boundary value must be finite"));
            }
            BoundaryProfile::Constant(*value)
        }
        PresetConfig::LateralStep {
            axis,
            threshold,
            low,
            high,
        } => {
            if *axis >= D - 1 {
                return Err(semantic(format!(
                    "lateral-step axis {axis} out of range for dimension {D}"
                )));
            }
            if ![threshold, low, high].iter().all(|v| v.is_finite()) {
                return Err(semantic("lateral-step parameters must be finite"));
            }
            BoundaryProfile::LateralStep {
                axis: *axis,
                threshold: *threshold,
                low: *low,
                high: *high,
            }
        }
        PresetConfig::AngularStep { split, low, high } => {
            if ![split, low, high].iter().all(|v| v.is_finite()) {
                return Err(semantic("angular-step parameters must be finite"));
            }
            BoundaryProfile::AngularStep {
                split: *split,
                low: *low,
                high: *high,
            }
        }
        PresetConfig::DirectionalLinear { mean, amplitude } => {
            if !mean.is_finite() || !amplitude.is_finite() {
                return Err(semantic("directional-linear parameters must be finite"));
            }
            BoundaryProfile::DirectionalLinear {
                mean: *mean,
                amplitude: *amplitude,
            }
        }
        PresetConfig::Counterexample { x_bar } => {
            let arr = to_array::<2>(x_bar, "x_bar")?;
            BoundaryProfile::Counterexample(
                CounterexampleData::new(arr).map_err(|e| semantic(e.to_string()))?,
            )
        }
        PresetConfig::Piecewise { pieces, default } => {
            if !default.is_finite() {
                return Err(semantic("piecewise default must be finite"));
            }
            let mut out = Vec::with_capacity(pieces.len());
            for p in pieces {
                let face = match p.face.as_str() {
                    "bottom" => Face::Bottom,
                    "top" => Face::Top,
                    other => return Err(semantic(format!("unknown face {other:?}"))),
                };
                if p.lateral.len() != 2 || p.theta.len() != 2 || !p.value.is_finite() {
                    return Err(semantic(
                        "piece needs lateral = [lo, hi], theta = [lo, hi], finite value",
                    ));
                }
                out.push(PiecewisePiece {
                    face,
                    lateral: (p.lateral[0], p.lateral[1]),
                    theta: (p.theta[0], p.theta[1]),
                    value: p.value,
                });
            }
            BoundaryProfile::Piecewise {
                pieces: out,
                default: *default,
            }
        }
    };

    let declared = match &cfg.regularity {
        Some(s) => parse_regularity(s)?,
        None => default_regularity(&cfg.preset),
    };

    let mut seeds = Vec::with_capacity(cfg.seeds.len());
    for (i, s) in cfg.seeds.iter().enumerate() {
        let x = to_array::<D>(&s.x, "seed x")?;
        let xi = match (&s.direction, s.theta) {
            (Some(v), None) => {
                let arr = to_array::<D>(v, "seed direction")?;
                Direction::from_vector(arr)
                    .map_err(|e| semantic(format!("seed {i} direction: {e}")))?
            }
            (None, Some(theta)) => {
                if D != 2 {
                    return Err(semantic("seed theta is only valid for dimension 2"));
                }
                if !theta.is_finite() {
                    return Err(semantic("seed theta must be finite"));
                }
                let mut c = [0.0; D];
                c[0] = theta.cos();
                c[D - 1] = theta.sin();
                Direction::new(c).map_err(|e| semantic(format!("seed {i} theta: {e}")))?
            }
            _ => {
                return Err(semantic(format!(
                    "seed {i} needs exactly one of direction or theta"
                )))
            }
        };
        let approach = match s.approach.as_str() {
            "lateral" => {
                if s.axis >= D - 1 {
                    return Err(semantic(format!("seed {i} axis out of range")));
                }
                ApproachFamily::Lateral { axis: s.axis }
            }
            "angular" => {
                if D != 2 {
                    return Err(semantic("angular approach is only valid for dimension 2"));
                }
                ApproachFamily::Angular
            }
            other => return Err(semantic(format!("unknown approach {other:?}"))),
        };
        let pos = Position::<D>::new(x).map_err(|e| semantic(format!("seed {i}: {e}")))?;
        let point =
            PhasePoint::new(pos, xi).map_err(|e| semantic(format!("seed {i}: {e}")))?;
        seeds.push(
            DiscSeed::new(point, s.jump, approach)
                .map_err(|e| semantic(format!("seed {i}: {e}")))?,
        );
    }

    BoundaryData::new(profile, seeds, declared).map_err(|e| semantic(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[domain]
dimension = 2
lateral_min = [-1.0]
lateral_max = [1.0]

[medium]
mu_t = { kind = "constant", value = 1.0 }
mu_s = { kind = "constant", value = 0.5 }
phase = { kind = "isotropic" }

[boundary]
preset = { kind = "constant", value = 1.0 }
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = RunConfig::from_str(MINIMAL).unwrap();
        assert_eq!(cfg.dimension(), 2);
        let sc = cfg.build_scenario::<2>(Path::new(".")).unwrap();
        assert_eq!(sc.boundary.sup_norm(), 1.0);
        assert_eq!(sc.lateral_dims, vec![33]);
    }

    #[test]
    fn full_config_with_seeds() {
        let text = r#"
[domain]
dimension = 2
lateral_min = [-2.0]
lateral_max = [2.0]

[medium]
mu_t = { kind = "depth-affine", intercept = 1.0, slope = 0.5 }
mu_s = { kind = "bump", base = 0.1, amplitude = 0.2, center = [0.0, 0.5], width = 0.4 }
phase = { kind = "linear-anisotropic", coefficient = 0.5 }

[boundary]
preset = { kind = "lateral-step", threshold = 0.0, low = 0.0, high = 1.0 }

[[boundary.seeds]]
x = [0.0, 0.0]
theta = 1.5707963267948966
jump = 1.0
approach = "lateral"

[quadrature]
angular_nodes = 16
tail_epsilon = 1e-6

[grid]
lateral = [17]
depth = 12

[solve]
tol = 1e-5
max_iterations = 40
"#;
        let cfg = RunConfig::from_str(text).unwrap();
        let sc = cfg.build_scenario::<2>(Path::new(".")).unwrap();
        assert_eq!(sc.boundary.seeds().len(), 1);
        assert_eq!(sc.quad.angular_nodes, 16);
        assert_eq!(sc.depth_nodes, 12);
    }

    #[test]
    fn wrong_dimension_rejected() {
        let text = MINIMAL.replace("dimension = 2", "dimension = 4");
        assert!(RunConfig::from_str(&text).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}\n[extra]\nfoo = 1\n");
        assert!(RunConfig::from_str(&text).is_err());
    }

    #[test]
    fn malformed_inputs_do_not_panic() {
        for text in [
            "",
            "not toml at all {{{",
            "[domain]\ndimension = 2",
            "[domain]\ndimension = 2\nlateral_min = [-1.0]\nlateral_max = [\"x\"]",
        ] {
            assert!(RunConfig::from_str(text).is_err());
        }
    }

    #[test]
    fn nonfinite_values_rejected() {
        let text = MINIMAL.replace("value = 1.0 }", "value = inf }");
        // inf parses as TOML but fails the semantic checks at build time.
        if let Ok(cfg) = RunConfig::from_str(&text) {
            assert!(cfg.build_scenario::<2>(Path::new(".")).is_err());
        }
    }

    #[test]
    fn counterexample_preset_builds() {
        let text = r#"
[domain]
dimension = 2
lateral_min = [-2.0]
lateral_max = [2.0]

[medium]
mu_t = { kind = "constant", value = 1.0 }
mu_s = { kind = "constant", value = 0.5 }
phase = { kind = "isotropic" }

[boundary]
preset = { kind = "counterexample", x_bar = [0.0, 0.5] }
"#;
        let cfg = RunConfig::from_str(text).unwrap();
        let sc = cfg.build_scenario::<2>(Path::new(".")).unwrap();
        assert_eq!(sc.boundary.declared_regularity(), RegularityClass::Neither);
        assert!(!sc.boundary.has_constant_lateral_tails());
    }

    #[test]
    fn seed_needs_direction_or_theta() {
        let text = r#"
[domain]
dimension = 2
lateral_min = [-1.0]
lateral_max = [1.0]

[medium]
mu_t = { kind = "constant", value = 1.0 }
mu_s = { kind = "constant", value = 0.5 }
phase = { kind = "isotropic" }

[boundary]
preset = { kind = "constant", value = 1.0 }

[[boundary.seeds]]
x = [0.0, 0.0]
jump = 1.0
"#;
        let cfg = RunConfig::from_str(text).unwrap();
        assert!(cfg.build_scenario::<2>(Path::new(".")).is_err());
    }
}
