//! Experiment configuration file.

use std::path::{Path, PathBuf};

use motives_core::acquisition::AcquisitionConfig;
use motives_core::{CostFunction, DemandCurve, Grid1D, JointModel, OracleFamily, SolverConfig};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Configuration problems, reported with the offending field path.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Solve,
    Oracle,
    Transparency,
    Acquire,
    Equilibrium,
    Sweep,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Solve => "solve",
            Kind::Oracle => "oracle",
            Kind::Transparency => "transparency",
            Kind::Acquire => "acquire",
            Kind::Equilibrium => "equilibrium",
            Kind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSpec,
    #[serde(default)]
    pub demand: DemandSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub acquisition: AcquisitionSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub x: DistSpec,
    pub y: DistSpec,
}

/// A marginal distribution discretized on a grid of cells.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Uniform {
        lo: f64,
        hi: f64,
        n: usize,
    },
    Beta {
        a: f64,
        b: f64,
        lo: f64,
        hi: f64,
        n: usize,
    },
    Triangular {
        lo: f64,
        mode: f64,
        hi: f64,
        n: usize,
    },
    Point {
        value: f64,
    },
    Discrete {
        points: Vec<f64>,
        weights: Vec<f64>,
    },
}

impl DistSpec {
    pub fn grid(&self) -> motives_core::Result<Grid1D> {
        match self {
            DistSpec::Uniform { lo, hi, n } => Grid1D::uniform(*lo, *hi, *n),
            DistSpec::Beta { a, b, lo, hi, n } => Grid1D::beta(*a, *b, *lo, *hi, *n),
            DistSpec::Triangular { lo, mode, hi, n } => Grid1D::triangular(*lo, *mode, *hi, *n),
            DistSpec::Point { value } => Grid1D::point(*value),
            DistSpec::Discrete { points, weights } => Grid1D::new(points.clone(), weights.clone()),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandSpec {
    #[default]
    Linear,
    Affine {
        a: f64,
        b: f64,
    },
    Square,
    Sqrt,
    Power {
        scale: f64,
        exponent: f64,
    },
    Logistic {
        midpoint: f64,
        steepness: f64,
    },
}

impl DemandSpec {
    pub fn curve(&self) -> DemandCurve {
        match self {
            DemandSpec::Linear => DemandCurve::linear(),
            DemandSpec::Affine { a, b } => DemandCurve::affine(*a, *b),
            DemandSpec::Square => DemandCurve::square(),
            DemandSpec::Sqrt => DemandCurve::sqrt(),
            DemandSpec::Power { scale, exponent } => DemandCurve::power(*scale, *exponent),
            DemandSpec::Logistic {
                midpoint,
                steepness,
            } => DemandCurve::logistic(*midpoint, *steepness),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Anchors,
    Tabular,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSpec {
    /// Anchor grid size per axis, or cells per axis for tabular enumeration.
    pub n: usize,
    pub family: OracleKind,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            n: 25,
            family: OracleKind::Anchors,
        }
    }
}

impl OracleSpec {
    pub fn family(&self) -> OracleFamily {
        match self.family {
            OracleKind::Anchors => OracleFamily::ThresholdAnchors,
            OracleKind::Tabular => OracleFamily::ExhaustiveTabular,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionSpec {
    pub tau: f64,
    pub cost: CostFunction,
    pub samples: usize,
    pub golden_tol: f64,
    pub dense_grid: usize,
}

impl Default for AcquisitionSpec {
    fn default() -> Self {
        let d = AcquisitionConfig::default();
        Self {
            tau: 0.0,
            cost: CostFunction::power(1.0 / 32.0, 2.0),
            samples: d.samples,
            golden_tol: d.golden_tol,
            dense_grid: d.dense_grid,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub taus: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            taus: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Artifact directory; the command line flag takes precedence.
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| ConfigError {
            path: e.path().to_string(),
            message: e.inner().message().trim().to_owned(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
        Ok(Self::parse(&text)?)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |path: &str, message: String| ConfigError {
            path: path.to_owned(),
            message,
        };
        if self.schema != SCHEMA_VERSION {
            return Err(bad(
                "schema",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    self.schema
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.acquisition.tau) {
            return Err(bad(
                "acquisition.tau",
                format!("{} is outside [0, 1]", self.acquisition.tau),
            ));
        }
        if let Some(k) = self
            .sweep
            .taus
            .iter()
            .position(|t| !(0.0..=1.0).contains(t))
        {
            return Err(bad(
                &format!("sweep.taus[{k}]"),
                format!("{} is outside [0, 1]", self.sweep.taus[k]),
            ));
        }
        if self.sweep.taus.is_empty() {
            return Err(bad("sweep.taus", "empty".into()));
        }
        self.acquisition
            .cost
            .validate()
            .map_err(|e| bad("acquisition.cost", e.to_string()))?;
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            seed: self.seed,
            ..self.solver.clone()
        }
    }

    pub fn acquisition_config(&self) -> AcquisitionConfig {
        AcquisitionConfig {
            solver: self.solver_config(),
            samples: self.acquisition.samples,
            golden_tol: self.acquisition.golden_tol,
            dense_grid: self.acquisition.dense_grid,
        }
    }

    /// Builds the joint model, attributing grid errors to the right field.
    pub fn joint_model(&self) -> Result<JointModel, ConfigError> {
        let x = self.model.x.grid().map_err(|e| ConfigError {
            path: "model.x".into(),
            message: e.to_string(),
        })?;
        let y = self.model.y.grid().map_err(|e| ConfigError {
            path: "model.y".into(),
            message: e.to_string(),
        })?;
        JointModel::product(x, y).map_err(|e| ConfigError {
            path: "model".into(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema = 1
kind = "solve"
[model.x]
dist = "uniform"
lo = 0.0
hi = 1.0
n = 10
[model.y]
dist = "uniform"
lo = 0.0
hi = 1.0
n = 10
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(c.kind, Kind::Solve);
        assert!(matches!(c.demand, DemandSpec::Linear));
        assert_eq!(c.sweep.taus.len(), 5);
        assert_eq!(c.joint_model().unwrap().nx(), 10);
    }

    #[test]
    fn errors_carry_the_field_path() {
        let e =
            ExperimentConfig::parse(&BASE.replace("n = 10\n[model.y]", "n = \"ten\"\n[model.y]"))
                .unwrap_err();
        // Tagged distributions report the table, not the inner key.
        assert_eq!(e.path, "model.x");
        assert!(e.message.contains("ten"), "{}", e.message);
        let e =
            ExperimentConfig::parse(&format!("{BASE}[acquisition]\ntau = \"half\"\n")).unwrap_err();
        assert_eq!(e.path, "acquisition.tau");
        let e = ExperimentConfig::parse(&format!("{BASE}[solver]\ntol = 1e-6\nbogus = 1\n"))
            .unwrap_err();
        assert!(e.path.starts_with("solver"), "{}", e.path);
        let e = ExperimentConfig::parse(&BASE.replace("schema = 1", "schema = 2")).unwrap_err();
        assert_eq!(e.path, "schema");
        let e =
            ExperimentConfig::parse(&format!("{BASE}[sweep]\ntaus = [0.0, 1.5]\n")).unwrap_err();
        assert_eq!(e.path, "sweep.taus[1]");
    }

    #[test]
    fn cost_and_demand_tables() {
        let text = format!(
            "{BASE}[demand]\nkind = \"power\"\nscale = 1.0\nexponent = 2.0\n[acquisition]\ntau = 0.5\ncost = {{ kind = \"tabulated\", theta = [0.0, 1.0], cost = [0.0, 0.1] }}\n"
        );
        let c = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(c.demand.curve().value(0.5), 0.25);
        assert!((c.acquisition.cost.value(0.5) - 0.05).abs() < 1e-15);
    }
}
