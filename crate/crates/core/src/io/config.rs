//! Run configuration: schema, parsing and eager validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::OptimizerConfig;
use crate::error::{Error, Result};
use crate::field::{ControlShape, ControlSpec, FieldRole, SpaceTimeField};
use crate::grid::{build_grid, Grid, GridConfig};
use crate::io::csv_field::{read_field_csv, read_state_csv};
use crate::pde::{ForwardProblem, SolverConfig};
use crate::tissue::{TissueConfig, TissueMap};
use crate::verification::{InvarianceConfig, MmsConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Forward,
    Adjoint,
    Optimize,
    Verify,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "forward" => Ok(Mode::Forward),
            "adjoint" => Ok(Mode::Adjoint),
            "optimize" => Ok(Mode::Optimize),
            "verify" => Ok(Mode::Verify),
            other => Err(Error::config(
                "mode",
                format!("unknown mode `{other}`, expected forward, adjoint, optimize or verify"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// `amplitude · exp(−decay · |x − center|²)`
    Gaussian {
        center: Vec<f64>,
        decay: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Constant {
        value: f64,
    },
    /// CSV in the field output format; the first time column is used.
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialControl {
    /// Spatially uniform, `values[k]` on `[breakpoints[k−1], breakpoints[k])`.
    Piecewise {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    Constant {
        value: f64,
    },
    /// `Γ / (|Ω|·T)` everywhere.
    BudgetUniform,
    /// `Γ / (|Ω_white|·T)` on white matter, zero on grey.
    WhiteUniform,
    /// CSV in the field output format with one column per time node.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySettings {
    /// Random draws per invariance case on the configured grid.
    pub invariance_seeds: u64,
    /// Replaces the default single-case suite built from the run's grid.
    pub invariance: Option<InvarianceConfig>,
    pub mms: MmsConfig,
    pub fd_epsilon: f64,
    /// Random admissible controls compared against the bathtub control.
    pub necessary_samples: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            invariance_seeds: 20,
            invariance: None,
            mms: MmsConfig::default(),
            fd_epsilon: 1e-4,
            necessary_samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub grid: GridConfig,
    pub tissue: TissueConfig,
    pub control: ControlSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    pub initial_state: InitialState,
    pub initial_control: InitialControl,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub verify: VerifySettings,
    /// Directory that relative input paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Grid, tissue and problem built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Grid,
    pub tissue: TissueMap,
    pub problem: ForwardProblem,
    pub initial_control: SpaceTimeField,
}

/// Parses JSON text, reporting the failing field path on error.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(
            if path == "." { "<root>".into() } else { path },
            e.into_inner().to_string(),
        )
    })?;
    config.base_dir = base_dir.to_path_buf();
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base)
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Checks every nested section and builds the problem once.
    pub fn validate(&self) -> Result<()> {
        self.setup().map(|_| ())
    }

    pub fn setup(&self) -> Result<Setup> {
        let grid = build_grid(&self.grid)?;
        let tissue = self.tissue.build(&grid)?;
        self.control.validate(&grid)?;
        self.solver.validate()?;
        self.optimizer.validate()?;
        self.validate_verify()?;
        let u0 = self.initial_state_values(&grid)?;
        if let Some(c) = u0.iter().position(|v| !(-1e-12..=1.0 + 1e-12).contains(v)) {
            return Err(Error::config(
                "initial_state",
                format!("value {} at cell {c} lies outside [0, 1]", u0[c]),
            ));
        }
        let initial_control = self.initial_control_field(&grid, &tissue)?;
        let problem = ForwardProblem::new(grid, tissue.clone(), self.control.proliferation, u0)?;
        Ok(Setup {
            grid,
            tissue,
            problem,
            initial_control,
        })
    }

    fn validate_verify(&self) -> Result<()> {
        let v = &self.verify;
        if !(v.fd_epsilon > 0.0 && v.fd_epsilon <= 1e-2) {
            return Err(Error::config(
                "verify.fd_epsilon",
                "expected ε in (0, 1e-2]",
            ));
        }
        if v.invariance_seeds == 0 && v.invariance.is_none() {
            return Err(Error::config(
                "verify.invariance_seeds",
                "at least one seed is required",
            ));
        }
        Ok(())
    }

    fn initial_state_values(&self, grid: &Grid) -> Result<Vec<f64>> {
        match &self.initial_state {
            InitialState::Gaussian {
                center,
                decay,
                amplitude,
            } => {
                if center.len() != grid.dim() {
                    return Err(Error::config(
                        "initial_state.center",
                        format!("expected {} coordinates, got {}", grid.dim(), center.len()),
                    ));
                }
                if !(decay.is_finite() && *decay >= 0.0) {
                    return Err(Error::config(
                        "initial_state.decay",
                        "decay must be non-negative",
                    ));
                }
                Ok(grid
                    .cell_centers()
                    .iter()
                    .map(|p| {
                        let r2: f64 = center.iter().zip(p).map(|(c, x)| (x - c).powi(2)).sum();
                        amplitude * (-decay * r2).exp()
                    })
                    .collect())
            }
            InitialState::Constant { value } => Ok(vec![*value; grid.num_cells()]),
            InitialState::File { path } => read_state_csv(&self.resolve(path), grid)
                .map_err(|e| Error::config("initial_state.path", e.to_string())),
        }
    }

    fn initial_control_field(&self, grid: &Grid, tissue: &TissueMap) -> Result<SpaceTimeField> {
        let spec = &self.control;
        let field = match &self.initial_control {
            InitialControl::Piecewise {
                breakpoints,
                values,
            } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(Error::config(
                        "initial_control.values",
                        format!(
                            "expected {} values for {} breakpoints, got {}",
                            breakpoints.len() + 1,
                            breakpoints.len(),
                            values.len()
                        ),
                    ));
                }
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::config(
                        "initial_control.breakpoints",
                        "breakpoints must increase strictly",
                    ));
                }
                let slack = 1e-12 * grid.final_time();
                SpaceTimeField::from_fn(grid, FieldRole::Control, |_, n| {
                    let t = grid.time(n);
                    values[breakpoints.iter().filter(|&&b| t >= b - slack).count()]
                })
            }
            InitialControl::Constant { value } => {
                SpaceTimeField::constant(grid, FieldRole::Control, *value)
            }
            InitialControl::BudgetUniform => {
                SpaceTimeField::constant(grid, FieldRole::Control, spec.constant_feasible(grid))
            }
            InitialControl::WhiteUniform => {
                let white = tissue.white_measure(grid);
                if white <= 0.0 {
                    return Err(Error::config(
                        "initial_control",
                        "white_uniform needs at least one white-matter cell",
                    ));
                }
                let level = spec.budget / (white * grid.final_time());
                let labels: Vec<bool> = (0..grid.num_cells())
                    .map(|c| tissue.labels()[c] == crate::tissue::Tissue::White)
                    .collect();
                SpaceTimeField::from_fn(grid, FieldRole::Control, |c, _| {
                    if labels[c] {
                        level
                    } else {
                        0.0
                    }
                })
            }
            InitialControl::File { path } => {
                read_field_csv(&self.resolve(path), grid, FieldRole::Control)
                    .map_err(|e| Error::config("initial_control.path", e.to_string()))?
            }
        };
        if !field.is_finite() {
            return Err(Error::config(
                "initial_control",
                "control contains non-finite values",
            ));
        }
        if spec.shape == ControlShape::UniformInSpace && !field.is_uniform_in_space() {
            return Err(Error::config(
                "initial_control",
                "control shape is uniform_in_space but the initial control varies in space",
            ));
        }
        Ok(field)
    }
}
