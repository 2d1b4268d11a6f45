//! Executes one configured run and records what it wrote.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::{
    augmented_objective, bathtub_reconstruct, gradient_field, necessary_condition_check, objective,
    optimize, sensitivity_weight, shape_weight, NecessaryConditionReport, PolishReport, StopReason,
};
use crate::error::{Error, Result};
use crate::field::{control_budget, ControlShape, FieldRole, SpaceTimeField};
use crate::io::config::{Mode, RunConfig, Setup};
use crate::io::csv_field::field_to_csv;
use crate::pde::{solve_adjoint, solve_forward};
use crate::verification::{
    adjoint_identity, config_hash, constant_adjoint_error, entropy_diagnostic, gradient_vs_fd,
    logistic_oracle_error, mms_convergence, run_invariance_suite, sensitivity_vs_fd, CaseRecord,
    EntropyReport, InvarianceCase, InvarianceConfig, SuiteReport,
};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub mode: Mode,
    pub status: RunStatus,
    pub error: Option<String>,
    /// Verify mode only: whether every check passed.
    pub checks_passed: Option<bool>,
    pub wall_time_seconds: f64,
    pub files: Vec<FileEntry>,
    pub config: RunConfig,
}

impl RunManifest {
    /// Re-hashes every listed file under `dir` and returns the names that
    /// are missing or differ.
    pub fn verify_files(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| match std::fs::read(dir.join(&f.name)) {
                Ok(bytes) => sha256_hex(&bytes) != f.sha256 || bytes.len() as u64 != f.bytes,
                Err(_) => true,
            })
            .map(|f| f.name.clone())
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Outputs {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Outputs {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        self.files.push(FileEntry {
            name: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    fn field(&mut self, name: &str, field: &SpaceTimeField) -> Result<()> {
        let bytes = field_to_csv(field)?;
        self.write(name, &bytes)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Json {
            context: format!("serializing {name}"),
            source: e,
        })?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }
}

/// Runs `config`, writing outputs and `manifest.json` into its output
/// directory. On failure a manifest with status `failed` listing the files
/// written so far is still produced before the error is returned.
pub fn run(config: &RunConfig) -> Result<RunManifest> {
    let started = Instant::now();
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir)
        .map_err(|e| Error::io(format!("creating output directory {}", dir.display()), e))?;
    let mut out = Outputs {
        dir: dir.clone(),
        files: Vec::new(),
    };
    let result = execute(config, &mut out);
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode: config.mode,
        status: if result.is_ok() {
            RunStatus::Complete
        } else {
            RunStatus::Failed
        },
        error: result.as_ref().err().map(|e| e.to_string()),
        checks_passed: result.as_ref().ok().copied().flatten(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        files: out.files,
        config: config.clone(),
    };
    let text = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Json {
        context: "serializing manifest".into(),
        source: e,
    })?;
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    result.map(|_| manifest)
}

fn execute(config: &RunConfig, out: &mut Outputs) -> Result<Option<bool>> {
    let setup = config.setup()?;
    match config.mode {
        Mode::Forward => run_forward(config, &setup, out).map(|_| None),
        Mode::Adjoint => run_adjoint(config, &setup, out).map(|_| None),
        Mode::Optimize => run_optimize(config, &setup, out).map(|_| None),
        Mode::Verify => run_verify(config, &setup, out).map(Some),
    }
}

#[derive(Serialize)]
struct ForwardSummary {
    mode: Mode,
    objective: f64,
    augmented_objective: f64,
    budget: f64,
    budget_residual: f64,
    state_min: f64,
    state_max: f64,
    entropy: EntropyReport,
}

fn forward_summary(
    config: &RunConfig,
    state: &SpaceTimeField,
    control: &SpaceTimeField,
) -> ForwardSummary {
    let spec = &config.control;
    ForwardSummary {
        mode: config.mode,
        objective: objective(state),
        augmented_objective: augmented_objective(state, control, spec.penalty, spec.budget),
        budget: control_budget(control),
        budget_residual: control_budget(control) - spec.budget,
        state_min: state.min(),
        state_max: state.max(),
        entropy: entropy_diagnostic(state, crate::verification::entropy::DEFAULT_CLIP),
    }
}

fn run_forward(config: &RunConfig, setup: &Setup, out: &mut Outputs) -> Result<()> {
    let control = &setup.initial_control;
    let state = solve_forward(&setup.problem, control, &config.solver)?;
    out.field("state.csv", &state)?;
    out.field("control.csv", control)?;
    out.json("summary.json", &forward_summary(config, &state, control))
}

fn run_adjoint(config: &RunConfig, setup: &Setup, out: &mut Outputs) -> Result<()> {
    let control = &setup.initial_control;
    let spec = &config.control;
    let state = solve_forward(&setup.problem, control, &config.solver)?;
    let adjoint = solve_adjoint(&setup.problem, &state, control, &config.solver)?;
    let weight = sensitivity_weight(&state, &adjoint)?;
    let direction = gradient_field(
        &state,
        &adjoint,
        control,
        spec.penalty,
        spec.budget,
        spec.shape,
    )?;
    out.field("state.csv", &state)?;
    out.field("control.csv", control)?;
    out.field("adjoint.csv", &adjoint)?;
    out.field("sensitivity_weight.csv", &weight)?;
    out.field("descent_direction.csv", &direction)?;
    out.json("summary.json", &forward_summary(config, &state, control))
}

#[derive(Serialize)]
struct OptimizeSummary {
    mode: Mode,
    objective_history: Vec<f64>,
    accepted_at: Vec<usize>,
    iterations: usize,
    final_step: f64,
    stop_reason: StopReason,
    objective: f64,
    augmented_objective: f64,
    budget: f64,
    constraint_residual: f64,
    bang_bang_fraction: f64,
    polish: Option<PolishReport>,
    /// First-order check of the final iterate against random admissible doses.
    necessary_condition: NecessaryConditionReport,
    /// Same check for the bathtub control built from the final `g`.
    bathtub_necessary_condition: NecessaryConditionReport,
}

fn run_optimize(config: &RunConfig, setup: &Setup, out: &mut Outputs) -> Result<()> {
    let spec = &config.control;
    let result = optimize(
        &setup.problem,
        &setup.initial_control,
        spec,
        &config.optimizer,
        &config.solver,
    )?;
    let adjoint = solve_adjoint(
        &setup.problem,
        &result.state,
        &result.control,
        &config.solver,
    )?;
    let weight = shape_weight(&sensitivity_weight(&result.state, &adjoint)?, spec.shape);
    let samples = config.verify.necessary_samples;
    let necessary = necessary_condition_check(
        &result.control,
        &weight,
        spec.upper_bound,
        spec.budget,
        samples,
        config.seed,
    )?;
    let bathtub = bathtub_reconstruct(&weight, spec.budget, spec.upper_bound)?;
    let bathtub_check = necessary_condition_check(
        &bathtub.control,
        &weight,
        spec.upper_bound,
        spec.budget,
        samples,
        config.seed,
    )?;

    out.field("control.csv", &result.control)?;
    out.field("state.csv", &result.state)?;
    out.field("adjoint.csv", &adjoint)?;
    out.field("sensitivity_weight.csv", &weight)?;
    out.field("bathtub_control.csv", &bathtub.control)?;
    let mut history = String::from("accepted,iteration,augmented_objective\n");
    for (k, (v, it)) in result
        .objective_history
        .iter()
        .zip(&result.accepted_at)
        .enumerate()
    {
        history.push_str(&format!(
            "{k},{it},{}\n",
            crate::io::csv_field::format_float(*v)
        ));
    }
    out.write("history.csv", history.as_bytes())?;
    out.json(
        "summary.json",
        &OptimizeSummary {
            mode: config.mode,
            objective: objective(&result.state),
            augmented_objective: *result
                .objective_history
                .last()
                .expect("initial value recorded"),
            budget: control_budget(&result.control),
            objective_history: result.objective_history,
            accepted_at: result.accepted_at,
            iterations: result.iterations,
            final_step: result.final_step,
            stop_reason: result.stop_reason,
            constraint_residual: result.constraint_residual,
            bang_bang_fraction: result.bang_bang_fraction,
            polish: result.polish,
            necessary_condition: necessary,
            bathtub_necessary_condition: bathtub_check,
        },
    )
}

/// Seeded admissible-shape direction with entries in `[−1, 1]`.
fn random_direction(setup: &Setup, shape: ControlShape, seed: u64, stream: u64) -> SpaceTimeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let grid = &setup.grid;
    let per_node: Vec<f64> = (0..grid.num_time_nodes())
        .map(|_| rng.gen_range(-1.0..=1.0))
        .collect();
    let mut field = match shape {
        ControlShape::UniformInSpace => {
            SpaceTimeField::from_fn(grid, FieldRole::Control, |_, n| per_node[n])
        }
        ControlShape::Distributed => {
            SpaceTimeField::from_fn(grid, FieldRole::Control, |_, _| rng.gen_range(-1.0..=1.0))
        }
    };
    field.mirror_final_node();
    field
}

#[derive(Serialize)]
struct VerifySummary {
    mode: Mode,
    passed: bool,
    checks: usize,
    failures: Vec<CaseRecord>,
}

fn run_verify(config: &RunConfig, setup: &Setup, out: &mut Outputs) -> Result<bool> {
    let hash = config_hash(config);
    let spec = &config.control;
    let solver = &config.solver;
    let settings = &config.verify;
    let at_most = |metric: &str, value: f64, threshold: f64| {
        CaseRecord::at_most(&hash, Some(config.seed), metric, value, threshold)
    };

    let invariance = settings
        .invariance
        .clone()
        .unwrap_or_else(|| InvarianceConfig {
            cases: vec![InvarianceCase {
                grid: config.grid.clone(),
                tissue: config.tissue.clone(),
            }],
            seeds: settings.invariance_seeds,
            base_seed: config.seed,
            proliferation: spec.proliferation,
            upper_bound: spec.upper_bound,
            solver: solver.clone(),
        });
    let mut report: SuiteReport = run_invariance_suite(&invariance)?;
    let mut records = Vec::new();

    records.push(at_most(
        "logistic_relative_error",
        logistic_oracle_error(0.5, 1.0, 0.5, 500, solver)?,
        1e-3,
    ));
    let scale = config.grid.final_time;
    records.push(at_most(
        "adjoint_constant_case_error",
        constant_adjoint_error(&setup.grid, &setup.tissue, spec.proliferation, solver)? / scale,
        1e-10,
    ));

    let control = &setup.initial_control;
    let pert = random_direction(setup, ControlShape::Distributed, config.seed, 1);
    let sens = sensitivity_vs_fd(&setup.problem, control, &pert, settings.fd_epsilon, solver)?;
    records.push(at_most(
        "sensitivity_relative_difference",
        sens.relative_difference,
        1e-3,
    ));
    records.push(at_most(
        "adjoint_identity_relative_error",
        adjoint_identity(&setup.problem, control, &pert, solver)?,
        1e-9,
    ));
    let dir = random_direction(setup, spec.shape, config.seed, 2);
    let grad = gradient_vs_fd(
        &setup.problem,
        control,
        &dir,
        spec.shape,
        spec.penalty,
        spec.budget,
        settings.fd_epsilon,
        solver,
    )?;
    records.push(at_most(
        "gradient_relative_error",
        grad.relative_error,
        1e-4,
    ));

    let mms = mms_convergence(&settings.mms)?;
    records.push(at_most(
        "mms_temporal_order_deviation",
        (mms.temporal.order - 1.0).abs(),
        0.2,
    ));
    records.push(at_most(
        "mms_spatial_order_deviation",
        (mms.spatial.order - 2.0).abs(),
        0.2,
    ));

    let state = solve_forward(&setup.problem, control, solver)?;
    let adjoint = solve_adjoint(&setup.problem, &state, control, solver)?;
    let weight = shape_weight(&sensitivity_weight(&state, &adjoint)?, spec.shape);
    let bathtub = bathtub_reconstruct(&weight, spec.budget, spec.upper_bound)?;
    records.push(at_most(
        "bathtub_budget_residual",
        (control_budget(&bathtub.control) - spec.budget).abs() / spec.budget,
        1e-10,
    ));
    let nc = necessary_condition_check(
        &bathtub.control,
        &weight,
        spec.upper_bound,
        spec.budget,
        settings.necessary_samples,
        config.seed,
    )?;
    records.push(at_most(
        "necessary_condition_violation",
        nc.max_violation,
        crate::control::necessary::VIOLATION_TOLERANCE,
    ));

    let u0 = setup.problem.initial_state();
    if u0.iter().all(|&v| (1e-3..=1.0 - 1e-3).contains(&v)) {
        let entropy = entropy_diagnostic(&state, crate::verification::entropy::DEFAULT_CLIP);
        records.push(at_most(
            "entropy_clipped",
            entropy.clipped as u8 as f64,
            0.0,
        ));
    }

    report.records.extend(records);
    let passed = report.passed();
    out.json("verification_report.json", &report)?;
    out.json(
        "summary.json",
        &VerifySummary {
            mode: config.mode,
            passed,
            checks: report.records.len(),
            failures: report.failures().cloned().collect(),
        },
    )?;
    Ok(passed)
}
