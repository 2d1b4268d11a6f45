//! Randomized range, positivity and conservation checks on the forward solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldRole, SpaceTimeField};
use crate::grid::{build_grid, GridConfig};
use crate::pde::{solve_forward, ForwardProblem, SolverConfig};
use crate::tissue::TissueConfig;
use crate::verification::report::{config_hash, CaseRecord, SuiteReport};

/// Tolerance on leaving `[0, 1]`.
pub const RANGE_TOLERANCE: f64 = 1e-10;
/// Relative drift of `∫_Ω u` allowed when the reaction vanishes.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceCase {
    pub grid: GridConfig,
    pub tissue: TissueConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceConfig {
    pub cases: Vec<InvarianceCase>,
    /// Number of random draws per case; draw `k` uses seed `base_seed + k`.
    pub seeds: u64,
    #[serde(default)]
    pub base_seed: u64,
    pub proliferation: f64,
    pub upper_bound: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Copy)]
enum Draw {
    /// Random `u₀ ∈ [0,1]`, random `R ∈ [0,M]`.
    Random,
    /// Random `u₀`, `R ≡ ρ`.
    Conservative,
    /// `u₀ ≡ 0`, random `R`.
    Zero,
}

pub fn run_invariance_suite(config: &InvarianceConfig) -> Result<SuiteReport> {
    if config.cases.is_empty() {
        return Err(Error::config(
            "invariance.cases",
            "at least one case is required",
        ));
    }
    if !(config.upper_bound.is_finite() && config.upper_bound >= 0.0) {
        return Err(Error::config(
            "invariance.upper_bound",
            "M must be nonnegative",
        ));
    }
    config.solver.validate()?;
    let mut jobs = Vec::new();
    for (k, case) in config.cases.iter().enumerate() {
        let grid = build_grid(&case.grid)
            .map_err(|e| Error::config(format!("invariance.cases[{k}]"), e.to_string()))?;
        let tissue = case
            .tissue
            .build(&grid)
            .map_err(|e| Error::config(format!("invariance.cases[{k}]"), e.to_string()))?;
        let hash = config_hash(case);
        for s in 0..config.seeds {
            for draw in [Draw::Random, Draw::Conservative, Draw::Zero] {
                jobs.push((
                    grid,
                    tissue.clone(),
                    hash.clone(),
                    config.base_seed + s,
                    draw,
                ));
            }
        }
    }

    let records: Vec<Result<Vec<CaseRecord>>> = jobs
        .into_par_iter()
        .map(|(grid, tissue, hash, seed, draw)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cells = grid.num_cells();
            let u0: Vec<f64> = match draw {
                Draw::Zero => vec![0.0; cells],
                _ => (0..cells).map(|_| rng.gen_range(0.0..=1.0)).collect(),
            };
            let rho = config.proliferation;
            let control = match draw {
                Draw::Conservative => SpaceTimeField::constant(&grid, FieldRole::Control, rho),
                _ => SpaceTimeField::from_fn(&grid, FieldRole::Control, |_, _| {
                    rng.gen_range(0.0..=config.upper_bound)
                }),
            };
            let interior = u0.iter().all(|&v| v > 0.0 && v < 1.0);
            let problem = ForwardProblem::new(grid, tissue, rho, u0)?;
            let state = solve_forward(&problem, &control, &config.solver)?;
            Ok(case_records(&hash, seed, draw, &state, interior))
        })
        .collect();

    let mut report = SuiteReport::default();
    for r in records {
        report.records.extend(r?);
    }
    Ok(report)
}

fn case_records(
    hash: &str,
    seed: u64,
    draw: Draw,
    state: &SpaceTimeField,
    interior: bool,
) -> Vec<CaseRecord> {
    let below = (-state.min()).max(0.0);
    let above = (state.max() - 1.0).max(0.0);
    let mut out = vec![
        CaseRecord::at_most(
            hash,
            Some(seed),
            "nonnegativity_violation",
            below,
            RANGE_TOLERANCE,
        ),
        CaseRecord::at_most(
            hash,
            Some(seed),
            "range_violation",
            below.max(above),
            RANGE_TOLERANCE,
        ),
    ];
    match draw {
        Draw::Random => {
            if interior {
                let hits = state
                    .values()
                    .iter()
                    .filter(|&&v| v == 0.0 || v == 1.0)
                    .count();
                let fraction = hits as f64 / state.values().len() as f64;
                out.push(CaseRecord::at_most(
                    hash,
                    Some(seed),
                    "level_set_fraction",
                    fraction,
                    0.0,
                ));
            }
        }
        Draw::Conservative => {
            let m0 = state.spatial_integral(0);
            let drift = (0..state.num_time_nodes())
                .map(|n| (state.spatial_integral(n) - m0).abs())
                .fold(0.0, f64::max)
                / m0.abs().max(f64::MIN_POSITIVE);
            out.push(CaseRecord::at_most(
                hash,
                Some(seed),
                "mass_drift",
                drift,
                MASS_TOLERANCE,
            ));
        }
        Draw::Zero => {
            let size = state.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            out.push(CaseRecord::at_most(
                hash,
                Some(seed),
                "zero_state_max",
                size,
                0.0,
            ));
        }
    }
    out
}
