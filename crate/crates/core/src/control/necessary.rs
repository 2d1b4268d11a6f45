//! Sampled check of the first-order condition `∫∫R*·g ≤ ∫∫R·g` for all
//! admissible `R`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{control_budget, inner_product, FieldRole, SpaceTimeField, TimeRule};
use crate::grid::Grid;

/// Violations smaller than this are attributed to rounding.
pub const VIOLATION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessaryConditionReport {
    /// Random samples plus one transport sample built from the candidate.
    pub samples: usize,
    pub candidate_value: f64,
    pub best_sample_value: f64,
    /// `max_k (∫∫R*g − ∫∫R_k g)`; positive means some sample does better.
    pub max_violation: f64,
    pub violations: usize,
    pub candidate_budget_residual: f64,
}

impl NecessaryConditionReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Draws admissible control number `index` for `seed`. Each index gets its
/// own ChaCha stream, so samples do not depend on evaluation order.
pub fn random_feasible_control(
    grid: &Grid,
    upper_bound: f64,
    budget: f64,
    seed: u64,
    index: u64,
) -> SpaceTimeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let kind = index % 3;
    let density: f64 = rng.gen_range(0.05..0.95);
    let mut field = SpaceTimeField::from_fn(grid, FieldRole::Control, |_, _| match kind {
        0 => rng.gen_range(-0.5..1.5) * upper_bound,
        1 => {
            if rng.gen_bool(density) {
                upper_bound
            } else {
                0.0
            }
        }
        _ => rng.gen_range(0.0..1.0) * upper_bound,
    });
    for v in field.values_mut() {
        *v = v.clamp(0.0, upper_bound);
    }
    field.mirror_final_node();
    rescale_to_budget(&field, upper_bound, budget)
}

/// Mixes `field` toward 0 (too much dose) or toward `M` (too little) so the
/// budget is met while staying inside `[0, M]`.
fn rescale_to_budget(field: &SpaceTimeField, upper_bound: f64, budget: f64) -> SpaceTimeField {
    let current = control_budget(field);
    let grid = field.grid();
    let full = upper_bound * grid.domain_measure() * grid.final_time();
    if current > budget {
        let s = budget / current;
        field.map(|v| s * v)
    } else if current < budget {
        let s = (budget - current) / (full - current);
        field.map(|v| (v + s * (upper_bound - v)).min(upper_bound))
    } else {
        field.clone()
    }
}

/// Moves as much dose as possible from the highest-`g` atom carrying dose to
/// the lowest-`g` atom with room, keeping the budget fixed.
fn transport_sample(
    candidate: &SpaceTimeField,
    g: &SpaceTimeField,
    upper_bound: f64,
) -> SpaceTimeField {
    let grid = candidate.grid();
    let atoms = grid.num_cells() * grid.num_time_steps();
    let r = &candidate.values()[..atoms];
    let w = &g.values()[..atoms];
    let donor = (0..atoms)
        .filter(|&a| r[a] > 0.0)
        .max_by(|&a, &b| w[a].total_cmp(&w[b]));
    let receiver = (0..atoms)
        .filter(|&a| r[a] < upper_bound)
        .min_by(|&a, &b| w[a].total_cmp(&w[b]));
    let mut out = candidate.clone();
    if let (Some(d), Some(t)) = (donor, receiver) {
        if d != t && w[d] > w[t] {
            let moved = r[d].min(upper_bound - r[t]);
            let v = out.values_mut();
            v[d] -= moved;
            v[t] += moved;
            out.mirror_final_node();
        }
    }
    out
}

pub fn necessary_condition_check(
    candidate: &SpaceTimeField,
    g: &SpaceTimeField,
    upper_bound: f64,
    budget: f64,
    samples: usize,
    seed: u64,
) -> Result<NecessaryConditionReport> {
    candidate.check_layout(g)?;
    let grid = *candidate.grid();
    let candidate_value = inner_product(candidate, g, TimeRule::StepLeft)?;

    let mut values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let sample = random_feasible_control(&grid, upper_bound, budget, seed, k);
            inner_product(&sample, g, TimeRule::StepLeft).expect("same grid")
        })
        .collect();
    let transported = transport_sample(candidate, g, upper_bound);
    values.push(inner_product(&transported, g, TimeRule::StepLeft)?);

    let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_violation = values
        .iter()
        .map(|v| candidate_value - v)
        .fold(f64::NEG_INFINITY, f64::max);
    let violations = values
        .iter()
        .filter(|&&v| candidate_value - v > VIOLATION_TOLERANCE)
        .count();
    Ok(NecessaryConditionReport {
        samples: values.len(),
        candidate_value,
        best_sample_value: best,
        max_violation,
        violations,
        candidate_budget_residual: control_budget(candidate) - budget,
    })
}
