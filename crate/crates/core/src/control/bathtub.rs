//! Closed-form minimizer of `∫∫R·g` over `{0 ≤ R ≤ M, ∫∫R = Γ}`.
//!
//! Fill the sublevel sets of `g` from the bottom: `R = M` where `g < κ*`,
//! `R = C·M` on the level set `g = κ*`, zero elsewhere, with
//! `κ* = sup{κ : |{g < κ}| ≤ Γ/M}` and `C = (Γ/M − |E₁|)/|E₂|`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::field::{FieldRole, SpaceTimeField};

/// Level-set split of a list of weighted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct BathtubLevel {
    /// `κ*`; `+∞` when the budget covers every atom.
    pub level: f64,
    /// Atoms with `g < κ*`.
    pub below: Vec<usize>,
    /// Atoms with `g = κ*` (exact equality).
    pub at: Vec<usize>,
    pub measure_below: f64,
    pub measure_at: f64,
    /// Fraction `C ∈ [0, 1]` of the ceiling applied on the level set.
    pub plateau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathtubResult {
    pub split: BathtubLevel,
    /// Atom indices are flat `node·cells + cell` over the steps `n < N`.
    pub control: SpaceTimeField,
}

/// Splits atoms with weights `values` and measures `measures` so that the
/// filled measure equals `capacity`.
pub fn bathtub_atoms(values: &[f64], measures: &[f64], capacity: f64) -> BathtubLevel {
    let total: f64 = measures.iter().sum();
    let slack = 1e-13 * total;
    if capacity >= total - slack {
        return BathtubLevel {
            level: f64::INFINITY,
            below: (0..values.len()).collect(),
            at: Vec::new(),
            measure_below: total,
            measure_at: 0.0,
            plateau: 0.0,
        };
    }

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut below = Vec::new();
    let mut filled = 0.0;
    let mut start = 0;
    while start < order.len() {
        let value = values[order[start]];
        let mut end = start;
        let mut group_measure = 0.0;
        while end < order.len() && values[order[end]] == value {
            group_measure += measures[order[end]];
            end += 1;
        }
        if filled + group_measure <= capacity + slack {
            filled += group_measure;
            below.extend_from_slice(&order[start..end]);
            start = end;
            continue;
        }
        let plateau = if group_measure > 0.0 {
            ((capacity - filled) / group_measure).clamp(0.0, 1.0)
        } else {
            0.0
        };
        return BathtubLevel {
            level: value,
            below,
            at: order[start..end].to_vec(),
            measure_below: filled,
            measure_at: group_measure,
            plateau,
        };
    }
    // only reachable through rounding in `total`
    BathtubLevel {
        level: f64::INFINITY,
        below,
        at: Vec::new(),
        measure_below: filled,
        measure_at: 0.0,
        plateau: 0.0,
    }
}

pub fn bathtub_reconstruct(
    g: &SpaceTimeField,
    budget: f64,
    upper_bound: f64,
) -> Result<BathtubResult> {
    let grid = *g.grid();
    let total = grid.domain_measure() * grid.final_time();
    let capacity = budget / upper_bound;
    if !(upper_bound > 0.0 && capacity > 0.0 && capacity <= total * (1.0 + 1e-12)) {
        return Err(Error::Infeasible {
            ratio: capacity,
            bound: total,
        });
    }
    if !g.is_finite() {
        return Err(Error::config(
            "g",
            "weight field contains non-finite entries",
        ));
    }
    let cells = grid.num_cells();
    let atoms = cells * grid.num_time_steps();
    let values = &g.values()[..atoms];
    let measures = vec![grid.cell_volume() * grid.dt(); atoms];
    let split = bathtub_atoms(values, &measures, capacity);

    let mut control = SpaceTimeField::zeros(&grid, FieldRole::Control);
    {
        let v = control.values_mut();
        for &a in &split.below {
            v[a] = upper_bound;
        }
        for &a in &split.at {
            v[a] = split.plateau * upper_bound;
        }
    }
    control.mirror_final_node();
    Ok(BathtubResult { split, control })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::control_budget;
    use crate::grid::{build_grid, Grid, GridConfig};

    fn four_atom_grid() -> Grid {
        // 4 cells of width 1, one step of length 1 → 4 atoms of measure 1
        build_grid(&GridConfig {
            lengths: vec![4.0],
            cells: vec![4],
            num_time_steps: 1,
            final_time: 1.0,
        })
        .unwrap()
    }

    fn weights(grid: &Grid) -> SpaceTimeField {
        let mut g = SpaceTimeField::zeros(grid, FieldRole::Gradient);
        g.slice_mut(0).copy_from_slice(&[-0.4, -0.3, -0.2, -0.1]);
        g.mirror_final_node();
        g
    }

    #[test]
    fn exact_fit() {
        let grid = four_atom_grid();
        let r = bathtub_reconstruct(&weights(&grid), 2.0, 1.0).unwrap();
        assert_eq!(r.split.level, -0.2);
        assert_eq!(r.split.below, vec![0, 1]);
        assert_eq!(r.split.measure_below, 2.0);
        assert_eq!(r.split.plateau, 0.0);
        assert_eq!(r.control.slice(0), &[1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn plateau_on_level_set() {
        let grid = four_atom_grid();
        let r = bathtub_reconstruct(&weights(&grid), 2.5, 1.0).unwrap();
        assert_eq!(r.split.level, -0.2);
        assert_eq!(r.split.at, vec![2]);
        assert_eq!(r.split.measure_at, 1.0);
        assert_eq!(r.split.plateau, 0.5);
        assert_eq!(r.control.slice(0), &[1.0, 1.0, 0.5, 0.0]);
        assert!((control_budget(&r.control) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn full_budget_saturates() {
        let grid = four_atom_grid();
        let r = bathtub_reconstruct(&weights(&grid), 8.0, 2.0).unwrap();
        assert_eq!(r.split.level, f64::INFINITY);
        assert!(r.control.values().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn ties_grouped() {
        let split = bathtub_atoms(&[0.0, -1.0, -1.0, 0.0], &[1.0; 4], 1.0);
        assert_eq!(split.level, -1.0);
        assert!(split.below.is_empty());
        assert_eq!(split.at, vec![1, 2]);
        assert_eq!(split.plateau, 0.5);
    }

    #[test]
    fn infeasible_budget() {
        let grid = four_atom_grid();
        assert!(matches!(
            bathtub_reconstruct(&weights(&grid), 5.0, 1.0),
            Err(Error::Infeasible { .. })
        ));
        assert!(bathtub_reconstruct(&weights(&grid), 0.0, 1.0).is_err());
    }
}
