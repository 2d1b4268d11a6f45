//! `∫_Ω (|ln u| + |ln(1−u)|) dx` per time node, a finite value certifying the
//! state stays away from 0 and 1 in an integral sense.

use serde::{Deserialize, Serialize};

use crate::field::SpaceTimeField;

/// Arguments of the logarithms are clipped from below at this value.
pub const DEFAULT_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub values: Vec<f64>,
    pub clip: f64,
    /// Set once any cell needed clipping; never cleared.
    pub clipped: bool,
    pub first_clipped_node: Option<usize>,
}

pub fn entropy_diagnostic(state: &SpaceTimeField, clip: f64) -> EntropyReport {
    let grid = state.grid();
    let vol = grid.cell_volume();
    let mut first_clipped_node = None;
    let values = (0..grid.num_time_nodes())
        .map(|n| {
            let mut sum = 0.0;
            for &u in state.slice(n) {
                let (lo, hi) = (u, 1.0 - u);
                if (lo < clip || hi < clip) && first_clipped_node.is_none() {
                    first_clipped_node = Some(n);
                }
                sum += lo.max(clip).ln().abs() + hi.max(clip).ln().abs();
            }
            vol * sum
        })
        .collect();
    EntropyReport {
        values,
        clip,
        clipped: first_clipped_node.is_some(),
        first_clipped_node,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldRole;
    use crate::grid::{build_grid, GridConfig};

    fn grid() -> crate::grid::Grid {
        build_grid(&GridConfig {
            lengths: vec![5.0],
            cells: vec![100],
            num_time_steps: 3,
            final_time: 0.5,
        })
        .unwrap()
    }

    #[test]
    fn half_everywhere() {
        let g = grid();
        let r = entropy_diagnostic(
            &SpaceTimeField::constant(&g, FieldRole::State, 0.5),
            DEFAULT_CLIP,
        );
        for v in &r.values {
            assert!((v - 5.0 * 2.0 * 2f64.ln()).abs() < 1e-12);
        }
        assert!(!r.clipped);
    }

    #[test]
    fn exact_zero_is_flagged() {
        let g = grid();
        let mut u = SpaceTimeField::constant(&g, FieldRole::State, 0.3);
        u.set(7, 2, 0.0);
        let r = entropy_diagnostic(&u, DEFAULT_CLIP);
        assert!(r.clipped);
        assert_eq!(r.first_clipped_node, Some(2));
        assert!(r.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn gaussian_initial_state_is_finite() {
        let g = grid();
        let u = SpaceTimeField::from_fn(&g, FieldRole::State, |c, _| {
            (-8.0 * (g.cell_center(c)[0] - 2.5).powi(2)).exp()
        });
        let r = entropy_diagnostic(&u, DEFAULT_CLIP);
        // outermost centres give exp(-8·2.475²) ≈ 5e-22, below the clip
        assert!(r.values[0].is_finite());
        assert!(r.clipped);
        assert_eq!(r.first_clipped_node, Some(0));
    }
}
