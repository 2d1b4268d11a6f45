//! White/grey matter labelling and the cell-wise diffusion coefficient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tissue {
    White,
    Grey,
}

/// How white matter is located on the grid. Everything else is grey.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    /// Closed x-intervals `[a, b]` of white matter (1D).
    Intervals(Vec<[f64; 2]>),
    /// Axis-aligned ellipse `((x-cx)/ax)² + ((y-cy)/ay)² ≤ 1` of white matter (2D).
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
    },
    /// One explicit label per cell.
    Labels(Vec<Tissue>),
}

impl RegionSpec {
    fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            RegionSpec::Intervals(list) => list.iter().any(|&[a, b]| p[0] >= a && p[0] <= b),
            RegionSpec::Ellipse { center, semi_axes } => {
                let dx = (p[0] - center[0]) / semi_axes[0];
                let dy = (p[1] - center[1]) / semi_axes[1];
                dx * dx + dy * dy <= 1.0
            }
            RegionSpec::Labels(_) => unreachable!("labels are assigned directly"),
        }
    }
}

/// Tissue section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TissueConfig {
    pub regions: RegionSpec,
    pub d_white: f64,
    pub d_grey: f64,
}

impl TissueConfig {
    pub fn build(&self, grid: &Grid) -> Result<TissueMap> {
        build_tissue_map(grid, &self.regions, self.d_white, self.d_grey)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TissueMap {
    labels: Vec<Tissue>,
    d_white: f64,
    d_grey: f64,
}

pub fn build_tissue_map(
    grid: &Grid,
    regions: &RegionSpec,
    d_white: f64,
    d_grey: f64,
) -> Result<TissueMap> {
    if !(d_white.is_finite() && d_white > 0.0) {
        return Err(Error::config(
            "tissue.d_white",
            format!("diffusion must be positive, got {d_white}"),
        ));
    }
    if !(d_grey.is_finite() && d_grey > 0.0) {
        return Err(Error::config(
            "tissue.d_grey",
            format!("diffusion must be positive, got {d_grey}"),
        ));
    }
    let labels = match regions {
        RegionSpec::Labels(labels) => {
            if labels.len() != grid.num_cells() {
                return Err(Error::config(
                    "tissue.regions.labels",
                    format!("expected {} labels, got {}", grid.num_cells(), labels.len()),
                ));
            }
            labels.clone()
        }
        RegionSpec::Intervals(list) => {
            if grid.dim() != 1 {
                return Err(Error::config(
                    "tissue.regions.intervals",
                    "interval regions are only defined on 1D grids",
                ));
            }
            for (k, &[a, b]) in list.iter().enumerate() {
                if !(a.is_finite() && b.is_finite() && a <= b) {
                    return Err(Error::config(
                        format!("tissue.regions.intervals[{k}]"),
                        format!("expected a ≤ b, got [{a}, {b}]"),
                    ));
                }
            }
            label_by_predicate(grid, regions)
        }
        RegionSpec::Ellipse { semi_axes, .. } => {
            if grid.dim() != 2 {
                return Err(Error::config(
                    "tissue.regions.ellipse",
                    "ellipse regions are only defined on 2D grids",
                ));
            }
            if !(semi_axes[0] > 0.0 && semi_axes[1] > 0.0) {
                return Err(Error::config(
                    "tissue.regions.ellipse.semi_axes",
                    "semi-axes must be positive",
                ));
            }
            label_by_predicate(grid, regions)
        }
    };
    Ok(TissueMap {
        labels,
        d_white,
        d_grey,
    })
}

fn label_by_predicate(grid: &Grid, regions: &RegionSpec) -> Vec<Tissue> {
    (0..grid.num_cells())
        .map(|c| {
            if regions.contains(grid.cell_center(c)) {
                Tissue::White
            } else {
                Tissue::Grey
            }
        })
        .collect()
}

impl TissueMap {
    /// Single-tissue map with diffusion `d` everywhere.
    pub fn homogeneous(grid: &Grid, d: f64) -> Result<TissueMap> {
        build_tissue_map(
            grid,
            &RegionSpec::Labels(vec![Tissue::Grey; grid.num_cells()]),
            d,
            d,
        )
    }

    pub fn labels(&self) -> &[Tissue] {
        &self.labels
    }

    pub fn num_cells(&self) -> usize {
        self.labels.len()
    }

    pub fn d_white(&self) -> f64 {
        self.d_white
    }

    pub fn d_grey(&self) -> f64 {
        self.d_grey
    }

    pub fn diffusion(&self, cell: usize) -> f64 {
        match self.labels[cell] {
            Tissue::White => self.d_white,
            Tissue::Grey => self.d_grey,
        }
    }

    pub fn diffusivities(&self) -> Vec<f64> {
        (0..self.labels.len()).map(|c| self.diffusion(c)).collect()
    }

    pub fn white_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == Tissue::White)
            .map(|(c, _)| c)
    }

    /// Discrete measure of the white region, `h^dim · #white`.
    pub fn white_measure(&self, grid: &Grid) -> f64 {
        self.white_cells().count() as f64 * grid.cell_volume()
    }
}
