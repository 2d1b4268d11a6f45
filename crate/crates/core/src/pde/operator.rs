//! Cell-centered discretization of `-∇·(D∇u)` with zero-flux boundaries.
//!
//! Interior faces carry `k_f = hmean(D_L, D_R) / h²`; boundary faces carry
//! nothing (mirror ghost cells), so every row sums to zero and the constant
//! field lies in the kernel.

use crate::grid::Grid;
use crate::tissue::TissueMap;

/// Harmonic mean of two positive diffusivities.
pub fn face_diffusivity(a: f64, b: f64) -> f64 {
    2.0 / (1.0 / a + 1.0 / b)
}

#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    nx: usize,
    ny: usize,
    /// Face between `(i, j)` and `(i+1, j)`, indexed `j*(nx-1) + i`.
    x_faces: Vec<f64>,
    /// Face between `(i, j)` and `(i, j+1)`, indexed `j*nx + i`.
    y_faces: Vec<f64>,
    diagonal: Vec<f64>,
}

pub fn assemble_diffusion(grid: &Grid, tissue: &TissueMap) -> DiffusionOperator {
    assert_eq!(
        grid.num_cells(),
        tissue.num_cells(),
        "tissue map does not match grid"
    );
    let cells = grid.cells_per_axis();
    let nx = cells[0];
    let ny = if grid.dim() == 2 { cells[1] } else { 1 };
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let d = tissue.diffusivities();

    let mut x_faces = Vec::with_capacity(nx.saturating_sub(1) * ny);
    for j in 0..ny {
        for i in 0..nx.saturating_sub(1) {
            let (l, r) = (j * nx + i, j * nx + i + 1);
            x_faces.push(face_diffusivity(d[l], d[r]) * inv_h2);
        }
    }
    let mut y_faces = Vec::with_capacity(nx * ny.saturating_sub(1));
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx {
            let (b, t) = (j * nx + i, (j + 1) * nx + i);
            y_faces.push(face_diffusivity(d[b], d[t]) * inv_h2);
        }
    }

    let mut op = DiffusionOperator {
        nx,
        ny,
        x_faces,
        y_faces,
        diagonal: vec![0.0; nx * ny],
    };
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            op.diagonal[c] = op.neighbours(i, j).map(|(_, k)| k).sum();
        }
    }
    op
}

impl DiffusionOperator {
    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_one_dimensional(&self) -> bool {
        self.ny == 1
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Coefficients of the faces between `(i, j)` and `(i+1, j)`.
    pub(crate) fn x_faces(&self) -> &[f64] {
        &self.x_faces
    }

    /// Neighbour indices of cell `(i, j)` with their face coefficients.
    fn neighbours(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let nx = self.nx;
        let c = j * nx + i;
        let west = (i > 0).then(|| (c - 1, self.x_faces[j * (nx - 1) + i - 1]));
        let east = (i + 1 < nx).then(|| (c + 1, self.x_faces[j * (nx - 1) + i]));
        let south = (j > 0).then(|| (c - nx, self.y_faces[(j - 1) * nx + i]));
        let north = (j + 1 < self.ny).then(|| (c + nx, self.y_faces[j * nx + i]));
        [west, east, south, north].into_iter().flatten()
    }

    /// `out = A·u`, accumulated face by face as fluxes `k·(u_l − u_r)` so
    /// that constant fields map to exactly zero.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let nx = self.nx;
        out.fill(0.0);
        for j in 0..self.ny {
            for i in 0..nx.saturating_sub(1) {
                let k = self.x_faces[j * (nx - 1) + i];
                let (l, r) = (j * nx + i, j * nx + i + 1);
                let flux = k * (u[l] - u[r]);
                out[l] += flux;
                out[r] -= flux;
            }
        }
        for j in 0..self.ny.saturating_sub(1) {
            for i in 0..nx {
                let k = self.y_faces[j * nx + i];
                let (b, t) = (j * nx + i, (j + 1) * nx + i);
                let flux = k * (u[b] - u[t]);
                out[b] += flux;
                out[t] -= flux;
            }
        }
    }

    /// Sub-, main and super-diagonal of a 1D operator.
    pub fn tridiagonal(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        assert!(
            self.is_one_dimensional(),
            "tridiagonal form needs a 1D operator"
        );
        let n = self.nx;
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n.saturating_sub(1) {
            upper[i] = -self.x_faces[i];
            lower[i + 1] = -self.x_faces[i];
        }
        (lower, self.diagonal.clone(), upper)
    }

    /// All non-zero entries as `(row, col, value)` triplets, row-major.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = j * self.nx + i;
                let mut row: Vec<(usize, usize, f64)> =
                    self.neighbours(i, j).map(|(nb, k)| (c, nb, -k)).collect();
                row.push((c, c, self.diagonal[c]));
                row.sort_by_key(|e| e.1);
                out.extend(row);
            }
        }
        out
    }
}
