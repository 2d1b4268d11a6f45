//! Linear solves for `(I + dt·A + diag(s)) x = b`.
//!
//! 1D systems are tridiagonal and solved directly (Thomas). 2D systems use
//! conjugate gradients with a Jacobi preconditioner.

use crate::error::SolverError;
use crate::pde::operator::DiffusionOperator;

/// `I + scale·A + diag(shift)`.
pub struct ShiftedSystem<'a> {
    pub operator: &'a DiffusionOperator,
    pub scale: f64,
    pub shift: &'a [f64],
}

impl ShiftedSystem<'_> {
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.operator.apply(x, out);
        for ((o, &xi), &s) in out.iter_mut().zip(x).zip(self.shift) {
            *o = xi + self.scale * *o + s * xi;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.operator
            .diagonal()
            .iter()
            .zip(self.shift)
            .map(|(&d, &s)| 1.0 + self.scale * d + s)
            .collect()
    }

    pub fn solve(&self, rhs: &[f64], tolerance: f64) -> Result<Vec<f64>, SolverError> {
        if self.operator.is_one_dimensional() {
            self.solve_tridiagonal(rhs)
        } else {
            conjugate_gradient(self, rhs, tolerance)
        }
    }

    /// Thomas sweep reading the bands straight from the operator faces.
    fn solve_tridiagonal(&self, rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
        let n = rhs.len();
        let faces = self.operator.x_faces();
        let diag = self.operator.diagonal();
        let s = self.scale;
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let lower = if i > 0 { -s * faces[i - 1] } else { 0.0 };
            let upper = if i + 1 < n { -s * faces[i] } else { 0.0 };
            let (c_prev, d_prev) = if i > 0 {
                (c[i - 1], d[i - 1])
            } else {
                (0.0, 0.0)
            };
            let pivot = 1.0 + s * diag[i] + self.shift[i] - lower * c_prev;
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(SolverError::LinearSolver {
                    iterations: i,
                    residual: f64::INFINITY,
                });
            }
            let inv = 1.0 / pivot;
            c[i] = upper * inv;
            d[i] = (rhs[i] - lower * d_prev) * inv;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// Direct tridiagonal solve. `lower[0]` and `upper[n-1]` are ignored.
pub fn thomas(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(SolverError::LinearSolver {
            iterations: 0,
            residual: f64::INFINITY,
        });
    }
    c[0] = if n > 1 { upper[0] / pivot } else { 0.0 };
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(SolverError::LinearSolver {
                iterations: i,
                residual: f64::INFINITY,
            });
        }
        c[i] = if i + 1 < n { upper[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned CG from a zero initial guess.
pub fn conjugate_gradient(
    system: &ShiftedSystem<'_>,
    rhs: &[f64],
    tolerance: f64,
) -> Result<Vec<f64>, SolverError> {
    let n = rhs.len();
    let inv_diag: Vec<f64> = system.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; n];
    let rhs_norm = dot(rhs, rhs).sqrt();
    if rhs_norm == 0.0 {
        return Ok(x);
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iterations = 10 * n + 100;
    for it in 0..max_iterations {
        system.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(SolverError::LinearSolver {
                iterations: it,
                residual: dot(&r, &r).sqrt() / rhs_norm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = dot(&r, &r).sqrt() / rhs_norm;
        if res <= tolerance {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::LinearSolver {
        iterations: max_iterations,
        residual: dot(&r, &r).sqrt() / rhs_norm,
    })
}
