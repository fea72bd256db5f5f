//! Preconditioned conjugate gradients for the SPD systems of the scheme.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop once `‖Ax − b‖₂ ≤ rel_tolerance · ‖b‖₂`.
    pub rel_tolerance: f64,
    /// `None` means `10 · dim`.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tolerance: 1e-12,
            max_iterations: None,
            preconditioner: Preconditioner::Diagonal,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(rel_tolerance: f64) -> Result<Self> {
        let cfg = SolverConfig {
            rel_tolerance,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance <= 1e-6) {
            return Err(Error::Config(format!(
                "solver tolerance must lie in (0, 1e-6], got {}",
                self.rel_tolerance
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` for symmetric positive-definite `A`.
///
/// Returns exactly zero for `b = 0`. Convergence is judged on the true
/// residual, recomputed whenever the recursive one drops below tolerance.
pub fn solve_spd(a: &SparseMatrix, b: &[f64], config: &SolverConfig) -> Result<Vec<f64>> {
    let x0 = vec![0.0; b.len()];
    solve_spd_from(a, b, x0, config)
}

/// Like [`solve_spd`] but starting from the guess `x`.
pub fn solve_spd_from(a: &SparseMatrix, b: &[f64], mut x: Vec<f64>, config: &SolverConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let n = a.dim();
    if b.len() != n || x.len() != n {
        return Err(Error::Usage(format!(
            "dimension mismatch: matrix {n}x{n}, rhs {}, guess {}",
            b.len(),
            x.len()
        )));
    }
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let target = config.rel_tolerance * b_norm;
    let max_iter = config.max_iterations.unwrap_or(10 * n.max(1));

    let inv_diag: Vec<f64> = match config.preconditioner {
        Preconditioner::Diagonal => a.diagonal().iter().map(|d| 1.0 / d).collect(),
        Preconditioner::None => vec![1.0; n],
    };

    let mut r = a.mul_vec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = norm(&r);

    for _ in 0..max_iter {
        if res <= target {
            // confirm against the true residual before accepting
            a.mul_vec_into(&x, &mut ap);
            for ((ri, bi), axi) in r.iter_mut().zip(b).zip(&ap) {
                *ri = bi - axi;
            }
            res = norm(&r);
            if res <= target {
                debug_assert!(residual_ok(a, &x, b, config.rel_tolerance));
                return Ok(x);
            }
            for ((zi, ri), d) in z.iter_mut().zip(&r).zip(&inv_diag) {
                *zi = ri * d;
            }
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Usage("matrix is not positive definite".into()));
        }
        let step = rz / pap;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += step * pi;
            *ri -= step * api;
        }
        for ((zi, ri), d) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zi = ri * d;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        res = norm(&r);
    }

    a.mul_vec_into(&x, &mut ap);
    let true_res = norm(&b.iter().zip(&ap).map(|(b, ax)| b - ax).collect::<Vec<_>>());
    if true_res <= target {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: true_res / b_norm,
    })
}

fn residual_ok(a: &SparseMatrix, x: &[f64], b: &[f64], tol: f64) -> bool {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    norm(&r) <= tol * norm(b)
}
