//! Damped Gauss-Newton (Levenberg-Marquardt) minimizer over plain slices.

use super::FitReport;
use crate::error::{Error, Result};

/// A parameterized scalar model with an analytic Jacobian.
pub trait Model {
    fn param_names(&self) -> Vec<String>;

    fn eval(&self, x: f64, p: &[f64]) -> f64;

    /// Writes ∂f/∂p_j at `x` into `out` (length = parameter count).
    fn jacobian(&self, x: f64, p: &[f64], out: &mut [f64]);
}

/// Convergence and damping policy. The defaults are fixed project-wide.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Outer iteration cap; hitting it yields `converged = false`.
    pub max_iterations: usize,
    /// Converge when the largest relative parameter step falls below this.
    pub step_tolerance: f64,
    /// Converge when ‖Jᵀ W r‖∞ falls below this.
    pub gradient_tolerance: f64,
    /// Initial Marquardt damping; ×10 on a rejected step, ÷10 on an accepted
    /// one.
    pub initial_damping: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            step_tolerance: 1e-10,
            gradient_tolerance: 1e-12,
            initial_damping: 1e-3,
        }
    }
}

const DAMPING_MIN: f64 = 1e-12;
const DAMPING_MAX: f64 = 1e14;

/// Weighted least squares: minimizes Σ w_i (y_i − f(x_i, p))².
///
/// `clamp` projects a trial parameter vector back into the feasible set after
/// every step (used for positivity and coupling-regime bounds). Pass
/// `scale_covariance = true` when the weights are not 1/σ² from real
/// uncertainties; the covariance is then scaled by reduced χ².
///
/// Deterministic: no randomness, fixed evaluation order.
pub fn least_squares(
    model: &dyn Model,
    x: &[f64],
    y: &[f64],
    weights: &[f64],
    init: &[f64],
    clamp: Option<&dyn Fn(&mut [f64])>,
    scale_covariance: bool,
    options: &FitOptions,
) -> Result<FitReport> {
    let n = x.len();
    let m = init.len();
    if n != y.len() || n != weights.len() {
        return Err(Error::invalid("data length mismatch"));
    }
    if n < m {
        return Err(Error::invalid(format!(
            "{n} points cannot constrain {m} parameters"
        )));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite initial parameters"));
    }

    let mut p = init.to_vec();
    if let Some(c) = clamp {
        c(&mut p);
    }

    let chi2_of = |p: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .zip(weights)
            .map(|((&xi, &yi), &wi)| {
                let r = yi - model.eval(xi, p);
                wi * r * r
            })
            .sum()
    };

    let mut chi2 = chi2_of(&p);
    if !chi2.is_finite() {
        return Err(Error::invalid("model not finite at initial parameters"));
    }

    let mut damping = options.initial_damping;
    let mut iterations = 0;
    let mut converged = false;
    let mut row = vec![0.0; m];

    while iterations < options.max_iterations {
        iterations += 1;

        // Normal equations J^T W J and gradient J^T W r.
        let mut a = vec![vec![0.0; m]; m];
        let mut g = vec![0.0; m];
        for ((&xi, &yi), &wi) in x.iter().zip(y).zip(weights) {
            model.jacobian(xi, &p, &mut row);
            let r = yi - model.eval(xi, &p);
            for j in 0..m {
                g[j] += wi * row[j] * r;
                for k in j..m {
                    a[j][k] += wi * row[j] * row[k];
                }
            }
        }
        for j in 0..m {
            for k in 0..j {
                a[j][k] = a[k][j];
            }
        }

        if g.iter().all(|v| v.abs() < options.gradient_tolerance) {
            converged = true;
            break;
        }

        // Try steps with growing damping until χ² decreases.
        let mut accepted = false;
        loop {
            let mut damped = a.clone();
            for j in 0..m {
                // Marquardt scaling; absolute fallback keeps zero-curvature
                // directions solvable.
                let d = a[j][j];
                damped[j][j] = if d > 0.0 {
                    d * (1.0 + damping)
                } else {
                    damping.max(1e-30)
                };
            }
            let step = solve(&damped, &g).ok_or_else(|| {
                Error::fit(format!(
                    "singular Jacobian (residual norm {:.6e})",
                    chi2.sqrt()
                ))
            })?;

            let mut trial = p.clone();
            for j in 0..m {
                trial[j] += step[j];
            }
            if let Some(c) = clamp {
                c(&mut trial);
            }

            let rel_step = p
                .iter()
                .zip(&trial)
                .map(|(old, new)| (new - old).abs() / old.abs().max(1e-12))
                .fold(0.0f64, f64::max);

            let chi2_trial = chi2_of(&trial);
            if chi2_trial.is_finite() && chi2_trial <= chi2 {
                let no_progress = chi2 - chi2_trial <= 1e-15 * chi2.max(1e-300);
                p = trial;
                chi2 = chi2_trial;
                damping = (damping / 10.0).max(DAMPING_MIN);
                accepted = true;
                if rel_step < options.step_tolerance || no_progress {
                    converged = true;
                }
                break;
            }
            damping *= 10.0;
            if damping > DAMPING_MAX {
                // No finite step improves χ²: numerical minimum.
                converged = true;
                break;
            }
        }
        if converged || !accepted {
            break;
        }
    }

    let (covariance, sigmas) = covariance_at(model, x, weights, &p, n, m, chi2, scale_covariance);

    Ok(FitReport {
        names: model.param_names(),
        values: p,
        sigmas,
        covariance,
        residual_norm: chi2.sqrt(),
        iterations,
        converged,
    })
}

fn covariance_at(
    model: &dyn Model,
    x: &[f64],
    weights: &[f64],
    p: &[f64],
    n: usize,
    m: usize,
    chi2: f64,
    scale: bool,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut a = vec![vec![0.0; m]; m];
    let mut row = vec![0.0; m];
    for (&xi, &wi) in x.iter().zip(weights) {
        model.jacobian(xi, p, &mut row);
        for j in 0..m {
            for k in j..m {
                a[j][k] += wi * row[j] * row[k];
            }
        }
    }
    for j in 0..m {
        for k in 0..j {
            a[j][k] = a[k][j];
        }
    }
    match invert(&a) {
        Some(mut c) => {
            if scale && n > m {
                let factor = chi2 / (n - m) as f64;
                for r in c.iter_mut() {
                    for v in r.iter_mut() {
                        *v *= factor;
                    }
                }
            }
            let sigmas = (0..m).map(|j| c[j][j].max(0.0).sqrt()).collect();
            (c, sigmas)
        }
        // Degenerate at the optimum (e.g. a parameter with no leverage):
        // report zero uncertainty rather than failing the whole fit.
        None => (vec![vec![0.0; m]; m], vec![0.0; m]),
    }
}

/// Gaussian elimination with partial pivoting; `None` on a singular system.
fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = b.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();

    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| {
            aug[i][col]
                .abs()
                .partial_cmp(&aug[j][col].abs())
                .expect("finite pivots")
        })?;
        if aug[pivot][col].abs() < 1e-300 {
            return None;
        }
        aug.swap(col, pivot);
        for r in (col + 1)..m {
            let f = aug[r][col] / aug[col][col];
            for c in col..=m {
                aug[r][c] -= f * aug[col][c];
            }
        }
    }
    let mut out = vec![0.0; m];
    for col in (0..m).rev() {
        let mut acc = aug[col][m];
        for c in (col + 1)..m {
            acc -= aug[col][c] * out[c];
        }
        out[col] = acc / aug[col][col];
        if !out[col].is_finite() {
            return None;
        }
    }
    Some(out)
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let m = a.len();
    let mut cols = Vec::with_capacity(m);
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        cols.push(solve(a, &e)?);
    }
    // cols[j] is the j-th column of the inverse.
    let mut inv = vec![vec![0.0; m]; m];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..m {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

/// Worst relative deviation between the analytic Jacobian and central finite
/// differences (relative step 1e-6) over the given evaluation points.
pub fn max_jacobian_deviation(model: &dyn Model, xs: &[f64], p: &[f64]) -> f64 {
    let m = p.len();
    let mut analytic = vec![0.0; m];
    let mut worst = 0.0f64;
    for &x in xs {
        model.jacobian(x, p, &mut analytic);
        for j in 0..m {
            let h = 1e-6 * p[j].abs().max(1e-6);
            let mut hi = p.to_vec();
            let mut lo = p.to_vec();
            hi[j] += h;
            lo[j] -= h;
            let fd = (model.eval(x, &hi) - model.eval(x, &lo)) / (2.0 * h);
            let scale = analytic[j].abs().max(fd.abs()).max(1e-9);
            worst = worst.max((analytic[j] - fd).abs() / scale);
        }
    }
    worst
}
