//! Quasi-Newton ascent (BFGS inverse-Hessian update, backtracking line
//! search) for smooth log-likelihoods.

use crate::error::{Error, Result, TrajectoryPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the gradient max-norm falls below this.
    pub gtol: f64,
    /// Or when an accepted step changes the objective by less than this,
    /// relative to its magnitude.
    pub ftol: f64,
    /// Abort when a tracked parameter exceeds this in absolute value.
    pub max_abs_param: f64,
    /// Number of leading parameters checked against `max_abs_param`.
    pub tracked_params: usize,
    /// Largest max-norm of a trial step.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iter: 500,
            gtol: 1e-8,
            ftol: 1e-12,
            max_abs_param: 1e3,
            tracked_params: usize::MAX,
            max_step: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Gradient,
    RelativeChange,
    LineSearchStalled,
}

#[derive(Debug, Clone)]
pub struct Ascent {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
    pub trajectory: Vec<TrajectoryPoint>,
}

pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximizes `f`, which returns the objective and its gradient. Errors from
/// `f` at trial points are treated as infeasible steps.
pub fn maximize<F>(mut f: F, x0: Vec<f64>, opts: &BfgsOptions) -> Result<Ascent>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x)?;
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    let mut first_update = true;
    let mut trajectory = Vec::new();
    let tracked = opts.tracked_params.min(n);
    let point = |it: usize, fx: f64, g: &[f64], x: &[f64]| TrajectoryPoint {
        iteration: it,
        loglik: fx,
        gradient_max_norm: max_norm(g),
        max_abs_param: max_norm(&x[..tracked]),
    };
    trajectory.push(point(0, fx, &g, &x));

    for iter in 1..=opts.max_iter {
        if max_norm(&g) < opts.gtol {
            return Ok(Ascent { x, value: fx, gradient: g, iterations: iter - 1, stop: StopReason::Gradient, trajectory });
        }
        // Ascent direction d = H g.
        let mut d: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&g, &d);
        if !(slope > 0.0) {
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] = if i == j { 1.0 } else { 0.0 };
                }
            }
            d = g.clone();
            slope = dot(&g, &d);
        }
        let mut alpha = 1.0f64.min(opts.max_step / max_norm(&d).max(f64::MIN_POSITIVE));
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            if let Ok((ft, gt)) = f(&trial) {
                if ft.is_finite() && ft >= fx + 1e-4 * alpha * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            return Ok(Ascent { x, value: fx, gradient: g, iterations: iter, stop: StopReason::LineSearchStalled, trajectory });
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        // y is the change in the gradient of the minimized function -f.
        let y: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if first_update {
                let scale = sy / dot(&y, &y);
                for v in h.iter_mut() {
                    *v *= scale;
                }
                first_update = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }

        let change = (fnew - fx).abs() / fx.abs().max(1.0);
        x = xn;
        fx = fnew;
        g = gn;
        trajectory.push(point(iter, fx, &g, &x));

        if max_norm(&x[..tracked]) > opts.max_abs_param {
            return Err(Error::NonConvergence {
                iterations: iter,
                reason: format!(
                    "parameters diverging beyond {} (possible separation)",
                    opts.max_abs_param
                ),
                trajectory,
            });
        }
        if max_norm(&g) < opts.gtol {
            return Ok(Ascent { x, value: fx, gradient: g, iterations: iter, stop: StopReason::Gradient, trajectory });
        }
        if change < opts.ftol {
            return Ok(Ascent { x, value: fx, gradient: g, iterations: iter, stop: StopReason::RelativeChange, trajectory });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        reason: "iteration limit reached".into(),
        trajectory,
    })
}
