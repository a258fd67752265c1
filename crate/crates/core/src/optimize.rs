//! Limited-memory BFGS with a backtracking Armijo line search.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub max_iterations: usize,
    pub memory: usize,
    /// Stop when the objective improves by less than this ...
    pub f_tol: f64,
    /// ... and the parameter step is shorter than this.
    pub x_tol: f64,
    /// Independent stop on the gradient infinity norm.
    pub g_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            memory: 12,
            f_tol: 1e-9,
            x_tol: 1e-8,
            g_tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimize `objective`, which returns f(x) and writes ∇f(x) into its
/// second argument. Non-finite values are treated as infeasible.
pub fn minimize<F>(mut objective: F, x0: &[f64], opts: &LbfgsOptions) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut f = objective(&x, &mut g);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    if !f.is_finite() {
        return Minimum {
            x,
            iterations: 0,
            converged: false,
        };
    }

    for iter in 1..=opts.max_iterations {
        if inf_norm(&g) < opts.g_tol {
            return Minimum {
                x,
                iterations: iter - 1,
                converged: true,
            };
        }

        let mut dir = two_loop(&g, &history);
        let mut slope = dot(&dir, &g);
        if !(slope < 0.0) {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&dir, &g);
        }
        let mut step = if history.is_empty() {
            (1.0 / inf_norm(&g)).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..80 {
            for k in 0..n {
                x_new[k] = x[k] + step * dir[k];
            }
            let f_try = objective(&x_new, &mut g_new);
            if f_try.is_finite() && f_try <= f + 1e-4 * step * slope {
                accepted = Some(f_try);
                break;
            }
            step *= 0.5;
        }

        let Some(f_next) = accepted else {
            if !history.is_empty() {
                history.clear();
                continue;
            }
            // no representable descent left
            let stationary = inf_norm(&g) < 1e-6 * (1.0 + f.abs());
            return Minimum {
                x,
                iterations: iter,
                converged: stationary,
            };
        };

        let s: Vec<f64> = (0..n).map(|k| x_new[k] - x[k]).collect();
        let y: Vec<f64> = (0..n).map(|k| g_new[k] - g[k]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s.clone(), y, 1.0 / sy));
        }

        let improvement = f - f_next;
        let step_norm = dot(&s, &s).sqrt();
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_next;

        if improvement.abs() < opts.f_tol && step_norm < opts.x_tol {
            return Minimum {
                x,
                iterations: iter,
                converged: true,
            };
        }
    }

    Minimum {
        x,
        iterations: opts.max_iterations,
        converged: false,
    }
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for k in 0..q.len() {
            q[k] -= a * y[k];
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for v in &mut q {
            *v *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for k in 0..q.len() {
            q[k] += s[k] * (a - b);
        }
    }
    q.iter().map(|v| -v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let m = minimize(f, &[-1.2, 1.0], &LbfgsOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn quadratic_converges_tightly() {
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for (k, xi) in x.iter().enumerate() {
                let w = (k + 1) as f64;
                g[k] = 2.0 * w * (xi - 0.5);
                v += w * (xi - 0.5).powi(2);
            }
            v
        };
        let m = minimize(f, &[0.0; 8], &LbfgsOptions::default());
        assert!(m.converged);
        assert!(m.x.iter().all(|v| (v - 0.5).abs() < 1e-9));
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
            g[1] = 200.0 * (x[1] - x[0] * x[0]);
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        };
        let opts = LbfgsOptions {
            max_iterations: 3,
            ..Default::default()
        };
        assert!(!minimize(f, &[-1.2, 1.0], &opts).converged);
    }
}
