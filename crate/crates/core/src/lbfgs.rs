//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! The objective callback writes the gradient into its second argument and
//! returns the value. Evaluations that fail or return a non-finite value are
//! treated as `+inf`, so the line search backs away from them.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_iter: usize,
    /// Stop once the objective drops below this value.
    pub f_tol: f64,
    /// Stop once the gradient's Euclidean norm drops below this value.
    pub g_tol: f64,
    /// Objective evaluations allowed per line search.
    pub max_line_evals: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            c1: 1e-4,
            c2: 0.9,
            max_iter: 500,
            f_tol: 1e-10,
            g_tol: 1e-9,
            max_line_evals: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ObjectiveTolerance,
    GradientTolerance,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

struct Objective<F> {
    func: F,
    n: usize,
}

impl<F, E> Objective<F>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64, E>,
{
    fn eval(&mut self, x: Vec<f64>) -> Point {
        let mut g = vec![0.0; self.n];
        let f = match (self.func)(&x, &mut g) {
            Ok(v) if v.is_finite() && g.iter().all(|v| v.is_finite()) => v,
            _ => f64::INFINITY,
        };
        Point { x, f, g }
    }
}

/// Minimize from `x0`. Fails only when the objective cannot be evaluated at
/// the starting point.
pub fn minimize<F, E>(func: F, x0: Vec<f64>, cfg: &LbfgsConfig) -> Result<LbfgsOutcome, Option<E>>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64, E>,
{
    let n = x0.len();
    let mut obj = Objective { func, n };
    let mut g0 = vec![0.0; n];
    let f0 = (obj.func)(&x0, &mut g0).map_err(Some)?;
    if !f0.is_finite() || g0.iter().any(|v| !v.is_finite()) {
        return Err(None);
    }
    let mut cur = Point { x: x0, f: f0, g: g0 };
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut iterations = 0;

    let termination = loop {
        if cur.f < cfg.f_tol {
            break Termination::ObjectiveTolerance;
        }
        if norm(&cur.g) < cfg.g_tol {
            break Termination::GradientTolerance;
        }
        if iterations >= cfg.max_iter {
            break Termination::MaxIterations;
        }

        let mut dir = two_loop(&cur.g, &history);
        if dot(&dir, &cur.g) >= 0.0 {
            history.clear();
            dir = two_loop(&cur.g, &history);
        }
        let mut next = line_search(&mut obj, &cur, &dir, cfg);
        if next.is_none() && !history.is_empty() {
            history.clear();
            dir = two_loop(&cur.g, &history);
            next = line_search(&mut obj, &cur, &dir, cfg);
        }
        let Some(next) = next else {
            break Termination::LineSearchFailed;
        };

        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * norm(&s) * norm(&y) {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        cur = next;
        iterations += 1;
    };

    Ok(LbfgsOutcome {
        grad_norm: norm(&cur.g),
        x: cur.x,
        f: cur.f,
        iterations,
        termination,
    })
}

/// `-H·g` from the stored pairs; scaled steepest descent when empty.
fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    if history.is_empty() {
        let scale = 1.0 / norm(g).max(1.0);
        return q.iter().map(|v| -v * scale).collect();
    }
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    let (s, y, _) = history.back().unwrap();
    let gamma = dot(s, y) / dot(y, y);
    q.iter_mut().for_each(|v| *v *= gamma);
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter().map(|v| -v).collect()
}

fn step<F, E>(obj: &mut Objective<F>, from: &Point, dir: &[f64], alpha: f64) -> (Point, f64)
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64, E>,
{
    let x: Vec<f64> = from.x.iter().zip(dir).map(|(x, d)| x + alpha * d).collect();
    let p = obj.eval(x);
    let slope = if p.f.is_finite() { dot(&p.g, dir) } else { f64::NAN };
    (p, slope)
}

/// Strong-Wolfe line search (bracketing + zoom). Returns the accepted point,
/// or `None` when no step with sufficient decrease was found.
fn line_search<F, E>(
    obj: &mut Objective<F>,
    cur: &Point,
    dir: &[f64],
    cfg: &LbfgsConfig,
) -> Option<Point>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64, E>,
{
    let f0 = cur.f;
    let d0 = dot(&cur.g, dir);
    if d0 >= 0.0 {
        return None;
    }
    let armijo = |alpha: f64, f: f64| f <= f0 + cfg.c1 * alpha * d0;
    let curvature = |slope: f64| slope.abs() <= -cfg.c2 * d0;

    let mut evals = 0;
    let mut prev_alpha = 0.0;
    let mut prev_f = f0;
    let mut prev_slope = d0;
    let mut prev_point: Option<Point> = None;
    let mut alpha = 1.0;

    // Bracketing phase.
    let (mut lo, mut hi) = loop {
        let (p, slope) = step(obj, cur, dir, alpha);
        evals += 1;
        if !armijo(alpha, p.f) || (prev_alpha > 0.0 && p.f >= prev_f) {
            break (
                (prev_alpha, prev_f, prev_slope, prev_point.take()),
                (alpha, p.f, slope),
            );
        }
        if curvature(slope) {
            return Some(p);
        }
        if slope >= 0.0 {
            break ((alpha, p.f, slope, Some(p)), (prev_alpha, prev_f, prev_slope));
        }
        if evals >= cfg.max_line_evals {
            return Some(p);
        }
        prev_alpha = alpha;
        prev_f = p.f;
        prev_slope = slope;
        prev_point = Some(p);
        alpha *= 2.0;
    };

    // Zoom phase: `lo` always satisfies sufficient decrease.
    while evals < cfg.max_line_evals {
        let (a_lo, f_lo, s_lo, _) = &lo;
        let (a_hi, f_hi, _) = hi;
        let width = a_hi - a_lo;
        if width.abs() <= f64::EPSILON * a_lo.abs().max(1.0) {
            break;
        }
        let mut trial = a_lo + 0.5 * width;
        if f_hi.is_finite() {
            let denom = 2.0 * (f_hi - f_lo - s_lo * width);
            if denom > 0.0 {
                let q = a_lo - s_lo * width * width / denom;
                let (lo_b, hi_b) = if width > 0.0 {
                    (a_lo + 0.1 * width, a_hi - 0.1 * width)
                } else {
                    (a_hi - 0.1 * width, a_lo + 0.1 * width)
                };
                if q.is_finite() && q >= lo_b && q <= hi_b {
                    trial = q;
                }
            }
        }
        let (p, slope) = step(obj, cur, dir, trial);
        evals += 1;
        if !armijo(trial, p.f) || p.f >= *f_lo {
            hi = (trial, p.f, slope);
        } else {
            if curvature(slope) {
                return Some(p);
            }
            if slope * (a_hi - a_lo) >= 0.0 {
                hi = (*a_lo, *f_lo, *s_lo);
            }
            lo = (trial, p.f, slope, Some(p));
        }
    }
    // Out of budget: settle for the best sufficient-decrease point.
    lo.3.filter(|p| p.f < f0)
}
