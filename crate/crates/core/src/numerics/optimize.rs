//! Bounded Nelder-Mead with restarts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    /// Simplex diameter at which a run stops.
    pub param_tol: f64,
    /// Spread of vertex values at which a run stops.
    pub value_tol: f64,
    /// Iteration budget across all restarts.
    pub max_iters: usize,
    /// Number of times the simplex is rebuilt around the incumbent.
    pub restarts: usize,
}

impl OptimizerSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.param_tol > 0.0) || !(self.value_tol > 0.0) || self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter("optimizer tolerances and budgets must be positive".into()));
        }
        Ok(())
    }
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        Self { param_tol: 1e-8, value_tol: 1e-12, max_iters: 4000, restarts: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimum {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

struct Bounded<'a, F> {
    f: F,
    bounds: &'a [(f64, f64)],
    evaluations: std::cell::Cell<usize>,
}

impl<F: Fn(&[f64]) -> f64> Bounded<'_, F> {
    fn clip(&self, x: &mut [f64]) {
        for (xi, &(lo, hi)) in x.iter_mut().zip(self.bounds) {
            *xi = xi.clamp(lo, hi);
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.evaluations.set(self.evaluations.get() + 1);
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn check_inputs(start: &[f64], bounds: &[(f64, f64)]) -> Result<()> {
    if start.is_empty() || start.len() != bounds.len() {
        return Err(Error::InvalidParameter("start and bounds must have the same nonzero length".into()));
    }
    for (i, (&x, &(lo, hi))) in start.iter().zip(bounds).enumerate() {
        if !(lo <= hi) {
            return Err(Error::InvalidParameter(format!("empty bound interval for coordinate {i}")));
        }
        if !(x >= lo && x <= hi) {
            return Err(Error::InvalidParameter(format!("start coordinate {i} = {x} outside [{lo}, {hi}]")));
        }
    }
    Ok(())
}

/// Minimize `f` over a box, starting from `start`.
///
/// The returned value never exceeds `f(start)` and the returned point is
/// always inside the bounds. When the iteration budget runs out the best
/// point so far is returned with `converged = false`.
pub fn minimize(
    f: impl Fn(&[f64]) -> f64,
    start: &[f64],
    bounds: &[(f64, f64)],
    spec: &OptimizerSpec,
) -> Result<Minimum> {
    spec.validate()?;
    check_inputs(start, bounds)?;
    let obj = Bounded { f, bounds, evaluations: std::cell::Cell::new(0) };
    let f0 = obj.eval(start);
    if !f0.is_finite() {
        return Err(Error::Domain(format!("objective is not finite at the start point {start:?}")));
    }

    let mut best = start.to_vec();
    let mut best_val = f0;
    let mut iterations = 0usize;
    let mut converged = false;
    let mut scale = 0.1;

    for _ in 0..spec.restarts {
        let run = nelder_mead(&obj, &best, best_val, scale, spec, spec.max_iters.saturating_sub(iterations));
        iterations += run.iterations;
        let improved = best_val - run.value;
        if run.value <= best_val {
            best = run.argmin;
            best_val = run.value;
        }
        converged = run.converged;
        if !converged || iterations >= spec.max_iters {
            break;
        }
        // a restart that brings no progress confirms the minimum
        if improved.abs() <= spec.value_tol {
            break;
        }
        scale *= 0.5;
    }

    Ok(Minimum { argmin: best, value: best_val, converged, iterations, evaluations: obj.evaluations.get() })
}

/// Run [`minimize`] from every start (concurrently) and keep the best.
/// Ties go to the earliest start, so the result is deterministic.
pub fn minimize_multistart(
    f: impl Fn(&[f64]) -> f64 + Sync,
    starts: &[Vec<f64>],
    bounds: &[(f64, f64)],
    spec: &OptimizerSpec,
) -> Result<Minimum> {
    if starts.is_empty() {
        return Err(Error::InvalidParameter("at least one start point is required".into()));
    }
    let runs: Vec<Result<Minimum>> = starts.par_iter().map(|s| minimize(&f, s, bounds, spec)).collect();
    let mut best: Option<Minimum> = None;
    let mut all_converged = true;
    let mut iterations = 0;
    let mut evaluations = 0;
    for run in runs {
        let run = run?;
        all_converged &= run.converged;
        iterations += run.iterations;
        evaluations += run.evaluations;
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let mut best = best.expect("nonempty starts");
    best.converged = all_converged;
    best.iterations = iterations;
    best.evaluations = evaluations;
    Ok(best)
}

struct Run {
    argmin: Vec<f64>,
    value: f64,
    converged: bool,
    iterations: usize,
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(
    obj: &Bounded<'_, F>,
    start: &[f64],
    start_val: f64,
    scale: f64,
    spec: &OptimizerSpec,
    budget: usize,
) -> Run {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), start_val));
    for i in 0..n {
        let (lo, hi) = obj.bounds[i];
        let width = hi - lo;
        let mut step = if width > 0.0 && width.is_finite() {
            scale * width
        } else {
            scale * start[i].abs().max(1.0)
        };
        if start[i] + step > hi {
            step = -step;
        }
        let mut x = start.to_vec();
        x[i] += step;
        obj.clip(&mut x);
        let v = obj.eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.abs() <= spec.value_tol && diameter <= spec.param_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect();
            obj.clip(&mut p);
            p
        };

        let xr = along(1.0);
        let fr = obj.eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = obj.eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(0.5);
            let fc = obj.eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = obj.eval(&xc);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
            obj.clip(&mut x);
            let v = obj.eval(&x);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (argmin, value) = simplex.swap_remove(0);
    Run { argmin, value, converged, iterations }
}
