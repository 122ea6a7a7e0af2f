//! Deterministic derivative-free minimisation: a coarse grid over the box,
//! bounded Nelder–Mead from the best grid points plus seeded random starts,
//! and a final restart from the overall best point.

use std::cell::Cell;

use rand::rngs::ChaCha8Rng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};

/// One search coordinate. Log-scaled coordinates are searched in `ln x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dimension {
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub log: bool,
}

impl Dimension {
    pub fn linear(lower: f64, upper: f64) -> Self {
        Self { lower, upper, log: false }
    }

    pub fn log(lower: f64, upper: f64) -> Self {
        Self { lower, upper, log: true }
    }

    fn to_search(&self, x: f64) -> f64 {
        if self.log {
            x.ln()
        } else {
            x
        }
    }

    fn value_at(&self, u: f64) -> f64 {
        if self.log {
            u.exp()
        } else {
            u
        }
    }

    fn search_range(&self) -> (f64, f64) {
        (self.to_search(self.lower), self.to_search(self.upper))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub max_evaluations: usize,
    /// Grid points per dimension in the coarse scan (0 disables the scan).
    pub grid_points: usize,
    /// Simplex starts taken from the best grid points.
    pub grid_starts: usize,
    /// Additional uniformly random starts drawn from `seed`.
    pub random_starts: usize,
    pub seed: u64,
    /// Convergence: simplex diameter in search coordinates.
    pub xtol: f64,
    /// Convergence: spread of simplex values.
    pub ftol: f64,
    /// Initial simplex edge as a fraction of each search range.
    pub initial_step: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_evaluations: 3000,
            grid_points: 3,
            grid_starts: 2,
            random_starts: 1,
            seed: 20_240_917,
            xtol: 1e-4,
            ftol: 1e-10,
            initial_step: 0.1,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_evaluations == 0 {
            return Err(Error::param("max_evaluations", "must be positive"));
        }
        if !(self.xtol > 0.0 && self.ftol >= 0.0) {
            return Err(Error::param("xtol", "tolerances must be positive"));
        }
        if !(self.initial_step > 0.0 && self.initial_step <= 1.0) {
            return Err(Error::param("initial_step", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Every simplex run met the tolerances.
    pub converged: bool,
    /// At least one run stopped on the evaluation budget.
    pub budget_exhausted: bool,
    /// Best value after each stage (grid, each start, restart).
    pub trace: Vec<f64>,
}

/// Minimises `f` over the box `dims`. `initial` (physical coordinates) is
/// always used as one of the starts when given. Non-finite objective values
/// count as `+inf`.
pub fn minimize<F>(
    f: F,
    dims: &[Dimension],
    initial: Option<&[f64]>,
    settings: &OptimizerSettings,
    exec: Execution,
) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    settings.validate()?;
    if dims.is_empty() {
        return Err(Error::param("bounds", "no dimensions"));
    }
    for d in dims {
        let ok = d.lower.is_finite() && d.upper.is_finite() && d.lower < d.upper && (!d.log || d.lower > 0.0);
        if !ok {
            return Err(Error::param("bounds", format!("invalid range [{}, {}]", d.lower, d.upper)));
        }
    }
    if let Some(x0) = initial {
        if x0.len() != dims.len() {
            return Err(Error::DimensionMismatch { expected: dims.len(), found: x0.len() });
        }
    }

    let ranges: Vec<(f64, f64)> = dims.iter().map(Dimension::search_range).collect();
    let eval = |u: &[f64]| {
        let x: Vec<f64> = dims.iter().zip(u).map(|(d, &v)| d.value_at(v)).collect();
        let v = f(&x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut evaluations = 0usize;
    let mut trace = Vec::new();

    // coarse grid
    let grid = grid_points(&ranges, settings.grid_points);
    let grid_budget = grid.len().min(settings.max_evaluations / 2);
    let grid = &grid[..grid_budget];
    let grid_values = map_indexed(exec, grid, |_, u| eval(u));
    evaluations += grid.len();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid_values[a].total_cmp(&grid_values[b]).then(a.cmp(&b)));
    if let Some(&i) = order.first() {
        trace.push(grid_values[i]);
    }

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(x0) = initial {
        starts.push(dims.iter().zip(x0).map(|(d, &x)| clamp_search(d.to_search(x), d)).collect());
    }
    starts.extend(order.iter().take(settings.grid_starts).map(|&i| grid[i].clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    for _ in 0..settings.random_starts {
        starts.push(ranges.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect());
    }
    if starts.is_empty() {
        starts.push(ranges.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect());
    }

    // the budget is a hard cap: drop starts that could not build a simplex
    let remaining = settings.max_evaluations.saturating_sub(evaluations);
    starts.truncate((remaining / (dims.len() + 2)).max(1));
    let per_start = remaining / (starts.len() + 1);
    let runs = map_indexed(exec, &starts, |_, s| nelder_mead(&eval, s, &ranges, per_start, settings));

    let mut best: Option<Simplex> = None;
    let mut converged = true;
    let mut exhausted = false;
    for run in runs {
        evaluations += run.evaluations;
        converged &= run.converged;
        exhausted |= !run.converged && run.evaluations >= per_start;
        trace.push(run.value);
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one start");
    if let Some(&i) = order.first() {
        if grid_values[i] < best.value {
            best = Simplex { x: grid[i].clone(), value: grid_values[i], evaluations: 0, converged: false };
        }
    }

    let restart_budget = settings.max_evaluations.saturating_sub(evaluations);
    if restart_budget > dims.len() + 1 {
        let run = nelder_mead(&eval, &best.x, &ranges, restart_budget, settings);
        evaluations += run.evaluations;
        converged &= run.converged;
        exhausted |= !run.converged && run.evaluations >= restart_budget;
        trace.push(run.value);
        if run.value <= best.value {
            best = run;
        }
    } else {
        exhausted = true;
        converged = false;
    }

    Ok(OptimizeResult {
        x: dims.iter().zip(&best.x).map(|(d, &u)| d.value_at(u)).collect(),
        value: best.value,
        evaluations,
        converged,
        budget_exhausted: exhausted,
        trace,
    })
}

fn clamp_search(u: f64, d: &Dimension) -> f64 {
    let (lo, hi) = d.search_range();
    u.clamp(lo, hi)
}

fn grid_points(ranges: &[(f64, f64)], per_dim: usize) -> Vec<Vec<f64>> {
    if per_dim == 0 {
        return Vec::new();
    }
    let axis = |&(lo, hi): &(f64, f64)| -> Vec<f64> {
        // cell centres, so no point sits on the boundary
        (0..per_dim).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / per_dim as f64).collect()
    };
    let axes: Vec<Vec<f64>> = ranges.iter().map(axis).collect();
    let mut out = vec![Vec::new()];
    for a in &axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                a.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

struct Simplex {
    x: Vec<f64>,
    value: f64,
    evaluations: usize,
    converged: bool,
}

fn project(u: &mut [f64], ranges: &[(f64, f64)]) {
    for (v, &(lo, hi)) in u.iter_mut().zip(ranges) {
        *v = v.clamp(lo, hi);
    }
}

/// Nelder–Mead with standard coefficients; trial points are projected onto
/// the box.
fn nelder_mead<E>(eval: &E, start: &[f64], ranges: &[(f64, f64)], budget: usize, s: &OptimizerSettings) -> Simplex
where
    E: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let evals = Cell::new(0usize);
    let f = |u: &[f64]| {
        if evals.get() >= budget {
            return f64::INFINITY;
        }
        evals.set(evals.get() + 1);
        eval(u)
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    project(&mut x0, ranges);
    pts.push(x0.clone());
    for i in 0..n {
        let (lo, hi) = ranges[i];
        let step = s.initial_step * (hi - lo);
        let mut p = x0.clone();
        // step away from the nearer wall
        p[i] = if p[i] + step <= hi { p[i] + step } else { p[i] - step };
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut converged = false;

    while evals.get() < budget {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();

        let spread = (vals[n] - vals[0]).abs();
        let diameter = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diameter <= s.xtol || (spread <= s.ftol && vals[n].is_finite() && diameter <= 1e3 * s.xtol) {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (c - w)).collect();
            project(&mut p, ranges);
            p
        };

        let xr = along(1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        // outside contraction if the reflection helped at all, inside otherwise
        let xc = along(if fr < vals[n] { 0.5 } else { -0.5 });
        let fc = f(&xc);
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=n {
            let p: Vec<f64> = pts[i].iter().zip(&pts[0]).map(|(a, b)| b + 0.5 * (a - b)).collect();
            vals[i] = f(&p);
            pts[i] = p;
        }
    }

    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b))).unwrap();
    Simplex { x: pts[best].clone(), value: vals[best], evaluations: evals.get(), converged }
}
