//! Mountain-pass critical points of the discrete action.
//!
//! A polygonal path from `0` to `e_k` is deformed downhill at its highest
//! point until the gradient there is small; damped Newton on the discrete
//! Euler-Lagrange equations then sharpens that point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{golden_section_max, ActionContext};
use crate::error::{Error, Result};
use crate::linalg::{riesz_ek, solve_periodic_block_tridiagonal};
use crate::trajectory::{TimeGrid, Trajectory};

#[derive(Clone, Debug)]
pub struct PathPolygon {
    points: Vec<Trajectory>,
}

impl PathPolygon {
    /// `s -> s e` sampled at `count` equally spaced `s` in `[0, 1]`.
    pub fn segment(endpoint: &Trajectory, count: usize) -> Result<Self> {
        if count < 3 {
            return Err(Error::InvalidConfig(format!("a path needs at least 3 points, got {count}")));
        }
        let points = (0..count)
            .map(|j| {
                if j + 1 == count {
                    endpoint.clone()
                } else {
                    endpoint.scaled(j as f64 / (count - 1) as f64)
                }
            })
            .collect();
        Ok(Self { points })
    }

    /// Checks that the first point is zero, the last equals `endpoint`, and
    /// all points share one layout.
    pub fn from_points(points: Vec<Trajectory>, endpoint: &Trajectory) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidConfig(format!(
                "a path needs at least 3 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.same_layout(endpoint)) {
            return Err(Error::GridMismatch("path points are on different grids".into()));
        }
        if points[0].as_slice().iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidConfig("path must start at 0".into()));
        }
        if points.last().map(|p| p.as_slice()) != Some(endpoint.as_slice()) {
            return Err(Error::InvalidConfig("path must end at e_k".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Trajectory] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Trajectory> {
        self.points
    }

    fn chords(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| w[0].distance_ek(&w[1]).unwrap_or(f64::INFINITY))
            .collect()
    }

    /// Same polygon resampled at equal `E_k` chord length; the endpoints are
    /// copied unchanged.
    fn redistributed(&self) -> Result<PathPolygon> {
        let chords = self.chords();
        let total: f64 = chords.iter().sum();
        let count = self.points.len();
        let mut cumulative = Vec::with_capacity(count);
        cumulative.push(0.0);
        for c in &chords {
            cumulative.push(cumulative.last().unwrap() + c);
        }
        let mut points = Vec::with_capacity(count);
        points.push(self.points[0].clone());
        let mut seg = 0;
        for j in 1..count - 1 {
            let target = total * j as f64 / (count - 1) as f64;
            while seg + 1 < chords.len() && cumulative[seg + 1] < target {
                seg += 1;
            }
            let w = if chords[seg] > 0.0 {
                ((target - cumulative[seg]) / chords[seg]).clamp(0.0, 1.0)
            } else {
                0.0
            };
            points.push(self.points[seg].lerp(&self.points[seg + 1], w)?);
        }
        points.push(self.points[count - 1].clone());
        Ok(PathPolygon { points })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub max_iter: usize,
    pub tol_residual: f64,
    /// Smallest damping factor tried before a step is taken regardless.
    pub min_damping: f64,
    /// Consecutive residual increases tolerated before giving up.
    pub divergence_window: usize,
    /// Relative step for the finite-difference Hessian blocks.
    pub hessian_step: f64,
    /// Residual-descent steps taken after a singular Jacobian.
    pub fallback_steps: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol_residual: 1e-9,
            min_damping: 1.0 / 1024.0,
            divergence_window: 5,
            hessian_step: 1e-6,
            fallback_steps: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpaConfig {
    pub path_points: usize,
    pub max_outer: usize,
    pub tol_grad: f64,
    /// Newton takes over once the `L^2` gradient norm at the path maximum is
    /// at most this value.
    pub handoff_grad: f64,
    pub armijo: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Resample the path once the largest chord exceeds this multiple of the
    /// smallest.
    pub redistribute_ratio: f64,
    pub newton: NewtonConfig,
}

impl Default for MpaConfig {
    fn default() -> Self {
        Self {
            path_points: 33,
            max_outer: 20_000,
            tol_grad: 1e-5,
            handoff_grad: 1e-2,
            armijo: 1e-4,
            initial_step: 1.0,
            max_step: 4.0,
            shrink: 0.5,
            max_backtracks: 40,
            redistribute_ratio: 2.0,
            newton: NewtonConfig::default(),
        }
    }
}

impl MpaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.path_points < 3 || self.path_points % 2 == 0 {
            return bad("path_points must be odd and at least 3");
        }
        let positive = [
            self.tol_grad,
            self.handoff_grad,
            self.armijo,
            self.initial_step,
            self.max_step,
            self.newton.tol_residual,
            self.newton.min_damping,
            self.newton.hessian_step,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return bad("tolerances and step parameters must be positive");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if !(self.redistribute_ratio > 1.0) {
            return bad("redistribute_ratio must exceed 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// The path loop hit `max_outer` before the handoff threshold.
    MaxIterations,
    /// The path loop could not lower the ceiling any further.
    Stalled,
    /// Newton ran out of iterations above `tol_residual`.
    NewtonMaxIterations,
    /// Newton converged but the gradient norm still exceeds `tol_grad`.
    GradientTooLarge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub q: Trajectory,
    pub iterations: usize,
    pub residual_sup: f64,
    /// `residual_sup` before the first step and after every step.
    pub history: Vec<f64>,
    pub converged: bool,
    pub fallbacks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub q_k: Trajectory,
    pub c_k: f64,
    pub grad_norm: f64,
    pub residual_sup: f64,
    pub outer_iterations: usize,
    pub newton_iterations: usize,
    pub converged: bool,
    pub alpha_check: bool,
    #[serde(rename = "M0_check")]
    pub m0_check: bool,
    pub status: SolveStatus,
    /// How the path deformation loop ended.
    pub path_status: SolveStatus,
    pub alpha: f64,
    #[serde(rename = "M0")]
    pub m0: f64,
    /// Largest vertex action at the start and after every outer iteration.
    pub ceiling_history: Vec<f64>,
    /// Gradient norm at the refined path maximum per outer iteration.
    pub grad_history: Vec<f64>,
    pub newton_history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub report: SolveReport,
    /// Path at the end of the deformation loop, for warm starts.
    pub path: PathPolygon,
}

/// Bounds the report is checked against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub alpha: f64,
    pub m0: f64,
}

/// Slack on the lower end of the bracket `alpha <= c_k <= M0`.
pub const ALPHA_SLACK: f64 = 5e-3;
pub const M0_SLACK: f64 = 1e-9;

/// Moves shorter than this in the E_k norm count as a stalled line search.
const MIN_DISPLACEMENT: f64 = 1e-10;

/// Sup over nodes of the Euclidean norm of the discrete Euler-Lagrange
/// residual.
pub fn residual(ctx: &ActionContext, q: &Trajectory) -> Result<f64> {
    Ok(node_sup(&ctx.gradient(q)?))
}

/// Grid-refinement check for a solution `q` on the grid of `coarse`:
/// `q` is interpolated linearly onto the grid with half the step, polished
/// there by Newton, and compared with itself at the shared nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementCheck {
    pub fine_step: f64,
    /// `sup |q_h - q_{h/2}|` over the shared nodes.
    pub gap: f64,
    /// `|I_h(q_h) - I_{h/2}(q_{h/2})|`.
    pub action_gap: f64,
    pub fine_converged: bool,
    pub fine_residual_sup: f64,
}

pub fn refinement_check(coarse: &ActionContext, q: &Trajectory, cfg: &NewtonConfig) -> Result<RefinementCheck> {
    let grid = coarse.grid();
    let fine_grid = TimeGrid::new(grid.half_period(), 2 * grid.len())?;
    let fine = ActionContext::new(coarse.spec().clone(), fine_grid);
    let n = q.dim();
    let nodes = q.len();
    let mut values = vec![0.0; 2 * nodes * n];
    for i in 0..nodes {
        let j = (i + 1) % nodes;
        for c in 0..n {
            values[2 * i * n + c] = q.at(i)[c];
            values[(2 * i + 1) * n + c] = 0.5 * (q.at(i)[c] + q.at(j)[c]);
        }
    }
    let start = Trajectory::from_values(fine_grid, n, values)?;
    let refined = match newton_refine(&fine, &start, cfg) {
        Ok(r) => r,
        Err(Error::Diverged { .. } | Error::SingularJacobian { .. }) => {
            return Ok(RefinementCheck {
                fine_step: fine_grid.step(),
                gap: f64::INFINITY,
                action_gap: f64::INFINITY,
                fine_converged: false,
                fine_residual_sup: f64::INFINITY,
            })
        }
        Err(e) => return Err(e),
    };
    let gap = (0..nodes)
        .map(|i| {
            q.at(i)
                .iter()
                .zip(refined.q.at(2 * i))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    Ok(RefinementCheck {
        fine_step: fine_grid.step(),
        gap,
        action_gap: (coarse.action(q)? - fine.action(&refined.q)?).abs(),
        fine_converged: refined.converged,
        fine_residual_sup: refined.residual_sup,
    })
}

fn node_sup(v: &Trajectory) -> f64 {
    (0..v.len())
        .map(|i| v.at(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Mountain-pass solve from the straight path `s -> s e_k`.
pub fn solve_mountain_pass(ctx: &ActionContext, endpoint: &Trajectory, bracket: Bracket, cfg: &MpaConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    let path = PathPolygon::segment(endpoint, cfg.path_points)?;
    solve_from_path(ctx, path, bracket, cfg)
}

/// Mountain-pass solve from a given initial path.
pub fn solve_from_path(ctx: &ActionContext, path: PathPolygon, bracket: Bracket, cfg: &MpaConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    if path.points()[0].grid() != ctx.grid() || path.points()[0].dim() != ctx.dim() {
        return Err(Error::GridMismatch("path and context grids differ".into()));
    }
    let mut state = PathState::new(ctx, path)?;
    let mut ceiling = state.ceiling();
    let mut ceiling_history = vec![ceiling];
    let mut grad_history = Vec::new();
    let mut step = cfg.initial_step;
    let mut status = SolveStatus::MaxIterations;
    let mut outer = 0;
    let mut top;
    loop {
        let (w, w_value) = state.refine_max(ctx)?;
        if bracket.alpha > 0.0 && w_value < bracket.alpha / 2.0 {
            return Err(Error::CollapsedPath {
                max_action: w_value,
                threshold: bracket.alpha / 2.0,
            });
        }
        let g = ctx.gradient(&w)?;
        let gnorm = g.norm_l2();
        grad_history.push(gnorm);
        top = w.clone();
        if gnorm <= cfg.handoff_grad {
            status = SolveStatus::Converged;
            break;
        }
        if outer >= cfg.max_outer {
            break;
        }
        outer += 1;
        let movers = state.movers();
        let cap = state.mean_chord();
        let Some(candidate) = state.descend(ctx, &movers, &g, ceiling, cap, &mut step, cfg)? else {
            status = SolveStatus::Stalled;
            break;
        };
        state.apply(candidate);
        let chords = state.path.chords();
        let (lo, hi) = chords
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
        if hi > cfg.redistribute_ratio * lo {
            let candidate = PathState::new(ctx, state.path.redistributed()?)?;
            if candidate.ceiling() <= state.ceiling() {
                state = candidate;
            }
        }
        ceiling = state.ceiling();
        ceiling_history.push(ceiling);
    }
    let path = state.path;
    let path_status = status;

    let newton = match status {
        SolveStatus::Converged | SolveStatus::Stalled => Some(newton_refine(ctx, &top, &cfg.newton)?),
        _ => None,
    };
    let q_k = newton.as_ref().map_or(top, |n| n.q.clone());
    let g = ctx.gradient(&q_k)?;
    let grad_norm = g.norm_l2();
    let residual_sup = node_sup(&g);
    let c_k = ctx.action(&q_k)?;
    if let Some(n) = &newton {
        status = if !n.converged {
            SolveStatus::NewtonMaxIterations
        } else if grad_norm > cfg.tol_grad {
            SolveStatus::GradientTooLarge
        } else {
            SolveStatus::Converged
        };
    }
    let converged = status == SolveStatus::Converged && grad_norm <= cfg.tol_grad && residual_sup <= cfg.newton.tol_residual;
    let report = SolveReport {
        c_k,
        grad_norm,
        residual_sup,
        outer_iterations: outer,
        newton_iterations: newton.as_ref().map_or(0, |n| n.iterations),
        converged,
        alpha_check: c_k >= bracket.alpha - ALPHA_SLACK,
        m0_check: c_k <= bracket.m0 + M0_SLACK,
        status,
        path_status,
        alpha: bracket.alpha,
        m0: bracket.m0,
        ceiling_history,
        grad_history,
        newton_history: newton.map(|n| n.history).unwrap_or_default(),
        q_k,
    };
    Ok(SolveOutcome { report, path })
}

/// Path with cached actions at its vertices and segment midpoints.
struct PathState {
    path: PathPolygon,
    values: Vec<f64>,
    mids: Vec<f64>,
}

struct Candidate {
    points: Vec<(usize, Trajectory, f64)>,
    mids: Vec<(usize, f64)>,
}

impl PathState {
    fn new(ctx: &ActionContext, path: PathPolygon) -> Result<Self> {
        let pts = path.points();
        let values = pts.par_iter().map(|p| ctx.action(p)).collect::<Result<Vec<_>>>()?;
        let mids = pts
            .par_windows(2)
            .map(|w| ctx.action(&w[0].lerp(&w[1], 0.5)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { path, values, mids })
    }

    /// Largest sampled action along the polygon.
    fn ceiling(&self) -> f64 {
        self.best_sample().1
    }

    /// Samples interleave vertex `j` at `2j` and the midpoint of segment `j`
    /// at `2j + 1`; the smallest index wins ties.
    fn best_sample(&self) -> (usize, f64) {
        let mut best = (0, self.values[0]);
        for j in 1..2 * self.values.len() - 1 {
            let v = if j % 2 == 0 { self.values[j / 2] } else { self.mids[j / 2] };
            if v > best.1 {
                best = (j, v);
            }
        }
        best
    }

    fn mean_chord(&self) -> f64 {
        let chords = self.path.chords();
        chords.iter().sum::<f64>() / chords.len() as f64
    }

    /// Interior vertices carrying the best sample: the vertex itself, or
    /// both ends of the segment whose midpoint it is.
    fn movers(&self) -> Vec<usize> {
        let (j, _) = self.best_sample();
        let last = self.values.len() - 1;
        let raw = if j % 2 == 0 { vec![j / 2] } else { vec![j / 2, j / 2 + 1] };
        raw.into_iter().filter(|&r| r > 0 && r < last).collect()
    }

    /// Refined maximizer of the action near the best sample.
    fn refine_max(&self, ctx: &ActionContext) -> Result<(Trajectory, f64)> {
        let pts = self.path.points();
        let (j, best_value) = self.best_sample();
        let brackets: Vec<(usize, f64, f64)> = if j % 2 == 1 {
            vec![(j / 2, 0.0, 1.0)]
        } else {
            let m = j / 2;
            let mut b = Vec::new();
            if m > 0 {
                b.push((m - 1, 0.5, 1.0));
            }
            if m + 1 < pts.len() {
                b.push((m, 0.0, 0.5));
            }
            b
        };
        let mut best = (self.sample_point(j)?, best_value);
        for (seg, lo, hi) in brackets {
            let (s, v) = golden_section_max(lo, hi, 1e-6, |s| ctx.action(&pts[seg].lerp(&pts[seg + 1], s)?))?;
            if v > best.1 {
                best = (pts[seg].lerp(&pts[seg + 1], s)?, v);
            }
        }
        Ok(best)
    }

    fn sample_point(&self, j: usize) -> Result<Trajectory> {
        let pts = self.path.points();
        if j % 2 == 0 {
            Ok(pts[j / 2].clone())
        } else {
            pts[j / 2].lerp(&pts[j / 2 + 1], 0.5)
        }
    }

    /// Backtracking translation of the `movers` along the negative Sobolev
    /// gradient `g`. A step is accepted once every changed sample lies at
    /// least `armijo * tau * |s|^2` below `ceiling`.
    fn descend(
        &self,
        ctx: &ActionContext,
        movers: &[usize],
        g: &Trajectory,
        ceiling: f64,
        cap: f64,
        step: &mut f64,
        cfg: &MpaConfig,
    ) -> Result<Option<Candidate>> {
        if movers.is_empty() {
            return Ok(None);
        }
        let s = riesz_ek(g);
        let slope = g.inner_l2(&s)?;
        if !(slope > 0.0) {
            return Ok(None);
        }
        let pts = self.path.points();
        let mut segs: Vec<usize> = movers.iter().flat_map(|&r| [r - 1, r]).collect();
        segs.dedup();
        let max_tau = cfg.max_step.min(cap / slope.sqrt());
        let mut tau = (*step / cfg.shrink).min(max_tau);
        for _ in 0..cfg.max_backtracks {
            if tau * slope.sqrt() < MIN_DISPLACEMENT {
                break;
            }
            let bound = ceiling - cfg.armijo * tau * slope;
            let moved = |r: usize| -> Result<Trajectory> { pts[r].axpy(-tau, &s) };
            let mut points = Vec::with_capacity(movers.len());
            let mut ok = true;
            for &r in movers {
                let p = moved(r)?;
                let v = ctx.action(&p)?;
                if !(v <= bound) {
                    ok = false;
                    break;
                }
                points.push((r, p, v));
            }
            let mut mids = Vec::with_capacity(segs.len());
            if ok {
                let at = |r: usize| -> Result<Trajectory> {
                    match points.iter().find(|(i, _, _)| *i == r) {
                        Some((_, p, _)) => Ok(p.clone()),
                        None => Ok(pts[r].clone()),
                    }
                };
                for &a in &segs {
                    let v = ctx.action(&at(a)?.lerp(&at(a + 1)?, 0.5)?)?;
                    if !(v <= bound) {
                        ok = false;
                        break;
                    }
                    mids.push((a, v));
                }
            }
            if ok {
                *step = tau;
                return Ok(Some(Candidate { points, mids }));
            }
            tau *= cfg.shrink;
        }
        Ok(None)
    }

    fn apply(&mut self, c: Candidate) {
        for (r, p, v) in c.points {
            self.path.points[r] = p;
            self.values[r] = v;
        }
        for (a, v) in c.mids {
            self.mids[a] = v;
        }
    }
}

/// Block-tridiagonal Jacobian of `F = -gradient`: off-diagonal blocks
/// `I / h^2`, diagonal blocks `-2 I / h^2 - H_K + H_W`.
struct Jacobian {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

fn jacobian(ctx: &ActionContext, q: &Trajectory, rel_step: f64) -> Jacobian {
    let n = ctx.dim();
    let nodes = q.len();
    let nb = n * n;
    let h2 = ctx.grid().step().powi(2);
    let mut lower = vec![0.0; nodes * nb];
    let mut upper = vec![0.0; nodes * nb];
    for i in 0..nodes {
        for a in 0..n {
            lower[i * nb + a * n + a] = 1.0 / h2;
            upper[i * nb + a * n + a] = 1.0 / h2;
        }
    }
    let mut diag = vec![0.0; nodes * nb];
    diag.par_chunks_mut(nb).enumerate().for_each(|(i, block)| {
        let t = ctx.times()[i];
        let qi = q.at(i);
        let delta = rel_step * (1.0 + qi.iter().map(|x| x * x).sum::<f64>().sqrt());
        let mut x = qi.to_vec();
        let mut plus = vec![0.0; n];
        let mut minus = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        // column b of the Hessian of W - K
        let mut grad_wk = |x: &[f64], out: &mut [f64]| {
            ctx.spec().grad_w(t, x, out);
            ctx.spec().grad_k(t, x, &mut scratch);
            out.iter_mut().zip(&scratch).for_each(|(o, s)| *o -= s);
        };
        for b in 0..n {
            x[b] = qi[b] + delta;
            grad_wk(&x, &mut plus);
            x[b] = qi[b] - delta;
            grad_wk(&x, &mut minus);
            x[b] = qi[b];
            for a in 0..n {
                block[a * n + b] = (plus[a] - minus[a]) / (2.0 * delta);
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                let s = 0.5 * (block[a * n + b] + block[b * n + a]);
                block[a * n + b] = s;
                block[b * n + a] = s;
            }
            block[a * n + a] -= 2.0 / h2;
        }
    });
    Jacobian { lower, diag, upper }
}

impl Jacobian {
    /// `J v` for the merit-descent fallback.
    fn apply(&self, v: &Trajectory) -> Trajectory {
        let n = v.dim();
        let nb = n * n;
        let nodes = v.len();
        let mut out = Trajectory::zeros(*v.grid(), n);
        for i in 0..nodes {
            let prev = (i + nodes - 1) % nodes;
            let next = (i + 1) % nodes;
            let o = out.at_mut(i);
            for a in 0..n {
                let mut acc = 0.0;
                for b in 0..n {
                    acc += self.lower[i * nb + a * n + b] * v.at(prev)[b]
                        + self.diag[i * nb + a * n + b] * v.at(i)[b]
                        + self.upper[i * nb + a * n + b] * v.at(next)[b];
                }
                o[a] = acc;
            }
        }
        out
    }
}

/// Damped Newton on `F(q) = D2 q - grad K + grad W - f = 0`.
///
/// Each step solves `J dq = -F` and halves the step until the sup residual
/// drops, down to `min_damping`. A singular Jacobian triggers
/// `fallback_steps` descent steps on `|F|^2 / 2` and one retry.
pub fn newton_refine(ctx: &ActionContext, q_start: &Trajectory, cfg: &NewtonConfig) -> Result<NewtonReport> {
    let mut q = q_start.clone();
    let mut f = ctx.residual_field(&q)?;
    let mut r = node_sup(&f);
    let mut history = vec![r];
    let mut growth = 0;
    let mut fallbacks = 0;
    let mut iterations = 0;
    while r > cfg.tol_residual && iterations < cfg.max_iter {
        let jac = jacobian(ctx, &q, cfg.hessian_step);
        let rhs: Vec<f64> = f.as_slice().iter().map(|v| -v).collect();
        let dq = match solve_periodic_block_tridiagonal(ctx.dim(), &jac.lower, &jac.diag, &jac.upper, &rhs) {
            Ok(dq) => Trajectory::from_values(*q.grid(), q.dim(), dq).map_err(|_| Error::Diverged { iteration: iterations })?,
            Err(_) if fallbacks == 0 => {
                fallbacks += 1;
                q = merit_descent(ctx, &q, cfg.fallback_steps, cfg.hessian_step)?;
                f = ctx.residual_field(&q)?;
                r = node_sup(&f);
                history.push(r);
                continue;
            }
            Err(_) => return Err(Error::SingularJacobian { iteration: iterations }),
        };
        iterations += 1;
        let mut lambda = 1.0;
        let (next, next_f, next_r) = loop {
            let trial = q.axpy(lambda, &dq)?;
            let tf = ctx.residual_field(&trial)?;
            let tr = node_sup(&tf);
            if (tr.is_finite() && tr < r) || lambda <= cfg.min_damping {
                break (trial, tf, tr);
            }
            lambda *= 0.5;
        };
        if !next_r.is_finite() {
            return Err(Error::Diverged { iteration: iterations });
        }
        growth = if next_r >= r { growth + 1 } else { 0 };
        if growth >= cfg.divergence_window {
            return Err(Error::Diverged { iteration: iterations });
        }
        q = next;
        f = next_f;
        r = next_r;
        history.push(r);
    }
    Ok(NewtonReport {
        converged: r <= cfg.tol_residual,
        q,
        iterations,
        residual_sup: r,
        history,
        fallbacks,
    })
}

/// Backtracking descent on `|F|^2 / 2` along `-J F`.
fn merit_descent(ctx: &ActionContext, q: &Trajectory, steps: usize, rel_step: f64) -> Result<Trajectory> {
    let mut q = q.clone();
    for _ in 0..steps {
        let f = ctx.residual_field(&q)?;
        let merit = f.inner_l2(&f)?;
        let dir = jacobian(ctx, &q, rel_step).apply(&f);
        let slope = dir.inner_l2(&dir)?;
        if !(slope > 0.0) {
            break;
        }
        let mut tau = merit / slope;
        let mut moved = false;
        for _ in 0..40 {
            let trial = q.axpy(-tau, &dir)?;
            let tf = ctx.residual_field(&trial)?;
            if tf.inner_l2(&tf)? < merit {
                q = trial;
                moved = true;
                break;
            }
            tau *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(q)
}
