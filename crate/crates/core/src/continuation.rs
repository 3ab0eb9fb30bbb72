//! Ladders of half-periods: solve each periodic problem, warm-start the
//! next from the zero extension of the previous path, and measure how the
//! solutions settle on a fixed central window.

use serde::{Deserialize, Serialize};

use crate::action::{geometry_constants, geometry_constants_unchecked, ActionContext, GeometryConstants};
use crate::error::{Error, Result};
use crate::mpa::{solve_from_path, solve_mountain_pass, Bracket, MpaConfig, PathPolygon, SolveOutcome, SolveReport};
use crate::potential::{HypothesisReport, PotentialSpec};
use crate::trajectory::{TimeGrid, Trajectory};

pub const DEFAULT_LADDER: [f64; 9] = [1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 80.0, 160.0, 250.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub step: f64,
    pub mpa: MpaConfig,
    /// Half-width of the comparison window; `min(10, smallest k)` if unset.
    pub window: Option<f64>,
    pub margin: f64,
    pub tail_tol: f64,
    pub window_tol: f64,
    /// Window distances below this are treated as converged noise by the
    /// Cauchy check.
    pub cauchy_floor: f64,
    pub m1_slack: f64,
    /// Nodes at each end of a solution ramped to zero before embedding.
    pub taper_nodes: usize,
    pub warm_start: bool,
    /// Skip the admissibility gate.
    pub force: bool,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            step: 0.05,
            mpa: MpaConfig::default(),
            window: None,
            margin: 5.0,
            tail_tol: 1e-3,
            window_tol: 1e-2,
            cauchy_floor: 1e-8,
            m1_slack: 1e-6,
            taper_nodes: 5,
            warm_start: true,
            force: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KRecord {
    pub k: f64,
    pub c_k: f64,
    pub norm_ek: f64,
    pub residual_sup: f64,
    pub grad_norm: f64,
    pub tail_sup_q: f64,
    pub tail_sup_qdot: f64,
    pub converged: bool,
    pub alpha_check: bool,
    #[serde(rename = "M0_check")]
    pub m0_check: bool,
    pub outer_iterations: usize,
    pub newton_iterations: usize,
    pub warm_started: bool,
    pub failure: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowDistance {
    pub k_from: f64,
    pub k_to: f64,
    pub window: f64,
    pub q: f64,
    pub qdot: f64,
    pub qddot: f64,
}

impl WindowDistance {
    pub fn max(&self) -> f64 {
        self.q.max(self.qdot).max(self.qddot)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub alpha: f64,
    #[serde(rename = "M0")]
    pub m0: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub all_converged: bool,
    pub bracketed: bool,
    pub bounded_by_m1: bool,
    /// Consecutive window distances are nonincreasing (up to the floor).
    pub cauchy: bool,
    pub tail_decay: bool,
    /// Every pair of solutions is within `window_tol` on the window.
    pub windows_within_tol: bool,
}

impl Verdicts {
    pub fn all(&self) -> bool {
        self.all_converged && self.bracketed && self.bounded_by_m1 && self.cauchy && self.tail_decay && self.windows_within_tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub spec_name: String,
    pub step: f64,
    pub records: Vec<KRecord>,
    /// Consecutive pairs of the ladder.
    pub window_distances: Vec<WindowDistance>,
    /// All pairs `i < j`.
    pub pairwise_distances: Vec<WindowDistance>,
    pub bounds: Bounds,
    pub verdicts: Verdicts,
}

#[derive(Clone, Debug)]
pub struct ContinuationOutcome {
    pub report: ContinuationReport,
    pub geometry: GeometryConstants,
    /// Solve reports of the ladder entries, `None` where the solve failed.
    pub solves: Vec<Option<SolveReport>>,
}

/// Solves the ladder in order. A single failed entry is recorded and the
/// next one starts cold; two consecutive failures abort.
pub fn run_sequence(
    spec: &PotentialSpec,
    report: &HypothesisReport,
    ladder: &[f64],
    cfg: &ContinuationConfig,
) -> Result<ContinuationOutcome> {
    validate_ladder(ladder)?;
    cfg.mpa.validate()?;
    let ctx1 = ActionContext::new(spec.clone(), TimeGrid::with_step(1.0, cfg.step)?);
    let geometry = if cfg.force {
        geometry_constants_unchecked(&ctx1, report)?
    } else {
        geometry_constants(&ctx1, report)?
    };
    let bracket = Bracket {
        alpha: geometry.alpha,
        m0: geometry.m0,
    };
    let mut records = Vec::new();
    let mut solves: Vec<Option<SolveReport>> = Vec::new();
    let mut previous: Option<SolveOutcome> = None;
    let mut failures_in_row = 0;
    for &k in ladder {
        let grid = TimeGrid::with_step(k, cfg.step)?;
        let ctx = ActionContext::new(spec.clone(), grid);
        let endpoint = geometry.endpoint(&grid)?;
        let warm = match (&previous, cfg.warm_start) {
            (Some(prev), true) => Some(warm_path(&ctx, prev, &endpoint, cfg.taper_nodes)?),
            _ => None,
        };
        let warm_started = warm.is_some();
        let result = match warm {
            Some(path) => solve_from_path(&ctx, path, bracket, &cfg.mpa),
            None => solve_mountain_pass(&ctx, &endpoint, bracket, &cfg.mpa),
        };
        let outcome = match result {
            Ok(o) => Ok(o),
            Err(e @ (Error::CollapsedPath { .. } | Error::SingularJacobian { .. } | Error::Diverged { .. })) => Err(e),
            Err(e) => return Err(e),
        };
        match outcome {
            Ok(o) if o.report.converged => {
                failures_in_row = 0;
                records.push(record(k, &o.report, cfg.margin, warm_started, None));
                solves.push(Some(o.report.clone()));
                previous = Some(o);
            }
            other => {
                failures_in_row += 1;
                let failure = match &other {
                    Ok(o) => format!("not converged: {:?}", o.report.status),
                    Err(e) => e.to_string(),
                };
                if failures_in_row >= 2 {
                    return Err(Error::LadderAborted { k });
                }
                match other {
                    Ok(o) => {
                        records.push(record(k, &o.report, cfg.margin, warm_started, Some(failure)));
                        solves.push(Some(o.report));
                    }
                    Err(_) => {
                        records.push(KRecord {
                            k,
                            c_k: f64::NAN,
                            norm_ek: f64::NAN,
                            residual_sup: f64::NAN,
                            grad_norm: f64::NAN,
                            tail_sup_q: f64::NAN,
                            tail_sup_qdot: f64::NAN,
                            converged: false,
                            alpha_check: false,
                            m0_check: false,
                            outer_iterations: 0,
                            newton_iterations: 0,
                            warm_started,
                            failure: Some(failure),
                        });
                        solves.push(None);
                    }
                }
                previous = None;
            }
        }
    }

    let window = cfg.window.unwrap_or_else(|| 10f64.min(ladder[0]));
    let solved: Vec<(f64, &Trajectory)> = ladder
        .iter()
        .zip(&solves)
        .filter_map(|(&k, s)| s.as_ref().filter(|r| r.converged).map(|r| (k, &r.q_k)))
        .collect();
    let mut window_distances = Vec::new();
    for pair in solved.windows(2) {
        window_distances.push(window_distance(pair[0].1, pair[1].1, window)?);
    }
    let mut pairwise_distances = Vec::new();
    for i in 0..solved.len() {
        for j in i + 1..solved.len() {
            pairwise_distances.push(window_distance(solved[i].1, solved[j].1, window)?);
        }
    }
    let bounds = Bounds {
        alpha: geometry.alpha,
        m0: geometry.m0,
        m1: geometry.m1,
    };
    let verdicts = Verdicts {
        all_converged: records.iter().all(|r| r.converged),
        bracketed: records.iter().all(|r| r.alpha_check && r.m0_check),
        bounded_by_m1: records.iter().all(|r| r.norm_ek <= geometry.m1 + cfg.m1_slack),
        cauchy: window_distances
            .windows(2)
            .all(|w| w[1].max() <= w[0].max().max(cfg.cauchy_floor)),
        tail_decay: records.last().is_some_and(|r| r.tail_sup_q <= cfg.tail_tol),
        windows_within_tol: pairwise_distances.iter().all(|d| d.q <= cfg.window_tol),
    };
    Ok(ContinuationOutcome {
        report: ContinuationReport {
            spec_name: spec.name.clone(),
            step: cfg.step,
            records,
            window_distances,
            pairwise_distances,
            bounds,
            verdicts,
        },
        geometry,
        solves,
    })
}

fn validate_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::InvalidConfig("empty ladder".into()));
    }
    if ladder.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
        return Err(Error::InvalidConfig("ladder entries must be positive".into()));
    }
    if ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("ladder must be strictly increasing".into()));
    }
    Ok(())
}

fn record(k: f64, r: &SolveReport, margin: f64, warm_started: bool, failure: Option<String>) -> KRecord {
    let (tail_sup_q, tail_sup_qdot) = tail_sup(&r.q_k, margin);
    KRecord {
        k,
        c_k: r.c_k,
        norm_ek: r.q_k.norm_ek(),
        residual_sup: r.residual_sup,
        grad_norm: r.grad_norm,
        tail_sup_q,
        tail_sup_qdot,
        converged: r.converged,
        alpha_check: r.alpha_check,
        m0_check: r.m0_check,
        outer_iterations: r.outer_iterations,
        newton_iterations: r.newton_iterations,
        warm_started,
        failure,
    }
}

fn node_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `sup |q|` and `sup |q'|` over nodes with `|t| >= k - margin`.
pub fn tail_sup(q: &Trajectory, margin: f64) -> (f64, f64) {
    let k = q.grid().half_period();
    let h = q.grid().step();
    let dq = q.derivative();
    let mut out = (0.0f64, 0.0f64);
    for i in 0..q.len() {
        if q.grid().node(i).abs() >= k - margin - 1e-9 * h {
            out.0 = out.0.max(node_norm(q.at(i)));
            out.1 = out.1.max(node_norm(dq.at(i)));
        }
    }
    out
}

/// Zero-extends `q` after ramping its last `taper` nodes at each end to 0.
pub fn taper_and_embed(q: &Trajectory, half_period: f64, taper: usize) -> Result<Trajectory> {
    let mut tapered = q.clone();
    let n = q.len();
    if taper > 0 {
        for i in 0..n {
            let d = i.min(n - i);
            if d < taper {
                let w = d as f64 / taper as f64;
                tapered.at_mut(i).iter_mut().for_each(|v| *v *= w);
            }
        }
    }
    tapered.embed_zero(half_period)
}

/// Interior of the previous final path, tapered and embedded, with the
/// highest vertex replaced by the previous solution.
fn warm_path(ctx: &ActionContext, prev: &SolveOutcome, endpoint: &Trajectory, taper: usize) -> Result<PathPolygon> {
    let k = ctx.grid().half_period();
    let old = prev.path.points();
    let mut points = Vec::with_capacity(old.len());
    points.push(ctx.zero());
    for p in &old[1..old.len() - 1] {
        points.push(taper_and_embed(p, k, taper)?);
    }
    points.push(endpoint.clone());
    let mut best = (1, f64::NEG_INFINITY);
    for (i, p) in points.iter().enumerate().take(old.len() - 1).skip(1) {
        let v = ctx.action(p)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    points[best.0] = taper_and_embed(&prev.report.q_k, k, taper)?;
    PathPolygon::from_points(points, endpoint)
}

/// Sups of the differences of values, central first differences and
/// second differences over the nodes with `|t| <= window`.
pub fn window_distance(a: &Trajectory, b: &Trajectory, window: f64) -> Result<WindowDistance> {
    let (ka, kb) = (a.grid().half_period(), b.grid().half_period());
    if window > ka.min(kb) {
        return Err(Error::WindowTooLarge {
            window,
            half_period: ka.min(kb),
        });
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (small, large) = if ka <= kb { (a, b) } else { (b, a) };
    let offset = small.grid().offset_in(large.grid())?;
    let (ds, dl) = (small.derivative(), large.derivative());
    let (dds, ddl) = (small.second_derivative(), large.second_derivative());
    let h = small.grid().step();
    let mut out = WindowDistance {
        k_from: ka,
        k_to: kb,
        window,
        q: 0.0,
        qdot: 0.0,
        qddot: 0.0,
    };
    let sup = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    for i in 0..small.len() {
        if small.grid().node(i).abs() > window + 1e-9 * h {
            continue;
        }
        let j = i + offset;
        out.q = out.q.max(sup(small.at(i), large.at(j)));
        out.qdot = out.qdot.max(sup(ds.at(i), dl.at(j)));
        out.qddot = out.qddot.max(sup(dds.at(i), ddl.at(j)));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBand {
    /// Band `t_lo <= |t| <= t_hi`.
    pub t_lo: f64,
    pub t_hi: f64,
    pub sup_q: f64,
    pub sup_qdot: f64,
    /// Largest sliding-window bound on `|q'|` in the band.
    pub bound: f64,
}

/// `sqrt 2 * (int_{t-1/2}^{t+1/2} |q'|^2 + |q''|^2)^{1/2}` at every node,
/// by the trapezoid rule over `ceil(1 / (2h))` nodes on each side.
pub fn derivative_bound(q: &Trajectory) -> Vec<f64> {
    let h = q.grid().step();
    let n = q.len();
    let m = ((0.5 / h) - 1e-9).ceil().max(1.0) as usize;
    let dq = q.derivative();
    let ddq = q.second_derivative();
    let density: Vec<f64> = (0..n)
        .map(|i| {
            let a = node_norm(dq.at(i));
            let b = node_norm(ddq.at(i));
            a * a + b * b
        })
        .collect();
    // prefix sums over three periods make the wrapped window sums O(1)
    let mut prefix = vec![0.0; 3 * n + 1];
    for j in 0..3 * n {
        prefix[j + 1] = prefix[j] + density[j % n];
    }
    (0..n)
        .map(|i| {
            let lo = i + n - m;
            let hi = i + n + m;
            let interior = prefix[hi + 1] - prefix[lo];
            let trap = h * (interior - 0.5 * (density[lo % n] + density[hi % n]));
            (2.0 * trap.max(0.0)).sqrt()
        })
        .collect()
}

/// Bands `|t| in [k - j margin, k - (j-1) margin]`, `j = 1, 2, ...`, from
/// the boundary inward.
pub fn tail_profile(q: &Trajectory, margin: f64) -> Vec<TailBand> {
    let k = q.grid().half_period();
    let h = q.grid().step();
    let dq = q.derivative();
    let bound = derivative_bound(q);
    let mut bands = Vec::new();
    let mut j = 1;
    while k - (j - 1) as f64 * margin > 0.0 {
        let t_hi = k - (j - 1) as f64 * margin;
        let t_lo = (k - j as f64 * margin).max(0.0);
        let mut band = TailBand {
            t_lo,
            t_hi,
            sup_q: 0.0,
            sup_qdot: 0.0,
            bound: 0.0,
        };
        for i in 0..q.len() {
            let a = q.grid().node(i).abs();
            if a >= t_lo - 1e-9 * h && a <= t_hi + 1e-9 * h {
                band.sup_q = band.sup_q.max(node_norm(q.at(i)));
                band.sup_qdot = band.sup_qdot.max(node_norm(dq.at(i)));
                band.bound = band.bound.max(bound[i]);
            }
        }
        bands.push(band);
        j += 1;
    }
    bands
}
