//! Sampled audit of the structural hypotheses on `(K, W, f)`.
//!
//! Infima and suprema over `t in R` and `|q| = r` are estimated on a fixed
//! probe set: a uniform ladder on `[t_min, t_max]` plus "limit probes" at
//! large `|t|`. Everything here is sampled evidence; nothing is certified.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PotentialSpec;
use crate::error::{Error, Result};
use crate::trajectory::TimeGrid;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Optional extra sphere directions drawn from a seeded generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSphere {
    pub count: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub t_step: f64,
    /// Positive `|t|` values probed with both signs.
    pub limit_probes: Vec<f64>,
    /// Radii `|q|` for the (C2), (C3), (C5) ratios.
    pub radii: Vec<f64>,
    /// Radii ladder for the (C4) profile, decreasing.
    pub c4_radii: Vec<f64>,
    /// Ball radii `L` for the (C1) gradient bounds.
    pub c1_radii: Vec<f64>,
    pub random_sphere: Option<RandomSphere>,
    pub force_truncation: f64,
    pub force_step: f64,
    pub slack: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        let mut limit_probes = Vec::new();
        for e in 2..6 {
            for j in 0..4 {
                limit_probes.push(10f64.powi(e) * 10f64.powf(j as f64 / 4.0));
            }
        }
        limit_probes.push(1e6);
        Self {
            t_min: -100.0,
            t_max: 100.0,
            t_step: 0.01,
            limit_probes,
            radii: vec![1e-3, 1e-2, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0],
            c4_radii: vec![1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            c1_radii: vec![0.5, 1.0, 2.0, 5.0, 10.0],
            random_sphere: None,
            force_truncation: 10.0,
            force_step: 1e-3,
            slack: 1e-9,
        }
    }
}

impl AuditConfig {
    pub fn time_probes(&self) -> Vec<f64> {
        let count = ((self.t_max - self.t_min) / self.t_step).round() as usize;
        let mut ts: Vec<f64> = (0..=count).map(|i| self.t_min + i as f64 * self.t_step).collect();
        for &p in &self.limit_probes {
            ts.push(p);
            ts.push(-p);
        }
        ts
    }

    pub fn directions(&self, dim: usize) -> Vec<Vec<f64>> {
        let mut dirs = Vec::new();
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut d = vec![0.0; dim];
                d[i] = s;
                dirs.push(d);
            }
        }
        for i in 0..dim {
            for j in i + 1..dim {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut d = vec![0.0; dim];
                    d[i] = si / SQRT2;
                    d[j] = sj / SQRT2;
                    dirs.push(d);
                }
            }
        }
        if let Some(rs) = &self.random_sphere {
            let mut rng = ChaCha8Rng::seed_from_u64(rs.seed);
            let mut drawn = 0;
            while drawn < rs.count {
                let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    dirs.push(v.into_iter().map(|x| x / norm).collect());
                    drawn += 1;
                }
            }
        }
        dirs
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionFlags {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
    pub c5: bool,
    pub c6: bool,
    /// `M < bbar1 / 2`.
    pub m_below_half_bbar1: bool,
    /// `||f||_{L^2} < (sqrt 2 / 4)(bbar1 - 2M)`.
    pub forcing_within_budget: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub spec_name: String,
    pub dim: usize,
    pub declared_mu: f64,
    pub declared_b1: Option<f64>,
    pub declared_b2: Option<f64>,
    pub b1_hat: f64,
    pub b2_hat: f64,
    pub c3_min: f64,
    pub c3_max: f64,
    pub mu_hat: f64,
    pub m_hat: f64,
    #[serde(rename = "M_hat")]
    pub big_m_hat: f64,
    pub bbar1: f64,
    pub bbar2: f64,
    /// `(r, sup |grad W(t, q)| / r)` over `|q| = r`.
    pub c4_profile: Vec<(f64, f64)>,
    /// `(L, sup max(|grad K|, |grad W|))` over `|q| <= L`.
    pub c1_bounds: Vec<(f64, f64)>,
    pub force_l2: f64,
    pub force_budget: f64,
    pub passes: ConditionFlags,
    pub notes: Vec<String>,
    pub sample_config: AuditConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reasons")]
pub enum Verdict {
    Admissible,
    Rejected(Vec<String>),
}

impl Verdict {
    pub fn is_admissible(&self) -> bool {
        matches!(self, Verdict::Admissible)
    }
}

#[derive(Clone, Debug)]
struct Stats {
    b1: f64,
    b2: f64,
    c3_min: f64,
    c3_max: f64,
    c3_violated: bool,
    k_nonpositive: bool,
    mu: f64,
    w_nonpositive: bool,
    m: f64,
    big_m: f64,
    c4: Vec<f64>,
    grad_sup: Vec<f64>,
}

impl Stats {
    fn new(c4_len: usize, grad_len: usize) -> Self {
        Self {
            b1: f64::INFINITY,
            b2: f64::NEG_INFINITY,
            c3_min: f64::INFINITY,
            c3_max: f64::NEG_INFINITY,
            c3_violated: false,
            k_nonpositive: false,
            mu: f64::INFINITY,
            w_nonpositive: false,
            m: f64::INFINITY,
            big_m: f64::NEG_INFINITY,
            c4: vec![0.0; c4_len],
            grad_sup: vec![0.0; grad_len],
        }
    }

    fn merge(mut self, o: &Stats) -> Self {
        self.b1 = self.b1.min(o.b1);
        self.b2 = self.b2.max(o.b2);
        self.c3_min = self.c3_min.min(o.c3_min);
        self.c3_max = self.c3_max.max(o.c3_max);
        self.c3_violated |= o.c3_violated;
        self.k_nonpositive |= o.k_nonpositive;
        self.mu = self.mu.min(o.mu);
        self.w_nonpositive |= o.w_nonpositive;
        self.m = self.m.min(o.m);
        self.big_m = self.big_m.max(o.big_m);
        for (a, b) in self.c4.iter_mut().zip(&o.c4) {
            *a = a.max(*b);
        }
        for (a, b) in self.grad_sup.iter_mut().zip(&o.grad_sup) {
            *a = a.max(*b);
        }
        self
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn finite_or_err(t: f64, q: &[f64], values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteSample { t, q: q.to_vec() })
    }
}

/// Radii at which gradient magnitudes are tabulated for (C1): the union of
/// the ratio radii and the ball radii, sorted.
fn gradient_radii(cfg: &AuditConfig) -> Vec<f64> {
    let mut r: Vec<f64> = cfg.radii.iter().chain(&cfg.c1_radii).copied().collect();
    r.sort_by(f64::total_cmp);
    r.dedup();
    r
}

fn probe_time(spec: &PotentialSpec, cfg: &AuditConfig, dirs: &[Vec<f64>], grad_radii: &[f64], t: f64) -> Result<Stats> {
    let n = spec.dim();
    let slack = cfg.slack;
    let mut st = Stats::new(cfg.c4_radii.len(), grad_radii.len());
    let mut q = vec![0.0; n];
    let mut gk = vec![0.0; n];
    let mut gw = vec![0.0; n];
    for d in dirs {
        for &r in &cfg.radii {
            q.iter_mut().zip(d).for_each(|(x, y)| *x = r * y);
            let k = spec.k(t, &q);
            let w = spec.w(t, &q);
            spec.grad_k(t, &q, &mut gk);
            spec.grad_w(t, &q, &mut gw);
            finite_or_err(t, &q, &[k, w])?;
            finite_or_err(t, &q, &gk)?;
            finite_or_err(t, &q, &gw)?;
            let ratio = k / (r * r);
            st.b1 = st.b1.min(ratio);
            st.b2 = st.b2.max(ratio);
            let qk = dot(&q, &gk);
            if k > 0.0 {
                let c3 = qk / k;
                st.c3_min = st.c3_min.min(c3);
                st.c3_max = st.c3_max.max(c3);
            } else {
                st.k_nonpositive = true;
            }
            if k - qk > slack * (1.0 + k.abs()) || qk - 2.0 * k > slack * (1.0 + k.abs()) {
                st.c3_violated = true;
            }
            if w > 0.0 {
                st.mu = st.mu.min(dot(&q, &gw) / w);
            } else {
                st.w_nonpositive = true;
            }
        }
        q.iter_mut().zip(d).for_each(|(x, y)| *x = *y);
        let w1 = spec.w(t, &q);
        finite_or_err(t, &q, &[w1])?;
        st.m = st.m.min(w1);
        st.big_m = st.big_m.max(w1);
        for (slot, &r) in cfg.c4_radii.iter().enumerate() {
            q.iter_mut().zip(d).for_each(|(x, y)| *x = r * y);
            spec.grad_w(t, &q, &mut gw);
            finite_or_err(t, &q, &gw)?;
            st.c4[slot] = st.c4[slot].max(norm(&gw) / r);
        }
        for (slot, &r) in grad_radii.iter().enumerate() {
            q.iter_mut().zip(d).for_each(|(x, y)| *x = r * y);
            spec.grad_k(t, &q, &mut gk);
            spec.grad_w(t, &q, &mut gw);
            finite_or_err(t, &q, &gk)?;
            finite_or_err(t, &q, &gw)?;
            st.grad_sup[slot] = st.grad_sup[slot].max(norm(&gk).max(norm(&gw)));
        }
    }
    Ok(st)
}

/// Estimates `b1, b2, mu, m, M`, the (C3) range, the (C4) profile, the (C1)
/// bounds and `||f||_{L^2}`, and flags each condition.
pub fn estimate_constants(spec: &PotentialSpec, cfg: &AuditConfig) -> Result<HypothesisReport> {
    if cfg.radii.is_empty() || cfg.c4_radii.is_empty() || !(cfg.t_step > 0.0) || cfg.t_max < cfg.t_min {
        return Err(Error::InvalidConfig("audit probe sets must be nonempty".into()));
    }
    let dirs = cfg.directions(spec.dim());
    let times = cfg.time_probes();
    let grad_radii = gradient_radii(cfg);

    // Chunks are folded in order so the first error and all reductions are
    // independent of the thread count.
    let partials: Vec<Result<Stats>> = times
        .par_chunks(512)
        .map(|chunk| {
            let mut acc = Stats::new(cfg.c4_radii.len(), grad_radii.len());
            for &t in chunk {
                acc = acc.merge(&probe_time(spec, cfg, &dirs, &grad_radii, t)?);
            }
            Ok(acc)
        })
        .collect();
    let mut st = Stats::new(cfg.c4_radii.len(), grad_radii.len());
    for p in partials {
        st = st.merge(&p?);
    }

    let slack = cfg.slack;
    let bbar1 = 1.0f64.min(2.0 * st.b1);
    let bbar2 = 1.0f64.max(2.0 * st.b2);
    let force_l2 = force_norm(spec, cfg.force_truncation, cfg.force_step)?;
    let force_budget = SQRT2 / 4.0 * (bbar1 - 2.0 * st.big_m);

    let c4_profile: Vec<(f64, f64)> = cfg.c4_radii.iter().copied().zip(st.c4.iter().copied()).collect();
    let c1_bounds: Vec<(f64, f64)> = cfg
        .c1_radii
        .iter()
        .map(|&l| {
            let sup = grad_radii
                .iter()
                .zip(&st.grad_sup)
                .filter(|(r, _)| **r <= l)
                .map(|(_, g)| *g)
                .fold(0.0, f64::max);
            (l, sup)
        })
        .collect();

    let mut c2 = st.b1 > 0.0 && st.b2.is_finite() && st.b1 <= st.b2;
    if let Some(b1) = spec.declared_b1 {
        c2 &= b1 > 0.0 && b1 <= st.b1 + slack;
    }
    if let Some(b2) = spec.declared_b2 {
        c2 &= b2 >= st.b2 - slack;
    }
    let c3 = !st.c3_violated
        && !st.k_nonpositive
        && st.c3_min >= 1.0 - slack
        && st.c3_max <= 2.0 + slack;
    let c4_decreasing = c4_profile.windows(2).all(|w| w[1].1 <= w[0].1 + slack);
    let c4 = c4_decreasing && c4_profile.last().is_some_and(|(_, v)| *v < 1e-3);
    let c5 = !st.w_nonpositive
        && spec.declared_mu > 2.0
        && st.mu > 2.0
        && st.mu >= spec.declared_mu - slack;
    let c6 = st.m > 0.0;
    let c1 = c1_bounds.iter().all(|(_, g)| g.is_finite());

    let passes = ConditionFlags {
        c1,
        c2,
        c3,
        c4,
        c5,
        c6,
        m_below_half_bbar1: st.big_m < bbar1 / 2.0,
        forcing_within_budget: force_l2 < force_budget,
    };
    let notes = vec![
        "all infima and suprema are estimates over a finite probe set".to_string(),
        "(C1): sampled evidence, not proof".to_string(),
        "(C4): sampled evidence, not proof (decreasing profile used as surrogate)".to_string(),
        "(C6): sampled evidence, not proof".to_string(),
    ];
    Ok(HypothesisReport {
        spec_name: spec.name.clone(),
        dim: spec.dim(),
        declared_mu: spec.declared_mu,
        declared_b1: spec.declared_b1,
        declared_b2: spec.declared_b2,
        b1_hat: st.b1,
        b2_hat: st.b2,
        c3_min: st.c3_min,
        c3_max: st.c3_max,
        mu_hat: st.mu,
        m_hat: st.m,
        big_m_hat: st.big_m,
        bbar1,
        bbar2,
        c4_profile,
        c1_bounds,
        force_l2,
        force_budget,
        passes,
        notes,
        sample_config: cfg.clone(),
    })
}

/// Trapezoid `int_{-T}^{T} |f|^2` on the fixed nodes `j * step`, with `T`
/// rounded up to a whole number of steps. Nondecreasing in `T`.
fn truncated_square_norm(spec: &PotentialSpec, truncation: f64, step: f64) -> Result<f64> {
    let half = (truncation / step).ceil().max(1.0) as i64;
    let mut f = vec![0.0; spec.dim()];
    let mut sq = |j: i64| -> Result<f64> {
        let t = j as f64 * step;
        spec.forcing(t, &mut f);
        finite_or_err(t, &[], &f)?;
        Ok(dot(&f, &f))
    };
    let mut sum = 0.5 * (sq(-half)? + sq(half)?);
    for j in (1 - half)..half {
        sum += sq(j)?;
    }
    Ok(step * sum)
}

/// `||f||_{L^2(R)}` by trapezoid on `[-T, T]`, doubling `T` until the norm
/// grows by less than 1e-12 (at most four doublings).
pub fn force_norm(spec: &PotentialSpec, truncation: f64, step: f64) -> Result<f64> {
    if !(truncation > 0.0 && step > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "truncation and step must be positive, got {truncation}, {step}"
        )));
    }
    let mut t = truncation;
    let mut current = truncated_square_norm(spec, t, step)?.sqrt();
    let mut increment = f64::INFINITY;
    for _ in 0..4 {
        t *= 2.0;
        let next = truncated_square_norm(spec, t, step)?.sqrt();
        increment = next - current;
        current = next;
        if increment < 1e-12 {
            return Ok(current);
        }
    }
    Err(Error::NonIntegrableSuspected {
        truncation: t,
        increment,
    })
}

/// Discrete `||f_k||_{L^2_{2k}}` over one period of `grid`.
pub fn force_norm_on_grid(spec: &PotentialSpec, grid: &TimeGrid) -> f64 {
    let mut f = vec![0.0; spec.dim()];
    let mut sum = 0.0;
    for i in 0..grid.len() {
        spec.forcing(grid.node(i), &mut f);
        sum += dot(&f, &f);
    }
    (grid.step() * sum).sqrt()
}

/// Admissible iff `M < bbar1/2`, `||f|| < budget`, and (C2), (C3), (C5), (C6)
/// pass. Rejections list both sides of each failed inequality.
pub fn check_admissibility(report: &HypothesisReport) -> Verdict {
    let mut reasons = Vec::new();
    let half = report.bbar1 / 2.0;
    if !(report.big_m_hat < half) {
        reasons.push(format!(
            "M < b̄₁/2 fails: M = {:.9} vs b̄₁/2 = {:.9}",
            report.big_m_hat, half
        ));
    }
    if !(report.force_l2 < report.force_budget) {
        reasons.push(format!(
            "‖f‖_L² < (√2/4)(b̄₁ − 2M) fails: ‖f‖ = {:.9} vs budget = {:.9}",
            report.force_l2, report.force_budget
        ));
    }
    let p = &report.passes;
    if !p.c2 {
        reasons.push(format!(
            "(C2) b₁|q|² ≤ K ≤ b₂|q|² fails: b̂₁ = {:.9}, b̂₂ = {:.9}",
            report.b1_hat, report.b2_hat
        ));
    }
    if !p.c3 {
        reasons.push(format!(
            "(C3) 1 ≤ (q,∇K)/K ≤ 2 fails: range [{:.9}, {:.9}]",
            report.c3_min, report.c3_max
        ));
    }
    if !p.c5 {
        reasons.push(format!(
            "(C5) μW ≤ (q,∇W) fails: μ̂ = {:.9} vs declared μ = {}",
            report.mu_hat, report.declared_mu
        ));
    }
    if !p.c6 {
        reasons.push(format!("(C6) m > 0 fails: m̂ = {:.9}", report.m_hat));
    }
    if reasons.is_empty() {
        Verdict::Admissible
    } else {
        Verdict::Rejected(reasons)
    }
}
