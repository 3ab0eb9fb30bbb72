//! The discrete action functional on one period and its mountain-pass
//! geometry.
//!
//! On a grid with step `h` the action is
//!
//! ```text
//! I(q) = h * sum_i ( |q_{i+1} - q_i|^2 / (2 h^2) + K(t_i, q_i) - W(t_i, q_i) + (f(t_i), q_i) )
//! ```
//!
//! and [`ActionContext::gradient`] returns its exact derivative with respect
//! to the node values, divided by `h` so that it pairs with directions
//! through the discrete `L^2` inner product.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{check_admissibility, force_norm_on_grid, HypothesisReport, PotentialSpec, Verdict};
use crate::trajectory::{TimeGrid, Trajectory};

/// Radius of the sphere on which the action is bounded below by `alpha`.
pub const RHO: f64 = FRAC_1_SQRT_2;

const MAX_DOUBLINGS: usize = 60;

#[derive(Clone, Debug)]
pub struct ActionContext {
    spec: PotentialSpec,
    grid: TimeGrid,
    times: Vec<f64>,
    forcing: Vec<f64>,
    report: Option<Arc<HypothesisReport>>,
}

impl ActionContext {
    /// Samples `f` and the node times for one period of `grid`. `K`, `W` and
    /// `f` are used only through their values on `[-k, k)`, i.e. through the
    /// 2k-periodic extensions of their restrictions.
    pub fn new(spec: PotentialSpec, grid: TimeGrid) -> Self {
        let n = spec.dim();
        let times = grid.times();
        let mut forcing = vec![0.0; grid.len() * n];
        for (i, &t) in times.iter().enumerate() {
            spec.forcing(t, &mut forcing[i * n..(i + 1) * n]);
        }
        Self {
            spec,
            grid,
            times,
            forcing,
            report: None,
        }
    }

    pub fn with_report(mut self, report: Arc<HypothesisReport>) -> Self {
        self.report = Some(report);
        self
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Cached `f(t_i)`, node-major.
    pub fn forcing_samples(&self) -> &[f64] {
        &self.forcing
    }

    pub fn report(&self) -> Option<&HypothesisReport> {
        self.report.as_deref()
    }

    /// Discrete `||f_k||_{L^2_{2k}}`.
    pub fn forcing_norm(&self) -> f64 {
        force_norm_on_grid(&self.spec, &self.grid)
    }

    pub fn zero(&self) -> Trajectory {
        Trajectory::zeros(self.grid, self.dim())
    }

    fn check(&self, q: &Trajectory) -> Result<()> {
        if *q.grid() != self.grid || q.dim() != self.dim() {
            return Err(Error::GridMismatch(format!(
                "trajectory on ({} nodes, k = {}, n = {}) but context on ({} nodes, k = {}, n = {})",
                q.len(),
                q.grid().half_period(),
                q.dim(),
                self.grid.len(),
                self.grid.half_period(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `I_k(q)`.
    pub fn action(&self, q: &Trajectory) -> Result<f64> {
        self.check(q)?;
        let n = self.dim();
        let h = self.grid.step();
        let nodes = self.grid.len();
        let v = q.as_slice();
        let mut kinetic = 0.0;
        let mut rest = 0.0;
        for i in 0..nodes {
            let j = (i + 1) % nodes;
            let qi = &v[i * n..(i + 1) * n];
            let qj = &v[j * n..(j + 1) * n];
            for c in 0..n {
                let d = qj[c] - qi[c];
                kinetic += d * d;
            }
            let t = self.times[i];
            let pairing: f64 = qi.iter().zip(&self.forcing[i * n..(i + 1) * n]).map(|(a, b)| a * b).sum();
            rest += self.spec.k(t, qi) - self.spec.w(t, qi) + pairing;
        }
        Ok(kinetic / (2.0 * h) + h * rest)
    }

    /// `L^2` gradient of the discrete action:
    /// `-(q_{i-1} - 2q_i + q_{i+1})/h^2 + grad K - grad W + f`.
    pub fn gradient(&self, q: &Trajectory) -> Result<Trajectory> {
        self.check(q)?;
        let n = self.dim();
        let h2 = self.grid.step().powi(2);
        let nodes = self.grid.len();
        let v = q.as_slice();
        let mut out = self.zero();
        let mut gk = vec![0.0; n];
        let mut gw = vec![0.0; n];
        for i in 0..nodes {
            let prev = (i + nodes - 1) % nodes;
            let next = (i + 1) % nodes;
            let qi = &v[i * n..(i + 1) * n];
            let t = self.times[i];
            self.spec.grad_k(t, qi, &mut gk);
            self.spec.grad_w(t, qi, &mut gw);
            let o = out.at_mut(i);
            for c in 0..n {
                let lap = (v[prev * n + c] - 2.0 * qi[c] + v[next * n + c]) / h2;
                o[c] = -lap + gk[c] - gw[c] + self.forcing[i * n + c];
            }
        }
        Ok(out)
    }

    /// Discrete Euler-Lagrange residual
    /// `F(q)_i = D2 q_i - grad K + grad W - f`, i.e. minus the gradient.
    pub fn residual_field(&self, q: &Trajectory) -> Result<Trajectory> {
        Ok(self.gradient(q)?.scaled(-1.0))
    }

    /// Both sides of `int W(t, zeta q) >= m |zeta|^mu int |q|^mu - 2 k m`.
    pub fn lemma1_bound(&self, zeta: f64, q: &Trajectory) -> Result<(f64, f64)> {
        self.check(q)?;
        let report = self.report().ok_or(Error::MissingConstants)?;
        let m = report.m_hat;
        let mu = self.spec.declared_mu;
        let h = self.grid.step();
        let n = self.dim();
        let mut scaled = vec![0.0; n];
        let mut lhs = 0.0;
        let mut power = 0.0;
        for i in 0..self.grid.len() {
            let qi = q.at(i);
            scaled.iter_mut().zip(qi).for_each(|(s, x)| *s = zeta * x);
            lhs += self.spec.w(self.times[i], &scaled);
            power += norm(qi).powf(mu);
        }
        let lhs = h * lhs;
        let rhs = m * zeta.abs().powf(mu) * h * power - 2.0 * self.grid.half_period() * m;
        Ok((lhs, rhs))
    }

    /// `(bbar2 zeta^2 / 2) ||q||^2 - m |zeta|^mu int |q|^mu + |zeta| ||f_k|| ||q|| + 2 k m`,
    /// an upper bound for `I_k(zeta q)`.
    pub fn action_upper_bound(&self, zeta: f64, q: &Trajectory) -> Result<f64> {
        self.check(q)?;
        let report = self.report().ok_or(Error::MissingConstants)?;
        let m = report.m_hat;
        let mu = self.spec.declared_mu;
        let h = self.grid.step();
        let power: f64 = (0..self.grid.len()).map(|i| norm(q.at(i)).powf(mu)).sum::<f64>() * h;
        let ek = q.norm_ek();
        Ok(report.bbar2 * zeta * zeta / 2.0 * ek * ek - m * zeta.abs().powf(mu) * power
            + zeta.abs() * self.forcing_norm() * ek
            + 2.0 * self.grid.half_period() * m)
    }

    /// `Q(t) = cos(pi t / 2) u` with `u` the first coordinate vector; the
    /// node at `t = -1` is set to exactly zero.
    pub fn cosine_bump(&self) -> Result<Trajectory> {
        if self.grid.half_period() != 1.0 {
            return Err(Error::InvalidConfig(format!(
                "the endpoint is built on half-period 1, context has {}",
                self.grid.half_period()
            )));
        }
        let mut q = Trajectory::from_fn(self.grid, self.dim(), |t, out| out[0] = (PI * t / 2.0).cos())?;
        q.at_mut(0)[0] = 0.0;
        Ok(q)
    }

    /// Doubles `zeta` from 1 until `zeta Q` lies outside the `rho` ball and
    /// has negative action. Returns `(e_1, zeta)`.
    pub fn construct_endpoint(&self) -> Result<(Trajectory, f64)> {
        let bump = self.cosine_bump()?;
        let mut zeta = 1.0;
        for _ in 0..MAX_DOUBLINGS {
            let e = bump.scaled(zeta);
            if e.norm_ek() > RHO && self.action(&e)? < 0.0 {
                return Ok((e, zeta));
            }
            zeta *= 2.0;
        }
        Err(Error::ScalingDiverged {
            doublings: MAX_DOUBLINGS,
        })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryConstants {
    pub rho: f64,
    pub alpha: f64,
    /// `e_1 = zeta_star Q` on half-period 1; `e_k` is its zero extension.
    pub e1: Trajectory,
    pub zeta_star: f64,
    #[serde(rename = "M0")]
    pub m0: f64,
    /// Argmax `s` of `I_1(s e_1)`.
    pub m0_argmax: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
    pub bbar1: f64,
    pub bbar2: f64,
    pub mu: f64,
    pub force_l2: f64,
    pub force_budget: f64,
    pub admissible: bool,
}

impl GeometryConstants {
    /// `e_k` on the grid of `ctx`.
    pub fn endpoint(&self, grid: &TimeGrid) -> Result<Trajectory> {
        if grid.half_period() == self.e1.grid().half_period() {
            if grid != self.e1.grid() {
                return Err(Error::GridMismatch("endpoint grid differs".into()));
            }
            return Ok(self.e1.clone());
        }
        let e = self.e1.embed_zero(grid.half_period())?;
        if e.grid() != grid {
            return Err(Error::GridMismatch("endpoint grid differs".into()));
        }
        Ok(e)
    }
}

/// `alpha = (sqrt 2 / 2)((sqrt 2 / 4)(bbar1 - 2M) - ||f||)`.
pub fn mountain_pass_alpha(budget: f64, force_l2: f64) -> f64 {
    FRAC_1_SQRT_2 * (budget - force_l2)
}

/// Positive root of
/// `bbar1/2 x^2 - B (mu-1)/(mu-2) x - mu/(mu-2) M0 = 0`.
pub fn a_priori_radius(bbar1: f64, budget: f64, mu: f64, m0: f64) -> f64 {
    let a = 0.5 * bbar1;
    let b = budget * (mu - 1.0) / (mu - 2.0);
    let c = mu / (mu - 2.0) * m0;
    (b + (b * b + 4.0 * a * c).sqrt()) / (2.0 * a)
}

/// `max_{s in [0,1]} I_1(s e_1)`: 513-point scan, then golden-section search
/// on the bracketing cell to 1e-10 in `s`.
fn scan_segment_max(ctx: &ActionContext, e1: &Trajectory) -> Result<(f64, f64)> {
    const SAMPLES: usize = 512;
    let f = |s: f64| ctx.action(&e1.scaled(s));
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut best_j = 0;
    for j in 0..=SAMPLES {
        let s = j as f64 / SAMPLES as f64;
        let v = f(s)?;
        if v > best.0 {
            best = (v, s);
            best_j = j;
        }
    }
    let lo = best_j.saturating_sub(1) as f64 / SAMPLES as f64;
    let hi = (best_j + 1).min(SAMPLES) as f64 / SAMPLES as f64;
    let (s, v) = golden_section_max(lo, hi, 1e-10, f)?;
    if v > best.0 {
        best = (v, s);
    }
    Ok(best)
}

/// Golden-section maximization on `[lo, hi]`; returns `(argmax, max)`.
pub(crate) fn golden_section_max(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Mountain-pass constants on the half-period-1 context. Fails with
/// `NotAdmissible` unless the report is admissible.
pub fn geometry_constants(ctx1: &ActionContext, report: &HypothesisReport) -> Result<GeometryConstants> {
    if let Verdict::Rejected(reasons) = check_admissibility(report) {
        return Err(Error::NotAdmissible(reasons));
    }
    geometry_constants_unchecked(ctx1, report)
}

/// As [`geometry_constants`] but without the admissibility gate; `alpha`
/// may then be nonpositive.
pub fn geometry_constants_unchecked(ctx1: &ActionContext, report: &HypothesisReport) -> Result<GeometryConstants> {
    let (e1, zeta_star) = ctx1.construct_endpoint()?;
    let (m0, m0_argmax) = scan_segment_max(ctx1, &e1)?;
    let mu = ctx1.spec().declared_mu;
    let alpha = mountain_pass_alpha(report.force_budget, report.force_l2);
    let m1 = a_priori_radius(report.bbar1, report.force_budget.max(0.0), mu, m0.max(0.0));
    Ok(GeometryConstants {
        rho: RHO,
        alpha,
        e1,
        zeta_star,
        m0,
        m0_argmax,
        m1,
        bbar1: report.bbar1,
        bbar2: report.bbar2,
        mu,
        force_l2: report.force_l2,
        force_budget: report.force_budget,
        admissible: check_admissibility(report).is_admissible(),
    })
}

/// `alpha` for zero forcing: `(sqrt 2 / 2) (sqrt 2 / 4)(bbar1 - 2M)`.
pub fn unforced_alpha(report: &HypothesisReport) -> f64 {
    mountain_pass_alpha(SQRT_2 / 4.0 * (report.bbar1 - 2.0 * report.big_m_hat), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{builtin_example, estimate_constants, AuditConfig, SpecFile};

    fn ctx(id: u32, k: f64, h: f64) -> ActionContext {
        ActionContext::new(builtin_example(id).unwrap(), TimeGrid::with_step(k, h).unwrap())
    }

    #[test]
    fn action_of_zero_is_zero() {
        for id in 1..=3 {
            let c = ctx(id, 3.0, 0.05);
            assert_eq!(c.action(&c.zero()).unwrap(), 0.0);
        }
    }

    #[test]
    fn gradient_at_zero_is_forcing() {
        let c = ctx(1, 2.0, 0.1);
        let g = c.gradient(&c.zero()).unwrap();
        for i in 0..g.len() {
            let t = c.grid().node(i);
            assert!((g.at(i)[0] - (-t * t).exp() / 36.0).abs() < 1e-17);
        }
        let free = ActionContext::new(builtin_example(2).unwrap().without_forcing(), *c.grid());
        assert_eq!(free.gradient(&free.zero()).unwrap().norm_sup(), 0.0);
    }

    #[test]
    fn quadratic_scaling_without_w_and_f() {
        let spec = SpecFile::parse(
            r#"
dim = 1
mu = 4.0
K = "q^2"
grad_K = ["2*q"]
W = "0"
grad_W = ["0"]
f = ["0"]
"#,
        )
        .unwrap()
        .into_spec()
        .unwrap();
        let c = ActionContext::new(spec, TimeGrid::new(2.0, 50).unwrap());
        let q = Trajectory::from_fn(*c.grid(), 1, |t, o| o[0] = (t * 0.9).sin() + 0.3).unwrap();
        let base = c.action(&q).unwrap();
        for &zeta in &[-3.0, 0.5, 7.0] {
            let v = c.action(&q.scaled(zeta)).unwrap();
            assert!((v - zeta * zeta * base).abs() <= 1e-12 * v.abs());
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let c = ctx(2, 1.0, 0.05);
        let other = Trajectory::zeros(TimeGrid::with_step(2.0, 0.05).unwrap(), 1);
        assert!(matches!(c.action(&other), Err(Error::GridMismatch(_))));
        assert!(matches!(c.gradient(&other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn lemma1_requires_constants() {
        let c = ctx(2, 1.0, 0.05);
        assert!(matches!(c.lemma1_bound(1.0, &c.zero()), Err(Error::MissingConstants)));
        assert!(matches!(c.action_upper_bound(1.0, &c.zero()), Err(Error::MissingConstants)));
    }

    #[test]
    fn lemma1_examples() {
        let spec = builtin_example(2).unwrap();
        let report = Arc::new(estimate_constants(&spec, &AuditConfig::default()).unwrap());
        let c = ActionContext::new(spec, TimeGrid::with_step(1.0, 0.05).unwrap()).with_report(report);
        let ones = Trajectory::from_fn(*c.grid(), 1, |_, o| o[0] = 1.0).unwrap();
        let (lhs, rhs) = c.lemma1_bound(0.0, &ones).unwrap();
        assert_eq!(lhs, 0.0);
        assert!((rhs + 0.5).abs() < 1e-12);
        let (lhs, rhs) = c.lemma1_bound(2.0, &ones).unwrap();
        assert!((lhs - 8.0).abs() < 1e-12);
        assert!((rhs - 7.5).abs() < 1e-12);
    }

    #[test]
    fn a_priori_radius_cases() {
        assert_eq!(a_priori_radius(1.0, 0.0, 4.0, 0.0), 0.0);
        assert!((a_priori_radius(1.0, 0.0, 4.0, 1.0) - 2.0).abs() < 1e-15);
        // root check on a generic case
        let (b1, bud, mu, m0) = (0.8, 0.1, 3.5, 2.0);
        let x = a_priori_radius(b1, bud, mu, m0);
        let p = 0.5 * b1 * x * x - bud * (mu - 1.0) / (mu - 2.0) * x - mu / (mu - 2.0) * m0;
        assert!(p.abs() < 1e-12 && x > 0.0);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, v) = golden_section_max(0.0, 1.0, 1e-10, |s| Ok(-(s - 0.3).powi(2) + 2.0)).unwrap();
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn endpoint_needs_unit_half_period() {
        let c = ctx(2, 2.0, 0.05);
        assert!(c.construct_endpoint().is_err());
    }
}
