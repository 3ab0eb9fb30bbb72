//! Sampled 2k-periodic paths and the discrete Sobolev space they live in.
//!
//! A [`TimeGrid`] covers one period `[-k, k)` with `N` uniform nodes
//! `t_i = -k + i h`, `h = 2k / N`; node `N` is identified with node 0.
//! A [`Trajectory`] stores one vector in `R^n` per node, node-major.
//!
//! Quadrature is the periodic composite trapezoid rule, which on a periodic
//! grid reduces to `h * sum_i g(t_i)`. Inside [`Trajectory::norm_ek`] the
//! velocity is the forward difference `(q_{i+1} - q_i) / h`; this is the same
//! discretization the action uses, so its gradient is exact. Diagnostics
//! ([`Trajectory::derivative`]) use central differences.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_EMBED_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    half_period: f64,
    nodes: usize,
}

impl TimeGrid {
    pub fn new(half_period: f64, nodes: usize) -> Result<Self> {
        if !(half_period.is_finite() && half_period > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-period must be positive, got {half_period}"
            )));
        }
        if nodes < 4 {
            return Err(Error::InvalidGrid(format!(
                "at least 4 nodes required, got {nodes}"
            )));
        }
        Ok(Self { half_period, nodes })
    }

    /// Grid on `[-k, k)` whose step is `step`. The node count is `2k / step`,
    /// which must be an integer (up to 1e-9 relative); the stored step is then
    /// recomputed as `2k / N`.
    pub fn with_step(half_period: f64, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        let exact = 2.0 * half_period / step;
        let nodes = exact.round();
        if (nodes - exact).abs() > 1e-9 * exact.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "step {step} does not divide the period {}",
                2.0 * half_period
            )));
        }
        Self::new(half_period, nodes as usize)
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        self.nodes == 0
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_period
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_period / self.nodes as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_period + i as f64 * self.step()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.node(i)).collect()
    }

    /// Number of whole steps separating the left endpoints of `self` and a
    /// larger grid `outer` with the same step.
    pub fn offset_in(&self, outer: &TimeGrid) -> Result<usize> {
        let h = self.step();
        let h_outer = outer.step();
        if (h - h_outer).abs() > 1e-12 * h {
            return Err(Error::GridMismatch(format!("steps differ: {h} vs {h_outer}")));
        }
        if outer.half_period < self.half_period {
            return Err(Error::GridMismatch(format!(
                "target half-period {} is smaller than source {}",
                outer.half_period, self.half_period
            )));
        }
        let exact = (outer.half_period - self.half_period) / h;
        let offset = exact.round();
        if (offset - exact).abs() > 1e-9 * exact.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "half-periods {} and {} are not an integer number of steps apart",
                self.half_period, outer.half_period
            )));
        }
        let offset = offset as usize;
        if self.nodes + 2 * offset != outer.nodes {
            return Err(Error::GridMismatch("node counts are inconsistent".into()));
        }
        Ok(offset)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        assert!(dim >= 1, "state dimension must be at least 1");
        Self {
            grid,
            dim,
            values: vec![0.0; grid.len() * dim],
        }
    }

    /// Samples `fill(t_i, out)` at every node.
    pub fn from_fn(grid: TimeGrid, dim: usize, mut fill: impl FnMut(f64, &mut [f64])) -> Result<Self> {
        let mut q = Self::zeros(grid, dim);
        for i in 0..grid.len() {
            let t = grid.node(i);
            fill(t, &mut q.values[i * dim..(i + 1) * dim]);
        }
        q.validate()?;
        Ok(q)
    }

    /// Builds a trajectory from node-major flat values.
    pub fn from_values(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("state dimension must be at least 1".into()));
        }
        if values.len() != grid.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: grid.len() * dim,
                found: values.len(),
            });
        }
        let q = Self { grid, dim, values };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(Error::NonFinite { node: k / self.dim }),
            None => Ok(()),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn at_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Periodic node access: index taken modulo `N`.
    pub fn wrapped(&self, i: isize) -> &[f64] {
        let n = self.len() as isize;
        self.at(i.rem_euclid(n) as usize)
    }

    /// Piecewise-linear periodic evaluation at an arbitrary time.
    pub fn sample(&self, t: f64, out: &mut [f64]) {
        let g = &self.grid;
        let s = (t + g.half_period).rem_euclid(g.period()) / g.step();
        let i = s.floor();
        let w = s - i;
        let i = i as isize;
        let (a, b) = (self.wrapped(i), self.wrapped(i + 1));
        for c in 0..self.dim {
            out[c] = (1.0 - w) * a[c] + w * b[c];
        }
    }

    pub fn same_layout(&self, other: &Trajectory) -> bool {
        self.grid == other.grid && self.dim == other.dim
    }

    fn check_layout(&self, other: &Trajectory) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "({} nodes, k = {}, n = {}) vs ({} nodes, k = {}, n = {})",
                self.len(),
                self.grid.half_period,
                self.dim,
                other.len(),
                other.grid.half_period,
                other.dim
            )))
        }
    }

    pub fn scaled(&self, zeta: f64) -> Trajectory {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= zeta);
        out
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Trajectory) -> Result<Trajectory> {
        self.check_layout(other)?;
        let mut out = self.clone();
        for (o, x) in out.values.iter_mut().zip(&other.values) {
            *o += a * x;
        }
        Ok(out)
    }

    /// `(1 - w) * self + w * other`.
    pub fn lerp(&self, other: &Trajectory, w: f64) -> Result<Trajectory> {
        self.check_layout(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (1.0 - w) * a + w * b)
            .collect();
        Ok(Trajectory {
            grid: self.grid,
            dim: self.dim,
            values,
        })
    }

    /// `sum_i h (u_i, v_i)`.
    pub fn inner_l2(&self, other: &Trajectory) -> Result<f64> {
        self.check_layout(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(self.grid.step() * s)
    }

    /// Discrete `E_k` inner product with forward-difference velocities.
    pub fn inner_ek(&self, other: &Trajectory) -> Result<f64> {
        self.check_layout(other)?;
        let h = self.grid.step();
        let n = self.len();
        let d = self.dim;
        let mut kinetic = 0.0;
        for i in 0..n {
            let j = (i + 1) % n;
            for c in 0..d {
                let du = self.values[j * d + c] - self.values[i * d + c];
                let dv = other.values[j * d + c] - other.values[i * d + c];
                kinetic += du * dv;
            }
        }
        Ok(kinetic / h + self.inner_l2(other)?)
    }

    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v * v).sum();
        (self.grid.step() * s).sqrt()
    }

    /// Maximum over nodes of the Euclidean norm of `q(t_i)`.
    pub fn norm_sup(&self) -> f64 {
        (0..self.len())
            .map(|i| euclid(self.at(i)))
            .fold(0.0, f64::max)
    }

    /// `||q||_{E_k} = (int |q'|^2 + |q|^2)^{1/2}` with forward differences.
    pub fn norm_ek(&self) -> f64 {
        let h = self.grid.step();
        let n = self.len();
        let d = self.dim;
        let mut kinetic = 0.0;
        let mut potential = 0.0;
        for i in 0..n {
            let j = (i + 1) % n;
            for c in 0..d {
                let v = self.values[i * d + c];
                let dv = (self.values[j * d + c] - v) / h;
                kinetic += dv * dv;
                potential += v * v;
            }
        }
        (h * (kinetic + potential)).sqrt()
    }

    /// `|| . ||_{E_k}` of the difference of two trajectories.
    pub fn distance_ek(&self, other: &Trajectory) -> Result<f64> {
        Ok(self.axpy(-1.0, other)?.norm_ek())
    }

    /// Periodic forward difference `(q_{i+1} - q_i) / h`.
    pub fn forward_derivative(&self) -> Trajectory {
        let h = self.grid.step();
        self.stencil(|q, i, c| (q.wrapped(i + 1)[c] - q.wrapped(i)[c]) / h)
    }

    /// Periodic backward difference `(q_i - q_{i-1}) / h`.
    pub fn backward_derivative(&self) -> Trajectory {
        let h = self.grid.step();
        self.stencil(|q, i, c| (q.wrapped(i)[c] - q.wrapped(i - 1)[c]) / h)
    }

    /// Periodic central difference `(q_{i+1} - q_{i-1}) / 2h`.
    pub fn derivative(&self) -> Trajectory {
        let h = self.grid.step();
        self.stencil(|q, i, c| (q.wrapped(i + 1)[c] - q.wrapped(i - 1)[c]) / (2.0 * h))
    }

    /// Periodic three-point stencil `(q_{i-1} - 2 q_i + q_{i+1}) / h^2`.
    pub fn second_derivative(&self) -> Trajectory {
        let h2 = self.grid.step().powi(2);
        self.stencil(|q, i, c| {
            (q.wrapped(i - 1)[c] - 2.0 * q.wrapped(i)[c] + q.wrapped(i + 1)[c]) / h2
        })
    }

    fn stencil(&self, f: impl Fn(&Trajectory, isize, usize) -> f64) -> Trajectory {
        let mut out = Trajectory::zeros(self.grid, self.dim);
        for i in 0..self.len() {
            for c in 0..self.dim {
                out.values[i * self.dim + c] = f(self, i as isize, c);
            }
        }
        out
    }

    /// Zero-extension to the half-period `half_period > j` with the default
    /// endpoint tolerance.
    pub fn embed_zero(&self, half_period: f64) -> Result<Trajectory> {
        self.embed_zero_with_tol(half_period, DEFAULT_EMBED_TOL)
    }

    /// Returns the trajectory on `[-k, k)` equal to `self` on `[-j, j)` and
    /// zero elsewhere. `q(-j)` (equivalently `q(j)`) must vanish within `tol`.
    pub fn embed_zero_with_tol(&self, half_period: f64, tol: f64) -> Result<Trajectory> {
        let endpoint = euclid(self.at(0));
        if endpoint > tol {
            return Err(Error::EndpointNotZero { value: endpoint, tol });
        }
        let target = TimeGrid::with_step(half_period, self.grid.step())
            .map_err(|e| Error::GridMismatch(e.to_string()))?;
        let offset = self.grid.offset_in(&target)?;
        let mut out = Trajectory::zeros(target, self.dim);
        let d = self.dim;
        out.values[offset * d..(offset + self.len()) * d].copy_from_slice(&self.values);
        Ok(out)
    }

    /// Restriction to the sub-period `[-j, j)`; inverse of [`Self::embed_zero`].
    pub fn restrict(&self, half_period: f64) -> Result<Trajectory> {
        let inner = TimeGrid::with_step(half_period, self.grid.step())
            .map_err(|e| Error::GridMismatch(e.to_string()))?;
        let offset = inner.offset_in(&self.grid)?;
        let d = self.dim;
        Ok(Trajectory {
            grid: inner,
            dim: d,
            values: self.values[offset * d..(offset + inner.len()) * d].to_vec(),
        })
    }

    /// CSV with header `t,q_1,...,q_n`, 17 significant digits per entry.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for c in 1..=self.dim {
            let _ = write!(s, ",q_{c}");
        }
        s.push('\n');
        for i in 0..self.len() {
            let _ = write!(s, "{:.16e}", self.grid.node(i));
            for v in self.at(i) {
                let _ = write!(s, ",{v:.16e}");
            }
            s.push('\n');
        }
        s
    }

    /// Parses [`Self::to_csv`] output. The grid is reconstructed from the node
    /// count and the first and last time stamps.
    pub fn from_csv(text: &str) -> Result<Trajectory> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") || cols.len() < 2 {
            return Err(Error::Format(format!("unexpected header `{header}`")));
        }
        let dim = cols.len() - 1;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 1 {
                return Err(Error::Format(format!("row {row} has {} fields", fields.len())));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("row {row}: {e}")))
            };
            times.push(parse(fields[0])?);
            for f in &fields[1..] {
                values.push(parse(f)?);
            }
        }
        if times.len() < 4 {
            return Err(Error::Format("fewer than 4 rows".into()));
        }
        let n = times.len();
        let step = (times[n - 1] - times[0]) / (n - 1) as f64;
        let half_period = -times[0];
        let grid = TimeGrid::new(half_period, n)?;
        if (grid.step() - step).abs() > 1e-9 * step.abs() {
            return Err(Error::Format(format!(
                "time column is not a periodic grid on [-{half_period}, {half_period})"
            )));
        }
        Trajectory::from_values(grid, dim, values)
    }

    pub fn to_record(&self) -> TrajectoryRecord {
        TrajectoryRecord {
            k: self.grid.half_period,
            h: self.grid.step(),
            n: self.dim,
            values: self.values.chunks(self.dim).map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn from_record(record: &TrajectoryRecord) -> Result<Trajectory> {
        let grid = TimeGrid::new(record.k, record.values.len())?;
        if (grid.step() - record.h).abs() > 1e-12 * record.h.abs() {
            return Err(Error::Format(format!(
                "step {} inconsistent with k = {} and {} nodes",
                record.h,
                record.k,
                record.values.len()
            )));
        }
        let mut flat = Vec::with_capacity(record.values.len() * record.n);
        for (i, row) in record.values.iter().enumerate() {
            if row.len() != record.n {
                return Err(Error::Format(format!("node {i} has {} components", row.len())));
            }
            flat.extend_from_slice(row);
        }
        Trajectory::from_values(grid, record.n, flat)
    }
}

/// JSON form of a trajectory: `{k, h, n, values}` with one row per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub k: f64,
    pub h: f64,
    pub n: usize,
    pub values: Vec<Vec<f64>>,
}

impl Serialize for Trajectory {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Trajectory {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let record = TrajectoryRecord::deserialize(deserializer)?;
        Trajectory::from_record(&record).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(k: f64, nodes: usize) -> Trajectory {
        let grid = TimeGrid::new(k, nodes).unwrap();
        Trajectory::from_fn(grid, 1, |t, out| out[0] = (PI * t).sin()).unwrap()
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(TimeGrid::new(1.0, 3).is_err());
        assert!(TimeGrid::new(-1.0, 8).is_err());
        assert!(TimeGrid::with_step(1.0, 0.3).is_err());
        let g = TimeGrid::with_step(57.0, 0.05).unwrap();
        assert_eq!(g.len(), 2280);
        assert_eq!(g.node(0), -57.0);
        assert_eq!(g.step(), 0.05);
    }

    #[test]
    fn grid_nodes_increase_and_stop_before_k() {
        let g = TimeGrid::with_step(2.0, 0.25).unwrap();
        let t = g.times();
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!((t[t.len() - 1] - (2.0 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn norms_of_zero_and_constants() {
        let g = TimeGrid::new(2.0, 64).unwrap();
        let zero = Trajectory::zeros(g, 2);
        assert_eq!(zero.norm_ek(), 0.0);
        assert_eq!(zero.norm_l2(), 0.0);
        assert_eq!(zero.norm_sup(), 0.0);

        let one = Trajectory::from_fn(g, 1, |_, o| o[0] = 1.0).unwrap();
        assert!((one.norm_ek() - 2.0).abs() < 1e-14);
        let c = Trajectory::from_fn(g, 1, |_, o| o[0] = -3.5).unwrap();
        assert!((c.norm_l2() - 2.0 * 3.5).abs() < 1e-13);
        assert_eq!(c.norm_sup(), 3.5);
    }

    #[test]
    fn sine_norms_match_closed_forms() {
        let q = sine(1.0, 4096);
        assert!((q.norm_ek() - (PI * PI + 1.0).sqrt()).abs() < 1e-4);
        assert!((q.norm_l2() - 1.0).abs() < 1e-4);
        assert_eq!(q.norm_sup(), 1.0);
    }

    #[test]
    fn sine_derivative_is_second_order_accurate() {
        let q = sine(1.0, 4096);
        let dq = q.derivative();
        let err = (0..q.len())
            .map(|i| (dq.at(i)[0] - PI * (PI * q.grid().node(i)).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-4, "err = {err}");
    }

    #[test]
    fn constant_has_vanishing_derivatives() {
        let g = TimeGrid::new(3.0, 30).unwrap();
        let q = Trajectory::from_fn(g, 2, |_, o| {
            o[0] = 1.25;
            o[1] = -7.0;
        })
        .unwrap();
        assert_eq!(q.derivative().norm_sup(), 0.0);
        assert_eq!(q.second_derivative().norm_sup(), 0.0);
    }

    #[test]
    fn second_difference_is_forward_then_backward() {
        let q = sine(1.0, 512);
        let composed = q.forward_derivative().backward_derivative();
        let direct = q.second_derivative();
        let diff = direct.axpy(-1.0, &composed).unwrap().norm_sup();
        assert!(diff < 1e-9 * (1.0 + direct.norm_sup()), "diff = {diff}");
        // and both are O(h^2) close to -pi^2 sin(pi t)
        let exact = q.scaled(-PI * PI);
        assert!(direct.axpy(-1.0, &exact).unwrap().norm_sup() < 1e-3);
    }

    #[test]
    fn ek_norm_splits_into_l2_parts() {
        let q = sine(1.0, 256).axpy(0.3, &sine(1.0, 256).forward_derivative()).unwrap();
        let lhs = q.norm_ek().powi(2);
        let rhs = q.norm_l2().powi(2) + q.forward_derivative().norm_l2().powi(2);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    }

    #[test]
    fn embed_cosine_bump() {
        let g = TimeGrid::with_step(1.0, 0.01).unwrap();
        let q = Trajectory::from_fn(g, 1, |t, o| o[0] = (PI * t / 2.0).cos()).unwrap();
        let e = q.embed_zero(3.0).unwrap();
        assert_eq!(e.len(), 600);
        let offset = 200;
        for i in 0..q.len() {
            assert_eq!(e.at(offset + i), q.at(i));
        }
        for i in (0..offset).chain(offset + q.len()..e.len()) {
            assert_eq!(e.at(i)[0], 0.0);
        }
        assert!((e.norm_ek() - q.norm_ek()).abs() <= 2.0 * g.step());
        assert_eq!(e.restrict(1.0).unwrap(), q);
    }

    #[test]
    fn embed_zero_trajectory() {
        let g = TimeGrid::with_step(1.0, 0.1).unwrap();
        let e = Trajectory::zeros(g, 1).embed_zero(5.0).unwrap();
        assert_eq!(e.len(), 100);
        assert_eq!(e.norm_sup(), 0.0);
    }

    #[test]
    fn embed_errors() {
        let g = TimeGrid::with_step(1.0, 0.1).unwrap();
        let ones = Trajectory::from_fn(g, 1, |_, o| o[0] = 1.0).unwrap();
        assert!(matches!(ones.embed_zero(3.0), Err(Error::EndpointNotZero { .. })));
        let zero = Trajectory::zeros(g, 1);
        assert!(matches!(zero.embed_zero(3.05), Err(Error::GridMismatch(_))));
        assert!(matches!(zero.embed_zero(0.5), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn rejects_non_finite() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let r = Trajectory::from_values(g, 1, vec![0.0, f64::NAN, 0.0, 0.0]);
        assert!(matches!(r, Err(Error::NonFinite { node: 1 })));
    }

    #[test]
    fn sample_is_periodic() {
        let q = sine(1.0, 64);
        let mut a = [0.0];
        let mut b = [0.0];
        for &t in &[-0.77, 0.1, 0.5, 0.93] {
            q.sample(t, &mut a);
            q.sample(t + 2.0, &mut b);
            assert!((a[0] - b[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let g = TimeGrid::new(1.5, 12).unwrap();
        let q = Trajectory::from_fn(g, 2, |t, o| {
            o[0] = (t * 1.7).sin() / 3.0;
            o[1] = (-t * t).exp();
        })
        .unwrap();
        let csv = q.to_csv();
        assert!(csv.starts_with("t,q_1,q_2\n"));
        let back = Trajectory::from_csv(&csv).unwrap();
        assert_eq!(back, q);
        let json = serde_json::to_string(&q).unwrap();
        let back: Trajectory = serde_json::from_str(&json).unwrap();
        assert_eq!(back, q);
    }
}
