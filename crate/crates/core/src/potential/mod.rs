//! Problem data `V = -K + W` and forcing `f`, plus the hypothesis audit.

mod audit;
mod builtin;
pub mod expr;
mod spec_file;

use std::fmt;
use std::sync::Arc;

pub use audit::{
    check_admissibility, estimate_constants, force_norm, force_norm_on_grid, AuditConfig,
    ConditionFlags, HypothesisReport, RandomSphere, Verdict,
};
pub use builtin::{builtin_example, ExampleOne, ExampleThree, ExampleTwo};
pub use spec_file::{ExpressionModel, SpecFile};

/// The callables of a forced Hamiltonian system. Gradients are analytic and
/// written into `out` (length `dim`). Implementations must be reentrant.
pub trait PotentialModel: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn k(&self, t: f64, q: &[f64]) -> f64;
    fn grad_k(&self, t: f64, q: &[f64], out: &mut [f64]);
    fn w(&self, t: f64, q: &[f64]) -> f64;
    fn grad_w(&self, t: f64, q: &[f64], out: &mut [f64]);
    fn forcing(&self, t: f64, out: &mut [f64]);
}

/// A potential model together with its declared structural constants.
#[derive(Clone, Debug)]
pub struct PotentialSpec {
    pub name: String,
    model: Arc<dyn PotentialModel>,
    pub declared_mu: f64,
    pub declared_b1: Option<f64>,
    pub declared_b2: Option<f64>,
    zero_forcing: bool,
}

impl PotentialSpec {
    pub fn new(name: impl Into<String>, model: Arc<dyn PotentialModel>, declared_mu: f64) -> Self {
        Self {
            name: name.into(),
            model,
            declared_mu,
            declared_b1: None,
            declared_b2: None,
            zero_forcing: false,
        }
    }

    pub fn with_declared_b(mut self, b1: Option<f64>, b2: Option<f64>) -> Self {
        self.declared_b1 = b1;
        self.declared_b2 = b2;
        self
    }

    /// Same potential with `f = 0`.
    pub fn without_forcing(&self) -> Self {
        let mut s = self.clone();
        s.zero_forcing = true;
        s.name = format!("{} (f = 0)", self.name);
        s
    }

    pub fn has_zero_forcing(&self) -> bool {
        self.zero_forcing
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn k(&self, t: f64, q: &[f64]) -> f64 {
        self.model.k(t, q)
    }

    pub fn grad_k(&self, t: f64, q: &[f64], out: &mut [f64]) {
        self.model.grad_k(t, q, out)
    }

    pub fn w(&self, t: f64, q: &[f64]) -> f64 {
        self.model.w(t, q)
    }

    pub fn grad_w(&self, t: f64, q: &[f64], out: &mut [f64]) {
        self.model.grad_w(t, q, out)
    }

    pub fn forcing(&self, t: f64, out: &mut [f64]) {
        if self.zero_forcing {
            out.iter_mut().for_each(|v| *v = 0.0);
        } else {
            self.model.forcing(t, out)
        }
    }

    /// `V(t, q) = -K(t, q) + W(t, q)`.
    pub fn v(&self, t: f64, q: &[f64]) -> f64 {
        self.w(t, q) - self.k(t, q)
    }

    /// `grad W - grad K` accumulated into `out`, using `scratch` (length `dim`).
    pub fn grad_v(&self, t: f64, q: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        self.grad_w(t, q, out);
        self.grad_k(t, q, scratch);
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o -= s;
        }
    }
}
