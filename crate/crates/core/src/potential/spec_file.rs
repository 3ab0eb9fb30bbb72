//! TOML potential files evaluated through [`super::expr`].
//!
//! ```toml
//! name = "example 1"
//! dim = 1
//! mu = 4.0
//! K = "(t^2+1)/(t^2+2)*q^2"
//! grad_K = ["2*(t^2+1)/(t^2+2)*q"]
//! W = "(t^2+12)/(3*t^2+27)*q^4"
//! grad_W = ["4*(t^2+12)/(3*t^2+27)*q^3"]
//! f = ["exp(-t^2)/36"]
//! ```

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::{PotentialModel, PotentialSpec};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    #[serde(default)]
    pub name: Option<String>,
    pub dim: usize,
    pub mu: f64,
    #[serde(default)]
    pub b1: Option<f64>,
    #[serde(default)]
    pub b2: Option<f64>,
    #[serde(rename = "K")]
    pub k: String,
    #[serde(rename = "grad_K")]
    pub grad_k: Vec<String>,
    #[serde(rename = "W")]
    pub w: String,
    #[serde(rename = "grad_W")]
    pub grad_w: Vec<String>,
    pub f: Vec<String>,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<SpecFile> {
        toml::from_str(text).map_err(|e| Error::SpecFile(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<SpecFile> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn into_spec(self) -> Result<PotentialSpec> {
        if self.dim == 0 {
            return Err(Error::SpecFile("dim must be at least 1".into()));
        }
        if !(self.mu > 2.0) {
            return Err(Error::SpecFile(format!("mu must exceed 2, got {}", self.mu)));
        }
        for (field, list) in [("grad_K", &self.grad_k), ("grad_W", &self.grad_w), ("f", &self.f)] {
            if list.len() != self.dim {
                return Err(Error::SpecFile(format!(
                    "{field} has {} components, dim is {}",
                    list.len(),
                    self.dim
                )));
            }
        }
        let n = self.dim;
        let parse_all = |list: &[String]| list.iter().map(|s| Expr::parse(s, n)).collect::<Result<Vec<_>>>();
        let model = ExpressionModel {
            dim: n,
            k: Expr::parse(&self.k, n)?,
            grad_k: parse_all(&self.grad_k)?,
            w: Expr::parse(&self.w, n)?,
            grad_w: parse_all(&self.grad_w)?,
            f: parse_all(&self.f)?,
            origin: vec![0.0; n],
        };
        let name = self.name.clone().unwrap_or_else(|| "user potential".into());
        Ok(PotentialSpec::new(name, Arc::new(model), self.mu).with_declared_b(self.b1, self.b2))
    }
}

#[derive(Clone, Debug)]
pub struct ExpressionModel {
    dim: usize,
    k: Expr,
    grad_k: Vec<Expr>,
    w: Expr,
    grad_w: Vec<Expr>,
    f: Vec<Expr>,
    origin: Vec<f64>,
}

impl PotentialModel for ExpressionModel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn k(&self, t: f64, q: &[f64]) -> f64 {
        self.k.eval(t, q)
    }
    fn grad_k(&self, t: f64, q: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.grad_k) {
            *o = e.eval(t, q);
        }
    }
    fn w(&self, t: f64, q: &[f64]) -> f64 {
        self.w.eval(t, q)
    }
    fn grad_w(&self, t: f64, q: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.grad_w) {
            *o = e.eval(t, q);
        }
    }
    fn forcing(&self, t: f64, out: &mut [f64]) {
        // f depends on t only
        for (o, e) in out.iter_mut().zip(&self.f) {
            *o = e.eval(t, &self.origin);
        }
    }
}
