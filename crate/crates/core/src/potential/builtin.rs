//! The three one-dimensional example systems.

use std::sync::Arc;

use super::{PotentialModel, PotentialSpec};
use crate::error::{Error, Result};

/// `K = (t^2+1)/(t^2+2) q^2`, `W = (t^2+12)/(3t^2+27) q^4`, `f = e^{-t^2}/36`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExampleOne;

/// `K = (sin t / 8 + sin(sqrt 2 t) / 8 + 3/4) q^2`, `W = q^4 / 4`, `f = e^{-t^2}/32`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExampleTwo;

/// `K = q^2`, `W = (10/33) q^4 (arctan^2(q^2/(t^2+1)) + 1)`, `f = (1+t^2) e^{-t^2}/10`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExampleThree;

pub fn builtin_example(id: u32) -> Result<PotentialSpec> {
    let model: Arc<dyn PotentialModel> = match id {
        1 => Arc::new(ExampleOne),
        2 => Arc::new(ExampleTwo),
        3 => Arc::new(ExampleThree),
        other => return Err(Error::UnknownExample(other)),
    };
    Ok(PotentialSpec::new(format!("example {id}"), model, 4.0))
}

fn k_coefficient_one(t: f64) -> f64 {
    let u = t * t;
    (u + 1.0) / (u + 2.0)
}

fn w_coefficient_one(t: f64) -> f64 {
    let u = t * t;
    (u + 12.0) / (3.0 * u + 27.0)
}

impl PotentialModel for ExampleOne {
    fn dim(&self) -> usize {
        1
    }
    fn k(&self, t: f64, q: &[f64]) -> f64 {
        k_coefficient_one(t) * q[0] * q[0]
    }
    fn grad_k(&self, t: f64, q: &[f64], out: &mut [f64]) {
        out[0] = 2.0 * k_coefficient_one(t) * q[0];
    }
    fn w(&self, t: f64, q: &[f64]) -> f64 {
        w_coefficient_one(t) * q[0].powi(4)
    }
    fn grad_w(&self, t: f64, q: &[f64], out: &mut [f64]) {
        out[0] = 4.0 * w_coefficient_one(t) * q[0].powi(3);
    }
    fn forcing(&self, t: f64, out: &mut [f64]) {
        out[0] = (-t * t).exp() / 36.0;
    }
}

fn k_coefficient_two(t: f64) -> f64 {
    t.sin() / 8.0 + (std::f64::consts::SQRT_2 * t).sin() / 8.0 + 0.75
}

impl PotentialModel for ExampleTwo {
    fn dim(&self) -> usize {
        1
    }
    fn k(&self, t: f64, q: &[f64]) -> f64 {
        k_coefficient_two(t) * q[0] * q[0]
    }
    fn grad_k(&self, t: f64, q: &[f64], out: &mut [f64]) {
        out[0] = 2.0 * k_coefficient_two(t) * q[0];
    }
    fn w(&self, _t: f64, q: &[f64]) -> f64 {
        0.25 * q[0].powi(4)
    }
    fn grad_w(&self, _t: f64, q: &[f64], out: &mut [f64]) {
        out[0] = q[0].powi(3);
    }
    fn forcing(&self, t: f64, out: &mut [f64]) {
        out[0] = (-t * t).exp() / 32.0;
    }
}

const THREE_SCALE: f64 = 10.0 / 33.0;

impl PotentialModel for ExampleThree {
    fn dim(&self) -> usize {
        1
    }
    fn k(&self, _t: f64, q: &[f64]) -> f64 {
        q[0] * q[0]
    }
    fn grad_k(&self, _t: f64, q: &[f64], out: &mut [f64]) {
        out[0] = 2.0 * q[0];
    }
    fn w(&self, t: f64, q: &[f64]) -> f64 {
        let x = q[0];
        let a = (x * x / (t * t + 1.0)).atan();
        THREE_SCALE * x.powi(4) * (a * a + 1.0)
    }
    fn grad_w(&self, t: f64, q: &[f64], out: &mut [f64]) {
        let x = q[0];
        let s = t * t + 1.0;
        let u = x * x / s;
        let a = u.atan();
        // d/dx arctan(x^2 / s) = (2x / s) / (1 + u^2)
        let da = 2.0 * x / s / (1.0 + u * u);
        out[0] = THREE_SCALE * (4.0 * x.powi(3) * (a * a + 1.0) + x.powi(4) * 2.0 * a * da);
    }
    fn forcing(&self, t: f64, out: &mut [f64]) {
        out[0] = (1.0 + t * t) * (-t * t).exp() / 10.0;
    }
}
