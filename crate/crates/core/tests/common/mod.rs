#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use mpass_core::action::{geometry_constants, ActionContext, GeometryConstants};
use mpass_core::potential::{builtin_example, estimate_constants, AuditConfig, HypothesisReport, PotentialSpec, SpecFile};
use mpass_core::{TimeGrid, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const COUPLED_2D: &str = r#"
name = "coupled planar"
dim = 2
mu = 4.0
K = "(3/4 + sin(t)/8)*(q1^2 + q2^2) + q1*q2/8"
grad_K = ["2*(3/4 + sin(t)/8)*q1 + q2/8", "2*(3/4 + sin(t)/8)*q2 + q1/8"]
W = "(q1^2 + q2^2)^2/4"
grad_W = ["(q1^2 + q2^2)*q1", "(q1^2 + q2^2)*q2"]
f = ["exp(-t^2)/40", "-exp(-t^2)/50"]
"#;

pub fn coupled_2d() -> PotentialSpec {
    SpecFile::parse(COUPLED_2D).unwrap().into_spec().unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random trigonometric polynomial plus a little nodal noise, scaled so
/// that its sup norm is `amplitude`.
pub fn random_trajectory(grid: TimeGrid, dim: usize, amplitude: f64, r: &mut ChaCha8Rng) -> Trajectory {
    let k = grid.half_period();
    let modes: Vec<Vec<(f64, f64, f64)>> = (0..dim)
        .map(|_| {
            (0..6)
                .map(|_| {
                    let j = r.random_range(0..12) as f64;
                    (j, r.random_range(-1.0..1.0), r.random_range(0.0..2.0 * PI))
                })
                .collect()
        })
        .collect();
    let noise = r.random_range(0.0..0.05);
    let mut q = Trajectory::from_fn(grid, dim, |t, out| {
        for (c, o) in out.iter_mut().enumerate() {
            *o = modes[c].iter().map(|(j, a, p)| a * (PI * j * t / k + p).cos()).sum();
        }
    })
    .unwrap();
    for v in q.as_mut_slice() {
        *v += noise * r.random_range(-1.0..1.0);
    }
    let s = q.norm_sup();
    if s > 0.0 {
        q = q.scaled(amplitude / s);
    }
    q
}

pub fn report_for(spec: &PotentialSpec) -> Arc<HypothesisReport> {
    Arc::new(estimate_constants(spec, &AuditConfig::default()).unwrap())
}

pub struct Setup {
    pub spec: PotentialSpec,
    pub report: Arc<HypothesisReport>,
    pub geometry: GeometryConstants,
}

pub fn setup(id: u32, h: f64) -> Setup {
    setup_spec(builtin_example(id).unwrap(), h)
}

pub fn setup_spec(spec: PotentialSpec, h: f64) -> Setup {
    let report = report_for(&spec);
    let ctx1 = ActionContext::new(spec.clone(), TimeGrid::with_step(1.0, h).unwrap()).with_report(report.clone());
    let geometry = geometry_constants(&ctx1, &report).unwrap();
    Setup { spec, report, geometry }
}

impl Setup {
    pub fn context(&self, k: f64, h: f64) -> ActionContext {
        ActionContext::new(self.spec.clone(), TimeGrid::with_step(k, h).unwrap()).with_report(self.report.clone())
    }
}
