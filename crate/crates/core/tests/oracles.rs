mod common;

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use mpass_core::action::{a_priori_radius, ActionContext};
use mpass_core::potential::{builtin_example, check_admissibility, Verdict};
use mpass_core::TimeGrid;

use common::*;

/// Extremes of a scalar coefficient over `t in [0, 200]`, sampled and at infinity.
fn coefficient_range(c: impl Fn(f64) -> f64, at_infinity: f64) -> (f64, f64) {
    let mut lo = at_infinity;
    let mut hi = at_infinity;
    for i in 0..=200_000 {
        let v = c(i as f64 * 1e-3);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// `int (1+t^2)^2 e^{-2t^2}` from Gaussian moments.
fn example_three_force_norm() -> f64 {
    let g = FRAC_PI_2.sqrt();
    (g * (1.0 + 2.0 / 4.0 + 3.0 / 16.0) / 100.0).sqrt()
}

fn gaussian_force_norm(scale: f64) -> f64 {
    FRAC_PI_2.powf(0.25) / scale
}

#[test]
fn example_one_constants() {
    let r = report_for(&builtin_example(1).unwrap());
    let (b1, b2) = coefficient_range(|t| (t * t + 1.0) / (t * t + 2.0), 1.0);
    let (m, big_m) = coefficient_range(|t| (t * t + 12.0) / (3.0 * t * t + 27.0), 1.0 / 3.0);
    assert!((b1 - 0.5).abs() < 1e-12 && (big_m - 4.0 / 9.0).abs() < 1e-12);
    assert!((r.b1_hat - b1).abs() < 1e-3);
    assert!((r.b2_hat - b2).abs() < 1e-3 && r.b2_hat >= 1.0 - 1e-4);
    assert!((r.big_m_hat - big_m).abs() < 1e-3);
    assert!((r.m_hat - m).abs() < 1e-3);
    assert!((r.mu_hat - 4.0).abs() < 1e-3);
    assert!((r.force_l2 - gaussian_force_norm(36.0)).abs() < 1e-6);
    assert!((r.force_budget - SQRT_2 / 36.0).abs() < 1e-3);
    assert_eq!(check_admissibility(&r), Verdict::Admissible);
}

#[test]
fn example_two_constants() {
    let r = report_for(&builtin_example(2).unwrap());
    let (b1, b2) = (0.5, 1.0);
    assert!((r.b1_hat - b1).abs() < 1e-3 && r.b1_hat >= 0.5 - 1e-6);
    assert!((r.b2_hat - b2).abs() < 1e-3 && r.b2_hat <= 1.0);
    assert_eq!((r.m_hat, r.big_m_hat), (0.25, 0.25));
    assert!((r.mu_hat - 4.0).abs() < 1e-3);
    assert_eq!(r.bbar1, 1.0);
    assert!((r.force_l2 - gaussian_force_norm(32.0)).abs() < 1e-6);
    assert!((r.force_budget - SQRT_2 / 8.0).abs() < 1e-12);
    assert_eq!(check_admissibility(&r), Verdict::Admissible);
}

#[test]
fn example_three_verdict_matches_quadrature_oracle() {
    let r = report_for(&builtin_example(3).unwrap());
    let big_m = 10.0 / 33.0 * (1.0 + PI * PI / 16.0);
    let budget = SQRT_2 / 4.0 * (1.0 - 2.0 * big_m);
    let force = example_three_force_norm();
    let oracle_admissible = big_m < 0.5 && force < budget;
    assert!((r.big_m_hat - big_m).abs() < 1e-6);
    assert!((r.force_l2 - force).abs() < 1e-6);
    assert!((r.force_budget - budget).abs() < 1e-5);
    assert_eq!(check_admissibility(&r).is_admissible(), oracle_admissible);
}

#[test]
fn example_two_alpha_and_radius() {
    let s = setup(2, 0.05);
    let force = gaussian_force_norm(32.0);
    let alpha = SQRT_2 / 2.0 * (SQRT_2 / 8.0 - force);
    assert!((s.geometry.alpha - alpha).abs() < 1e-6, "{} vs {alpha}", s.geometry.alpha);
    assert!((s.geometry.alpha - 0.100263).abs() < 2e-6);
    let b = SQRT_2 / 8.0;
    let (a2, a1, a0) = (0.5, -b * 1.5, -2.0 * s.geometry.m0);
    let root = (-a1 + (a1 * a1 - 4.0 * a2 * a0).sqrt()) / (2.0 * a2);
    assert!((s.geometry.m1 - root).abs() < 1e-12);
    assert_eq!(a_priori_radius(1.0, 0.0, 4.0, 1.0), 2.0);
    assert_eq!(a_priori_radius(1.0, 0.0, 4.0, 0.0), 0.0);
}

/// Scan of `I_1(zeta Q)` and `|zeta Q|_E` over powers of two, written
/// against the closed-form integrands rather than the action module.
fn first_escaping_power(spec_id: u32) -> f64 {
    let h = 0.05;
    let n = 40;
    let k_coef = |t: f64| match spec_id {
        1 => (t * t + 1.0) / (t * t + 2.0),
        _ => t.sin() / 8.0 + (SQRT_2 * t).sin() / 8.0 + 0.75,
    };
    let w_coef = |t: f64| match spec_id {
        1 => (t * t + 12.0) / (3.0 * t * t + 27.0),
        _ => 0.25,
    };
    let f = |t: f64| (-t * t).exp() / if spec_id == 1 { 36.0 } else { 32.0 };
    let bump: Vec<f64> = (0..n)
        .map(|i| if i == 0 { 0.0 } else { (PI * (-1.0 + i as f64 * h) / 2.0).cos() })
        .collect();
    let mut zeta = 1.0;
    loop {
        let mut kin = 0.0;
        let mut l2 = 0.0;
        let mut pot = 0.0;
        for i in 0..n {
            let t = -1.0 + i as f64 * h;
            let q = zeta * bump[i];
            let d = zeta * bump[(i + 1) % n] - q;
            kin += d * d / h;
            l2 += h * q * q;
            pot += h * (k_coef(t) * q * q - w_coef(t) * q.powi(4) + f(t) * q);
        }
        let action = kin / 2.0 + pot;
        let norm = (kin + l2).sqrt();
        if norm > SQRT_2 / 2.0 && action < 0.0 {
            return zeta;
        }
        zeta *= 2.0;
    }
}

#[test]
fn endpoint_scaling_regression() {
    for id in [1, 2] {
        let s = setup(id, 0.05);
        assert_eq!(s.geometry.zeta_star, first_escaping_power(id));
        assert_eq!(s.geometry.zeta_star, 4.0);
    }
}

#[test]
fn upper_bound_criterion_is_weaker_than_construction() {
    let s = setup(2, 0.05);
    let ctx = s.context(1.0, 0.05);
    let bump = ctx.cosine_bump().unwrap();
    let mut zeta = 1.0;
    while ctx.action_upper_bound(zeta, &bump).unwrap() >= 0.0 {
        zeta *= 2.0;
    }
    assert_eq!(zeta, 8.0);
    assert!(s.geometry.zeta_star <= zeta);
}

#[test]
fn zero_forcing_endpoint_and_alpha() {
    let spec = builtin_example(2).unwrap().without_forcing();
    assert!(spec.has_zero_forcing());
    let s = setup_spec(spec, 0.05);
    assert!((s.geometry.alpha - 0.125).abs() < 1e-12);
    assert_eq!(s.geometry.force_l2, 0.0);
    let ctx = ActionContext::new(s.spec.clone(), TimeGrid::with_step(1.0, 0.05).unwrap());
    let e = s.geometry.endpoint(ctx.grid()).unwrap();
    assert!(ctx.action(&e).unwrap() < 0.0);
    assert!(e.norm_ek() > SQRT_2 / 2.0);
}
