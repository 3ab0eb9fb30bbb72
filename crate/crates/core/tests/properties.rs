mod common;

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use mpass_core::action::{mountain_pass_alpha, ActionContext};
use mpass_core::continuation::{derivative_bound, taper_and_embed};
use mpass_core::potential::{builtin_example, force_norm, force_norm_on_grid};
use mpass_core::{TimeGrid, Trajectory};
use proptest::prelude::*;

use common::*;

fn grid_strategy() -> impl Strategy<Value = TimeGrid> {
    (prop::sample::select(vec![1.0, 2.0, 5.0]), prop::sample::select(vec![0.25, 0.1, 0.05])).prop_map(|(k, h)| TimeGrid::with_step(k, h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sup_norm_is_embedded(grid in grid_strategy(), dim in 1usize..3, amp in 0.01f64..10.0, seed in any::<u64>()) {
        let q = random_trajectory(grid, dim, amp, &mut rng(seed));
        prop_assert!(q.norm_sup() <= SQRT_2 * q.norm_ek() + 1e-9);
    }

    #[test]
    fn norms_are_homogeneous(grid in grid_strategy(), zeta in -20.0f64..20.0, seed in any::<u64>()) {
        let q = random_trajectory(grid, 2, 1.0, &mut rng(seed));
        let z = q.scaled(zeta);
        for (a, b) in [(z.norm_ek(), q.norm_ek()), (z.norm_l2(), q.norm_l2()), (z.norm_sup(), q.norm_sup())] {
            prop_assert!((a - zeta.abs() * b).abs() <= 1e-12 * (1.0 + a));
        }
    }

    #[test]
    fn ek_distance_is_a_metric(grid in grid_strategy(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_trajectory(grid, 1, 1.0, &mut r);
        let b = random_trajectory(grid, 1, 1.0, &mut r);
        let c = random_trajectory(grid, 1, 1.0, &mut r);
        let (ab, bc, ac) = (a.distance_ek(&b).unwrap(), b.distance_ek(&c).unwrap(), a.distance_ek(&c).unwrap());
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!((ab - b.distance_ek(&a).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn zero_has_zero_action(id in 1u32..4, grid in grid_strategy()) {
        let ctx = ActionContext::new(builtin_example(id).unwrap(), grid);
        prop_assert_eq!(ctx.action(&ctx.zero()).unwrap(), 0.0);
    }

    #[test]
    fn gradient_pairs_with_directional_derivative(id in 0u32..4, seed in any::<u64>()) {
        let spec = if id == 0 { coupled_2d() } else { builtin_example(id).unwrap() };
        let n = spec.dim();
        let grid = TimeGrid::with_step(2.0, 0.05).unwrap();
        let ctx = ActionContext::new(spec, grid);
        let mut r = rng(seed);
        let q = random_trajectory(grid, n, 1.5, &mut r);
        let v = random_trajectory(grid, n, 1.0, &mut r);
        let eps = 1e-6;
        let fd = (ctx.action(&q.axpy(eps, &v).unwrap()).unwrap() - ctx.action(&q.axpy(-eps, &v).unwrap()).unwrap()) / (2.0 * eps);
        let an = ctx.gradient(&q).unwrap().inner_l2(&v).unwrap();
        prop_assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "fd {} vs {}", fd, an);
    }

    #[test]
    fn csv_round_trip_is_exact(grid in grid_strategy(), dim in 1usize..3, seed in any::<u64>()) {
        let q = random_trajectory(grid, dim, 3.0, &mut rng(seed));
        let back = Trajectory::from_csv(&q.to_csv()).unwrap();
        prop_assert_eq!(back, q);
    }

    #[test]
    fn alpha_sign_matches_budget(budget in -1.0f64..1.0, force in 0.0f64..1.0) {
        prop_assert_eq!(mountain_pass_alpha(budget, force) > 0.0, force < budget);
    }

    #[test]
    fn derivative_bound_dominates_velocity(grid in grid_strategy(), seed in any::<u64>()) {
        let q = random_trajectory(grid, 1, 1.0, &mut rng(seed));
        let bound = derivative_bound(&q);
        let dq = q.derivative();
        for (i, b) in bound.iter().enumerate() {
            prop_assert!(dq.at(i)[0].abs() <= b + 1e-4 * (1.0 + b), "node {}: {} > {}", i, dq.at(i)[0], b);
        }
    }

    #[test]
    fn taper_then_embed_keeps_ek_norm_bounded(seed in any::<u64>(), k in prop::sample::select(vec![3.0, 7.0]), big in prop::sample::select(vec![10.0, 40.0])) {
        let grid = TimeGrid::with_step(k, 0.05).unwrap();
        let q = random_trajectory(grid, 1, 1.0, &mut rng(seed));
        let e = taper_and_embed(&q, big, 5).unwrap();
        prop_assert_eq!(e.grid().half_period(), big);
        prop_assert!(e.norm_sup() <= q.norm_sup());
        let back = e.restrict(k).unwrap();
        for i in 5..q.len() - 5 {
            prop_assert_eq!(back.at(i)[0], q.at(i)[0]);
        }
    }
}

#[test]
fn force_norm_is_monotone_and_dominates_restrictions() {
    for id in 1..=3 {
        let spec = builtin_example(id).unwrap();
        let mut last = 0.0;
        for t in [1.0, 2.0, 4.0, 8.0, 10.0] {
            let v = force_norm(&spec, t, 1e-3).unwrap();
            assert!(v >= last - 1e-15);
            last = v;
        }
        for k in [1.0, 5.0, 20.0] {
            let on_grid = force_norm_on_grid(&spec, &TimeGrid::with_step(k, 0.05).unwrap());
            assert!(on_grid <= last + 1e-9, "example {id}, k = {k}: {on_grid} > {last}");
        }
    }
}

#[test]
fn sphere_of_radius_rho_stays_above_alpha() {
    for id in [1, 2] {
        let s = setup(id, 0.05);
        for k in [1.0, 5.0] {
            let ctx = s.context(k, 0.05);
            let mut r = rng(id as u64 * 31 + k as u64);
            for _ in 0..200 {
                let q = random_trajectory(*ctx.grid(), 1, 1.0, &mut r);
                let q = q.scaled(FRAC_1_SQRT_2 / q.norm_ek());
                let v = ctx.action(&q).unwrap();
                assert!(v >= s.geometry.alpha - 5e-3, "example {id}, k = {k}: {v} < {}", s.geometry.alpha);
            }
        }
    }
}
