use physid_core::identification::{sim_error, PushObservation, DEFAULT_ROTATION_WEIGHT};
use physid_core::policy_opt::{FixedFields, PolicyParam};
use physid_core::sim::{
    final_displacement, free_slide, rollout, rollout_policy, simulate_push, ObjectModel, Outcome, Pose, PushAction,
    Shape, SimConfig,
};
use proptest::prelude::*;

fn disk(mass: f64, mu: f64) -> ObjectModel {
    ObjectModel {
        mass,
        mu_static: 1.2 * mu,
        mu_kinetic: mu,
        shape: Shape::Disk { radius: 0.04 },
    }
}

fn block(mu: f64) -> ObjectModel {
    ObjectModel {
        mass: 0.3,
        mu_static: 1.2 * mu,
        mu_kinetic: mu,
        shape: Shape::Rectangle {
            width: 0.12,
            depth: 0.06,
        },
    }
}

fn reference_push() -> PushAction {
    PushAction::with_angle([-0.06, 0.015], 0.1, 0.3, 0.3).unwrap()
}

#[test]
fn slide_distance_matches_constant_deceleration() {
    let cfg = SimConfig::default();
    for (v, mu) in [(0.5, 0.3), (1.0, 0.2), (0.8, 0.6), (1.5, 0.5)] {
        let t = free_slide(&Pose::new(-0.8, 0.0, 0.0), [v, 0.0], 0.0, &disk(0.5, mu), &cfg).unwrap();
        let expect = v * v / (2.0 * mu * cfg.gravity);
        let (d, _) = final_displacement(&t);
        assert!((d - expect).abs() < 0.01 * expect, "v={v} mu={mu}: {d} vs {expect}");
    }
}

#[test]
fn free_slide_ignores_mass() {
    let cfg = SimConfig::default();
    let x0 = Pose::new(0.0, 0.1, 0.3);
    let a = free_slide(&x0, [0.4, -0.2], 3.0, &block(0.3), &cfg).unwrap();
    let mut heavy = block(0.3);
    heavy.mass = 1.7;
    let b = free_slide(&x0, [0.4, -0.2], 3.0, &heavy, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn kinetic_energy_never_increases_while_sliding() {
    let cfg = SimConfig::default();
    let m = block(0.25);
    let inertia = m.mass * m.shape.gyration_sq();
    let t = free_slide(&Pose::new(0.0, 0.0, 0.0), [0.6, 0.2], 6.0, &m, &cfg).unwrap();
    let ke: Vec<f64> = t
        .poses
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].pose, w[1].pose);
            let vx = (b.x - a.x) / cfg.dt;
            let vy = (b.y - a.y) / cfg.dt;
            let om = physid_core::sim::wrap_angle(b.yaw - a.yaw) / cfg.dt;
            0.5 * m.mass * (vx * vx + vy * vy) + 0.5 * inertia * om * om
        })
        .collect();
    assert!(ke.len() > 10);
    for w in ke.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn halving_dt_converges() {
    let coarse = SimConfig::default();
    let fine = SimConfig {
        dt: coarse.dt / 2.0,
        ..SimConfig::default()
    };
    for model in [block(0.3), disk(0.4, 0.25)] {
        let contact = match model.shape {
            Shape::Disk { .. } => [-0.04, 0.0],
            _ => reference_push().contact,
        };
        let a = PushAction::with_angle(contact, 0.1, 0.3, 0.3).unwrap();
        let p1 = simulate_push(&Pose::default(), &a, &model, &coarse)
            .unwrap()
            .final_pose();
        let p2 = simulate_push(&Pose::default(), &a, &model, &fine).unwrap().final_pose();
        assert!(p1.distance(&p2) < 5e-4, "shift {}", p1.distance(&p2));
    }
}

#[test]
fn displacement_is_monotone_in_kinetic_friction() {
    let cfg = SimConfig::default();
    let head_on = PushAction::with_angle([-0.06, 0.0], 0.0, 0.3, 0.3).unwrap();
    let mut last = f64::INFINITY;
    for k in 0..10 {
        let mu = 0.1 + 0.07 * k as f64;
        let t = simulate_push(&Pose::default(), &head_on, &block(mu), &cfg).unwrap();
        let (d, _) = final_displacement(&t);
        assert!(d <= last, "mu={mu}: {d} > {last}");
        last = d;
    }
}

#[test]
fn resting_object_stays_put() {
    let cfg = SimConfig::default();
    let x0 = Pose::new(0.2, -0.1, 1.0);
    let t = free_slide(&x0, [0.0, 0.0], 0.0, &block(0.3), &cfg).unwrap();
    assert_eq!(t.final_pose(), x0);
    let heavy = ObjectModel {
        mass: 5.0,
        ..block(0.5)
    };
    let t = simulate_push(&x0, &reference_push(), &heavy, &cfg).unwrap();
    assert_eq!(t.final_pose(), x0);
}

#[test]
fn speed_above_threshold_drops() {
    let cfg = SimConfig::default();
    let m = disk(0.3, 0.3);
    let x0 = Pose::new(0.0, 0.0, 0.0);
    let edge = cfg.table.x_max - x0.x;
    let v_star = (2.0 * m.mu_kinetic * cfg.gravity * edge).sqrt();
    let fixed = FixedFields {
        contact: [-0.04, 0.0],
        duration: 0.1,
        heading: 0.0,
        speed: 0.0,
        repeats: 1,
    };
    let t = rollout_policy(&x0, &PolicyParam::speed(1.1 * v_star, fixed), &m, &cfg).unwrap();
    assert!(t.dropped());
    let t = free_slide(&x0, [1.1 * v_star, 0.0], 0.0, &m, &cfg).unwrap();
    assert!(t.dropped());
    let t = free_slide(&x0, [0.9 * v_star, 0.0], 0.0, &m, &cfg).unwrap();
    assert_eq!(t.outcome, Outcome::OnTable);
}

#[test]
fn single_push_rollout_equals_simulate_push() {
    let cfg = SimConfig::default();
    let x0 = Pose::new(0.1, 0.2, -0.4);
    let a = reference_push();
    assert_eq!(
        rollout(&x0, &[a], &block(0.3), &cfg).unwrap(),
        simulate_push(&x0, &a, &block(0.3), &cfg).unwrap()
    );
}

#[test]
fn zero_speed_pushes_leave_object_in_place() {
    let cfg = SimConfig::default();
    let x0 = Pose::new(0.1, 0.2, -0.4);
    let a = PushAction::with_angle([-0.06, 0.0], 0.0, 0.0, 0.2).unwrap();
    let t = rollout(&x0, &[a, a], &block(0.3), &cfg).unwrap();
    assert!(t.poses.iter().all(|p| p.pose == x0));
    assert!(t.poses.windows(2).all(|w| w[1].t > w[0].t));
}

#[test]
fn simulation_is_deterministic() {
    let cfg = SimConfig::default();
    let a = simulate_push(&Pose::new(0.0, 0.1, 0.2), &reference_push(), &block(0.3), &cfg).unwrap();
    let b = simulate_push(&Pose::new(0.0, 0.1, 0.2), &reference_push(), &block(0.3), &cfg).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sim_error_is_translation_invariant(
        dx in -0.3f64..0.3, dy in -0.3f64..0.3,
        angle in -3.0f64..3.0, speed in 0.0f64..0.5, mu in 0.1f64..0.6,
    ) {
        let cfg = SimConfig::default();
        let m = block(mu);
        let action = PushAction::with_angle([-0.06, 0.0], angle, speed, 0.2).unwrap();
        let x_before = Pose::new(0.0, 0.0, 0.0);
        let x_after = Pose::new(0.05, -0.02, 0.1);
        let obs = PushObservation { x_before, action, x_after };
        let shifted = PushObservation {
            x_before: Pose::new(dx, dy, 0.0),
            action,
            x_after: Pose::new(x_after.x + dx, x_after.y + dy, x_after.yaw),
        };
        let e0 = sim_error(&obs, &m, &cfg, DEFAULT_ROTATION_WEIGHT);
        let e1 = sim_error(&shifted, &m, &cfg, DEFAULT_ROTATION_WEIGHT);
        prop_assert!((e0 - e1).abs() < 1e-9);
    }

    #[test]
    fn yaw_stays_wrapped(angle in -3.1f64..3.1, speed in 0.0f64..1.0, yaw in -10.0f64..10.0) {
        let a = PushAction::with_angle([-0.06, 0.01], angle, speed, 0.2).unwrap();
        let t = simulate_push(&Pose::new(0.0, 0.0, yaw), &a, &block(0.3), &SimConfig::default()).unwrap();
        for p in &t.poses {
            prop_assert!(p.pose.yaw > -std::f64::consts::PI && p.pose.yaw <= std::f64::consts::PI);
        }
    }
}
