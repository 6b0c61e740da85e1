use aird::dataset::{corrupt_labels, generate_clusterable, ClusterSpec, Corruption, NoisyClusterableDataset};
use aird::network::{init_network, Activation, TwoLayerNet};
use aird::numerics::Rng;
use aird::selfdistill::{
    default_eta, distill_sweep, plain_gd_train, self_distill_train, AccuracyReference, AlphaSchedule,
    BatchMode, DistillConfig, LabelFunction, ScheduleKind, METRICS_HEADER,
};
use aird::Error;
use proptest::prelude::*;

fn small_problem(rho: f64, k: usize, seed: u64) -> (NoisyClusterableDataset, TwoLayerNet) {
    let mut rng = Rng::new(seed);
    let spec = ClusterSpec { clusters: 2, n: 40, d: 8, epsilon: 0.1, min_center_gap: 1.0 };
    let clean = generate_clusterable(&spec, &mut rng).unwrap();
    let ds = corrupt_labels(&clean, &Corruption::Uniform(rho), &mut rng).unwrap();
    let net = init_network(k, 8, Activation::tanh(), &mut rng).unwrap();
    (ds, net)
}

#[test]
fn alpha_one_is_plain_gradient_descent_bit_for_bit() {
    let (ds, net) = small_problem(0.2, 64, 1);
    let mut cfg = DistillConfig::plain(0.02, 200, 10);
    cfg.h = LabelFunction::Clipped { rho: 0.2 };
    let plain = plain_gd_train(&net, &ds, &cfg, &mut Rng::new(0)).unwrap();
    cfg.schedule = ScheduleKind::Constant { alpha: 1.0 };
    let distilled = self_distill_train(&net, &ds, &cfg, &mut Rng::new(0)).unwrap();
    assert_eq!(plain.net.w, distilled.net.w);
    assert_eq!(plain.log, distilled.log);
}

#[test]
fn distilled_targets_carry_no_gradient() {
    // With h = identity and constant α the residual is α(f − y), so a detached
    // target gives exactly GD on y with step ηα.
    let (ds, net) = small_problem(0.2, 32, 2);
    let alpha = 0.4;
    let mut cfg = DistillConfig::plain(0.05, 20, 5);
    cfg.schedule = ScheduleKind::Constant { alpha };
    cfg.h = LabelFunction::Identity;
    let distilled = self_distill_train(&net, &ds, &cfg, &mut Rng::new(0)).unwrap();
    let plain = plain_gd_train(&net, &ds, &DistillConfig::plain(0.05 * alpha, 20, 5), &mut Rng::new(0)).unwrap();
    let diff = distilled.net.w.sub(&plain.net.w).unwrap().max_abs();
    assert!(diff <= 1e-12, "{diff}");
}

#[test]
fn training_is_deterministic() {
    let (ds, net) = small_problem(0.3, 64, 3);
    let mut cfg = DistillConfig::plain(0.02, 300, 50);
    cfg.schedule = ScheduleKind::Adaptive { lambda: 1.0, warmup: 50, reference: AccuracyReference::DistilledTargets };
    cfg.h = LabelFunction::Clipped { rho: 0.3 };
    cfg.ntk_metrics_every = Some(100);
    let a = self_distill_train(&net, &ds, &cfg, &mut Rng::new(7)).unwrap();
    let b = self_distill_train(&net, &ds, &cfg, &mut Rng::new(7)).unwrap();
    assert_eq!(a.net.w, b.net.w);
    assert_eq!(a.log.to_csv(), b.log.to_csv());
}

#[test]
fn zero_steps_leaves_the_network_alone() {
    let (ds, net) = small_problem(0.1, 16, 4);
    let mut cfg = DistillConfig::plain(0.1, 0, 1);
    cfg.record_trajectory = true;
    let out = plain_gd_train(&net, &ds, &cfg, &mut Rng::new(0)).unwrap();
    assert_eq!(out.net.w, net.w);
    assert!(out.log.rows.is_empty());
    assert_eq!(out.log.to_csv(), format!("{METRICS_HEADER}\n"));
    assert_eq!(out.trajectory.len(), 1);
}

#[test]
fn logging_cadence_includes_the_final_step() {
    let (ds, net) = small_problem(0.1, 16, 5);
    let out = plain_gd_train(&net, &ds, &DistillConfig::plain(0.05, 25, 10), &mut Rng::new(0)).unwrap();
    let steps: Vec<usize> = out.log.rows.iter().map(|r| r.step).collect();
    assert_eq!(steps, vec![0, 10, 20, 25]);
}

#[test]
fn clean_labels_are_learned() {
    let (ds, net) = small_problem(0.0, 256, 6);
    let mut cfg = DistillConfig::plain(default_eta(1.0, ds.n()), 3000, 500);
    cfg.schedule = ScheduleKind::Adaptive { lambda: 1.0, warmup: 500, reference: AccuracyReference::DistilledTargets };
    cfg.h = LabelFunction::Clipped { rho: 0.0 };
    let out = self_distill_train(&net, &ds, &cfg, &mut Rng::new(0)).unwrap();
    assert_eq!(out.log.last().unwrap().zero_one_err_true, 0.0);
}

#[test]
fn huge_step_size_diverges() {
    // tanh saturates, so only an unbounded activation can blow up.
    let (ds, net) = small_problem(0.2, 16, 7);
    let net = TwoLayerNet { act: Activation::identity(), ..net };
    let err = plain_gd_train(&net, &ds, &DistillConfig::plain(1e6, 50, 10), &mut Rng::new(0)).unwrap_err();
    assert!(matches!(err, Error::Diverged { .. }), "{err}");
}

#[test]
fn minibatches_cycle_through_the_data() {
    let (ds, net) = small_problem(0.2, 32, 8);
    let mut cfg = DistillConfig::plain(0.05, 40, 10);
    cfg.batch = BatchMode::Minibatch { size: 8 };
    let a = plain_gd_train(&net, &ds, &cfg, &mut Rng::new(1)).unwrap();
    let b = plain_gd_train(&net, &ds, &cfg, &mut Rng::new(1)).unwrap();
    assert_eq!(a.net.w, b.net.w);
    assert_ne!(a.net.w, net.w);
}

#[test]
fn adaptive_schedule_requires_accuracy() {
    let kind = ScheduleKind::Adaptive { lambda: 1.0, warmup: 0, reference: AccuracyReference::ObservedLabels };
    let mut s = AlphaSchedule::new(kind.clone()).unwrap();
    assert!(s.next_alpha(0, None).is_err());
    assert!(AlphaSchedule::prefix(&kind, 3).is_err());
    let mut s = AlphaSchedule::new(ScheduleKind::Constant { alpha: 0.5 }).unwrap();
    assert!(s.next_alpha(1, None).is_err());
}

#[test]
fn sweep_rows_follow_the_requested_order() {
    let (ds, _) = small_problem(0.3, 16, 9);
    let teacher = DistillConfig::plain(0.05, 1, 1);
    let mut student = DistillConfig::plain(0.05, 50, 50);
    student.h = LabelFunction::Clipped { rho: 0.3 };
    let stops = [40, 0, 10];
    let rows = distill_sweep(32, Activation::tanh(), &teacher, &student, &stops, &ds, &Rng::new(3)).unwrap();
    let got: Vec<usize> = rows.iter().map(|r| r.stop_epoch).collect();
    assert_eq!(got, stops);
    for r in &rows {
        assert!((0.0..=1.0).contains(&r.teacher_err_true));
        assert!((0.0..=1.0).contains(&r.student_err_true));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn adaptive_alpha_never_increases(seed in any::<u64>(), lambda in 0.0f64..2.0, warmup in 0usize..100) {
        let kind = ScheduleKind::Adaptive { lambda, warmup, reference: AccuracyReference::ObservedLabels };
        let mut s = AlphaSchedule::new(kind).unwrap();
        let mut rng = Rng::new(seed);
        let mut prev = 1.0;
        for t in 0..100_000 {
            let a = s.next_alpha(t, Some(rng.uniform())).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(a <= prev);
            prev = a;
        }
    }

    #[test]
    fn theoretical_alpha_never_increases(hold in 0usize..500, s1 in 0.0f64..0.01, s2 in 0.0f64..0.01) {
        let kind = ScheduleKind::Theoretical { hold, stage1: s1, stage2: s2, threshold: 0.1 };
        let prefix = AlphaSchedule::prefix(&kind, 100_000).unwrap();
        prop_assert!(prefix[..=hold.min(99_999)].iter().all(|&a| a == 1.0));
        prop_assert!(prefix.windows(2).all(|w| w[1] <= w[0] && w[1] >= 0.0));
    }
}
