mod common;

use std::ops::ControlFlow;

use choreo::model::{generate, Checkpoint, ModelConfig, ModelParams};
use choreo::numerics::{AdamHyper, AdamState, Tensor2D};
use choreo::skeleton::{build_sequence, JointFrame, NormMeta};
use choreo::training::{
    fit, read_loss_log, sample_positions, train_step, ClipPair, Trainer, TrainingConfig, Window, LOSS_LOG,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_params(seed: u64) -> ModelParams<f32> {
    ModelParams::init(ModelConfig::with_widths(8, 4), seed).unwrap()
}

fn small_config(steps: u64) -> TrainingConfig {
    TrainingConfig {
        window_length: 16,
        batch_size: 2,
        max_steps: steps,
        checkpoint_interval: 2,
        rng_seed: 5,
        ..TrainingConfig::default()
    }
}

fn constant_window(frames: usize) -> Window {
    let coords: [(f64, f64); 15] = std::array::from_fn(|j| (0.2 + 0.04 * j as f64, 0.8 - 0.05 * j as f64));
    let pose = JointFrame::from_coords(&coords);
    let meta = NormMeta {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    };
    let skeleton = build_sequence(&vec![pose; frames], meta, 30.0).unwrap().frames;
    Window {
        clip: 0,
        offset: 0,
        skeleton,
        mel: Tensor2D::filled(80, frames, 0.25),
    }
}

#[test]
fn loss_decreases_on_constant_target() {
    let mut params = small_params(1);
    let mut state = AdamState::new(AdamHyper::default());
    let batch = vec![constant_window(12), constant_window(12)];
    let mut last = f64::INFINITY;
    for step in 0..10 {
        let r = train_step(&mut params, &mut state, &batch, 1.0).unwrap();
        assert!(r.total < last, "step {step}: {} !< {last}", r.total);
        last = r.total;
    }
}

#[test]
fn perfect_predictions_leave_parameters_unchanged() {
    let params = small_params(2);
    let seed: Vec<f32> = (0..44).map(|i| 0.2 + 0.01 * i as f32).collect();
    let mel = Tensor2D::new(80, 10, (0..800).map(|i| ((i * 7) % 11) as f32 / 11.0).collect()).unwrap();
    // the model's own rollout is exactly what it predicts when teacher-forced
    let sequence = generate(&params, &seed, &mel).unwrap();
    let batch = vec![Window {
        clip: 0,
        offset: 0,
        skeleton: sequence,
        mel,
    }];
    let mut updated = params.clone();
    let mut state = AdamState::new(AdamHyper::default());
    let r = train_step(&mut updated, &mut state, &batch, 0.0).unwrap();
    assert_eq!(r.l1, 0.0);
    assert_eq!(state.step, 1);
    for (name, before) in params.tensors() {
        let delta = before.max_abs_diff(updated.get(name).unwrap()).unwrap();
        assert!(delta < 1e-9, "{name} moved by {delta}");
    }
}

#[test]
fn identical_seeds_identical_trajectories() {
    let pairs = vec![common::periodic_pair(40, 10.0)];
    let run = || {
        let mut t = Trainer::new(small_params(3), small_config(4)).unwrap();
        (0..4).map(|_| t.step(&pairs).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn resume_matches_straight_run() {
    let pairs = vec![common::periodic_pair(40, 10.0), common::periodic_pair(30, 12.0)];
    let straight_dir = tempfile::tempdir().unwrap();
    let straight = fit(
        &pairs,
        Trainer::new(small_params(4), small_config(5)).unwrap(),
        straight_dir.path(),
        |_| ControlFlow::Continue(()),
    )
    .unwrap();

    let split_dir = tempfile::tempdir().unwrap();
    fit(
        &pairs,
        Trainer::new(small_params(4), small_config(2)).unwrap(),
        split_dir.path(),
        |_| ControlFlow::Continue(()),
    )
    .unwrap();
    let ckpt = Checkpoint::load(split_dir.path().join("step-000002.l2dc")).unwrap();
    let resumed = fit(
        &pairs,
        Trainer::resume(ckpt, small_config(5)).unwrap(),
        split_dir.path(),
        |_| ControlFlow::Continue(()),
    )
    .unwrap();

    assert_eq!(straight.records, resumed.records);
    assert_eq!(straight.trainer.params, resumed.trainer.params);
    let log = read_loss_log(split_dir.path().join(LOSS_LOG)).unwrap();
    assert_eq!(log, straight.records);
    assert_eq!(log.iter().map(|r| r.step).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);

    let final_ckpt = Checkpoint::load(&resumed.final_checkpoint).unwrap();
    assert_eq!(final_ckpt.mean_seed_pose.len(), 44);
    assert!(final_ckpt.norm_meta.is_some());
}

#[test]
fn early_stop_writes_final_checkpoint() {
    let pairs = vec![common::periodic_pair(40, 10.0)];
    let dir = tempfile::tempdir().unwrap();
    let out = fit(
        &pairs,
        Trainer::new(small_params(6), small_config(50)).unwrap(),
        dir.path(),
        |r| {
            if r.step == 3 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        },
    )
    .unwrap();
    assert_eq!(out.records.len(), 3);
    assert!(out.final_checkpoint.exists());
}

#[test]
fn window_offsets_are_uniform() {
    let pair = common::periodic_pair(100, 10.0);
    let pairs: Vec<ClipPair> = vec![pair];
    let window = 10;
    let draws = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let positions = sample_positions(&pairs, window, draws, &mut rng).unwrap();
    let bins = 100 - window + 1;
    let mut counts = vec![0usize; bins];
    for (_, offset) in positions {
        counts[offset] += 1;
    }
    let expected = draws as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99.9th percentile of chi-square with 90 degrees of freedom is about 137.2
    assert!(chi2 < 137.2, "chi-square {chi2}");
    assert!(counts.iter().all(|&c| c > 0));
}
