mod common;

use common::{brute_est_acc, brute_mae, brute_sae};
use convnilm_core::data::{
    kfold_split, resample_linear, window_split, ChannelSeries, MinMaxScale, Series,
};
use convnilm_core::metrics::{est_acc, mae, sae};
use convnilm_core::model::{param_count, ConvNilm, ModelConfig, Variant};
use convnilm_core::autodiff::Tape;
use proptest::prelude::*;

fn small_model(variant: Variant, c: usize) -> ModelConfig {
    ModelConfig {
        n_filters: 8,
        filter_len: 8,
        stride: 4,
        appliances: c,
        ..ModelConfig::standard(variant, c)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scale_round_trips(xs in prop::collection::vec(-1e4f64..1e4, 2..64)) {
        prop_assume!(xs.iter().any(|&x| x != xs[0]));
        let scale = MinMaxScale::fit(&xs).unwrap();
        let scaled = scale.apply(&xs);
        prop_assert!(scaled.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        for (a, b) in scale.invert(&scaled).iter().zip(&xs) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn resampling_keeps_samples_on_the_grid(
        values in prop::collection::vec(0.0f64..3000.0, 2..40),
        step in 1i64..10,
    ) {
        let samples: Vec<(i64, f64)> =
            values.iter().enumerate().map(|(i, &v)| (1000 + i as i64 * step, v)).collect();
        let grid = resample_linear(&ChannelSeries::new("x", samples), 1.0).unwrap();
        prop_assert_eq!(grid.len(), (values.len() - 1) * step as usize + 1);
        for (i, &v) in values.iter().enumerate() {
            prop_assert_eq!(grid[i * step as usize], v);
        }
        // Between samples the grid stays inside the bracketing values.
        for j in 0..grid.len() - 1 {
            let i = j / step as usize;
            let (lo, hi) = (values[i].min(values[i + 1]), values[i].max(values[i + 1]));
            prop_assert!(grid[j] >= lo - 1e-9 && grid[j] <= hi + 1e-9);
        }
    }

    #[test]
    fn windows_tile_the_series(len in 8usize..300, window in 1usize..64, stride in 1usize..64) {
        prop_assume!(window <= len);
        let mixture: Vec<f64> = (0..len).map(|i| (i % 17) as f64 + 1.0).collect();
        let series = Series {
            names: vec!["a".into()],
            targets: vec![mixture.iter().map(|m| m * 0.5).collect()],
            mixture: mixture.clone(),
            start: 0,
            period: 1.0,
        };
        let scale = MinMaxScale::fit(&mixture).unwrap();
        let w = window_split(&series, scale, window, stride).unwrap();
        prop_assert_eq!(w.len(), (len - window) / stride + 1);
        for (k, win) in w.iter().enumerate() {
            prop_assert_eq!(win.mixture.len(), window);
            prop_assert_eq!(win.start, (k * stride) as i64);
            for (j, v) in win.mixture.iter().enumerate() {
                prop_assert_eq!(*v, scale.apply_one(mixture[k * stride + j]));
            }
        }
    }

    #[test]
    fn folds_partition_into_contiguous_blocks(n in 2usize..200, k in 2usize..20) {
        prop_assume!(k <= n);
        let folds = kfold_split(n, k).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = vec![0usize; n];
        for f in &folds {
            prop_assert!(!f.validation.is_empty());
            prop_assert!(f.validation.windows(2).all(|p| p[1] == p[0] + 1));
            let mut all: Vec<usize> = f.train.iter().chain(&f.validation).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            for &v in &f.validation {
                seen[v] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn metrics_match_brute_force(
        pred in prop::collection::vec(prop::collection::vec(0.0f64..500.0, 16), 1..5),
        seed in 0u64..1000,
    ) {
        let c = pred.len();
        let target: Vec<Vec<f64>> = (0..c)
            .map(|i| (0..16).map(|t| ((seed as usize + i * 7 + t * 13) % 50) as f64 * 4.0 + 1.0).collect())
            .collect();
        let m = mae(&pred, &target).unwrap();
        let (per, total) = brute_mae(&pred, &target);
        for (a, b) in m.per_appliance.iter().zip(&per) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert!((m.total - total).abs() < 1e-9);
        let acc = est_acc(&pred, &target).unwrap();
        prop_assert!((acc - brute_est_acc(&pred, &target)).abs() < 1e-9);
        prop_assert!(acc <= 1.0);
        let s = sae(&pred, &target).unwrap();
        for (a, b) in s.per_appliance.iter().zip(brute_sae(&pred, &target).0) {
            let a = a.unwrap();
            prop_assert!(a >= 0.0 && (a - b).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn masks_are_non_negative_and_shapes_follow_the_input(
        t in 8usize..120,
        c in 1usize..4,
        seed in 0u64..1000,
        variant in prop_oneof![Just(Variant::Base), Just(Variant::Causal), Just(Variant::CausalGlu)],
    ) {
        let cfg = small_model(variant, c);
        let model = ConvNilm::new(cfg.clone(), seed).unwrap();
        let mixture: Vec<f64> = (0..t).map(|i| ((i * 31 + seed as usize) % 23) as f64 / 23.0).collect();
        let mut tape = Tape::new();
        let p = model.bind(&mut tape, false);
        let parts = model.forward_parts(&mut tape, &p, &mixture).unwrap();
        let (l, s) = (cfg.filter_len, cfg.stride);
        let frames = (t.max(l) - l).div_ceil(s) + 1;
        let mask_shape = tape.shape(parts.masks).to_vec();
        prop_assert_eq!(mask_shape[0], c);
        prop_assert_eq!(mask_shape[1], cfg.n_filters);
        prop_assert_eq!(mask_shape[2], frames);
        prop_assert!(tape.value(parts.masks).data().iter().all(|&m| m >= 0.0));
        prop_assert_eq!(tape.shape(parts.output).to_vec(), vec![c, t]);
        prop_assert_eq!(model.params().total(), param_count(&cfg));
    }
}

#[test]
fn short_inputs_are_rejected() {
    let model = ConvNilm::new(small_model(Variant::Base, 2), 0).unwrap();
    assert!(model.predict(&[0.5; 7]).is_err());
    assert_eq!(model.predict(&[0.5; 8]).unwrap().shape(), &[2, 8]);
}

#[test]
fn doubling_appliances_changes_only_the_mask_head() {
    let a = small_model(Variant::Base, 2);
    let b = small_model(Variant::Base, 4);
    let bn = a.bottleneck;
    assert_eq!(param_count(&b) - param_count(&a), 2 * a.n_filters * (bn + 1));
}
