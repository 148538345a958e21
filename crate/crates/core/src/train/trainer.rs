use std::time::Instant;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, clip_global_norm, AdamConfig, AdamState};
use super::loss::{loss, wmse_value, LossKind};
use super::monitor::CollapseMonitor;
use crate::autodiff::{Precision, Tape};
use crate::data::{kfold_split, SignalWindow};
use crate::error::{ModelError, TrainError};
use crate::model::{ConvNilm, ModelConfig};
use crate::tensor::Tensor;

/// Loss above which a run is treated as diverged.
const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub k_folds: usize,
    /// Run only the first `max_folds` folds; all of them when absent.
    pub max_folds: Option<usize>,
    pub seed: u64,
    pub loss: LossKind,
    pub precision: Precision,
    /// Global gradient-norm clipping threshold; off when absent.
    pub clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            batch_size: 5,
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 0.01,
            k_folds: 10,
            max_folds: None,
            seed: 0,
            loss: LossKind::Wmse,
            precision: Precision::F64,
            clip: None,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Setup(m));
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("betas must lie in [0, 1)".into());
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.k_folds < 2 {
            return bad(format!("k_folds must be at least 2, got {}", self.k_folds));
        }
        if let Some(c) = self.clip {
            if !(c > 0.0) {
                return bad(format!("clip threshold must be positive, got {c}"));
            }
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub fold: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub train_wmse: f64,
    pub val_wmse: f64,
    pub seconds: f64,
    pub collapse: bool,
}

impl std::fmt::Display for EpochLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "fold={} epoch={} train_loss={:.6e} train_wmse={:.6e} val_wmse={:.6e} time_s={:.3}",
            self.fold, self.epoch, self.train_loss, self.train_wmse, self.val_wmse, self.seconds
        )?;
        if self.collapse {
            f.write_str(" collapse=1")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FoldResult {
    pub fold: usize,
    /// Parameters with the lowest validation WMSE seen.
    pub model: ConvNilm,
    pub best_epoch: usize,
    pub best_val_wmse: f64,
    pub log: Vec<EpochLog>,
    /// Set when training stopped early on a diverging loss or gradient.
    pub diverged: Option<String>,
    pub collapse_alarm: bool,
}

/// Loss value and parameter gradients for one window.
#[derive(Clone, Debug)]
pub struct WindowGrad {
    pub loss: f64,
    pub wmse: f64,
    pub mean_abs_pred: f64,
    pub mean_abs_target: f64,
    pub grads: Vec<Vec<f64>>,
}

fn target_tensor(w: &SignalWindow) -> Result<Tensor, TrainError> {
    Ok(Tensor::new([w.appliances(), w.len()], w.targets_flat())?)
}

fn mean_abs(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum::<f64>() / x.len().max(1) as f64
}

/// Forward and backward pass for a single window on its own tape.
pub fn window_gradients(
    model: &ConvNilm,
    window: &SignalWindow,
    kind: LossKind,
    precision: Precision,
) -> Result<WindowGrad, TrainError> {
    let mut tape = Tape::with_precision(precision);
    let p = model.bind(&mut tape, true);
    let pred = model.forward(&mut tape, &p, &window.mixture)?;
    let target_t = target_tensor(window)?;
    let target = tape.constant(target_t.clone());
    let l = loss(&mut tape, kind, pred, target).map_err(ModelError::from)?;
    let grads = tape.backward(l)?;
    let pred_v = tape.value(pred);
    Ok(WindowGrad {
        loss: tape.value(l).item(),
        wmse: wmse_value(pred_v, &target_t)?,
        mean_abs_pred: mean_abs(pred_v.data()),
        mean_abs_target: mean_abs(target_t.data()),
        grads: p
            .vars()
            .iter()
            .map(|&v| grads.wrt(v).data().to_vec())
            .collect(),
    })
}

/// Mean per-window WMSE of `model` over `windows`.
pub fn evaluate_wmse(
    model: &ConvNilm,
    windows: &[SignalWindow],
    precision: Precision,
) -> Result<f64, TrainError> {
    if windows.is_empty() {
        return Ok(f64::NAN);
    }
    let per = windows
        .par_iter()
        .map(|w| -> Result<f64, TrainError> {
            let pred = model.predict_with(&w.mixture, precision)?;
            Ok(wmse_value(&pred, &target_tensor(w)?)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

fn check_windows(model: &ConvNilm, windows: &[&SignalWindow]) -> Result<(), TrainError> {
    let c = model.config().appliances;
    let Some(first) = windows.first() else {
        return Err(TrainError::Setup("no training windows".into()));
    };
    let t = first.len();
    for w in windows {
        if w.appliances() != c {
            return Err(TrainError::Setup(format!(
                "window has {} appliances, model expects {c}",
                w.appliances()
            )));
        }
        if w.len() != t || w.targets.iter().any(|x| x.len() != t) {
            return Err(TrainError::Setup("windows differ in length".into()));
        }
    }
    Ok(())
}

/// Trains `model` on `train`, selecting the parameters with the lowest
/// validation WMSE. `observer` sees every epoch log together with the
/// current parameters.
pub fn train_fold(
    mut model: ConvNilm,
    train: &[SignalWindow],
    validation: &[SignalWindow],
    cfg: &TrainConfig,
    fold: usize,
    observer: &mut dyn FnMut(&EpochLog, &ConvNilm),
) -> Result<FoldResult, TrainError> {
    cfg.validate()?;
    check_windows(&model, &train.iter().chain(validation).collect::<Vec<_>>())?;
    let adam = cfg.adam();
    let mut state = AdamState::new(model.params().tensors());
    let names = model.params().names().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (fold as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut monitor = CollapseMonitor::default();

    let mut best = model.clone();
    let mut best_val = evaluate_wmse(&model, validation, cfg.precision)?;
    if best_val.is_nan() {
        best_val = f64::INFINITY;
    }
    let mut best_epoch = 0;
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut diverged = None;

    'epochs: for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let (mut loss_sum, mut wmse_sum) = (0.0, 0.0);
        let (mut pred_abs, mut target_abs) = (0.0, 0.0);
        for batch in order.chunks(cfg.batch_size) {
            let results = batch
                .par_iter()
                .map(|&i| window_gradients(&model, &train[i], cfg.loss, cfg.precision))
                .collect::<Vec<_>>();
            let mut grads: Vec<Vec<f64>> =
                model.params().tensors().iter().map(|t| vec![0.0; t.numel()]).collect();
            let mut batch_loss = 0.0;
            for r in results {
                let r = match r {
                    Ok(r) => r,
                    Err(TrainError::Model(ModelError::Tensor(e))) => {
                        diverged = Some(format!("epoch {epoch}: {e}"));
                        break 'epochs;
                    }
                    Err(e) => return Err(e),
                };
                batch_loss += r.loss;
                wmse_sum += r.wmse;
                pred_abs += r.mean_abs_pred;
                target_abs += r.mean_abs_target;
                for (acc, g) in grads.iter_mut().zip(&r.grads) {
                    for (a, b) in acc.iter_mut().zip(g) {
                        *a += b;
                    }
                }
            }
            let n = batch.len() as f64;
            batch_loss /= n;
            loss_sum += batch_loss * n;
            if !batch_loss.is_finite() || batch_loss > DIVERGENCE_LIMIT {
                diverged = Some(format!("epoch {epoch}: batch loss {batch_loss}"));
                break 'epochs;
            }
            grads.iter_mut().flatten().for_each(|g| *g /= n);
            if let Some(c) = cfg.clip {
                clip_global_norm(&mut grads, c);
            }
            let before = model.params().clone();
            match adam_step(model.params_mut().tensors_mut(), &grads, &names, &mut state, &adam) {
                Ok(()) => {}
                Err(TrainError::NonFiniteGradient(name)) => {
                    diverged = Some(format!("epoch {epoch}: non-finite gradient for {name}"));
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
            if !model.params().is_finite() {
                *model.params_mut() = before;
                diverged = Some(format!("epoch {epoch}: parameters became non-finite"));
                break 'epochs;
            }
        }
        let n = train.len() as f64;
        let val = evaluate_wmse(&model, validation, cfg.precision)?;
        let collapse = monitor.observe(pred_abs / n, target_abs / n);
        let entry = EpochLog {
            fold,
            epoch,
            train_loss: loss_sum / n,
            train_wmse: wmse_sum / n,
            val_wmse: val,
            seconds: started.elapsed().as_secs_f64(),
            collapse,
        };
        info!("{entry}");
        let score = if validation.is_empty() { entry.train_wmse } else { val };
        if score < best_val {
            best_val = score;
            best_epoch = epoch;
            best = model.clone();
        }
        observer(&entry, &model);
        log.push(entry);
    }
    if let Some(msg) = &diverged {
        warn!("fold {fold} diverged ({msg}); keeping the best parameters from epoch {best_epoch}");
    }
    if monitor.fired() {
        warn!("fold {fold}: outputs collapsed towards zero");
    }
    Ok(FoldResult {
        fold,
        model: best,
        best_epoch,
        best_val_wmse: best_val,
        log,
        diverged,
        collapse_alarm: monitor.fired(),
    })
}

/// Time-blocked cross-validation: one freshly initialised model per fold,
/// seeded from `cfg.seed` and the fold index.
pub fn train_folds(
    model_config: &ModelConfig,
    windows: &[SignalWindow],
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(&EpochLog, &ConvNilm),
) -> Result<Vec<FoldResult>, TrainError> {
    cfg.validate()?;
    let splits = kfold_split(windows.len(), cfg.k_folds)
        .map_err(|e| TrainError::Setup(e.to_string()))?;
    let take = cfg.max_folds.unwrap_or(splits.len()).min(splits.len());
    let mut out = Vec::with_capacity(take);
    for split in splits.into_iter().take(take) {
        let model = ConvNilm::new(model_config.clone(), cfg.seed.wrapping_add(split.fold as u64))?;
        let pick = |idx: &[usize]| idx.iter().map(|&i| windows[i].clone()).collect::<Vec<_>>();
        out.push(train_fold(
            model,
            &pick(&split.train),
            &pick(&split.validation),
            cfg,
            split.fold,
            observer,
        )?);
    }
    Ok(out)
}
