use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::Path;

use convnilm_core::config::RunConfig;
use convnilm_core::data::{
    default_specs, gen_synthetic, kfold_split, load_house, parse_channel_file, resample_linear,
    window_split, write_channel_file, AggregateSource, ChannelEntry, ChannelSeries, DatasetKind,
    FoldEntry, FoldSplit, Manifest, MinMaxScale, SignalWindow, SynthSpecFile, WindowCache,
};
use convnilm_core::metrics::{MetricSpace, MetricsReport};
use convnilm_core::model::{
    param_breakdown, param_count, stream_predict, Checkpoint, CheckpointMeta, ConvNilm,
    ModelConfig, NormKind, Variant,
};
use convnilm_core::train::{train_fold, EpochLog, TrainConfig};
use convnilm_core::Tensor;
use log::warn;
use rayon::prelude::*;

use crate::dataset::{self, Dataset};
use crate::failure::{Failure, Outcome};
use crate::{DisaggregateArgs, EvalArgs, InspectArgs, PrepareArgs, SynthArgs, TrainArgs};

const CONFIG_ECHO: &str = "config.toml";

fn load_config(path: Option<&Path>) -> Outcome<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).map_err(|e| {
            let f = Failure::from(e);
            Failure { code: crate::failure::USAGE, ..f }.context(format!("reading {}", p.display()))
        }),
        None => Ok(RunConfig::default()),
    }
}

fn echo_config(dir: &Path, cfg: &RunConfig) -> Outcome {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_ECHO), cfg.to_toml())?;
    Ok(())
}

fn folds_for(windows: usize, k: usize) -> Vec<FoldEntry> {
    let k = k.min(windows);
    if k < 2 {
        return Vec::new();
    }
    kfold_split(windows, k)
        .map(|s| s.iter().map(FoldEntry::from_split).collect())
        .unwrap_or_default()
}

fn dropped(total: usize, count: usize, window: usize, stride: usize) -> usize {
    total - ((count - 1) * stride + window)
}

pub fn prepare(a: PrepareArgs) -> Outcome {
    let mut cfg = load_config(a.config.as_deref())?;
    let top = a.top.unwrap_or(cfg.data.top);
    let dir = a.root.join(format!("house_{}", a.house));
    let house = load_house(&dir)?;
    let source = match &a.extra {
        Some(e) => AggregateSource::Sum {
            extra: Some(e.clone()),
        },
        None => a.dataset.default_source(),
    };
    let prepared = house.prepare(a.dataset, top, &source)?;
    let series = &prepared.series;
    let scale = MinMaxScale::fit(&series.mixture)?;
    let window = a.window.or(cfg.data.window_len).unwrap_or(match a.dataset {
        DatasetKind::Redd => 86_400,
        DatasetKind::UkDale => 14_400,
    });
    let stride = cfg.data.window_stride.unwrap_or(window);
    let windows = window_split(series, scale, window, stride)?;

    let manifest = Manifest {
        dataset: a.dataset.to_string(),
        houses: vec![a.house],
        sample_period: series.period,
        window_len: window,
        window_count: windows.len(),
        dropped_samples: dropped(series.len(), windows.len(), window, stride),
        scale,
        aggregate: prepared.aggregate.clone(),
        appliances: series.names.clone(),
        channels: prepared.channels.clone(),
        folds: folds_for(windows.len(), cfg.train.k_folds),
    };
    let cache = WindowCache {
        names: series.names.clone(),
        scale,
        period: series.period,
        windows,
    };
    dataset::save(&a.out, &manifest, &cache)?;
    cfg.data.top = top;
    cfg.data.window_len = Some(window);
    cfg.model.appliances = series.names.len();
    echo_config(&a.out, &cfg)?;

    println!("selected appliances: {}", series.names.join(", "));
    println!("scale: min {} W, max {} W", scale.min, scale.max);
    println!(
        "{} windows of {window} samples at {} s, written to {}",
        cache.windows.len(),
        series.period,
        a.out.display()
    );
    Ok(())
}

pub fn synth(a: SynthArgs) -> Outcome {
    let specs = match &a.spec {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            toml::from_str::<SynthSpecFile>(&text)
                .map_err(|e| Failure::data(format!("{}: {e}", p.display())))?
                .appliance
        }
        None => default_specs(),
    };
    if a.windows == 0 || a.len == 0 {
        return Err(Failure::usage("--T and --windows must be positive"));
    }
    let series = gen_synthetic(&specs, a.len * a.windows, a.period, a.noise, a.seed)?;
    let scale = MinMaxScale::fit(&series.mixture)?;
    let windows = window_split(&series, scale, a.len, a.len)?;
    let channels = series
        .names
        .iter()
        .zip(&series.targets)
        .enumerate()
        .map(|(i, (name, t))| ChannelEntry {
            channel: i as u32 + 1,
            name: name.clone(),
            energy_kwh: t.iter().sum::<f64>() * a.period / 3.6e6,
            selected: true,
            role: "target".into(),
        })
        .collect();
    let manifest = Manifest {
        dataset: "synthetic".into(),
        houses: Vec::new(),
        sample_period: a.period,
        window_len: a.len,
        window_count: windows.len(),
        dropped_samples: 0,
        scale,
        aggregate: "sum".into(),
        appliances: series.names.clone(),
        channels,
        folds: folds_for(windows.len(), a.folds),
    };
    let cache = WindowCache {
        names: series.names.clone(),
        scale,
        period: a.period,
        windows,
    };
    dataset::save(&a.out, &manifest, &cache)?;

    let mut cfg = RunConfig::default();
    cfg.model.appliances = specs.len();
    cfg.train.seed = a.seed;
    cfg.train.k_folds = a.folds;
    cfg.data.window_len = Some(a.len);
    echo_config(&a.out, &cfg)?;
    let spec_echo = toml::to_string_pretty(&SynthSpecFile { appliance: specs })
        .map_err(|e| Failure::data(e.to_string()))?;
    let header = format!(
        "# T = {}, windows = {}, noise = {}, seed = {}, period = {}\n",
        a.len, a.windows, a.noise, a.seed, a.period
    );
    fs::write(a.out.join("spec.toml"), header + &spec_echo)?;

    println!("appliances: {}", series.names.join(", "));
    println!("scale: min {} W, max {} W", scale.min, scale.max);
    println!("{} windows of {} samples written to {}", cache.windows.len(), a.len, a.out.display());
    Ok(())
}

/// Applies the variant flags, moving a causal model off global
/// normalization.
fn apply_variant(cfg: &mut ModelConfig, variant: Variant) {
    let norm = cfg.norm;
    cfg.set_variant(variant);
    if variant == Variant::Base || norm != NormKind::Global {
        cfg.norm = norm;
    }
}

fn pick(windows: &[SignalWindow], idx: &[usize]) -> Vec<SignalWindow> {
    idx.iter().map(|&i| windows[i].clone()).collect()
}

pub fn train(a: TrainArgs) -> Outcome {
    let ds = dataset::load(&a.data)?;
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    if let Some(s) = a.seed {
        cfg.train.seed = s;
    }
    if let Some(l) = a.loss {
        cfg.train.loss = l;
    }
    if a.max_folds.is_some() {
        cfg.train.max_folds = a.max_folds;
    }
    cfg.model.appliances = ds.cache.appliances();
    if let Some(v) = a.variant {
        apply_variant(&mut cfg.model, v);
    }

    let resume = match &a.resume {
        Some(p) => {
            let ckpt = Checkpoint::load(p).map_err(|e| Failure::from(e).context(format!("{}", p.display())))?;
            if ckpt.model.config().appliances != ds.cache.appliances() {
                return Err(Failure::data(format!(
                    "checkpoint separates {} appliances, dataset has {}",
                    ckpt.model.config().appliances,
                    ds.cache.appliances()
                )));
            }
            if *ckpt.model.config() != cfg.model {
                warn!("resuming with the checkpoint's model configuration");
                cfg.model = ckpt.model.config().clone();
            }
            Some(ckpt)
        }
        None => None,
    };
    cfg.model.validate()?;
    cfg.train.validate()?;
    let frame = cfg.model.filter_len;
    if ds.cache.window_len() < frame {
        return Err(Failure::data(format!(
            "windows of {} samples are shorter than one frame of {frame}",
            ds.cache.window_len()
        )));
    }
    echo_config(&a.out, &cfg)?;

    let n = ds.cache.windows.len();
    let k = cfg.train.k_folds.min(n);
    if k < cfg.train.k_folds {
        warn!("only {n} windows; using {k} folds");
    }
    let splits: Vec<FoldSplit> = if k >= 2 {
        kfold_split(n, k)?
    } else {
        vec![FoldSplit {
            fold: 0,
            train: (0..n).collect(),
            validation: Vec::new(),
        }]
    };
    let take = cfg.train.max_folds.unwrap_or(splits.len()).min(splits.len());
    let log_path = a.out.join("train_log.txt");
    let mut log_file = OpenOptions::new().create(true).append(true).open(&log_path)?;
    let mut summary = String::from("fold,best_epoch,best_val_wmse,epochs_run,diverged,collapse\n");
    let mut diverged_any = Vec::new();
    let (start_fold, done_epochs) = resume
        .as_ref()
        .map_or((0, 0), |c| (c.meta.fold as usize, c.meta.epoch as usize));

    for split in splits.into_iter().take(take) {
        if split.fold < start_fold {
            continue;
        }
        let (model, offset) = match &resume {
            Some(c) if split.fold == start_fold => (c.model.clone(), done_epochs),
            _ => (
                ConvNilm::new(cfg.model.clone(), cfg.train.seed.wrapping_add(split.fold as u64))?,
                0,
            ),
        };
        let mut fold_cfg: TrainConfig = cfg.train.clone();
        fold_cfg.epochs = cfg.train.epochs.saturating_sub(offset);
        let meta = |epoch: usize| CheckpointMeta {
            scale: Some(ds.cache.scale),
            sample_period: ds.cache.period,
            appliances: ds.cache.names.clone(),
            fold: split.fold as u32,
            epoch: epoch as u32,
        };
        let mut io_error: Option<Failure> = None;
        let last_path = a.out.join("last.ckpt");
        let mut observer = |e: &EpochLog, m: &ConvNilm| {
            if io_error.is_some() {
                return;
            }
            let epoch = e.epoch + offset;
            let line = EpochLog { epoch, ..e.clone() };
            if a.log_every > 0 && epoch % a.log_every == 0 {
                println!("{line}");
            }
            let saved = writeln!(log_file, "{line}")
                .map_err(Failure::from)
                .and_then(|()| Checkpoint::new(m.clone(), meta(epoch)).save(&last_path).map_err(Failure::from));
            if let Err(f) = saved {
                io_error = Some(f);
            }
        };
        let result = train_fold(
            model,
            &pick(&ds.cache.windows, &split.train),
            &pick(&ds.cache.windows, &split.validation),
            &fold_cfg,
            split.fold,
            &mut observer,
        )?;
        if let Some(f) = io_error {
            return Err(f);
        }
        let best_epoch = result.best_epoch + offset;
        Checkpoint::new(result.model.clone(), meta(best_epoch))
            .save(a.out.join(format!("fold_{}.ckpt", split.fold)))?;
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{}",
            split.fold,
            best_epoch,
            result.best_val_wmse,
            result.log.len() + offset,
            result.diverged.as_deref().unwrap_or(""),
            result.collapse_alarm
        );
        println!(
            "fold {}: best validation WMSE {:.6e} at epoch {best_epoch}",
            split.fold, result.best_val_wmse
        );
        if result.collapse_alarm {
            println!("fold {}: warning: predictions collapsed towards zero", split.fold);
        }
        if let Some(msg) = result.diverged {
            diverged_any.push(format!("fold {}: {msg}", split.fold));
        }
    }
    fs::write(a.out.join("summary.csv"), summary)?;
    if !diverged_any.is_empty() {
        return Err(Failure::numeric(format!(
            "training diverged ({}); best checkpoints were kept",
            diverged_any.join("; ")
        )));
    }
    Ok(())
}

fn load_checkpoint(path: &Path) -> Outcome<Checkpoint> {
    Checkpoint::load(path).map_err(|e| Failure::from(e).context(format!("loading {}", path.display())))
}

fn model_echo(model: &ConvNilm) -> RunConfig {
    RunConfig {
        model: model.config().clone(),
        ..RunConfig::default()
    }
}

fn select_windows<'a>(ds: &'a Dataset, a: &EvalArgs, ckpt: &Checkpoint) -> Outcome<Vec<&'a SignalWindow>> {
    let all = || ds.cache.windows.iter().collect::<Vec<_>>();
    if a.all {
        return Ok(all());
    }
    let fold = a.fold.unwrap_or(ckpt.meta.fold as usize);
    match ds.manifest.folds.iter().find(|f| f.fold == fold) {
        Some(f) => f
            .validation
            .iter()
            .map(|&i| {
                ds.cache
                    .windows
                    .get(i)
                    .ok_or_else(|| Failure::data(format!("fold {fold} names missing window {i}")))
            })
            .collect(),
        None if ds.manifest.folds.is_empty() => {
            warn!("dataset has no folds; evaluating every window");
            Ok(all())
        }
        None => Err(Failure::usage(format!("dataset has no fold {fold}"))),
    }
}

pub fn eval(a: EvalArgs) -> Outcome {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let ds = dataset::load(&a.data)?;
    let model = &ckpt.model;
    let c = model.config().appliances;
    if c != ds.cache.appliances() {
        return Err(Failure::data(format!(
            "checkpoint separates {c} appliances but the dataset has {}",
            ds.cache.appliances()
        )));
    }
    let windows = select_windows(&ds, &a, &ckpt)?;
    if windows.is_empty() {
        return Err(Failure::data("no windows to evaluate"));
    }
    let preds: Vec<Tensor> = windows
        .par_iter()
        .map(|w| model.predict(&w.mixture))
        .collect::<Result<_, _>>()?;

    let scale = ds.cache.scale;
    let (mut pred_w, mut target_w) = (vec![Vec::new(); c], vec![Vec::new(); c]);
    let (mut pred_s, mut target_s) = (vec![Vec::new(); c], vec![Vec::new(); c]);
    let mut times = Vec::new();
    for (w, p) in windows.iter().zip(&preds) {
        let t = w.len();
        times.extend((0..t).map(|i| w.start as f64 + i as f64 * ds.cache.period));
        for i in 0..c {
            let row = &p.data()[i * t..(i + 1) * t];
            pred_s[i].extend_from_slice(row);
            target_s[i].extend_from_slice(&w.targets[i]);
            pred_w[i].extend(scale.invert(row));
            target_w[i].extend(scale.invert(&w.targets[i]));
        }
    }
    let report = if a.scaled {
        MetricsReport::compute(&ds.cache.names, &pred_s, &target_s, MetricSpace::Scaled, windows.len())?
    } else {
        MetricsReport::compute(&ds.cache.names, &pred_w, &target_w, MetricSpace::Watts, windows.len())?
    };

    fs::create_dir_all(a.out.join("traces"))?;
    fs::write(a.out.join("metrics.csv"), report.to_csv())?;
    fs::write(a.out.join("report.txt"), format!("{report}\n"))?;
    for (i, name) in ds.cache.names.iter().enumerate() {
        let mut csv = String::from("time,target_w,pred_w\n");
        for k in 0..times.len() {
            let _ = writeln!(csv, "{},{},{}", times[k], target_w[i][k], pred_w[i][k]);
        }
        fs::write(a.out.join("traces").join(format!("{name}.csv")), csv)?;
    }
    echo_config(&a.out, &model_echo(model))?;
    println!("{report}");
    Ok(())
}

pub fn disaggregate(a: DisaggregateArgs) -> Outcome {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let model = &ckpt.model;
    if a.stream && !model.config().supports_streaming() {
        return Err(Failure::usage(
            "--stream needs a causal checkpoint with frame-local normalization; this one is not",
        ));
    }
    let scale = ckpt
        .meta
        .scale
        .ok_or_else(|| Failure::data("checkpoint carries no scale parameters"))?;
    let series = parse_channel_file(&a.input)?;
    let period = ckpt.meta.sample_period;
    let grid = resample_linear(&series, period)?;
    let scaled = scale.apply(&grid);
    let pred = if a.stream {
        let chunk = a.chunk.unwrap_or(model.receptive_field().samples);
        stream_predict(model, &scaled, chunk)?
    } else {
        model.predict(&scaled)?
    };

    fs::create_dir_all(&a.out)?;
    let t = grid.len();
    let start = series.first_ts();
    for i in 0..model.config().appliances {
        let name = ckpt
            .meta
            .appliances
            .get(i)
            .cloned()
            .unwrap_or_else(|| format!("appliance_{i}"));
        let watts = scale.invert(&pred.data()[i * t..(i + 1) * t]);
        let samples = watts
            .into_iter()
            .enumerate()
            .map(|(k, w)| (start + (k as f64 * period).round() as i64, w))
            .collect();
        write_channel_file(a.out.join(format!("{name}.dat")), &ChannelSeries::new(name.clone(), samples))?;
    }
    echo_config(&a.out, &model_echo(model))?;
    println!(
        "wrote {} series of {t} samples to {}{}",
        model.config().appliances,
        a.out.display(),
        if a.stream { " (streamed)" } else { "" }
    );
    Ok(())
}

pub fn inspect(a: InspectArgs) -> Outcome {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let cfg = ckpt.model.config();
    let total = param_count(cfg);
    debug_assert_eq!(total, ckpt.model.params().total());
    let rf = ckpt.model.receptive_field();
    let period = ckpt.meta.sample_period;
    println!("variant: {}", cfg.variant());
    println!("[model]\n{}", toml::to_string_pretty(cfg).map_err(|e| Failure::data(e.to_string()))?);
    println!("parameters:");
    for (group, n) in param_breakdown(cfg) {
        println!("  {group:<40} {n:>8}");
    }
    println!("  {:<40} {total:>8}", "total");
    println!(
        "receptive field: {} frames, {} samples ({} s at {period} s per sample)",
        rf.frames,
        rf.samples,
        rf.seconds(period)
    );
    println!(
        "closed form 2^(XR)(P-1): {} frames, {} samples; 2^(XR)(L-1): {} samples",
        rf.formula_frames, rf.formula_samples, rf.formula_encoder_reading
    );
    if !ckpt.meta.appliances.is_empty() {
        println!("appliances: {}", ckpt.meta.appliances.join(", "));
    }
    if let Some(s) = ckpt.meta.scale {
        println!("scale: min {} W, max {} W", s.min, s.max);
    }
    println!("fold {}, epoch {}", ckpt.meta.fold, ckpt.meta.epoch);
    Ok(())
}
