use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use log::{info, warn};

use regrow_core::classify::load_model;
use regrow_core::classify::save_model;
use regrow_core::imgdata::{
    generate_synthetic, load_dataset, load_image, load_mask, load_pmap, save_mask, save_pmap,
    save_sample, split_dataset, stems,
};
use regrow_core::metrics::{evaluate, summarize, tune_thresholds, MetricReport};
use regrow_core::train::{fit, TrainConfig};
use regrow_core::{
    dense_threshold_segment, grow_region, Classifier, ClassifierConfig, ClassifierModel,
    FeatureSpec, GrowConfig, Mask, Metric, ModelClassifier, OracleClassifier, ProbMap,
    ProbMapClassifier, Sample, SynthParams,
};

use crate::spec::{parse_grid, ClassifierSpec};
use crate::{BaselineArgs, EngineArgs, EvalArgs, GrowArgs, SplitArgs, SynthArgs, TrainArgs, TuneArgs};

pub fn synth(a: &SynthArgs) -> Result<()> {
    ensure!(a.n >= 1, "--n must be at least 1");
    let base = SynthParams {
        height: a.height,
        width: a.width,
        n_trees: a.trees,
        branch_prob: a.branch_prob,
        width_range: (a.min_width, a.max_width),
        noise_sigma: a.noise,
        rng_seed: a.seed,
    };
    base.validate()?;
    for i in 0..a.n {
        let params = SynthParams {
            rng_seed: image_seed(a.seed, i),
            ..base.clone()
        };
        let (image, gt, roi) = generate_synthetic(&params)?;
        let sample = Sample::new(format!("{i:03}"), image, gt, roi)?;
        save_sample(&a.out, &sample)
            .with_context(|| format!("writing sample {} to {}", sample.id, a.out.display()))?;
        println!(
            "{}\timages/{}.png\tmasks/{}.pgm\troi/{}.pgm",
            sample.id, sample.id, sample.id, sample.id
        );
    }
    info!("wrote {} samples to {}", a.n, a.out.display());
    Ok(())
}

/// Per-image generator seed; images stay independent of how many are drawn.
fn image_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i as u64)
}

fn split(data: &Path, args: &SplitArgs) -> Result<regrow_core::DatasetSplit> {
    let samples = load_dataset(data).with_context(|| format!("loading dataset {}", data.display()))?;
    let exclude: Vec<String> = args
        .exclude
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    Ok(split_dataset(samples, args.n_val, &exclude, args.split_seed)?)
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let split = split(&a.data, &a.split)?;
    info!(
        "{} training, {} validation, {} excluded images",
        split.train.len(),
        split.validation.len(),
        split.excluded_ids.len()
    );
    let config = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.learning_rate,
        boundary_weight: a.boundary_weight,
        samples_per_count: a.samples_per_count,
        val_samples_per_count: a.val_samples_per_count,
        pretrain: !a.no_pretrain,
        pretrain_samples: a.pretrain_samples,
        augment: !a.no_augment,
        rng_seed: a.seed,
    };
    let channels = split.train.first().map_or(3, |s| s.image.channels());
    let model = ClassifierModel::zeros(
        ClassifierConfig {
            tile_size: a.tile_size,
            out_size: a.out_size,
            n_classes: 2,
        },
        FeatureSpec {
            tile_size: a.tile_size,
            channels,
            pool_grid: a.pool_grid,
            center_window: a.center_window,
        },
    )?;
    let start = Instant::now();
    let (model, history) = fit(&model, &split, &config)?;
    for e in &history.epochs {
        info!("epoch {:>3}  train {:.5}  val {:.5}", e.epoch, e.train_loss, e.val_loss);
    }
    let last = history.epochs.last().context("no epochs ran")?;
    ensure!(last.train_loss.is_finite(), "final training loss is not finite");
    save_model(&model, &a.model_out)?;
    let history_path = a.history.clone().unwrap_or_else(|| {
        let mut p = a.model_out.clone().into_os_string();
        p.push(".history.csv");
        p.into()
    });
    fs::write(&history_path, history.to_csv())
        .with_context(|| format!("writing {}", history_path.display()))?;
    info!(
        "trained in {:.1}s; model {}, history {}",
        start.elapsed().as_secs_f64(),
        a.model_out.display(),
        history_path.display()
    );
    Ok(())
}

fn grow_config(e: &EngineArgs, threshold: f64) -> GrowConfig {
    GrowConfig {
        threshold,
        n_seeds: e.seeds,
        batch_size: e.batch_size,
        rng_seed: e.seed,
        max_iterations: e.max_iterations,
    }
}

fn lookup_config(e: &EngineArgs) -> ClassifierConfig {
    ClassifierConfig {
        tile_size: e.tile_size,
        out_size: e.out_size,
        n_classes: 2,
    }
}

pub fn grow(a: &GrowArgs) -> Result<()> {
    let image = load_image(&a.image).with_context(|| format!("loading {}", a.image.display()))?;
    let roi = load_mask(&a.roi).with_context(|| format!("loading {}", a.roi.display()))?;
    let config = grow_config(&a.engine, a.engine.threshold);
    let classifier: Box<dyn Classifier> = match &a.classifier {
        ClassifierSpec::Oracle(Some(path)) => Box::new(OracleClassifier::new(
            load_mask(path).with_context(|| format!("loading {}", path.display()))?,
            lookup_config(&a.engine),
        )?),
        ClassifierSpec::Oracle(None) => bail!("grow needs the truth mask: --classifier oracle:<mask>"),
        ClassifierSpec::Pmap(path) => Box::new(ProbMapClassifier::new(
            load_pmap(path).with_context(|| format!("loading {}", path.display()))?,
            lookup_config(&a.engine),
        )?),
        ClassifierSpec::Model(path) => Box::new(ModelClassifier::new(
            load_model(path).with_context(|| format!("loading {}", path.display()))?,
        )?),
    };
    let start = Instant::now();
    let result = grow_region(&image, &roi, classifier.as_ref(), &config)?;
    info!(
        "{} iterations, {} evaluations, {} pixels in mask, {:.2}s",
        result.iterations,
        result.pixels_evaluated,
        result.mask.count(),
        start.elapsed().as_secs_f64()
    );
    save_mask(&result.mask, &a.out)?;
    if let Some(dir) = &a.snapshots {
        fs::create_dir_all(dir)?;
        for k in 1..=result.iterations {
            save_mask(&result.mask_after(k), dir.join(format!("iter_{k:04}.pgm")))?;
        }
    }
    if let Some(path) = &a.votes {
        save_pmap(&result.votes.average_map(), path)?;
    }
    Ok(())
}

pub fn baseline(a: &BaselineArgs) -> Result<()> {
    let map = load_pmap(&a.pmap).with_context(|| format!("loading {}", a.pmap.display()))?;
    let roi = load_mask(&a.roi).with_context(|| format!("loading {}", a.roi.display()))?;
    let mask = dense_threshold_segment(&map, &roi, a.threshold)?;
    save_mask(&mask, &a.out)?;
    info!("{} pixels above {}", mask.count(), a.threshold);
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let pred = stems(&a.pred).with_context(|| format!("listing {}", a.pred.display()))?;
    let gt = stems(&a.gt).with_context(|| format!("listing {}", a.gt.display()))?;
    let roi = match &a.roi {
        Some(dir) => Some(stems(dir).with_context(|| format!("listing {}", dir.display()))?),
        None => None,
    };
    check_paired(&pred, &gt, "prediction", "ground truth")?;
    if let Some(roi) = &roi {
        check_paired(&pred, roi, "prediction", "RoI")?;
    }

    let modes: &[bool] = if a.both {
        &[false, true]
    } else if a.keep_largest {
        &[true]
    } else {
        &[false]
    };
    let mut rows = vec![MetricReport::CSV_HEADER.to_string()];
    let mut per_mode: Vec<Vec<MetricReport>> = vec![Vec::new(); modes.len()];
    for (stem, pred_path) in &pred {
        let p = load_mask(pred_path).with_context(|| format!("loading {}", pred_path.display()))?;
        let g = load_mask(&gt[stem]).with_context(|| format!("loading {}", gt[stem].display()))?;
        let r = match &roi {
            Some(roi) => load_mask(&roi[stem]).with_context(|| format!("loading {}", roi[stem].display()))?,
            None => Mask::ones(g.height(), g.width()),
        };
        for (i, &largest) in modes.iter().enumerate() {
            let report = evaluate(&p, &g, &r, largest).with_context(|| format!("scoring {stem}"))?;
            rows.push(report.csv_row(stem, &a.method, postproc(largest)));
            per_mode[i].push(report);
        }
    }
    for (i, &largest) in modes.iter().enumerate() {
        let (mean, std) = summarize(&per_mode[i]);
        rows.push(mean.csv_row("mean", &a.method, postproc(largest)));
        rows.push(std.csv_row("std", &a.method, postproc(largest)));
        let fmt = |m: Option<f64>, s: Option<f64>| match (m, s) {
            (Some(m), Some(s)) => format!("{m:.4} ± {s:.4}"),
            _ => "undefined".to_string(),
        };
        info!(
            "{} {}: dice {}, jaccard {}, mssd {}",
            a.method,
            postproc(largest),
            fmt(Some(mean.dice), Some(std.dice)),
            fmt(Some(mean.jaccard), Some(std.jaccard)),
            fmt(mean.mssd, std.mssd)
        );
    }
    rows.push(String::new());
    fs::write(&a.out, rows.join("\n")).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn postproc(largest: bool) -> &'static str {
    if largest {
        "largest"
    } else {
        "all"
    }
}

fn check_paired<A, B>(a: &BTreeMap<String, A>, b: &BTreeMap<String, B>, an: &str, bn: &str) -> Result<()> {
    if let Some(stem) = a.keys().find(|k| !b.contains_key(*k)) {
        bail!("unpaired file: {an} {stem} has no {bn} counterpart");
    }
    if let Some(stem) = b.keys().find(|k| !a.contains_key(*k)) {
        bail!("unpaired file: {bn} {stem} has no {an} counterpart");
    }
    Ok(())
}

pub fn tune(a: &TuneArgs) -> Result<()> {
    let validation = if a.use_split {
        split(&a.data, &a.split)?.validation
    } else {
        load_dataset(&a.data).with_context(|| format!("loading dataset {}", a.data.display()))?
    };
    ensure!(!validation.is_empty(), "no validation images");
    let metrics = a
        .metric
        .split(',')
        .map(|m| m.parse::<Metric>())
        .collect::<regrow_core::Result<Vec<_>>>()?;
    let grid = parse_grid(&a.grid)?;
    let engine = a.engine.clone();
    grow_config(&engine, 0.5).validate()?;

    // Probability maps for pmap specs, keyed by sample id.
    let maps: HashMap<String, ProbMap> = match &a.classifier {
        ClassifierSpec::Pmap(dir) => validation
            .iter()
            .map(|s| {
                let path = dir.join(format!("{}.pmap", s.id));
                let map = load_pmap(&path).with_context(|| format!("loading {}", path.display()))?;
                Ok((s.id.clone(), map))
            })
            .collect::<Result<_>>()?,
        _ => HashMap::new(),
    };
    let model = match &a.classifier {
        ClassifierSpec::Model(path) => Some(ModelClassifier::new(
            load_model(path).with_context(|| format!("loading {}", path.display()))?,
        )?),
        _ => None,
    };
    let config = lookup_config(&engine);

    let start = Instant::now();
    let results = match a.method.as_str() {
        "grow" => {
            let segment = |s: &Sample, t: f64| -> regrow_core::Result<Mask> {
                let cfg = grow_config(&engine, t);
                let result = match &a.classifier {
                    ClassifierSpec::Oracle(_) => {
                        grow_region(&s.image, &s.roi, &OracleClassifier::new(s.gt.clone(), config)?, &cfg)?
                    }
                    ClassifierSpec::Pmap(_) => grow_region(
                        &s.image,
                        &s.roi,
                        &ProbMapClassifier::new(maps[&s.id].clone(), config)?,
                        &cfg,
                    )?,
                    ClassifierSpec::Model(_) => {
                        grow_region(&s.image, &s.roi, model.as_ref().expect("model loaded"), &cfg)?
                    }
                };
                Ok(result.mask)
            };
            tune_thresholds(segment, &validation, &metrics, &grid, a.keep_largest)?
        }
        "baseline" => {
            ensure!(!maps.is_empty(), "the baseline method needs --classifier pmap:<dir>");
            let segment = |s: &Sample, t: f64| dense_threshold_segment(&maps[&s.id], &s.roi, t);
            tune_thresholds(segment, &validation, &metrics, &grid, a.keep_largest)?
        }
        other => bail!("unknown method {other:?}; use grow or baseline"),
    };
    info!(
        "tuned {} thresholds on {} images in {:.1}s",
        grid.len(),
        validation.len(),
        start.elapsed().as_secs_f64()
    );

    let mut csv = String::from("metric,threshold,score\n");
    for r in &results {
        println!("{}\t{}\t{}", r.metric, r.threshold, r.score);
        csv.push_str(&format!("{},{},{}\n", r.metric, r.threshold, r.score));
    }
    if let Some(out) = &a.out {
        fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
    } else {
        warn!("no --out given; report printed only");
    }
    Ok(())
}
