use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{load_label_file, PreparedRun, ResolvedRun};
use super::{
    CliError, DataArgs, InputPaths, Manifest, NoiseArgs, PredictArgs, RunConfig, SweepArgs,
    SynthArgs, TrainArgs, NOISE_SEED_OFFSET, SYNTH_SEED_OFFSET,
};
use crate::datamodel::io::{
    load_features, save_dense_labels, save_features, save_labels, save_mask,
};
use crate::datamodel::{generate_synthetic, inject_label_noise, Format, Hyperparams, NoiseSpec};
use crate::eval::{accuracy, write_jsonl};
use crate::solver::{fit_with, Model, Truth};

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::output(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::output(format!("{}: {e}", path.display())))
}

fn output_err(e: crate::error::DataError) -> CliError {
    CliError::output(e.to_string())
}

fn predictions_text(labels: &[usize]) -> String {
    let mut s = String::with_capacity(labels.len() * 3);
    for l in labels {
        s.push_str(&l.to_string());
        s.push('\n');
    }
    s
}

fn run_config_from(
    data: &DataArgs,
    hp: Hyperparams,
    p_noise: f64,
    out_dir: PathBuf,
) -> Result<RunConfig, CliError> {
    let need = |p: &Option<PathBuf>, flag: &str| {
        p.clone()
            .ok_or_else(|| CliError::validation(format!("missing --{flag}")))
    };
    Ok(RunConfig {
        inputs: InputPaths {
            source_features: need(&data.source_features, "source-features")?,
            source_labels: need(&data.source_labels, "source-labels")?,
            target_features: need(&data.target_features, "target-features")?,
            target_labels: data.target_labels.clone(),
            source_clean_labels: data.source_clean_labels.clone(),
        },
        format: data.format,
        class_count: data.class_count,
        keep_classes: data.keep_classes.clone(),
        normalize: data.normalize,
        hyperparams: hp,
        p_noise,
        out_dir,
    })
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let config = match &args.manifest {
        Some(path) => {
            let mut config = Manifest::load(path)?.config;
            config.out_dir = args.out_dir.clone();
            config
        }
        None => {
            let hp = args.hyper.to_hyperparams()?;
            let mut config = run_config_from(&args.data, hp, args.p_noise, args.out_dir.clone())?;
            config.validate()?;
            config.canonicalize_inputs()?;
            config
        }
    };
    config.validate()?;
    let run = config.prepare()?;
    let hp = &config.hyperparams;
    let truth = Truth {
        source: run.source_clean.as_deref(),
        target: run.target_truth.as_deref(),
    };
    let result = fit_with(&run.source, &run.target, hp, &truth, |_| {})?;

    let out = &config.out_dir;
    create_dir(out)?;
    write_file(
        &out.join("predictions.txt"),
        predictions_text(&result.target_predictions).as_bytes(),
    )?;
    let mut metrics = Vec::new();
    write_jsonl(&result.records, &mut metrics).expect("write to Vec");
    write_file(&out.join("metrics.jsonl"), &metrics)?;
    let model = serde_json::to_vec(&result.model).expect("model serializes");
    write_file(&out.join("model.json"), &model)?;

    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        resolved: resolved(
            &config,
            &run,
            result.model.kernel.as_ref().map(|k| k.kernel),
        ),
        config: config.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&out.join("manifest.json"), text.as_bytes())?;

    if args.dump_graph {
        let problem = crate::solver::Problem::new(&run.source, &run.target, hp)?;
        let path = out.join("graph.coo");
        let file = fs::File::create(&path)
            .map_err(|e| CliError::output(format!("{}: {e}", path.display())))?;
        problem
            .graph()
            .write_coo(BufWriter::new(file))
            .map_err(|e| CliError::output(format!("{}: {e}", path.display())))?;
    }
    if let Some(acc) = result.records.last().and_then(|r| r.target_accuracy) {
        println!("target_accuracy {acc:.6}");
    }
    Ok(())
}

fn resolved(
    config: &RunConfig,
    run: &PreparedRun,
    kernel: Option<crate::kernel::ResolvedKernel>,
) -> ResolvedRun {
    ResolvedRun {
        n_source: run.source.len(),
        n_target: run.target.len(),
        dim: run.source.dim(),
        class_count: run.class_count,
        noise_seed: config.noise_seed(),
        kernel_seed: config
            .hyperparams
            .seed
            .wrapping_add(crate::solver::KERNEL_SEED_OFFSET),
        flipped_count: run.flipped_count,
        kernel,
    }
}

pub fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.model)
        .map_err(|e| CliError::input(format!("{}: {e}", args.model.display())))?;
    let model: Model = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: invalid model: {e}", args.model.display())))?;
    let format = match args.format {
        Some(f) => f,
        None => Format::detect(&args.features)?,
    };
    let x = load_features(&args.features, format)?;
    let pred = model.predict(x.features())?;
    write_file(&args.out, predictions_text(&pred.labels).as_bytes())?;
    if let Some(path) = &args.probs_out {
        save_features(&pred.probabilities, path, Format::Csv).map_err(output_err)?;
    }
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = args.spec.to_spec(args.seed.wrapping_add(SYNTH_SEED_OFFSET));
    spec.validate()?;
    let task = generate_synthetic(&spec)?;
    let dir = &args.out_dir;
    create_dir(dir)?;
    let ys = task.source.dense_labels()?;
    for (ext, lext, format) in [
        ("csv", "txt", Format::Csv),
        ("sptf", "sptl", Format::Binary),
    ] {
        let f = |name: &str, e: &str| dir.join(format!("{name}.{e}"));
        save_features(task.source.features(), &f("source_features", ext), format)
            .map_err(output_err)?;
        save_features(task.target.features(), &f("target_features", ext), format)
            .map_err(output_err)?;
        save_dense_labels(&ys, &f("source_labels", lext), format).map_err(output_err)?;
        save_dense_labels(&task.true_target_labels, &f("target_labels", lext), format)
            .map_err(output_err)?;
    }
    let text = serde_json::to_string_pretty(&spec).expect("spec serializes");
    write_file(&dir.join("spec.json"), text.as_bytes())
}

pub fn cmd_noise(args: &NoiseArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.p_noise) {
        return Err(CliError::validation(format!(
            "p_noise must be in [0, 1], got {}",
            args.p_noise
        )));
    }
    let labels = load_label_file(&args.labels_in, args.format)?;
    let format = match args.format {
        Some(f) => f,
        None => Format::detect(&args.labels_in)?,
    };
    // unlabeled entries pass through untouched
    let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_some()).collect();
    let dense: Vec<usize> = idx.iter().map(|&i| labels[i].expect("filtered")).collect();
    let spec = NoiseSpec::new(args.p_noise, args.seed.wrapping_add(NOISE_SEED_OFFSET));
    let (noisy, flipped) = inject_label_noise(&dense, args.class_count, &spec)?;
    let mut out = labels.clone();
    let mut mask = vec![false; labels.len()];
    for (k, &i) in idx.iter().enumerate() {
        out[i] = Some(noisy[k]);
        mask[i] = flipped[k];
    }
    save_labels(&out, &args.labels_out, format).map_err(output_err)?;
    if let Some(p) = &args.mask_out {
        save_mask(&mask, p).map_err(output_err)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    eta: f64,
    r: f64,
    rho: f64,
    p_noise: f64,
    outliers: Option<usize>,
}

fn or_default<T: Copy>(grid: &[T], default: T) -> Vec<T> {
    if grid.is_empty() {
        vec![default]
    } else {
        grid.to_vec()
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let base = args.hyper.to_hyperparams()?;
    if args.seeds.is_empty() {
        return Err(CliError::validation("--seeds is empty"));
    }
    if !args.grid_outliers.is_empty() && !args.synthetic {
        return Err(CliError::validation("--grid-outliers requires --synthetic"));
    }
    let outliers: Vec<Option<usize>> = if args.synthetic {
        or_default(&args.grid_outliers, args.synth.outliers)
            .into_iter()
            .map(Some)
            .collect()
    } else {
        vec![None]
    };
    let mut cells = Vec::new();
    for &eta in &or_default(&args.grid_eta, base.eta) {
        for &r in &or_default(&args.grid_r, base.r) {
            for &rho in &or_default(&args.grid_rho, base.rho) {
                for &p_noise in &or_default(&args.grid_p_noise, args.p_noise) {
                    for &o in &outliers {
                        cells.push(Cell {
                            eta,
                            r,
                            rho,
                            p_noise,
                            outliers: o,
                        });
                    }
                }
            }
        }
    }
    // validate every cell before running any of them
    for c in &cells {
        cell_hyperparams(&base, c, 0)
            .validate()
            .map_err(|e| CliError::validation(e.to_string()))?;
        if !(0.0..=1.0).contains(&c.p_noise) {
            return Err(CliError::validation(format!(
                "p_noise must be in [0, 1], got {}",
                c.p_noise
            )));
        }
    }
    let base_config = if args.synthetic {
        None
    } else {
        let mut cfg = run_config_from(&args.data, base.clone(), args.p_noise, PathBuf::new())?;
        if cfg.inputs.target_labels.is_none() {
            return Err(CliError::validation(
                "sweep over files needs --target-labels",
            ));
        }
        cfg.validate()?;
        cfg.canonicalize_inputs()?;
        Some(cfg)
    };

    let rows: Vec<Result<Vec<f64>, CliError>> = cells
        .par_iter()
        .map(|cell| {
            args.seeds
                .iter()
                .map(|&seed| run_cell(args, &base, base_config.as_ref(), cell, seed))
                .collect()
        })
        .collect();

    let mut table =
        String::from("eta,r,rho,p_noise,outlier_classes,seed_count,mean_accuracy,std_accuracy\n");
    for (cell, row) in cells.iter().zip(rows) {
        let outliers = cell.outliers.map_or("NA".to_string(), |o| o.to_string());
        let stats = match row {
            Ok(accs) => {
                let (mean, std) = mean_std(&accs);
                format!("{},{mean},{std}", accs.len())
            }
            Err(e) => {
                eprintln!(
                    "sweep cell eta={} r={} rho={} p_noise={} failed: {e}",
                    cell.eta, cell.r, cell.rho, cell.p_noise
                );
                "0,NaN,NaN".to_string()
            }
        };
        table.push_str(&format!(
            "{},{},{},{},{outliers},{stats}\n",
            cell.eta, cell.r, cell.rho, cell.p_noise
        ));
    }
    let mut file = BufWriter::new(
        fs::File::create(&args.out)
            .map_err(|e| CliError::output(format!("{}: {e}", args.out.display())))?,
    );
    file.write_all(table.as_bytes())
        .and_then(|_| file.flush())
        .map_err(|e| CliError::output(format!("{}: {e}", args.out.display())))
}

fn cell_hyperparams(base: &Hyperparams, cell: &Cell, seed: u64) -> Hyperparams {
    Hyperparams {
        eta: cell.eta,
        r: cell.r,
        rho: cell.rho,
        seed,
        ..base.clone()
    }
}

fn run_cell(
    args: &SweepArgs,
    base: &Hyperparams,
    config: Option<&RunConfig>,
    cell: &Cell,
    seed: u64,
) -> Result<f64, CliError> {
    let hp = cell_hyperparams(base, cell, seed);
    let run = match config {
        Some(cfg) => {
            let cfg = RunConfig {
                hyperparams: hp.clone(),
                p_noise: cell.p_noise,
                ..cfg.clone()
            };
            cfg.prepare()?
        }
        None => {
            let mut synth = args.synth.clone();
            synth.outliers = cell
                .outliers
                .expect("synthetic cells carry an outlier count");
            let task = generate_synthetic(&synth.to_spec(seed.wrapping_add(SYNTH_SEED_OFFSET)))?;
            let clean = task.source.dense_labels()?;
            let c = task.source.class_count();
            let spec = NoiseSpec::new(cell.p_noise, seed.wrapping_add(NOISE_SEED_OFFSET));
            let (noisy, mask) = inject_label_noise(&clean, c, &spec)?;
            PreparedRun {
                source: task.source.with_dense_labels(&noisy, Some(c))?,
                target: task.target,
                target_truth: Some(task.true_target_labels),
                source_clean: Some(clean),
                class_count: c,
                flipped_count: mask.iter().filter(|&&f| f).count(),
            }
        }
    };
    let truth = Truth {
        source: run.source_clean.as_deref(),
        target: run.target_truth.as_deref(),
    };
    let result = fit_with(&run.source, &run.target, &hp, &truth, |_| {})?;
    let y = run
        .target_truth
        .as_deref()
        .expect("sweeps always carry target truth");
    Ok(accuracy(&result.target_predictions, y).map_err(crate::Error::from)?)
}

/// Mean and sample standard deviation (0 for a single value).
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
