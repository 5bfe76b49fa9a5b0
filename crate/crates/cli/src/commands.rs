use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use mufide::bench::{run_experiment, CaseId, ExperimentSpec, RunStatus};
use mufide::dataset::MfDataset;
use mufide::hpo::{write_trials, CvPlan, HpoSettings, Trial};
use mufide::mfnn::{FitOptions, LfStageCache};
use mufide::model::{tune, ModelConfig, ModelKind, Surrogate, TuneSettings};
use mufide::numerics::{derive_seed, stream_of, Matrix};
use serde::Serialize;

use crate::io::{fmt_f64, read_dataset, read_table, write_atomic, write_csv, write_dataset, write_text};
use crate::{BenchArgs, DataArgs, ExitKind, HpoArgs, PredictArgs, SearchArgs, TrainArgs};

fn usage(msg: String) -> anyhow::Error {
    anyhow!(msg).context(ExitKind::Usage)
}

fn parse_cv(text: &str, seed: u64) -> Result<CvPlan> {
    let t = text.trim().to_ascii_lowercase();
    if t == "loocv" {
        return Ok(CvPlan::loocv(seed));
    }
    let k = t
        .strip_prefix("kfold:")
        .and_then(|k| k.parse::<usize>().ok())
        .filter(|&k| k >= 2)
        .ok_or_else(|| usage(format!("--cv must be `loocv` or `kfold:K` with K ≥ 2, got `{text}`")))?;
    Ok(CvPlan::kfold(k, seed))
}

fn parse_models(names: &[String]) -> Result<Vec<ModelKind>> {
    names
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse().map_err(|e: mufide::Error| usage(e.to_string())))
        .collect()
}

fn tune_settings(search: &SearchArgs) -> Result<TuneSettings> {
    let hpo_seed = derive_seed(search.seed, stream_of("hpo"));
    let cv = search
        .cv
        .as_deref()
        .map(|c| parse_cv(c, derive_seed(hpo_seed, stream_of("folds"))))
        .transpose()?;
    Ok(TuneSettings {
        hpo: HpoSettings {
            budget: search.budget as usize,
            seed: hpo_seed,
            ..HpoSettings::default()
        },
        cv,
        trial_max_epochs: search.trial_epochs,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

fn write_trials_file(path: &Path, trials: &[Trial]) -> Result<()> {
    write_atomic(path, |w| Ok(write_trials(w, trials)?))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let case: CaseId = args.case.parse().map_err(|e: mufide::Error| usage(e.to_string()))?;
    let models = match &args.models {
        Some(m) => parse_models(m)?,
        None if case == CaseId::HighDim20 => vec![ModelKind::ThreeStep, ModelKind::SingleFidelity],
        None => vec![
            ModelKind::Intermediate,
            ModelKind::Gpmimic,
            ModelKind::TwoStep,
            ModelKind::ThreeStep,
            ModelKind::CoKriging,
        ],
    };
    let mut spec = ExperimentSpec::new(case, models, args.search.seed);
    spec.tune = tune_settings(&args.search)?;
    spec.epochs = args.search.epochs;
    if args.full_scale {
        spec.plan.n_hf = 5000;
        spec.plan.n_lf = 30000;
        spec.plan.n_test = 1_000_000;
    }
    for (field, value) in [
        (&mut spec.plan.n_hf, args.n_hf),
        (&mut spec.plan.n_lf, args.n_lf),
        (&mut spec.plan.n_test, args.n_test),
    ] {
        if let Some(v) = value {
            *field = v;
        }
    }
    if spec.plan.n_hf < 2 || spec.plan.n_lf < 1 || spec.plan.n_test < 2 {
        bail!(usage(
            "need at least 2 HF samples, 1 LF sample and 2 test points".into()
        ));
    }

    let out = run_experiment(&spec)?;
    let dir = &args.out;
    write_json(&dir.join("report.json"), &out.report)?;

    let header: Vec<String> = [
        "model",
        "status",
        "validation_mse",
        "test_mse",
        "r2",
        "n_test",
        "trials",
        "elapsed_s",
        "error",
    ]
    .map(String::from)
    .into();
    let rows = out.report.models.iter().map(|m| {
        vec![
            m.model.name().to_string(),
            format!("{:?}", m.status).to_lowercase(),
            opt(m.validation_mse),
            opt(m.test.as_ref().map(|t| t.mse)),
            opt(m.test.as_ref().and_then(|t| t.r2)),
            m.test.as_ref().map(|t| t.n_test.to_string()).unwrap_or_default(),
            m.trials.to_string(),
            format!("{:.3}", m.elapsed),
            m.error.clone().unwrap_or_default(),
        ]
    });
    write_csv(&dir.join("metrics.csv"), &header, rows)?;
    write_dataset(&dir.join("train_hf.csv"), out.data.hf_inputs(), out.data.hf_outputs())?;
    write_dataset(&dir.join("train_lf.csv"), out.data.lf_inputs(), out.data.lf_outputs())?;

    for grid in &out.grids {
        let mut header: Vec<String> = (1..=grid.inputs.cols()).map(|j| format!("x{j}")).collect();
        header.push("y_true".into());
        header.push("y_pred".into());
        let rows = grid
            .inputs
            .row_iter()
            .zip(grid.y_true.iter().zip(&grid.y_pred))
            .map(|(x, (t, p))| x.iter().chain([t, p]).map(|v| fmt_f64(*v)).collect());
        write_csv(
            &dir.join(format!("predictions_{}.csv", grid.model.name())),
            &header,
            rows,
        )?;
    }
    for f in &out.fitted {
        if !f.trials.is_empty() {
            write_trials_file(&dir.join(format!("trials_{}.jsonl", f.kind.name())), &f.trials)?;
        }
    }

    for m in &out.report.models {
        match (&m.status, &m.test) {
            (RunStatus::Ok, Some(t)) => println!(
                "{:<16} test MSE {:.3e}  R² {}  ({:.1} s)",
                m.model.name(),
                t.mse,
                t.r2.map(|r| format!("{r:.4}")).unwrap_or_else(|| "n/a".into()),
                m.elapsed
            ),
            _ => println!("{:<16} failed: {}", m.model.name(), m.error.as_deref().unwrap_or("")),
        }
    }
    let failed: Vec<&str> = out
        .report
        .models
        .iter()
        .filter(|m| m.status == RunStatus::Failed)
        .map(|m| m.model.name())
        .collect();
    if !failed.is_empty() {
        bail!(anyhow!("models failed: {}", failed.join(", ")).context(ExitKind::Numerical));
    }
    Ok(())
}

fn load_data(args: &DataArgs) -> Result<MfDataset> {
    let (hx, hy) = read_dataset(&args.hf)?;
    let (lx, ly) = read_dataset(&args.lf)?;
    if hx.cols() != lx.cols() {
        bail!(anyhow!(
            "{} has {} input columns but {} has {}",
            args.hf.display(),
            hx.cols(),
            args.lf.display(),
            lx.cols()
        )
        .context(ExitKind::Data));
    }
    Ok(MfDataset::new(hx, hy, lx, ly)?)
}

fn base_config(kind: ModelKind, search: &SearchArgs) -> ModelConfig {
    let cfg = ModelConfig::default_for(kind, search.seed);
    match search.epochs {
        Some(e) => cfg.with_all_epochs(e),
        None => cfg,
    }
}

#[derive(Serialize)]
struct TrainReport {
    model: ModelKind,
    n_hf: usize,
    n_lf: usize,
    validation_mse: Option<f64>,
    trials: usize,
    /// HF training MSE in raw units.
    train_mse: f64,
    config: ModelConfig,
    stages: Vec<mufide::mfnn::StageLog>,
    elapsed: f64,
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let start = Instant::now();
    let data = load_data(&args.data)?;
    let kind = args
        .model
        .as_deref()
        .map(|m| m.parse::<ModelKind>().map_err(|e| usage(e.to_string())))
        .transpose()?;
    if let (Some(_), Some(k)) = (args.noise_std, kind) {
        if !k.is_gp() {
            bail!(usage(format!("--noise-std applies only to GP models, not {k}")));
        }
    }
    let cache = LfStageCache::new();
    let (mut config, outcome) = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(|e| e.context(ExitKind::Data))?;
            let cfg: ModelConfig = serde_json::from_str(&text)
                .with_context(|| format!("{} is not a model configuration", path.display()))
                .map_err(|e| e.context(ExitKind::Data))?;
            if let Some(k) = kind {
                if k != cfg.kind() {
                    bail!(usage(format!(
                        "--model {k} disagrees with the {} configuration",
                        cfg.kind()
                    )));
                }
            }
            (cfg, None)
        }
        None => {
            let kind = kind.ok_or_else(|| usage("--model is required without --config".into()))?;
            let tuned = tune(
                &base_config(kind, &args.search),
                &data,
                &tune_settings(&args.search)?,
                Some(&cache),
            )?;
            (tuned.config, tuned.outcome)
        }
    };
    if let Some(noise) = args.noise_std {
        if !(noise.is_finite() && noise >= 0.0) {
            bail!(usage(format!(
                "--noise-std must be finite and nonnegative, got {noise}"
            )));
        }
        match &mut config {
            ModelConfig::CoKriging(c) => c.fit.noise_std = noise,
            ModelConfig::Gpr(c) => c.fit.noise_std = noise,
            _ => bail!(usage(format!(
                "--noise-std applies only to GP models, not {}",
                config.kind()
            ))),
        }
    }
    let surrogate = config.fit_with(
        &data,
        &FitOptions {
            scaler: None,
            lf_cache: Some(&cache),
        },
    )?;
    write_text(&args.out, &surrogate.to_json()?)?;

    let pred = surrogate.predict_hf_batch(data.hf_inputs())?;
    let train_mse = pred
        .iter()
        .zip(data.hf_outputs())
        .map(|(p, y)| (p - y).powi(2))
        .sum::<f64>()
        / pred.len() as f64;
    if let Some(o) = &outcome {
        let path = args
            .trials
            .clone()
            .unwrap_or_else(|| sibling(&args.out, ".trials.jsonl"));
        write_trials_file(&path, &o.trials)?;
    }
    let report = TrainReport {
        model: config.kind(),
        n_hf: data.n_hf(),
        n_lf: data.n_lf(),
        validation_mse: outcome.as_ref().and_then(|o| o.best.objective),
        trials: outcome.as_ref().map_or(0, |o| o.trials.len()),
        train_mse,
        stages: match &surrogate {
            Surrogate::Nn(m) => m.training().to_vec(),
            Surrogate::Gp(_) => Vec::new(),
        },
        config,
        elapsed: start.elapsed().as_secs_f64(),
    };
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| sibling(&args.out, ".report.json"));
    write_json(&report_path, &report)?;
    println!(
        "{}: HF training MSE {:.3e}, model written to {}",
        report.model,
        train_mse,
        args.out.display()
    );
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let text = fs::read_to_string(&args.model)
        .with_context(|| format!("reading {}", args.model.display()))
        .map_err(|e| e.context(ExitKind::Data))?;
    let model = Surrogate::from_json(&text)
        .with_context(|| format!("loading {}", args.model.display()))
        .map_err(|e| e.context(ExitKind::Data))?;
    let table = read_table(&args.input)?;
    let d = model.input_dim();
    let width = table.header.len();
    let carries_y = width == d + 1 && table.header[width - 1] == "y";
    if width != d && !carries_y {
        bail!(anyhow!(
            "{} has {width} columns but the model takes {d} inputs",
            args.input.display()
        )
        .context(ExitKind::Data));
    }
    let x = Matrix::from_fn(table.rows.len(), d, |i, j| table.rows[i][j]);
    let pred = if table.rows.is_empty() {
        Vec::new()
    } else {
        model.predict_hf_batch(&x)?
    };
    let mut header = table.header.clone();
    header.push("y_pred".into());
    let rows = table
        .rows
        .iter()
        .zip(&pred)
        .map(|(r, p)| r.iter().chain([p]).map(|v| fmt_f64(*v)).collect());
    write_csv(&args.out, &header, rows)?;
    Ok(())
}

pub fn hpo(args: &HpoArgs) -> Result<()> {
    let kind: ModelKind = args.model.parse().map_err(|e: mufide::Error| usage(e.to_string()))?;
    if kind.is_gp() {
        bail!(usage(format!(
            "{kind} has no searchable hyperparameters; its kernel is fitted by marginal likelihood"
        )));
    }
    let data = load_data(&args.data)?;
    let tuned = tune(
        &base_config(kind, &args.search),
        &data,
        &tune_settings(&args.search)?,
        Some(&LfStageCache::new()),
    )?;
    let outcome = tuned.outcome.ok_or_else(|| anyhow!("no search was run"))?;
    write_trials_file(&args.trials_out, &outcome.trials)?;
    let best_path = args
        .best_out
        .clone()
        .unwrap_or_else(|| sibling(&args.trials_out, ".best.json"));
    write_json(&best_path, &tuned.config)?;
    let ok = outcome.trials.iter().filter(|t| t.is_ok()).count();
    println!(
        "{kind}: {ok}/{} trials succeeded, best validation MSE {:.3e} (trial {})",
        outcome.trials.len(),
        outcome.best.score(),
        outcome.best.index
    );
    Ok(())
}
