//! Thin command-line front end over the library.
//!
//! ```text
//! sslab train    [--config PATH] [--seed N] [--out DIR] [--override K=V]...
//! sslab sweep    [--config PATH] [--out DIR] [--override K=V]... [--variant SPEC]...
//! sslab analyze  --checkpoint PATH [--config PATH] [--seed N] [--out DIR] [--override K=V]...
//! sslab dynamics [--resolution N] [--out DIR]
//! sslab rank     --scores PATH [--out DIR]
//! ```
//!
//! Exits 0 on success; on failure prints a one-line JSON error object to
//! stderr and exits 1.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use sslab::calibration::{friedman_rank, simplex_dynamics};
use sslab::core_math::softmax_batch;
use sslab::error::{Error, Result};
use sslab::experiment::{
    emit_dynamics_csv, emit_run_reports, emit_sweep_reports, generate_dataset, run_prefix,
    sweep_with_outcomes, train, RunConfig, Variant,
};
use sslab::model::{forward_no_cache, load_checkpoint, save_checkpoint};

struct CliArgs {
    command: String,
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    overrides: Vec<(String, String)>,
    variants: Vec<String>,
    checkpoint: Option<PathBuf>,
    scores: Option<PathBuf>,
    resolution: usize,
}

fn usage() -> String {
    "usage: sslab <train|sweep|analyze|dynamics|rank> \
     [--config PATH] [--seed N] [--out DIR] [--override KEY=VALUE]... \
     [--variant NAME[:K=V;K=V]]... [--checkpoint PATH] [--scores PATH] \
     [--resolution N]"
        .to_string()
}

fn parse_args(args: &[String]) -> Result<CliArgs> {
    let command = args
        .first()
        .ok_or_else(|| Error::InvalidConfig(usage()))?
        .clone();
    let mut parsed = CliArgs {
        command,
        config: None,
        seed: None,
        out: None,
        overrides: Vec::new(),
        variants: Vec::new(),
        checkpoint: None,
        scores: None,
        resolution: 99,
    };
    let mut it = args[1..].iter();
    while let Some(flag) = it.next() {
        let mut value_of = |name: &str| -> Result<String> {
            it.next()
                .cloned()
                .ok_or_else(|| Error::InvalidConfig(format!("{name} needs a value")))
        };
        match flag.as_str() {
            "--config" => parsed.config = Some(PathBuf::from(value_of("--config")?)),
            "--seed" => {
                let v = value_of("--seed")?;
                parsed.seed = Some(v.parse().map_err(|e| {
                    Error::InvalidConfig(format!("--seed '{v}' is not an integer: {e}"))
                })?);
            }
            "--out" => parsed.out = Some(PathBuf::from(value_of("--out")?)),
            "--override" => {
                let v = value_of("--override")?;
                let (key, value) = v.split_once('=').ok_or_else(|| {
                    Error::InvalidConfig(format!("--override '{v}' is not KEY=VALUE"))
                })?;
                parsed
                    .overrides
                    .push((key.trim().to_string(), value.trim().to_string()));
            }
            "--variant" => parsed.variants.push(value_of("--variant")?),
            "--checkpoint" => parsed.checkpoint = Some(PathBuf::from(value_of("--checkpoint")?)),
            "--scores" => parsed.scores = Some(PathBuf::from(value_of("--scores")?)),
            "--resolution" => {
                let v = value_of("--resolution")?;
                parsed.resolution = v.parse().map_err(|e| {
                    Error::InvalidConfig(format!("--resolution '{v}' is not an integer: {e}"))
                })?;
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown flag '{other}'. {}",
                    usage()
                )))
            }
        }
    }
    Ok(parsed)
}

fn load_config(args: &CliArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        None => RunConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            RunConfig::from_text(&text)?
        }
    };
    for (key, value) in &args.overrides {
        config.apply_override(key, value)?;
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(args: &CliArgs, config: &RunConfig) -> PathBuf {
    args.out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.out_dir))
}

fn cmd_train(args: &CliArgs) -> Result<()> {
    let config = load_config(args)?;
    let seed = args.seed.unwrap_or(config.seeds[0]);
    let outcome = train(&config, seed)?;
    let dir = out_dir(args, &config);
    let mut files = emit_run_reports(&outcome.log, &dir)?;
    let prefix = run_prefix(&outcome.log);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let best_path = dir.join(format!("{prefix}-best.ckpt"));
    save_checkpoint(&outcome.best_params, &best_path)?;
    files.push(best_path);
    let final_path = dir.join(format!("{prefix}-final.ckpt"));
    save_checkpoint(&outcome.final_params, &final_path)?;
    files.push(final_path);
    let config_path = dir.join(format!("{prefix}-config.txt"));
    std::fs::write(&config_path, config.to_canonical_text())
        .map_err(|e| Error::io(&config_path, e))?;
    files.push(config_path);

    let best = outcome.log.best.expect("finished run has a best record");
    println!(
        "seed {seed}: best iteration {} error {:.4} ece {:.4}",
        best.iteration, best.test_error, best.ece
    );
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_sweep(args: &CliArgs) -> Result<()> {
    let config = load_config(args)?;
    if args.variants.is_empty() {
        return Err(Error::InvalidConfig(
            "sweep needs at least one --variant NAME[:KEY=VALUE;...]".into(),
        ));
    }
    let variants: Vec<Variant> = args
        .variants
        .iter()
        .map(|s| Variant::parse(s))
        .collect::<Result<_>>()?;
    let seeds = match args.seed {
        Some(seed) => vec![seed],
        None => config.seeds.clone(),
    };
    let (report, outcomes) = sweep_with_outcomes(&config, &variants, &seeds)?;
    let dir = out_dir(args, &config);
    let mut files = emit_sweep_reports(&report, &dir)?;
    for runs in &outcomes {
        for outcome in runs {
            files.extend(emit_run_reports(&outcome.log, &dir)?);
        }
    }
    println!(
        "{:<24} {:>9} {:>9} {:>9} {:>9} {:>9} {:>6}",
        "variant", "error", "err_sd", "ece", "ece_sd", "agree", "rank"
    );
    for v in &report.variants {
        println!(
            "{:<24} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9} {:>6.2}",
            v.name,
            v.mean_error,
            v.std_error,
            v.mean_ece,
            v.std_ece,
            v.mean_agreement
                .map(|a| format!("{a:.3}"))
                .unwrap_or_else(|| "-".into()),
            v.friedman_rank,
        );
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_analyze(args: &CliArgs) -> Result<()> {
    let checkpoint_path = args
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("analyze needs --checkpoint PATH".into()))?;
    let config = load_config(args)?;
    let seed = args.seed.unwrap_or(config.seeds[0]);
    let params = load_checkpoint(checkpoint_path)?;
    let mut spec = config.dataset.clone();
    spec.seed = seed;
    let dataset = generate_dataset(&spec)?;
    let test_x: Vec<Vec<f64>> = dataset.test.iter().map(|e| e.features.clone()).collect();
    let test_y: Vec<usize> = dataset.test.iter().map(|e| e.label).collect();
    let logits = forward_no_cache(&params, &test_x)?;
    let probs = softmax_batch(&logits);
    let report = sslab::calibration::calibration_report(&probs, &test_y, config.calibration_bins)?;
    let stats = sslab::calibration::logit_stats(
        &logits,
        &test_y,
        sslab::calibration::DEFAULT_LOGIT_BIN_WIDTH,
    )?;

    let dir = out_dir(args, &config);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let prefix = format!("analysis-{}-seed{}", config.config_hash(), seed);
    let json_path = dir.join(format!("{prefix}.json"));
    let payload = serde_json::json!({
        "checkpoint": checkpoint_path.display().to_string(),
        "seed": seed,
        "report": report,
        "logit_stats": stats,
    });
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&payload)
            .map_err(|e| Error::parse("analysis json", e.to_string()))?,
    )
    .map_err(|e| Error::io(&json_path, e))?;

    println!(
        "checkpoint {}: error {:.4} ece {:.4} aece {:.4} cece {:.4} logit range {:.2}",
        checkpoint_path.display(),
        report.error_rate,
        report.ece,
        report.aece,
        report.cece,
        stats.range(),
    );
    println!("wrote {}", json_path.display());
    Ok(())
}

fn cmd_dynamics(args: &CliArgs) -> Result<()> {
    let rows = simplex_dynamics(args.resolution)?;
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("runs"));
    let path = dir.join(format!("dynamics-{}.csv", args.resolution));
    emit_dynamics_csv(&rows, &path)?;
    println!(
        "{} grid points; min-entropy gradient magnitude is at least 1 everywhere",
        rows.len()
    );
    println!("wrote {}", path.display());
    Ok(())
}

struct ScoresTable {
    methods: Vec<String>,
    scores: Vec<Vec<f64>>,
    lower_is_better: Vec<bool>,
}

/// Scores CSV: header `method,<setting>,...`; optional row whose first cell
/// is `lower_is_better` with 1/0 per setting (default: all 1).
fn parse_scores_csv(path: &Path) -> Result<ScoresTable> {
    let ctx = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(&ctx, "empty scores file"))?;
    let n_settings = header.split(',').count().saturating_sub(1);
    if n_settings == 0 {
        return Err(Error::parse(&ctx, "header needs method plus settings"));
    }
    let mut methods = Vec::new();
    let mut scores = Vec::new();
    let mut lower = vec![true; n_settings];
    for line in lines {
        let mut cells = line.split(',');
        let name = cells.next().unwrap().trim().to_string();
        let values: Vec<&str> = cells.map(|c| c.trim()).collect();
        if values.len() != n_settings {
            return Err(Error::parse(
                &ctx,
                format!("row '{name}' has {} cells, expected {n_settings}", values.len()),
            ));
        }
        if name == "lower_is_better" {
            for (flag, v) in lower.iter_mut().zip(&values) {
                *flag = matches!(*v, "1" | "true");
            }
            continue;
        }
        let row: Vec<f64> = values
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| Error::parse(&ctx, format!("value '{v}': {e}")))
            })
            .collect::<Result<_>>()?;
        methods.push(name);
        scores.push(row);
    }
    Ok(ScoresTable {
        methods,
        scores,
        lower_is_better: lower,
    })
}

fn cmd_rank(args: &CliArgs) -> Result<()> {
    let scores_path = args
        .scores
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("rank needs --scores PATH".into()))?;
    let table = parse_scores_csv(scores_path)?;
    let ranks = friedman_rank(&table.scores, &table.lower_is_better)?;
    let methods = table.methods;
    let mut order: Vec<usize> = (0..methods.len()).collect();
    order.sort_by(|&a, &b| ranks[a].partial_cmp(&ranks[b]).unwrap());
    println!("{:<28} {:>8}", "method", "rank");
    for &i in &order {
        println!("{:<28} {:>8.4}", methods[i], ranks[i]);
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("friedman-ranks.csv");
        let mut csv = String::from("method,rank\n");
        for (m, r) in methods.iter().zip(&ranks) {
            csv.push_str(&format!("{m},{r}\n"));
        }
        std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let parsed = parse_args(&args)?;
    match parsed.command.as_str() {
        "train" => cmd_train(&parsed),
        "sweep" => cmd_sweep(&parsed),
        "analyze" => cmd_analyze(&parsed),
        "dynamics" => cmd_dynamics(&parsed),
        "rank" => cmd_rank(&parsed),
        other => Err(Error::InvalidConfig(format!(
            "unknown command '{other}'. {}",
            usage()
        ))),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": err.to_string(),
                "kind": match &err {
                    Error::InvalidInput(_) => "invalid_input",
                    Error::InvalidConfig(_) => "invalid_config",
                    Error::ShapeMismatch(_) => "shape_mismatch",
                    Error::Diverged { .. } => "diverged",
                    Error::Io { .. } => "io",
                    Error::Parse { .. } => "parse",
                },
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}
