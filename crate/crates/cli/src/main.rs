//! `areil`: prepare data, train, evaluate, ablate, export, and probe.
//!
//! Exit codes: 0 success, 1 internal error, 2 input error, 3 checkpoint error.

mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use areil_core::corpus::{
    align_overlapping_users, ingest_interactions, read_prepared, split_holdout, write_prepared, IngestOptions,
    PreparedData,
};
use areil_core::evalkit::{
    ablation_table, disentanglement_probe, evaluate, export_embeddings, run_ablation, EvalReport, EvalSplit, RunMeta,
};
use areil_core::model::{ModelState, Variant};
use areil_core::numcore::seeded_rng;
use areil_core::trainer::{fit, load_checkpoint, save_checkpoint, CheckpointMeta, TrainingData};
use areil_core::Error;
use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// Bad flags, configuration, or inputs that the engine never saw.
    Input(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Core(e) => match e {
                Error::Checkpoint { .. } => 3,
                Error::Shape { .. } | Error::Numeric(_) => 1,
                _ => 2,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn parse_split(s: &str) -> Result<EvalSplit, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "areil", version, about = "Dual-target cross-domain recommendation")]
struct Cli {
    /// Run configuration (TOML). Every key has a default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the split seed for `prepare` and the training seed otherwise.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Metric cut-off.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// validation or test.
    #[arg(long, global = true, value_parser = parse_split)]
    split: Option<EvalSplit>,
    /// Comma-separated: full, no_graph, no_arem, no_irlm.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_variant)]
    variants: Option<Vec<Variant>>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest two raw rating logs, keep overlapping users, and split.
    Prepare {
        #[arg(long)]
        raw_x: Option<PathBuf>,
        #[arg(long)]
        raw_y: Option<PathBuf>,
    },
    /// Train one model and keep the best validation checkpoint.
    Train,
    /// Report Recall@K and NDCG@K of a checkpoint.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train and evaluate several variants from the same seed.
    Ablate,
    /// Write user and item embeddings as TSV.
    Export {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Held-out domain-classification accuracy on shared and specific embeddings.
    Probe {
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Core(Error::io(path, e))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Config file (or defaults) with command-line overrides applied.
fn effective_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        match cli.command {
            Command::Prepare { .. } => cfg.data.split_seed = seed,
            _ => cfg.train.seed = seed,
        }
    }
    if let Some(k) = cli.k {
        if k == 0 {
            return Err(CliError::Input("--k must be at least 1".into()));
        }
        cfg.eval.k = k;
    }
    if let Some(split) = cli.split {
        cfg.eval.split = split;
    }
    if let Some(v) = &cli.variants {
        cfg.eval.variants = v.clone();
    }
    if let Command::Prepare { raw_x, raw_y } = &cli.command {
        cfg.data.raw_x = raw_x.clone().or(cfg.data.raw_x);
        cfg.data.raw_y = raw_y.clone().or(cfg.data.raw_y);
        if let Some(out) = &cli.out {
            cfg.data.prepared_dir = out.clone();
        }
    } else if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn load_data(dir: &Path) -> CliResult<(PreparedData, TrainingData)> {
    let prepared = read_prepared(dir)?;
    let data = TrainingData::new(prepared.split.clone())?;
    Ok((prepared, data))
}

fn prepare(cfg: &RunConfig) -> CliResult<()> {
    let (Some(raw_x), Some(raw_y)) = (&cfg.data.raw_x, &cfg.data.raw_y) else {
        return Err(CliError::Input("prepare needs --raw-x and --raw-y (or data.raw_x / data.raw_y)".into()));
    };
    let opts = IngestOptions { positive_threshold: cfg.data.positive_threshold, delimiter: cfg.data.delimiter };
    let cds = align_overlapping_users(&ingest_interactions(raw_x, &opts)?, &ingest_interactions(raw_y, &opts)?)?;
    let split = split_holdout(&cds, cfg.data.split_seed)?;
    let dir = &cfg.data.prepared_dir;
    write_prepared(dir, &cds, &split)?;
    cfg.write_effective(dir)?;
    let stats = fs::read_to_string(dir.join("stats.tsv")).map_err(io_err(dir))?;
    print!("{stats}");
    println!("config_digest\t{}", cfg.digest());
    Ok(())
}

fn train(cfg: &RunConfig) -> CliResult<()> {
    let (_, data) = load_data(&cfg.data.prepared_dir)?;
    let digest = cfg.digest();
    let model = ModelState::new(&cfg.model, data.dims(), &mut seeded_rng(cfg.train.seed))?;
    let outcome = fit(model, &data, &cfg.train)?;

    let dir = &cfg.output.dir;
    create_dir(dir)?;
    cfg.write_effective(dir)?;
    outcome.history.write_tsv(&dir.join("history.tsv"))?;
    let report = &outcome.best_report;
    let meta = CheckpointMeta {
        seed: cfg.train.seed,
        config_digest: digest.clone(),
        data_dir: cfg.data.prepared_dir.display().to_string(),
        best_epoch: outcome.best_epoch,
        eval_k: cfg.train.eval_k,
        valid_recall: [report.domains[0].recall, report.domains[1].recall],
        valid_ndcg: [report.domains[0].ndcg, report.domains[1].ndcg],
    };
    save_checkpoint(&outcome.model, &meta, &dir.join("model.ckpt"))?;
    let report =
        report.clone().with_meta(RunMeta { seed: cfg.train.seed, variant: cfg.model.variant, config_digest: digest });
    let text = format!("best_epoch: {}\n{}", outcome.best_epoch, report.to_text());
    write(&dir.join("eval_validation.txt"), &text)?;
    print!("{text}");
    Ok(())
}

/// Loads a checkpoint and the prepared data it was trained on.
fn load_run(
    cli: &Cli,
    cfg: &RunConfig,
    checkpoint: &Path,
) -> CliResult<(ModelState, CheckpointMeta, PreparedData, TrainingData)> {
    let (model, meta) = load_checkpoint(checkpoint)?;
    let dir = if cli.config.is_some() || meta.data_dir.is_empty() {
        cfg.data.prepared_dir.clone()
    } else {
        PathBuf::from(&meta.data_dir)
    };
    let (prepared, data) = load_data(&dir)?;
    if model.dims != data.dims() {
        return Err(CliError::Input(format!(
            "checkpoint {} expects {:?} but {} holds {:?}",
            checkpoint.display(),
            model.dims,
            dir.display(),
            data.dims()
        )));
    }
    Ok((model, meta, prepared, data))
}

fn output_dir(cli: &Cli, checkpoint: &Path) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| checkpoint.parent().map(Path::to_path_buf).unwrap_or_default())
}

fn evaluate_cmd(cli: &Cli, cfg: &RunConfig, checkpoint: &Path) -> CliResult<()> {
    let (model, meta, _, data) = load_run(cli, cfg, checkpoint)?;
    let report = evaluate(&model, &data, cfg.eval.split, cfg.eval.k)?.with_meta(RunMeta {
        seed: meta.seed,
        variant: model.config.variant,
        config_digest: meta.config_digest,
    });
    let dir = output_dir(cli, checkpoint);
    create_dir(&dir)?;
    write(&dir.join(format!("eval_{}.txt", cfg.eval.split)), &report.to_text())?;
    print!("{}", report.to_text());
    Ok(())
}

fn ablate(cfg: &RunConfig) -> CliResult<()> {
    if cfg.eval.variants.is_empty() {
        return Err(CliError::Input("no variants to compare".into()));
    }
    let (_, data) = load_data(&cfg.data.prepared_dir)?;
    let digest = cfg.digest();
    let rows = run_ablation(&data, &cfg.model, &cfg.train, &cfg.eval.variants, cfg.eval.split, cfg.eval.k)?;
    let dir = &cfg.output.dir;
    create_dir(dir)?;
    cfg.write_effective(dir)?;
    let table = ablation_table(&rows);
    write(&dir.join("ablation.tsv"), &table)?;
    let mut summary = format!("{}\n", EvalReport::summary_header());
    for row in &rows {
        row.outcome.history.write_tsv(&dir.join(format!("history_{}.tsv", row.variant)))?;
        let report = row.report.clone().with_meta(RunMeta {
            seed: cfg.train.seed,
            variant: row.variant,
            config_digest: digest.clone(),
        });
        summary.push_str(&report.summary_row());
        summary.push('\n');
    }
    write(&dir.join("summary.tsv"), &summary)?;
    print!("{table}");
    println!("config_digest\t{digest}");
    Ok(())
}

fn export(cli: &Cli, cfg: &RunConfig, checkpoint: &Path) -> CliResult<()> {
    let (model, meta, prepared, data) = load_run(cli, cfg, checkpoint)?;
    let dir = output_dir(cli, checkpoint);
    let items = [&prepared.items_x, &prepared.items_y];
    export_embeddings(&model, &data, &prepared.users, items, &dir)?;
    let info = format!(
        "checkpoint = {:?}\nconfig_digest = {:?}\nseed = {}\n",
        checkpoint.display().to_string(),
        meta.config_digest,
        meta.seed
    );
    write(&dir.join("export_meta.toml"), &info)?;
    println!("wrote embeddings for {} users to {}", prepared.users.len(), dir.display());
    Ok(())
}

fn probe(cli: &Cli, cfg: &RunConfig, checkpoint: &Path) -> CliResult<()> {
    let (model, meta, _, data) = load_run(cli, cfg, checkpoint)?;
    let result = disentanglement_probe(&model, &data, &cfg.eval.probe())?;
    let text = format!(
        "probe_accuracy.specific: {}\nprobe_accuracy.shared: {}\nconfig_digest: {}\n",
        result.acc_specific, result.acc_shared, meta.config_digest
    );
    let dir = output_dir(cli, checkpoint);
    create_dir(&dir)?;
    write(&dir.join("probe.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("--threads {n}: {e}")))?;
    }
    let cfg = effective_config(cli)?;
    match &cli.command {
        Command::Prepare { .. } => prepare(&cfg),
        Command::Train => train(&cfg),
        Command::Evaluate { checkpoint } => evaluate_cmd(cli, &cfg, checkpoint),
        Command::Ablate => ablate(&cfg),
        Command::Export { checkpoint } => export(cli, &cfg, checkpoint),
        Command::Probe { checkpoint } => probe(cli, &cfg, checkpoint),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AREIL_LOG", "info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
