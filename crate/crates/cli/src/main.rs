use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tac_core::ingest::{load_records, write_calibrated, Format};
use tac_core::mapper::MapperConfig;
use tac_core::metrics::{reliability_bins, DEFAULT_BINS};
use tac_core::pipeline::{fit, mapper_inputs, predict, vanilla_report};
use tac_core::proxy_lab::{build_base_world, prop2_sweep, write_sweep_csv, Aggregation};
use tac_core::supervision::{run_protocol, train_eval_split, Protocol, ProtocolRow, ProtocolSpec};
use tac_core::{extract_score_column, Direction, Error, LabeledDataset, MapperDocument, Orientation, ReliabilityReport};

#[derive(Parser)]
#[command(name = "tac", version, about = "Calibrate uncertainty scores into correctness probabilities")]
struct Cli {
    /// Seed for every random stream (splits, initialization, sampling).
    #[arg(long, global = true, env = "TAC_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vanilla metrics of a raw score, as JSON.
    Eval {
        #[command(flatten)]
        input: ScoreInput,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        /// Min-max normalize the score first. Without it the score must already lie in [0, 1].
        #[arg(long)]
        normalize: bool,
    },
    /// Train a mapper on a score (or a pair of scores).
    Train {
        #[command(flatten)]
        input: ScoreInput,
        /// Second score for a concatenated two-input mapper.
        #[arg(long)]
        pair: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        phi_rank: f64,
        #[arg(long)]
        max_epochs: Option<usize>,
        /// Where to write the trained mapper.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a trained mapper and write records with `tac_prob`.
    Apply {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        mapper: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<FileFormat>,
    },
    /// Before/after metrics under a supervision protocol, as CSV.
    Protocol {
        #[command(subcommand)]
        kind: ProtocolCommand,
    },
    /// Numerical bound checks on constructed worlds.
    Lab {
        #[command(subcommand)]
        experiment: LabCommand,
    },
    /// Reliability bin table of a score as CSV.
    Diagram {
        #[command(flatten)]
        input: ScoreInput,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ScoreInput {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    score: String,
    /// Score direction override, `name=confidence` or `name=uncertainty`. Repeatable.
    #[arg(long = "orient", value_parser = parse_orient)]
    orient: Vec<(String, Direction)>,
    /// Input format; inferred from the extension when absent.
    #[arg(long, value_enum)]
    format: Option<FileFormat>,
}

#[derive(Args)]
struct ProtocolOptions {
    #[arg(long)]
    score: String,
    #[arg(long = "orient", value_parser = parse_orient)]
    orient: Vec<(String, Direction)>,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value_t = 1.0)]
    phi_rank: f64,
    /// Fraction of records held out for evaluation.
    #[arg(long, default_value_t = 0.2)]
    eval_fraction: f64,
}

#[derive(Subcommand)]
enum ProtocolCommand {
    Fewshot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        opts: ProtocolOptions,
    },
    Corrupt {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        rate: f64,
        #[command(flatten)]
        opts: ProtocolOptions,
    },
    Transfer {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        opts: ProtocolOptions,
    },
}

#[derive(Subcommand)]
enum LabCommand {
    /// Information budget and AUC gap across mixture weights.
    Prop2 {
        #[arg(long)]
        queries: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        /// Entropy bonus of wrong responses under the informative component (default ln 3).
        #[arg(long)]
        bonus: Option<f64>,
        #[arg(long, value_enum, default_value_t = Agg::Sum)]
        agg: Agg,
        #[arg(long, default_value_t = 1)]
        min_len: usize,
        #[arg(long, default_value_t = 10)]
        max_len: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    Jsonl,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Agg {
    Sum,
    Mean,
}

fn parse_orient(s: &str) -> Result<(String, Direction), String> {
    let (name, dir) = s.split_once('=').ok_or_else(|| format!("expected name=direction, got `{s}`"))?;
    let dir = dir.parse::<Direction>().map_err(|e| e.to_string())?;
    Ok((name.to_string(), dir))
}

fn orientation(pairs: &[(String, Direction)]) -> Orientation {
    pairs.iter().fold(Orientation::new(), |o, (n, d)| o.with(n.clone(), *d))
}

fn load(path: &Path, format: Option<FileFormat>, seed: u64) -> Result<LabeledDataset, Error> {
    let format = match format {
        Some(FileFormat::Jsonl) => Format::Jsonl,
        Some(FileFormat::Csv) => Format::Csv,
        None => Format::from_path(path),
    };
    Ok(load_records(path, format)?.with_seed(seed))
}

fn json(value: &serde_json::Value) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))
}

fn raw_report(ds: &LabeledDataset, input: &ScoreInput, bins: usize, normalize: bool) -> Result<ReliabilityReport, Error> {
    let orient = orientation(&input.orient);
    if normalize {
        return vanilla_report(ds, &input.score, &orient, bins);
    }
    let (values, labels): (Vec<f64>, Vec<bool>) = extract_score_column(ds, &input.score, &orient)?.into_iter().unzip();
    reliability_bins(&values, &labels, bins)
}

fn write_protocol_csv(row: &ProtocolRow, out: impl Write) -> Result<(), Error> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{}", ProtocolRow::HEADER.join(","))?;
    writeln!(w, "{}", row.fields().join(","))?;
    w.flush()?;
    Ok(())
}

fn protocol(kind: ProtocolCommand, seed: u64) -> Result<(), Error> {
    let (spec, train, eval, opts) = match kind {
        ProtocolCommand::Fewshot { input, k, opts } => {
            let (train, eval) = train_eval_split(&load(&input, None, seed)?, opts.eval_fraction, seed)?;
            (ProtocolSpec::new(Protocol::FewShot { k_labels: k }, seed), train, eval, opts)
        }
        ProtocolCommand::Corrupt { input, rate, opts } => {
            let (train, eval) = train_eval_split(&load(&input, None, seed)?, opts.eval_fraction, seed)?;
            (ProtocolSpec::new(Protocol::Corrupt { corrupt_rate: rate }, seed), train, eval, opts)
        }
        ProtocolCommand::Transfer { train, test, opts } => {
            (ProtocolSpec::new(Protocol::Transfer, seed), load(&train, None, seed)?, load(&test, None, seed)?, opts)
        }
    };
    let cfg = MapperConfig::default().with_phi_rank(opts.phi_rank);
    let row = run_protocol(&spec, &train, &eval, &opts.score, &orientation(&opts.orient), &cfg, opts.bins)?;
    write_protocol_csv(&row, io::stdout().lock())
}

fn run(cli: Cli) -> Result<(), Error> {
    let seed = cli.seed;
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Eval { input, bins, normalize } => {
            let ds = load(&input.input, input.format, seed)?;
            writeln!(stdout, "{}", raw_report(&ds, &input, bins, normalize)?.to_json()?)?;
        }
        Command::Train { input, pair, phi_rank, max_epochs, out } => {
            let ds = load(&input.input, input.format, seed)?;
            let mut names = vec![input.score.as_str()];
            names.extend(pair.as_deref());
            let mut cfg = MapperConfig::default().with_seed(seed).with_phi_rank(phi_rank);
            if let Some(m) = max_epochs {
                cfg.max_epochs = m;
            }
            let (doc, history) = fit(&ds, mapper_inputs(&names, &orientation(&input.orient)), &cfg)?;
            if let Some(path) = out {
                doc.save(&path)?;
            }
            let best = history.best();
            let summary = serde_json::json!({
                "inputs": doc.inputs,
                "epochs": history.epochs.len(),
                "best_epoch": history.best_epoch,
                "best_val_auroc": best.val_auroc,
                "best_val_loss": best.val_loss,
                "stopped_early": history.stopped_early,
                "rank_term_inactive": history.rank_term_inactive,
                "train_size": history.train_size,
                "val_size": history.val_size,
            });
            writeln!(stdout, "{}", json(&summary)?)?;
        }
        Command::Apply { input, mapper, out, format } => {
            let ds = load(&input, format, seed)?;
            let doc = MapperDocument::load(&mapper)?;
            write_calibrated(&out, &ds, &predict(&doc, &ds)?)?;
        }
        Command::Protocol { kind } => protocol(kind, seed)?,
        Command::Lab { experiment: LabCommand::Prop2 { queries, lambdas, bonus, agg, min_len, max_len } } => {
            let agg = match agg {
                Agg::Sum => Aggregation::Sum,
                Agg::Mean => Aggregation::Mean,
            };
            let world = build_base_world::<f64>(queries, min_len..=max_len, seed)?.with_bonus(bonus.unwrap_or(3f64.ln()))?;
            write_sweep_csv(&prop2_sweep(&world, &lambdas, agg)?, &mut stdout)?;
        }
        Command::Diagram { input, bins, normalize, out } => {
            let ds = load(&input.input, input.format, seed)?;
            let report = raw_report(&ds, &input, bins, normalize)?;
            report.write_bins_csv(BufWriter::new(File::create(&out)?))?;
        }
    }
    stdout.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tac: {e}");
            ExitCode::from(2)
        }
    }
}
