use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stopkey::common::{alice_keygen, bob_keygen};
use stopkey::format::{decomposition_doc, parse_key_law, to_json};
use stopkey::rng::RandomSource;
use stopkey::stopped_seq::{pointwise_mass_bound, verify_rsbs, VerifyOptions};
use stopkey::{DyadicDecomposition, KeyLaw};
use stopkey_harness::config::{ExperimentConfig, HashSpec, Protocol, ReconcilerSpec};
use stopkey_harness::dashboard::{bounds_dashboard, render_dashboard};
use stopkey_harness::eavesdropper::{eavesdropper_view, render_summary, TranscriptLog};
use stopkey_harness::report::{render_text, Report};
use stopkey_harness::simulate::{common_source, load_distribution, simulate};
use stopkey_harness::{HarnessError, Result};

#[derive(Parser)]
#[command(name = "stopkey", version, about = "Variable-length secret key agreement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Args)]
struct Output {
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Role {
    Alice,
    Bob,
}

#[derive(Args)]
struct Sim {
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long = "w-max", default_value_t = 20)]
    w_max: u32,
    #[arg(long, default_value_t = 0)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write every trial's public messages and keys here.
    #[arg(long = "transcript-log")]
    transcript_log: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the dyadic decomposition of a pmf.
    Decompose {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long = "w-max", default_value_t = 8)]
        w_max: u32,
        #[command(flatten)]
        output: Output,
    },
    /// One run of the common scheme for one party.
    KeygenCommon {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, value_enum)]
        role: Role,
        /// Symbol label (or index).
        #[arg(long)]
        x: String,
        /// Announced round; required for Bob.
        #[arg(long)]
        w: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate the hash-check scheme.
    KeygenAlmost {
        #[arg(long)]
        joint: PathBuf,
        /// `derandomized`, `fixed:FILE` or `random:SEED`.
        #[arg(long, default_value = "derandomized")]
        hash: HashSpec,
        #[command(flatten)]
        sim: Sim,
        #[command(flatten)]
        output: Output,
    },
    /// Simulate the reconciler plus hash-check pipeline.
    KeygenCorrelated {
        #[arg(long)]
        joint: PathBuf,
        /// `identity`, `constant` or `hashmap:BITS`.
        #[arg(long, default_value = "identity")]
        reconciler: ReconcilerSpec,
        #[command(flatten)]
        sim: Sim,
        #[command(flatten)]
        output: Output,
    },
    /// Check a key law exactly.
    VerifyRsbs {
        #[arg(long)]
        law: PathBuf,
        #[arg(long = "max-depth", default_value_t = 64)]
        max_depth: usize,
        /// Accept a positive tail, allowing splits to differ by up to it.
        #[arg(long = "accept-tail")]
        accept_tail: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Bound lines for a joint (or a pmf, read as X = Y).
    Bounds {
        #[arg(long, alias = "dist")]
        joint: PathBuf,
        #[arg(long, default_value_t = 2)]
        m: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Run an experiment from a config file or flags.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        dist: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ProtocolArg::Common)]
        protocol: ProtocolArg,
        #[arg(long, default_value = "derandomized")]
        hash: HashSpec,
        #[arg(long, default_value = "identity")]
        reconciler: ReconcilerSpec,
        #[command(flatten)]
        sim: Sim,
        #[command(flatten)]
        output: Output,
    },
    /// Render a saved report, or summarize a transcript log.
    Report {
        /// Structured report to render.
        #[arg(long, conflicts_with = "log", required_unless_present = "log")]
        input: Option<PathBuf>,
        /// Transcript log to analyze as an eavesdropper would.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    Common,
    AlmostCommon,
    Correlated,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Common => Protocol::Common,
            ProtocolArg::AlmostCommon => Protocol::AlmostCommon,
            ProtocolArg::Correlated => Protocol::Correlated,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

fn emit(output: &Output, text: &str) -> Result<()> {
    match &output.out {
        Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| HarnessError::io("<stdout>", e))
        }
    }
}

fn emit_report(output: &Output, report: &Report) -> Result<i32> {
    let text = match output.format {
        Format::Text => render_text(report),
        Format::Structured => report.to_json(),
    };
    emit(output, &text)?;
    Ok(report.exit_code())
}

fn experiment(mut cfg: ExperimentConfig, output: &Output) -> Result<i32> {
    if cfg.out.is_none() {
        cfg.out.clone_from(&output.out);
    }
    let dist = load_distribution(&cfg.dist)?;
    let run = simulate(&cfg, &dist)?;
    if let (Some(path), Some(log)) = (&cfg.transcript_log, &run.log) {
        std::fs::write(path, to_json(log)).map_err(|e| HarnessError::io(path, e))?;
    }
    let output = Output { out: cfg.out.clone(), format: output.format };
    emit_report(&output, &run.report)
}

fn config_from(dist: PathBuf, protocol: Protocol, sim: &Sim) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(dist, protocol);
    c.m = sim.m;
    c.w_max = sim.w_max;
    c.trials = sim.trials;
    c.seed = sim.seed;
    c.transcript_log.clone_from(&sim.transcript_log);
    c
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Decompose { dist, w_max, output } => {
            let p = common_source(&load_distribution(&dist)?);
            let d = DyadicDecomposition::decompose(p, w_max)?;
            let doc = decomposition_doc(&d, w_max);
            let text = match output.format {
                Format::Structured => to_json(&doc),
                Format::Text => {
                    let mut s = String::new();
                    for r in &doc.rounds {
                        s.push_str(&format!("w={} weight {}\n", r.w, r.weight));
                        for e in &r.entries {
                            let cw = if e.codeword.is_empty() { "ε" } else { &e.codeword };
                            s.push_str(&format!("  {:<12} {:>14}  {}\n", e.symbol, e.conditional, cw));
                        }
                    }
                    s.push_str(&format!("tail {}\n", doc.tail));
                    s
                }
            };
            emit(&output, &text)?;
            Ok(0)
        }
        Command::KeygenCommon { dist, role, x, w, seed } => {
            let p = common_source(&load_distribution(&dist)?);
            let x = p.resolve(&x)?;
            let (key, w) = match role {
                Role::Alice => alice_keygen(&p, x, &mut RandomSource::new(seed))?,
                Role::Bob => {
                    let w = w.ok_or_else(|| HarnessError::Input("--w is required for bob".into()))?;
                    (bob_keygen(&p, x, w)?, w)
                }
            };
            let key = if key.is_empty() { "ε".to_string() } else { key.to_bits_string() };
            println!("key={key} w={w}");
            Ok(0)
        }
        Command::KeygenAlmost { joint, hash, sim, output } => {
            let mut cfg = config_from(joint, Protocol::AlmostCommon, &sim);
            cfg.hash = hash;
            experiment(cfg, &output)
        }
        Command::KeygenCorrelated { joint, reconciler, sim, output } => {
            let mut cfg = config_from(joint, Protocol::Correlated, &sim);
            cfg.reconciler = reconciler;
            experiment(cfg, &output)
        }
        Command::VerifyRsbs { law, max_depth, accept_tail, output } => {
            let law: KeyLaw = parse_key_law(&read(&law)?)?;
            let verdict = verify_rsbs(&law, VerifyOptions { max_depth, accept_tail })?;
            let pointwise = pointwise_mass_bound(&law);
            let text = match output.format {
                Format::Structured => to_json(&serde_json::json!({ "rsbs": verdict, "pointwise": pointwise })),
                Format::Text => format!("{verdict:?}\npointwise bound: {pointwise:?}\n"),
            };
            emit(&output, &text)?;
            Ok(if verdict.is_valid() { 0 } else { 2 })
        }
        Command::Bounds { joint, m, output } => {
            let j = load_distribution(&joint)?.into_joint();
            let d = bounds_dashboard(&j, m);
            let text = match output.format {
                Format::Structured => to_json(&d),
                Format::Text => render_dashboard(&d),
            };
            emit(&output, &text)?;
            Ok(0)
        }
        Command::Simulate { config, dist, protocol, hash, reconciler, sim, output } => {
            let cfg = match (config, dist) {
                (Some(path), _) => ExperimentConfig::load(&path)?,
                (None, Some(dist)) => {
                    let mut c = config_from(dist, protocol.into(), &sim);
                    c.hash = hash;
                    c.reconciler = reconciler;
                    c
                }
                (None, None) => return Err(HarnessError::Input("give --config or --dist".into())),
            };
            experiment(cfg, &output)
        }
        Command::Report { input, log, output } => {
            if let Some(path) = log {
                let log = TranscriptLog::parse(&read(&path)?)?;
                let summary = eavesdropper_view(&log)?;
                let text = match output.format {
                    Format::Structured => to_json(&summary),
                    Format::Text => render_summary(&summary),
                };
                emit(&output, &text)?;
                return Ok(if summary.fairness.flagged > 0 { 2 } else { 0 });
            }
            let path = input.expect("clap requires one of --input/--log");
            let report: Report =
                serde_json::from_str(&read(&path)?).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
            emit_report(&output, &report)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
