//! `rdlp`: upper and lower bounds for rate-distortion with side information
//! at several decoders, from a JSON instance file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rdlp::instances::Orderings;
use rdlp::lp::{Number, SolveMode};
use rdlp_cli::commands::{self, Failure, Options};
use rdlp_cli::instance::{self, Problem};
use rdlp_cli::record::{fingerprint, table, RecordStats, RecordValue, ResultRecord};

#[derive(Parser)]
#[command(name = "rdlp", version, about = "LP bounds for multi-decoder rate-distortion with side information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// JSON instance file.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Slack ε for the converse programs and the permutation bound.
    #[arg(long)]
    eps: Option<f64>,
    /// Arithmetic of the LP solver (default: $RDLP_MODE, else per instance).
    #[arg(long, value_parser = ["rational", "float"])]
    mode: Option<String>,
    /// Solve the schedule as given or under every message ordering.
    #[arg(long, value_parser = ["all", "given"])]
    orderings: Option<String>,
    /// One JSON record per line.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Achievable-scheme LP over the listed schedules.
    Upper(Common),
    /// Same, for Gaussian instances only.
    UpperGauss(Common),
    /// Subset LPs of an index-coding instance.
    LowerIndex(Common),
    /// Lattice LP over generalized side information.
    LowerGeneral(Common),
    /// Permutation bound from fixed auxiliaries.
    Minimax(Common),
    /// Every applicable bound and the resulting sandwich.
    Compare(Common),
    /// Check the closed forms on an odd-cycle instance.
    OddCycle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: Option<usize>,
        /// binary or gaussian
        #[arg(long)]
        flavor: Option<String>,
        /// Gaussian distortion target.
        #[arg(long = "D")]
        d: Option<f64>,
    },
    /// Print the plain-text program behind a bound.
    DumpLp {
        #[command(flatten)]
        common: Common,
        /// achievable, blasiak, relaxed-index or lattice
        #[arg(long, default_value = "achievable")]
        program: String,
    },
}

fn options(c: &Common, default_orderings: Orderings) -> Result<Options, Failure> {
    let mode = match (&c.mode, std::env::var("RDLP_MODE")) {
        (Some(m), _) => Some(m.clone()),
        (None, Ok(m)) if !m.trim().is_empty() => Some(m),
        _ => None,
    };
    let mode = match mode {
        None => None,
        Some(m) => Some(SolveMode::parse(&m).ok_or_else(|| Failure::Usage(format!("unknown mode `{m}`")))?),
    };
    if let Some(e) = c.eps {
        if !e.is_finite() || e < 0.0 {
            return Err(Failure::Usage(format!("--eps must be finite and nonnegative, got {e}")));
        }
    }
    let orderings = match c.orderings.as_deref() {
        Some("all") => Orderings::All,
        Some(_) => Orderings::Given,
        None => default_orderings,
    };
    Ok(Options { eps: c.eps, mode, orderings })
}

fn load(c: &Common) -> Result<Problem, Failure> {
    let path = c.instance.as_ref().ok_or_else(|| Failure::Usage("--instance is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let file = instance::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(file.load()?)
}

fn emit(records: &[ResultRecord], json: bool) {
    if json {
        for r in records {
            println!("{}", r.to_json());
        }
    } else {
        print!("{}", table(records));
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Upper(c) => {
            let (p, o) = (load(&c)?, options(&c, Orderings::Given)?);
            emit(&commands::upper(&p, &o, false)?, c.json);
        }
        Command::UpperGauss(c) => {
            let (p, o) = (load(&c)?, options(&c, Orderings::Given)?);
            emit(&commands::upper(&p, &o, true)?, c.json);
        }
        Command::LowerIndex(c) => {
            let (p, o) = (load(&c)?, options(&c, Orderings::Given)?);
            emit(&commands::lower_index(&p, &o)?, c.json);
        }
        Command::LowerGeneral(c) => {
            let (p, o) = (load(&c)?, options(&c, Orderings::Given)?);
            emit(&commands::lower_general(&p, &o)?, c.json);
        }
        Command::Minimax(c) => {
            let (p, o) = (load(&c)?, options(&c, Orderings::Given)?);
            emit(&commands::minimax(&p, &o)?, c.json);
        }
        Command::Compare(c) => {
            let (p, o) = (load(&c)?, options(&c, Orderings::Given)?);
            let (mut records, sandwich, skipped) = commands::compare(&p, &o)?;
            for s in &skipped {
                eprintln!("skipped {s}");
            }
            let line = sandwich.as_ref().map(|s| s.line());
            if let Some(s) = &sandwich {
                let exact = matches!(s.gap, Number::Rational(_));
                let print = format!("{}\n{}", s.upper.fingerprint, s.lower.fingerprint);
                records.push(ResultRecord {
                    bound: format!("gap[{}]", s.lower.bound),
                    value: RecordValue::from_number(&s.gap),
                    mode: if exact { "rational" } else { "float" }.into(),
                    eps: s.lower.eps,
                    fingerprint: fingerprint(&print),
                    heuristic: false,
                    stats: RecordStats::default(),
                });
            }
            emit(&records, c.json);
            match (&sandwich, line) {
                (Some(s), Some(line)) => {
                    if !c.json {
                        println!("{line}");
                    }
                    if s.verdict() == "VIOLATION" {
                        return Err(Failure::Solver(format!("lower bound exceeds upper bound: {line}")));
                    }
                }
                _ => eprintln!("no sandwich: an upper and a certified lower bound are both needed"),
            }
        }
        Command::OddCycle { common, m, flavor, d } => {
            let o = options(&common, Orderings::All)?;
            let spec = match (&common.instance, m) {
                (Some(_), None) if flavor.is_none() && d.is_none() => match load(&common)? {
                    Problem::OddCycle(spec) => spec,
                    _ => return Err(Failure::Usage("odd-cycle needs an odd-cycle instance".into())),
                },
                (None, Some(m)) => instance::odd_cycle_spec(m, flavor.as_deref().unwrap_or("binary"), d)?,
                _ => return Err(Failure::Usage("give either --instance or --m [--flavor --D]".into())),
            };
            let (report, records) = commands::odd_cycle(&spec, &o)?;
            if common.json {
                emit(&records, true);
            } else {
                println!("{}", report.summary());
            }
            if !report.passed() {
                for f in &report.failures {
                    eprintln!("{f}");
                }
                return Err(Failure::Solver("the odd-cycle closed forms were not reproduced".into()));
            }
        }
        Command::DumpLp { common, program } => {
            let (p, o) = (load(&common)?, options(&common, Orderings::Given)?);
            print!("{}", commands::dump(&p, &program, &o)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("rdlp: {f}");
            ExitCode::from(f.code())
        }
    }
}
