use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use sgbm::cases::{self, CaseId, RunStatistics};
use sgbm::config::SolveConfig;
use sgbm::error::SgbmError;
use sgbm::report::{self, ReportFormat};

#[derive(Parser)]
#[command(name = "sgbm", about = "Stochastic Grid Bundling Method experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a predefined benchmark case over a range of J values.
    Run {
        /// Case id (1a..1f, 2.1a, 2.1b, 2.2a, 2.2b).
        #[arg(long)]
        case: String,
        /// J value, inclusive range "a..b", or comma list.
        #[arg(long)]
        j: String,
        /// Independent runs per cell.
        #[arg(long, default_value_t = 10)]
        runs: usize,
        /// Base seed; run i uses seed + i.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output path for the report.
        #[arg(long)]
        out: PathBuf,
        /// Worker-thread limit for the global pool.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Solve an ad-hoc problem described by a JSON config.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the benchmark case catalog.
    ListCases,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

/// Parse "4", "2..8" (inclusive) or "2,4,6".
fn parse_j_spec(spec: &str) -> Result<Vec<u32>, SgbmError> {
    let bad = || SgbmError::Config(format!("cannot parse J specification '{spec}'"));
    if let Some((a, b)) = spec.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',')
        .map(|part| part.trim().parse().map_err(|_| bad()))
        .collect()
}

fn run_command(
    case: &str,
    j_spec: &str,
    runs: usize,
    seed: u64,
    out: &Path,
    threads: Option<usize>,
    format: Format,
) -> Result<u8, SgbmError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| SgbmError::Config(format!("thread pool: {e}")))?;
    }
    let case: CaseId = case.parse()?;
    let js = parse_j_spec(j_spec)?;
    let mut stats: Vec<RunStatistics> = Vec::new();
    for j in js {
        let cell = cases::run_case(case, j, runs, seed)?;
        eprintln!(
            "case {case} J={j}: {}/{} successful runs, err_y0 = {}",
            cell.successes,
            cell.runs,
            cell.mean_abs_error_y0
                .map(|e| format!("{e:.6e}"))
                .unwrap_or_else(|| "NA".into())
        );
        stats.push(cell);
    }
    let fmt = match format {
        Format::Csv => ReportFormat::Csv,
        Format::Table => ReportFormat::Table,
    };
    report::write_report(out, &stats, fmt)?;
    let all_rejected = stats.iter().all(|s| s.successes == 0);
    Ok(if all_rejected { 3 } else { 0 })
}

fn solve_command(path: &Path) -> Result<u8, SgbmError> {
    let config = SolveConfig::from_path(path)?;
    let (problem, scheme) = config.build()?;
    let result = sgbm::solve(&problem, &scheme, config.mc.m, config.mc.seed)?;
    println!("y0 = {}", result.y0);
    println!(
        "z0 = [{}]",
        result
            .z0
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("accepted = {}", result.accepted);
    Ok(if result.accepted { 0 } else { 3 })
}

fn list_cases() {
    println!("case   scheme           M      N    B     L      basis            J range");
    for case in cases::ALL_CASES {
        let range = cases::j_range(case);
        let j = *range.start();
        let p = cases::case_params(case, j).unwrap();
        let scheme = if p.theta1 == 0.0 { "explicit" } else { "crank-nicolson" };
        let l = if p.coeff_bound.is_infinite() {
            "inf".to_string()
        } else {
            format!("{}", p.coeff_bound)
        };
        let basis = match case {
            CaseId::C21a | CaseId::C21b => format!("weighted-sum^{}", p.basis_len),
            CaseId::C22a | CaseId::C22b => format!("geom-mean^{}", p.basis_len),
            _ => format!("monomials^{}", p.basis_len),
        };
        println!(
            "{case:<6} {scheme:<15} {:<7} {:<4} {:<5} {l:<6} {basis:<16} {}..={}",
            if matches!(case, CaseId::C21a | CaseId::C21b | CaseId::C22a | CaseId::C22b) {
                "4096".to_string()
            } else {
                "4^J".to_string()
            },
            match case {
                CaseId::C21a | CaseId::C21b => "10".to_string(),
                CaseId::C22a | CaseId::C22b => "20".to_string(),
                _ => "2^J".to_string(),
            },
            match case {
                CaseId::C21a | CaseId::C21b => "4^J".to_string(),
                CaseId::C22a | CaseId::C22b => "16".to_string(),
                _ => "2^J".to_string(),
            },
            range.start(),
            range.end()
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run {
            case,
            j,
            runs,
            seed,
            out,
            threads,
            format,
        } => run_command(case, j, *runs, *seed, out, *threads, *format),
        Command::Solve { config } => solve_command(config),
        Command::ListCases => {
            list_cases();
            Ok(0)
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(SgbmError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
