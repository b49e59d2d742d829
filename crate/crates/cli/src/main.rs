//! Command-line front end: run Monte-Carlo experiments, inspect single
//! instances and merge CCDF tables.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use papr_pts::experiment::{experiment_partition, run_trial, tabulate};
use papr_pts::sdp::SolverConfig;
use papr_pts::{emit_csv, merge, parse_csv, run_trials, Error, Execution, ExperimentConfig};

#[derive(Parser)]
#[command(name = "papr-pts", version, about = "PTS rotation search by semidefinite relaxation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write its CCDF table as CSV.
    Simulate(Overrides),
    /// Run every method on one trial and print the results.
    Solve {
        #[command(flatten)]
        overrides: Overrides,
        /// Trial index whose symbols are used.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Join CCDF tables from several runs on a common grid.
    CcdfMerge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Overrides {
    /// Key-value config file; see the README for the grammar.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "P")]
    p: Option<usize>,
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long = "J")]
    j: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated method list.
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated candidate counts.
    #[arg(long)]
    candidates: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other config key, as `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
}

impl Overrides {
    fn resolve(&self) -> papr_pts::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = &self.preset {
            cfg.set("preset", p)?;
        }
        let pairs = [
            ("K", self.k.map(|v| v.to_string())),
            ("P", self.p.map(|v| v.to_string())),
            ("L", self.l.map(|v| v.to_string())),
            ("J", self.j.map(|v| v.to_string())),
            ("trials", self.trials.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("methods", self.methods.clone()),
            ("candidates", self.candidates.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got '{kv}'")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

fn write_table(table: &papr_pts::CcdfTable, out: Option<&PathBuf>) -> papr_pts::Result<()> {
    match out {
        Some(path) => emit_csv(table, path),
        None => {
            print!("{}", table.to_csv_string());
            Ok(())
        }
    }
}

fn simulate(o: &Overrides) -> papr_pts::Result<()> {
    let cfg = o.resolve()?;
    let outcomes = run_trials(&cfg, o.execution())?;
    let table = tabulate(&cfg, &outcomes)?;
    write_table(&table, cfg.out.as_ref())?;
    for level in [1e-1, 1e-2] {
        let summary: Vec<String> = table
            .summarize(level)
            .into_iter()
            .map(|(name, v)| match v {
                Some(db) => format!("{name} {db:.2}"),
                None => format!("{name} n/a"),
            })
            .collect();
        eprintln!("PAPR (dB) at CCDF {level}: {}", summary.join(", "));
    }
    Ok(())
}

fn solve(o: &Overrides, trial: usize) -> papr_pts::Result<()> {
    let cfg = o.resolve()?;
    let partition = experiment_partition(&cfg)?;
    let out = run_trial(&cfg, &partition, trial, &SolverConfig::default())?;
    println!(
        "K = {}, P = {}, L = {}, J = {}, trial {trial}",
        cfg.k, cfg.p, cfg.l, cfg.j
    );
    println!("average power {:.6}", out.p_av);
    if let (Some(lb), Some(rep)) = (out.lower_bound, &out.relaxation_report) {
        println!(
            "relaxation bound {:.4} dB ({} Newton steps, gap bound {:.2e})",
            lb.db, rep.iterations, rep.gap_bound
        );
    }
    if let Some(rep) = &out.quartic_report {
        println!(
            "quartic objective {:.6e} ({} Newton steps, gap bound {:.2e})",
            rep.objective, rep.iterations, rep.gap_bound
        );
    }
    for (name, r) in &out.results {
        println!("{name:<18} {:.4} dB", r.db);
    }
    Ok(())
}

fn ccdf_merge(inputs: &[PathBuf], out: Option<&PathBuf>) -> papr_pts::Result<()> {
    let tables = inputs
        .iter()
        .map(|p| parse_csv(p))
        .collect::<papr_pts::Result<Vec<_>>>()?;
    write_table(&merge(&tables)?, out)
}

/// 2 for bad input or unreadable files, 3 for numeric failures.
fn exit_code(e: &Error) -> u8 {
    if e.is_config_error() || matches!(e, Error::Io { .. }) {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(o) => simulate(o),
        Command::Solve { overrides, trial } => solve(overrides, *trial),
        Command::CcdfMerge { inputs, out } => ccdf_merge(inputs, out.as_ref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 2);
        let io = Error::Io {
            path: "f".into(),
            source: std::io::Error::other("x"),
        };
        assert_eq!(exit_code(&io), 2);
        assert_eq!(exit_code(&Error::Numeric("x".into())), 3);
        let wrapped = |source| Error::Trial {
            trial: 4,
            source: Box::new(source),
        };
        assert_eq!(exit_code(&wrapped(Error::Numeric("x".into()))), 3);
        assert_eq!(exit_code(&wrapped(Error::Config("x".into()))), 2);
        assert_eq!(exit_code(&Error::DegenerateSolution("x".into())), 3);
    }
}
