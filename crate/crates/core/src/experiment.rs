//! Monte-Carlo comparison of the rotation-search methods.
//!
//! Each trial draws one symbol vector and runs every enabled method on it,
//! so the methods are paired. Randomized methods draw the largest candidate
//! count once and read smaller counts off the prefix of the same stream.

use std::sync::Arc;

use crate::ccdf::CcdfTable;
use crate::config::{ExperimentConfig, Method};
use crate::error::{Error, Result};
use crate::ofdm::{ensemble_average_power, generate_symbols, ConstellationSpec, PowerRatio};
use crate::par::{map_indexed, Execution};
use crate::pts::{
    make_partition, papr_of_rotation, peak_matrices, symbol_matrix, Partition, PeakMatrixSet, PhaseAlphabet,
    RotationVector, SymbolMatrix,
};
use crate::randomize::{best_of_n, phase_random_candidates, CandidateSet, GaussianSampler};
use crate::relax::{build_relaxation, rank1_approximation};
use crate::sdp::{solve_minmax, solve_quartic, SolverConfig, SolverReport};
use crate::search::brute_force;
use crate::seed::trial_rng;
use crate::upper_bound::quartic_spec;

const SYMBOLS: u64 = 0;
const PARTITION: u64 = 1;
const RAND_PAPR: u64 = 2;
const RAND_UPPER: u64 = 3;
const PHASE_RANDOM: u64 = 4;

/// Everything measured on one trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: usize,
    pub p_av: f64,
    /// `lambda* / P_av` from the relaxed peak problem, when it was solved.
    pub lower_bound: Option<PowerRatio>,
    pub relaxation_report: Option<SolverReport>,
    pub quartic_report: Option<SolverReport>,
    /// `(column, PMEPR)` in column order.
    pub results: Vec<(String, PowerRatio)>,
}

impl TrialOutcome {
    pub fn get(&self, column: &str) -> Option<PowerRatio> {
        self.results.iter().find(|(c, _)| c == column).map(|(_, v)| *v)
    }
}

/// The partition used for every trial of an experiment.
pub fn experiment_partition(config: &ExperimentConfig) -> Result<Partition> {
    make_partition(
        config.k,
        config.p,
        config.partition,
        &mut trial_rng(config.seed, u64::MAX, PARTITION),
    )
}

/// The symbol matrix and peak rows of trial `trial`.
pub fn trial_instance(
    config: &ExperimentConfig,
    partition: &Partition,
    trial: usize,
) -> Result<(SymbolMatrix, PeakMatrixSet, f64)> {
    let constellation = Arc::new(ConstellationSpec::by_name(&config.constellation)?);
    let symbols = generate_symbols(
        config.k,
        &constellation,
        &mut trial_rng(config.seed, trial as u64, SYMBOLS),
    )?;
    let matrix = symbol_matrix(symbols.symbols(), partition)?;
    let peaks = peak_matrices(&matrix, config.j)?;
    let p_av = ensemble_average_power(&constellation, config.k)?;
    Ok((matrix, peaks, p_av))
}

fn push_candidates(
    results: &mut Vec<(String, PowerRatio)>,
    method: Method,
    set: &CandidateSet,
    counts: &[usize],
) -> Result<()> {
    for &n in counts {
        results.push((format!("{method}-N{n}"), set.best_of_prefix(n)?.1));
    }
    Ok(())
}

fn require_converged(report: &SolverReport, what: &str) -> Result<()> {
    if report.converged {
        Ok(())
    } else {
        Err(Error::Numeric(format!(
            "{what} solver did not converge ({} Newton steps, gap bound {:e})",
            report.iterations, report.gap_bound
        )))
    }
}

/// Run every enabled method on one trial.
pub fn run_trial(
    config: &ExperimentConfig,
    partition: &Partition,
    trial: usize,
    solver: &SolverConfig,
) -> Result<TrialOutcome> {
    let (matrix, peaks, p_av) = trial_instance(config, partition, trial)?;
    let order = config.l;
    let alphabet = PhaseAlphabet::new(order)?;
    let n_max = config.max_candidates();
    let seed = config.seed;
    let t = trial as u64;
    let mut out = TrialOutcome {
        trial,
        p_av,
        lower_bound: None,
        relaxation_report: None,
        quartic_report: None,
        results: Vec::new(),
    };
    let wants = |m| config.methods.contains(&m);

    let relaxed = if wants(Method::L2Approx) || wants(Method::RandPapr) {
        let problem = build_relaxation(&peaks, order)?;
        let (solution, report) = solve_minmax(&problem, solver)?;
        require_converged(&report, "relaxation")?;
        out.lower_bound = Some(PowerRatio::from_linear(solution.lambda_star / p_av));
        out.relaxation_report = Some(report);
        Some(solution)
    } else {
        None
    };

    for &method in &config.methods {
        match method {
            Method::Original => {
                let b = RotationVector::identity(config.p, &alphabet);
                out.results
                    .push((method.to_string(), papr_of_rotation(&peaks, &b, p_av)?));
            }
            Method::BruteForce => {
                if trial < config.brute_force_limit() {
                    let r = brute_force(&peaks, order, p_av, Execution::Sequential)?;
                    out.results.push((method.to_string(), r.best_papr));
                }
            }
            Method::L2Approx => {
                let sol = relaxed.as_ref().expect("solved above");
                let b = rank1_approximation(sol, order)?;
                out.results
                    .push((method.to_string(), papr_of_rotation(&peaks, &b, p_av)?));
            }
            Method::RandPapr => {
                let sol = relaxed.as_ref().expect("solved above");
                let sampler = GaussianSampler::new(sol.x_star.clone());
                let set = best_of_n(&peaks, &sampler, order, n_max, p_av, &mut trial_rng(seed, t, RAND_PAPR))?;
                push_candidates(&mut out.results, method, &set, &config.candidates)?;
            }
            Method::RandUpper => {
                let spec = quartic_spec(&matrix).for_alphabet(order)?;
                let (x, report) = solve_quartic(&spec, solver)?;
                require_converged(&report, "quartic")?;
                out.quartic_report = Some(report);
                let sampler = GaussianSampler::new(x);
                let set = best_of_n(
                    &peaks,
                    &sampler,
                    order,
                    n_max,
                    p_av,
                    &mut trial_rng(seed, t, RAND_UPPER),
                )?;
                push_candidates(&mut out.results, method, &set, &config.candidates)?;
            }
            Method::PhaseRandom => {
                let set = phase_random_candidates(&peaks, order, n_max, p_av, &mut trial_rng(seed, t, PHASE_RANDOM))?;
                push_candidates(&mut out.results, method, &set, &config.candidates)?;
            }
        }
    }
    Ok(out)
}

/// Run all trials; the first failing trial (by index) is reported.
pub fn run_trials(config: &ExperimentConfig, exec: Execution) -> Result<Vec<TrialOutcome>> {
    config.validate()?;
    let partition = experiment_partition(config)?;
    let solver = SolverConfig::default();
    map_indexed(exec, config.trials, |t| {
        run_trial(config, &partition, t, &solver).map_err(|e| Error::Trial {
            trial: t,
            source: Box::new(e),
        })
    })
    .into_iter()
    .collect()
}

/// Aggregate trial outcomes into a CCDF table with the configured columns.
pub fn tabulate(config: &ExperimentConfig, outcomes: &[TrialOutcome]) -> Result<CcdfTable> {
    let columns = config
        .columns()
        .into_iter()
        .map(|name| {
            let samples: Vec<f64> = outcomes.iter().filter_map(|o| o.get(&name)).map(|r| r.db).collect();
            (name, samples)
        })
        .collect();
    CcdfTable::from_samples(columns)
}

pub fn run_experiment(config: &ExperimentConfig, exec: Execution) -> Result<CcdfTable> {
    tabulate(config, &run_trials(config, exec)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::parse("K = 16\nP = 4\nL = 2\nJ = 4\ntrials = 6\ncandidates = 3, 7\nseed = 5").unwrap()
    }

    #[test]
    fn original_only_single_trial() {
        let mut c = small();
        c.methods = vec![Method::Original];
        c.trials = 1;
        let t = run_experiment(&c, Execution::Sequential).unwrap();
        assert_eq!(t.columns.len(), 1);
        let p = &t.columns[0].probabilities;
        assert_eq!(p[0], 1.0);
        assert_eq!(*p.last().unwrap(), 0.0);
        assert!(p.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn all_methods_paired_and_deterministic() {
        let c = small();
        let a = run_trials(&c, Execution::Parallel).unwrap();
        let b = run_trials(&c, Execution::Sequential).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.results, y.results);
            let bf = x.get("brute-force").unwrap().linear;
            for (name, v) in &x.results {
                assert!(bf <= v.linear * (1.0 + 1e-12), "{name}");
            }
            assert!(x.get("rand-papr-N7").unwrap().linear <= x.get("rand-papr-N3").unwrap().linear);
            let lb = x.lower_bound.unwrap().linear;
            assert!(lb <= bf * (1.0 + 1e-6));
        }
        assert_eq!(
            tabulate(&c, &a).unwrap().to_csv_string(),
            tabulate(&c, &b).unwrap().to_csv_string()
        );
    }

    #[test]
    fn brute_force_trial_cap() {
        let mut c = small();
        c.brute_force_trials = Some(2);
        c.methods = vec![Method::Original, Method::BruteForce];
        let t = run_experiment(&c, Execution::Sequential).unwrap();
        assert_eq!(t.column("brute-force").unwrap().trials, Some(2));
        assert_eq!(t.column("original").unwrap().trials, Some(6));
    }

    #[test]
    fn invalid_config_is_reported_as_config_error() {
        let mut c = small();
        c.k = 18;
        assert!(run_trials(&c, Execution::Sequential).unwrap_err().is_config_error());
    }
}
