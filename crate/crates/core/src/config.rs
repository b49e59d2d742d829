//! Experiment configuration: a flat `key = value` file with presets and
//! command-line overrides.
//!
//! Grammar: one `key = value` per line, `#` starts a comment, blank lines
//! are ignored, keys are case-insensitive. A `preset` key, wherever it
//! appears, is applied first; the remaining keys then override it in order.
//!
//! | key | value |
//! |-----|-------|
//! | `preset` | `fig1`, `fig2`, `fig3` (full scale) or `fig1-desk`, `fig2-desk`, `fig3-desk` |
//! | `K`, `P`, `L`, `J` | positive integers |
//! | `trials` | Monte-Carlo trial count |
//! | `brute_force_trials` | trials that also run brute force (`all` for every trial) |
//! | `seed` | master seed |
//! | `methods` | comma list of `original`, `brute-force`, `l2-approx`, `rand-papr`, `rand-upper`, `phase-random` |
//! | `candidates` | comma list of candidate counts `N` |
//! | `partition` | `adjacent`, `interleaved` or `random` |
//! | `constellation` | `16qam`, `qpsk` or `bpsk` |
//! | `out` | output CSV path |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pts::PartitionScheme;
use crate::search::{candidate_count, ENUMERATION_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Original,
    BruteForce,
    L2Approx,
    RandPapr,
    RandUpper,
    PhaseRandom,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Original,
        Method::BruteForce,
        Method::L2Approx,
        Method::RandPapr,
        Method::RandUpper,
        Method::PhaseRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Original => "original",
            Method::BruteForce => "brute-force",
            Method::L2Approx => "l2-approx",
            Method::RandPapr => "rand-papr",
            Method::RandUpper => "rand-upper",
            Method::PhaseRandom => "phase-random",
        }
    }

    /// Whether the method draws `N` candidates.
    pub fn is_sampled(self) -> bool {
        matches!(self, Method::RandPapr | Method::RandUpper | Method::PhaseRandom)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub k: usize,
    pub p: usize,
    pub l: usize,
    pub j: usize,
    /// Sorted and deduplicated.
    pub methods: Vec<Method>,
    /// Sorted and deduplicated.
    pub candidates: Vec<usize>,
    pub trials: usize,
    /// `None` runs brute force on every trial.
    pub brute_force_trials: Option<usize>,
    pub seed: u64,
    pub partition: PartitionScheme,
    pub constellation: String,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset("fig1-desk").expect("built-in preset")
    }
}

impl ExperimentConfig {
    /// Built-in presets. Full scale: `K = 256`, `J = 16`, 2000 trials with
    /// brute force on the first 200. Desk scale: `K = 64`, `J = 8`, 500
    /// trials with brute force on all of them. Figures 1-3 use
    /// `(P, L) = (16, 2), (8, 4), (8, 8)` at full scale; the desk versions
    /// use `P = 8` throughout. The `L = 8` presets omit brute force.
    pub fn preset(name: &str) -> Result<Self> {
        let (fig, desk) = match name.to_ascii_lowercase().as_str() {
            "fig1" => (1, false),
            "fig2" => (2, false),
            "fig3" => (3, false),
            "fig1-desk" => (1, true),
            "fig2-desk" => (2, true),
            "fig3-desk" => (3, true),
            other => return Err(Error::Config(format!("unknown preset '{other}'"))),
        };
        let (p, l) = match (fig, desk) {
            (1, false) => (16, 2),
            (1, true) => (8, 2),
            (2, _) => (8, 4),
            _ => (8, 8),
        };
        let methods = Method::ALL
            .into_iter()
            .filter(|&m| !(l == 8 && m == Method::BruteForce))
            .collect();
        Ok(ExperimentConfig {
            k: if desk { 64 } else { 256 },
            p,
            l,
            j: if desk { 8 } else { 16 },
            methods,
            candidates: vec![10, 70],
            trials: if desk { 500 } else { 2000 },
            brute_force_trials: if desk { None } else { Some(200) },
            seed: 1,
            partition: PartitionScheme::Adjacent,
            constellation: "16qam".into(),
            out: None,
        })
    }

    /// Parse the config file grammar described in the module docs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value', got '{line}'", lineno + 1)))?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        Self::from_pairs(&pairs)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Start from the preset named among `pairs` (or the default), then apply
    /// the other pairs in order.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let preset = pairs
            .iter()
            .rev()
            .find(|(k, _)| k.eq_ignore_ascii_case("preset"))
            .map(|(_, v)| v.as_str());
        let mut cfg = match preset {
            Some(name) => Self::preset(name)?,
            None => Self::default(),
        };
        for (k, v) in pairs {
            if !k.eq_ignore_ascii_case("preset") {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn int<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("'{key}' expects an integer, got '{value}'")))
        }
        let value = value.trim();
        match key.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "k" => self.k = int(key, value)?,
            "p" => self.p = int(key, value)?,
            "l" => self.l = int(key, value)?,
            "j" => self.j = int(key, value)?,
            "trials" => self.trials = int(key, value)?,
            "seed" => self.seed = int(key, value)?,
            "brute_force_trials" => {
                self.brute_force_trials = if value.eq_ignore_ascii_case("all") {
                    None
                } else {
                    Some(int(key, value)?)
                }
            }
            "methods" => {
                let mut m = split_list(value).map(str::parse).collect::<Result<Vec<Method>>>()?;
                m.sort();
                m.dedup();
                self.methods = m;
            }
            "candidates" | "n_candidates" => {
                let mut n = split_list(value)
                    .map(|v| int::<usize>(key, v))
                    .collect::<Result<Vec<_>>>()?;
                n.sort_unstable();
                n.dedup();
                self.candidates = n;
            }
            "partition" => self.partition = value.parse()?,
            "constellation" => self.constellation = value.to_string(),
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "preset" => *self = Self::preset(value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.k == 0 || self.p == 0 || self.j == 0 {
            return fail(format!(
                "K, P and J must be >= 1 (K = {}, P = {}, J = {})",
                self.k, self.p, self.j
            ));
        }
        if self.k < self.p || (self.partition != PartitionScheme::Random && !self.k.is_multiple_of(self.p)) {
            return fail(format!(
                "K = {} must be a multiple of P = {} unless the partition is random",
                self.k, self.p
            ));
        }
        if self.l < 2 {
            return fail(format!("L = {} must be >= 2", self.l));
        }
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if self.methods.iter().any(|m| m.is_sampled()) && (self.candidates.is_empty() || self.candidates[0] == 0) {
            return fail("candidate counts must be non-empty and >= 1".into());
        }
        if self.methods.contains(&Method::BruteForce) {
            let n = candidate_count(self.p, self.l);
            if n > ENUMERATION_LIMIT as u128 {
                return Err(Error::EnumerationTooLarge {
                    candidates: n,
                    limit: ENUMERATION_LIMIT,
                });
            }
        }
        crate::ofdm::ConstellationSpec::by_name(&self.constellation)?;
        Ok(())
    }

    pub fn brute_force_limit(&self) -> usize {
        self.brute_force_trials.unwrap_or(self.trials).min(self.trials)
    }

    pub fn max_candidates(&self) -> usize {
        self.candidates.last().copied().unwrap_or(0)
    }

    /// CSV column names in output order.
    pub fn columns(&self) -> Vec<String> {
        let mut cols = Vec::new();
        for &m in &self.methods {
            if m.is_sampled() {
                cols.extend(self.candidates.iter().map(|n| format!("{m}-N{n}")));
            } else {
                cols.push(m.name().to_string());
            }
        }
        cols
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}
