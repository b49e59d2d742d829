//! Peak-power reduction for OFDM by partial transmit sequences, with the
//! rotation vector chosen by semidefinite relaxation and Gaussian
//! randomization.
//!
//! The pipeline for one OFDM symbol is:
//!
//! 1. draw symbols and split the carriers into `P` subsets ([`pts`]);
//! 2. build the `JK` rank-1 peak matrices and relax `min_b max_n b^H C_n b`
//!    over `b` in `Omega_L^P` to a problem over the spectrahedron ([`relax`]);
//! 3. solve it ([`sdp`]), then round the leading eigenvector or Gaussian
//!    draws onto the alphabet ([`randomize`]);
//! 4. alternatively minimize the quartic correlation surrogate ([`upper_bound`]).
//!
//! [`experiment`] runs these side by side over many trials and tabulates
//! CCDFs ([`ccdf`]).

pub mod ccdf;
pub mod config;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod ofdm;
pub mod par;
pub mod pts;
pub mod randomize;
pub mod relax;
pub mod sdp;
pub mod search;
pub mod seed;
pub mod upper_bound;

pub use ccdf::{emit_csv, merge, parse_csv, CcdfTable};
pub use config::{ExperimentConfig, Method};
pub use error::{Error, Result};
pub use experiment::{run_experiment, run_trials};
pub use linalg::C64;
pub use par::Execution;
