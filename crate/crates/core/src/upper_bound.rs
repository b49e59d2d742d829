//! Correlation-based upper bound on the envelope and its quartic surrogate.
//!
//! For `c = A b`, `|s(t)|^2 <= sum |c_k|^2 + 2 sum_{i>=1} |rho(i)|` where
//! `rho` is the aperiodic autocorrelation of `c`. The squared l2 norm of
//! `rho_hat = (rho(0), sqrt2 rho(1), ...)` splits into periodic and odd-periodic
//! correlations that the DFT (`V`) and the half-bin-shifted DFT (`V_hat`)
//! diagonalize, giving `||rho_hat||^2 = (K/2) sum_k (|alpha_k|^4 + |beta_k|^4)`
//! with `alpha = V A b` and `beta = V_hat A b`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::ofdm::{padded_dft, padded_idft};
use crate::pts::{RotationVector, SymbolMatrix};
use crate::randomize::{GaussianSampler, Sample};
use crate::relax::{RankOneFamily, RelaxationKind};
use crate::sdp::{QuarticObjectiveSpec, SpectrahedronPoint};

const DIRECT_LIMIT: usize = 64;

/// Aperiodic autocorrelation `rho(i) = sum_k c_k conj(c_{k+i})`, `i = 0..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Autocorrelation {
    pub rho: Vec<C64>,
}

impl Autocorrelation {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// `rho(i)`, zero for `i >= K`.
    pub fn at(&self, i: usize) -> C64 {
        self.rho.get(i).copied().unwrap_or_default()
    }

    /// `||rho_hat||^2 = rho(0)^2 + 2 sum_{i>=1} |rho(i)|^2`.
    pub fn l2_hat_squared(&self) -> f64 {
        self.rho
            .iter()
            .enumerate()
            .map(|(i, r)| if i == 0 { r.norm_sqr() } else { 2.0 * r.norm_sqr() })
            .sum()
    }

    /// `(||rho'||_1, ||rho'||_2)` with `rho' = (rho(1), ..., rho(K-1))`.
    pub fn tail_norms(&self) -> (f64, f64) {
        let tail = self.rho.iter().skip(1);
        let l1 = tail.clone().map(|r| r.norm()).sum();
        let l2 = tail.map(|r| r.norm_sqr()).sum::<f64>().sqrt();
        (l1, l2)
    }
}

pub fn autocorrelation_direct(c: &[C64]) -> Autocorrelation {
    let k = c.len();
    let rho = (0..k)
        .map(|i| (0..k - i).map(|n| c[n] * c[n + i].conj()).sum())
        .collect();
    Autocorrelation { rho }
}

pub fn autocorrelation_fft(c: &[C64]) -> Autocorrelation {
    let k = c.len();
    let n = (2 * k).next_power_of_two();
    let spec: Vec<C64> = padded_dft(c, n)
        .into_iter()
        .map(|v| C64::new(v.norm_sqr(), 0.0))
        .collect();
    // The inverse transform gives sum_n c_{n+i} conj(c_n), the conjugate of rho(i).
    let r = padded_idft(&spec, n);
    let scale = 1.0 / n as f64;
    Autocorrelation {
        rho: r[..k].iter().map(|v| v.conj() * scale).collect(),
    }
}

pub fn autocorrelation(c: &[C64]) -> Result<Autocorrelation> {
    if c.is_empty() {
        return Err(Error::invalid("autocorrelation of an empty sequence"));
    }
    Ok(if c.len() <= DIRECT_LIMIT {
        autocorrelation_direct(c)
    } else {
        autocorrelation_fft(c)
    })
}

/// `sum |c_k|^2 + 2 sum_{i>=1} |rho(i)|`, an upper bound on `max_t |s(t)|^2`.
pub fn envelope_bound(c: &[C64]) -> Result<f64> {
    let rho = autocorrelation(c)?;
    Ok(rho.rho[0].re + 2.0 * rho.rho.iter().skip(1).map(|r| r.norm()).sum::<f64>())
}

/// The unitary matrices and diagonal phases that diagonalize the cyclic
/// shift `B(k)_{1,1}` and the negacyclic shift `B(k)_{-1,1}`, zero-based:
///
/// * `V[m,n] = exp(-2 pi j m n / K) / sqrt K`, `D(k)[n] = exp(-2 pi j k n / K)`;
/// * `V_hat[m,n] = exp(-2 pi j n (m + 1/2) / K) / sqrt K`,
///   `D_hat(k)[n] = exp(-2 pi j k (n + 1/2) / K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalizationKit {
    k: usize,
    pub v: DMatrix<C64>,
    pub v_hat: DMatrix<C64>,
}

pub fn build_kit(k: usize) -> Result<DiagonalizationKit> {
    if k < 2 {
        return Err(Error::invalid(format!("diagonalization needs K >= 2, got {k}")));
    }
    let kf = k as f64;
    let s = 1.0 / kf.sqrt();
    let v = DMatrix::from_fn(k, k, |m, n| C64::cis(-2.0 * PI * ((m * n) % k) as f64 / kf) * s);
    let v_hat = DMatrix::from_fn(k, k, |m, n| C64::cis(-2.0 * PI * n as f64 * (m as f64 + 0.5) / kf) * s);
    Ok(DiagonalizationKit { k, v, v_hat })
}

impl DiagonalizationKit {
    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn d(&self, shift: usize) -> Vec<C64> {
        let kf = self.k as f64;
        (0..self.k)
            .map(|n| C64::cis(-2.0 * PI * ((shift * n) % self.k) as f64 / kf))
            .collect()
    }

    pub fn d_hat(&self, shift: usize) -> Vec<C64> {
        let kf = self.k as f64;
        (0..self.k)
            .map(|n| C64::cis(-2.0 * PI * shift as f64 * (n as f64 + 0.5) / kf))
            .collect()
    }

    /// `[[0, sign I_k], [I_{K-k}, 0]]`.
    pub fn shift_matrix(&self, shift: usize, sign: f64) -> DMatrix<C64> {
        let k = self.k;
        DMatrix::from_fn(k, k, |a, b| {
            if shift == 0 {
                return if a == b { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            }
            if a < shift && b == a + k - shift {
                C64::new(sign, 0.0)
            } else if a >= shift && b == a - shift {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `||B - U^H diag(d) U||_F` for the cyclic (`negacyclic = false`) or negacyclic shift.
    pub fn residual(&self, shift: usize, negacyclic: bool) -> f64 {
        let (u, d, sign) = if negacyclic {
            (&self.v_hat, self.d_hat(shift), -1.0)
        } else {
            (&self.v, self.d(shift), 1.0)
        };
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
        (self.shift_matrix(shift, sign) - u.adjoint() * diag * u).norm()
    }
}

/// `||rho_hat||^2` of the rotated symbol vector `A b`.
pub fn l2_correlation_norm(b: &RotationVector, matrix: &SymbolMatrix) -> Result<f64> {
    Ok(autocorrelation(&matrix.rotated(b)?)?.l2_hat_squared())
}

/// Rows of `V A` followed by rows of `V_hat A`, computed by FFT.
fn spectral_rows(matrix: &SymbolMatrix) -> Vec<C64> {
    let k = matrix.carriers();
    let p = matrix.subsets();
    let s = 1.0 / (k as f64).sqrt();
    let mut rows = vec![C64::new(0.0, 0.0); 2 * k * p];
    for q in 0..p {
        let col = matrix.column(q);
        let alpha = padded_dft(&col, k);
        let twisted: Vec<C64> = col
            .iter()
            .enumerate()
            .map(|(n, &c)| c * C64::cis(-PI * n as f64 / k as f64))
            .collect();
        let beta = padded_dft(&twisted, k);
        for m in 0..k {
            rows[m * p + q] = alpha[m] * s;
            rows[(k + m) * p + q] = beta[m] * s;
        }
    }
    rows
}

/// Masks `M_k = r_k^H r_k` for the rows `r_k` of `V A` and `V_hat A`, so that
/// `F(b) = sum_k (b^H M_k b)^2` and `||rho_hat||^2 = (K/2) F(b)`. The masks are
/// returned in the complex Hermitian shape; use `for_alphabet` to re-read them.
pub fn quartic_spec(matrix: &SymbolMatrix) -> QuarticObjectiveSpec {
    QuarticObjectiveSpec::from_family(RankOneFamily::new(
        RelaxationKind::Hermitian,
        matrix.subsets(),
        spectral_rows(matrix),
    ))
}

/// `F(b) = sum_k |r_k b|^4` on arbitrary complex `b`.
pub fn quartic_value(spec: &QuarticObjectiveSpec, b: &[C64]) -> f64 {
    let fam = spec.family();
    (0..fam.len())
        .map(|k| {
            fam.row(k)
                .iter()
                .zip(b)
                .map(|(r, x)| r * x)
                .sum::<C64>()
                .norm_sqr()
                .powi(2)
        })
        .sum()
}

/// `F` at the mixture minus the chord, arranged so both endpoints and
/// coincident points give exactly zero.
pub fn convexity_violation(spec: &QuarticObjectiveSpec, b1: &[C64], b2: &[C64], gamma: f64) -> f64 {
    let (f1, f2) = (quartic_value(spec, b1), quartic_value(spec, b2));
    let (mix, chord): (Vec<C64>, f64) = if gamma < 0.5 {
        (
            b1.iter().zip(b2).map(|(x, y)| y + (x - y) * gamma).collect(),
            f2 + gamma * (f1 - f2),
        )
    } else {
        let g = 1.0 - gamma;
        (
            b1.iter().zip(b2).map(|(x, y)| x + (y - x) * g).collect(),
            f1 + g * (f2 - f1),
        )
    };
    quartic_value(spec, &mix) - chord
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityReport {
    pub max_violation: f64,
    /// Largest endpoint value of `F` seen.
    pub scale: f64,
}

/// Random chords `b1, b2 ~ CN(0, I)`, `gamma ~ U[0, 1]`.
pub fn convexity_probe<R: Rng + ?Sized>(
    spec: &QuarticObjectiveSpec,
    trials: usize,
    rng: &mut R,
) -> Result<ConvexityReport> {
    if trials == 0 {
        return Err(Error::invalid("convexity probe needs at least one trial"));
    }
    let p = spec.family().subsets();
    let draw = |rng: &mut R| -> Vec<C64> {
        (0..p)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect()
    };
    let mut report = ConvexityReport {
        max_violation: f64::NEG_INFINITY,
        scale: 0.0,
    };
    for _ in 0..trials {
        let b1 = draw(rng);
        let b2 = draw(rng);
        let gamma: f64 = rng.random();
        let v = convexity_violation(spec, &b1, &b2, gamma);
        report.max_violation = report.max_violation.max(v);
        report.scale = report.scale.max(quartic_value(spec, &b1)).max(quartic_value(spec, &b2));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    /// Monte-Carlo mean of `(xi^H G xi)^2`.
    pub estimate: f64,
    pub std_error: f64,
    /// `Tr(G X)`.
    pub trace: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// Check `Tr(GX)^2 <= E (xi^H G xi)^2 <= 3 Tr(GX)^2` by Monte Carlo with a
/// three-standard-error allowance, `xi` drawn from `N(0, X)` or `CN(0, X)`
/// according to the field of `X`.
pub fn moment_sandwich_probe<R: Rng + ?Sized>(
    g: &DMatrix<C64>,
    x: &SpectrahedronPoint,
    samples: usize,
    rng: &mut R,
) -> Result<SandwichReport> {
    if samples < 10_000 {
        return Err(Error::invalid(format!(
            "moment probe needs >= 10^4 samples, got {samples}"
        )));
    }
    let d = x.dimension();
    if g.nrows() != d || g.ncols() != d {
        return Err(Error::invalid("G and X dimensions differ"));
    }
    let trace = crate::linalg::trace_product(g, x.matrix()).re;
    let sampler = GaussianSampler::new(x.clone());
    let values: Vec<f64> = (0..samples)
        .map(|_| {
            let v: Vec<C64> = match sampler.draw(rng) {
                Sample::Real(v) => v.into_iter().map(|a| C64::new(a, 0.0)).collect(),
                Sample::Complex(v) => v,
            };
            let mut q = C64::new(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    q += v[i].conj() * g[(i, j)] * v[j];
                }
            }
            q.re * q.re
        })
        .collect();
    let n = samples as f64;
    let estimate = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - estimate).powi(2)).sum::<f64>() / (n - 1.0);
    let std_error = (var / n).sqrt();
    let t2 = trace * trace;
    Ok(SandwichReport {
        estimate,
        std_error,
        trace,
        lower_ok: t2 - 3.0 * std_error <= estimate,
        upper_ok: estimate <= 3.0 * t2 + 3.0 * std_error,
    })
}
