//! OFDM baseband synthesis on an oversampled grid and peak-power measurement.
//!
//! Time is normalized so the symbol duration is 1. Carrier `k` (zero-based)
//! sits at frequency `k`, so `s(t) = sum_k A_k exp(2 pi j k t)` for `t` in `[0, 1)`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::C64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized inverse DFT of `input` zero-padded to `len` points:
/// `out[n] = sum_k input[k] exp(2 pi j k n / len)`.
pub(crate) fn padded_idft(input: &[C64], len: usize) -> Vec<C64> {
    debug_assert!(input.len() <= len);
    let mut buf = vec![C64::new(0.0, 0.0); len];
    buf[..input.len()].copy_from_slice(input);
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len));
    fft.process(&mut buf);
    buf
}

/// Unnormalized forward DFT: `out[n] = sum_k input[k] exp(-2 pi j k n / len)`.
pub(crate) fn padded_dft(input: &[C64], len: usize) -> Vec<C64> {
    debug_assert!(input.len() <= len);
    let mut buf = vec![C64::new(0.0, 0.0); len];
    buf[..input.len()].copy_from_slice(input);
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len));
    fft.process(&mut buf);
    buf
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSpec {
    points: Vec<C64>,
    average_energy: f64,
}

impl ConstellationSpec {
    pub fn new(points: Vec<C64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("constellation has no points"));
        }
        let average_energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        if average_energy <= 0.0 {
            return Err(Error::invalid("constellation has zero average energy"));
        }
        Ok(ConstellationSpec { points, average_energy })
    }

    /// 16QAM on `{+-1, +-3} + j{+-1, +-3}`, average energy 10.
    pub fn qam16_unnormalized() -> Self {
        let levels = [-3.0, -1.0, 1.0, 3.0];
        let points = levels
            .iter()
            .flat_map(|&re| levels.iter().map(move |&im| C64::new(re, im)))
            .collect();
        Self::new(points).expect("non-empty")
    }

    /// 16QAM scaled by `1/sqrt(10)` so the average energy is 1.
    pub fn qam16() -> Self {
        let scale = 1.0 / 10f64.sqrt();
        let points = Self::qam16_unnormalized()
            .points
            .into_iter()
            .map(|p| p * scale)
            .collect();
        Self::new(points).expect("non-empty")
    }

    pub fn qpsk() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(vec![C64::new(s, s), C64::new(-s, s), C64::new(-s, -s), C64::new(s, -s)]).expect("non-empty")
    }

    pub fn bpsk() -> Self {
        Self::new(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]).expect("non-empty")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "16qam" | "qam16" => Ok(Self::qam16()),
            "qpsk" => Ok(Self::qpsk()),
            "bpsk" => Ok(Self::bpsk()),
            other => Err(Error::Config(format!("unknown constellation '{other}'"))),
        }
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn average_energy(&self) -> f64 {
        self.average_energy
    }

    pub fn max_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).fold(0.0, f64::max)
    }
}

/// The K symbols carried by one OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolVector {
    symbols: Vec<C64>,
    constellation: Option<Arc<ConstellationSpec>>,
}

impl SymbolVector {
    /// Wrap an arbitrary symbol vector (not tied to a constellation).
    pub fn new(symbols: Vec<C64>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::invalid("symbol vector must have K >= 1"));
        }
        Ok(SymbolVector {
            symbols,
            constellation: None,
        })
    }

    pub fn symbols(&self) -> &[C64] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn constellation(&self) -> Option<&ConstellationSpec> {
        self.constellation.as_deref()
    }
}

/// Draw `k` i.i.d. uniform symbols from `constellation`.
pub fn generate_symbols<R: Rng + ?Sized>(
    k: usize,
    constellation: &Arc<ConstellationSpec>,
    rng: &mut R,
) -> Result<SymbolVector> {
    if k == 0 {
        return Err(Error::invalid("carrier count K must be >= 1"));
    }
    let pts = constellation.points();
    let symbols = (0..k).map(|_| pts[rng.random_range(0..pts.len())]).collect();
    Ok(SymbolVector {
        symbols,
        constellation: Some(Arc::clone(constellation)),
    })
}

/// `P_av = K * E{|A|^2}`.
pub fn ensemble_average_power(constellation: &ConstellationSpec, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("carrier count K must be >= 1"));
    }
    Ok(k as f64 * constellation.average_energy())
}

/// Baseband signal sampled at `t_n = n / (J K)`, `n = 0..JK`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<C64>,
    oversampling: usize,
    base_len: usize,
}

impl SampledSignal {
    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn base_len(&self) -> usize {
        self.base_len
    }

    pub fn peak_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max)
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

pub fn baseband_samples(symbols: &[C64], oversampling: usize) -> Result<SampledSignal> {
    if oversampling == 0 {
        return Err(Error::invalid("oversampling factor J must be >= 1"));
    }
    if symbols.is_empty() {
        return Err(Error::invalid("symbol vector must have K >= 1"));
    }
    let k = symbols.len();
    Ok(SampledSignal {
        samples: padded_idft(symbols, oversampling * k),
        oversampling,
        base_len: k,
    })
}

/// A power ratio in linear and dB form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRatio {
    pub linear: f64,
    pub db: f64,
}

impl PowerRatio {
    pub fn from_linear(linear: f64) -> Self {
        PowerRatio {
            linear,
            db: 10.0 * linear.log10(),
        }
    }
}

fn check_p_av(p_av: f64) -> Result<()> {
    if p_av.is_nan() || p_av <= 0.0 {
        return Err(Error::invalid(format!("average power must be > 0, got {p_av}")));
    }
    Ok(())
}

/// Peak-to-mean envelope power ratio over the sampled grid.
pub fn pmepr(signal: &SampledSignal, p_av: f64) -> Result<PowerRatio> {
    check_p_av(p_av)?;
    Ok(PowerRatio::from_linear(signal.peak_power() / p_av))
}

/// `sqrt(J^2 / (J^2 - pi^2/2))`: bound on continuous over sampled peak amplitude.
pub fn oversampling_bound_factor(oversampling: usize) -> Result<f64> {
    let j2 = (oversampling as f64).powi(2);
    let denom = j2 - PI * PI / 2.0;
    if denom <= 0.0 {
        return Err(Error::invalid(format!(
            "oversampling factor {oversampling} must exceed pi/sqrt(2)"
        )));
    }
    Ok((j2 / denom).sqrt())
}

/// Evaluate `s(t)` directly.
pub fn envelope_at(symbols: &[C64], t: f64) -> C64 {
    symbols
        .iter()
        .enumerate()
        .map(|(k, &a)| a * Complex64::cis(2.0 * PI * k as f64 * t))
        .sum()
}

/// Golden-section maximization of `f` on `[a, b]`; returns `(argmax, max)`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if b - a < 1e-15 {
            break;
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// RF and baseband peak measurements taken on one common time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfComparison {
    /// Peak of `Re{s(t) exp(2 pi j r t)}^2 / P_av`.
    pub papr: PowerRatio,
    /// Peak of `|s(t)|^2 / P_av`, refined to the continuous maximum.
    pub pmepr: PowerRatio,
    /// Number of grid points used before local refinement.
    pub grid_len: usize,
}

/// RF peak power on a grid with at least `8r` points per symbol (and a
/// multiple of `J K`), with each candidate grid maximum refined by
/// golden-section search on the continuous signal.
pub fn rf_comparison(symbols: &[C64], r: usize, oversampling: usize, p_av: f64) -> Result<RfComparison> {
    check_p_av(p_av)?;
    if oversampling == 0 {
        return Err(Error::invalid("oversampling factor J must be >= 1"));
    }
    let k = symbols.len();
    if k == 0 {
        return Err(Error::invalid("symbol vector must have K >= 1"));
    }
    if r < k {
        return Err(Error::invalid(format!("carrier index r = {r} must be >= K = {k}")));
    }
    let base = oversampling * k;
    let n = base * (8 * r).div_ceil(base);
    let env = padded_idft(symbols, n);
    let rf: Vec<f64> = env
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let carrier = Complex64::cis(2.0 * PI * ((r as u128 * i as u128) % n as u128) as f64 / n as f64);
            (s * carrier).re.powi(2)
        })
        .collect();
    let env_pow: Vec<f64> = env.iter().map(|s| s.norm_sqr()).collect();

    let step = 1.0 / n as f64;
    let rf_at = |t: f64| {
        (envelope_at(symbols, t) * Complex64::cis(2.0 * PI * r as f64 * t))
            .re
            .powi(2)
    };

    let local_maxima = |v: &[f64], frac: f64| -> Vec<usize> {
        let top = v.iter().copied().fold(0.0, f64::max);
        (0..n)
            .filter(|&i| {
                let prev = v[(i + n - 1) % n];
                let next = v[(i + 1) % n];
                v[i] >= prev && v[i] >= next && v[i] >= frac * top
            })
            .collect()
    };

    // Best RF peak; keep the envelope at the same instant so the pointwise
    // inequality Re{z}^2 <= |z|^2 survives rounding.
    let mut best_rf = (0.0, 0.0);
    for i in local_maxima(&rf, 0.7) {
        let t0 = i as f64 * step;
        let (t, v) = golden_max(rf_at, t0 - step, t0 + step);
        let v = v.max(rf[i]);
        if v > best_rf.0 {
            let env_here = envelope_at(symbols, t).norm_sqr().max(env_pow[i]);
            best_rf = (v, env_here);
        }
    }
    let mut best_env = best_rf.1;
    for i in local_maxima(&env_pow, 0.8) {
        let t0 = i as f64 * step;
        let (_, v) = golden_max(|t| envelope_at(symbols, t).norm_sqr(), t0 - step, t0 + step);
        best_env = best_env.max(v).max(env_pow[i]);
    }
    Ok(RfComparison {
        papr: PowerRatio::from_linear(best_rf.0 / p_av),
        pmepr: PowerRatio::from_linear(best_env / p_av),
        grid_len: n,
    })
}

/// Peak-to-average power ratio of the real RF signal with carrier `f_c = r`.
pub fn rf_papr(symbols: &[C64], r: usize, oversampling: usize, p_av: f64) -> Result<PowerRatio> {
    rf_comparison(symbols, r, oversampling, p_av).map(|c| c.papr)
}
