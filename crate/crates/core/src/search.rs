//! Exhaustive search over `Omega_L^{P-1}` with `b_1 = 1`.
//!
//! Candidates are visited in a modular Gray order so consecutive vectors
//! differ in one coordinate and each `u_n . b` is updated with a single
//! multiply-add. The space is cut into fixed chunks whose running sums are
//! rebuilt exactly at the chunk start, so the result is the same whichever
//! execution policy runs the chunks.

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::ofdm::PowerRatio;
use crate::par::{map_indexed, Execution};
use crate::pts::{papr_of_rotation, PeakMatrixSet, PhaseAlphabet, RotationVector};

/// Largest enumeration `brute_force` agrees to run.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub best_rotation: RotationVector,
    pub best_papr: PowerRatio,
    pub candidates_evaluated: u64,
}

pub fn candidate_count(p: usize, order: usize) -> u128 {
    (order as u128).saturating_pow(p.saturating_sub(1) as u32)
}

/// Gray vector of counter `c`: digit `i` is `(c_i - c_{i+1}) mod L`.
fn gray_digits(c: u64, order: usize, len: usize) -> Vec<usize> {
    let l = order as u64;
    let mut plain = Vec::with_capacity(len + 1);
    let mut rest = c;
    for _ in 0..len {
        plain.push((rest % l) as usize);
        rest /= l;
    }
    plain.push(0);
    (0..len).map(|i| (plain[i] + order - plain[i + 1]) % order).collect()
}

fn mixed_radix(digits: &[usize], order: usize) -> u64 {
    digits.iter().rev().fold(0u64, |acc, &d| acc * order as u64 + d as u64)
}

/// Chunk best as `(peak power, mixed-radix index, digits)`.
type Best = (f64, u64, Vec<usize>);

fn better(a: &Best, b: &Best) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn scan_chunk(peaks: &PeakMatrixSet, alphabet: &PhaseAlphabet, start: u64, end: u64) -> Best {
    let p = peaks.subsets();
    let order = alphabet.order();
    let free = p - 1;
    let mut digits = gray_digits(start, order, free);
    let phase = |d: &[usize], q: usize| {
        if q == 0 {
            C64::new(1.0, 0.0)
        } else {
            alphabet.element(d[q - 1])
        }
    };
    let mut y: Vec<C64> = peaks
        .rows()
        .map(|u| (0..p).map(|q| u[q] * phase(&digits, q)).sum())
        .collect();
    let peak = |y: &[C64]| y.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let mut best = (peak(&y), mixed_radix(&digits, order), digits.clone());
    let l = order as u64;
    for c in start..end.saturating_sub(1) {
        // Step c -> c + 1 advances the Gray digit at the count of trailing (L-1) digits.
        let mut j = 0;
        let mut rest = c;
        while rest % l == l - 1 {
            rest /= l;
            j += 1;
        }
        let old = alphabet.element(digits[j]);
        digits[j] = (digits[j] + 1) % order;
        let delta = alphabet.element(digits[j]) - old;
        for (n, u) in peaks.rows().enumerate() {
            y[n] += u[j + 1] * delta;
        }
        let cand = (peak(&y), mixed_radix(&digits, order), Vec::new());
        if better(&cand, &best) {
            best = (cand.0, cand.1, digits.clone());
        }
    }
    best
}

/// Global PMEPR minimum over all rotations with `b_1 = 1`; ties go to the
/// smallest little-endian mixed-radix index of the phase indices.
pub fn brute_force(peaks: &PeakMatrixSet, order: usize, p_av: f64, exec: Execution) -> Result<BruteForceResult> {
    let alphabet = PhaseAlphabet::new(order)?;
    if p_av.is_nan() || p_av <= 0.0 {
        return Err(Error::invalid(format!("average power must be > 0, got {p_av}")));
    }
    let p = peaks.subsets();
    let total = candidate_count(p, order);
    if total > ENUMERATION_LIMIT as u128 {
        return Err(Error::EnumerationTooLarge {
            candidates: total,
            limit: ENUMERATION_LIMIT,
        });
    }
    let total = total as u64;
    let chunks = total.div_ceil(CHUNK) as usize;
    let bests = map_indexed(exec, chunks, |i| {
        let start = i as u64 * CHUNK;
        scan_chunk(peaks, &alphabet, start, (start + CHUNK).min(total))
    });
    let (_, _, digits) = bests
        .into_iter()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .expect("at least one chunk");
    let mut indices = vec![0];
    indices.extend(digits);
    let best_rotation = RotationVector::from_indices(indices, &alphabet);
    let best_papr = papr_of_rotation(peaks, &best_rotation, p_av)?;
    Ok(BruteForceResult {
        best_rotation,
        best_papr,
        candidates_evaluated: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{generate_symbols, ConstellationSpec};
    use crate::pts::{make_partition, peak_matrices, symbol_matrix, PartitionScheme};
    use crate::seed::rng_from_seed;
    use std::collections::HashSet;
    use std::sync::Arc;

    fn peaks(k: usize, p: usize, seed: u64) -> PeakMatrixSet {
        let mut rng = rng_from_seed(seed);
        let c = Arc::new(ConstellationSpec::qam16());
        let s = generate_symbols(k, &c, &mut rng).unwrap();
        let part = make_partition(k, p, PartitionScheme::Adjacent, &mut rng).unwrap();
        peak_matrices(&symbol_matrix(s.symbols(), &part).unwrap(), 4).unwrap()
    }

    fn naive(pk: &PeakMatrixSet, order: usize) -> (f64, Vec<usize>) {
        let alphabet = PhaseAlphabet::new(order).unwrap();
        let free = pk.subsets() - 1;
        let mut best = (f64::INFINITY, vec![]);
        for idx in 0..order.pow(free as u32) {
            let mut digits = vec![0];
            let mut r = idx;
            for _ in 0..free {
                digits.push(r % order);
                r /= order;
            }
            let b = RotationVector::from_indices(digits.clone(), &alphabet);
            let v = pk.peak_power(b.phases());
            if v < best.0 {
                best = (v, digits);
            }
        }
        best
    }

    #[test]
    fn gray_order_visits_every_vector_once() {
        for (order, len) in [(2usize, 5usize), (3, 4), (4, 3), (8, 2)] {
            let total = (order as u64).pow(len as u32);
            let mut seen = HashSet::new();
            let mut prev = gray_digits(0, order, len);
            seen.insert(prev.clone());
            for c in 1..total {
                let g = gray_digits(c, order, len);
                let changed = g.iter().zip(&prev).filter(|(a, b)| a != b).count();
                assert_eq!(changed, 1);
                seen.insert(g.clone());
                prev = g;
            }
            assert_eq!(seen.len() as u64, total);
        }
    }

    #[test]
    fn single_subset_is_identity() {
        let pk = peaks(16, 1, 1);
        let r = brute_force(&pk, 2, 16.0, Execution::Sequential).unwrap();
        assert_eq!(r.candidates_evaluated, 1);
        assert_eq!(r.best_rotation.indices(), &[0]);
    }

    #[test]
    fn counts_candidates() {
        let pk = peaks(16, 2, 2);
        assert_eq!(
            brute_force(&pk, 2, 16.0, Execution::Sequential)
                .unwrap()
                .candidates_evaluated,
            2
        );
        let pk = peaks(32, 4, 2);
        assert_eq!(
            brute_force(&pk, 4, 32.0, Execution::Sequential)
                .unwrap()
                .candidates_evaluated,
            64
        );
    }

    #[test]
    fn matches_naive_enumeration() {
        for (seed, p, order) in [(3u64, 4usize, 2usize), (4, 4, 4), (5, 3, 8), (6, 8, 2), (7, 4, 3)] {
            let pk = peaks(48, p, seed);
            let r = brute_force(&pk, order, 1.0, Execution::Sequential).unwrap();
            let (v, digits) = naive(&pk, order);
            assert!((r.best_papr.linear - v).abs() <= 1e-10 * v);
            assert_eq!(r.best_rotation.indices(), digits.as_slice());
        }
    }

    #[test]
    fn policies_agree_across_chunks() {
        let pk = peaks(60, 15, 8);
        let a = brute_force(&pk, 2, 32.0, Execution::Sequential).unwrap();
        let b = brute_force(&pk, 2, 32.0, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.candidates_evaluated, 1 << 14);
    }

    #[test]
    fn refuses_large_enumerations() {
        let pk = peaks(32, 16, 9);
        let err = brute_force(&pk, 4, 32.0, Execution::Sequential).unwrap_err();
        assert!(matches!(err, Error::EnumerationTooLarge { .. }));
        assert!(err.is_config_error());
    }
}
