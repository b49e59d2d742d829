//! Gaussian randomization around a relaxation solution and rounding onto
//! the phase alphabet.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{Field, HermitianEigen, C64};
use crate::ofdm::PowerRatio;
use crate::pts::{papr_of_rotation, PeakMatrixSet, PhaseAlphabet, RotationVector};
use crate::sdp::SpectrahedronPoint;

/// One random draw, real for the `L = 2` and `L = 4` shapes, complex otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

impl Sample {
    pub fn len(&self) -> usize {
        match self {
            Sample::Real(v) => v.len(),
            Sample::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Draws `xi ~ N(0, X)` (real) or `CN(0, X)` (complex) through a factor
/// `S` with `S S^H = X`, negative eigenvalues floored at zero.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    covariance: SpectrahedronPoint,
    factor: DMatrix<C64>,
}

impl GaussianSampler {
    pub fn new(covariance: SpectrahedronPoint) -> Self {
        let eig = HermitianEigen::new(covariance.matrix(), covariance.field());
        let d = covariance.dimension();
        let factor = DMatrix::from_fn(d, d, |i, j| eig.vectors[j][i] * eig.values[j].max(0.0).sqrt());
        GaussianSampler { covariance, factor }
    }

    pub fn covariance(&self) -> &SpectrahedronPoint {
        &self.covariance
    }

    pub fn factor(&self) -> &DMatrix<C64> {
        &self.factor
    }

    pub fn field(&self) -> Field {
        self.covariance.field()
    }

    pub fn dimension(&self) -> usize {
        self.factor.nrows()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        let d = self.dimension();
        match self.field() {
            Field::Real => {
                let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                Sample::Real(
                    (0..d)
                        .map(|i| (0..d).map(|j| self.factor[(i, j)].re * g[j]).sum())
                        .collect(),
                )
            }
            Field::Complex => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let g: Vec<C64> = (0..d)
                    .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * h)
                    .collect();
                Sample::Complex(
                    (0..d)
                        .map(|i| (0..d).map(|j| self.factor[(i, j)] * g[j]).sum())
                        .collect(),
                )
            }
        }
    }
}

pub fn sample<R: Rng + ?Sized>(sampler: &GaussianSampler, n: usize, rng: &mut R) -> Result<Vec<Sample>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    Ok((0..n).map(|_| sampler.draw(rng)).collect())
}

fn sign_index(x: f64) -> bool {
    x >= 0.0
}

/// Round a draw onto `Omega_L^P`.
///
/// `L = 2` takes a real vector of length `P` and keeps signs (`sgn 0 = +1`).
/// `L = 4` takes `(Re; Im)` of length `2P` and maps the sign pair through
/// `e^{-j pi/4} (s_re + j s_im) / sqrt 2`. Other orders take a complex
/// vector and pick the sector of the argument.
pub fn round_to_alphabet(xi: &Sample, order: usize) -> Result<RotationVector> {
    let alphabet = PhaseAlphabet::new(order)?;
    let indices = match (order, xi) {
        (2, Sample::Real(v)) => v.iter().map(|&x| if sign_index(x) { 0 } else { 1 }).collect(),
        (4, Sample::Real(v)) => {
            if v.len() % 2 != 0 {
                return Err(Error::invalid(format!(
                    "L = 4 rounding needs an even-length real vector, got {}",
                    v.len()
                )));
            }
            let p = v.len() / 2;
            (0..p)
                .map(|i| match (sign_index(v[i]), sign_index(v[i + p])) {
                    (true, true) => 0,
                    (false, true) => 1,
                    (false, false) => 2,
                    (true, false) => 3,
                })
                .collect()
        }
        (2 | 4, Sample::Complex(_)) => return Err(Error::invalid(format!("L = {order} rounding expects a real draw"))),
        (_, Sample::Complex(v)) => v.iter().map(|&z| alphabet.sector_index(z)).collect(),
        (_, Sample::Real(_)) => return Err(Error::invalid(format!("L = {order} rounding expects a complex draw"))),
    };
    Ok(RotationVector::from_indices(indices, &alphabet))
}

/// Rounded candidates with their PMEPR values.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub rotations: Vec<RotationVector>,
    pub papr_values: Vec<PowerRatio>,
    pub best_index: usize,
}

impl CandidateSet {
    fn from_parts(rotations: Vec<RotationVector>, papr_values: Vec<PowerRatio>) -> Self {
        let best_index = argmin(&papr_values, papr_values.len());
        CandidateSet {
            rotations,
            papr_values,
            best_index,
        }
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn best(&self) -> (&RotationVector, PowerRatio) {
        (&self.rotations[self.best_index], self.papr_values[self.best_index])
    }

    /// Best among the first `n` candidates; earliest wins ties.
    pub fn best_of_prefix(&self, n: usize) -> Result<(&RotationVector, PowerRatio)> {
        if n == 0 || n > self.len() {
            return Err(Error::invalid(format!("prefix length {n} outside 1..={}", self.len())));
        }
        let i = argmin(&self.papr_values, n);
        Ok((&self.rotations[i], self.papr_values[i]))
    }
}

fn argmin(values: &[PowerRatio], n: usize) -> usize {
    let mut best = 0;
    for i in 1..n {
        if values[i].linear < values[best].linear {
            best = i;
        }
    }
    best
}

/// Draw `n` samples, round each and keep the one with the lowest PMEPR.
pub fn best_of_n<R: Rng + ?Sized>(
    peaks: &PeakMatrixSet,
    sampler: &GaussianSampler,
    order: usize,
    n: usize,
    p_av: f64,
    rng: &mut R,
) -> Result<CandidateSet> {
    let draws = sample(sampler, n, rng)?;
    let rotations = draws
        .iter()
        .map(|xi| round_to_alphabet(xi, order))
        .collect::<Result<Vec<_>>>()?;
    let papr_values = rotations
        .iter()
        .map(|b| papr_of_rotation(peaks, b, p_av))
        .collect::<Result<Vec<_>>>()?;
    Ok(CandidateSet::from_parts(rotations, papr_values))
}

/// `n` rotation vectors with every coordinate uniform on `Omega_L`.
pub fn phase_random<R: Rng + ?Sized>(p: usize, order: usize, n: usize, rng: &mut R) -> Result<Vec<RotationVector>> {
    if n == 0 || p == 0 {
        return Err(Error::invalid("phase_random needs P >= 1 and n >= 1"));
    }
    let alphabet = PhaseAlphabet::new(order)?;
    Ok((0..n)
        .map(|_| {
            let idx = (0..p).map(|_| rng.random_range(0..order)).collect();
            RotationVector::from_indices(idx, &alphabet)
        })
        .collect())
}

/// Candidate set built from phase-random draws.
pub fn phase_random_candidates<R: Rng + ?Sized>(
    peaks: &PeakMatrixSet,
    order: usize,
    n: usize,
    p_av: f64,
    rng: &mut R,
) -> Result<CandidateSet> {
    let rotations = phase_random(peaks.subsets(), order, n, rng)?;
    let papr_values = rotations
        .iter()
        .map(|b| papr_of_rotation(peaks, b, p_av))
        .collect::<Result<Vec<_>>>()?;
    Ok(CandidateSet::from_parts(rotations, papr_values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::embed_vector;
    use crate::seed::rng_from_seed;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    const DRAWS: usize = 100_000;

    fn identity(d: usize, field: Field) -> GaussianSampler {
        GaussianSampler::new(SpectrahedronPoint::identity(d, field))
    }

    fn random_correlation(d: usize, field: Field, rng: &mut impl Rng) -> DMatrix<C64> {
        let a = DMatrix::from_fn(d, d + 2, |_, _| {
            let im = if field == Field::Complex {
                rng.random::<f64>() - 0.5
            } else {
                0.0
            };
            C64::new(rng.random::<f64>() - 0.5, im)
        });
        let g = &a * a.adjoint();
        DMatrix::from_fn(d, d, |i, j| g[(i, j)] / (g[(i, i)].re * g[(j, j)].re).sqrt())
    }

    fn sample_covariance(draws: &[Sample], d: usize) -> DMatrix<C64> {
        let mut acc = DMatrix::<C64>::zeros(d, d);
        for s in draws {
            let v: Vec<C64> = match s {
                Sample::Real(v) => v.iter().map(|&x| C64::new(x, 0.0)).collect(),
                Sample::Complex(v) => v.clone(),
            };
            for i in 0..d {
                for j in 0..d {
                    acc[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        acc / C64::new(draws.len() as f64, 0.0)
    }

    #[test]
    fn zero_covariance_gives_zero_samples() {
        let s = GaussianSampler::new(SpectrahedronPoint::new(DMatrix::zeros(3, 3), Field::Real));
        for x in sample(&s, 10, &mut rng_from_seed(1)).unwrap() {
            assert_eq!(x, Sample::Real(vec![0.0; 3]));
        }
    }

    #[test]
    fn zero_draws_rejected() {
        assert!(sample(&identity(2, Field::Real), 0, &mut rng_from_seed(1)).is_err());
    }

    #[test]
    fn real_identity_covariance() {
        let draws = sample(&identity(2, Field::Real), DRAWS, &mut rng_from_seed(2)).unwrap();
        let cov = sample_covariance(&draws, 2);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((cov[(i, j)].re - target).abs() < 0.05, "{cov}");
            }
        }
    }

    #[test]
    fn complex_scalar_moments() {
        let draws = sample(&identity(1, Field::Complex), DRAWS, &mut rng_from_seed(3)).unwrap();
        let (mut p2, mut sq) = (0.0, C64::new(0.0, 0.0));
        for s in &draws {
            let Sample::Complex(v) = s else { unreachable!() };
            p2 += v[0].norm_sqr();
            sq += v[0] * v[0];
        }
        let n = DRAWS as f64;
        assert!((p2 / n - 1.0).abs() < 0.02);
        assert!((sq / n).norm() < 0.02);
    }

    #[test]
    fn factor_reconstructs_floored_covariance() {
        let mut rng = rng_from_seed(4);
        for field in [Field::Real, Field::Complex] {
            let x = random_correlation(5, field, &mut rng);
            let s = GaussianSampler::new(SpectrahedronPoint::new(x.clone(), field));
            let f = s.factor();
            assert!((f * f.adjoint() - &x).norm() <= 1e-8 * x.norm());
        }
    }

    #[test]
    fn covariance_fidelity() {
        let mut rng = rng_from_seed(5);
        for field in [Field::Real, Field::Complex] {
            let x = random_correlation(4, field, &mut rng);
            let s = GaussianSampler::new(SpectrahedronPoint::new(x.clone(), field));
            let draws = sample(&s, DRAWS, &mut rng).unwrap();
            let cov = sample_covariance(&draws, 4);
            assert!((cov - &x).norm() <= 0.05 * x.norm(), "{field:?}");
        }
    }

    #[test]
    fn quadratic_form_mean_matches_trace() {
        let mut rng = rng_from_seed(6);
        let draws_per_pair = DRAWS;
        for pair in 0..10 {
            let field = if pair % 2 == 0 { Field::Real } else { Field::Complex };
            let d = 3;
            let x = random_correlation(d, field, &mut rng);
            let c0 = random_correlation(d, field, &mut rng);
            let c = &c0 - DMatrix::<C64>::identity(d, d) * C64::new(0.3, 0.0);
            let target = crate::linalg::trace_product(&c, &x).re;
            let s = GaussianSampler::new(SpectrahedronPoint::new(x, field));
            let values: Vec<f64> = (0..draws_per_pair)
                .map(|_| {
                    let v: Vec<C64> = match s.draw(&mut rng) {
                        Sample::Real(v) => v.iter().map(|&a| C64::new(a, 0.0)).collect(),
                        Sample::Complex(v) => v,
                    };
                    let mut acc = C64::new(0.0, 0.0);
                    for i in 0..d {
                        for j in 0..d {
                            acc += v[i].conj() * c[(i, j)] * v[j];
                        }
                    }
                    acc.re
                })
                .collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!(
                (mean - target).abs() <= 3.0 * se,
                "pair {pair}: {mean} vs {target} (se {se})"
            );
        }
    }

    #[test]
    fn rounding_examples() {
        let b = round_to_alphabet(&Sample::Real(vec![0.3, -0.2]), 2).unwrap();
        assert_eq!(b.indices(), &[0, 1]);
        let b = round_to_alphabet(&Sample::Real(vec![1.0, 1.0]), 4).unwrap();
        assert_eq!(b.phases(), &[C64::new(1.0, 0.0)]);
        let b = round_to_alphabet(&Sample::Complex(vec![C64::new(-1.0, 0.0)]), 8).unwrap();
        assert_eq!(b.indices(), &[4]);
        assert_eq!(b.phases()[0], C64::new(-1.0, 0.0));
        let b = round_to_alphabet(&Sample::Complex(vec![C64::new(0.0, 0.0)]), 8).unwrap();
        assert_eq!(b.indices(), &[0]);
        let b = round_to_alphabet(&Sample::Real(vec![0.0]), 2).unwrap();
        assert_eq!(b.indices(), &[0]);
    }

    #[test]
    fn l4_sign_pairs_follow_the_rotation_formula() {
        let rot = C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_PI_4);
        for (re, im) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
            let b = round_to_alphabet(&Sample::Real(vec![re, im]), 4).unwrap();
            let expected = rot * C64::new(re, im);
            assert!((b.phases()[0] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn rounding_shape_errors() {
        assert!(round_to_alphabet(&Sample::Real(vec![1.0, 2.0, 3.0]), 4).is_err());
        assert!(round_to_alphabet(&Sample::Complex(vec![C64::new(1.0, 0.0)]), 2).is_err());
        assert!(round_to_alphabet(&Sample::Real(vec![1.0]), 8).is_err());
    }

    #[test]
    fn rounded_circular_gaussian_is_uniform() {
        for order in [2usize, 4, 8] {
            let mut rng = rng_from_seed(100 + order as u64);
            let s = identity(1, Field::Complex);
            let mut counts = vec![0usize; order];
            for _ in 0..DRAWS {
                let Sample::Complex(v) = s.draw(&mut rng) else {
                    unreachable!()
                };
                let xi = match order {
                    2 => Sample::Real(vec![v[0].re]),
                    4 => Sample::Real(embed_vector(&v).as_slice().to_vec()),
                    _ => Sample::Complex(v),
                };
                counts[round_to_alphabet(&xi, order).unwrap().indices()[0]] += 1;
            }
            let expected = DRAWS as f64 / order as f64;
            let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
            let critical = ChiSquared::new((order - 1) as f64).unwrap().inverse_cdf(0.99);
            assert!(stat < critical, "L = {order}: chi2 {stat} >= {critical}");
        }
    }

    #[test]
    fn phase_random_is_uniform_and_seeded() {
        let draws = phase_random(1, 2, DRAWS, &mut rng_from_seed(7)).unwrap();
        let plus = draws.iter().filter(|b| b.indices()[0] == 0).count() as f64 / DRAWS as f64;
        assert!((plus - 0.5).abs() < 0.01);
        let a = phase_random(6, 8, 50, &mut rng_from_seed(8)).unwrap();
        let b = phase_random(6, 8, 50, &mut rng_from_seed(8)).unwrap();
        assert_eq!(a, b);
        let alphabet = PhaseAlphabet::new(8).unwrap();
        for r in &a {
            for &z in r.phases() {
                assert!(alphabet.index_of(z, 1e-12).is_some());
            }
        }
    }
}
