//! Semidefinite relaxations of the rotation-vector problem.
//!
//! Three shapes, chosen by the alphabet order:
//!
//! * `L = 2`: real symmetric `P x P`, constraint matrices `Re(C_n)`;
//! * `L = 4`: real symmetric `2P x 2P`, constraint matrices `T(C_n)` acting on
//!   `T(b_hat)` with `b_hat in {+-1 +- j}^P`. Objective values are reported
//!   with a factor 1/2 so they compare directly with `b^H C_n b`;
//! * any other `L`: complex Hermitian `P x P`, constraint matrices `C_n`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, Field, HermitianEigen, C64};
use crate::pts::{PeakMatrixSet, PhaseAlphabet, RotationVector};
use crate::randomize::{round_to_alphabet, Sample};
use crate::sdp::SpectrahedronPoint;

pub use crate::linalg::{embed_matrix, embed_vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxationKind {
    RealSymmetric,
    RealEmbedded,
    Hermitian,
}

impl RelaxationKind {
    pub fn for_alphabet(order: usize) -> Result<Self> {
        match order {
            0 | 1 => Err(Error::invalid(format!("alphabet order L = {order} must be >= 2"))),
            2 => Ok(Self::RealSymmetric),
            4 => Ok(Self::RealEmbedded),
            _ => Ok(Self::Hermitian),
        }
    }

    /// Side of the relaxed matrix for `p` subsets.
    pub fn dimension(self, p: usize) -> usize {
        match self {
            Self::RealEmbedded => 2 * p,
            _ => p,
        }
    }

    pub fn field(self) -> Field {
        match self {
            Self::Hermitian => Field::Complex,
            _ => Field::Real,
        }
    }
}

/// A family of rank-1 PSD matrices `u_n^H u_n` given by their rows `u_n`,
/// read through one of the three relaxation shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneFamily {
    kind: RelaxationKind,
    subsets: usize,
    rows: Vec<C64>,
}

impl RankOneFamily {
    pub(crate) fn new(kind: RelaxationKind, subsets: usize, rows: Vec<C64>) -> Self {
        debug_assert!(subsets > 0 && rows.len().is_multiple_of(subsets));
        RankOneFamily { kind, subsets, rows }
    }

    pub fn kind(&self) -> RelaxationKind {
        self.kind
    }

    pub fn subsets(&self) -> usize {
        self.subsets
    }

    pub fn dimension(&self) -> usize {
        self.kind.dimension(self.subsets)
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.subsets
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, n: usize) -> &[C64] {
        &self.rows[n * self.subsets..(n + 1) * self.subsets]
    }

    pub fn with_kind(&self, kind: RelaxationKind) -> Self {
        RankOneFamily { kind, ..self.clone() }
    }

    /// The n-th matrix in the problem's own representation:
    /// `Re(C)`, `T(C)` or `C`.
    pub fn matrix(&self, n: usize) -> DMatrix<C64> {
        let u = self.row(n);
        let c = DMatrix::from_fn(self.subsets, self.subsets, |p, q| u[p].conj() * u[q]);
        match self.kind {
            RelaxationKind::RealSymmetric => c.map(|v| C64::new(v.re, 0.0)),
            RelaxationKind::RealEmbedded => linalg::to_complex(&embed_matrix(&c).expect("Gram matrices are Hermitian")),
            RelaxationKind::Hermitian => c,
        }
    }

    /// Real factors `f` and weight `w` with functional `w * sum_f f^T Y f`
    /// on the real symmetric matrix `Y` the solver works with.
    pub(crate) fn solver_factors(&self, n: usize) -> ([Vec<f64>; 2], f64) {
        let u = self.row(n);
        match self.kind {
            RelaxationKind::RealSymmetric => (
                [u.iter().map(|v| v.re).collect(), u.iter().map(|v| v.im).collect()],
                1.0,
            ),
            RelaxationKind::RealEmbedded | RelaxationKind::Hermitian => {
                // C = w w^H with w = conj(u); T(C) = T(w)T(w)^T + T(jw)T(jw)^T.
                let w: Vec<C64> = u.iter().map(|v| v.conj()).collect();
                let jw: Vec<C64> = w.iter().map(|v| v * C64::new(0.0, 1.0)).collect();
                (
                    [
                        embed_vector(&w).as_slice().to_vec(),
                        embed_vector(&jw).as_slice().to_vec(),
                    ],
                    0.5,
                )
            }
        }
    }

    /// Side of the real matrix the solver works with.
    pub(crate) fn solver_dimension(&self) -> usize {
        match self.kind {
            RelaxationKind::RealSymmetric => self.subsets,
            _ => 2 * self.subsets,
        }
    }

    /// Objective-scale value of the n-th functional at `x`: `Tr(Re(C) X)`,
    /// `Tr(T(C) X) / 2` or `Tr(C X)`.
    pub fn value(&self, n: usize, x: &DMatrix<C64>) -> f64 {
        let u = self.row(n);
        match self.kind {
            RelaxationKind::RealSymmetric | RelaxationKind::Hermitian => {
                // u X u^H
                let mut acc = C64::new(0.0, 0.0);
                for p in 0..self.subsets {
                    let mut inner = C64::new(0.0, 0.0);
                    for q in 0..self.subsets {
                        inner += x[(p, q)] * u[q].conj();
                    }
                    acc += u[p] * inner;
                }
                acc.re
            }
            RelaxationKind::RealEmbedded => {
                let (factors, weight) = self.solver_factors(n);
                let d = 2 * self.subsets;
                factors
                    .iter()
                    .map(|f| {
                        let mut acc = 0.0;
                        for i in 0..d {
                            for j in 0..d {
                                acc += f[i] * x[(i, j)].re * f[j];
                            }
                        }
                        acc
                    })
                    .sum::<f64>()
                    * weight
            }
        }
    }

    /// Objective-scale value of the n-th functional at the identity.
    pub fn value_at_identity(&self, n: usize) -> f64 {
        self.row(n).iter().map(|v| v.norm_sqr()).sum()
    }
}

/// The relaxed epigraph problem: minimize `max_n <C_n, X>` over unit-diagonal PSD `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationProblem {
    family: RankOneFamily,
}

impl RelaxationProblem {
    pub fn from_family(family: RankOneFamily) -> Self {
        RelaxationProblem { family }
    }

    pub fn family(&self) -> &RankOneFamily {
        &self.family
    }

    pub fn kind(&self) -> RelaxationKind {
        self.family.kind
    }

    pub fn dimension(&self) -> usize {
        self.family.dimension()
    }

    pub fn subsets(&self) -> usize {
        self.family.subsets
    }

    pub fn constraint_count(&self) -> usize {
        self.family.len()
    }

    pub fn constraint_matrix(&self, n: usize) -> DMatrix<C64> {
        self.family.matrix(n)
    }

    /// `max_n <C_n, X>` on the objective scale.
    pub fn objective(&self, x: &DMatrix<C64>) -> f64 {
        (0..self.family.len())
            .map(|n| self.family.value(n, x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_n Tr(C_n) / d`, the natural size of the objective.
    pub fn scale(&self) -> f64 {
        (0..self.family.len())
            .map(|n| self.family.value_at_identity(n))
            .fold(0.0, f64::max)
            / self.family.subsets as f64
    }
}

pub fn build_relaxation(peaks: &PeakMatrixSet, order: usize) -> Result<RelaxationProblem> {
    let kind = RelaxationKind::for_alphabet(order)?;
    let rows = peaks.rows().flatten().copied().collect();
    Ok(RelaxationProblem::from_family(RankOneFamily::new(
        kind,
        peaks.subsets(),
        rows,
    )))
}

/// Solution of a relaxation with its eigen-decomposition.
#[derive(Debug, Clone)]
pub struct RelaxationSolution {
    pub kind: RelaxationKind,
    pub x_star: SpectrahedronPoint,
    /// Epigraph optimum on the `b^H C b` scale.
    pub lambda_star: f64,
    pub eigen: HermitianEigen,
}

impl RelaxationSolution {
    pub fn new(kind: RelaxationKind, x_star: SpectrahedronPoint, lambda_star: f64) -> Self {
        let eigen = HermitianEigen::new(x_star.matrix(), x_star.field());
        RelaxationSolution {
            kind,
            x_star,
            lambda_star,
            eigen,
        }
    }

    /// Numerical rank at relative threshold `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        let top = self.eigen.values.first().copied().unwrap_or(0.0);
        self.eigen.values.iter().filter(|&&v| v > tol * top).count()
    }

    /// Leading eigenvector scaled by `sqrt(lambda_1)`, with the tie rule and
    /// the phase convention applied (first non-negligible entry real positive).
    pub fn leading_vector(&self) -> Result<Vec<C64>> {
        let values = &self.eigen.values;
        let top = values.first().copied().unwrap_or(0.0);
        if top.is_nan() || top <= 0.0 {
            return Err(Error::DegenerateSolution(format!("leading eigenvalue is {top:e}")));
        }
        let candidates: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= top * (1.0 - 1e-9)).collect();
        let pick = candidates
            .iter()
            .copied()
            .max_by(|&a, &b| {
                let (qa, qb) = (&self.eigen.vectors[a], &self.eigen.vectors[b]);
                qa.iter()
                    .zip(qb)
                    .map(|(x, y)| x.norm().total_cmp(&y.norm()))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(b.cmp(&a))
            })
            .expect("at least one candidate");
        let q = &self.eigen.vectors[pick];
        let anchor = q
            .iter()
            .find(|v| v.norm() > 1e-12)
            .copied()
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = anchor.conj() / anchor.norm();
        let s = top.sqrt();
        Ok(q.iter().map(|v| v * phase * s).collect())
    }
}

/// Round the leading eigenvector onto the alphabet: `sgn` for `L = 2`, the
/// two-sign map for `L = 4`, elementwise nearest member otherwise.
pub fn rank1_approximation(solution: &RelaxationSolution, order: usize) -> Result<RotationVector> {
    let expected = RelaxationKind::for_alphabet(order)?;
    if expected != solution.kind {
        return Err(Error::invalid(format!(
            "solution of kind {:?} cannot be rounded to L = {order}",
            solution.kind
        )));
    }
    let q = solution.leading_vector()?;
    match solution.kind {
        RelaxationKind::RealSymmetric | RelaxationKind::RealEmbedded => {
            round_to_alphabet(&Sample::Real(q.iter().map(|v| v.re).collect()), order)
        }
        RelaxationKind::Hermitian => {
            let alphabet = PhaseAlphabet::new(order)?;
            let idx = q.iter().map(|&z| alphabet.nearest_index(z)).collect();
            Ok(RotationVector::from_indices(idx, &alphabet))
        }
    }
}
