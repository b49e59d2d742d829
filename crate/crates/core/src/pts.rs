//! Partial transmit sequences: carrier partitions, rotation vectors over the
//! L-th roots of unity, and the rank-1 peak matrices `C_n = u_n^H u_n`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::ofdm::{baseband_samples, padded_idft, pmepr, PowerRatio, SampledSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionScheme {
    Adjacent,
    Interleaved,
    Random,
}

impl std::str::FromStr for PartitionScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adjacent" => Ok(Self::Adjacent),
            "interleaved" => Ok(Self::Interleaved),
            "random" => Ok(Self::Random),
            other => Err(Error::Config(format!("unknown partition scheme '{other}'"))),
        }
    }
}

/// Disjoint cover of the carrier indices `0..K` by `P` subsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    subsets: Vec<Vec<usize>>,
    owner: Vec<usize>,
    scheme: PartitionScheme,
}

impl Partition {
    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    /// Subset index of each carrier.
    pub fn owner(&self) -> &[usize] {
        &self.owner
    }

    pub fn scheme(&self) -> PartitionScheme {
        self.scheme
    }

    pub fn carriers(&self) -> usize {
        self.owner.len()
    }

    pub fn subset_count(&self) -> usize {
        self.subsets.len()
    }
}

/// Split `0..k` into `p` subsets. Indices are zero-based.
///
/// The adjacent and interleaved schemes need `P | K`. The random scheme
/// shuffles the carriers and cuts them into blocks whose sizes differ by
/// at most one, the first `K mod P` blocks taking the extra carrier.
pub fn make_partition<R: Rng + ?Sized>(k: usize, p: usize, scheme: PartitionScheme, rng: &mut R) -> Result<Partition> {
    if p == 0 {
        return Err(Error::invalid("subset count P must be >= 1"));
    }
    if k < p {
        return Err(Error::invalid(format!("K = {k} carriers cannot fill P = {p} subsets")));
    }
    if scheme != PartitionScheme::Random && !k.is_multiple_of(p) {
        return Err(Error::invalid(format!(
            "K = {k} is not a multiple of P = {p}; use the random scheme for uneven blocks"
        )));
    }
    let block = k / p;
    let mut owner = vec![0; k];
    match scheme {
        PartitionScheme::Adjacent => {
            for (i, o) in owner.iter_mut().enumerate() {
                *o = i / block;
            }
        }
        PartitionScheme::Interleaved => {
            for (i, o) in owner.iter_mut().enumerate() {
                *o = i % p;
            }
        }
        PartitionScheme::Random => {
            let mut perm: Vec<usize> = (0..k).collect();
            perm.shuffle(rng);
            let extra = k % p;
            let mut pos = 0;
            for n in 0..p {
                let size = block + usize::from(n < extra);
                for &carrier in &perm[pos..pos + size] {
                    owner[carrier] = n;
                }
                pos += size;
            }
        }
    }
    let mut subsets = vec![Vec::with_capacity(block + 1); p];
    for (i, &o) in owner.iter().enumerate() {
        subsets[o].push(i);
    }
    Ok(Partition { subsets, owner, scheme })
}

/// The alphabet `{exp(2 pi j l / L) : l = 0..L}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAlphabet {
    order: usize,
    elements: Vec<C64>,
}

impl PhaseAlphabet {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::invalid(format!("alphabet order L = {order} must be >= 2")));
        }
        let elements = (0..order).map(|l| root_of_unity(l, order)).collect();
        Ok(PhaseAlphabet { order, elements })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn elements(&self) -> &[C64] {
        &self.elements
    }

    pub fn element(&self, index: usize) -> C64 {
        self.elements[index % self.order]
    }

    /// Index of the member nearest to `z` in Euclidean distance; ties go to
    /// the smaller index.
    pub fn nearest_index(&self, z: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (l, e) in self.elements.iter().enumerate() {
            let d = (z - e).norm_sqr();
            if best_d.is_infinite() || d < best_d * (1.0 - 1e-12) {
                best = l;
                best_d = d;
            }
        }
        best
    }

    /// Index `l` with `arg z` in `[2 pi l / L, 2 pi (l+1) / L)`, `arg` measured in `[0, 2 pi)`.
    pub fn sector_index(&self, z: C64) -> usize {
        let mut theta = z.im.atan2(z.re);
        if theta < 0.0 {
            theta += 2.0 * PI;
        }
        let l = (theta * self.order as f64 / (2.0 * PI)).floor() as usize;
        l.min(self.order - 1)
    }

    /// Member index of `z` if it lies on the alphabet to within `tol`.
    pub fn index_of(&self, z: C64, tol: f64) -> Option<usize> {
        let l = self.nearest_index(z);
        ((z - self.elements[l]).norm() <= tol).then_some(l)
    }
}

/// `exp(2 pi j l / L)` with exact values on the axes.
pub fn root_of_unity(l: usize, order: usize) -> C64 {
    let l = l % order;
    if (4 * l).is_multiple_of(order) {
        match 4 * l / order {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    } else {
        Complex64::cis(2.0 * PI * l as f64 / order as f64)
    }
}

/// One phase factor per subset, each a member of the alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationVector {
    indices: Vec<usize>,
    phases: Vec<C64>,
    order: usize,
}

impl RotationVector {
    pub fn from_indices(indices: Vec<usize>, alphabet: &PhaseAlphabet) -> Self {
        let order = alphabet.order();
        let indices: Vec<usize> = indices.into_iter().map(|l| l % order).collect();
        let phases = indices.iter().map(|&l| alphabet.element(l)).collect();
        RotationVector { indices, phases, order }
    }

    /// Snap arbitrary phases onto the alphabet, refusing values off it.
    pub fn from_phases(phases: &[C64], alphabet: &PhaseAlphabet) -> Result<Self> {
        let indices = phases
            .iter()
            .map(|&z| {
                alphabet
                    .index_of(z, 1e-9)
                    .ok_or_else(|| Error::invalid(format!("{z} is not a member of the alphabet")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_indices(indices, alphabet))
    }

    pub fn identity(p: usize, alphabet: &PhaseAlphabet) -> Self {
        Self::from_indices(vec![0; p], alphabet)
    }

    pub fn phases(&self) -> &[C64] {
        &self.phases
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Rotate globally so the first factor is 1; peak power is unchanged.
    pub fn normalized(&self, alphabet: &PhaseAlphabet) -> Self {
        let shift = self.indices.first().copied().unwrap_or(0);
        let idx = self
            .indices
            .iter()
            .map(|&l| (l + self.order - shift) % self.order)
            .collect();
        Self::from_indices(idx, alphabet)
    }
}

/// Information carried by a rotation vector with `b_1` fixed: `(P - 1) log2 L` bits.
pub fn side_info_bits(p: usize, order: usize) -> Result<f64> {
    if p == 0 || order < 2 {
        return Err(Error::invalid("side information needs P >= 1 and L >= 2"));
    }
    Ok((p - 1) as f64 * (order as f64).log2())
}

/// The K x P matrix with `A[k][p] = A_k` when carrier k is in subset p.
/// Stored as the symbol list plus the owning subset of each carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix {
    symbols: Vec<C64>,
    owner: Vec<usize>,
    subsets: usize,
}

pub fn symbol_matrix(symbols: &[C64], partition: &Partition) -> Result<SymbolMatrix> {
    if symbols.len() != partition.carriers() {
        return Err(Error::invalid(format!(
            "partition covers {} carriers but there are {} symbols",
            partition.carriers(),
            symbols.len()
        )));
    }
    Ok(SymbolMatrix {
        symbols: symbols.to_vec(),
        owner: partition.owner().to_vec(),
        subsets: partition.subset_count(),
    })
}

impl SymbolMatrix {
    pub fn carriers(&self) -> usize {
        self.symbols.len()
    }

    pub fn subsets(&self) -> usize {
        self.subsets
    }

    pub fn symbols(&self) -> &[C64] {
        &self.symbols
    }

    pub fn owner(&self) -> &[usize] {
        &self.owner
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.carriers(), self.subsets, |k, p| {
            if self.owner[k] == p {
                self.symbols[k]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Column `p` of the matrix as a length-K vector.
    pub fn column(&self, p: usize) -> Vec<C64> {
        self.symbols
            .iter()
            .zip(&self.owner)
            .map(|(&a, &o)| if o == p { a } else { C64::new(0.0, 0.0) })
            .collect()
    }

    /// `A b` for an arbitrary complex `b`.
    pub fn apply(&self, b: &[C64]) -> Result<Vec<C64>> {
        if b.len() != self.subsets {
            return Err(Error::invalid(format!(
                "rotation has length {} but there are {} subsets",
                b.len(),
                self.subsets
            )));
        }
        Ok(self.symbols.iter().zip(&self.owner).map(|(&a, &o)| a * b[o]).collect())
    }

    pub fn rotated(&self, rotation: &RotationVector) -> Result<Vec<C64>> {
        self.apply(rotation.phases())
    }
}

pub fn modified_signal(matrix: &SymbolMatrix, rotation: &RotationVector, oversampling: usize) -> Result<SampledSignal> {
    baseband_samples(&matrix.rotated(rotation)?, oversampling)
}

/// The `JK` rank-1 peak matrices, kept as their factor rows `u_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakMatrixSet {
    rows: Vec<C64>,
    subsets: usize,
    oversampling: usize,
}

impl PeakMatrixSet {
    pub fn len(&self) -> usize {
        self.rows.len() / self.subsets
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn subsets(&self) -> usize {
        self.subsets
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    /// `u_n`, the row `v_{t_n}^T A`.
    pub fn row(&self, n: usize) -> &[C64] {
        &self.rows[n * self.subsets..(n + 1) * self.subsets]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[C64]> {
        self.rows.chunks_exact(self.subsets)
    }

    /// Dense `C_n = u_n^H u_n`, entry `(p, q) = conj(u_p) u_q`.
    pub fn matrix(&self, n: usize) -> DMatrix<C64> {
        let u = self.row(n);
        DMatrix::from_fn(self.subsets, self.subsets, |p, q| u[p].conj() * u[q])
    }

    /// `b^H C_n b = |u_n b|^2`.
    pub fn quadratic_form(&self, n: usize, b: &[C64]) -> f64 {
        self.row(n).iter().zip(b).map(|(u, x)| u * x).sum::<C64>().norm_sqr()
    }

    /// `max_n |u_n b|^2`.
    pub fn peak_power(&self, b: &[C64]) -> f64 {
        self.rows()
            .map(|u| u.iter().zip(b).map(|(u, x)| u * x).sum::<C64>().norm_sqr())
            .fold(0.0, f64::max)
    }
}

pub fn peak_matrices(matrix: &SymbolMatrix, oversampling: usize) -> Result<PeakMatrixSet> {
    if oversampling == 0 {
        return Err(Error::invalid("oversampling factor J must be >= 1"));
    }
    let p = matrix.subsets();
    let n = oversampling * matrix.carriers();
    let columns: Vec<Vec<C64>> = (0..p).map(|q| padded_idft(&matrix.column(q), n)).collect();
    let mut rows = vec![C64::new(0.0, 0.0); n * p];
    for (q, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            rows[i * p + q] = v;
        }
    }
    Ok(PeakMatrixSet {
        rows,
        subsets: p,
        oversampling,
    })
}

/// PMEPR of the rotated signal, evaluated through the peak rows.
pub fn papr_of_rotation(peaks: &PeakMatrixSet, rotation: &RotationVector, p_av: f64) -> Result<PowerRatio> {
    if p_av.is_nan() || p_av <= 0.0 {
        return Err(Error::invalid(format!("average power must be > 0, got {p_av}")));
    }
    if rotation.len() != peaks.subsets() {
        return Err(Error::invalid(format!(
            "rotation has length {} but there are {} subsets",
            rotation.len(),
            peaks.subsets()
        )));
    }
    Ok(PowerRatio::from_linear(peaks.peak_power(rotation.phases()) / p_av))
}

/// Same quantity through the signal path (rotate, then synthesize).
pub fn papr_of_rotation_direct(
    matrix: &SymbolMatrix,
    rotation: &RotationVector,
    oversampling: usize,
    p_av: f64,
) -> Result<PowerRatio> {
    pmepr(&modified_signal(matrix, rotation, oversampling)?, p_av)
}
