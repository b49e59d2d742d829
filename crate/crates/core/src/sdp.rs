//! Convex solver over the spectrahedron `{X PSD, diag(X) = 1}`.
//!
//! Two objective shapes are supported, both built from rank-1 families:
//!
//! * the epigraph form `min max_n <C_n, X>` of the relaxed peak problem;
//! * the smooth quartic `F(X) = sum_k <M_k, X>^2` of the correlation bound.
//!
//! The unit diagonal is eliminated by parametrizing `X = I + sum_{i<j}
//! x_ij (E_ij + E_ji)`; what remains is solved by a primal log-barrier
//! method with damped Newton centering. After each centering a dual-feasible
//! point is read off the barrier multipliers (`mu_n = 1 / (t s_n)` for the
//! epigraph constraints, `Y^-1 / t` for the cone) and shifted until exactly
//! feasible, which certifies the optimality gap. Hermitian problems run in
//! the real embedding and are mapped back by averaging the diagonal blocks.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{self, Field, HermitianEigen, C64};
use crate::relax::{RankOneFamily, RelaxationKind, RelaxationProblem, RelaxationSolution};

/// A (nearly) feasible point of the spectrahedron with its residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrahedronPoint {
    matrix: DMatrix<C64>,
    field: Field,
    psd_violation: f64,
    diag_violation: f64,
}

impl SpectrahedronPoint {
    pub fn new(matrix: DMatrix<C64>, field: Field) -> Self {
        let eig = HermitianEigen::new(&matrix, field);
        let psd_violation = (-eig.min_value()).max(0.0);
        let diag_violation = (0..matrix.nrows())
            .map(|i| (matrix[(i, i)].re - 1.0).abs())
            .fold(0.0, f64::max);
        SpectrahedronPoint {
            matrix,
            field,
            psd_violation,
            diag_violation,
        }
    }

    pub fn identity(d: usize, field: Field) -> Self {
        Self::new(DMatrix::identity(d, d), field)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn psd_violation(&self) -> f64 {
        self.psd_violation
    }

    pub fn diag_violation(&self) -> f64 {
        self.diag_violation
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.psd_violation <= tol && self.diag_violation <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub feas_tol: f64,
    /// Relative objective accuracy; the certified gap is `obj_tol * scale`.
    pub obj_tol: f64,
    /// Cap on Newton steps.
    pub max_iters: usize,
    /// Factor by which the barrier weight grows between centerings.
    pub barrier_growth: f64,
    /// Centering stops when half the squared Newton decrement falls below this.
    pub newton_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feas_tol: 1e-7,
            obj_tol: 1e-7,
            max_iters: 20_000,
            barrier_growth: 10.0,
            newton_tol: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.feas_tol > 0.0
            && self.obj_tol > 0.0
            && self.newton_tol > 0.0
            && self.barrier_growth > 1.0
            && self.max_iters > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid solver config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    /// Newton steps taken.
    pub iterations: usize,
    /// Barrier centerings completed.
    pub centerings: usize,
    pub objective: f64,
    /// Certified bound on `objective - optimum`.
    pub gap_bound: f64,
    pub psd_violation: f64,
    pub diag_violation: f64,
    pub converged: bool,
    /// True objective after each centering; non-increasing along the central path.
    pub history: Vec<f64>,
}

/// The quartic correlation objective: masks `M_k = r_k^H r_k` given by rows `r_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticObjectiveSpec {
    family: RankOneFamily,
}

impl QuarticObjectiveSpec {
    pub fn from_family(family: RankOneFamily) -> Self {
        QuarticObjectiveSpec { family }
    }

    pub fn family(&self) -> &RankOneFamily {
        &self.family
    }

    pub fn kind(&self) -> RelaxationKind {
        self.family.kind()
    }

    pub fn dimension(&self) -> usize {
        self.family.dimension()
    }

    pub fn mask_count(&self) -> usize {
        self.family.len()
    }

    /// Re-read the same masks through the relaxation shape for alphabet order `L`.
    pub fn for_alphabet(&self, order: usize) -> Result<Self> {
        Ok(QuarticObjectiveSpec {
            family: self.family.with_kind(RelaxationKind::for_alphabet(order)?),
        })
    }

    /// The Hermitian `P x P` mask `M_k`.
    pub fn mask(&self, k: usize) -> DMatrix<C64> {
        let r = self.family.row(k);
        DMatrix::from_fn(r.len(), r.len(), |p, q| r[p].conj() * r[q])
    }

    /// `F(X) = sum_k <M_k, X>^2` in the spec's representation.
    pub fn objective(&self, x: &DMatrix<C64>) -> f64 {
        (0..self.family.len()).map(|k| self.family.value(k, x).powi(2)).sum()
    }

    /// `sum_k 2 <M_k, X> M_k` (with the representation's trace weight), so
    /// that `dF = Re Tr(G dX)`.
    pub fn gradient(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let d = self.family.dimension();
        let weight = if self.kind() == RelaxationKind::RealEmbedded {
            0.5
        } else {
            1.0
        };
        let mut g = DMatrix::<C64>::zeros(d, d);
        for k in 0..self.family.len() {
            let v = self.family.value(k, x);
            g += self.family.matrix(k) * C64::new(2.0 * v * weight, 0.0);
        }
        g
    }
}

/// Linear functionals `a_n(x) = c_n + g_n . x` on the off-diagonal coordinates.
struct Functionals {
    d: usize,
    pairs: Vec<(usize, usize)>,
    c: DVector<f64>,
    g: DMatrix<f64>,
    /// Diagonal of each functional's matrix, one row per functional.
    diag: DMatrix<f64>,
}

impl Functionals {
    fn from_family(family: &RankOneFamily, divisor: f64) -> Self {
        let d = family.solver_dimension();
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).collect();
        let m = family.len();
        let mut c = DVector::zeros(m);
        let mut g = DMatrix::zeros(m, pairs.len());
        let mut diag = DMatrix::zeros(m, d);
        for n in 0..m {
            let (factors, w) = family.solver_factors(n);
            let w = w / divisor;
            for i in 0..d {
                diag[(n, i)] = w * factors.iter().map(|f| f[i] * f[i]).sum::<f64>();
            }
            c[n] = diag.row(n).sum();
            for (col, &(i, j)) in pairs.iter().enumerate() {
                g[(n, col)] = 2.0 * w * factors.iter().map(|f| f[i] * f[j]).sum::<f64>();
            }
        }
        Functionals { d, pairs, c, g, diag }
    }

    fn nv(&self) -> usize {
        self.pairs.len()
    }

    fn values(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c + &self.g * x
    }

    fn matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut y = DMatrix::identity(self.d, self.d);
        for (col, &(i, j)) in self.pairs.iter().enumerate() {
            y[(i, j)] = x[col];
            y[(j, i)] = x[col];
        }
        y
    }

    fn chol(&self, x: &DVector<f64>) -> Option<Cholesky<f64, Dyn>> {
        Cholesky::new(self.matrix(x))
    }

    /// `sum_n weights_n M_n` where `a_n(x) = <M_n, Y(x)>`.
    fn weighted_matrix(&self, weights: &DVector<f64>) -> DMatrix<f64> {
        let off = self.g.tr_mul(weights);
        let on = self.diag.tr_mul(weights);
        let mut s = DMatrix::from_diagonal(&on);
        for (col, &(i, j)) in self.pairs.iter().enumerate() {
            s[(i, j)] = off[col] / 2.0;
            s[(j, i)] = off[col] / 2.0;
        }
        s
    }
}

/// Lower bound on `min <S, Y>` over the spectrahedron. Near the central path
/// the off-diagonal part of `S` matches `W = Y^-1` scaled by the barrier
/// weight, so `nu = diag(S) - diag(W_scaled)`, shifted down until
/// `S - Diag(nu)` is PSD, is a dual-feasible point with value `sum nu`.
fn dual_bound(s: &DMatrix<f64>, w_scaled: &DMatrix<f64>) -> f64 {
    let d = s.nrows();
    let mut z = s.clone();
    let mut nu_sum = 0.0;
    for i in 0..d {
        z[(i, i)] = w_scaled[(i, i)];
        nu_sum += s[(i, i)] - w_scaled[(i, i)];
    }
    let lmin = z.symmetric_eigenvalues().min();
    nu_sum - d as f64 * (-lmin).max(0.0)
}

fn log_det(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Objective-specific part of the barrier function.
trait BarrierTerm {
    /// Number of logarithmic terms besides `log det`; sets the central path gap.
    fn log_terms(&self) -> usize;
    /// Gradient and Hessian at `z` for weight `t`.
    fn local(&self, z: &DVector<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>);
    /// Change in value along `step`, `None` if it leaves the domain.
    fn change(&self, z: &DVector<f64>, step: &DVector<f64>, t: f64) -> Option<f64>;
    fn objective(&self, z: &DVector<f64>) -> f64;
    /// Objective value and a certified lower bound on the optimum, given
    /// `W = Y^-1` at `z` and the barrier weight `t`.
    fn certificate(&self, z: &DVector<f64>, w: &DMatrix<f64>, t: f64) -> (f64, f64);
}

struct MinMax<'a> {
    f: &'a Functionals,
}

impl MinMax<'_> {
    fn slacks(&self, z: &DVector<f64>) -> DVector<f64> {
        let nv = self.f.nv();
        let x = z.rows(0, nv).into_owned();
        let lam = z[nv];
        self.f.values(&x).map(|a| lam - a)
    }
}

impl BarrierTerm for MinMax<'_> {
    fn log_terms(&self) -> usize {
        self.f.c.len()
    }

    fn local(&self, z: &DVector<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let nv = self.f.nv();
        let s = self.slacks(z);
        let inv = s.map(|v| 1.0 / v);
        let inv2 = s.map(|v| 1.0 / (v * v));
        let mut grad = DVector::zeros(nv + 1);
        grad.rows_mut(0, nv).copy_from(&self.f.g.tr_mul(&inv));
        grad[nv] = t - inv.sum();

        let mut scaled = self.f.g.clone();
        for (n, mut row) in scaled.row_iter_mut().enumerate() {
            row *= inv[n];
        }
        let mut h = DMatrix::zeros(nv + 1, nv + 1);
        h.view_mut((0, 0), (nv, nv)).copy_from(&scaled.tr_mul(&scaled));
        let cross = -self.f.g.tr_mul(&inv2);
        h.view_mut((0, nv), (nv, 1)).copy_from(&cross);
        h.view_mut((nv, 0), (1, nv)).copy_from(&cross.transpose());
        h[(nv, nv)] = inv2.sum();
        (grad, h)
    }

    fn change(&self, z: &DVector<f64>, step: &DVector<f64>, t: f64) -> Option<f64> {
        let nv = self.f.nv();
        let s = self.slacks(z);
        let dx = step.rows(0, nv).into_owned();
        let ds = (&self.f.g * dx).map(|v| step[nv] - v);
        let mut acc = t * step[nv];
        for n in 0..s.len() {
            let ratio = ds[n] / s[n];
            if ratio.is_nan() || ratio <= -1.0 {
                return None;
            }
            acc -= ratio.ln_1p();
        }
        Some(acc)
    }

    fn objective(&self, z: &DVector<f64>) -> f64 {
        let x = z.rows(0, self.f.nv()).into_owned();
        self.f.values(&x).max()
    }

    fn certificate(&self, z: &DVector<f64>, w: &DMatrix<f64>, t: f64) -> (f64, f64) {
        // mu_n = 1 / (t s_n) sums to 1 on the central path; normalize onto the simplex.
        let mu = self.slacks(z).map(|s| 1.0 / (t * s));
        let total = mu.sum();
        let s = self.f.weighted_matrix(&(mu / total));
        (self.objective(z), dual_bound(&s, &(w / (t * total))))
    }
}

struct Quartic<'a> {
    f: &'a Functionals,
    gram: DMatrix<f64>,
}

impl BarrierTerm for Quartic<'_> {
    fn log_terms(&self) -> usize {
        0
    }

    fn local(&self, z: &DVector<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let a = self.f.values(z);
        (self.f.g.tr_mul(&a) * (2.0 * t), &self.gram * (2.0 * t))
    }

    fn change(&self, z: &DVector<f64>, step: &DVector<f64>, t: f64) -> Option<f64> {
        let a = self.f.values(z);
        let da = &self.f.g * step;
        Some(t * a.iter().zip(da.iter()).map(|(a, d)| (2.0 * a + d) * d).sum::<f64>())
    }

    fn objective(&self, z: &DVector<f64>) -> f64 {
        self.f.values(z).norm_squared()
    }

    fn certificate(&self, z: &DVector<f64>, w: &DMatrix<f64>, t: f64) -> (f64, f64) {
        // Convexity: F* >= F(Y) + min <grad, Y'> - <grad, Y>, and <grad, Y> = 2 F(Y).
        let a = self.f.values(z);
        let obj = a.norm_squared();
        let s = self.f.weighted_matrix(&(a * 2.0));
        (obj, dual_bound(&s, &(w / t)) - obj)
    }
}

/// Gradient and Hessian of `-log det Y(x)`.
fn log_det_terms(f: &Functionals, w: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let nv = f.nv();
    let grad = DVector::from_fn(nv, |a, _| {
        let (i, j) = f.pairs[a];
        -2.0 * w[(i, j)]
    });
    let hess = DMatrix::from_fn(nv, nv, |a, b| {
        let (i, j) = f.pairs[a];
        let (k, l) = f.pairs[b];
        2.0 * (w[(i, l)] * w[(j, k)] + w[(i, k)] * w[(j, l)])
    });
    (grad, hess)
}

fn solve_spd(h: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = h.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..12 {
        let mut hr = h.clone();
        for i in 0..hr.nrows() {
            hr[(i, i)] += ridge;
        }
        if let Some(ch) = Cholesky::new(hr) {
            let sol = ch.solve(rhs);
            if sol.iter().all(|v| v.is_finite()) {
                return Some(sol);
            }
        }
        ridge = if ridge == 0.0 { 1e-14 * scale } else { ridge * 100.0 };
    }
    None
}

enum CenterOutcome {
    /// Centering ended with this Newton decrement.
    Done(f64),
    Budget,
}

const STEPS_PER_CENTERING: usize = 200;
const MAX_CENTERINGS: usize = 60;

/// Damped Newton centering of `t * objective + term barriers - log det Y`.
/// Gives up early when steps stop making progress, which happens once
/// rounding dominates the Newton direction.
fn center(
    f: &Functionals,
    term: &dyn BarrierTerm,
    z: &mut DVector<f64>,
    t: f64,
    cfg: &SolverConfig,
    iterations: &mut usize,
) -> Result<CenterOutcome> {
    let nv = f.nv();
    let mut short_steps = 0;
    let mut decrement = f64::INFINITY;
    for _ in 0..STEPS_PER_CENTERING {
        if *iterations >= cfg.max_iters {
            return Ok(CenterOutcome::Budget);
        }
        let x = z.rows(0, nv).into_owned();
        let ch = f
            .chol(&x)
            .ok_or_else(|| Error::Numeric("iterate left the PSD cone".into()))?;
        let w = ch.inverse();
        let (g_ld, h_ld) = log_det_terms(f, &w);
        let (mut grad, mut hess) = term.local(z, t);
        let mut gx = grad.rows_mut(0, nv);
        gx += &g_ld;
        let mut hx = hess.view_mut((0, 0), (nv, nv));
        hx += &h_ld;

        let step = solve_spd(&hess, &(-&grad)).ok_or_else(|| Error::Numeric("singular Newton system".into()))?;
        let slope = grad.dot(&step);
        *iterations += 1;
        decrement = (-slope).max(0.0).sqrt();
        if -slope / 2.0 <= cfg.newton_tol {
            return Ok(CenterOutcome::Done(decrement));
        }
        let ld0 = log_det(&ch);
        let mut alpha = 1.0;
        loop {
            let trial = &step * alpha;
            let xn = &x + trial.rows(0, nv);
            let accepted = f.chol(&xn).and_then(|chn| {
                let dv = term.change(z, &trial, t)?;
                let total = dv - (log_det(&chn) - ld0);
                (total <= 0.25 * alpha * slope).then_some(())
            });
            if accepted.is_some() {
                *z += trial;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-14 {
                return Ok(CenterOutcome::Done(decrement));
            }
        }
        short_steps = if alpha < 1e-3 { short_steps + 1 } else { 0 };
        if short_steps >= 5 {
            return Ok(CenterOutcome::Done(decrement));
        }
    }
    Ok(CenterOutcome::Done(decrement))
}

struct BarrierRun {
    z: DVector<f64>,
    iterations: usize,
    centerings: usize,
    gap: f64,
    converged: bool,
    history: Vec<f64>,
}

/// Follow the central path from `t0`, growing `t` until the certified gap
/// passes `stop(gap, objective)`.
fn run_barrier(
    f: &Functionals,
    term: &dyn BarrierTerm,
    mut z: DVector<f64>,
    t0: f64,
    stop: impl Fn(f64, f64) -> bool,
    cfg: &SolverConfig,
) -> Result<BarrierRun> {
    let nv = f.nv();
    let mut t = t0;
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut best: Option<(DVector<f64>, f64)> = None;
    let give_up = |best: Option<(DVector<f64>, f64)>, z, iterations, centerings, history| {
        let (z, gap) = best.unwrap_or((z, f64::INFINITY));
        BarrierRun {
            z,
            iterations,
            centerings,
            gap,
            converged: false,
            history,
        }
    };
    for centerings in 1..=MAX_CENTERINGS {
        let decrement = match center(f, term, &mut z, t, cfg, &mut iterations) {
            Ok(CenterOutcome::Done(decrement)) => decrement,
            Ok(CenterOutcome::Budget) => {
                return Ok(give_up(best, z, iterations, centerings, history));
            }
            // Deep along the path the Newton system can lose definiteness
            // numerically; fall back to the last certified iterate.
            Err(_) if best.is_some() => {
                return Ok(give_up(best, z, iterations, centerings, history));
            }
            Err(e) => return Err(e),
        };
        let w = f
            .chol(&z.rows(0, nv).into_owned())
            .ok_or_else(|| Error::Numeric("iterate left the PSD cone".into()))?
            .inverse();
        let (obj, lower) = term.certificate(&z, &w, t);
        let mut gap = (obj - lower).max(0.0);
        if decrement < 0.5 {
            // Near the central path the gap is at most about nu / t, with nu
            // the barrier parameter, inflated by the residual decrement.
            let nu = (term.log_terms() + f.d) as f64;
            gap = gap.min((nu + nu.sqrt() * decrement / (1.0 - decrement)) / t);
        }
        history.push(obj);
        if best.as_ref().is_none_or(|(_, g)| gap < *g) {
            best = Some((z.clone(), gap));
        }
        if stop(gap, obj) {
            return Ok(BarrierRun {
                z,
                iterations,
                centerings,
                gap,
                converged: true,
                history,
            });
        }
        t *= cfg.barrier_growth;
    }
    Ok(give_up(best, z, iterations, MAX_CENTERINGS, history))
}

/// Convert the solver's real matrix back to the problem representation.
fn to_problem_matrix(kind: RelaxationKind, y: &DMatrix<f64>) -> Result<DMatrix<C64>> {
    match kind {
        RelaxationKind::RealSymmetric | RelaxationKind::RealEmbedded => Ok(linalg::to_complex(y)),
        RelaxationKind::Hermitian => linalg::unembed_matrix(y),
    }
}

/// Solve `min_X max_n <C_n, X>` over the spectrahedron.
pub fn solve_minmax(problem: &RelaxationProblem, config: &SolverConfig) -> Result<(RelaxationSolution, SolverReport)> {
    config.validate()?;
    let family = problem.family();
    if family.is_empty() {
        return Err(Error::invalid("relaxation has no constraints"));
    }
    let kind = problem.kind();
    let dim = problem.dimension();
    let norm = (0..family.len())
        .map(|n| family.value_at_identity(n))
        .fold(0.0, f64::max);
    if norm <= 0.0 {
        let x = SpectrahedronPoint::identity(dim, kind.field());
        let report = trivial_report(0.0);
        return Ok((RelaxationSolution::new(kind, x, 0.0), report));
    }
    let f = Functionals::from_family(family, norm);
    let nv = f.nv();
    let m = f.c.len() as f64;
    let t0 = m + f.d as f64;
    let mut z = DVector::zeros(nv + 1);
    z[nv] = f.c.max() + 1.0;
    // Gap target in normalized units: obj_tol * (norm / dim) / norm.
    let target = config.obj_tol / dim as f64;
    let term = MinMax { f: &f };
    let run = run_barrier(&f, &term, z, t0, |gap, _| gap <= target, config)?;

    let y = f.matrix(&run.z.rows(0, nv).into_owned());
    let x = SpectrahedronPoint::new(to_problem_matrix(kind, &y)?, kind.field());
    let lambda = problem.objective(x.matrix());
    let report = SolverReport {
        iterations: run.iterations,
        centerings: run.centerings,
        objective: lambda,
        gap_bound: run.gap * norm,
        psd_violation: x.psd_violation(),
        diag_violation: x.diag_violation(),
        converged: run.converged && x.psd_violation() <= config.feas_tol && x.diag_violation() <= config.feas_tol,
        history: run.history.iter().map(|v| v * norm).collect(),
    };
    Ok((RelaxationSolution::new(kind, x, lambda), report))
}

fn trivial_report(objective: f64) -> SolverReport {
    SolverReport {
        iterations: 0,
        centerings: 0,
        objective,
        gap_bound: 0.0,
        psd_violation: 0.0,
        diag_violation: 0.0,
        converged: true,
        history: vec![objective],
    }
}

/// Minimize `sum_k <M_k, X>^2` over the spectrahedron.
pub fn solve_quartic(spec: &QuarticObjectiveSpec, config: &SolverConfig) -> Result<(SpectrahedronPoint, SolverReport)> {
    config.validate()?;
    let family = spec.family();
    let kind = spec.kind();
    let dim = spec.dimension();
    let at_identity = spec.objective(&DMatrix::identity(dim, dim));
    if at_identity <= 0.0 {
        let x = SpectrahedronPoint::identity(dim, kind.field());
        return Ok((x, trivial_report(0.0)));
    }
    // Normalize so F(I) = 1: functionals are divided by sqrt(F(I)).
    let root = at_identity.sqrt();
    let f = Functionals::from_family(family, root);
    let gram = f.g.tr_mul(&f.g);
    let t0 = f.d as f64;
    let term = Quartic { f: &f, gram };
    let tol = config.obj_tol;
    let run = run_barrier(
        &f,
        &term,
        DVector::zeros(f.nv()),
        t0,
        |gap, obj| gap <= tol * obj.max(1e-12),
        config,
    )?;
    let y = f.matrix(&run.z);
    let x = SpectrahedronPoint::new(to_problem_matrix(kind, &y)?, kind.field());
    let objective = spec.objective(x.matrix());
    let report = SolverReport {
        iterations: run.iterations,
        centerings: run.centerings,
        objective,
        gap_bound: run.gap * at_identity,
        psd_violation: x.psd_violation(),
        diag_violation: x.diag_violation(),
        converged: run.converged && x.psd_violation() <= config.feas_tol && x.diag_violation() <= config.feas_tol,
        history: run.history.iter().map(|v| v * at_identity).collect(),
    };
    Ok((x, report))
}

/// Alternating projections onto the PSD cone (eigenvalue clamp) and the
/// unit-diagonal plane. Converges to a feasible point, not necessarily the
/// nearest one.
pub fn project_spectrahedron(m: &DMatrix<C64>, field: Field, config: &SolverConfig) -> SpectrahedronPoint {
    let hermitize = |a: &DMatrix<C64>| -> DMatrix<C64> {
        let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
        match field {
            Field::Real => h.map(|v| C64::new(v.re, 0.0)),
            Field::Complex => h,
        }
    };
    let mut x = hermitize(m);
    let current = SpectrahedronPoint::new(x.clone(), field);
    if current.is_feasible(config.feas_tol) {
        return current;
    }
    for _ in 0..500 {
        let mut eig = HermitianEigen::new(&x, field);
        for v in eig.values.iter_mut() {
            *v = v.max(0.0);
        }
        x = hermitize(&eig.reconstruct());
        for i in 0..x.nrows() {
            x[(i, i)] = C64::new(1.0, 0.0);
        }
        let p = SpectrahedronPoint::new(x.clone(), field);
        if p.is_feasible(config.feas_tol) {
            return p;
        }
    }
    SpectrahedronPoint::new(x, field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{generate_symbols, ConstellationSpec};
    use crate::pts::{make_partition, peak_matrices, symbol_matrix, PartitionScheme, PeakMatrixSet};
    use crate::relax::build_relaxation;
    use crate::seed::rng_from_seed;
    use rand::Rng;
    use std::sync::Arc;

    fn peaks(k: usize, p: usize, j: usize, seed: u64) -> PeakMatrixSet {
        let mut rng = rng_from_seed(seed);
        let c = Arc::new(ConstellationSpec::qam16());
        let s = generate_symbols(k, &c, &mut rng).unwrap();
        let part = make_partition(k, p, PartitionScheme::Adjacent, &mut rng).unwrap();
        peak_matrices(&symbol_matrix(s.symbols(), &part).unwrap(), j).unwrap()
    }

    fn brute_l2(pk: &PeakMatrixSet) -> f64 {
        let p = pk.subsets();
        (0..1usize << (p - 1))
            .map(|mask| {
                let b: Vec<C64> = (0..p)
                    .map(|i| {
                        if i > 0 && mask >> (i - 1) & 1 == 1 {
                            C64::new(-1.0, 0.0)
                        } else {
                            C64::new(1.0, 0.0)
                        }
                    })
                    .collect();
                pk.peak_power(&b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn identity_constraint_gives_dimension() {
        let rows = vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ];
        // Three rank-1 pieces e_i e_i^T; sum of their values at X is Tr(X) = 3.
        let fam = RankOneFamily::new(RelaxationKind::RealSymmetric, 3, rows);
        let prob = RelaxationProblem::from_family(fam);
        let (sol, rep) = solve_minmax(&prob, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        // Each e_i e_i^T has <., X> = X_ii = 1 on the spectrahedron.
        assert!((sol.lambda_star - 1.0).abs() < 1e-9);
    }

    #[test]
    fn relaxation_bounds_two_subset_brute_force() {
        let pk = peaks(4, 2, 4, 17);
        let prob = build_relaxation(&pk, 2).unwrap();
        let cfg = SolverConfig::default();
        let (sol, rep) = solve_minmax(&prob, &cfg).unwrap();
        assert!(rep.converged);
        assert!(sol.x_star.is_feasible(cfg.feas_tol));
        assert!(sol.lambda_star <= brute_l2(&pk) + cfg.obj_tol * prob.scale());
    }

    #[test]
    fn relaxation_bounds_brute_force_up_to_six_subsets() {
        let cfg = SolverConfig::default();
        for (seed, p) in [(1u64, 3usize), (2, 4), (3, 5), (4, 6), (5, 6)] {
            let pk = peaks(60, p, 4, seed);
            let prob = build_relaxation(&pk, 2).unwrap();
            let (sol, rep) = solve_minmax(&prob, &cfg).unwrap();
            assert!(rep.converged, "seed {seed}");
            assert!(rep.gap_bound <= cfg.obj_tol * prob.scale() * (1.0 + 1e-9));
            assert!(sol.lambda_star <= brute_l2(&pk) + cfg.obj_tol * prob.scale() + 1e-6);
        }
    }

    #[test]
    fn duplicated_constraints_leave_optimum_unchanged() {
        let pk = peaks(16, 4, 2, 23);
        let prob = build_relaxation(&pk, 2).unwrap();
        let fam = prob.family();
        let mut rows = Vec::new();
        for n in 0..fam.len() {
            rows.extend_from_slice(fam.row(n));
        }
        let doubled: Vec<C64> = rows.iter().chain(rows.iter()).copied().collect();
        let prob2 = RelaxationProblem::from_family(RankOneFamily::new(RelaxationKind::RealSymmetric, 4, doubled));
        let cfg = SolverConfig::default();
        let (a, _) = solve_minmax(&prob, &cfg).unwrap();
        let (b, _) = solve_minmax(&prob2, &cfg).unwrap();
        assert!((a.lambda_star - b.lambda_star).abs() <= 2.0 * cfg.obj_tol * prob.scale());
    }

    #[test]
    fn central_path_objective_is_monotone() {
        let pk = peaks(48, 6, 4, 31);
        let prob = build_relaxation(&pk, 2).unwrap();
        let (_, rep) = solve_minmax(&prob, &SolverConfig::default()).unwrap();
        for w in rep.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{:?}", rep.history);
        }
    }

    #[test]
    fn embedded_and_hermitian_paths_agree() {
        let pk = peaks(16, 4, 2, 41);
        let cfg = SolverConfig::default();
        let (emb, r1) = solve_minmax(&build_relaxation(&pk, 4).unwrap(), &cfg).unwrap();
        let herm_prob = build_relaxation(&pk, 8).unwrap();
        let (herm, r2) = solve_minmax(&herm_prob, &cfg).unwrap();
        assert!(r1.converged && r2.converged);
        assert!((emb.lambda_star - herm.lambda_star).abs() <= 2.0 * cfg.obj_tol * herm_prob.scale() + 1e-9);
        assert!(herm.x_star.is_feasible(cfg.feas_tol));
        assert_eq!(herm.x_star.dimension(), 4);
        assert_eq!(emb.x_star.dimension(), 8);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let pk = peaks(16, 4, 2, 43);
        let cfg = SolverConfig {
            max_iters: 2,
            ..SolverConfig::default()
        };
        let (_, rep) = solve_minmax(&build_relaxation(&pk, 2).unwrap(), &cfg).unwrap();
        assert!(!rep.converged);
    }

    #[test]
    fn invalid_config_rejected() {
        let pk = peaks(8, 2, 2, 1);
        let cfg = SolverConfig {
            obj_tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(solve_minmax(&build_relaxation(&pk, 2).unwrap(), &cfg).is_err());
    }

    #[test]
    fn projection_examples() {
        let cfg = SolverConfig::default();
        let feasible = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.5, 0.0),
                C64::new(0.5, 0.0),
                C64::new(1.0, 0.0),
            ],
        );
        let p = project_spectrahedron(&feasible, Field::Real, &cfg);
        assert!((p.matrix() - &feasible).norm() < 1e-12);

        let two = DMatrix::<C64>::identity(2, 2) * C64::new(2.0, 0.0);
        let p = project_spectrahedron(&two, Field::Real, &cfg);
        assert!((p.matrix() - DMatrix::<C64>::identity(2, 2)).norm() < 1e-12);

        let mut rng = rng_from_seed(9);
        for field in [Field::Real, Field::Complex] {
            let a = DMatrix::from_fn(5, 5, |_, _| {
                let im = if field == Field::Complex {
                    rng.random::<f64>() - 0.5
                } else {
                    0.0
                };
                C64::new(4.0 * (rng.random::<f64>() - 0.5), im)
            });
            let p = project_spectrahedron(&(&a + a.adjoint()), field, &cfg);
            assert!(p.psd_violation() <= cfg.feas_tol);
            assert!(p.diag_violation() <= cfg.feas_tol);
        }
    }
}
