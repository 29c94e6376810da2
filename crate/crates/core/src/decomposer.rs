//! End-to-end symmetric decomposition on a variety.
//!
//! For a trial rank `r`: pick `B_0`, parameterize generating matrices, solve
//! the residual system for `w`, read the points off the joint eigenvectors of
//! the multiplication matrices, fit the weights, and verify from scratch.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::border::{mult_matrices, BorderBasisCtx};
use crate::error::{Error, Result};
use crate::genpoly::{residual_system, GenConfig, GenMatrixFamily, ResidualSystem};
use crate::linalg;
use crate::multiindex::{monomials_up_to, MultiIndex};
use crate::poly::{monomial_value, Poly};
use crate::tensor::{Decomposition, NormKind, SymTensor};
use crate::variety::{membership, sample_y, select_b0, VarietySpec};

type C = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    #[default]
    SchurCombination,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenericChange {
    Never,
    /// Retry a rank once in random coordinates when its column systems are inconsistent or points escape to infinity.
    #[default]
    Auto,
    Always,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Success threshold on `max_i |f_i(w)| / (1 + Σ|terms of f_i|)`.
    pub residual_tol: f64,
    /// Initial and maximal Levenberg–Marquardt damping, relative to the largest diagonal of `J^H J`.
    pub newton_damping: (f64, f64),
    pub seed: u64,
    pub rank_min: usize,
    pub rank_max: usize,
    pub root_method: RootMethod,
    /// Success needs `rel_error ≤ rel_tol`.
    pub rel_tol: f64,
    /// Success needs `max |g_i(v_j)| ≤ variety_tol · (1 + max ‖v_j‖^{deg})`.
    pub variety_tol: f64,
    pub flattening_tol: f64,
    pub norm: NormKind,
    pub generating: GenConfig,
    pub generic_change: GenericChange,
    /// Fixed monomial basis, bypassing sampling.
    pub b0: Option<Vec<MultiIndex>>,
    /// Standard deviations cycled through for the random starting points.
    pub start_scales: Vec<f64>,
    pub polish_iters: usize,
    /// Rescale the affine coordinates by powers of two before solving.
    pub balance: bool,
    /// Odd restarts start from the generating matrix interpolated at random points of `Y`.
    pub variety_starts: bool,
    /// In `Auto` mode, a failed rank whose best restart ends with `‖w‖` above this is retried in random coordinates.
    pub escape_norm: f64,
    /// Reject tensors failing the membership test at this tolerance before any solve.
    pub membership_tol: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            restarts: 50,
            max_iters: 300,
            residual_tol: 1e-9,
            newton_damping: (1e-3, 1e12),
            seed: 0,
            rank_min: 1,
            rank_max: 64,
            root_method: RootMethod::SchurCombination,
            rel_tol: 1e-6,
            variety_tol: 1e-6,
            flattening_tol: 1e-8,
            norm: NormKind::HilbertSchmidt,
            generating: GenConfig::default(),
            generic_change: GenericChange::Auto,
            b0: None,
            start_scales: vec![1.0, 3.0, 0.3, 10.0],
            polish_iters: 30,
            balance: true,
            variety_starts: true,
            escape_norm: 1e2,
            membership_tol: Some(1e-8),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::Invalid("residual_tol must be positive".into()));
        }
        if self.rank_min > self.rank_max {
            return Err(Error::Invalid(format!("rank_min {} exceeds rank_max {}", self.rank_min, self.rank_max)));
        }
        if self.start_scales.is_empty() {
            return Err(Error::Invalid("start_scales is empty".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartLog {
    pub restart: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub w_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttemptLog {
    pub rank: usize,
    pub generic_change: bool,
    pub b0: Vec<MultiIndex>,
    pub params: Option<usize>,
    pub residuals: Option<usize>,
    pub restarts: Vec<RestartLog>,
    pub outcome: String,
    pub seconds: f64,
}

/// Homogeneous view of a decomposition obtained in changed coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveTerms {
    pub weights: Vec<C>,
    pub points: Vec<Vec<C>>,
    pub at_infinity: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    /// Affine terms; points at infinity are excluded here and listed in `projective`.
    pub decomposition: Decomposition<C>,
    pub projective: Option<ProjectiveTerms>,
    pub rank_used: usize,
    pub solver_residual: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub on_variety_violation: f64,
    pub trace: Vec<AttemptLog>,
}

/// Result of the `w` solve for one rank.
#[derive(Clone, Debug)]
pub struct WSolution {
    pub w: Vec<C>,
    pub residual: f64,
    pub restart: usize,
}

fn complex_gaussian(rng: &mut impl Rng) -> C {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn normalized_residual(rs: &ResidualSystem<C>, w: &[C]) -> f64 {
    rs.eval(w)
        .iter()
        .zip(rs.magnitudes(w))
        .map(|(f, m)| f.norm() / (1.0 + m))
        .fold(0.0, f64::max)
}

/// Levenberg–Marquardt from `w0`; returns the final point, iteration count and normalized residual.
pub fn levenberg_marquardt(rs: &ResidualSystem<C>, w0: Vec<C>, cfg: &SolverConfig) -> (Vec<C>, usize, f64) {
    let m = rs.m();
    // rows scaled to unit largest coefficient
    let weights: Vec<f64> = rs.polys().iter().map(|p| 1.0 / p.max_coeff().max(f64::MIN_POSITIVE)).collect();
    let cost_of = |f: &[C]| f.iter().zip(&weights).map(|(v, s)| (v * s).norm_sqr()).sum::<f64>();
    let mut w = w0;
    let mut mu = -1.0;
    let mut nu = 2.0;
    let mut iters = 0;
    for it in 0..cfg.max_iters {
        iters = it + 1;
        if normalized_residual(rs, &w) <= cfg.residual_tol * 1e-3 {
            break;
        }
        let (f, jac) = rs.eval_jacobian(&w);
        let cost = cost_of(&f);
        let fs = DVector::from_iterator(f.len(), f.iter().zip(&weights).map(|(v, s)| v * s));
        let mut js = jac;
        for (i, s) in weights.iter().enumerate() {
            js.row_mut(i).scale_mut(*s);
        }
        let jh = js.adjoint();
        let h = &jh * &js;
        let g = &jh * &fs;
        let hmax = (0..m).map(|i| h[(i, i)].re).fold(0.0, f64::max).max(1e-300);
        if mu < 0.0 {
            mu = cfg.newton_damping.0 * hmax;
        }
        let mut improved = false;
        while mu <= cfg.newton_damping.1 * hmax {
            let mut a = h.clone();
            for i in 0..m {
                a[(i, i)] += C::new(mu, 0.0);
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                mu *= nu;
                nu *= 2.0;
                continue;
            };
            let trial: Vec<C> = w.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let new_cost = cost_of(&rs.eval(&trial));
            let predicted = (delta.dotc(&(delta.map(|x| x * mu) - &g))).re;
            if new_cost.is_finite() && new_cost < cost {
                let rho = if predicted > 0.0 { (cost - new_cost) / predicted } else { 1.0 };
                mu *= (1.0 / 3.0f64).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                let step = delta.norm();
                let wn = trial.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                w = trial;
                improved = step > 1e-15 * (1.0 + wn);
                break;
            }
            mu *= nu;
            nu *= 2.0;
        }
        if !improved {
            break;
        }
    }
    let res = normalized_residual(rs, &w);
    (w, iters, res)
}

/// Multistart solve; every converged restart is returned, ordered by restart index.
pub fn solve_w_all(rs: &ResidualSystem<C>, cfg: &SolverConfig, seed: u64, log: &mut Vec<RestartLog>) -> Vec<WSolution> {
    solve_w_range(rs, cfg, seed, 0..cfg.restarts, log)
}

/// Restarts `range` of the multistart sequence from complex Gaussian points.
pub fn solve_w_range(
    rs: &ResidualSystem<C>,
    cfg: &SolverConfig,
    seed: u64,
    range: std::ops::Range<usize>,
    log: &mut Vec<RestartLog>,
) -> Vec<WSolution> {
    solve_w_range_from(rs, cfg, seed, range, log, &|_| None)
}

/// Like [`solve_w_range`], but restart `k` begins at `start(k)` when that is `Some`.
pub fn solve_w_range_from(
    rs: &ResidualSystem<C>,
    cfg: &SolverConfig,
    seed: u64,
    range: std::ops::Range<usize>,
    log: &mut Vec<RestartLog>,
    start: &(dyn Fn(usize) -> Option<Vec<C>> + Sync),
) -> Vec<WSolution> {
    let m = rs.m();
    if m == 0 || rs.is_empty() {
        if range.start > 0 {
            return Vec::new();
        }
        let w = vec![C::new(0.0, 0.0); m];
        let residual = normalized_residual(rs, &w);
        log.push(RestartLog { restart: 0, iterations: 0, residual, converged: residual <= cfg.residual_tol, w_norm: 0.0 });
        return if residual <= cfg.residual_tol { vec![WSolution { w, residual, restart: 0 }] } else { Vec::new() };
    }
    let runs: Vec<(RestartLog, Vec<C>)> = range
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
            let scale = cfg.start_scales[k % cfg.start_scales.len()];
            let w0 = start(k)
                .filter(|w| w.len() == m)
                .unwrap_or_else(|| (0..m).map(|_| complex_gaussian(&mut rng) * scale).collect());
            let (w, iterations, residual) = levenberg_marquardt(rs, w0, cfg);
            let w_norm = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            (RestartLog { restart: k, iterations, residual, converged: residual <= cfg.residual_tol, w_norm }, w)
        })
        .collect();
    let mut out = Vec::new();
    for (entry, w) in runs {
        if entry.converged {
            out.push(WSolution { w, residual: entry.residual, restart: entry.restart });
        }
        log.push(entry);
    }
    out
}

/// First converged restart.
pub fn solve_w(rs: &ResidualSystem<C>, cfg: &SolverConfig) -> Result<WSolution> {
    let mut log = Vec::new();
    let sols = solve_w_all(rs, cfg, cfg.seed, &mut log);
    let best = log.iter().map(|l| l.residual).fold(f64::INFINITY, f64::min);
    sols.into_iter().next().ok_or(Error::NoSolution(best))
}

/// Common zeros of `φ[G]` from a numeric generating matrix.
pub fn extract_roots(g: &DMatrix<C>, ctx: &BorderBasisCtx, seed: u64) -> Result<Vec<Vec<C>>> {
    let mats = mult_matrices(g, ctx)?;
    let n = ctx.n();
    let r = ctx.r();
    let scale = mats.iter().map(|m| m.norm()).fold(0.0, f64::max).max(1e-300);
    let mut comm: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            comm = comm.max((&mats[i] * &mats[j] - &mats[j] * &mats[i]).norm());
        }
    }
    if comm > 1e-6 * scale * scale {
        return Err(Error::NonCommuting(comm));
    }
    let transposed: Vec<DMatrix<C>> = mats.iter().map(|m| m.transpose()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..8 {
        let xi: Vec<C> = (0..n).map(|_| complex_gaussian(&mut rng)).collect();
        let xn = xi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let mut mx = DMatrix::<C>::zeros(r, r);
        for (m, x) in transposed.iter().zip(&xi) {
            mx += m * (x / xn);
        }
        let Some((vals, vecs)) = linalg::schur_eigen(&mx) else { continue };
        let spread = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if r > 1 && linalg::min_separation(&vals) <= 1e-6 * (1.0 + spread) {
            continue;
        }
        let points = vecs
            .iter()
            .map(|q| {
                let qq = q.dotc(q);
                transposed.iter().map(|m| q.dotc(&(m * q)) / qq).collect()
            })
            .collect();
        return Ok(points);
    }
    Err(Error::DefectiveSpectrum)
}

/// Least-squares weights over all entries; returns the weights and the linear residual.
pub fn solve_lambdas(a: &SymTensor<C>, points: &[Vec<C>]) -> Result<(Vec<C>, f64)> {
    let idx = a.index_set();
    let r = points.len();
    if r == 0 {
        let res = a.entries().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        return Ok((Vec::new(), res));
    }
    let w = DMatrix::from_fn(idx.len(), r, |i, j| monomial_value(&idx[i], &points[j]));
    if linalg::numeric_rank(&w, 1e-12) < r {
        return Err(Error::RankDeficient);
    }
    let rhs = DVector::from_column_slice(a.entries());
    let lam = linalg::min_norm_solve(&w, &rhs, 1e-14);
    let res = linalg::residual_norm(&w, &lam, &rhs);
    Ok((lam.iter().copied().collect(), res))
}

/// Gauss–Newton refinement of `(λ, v)` against the tensor entries and the variety equations.
pub fn polish(a: &SymTensor<C>, x: &VarietySpec<C>, dec: &Decomposition<C>, iters: usize) -> Decomposition<C> {
    let n = a.n();
    let r = dec.rank();
    if r == 0 || iters == 0 {
        return dec.clone();
    }
    let idx = a.index_set();
    let d = a.order();
    let sq: Vec<f64> = idx.iter().map(|e| (e.multinomial(d) as f64).sqrt()).collect();
    let gens = x.generators_g();
    let grads: Vec<Vec<Poly<C>>> = gens.iter().map(|g| (0..n).map(|i| g.derivative(i)).collect()).collect();
    let gscale: Vec<f64> = gens.iter().map(|g| a.norm(NormKind::HilbertSchmidt).max(1.0) / g.max_coeff()).collect();
    let unknowns = r * (n + 1);
    let rows = idx.len() + r * gens.len();

    let residual = |lam: &[C], pts: &[Vec<C>]| -> DVector<C> {
        let mut f = DVector::zeros(rows);
        for (i, e) in idx.iter().enumerate() {
            let mut s = -*a.get(e.as_slice()).unwrap();
            for j in 0..r {
                s += lam[j] * monomial_value(e, &pts[j]);
            }
            f[i] = s * sq[i];
        }
        for j in 0..r {
            for (k, g) in gens.iter().enumerate() {
                f[idx.len() + j * gens.len() + k] = g.eval(&pts[j]).unwrap() * gscale[k];
            }
        }
        f
    };
    let mut lam = dec.weights.clone();
    let mut pts = dec.points.clone();
    let mut f = residual(&lam, &pts);
    let mut cost = f.norm_squared();
    let mut mu = 1e-8;
    for _ in 0..iters {
        let mut jac = DMatrix::<C>::zeros(rows, unknowns);
        for (i, e) in idx.iter().enumerate() {
            for j in 0..r {
                let col = j * (n + 1);
                jac[(i, col)] = monomial_value(e, &pts[j]) * sq[i];
                for t in 0..n {
                    if let Some(lower) = e.lower(t) {
                        let k = e.as_slice()[t] as f64;
                        jac[(i, col + 1 + t)] = lam[j] * monomial_value(&lower, &pts[j]) * k * sq[i];
                    }
                }
            }
        }
        for j in 0..r {
            for (k, gg) in grads.iter().enumerate() {
                let row = idx.len() + j * gens.len() + k;
                for t in 0..n {
                    jac[(row, j * (n + 1) + 1 + t)] = gg[t].eval(&pts[j]).unwrap() * gscale[k];
                }
            }
        }
        let jh = jac.adjoint();
        let h = &jh * &jac;
        let g = &jh * &f;
        let hmax = (0..unknowns).map(|i| h[(i, i)].re).fold(0.0, f64::max).max(1e-300);
        let mut accepted = false;
        for _ in 0..12 {
            let mut m = h.clone();
            for i in 0..unknowns {
                m[(i, i)] += C::new(mu * hmax, 0.0);
            }
            let Some(delta) = m.lu().solve(&(-&g)) else {
                mu *= 10.0;
                continue;
            };
            let lam2: Vec<C> = (0..r).map(|j| lam[j] + delta[j * (n + 1)]).collect();
            let pts2: Vec<Vec<C>> =
                (0..r).map(|j| (0..n).map(|t| pts[j][t] + delta[j * (n + 1) + 1 + t]).collect()).collect();
            let f2 = residual(&lam2, &pts2);
            let c2 = f2.norm_squared();
            if c2.is_finite() && c2 < cost {
                lam = lam2;
                pts = pts2;
                f = f2;
                accepted = cost - c2 > 1e-12 * cost;
                cost = c2;
                mu = (mu / 10.0).max(1e-15);
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    Decomposition::new(lam, pts)
}

/// `max_{i,j} |g_i(v_j)|` and the allowed bound `variety_tol · (1 + max ‖v_j‖^{deg})`.
fn variety_check(x: &VarietySpec<C>, pts: &[Vec<C>], tol: f64) -> (f64, f64) {
    let viol = pts.iter().map(|p| x.violation(p).unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let vmax = pts.iter().map(|p| p.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()).fold(0.0, f64::max);
    (viol, tol * (1.0 + vmax.powi(x.max_degree() as i32)))
}

/// Outcome of one rank attempt in one coordinate system.
struct RankOutcome {
    dec: Decomposition<C>,
    solver_residual: f64,
}

/// Parameters of the generating matrix that interpolates `r` random points of `Y`.
fn variety_start(fam: &GenMatrixFamily<C>, x: &VarietySpec<C>, seed: u64) -> Option<Vec<C>> {
    let ctx = fam.ctx();
    let r = ctx.r();
    let pts = sample_y(x, r, seed).ok()?;
    let vals = |e: &MultiIndex| DVector::from_iterator(r, pts.iter().map(|p| monomial_value(e, p)));
    let mut v = DMatrix::zeros(r, r);
    for (s, e) in ctx.b0().iter().enumerate() {
        v.set_column(s, &vals(e));
    }
    let lu = v.lu();
    let mut g = DMatrix::zeros(r, ctx.border().len());
    for (j, e) in ctx.border().iter().enumerate() {
        g.set_column(j, &lu.solve(&vals(e))?);
    }
    fam.project(&g).ok()
}

fn attempt_rank(
    a: &SymTensor<C>,
    x: &VarietySpec<C>,
    r: usize,
    cfg: &SolverConfig,
    seed: u64,
    log: &mut AttemptLog,
) -> Result<RankOutcome> {
    let b0 = match &cfg.b0 {
        Some(b) if b.len() == r => b.clone(),
        _ => select_b0(x, r, seed)?,
    };
    log.b0 = b0.clone();
    let ctx = BorderBasisCtx::new(a.n(), b0)?;
    let fam = GenMatrixFamily::numeric(a, &ctx, &cfg.generating)?;
    log.params = Some(fam.m());
    let rs = residual_system(&fam, x.generators_g())?;
    log.residuals = Some(rs.len());
    let norm_a = a.norm(cfg.norm);
    let batch = rayon::current_num_threads().max(8);
    let mut last_err = None;
    let mut start = 0;
    while start < cfg.restarts {
        let end = (start + batch).min(cfg.restarts);
        let from_y = |k: usize| {
            if cfg.variety_starts && k % 2 == 1 {
                variety_start(&fam, x, seed ^ (k as u64).wrapping_mul(0x9FB2_1C65_1E98_DF25))
            } else {
                None
            }
        };
        let sols = solve_w_range_from(&rs, cfg, seed, start..end, &mut log.restarts, &from_y);
        start = end;
        for sol in sols {
            let g = fam.evaluate(&sol.w)?;
            let pts = match extract_roots(&g, &ctx, seed ^ sol.restart as u64) {
                Ok(p) => p,
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            };
            let lam = match solve_lambdas(a, &pts) {
                Ok((l, _)) => l,
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            };
            let dec = polish(a, x, &Decomposition::new(lam, pts), cfg.polish_iters);
            let (_, rel) = a.residual(&dec, cfg.norm)?;
            let (viol, bound) = variety_check(x, &dec.points, cfg.variety_tol);
            if rel <= cfg.rel_tol && viol <= bound {
                return Ok(RankOutcome { dec, solver_residual: sol.residual });
            }
            last_err = Some(if rel > cfg.rel_tol {
                Error::Invalid(format!("verification failed: rel_error {rel:.3e} (‖A‖ = {norm_a:.3e})"))
            } else {
                Error::Invalid(format!("verification failed: variety violation {viol:.3e} > {bound:.3e}"))
            });
        }
    }
    Err(last_err.unwrap_or_else(|| {
        let best = log.restarts.iter().map(|l| l.residual).fold(f64::INFINITY, f64::min);
        Error::NoSolution(best)
    }))
}

/// Random invertible change of coordinates on `C^{n+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordChange {
    pub g: DMatrix<C>,
    pub g_inv: DMatrix<C>,
}

impl CoordChange {
    pub fn identity(n: usize) -> Self {
        CoordChange { g: DMatrix::identity(n + 1, n + 1), g_inv: DMatrix::identity(n + 1, n + 1) }
    }

    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let g = DMatrix::from_fn(n + 1, n + 1, |i, j| {
                let e = if i == j { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) };
                e + complex_gaussian(&mut rng) * 0.5
            });
            if let Some(g_inv) = g.clone().try_inverse() {
                if linalg::numeric_rank(&g, 1e-6) == n + 1 {
                    return CoordChange { g, g_inv };
                }
            }
        }
    }

    fn rows(m: &DMatrix<C>) -> Vec<Vec<C>> {
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    }

    /// `A'(x) = A(gᵀ x)`: a term `λ u^{⊗d}` becomes `λ (g u)^{⊗d}`.
    pub fn transform_tensor(&self, a: &SymTensor<C>) -> Result<SymTensor<C>> {
        let map = Self::rows(&self.g.transpose());
        SymTensor::from_poly(&a.to_poly().linear_substitute(&map)?, a.order())
    }

    /// `h'(x) = h(g^{-1} x)`.
    pub fn transform_variety(&self, x: &VarietySpec<C>) -> Result<VarietySpec<C>> {
        let map = Self::rows(&self.g_inv);
        let hs = x.generators_h().iter().map(|h| h.linear_substitute(&map)).collect::<Result<Vec<_>>>()?;
        let mut out = VarietySpec::new(x.n(), hs)?;
        out.dim_x = x.dim_x;
        Ok(out)
    }

    /// Maps affine terms found in changed coordinates back to homogeneous terms `u = g^{-1}(1, v')`.
    pub fn pullback(&self, dec: &Decomposition<C>, d: u32) -> ProjectiveTerms {
        let mut weights = Vec::new();
        let mut points = Vec::new();
        let mut at_infinity = Vec::new();
        for (lam, v) in dec.weights.iter().zip(&dec.points) {
            let up = DVector::from_iterator(v.len() + 1, std::iter::once(C::new(1.0, 0.0)).chain(v.iter().copied()));
            let u = &self.g_inv * up;
            let un = u.norm();
            let inf = u[0].norm() <= 1e-8 * un;
            if inf {
                weights.push(*lam);
                points.push(u.iter().copied().collect());
            } else {
                let u0 = u[0];
                weights.push(lam * u0.powu(d));
                points.push(u.iter().map(|c| c / u0).collect());
            }
            at_infinity.push(inf);
        }
        ProjectiveTerms { weights, points, at_infinity }
    }
}

/// `Σ_j λ_j u_j^{⊗d}` for homogeneous terms.
pub fn reconstruct_projective(terms: &ProjectiveTerms, n: usize, d: u32) -> SymTensor<C> {
    let mut acc = SymTensor::zeros(n, d);
    for (lam, u) in terms.weights.iter().zip(&terms.points) {
        acc = acc.try_add(&SymTensor::rank_one_homogeneous(lam, u, d)).expect("same shape");
    }
    acc
}

/// Applies a random change of coordinates to the tensor (the variety must be changed alongside).
pub fn preprocess_generic_change(a: &SymTensor<C>, seed: u64) -> Result<(SymTensor<C>, CoordChange)> {
    let change = CoordChange::random(a.n(), seed);
    Ok((change.transform_tensor(a)?, change))
}

/// `(abs_error, rel_error, variety violation)` of affine or projective terms.
fn measure(
    a: &SymTensor<C>,
    x: &VarietySpec<C>,
    cfg: &SolverConfig,
    dec: &Decomposition<C>,
    proj: Option<&ProjectiveTerms>,
) -> Result<(f64, f64, f64)> {
    let Some(proj) = proj else {
        let (abs, rel) = a.residual(dec, cfg.norm)?;
        let (viol, _) = variety_check(x, &dec.points, cfg.variety_tol);
        return Ok((abs, rel, viol));
    };
    let rec = reconstruct_projective(proj, a.n(), a.order());
    let abs = a.try_sub(&rec)?.norm(cfg.norm);
    let base = a.norm(cfg.norm);
    let rel = if base > 0.0 { abs / base } else { abs };
    let mut viol: f64 = 0.0;
    for u in &proj.points {
        let un = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for h in x.generators_h() {
            viol = viol.max(h.eval(u)?.norm() / un.max(1.0).powi(h.degree().unwrap_or(0) as i32));
        }
    }
    Ok((abs, rel, viol))
}

fn finish(
    a: &SymTensor<C>,
    x: &VarietySpec<C>,
    cfg: &SolverConfig,
    r: usize,
    out: RankOutcome,
    change: Option<&CoordChange>,
    trace: Vec<AttemptLog>,
) -> Result<DecompositionResult> {
    let (decomposition, projective) = match change {
        None => (out.dec, None),
        Some(ch) => {
            let proj = ch.pullback(&out.dec, a.order());
            let affine: Vec<usize> = (0..proj.points.len()).filter(|&j| !proj.at_infinity[j]).collect();
            let dec = Decomposition::new(
                affine.iter().map(|&j| proj.weights[j]).collect(),
                affine.iter().map(|&j| proj.points[j][1..].to_vec()).collect(),
            );
            (dec, Some(proj))
        }
    };
    let (abs_error, rel_error, on_variety_violation) = measure(a, x, cfg, &decomposition, projective.as_ref())?;
    Ok(DecompositionResult {
        decomposition,
        projective,
        rank_used: r,
        solver_residual: out.solver_residual,
        abs_error,
        rel_error,
        on_variety_violation,
        trace,
    })
}

/// Power-of-two scales `s_i ≈ (|A_{d e_i}| / |A_0|)^{1/d}`; 1 where either entry vanishes.
pub fn balancing_scales(a: &SymTensor<C>) -> Vec<f64> {
    let (n, d) = (a.n(), a.order());
    let a0 = a.entries()[0].norm();
    (0..n)
        .map(|i| {
            let mut pure = vec![0; n];
            pure[i] = d;
            let ai = a.get(&pure).map_or(0.0, |v| v.norm());
            if a0 == 0.0 || ai == 0.0 || d == 0 {
                return 1.0;
            }
            let e = ((ai / a0).log2() / d as f64).round().clamp(-10.0, 10.0);
            2f64.powi(e as i32)
        })
        .collect()
}

/// `A'_α = A_α / s^α`, the tensor of the points `v / s`.
pub fn scale_tensor(a: &SymTensor<C>, s: &[f64]) -> SymTensor<C> {
    SymTensor::from_fn(a.n(), a.order(), |alpha| {
        let f: f64 = alpha.as_slice().iter().zip(s).map(|(&k, si)| si.powi(k as i32)).product();
        a.get(alpha.as_slice()).expect("same index set") / f
    })
}

/// `h'(x_0, x') = h(x_0, s ∘ x')`, the variety containing the points `v / s`.
pub fn scale_variety(x: &VarietySpec<C>, s: &[f64]) -> Result<VarietySpec<C>> {
    let gens = x
        .generators_h()
        .iter()
        .map(|h| {
            Poly::from_terms(
                h.nvars(),
                h.terms().map(|(e, c)| {
                    let f: f64 = e.as_slice()[1..].iter().zip(s).map(|(&k, si)| si.powi(k as i32)).product();
                    (e.clone(), c * f)
                }),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = VarietySpec::new(x.n(), gens)?;
    out.dim_x = x.dim_x;
    out.witness = x.witness.as_ref().map(|w| {
        w.iter()
            .map(|u| {
                let off = u.len() - s.len();
                u.iter().enumerate().map(|(i, c)| if i < off { *c } else { c / s[i - off] }).collect()
            })
            .collect()
    });
    Ok(out)
}

/// Algorithm driver: increase `r` from the flattening bound until a verified decomposition appears.
pub fn decompose(a: &SymTensor<C>, x: &VarietySpec<C>, cfg: &SolverConfig) -> Result<DecompositionResult> {
    cfg.validate()?;
    if a.n() != x.n() {
        return Err(Error::NvarsMismatch(a.n(), x.n()));
    }
    if let Some(tol) = cfg.membership_tol {
        let rep = membership(a, x, tol)?;
        if let Some((generator, _)) = rep.violating {
            return Err(Error::NotAMember { generator, violation: rep.worst_violation });
        }
    }
    let s = if cfg.balance { balancing_scales(a) } else { vec![1.0; a.n()] };
    if s.iter().all(|&v| v == 1.0) {
        return escalate(a, x, cfg);
    }
    let mut res = escalate(&scale_tensor(a, &s), &scale_variety(x, &s)?, cfg)?;
    for v in res.decomposition.points.iter_mut() {
        v.iter_mut().zip(&s).for_each(|(c, si)| *c *= si);
    }
    if let Some(p) = res.projective.as_mut() {
        for u in p.points.iter_mut() {
            u[1..].iter_mut().zip(&s).for_each(|(c, si)| *c *= si);
        }
    }
    let (abs, rel, viol) = measure(a, x, cfg, &res.decomposition, res.projective.as_ref())?;
    res.abs_error = abs;
    res.rel_error = rel;
    res.on_variety_violation = viol;
    Ok(res)
}

fn escalate(a: &SymTensor<C>, x: &VarietySpec<C>, cfg: &SolverConfig) -> Result<DecompositionResult> {
    let mut trace = Vec::new();
    if a.is_zero() {
        let out = RankOutcome { dec: Decomposition::empty(), solver_residual: 0.0 };
        return finish(a, x, cfg, 0, out, None, trace);
    }
    let start = cfg.rank_min.max(a.max_flattening_rank(cfg.flattening_tol));
    let max_rank = cfg.rank_max.min(monomials_up_to(a.n(), a.order()).len());
    if start > max_rank {
        return Err(Error::RankExhausted { min: start, max: cfg.rank_max });
    }
    for r in start..=max_rank {
        let seed = cfg.seed.wrapping_add((r as u64).wrapping_mul(0x2545_F491_4F6C_DD1D));
        let direct = cfg.generic_change != GenericChange::Always;
        let mut retry = false;
        if direct {
            let t0 = Instant::now();
            let mut log = new_log(r, false);
            let res = attempt_rank(a, x, r, cfg, seed, &mut log);
            log.seconds = t0.elapsed().as_secs_f64();
            match res {
                Ok(out) => {
                    log.outcome = "success".into();
                    trace.push(log);
                    return finish(a, x, cfg, r, out, None, trace);
                }
                Err(e) => {
                    let best = log.restarts.iter().min_by(|a, b| a.residual.total_cmp(&b.residual));
                    let escaping = best.is_some_and(|l| l.w_norm > cfg.escape_norm);
                    retry = escaping || matches!(e, Error::InconsistentSystem { .. });
                    let stop = matches!(e, Error::EmptyRowSet(_) | Error::NotEnoughMonomials { .. });
                    log.outcome = e.to_string();
                    trace.push(log);
                    if stop && cfg.generic_change == GenericChange::Never {
                        break;
                    }
                }
            }
        }
        if cfg.generic_change == GenericChange::Always || (cfg.generic_change == GenericChange::Auto && retry) {
            let t0 = Instant::now();
            let mut log = new_log(r, true);
            let (a2, change) = preprocess_generic_change(a, seed ^ 0xA5A5_A5A5)?;
            let res = change.transform_variety(x).and_then(|x2| {
                attempt_rank(&a2, &x2, r, cfg, seed, &mut log).map(|out| (out, x2))
            });
            log.seconds = t0.elapsed().as_secs_f64();
            match res {
                Ok((out, _)) => {
                    log.outcome = "success".into();
                    trace.push(log);
                    return finish(a, x, cfg, r, out, Some(&change), trace);
                }
                Err(e) => {
                    log.outcome = e.to_string();
                    trace.push(log);
                }
            }
        }
    }
    Err(Error::RankExhausted { min: start, max: max_rank })
}

fn new_log(rank: usize, generic_change: bool) -> AttemptLog {
    AttemptLog {
        rank,
        generic_change,
        b0: Vec::new(),
        params: None,
        residuals: None,
        restarts: Vec::new(),
        outcome: String::new(),
        seconds: 0.0,
    }
}

/// Decomposition at exactly one rank, without escalation.
pub fn decompose_at_rank(a: &SymTensor<C>, x: &VarietySpec<C>, r: usize, cfg: &SolverConfig) -> Result<DecompositionResult> {
    let mut c = cfg.clone();
    c.rank_min = r;
    c.rank_max = r;
    c.flattening_tol = f64::INFINITY;
    decompose(a, x, &c)
}
