//! Projective varieties given by homogeneous generators, and their affine charts.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::multiindex::{binomial, monomials_of_degree, monomials_up_to, MultiIndex};
use crate::poly::{monomial_value, Poly};
use crate::scalar::Field;
use crate::tensor::{NormKind, SymTensor};

/// `X ⊂ P^n` cut out by homogeneous `h_1..h_s`, and `Y = {y : h_i(1, y) = 0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct VarietySpec<S> {
    n: usize,
    generators_h: Vec<Poly<S>>,
    generators_g: Vec<Poly<S>>,
    pub dim_x: Option<usize>,
    pub witness: Option<Vec<Vec<S>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub member: bool,
    pub worst_violation: f64,
    /// First failing `(generator index, β)`.
    pub violating: Option<(usize, MultiIndex)>,
    pub threshold: f64,
}

impl<S: Field> VarietySpec<S> {
    /// Generators are homogeneous polynomials in `x_0..x_n`; they are kept sorted by degree.
    pub fn new(n: usize, mut generators: Vec<Poly<S>>) -> Result<Self> {
        for h in &generators {
            if h.nvars() != n + 1 {
                return Err(Error::NvarsMismatch(n + 1, h.nvars()));
            }
            let deg = h.degree().unwrap_or(0);
            if !h.is_homogeneous(deg) {
                return Err(Error::NotHomogeneous(deg));
            }
        }
        generators.retain(|h| h.num_terms() > 0);
        generators.sort_by_key(|h| h.degree());
        let generators_g = generators.iter().map(|h| h.dehomogenize()).collect::<Result<_>>()?;
        Ok(VarietySpec { n, generators_h: generators, generators_g, dim_x: None, witness: None })
    }

    /// From affine generators in `y_1..y_n`, each homogenized to its own degree.
    pub fn from_affine(n: usize, generators: Vec<Poly<S>>) -> Result<Self> {
        let hs = generators
            .iter()
            .map(|g| {
                if g.nvars() != n {
                    return Err(Error::NvarsMismatch(n, g.nvars()));
                }
                g.homogenize(g.degree().unwrap_or(0))
            })
            .collect::<Result<_>>()?;
        Self::new(n, hs)
    }

    /// The whole space `P^n`.
    pub fn full_space(n: usize) -> Self {
        VarietySpec { n, generators_h: Vec::new(), generators_g: Vec::new(), dim_x: Some(n + 1), witness: None }
    }

    pub fn with_dim(mut self, dim_x: usize) -> Self {
        self.dim_x = Some(dim_x);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators_h(&self) -> &[Poly<S>] {
        &self.generators_h
    }

    pub fn generators_g(&self) -> &[Poly<S>] {
        &self.generators_g
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.generators_h.iter().map(|h| h.degree().unwrap_or(0)).collect()
    }

    /// Largest affine generator degree (0 when there are none).
    pub fn max_degree(&self) -> u32 {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn map<T: Field>(&self, f: impl Fn(&S) -> T + Copy) -> VarietySpec<T> {
        VarietySpec {
            n: self.n,
            generators_h: self.generators_h.iter().map(|p| p.map_coeffs(f)).collect(),
            generators_g: self.generators_g.iter().map(|p| p.map_coeffs(f)).collect(),
            dim_x: self.dim_x,
            witness: self.witness.as_ref().map(|w| w.iter().map(|p| p.iter().map(f).collect()).collect()),
        }
    }

    pub fn to_c64(&self) -> VarietySpec<Complex64> {
        self.map(|c| c.to_c64())
    }

    /// `max_i |g_i(v)|` for an affine point.
    pub fn violation(&self, v: &[S]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for g in &self.generators_g {
            worst = worst.max(g.eval(v)?.modulus());
        }
        Ok(worst)
    }
}

/// Checks `⟨(f_t x^β)(1, y), A⟩ = 0` for every generator with `d_t ≤ d` and `|β| = d − d_t`.
///
/// Each generator is scaled to unit largest coefficient. Exact scalars require exact zeros.
pub fn membership<S: Field>(a: &SymTensor<S>, x: &VarietySpec<S>, tol: f64) -> Result<MembershipReport> {
    if a.n() != x.n {
        return Err(Error::NvarsMismatch(a.n(), x.n));
    }
    let d = a.order();
    let threshold = if S::EXACT { 0.0 } else { tol * (1.0 + a.norm(NormKind::HilbertSchmidt)) };
    let mut worst: f64 = 0.0;
    let mut violating = None;
    for (t, f) in x.generators_h.iter().enumerate() {
        let dt = f.degree().unwrap_or(0);
        if dt > d {
            continue;
        }
        let scale = if S::EXACT { 1.0 } else { f.max_coeff() };
        for (beta, shifted) in f.multiples_of_degree(d - dt) {
            let v = a.apolar_pair(&shifted.dehomogenize()?)?;
            let size = if S::EXACT {
                if v.is_zero() { 0.0 } else { v.modulus().max(f64::MIN_POSITIVE) }
            } else {
                v.modulus() / scale
            };
            worst = worst.max(size);
            if violating.is_none() && size > threshold {
                violating = Some((t, beta));
            }
        }
    }
    Ok(MembershipReport { member: violating.is_none(), worst_violation: worst, violating, threshold })
}

/// Numeric rank of the coefficient matrix of all `f_t x^β` of degree `d`.
pub fn ideal_dim_at_degree<S: Field>(x: &VarietySpec<S>, d: u32, tol: f64) -> usize {
    let cols = monomials_of_degree(x.n + 1, d);
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for f in &x.generators_h {
        let dt = f.degree().unwrap_or(0);
        if dt > d {
            continue;
        }
        for (_, p) in f.multiples_of_degree(d - dt) {
            rows.push(cols.iter().map(|m| p.coeff(m).to_c64()).collect());
        }
    }
    if rows.is_empty() {
        return 0;
    }
    let mat = DMatrix::from_fn(rows.len(), cols.len(), |i, j| rows[i][j]);
    linalg::numeric_rank(&mat, tol)
}

/// `dim S^d(X) = binom(n+d, d) − c`.
pub fn hilbert_value<S: Field>(x: &VarietySpec<S>, d: u32) -> usize {
    binomial(x.n + d as usize, d as usize) - ideal_dim_at_degree(x, d, 1e-10)
}

/// `⌈h / dim X⌉`, estimating `dim X` from a witness or a sampled point when not supplied.
pub fn exp_grank<S: Field>(x: &VarietySpec<S>, d: u32, seed: u64) -> Result<usize> {
    let dim = match x.dim_x {
        Some(k) => k,
        None => resolve_dim(x, seed)?,
    };
    if dim == 0 {
        return Err(Error::UnknownDimension);
    }
    Ok(hilbert_value(x, d).div_ceil(dim))
}

fn resolve_dim<S: Field>(x: &VarietySpec<S>, seed: u64) -> Result<usize> {
    let xc = x.to_c64();
    let point = match xc.witness.as_ref().and_then(|w| w.first().cloned()) {
        Some(p) if p.len() == x.n + 1 => p,
        Some(p) if p.len() == x.n => std::iter::once(Complex64::new(1.0, 0.0)).chain(p).collect(),
        _ => {
            let y = sample_y(&xc, 1, seed).map_err(|_| Error::UnknownDimension)?;
            std::iter::once(Complex64::new(1.0, 0.0)).chain(y[0].iter().copied()).collect()
        }
    };
    estimate_dim_x(&xc, &point)
}

/// `n + 1 − rank J_h(u)` at a homogeneous witness `u`.
pub fn estimate_dim_x(x: &VarietySpec<Complex64>, u: &[Complex64]) -> Result<usize> {
    if u.len() != x.n + 1 {
        return Err(Error::LengthMismatch { expected: x.n + 1, found: u.len() });
    }
    let un = u.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for h in &x.generators_h {
        let deg = h.degree().unwrap_or(0) as i32;
        let res = h.eval(u)?.norm();
        if res > 1e-8 * (1.0 + un.powi(deg)) * h.max_coeff() {
            return Err(Error::WitnessOffVariety(res));
        }
    }
    if x.generators_h.is_empty() {
        return Ok(x.n + 1);
    }
    let jac = DMatrix::from_fn(x.generators_h.len(), x.n + 1, |i, j| {
        x.generators_h[i].derivative(j).eval(u).expect("sizes checked")
    });
    Ok(x.n + 1 - linalg::numeric_rank(&jac, 1e-8))
}

fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Points on `Y` by minimum-norm Newton iterations from random complex starts.
pub fn sample_y(x: &VarietySpec<Complex64>, count: usize, seed: u64) -> Result<Vec<Vec<Complex64>>> {
    let n = x.n;
    let gens = x.generators_g.clone();
    let grads: Vec<Vec<Poly<Complex64>>> = gens.iter().map(|g| (0..n).map(|i| g.derivative(i)).collect()).collect();
    let results: Vec<std::result::Result<Vec<Complex64>, f64>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64));
            let mut best = f64::INFINITY;
            for _ in 0..50 {
                let mut y: Vec<Complex64> = (0..n).map(|_| complex_gaussian(&mut rng)).collect();
                if gens.is_empty() {
                    return Ok(y);
                }
                for _ in 0..100 {
                    let f = DVector::from_iterator(gens.len(), gens.iter().map(|g| g.eval(&y).unwrap()));
                    let worst = on_y_violation(&gens, &y);
                    if worst <= 1e-12 {
                        break;
                    }
                    let jac = DMatrix::from_fn(gens.len(), n, |i, j| grads[i][j].eval(&y).unwrap());
                    let step = linalg::min_norm_solve(&jac, &f, 1e-12);
                    for (yi, s) in y.iter_mut().zip(step.iter()) {
                        *yi -= s;
                    }
                }
                let worst = on_y_violation(&gens, &y);
                best = best.min(worst);
                let size = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
                if worst <= 1e-10 && size < 1e3 {
                    return Ok(y);
                }
            }
            Err(best)
        })
        .collect();
    results.into_iter().map(|r| r.map_err(Error::SamplingFailed)).collect()
}

/// `max_i |g_i(y)| / (1 + ‖y‖^{deg g_i})`.
fn on_y_violation(gens: &[Poly<Complex64>], y: &[Complex64]) -> f64 {
    let yn = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    gens.iter()
        .map(|g| g.eval(y).unwrap().norm() / (1.0 + yn.powi(g.degree().unwrap_or(0) as i32)))
        .fold(0.0, f64::max)
}

/// First `r` monomials, in canonical order, that are linearly independent as functions on `Y`.
pub fn select_b0<S: Field>(x: &VarietySpec<S>, r: usize, seed: u64) -> Result<Vec<MultiIndex>> {
    let n = x.n;
    let mut cap = 0u32;
    while binomial(n + cap as usize, cap as usize) < 3 * r {
        cap += 1;
    }
    let pts = sample_y(&x.to_c64(), (5 * r).max(40), seed)?;
    let mut basis: Vec<DVector<Complex64>> = Vec::new();
    let mut chosen = Vec::new();
    for mono in monomials_up_to(n, cap) {
        let col = DVector::from_iterator(pts.len(), pts.iter().map(|p| monomial_value(&mono, p)));
        let norm0 = col.norm();
        if norm0 == 0.0 {
            continue;
        }
        let mut v = col;
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&v);
                v -= q * c;
            }
        }
        let nv = v.norm();
        if nv > 1e-7 * norm0 {
            basis.push(v / Complex64::new(nv, 0.0));
            chosen.push(mono);
            if chosen.len() == r {
                return Ok(chosen);
            }
        }
    }
    Err(Error::NotEnoughMonomials { wanted: r, found: chosen.len(), max_degree: cap })
}
