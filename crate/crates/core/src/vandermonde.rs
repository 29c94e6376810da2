//! Vandermonde decompositions of nonsymmetric `(d+1) × … × (d+1)` arrays.
//!
//! A `k`-way array is embedded as a symmetric tensor on `C^{2^k}` whose
//! decompositions on the Segre variety `P^1 × … × P^1` are exactly the
//! Vandermonde decompositions of the array. Variable `x_ν`, `ν ∈ {0,1}^k`, has
//! index `Σ_s ν_s 2^{s-1}`, so `x_0` belongs to `ν = 0`.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposer::{decompose, SolverConfig};
use crate::error::{Error, Result};
use crate::io::{pairs, MultiwayJson};
use crate::linalg;
use crate::multiindex::MultiIndex;
use crate::poly::Poly;
use crate::scalar::Field;
use crate::tensor::SymTensor;
use crate::variety::VarietySpec;

type C = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiwayTensor<S> {
    k: usize,
    d: usize,
    entries: Vec<S>,
}

impl<S: Field> MultiwayTensor<S> {
    pub fn zeros(k: usize, d: usize) -> Self {
        MultiwayTensor { k, d, entries: vec![S::zero(); (d + 1).pow(k as u32)] }
    }

    /// Row-major entries.
    pub fn from_entries(k: usize, d: usize, entries: Vec<S>) -> Result<Self> {
        let expected = (d + 1).pow(k as u32);
        if entries.len() != expected {
            return Err(Error::LengthMismatch { expected, found: entries.len() });
        }
        Ok(MultiwayTensor { k, d, entries })
    }

    pub fn from_fn(k: usize, d: usize, f: impl Fn(&[usize]) -> S) -> Self {
        let mut t = Self::zeros(k, d);
        let mut idx = vec![0; k];
        for e in t.entries.iter_mut() {
            *e = f(&idx);
            increment(&mut idx, d);
        }
        t
    }

    pub fn modes(&self) -> usize {
        self.k
    }

    pub fn order(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    fn offset(&self, idx: &[usize]) -> Option<usize> {
        if idx.len() != self.k || idx.iter().any(|&i| i > self.d) {
            return None;
        }
        Some(idx.iter().fold(0, |acc, &i| acc * (self.d + 1) + i))
    }

    pub fn get(&self, idx: &[usize]) -> Option<&S> {
        self.offset(idx).map(|o| &self.entries[o])
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|v| v.modulus().powi(2)).sum::<f64>().sqrt()
    }
}

impl MultiwayTensor<C> {
    pub fn to_json(&self) -> MultiwayJson {
        MultiwayJson { k: self.k, d: self.d, entries: pairs(&self.entries) }
    }

    pub fn from_json(js: &MultiwayJson) -> Result<Self> {
        Self::from_entries(js.k, js.d, crate::io::from_pairs(&js.entries))
    }
}

fn increment(idx: &mut [usize], d: usize) {
    for i in idx.iter_mut().rev() {
        if *i < d {
            *i += 1;
            return;
        }
        *i = 0;
    }
}

/// `(a^d, a^{d-1} b, …, b^d)`.
pub fn moment_vector(a: C, b: C, d: usize) -> Vec<C> {
    (0..=d).map(|i| a.powu((d - i) as u32) * b.powu(i as u32)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VandermondeTerm {
    /// Scalar folded into mode 1.
    pub weight: C,
    /// `(a_s, b_s)` for each mode.
    pub pairs: Vec<(C, C)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VandermondeDecomposition {
    pub k: usize,
    pub d: usize,
    pub terms: Vec<VandermondeTerm>,
}

impl VandermondeDecomposition {
    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn reconstruct(&self) -> MultiwayTensor<C> {
        let mut out = MultiwayTensor::zeros(self.k, self.d);
        for t in &self.terms {
            let moments: Vec<Vec<C>> = t.pairs.iter().map(|&(a, b)| moment_vector(a, b, self.d)).collect();
            let mut idx = vec![0; self.k];
            for e in out.entries.iter_mut() {
                *e += t.weight * idx.iter().zip(&moments).map(|(&i, m)| m[i]).product::<C>();
                increment(&mut idx, self.d);
            }
        }
        out
    }

    /// `‖A − Ã‖_F / ‖A‖_F`.
    pub fn rel_error(&self, a: &MultiwayTensor<C>) -> f64 {
        let rec = self.reconstruct();
        let diff = a.entries.iter().zip(&rec.entries).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        let base = a.frobenius();
        if base > 0.0 { diff / base } else { diff }
    }
}

/// Homogeneous variable index of `x_ν`.
pub fn segre_index(nu: &[u8]) -> usize {
    nu.iter().enumerate().map(|(s, &b)| (b as usize) << s).sum()
}

fn bits(idx: usize, k: usize) -> Vec<u8> {
    (0..k).map(|s| ((idx >> s) & 1) as u8).collect()
}

/// Quadratic binomials `x_μ x_ν − x_η x_θ` with `μ + ν = η + θ`, on `P^{2^k − 1}`.
pub fn segre_variety<S: Field>(k: usize) -> Result<VarietySpec<S>> {
    if k < 2 {
        return Err(Error::Invalid(format!("Segre variety needs k ≥ 2, got {k}")));
    }
    let nv = 1usize << k;
    let mut fibers: BTreeMap<Vec<u8>, Vec<(usize, usize)>> = BTreeMap::new();
    for mu in 0..nv {
        for nu in mu..nv {
            let (bm, bn) = (bits(mu, k), bits(nu, k));
            let sum: Vec<u8> = bm.iter().zip(&bn).map(|(a, b)| a + b).collect();
            fibers.entry(sum).or_default().push((mu, nu));
        }
    }
    let quad = |p: usize, q: usize| MultiIndex::unit(nv, p).add(&MultiIndex::unit(nv, q));
    let mut gens = Vec::new();
    for pairs in fibers.values() {
        for (i, &(a, b)) in pairs.iter().enumerate() {
            for &(c, e) in &pairs[i + 1..] {
                gens.push(Poly::from_terms(nv, [(quad(a, b), S::one()), (quad(c, e), -S::one())])?);
            }
        }
    }
    Ok(VarietySpec::new(nv - 1, gens)?.with_dim(k + 1))
}

/// `i_s(α) = Σ_ν α_ν ν_s` over the homogeneous exponent of `α`.
fn mode_indices(alpha: &MultiIndex, d: u32, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    let full = alpha.homogenize(d).expect("|α| ≤ d");
    for (v, &e) in full.as_slice().iter().enumerate() {
        for (s, o) in out.iter_mut().enumerate() {
            *o += ((v >> s) & 1) * e as usize;
        }
    }
    out
}

/// Symmetric tensor `B_α = A_{i(α)}` in `S^d(C^{2^k})`.
pub fn embed<S: Field>(a: &MultiwayTensor<S>) -> SymTensor<S> {
    let n = (1usize << a.k) - 1;
    let d = a.d as u32;
    SymTensor::from_fn(n, d, |alpha| a.get(&mode_indices(alpha, d, a.k)).expect("indices bounded by d").clone())
}

/// Splits a homogeneous Segre point `u` into `c · (a_1,b_1) ⊗ … ⊗ (a_k,b_k)`; returns the pairs, `c`, and the relative misfit.
fn factor_segre_point(u: &[C], k: usize) -> (Vec<(C, C)>, C, f64) {
    let mut factors = Vec::with_capacity(k);
    if u[0].norm() > 1e-8 * u.iter().map(|c| c.norm()).fold(0.0, f64::max) {
        for s in 0..k {
            factors.push((C::new(1.0, 0.0), u[1 << s] / u[0]));
        }
    } else {
        for s in 0..k {
            let unfolding = DMatrix::from_fn(2, 1 << (k - 1), |row, col| {
                let low = col & ((1 << s) - 1);
                let high = (col >> s) << (s + 1);
                u[high | (row << s) | low]
            });
            let svd = unfolding.svd(true, false);
            let lead = svd.singular_values.imax();
            let left = svd.u.expect("requested").column(lead).into_owned();
            factors.push((left[0], left[1]));
        }
    }
    let product = |idx: usize| -> C {
        factors.iter().enumerate().map(|(s, &(a, b))| if (idx >> s) & 1 == 1 { b } else { a }).product()
    };
    let basis: Vec<C> = (0..u.len()).map(product).collect();
    let bn = basis.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let scale = basis.iter().zip(u).map(|(b, x)| b.conj() * x).sum::<C>() / bn;
    let un = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let misfit = basis.iter().zip(u).map(|(b, x)| (b * scale - x).norm_sqr()).sum::<f64>().sqrt() / un;
    (factors, scale, misfit)
}

/// Decomposes on the Segre variety and reads the mode pairs off the recovered points.
pub fn vdecompose(a: &MultiwayTensor<C>, cfg: &SolverConfig) -> Result<VandermondeDecomposition> {
    let (k, d) = (a.k, a.d);
    let b = embed(a);
    let x = segre_variety::<C>(k)?;
    let res = decompose(&b, &x, cfg)?;
    let homogeneous: Vec<(C, Vec<C>)> = match &res.projective {
        Some(p) => p.weights.iter().copied().zip(p.points.iter().cloned()).collect(),
        None => res
            .decomposition
            .weights
            .iter()
            .zip(&res.decomposition.points)
            .map(|(l, v)| (*l, std::iter::once(C::new(1.0, 0.0)).chain(v.iter().copied()).collect()))
            .collect(),
    };
    let mut terms = Vec::with_capacity(homogeneous.len());
    let mut worst: f64 = 0.0;
    for (lam, u) in homogeneous {
        let (factors, scale, misfit) = factor_segre_point(&u, k);
        worst = worst.max(misfit);
        terms.push(VandermondeTerm { weight: lam * scale.powu(d as u32), pairs: factors });
    }
    if worst > cfg.variety_tol {
        return Err(Error::VandermondeConsistency(worst));
    }
    Ok(VandermondeDecomposition { k, d, terms })
}

/// Nodes used by [`vandermonde_oracle`].
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleNodes {
    /// `(d+1)`-st roots of unity.
    #[default]
    RootsOfUnity,
    /// `0, 1, …, d`.
    Equispaced,
    Custom(Vec<C>),
}

impl OracleNodes {
    pub fn nodes(&self, d: usize) -> Vec<C> {
        match self {
            OracleNodes::RootsOfUnity => {
                (0..=d).map(|l| C::from_polar(1.0, 2.0 * std::f64::consts::PI * l as f64 / (d + 1) as f64)).collect()
            }
            OracleNodes::Equispaced => {
                (0..=d).map(|l| C::new(if d == 0 { 0.0 } else { -1.0 + 2.0 * l as f64 / d as f64 }, 0.0)).collect()
            }
            OracleNodes::Custom(v) => v.clone(),
        }
    }
}

/// `(d+1)^k`-term decomposition in the basis `v_{j_1} ⊗ … ⊗ v_{j_k}`, `v_l = (1, t_l, …, t_l^d)`.
pub fn vandermonde_oracle(a: &MultiwayTensor<C>, nodes: &[C]) -> Result<VandermondeDecomposition> {
    let (k, d) = (a.k, a.d);
    if nodes.len() != d + 1 {
        return Err(Error::LengthMismatch { expected: d + 1, found: nodes.len() });
    }
    let spread = nodes.iter().map(|t| t.norm()).fold(0.0, f64::max);
    if nodes.len() > 1 && linalg::min_separation(nodes) <= 1e-12 * (1.0 + spread) {
        return Err(Error::CoincidentNodes);
    }
    let v = DMatrix::from_fn(d + 1, d + 1, |i, l| nodes[l].powu(i as u32));
    let vinv = v.try_inverse().ok_or(Error::CoincidentNodes)?;
    // apply V^{-1} along every mode
    let mut core = a.entries.clone();
    let size = d + 1;
    for s in 0..k {
        let stride = size.pow((k - 1 - s) as u32);
        let mut next = vec![C::new(0.0, 0.0); core.len()];
        for (off, out) in next.iter_mut().enumerate() {
            let j = (off / stride) % size;
            let base = off - j * stride;
            *out = (0..size).map(|i| vinv[(j, i)] * core[base + i * stride]).sum();
        }
        core = next;
    }
    let mut idx = vec![0; k];
    let mut terms = Vec::with_capacity(core.len());
    for c in core {
        terms.push(VandermondeTerm { weight: c, pairs: idx.iter().map(|&j| (C::new(1.0, 0.0), nodes[j])).collect() });
        increment(&mut idx, d);
    }
    Ok(VandermondeDecomposition { k, d, terms })
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Random `r`-term Vandermonde decomposition with `a_s = 1` and Gaussian `b_s`, weights.
pub fn random_vandermonde(k: usize, d: usize, r: usize, seed: u64) -> VandermondeDecomposition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = (0..r)
        .map(|_| VandermondeTerm {
            weight: complex_gaussian(&mut rng),
            pairs: (0..k).map(|_| (C::new(1.0, 0.0), complex_gaussian(&mut rng))).collect(),
        })
        .collect();
    VandermondeDecomposition { k, d, terms }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub time: f64,
    /// `NaN` when the decomposition failed.
    pub rel_error: f64,
}

/// Plants `r` random Vandermonde terms per trial and times their recovery.
pub fn bench(k: usize, d: usize, r: usize, trials: usize, seed: u64, cfg: &SolverConfig) -> Vec<BenchRow> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = seed.wrapping_add(t as u64);
            let a = random_vandermonde(k, d, r, trial_seed).reconstruct();
            let mut c = cfg.clone();
            c.seed = trial_seed;
            let t0 = Instant::now();
            let rel = vdecompose(&a, &c).map(|dec| dec.rel_error(&a)).unwrap_or(f64::NAN);
            BenchRow { k, n: (1 << k) - 1, d, r, time: t0.elapsed().as_secs_f64(), rel_error: rel }
        })
        .collect()
}
