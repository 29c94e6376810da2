//! Dense symmetric tensors stored in the affine α-labeling.
//!
//! An order-`d` symmetric tensor on `C^{n+1}` is kept as one entry per
//! `α ∈ N^n` with `|α| ≤ d`: the entry `A_α` equals `A_{i_1…i_d}` whenever
//! `x_0^{d-|α|} x^α = x_{i_1}⋯x_{i_d}`. Entries are stored in canonical
//! monomial order, so position lookups are a closed-form rank computation.

use nalgebra::{ComplexField, DMatrix};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg;
use crate::multiindex::{count_up_to, monomials_up_to, rank_in_order, MultiIndex};
use crate::poly::{monomial_value, Poly};
use crate::scalar::Field;

#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor<S> {
    n: usize,
    d: u32,
    entries: Vec<S>,
}

/// `Σ_j λ_j (1, v_j)^{⊗d}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition<S> {
    pub weights: Vec<S>,
    pub points: Vec<Vec<S>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Square root of the sum of squared moduli over all `(n+1)^d` full-index entries.
    #[default]
    HilbertSchmidt,
    /// Euclidean norm of the coefficient vector of the associated form.
    Coefficient,
}

impl<S> Decomposition<S> {
    pub fn new(weights: Vec<S>, points: Vec<Vec<S>>) -> Self {
        Decomposition { weights, points }
    }

    pub fn empty() -> Self {
        Decomposition { weights: Vec::new(), points: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }
}

impl<S: Field> SymTensor<S> {
    pub fn zeros(n: usize, d: u32) -> Self {
        SymTensor { n, d, entries: vec![S::zero(); count_up_to(n, d)] }
    }

    /// Entries listed in canonical order of `α`.
    pub fn from_entries(n: usize, d: u32, entries: Vec<S>) -> Result<Self> {
        let want = count_up_to(n, d);
        if entries.len() != want {
            return Err(Error::LengthMismatch { expected: want, found: entries.len() });
        }
        Ok(SymTensor { n, d, entries })
    }

    /// Builds from a function of `α`.
    pub fn from_fn(n: usize, d: u32, f: impl Fn(&MultiIndex) -> S) -> Self {
        let entries = monomials_up_to(n, d).iter().map(f).collect();
        SymTensor { n, d, entries }
    }

    /// Builds from a function of the full index `(i_1, …, i_d)`; `f` is assumed symmetric.
    pub fn from_full_fn(n: usize, d: u32, f: impl Fn(&[usize]) -> S) -> Self {
        Self::from_fn(n, d, |alpha| f(&full_index(alpha, d)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.d
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn index_set(&self) -> Vec<MultiIndex> {
        monomials_up_to(self.n, self.d)
    }

    pub fn get(&self, alpha: &[u32]) -> Option<&S> {
        if alpha.len() != self.n || alpha.iter().sum::<u32>() > self.d {
            return None;
        }
        self.entries.get(rank_in_order(alpha))
    }

    pub fn set(&mut self, alpha: &[u32], value: S) -> Result<()> {
        if alpha.len() != self.n || alpha.iter().sum::<u32>() > self.d {
            return Err(Error::IndexOutOfRange(MultiIndex::from(alpha)));
        }
        let k = rank_in_order(alpha);
        self.entries[k] = value;
        Ok(())
    }

    /// Entry `A_{i_1…i_d}` with indices in `0..=n`.
    pub fn get_full(&self, idx: &[usize]) -> Option<&S> {
        if idx.len() != self.d as usize || idx.iter().any(|&i| i > self.n) {
            return None;
        }
        let mut alpha = vec![0u32; self.n];
        for &i in idx {
            if i > 0 {
                alpha[i - 1] += 1;
            }
        }
        self.get(&alpha)
    }

    /// `A_α = coeff(p, x_0^{d-|α|} x^α) / multinomial`.
    pub fn from_poly(p: &Poly<S>, d: u32) -> Result<Self> {
        if p.nvars() == 0 {
            return Err(Error::Invalid("form must have at least one variable".into()));
        }
        if !p.is_homogeneous(d) {
            return Err(Error::NotHomogeneous(d));
        }
        let n = p.nvars() - 1;
        let mut t = Self::zeros(n, d);
        for (e, c) in p.terms() {
            let alpha = e.dehomogenize();
            let m = S::from_i64(alpha.multinomial(d) as i64);
            t.entries[rank_in_order(alpha.as_slice())] = c.clone() / m;
        }
        Ok(t)
    }

    /// The form `A(x) = Σ_α multinomial · A_α x_0^{d-|α|} x^α`.
    pub fn to_poly(&self) -> Poly<S> {
        let mut p = Poly::zero_in(self.n + 1);
        for (alpha, a) in self.index_set().iter().zip(&self.entries) {
            let m = S::from_i64(alpha.multinomial(self.d) as i64);
            p.add_term(alpha.homogenize(self.d).unwrap(), a.clone() * m);
        }
        p
    }

    /// `⟨p, A⟩ = Σ_α p_α A_α` for `p` in `y_1..y_n` of degree at most `d`.
    pub fn apolar_pair(&self, p: &Poly<S>) -> Result<S> {
        if p.nvars() != self.n && !(p.nvars() == 0 && p.num_terms() <= 1) {
            return Err(Error::NvarsMismatch(self.n, p.nvars()));
        }
        let mut acc = S::zero();
        for (e, c) in p.terms() {
            if e.degree() > self.d {
                return Err(Error::DegreeOverflow { degree: e.degree(), order: self.d });
            }
            let v = if e.is_empty() { &self.entries[0] } else { self.get(e.as_slice()).unwrap() };
            acc = acc + c.clone() * v.clone();
        }
        Ok(acc)
    }

    /// `λ (1, v)^{⊗d}`; the entry at `α` is `λ v^α`.
    pub fn rank_one(lambda: &S, v: &[S], d: u32) -> Self {
        Self::from_fn(v.len(), d, |alpha| lambda.clone() * monomial_value(alpha, v))
    }

    /// `λ u^{⊗d}` for a homogeneous vector `u ∈ C^{n+1}`.
    pub fn rank_one_homogeneous(lambda: &S, u: &[S], d: u32) -> Self {
        let n = u.len() - 1;
        Self::from_fn(n, d, |alpha| {
            let h = alpha.homogenize(d).unwrap();
            lambda.clone() * monomial_value(&h, u)
        })
    }

    pub fn reconstruct(dec: &Decomposition<S>, n: usize, d: u32) -> Result<Self> {
        let mut acc = Self::zeros(n, d);
        for (lambda, v) in dec.weights.iter().zip(&dec.points) {
            if v.len() != n {
                return Err(Error::LengthMismatch { expected: n, found: v.len() });
            }
            acc = acc.try_add(&Self::rank_one(lambda, v, d))?;
        }
        Ok(acc)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.clone() + b.clone()).collect();
        Ok(SymTensor { n: self.n, d: self.d, entries })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.clone() - b.clone()).collect();
        Ok(SymTensor { n: self.n, d: self.d, entries })
    }

    pub fn scale(&self, c: &S) -> Self {
        SymTensor { n: self.n, d: self.d, entries: self.entries.iter().map(|a| a.clone() * c.clone()).collect() }
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.d != other.d {
            return Err(Error::Invalid(format!(
                "shape mismatch: (n={}, d={}) vs (n={}, d={})",
                self.n, self.d, other.n, other.d
            )));
        }
        Ok(())
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        let mut acc = 0.0;
        for (alpha, a) in self.index_set().iter().zip(&self.entries) {
            let m = alpha.multinomial(self.d) as f64;
            let v = a.modulus();
            acc += match kind {
                NormKind::HilbertSchmidt => m * v * v,
                NormKind::Coefficient => (m * v) * (m * v),
            };
        }
        acc.sqrt()
    }

    /// `(‖A − Ã‖, ‖A − Ã‖ / ‖A‖)` for the reconstruction `Ã` of `dec`.
    pub fn residual(&self, dec: &Decomposition<S>, kind: NormKind) -> Result<(f64, f64)> {
        let approx = Self::reconstruct(dec, self.n, self.d)?;
        let abs = self.try_sub(&approx)?.norm(kind);
        let base = self.norm(kind);
        let rel = if base > 0.0 { abs / base } else if abs == 0.0 { 0.0 } else { f64::INFINITY };
        Ok((abs, rel))
    }

    /// Catalecticant: rows `γ` with `|γ| ≤ k`, columns `δ` with `|δ| ≤ d-k`, entry `A_{γ+δ}`.
    pub fn catalecticant(&self, k: u32) -> Result<DMatrix<S>> {
        if k == 0 || k >= self.d {
            return Err(Error::Invalid(format!("flattening degree {k} outside 1..{}", self.d)));
        }
        let rows = monomials_up_to(self.n, k);
        let cols = monomials_up_to(self.n, self.d - k);
        Ok(DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            self.get(rows[i].add(&cols[j]).as_slice()).unwrap().clone()
        }))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn map<T: Field>(&self, f: impl Fn(&S) -> T) -> SymTensor<T> {
        SymTensor { n: self.n, d: self.d, entries: self.entries.iter().map(f).collect() }
    }
}

impl<S: Field + ComplexField> SymTensor<S> {
    /// Numeric rank of every catalecticant, for `k = 1..d-1`.
    pub fn flattening_ranks(&self, tol: f64) -> Vec<usize> {
        (1..self.d)
            .map(|k| linalg::numeric_rank(&self.catalecticant(k).unwrap(), tol))
            .collect()
    }

    /// Largest catalecticant rank; `1` for order `d ≤ 1` tensors that are nonzero.
    pub fn max_flattening_rank(&self, tol: f64) -> usize {
        let ranks = self.flattening_ranks(tol);
        match ranks.into_iter().max() {
            Some(r) => r,
            None => usize::from(!self.is_zero()),
        }
    }
}

/// Sorted full index `(i_1 ≤ … ≤ i_d)` that carries the label `α`.
pub fn full_index(alpha: &MultiIndex, d: u32) -> Vec<usize> {
    let mut idx = vec![0usize; (d - alpha.degree()) as usize];
    for (i, &k) in alpha.as_slice().iter().enumerate() {
        idx.extend(std::iter::repeat_n(i + 1, k as usize));
    }
    idx
}
