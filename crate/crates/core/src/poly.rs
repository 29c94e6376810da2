//! Sparse multivariate polynomials over a commutative ring.
//!
//! A polynomial with `nvars == 0` is a bare constant and combines with a
//! polynomial in any number of variables. That is what lets `Poly<Poly<S>>`
//! (coefficients that are polynomials in parameters) reuse every operation
//! here, since `Zero`/`One` cannot know the variable count.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::multiindex::{monomials_of_degree, MultiIndex};
use crate::scalar::{Field, Ring};

#[derive(Clone, Debug, PartialEq)]
pub struct Poly<K> {
    nvars: usize,
    terms: BTreeMap<MultiIndex, K>,
}

/// Polynomial in `y` whose coefficients are polynomials in parameters `w`.
pub type ParamPoly<S> = Poly<Poly<S>>;

impl<K: Ring> Poly<K> {
    pub fn zero_in(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: K) -> Self {
        Self::monomial(MultiIndex::zero(nvars), c)
    }

    pub fn monomial(exp: MultiIndex, c: K) -> Self {
        let nvars = exp.len();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        Poly { nvars, terms }
    }

    /// The variable `x_i` (0-based).
    pub fn var(nvars: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(nvars, i), K::one())
    }

    /// Builds from `(exponent, coefficient)` pairs, summing repeats.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, K)>,
    {
        let mut p = Self::zero_in(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::NvarsMismatch(nvars, e.len()));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &K)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (MultiIndex, K)> {
        self.terms.into_iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exp: &MultiIndex) -> K {
        self.terms.get(exp).cloned().unwrap_or_else(K::zero)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    pub fn is_homogeneous(&self, d: u32) -> bool {
        self.terms.keys().all(|e| e.degree() == d)
    }

    pub fn add_term(&mut self, exp: MultiIndex, c: K) {
        debug_assert_eq!(exp.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exp) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&exp);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(exp, c);
            }
        }
    }

    /// Lifts a bare constant (`nvars == 0`) into `nvars` variables.
    fn widen(self, nvars: usize) -> Self {
        if self.nvars == nvars {
            return self;
        }
        assert_eq!(self.nvars, 0, "variable count mismatch: {} vs {}", self.nvars, nvars);
        let mut out = Self::zero_in(nvars);
        for (_, c) in self.terms {
            out.add_term(MultiIndex::zero(nvars), c);
        }
        out
    }

    fn common_nvars(&self, other: &Self) -> Result<usize> {
        match (self.nvars, other.nvars) {
            (a, b) if a == b => Ok(a),
            (0, b) => Ok(b),
            (a, 0) => Ok(a),
            (a, b) => Err(Error::NvarsMismatch(a, b)),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let n = self.common_nvars(other)?;
        let mut out = self.clone().widen(n);
        for (e, c) in other.clone().widen(n).terms {
            out.add_term(e, c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        let n = self.common_nvars(other)?;
        let a = self.clone().widen(n);
        let b = other.clone().widen(n);
        let mut out = Self::zero_in(n);
        for (ea, ca) in &a.terms {
            for (eb, cb) in &b.terms {
                out.add_term(ea.add(eb), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &K) -> Self {
        let mut out = Self::zero_in(self.nvars);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v.clone() * c.clone());
        }
        out
    }

    /// Multiplies by the monomial `x^exp`.
    pub fn shift(&self, exp: &MultiIndex) -> Self {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.add(exp), c.clone())).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.nvars, K::one());
        for _ in 0..k {
            acc = acc.try_mul(self).expect("same nvars");
        }
        acc
    }

    pub fn eval(&self, point: &[K]) -> Result<K> {
        if self.nvars != 0 && point.len() != self.nvars {
            return Err(Error::NvarsMismatch(self.nvars, point.len()));
        }
        let mut acc = K::zero();
        for (e, c) in &self.terms {
            acc = acc + c.clone() * monomial_value(e, point);
        }
        Ok(acc)
    }

    /// `h(x_0, …, x_n) ↦ h(1, y_1, …, y_n)`.
    pub fn dehomogenize(&self) -> Result<Self> {
        if self.nvars == 0 {
            return Err(Error::Invalid("cannot dehomogenize a bare constant".into()));
        }
        let mut out = Self::zero_in(self.nvars - 1);
        for (e, c) in &self.terms {
            out.add_term(e.dehomogenize(), c.clone());
        }
        Ok(out)
    }

    /// Right inverse of [`Poly::dehomogenize`] on polynomials of degree `≤ d`.
    pub fn homogenize(&self, d: u32) -> Result<Self> {
        let mut out = Self::zero_in(self.nvars + 1);
        for (e, c) in &self.terms {
            let h = e
                .homogenize(d)
                .ok_or(Error::DegreeOverflow { degree: e.degree(), order: d })?;
            out.add_term(h, c.clone());
        }
        Ok(out)
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero_in(self.nvars);
        for (e, c) in &self.terms {
            let k = e.as_slice()[i];
            if k == 0 {
                continue;
            }
            out.add_term(e.lower(i).unwrap(), c.clone() * K::from_usize(k as usize));
        }
        out
    }

    /// Substitutes `x_i ↦ Σ_j map[i][j] x_j`; `map` is square of size `nvars`.
    pub fn linear_substitute(&self, map: &[Vec<K>]) -> Result<Self> {
        let n = self.nvars;
        if map.len() != n || map.iter().any(|row| row.len() != n) {
            return Err(Error::NvarsMismatch(n, map.len()));
        }
        let images: Vec<Self> = map
            .iter()
            .map(|row| {
                Self::from_terms(n, row.iter().enumerate().map(|(j, c)| (MultiIndex::unit(n, j), c.clone())))
            })
            .collect::<Result<_>>()?;
        let mut out = Self::zero_in(n);
        for (e, c) in &self.terms {
            let mut t = Self::constant(n, c.clone());
            for (i, &k) in e.as_slice().iter().enumerate() {
                if k > 0 {
                    t = t.try_mul(&images[i].pow(k))?;
                }
            }
            out = out.try_add(&t)?;
        }
        Ok(out)
    }

    pub fn map_coeffs<L: Ring>(&self, f: impl Fn(&K) -> L) -> Poly<L> {
        let mut out = Poly::zero_in(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    /// Drops terms whose coefficient satisfies `negligible`.
    pub fn retain(&mut self, keep: impl Fn(&K) -> bool) {
        self.terms.retain(|_, c| keep(c));
    }
}

impl<S: Field> Poly<S> {
    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(Field::modulus).fold(0.0, f64::max)
    }

    /// Drops coefficients with modulus `≤ tol`.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, c| c.modulus() > tol);
    }

    /// Every homogeneous multiple `self · x^β` with `|β| = k`.
    pub fn multiples_of_degree(&self, k: u32) -> Vec<(MultiIndex, Self)> {
        monomials_of_degree(self.nvars, k).into_iter().map(|b| (b.clone(), self.shift(&b))).collect()
    }
}

impl<S: Ring> Poly<Poly<S>> {
    /// Evaluates the parameter coefficients at `w`.
    pub fn specialize(&self, w: &[S]) -> Result<Poly<S>> {
        let mut out = Poly::zero_in(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.eval(w)?);
        }
        Ok(out)
    }

    /// Largest parameter degree among the coefficients.
    pub fn param_degree(&self) -> u32 {
        self.terms.values().filter_map(Poly::degree).max().unwrap_or(0)
    }
}

pub(crate) fn monomial_value<K: Ring>(e: &MultiIndex, point: &[K]) -> K {
    let mut v = K::one();
    for (x, &k) in point.iter().zip(e.as_slice()) {
        for _ in 0..k {
            v = v * x.clone();
        }
    }
    v
}

impl<K: Ring> Add for Poly<K> {
    type Output = Poly<K>;
    fn add(self, rhs: Self) -> Self {
        self.try_add(&rhs).expect("variable count mismatch")
    }
}

impl<K: Ring> Sub for Poly<K> {
    type Output = Poly<K>;
    fn sub(self, rhs: Self) -> Self {
        self.try_add(&-rhs).expect("variable count mismatch")
    }
}

impl<K: Ring> Mul for Poly<K> {
    type Output = Poly<K>;
    fn mul(self, rhs: Self) -> Self {
        self.try_mul(&rhs).expect("variable count mismatch")
    }
}

impl<K: Ring> Neg for Poly<K> {
    type Output = Poly<K>;
    fn neg(self) -> Self {
        Poly { nvars: self.nvars, terms: self.terms.into_iter().map(|(e, c)| (e, -c)).collect() }
    }
}

impl<K: Ring> Zero for Poly<K> {
    fn zero() -> Self {
        Poly::zero_in(0)
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl<K: Ring> One for Poly<K> {
    fn one() -> Self {
        Poly::constant(0, K::one())
    }
}
