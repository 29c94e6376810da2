//! Monomial bases, their borders, and normal forms modulo a generating matrix.
//!
//! A generating matrix `G` has one column per border monomial `y^α`; column
//! `α` holds the coefficients `c_{s,α}` of the rewrite rule
//! `y^α ≡ Σ_s c_{s,α} y^{β_s}`. The normal form of any polynomial is obtained by
//! repeatedly applying these rules, and the coefficient type is a generic ring
//! so the same code reduces with numeric and with parameter-dependent `G`.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::poly::Poly;
use crate::scalar::Ring;

#[derive(Clone, Debug, PartialEq)]
pub struct BorderBasisCtx {
    n: usize,
    b0: Vec<MultiIndex>,
    border: Vec<MultiIndex>,
    b0_pos: HashMap<MultiIndex, usize>,
    border_pos: HashMap<MultiIndex, usize>,
}

impl BorderBasisCtx {
    /// `∂B_1 = (B_0 ∪ y_1 B_0 ∪ … ∪ y_n B_0) \ B_0`, listed in canonical order.
    pub fn new(n: usize, b0: Vec<MultiIndex>) -> Result<Self> {
        let mut b0_pos = HashMap::new();
        for (i, b) in b0.iter().enumerate() {
            if b.len() != n {
                return Err(Error::LengthMismatch { expected: n, found: b.len() });
            }
            if b0_pos.insert(b.clone(), i).is_some() {
                return Err(Error::DuplicateIndex(b.clone()));
            }
        }
        if !b0_pos.contains_key(&MultiIndex::zero(n)) {
            return Err(Error::MissingConstant);
        }
        let mut border: Vec<MultiIndex> = b0
            .iter()
            .flat_map(|b| (0..n).map(move |i| b.bump(i)))
            .filter(|m| !b0_pos.contains_key(m))
            .collect();
        border.sort();
        border.dedup();
        let border_pos = border.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
        Ok(BorderBasisCtx { n, b0, border, b0_pos, border_pos })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.b0.len()
    }

    pub fn b0(&self) -> &[MultiIndex] {
        &self.b0
    }

    pub fn border(&self) -> &[MultiIndex] {
        &self.border
    }

    pub fn b0_position(&self, m: &MultiIndex) -> Option<usize> {
        self.b0_pos.get(m).copied()
    }

    pub fn border_position(&self, m: &MultiIndex) -> Option<usize> {
        self.border_pos.get(m).copied()
    }

    pub fn max_b0_degree(&self) -> u32 {
        self.b0.iter().map(MultiIndex::degree).max().unwrap_or(0)
    }

    /// `min_{β ∈ B_0, β | γ} |γ − β|`: the smallest `k` with `y^γ ∈ B_k`.
    pub fn depth(&self, gamma: &MultiIndex) -> u32 {
        self.b0
            .iter()
            .filter_map(|b| gamma.checked_sub(b))
            .map(|d| d.degree())
            .min()
            .expect("constant monomial divides everything")
    }

    /// Bound on the parameter degree of `NF(p; G(w))`: the largest depth among the terms of `p`.
    pub fn param_degree_bound<K: Ring>(&self, p: &Poly<K>) -> u32 {
        p.terms().map(|(e, _)| self.depth(e)).max().unwrap_or(0)
    }

    /// Variable used to split `y^γ = y_i · y^{γ−e_i}` during reduction.
    fn split_variable(&self, gamma: &MultiIndex) -> usize {
        let k = self.depth(gamma);
        (0..self.n)
            .find(|&i| gamma.lower(i).is_some_and(|g| self.depth(&g) + 1 == k))
            .expect("some variable lowers the depth")
    }
}

/// Memoized reduction of monomials modulo one generating matrix.
pub struct NormalForm<'a, K> {
    ctx: &'a BorderBasisCtx,
    g: &'a DMatrix<K>,
    memo: HashMap<MultiIndex, Vec<K>>,
}

impl<'a, K: Ring> NormalForm<'a, K> {
    pub fn new(ctx: &'a BorderBasisCtx, g: &'a DMatrix<K>) -> Result<Self> {
        if g.nrows() != ctx.r() {
            return Err(Error::LengthMismatch { expected: ctx.r(), found: g.nrows() });
        }
        if g.ncols() < ctx.border.len() {
            return Err(Error::MissingColumn(ctx.border[g.ncols()].clone()));
        }
        Ok(NormalForm { ctx, g, memo: HashMap::new() })
    }

    /// Coefficients of `NF(y^γ; G)` on `B_0`.
    pub fn monomial(&mut self, gamma: &MultiIndex) -> Result<Vec<K>> {
        if gamma.len() != self.ctx.n {
            return Err(Error::NvarsMismatch(self.ctx.n, gamma.len()));
        }
        if let Some(v) = self.memo.get(gamma) {
            return Ok(v.clone());
        }
        let r = self.ctx.r();
        let out = if let Some(s) = self.ctx.b0_position(gamma) {
            let mut v = vec![K::zero(); r];
            v[s] = K::one();
            v
        } else if let Some(j) = self.ctx.border_position(gamma) {
            self.g.column(j).iter().cloned().collect()
        } else {
            let i = self.ctx.split_variable(gamma);
            let lower = self.monomial(&gamma.lower(i).unwrap())?;
            self.times_variable(i, &lower)?
        };
        self.memo.insert(gamma.clone(), out.clone());
        Ok(out)
    }

    /// `NF(y_i · Σ_s v_s y^{β_s}; G)`.
    pub fn times_variable(&mut self, i: usize, v: &[K]) -> Result<Vec<K>> {
        let r = self.ctx.r();
        let mut out = vec![K::zero(); r];
        for (s, vs) in v.iter().enumerate() {
            if vs.is_zero() {
                continue;
            }
            let shifted = self.ctx.b0[s].bump(i);
            let col = self.monomial(&shifted)?;
            for (o, c) in out.iter_mut().zip(col) {
                if !c.is_zero() {
                    *o = o.clone() + vs.clone() * c;
                }
            }
        }
        Ok(out)
    }

    /// Coefficients of `NF(p; G)` on `B_0`.
    pub fn reduce(&mut self, p: &Poly<K>) -> Result<Vec<K>> {
        if p.nvars() != self.ctx.n && !(p.nvars() == 0 && p.num_terms() <= 1) {
            return Err(Error::NvarsMismatch(self.ctx.n, p.nvars()));
        }
        let mut out = vec![K::zero(); self.ctx.r()];
        for (e, c) in p.terms() {
            let e = if e.is_empty() { MultiIndex::zero(self.ctx.n) } else { e.clone() };
            let v = self.monomial(&e)?;
            for (o, x) in out.iter_mut().zip(v) {
                if !x.is_zero() {
                    *o = o.clone() + c.clone() * x;
                }
            }
        }
        Ok(out)
    }
}

/// `NF(p; G)` as a polynomial supported on `B_0`.
pub fn normal_form<K: Ring>(p: &Poly<K>, g: &DMatrix<K>, ctx: &BorderBasisCtx) -> Result<Poly<K>> {
    let coeffs = NormalForm::new(ctx, g)?.reduce(p)?;
    Poly::from_terms(ctx.n, ctx.b0.iter().cloned().zip(coeffs))
}

/// Multiplication matrices `M_1..M_n`: column `t` of `M_i` holds `NF(y_i y^{β_t}; G)`.
pub fn mult_matrices<K: Ring>(g: &DMatrix<K>, ctx: &BorderBasisCtx) -> Result<Vec<DMatrix<K>>> {
    let mut nf = NormalForm::new(ctx, g)?;
    let r = ctx.r();
    (0..ctx.n)
        .map(|i| {
            let mut m = DMatrix::from_element(r, r, K::zero());
            for t in 0..r {
                let col = nf.monomial(&ctx.b0[t].bump(i))?;
                for (s, c) in col.into_iter().enumerate() {
                    m[(s, t)] = c;
                }
            }
            Ok(m)
        })
        .collect()
}
