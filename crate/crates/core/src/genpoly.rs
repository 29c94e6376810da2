//! Generating matrices of a tensor and the polynomial system they must satisfy.
//!
//! For each border monomial `y^α` the column `G(:, α)` must make every shifted
//! pairing `⟨y^γ (Σ_s c_{s,α} y^{β_s} − y^α), A⟩` vanish. That is a linear
//! system per column; its solution set is an affine space `C(:,α) + N_α w_α`,
//! and stacking the columns gives the family `G(w) = C + N(w)`. Valid members
//! of the family are cut out by commuting multiplication matrices and by the
//! variety generators reducing to zero.

use std::collections::HashSet;

use nalgebra::{ComplexField, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::border::{mult_matrices, BorderBasisCtx, NormalForm};
use crate::error::{Error, Result};
use crate::linalg::{self, ring_matmul};
use crate::multiindex::{monomials_up_to, MultiIndex};
use crate::poly::Poly;
use crate::scalar::Field;
use crate::tensor::SymTensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Singular values at most `null_tol · σ_max` count as zero.
    pub null_tol: f64,
    /// A column system is consistent when its residual is at most `consistency_tol · (1 + ‖b‖)`.
    pub consistency_tol: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { null_tol: 1e-10, consistency_tol: 1e-8 }
    }
}

/// `(A[A, α], b[A, α])`: rows `γ` with `|γ| ≤ d − max(|α|, max deg B_0)`, entries `A_{β+γ}` and `A_{α+γ}`.
pub fn build_linear_system<S: Field>(
    a: &SymTensor<S>,
    alpha: &MultiIndex,
    ctx: &BorderBasisCtx,
) -> Result<(DMatrix<S>, DVector<S>)> {
    if alpha.len() != a.n() || ctx.n() != a.n() {
        return Err(Error::NvarsMismatch(a.n(), alpha.len()));
    }
    let top = alpha.degree().max(ctx.max_b0_degree());
    if top > a.order() {
        return Err(Error::EmptyRowSet(alpha.clone()));
    }
    let rows = monomials_up_to(a.n(), a.order() - top);
    let entry = |m: MultiIndex| a.get(m.as_slice()).expect("row set keeps indices in range").clone();
    let mat = DMatrix::from_fn(rows.len(), ctx.r(), |i, j| entry(ctx.b0()[j].add(&rows[i])));
    let rhs = DVector::from_fn(rows.len(), |i, _| entry(alpha.add(&rows[i])));
    Ok((mat, rhs))
}

/// The affine family `G(w) = C + N(w)`; parameters are grouped by column.
#[derive(Clone, Debug)]
pub struct GenMatrixFamily<S> {
    ctx: BorderBasisCtx,
    c: DMatrix<S>,
    null: Vec<DMatrix<S>>,
    offsets: Vec<usize>,
    m: usize,
}

impl<S: Field> GenMatrixFamily<S> {
    fn assemble(ctx: BorderBasisCtx, cols: Vec<(DVector<S>, DMatrix<S>)>) -> Self {
        let r = ctx.r();
        let mut c = DMatrix::from_element(r, cols.len(), S::zero());
        let mut null = Vec::with_capacity(cols.len());
        let mut offsets = Vec::with_capacity(cols.len());
        let mut m = 0;
        for (j, (x, n)) in cols.into_iter().enumerate() {
            c.set_column(j, &x);
            offsets.push(m);
            m += n.ncols();
            null.push(n);
        }
        GenMatrixFamily { ctx, c, null, offsets, m }
    }

    /// Exact parameterization by row reduction; free unknowns become the parameters.
    pub fn exact(a: &SymTensor<S>, ctx: &BorderBasisCtx) -> Result<Self> {
        if !S::EXACT {
            return Err(Error::Invalid("exact parameterization needs an exact scalar type".into()));
        }
        let cols = ctx
            .border()
            .iter()
            .map(|alpha| {
                let (mat, rhs) = build_linear_system(a, alpha, ctx)?;
                exact_affine_solution(&mat, &rhs)
                    .ok_or_else(|| Error::InconsistentSystem { alpha: alpha.clone(), residual: f64::INFINITY })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(ctx.clone(), cols))
    }

    pub fn ctx(&self) -> &BorderBasisCtx {
        &self.ctx
    }

    /// Total parameter count.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn particular(&self) -> &DMatrix<S> {
        &self.c
    }

    /// Nullspace basis of the column for the `j`-th border monomial.
    pub fn column_null(&self, j: usize) -> &DMatrix<S> {
        &self.null[j]
    }

    /// Parameter indices owned by border column `j`.
    pub fn column_params(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j] + self.null[j].ncols()
    }

    /// Numeric `G(w)`.
    pub fn evaluate(&self, w: &[S]) -> Result<DMatrix<S>> {
        if w.len() != self.m {
            return Err(Error::LengthMismatch { expected: self.m, found: w.len() });
        }
        let mut g = self.c.clone();
        for (j, n) in self.null.iter().enumerate() {
            for k in 0..n.ncols() {
                let wk = &w[self.offsets[j] + k];
                if wk.is_zero() {
                    continue;
                }
                for s in 0..g.nrows() {
                    g[(s, j)] = g[(s, j)].clone() + n[(s, k)].clone() * wk.clone();
                }
            }
        }
        Ok(g)
    }

    /// `G(w)` with entries that are affine polynomials in the `m` parameters.
    pub fn entries(&self) -> DMatrix<Poly<S>> {
        let (r, cols) = self.c.shape();
        DMatrix::from_fn(r, cols, |s, j| {
            let mut p = Poly::constant(self.m, self.c[(s, j)].clone());
            let n = &self.null[j];
            for k in 0..n.ncols() {
                p.add_term(MultiIndex::unit(self.m, self.offsets[j] + k), n[(s, k)].clone());
            }
            p
        })
    }
}

impl<S: Field + ComplexField> GenMatrixFamily<S> {
    /// Minimum-norm particular solutions and orthonormal nullspaces per column.
    pub fn numeric(a: &SymTensor<S>, ctx: &BorderBasisCtx, cfg: &GenConfig) -> Result<Self> {
        let cols = ctx
            .border()
            .par_iter()
            .map(|alpha| {
                let (mat, rhs) = build_linear_system(a, alpha, ctx)?;
                let x = linalg::min_norm_solve(&mat, &rhs, cfg.null_tol);
                let res = linalg::residual_norm(&mat, &x, &rhs);
                let bn = rhs.iter().map(|v| v.modulus().powi(2)).sum::<f64>().sqrt();
                if res > cfg.consistency_tol * (1.0 + bn) {
                    return Err(Error::InconsistentSystem { alpha: alpha.clone(), residual: res });
                }
                Ok((x, linalg::nullspace(&mat, cfg.null_tol)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(ctx.clone(), cols))
    }

    /// Parameters of the member of the family closest to `g`, column by column.
    pub fn project(&self, g: &DMatrix<S>) -> Result<Vec<S>> {
        if g.shape() != self.c.shape() {
            return Err(Error::LengthMismatch { expected: self.c.len(), found: g.len() });
        }
        let mut w = Vec::with_capacity(self.m);
        for (j, n) in self.null.iter().enumerate() {
            let diff = g.column(j) - self.c.column(j);
            w.extend((n.adjoint() * diff).iter().cloned());
        }
        Ok(w)
    }
}

/// `parameterize_G` for complex data.
pub fn parameterize_g<S: Field + ComplexField>(
    a: &SymTensor<S>,
    ctx: &BorderBasisCtx,
    cfg: &GenConfig,
) -> Result<GenMatrixFamily<S>> {
    GenMatrixFamily::numeric(a, ctx, cfg)
}

/// Row reduction of `[A | b]` over an exact field: a particular solution with
/// free unknowns set to zero, and one nullspace vector per free unknown.
fn exact_affine_solution<S: Field>(a: &DMatrix<S>, b: &DVector<S>) -> Option<(DVector<S>, DMatrix<S>)> {
    let (rows, cols) = a.shape();
    let mut m = DMatrix::from_fn(rows, cols + 1, |i, j| if j < cols { a[(i, j)].clone() } else { b[i].clone() });
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..rows).find(|&i| !m[(i, col)].is_zero()) else { continue };
        m.swap_rows(row, p);
        let inv = S::one() / m[(row, col)].clone();
        for j in col..=cols {
            m[(row, j)] = m[(row, j)].clone() * inv.clone();
        }
        for i in 0..rows {
            if i != row && !m[(i, col)].is_zero() {
                let f = m[(i, col)].clone();
                for j in col..=cols {
                    m[(i, j)] = m[(i, j)].clone() - f.clone() * m[(row, j)].clone();
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }
    if (row..rows).any(|i| !m[(i, cols)].is_zero()) {
        return None;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut x = DVector::from_element(cols, S::zero());
    for (i, &p) in pivots.iter().enumerate() {
        x[p] = m[(i, cols)].clone();
    }
    let mut null = DMatrix::from_element(cols, free.len(), S::zero());
    for (k, &f) in free.iter().enumerate() {
        null[(f, k)] = S::one();
        for (i, &p) in pivots.iter().enumerate() {
            null[(p, k)] = -m[(i, f)].clone();
        }
    }
    Some((x, null))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualKind {
    /// Entry `(s, t)` of `[M_i, M_j]`.
    Commutator { i: usize, j: usize, s: usize, t: usize },
    /// Coefficient of `y^{β_s}` in `NF(g_k; G(w))`.
    NormalForm { generator: usize, s: usize },
}

/// A polynomial in `w` stored as a flat term list for fast evaluation.
#[derive(Clone, Debug)]
struct FlatPoly<S> {
    terms: Vec<(S, Vec<(usize, u32)>)>,
}

impl<S: Field> FlatPoly<S> {
    fn new(p: &Poly<S>) -> Self {
        let terms = p
            .terms()
            .map(|(e, c)| {
                let vars = e.as_slice().iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (i, k)).collect();
                (c.clone(), vars)
            })
            .collect();
        FlatPoly { terms }
    }

    fn eval(&self, w: &[S]) -> S {
        let mut acc = S::zero();
        for (c, vars) in &self.terms {
            let mut t = c.clone();
            for &(i, k) in vars {
                for _ in 0..k {
                    t = t * w[i].clone();
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Value and gradient, written into `grad`.
    fn eval_grad(&self, w: &[S], grad: &mut [S]) -> S {
        let mut acc = S::zero();
        for (c, vars) in &self.terms {
            let mut t = c.clone();
            for &(i, k) in vars {
                for _ in 0..k {
                    t = t * w[i].clone();
                }
            }
            acc = acc + t;
            for (a, &(i, k)) in vars.iter().enumerate() {
                // derivative of the term in w_i
                let mut dt = c.clone() * S::from_i64(k as i64);
                for (b, &(j, kj)) in vars.iter().enumerate() {
                    let e = if a == b { kj - 1 } else { kj };
                    for _ in 0..e {
                        dt = dt * w[j].clone();
                    }
                }
                grad[i] = grad[i].clone() + dt;
            }
        }
        acc
    }

    /// Sum of moduli of the terms at `w`; the scale against which the value is judged.
    fn magnitude(&self, w: &[S]) -> f64 {
        let mut acc = 0.0;
        for (c, vars) in &self.terms {
            let mut t = c.modulus();
            for &(i, k) in vars {
                t *= w[i].modulus().powi(k as i32);
            }
            acc += t;
        }
        acc
    }
}

/// Polynomial system in `w` whose solutions give valid generating matrices.
#[derive(Clone, Debug)]
pub struct ResidualSystem<S> {
    m: usize,
    polys: Vec<Poly<S>>,
    kinds: Vec<ResidualKind>,
    flat: Vec<FlatPoly<S>>,
}

impl<S: Field> ResidualSystem<S> {
    pub fn new(m: usize, entries: Vec<(ResidualKind, Poly<S>)>) -> Self {
        let mut seen = HashSet::new();
        let mut polys = Vec::new();
        let mut kinds = Vec::new();
        for (kind, p) in entries {
            if p.num_terms() == 0 {
                continue;
            }
            let key = format!("{p:?}");
            if !seen.insert(key) {
                continue;
            }
            polys.push(p);
            kinds.push(kind);
        }
        let flat = polys.iter().map(FlatPoly::new).collect();
        ResidualSystem { m, polys, kinds, flat }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn polys(&self) -> &[Poly<S>] {
        &self.polys
    }

    pub fn kinds(&self) -> &[ResidualKind] {
        &self.kinds
    }

    pub fn eval(&self, w: &[S]) -> Vec<S> {
        self.flat.iter().map(|p| p.eval(w)).collect()
    }

    /// Per-residual scale `Σ |terms|` at `w`.
    pub fn magnitudes(&self, w: &[S]) -> Vec<f64> {
        self.flat.iter().map(|p| p.magnitude(w)).collect()
    }

    /// Values and Jacobian (`len × m`).
    pub fn eval_jacobian(&self, w: &[S]) -> (Vec<S>, DMatrix<S>) {
        let mut jac = DMatrix::from_element(self.len(), self.m, S::zero());
        let mut vals = Vec::with_capacity(self.len());
        let mut grad = vec![S::zero(); self.m];
        for (row, p) in self.flat.iter().enumerate() {
            grad.iter_mut().for_each(|g| *g = S::zero());
            vals.push(p.eval_grad(w, &mut grad));
            for (k, g) in grad.iter().enumerate() {
                jac[(row, k)] = g.clone();
            }
        }
        (vals, jac)
    }

    /// Largest residual modulus at `w`.
    pub fn max_abs(&self, w: &[S]) -> f64 {
        self.eval(w).iter().map(Field::modulus).fold(0.0, f64::max)
    }

    pub fn max_param_degree(&self, kind: impl Fn(&ResidualKind) -> bool) -> u32 {
        self.polys.iter().zip(&self.kinds).filter(|(_, k)| kind(k)).filter_map(|(p, _)| p.degree()).max().unwrap_or(0)
    }
}

/// Commutator entries of the parametric multiplication matrices plus the
/// normal-form coefficients of every affine generator.
pub fn residual_system<S: Field>(family: &GenMatrixFamily<S>, generators: &[Poly<S>]) -> Result<ResidualSystem<S>> {
    let ctx = family.ctx();
    let g = family.entries();
    let mats = mult_matrices(&g, ctx)?;
    let n = ctx.n();
    let r = ctx.r();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let ab = ring_matmul(&mats[i], &mats[j]);
            let ba = ring_matmul(&mats[j], &mats[i]);
            for s in 0..r {
                for t in 0..r {
                    let p = ab[(s, t)].clone() - ba[(s, t)].clone();
                    entries.push((ResidualKind::Commutator { i, j, s, t }, widen(p, family.m())));
                }
            }
        }
    }
    let mut nf = NormalForm::new(ctx, &g)?;
    for (k, gen) in generators.iter().enumerate() {
        if gen.nvars() != n {
            return Err(Error::NvarsMismatch(n, gen.nvars()));
        }
        let lifted = gen.map_coeffs(|c| Poly::constant(family.m(), c.clone()));
        for (s, p) in nf.reduce(&lifted)?.into_iter().enumerate() {
            entries.push((ResidualKind::NormalForm { generator: k, s }, widen(p, family.m())));
        }
    }
    Ok(ResidualSystem::new(family.m(), entries))
}

/// Gives a bare constant the family's parameter count.
fn widen<S: Field>(p: Poly<S>, m: usize) -> Poly<S> {
    if p.nvars() == m {
        p
    } else {
        Poly::zero_in(m) + p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_complex::Complex64;
    use num_rational::BigRational;

    fn mi<const N: usize>(v: [u32; N]) -> MultiIndex {
        MultiIndex::from(v)
    }

    #[test]
    fn rank_one_system_gives_monomial_value() {
        let v = [Complex64::new(0.5, 1.0), Complex64::new(-2.0, 0.25)];
        let a = SymTensor::rank_one(&Complex64::new(3.0, 0.0), &v, 4);
        let ctx = BorderBasisCtx::new(2, vec![mi([0, 0])]).unwrap();
        let fam = parameterize_g(&a, &ctx, &GenConfig::default()).unwrap();
        assert_eq!(fam.m(), 0);
        let g = fam.evaluate(&[]).unwrap();
        assert!((g[(0, 0)] - v[0]).norm() < 1e-12);
        assert!((g[(0, 1)] - v[1]).norm() < 1e-12);
    }

    #[test]
    fn zero_tensor_frees_everything() {
        let a = SymTensor::<Complex64>::zeros(2, 3);
        let ctx = BorderBasisCtx::new(2, vec![mi([0, 0]), mi([1, 0]), mi([0, 1])]).unwrap();
        let fam = parameterize_g(&a, &ctx, &GenConfig::default()).unwrap();
        assert_eq!(fam.m(), 3 * ctx.border().len());
    }

    #[test]
    fn exact_family_matches_numeric_subspace() {
        let a = SymTensor::from_fn(2, 3, |e| ratio((e.as_slice()[0] * 3 + e.as_slice()[1] * e.as_slice()[1]) as i64, 1));
        let ctx = BorderBasisCtx::new(2, vec![mi([0, 0]), mi([1, 0])]).unwrap();
        let exact = GenMatrixFamily::<BigRational>::exact(&a, &ctx);
        let num = parameterize_g(&a.map(|q| q.to_c64()), &ctx, &GenConfig::default());
        assert_eq!(exact.is_ok(), num.is_ok());
        if let (Ok(e), Ok(n)) = (exact, num) {
            assert_eq!(e.m(), n.m());
        }
    }

    #[test]
    fn univariate_has_no_commutators() {
        let v = [Complex64::new(0.3, 0.0)];
        let a = SymTensor::rank_one(&Complex64::new(1.0, 0.0), &v, 3);
        let ctx = BorderBasisCtx::new(1, vec![mi([0])]).unwrap();
        let fam = parameterize_g(&a, &ctx, &GenConfig::default()).unwrap();
        let rs = residual_system(&fam, &[]).unwrap();
        assert!(rs.is_empty());
    }
}
