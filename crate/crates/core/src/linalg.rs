//! Dense linear algebra helpers on top of nalgebra.

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::scalar::Ring;

fn to_f64<R: nalgebra::RealField>(r: R) -> f64 {
    nalgebra::try_convert(r).unwrap_or(f64::NAN)
}

/// Singular values sorted descending (nalgebra does not promise an order).
pub fn singular_values<T: ComplexField>(m: &DMatrix<T>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> =
        m.clone().singular_values().iter().map(|v| to_f64(v.clone())).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `tol · σ_max`.
pub fn numeric_rank<T: ComplexField>(m: &DMatrix<T>, tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > tol * top).count(),
        _ => 0,
    }
}

/// Orthonormal basis (as columns) of the right nullspace, using the threshold `tol · σ_max`.
///
/// A zero matrix has the whole space as nullspace.
pub fn nullspace<T: ComplexField>(m: &DMatrix<T>, tol: f64) -> DMatrix<T> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // pad to at least square so the SVD returns a full V
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let sv: Vec<f64> = svd.singular_values.iter().map(|v| to_f64(v.clone())).collect();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| top == 0.0 || sv[i] <= tol * top).collect();
    let mut out = DMatrix::zeros(cols, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        for j in 0..cols {
            out[(j, k)] = v_t[(i, j)].clone().conjugate();
        }
    }
    out
}

/// Minimum-norm least-squares solution via the pseudo-inverse with cutoff `tol · σ_max`.
pub fn min_norm_solve<T: ComplexField>(a: &DMatrix<T>, b: &DVector<T>, tol: f64) -> DVector<T> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return DVector::zeros(cols);
    }
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.iter().map(|v| to_f64(v.clone())).fold(0.0, f64::max);
    if top == 0.0 {
        return DVector::zeros(cols);
    }
    let eps = nalgebra::convert(tol * top);
    svd.solve(b, eps).expect("U and V were computed")
}

/// Residual norm `‖A x − b‖₂`.
pub fn residual_norm<T: ComplexField>(a: &DMatrix<T>, x: &DVector<T>, b: &DVector<T>) -> f64 {
    to_f64((a * x - b).norm())
}

/// Eigenvalues and unit eigenvectors of a square complex matrix via the Schur form.
///
/// The triangular factor is back-substituted per eigenvalue; near-equal diagonal
/// entries are nudged so the substitution stays finite.
pub fn schur_eigen<T>(m: &DMatrix<T>) -> Option<(Vec<T>, Vec<DVector<T>>)>
where
    T: ComplexField,
{
    let n = m.nrows();
    if n == 0 {
        return Some((Vec::new(), Vec::new()));
    }
    let (q, t) = m.clone().try_schur(nalgebra::convert(f64::EPSILON), 10_000)?.unpack();
    let scale = to_f64(t.norm()).max(1e-300);
    let floor = T::from_real(nalgebra::convert(1e-14 * scale));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)].clone();
        let mut y = DVector::<T>::zeros(n);
        y[k] = T::one();
        for i in (0..k).rev() {
            let mut s = T::zero();
            for j in (i + 1)..=k {
                s += t[(i, j)].clone() * y[j].clone();
            }
            let mut denom = t[(i, i)].clone() - lambda.clone();
            if to_f64(denom.clone().modulus()) < 1e-14 * scale {
                denom = floor.clone();
            }
            y[i] = -s / denom;
        }
        let v = &q * y;
        let nrm = v.norm();
        values.push(lambda);
        vectors.push(v.unscale(nrm));
    }
    Some((values, vectors))
}

/// Product of matrices over any ring (nalgebra needs closed numeric ops for `*`).
pub fn ring_matmul<K: Ring>(a: &DMatrix<K>, b: &DMatrix<K>) -> DMatrix<K> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| {
        let mut acc = K::zero();
        for k in 0..a.ncols() {
            let (x, y) = (&a[(i, k)], &b[(k, j)]);
            if !x.is_zero() && !y.is_zero() {
                acc = acc + x.clone() * y.clone();
            }
        }
        acc
    })
}

/// Smallest pairwise distance between values.
pub fn min_separation<T: ComplexField>(values: &[T]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            let d = to_f64((values[i].clone() - values[j].clone()).modulus());
            best = best.min(d);
        }
    }
    best
}
