use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xdecomp::border::{mult_matrices, BorderBasisCtx};
use xdecomp::genpoly::{build_linear_system, parameterize_g, residual_system, GenConfig, GenMatrixFamily};
use xdecomp::io::read_tensor;
use xdecomp::scalar::ratio;
use xdecomp::{Field, MultiIndex, QTensor, SymTensor, Q, C64};

fn mi<const N: usize>(v: [u32; N]) -> MultiIndex {
    MultiIndex::from(v)
}

fn example_tensor() -> QTensor {
    read_tensor(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/example41_tensor.json")).unwrap()
}

fn b0_first(k: usize) -> Vec<MultiIndex> {
    [mi([0, 0, 0]), mi([1, 0, 0]), mi([0, 1, 0]), mi([0, 0, 1])][..k].to_vec()
}

fn qi(v: i64) -> Q {
    ratio(v, 1)
}

#[test]
fn linear_system_for_y3() {
    let a = example_tensor();
    let ctx = BorderBasisCtx::new(3, b0_first(3)).unwrap();
    let (mat, rhs) = build_linear_system(&a, &mi([0, 0, 1]), &ctx).unwrap();
    assert_eq!(mat.shape(), (10, 3));
    assert_eq!(mat.row(0).iter().cloned().collect::<Vec<_>>(), vec![qi(-1), qi(3), qi(-2)]);
    assert_eq!(rhs.iter().take(4).cloned().collect::<Vec<_>>(), vec![qi(2), qi(14), qi(-6), qi(6)]);
}

#[test]
fn rank_three_generating_matrix_is_unique() {
    let a = example_tensor();
    let ctx = BorderBasisCtx::new(3, b0_first(3)).unwrap();
    let fam = GenMatrixFamily::exact(&a, &ctx).unwrap();
    assert_eq!(fam.m(), 0);
    let expected: [(MultiIndex, [Q; 3]); 6] = [
        (mi([0, 0, 1]), [qi(-1), qi(1), qi(1)]),
        (mi([2, 0, 0]), [qi(-3), qi(4), qi(0)]),
        (mi([1, 1, 0]), [qi(-1), qi(1), qi(1)]),
        (mi([0, 2, 0]), [ratio(83, 20), ratio(-27, 20), ratio(9, 10)]),
        (mi([1, 0, 1]), [qi(-4), qi(4), qi(1)]),
        (mi([0, 1, 1]), [ratio(63, 20), ratio(-7, 20), ratio(9, 10)]),
    ];
    let g = fam.evaluate(&[]).unwrap();
    for (alpha, col) in expected {
        let j = ctx.border_position(&alpha).unwrap();
        for (s, v) in col.iter().enumerate() {
            assert_eq!(&g[(s, j)], v, "column {alpha}, row {s}");
        }
    }
    let num = parameterize_g(&a.map(|q| q.to_c64()), &ctx, &GenConfig::default()).unwrap();
    let gn = num.evaluate(&[]).unwrap();
    for (x, y) in gn.iter().zip(g.iter()) {
        assert!((x - y.to_c64()).norm() < 1e-9);
    }
}

#[test]
fn multiplication_matrices_commute_and_match() {
    let a = example_tensor();
    let ctx = BorderBasisCtx::new(3, b0_first(3)).unwrap();
    let g = GenMatrixFamily::exact(&a, &ctx).unwrap().evaluate(&[]).unwrap();
    let m = mult_matrices(&g, &ctx).unwrap();
    let q = |rows: [[Q; 3]; 3]| DMatrix::from_fn(3, 3, |i, j| rows[i][j].clone());
    assert_eq!(m[0], q([[qi(0), qi(-3), qi(-1)], [qi(1), qi(4), qi(1)], [qi(0), qi(0), qi(1)]]));
    assert_eq!(m[1], q([[qi(0), qi(-1), ratio(83, 20)], [qi(0), qi(1), ratio(-27, 20)], [qi(1), qi(1), ratio(9, 10)]]));
    assert_eq!(m[2], q([[qi(-1), qi(-4), ratio(63, 20)], [qi(1), qi(4), ratio(-7, 20)], [qi(1), qi(1), ratio(9, 10)]]));
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(&m[i] * &m[j], &m[j] * &m[i]);
        }
    }
}

#[test]
fn rank_four_family_spans_the_displayed_columns() {
    let a = example_tensor();
    let ctx = BorderBasisCtx::new(3, b0_first(4)).unwrap();
    let fam = GenMatrixFamily::exact(&a, &ctx).unwrap();
    assert_eq!(fam.m(), 6);
    // (constant part, direction) of each displayed column
    let shown: [(MultiIndex, [Q; 4], [i64; 4]); 6] = [
        (mi([2, 0, 0]), [qi(-3), qi(4), qi(0), qi(0)], [1, -1, -1, 1]),
        (mi([1, 1, 0]), [qi(-1), qi(1), qi(1), qi(0)], [1, -1, -1, 1]),
        (mi([0, 2, 0]), [ratio(83, 20), ratio(-27, 20), ratio(9, 10), qi(0)], [1, -1, -1, 1]),
        (mi([1, 0, 1]), [qi(-4), qi(4), qi(1), qi(0)], [1, -1, -1, 1]),
        (mi([0, 1, 1]), [ratio(63, 20), ratio(-7, 20), ratio(9, 10), qi(0)], [1, -1, -1, 1]),
        (mi([0, 0, 2]), [ratio(3, 20), ratio(53, 20), ratio(9, 10), qi(0)], [1, -1, -1, 1]),
    ];
    for (alpha, c, dir) in shown {
        let j = ctx.border_position(&alpha).unwrap();
        assert_eq!(fam.column_params(j).len(), 1, "column {alpha}");
        let n = fam.column_null(j).column(0).into_owned();
        let d = DVector::from_iterator(4, dir.iter().map(|&v| qi(v)));
        let diff = DVector::from_iterator(4, (0..4).map(|s| c[s].clone() - fam.particular()[(s, j)].clone()));
        assert!(parallel(&n, &d), "direction of column {alpha}");
        assert!(parallel(&n, &diff) || diff.iter().all(Q::is_zero), "offset of column {alpha}");
    }
}

fn parallel(a: &DVector<Q>, b: &DVector<Q>) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| a[i].clone() * b[j].clone() == a[j].clone() * b[i].clone()))
}

fn monomial_vector(b0: &[MultiIndex], v: &[C64]) -> DVector<C64> {
    DVector::from_iterator(b0.len(), b0.iter().map(|e| e.as_slice().iter().zip(v).map(|(k, x)| x.powu(*k)).product()))
}

#[test]
fn interpolated_generating_matrix_has_points_as_eigenvectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let n = 3;
        let r = rng.random_range(2..=6);
        let pts: Vec<Vec<C64>> = (0..r)
            .map(|_| (0..n).map(|_| C64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5))).collect())
            .collect();
        let lam: Vec<C64> = (0..r).map(|_| C64::new(rng.random_range(0.5..2.0), 0.0)).collect();
        let b0 = xdecomp::multiindex::monomials_up_to(n, 2)[..r].to_vec();
        let ctx = BorderBasisCtx::new(n, b0.clone()).unwrap();
        let mut a = SymTensor::zeros(n, 4);
        for (l, v) in lam.iter().zip(&pts) {
            a = a.try_add(&SymTensor::rank_one(l, v, 4)).unwrap();
        }
        let fam = parameterize_g(&a, &ctx, &GenConfig::default()).unwrap();
        let vmat = DMatrix::from_fn(r, r, |i, s| monomial_vector(&b0, &pts[i])[s]);
        let lu = vmat.lu();
        let mut g = DMatrix::zeros(r, ctx.border().len());
        for (j, alpha) in ctx.border().iter().enumerate() {
            let rhs = DVector::from_iterator(r, pts.iter().map(|p| monomial_vector(std::slice::from_ref(alpha), p)[0]));
            g.set_column(j, &lu.solve(&rhs).unwrap());
        }
        // the interpolating G lies in the family
        let w = fam.project(&g).unwrap();
        let back = fam.evaluate(&w).unwrap();
        assert!((&back - &g).norm() < 1e-7 * (1.0 + g.norm()));
        let m = mult_matrices(&g, &ctx).unwrap();
        for v in &pts {
            let bv = monomial_vector(&b0, v);
            for (i, mi) in m.iter().enumerate() {
                let lhs = mi.transpose() * &bv;
                assert!((lhs - &bv * v[i]).norm() < 1e-8 * (1.0 + bv.norm()));
            }
        }
        let rs = residual_system(&fam, &[]).unwrap();
        assert!(rs.max_abs(&w) < 1e-7 * (1.0 + g.norm().powi(2)));
    }
}
