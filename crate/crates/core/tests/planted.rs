use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xdecomp::border::BorderBasisCtx;
use xdecomp::decomposer::{decompose, decompose_at_rank, reconstruct_projective, solve_w, GenericChange, SolverConfig};
use xdecomp::genpoly::{residual_system, GenMatrixFamily};
use xdecomp::variety::{sample_y, select_b0, VarietySpec};
use xdecomp::vandermonde::segre_variety;
use xdecomp::{Decomposition, MultiIndex, NormKind, Poly, SymTensor, Tensor64, C64};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn affine(n: usize, terms: &[(&[u32], f64)]) -> Poly<C64> {
    Poly::from_terms(n, terms.iter().map(|(e, v)| (MultiIndex::from(e.to_vec()), c(*v)))).unwrap()
}

fn quadric() -> VarietySpec<C64> {
    // y1^2 + y2^2 + y3^2 = 1
    let g = affine(3, &[(&[2, 0, 0], 1.0), (&[0, 2, 0], 1.0), (&[0, 0, 2], 1.0), (&[0, 0, 0], -1.0)]);
    VarietySpec::from_affine(3, vec![g]).unwrap()
}

fn twisted_cubic() -> VarietySpec<C64> {
    let g1 = affine(3, &[(&[0, 1, 0], 1.0), (&[2, 0, 0], -1.0)]);
    let g2 = affine(3, &[(&[0, 0, 1], 1.0), (&[1, 1, 0], -1.0)]);
    let g3 = affine(3, &[(&[1, 0, 1], 1.0), (&[0, 2, 0], -1.0)]);
    VarietySpec::from_affine(3, vec![g1, g2, g3]).unwrap().with_dim(2)
}

struct Planted {
    a: Tensor64,
    dec: Decomposition<C64>,
}

fn plant(x: &VarietySpec<C64>, r: usize, d: u32, seed: u64) -> Planted {
    let pts = sample_y(x, r, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lam: Vec<C64> = (0..r).map(|_| C64::new(rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0))).collect();
    let dec = Decomposition::new(lam, pts);
    Planted { a: SymTensor::reconstruct(&dec, x.n(), d).unwrap(), dec }
}

fn dist(u: &[C64], v: &[C64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
}

/// Largest distance from a planted point to its nearest recovered point, after a one-to-one match.
fn match_error(planted: &[Vec<C64>], found: &[Vec<C64>]) -> f64 {
    if planted.len() != found.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; found.len()];
    let mut worst: f64 = 0.0;
    for p in planted {
        let (j, e) = found
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, f)| (j, dist(p, f)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(e / (1.0 + p.iter().map(|v| v.norm()).fold(0.0, f64::max)));
    }
    worst
}

fn recovery_rate(x: &VarietySpec<C64>, r: usize, d: u32, base: u64) -> usize {
    let cfg = SolverConfig::default();
    (0..20)
        .filter(|t| {
            let p = plant(x, r, d, base + t);
            match decompose_at_rank(&p.a, x, r, &cfg) {
                Ok(res) => res.rel_error <= 1e-8 && match_error(&p.dec.points, &res.decomposition.points) <= 1e-6,
                Err(_) => false,
            }
        })
        .count()
}

#[test]
fn planted_points_on_a_quadric_surface_are_recovered() {
    let ok = recovery_rate(&quadric(), 5, 4, 100);
    assert!(ok >= 18, "{ok}/20");
}

#[test]
fn planted_points_on_a_twisted_cubic_are_recovered() {
    let ok = recovery_rate(&twisted_cubic(), 4, 4, 200);
    assert!(ok >= 18, "{ok}/20");
}

#[test]
fn planted_points_on_a_segre_threefold_are_recovered() {
    let x = segre_variety::<C64>(3).unwrap();
    let ok = recovery_rate(&x, 4, 3, 300);
    assert!(ok >= 18, "{ok}/20");
}

#[test]
fn residuals_vanish_at_the_solution_and_not_nearby() {
    let x = quadric();
    let mut broken = 0;
    for seed in 0..10 {
        let p = plant(&x, 5, 4, 400 + seed);
        let b0 = select_b0(&x, 5, seed).unwrap();
        let ctx = BorderBasisCtx::new(3, b0).unwrap();
        let fam = GenMatrixFamily::numeric(&p.a, &ctx, &Default::default()).unwrap();
        let rs = residual_system(&fam, x.generators_g()).unwrap();
        assert!(fam.m() > 0 && !rs.is_empty());
        let sol = solve_w(&rs, &SolverConfig { seed, ..Default::default() }).unwrap();
        assert!(rs.max_abs(&sol.w) <= 1e-8, "seed {seed}: {:.3e}", rs.max_abs(&sol.w));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w2: Vec<C64> = sol.w.iter().map(|v| v + C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 1e-2).collect();
        if rs.max_abs(&w2) > 1e-4 {
            broken += 1;
        }
    }
    assert_eq!(broken, 10);
}

#[test]
fn point_at_infinity_needs_a_coordinate_change() {
    // (0,1)^3 + (1,1)^3 in S^3(C^2): the first point has x0 = 0.
    let u = [vec![c(0.0), c(1.0)], vec![c(1.0), c(1.0)]];
    let a = SymTensor::rank_one_homogeneous(&c(1.0), &u[0], 3)
        .try_add(&SymTensor::rank_one_homogeneous(&c(1.0), &u[1], 3))
        .unwrap();
    let x = VarietySpec::full_space(1);
    let never = SolverConfig { generic_change: GenericChange::Never, rank_max: 2, ..Default::default() };
    assert!(decompose(&a, &x, &never).is_err());
    let res = decompose(&a, &x, &SolverConfig { rank_max: 2, ..Default::default() }).unwrap();
    assert_eq!(res.rank_used, 2);
    let proj = res.projective.as_ref().expect("homogeneous terms");
    assert_eq!(proj.at_infinity.iter().filter(|f| **f).count(), 1);
    assert_eq!(res.decomposition.rank(), 1);
    let back = reconstruct_projective(proj, 1, 3);
    let err = back.try_sub(&a).unwrap().norm(NormKind::HilbertSchmidt);
    assert!(err <= 1e-10, "{err:.3e}");
    let inf = proj.at_infinity.iter().position(|f| *f).unwrap();
    let v = &proj.points[inf];
    assert!(v[0].norm() <= 1e-10 * v[1].norm());
}

#[test]
fn same_seed_same_result() {
    let x = quadric();
    let p = plant(&x, 5, 4, 7);
    let cfg = SolverConfig { seed: 42, ..Default::default() };
    let r1 = decompose(&p.a, &x, &cfg).unwrap();
    let r2 = decompose(&p.a, &x, &cfg).unwrap();
    assert_eq!(r1.decomposition, r2.decomposition);
    assert_eq!(r1.rank_used, r2.rank_used);
}

#[test]
fn error_metrics_ignore_term_order() {
    let x = twisted_cubic();
    let p = plant(&x, 4, 4, 9);
    let res = decompose(&p.a, &x, &SolverConfig::default()).unwrap();
    let mut idx: Vec<usize> = (0..res.decomposition.rank()).collect();
    idx.reverse();
    let shuffled = Decomposition::new(
        idx.iter().map(|&i| res.decomposition.weights[i]).collect(),
        idx.iter().map(|&i| res.decomposition.points[i].clone()).collect(),
    );
    let (abs1, rel1) = p.a.residual(&res.decomposition, NormKind::HilbertSchmidt).unwrap();
    let (abs2, rel2) = p.a.residual(&shuffled, NormKind::HilbertSchmidt).unwrap();
    assert!((abs1 - abs2).abs() <= 1e-12 * (1.0 + abs1) && (rel1 - rel2).abs() <= 1e-12);
    assert!((x.violation(&res.decomposition.points[0]).unwrap() - x.violation(&shuffled.points[idx.len() - 1]).unwrap()).abs() == 0.0);
}
