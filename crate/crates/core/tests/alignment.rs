mod common;

use dctsent::alignment::{
    apply_map, fit, fit_least_squares, fit_procrustes, LinearMap, ParallelBatch, Solver,
};
use dctsent::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn objective(s: &DMatrix<f64>, t: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    (s * w - t).norm_squared()
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

#[test]
fn least_squares_recovers_planted_map() {
    for (m, p, seed) in [(100, 8, 1), (500, 32, 2)] {
        let mut rng = common::rng(seed);
        let s = common::gaussian(m, p, &mut rng);
        let w = common::gaussian(p, p, &mut rng);
        let t = &s * &w;
        let map = fit_least_squares(&ParallelBatch::new(s, t).unwrap(), 0.0).unwrap();
        assert!(max_abs_diff(&map.matrix, &w) <= 1e-6, "M={m} p={p}");
        assert!(map.fit_residual <= 1e-8);
    }
}

#[test]
fn procrustes_recovers_rotation() {
    let mut rng = common::rng(3);
    let (m, p) = (500, 32);
    let s = common::gaussian(m, p, &mut rng);
    let r = common::random_orthogonal(p, &mut rng);
    let t = &s * &r;
    let map = fit_procrustes(&ParallelBatch::new(s, t).unwrap()).unwrap();
    assert!(max_abs_diff(&map.matrix, &r) <= 1e-6);
    let gram = map.matrix.transpose() * &map.matrix;
    assert!(max_abs_diff(&gram, &DMatrix::identity(p, p)) <= 1e-9);
}

#[test]
fn least_squares_is_a_minimum() {
    let mut rng = common::rng(4);
    let (m, p) = (60, 6);
    let s = common::gaussian(m, p, &mut rng);
    let t = common::gaussian(m, p, &mut rng);
    let map = fit_least_squares(&ParallelBatch::new(s.clone(), t.clone()).unwrap(), 0.0).unwrap();
    let best = objective(&s, &t, &map.matrix);
    for _ in 0..20 {
        let delta = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1e-3..1e-3));
        let moved = objective(&s, &t, &(&map.matrix + delta));
        assert!(moved >= best - 1e-12 * best, "{moved} < {best}");
    }
}

#[test]
fn procrustes_beats_other_rotations() {
    let mut rng = common::rng(5);
    let (m, p) = (80, 5);
    let s = common::gaussian(m, p, &mut rng);
    let t = common::gaussian(m, p, &mut rng);
    let map = fit_procrustes(&ParallelBatch::new(s.clone(), t.clone()).unwrap()).unwrap();
    let best = objective(&s, &t, &map.matrix);
    for _ in 0..20 {
        let q = common::random_orthogonal(p, &mut rng);
        assert!(objective(&s, &t, &q) >= best - 1e-9);
    }
}

#[test]
fn residual_grows_with_ridge() {
    let mut rng = common::rng(6);
    let s = common::gaussian(50, 6, &mut rng);
    let t = common::gaussian(50, 6, &mut rng);
    let batch = ParallelBatch::new(s, t).unwrap();
    let mut last = 0.0;
    for ridge in [0.0, 0.1, 1.0, 10.0, 100.0] {
        let r = fit_least_squares(&batch, ridge).unwrap().fit_residual;
        assert!(r >= last - 1e-12, "ridge {ridge}: {r} < {last}");
        last = r;
    }
}

#[test]
fn rank_deficient_source_is_rejected_without_ridge() {
    let mut rng = common::rng(7);
    let mut s = common::gaussian(40, 4, &mut rng);
    let col = s.column(0).clone_owned();
    s.set_column(3, &col);
    let t = common::gaussian(40, 4, &mut rng);
    let batch = ParallelBatch::new(s, t).unwrap();
    let err = fit_least_squares(&batch, 0.0).unwrap_err();
    assert!(matches!(err, Error::RankDeficient { rank: 3, dim: 4 }));
    assert_eq!(err.exit_code(), 3);
    assert!(fit_least_squares(&batch, 1e-3).is_ok());
}

#[test]
fn self_alignment_is_identity() {
    let mut rng = common::rng(8);
    let s = common::gaussian(30, 5, &mut rng);
    for solver in [Solver::LeastSquares, Solver::Procrustes] {
        let map = fit(
            &ParallelBatch::new(s.clone(), s.clone()).unwrap(),
            solver,
            0.0,
        )
        .unwrap();
        let mapped = apply_map(&map, &s).unwrap();
        assert!(max_abs_diff(&mapped, &s) <= 1e-9, "{solver}");
    }
}

#[test]
fn map_file_round_trip() {
    let mut rng = common::rng(9);
    let s = common::gaussian(20, 3, &mut rng);
    let t = common::gaussian(20, 3, &mut rng);
    let map = fit_least_squares(&ParallelBatch::new(s, t).unwrap(), 0.5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.xmap");
    map.save(&path).unwrap();
    assert_eq!(LinearMap::load(&path).unwrap().matrix, map.matrix);
}

proptest! {
    #[test]
    fn apply_map_is_linear(
        seed in any::<u64>(),
        alpha in -5.0f64..5.0,
        beta in -5.0f64..5.0,
    ) {
        let mut rng = common::rng(seed);
        let map = LinearMap { matrix: common::gaussian(4, 4, &mut rng), ..LinearMap::identity(4) };
        let a = common::gaussian(3, 4, &mut rng);
        let b = common::gaussian(3, 4, &mut rng);
        let lhs = apply_map(&map, &(&a * alpha + &b * beta)).unwrap();
        let rhs = apply_map(&map, &a).unwrap() * alpha + apply_map(&map, &b).unwrap() * beta;
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12 * (1.0 + rhs.abs().max()));
    }
}
