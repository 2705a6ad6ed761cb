//! GP predictions and marginal likelihoods against dense Gaussian identities
//! computed with explicit inverses and LU determinants.

use bnqd::{Dataset, GPFit, KernelSpec, Points};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_kernel(rng: &mut impl Rng) -> KernelSpec {
    let v = rng.random_range(0.2..3.0);
    match rng.random_range(0..4) {
        0 => KernelSpec::linear(v, rng.random_range(0.1..2.0)),
        1 => KernelSpec::exponential(v, rng.random_range(0.2..3.0)),
        2 => KernelSpec::matern32(v, rng.random_range(0.2..3.0)),
        _ => KernelSpec::squared_exponential(v, rng.random_range(0.2..3.0)),
    }
}

fn random_points(rng: &mut impl Rng, n: usize, dim: usize) -> Points {
    Points::new(dim, (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

fn dense_cov(k: &KernelSpec, a: &Points, b: &Points) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| k.eval(a.point(i), b.point(j)).unwrap())
}

struct Oracle {
    lml: f64,
    mean: Vec<f64>,
    var: Vec<f64>,
}

fn oracle(k: &KernelSpec, noise: f64, data: &Dataset, query: &Points) -> Oracle {
    let n = data.len();
    let c = data.mean_y();
    let cov = dense_cov(k, &data.x, &data.x) + DMatrix::identity(n, n) * noise;
    let inv = cov.clone().try_inverse().unwrap();
    let det = cov.lu().determinant();
    let r = DVector::from_iterator(n, data.y.iter().map(|y| y - c));
    let quad = (r.transpose() * &inv * &r)[(0, 0)];
    let lml = -0.5 * quad - 0.5 * det.ln() - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    let ks = dense_cov(k, &data.x, query);
    let kss = dense_cov(k, query, query);
    let mean_vec = ks.transpose() * &inv * &r;
    let cond = &kss - ks.transpose() * &inv * &ks;
    Oracle {
        lml,
        mean: mean_vec.iter().map(|m| m + c).collect(),
        var: (0..query.len()).map(|j| cond[(j, j)]).collect(),
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

#[test]
fn matches_dense_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=4);
        let dim = rng.random_range(1..=2);
        let k = random_kernel(&mut rng);
        let noise = rng.random_range(0.05..1.0);
        let x = random_points(&mut rng, n, dim);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let data = Dataset::new(x, y).unwrap();
        let query = random_points(&mut rng, m, dim);

        let fit = GPFit::new(data.clone(), k, noise).unwrap();
        assert_eq!(fit.jitter(), 0.0);
        let expected = oracle(&k, noise, &data, &query);
        let got = fit.predict(&query).unwrap();
        assert!(close(fit.log_marginal_likelihood(), expected.lml, 1e-8), "case {case}: lml");
        for j in 0..m {
            assert!(close(got.mean[j], expected.mean[j], 1e-8), "case {case}: mean {j}");
            assert!(close(got.var[j], expected.var[j].max(0.0), 1e-8), "case {case}: var {j}");
        }
    }
}

#[test]
fn cholesky_reconstructs_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let k = random_kernel(&mut rng);
        let x = random_points(&mut rng, 5, 1);
        let y: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fit = GPFit::new(Dataset::new(x.clone(), y).unwrap(), k, 0.3).unwrap();
        let l = fit.chol_factor();
        let target = dense_cov(&k, &x, &x) + DMatrix::identity(5, 5) * 0.3;
        let err = (&l * l.transpose() - &target).norm() / target.norm();
        assert!(err < 1e-8);
        for i in 0..5 {
            for j in i + 1..5 {
                assert_eq!(l[(i, j)], 0.0);
            }
        }
    }
}

#[test]
fn more_data_never_increases_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let k = random_kernel(&mut rng);
        let n = rng.random_range(1..7);
        let x = random_points(&mut rng, n + 1, 1);
        let y: Vec<f64> = (0..=n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let full = Dataset::new(x, y).unwrap();
        let fewer = full.select(&(0..n).collect::<Vec<_>>());
        let query = random_points(&mut rng, 3, 1);
        let v_few = GPFit::new(fewer, k, 0.2).unwrap().predict(&query).unwrap().var;
        let v_all = GPFit::new(full, k, 0.2).unwrap().predict(&query).unwrap().var;
        for (a, b) in v_all.iter().zip(&v_few) {
            assert!(*a <= b + 1e-10, "{a} > {b}");
        }
    }
}

#[test]
fn log_marginal_likelihood_ignores_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let k = random_kernel(&mut rng);
        let n = rng.random_range(2..9);
        let x = random_points(&mut rng, n, 2);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let data = Dataset::new(x, y).unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        order.rotate_left(n / 2);
        let a = GPFit::new(data.clone(), k, 0.4).unwrap().log_marginal_likelihood();
        let b = GPFit::new(data.select(&order), k, 0.4).unwrap().log_marginal_likelihood();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    }
}
