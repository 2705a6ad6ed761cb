use bnqd::inference::{EffectMixture, EffectPosterior, GaussianComponent};
use bnqd::sim::{generate, rmse, run_grid, LatentFunction, SimConfig};
use bnqd::{KernelFamily, KernelChoice};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn step_height_shows_in_side_means() {
    let cfg = SimConfig { latent: LatentFunction::Sine, d: 4.0, n: 10_000, sigma: 1.0, seed: 17, ..SimConfig::default() };
    let data = generate(&cfg);
    let (mut right, mut left) = (Vec::new(), Vec::new());
    let (mut f_right, mut f_left) = (0.0, 0.0);
    for (x, y) in data.x.iter().zip(&data.y) {
        if x[0] >= 0.0 {
            right.push(*y);
            f_right += LatentFunction::Sine.eval(x[0]);
        } else {
            left.push(*y);
            f_left += LatentFunction::Sine.eval(x[0]);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    // latent asymmetry: empirical means of f over each side
    let asym = f_right / right.len() as f64 - f_left / left.len() as f64;
    let diff = mean(&right) - mean(&left);
    assert!((diff - (4.0 + asym)).abs() < 4.0 * 1.0 / (cfg.n as f64).sqrt(), "{diff} vs {}", 4.0 + asym);
}

#[test]
fn single_repetition_grid() {
    let tpl = SimConfig {
        repetitions: 1,
        n: 30,
        kernels: vec![KernelChoice::from(KernelFamily::Exponential)],
        ..SimConfig::default()
    };
    let s = run_grid(&[LatentFunction::Linear, LatentFunction::Lee], &[0.5, 2.0], &[1.0], &tpl).unwrap();
    assert!(s.failures.is_empty());
    // 4 cells × (1 kernel + total) × 5 metrics
    assert_eq!(s.rows.len(), 4 * 2 * 5);
    assert!(s.rows.iter().all(|r| r.count == 1 && r.stderr == 0.0));
    let exp = s.get(LatentFunction::Lee, 2.0, "exp", "log_bf10").unwrap().mean;
    let total = s.get(LatentFunction::Lee, 2.0, "total", "log_bf10").unwrap().mean;
    // with one kernel the total equals that kernel
    assert!((exp - total).abs() < 1e-12);
    let again = run_grid(&[LatentFunction::Linear, LatentFunction::Lee], &[0.5, 2.0], &[1.0], &tpl).unwrap();
    assert_eq!(s, again);
}

#[test]
fn rmse_closed_form_agrees_with_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..30 {
        let k = rng.random_range(1..4);
        let spike = rng.random_range(0.0..0.8);
        let mut raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.iter_mut().for_each(|w| *w *= (1.0 - spike) / s);
        let mix = EffectMixture {
            spike_weight: spike,
            components: raw
                .iter()
                .map(|&weight| GaussianComponent {
                    weight,
                    mean: rng.random_range(-3.0..3.0),
                    var: rng.random_range(0.0..2.0),
                })
                .collect(),
        };
        let true_d = rng.random_range(-2.0..2.0);
        let count = 20_000;
        let samples = mix.sample(count, case);
        let sq: Vec<f64> = samples.iter().map(|x| (x - true_d).powi(2)).collect();
        let mse_mc = sq.iter().sum::<f64>() / count as f64;
        let sd_sq = (sq.iter().map(|v| (v - mse_mc).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt();
        let mse_se = sd_sq / (count as f64).sqrt();
        let exact = mix.rmse_exact(true_d);
        assert!((mse_mc - exact * exact).abs() < 3.0 * mse_se + 1e-12, "case {case}");
        assert_eq!(rmse(&mix, true_d, Some(count), case), mse_mc.sqrt());
    }
}

#[test]
fn gaussian_rmse_tends_to_its_sd() {
    let g = EffectPosterior::new(1.5, 0.64, 1.0).gaussian();
    assert!((g.rmse_exact(1.5) - 0.8).abs() < 1e-15);
    let mc = g.rmse_mc(1.5, 200_000, 3);
    assert!((mc - 0.8).abs() < 0.01, "{mc}");
}
