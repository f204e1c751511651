use onred_core::forward::{simulate_cdp, simulate_linear_gaussian, LinearMeasurement, LinearOperator, Measurement};
use onred_core::oracle::{enumerate_variance, population_variance};
use onred_core::red::{self, default_step_size, full_gradient, minibatch_gradient, red_operator, red_step};
use onred_core::forward::estimate_lipschitz;
use onred_core::{Algorithm, DenoiserSpec, ImageGrid, MeasurementSet, Rng, SolverConfig};

fn phantom(size: usize) -> ImageGrid {
    ImageGrid::from_fn(size, size, |r, c| {
        let (dr, dc) = (r as f64 - size as f64 / 2.0, c as f64 - size as f64 / 3.0);
        if dr * dr + dc * dc < (size * size) as f64 / 8.0 { 0.8 } else { 0.25 }
    })
}

fn cdp_set(count: usize) -> (MeasurementSet, ImageGrid) {
    let truth = phantom(8);
    let set = simulate_cdp(&truth, count, 20.0, &mut Rng::new(17)).unwrap();
    let x = truth.map(|v| 0.8 * v + 0.1);
    (set, x)
}

#[test]
fn minibatch_mean_is_unbiased() {
    let (set, x) = cdp_set(8);
    let full = full_gradient(&set, &x).unwrap();
    let draws = 10_000;
    let mut rng = Rng::new(1);
    let n = x.len();
    let (mut sum, mut sum_sq) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..draws {
        let (g, _) = minibatch_gradient(&set, &x, 2, &mut rng).unwrap();
        for (j, v) in g.data().iter().enumerate() {
            sum[j] += v;
            sum_sq[j] += v * v;
        }
    }
    let d = draws as f64;
    for j in 0..n {
        let mean = sum[j] / d;
        let var = (sum_sq[j] / d - mean * mean).max(0.0) * d / (d - 1.0);
        let se = (var / d).sqrt();
        assert!((mean - full.data()[j]).abs() <= 4.0 * se + 1e-15, "coordinate {j}");
    }
}

fn empirical_variance(set: &MeasurementSet, x: &ImageGrid, b: usize, draws: usize, seed: u64) -> f64 {
    let full = full_gradient(set, x).unwrap();
    let mut rng = Rng::new(seed);
    (0..draws)
        .map(|_| minibatch_gradient(set, x, b, &mut rng).unwrap().0.distance(&full).powi(2))
        .sum::<f64>()
        / draws as f64
}

#[test]
fn variance_scales_inversely_with_batch_size() {
    let (set, x) = cdp_set(8);
    let bs = [1usize, 2, 4, 8];
    let vars: Vec<f64> = bs.iter().map(|&b| empirical_variance(&set, &x, b, 10_000, b as u64)).collect();
    for (&b, &v) in bs.iter().zip(&vars) {
        let exact = enumerate_variance(&set, &x, b).unwrap();
        assert!((v - exact).abs() <= 0.05 * exact, "B={b}: {v} vs {exact}");
    }
    let lx: Vec<f64> = bs.iter().map(|&b| (b as f64).ln()).collect();
    let ly: Vec<f64> = vars.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / 4.0, ly.iter().sum::<f64>() / 4.0);
    let slope = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / lx.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>();
    assert!((slope + 1.0).abs() <= 0.1, "slope {slope}");
}

#[test]
fn enumerated_variance_matches_monte_carlo() {
    // Four identity components observing different targets: gradients x − y_i.
    let targets = [[0.0, 1.0, 2.0], [1.0, -1.0, 0.5], [3.0, 0.0, 0.0], [-2.0, 2.0, 1.0]];
    let ms = targets
        .iter()
        .map(|t| Measurement::Linear(LinearMeasurement::new(1, 3, LinearOperator::Identity, t.to_vec()).unwrap()))
        .collect();
    let set = MeasurementSet::new(ms, f64::INFINITY).unwrap();
    let x = ImageGrid::new(1, 3, vec![0.3, -0.2, 0.7]).unwrap();
    for b in [1, 3] {
        let mc = empirical_variance(&set, &x, b, 1_000_000, 99);
        let exact = enumerate_variance(&set, &x, b).unwrap();
        assert!((mc - exact).abs() <= 0.01 * exact, "B={b}: {mc} vs {exact}");
    }
    assert_eq!(enumerate_variance(&set, &x, 2).unwrap() * 2.0, population_variance(&set, &x).unwrap());
}

#[test]
fn enumerated_variance_vanishes_for_identical_components() {
    let m = LinearMeasurement::new(2, 2, LinearOperator::Identity, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let set = MeasurementSet::new(vec![Measurement::Linear(m); 5], f64::INFINITY).unwrap();
    assert_eq!(enumerate_variance(&set, &ImageGrid::zeros(2, 2), 3).unwrap(), 0.0);
}

#[test]
fn stochastic_step_variance_is_bounded() {
    let (set, x) = cdp_set(8);
    let spec = DenoiserSpec::tv(5.0);
    let (tau, gamma) = (0.2, default_step_size(1.0, 0.2).unwrap());
    let full = full_gradient(&set, &x).unwrap();
    let p = red_step(&x, &full, &spec, tau, gamma).unwrap();
    for b in [1, 2, 4] {
        let mut rng = Rng::new(40 + b as u64);
        let draws = 4000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let (g, _) = minibatch_gradient(&set, &x, b, &mut rng).unwrap();
            acc += red_step(&x, &g, &spec, tau, gamma).unwrap().distance(&p).powi(2);
        }
        let bound = gamma * gamma * enumerate_variance(&set, &x, b).unwrap();
        assert!(acc / draws as f64 <= bound * 1.2, "B={b}");
    }
}

fn convex_instance() -> (MeasurementSet, f64) {
    let set = simulate_linear_gaussian(&phantom(16), 8, 64, 30.0, &mut Rng::new(5)).unwrap();
    let l = estimate_lipschitz(&set).unwrap();
    (set, l)
}

#[test]
fn step_operator_is_nonexpansive_on_convex_instances() {
    let (set, l) = convex_instance();
    let tau = 0.2;
    let gamma = default_step_size(l, tau).unwrap();
    let mut rng = Rng::new(77);
    for spec in [DenoiserSpec::tv(5.0), DenoiserSpec::averaged_kernel(0.5)] {
        let p = |x: &ImageGrid| {
            let g = red_operator(&set, &spec, tau, x).unwrap().g_grad;
            red_step(x, &g, &spec, tau, gamma).unwrap()
        };
        for _ in 0..100 {
            let x = ImageGrid::from_fn(16, 16, |_, _| rng.uniform());
            let s = 10f64.powf(-3.0 + 3.0 * rng.uniform());
            let y = ImageGrid::from_fn(16, 16, |r, c| x.get(r, c) + s * (rng.uniform() - 0.5));
            assert!(p(&x).distance(&p(&y)) <= x.distance(&y) * (1.0 + 1e-6));
        }
    }
}

#[test]
fn zero_of_operator_is_a_fixed_point() {
    let truth = phantom(6);
    let m = LinearMeasurement::new(6, 6, LinearOperator::Identity, truth.data().to_vec()).unwrap();
    let set = MeasurementSet::new(vec![Measurement::Linear(m)], f64::INFINITY).unwrap();
    let spec = DenoiserSpec::identity();
    let eval = red_operator(&set, &spec, 0.3, &truth).unwrap();
    assert_eq!(eval.combined.norm(), 0.0);
    assert_eq!(red_step(&truth, &eval.g_grad, &spec, 0.3, 0.5).unwrap(), truth);
}

#[test]
fn runs_are_deterministic_per_seed() {
    let (set, x) = cdp_set(6);
    let cfg = SolverConfig::new(Algorithm::OnRed, 0.5, 0.2, DenoiserSpec::tv(5.0))
        .with_minibatch(2)
        .with_iterations(40)
        .with_seed(8);
    let a = red::run(&set, &x, &cfg, None).unwrap();
    let b = red::run(&set, &x, &cfg, None).unwrap();
    assert_eq!(a, b);
    let c = red::run(&set, &x, &cfg.clone().with_seed(9), None).unwrap();
    assert_ne!(a.trace, c.trace);
}
