use onred_core::forward::{
    cdp_fidelity, cdp_gradient, linear_fidelity, linear_gradient, simulate_cdp, CdpMask,
    CdpMeasurement, LinearMeasurement, LinearOperator, Measurement,
};
use onred_core::oracle::finite_diff_gradient;
use onred_core::{ImageGrid, MeasurementSet, Rng};

fn random_image(h: usize, w: usize, rng: &mut Rng) -> ImageGrid {
    ImageGrid::from_fn(h, w, |_, _| 0.2 + rng.uniform())
}

fn relative_error(a: &ImageGrid, b: &ImageGrid) -> f64 {
    a.distance(b) / b.norm().max(1e-300)
}

/// CDP instance whose iterate is away from the phase singularity.
fn smooth_cdp_instance(size: usize, seed: u64) -> (CdpMeasurement, ImageGrid) {
    let mut rng = Rng::new(seed);
    let truth = random_image(size, size, &mut rng);
    let mask = CdpMask::generate(&mut rng, seed, size, size);
    let mut y = onred_core::forward::cdp_forward(&truth, &mask).unwrap();
    for v in &mut y {
        *v = (*v + 0.1 * rng.standard_normal()).max(0.0);
    }
    let x = random_image(size, size, &mut rng);
    (CdpMeasurement::new(mask, y).unwrap(), x)
}

#[test]
fn cdp_gradient_matches_central_differences() {
    for (size, seed) in [(4, 1), (4, 2), (4, 3), (8, 4), (8, 5), (8, 6)] {
        let (m, x) = smooth_cdp_instance(size, seed);
        let analytic = cdp_gradient(&x, &m).unwrap();
        let numeric = finite_diff_gradient(|v| cdp_fidelity(v, &m), &x, 1e-5).unwrap();
        let err = relative_error(&analytic, &numeric);
        assert!(err < 1e-6, "size {size} seed {seed}: relative error {err:e}");
    }
}

#[test]
fn dense_linear_gradient_matches_central_differences() {
    let mut rng = Rng::new(9);
    let h: Vec<f64> = (0..27).map(|_| rng.standard_normal()).collect();
    let op = LinearOperator::dense(3, 9, h).unwrap();
    let y: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
    let m = LinearMeasurement::new(3, 3, op, y).unwrap();
    let x = random_image(3, 3, &mut rng);
    let analytic = linear_gradient(&x, &m).unwrap();
    let numeric = finite_diff_gradient(|v| linear_fidelity(v, &m), &x, 1e-4).unwrap();
    // Quadratic: central differences are exact up to rounding.
    assert!(relative_error(&analytic, &numeric) < 1e-7);
}

#[test]
fn finite_differences_on_closed_forms() {
    let x = ImageGrid::from_fn(3, 4, |r, c| r as f64 - 0.5 * c as f64);
    let quad = finite_diff_gradient(|v| Ok(0.5 * v.norm_sq()), &x, 1e-3).unwrap();
    assert!(quad.distance(&x) < 1e-9);
    let c = ImageGrid::from_fn(3, 4, |r, c| (r * 4 + c) as f64 * 0.25 - 1.0);
    let lin = finite_diff_gradient(|v| Ok(c.dot(v)), &x, 1e-2).unwrap();
    assert!(lin.distance(&c) < 1e-12);
}

#[test]
fn mean_gradient_equals_loop_over_components() {
    let truth = ImageGrid::from_fn(8, 8, |r, c| ((r * 3 + c) % 5) as f64 / 5.0);
    let set = simulate_cdp(&truth, 7, 20.0, &mut Rng::new(3)).unwrap();
    let x = truth.map(|v| 0.9 * v + 0.05);
    let all: Vec<usize> = (0..set.len()).collect();
    let batch = set.mean_gradient(&x, &all).unwrap();
    let mut acc = ImageGrid::zeros(8, 8);
    for m in set.measurements() {
        acc = acc.add(&m.gradient(&x).unwrap());
    }
    let looped = acc.scaled(1.0 / set.len() as f64);
    assert!(batch.distance(&looped) <= 1e-12 * looped.norm().max(1.0));
    let fid = set.fidelity(&x).unwrap();
    let manual: f64 =
        set.measurements().iter().map(|m| m.fidelity(&x).unwrap()).sum::<f64>() / set.len() as f64;
    assert!((fid - manual).abs() <= 1e-12 * manual);
}

#[test]
fn mixed_shapes_are_rejected() {
    let a = LinearMeasurement::new(2, 2, LinearOperator::Identity, vec![0.0; 4]).unwrap();
    let b = LinearMeasurement::new(1, 4, LinearOperator::Identity, vec![0.0; 4]).unwrap();
    assert!(MeasurementSet::new(
        vec![Measurement::Linear(a), Measurement::Linear(b)],
        f64::INFINITY
    )
    .is_err());
}
