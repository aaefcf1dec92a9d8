use std::f64::consts::{PI, TAU};

use circreg::inference::summarize;
use circreg::mcmc::{run_chain, McmcConfig};
use circreg::model::{ModelSpec, ModelVariant, Param};
use circreg::sim::{generate_dataset, generate_dataset_with_latent, SimRegime};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
    h / 3.0 * (f(a) + f(b) + inner)
}

fn bessel_i0(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= (x / 2.0).powi(2) / (k * k) as f64;
        sum += term;
    }
    sum
}

// Pr[|X*| < delta] for X* = link(V) + WC error, V ~ von Mises(0, kappa).
fn covariate_zero_probability(theta0: f64, r: f64, theta1: f64, rho: f64, kappa: f64, delta: f64) -> f64 {
    let b0 = Complex64::from_polar(1.0, theta0);
    let b1 = Complex64::from_polar(r, theta1);
    let c = (1.0 + rho) / (1.0 - rho);
    let mass = |mu: f64| {
        let f = |t: f64| {
            let d = (t - mu + PI).rem_euclid(TAU) - PI;
            (c * (d / 2.0).tan()).atan() / PI
        };
        (f(delta) - f(-delta)).rem_euclid(1.0)
    };
    let vm = |v: f64| (kappa * v.cos()).exp() / (TAU * bessel_i0(kappa));
    simpson(
        |v| {
            let z = Complex64::from_polar(1.0, v);
            vm(v) * mass((b0 * (z + b1) / (Complex64::new(1.0, 0.0) + b1.conj() * z)).arg())
        },
        -PI,
        PI,
        4000,
    )
}

#[test]
fn covariate_zero_fraction_matches_quadrature() {
    for name in ["table1", "table6"] {
        let mut regime = SimRegime::builtin(name).unwrap();
        regime.n = 200_000;
        let data = generate_dataset(&regime, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let frac = data.iter().filter(|o| o.theta_x.is_zero()).count() as f64 / regime.n as f64;
        let s = regime.stage2;
        let p = covariate_zero_probability(s.theta0, s.r, s.theta1, s.rho, regime.vm_kappa, regime.delta_x);
        let se = (p * (1.0 - p) / regime.n as f64).sqrt();
        assert!((frac - p).abs() < 4.0 * se, "{name}: {frac} vs {p}");
    }
}

#[test]
fn contamination_raises_zero_fractions() {
    let mut last = (0.0, 0.0);
    for name in ["table6", "table7", "table8"] {
        let mut regime = SimRegime::builtin(name).unwrap();
        regime.n = 50_000;
        let data = generate_dataset(&regime, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let n = data.len() as f64;
        let zx = data.iter().filter(|o| o.theta_x.is_zero()).count() as f64 / n;
        let zy = data.iter().filter(|o| o.theta_y.is_zero()).count() as f64 / n;
        assert!(zx > last.0 && zy > last.1, "{name}");
        last = (zx, zy);
    }
}

#[test]
fn latent_values_outside_window_are_observed() {
    let regime = SimRegime::builtin("table3").unwrap();
    let (data, latent) = generate_dataset_with_latent(&regime, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    for (o, (x, y)) in data.iter().zip(&latent) {
        assert_eq!(o.theta_x.is_zero(), x.radians().abs() < regime.delta_x);
        assert_eq!(o.theta_y.is_zero(), y.radians().abs() < regime.delta_y);
    }
}

#[test]
fn large_sample_posterior_concentrates_near_truth() {
    let mut regime = SimRegime::builtin("table1").unwrap();
    regime.n = 1_000;
    let data = generate_dataset(&regime, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
    let spec = ModelSpec::for_variant(ModelVariant::ModelI, regime.delta_x, regime.delta_y);
    let cfg = McmcConfig {
        total_iterations: 6_000,
        burn_in: 2_000,
        thin: 4,
        ..Default::default()
    };
    let report = summarize(&run_chain(&data, &spec, &cfg).unwrap()).unwrap();
    let est = |p| report.get(p).unwrap().estimate;
    assert!((est(Param::R1) - 0.9).abs() < 0.1, "r1 {}", est(Param::R1));
    assert!((est(Param::R2) - 1.2).abs() < 0.1, "r2 {}", est(Param::R2));
    assert!((est(Param::Rho1) - 0.85).abs() < 0.03, "rho1 {}", est(Param::Rho1));
    assert!((est(Param::Rho2) - 0.85).abs() < 0.03, "rho2 {}", est(Param::Rho2));
    for p in [Param::Rho1, Param::Rho2, Param::R2] {
        assert!(report.get(p).unwrap().hpd.contains(regime.truth_of(p).unwrap()), "{p}");
    }
}

#[test]
fn independent_seeds_agree() {
    let regime = SimRegime::builtin("table2").unwrap();
    let data = generate_dataset(&regime, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let spec = ModelSpec::for_variant(ModelVariant::ModelI, regime.delta_x, regime.delta_y);
    let fit = |seed| {
        let cfg = McmcConfig { seed, ..Default::default() };
        summarize(&run_chain(&data, &spec, &cfg).unwrap()).unwrap()
    };
    let (a, b) = (fit(1), fit(2));
    for p in [Param::Rho1, Param::Rho2] {
        let (x, y) = (a.get(p).unwrap(), b.get(p).unwrap());
        assert!((x.estimate - y.estimate).abs() < 0.5 * x.spread, "{p}: {} vs {}", x.estimate, y.estimate);
    }
}
