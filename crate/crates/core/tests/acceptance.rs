//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use circreg::distributions::{eta, TruncatedWrappedCauchy, WrappedCauchy};
use circreg::inference::{geweke, hpd_interval, ParamKind};
use circreg::mcmc::{run_chain, McmcConfig};
use circreg::mobius::{omega_link_apply, omega_to_beta1, MobiusLink};
use circreg::model::{
    censor, is_censored, log_augmented_likelihood, LatentState, ModelSpec, ModelVariant, Observation, Param,
    Stage, StageParams,
};
use circreg::sim::{generate_dataset, run_study, SimRegime, StudyTable};
use circreg::{Angle, UnitComplex};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

struct Report {
    failed: usize,
    total: usize,
}

impl Report {
    fn check(&mut self, id: &str, what: &str, pass: bool, detail: String) {
        self.total += 1;
        if !pass {
            self.failed += 1;
        }
        println!("{} {id} {what}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn ang(x: f64) -> Angle {
    Angle::new(x).unwrap()
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn panel(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let (lm, flm, left) = panel(f, a, fa, m, fm);
        let (rm, frm, right) = panel(f, m, fm, b, fb);
        let d = left + right - whole;
        if depth == 0 || d.abs() <= 15.0 * tol {
            return left + right + d / 15.0;
        }
        let half = (tol / 2.0).max(1e-16);
        rec(f, a, fa, m, fm, lm, flm, left, half, depth - 1) + rec(f, m, fm, b, fb, rm, frm, right, half, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = panel(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 40)
}

fn ac1(rep: &mut Report) {
    let base = WrappedCauchy::new(Angle::ZERO, 0.95).unwrap();
    let (a, b) = (-0.035, 0.035);
    let twc = TruncatedWrappedCauchy::new(base, ang(a), ang(b), Angle::ZERO).unwrap();
    let k = twc.normalizer();
    let pdf = |t: f64| (1.0 - 0.95f64.powi(2)) / (TAU * (1.0 + 0.95f64.powi(2) - 1.9 * t.cos()));
    let k_quad = simpson(&pdf, a, b, 1e-14);
    rep.check(
        "AC1a",
        "normalizer via CDF matches quadrature to 1e-8",
        (k - k_quad).abs() < 1e-8,
        format!("K = {k:.12}, quadrature {k_quad:.12}"),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let start = Instant::now();
    let draws: Vec<f64> = (0..n).map(|_| twc.sample(&mut rng).radians()).collect();
    let secs = start.elapsed().as_secs_f64();
    let inside = draws.iter().all(|&x| x > a && x < b);
    rep.check(
        "AC1b",
        "1e5 truncated draws in support in under 1 s",
        inside && secs < 1.0,
        format!("{secs:.4} s, all in support: {inside}"),
    );

    let bins = 40;
    let width = (b - a) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in &draws {
        counts[(((x - a) / width) as usize).min(bins - 1)] += 1;
    }
    let chi2: f64 = (0..bins)
        .map(|i| {
            let lo = a + i as f64 * width;
            let p = simpson(&pdf, lo, lo + width, 1e-15) / k_quad;
            let e = p * n as f64;
            (counts[i] as f64 - e).powi(2) / e
        })
        .sum();
    let crit = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(0.99);
    rep.check(
        "AC1c",
        "chi-square goodness of fit, 40 bins, alpha 0.01",
        chi2 < crit,
        format!("chi2 = {chi2:.2}, critical {crit:.2}"),
    );
}

fn study(name: &str, reps: usize, models: &[ModelVariant], seed: u64) -> StudyTable {
    let mut regime = SimRegime::builtin(name).unwrap();
    regime.replications = reps;
    let start = Instant::now();
    let table = run_study(&regime, models, &McmcConfig::default(), seed).unwrap();
    println!("---- {name}, {reps} replications, {:.1} s", start.elapsed().as_secs_f64());
    print!("{}", table.render());
    table
}

fn ac2(rep: &mut Report) {
    let t = study("table5", 100, &[ModelVariant::ModelI], 501);
    let row = t.model(ModelVariant::ModelI).unwrap().row(Param::Theta01).unwrap();
    rep.check(
        "AC2a",
        "no inflation: theta01 average within 0.05 of pi/2",
        (row.estimate - FRAC_PI_2).abs() < 0.05,
        format!("average {:.4}", row.estimate),
    );
    rep.check(
        "AC2b",
        "no inflation: theta01 CP in [0.85, 1]",
        (0.85..=1.0).contains(&row.coverage),
        format!("CP {:.2}", row.coverage),
    );
}

fn ac3(rep: &mut Report) {
    let t = study("table1", 100, &[ModelVariant::ModelI], 101);
    let m = t.model(ModelVariant::ModelI).unwrap();
    let rho1 = m.row(Param::Rho1).unwrap().estimate;
    let r1 = m.row(Param::R1).unwrap().estimate;
    rep.check(
        "AC3a",
        "15% zeros: rho1 average within 0.02 of 0.847",
        (rho1 - 0.847).abs() < 0.02,
        format!("average {rho1:.4}"),
    );
    rep.check(
        "AC3b",
        "15% zeros: r1 average within 0.05 of 0.903",
        (r1 - 0.903).abs() < 0.05,
        format!("average {r1:.4}"),
    );
}

const STAGE2: [Param; 4] = [Param::Theta02, Param::Theta12, Param::R2, Param::Rho2];

fn ac4(rep: &mut Report) {
    let models = [ModelVariant::ModelI, ModelVariant::ModelII, ModelVariant::ModelIII];
    let t = study("table6", 50, &models, 601);
    let r2 = |m| t.model(m).unwrap().row(Param::R2).unwrap().clone();
    let (b1, b2, b3) = (r2(ModelVariant::ModelI), r2(ModelVariant::ModelII), r2(ModelVariant::ModelIII));
    rep.check(
        "AC4a",
        "|bias r2| Model I below Models II and III",
        b1.bias.abs() < b2.bias.abs() && b1.bias.abs() < b3.bias.abs(),
        format!("I {:.4}, II {:.4}, III {:.4}", b1.bias, b2.bias, b3.bias),
    );
    rep.check(
        "AC4b",
        "Models II/III r2 average below 1.05",
        b2.estimate < 1.05 && b3.estimate < 1.05,
        format!("II {:.4}, III {:.4}", b2.estimate, b3.estimate),
    );
    for m in [ModelVariant::ModelII, ModelVariant::ModelIII] {
        let s = t.model(m).unwrap();
        let cps: Vec<f64> = STAGE2.iter().map(|&p| s.row(p).unwrap().coverage).collect();
        rep.check(
            "AC4c",
            &format!("Model {} stage-2 CP below 0.3", m.label()),
            cps.iter().all(|&c| c < 0.3),
            format!("theta02/theta12/r2/rho2 CP {cps:.2?}"),
        );
    }
}

fn ac5(rep: &mut Report) {
    let models = [ModelVariant::ModelI, ModelVariant::ModelII, ModelVariant::ModelIII];
    let t = study("table8", 50, &models, 801);
    for m in [ModelVariant::ModelII, ModelVariant::ModelIII] {
        let s = t.model(m).unwrap();
        let cps: Vec<f64> = STAGE2.iter().map(|&p| s.row(p).unwrap().coverage).collect();
        rep.check(
            "AC5a",
            &format!("p = 0.2: Model {} stage-2 CP at most 0.05", m.label()),
            cps.iter().all(|&c| c <= 0.05),
            format!("theta02/theta12/r2/rho2 CP {cps:.2?}"),
        );
    }
    let cp = t.model(ModelVariant::ModelI).unwrap().row(Param::R1).unwrap().coverage;
    rep.check("AC5b", "p = 0.2: Model I r1 CP at least 0.5", cp >= 0.5, format!("CP {cp:.2}"));
}

fn ac6(rep: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let uniform = |rng: &mut ChaCha8Rng| rng.random_range(-PI..PI);

    // link modulus, inverse and the η involution
    let mut worst = 0.0f64;
    for _ in 0..20_000 {
        let r = rng.random_range(0.0..3.0);
        if (r - 1.0f64).abs() < 1e-3 {
            continue;
        }
        let link = MobiusLink::from_polar(ang(uniform(&mut rng)), r, ang(uniform(&mut rng))).unwrap();
        let x = ang(uniform(&mut rng)).to_unit();
        let y = link.apply(x).unwrap();
        let back = link.invert(y).unwrap();
        let psi = Complex64::from_polar(rng.random_range(0.0..0.99), uniform(&mut rng));
        let z = x.as_complex();
        worst = worst
            .max((y.as_complex().norm() - 1.0).abs())
            .max((back.as_complex() - z).norm())
            .max((eta(psi, eta(psi, z)) - z).norm());
    }
    rep.check("AC6a", "link modulus, inverse and involution", worst < 1e-9, format!("max error {worst:.2e}"));

    let mut worst = 0.0f64;
    for i in 0..40 {
        let omega = 0.05 + 0.1 * i as f64;
        let link = MobiusLink::new(UnitComplex::ONE, Complex64::new(omega_to_beta1(omega).unwrap(), 0.0)).unwrap();
        for j in 0..50 {
            let t = ang(-PI + 1e-3 + j as f64 * (TAU - 2e-3) / 49.0);
            let d = (omega_link_apply(omega, t).unwrap() - link.apply(t.to_unit()).unwrap().arg()).radians();
            worst = worst.max(d.abs());
        }
    }
    rep.check("AC6b", "omega reparameterization matches the link", worst < 1e-10, format!("max error {worst:.2e}"));

    let mut ok = true;
    for _ in 0..5_000 {
        let omega = rng.random_range(0.01..20.0);
        let t = rng.random_range(0.0..PI - 1e-3);
        let t2 = (t + rng.random_range(1e-4..0.5)).min(PI - 1e-9);
        let f = |x: f64| omega_link_apply(omega, ang(x)).unwrap().radians();
        ok &= (f(-t) + f(t)).abs() < 1e-12 && (t2 <= t || f(t) < f(t2));
    }
    rep.check("AC6c", "special-case link odd and increasing", ok, "5000 random cases".into());

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mu = uniform(&mut rng);
        let rho = rng.random_range(0.0..0.99);
        let d = WrappedCauchy::new(ang(mu), rho).unwrap();
        let f = |t: f64| d.pdf(Angle::new(t).unwrap());
        let total = simpson(&f, mu - PI, mu, 1e-12) + simpson(&f, mu, mu + PI, 1e-12);
        worst = worst.max((total - 1.0).abs());
    }
    rep.check("AC6d", "wrapped Cauchy normalization, 100 pairs", worst < 1e-9, format!("max error {worst:.2e}"));

    let mut ok = true;
    for _ in 0..20_000 {
        let delta = rng.random_range(0.0..0.5);
        let t = ang(uniform(&mut rng) * rng.random::<f64>().powi(4));
        let c = censor(t, delta);
        ok &= if t.radians().abs() < delta { c.is_zero() } else { c == t };
        ok &= is_censored(c, delta) == (delta > 0.0 && t.radians().abs() < delta);
    }
    let regime = SimRegime::builtin("table1").unwrap();
    let data = generate_dataset(&regime, &mut rng).unwrap();
    let spec = ModelSpec::for_variant(ModelVariant::ModelI, 0.035, 0.035);
    let mut latent = LatentState::from_data(&data);
    ok &= latent.check(&data, &spec).is_ok();
    if let Some(i) = data.iter().position(|o| o.theta_x.is_zero()) {
        latent.theta_x_star[i] = ang(0.05);
        ok &= latent.check(&data, &spec).is_err();
    }
    rep.check("AC6e", "censoring consistency", ok, "censor/is_censored/latent checks".into());

    let mut ok = true;
    let zero_free: Vec<Observation> = data
        .iter()
        .map(|o| {
            let fix = |a: Angle| if a.is_zero() { ang(0.5) } else { a };
            Observation { theta_x: fix(o.theta_x), theta_y: fix(o.theta_y), ..*o }
        })
        .collect();
    let latent = LatentState::from_data(&zero_free);
    let s1 = ModelSpec::for_variant(ModelVariant::ModelI, 0.0, 0.0);
    let s2 = ModelSpec::for_variant(ModelVariant::ModelII, 0.0, 0.0);
    for _ in 0..200 {
        let p = StageParams::new(uniform(&mut rng), rng.random_range(0.0..2.0), uniform(&mut rng), rng.random_range(0.01..0.99)).unwrap();
        for stage in [Stage::One, Stage::Two] {
            let a = log_augmented_likelihood(stage, &p, &latent, &zero_free, &s1).unwrap();
            let b = log_augmented_likelihood(stage, &p, &latent, &zero_free, &s2).unwrap();
            ok &= a.to_bits() == b.to_bits();
        }
    }
    let cfg = McmcConfig { total_iterations: 300, burn_in: 100, thin: 2, ..Default::default() };
    let c1 = run_chain(&zero_free, &s1, &cfg).unwrap();
    let c2 = run_chain(&zero_free, &s2, &cfg).unwrap();
    ok &= c1.draws.iter().zip(&c2.draws).all(|(a, b)| a.stage1 == b.stage1 && a.stage2 == b.stage2);
    rep.check("AC6f", "Model I reduces to Model II at delta = 0", ok, "likelihoods bit-identical, chains identical".into());

    let a = run_chain(&data, &spec, &cfg).unwrap();
    let b = run_chain(&data, &spec, &cfg).unwrap();
    rep.check("AC6g", "run_chain seed determinism", a == b, format!("{} draws compared", a.draws.len()));

    let secs = start.elapsed().as_secs_f64();
    rep.check("AC6h", "property suite under 5 minutes", secs < 300.0, format!("{secs:.2} s"));
}

fn ac7(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let series = 500;
    let len = McmcConfig::case_study_budget().stored_draws();
    let mut calm = 0;
    for _ in 0..series {
        let x: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        if geweke(&x, ParamKind::Linear).unwrap().abs() < 1.96 {
            calm += 1;
        }
    }
    let frac = calm as f64 / series as f64;
    rep.check(
        "AC7a",
        "Geweke |z| < 1.96 on at least 94% of white-noise series",
        frac >= 0.94,
        format!("{calm}/{series} = {frac:.3}, length {len}"),
    );

    let mut worst = 0i64;
    for k in 0..200 {
        let n = 100 + 37 * k;
        let kind = if k % 2 == 0 { ParamKind::Linear } else { ParamKind::Circular };
        let centre = rng.random_range(-PI..PI);
        let draws: Vec<f64> = (0..n)
            .map(|_| match kind {
                ParamKind::Linear => rng.random::<f64>().powi(2),
                ParamKind::Circular => Angle::new(centre + rng.random_range(-1.0..1.0)).unwrap().radians(),
            })
            .collect();
        let iv = hpd_interval(&draws, 0.95, kind).unwrap();
        let inside = draws.iter().filter(|&&x| iv.contains(x)).count() as i64;
        worst = worst.max((inside - (0.95 * n as f64).ceil() as i64).abs());
    }
    rep.check(
        "AC7b",
        "HPD mass within one draw of 95%",
        worst <= 1,
        format!("max deviation {worst} draws over 200 samples"),
    );
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut rep = Report { failed: 0, total: 0 };
    ac1(&mut rep);
    ac6(&mut rep);
    ac7(&mut rep);
    ac2(&mut rep);
    ac3(&mut rep);
    ac4(&mut rep);
    ac5(&mut rep);
    println!(
        "acceptance: {} passed, {} failed ({:.0} s)",
        rep.total - rep.failed,
        rep.failed,
        start.elapsed().as_secs_f64()
    );
    if rep.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
