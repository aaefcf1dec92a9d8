use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use circreg::inference::summarize;
use circreg::io::{write_observations, AngleUnit};
use circreg::mcmc::{run_chain, McmcConfig};
use circreg::model::{ModelSpec, ModelVariant};
use circreg::sim::{generate_dataset, SimRegime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn circreg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circreg"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

const SHORT: [&str; 6] = ["--iters", "1500", "--burn-in", "500", "--thin", "1"];

fn simulate_data(dir: &Path, seed: &str) {
    ok(&circreg(&["simulate", "--regime", "table1", "--seed", seed, "--data-only"], dir));
}

#[test]
fn fit_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    simulate_data(dir, "5");
    for out in ["a", "b"] {
        let mut args = vec!["fit", "--input", "data.tsv", "--delta-x", "0.035", "--delta-y", "0.035", "--out-dir", out];
        args.extend(SHORT);
        ok(&circreg(&args, dir));
    }
    for f in ["summary.tsv", "chain.tsv", "geweke.tsv", "acceptance.tsv", "spoke.svg"] {
        assert_eq!(fs::read(dir.join("a").join(f)).unwrap(), fs::read(dir.join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn file_round_trip_matches_in_memory_fit() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    simulate_data(dir, "9");
    let mut args = vec!["fit", "--input", "data.tsv", "--model", "II", "--seed", "4", "--out-dir", "fit"];
    args.extend(SHORT);
    ok(&circreg(&args, dir));

    let regime = SimRegime::builtin("table1").unwrap();
    let data = generate_dataset(&regime, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let cfg = McmcConfig {
        total_iterations: 1500,
        burn_in: 500,
        thin: 1,
        seed: 4,
        store_latents: false,
        ..Default::default()
    };
    let chain = run_chain(&data, &ModelSpec::for_variant(ModelVariant::ModelII, 0.0, 0.0), &cfg).unwrap();
    let mut expected = Vec::new();
    summarize(&chain).unwrap().write_tsv(&mut expected).unwrap();
    assert_eq!(fs::read(dir.join("fit/summary.tsv")).unwrap(), expected);
}

#[test]
fn model_two_runs_on_zero_free_data() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let regime = SimRegime::builtin("table5").unwrap();
    let data: Vec<_> = generate_dataset(&regime, &mut ChaCha8Rng::seed_from_u64(2))
        .unwrap()
        .into_iter()
        .filter(|o| !o.theta_x.is_zero() && !o.theta_y.is_zero())
        .collect();
    write_observations(&data, fs::File::create(dir.join("clean.tsv")).unwrap(), AngleUnit::Radians).unwrap();
    let out = circreg(&["fit", "--input", "clean.tsv", "--model", "II", "--out-dir", "fit"], dir);
    ok(&out);
    let summary = fs::read_to_string(dir.join("fit/summary.tsv")).unwrap();
    let r1: f64 = summary
        .lines()
        .find(|l| l.starts_with("r1\t"))
        .and_then(|l| l.split('\t').nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert!(r1.is_finite() && r1 > 0.0);
}

#[test]
fn compare_predict_and_summarize() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    simulate_data(dir, "3");
    let mut args = vec!["compare", "--input", "data.tsv", "--models", "I,II", "--delta-x", "0.035", "--delta-y", "0.035", "--out-dir", "cmp"];
    args.extend(SHORT);
    ok(&circreg(&args, dir));
    let table = fs::read_to_string(dir.join("cmp/compare.tsv")).unwrap();
    assert!(table.starts_with("param\tI_estimate"));
    assert!(table.contains("II_hpd_high"));
    assert!(dir.join("cmp/model_II/chain.tsv").is_file());

    let chain = "cmp/model_I/chain.tsv";
    ok(&circreg(
        &["predict", "--chain", chain, "--initial", "-0.4", "--horizon", "stage1", "--output", "pred.tsv", "--rose", "rose.svg"],
        dir,
    ));
    let pred = fs::read_to_string(dir.join("pred.tsv")).unwrap();
    assert_eq!(pred.lines().count(), 1000 + 1);
    assert!(fs::read_to_string(dir.join("rose.svg")).unwrap().starts_with("<svg"));

    let out = circreg(&["summarize", "--chain", chain, "--prob-r1-gt-r2"], dir);
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("parameter\testimate"));
    let p: f64 = text.lines().last().unwrap().trim_start_matches("Pr[r1 > r2] = ").parse().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn preprocess_in_degrees() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("axes.csv"), "id,axis\n1,90.25\n2,30\n3,135\n").unwrap();
    let out = circreg(
        &["--degrees", "preprocess", "--input", "axes.csv", "--axis-column", "axis", "--censor-window", "2"],
        dir,
    );
    ok(&out);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "id,axis\n1,0\n2,120\n3,-180\n");
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    assert_eq!(circreg(&["fit", "--input", "missing.tsv"], dir).status.code(), Some(2));
    assert_eq!(circreg(&["fit", "--bogus"], dir).status.code(), Some(1));
    assert_eq!(circreg(&["simulate", "--regime", "table99"], dir).status.code(), Some(1));

    fs::write(dir.join("bad.tsv"), "theta_v\ttheta_x\ttheta_y\n0.1\t0.2\t0.3\n0.1\tx\t0.3\n").unwrap();
    let out = circreg(&["fit", "--input", "bad.tsv"], dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    simulate_data(dir, "1");
    let out = circreg(&["fit", "--input", "data.tsv", "--iters", "10", "--burn-in", "20"], dir);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(circreg(&["--help"], dir).status.code(), Some(0));
}
