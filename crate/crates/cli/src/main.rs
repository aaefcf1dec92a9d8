use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use circreg::inference::{posterior_predictive, prob_event, summarize, summarize_draws, Horizon, SummaryReport};
use circreg::io::{preprocess_table, read_observations_path, write_observations, AngleUnit};
use circreg::mcmc::{read_draws_tsv, run_chain, Chain, Draw, McmcConfig};
use circreg::model::{LatentXMode, ModelSpec, ModelVariant, Observation, Param};
use circreg::plot::{rose_svg, spoke_segments, spoke_svg};
use circreg::sim::{generate_dataset, run_study, SimRegime, StudyConfig};
use circreg::{Angle, Error, ErrorKind};

#[derive(Parser)]
#[command(name = "circreg", version, about = "Zero-inflated circular-circular regression")]
struct Cli {
    /// Read and write angles in degrees instead of radians.
    #[arg(long, global = true)]
    degrees: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply the (4·axis) mod 360 transform to axis columns given in degrees.
    Preprocess(PreprocessArgs),
    /// Generate a synthetic dataset or run a simulation study.
    Simulate(SimulateArgs),
    /// Fit one model and write summary, chain, diagnostics and a spoke plot.
    Fit(FitArgs),
    /// Fit several models to the same data and tabulate the estimates.
    Compare(CompareArgs),
    /// Posterior predictive draws from a stored chain.
    Predict(PredictArgs),
    /// Summarize a stored chain.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct PreprocessArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output table; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Column holding an axis in [0, 180) degrees; repeatable.
    #[arg(long = "axis-column", required = true)]
    axis_columns: Vec<String>,
    /// Transformed values within this many degrees of 0 are written as exact zeros.
    #[arg(long, default_value_t = 0.0)]
    censor_window: f64,
}

#[derive(Args)]
struct McmcArgs {
    #[arg(long, default_value_t = 20_000)]
    iters: usize,
    #[arg(long, default_value_t = 8_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 10)]
    thin: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl McmcArgs {
    fn config(&self, store_latents: bool) -> McmcConfig {
        McmcConfig {
            total_iterations: self.iters,
            burn_in: self.burn_in,
            thin: self.thin,
            seed: self.seed,
            store_latents,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in regime name (table1..table8) or a study TOML file.
    #[arg(long)]
    regime: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Write a single dataset instead of running the study.
    #[arg(long)]
    data_only: bool,
    /// Override the number of replications.
    #[arg(long)]
    replications: Option<usize>,
    /// Comma-separated models; defaults to the TOML list or I.
    #[arg(long, value_delimiter = ',')]
    models: Vec<ModelVariant>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
}

#[derive(Args)]
struct SpecArgs {
    /// Censoring threshold for the covariate, in file units.
    #[arg(long, default_value_t = 0.0)]
    delta_x: f64,
    /// Censoring threshold for the response, in file units.
    #[arg(long, default_value_t = 0.0)]
    delta_y: f64,
    #[arg(long)]
    estimate_deltas: bool,
    #[arg(long)]
    unit_b1: bool,
    #[arg(long)]
    group_effect: bool,
    /// Metropolis step for censored covariate latents that also weighs the response.
    #[arg(long)]
    exact_latent: bool,
}

impl SpecArgs {
    fn spec(&self, model: ModelVariant, unit: AngleUnit) -> ModelSpec {
        let to_rad = |v: f64| match unit {
            AngleUnit::Radians => v,
            AngleUnit::Degrees => v.to_radians(),
        };
        let mut spec = ModelSpec::for_variant(model, to_rad(self.delta_x), to_rad(self.delta_y));
        spec.estimate_deltas = self.estimate_deltas;
        spec.unit_b1 = self.unit_b1;
        spec.group_effect = self.group_effect;
        if self.exact_latent {
            spec.latent_x_mode = LatentXMode::Exact;
        }
        spec
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "I")]
    model: ModelVariant,
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    mcmc: McmcArgs,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "I,II,III")]
    models: Vec<ModelVariant>,
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    mcmc: McmcArgs,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Chain file written by `fit`.
    #[arg(long)]
    chain: PathBuf,
    /// Initial condition, in file units.
    #[arg(long, allow_hyphen_values = true)]
    initial: f64,
    #[arg(long, default_value = "composed")]
    horizon: Horizon,
    /// Predict for the W = 1 group.
    #[arg(long)]
    group: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Predictive draws; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Rose diagram of the predictive draws.
    #[arg(long)]
    rose: Option<PathBuf>,
    #[arg(long, default_value_t = 36)]
    bins: usize,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    chain: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Also report Pr[r1 > r2] over the draws.
    #[arg(long)]
    prob_r1_gt_r2: bool,
    /// Summary table; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let unit = if cli.degrees { AngleUnit::Degrees } else { AngleUnit::Radians };
    match cli.command {
        Command::Preprocess(a) => preprocess(a, unit),
        Command::Simulate(a) => simulate(a, unit),
        Command::Fit(a) => fit(a, unit),
        Command::Compare(a) => compare(a, unit),
        Command::Predict(a) => predict(a, unit),
        Command::Summarize(a) => summarize_cmd(a),
    }
}

fn require_file(path: &Path) -> Result<(), Error> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Io(io::Error::new(
            io::ErrorKind::NotFound,
            format!("input file {} not found", path.display()),
        )))
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn preprocess(a: PreprocessArgs, unit: AngleUnit) -> Result<(), Error> {
    require_file(&a.input)?;
    let mut out = output(a.output.as_deref())?;
    let rows = preprocess_table(File::open(&a.input)?, &mut out, &a.axis_columns, unit, a.censor_window)?;
    out.flush()?;
    eprintln!("preprocessed {rows} rows");
    Ok(())
}

fn simulate(a: SimulateArgs, unit: AngleUnit) -> Result<(), Error> {
    let mut cfg = if Path::new(&a.regime).is_file() {
        StudyConfig::load(Path::new(&a.regime))?
    } else {
        StudyConfig {
            regime: SimRegime::builtin(&a.regime)?,
            mcmc: Default::default(),
            study: Default::default(),
        }
    };
    cfg.study.seed = a.seed;
    if let Some(n) = a.replications {
        cfg.regime.replications = n;
    }
    if !a.models.is_empty() {
        cfg.study.models = a.models.clone();
    }
    cfg.mcmc.iterations = a.iters.unwrap_or(cfg.mcmc.iterations);
    cfg.mcmc.burn_in = a.burn_in.unwrap_or(cfg.mcmc.burn_in);
    cfg.mcmc.thin = a.thin.unwrap_or(cfg.mcmc.thin);
    cfg.regime.validate()?;
    fs::create_dir_all(&a.out_dir)?;

    if a.data_only {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let data = generate_dataset(&cfg.regime, &mut rng)?;
        let zx = data.iter().filter(|o| o.theta_x.is_zero()).count();
        let zy = data.iter().filter(|o| o.theta_y.is_zero()).count();
        write_observations(&data, create(&a.out_dir, "data.tsv")?, unit)?;
        eprintln!("wrote {} records ({zx} zero covariates, {zy} zero responses)", data.len());
        return Ok(());
    }

    let table = run_study(&cfg.regime, &cfg.study.models, &cfg.mcmc_config(), a.seed)?;
    table.write_tsv(create(&a.out_dir, "study.tsv")?)?;
    table.write_runtimes_tsv(create(&a.out_dir, "runtimes.tsv")?)?;
    fs::write(a.out_dir.join("study.toml"), cfg.to_toml_string()?)?;
    write!(io::stdout(), "{}", table.render())?;
    Ok(())
}

fn load_data(path: &Path, unit: AngleUnit) -> Result<Vec<Observation>, Error> {
    require_file(path)?;
    read_observations_path(path, unit)
}

fn write_fit(chain: &Chain, data: &[Observation], dir: &Path) -> Result<SummaryReport, Error> {
    fs::create_dir_all(dir)?;
    let report = summarize(chain)?;
    report.write_tsv(create(dir, "summary.tsv")?)?;
    chain.write_tsv(create(dir, "chain.tsv")?)?;

    let mut g = create(dir, "geweke.tsv")?;
    writeln!(g, "param\tz")?;
    for e in &report.entries {
        match e.geweke_z {
            Some(z) => writeln!(g, "{}\t{z}", e.param)?,
            None => writeln!(g, "{}\tNA", e.param)?,
        }
    }
    g.flush()?;

    let mut acc = create(dir, "acceptance.tsv")?;
    writeln!(acc, "param\taccepted\tproposed\trate\tfinal_width")?;
    for s in &chain.acceptance {
        writeln!(acc, "{}\t{}\t{}\t{}\t{}", s.param, s.accepted, s.proposed, s.rate(), s.final_width)?;
    }
    acc.flush()?;

    let posterior_mean = |p: Param| report.get(p).map(|e| e.estimate);
    let (s1, _) = chain.draws.last().map(|d| (d.stage1, d.stage2)).ok_or(Error::EmptyData)?;
    let mut link_params = s1;
    if let (Some(t0), Some(r), Some(t1)) = (
        posterior_mean(Param::Theta01),
        posterior_mean(Param::R1),
        posterior_mean(Param::Theta11),
    ) {
        link_params = circreg::model::StageParams::new(t0, r, t1, s1.rho)?;
    }
    let covariates: Vec<Angle> = data.iter().map(|o| o.theta_x).filter(|x| !x.is_zero()).collect();
    if !covariates.is_empty() {
        let segments = spoke_segments(&link_params.link(), &covariates)?;
        fs::write(dir.join("spoke.svg"), spoke_svg(&segments, "posterior mean stage-1 link")?)?;
    }
    Ok(report)
}

fn fit(a: FitArgs, unit: AngleUnit) -> Result<(), Error> {
    let data = load_data(&a.input, unit)?;
    let spec = a.spec.spec(a.model, unit);
    let chain = run_chain(&data, &spec, &a.mcmc.config(false))?;
    let report = write_fit(&chain, &data, &a.out_dir)?;
    write!(io::stdout(), "{report}")?;
    Ok(())
}

fn compare(a: CompareArgs, unit: AngleUnit) -> Result<(), Error> {
    let data = load_data(&a.input, unit)?;
    if a.models.is_empty() {
        return Err(Error::InvalidArgument("no models given".into()));
    }
    let mut reports = Vec::new();
    for &m in &a.models {
        let spec = a.spec.spec(m, unit);
        let chain = run_chain(&data, &spec, &a.mcmc.config(false))?;
        let dir = a.out_dir.join(format!("model_{}", m.label()));
        reports.push((m, write_fit(&chain, &data, &dir)?));
    }
    let mut out = create(&a.out_dir, "compare.tsv")?;
    write!(out, "param")?;
    for (m, _) in &reports {
        write!(out, "\t{m}_estimate\t{m}_spread\t{m}_hpd_low\t{m}_hpd_high")?;
    }
    writeln!(out)?;
    for p in Param::ALL {
        if reports.iter().all(|(_, r)| r.get(p).is_none()) {
            continue;
        }
        write!(out, "{p}")?;
        for (_, r) in &reports {
            match r.get(p) {
                Some(e) => write!(out, "\t{}\t{}\t{}\t{}", e.estimate, e.spread, e.hpd.low, e.hpd.high)?,
                None => write!(out, "\tNA\tNA\tNA\tNA")?,
            }
        }
        writeln!(out)?;
    }
    out.flush()?;
    for (m, r) in &reports {
        writeln!(io::stdout(), "model {m}")?;
        write!(io::stdout(), "{r}")?;
    }
    Ok(())
}

fn load_chain(path: &Path) -> Result<Vec<Draw>, Error> {
    require_file(path)?;
    let draws = read_draws_tsv(BufReader::new(File::open(path)?))?;
    if draws.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(draws)
}

fn predict(a: PredictArgs, unit: AngleUnit) -> Result<(), Error> {
    let draws = load_chain(&a.chain)?;
    let initial = unit.to_angle(a.initial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let pred = posterior_predictive(&draws, initial, a.horizon, a.group, &mut rng)?;
    let mut out = output(a.output.as_deref())?;
    writeln!(out, "theta_pred\ttheta_latent")?;
    for p in &pred {
        writeln!(out, "{}\t{}", unit.from_angle(p.theta_pred), unit.from_angle(p.theta_latent))?;
    }
    out.flush()?;
    if let Some(path) = &a.rose {
        let angles: Vec<Angle> = pred.iter().map(|p| p.theta_pred).collect();
        fs::write(path, rose_svg(&angles, a.bins, "posterior predictive")?)?;
    }
    let zeros = pred.iter().filter(|p| p.theta_pred.is_zero()).count();
    eprintln!("Pr[prediction = 0] = {}", zeros as f64 / pred.len() as f64);
    Ok(())
}

/// Parameters whose stored series is finite and not constant.
fn varying_params(draws: &[Draw]) -> Vec<Param> {
    Param::ALL
        .into_iter()
        .filter(|&p| {
            let first = draws[0].get(p);
            draws.iter().all(|d| d.get(p).is_some_and(f64::is_finite)) && draws.iter().any(|d| d.get(p) != first)
        })
        .collect()
}

fn summarize_cmd(a: SummarizeArgs) -> Result<(), Error> {
    let draws = load_chain(&a.chain)?;
    let report = summarize_draws(&draws, &varying_params(&draws), a.level)?;
    let mut out = output(a.output.as_deref())?;
    report.write_tsv(&mut out)?;
    out.flush()?;
    if a.prob_r1_gt_r2 {
        let p = prob_event(&draws, |s1, s2| s1.r > s2.r)?;
        writeln!(io::stdout(), "Pr[r1 > r2] = {p}")?;
    }
    Ok(())
}
