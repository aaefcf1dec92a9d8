//! Simulation studies: forward simulation from the two-stage model,
//! replication loops and bias / coverage aggregation.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::angle::{circular_summary_iter, wrap_f64, Angle};
use crate::distributions::{von_mises_sample, wc_sample_around};
use crate::error::{Error, Result};
use crate::inference::{estimate_and_spread, hpd_interval, Interval, ParamKind};
use crate::mcmc::{run_chain, McmcConfig};
use crate::model::{censor, ModelSpec, ModelVariant, Observation, Param, StageParams};
use crate::par;

/// Stage parameters as written in regime files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTruth {
    pub theta0: f64,
    pub r: f64,
    pub theta1: f64,
    pub rho: f64,
}

impl StageTruth {
    pub fn to_params(self) -> Result<StageParams> {
        StageParams::new(self.theta0, self.r, self.theta1, self.rho)
    }
}

/// Data-generating settings of one simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRegime {
    pub name: String,
    pub stage1: StageTruth,
    pub stage2: StageTruth,
    #[serde(default = "default_n")]
    pub n: usize,
    pub delta_x: f64,
    pub delta_y: f64,
    #[serde(default)]
    pub vm_mu: f64,
    #[serde(default = "default_kappa")]
    pub vm_kappa: f64,
    /// Probability that each observed angle is independently replaced by 0.
    #[serde(default)]
    pub contamination_p: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Expected (response, covariate) zero fractions, for reference only.
    #[serde(default)]
    pub target_zero_fractions: Option<(f64, f64)>,
}

fn default_n() -> usize {
    100
}
fn default_kappa() -> f64 {
    2.0
}
fn default_replications() -> usize {
    100
}

fn truth(theta0: f64, r: f64, theta1: f64, rho: f64) -> StageTruth {
    StageTruth { theta0, r, theta1, rho }
}

impl SimRegime {
    fn base(name: &str, stage1: StageTruth, stage2: StageTruth, delta: f64) -> Self {
        SimRegime {
            name: name.to_string(),
            stage1,
            stage2,
            n: default_n(),
            delta_x: delta,
            delta_y: delta,
            vm_mu: 0.0,
            vm_kappa: default_kappa(),
            contamination_p: 0.0,
            replications: default_replications(),
            target_zero_fractions: None,
        }
    }

    /// Built-in regimes `table1` ... `table8`.
    pub fn builtin(name: &str) -> Result<Self> {
        let d = 0.035;
        let mut r = match name {
            "table1" => Self::base(name, truth(0.0, 0.9, 0.0, 0.85), truth(0.0, 1.2, 0.0, 0.85), d),
            "table2" => Self::base(name, truth(0.0, 1.2, 0.0, 0.85), truth(0.0, 1.2, 0.0, 0.85), d),
            "table3" => Self::base(name, truth(0.0, 0.9, 0.0, 0.85), truth(FRAC_PI_2, 1.5, 0.0, 0.85), d),
            "table4" => Self::base(name, truth(FRAC_PI_2, 0.9, 0.0, 0.85), truth(0.0, 1.5, 0.0, 0.85), d),
            "table5" => Self::base(
                name,
                truth(FRAC_PI_2, 0.3, 0.0, 0.85),
                truth(FRAC_PI_2, 0.3, 0.0, 0.85),
                d,
            ),
            "table6" | "table7" | "table8" => {
                Self::base(name, truth(0.070, 0.9, 0.0, 0.93), truth(0.070, 1.2, 0.0, 0.95), 0.070)
            }
            _ => return Err(Error::invalid(format!("unknown built-in regime '{name}' (table1..table8)"))),
        };
        r.contamination_p = match name {
            "table7" => 0.1,
            "table8" => 0.2,
            _ => 0.0,
        };
        if name == "table1" {
            r.target_zero_fractions = Some((0.15, 0.15));
        }
        Ok(r)
    }

    pub fn builtin_names() -> [&'static str; 8] {
        ["table1", "table2", "table3", "table4", "table5", "table6", "table7", "table8"]
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("regime needs n >= 2"));
        }
        if !(0.0..=1.0).contains(&self.contamination_p) {
            return Err(Error::invalid("contamination_p must lie in [0, 1]"));
        }
        if !(self.vm_kappa >= 0.0 && self.vm_kappa.is_finite()) {
            return Err(Error::invalid("vm_kappa must be finite and >= 0"));
        }
        for d in [self.delta_x, self.delta_y] {
            if !(0.0..std::f64::consts::PI).contains(&d) {
                return Err(Error::invalid("censoring thresholds must lie in [0, π)"));
            }
        }
        self.stage1.to_params()?;
        self.stage2.to_params()?;
        Ok(())
    }

    pub fn true_params(&self) -> Result<(StageParams, StageParams)> {
        Ok((self.stage1.to_params()?, self.stage2.to_params()?))
    }

    pub fn truth_of(&self, p: Param) -> Option<f64> {
        let (s1, s2) = self.true_params().ok()?;
        match p {
            Param::DeltaX => Some(self.delta_x),
            Param::DeltaY => Some(self.delta_y),
            _ => match p.stage() {
                Some(crate::model::Stage::One) => s1.get(p),
                _ => s2.get(p),
            },
        }
    }
}

/// A regime file: `[regime]` (with `[regime.stage1]`, `[regime.stage2]`)
/// plus optional `[mcmc]` and `[study]` sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub regime: SimRegime,
    #[serde(default)]
    pub mcmc: McmcSection,
    #[serde(default)]
    pub study: StudySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcSection {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for McmcSection {
    fn default() -> Self {
        let d = McmcConfig::default();
        McmcSection {
            iterations: d.total_iterations,
            burn_in: d.burn_in,
            thin: d.thin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySection {
    pub models: Vec<ModelVariant>,
    pub seed: u64,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            models: vec![ModelVariant::ModelI],
            seed: 1,
        }
    }
}

impl StudyConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.regime.validate()?;
        cfg.mcmc_config().validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn mcmc_config(&self) -> McmcConfig {
        McmcConfig {
            total_iterations: self.mcmc.iterations,
            burn_in: self.mcmc.burn_in,
            thin: self.mcmc.thin,
            seed: self.study.seed,
            store_latents: false,
            ..Default::default()
        }
    }
}

/// Forward simulation of one dataset, returning the observed records and
/// the latent `(θ_X*, θ_Y*)` before censoring and contamination.
pub fn generate_dataset_with_latent<R: Rng + ?Sized>(
    regime: &SimRegime,
    rng: &mut R,
) -> Result<(Vec<Observation>, Vec<(Angle, Angle)>)> {
    regime.validate()?;
    let (p1, p2) = regime.true_params()?;
    let (l1, l2) = (p1.link(), p2.link());
    let mu_v = Angle::new(regime.vm_mu)?;
    let mut data = Vec::with_capacity(regime.n);
    let mut latent = Vec::with_capacity(regime.n);
    for _ in 0..regime.n {
        let v = von_mises_sample(mu_v, regime.vm_kappa, rng)?;
        let x_star = wc_sample_around(l2.apply(v.to_unit())?, p2.rho, rng);
        let y_star = wc_sample_around(l1.apply(x_star.to_unit())?, p1.rho, rng);
        let mut x = censor(x_star, regime.delta_x);
        let mut y = censor(y_star, regime.delta_y);
        if regime.contamination_p > 0.0 {
            if rng.random::<f64>() < regime.contamination_p {
                x = Angle::ZERO;
            }
            if rng.random::<f64>() < regime.contamination_p {
                y = Angle::ZERO;
            }
        }
        data.push(Observation {
            theta_v: v,
            theta_x: x,
            theta_y: y,
            group: None,
        });
        latent.push((x_star, y_star));
    }
    Ok((data, latent))
}

pub fn generate_dataset<R: Rng + ?Sized>(regime: &SimRegime, rng: &mut R) -> Result<Vec<Observation>> {
    Ok(generate_dataset_with_latent(regime, rng)?.0)
}

/// Parameters reported by studies, in table order.
pub const REPORTED: [Param; 8] = [
    Param::Theta01,
    Param::Theta02,
    Param::Theta11,
    Param::Theta12,
    Param::R1,
    Param::R2,
    Param::Rho1,
    Param::Rho2,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamEstimate {
    pub param: Param,
    pub estimate: f64,
    pub spread: f64,
    pub hpd: Interval,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub model: ModelVariant,
    pub estimates: Vec<ParamEstimate>,
    pub runtime_secs: f64,
}

/// Fits one model to one dataset and scores it against the regime truth.
pub fn fit_replication(
    data: &[Observation],
    regime: &SimRegime,
    model: ModelVariant,
    mcmc: &McmcConfig,
) -> Result<ReplicationResult> {
    let start = Instant::now();
    let spec = ModelSpec::for_variant(model, regime.delta_x, regime.delta_y);
    let chain = run_chain(data, &spec, mcmc)?;
    let estimates = REPORTED
        .iter()
        .map(|&p| {
            let series = chain.series(p);
            let kind = ParamKind::of(p);
            let (estimate, spread) = estimate_and_spread(&series, kind)?;
            let hpd = hpd_interval(&series, 0.95, kind)?;
            let truth = regime.truth_of(p).expect("reported parameters have a truth");
            Ok(ParamEstimate {
                param: p,
                estimate,
                spread,
                hpd,
                covered: hpd.contains(truth),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicationResult {
        model,
        estimates,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Simulates replication `index` and fits every model to it. The dataset
/// and each model's chain draw from separate seeded streams.
pub fn run_replication(
    regime: &SimRegime,
    models: &[ModelVariant],
    mcmc: &McmcConfig,
    master_seed: u64,
    index: usize,
) -> Vec<Result<ReplicationResult>> {
    let rep_seed = par::stream_seed(master_seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
    let data = match generate_dataset(regime, &mut rng) {
        Ok(d) => d,
        Err(e) => {
            let msg = e.to_string();
            return models.iter().map(|_| Err(Error::Numerical(msg.clone()))).collect();
        }
    };
    models
        .iter()
        .enumerate()
        .map(|(k, &model)| {
            let cfg = McmcConfig {
                seed: par::stream_seed(rep_seed, k as u64 + 1),
                store_latents: false,
                ..mcmc.clone()
            };
            fit_replication(&data, regime, model, &cfg)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub param: Param,
    pub truth: f64,
    /// Circular mean (circular parameters) or mean of the per-replication
    /// estimates.
    pub estimate: f64,
    /// Average per-replication spread.
    pub spread: f64,
    /// `wrap(estimate - truth)` for circular parameters, relative bias
    /// `(estimate - truth) / truth` for linear ones.
    pub bias: f64,
    pub relative_bias: bool,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub model: ModelVariant,
    pub rows: Vec<StudyRow>,
    pub replications: usize,
    pub failures: usize,
    pub failure_messages: Vec<String>,
    pub mean_runtime_secs: f64,
}

impl ModelSummary {
    pub fn row(&self, p: Param) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.param == p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub regime: String,
    pub models: Vec<ModelSummary>,
}

impl StudyTable {
    pub fn model(&self, m: ModelVariant) -> Option<&ModelSummary> {
        self.models.iter().find(|s| s.model == m)
    }

    /// Columns: model, parameter, truth, estimate, spread, bias,
    /// bias_kind, cp, replications, failures.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "model\tparameter\ttruth\testimate\tspread\tbias\tbias_kind\tcp\treplications\tfailures"
        )?;
        for m in &self.models {
            for r in &m.rows {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    m.model.label(),
                    r.param,
                    r.truth,
                    r.estimate,
                    r.spread,
                    r.bias,
                    if r.relative_bias { "relative" } else { "absolute" },
                    r.coverage,
                    m.replications,
                    m.failures
                )?;
            }
        }
        Ok(())
    }

    /// Average wall-clock seconds per fitted dataset, by model.
    pub fn write_runtimes_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "model\tmean_seconds_per_dataset")?;
        for m in &self.models {
            writeln!(out, "{}\t{}", m.model.label(), m.mean_runtime_secs)?;
        }
        Ok(())
    }

    /// Human-readable table in `estimate(spread)  bias  CP` layout.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "regime {}", self.regime);
        for m in &self.models {
            let _ = writeln!(
                s,
                "{} ({} replications, {} failed, {:.2} s/dataset)",
                m.model,
                m.replications,
                m.failures,
                m.mean_runtime_secs
            );
            for r in &m.rows {
                let _ = writeln!(
                    s,
                    "  {:<8} truth {:>7.3}  {:>7.3}({:.3})  {} {:>7.3}  CP {:.2}",
                    r.param.name(),
                    r.truth,
                    r.estimate,
                    r.spread,
                    if r.relative_bias { "rel.bias" } else { "bias    " },
                    r.bias,
                    r.coverage
                );
            }
        }
        s
    }
}

/// Aggregates per-replication results of one model.
pub fn aggregate(regime: &SimRegime, model: ModelVariant, results: &[Result<ReplicationResult>]) -> Result<ModelSummary> {
    let ok: Vec<&ReplicationResult> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failure_messages: Vec<String> = results
        .iter()
        .filter_map(|r| r.as_ref().err().map(|e| e.to_string()))
        .collect();
    if ok.is_empty() {
        return Err(Error::Numerical(format!(
            "all {} replications failed for model {model}",
            results.len()
        )));
    }
    let rows = REPORTED
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let truth = regime.truth_of(p).expect("reported parameters have a truth");
            let est: Vec<f64> = ok.iter().map(|r| r.estimates[j].estimate).collect();
            let n = ok.len() as f64;
            let spread = ok.iter().map(|r| r.estimates[j].spread).sum::<f64>() / n;
            let coverage = ok.iter().filter(|r| r.estimates[j].covered).count() as f64 / n;
            let (estimate, bias, relative_bias) = if p.is_circular() {
                let m = circular_summary_iter(est.iter().copied())?.mean()?.radians();
                (m, wrap_f64(m - truth), false)
            } else {
                let m = est.iter().sum::<f64>() / n;
                if truth != 0.0 {
                    (m, (m - truth) / truth, true)
                } else {
                    (m, m - truth, false)
                }
            };
            Ok(StudyRow {
                param: p,
                truth,
                estimate,
                spread,
                bias,
                relative_bias,
                coverage,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelSummary {
        model,
        rows,
        replications: ok.len(),
        failures: failure_messages.len(),
        failure_messages,
        mean_runtime_secs: ok.iter().map(|r| r.runtime_secs).sum::<f64>() / ok.len() as f64,
    })
}

fn collect_study(
    regime: &SimRegime,
    models: &[ModelVariant],
    per_rep: Vec<Vec<Result<ReplicationResult>>>,
) -> Result<StudyTable> {
    let mut by_model: Vec<Vec<Result<ReplicationResult>>> = models.iter().map(|_| Vec::new()).collect();
    for rep in per_rep {
        for (k, r) in rep.into_iter().enumerate() {
            by_model[k].push(r);
        }
    }
    let summaries = models
        .iter()
        .zip(&by_model)
        .map(|(&m, results)| aggregate(regime, m, results))
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyTable {
        regime: regime.name.clone(),
        models: summaries,
    })
}

/// Runs `regime.replications` replications (in parallel when enabled) and
/// aggregates them per model. Deterministic given `master_seed`.
pub fn run_study(
    regime: &SimRegime,
    models: &[ModelVariant],
    mcmc: &McmcConfig,
    master_seed: u64,
) -> Result<StudyTable> {
    regime.validate()?;
    mcmc.validate()?;
    if models.is_empty() {
        return Err(Error::invalid("no models to fit"));
    }
    let per_rep = par::map_indexed(regime.replications, |k| {
        run_replication(regime, models, mcmc, master_seed, k)
    });
    collect_study(regime, models, per_rep)
}

/// Sequential counterpart of [`run_study`]; produces an identical table.
pub fn run_study_sequential(
    regime: &SimRegime,
    models: &[ModelVariant],
    mcmc: &McmcConfig,
    master_seed: u64,
) -> Result<StudyTable> {
    regime.validate()?;
    mcmc.validate()?;
    if models.is_empty() {
        return Err(Error::invalid("no models to fit"));
    }
    let per_rep = par::map_indexed_sequential(regime.replications, |k| {
        run_replication(regime, models, mcmc, master_seed, k)
    });
    collect_study(regime, models, per_rep)
}
