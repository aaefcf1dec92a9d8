//! Metropolis–Hastings within data augmentation.
//!
//! Each sweep first redraws the censored latents (covariate, then response)
//! from their truncated wrapped Cauchy full conditionals, then updates the
//! free scalar parameters one at a time in the fixed order of
//! [`Param::ALL`]:
//!
//! * angles (`θ0`, `θ1`, `γ`): uniform random walk, wrapped;
//! * `ρ`: uniform random walk reflected into `(0, 1 - 1e-6)`;
//! * `r`: exponential increment of random sign with a tunable rate
//!   ([`RProposal::ExponentialStep`], default), or an exponential draw with
//!   mean equal to the current value plus the Hastings correction
//!   ([`RProposal::ExponentialMean`]); the special case uses a uniform walk
//!   reflected in `[-1, 1]`;
//! * `δ` (when estimated): uniform random walk.
//!
//! Per-record mean directions and cosines are cached per stage so a `ρ`
//! update costs one pass of logarithms and a link update one pass of complex
//! divisions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::angle::{circular_summary_iter, Angle};
use crate::distributions::{TruncatedWrappedCauchy, WrappedCauchy};
use crate::error::{Error, Result};
use crate::mobius::MobiusLink;
use crate::model::{
    is_censored, ln_wc, log_prior, LatentState, LatentXMode, ModelSpec, Observation, Param, Stage, StageParams,
    RHO_MAX,
};
use crate::par;

pub const DEFAULT_ANGLE_WIDTH: f64 = 0.25;
pub const DEFAULT_RHO_WIDTH: f64 = 0.05;
pub const DEFAULT_SIGNED_R_WIDTH: f64 = 0.1;
/// Mean absolute step (inverse rate) of the exponential-step `r` proposal.
pub const DEFAULT_R_STEP: f64 = 0.05;
pub const DEFAULT_DELTA_WIDTH: f64 = 0.005;

const ADAPT_BATCH: u64 = 100;
const ADAPT_LOW: f64 = 0.2;
const ADAPT_HIGH: f64 = 0.5;

/// Accept or reject a Metropolis–Hastings move.
///
/// `log_proposal_forward` is `log q(proposed | current)` and
/// `log_proposal_backward` is `log q(current | proposed)`. A proposed state
/// with zero density is always rejected; a NaN anywhere is an error.
pub fn mh_accept<R: Rng + ?Sized>(
    log_target_current: f64,
    log_target_proposed: f64,
    log_proposal_forward: f64,
    log_proposal_backward: f64,
    rng: &mut R,
) -> Result<bool> {
    if log_target_current.is_nan()
        || log_target_proposed.is_nan()
        || log_proposal_forward.is_nan()
        || log_proposal_backward.is_nan()
    {
        return Err(Error::Numerical("NaN log-density in Metropolis-Hastings step".into()));
    }
    if log_target_proposed == f64::NEG_INFINITY {
        return Ok(false);
    }
    if log_target_current == f64::NEG_INFINITY {
        return Ok(true);
    }
    let log_ratio =
        log_target_proposed - log_target_current + log_proposal_backward - log_proposal_forward;
    if log_ratio.is_nan() {
        return Err(Error::Numerical("NaN Metropolis-Hastings ratio".into()));
    }
    if log_ratio >= 0.0 {
        return Ok(true);
    }
    Ok(rng.random::<f64>() < log_ratio.exp())
}

/// Proposal family for the unrestricted `r` parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RProposal {
    /// `r' = r ± E` with `E` exponential of mean equal to the width; symmetric.
    #[default]
    ExponentialStep,
    /// `r'` exponential with mean `r`, Hastings-corrected. Wide relative to
    /// a concentrated posterior, so acceptance is typically a few percent.
    ExponentialMean,
}

/// Sampler settings.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    pub total_iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Proposal scales keyed by parameter (uniform half-widths, or the mean
    /// step for [`RProposal::ExponentialStep`]); missing entries use the
    /// defaults. Unused by [`RProposal::ExponentialMean`].
    pub widths: BTreeMap<Param, f64>,
    pub r_proposal: RProposal,
    /// Tune half-widths during burn-in toward acceptance in `[0.2, 0.5]`.
    pub adapt: bool,
    /// Keep thinned snapshots of the latent angles.
    pub store_latents: bool,
    /// Parameters held at their initial values.
    pub frozen: Vec<Param>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            total_iterations: 20_000,
            burn_in: 8_000,
            thin: 10,
            seed: 1,
            widths: BTreeMap::new(),
            r_proposal: RProposal::default(),
            adapt: true,
            store_latents: true,
            frozen: Vec::new(),
        }
    }
}

impl McmcConfig {
    /// 100,000 iterations, 40,000 burn-in, every 10th draw kept.
    pub fn simulation_budget() -> Self {
        McmcConfig {
            total_iterations: 100_000,
            burn_in: 40_000,
            ..Default::default()
        }
    }

    /// 250,000 iterations, 70,000 burn-in, every 10th draw kept.
    pub fn case_study_budget() -> Self {
        McmcConfig {
            total_iterations: 250_000,
            burn_in: 70_000,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.total_iterations {
            return Err(Error::invalid("burn-in must be smaller than the total iteration count"));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thinning interval must be at least 1"));
        }
        for (p, w) in &self.widths {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::invalid(format!("proposal width for {p} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn stored_draws(&self) -> usize {
        (self.total_iterations - self.burn_in) / self.thin
    }

    pub fn width(&self, p: Param, spec: &ModelSpec) -> f64 {
        if let Some(&w) = self.widths.get(&p) {
            return w;
        }
        match p {
            Param::Rho1 | Param::Rho2 => DEFAULT_RHO_WIDTH,
            Param::R1 | Param::R2 if spec.is_special() => DEFAULT_SIGNED_R_WIDTH,
            Param::R1 | Param::R2 => match self.r_proposal {
                RProposal::ExponentialStep => DEFAULT_R_STEP,
                RProposal::ExponentialMean => 0.0,
            },
            Param::DeltaX | Param::DeltaY => DEFAULT_DELTA_WIDTH,
            _ => DEFAULT_ANGLE_WIDTH,
        }
    }

    pub fn with_width(mut self, p: Param, w: f64) -> Self {
        self.widths.insert(p, w);
        self
    }
}

/// One stored posterior state.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub stage1: StageParams,
    pub stage2: StageParams,
    pub delta_x: f64,
    pub delta_y: f64,
    pub latent: Option<LatentState>,
}

impl Draw {
    pub fn get(&self, p: Param) -> Option<f64> {
        match p {
            Param::DeltaX => Some(self.delta_x),
            Param::DeltaY => Some(self.delta_y),
            _ => match p.stage() {
                Some(Stage::One) => self.stage1.get(p),
                _ => self.stage2.get(p),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceStats {
    pub param: Param,
    pub accepted: u64,
    pub proposed: u64,
    /// Proposal scale after burn-in adaptation (0 for the mean-`r` exponential).
    pub final_width: f64,
}

impl AcceptanceStats {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Thinned post-burn-in draws with run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub draws: Vec<Draw>,
    /// Post-burn-in acceptance tallies of the sampled parameters.
    pub acceptance: Vec<AcceptanceStats>,
    pub config: McmcConfig,
    pub spec: ModelSpec,
}

impl Chain {
    pub fn series(&self, p: Param) -> Vec<f64> {
        self.draws.iter().filter_map(|d| d.get(p)).collect()
    }

    /// Parameters that were actually sampled.
    pub fn sampled_params(&self) -> Vec<Param> {
        self.acceptance.iter().map(|a| a.param).collect()
    }

    pub fn acceptance_rate(&self, p: Param) -> Option<f64> {
        self.acceptance.iter().find(|a| a.param == p).map(AcceptanceStats::rate)
    }

    /// Writes one draw per row under a header naming the parameters.
    pub fn write_tsv<W: Write>(&self, out: W) -> Result<()> {
        write_draws_tsv(&self.draws, out)
    }
}

pub fn write_draws_tsv<W: Write>(draws: &[Draw], mut out: W) -> Result<()> {
    let names: Vec<&str> = Param::ALL.iter().map(|p| p.name()).collect();
    writeln!(out, "{}", names.join("\t"))?;
    for d in draws {
        let row: Vec<String> = Param::ALL
            .iter()
            .map(|&p| match d.get(p) {
                Some(v) => format!("{v}"),
                None => "NaN".to_string(),
            })
            .collect();
        writeln!(out, "{}", row.join("\t"))?;
    }
    Ok(())
}

/// Reads draws written by [`write_draws_tsv`] (latents are not stored).
pub fn read_draws_tsv<R: BufRead>(input: R) -> Result<Vec<Draw>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(Error::EmptyData)??;
    let cols: Vec<Option<Param>> = header.split('\t').map(|h| Param::from_name(h.trim())).collect();
    let mut draws = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k as u64 + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != cols.len() {
            return Err(Error::Data {
                line: lineno,
                message: format!("expected {} fields, found {}", cols.len(), fields.len()),
            });
        }
        let mut values = BTreeMap::new();
        for (col, field) in cols.iter().zip(&fields) {
            if let Some(p) = col {
                let v: f64 = field.trim().parse().map_err(|_| Error::Data {
                    line: lineno,
                    message: format!("cannot parse '{field}' as a number"),
                })?;
                values.insert(*p, v);
            }
        }
        let get = |p: Param| values.get(&p).copied().filter(|v| !v.is_nan());
        let need = |p: Param| {
            get(p).ok_or_else(|| Error::Data {
                line: lineno,
                message: format!("missing value for {p}"),
            })
        };
        let stage = |t0: Param, r: Param, t1: Param, rho: Param| -> Result<StageParams> {
            Ok(StageParams {
                theta0: Angle::new(need(t0)?)?,
                r: need(r)?,
                theta1: Angle::new(need(t1)?)?,
                rho: need(rho)?,
                gamma: None,
            })
        };
        let mut stage1 = stage(Param::Theta01, Param::R1, Param::Theta11, Param::Rho1)?;
        stage1.gamma = get(Param::Gamma).map(Angle::new).transpose()?;
        let stage2 = stage(Param::Theta02, Param::R2, Param::Theta12, Param::Rho2)?;
        draws.push(Draw {
            stage1,
            stage2,
            delta_x: get(Param::DeltaX).unwrap_or(0.0),
            delta_y: get(Param::DeltaY).unwrap_or(0.0),
            latent: None,
        });
    }
    if draws.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(draws)
}

#[derive(Debug, Clone, Default)]
struct StageCache {
    mu: Vec<Complex64>,
    cos: Vec<f64>,
    loglik: f64,
}

#[inline]
fn loglik_from_cos(cos: &[f64], rho: f64) -> f64 {
    if !(0.0..1.0).contains(&rho) {
        return f64::NEG_INFINITY;
    }
    let r2 = rho * rho;
    let s: f64 = cos.iter().map(|&c| (1.0 + r2 - 2.0 * rho * c).ln()).sum();
    cos.len() as f64 * ((1.0 - r2) / std::f64::consts::TAU).ln() - s
}

#[inline]
fn dot(a: Complex64, b: Complex64) -> f64 {
    a.re * b.re + a.im * b.im
}

fn fill_stage1(p: &StageParams, x: &[Complex64], y: &[Complex64], w: &[bool], out: &mut StageCache) {
    let l0 = p.link_for(false);
    let l1 = p.link_for(true);
    for i in 0..x.len() {
        let link: &MobiusLink = if w[i] { &l1 } else { &l0 };
        let m = link.eval(x[i]);
        out.mu[i] = m;
        out.cos[i] = dot(y[i], m);
    }
    out.loglik = loglik_from_cos(&out.cos, p.rho);
}

fn fill_stage2(p: &StageParams, v: &[Complex64], x: &[Complex64], out: &mut StageCache) {
    let link = p.link();
    for i in 0..v.len() {
        let m = link.eval(v[i]);
        out.mu[i] = m;
        out.cos[i] = dot(x[i], m);
    }
    out.loglik = loglik_from_cos(&out.cos, p.rho);
}

fn reflect(mut x: f64, lo: f64, hi: f64) -> f64 {
    for _ in 0..64 {
        if x < lo {
            x = 2.0 * lo - x;
        } else if x > hi {
            x = 2.0 * hi - x;
        } else {
            return x;
        }
    }
    x.clamp(lo, hi)
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    accepted: u64,
    proposed: u64,
}

/// Default starting values: rotations at circular means of the observed
/// angle differences, `θ1` at the circular mean of the covariate, `r = 0.5`
/// (`1` for a unit-modulus `b1`), `ρ = 0.5`.
pub fn initial_params(data: &[Observation], spec: &ModelSpec) -> (StageParams, StageParams) {
    let cmean = |it: &mut dyn Iterator<Item = f64>| {
        circular_summary_iter(it)
            .ok()
            .and_then(|s| s.circular_mean)
            .unwrap_or(Angle::ZERO)
    };
    let special = spec.is_special();
    let pick = |a: Angle| if special { Angle::ZERO } else { a };
    let mut p1 = StageParams {
        theta0: pick(cmean(&mut data.iter().map(|o| (o.theta_y - o.theta_x).radians()))),
        r: 0.5,
        theta1: pick(cmean(&mut data.iter().map(|o| o.theta_x.radians()))),
        rho: 0.5,
        gamma: None,
    };
    if spec.group_effect {
        p1.gamma = Some(Angle::ZERO);
    }
    let mut p2 = StageParams {
        theta0: pick(cmean(&mut data.iter().map(|o| (o.theta_x - o.theta_v).radians()))),
        r: 0.5,
        theta1: pick(cmean(&mut data.iter().map(|o| o.theta_v.radians()))),
        rho: 0.5,
        gamma: None,
    };
    if spec.unit_b1 {
        p2.r = 1.0;
        p2.theta0 = Angle::ZERO;
        p2.theta1 = cmean(&mut data.iter().map(|o| o.theta_x.radians()));
    }
    (p1, p2)
}

/// Data-augmentation sampler state for one chain.
pub struct Sampler {
    spec: ModelSpec,
    p1: StageParams,
    p2: StageParams,
    v: Vec<Complex64>,
    x: Vec<Complex64>,
    y: Vec<Complex64>,
    x_angle: Vec<Angle>,
    y_angle: Vec<Angle>,
    w: Vec<bool>,
    cens_x: Vec<usize>,
    cens_y: Vec<usize>,
    /// Smallest nonzero |observed angle| per coordinate (upper bound on δ).
    min_obs_x: f64,
    min_obs_y: f64,
    s1: StageCache,
    s2: StageCache,
    scratch: StageCache,
    schedule: Vec<Param>,
    widths: BTreeMap<Param, f64>,
    r_proposal: RProposal,
    tally: BTreeMap<Param, Tally>,
    batch: BTreeMap<Param, Tally>,
}

impl Sampler {
    pub fn new(
        data: &[Observation],
        spec: ModelSpec,
        config: &McmcConfig,
        init: Option<(StageParams, StageParams)>,
    ) -> Result<Self> {
        spec.validate()?;
        config.validate()?;
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        let (p1, p2) = init.unwrap_or_else(|| initial_params(data, &spec));
        p1.check(spec.is_special())?;
        p2.check(spec.is_special())?;
        let latent = LatentState::from_data(data);
        latent.check(data, &spec)?;

        let n = data.len();
        let cens_x: Vec<usize> = (0..n).filter(|&i| is_censored(data[i].theta_x, spec.delta_x)).collect();
        let cens_y: Vec<usize> = (0..n).filter(|&i| is_censored(data[i].theta_y, spec.delta_y)).collect();
        let min_nonzero = |f: &dyn Fn(&Observation) -> Angle| {
            data.iter()
                .map(|o| f(o).radians().abs())
                .filter(|&a| a > 0.0)
                .fold(PI, f64::min)
        };
        let schedule: Vec<Param> = spec
            .free_params()
            .into_iter()
            .filter(|p| !config.frozen.contains(p))
            .collect();
        let widths = schedule.iter().map(|&p| (p, config.width(p, &spec))).collect();
        let blank = StageCache {
            mu: vec![Complex64::new(1.0, 0.0); n],
            cos: vec![0.0; n],
            loglik: 0.0,
        };
        let mut s = Sampler {
            spec,
            p1,
            p2,
            v: data.iter().map(|o| o.theta_v.to_unit().as_complex()).collect(),
            x: latent.theta_x_star.iter().map(|a| a.to_unit().as_complex()).collect(),
            y: latent.theta_y_star.iter().map(|a| a.to_unit().as_complex()).collect(),
            x_angle: latent.theta_x_star,
            y_angle: latent.theta_y_star,
            w: data.iter().map(Observation::w).collect(),
            cens_x,
            cens_y,
            min_obs_x: min_nonzero(&|o| o.theta_x),
            min_obs_y: min_nonzero(&|o| o.theta_y),
            s1: blank.clone(),
            s2: blank.clone(),
            scratch: blank,
            schedule,
            widths,
            r_proposal: config.r_proposal,
            tally: BTreeMap::new(),
            batch: BTreeMap::new(),
        };
        s.refresh();
        let lt = s.log_target(Stage::One) + s.log_target(Stage::Two);
        if !lt.is_finite() {
            return Err(Error::Numerical(format!("non-finite initial log-density {lt}")));
        }
        Ok(s)
    }

    fn refresh(&mut self) {
        fill_stage2(&self.p2, &self.v, &self.x, &mut self.s2);
        fill_stage1(&self.p1, &self.x, &self.y, &self.w, &mut self.s1);
    }

    fn log_target(&self, stage: Stage) -> f64 {
        match stage {
            Stage::One => log_prior(&self.p1, Stage::One, &self.spec) + self.s1.loglik,
            Stage::Two => log_prior(&self.p2, Stage::Two, &self.spec) + self.s2.loglik,
        }
    }

    /// Augmented log-likelihood of a stage at the current state (cached).
    pub fn cached_log_likelihood(&self, stage: Stage) -> f64 {
        match stage {
            Stage::One => self.s1.loglik,
            Stage::Two => self.s2.loglik,
        }
    }

    pub fn params(&self) -> (StageParams, StageParams) {
        (self.p1, self.p2)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn latent(&self) -> LatentState {
        LatentState {
            theta_x_star: self.x_angle.clone(),
            theta_y_star: self.y_angle.clone(),
        }
    }

    pub fn draw(&self, with_latent: bool) -> Draw {
        Draw {
            stage1: self.p1,
            stage2: self.p2,
            delta_x: self.spec.delta_x,
            delta_y: self.spec.delta_y,
            latent: with_latent.then(|| self.latent()),
        }
    }

    fn mean_angle(m: Complex64) -> Angle {
        Angle::wrapped(m.im.atan2(m.re))
    }

    /// Step 1 of a sweep: redraw censored covariate latents, then censored
    /// response latents, from their full conditionals.
    pub fn update_latents<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if !self.cens_x.is_empty() {
            let rho2 = self.p2.rho;
            let exact = self.spec.latent_x_mode == LatentXMode::Exact;
            let (l0, l1) = (self.p1.link_for(false), self.p1.link_for(true));
            for k in 0..self.cens_x.len() {
                let i = self.cens_x[k];
                let base = WrappedCauchy::new(Self::mean_angle(self.s2.mu[i]), rho2)?;
                let proposal = TruncatedWrappedCauchy::symmetric(base, self.spec.delta_x)?.sample(rng);
                let unit = proposal.to_unit().as_complex();
                let accept = if exact {
                    // independence proposal from the stage-2 factor; the ratio
                    // reduces to the stage-1 likelihood of Y* at the two values
                    let link = if self.w[i] { &l1 } else { &l0 };
                    let c_new = dot(self.y[i], link.eval(unit));
                    let c_old = dot(self.y[i], link.eval(self.x[i]));
                    mh_accept(ln_wc(c_old, self.p1.rho), ln_wc(c_new, self.p1.rho), 0.0, 0.0, rng)?
                } else {
                    true
                };
                if accept {
                    self.x_angle[i] = proposal;
                    self.x[i] = unit;
                }
            }
            fill_stage1(&self.p1, &self.x, &self.y, &self.w, &mut self.s1);
        }
        if !self.cens_y.is_empty() {
            let rho1 = self.p1.rho;
            for k in 0..self.cens_y.len() {
                let i = self.cens_y[k];
                let base = WrappedCauchy::new(Self::mean_angle(self.s1.mu[i]), rho1)?;
                let draw = TruncatedWrappedCauchy::symmetric(base, self.spec.delta_y)?.sample(rng);
                self.y_angle[i] = draw;
                self.y[i] = draw.to_unit().as_complex();
            }
        }
        self.refresh();
        Ok(())
    }

    fn record(&mut self, p: Param, accepted: bool) {
        for t in [self.tally.entry(p).or_default(), self.batch.entry(p).or_default()] {
            t.proposed += 1;
            t.accepted += accepted as u64;
        }
    }

    fn stage_params_mut(&mut self, stage: Stage) -> &mut StageParams {
        match stage {
            Stage::One => &mut self.p1,
            Stage::Two => &mut self.p2,
        }
    }

    fn update_param<R: Rng + ?Sized>(&mut self, p: Param, rng: &mut R) -> Result<()> {
        let width = self.widths.get(&p).copied().unwrap_or(0.0);
        let mean_r = matches!(p, Param::R1 | Param::R2)
            && !self.spec.is_special()
            && self.r_proposal == RProposal::ExponentialMean;
        if width == 0.0 && !mean_r {
            // zero-width proposal reproduces the current state
            self.record(p, true);
            return Ok(());
        }
        let stage = match p.stage() {
            Some(s) => s,
            None => return self.update_delta(p, width, rng),
        };
        let current = match stage {
            Stage::One => self.p1,
            Stage::Two => self.p2,
        };
        let old = current.get(p).unwrap_or(0.0);
        let (new, log_fwd, log_bwd) = match p {
            Param::Rho1 | Param::Rho2 => (reflect(old + rng.random_range(-width..width), 0.0, RHO_MAX), 0.0, 0.0),
            Param::R1 | Param::R2 if self.spec.is_special() => {
                (reflect(old + rng.random_range(-width..width), -1.0, 1.0), 0.0, 0.0)
            }
            Param::R1 | Param::R2 if self.r_proposal == RProposal::ExponentialStep => {
                let u: f64 = rng.random();
                let step = -width * (1.0 - u).ln();
                let new = if rng.random::<bool>() { old + step } else { old - step };
                (new, 0.0, 0.0)
            }
            Param::R1 | Param::R2 => {
                // exponential with mean equal to the current value
                let scale = old.max(1e-12);
                let u: f64 = rng.random();
                let new = -scale * (1.0 - u).ln();
                if !(new > 0.0 && new.is_finite()) {
                    self.record(p, false);
                    return Ok(());
                }
                let fwd = -scale.ln() - new / scale;
                let bwd = -new.ln() - scale / new;
                (new, fwd, bwd)
            }
            _ => (old + rng.random_range(-width..width), 0.0, 0.0),
        };
        let mut proposed = current;
        proposed.set(p, new);

        let lt_cur = self.log_target(stage);
        let lp_new = log_prior(&proposed, stage, &self.spec);
        let is_rho = matches!(p, Param::Rho1 | Param::Rho2);
        let ll_new = if lp_new == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else if is_rho {
            let cache = match stage {
                Stage::One => &self.s1,
                Stage::Two => &self.s2,
            };
            loglik_from_cos(&cache.cos, new)
        } else {
            match stage {
                Stage::One => fill_stage1(&proposed, &self.x, &self.y, &self.w, &mut self.scratch),
                Stage::Two => fill_stage2(&proposed, &self.v, &self.x, &mut self.scratch),
            }
            self.scratch.loglik
        };
        let lt_new = lp_new + ll_new;
        let accepted = mh_accept(lt_cur, lt_new, log_fwd, log_bwd, rng)?;
        if accepted {
            *self.stage_params_mut(stage) = proposed;
            let cache = match stage {
                Stage::One => &mut self.s1,
                Stage::Two => &mut self.s2,
            };
            if is_rho {
                cache.loglik = ll_new;
            } else {
                std::mem::swap(cache, &mut self.scratch);
            }
        }
        self.record(p, accepted);
        Ok(())
    }

    /// Flat prior on δ: given the augmented state the full conditional is
    /// uniform between the largest censored |latent| and the smallest
    /// nonzero |observation|.
    fn update_delta<R: Rng + ?Sized>(&mut self, p: Param, width: f64, rng: &mut R) -> Result<()> {
        let (current, cens, latents, upper) = match p {
            Param::DeltaX => (self.spec.delta_x, &self.cens_x, &self.x_angle, self.min_obs_x),
            _ => (self.spec.delta_y, &self.cens_y, &self.y_angle, self.min_obs_y),
        };
        let lower = cens.iter().map(|&i| latents[i].radians().abs()).fold(0.0, f64::max);
        let upper = upper.min(PI - 1e-9);
        let new = current + rng.random_range(-width..width);
        let lt_new = if new > lower && new <= upper {
            0.0
        } else {
            f64::NEG_INFINITY
        };
        let accepted = mh_accept(0.0, lt_new, 0.0, 0.0, rng)?;
        if accepted {
            match p {
                Param::DeltaX => self.spec.delta_x = new,
                _ => self.spec.delta_y = new,
            }
        }
        self.record(p, accepted);
        Ok(())
    }

    /// One full sweep: latent draws, then sequential parameter updates.
    pub fn gibbs_sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.update_latents(rng)?;
        for k in 0..self.schedule.len() {
            let p = self.schedule[k];
            self.update_param(p, rng)?;
        }
        Ok(())
    }

    fn adapt_widths(&mut self) {
        let special = self.spec.is_special();
        for (p, t) in std::mem::take(&mut self.batch) {
            if t.proposed == 0 {
                continue;
            }
            if matches!(p, Param::R1 | Param::R2) && !special && self.r_proposal == RProposal::ExponentialMean {
                continue;
            }
            let rate = t.accepted as f64 / t.proposed as f64;
            let cap = match p {
                Param::Rho1 | Param::Rho2 => 0.5,
                Param::R1 | Param::R2 => 1.0,
                Param::DeltaX | Param::DeltaY => 0.5,
                _ => PI,
            };
            if let Some(w) = self.widths.get_mut(&p) {
                if *w == 0.0 {
                    continue;
                }
                if rate < ADAPT_LOW {
                    *w *= 0.8;
                } else if rate > ADAPT_HIGH {
                    *w = (*w * 1.25).min(cap);
                }
            }
        }
    }

    fn acceptance_stats(&self) -> Vec<AcceptanceStats> {
        self.schedule
            .iter()
            .map(|&p| {
                let t = self.tally.get(&p).copied().unwrap_or_default();
                AcceptanceStats {
                    param: p,
                    accepted: t.accepted,
                    proposed: t.proposed,
                    final_width: self.widths.get(&p).copied().unwrap_or(0.0),
                }
            })
            .collect()
    }
}

/// Runs one chain from the default initial values.
pub fn run_chain(data: &[Observation], spec: &ModelSpec, config: &McmcConfig) -> Result<Chain> {
    run_chain_from(data, spec, config, None)
}

/// Runs one chain; deterministic given `config.seed`.
pub fn run_chain_from(
    data: &[Observation],
    spec: &ModelSpec,
    config: &McmcConfig,
    init: Option<(StageParams, StageParams)>,
) -> Result<Chain> {
    let mut sampler = Sampler::new(data, *spec, config, init)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draws = Vec::with_capacity(config.stored_draws());
    for t in 0..config.total_iterations {
        sampler.gibbs_sweep(&mut rng)?;
        if t < config.burn_in {
            if config.adapt && (t as u64 + 1).is_multiple_of(ADAPT_BATCH) {
                sampler.adapt_widths();
            }
            if t + 1 == config.burn_in {
                sampler.tally.clear();
                sampler.batch.clear();
            }
            continue;
        }
        if (t - config.burn_in + 1).is_multiple_of(config.thin) {
            draws.push(sampler.draw(config.store_latents));
        }
    }
    Ok(Chain {
        draws,
        acceptance: sampler.acceptance_stats(),
        config: config.clone(),
        spec: *spec,
    })
}

/// Independent chains with seeds split from `config.seed` by
/// [`par::stream_seed`]; run in parallel when enabled.
pub fn run_chains(data: &[Observation], spec: &ModelSpec, config: &McmcConfig, chains: usize) -> Vec<Result<Chain>> {
    par::map_indexed(chains, |k| {
        let cfg = McmcConfig {
            seed: par::stream_seed(config.seed, k as u64),
            ..config.clone()
        };
        run_chain(data, spec, &cfg)
    })
}
