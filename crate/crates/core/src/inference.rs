//! Posterior summaries, HPD intervals, Geweke diagnostics, posterior
//! predictive simulation and event probabilities.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::Write;

use rand::Rng;

use crate::angle::{circular_summary_iter, wrap_f64, Angle};
use crate::distributions::wc_sample_around;
use crate::error::{Error, Result};
use crate::mcmc::{Chain, Draw};
use crate::model::{censor, Param, StageParams};

/// Smallest number of draws accepted by [`hpd_interval`].
pub const MIN_HPD_DRAWS: usize = 100;
/// Smallest series accepted by [`geweke`].
pub const MIN_GEWEKE_DRAWS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Linear,
    Circular,
}

impl ParamKind {
    pub fn of(p: Param) -> Self {
        if p.is_circular() {
            ParamKind::Circular
        } else {
            ParamKind::Linear
        }
    }
}

/// Credible interval. For circular parameters it is the counter-clockwise
/// arc from `low` to `high` of length `width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    pub width: f64,
    pub kind: ParamKind,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        match self.kind {
            ParamKind::Linear => self.low <= x && x <= self.high,
            ParamKind::Circular => (x - self.low).rem_euclid(TAU) <= self.width,
        }
    }

    /// Circular arcs longer than π usually indicate a multimodal posterior.
    pub fn is_wide_arc(&self) -> bool {
        self.kind == ParamKind::Circular && self.width > PI
    }
}

/// Shortest interval (linear) or arc (circular) covering `⌈level·n⌉` draws.
pub fn hpd_interval(draws: &[f64], level: f64, kind: ParamKind) -> Result<Interval> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::invalid(format!("HPD level must lie in (0, 1], got {level}")));
    }
    if draws.len() < MIN_HPD_DRAWS {
        return Err(Error::invalid(format!(
            "HPD interval needs at least {MIN_HPD_DRAWS} draws, got {}",
            draws.len()
        )));
    }
    if draws.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(f64::NAN));
    }
    let n = draws.len();
    let m = ((level * n as f64).ceil() as usize).clamp(1, n);
    let mut sorted: Vec<f64> = match kind {
        ParamKind::Linear => draws.to_vec(),
        ParamKind::Circular => draws.iter().map(|&x| wrap_f64(x)).collect(),
    };
    sorted.sort_by(f64::total_cmp);
    let mut best = (f64::INFINITY, 0usize, 0.0f64);
    match kind {
        ParamKind::Linear => {
            for i in 0..=n - m {
                let w = sorted[i + m - 1] - sorted[i];
                if w < best.0 {
                    best = (w, i, sorted[i + m - 1]);
                }
            }
        }
        ParamKind::Circular => {
            for i in 0..n {
                let j = i + m - 1;
                let end = if j < n { sorted[j] } else { sorted[j - n] + TAU };
                let w = end - sorted[i];
                if w < best.0 {
                    best = (w, i, end);
                }
            }
        }
    }
    let (width, i, end) = best;
    let high = match kind {
        ParamKind::Linear => end,
        ParamKind::Circular => wrap_f64(end),
    };
    Ok(Interval {
        low: sorted[i],
        high,
        width,
        kind,
    })
}

/// Point estimate and spread: mean and sample sd for linear parameters,
/// circular mean and circular dispersion for circular ones.
pub fn estimate_and_spread(draws: &[f64], kind: ParamKind) -> Result<(f64, f64)> {
    if draws.is_empty() {
        return Err(Error::EmptyData);
    }
    match kind {
        ParamKind::Linear => {
            let n = draws.len() as f64;
            let mean = draws.iter().sum::<f64>() / n;
            let sd = if draws.len() > 1 {
                (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            Ok((mean, sd))
        }
        ParamKind::Circular => {
            let s = circular_summary_iter(draws.iter().copied())?;
            Ok((s.mean()?.radians(), s.dispersion))
        }
    }
}

fn spectral_variance_at_zero(x: &[f64]) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let autocov = |k: usize| dev[..n - k].iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let bandwidth = (n as f64).sqrt().floor() as usize;
    let mut s = autocov(0);
    for k in 1..=bandwidth.min(n - 1) {
        s += 2.0 * (1.0 - k as f64 / (bandwidth as f64 + 1.0)) * autocov(k);
    }
    s
}

/// Geweke z-score comparing the first 10% with the last 50% of a series.
pub fn geweke(series: &[f64], kind: ParamKind) -> Result<f64> {
    geweke_with(series, 0.1, 0.5, kind)
}

/// Geweke z-score with Bartlett-window spectral variances (bandwidth
/// `⌊√m⌋` for a segment of length `m`). Circular series are cosine
/// transformed first.
pub fn geweke_with(series: &[f64], first_frac: f64, last_frac: f64, kind: ParamKind) -> Result<f64> {
    if !(first_frac > 0.0 && last_frac > 0.0 && first_frac + last_frac <= 1.0) {
        return Err(Error::invalid("Geweke fractions must be positive and sum to at most 1"));
    }
    if series.len() < MIN_GEWEKE_DRAWS {
        return Err(Error::invalid(format!(
            "Geweke diagnostic needs at least {MIN_GEWEKE_DRAWS} draws, got {}",
            series.len()
        )));
    }
    let x: Vec<f64> = match kind {
        ParamKind::Linear => series.to_vec(),
        ParamKind::Circular => series.iter().map(|v| v.cos()).collect(),
    };
    let n = x.len();
    let n1 = ((first_frac * n as f64).floor() as usize).max(2);
    let n2 = ((last_frac * n as f64).floor() as usize).max(2);
    let a = &x[..n1];
    let b = &x[n - n2..];
    let constant = |s: &[f64]| s.iter().all(|&v| v == s[0]);
    if constant(a) && constant(b) {
        return Err(Error::Numerical("zero spectral variance in Geweke diagnostic".into()));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (s1, s2) = (spectral_variance_at_zero(a), spectral_variance_at_zero(b));
    let var = s1 / n1 as f64 + s2 / n2 as f64;
    if !(var > 0.0) {
        return Err(Error::Numerical("zero spectral variance in Geweke diagnostic".into()));
    }
    Ok((mean(a) - mean(b)) / var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSummary {
    pub param: Param,
    pub kind: ParamKind,
    pub estimate: f64,
    pub spread: f64,
    pub hpd: Interval,
    /// `None` when the chain is too short or the series is constant.
    pub geweke_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport {
    pub entries: Vec<ParamSummary>,
    pub draws: usize,
    pub level: f64,
}

impl SummaryReport {
    pub fn get(&self, p: Param) -> Option<&ParamSummary> {
        self.entries.iter().find(|e| e.param == p)
    }

    /// Parameters whose HPD arc is longer than π.
    pub fn wide_arcs(&self) -> Vec<Param> {
        self.entries.iter().filter(|e| e.hpd.is_wide_arc()).map(|e| e.param).collect()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "parameter\testimate\tspread\thpd_low\thpd_high\tgeweke_z")?;
        for e in &self.entries {
            let z = e.geweke_z.map_or_else(|| "NA".to_string(), |z| format!("{z}"));
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.param, e.estimate, e.spread, e.hpd.low, e.hpd.high, z
            )?;
        }
        Ok(())
    }

    /// One `key = value` line per statistic, e.g. `r1.estimate = 0.9`.
    pub fn write_key_value<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "draws = {}", self.draws)?;
        writeln!(out, "hpd_level = {}", self.level)?;
        for e in &self.entries {
            let p = e.param;
            writeln!(out, "{p}.estimate = {}", e.estimate)?;
            writeln!(out, "{p}.spread = {}", e.spread)?;
            writeln!(out, "{p}.hpd_low = {}", e.hpd.low)?;
            writeln!(out, "{p}.hpd_high = {}", e.hpd.high)?;
            if let Some(z) = e.geweke_z {
                writeln!(out, "{p}.geweke_z = {z}")?;
            }
            if e.hpd.is_wide_arc() {
                writeln!(out, "{p}.warning = HPD arc longer than pi")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for SummaryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<8} {:>10} {:>10} {:>22} {:>8}",
            "param", "estimate", "spread", "95% HPD", "geweke"
        )?;
        for e in &self.entries {
            let z = e.geweke_z.map_or_else(|| "NA".to_string(), |z| format!("{z:.2}"));
            writeln!(
                f,
                "{:<8} {:>10.4} {:>10.4} [{:>9.4}, {:>9.4}] {:>8}",
                e.param.name(),
                e.estimate,
                e.spread,
                e.hpd.low,
                e.hpd.high,
                z
            )?;
        }
        Ok(())
    }
}

/// Summary of one parameter's draws.
pub fn summarize_param(p: Param, series: &[f64], level: f64) -> Result<ParamSummary> {
    let kind = ParamKind::of(p);
    let (estimate, spread) = estimate_and_spread(series, kind)?;
    let hpd = hpd_interval(series, level, kind)?;
    let geweke_z = if series.len() >= MIN_GEWEKE_DRAWS {
        geweke(series, kind).ok()
    } else {
        None
    };
    Ok(ParamSummary {
        param: p,
        kind,
        estimate,
        spread,
        hpd,
        geweke_z,
    })
}

/// Summaries of `params` over stored draws.
pub fn summarize_draws(draws: &[Draw], params: &[Param], level: f64) -> Result<SummaryReport> {
    if draws.is_empty() {
        return Err(Error::EmptyData);
    }
    let entries = params
        .iter()
        .map(|&p| {
            let series: Vec<f64> = draws.iter().filter_map(|d| d.get(p)).collect();
            summarize_param(p, &series, level)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SummaryReport {
        entries,
        draws: draws.len(),
        level,
    })
}

/// 95% summaries of every sampled parameter of a chain.
pub fn summarize(chain: &Chain) -> Result<SummaryReport> {
    summarize_draws(&chain.draws, &chain.sampled_params(), 0.95)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    /// Response given the covariate.
    Stage1,
    /// Covariate given the instrument.
    Stage2,
    /// Response given the instrument, through a latent covariate.
    Composed,
}

impl std::str::FromStr for Horizon {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stage1" => Ok(Horizon::Stage1),
            "stage2" => Ok(Horizon::Stage2),
            "composed" => Ok(Horizon::Composed),
            _ => Err(Error::invalid(format!("unknown horizon '{s}' (stage1|stage2|composed)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictiveDraw {
    /// Observed-scale prediction (censored to exactly 0 inside the window).
    pub theta_pred: Angle,
    /// The predicted angle before censoring.
    pub theta_latent: Angle,
    pub horizon: Horizon,
    pub initial_condition: Angle,
}

fn predict_stage<R: Rng + ?Sized>(p: &StageParams, from: Angle, w: bool, rng: &mut R) -> Result<Angle> {
    let mean = p.link_for(w).apply(from.to_unit())?;
    Ok(wc_sample_around(mean, p.rho, rng))
}

/// One predictive draw per posterior draw. `group` selects the group
/// rotation of stage 1 when the chain has one.
pub fn posterior_predictive<R: Rng + ?Sized>(
    draws: &[Draw],
    initial: Angle,
    horizon: Horizon,
    group: bool,
    rng: &mut R,
) -> Result<Vec<PredictiveDraw>> {
    draws
        .iter()
        .map(|d| {
            let (latent, delta) = match horizon {
                Horizon::Stage1 => (predict_stage(&d.stage1, initial, group, rng)?, d.delta_y),
                Horizon::Stage2 => (predict_stage(&d.stage2, initial, false, rng)?, d.delta_x),
                Horizon::Composed => {
                    let x = predict_stage(&d.stage2, initial, false, rng)?;
                    (predict_stage(&d.stage1, x, group, rng)?, d.delta_y)
                }
            };
            Ok(PredictiveDraw {
                theta_pred: censor(latent, delta),
                theta_latent: latent,
                horizon,
                initial_condition: initial,
            })
        })
        .collect()
}

/// Fraction of draws satisfying `predicate(stage1, stage2)`.
pub fn prob_event<F>(draws: &[Draw], predicate: F) -> Result<f64>
where
    F: Fn(&StageParams, &StageParams) -> bool,
{
    if draws.is_empty() {
        return Err(Error::EmptyData);
    }
    let hits = draws.iter().filter(|d| predicate(&d.stage1, &d.stage2)).count();
    Ok(hits as f64 / draws.len() as f64)
}
