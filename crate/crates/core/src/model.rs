//! Two-stage regression model, censoring map, priors and full conditionals.
//!
//! Stage 2 regresses the latent covariate `X*` on the instrument `V`;
//! stage 1 regresses the latent response `Y*` on `X*`:
//!
//! ```text
//! X* = b0 (V + b1) / (1 + conj(b1) V) ε2,      arg ε2 ~ WC(0, ρ2)
//! Y* = β0 (X* + β1) / (1 + conj(β1) X*) ε1,   arg ε1 ~ WC(0, ρ1)
//! ```
//!
//! Observed angles equal the latents except inside the censoring windows
//! `(-δ_X, δ_X)` and `(-δ_Y, δ_Y)`, where they are recorded as exactly zero.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::angle::{Angle, UnitComplex};
use crate::distributions::{TruncatedWrappedCauchy, WrappedCauchy};
use crate::error::{Error, Result};
use crate::mobius::MobiusLink;

/// Upper cap on concentration proposals; `ρ = 1` is a point mass.
pub const RHO_MAX: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    /// Zero-inflation in both response and covariate.
    #[serde(rename = "I")]
    ModelI,
    /// No zero-inflation; zeros are taken as exact observations.
    #[serde(rename = "II")]
    ModelII,
    /// Zero-inflation in the response only.
    #[serde(rename = "III")]
    ModelIII,
    /// Model I with `arg β0 = arg β1 = arg b0 = arg b1 = 0` and real
    /// `β1, b1 ∈ [-1, 1]`.
    #[serde(rename = "special")]
    SpecialCase,
}

impl ModelVariant {
    pub fn censors_x(self) -> bool {
        matches!(self, ModelVariant::ModelI | ModelVariant::SpecialCase)
    }

    pub fn censors_y(self) -> bool {
        !matches!(self, ModelVariant::ModelII)
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelVariant::ModelI => "I",
            ModelVariant::ModelII => "II",
            ModelVariant::ModelIII => "III",
            ModelVariant::SpecialCase => "special",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "1" => Ok(ModelVariant::ModelI),
            "II" | "2" => Ok(ModelVariant::ModelII),
            "III" | "3" => Ok(ModelVariant::ModelIII),
            "special" | "S" => Ok(ModelVariant::SpecialCase),
            other => Err(Error::invalid(format!("unknown model variant '{other}'"))),
        }
    }
}

/// How censored covariate latents are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentXMode {
    /// Exact truncated draw from the stage-2 factor alone.
    #[default]
    Literal,
    /// Independence Metropolis step whose target also includes the stage-1
    /// likelihood of `Y*` given `X*`.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Response on covariate (`Y*` on `X*`).
    One,
    /// Covariate on instrument (`X*` on `V`).
    Two,
}

/// Scalar parameters updated by the sampler, in update order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    Theta01,
    R1,
    Theta11,
    Rho1,
    Gamma,
    Theta02,
    R2,
    Theta12,
    Rho2,
    DeltaX,
    DeltaY,
}

impl Param {
    pub const ALL: [Param; 11] = [
        Param::Theta01,
        Param::R1,
        Param::Theta11,
        Param::Rho1,
        Param::Gamma,
        Param::Theta02,
        Param::R2,
        Param::Theta12,
        Param::Rho2,
        Param::DeltaX,
        Param::DeltaY,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Theta01 => "theta01",
            Param::R1 => "r1",
            Param::Theta11 => "theta11",
            Param::Rho1 => "rho1",
            Param::Gamma => "gamma",
            Param::Theta02 => "theta02",
            Param::R2 => "r2",
            Param::Theta12 => "theta12",
            Param::Rho2 => "rho2",
            Param::DeltaX => "delta_x",
            Param::DeltaY => "delta_y",
        }
    }

    pub fn from_name(name: &str) -> Option<Param> {
        Param::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn is_circular(self) -> bool {
        matches!(
            self,
            Param::Theta01 | Param::Theta11 | Param::Gamma | Param::Theta02 | Param::Theta12
        )
    }

    pub fn stage(self) -> Option<Stage> {
        match self {
            Param::Theta01 | Param::R1 | Param::Theta11 | Param::Rho1 | Param::Gamma => Some(Stage::One),
            Param::Theta02 | Param::R2 | Param::Theta12 | Param::Rho2 => Some(Stage::Two),
            Param::DeltaX | Param::DeltaY => None,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of one regression stage: `β0 = e^{iθ0}`, `β1 = r e^{iθ1}`,
/// error concentration `ρ`, and the optional stage-1 group rotation `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageParams {
    pub theta0: Angle,
    pub r: f64,
    pub theta1: Angle,
    pub rho: f64,
    pub gamma: Option<Angle>,
}

impl StageParams {
    pub fn new(theta0: f64, r: f64, theta1: f64, rho: f64) -> Result<Self> {
        let p = StageParams {
            theta0: Angle::new(theta0)?,
            r,
            theta1: Angle::new(theta1)?,
            rho,
            gamma: None,
        };
        p.check(false)?;
        Ok(p)
    }

    pub fn with_gamma(mut self, gamma: Angle) -> Self {
        self.gamma = Some(gamma);
        self
    }

    /// Validates the invariants; `signed` allows `r ∈ [-1, 1]`.
    pub fn check(&self, signed: bool) -> Result<()> {
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return Err(Error::invalid(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if signed {
            if !(-1.0..=1.0).contains(&self.r) {
                return Err(Error::invalid(format!("special-case r must lie in [-1, 1], got {}", self.r)));
            }
        } else if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::invalid(format!("r must be finite and >= 0, got {}", self.r)));
        }
        Ok(())
    }

    pub fn link(&self) -> MobiusLink {
        // β1 finite by construction
        MobiusLink::from_polar(self.theta0, self.r, self.theta1).expect("finite link parameters")
    }

    /// Link with the group rotation applied when `w` is set.
    pub fn link_for(&self, w: bool) -> MobiusLink {
        let theta0 = match (w, self.gamma) {
            (true, Some(g)) => self.theta0 + g,
            _ => self.theta0,
        };
        MobiusLink::from_polar(theta0, self.r, self.theta1).expect("finite link parameters")
    }

    pub fn get(&self, p: Param) -> Option<f64> {
        match p {
            Param::Theta01 | Param::Theta02 => Some(self.theta0.radians()),
            Param::R1 | Param::R2 => Some(self.r),
            Param::Theta11 | Param::Theta12 => Some(self.theta1.radians()),
            Param::Rho1 | Param::Rho2 => Some(self.rho),
            Param::Gamma => self.gamma.map(Angle::radians),
            Param::DeltaX | Param::DeltaY => None,
        }
    }

    pub(crate) fn set(&mut self, p: Param, value: f64) {
        match p {
            Param::Theta01 | Param::Theta02 => self.theta0 = Angle::wrapped(value),
            Param::R1 | Param::R2 => self.r = value,
            Param::Theta11 | Param::Theta12 => self.theta1 = Angle::wrapped(value),
            Param::Rho1 | Param::Rho2 => self.rho = value,
            Param::Gamma => self.gamma = Some(Angle::wrapped(value)),
            Param::DeltaX | Param::DeltaY => {}
        }
    }
}

/// Model variant, censoring thresholds and prior settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: ModelVariant,
    pub delta_x: f64,
    pub delta_y: f64,
    #[serde(default)]
    pub estimate_deltas: bool,
    /// Shape of the symmetric Beta prior on each `ρ`.
    #[serde(default = "default_a_rho")]
    pub a_rho: f64,
    /// Fix `|b1| = 1`: stage 2 becomes a pure location model for `X*`.
    #[serde(default)]
    pub unit_b1: bool,
    /// Stage-1 rotation `β0 γ^W` for the binary group indicator `W`.
    #[serde(default)]
    pub group_effect: bool,
    #[serde(default)]
    pub latent_x_mode: LatentXMode,
}

fn default_a_rho() -> f64 {
    2.0
}

impl ModelSpec {
    /// Spec for `variant` with thresholds zeroed where the variant does not
    /// model censoring.
    pub fn for_variant(variant: ModelVariant, delta_x: f64, delta_y: f64) -> Self {
        ModelSpec {
            variant,
            delta_x: if variant.censors_x() { delta_x } else { 0.0 },
            delta_y: if variant.censors_y() { delta_y } else { 0.0 },
            estimate_deltas: false,
            a_rho: default_a_rho(),
            unit_b1: false,
            group_effect: false,
            latent_x_mode: LatentXMode::Literal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_rho > 1.0) {
            return Err(Error::invalid(format!("a_rho must exceed 1, got {}", self.a_rho)));
        }
        for (name, d) in [("delta_x", self.delta_x), ("delta_y", self.delta_y)] {
            if !(0.0..PI).contains(&d) {
                return Err(Error::invalid(format!("{name} must lie in [0, π), got {d}")));
            }
        }
        if !self.variant.censors_x() && self.delta_x != 0.0 {
            return Err(Error::invalid(format!("model {} requires delta_x = 0", self.variant)));
        }
        if !self.variant.censors_y() && self.delta_y != 0.0 {
            return Err(Error::invalid(format!("model {} requires delta_y = 0", self.variant)));
        }
        Ok(())
    }

    pub fn is_special(&self) -> bool {
        self.variant == ModelVariant::SpecialCase
    }

    /// Parameters the sampler updates, in sweep order.
    pub fn free_params(&self) -> Vec<Param> {
        Param::ALL
            .into_iter()
            .filter(|&p| match p {
                Param::Theta01 | Param::Theta11 | Param::Theta12 => !self.is_special(),
                Param::Theta02 => !self.is_special() && !self.unit_b1,
                Param::R2 => !self.unit_b1,
                Param::Gamma => self.group_effect,
                Param::DeltaX => self.estimate_deltas && self.variant.censors_x(),
                Param::DeltaY => self.estimate_deltas && self.variant.censors_y(),
                _ => true,
            })
            .collect()
    }

    pub fn delta(&self, stage: Stage) -> f64 {
        match stage {
            Stage::One => self.delta_y,
            Stage::Two => self.delta_x,
        }
    }
}

/// One record `(θ_V, θ_X, θ_Y)` with an optional binary group indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub theta_v: Angle,
    pub theta_x: Angle,
    pub theta_y: Angle,
    pub group: Option<bool>,
}

impl Observation {
    pub fn new(theta_v: f64, theta_x: f64, theta_y: f64) -> Result<Self> {
        Ok(Observation {
            theta_v: Angle::new(theta_v)?,
            theta_x: Angle::new(theta_x)?,
            theta_y: Angle::new(theta_y)?,
            group: None,
        })
    }

    pub fn w(&self) -> bool {
        self.group.unwrap_or(false)
    }
}

/// A record is censored when its observed angle is exactly zero and the
/// window is open.
#[inline]
pub fn is_censored(observed: Angle, delta: f64) -> bool {
    delta > 0.0 && observed.is_zero()
}

/// Observation map: zero inside `(-δ, δ)`, identity outside.
pub fn censor(theta_star: Angle, delta: f64) -> Angle {
    if theta_star.radians().abs() < delta {
        Angle::ZERO
    } else {
        theta_star
    }
}

/// Latent angles `θ_X*` and `θ_Y*`, one per record.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub theta_x_star: Vec<Angle>,
    pub theta_y_star: Vec<Angle>,
}

impl LatentState {
    /// Observed values for uncensored records, zero for censored ones.
    pub fn from_data(data: &[Observation]) -> Self {
        LatentState {
            theta_x_star: data.iter().map(|o| o.theta_x).collect(),
            theta_y_star: data.iter().map(|o| o.theta_y).collect(),
        }
    }

    /// Checks latents against the censoring pattern of `data` under `spec`.
    pub fn check(&self, data: &[Observation], spec: &ModelSpec) -> Result<()> {
        if self.theta_x_star.len() != data.len() || self.theta_y_star.len() != data.len() {
            return Err(Error::invalid("latent state length differs from data"));
        }
        for (i, o) in data.iter().enumerate() {
            for (obs, lat, delta) in [
                (o.theta_x, self.theta_x_star[i], spec.delta_x),
                (o.theta_y, self.theta_y_star[i], spec.delta_y),
            ] {
                if is_censored(obs, delta) {
                    if lat.radians().abs() >= delta {
                        return Err(Error::invalid(format!(
                            "record {i}: latent {lat} outside censoring window ±{delta}"
                        )));
                    }
                } else if lat != obs {
                    return Err(Error::invalid(format!(
                        "record {i}: latent {lat} differs from uncensored observation {obs}"
                    )));
                }
                if !obs.is_zero() && obs.radians().abs() < delta {
                    return Err(Error::invalid(format!(
                        "record {i}: nonzero observation {obs} inside censoring window ±{delta}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Predicted stage-1 mean direction at latent covariate `x_star`.
pub fn stage1_mean(params: &StageParams, x_star: UnitComplex, w: bool) -> Result<Angle> {
    Ok(params.link_for(w).apply(x_star)?.arg())
}

/// Predicted stage-2 mean direction at instrument `v`.
pub fn stage2_mean(params: &StageParams, v: UnitComplex) -> Result<Angle> {
    Ok(params.link().apply(v)?.arg())
}

#[inline]
pub(crate) fn ln_wc(cos_dev: f64, rho: f64) -> f64 {
    let r2 = rho * rho;
    ((1.0 - r2) / TAU).ln() - (1.0 + r2 - 2.0 * rho * cos_dev).ln()
}

/// Log prior density of one stage's parameters (up to a constant).
///
/// Flat on the angles and `γ`, `e^{-r²}` on `r` (uniform on `[-1, 1]` in the
/// special case), and `ρ^{a-1}(1-ρ)^{a-1}` on `ρ`. A fixed `|b1| = 1`
/// contributes nothing.
pub fn log_prior(params: &StageParams, stage: Stage, spec: &ModelSpec) -> f64 {
    let rho = params.rho;
    if !(rho > 0.0 && rho < 1.0) {
        return f64::NEG_INFINITY;
    }
    let lp_rho = (spec.a_rho - 1.0) * (rho.ln() + (1.0 - rho).ln());
    let lp_r = if stage == Stage::Two && spec.unit_b1 {
        0.0
    } else if spec.is_special() {
        if (-1.0..=1.0).contains(&params.r) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else if params.r >= 0.0 {
        -params.r * params.r
    } else {
        f64::NEG_INFINITY
    };
    lp_rho + lp_r
}

/// Augmented log-likelihood of one stage: `Σ log f_W(θ*_i; μ_i, ρ)`.
///
/// On the augmented space the censored contribution `K f_TW(θ*)` equals the
/// plain wrapped Cauchy density at the latent value, so only window
/// membership of the latents is checked.
pub fn log_augmented_likelihood(
    stage: Stage,
    params: &StageParams,
    latent: &LatentState,
    data: &[Observation],
    spec: &ModelSpec,
) -> Result<f64> {
    latent.check(data, spec)?;
    if !(params.rho >= 0.0 && params.rho < 1.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let mut total = 0.0;
    for (i, o) in data.iter().enumerate() {
        let (response, mean) = match stage {
            Stage::One => (
                latent.theta_y_star[i],
                stage1_mean(params, latent.theta_x_star[i].to_unit(), o.w())?,
            ),
            Stage::Two => (latent.theta_x_star[i], stage2_mean(params, o.theta_v.to_unit())?),
        };
        total += ln_wc((response - mean).radians().cos(), params.rho);
    }
    Ok(total)
}

/// Log full conditional of one stage's parameter block, up to a constant.
pub fn log_full_conditional(
    stage: Stage,
    params: &StageParams,
    latent: &LatentState,
    data: &[Observation],
    spec: &ModelSpec,
) -> Result<f64> {
    let lp = log_prior(params, stage, spec);
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(lp + log_augmented_likelihood(stage, params, latent, data, spec)?)
}

/// Full conditional of a single latent angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LatentConditional {
    PointMass(Angle),
    Truncated(TruncatedWrappedCauchy),
}

/// Full conditional of `θ_X*` (stage 2) or `θ_Y*` (stage 1) for record `i`:
/// a point mass at the observation for uncensored records, otherwise the
/// wrapped Cauchy of that stage truncated to the censoring window.
pub fn latent_full_conditional(
    stage: Stage,
    params1: &StageParams,
    params2: &StageParams,
    latent: &LatentState,
    data: &[Observation],
    spec: &ModelSpec,
    i: usize,
) -> Result<LatentConditional> {
    let o = data
        .get(i)
        .ok_or_else(|| Error::invalid(format!("record index {i} out of range")))?;
    let (observed, delta) = match stage {
        Stage::One => (o.theta_y, spec.delta_y),
        Stage::Two => (o.theta_x, spec.delta_x),
    };
    if !is_censored(observed, delta) {
        return Ok(LatentConditional::PointMass(observed));
    }
    let (mu, rho) = match stage {
        Stage::One => (
            stage1_mean(params1, latent.theta_x_star[i].to_unit(), o.w())?,
            params1.rho,
        ),
        Stage::Two => (stage2_mean(params2, o.theta_v.to_unit())?, params2.rho),
    };
    let base = WrappedCauchy::new(mu, rho)?;
    Ok(LatentConditional::Truncated(TruncatedWrappedCauchy::symmetric(base, delta)?))
}
