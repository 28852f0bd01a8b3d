//! On/off photodetector POVMs, click probabilities and heralded states.
//!
//! A POVM here is the diagonal of the no-click element `Π₀`; the click element
//! is always `1 − Π₀` and never stored.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, check_unit_interval, Error, Result};
use crate::fockstate::{FockDiagonalState, GainParams, DEFAULT_TRUNCATION_TOLERANCE};
use crate::specfun::{laguerre, ln_factorials, scaled_laguerre_sequence};

/// Below this distance from unit efficiency the Poissonian dark POVM uses its
/// `η → 1` limit `e^{−N} N^n / n!`.
pub const POISSON_UNIT_EFFICIENCY_EPS: f64 = 1e-8;

/// Slack allowed when clamping rounding noise on POVM elements into [0, 1].
const ELEMENT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DarkModel {
    None,
    Thermal,
    Poisson,
    /// Generic diagonal ancilla supplied by the caller.
    Mixture,
}

impl fmt::Display for DarkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DarkModel::None => "none",
            DarkModel::Thermal => "thermal",
            DarkModel::Poisson => "poisson",
            DarkModel::Mixture => "mixture",
        })
    }
}

impl FromStr for DarkModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(DarkModel::None),
            "thermal" => Ok(DarkModel::Thermal),
            "poisson" => Ok(DarkModel::Poisson),
            other => Err(Error::InvalidParameter(format!(
                "unknown dark model '{other}' (expected none, thermal or poisson)"
            ))),
        }
    }
}

/// Dark-count background: model and mean number of background photons `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkCounts {
    pub model: DarkModel,
    pub mean: f64,
}

impl DarkCounts {
    pub const NONE: DarkCounts = DarkCounts {
        model: DarkModel::None,
        mean: 0.0,
    };

    pub fn thermal(mean: f64) -> Self {
        Self {
            model: DarkModel::Thermal,
            mean,
        }
    }

    pub fn poisson(mean: f64) -> Self {
        Self {
            model: DarkModel::Poisson,
            mean,
        }
    }

    /// `None` model or zero background.
    pub fn is_dark_free(&self) -> bool {
        self.model == DarkModel::None || self.mean == 0.0
    }
}

/// Diagonal of the no-click POVM element of an on/off detector.
#[derive(Debug, Clone, PartialEq)]
pub struct OnOffPovm {
    pi0: Vec<f64>,
    eta_a: f64,
    dark_model: DarkModel,
    dark_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmRecord {
    pub cutoff: usize,
    pub pi0: Vec<f64>,
    pub eta_a: f64,
    pub dark_model: DarkModel,
    pub dark_mean: f64,
}

impl OnOffPovm {
    /// Dark-count-free detector: `Π₀ = Σ (1−η)^n |n⟩⟨n|`.
    pub fn ideal(eta_a: f64, cutoff: usize) -> Result<Self> {
        check_unit_interval("eta_a", eta_a, false)?;
        let loss = 1.0 - eta_a;
        let pi0 = (0..=cutoff).map(|n| loss.powi(n as i32)).collect();
        Ok(Self {
            pi0,
            eta_a,
            dark_model: DarkModel::None,
            dark_mean: 0.0,
        })
    }

    /// Ideal detector behind a beam splitter of transmissivity `eta_a` whose
    /// second port carries the diagonal mixture `nu`:
    /// `Π₀[n] = (1−η)^n Σ_s ν_s η^s C(n+s, s)`.
    pub fn from_mixture(nu: &FockDiagonalState, eta_a: f64, cutoff: usize) -> Result<Self> {
        check_unit_interval("eta_a", eta_a, false)?;
        let is_vacuum = nu.weights()[1..].iter().all(|w| *w == 0.0);
        if eta_a == 1.0 {
            if is_vacuum {
                return Self::ideal(eta_a, cutoff);
            }
            return Err(Error::InvalidParameter(
                "generic-mixture POVM needs eta_a < 1 with a non-vacuum ancilla; \
                 use the closed-form dark POVMs"
                    .into(),
            ));
        }
        let lnf = ln_factorials(cutoff + nu.cutoff());
        let ln_loss = (1.0 - eta_a).ln();
        let ln_eta = eta_a.ln();
        let mut pi0 = Vec::with_capacity(cutoff + 1);
        for n in 0..=cutoff {
            let mut acc = 0.0;
            for (s, &w) in nu.weights().iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let ln_binom = lnf[n + s] - lnf[n] - lnf[s];
                acc += w * (n as f64 * ln_loss + s as f64 * ln_eta + ln_binom).exp();
            }
            pi0.push(acc);
        }
        let dark_mean = (1.0 - eta_a) * nu.mean_photon_number();
        Self::checked(pi0, eta_a, if is_vacuum { DarkModel::None } else { DarkModel::Mixture }, dark_mean)
    }

    /// Thermal background of mean `N`:
    /// `Π₀[n] = (1/(1+N)) (1 − η/(1+N))^n`.
    pub fn thermal_dark(n_dark: f64, eta_a: f64, cutoff: usize) -> Result<Self> {
        check_nonnegative("N", n_dark)?;
        check_unit_interval("eta_a", eta_a, false)?;
        let ratio = 1.0 - eta_a / (1.0 + n_dark);
        let first = 1.0 / (1.0 + n_dark);
        let pi0 = (0..=cutoff).map(|n| first * ratio.powi(n as i32)).collect();
        Self::checked(pi0, eta_a, dark_tag(DarkModel::Thermal, n_dark), n_dark)
    }

    /// Poissonian background of mean `N`:
    /// `Π₀[n] = e^{−N} (1−η)^n L_n(−Nη/(1−η))`.
    pub fn poisson_dark(n_dark: f64, eta_a: f64, cutoff: usize) -> Result<Self> {
        check_nonnegative("N", n_dark)?;
        check_unit_interval("eta_a", eta_a, false)?;
        let damping = (-n_dark).exp();
        let seq = if 1.0 - eta_a < POISSON_UNIT_EFFICIENCY_EPS {
            // (1−η)^n L_n(−Nη/(1−η)) → (Nη)^n / n! → N^n / n!
            scaled_laguerre_sequence(cutoff, 0.0, -n_dark)
        } else {
            let loss = 1.0 - eta_a;
            scaled_laguerre_sequence(cutoff, loss, -n_dark * eta_a)
        };
        let pi0 = seq.into_iter().map(|q| damping * q).collect();
        Self::checked(pi0, eta_a, dark_tag(DarkModel::Poisson, n_dark), n_dark)
    }

    /// POVM for a detector with efficiency `eta_a` and the given background.
    pub fn with_dark_counts(dark: DarkCounts, eta_a: f64, cutoff: usize) -> Result<Self> {
        match dark.model {
            DarkModel::None => Self::ideal(eta_a, cutoff),
            DarkModel::Thermal => Self::thermal_dark(dark.mean, eta_a, cutoff),
            DarkModel::Poisson => Self::poisson_dark(dark.mean, eta_a, cutoff),
            DarkModel::Mixture => Err(Error::InvalidParameter(
                "mixture backgrounds need an explicit ancilla state".into(),
            )),
        }
    }

    fn checked(mut pi0: Vec<f64>, eta_a: f64, dark_model: DarkModel, dark_mean: f64) -> Result<Self> {
        for (n, p) in pi0.iter_mut().enumerate() {
            if !p.is_finite() || *p < -ELEMENT_SLACK || *p > 1.0 + ELEMENT_SLACK {
                return Err(Error::InvalidParameter(format!("POVM element pi0[{n}] = {p} outside [0, 1]")));
            }
            *p = p.clamp(0.0, 1.0);
        }
        Ok(Self {
            pi0,
            eta_a,
            dark_model,
            dark_mean,
        })
    }

    pub fn pi0(&self) -> &[f64] {
        &self.pi0
    }

    /// Diagonal of the click element, `1 − Π₀[n]`.
    pub fn click(&self, n: usize) -> f64 {
        1.0 - self.pi0[n]
    }

    pub fn cutoff(&self) -> usize {
        self.pi0.len() - 1
    }

    pub fn eta_a(&self) -> f64 {
        self.eta_a
    }

    pub fn dark_model(&self) -> DarkModel {
        self.dark_model
    }

    pub fn dark_mean(&self) -> f64 {
        self.dark_mean
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.pi0.windows(2).all(|w| w[1] <= w[0] + 1e-15)
    }

    pub fn to_record(&self) -> PovmRecord {
        PovmRecord {
            cutoff: self.cutoff(),
            pi0: self.pi0.clone(),
            eta_a: self.eta_a,
            dark_model: self.dark_model,
            dark_mean: self.dark_mean,
        }
    }

    pub fn from_record(record: PovmRecord) -> Result<Self> {
        if record.pi0.len() != record.cutoff + 1 {
            return Err(Error::InvalidParameter("POVM record length does not match cutoff".into()));
        }
        check_unit_interval("eta_a", record.eta_a, false)?;
        Self::checked(record.pi0, record.eta_a, record.dark_model, record.dark_mean)
    }
}

fn dark_tag(model: DarkModel, mean: f64) -> DarkModel {
    if mean == 0.0 {
        DarkModel::None
    } else {
        model
    }
}

fn check_compatible(state: &FockDiagonalState, povm: &OnOffPovm) -> Result<()> {
    if povm.cutoff() < state.cutoff() {
        return Err(Error::InvalidParameter(format!(
            "POVM cutoff {} below state cutoff {}",
            povm.cutoff(),
            state.cutoff()
        )));
    }
    Ok(())
}

/// `P₁ = 1 − Σ_n ρ_nn Π₀[n]`, with the truncated mass counted as click mass.
///
/// Summed as `Σ_n ρ_nn (1 − Π₀[n]) + deficit`, which avoids cancellation when
/// clicks are rare.
pub fn click_probability(state: &FockDiagonalState, povm: &OnOffPovm) -> Result<f64> {
    check_compatible(state, povm)?;
    let click: f64 = state
        .weights()
        .iter()
        .enumerate()
        .map(|(n, w)| w * povm.click(n))
        .sum();
    Ok((click + state.trace_deficit()).clamp(0.0, 1.0))
}

/// Click probability together with the heralded state.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickOutcome {
    pub p1: f64,
    pub conditional: FockDiagonalState,
}

/// State left in the partner mode after a click: `ρ_nn (1 − Π₀[n]) / P₁`.
///
/// Normalised by the numerically computed `P₁`; the truncated mass divided by
/// `P₁` is recorded as the conditional trace deficit and must stay below the
/// default truncation tolerance.
pub fn conditional_state(state: &FockDiagonalState, povm: &OnOffPovm) -> Result<ClickOutcome> {
    let p1 = click_probability(state, povm)?;
    if p1 <= 0.0 {
        return Err(Error::ZeroClickProbability);
    }
    let weights: Vec<f64> = state
        .weights()
        .iter()
        .enumerate()
        .map(|(n, w)| w * povm.click(n) / p1)
        .collect();
    let total: f64 = weights.iter().sum();
    let deficit = (1.0 - total).max(0.0);
    if deficit > DEFAULT_TRUNCATION_TOLERANCE {
        return Err(Error::CutoffTooSmall {
            cutoff: state.cutoff(),
            deficit,
            tolerance: DEFAULT_TRUNCATION_TOLERANCE,
        });
    }
    Ok(ClickOutcome {
        p1,
        conditional: FockDiagonalState::from_parts_unchecked(weights, deficit),
    })
}

/// Twin-beam mode `a` conditioned on a click of the detector watching mode `b`.
pub fn herald_twin_beam(gain: GainParams, eta_a: f64, dark: DarkCounts, cutoff: usize) -> Result<ClickOutcome> {
    let reduced = FockDiagonalState::twin_beam_reduced(gain, cutoff)?;
    let povm = OnOffPovm::with_dark_counts(dark, eta_a, cutoff)?;
    conditional_state(&reduced, &povm)
}

// Closed forms for the twin-beam input. These are reference values; the
// simulation itself always goes through the truncated sums above.

fn herald_denominator(xi2: f64, eta_a: f64) -> f64 {
    1.0 - xi2 * (1.0 - eta_a)
}

/// `P₁ = η ξ² / (1 − ξ²(1−η))` without dark counts.
pub fn p1_ideal_closed(gain: GainParams, eta_a: f64) -> f64 {
    let xi2 = gain.xi_squared();
    eta_a * xi2 / herald_denominator(xi2, eta_a)
}

/// `P₁ᵗ = 1 − (1−ξ²) / [(1+N)(1−ξ²) + η ξ²]`.
pub fn p1_thermal_closed(gain: GainParams, eta_a: f64, n_dark: f64) -> f64 {
    let xi2 = gain.xi_squared();
    let vac = 1.0 - xi2;
    (eta_a * xi2 + n_dark * vac) / (herald_denominator(xi2, eta_a) + n_dark * vac)
}

/// `P₁ᵖ = 1 − k e^{−N k}` with `k = (1−ξ²) / (1 − ξ²(1−η))`.
pub fn p1_poisson_closed(gain: GainParams, eta_a: f64, n_dark: f64) -> f64 {
    let xi2 = gain.xi_squared();
    let d = herald_denominator(xi2, eta_a);
    let k = (1.0 - xi2) / d;
    eta_a * xi2 / d - k * (-n_dark * k).exp_m1()
}

pub fn p1_closed(gain: GainParams, eta_a: f64, dark: DarkCounts) -> Result<f64> {
    match dark.model {
        DarkModel::None => Ok(p1_ideal_closed(gain, eta_a)),
        DarkModel::Thermal => Ok(p1_thermal_closed(gain, eta_a, dark.mean)),
        DarkModel::Poisson => Ok(p1_poisson_closed(gain, eta_a, dark.mean)),
        DarkModel::Mixture => Err(Error::InvalidParameter("no closed form for a generic mixture".into())),
    }
}

/// Coefficient of `N` shared by both dark models: `(1−ξ²)² / [1 − ξ²(1−η)]²`.
pub fn p1_first_order_slope(gain: GainParams, eta_a: f64) -> f64 {
    let xi2 = gain.xi_squared();
    let r = (1.0 - xi2) / herald_denominator(xi2, eta_a);
    r * r
}

/// First-order expansion of either dark-count click probability in `N`.
pub fn p1_first_order(gain: GainParams, eta_a: f64, n_dark: f64) -> f64 {
    p1_ideal_closed(gain, eta_a) + p1_first_order_slope(gain, eta_a) * n_dark
}

/// `|P₁ᵗ(N) − P₁ᵖ(N)| / N²`; stays finite as `N → 0` because the two models
/// agree to first order.
pub fn dark_model_first_order_gap(gain: GainParams, eta_a: f64, n_dark: f64) -> Result<f64> {
    if !(n_dark > 0.0 && n_dark.is_finite()) {
        return Err(Error::InvalidParameter(format!("N = {n_dark} must be > 0")));
    }
    check_unit_interval("eta_a", eta_a, false)?;
    let xi2 = gain.xi_squared();
    let k = (1.0 - xi2) / herald_denominator(xi2, eta_a);
    let u = n_dark * k;
    // no-click probabilities: k e^{−u} (Poisson) and k / (1+u) (thermal)
    let diff = (-u).exp_m1() + u / (1.0 + u);
    Ok(k * diff.abs() / (n_dark * n_dark))
}

/// Heralded twin-beam weights, `(1−ξ²) ξ^{2n} [1 − e^{−N}(1−η)^n L_n(−Nη/(1−η))] / P₁ᵖ`,
/// evaluated term by term (`N = 0` gives the dark-count-free state).
pub fn heralded_weights_closed(gain: GainParams, eta_a: f64, n_dark: f64, cutoff: usize) -> Vec<f64> {
    let xi2 = gain.xi_squared();
    let p1 = p1_poisson_closed(gain, eta_a, n_dark);
    let loss = 1.0 - eta_a;
    (0..=cutoff)
        .map(|n| {
            let no_click = if n_dark == 0.0 {
                loss.powi(n as i32)
            } else if loss == 0.0 {
                (-n_dark).exp() * n_dark.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>()
            } else {
                (-n_dark).exp() * loss.powi(n as i32) * laguerre(n, -n_dark * eta_a / loss)
            };
            (1.0 - xi2) * xi2.powi(n as i32) * (1.0 - no_click) / p1
        })
        .collect()
}
