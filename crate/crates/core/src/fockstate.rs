//! Truncated Fock-diagonal density matrices.

use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, check_unit_interval, Error, Result};
use crate::specfun::ln_factorials;

/// Default bound on the probability mass a truncation may discard.
pub const DEFAULT_TRUNCATION_TOLERANCE: f64 = 1e-10;

/// Largest cutoff chosen automatically.
pub const MAX_AUTO_CUTOFF: usize = 512;

const NORMALIZATION_SLACK: f64 = 1e-12;

/// Parametric amplifier gain `λ`; the twin-beam amplitude ratio is `ξ = tanh λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainParams {
    lambda: f64,
}

impl GainParams {
    pub fn new(lambda: f64) -> Result<Self> {
        check_nonnegative("lambda", lambda)?;
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn xi(&self) -> f64 {
        self.lambda.tanh()
    }

    pub fn xi_squared(&self) -> f64 {
        let xi = self.xi();
        xi * xi
    }

    /// Mean photon number per beam, `sinh² λ`.
    pub fn mean_photons(&self) -> f64 {
        let s = self.lambda.sinh();
        s * s
    }

    /// Smallest cutoff whose geometric tail `ξ^{2(n+1)}` is below `tolerance`,
    /// capped at [`MAX_AUTO_CUTOFF`].
    pub fn auto_cutoff(&self, tolerance: f64) -> usize {
        geometric_cutoff(self.xi_squared(), tolerance)
    }
}

/// Smallest `n` with `ratio^{n+1} < tolerance`, capped at [`MAX_AUTO_CUTOFF`].
pub fn geometric_cutoff(ratio: f64, tolerance: f64) -> usize {
    if ratio <= 0.0 {
        return 0;
    }
    if ratio >= 1.0 {
        return MAX_AUTO_CUTOFF;
    }
    let n = (tolerance.ln() / ratio.ln()).ceil() as i64 - 1;
    let mut n = n.max(0) as usize;
    // guard against rounding in the logarithms
    while n < MAX_AUTO_CUTOFF && ratio.powi(n as i32 + 1) >= tolerance {
        n += 1;
    }
    n.min(MAX_AUTO_CUTOFF)
}

/// A density matrix diagonal in the photon-number basis, truncated at `cutoff`.
///
/// The mass lost to truncation is kept in `trace_deficit` rather than
/// renormalised away.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDiagonalState {
    weights: Vec<f64>,
    trace_deficit: f64,
}

/// Plain record used to exchange states between implementations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockRecord {
    pub cutoff: usize,
    pub weights: Vec<f64>,
}

impl FockDiagonalState {
    /// Builds a state from photon-number probabilities `weights[0..=cutoff]`.
    /// The missing mass `1 − Σ weights` must not exceed `tolerance`.
    pub fn from_weights(weights: Vec<f64>, tolerance: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("state needs at least one weight".into()));
        }
        if let Some((n, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidParameter(format!("weight[{n}] = {w} is not a probability")));
        }
        let total: f64 = weights.iter().sum();
        let deficit = 1.0 - total;
        if deficit < -NORMALIZATION_SLACK {
            return Err(Error::InvalidParameter(format!("weights sum to {total} > 1")));
        }
        let deficit = deficit.max(0.0);
        if deficit > tolerance {
            return Err(Error::CutoffTooSmall {
                cutoff: weights.len() - 1,
                deficit,
                tolerance,
            });
        }
        Ok(Self {
            weights,
            trace_deficit: deficit,
        })
    }

    pub fn vacuum(cutoff: usize) -> Self {
        let mut weights = vec![0.0; cutoff + 1];
        weights[0] = 1.0;
        Self {
            weights,
            trace_deficit: 0.0,
        }
    }

    /// `|n⟩⟨n|` truncated at `cutoff`.
    pub fn number_state(n: usize, cutoff: usize) -> Result<Self> {
        if n > cutoff {
            return Err(Error::PhotonNumberAboveCutoff { n, cutoff });
        }
        let mut weights = vec![0.0; cutoff + 1];
        weights[n] = 1.0;
        Ok(Self {
            weights,
            trace_deficit: 0.0,
        })
    }

    /// Reduced state of either twin-beam mode: `(1−ξ²) ξ^{2n}`.
    pub fn twin_beam_reduced(gain: GainParams, cutoff: usize) -> Result<Self> {
        let ratio = gain.xi_squared();
        Self::geometric(1.0 - ratio, ratio, cutoff)
    }

    /// Thermal state with mean photon number `mean`: `M^n / (M+1)^{n+1}`.
    pub fn thermal(mean: f64, cutoff: usize) -> Result<Self> {
        check_nonnegative("thermal mean", mean)?;
        let ratio = mean / (mean + 1.0);
        Self::geometric(1.0 / (mean + 1.0), ratio, cutoff)
    }

    fn geometric(first: f64, ratio: f64, cutoff: usize) -> Result<Self> {
        let mut weights = Vec::with_capacity(cutoff + 1);
        let mut w = first;
        for _ in 0..=cutoff {
            weights.push(w);
            w *= ratio;
        }
        // analytic tail ratio^{cutoff+1}
        let tail = ratio.powi(cutoff as i32 + 1);
        if tail > DEFAULT_TRUNCATION_TOLERANCE {
            return Err(Error::CutoffTooSmall {
                cutoff,
                deficit: tail,
                tolerance: DEFAULT_TRUNCATION_TOLERANCE,
            });
        }
        Self::from_weights(weights, DEFAULT_TRUNCATION_TOLERANCE)
    }

    /// Phase-averaged coherent state (Poisson statistics) with mean `mean`.
    pub fn phase_averaged_coherent(mean: f64, cutoff: usize) -> Result<Self> {
        check_nonnegative("coherent mean", mean)?;
        if mean == 0.0 {
            return Ok(Self::vacuum(cutoff));
        }
        let lnf = ln_factorials(cutoff);
        let ln_mean = mean.ln();
        let weights = (0..=cutoff)
            .map(|n| (-mean + n as f64 * ln_mean - lnf[n]).exp())
            .collect();
        Self::from_weights(weights, DEFAULT_TRUNCATION_TOLERANCE)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, n: usize) -> f64 {
        self.weights.get(n).copied().unwrap_or(0.0)
    }

    pub fn cutoff(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.weights.iter().enumerate().map(|(n, w)| n as f64 * w).sum()
    }

    /// Photon loss through a beam splitter of transmissivity `eta`:
    /// `w'[m] = Σ_{n≥m} w[n] C(n,m) η^m (1−η)^{n−m}`.
    pub fn loss_channel(&self, eta: f64) -> Result<Self> {
        check_unit_interval("eta", eta, true)?;
        if eta == 1.0 {
            return Ok(self.clone());
        }
        let cutoff = self.cutoff();
        if eta == 0.0 {
            let mut weights = vec![0.0; cutoff + 1];
            weights[0] = self.weights.iter().sum();
            return Ok(Self {
                weights,
                trace_deficit: self.trace_deficit,
            });
        }
        let lnf = ln_factorials(cutoff);
        let ln_eta = eta.ln();
        let ln_loss = (1.0 - eta).ln();
        let mut weights = vec![0.0; cutoff + 1];
        for (n, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (m, out) in weights.iter_mut().enumerate().take(n + 1) {
                let ln_binom = lnf[n] - lnf[m] - lnf[n - m];
                *out += w * (ln_binom + m as f64 * ln_eta + (n - m) as f64 * ln_loss).exp();
            }
        }
        Ok(Self {
            weights,
            trace_deficit: self.trace_deficit,
        })
    }

    /// Same state with the basis extended (zero weights) or checked-truncated
    /// to `cutoff`.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        let mut weights = self.weights.clone();
        if cutoff >= self.cutoff() {
            weights.resize(cutoff + 1, 0.0);
            return Ok(Self {
                weights,
                trace_deficit: self.trace_deficit,
            });
        }
        weights.truncate(cutoff + 1);
        let dropped: f64 = self.weights[cutoff + 1..].iter().sum();
        let deficit = self.trace_deficit + dropped;
        if deficit > DEFAULT_TRUNCATION_TOLERANCE {
            return Err(Error::CutoffTooSmall {
                cutoff,
                deficit,
                tolerance: DEFAULT_TRUNCATION_TOLERANCE,
            });
        }
        Ok(Self {
            weights,
            trace_deficit: deficit,
        })
    }

    pub(crate) fn from_parts_unchecked(weights: Vec<f64>, trace_deficit: f64) -> Self {
        Self {
            weights,
            trace_deficit,
        }
    }

    pub fn to_record(&self) -> FockRecord {
        FockRecord {
            cutoff: self.cutoff(),
            weights: self.weights.clone(),
        }
    }

    pub fn from_record(record: FockRecord, tolerance: f64) -> Result<Self> {
        if record.weights.len() != record.cutoff + 1 {
            return Err(Error::InvalidParameter(format!(
                "record has {} weights for cutoff {}",
                record.weights.len(),
                record.cutoff
            )));
        }
        Self::from_weights(record.weights, tolerance)
    }
}
