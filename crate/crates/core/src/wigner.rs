//! s-ordered Wigner functions at the phase-space origin.
//!
//! For a Fock-diagonal state `W_s(0) = Tr[ρ Ŵ_s]` with the diagonal operator
//! `Ŵ_s = (2/π) (1/(1−s)) ((s+1)/(s−1))^{a†a}`. The truncated trace is the
//! reference for every closed form in this module.

use std::f64::consts::FRAC_2_PI;

use crate::detection::{herald_twin_beam, p1_ideal_closed, p1_poisson_closed, DarkCounts};
use crate::error::{check_nonnegative, check_unit_interval, Error, Result};
use crate::fockstate::{FockDiagonalState, GainParams};

/// Tail tolerance used when a theory value is computed by truncated trace.
pub const THEORY_TRUNCATION_TOLERANCE: f64 = 1e-15;

/// Default bisection tolerance for the nonclassicality index.
pub const DEFAULT_INDEX_TOLERANCE: f64 = 1e-4;

fn check_ordering(s: f64) -> Result<()> {
    if s.is_finite() && (-1.0..1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("ordering parameter s = {s} outside [-1, 1)")))
    }
}

/// Diagonal of `Ŵ_s` in the photon-number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WsOperatorDiag {
    s: f64,
    diag: Vec<f64>,
}

impl WsOperatorDiag {
    pub fn new(s: f64, cutoff: usize) -> Result<Self> {
        check_ordering(s)?;
        let ratio = (s + 1.0) / (s - 1.0);
        let mut value = FRAC_2_PI / (1.0 - s);
        let mut diag = Vec::with_capacity(cutoff + 1);
        for _ in 0..=cutoff {
            diag.push(value);
            value *= ratio;
        }
        Ok(Self { s, diag })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn cutoff(&self) -> usize {
        self.diag.len() - 1
    }
}

/// Largest admissible magnitude of the last term of a trace sum when `Ŵ_s`
/// grows with `n` (`s > 0`).
const DIVERGENT_TAIL_TOLERANCE: f64 = 1e-12;

/// `W_s(0) = Σ_n ρ_nn (2/π)(1/(1−s))((s+1)/(s−1))^n`.
///
/// For `s > 0` the operator diagonal grows like `((1+s)/(1−s))^n`; the sum is
/// rejected if the final term of the truncated state is not negligible.
pub fn ws_origin_trace(state: &FockDiagonalState, s: f64) -> Result<f64> {
    let op = WsOperatorDiag::new(s, state.cutoff())?;
    let terms = state.weights().iter().zip(op.diag()).map(|(w, d)| w * d);
    if s > 0.0 {
        let last = op.cutoff();
        let tail = state.weight(last) * op.diag()[last].abs();
        if tail > DIVERGENT_TAIL_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "W_s(0) trace sum does not converge at s = {s} for this state (tail term {tail:.3e})"
            )));
        }
    }
    Ok(terms.sum())
}

/// Cutoff at which trace sums over a twin beam heralded with efficiency
/// `eta_a` are converged to `tolerance`, or `None` when they diverge
/// (`ξ² (1+s)/(1−s) ≥ 1`).
///
/// Heralded weights are bounded by `(1−ξ²) ξ^{2n} / P₁`; dark counts only
/// raise `P₁`, so the dark-free click probability gives a valid bound.
pub fn heralded_trace_cutoff(gain: GainParams, eta_a: f64, s: f64, tolerance: f64) -> Option<usize> {
    let xi2 = gain.xi_squared();
    if xi2 == 0.0 {
        return Some(0);
    }
    let growth = ((1.0 + s) / (1.0 - s)).abs().max(1.0);
    let ratio = xi2 * growth;
    if ratio >= 1.0 {
        return None;
    }
    let scale = FRAC_2_PI / (1.0 - s) * (1.0 - xi2) * growth / (p1_ideal_closed(gain, eta_a) * (1.0 - ratio));
    let n = crate::fockstate::geometric_cutoff(ratio, tolerance / scale.max(1.0));
    (n < crate::fockstate::MAX_AUTO_CUTOFF).then_some(n)
}

fn check_gain_for_herald(gain: GainParams) -> Result<()> {
    if gain.lambda() > 0.0 {
        Ok(())
    } else {
        Err(Error::ZeroClickProbability)
    }
}

/// Wigner function at the origin of the dark-count-free heralded state:
/// `−(2/π) (1−ξ²)/(1+ξ²) · (1−ξ²(1−η))/(1+ξ²(1−η))`.
pub fn w0_ideal(gain: GainParams, eta_a: f64) -> Result<f64> {
    ws0_ideal(gain, eta_a, 0.0)
}

/// `W_s(0)` of the dark-count-free heralded state:
/// `−(2(1+s)/π) (1−ξ²)/[(1−s)+ξ²(1+s)] · (1−ξ²(1−η))/[(1−s)+ξ²(1+s)(1−η)]`.
pub fn ws0_ideal(gain: GainParams, eta_a: f64, s: f64) -> Result<f64> {
    check_ordering(s)?;
    check_unit_interval("eta_a", eta_a, false)?;
    check_gain_for_herald(gain)?;
    let xi2 = gain.xi_squared();
    let loss = 1.0 - eta_a;
    let a = (1.0 - s) + xi2 * (1.0 + s);
    let b = (1.0 - s) + xi2 * (1.0 + s) * loss;
    Ok(-FRAC_2_PI * (1.0 + s) * (1.0 - xi2) / a * (1.0 - xi2 * loss) / b)
}

/// `W_s(0)` of the heralded state with a Poissonian background of mean `N`,
/// computed as the truncated trace of the heralded state.
pub fn ws0_dark(gain: GainParams, eta_a: f64, s: f64, n_dark: f64) -> Result<f64> {
    check_ordering(s)?;
    check_nonnegative("N", n_dark)?;
    if gain.lambda() == 0.0 && n_dark == 0.0 {
        return Err(Error::ZeroClickProbability);
    }
    let cutoff = heralded_trace_cutoff(gain, eta_a, s, THEORY_TRUNCATION_TOLERANCE).ok_or_else(|| {
        Error::InvalidParameter(format!("W_s(0) trace sum diverges at s = {s}, lambda = {}", gain.lambda()))
    })?;
    let out = herald_twin_beam(gain, eta_a, DarkCounts::poisson(n_dark), cutoff)?;
    ws_origin_trace(&out.conditional, s)
}

/// Closed form of [`ws0_dark`]:
///
/// `(2(1−ξ²)/(π P₁)) { 1/A − exp(−N A/B) / B }` with
/// `A = (1−s)+ξ²(1+s)` and `B = (1−s)+ξ²(1+s)(1−η)`, where `P₁` is the
/// Poissonian click probability. Summed from the Laguerre generating function.
pub fn ws0_dark_closed(gain: GainParams, eta_a: f64, s: f64, n_dark: f64) -> Result<f64> {
    check_ordering(s)?;
    check_unit_interval("eta_a", eta_a, false)?;
    check_nonnegative("N", n_dark)?;
    if gain.lambda() == 0.0 && n_dark == 0.0 {
        return Err(Error::ZeroClickProbability);
    }
    let xi2 = gain.xi_squared();
    let a = (1.0 - s) + xi2 * (1.0 + s);
    let b = (1.0 - s) + xi2 * (1.0 + s) * (1.0 - eta_a);
    let p1 = p1_poisson_closed(gain, eta_a, n_dark);
    Ok(FRAC_2_PI * (1.0 - xi2) / p1 * (1.0 / a - (-n_dark * a / b).exp() / b))
}

/// Location of the sign change of `W_s(0)` over `s ∈ [−1, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonclassicalityIndex {
    /// `W_s(0) ≥ 0` for `s` below this value and negative just above it.
    Threshold(f64),
    /// `W_s(0) ≥ 0` on all of `[−1, 0]`.
    ClassicalAtOrigin,
}

impl NonclassicalityIndex {
    pub fn value(&self) -> Option<f64> {
        match self {
            NonclassicalityIndex::Threshold(s) => Some(*s),
            NonclassicalityIndex::ClassicalAtOrigin => None,
        }
    }
}

/// Lowest ordering `s⋆ ∈ [−1, 0]` at which `W_s(0)` turns negative.
///
/// `W_{−1}(0) = ρ₀₀/π` is never negative, so a coarse scan upward from
/// `s = −1` brackets the first sign change, which is then bisected to
/// `tolerance`.
pub fn nonclassicality_index(state: &FockDiagonalState, tolerance: f64) -> Result<NonclassicalityIndex> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidParameter("index tolerance must be > 0".into()));
    }
    const SCAN_STEPS: usize = 100;
    let op_at = |s: f64| ws_origin_trace(state, s);
    let mut lo = -1.0;
    let mut bracket = None;
    for k in 1..=SCAN_STEPS {
        let s = -1.0 + k as f64 / SCAN_STEPS as f64;
        if op_at(s)? < 0.0 {
            bracket = Some((lo, s));
            break;
        }
        lo = s;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(NonclassicalityIndex::ClassicalAtOrigin);
    };
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if op_at(mid)? < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(NonclassicalityIndex::Threshold(0.5 * (lo + hi)))
}
