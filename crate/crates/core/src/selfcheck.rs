//! Built-in consistency checks: the pdf × kernel identity that locks the
//! quadrature convention, POVM reductions, and closed forms against truncated
//! sums.

use std::f64::consts::FRAC_1_PI;

use crate::detection::{
    click_probability, herald_twin_beam, p1_closed, DarkCounts, OnOffPovm,
};
use crate::error::Result;
use crate::fockstate::{FockDiagonalState, GainParams};
use crate::homodyne::QuadratureDensity;
use crate::tomography::Kernel;
use crate::wigner::{
    heralded_trace_cutoff, nonclassicality_index, ws0_dark_closed, ws0_ideal, ws_origin_trace,
    NonclassicalityIndex,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfcheckOptions {
    /// Multiplies the kernel constant; anything but 1 must make the
    /// quadrature identity fail.
    pub kernel_scale: f64,
    /// Cutoff used for the truncation check at `λ = 1.2` (auto when `None`).
    pub truncation_cutoff: Option<usize>,
}

impl Default for SelfcheckOptions {
    fn default() -> Self {
        Self {
            kernel_scale: 1.0,
            truncation_cutoff: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// `∫ p_η(x) R_η[Ŵ_s](x) dx` by composite Simpson over the density support.
pub fn integrate_pdf_kernel(state: &FockDiagonalState, s: f64, eta_h: f64, kernel_scale: f64) -> Result<f64> {
    let kernel = Kernel::new(s, eta_h)?.perturbed(kernel_scale);
    let density = QuadratureDensity::new(state, eta_h)?;
    let half = density.support();
    let intervals = 8000;
    let h = 2.0 * half / intervals as f64;
    let f = |x: f64| density.pdf(x) * kernel.eval(x);
    let mut acc = f(-half) + f(half);
    for i in 1..intervals {
        let x = -half + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    Ok(acc * h / 3.0)
}

/// `(s, η_h)` pairs with `s < 1 − 1/η_h`.
pub const IDENTITY_GRID: [(f64, f64); 6] = [(-1.0, 1.0), (-0.3, 1.0), (-0.5, 0.7), (-0.3, 0.8), (-0.4, 0.75), (-0.9, 0.6)];

/// States probed by the quadrature identity.
pub fn identity_states() -> Result<Vec<(&'static str, FockDiagonalState)>> {
    let gain = GainParams::new(0.5)?;
    let herald = herald_twin_beam(gain, 0.6, DarkCounts::NONE, gain.auto_cutoff(1e-15))?;
    Ok(vec![
        ("vacuum", FockDiagonalState::vacuum(0)),
        ("fock1", FockDiagonalState::number_state(1, 1)?),
        ("thermal(0.5)", FockDiagonalState::thermal(0.5, 80)?),
        ("herald(0.5,0.6)", herald.conditional),
    ])
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn worst<I: IntoIterator<Item = Result<f64>>>(values: I) -> Result<f64> {
    let mut w: f64 = 0.0;
    for v in values {
        w = w.max(v?);
    }
    Ok(w)
}

pub fn run(options: SelfcheckOptions) -> Vec<CheckResult> {
    let mut results = Vec::new();

    results.push(check("quadrature identity", || {
        let states = identity_states()?;
        let mut errs = Vec::new();
        for (_, state) in &states {
            for (s, eta) in IDENTITY_GRID {
                let integral = integrate_pdf_kernel(state, s, eta, options.kernel_scale)?;
                errs.push(Ok((integral - ws_origin_trace(state, s)?).abs()));
            }
        }
        let w = worst(errs)?;
        Ok((w < 1e-6, format!("max |∫p·R − Tr[ρ W_s]| = {w:.3e} (tol 1e-6)")))
    }));

    results.push(check("vacuum Q(0) = 1/pi", || {
        let v = integrate_pdf_kernel(&FockDiagonalState::vacuum(0), -1.0, 1.0, options.kernel_scale)?;
        let err = (v - FRAC_1_PI).abs();
        Ok((err < 1e-6, format!("|∫p·R − 1/π| = {err:.3e} (tol 1e-6)")))
    }));

    results.push(check("mixture POVM reductions", || {
        let cutoff = 40;
        let mut errs = Vec::new();
        for eta in [0.3, 0.6, 0.9] {
            let vac = OnOffPovm::from_mixture(&FockDiagonalState::vacuum(0), eta, cutoff)?;
            let ideal = OnOffPovm::ideal(eta, cutoff)?;
            errs.push(Ok(max_diff(vac.pi0(), ideal.pi0())));
            for n in [0.01, 0.05, 0.1] {
                let m = n / (1.0 - eta);
                let th = OnOffPovm::from_mixture(&FockDiagonalState::thermal(m, 400)?, eta, cutoff)?;
                errs.push(Ok(max_diff(th.pi0(), OnOffPovm::thermal_dark(n, eta, cutoff)?.pi0())));
                let po = OnOffPovm::from_mixture(&FockDiagonalState::phase_averaged_coherent(m, 100)?, eta, cutoff)?;
                errs.push(Ok(max_diff(po.pi0(), OnOffPovm::poisson_dark(n, eta, cutoff)?.pi0())));
            }
        }
        let w = worst(errs)?;
        Ok((w < 1e-10, format!("max elementwise deviation {w:.3e} (tol 1e-10)")))
    }));

    results.push(check("click probability closed forms", || {
        let mut errs = Vec::new();
        for lambda in [0.1, 0.5, 0.8, 1.5] {
            let gain = GainParams::new(lambda)?;
            let cutoff = gain.auto_cutoff(1e-15);
            let reduced = FockDiagonalState::twin_beam_reduced(gain, cutoff)?;
            for eta in [0.3, 0.7, 1.0] {
                for dark in [DarkCounts::NONE, DarkCounts::thermal(0.05), DarkCounts::poisson(0.08)] {
                    let povm = OnOffPovm::with_dark_counts(dark, eta, cutoff)?;
                    let numeric = click_probability(&reduced, &povm)?;
                    errs.push(Ok((numeric - p1_closed(gain, eta, dark)?).abs()));
                }
            }
        }
        let w = worst(errs)?;
        Ok((w < 1e-9, format!("max |P1 sum − closed form| = {w:.3e} (tol 1e-9)")))
    }));

    results.push(check("W_s(0) closed forms", || {
        let mut ideal_errs = Vec::new();
        let mut dark_errs = Vec::new();
        for lambda in [0.1, 0.5, 1.0, 1.5] {
            let gain = GainParams::new(lambda)?;
            for eta in [0.3, 0.7, 1.0] {
                for s in [-0.9, -0.4, 0.0, 0.5] {
                    // the trace oracle only exists where the sum converges
                    let Some(cutoff) = heralded_trace_cutoff(gain, eta, s, 1e-16) else {
                        continue;
                    };
                    let herald = herald_twin_beam(gain, eta, DarkCounts::NONE, cutoff)?;
                    let trace = ws_origin_trace(&herald.conditional, s)?;
                    ideal_errs.push(Ok((trace - ws0_ideal(gain, eta, s)?).abs()));
                    for n in [0.05, 0.08] {
                        let herald = herald_twin_beam(gain, eta, DarkCounts::poisson(n), cutoff)?;
                        let trace = ws_origin_trace(&herald.conditional, s)?;
                        dark_errs.push(Ok((trace - ws0_dark_closed(gain, eta, s, n)?).abs()));
                    }
                }
            }
        }
        let wi = worst(ideal_errs)?;
        let wd = worst(dark_errs)?;
        Ok((
            wi < 1e-10 && wd < 1e-9,
            format!("ideal {wi:.3e} (tol 1e-10), dark {wd:.3e} (tol 1e-9)"),
        ))
    }));

    results.push(check("truncation at lambda = 1.2", || {
        let gain = GainParams::new(1.2)?;
        let cutoff = options
            .truncation_cutoff
            .unwrap_or_else(|| gain.auto_cutoff(crate::fockstate::DEFAULT_TRUNCATION_TOLERANCE));
        let state = FockDiagonalState::twin_beam_reduced(gain, cutoff)?;
        Ok((true, format!("cutoff {cutoff}, deficit {:.3e}", state.trace_deficit())))
    }));

    results.push(check("s* = -1 for heralded states", || {
        let mut worst_dev: f64 = 0.0;
        for lambda in [0.1, 0.5, 1.0, 1.5] {
            let gain = GainParams::new(lambda)?;
            for eta in [0.3, 0.6, 1.0] {
                let herald = herald_twin_beam(gain, eta, DarkCounts::NONE, gain.auto_cutoff(1e-14))?;
                match nonclassicality_index(&herald.conditional, 1e-4)? {
                    NonclassicalityIndex::Threshold(s) => worst_dev = worst_dev.max((s + 1.0).abs()),
                    NonclassicalityIndex::ClassicalAtOrigin => worst_dev = f64::INFINITY,
                }
            }
        }
        Ok((worst_dev <= 1e-4, format!("max |s* + 1| = {worst_dev:.3e} (tol 1e-4)")))
    }));

    results
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Fixed-width pass/fail table.
pub fn format_report(results: &[CheckResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&format!(
            "{:<4} {:<34} {}\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        ));
    }
    out
}
