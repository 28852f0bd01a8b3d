use approx::assert_relative_eq;
use std::f64::consts::PI;
use twinbeam::detection::{herald_twin_beam, DarkCounts};
use twinbeam::fockstate::{FockDiagonalState, GainParams};
use twinbeam::wigner::{
    heralded_trace_cutoff, nonclassicality_index, w0_ideal, ws0_dark, ws0_dark_closed, ws0_ideal, ws_origin_trace,
    NonclassicalityIndex, DEFAULT_INDEX_TOLERANCE,
};

const LAMBDAS: [f64; 8] = [0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5];
const ETAS: [f64; 8] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
const S_GRID: [f64; 8] = [-0.9, -0.7, -0.5, -0.3, -0.1, 0.0, 0.25, 0.5];

#[test]
fn trace_examples() {
    for s in [-1.0, -0.5, 0.0, 0.5, 0.9] {
        assert_relative_eq!(
            ws_origin_trace(&FockDiagonalState::vacuum(5), s).unwrap(),
            2.0 / (PI * (1.0 - s)),
            max_relative = 1e-15
        );
    }
    let one = FockDiagonalState::number_state(1, 5).unwrap();
    assert_relative_eq!(ws_origin_trace(&one, 0.0).unwrap(), -2.0 / PI, max_relative = 1e-15);
    assert!(ws_origin_trace(&one, 1.0).is_err());
    assert!(ws_origin_trace(&one, -1.5).is_err());
}

#[test]
fn closed_forms_match_trace_oracle_on_grid() {
    let mut compared = 0;
    let mut skipped = 0;
    for lambda in LAMBDAS {
        let gain = GainParams::new(lambda).unwrap();
        for eta in ETAS {
            for s in S_GRID {
                let Some(cutoff) = heralded_trace_cutoff(gain, eta, s, 1e-16) else {
                    skipped += 1;
                    continue;
                };
                let ideal = herald_twin_beam(gain, eta, DarkCounts::NONE, cutoff).unwrap();
                let trace = ws_origin_trace(&ideal.conditional, s).unwrap();
                assert!((ws0_ideal(gain, eta, s).unwrap() - trace).abs() < 1e-10, "ideal {lambda} {eta} {s}");
                for n_dark in [0.05, 0.08] {
                    let dark = herald_twin_beam(gain, eta, DarkCounts::poisson(n_dark), cutoff).unwrap();
                    let trace = ws_origin_trace(&dark.conditional, s).unwrap();
                    assert!((ws0_dark_closed(gain, eta, s, n_dark).unwrap() - trace).abs() < 1e-9);
                    assert!((ws0_dark(gain, eta, s, n_dark).unwrap() - trace).abs() < 1e-9);
                }
                compared += 1;
            }
        }
    }
    // s > 0 at high gain has no convergent trace; everything else is compared
    assert!(compared > 400 && skipped < 80, "compared {compared}, skipped {skipped}");
}

#[test]
fn w0_examples() {
    let gain = GainParams::new(0.5).unwrap();
    assert_relative_eq!(w0_ideal(gain, 0.6).unwrap(), ws0_ideal(gain, 0.6, 0.0).unwrap(), max_relative = 1e-14);
    let tiny = GainParams::new(1e-7).unwrap();
    assert_relative_eq!(w0_ideal(tiny, 0.6).unwrap(), -2.0 / PI, max_relative = 1e-12);
    // ξ² = 1/4 with a perfect detector: −(2/π)·(0.75/1.25)
    let gain = GainParams::new(0.5f64.atanh()).unwrap();
    assert_relative_eq!(w0_ideal(gain, 1.0).unwrap(), -(2.0 / PI) * 0.6, max_relative = 1e-13);
    assert!(w0_ideal(GainParams::new(0.0).unwrap(), 0.6).is_err());
}

#[test]
fn ws0_vanishes_from_below_at_q_limit() {
    let gain = GainParams::new(0.7).unwrap();
    let mut last = f64::NEG_INFINITY;
    for s in [-0.9, -0.99, -0.999, -0.9999] {
        let v = ws0_ideal(gain, 0.6, s).unwrap();
        assert!(v < 0.0 && v > last);
        last = v;
    }
    assert!(last.abs() < 1e-3);
}

#[test]
fn ideal_sign_claim() {
    for lambda in LAMBDAS {
        let gain = GainParams::new(lambda).unwrap();
        for eta in ETAS {
            for i in 1..=40 {
                let s = -1.0 + i as f64 / 40.0;
                assert!(ws0_ideal(gain, eta, s).unwrap() < 0.0, "{lambda} {eta} {s}");
            }
        }
    }
}

#[test]
fn dark_reduces_to_ideal() {
    let gain = GainParams::new(0.8).unwrap();
    for s in [-0.8, -0.4, 0.0] {
        assert_relative_eq!(
            ws0_dark(gain, 0.7, s, 0.0).unwrap(),
            ws0_ideal(gain, 0.7, s).unwrap(),
            max_relative = 1e-12
        );
    }
    let v = ws0_dark(gain, 0.7, -0.4, 0.08).unwrap();
    let ideal = ws0_ideal(gain, 0.7, -0.4).unwrap();
    assert!(v > ideal, "dark counts push W_s(0) up");
    assert!(ws0_dark(GainParams::new(0.0).unwrap(), 0.7, -0.4, 0.0).is_err());
}

#[test]
fn dark_counts_destroy_negativity_at_low_gain() {
    // small λ and a noisy detector: the heralded state is mostly vacuum
    let mut found = false;
    for lambda in [0.05, 0.1, 0.2] {
        let gain = GainParams::new(lambda).unwrap();
        for n_dark in [0.05, 0.1, 0.3] {
            if ws0_dark(gain, 0.6, -0.3, n_dark).unwrap() >= 0.0 {
                found = true;
            }
        }
    }
    assert!(found);
    // and large N always wins at fixed λ
    assert!(ws0_dark(GainParams::new(0.1).unwrap(), 0.7, -0.3, 0.5).unwrap() > 0.0);
}

#[test]
fn nonclassicality_index_examples() {
    for lambda in [0.1, 0.5, 1.0, 1.5] {
        let gain = GainParams::new(lambda).unwrap();
        for eta in [0.3, 0.6, 1.0] {
            let out = herald_twin_beam(gain, eta, DarkCounts::NONE, gain.auto_cutoff(1e-15)).unwrap();
            let idx = nonclassicality_index(&out.conditional, DEFAULT_INDEX_TOLERANCE).unwrap();
            assert!((idx.value().unwrap() + 1.0).abs() <= DEFAULT_INDEX_TOLERANCE);
        }
    }
    let vac = nonclassicality_index(&FockDiagonalState::vacuum(3), DEFAULT_INDEX_TOLERANCE).unwrap();
    assert_eq!(vac, NonclassicalityIndex::ClassicalAtOrigin);

    let gain = GainParams::new(0.8).unwrap();
    let out = herald_twin_beam(gain, 0.7, DarkCounts::poisson(0.08), gain.auto_cutoff(1e-15)).unwrap();
    let s_star = nonclassicality_index(&out.conditional, 1e-6).unwrap().value().unwrap();
    assert!(s_star > -1.0 && s_star < 0.0);
    // W_s(0) changes sign at s*
    let below = ws_origin_trace(&out.conditional, s_star - 1e-5).unwrap();
    let above = ws_origin_trace(&out.conditional, s_star + 1e-5).unwrap();
    assert!(below >= 0.0 && above < 0.0, "{below} {above}");
}

#[test]
fn ws0_continuous_in_s() {
    let gain = GainParams::new(0.8).unwrap();
    let out = herald_twin_beam(gain, 0.7, DarkCounts::poisson(0.08), gain.auto_cutoff(1e-15)).unwrap();
    let mut previous = ws_origin_trace(&out.conditional, -1.0).unwrap();
    for i in 1..=1000 {
        let s = -1.0 + i as f64 * 1e-3;
        let v = ws_origin_trace(&out.conditional, s).unwrap();
        assert!((v - previous).abs() < 5e-3);
        previous = v;
    }
}
