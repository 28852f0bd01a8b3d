use approx::assert_relative_eq;
use proptest::prelude::*;
use twinbeam::fockstate::{FockDiagonalState, FockRecord, GainParams};

fn total(state: &FockDiagonalState) -> f64 {
    state.weights().iter().sum::<f64>() + state.trace_deficit()
}

#[test]
fn twin_beam_examples() {
    let state = FockDiagonalState::twin_beam_reduced(GainParams::new(0.0).unwrap(), 10).unwrap();
    assert_eq!(state.weights()[0], 1.0);
    assert!(state.weights()[1..].iter().all(|&w| w == 0.0));

    let gain = GainParams::new(0.5).unwrap();
    let state = FockDiagonalState::twin_beam_reduced(gain, gain.auto_cutoff(1e-14)).unwrap();
    let xi2 = 0.5f64.tanh().powi(2);
    assert_relative_eq!(state.weight(0), 1.0 - xi2, max_relative = 1e-15);
    for n in 1..20 {
        assert_relative_eq!(state.weight(n) / state.weight(n - 1), xi2, max_relative = 1e-12);
    }
    assert_relative_eq!(state.mean_photon_number(), 0.5f64.sinh().powi(2), max_relative = 1e-12);
}

#[test]
fn thermal_and_poisson_examples() {
    let half = FockDiagonalState::thermal(1.0, 60).unwrap();
    for n in 0..=60 {
        assert_relative_eq!(half.weight(n), 0.5f64.powi(n as i32 + 1), max_relative = 1e-13);
    }
    // dark-count ancilla of the η_a = 0.7, N = 0.08 configuration
    let m = 0.08 / 0.3;
    let ancilla = FockDiagonalState::thermal(m, 40).unwrap();
    for n in 0..=40 {
        let expected = m.powi(n as i32) / (1.0 + m).powi(n as i32 + 1);
        assert_relative_eq!(ancilla.weight(n), expected, max_relative = 1e-12);
    }
    let m = 0.05 / 0.4;
    let poisson = FockDiagonalState::phase_averaged_coherent(m, 30).unwrap();
    let mut fact = 1.0;
    for n in 0..=30 {
        if n > 0 {
            fact *= n as f64;
        }
        assert_relative_eq!(poisson.weight(n), (-m).exp() * m.powi(n as i32) / fact, max_relative = 1e-12);
    }
    assert!((total(&poisson) - 1.0).abs() < 1e-12);
    assert_relative_eq!(
        FockDiagonalState::phase_averaged_coherent(1.0, 40).unwrap().weight(0),
        (-1.0f64).exp(),
        max_relative = 1e-15
    );
    assert_eq!(FockDiagonalState::thermal(0.0, 5).unwrap().weights(), FockDiagonalState::vacuum(5).weights());
}

#[test]
fn truncation_failures_are_reported() {
    assert!(FockDiagonalState::thermal(1.0, 5).is_err());
    assert!(FockDiagonalState::twin_beam_reduced(GainParams::new(1.2).unwrap(), 8).is_err());
    assert!(FockDiagonalState::number_state(6, 5).is_err());
}

#[test]
fn loss_examples() {
    let state = FockDiagonalState::thermal(0.8, 80).unwrap();
    assert_eq!(state.loss_channel(1.0).unwrap().weights(), state.weights());
    let lost = state.loss_channel(0.0).unwrap();
    assert_relative_eq!(lost.weight(0), 1.0 - state.trace_deficit(), max_relative = 1e-14);
    for eta in [0.2, 0.55, 0.9] {
        let lossy = state.loss_channel(eta).unwrap();
        let closed = FockDiagonalState::thermal(eta * 0.8, 80).unwrap();
        for n in 0..=80 {
            assert!((lossy.weight(n) - closed.weight(n)).abs() < 1e-10);
        }
    }
}

#[test]
fn record_round_trip() {
    let state = FockDiagonalState::twin_beam_reduced(GainParams::new(0.7).unwrap(), 80).unwrap();
    let json = serde_json::to_string(&state.to_record()).unwrap();
    let record: FockRecord = serde_json::from_str(&json).unwrap();
    let back = FockDiagonalState::from_record(record, 1e-10).unwrap();
    assert_eq!(back.weights(), state.weights());
}

fn weights_strategy() -> impl Strategy<Value = FockDiagonalState> {
    prop::collection::vec(0.0f64..1.0, 1..40).prop_filter_map("nonzero", |raw| {
        let sum: f64 = raw.iter().sum();
        (sum > 1e-3).then(|| FockDiagonalState::from_weights(raw.iter().map(|w| w / sum).collect(), 1e-10).unwrap())
    })
}

proptest! {
    #[test]
    fn constructors_preserve_trace(mean in 0.0f64..3.0, lambda in 0.0f64..1.5) {
        let gain = GainParams::new(lambda).unwrap();
        let cutoff = gain.auto_cutoff(1e-12).max(200);
        for state in [
            FockDiagonalState::twin_beam_reduced(gain, cutoff).unwrap(),
            FockDiagonalState::thermal(mean, 200).unwrap(),
            FockDiagonalState::phase_averaged_coherent(mean, 200).unwrap(),
        ] {
            prop_assert!((total(&state) - 1.0).abs() < 1e-12);
            prop_assert!(state.weights().iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn twin_beam_is_thermal(lambda in 0.0f64..1.5) {
        let gain = GainParams::new(lambda).unwrap();
        let cutoff = gain.auto_cutoff(1e-12);
        let twin = FockDiagonalState::twin_beam_reduced(gain, cutoff).unwrap();
        let thermal = FockDiagonalState::thermal(lambda.sinh().powi(2), cutoff).unwrap();
        for n in 0..=cutoff {
            prop_assert!((twin.weight(n) - thermal.weight(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_composes(state in weights_strategy(), e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
        let twice = state.loss_channel(e1).unwrap().loss_channel(e2).unwrap();
        let once = state.loss_channel(e1 * e2).unwrap();
        for n in 0..=state.cutoff() {
            prop_assert!((twice.weight(n) - once.weight(n)).abs() < 1e-10);
        }
        prop_assert!((total(&twice) - total(&state)).abs() < 1e-12);
    }

    #[test]
    fn loss_reduces_mean(state in weights_strategy(), eta in 0.0f64..=1.0) {
        let lossy = state.loss_channel(eta).unwrap();
        prop_assert!((lossy.mean_photon_number() - eta * state.mean_photon_number()).abs() < 1e-10);
    }
}
