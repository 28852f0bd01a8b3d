//! Experiment configuration and the per-point / sweep runners.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::detection::{conditional_state, p1_closed, DarkCounts, DarkModel, OnOffPovm};
use crate::error::{Error, Result};
use crate::fockstate::{geometric_cutoff, FockDiagonalState, GainParams};
use crate::homodyne::{self, click_simulation, DatasetHeader, HomodyneDataset};
use crate::tomography::{estimate_with_kernel, Kernel};
use crate::wigner::ws_origin_trace;

/// Tail mass targeted by the automatic cutoff. Tighter than the state
/// tolerance so that the conditional state's deficit (tail / P₁) stays below
/// it for all but vanishing click probabilities.
pub const AUTO_CUTOFF_TAIL: f64 = 1e-14;

pub const DEFAULT_CLICK_TRIALS: usize = 100_000;
pub const DEFAULT_SWEEP_POINTS: usize = 21;
pub const MIN_SAMPLES: usize = 100;

pub const PRESETS: [(&str, &str); 4] = [
    ("fig1_top", include_str!("../presets/fig1_top.toml")),
    ("fig1_bottom", include_str!("../presets/fig1_bottom.toml")),
    ("fig3_top", include_str!("../presets/fig3_top.toml")),
    ("fig3_bottom", include_str!("../presets/fig3_bottom.toml")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Cutoff {
    #[default]
    Auto,
    Fixed(usize),
}

impl Cutoff {
    pub fn resolve(&self, gain: GainParams) -> usize {
        match self {
            Cutoff::Auto => geometric_cutoff(gain.xi_squared(), AUTO_CUTOFF_TAIL),
            Cutoff::Fixed(n) => *n,
        }
    }
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::Auto => f.write_str("auto"),
            Cutoff::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for Cutoff {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cutoff::Auto => ser.serialize_str("auto"),
            Cutoff::Fixed(n) => ser.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Cutoff {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(u64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Number(n) => Ok(Cutoff::Fixed(n as usize)),
            Raw::Text(t) if t == "auto" => Ok(Cutoff::Auto),
            Raw::Text(t) => t
                .parse::<usize>()
                .map(Cutoff::Fixed)
                .map_err(|_| serde::de::Error::custom(format!("cutoff must be 'auto' or an integer, got '{t}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Lambda,
    EtaA,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::Lambda => "lambda",
            SweepParameter::EtaA => "eta_a",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    DEFAULT_SWEEP_POINTS
}

fn default_click_trials() -> usize {
    DEFAULT_CLICK_TRIALS
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let i = i as f64;
                // snap to 12 decimals so grid values print cleanly in the CSV
                ((self.min * (last - i) + self.max * i) / last * 1e12).round() / 1e12
            })
            .collect()
    }
}

/// One run or sweep: gain, efficiencies, ordering, background, sample count,
/// truncation and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lambda: f64,
    pub eta_a: f64,
    pub eta_h: f64,
    pub s: f64,
    #[serde(default = "default_dark_model")]
    pub dark_model: DarkModel,
    #[serde(default)]
    pub dark_n: f64,
    pub samples: usize,
    #[serde(default)]
    pub cutoff: Cutoff,
    pub seed: u64,
    #[serde(default = "default_click_trials")]
    pub click_trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn default_dark_model() -> DarkModel {
    DarkModel::None
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Config(format!("unknown preset '{name}'")))?;
        Self::from_toml_str(text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn dark(&self) -> DarkCounts {
        DarkCounts {
            model: self.dark_model,
            mean: self.dark_n,
        }
    }

    /// Range and consistency checks. The kernel bound on `s` is a physics
    /// constraint and is checked when a point runs.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda = {} must be >= 0", self.lambda));
        }
        for (name, v) in [("eta_a", self.eta_a), ("eta_h", self.eta_h)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} = {v} outside (0, 1]"));
            }
        }
        if !(self.s >= -1.0 && self.s < 1.0) {
            return bad(format!("s = {} outside [-1, 1)", self.s));
        }
        if self.dark_model == DarkModel::Mixture {
            return bad("dark_model must be none, thermal or poisson".into());
        }
        if !(self.dark_n.is_finite() && self.dark_n >= 0.0) {
            return bad(format!("dark_n = {} must be >= 0", self.dark_n));
        }
        if self.dark_model == DarkModel::None && self.dark_n != 0.0 {
            return bad("dark_n set but dark_model is none".into());
        }
        if self.samples < MIN_SAMPLES {
            return bad(format!("samples = {} below minimum {MIN_SAMPLES}", self.samples));
        }
        if self.click_trials == 0 {
            return bad("click_trials must be >= 1".into());
        }
        if let Some(sweep) = &self.sweep {
            if sweep.points == 0 {
                return bad("sweep needs at least one point".into());
            }
            if !(sweep.min.is_finite() && sweep.max.is_finite() && sweep.min <= sweep.max) {
                return bad(format!("sweep bounds [{}, {}] invalid", sweep.min, sweep.max));
            }
            let legal = match sweep.parameter {
                SweepParameter::Lambda => sweep.min >= 0.0,
                SweepParameter::EtaA => sweep.min > 0.0 && sweep.max <= 1.0,
            };
            if !legal {
                return bad(format!(
                    "sweep bounds [{}, {}] outside the legal range of {}",
                    sweep.min, sweep.max, sweep.parameter
                ));
            }
        }
        Ok(())
    }

    fn at_sweep_point(&self, parameter: SweepParameter, value: f64, seed: u64) -> Self {
        let mut point = self.clone();
        match parameter {
            SweepParameter::Lambda => point.lambda = value,
            SweepParameter::EtaA => point.eta_a = value,
        }
        point.seed = seed;
        point.sweep = None;
        point
    }
}

/// Seed of sweep point `index`, derived from the master seed (SplitMix64).
pub fn point_seed(master: u64, index: usize) -> u64 {
    let mut z = master.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub sweep_param: String,
    pub sweep_value: Option<f64>,
    pub lambda: f64,
    pub eta_a: f64,
    pub eta_h: f64,
    pub s: f64,
    pub dark_model: DarkModel,
    #[serde(rename = "N")]
    pub n_dark: f64,
    pub samples: usize,
    pub seed: u64,
    pub p1_theory: Option<f64>,
    pub p1_mc: Option<f64>,
    pub ws0_theory: Option<f64>,
    pub ws0_estimate: Option<f64>,
    pub ws0_stderr: Option<f64>,
    pub status: String,
}

impl PointRecord {
    fn skeleton(config: &ExperimentConfig, sweep: Option<(SweepParameter, f64)>) -> Self {
        Self {
            sweep_param: sweep.map_or_else(|| "none".to_string(), |(p, _)| p.to_string()),
            sweep_value: sweep.map(|(_, v)| v),
            lambda: config.lambda,
            eta_a: config.eta_a,
            eta_h: config.eta_h,
            s: config.s,
            dark_model: config.dark_model,
            n_dark: config.dark_n,
            samples: config.samples,
            seed: config.seed,
            p1_theory: None,
            p1_mc: None,
            ws0_theory: None,
            ws0_estimate: None,
            ws0_stderr: None,
            status: String::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    /// `|estimate − theory| / stderr`, when both are present.
    pub fn z_score(&self) -> Option<f64> {
        Some((self.ws0_estimate? - self.ws0_theory?).abs() / self.ws0_stderr?)
    }

    /// Binomial z-score of the Monte Carlo click frequency over `trials`.
    pub fn click_z_score(&self, trials: usize) -> Option<f64> {
        let p = self.p1_theory?;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let diff = (self.p1_mc? - p).abs();
        if sigma == 0.0 {
            return Some(if diff == 0.0 { 0.0 } else { f64::INFINITY });
        }
        Some(diff / sigma)
    }
}

/// Everything computed for one parameter point.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub record: PointRecord,
    pub conditional: FockDiagonalState,
    pub p1_numeric: f64,
    pub dataset: HomodyneDataset,
}

fn compute_point(config: &ExperimentConfig, sweep: Option<(SweepParameter, f64)>) -> Result<PointOutcome> {
    config.validate()?;
    let gain = GainParams::new(config.lambda)?;
    let kernel = Kernel::new(config.s, config.eta_h)?;
    let cutoff = config.cutoff.resolve(gain);
    let reduced = FockDiagonalState::twin_beam_reduced(gain, cutoff)?;
    let povm = OnOffPovm::with_dark_counts(config.dark(), config.eta_a, cutoff)?;
    let outcome = conditional_state(&reduced, &povm)?;

    let p1_theory = p1_closed(gain, config.eta_a, config.dark())?;
    let ws0_theory = ws_origin_trace(&outcome.conditional, config.s)?;
    let p1_mc = click_simulation(&reduced, &povm, config.click_trials, config.seed)?;

    let mut dataset = homodyne::sample(&outcome.conditional, config.eta_h, config.samples, config.seed)?;
    *dataset.header_mut() = DatasetHeader {
        lambda: Some(config.lambda),
        eta_a: Some(config.eta_a),
        s_target: Some(config.s),
        dark_model: Some(config.dark_model),
        dark_n: Some(config.dark_n),
        ..dataset.header().clone()
    };
    let estimate = estimate_with_kernel(dataset.samples(), &kernel)?;

    let mut record = PointRecord::skeleton(config, sweep);
    record.p1_theory = Some(p1_theory);
    record.p1_mc = Some(p1_mc);
    record.ws0_theory = Some(ws0_theory);
    record.ws0_estimate = Some(estimate.mean);
    record.ws0_stderr = Some(estimate.std_error);
    record.status = "ok".into();
    Ok(PointOutcome {
        record,
        conditional: outcome.conditional,
        p1_numeric: outcome.p1,
        dataset,
    })
}

/// Runs a single parameter point (any sweep block is ignored).
pub fn run_point(config: &ExperimentConfig) -> Result<PointRecord> {
    Ok(compute_point(config, None)?.record)
}

/// Like [`run_point`] but also returns the conditional state and the dataset.
pub fn run_point_detailed(config: &ExperimentConfig) -> Result<PointOutcome> {
    compute_point(config, None)
}

/// Runs every sweep point in parallel; rows come back in sweep order and a
/// failing point is reported in its `status` column.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<PointRecord>> {
    config.validate()?;
    let sweep = config
        .sweep
        .ok_or_else(|| Error::Config("sweep requested but config has no [sweep] block".into()))?;
    let values = sweep.values();
    Ok(values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let point = config.at_sweep_point(sweep.parameter, v, point_seed(config.seed, i));
            let tag = Some((sweep.parameter, v));
            match compute_point(&point, tag) {
                Ok(outcome) => outcome.record,
                Err(e) => {
                    let mut record = PointRecord::skeleton(&point, tag);
                    record.status = format!("error: {e}");
                    record
                }
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig::preset("fig1_top").unwrap()
    }

    #[test]
    fn presets_parse() {
        for (name, _) in PRESETS {
            let c = ExperimentConfig::preset(name).unwrap();
            assert_eq!(c.sweep.unwrap().points, 21);
            assert_eq!(c.samples, 50_000);
        }
        assert!(ExperimentConfig::preset("nope").is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut c = base();
        c.cutoff = Cutoff::Fixed(40);
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation_failures() {
        let mut c = base();
        c.samples = 50;
        assert!(c.validate().is_err());
        let mut c = base();
        c.eta_h = 0.0;
        assert!(c.validate().is_err());
        let mut c = base();
        c.dark_n = 0.1;
        assert!(c.validate().is_err());
        let mut c = base();
        c.sweep = Some(SweepSpec {
            parameter: SweepParameter::EtaA,
            min: 0.3,
            max: 1.2,
            points: 5,
        });
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_toml_str("lambda = 0.5").is_err());
        let unknown = base().to_toml_string() + "\nbogus = 1\n";
        assert!(ExperimentConfig::from_toml_str(&unknown).is_err());
    }

    #[test]
    fn cutoff_parsing() {
        let text = base().to_toml_string().replace("cutoff = \"auto\"", "cutoff = 30");
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap().cutoff, Cutoff::Fixed(30));
        let text = base().to_toml_string().replace("cutoff = \"auto\"", "cutoff = \"lots\"");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn sweep_values_hit_both_ends() {
        let v = base().sweep.unwrap().values();
        assert_eq!(v.len(), 21);
        assert_eq!(v[0], 0.1);
        assert_eq!(v[20], 1.5);
        assert!((v[10] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn point_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..100).map(|i| point_seed(42, i)).collect();
        assert_eq!(seeds.len(), 100);
        assert_eq!(point_seed(42, 3), point_seed(42, 3));
    }

    #[test]
    fn zero_gain_without_background_fails() {
        let mut c = base();
        c.lambda = 0.0;
        c.samples = 1000;
        assert_eq!(run_point(&c).unwrap_err(), Error::ZeroClickProbability);
    }

    #[test]
    fn unreconstructible_s_fails() {
        let mut c = base();
        c.s = -0.2;
        assert!(matches!(run_point(&c), Err(Error::UnboundedKernel { .. })));
    }

    #[test]
    fn failing_sweep_points_are_recorded() {
        let mut c = base();
        c.samples = 1000;
        c.click_trials = 1000;
        c.sweep = Some(SweepSpec {
            parameter: SweepParameter::Lambda,
            min: 0.0,
            max: 0.5,
            points: 3,
        });
        let rows = run_sweep(&c).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].status.starts_with("error"));
        assert!(rows[1].is_ok() && rows[2].is_ok());
        assert!(rows[0].ws0_estimate.is_none());
    }
}
