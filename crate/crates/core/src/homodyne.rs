//! Random-phase homodyne data from Fock-diagonal states.
//!
//! A Fock-diagonal state is invariant under phase rotations, so its
//! random-phase quadrature distribution is the phase-independent mixture
//! `Σ_n ρ_nn ψ_n(x)²`. Detector inefficiency `η_h` adds Gaussian noise of
//! variance `(1−η_h)/(4η_h)` on the rescaled quadrature.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex, OnceLock};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::detection::{DarkModel, OnOffPovm};
use crate::error::{check_unit_interval, Error, Result};
use crate::fockstate::FockDiagonalState;
use crate::specfun::{fill_hermite_functions, hermite_functions};

/// Identifies the random stream layout; echoed in every output.
pub const GENERATOR_ID: &str = "chacha8-rand_chacha-0.9-stream-per-chunk-8192";

/// Samples per independently seeded stream.
pub const CHUNK_SIZE: usize = 8192;

/// Stream reserved for click simulations (homodyne chunks count up from 0).
const CLICK_STREAM: u64 = u64::MAX;

const MIN_TABLE_POINTS: usize = 4096;
const TABLE_MARGIN: f64 = 6.0;

/// Variance of the Gaussian smearing for homodyne efficiency `eta_h`.
pub fn smearing_variance(eta_h: f64) -> f64 {
    (1.0 - eta_h) / (4.0 * eta_h)
}

fn last_nonzero(weights: &[f64]) -> usize {
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Random-phase quadrature density `p_η(x)` of a Fock-diagonal state.
///
/// Gaussian smearing of the ideal density equals ideal detection on the state
/// after a loss channel of transmissivity `η`, read out at `√η x`:
/// `p_η(x) = √η Σ_m ρ'_mm ψ_m(√η x)²`.
#[derive(Debug, Clone)]
pub struct QuadratureDensity {
    sqrt_eta: f64,
    lossy: Vec<f64>,
}

impl QuadratureDensity {
    pub fn new(state: &FockDiagonalState, eta_h: f64) -> Result<Self> {
        check_unit_interval("eta_h", eta_h, false)?;
        let lossy = state.loss_channel(eta_h)?;
        let top = last_nonzero(lossy.weights());
        Ok(Self {
            sqrt_eta: eta_h.sqrt(),
            lossy: lossy.weights()[..=top].to_vec(),
        })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let psi = hermite_functions(self.lossy.len() - 1, self.sqrt_eta * x);
        self.sqrt_eta * self.lossy.iter().zip(&psi).map(|(w, p)| w * p * p).sum::<f64>()
    }

    /// Half-width beyond which the density is negligible.
    pub fn support(&self) -> f64 {
        ((self.lossy.len() as f64 - 0.5).sqrt() + TABLE_MARGIN) / self.sqrt_eta
    }
}

pub fn quadrature_pdf(state: &FockDiagonalState, eta_h: f64, x: f64) -> Result<f64> {
    Ok(QuadratureDensity::new(state, eta_h)?.pdf(x))
}

/// Tabulated inverse CDF of `ψ_n(y)²`.
#[derive(Debug)]
struct InverseCdf {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdf {
    fn build(n: usize) -> Self {
        let half_width = (n as f64 + 0.5).sqrt() + TABLE_MARGIN;
        let points = MIN_TABLE_POINTS.max(32 * (n + 1));
        let h = 2.0 * half_width / (points - 1) as f64;
        let mut buf = Vec::with_capacity(n + 1);
        let mut density = |y: f64| {
            fill_hermite_functions(n, y, &mut buf);
            buf[n] * buf[n]
        };
        let grid: Vec<f64> = (0..points).map(|i| -half_width + i as f64 * h).collect();
        let mut cdf = Vec::with_capacity(points);
        cdf.push(0.0);
        let mut left = density(grid[0]);
        let mut acc = 0.0;
        for i in 1..points {
            let right = density(grid[i]);
            let mid = density(0.5 * (grid[i - 1] + grid[i]));
            acc += h / 6.0 * (left + 4.0 * mid + right);
            cdf.push(acc);
            left = right;
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Self { grid, cdf }
    }

    fn invert(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|c| *c <= u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.grid[i - 1] + t * (self.grid[i] - self.grid[i - 1])
    }
}

fn table(n: usize) -> Arc<InverseCdf> {
    static TABLES: OnceLock<Mutex<Vec<Option<Arc<InverseCdf>>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| Mutex::new(Vec::new()));
    if let Some(Some(t)) = tables.lock().unwrap().get(n) {
        return t.clone();
    }
    let built = Arc::new(InverseCdf::build(n));
    let mut guard = tables.lock().unwrap();
    if guard.len() <= n {
        guard.resize(n + 1, None);
    }
    guard[n].get_or_insert(built).clone()
}

fn tables_for(weights: &[f64]) -> Vec<Option<Arc<InverseCdf>>> {
    let needed: Vec<usize> = (0..weights.len()).filter(|&n| weights[n] > 0.0).collect();
    let built: Vec<(usize, Arc<InverseCdf>)> = needed.par_iter().map(|&n| (n, table(n))).collect();
    let mut out = vec![None; weights.len()];
    for (n, t) in built {
        out[n] = Some(t);
    }
    out
}

fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Parameters echoed in a dataset header. Fields that do not apply are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub lambda: Option<f64>,
    pub eta_a: Option<f64>,
    pub eta_h: f64,
    pub s_target: Option<f64>,
    pub dark_model: Option<DarkModel>,
    pub dark_n: Option<f64>,
    pub seed: u64,
    pub generator: String,
}

impl DatasetHeader {
    pub fn bare(eta_h: f64, seed: u64) -> Self {
        Self {
            lambda: None,
            eta_a: None,
            eta_h,
            s_target: None,
            dark_model: None,
            dark_n: None,
            seed,
            generator: GENERATOR_ID.to_string(),
        }
    }
}

/// Quadrature samples with the phase drawn for each (kept for the record; the
/// estimators ignore it).
#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneDataset {
    samples: Vec<f64>,
    phases: Vec<f64>,
    header: DatasetHeader,
}

impl HomodyneDataset {
    pub fn new(samples: Vec<f64>, phases: Vec<f64>, header: DatasetHeader) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if samples.len() != phases.len() {
            return Err(Error::MalformedDataset("sample and phase counts differ".into()));
        }
        if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::MalformedDataset(format!("non-finite sample {bad}")));
        }
        check_unit_interval("eta_h", header.eta_h, false)?;
        Ok(Self {
            samples,
            phases,
            header,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn eta_h(&self) -> f64 {
        self.header.eta_h
    }

    pub fn seed(&self) -> u64 {
        self.header.seed
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    pub fn header_mut(&mut self) -> &mut DatasetHeader {
        &mut self.header
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Header line with the configuration echo, then `x phase` per line.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let h = &self.header;
        let opt = |v: Option<f64>| v.map_or_else(|| "na".to_string(), |v| v.to_string());
        let mut line = String::from("# twinbeam-homodyne");
        write!(
            line,
            " lambda={} eta_a={} eta_h={} s={} dark={} N={} seed={} generator={} count={}",
            opt(h.lambda),
            opt(h.eta_a),
            h.eta_h,
            opt(h.s_target),
            h.dark_model.map_or_else(|| "na".to_string(), |m| m.to_string()),
            opt(h.dark_n),
            h.seed,
            h.generator,
            self.samples.len()
        )
        .expect("writing to a String");
        writeln!(out, "{line}")?;
        for (x, phi) in self.samples.iter().zip(&self.phases) {
            writeln!(out, "{x} {phi}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::MalformedDataset("missing header".into()))??;
        let rest = first
            .strip_prefix("# twinbeam-homodyne")
            .ok_or_else(|| Error::MalformedDataset("bad header tag".into()))?;
        let mut header = DatasetHeader::bare(1.0, 0);
        let mut count = None;
        for field in rest.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::MalformedDataset(format!("bad header field '{field}'")))?;
            let num = |v: &str| -> Result<Option<f64>> {
                if v == "na" {
                    return Ok(None);
                }
                v.parse()
                    .map(Some)
                    .map_err(|_| Error::MalformedDataset(format!("bad number '{v}' for {key}")))
            };
            match key {
                "lambda" => header.lambda = num(value)?,
                "eta_a" => header.eta_a = num(value)?,
                "eta_h" => {
                    header.eta_h = num(value)?.ok_or_else(|| Error::MalformedDataset("eta_h missing".into()))?
                }
                "s" => header.s_target = num(value)?,
                "dark" => {
                    header.dark_model = match value {
                        "na" => None,
                        "mixture" => Some(DarkModel::Mixture),
                        m => Some(m.parse()?),
                    }
                }
                "N" => header.dark_n = num(value)?,
                "seed" => {
                    header.seed = value
                        .parse()
                        .map_err(|_| Error::MalformedDataset(format!("bad seed '{value}'")))?
                }
                "generator" => header.generator = value.to_string(),
                "count" => {
                    count = Some(
                        value
                            .parse::<usize>()
                            .map_err(|_| Error::MalformedDataset(format!("bad count '{value}'")))?,
                    )
                }
                _ => return Err(Error::MalformedDataset(format!("unknown header key '{key}'"))),
            }
        }
        let mut samples = Vec::new();
        let mut phases = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |p: Option<&str>| -> Result<f64> {
                p.and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::MalformedDataset(format!("bad sample line '{line}'")))
            };
            samples.push(parse(parts.next())?);
            phases.push(parse(parts.next())?);
        }
        if let Some(c) = count {
            if c != samples.len() {
                return Err(Error::MalformedDataset(format!(
                    "header announces {c} samples, found {}",
                    samples.len()
                )));
            }
        }
        Self::new(samples, phases, header)
    }
}

/// Draws `count` i.i.d. random-phase quadratures from `state` measured with
/// efficiency `eta_h`.
///
/// Per sample: photon number `n` from the state weights, `y` from `ψ_n²` by
/// tabulated inverse CDF, then `x = y + σ z` with `σ² = (1−η)/(4η)`, and a
/// uniform phase. Chunk `k` of [`CHUNK_SIZE`] samples uses stream `k` of a
/// ChaCha8 generator seeded from `seed`, so the output does not depend on the
/// thread count.
pub fn sample(state: &FockDiagonalState, eta_h: f64, count: usize, seed: u64) -> Result<HomodyneDataset> {
    check_unit_interval("eta_h", eta_h, false)?;
    if count == 0 {
        return Err(Error::EmptyDataset);
    }
    let weights = &state.weights()[..=last_nonzero(state.weights())];
    let photon_dist = WeightedIndex::new(weights)
        .map_err(|e| Error::InvalidParameter(format!("state weights unusable for sampling: {e}")))?;
    let tables = tables_for(weights);
    let sigma = smearing_variance(eta_h).sqrt();
    let chunks = count.div_ceil(CHUNK_SIZE);

    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK_SIZE.min(count - c * CHUNK_SIZE);
            let mut rng = chunk_rng(seed, c as u64);
            let mut xs = Vec::with_capacity(len);
            let mut phis = Vec::with_capacity(len);
            for _ in 0..len {
                let n = photon_dist.sample(&mut rng);
                let u: f64 = rng.random();
                let y = tables[n].as_ref().expect("table for drawn photon number").invert(u);
                let z: f64 = rng.sample(StandardNormal);
                let phi = rng.random::<f64>() * TAU;
                xs.push(y + sigma * z);
                phis.push(phi);
            }
            (xs, phis)
        })
        .collect();

    let mut samples = Vec::with_capacity(count);
    let mut phases = Vec::with_capacity(count);
    for (xs, phis) in parts {
        samples.extend(xs);
        phases.extend(phis);
    }
    HomodyneDataset::new(samples, phases, DatasetHeader::bare(eta_h, seed))
}

/// Monte Carlo click frequency: per trial draw the photon number of the
/// monitored beam, then click with probability `1 − Π₀[n]`.
pub fn click_simulation(state_b: &FockDiagonalState, povm: &OnOffPovm, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidParameter("click simulation needs at least one trial".into()));
    }
    if povm.cutoff() < state_b.cutoff() {
        return Err(Error::InvalidParameter("POVM cutoff below state cutoff".into()));
    }
    let weights = &state_b.weights()[..=last_nonzero(state_b.weights())];
    let photon_dist = WeightedIndex::new(weights)
        .map_err(|e| Error::InvalidParameter(format!("state weights unusable for sampling: {e}")))?;
    let mut rng = chunk_rng(seed, CLICK_STREAM);
    let mut clicks = 0usize;
    for _ in 0..trials {
        let n = photon_dist.sample(&mut rng);
        let u: f64 = rng.random();
        if u < povm.click(n) {
            clicks += 1;
        }
    }
    Ok(clicks as f64 / trials as f64)
}
