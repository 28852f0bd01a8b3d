//! Tomographic kernel for `Ŵ_s` and the sample-mean estimator of `W_s(0)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{check_unit_interval, Error, Result};
use crate::homodyne::HomodyneDataset;
use crate::specfun::kummer_1_half_neg;

/// Largest ordering reconstructible at homodyne efficiency `eta_h`: the
/// kernel is bounded only for `s < 1 − 1/η_h`.
pub fn max_reconstructible_s(eta_h: f64) -> Result<f64> {
    check_unit_interval("eta_h", eta_h, false)?;
    Ok(1.0 - 1.0 / eta_h)
}

/// `R_η[Ŵ_s](x) = (2η/π) Φ(1; 1/2; −2ηx²/D) / D` with `D = (1−s)η − 1 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    s: f64,
    eta_h: f64,
    prefactor: f64,
    arg_scale: f64,
}

impl Kernel {
    pub fn new(s: f64, eta_h: f64) -> Result<Self> {
        let max_s = max_reconstructible_s(eta_h)?;
        if !s.is_finite() || s >= max_s {
            return Err(Error::UnboundedKernel { s, eta_h, max_s });
        }
        let d = (1.0 - s) * eta_h - 1.0;
        Ok(Self {
            s,
            eta_h,
            prefactor: 2.0 * eta_h / (PI * d),
            arg_scale: 2.0 * eta_h / d,
        })
    }

    /// Kernel with its overall constant multiplied by `factor`; only for
    /// exercising the self-check.
    pub fn perturbed(mut self, factor: f64) -> Self {
        self.prefactor *= factor;
        self
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn eta_h(&self) -> f64 {
        self.eta_h
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.prefactor * kummer_1_half_neg(self.arg_scale * x * x)
    }
}

pub fn kernel(x: f64, s: f64, eta_h: f64) -> Result<f64> {
    Ok(Kernel::new(s, eta_h)?.eval(x))
}

/// Streaming count/mean/M2 accumulator (Welford), mergeable across chunks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&self, other: &RunningStats) -> RunningStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        RunningStats { count, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut stats = RunningStats::default();
        for v in iter {
            stats.push(v);
        }
        stats
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: u64,
    pub s: f64,
    pub eta_h: f64,
}

const ESTIMATE_CHUNK: usize = 4096;

/// Averages a kernel over samples, chunked in parallel; chunk results are
/// merged in order so the estimate is independent of scheduling.
pub fn estimate_with_kernel(samples: &[f64], kernel: &Kernel) -> Result<KernelEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let partials: Vec<RunningStats> = samples
        .par_chunks(ESTIMATE_CHUNK)
        .map(|chunk| chunk.iter().map(|&x| kernel.eval(x)).collect())
        .collect();
    let stats = partials.iter().fold(RunningStats::default(), |acc, p| acc.merge(p));
    Ok(KernelEstimate {
        mean: stats.mean(),
        std_error: stats.std_error(),
        count: stats.count(),
        s: kernel.s(),
        eta_h: kernel.eta_h(),
    })
}

/// Estimate of `W_s(0)` from random-phase homodyne data.
pub fn estimate_ws0(data: &HomodyneDataset, s: f64) -> Result<KernelEstimate> {
    let kernel = Kernel::new(s, data.eta_h())?;
    estimate_with_kernel(data.samples(), &kernel)
}
