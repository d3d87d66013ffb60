//! Band-limited radar snapshots and the matched filter.
//!
//! Units: noise power `N0 = 1` and target amplitude `alpha = sqrt(snr)`, so the
//! configured `snr` is exactly `alpha^2 / N0`. Delays are normalized by the
//! bandwidth and live on `[-N/2, N/2]`; samples are taken at integer
//! `n = -N/2 .. N/2 - 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{JdeError, Result};

/// Every knob of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Time-bandwidth product `N`: number of complex samples per snapshot.
    pub n_samples: usize,
    /// Linear SNR `rho^2`.
    pub snr: f64,
    /// Prior probability that the target is present, `pi(1)`.
    pub prior_present: f64,
    /// Grid points per unit delay.
    pub oversample: usize,
    pub seed: u64,
    /// True delays are drawn this far inside the observation window.
    pub edge_margin: f64,
    /// Force the noise to zero. Only meant for deterministic tests.
    pub noiseless: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_samples: 128,
            snr: 4.0,
            prior_present: 0.5,
            oversample: 16,
            seed: 1,
            edge_margin: 8.0,
            noiseless: false,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 || !self.n_samples.is_multiple_of(2) {
            return Err(JdeError::Config(format!("n_samples must be even and >= 2, got {}", self.n_samples)));
        }
        if !(self.snr.is_finite() && self.snr >= 0.0) {
            return Err(JdeError::Config(format!("snr must be finite and >= 0, got {}", self.snr)));
        }
        if !(0.0..=1.0).contains(&self.prior_present) {
            return Err(JdeError::Config(format!("prior_present must lie in [0, 1], got {}", self.prior_present)));
        }
        if self.oversample < 4 {
            return Err(JdeError::Config(format!("oversample must be >= 4, got {}", self.oversample)));
        }
        let half = self.half_width();
        if !(self.edge_margin.is_finite() && self.edge_margin >= 0.0 && self.edge_margin < half) {
            return Err(JdeError::Config(format!("edge_margin must lie in [0, N/2), got {}", self.edge_margin)));
        }
        Ok(())
    }

    /// Target amplitude `alpha = rho`.
    pub fn amplitude(&self) -> f64 {
        self.snr.sqrt()
    }

    /// `N / 2`.
    pub fn half_width(&self) -> f64 {
        self.n_samples as f64 / 2.0
    }

    /// Interval true delays are drawn from.
    pub fn delay_support(&self) -> (f64, f64) {
        let h = self.half_width();
        (-h + self.edge_margin, h - self.edge_margin)
    }

    /// Sample instants `n = -N/2 .. N/2 - 1`.
    pub fn sample_instants(&self) -> impl Iterator<Item = f64> {
        let h = (self.n_samples / 2) as i64;
        (-h..h).map(|n| n as f64)
    }
}

/// The pair `(v, x)`: target existence and normalized delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointTargetParameter {
    pub present: bool,
    pub delay: f64,
}

impl JointTargetParameter {
    pub fn new(present: bool, delay: f64) -> Self {
        Self { present, delay }
    }
}

/// One realization of the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub truth: JointTargetParameter,
    /// Scattering phase, never revealed to the decision rules.
    pub phase: f64,
    /// `y(n)` for `n = -N/2 .. N/2 - 1`.
    pub samples: Vec<Complex64>,
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// `N` i.i.d. circular complex Gaussian samples with variance `1/2` per component.
pub fn generate_noise<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Vec<Complex64> {
    let normal = Normal::new(0.0, 0.5f64.sqrt()).expect("valid normal");
    (0..config.n_samples)
        .map(|_| {
            let re = normal.sample(rng);
            let im = normal.sample(rng);
            Complex64::new(re, im)
        })
        .collect()
}

/// Draws one snapshot `y(n) = v rho e^{j phi} sinc(n - x) + w(n)`.
///
/// Stream consumption order is fixed: the phase first, then the noise vector.
pub fn synthesize_snapshot<R: Rng + ?Sized>(
    config: &SystemConfig,
    truth: JointTargetParameter,
    rng: &mut R,
) -> Result<Snapshot> {
    config.validate()?;
    let (lo, hi) = config.delay_support();
    if !(truth.delay >= lo && truth.delay <= hi) {
        return Err(JdeError::Precondition(format!("true delay {} outside [{lo}, {hi}]", truth.delay)));
    }
    let phase = rng.random::<f64>() * 2.0 * PI;
    let mut samples =
        if config.noiseless { vec![Complex64::new(0.0, 0.0); config.n_samples] } else { generate_noise(config, rng) };
    let rho = config.amplitude();
    if truth.present && rho > 0.0 {
        let scatter = Complex64::from_polar(rho, phase);
        for (y, n) in samples.iter_mut().zip(config.sample_instants()) {
            *y += scatter * sinc(n - truth.delay);
        }
    }
    Ok(Snapshot { truth, phase, samples })
}

/// Matched filter output `sum_n sinc(n - x) y(n)`.
pub fn matched_filter(snapshot: &Snapshot, x: f64) -> Complex64 {
    let h = (snapshot.samples.len() / 2) as i64;
    snapshot.samples.iter().zip(-h..h).map(|(y, n)| y * sinc(n as f64 - x)).sum()
}

/// Truncated autocorrelation `sum_n sinc(n - x) sinc(n - x0)` over the
/// observation window. Approaches `sinc(x - x0)` away from the window edges;
/// for integer `x0` it equals `sinc(x - x0)` exactly.
pub fn autocorrelation(x: f64, x0: f64, n_samples: usize) -> f64 {
    let h = (n_samples / 2) as i64;
    (-h..h).map(|n| sinc(n as f64 - x) * sinc(n as f64 - x0)).sum()
}
