//! Gridded joint posterior `p(v, x | y)`.
//!
//! With the prior `pi(v, x) = pi(v) / N` and the noise/amplitude normalization
//! of [`crate::signal`], the unnormalized log-weight of `(v, x)` is
//!
//! ```text
//! ln pi(v) - ln N - v rho^2 + ln I0(2 v rho |u(x)^H y|)
//! ```
//!
//! The `v = 0` row is flat, so everything reduces to the prior-averaged Bessel
//! term `A1 = (1/N) int exp(-rho^2) I0(2 rho |u(x)^H y|) dx` of the `v = 1`
//! row. All accumulation happens in log domain; the normalizer is only ever
//! held as a logarithm.

mod bessel;

pub use bessel::log_i0;

use num_complex::Complex64;

use crate::error::{JdeError, Result};
use crate::signal::{sinc, Snapshot, SystemConfig};

/// Uniform delay grid over `[-N/2, N/2]` with `L` points per unit delay.
///
/// Quadrature is the trapezoid rule; point `k` owns the cell
/// `[x_k - dx/2, x_k + dx/2]` clipped to the window, whose width equals its
/// trapezoid weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayGrid {
    n_samples: usize,
    oversample: usize,
}

impl DelayGrid {
    pub fn new(n_samples: usize, oversample: usize) -> Result<Self> {
        if n_samples < 2 || !n_samples.is_multiple_of(2) || oversample == 0 {
            return Err(JdeError::Config(format!(
                "grid needs even N >= 2 and L >= 1, got N={n_samples} L={oversample}"
            )));
        }
        Ok(Self { n_samples, oversample })
    }

    pub fn for_config(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        Self::new(config.n_samples, config.oversample)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    /// Number of grid points, `N L + 1`.
    pub fn len(&self) -> usize {
        self.n_samples * self.oversample + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.oversample as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        let centre = (self.n_samples * self.oversample / 2) as f64;
        (k as f64 - centre) / self.oversample as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    pub fn weight(&self, k: usize) -> f64 {
        let dx = self.spacing();
        if k == 0 || k + 1 == self.len() {
            0.5 * dx
        } else {
            dx
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.weight(k)).collect()
    }

    /// Interval owned by point `k`.
    pub fn cell(&self, k: usize) -> (f64, f64) {
        let half = self.n_samples as f64 / 2.0;
        let x = self.point(k);
        let h = 0.5 * self.spacing();
        ((x - h).max(-half), (x + h).min(half))
    }

    /// Index of the point whose cell contains `x` (ties go to the lower index).
    pub fn cell_index(&self, x: f64) -> usize {
        let half = self.n_samples as f64 / 2.0;
        let pos = ((x + half) * self.oversample as f64).round();
        (pos.max(0.0) as usize).min(self.len() - 1)
    }

    /// Trapezoid rule over the grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().enumerate().map(|(k, v)| self.weight(k) * v).sum()
    }
}

/// Tabulated matched filter for every grid point.
///
/// `sinc(n - x_k)` only depends on the integer `j L - k` (with `j = n + N/2`),
/// so one table of `(2N - 1) L + 1` values serves the whole grid.
#[derive(Debug, Clone)]
struct FilterBank {
    grid: DelayGrid,
    // rev[i] = sinc(((N - 1) L - i) / L)
    rev: Vec<f64>,
}

impl FilterBank {
    fn new(grid: DelayGrid) -> Self {
        let l = grid.oversample;
        let top = ((grid.n_samples - 1) * l) as i64;
        let len = (2 * grid.n_samples - 1) * l + 1;
        let rev = (0..len as i64).map(|i| sinc((top - i) as f64 / l as f64)).collect();
        Self { grid, rev }
    }

    fn apply(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let k_len = self.grid.len();
        let n = self.grid.n_samples;
        let l = self.grid.oversample;
        let mut re = vec![0.0; k_len];
        let mut im = vec![0.0; k_len];
        for (j, y) in samples.iter().enumerate() {
            let off = (n - 1 - j) * l;
            let taps = &self.rev[off..off + k_len];
            for ((r, i), t) in re.iter_mut().zip(im.iter_mut()).zip(taps) {
                *r += y.re * t;
                *i += y.im * t;
            }
        }
        re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect()
    }
}

/// Reusable posterior evaluator for one configuration.
#[derive(Debug, Clone)]
pub struct PosteriorEngine {
    config: SystemConfig,
    bank: FilterBank,
}

impl PosteriorEngine {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        let grid = DelayGrid::for_config(config)?;
        Ok(Self { config: *config, bank: FilterBank::new(grid) })
    }

    pub fn with_grid(config: &SystemConfig, grid: DelayGrid) -> Result<Self> {
        config.validate()?;
        if grid.n_samples != config.n_samples {
            return Err(JdeError::Precondition(format!(
                "grid spans N={} but the config has N={}",
                grid.n_samples, config.n_samples
            )));
        }
        Ok(Self { config: *config, bank: FilterBank::new(grid) })
    }

    pub fn grid(&self) -> DelayGrid {
        self.bank.grid
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    /// `u(x_k)^H y` at every grid point.
    pub fn matched_filter_curve(&self, snapshot: &Snapshot) -> Result<Vec<Complex64>> {
        if snapshot.samples.len() != self.config.n_samples {
            return Err(JdeError::InvalidInput(format!(
                "snapshot has {} samples, expected {}",
                snapshot.samples.len(),
                self.config.n_samples
            )));
        }
        Ok(self.bank.apply(&snapshot.samples))
    }

    pub fn posterior(&self, snapshot: &Snapshot) -> Result<PosteriorField> {
        let curve = self.matched_filter_curve(snapshot)?;
        let grid = self.bank.grid;
        let two_rho = 2.0 * self.config.amplitude();
        let mut log_bessel = Vec::with_capacity(curve.len());
        for z in &curve {
            let mag = z.norm();
            if !mag.is_finite() {
                return Err(JdeError::InvalidInput("matched filter output is not finite".into()));
            }
            log_bessel.push(log_i0(two_rho * mag)?);
        }
        let peak = log_bessel.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shape: Vec<f64> = log_bessel.iter().map(|l| (l - peak).exp()).collect();
        let mass: f64 = shape.iter().enumerate().map(|(k, s)| grid.weight(k) * s).sum();
        let width: f64 = (0..grid.len()).map(|k| grid.weight(k) * 1.0).sum();
        // Prior-averaged Bessel term; exactly 1 (log 0) when rho = 0.
        let ratio = mass / width;
        let log_a1 = peak + ratio.ln() - self.config.snr;
        let scale = 1.0 / (ratio * self.config.n_samples as f64);
        let density: Vec<f64> = shape.iter().map(|s| s * scale).collect();
        Ok(PosteriorField::assemble(grid, self.config.prior_present, log_a1, density))
    }
}

/// Joint posterior over `(v, x)` on a delay grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorField {
    pub grid: DelayGrid,
    /// Natural-log density `ln p(v, x_k | y)`; row 0 is `v = 0`, row 1 is `v = 1`.
    pub log_joint: [Vec<f64>; 2],
    /// `P(v = 1 | y)`.
    pub p_present: f64,
    /// Natural log of the normalizer over the prior-scaled likelihood ratio.
    pub log_norm: f64,
    prior_present: f64,
    log_p_absent: f64,
    log_p_present: f64,
    present_density: Vec<f64>,
    present_cdf: Vec<f64>,
}

impl PosteriorField {
    fn assemble(grid: DelayGrid, prior: f64, log_a1: f64, density: Vec<f64>) -> Self {
        let (p_present, log_p_present, log_p_absent) = detection_split(prior, log_a1);
        let log_norm = log_add_exp((1.0 - prior).ln(), prior.ln() + log_a1);
        Self::from_parts(grid, prior, p_present, log_p_present, log_p_absent, log_norm, density)
    }

    fn from_parts(
        grid: DelayGrid,
        prior_present: f64,
        p_present: f64,
        log_p_present: f64,
        log_p_absent: f64,
        log_norm: f64,
        present_density: Vec<f64>,
    ) -> Self {
        let log_uniform = -(grid.n_samples as f64).ln();
        let absent_row = vec![log_p_absent + log_uniform; grid.len()];
        let present_row = present_density.iter().map(|d| log_p_present + d.ln()).collect();
        let mut acc = 0.0;
        let present_cdf = present_density
            .iter()
            .enumerate()
            .map(|(k, d)| {
                acc += grid.weight(k) * d;
                acc
            })
            .collect();
        Self {
            grid,
            log_joint: [absent_row, present_row],
            p_present,
            log_norm,
            prior_present,
            log_p_absent,
            log_p_present,
            present_density,
            present_cdf,
        }
    }

    /// Builds a field from an explicit `P(v=1|y)` and conditional density
    /// `p(x|y,1)`. Used for synthetic fields in tests and bindings.
    pub fn from_density(
        grid: DelayGrid,
        prior_present: f64,
        p_present: f64,
        present_density: Vec<f64>,
    ) -> Result<Self> {
        if present_density.len() != grid.len() {
            return Err(JdeError::InvalidInput(format!(
                "density has {} points, grid has {}",
                present_density.len(),
                grid.len()
            )));
        }
        if !(0.0..=1.0).contains(&p_present) || !(0.0..=1.0).contains(&prior_present) {
            return Err(JdeError::InvalidInput("probabilities must lie in [0, 1]".into()));
        }
        if present_density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(JdeError::InvalidInput("density must be finite and nonnegative".into()));
        }
        let total = grid.integrate(&present_density);
        if (total - 1.0).abs() > 1e-9 {
            return Err(JdeError::InvalidInput(format!("density integrates to {total}, not 1")));
        }
        let log_norm = if p_present < 1.0 {
            (1.0 - prior_present).ln() - (1.0 - p_present).ln()
        } else {
            prior_present.ln() - p_present.ln()
        };
        Ok(Self::from_parts(
            grid,
            prior_present,
            p_present,
            p_present.ln(),
            (1.0 - p_present).ln(),
            log_norm,
            present_density,
        ))
    }

    pub fn prior_present(&self) -> f64 {
        self.prior_present
    }

    /// `P(v | y)`.
    pub fn p(&self, present: bool) -> f64 {
        if present {
            self.p_present
        } else {
            self.log_p_absent.exp()
        }
    }

    /// `ln P(v | y)`, computed without cancellation.
    pub fn log_p(&self, present: bool) -> f64 {
        if present {
            self.log_p_present
        } else {
            self.log_p_absent
        }
    }

    /// Prior `pi(v)`.
    pub fn prior(&self, present: bool) -> f64 {
        if present {
            self.prior_present
        } else {
            1.0 - self.prior_present
        }
    }

    /// Uniform delay prior `1/N`.
    pub fn uniform_density(&self) -> f64 {
        1.0 / self.grid.n_samples as f64
    }

    /// `p(x_k | y, v)`.
    pub fn conditional_density(&self, present: bool, k: usize) -> f64 {
        if present {
            self.present_density[k]
        } else {
            self.uniform_density()
        }
    }

    pub(crate) fn present_density(&self) -> &[f64] {
        &self.present_density
    }

    /// Cumulative cell masses of `p(x | y, 1)`.
    pub(crate) fn present_cdf(&self) -> &[f64] {
        &self.present_cdf
    }
}

// (P1, ln P1, ln P0) from the prior and ln A1.
fn detection_split(prior: f64, log_a1: f64) -> (f64, f64, f64) {
    if prior <= 0.0 {
        return (0.0, f64::NEG_INFINITY, 0.0);
    }
    if prior >= 1.0 {
        return (1.0, 0.0, f64::NEG_INFINITY);
    }
    if log_a1 == 0.0 {
        // Likelihood ratio of one: the posterior is the prior, bit for bit.
        return (prior, prior.ln(), (1.0 - prior).ln());
    }
    let logit = prior.ln() - (1.0 - prior).ln() + log_a1;
    let ln_p1 = -log1p_exp(-logit);
    let ln_p0 = -log1p_exp(logit);
    (ln_p1.exp(), ln_p1, ln_p0)
}

// ln(1 + e^t) without overflow.
fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Posterior field for one snapshot on an explicit grid.
pub fn compute_posterior(snapshot: &Snapshot, config: &SystemConfig, grid: DelayGrid) -> Result<PosteriorField> {
    PosteriorEngine::with_grid(config, grid)?.posterior(snapshot)
}

/// `P(v = 1 | y)`.
pub fn detector_posterior(field: &PosteriorField) -> f64 {
    field.p_present
}

/// `p(x | y, v)` at every grid point.
pub fn estimator_posterior(field: &PosteriorField, present: bool) -> Result<Vec<f64>> {
    if field.p(present) <= 0.0 {
        return Err(JdeError::DegenerateConditioning { v: u8::from(present) });
    }
    Ok(if present { field.present_density.clone() } else { vec![field.uniform_density(); field.grid.len()] })
}
