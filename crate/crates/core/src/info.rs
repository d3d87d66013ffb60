//! Entropies and information measures, all in bits.
//!
//! The mixed discrete/continuous posterior entropy is split as
//! `h(VX|y) = H(V|y) + sum_v P(v|y) h(X|y,v)`. Entropy errors and deviations
//! put the `1/(2 pi e)` factor on the continuous (delay) part only.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{JdeError, Result};
use crate::posterior::{estimator_posterior, DelayGrid, PosteriorField};
use crate::signal::SystemConfig;
use crate::sum;

/// Binary entropy `-p log2 p - (1-p) log2 (1-p)`, with `0 log 0 = 0`.
pub fn discrete_entropy(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "probability {p} out of range");
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Trapezoid-rule differential entropy `-int p log2 p dx` of a gridded density.
pub fn differential_entropy(density: &[f64], grid: &DelayGrid) -> Result<f64> {
    if density.len() != grid.len() {
        return Err(JdeError::InvalidInput(format!("density has {} points, grid has {}", density.len(), grid.len())));
    }
    if density.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(JdeError::InvalidInput("density must be finite and nonnegative".into()));
    }
    let total = grid.integrate(density);
    if (total - 1.0).abs() > 1e-6 {
        return Err(JdeError::InvalidInput(format!("density integrates to {total}, not 1")));
    }
    let integrand: Vec<f64> = density.iter().map(|&p| if p > 0.0 { -p * p.log2() } else { 0.0 }).collect();
    Ok(grid.integrate(&integrand))
}

/// Entropy number `2^h`: the effective alphabet size of a discrete source.
pub fn entropy_number(h: f64) -> f64 {
    h.exp2()
}

/// Posterior entropy of one snapshot, split into detection and estimation parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyBreakdown {
    /// `H(V | y)`.
    pub h_detect: f64,
    /// `sum_v P(v|y) h(X | y, v)`.
    pub h_estimate: f64,
    /// `h_detect + h_estimate`.
    pub h_joint: f64,
}

impl EntropyBreakdown {
    pub fn new(h_detect: f64, h_estimate: f64) -> Self {
        Self { h_detect, h_estimate, h_joint: h_detect + h_estimate }
    }
}

pub fn snapshot_entropy(field: &PosteriorField) -> Result<EntropyBreakdown> {
    let p1 = field.p_present;
    let h_detect = discrete_entropy(p1);
    let branch =
        |present: bool| -> Result<f64> { differential_entropy(&estimator_posterior(field, present)?, &field.grid) };
    // h0 + P1 (h1 - h0) is sum_v P(v) h_v, and stays exact when h1 == h0.
    let h_estimate = if p1 <= 0.0 {
        branch(false)?
    } else if p1 >= 1.0 {
        branch(true)?
    } else {
        let h0 = branch(false)?;
        h0 + p1 * (branch(true)? - h0)
    };
    Ok(EntropyBreakdown::new(h_detect, h_estimate))
}

/// Entropy errors (`ee_*`) and entropy deviations (`ed_*`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyErrorDeviation {
    pub ee_joint: f64,
    pub ed_joint: f64,
    pub ee_detect: f64,
    pub ed_detect: f64,
    pub ee_estimate: f64,
    pub ed_estimate: f64,
}

pub fn entropy_error_deviation(b: &EntropyBreakdown) -> EntropyErrorDeviation {
    let ee_detect = (2.0 * b.h_detect).exp2();
    let ed_detect = b.h_detect.exp2();
    let ee_estimate = (2.0 * b.h_estimate).exp2() / (2.0 * PI * E);
    let ed_estimate = b.h_estimate.exp2() / (2.0 * PI * E).sqrt();
    EntropyErrorDeviation {
        ee_joint: ee_detect * ee_estimate,
        ed_joint: ed_detect * ed_estimate,
        ee_detect,
        ed_detect,
        ee_estimate,
        ed_estimate,
    }
}

/// Monte Carlo estimate of the theoretical information limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    /// `I(Y; VX)`.
    pub i_joint: f64,
    /// `I(Y; V)`.
    pub i_detect: f64,
    /// `I(Y; X | V)`.
    pub i_estimate: f64,
    /// `h(VX) = H(pi(1)) + log2 N`.
    pub h_prior_joint: f64,
    /// Mean posterior entropies.
    pub h_joint: f64,
    pub h_detect: f64,
    pub h_estimate: f64,
    pub ee_joint: f64,
    pub ee_detect: f64,
    pub ee_estimate: f64,
    pub ed_joint: f64,
    pub ed_detect: f64,
    pub ed_estimate: f64,
    /// Standard error of the Monte Carlo mean of `h_joint` (and so of `i_joint`).
    pub mc_std_err: f64,
    pub std_err_detect: f64,
    pub std_err_estimate: f64,
    pub n_mc: usize,
}

impl InfoReport {
    pub fn from_breakdowns(config: &SystemConfig, breakdowns: &[EntropyBreakdown]) -> Self {
        let pick = |f: fn(&EntropyBreakdown) -> f64| breakdowns.iter().map(f).collect::<Vec<_>>();
        let (joint, detect, estimate) = (pick(|b| b.h_joint), pick(|b| b.h_detect), pick(|b| b.h_estimate));
        let h_prior_detect = discrete_entropy(config.prior_present);
        let h_prior_estimate = (config.n_samples as f64).log2();
        let h_prior_joint = h_prior_detect + h_prior_estimate;
        let mean = EntropyBreakdown {
            h_detect: sum::mean(&detect),
            h_estimate: sum::mean(&estimate),
            h_joint: sum::mean(&joint),
        };
        let eed = entropy_error_deviation(&mean);
        Self {
            i_joint: h_prior_joint - mean.h_joint,
            i_detect: h_prior_detect - mean.h_detect,
            i_estimate: h_prior_estimate - mean.h_estimate,
            h_prior_joint,
            h_joint: mean.h_joint,
            h_detect: mean.h_detect,
            h_estimate: mean.h_estimate,
            ee_joint: eed.ee_joint,
            ee_detect: eed.ee_detect,
            ee_estimate: eed.ee_estimate,
            ed_joint: eed.ed_joint,
            ed_detect: eed.ed_detect,
            ed_estimate: eed.ed_estimate,
            mc_std_err: sum::std_err(&joint),
            std_err_detect: sum::std_err(&detect),
            std_err_estimate: sum::std_err(&estimate),
            n_mc: breakdowns.len(),
        }
    }
}

/// Draws `n_mc` snapshots from the prior and channel and averages their
/// posterior entropies. `seed` replaces the configured master seed.
pub fn theoretical_info(config: &SystemConfig, n_mc: usize, seed: u64) -> Result<InfoReport> {
    if n_mc < 100 {
        return Err(JdeError::Precondition(format!("n_mc must be >= 100, got {n_mc}")));
    }
    let config = SystemConfig { seed, ..*config };
    crate::harness::theoretical_report(&config, n_mc, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::PosteriorEngine;
    use crate::signal::{synthesize_snapshot, JointTargetParameter};
    use crate::stream::{substream, Purpose};
    use proptest::prelude::*;

    #[test]
    fn binary_entropy_values() {
        assert_eq!(discrete_entropy(0.5), 1.0);
        assert_eq!(discrete_entropy(0.0), 0.0);
        assert_eq!(discrete_entropy(1.0), 0.0);
        // -(1/4) log2(1/4) - (3/4) log2(3/4)
        let expect = 0.5 + 0.75 * (4.0f64 / 3.0).log2();
        assert!((discrete_entropy(0.25) - expect).abs() < 1e-15);
        assert!((discrete_entropy(0.25) - 0.811_278).abs() < 1e-6);
    }

    #[test]
    fn uniform_differential_entropy() {
        for (n, bits) in [(128, 7.0), (64, 6.0)] {
            let grid = DelayGrid::new(n, 16).unwrap();
            let d = vec![1.0 / n as f64; grid.len()];
            assert!((differential_entropy(&d, &grid).unwrap() - bits).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_differential_entropy() {
        let grid = DelayGrid::new(32, 16).unwrap();
        let d: Vec<f64> = grid.points().iter().map(|x| (-0.5 * x * x).exp() / (2.0 * PI).sqrt()).collect();
        let expect = 0.5 * (2.0 * PI * E).log2();
        assert!((expect - 2.047_1).abs() < 1e-4);
        assert!((differential_entropy(&d, &grid).unwrap() - expect).abs() < 1e-3);
    }

    #[test]
    fn unnormalized_density_is_rejected() {
        let grid = DelayGrid::new(16, 4).unwrap();
        assert!(differential_entropy(&vec![0.1; grid.len()], &grid).is_err());
        assert!(differential_entropy(&[1.0], &grid).is_err());
    }

    #[test]
    fn entropy_numbers() {
        for n in [2u32, 4, 8] {
            assert!((entropy_number(f64::from(n).log2()) - f64::from(n)).abs() < 1e-12);
        }
        assert_eq!(entropy_number(0.0), 1.0);
    }

    #[test]
    fn zero_snr_breakdown_is_the_prior() {
        let cfg = SystemConfig { snr: 0.0, ..Default::default() };
        let snap =
            synthesize_snapshot(&cfg, JointTargetParameter::new(true, 0.0), &mut substream(0, 0, Purpose::Channel))
                .unwrap();
        let field = PosteriorEngine::new(&cfg).unwrap().posterior(&snap).unwrap();
        assert_eq!(
            snapshot_entropy(&field).unwrap(),
            EntropyBreakdown { h_detect: 1.0, h_estimate: 7.0, h_joint: 8.0 }
        );
    }

    #[test]
    fn strong_target_leaves_little_detection_entropy() {
        let cfg = SystemConfig { snr: 100.0, noiseless: true, ..Default::default() };
        let snap =
            synthesize_snapshot(&cfg, JointTargetParameter::new(true, 3.0), &mut substream(0, 0, Purpose::Channel))
                .unwrap();
        let field = PosteriorEngine::new(&cfg).unwrap().posterior(&snap).unwrap();
        assert!(field.p_present > 1.0 - 1e-3);
        let b = snapshot_entropy(&field).unwrap();
        assert!(b.h_detect < 1e-2);
        assert!(b.h_estimate <= 7.0 + 1e-9);
    }

    #[test]
    fn deviation_examples() {
        let d = entropy_error_deviation(&EntropyBreakdown::new(1.0, 3.3));
        assert_eq!(d.ed_detect, 2.0);
        let d = entropy_error_deviation(&EntropyBreakdown::new(0.0, 0.0));
        assert!((d.ed_joint - 0.241_970_724_519_143_37).abs() < 1e-15);
    }

    #[test]
    fn theoretical_info_needs_enough_draws() {
        assert!(theoretical_info(&SystemConfig::default(), 99, 1).is_err());
    }

    proptest! {
        #[test]
        fn error_and_deviation_factor(h_detect in 0.0f64..1.0, h_estimate in -5.0f64..10.0) {
            let b = EntropyBreakdown::new(h_detect, h_estimate);
            prop_assert_eq!(b.h_joint, b.h_detect + b.h_estimate);
            let d = entropy_error_deviation(&b);
            let joint_ee = (2.0 * b.h_joint).exp2() / (2.0 * PI * E);
            let joint_ed = b.h_joint.exp2() / (2.0 * PI * E).sqrt();
            prop_assert!((d.ee_joint - joint_ee).abs() <= 1e-12 * joint_ee);
            prop_assert!((d.ed_joint - joint_ed).abs() <= 1e-12 * joint_ed);
            prop_assert!((d.ed_joint * d.ed_joint - d.ee_joint).abs() <= 1e-12 * d.ee_joint);
        }

        #[test]
        fn binary_entropy_bounds(p in 0.0f64..=1.0) {
            let h = discrete_entropy(p);
            prop_assert!((0.0..=1.0).contains(&h));
            prop_assert!((h - discrete_entropy(1.0 - p)).abs() < 1e-15);
        }
    }
}
