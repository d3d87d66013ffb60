//! Joint radar target detection and delay estimation (JDE) limits.
//!
//! A single Swerling-0 target with unknown existence `v` and normalized delay
//! `x` is observed through `N` complex samples of a sinc pulse in white
//! Gaussian noise. This crate computes the exact gridded posterior
//! `p(v, x | y)`, the information measures derived from it (joint, detection
//! and estimation information, entropy error and entropy deviation), and runs
//! Monte Carlo campaigns that check the sampling-a-posteriori (SAP) and
//! cascaded decision rules reach those limits empirically.
//!
//! Module map:
//! - [`signal`]: waveform, noise, snapshot synthesis, matched filter.
//! - [`posterior`]: `ln I0`, the delay grid and the joint posterior field.
//! - [`info`]: entropies and the theoretical information report.
//! - [`jdeer`]: MAP, SAP and cascaded decision rules.
//! - [`harness`]: campaigns, empirical measures, theorem verification, sweeps.
//! - [`cli`]: argument parsing and CSV/JSON emission for the `jde` binary.

pub mod cli;
mod error;
pub mod harness;
pub mod info;
pub mod jdeer;
pub mod posterior;
pub mod signal;
pub mod stream;
pub(crate) mod sum;

pub use error::{JdeError, Result};
pub use harness::{
    run_campaign, snr_sweep, verify_cascaded_theorem, verify_joint_theorem, CampaignResult, CascadedVerdict,
    EmpiricalStats, JointVerdict,
};
pub use info::{
    differential_entropy, discrete_entropy, entropy_error_deviation, entropy_number, snapshot_entropy,
    theoretical_info, EntropyBreakdown, EntropyErrorDeviation, InfoReport,
};
pub use jdeer::{cascaded_decide, map_decide, sap_decide, Decision, Rule};
pub use posterior::{
    compute_posterior, detector_posterior, estimator_posterior, log_i0, DelayGrid, PosteriorEngine, PosteriorField,
};
pub use signal::{
    autocorrelation, generate_noise, matched_filter, sinc, synthesize_snapshot, JointTargetParameter, Snapshot,
    SystemConfig,
};
