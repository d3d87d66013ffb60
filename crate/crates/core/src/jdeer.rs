//! Joint detection-estimation decision rules.
//!
//! Scores are hybrid log2 densities: `log2 P(v|y) + log2 p(x|y,v)` for the
//! posterior and `log2 pi(v) + log2 (1/N)` for the prior. Delay densities are
//! piecewise constant over grid cells, so a sampled `x` is scored with the
//! density of the cell it landed in.

use std::f64::consts::LN_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::posterior::PosteriorField;
use crate::signal::JointTargetParameter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Map,
    Sap,
    Cascaded,
}

impl Rule {
    pub const ALL: [Rule; 3] = [Rule::Map, Rule::Sap, Rule::Cascaded];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Map => "map",
            Rule::Sap => "sap",
            Rule::Cascaded => "cascaded",
        }
    }
}

impl std::str::FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "map" => Ok(Rule::Map),
            "sap" => Ok(Rule::Sap),
            "cascaded" | "cascade" => Ok(Rule::Cascaded),
            other => Err(format!("unknown rule '{other}' (expected map, sap or cascaded)")),
        }
    }
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One decision `(v_hat, x_hat)` with the scores the empirical measures need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub estimate: JointTargetParameter,
    /// `log2 p(v_hat, x_hat | y)`.
    pub log_post: f64,
    /// `log2 pi(v_hat, x_hat)`.
    pub log_prior: f64,
    /// `log2 P(v_hat | y)`, the detector's soft output.
    pub detect_log_post: f64,
    /// `log2 pi(v_hat)`.
    pub detect_log_prior: f64,
    pub rule: Rule,
    /// Whether the delay estimator was evaluated (always for MAP and SAP; only
    /// after a "present" verdict for the cascade).
    pub estimator_ran: bool,
    /// Grid cell containing `x_hat`.
    pub cell: usize,
}

impl Decision {
    /// `log2 [p(gamma_hat | y) / pi(gamma_hat)]`.
    pub fn log_ratio(&self) -> f64 {
        self.log_post - self.log_prior
    }

    /// `log2 [P(v_hat | y) / pi(v_hat)]`.
    pub fn detect_log_ratio(&self) -> f64 {
        self.detect_log_post - self.detect_log_prior
    }

    /// `log2 [p(x_hat | y, 1) / pi(x_hat)]` when the target was declared
    /// present, zero otherwise.
    pub fn estimate_log_ratio(&self) -> f64 {
        if self.estimate.present {
            self.log_ratio() - self.detect_log_ratio()
        } else {
            0.0
        }
    }
}

struct Scorer<'a> {
    field: &'a PosteriorField,
}

impl Scorer<'_> {
    fn decision(&self, present: bool, delay: f64, cell: usize, rule: Rule, estimator_ran: bool) -> Decision {
        let f = self.field;
        let detect_log_post = f.log_p(present) / LN_2;
        let detect_log_prior = f.prior(present).ln() / LN_2;
        let log_uniform = f.uniform_density().log2();
        Decision {
            estimate: JointTargetParameter::new(present, delay),
            log_post: detect_log_post + f.conditional_density(present, cell).log2(),
            log_prior: detect_log_prior + log_uniform,
            detect_log_post,
            detect_log_prior,
            rule,
            estimator_ran,
            cell,
        }
    }
}

/// Maximum a posteriori rule: the joint argmax of `P(v|y) p(x|y,v)`.
///
/// Ties in `v` go to absence, ties in `x` to the smallest grid point. A
/// declared absence reports `x_hat = 0`.
pub fn map_decide(field: &PosteriorField) -> Decision {
    let scorer = Scorer { field };
    let density = field.present_density();
    let mut best = 0;
    for (k, d) in density.iter().enumerate() {
        if *d > density[best] {
            best = k;
        }
    }
    let present_score = field.log_p(true) / LN_2 + density[best].log2();
    let absent_score = field.log_p(false) / LN_2 + field.uniform_density().log2();
    if field.p_present > 0.0 && present_score > absent_score {
        scorer.decision(true, field.grid.point(best), best, Rule::Map, true)
    } else {
        let cell = field.grid.cell_index(0.0);
        scorer.decision(false, 0.0, cell, Rule::Map, true)
    }
}

fn draw_presence<R: Rng + ?Sized>(field: &PosteriorField, rng: &mut R) -> bool {
    let u: f64 = rng.random();
    u < field.p_present
}

// Inverse CDF over cell masses, then uniform inside the chosen cell.
fn draw_present_delay<R: Rng + ?Sized>(field: &PosteriorField, rng: &mut R) -> (f64, usize) {
    let cdf = field.present_cdf();
    let total = *cdf.last().expect("non-empty grid");
    let t = rng.random::<f64>() * total;
    let k = cdf.partition_point(|&c| c <= t).min(cdf.len() - 1);
    let (lo, hi) = field.grid.cell(k);
    let x = lo + rng.random::<f64>() * (hi - lo);
    (x, k)
}

fn draw_prior_delay<R: Rng + ?Sized>(field: &PosteriorField, rng: &mut R) -> (f64, usize) {
    let half = field.grid.n_samples() as f64 / 2.0;
    let x = -half + rng.random::<f64>() * 2.0 * half;
    (x, field.grid.cell_index(x))
}

/// Sampling-a-posteriori rule: `(v_hat, x_hat) ~ p(v, x | y)`.
pub fn sap_decide<R: Rng + ?Sized>(field: &PosteriorField, rng: &mut R) -> Decision {
    let present = draw_presence(field, rng);
    let (x, cell) = if present { draw_present_delay(field, rng) } else { draw_prior_delay(field, rng) };
    Scorer { field }.decision(present, x, cell, Rule::Sap, true)
}

/// SAP detector followed by a SAP delay estimator that only runs on a
/// "present" verdict. After an "absent" verdict the delay is drawn from the
/// prior so the decision stays total.
pub fn cascaded_decide<R: Rng + ?Sized>(field: &PosteriorField, rng: &mut R) -> Decision {
    let present = draw_presence(field, rng);
    if present {
        let (x, cell) = draw_present_delay(field, rng);
        Scorer { field }.decision(true, x, cell, Rule::Cascaded, true)
    } else {
        let (x, cell) = draw_prior_delay(field, rng);
        Scorer { field }.decision(false, x, cell, Rule::Cascaded, false)
    }
}
