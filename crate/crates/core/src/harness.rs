//! Monte Carlo campaigns and the achievability checks built on them.
//!
//! Snapshot `m` of a campaign is a pure function of `(config, m)`: the target
//! is drawn from the prior and the channel noise from the channel substream of
//! index `m`, and each rule samples from its own substream. Per-snapshot
//! results are collected in index order and reduced with a fixed pairwise
//! tree, so a campaign is bit-identical for any worker count, and every
//! checkpoint equals a fresh campaign of that length.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{JdeError, Result};
use crate::info::{snapshot_entropy, EntropyBreakdown, InfoReport};
use crate::jdeer::{cascaded_decide, map_decide, sap_decide, Decision, Rule};
use crate::posterior::PosteriorEngine;
use crate::signal::{synthesize_snapshot, JointTargetParameter, SystemConfig};
use crate::stream::{substream, Purpose};
use crate::sum::pairwise_reduce;

/// Running sums behind the empirical measures of one rule.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EmpiricalStats {
    pub m: u64,
    /// `sum -log2 p(gamma_hat | y)`.
    pub sum_neg_log_post: f64,
    /// `sum log2 [p(gamma_hat | y) / pi(gamma_hat)]`.
    pub sum_log_ratio: f64,
    pub sum_sq_log_ratio: f64,
    /// `sum log2 [P(v_hat | y) / pi(v_hat)]`.
    pub sum_detect_ratio: f64,
    /// `sum log2 [p(x_hat | y, 1) / pi(x_hat)]` over "present" verdicts.
    pub sum_estimate_ratio: f64,
    /// Number of times the delay estimator was evaluated.
    pub estimator_runs: u64,
    /// Counts indexed `[true v][decided v]`.
    pub detection_table: [[u64; 2]; 2],
}

impl EmpiricalStats {
    pub fn from_decision(truth_present: bool, d: &Decision) -> Self {
        let mut table = [[0; 2]; 2];
        table[usize::from(truth_present)][usize::from(d.estimate.present)] = 1;
        let r = d.log_ratio();
        Self {
            m: 1,
            sum_neg_log_post: -d.log_post,
            sum_log_ratio: r,
            sum_sq_log_ratio: r * r,
            sum_detect_ratio: d.detect_log_ratio(),
            sum_estimate_ratio: d.estimate_log_ratio(),
            estimator_runs: u64::from(d.estimator_ran),
            detection_table: table,
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        let mut table = self.detection_table;
        for (row, orow) in table.iter_mut().zip(other.detection_table) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
        Self {
            m: self.m + other.m,
            sum_neg_log_post: self.sum_neg_log_post + other.sum_neg_log_post,
            sum_log_ratio: self.sum_log_ratio + other.sum_log_ratio,
            sum_sq_log_ratio: self.sum_sq_log_ratio + other.sum_sq_log_ratio,
            sum_detect_ratio: self.sum_detect_ratio + other.sum_detect_ratio,
            sum_estimate_ratio: self.sum_estimate_ratio + other.sum_estimate_ratio,
            estimator_runs: self.estimator_runs + other.estimator_runs,
            detection_table: table,
        }
    }

    fn per_snapshot(&self, total: f64) -> f64 {
        if self.m == 0 {
            f64::NAN
        } else {
            total / self.m as f64
        }
    }

    /// Empirical joint entropy `h^(M)`.
    pub fn entropy(&self) -> f64 {
        self.per_snapshot(self.sum_neg_log_post)
    }

    /// Empirical joint entropy error `(1/2 pi e) 2^(2 h^(M))`.
    pub fn entropy_error(&self) -> f64 {
        (2.0 * self.entropy()).exp2() / (2.0 * PI * E)
    }

    /// Empirical joint entropy deviation `(1/sqrt(2 pi e)) 2^(h^(M))`.
    pub fn entropy_deviation(&self) -> f64 {
        self.entropy().exp2() / (2.0 * PI * E).sqrt()
    }

    /// Empirical joint information `I^(M)`.
    pub fn information(&self) -> f64 {
        self.per_snapshot(self.sum_log_ratio)
    }

    pub fn detection_information(&self) -> f64 {
        self.per_snapshot(self.sum_detect_ratio)
    }

    /// Estimation part, normalized by all `M` snapshots.
    pub fn estimation_information(&self) -> f64 {
        self.per_snapshot(self.sum_estimate_ratio)
    }

    /// Standard error of [`Self::information`].
    pub fn std_err(&self) -> f64 {
        if self.m < 2 {
            return 0.0;
        }
        let m = self.m as f64;
        let mean = self.sum_log_ratio / m;
        let var = ((self.sum_sq_log_ratio - m * mean * mean) / (m - 1.0)).max(0.0);
        (var / m).sqrt()
    }

    /// Plug-in mutual information between true and decided existence.
    pub fn decision_truth_information(&self) -> f64 {
        plugin_detection_information(&self.detection_table)
    }
}

/// Plug-in mutual information (bits) of a 2x2 contingency table.
pub fn plugin_detection_information(table: &[[u64; 2]; 2]) -> f64 {
    let total: u64 = table.iter().flatten().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let p = c as f64 / n;
                mi += p * (c as f64 * n / (rows[i] as f64 * cols[j] as f64)).log2();
            }
        }
    }
    mi.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SnapshotRecord {
    pub truth: JointTargetParameter,
    pub breakdown: EntropyBreakdown,
    decisions: [Option<Decision>; 3],
}

impl SnapshotRecord {
    fn decision(&self, rule: Rule) -> Option<&Decision> {
        self.decisions[rule_slot(rule)].as_ref()
    }
}

fn rule_slot(rule: Rule) -> usize {
    match rule {
        Rule::Map => 0,
        Rule::Sap => 1,
        Rule::Cascaded => 2,
    }
}

fn simulate_snapshot(engine: &PosteriorEngine, index: u64, rules: &[Rule]) -> Result<SnapshotRecord> {
    let config = engine.config();
    let mut rng = substream(config.seed, index, Purpose::Channel);
    let present = rng.random::<f64>() < config.prior_present;
    let (lo, hi) = config.delay_support();
    let delay = lo + rng.random::<f64>() * (hi - lo);
    let truth = JointTargetParameter::new(present, delay);
    let snapshot = synthesize_snapshot(config, truth, &mut rng)?;
    let field = engine.posterior(&snapshot)?;
    let breakdown = snapshot_entropy(&field)?;
    let mut decisions = [None; 3];
    for &rule in rules {
        let d = match rule {
            Rule::Map => map_decide(&field),
            Rule::Sap => sap_decide(&field, &mut substream(config.seed, index, Purpose::Sap)),
            Rule::Cascaded => cascaded_decide(&field, &mut substream(config.seed, index, Purpose::Cascaded)),
        };
        decisions[rule_slot(rule)] = Some(d);
    }
    Ok(SnapshotRecord { truth, breakdown, decisions })
}

pub(crate) fn simulate(
    config: &SystemConfig,
    m: usize,
    rules: &[Rule],
    workers: Option<usize>,
) -> Result<Vec<SnapshotRecord>> {
    config.validate()?;
    let engine = PosteriorEngine::new(config)?;
    let job =
        || (0..m as u64).into_par_iter().map(|i| simulate_snapshot(&engine, i, rules)).collect::<Result<Vec<_>>>();
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| JdeError::Config(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    }
}

pub(crate) fn report_from_records(config: &SystemConfig, records: &[SnapshotRecord]) -> InfoReport {
    let breakdowns: Vec<EntropyBreakdown> = records.iter().map(|r| r.breakdown).collect();
    InfoReport::from_breakdowns(config, &breakdowns)
}

pub(crate) fn theoretical_report(config: &SystemConfig, n_mc: usize, workers: Option<usize>) -> Result<InfoReport> {
    Ok(report_from_records(config, &simulate(config, n_mc, &[], workers)?))
}

fn stats_for(records: &[SnapshotRecord], rule: Rule) -> EmpiricalStats {
    pairwise_reduce(
        records,
        &|r: &SnapshotRecord| {
            r.decision(rule).map(|d| EmpiricalStats::from_decision(r.truth.present, d)).unwrap_or_default()
        },
        &|a: EmpiricalStats, b: EmpiricalStats| a.merge(&b),
        &EmpiricalStats::default,
    )
}

/// Empirical measures after the first `m` snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub m: usize,
    pub per_rule: BTreeMap<Rule, EmpiricalStats>,
}

impl Checkpoint {
    /// `I^(M)` of a rule at this checkpoint.
    pub fn information(&self, rule: Rule) -> Option<f64> {
        self.per_rule.get(&rule).map(EmpiricalStats::information)
    }

    /// `sigma^(M)` of a rule at this checkpoint.
    pub fn entropy_deviation(&self, rule: Rule) -> Option<f64> {
        self.per_rule.get(&rule).map(EmpiricalStats::entropy_deviation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub config: SystemConfig,
    pub m: usize,
    /// Theoretical limits estimated on the same snapshots as the empirical measures.
    pub theoretical: InfoReport,
    pub per_rule: BTreeMap<Rule, EmpiricalStats>,
    /// Prefix checkpoints in increasing `m`.
    pub series: Vec<Checkpoint>,
}

impl CampaignResult {
    /// Linear SNR in dB (`-inf` for zero).
    pub fn snr_db(&self) -> f64 {
        linear_to_db(self.config.snr)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(snr: f64) -> f64 {
    10.0 * snr.log10()
}

pub fn run_campaign(config: &SystemConfig, m: usize, rules: &[Rule], checkpoints: &[usize]) -> Result<CampaignResult> {
    run_campaign_with(config, m, rules, checkpoints, None)
}

/// [`run_campaign`] on a dedicated pool of `workers` threads (`None` uses the
/// global pool). The result does not depend on the worker count.
pub fn run_campaign_with(
    config: &SystemConfig,
    m: usize,
    rules: &[Rule],
    checkpoints: &[usize],
    workers: Option<usize>,
) -> Result<CampaignResult> {
    if rules.is_empty() {
        return Err(JdeError::Precondition("at least one rule is required".into()));
    }
    if m == 0 {
        return Err(JdeError::Precondition("a campaign needs at least one snapshot".into()));
    }
    let mut marks: Vec<usize> = checkpoints.to_vec();
    marks.sort_unstable();
    marks.dedup();
    if let Some(&last) = marks.last() {
        if last > m {
            return Err(JdeError::Precondition(format!("checkpoint {last} exceeds m = {m}")));
        }
    }
    if marks.first() == Some(&0) {
        return Err(JdeError::Precondition("checkpoints must be positive".into()));
    }
    if marks.is_empty() {
        marks.push(m);
    }
    let mut rules: Vec<Rule> = rules.to_vec();
    rules.sort_unstable();
    rules.dedup();

    let records = simulate(config, m, &rules, workers)?;
    let per_rule_at = |n: usize| rules.iter().map(|&r| (r, stats_for(&records[..n], r))).collect::<BTreeMap<_, _>>();
    let series = marks.iter().map(|&n| Checkpoint { m: n, per_rule: per_rule_at(n) }).collect();
    Ok(CampaignResult {
        config: *config,
        m,
        theoretical: report_from_records(config, &records),
        per_rule: per_rule_at(m),
        series,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AchievabilityCheck {
    pub empirical: f64,
    pub theoretical: f64,
    pub deviation: f64,
    pub tolerance: f64,
    /// `tolerance - deviation`; nonnegative on PASS.
    pub margin: f64,
    pub pass: bool,
}

impl AchievabilityCheck {
    fn new(empirical: f64, theoretical: f64, tolerance: f64) -> Self {
        let deviation = (empirical - theoretical).abs();
        Self {
            empirical,
            theoretical,
            deviation,
            tolerance,
            margin: tolerance - deviation,
            pass: deviation <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConverseCheck {
    /// Plug-in `I(V_hat; V)` of the SAP detector.
    pub plugin_information: f64,
    /// Theoretical `I(Y; V)`.
    pub detection_information: f64,
    pub tolerance: f64,
    /// `detection_information + tolerance - plugin_information`.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointVerdict {
    pub pass: bool,
    pub m: usize,
    pub achievability: AchievabilityCheck,
    pub converse: ConverseCheck,
    /// `I^(M)` of the MAP rule, reported but not judged.
    pub map_information: f64,
    pub theoretical: InfoReport,
}

/// Achievability of the joint information by the SAP rule, plus the
/// detection-side converse: `I(V_hat; V) <= I(Y; V)`.
pub fn verify_joint_theorem(config: &SystemConfig, m: usize) -> Result<JointVerdict> {
    verify_joint_theorem_with(config, m, None)
}

pub fn verify_joint_theorem_with(config: &SystemConfig, m: usize, workers: Option<usize>) -> Result<JointVerdict> {
    if m < 1000 {
        return Err(JdeError::Precondition(format!("verification needs m >= 1000, got {m}")));
    }
    let run = run_campaign_with(config, m, &[Rule::Sap, Rule::Map], &[m], workers)?;
    let sap = run.per_rule[&Rule::Sap];
    let theory = run.theoretical;
    let achievability =
        AchievabilityCheck::new(sap.information(), theory.i_joint, 3.0 * (sap.std_err() + theory.mc_std_err));

    let table = sap.detection_table;
    let disagree = (table[0][1] + table[1][0]) as f64 / m as f64;
    let binomial = (disagree * (1.0 - disagree) / m as f64).sqrt();
    let tolerance = 3.0 * (binomial + theory.std_err_detect);
    let plugin = sap.decision_truth_information();
    let margin = theory.i_detect + tolerance - plugin;
    let converse = ConverseCheck {
        plugin_information: plugin,
        detection_information: theory.i_detect,
        tolerance,
        margin,
        pass: margin >= 0.0,
    };
    Ok(JointVerdict {
        pass: achievability.pass && converse.pass,
        m,
        achievability,
        converse,
        map_information: run.per_rule[&Rule::Map].information(),
        theoretical: theory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadedVerdict {
    pub pass: bool,
    pub m: usize,
    /// Empirical detection information of the SAP detector stage.
    pub detection_information: f64,
    /// Empirical estimation information of the gated estimator stage.
    pub estimation_information: f64,
    pub check: AchievabilityCheck,
    pub estimator_runs: u64,
    pub theoretical: InfoReport,
}

/// Additivity of the cascade: empirical detection plus estimation information
/// approaches the joint information.
pub fn verify_cascaded_theorem(config: &SystemConfig, m: usize) -> Result<CascadedVerdict> {
    verify_cascaded_theorem_with(config, m, None)
}

pub fn verify_cascaded_theorem_with(
    config: &SystemConfig,
    m: usize,
    workers: Option<usize>,
) -> Result<CascadedVerdict> {
    if m < 1000 {
        return Err(JdeError::Precondition(format!("verification needs m >= 1000, got {m}")));
    }
    let run = run_campaign_with(config, m, &[Rule::Cascaded], &[m], workers)?;
    let stats = run.per_rule[&Rule::Cascaded];
    let theory = run.theoretical;
    let detect = stats.detection_information();
    let estimate = stats.estimation_information();
    let check = AchievabilityCheck::new(detect + estimate, theory.i_joint, 3.0 * (stats.std_err() + theory.mc_std_err));
    Ok(CascadedVerdict {
        pass: check.pass,
        m,
        detection_information: detect,
        estimation_information: estimate,
        check,
        estimator_runs: stats.estimator_runs,
        theoretical: theory,
    })
}

/// One campaign per SNR (dB, ascending; `-inf` means linear zero).
///
/// Every point reuses the base master seed, so the sweep shares target and
/// noise draws across SNRs.
pub fn snr_sweep(base: &SystemConfig, snr_db_list: &[f64], m: usize) -> Result<Vec<CampaignResult>> {
    snr_sweep_with(base, snr_db_list, m, &[Rule::Sap, Rule::Cascaded], &[m], None)
}

pub fn snr_sweep_with(
    base: &SystemConfig,
    snr_db_list: &[f64],
    m: usize,
    rules: &[Rule],
    checkpoints: &[usize],
    workers: Option<usize>,
) -> Result<Vec<CampaignResult>> {
    if snr_db_list.is_empty() {
        return Err(JdeError::Precondition("SNR list is empty".into()));
    }
    if snr_db_list.iter().any(|db| db.is_nan() || *db == f64::INFINITY) {
        return Err(JdeError::Precondition("SNR values must be finite dB or -inf".into()));
    }
    if snr_db_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(JdeError::Precondition("SNR list must be strictly ascending".into()));
    }
    snr_db_list
        .iter()
        .map(|&db| {
            let config = SystemConfig { snr: db_to_linear(db), ..*base };
            run_campaign_with(&config, m, rules, checkpoints, workers)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small(snr: f64) -> SystemConfig {
        SystemConfig { n_samples: 32, oversample: 8, edge_margin: 4.0, snr, seed: 11, ..Default::default() }
    }

    #[test]
    fn zero_snr_campaign_is_exactly_uninformative() {
        let r = run_campaign(&small(0.0), 500, &Rule::ALL, &[100, 500]).unwrap();
        assert_eq!(r.theoretical.i_joint, 0.0);
        assert_eq!(r.theoretical.i_detect, 0.0);
        assert_eq!(r.theoretical.i_estimate, 0.0);
        for cp in &r.series {
            assert_eq!(cp.information(Rule::Sap), Some(0.0));
            assert_eq!(cp.per_rule[&Rule::Cascaded].information(), 0.0);
        }
    }

    #[test]
    fn checkpoints_are_prefixes() {
        let cfg = small(4.0);
        let full = run_campaign(&cfg, 300, &[Rule::Sap, Rule::Cascaded], &[50, 300]).unwrap();
        let short = run_campaign(&cfg, 50, &[Rule::Sap, Rule::Cascaded], &[50]).unwrap();
        assert_eq!(full.series[0], short.series[0]);
        assert_eq!(full.series[1].per_rule, full.per_rule);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = small(2.0);
        let a = run_campaign_with(&cfg, 200, &Rule::ALL, &[20, 200], Some(1)).unwrap();
        let b = run_campaign_with(&cfg, 200, &Rule::ALL, &[20, 200], Some(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn derived_statistics_match_their_definitions() {
        let r = run_campaign(&small(3.0), 400, &Rule::ALL, &[400]).unwrap();
        for s in r.per_rule.values() {
            let m = s.m as f64;
            let h = s.sum_neg_log_post / m;
            assert_eq!(s.entropy(), h);
            assert!((s.entropy_error() - (2.0 * h).exp2() / (2.0 * PI * E)).abs() <= 1e-12 * s.entropy_error());
            assert!((s.entropy_deviation() - h.exp2() / (2.0 * PI * E).sqrt()).abs() <= 1e-12 * s.entropy_deviation());
            assert_eq!(s.information(), s.sum_log_ratio / m);
            assert!((s.sum_detect_ratio + s.sum_estimate_ratio - s.sum_log_ratio).abs() < 1e-9);
        }
    }

    #[test]
    fn preconditions() {
        let cfg = small(1.0);
        assert!(run_campaign(&cfg, 10, &[], &[]).is_err());
        assert!(run_campaign(&cfg, 10, &[Rule::Sap], &[20]).is_err());
        assert!(run_campaign(&cfg, 0, &[Rule::Sap], &[]).is_err());
        assert!(verify_joint_theorem(&cfg, 999).is_err());
        assert!(verify_cascaded_theorem(&cfg, 10).is_err());
        assert!(snr_sweep(&cfg, &[], 10).is_err());
        assert!(snr_sweep(&cfg, &[3.0, 1.0], 10).is_err());
        assert!(snr_sweep(&cfg, &[f64::NAN], 10).is_err());
    }

    #[test]
    fn constant_decisions_carry_no_information() {
        // "Always present": every snapshot lands in the decided-present column.
        let table = [[4_980, 0], [5_020, 0]];
        assert_eq!(plugin_detection_information(&[[0, 4_980], [0, 5_020]]), 0.0);
        assert_eq!(plugin_detection_information(&table), 0.0);
        assert!((plugin_detection_information(&[[50, 0], [0, 50]]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn db_conversion() {
        assert!((db_to_linear(6.0) - 10f64.powf(0.6)).abs() < 1e-15);
        assert_eq!(db_to_linear(f64::NEG_INFINITY), 0.0);
        assert_eq!(linear_to_db(0.0), f64::NEG_INFINITY);
    }

    fn arb_stats() -> impl Strategy<Value = EmpiricalStats> {
        (1u64..50, -20.0f64..20.0, -5.0f64..5.0, 0.0f64..30.0, -3.0f64..3.0, 0u64..50).prop_map(
            |(m, a, b, c, d, runs)| EmpiricalStats {
                m,
                sum_neg_log_post: a,
                sum_log_ratio: b,
                sum_sq_log_ratio: c,
                sum_detect_ratio: d,
                sum_estimate_ratio: b - d,
                estimator_runs: runs,
                detection_table: [[m, 1], [2, runs]],
            },
        )
    }

    proptest! {
        #[test]
        fn merge_is_commutative_and_associative(a in arb_stats(), b in arb_stats(), c in arb_stats()) {
            prop_assert_eq!(a.merge(&b), b.merge(&a));
            let left = a.merge(&b).merge(&c);
            let right = a.merge(&b.merge(&c));
            prop_assert_eq!(left.m, right.m);
            prop_assert_eq!(left.detection_table, right.detection_table);
            prop_assert!((left.sum_log_ratio - right.sum_log_ratio).abs() < 1e-12);
            prop_assert!((left.sum_neg_log_post - right.sum_neg_log_post).abs() < 1e-12);
        }
    }
}
