//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use jde_core::{matched_filter, DelayGrid, PosteriorField, Snapshot, SystemConfig};

/// Compensated (Neumaier) running sum.
#[derive(Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// `ln k!` for `k = 0..=n`, accumulated with compensated summation.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut acc = Neumaier::default();
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for k in 1..=n {
        acc.add((k as f64).ln());
        out.push(acc.value());
    }
    out
}

/// `ln I0(z)` from the defining power series `sum (z/2)^(2k) / (k!)^2`,
/// summed in the log domain around its largest term.
pub struct LogI0Series {
    ln_fact: Vec<f64>,
}

impl LogI0Series {
    pub fn new(max_z: f64) -> Self {
        Self { ln_fact: ln_factorials(Self::terms_needed(max_z)) }
    }

    fn terms_needed(z: f64) -> usize {
        (z / 2.0 + 40.0 * z.sqrt() + 60.0).ceil() as usize
    }

    pub fn eval(&self, z: f64) -> f64 {
        assert!(z >= 0.0);
        if z == 0.0 {
            return 0.0;
        }
        let kmax = Self::terms_needed(z);
        assert!(kmax < self.ln_fact.len(), "table too short for z = {z}");
        let lz = (z / 2.0).ln();
        let term = |k: usize| 2.0 * k as f64 * lz - 2.0 * self.ln_fact[k];
        let peak_k = (0..=kmax).max_by(|&a, &b| term(a).total_cmp(&term(b))).unwrap();
        let peak = term(peak_k);
        let mut rest = Neumaier::default();
        for k in (0..=kmax).filter(|&k| k != peak_k) {
            let d = term(k) - peak;
            if d > -800.0 {
                rest.add(d.exp());
            }
        }
        peak + rest.value().ln_1p()
    }
}

/// Binary entropy in bits, written out independently of the crate.
pub fn h2(p: f64) -> f64 {
    let t = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    t(p) + t(1.0 - p)
}

/// Entropy in bits of a probability mass function.
pub fn pmf_entropy(p: &[f64]) -> f64 {
    let mut acc = Neumaier::default();
    for &q in p {
        if q > 0.0 {
            acc.add(-q * q.log2());
        }
    }
    acc.value()
}

/// Trapezoid weights on `[-N/2, N/2]` with `N L + 1` points.
pub fn trapezoid_weights(n: usize, l: usize) -> Vec<f64> {
    let len = n * l + 1;
    let dx = 1.0 / l as f64;
    (0..len).map(|k| if k == 0 || k == len - 1 { dx / 2.0 } else { dx }).collect()
}

/// Joint entropy `-sum_v int p(v,x) log2 p(v,x) dx` taken straight from the
/// field's log-density rows.
pub fn direct_joint_entropy(field: &PosteriorField) -> f64 {
    let w = trapezoid_weights(field.grid.n_samples(), field.grid.oversample());
    let mut acc = Neumaier::default();
    for row in &field.log_joint {
        for (k, &l) in row.iter().enumerate() {
            if l.is_finite() {
                acc.add(-w[k] * l.exp() * l / std::f64::consts::LN_2);
            }
        }
    }
    acc.value()
}

/// `P(v=1|y)` re-derived from raw samples: direct matched filter at every grid
/// point, series `ln I0`, and the prior-averaged likelihood ratio.
pub fn detector_oracle(snapshot: &Snapshot, config: &SystemConfig, series: &LogI0Series) -> f64 {
    let n = config.n_samples;
    let l = config.oversample;
    let w = trapezoid_weights(n, l);
    let rho = config.snr.sqrt();
    let logs: Vec<f64> = (0..w.len())
        .map(|k| {
            let x = -(n as f64) / 2.0 + k as f64 / l as f64;
            series.eval(2.0 * rho * matched_filter(snapshot, x).norm())
        })
        .collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = Neumaier::default();
    for (wk, lk) in w.iter().zip(&logs) {
        acc.add(wk / n as f64 * (lk - peak).exp());
    }
    // ln of the likelihood ratio averaged over the uniform delay prior.
    let log_ratio = peak + acc.value().ln() - config.snr;
    let pi = config.prior_present;
    let logit = (pi / (1.0 - pi)).ln() + log_ratio;
    1.0 / (1.0 + (-logit).exp())
}

/// Probability of each of `2 * bins` equal-width `(v, x)` bins under the
/// field, integrating the density with the trapezoid rule over each bin.
/// Bin edges must fall on grid points.
pub fn field_bin_masses(field: &PosteriorField, bins: usize) -> Vec<f64> {
    let grid: DelayGrid = field.grid;
    let n = grid.n_samples();
    let l = grid.oversample();
    let pts_per_bin = n * l / bins;
    assert_eq!(pts_per_bin * bins, n * l, "bins must align with the grid");
    let dx = 1.0 / l as f64;
    let mut out = Vec::with_capacity(2 * bins);
    for v in [false, true] {
        let pv = field.p(v);
        for b in 0..bins {
            let (a, z) = (b * pts_per_bin, (b + 1) * pts_per_bin);
            let mut s = 0.0;
            for k in a..=z {
                let f = if k == a || k == z { 0.5 } else { 1.0 };
                s += f * dx * field.conditional_density(v, k);
            }
            out.push(pv * s);
        }
    }
    out
}

/// Bin index of a `(v, x)` draw for [`field_bin_masses`].
pub fn bin_of(present: bool, x: f64, n: usize, bins: usize) -> usize {
    let width = n as f64 / bins as f64;
    let b = (((x + n as f64 / 2.0) / width).floor() as usize).min(bins - 1);
    usize::from(present) * bins + b
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// 64-bit FNV-1a, for checking manifest digests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
