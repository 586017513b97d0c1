//! Channel models, input distributions, and capacity.
//!
//! Four models are supported:
//! * [`Dmc`] — an explicit finite transition matrix `p(y|x)`;
//! * a binary symmetric channel given by its crossover probability (closed
//!   forms throughout the library);
//! * an additive white Gaussian noise channel with a Gaussian input of power
//!   `A` and unit noise variance (closed-form exponent family, no numeric
//!   output-space integration);
//! * a "very noisy" channel identified only by its capacity, for which every
//!   exponent has an analytic form (see [`crate::analytic_models`]).
//!
//! All internal units are nats; bits are a display conversion.

use crate::error::{Error, Result};

/// Row-sum slack accepted by [`Dmc::new`] before a matrix is rejected; rows
/// off by less than this are silently renormalized (text-file round-off),
/// anything larger is treated as bad input.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// A discrete memoryless channel: one row of transition probabilities per
/// input symbol. Rows are renormalized to sum to exactly 1 on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dmc {
    transition: Vec<Vec<f64>>,
}

impl Dmc {
    /// Validate and build a channel from a rectangular probability matrix.
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        if matrix.len() < 2 {
            return Err(Error::InvalidChannel(format!(
                "need at least 2 input symbols, got {}",
                matrix.len()
            )));
        }
        let cols = matrix[0].len();
        if cols < 2 {
            return Err(Error::InvalidChannel(format!(
                "need at least 2 output symbols, got {cols}"
            )));
        }
        let mut transition = matrix;
        for (i, row) in transition.iter_mut().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidChannel(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for &p in row.iter() {
                if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                    return Err(Error::InvalidChannel(format!(
                        "row {i} contains invalid probability {p}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() >= ROW_SUM_TOLERANCE {
                return Err(Error::InvalidChannel(format!(
                    "row {i} sums to {sum}, outside 1 +/- {ROW_SUM_TOLERANCE}"
                )));
            }
            for p in row.iter_mut() {
                *p /= sum;
            }
        }
        Ok(Self { transition })
    }

    pub fn input_size(&self) -> usize {
        self.transition.len()
    }

    pub fn output_size(&self) -> usize {
        self.transition[0].len()
    }

    /// Transition probability `p(y|x)`.
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.transition[x][y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.transition[x]
    }

    /// Parse the plain-text matrix format: one comma-separated row per input
    /// symbol, `#` starts a comment line, blank lines ignored.
    pub fn from_csv_text(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Result<Vec<f64>> = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|e| {
                        Error::InvalidChannel(format!("line {}: bad number {tok:?}: {e}", lineno + 1))
                    })
                })
                .collect();
            rows.push(row?);
        }
        Self::new(rows)
    }

    /// Load the plain-text matrix format from a file.
    pub fn from_csv_path(path: &std::path::Path) -> Result<Self> {
        Self::from_csv_text(&std::fs::read_to_string(path)?)
    }

    /// Structural symmetry test: every row is a permutation of the first row
    /// and every column is a permutation of the first column. For channels
    /// with this symmetry the uniform input distribution maximizes the
    /// Gallager functions, so the optimizers skip the simplex search.
    pub fn is_symmetric(&self) -> bool {
        let sorted = |v: &[f64]| {
            let mut s = v.to_vec();
            s.sort_by(f64::total_cmp);
            s
        };
        let row0 = sorted(self.row(0));
        for x in 1..self.input_size() {
            let r = sorted(self.row(x));
            if r.iter().zip(&row0).any(|(a, b)| (a - b).abs() > 1e-12) {
                return false;
            }
        }
        let col = |y: usize| -> Vec<f64> { (0..self.input_size()).map(|x| self.prob(x, y)).collect() };
        let col0 = sorted(&col(0));
        for y in 1..self.output_size() {
            let c = sorted(&col(y));
            if c.iter().zip(&col0).any(|(a, b)| (a - b).abs() > 1e-12) {
                return false;
            }
        }
        true
    }
}

/// Binary symmetric channel parameters. Crossover probabilities above 1/2
/// are rejected rather than relabeled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BscParams {
    pub epsilon: f64,
}

impl BscParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&epsilon) || !epsilon.is_finite() {
            return Err(Error::InvalidChannel(format!(
                "crossover probability must lie in [0, 0.5], got {epsilon}"
            )));
        }
        Ok(Self { epsilon })
    }
}

/// Gaussian-noise channel parameters: Gaussian input of power `A` (linear
/// scale), unit noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnParams {
    pub snr_power: f64,
}

impl AwgnParams {
    pub fn new(snr_power: f64) -> Result<Self> {
        if !(snr_power > 0.0) || !snr_power.is_finite() {
            return Err(Error::InvalidChannel(format!(
                "input power must be positive, got {snr_power}"
            )));
        }
        Ok(Self { snr_power })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(10f64.powf(db / 10.0))
    }
}

/// Very-noisy-channel parameters: the model is identified by its capacity
/// alone; every exponent is an analytic function of `(R, C)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VncParams {
    pub capacity: f64,
}

impl VncParams {
    pub fn new(capacity: f64) -> Result<Self> {
        if !(capacity > 0.0) || !capacity.is_finite() {
            return Err(Error::InvalidChannel(format!(
                "capacity must be positive, got {capacity}"
            )));
        }
        Ok(Self { capacity })
    }
}

/// A memoryless channel model.
#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    Dmc(Dmc),
    Bsc(BscParams),
    Awgn(AwgnParams),
    Vnc(VncParams),
}

impl Channel {
    pub fn bsc(epsilon: f64) -> Result<Self> {
        Ok(Channel::Bsc(BscParams::new(epsilon)?))
    }

    pub fn awgn(snr_power: f64) -> Result<Self> {
        Ok(Channel::Awgn(AwgnParams::new(snr_power)?))
    }

    pub fn vnc(capacity: f64) -> Result<Self> {
        Ok(Channel::Vnc(VncParams::new(capacity)?))
    }

    pub fn dmc(matrix: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Channel::Dmc(Dmc::new(matrix)?))
    }
}

/// A probability vector over a channel's input alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    probs: Vec<f64>,
}

impl InputDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 entries, got {}",
                probs.len()
            )));
        }
        let mut sum = 0.0;
        for &p in &probs {
            if p < 0.0 || !p.is_finite() {
                return Err(Error::InvalidDistribution(format!("invalid entry {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() >= 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, outside 1 +/- 1e-12"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Check compatibility with a channel's input alphabet.
    pub fn matches(&self, dmc: &Dmc) -> Result<()> {
        if self.len() != dmc.input_size() {
            return Err(Error::InvalidDistribution(format!(
                "length {} does not match input alphabet size {}",
                self.len(),
                dmc.input_size()
            )));
        }
        Ok(())
    }
}

/// Build the 2x2 transition matrix of a binary symmetric channel. This is the
/// explicit-matrix twin of [`Channel::bsc`]; the closed-form evaluators and
/// the generic matrix path must agree on it, which the tests pin down.
pub fn make_bsc(epsilon: f64) -> Result<Dmc> {
    let p = BscParams::new(epsilon)?;
    let e = p.epsilon;
    Dmc::new(vec![vec![1.0 - e, e], vec![e, 1.0 - e]])
}

/// Validated construction from a raw matrix (alias of [`Dmc::new`] kept next
/// to [`make_bsc`] for discoverability).
pub fn make_dmc(matrix: Vec<Vec<f64>>) -> Result<Dmc> {
    Dmc::new(matrix)
}

/// Binary entropy in nats, with the `0 ln 0 = 0` convention.
pub fn binary_entropy(e: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    term(e) + term(1.0 - e)
}

/// Channel capacity in nats per channel use.
///
/// Closed forms for the analytic models; alternating maximization (see
/// [`blahut_arimoto`]) for explicit matrices.
pub fn capacity(channel: &Channel) -> f64 {
    match channel {
        Channel::Bsc(p) => std::f64::consts::LN_2 - binary_entropy(p.epsilon),
        Channel::Awgn(p) => 0.5 * (1.0 + p.snr_power).ln(),
        Channel::Vnc(p) => p.capacity,
        Channel::Dmc(dmc) => blahut_arimoto(dmc, 1e-10).0,
    }
}

/// Alternating-maximization fixed point for the capacity of an explicit
/// matrix, run until the standard upper/lower sandwich is tighter than `tol`
/// nats. Returns the capacity and the maximizing input distribution.
///
/// The per-iteration lower bound is nondecreasing by construction; this is
/// asserted (with floating-point slack) every iteration.
pub fn blahut_arimoto(dmc: &Dmc, tol: f64) -> (f64, InputDistribution) {
    let n = dmc.input_size();
    let m = dmc.output_size();
    let mut p = vec![1.0 / n as f64; n];
    let mut last_lower = f64::NEG_INFINITY;
    for _ in 0..100_000 {
        // Output distribution under the current input law.
        let mut q = vec![0.0; m];
        for x in 0..n {
            for y in 0..m {
                q[y] += p[x] * dmc.prob(x, y);
            }
        }
        // Per-input information density exponent c_x = exp(D(W(.|x) || q)).
        let mut log_c = vec![0.0; n];
        for x in 0..n {
            let mut d = 0.0;
            for y in 0..m {
                let w = dmc.prob(x, y);
                if w > 0.0 {
                    d += w * (w / q[y]).ln();
                }
            }
            log_c[x] = d;
        }
        let lower = {
            let s: f64 = p.iter().zip(&log_c).map(|(&px, &lc)| px * lc.exp()).sum();
            s.ln()
        };
        let upper = log_c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        debug_assert!(
            lower >= last_lower - 1e-12,
            "alternating maximization objective decreased: {last_lower} -> {lower}"
        );
        last_lower = lower;
        if upper - lower < tol {
            return (
                lower.max(0.0),
                InputDistribution::new(normalize(p)).expect("iterate is a distribution"),
            );
        }
        // Multiplicative update, then renormalize.
        let mut next: Vec<f64> = p.iter().zip(&log_c).map(|(&px, &lc)| px * lc.exp()).collect();
        let s: f64 = next.iter().sum();
        for v in &mut next {
            *v /= s;
        }
        p = next;
    }
    (
        last_lower.max(0.0),
        InputDistribution::new(normalize(p)).expect("iterate is a distribution"),
    )
}

fn normalize(mut p: Vec<f64>) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    for v in &mut p {
        *v /= s;
    }
    p
}
