//! Seeded Monte Carlo simulation of deadline-constrained ARQ over a binary
//! symmetric channel.
//!
//! Two schemes share one protocol skeleton. Under memoryless decoding the
//! same codeword is retransmitted and each round decodes only the latest
//! block of `N` symbols. Under incremental redundancy each round sends `N`
//! new coded symbols and round `k` decodes from all `kN` received so far
//! with the threshold schedule `T_k = T/k`, so the round-`k` acceptance
//! margin is a constant `N T` nats. Rounds before the deadline use the
//! likelihood-ratio erasure rule; the final round decodes by maximum
//! likelihood (minimum Hamming distance, ties to the lowest index).
//!
//! Randomness is derived per `(seed, trial, purpose, index)` through a
//! counter-based key schedule, so any partition of trials across workers
//! produces bit-identical aggregate reports, and the incremental-redundancy
//! codebook extends the memoryless one (its first `N` bits coincide), which
//! makes paired scheme comparisons share their round-1 channel noise.

use crate::error::{Error, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Which ARQ scheme to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Memoryless,
    Incremental,
}

/// Simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArqConfig {
    pub scheme: Scheme,
    /// Crossover probability of the binary symmetric channel.
    pub epsilon: f64,
    /// Symbols per round.
    pub n: u32,
    /// Codebook size.
    pub num_messages: u32,
    /// Per-symbol erasure threshold in nats.
    pub threshold: f64,
    /// Deadline in rounds, first transmission included.
    pub deadline: u32,
    pub trials: u64,
    pub seed: u64,
}

/// Caps keeping the exact `O(M)` decoder tractable.
pub const MAX_MESSAGES: u32 = 1 << 16;
pub const MAX_TOTAL_SYMBOLS: u64 = 1 << 20;

impl ArqConfig {
    /// Per-round rate `ln(M)/N` in nats per symbol.
    pub fn rate(&self) -> f64 {
        (self.num_messages as f64).ln() / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        let field = |field, message: String| Err(Error::Config { field, message });
        if !(0.0..=0.5).contains(&self.epsilon) {
            return field("epsilon", format!("crossover must lie in [0, 0.5], got {}", self.epsilon));
        }
        if self.n == 0 {
            return field("n", "block length must be at least 1".into());
        }
        if self.num_messages < 2 {
            return field("m", "need at least 2 messages".into());
        }
        if self.num_messages > MAX_MESSAGES {
            return field("m", format!("codebook capped at {MAX_MESSAGES} messages"));
        }
        if self.deadline < 2 {
            return field("l", format!("deadline must be at least 2 rounds, got {}", self.deadline));
        }
        if self.deadline as u64 * self.n as u64 > MAX_TOTAL_SYMBOLS {
            return field("n", format!("L*N capped at {MAX_TOTAL_SYMBOLS} symbols"));
        }
        if !(self.threshold >= 0.0) || !self.threshold.is_finite() {
            return field("t", format!("threshold must be >= 0, got {}", self.threshold));
        }
        if self.trials == 0 {
            return field("trials", "need at least one trial".into());
        }
        if self.rate() > std::f64::consts::LN_2 + 1e-12 {
            return field("m", format!("rate ln(M)/N = {} exceeds ln 2", self.rate()));
        }
        Ok(())
    }
}

/// Decision of the threshold decoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecodeKind {
    Accept(u32),
    Erase,
}

/// Outcome of one erasure-decoding attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeOutcome {
    pub kind: DecodeKind,
    /// Log of the acceptance ratio for the most likely message
    /// (`+inf`/`-inf` in the degenerate exact-match regimes).
    pub log_ratio: f64,
    /// Two messages tied for the acceptance condition (possible only at
    /// zero threshold); the decoder erases.
    pub tie: bool,
}

/// Aggregated results of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub config: ArqConfig,
    pub trials: u64,
    /// Trials decided (accepted or ML-decoded) at each round `1..=L`.
    pub decided_per_round: Vec<u64>,
    /// Trials still undecided after each round `1..=L-1`.
    pub erasures_per_round: Vec<u64>,
    /// Wrong decisions at each round `1..=L` (the round-`L` entry counts
    /// maximum-likelihood errors).
    pub errors_per_round: Vec<u64>,
    pub accepted_correct: u64,
    /// Erasures caused by a zero-threshold likelihood tie.
    pub ties_erased: u64,
    /// Mean decoding delay in symbols.
    pub avg_delay: f64,
    /// `ln(M) / avg_delay`, nats per symbol.
    pub throughput: f64,
    pub error_prob: f64,
    /// 95% Wilson interval for the error probability.
    pub error_ci: (f64, f64),
    /// `-ln(error_prob) / avg_delay` when errors were observed.
    pub empirical_exponent: Option<f64>,
}

impl SimulationReport {
    pub fn total_errors(&self) -> u64 {
        self.errors_per_round.iter().sum()
    }
}

/// Exponent estimate from a finished report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExponentEstimate {
    Estimate {
        value: f64,
        ci_low: f64,
        ci_high: f64,
        events: u64,
    },
    /// Too few error events for a meaningful estimate.
    InsufficientEvents { events: u64, required: u64 },
}

/// Minimum error events for [`estimate_exponent`].
pub const MIN_ERROR_EVENTS: u64 = 20;

/// `-ln(P(E)) / avg_delay` with a delta-method 95% interval, or an explicit
/// insufficient-events marker.
pub fn estimate_exponent(report: &SimulationReport) -> ExponentEstimate {
    let events = report.total_errors();
    if events < MIN_ERROR_EVENTS || report.error_prob <= 0.0 {
        return ExponentEstimate::InsufficientEvents {
            events,
            required: MIN_ERROR_EVENTS,
        };
    }
    let p = report.error_prob;
    let value = -p.ln() / report.avg_delay;
    // Var(ln p_hat) ~ (1-p)/(trials * p) by the delta method.
    let sigma = ((1.0 - p) / (report.trials as f64 * p)).sqrt() / report.avg_delay;
    ExponentEstimate::Estimate {
        value,
        ci_low: value - 1.96 * sigma,
        ci_high: value + 1.96 * sigma,
        events,
    }
}

// --------------------------------------------------------------------------
// Counter-based randomness.
// --------------------------------------------------------------------------

const PURPOSE_MESSAGE: u64 = 0;
const PURPOSE_CODEBOOK: u64 = 1;
const PURPOSE_NOISE: u64 = 2;

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream cipher keyed by `(seed, trial, purpose, index)`.
fn stream(seed: u64, trial: u64, purpose: u64, index: u64) -> ChaCha12Rng {
    let mut state = seed;
    let mut h = splitmix(&mut state);
    for w in [trial, purpose, index] {
        state ^= w;
        h ^= splitmix(&mut state).rotate_left(17);
    }
    state = h;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Flip-decision threshold: a 64-bit draw below this means a flipped symbol.
fn flip_threshold(epsilon: f64) -> u64 {
    // eps <= 0.5 keeps the product inside u64 range; eps = 0.5 maps to 2^63.
    (epsilon * 2f64.powi(64)) as u64
}

fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// i.i.d. equiprobable codeword bits, packed 64 per word, tail zeroed.
fn gen_codeword(seed: u64, trial: u64, msg: u64, bits: usize) -> Vec<u64> {
    let mut rng = stream(seed, trial, PURPOSE_CODEBOOK, msg);
    let mut w: Vec<u64> = (0..words_for(bits)).map(|_| rng.next_u64()).collect();
    mask_tail(&mut w, bits);
    w
}

fn mask_tail(words: &mut [u64], bits: usize) {
    let rem = bits % 64;
    if rem != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << rem) - 1;
        }
    }
}

/// Hamming distance over the first `bits` positions.
fn hamming(a: &[u64], b: &[u64], bits: usize) -> u32 {
    let full = bits / 64;
    let mut d = 0u32;
    for i in 0..full {
        d += (a[i] ^ b[i]).count_ones();
    }
    let rem = bits % 64;
    if rem != 0 {
        let mask = (1u64 << rem) - 1;
        d += ((a[full] ^ b[full]) & mask).count_ones();
    }
    d
}

// --------------------------------------------------------------------------
// Decoding.
// --------------------------------------------------------------------------

/// Threshold decoding over the first `bits` symbols: accept the unique
/// message whose likelihood beats the summed likelihood of all others by
/// `exp(threshold_exponent)`, else erase.
///
/// Likelihoods come from Hamming statistics,
/// `ln p(y|x_m) = d_m ln(eps) + (bits - d_m) ln(1 - eps)`, and the
/// denominator is a log-sum-exp over the other `M - 1` messages (two-pass,
/// shifted by the largest and second-largest terms, so nothing underflows in
/// the linear domain). Degenerate channels (`eps` 0 or 1) reduce to
/// exact-match logic with infinite log-ratios.
pub fn erasure_decode(
    codebook: &[Vec<u64>],
    received: &[u64],
    bits: usize,
    epsilon: f64,
    threshold_exponent: f64,
) -> DecodeOutcome {
    let m = codebook.len();
    debug_assert!(m >= 2);
    if epsilon == 0.0 || epsilon == 1.0 {
        // Exactly one distance can be 0 (or `bits` for eps = 1) unless the
        // codebook has duplicates; a duplicate match is a tie and erases.
        let target = if epsilon == 0.0 { 0 } else { bits as u32 };
        let mut hit: Option<u32> = None;
        let mut ties = false;
        for (i, cw) in codebook.iter().enumerate() {
            if hamming(cw, received, bits) == target {
                if hit.is_some() {
                    ties = true;
                } else {
                    hit = Some(i as u32);
                }
            }
        }
        return match (hit, ties) {
            (Some(i), false) => DecodeOutcome {
                kind: DecodeKind::Accept(i),
                log_ratio: f64::INFINITY,
                tie: false,
            },
            (Some(_), true) => DecodeOutcome {
                kind: DecodeKind::Erase,
                log_ratio: 0.0,
                tie: true,
            },
            (None, _) => DecodeOutcome {
                kind: DecodeKind::Erase,
                log_ratio: f64::NEG_INFINITY,
                tie: false,
            },
        };
    }

    let ln_e = epsilon.ln();
    let ln_ne = (1.0 - epsilon).ln();
    let logp: Vec<f64> = codebook
        .iter()
        .map(|cw| {
            let d = hamming(cw, received, bits) as f64;
            d * ln_e + (bits as f64 - d) * ln_ne
        })
        .collect();

    // Largest and second-largest log-likelihoods.
    let (mut best, mut best_lp) = (0usize, f64::NEG_INFINITY);
    let mut second_lp = f64::NEG_INFINITY;
    for (i, &lp) in logp.iter().enumerate() {
        if lp > best_lp {
            second_lp = best_lp;
            best_lp = lp;
            best = i;
        } else if lp > second_lp {
            second_lp = lp;
        }
    }
    // Denominator for the best message: log-sum-exp of the rest, shifted by
    // the second-largest so the leading term is exp(0).
    let denom = second_lp
        + logp
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != best)
            .map(|(_, &lp)| (lp - second_lp).exp())
            .sum::<f64>()
            .ln();
    let log_ratio = best_lp - denom;

    if log_ratio >= threshold_exponent {
        // A second message can qualify only via an exact likelihood tie at a
        // zero threshold; the acceptance is then not unique and we erase.
        if best_lp == second_lp {
            debug_assert!(
                threshold_exponent <= 0.0,
                "two qualifying messages at positive threshold"
            );
            return DecodeOutcome {
                kind: DecodeKind::Erase,
                log_ratio,
                tie: true,
            };
        }
        DecodeOutcome {
            kind: DecodeKind::Accept(best as u32),
            log_ratio,
            tie: false,
        }
    } else {
        DecodeOutcome {
            kind: DecodeKind::Erase,
            log_ratio,
            tie: false,
        }
    }
}

/// Maximum-likelihood decision over the first `bits` symbols: minimum
/// Hamming distance, ties to the lowest message index.
fn ml_decode(codebook: &[Vec<u64>], received: &[u64], bits: usize) -> u32 {
    let mut best = 0u32;
    let mut best_d = u32::MAX;
    for (i, cw) in codebook.iter().enumerate() {
        let d = hamming(cw, received, bits);
        if d < best_d {
            best_d = d;
            best = i as u32;
        }
    }
    best
}

// --------------------------------------------------------------------------
// Trial execution.
// --------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct TrialResult {
    decode_round: u32,
    correct: bool,
    ties: u32,
}

#[derive(Debug, Clone)]
struct Tally {
    decided_per_round: Vec<u64>,
    errors_per_round: Vec<u64>,
    accepted_correct: u64,
    ties_erased: u64,
    delay_rounds: u64,
    trials: u64,
}

impl Tally {
    fn new(l: usize) -> Self {
        Tally {
            decided_per_round: vec![0; l],
            errors_per_round: vec![0; l],
            accepted_correct: 0,
            ties_erased: 0,
            delay_rounds: 0,
            trials: 0,
        }
    }

    fn record(&mut self, r: TrialResult) {
        let j = (r.decode_round - 1) as usize;
        self.decided_per_round[j] += 1;
        if r.correct {
            self.accepted_correct += 1;
        } else {
            self.errors_per_round[j] += 1;
        }
        self.ties_erased += r.ties as u64;
        self.delay_rounds += r.decode_round as u64;
        self.trials += 1;
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.decided_per_round.iter_mut().zip(&other.decided_per_round) {
            *a += b;
        }
        for (a, b) in self.errors_per_round.iter_mut().zip(&other.errors_per_round) {
            *a += b;
        }
        self.accepted_correct += other.accepted_correct;
        self.ties_erased += other.ties_erased;
        self.delay_rounds += other.delay_rounds;
        self.trials += other.trials;
        self
    }
}

fn sample_message(config: &ArqConfig, trial: u64) -> u32 {
    let mut rng = stream(config.seed, trial, PURPOSE_MESSAGE, 0);
    (rng.next_u64() % config.num_messages as u64) as u32
}

/// Round-`k` channel noise as a packed `N`-bit block (word-aligned at 0).
fn noise_block(config: &ArqConfig, trial: u64, round: u32, threshold: u64) -> Vec<u64> {
    let n = config.n as usize;
    let mut words = vec![0u64; words_for(n)];
    if threshold == 0 {
        return words;
    }
    let mut rng = stream(config.seed, trial, PURPOSE_NOISE, round as u64);
    for (i, word) in words.iter_mut().enumerate() {
        let lo = i * 64;
        let hi = (lo + 64).min(n);
        for bit in 0..(hi - lo) {
            if rng.next_u64() < threshold {
                *word |= 1u64 << bit;
            }
        }
    }
    words
}

fn run_memoryless_trial(config: &ArqConfig, trial: u64, flip: u64) -> TrialResult {
    let n = config.n as usize;
    let msg = sample_message(config, trial);
    let codebook: Vec<Vec<u64>> = (0..config.num_messages)
        .map(|m| gen_codeword(config.seed, trial, m as u64, n))
        .collect();
    let thr = config.n as f64 * config.threshold;
    let mut ties = 0u32;
    for round in 1..config.deadline {
        let noise = noise_block(config, trial, round, flip);
        let received: Vec<u64> = codebook[msg as usize]
            .iter()
            .zip(&noise)
            .map(|(c, z)| c ^ z)
            .collect();
        let out = erasure_decode(&codebook, &received, n, config.epsilon, thr);
        if out.tie {
            ties += 1;
        }
        if let DecodeKind::Accept(i) = out.kind {
            return TrialResult {
                decode_round: round,
                correct: i == msg,
                ties,
            };
        }
    }
    let noise = noise_block(config, trial, config.deadline, flip);
    let received: Vec<u64> = codebook[msg as usize]
        .iter()
        .zip(&noise)
        .map(|(c, z)| c ^ z)
        .collect();
    let i = ml_decode(&codebook, &received, n);
    TrialResult {
        decode_round: config.deadline,
        correct: i == msg,
        ties,
    }
}

/// XOR an aligned `N`-bit block into `dst` starting at bit `offset`.
fn xor_block_at(dst: &mut [u64], block: &[u64], bits: usize, offset: usize) {
    for i in 0..bits {
        if block[i / 64] >> (i % 64) & 1 == 1 {
            let pos = offset + i;
            dst[pos / 64] ^= 1u64 << (pos % 64);
        }
    }
}

fn run_incremental_trial(config: &ArqConfig, trial: u64, flip: u64) -> TrialResult {
    let n = config.n as usize;
    let l = config.deadline as usize;
    let total = n * l;
    let msg = sample_message(config, trial);
    let codebook: Vec<Vec<u64>> = (0..config.num_messages)
        .map(|m| gen_codeword(config.seed, trial, m as u64, total))
        .collect();
    // Constant acceptance margin: round k uses threshold exponent
    // kN * (T/k) = NT.
    let thr = config.n as f64 * config.threshold;
    let mut received = vec![0u64; words_for(total)];
    let mut ties = 0u32;
    for round in 1..=config.deadline {
        let offset = (round as usize - 1) * n;
        // Place this round's codeword segment, then its channel noise.
        let seg = &codebook[msg as usize];
        for i in 0..n {
            let pos = offset + i;
            if seg[pos / 64] >> (pos % 64) & 1 == 1 {
                received[pos / 64] ^= 1u64 << (pos % 64);
            }
        }
        let noise = noise_block(config, trial, round, flip);
        xor_block_at(&mut received, &noise, n, offset);

        let bits = n * round as usize;
        if round < config.deadline {
            let out = erasure_decode(&codebook, &received, bits, config.epsilon, thr);
            if out.tie {
                ties += 1;
            }
            if let DecodeKind::Accept(i) = out.kind {
                return TrialResult {
                    decode_round: round,
                    correct: i == msg,
                    ties,
                };
            }
        } else {
            let i = ml_decode(&codebook, &received, bits);
            return TrialResult {
                decode_round: round,
                correct: i == msg,
                ties,
            };
        }
    }
    unreachable!("deadline >= 2 guarantees a final round");
}

fn wilson_interval(events: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = events as f64 / n;
    let z = 1.959963984540054; // 97.5% normal quantile
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn finalize(config: &ArqConfig, tally: Tally) -> SimulationReport {
    debug_assert_eq!(tally.trials, config.trials);
    let l = config.deadline as usize;
    // Trials still undecided after round j = those deciding strictly later.
    let mut erasures_per_round = Vec::with_capacity(l - 1);
    let mut remaining = tally.trials;
    for j in 0..(l - 1) {
        remaining -= tally.decided_per_round[j];
        erasures_per_round.push(remaining);
    }
    let errors: u64 = tally.errors_per_round.iter().sum();
    debug_assert_eq!(tally.accepted_correct + errors, tally.trials);
    let avg_delay = config.n as f64 * (tally.delay_rounds as f64 / tally.trials as f64);
    let throughput = (config.num_messages as f64).ln() / avg_delay;
    let error_prob = errors as f64 / tally.trials as f64;
    SimulationReport {
        config: *config,
        trials: tally.trials,
        decided_per_round: tally.decided_per_round,
        erasures_per_round,
        errors_per_round: tally.errors_per_round,
        accepted_correct: tally.accepted_correct,
        ties_erased: tally.ties_erased,
        avg_delay,
        throughput,
        error_prob,
        error_ci: wilson_interval(errors, tally.trials),
        empirical_exponent: if errors > 0 {
            Some(-error_prob.ln() / avg_delay)
        } else {
            None
        },
    }
}

fn run_scheme(config: &ArqConfig) -> Result<SimulationReport> {
    config.validate()?;
    let flip = flip_threshold(config.epsilon);
    let l = config.deadline as usize;
    let tally = (0..config.trials)
        .into_par_iter()
        .fold(
            || Tally::new(l),
            |mut acc, trial| {
                let r = match config.scheme {
                    Scheme::Memoryless => run_memoryless_trial(config, trial, flip),
                    Scheme::Incremental => run_incremental_trial(config, trial, flip),
                };
                acc.record(r);
                acc
            },
        )
        .reduce(|| Tally::new(l), Tally::merge);
    Ok(finalize(config, tally))
}

/// Simulate memoryless-decoding ARQ.
pub fn run_memoryless_arq(config: &ArqConfig) -> Result<SimulationReport> {
    if config.scheme != Scheme::Memoryless {
        return Err(Error::Config {
            field: "scheme",
            message: "expected the memoryless scheme".into(),
        });
    }
    run_scheme(config)
}

/// Simulate incremental-redundancy ARQ.
pub fn run_ir_arq(config: &ArqConfig) -> Result<SimulationReport> {
    if config.scheme != Scheme::Incremental {
        return Err(Error::Config {
            field: "scheme",
            message: "expected the incremental scheme".into(),
        });
    }
    run_scheme(config)
}

/// Run whichever scheme the config selects.
pub fn run(config: &ArqConfig) -> Result<SimulationReport> {
    match config.scheme {
        Scheme::Memoryless => run_memoryless_arq(config),
        Scheme::Incremental => run_ir_arq(config),
    }
}

/// Joint error counts of a trial-paired scheme comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairedComparison {
    pub md_errors: u64,
    pub ir_errors: u64,
    /// Trials where incremental redundancy erred and memoryless did not.
    pub ir_only_errors: u64,
    /// Trials where memoryless erred and incremental redundancy did not.
    pub md_only_errors: u64,
}

impl PairedComparison {
    /// One-sided sign test at 95%: the incremental scheme is not worse when
    /// its excess errors stay within 1.645 standard deviations of the
    /// discordant-pair count.
    pub fn ir_not_worse_95(&self) -> bool {
        let b = self.ir_only_errors as f64;
        let c = self.md_only_errors as f64;
        if b + c == 0.0 {
            return true;
        }
        b - c <= 1.645 * (b + c).sqrt()
    }
}

#[derive(Debug, Clone, Default)]
struct PairTally {
    md: Option<Tally>,
    ir: Option<Tally>,
    ir_only: u64,
    md_only: u64,
}

/// Run both schemes over the same trial stream family (shared message,
/// shared codebook prefix, shared round-1 noise) and report the reports
/// plus the paired error comparison.
pub fn run_paired(config: &ArqConfig) -> Result<(SimulationReport, SimulationReport, PairedComparison)> {
    config.validate()?;
    let flip = flip_threshold(config.epsilon);
    let l = config.deadline as usize;
    let md_config = ArqConfig {
        scheme: Scheme::Memoryless,
        ..*config
    };
    let ir_config = ArqConfig {
        scheme: Scheme::Incremental,
        ..*config
    };
    let merged = (0..config.trials)
        .into_par_iter()
        .fold(PairTally::default, |mut acc, trial| {
            let md = run_memoryless_trial(&md_config, trial, flip);
            let ir = run_incremental_trial(&ir_config, trial, flip);
            if acc.md.is_none() {
                acc.md = Some(Tally::new(l));
                acc.ir = Some(Tally::new(l));
            }
            acc.md.as_mut().unwrap().record(md);
            acc.ir.as_mut().unwrap().record(ir);
            match (md.correct, ir.correct) {
                (true, false) => acc.ir_only += 1,
                (false, true) => acc.md_only += 1,
                _ => {}
            }
            acc
        })
        .reduce(PairTally::default, |a, b| PairTally {
            md: merge_opt(a.md, b.md),
            ir: merge_opt(a.ir, b.ir),
            ir_only: a.ir_only + b.ir_only,
            md_only: a.md_only + b.md_only,
        });
    let md_tally = merged.md.unwrap_or_else(|| Tally::new(l));
    let ir_tally = merged.ir.unwrap_or_else(|| Tally::new(l));
    let md_report = finalize(&md_config, md_tally);
    let ir_report = finalize(&ir_config, ir_tally);
    let cmp = PairedComparison {
        md_errors: md_report.total_errors(),
        ir_errors: ir_report.total_errors(),
        ir_only_errors: merged.ir_only,
        md_only_errors: merged.md_only,
    };
    Ok((md_report, ir_report, cmp))
}

fn merge_opt(a: Option<Tally>, b: Option<Tally>) -> Option<Tally> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.merge(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Chi-square homogeneity statistic of the per-round conditional erasure
/// rates (rounds `1..L-1`) against the pooled rate, with its degrees of
/// freedom `L - 2`. Under the geometric-continuation model the rates are
/// equal. `None` when fewer than 3 erasure rounds or an empty cell makes the
/// statistic undefined.
pub fn round_homogeneity_statistic(report: &SimulationReport) -> Option<(f64, u32)> {
    let l = report.config.deadline as usize;
    if l < 4 {
        return None;
    }
    let mut entering = report.trials;
    let mut cells = Vec::with_capacity(l - 1);
    for j in 0..(l - 1) {
        let erased = report.erasures_per_round[j];
        if entering == 0 {
            return None;
        }
        cells.push((entering as f64, erased as f64));
        entering -= report.decided_per_round[j];
    }
    let tot_enter: f64 = cells.iter().map(|c| c.0).sum();
    let tot_erase: f64 = cells.iter().map(|c| c.1).sum();
    let pooled = tot_erase / tot_enter;
    if pooled <= 0.0 || pooled >= 1.0 {
        return None;
    }
    let chi2 = cells
        .iter()
        .map(|&(n, e)| {
            let expect = n * pooled;
            (e - expect) * (e - expect) / (expect * (1.0 - pooled))
        })
        .sum();
    Some((chi2, l as u32 - 2))
}
