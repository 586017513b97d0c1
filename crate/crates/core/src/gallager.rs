//! Gallager-style base functions and the classical ML-decoding exponents.
//!
//! Two base functions drive everything:
//!
//! * the two-parameter form
//!   `E_o(s, rho, p) = -ln sum_y [sum_x p(x) p(y|x)^(1-s)] [sum_x p(x) p(y|x)^(s/rho)]^rho`,
//!   whose `s = rho/(1+rho)` slice is the familiar one-parameter Gallager
//!   function `E_o(rho, p)`;
//! * the pairwise (expurgated-style) form
//!   `E_x(s, rho, p) = -rho ln sum_{x,x'} p(x) p(x') [sum_y p(y|x)^(1-s) p(y|x')^s]^(1/rho)`.
//!
//! From these come the random-coding, sphere-packing, and expurgated
//! exponents. For a Gaussian-input channel the two-parameter form acquires a
//! third parameter `t` (a power-allocation tilt); its `s = rho/(1+rho)` slice
//! has a closed-form optimal `t`, which is what the one-parameter Gaussian
//! evaluator uses.
//!
//! Conventions: `0^0 = 0` and `0 ln 0 = 0` inside all sums, so
//! zero-probability transitions never contribute. All rates and exponents are
//! in nats.

use crate::analytic_models;
use crate::channels::{capacity, Channel, Dmc, InputDistribution};
use crate::error::{Error, Result};
use crate::optim::{cap_doubling_max, grid_golden_max, simplex_ascent};

/// Initial and maximal caps for maximizations over an unbounded `rho`.
pub const RHO_CAP_INITIAL: f64 = 64.0;
pub const RHO_CAP_MAX: f64 = 4096.0;

/// `w^e` under the `0^0 = 0` convention: zero-probability transitions
/// contribute nothing regardless of the exponent.
#[inline]
pub(crate) fn powz(w: f64, e: f64) -> f64 {
    if w <= 0.0 {
        0.0
    } else {
        w.powf(e)
    }
}

/// Optimizer diagnostics attached to an optimized exponent value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PointFlags {
    /// The maximizer finished pinned at the search cap; the value is a lower
    /// estimate of an unbounded-parameter supremum.
    pub at_cap: bool,
    /// The requested rate exceeded capacity; the value was defined as zero.
    pub rate_above_capacity: bool,
    /// The value comes from an analytic limit rather than a numeric search.
    pub analytic_limit: bool,
    /// The input distribution was found by heuristic ascent; the value is
    /// certified only as a lower bound.
    pub input_lower_bound: bool,
    /// The unconstrained optimum was negative and the value clamped to zero.
    pub clamped_negative: bool,
}

impl PointFlags {
    /// Compact `|`-separated rendering for CSV flag columns; empty when clean.
    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        if self.at_cap {
            parts.push("cap");
        }
        if self.rate_above_capacity {
            parts.push("rate>capacity");
        }
        if self.analytic_limit {
            parts.push("limit");
        }
        if self.input_lower_bound {
            parts.push("input-lb");
        }
        if self.clamped_negative {
            parts.push("clamped");
        }
        parts.join("|")
    }

    pub(crate) fn merged(self, other: PointFlags) -> PointFlags {
        PointFlags {
            at_cap: self.at_cap || other.at_cap,
            rate_above_capacity: self.rate_above_capacity || other.rate_above_capacity,
            analytic_limit: self.analytic_limit || other.analytic_limit,
            input_lower_bound: self.input_lower_bound || other.input_lower_bound,
            clamped_negative: self.clamped_negative || other.clamped_negative,
        }
    }
}

/// Optimizer coordinates at the maximum (whichever are meaningful).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArgMax {
    pub s: Option<f64>,
    pub rho: Option<f64>,
    pub t: Option<f64>,
}

/// An optimized exponent value with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentValue {
    pub value: f64,
    pub argmax: ArgMax,
    pub flags: PointFlags,
}

impl ExponentValue {
    fn rate_clamped() -> Self {
        ExponentValue {
            value: 0.0,
            argmax: ArgMax::default(),
            flags: PointFlags {
                rate_above_capacity: true,
                ..Default::default()
            },
        }
    }
}

fn validate_rate(r: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!("rate must be finite and >= 0, got {r}")));
    }
    Ok(())
}

// --------------------------------------------------------------------------
// Two-parameter base functions on explicit matrices.
// --------------------------------------------------------------------------

/// Two-parameter base function
/// `E_o(s, rho, p) = -ln sum_y [sum_x p(x) p(y|x)^(1-s)] [sum_x p(x) p(y|x)^(s/rho)]^rho`.
///
/// Domain checked here: `s >= 0`, `rho > 0`. Region constraints such as
/// `s <= rho <= 1` belong to the callers that maximize over a region.
pub fn e0_two_param(dmc: &Dmc, p: &InputDistribution, s: f64, rho: f64) -> Result<f64> {
    p.matches(dmc)?;
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("s must be >= 0, got {s}")));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho must be > 0, got {rho}")));
    }
    if s == 0.0 {
        // Both inner factors reduce to totals over the output law.
        return Ok(0.0);
    }
    let mut total = 0.0;
    for y in 0..dmc.output_size() {
        let mut a = 0.0; // sum_x p(x) p(y|x)^(1-s)
        let mut b = 0.0; // sum_x p(x) p(y|x)^(s/rho)
        for x in 0..dmc.input_size() {
            let w = dmc.prob(x, y);
            let px = p.probs()[x];
            a += px * powz(w, 1.0 - s);
            b += px * powz(w, s / rho);
        }
        total += a * powz(b, rho);
    }
    Ok(-total.ln())
}

/// Pairwise base function
/// `E_x(s, rho, p) = -rho ln sum_{x,x'} p(x) p(x') [sum_y p(y|x)^(1-s) p(y|x')^s]^(1/rho)`.
///
/// Domain: `0 <= s <= 1`, `rho >= 1`.
pub fn ex_two_param(dmc: &Dmc, p: &InputDistribution, s: f64, rho: f64) -> Result<f64> {
    p.matches(dmc)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("s must lie in [0, 1], got {s}")));
    }
    if !(rho >= 1.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho must be >= 1, got {rho}")));
    }
    let mut total = 0.0;
    for x in 0..dmc.input_size() {
        for x1 in 0..dmc.input_size() {
            let mut inner = 0.0; // sum_y p(y|x)^(1-s) p(y|x')^s
            for y in 0..dmc.output_size() {
                inner += powz(dmc.prob(x, y), 1.0 - s) * powz(dmc.prob(x1, y), s);
            }
            total += p.probs()[x] * p.probs()[x1] * powz(inner, 1.0 / rho);
        }
    }
    Ok(-rho * total.ln())
}

/// One-parameter Gallager function
/// `E_o(rho, p) = -ln sum_y [sum_x p(x) p(y|x)^(1/(1+rho))]^(1+rho)`,
/// i.e. the `s = rho/(1+rho)` slice of [`e0_two_param`].
pub fn e0_gallager(dmc: &Dmc, p: &InputDistribution, rho: f64) -> Result<f64> {
    p.matches(dmc)?;
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho must be >= 0, got {rho}")));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let inv = 1.0 / (1.0 + rho);
    let mut total = 0.0;
    for y in 0..dmc.output_size() {
        let mut a = 0.0;
        for x in 0..dmc.input_size() {
            a += p.probs()[x] * powz(dmc.prob(x, y), inv);
        }
        total += powz(a, 1.0 + rho);
    }
    Ok(-total.ln())
}

// --------------------------------------------------------------------------
// Gaussian-input three-parameter form.
// --------------------------------------------------------------------------

/// Gaussian-input base function with power `a` and tilt `t`:
/// `E_o(s, rho, t) = (1+rho) t a + (1/2) ln(1 - 2ta)
///  + (rho/2) ln(1 - 2ta + s a / rho)
///  + (1/2) ln(1 + s a (1 - s - s/rho) / (1 - 2ta + s a / rho))`.
///
/// Every logarithm argument is validated; domain violations are errors,
/// never silent NaN.
pub fn e0_awgn(s: f64, rho: f64, t: f64, a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("power must be positive, got {a}")));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho must be > 0, got {rho}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be >= 0, got {t}")));
    }
    if !s.is_finite() || s < 0.0 {
        return Err(Error::Domain(format!("s must be >= 0, got {s}")));
    }
    let u = 1.0 - 2.0 * t * a;
    if u <= 0.0 {
        return Err(Error::Domain(format!("1 - 2ta = {u} must be positive")));
    }
    let w = u + s * a / rho;
    if w <= 0.0 {
        return Err(Error::Domain(format!("1 - 2ta + sa/rho = {w} must be positive")));
    }
    let arg = 1.0 + s * a * (1.0 - s - s / rho) / w;
    if arg <= 0.0 {
        return Err(Error::Domain(format!(
            "final log argument {arg} must be positive (s={s}, rho={rho}, t={t})"
        )));
    }
    Ok((1.0 + rho) * t * a + 0.5 * u.ln() + 0.5 * rho * w.ln() + 0.5 * arg.ln())
}

/// One-parameter Gaussian Gallager function: the `s = rho/(1+rho)` slice of
/// [`e0_awgn`] maximized over the tilt `t`.
///
/// On that slice `1 - s - s/rho = 0`, so the final log term vanishes and the
/// stationary tilt solves the quadratic
/// `(1+rho) u^2 + (a - 1 - rho) u - a/(1+rho) = 0` in `u = 1 - 2ta`,
/// clamped to `t >= 0`.
pub fn awgn_e0_shell(rho: f64, a: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let s = rho / (1.0 + rho);
    let b = a - 1.0 - rho;
    let u = (-b + (b * b + 4.0 * a).sqrt()) / (2.0 * (1.0 + rho));
    let u = u.min(1.0); // t >= 0
    let t = (1.0 - u) / (2.0 * a);
    let w = u + s * a / rho;
    (1.0 + rho) * t * a + 0.5 * u.ln() + 0.5 * rho * w.ln()
}

/// [`e0_awgn`] maximized over its tilt parameter at general `(s, rho)`
/// (golden-section over `t in [0, 1/(2a))`; the objective diverges to
/// negative infinity at the right edge, so the maximum is interior or at 0).
pub(crate) fn awgn_e0_tilted(s: f64, rho: f64, a: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let t_hi = (1.0 - 1e-9) / (2.0 * a);
    let f = |t: f64| e0_awgn(s, rho, t, a).unwrap_or(f64::NEG_INFINITY);
    grid_golden_max(f, 0.0, t_hi, 48, 1e-13).value
}

// --------------------------------------------------------------------------
// Closed binary-symmetric helpers.
// --------------------------------------------------------------------------

/// `ln g(u) = ln(eps^u + (1-eps)^u)` evaluated as
/// `u ln(1-eps) + ln(1 + exp(u ln(eps/(1-eps))))` so large `u` underflows to
/// the dominant term instead of `ln 0`. At `eps = 0` the noisy term vanishes
/// and `ln g = 0` for every `u`.
#[inline]
fn bsc_ln_g(eps: f64, u: f64) -> f64 {
    if eps <= 0.0 {
        return 0.0;
    }
    let hi = u * (1.0 - eps).ln();
    let lo = u * eps.ln();
    hi + (lo - hi).exp().ln_1p()
}

/// Closed two-parameter `E_o` for a binary symmetric channel with uniform
/// inputs: `rho ln2 - ln g(1-s) - rho ln g(s/rho)`.
pub(crate) fn bsc_e0_two(eps: f64, s: f64, rho: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    rho * std::f64::consts::LN_2 - bsc_ln_g(eps, 1.0 - s) - rho * bsc_ln_g(eps, s / rho)
}

/// Closed one-parameter Gallager function for a binary symmetric channel:
/// `rho ln2 - (1+rho) ln g(1/(1+rho))`.
pub(crate) fn bsc_e0(eps: f64, rho: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    rho * std::f64::consts::LN_2 - (1.0 + rho) * bsc_ln_g(eps, 1.0 / (1.0 + rho))
}

/// Pairwise kernel `beta(s) = (1-e)^(1-s) e^s + e^(1-s) (1-e)^s`.
#[inline]
fn bsc_beta(eps: f64, s: f64) -> f64 {
    powz(1.0 - eps, 1.0 - s) * powz(eps, s) + powz(eps, 1.0 - s) * powz(1.0 - eps, s)
}

/// Closed two-parameter `E_x` for a binary symmetric channel with uniform
/// inputs: `-rho ln((1 + beta(s)^(1/rho)) / 2)`.
pub(crate) fn bsc_ex_two(eps: f64, s: f64, rho: f64) -> f64 {
    -rho * ((1.0 + powz(bsc_beta(eps, s), 1.0 / rho)) / 2.0).ln()
}

// --------------------------------------------------------------------------
// Channel-resolved evaluator bundle (shared with the threshold-decoding and
// deadline modules).
// --------------------------------------------------------------------------

/// A channel with its input distribution resolved, exposing the base
/// functions uniformly. For symmetric matrices the uniform distribution is
/// optimal and used directly; for general matrices a heuristic simplex
/// ascent refines the distribution and the result is flagged as a lower
/// bound.
pub(crate) struct BaseEval<'a> {
    channel: &'a Channel,
    dist: Option<InputDistribution>,
    pub input_lower_bound: bool,
}

impl<'a> BaseEval<'a> {
    pub fn new(channel: &'a Channel) -> Self {
        let (dist, input_lower_bound) = match channel {
            Channel::Dmc(dmc) => {
                if dmc.is_symmetric() {
                    (Some(InputDistribution::uniform(dmc.input_size())), false)
                } else {
                    // Heuristic: ascend the one-parameter function at rho = 1,
                    // a representative operating point; flagged lower bound.
                    let m = simplex_ascent(
                        |p| match InputDistribution::new(normalize(p.to_vec())) {
                            Ok(d) => e0_gallager(dmc, &d, 1.0).unwrap_or(f64::NEG_INFINITY),
                            Err(_) => f64::NEG_INFINITY,
                        },
                        dmc.input_size(),
                        8,
                        1e-9,
                        0x5eed,
                    );
                    (
                        Some(
                            InputDistribution::new(normalize(m.probs))
                                .expect("ascent output is a distribution"),
                        ),
                        true,
                    )
                }
            }
            _ => (None, false),
        };
        BaseEval {
            channel,
            dist,
            input_lower_bound,
        }
    }

    /// Two-parameter `E_o(s, rho)` (tilt-maximized for the Gaussian model).
    pub fn e0(&self, s: f64, rho: f64) -> f64 {
        match self.channel {
            Channel::Bsc(p) => bsc_e0_two(p.epsilon, s, rho),
            Channel::Vnc(p) => p.capacity * s * (2.0 - s - s / rho),
            Channel::Awgn(p) => awgn_e0_tilted(s, rho, p.snr_power),
            Channel::Dmc(dmc) => {
                e0_two_param(dmc, self.dist.as_ref().unwrap(), s, rho).unwrap_or(f64::NEG_INFINITY)
            }
        }
    }

    /// One-parameter Gallager function `E_o(rho)`.
    pub fn e0_rho(&self, rho: f64) -> f64 {
        match self.channel {
            Channel::Bsc(p) => bsc_e0(p.epsilon, rho),
            Channel::Vnc(p) => p.capacity * rho / (1.0 + rho),
            Channel::Awgn(p) => awgn_e0_shell(rho, p.snr_power),
            Channel::Dmc(dmc) => {
                e0_gallager(dmc, self.dist.as_ref().unwrap(), rho).unwrap_or(f64::NEG_INFINITY)
            }
        }
    }

    /// Pairwise `E_x(s, rho)`; `None` for the Gaussian model, which has no
    /// pairwise form here.
    pub fn ex(&self, s: f64, rho: f64) -> Option<f64> {
        match self.channel {
            Channel::Bsc(p) => Some(bsc_ex_two(p.epsilon, s, rho)),
            Channel::Vnc(p) => Some(2.0 * p.capacity * s * (1.0 - s)),
            Channel::Awgn(_) => None,
            Channel::Dmc(dmc) => {
                Some(ex_two_param(dmc, self.dist.as_ref().unwrap(), s, rho).unwrap_or(f64::NEG_INFINITY))
            }
        }
    }

    /// `lim_{rho -> inf} E_o(rho)`: the zero-rate sphere-packing value.
    /// `None` when the limit is infinite (channels with zero transitions).
    pub fn e0_rho_limit(&self) -> Option<f64> {
        match self.channel {
            Channel::Bsc(p) => {
                let e = p.epsilon;
                if e <= 0.0 {
                    None
                } else {
                    Some(-(2.0 * (e * (1.0 - e)).sqrt()).ln())
                }
            }
            Channel::Vnc(p) => Some(p.capacity),
            Channel::Awgn(p) => Some(p.snr_power / 2.0),
            Channel::Dmc(dmc) => {
                let p = self.dist.as_ref().unwrap();
                let mut total = 0.0;
                for y in 0..dmc.output_size() {
                    let mut logz = 0.0;
                    let mut zero = false;
                    for x in 0..dmc.input_size() {
                        let w = dmc.prob(x, y);
                        let px = p.probs()[x];
                        if px > 0.0 {
                            if w <= 0.0 {
                                zero = true;
                                break;
                            }
                            logz += px * w.ln();
                        }
                    }
                    if !zero {
                        total += logz.exp();
                    }
                }
                if total > 0.0 {
                    Some(-total.ln())
                } else {
                    None
                }
            }
        }
    }

    /// `lim_{rho -> inf} E_x(s, rho) = -sum_{x,x'} p(x) p(x') ln B_s(x, x')`
    /// where `B_s` is the tilted pairwise kernel. `None` when some kernel
    /// entry vanishes (limit infinite) or the model has no pairwise form.
    pub fn ex_rho_limit(&self, s: f64) -> Option<f64> {
        match self.channel {
            Channel::Bsc(p) => {
                let b = bsc_beta(p.epsilon, s);
                if b <= 0.0 {
                    None
                } else {
                    Some(-0.5 * b.ln())
                }
            }
            Channel::Vnc(p) => Some(2.0 * p.capacity * s * (1.0 - s)),
            Channel::Awgn(_) => None,
            Channel::Dmc(dmc) => {
                let p = self.dist.as_ref().unwrap();
                let mut acc = 0.0;
                for x in 0..dmc.input_size() {
                    for x1 in 0..dmc.input_size() {
                        let px = p.probs()[x] * p.probs()[x1];
                        if px <= 0.0 {
                            continue;
                        }
                        let mut inner = 0.0;
                        for y in 0..dmc.output_size() {
                            inner += powz(dmc.prob(x, y), 1.0 - s) * powz(dmc.prob(x1, y), s);
                        }
                        if inner <= 0.0 {
                            return None;
                        }
                        acc -= px * inner.ln();
                    }
                }
                Some(acc)
            }
        }
    }

    /// Whether the pairwise (low-rate) form exists for this channel.
    pub fn has_pairwise(&self) -> bool {
        !matches!(self.channel, Channel::Awgn(_))
    }

    /// Per-letter relative-entropy corner term
    /// `sum_{x,y} p(x) p(y|x) ln p(y|x)` used by zero-rate ray limits.
    pub fn mean_log_likelihood(&self) -> Option<f64> {
        match self.channel {
            Channel::Dmc(dmc) => {
                let p = self.dist.as_ref().unwrap();
                let mut acc = 0.0;
                for x in 0..dmc.input_size() {
                    for y in 0..dmc.output_size() {
                        let w = dmc.prob(x, y);
                        if w > 0.0 {
                            acc += p.probs()[x] * w * w.ln();
                        }
                    }
                }
                Some(acc)
            }
            Channel::Bsc(p) => {
                let e = p.epsilon;
                let term = |q: f64| if q > 0.0 { q * q.ln() } else { 0.0 };
                Some(term(e) + term(1.0 - e))
            }
            _ => None,
        }
    }
}

fn normalize(mut p: Vec<f64>) -> Vec<f64> {
    for v in &mut p {
        if !v.is_finite() || *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = p.iter().sum();
    if s <= 0.0 {
        let n = p.len();
        return vec![1.0 / n as f64; n];
    }
    for v in &mut p {
        *v /= s;
    }
    p
}

// --------------------------------------------------------------------------
// Classical exponents.
// --------------------------------------------------------------------------

/// Random-coding exponent `E_r(R) = max_{rho in [0,1]} [E_o(rho) - rho R]`.
///
/// Rates above capacity return 0 with a warning flag. The search is a dense
/// grid (step 1e-3) refined by golden-section to 1e-9.
pub fn random_coding_exponent(channel: &Channel, r: f64) -> Result<ExponentValue> {
    validate_rate(r)?;
    if let Channel::Vnc(p) = channel {
        let c = p.capacity;
        if r > c {
            return Ok(ExponentValue::rate_clamped());
        }
        let value = analytic_models::vnc_er(r, c)?;
        let rho = ((c / r.max(1e-300)).sqrt() - 1.0).clamp(0.0, 1.0);
        return Ok(ExponentValue {
            value,
            argmax: ArgMax {
                rho: Some(rho),
                ..Default::default()
            },
            flags: PointFlags {
                analytic_limit: true,
                ..Default::default()
            },
        });
    }
    if r > capacity(channel) + 1e-12 {
        return Ok(ExponentValue::rate_clamped());
    }
    let eval = BaseEval::new(channel);
    let m = grid_golden_max(|rho| eval.e0_rho(rho) - rho * r, 0.0, 1.0, 1000, 1e-9);
    Ok(ExponentValue {
        value: m.value.max(0.0),
        argmax: ArgMax {
            rho: Some(m.arg),
            ..Default::default()
        },
        flags: PointFlags {
            input_lower_bound: eval.input_lower_bound,
            ..Default::default()
        },
    })
}

/// Sphere-packing exponent `E_sp(R) = sup_{rho >= 0} [E_o(rho) - rho R]`.
///
/// The cap on `rho` doubles from 64 to 4096; a maximizer still pinned at the
/// cap is returned with `at_cap` set. At `R = 0` the supremum is the
/// `rho -> inf` limit of `E_o`, returned analytically when finite.
pub fn sphere_packing_exponent(channel: &Channel, r: f64) -> Result<ExponentValue> {
    validate_rate(r)?;
    if let Channel::Vnc(p) = channel {
        let c = p.capacity;
        if r > c {
            return Ok(ExponentValue::rate_clamped());
        }
        return Ok(ExponentValue {
            value: analytic_models::vnc_esp(r, c)?,
            argmax: ArgMax::default(),
            flags: PointFlags {
                analytic_limit: true,
                ..Default::default()
            },
        });
    }
    if r > capacity(channel) + 1e-12 {
        return Ok(ExponentValue::rate_clamped());
    }
    let eval = BaseEval::new(channel);
    if r == 0.0 {
        if let Some(limit) = eval.e0_rho_limit() {
            return Ok(ExponentValue {
                value: limit,
                argmax: ArgMax::default(),
                flags: PointFlags {
                    analytic_limit: true,
                    input_lower_bound: eval.input_lower_bound,
                    ..Default::default()
                },
            });
        }
    }
    let m = cap_doubling_max(
        |rho| eval.e0_rho(rho) - rho * r,
        0.0,
        RHO_CAP_INITIAL,
        RHO_CAP_MAX,
        2048,
        1e-9,
    );
    Ok(ExponentValue {
        value: m.value.max(0.0),
        argmax: ArgMax {
            rho: Some(m.arg),
            ..Default::default()
        },
        flags: PointFlags {
            at_cap: m.at_upper,
            input_lower_bound: eval.input_lower_bound,
            ..Default::default()
        },
    })
}

/// Expurgated exponent
/// `E_ex(R) = max_{rho >= 1} [E_x(s = 1/2, rho) - rho R]`, clamped at zero.
///
/// Same cap-doubling treatment as sphere-packing; the `R = 0` supremum uses
/// the analytic `rho -> inf` limit of `E_x(1/2, .)` when finite. For the
/// Gaussian model the classical closed family
/// `E_x(rho) = (rho/2) ln(1 + a/(2 rho))` replaces the pairwise sum.
pub fn expurgated_exponent(channel: &Channel, r: f64) -> Result<ExponentValue> {
    validate_rate(r)?;
    if let Channel::Vnc(p) = channel {
        let c = p.capacity;
        if r > c {
            return Ok(ExponentValue::rate_clamped());
        }
        let raw = analytic_models::vnc_eex(r, c)?;
        return Ok(ExponentValue {
            value: raw.max(0.0),
            argmax: ArgMax {
                s: Some(0.5),
                rho: Some(1.0),
                ..Default::default()
            },
            flags: PointFlags {
                analytic_limit: true,
                clamped_negative: raw < 0.0,
                ..Default::default()
            },
        });
    }
    if r > capacity(channel) + 1e-12 {
        return Ok(ExponentValue::rate_clamped());
    }
    if let Channel::Awgn(p) = channel {
        let a = p.snr_power;
        if r == 0.0 {
            return Ok(ExponentValue {
                value: a / 4.0,
                argmax: ArgMax::default(),
                flags: PointFlags {
                    analytic_limit: true,
                    ..Default::default()
                },
            });
        }
        let m = cap_doubling_max(
            |rho| 0.5 * rho * (1.0 + a / (2.0 * rho)).ln() - rho * r,
            1.0,
            RHO_CAP_INITIAL,
            RHO_CAP_MAX,
            2048,
            1e-9,
        );
        return Ok(ExponentValue {
            value: m.value.max(0.0),
            argmax: ArgMax {
                rho: Some(m.arg),
                ..Default::default()
            },
            flags: PointFlags {
                at_cap: m.at_upper,
                clamped_negative: m.value < 0.0,
                ..Default::default()
            },
        });
    }
    let eval = BaseEval::new(channel);
    if r == 0.0 {
        if let Some(limit) = eval.ex_rho_limit(0.5) {
            return Ok(ExponentValue {
                value: limit.max(0.0),
                argmax: ArgMax {
                    s: Some(0.5),
                    ..Default::default()
                },
                flags: PointFlags {
                    analytic_limit: true,
                    input_lower_bound: eval.input_lower_bound,
                    clamped_negative: limit < 0.0,
                    ..Default::default()
                },
            });
        }
    }
    let m = cap_doubling_max(
        |rho| eval.ex(0.5, rho).unwrap_or(f64::NEG_INFINITY) - rho * r,
        1.0,
        RHO_CAP_INITIAL,
        RHO_CAP_MAX,
        2048,
        1e-9,
    );
    Ok(ExponentValue {
        value: m.value.max(0.0),
        argmax: ArgMax {
            s: Some(0.5),
            rho: Some(m.arg),
            ..Default::default()
        },
        flags: PointFlags {
            at_cap: m.at_upper,
            input_lower_bound: eval.input_lower_bound,
            clamped_negative: m.value < 0.0,
            ..Default::default()
        },
    })
}

/// The critical rate: the largest rate at which the random-coding maximizer
/// still sits at `rho = 1` (where sphere-packing and random-coding agree).
pub fn critical_rate(channel: &Channel) -> Result<f64> {
    // E_r's maximizer is rho = 1 exactly when R <= E_o'(1); compute the
    // derivative by central difference on the one-parameter function.
    let eval = BaseEval::new(channel);
    let h = 1e-6;
    Ok((eval.e0_rho(1.0 + h) - eval.e0_rho(1.0 - h)) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::make_bsc;
    use std::f64::consts::LN_2;

    fn bsc15() -> Channel {
        Channel::bsc(0.15).unwrap()
    }

    // ---------------- base function values --------------------------------

    #[test]
    fn e0_two_param_at_s_zero_is_zero() {
        let dmc = make_bsc(0.15).unwrap();
        let p = InputDistribution::uniform(2);
        assert_eq!(e0_two_param(&dmc, &p, 0.0, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn e0_two_param_matches_one_parameter_slice() {
        // Frozen: E_o(1) for crossover 0.15 = ln2 - 2 ln(sqrt(0.15) + sqrt(0.85)).
        let dmc = make_bsc(0.15).unwrap();
        let p = InputDistribution::uniform(2);
        let v = e0_two_param(&dmc, &p, 0.5, 1.0).unwrap();
        let closed = LN_2 - 2.0 * (0.15f64.sqrt() + 0.85f64.sqrt()).ln();
        assert!((v - closed).abs() < 1e-14, "{v} vs {closed}");
        assert!((v - 0.154234024969).abs() < 1e-12);
        assert!((e0_gallager(&dmc, &p, 1.0).unwrap() - v).abs() < 1e-15);
    }

    #[test]
    fn e0_two_param_useless_channel_is_zero() {
        let dmc = make_bsc(0.5).unwrap();
        let p = InputDistribution::uniform(2);
        assert!(e0_two_param(&dmc, &p, 0.5, 1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn e0_slice_identity_on_random_matrices() {
        // e0_two_param(s = rho/(1+rho), rho) == e0_gallager(rho) to 1e-12.
        let mats = [
            vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]],
            vec![vec![0.5, 0.25, 0.25], vec![0.05, 0.9, 0.05], vec![0.3, 0.3, 0.4]],
            vec![vec![0.85, 0.15], vec![0.15, 0.85]],
            vec![vec![0.99, 0.01], vec![0.4, 0.6]],
            vec![vec![0.6, 0.1, 0.1, 0.2], vec![0.2, 0.3, 0.25, 0.25]],
        ];
        for m in mats {
            let n = m.len();
            let dmc = Dmc::new(m).unwrap();
            let p = InputDistribution::uniform(n);
            for rho in [0.1, 0.35, 0.5, 0.8, 1.0, 1.7, 3.0, 9.0] {
                let s = rho / (1.0 + rho);
                let a = e0_two_param(&dmc, &p, s, rho).unwrap();
                let b = e0_gallager(&dmc, &p, rho).unwrap();
                assert!((a - b).abs() < 1e-12, "rho={rho}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn ex_two_param_values() {
        let p = InputDistribution::uniform(2);
        // Noiseless channel: cross terms vanish, inner sum = 1/2 -> ln 2.
        let noiseless = make_bsc(0.0).unwrap();
        let v = ex_two_param(&noiseless, &p, 0.5, 1.0).unwrap();
        assert!((v - LN_2).abs() < 1e-15);
        // Crossover 0.15 at (1/2, 1): equals the one-parameter E_o(1).
        let dmc = make_bsc(0.15).unwrap();
        let v = ex_two_param(&dmc, &p, 0.5, 1.0).unwrap();
        assert!((v - 0.154234024969).abs() < 1e-12, "{v}");
        // Useless channel: zero for any admissible parameters.
        let half = make_bsc(0.5).unwrap();
        assert!(ex_two_param(&half, &p, 0.3, 2.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn domain_validation() {
        let dmc = make_bsc(0.15).unwrap();
        let p = InputDistribution::uniform(2);
        assert!(e0_two_param(&dmc, &p, -0.1, 1.0).is_err());
        assert!(e0_two_param(&dmc, &p, 0.5, 0.0).is_err());
        assert!(ex_two_param(&dmc, &p, 1.2, 1.0).is_err());
        assert!(ex_two_param(&dmc, &p, 0.5, 0.5).is_err());
        assert!(e0_gallager(&dmc, &p, -1.0).is_err());
    }

    // ---------------- Gaussian form ----------------------------------------

    #[test]
    fn awgn_form_values() {
        // s = 0 collapses every term.
        assert_eq!(e0_awgn(0.0, 1.0, 0.0, 2.0).unwrap(), 0.0);
        // (0.5, 1, 0, 2): the final log argument is exactly 1 because
        // 1 - s - s/rho = 0, leaving (1/2) ln 2.
        let v = e0_awgn(0.5, 1.0, 0.0, 2.0).unwrap();
        assert!((v - 0.5 * LN_2).abs() < 1e-15, "{v}");
        assert!((v - 0.346573590280).abs() < 1e-12);
        // Tilt domain guard: 1 - 2ta < 0.
        assert!(e0_awgn(0.5, 1.0, 0.3, 2.0).is_err());
    }

    #[test]
    fn awgn_shell_matches_tilted_slice() {
        // The closed-form tilt maximizer against the numeric inner search.
        for a in [0.5, 1.9952623149688795, 4.0] {
            for rho in [0.05, 0.3, 1.0, 2.5, 10.0, 64.0] {
                let s = rho / (1.0 + rho);
                let closed = awgn_e0_shell(rho, a);
                let numeric = awgn_e0_tilted(s, rho, a);
                assert!(
                    (closed - numeric).abs() < 1e-9,
                    "a={a} rho={rho}: {closed} vs {numeric}"
                );
            }
        }
    }

    #[test]
    fn awgn_shell_limit_is_half_power() {
        // E_o(rho) -> a/2 as rho grows (rate-zero sphere-packing value).
        let a = 10f64.powf(0.3);
        assert!((awgn_e0_shell(5e4, a) - a / 2.0).abs() < 1e-4);
    }

    // ---------------- classical exponents ----------------------------------

    #[test]
    fn random_coding_zero_rate_closed_form() {
        // Frozen: ln2 - ln(1 + 2 sqrt(0.15 * 0.85)).
        let v = random_coding_exponent(&bsc15(), 0.0).unwrap();
        assert!((v.value - 0.154234024969).abs() < 1e-9, "{}", v.value);
        assert!((v.argmax.rho.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn random_coding_vanishes_at_capacity() {
        let c = capacity(&bsc15());
        let v = random_coding_exponent(&bsc15(), c).unwrap();
        assert!(v.value.abs() < 1e-9);
        // Above capacity: clamped with flag.
        let v = random_coding_exponent(&bsc15(), c + 0.01).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(v.flags.rate_above_capacity);
    }

    #[test]
    fn random_coding_noiseless_is_linear() {
        // Noiseless binary channel: E_o(rho) = rho ln2, so E_r = ln2 - R.
        let ch = Channel::bsc(0.0).unwrap();
        for r in [0.0, 0.2, 0.5, LN_2] {
            let v = random_coding_exponent(&ch, r).unwrap();
            assert!((v.value - (LN_2 - r)).abs() < 1e-9, "r={r}");
        }
    }

    #[test]
    fn sphere_packing_zero_rate_limit() {
        // Frozen: -ln(2 sqrt(0.15 * 0.85)).
        let v = sphere_packing_exponent(&bsc15(), 0.0).unwrap();
        assert!((v.value - 0.336672276632).abs() < 1e-12, "{}", v.value);
        assert!(v.flags.analytic_limit);
        assert!(!v.flags.at_cap);
    }

    #[test]
    fn sphere_packing_matches_random_coding_above_critical_rate() {
        let rc = critical_rate(&bsc15()).unwrap();
        assert!((rc - 0.085869470659).abs() < 1e-6, "{rc}");
        for r in [rc + 0.01, 0.15, 0.2, 0.25] {
            let sp = sphere_packing_exponent(&bsc15(), r).unwrap();
            let er = random_coding_exponent(&bsc15(), r).unwrap();
            assert!((sp.value - er.value).abs() < 1e-8, "r={r}");
            assert!(!sp.flags.at_cap);
        }
        // Below the critical rate sphere-packing is strictly larger.
        let sp = sphere_packing_exponent(&bsc15(), 0.04).unwrap();
        let er = random_coding_exponent(&bsc15(), 0.04).unwrap();
        assert!(sp.value > er.value + 1e-4);
    }

    #[test]
    fn expurgated_values() {
        // Frozen oracle: crossover 0.01, rate 0.01 nats.
        let ch = Channel::bsc(0.01).unwrap();
        let v = expurgated_exponent(&ch, 0.01).unwrap();
        assert!((v.value - 0.693262441726).abs() < 1e-7, "{}", v.value);
        // Zero-rate limit: -(1/2) ln(2 sqrt(eps(1-eps))).
        let v0 = expurgated_exponent(&bsc15(), 0.0).unwrap();
        assert!((v0.value - 0.168336138316).abs() < 1e-12, "{}", v0.value);
        assert!(v0.flags.analytic_limit);
        // Expurgation dominates random coding at zero rate.
        assert!(v0.value > random_coding_exponent(&bsc15(), 0.0).unwrap().value);
        // At capacity: zero within tolerance (clamped).
        let c = capacity(&bsc15());
        let vc = expurgated_exponent(&bsc15(), c).unwrap();
        assert!(vc.value.abs() < 1e-6);
    }

    #[test]
    fn generic_matrix_matches_closed_forms() {
        // The explicit-matrix path (symmetric -> uniform inputs) against the
        // closed binary-symmetric path.
        for eps in [0.05, 0.15, 0.3] {
            let closed = Channel::bsc(eps).unwrap();
            let generic = Channel::Dmc(make_bsc(eps).unwrap());
            for frac in [0.0, 0.3, 0.7, 0.95] {
                let r = frac * capacity(&closed);
                let a = random_coding_exponent(&closed, r).unwrap().value;
                let b = random_coding_exponent(&generic, r).unwrap().value;
                assert!((a - b).abs() < 1e-8, "eps={eps} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn asymmetric_matrix_is_flagged_lower_bound() {
        let z = Channel::Dmc(Dmc::new(vec![vec![1.0, 0.0], vec![0.25, 0.75]]).unwrap());
        let v = random_coding_exponent(&z, 0.05).unwrap();
        assert!(v.flags.input_lower_bound);
        assert!(v.value > 0.0);
        // Optimized inputs must do at least as well as uniform inputs.
        let dmc = Dmc::new(vec![vec![1.0, 0.0], vec![0.25, 0.75]]).unwrap();
        let uniform = InputDistribution::uniform(2);
        let m = grid_golden_max(
            |rho| e0_gallager(&dmc, &uniform, rho).unwrap() - rho * 0.05,
            0.0,
            1.0,
            1000,
            1e-9,
        );
        assert!(v.value >= m.value - 1e-9);
    }

    #[test]
    fn e0_concavity_and_monotonicity_in_rho() {
        let ch = bsc15();
        let eval = BaseEval::new(&ch);
        let mut prev = 0.0;
        let mut prev_diff = f64::INFINITY;
        for i in 1..=100 {
            let rho = i as f64 * 0.05;
            let v = eval.e0_rho(rho);
            let diff = v - prev;
            assert!(diff >= -1e-12, "not nondecreasing at rho={rho}");
            assert!(diff <= prev_diff + 1e-9, "not concave at rho={rho}");
            prev = v;
            prev_diff = diff;
        }
    }

    #[test]
    fn exponent_curves_nonincreasing_and_convex_in_rate() {
        let c = capacity(&bsc15());
        let grid: Vec<f64> = (0..=40).map(|i| c * i as f64 / 40.0).collect();
        for f in [
            random_coding_exponent as fn(&Channel, f64) -> Result<ExponentValue>,
            sphere_packing_exponent,
        ] {
            let vals: Vec<f64> = grid.iter().map(|&r| f(&bsc15(), r).unwrap().value).collect();
            for w in vals.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "not nonincreasing");
            }
            for w in vals.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-7, "not convex");
            }
        }
    }

    #[test]
    fn useless_channel_every_exponent_zero() {
        let ch = Channel::bsc(0.5).unwrap();
        assert!(random_coding_exponent(&ch, 0.0).unwrap().value.abs() < 1e-12);
        assert!(sphere_packing_exponent(&ch, 0.0).unwrap().value.abs() < 1e-12);
        assert!(expurgated_exponent(&ch, 0.0).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn vnc_dispatch_uses_analytic_forms() {
        let ch = Channel::vnc(1.0).unwrap();
        let er = random_coding_exponent(&ch, 0.1).unwrap();
        assert!((er.value - 0.4).abs() < 1e-15);
        assert!(er.flags.analytic_limit);
        let esp = sphere_packing_exponent(&ch, 0.25).unwrap();
        assert!((esp.value - 0.25).abs() < 1e-15);
        let eex = expurgated_exponent(&ch, 0.1).unwrap();
        assert!((eex.value - 0.4).abs() < 1e-15);
    }

    #[test]
    fn awgn_exponent_values() {
        // Frozen from the independent oracle run (3 dB, shell family).
        let ch = Channel::awgn(10f64.powf(0.3)).unwrap();
        let er0 = random_coding_exponent(&ch, 0.0).unwrap().value;
        assert!((er0 - 0.386312192990).abs() < 1e-7, "{er0}");
        let esp0 = sphere_packing_exponent(&ch, 0.0).unwrap();
        assert!((esp0.value - 10f64.powf(0.3) / 2.0).abs() < 1e-12);
        assert!(esp0.flags.analytic_limit);
        let eex0 = expurgated_exponent(&ch, 0.0).unwrap().value;
        assert!((eex0 - 10f64.powf(0.3) / 4.0).abs() < 1e-12);
        let er = random_coding_exponent(&ch, 0.3).unwrap().value;
        assert!((er - 0.089286516232).abs() < 1e-7, "{er}");
    }

    #[test]
    fn flags_render_compactly() {
        let f = PointFlags {
            at_cap: true,
            clamped_negative: true,
            ..Default::default()
        };
        assert_eq!(f.render(), "cap|clamped");
        assert_eq!(PointFlags::default().render(), "");
    }
}
