//! Threshold (erasure) decoding exponents.
//!
//! A threshold decoder accepts a message only when its likelihood beats the
//! combined likelihood of every alternative by a factor `e^(NT)`; otherwise
//! it declares an erasure. Two exponents describe it: `E_1(R, T)` for the
//! erasure event and `E_2(R, T) = E_1(R, T) + T` for undetected errors.
//!
//! `E_1` is the larger of two achievable forms,
//!
//! * high-rate: `max_{0 <= s <= rho <= 1} [E_o(s, rho) - rho R - s T]`,
//! * low-rate:  `max_{0 <= s <= 1, rho >= 1} [E_x(s, rho) - rho R - s T]`,
//!
//! and the feedback exponent `E_F(R)` is the value of `E_2` as `T` grows to
//! the point where `E_1` hits zero, equivalently the same maximizations with
//! the objective divided by `s`. That ratio attains its supremum on the
//! `s -> 0` edge for many channels, so the search floors `s` at
//! [`S_MIN`] and removes the `O(s)` bias by evaluating the difference
//! quotient at two floors (`s_min` and `2 s_min`) and extrapolating.

use crate::channels::{capacity, Channel};
use crate::error::{Error, Result};
use crate::gallager::{ArgMax, BaseEval, PointFlags, RHO_CAP_INITIAL, RHO_CAP_MAX};
use crate::optim::{cap_doubling_max, grid_golden_max, log_lin_grid, plane_max};

/// Floor for the `s` parameter in the ratio-form searches.
pub const S_MIN: f64 = 1e-6;

/// Which of the two achievable forms produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    HighRate,
    LowRate,
}

/// Erasure/undetected-error exponent pair at one `(R, T)` operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPoint {
    pub rate: f64,
    pub threshold: f64,
    /// Erasure exponent, clamped below at zero.
    pub e1: f64,
    /// Undetected-error exponent, `e1 + threshold`.
    pub e2: f64,
    /// The form that attained the (unclamped) maximum.
    pub branch: Branch,
    pub argmax: ArgMax,
    pub flags: PointFlags,
}

/// Feedback exponent at one rate, with search diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackPoint {
    pub rate: f64,
    pub value: f64,
    pub branch: Branch,
    /// The maximum was attained on the `s -> 0` edge (extrapolated ray).
    pub corner: bool,
    pub argmax: ArgMax,
    pub flags: PointFlags,
}

/// Restriction of the `E_1` search to one or both forms. The deadline
/// machinery must evaluate `E_1` over exactly the form set used by its own
/// maximization, so the restriction is explicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct BranchSet {
    pub high: bool,
    pub low: bool,
}

impl BranchSet {
    pub const BOTH: BranchSet = BranchSet { high: true, low: true };
    pub const HIGH_ONLY: BranchSet = BranchSet { high: true, low: false };
}

fn validate_point(channel: &Channel, r: f64, t: f64) -> Result<f64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("threshold must be >= 0, got {t}")));
    }
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!("rate must be >= 0, got {r}")));
    }
    let c = capacity(channel);
    if r > c + 1e-9 {
        return Err(Error::Domain(format!(
            "rate {r} exceeds capacity {c}"
        )));
    }
    Ok(r.min(c))
}

/// Grid for the `s` axis: logarithmic near the floor, linear above, so both
/// corner-dominated and interior maxima are bracketed.
fn s_grid() -> Vec<f64> {
    log_lin_grid(S_MIN, 28, 48)
}

/// Unclamped high-rate maximum `max_{0<=s<=rho<=1} [E_o(s,rho) - rho R - sT]`
/// (the `s = 0` edge contributes exactly 0 and is handled by the caller's
/// clamp).
fn e1_high_raw(eval: &BaseEval<'_>, r: f64, t: f64) -> (f64, ArgMax) {
    let m = plane_max(
        |s, rho| eval.e0(s, rho) - rho * r - s * t,
        &s_grid(),
        |s| (s, 1.0),
        |rho| (S_MIN.min(rho), rho),
        40,
        8,
        1e-12,
    );
    (
        m.value,
        ArgMax {
            s: Some(m.s),
            rho: Some(m.rho),
            t: None,
        },
    )
}

/// Unclamped low-rate maximum `max_{0<=s<=1, rho>=1} [E_x(s,rho) - rho R - sT]`.
/// `None` when the channel has no pairwise form. The `rho` range is capped
/// with doubling; at exactly zero rate the `rho -> inf` limit is used
/// analytically when available.
fn e1_low_raw(eval: &BaseEval<'_>, r: f64, t: f64) -> Option<(f64, ArgMax, PointFlags)> {
    if !eval.has_pairwise() {
        return None;
    }
    let mut flags = PointFlags::default();
    // Numeric arm: nested search, outer on s, inner capped on rho.
    let inner = |s: f64| {
        cap_doubling_max(
            |rho| eval.ex(s, rho).unwrap_or(f64::NEG_INFINITY) - rho * r,
            1.0,
            RHO_CAP_INITIAL,
            RHO_CAP_MAX,
            192,
            1e-11,
        )
    };
    let outer = grid_golden_max(|s| inner(s).value - s * t, 0.0, 1.0, 64, 1e-11);
    let inner_at_best = inner(outer.arg);
    let mut best = (
        outer.value,
        ArgMax {
            s: Some(outer.arg),
            rho: Some(inner_at_best.arg),
            t: None,
        },
    );
    if inner_at_best.at_upper {
        flags.at_cap = true;
    }
    if r == 0.0 {
        // rho -> inf arm, exact at zero rate.
        let limit = grid_golden_max(
            |s| eval.ex_rho_limit(s).unwrap_or(f64::NEG_INFINITY) - s * t,
            0.0,
            1.0,
            64,
            1e-12,
        );
        if limit.value.is_finite() && limit.value > best.0 {
            best = (
                limit.value,
                ArgMax {
                    s: Some(limit.arg),
                    rho: None,
                    t: None,
                },
            );
            flags.at_cap = false;
            flags.analytic_limit = true;
        }
    }
    Some((best.0, best.1, flags))
}

pub(crate) struct E1Raw {
    pub raw: f64,
    pub branch: Branch,
    pub argmax: ArgMax,
    pub flags: PointFlags,
}

/// Unclamped `E_1` over the requested form set, with the winning form.
pub(crate) fn e1_raw(eval: &BaseEval<'_>, r: f64, t: f64, set: BranchSet) -> E1Raw {
    let mut best: Option<E1Raw> = None;
    if set.high {
        let (v, argmax) = e1_high_raw(eval, r, t);
        best = Some(E1Raw {
            raw: v,
            branch: Branch::HighRate,
            argmax,
            flags: PointFlags::default(),
        });
    }
    if set.low {
        if let Some((v, argmax, flags)) = e1_low_raw(eval, r, t) {
            if best.as_ref().map_or(true, |b| v > b.raw) {
                best = Some(E1Raw {
                    raw: v,
                    branch: Branch::LowRate,
                    argmax,
                    flags,
                });
            }
        }
    }
    let mut out = best.expect("at least one branch requested");
    out.flags.input_lower_bound = eval.input_lower_bound;
    out
}

/// Full diagnostics for the threshold-decoding pair at `(R, T)`.
pub fn threshold_exponents(channel: &Channel, r: f64, t: f64) -> Result<ThresholdPoint> {
    let r = validate_point(channel, r, t)?;
    let eval = BaseEval::new(channel);
    let raw = e1_raw(&eval, r, t, BranchSet::BOTH);
    let clamped = raw.raw < 0.0;
    let e1 = raw.raw.max(0.0);
    Ok(ThresholdPoint {
        rate: r,
        threshold: t,
        e1,
        e2: e1 + t,
        branch: raw.branch,
        argmax: raw.argmax,
        flags: PointFlags {
            clamped_negative: clamped,
            ..raw.flags
        },
    })
}

/// Erasure exponent `E_1(R, T)`.
pub fn e1(channel: &Channel, r: f64, t: f64) -> Result<f64> {
    threshold_exponents(channel, r, t).map(|p| p.e1)
}

/// Undetected-error exponent `E_2(R, T) = E_1(R, T) + T`.
pub fn e2(channel: &Channel, r: f64, t: f64) -> Result<f64> {
    threshold_exponents(channel, r, t).map(|p| p.e2)
}

/// One ray of the corner search: the difference quotient
/// `(E_o(s, gamma s) - gamma s R) / s` at the floor `s`.
fn corner_quotient(eval: &BaseEval<'_>, r: f64, gamma: f64, s: f64) -> f64 {
    (eval.e0(s, gamma * s) - gamma * s * r) / s
}

/// Corner (s -> 0) value of the high-rate ratio form: optimize the ray slope
/// `gamma = rho / s >= 1` at the floor, then cancel the `O(s)` bias with the
/// two-floor extrapolation `2 q(s_min) - q(2 s_min)`.
fn corner_value(eval: &BaseEval<'_>, r: f64) -> (f64, f64, bool) {
    let gamma_cap = 1.0 / (2.0 * S_MIN);
    let m = cap_doubling_max(
        |g| corner_quotient(eval, r, g, S_MIN),
        1.0,
        1024.0,
        gamma_cap,
        256,
        1e-10,
    );
    let q1 = corner_quotient(eval, r, m.arg, S_MIN);
    let q2 = corner_quotient(eval, r, m.arg, 2.0 * S_MIN);
    // Stability between the two floors: the bias is O(s_min), so the two
    // evaluations must be close long before extrapolation.
    debug_assert!(
        (q1 - q2).abs() < 1e-3 * (1.0 + q1.abs()),
        "corner quotient unstable between floors: {q1} vs {q2}"
    );
    (2.0 * q1 - q2, m.arg, m.at_upper)
}

/// Zero-rate feedback exponent, analytic per channel family; `None` when no
/// closed form applies (then the generic search handles it).
fn feedback_zero_rate(channel: &Channel, eval: &BaseEval<'_>) -> Option<f64> {
    match channel {
        Channel::Bsc(p) => {
            let e = p.epsilon;
            if e == 0.0 {
                Some(f64::INFINITY)
            } else {
                Some(capacity(channel) - std::f64::consts::LN_2 - (e * (1.0 - e)).sqrt().ln())
            }
        }
        Channel::Awgn(p) => Some(p.snr_power),
        Channel::Vnc(p) => Some(2.0 * p.capacity),
        Channel::Dmc(dmc) => {
            // gamma -> inf ray limit: sum_xy p W ln W - sum_y q_y sum_x p_x ln W(y|x),
            // infinite when some output sees only part of the input support.
            let mll = eval.mean_log_likelihood()?;
            let p = crate::channels::InputDistribution::uniform(dmc.input_size());
            let p = if dmc.is_symmetric() { p } else { return None };
            let mut acc = mll;
            for y in 0..dmc.output_size() {
                let mut q = 0.0;
                let mut log_term = 0.0;
                let mut full = true;
                for x in 0..dmc.input_size() {
                    let w = dmc.prob(x, y);
                    q += p.probs()[x] * w;
                    if w <= 0.0 {
                        full = false;
                    } else {
                        log_term += p.probs()[x] * w.ln();
                    }
                }
                if q > 0.0 {
                    if !full {
                        return Some(f64::INFINITY);
                    }
                    acc -= q * log_term;
                }
            }
            Some(acc)
        }
    }
}

/// Feedback exponent with full diagnostics.
pub fn feedback_point(channel: &Channel, r: f64) -> Result<FeedbackPoint> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!("rate must be >= 0, got {r}")));
    }
    let c = capacity(channel);
    if r > c + 1e-12 {
        return Ok(FeedbackPoint {
            rate: r,
            value: 0.0,
            branch: Branch::HighRate,
            corner: false,
            argmax: ArgMax::default(),
            flags: PointFlags {
                rate_above_capacity: true,
                ..Default::default()
            },
        });
    }
    if let Channel::Vnc(p) = channel {
        let value = crate::analytic_models::vnc_ef(r, p.capacity)?;
        return Ok(FeedbackPoint {
            rate: r,
            value,
            branch: Branch::HighRate,
            corner: true,
            argmax: ArgMax::default(),
            flags: PointFlags {
                analytic_limit: true,
                ..Default::default()
            },
        });
    }
    let eval = BaseEval::new(channel);
    if r == 0.0 {
        if let Some(value) = feedback_zero_rate(channel, &eval) {
            return Ok(FeedbackPoint {
                rate: r,
                value,
                branch: Branch::HighRate,
                corner: true,
                argmax: ArgMax::default(),
                flags: PointFlags {
                    analytic_limit: true,
                    input_lower_bound: eval.input_lower_bound,
                    ..Default::default()
                },
            });
        }
    }
    let mut flags = PointFlags {
        input_lower_bound: eval.input_lower_bound,
        ..Default::default()
    };

    // Interior of the high-rate region (floored s).
    let interior = plane_max(
        |s, rho| (eval.e0(s, rho) - rho * r) / s,
        &s_grid(),
        |s| (s, 1.0),
        |rho| (S_MIN.min(rho), rho),
        40,
        8,
        1e-12,
    );
    let mut best = FeedbackPoint {
        rate: r,
        value: interior.value,
        branch: Branch::HighRate,
        corner: false,
        argmax: ArgMax {
            s: Some(interior.s),
            rho: Some(interior.rho),
            t: None,
        },
        flags,
    };

    // Extrapolated s -> 0 corner of the high-rate region.
    let (corner, gamma, gamma_at_cap) = corner_value(&eval, r);
    if corner > best.value {
        flags.at_cap = gamma_at_cap;
        best = FeedbackPoint {
            rate: r,
            value: corner,
            branch: Branch::HighRate,
            corner: true,
            argmax: ArgMax {
                s: None,
                rho: Some(gamma), // ray slope rho/s at the corner
                t: None,
            },
            flags,
        };
    }

    // Low-rate ratio form.
    if eval.has_pairwise() {
        let inner = |s: f64| {
            cap_doubling_max(
                |rho| eval.ex(s, rho).unwrap_or(f64::NEG_INFINITY) - rho * r,
                1.0,
                RHO_CAP_INITIAL,
                RHO_CAP_MAX,
                192,
                1e-11,
            )
        };
        let outer = grid_golden_max(|s| inner(s).value / s, S_MIN, 1.0, 64, 1e-11);
        if outer.value > best.value {
            let inner_best = inner(outer.arg);
            best = FeedbackPoint {
                rate: r,
                value: outer.value,
                branch: Branch::LowRate,
                corner: false,
                argmax: ArgMax {
                    s: Some(outer.arg),
                    rho: Some(inner_best.arg),
                    t: None,
                },
                flags: PointFlags {
                    at_cap: inner_best.at_upper,
                    ..flags
                },
            };
        }
    }

    if best.value < 0.0 {
        best.value = 0.0;
        best.flags.clamped_negative = true;
    }
    Ok(best)
}

/// Feedback exponent `E_F(R)`: the undetected-error exponent in the limit of
/// a vanishing erasure exponent.
pub fn feedback_exponent(channel: &Channel, r: f64) -> Result<f64> {
    feedback_point(channel, r).map(|p| p.value)
}
