//! Deadline-constrained ARQ bounds.
//!
//! With a hard deadline of `L` rounds (the first transmission included), the
//! last round must decode outright while earlier rounds may erase. Two
//! schemes are bounded here:
//!
//! * memoryless decoding, where each round decodes its own block in
//!   isolation:
//!   `E_r(R) + (L-1) E1max <= E_MD(R, L) <= L E_sp(R)`, with
//!   `E1max = max_{0<=s<=rho<=1} (E_o(s,rho) - rho R - s E_r(R)) / (1 + s(L-2))`
//!   and the deadline-optimal erasure threshold
//!   `T* = E_r(R) + (L-2) E1max`, which satisfies the fixed point
//!   `T* = E_r(R) + (L-2) E_1(R, T*)`;
//! * incremental redundancy, where rounds accumulate:
//!   `E_IR(R, L) >= min{ E_F(R), L E_r(R/L) }`.
//!
//! In both, the random-coding base may be replaced by
//! `max(E_r, E_ex)` (expurgated tightening, on by default).
//!
//! The minimum-deadline analysis asks for the smallest `L` making the
//! accumulated arm dominate the feedback exponent at every rate.

use crate::channels::{capacity, Channel};
use crate::erasure_exponents::{e1_raw, feedback_point, Branch, BranchSet};
use crate::error::{Error, Result};
use crate::gallager::{
    expurgated_exponent, random_coding_exponent, sphere_packing_exponent, ArgMax, BaseEval,
    PointFlags, RHO_CAP_INITIAL, RHO_CAP_MAX,
};
use crate::optim::{cap_doubling_max, grid_golden_max, log_lin_grid, plane_max};
use rayon::prelude::*;

/// Options shared by the deadline bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundOptions {
    /// Use `max(E_r, E_ex)` instead of `E_r` as the per-round base exponent.
    pub expurgated_base: bool,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            expurgated_base: true,
        }
    }
}

/// Memoryless-decoding bounds at one `(R, L)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct MdBounds {
    pub rate: f64,
    pub l: u32,
    /// Achievability bound `base + (L-1) E1max`.
    pub lower: f64,
    /// Converse bound `L E_sp(R)`.
    pub upper: f64,
    /// Deadline-optimal threshold `base + (L-2) E1max`.
    pub t_star: f64,
    /// Erasure exponent re-evaluated at `t_star` (fixed-point witness).
    pub e1_at_tstar: f64,
    /// The inner maximization value.
    pub e1_max: f64,
    /// Per-round base exponent (`E_r` or `max(E_r, E_ex)`).
    pub base: f64,
    pub flags: PointFlags,
}

/// Which arm of the incremental-redundancy bound attained the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrArm {
    /// The feedback exponent `E_F(R)`.
    Feedback,
    /// The accumulated coding arm `L base(R/L)`.
    Coding,
}

/// Incremental-redundancy lower bound with both arms reported.
#[derive(Debug, Clone, PartialEq)]
pub struct IrBound {
    pub rate: f64,
    pub l: u32,
    pub value: f64,
    pub feedback_arm: f64,
    pub coding_arm: f64,
    pub arm: IrArm,
    pub flags: PointFlags,
}

/// Result of the binary-channel deadline sufficiency bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Bound {
    pub l: u32,
    /// The underlying ratio `E_F(0) / E_r(0)`.
    pub ratio: f64,
    /// Set below crossover 0.05, where the zero-rate ratio blows up.
    pub loose: bool,
}

/// Minimum-deadline search report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LReqReport {
    pub l: u32,
    /// `min_R [L base(R/L) - E_F(R)]` at the accepted `L`.
    pub worst_margin: f64,
    /// Rate attaining the worst margin.
    pub at_rate: f64,
}

fn validate_l(l: u32) -> Result<()> {
    if l < 2 {
        return Err(Error::Config {
            field: "l",
            message: format!("deadline must be at least 2 rounds, got {l}"),
        });
    }
    Ok(())
}

fn validate_rate(channel: &Channel, r: f64) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!("rate must be >= 0, got {r}")));
    }
    let c = capacity(channel);
    if r > c + 1e-9 {
        return Err(Error::Domain(format!("rate {r} exceeds capacity {c}")));
    }
    Ok(r.min(c))
}

/// Per-round base exponent: `E_r(R)`, or `max(E_r(R), E_ex(R))` when the
/// expurgated tightening is on.
pub fn base_exponent(channel: &Channel, r: f64, opts: BoundOptions) -> Result<(f64, PointFlags)> {
    let er = random_coding_exponent(channel, r)?;
    if !opts.expurgated_base {
        return Ok((er.value, er.flags));
    }
    let ex = expurgated_exponent(channel, r)?;
    if ex.value > er.value {
        Ok((ex.value, ex.flags))
    } else {
        Ok((er.value, er.flags))
    }
}

fn branch_set(opts: BoundOptions) -> BranchSet {
    if opts.expurgated_base {
        BranchSet::BOTH
    } else {
        BranchSet::HIGH_ONLY
    }
}

/// The deadline-weighted erasure maximization
/// `max (E_o(s,rho) - rho R - s base) / (1 + s(L-2))` over the high-rate
/// region, extended over the pairwise form when the expurgated flag is on.
/// Clamped below at zero.
fn e1_max(
    eval: &BaseEval<'_>,
    r: f64,
    l: u32,
    base: f64,
    opts: BoundOptions,
) -> (f64, ArgMax, Branch, PointFlags) {
    let lm2 = (l - 2) as f64;
    let denom = |s: f64| 1.0 + s * lm2;
    let s_grid = log_lin_grid(1e-6, 28, 48);
    let high = plane_max(
        |s, rho| (eval.e0(s, rho) - rho * r - s * base) / denom(s),
        &s_grid,
        |s| (s, 1.0),
        |rho| (1e-6f64.min(rho), rho),
        40,
        8,
        1e-12,
    );
    let mut value = high.value;
    let mut argmax = ArgMax {
        s: Some(high.s),
        rho: Some(high.rho),
        t: None,
    };
    let mut branch = Branch::HighRate;
    let mut flags = PointFlags::default();
    if opts.expurgated_base && eval.has_pairwise() {
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
        let outer =
            grid_golden_max(|s| (inner(s).value - s * base) / denom(s), 0.0, 1.0, 64, 1e-12);
        let mut low_value = outer.value;
        let mut low_arg = ArgMax {
            s: Some(outer.arg),
            rho: Some(inner(outer.arg).arg),
            t: None,
        };
        let mut low_flags = PointFlags {
            at_cap: inner(outer.arg).at_upper,
            ..Default::default()
        };
        if r == 0.0 {
            let limit = grid_golden_max(
                |s| {
                    (eval.ex_rho_limit(s).unwrap_or(f64::NEG_INFINITY) - s * base) / denom(s)
                },
                0.0,
                1.0,
                64,
                1e-12,
            );
            if limit.value.is_finite() && limit.value > low_value {
                low_value = limit.value;
                low_arg = ArgMax {
                    s: Some(limit.arg),
                    rho: None,
                    t: None,
                };
                low_flags = PointFlags {
                    analytic_limit: true,
                    ..Default::default()
                };
            }
        }
        if low_value > value {
            value = low_value;
            argmax = low_arg;
            branch = Branch::LowRate;
            flags = low_flags;
        }
    }
    if value < 0.0 {
        value = 0.0;
        argmax = ArgMax::default();
        flags.clamped_negative = true;
    }
    (value, argmax, branch, flags)
}

/// Memoryless-decoding bounds with full diagnostics. The returned point
/// carries the fixed-point witness `e1_at_tstar`; in debug builds the
/// identity `|E_1(R, T*) - E1max| < 1e-6` is asserted outright.
pub fn md_bounds(channel: &Channel, r: f64, l: u32, opts: BoundOptions) -> Result<MdBounds> {
    validate_l(l)?;
    let r = validate_rate(channel, r)?;
    let (base, base_flags) = base_exponent(channel, r, opts)?;
    let eval = BaseEval::new(channel);
    let (e1m, argmax, _branch, e1_flags) = e1_max(&eval, r, l, base, opts);
    let _ = argmax;
    let lower = base + (l - 1) as f64 * e1m;
    let t_star = base + (l - 2) as f64 * e1m;
    let e1_at_tstar = e1_raw(&eval, r, t_star, branch_set(opts)).raw.max(0.0);
    debug_assert!(
        (e1_at_tstar - e1m).abs() < 1e-6,
        "threshold fixed point violated: e1(R,T*)={e1_at_tstar} vs E1max={e1m}"
    );
    let sp = sphere_packing_exponent(channel, r)?;
    let upper = l as f64 * sp.value;
    Ok(MdBounds {
        rate: r,
        l,
        lower,
        upper,
        t_star,
        e1_at_tstar,
        e1_max: e1m,
        base,
        flags: base_flags.merged(e1_flags).merged(sp.flags),
    })
}

/// Achievability bound for memoryless decoding: `base + (L-1) E1max`.
pub fn md_lower_bound(channel: &Channel, r: f64, l: u32) -> Result<f64> {
    md_bounds(channel, r, l, BoundOptions::default()).map(|b| b.lower)
}

/// Converse bound for memoryless decoding: `L E_sp(R)`.
pub fn md_upper_bound(channel: &Channel, r: f64, l: u32) -> Result<f64> {
    validate_l(l)?;
    let r = validate_rate(channel, r)?;
    let sp = sphere_packing_exponent(channel, r)?;
    Ok(l as f64 * sp.value)
}

/// Incremental-redundancy lower bound `min{E_F(R), L base(R/L)}` with both
/// arms reported.
pub fn ir_bound(channel: &Channel, r: f64, l: u32, opts: BoundOptions) -> Result<IrBound> {
    validate_l(l)?;
    let r = validate_rate(channel, r)?;
    let fp = feedback_point(channel, r)?;
    let (per_round, base_flags) = base_exponent(channel, r / l as f64, opts)?;
    let coding = l as f64 * per_round;
    let (value, arm) = if fp.value <= coding {
        (fp.value, IrArm::Feedback)
    } else {
        (coding, IrArm::Coding)
    };
    Ok(IrBound {
        rate: r,
        l,
        value,
        feedback_arm: fp.value,
        coding_arm: coding,
        arm,
        flags: fp.flags.merged(base_flags),
    })
}

/// Incremental-redundancy lower bound with default options.
pub fn ir_lower_bound(channel: &Channel, r: f64, l: u32) -> Result<f64> {
    ir_bound(channel, r, l, BoundOptions::default()).map(|b| b.value)
}

/// Deadline-optimal erasure threshold `T* = base + (L-2) E1max`, verified
/// against the fixed point `T* = base + (L-2) E_1(R, T*)` through an
/// independent `E_1` evaluation.
pub fn optimal_threshold(channel: &Channel, r: f64, l: u32) -> Result<f64> {
    let b = md_bounds(channel, r, l, BoundOptions::default())?;
    let residual = (b.e1_at_tstar - b.e1_max).abs();
    if residual >= 1e-5 {
        return Err(Error::ThresholdFixedPoint {
            e1_at_tstar: b.e1_at_tstar,
            e1_max: b.e1_max,
            tolerance: 1e-5,
        });
    }
    Ok(b.t_star)
}

/// The memoryless lower bound at a large deadline, for checking its
/// approach to the feedback exponent from below.
pub fn md_limit_check(channel: &Channel, r: f64, l_big: u32) -> Result<f64> {
    if l_big < 100 {
        return Err(Error::Config {
            field: "l_big",
            message: format!("limit check expects a deadline >= 100, got {l_big}"),
        });
    }
    md_lower_bound(channel, r, l_big)
}

/// Deadline sufficiency for a binary symmetric channel from the zero-rate
/// exponents alone: `ceil(E_F(0) / E_r(0))` with
/// `E_F(0) = (1/2 - eps) ln((1-eps)/eps)` and
/// `E_r(0) = ln 2 - ln(1 + 2 sqrt(eps(1-eps)))`. At `eps = 1/2` both vanish;
/// the ratio extends continuously to 4.
pub fn lemma1_bound(epsilon: f64) -> Result<Lemma1Bound> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::Domain(format!(
            "crossover must lie in (0, 0.5], got {epsilon}"
        )));
    }
    let loose = epsilon < 0.05;
    if epsilon == 0.5 {
        return Ok(Lemma1Bound {
            l: 4,
            ratio: 4.0,
            loose,
        });
    }
    let ef0 = (0.5 - epsilon) * ((1.0 - epsilon) / epsilon).ln();
    let er0 = std::f64::consts::LN_2 - (1.0 + 2.0 * (epsilon * (1.0 - epsilon)).sqrt()).ln();
    let ratio = ef0 / er0;
    Ok(Lemma1Bound {
        l: ratio.ceil() as u32,
        ratio,
        loose,
    })
}

/// Number of rate-grid points used by the minimum-deadline search.
pub const L_REQ_GRID: usize = 512;
/// Largest deadline tried before the search reports failure.
pub const L_REQ_MAX: u32 = 64;
/// Margin tolerance: a deadline is accepted when
/// `L base(R/L) - E_F(R) >= -L_REQ_TOLERANCE` across the whole grid.
pub const L_REQ_TOLERANCE: f64 = 1e-6;

/// Smallest deadline whose accumulated coding arm covers the feedback
/// exponent at every rate: the least `L >= 2` with
/// `min_R [L base(R/L) - E_F(R)] >= -1e-6` over a 512-point grid on `[0, C]`.
pub fn l_req_report(channel: &Channel, opts: BoundOptions) -> Result<LReqReport> {
    let c = capacity(channel);
    let rates: Vec<f64> = (0..L_REQ_GRID)
        .map(|i| c * i as f64 / (L_REQ_GRID - 1) as f64)
        .collect();
    let ef: Vec<f64> = rates
        .par_iter()
        .map(|&r| feedback_point(channel, r).map(|p| p.value))
        .collect::<Result<_>>()?;
    let mut worst = (f64::INFINITY, 0.0);
    for l in 2..=L_REQ_MAX {
        let margins: Vec<f64> = rates
            .par_iter()
            .zip(ef.par_iter())
            .map(|(&r, &e)| {
                base_exponent(channel, r / l as f64, opts).map(|(b, _)| l as f64 * b - e)
            })
            .collect::<Result<_>>()?;
        let (idx, &min) = margins
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty grid");
        if min >= -L_REQ_TOLERANCE {
            return Ok(LReqReport {
                l,
                worst_margin: min,
                at_rate: rates[idx],
            });
        }
        if min < worst.0 {
            worst = (min, rates[idx]);
        }
    }
    Err(Error::DeadlineNotFound {
        l_max: L_REQ_MAX,
        worst_margin: worst.0,
        at_rate: worst.1,
    })
}

/// [`l_req_report`] with default options, returning just the deadline.
pub fn l_req(channel: &Channel) -> Result<u32> {
    l_req_report(channel, BoundOptions::default()).map(|r| r.l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::erasure_exponents::feedback_exponent;

    fn bsc15() -> Channel {
        Channel::bsc(0.15).unwrap()
    }

    const NO_EXPURG: BoundOptions = BoundOptions {
        expurgated_base: false,
    };

    // Frozen oracle values (independent Python grid/golden maximization).
    const ER_01: f64 = 0.0554162861237;
    const MD_LOWER_01_L4: f64 = 0.114919222797;
    const E1MAX_01_L4: f64 = 0.0198343122245;
    const TSTAR_01_L4: f64 = 0.0950849105728;
    const TSTAR_01_L3: f64 = 0.079858798162;
    const MD_LOWER_01_L2: f64 = 0.0881504251395;
    const MD_LOWER_0_L2: f64 = 0.261982179614;
    const IR_0_L2_EXPURG: f64 = 0.336672276632;
    const IR_0_L2_PLAIN: f64 = 0.308468049937;

    #[test]
    fn md_bounds_interior_point_matches_oracle() {
        let b = md_bounds(&bsc15(), 0.1, 4, BoundOptions::default()).unwrap();
        assert!((b.lower - MD_LOWER_01_L4).abs() < 1e-8, "{}", b.lower);
        assert!((b.e1_max - E1MAX_01_L4).abs() < 1e-8, "{}", b.e1_max);
        assert!((b.t_star - TSTAR_01_L4).abs() < 1e-8, "{}", b.t_star);
        assert!((b.base - ER_01).abs() < 1e-9);
        assert!(b.lower > b.base + 1e-3, "must strictly improve on one round");
        assert!(b.lower <= b.upper);
    }

    #[test]
    fn md_lower_two_rounds_uses_base_threshold() {
        let b = md_bounds(&bsc15(), 0.1, 2, BoundOptions::default()).unwrap();
        assert!((b.t_star - b.base).abs() < 1e-12, "T* = base exactly at L=2");
        assert!((b.lower - MD_LOWER_01_L2).abs() < 1e-8, "{}", b.lower);
    }

    #[test]
    fn md_lower_zero_rate_pairwise_base() {
        let b = md_bounds(&bsc15(), 0.0, 2, BoundOptions::default()).unwrap();
        assert!((b.lower - MD_LOWER_0_L2).abs() < 1e-8, "{}", b.lower);
        assert!((b.base - 0.168336138316).abs() < 1e-9);
    }

    #[test]
    fn md_bounds_vanish_at_capacity() {
        let c = capacity(&bsc15());
        for l in [2, 4, 7] {
            let b = md_bounds(&bsc15(), c, l, BoundOptions::default()).unwrap();
            assert!(b.lower.abs() < 1e-8, "L={l}: {}", b.lower);
            assert!(b.upper.abs() < 1e-8);
            assert!(b.t_star.abs() < 1e-8);
        }
    }

    #[test]
    fn optimal_threshold_values() {
        // L=2 reduces to the base exponent; L=3 adds one E1max step.
        let t2 = optimal_threshold(&bsc15(), 0.1, 2).unwrap();
        assert!((t2 - ER_01).abs() < 1e-8, "{t2}");
        let t3 = optimal_threshold(&bsc15(), 0.1, 3).unwrap();
        assert!((t3 - TSTAR_01_L3).abs() < 1e-8, "{t3}");
        let tc = optimal_threshold(&bsc15(), capacity(&bsc15()), 5).unwrap();
        assert!(tc.abs() < 1e-8);
    }

    #[test]
    fn md_upper_is_linear_in_rounds() {
        let one = sphere_packing_exponent(&bsc15(), 0.1).unwrap().value;
        for l in [2, 3, 10] {
            let u = md_upper_bound(&bsc15(), 0.1, l).unwrap();
            assert!((u - l as f64 * one).abs() < 1e-12);
        }
        let u0 = md_upper_bound(&bsc15(), 0.0, 2).unwrap();
        assert!((u0 - 2.0 * 0.336672276632).abs() < 1e-9, "{u0}");
    }

    #[test]
    fn md_lower_monotone_in_deadline() {
        let mut prev = 0.0;
        for l in [2, 3, 4, 6, 8, 16] {
            let v = md_lower_bound(&bsc15(), 0.1, l).unwrap();
            assert!(v >= prev - 1e-10, "L={l}");
            prev = v;
        }
        // and stays strictly under the feedback exponent
        let ef = feedback_exponent(&bsc15(), 0.1).unwrap();
        assert!(prev < ef);
    }

    #[test]
    fn ir_bound_arms() {
        // Zero rate: the accumulated arm is smaller, and the expurgated flag
        // switches its base.
        let with = ir_bound(&bsc15(), 0.0, 2, BoundOptions::default()).unwrap();
        assert!((with.value - IR_0_L2_EXPURG).abs() < 1e-9, "{}", with.value);
        assert_eq!(with.arm, IrArm::Coding);
        let plain = ir_bound(&bsc15(), 0.0, 2, NO_EXPURG).unwrap();
        assert!((plain.value - IR_0_L2_PLAIN).abs() < 1e-9, "{}", plain.value);
        // At capacity both arms vanish.
        let c = capacity(&bsc15());
        let top = ir_bound(&bsc15(), c, 2, BoundOptions::default()).unwrap();
        assert!(top.value.abs() < 1e-7);
    }

    #[test]
    fn ir_bound_analytic_model_collapses_to_feedback() {
        // C=1, L=4: the accumulated arm covers E_F at every rate.
        let ch = Channel::vnc(1.0).unwrap();
        for i in 0..=16 {
            let r = i as f64 / 16.0;
            let b = ir_bound(&ch, r, 4, BoundOptions::default()).unwrap();
            let ef = feedback_exponent(&ch, r).unwrap();
            assert!((b.value - ef).abs() < 1e-12, "r={r}");
        }
    }

    #[test]
    fn ir_bound_monotone_in_deadline() {
        for l in [2u32, 3, 4, 8] {
            let a = ir_lower_bound(&bsc15(), 0.15, l).unwrap();
            let b = ir_lower_bound(&bsc15(), 0.15, l + 1).unwrap();
            assert!(b >= a - 1e-10, "L={l}");
        }
    }

    #[test]
    fn analytic_model_interior_point() {
        let ch = Channel::vnc(1.0).unwrap();
        let b = md_bounds(&ch, 0.12, 2, BoundOptions::default()).unwrap();
        assert!((b.lower - 0.58805).abs() < 1e-9, "{}", b.lower);
        assert!((b.e1_max - 0.20805).abs() < 1e-9);
    }

    #[test]
    fn gaussian_interior_point() {
        let ch = Channel::awgn(10f64.powf(0.3)).unwrap();
        let b = md_bounds(&ch, 0.3, 2, BoundOptions::default()).unwrap();
        assert!((b.lower - 0.141920814709).abs() < 1e-7, "{}", b.lower);
        assert!((b.e1_max - 0.0526342984771).abs() < 1e-7);
    }

    #[test]
    fn limit_check_approaches_feedback_from_below() {
        let ef = feedback_exponent(&bsc15(), 0.2).unwrap();
        let v = md_limit_check(&bsc15(), 0.2, 1000).unwrap();
        assert!(v < ef);
        // Frozen deficit at L=1000 from the oracle run.
        assert!(((ef - v) - 0.00694516844285).abs() < 1e-5, "{}", ef - v);
        assert!(md_limit_check(&bsc15(), 0.2, 99).is_err());
    }

    #[test]
    fn lemma1_values() {
        let b = lemma1_bound(0.15).unwrap();
        assert_eq!(b.l, 4);
        assert!((b.ratio - 3.93629336658).abs() < 1e-10);
        assert!(!b.loose);
        for eps in [0.05, 0.1, 0.2, 0.3, 0.4, 0.45, 0.5] {
            assert_eq!(lemma1_bound(eps).unwrap().l, 4, "eps={eps}");
        }
        let tiny = lemma1_bound(0.001).unwrap();
        assert_eq!(tiny.l, 6);
        assert!(tiny.loose);
        assert!(lemma1_bound(0.0).is_err());
        assert!(lemma1_bound(0.6).is_err());
    }

    #[test]
    fn l_req_values() {
        assert_eq!(l_req(&bsc15()).unwrap(), 4);
        assert_eq!(l_req(&Channel::bsc(0.01).unwrap()).unwrap(), 3);
        assert_eq!(l_req(&Channel::vnc(1.0).unwrap()).unwrap(), 4);
        // Without expurgation the binary table is unchanged at 0.15.
        let plain = l_req_report(&bsc15(), NO_EXPURG).unwrap();
        assert_eq!(plain.l, 4);
    }

    #[test]
    fn deadline_validation() {
        assert!(md_lower_bound(&bsc15(), 0.1, 1).is_err());
        assert!(md_upper_bound(&bsc15(), 0.1, 0).is_err());
        assert!(ir_lower_bound(&bsc15(), 0.1, 1).is_err());
        assert!(md_lower_bound(&bsc15(), 0.5, 2).is_err());
    }
}
