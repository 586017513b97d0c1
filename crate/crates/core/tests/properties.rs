//! Cross-module invariants: ties between the closed analytic models, the
//! generic optimizers, the deadline machinery, and the simulator that no
//! single module can check on its own.

use arq_exponents::analytic_models::{bsc_zero_rate, vnc_ef, vnc_er, vnc_esp, vnc_ir_bound};
use arq_exponents::deadline::base_exponent;
use arq_exponents::{
    capacity, compute_curve, e1, estimate_exponent, feedback_exponent, ir_bound, ir_lower_bound,
    l_req_report, md_bounds, md_lower_bound, optimal_threshold, random_coding_exponent, rate_grid,
    run, run_paired, sphere_packing_exponent, threshold_exponents, ArqConfig, BoundOptions,
    Channel, ExponentKind, ExponentEstimate, Scheme,
};

const LN2: f64 = std::f64::consts::LN_2;

fn bsc15() -> Channel {
    Channel::bsc(0.15).unwrap()
}

// ---------------------------------------------------------------------------
// Analytic model vs generic dispatch.
// ---------------------------------------------------------------------------

/// The generic channel machinery must reproduce the closed very-noisy-channel
/// algebra through every exponent family it dispatches.
#[test]
fn vnc_dispatch_matches_closed_forms() {
    let c = 0.7;
    let ch = Channel::vnc(c).unwrap();
    let opts = BoundOptions::default();
    for i in 0..=32 {
        let r = c * i as f64 / 32.0;
        let er = random_coding_exponent(&ch, r).unwrap().value;
        assert!((er - vnc_er(r, c).unwrap()).abs() < 1e-10, "er at {r}");
        let esp = sphere_packing_exponent(&ch, r).unwrap().value;
        assert!((esp - vnc_esp(r, c).unwrap()).abs() < 1e-10, "esp at {r}");
        let ef = feedback_exponent(&ch, r).unwrap();
        assert!((ef - vnc_ef(r, c).unwrap()).abs() < 1e-9, "ef at {r}");
        for l in [2, 4] {
            let ir = ir_bound(&ch, r, l, opts).unwrap();
            assert!(
                (ir.value - vnc_ir_bound(r, c, l).unwrap()).abs() < 1e-9,
                "ir at {r}, L={l}"
            );
            let b = md_bounds(&ch, r, l, opts).unwrap();
            assert!((b.upper - l as f64 * esp).abs() < 1e-10, "upper at {r}, L={l}");
        }
    }
}

/// Zero-rate closed forms against the full optimizers.
#[test]
fn bsc_zero_rate_matches_optimizers() {
    for eps in [0.05, 0.15, 0.3] {
        let ch = Channel::bsc(eps).unwrap();
        let (er0, ef0) = bsc_zero_rate(eps).unwrap();
        let er = random_coding_exponent(&ch, 0.0).unwrap().value;
        let ef = feedback_exponent(&ch, 0.0).unwrap();
        assert!((er - er0).abs() < 2e-3, "eps={eps}: {er} vs {er0}");
        assert!((ef - ef0).abs() < 2e-3, "eps={eps}: {ef} vs {ef0}");
        // The zero-rate endpoints go through analytic limits, so the real
        // agreement is far tighter than the guaranteed envelope.
        assert!((er - er0).abs() < 1e-9 && (ef - ef0).abs() < 1e-9);
    }
}

// ---------------------------------------------------------------------------
// Exponent-family orderings and identities.
// ---------------------------------------------------------------------------

/// `E_F >= E_sp >= E_r` pointwise, and all vanish at capacity.
#[test]
fn family_ordering_chain() {
    for ch in [bsc15(), Channel::awgn(10f64.powf(0.3)).unwrap()] {
        let c = capacity(&ch);
        for i in 0..=16 {
            let r = c * i as f64 / 16.0;
            let er = random_coding_exponent(&ch, r).unwrap().value;
            let esp = sphere_packing_exponent(&ch, r).unwrap().value;
            let ef = feedback_exponent(&ch, r).unwrap();
            assert!(esp >= er - 1e-9, "esp >= er at {r}");
            assert!(ef >= esp - 1e-9, "ef >= esp at {r}");
        }
        assert!(feedback_exponent(&ch, c).unwrap() < 1e-6);
        assert!(random_coding_exponent(&ch, c).unwrap().value < 1e-9);
    }
}

/// The undetected-error exponent is the erasure exponent shifted by the
/// threshold, across branches.
#[test]
fn e2_is_e1_plus_threshold() {
    let ch = bsc15();
    for (r, t) in [(0.0, 0.0), (0.05, 0.02), (0.1, 0.05), (0.2, 0.15), (0.25, 0.3)] {
        let p = threshold_exponents(&ch, r, t).unwrap();
        assert_eq!(p.e2, p.e1 + t, "r={r}, t={t}");
    }
}

/// At zero threshold the erasure decoder loses nothing: `E_1(R, 0)` equals
/// the per-round base exponent `max(E_r, E_ex)`.
#[test]
fn zero_threshold_matches_base_exponent() {
    let ch = bsc15();
    let opts = BoundOptions::default();
    for r in [0.0, 0.02, 0.05, 0.1, 0.2] {
        let e = e1(&ch, r, 0.0).unwrap();
        let (base, _) = base_exponent(&ch, r, opts).unwrap();
        assert!((e - base).abs() < 1e-7, "r={r}: {e} vs {base}");
    }
}

/// The erasure exponent vanishes exactly where the threshold reaches the
/// feedback exponent.
#[test]
fn e1_vanishes_at_feedback_threshold() {
    let ch = bsc15();
    for r in [0.05, 0.1, 0.2] {
        let ef = feedback_exponent(&ch, r).unwrap();
        let at = e1(&ch, r, ef).unwrap();
        assert!(at.abs() < 1e-6, "r={r}: e1 = {at}");
        // Strictly positive just below (the approach is corner-flat, so the
        // magnitude is small), zero at and beyond.
        assert!(e1(&ch, r, 0.9 * ef).unwrap() > 1e-6);
        assert_eq!(e1(&ch, r, 1.5 * ef).unwrap(), 0.0);
    }
}

/// `E_1` is nonincreasing in the threshold at fixed rate.
#[test]
fn e1_monotone_in_threshold() {
    let ch = bsc15();
    let mut prev = f64::INFINITY;
    for i in 0..=12 {
        let t = 0.05 * i as f64;
        let v = e1(&ch, 0.1, t).unwrap();
        assert!(v <= prev + 1e-12, "t={t}");
        prev = v;
    }
}

// ---------------------------------------------------------------------------
// Deadline machinery.
// ---------------------------------------------------------------------------

/// Fixed point of the optimal threshold: re-evaluating the erasure exponent
/// at `T*` reproduces the inner maximum, on every channel family.
#[test]
fn threshold_fixed_point_holds() {
    let opts = BoundOptions::default();
    let cases = [
        (bsc15(), 0.1, 4u32),
        (bsc15(), 0.02, 3),
        (Channel::vnc(1.0).unwrap(), 0.3, 2),
        (Channel::awgn(10f64.powf(0.3)).unwrap(), 0.25, 3),
    ];
    for (ch, r, l) in cases {
        let b = md_bounds(&ch, r, l, opts).unwrap();
        assert!(
            (b.e1_at_tstar - b.e1_max).abs() < 1e-6,
            "residual {} at r={r}, L={l}",
            (b.e1_at_tstar - b.e1_max).abs()
        );
        let t = optimal_threshold(&ch, r, l).unwrap();
        assert!((t - b.t_star).abs() < 1e-12);
        // T* decomposes as base + (L-2) E1max, and the lower bound adds one
        // more E1max on top.
        assert!((b.t_star - (b.base + (l - 2) as f64 * b.e1_max)).abs() < 1e-12);
        assert!((b.lower - (b.t_star + b.e1_max)).abs() < 1e-12);
    }
}

/// Both deadline bounds are nondecreasing in `L` at fixed rate.
#[test]
fn bounds_monotone_in_deadline() {
    let ch = bsc15();
    for r in [0.05, 0.1, 0.2] {
        let mut prev_md = 0.0;
        let mut prev_ir = 0.0;
        for l in [2, 3, 4, 6, 10, 20] {
            let md = md_lower_bound(&ch, r, l).unwrap();
            let ir = ir_lower_bound(&ch, r, l).unwrap();
            assert!(md >= prev_md - 1e-9, "md at r={r}, L={l}");
            assert!(ir >= prev_ir - 1e-9, "ir at r={r}, L={l}");
            prev_md = md;
            prev_ir = ir;
        }
        // Both stay below the feedback exponent they approach.
        let ef = feedback_exponent(&ch, r).unwrap();
        assert!(prev_md < ef && prev_ir <= ef + 1e-9);
    }
}

/// Minimality of the accepted deadline: at `L_req` the retransmission arm
/// covers the feedback exponent everywhere, at `L_req - 1` it does not.
#[test]
fn l_req_is_minimal_for_bsc15() {
    let ch = bsc15();
    let opts = BoundOptions::default();
    let report = l_req_report(&ch, opts).unwrap();
    assert_eq!(report.l, 4);
    assert!(report.worst_margin >= -1e-6);
    // Witness for L = 3: mid rates where 3 E_r(R/3) dips below E_F(R).
    let c = capacity(&ch);
    let mut worst = f64::INFINITY;
    for i in 1..128 {
        let r = c * i as f64 / 128.0;
        let (base, _) = base_exponent(&ch, r / 3.0, opts).unwrap();
        let margin = 3.0 * base - feedback_exponent(&ch, r).unwrap();
        worst = worst.min(margin);
    }
    assert!(worst < -1e-6, "L=3 margin {worst}");
}

/// At and beyond the minimum deadline the retransmission bound sits on the
/// feedback exponent at every grid rate (the feedback arm attains the min).
#[test]
fn ir_bound_meets_feedback_at_l_req() {
    let ch = bsc15();
    let opts = BoundOptions::default();
    let c = capacity(&ch);
    for i in 0..=32 {
        let r = c * i as f64 / 32.0;
        let b = ir_bound(&ch, r, 4, opts).unwrap();
        assert!((b.value - b.feedback_arm).abs() <= 1e-6, "r={r}");
        assert!(b.coding_arm >= b.feedback_arm - 1e-6, "r={r}");
    }
}

/// Disabling the expurgated base weakens (or keeps) every low-rate bound and
/// never helps.
#[test]
fn expurgated_flag_only_strengthens() {
    let ch = bsc15();
    let on = BoundOptions { expurgated_base: true };
    let off = BoundOptions { expurgated_base: false };
    for r in [0.0, 0.02, 0.05, 0.1, 0.2] {
        let md_on = md_bounds(&ch, r, 4, on).unwrap().lower;
        let md_off = md_bounds(&ch, r, 4, off).unwrap().lower;
        assert!(md_on >= md_off - 1e-9, "md at r={r}");
        let ir_on = ir_bound(&ch, r, 2, on).unwrap().value;
        let ir_off = ir_bound(&ch, r, 2, off).unwrap().value;
        assert!(ir_on >= ir_off - 1e-9, "ir at r={r}");
    }
    // Above the critical rate the flag changes nothing.
    let b_on = md_bounds(&ch, 0.2, 4, on).unwrap();
    let b_off = md_bounds(&ch, 0.2, 4, off).unwrap();
    assert!((b_on.lower - b_off.lower).abs() < 1e-9);
}

/// Curve evaluation is a transparent wrapper: column values equal direct
/// calls at the same rates.
#[test]
fn curve_columns_match_direct_evaluation() {
    let ch = bsc15();
    let opts = BoundOptions::default();
    let kinds = [
        ExponentKind::RandomCoding,
        ExponentKind::Feedback,
        ExponentKind::MdLower,
        ExponentKind::IrLower,
    ];
    let rates = [0.0, 0.07, 0.19];
    let curve = compute_curve(&ch, &kinds, 3, opts, &rates).unwrap();
    for (i, &r) in rates.iter().enumerate() {
        let p = &curve.points[i];
        assert_eq!(p.values[0], random_coding_exponent(&ch, r).unwrap().value);
        assert_eq!(p.values[1], feedback_exponent(&ch, r).unwrap());
        assert_eq!(p.values[2], md_bounds(&ch, r, 3, opts).unwrap().lower);
        assert_eq!(p.values[3], ir_bound(&ch, r, 3, opts).unwrap().value);
    }
    // Grid helper covers [0, C] inclusively.
    let g = rate_grid(capacity(&ch), 64);
    assert_eq!(g.len(), 64);
    assert_eq!(g[0], 0.0);
    assert!((g[63] - capacity(&ch)).abs() < 1e-15);
}

// ---------------------------------------------------------------------------
// Simulator against the bound machinery and its own bookkeeping.
// ---------------------------------------------------------------------------

/// Error-rich paired scenario: incremental redundancy strictly beats
/// memoryless decoding, and every report identity holds.
#[test]
fn paired_simulation_bookkeeping_and_ordering() {
    let cfg = ArqConfig {
        scheme: Scheme::Memoryless,
        epsilon: 0.15,
        n: 24,
        num_messages: 256,
        threshold: 0.08,
        deadline: 3,
        trials: 30_000,
        seed: 5,
    };
    let (md, ir, cmp) = run_paired(&cfg).unwrap();
    for r in [&md, &ir] {
        // Every trial decides exactly once.
        let decided: u64 = r.decided_per_round.iter().sum();
        assert_eq!(decided, r.trials);
        // Undecided-after-round counts match the decision counts.
        let mut undecided = r.trials;
        for (k, &e) in r.erasures_per_round.iter().enumerate() {
            undecided -= r.decided_per_round[k];
            assert_eq!(e, undecided, "round {k}");
        }
        // Decisions split into correct accepts and errors.
        assert_eq!(r.accepted_correct + r.total_errors(), r.trials);
        // Delay accounting is the erasure-mass sum, exactly.
        let mass: u64 = r.trials + r.erasures_per_round.iter().sum::<u64>();
        let expect = cfg.n as f64 * mass as f64 / r.trials as f64;
        assert!((r.avg_delay - expect).abs() < 1e-9 * expect);
        assert!((r.throughput - (256f64).ln() / r.avg_delay).abs() < 1e-12);
    }
    // Round-1 outcomes are literally shared, so the paired comparison is on
    // rounds 2+ only; incremental redundancy accumulates evidence and wins.
    assert_eq!(md.errors_per_round[0], ir.errors_per_round[0]);
    assert!(ir.total_errors() < md.total_errors());
    assert!(cmp.ir_not_worse_95());
    assert_eq!(cmp.md_errors, md.total_errors());
    assert_eq!(cmp.ir_errors, ir.total_errors());
    // Enough events for an exponent estimate, and the interval brackets it.
    match estimate_exponent(&md) {
        ExponentEstimate::Estimate { value, ci_low, ci_high, events } => {
            assert!(events >= 20 && value > 0.0);
            assert!(ci_low <= value && value <= ci_high);
        }
        ExponentEstimate::InsufficientEvents { .. } => panic!("expected an estimate"),
    }
}

/// The empirical erasure rate sits near the theory it simulates: at a
/// threshold below the feedback exponent the round-1 erasure probability
/// decays with `N`, and the observed rate is inside the interval predicted
/// by three runs of increasing block length.
#[test]
fn erasure_rate_decays_with_block_length() {
    let mut prev = f64::INFINITY;
    for n in [40, 80, 160] {
        let cfg = ArqConfig {
            scheme: Scheme::Memoryless,
            epsilon: 0.15,
            n,
            num_messages: 16,
            threshold: 0.35,
            deadline: 2,
            trials: 20_000,
            seed: 31,
        };
        let r = run(&cfg).unwrap();
        let rate = r.erasures_per_round[0] as f64 / r.trials as f64;
        assert!(rate < prev, "N={n}: {rate} vs {prev}");
        prev = rate;
    }
}

/// Rates and units round-trip: a bits grid maps onto the nats machinery and
/// back without drift.
#[test]
fn bits_nats_round_trip() {
    let c_nats = capacity(&bsc15());
    let c_bits = c_nats / LN2;
    assert!((c_bits * LN2 - c_nats).abs() < 1e-15);
    for r_bits in [0.0, 0.1, 0.2, 0.39] {
        let r = r_bits * LN2;
        assert!((r / LN2 - r_bits).abs() < 1e-15);
    }
}
