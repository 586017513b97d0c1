//! Error exponents for memoryless channels under ARQ with a hard deadline.
//!
//! Classical single-shot exponents (random coding, sphere packing,
//! expurgated), the erasure-decoding exponent family of threshold decoders
//! with unlimited feedback, and the two deadline-constrained retransmission
//! schemes: memoryless decoding (retransmit the same codeword, decode each
//! block alone) and incremental redundancy (extend the codeword each round).
//! A seeded Monte Carlo simulator of both schemes over a binary symmetric
//! channel closes the loop between the bounds and observable behaviour.
//!
//! All rates, thresholds, and exponents are in nats unless a function name
//! says otherwise. Every optimizer in the crate is deterministic, so every
//! public function is reproducible bit for bit across runs and thread
//! counts.

pub mod analytic_models;
pub mod channels;
pub mod curve;
pub mod deadline;
pub mod erasure_exponents;
pub mod error;
pub mod gallager;
pub mod optim;
pub mod simulator;

pub use channels::{
    binary_entropy, blahut_arimoto, capacity, make_bsc, make_dmc, AwgnParams, BscParams, Channel,
    Dmc, InputDistribution, VncParams,
};
pub use curve::{compute_curve, compute_curve_on_capacity_grid, rate_grid, Curve, CurvePoint, ExponentKind};
pub use deadline::{
    base_exponent, ir_bound, ir_lower_bound, l_req, l_req_report, lemma1_bound, md_bounds,
    md_limit_check, md_lower_bound, md_upper_bound, optimal_threshold, BoundOptions, IrArm,
    IrBound, LReqReport, Lemma1Bound, MdBounds,
};
pub use erasure_exponents::{
    e1, e2, feedback_exponent, feedback_point, threshold_exponents, Branch, FeedbackPoint,
    ThresholdPoint, S_MIN,
};
pub use error::{Error, Result};
pub use gallager::{
    critical_rate, e0_awgn, e0_gallager, e0_two_param, ex_two_param, expurgated_exponent,
    random_coding_exponent, sphere_packing_exponent, ArgMax, ExponentValue, PointFlags,
};
pub use simulator::{
    erasure_decode, estimate_exponent, round_homogeneity_statistic, run, run_ir_arq,
    run_memoryless_arq, run_paired, ArqConfig, DecodeKind, DecodeOutcome, ExponentEstimate,
    PairedComparison, Scheme, SimulationReport,
};
