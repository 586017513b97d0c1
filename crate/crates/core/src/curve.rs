//! Exponent curves over a rate grid.
//!
//! One channel, one deadline, any subset of the supported exponent families
//! evaluated over a shared grid of rates in nats. Points are independent and
//! evaluated in parallel; each carries the value and the qualifier flags of
//! the optimization that produced it.

use crate::channels::{capacity, Channel};
use crate::deadline::{ir_bound, md_bounds, BoundOptions};
use crate::erasure_exponents::feedback_point;
use crate::error::Result;
use crate::gallager::{
    expurgated_exponent, random_coding_exponent, sphere_packing_exponent, PointFlags,
};
use rayon::prelude::*;

/// Exponent families a curve can contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExponentKind {
    /// Random-coding exponent, no feedback, single transmission.
    RandomCoding,
    /// Sphere-packing converse.
    SpherePacking,
    /// Expurgated exponent.
    Expurgated,
    /// Erasure-decoding limit with unbounded retransmissions.
    Feedback,
    /// Memoryless-decoding achievability under the deadline.
    MdLower,
    /// Deadline converse (sphere packing scaled by the deadline).
    MdUpper,
    /// Incremental-redundancy achievability under the deadline.
    IrLower,
    /// Single-shot reference (equals the random-coding exponent).
    Ml,
}

impl ExponentKind {
    pub const ALL: [ExponentKind; 8] = [
        ExponentKind::RandomCoding,
        ExponentKind::SpherePacking,
        ExponentKind::Expurgated,
        ExponentKind::Feedback,
        ExponentKind::MdLower,
        ExponentKind::MdUpper,
        ExponentKind::IrLower,
        ExponentKind::Ml,
    ];

    /// Stable column label.
    pub fn label(self) -> &'static str {
        match self {
            ExponentKind::RandomCoding => "e_r",
            ExponentKind::SpherePacking => "e_sp",
            ExponentKind::Expurgated => "e_ex",
            ExponentKind::Feedback => "e_f",
            ExponentKind::MdLower => "md_lower",
            ExponentKind::MdUpper => "md_upper",
            ExponentKind::IrLower => "ir_lower",
            ExponentKind::Ml => "ml",
        }
    }

    /// Parse a column label.
    pub fn parse(s: &str) -> Option<ExponentKind> {
        Self::ALL.iter().copied().find(|k| k.label() == s)
    }

    /// Whether the family depends on the deadline.
    pub fn needs_deadline(self) -> bool {
        matches!(
            self,
            ExponentKind::MdLower | ExponentKind::MdUpper | ExponentKind::IrLower
        )
    }
}

/// One rate sample: values, flags, and winner annotations are index-aligned
/// with the requested kind list.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub rate_nats: f64,
    pub values: Vec<f64>,
    pub flags: Vec<PointFlags>,
    /// Which inner form won, where the family has several ("corner" for the
    /// edge-extrapolated feedback form, "arm=..." for the retransmission
    /// bound); empty otherwise.
    pub annotations: Vec<String>,
}

/// A full evaluated curve.
#[derive(Debug, Clone)]
pub struct Curve {
    pub kinds: Vec<ExponentKind>,
    pub deadline: u32,
    pub points: Vec<CurvePoint>,
}

/// Inclusive uniform grid of `count >= 2` rates over `[0, high]`.
pub fn rate_grid(high: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    let step = high / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i + 1 == count {
                high
            } else {
                step * i as f64
            }
        })
        .collect()
}

fn eval_point(
    channel: &Channel,
    kinds: &[ExponentKind],
    l: u32,
    opts: BoundOptions,
    rate: f64,
) -> Result<CurvePoint> {
    let mut values = Vec::with_capacity(kinds.len());
    let mut flags = Vec::with_capacity(kinds.len());
    let mut annotations = Vec::with_capacity(kinds.len());
    // The two deadline bounds share one inner optimization; compute once.
    let md = if kinds
        .iter()
        .any(|k| matches!(k, ExponentKind::MdLower | ExponentKind::MdUpper))
    {
        Some(md_bounds(channel, rate, l, opts)?)
    } else {
        None
    };
    for &kind in kinds {
        let (v, f, note) = match kind {
            ExponentKind::RandomCoding | ExponentKind::Ml => {
                let p = random_coding_exponent(channel, rate)?;
                (p.value, p.flags, String::new())
            }
            ExponentKind::SpherePacking => {
                let p = sphere_packing_exponent(channel, rate)?;
                (p.value, p.flags, String::new())
            }
            ExponentKind::Expurgated => {
                let p = expurgated_exponent(channel, rate)?;
                (p.value, p.flags, String::new())
            }
            ExponentKind::Feedback => {
                let p = feedback_point(channel, rate)?;
                let note = if p.corner { "corner".to_string() } else { String::new() };
                (p.value, p.flags, note)
            }
            ExponentKind::MdLower => {
                let b = md.as_ref().unwrap();
                (b.lower, b.flags, String::new())
            }
            ExponentKind::MdUpper => {
                let b = md.as_ref().unwrap();
                (b.upper, b.flags, String::new())
            }
            ExponentKind::IrLower => {
                let b = ir_bound(channel, rate, l, opts)?;
                let note = match b.arm {
                    crate::deadline::IrArm::Feedback => "arm=feedback".to_string(),
                    crate::deadline::IrArm::Coding => "arm=coding".to_string(),
                };
                (b.value, b.flags, note)
            }
        };
        debug_assert!(!v.is_nan());
        values.push(v);
        flags.push(f);
        annotations.push(note);
    }
    Ok(CurvePoint {
        rate_nats: rate,
        values,
        flags,
        annotations,
    })
}

/// Evaluate the requested exponent families at every rate in `rates`.
///
/// Rates are in nats per symbol and must lie in `[0, C]`. `l` is ignored by
/// the deadline-free families.
pub fn compute_curve(
    channel: &Channel,
    kinds: &[ExponentKind],
    l: u32,
    opts: BoundOptions,
    rates: &[f64],
) -> Result<Curve> {
    let mut points: Vec<(usize, CurvePoint)> = rates
        .par_iter()
        .enumerate()
        .map(|(i, &r)| eval_point(channel, kinds, l, opts, r).map(|p| (i, p)))
        .collect::<Result<_>>()?;
    points.sort_by_key(|&(i, _)| i);
    Ok(Curve {
        kinds: kinds.to_vec(),
        deadline: l,
        points: points.into_iter().map(|(_, p)| p).collect(),
    })
}

/// Evaluate over the default inclusive grid of `count` points on `[0, C]`.
pub fn compute_curve_on_capacity_grid(
    channel: &Channel,
    kinds: &[ExponentKind],
    l: u32,
    opts: BoundOptions,
    count: usize,
) -> Result<Curve> {
    let c = capacity(channel);
    compute_curve(channel, kinds, l, opts, &rate_grid(c, count))
}

impl Curve {
    /// Column index of a kind, if present.
    pub fn column(&self, kind: ExponentKind) -> Option<usize> {
        self.kinds.iter().position(|&k| k == kind)
    }

    /// Values of one column, in grid order.
    pub fn values(&self, kind: ExponentKind) -> Option<Vec<f64>> {
        let c = self.column(kind)?;
        Some(self.points.iter().map(|p| p.values[c]).collect())
    }

    /// First grid rate where `lhs < rhs - margin`, scanning upward.
    pub fn first_crossing(
        &self,
        lhs: ExponentKind,
        rhs: ExponentKind,
        margin: f64,
    ) -> Option<f64> {
        let a = self.column(lhs)?;
        let b = self.column(rhs)?;
        self.points
            .iter()
            .find(|p| p.values[a] < p.values[b] - margin)
            .map(|p| p.rate_nats)
    }
}
