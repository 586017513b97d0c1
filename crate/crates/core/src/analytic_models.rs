//! Closed-form exponents that bypass numerical optimization: the very-noisy
//! channel family and the binary-symmetric zero-rate constants.
//!
//! For a very noisy channel of capacity `C` (output distributions that are
//! tiny perturbations of a common center), the classical exponents collapse
//! to algebra in `(R, C)`:
//!
//! * random-coding: `E_r(R) = C/2 - R` on `[0, C/4]`, `(sqrt C - sqrt R)^2`
//!   on `[C/4, C]`;
//! * feedback (erasure-decoding limit): `E_F(R) = (C - R) + (sqrt C - sqrt R)^2`;
//! * the `L`-round retransmission bound `min(E_F(R), L * E_r(R/L))`.
//!
//! These forms also serve as exact oracles for the generic optimizers.

use crate::error::{Error, Result};

fn check_rate(r: f64, c: f64) -> Result<()> {
    if !(0.0..=c + 1e-15).contains(&r) || !r.is_finite() {
        return Err(Error::Domain(format!("rate {r} outside [0, {c}]")));
    }
    Ok(())
}

fn check_capacity(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("capacity must be positive, got {c}")));
    }
    Ok(())
}

/// Random-coding exponent of a very noisy channel with capacity `c`, in nats.
/// Piecewise with the branch boundary at `c/4`; the two branches agree there.
pub fn vnc_er(r: f64, c: f64) -> Result<f64> {
    check_capacity(c)?;
    check_rate(r, c)?;
    if r <= c / 4.0 {
        Ok(c / 2.0 - r)
    } else {
        Ok((c.sqrt() - r.sqrt()).powi(2))
    }
}

/// Sphere-packing exponent of a very noisy channel: `(sqrt C - sqrt R)^2` for
/// positive rates; the zero-rate supremum is `C` itself.
pub fn vnc_esp(r: f64, c: f64) -> Result<f64> {
    check_capacity(c)?;
    check_rate(r, c)?;
    if r <= 0.0 {
        Ok(c)
    } else {
        Ok((c.sqrt() - r.sqrt()).powi(2))
    }
}

/// Expurgated exponent of a very noisy channel: the pairwise-distance form
/// is `2 C s (1 - s)`, independent of its second parameter, so the
/// maximization collapses to `C/2 - R`.
pub fn vnc_eex(r: f64, c: f64) -> Result<f64> {
    check_capacity(c)?;
    check_rate(r, c)?;
    Ok(c / 2.0 - r)
}

/// Feedback exponent of a very noisy channel:
/// `E_F(R) = (C - R) + (sqrt C - sqrt R)^2`.
pub fn vnc_ef(r: f64, c: f64) -> Result<f64> {
    check_capacity(c)?;
    check_rate(r, c)?;
    Ok((c - r) + (c.sqrt() - r.sqrt()).powi(2))
}

/// `L`-round incremental-redundancy lower bound for a very noisy channel:
/// `min(E_F(R), L * E_r(R/L))`. At `L = 4` the second arm equals `2C - R`,
/// which never undercuts `E_F`, so the bound coincides with `E_F` exactly.
pub fn vnc_ir_bound(r: f64, c: f64, l: u32) -> Result<f64> {
    if l < 2 {
        return Err(Error::Domain(format!("deadline must be at least 2, got {l}")));
    }
    let ef = vnc_ef(r, c)?;
    let retr = l as f64 * vnc_er(r / l as f64, c)?;
    Ok(ef.min(retr))
}

/// Zero-rate constants of a binary symmetric channel with crossover `epsilon`:
/// `(E_r(0), E_F(0))` where
/// `E_r(0) = ln 2 - ln(1 + 2 sqrt(eps (1-eps)))` and
/// `E_F(0) = C - ln 2 - ln sqrt(eps (1-eps))`, with `C = ln 2 - H(eps)`.
/// The second form simplifies to `(1/2 - eps) ln((1-eps)/eps)`.
pub fn bsc_zero_rate(epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon > 0.0 && epsilon <= 0.5) || !epsilon.is_finite() {
        return Err(Error::Domain(format!(
            "crossover probability must lie in (0, 0.5], got {epsilon}"
        )));
    }
    let er0 = std::f64::consts::LN_2 - (1.0 + 2.0 * (epsilon * (1.0 - epsilon)).sqrt()).ln();
    let ef0 = if epsilon >= 0.5 {
        0.0
    } else {
        (0.5 - epsilon) * ((1.0 - epsilon) / epsilon).ln()
    };
    Ok((er0, ef0))
}
