//! Library-wide error type.

/// Errors raised by channel construction, exponent evaluation, and simulation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A channel model failed validation (bad matrix, out-of-range parameter, ...).
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    /// An input distribution failed validation.
    #[error("invalid input distribution: {0}")]
    InvalidDistribution(String),

    /// A function argument lies outside its mathematical domain.
    #[error("domain violation: {0}")]
    Domain(String),

    /// A simulator or curve configuration field is invalid.
    #[error("invalid configuration ({field}): {message}")]
    Config {
        field: &'static str,
        message: String,
    },

    /// The optimal-threshold fixed point `e1(R, T*) = E1max` failed its
    /// consistency tolerance; carries both values for diagnosis.
    #[error(
        "threshold fixed point inconsistent: e1(R,T*) = {e1_at_tstar} vs E1max = {e1_max} \
         (|diff| > {tolerance})"
    )]
    ThresholdFixedPoint {
        e1_at_tstar: f64,
        e1_max: f64,
        tolerance: f64,
    },

    /// The minimum-deadline search exhausted its limit without the
    /// retransmission bound covering the feedback exponent at every rate.
    #[error(
        "minimum deadline not found up to L = {l_max}: worst margin {worst_margin} nats \
         at rate {at_rate} nats"
    )]
    DeadlineNotFound {
        l_max: u32,
        worst_margin: f64,
        at_rate: f64,
    },

    /// File I/O failed (channel matrix loading, CSV output).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
