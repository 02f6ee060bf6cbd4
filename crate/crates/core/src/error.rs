use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Register size outside `1..=max`.
    Capacity { requested: usize, max: usize },
    WireOutOfRange { wire: usize, width: usize },
    DuplicateWire { wire: usize },
    /// A gate references a parameter slot the supplied vector does not have.
    MissingAngle { slot: usize, available: usize },
    SlotCount { kind: &'static str, expected: usize, got: usize },
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    Probability { name: &'static str, value: f64 },
    InvalidSlot { slot: usize, count: usize },
    NotBijection,
    Divisibility { what: &'static str, value: usize, divisor: usize },
    /// The forward cache was produced for a different parameter version.
    StaleCache { cached: u64, current: u64 },
    NonFinite { what: &'static str },
    InvalidArgument(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Capacity { requested, max } => {
                write!(f, "qubit count {requested} outside supported range 1..={max}")
            }
            Error::WireOutOfRange { wire, width } => {
                write!(f, "wire {wire} out of range for width {width}")
            }
            Error::DuplicateWire { wire } => write!(f, "wire {wire} used twice by one gate"),
            Error::MissingAngle { slot, available } => {
                write!(f, "parameter slot {slot} missing (only {available} supplied)")
            }
            Error::SlotCount { kind, expected, got } => {
                write!(f, "{kind} takes {expected} parameter slots, got {got}")
            }
            Error::DimensionMismatch { what, expected, got } => {
                write!(f, "{what}: expected length {expected}, got {got}")
            }
            Error::Probability { name, value } => {
                write!(f, "{name} = {value} is not a probability in [0, 1]")
            }
            Error::InvalidSlot { slot, count } => {
                write!(f, "slot {slot} invalid for {count} parameters")
            }
            Error::NotBijection => f.write_str("permutation is not a bijection"),
            Error::Divisibility { what, value, divisor } => {
                write!(f, "{what} = {value} is not divisible by {divisor}")
            }
            Error::StaleCache { cached, current } => write!(
                f,
                "forward cache is stale (cached version {cached}, model version {current})"
            ),
            Error::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Error::InvalidArgument(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for Error {}
