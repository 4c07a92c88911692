use thiserror::Error;

/// Errors produced by the pricing engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("life table parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid life table: {0}")]
    InvalidTable(String),

    #[error("age {age} outside life table range [{min}, {max}]")]
    AgeOutOfRange { age: f64, min: f64, max: f64 },

    #[error("index {index} out of range (valid {min}..={max})")]
    IndexOutOfRange { index: usize, min: usize, max: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("withdrawal {gamma} exceeds guarantee balance {balance}")]
    ExceedsGuarantee { gamma: f64, balance: f64 },

    #[error("withdrawal must be non-negative, got {0}")]
    NegativeWithdrawal(f64),

    #[error("contract has no death benefit")]
    NoDeathBenefit,

    #[error("quadrature order {0} outside 1..=64")]
    QuadratureOrder(usize),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("price is not non-increasing in the fee: f({lo_alpha}) = {lo_value}, f({hi_alpha}) = {hi_value}")]
    NonMonotoneFee {
        lo_alpha: f64,
        lo_value: f64,
        hi_alpha: f64,
        hi_value: f64,
    },

    #[error("inconsistent fee: upfront charge {0} is negative")]
    InconsistentFee(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
