use thiserror::Error;

use crate::free_energy::FixedPoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mixture has no positive coefficient")]
    EmptyMixture,

    #[error("split ratio gamma = {0} is outside (0, 1)")]
    BadGamma(f64),

    #[error("coefficient beta_({p},{q}) = {beta} is negative or not finite")]
    NegativeCoefficient { p: u32, q: u32, beta: f64 },

    #[error("term degrees must satisfy p, q >= 1, got ({p},{q})")]
    BadDegree { p: u32, q: u32 },

    #[error("coefficient ({p},{q}) is listed more than once")]
    DuplicateTerm { p: u32, q: u32 },

    #[error("decay sum sum 2^(p+q) beta^2 = {sum} exceeds the cap {cap}")]
    DecayCapExceeded { sum: f64, cap: f64 },

    #[error("external field h{party} = {value} is not finite")]
    BadField { party: u8, value: f64 },

    #[error("alpha_{party} undefined: radicand {radicand} is negative (is xi(1,1) = 1?)")]
    AlphaUndefined { party: u8, radicand: f64 },

    #[error("alpha_{party} = 0: the lower bound needs both parties to have alpha > 0")]
    AlphaZero { party: u8 },

    #[error("point ({a}, {b}) is outside [0,1)^2")]
    Domain { a: f64, b: f64 },

    #[error("fixed-point iteration did not converge after {} iterations", .0.iterations)]
    NotConverged(Box<FixedPoint>),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("no function supplied for family index {index}")]
    MissingFamily { index: usize },

    #[error("K(t) does not change sign on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("matrix is not symmetric (max asymmetry {0})")]
    NonSymmetric(f64),

    #[error("tensor of log-size {log_size:.2} exceeds the budget {budget:.2}")]
    BudgetExceeded { log_size: f64, budget: f64 },

    #[error("operation requires h1 = h2 = 0")]
    NonzeroField,

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors that signal numeric non-convergence rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NotConverged(_) | Error::NoSignChange { .. })
    }
}
