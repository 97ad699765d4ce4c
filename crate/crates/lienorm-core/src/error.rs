use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Series with different numbers of degrees of freedom were combined.
    Dimension { left: usize, right: usize },
    /// An action derivative left a negative power of a square-root action.
    NonPolynomial { dof: usize },
    /// Argument outside the domain of a function (negative action, a <= 1, ...).
    Domain(String),
    /// Malformed argument (empty grid, bad index, ...).
    Argument(String),
    /// Exponent or wave number does not fit the packed key.
    Overflow(String),
    /// |k.omega| below tolerance in the homological equation.
    SmallDivisor { wave: Vec<i32>, divisor: f64 },
    /// A book-keeping rule produced a grade-0 part that is not omega.A.
    Rule(String),
    /// Iterative solver failed.
    Convergence(String),
    /// Nothing left to normalize at a step.
    NothingToNormalize,
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension { left, right } => {
                write!(f, "dimension mismatch: {left} vs {right} degrees of freedom")
            }
            Error::NonPolynomial { dof } => {
                write!(f, "non-polynomial result: negative sqrt-action exponent in dof {dof}")
            }
            Error::Domain(s) => write!(f, "domain error: {s}"),
            Error::Argument(s) => write!(f, "invalid argument: {s}"),
            Error::Overflow(s) => write!(f, "key overflow: {s}"),
            Error::SmallDivisor { wave, divisor } => {
                write!(f, "small divisor {divisor:e} for wave vector {wave:?}")
            }
            Error::Rule(s) => write!(f, "book-keeping rule error: {s}"),
            Error::Convergence(s) => write!(f, "no convergence: {s}"),
            Error::NothingToNormalize => write!(f, "nothing to normalize"),
        }
    }
}

impl core::error::Error for Error {}
