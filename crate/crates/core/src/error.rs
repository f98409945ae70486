use std::fmt;

use serde::{Deserialize, Serialize};

/// A real interval with optionally open ends and an optionally unbounded
/// upper end. Used for certified step-size ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub lo_closed: bool,
    /// `None` means unbounded above.
    pub hi: Option<f64>,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, lo_closed: false, hi: Some(hi), hi_closed: false }
    }

    pub fn closed_open(lo: f64, hi: f64) -> Self {
        Interval { lo, lo_closed: true, hi: Some(hi), hi_closed: false }
    }

    pub fn open_unbounded(lo: f64) -> Self {
        Interval { lo, lo_closed: false, hi: None, hi_closed: false }
    }

    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = match self.hi {
            None => true,
            Some(hi) if self.hi_closed => x <= hi,
            Some(hi) => x < hi,
        };
        above && below
    }

    pub fn is_empty(&self) -> bool {
        match self.hi {
            None => false,
            Some(hi) if self.lo_closed && self.hi_closed => hi < self.lo,
            Some(hi) => hi <= self.lo,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let left = if self.lo_closed { '[' } else { ']' };
        match self.hi {
            None => write!(f, "{left}{}, +inf[", self.lo),
            Some(hi) => {
                let right = if self.hi_closed { ']' } else { '[' };
                write!(f, "{left}{}, {hi}{right}", self.lo)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A class or algorithm parameter lies outside its defining range.
    #[error("{name} = {value} is out of range: requires {bound}")]
    Domain { name: &'static str, value: f64, bound: &'static str },

    /// A hypothesis of a composition or convergence theorem is not met.
    #[error("{theorem}: hypothesis `{condition}` fails")]
    Hypothesis { theorem: &'static str, condition: &'static str },

    #[error("step size {gamma} is outside the certified range {range}")]
    StepRange { gamma: f64, range: Interval },

    #[error("resolvent not single-valued: gamma * rho = {value} <= -1")]
    NotSingleValued { value: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("not in family {family} at sampled pairs")]
    NotInFamily { family: &'static str },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, bound: &'static str) -> Self {
        Error::Domain { name, value, bound }
    }

    pub(crate) fn hypothesis(theorem: &'static str, condition: &'static str) -> Self {
        Error::Hypothesis { theorem, condition }
    }

    /// True for errors raised because a certifying hypothesis or range check
    /// rejected the input (as opposed to malformed input or numerics).
    pub fn is_guard_rejection(&self) -> bool {
        matches!(
            self,
            Error::Hypothesis { .. }
                | Error::StepRange { .. }
                | Error::NotSingleValued { .. }
                | Error::Domain { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_membership_respects_endpoints() {
        let i = Interval::closed_open(0.4, 2.0 / 3.0);
        assert!(i.contains(0.4));
        assert!(i.contains(0.5));
        assert!(!i.contains(2.0 / 3.0));
        let o = Interval::open(0.0, 0.25);
        assert!(!o.contains(0.0));
        assert!(!o.contains(0.25));
        let u = Interval::open_unbounded(0.0);
        assert!(u.contains(1e300));
        assert!(!u.contains(f64::INFINITY));
    }

    #[test]
    fn interval_display() {
        assert_eq!(Interval::open(0.0, 0.25).to_string(), "]0, 0.25[");
        assert_eq!(Interval::open_unbounded(0.0).to_string(), "]0, +inf[");
    }
}
