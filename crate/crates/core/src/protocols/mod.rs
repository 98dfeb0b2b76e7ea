//! Channel-access policies and their analytic average-AoI expressions.
//!
//! Two policies are supported. Under AIRA every device transmits in each
//! slot with the same fixed probability. Under threshold ADRA a device stays
//! silent while its age is below a threshold and transmits with a fixed
//! probability once the threshold is reached.

mod analytic;
mod markov;
pub mod optimize;

use std::fmt;

use thiserror::Error;

use crate::age::Age;
use crate::real::{is_probability, Real};

pub use analytic::{
    adra_average_aoi, adra_optimize_cap, adra_success_probability, aira_average_aoi,
    aira_optimal_cap, AnalyticParams,
};
pub use markov::{
    exact_average_aoi_markov, MarkovOracle, MarkovSolution, OracleError, MAX_ORACLE_DEVICES,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("average AoI diverges: per-slot success probability is zero (n={n}, p={p})")]
    Divergent { n: u32, p: f64 },
    #[error("fixed point did not converge after {iterations} iterations (last={last}, residual={residual:e})")]
    NonConvergence {
        last: f64,
        residual: f64,
        iterations: usize,
    },
}

/// Fixed channel-access probability, independent of age.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiraPolicy<R> {
    p: R,
}

impl<R: Real> AiraPolicy<R> {
    pub fn new(p: R) -> Result<Self, AnalyticError> {
        check_cap(p)?;
        Ok(AiraPolicy { p })
    }

    pub fn p(&self) -> R {
        self.p
    }
}

/// Threshold policy: silent while `age < delta`, transmit with `p` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdraPolicy<R> {
    delta: u64,
    p: R,
}

impl<R: Real> AdraPolicy<R> {
    pub fn new(delta: u64, p: R) -> Result<Self, AnalyticError> {
        if delta == 0 {
            return Err(AnalyticError::InvalidParameter(
                "age threshold must be at least 1".into(),
            ));
        }
        check_cap(p)?;
        Ok(AdraPolicy { delta, p })
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn p(&self) -> R {
        self.p
    }
}

fn check_cap<R: Real>(p: R) -> Result<(), AnalyticError> {
    if p > R::zero() && is_probability(p) {
        Ok(())
    } else {
        Err(AnalyticError::InvalidParameter(format!(
            "channel access probability must lie in (0, 1], got {p}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy<R> {
    Aira(AiraPolicy<R>),
    Adra(AdraPolicy<R>),
}

impl<R: Real> Policy<R> {
    pub fn aira(p: R) -> Result<Self, AnalyticError> {
        AiraPolicy::new(p).map(Policy::Aira)
    }

    pub fn adra(delta: u64, p: R) -> Result<Self, AnalyticError> {
        AdraPolicy::new(delta, p).map(Policy::Adra)
    }

    /// The CAP applied once a device is eligible.
    pub fn cap(&self) -> R {
        match self {
            Policy::Aira(a) => a.p,
            Policy::Adra(a) => a.p,
        }
    }

    /// Age threshold; AIRA behaves like a threshold of one.
    pub fn threshold(&self) -> u64 {
        match self {
            Policy::Aira(_) => 1,
            Policy::Adra(a) => a.delta,
        }
    }

    /// Entry `p_l` of the age-dependent CAP vector.
    pub fn access_probability(&self, age: u64) -> R {
        if age >= self.threshold() {
            self.cap()
        } else {
            R::zero()
        }
    }

    /// Transmit decision for one slot given a uniform draw in `[0, 1)`.
    pub fn decide(&self, age: Age, draw: R) -> bool {
        match self {
            Policy::Aira(a) => draw < a.p,
            Policy::Adra(a) => age.get() >= a.delta && draw < a.p,
        }
    }

    pub fn protocol_name(&self) -> &'static str {
        match self {
            Policy::Aira(_) => "AIRA",
            Policy::Adra(_) => "ADRA",
        }
    }
}

impl<R: Real> fmt::Display for Policy<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Aira(a) => write!(f, "AIRA(p={})", a.p),
            Policy::Adra(a) => write!(f, "ADRA(delta={}, p={})", a.delta, a.p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn age(v: u64) -> Age {
        Age::new(v).unwrap()
    }

    #[test]
    fn adra_below_threshold_is_idle() {
        let policy = Policy::adra(5, 0.9).unwrap();
        assert!(!policy.decide(age(3), 0.0));
        assert!(policy.decide(age(5), 0.5));
        assert!(!policy.decide(age(5), 0.95));
    }

    #[test]
    fn aira_with_unit_cap_always_transmits() {
        let policy = Policy::aira(1.0f64).unwrap();
        for a in [1, 2, 50] {
            for draw in [0.0, 0.5, 0.999_999] {
                assert!(policy.decide(age(a), draw));
            }
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Policy::aira(0.0f64).is_err());
        assert!(Policy::aira(1.5f64).is_err());
        assert!(Policy::aira(f64::NAN).is_err());
        assert!(Policy::adra(0, 0.5f64).is_err());
        assert!(Policy::adra(3, -0.1f32).is_err());
    }

    #[test]
    fn cap_vector_matches_threshold() {
        let policy = Policy::adra(4, 0.25f64).unwrap();
        let vector: Vec<f64> = (1..=6).map(|l| policy.access_probability(l)).collect();
        assert_eq!(vector, vec![0.0, 0.0, 0.0, 0.25, 0.25, 0.25]);
        assert_eq!(Policy::aira(0.3f64).unwrap().access_probability(1), 0.3);
    }
}
