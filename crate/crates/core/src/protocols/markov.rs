//! Exact average AoI for very small networks.
//!
//! The joint age vector of all devices is a Markov chain. Ages at or above
//! a cap `A >= delta` are lumped into one state; since every such age has
//! the same access probability the lumped chain is still Markov. The mean
//! age is recovered without truncation error through the stationary
//! age-weighted measure `m_i(y) = E[age_i 1{X = y}]`, which satisfies
//!
//! ```text
//! m_i(y) = sum_x K0_i(x, y) (m_i(x) + pi(x)) + sum_x K1_i(x, y) pi(x)
//! ```
//!
//! where `K1_i` holds the transitions in which device `i` delivers and `K0_i`
//! the rest. `E[age_i] = sum_y m_i(y)`.

use thiserror::Error;

use crate::protocols::Policy;
use crate::real::Real;

pub const MAX_ORACLE_DEVICES: u32 = 3;

const DEFAULT_TOLERANCE: f64 = 1e-15;
const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("exact oracle supports 1..={MAX_ORACLE_DEVICES} devices, got {0}")]
    UnsupportedSize(u32),
    #[error("age cap {cap} is below the policy threshold {threshold}")]
    CapBelowThreshold { cap: u64, threshold: u64 },
    #[error(
        "{stage} did not reach tolerance: residual {residual:e} after {iterations} iterations"
    )]
    Accuracy {
        stage: &'static str,
        residual: f64,
        iterations: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSolution<R> {
    /// Network average AoI (mean over devices).
    pub average_aoi: R,
    pub per_device: Vec<R>,
    /// Size of the lumped state space, `cap^n`.
    pub states: usize,
    /// Stationary probability that some device sits in the lumped top state.
    pub cap_mass: R,
}

#[derive(Debug, Clone, Copy)]
pub struct MarkovOracle {
    age_cap: Option<u64>,
    tolerance: f64,
    max_iterations: usize,
}

impl Default for MarkovOracle {
    fn default() -> Self {
        MarkovOracle {
            age_cap: None,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

struct Transition<R> {
    from: usize,
    to: usize,
    prob: R,
    winner: Option<usize>,
}

impl MarkovOracle {
    /// Tracks ages individually up to `cap` instead of the policy threshold.
    /// The result does not depend on the cap as long as it is at least the
    /// threshold; larger caps only grow the state space.
    pub fn with_age_cap(mut self, cap: u64) -> Self {
        self.age_cap = Some(cap);
        self
    }

    pub fn with_max_iterations(mut self, iterations: usize) -> Self {
        self.max_iterations = iterations;
        self
    }

    pub fn solve<R: Real>(
        &self,
        n: u32,
        policy: &Policy<R>,
    ) -> Result<MarkovSolution<R>, OracleError> {
        if n == 0 || n > MAX_ORACLE_DEVICES {
            return Err(OracleError::UnsupportedSize(n));
        }
        let threshold = policy.threshold();
        let cap = self.age_cap.unwrap_or(threshold).max(1);
        if cap < threshold {
            return Err(OracleError::CapBelowThreshold { cap, threshold });
        }

        let n = n as usize;
        let cap_usize = cap as usize;
        let states = cap_usize.pow(n as u32);
        let decode = |mut index: usize| -> Vec<u64> {
            (0..n)
                .map(|_| {
                    let age = (index % cap_usize) as u64 + 1;
                    index /= cap_usize;
                    age
                })
                .collect()
        };
        let encode = |ages: &[u64]| -> usize {
            ages.iter()
                .rev()
                .fold(0usize, |acc, &a| acc * cap_usize + (a - 1) as usize)
        };

        let transitions = build_transitions(policy, n, states, cap, decode, encode);
        let tol = R::tolerance(self.tolerance);

        let stationary = self.stationary(states, &transitions, tol)?;
        let per_device = (0..n)
            .map(|device| self.mean_age(device, states, &transitions, &stationary, tol))
            .collect::<Result<Vec<R>, _>>()?;

        let average_aoi =
            per_device.iter().fold(R::zero(), |acc, &v| acc + v) / R::of_count(n as u64);
        let cap_mass = (0..states)
            .filter(|&s| decode(s).contains(&cap))
            .fold(R::zero(), |acc, s| acc + stationary[s]);

        Ok(MarkovSolution {
            average_aoi,
            per_device,
            states,
            cap_mass,
        })
    }

    /// Power iteration on the lazy chain `(I + P) / 2`, which shares the
    /// stationary law of `P` and is aperiodic.
    fn stationary<R: Real>(
        &self,
        states: usize,
        transitions: &[Transition<R>],
        tol: R,
    ) -> Result<Vec<R>, OracleError> {
        let half = R::of(0.5);
        let mut pi = vec![R::of_count(states as u64).recip(); states];
        let mut next = vec![R::zero(); states];
        let mut residual = R::infinity();
        for _ in 0..self.max_iterations {
            next.iter_mut().zip(&pi).for_each(|(nx, &p)| *nx = half * p);
            for t in transitions {
                next[t.to] = next[t.to] + half * t.prob * pi[t.from];
            }
            residual = l1_distance(&next, &pi);
            std::mem::swap(&mut pi, &mut next);
            if residual < tol {
                return Ok(pi);
            }
        }
        Err(OracleError::Accuracy {
            stage: "stationary distribution",
            residual: residual.to_f64_lossy(),
            iterations: self.max_iterations,
        })
    }

    fn mean_age<R: Real>(
        &self,
        device: usize,
        states: usize,
        transitions: &[Transition<R>],
        pi: &[R],
        tol: R,
    ) -> Result<R, OracleError> {
        let mut m = vec![R::zero(); states];
        let mut next = vec![R::zero(); states];
        let mut residual = R::infinity();
        for _ in 0..self.max_iterations {
            next.iter_mut().for_each(|v| *v = R::zero());
            for t in transitions {
                let carried = if t.winner == Some(device) {
                    pi[t.from]
                } else {
                    m[t.from] + pi[t.from]
                };
                next[t.to] = next[t.to] + t.prob * carried;
            }
            let total = next.iter().fold(R::zero(), |acc, &v| acc + v);
            residual = l1_distance(&next, &m) / total.max(R::one());
            std::mem::swap(&mut m, &mut next);
            if residual < tol {
                return Ok(total);
            }
        }
        Err(OracleError::Accuracy {
            stage: "age-weighted measure",
            residual: residual.to_f64_lossy(),
            iterations: self.max_iterations,
        })
    }
}

fn l1_distance<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter()
        .zip(b)
        .fold(R::zero(), |acc, (&x, &y)| acc + (x - y).abs())
}

fn build_transitions<R: Real>(
    policy: &Policy<R>,
    n: usize,
    states: usize,
    cap: u64,
    decode: impl Fn(usize) -> Vec<u64>,
    encode: impl Fn(&[u64]) -> usize,
) -> Vec<Transition<R>> {
    let mut out = Vec::with_capacity(states * (n + 1));
    let mut next_ages = vec![0u64; n];
    for from in 0..states {
        let ages = decode(from);
        let access: Vec<R> = ages.iter().map(|&a| policy.access_probability(a)).collect();
        // Probability that nobody transmits, and that exactly device w does.
        let mut silent = R::one();
        let mut solo = vec![R::one(); n];
        for (i, &a) in access.iter().enumerate() {
            silent = silent * (R::one() - a);
            for (w, s) in solo.iter_mut().enumerate() {
                *s = *s * if w == i { a } else { R::one() - a };
            }
        }
        let no_delivery = R::one() - solo.iter().fold(R::zero(), |acc, &s| acc + s);
        debug_assert!(no_delivery >= silent - R::of(1e-12));

        for (k, a) in ages.iter().enumerate() {
            next_ages[k] = (a + 1).min(cap);
        }
        if no_delivery > R::zero() {
            out.push(Transition {
                from,
                to: encode(&next_ages),
                prob: no_delivery,
                winner: None,
            });
        }
        for (w, &prob) in solo.iter().enumerate() {
            if prob > R::zero() {
                let saved = next_ages[w];
                next_ages[w] = 1;
                out.push(Transition {
                    from,
                    to: encode(&next_ages),
                    prob,
                    winner: Some(w),
                });
                next_ages[w] = saved;
            }
        }
    }
    out
}

/// Exact (lumped-chain) network average AoI for `n <= 3` devices.
pub fn exact_average_aoi_markov<R: Real>(n: u32, policy: &Policy<R>) -> Result<R, OracleError> {
    MarkovOracle::default()
        .solve(n, policy)
        .map(|s| s.average_aoi)
}
