use crate::protocols::optimize::{golden_section_min, grid_argmin, unit_grid};
use crate::protocols::{AnalyticError, Policy};
use crate::real::Real;

const FIXED_POINT_DAMPING: f64 = 0.5;
const FIXED_POINT_TOLERANCE: f64 = 1e-12;
const FIXED_POINT_MAX_ITERATIONS: usize = 100_000;

const COARSE_GRID_POINTS: u64 = 1_000;
const FINE_GRID_POINTS: u64 = 100_000;
const GOLDEN_X_TOLERANCE: f64 = 1e-10;
const GRID_DISAGREEMENT: f64 = 1e-6;

fn check_network(n: u32) -> Result<(), AnalyticError> {
    if n == 0 {
        Err(AnalyticError::InvalidParameter(
            "network needs at least one device".into(),
        ))
    } else {
        Ok(())
    }
}

fn check_probability<R: Real>(p: R) -> Result<(), AnalyticError> {
    if p > R::zero() && p <= R::one() {
        Ok(())
    } else {
        Err(AnalyticError::InvalidParameter(format!(
            "channel access probability must lie in (0, 1], got {p}"
        )))
    }
}

fn check_threshold(delta: u64) -> Result<(), AnalyticError> {
    if delta == 0 {
        Err(AnalyticError::InvalidParameter(
            "age threshold must be at least 1".into(),
        ))
    } else {
        Ok(())
    }
}

fn others(n: u32) -> i32 {
    (n - 1) as i32
}

/// Network average AoI under AIRA with `n` devices and CAP `p`:
/// `1 / (p (1 - p)^(n - 1))`.
pub fn aira_average_aoi<R: Real>(n: u32, p: R) -> Result<R, AnalyticError> {
    check_network(n)?;
    check_probability(p)?;
    let success = p * (R::one() - p).powi(others(n));
    if success <= R::zero() {
        return Err(AnalyticError::Divergent {
            n,
            p: p.to_f64_lossy(),
        });
    }
    Ok(success.recip())
}

/// The AIRA CAP minimising the network average AoI, `1 / n`.
pub fn aira_optimal_cap<R: Real>(n: u32) -> Result<R, AnalyticError> {
    check_network(n)?;
    Ok(R::of_count(n as u64).recip())
}

/// Steady-state probability `q` that no other device transmits in a slot
/// under threshold ADRA, for symmetric devices.
///
/// A device's renewal cycle is `delta - 1` silent slots followed by
/// contention in which each slot is an attempt with probability `p`, and
/// each attempt succeeds with probability `q`. The long-run transmission
/// frequency is therefore `tau(q) = p / (p q (delta - 1) + 1)`, and `q` is
/// the fixed point of `q = (1 - tau(q))^(n - 1)`, found by damped iteration
/// from the AIRA value `(1 - p)^(n - 1)`.
pub fn adra_success_probability<R: Real>(n: u32, delta: u64, p: R) -> Result<R, AnalyticError> {
    check_network(n)?;
    check_threshold(delta)?;
    check_probability(p)?;
    if n == 1 {
        return Ok(R::one());
    }

    let lambda = R::of(FIXED_POINT_DAMPING);
    let tol = R::tolerance(FIXED_POINT_TOLERANCE);
    let silent = R::of_count(delta - 1);
    let transmit_rate = |q: R| p / (p * q * silent + R::one());

    let mut q = (R::one() - p).powi(others(n));
    let mut residual = R::infinity();
    for _ in 0..FIXED_POINT_MAX_ITERATIONS {
        let target = (R::one() - transmit_rate(q)).powi(others(n));
        let next = (R::one() - lambda) * q + lambda * target;
        residual = (target - q).abs();
        if (next - q).abs() < tol {
            return Ok(next);
        }
        q = next;
    }
    Err(AnalyticError::NonConvergence {
        last: q.to_f64_lossy(),
        residual: residual.to_f64_lossy(),
        iterations: FIXED_POINT_MAX_ITERATIONS,
    })
}

/// Approximate ADRA average AoI for threshold `delta` and per-attempt
/// success probability `q`.
fn adra_expression<R: Real>(n: u32, delta: u64, p: R, q: R) -> Result<R, AnalyticError> {
    let pq = p * q;
    if pq <= R::zero() {
        return Err(AnalyticError::Divergent {
            n,
            p: p.to_f64_lossy(),
        });
    }
    let two = R::of(2.0);
    let d = R::of_count(delta);
    Ok(d / two + pq.recip() - d / (two * (d * pq + R::one() - pq)))
}

/// Approximate network average AoI under threshold ADRA,
/// `delta/2 + 1/(p q) - delta / (2 (delta p q + 1 - p q))`, with `q` from
/// [`adra_success_probability`].
pub fn adra_average_aoi<R: Real>(n: u32, delta: u64, p: R) -> Result<R, AnalyticError> {
    let q = adra_success_probability(n, delta, p)?;
    adra_expression(n, delta, p, q)
}

/// CAP in `(0, 1]` minimising [`adra_average_aoi`] for a given threshold.
///
/// A 10^3-point grid locates the best cell, golden-section refines within
/// the neighbouring cells, and a 10^5-point grid takes over when the two
/// disagree by more than 1e-6 in value. Points where the expression
/// diverges or the fixed point fails to converge count as +inf.
pub fn adra_optimize_cap<R: Real>(n: u32, delta: u64) -> Result<R, AnalyticError> {
    check_network(n)?;
    check_threshold(delta)?;

    let objective = |p: R| match adra_average_aoi(n, delta, p) {
        Ok(v) => v,
        Err(_) => R::infinity(),
    };
    let no_minimum = || {
        AnalyticError::InvalidParameter(format!(
            "no CAP gives a finite average AoI (n={n}, delta={delta})"
        ))
    };

    let (grid_p, grid_v) = grid_argmin(unit_grid::<R>(COARSE_GRID_POINTS), objective)
        .filter(|(_, v)| v.is_finite())
        .ok_or_else(no_minimum)?;

    let step = R::of_count(COARSE_GRID_POINTS).recip();
    let lo = (grid_p - step).max(R::epsilon());
    let hi = (grid_p + step).min(R::one());
    let x_tol = R::tolerance(GOLDEN_X_TOLERANCE);
    let (golden_p, golden_v) = golden_section_min(objective, lo, hi, x_tol);

    if golden_v > grid_v + R::of(GRID_DISAGREEMENT) {
        return grid_argmin(unit_grid::<R>(FINE_GRID_POINTS), objective)
            .filter(|(_, v)| v.is_finite())
            .map(|(p, _)| p)
            .ok_or_else(no_minimum);
    }

    Ok(
        if golden_v < grid_v || (golden_v == grid_v && golden_p < grid_p) {
            golden_p
        } else {
            grid_p
        },
    )
}

/// Analytic model of one symmetric network: size, policy and the resolved
/// per-attempt success probability `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticParams<R> {
    pub n_devices: u32,
    pub policy: Policy<R>,
    pub q: R,
}

impl<R: Real> AnalyticParams<R> {
    /// Resolves `q` for the policy: `(1 - p)^(n - 1)` for AIRA and the
    /// renewal fixed point for ADRA.
    pub fn resolve(n_devices: u32, policy: Policy<R>) -> Result<Self, AnalyticError> {
        check_network(n_devices)?;
        let q = match policy {
            Policy::Aira(a) => (R::one() - a.p()).powi(others(n_devices)),
            Policy::Adra(a) => adra_success_probability(n_devices, a.delta(), a.p())?,
        };
        Ok(AnalyticParams {
            n_devices,
            policy,
            q,
        })
    }

    /// Average AoI from the closed-form expression matching the policy.
    pub fn average_aoi(&self) -> Result<R, AnalyticError> {
        if !(self.q > R::zero() && self.q <= R::one()) {
            return Err(AnalyticError::InvalidParameter(format!(
                "success probability must lie in (0, 1], got {}",
                self.q
            )));
        }
        match self.policy {
            Policy::Aira(a) => aira_average_aoi(self.n_devices, a.p()),
            Policy::Adra(a) => adra_expression(self.n_devices, a.delta(), a.p(), self.q),
        }
    }
}
