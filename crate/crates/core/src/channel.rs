//! Resolution of one slot's simultaneous transmissions at the access point.
//!
//! Received powers are in dB on an arbitrary common reference; only their
//! differences (and the gap to the noise floor) matter.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::age::DeviceId;
use crate::real::Real;

pub const DEFAULT_SINR_THRESHOLD_DB: f64 = 6.0;
pub const DEFAULT_NOISE_FLOOR_DB: f64 = -90.0;
/// Receive level every device is calibrated to unless configured otherwise.
pub const REFERENCE_POWER_DB: f64 = 35.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("misdetection probability must lie in [0, 1), got {0}")]
    Misdetection(f64),
    #[error("channel parameter {0} must be finite")]
    NotFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    /// Two or more simultaneous attempts always destroy each other.
    CollisionOnly,
    /// The strongest attempt survives a collision when its SINR clears the
    /// threshold.
    Capture,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams<R> {
    pub model: ChannelModel,
    pub sinr_threshold_db: R,
    pub noise_floor_db: R,
    pub misdetection_prob: R,
}

impl<R: Real> Default for ChannelParams<R> {
    fn default() -> Self {
        ChannelParams {
            model: ChannelModel::CollisionOnly,
            sinr_threshold_db: R::of(DEFAULT_SINR_THRESHOLD_DB),
            noise_floor_db: R::of(DEFAULT_NOISE_FLOOR_DB),
            misdetection_prob: R::zero(),
        }
    }
}

impl<R: Real> ChannelParams<R> {
    pub fn collision_only() -> Self {
        Self::default()
    }

    pub fn capture(sinr_threshold_db: R) -> Self {
        ChannelParams {
            model: ChannelModel::Capture,
            sinr_threshold_db,
            ..Self::default()
        }
    }

    pub fn with_misdetection(mut self, prob: R) -> Self {
        self.misdetection_prob = prob;
        self
    }

    pub fn with_noise_floor(mut self, noise_floor_db: R) -> Self {
        self.noise_floor_db = noise_floor_db;
        self
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let m = self.misdetection_prob;
        if !(m >= R::zero() && m < R::one()) {
            return Err(ChannelError::Misdetection(m.to_f64_lossy()));
        }
        if !self.sinr_threshold_db.is_finite() {
            return Err(ChannelError::NotFinite("sinr_threshold_db"));
        }
        if !self.noise_floor_db.is_finite() {
            return Err(ChannelError::NotFinite("noise_floor_db"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionAttempt<R> {
    pub device: DeviceId,
    pub received_power_db: R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeCause {
    Idle,
    Success,
    Collision,
    Captured,
    Misdetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelOutcome {
    pub delivered: Option<DeviceId>,
    pub cause: OutcomeCause,
}

impl ChannelOutcome {
    fn lost(cause: OutcomeCause) -> Self {
        ChannelOutcome {
            delivered: None,
            cause,
        }
    }
}

fn db_to_linear<R: Real>(db: R) -> R {
    R::of(10.0).powf(db / R::of(10.0))
}

/// SINR in dB of `attempts[index]` against all other attempts plus noise.
pub fn sinr_db<R: Real>(attempts: &[TransmissionAttempt<R>], index: usize, noise_floor_db: R) -> R {
    let interference = attempts
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != index)
        .fold(db_to_linear(noise_floor_db), |acc, (_, a)| {
            acc + db_to_linear(a.received_power_db)
        });
    attempts[index].received_power_db - R::of(10.0) * interference.log10()
}

/// Resolves one slot. `draw` is a uniform value in `[0, 1)` consumed by the
/// misdetection test; it is ignored when nothing would be delivered.
pub fn resolve_slot<R: Real>(
    attempts: &[TransmissionAttempt<R>],
    params: &ChannelParams<R>,
    draw: R,
) -> ChannelOutcome {
    let candidate = match (attempts.len(), params.model) {
        (0, _) => return ChannelOutcome::lost(OutcomeCause::Idle),
        (1, ChannelModel::CollisionOnly) => Some((attempts[0].device, OutcomeCause::Success)),
        (_, ChannelModel::CollisionOnly) => None,
        (count, ChannelModel::Capture) => {
            let mut above = (0..attempts.len()).filter(|&i| {
                sinr_db(attempts, i, params.noise_floor_db) >= params.sinr_threshold_db
            });
            match (above.next(), above.next()) {
                (Some(i), None) => {
                    let cause = if count == 1 {
                        OutcomeCause::Success
                    } else {
                        OutcomeCause::Captured
                    };
                    Some((attempts[i].device, cause))
                }
                _ => None,
            }
        }
    };

    match candidate {
        None => ChannelOutcome::lost(OutcomeCause::Collision),
        Some(_) if draw < params.misdetection_prob => {
            ChannelOutcome::lost(OutcomeCause::Misdetected)
        }
        Some((device, cause)) => ChannelOutcome {
            delivered: Some(device),
            cause,
        },
    }
}
