//! Slotted time, per-device age of information and time-average metrics.
//!
//! Ages are integers counted in slots. A device's age drops to one in the
//! slot after a successful delivery and grows by one otherwise, so the
//! generation time of the last received update never needs to be stored.

use std::fmt;
use std::num::NonZeroU64;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AoiError {
    #[error("device {0} is not part of the trace")]
    UnknownDevice(DeviceId),
    #[error("age must be at least one slot")]
    ZeroAge,
}

/// Index of a time slot. Slots are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotIndex(u64);

impl SlotIndex {
    pub const FIRST: SlotIndex = SlotIndex(1);

    pub fn new(value: u64) -> Option<Self> {
        (value >= 1).then_some(SlotIndex(value))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn next(self) -> Self {
        SlotIndex(self.0 + 1)
    }
}

impl fmt::Display for SlotIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Instantaneous age of information of one device, in slots (always >= 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Age(NonZeroU64);

impl Age {
    pub const ONE: Age = Age(NonZeroU64::MIN);

    pub fn new(value: u64) -> Result<Self, AoiError> {
        NonZeroU64::new(value).map(Age).ok_or(AoiError::ZeroAge)
    }

    pub fn get(self) -> u64 {
        self.0.get()
    }
}

impl TryFrom<u64> for Age {
    type Error = AoiError;

    fn try_from(value: u64) -> Result<Self, Self::Error> {
        Age::new(value)
    }
}

impl From<Age> for u64 {
    fn from(age: Age) -> u64 {
        age.get()
    }
}

impl fmt::Display for Age {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Identity of an IoT device. Doubles as its node ID on the wire, so 0
/// and 0xFFFF are reserved (see [`crate::codec`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceId(pub u16);

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}", self.0)
    }
}

/// Age evolution over one slot: reset to one on a delivery, otherwise grow.
pub fn step_age(current: Age, delivered: bool) -> Age {
    if delivered {
        Age::ONE
    } else {
        Age(current.0.saturating_add(1))
    }
}

/// Per-device age samples over a finite horizon.
///
/// `ages[k][t - 1]` is the age of `devices[k]` during slot `t`, i.e. the age
/// before that slot's update is applied. Slot 1 carries the initial age.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AoiTrace {
    devices: Vec<DeviceId>,
    ages: Vec<Vec<Age>>,
    horizon: u64,
}

impl AoiTrace {
    /// Builds an empty trace that will hold `horizon` samples per device.
    pub fn with_capacity(devices: Vec<DeviceId>, horizon: u64) -> Self {
        let ages = devices
            .iter()
            .map(|_| Vec::with_capacity(horizon as usize))
            .collect();
        AoiTrace {
            devices,
            ages,
            horizon,
        }
    }

    /// Builds a trace from explicit per-device sequences. Every sequence
    /// must have the same length, which becomes the horizon.
    pub fn from_sequences(sequences: Vec<(DeviceId, Vec<Age>)>) -> Option<Self> {
        let horizon = sequences.first().map(|(_, s)| s.len() as u64)?;
        if sequences.iter().any(|(_, s)| s.len() as u64 != horizon) {
            return None;
        }
        let (devices, ages) = sequences.into_iter().unzip();
        Some(AoiTrace {
            devices,
            ages,
            horizon,
        })
    }

    pub(crate) fn push_slot(&mut self, ages: impl IntoIterator<Item = Age>) {
        for (seq, age) in self.ages.iter_mut().zip(ages) {
            seq.push(age);
        }
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn devices(&self) -> &[DeviceId] {
        &self.devices
    }

    pub fn ages(&self, device: DeviceId) -> Result<&[Age], AoiError> {
        self.devices
            .iter()
            .position(|d| *d == device)
            .map(|k| self.ages[k].as_slice())
            .ok_or(AoiError::UnknownDevice(device))
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty() || self.horizon == 0
    }
}

fn mean_of<R: Real>(ages: &[Age]) -> R {
    let total: u128 = ages.iter().map(|a| a.get() as u128).sum();
    R::of(total as f64) / R::of_count(ages.len() as u64)
}

/// Finite-horizon time-average age of one device.
pub fn average_aoi<R: Real>(trace: &AoiTrace, device: DeviceId) -> Result<R, AoiError> {
    trace.ages(device).map(mean_of)
}

/// Unweighted mean of the per-device averages. Returns NaN on an empty trace.
pub fn network_average_aoi<R: Real>(trace: &AoiTrace) -> R {
    if trace.is_empty() {
        return R::nan();
    }
    let sum = trace
        .ages
        .iter()
        .map(|seq| mean_of::<R>(seq))
        .fold(R::zero(), |acc, v| acc + v);
    sum / R::of_count(trace.devices.len() as u64)
}
