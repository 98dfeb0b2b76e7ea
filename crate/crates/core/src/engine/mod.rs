//! Slotted simulation loop.
//!
//! Every slot: optional beacon, per-device access decisions, per-radio
//! multiplexing, channel resolution, feedback broadcast and age update.
//! A run is a pure function of its [`NetworkConfig`], including the seed.

mod sync;

use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::age::{step_age, Age, AoiTrace, DeviceId, SlotIndex};
use crate::channel::{
    resolve_slot, ChannelError, ChannelOutcome, ChannelParams, OutcomeCause, TransmissionAttempt,
    REFERENCE_POWER_DB,
};
use crate::protocols::Policy;
use crate::real::Real;

pub use sync::{frames_for_slot, run_with_drift, SlotPhase, SlotSchedule, SyncReport};

pub const DEFAULT_BEACON_INTERVAL: u64 = 100;

/// RNG stream reserved for the channel; device streams use their id.
const CHANNEL_STREAM: u64 = 0;
const FEEDBACK_STREAM_OFFSET: u64 = 1 << 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("network has no devices")]
    NoDevices,
    #[error("horizon must be at least one slot")]
    ZeroHorizon,
    #[error("beacon interval must be at least one slot")]
    ZeroBeaconInterval,
    #[error("device id {0} is reserved on the wire")]
    ReservedId(u16),
    #[error("device id {0} appears more than once")]
    DuplicateDevice(u16),
    #[error("received power of device {0} is not finite")]
    NonFinitePower(u16),
    #[error("radio groups do not partition the devices: {0}")]
    RadioPartition(String),
    #[error("feedback loss probability must lie in [0, 1), got {0}")]
    FeedbackLoss(f64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("drift list has {got} entries but there are {radios} radios")]
    DriftCount { radios: usize, got: usize },
    #[error(
        "radio {radio} would drift {offset} slots before the next beacon; must stay below {bound}"
    )]
    DriftTooLarge {
        radio: usize,
        offset: f64,
        bound: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceSpec<R> {
    pub id: DeviceId,
    pub policy: Policy<R>,
    pub received_power_db: R,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig<R> {
    pub devices: Vec<DeviceSpec<R>>,
    pub channel: ChannelParams<R>,
    pub horizon_slots: u64,
    pub beacon_interval_slots: u64,
    /// When set, beacon slots carry no status updates.
    pub beacon_consumes_slot: bool,
    /// Probability that a device misses a broadcast feedback packet.
    pub feedback_loss_prob: R,
    /// Devices hosted by each radio. Every device sits on exactly one radio.
    pub radios: Vec<Vec<DeviceId>>,
    pub master_seed: u64,
}

impl<R: Real> NetworkConfig<R> {
    /// `n` devices with ids `1..=n`, one radio each, all at the reference
    /// receive power.
    pub fn homogeneous(
        n: u16,
        policy: Policy<R>,
        channel: ChannelParams<R>,
        horizon_slots: u64,
        master_seed: u64,
    ) -> Self {
        let devices: Vec<DeviceSpec<R>> = (1..=n)
            .map(|i| DeviceSpec {
                id: DeviceId(i),
                policy,
                received_power_db: R::of(REFERENCE_POWER_DB),
            })
            .collect();
        let radios = devices.iter().map(|d| vec![d.id]).collect();
        NetworkConfig {
            devices,
            channel,
            horizon_slots,
            beacon_interval_slots: DEFAULT_BEACON_INTERVAL,
            beacon_consumes_slot: false,
            feedback_loss_prob: R::zero(),
            radios,
            master_seed,
        }
    }

    /// Spreads the devices over `count` radios in contiguous blocks whose
    /// sizes differ by at most one.
    pub fn with_radio_count(mut self, count: usize) -> Self {
        let count = count.clamp(1, self.devices.len().max(1));
        let n = self.devices.len();
        let mut radios = Vec::with_capacity(count);
        let mut start = 0;
        for r in 0..count {
            let size = n / count + usize::from(r < n % count);
            radios.push(
                self.devices[start..start + size]
                    .iter()
                    .map(|d| d.id)
                    .collect(),
            );
            start += size;
        }
        self.radios = radios;
        self
    }

    pub fn with_radios(mut self, radios: Vec<Vec<DeviceId>>) -> Self {
        self.radios = radios;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.devices.is_empty() {
            return Err(ConfigError::NoDevices);
        }
        if self.horizon_slots == 0 {
            return Err(ConfigError::ZeroHorizon);
        }
        if self.beacon_interval_slots == 0 {
            return Err(ConfigError::ZeroBeaconInterval);
        }
        self.channel.validate()?;
        let loss = self.feedback_loss_prob;
        if !(loss >= R::zero() && loss < R::one()) {
            return Err(ConfigError::FeedbackLoss(loss.to_f64_lossy()));
        }

        let mut seen = HashSet::new();
        for d in &self.devices {
            if d.id.0 == 0 || d.id.0 == u16::MAX {
                return Err(ConfigError::ReservedId(d.id.0));
            }
            if !seen.insert(d.id) {
                return Err(ConfigError::DuplicateDevice(d.id.0));
            }
            if !d.received_power_db.is_finite() {
                return Err(ConfigError::NonFinitePower(d.id.0));
            }
        }

        let mut placed = HashSet::new();
        for (r, radio) in self.radios.iter().enumerate() {
            if radio.is_empty() {
                return Err(ConfigError::RadioPartition(format!(
                    "radio {r} hosts no device"
                )));
            }
            for id in radio {
                if !seen.contains(id) {
                    return Err(ConfigError::RadioPartition(format!(
                        "radio {r} hosts unknown device {}",
                        id.0
                    )));
                }
                if !placed.insert(*id) {
                    return Err(ConfigError::RadioPartition(format!(
                        "device {} is on more than one radio",
                        id.0
                    )));
                }
            }
        }
        if placed.len() != seen.len() {
            return Err(ConfigError::RadioPartition(format!(
                "{} device(s) are not on any radio",
                seen.len() - placed.len()
            )));
        }
        Ok(())
    }

    pub fn schedule(&self) -> SlotSchedule {
        SlotSchedule {
            beacon_interval_slots: self.beacon_interval_slots,
            beacon_consumes_slot: self.beacon_consumes_slot,
        }
    }
}

/// What happened in one slot, as seen from the borrowed simulator state.
#[derive(Debug, Clone, Copy)]
pub struct SlotView<'s> {
    pub slot: SlotIndex,
    pub beacon: bool,
    /// Device indices (into `NetworkConfig::devices`) that decided to transmit.
    pub candidates: &'s [usize],
    /// Devices whose packets entered the channel.
    pub transmitters: &'s [DeviceId],
    /// Radios that stayed silent because several of their devices activated.
    pub internal_collisions: &'s [usize],
    pub outcome: ChannelOutcome,
    /// Ages during this slot, before the update.
    pub ages_before: &'s [Age],
    /// Ages after the update.
    pub ages_after: &'s [Age],
}

impl SlotView<'_> {
    pub fn to_record(&self) -> SlotRecord {
        SlotRecord {
            slot: self.slot.get(),
            beacon: self.beacon,
            transmitters: self.transmitters.iter().map(|d| d.0).collect(),
            internal_collisions: self.internal_collisions.to_vec(),
            cause: self.outcome.cause,
            feedback_id: self.outcome.delivered.map(|d| d.0),
        }
    }
}

/// One event-log line. Serialized as a single JSON object per slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub beacon: bool,
    pub transmitters: Vec<u16>,
    pub internal_collisions: Vec<usize>,
    pub cause: OutcomeCause,
    pub feedback_id: Option<u16>,
}

/// Writes the log as newline-delimited JSON.
pub fn write_event_log<W: Write>(records: &[SlotRecord], mut out: W) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Slot-by-slot executor for one configuration.
pub struct Simulator<'c, R> {
    config: &'c NetworkConfig<R>,
    radio_of: Vec<usize>,
    ages: Vec<Age>,
    ages_before: Vec<Age>,
    device_rngs: Vec<ChaCha8Rng>,
    feedback_rngs: Vec<ChaCha8Rng>,
    channel_rng: ChaCha8Rng,
    next_slot: SlotIndex,
    candidates: Vec<usize>,
    per_radio: Vec<Vec<usize>>,
    attempts: Vec<TransmissionAttempt<R>>,
    transmitters: Vec<DeviceId>,
    internal: Vec<usize>,
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl<'c, R: Real> Simulator<'c, R> {
    pub fn new(config: &'c NetworkConfig<R>) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut radio_of = vec![0; config.devices.len()];
        for (r, radio) in config.radios.iter().enumerate() {
            for id in radio {
                let k = config
                    .devices
                    .iter()
                    .position(|d| d.id == *id)
                    .expect("validated partition");
                radio_of[k] = r;
            }
        }
        let n = config.devices.len();
        Ok(Simulator {
            config,
            radio_of,
            ages: vec![Age::ONE; n],
            ages_before: vec![Age::ONE; n],
            device_rngs: config
                .devices
                .iter()
                .map(|d| stream(config.master_seed, d.id.0 as u64))
                .collect(),
            feedback_rngs: config
                .devices
                .iter()
                .map(|d| stream(config.master_seed, FEEDBACK_STREAM_OFFSET + d.id.0 as u64))
                .collect(),
            channel_rng: stream(config.master_seed, CHANNEL_STREAM),
            next_slot: SlotIndex::FIRST,
            candidates: Vec::with_capacity(n),
            per_radio: vec![Vec::new(); config.radios.len()],
            attempts: Vec::with_capacity(n),
            transmitters: Vec::with_capacity(n),
            internal: Vec::new(),
        })
    }

    pub fn ages(&self) -> &[Age] {
        &self.ages
    }

    pub fn config(&self) -> &NetworkConfig<R> {
        self.config
    }

    /// Advances one slot; `None` once the horizon has been simulated.
    pub fn step(&mut self) -> Option<SlotView<'_>> {
        let slot = self.next_slot;
        if slot.get() > self.config.horizon_slots {
            return None;
        }
        self.next_slot = slot.next();

        let schedule = self.config.schedule();
        let beacon = schedule.is_beacon(slot);
        let access_open = !(beacon && schedule.beacon_consumes_slot);

        // Every device and the channel draw exactly once per slot, so runs
        // that differ only in channel parameters share their random numbers.
        self.candidates.clear();
        for (k, device) in self.config.devices.iter().enumerate() {
            let draw = R::of(self.device_rngs[k].gen::<f64>());
            if access_open && device.policy.decide(self.ages[k], draw) {
                self.candidates.push(k);
            }
        }
        let channel_draw = R::of(self.channel_rng.gen::<f64>());

        self.per_radio.iter_mut().for_each(Vec::clear);
        for &k in &self.candidates {
            self.per_radio[self.radio_of[k]].push(k);
        }
        self.attempts.clear();
        self.transmitters.clear();
        self.internal.clear();
        for (r, active) in self.per_radio.iter().enumerate() {
            match active.as_slice() {
                [] => {}
                [k] => {
                    let device = &self.config.devices[*k];
                    self.attempts.push(TransmissionAttempt {
                        device: device.id,
                        received_power_db: device.received_power_db,
                    });
                    self.transmitters.push(device.id);
                }
                _ => self.internal.push(r),
            }
        }

        let outcome = resolve_slot(&self.attempts, &self.config.channel, channel_draw);

        self.ages_before.copy_from_slice(&self.ages);
        let loss = self.config.feedback_loss_prob;
        for (k, device) in self.config.devices.iter().enumerate() {
            let mut heard = outcome.delivered == Some(device.id);
            if loss > R::zero() {
                let lost = R::of(self.feedback_rngs[k].gen::<f64>()) < loss;
                heard &= !lost;
            }
            self.ages[k] = step_age(self.ages[k], heard);
        }

        Some(SlotView {
            slot,
            beacon,
            candidates: &self.candidates,
            transmitters: &self.transmitters,
            internal_collisions: &self.internal,
            outcome,
            ages_before: &self.ages_before,
            ages_after: &self.ages,
        })
    }
}

/// Full output of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: AoiTrace,
    pub log: Vec<SlotRecord>,
}

/// Runs the configuration to its horizon, recording every age sample and
/// one log record per slot. Age samples are taken before each slot's update,
/// so slot 1 holds the initial age of one.
pub fn run<R: Real>(config: &NetworkConfig<R>) -> Result<RunOutput, ConfigError> {
    let mut sim = Simulator::new(config)?;
    let ids = config.devices.iter().map(|d| d.id).collect();
    let mut trace = AoiTrace::with_capacity(ids, config.horizon_slots);
    let mut log = Vec::with_capacity(config.horizon_slots as usize);
    while let Some(view) = sim.step() {
        trace.push_slot(view.ages_before.iter().copied());
        log.push(view.to_record());
    }
    Ok(RunOutput { trace, log })
}

/// Aggregate statistics of a run, without per-slot storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub devices: Vec<DeviceId>,
    pub horizon: u64,
    /// Sum of the pre-update ages over the horizon, per device.
    pub age_sums: Vec<u128>,
    pub deliveries: Vec<u64>,
    /// Slots in which the device decided to transmit.
    pub activations: Vec<u64>,
    /// Slots in which no other device decided to transmit.
    pub clear_slots: Vec<u64>,
    pub idle: u64,
    pub successes: u64,
    pub collisions: u64,
    pub captures: u64,
    pub misdetections: u64,
    pub internal_collisions: u64,
}

impl RunSummary {
    pub fn device_average<R: Real>(&self, index: usize) -> R {
        R::of(self.age_sums[index] as f64) / R::of_count(self.horizon)
    }

    pub fn device_averages<R: Real>(&self) -> Vec<R> {
        (0..self.devices.len())
            .map(|k| self.device_average(k))
            .collect()
    }

    pub fn network_average<R: Real>(&self) -> R {
        let sum = (0..self.devices.len()).fold(R::zero(), |acc, k| acc + self.device_average(k));
        sum / R::of_count(self.devices.len() as u64)
    }

    /// Mean over the listed device indices.
    pub fn group_average<R: Real>(&self, indices: &[usize]) -> R {
        let sum = indices
            .iter()
            .fold(R::zero(), |acc, &k| acc + self.device_average(k));
        sum / R::of_count(indices.len() as u64)
    }

    /// Empirical probability, over devices and slots, that no other device
    /// transmits.
    pub fn clear_slot_rate<R: Real>(&self) -> R {
        let total: u64 = self.clear_slots.iter().sum();
        R::of_count(total) / R::of_count(self.horizon * self.devices.len() as u64)
    }
}

/// Runs the configuration keeping only running sums.
pub fn run_summary<R: Real>(config: &NetworkConfig<R>) -> Result<RunSummary, ConfigError> {
    let mut sim = Simulator::new(config)?;
    let n = config.devices.len();
    let mut summary = RunSummary {
        devices: config.devices.iter().map(|d| d.id).collect(),
        horizon: config.horizon_slots,
        age_sums: vec![0; n],
        deliveries: vec![0; n],
        activations: vec![0; n],
        clear_slots: vec![0; n],
        idle: 0,
        successes: 0,
        collisions: 0,
        captures: 0,
        misdetections: 0,
        internal_collisions: 0,
    };
    let mut active = vec![false; n];
    while let Some(view) = sim.step() {
        for (sum, age) in summary.age_sums.iter_mut().zip(view.ages_before) {
            *sum += age.get() as u128;
        }
        active.iter_mut().for_each(|a| *a = false);
        for &k in view.candidates {
            active[k] = true;
            summary.activations[k] += 1;
        }
        let count = view.candidates.len();
        for (k, clear) in summary.clear_slots.iter_mut().enumerate() {
            if count - usize::from(active[k]) == 0 {
                *clear += 1;
            }
        }
        if let Some(id) = view.outcome.delivered {
            let k = summary
                .devices
                .iter()
                .position(|d| *d == id)
                .expect("known device");
            summary.deliveries[k] += 1;
        }
        summary.internal_collisions += view.internal_collisions.len() as u64;
        match view.outcome.cause {
            OutcomeCause::Idle => summary.idle += 1,
            OutcomeCause::Success => summary.successes += 1,
            OutcomeCause::Collision => summary.collisions += 1,
            OutcomeCause::Captured => summary.captures += 1,
            OutcomeCause::Misdetected => summary.misdetections += 1,
        }
    }
    Ok(summary)
}
