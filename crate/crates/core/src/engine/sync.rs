//! Beacon-synchronised slot structure and oscillator drift emulation.

use crate::age::SlotIndex;
use crate::codec::{Beacon, Feedback, Frame, StatusUpdate};
use crate::engine::{run, ConfigError, NetworkConfig, RunOutput, SlotRecord};
use crate::real::Real;

/// Each slot is split into two transmission slots: status updates first,
/// then the access point's feedback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SlotPhase {
    Status,
    Feedback,
}

impl SlotPhase {
    pub const ORDER: [SlotPhase; 2] = [SlotPhase::Status, SlotPhase::Feedback];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotSchedule {
    pub beacon_interval_slots: u64,
    pub beacon_consumes_slot: bool,
}

impl SlotSchedule {
    /// Beacons go out in slot 1 and every `beacon_interval_slots` after.
    pub fn is_beacon(&self, slot: SlotIndex) -> bool {
        self.slot_in_interval(slot) == 0
    }

    /// Zero-based position of the slot since the last beacon.
    pub fn slot_in_interval(&self, slot: SlotIndex) -> u64 {
        (slot.get() - 1) % self.beacon_interval_slots
    }

    /// Number carried by the most recent beacon, starting at 0.
    pub fn beacon_number(&self, slot: SlotIndex) -> u64 {
        (slot.get() - 1) / self.beacon_interval_slots
    }
}

/// Frames exchanged during one logged slot, in air order: the beacon (if
/// any), each status update, then the feedback broadcast. Counters wrap at
/// 32 bits.
pub fn frames_for_slot(
    record: &SlotRecord,
    schedule: &SlotSchedule,
    ap_id: u16,
    bitrate_code: u8,
) -> Vec<Frame> {
    let slot_number = record.slot as u32;
    let mut frames = Vec::with_capacity(record.transmitters.len() + 2);
    if record.beacon {
        let slot = SlotIndex::new(record.slot).expect("logged slots start at 1");
        frames.push(Frame::Beacon(Beacon {
            bitrate_code,
            source_id: ap_id,
            beacon_number: schedule.beacon_number(slot) as u32,
            interval_slots: schedule.beacon_interval_slots as u32,
        }));
    }
    for &device in &record.transmitters {
        frames.push(Frame::StatusUpdate(StatusUpdate {
            bitrate_code,
            destination_id: ap_id,
            source_id: device,
            slot_number,
            // Generate-at-will: the sample is taken in the slot it is sent.
            payload: slot_number.to_be_bytes().to_vec(),
        }));
    }
    frames.push(Frame::Feedback(Feedback {
        bitrate_code,
        source_id: ap_id,
        slot_number,
        feedback_id: record.feedback_id,
        payload: Vec::new(),
    }));
    frames
}

/// Largest slot-boundary offsets accumulated between beacons.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncReport<R> {
    /// In slot durations, per radio.
    pub per_radio_max_offset: Vec<R>,
    pub max_offset: R,
    /// Zero-based slot within the beacon interval at which the maximum is
    /// reached (the end of that slot).
    pub worst_slot_in_interval: u64,
}

/// Offset of a radio's slot grid at the end of the `slot_in_interval`-th
/// slot after a beacon, for a clock error of `drift_ppm`.
pub fn drift_offset<R: Real>(drift_ppm: R, slot_in_interval: u64) -> R {
    drift_ppm * R::of(1e-6) * R::of_count(slot_in_interval + 1)
}

/// Runs with a per-radio clock error. Each radio's slot boundaries drift
/// linearly and snap back at every beacon. Offsets of half a slot or more
/// would misalign transmissions, so such configurations are rejected; any
/// accepted configuration therefore produces the same trace as [`run`].
pub fn run_with_drift<R: Real>(
    config: &NetworkConfig<R>,
    drift_ppm: &[R],
) -> Result<(RunOutput, SyncReport<R>), ConfigError> {
    config.validate()?;
    if drift_ppm.len() != config.radios.len() {
        return Err(ConfigError::DriftCount {
            radios: config.radios.len(),
            got: drift_ppm.len(),
        });
    }
    let window = config.beacon_interval_slots.min(config.horizon_slots);
    let worst = window - 1;
    let bound = R::of(0.5);

    let mut per_radio = Vec::with_capacity(drift_ppm.len());
    for (radio, &ppm) in drift_ppm.iter().enumerate() {
        let offset = drift_offset(ppm.abs(), worst);
        if offset.is_nan() || offset >= bound {
            return Err(ConfigError::DriftTooLarge {
                radio,
                offset: offset.to_f64_lossy(),
                bound: 0.5,
            });
        }
        per_radio.push(offset);
    }
    let max_offset = per_radio.iter().fold(R::zero(), |acc, &o| acc.max(o));

    let output = run(config)?;
    Ok((
        output,
        SyncReport {
            per_radio_max_offset: per_radio,
            max_offset,
            worst_slot_in_interval: worst,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::codec::{decode, encode};
    use crate::protocols::Policy;

    fn config(n: u16) -> NetworkConfig<f64> {
        NetworkConfig::homogeneous(
            n,
            Policy::aira(0.3).unwrap(),
            ChannelParams::collision_only(),
            1_000,
            11,
        )
    }

    #[test]
    fn schedule_positions() {
        let s = SlotSchedule {
            beacon_interval_slots: 100,
            beacon_consumes_slot: false,
        };
        let at = |t| SlotIndex::new(t).unwrap();
        assert!(s.is_beacon(at(1)));
        assert!(!s.is_beacon(at(100)));
        assert!(s.is_beacon(at(101)));
        assert_eq!(s.slot_in_interval(at(100)), 99);
        assert_eq!(s.beacon_number(at(250)), 2);
        assert_eq!(SlotPhase::ORDER, [SlotPhase::Status, SlotPhase::Feedback]);
    }

    #[test]
    fn zero_drift_matches_plain_run() {
        let cfg = config(4);
        let (out, report) = run_with_drift(&cfg, &[0.0; 4]).unwrap();
        assert_eq!(out, run(&cfg).unwrap());
        assert_eq!(report.max_offset, 0.0);
    }

    #[test]
    fn linear_accumulation_below_half_slot() {
        let cfg = config(2);
        // 4000 ppm = 0.004 slot per slot.
        let (_, report) = run_with_drift(&cfg, &[4000.0, -1000.0]).unwrap();
        assert!((report.max_offset - 0.4).abs() < 1e-12);
        assert_eq!(report.worst_slot_in_interval, 99);
        assert!((report.per_radio_max_offset[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn excessive_drift_rejected() {
        let cfg = config(2);
        let err = run_with_drift(&cfg, &[5000.0, 0.0]).unwrap_err();
        match err {
            ConfigError::DriftTooLarge { radio, offset, .. } => {
                assert_eq!(radio, 0);
                assert!((offset - 0.5).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            run_with_drift(&cfg, &[0.0]),
            Err(ConfigError::DriftCount { radios: 2, got: 1 })
        ));
    }

    #[test]
    fn slot_frames_roundtrip_through_codec() {
        let cfg = config(5);
        let out = run(&cfg).unwrap();
        let schedule = cfg.schedule();
        for record in out.log.iter().take(300) {
            let frames = frames_for_slot(record, &schedule, crate::codec::DEFAULT_AP_ID, 1);
            assert_eq!(
                frames.len(),
                record.transmitters.len() + 1 + usize::from(record.beacon)
            );
            for frame in frames {
                assert_eq!(decode(&encode(&frame).unwrap()).unwrap(), frame);
            }
        }
    }
}
