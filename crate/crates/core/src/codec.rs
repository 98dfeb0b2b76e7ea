//! Wire format of the Beacon, Status Update and Feedback frames.
//!
//! All multi-byte fields are big-endian:
//!
//! ```text
//! Beacon        01 | bitrate | dest=FFFF (2) | source (2) | beacon_number (4) | len=4 (2) | interval_slots (4) | crc (2)
//! StatusUpdate  02 | bitrate | dest (2)      | source (2) | slot_number (4)   | len (2)   | payload            | crc (2)
//! Feedback      03 | bitrate | dest=FFFF (2) | source (2) | slot_number (4)   | feedback_id (2) | len (2) | payload | crc (2)
//! ```
//!
//! The checksum is CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no
//! reflection, no final xor) over every preceding byte. A feedback id of
//! 0x0000 means no status update was received in that slot.

use crc::{Crc, CRC_16_IBM_3740};
use thiserror::Error;

pub const BROADCAST_ID: u16 = 0xFFFF;
pub const NO_DELIVERY_ID: u16 = 0x0000;
pub const DEFAULT_AP_ID: u16 = 0xFFFE;
pub const MAX_PAYLOAD_LEN: usize = 1024;

pub const TAG_BEACON: u8 = 0x01;
pub const TAG_STATUS_UPDATE: u8 = 0x02;
pub const TAG_FEEDBACK: u8 = 0x03;

const CRC16: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

/// tag, bitrate, destination, source, 4-byte counter, payload length, CRC.
const BASE_LEN: usize = 1 + 1 + 2 + 2 + 4 + 2 + 2;
const BEACON_PAYLOAD_LEN: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD_LEN}-byte limit")]
    Oversize(usize),
    #[error("field {field} cannot hold {value:#06x}")]
    InvalidField { field: &'static str, value: u16 },
    #[error("frame too short: need {needed} bytes, got {got}")]
    Length { needed: usize, got: usize },
    #[error("checksum mismatch: frame says {stated:#06x}, computed {computed:#06x}")]
    Integrity { stated: u16, computed: u16 },
    #[error("malformed frame: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Beacon {
    pub bitrate_code: u8,
    pub source_id: u16,
    pub beacon_number: u32,
    /// Beacon interval in slots, carried as the payload.
    pub interval_slots: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StatusUpdate {
    pub bitrate_code: u8,
    pub destination_id: u16,
    pub source_id: u16,
    pub slot_number: u32,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Feedback {
    pub bitrate_code: u8,
    pub source_id: u16,
    pub slot_number: u32,
    /// Device whose status update was received, if any.
    pub feedback_id: Option<u16>,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Frame {
    Beacon(Beacon),
    StatusUpdate(StatusUpdate),
    Feedback(Feedback),
}

impl Frame {
    pub fn tag(&self) -> u8 {
        match self {
            Frame::Beacon(_) => TAG_BEACON,
            Frame::StatusUpdate(_) => TAG_STATUS_UPDATE,
            Frame::Feedback(_) => TAG_FEEDBACK,
        }
    }

    pub fn destination_id(&self) -> u16 {
        match self {
            Frame::StatusUpdate(s) => s.destination_id,
            Frame::Beacon(_) | Frame::Feedback(_) => BROADCAST_ID,
        }
    }

    pub fn source_id(&self) -> u16 {
        match self {
            Frame::Beacon(b) => b.source_id,
            Frame::StatusUpdate(s) => s.source_id,
            Frame::Feedback(f) => f.source_id,
        }
    }
}

pub fn crc16(bytes: &[u8]) -> u16 {
    CRC16.checksum(bytes)
}

pub fn encode(frame: &Frame) -> Result<Vec<u8>, CodecError> {
    let (bitrate, counter, payload): (u8, u32, std::borrow::Cow<'_, [u8]>) = match frame {
        Frame::Beacon(b) => (
            b.bitrate_code,
            b.beacon_number,
            b.interval_slots.to_be_bytes().to_vec().into(),
        ),
        Frame::StatusUpdate(s) => {
            if s.destination_id == BROADCAST_ID {
                return Err(CodecError::InvalidField {
                    field: "destination_id",
                    value: s.destination_id,
                });
            }
            (s.bitrate_code, s.slot_number, s.payload.as_slice().into())
        }
        Frame::Feedback(f) => {
            if f.feedback_id == Some(NO_DELIVERY_ID) {
                return Err(CodecError::InvalidField {
                    field: "feedback_id",
                    value: NO_DELIVERY_ID,
                });
            }
            (f.bitrate_code, f.slot_number, f.payload.as_slice().into())
        }
    };
    if payload.len() > MAX_PAYLOAD_LEN {
        return Err(CodecError::Oversize(payload.len()));
    }

    let mut out = Vec::with_capacity(BASE_LEN + 2 + payload.len());
    out.push(frame.tag());
    out.push(bitrate);
    out.extend_from_slice(&frame.destination_id().to_be_bytes());
    out.extend_from_slice(&frame.source_id().to_be_bytes());
    out.extend_from_slice(&counter.to_be_bytes());
    if let Frame::Feedback(f) = frame {
        out.extend_from_slice(&f.feedback_id.unwrap_or(NO_DELIVERY_ID).to_be_bytes());
    }
    out.extend_from_slice(&(payload.len() as u16).to_be_bytes());
    out.extend_from_slice(&payload);
    let crc = crc16(&out);
    out.extend_from_slice(&crc.to_be_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos + len;
        let slice = self.bytes.get(self.pos..end).ok_or(CodecError::Length {
            needed: end,
            got: self.bytes.len(),
        })?;
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Parses one frame. The checksum is verified before any field is
/// interpreted, so corrupted frames report [`CodecError::Integrity`].
pub fn decode(bytes: &[u8]) -> Result<Frame, CodecError> {
    if bytes.len() < BASE_LEN {
        return Err(CodecError::Length {
            needed: BASE_LEN,
            got: bytes.len(),
        });
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 2);
    let stated = u16::from_be_bytes([trailer[0], trailer[1]]);
    let computed = crc16(body);
    if stated != computed {
        return Err(CodecError::Integrity { stated, computed });
    }

    let mut r = Reader {
        bytes: body,
        pos: 0,
    };
    let tag = r.u8()?;
    if !matches!(tag, TAG_BEACON | TAG_STATUS_UPDATE | TAG_FEEDBACK) {
        return Err(CodecError::Format(format!("unknown frame type {tag:#04x}")));
    }
    let bitrate_code = r.u8()?;
    let destination_id = r.u16()?;
    let source_id = r.u16()?;
    let counter = r.u32()?;
    let feedback_id = if tag == TAG_FEEDBACK {
        Some(r.u16()?)
    } else {
        None
    };
    let len = r.u16()? as usize;
    if len > MAX_PAYLOAD_LEN {
        return Err(CodecError::Format(format!(
            "payload length {len} over limit"
        )));
    }
    let payload = r.take(len)?;
    if r.pos != body.len() {
        return Err(CodecError::Format(format!(
            "{} trailing bytes after payload",
            body.len() - r.pos
        )));
    }

    let require_broadcast = || {
        if destination_id == BROADCAST_ID {
            Ok(())
        } else {
            Err(CodecError::Format(format!(
                "broadcast frame addressed to {destination_id:#06x}"
            )))
        }
    };

    match tag {
        TAG_BEACON => {
            require_broadcast()?;
            let interval: [u8; BEACON_PAYLOAD_LEN] = payload.try_into().map_err(|_| {
                CodecError::Format(format!("beacon payload must be 4 bytes, got {len}"))
            })?;
            Ok(Frame::Beacon(Beacon {
                bitrate_code,
                source_id,
                beacon_number: counter,
                interval_slots: u32::from_be_bytes(interval),
            }))
        }
        TAG_STATUS_UPDATE => {
            if destination_id == BROADCAST_ID {
                return Err(CodecError::Format(
                    "status update addressed to broadcast".into(),
                ));
            }
            Ok(Frame::StatusUpdate(StatusUpdate {
                bitrate_code,
                destination_id,
                source_id,
                slot_number: counter,
                payload: payload.to_vec(),
            }))
        }
        _ => {
            require_broadcast()?;
            let id = feedback_id.expect("read for feedback frames");
            Ok(Frame::Feedback(Feedback {
                bitrate_code,
                source_id,
                slot_number: counter,
                feedback_id: (id != NO_DELIVERY_ID).then_some(id),
                payload: payload.to_vec(),
            }))
        }
    }
}
