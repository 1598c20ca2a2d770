//! Decentralized position sharing.
//!
//! Every robot broadcasts fixed-size binary [`PositionReport`]s and keeps
//! its own [`PeerTable`]; there is no coordinator. [`Bus`] stands in for
//! the radio: per-recipient Bernoulli drops and a fixed latency, both
//! driven by a seeded generator.
//!
//! Report layout (16 bytes, multi-byte fields big-endian):
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 1    | magic `0x52`                   |
//! | 1      | 1    | robot id                       |
//! | 2      | 2    | sequence number                |
//! | 4      | 4    | x, mm, signed                  |
//! | 8      | 4    | y, mm, signed                  |
//! | 12     | 2    | heading, milliradians, signed  |
//! | 14     | 1    | flags (bit 0: corner-localized)|
//! | 15     | 1    | checksum, byte sum = 0 mod 256 |

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::Pose;

pub const REPORT_MAGIC: u8 = 0x52;
pub const REPORT_LEN: usize = 16;
pub const FLAG_LOCALIZED: u8 = 0x01;

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("report must be {REPORT_LEN} bytes, got {0}")]
    WrongLength(usize),
    #[error("bad magic byte {0:#04x}")]
    BadMagic(u8),
    #[error("checksum mismatch: report sums to {sum:#04x}")]
    Checksum { sum: u8 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PositionReport {
    pub robot_id: u8,
    pub seq: u16,
    pub x_mm: i32,
    pub y_mm: i32,
    pub theta_mrad: i16,
    pub flags: u8,
}

impl PositionReport {
    /// Positions keep whole millimetres (fraction dropped); heading is
    /// rounded to the nearest milliradian.
    pub fn from_pose(robot_id: u8, seq: u16, pose: Pose, localized: bool) -> Self {
        Self {
            robot_id,
            seq,
            x_mm: pose.x.trunc() as i32,
            y_mm: pose.y.trunc() as i32,
            theta_mrad: (pose.theta * 1000.0).round() as i16,
            flags: if localized { FLAG_LOCALIZED } else { 0 },
        }
    }

    pub fn localized(&self) -> bool {
        self.flags & FLAG_LOCALIZED != 0
    }

    pub fn pose(&self) -> Pose {
        Pose::new(
            f64::from(self.x_mm),
            f64::from(self.y_mm),
            f64::from(self.theta_mrad) / 1000.0,
        )
    }

    pub fn encode(&self) -> [u8; REPORT_LEN] {
        let mut out = [0u8; REPORT_LEN];
        out[0] = REPORT_MAGIC;
        out[1] = self.robot_id;
        out[2..4].copy_from_slice(&self.seq.to_be_bytes());
        out[4..8].copy_from_slice(&self.x_mm.to_be_bytes());
        out[8..12].copy_from_slice(&self.y_mm.to_be_bytes());
        out[12..14].copy_from_slice(&self.theta_mrad.to_be_bytes());
        out[14] = self.flags;
        let sum = out[..15].iter().fold(0u8, |a, b| a.wrapping_add(*b));
        out[15] = sum.wrapping_neg();
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ReportError> {
        let bytes: &[u8; REPORT_LEN] = bytes
            .try_into()
            .map_err(|_| ReportError::WrongLength(bytes.len()))?;
        if bytes[0] != REPORT_MAGIC {
            return Err(ReportError::BadMagic(bytes[0]));
        }
        let sum = bytes.iter().fold(0u8, |a, b| a.wrapping_add(*b));
        if sum != 0 {
            return Err(ReportError::Checksum { sum });
        }
        Ok(Self {
            robot_id: bytes[1],
            seq: u16::from_be_bytes([bytes[2], bytes[3]]),
            x_mm: i32::from_be_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]),
            y_mm: i32::from_be_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]),
            theta_mrad: i16::from_be_bytes([bytes[12], bytes[13]]),
            flags: bytes[14],
        })
    }
}

pub fn encode_report(report: &PositionReport) -> [u8; REPORT_LEN] {
    report.encode()
}

pub fn decode_report(bytes: &[u8]) -> Result<PositionReport, ReportError> {
    PositionReport::decode(bytes)
}

/// Serial-number comparison with a half-range window: `a` is newer than
/// `b` iff `(a - b) mod 2^16` lies in `1..32768`.
pub fn seq_newer(a: u16, b: u16) -> bool {
    let d = a.wrapping_sub(b);
    d != 0 && d < 0x8000
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BusConfig {
    pub drop_probability: f64,
    pub latency_ticks: u64,
    pub seed: u64,
}

impl Default for BusConfig {
    fn default() -> Self {
        Self {
            drop_probability: 0.0,
            latency_ticks: 0,
            seed: 0,
        }
    }
}

impl BusConfig {
    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.drop_probability)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Delivery {
    pub tick: u64,
    pub sender: u8,
    pub recipient: u8,
    pub report: PositionReport,
}

/// What happened to one (sender, recipient) copy of a broadcast.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BusLogEntry {
    pub sent_tick: u64,
    pub sender: u8,
    pub recipient: u8,
    pub seq: u16,
    pub dropped: bool,
}

#[derive(Clone, Debug)]
struct InFlight {
    due: u64,
    sender: u8,
    recipient: u8,
    bytes: [u8; REPORT_LEN],
}

/// Simulated broadcast medium shared by a fixed set of robots.
#[derive(Clone, Debug)]
pub struct Bus {
    config: BusConfig,
    members: Vec<u8>,
    queue: VecDeque<InFlight>,
    rng: ChaCha8Rng,
    log: Vec<BusLogEntry>,
}

impl Bus {
    pub fn new(config: BusConfig, members: impl IntoIterator<Item = u8>) -> Self {
        let mut members: Vec<u8> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            members,
            queue: VecDeque::new(),
            log: Vec::new(),
        }
    }

    pub fn log(&self) -> &[BusLogEntry] {
        &self.log
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    /// Queues one copy per other member, each dropped independently.
    pub fn broadcast(&mut self, sender: u8, report: &PositionReport, current_tick: u64) {
        let bytes = report.encode();
        let due = current_tick + self.config.latency_ticks;
        for &recipient in self.members.iter().filter(|&&m| m != sender) {
            // always draw so the stream does not depend on the probability edge cases
            let draw: f64 = self.rng.gen();
            let dropped = draw < self.config.drop_probability;
            self.log.push(BusLogEntry {
                sent_tick: current_tick,
                sender,
                recipient,
                seq: report.seq,
                dropped,
            });
            if !dropped {
                self.queue.push_back(InFlight {
                    due,
                    sender,
                    recipient,
                    bytes,
                });
            }
        }
    }

    /// Pops every message due at or before `current_tick`, in send order.
    pub fn deliver_due(&mut self, current_tick: u64) -> Vec<Delivery> {
        let mut out = Vec::new();
        while self.queue.front().is_some_and(|m| m.due <= current_tick) {
            let msg = self.queue.pop_front().expect("front checked");
            // bytes were produced by `encode`; a failure here would be a codec bug
            let report =
                PositionReport::decode(&msg.bytes).expect("bus carries well-formed reports");
            out.push(Delivery {
                tick: current_tick,
                sender: msg.sender,
                recipient: msg.recipient,
                report,
            });
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PeerEntry {
    pub report: PositionReport,
    pub receive_tick: u64,
}

/// Latest known report per peer, freshest sequence number wins.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PeerTable {
    entries: BTreeMap<u8, PeerEntry>,
}

impl PeerTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns whether the table changed.
    pub fn update(&mut self, report: PositionReport, receive_tick: u64) -> bool {
        match self.entries.get(&report.robot_id) {
            Some(existing) if !seq_newer(report.seq, existing.report.seq) => false,
            _ => {
                self.entries.insert(
                    report.robot_id,
                    PeerEntry {
                        report,
                        receive_tick,
                    },
                );
                true
            }
        }
    }

    pub fn get(&self, robot_id: u8) -> Option<&PeerEntry> {
        self.entries.get(&robot_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u8, &PeerEntry)> {
        self.entries.iter()
    }
}

pub fn peer_update(table: &mut PeerTable, report: PositionReport, receive_tick: u64) -> bool {
    table.update(report, receive_tick)
}
