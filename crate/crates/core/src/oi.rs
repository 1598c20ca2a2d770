//! Open Interface packet codec.
//!
//! Covers the handful of Create 2 OI packets the wall finder consumes
//! (bumps, wheel encoders, light bumpers), the Drive Direct command, and
//! the query-stream framing used to deliver sensor packets every control
//! tick:
//!
//! ```text
//! [0x13][n][id1][data1...][id2][data2...]...[checksum]
//! ```
//!
//! `n` counts the bytes between the length byte and the checksum, and the
//! byte sum of the whole frame is zero modulo 256.

use thiserror::Error;

/// First byte of every query-stream frame.
pub const QUERY_STREAM_HEADER: u8 = 0x13;
/// Drive Direct opcode (decimal 145).
pub const DRIVE_DIRECT_OPCODE: u8 = 0x91;
/// Largest wheel speed the OI accepts, in mm/s.
pub const MAX_WHEEL_SPEED: i32 = 500;

pub const PACKET_BUMPS: u8 = 7;
pub const PACKET_LEFT_ENCODER: u8 = 43;
pub const PACKET_RIGHT_ENCODER: u8 = 44;
pub const PACKET_LIGHT_BUMPER: u8 = 45;
/// Light bump signal packets run from 46 (left) to 51 (right).
pub const PACKET_LIGHT_SIGNAL_FIRST: u8 = 46;
pub const PACKET_LIGHT_SIGNAL_LAST: u8 = 51;

/// Errors produced while encoding or decoding OI bytes.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum OiError {
    #[error("{what} = {value} is outside {min}..={max}")]
    Range {
        what: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },
    /// A packet carried a value its documentation does not allow.
    #[error("packet {packet}: illegal value {value:#06x}")]
    Protocol { packet: u8, value: u16 },
    #[error("checksum mismatch: frame sums to {sum:#04x}, expected 0x00")]
    Checksum { sum: u8 },
    #[error("unknown packet id {0}")]
    UnknownPacketId(u8),
    #[error("truncated frame: needed {expected} bytes, have {got}")]
    TruncatedFrame { expected: usize, got: usize },
    #[error("expected stream header 0x13, found {0:#04x}")]
    BadHeader(u8),
    #[error("{0} trailing bytes after frame")]
    TrailingBytes(usize),
}

fn range(what: &'static str, value: i64, min: i64, max: i64) -> Result<(), OiError> {
    if (min..=max).contains(&value) {
        Ok(())
    } else {
        Err(OiError::Range {
            what,
            value,
            min,
            max,
        })
    }
}

/// Raw packet 7 byte. Only the low four bits are defined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BumpByte(u8);

impl BumpByte {
    pub const MAX: u8 = 15;
    pub const NONE: BumpByte = BumpByte(0);

    pub fn new(value: u8) -> Result<Self, OiError> {
        if value > Self::MAX {
            return Err(OiError::Protocol {
                packet: PACKET_BUMPS,
                value: value.into(),
            });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn decode(self) -> BumpState {
        BumpState {
            bump_right: self.0 & 0b0001 != 0,
            bump_left: self.0 & 0b0010 != 0,
            wheel_drop_right: self.0 & 0b0100 != 0,
            wheel_drop_left: self.0 & 0b1000 != 0,
        }
    }
}

impl TryFrom<u8> for BumpByte {
    type Error = OiError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

/// Decoded bumper and wheel-drop bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct BumpState {
    pub bump_left: bool,
    pub bump_right: bool,
    pub wheel_drop_left: bool,
    pub wheel_drop_right: bool,
}

impl BumpState {
    pub fn to_byte(self) -> BumpByte {
        BumpByte(
            u8::from(self.bump_right)
                | u8::from(self.bump_left) << 1
                | u8::from(self.wheel_drop_right) << 2
                | u8::from(self.wheel_drop_left) << 3,
        )
    }
}

impl From<BumpState> for BumpByte {
    fn from(state: BumpState) -> Self {
        state.to_byte()
    }
}

impl From<BumpByte> for BumpState {
    fn from(byte: BumpByte) -> Self {
        byte.decode()
    }
}

pub fn decode_bumps(byte: u8) -> Result<BumpState, OiError> {
    BumpByte::new(byte).map(BumpByte::decode)
}

/// Cumulative wheel encoder registers (packets 43 and 44).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct EncoderCounts {
    pub left: i16,
    pub right: i16,
}

impl EncoderCounts {
    pub fn to_bytes(self) -> ([u8; 2], [u8; 2]) {
        (self.left.to_be_bytes(), self.right.to_be_bytes())
    }
}

pub fn decode_encoder_pair(left: [u8; 2], right: [u8; 2]) -> EncoderCounts {
    EncoderCounts {
        left: i16::from_be_bytes(left),
        right: i16::from_be_bytes(right),
    }
}

/// The six light bumper sensors, in bit order of packet 45.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LightBumper {
    Left,
    FrontLeft,
    CenterLeft,
    CenterRight,
    FrontRight,
    Right,
}

impl LightBumper {
    pub const ALL: [LightBumper; 6] = [
        LightBumper::Left,
        LightBumper::FrontLeft,
        LightBumper::CenterLeft,
        LightBumper::CenterRight,
        LightBumper::FrontRight,
        LightBumper::Right,
    ];

    pub fn bit(self) -> u8 {
        self as u8
    }

    /// Packet id of the matching analog signal (46..=51).
    pub fn signal_packet(self) -> u8 {
        PACKET_LIGHT_SIGNAL_FIRST + self as u8
    }

    pub fn from_signal_packet(id: u8) -> Option<Self> {
        id.checked_sub(PACKET_LIGHT_SIGNAL_FIRST)
            .and_then(|i| Self::ALL.get(usize::from(i)).copied())
    }

    pub fn name(self) -> &'static str {
        match self {
            LightBumper::Left => "left",
            LightBumper::FrontLeft => "front-left",
            LightBumper::CenterLeft => "center-left",
            LightBumper::CenterRight => "center-right",
            LightBumper::FrontRight => "front-right",
            LightBumper::Right => "right",
        }
    }
}

/// Packet 45. Bits 0..=5 are the six detections; the documented range is
/// 0..=127, so bit 6 is carried through untouched and bit 7 is illegal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct LightBumperBits(u8);

impl LightBumperBits {
    pub const MAX: u8 = 127;

    pub fn new(value: u8) -> Result<Self, OiError> {
        if value > Self::MAX {
            return Err(OiError::Protocol {
                packet: PACKET_LIGHT_BUMPER,
                value: value.into(),
            });
        }
        Ok(Self(value))
    }

    pub fn from_detections(detections: [bool; 6]) -> Self {
        Self(
            detections
                .iter()
                .enumerate()
                .fold(0, |acc, (i, &d)| acc | u8::from(d) << i),
        )
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_set(self, sensor: LightBumper) -> bool {
        self.0 & (1 << sensor.bit()) != 0
    }

    pub fn detections(self) -> [bool; 6] {
        LightBumper::ALL.map(|s| self.is_set(s))
    }
}

pub fn decode_light_bumper(byte: u8) -> Result<LightBumperBits, OiError> {
    LightBumperBits::new(byte)
}

/// One analog light bump signal (packets 46..=51).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LightBumpSignal(u16);

impl LightBumpSignal {
    pub const MAX: u16 = 4095;

    pub fn new(value: u16) -> Result<Self, OiError> {
        if value > Self::MAX {
            return Err(OiError::Protocol {
                packet: PACKET_LIGHT_SIGNAL_FIRST,
                value,
            });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> u16 {
        self.0
    }

    pub fn to_be_bytes(self) -> [u8; 2] {
        self.0.to_be_bytes()
    }
}

pub fn decode_light_signal(bytes: [u8; 2]) -> Result<LightBumpSignal, OiError> {
    LightBumpSignal::new(u16::from_be_bytes(bytes))
}

/// Drive Direct (opcode 145): right wheel first, then left, both big-endian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct DriveDirectCommand {
    pub right_mm_s: i16,
    pub left_mm_s: i16,
}

impl DriveDirectCommand {
    pub const LEN: usize = 5;

    pub fn new(right_mm_s: i32, left_mm_s: i32) -> Result<Self, OiError> {
        range(
            "right wheel speed",
            right_mm_s.into(),
            (-MAX_WHEEL_SPEED).into(),
            MAX_WHEEL_SPEED.into(),
        )?;
        range(
            "left wheel speed",
            left_mm_s.into(),
            (-MAX_WHEEL_SPEED).into(),
            MAX_WHEEL_SPEED.into(),
        )?;
        // both fit in i16 after the range check
        Ok(Self {
            right_mm_s: right_mm_s as i16,
            left_mm_s: left_mm_s as i16,
        })
    }

    pub fn encode(self) -> [u8; 5] {
        let r = self.right_mm_s.to_be_bytes();
        let l = self.left_mm_s.to_be_bytes();
        [DRIVE_DIRECT_OPCODE, r[0], r[1], l[0], l[1]]
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, OiError> {
        if bytes.len() < Self::LEN {
            return Err(OiError::TruncatedFrame {
                expected: Self::LEN,
                got: bytes.len(),
            });
        }
        if bytes.len() > Self::LEN {
            return Err(OiError::TrailingBytes(bytes.len() - Self::LEN));
        }
        if bytes[0] != DRIVE_DIRECT_OPCODE {
            return Err(OiError::BadHeader(bytes[0]));
        }
        let right = i16::from_be_bytes([bytes[1], bytes[2]]);
        let left = i16::from_be_bytes([bytes[3], bytes[4]]);
        Self::new(right.into(), left.into())
    }
}

pub fn encode_drive_direct(right_mm_s: i32, left_mm_s: i32) -> Result<[u8; 5], OiError> {
    DriveDirectCommand::new(right_mm_s, left_mm_s).map(DriveDirectCommand::encode)
}

/// A decoded sensor packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Packet {
    Bumps(BumpState),
    LeftEncoder(i16),
    RightEncoder(i16),
    LightBumper(LightBumperBits),
    LightSignal(LightBumper, LightBumpSignal),
}

impl Packet {
    pub fn id(&self) -> u8 {
        match self {
            Packet::Bumps(_) => PACKET_BUMPS,
            Packet::LeftEncoder(_) => PACKET_LEFT_ENCODER,
            Packet::RightEncoder(_) => PACKET_RIGHT_ENCODER,
            Packet::LightBumper(_) => PACKET_LIGHT_BUMPER,
            Packet::LightSignal(sensor, _) => sensor.signal_packet(),
        }
    }

    /// Number of data bytes that follow packet `id`, if the id is supported.
    pub fn data_len(id: u8) -> Option<usize> {
        match id {
            PACKET_BUMPS | PACKET_LIGHT_BUMPER => Some(1),
            PACKET_LEFT_ENCODER | PACKET_RIGHT_ENCODER => Some(2),
            PACKET_LIGHT_SIGNAL_FIRST..=PACKET_LIGHT_SIGNAL_LAST => Some(2),
            _ => None,
        }
    }

    pub fn write_data(&self, out: &mut Vec<u8>) {
        match *self {
            Packet::Bumps(state) => out.push(state.to_byte().value()),
            Packet::LeftEncoder(c) | Packet::RightEncoder(c) => out.extend(c.to_be_bytes()),
            Packet::LightBumper(bits) => out.push(bits.value()),
            Packet::LightSignal(_, signal) => out.extend(signal.to_be_bytes()),
        }
    }

    /// Decodes the data bytes of packet `id`. `data` must be exactly
    /// [`Packet::data_len`] bytes long.
    pub fn decode(id: u8, data: &[u8]) -> Result<Self, OiError> {
        let expected = Self::data_len(id).ok_or(OiError::UnknownPacketId(id))?;
        if data.len() < expected {
            return Err(OiError::TruncatedFrame {
                expected,
                got: data.len(),
            });
        }
        if data.len() > expected {
            return Err(OiError::TrailingBytes(data.len() - expected));
        }
        Ok(match id {
            PACKET_BUMPS => Packet::Bumps(decode_bumps(data[0])?),
            PACKET_LEFT_ENCODER => Packet::LeftEncoder(i16::from_be_bytes([data[0], data[1]])),
            PACKET_RIGHT_ENCODER => Packet::RightEncoder(i16::from_be_bytes([data[0], data[1]])),
            PACKET_LIGHT_BUMPER => Packet::LightBumper(decode_light_bumper(data[0])?),
            _ => {
                let sensor =
                    LightBumper::from_signal_packet(id).ok_or(OiError::UnknownPacketId(id))?;
                let signal =
                    decode_light_signal([data[0], data[1]]).map_err(|_| OiError::Protocol {
                        packet: id,
                        value: u16::from_be_bytes([data[0], data[1]]),
                    })?;
                Packet::LightSignal(sensor, signal)
            }
        })
    }
}

/// One query-stream frame: an ordered, non-empty list of packets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryStreamFrame {
    packets: Vec<Packet>,
}

impl QueryStreamFrame {
    pub fn new(packets: Vec<Packet>) -> Result<Self, OiError> {
        range("packet count", packets.len() as i64, 1, i64::from(u8::MAX))?;
        let payload: usize = packets
            .iter()
            .map(|p| 1 + Packet::data_len(p.id()).unwrap_or(0))
            .sum();
        range(
            "frame payload length",
            payload as i64,
            1,
            i64::from(u8::MAX),
        )?;
        Ok(Self { packets })
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn into_packets(self) -> Vec<Packet> {
        self.packets
    }

    pub fn packet_ids(&self) -> Vec<u8> {
        self.packets.iter().map(Packet::id).collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![QUERY_STREAM_HEADER, 0];
        for packet in &self.packets {
            out.push(packet.id());
            packet.write_data(&mut out);
        }
        // validated in `new`
        out[1] = (out.len() - 2) as u8;
        let sum = out.iter().fold(0u8, |acc, b| acc.wrapping_add(*b));
        out.push(sum.wrapping_neg());
        out
    }

    fn decode_payload(payload: &[u8]) -> Result<Self, OiError> {
        let mut packets = Vec::new();
        let mut rest = payload;
        while let Some((&id, tail)) = rest.split_first() {
            let len = Packet::data_len(id).ok_or(OiError::UnknownPacketId(id))?;
            if tail.len() < len {
                return Err(OiError::TruncatedFrame {
                    expected: len,
                    got: tail.len(),
                });
            }
            packets.push(Packet::decode(id, &tail[..len])?);
            rest = &tail[len..];
        }
        Self::new(packets)
    }
}

pub fn encode_query_stream(packets: &[Packet]) -> Result<Vec<u8>, OiError> {
    QueryStreamFrame::new(packets.to_vec()).map(|f| f.encode())
}

fn byte_sum(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0u8, |acc, b| acc.wrapping_add(*b))
}

/// Parses exactly one complete frame.
pub fn parse_query_stream(bytes: &[u8]) -> Result<QueryStreamFrame, OiError> {
    let Some(&header) = bytes.first() else {
        return Err(OiError::TruncatedFrame {
            expected: 3,
            got: 0,
        });
    };
    if header != QUERY_STREAM_HEADER {
        return Err(OiError::BadHeader(header));
    }
    let Some(&n) = bytes.get(1) else {
        return Err(OiError::TruncatedFrame {
            expected: 3,
            got: bytes.len(),
        });
    };
    let expected = usize::from(n) + 3;
    if bytes.len() < expected {
        return Err(OiError::TruncatedFrame {
            expected,
            got: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(OiError::TrailingBytes(bytes.len() - expected));
    }
    let sum = byte_sum(bytes);
    if sum != 0 {
        return Err(OiError::Checksum { sum });
    }
    QueryStreamFrame::decode_payload(&bytes[2..expected - 1])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ParseState {
    Header,
    Length,
    Body { remaining: usize },
    Checksum,
}

/// Push-style incremental frame parser.
///
/// Bytes outside a frame are skipped until the next `0x13`. A frame that
/// fails its checksum or payload decode is reported once and dropped.
#[derive(Clone, Debug)]
pub struct StreamParser {
    state: ParseState,
    frame: Vec<u8>,
    skipped: usize,
}

impl Default for StreamParser {
    fn default() -> Self {
        Self::new()
    }
}

impl StreamParser {
    pub fn new() -> Self {
        Self {
            state: ParseState::Header,
            frame: Vec::with_capacity(64),
            skipped: 0,
        }
    }

    /// Bytes discarded while hunting for a header.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// True when a frame is partially buffered.
    pub fn is_mid_frame(&self) -> bool {
        self.state != ParseState::Header
    }

    pub fn push(&mut self, byte: u8) -> Option<Result<QueryStreamFrame, OiError>> {
        match self.state {
            ParseState::Header => {
                if byte == QUERY_STREAM_HEADER {
                    self.frame.clear();
                    self.frame.push(byte);
                    self.state = ParseState::Length;
                } else {
                    self.skipped += 1;
                }
                None
            }
            ParseState::Length => {
                self.frame.push(byte);
                self.state = if byte == 0 {
                    ParseState::Checksum
                } else {
                    ParseState::Body {
                        remaining: usize::from(byte),
                    }
                };
                None
            }
            ParseState::Body { remaining } => {
                self.frame.push(byte);
                self.state = if remaining == 1 {
                    ParseState::Checksum
                } else {
                    ParseState::Body {
                        remaining: remaining - 1,
                    }
                };
                None
            }
            ParseState::Checksum => {
                self.frame.push(byte);
                self.state = ParseState::Header;
                Some(parse_query_stream(&self.frame))
            }
        }
    }

    pub fn feed(&mut self, bytes: &[u8]) -> Vec<Result<QueryStreamFrame, OiError>> {
        bytes.iter().filter_map(|&b| self.push(b)).collect()
    }

    /// Ends the stream; a partially received frame is an error.
    pub fn finish(self) -> Result<(), OiError> {
        if !self.is_mid_frame() {
            return Ok(());
        }
        let expected = match self.state {
            ParseState::Length => 3,
            _ => usize::from(self.frame[1]) + 3,
        };
        Err(OiError::TruncatedFrame {
            expected,
            got: self.frame.len(),
        })
    }
}
