use proptest::collection::vec;
use proptest::prelude::*;
use wallfinder_core::oi::{
    decode_bumps, decode_encoder_pair, decode_light_bumper, decode_light_signal,
    encode_query_stream, parse_query_stream, LightBumper,
};
use wallfinder_core::{
    BumpState, DriveDirectCommand, EncoderCounts, LightBumpSignal, LightBumperBits, OiError,
    Packet, StreamParser,
};

fn packet() -> impl Strategy<Value = Packet> {
    prop_oneof![
        (0u8..16).prop_map(|b| Packet::Bumps(decode_bumps(b).unwrap())),
        any::<i16>().prop_map(Packet::LeftEncoder),
        any::<i16>().prop_map(Packet::RightEncoder),
        (0u8..=127).prop_map(|b| Packet::LightBumper(LightBumperBits::new(b).unwrap())),
        (0usize..6, 0u16..=4095).prop_map(|(i, v)| Packet::LightSignal(
            LightBumper::ALL[i],
            LightBumpSignal::new(v).unwrap()
        )),
    ]
}

fn frame_packets() -> impl Strategy<Value = Vec<Packet>> {
    vec(packet(), 1..12)
}

#[test]
fn every_bump_byte_round_trips() {
    for v in 0u8..16 {
        let state = decode_bumps(v).unwrap();
        assert_eq!(state.to_byte().value(), v);
    }
    for v in 16u8..=255 {
        assert!(
            matches!(decode_bumps(v), Err(OiError::Protocol { packet: 7, .. })),
            "{v}"
        );
    }
}

#[test]
fn every_light_bumper_byte_round_trips() {
    for v in 0u8..=127 {
        let bits = decode_light_bumper(v).unwrap();
        assert_eq!(bits.value(), v);
        let six = bits.detections();
        assert_eq!(LightBumperBits::from_detections(six).value(), v & 0x3f);
    }
    for v in 128u8..=255 {
        assert!(decode_light_bumper(v).is_err(), "{v}");
    }
}

#[test]
fn every_encoder_value_round_trips() {
    for raw in i16::MIN..=i16::MAX {
        let c = EncoderCounts {
            left: raw,
            right: raw.wrapping_neg(),
        };
        let (l, r) = c.to_bytes();
        assert_eq!(decode_encoder_pair(l, r), c);
    }
}

#[test]
fn light_signal_range() {
    for v in 0u16..=4095 {
        assert_eq!(decode_light_signal(v.to_be_bytes()).unwrap().value(), v);
    }
    for v in [4096u16, 0x8000, 0xffff] {
        assert!(decode_light_signal(v.to_be_bytes()).is_err());
    }
}

#[test]
fn single_byte_frames_for_each_bump_value() {
    for v in 0u8..16 {
        let bytes = encode_query_stream(&[Packet::Bumps(decode_bumps(v).unwrap())]).unwrap();
        let sum: u32 = bytes.iter().map(|&b| u32::from(b)).sum();
        assert_eq!(&bytes[..4], &[0x13, 0x02, 0x07, v]);
        assert_eq!(sum % 256, 0);
    }
}

proptest! {
    #[test]
    fn frames_round_trip(packets in frame_packets()) {
        let bytes = encode_query_stream(&packets).unwrap();
        prop_assert_eq!(bytes[0], 0x13);
        prop_assert_eq!(usize::from(bytes[1]), bytes.len() - 3);
        let sum = bytes.iter().fold(0u8, |acc, &b| acc.wrapping_add(b));
        prop_assert_eq!(sum, 0);
        let frame = parse_query_stream(&bytes).unwrap();
        prop_assert_eq!(frame.packets(), packets.as_slice());
    }

    #[test]
    fn payload_corruption_is_a_checksum_error(
        packets in frame_packets(),
        at in any::<prop::sample::Index>(),
        flip in 1u8..=255,
    ) {
        let mut bytes = encode_query_stream(&packets).unwrap();
        // Bytes after the length field are covered by the checksum alone.
        let i = 2 + at.index(bytes.len() - 2);
        bytes[i] ^= flip;
        let err = parse_query_stream(&bytes).unwrap_err();
        prop_assert!(matches!(err, OiError::Checksum { .. }), "{:?}", err);
    }

    #[test]
    fn any_single_byte_corruption_is_rejected(
        packets in frame_packets(),
        at in any::<prop::sample::Index>(),
        flip in 1u8..=255,
    ) {
        let mut bytes = encode_query_stream(&packets).unwrap();
        let i = at.index(bytes.len());
        bytes[i] ^= flip;
        prop_assert!(parse_query_stream(&bytes).is_err());
    }

    #[test]
    fn byte_at_a_time_matches_whole_buffer(
        frames in vec(frame_packets(), 1..6),
        noise in vec(any::<u8>().prop_filter("not a header", |&b| b != 0x13), 0..4),
    ) {
        let mut stream = noise.clone();
        for f in &frames {
            stream.extend(encode_query_stream(f).unwrap());
        }

        let mut whole = StreamParser::new();
        let at_once = whole.feed(&stream);

        let mut bytewise = StreamParser::new();
        let one_by_one: Vec<_> = stream.iter().filter_map(|&b| bytewise.push(b)).collect();

        prop_assert_eq!(&at_once, &one_by_one);
        let decoded: Vec<Vec<Packet>> = at_once.into_iter().map(|r| r.unwrap().into_packets()).collect();
        prop_assert_eq!(decoded, frames);
        prop_assert_eq!(bytewise.skipped(), noise.len());
        prop_assert!(bytewise.finish().is_ok());
    }

    #[test]
    fn cut_stream_reports_truncation(packets in frame_packets(), cut in any::<prop::sample::Index>()) {
        let bytes = encode_query_stream(&packets).unwrap();
        let keep = 1 + cut.index(bytes.len() - 1);
        let mut parser = StreamParser::new();
        prop_assert!(parser.feed(&bytes[..keep]).is_empty());
        let finished = parser.finish();
        prop_assert!(matches!(finished, Err(OiError::TruncatedFrame { .. })), "{:?}", finished);
    }

    #[test]
    fn drive_direct_round_trips(right in -500i32..=500, left in -500i32..=500) {
        let cmd = DriveDirectCommand::new(right, left).unwrap();
        let bytes = cmd.encode();
        prop_assert_eq!(bytes[0], 0x91);
        prop_assert_eq!(i16::from_be_bytes([bytes[1], bytes[2]]), right as i16);
        prop_assert_eq!(i16::from_be_bytes([bytes[3], bytes[4]]), left as i16);
        prop_assert_eq!(DriveDirectCommand::decode(&bytes).unwrap(), cmd);
    }

    #[test]
    fn drive_direct_rejects_out_of_range(speed in 501i32..=40_000, neg in any::<bool>(), right_side in any::<bool>()) {
        let s = if neg { -speed } else { speed };
        let r = if right_side { DriveDirectCommand::new(s, 0) } else { DriveDirectCommand::new(0, s) };
        prop_assert!(r.is_err());
    }

    #[test]
    fn bump_state_bits(b in 0u8..16) {
        let BumpState { bump_right, bump_left, wheel_drop_right, wheel_drop_left } = decode_bumps(b).unwrap();
        prop_assert_eq!(bump_right, b & 1 != 0);
        prop_assert_eq!(bump_left, b & 2 != 0);
        prop_assert_eq!(wheel_drop_right, b & 4 != 0);
        prop_assert_eq!(wheel_drop_left, b & 8 != 0);
    }
}
