//! Fixtures shared by the benchmarks.

use wallfinder_core::oi::LightBumper;
use wallfinder_core::{BumpByte, LightBumpSignal, LightBumperBits, Packet, Scenario};

/// The single-robot corner scenario shipped in `scenarios/`, shortened.
pub fn corner_scenario(duration_s: f64) -> Scenario {
    let text = include_str!("../../../scenarios/corner_45.toml");
    let mut s = Scenario::from_toml_str(text).expect("shipped scenario parses");
    s.duration_s = duration_s;
    s
}

/// A frame carrying every packet type the codec knows.
pub fn full_frame() -> Vec<Packet> {
    let mut packets = vec![
        Packet::Bumps(BumpByte::new(3).expect("legal").decode()),
        Packet::LeftEncoder(-12_345),
        Packet::RightEncoder(23_456),
        Packet::LightBumper(LightBumperBits::new(0b0010_1101).expect("legal")),
    ];
    packets.extend(
        LightBumper::ALL
            .iter()
            .zip([0u16, 17, 4095, 2048, 900, 1])
            .map(|(&s, v)| Packet::LightSignal(s, LightBumpSignal::new(v).expect("legal"))),
    );
    packets
}

/// The per-tick frame the simulator loops through the codec.
pub fn control_frame() -> Vec<Packet> {
    vec![
        Packet::Bumps(BumpByte::new(1).expect("legal").decode()),
        Packet::LeftEncoder(812),
        Packet::RightEncoder(-77),
    ]
}
