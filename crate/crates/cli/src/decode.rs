use wallfinder_core::oi::{DRIVE_DIRECT_OPCODE, QUERY_STREAM_HEADER};
use wallfinder_core::swarm::REPORT_MAGIC;
use wallfinder_core::{
    BumpState, DriveDirectCommand, OiError, Packet, PositionReport, StreamParser,
};

use crate::Failure;

const EXIT_PARSE: u8 = 1;

#[derive(clap::Args)]
pub struct Args {
    /// Treat the bytes as the data of this packet id (no frame).
    #[arg(long)]
    packet: Option<u8>,
    /// Hex bytes; whitespace is ignored.
    hex: Vec<String>,
}

fn parse_error(e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_PARSE, e.to_string())
}

pub fn run(args: Args) -> Result<(), Failure> {
    let text: String = args.hex.concat().split_whitespace().collect();
    let text = text.strip_prefix("0x").unwrap_or(&text);
    let bytes = hex::decode(text).map_err(|e| parse_error(format!("bad hex: {e}")))?;
    if bytes.is_empty() {
        return Err(parse_error("no bytes to decode"));
    }

    if let Some(id) = args.packet {
        let packet = Packet::decode(id, &bytes).map_err(parse_error)?;
        println!("{}", describe(&packet));
        return Ok(());
    }

    match bytes[0] {
        DRIVE_DIRECT_OPCODE => {
            let cmd = DriveDirectCommand::decode(&bytes).map_err(parse_error)?;
            println!("right={} mm/s left={} mm/s", cmd.right_mm_s, cmd.left_mm_s);
        }
        REPORT_MAGIC => {
            let r = PositionReport::decode(&bytes).map_err(parse_error)?;
            println!(
                "report robot={} seq={} x={} mm y={} mm theta={} mrad{}",
                r.robot_id,
                r.seq,
                r.x_mm,
                r.y_mm,
                r.theta_mrad,
                if r.localized() { " localized" } else { "" }
            );
        }
        QUERY_STREAM_HEADER => decode_stream(&bytes)?,
        other => {
            return Err(parse_error(format!(
                "unrecognized leading byte {other:#04x}"
            )))
        }
    }
    Ok(())
}

fn decode_stream(bytes: &[u8]) -> Result<(), Failure> {
    let mut parser = StreamParser::new();
    for (n, frame) in parser.feed(bytes).into_iter().enumerate() {
        let frame = frame.map_err(parse_error)?;
        println!("frame {}:", n + 1);
        for p in frame.packets() {
            println!("  packet {}: {}", p.id(), describe(p));
        }
    }
    if parser.skipped() > 0 {
        return Err(parse_error(format!(
            "{} stray bytes between frames",
            parser.skipped()
        )));
    }
    parser.finish().map_err(|e: OiError| parse_error(e))
}

fn describe(packet: &Packet) -> String {
    match *packet {
        Packet::Bumps(state) => describe_bumps(state),
        Packet::LeftEncoder(c) => format!("left encoder {c} counts"),
        Packet::RightEncoder(c) => format!("right encoder {c} counts"),
        Packet::LightBumper(bits) => {
            let set: Vec<_> = wallfinder_core::oi::LightBumper::ALL
                .into_iter()
                .filter(|&s| bits.is_set(s))
                .map(|s| s.name())
                .collect();
            if set.is_empty() {
                "light bumper none".to_string()
            } else {
                format!("light bumper {}", set.join(" + "))
            }
        }
        Packet::LightSignal(sensor, signal) => {
            format!("light bump {} signal {}", sensor.name(), signal.value())
        }
    }
}

fn describe_bumps(s: BumpState) -> String {
    let flags = [
        (s.bump_left, "bump left"),
        (s.bump_right, "bump right"),
        (s.wheel_drop_left, "wheel drop left"),
        (s.wheel_drop_right, "wheel drop right"),
    ];
    let set: Vec<_> = flags.iter().filter(|f| f.0).map(|f| f.1).collect();
    if set.is_empty() {
        "no bump".to_string()
    } else {
        set.join(" + ")
    }
}
