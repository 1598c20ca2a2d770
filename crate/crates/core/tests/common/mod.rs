#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use wallfinder_core::oi::LightBumper;
use wallfinder_core::{
    BumpState, LightBumpSignal, LightBumperBits, Packet, PositionReport, Scenario,
};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

pub fn load_scenario(name: &str) -> Scenario {
    Scenario::load(&scenario_path(name)).expect("shipped scenario loads")
}

pub fn random_packet<R: Rng>(rng: &mut R) -> Packet {
    match rng.gen_range(0..5) {
        0 => {
            let b: u8 = rng.gen_range(0..16);
            Packet::Bumps(BumpState {
                bump_right: b & 1 != 0,
                bump_left: b & 2 != 0,
                wheel_drop_right: b & 4 != 0,
                wheel_drop_left: b & 8 != 0,
            })
        }
        1 => Packet::LeftEncoder(rng.gen()),
        2 => Packet::RightEncoder(rng.gen()),
        3 => Packet::LightBumper(LightBumperBits::new(rng.gen_range(0..=127)).unwrap()),
        _ => {
            let sensor = LightBumper::ALL[rng.gen_range(0..6)];
            Packet::LightSignal(
                sensor,
                LightBumpSignal::new(rng.gen_range(0..=4095)).unwrap(),
            )
        }
    }
}

pub fn random_packets<R: Rng>(rng: &mut R) -> Vec<Packet> {
    let n = rng.gen_range(1..=10);
    (0..n).map(|_| random_packet(rng)).collect()
}

pub fn random_report<R: Rng>(rng: &mut R) -> PositionReport {
    PositionReport {
        robot_id: rng.gen(),
        seq: rng.gen(),
        x_mm: rng.gen(),
        y_mm: rng.gen(),
        theta_mrad: rng.gen(),
        flags: rng.gen(),
    }
}

/// Signed difference of two 16-bit registers, computed the long way.
pub fn delta_oracle(prev: i16, curr: i16) -> i16 {
    let d = (i32::from(curr) - i32::from(prev)).rem_euclid(65536);
    if d >= 32768 {
        (d - 65536) as i16
    } else {
        d as i16
    }
}

/// Midpoint integration of constant wheel speeds (mm/s) over `duration`.
pub fn fine_step(
    mut pose: (f64, f64, f64),
    v_left: f64,
    v_right: f64,
    wheel_base: f64,
    duration: f64,
    steps: usize,
) -> (f64, f64, f64) {
    let h = duration / steps as f64;
    let v = 0.5 * (v_left + v_right);
    let w = (v_right - v_left) / wheel_base;
    for _ in 0..steps {
        let mid = pose.2 + 0.5 * w * h;
        pose.0 += v * mid.cos() * h;
        pose.1 += v * mid.sin() * h;
        pose.2 += w * h;
    }
    pose
}
