//! Fixed-timestep simulation of a disc robot in a rectangular room.
//!
//! The world frame has its origin at the bottom-left corner. Walls are hard:
//! after every physics substep the robot centre is clamped into the box
//! `[r, width - r] x [r, height - r]` and the blocked part of the motion is
//! discarded.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::kinematics::{integrate_pose, normalize_angle, Pose, RobotGeometry, WheelSpeeds};
use crate::oi::{BumpByte, EncoderCounts, LightBumpSignal, LightBumper, LightBumperBits};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub width: f64,
    pub height: f64,
}

impl WorldConfig {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    /// Room must be more than four radii across in both directions.
    pub fn is_valid_for(&self, radius: f64) -> bool {
        self.width.is_finite()
            && self.height.is_finite()
            && self.width > 4.0 * radius
            && self.height > 4.0 * radius
    }

    pub fn corner(&self, corner: crate::kinematics::Corner) -> (f64, f64) {
        use crate::kinematics::Corner::*;
        match corner {
            BottomLeft => (0.0, 0.0),
            BottomRight => (self.width, 0.0),
            TopLeft => (0.0, self.height),
            TopRight => (self.width, self.height),
        }
    }

    pub fn contains_disc(&self, x: f64, y: f64, radius: f64) -> bool {
        x >= radius && x <= self.width - radius && y >= radius && y <= self.height - radius
    }
}

/// What the encoders report while wall contact blocks the commanded motion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlipModel {
    /// Blocked wheels do not turn.
    #[default]
    Stall,
    /// Blocked wheels report this fraction of the blocked travel.
    Slip(f64),
}

impl SlipModel {
    fn blocked_fraction(self) -> f64 {
        match self {
            SlipModel::Stall => 0.0,
            SlipModel::Slip(f) => f,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Control (sensor query) period, s.
    pub control_dt: f64,
    pub substeps: u32,
    pub slip: SlipModel,
    pub seed: u64,
    /// Contacts within this bearing of straight ahead press both bumpers.
    pub front_half_angle_deg: f64,
    /// Light bumper sensing range beyond the body rim, mm.
    pub light_range: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            control_dt: 0.015,
            substeps: 15,
            slip: SlipModel::Stall,
            seed: 0,
            front_half_angle_deg: 10.0,
            light_range: 150.0,
        }
    }
}

impl SimConfig {
    pub fn physics_dt(&self) -> f64 {
        self.control_dt / f64::from(self.substeps)
    }

    pub fn is_valid(&self) -> bool {
        let slip_ok = match self.slip {
            SlipModel::Stall => true,
            SlipModel::Slip(f) => (0.0..=1.0).contains(&f),
        };
        self.control_dt.is_finite()
            && self.control_dt > 0.0
            && self.substeps > 0
            && slip_ok
            && self.front_half_angle_deg > 0.0
            && self.front_half_angle_deg < 90.0
            && self.light_range > 0.0
    }
}

/// Wall contact seen from the robot.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ContactInfo {
    pub in_contact: bool,
    /// Direction of the touched wall relative to the heading, positive to
    /// the robot's left.
    pub bearing: f64,
}

impl ContactInfo {
    pub const NONE: ContactInfo = ContactInfo {
        in_contact: false,
        bearing: 0.0,
    };

    fn touching(bearing: f64) -> Self {
        Self {
            in_contact: true,
            bearing,
        }
    }

    /// Keeps whichever contact is closer to straight ahead.
    fn merge(self, other: ContactInfo) -> ContactInfo {
        match (self.in_contact, other.in_contact) {
            (false, _) => other,
            (_, false) => self,
            _ if other.bearing.abs() < self.bearing.abs() => other,
            _ => self,
        }
    }
}

const COUNT_EPS: f64 = 1e-9;

/// Encoder registers driven by per-wheel travel.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct EncoderModel {
    base: [i64; 2],
    travel_mm: [f64; 2],
}

impl EncoderModel {
    fn register(&self, wheel: usize, mm_per_count: f64) -> i16 {
        // the tolerance keeps round-off in cancelled travel from reading as -1
        // Whole counts toward zero, so opposite wheels quantize symmetrically.
        let c = self.travel_mm[wheel] / mm_per_count;
        let counts = self.base[wheel] + ((c.abs() + COUNT_EPS).floor() * c.signum()) as i64;
        // two's-complement wrap into the 16-bit register
        counts as i16
    }
}

/// Ground-truth robot body.
#[derive(Clone, Debug, PartialEq)]
pub struct SimRobot {
    pub true_pose: Pose,
    pub geometry: RobotGeometry,
    pub wheel_cmd: WheelSpeeds,
    encoders: EncoderModel,
}

impl SimRobot {
    pub fn new(true_pose: Pose, geometry: RobotGeometry) -> Self {
        Self {
            true_pose,
            geometry,
            wheel_cmd: WheelSpeeds::default(),
            encoders: EncoderModel::default(),
        }
    }

    /// Starts the encoder registers at arbitrary values.
    pub fn with_encoder_counts(mut self, counts: EncoderCounts) -> Self {
        self.encoders.base = [counts.left.into(), counts.right.into()];
        self
    }

    /// Total wheel travel reported to the encoders so far, mm (left, right).
    pub fn encoder_travel(&self) -> (f64, f64) {
        (self.encoders.travel_mm[0], self.encoders.travel_mm[1])
    }
}

/// Outward normal directions of the four walls.
const EAST: f64 = 0.0;
const NORTH: f64 = FRAC_PI_2;
const WEST: f64 = PI;
const SOUTH: f64 = -FRAC_PI_2;

/// Advances the robot by one physics substep.
pub fn substep(robot: &mut SimRobot, world: &WorldConfig, dt: f64, slip: SlipModel) -> ContactInfo {
    let g = robot.geometry;
    let r = g.radius;
    let dl = f64::from(robot.wheel_cmd.left) * dt;
    let dr = f64::from(robot.wheel_cmd.right) * dt;
    let start = robot.true_pose;
    let free = integrate_pose(start, dl, dr, &g);

    let mut contact = ContactInfo::NONE;
    let mut x = free.x;
    let mut y = free.y;
    let heading = free.theta;
    let mut touch = |normal: f64| {
        contact = contact.merge(ContactInfo::touching(normalize_angle(normal - heading)))
    };
    if x > world.width - r {
        x = world.width - r;
        touch(EAST);
    } else if x < r {
        x = r;
        touch(WEST);
    }
    if y > world.height - r {
        y = world.height - r;
        touch(NORTH);
    } else if y < r {
        y = r;
        touch(SOUTH);
    }

    // Translation removed by the clamp, projected on the mid-step heading,
    // is travel the wheels did not achieve.
    let blocked = (free.x - x, free.y - y);
    let mid = start.theta + 0.5 * (dr - dl) / g.wheel_base;
    let lost = blocked.0 * mid.cos() + blocked.1 * mid.sin();
    let reported_loss = lost * (1.0 - slip.blocked_fraction());
    robot.encoders.travel_mm[0] += dl - reported_loss;
    robot.encoders.travel_mm[1] += dr - reported_loss;

    robot.true_pose = Pose::new(x, y, heading);
    contact
}

/// Advances one control period (`cfg.substeps` physics substeps).
pub fn step(robot: &mut SimRobot, world: &WorldConfig, cfg: &SimConfig) -> ContactInfo {
    let dt = cfg.physics_dt();
    (0..cfg.substeps).fold(ContactInfo::NONE, |acc, _| {
        acc.merge(substep(robot, world, dt, cfg.slip))
    })
}

/// Synthesises the packet 7 byte from a contact.
pub fn sense_bumps(contact: ContactInfo, front_half_angle: f64) -> BumpByte {
    let b = contact.bearing;
    let value = if !contact.in_contact || b.abs() > FRAC_PI_2 {
        0b00
    } else if b.abs() <= front_half_angle {
        0b11
    } else if b > 0.0 {
        0b10
    } else {
        0b01
    };
    BumpByte::new(value).expect("bump bits within range")
}

pub fn sense_encoders(robot: &SimRobot) -> EncoderCounts {
    let mpc = robot.geometry.mm_per_count;
    EncoderCounts {
        left: robot.encoders.register(0, mpc),
        right: robot.encoders.register(1, mpc),
    }
}

/// Bearing of each light bumper ray, in packet 45 bit order.
pub const LIGHT_BUMPER_BEARINGS_DEG: [f64; 6] = [60.0, 30.0, 10.0, -10.0, -30.0, -60.0];

/// Distance from `(x, y)` along direction `angle` to the room boundary.
fn ray_to_wall(world: &WorldConfig, x: f64, y: f64, angle: f64) -> f64 {
    let (s, c) = angle.sin_cos();
    let tx = if c > 1e-12 {
        (world.width - x) / c
    } else if c < -1e-12 {
        -x / c
    } else {
        f64::INFINITY
    };
    let ty = if s > 1e-12 {
        (world.height - y) / s
    } else if s < -1e-12 {
        -y / s
    } else {
        f64::INFINITY
    };
    tx.min(ty)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LightBumperReading {
    pub signals: [LightBumpSignal; 6],
    pub bits: LightBumperBits,
}

/// Linear intensity model: full scale at the rim, zero at `range` mm out.
pub fn sense_light_bumpers(
    robot: &SimRobot,
    world: &WorldConfig,
    range: f64,
) -> LightBumperReading {
    let p = robot.true_pose;
    let r = robot.geometry.radius;
    let signals = LIGHT_BUMPER_BEARINGS_DEG.map(|deg| {
        let d = ray_to_wall(world, p.x, p.y, p.theta + deg.to_radians()) - r;
        let level = (4095.0 * (1.0 - d / range).clamp(0.0, 1.0)).round() as u16;
        LightBumpSignal::new(level).expect("signal clamped to 4095")
    });
    let mut detections = [false; 6];
    for sensor in LightBumper::ALL {
        detections[sensor.bit() as usize] = signals[sensor.bit() as usize].value() > 0;
    }
    LightBumperReading {
        signals,
        bits: LightBumperBits::from_detections(detections),
    }
}
