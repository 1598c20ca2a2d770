//! Differential-drive motion math.
//!
//! Heading is counter-clockwise positive in radians. The `Move` style
//! command (`forward`, `spin`) uses the opposite sign for rotation:
//! positive `spin` turns the robot clockwise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oi::{DriveDirectCommand, EncoderCounts, MAX_WHEEL_SPEED};

/// Wheel travel per encoder count: 72 mm wheel, 508.8 counts per revolution.
pub const MM_PER_COUNT: f64 = PI * 72.0 / 508.8;
/// Below this heading change an odometry step is integrated as a straight line.
pub const STRAIGHT_LINE_EPS: f64 = 1e-9;

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Planar pose in millimetres and radians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn distance_to(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotGeometry {
    /// Body radius, mm.
    pub radius: f64,
    /// Distance between the wheel contact points, mm.
    pub wheel_base: f64,
    pub mm_per_count: f64,
}

impl Default for RobotGeometry {
    fn default() -> Self {
        Self {
            radius: 117.5,
            wheel_base: 235.0,
            mm_per_count: MM_PER_COUNT,
        }
    }
}

impl RobotGeometry {
    pub fn is_valid(&self) -> bool {
        [self.radius, self.wheel_base, self.mm_per_count]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("|forward| + |spin| = {0} mm/s exceeds {MAX_WHEEL_SPEED}")]
pub struct SpeedRangeError(pub i64);

/// `Move(x, y)`: common speed plus differential speed, both mm/s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WheelCommand {
    pub forward: i32,
    /// Positive is clockwise.
    pub spin: i32,
}

impl WheelCommand {
    pub const STOP: WheelCommand = WheelCommand {
        forward: 0,
        spin: 0,
    };

    pub fn new(forward: i32, spin: i32) -> Self {
        Self { forward, spin }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct WheelSpeeds {
    pub right: i32,
    pub left: i32,
}

impl WheelSpeeds {
    pub fn to_drive_direct(self) -> DriveDirectCommand {
        // wheel_speeds guarantees both are within +-500
        DriveDirectCommand::new(self.right, self.left).expect("wheel speeds already range checked")
    }
}

impl From<DriveDirectCommand> for WheelSpeeds {
    fn from(cmd: DriveDirectCommand) -> Self {
        Self {
            right: cmd.right_mm_s.into(),
            left: cmd.left_mm_s.into(),
        }
    }
}

pub fn wheel_speeds(cmd: WheelCommand) -> Result<WheelSpeeds, SpeedRangeError> {
    let total = i64::from(cmd.forward).abs() + i64::from(cmd.spin).abs();
    if total > i64::from(MAX_WHEEL_SPEED) {
        return Err(SpeedRangeError(total));
    }
    Ok(WheelSpeeds {
        right: cmd.forward - cmd.spin,
        left: cmd.forward + cmd.spin,
    })
}

/// Signed change between two readings of a wrapping 16-bit encoder register.
pub fn encoder_delta(prev: i16, curr: i16) -> i16 {
    curr.wrapping_sub(prev)
}

pub fn counts_to_mm(delta: i64, geom: &RobotGeometry) -> f64 {
    delta as f64 * geom.mm_per_count
}

/// Advances `pose` by one odometry step of per-wheel travel (mm).
pub fn integrate_pose(pose: Pose, d_left: f64, d_right: f64, geom: &RobotGeometry) -> Pose {
    let d_theta = (d_right - d_left) / geom.wheel_base;
    let ds = 0.5 * (d_left + d_right);
    let (x, y) = if d_theta.abs() < STRAIGHT_LINE_EPS {
        (
            pose.x + ds * pose.theta.cos(),
            pose.y + ds * pose.theta.sin(),
        )
    } else {
        let turn_radius = ds / d_theta;
        let end = pose.theta + d_theta;
        (
            pose.x + turn_radius * (end.sin() - pose.theta.sin()),
            pose.y - turn_radius * (end.cos() - pose.theta.cos()),
        )
    };
    Pose::new(x, y, pose.theta + d_theta)
}

/// Dead reckoning from cumulative encoder registers.
#[derive(Clone, Debug)]
pub struct Odometry {
    geometry: RobotGeometry,
    last: Option<EncoderCounts>,
    pose: Pose,
}

impl Odometry {
    pub fn new(geometry: RobotGeometry, start: Pose) -> Self {
        Self {
            geometry,
            last: None,
            pose: start,
        }
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    /// Feeds the latest registers. The first reading only sets the baseline.
    pub fn update(&mut self, counts: EncoderCounts) -> Pose {
        if let Some(prev) = self.last {
            let dl = counts_to_mm(encoder_delta(prev.left, counts.left).into(), &self.geometry);
            let dr = counts_to_mm(
                encoder_delta(prev.right, counts.right).into(),
                &self.geometry,
            );
            self.pose = integrate_pose(self.pose, dl, dr, &self.geometry);
        }
        self.last = Some(counts);
        self.pose
    }
}

/// Rotation about the origin followed by a translation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameTransform {
    pub rotation_theta: f64,
    pub origin_offset: (f64, f64),
}

impl FrameTransform {
    pub fn rotation(rotation_theta: f64) -> Self {
        Self {
            rotation_theta,
            origin_offset: (0.0, 0.0),
        }
    }

    /// `[[cos, -sin], [sin, cos]]`
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.rotation_theta.sin_cos();
        [[c, -s], [s, c]]
    }

    pub fn rotate(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let m = self.matrix();
        (m[0][0] * x + m[0][1] * y, m[1][0] * x + m[1][1] * y)
    }

    pub fn apply_pose(&self, pose: Pose) -> Pose {
        let (x, y) = to_world(self, pose.position());
        Pose::new(x, y, pose.theta + self.rotation_theta)
    }
}

pub fn to_world(t: &FrameTransform, body_point: (f64, f64)) -> (f64, f64) {
    let (x, y) = t.rotate(body_point);
    (x + t.origin_offset.0, y + t.origin_offset.1)
}

/// Corners of a rectangular room, named in the world frame (y up).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    BottomLeft,
    BottomRight,
    TopLeft,
    TopRight,
}

impl Corner {
    pub const ALL: [Corner; 4] = [
        Corner::BottomLeft,
        Corner::BottomRight,
        Corner::TopLeft,
        Corner::TopRight,
    ];

    /// Unit sign pair pointing from the room interior toward the corner.
    pub fn signs(self) -> (f64, f64) {
        match self {
            Corner::BottomLeft => (-1.0, -1.0),
            Corner::BottomRight => (1.0, -1.0),
            Corner::TopLeft => (-1.0, 1.0),
            Corner::TopRight => (1.0, 1.0),
        }
    }

    /// Zero counts as positive.
    pub fn from_signs(x: f64, y: f64) -> Self {
        match (x >= 0.0, y >= 0.0) {
            (true, true) => Corner::TopRight,
            (false, true) => Corner::TopLeft,
            (true, false) => Corner::BottomRight,
            (false, false) => Corner::BottomLeft,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Corner::BottomLeft => "bottom_left",
            Corner::BottomRight => "bottom_right",
            Corner::TopLeft => "top_left",
            Corner::TopRight => "top_right",
        }
    }
}

/// Moves a body-centre position out to the corner it is pressed into.
pub fn corner_estimate_from_center(center: (f64, f64), corner: Corner, radius: f64) -> (f64, f64) {
    let (sx, sy) = corner.signs();
    (center.0 + sx * radius, center.1 + sy * radius)
}
