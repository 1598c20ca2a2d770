//! Wall-finding localization for differential-drive robots.
//!
//! A robot drives until it bumps a wall, bounces off with a timed
//! back-up/spin manoeuvre, then follows the wall with a constant spin bias
//! toward it. Wheel encoders give a dead-reckoned track; a tight run of
//! alternating left/right bumper hits marks a corner, which is identified
//! from the sign of the net displacement and used to snap the pose into
//! room coordinates. Localized robots broadcast binary position reports to
//! their peers with no coordinator.
//!
//! Modules:
//! - [`oi`]: Open Interface packets, Drive Direct, query-stream framing
//! - [`kinematics`]: wheel mixing, encoder rollover, odometry, frame rotation
//! - [`controller`]: bump-and-bounce wall follower and corner localizer
//! - [`sim`]: fixed-timestep room simulator and sensor models
//! - [`swarm`]: position report codec, lossy broadcast bus, peer tables
//! - [`scenario`]: TOML scenarios and the deterministic multi-robot runner

pub mod controller;
pub mod kinematics;
pub mod oi;
pub mod scenario;
pub mod sim;
pub mod swarm;

pub use controller::{
    classify_bump, detect_corner, identify_corner, localize, BumpClass, ControllerParams,
    HitRecord, Phase, WallFinder, WallFollower,
};
pub use kinematics::{
    corner_estimate_from_center, counts_to_mm, encoder_delta, integrate_pose, to_world,
    wheel_speeds, Corner, FrameTransform, Pose, RobotGeometry, WheelCommand, WheelSpeeds,
};
pub use oi::{
    BumpByte, BumpState, DriveDirectCommand, EncoderCounts, LightBumpSignal, LightBumperBits,
    OiError, Packet, QueryStreamFrame, StreamParser,
};
pub use scenario::{run, RunOutput, Scenario, ScenarioError};
pub use sim::{SimConfig, SimRobot, SlipModel, WorldConfig};
pub use swarm::{Bus, BusConfig, PeerTable, PositionReport, ReportError};
