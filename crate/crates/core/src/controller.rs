//! Bump-and-bounce wall finder.
//!
//! The motion layer is timer driven: a bump stamps `move_helper`, after
//! which the robot backs up for `back_time`, spins in place for
//! `spin_time`, then drives forward with a spin bias back toward the wall.
//! Each rising bump edge is recorded with the dead-reckoned pose; a run of
//! strictly alternating left/right hits that stay close together is taken
//! as a corner.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kinematics::{
    corner_estimate_from_center, Corner, FrameTransform, Odometry, Pose, RobotGeometry,
    WheelCommand,
};
use crate::oi::{BumpByte, BumpState, EncoderCounts, MAX_WHEEL_SPEED};
use crate::sim::WorldConfig;
use crate::swarm::PositionReport;

/// Half-width of the random spin magnitude window around `spin_speed_base`.
pub const SPIN_SPREAD: i32 = 50;

/// When corner detection re-arms after a localization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relocalize {
    #[default]
    Once,
    Always,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerParams {
    /// Forward speed while wall-following, mm/s.
    pub move_speed: i32,
    /// Centre of the spin magnitude window, mm/s.
    pub spin_speed_base: i32,
    /// Reverse speed during the back-up phase, mm/s (positive number).
    pub back_speed: i32,
    pub spin_time: f64,
    pub back_time: f64,
    pub corner_window: usize,
    /// Max pairwise distance between the hits of a corner window, mm.
    pub corner_proximity: f64,
    pub relocalize: Relocalize,
    /// Period of position re-broadcasts once localized, s.
    pub broadcast_period: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            move_speed: 100,
            spin_speed_base: 100,
            back_speed: 100,
            spin_time: 0.75,
            back_time: 0.25,
            corner_window: 4,
            corner_proximity: 150.0,
            relocalize: Relocalize::Once,
            broadcast_period: 1.0,
        }
    }
}

impl ControllerParams {
    pub fn is_valid(&self) -> bool {
        self.move_speed > 0
            && self.spin_speed_base > SPIN_SPREAD
            && self.back_speed > 0
            && self.back_speed <= MAX_WHEEL_SPEED
            && self.move_speed + self.spin_speed_base + SPIN_SPREAD <= MAX_WHEEL_SPEED
            && self.spin_time > 0.0
            && self.back_time > 0.0
            && self.corner_window >= 2
            && self.corner_proximity > 0.0
            && self.broadcast_period > 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Drive,
    Backward,
    Spin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpClass {
    None,
    Right,
    Left,
    Both,
}

impl BumpClass {
    pub fn mirrored(self) -> Self {
        match self {
            BumpClass::Right => BumpClass::Left,
            BumpClass::Left => BumpClass::Right,
            other => other,
        }
    }
}

/// Bump byte modulo four; wheel-drop bits drop out.
pub fn classify_bump(byte: BumpByte) -> BumpClass {
    match byte.value() % 4 {
        0 => BumpClass::None,
        1 => BumpClass::Right,
        2 => BumpClass::Left,
        _ => BumpClass::Both,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub side: BumpClass,
    pub pose_at_hit: Pose,
    pub time: f64,
}

/// True iff the last `window` hits strictly alternate sides and lie within
/// `proximity` of each other.
pub fn detect_corner(hits: &[HitRecord], params: &ControllerParams) -> bool {
    let window = params.corner_window;
    if hits.len() < window {
        return false;
    }
    let recent = &hits[hits.len() - window..];
    let alternating = recent
        .iter()
        .all(|h| matches!(h.side, BumpClass::Left | BumpClass::Right))
        && recent.windows(2).all(|w| w[0].side != w[1].side);
    alternating
        && recent.iter().enumerate().all(|(i, a)| {
            recent[i + 1..]
                .iter()
                .all(|b| a.pose_at_hit.distance_to(&b.pose_at_hit) <= params.corner_proximity)
        })
}

pub fn identify_corner(net_displacement: (f64, f64)) -> Corner {
    Corner::from_signs(net_displacement.0, net_displacement.1)
}

/// Pose of a robot pressed into `corner`, heading kept from dead reckoning.
pub fn localize(corner: Corner, world: &WorldConfig, geom: &RobotGeometry, heading: f64) -> Pose {
    let (cx, cy) = world.corner(corner);
    let (sx, sy) = corner.signs();
    Pose::new(cx - sx * geom.radius, cy - sy * geom.radius, heading)
}

const HIT_HISTORY: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerState {
    pub phase: Phase,
    pub spin_val: i32,
    pub move_val: i32,
    pub forward_spin: i32,
    /// Time of the last bump, s.
    pub move_helper: f64,
    pub hits: VecDeque<HitRecord>,
    pub localized: bool,
    last_bump: BumpClass,
}

/// Output of one bump edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpResponse {
    pub side: BumpClass,
    pub spin_val: i32,
    pub recorded: bool,
}

/// The timer-driven motion layer.
#[derive(Clone, Debug)]
pub struct WallFollower {
    params: ControllerParams,
    state: ControllerState,
    rng: ChaCha8Rng,
}

impl WallFollower {
    /// Starts in the drive phase at time `now`.
    pub fn new(params: ControllerParams, rng: ChaCha8Rng, now: f64) -> Self {
        Self {
            state: ControllerState {
                phase: Phase::Drive,
                spin_val: 0,
                move_val: -params.back_speed,
                forward_spin: 0,
                move_helper: now - (params.spin_time + params.back_time),
                hits: VecDeque::with_capacity(HIT_HISTORY),
                localized: false,
                last_bump: BumpClass::None,
            },
            params,
            rng,
        }
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    pub fn hits(&self) -> Vec<HitRecord> {
        self.state.hits.iter().copied().collect()
    }

    pub fn clear_hits(&mut self) {
        self.state.hits.clear();
    }

    pub fn set_localized(&mut self, localized: bool) {
        self.state.localized = localized;
    }

    /// Reacts to a new contact on `side` (not `None`).
    pub fn on_bump(&mut self, side: BumpClass, now: f64, pose: Pose) -> BumpResponse {
        let lo = self.params.spin_speed_base - SPIN_SPREAD;
        let hi = self.params.spin_speed_base + SPIN_SPREAD;
        let spin_val = match side {
            BumpClass::Left => self.rng.gen_range(lo..=hi),
            BumpClass::Right => -self.rng.gen_range(lo..=hi),
            BumpClass::Both => {
                let coin: u8 = self.rng.gen_range(0..=1);
                let m = self.rng.gen_range(lo..=hi);
                if coin == 0 {
                    -m
                } else {
                    m
                }
            }
            BumpClass::None => {
                return BumpResponse {
                    side,
                    spin_val: self.state.spin_val,
                    recorded: false,
                }
            }
        };
        let st = &mut self.state;
        st.phase = Phase::Backward;
        st.move_helper = now;
        st.move_val = -self.params.back_speed;
        st.spin_val = spin_val;
        st.forward_spin = -spin_val;
        let recorded = matches!(side, BumpClass::Left | BumpClass::Right);
        if recorded {
            if st.hits.len() == HIT_HISTORY {
                st.hits.pop_front();
            }
            st.hits.push_back(HitRecord {
                side,
                pose_at_hit: pose,
                time: now,
            });
        }
        BumpResponse {
            side,
            spin_val,
            recorded,
        }
    }

    /// One control tick. A rising bump edge restarts the bounce first.
    pub fn tick(
        &mut self,
        now: f64,
        bump: BumpClass,
        pose: Pose,
    ) -> (WheelCommand, Option<BumpResponse>) {
        let rising = bump != BumpClass::None && self.state.last_bump == BumpClass::None;
        self.state.last_bump = bump;
        let response = rising.then(|| self.on_bump(bump, now, pose));

        let st = &mut self.state;
        let t = now - st.move_helper;
        let (phase, cmd) = if t < self.params.back_time {
            (Phase::Backward, WheelCommand::new(st.move_val, 0))
        } else if t < self.params.back_time + self.params.spin_time {
            (Phase::Spin, WheelCommand::new(0, st.spin_val))
        } else {
            (
                Phase::Drive,
                WheelCommand::new(self.params.move_speed, st.forward_spin),
            )
        };
        st.phase = phase;
        (cmd, response)
    }
}

/// Decoded sensor packets for one control tick.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SensorSnapshot {
    pub bumps: BumpState,
    pub encoders: EncoderCounts,
}

/// Result of a successful corner localization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub corner: Corner,
    pub time: f64,
    /// Dead-reckoned displacement from the start, world-aligned axes.
    pub displacement: (f64, f64),
    /// Corner position implied by `displacement` plus the body radius.
    pub corner_estimate: (f64, f64),
    /// Snapped pose in room coordinates.
    pub pose: Pose,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ControllerEvent {
    Bump(BumpResponse),
    PhaseChange {
        from: Phase,
        to: Phase,
    },
    CornerDetected {
        corner: Corner,
        displacement: (f64, f64),
    },
    Localized(Localization),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub command: WheelCommand,
    pub events: Vec<ControllerEvent>,
    pub report: Option<PositionReport>,
}

/// One robot's full wall-finding stack: odometry, motion layer, corner
/// detection and localization, and report scheduling.
#[derive(Clone, Debug)]
pub struct WallFinder {
    id: u8,
    geometry: RobotGeometry,
    world: WorldConfig,
    /// Known starting heading in the room frame.
    start_frame: FrameTransform,
    odometry: Odometry,
    follower: WallFollower,
    room_frame: Option<FrameTransform>,
    localization: Option<Localization>,
    seq: u16,
    last_report: Option<f64>,
}

impl WallFinder {
    pub fn new(
        id: u8,
        params: ControllerParams,
        geometry: RobotGeometry,
        world: WorldConfig,
        start_heading: f64,
        rng: ChaCha8Rng,
        now: f64,
    ) -> Self {
        Self {
            id,
            geometry,
            world,
            start_frame: FrameTransform::rotation(start_heading),
            odometry: Odometry::new(geometry, Pose::default()),
            follower: WallFollower::new(params, rng, now),
            room_frame: None,
            localization: None,
            seq: 0,
            last_report: None,
        }
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn follower(&self) -> &WallFollower {
        &self.follower
    }

    /// Dead-reckoned pose in the robot's own start frame.
    pub fn body_pose(&self) -> Pose {
        self.odometry.pose()
    }

    /// Dead-reckoned displacement from the start on room-aligned axes.
    pub fn displacement(&self) -> (f64, f64) {
        self.start_frame.rotate(self.odometry.pose().position())
    }

    /// Room-frame pose, once a corner has been found.
    pub fn room_pose(&self) -> Option<Pose> {
        self.room_frame.map(|t| t.apply_pose(self.odometry.pose()))
    }

    pub fn localization(&self) -> Option<&Localization> {
        self.localization.as_ref()
    }

    pub fn step(&mut self, now: f64, sensors: SensorSnapshot) -> StepOutput {
        let pose = self.odometry.update(sensors.encoders);
        let bump = classify_bump(sensors.bumps.to_byte());
        let before = self.follower.state().phase;
        let (command, response) = self.follower.tick(now, bump, pose);
        let mut events = Vec::new();
        if let Some(r) = response {
            events.push(ControllerEvent::Bump(r));
        }
        let after = self.follower.state().phase;
        if after != before {
            events.push(ControllerEvent::PhaseChange {
                from: before,
                to: after,
            });
        }

        let armed = !self.follower.state().localized
            || self.follower.params().relocalize == Relocalize::Always;
        let mut report = None;
        if armed
            && response.is_some_and(|r| r.recorded)
            && detect_corner(&self.follower.hits(), self.follower.params())
        {
            let loc = self.localize_now(now);
            events.push(ControllerEvent::CornerDetected {
                corner: loc.corner,
                displacement: loc.displacement,
            });
            events.push(ControllerEvent::Localized(loc));
            report = Some(self.next_report(now));
        } else if let Some(last) = self.last_report {
            if now - last >= self.follower.params().broadcast_period - 1e-9 {
                report = Some(self.next_report(now));
            }
        }
        StepOutput {
            command,
            events,
            report,
        }
    }

    fn localize_now(&mut self, now: f64) -> Localization {
        let body = self.odometry.pose();
        let displacement = self.displacement();
        let corner = identify_corner(displacement);
        let heading = body.theta + self.start_frame.rotation_theta;
        let snapped = localize(corner, &self.world, &self.geometry, heading);
        let rotated = self.start_frame.rotate(body.position());
        self.room_frame = Some(FrameTransform {
            rotation_theta: self.start_frame.rotation_theta,
            origin_offset: (snapped.x - rotated.0, snapped.y - rotated.1),
        });
        let loc = Localization {
            corner,
            time: now,
            displacement,
            corner_estimate: corner_estimate_from_center(
                displacement,
                corner,
                self.geometry.radius,
            ),
            pose: snapped,
        };
        self.localization = Some(loc);
        self.follower.set_localized(true);
        self.follower.clear_hits();
        loc
    }

    fn next_report(&mut self, now: f64) -> PositionReport {
        self.seq = self.seq.wrapping_add(1);
        self.last_report = Some(now);
        let pose = self.room_pose().unwrap_or_else(|| self.odometry.pose());
        PositionReport::from_pose(self.id, self.seq, pose, self.localization.is_some())
    }
}
