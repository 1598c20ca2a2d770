//! Scenario files and the deterministic multi-robot runner.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! duration_s = 120.0
//! rotation_theta_deg = 45.0   # optional, for post-hoc frame correction
//!
//! [world]
//! width = 2500.0
//! height = 2200.0
//!
//! [sim]
//! seed = 7
//! slip = "stall"              # or { slip = 0.3 }
//!
//! [bus]
//! drop_probability = 0.0
//! latency_ticks = 2
//!
//! [[robots]]
//! id = 1
//! start = [1500.0, 800.0]
//! heading_deg = 45.0
//! controller = { spin_time = 0.6 }
//! ```
//!
//! Every control tick, each robot (in id order) reads its sensors through a
//! query-stream frame, steps its [`WallFinder`], and has its wheel command
//! sent through the Drive Direct codec. Bus deliveries are handed out after
//! all robots have acted, then physics advances one control period.

use std::fs;
use std::io;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{
    BumpClass, ControllerEvent, ControllerParams, Phase, Relocalize, SensorSnapshot, WallFinder,
};
use crate::kinematics::{
    corner_estimate_from_center, wheel_speeds, Corner, FrameTransform, Pose, RobotGeometry,
    WheelSpeeds,
};
use crate::oi::{encode_query_stream, DriveDirectCommand, Packet, StreamParser};
use crate::sim::{self, ContactInfo, SimConfig, SimRobot, WorldConfig};
use crate::swarm::{Bus, BusConfig, BusLogEntry, PeerTable};

/// Mixed into the simulation seed when the bus has no seed of its own.
const BUS_SEED_SALT: u64 = 0xB05_5EED_0000_0001;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Per-robot controller settings; unset fields fall back to the scenario's.
#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerOverrides {
    pub move_speed: Option<i32>,
    pub spin_speed_base: Option<i32>,
    pub back_speed: Option<i32>,
    pub spin_time: Option<f64>,
    pub back_time: Option<f64>,
    pub corner_window: Option<usize>,
    pub corner_proximity: Option<f64>,
    pub relocalize: Option<Relocalize>,
    pub broadcast_period: Option<f64>,
}

impl ControllerOverrides {
    pub fn apply(&self, base: ControllerParams) -> ControllerParams {
        ControllerParams {
            move_speed: self.move_speed.unwrap_or(base.move_speed),
            spin_speed_base: self.spin_speed_base.unwrap_or(base.spin_speed_base),
            back_speed: self.back_speed.unwrap_or(base.back_speed),
            spin_time: self.spin_time.unwrap_or(base.spin_time),
            back_time: self.back_time.unwrap_or(base.back_time),
            corner_window: self.corner_window.unwrap_or(base.corner_window),
            corner_proximity: self.corner_proximity.unwrap_or(base.corner_proximity),
            relocalize: self.relocalize.unwrap_or(base.relocalize),
            broadcast_period: self.broadcast_period.unwrap_or(base.broadcast_period),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub id: u8,
    /// Start position in the room frame, mm.
    pub start: [f64; 2],
    pub heading_deg: f64,
    #[serde(default)]
    pub controller: ControllerOverrides,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BusSection {
    pub drop_probability: f64,
    pub latency_ticks: u64,
    /// Defaults to a value derived from the simulation seed.
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub world: WorldConfig,
    #[serde(default)]
    pub geometry: RobotGeometry,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub bus: BusSection,
    #[serde(default)]
    pub controller: ControllerParams,
    pub duration_s: f64,
    #[serde(default)]
    pub rotation_theta_deg: Option<f64>,
    pub robots: Vec<RobotSpec>,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    /// Replaces the simulation seed (and a derived bus seed).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sim.seed = seed;
        self
    }

    pub fn bus_config(&self) -> BusConfig {
        BusConfig {
            drop_probability: self.bus.drop_probability,
            latency_ticks: self.bus.latency_ticks,
            seed: self.bus.seed.unwrap_or(self.sim.seed ^ BUS_SEED_SALT),
        }
    }

    pub fn params_for(&self, robot: &RobotSpec) -> ControllerParams {
        robot.controller.apply(self.controller)
    }

    pub fn ticks(&self) -> u64 {
        (self.duration_s / self.sim.control_dt).round() as u64
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |msg: String| Err(ScenarioError::Invalid(msg));
        if !self.geometry.is_valid() {
            return invalid("geometry values must be positive".into());
        }
        if !self.world.is_valid_for(self.geometry.radius) {
            return invalid(format!(
                "world {}x{} mm must exceed four robot radii in each direction",
                self.world.width, self.world.height
            ));
        }
        if !self.sim.is_valid() {
            return invalid("sim config out of range".into());
        }
        if !self.bus_config().is_valid() {
            return invalid("bus drop_probability must be within [0, 1]".into());
        }
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return invalid("duration_s must be a non-negative number".into());
        }
        if self.robots.is_empty() {
            return invalid("at least one robot is required".into());
        }
        let mut ids: Vec<u8> = self.robots.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return invalid("robot ids must be unique".into());
        }
        for robot in &self.robots {
            let [x, y] = robot.start;
            if !self.world.contains_disc(x, y, self.geometry.radius) {
                return invalid(format!(
                    "robot {} starts outside the walls at ({x}, {y})",
                    robot.id
                ));
            }
            if !robot.heading_deg.is_finite() {
                return invalid(format!("robot {} heading is not finite", robot.id));
            }
            if !self.params_for(robot).is_valid() {
                return invalid(format!(
                    "robot {} controller parameters out of range",
                    robot.id
                ));
            }
        }
        Ok(())
    }
}

/// One control tick of one robot. Sensor columns follow the bump byte,
/// left count, right count order of the raw log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub tick: u64,
    pub time_s: f64,
    pub true_x: f64,
    pub true_y: f64,
    pub true_theta: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub est_theta: f64,
    pub bump_byte: u8,
    pub enc_left: i16,
    pub enc_right: i16,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Bump {
        side: BumpClass,
        spin_val: i32,
        recorded: bool,
    },
    PhaseChange {
        from: Phase,
        to: Phase,
    },
    CornerDetected {
        corner: Corner,
        displacement: [f64; 2],
    },
    Localized {
        corner: Corner,
        corner_estimate: [f64; 2],
        pose: Pose,
    },
    ReportSent {
        seq: u16,
        x_mm: i32,
        y_mm: i32,
        theta_mrad: i16,
        localized: bool,
    },
    ReportReceived {
        from: u8,
        seq: u16,
        x_mm: i32,
        y_mm: i32,
        accepted: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventRecord {
    pub tick: u64,
    pub time_s: f64,
    pub robot: u8,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeerSummary {
    pub robot_id: u8,
    pub seq: u16,
    pub x_mm: i32,
    pub y_mm: i32,
    pub theta_mrad: i16,
    pub localized: bool,
    pub receive_tick: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub robot_id: u8,
    pub ticks: u64,
    pub duration_s: f64,
    pub final_true_pose: Pose,
    /// Dead-reckoned pose in the robot's start frame.
    pub final_body_pose: Pose,
    /// Room-frame estimate, present once localized.
    pub final_room_pose: Option<Pose>,
    pub localized: bool,
    pub corner: Option<Corner>,
    pub localization_time_s: Option<f64>,
    /// Dead-reckoned corner position relative to the start, room axes.
    pub corner_estimate: Option<[f64; 2]>,
    /// Surveyed position of the same corner relative to the start.
    pub true_corner: Option<[f64; 2]>,
    /// Distance between the two, mm.
    pub corner_error_mm: Option<f64>,
    /// Distance between the snapped pose and ground truth at the snap, mm.
    pub snap_error_mm: Option<f64>,
    /// Start-frame final estimate rotated by `rotation_theta_deg`, when set.
    pub rotated_final_estimate: Option<[f64; 2]>,
    pub bumps: u64,
    pub recorded_hits: u64,
    pub reports_sent: u64,
    pub reports_received: u64,
    pub peers: Vec<PeerSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotRun {
    pub id: u8,
    pub trajectory: Vec<TrajectoryRow>,
    pub events: Vec<EventRecord>,
    pub summary: Summary,
}

impl RobotRun {
    pub fn trajectory_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.trajectory {
            w.serialize(row).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub robots: Vec<RobotRun>,
    pub bus_log: Vec<BusLogEntry>,
}

impl RunOutput {
    pub fn robot(&self, id: u8) -> Option<&RobotRun> {
        self.robots.iter().find(|r| r.id == id)
    }

    /// Writes `robot_<id>/{trajectory.csv,events.jsonl,summary.json}` and
    /// `bus.jsonl` under `dir`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for run in &self.robots {
            let sub = dir.join(format!("robot_{}", run.id));
            fs::create_dir_all(&sub)?;
            fs::write(sub.join("trajectory.csv"), run.trajectory_csv())?;
            fs::write(sub.join("events.jsonl"), run.events_jsonl())?;
            fs::write(sub.join("summary.json"), run.summary_json())?;
        }
        let mut bus = String::new();
        for entry in &self.bus_log {
            bus.push_str(&serde_json::to_string(entry).expect("bus entry serializes"));
            bus.push('\n');
        }
        fs::write(dir.join("bus.jsonl"), bus)
    }
}

struct Agent {
    spec: RobotSpec,
    body: SimRobot,
    finder: WallFinder,
    parser: StreamParser,
    peers: PeerTable,
    contact: ContactInfo,
    trajectory: Vec<TrajectoryRow>,
    events: Vec<EventRecord>,
    bumps: u64,
    recorded_hits: u64,
    sent: u64,
    received: u64,
    snap_error: Option<f64>,
}

impl Agent {
    fn event(&mut self, tick: u64, time_s: f64, kind: EventKind) {
        self.events.push(EventRecord {
            tick,
            time_s,
            robot: self.spec.id,
            kind,
        });
    }
}

/// Runs the scenario to completion. Output depends only on the scenario.
pub fn run(scenario: &Scenario) -> RunOutput {
    let dt = scenario.sim.control_dt;
    let front_half_angle = scenario.sim.front_half_angle_deg.to_radians();
    let n_ticks = scenario.ticks();

    let mut specs = scenario.robots.clone();
    specs.sort_by_key(|r| r.id);
    let mut agents: Vec<Agent> = specs
        .into_iter()
        .map(|spec| {
            let heading = spec.heading_deg.to_radians();
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.sim.seed);
            rng.set_stream(u64::from(spec.id));
            let finder = WallFinder::new(
                spec.id,
                scenario.params_for(&spec),
                scenario.geometry,
                scenario.world,
                heading,
                rng,
                0.0,
            );
            let body = SimRobot::new(
                Pose::new(spec.start[0], spec.start[1], heading),
                scenario.geometry,
            );
            Agent {
                spec,
                body,
                finder,
                parser: StreamParser::new(),
                peers: PeerTable::new(),
                contact: ContactInfo::NONE,
                trajectory: Vec::with_capacity(n_ticks as usize + 1),
                events: Vec::new(),
                bumps: 0,
                recorded_hits: 0,
                sent: 0,
                received: 0,
                snap_error: None,
            }
        })
        .collect();
    let mut bus = Bus::new(scenario.bus_config(), agents.iter().map(|a| a.spec.id));

    for tick in 0..=n_ticks {
        let now = tick as f64 * dt;
        for agent in agents.iter_mut() {
            let bump = sim::sense_bumps(agent.contact, front_half_angle);
            let enc = sim::sense_encoders(&agent.body);
            let frame = encode_query_stream(&[
                Packet::Bumps(bump.decode()),
                Packet::LeftEncoder(enc.left),
                Packet::RightEncoder(enc.right),
            ])
            .expect("three packets fit a frame");
            let snapshot = agent
                .parser
                .feed(&frame)
                .into_iter()
                .find_map(Result::ok)
                .map(|f| snapshot_from(f.packets()))
                .expect("loopback frame parses");

            let out = agent.finder.step(now, snapshot);
            let est = agent.finder.body_pose();
            let truth = agent.body.true_pose;
            agent.trajectory.push(TrajectoryRow {
                tick,
                time_s: now,
                true_x: truth.x,
                true_y: truth.y,
                true_theta: truth.theta,
                est_x: est.x,
                est_y: est.y,
                est_theta: est.theta,
                bump_byte: bump.value(),
                enc_left: enc.left,
                enc_right: enc.right,
            });

            for ev in out.events {
                let kind = match ev {
                    ControllerEvent::Bump(r) => {
                        agent.bumps += 1;
                        agent.recorded_hits += u64::from(r.recorded);
                        EventKind::Bump {
                            side: r.side,
                            spin_val: r.spin_val,
                            recorded: r.recorded,
                        }
                    }
                    ControllerEvent::PhaseChange { from, to } => {
                        EventKind::PhaseChange { from, to }
                    }
                    ControllerEvent::CornerDetected {
                        corner,
                        displacement,
                    } => EventKind::CornerDetected {
                        corner,
                        displacement: [displacement.0, displacement.1],
                    },
                    ControllerEvent::Localized(loc) => {
                        agent.snap_error = Some(loc.pose.distance_to(&truth));
                        EventKind::Localized {
                            corner: loc.corner,
                            corner_estimate: [loc.corner_estimate.0, loc.corner_estimate.1],
                            pose: loc.pose,
                        }
                    }
                };
                agent.event(tick, now, kind);
            }
            if let Some(report) = out.report {
                bus.broadcast(agent.spec.id, &report, tick);
                agent.sent += 1;
                agent.event(
                    tick,
                    now,
                    EventKind::ReportSent {
                        seq: report.seq,
                        x_mm: report.x_mm,
                        y_mm: report.y_mm,
                        theta_mrad: report.theta_mrad,
                        localized: report.localized(),
                    },
                );
            }

            // command goes out through the Drive Direct codec
            let speeds = wheel_speeds(out.command).expect("validated params keep |x| + |y| <= 500");
            let wire = speeds.to_drive_direct().encode();
            let cmd = DriveDirectCommand::decode(&wire).expect("loopback drive command parses");
            agent.body.wheel_cmd = WheelSpeeds::from(cmd);
        }

        for d in bus.deliver_due(tick) {
            if let Some(agent) = agents.iter_mut().find(|a| a.spec.id == d.recipient) {
                let accepted = agent.peers.update(d.report, tick);
                agent.received += 1;
                agent.event(
                    tick,
                    now,
                    EventKind::ReportReceived {
                        from: d.sender,
                        seq: d.report.seq,
                        x_mm: d.report.x_mm,
                        y_mm: d.report.y_mm,
                        accepted,
                    },
                );
            }
        }

        if tick < n_ticks {
            for agent in agents.iter_mut() {
                agent.contact = sim::step(&mut agent.body, &scenario.world, &scenario.sim);
            }
        }
    }

    let rotation = scenario
        .rotation_theta_deg
        .map(|d| FrameTransform::rotation(d.to_radians()));
    let robots = agents
        .into_iter()
        .map(|agent| {
            let loc = agent.finder.localization().copied();
            let start = agent.spec.start;
            let true_corner = loc.map(|l| {
                let (cx, cy) = scenario.world.corner(l.corner);
                [cx - start[0], cy - start[1]]
            });
            let corner_estimate = loc.map(|l| [l.corner_estimate.0, l.corner_estimate.1]);
            let corner_error = corner_estimate
                .zip(true_corner)
                .map(|(e, t)| (e[0] - t[0]).hypot(e[1] - t[1]));
            let body = agent.finder.body_pose();
            let summary = Summary {
                robot_id: agent.spec.id,
                ticks: n_ticks,
                duration_s: scenario.duration_s,
                final_true_pose: agent.body.true_pose,
                final_body_pose: body,
                final_room_pose: agent.finder.room_pose(),
                localized: loc.is_some(),
                corner: loc.map(|l| l.corner),
                localization_time_s: loc.map(|l| l.time),
                corner_estimate,
                true_corner,
                corner_error_mm: corner_error,
                snap_error_mm: agent.snap_error,
                rotated_final_estimate: rotation.map(|t| {
                    let (x, y) = t.rotate(body.position());
                    [x, y]
                }),
                bumps: agent.bumps,
                recorded_hits: agent.recorded_hits,
                reports_sent: agent.sent,
                reports_received: agent.received,
                peers: agent
                    .peers
                    .iter()
                    .map(|(&id, e)| PeerSummary {
                        robot_id: id,
                        seq: e.report.seq,
                        x_mm: e.report.x_mm,
                        y_mm: e.report.y_mm,
                        theta_mrad: e.report.theta_mrad,
                        localized: e.report.localized(),
                        receive_tick: e.receive_tick,
                    })
                    .collect(),
            };
            RobotRun {
                id: agent.spec.id,
                trajectory: agent.trajectory,
                events: agent.events,
                summary,
            }
        })
        .collect();

    RunOutput {
        robots,
        bus_log: bus.log().to_vec(),
    }
}

fn snapshot_from(packets: &[Packet]) -> SensorSnapshot {
    let mut snap = SensorSnapshot::default();
    for p in packets {
        match *p {
            Packet::Bumps(b) => snap.bumps = b,
            Packet::LeftEncoder(c) => snap.encoders.left = c,
            Packet::RightEncoder(c) => snap.encoders.right = c,
            _ => {}
        }
    }
    snap
}

/// Corner position implied by a rotated start-frame point and a corner guess.
pub fn corrected_corner(
    point: (f64, f64),
    theta_deg: f64,
    radius: f64,
    corner: Corner,
) -> (f64, f64) {
    let rotated = FrameTransform::rotation(theta_deg.to_radians()).rotate(point);
    corner_estimate_from_center(rotated, corner, radius)
}
