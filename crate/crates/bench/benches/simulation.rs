use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use wallfinder_bench::corner_scenario;
use wallfinder_core::sim::{sense_light_bumpers, step};
use wallfinder_core::{
    integrate_pose, run, Pose, RobotGeometry, SimConfig, SimRobot, WheelSpeeds, WorldConfig,
};

fn kinematics(c: &mut Criterion) {
    let geom = RobotGeometry::default();
    let pose = Pose::new(10.0, 20.0, 0.3);
    c.bench_function("integrate_pose_arc", |b| {
        b.iter(|| integrate_pose(black_box(pose), black_box(1.5), black_box(1.9), &geom))
    });
    c.bench_function("integrate_pose_straight", |b| {
        b.iter(|| integrate_pose(black_box(pose), black_box(1.5), black_box(1.5), &geom))
    });
}

fn world(c: &mut Criterion) {
    let world = WorldConfig::new(2500.0, 2200.0);
    let cfg = SimConfig::default();
    let mut robot = SimRobot::new(Pose::new(1500.0, 800.0, 0.8), RobotGeometry::default());
    robot.wheel_cmd = WheelSpeeds {
        right: 80,
        left: 120,
    };
    c.bench_function("control_tick_physics", |b| {
        b.iter_batched_ref(
            || robot.clone(),
            |r| step(r, &world, &cfg),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("light_bumpers", |b| {
        b.iter(|| sense_light_bumpers(black_box(&robot), &world, 150.0))
    });
}

fn scenarios(c: &mut Criterion) {
    let mut g = c.benchmark_group("scenario");
    g.sample_size(10);
    for secs in [10.0, 60.0] {
        let s = corner_scenario(secs);
        g.bench_function(format!("corner_{secs}s"), |b| b.iter(|| run(black_box(&s))));
    }
    g.finish();
}

criterion_group!(benches, kinematics, world, scenarios);
criterion_main!(benches);
