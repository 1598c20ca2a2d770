use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn wallfinder(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wallfinder"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn decode_bump_packet() {
    let o = wallfinder(&["decode", "--packet", "7", "03"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "bump left + bump right");
}

#[test]
fn decode_drive_direct() {
    let o = wallfinder(&["decode", "9100640064"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "right=100 mm/s left=100 mm/s");
    let o = wallfinder(&["decode", "91FF9C0064"]);
    assert_eq!(stdout(&o).trim(), "right=-100 mm/s left=100 mm/s");
}

#[test]
fn decode_stream_frame() {
    let o = wallfinder(&["decode", "13 02 07 03 E1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "frame 1:\n  packet 7: bump left + bump right\n");
}

#[test]
fn decode_truncated_frame_fails() {
    let o = wallfinder(&["decode", "13050703"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("truncated frame"), "{}", stderr(&o));
}

#[test]
fn decode_bad_checksum_fails() {
    let o = wallfinder(&["decode", "13020703E2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("checksum"));
}

#[test]
fn decode_reserved_bump_bits_fail() {
    let o = wallfinder(&["decode", "--packet", "7", "10"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn decode_position_report() {
    // robot 1, seq 5, (1000, 1348) mm, 785 mrad, localized
    let mut bytes = vec![0x52, 1, 0, 5];
    bytes.extend(1000i32.to_be_bytes());
    bytes.extend(1348i32.to_be_bytes());
    bytes.extend(785i16.to_be_bytes());
    bytes.push(1);
    let sum = bytes.iter().fold(0u8, |a, &b| a.wrapping_add(b));
    bytes.push(sum.wrapping_neg());
    let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
    let o = wallfinder(&["decode", &hex]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o).trim(),
        "report robot=1 seq=5 x=1000 mm y=1348 mm theta=785 mrad localized"
    );
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = wallfinder(&[
        "simulate",
        "--scenario",
        &scenario("corner_45.toml"),
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("top_right"));
    let csv = fs::read_to_string(out.join("robot_1/trajectory.csv")).unwrap();
    assert!(csv.starts_with(
        "tick,time_s,true_x,true_y,true_theta,est_x,est_y,est_theta,bump_byte,enc_left,enc_right\n"
    ));
    assert!(out.join("robot_1/events.jsonl").is_file());
    let summary = fs::read_to_string(out.join("robot_1/summary.json")).unwrap();
    assert!(summary.contains("\"corner\": \"top_right\""), "{summary}");
}

#[test]
fn simulate_is_reproducible_and_seedable() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = ["a", "b", "c"]
        .iter()
        .map(|name| {
            let seed = if *name == "c" { "5" } else { "4" };
            let out = dir.path().join(name);
            let o = wallfinder(&[
                "simulate",
                "--scenario",
                &scenario("corner_45.toml"),
                "--out",
                path(&out),
                "--seed",
                seed,
            ]);
            assert!(o.status.success());
            fs::read(out.join("robot_1/trajectory.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_ne!(runs[0], runs[2]);
}

#[test]
fn two_robots_see_each_other() {
    let dir = tempfile::tempdir().unwrap();
    let o = wallfinder(&[
        "simulate",
        "--scenario",
        &scenario("two_robots.toml"),
        "--out",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for (me, other) in [(1, 2), (2, 1)] {
        let summary =
            fs::read_to_string(dir.path().join(format!("robot_{me}/summary.json"))).unwrap();
        let peers = &summary[summary.find("\"peers\"").unwrap()..];
        assert!(
            peers.contains(&format!("\"robot_id\": {other}")),
            "{summary}"
        );
        assert!(peers.contains("\"localized\": true"));
    }
}

#[test]
fn zero_duration_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("zero.toml");
    fs::write(
        &file,
        "duration_s = 0.0\n[world]\nwidth = 2000.0\nheight = 2000.0\n[[robots]]\nid = 1\nstart = [1000.0, 1000.0]\nheading_deg = 0.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = wallfinder(&["simulate", "--scenario", path(&file), "--out", path(&out)]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("robot_1/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn invalid_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for text in [
        "duration_s = 1.0\n[world]\nwidth = 2000.0\nheight = 2000.0\n[[robots]]\nid = 1\nstart = [50.0, 1000.0]\nheading_deg = 0.0\n",
        "this is not toml =",
        "duration_s = 1.0\nbogus = 3\n[world]\nwidth = 2000.0\nheight = 2000.0\nrobots = []\n",
    ] {
        let file = dir.path().join("bad.toml");
        fs::write(&file, text).unwrap();
        let o = wallfinder(&["simulate", "--scenario", path(&file), "--out", path(&out)]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
    }
}

#[test]
fn io_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let o = wallfinder(&[
        "simulate",
        "--scenario",
        path(&missing),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));

    // Output path is an existing regular file.
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = wallfinder(&[
        "simulate",
        "--scenario",
        &scenario("corner_45.toml"),
        "--out",
        path(&blocker),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(i).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn rotate_reproduces_the_reported_corner() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    fs::write(&input, "tick,est_x,est_y\n0,0,0\n1,245.85,1494.89\n").unwrap();
    for extra in [&["--quadrant", "++"][..], &["--swap-axes"][..]] {
        let output = dir.path().join("out.csv");
        let mut args = vec![
            "rotate",
            "--theta",
            "45",
            "--radius",
            "117.5",
            "--in",
            path(&input),
            "--out",
            path(&output),
        ];
        args.extend_from_slice(extra);
        let o = wallfinder(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        let csv = fs::read_to_string(&output).unwrap();
        assert!(csv.starts_with("tick,est_x,est_y,rot_x,rot_y,corner_x,corner_y\n"));
        let (cx, cy) = (column(&csv, "corner_x")[1], column(&csv, "corner_y")[1]);
        assert!(
            (cx - 1000.89).abs() <= 0.5 && (cy - 1348.20).abs() <= 0.5,
            "{extra:?}: {cx} {cy}"
        );
    }
}

#[test]
fn rotate_preserves_norms_and_zero_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("sim");
    let o = wallfinder(&[
        "simulate",
        "--scenario",
        &scenario("corner_45.toml"),
        "--out",
        path(&traj),
    ]);
    assert!(o.status.success());
    let input = traj.join("robot_1/trajectory.csv");
    let rotated = dir.path().join("rot.csv");
    let o = wallfinder(&[
        "rotate",
        "--theta",
        "-30",
        "--in",
        path(&input),
        "--out",
        path(&rotated),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(&rotated).unwrap();
    let (ex, ey, rx, ry) = (
        column(&csv, "est_x"),
        column(&csv, "est_y"),
        column(&csv, "rot_x"),
        column(&csv, "rot_y"),
    );
    for i in 0..ex.len() {
        assert!((ex[i].hypot(ey[i]) - rx[i].hypot(ry[i])).abs() <= 1e-6);
    }

    let same = dir.path().join("same.csv");
    let o = wallfinder(&[
        "rotate",
        "--theta",
        "0",
        "--radius",
        "0",
        "--in",
        path(&input),
        "--out",
        path(&same),
    ]);
    assert!(o.status.success());
    let csv = fs::read_to_string(&same).unwrap();
    assert_eq!(column(&csv, "rot_x"), column(&csv, "est_x"));
    assert_eq!(column(&csv, "corner_y"), column(&csv, "est_y"));
}

#[test]
fn rotate_needs_estimate_columns() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    fs::write(&input, "a,b\n1,2\n").unwrap();
    let o = wallfinder(&[
        "rotate",
        "--theta",
        "10",
        "--in",
        path(&input),
        "--out",
        path(&dir.path().join("o.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("est_x"));
}
