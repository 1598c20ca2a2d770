use std::path::PathBuf;

use wallfinder_core::scenario::{run as run_scenario, Scenario, ScenarioError};

use crate::Failure;

const EXIT_INVALID: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(clap::Args)]
pub struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scenario's simulation seed.
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let scenario = Scenario::load(&args.scenario).map_err(|e| {
        let code = match e {
            ScenarioError::Io(_) => EXIT_IO,
            _ => EXIT_INVALID,
        };
        Failure::new(code, format!("{}: {e}", args.scenario.display()))
    })?;
    let scenario = match args.seed {
        Some(seed) => scenario.with_seed(seed),
        None => scenario,
    };
    let output = run_scenario(&scenario);
    output
        .write_to(&args.out)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", args.out.display())))?;

    for robot in &output.robots {
        let s = &robot.summary;
        match (s.corner, s.corner_error_mm) {
            (Some(corner), Some(err)) => println!(
                "robot {}: localized at {} after {:.2} s, corner error {err:.1} mm, {} peers",
                s.robot_id,
                corner.name(),
                s.localization_time_s.unwrap_or_default(),
                s.peers.len()
            ),
            _ => println!(
                "robot {}: not localized after {} ticks",
                s.robot_id, s.ticks
            ),
        }
    }
    Ok(())
}
