use std::path::PathBuf;

use wallfinder_core::{corner_estimate_from_center, Corner, FrameTransform};

use crate::Failure;

const EXIT_INPUT: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(clap::Args)]
pub struct Args {
    /// Counter-clockwise rotation, degrees.
    #[arg(long, allow_hyphen_values = true)]
    theta: f64,
    /// Robot radius, mm. Adds corner_x/corner_y columns when given.
    #[arg(long)]
    radius: Option<f64>,
    /// Fixes the corner quadrant ("++", "+-", "-+", "--"); the offset is
    /// then applied to component magnitudes. Defaults to each row's signs.
    #[arg(long, value_parser = parse_quadrant)]
    quadrant: Option<(f64, f64)>,
    /// Swap est_x and est_y before rotating.
    #[arg(long)]
    swap_axes: bool,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "out")]
    output: PathBuf,
}

fn parse_quadrant(s: &str) -> Result<(f64, f64), String> {
    let sign = |c| match c {
        '+' => Ok(1.0),
        '-' => Ok(-1.0),
        _ => Err(format!("quadrant must be two of '+'/'-', got {s:?}")),
    };
    let chars: Vec<char> = s.chars().collect();
    match chars[..] {
        [a, b] => Ok((sign(a)?, sign(b)?)),
        _ => Err(format!("quadrant must be two of '+'/'-', got {s:?}")),
    }
}

/// Rotated point and, with a radius, the implied corner.
fn correct(args: &Args, x: f64, y: f64) -> ((f64, f64), Option<(f64, f64)>) {
    let p = if args.swap_axes { (y, x) } else { (x, y) };
    let (rx, ry) = FrameTransform::rotation(args.theta.to_radians()).rotate(p);
    let corner = args.radius.map(|r| match args.quadrant {
        Some((sx, sy)) => (sx * (rx.abs() + r), sy * (ry.abs() + r)),
        None => corner_estimate_from_center((rx, ry), Corner::from_signs(rx, ry), r),
    });
    ((rx, ry), corner)
}

pub fn run(args: Args) -> Result<(), Failure> {
    let io = |e: csv::Error| {
        let code = if e.is_io_error() { EXIT_IO } else { EXIT_INPUT };
        Failure::new(code, e.to_string())
    };
    let mut reader = csv::Reader::from_path(&args.input)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", args.input.display())))?;
    let headers = reader.headers().map_err(io)?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Failure::new(
                EXIT_INPUT,
                format!("{}: no {name} column", args.input.display()),
            )
        })
    };
    let (ix, iy) = (column("est_x")?, column("est_y")?);

    let mut writer = csv::Writer::from_path(&args.output)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", args.output.display())))?;
    let mut out_headers = headers.clone();
    out_headers.extend(["rot_x", "rot_y"]);
    if args.radius.is_some() {
        out_headers.extend(["corner_x", "corner_y"]);
    }
    writer.write_record(&out_headers).map_err(io)?;

    for (line, record) in reader.records().enumerate() {
        let mut record = record.map_err(io)?;
        let field = |i: usize| {
            record[i].trim().parse::<f64>().map_err(|e| {
                Failure::new(
                    EXIT_INPUT,
                    format!("row {}: {}: {e}", line + 1, &headers[i]),
                )
            })
        };
        let (x, y) = (field(ix)?, field(iy)?);
        let ((rx, ry), corner) = correct(&args, x, y);
        record.push_field(&rx.to_string());
        record.push_field(&ry.to_string());
        if let Some((cx, cy)) = corner {
            record.push_field(&cx.to_string());
            record.push_field(&cy.to_string());
        }
        writer.write_record(&record).map_err(io)?;
    }
    writer
        .flush()
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", args.output.display())))
}
