use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use woundwave::model::{wall_height, wall_root};

use crate::config::required;
use crate::output::{f17, f6, header, write_file};
use crate::CliError;

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct WallArgs {
    /// Wavespeed c > 0.
    #[arg(long)]
    pub c: Option<f64>,
    /// Open lower end of the sampled interval, > 0 [default: 0.05]
    #[arg(long)]
    pub u_min: Option<f64>,
    /// Number of samples [default: 200]
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output directory [default: .]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
struct WallSettings {
    c: f64,
    u_min: f64,
    samples: usize,
}

/// `(u, F(u))` at `u_min + k (u_C0 - u_min) / n`, `k = 1..=n`. The last
/// sample sits on the zero `u_C0` of `F`, where the ordinate is exactly 0.
pub fn sample_wall(c: f64, u_min: f64, n: usize) -> Vec<(f64, f64)> {
    let u_c0 = wall_root(c);
    (1..=n)
        .map(|k| {
            if k == n {
                (u_c0, 0.0)
            } else {
                let u = u_min + (u_c0 - u_min) * k as f64 / n as f64;
                (u, wall_height(u, c))
            }
        })
        .collect()
}

pub fn run(args: &WallArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let c = required(args.c, "c")?;
    let s = WallSettings {
        c,
        u_min: args.u_min.unwrap_or(0.05),
        samples: args.samples.unwrap_or(200),
    };
    if !(c > 0.0 && c.is_finite()) {
        return Err(CliError::Invalid(format!("wavespeed c must be positive (got {c})")));
    }
    if !(s.u_min > 0.0) {
        return Err(CliError::Invalid(format!(
            "u-min must be positive: F has a pole at u = 0 (got {})",
            s.u_min
        )));
    }
    let u_c0 = wall_root(c);
    if s.u_min >= u_c0 {
        return Err(CliError::Invalid(format!(
            "u-min {} must lie below the wall zero u_C0 = {}",
            s.u_min,
            f6(u_c0)
        )));
    }
    if s.samples == 0 {
        return Err(CliError::Invalid("samples must be positive".into()));
    }
    let mut text = header("wall", &s);
    text.push_str("\nu,F(u)\n");
    for (u, f) in sample_wall(c, s.u_min, s.samples) {
        text.push_str(&format!("{},{}\n", f17(u), f17(f)));
    }
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let path = write_file(&dir, "wall.csv", &text)?;
    writeln!(
        out,
        "wall c={}: {} samples on ({}, {}] -> {}",
        f6(c),
        s.samples,
        f6(s.u_min),
        f6(u_c0),
        path.display()
    )
    .map_err(|e| CliError::io("<stdout>", e))
}
