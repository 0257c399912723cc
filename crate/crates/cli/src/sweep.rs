use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use woundwave::sweep::{sweep_with_progress, SweepGrid, SweepSpec};

use crate::config::required;
use crate::output::{csv_field, f17, f6, header, write_file, write_json};
use crate::CliError;

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepArgs {
    /// Healed-state parameter beta > 1 fixing the slice.
    #[arg(long)]
    pub beta: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    pub alpha_min: Option<f64>,
    /// [default: 2]
    #[arg(long)]
    pub alpha_max: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    pub c_min: Option<f64>,
    /// [default: 2]
    #[arg(long)]
    pub c_max: Option<f64>,
    /// Cells along alpha [default: 200]
    #[arg(long)]
    pub n_alpha: Option<usize>,
    /// Cells along c [default: 200]
    #[arg(long)]
    pub n_c: Option<usize>,
    /// Worker threads [default: available cores]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory [default: .]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress progress messages.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    pub quiet: Option<bool>,
}

/// Settings that determine the output; the worker count does not.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepSettings {
    pub beta: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub n_alpha: usize,
    pub n_c: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub header: String,
    pub settings: SweepSettings,
    pub cells: usize,
    pub failures: usize,
    pub degenerate: usize,
    /// Cell count per canard census label.
    pub census_counts: BTreeMap<String, usize>,
    /// Polyline count per boundary event.
    pub boundary_counts: BTreeMap<String, usize>,
}

pub const GRID_COLUMNS: &str = "alpha,c,census,H_side,H_type";
pub const BOUNDARY_COLUMNS: &str = "polyline,event,alpha,c";

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Grid CSV. Failed cells carry `error: <message>` in the census column;
/// degenerate cells are prefixed `degenerate:`.
pub fn grid_csv(grid: &SweepGrid<f64>, header: &str) -> String {
    let mut s = format!("{header}\n{GRID_COLUMNS}\n");
    for cell in &grid.cells {
        let (census, side, kind) = match &cell.label {
            Ok(l) => {
                let census = if l.degenerate {
                    format!("degenerate:{}", l.census_label())
                } else {
                    l.census_label()
                };
                (census, l.h_side.label().to_string(), l.h_type.label().to_string())
            }
            Err(e) => (format!("error: {e}"), String::new(), String::new()),
        };
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            f17(cell.alpha),
            f17(cell.c),
            csv_field(&census),
            side,
            kind
        ));
    }
    s
}

pub fn boundary_csv(grid: &SweepGrid<f64>, header: &str) -> String {
    let mut s = format!("{header}\n{BOUNDARY_COLUMNS}\n");
    for (k, line) in grid.boundaries().iter().enumerate() {
        for (a, c) in &line.points {
            s.push_str(&format!("{k},{},{},{}\n", line.event.label(), f17(*a), f17(*c)));
        }
    }
    s
}

pub fn run(args: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let s = SweepSettings {
        beta: required(args.beta, "beta")?,
        alpha_min: args.alpha_min.unwrap_or(0.0),
        alpha_max: args.alpha_max.unwrap_or(2.0),
        c_min: args.c_min.unwrap_or(0.0),
        c_max: args.c_max.unwrap_or(2.0),
        n_alpha: args.n_alpha.unwrap_or(200),
        n_c: args.n_c.unwrap_or(200),
    };
    let jobs = args.jobs.unwrap_or_else(default_jobs);
    if jobs == 0 {
        return Err(CliError::Invalid("jobs must be positive".into()));
    }
    let spec = SweepSpec {
        beta: s.beta,
        alpha_range: (s.alpha_min, s.alpha_max),
        c_range: (s.c_min, s.c_max),
        resolution: (s.n_alpha, s.n_c),
    };
    spec.validate().map_err(|e| CliError::Invalid(e.to_string()))?;

    // Workers report through a channel so that messages reach `err` from this
    // thread while the sweep runs.
    let quiet = args.quiet.unwrap_or(false);
    let (tx, rx) = std::sync::mpsc::channel();
    let progress = move |done: usize, total: usize| {
        let step = (total / 10).max(1);
        if !quiet && (done.is_multiple_of(step) || done == total) {
            let _ = tx.send(format!("sweep: {done}/{total} cells"));
        }
    };
    let grid = std::thread::scope(|scope| {
        let worker = scope.spawn(move || sweep_with_progress(&spec, jobs, &progress));
        for line in rx {
            let _ = writeln!(err, "{line}");
        }
        worker.join().expect("sweep worker panicked")
    })
    .map_err(|e| CliError::Solver(e.to_string()))?;

    let h = header("sweep", &s);
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    write_file(&dir, "sweep_grid.csv", &grid_csv(&grid, &h))?;
    write_file(&dir, "sweep_boundaries.csv", &boundary_csv(&grid, &h))?;

    let mut census_counts = BTreeMap::new();
    let mut degenerate = 0;
    for cell in &grid.cells {
        if let Ok(l) = &cell.label {
            *census_counts.entry(l.census_label()).or_insert(0) += 1;
            degenerate += usize::from(l.degenerate);
        }
    }
    let mut boundary_counts = BTreeMap::new();
    for line in grid.boundaries() {
        *boundary_counts.entry(line.event.label().to_string()).or_insert(0) += 1;
    }
    let summary = SweepSummary {
        header: h,
        settings: s,
        cells: grid.cells.len(),
        failures: grid.failures(),
        degenerate,
        census_counts,
        boundary_counts,
    };
    write_json(&dir, "sweep_summary.json", &summary)?;

    let io = |e| CliError::io("<stdout>", e);
    writeln!(
        out,
        "sweep beta={}: {} cells, {} failed, {} degenerate",
        f6(summary.settings.beta),
        summary.cells,
        summary.failures,
        summary.degenerate
    )
    .map_err(io)?;
    for (label, n) in &summary.census_counts {
        writeln!(out, "  {label}: {n}").map_err(io)?;
    }
    if summary.failures > 0 {
        let _ = writeln!(err, "sweep: {} cells failed; see the census column", summary.failures);
    }
    if summary.failures == summary.cells {
        return Err(CliError::Solver("every cell failed".into()));
    }
    Ok(())
}
