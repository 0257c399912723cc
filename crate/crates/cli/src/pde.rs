use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use woundwave::orbits::{IntegratorConfig, SingularOrbit, WaveKind};
use woundwave::pde::{
    front_level, measure_wavespeed, seed_from_orbit, shock_width, simulate, width_exponent, BoundaryMode, Field1D,
    Frame, PdeConfig, PdeError, ShockWidth, StepStats,
};

use crate::config::ParamArgs;
use crate::orbit_io::read_orbit_csv;
use crate::output::{f17, f6, header, write_file, write_json};
use crate::sweep::default_jobs;
use crate::wave::Mode;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryArg {
    Clamped,
    ZeroFlux,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameArg {
    /// Grid moves with the constructed wavespeed.
    Comoving,
    Lab,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PdeArgs {
    /// Orbit CSV written by `wave`; replaces the parameter flags.
    #[arg(long)]
    pub orbit: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    /// Construction used without --orbit; auto takes the first success of
    /// smooth, shock, sr-jump [default: auto]
    #[arg(long, value_enum)]
    pub wave: Option<Mode>,
    /// Diffusion coefficient [default: 1e-3]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Comma-separated eps values run concurrently; overrides --eps.
    #[arg(long, value_delimiter = ',')]
    pub eps_sweep: Option<Vec<f64>>,
    /// Domain length [default: 40]
    #[arg(long)]
    pub length: Option<f64>,
    /// Minimum number of cells [default: 4000]
    #[arg(long)]
    pub n: Option<usize>,
    /// Cells per length eps; refines the grid beyond --n [default: 0.6]
    #[arg(long)]
    pub cells_per_eps: Option<f64>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
    #[arg(long, value_enum)]
    pub frame: Option<FrameArg>,
    /// Fraction of the stable step [default: 0.4]
    #[arg(long)]
    pub safety: Option<f64>,
    /// Step cap [default: 0.05]
    #[arg(long)]
    pub max_dt: Option<f64>,
    /// First-order upwind advection; required for eps = 0.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    pub upwind: Option<bool>,
    /// Final time [default: 20]
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Snapshot spacing for the speed fit [default: 0.5]
    #[arg(long)]
    pub snapshot_every: Option<f64>,
    /// Snapshots before this time are discarded from fits [default: 2]
    #[arg(long)]
    pub transient: Option<f64>,
    /// Time spacing of snapshots written to CSV [default: 1]
    #[arg(long)]
    pub csv_every: Option<f64>,
    /// Write every k-th cell to CSV; 0 picks k so at most 2000 cells are written [default: 0]
    #[arg(long)]
    pub csv_stride: Option<usize>,
    /// Worker threads for eps sweeps [default: available cores]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory [default: .]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct PdeSettings {
    pub orbit: Option<String>,
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub kind: WaveKind,
    pub eps: Vec<f64>,
    pub length: f64,
    pub n: usize,
    pub cells_per_eps: f64,
    pub boundary: BoundaryArg,
    pub frame: FrameArg,
    pub safety: f64,
    pub max_dt: f64,
    pub upwind: bool,
    pub t_end: f64,
    pub snapshot_every: f64,
    pub transient: f64,
    pub csv_every: f64,
    pub csv_stride: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub eps: f64,
    pub n: usize,
    pub dx: f64,
    pub stats: StepStats,
    pub speed: f64,
    pub intercept: f64,
    pub residual: f64,
    pub expected_speed: f64,
    pub relative_speed_error: f64,
    /// Steepest-drop width of `w` after the transient, one per snapshot;
    /// empty for waves without a shock.
    pub widths: Vec<ShockWidth>,
    pub final_width: Option<f64>,
    pub snapshots_file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PdeSummary {
    pub header: String,
    pub settings: PdeSettings,
    pub runs: Vec<RunSummary>,
    /// Least-squares exponent of final width against eps (sweeps of two or
    /// more positive eps with a shock).
    pub width_exponent: Option<f64>,
    /// Final widths strictly decrease as eps decreases.
    pub widths_monotone: Option<bool>,
}

struct Source {
    orbit: SingularOrbit<f64>,
    file: Option<String>,
}

fn load_source(args: &PdeArgs) -> Result<Source, CliError> {
    if let Some(path) = &args.orbit {
        if args.params.alpha.is_some() || args.params.beta.is_some() || args.params.c.is_some() {
            return Err(CliError::Invalid(
                "give either --orbit or --alpha/--beta/--c, not both".into(),
            ));
        }
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return Ok(Source {
            orbit: read_orbit_csv(&text)?,
            file: Some(path.display().to_string()),
        });
    }
    let p = args.params.params()?;
    let cfg = IntegratorConfig::default();
    let kinds: &[WaveKind] = match args.wave.unwrap_or(Mode::Auto) {
        Mode::Auto => &[WaveKind::Smooth, WaveKind::Shock, WaveKind::SrJump],
        Mode::Smooth => &[WaveKind::Smooth],
        Mode::Shock => &[WaveKind::Shock],
        Mode::SrJump => &[WaveKind::SrJump],
    };
    let mut reasons = Vec::new();
    for &kind in kinds {
        let built = match kind {
            WaveKind::Smooth => woundwave::orbits::construct_smooth_wave(&p, &cfg),
            WaveKind::Shock => woundwave::orbits::construct_shock_wave(&p, &cfg),
            WaveKind::SrJump => woundwave::orbits::construct_sr_jump_wave(&p, &cfg),
        };
        match built {
            Ok(orbit) => return Ok(Source { orbit, file: None }),
            Err(e) => reasons.push(format!("{}: {e}", kind.label())),
        }
    }
    Err(CliError::NoOrbit(reasons.join("; ")))
}

fn settings(args: &PdeArgs, src: &Source) -> Result<PdeSettings, CliError> {
    let p = &src.orbit.params;
    let s = PdeSettings {
        orbit: src.file.clone(),
        alpha: p.alpha(),
        beta: p.beta(),
        c: p.c(),
        kind: src.orbit.kind,
        eps: args.eps_sweep.clone().unwrap_or_else(|| vec![args.eps.unwrap_or(1e-3)]),
        length: args.length.unwrap_or(40.0),
        n: args.n.unwrap_or(4000),
        cells_per_eps: args.cells_per_eps.unwrap_or(0.6),
        boundary: args.boundary.unwrap_or(BoundaryArg::Clamped),
        frame: args.frame.unwrap_or(FrameArg::Comoving),
        safety: args.safety.unwrap_or(0.4),
        max_dt: args.max_dt.unwrap_or(0.05),
        upwind: args.upwind.unwrap_or(false),
        t_end: args.t_end.unwrap_or(20.0),
        snapshot_every: args.snapshot_every.unwrap_or(0.5),
        transient: args.transient.unwrap_or(2.0),
        csv_every: args.csv_every.unwrap_or(1.0),
        csv_stride: args.csv_stride.unwrap_or(0),
    };
    let bad = |m: &str| Err(CliError::Invalid(m.into()));
    if s.eps.is_empty() {
        return bad("eps sweep is empty");
    }
    if !(s.cells_per_eps > 0.0) {
        return bad("cells-per-eps must be positive");
    }
    if !(s.t_end > 0.0 && s.snapshot_every > 0.0 && s.csv_every > 0.0 && s.transient >= 0.0) {
        return bad("need t-end, snapshot-every, csv-every > 0 and transient >= 0");
    }
    let after = snapshot_times(&s).iter().filter(|t| **t >= s.transient).count();
    if after < 10 {
        return Err(CliError::Invalid(format!(
            "only {after} snapshots after the transient; the speed fit needs 10"
        )));
    }
    for &eps in &s.eps {
        config(&s, eps)
            .validate()
            .map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    Ok(s)
}

fn snapshot_times(s: &PdeSettings) -> Vec<f64> {
    let k = (s.t_end / s.snapshot_every + 1e-9).floor() as usize;
    (1..=k).map(|i| i as f64 * s.snapshot_every).collect()
}

fn config(s: &PdeSettings, eps: f64) -> PdeConfig {
    PdeConfig {
        boundary: match s.boundary {
            BoundaryArg::Clamped => BoundaryMode::Clamped,
            BoundaryArg::ZeroFlux => BoundaryMode::ZeroFlux,
        },
        frame: match s.frame {
            FrameArg::Comoving => Frame::Comoving(s.c),
            FrameArg::Lab => Frame::Lab,
        },
        safety: s.safety,
        max_dt: s.max_dt,
        upwind: s.upwind,
        ..PdeConfig::resolved(eps, s.length, s.n, s.cells_per_eps)
    }
}

pub fn field_csv(fields: &[&Field1D], stride: usize, header: &str) -> String {
    let mut s = format!("{header}\nt,x,u,w\n");
    for f in fields {
        let stride = if stride == 0 { f.len().div_ceil(2000) } else { stride };
        for i in (0..f.len()).step_by(stride.max(1)) {
            s.push_str(&format!(
                "{},{},{},{}\n",
                f17(f.t),
                f17(f.x(i)),
                f17(f.u[i]),
                f17(f.w[i])
            ));
        }
    }
    s
}

fn snapshot_file(index: usize, count: usize) -> String {
    if count == 1 {
        "snapshots.csv".into()
    } else {
        format!("snapshots_{index}.csv")
    }
}

enum RunFailure {
    Pde(PdeError),
    Io(CliError),
}

fn one_run(index: usize, src: &Source, s: &PdeSettings, header: &str, dir: &Path) -> Result<RunSummary, RunFailure> {
    let p = &src.orbit.params;
    let eps = s.eps[index];
    let cfg = config(s, eps);
    let seed = seed_from_orbit(&src.orbit, &cfg).map_err(RunFailure::Pde)?;
    let times = snapshot_times(s);
    let (history, stats) = simulate(&seed, &times, p, &cfg).map_err(RunFailure::Pde)?;
    let level = front_level(p);
    let speed = measure_wavespeed(&history, level, s.transient).map_err(RunFailure::Pde)?;
    let widths: Vec<ShockWidth> = match &src.orbit.jump {
        Some(j) => history
            .iter()
            .filter(|f| f.t >= s.transient)
            .map(|f| shock_width(f, (j.w_depart - j.w_land).abs()))
            .collect(),
        None => Vec::new(),
    };
    let every = (s.csv_every / s.snapshot_every).round().max(1.0) as usize;
    let written: Vec<&Field1D> = std::iter::once(&seed)
        .chain(history.iter().skip(every - 1).step_by(every))
        .collect();
    let name = snapshot_file(index, s.eps.len());
    write_file(
        dir,
        &name,
        &field_csv(&written, s.csv_stride, &format!("{header} run_eps={}", f17(eps))),
    )
    .map_err(RunFailure::Io)?;
    Ok(RunSummary {
        eps,
        n: cfg.n,
        dx: cfg.dx(),
        stats,
        speed: speed.speed,
        intercept: speed.intercept,
        residual: speed.residual,
        expected_speed: p.c(),
        relative_speed_error: (speed.speed - p.c()).abs() / p.c(),
        final_width: widths.last().map(|w| w.width),
        widths,
        snapshots_file: name,
    })
}

pub fn run(args: &PdeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let src = load_source(args)?;
    let s = settings(args, &src)?;
    let jobs = args.jobs.unwrap_or_else(default_jobs);
    if jobs == 0 {
        return Err(CliError::Invalid("jobs must be positive".into()));
    }
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let h = header("pde", &s);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.min(s.eps.len()))
        .build()
        .map_err(|e| CliError::Simulation(format!("cannot start workers: {e}")))?;
    let results: Vec<Result<RunSummary, RunFailure>> = pool.install(|| {
        (0..s.eps.len())
            .into_par_iter()
            .map(|i| one_run(i, &src, &s, &h, &dir))
            .collect()
    });

    let mut runs = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(run) => runs.push(run),
            Err(RunFailure::Io(e)) => return Err(e),
            Err(RunFailure::Pde(e)) => return Err(failure(e, s.eps[i], &h, &dir, err)),
        }
    }

    let positive: Vec<&RunSummary> = runs.iter().filter(|r| r.eps > 0.0).collect();
    let (width_exponent, widths_monotone) = match positive.iter().map(|r| r.final_width).collect::<Option<Vec<f64>>>() {
        Some(w) if w.len() >= 2 => {
            let eps: Vec<f64> = positive.iter().map(|r| r.eps).collect();
            let mut pairs: Vec<(f64, f64)> = eps.iter().copied().zip(w.iter().copied()).collect();
            pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
            let monotone = pairs.windows(2).all(|p| p[1].1 < p[0].1);
            (Some(width_exponent(&eps, &w)), Some(monotone))
        }
        _ => (None, None),
    };
    let summary = PdeSummary {
        header: h,
        settings: s,
        runs,
        width_exponent,
        widths_monotone,
    };
    write_json(&dir, "pde_summary.json", &summary)?;

    let io = |e| CliError::io("<stdout>", e);
    let st = &summary.settings;
    writeln!(
        out,
        "pde {} wave alpha={} beta={} c={}",
        st.kind.label(),
        f6(st.alpha),
        f6(st.beta),
        f6(st.c)
    )
    .map_err(io)?;
    for r in &summary.runs {
        write!(
            out,
            "  eps={} n={} speed={} (rel. error {}) residual={} min u={} min w={}",
            f6(r.eps),
            r.n,
            f6(r.speed),
            f6(r.relative_speed_error),
            f6(r.residual),
            f6(r.stats.min_u),
            f6(r.stats.min_w)
        )
        .map_err(io)?;
        if let Some(w) = r.final_width {
            write!(out, " width={}", f6(w)).map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    if let Some(k) = summary.width_exponent {
        writeln!(out, "  width exponent {}", f6(k)).map_err(io)?;
    }
    Ok(())
}

/// Maps a failed run to an exit code, dumping the last good state on blowup.
fn failure(e: PdeError, eps: f64, header: &str, dir: &Path, err: &mut dyn Write) -> CliError {
    match e {
        PdeError::Blowup { t, last_good } => {
            let text = field_csv(&[&last_good], 1, &format!("{header} run_eps={}", f17(eps)));
            let dumped = match write_file(dir, "pde_blowup.csv", &text) {
                Ok(path) => format!("last finite state (t = {}) in {}", f6(last_good.t), path.display()),
                Err(e) => format!("could not write the dump: {e}"),
            };
            let _ = writeln!(err, "pde: {dumped}");
            CliError::Simulation(format!("non-finite values at t = {} for eps = {}", f6(t), f6(eps)))
        }
        PdeError::StepUnderflow { .. } | PdeError::LevelNotCrossed { .. } => {
            CliError::Simulation(format!("eps = {}: {e}", f6(eps)))
        }
        PdeError::Orbit(e) => CliError::Solver(e.to_string()),
        other => CliError::Invalid(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blowup_dumps_last_state_and_exits_5() {
        let dir = tempfile::tempdir().unwrap();
        let last_good = Field1D::new(vec![0.5; 4], vec![0.25; 4], 0.0, 0.5, 1.5).unwrap();
        let e = PdeError::Blowup {
            t: 1.75,
            last_good: Box::new(last_good),
        };
        let mut err = Vec::new();
        let out = failure(e, 1e-3, "# woundwave test", dir.path(), &mut err);
        assert_eq!(out.code(), crate::exit::SIMULATION);
        let dump = std::fs::read_to_string(dir.path().join("pde_blowup.csv")).unwrap();
        let mut lines = dump.lines();
        assert!(lines.next().unwrap().starts_with("# woundwave test run_eps="));
        assert_eq!(lines.next(), Some("t,x,u,w"));
        assert_eq!(lines.count(), 4);
        assert!(String::from_utf8(err).unwrap().contains("pde_blowup.csv"));
    }
}
