use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use woundwave::equilibria::census;
use woundwave::orbits::{
    construct_shock_wave, construct_smooth_wave, construct_sr_jump_wave, limit_cycle_scan, wall_intersection,
    IntegratorConfig, JumpRecord, LimitCycleReport, OrbitError, SingularOrbit, WallIntersection, WaveKind,
};
use woundwave::{Params, Point};

use crate::config::ParamArgs;
use crate::orbit_io::orbit_csv;
use crate::output::{f6, header, write_file, write_json};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Try every construction and report each success.
    Auto,
    Smooth,
    Shock,
    SrJump,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct WaveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Output directory [default: .]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seeds per axis for the periodic-orbit scan [default: 6]
    #[arg(long)]
    pub cycle_seeds: Option<usize>,
    /// Desingularised time per seed in the periodic-orbit scan [default: 200]
    #[arg(long)]
    pub cycle_time: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct WaveSettings {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub mode: Mode,
    pub cycle_seeds: usize,
    pub cycle_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Attempt {
    pub kind: WaveKind,
    pub success: bool,
    pub error: Option<String>,
    pub file: Option<String>,
    pub rows: Option<usize>,
    pub z_extent: Option<[f64; 2]>,
    pub jump: Option<JumpRecord<f64>>,
    pub transversality: Option<f64>,
    pub canard: Option<Point>,
    pub folded_focus_clearance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WaveSummary {
    pub header: String,
    pub settings: WaveSettings,
    pub successes: Vec<WaveKind>,
    pub attempts: Vec<Attempt>,
    pub limit_cycle_scan: Result<LimitCycleReport<f64>, String>,
    pub wall_intersection: Result<Option<WallIntersection<f64>>, String>,
}

fn construct(kind: WaveKind, p: &Params, cfg: &IntegratorConfig<f64>) -> Result<SingularOrbit<f64>, OrbitError> {
    match kind {
        WaveKind::Smooth => construct_smooth_wave(p, cfg),
        WaveKind::Shock => construct_shock_wave(p, cfg),
        WaveKind::SrJump => construct_sr_jump_wave(p, cfg),
    }
}

/// Numerical breakdowns, as opposed to the absence of a connection.
fn is_solver_failure(e: &OrbitError) -> bool {
    matches!(
        e,
        OrbitError::Integrate(_) | OrbitError::Equilibria(_) | OrbitError::Config(_)
    )
}

pub fn orbit_file_name(kind: WaveKind) -> String {
    format!("orbit_{}.csv", kind.label())
}

pub fn run(args: &WaveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let p = args.params.params()?;
    let settings = WaveSettings {
        alpha: p.alpha(),
        beta: p.beta(),
        c: p.c(),
        mode: args.mode.unwrap_or(Mode::Auto),
        cycle_seeds: args.cycle_seeds.unwrap_or(6),
        cycle_time: args.cycle_time.unwrap_or(200.0),
    };
    if settings.cycle_seeds == 0 || !(settings.cycle_time > 0.0) {
        return Err(CliError::Invalid("cycle scan needs seeds > 0 and time > 0".into()));
    }
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    census(&p).map_err(|e| CliError::Solver(e.to_string()))?;
    let cfg = IntegratorConfig::default();
    let kinds: &[WaveKind] = match settings.mode {
        Mode::Auto => &[WaveKind::Smooth, WaveKind::Shock, WaveKind::SrJump],
        Mode::Smooth => &[WaveKind::Smooth],
        Mode::Shock => &[WaveKind::Shock],
        Mode::SrJump => &[WaveKind::SrJump],
    };

    let mut attempts = Vec::new();
    let mut solver_failures = 0;
    for &kind in kinds {
        let attempt = match construct(kind, &p, &cfg) {
            Ok(orbit) => {
                let name = orbit_file_name(kind);
                let h = header(
                    "wave",
                    &OrbitHeader {
                        settings: &settings,
                        kind,
                    },
                );
                write_file(&dir, &name, &orbit_csv(&orbit, &h))?;
                let (lo, hi) = orbit.z_extent();
                Attempt {
                    kind,
                    success: true,
                    error: None,
                    file: Some(name),
                    rows: Some(orbit.profile().len()),
                    z_extent: Some([lo, hi]),
                    jump: orbit.jump,
                    transversality: orbit.jump.map(|j| j.transversality),
                    canard: orbit.canard,
                    folded_focus_clearance: Some(orbit.folded_focus_clearance),
                }
            }
            Err(e) => {
                solver_failures += usize::from(is_solver_failure(&e));
                Attempt {
                    kind,
                    success: false,
                    error: Some(e.to_string()),
                    file: None,
                    rows: None,
                    z_extent: None,
                    jump: None,
                    transversality: None,
                    canard: None,
                    folded_focus_clearance: None,
                }
            }
        };
        attempts.push(attempt);
    }

    let summary = WaveSummary {
        header: header("wave", &settings),
        successes: attempts.iter().filter(|a| a.success).map(|a| a.kind).collect(),
        limit_cycle_scan: limit_cycle_scan(&p, &cfg, settings.cycle_seeds, settings.cycle_time)
            .map_err(|e| e.to_string()),
        wall_intersection: wall_intersection(&p, &cfg).map_err(|e| e.to_string()),
        settings,
        attempts,
    };
    write_json(&dir, "wave_summary.json", &summary)?;
    print_summary(&summary, out).map_err(|e| CliError::io("<stdout>", e))?;

    if summary.successes.is_empty() {
        let reasons: Vec<String> = summary
            .attempts
            .iter()
            .map(|a| format!("{}: {}", a.kind.label(), a.error.as_deref().unwrap_or("")))
            .collect();
        return Err(if solver_failures == summary.attempts.len() {
            CliError::Solver(reasons.join("; "))
        } else {
            CliError::NoOrbit(reasons.join("; "))
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct OrbitHeader<'a> {
    #[serde(flatten)]
    settings: &'a WaveSettings,
    kind: WaveKind,
}

fn print_summary(s: &WaveSummary, out: &mut dyn Write) -> std::io::Result<()> {
    let st = &s.settings;
    writeln!(out, "wave alpha={} beta={} c={}", f6(st.alpha), f6(st.beta), f6(st.c))?;
    for a in &s.attempts {
        if !a.success {
            writeln!(
                out,
                "  {:<8} failed: {}",
                a.kind.label(),
                a.error.as_deref().unwrap_or("")
            )?;
            continue;
        }
        write!(out, "  {:<8} ok, {} rows", a.kind.label(), a.rows.unwrap_or(0))?;
        if let Some(j) = &a.jump {
            write!(
                out,
                ", jump u*={} w_depart={} w_land={} transversality={}",
                f6(j.u_star),
                f6(j.w_depart),
                f6(j.w_land),
                f6(j.transversality)
            )?;
        }
        writeln!(out)?;
    }
    match &s.limit_cycle_scan {
        Ok(r) => writeln!(
            out,
            "  periodic-orbit candidates: {} from {} seeds",
            r.candidates.len(),
            r.seeds
        )?,
        Err(e) => writeln!(out, "  periodic-orbit scan failed: {e}")?,
    }
    match &s.wall_intersection {
        Ok(Some(w)) => writeln!(
            out,
            "  W stable manifold meets the wall at ({}, {}) between {} and {}",
            f6(w.point.u),
            f6(w.point.w),
            w.below.map(|k| k.label()).unwrap_or_else(|| "-".into()),
            w.above.map(|k| k.label()).unwrap_or_else(|| "-".into())
        )?,
        Ok(None) => writeln!(out, "  W stable manifold does not meet the wall")?,
        Err(e) => writeln!(out, "  wall intersection failed: {e}")?,
    }
    Ok(())
}
