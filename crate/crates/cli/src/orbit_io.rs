//! Orbit profile CSV: `z,u,w,v,side,arc_id` after a header comment.
//!
//! A shock appears as two consecutive rows with equal `z` and `u`. Reading a
//! file back rebuilds enough of the orbit (arcs and jump) to seed the PDE.

use std::collections::BTreeMap;

use woundwave::orbits::{transversality_check, JumpRecord, SingularOrbit, TerminalEvent, WaveKind, ZArc, ZSample};
use woundwave::{Params, Point};

use crate::output::f17;
use crate::CliError;

pub const COLUMNS: &str = "z,u,w,v,side,arc_id";

pub fn orbit_csv(orbit: &SingularOrbit<f64>, header: &str) -> String {
    let mut s = String::new();
    s.push_str(header);
    s.push('\n');
    s.push_str(COLUMNS);
    s.push('\n');
    for r in orbit.profile() {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            f17(r.z),
            f17(r.u),
            f17(r.w),
            f17(r.v),
            r.side.label(),
            r.arc_id
        ));
    }
    s
}

fn parse_kind(s: &str) -> Option<WaveKind> {
    [WaveKind::Smooth, WaveKind::Shock, WaveKind::SrJump]
        .into_iter()
        .find(|k| k.label() == s)
}

/// Rebuilds an orbit from [`orbit_csv`] output. The header must carry
/// `alpha`, `beta`, `c` and `kind`.
pub fn read_orbit_csv(text: &str) -> Result<SingularOrbit<f64>, CliError> {
    let bad = |m: String| CliError::Invalid(format!("orbit file: {m}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty".into()))?;
    if !header.starts_with('#') {
        return Err(bad("missing header comment line".into()));
    }
    let keys: BTreeMap<&str, &str> = header.split_whitespace().filter_map(|t| t.split_once('=')).collect();
    let num = |k: &str| -> Result<f64, CliError> {
        keys.get(k)
            .ok_or_else(|| bad(format!("header lacks `{k}`")))?
            .parse()
            .map_err(|_| bad(format!("header value for `{k}` is not a number")))
    };
    let params = Params::new(num("alpha")?, num("beta")?, num("c")?).map_err(|e| bad(e.to_string()))?;
    let kind = keys
        .get("kind")
        .and_then(|k| parse_kind(k))
        .ok_or_else(|| bad("header lacks a valid `kind`".into()))?;
    if lines.next().map(str::trim) != Some(COLUMNS) {
        return Err(bad(format!("expected columns `{COLUMNS}`")));
    }

    let mut arcs: Vec<ZArc<f64>> = Vec::new();
    let mut rows: Vec<(f64, Point, bool)> = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(format!("row {} has {} fields", k + 1, f.len())));
        }
        let x = |i: usize| {
            f[i].parse::<f64>()
                .map_err(|_| bad(format!("row {}: bad number `{}`", k + 1, f[i])))
        };
        let (z, u, w) = (x(0)?, x(1)?, x(2)?);
        let id: usize = f[5].parse().map_err(|_| bad(format!("row {}: bad arc id", k + 1)))?;
        let sample = ZSample {
            z,
            point: Point::new(u, w),
        };
        match arcs.last_mut() {
            Some(a) if a.id == id => a.samples.push(sample),
            _ => arcs.push(ZArc {
                id,
                samples: vec![sample],
                origin: None,
                branch: None,
                terminal_event: TerminalEvent::ReachedTarget,
            }),
        }
        rows.push((z, Point::new(u, w), f[4] == "S_r"));
    }
    if rows.len() < 2 {
        return Err(bad("fewer than two rows".into()));
    }
    if rows.windows(2).any(|r| r[1].0 < r[0].0) {
        return Err(bad("z is not ascending".into()));
    }

    // A jump is a repeated (z, u) with a change in w; the departing state is
    // the one on the repelling sheet.
    let jumps: Vec<(usize, usize)> = rows
        .windows(2)
        .enumerate()
        .filter(|(_, r)| r[0].0 == r[1].0 && r[0].1.u == r[1].1.u && r[0].1.w != r[1].1.w)
        .map(|(k, _)| (k, k + 1))
        .collect();
    let jump = match jumps.as_slice() {
        [] => None,
        [(a, b)] => {
            let (dep, land) = if rows[*a].2 || !rows[*b].2 && rows[*a].1.w > rows[*b].1.w {
                (rows[*a].1, rows[*b].1)
            } else {
                (rows[*b].1, rows[*a].1)
            };
            let wounded = params.wounded_state();
            let distance = land.distance(&wounded);
            Some(JumpRecord {
                u_star: dep.u,
                w_depart: dep.w,
                w_land: land.w,
                landing_mismatch: 0.0,
                transversality: transversality_check(dep.u, dep.w, &params).unwrap_or(f64::NAN),
                semi_compact: distance <= 1e-2,
                landing_distance_to_wounded: distance,
            })
        }
        _ => return Err(bad(format!("{} jumps; at most one is supported", jumps.len()))),
    };
    if (kind == WaveKind::Smooth) != jump.is_none() {
        return Err(bad(format!("kind {} does not match the jump count", kind.label())));
    }
    Ok(SingularOrbit {
        kind,
        params,
        slow_arcs: arcs,
        jump,
        healed: params.healed_state(),
        wounded: params.wounded_state(),
        canard: None,
        folded_focus_clearance: f64::INFINITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use woundwave::orbits::{construct_shock_wave, construct_smooth_wave, IntegratorConfig};

    fn header(p: &Params, kind: WaveKind) -> String {
        format!(
            "# woundwave 0 wave alpha={} beta={} c={} kind={}",
            f17(p.alpha()),
            f17(p.beta()),
            f17(p.c()),
            kind.label()
        )
    }

    #[test]
    fn shock_round_trip_keeps_profile_and_jump() {
        let p = Params::case2();
        let orbit = construct_shock_wave(&p, &IntegratorConfig::default()).unwrap();
        let text = orbit_csv(&orbit, &header(&p, orbit.kind));
        let back = read_orbit_csv(&text).unwrap();
        assert_eq!(back.profile(), orbit.profile());
        let (a, b) = (orbit.jump.unwrap(), back.jump.unwrap());
        assert_eq!((a.u_star, a.w_depart, a.w_land), (b.u_star, b.w_depart, b.w_land));
        assert_eq!(a.transversality, b.transversality);
    }

    #[test]
    fn smooth_round_trip() {
        let p = Params::case1();
        let orbit = construct_smooth_wave(&p, &IntegratorConfig::default()).unwrap();
        let back = read_orbit_csv(&orbit_csv(&orbit, &header(&p, orbit.kind))).unwrap();
        assert_eq!(back.profile(), orbit.profile());
        assert!(back.jump.is_none());
    }

    #[test]
    fn malformed_files_are_invalid() {
        assert!(read_orbit_csv("").is_err());
        assert!(read_orbit_csv("z,u,w,v,side,arc_id\n").is_err());
        let h = "# woundwave 0 wave alpha=0.4 beta=2.5 c=1 kind=smooth\n";
        assert!(read_orbit_csv(&format!("{h}{COLUMNS}\n0,1,0,0,S_a\n")).is_err());
        assert!(read_orbit_csv(&format!("{h}{COLUMNS}\n1,1,0,0,S_a,0\n0,1,0,0,S_a,0\n")).is_err());
    }
}
