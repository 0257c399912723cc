//! Method-of-lines simulation of the diffusive model
//!
//! ```text
//! u_t = u f(u, w) + eps u_xx
//! w_t = -(w u_x)_x + alpha w (beta u - 1) + eps w_xx
//! ```
//!
//! on a uniform cell-centred grid. Fluxes are evaluated at cell faces so the
//! scheme is conservative; time stepping is SSP-RK3 with the step chosen from
//! the advective and diffusive limits each step.

use serde::Serialize;
use thiserror::Error;

use crate::equilibria::{eigen2, jacobian_ds};
use crate::model::{ModelParams, PhasePoint};
use crate::orbits::{integrate_layer_fibre, OrbitError, SingularOrbit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid field: {0}")]
    Field(String),
    #[error("non-finite values at t = {t}")]
    Blowup { t: f64, last_good: Box<Field1D> },
    #[error("time step {dt:e} underflowed at t = {t}")]
    StepUnderflow { t: f64, dt: f64 },
    #[error("cannot seed from orbit: {0}")]
    Seed(String),
    #[error("level {level} not crossed at t = {t}")]
    LevelNotCrossed { t: f64, level: f64 },
    #[error("need at least {needed} snapshots after the transient, have {have}")]
    TooFewSnapshots { needed: usize, have: usize },
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}

/// Cell averages on `[x0, x0 + n dx]`; cell `i` is centred at `x0 + (i + 1/2) dx`.
///
/// `x0` is a lab-frame coordinate, so a comoving run advances it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Field1D {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub x0: f64,
    pub dx: f64,
    pub t: f64,
}

impl Field1D {
    pub fn new(u: Vec<f64>, w: Vec<f64>, x0: f64, dx: f64, t: f64) -> Result<Self, PdeError> {
        if u.len() != w.len() {
            return Err(PdeError::Field(format!("lengths differ: {} vs {}", u.len(), w.len())));
        }
        if !(dx > 0.0) || !x0.is_finite() || !t.is_finite() {
            return Err(PdeError::Field(format!("bad grid x0 = {x0}, dx = {dx}, t = {t}")));
        }
        if u.iter().chain(&w).any(|v| !v.is_finite()) {
            return Err(PdeError::Field("non-finite values".into()));
        }
        Ok(Self { u, w, x0, dx, t })
    }

    pub fn uniform(state: PhasePoint<f64>, n: usize, x0: f64, dx: f64) -> Self {
        Self {
            u: vec![state.u; n],
            w: vec![state.w; n],
            x0,
            dx,
            t: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.dx
    }

    pub fn mass_w(&self) -> f64 {
        self.w.iter().sum::<f64>() * self.dx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Ghost cells held at `H` on the left and `W` on the right.
    Clamped,
    ZeroFlux,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Lab,
    Comoving(f64),
}

impl Frame {
    pub fn speed(&self) -> f64 {
        match self {
            Frame::Lab => 0.0,
            Frame::Comoving(s) => *s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeConfig {
    pub length: f64,
    pub n: usize,
    pub eps: f64,
    pub boundary: BoundaryMode,
    /// Fraction of the stability limit used per step.
    pub safety: f64,
    pub max_dt: f64,
    pub min_dt: f64,
    pub frame: Frame,
    /// First-order upwind face values; required when `eps == 0`.
    pub upwind: bool,
    /// Reaction terms on. Switching them off is a test hook.
    pub kinetics: bool,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            length: 40.0,
            n: 4000,
            eps: 1e-3,
            boundary: BoundaryMode::Clamped,
            safety: 0.4,
            max_dt: 0.05,
            min_dt: 1e-12,
            frame: Frame::Lab,
            upwind: false,
            kinetics: true,
        }
    }
}

impl PdeConfig {
    /// Grid fine enough to put `cells_per_eps` cells in each length `eps`,
    /// never coarser than `base_n`.
    pub fn resolved(eps: f64, length: f64, base_n: usize, cells_per_eps: f64) -> Self {
        let n = if eps > 0.0 {
            base_n.max((length * cells_per_eps / eps).ceil() as usize)
        } else {
            base_n
        };
        Self {
            length,
            n,
            eps,
            ..Self::default()
        }
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn validate(&self) -> Result<(), PdeError> {
        let bad = |m: String| Err(PdeError::Config(m));
        if self.n < 64 {
            return bad(format!("grid size {} is below 64", self.n));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad(format!("domain length {} must be positive", self.length));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("eps {} must be nonnegative", self.eps));
        }
        if self.eps == 0.0 && !self.upwind {
            return bad("eps = 0 requires upwinded advection".into());
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad(format!("safety factor {} must lie in (0, 1]", self.safety));
        }
        if !(self.max_dt > 0.0 && self.min_dt > 0.0 && self.min_dt <= self.max_dt) {
            return bad("need 0 < min_dt <= max_dt".into());
        }
        if !self.frame.speed().is_finite() {
            return bad("frame speed must be finite".into());
        }
        Ok(())
    }
}

struct Ghosts {
    left: Option<(f64, f64)>,
    right: Option<(f64, f64)>,
}

fn ghosts(p: &ModelParams<f64>, cfg: &PdeConfig) -> Ghosts {
    match cfg.boundary {
        BoundaryMode::Clamped => {
            let h = p.healed_state();
            let w = p.wounded_state();
            Ghosts {
                left: Some((h.u, h.w)),
                right: Some((w.u, w.w)),
            }
        }
        BoundaryMode::ZeroFlux => Ghosts {
            left: None,
            right: None,
        },
    }
}

/// Face fluxes for `(u, w)` between states `l` and `r`.
#[inline]
fn face_flux(l: (f64, f64), r: (f64, f64), dx: f64, eps: f64, s: f64, upwind: bool) -> (f64, f64) {
    let ux = (r.0 - l.0) / dx;
    let a = ux - s;
    let (u_face, w_face) = if upwind {
        (if s > 0.0 { r.0 } else { l.0 }, if a > 0.0 { l.1 } else { r.1 })
    } else {
        (0.5 * (l.0 + r.0), 0.5 * (l.1 + r.1))
    };
    (-s * u_face - eps * ux, a * w_face - eps * (r.1 - l.1) / dx)
}

// Flat slices rather than a struct keep the stage buffers reusable.
#[allow(clippy::too_many_arguments)]
fn rhs_into(
    u: &[f64],
    w: &[f64],
    dx: f64,
    p: &ModelParams<f64>,
    cfg: &PdeConfig,
    g: &Ghosts,
    du: &mut [f64],
    dw: &mut [f64],
) {
    let n = u.len();
    let s = cfg.frame.speed();
    let (alpha, beta) = (p.alpha(), p.beta());
    let flux = |l: (f64, f64), r: (f64, f64)| face_flux(l, r, dx, cfg.eps, s, cfg.upwind);
    let mut left = match g.left {
        Some(gl) => flux(gl, (u[0], w[0])),
        None => (0.0, 0.0),
    };
    for i in 0..n {
        let right = if i + 1 < n {
            flux((u[i], w[i]), (u[i + 1], w[i + 1]))
        } else {
            match g.right {
                Some(gr) => flux((u[i], w[i]), gr),
                None => (0.0, 0.0),
            }
        };
        let mut fu = -(right.0 - left.0) / dx;
        let mut fw = -(right.1 - left.1) / dx;
        if cfg.kinetics {
            fu += u[i] * (1.0 - u[i] - w[i]);
            fw += alpha * w[i] * (beta * u[i] - 1.0);
        }
        du[i] = fu;
        dw[i] = fw;
        left = right;
    }
}

/// Right-hand side of the semi-discrete system.
pub fn semidiscrete_rhs(f: &Field1D, p: &ModelParams<f64>, cfg: &PdeConfig) -> (Vec<f64>, Vec<f64>) {
    let mut du = vec![0.0; f.len()];
    let mut dw = vec![0.0; f.len()];
    rhs_into(&f.u, &f.w, f.dx, p, cfg, &ghosts(p, cfg), &mut du, &mut dw);
    (du, dw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepLimit {
    Advective,
    Diffusive,
    Cap,
}

/// Counters and extremes gathered while stepping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    pub steps: usize,
    pub advective_limited: usize,
    pub diffusive_limited: usize,
    pub cap_limited: usize,
    pub min_u: f64,
    pub min_w: f64,
}

impl Default for StepStats {
    fn default() -> Self {
        Self {
            steps: 0,
            advective_limited: 0,
            diffusive_limited: 0,
            cap_limited: 0,
            min_u: f64::INFINITY,
            min_w: f64::INFINITY,
        }
    }
}

impl StepStats {
    fn record(&mut self, limit: StepLimit, f: &Field1D) {
        self.steps += 1;
        match limit {
            StepLimit::Advective => self.advective_limited += 1,
            StepLimit::Diffusive => self.diffusive_limited += 1,
            StepLimit::Cap => self.cap_limited += 1,
        }
        for &v in &f.u {
            self.min_u = self.min_u.min(v);
        }
        for &v in &f.w {
            self.min_w = self.min_w.min(v);
        }
    }
}

/// Stable step for the current state and which limit binds.
pub fn stable_dt(f: &Field1D, p: &ModelParams<f64>, cfg: &PdeConfig) -> (f64, StepLimit) {
    let g = ghosts(p, cfg);
    let s = cfg.frame.speed();
    let mut a_max = s.abs();
    let n = f.len();
    let mut face = |l: f64, r: f64| a_max = a_max.max(((r - l) / f.dx - s).abs());
    if let Some((gu, _)) = g.left {
        face(gu, f.u[0]);
    }
    for i in 1..n {
        face(f.u[i - 1], f.u[i]);
    }
    if let Some((gu, _)) = g.right {
        face(f.u[n - 1], gu);
    }
    let adv = if a_max > 0.0 {
        cfg.safety * f.dx / a_max
    } else {
        f64::INFINITY
    };
    let diff = if cfg.eps > 0.0 {
        cfg.safety * f.dx * f.dx / (2.0 * cfg.eps)
    } else {
        f64::INFINITY
    };
    let (dt, limit) = if adv <= diff {
        (adv, StepLimit::Advective)
    } else {
        (diff, StepLimit::Diffusive)
    };
    if cfg.max_dt < dt {
        (cfg.max_dt, StepLimit::Cap)
    } else {
        (dt, limit)
    }
}

/// Zeroes magnitudes far below any physical scale. Exponential tails
/// otherwise decay into subnormals, which are very slow on most hardware.
#[inline]
fn flush(v: f64) -> f64 {
    if v.abs() < 1e-250 {
        0.0
    } else {
        v
    }
}

/// Advances `f` in place to `t_end` with SSP-RK3.
pub fn advance(
    f: &mut Field1D,
    t_end: f64,
    p: &ModelParams<f64>,
    cfg: &PdeConfig,
    stats: &mut StepStats,
) -> Result<(), PdeError> {
    cfg.validate()?;
    let n = f.len();
    let g = ghosts(p, cfg);
    let s = cfg.frame.speed();
    let (mut ku, mut kw) = (vec![0.0; n], vec![0.0; n]);
    let (mut u1, mut w1) = (vec![0.0; n], vec![0.0; n]);
    let (mut u2, mut w2) = (vec![0.0; n], vec![0.0; n]);
    let finish = t_end - 1e-13 * t_end.abs().max(1.0);
    while f.t < finish {
        let (mut dt, limit) = stable_dt(f, p, cfg);
        let last = f.t + dt >= finish;
        if last {
            dt = t_end - f.t;
        } else if dt < cfg.min_dt {
            return Err(PdeError::StepUnderflow { t: f.t, dt });
        }
        rhs_into(&f.u, &f.w, f.dx, p, cfg, &g, &mut ku, &mut kw);
        for i in 0..n {
            u1[i] = f.u[i] + dt * ku[i];
            w1[i] = f.w[i] + dt * kw[i];
        }
        rhs_into(&u1, &w1, f.dx, p, cfg, &g, &mut ku, &mut kw);
        for i in 0..n {
            u2[i] = 0.75 * f.u[i] + 0.25 * (u1[i] + dt * ku[i]);
            w2[i] = 0.75 * f.w[i] + 0.25 * (w1[i] + dt * kw[i]);
        }
        rhs_into(&u2, &w2, f.dx, p, cfg, &g, &mut ku, &mut kw);
        // The new state goes into the first-stage buffers so `f` survives a blowup.
        let mut finite = true;
        for i in 0..n {
            u1[i] = flush((f.u[i] + 2.0 * (u2[i] + dt * ku[i])) / 3.0);
            w1[i] = flush((f.w[i] + 2.0 * (w2[i] + dt * kw[i])) / 3.0);
            finite &= u1[i].is_finite() && w1[i].is_finite();
        }
        if !finite {
            return Err(PdeError::Blowup {
                t: f.t + dt,
                last_good: Box::new(f.clone()),
            });
        }
        std::mem::swap(&mut f.u, &mut u1);
        std::mem::swap(&mut f.w, &mut w1);
        f.t = if last { t_end } else { f.t + dt };
        f.x0 += s * dt;
        stats.record(limit, f);
    }
    Ok(())
}

pub fn step_to(f: &Field1D, t_end: f64, p: &ModelParams<f64>, cfg: &PdeConfig) -> Result<Field1D, PdeError> {
    let mut out = f.clone();
    advance(&mut out, t_end, p, cfg, &mut StepStats::default())?;
    Ok(out)
}

/// Snapshots of the evolution at each time in `times` (ascending).
pub fn simulate(
    seed: &Field1D,
    times: &[f64],
    p: &ModelParams<f64>,
    cfg: &PdeConfig,
) -> Result<(Vec<Field1D>, StepStats), PdeError> {
    let mut f = seed.clone();
    let mut stats = StepStats::default();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        advance(&mut f, t, p, cfg, &mut stats)?;
        out.push(f.clone());
    }
    Ok((out, stats))
}

/// Level used to track the front: midway between the `u` limits.
pub fn front_level(p: &ModelParams<f64>) -> f64 {
    0.5 * (1.0 + 1.0 / p.beta())
}

/// Rightmost upward crossing of `level` by `u`, linearly interpolated.
pub fn front_position(f: &Field1D, level: f64) -> Option<f64> {
    let n = f.len();
    let i = (0..n - 1).rev().find(|&i| f.u[i] < level)?;
    let (a, b) = (f.u[i], f.u[i + 1]);
    if b < level {
        return None;
    }
    let t = (level - a) / (b - a);
    Some(f.x(i) + t * f.dx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveSpeed {
    pub speed: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the linear fit.
    pub residual: f64,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

/// Least-squares front speed over snapshots with `t >= t_min`.
pub fn measure_wavespeed(history: &[Field1D], level: f64, t_min: f64) -> Result<WaveSpeed, PdeError> {
    let used: Vec<&Field1D> = history.iter().filter(|f| f.t >= t_min).collect();
    if used.len() < 10 {
        return Err(PdeError::TooFewSnapshots {
            needed: 10,
            have: used.len(),
        });
    }
    let mut times = Vec::with_capacity(used.len());
    let mut positions = Vec::with_capacity(used.len());
    for f in used {
        let x = front_position(f, level).ok_or(PdeError::LevelNotCrossed { t: f.t, level })?;
        times.push(f.t);
        positions.push(x);
    }
    let m = times.len() as f64;
    let tm = times.iter().sum::<f64>() / m;
    let xm = positions.iter().sum::<f64>() / m;
    let (mut stt, mut stx) = (0.0, 0.0);
    for (t, x) in times.iter().zip(&positions) {
        stt += (t - tm) * (t - tm);
        stx += (t - tm) * (x - xm);
    }
    let speed = stx / stt;
    let intercept = xm - speed * tm;
    let residual = (times
        .iter()
        .zip(&positions)
        .map(|(t, x)| (x - intercept - speed * t).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(WaveSpeed {
        speed,
        intercept,
        residual,
        times,
        positions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShockWidth {
    pub t: f64,
    /// Location of the steepest descent in `w`.
    pub x: f64,
    pub max_slope: f64,
    pub width: f64,
}

/// Maximum-slope width `delta_w / max |w_x|` of the steepest drop in `w`.
///
/// The slope maximum is refined by a parabola through the three largest
/// neighbouring face slopes.
pub fn shock_width(f: &Field1D, delta_w: f64) -> ShockWidth {
    let n = f.len();
    let slope = |i: usize| -(f.w[i + 1] - f.w[i]) / f.dx;
    let k = (0..n - 1)
        .max_by(|a, b| slope(*a).total_cmp(&slope(*b)))
        .expect("grid has at least two cells");
    let (mut peak, mut offset) = (slope(k), 0.0);
    if k > 0 && k + 2 < n {
        let (a, b, c) = (slope(k - 1), slope(k), slope(k + 1));
        let curv = a - 2.0 * b + c;
        if curv < 0.0 {
            offset = 0.5 * (a - c) / curv;
            peak = b - 0.25 * (a - c) * offset;
        }
    }
    ShockWidth {
        t: f.t,
        x: f.x0 + (k as f64 + 1.0 + offset) * f.dx,
        max_slope: peak,
        width: delta_w / peak,
    }
}

/// Least-squares exponent `k` in `width ~ eps^k`.
pub fn width_exponent(eps: &[f64], widths: &[f64]) -> f64 {
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = widths.iter().map(|w| w.ln()).collect();
    let m = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    sxy / sxx
}

/// Value of `reference` at lab position `x`, padded with its end values.
fn sample_at(reference: &Field1D, x: f64) -> (f64, f64) {
    let n = reference.len();
    let r = (x - reference.x0) / reference.dx - 0.5;
    if r <= 0.0 {
        return (reference.u[0], reference.w[0]);
    }
    if r >= (n - 1) as f64 {
        return (reference.u[n - 1], reference.w[n - 1]);
    }
    let i = r.floor() as usize;
    let t = r - i as f64;
    (
        reference.u[i] + t * (reference.u[i + 1] - reference.u[i]),
        reference.w[i] + t * (reference.w[i + 1] - reference.w[i]),
    )
}

/// L2 distance between `f` and `reference` translated by `shift`.
pub fn shifted_distance(f: &Field1D, reference: &Field1D, shift: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..f.len() {
        let (u, w) = sample_at(reference, f.x(i) - shift);
        sum += (f.u[i] - u).powi(2) + (f.w[i] - w).powi(2);
    }
    (sum * f.dx).sqrt()
}

/// Smallest L2 distance over translations of `reference` by
/// `nominal + [-window, window]`; returns `(distance, shift)`.
///
/// A coarse scan brackets the minimum, then golden-section refines it.
pub fn aligned_distance(f: &Field1D, reference: &Field1D, nominal: f64, window: f64) -> (f64, f64) {
    let d = |s: f64| shifted_distance(f, reference, s);
    let scan = 40;
    let h = 2.0 * window / scan as f64;
    let best = (0..=scan)
        .map(|k| nominal - window + k as f64 * h)
        .min_by(|a, b| d(*a).total_cmp(&d(*b)))
        .expect("non-empty scan");
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best - h, best + h);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (d(x1), d(x2));
    for _ in 0..60 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = d(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = d(x2);
        }
    }
    let s = 0.5 * (a + b);
    (d(s), s)
}

/// Samples a singular orbit onto the grid of `cfg` with the front at the
/// domain centre.
///
/// Across a jump the outer step in `w` is replaced by the layer fibre, with
/// its fast coordinate scaled by `eps`.
pub fn seed_from_orbit(orbit: &SingularOrbit<f64>, cfg: &PdeConfig) -> Result<Field1D, PdeError> {
    cfg.validate()?;
    let p = &orbit.params;
    let rows = orbit.profile();
    if rows.len() < 2 {
        return Err(PdeError::Seed("orbit has fewer than two samples".into()));
    }
    let (h, w_state) = (p.healed_state(), p.wounded_state());
    let end_tol = 1e-3;
    let first = PhasePoint::new(rows[0].u, rows[0].w);
    let last = PhasePoint::new(rows[rows.len() - 1].u, rows[rows.len() - 1].w);
    if first.distance(&h) > end_tol || last.distance(&w_state) > end_tol {
        return Err(PdeError::Seed(format!(
            "orbit runs from ({}, {}) to ({}, {}), not from H to W",
            first.u, first.w, last.u, last.w
        )));
    }
    let (z_lo, z_hi) = orbit.z_extent();
    if !(z_hi > z_lo) {
        return Err(PdeError::Seed("orbit has no z-extent".into()));
    }
    let zs: Vec<f64> = rows.iter().map(|r| r.z).collect();
    let level = front_level(p);
    let z_front = (1..rows.len())
        .rev()
        .find(|&k| rows[k - 1].u < level && rows[k].u >= level)
        .map(|k| {
            let (a, b) = (&rows[k - 1], &rows[k]);
            a.z + (level - a.u) / (b.u - a.u) * (b.z - a.z)
        })
        .ok_or_else(|| PdeError::Seed("orbit never crosses the front level".into()))?;

    // Ahead of the traced orbit the profile continues along the stable
    // direction of W. Padding with W itself would plant an exact w = 0 region
    // that invades the front, since w = 0 is invariant.
    let d_w = p.sheet_factor(w_state);
    let decay = eigen2(&jacobian_ds(w_state, p))
        .values
        .iter()
        .filter(|l| l.im == 0.0)
        .map(|l| l.re / d_w)
        .filter(|l| *l < 0.0)
        .fold(f64::NEG_INFINITY, f64::max);
    // The profile closes on W itself; the tail starts from the last traced row.
    let anchor = rows
        .iter()
        .rev()
        .find(|r| r.u != w_state.u || r.w != w_state.w)
        .unwrap_or(&rows[rows.len() - 1]);
    let (z_end, tail) = (anchor.z, PhasePoint::new(anchor.u, anchor.w));
    let outer = |z: f64| -> (f64, f64) {
        if z <= zs[0] {
            return (h.u, h.w);
        }
        if z >= z_end {
            if !decay.is_finite() {
                return (w_state.u, w_state.w);
            }
            let g = (decay * (z - z_end)).exp();
            return (
                w_state.u + g * (tail.u - w_state.u),
                w_state.w + g * (tail.w - w_state.w),
            );
        }
        let k = zs.partition_point(|v| *v <= z);
        let (a, b) = (&rows[k - 1], &rows[k]);
        let t = if b.z > a.z { (z - a.z) / (b.z - a.z) } else { 0.0 };
        (a.u + t * (b.u - a.u), a.w + t * (b.w - a.w))
    };

    // Inner profile: w along the layer fibre against z - z_jump.
    let inner = match (&orbit.jump, cfg.eps > 0.0) {
        (Some(j), true) => {
            let z_jump = (1..rows.len())
                .find(|&k| {
                    rows[k].z == rows[k - 1].z
                        && (rows[k].w - rows[k - 1].w).abs() > 0.5 * (j.w_depart - j.w_land).abs()
                })
                .map(|k| rows[k].z)
                .ok_or_else(|| PdeError::Seed("jump record without a jump in the profile".into()))?;
            let fibre = integrate_layer_fibre(j.u_star, j.w_depart, p, cfg.eps, j.w_land < j.w_depart)?;
            let ws: Vec<f64> = fibre.states.iter().map(|s| s.w).collect();
            let mid = 0.5 * (j.w_depart + j.w_land);
            let k = (1..ws.len())
                .find(|&k| (ws[k - 1] - mid) * (ws[k] - mid) <= 0.0)
                .ok_or_else(|| PdeError::Seed("layer fibre does not cross the jump midpoint".into()))?;
            let t = (mid - ws[k - 1]) / (ws[k] - ws[k - 1]);
            let y_mid = fibre.y[k - 1] + t * (fibre.y[k] - fibre.y[k - 1]);
            let ys: Vec<f64> = fibre.y.iter().map(|y| y - y_mid + z_jump).collect();
            Some((ys, ws, z_jump))
        }
        _ => None,
    };

    let dx = cfg.dx();
    let x_front = 0.5 * cfg.length;
    let mut u = Vec::with_capacity(cfg.n);
    let mut w = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let z = (i as f64 + 0.5) * dx - x_front + z_front;
        let (ui, mut wi) = outer(z);
        // Additive composite: the inner correction decays to zero on both sides.
        if let Some((ys, ws, z_jump)) = &inner {
            let w_in = if z <= ys[0] {
                ws[0]
            } else if z >= ys[ys.len() - 1] {
                ws[ws.len() - 1]
            } else {
                let k = ys.partition_point(|v| *v <= z).clamp(1, ys.len() - 1);
                let t = (z - ys[k - 1]) / (ys[k] - ys[k - 1]);
                ws[k - 1] + t * (ws[k] - ws[k - 1])
            };
            wi += w_in - if z < *z_jump { ws[0] } else { ws[ws.len() - 1] };
        }
        u.push(ui);
        w.push(wi);
    }
    Field1D::new(u, w, 0.0, dx, 0.0)
}
