//! Singular heteroclinic orbits from the healed to the wounded state.
//!
//! Invariant manifolds of the desingularised field are traced with
//! [`crate::integrate`] and stitched together in the travelling-wave
//! coordinate `z`, using `dz/dzbar = c^2 + u f(u, 2w)`. Three assemblies are
//! provided:
//!
//! * smooth: the stable manifold of `W` traced back to `H` on `S_a`;
//! * shock: `H` to a folded saddle on `S_a`, the canard continuation on `S_r`,
//!   and a fast jump onto the stable manifold of `W`;
//! * repelling-sheet jump: `H` on `S_r` straight to a jump onto the stable
//!   manifold of `W`.
//!
//! A jump at `u*` is admissible when the departure and landing heights are
//! equidistant from the wall, `w_depart + w_land = 2 F(u*)`, and it runs from
//! `S_r` down to `S_a`.

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{ds_field, embed_on_s, layer_eigenvalues, layer_field, trajectory_slope, SlowPoint};
use crate::equilibria::{census, EquilibriaError, EquilibriumKind, EquilibriumRecord, FoldedType, RegionReport};
use crate::integrate::{integrate, locate_root, Control, Direction, IntegrateError, Step, StepControl};
use crate::model::{free_capacity, ModelParams, PhasePoint, Sheet};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitError {
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("no connection: trace from {from} ended with {event:?}")]
    NoConnection { from: String, event: TerminalEvent },
    #[error("no canard connection: {0}")]
    NoCanardConnection(String),
    #[error("no admissible jump: {0}")]
    NoJump(String),
    #[error("jump is not transverse at u = {0}")]
    TransversalityFailure(f64),
    #[error("transversality expression is degenerate at u = {0} (u = 1/beta or u = 1)")]
    DegenerateTransversality(f64),
    #[error("arc leaves its sheet before the jump: {0}")]
    FoldTouch(String),
    #[error("layer fibre from ({u}, {w}) does not settle on S_a")]
    LayerDivergence { u: f64, w: f64 },
    #[error("integration failed: {0}")]
    Integrate(#[from] IntegrateError),
    #[error("equilibrium census failed: {0}")]
    Equilibria(#[from] EquilibriaError),
}

/// Rectangle outside of which traces are stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window<T> {
    pub u_min: T,
    pub u_max: T,
    pub w_min: T,
    pub w_max: T,
}

impl<T: Real> Default for Window<T> {
    fn default() -> Self {
        Self {
            u_min: T::lit(-0.5),
            u_max: T::lit(3.0),
            w_min: T::lit(-0.5),
            w_max: T::lit(3.0),
        }
    }
}

impl<T: Real> Window<T> {
    /// Signed distance to the boundary, positive inside.
    pub fn margin(&self, pt: PhasePoint<T>) -> T {
        (pt.u - self.u_min)
            .min(self.u_max - pt.u)
            .min(pt.w - self.w_min)
            .min(self.w_max - pt.w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig<T> {
    pub step: StepControl<T>,
    /// Distance from an equilibrium at which manifolds are launched.
    pub launch_offset: T,
    /// Radius at which convergence to a focus is declared.
    pub spiral_radius: T,
    pub max_arc_length: T,
    pub max_zbar: T,
    /// Maximum arc-length gap between stored samples.
    pub sample_spacing: T,
    /// Half-width of the band around the fold treated as "on F".
    pub fold_tol: T,
    pub window: Window<T>,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            step: StepControl::default(),
            launch_offset: T::lit(1e-6),
            spiral_radius: T::lit(1e-4),
            max_arc_length: T::lit(50.0),
            max_zbar: T::lit(1e4),
            sample_spacing: T::lit(5e-4),
            fold_tol: T::tol(1e-12, 16.0),
            window: Window::default(),
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<(), OrbitError> {
        let positive = [
            ("abs_tol", self.step.abs_tol),
            ("rel_tol", self.step.rel_tol),
            ("max_step", self.step.max_step),
            ("min_step", self.step.min_step),
            ("launch_offset", self.launch_offset),
            ("spiral_radius", self.spiral_radius),
            ("max_arc_length", self.max_arc_length),
            ("max_zbar", self.max_zbar),
            ("sample_spacing", self.sample_spacing),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(OrbitError::Config(format!("{name} must be positive")));
            }
        }
        if self.launch_offset * T::lit(10.0) > self.spiral_radius {
            return Err(OrbitError::Config(
                "launch_offset must be much smaller than spiral_radius".into(),
            ));
        }
        if self.step.min_step >= self.step.max_step {
            return Err(OrbitError::Config("min_step must be below max_step".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    #[serde(rename = "stable+")]
    StablePlus,
    #[serde(rename = "stable-")]
    StableMinus,
    #[serde(rename = "unstable+")]
    UnstablePlus,
    #[serde(rename = "unstable-")]
    UnstableMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Manifold {
    Stable,
    Unstable,
}

impl Branch {
    pub fn new(which: Manifold, sign: i8) -> Self {
        match (which, sign >= 0) {
            (Manifold::Stable, true) => Branch::StablePlus,
            (Manifold::Stable, false) => Branch::StableMinus,
            (Manifold::Unstable, true) => Branch::UnstablePlus,
            (Manifold::Unstable, false) => Branch::UnstableMinus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalEvent {
    ReachedTarget,
    HitFold,
    LeftWindow,
    MaxLength,
    SpiralConverged,
}

/// A target equilibrium that stops a trace once within the spiral radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Target<T> {
    pub kind: EquilibriumKind,
    pub location: PhasePoint<T>,
    pub focus: bool,
}

impl<T: Real> Target<T> {
    pub fn from_record(r: &EquilibriumRecord<T>) -> Self {
        Self {
            kind: r.kind,
            location: r.location,
            focus: r.is_focus(),
        }
    }
}

/// Which events end a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StopSet<T> {
    pub fold: bool,
    pub targets: Vec<Target<T>>,
}

impl<T: Real> StopSet<T> {
    /// Fold crossings plus every census equilibrium except `skip`.
    pub fn from_census(report: &RegionReport<T>, skip: Option<EquilibriumKind>) -> Self {
        Self {
            fold: true,
            targets: report
                .records
                .iter()
                .filter(|r| Some(r.kind) != skip)
                .map(Target::from_record)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSample<T> {
    pub zbar: T,
    pub point: PhasePoint<T>,
}

/// Samples of one trajectory of the desingularised field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldTrace<T> {
    pub samples: Vec<TraceSample<T>>,
    pub origin: Option<EquilibriumRecord<T>>,
    pub branch: Option<Branch>,
    pub direction: Direction,
    pub terminal_event: TerminalEvent,
    pub terminal_target: Option<EquilibriumKind>,
    pub arc_length: T,
}

impl<T: Real> ManifoldTrace<T> {
    pub fn first(&self) -> PhasePoint<T> {
        self.samples[0].point
    }

    pub fn last(&self) -> PhasePoint<T> {
        self.samples[self.samples.len() - 1].point
    }

    pub fn points(&self) -> impl Iterator<Item = PhasePoint<T>> + '_ {
        self.samples.iter().map(|s| s.point)
    }

    /// Length of the leading run of samples along which `u` is strictly
    /// monotone, skipping the first sample when it sits on an equilibrium.
    pub fn monotone_prefix(&self) -> usize {
        let s = &self.samples;
        if s.len() < 2 {
            return s.len();
        }
        let dir = (s[1].point.u - s[0].point.u).signum();
        let mut n = 2;
        while n < s.len() && (s[n].point.u - s[n - 1].point.u) * dir > T::zero() {
            n += 1;
        }
        n
    }
}

fn to_point<T: Real>(y: &[T; 2]) -> PhasePoint<T> {
    PhasePoint::new(y[0], y[1])
}

/// Integrates the desingularised field from `start` until an event fires.
///
/// Samples are stored no further apart than `cfg.sample_spacing` in arc
/// length, using the step's cubic Hermite dense output. Targets are armed
/// only after the trace has been at least twice the spiral radius away, so a
/// launch next to an equilibrium does not stop immediately.
pub fn integrate_ds<T: Real>(
    start: PhasePoint<T>,
    direction: Direction,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    stops: &StopSet<T>,
) -> Result<ManifoldTrace<T>, OrbitError> {
    cfg.validate()?;
    if cfg.window.margin(start) < T::zero() {
        return Err(OrbitError::Precondition(format!(
            "start ({}, {}) lies outside the window",
            start.u, start.w
        )));
    }
    let field = |y: &[T; 2]| ds_field(to_point(y), p);
    let sign = direction.sign::<T>();
    let mut samples = vec![TraceSample {
        zbar: T::zero(),
        point: start,
    }];
    let mut armed: Vec<bool> = stops
        .targets
        .iter()
        .map(|t| start.distance(&t.location) > T::lit(2.0) * cfg.spiral_radius)
        .collect();
    let mut arc = T::zero();
    let mut hit: Option<(TerminalEvent, Option<Target<T>>)> = None;
    let fold_value = |y: &[T; 2]| p.sheet_factor(to_point(y));

    let monitor = |s: &Step<T, 2>| -> Control<T, ()> {
        let p0 = to_point(&s.y0);
        let p1 = to_point(&s.y1);
        let mut best: Option<(T, TerminalEvent, Option<Target<T>>)> = None;
        let mut consider = |tau: T, ev: TerminalEvent, tgt: Option<Target<T>>| {
            if best.as_ref().is_none_or(|b| tau < b.0) {
                best = Some((tau, ev, tgt));
            }
        };
        if cfg.window.margin(p1) < T::zero() {
            let (tau, _) = locate_root(&field, direction, s, |y| cfg.window.margin(to_point(y)), T::zero());
            consider(tau, TerminalEvent::LeftWindow, None);
        }
        if stops.fold {
            let d0 = fold_value(&s.y0);
            let d1 = fold_value(&s.y1);
            if d0 != T::zero() && (d0 > T::zero()) != (d1 > T::zero()) {
                let (tau, _) = locate_root(&field, direction, s, fold_value, cfg.fold_tol);
                consider(tau, TerminalEvent::HitFold, None);
            }
        }
        for (t, armed) in stops.targets.iter().zip(armed.iter_mut()) {
            let d1 = p1.distance(&t.location);
            if !*armed {
                *armed = d1 > T::lit(2.0) * cfg.spiral_radius;
                continue;
            }
            if d1 <= cfg.spiral_radius {
                let g = |y: &[T; 2]| to_point(y).distance(&t.location) - cfg.spiral_radius;
                let tau = if p0.distance(&t.location) > cfg.spiral_radius {
                    locate_root(&field, direction, s, g, T::zero()).0
                } else {
                    s.tau1
                };
                let ev = if t.focus {
                    TerminalEvent::SpiralConverged
                } else {
                    TerminalEvent::ReachedTarget
                };
                consider(tau, ev, Some(*t));
            }
        }
        let end_tau = best.as_ref().map_or(s.tau1, |b| b.0);
        // Dense samples up to (excluding) the end of this step or the event.
        let step_len = p0.distance(&p1);
        // The chord underestimates curved steps; bound by the endpoint speeds.
        let speed = |f: &[T; 2]| f[0].hypot(f[1]) * s.h();
        let reach = step_len.max(speed(&s.f0)).max(speed(&s.f1));
        let pieces = (T::lit(1.25) * reach / cfg.sample_spacing).ceil().max(T::one());
        let n = pieces.to_usize().unwrap_or(1).min(10_000);
        for k in 1..n {
            let tau = s.tau0 + s.h() * T::from_count(k) / T::from_count(n);
            if tau >= end_tau {
                break;
            }
            samples.push(TraceSample {
                zbar: sign * tau,
                point: to_point(&s.interpolate(tau)),
            });
        }
        if let Some((tau, ev, tgt)) = best {
            hit = Some((ev, tgt));
            return Control::StopAt(tau, ());
        }
        samples.push(TraceSample {
            zbar: sign * s.tau1,
            point: p1,
        });
        arc = arc + step_len;
        if arc > cfg.max_arc_length || s.tau1 > cfg.max_zbar {
            hit = Some((TerminalEvent::MaxLength, None));
            return Control::Stop(());
        }
        Control::Continue
    };
    let sol = integrate(field, [start.u, start.w], direction, &cfg.step, monitor)?;
    let (event, target) = hit.expect("integration stops only through the monitor");
    if event != TerminalEvent::MaxLength {
        let tau = *sol.tau.last().expect("non-empty");
        let y = sol.last();
        let prev = samples.last().expect("non-empty").point;
        arc = arc + prev.distance(&to_point(&y));
        samples.push(TraceSample {
            zbar: sign * tau,
            point: to_point(&y),
        });
    }
    if let Some(t) = target {
        // Snap onto the equilibrium itself.
        let last = samples.last().expect("non-empty").zbar;
        samples.push(TraceSample {
            zbar: last,
            point: t.location,
        });
    }
    Ok(ManifoldTrace {
        samples,
        origin: None,
        branch: None,
        direction,
        terminal_event: event,
        terminal_target: target.map(|t| t.kind),
        arc_length: arc,
    })
}

/// Real eigenvector of a saddle record for the chosen manifold.
fn saddle_direction<T: Real>(eq: &EquilibriumRecord<T>, which: Manifold) -> Result<[T; 2], OrbitError> {
    if !eq.is_saddle() {
        return Err(OrbitError::Precondition(format!(
            "{} is a {}, not a saddle",
            eq.kind.label(),
            eq.classification.linear_type.label()
        )));
    }
    // Eigenvalues are stored in ascending order: stable first.
    let idx = match which {
        Manifold::Stable => 0,
        Manifold::Unstable => 1,
    };
    let v = eq.eigen.vectors[idx];
    Ok([v[0].re, v[1].re])
}

/// Launch point `location + sign * delta * eigenvector`.
pub fn launch_point<T: Real>(
    eq: &EquilibriumRecord<T>,
    which: Manifold,
    sign: i8,
    cfg: &IntegratorConfig<T>,
) -> Result<PhasePoint<T>, OrbitError> {
    let v = saddle_direction(eq, which)?;
    let s = if sign >= 0 { T::one() } else { -T::one() };
    Ok(PhasePoint::new(
        eq.location.u + s * cfg.launch_offset * v[0],
        eq.location.w + s * cfg.launch_offset * v[1],
    ))
}

/// Traces one branch of a saddle's stable (backward) or unstable (forward)
/// manifold.
pub fn trace_saddle_manifold<T: Real>(
    eq: &EquilibriumRecord<T>,
    which: Manifold,
    sign: i8,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    stops: &StopSet<T>,
) -> Result<ManifoldTrace<T>, OrbitError> {
    let start = launch_point(eq, which, sign, cfg)?;
    let direction = match which {
        Manifold::Stable => Direction::Backward,
        Manifold::Unstable => Direction::Forward,
    };
    let mut trace = integrate_ds(start, direction, p, cfg, stops)?;
    trace.samples.insert(
        0,
        TraceSample {
            zbar: T::zero(),
            point: eq.location,
        },
    );
    trace.arc_length = trace.arc_length + cfg.launch_offset;
    trace.origin = Some(*eq);
    trace.branch = Some(Branch::new(which, sign));
    Ok(trace)
}

/// Picks the branch sign whose launch point satisfies `accept`.
fn branch_sign<T: Real, F>(
    eq: &EquilibriumRecord<T>,
    which: Manifold,
    cfg: &IntegratorConfig<T>,
    accept: F,
) -> Result<i8, OrbitError>
where
    F: Fn(PhasePoint<T>) -> bool,
{
    for sign in [1i8, -1] {
        if accept(launch_point(eq, which, sign, cfg)?) {
            return Ok(sign);
        }
    }
    Err(OrbitError::Precondition(format!(
        "no branch of {} satisfies the launch condition",
        eq.kind.label()
    )))
}

/// `(z, point)` samples of a trace, sorted by ascending `z`.
///
/// `dz = (c^2 + u f(u, 2w)) dzbar` is integrated by the trapezoid rule from
/// `z = 0` at the first sample; along an arc confined to one sheet `z` is
/// monotone, so sorting amounts to an optional reversal.
pub fn reparameterise_to_z<T: Real>(trace: &ManifoldTrace<T>, p: &ModelParams<T>) -> Vec<(T, PhasePoint<T>)> {
    let mut out = Vec::with_capacity(trace.samples.len());
    let mut z = T::zero();
    let half = T::lit(0.5);
    for (i, s) in trace.samples.iter().enumerate() {
        if i > 0 {
            let prev = &trace.samples[i - 1];
            let d = half * (p.sheet_factor(prev.point) + p.sheet_factor(s.point));
            z = z + d * (s.zbar - prev.zbar);
        }
        out.push((z, s.point));
    }
    if out.len() > 1 && out[out.len() - 1].0 < out[0].0 {
        out.reverse();
    }
    out
}

/// A curve `w(u)` over strictly increasing nodes with slopes `dw/du`,
/// evaluated by cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCurve<T> {
    pub u: Vec<T>,
    pub w: Vec<T>,
    pub slope: Vec<T>,
}

impl<T: Real> MonotoneCurve<T> {
    /// Builds the curve from points that are already strictly monotone in
    /// `u`; slopes come from the desingularised field, with secants where the
    /// field vanishes.
    pub fn from_points(points: &[PhasePoint<T>], p: &ModelParams<T>) -> Option<Self> {
        if points.len() < 2 {
            return None;
        }
        let mut pts: Vec<PhasePoint<T>> = points.to_vec();
        if pts[pts.len() - 1].u < pts[0].u {
            pts.reverse();
        }
        if pts.windows(2).any(|w| w[1].u <= w[0].u) {
            return None;
        }
        let n = pts.len();
        let secant = |i: usize, j: usize| (pts[j].w - pts[i].w) / (pts[j].u - pts[i].u);
        let slope = (0..n)
            .map(|i| {
                let v = ds_field(pts[i], p);
                let speed = v[0].abs() + v[1].abs();
                let s = trajectory_slope(pts[i], p);
                if speed > T::lit(1e-9) && s.is_finite() && s.abs() < T::lit(1e6) {
                    s
                } else if i == 0 {
                    secant(0, 1)
                } else if i == n - 1 {
                    secant(n - 2, n - 1)
                } else {
                    secant(i - 1, i + 1)
                }
            })
            .collect();
        Some(Self {
            u: pts.iter().map(|q| q.u).collect(),
            w: pts.iter().map(|q| q.w).collect(),
            slope,
        })
    }

    pub fn range(&self) -> (T, T) {
        (self.u[0], self.u[self.u.len() - 1])
    }

    fn segment(&self, u: T) -> usize {
        let n = self.u.len();
        match self
            .u
            .binary_search_by(|x| x.partial_cmp(&u).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    pub fn eval(&self, u: T) -> T {
        let i = self.segment(u);
        let (u0, u1) = (self.u[i], self.u[i + 1]);
        let h = u1 - u0;
        let s = (u - u0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        (two * s3 - three * s2 + T::one()) * self.w[i]
            + (s3 - two * s2 + s) * h * self.slope[i]
            + (-two * s3 + three * s2) * self.w[i + 1]
            + (s3 - s2) * h * self.slope[i + 1]
    }
}

/// Fast jump between sheets at fixed `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpRecord<T> {
    pub u_star: T,
    pub w_depart: T,
    pub w_land: T,
    /// `w` of the landing manifold at `u*` minus `w_land`.
    pub landing_mismatch: T,
    pub transversality: T,
    /// Landing point within `1e-2` of the wounded state.
    pub semi_compact: bool,
    pub landing_distance_to_wounded: T,
}

fn jump_function<T: Real>(dep: &MonotoneCurve<T>, land: &MonotoneCurve<T>, p: &ModelParams<T>, u: T) -> T {
    dep.eval(u) + land.eval(u) - T::lit(2.0) * p.wall_unchecked(u)
}

/// Roots of `w_depart(u) + w_land(u) - 2F(u)` on the common `u`-range,
/// ordered along the departing arc (`ascending` says which way it runs).
pub fn solve_jumps<T: Real>(
    dep: &MonotoneCurve<T>,
    land: &MonotoneCurve<T>,
    p: &ModelParams<T>,
    ascending: bool,
    tol: T,
) -> Vec<T> {
    let (a0, a1) = dep.range();
    let (b0, b1) = land.range();
    let lo = a0.max(b0).max(T::lit(1e-12));
    let hi = a1.min(b1);
    if !(lo < hi) {
        return Vec::new();
    }
    let mut nodes: Vec<T> = dep
        .u
        .iter()
        .chain(land.u.iter())
        .copied()
        .filter(|u| *u > lo && *u < hi)
        .collect();
    nodes.push(lo);
    nodes.push(hi);
    nodes.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
    nodes.dedup();
    let g = |u: T| jump_function(dep, land, p, u);
    let mut roots = Vec::new();
    let mut g_prev = g(nodes[0]);
    if g_prev == T::zero() {
        roots.push(nodes[0]);
    }
    for k in 1..nodes.len() {
        let g_next = g(nodes[k]);
        if g_next == T::zero() {
            roots.push(nodes[k]);
        } else if g_prev != T::zero() && (g_prev > T::zero()) != (g_next > T::zero()) {
            let (mut a, mut b) = (nodes[k - 1], nodes[k]);
            let mut ga = g_prev;
            for _ in 0..200 {
                let m = T::lit(0.5) * (a + b);
                let gm = g(m);
                if (gm > T::zero()) == (ga > T::zero()) {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                }
                if b - a <= tol {
                    break;
                }
            }
            let mut root = T::lit(0.5) * (a + b);
            // One Newton polish with slopes of the flow through both points.
            let wd = dep.eval(root);
            let two_f = T::lit(2.0) * p.wall_unchecked(root);
            let dg = trajectory_slope(PhasePoint::new(root, wd), p)
                + trajectory_slope(PhasePoint::new(root, two_f - wd), p)
                - T::lit(2.0) * p.wall_slope(root);
            if dg.is_finite() && dg != T::zero() {
                let cand = root - g(root) / dg;
                if cand >= nodes[k - 1] && cand <= nodes[k] && g(cand).abs() <= g(root).abs() {
                    root = cand;
                }
            }
            roots.push(root);
        }
        g_prev = g_next;
    }
    if !ascending {
        roots.reverse();
    }
    roots
}

/// Closed-form transversality value for a jump from `(u, w*)`:
/// `alpha c^2 (beta u - 1)(u - 1) / (u f(u, w*) (c^2 - u w*))`.
pub fn transversality_check<T: Real>(u: T, w_star: T, p: &ModelParams<T>) -> Result<T, OrbitError> {
    let (alpha, beta, c) = (p.alpha(), p.beta(), p.c());
    let tiny = T::tol(1e-12, 64.0);
    if (beta * u - T::one()).abs() <= tiny || (u - T::one()).abs() <= tiny {
        return Err(OrbitError::DegenerateTransversality(u.to_f64_lossy()));
    }
    let c2 = c * c;
    let num = alpha * c2 * (beta * u - T::one()) * (u - T::one());
    let den = u * free_capacity(u, w_star) * (c2 - u * w_star);
    Ok(num / den)
}

/// `2F'(u) - dw/du|_(u, w*) - dw/du|_(u, 2F - w*)` from trajectory slopes.
pub fn transversality_geometric<T: Real>(u: T, w_star: T, p: &ModelParams<T>) -> T {
    let two = T::lit(2.0);
    let w_other = two * p.wall_unchecked(u) - w_star;
    two * p.wall_slope(u)
        - trajectory_slope(PhasePoint::new(u, w_star), p)
        - trajectory_slope(PhasePoint::new(u, w_other), p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveKind {
    Smooth,
    Shock,
    SrJump,
}

impl WaveKind {
    pub fn label(&self) -> &'static str {
        match self {
            WaveKind::Smooth => "smooth",
            WaveKind::Shock => "shock",
            WaveKind::SrJump => "sr-jump",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZSample<T> {
    pub z: T,
    pub point: PhasePoint<T>,
}

/// One slow arc in `z`, ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZArc<T> {
    pub id: usize,
    pub samples: Vec<ZSample<T>>,
    pub origin: Option<EquilibriumKind>,
    pub branch: Option<Branch>,
    pub terminal_event: TerminalEvent,
}

/// One row of an exported orbit profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow<T> {
    pub z: T,
    pub u: T,
    pub w: T,
    pub v: T,
    pub side: Sheet,
    pub arc_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularOrbit<T> {
    pub kind: WaveKind,
    pub params: ModelParams<T>,
    pub slow_arcs: Vec<ZArc<T>>,
    pub jump: Option<JumpRecord<T>>,
    pub healed: PhasePoint<T>,
    pub wounded: PhasePoint<T>,
    /// Canard point the orbit passes through, if any.
    pub canard: Option<PhasePoint<T>>,
    /// Closest approach to any folded focus (infinite when none exists).
    pub folded_focus_clearance: T,
}

impl<T: Real> SingularOrbit<T> {
    /// Concatenated `(z, u, w, v, side, arc)` rows in ascending `z`.
    pub fn profile(&self) -> Vec<ProfileRow<T>> {
        let p = &self.params;
        let tol = T::tol(1e-12, 16.0);
        self.slow_arcs
            .iter()
            .flat_map(|arc| {
                arc.samples.iter().map(move |s| ProfileRow {
                    z: s.z,
                    u: s.point.u,
                    w: s.point.w,
                    v: -p.u_kinetics(s.point) / p.c(),
                    side: p.sheet(s.point, tol),
                    arc_id: arc.id,
                })
            })
            .collect()
    }

    pub fn z_extent(&self) -> (T, T) {
        let first = self.slow_arcs[0].samples[0].z;
        let last_arc = &self.slow_arcs[self.slow_arcs.len() - 1];
        (first, last_arc.samples[last_arc.samples.len() - 1].z)
    }
}

fn z_arc<T: Real>(id: usize, trace: &ManifoldTrace<T>, p: &ModelParams<T>, shift: T) -> ZArc<T> {
    ZArc {
        id,
        samples: reparameterise_to_z(trace, p)
            .into_iter()
            .map(|(z, point)| ZSample { z: z + shift, point })
            .collect(),
        origin: trace.origin.map(|o| o.kind),
        branch: trace.branch,
        terminal_event: trace.terminal_event,
    }
}

/// Truncates a trace at the first crossing of `u = u_cut`, ending exactly at
/// `(u_cut, w_end)` with a linearly interpolated `zbar`.
fn cut_trace<T: Real>(trace: &ManifoldTrace<T>, u_cut: T, w_end: T) -> ManifoldTrace<T> {
    let s = &trace.samples;
    let mut out = trace.clone();
    for k in 1..s.len() {
        let (a, b) = (s[k - 1].point.u - u_cut, s[k].point.u - u_cut);
        if a == T::zero() || (a > T::zero()) != (b > T::zero()) || b == T::zero() {
            let t = if b == a { T::zero() } else { a / (a - b) };
            let zbar = s[k - 1].zbar + t * (s[k].zbar - s[k - 1].zbar);
            out.samples.truncate(k);
            if a == T::zero() {
                out.samples.pop();
            }
            out.samples.push(TraceSample {
                zbar,
                point: PhasePoint::new(u_cut, w_end),
            });
            return out;
        }
    }
    out
}

fn folded_foci<T: Real>(report: &RegionReport<T>) -> Vec<PhasePoint<T>> {
    report
        .records
        .iter()
        .filter(|r| r.classification.folded_type == Some(FoldedType::FoldedFocus))
        .map(|r| r.location)
        .collect()
}

fn clearance<T: Real>(arcs: &[ZArc<T>], foci: &[PhasePoint<T>]) -> T {
    let mut best = T::infinity();
    for arc in arcs {
        for s in &arc.samples {
            for f in foci {
                best = best.min(s.point.distance(f));
            }
        }
    }
    best
}

/// Stable manifold of `W` entering the positive quadrant, traced backward.
pub fn wounded_stable_manifold<T: Real>(
    report: &RegionReport<T>,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    into_quadrant: bool,
) -> Result<ManifoldTrace<T>, OrbitError> {
    let w = report.wounded();
    let sign = branch_sign(w, Manifold::Stable, cfg, |q| (q.w > T::zero()) == into_quadrant)?;
    let stops = StopSet::from_census(report, Some(EquilibriumKind::Wounded));
    trace_saddle_manifold(w, Manifold::Stable, sign, p, cfg, &stops)
}

/// Smooth wave: the stable manifold of `W` traced back onto `H` within `S_a`.
pub fn construct_smooth_wave<T: Real>(
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<SingularOrbit<T>, OrbitError> {
    let report = census(p)?;
    let h = report.healed();
    if h.classification.side != Sheet::Attracting {
        return Err(OrbitError::Precondition(format!(
            "smooth waves need H on S_a; H is on {}",
            h.classification.side.label()
        )));
    }
    let trace = wounded_stable_manifold(&report, p, cfg, true)?;
    let reached_h = trace.terminal_target == Some(EquilibriumKind::Healed)
        && matches!(
            trace.terminal_event,
            TerminalEvent::SpiralConverged | TerminalEvent::ReachedTarget
        );
    if !reached_h {
        return Err(OrbitError::NoConnection {
            from: "W".into(),
            event: trace.terminal_event,
        });
    }
    let arc = z_arc(0, &trace, p, T::zero());
    let arcs = vec![arc];
    Ok(SingularOrbit {
        kind: WaveKind::Smooth,
        params: *p,
        folded_focus_clearance: clearance(&arcs, &folded_foci(&report)),
        slow_arcs: arcs,
        jump: None,
        healed: p.healed_state(),
        wounded: p.wounded_state(),
        canard: None,
    })
}

/// The stable manifold of `W` as one curve monotone in `u`: the quadrant
/// branch (`u < 1`) joined through `W` to the branch below `w = 0`.
struct LandingManifold<T> {
    curve: MonotoneCurve<T>,
    quadrant: ManifoldTrace<T>,
    lower: ManifoldTrace<T>,
}

fn landing_manifold<T: Real>(
    report: &RegionReport<T>,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<LandingManifold<T>, OrbitError> {
    let quadrant = wounded_stable_manifold(report, p, cfg, true)?;
    let lower = wounded_stable_manifold(report, p, cfg, false)?;
    let qn = quadrant.monotone_prefix();
    let ln = lower.monotone_prefix();
    let mut pts: Vec<PhasePoint<T>> = quadrant.samples[..qn].iter().rev().map(|s| s.point).collect();
    pts.extend(lower.samples[1..ln].iter().map(|s| s.point));
    let curve = MonotoneCurve::from_points(&pts, p)
        .ok_or_else(|| OrbitError::NoJump("stable manifold of W is not monotone in u".into()))?;
    Ok(LandingManifold { curve, quadrant, lower })
}

/// Finds the first admissible jump from `departing` onto the stable manifold
/// of `W`, returning the jump and the landing trace cut at the jump.
fn match_jump<T: Real>(
    departing: &ManifoldTrace<T>,
    report: &RegionReport<T>,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<(JumpRecord<T>, ManifoldTrace<T>), OrbitError> {
    let land = landing_manifold(report, p, cfg)?;
    let n = departing.monotone_prefix();
    let pts: Vec<PhasePoint<T>> = departing.samples[..n].iter().map(|s| s.point).collect();
    let ascending = pts[pts.len() - 1].u > pts[0].u;
    let dep = MonotoneCurve::from_points(&pts, p)
        .ok_or_else(|| OrbitError::NoJump("departing arc is not monotone in u".into()))?;
    let roots = solve_jumps(&dep, &land.curve, p, ascending, T::tol(1e-13, 64.0));
    let tol = T::tol(1e-12, 16.0);
    let wounded = p.wounded_state();
    for u_star in roots {
        let w_depart = dep.eval(u_star);
        let f = p.wall_unchecked(u_star);
        let w_land = T::lit(2.0) * f - w_depart;
        let depart_pt = PhasePoint::new(u_star, w_depart);
        let land_pt = PhasePoint::new(u_star, w_land);
        if !(w_depart > f && f > w_land) {
            continue;
        }
        if p.sheet(depart_pt, tol) != Sheet::Repelling || p.sheet(land_pt, tol) != Sheet::Attracting {
            continue;
        }
        let transversality = transversality_check(u_star, w_depart, p)?;
        if transversality.abs() <= T::tol(1e-10, 64.0) {
            return Err(OrbitError::TransversalityFailure(u_star.to_f64_lossy()));
        }
        let landing_trace = if u_star <= T::one() {
            &land.quadrant
        } else {
            &land.lower
        };
        let cut = cut_trace(landing_trace, u_star, w_land);
        let dist = land_pt.distance(&wounded);
        return Ok((
            JumpRecord {
                u_star,
                w_depart,
                w_land,
                landing_mismatch: land.curve.eval(u_star) - w_land,
                transversality,
                semi_compact: dist <= T::lit(1e-2),
                landing_distance_to_wounded: dist,
            },
            cut,
        ));
    }
    Err(OrbitError::NoJump(
        "w_depart + w_land - 2F(u) has no admissible sign change on the common u-range".into(),
    ))
}

fn check_sheet<T: Real>(
    trace: &ManifoldTrace<T>,
    p: &ModelParams<T>,
    want: Sheet,
    skip_first: bool,
) -> Result<(), OrbitError> {
    let start = usize::from(skip_first);
    for s in trace.samples.iter().skip(start) {
        let side = p.sheet(s.point, T::zero());
        if side != want && side != Sheet::Fold {
            return Err(OrbitError::FoldTouch(format!(
                "sample ({}, {}) lies on {} instead of {}",
                s.point.u,
                s.point.w,
                side.label(),
                want.label()
            )));
        }
    }
    Ok(())
}

/// Shock-fronted wave through a folded saddle.
pub fn construct_shock_wave<T: Real>(
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<SingularOrbit<T>, OrbitError> {
    let report = census(p)?;
    if report.healed().classification.side != Sheet::Attracting {
        return Err(OrbitError::Precondition("shock waves need H on S_a".into()));
    }
    let saddles: Vec<EquilibriumRecord<T>> = report.folded_saddles().copied().collect();
    if saddles.is_empty() {
        return Err(OrbitError::NoCanardConnection(
            "no folded saddle in the positive quadrant".into(),
        ));
    }
    let mut last_err = None;
    for fs in &saddles {
        match shock_through(fs, &report, p, cfg) {
            Ok(orbit) => return Ok(orbit),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one folded saddle was tried"))
}

fn shock_through<T: Real>(
    fs: &EquilibriumRecord<T>,
    report: &RegionReport<T>,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<SingularOrbit<T>, OrbitError> {
    let stops = StopSet::from_census(report, Some(fs.kind));
    let on = |sheet: Sheet| move |q: PhasePoint<T>| p.sheet_factor(q) * sheet_sign::<T>(sheet) > T::zero();
    let sa_sign = branch_sign(fs, Manifold::Stable, cfg, on(Sheet::Attracting))?;
    let sr_sign = branch_sign(fs, Manifold::Stable, cfg, on(Sheet::Repelling))?;
    let arc_a = trace_saddle_manifold(fs, Manifold::Stable, sa_sign, p, cfg, &stops)?;
    if arc_a.terminal_target != Some(EquilibriumKind::Healed) {
        return Err(OrbitError::NoCanardConnection(format!(
            "S_a branch of {} ended with {:?} instead of reaching H",
            fs.kind.label(),
            arc_a.terminal_event
        )));
    }
    let arc_r = trace_saddle_manifold(fs, Manifold::Stable, sr_sign, p, cfg, &stops)?;
    let (jump, landing) = match_jump(&arc_r, report, p, cfg)?;
    let departing = cut_trace(&arc_r, jump.u_star, jump.w_depart);
    check_sheet(&arc_a, p, Sheet::Attracting, true)?;
    check_sheet(&departing, p, Sheet::Repelling, true)?;
    check_sheet(&landing, p, Sheet::Attracting, false)?;

    let a = z_arc(0, &arc_a, p, T::zero());
    let r = z_arc(1, &departing, p, T::zero());
    let z_jump = r.samples[r.samples.len() - 1].z;
    let mut l = z_arc(2, &landing, p, T::zero());
    let shift = z_jump - l.samples[0].z;
    for s in &mut l.samples {
        s.z = s.z + shift;
    }
    l.samples[0].z = z_jump;
    let arcs = vec![a, r, l];
    Ok(SingularOrbit {
        kind: WaveKind::Shock,
        params: *p,
        folded_focus_clearance: clearance(&arcs, &folded_foci(report)),
        slow_arcs: arcs,
        jump: Some(jump),
        healed: p.healed_state(),
        wounded: p.wounded_state(),
        canard: Some(fs.location),
    })
}

fn sheet_sign<T: Real>(sheet: Sheet) -> T {
    match sheet {
        Sheet::Attracting => T::one(),
        Sheet::Repelling => -T::one(),
        Sheet::Fold => T::zero(),
    }
}

/// Jump wave for `H` on `S_r`: the branch of the desingularised stable
/// manifold of `H` (the reduced unstable manifold) that reaches a jump onto
/// the stable manifold of `W`.
pub fn construct_sr_jump_wave<T: Real>(
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<SingularOrbit<T>, OrbitError> {
    let report = census(p)?;
    let h = *report.healed();
    if h.classification.side != Sheet::Repelling {
        return Err(OrbitError::Precondition(format!(
            "repelling-sheet jumps need H on S_r; H is on {}",
            h.classification.side.label()
        )));
    }
    let stops = StopSet::from_census(&report, Some(EquilibriumKind::Healed));
    let mut last_err = None;
    for sign in [1i8, -1] {
        let attempt = (|| {
            let departing_full = trace_saddle_manifold(&h, Manifold::Stable, sign, p, cfg, &stops)?;
            let (jump, landing) = match_jump(&departing_full, &report, p, cfg)?;
            let departing = cut_trace(&departing_full, jump.u_star, jump.w_depart);
            check_sheet(&departing, p, Sheet::Repelling, true)?;
            check_sheet(&landing, p, Sheet::Attracting, false)?;
            Ok::<_, OrbitError>((jump, departing, landing))
        })();
        match attempt {
            Ok((jump, departing, landing)) => {
                let r = z_arc(0, &departing, p, T::zero());
                let z_jump = r.samples[r.samples.len() - 1].z;
                let mut l = z_arc(1, &landing, p, T::zero());
                let shift = z_jump - l.samples[0].z;
                for s in &mut l.samples {
                    s.z = s.z + shift;
                }
                l.samples[0].z = z_jump;
                let arcs = vec![r, l];
                return Ok(SingularOrbit {
                    kind: WaveKind::SrJump,
                    params: *p,
                    folded_focus_clearance: clearance(&arcs, &folded_foci(&report)),
                    slow_arcs: arcs,
                    jump: Some(jump),
                    healed: p.healed_state(),
                    wounded: p.wounded_state(),
                    canard: None,
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("both branches were tried"))
}

/// Layer fibre leaving `S_r` at `(u*, w_depart)`, as `(y, point)` with the
/// fast coordinate `y` scaled by `eps_profile_scale`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerFibre<T> {
    pub y: Vec<T>,
    pub states: Vec<SlowPoint<T>>,
    pub landing: SlowPoint<T>,
}

/// Integrates the layer problem from a small perturbation of
/// `(u*, w_depart)` on `S_r` toward lower `w` until it settles.
pub fn integrate_layer_fibre<T: Real>(
    u_star: T,
    w_depart: T,
    p: &ModelParams<T>,
    eps_profile_scale: T,
    toward_lower_w: bool,
) -> Result<LayerFibre<T>, OrbitError> {
    let base = embed_on_s(PhasePoint::new(u_star, w_depart), p);
    let lambda3 = layer_eigenvalues(&base, p)[2];
    if !(lambda3 > T::zero()) {
        return Err(OrbitError::Precondition(format!(
            "({u_star}, {w_depart}) is not on S_r (lambda3 = {lambda3})"
        )));
    }
    let c = p.c();
    // Unstable eigenvector in (v, w) of [[-c, u], [w, -c + v]].
    let ev = [base.u, c + lambda3];
    let norm = ev[0].hypot(ev[1]);
    let delta = T::lit(1e-7);
    let s = if toward_lower_w { -delta } else { delta };
    let start = [base.v + s * ev[0] / norm, base.w + s * ev[1] / norm];
    let field = |y: &[T; 2]| {
        let pt = SlowPoint {
            v: y[0],
            w: y[1],
            ..base
        };
        let g = layer_field(&pt, p);
        [g[1], g[2]]
    };
    let settle = T::tol(1e-12, 64.0);
    let bound = T::lit(1e3);
    let y_max = T::lit(1e4) / c;
    let ctl = StepControl {
        abs_tol: T::tol(1e-12, 16.0),
        rel_tol: T::tol(1e-10, 16.0),
        ..StepControl::default()
    };
    #[derive(Clone, Copy, PartialEq)]
    enum End {
        Settled,
        Diverged,
    }
    let sol = integrate(field, start, Direction::Forward, &ctl, |st: &Step<T, 2>| {
        let g = field(&st.y1);
        if g[0].abs() + g[1].abs() <= settle {
            Control::Stop(End::Settled)
        } else if st.y1[0].abs() > bound || st.y1[1].abs() > bound || st.tau1 > y_max {
            Control::Stop(End::Diverged)
        } else {
            Control::Continue
        }
    })?;
    if sol.event == End::Diverged {
        return Err(OrbitError::LayerDivergence {
            u: u_star.to_f64_lossy(),
            w: w_depart.to_f64_lossy(),
        });
    }
    let states: Vec<SlowPoint<T>> = sol
        .y
        .iter()
        .map(|y| SlowPoint {
            v: y[0],
            w: y[1],
            ..base
        })
        .collect();
    let landing = states[states.len() - 1];
    let lam = layer_eigenvalues(&landing, p);
    if !(lam[2] < T::zero()) {
        return Err(OrbitError::LayerDivergence {
            u: u_star.to_f64_lossy(),
            w: w_depart.to_f64_lossy(),
        });
    }
    Ok(LayerFibre {
        y: sol.tau.iter().map(|t| *t * eps_profile_scale).collect(),
        states,
        landing,
    })
}

/// Bisection in `c` for the loss of the smooth connection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalSpeed<T> {
    pub c: T,
    /// Largest speed found without a smooth wave.
    pub c_fail: T,
    /// Smallest speed found with a smooth wave.
    pub c_success: T,
    pub iterations: usize,
}

pub fn critical_speed<T: Real>(
    p: &ModelParams<T>,
    c_fail: T,
    c_success: T,
    tol: T,
    cfg: &IntegratorConfig<T>,
) -> Result<CriticalSpeed<T>, OrbitError> {
    let works = |c: T| -> Result<bool, OrbitError> {
        let q = p.with_speed(c).map_err(|e| OrbitError::Precondition(e.to_string()))?;
        match construct_smooth_wave(&q, cfg) {
            Ok(_) => Ok(true),
            Err(OrbitError::NoConnection { .. }) | Err(OrbitError::Precondition(_)) => Ok(false),
            Err(e) => Err(e),
        }
    };
    if works(c_fail)? || !works(c_success)? {
        return Err(OrbitError::Precondition(
            "bracket must fail at its first speed and succeed at its second".into(),
        ));
    }
    let (mut lo, mut hi) = (c_fail, c_success);
    let mut iterations = 0;
    while (hi - lo).abs() > tol && iterations < 200 {
        let mid = T::lit(0.5) * (lo + hi);
        if works(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Ok(CriticalSpeed {
        c: T::lit(0.5) * (lo + hi),
        c_fail: lo,
        c_success: hi,
        iterations,
    })
}

/// Where the stable manifold of `W` hits the wall, bracketed by the nearest
/// canard points (including `C0`) on either side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WallIntersection<T> {
    pub point: PhasePoint<T>,
    pub below: Option<EquilibriumKind>,
    pub above: Option<EquilibriumKind>,
}

pub fn wall_intersection<T: Real>(
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Option<WallIntersection<T>>, OrbitError> {
    let report = census(p)?;
    let trace = wounded_stable_manifold(&report, p, cfg, true)?;
    if trace.terminal_event != TerminalEvent::HitFold {
        return Ok(None);
    }
    let hit = trace.last();
    let mut below: Option<(T, EquilibriumKind)> = None;
    let mut above: Option<(T, EquilibriumKind)> = None;
    for r in report.records.iter().filter(|r| r.classification.side == Sheet::Fold) {
        let u = r.location.u;
        if u <= T::zero() {
            continue;
        }
        if u < hit.u && below.is_none_or(|b| u > b.0) {
            below = Some((u, r.kind));
        }
        if u > hit.u && above.is_none_or(|a| u < a.0) {
            above = Some((u, r.kind));
        }
    }
    Ok(Some(WallIntersection {
        point: hit,
        below: below.map(|b| b.1),
        above: above.map(|a| a.1),
    }))
}

/// Outcome of the Poincare-section search for periodic orbits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCycleReport<T> {
    pub seeds: usize,
    pub section_crossings: usize,
    /// Section points where successive returns agreed away from equilibria.
    pub candidates: Vec<PhasePoint<T>>,
}

/// Integrates forward from a grid of seeds in `[0, 1.5]^2` and records
/// returns to the half-line `w = w_H`, `u > u_H`. A candidate cycle is a
/// seed whose last two returns agree to `1e-6` while staying at least `1e-3`
/// from `H`.
pub fn limit_cycle_scan<T: Real>(
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    seeds_per_axis: usize,
    max_zbar: T,
) -> Result<LimitCycleReport<T>, OrbitError> {
    let h = p.healed_state();
    let field = |y: &[T; 2]| ds_field(to_point(y), p);
    let mut report = LimitCycleReport {
        seeds: 0,
        section_crossings: 0,
        candidates: Vec::new(),
    };
    let span = T::lit(1.5);
    for i in 0..seeds_per_axis {
        for j in 0..seeds_per_axis {
            let frac = |k: usize| (T::from_count(k) + T::lit(0.5)) / T::from_count(seeds_per_axis);
            let start = [span * frac(i), span * frac(j)];
            report.seeds += 1;
            let mut returns: Vec<T> = Vec::new();
            let result = integrate(field, start, Direction::Forward, &cfg.step, |s: &Step<T, 2>| {
                let (a, b) = (s.y0[1] - h.w, s.y1[1] - h.w);
                if a < T::zero() && b >= T::zero() {
                    let (_, y) = locate_root(&field, Direction::Forward, s, |y| y[1] - h.w, T::tol(1e-13, 16.0));
                    if y[0] > h.u {
                        returns.push(y[0]);
                    }
                }
                if cfg.window.margin(to_point(&s.y1)) < T::zero() || s.tau1 > max_zbar {
                    Control::Stop(())
                } else {
                    Control::Continue
                }
            });
            if result.is_err() {
                continue;
            }
            report.section_crossings += returns.len();
            if returns.len() >= 3 {
                let n = returns.len();
                let (r1, r2) = (returns[n - 2], returns[n - 1]);
                if (r2 - r1).abs() < T::lit(1e-6) && (r2 - h.u).abs() > T::lit(1e-3) {
                    report.candidates.push(PhasePoint::new(r2, h.w));
                }
            }
        }
    }
    Ok(report)
}
