//! Region labels over `(alpha, c)` at fixed `beta`.
//!
//! Each grid cell gets the multiset of canard types in the open positive
//! quadrant together with the side and linear type of `H`. Edges between
//! differently labelled neighbours are chained into boundary polylines.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::equilibria::{census, EquilibriaError, FoldedType, LinearType};
use crate::model::{ModelError, ModelParams, Sheet};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Equilibria(#[from] EquilibriaError),
    #[error("invalid sweep range: {0}")]
    Range(String),
    #[error("predicate agrees at both ends of the segment")]
    NoChange,
    #[error("predicate changes {} times along the segment", .0.len())]
    NonMonotone(Vec<(f64, f64)>),
}

/// Canard census and healed-state classification for one parameter triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RegionLabel {
    /// Sorted multiset of folded types with `0 < u < u_C0`, `w > 0`.
    pub canard_census: Vec<FoldedType>,
    pub h_side: Sheet,
    pub h_type: LinearType,
    /// Real roots of the hole quartic, in any position.
    pub real_roots: usize,
    /// A classification tolerance was tripped somewhere in the census.
    pub degenerate: bool,
}

impl RegionLabel {
    pub fn census_label(&self) -> String {
        if self.canard_census.is_empty() {
            return "none".into();
        }
        self.canard_census
            .iter()
            .map(|t| t.label())
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn has_folded_saddle(&self) -> bool {
        self.canard_census.contains(&FoldedType::FoldedSaddle)
    }

    /// Same region for boundary purposes.
    pub fn same_region(&self, other: &Self) -> bool {
        self.canard_census == other.canard_census && self.h_side == other.h_side && self.h_type == other.h_type
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} / H {} {}",
            self.census_label(),
            self.h_side.label(),
            self.h_type.label()
        )
    }
}

pub fn classify_point<T: Real>(p: &ModelParams<T>) -> Result<RegionLabel, SweepError> {
    let report = census(p)?;
    let mut canard_census: Vec<FoldedType> = report
        .canards()
        .filter(|r| r.location.w > T::zero())
        .filter_map(|r| r.classification.folded_type)
        .collect();
    canard_census.sort();
    let h = report.healed();
    let degenerate = report
        .records
        .iter()
        .any(|r| r.classification.linear_type == LinearType::Degenerate)
        || h.classification.side == Sheet::Fold;
    Ok(RegionLabel {
        canard_census,
        h_side: h.classification.side,
        h_type: h.classification.linear_type,
        real_roots: report.real_root_count(),
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSpec<T> {
    pub beta: T,
    pub alpha_range: (T, T),
    pub c_range: (T, T),
    pub resolution: (usize, usize),
}

impl<T: Real> SweepSpec<T> {
    /// 200 x 200 over `alpha, c in (0, 2]`.
    pub fn default_for(beta: T) -> Self {
        Self {
            beta,
            alpha_range: (T::zero(), T::lit(2.0)),
            c_range: (T::zero(), T::lit(2.0)),
            resolution: (200, 200),
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let (a0, a1) = self.alpha_range;
        let (c0, c1) = self.c_range;
        if !(a0 >= T::zero() && a1 > a0) || !(c0 >= T::zero() && c1 > c0) {
            return Err(SweepError::Range("ranges must be increasing and nonnegative".into()));
        }
        if self.resolution.0 == 0 || self.resolution.1 == 0 {
            return Err(SweepError::Range("resolution must be positive".into()));
        }
        if !(self.beta > T::one()) {
            return Err(SweepError::Model(ModelError::Beta(self.beta.to_f64_lossy())));
        }
        Ok(())
    }

    /// Grid nodes `lo + (i + 1) (hi - lo) / n`, so an open lower end is
    /// never sampled and the upper end always is.
    pub fn alphas(&self) -> Vec<T> {
        nodes(self.alpha_range, self.resolution.0)
    }

    pub fn speeds(&self) -> Vec<T> {
        nodes(self.c_range, self.resolution.1)
    }
}

fn nodes<T: Real>((lo, hi): (T, T), n: usize) -> Vec<T> {
    (0..n)
        .map(|i| lo + (hi - lo) * T::from_count(i + 1) / T::from_count(n))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell<T> {
    pub alpha: T,
    pub c: T,
    pub label: Result<RegionLabel, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryEvent {
    /// Canards created, destroyed or exchanging type away from `H`.
    FsnI,
    /// `H` crosses the fold.
    FsnII,
    /// `H` changes between node and focus (or other linear types).
    HType,
}

impl BoundaryEvent {
    pub fn label(&self) -> &'static str {
        match self {
            BoundaryEvent::FsnI => "FSN-I",
            BoundaryEvent::FsnII => "FSN-II",
            BoundaryEvent::HType => "H-type",
        }
    }
}

/// Pair of neighbouring grid cells.
type CellEdge = ((usize, usize), (usize, usize));

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline<T> {
    pub event: BoundaryEvent,
    pub points: Vec<(T, T)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid<T> {
    pub spec: SweepSpec<T>,
    pub alphas: Vec<T>,
    pub speeds: Vec<T>,
    /// Row-major with `alpha` as the slow index.
    pub cells: Vec<SweepCell<T>>,
}

impl<T: Real> SweepGrid<T> {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell<T> {
        &self.cells[i * self.speeds.len() + j]
    }

    /// Cell whose node is closest to `(alpha, c)`.
    pub fn nearest(&self, alpha: T, c: T) -> &SweepCell<T> {
        let pick = |xs: &[T], x: T| {
            xs.iter()
                .enumerate()
                .min_by(|a, b| (*a.1 - x).abs().partial_cmp(&(*b.1 - x).abs()).expect("finite grid"))
                .map(|(k, _)| k)
                .expect("non-empty grid")
        };
        self.cell(pick(&self.alphas, alpha), pick(&self.speeds, c))
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.label.is_err()).count()
    }

    /// Boundary polylines between non-degenerate cells with different labels.
    pub fn boundaries(&self) -> Vec<Polyline<T>> {
        let na = self.alphas.len();
        let nc = self.speeds.len();
        // Lattice corner (i, j) sits between alpha cells i-1, i and speed cells j-1, j.
        let corner = |i: usize, j: usize| (edge_coord(&self.alphas, i), edge_coord(&self.speeds, j));
        let usable = |i: usize, j: usize| match &self.cell(i, j).label {
            Ok(l) if !l.degenerate => Some(l.clone()),
            _ => None,
        };
        let mut segments: BTreeMap<&'static str, Vec<CellEdge>> = BTreeMap::new();
        for i in 0..na {
            for j in 0..nc {
                let Some(here) = usable(i, j) else { continue };
                if i + 1 < na {
                    if let Some(right) = usable(i + 1, j) {
                        if let Some(ev) = classify_edge(&here, &right) {
                            segments
                                .entry(ev.label())
                                .or_default()
                                .push(((i + 1, j), (i + 1, j + 1)));
                        }
                    }
                }
                if j + 1 < nc {
                    if let Some(up) = usable(i, j + 1) {
                        if let Some(ev) = classify_edge(&here, &up) {
                            segments
                                .entry(ev.label())
                                .or_default()
                                .push(((i, j + 1), (i + 1, j + 1)));
                        }
                    }
                }
            }
        }
        let mut out = Vec::new();
        for (label, segs) in segments {
            let event = match label {
                "FSN-I" => BoundaryEvent::FsnI,
                "FSN-II" => BoundaryEvent::FsnII,
                _ => BoundaryEvent::HType,
            };
            for chain in chain_segments(segs) {
                out.push(Polyline {
                    event: event.clone(),
                    points: chain.into_iter().map(|(i, j)| corner(i, j)).collect(),
                });
            }
        }
        out
    }
}

/// Coordinate of the cell edge with index `k` (edge k sits below node k).
fn edge_coord<T: Real>(xs: &[T], k: usize) -> T {
    let n = xs.len();
    let half = T::lit(0.5);
    if n == 1 {
        return xs[0];
    }
    if k == 0 {
        xs[0] - half * (xs[1] - xs[0])
    } else if k >= n {
        xs[n - 1] + half * (xs[n - 1] - xs[n - 2])
    } else {
        half * (xs[k - 1] + xs[k])
    }
}

fn classify_edge(a: &RegionLabel, b: &RegionLabel) -> Option<BoundaryEvent> {
    if a.same_region(b) {
        None
    } else if a.h_side != b.h_side {
        Some(BoundaryEvent::FsnII)
    } else if a.canard_census != b.canard_census {
        Some(BoundaryEvent::FsnI)
    } else {
        Some(BoundaryEvent::HType)
    }
}

type Corner = (usize, usize);

/// Joins unit segments sharing endpoints into maximal polylines.
fn chain_segments(segs: Vec<(Corner, Corner)>) -> Vec<Vec<Corner>> {
    let mut by_end: BTreeMap<Corner, Vec<usize>> = BTreeMap::new();
    for (k, (a, b)) in segs.iter().enumerate() {
        by_end.entry(*a).or_default().push(k);
        by_end.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    let next_from = |pt: Corner, used: &Vec<bool>, by_end: &BTreeMap<Corner, Vec<usize>>| {
        by_end[&pt].iter().copied().find(|k| !used[*k])
    };
    // Start at chain ends (odd degree) first so open curves come out whole.
    let mut starts: Vec<Corner> = by_end
        .iter()
        .filter(|(_, ks)| ks.len() % 2 == 1)
        .map(|(p, _)| *p)
        .collect();
    starts.extend(segs.iter().map(|s| s.0));
    for start in starts {
        while let Some(k0) = next_from(start, &used, &by_end) {
            let mut chain = vec![start];
            let mut at = start;
            let mut k = k0;
            loop {
                used[k] = true;
                let (a, b) = segs[k];
                at = if a == at { b } else { a };
                chain.push(at);
                match next_from(at, &used, &by_end) {
                    Some(n) => k = n,
                    None => break,
                }
            }
            out.push(chain);
        }
    }
    out
}

/// Classifies every grid cell, using up to `jobs` worker threads.
pub fn sweep<T: Real>(spec: &SweepSpec<T>, jobs: usize) -> Result<SweepGrid<T>, SweepError> {
    sweep_with_progress(spec, jobs, &|_, _| {})
}

/// As [`sweep`], calling `progress(done, total)` after each completed cell.
/// Calls may arrive out of order from different workers.
pub fn sweep_with_progress<T: Real>(
    spec: &SweepSpec<T>,
    jobs: usize,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<SweepGrid<T>, SweepError> {
    spec.validate()?;
    let alphas = spec.alphas();
    let speeds = spec.speeds();
    let points: Vec<(T, T)> = alphas
        .iter()
        .flat_map(|a| speeds.iter().map(move |c| (*a, *c)))
        .collect();
    let total = points.len();
    let done = AtomicUsize::new(0);
    let eval = |&(alpha, c): &(T, T)| {
        let cell = SweepCell {
            alpha,
            c,
            label: ModelParams::new(alpha, spec.beta, c)
                .map_err(SweepError::from)
                .and_then(|p| classify_point(&p))
                .map_err(|e| e.to_string()),
        };
        progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
        cell
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SweepError::Range(format!("cannot start workers: {e}")))?;
    // `collect` on an indexed parallel iterator preserves cell order.
    let cells = pool.install(|| points.par_iter().map(eval).collect());
    Ok(SweepGrid {
        spec: *spec,
        alphas,
        speeds,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bifurcation<T> {
    pub params: ModelParams<T>,
    /// Position along the segment, in `[0, 1]`.
    pub t: T,
    pub event: BoundaryEvent,
}

fn lerp_params<T: Real>(p0: &ModelParams<T>, p1: &ModelParams<T>, t: T) -> Result<ModelParams<T>, SweepError> {
    let mix = |a: T, b: T| a + (b - a) * t;
    Ok(ModelParams::new(
        mix(p0.alpha(), p1.alpha()),
        mix(p0.beta(), p1.beta()),
        mix(p0.c(), p1.c()),
    )?)
}

/// Bisects the segment `p0 -> p1` for a change of `predicate` down to
/// `tol` in parameter distance.
///
/// The segment is first scanned at 64 points; if the predicate changes more
/// than once the brackets are returned as an error.
pub fn locate_bifurcation<T: Real, F>(
    p0: &ModelParams<T>,
    p1: &ModelParams<T>,
    predicate: F,
    tol: T,
) -> Result<Bifurcation<T>, SweepError>
where
    F: Fn(&ModelParams<T>) -> Result<bool, SweepError>,
{
    let scan = 64;
    let mut brackets = Vec::new();
    let mut prev = predicate(p0)?;
    let mut prev_t = T::zero();
    for k in 1..=scan {
        let t = T::from_count(k) / T::from_count(scan);
        let v = predicate(&lerp_params(p0, p1, t)?)?;
        if v != prev {
            brackets.push((prev_t, t));
        }
        prev = v;
        prev_t = t;
    }
    match brackets.len() {
        0 => return Err(SweepError::NoChange),
        1 => {}
        _ => {
            return Err(SweepError::NonMonotone(
                brackets
                    .iter()
                    .map(|(a, b)| (a.to_f64_lossy(), b.to_f64_lossy()))
                    .collect(),
            ))
        }
    }
    let (mut lo, mut hi) = brackets[0];
    let v_lo = predicate(&lerp_params(p0, p1, lo)?)?;
    let length =
        ((p1.alpha() - p0.alpha()).powi(2) + (p1.beta() - p0.beta()).powi(2) + (p1.c() - p0.c()).powi(2)).sqrt();
    let t_tol = if length > T::zero() { tol / length } else { tol };
    let mut guard = 0;
    while hi - lo > t_tol && guard < 200 {
        let mid = T::lit(0.5) * (lo + hi);
        if predicate(&lerp_params(p0, p1, mid)?)? == v_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        guard += 1;
    }
    let t = T::lit(0.5) * (lo + hi);
    let params = lerp_params(p0, p1, t)?;
    let h = params.healed_state();
    let h_gap = (h.w - params.wall_unchecked(h.u)).abs();
    let event = if h_gap <= T::lit(1e-6) {
        BoundaryEvent::FsnII
    } else {
        BoundaryEvent::FsnI
    };
    Ok(Bifurcation { params, t, event })
}
