//! Equilibria of the desingularised system and the canard points on the fold.
//!
//! Besides the background states `T`, `W`, `H` and the two points `C0`, `C0-`
//! where the wall meets `w = 0`, the desingularised field vanishes at the
//! "holes" of the wall: points `(u, F(u))` with `u` a root of
//!
//! ```text
//! 3u^4 - 4u^3 + [1 + 4c^2(1 - alpha beta)] u^2 + 2c^2(2 alpha - 1) u + c^4 = 0.
//! ```

use num_complex::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::ds_field;
use crate::model::{free_capacity, ModelParams, PhasePoint, Sheet};
use crate::poly::{polynomial_roots, RootError};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriaError {
    #[error("quartic root solver failed: {0}")]
    Roots(#[from] RootError),
}

/// Thresholds used when turning floating-point roots and eigenvalues into
/// discrete labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Roots with `|im| <= realness` are treated as real.
    pub realness: f64,
    /// Real roots count as positive when `u > positivity`.
    pub positivity: f64,
    /// Node/focus decision: `|tr^2/4 - det| <= discriminant` is degenerate.
    pub discriminant: f64,
    /// A zero eigenvalue is declared when `|det| <= determinant`.
    pub determinant: f64,
    /// A point is on the fold when `|w - F(u)| <= on_fold`.
    pub on_fold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            realness: 1e-9,
            positivity: 1e-9,
            discriminant: 1e-10,
            determinant: 1e-10,
            on_fold: 1e-9,
        }
    }
}

/// Quartic coefficients in descending powers of `u`.
pub fn hole_polynomial_coeffs<T: Real>(p: &ModelParams<T>) -> [T; 5] {
    let c2 = p.c() * p.c();
    let (alpha, beta) = (p.alpha(), p.beta());
    [
        T::lit(3.0),
        T::lit(-4.0),
        T::one() + T::lit(4.0) * c2 * (T::one() - alpha * beta),
        T::lit(2.0) * c2 * (T::lit(2.0) * alpha - T::one()),
        c2 * c2,
    ]
}

/// One root of the hole quartic together with the wall height above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoleRoot<T> {
    pub u: Complex<T>,
    pub w: Complex<T>,
    pub is_real: bool,
    /// Real, with `0 < u < u_C0` (so `w = F(u) > 0`).
    pub in_quadrant: bool,
}

fn complex_wall<T: Real>(u: Complex<T>, c: T) -> Complex<T> {
    let num = Complex::new(c * c, T::zero()) + u - u * u;
    num / (u * T::lit(2.0))
}

/// All four roots of the hole quartic, ordered by descending real part and,
/// within a conjugate pair, positive imaginary part first.
pub fn hole_roots<T: Real>(p: &ModelParams<T>, tol: &Tolerances) -> Result<[HoleRoot<T>; 4], EquilibriaError> {
    let coeffs = hole_polynomial_coeffs(p);
    let roots = polynomial_roots(&coeffs)?;
    let u_c0 = p.wall_root();
    let realness = T::lit(tol.realness);
    let positivity = T::lit(tol.positivity);
    let mut out = [HoleRoot {
        u: Complex::new(T::zero(), T::zero()),
        w: Complex::new(T::zero(), T::zero()),
        is_real: false,
        in_quadrant: false,
    }; 4];
    for (slot, z) in out.iter_mut().zip(roots) {
        let is_real = z.im.abs() <= realness;
        let u = if is_real { Complex::new(z.re, T::zero()) } else { z };
        let w = if u.norm() == T::zero() {
            Complex::new(T::infinity(), T::zero())
        } else {
            complex_wall(u, p.c())
        };
        *slot = HoleRoot {
            u,
            w,
            is_real,
            in_quadrant: is_real && u.re > positivity && u.re < u_c0,
        };
    }
    Ok(out)
}

/// Upper bound on the number of positive hole roots from the rule of signs.
pub fn descartes_bound<T: Real>(p: &ModelParams<T>) -> u8 {
    let half = T::lit(0.5);
    let c2 = p.c() * p.c();
    let beta_limit = (T::one() + T::one() / (T::lit(4.0) * c2)) / p.alpha();
    if p.alpha() > half || p.beta() > beta_limit {
        2
    } else {
        4
    }
}

/// Jacobian of the desingularised field at `pt`.
pub fn jacobian_ds<T: Real>(pt: PhasePoint<T>, p: &ModelParams<T>) -> [[T; 2]; 2] {
    let (u, w) = (pt.u, pt.w);
    let (alpha, beta, c) = (p.alpha(), p.beta(), p.c());
    let two = T::lit(2.0);
    let f = free_capacity(u, w);
    let f2u = free_capacity(two * u, w);
    let f2w = free_capacity(u, two * w);
    let sheet = c * c + u * f2w;
    let j11 = -(sheet * f2u) / c - u * f * free_capacity(two * u, two * w) / c;
    let j12 = u * sheet / c + two * u * u * f / c;
    let j21 = w * f2u * f2u / c - two * u * w * f / c - alpha * beta * c * w;
    let j22 = u * f2u * f2w / c - u * w * f / c - alpha * c * (beta * u - T::one());
    [[j11, j12], [j21, j22]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearType {
    Saddle,
    StableNode,
    UnstableNode,
    StableFocus,
    UnstableFocus,
    Degenerate,
}

impl LinearType {
    pub fn label(&self) -> &'static str {
        match self {
            LinearType::Saddle => "saddle",
            LinearType::StableNode => "stable-node",
            LinearType::UnstableNode => "unstable-node",
            LinearType::StableFocus => "stable-focus",
            LinearType::UnstableFocus => "unstable-focus",
            LinearType::Degenerate => "degenerate",
        }
    }
}

/// Type of a canard point, read off from its desingularised type.
///
/// Both node variants admit passage from `S_r` to `S_a`; "in" marks a stable
/// desingularised node and "out" an unstable one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldedType {
    FoldedSaddle,
    FoldedNodeIn,
    FoldedNodeOut,
    FoldedFocus,
    FoldedDegenerate,
}

impl FoldedType {
    pub fn from_linear(t: LinearType) -> Self {
        match t {
            LinearType::Saddle => FoldedType::FoldedSaddle,
            LinearType::StableNode => FoldedType::FoldedNodeIn,
            LinearType::UnstableNode => FoldedType::FoldedNodeOut,
            LinearType::StableFocus | LinearType::UnstableFocus => FoldedType::FoldedFocus,
            LinearType::Degenerate => FoldedType::FoldedDegenerate,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FoldedType::FoldedSaddle => "folded-saddle",
            FoldedType::FoldedNodeIn => "folded-node-in",
            FoldedType::FoldedNodeOut => "folded-node-out",
            FoldedType::FoldedFocus => "folded-focus",
            FoldedType::FoldedDegenerate => "folded-degenerate",
        }
    }
}

/// Eigenvalues (ascending real part) and unit eigenvectors of a 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigen2<T> {
    pub values: [Complex<T>; 2],
    pub vectors: [[Complex<T>; 2]; 2],
    pub trace: T,
    pub determinant: T,
    pub discriminant: T,
}

fn eigenvector<T: Real>(m: &[[T; 2]; 2], lambda: Complex<T>, fallback: usize) -> [Complex<T>; 2] {
    let zero = Complex::new(T::zero(), T::zero());
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let from_row1 = [Complex::new(b, T::zero()), lambda - a];
    let from_row2 = [lambda - d, Complex::new(c, T::zero())];
    let n1 = from_row1[0].norm().hypot(from_row1[1].norm());
    let n2 = from_row2[0].norm().hypot(from_row2[1].norm());
    let (v, n) = if n1 >= n2 { (from_row1, n1) } else { (from_row2, n2) };
    if n <= T::epsilon() * (T::one() + a.abs() + b.abs() + c.abs() + d.abs()) {
        // lambda I - m vanishes: every direction is an eigenvector.
        let one = Complex::new(T::one(), T::zero());
        return if fallback == 0 { [one, zero] } else { [zero, one] };
    }
    let mut v = [v[0] / n, v[1] / n];
    // Fix the sign so the largest real component is positive.
    let lead = if v[0].re.abs() >= v[1].re.abs() {
        v[0].re
    } else {
        v[1].re
    };
    if lead < T::zero() {
        v = [-v[0], -v[1]];
    }
    v
}

pub fn eigen2<T: Real>(m: &[[T; 2]; 2]) -> Eigen2<T> {
    let half = T::lit(0.5);
    let trace = m[0][0] + m[1][1];
    let determinant = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let mean = half * trace;
    let discriminant = mean * mean - determinant;
    let values = if discriminant >= T::zero() {
        let r = discriminant.sqrt();
        // Stable form for the smaller-magnitude root.
        let big = if mean >= T::zero() { mean + r } else { mean - r };
        let small = if big == T::zero() { T::zero() } else { determinant / big };
        let (lo, hi) = if big <= small { (big, small) } else { (small, big) };
        [Complex::new(lo, T::zero()), Complex::new(hi, T::zero())]
    } else {
        let r = (-discriminant).sqrt();
        [Complex::new(mean, -r), Complex::new(mean, r)]
    };
    let vectors = [eigenvector(m, values[0], 0), eigenvector(m, values[1], 1)];
    Eigen2 {
        values,
        vectors,
        trace,
        determinant,
        discriminant,
    }
}

pub fn classify_linear<T: Real>(e: &Eigen2<T>, tol: &Tolerances) -> LinearType {
    if e.discriminant.abs() <= T::lit(tol.discriminant) || e.determinant.abs() <= T::lit(tol.determinant) {
        return LinearType::Degenerate;
    }
    if e.discriminant < T::zero() {
        if e.trace > T::zero() {
            LinearType::UnstableFocus
        } else if e.trace < T::zero() {
            LinearType::StableFocus
        } else {
            LinearType::Degenerate
        }
    } else if e.determinant < T::zero() {
        LinearType::Saddle
    } else if e.trace > T::zero() {
        LinearType::UnstableNode
    } else {
        LinearType::StableNode
    }
}

/// `sqrt(beta - 1) / beta`: the speed at which `H` crosses the fold.
pub fn curve_c1<T: Real>(beta: T) -> T {
    (beta - T::one()).sqrt() / beta
}

/// Node/focus boundary for `H`; `None` where the radicand is not positive.
pub fn curve_c2<T: Real>(alpha: T, beta: T) -> Option<T> {
    let four = T::lit(4.0);
    let inner = four * alpha * beta * (beta - T::one()) - T::one();
    if inner <= T::zero() {
        return None;
    }
    Some(T::lit(2.0) * alpha.sqrt() * (beta - T::one()) / (beta * inner).sqrt())
}

/// Saddle/node boundary for `C0`; defined only on its `alpha`-interval.
pub fn curve_c3<T: Real>(alpha: T, beta: T) -> Option<T> {
    let two = T::lit(2.0);
    let radicand = (T::one() - alpha) * (alpha * (beta - T::one()) - T::one());
    let lower_node = two / beta;
    let saddle_edge = T::one() / (beta - T::one());
    let denom = if beta <= two {
        if alpha > lower_node && alpha <= saddle_edge {
            alpha * beta - two
        } else {
            return None;
        }
    } else if alpha >= saddle_edge && alpha < lower_node {
        two - alpha * beta
    } else {
        return None;
    };
    if radicand < T::zero() || denom <= T::zero() {
        return None;
    }
    Some(radicand.sqrt() / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EquilibriumKind {
    #[serde(rename = "T")]
    Trivial,
    #[serde(rename = "W")]
    Wounded,
    #[serde(rename = "H")]
    Healed,
    #[serde(rename = "C0")]
    CZeroPlus,
    #[serde(rename = "C0-")]
    CZeroMinus,
    /// Index `k = 1..=4` into the ordered quartic roots.
    FoldRoot(u8),
}

impl EquilibriumKind {
    pub fn label(&self) -> String {
        match self {
            EquilibriumKind::Trivial => "T".into(),
            EquilibriumKind::Wounded => "W".into(),
            EquilibriumKind::Healed => "H".into(),
            EquilibriumKind::CZeroPlus => "C0".into(),
            EquilibriumKind::CZeroMinus => "C0-".into(),
            EquilibriumKind::FoldRoot(k) => format!("C{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub linear_type: LinearType,
    pub folded_type: Option<FoldedType>,
    pub side: Sheet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumRecord<T> {
    pub kind: EquilibriumKind,
    pub location: PhasePoint<T>,
    pub classification: Classification,
    pub eigen: Eigen2<T>,
}

impl<T: Real> EquilibriumRecord<T> {
    pub fn eigenvalues(&self) -> [Complex<T>; 2] {
        self.eigen.values
    }

    pub fn eigenvectors(&self) -> [[Complex<T>; 2]; 2] {
        self.eigen.vectors
    }

    pub fn is_saddle(&self) -> bool {
        self.classification.linear_type == LinearType::Saddle
    }

    pub fn is_focus(&self) -> bool {
        matches!(
            self.classification.linear_type,
            LinearType::StableFocus | LinearType::UnstableFocus
        )
    }
}

/// Classifies the desingularised equilibrium at `pt`.
pub fn classify_point_at<T: Real>(
    kind: EquilibriumKind,
    pt: PhasePoint<T>,
    p: &ModelParams<T>,
    tol: &Tolerances,
) -> EquilibriumRecord<T> {
    let eigen = eigen2(&jacobian_ds(pt, p));
    let linear_type = classify_linear(&eigen, tol);
    let on_fold = pt.u != T::zero() && (pt.w - p.wall_unchecked(pt.u)).abs() <= T::lit(tol.on_fold);
    let side = if on_fold {
        Sheet::Fold
    } else {
        Sheet::from_factor(p.sheet_factor(pt), T::zero())
    };
    EquilibriumRecord {
        kind,
        location: pt,
        classification: Classification {
            linear_type,
            folded_type: on_fold.then(|| FoldedType::from_linear(linear_type)),
            side,
        },
        eigen,
    }
}

/// Census of equilibria and canard points for one parameter triple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport<T> {
    pub params: ModelParams<T>,
    pub records: Vec<EquilibriumRecord<T>>,
    pub hole_roots: [HoleRoot<T>; 4],
    pub descartes_bound: u8,
    pub c1: T,
    pub c2: Option<T>,
    pub c3: Option<T>,
    pub tolerances: Tolerances,
}

impl<T: Real> RegionReport<T> {
    pub fn find(&self, kind: EquilibriumKind) -> Option<&EquilibriumRecord<T>> {
        self.records.iter().find(|r| r.kind == kind)
    }

    pub fn healed(&self) -> &EquilibriumRecord<T> {
        self.find(EquilibriumKind::Healed).expect("census always records H")
    }

    pub fn wounded(&self) -> &EquilibriumRecord<T> {
        self.find(EquilibriumKind::Wounded).expect("census always records W")
    }

    /// Canard points with `0 < u < u_C0` and `w > 0`, in root order.
    pub fn canards(&self) -> impl Iterator<Item = &EquilibriumRecord<T>> {
        self.records
            .iter()
            .filter(|r| matches!(r.kind, EquilibriumKind::FoldRoot(_)))
    }

    pub fn folded_saddles(&self) -> impl Iterator<Item = &EquilibriumRecord<T>> {
        self.canards()
            .filter(|r| r.classification.folded_type == Some(FoldedType::FoldedSaddle))
    }

    pub fn real_root_count(&self) -> usize {
        self.hole_roots.iter().filter(|r| r.is_real).count()
    }
}

pub fn census<T: Real>(p: &ModelParams<T>) -> Result<RegionReport<T>, EquilibriaError> {
    census_with(p, &Tolerances::default())
}

pub fn census_with<T: Real>(p: &ModelParams<T>, tol: &Tolerances) -> Result<RegionReport<T>, EquilibriaError> {
    let roots = hole_roots(p, tol)?;
    let mut records = vec![
        classify_point_at(EquilibriumKind::Trivial, p.trivial_state(), p, tol),
        classify_point_at(EquilibriumKind::Wounded, p.wounded_state(), p, tol),
        classify_point_at(EquilibriumKind::Healed, p.healed_state(), p, tol),
        classify_point_at(
            EquilibriumKind::CZeroPlus,
            PhasePoint::new(p.wall_root(), T::zero()),
            p,
            tol,
        ),
        classify_point_at(
            EquilibriumKind::CZeroMinus,
            PhasePoint::new(p.wall_root_negative(), T::zero()),
            p,
            tol,
        ),
    ];
    for (k, root) in roots.iter().enumerate() {
        if root.in_quadrant {
            let pt = PhasePoint::new(root.u.re, root.w.re);
            records.push(classify_point_at(EquilibriumKind::FoldRoot(k as u8 + 1), pt, p, tol));
        }
    }
    Ok(RegionReport {
        params: *p,
        records,
        hole_roots: roots,
        descartes_bound: descartes_bound(p),
        c1: curve_c1(p.beta()),
        c2: curve_c2(p.alpha(), p.beta()),
        c3: curve_c3(p.alpha(), p.beta()),
        tolerances: *tol,
    })
}

/// Max-norm residual of `J v - lambda v` over both eigenpairs.
pub fn eigen_residual<T: Real>(m: &[[T; 2]; 2], e: &Eigen2<T>) -> T {
    let mut worst = T::zero();
    for (lambda, v) in e.values.iter().zip(e.vectors.iter()) {
        for (row, vi) in m.iter().zip(v.iter()) {
            let jv = v[0] * row[0] + v[1] * row[1];
            worst = worst.max((jv - *lambda * *vi).norm());
        }
    }
    worst
}

/// Residual of the desingularised field at an equilibrium record.
pub fn field_residual<T: Real>(r: &EquilibriumRecord<T>, p: &ModelParams<T>) -> T {
    let v = ds_field(r.location, p);
    v[0].abs().max(v[1].abs())
}
