//! Vector fields on and around the critical manifold.
//!
//! * the desingularised field in the `(u, w)` plane, which is regular on the fold;
//! * the reduced (slow) field, obtained from the desingularised one by dividing
//!   out `c^2 + u f(u, 2w)`;
//! * the layer (fast) field in `(u, v, w)` with `u_hat`, `w_hat` frozen.
//!
//! The fold diagnostics at the bottom evaluate the closed-form null vectors of
//! the layer linearisation along `w = F(u)` together with an independent
//! finite-difference route.

use serde::Serialize;
use thiserror::Error;

use crate::model::{free_capacity, ModelParams, PhasePoint, Sheet};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("point ({u}, {w}) is within {factor:e} of the fold; the reduced field is singular there")]
    FoldProximity { u: f64, w: f64, factor: f64 },
    #[error("fold point u = {0} lies outside (0, u_C0)")]
    OffPhysicalFold(f64),
    #[error("fold non-degeneracy value {0:e} is numerically zero")]
    DegenerateFold(f64),
    #[error("fold transversality vector vanishes at u = {0}")]
    TransversalityVanishes(f64),
}

/// Desingularised field `(du/dzbar, dw/dzbar)`.
#[inline]
pub fn ds_field<T: Real>(pt: PhasePoint<T>, p: &ModelParams<T>) -> [T; 2] {
    let (u, w) = (pt.u, pt.w);
    let c = p.c();
    let f = free_capacity(u, w);
    let sheet = p.sheet_factor(pt);
    let two = T::lit(2.0);
    let du = -u * f * sheet / c;
    let dw = u * w * f * free_capacity(two * u, w) / c - p.alpha() * c * w * (p.beta() * u - T::one());
    [du, dw]
}

/// Slow flow on the critical manifold, parameterised by the slow coordinate `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedVelocity<T> {
    pub du: T,
    pub dw: T,
    pub sheet: Sheet,
}

/// Solves `M (u_z, w_z)^T = (-u f(u,w), -alpha w (beta u - 1))^T`.
///
/// `M` is lower triangular and singular exactly on the fold; within
/// `fold_tol` of it an error is returned instead of a blown-up velocity.
pub fn reduced_field<T: Real>(
    pt: PhasePoint<T>,
    p: &ModelParams<T>,
    fold_tol: T,
) -> Result<ReducedVelocity<T>, DynamicsError> {
    let (u, w) = (pt.u, pt.w);
    let c = p.c();
    let factor = p.sheet_factor(pt);
    if factor.abs() <= fold_tol {
        return Err(DynamicsError::FoldProximity {
            u: u.to_f64_lossy(),
            w: w.to_f64_lossy(),
            factor: factor.to_f64_lossy(),
        });
    }
    let two = T::lit(2.0);
    let m11 = c;
    let m21 = w / c * free_capacity(two * u, w);
    let m22 = factor / c;
    let du = -p.u_kinetics(pt) / m11;
    let dw = (-p.w_kinetics(pt) - m21 * du) / m22;
    Ok(ReducedVelocity {
        du,
        dw,
        sheet: if factor > T::zero() {
            Sheet::Attracting
        } else {
            Sheet::Repelling
        },
    })
}

/// The travelling-wave system of the original phase-plane study, written as
/// `(du/dz, dw/dz)` with the singular coefficient divided out explicitly.
pub fn phase_plane_field<T: Real>(pt: PhasePoint<T>, p: &ModelParams<T>) -> [T; 2] {
    let (u, w) = (pt.u, pt.w);
    let c = p.c();
    let two = T::lit(2.0);
    let f = free_capacity(u, w);
    let du = -u * f / c;
    let rhs = u * w * f * free_capacity(two * u, w) / c - p.alpha() * c * w * (p.beta() * u - T::one());
    let coeff = c * c + u * free_capacity(u, two * w);
    [du, rhs / coeff]
}

/// Slope `dw/du` of a trajectory through `pt`; identical for the reduced and
/// desingularised flows since they differ by a scalar factor.
#[inline]
pub fn trajectory_slope<T: Real>(pt: PhasePoint<T>, p: &ModelParams<T>) -> T {
    let [du, dw] = ds_field(pt, p);
    dw / du
}

/// A point `(u, v, w, u_hat, w_hat)` of the five-dimensional slow system.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SlowPoint<T> {
    pub u: T,
    pub v: T,
    pub w: T,
    pub u_hat: T,
    pub w_hat: T,
}

impl<T: Real> SlowPoint<T> {
    pub fn phase(&self) -> PhasePoint<T> {
        PhasePoint::new(self.u, self.w)
    }

    fn fast(&self) -> [T; 3] {
        [self.u, self.v, self.w]
    }

    fn with_fast(&self, x: [T; 3]) -> Self {
        Self {
            u: x[0],
            v: x[1],
            w: x[2],
            ..*self
        }
    }
}

/// Lifts a phase point onto the critical manifold:
/// `u_hat = c u`, `v = -u f(u, w) / c`, `w_hat = c w - v w`.
pub fn embed_on_s<T: Real>(pt: PhasePoint<T>, p: &ModelParams<T>) -> SlowPoint<T> {
    let c = p.c();
    let v = -p.u_kinetics(pt) / c;
    SlowPoint {
        u: pt.u,
        v,
        w: pt.w,
        u_hat: c * pt.u,
        w_hat: c * pt.w - v * pt.w,
    }
}

/// Layer field `(u_y, v_y, w_y)` with the slow variables frozen.
#[inline]
pub fn layer_field<T: Real>(s: &SlowPoint<T>, p: &ModelParams<T>) -> [T; 3] {
    let c = p.c();
    [
        s.u_hat - c * s.u,
        -c * s.v - s.u * free_capacity(s.u, s.w),
        s.w_hat - c * s.w + s.v * s.w,
    ]
}

/// Jacobian of [`layer_field`] with respect to `(u, v, w)`.
pub fn layer_jacobian<T: Real>(s: &SlowPoint<T>, p: &ModelParams<T>) -> [[T; 3]; 3] {
    let c = p.c();
    let two = T::lit(2.0);
    [
        [-c, T::zero(), T::zero()],
        [-free_capacity(two * s.u, s.w), -c, s.u],
        [T::zero(), s.w, -c + s.v],
    ]
}

/// Closed-form layer eigenvalues `(lambda1, lambda2, lambda3)` at a point of S,
/// ordered so that `lambda2 <= lambda3`.
///
/// The sign of `lambda3` separates the attracting sheet (negative) from the
/// repelling one (positive). A negative radicand, possible only off the
/// physical quadrant, is clamped to zero.
pub fn layer_eigenvalues<T: Real>(s: &SlowPoint<T>, p: &ModelParams<T>) -> [T; 3] {
    let c = p.c();
    let half = T::lit(0.5);
    let radicand = (s.v * s.v + T::lit(4.0) * s.u * s.w).max(T::zero());
    let root = radicand.sqrt();
    [-c, -c + half * (s.v - root), -c + half * (s.v + root)]
}

/// The fold point of S above `u`: `(u, (c^2 - u + u^2)/(2c), F(u))`.
pub fn fold_point<T: Real>(u: T, p: &ModelParams<T>) -> SlowPoint<T> {
    embed_on_s(PhasePoint::new(u, p.wall_unchecked(u)), p)
}

fn check_fold_u<T: Real>(u: T, p: &ModelParams<T>) -> Result<(), DynamicsError> {
    if u > T::zero() && u < p.wall_root() {
        Ok(())
    } else {
        Err(DynamicsError::OffPhysicalFold(u.to_f64_lossy()))
    }
}

fn fold_scales<T: Real>(u: T, p: &ModelParams<T>) -> (T, T) {
    let c = p.c();
    let q = (c * c + u * u).sqrt();
    let pp = (T::lit(3.0) * c * c + u - u * u) / (T::lit(2.0) * q);
    (pp, q)
}

/// Adjoint null vector `p` of the layer Jacobian on the fold, normalised so
/// that `p . q = 1`.
pub fn adjoint_null_vector<T: Real>(u: T, p: &ModelParams<T>) -> [T; 3] {
    let c = p.c();
    let f = p.wall_unchecked(u);
    let (pp, _) = fold_scales(u, p);
    let first = f * (c * c - u + T::lit(3.0) * u * u) / (T::lit(2.0) * c * u);
    [first / pp, f / pp, c / pp]
}

/// Unit null vector `q = (0, u, c) / sqrt(c^2 + u^2)`.
pub fn null_vector<T: Real>(u: T, p: &ModelParams<T>) -> [T; 3] {
    let c = p.c();
    let (_, q) = fold_scales(u, p);
    [T::zero(), u / q, c / q]
}

/// Closed-form non-degeneracy coefficient `p . B(q, q) = 2 c^2 u / (P Q^2)`.
pub fn fold_nondegeneracy<T: Real>(u: T, p: &ModelParams<T>) -> Result<T, DynamicsError> {
    check_fold_u(u, p)?;
    let c = p.c();
    let (pp, q) = fold_scales(u, p);
    let value = T::lit(2.0) * c * c * u / (pp * q * q);
    if value.abs() < T::tol(1e-10, 64.0) {
        return Err(DynamicsError::DegenerateFold(value.to_f64_lossy()));
    }
    Ok(value)
}

fn dot3<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `p . B(q, q)` from a second difference of the layer field along `q`.
///
/// The layer field is quadratic in `(u, v, w)`, so the central second
/// difference is exact up to rounding for any step; the step is therefore
/// chosen large enough to keep cancellation error well below `1e-8`.
pub fn fold_nondegeneracy_direct<T: Real>(u: T, p: &ModelParams<T>) -> T {
    let base = fold_point(u, p);
    let q = null_vector(u, p);
    let adj = adjoint_null_vector(u, p);
    let x = base.fast();
    let scale = x.iter().fold(T::one(), |m, v| m.max(v.abs()));
    let h = T::lit(1e-3) * scale;
    let shifted = |sign: T| {
        let y = [x[0] + sign * h * q[0], x[1] + sign * h * q[1], x[2] + sign * h * q[2]];
        layer_field(&base.with_fast(y), p)
    };
    let plus = shifted(T::one());
    let minus = shifted(-T::one());
    let mid = layer_field(&base, p);
    let b = [
        (plus[0] - T::lit(2.0) * mid[0] + minus[0]) / (h * h),
        (plus[1] - T::lit(2.0) * mid[1] + minus[1]) / (h * h),
        (plus[2] - T::lit(2.0) * mid[2] + minus[2]) / (h * h),
    ];
    dot3(&adj, &b)
}

/// Closed-form transversality vector `p . D_(u_hat, w_hat) G`.
pub fn fold_transversality<T: Real>(u: T, p: &ModelParams<T>) -> Result<[T; 2], DynamicsError> {
    check_fold_u(u, p)?;
    let adj = adjoint_null_vector(u, p);
    let v = [adj[0], adj[2]];
    if v[0].hypot(v[1]) < T::tol(1e-10, 64.0) {
        return Err(DynamicsError::TransversalityVanishes(u.to_f64_lossy()));
    }
    Ok(v)
}

/// Transversality vector from central differences of the layer field in the
/// frozen slow variables.
pub fn fold_transversality_direct<T: Real>(u: T, p: &ModelParams<T>) -> [T; 2] {
    let base = fold_point(u, p);
    let adj = adjoint_null_vector(u, p);
    let h = T::lit(1e-4) * T::one().max(base.u_hat.abs()).max(base.w_hat.abs());
    let diff = |bump: fn(&mut SlowPoint<T>, T)| {
        let mut up = base;
        let mut dn = base;
        bump(&mut up, h);
        bump(&mut dn, -h);
        let gp = layer_field(&up, p);
        let gm = layer_field(&dn, p);
        let d = [
            (gp[0] - gm[0]) / (h + h),
            (gp[1] - gm[1]) / (h + h),
            (gp[2] - gm[2]) / (h + h),
        ];
        dot3(&adj, &d)
    };
    [diff(|s, d| s.u_hat = s.u_hat + d), diff(|s, d| s.w_hat = s.w_hat + d)]
}

/// Layer eigenvalues and fold conditions at the fold point above `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldDiagnostics<T> {
    pub lambda1: T,
    pub lambda2: T,
    pub lambda3: T,
    pub nondegeneracy_value: T,
    pub transversality_vector: [T; 2],
}

pub fn fold_diagnostics<T: Real>(u: T, p: &ModelParams<T>) -> Result<FoldDiagnostics<T>, DynamicsError> {
    let s = fold_point(u, p);
    let [lambda1, lambda2, lambda3] = layer_eigenvalues(&s, p);
    Ok(FoldDiagnostics {
        lambda1,
        lambda2,
        lambda3,
        nondegeneracy_value: fold_nondegeneracy(u, p)?,
        transversality_vector: fold_transversality(u, p)?,
    })
}
