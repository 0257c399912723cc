//! Parameters, kinetics and the wall of singularities.
//!
//! The nondimensional model is
//!
//! ```text
//! u_t = u (1 - u - w) + eps u_xx
//! w_t = -(w u_x)_x + alpha w (beta u - 1) + eps w_xx
//! ```
//!
//! and travelling waves `z = x - c t` connect the healed state
//! `(1/beta, 1 - 1/beta)` to the wounded state `(1, 0)`.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("alpha must be positive (got {0})")]
    Alpha(f64),
    #[error("beta must exceed 1 so the healed state lies in the positive quadrant (got {0})")]
    Beta(f64),
    #[error("wavespeed c must be positive (got {0})")]
    Speed(f64),
    #[error("diffusion eps must be nonnegative (got {0})")]
    Diffusion(f64),
    #[error("dimensional parameter {name} must be positive (got {value})")]
    Dimensional { name: &'static str, value: f64 },
    #[error("the wall of singularities has a pole at u = 0")]
    WallPole,
}

/// Nondimensional parameter set `(alpha, beta, c, eps)`.
///
/// Validated on construction; every downstream routine assumes
/// `alpha > 0`, `beta > 1`, `c > 0`, `eps >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams<T> {
    alpha: T,
    beta: T,
    c: T,
    eps: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(alpha: T, beta: T, c: T) -> Result<Self, ModelError> {
        Self::with_eps(alpha, beta, c, T::zero())
    }

    pub fn with_eps(alpha: T, beta: T, c: T, eps: T) -> Result<Self, ModelError> {
        // `!(x > 0)` also rejects NaN.
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(ModelError::Alpha(alpha.to_f64_lossy()));
        }
        if !(beta > T::one()) || !beta.is_finite() {
            return Err(ModelError::Beta(beta.to_f64_lossy()));
        }
        if !(c > T::zero()) || !c.is_finite() {
            return Err(ModelError::Speed(c.to_f64_lossy()));
        }
        if !(eps >= T::zero()) || !eps.is_finite() {
            return Err(ModelError::Diffusion(eps.to_f64_lossy()));
        }
        Ok(Self { alpha, beta, c, eps })
    }

    #[inline]
    pub fn alpha(&self) -> T {
        self.alpha
    }
    #[inline]
    pub fn beta(&self) -> T {
        self.beta
    }
    #[inline]
    pub fn c(&self) -> T {
        self.c
    }
    #[inline]
    pub fn eps(&self) -> T {
        self.eps
    }

    /// Same kinetics with a different wavespeed.
    pub fn with_speed(&self, c: T) -> Result<Self, ModelError> {
        Self::with_eps(self.alpha, self.beta, c, self.eps)
    }

    pub fn with_diffusion(&self, eps: T) -> Result<Self, ModelError> {
        Self::with_eps(self.alpha, self.beta, self.c, eps)
    }

    pub fn with_alpha(&self, alpha: T) -> Result<Self, ModelError> {
        Self::with_eps(alpha, self.beta, self.c, self.eps)
    }

    /// Height of the wall of singularities `F(u) = (c^2 + u - u^2) / (2u)`.
    pub fn wall(&self, u: T) -> Result<T, ModelError> {
        if u == T::zero() {
            return Err(ModelError::WallPole);
        }
        Ok(self.wall_unchecked(u))
    }

    /// [`wall`](Self::wall) without the pole check; infinite at `u = 0`.
    #[inline]
    pub fn wall_unchecked(&self, u: T) -> T {
        wall_height(u, self.c)
    }

    /// `dF/du = -(c^2 + u^2) / (2u^2)`.
    #[inline]
    pub fn wall_slope(&self, u: T) -> T {
        let c2 = self.c * self.c;
        -(c2 + u * u) / (T::lit(2.0) * u * u)
    }

    /// Positive root `u_C0 = (1 + sqrt(1 + 4c^2)) / 2` where the wall meets `w = 0`.
    #[inline]
    pub fn wall_root(&self) -> T {
        wall_root(self.c)
    }

    /// Negative companion root `(1 - sqrt(1 + 4c^2)) / 2`.
    #[inline]
    pub fn wall_root_negative(&self) -> T {
        let two = T::lit(2.0);
        (T::one() - (T::one() + T::lit(4.0) * self.c * self.c).sqrt()) / two
    }

    /// `c^2 + u f(u, 2w)`: positive on the attracting sheet, negative on the
    /// repelling sheet, zero on the fold.
    #[inline]
    pub fn sheet_factor(&self, pt: PhasePoint<T>) -> T {
        self.c * self.c + pt.u * free_capacity(pt.u, pt.w + pt.w)
    }

    pub fn sheet(&self, pt: PhasePoint<T>, tol: T) -> Sheet {
        Sheet::from_factor(self.sheet_factor(pt), tol)
    }

    /// Chemoattractant kinetics `u f(u, w)`.
    #[inline]
    pub fn u_kinetics(&self, pt: PhasePoint<T>) -> T {
        pt.u * free_capacity(pt.u, pt.w)
    }

    /// Capillary-tip kinetics `alpha w (beta u - 1)`.
    #[inline]
    pub fn w_kinetics(&self, pt: PhasePoint<T>) -> T {
        self.alpha * pt.w * (self.beta * pt.u - T::one())
    }

    pub fn healed_state(&self) -> PhasePoint<T> {
        let inv = self.beta.recip();
        PhasePoint::new(inv, T::one() - inv)
    }

    pub fn wounded_state(&self) -> PhasePoint<T> {
        wounded_state()
    }

    pub fn trivial_state(&self) -> PhasePoint<T> {
        trivial_state()
    }
}

impl ModelParams<f64> {
    /// First regime of the original phase-plane study: `(2/5, 5/2, 1)`.
    pub fn case1() -> Self {
        Self::new(0.4, 2.5, 1.0).expect("valid constants")
    }

    /// Second regime: `(2/5, 5/2, sqrt(2)/2)`.
    pub fn case2() -> Self {
        Self::new(0.4, 2.5, std::f64::consts::FRAC_1_SQRT_2).expect("valid constants")
    }
}

/// `F(u)` for a given wavespeed.
#[inline]
pub fn wall_height<T: Real>(u: T, c: T) -> T {
    (c * c + u - u * u) / (T::lit(2.0) * u)
}

/// Positive zero `u_C0` of `F` for a given wavespeed.
#[inline]
pub fn wall_root<T: Real>(c: T) -> T {
    (T::one() + (T::one() + T::lit(4.0) * c * c).sqrt()) / T::lit(2.0)
}

/// `f(u, w) = 1 - u - w`.
#[inline]
pub fn free_capacity<T: Real>(u: T, w: T) -> T {
    T::one() - u - w
}

pub fn wounded_state<T: Real>() -> PhasePoint<T> {
    PhasePoint::new(T::one(), T::zero())
}

pub fn trivial_state<T: Real>() -> PhasePoint<T> {
    PhasePoint::new(T::zero(), T::zero())
}

/// A point `(u, w)` of the projected phase plane.
///
/// Negative coordinates are allowed for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PhasePoint<T> {
    pub u: T,
    pub w: T,
}

impl<T: Real> PhasePoint<T> {
    #[inline]
    pub fn new(u: T, w: T) -> Self {
        Self { u, w }
    }

    #[inline]
    pub fn free_capacity(&self) -> T {
        free_capacity(self.u, self.w)
    }

    #[inline]
    pub fn distance(&self, other: &Self) -> T {
        (self.u - other.u).hypot(self.w - other.w)
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.w.is_finite()
    }
}

/// Sheet of the critical manifold a phase point projects onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sheet {
    #[serde(rename = "S_a")]
    Attracting,
    #[serde(rename = "S_r")]
    Repelling,
    #[serde(rename = "on-F")]
    Fold,
}

impl Sheet {
    pub fn from_factor<T: Real>(factor: T, tol: T) -> Self {
        if factor > tol {
            Sheet::Attracting
        } else if factor < -tol {
            Sheet::Repelling
        } else {
            Sheet::Fold
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Sheet::Attracting => "S_a",
            Sheet::Repelling => "S_r",
            Sheet::Fold => "on-F",
        }
    }
}

/// Rates of the dimensional model before rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionalParams<T> {
    pub lambda1: T,
    pub lambda2: T,
    pub lambda3: T,
    pub lambda4: T,
    pub k: T,
    pub chi: T,
}

impl<T: Real> DimensionalParams<T> {
    fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("lambda4", self.lambda4),
            ("K", self.k),
            ("chi", self.chi),
        ];
        for (name, value) in fields {
            if !(value > T::zero()) || !value.is_finite() {
                return Err(ModelError::Dimensional {
                    name,
                    value: value.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }
}

/// Maps dimensional rates to `alpha = lambda4 / lambda1`, `beta = lambda3 K / lambda4`.
///
/// The wavespeed is not fixed by the rates and must be supplied; the result
/// carries `eps = 0`.
pub fn nondimensionalise<T: Real>(p: &DimensionalParams<T>, c: T) -> Result<ModelParams<T>, ModelError> {
    p.validate()?;
    let alpha = p.lambda4 / p.lambda1;
    let beta = p.lambda3 * p.k / p.lambda4;
    ModelParams::new(alpha, beta, c)
}
