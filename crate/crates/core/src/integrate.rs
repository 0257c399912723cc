//! Adaptive Dormand-Prince 5(4) integration of autonomous systems.
//!
//! The stepper runs in an internal time `tau >= 0`; backward integration is
//! realised by negating the field. After every accepted step a monitor sees
//! the step (endpoints and derivatives) and may stop the integration at an
//! interior time, which is then reached by a fresh single step from the
//! step's left endpoint rather than by interpolation.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("step size underflow at tau = {tau} (h = {h:e})")]
    StepUnderflow { tau: f64, h: f64 },
    #[error("exceeded {0} steps")]
    TooManySteps(usize),
    #[error("non-finite state at tau = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign<T: Real>(self) -> T {
        match self {
            Direction::Forward => T::one(),
            Direction::Backward => -T::one(),
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// Step control and stopping limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_step: T,
    pub min_step: T,
    pub max_steps: usize,
}

impl<T: Real> Default for StepControl<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::tol(1e-10, 16.0),
            rel_tol: T::tol(1e-8, 16.0),
            max_step: T::lit(0.5),
            min_step: T::tol(1e-14, 4.0),
            max_steps: 2_000_000,
        }
    }
}

/// One accepted step `tau0 -> tau1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step<T, const N: usize> {
    pub tau0: T,
    pub tau1: T,
    pub y0: [T; N],
    pub y1: [T; N],
    pub f0: [T; N],
    pub f1: [T; N],
}

impl<T: Real, const N: usize> Step<T, N> {
    pub fn h(&self) -> T {
        self.tau1 - self.tau0
    }

    /// Cubic Hermite dense output at `tau` in `[tau0, tau1]`.
    pub fn interpolate(&self, tau: T) -> [T; N] {
        let h = self.h();
        let s = (tau - self.tau0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        std::array::from_fn(|i| h00 * self.y0[i] + h10 * h * self.f0[i] + h01 * self.y1[i] + h11 * h * self.f1[i])
    }
}

/// Monitor verdict after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Control<T, E> {
    Continue,
    /// Stop at the end of the current step.
    Stop(E),
    /// Stop at an interior time of the current step.
    StopAt(T, E),
}

/// Accepted samples plus the reason integration ended.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T, const N: usize, E> {
    pub tau: Vec<T>,
    pub y: Vec<[T; N]>,
    pub dy: Vec<[T; N]>,
    pub event: E,
    pub rejected: usize,
}

impl<T: Real, const N: usize, E> Solution<T, N, E> {
    pub fn last(&self) -> [T; N] {
        *self.y.last().expect("solution holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

// Tableau without the node row: every field here is autonomous.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    std::array::from_fn(|i| {
        let mut acc = T::zero();
        for (a, k) in terms {
            acc = acc + T::lit(*a) * k[i];
        }
        y[i] + h * acc
    })
}

/// A single Dormand-Prince step; returns `(y_new, f_new, error_estimate)`.
pub fn dp_step<T: Real, const N: usize, F>(field: &F, y: &[T; N], k1: &[T; N], h: T) -> ([T; N], [T; N], [T; N])
where
    F: Fn(&[T; N]) -> [T; N],
{
    let k2 = field(&axpy(y, h, &[(A21, k1)]));
    let k3 = field(&axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = field(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = field(&axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = field(&axpy(
        y,
        h,
        &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    ));
    let y_new = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = field(&y_new);
    let zero = [T::zero(); N];
    let err = axpy(
        &zero,
        h,
        &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
    );
    (y_new, k7, err)
}

fn error_norm<T: Real, const N: usize>(err: &[T; N], y0: &[T; N], y1: &[T; N], ctl: &StepControl<T>) -> T {
    let mut acc = T::zero();
    for i in 0..N {
        let scale = ctl.abs_tol + ctl.rel_tol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / scale;
        acc = acc + r * r;
    }
    (acc / T::from_count(N)).sqrt()
}

fn initial_step<T: Real, const N: usize, F>(field: &F, y0: &[T; N], f0: &[T; N], ctl: &StepControl<T>) -> T
where
    F: Fn(&[T; N]) -> [T; N],
{
    let n = T::from_count(N);
    let scale: [T; N] = std::array::from_fn(|i| ctl.abs_tol + ctl.rel_tol * y0[i].abs());
    let d0 = (y0.iter().zip(&scale).map(|(y, s)| (*y / *s).powi(2)).sum::<T>() / n).sqrt();
    let d1 = (f0.iter().zip(&scale).map(|(f, s)| (*f / *s).powi(2)).sum::<T>() / n).sqrt();
    let small = T::lit(1e-5);
    let h0 = if d0 < small || d1 < small {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    };
    let h0 = h0.min(ctl.max_step);
    let y1: [T; N] = std::array::from_fn(|i| y0[i] + h0 * f0[i]);
    let f1 = field(&y1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&scale)
        .map(|((a, b), s)| ((*a - *b) / *s).powi(2))
        .sum::<T>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= T::lit(1e-15) {
        (h0 * T::lit(1e-3)).max(T::lit(1e-6))
    } else {
        (T::lit(0.01) / d1.max(d2)).powf(T::lit(0.2))
    };
    (T::lit(100.0) * h0).min(h1).min(ctl.max_step).max(ctl.min_step)
}

/// Integrates `dy/dtau = sign * field(y)` from `y0` until the monitor stops it.
///
/// The monitor receives each accepted step expressed in the signed field, so
/// its derivatives already carry the direction.
pub fn integrate<T, const N: usize, F, M, E>(
    field: F,
    y0: [T; N],
    direction: Direction,
    ctl: &StepControl<T>,
    mut monitor: M,
) -> Result<Solution<T, N, E>, IntegrateError>
where
    T: Real,
    F: Fn(&[T; N]) -> [T; N],
    M: FnMut(&Step<T, N>) -> Control<T, E>,
{
    let sign = direction.sign::<T>();
    let signed = |y: &[T; N]| {
        let v = field(y);
        std::array::from_fn(|i| sign * v[i])
    };
    let mut tau = T::zero();
    let mut y = y0;
    let mut f = signed(&y);
    if y.iter().chain(f.iter()).any(|v| !v.is_finite()) {
        return Err(IntegrateError::NonFinite(0.0));
    }
    let mut h = initial_step(&signed, &y, &f, ctl);
    let mut out = Solution {
        tau: vec![tau],
        y: vec![y],
        dy: vec![f],
        event: None,
        rejected: 0,
    };
    let safety = T::lit(0.9);
    let min_scale = T::lit(0.2);
    let max_scale = T::lit(5.0);
    let exponent = T::lit(0.2);
    let mut just_rejected = false;
    for _ in 0..ctl.max_steps {
        let (y_new, f_new, err) = dp_step(&signed, &y, &f, h);
        let finite = y_new.iter().chain(f_new.iter()).all(|v| v.is_finite());
        let e = if finite {
            error_norm(&err, &y, &y_new, ctl)
        } else {
            T::infinity()
        };
        if e <= T::one() {
            let step = Step {
                tau0: tau,
                tau1: tau + h,
                y0: y,
                y1: y_new,
                f0: f,
                f1: f_new,
            };
            match monitor(&step) {
                Control::Continue => {}
                Control::Stop(ev) => {
                    out.tau.push(step.tau1);
                    out.y.push(y_new);
                    out.dy.push(f_new);
                    out.event = Some(ev);
                    break;
                }
                Control::StopAt(tau_stop, ev) => {
                    let hs = tau_stop - tau;
                    if hs > T::zero() {
                        let (ys, _, _) = dp_step(&signed, &y, &f, hs);
                        out.tau.push(tau_stop);
                        out.dy.push(signed(&ys));
                        out.y.push(ys);
                    }
                    out.event = Some(ev);
                    break;
                }
            }
            tau = step.tau1;
            y = y_new;
            f = f_new;
            out.tau.push(tau);
            out.y.push(y);
            out.dy.push(f);
            let grow = if e == T::zero() {
                max_scale
            } else {
                (safety * e.powf(-exponent)).min(max_scale).max(min_scale)
            };
            let grow = if just_rejected { grow.min(T::one()) } else { grow };
            h = (h * grow).min(ctl.max_step);
            just_rejected = false;
        } else {
            out.rejected += 1;
            let shrink = if e.is_finite() {
                (safety * e.powf(-exponent)).max(min_scale)
            } else {
                min_scale
            };
            h = h * shrink;
            just_rejected = true;
            if h < ctl.min_step {
                if !finite {
                    return Err(IntegrateError::NonFinite(tau.to_f64_lossy()));
                }
                return Err(IntegrateError::StepUnderflow {
                    tau: tau.to_f64_lossy(),
                    h: h.to_f64_lossy(),
                });
            }
        }
    }
    match out.event {
        Some(ev) => Ok(Solution {
            tau: out.tau,
            y: out.y,
            dy: out.dy,
            event: ev,
            rejected: out.rejected,
        }),
        None => Err(IntegrateError::TooManySteps(ctl.max_steps)),
    }
}

/// Re-steps from the left end of `step` to `tau` with a single DP step.
pub fn restep<T, const N: usize, F>(field: &F, direction: Direction, step: &Step<T, N>, tau: T) -> [T; N]
where
    T: Real,
    F: Fn(&[T; N]) -> [T; N],
{
    let h = tau - step.tau0;
    if h <= T::zero() {
        return step.y0;
    }
    let sign = direction.sign::<T>();
    let signed = |y: &[T; N]| {
        let v = field(y);
        std::array::from_fn(|i| sign * v[i])
    };
    dp_step(&signed, &step.y0, &step.f0, h).0
}

/// Locates a sign change of `g` inside `step` by bisection on re-stepped
/// states; `g(y0)` and `g(y1)` must differ in sign.
pub fn locate_root<T, const N: usize, F, G>(
    field: &F,
    direction: Direction,
    step: &Step<T, N>,
    g: G,
    value_tol: T,
) -> (T, [T; N])
where
    T: Real,
    F: Fn(&[T; N]) -> [T; N],
    G: Fn(&[T; N]) -> T,
{
    let mut lo = step.tau0;
    let mut hi = step.tau1;
    let mut g_lo = g(&step.y0);
    let mut best = (hi, step.y1);
    let time_tol = T::epsilon() * T::lit(8.0) * (T::one() + hi.abs());
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        let y = restep(field, direction, step, mid);
        let gm = g(&y);
        best = (mid, y);
        if gm.abs() <= value_tol || (hi - lo) <= time_tol {
            break;
        }
        if (gm < T::zero()) == (g_lo < T::zero()) {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
        }
    }
    best
}
