//! Polynomial roots as eigenvalues of the balanced companion matrix.
//!
//! The companion matrix is already upper Hessenberg, so the roots come straight
//! out of a Francis double-shift QR sweep. Each eigenvalue is then polished with
//! a few Newton steps on the original polynomial.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RootError {
    #[error("polynomial has no nonzero coefficients")]
    ZeroPolynomial,
    #[error("QR iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("polynomial coefficients are not finite")]
    NonFinite,
}

const MAX_SWEEPS: usize = 60;

/// All complex roots of `coeffs[0] x^n + ... + coeffs[n]`.
///
/// Roots are returned sorted by decreasing real part, then decreasing imaginary
/// part, with conjugate pairs made exactly conjugate.
pub fn polynomial_roots<T: Real>(coeffs: &[T]) -> Result<Vec<Complex<T>>, RootError> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(RootError::NonFinite);
    }
    let first = coeffs
        .iter()
        .position(|c| *c != T::zero())
        .ok_or(RootError::ZeroPolynomial)?;
    let mut trimmed: Vec<T> = coeffs[first..].to_vec();
    let mut zeros = 0usize;
    while trimmed.len() > 1 && *trimmed.last().unwrap() == T::zero() {
        trimmed.pop();
        zeros += 1;
    }

    let n = trimmed.len() - 1;
    let mut roots = Vec::with_capacity(n + zeros);
    if n > 0 {
        let lead = trimmed[0];
        let mut a = vec![vec![T::zero(); n]; n];
        for j in 0..n {
            a[0][j] = -trimmed[j + 1] / lead;
        }
        for i in 1..n {
            a[i][i - 1] = T::one();
        }
        balance(&mut a);
        let eig = hessenberg_eigenvalues(&mut a)?;
        for z in eig {
            roots.push(newton_polish(&trimmed, z));
        }
        pair_conjugates(&mut roots);
    }
    roots.extend(std::iter::repeat_n(Complex::new(T::zero(), T::zero()), zeros));
    roots.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(roots)
}

/// Evaluates the polynomial by Horner's rule.
pub fn evaluate<T: Real>(coeffs: &[T], z: Complex<T>) -> Complex<T> {
    coeffs
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + c)
}

fn derivative_at<T: Real>(coeffs: &[T], z: Complex<T>) -> Complex<T> {
    let n = coeffs.len() - 1;
    let mut acc = Complex::new(T::zero(), T::zero());
    for (i, &c) in coeffs[..n].iter().enumerate() {
        acc = acc * z + c * T::from_count(n - i);
    }
    acc
}

fn newton_polish<T: Real>(coeffs: &[T], z0: Complex<T>) -> Complex<T> {
    let mut z = z0;
    let mut best = z0;
    let mut best_res = evaluate(coeffs, z0).norm();
    for _ in 0..4 {
        let d = derivative_at(coeffs, z);
        if d.norm() == T::zero() {
            break;
        }
        z = z - evaluate(coeffs, z) / d;
        let res = evaluate(coeffs, z).norm();
        if !(res < best_res) {
            break;
        }
        best = z;
        best_res = res;
    }
    // Polishing must not drag a real root off the axis or vice versa.
    if z0.im == T::zero() {
        best.im = T::zero();
    }
    best
}

fn pair_conjugates<T: Real>(roots: &mut [Complex<T>]) {
    let n = roots.len();
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] || roots[i].im == T::zero() {
            continue;
        }
        let target = roots[i].conj();
        let partner = (0..n).filter(|&j| j != i && !used[j]).min_by(|&a, &b| {
            (roots[a] - target)
                .norm()
                .partial_cmp(&(roots[b] - target).norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if let Some(j) = partner {
            let scale = T::one() + roots[i].norm();
            if (roots[j] - target).norm() <= T::tol(1e-6, 1e3) * scale {
                let re = (roots[i].re + roots[j].re) / T::lit(2.0);
                let im = (roots[i].im.abs() + roots[j].im.abs()) / T::lit(2.0);
                roots[i] = Complex::new(re, im.copysign(roots[i].im));
                roots[j] = roots[i].conj();
                used[i] = true;
                used[j] = true;
            }
        }
    }
}

/// Diagonal similarity scaling that equalises row and column norms.
fn balance<T: Real>(a: &mut [Vec<T>]) {
    let n = a.len();
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 0..n {
                if j != i {
                    c = c + a[j][i].abs();
                    r = r + a[i][j].abs();
                }
            }
            if c != T::zero() && r != T::zero() {
                let mut g = r / radix;
                let mut f = T::one();
                let s = c + r;
                while c < g {
                    f = f * radix;
                    c = c * sqrdx;
                }
                g = r * radix;
                while c > g {
                    f = f / radix;
                    c = c / sqrdx;
                }
                if (c + r) / f < T::lit(0.95) * s {
                    done = false;
                    let ginv = f.recip();
                    for j in 0..n {
                        a[i][j] = a[i][j] * ginv;
                    }
                    for row in a.iter_mut() {
                        row[i] = row[i] * f;
                    }
                }
            }
        }
    }
}

#[inline]
fn sign<T: Real>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix (destroyed in the process).
fn hessenberg_eigenvalues<T: Real>(a: &mut [Vec<T>]) -> Result<Vec<Complex<T>>, RootError> {
    let n = a.len() as isize;
    let eps = T::epsilon();
    let at = |i: isize| i as usize;
    let mut wri = vec![Complex::new(T::zero(), T::zero()); n as usize];

    let mut anorm = T::zero();
    for i in 0..n {
        for j in (i - 1).max(0)..n {
            anorm = anorm + a[at(i)][at(j)].abs();
        }
    }

    let mut nn = n - 1;
    let mut t = T::zero();
    let (mut p, mut q, mut r) = (T::zero(), T::zero(), T::zero());
    let (mut x, mut y, mut z, mut w);
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            let mut l = nn;
            while l > 0 {
                let mut s = a[at(l - 1)][at(l - 1)].abs() + a[at(l)][at(l)].abs();
                if s == T::zero() {
                    s = anorm;
                }
                if a[at(l)][at(l - 1)].abs() <= eps * s {
                    a[at(l)][at(l - 1)] = T::zero();
                    break;
                }
                l -= 1;
            }
            x = a[at(nn)][at(nn)];
            if l == nn {
                wri[at(nn)] = Complex::new(x + t, T::zero());
                nn -= 1;
            } else {
                y = a[at(nn - 1)][at(nn - 1)];
                w = a[at(nn)][at(nn - 1)] * a[at(nn - 1)][at(nn)];
                if l == nn - 1 {
                    p = T::lit(0.5) * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x = x + t;
                    if q >= T::zero() {
                        z = p + sign(z, p);
                        wri[at(nn - 1)] = Complex::new(x + z, T::zero());
                        wri[at(nn)] = Complex::new(x + z, T::zero());
                        if z != T::zero() {
                            wri[at(nn)] = Complex::new(x - w / z, T::zero());
                        }
                    } else {
                        wri[at(nn)] = Complex::new(x + p, -z);
                        wri[at(nn - 1)] = Complex::new(x + p, z);
                    }
                    nn -= 2;
                } else {
                    if its == MAX_SWEEPS {
                        return Err(RootError::NoConvergence(its));
                    }
                    if its == 10 || its == 20 {
                        t = t + x;
                        for i in 0..=nn {
                            a[at(i)][at(i)] = a[at(i)][at(i)] - x;
                        }
                        let s = a[at(nn)][at(nn - 1)].abs() + a[at(nn - 1)][at(nn - 2)].abs();
                        x = T::lit(0.75) * s;
                        y = x;
                        w = T::lit(-0.4375) * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    while m >= l {
                        z = a[at(m)][at(m)];
                        r = x - z;
                        let s0 = y - z;
                        p = (r * s0 - w) / a[at(m + 1)][at(m)] + a[at(m)][at(m + 1)];
                        q = a[at(m + 1)][at(m + 1)] - z - r - s0;
                        r = a[at(m + 2)][at(m + 1)];
                        let s = p.abs() + q.abs() + r.abs();
                        p = p / s;
                        q = q / s;
                        r = r / s;
                        if m == l {
                            break;
                        }
                        let u = a[at(m)][at(m - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[at(m - 1)][at(m - 1)].abs() + z.abs() + a[at(m + 1)][at(m + 1)].abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..nn - 1 {
                        a[at(i + 2)][at(i)] = T::zero();
                        if i != m {
                            a[at(i + 2)][at(i - 1)] = T::zero();
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = a[at(k)][at(k - 1)];
                            q = a[at(k + 1)][at(k - 1)];
                            r = T::zero();
                            if k + 1 != nn {
                                r = a[at(k + 2)][at(k - 1)];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != T::zero() {
                                p = p / x;
                                q = q / x;
                                r = r / x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != T::zero() {
                            if k == m {
                                if l != m {
                                    a[at(k)][at(k - 1)] = -a[at(k)][at(k - 1)];
                                }
                            } else {
                                a[at(k)][at(k - 1)] = -s * x;
                            }
                            p = p + s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q = q / p;
                            r = r / p;
                            for j in k..=nn {
                                let mut pp = a[at(k)][at(j)] + q * a[at(k + 1)][at(j)];
                                if k + 1 != nn {
                                    pp = pp + r * a[at(k + 2)][at(j)];
                                    a[at(k + 2)][at(j)] = a[at(k + 2)][at(j)] - pp * z;
                                }
                                a[at(k + 1)][at(j)] = a[at(k + 1)][at(j)] - pp * y;
                                a[at(k)][at(j)] = a[at(k)][at(j)] - pp * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                let mut pp = x * a[at(i)][at(k)] + y * a[at(i)][at(k + 1)];
                                if k + 1 != nn {
                                    pp = pp + z * a[at(i)][at(k + 2)];
                                    a[at(i)][at(k + 2)] = a[at(i)][at(k + 2)] - pp * r;
                                }
                                a[at(i)][at(k + 1)] = a[at(i)][at(k + 1)] - pp * q;
                                a[at(i)][at(k)] = a[at(i)][at(k)] - pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l + 1 >= nn {
                break;
            }
        }
    }
    Ok(wri)
}
