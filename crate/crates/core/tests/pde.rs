use woundwave::orbits::{construct_shock_wave, construct_smooth_wave, integrate_layer_fibre, IntegratorConfig};
use woundwave::pde::{
    aligned_distance, front_level, measure_wavespeed, seed_from_orbit, semidiscrete_rhs, shock_width, simulate,
    step_to, BoundaryMode, Field1D, Frame, PdeConfig,
};
use woundwave::{Params, PhasePoint};

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Truncation error of the semi-discrete operator against the analytic
/// right-hand side for `u = a + b sin x`, `w = a + b cos x`.
fn manufactured_error(n: usize) -> f64 {
    let p = Params::case1();
    let (alpha, beta) = (p.alpha(), p.beta());
    let (eps, s) = (0.05, 0.3);
    let cfg = PdeConfig {
        length: 4.0 * std::f64::consts::PI,
        n,
        eps,
        boundary: BoundaryMode::ZeroFlux,
        frame: Frame::Comoving(s),
        ..PdeConfig::default()
    };
    let (a, b) = (0.5, 0.25);
    let dx = cfg.dx();
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * dx).collect();
    let u: Vec<f64> = xs.iter().map(|x| a + b * x.sin()).collect();
    let w: Vec<f64> = xs.iter().map(|x| a + b * x.cos()).collect();
    let f = Field1D::new(u.clone(), w.clone(), 0.0, dx, 0.0).unwrap();
    let (du, dw) = semidiscrete_rhs(&f, &p, &cfg);
    let mut err: f64 = 0.0;
    // Stay clear of the boundary faces, which are not part of the interior stencil.
    for i in 4..n - 4 {
        let x = xs[i];
        let (ux, uxx) = (b * x.cos(), -b * x.sin());
        let (wx, wxx) = (-b * x.sin(), -b * x.cos());
        let ut = u[i] * (1.0 - u[i] - w[i]) + eps * uxx + s * ux;
        let wt = -(wx * ux + w[i] * uxx) + alpha * w[i] * (beta * u[i] - 1.0) + eps * wxx + s * wx;
        err = err.max((du[i] - ut).abs()).max((dw[i] - wt).abs());
    }
    err
}

#[test]
fn manufactured_solution_is_second_order() {
    let e: Vec<f64> = [100, 200, 400].iter().map(|n| manufactured_error(*n)).collect();
    for k in 1..e.len() {
        let order = (e[k - 1] / e[k]).log2();
        assert!(order >= 1.9, "errors {e:?}");
    }
}

#[test]
fn zero_flux_conserves_w_without_kinetics() {
    let p = Params::case2();
    let cfg = PdeConfig {
        n: 400,
        length: 10.0,
        eps: 1e-2,
        boundary: BoundaryMode::ZeroFlux,
        kinetics: false,
        ..PdeConfig::default()
    };
    let dx = cfg.dx();
    let x = |i: usize| (i as f64 + 0.5) * dx;
    let u: Vec<f64> = (0..cfg.n).map(|i| 0.6 + 0.3 * (-(x(i) - 5.0).powi(2)).exp()).collect();
    let w: Vec<f64> = (0..cfg.n).map(|i| 0.2 + 0.1 * (x(i) - 3.0).tanh()).collect();
    let f = Field1D::new(u, w, 0.0, dx, 0.0).unwrap();
    let g = step_to(&f, 2.0, &p, &cfg).unwrap();
    assert!(max_diff(&f.w, &g.w) > 1e-3, "the field should evolve");
    assert!((g.mass_w() - f.mass_w()).abs() <= 1e-8);
}

#[test]
fn halving_the_step_cap_converges_at_third_order() {
    let p = Params::case1();
    let orbit = construct_smooth_wave(&p, &IntegratorConfig::default()).unwrap();
    let base = PdeConfig {
        n: 1000,
        eps: 1e-2,
        ..PdeConfig::default()
    };
    let seed = seed_from_orbit(&orbit, &base).unwrap();
    let run = |cap: f64| {
        let cfg = PdeConfig { max_dt: cap, ..base };
        step_to(&seed, 1.0, &p, &cfg).unwrap()
    };
    let (a, b, c) = (run(0.01), run(0.005), run(0.0025));
    let e1 = max_diff(&a.u, &b.u).max(max_diff(&a.w, &b.w));
    let e2 = max_diff(&b.u, &c.u).max(max_diff(&b.w, &c.w));
    assert!(e1 < 1e-6, "{e1}");
    assert!(e1 / e2 > 6.0, "{e1} {e2}");
}

#[test]
fn lab_and_comoving_frames_agree() {
    let p = Params::case1();
    let orbit = construct_smooth_wave(&p, &IntegratorConfig::default()).unwrap();
    // dx = 0.005 so the shift c t = 1 is exactly 200 cells.
    let lab = PdeConfig {
        n: 8000,
        eps: 1e-2,
        ..PdeConfig::default()
    };
    let moving = PdeConfig {
        frame: Frame::Comoving(p.c()),
        ..lab
    };
    let seed = seed_from_orbit(&orbit, &lab).unwrap();
    let a = step_to(&seed, 1.0, &p, &lab).unwrap();
    let b = step_to(&seed, 1.0, &p, &moving).unwrap();
    assert!((b.x0 - 1.0).abs() < 1e-12);
    let shift = 200;
    let mut worst: f64 = 0.0;
    // Compare away from both boundaries, whose ghost cells do not move.
    for i in 1000..6000 {
        worst = worst
            .max((a.u[i + shift] - b.u[i]).abs())
            .max((a.w[i + shift] - b.w[i]).abs());
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn translated_profile_speed() {
    let p = Params::case1();
    let orbit = construct_smooth_wave(&p, &IntegratorConfig::default()).unwrap();
    let cfg = PdeConfig {
        n: 2000,
        ..PdeConfig::default()
    };
    let seed = seed_from_orbit(&orbit, &cfg).unwrap();
    let history: Vec<Field1D> = (0..20)
        .map(|k| {
            let t = 0.5 * k as f64;
            Field1D {
                x0: seed.x0 + 0.7 * t,
                t,
                ..seed.clone()
            }
        })
        .collect();
    let s = measure_wavespeed(&history, front_level(&p), 0.0).unwrap();
    assert!((s.speed - 0.7).abs() <= 1e-6);
    assert!(s.residual <= 1e-9);
    assert!(measure_wavespeed(&history[..5], front_level(&p), 0.0).is_err());
}

#[test]
fn seeds_have_limit_states_at_both_ends() {
    let cfgi = IntegratorConfig::default();
    for (p, orbit) in [
        (Params::case1(), construct_smooth_wave(&Params::case1(), &cfgi).unwrap()),
        (Params::case2(), construct_shock_wave(&Params::case2(), &cfgi).unwrap()),
    ] {
        // Wide enough that both ends lie beyond the orbit's z-extent.
        let (lo, hi) = orbit.z_extent();
        let length = 2.0 * (hi - lo) + 2.0;
        let cfg = PdeConfig::resolved(1e-3, length, 4000, 0.25);
        let f = seed_from_orbit(&orbit, &cfg).unwrap();
        let (h, w) = (p.healed_state(), p.wounded_state());
        assert_eq!((f.u[0], f.w[0]), (h.u, h.w));
        // Ahead of the front the tail decays towards W without reaching it.
        let tail = PhasePoint::new(f.u[f.len() - 1], f.w[f.len() - 1]);
        assert!(tail.w > 0.0 && tail.distance(&w) < 1e-6, "{tail:?}");
        let x = woundwave::pde::front_position(&f, front_level(&p)).unwrap();
        assert!((x - 0.5 * length).abs() <= f.dx);
    }
}

#[test]
fn smooth_seed_is_continuous() {
    let p = Params::case1();
    let orbit = construct_smooth_wave(&p, &IntegratorConfig::default()).unwrap();
    let jump = |n: usize| {
        let f = seed_from_orbit(
            &orbit,
            &PdeConfig {
                n,
                ..PdeConfig::default()
            },
        )
        .unwrap();
        let du = f.u.windows(2).map(|v| (v[1] - v[0]).abs()).fold(0.0, f64::max);
        let dw = f.w.windows(2).map(|v| (v[1] - v[0]).abs()).fold(0.0, f64::max);
        du.max(dw)
    };
    let (a, b, c) = (jump(1000), jump(2000), jump(4000));
    assert!(b < 0.6 * a && c < 0.6 * b, "{a} {b} {c}");
}

#[test]
fn shock_seed_slope_is_inner_plus_outer() {
    let p = Params::case2();
    let orbit = construct_shock_wave(&p, &IntegratorConfig::default()).unwrap();
    let j = orbit.jump.unwrap();
    let dw = j.w_depart - j.w_land;
    // Steepest descent of the fibre itself, per unit of the fast coordinate.
    let fibre = integrate_layer_fibre(j.u_star, j.w_depart, &p, 1.0, true).unwrap();
    let inner = (1..fibre.y.len())
        .map(|k| -(fibre.states[k].w - fibre.states[k - 1].w) / (fibre.y[k] - fibre.y[k - 1]))
        .fold(0.0, f64::max);
    // Outer slopes on either side of the jump, from the orbit rows.
    let rows = orbit.profile();
    let k = (1..rows.len())
        .find(|&k| rows[k].z == rows[k - 1].z && (rows[k].w - rows[k - 1].w).abs() > 0.5 * dw)
        .unwrap();
    let side = |a: usize, b: usize| ((rows[b].w - rows[a].w) / (rows[b].z - rows[a].z)).abs();
    let outer = side(k - 20, k - 1).max(side(k, k + 20));
    for eps in [4e-3, 2e-3] {
        let cfg = PdeConfig::resolved(eps, 40.0, 4000, 4.0);
        let f = seed_from_orbit(&orbit, &cfg).unwrap();
        let s = shock_width(&f, dw);
        let excess = s.max_slope - inner / eps;
        assert!(
            excess >= -0.02 * inner / eps && excess <= outer * 1.1,
            "eps {eps}: {} vs {} + {outer}",
            s.max_slope,
            inner / eps
        );
        // Transition a few tens of eps/c wide: set by the slow layer eigenvalues near the fold.
        assert!(s.width > 5.0 * eps / p.c() && s.width < 60.0 * eps / p.c());
    }
}

#[test]
fn shock_width_converges_under_refinement() {
    let p = Params::case2();
    let orbit = construct_shock_wave(&p, &IntegratorConfig::default()).unwrap();
    let j = orbit.jump.unwrap();
    let width = |cells: f64| {
        let cfg = PdeConfig {
            frame: Frame::Comoving(p.c()),
            ..PdeConfig::resolved(4e-3, 40.0, 4000, cells)
        };
        let seed = seed_from_orbit(&orbit, &cfg).unwrap();
        let f = step_to(&seed, 2.0, &p, &cfg).unwrap();
        shock_width(&f, j.w_depart - j.w_land).width
    };
    let (coarse, fine) = (width(0.6), width(1.2));
    assert!((coarse / fine - 1.0).abs() < 0.01, "{coarse} {fine}");
}

#[test]
fn case1_profile_persists() {
    let p = Params::case1();
    let orbit = construct_smooth_wave(&p, &IntegratorConfig::default()).unwrap();
    // The clamped right boundary feeds w = 0 into the tail ahead of the
    // front; doubling the length keeps that edge away through t = 20.
    let cfg = PdeConfig {
        frame: Frame::Comoving(p.c()),
        ..PdeConfig::resolved(1e-3, 80.0, 8000, 0.5)
    };
    let seed = seed_from_orbit(&orbit, &cfg).unwrap();
    let times: Vec<f64> = (1..=40).map(|k| 0.5 * k as f64).collect();
    let (history, stats) = simulate(&seed, &times, &p, &cfg).unwrap();
    assert!(stats.min_u >= -1e-8 && stats.min_w >= -1e-8);
    let d: Vec<(f64, f64)> = history
        .iter()
        .map(|f| (f.t, aligned_distance(f, &seed, f.x0, 1.0).0))
        .collect();
    // The seed is the singular profile, so the distance starts at zero and
    // settles at O(eps). It must stay there and stop growing.
    let eps = cfg.eps;
    for (t, v) in &d {
        assert!(*v < 5.0 * eps, "t = {t}: {v}");
    }
    let mid = d.iter().find(|(t, _)| *t >= 10.0).unwrap().1;
    let late = d
        .iter()
        .filter(|(t, _)| *t >= 15.0)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    assert!(late < 1.5 * mid, "{late} vs {mid}");
}
