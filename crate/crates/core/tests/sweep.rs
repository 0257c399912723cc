use woundwave::equilibria::{curve_c3, FoldedType};
use woundwave::sweep::{classify_point, locate_bifurcation, sweep, BoundaryEvent, SweepSpec};
use woundwave::{Params, Sheet};

/// Discriminant of `a x^4 + b x^3 + c x^2 + d x + e`, expanded by hand.
fn quartic_discriminant([a, b, c, d, e]: [f64; 5]) -> f64 {
    256.0 * a.powi(3) * e.powi(3) - 192.0 * a * a * b * d * e * e - 128.0 * a * a * c * c * e * e
        + 144.0 * a * a * c * d * d * e
        - 27.0 * a * a * d.powi(4)
        + 144.0 * a * b * b * c * e * e
        - 6.0 * a * b * b * d * d * e
        - 80.0 * a * b * c * c * d * e
        + 18.0 * a * b * c * d.powi(3)
        + 16.0 * a * c.powi(4) * e
        - 4.0 * a * c.powi(3) * d * d
        - 27.0 * b.powi(4) * e * e
        + 18.0 * b.powi(3) * c * d * e
        - 4.0 * b.powi(3) * d.powi(3)
        - 4.0 * b * b * c.powi(3) * e
        + b * b * c * c * d * d
}

fn hole_coeffs(alpha: f64, beta: f64, c: f64) -> [f64; 5] {
    let c2 = c * c;
    [
        3.0,
        -4.0,
        1.0 + 4.0 * c2 * (1.0 - alpha * beta),
        2.0 * c2 * (2.0 * alpha - 1.0),
        c2 * c2,
    ]
}

#[test]
fn canard_creation_speed_matches_discriminant_root() {
    let (alpha, beta) = (0.4, 2.5);
    let disc = |c: f64| quartic_discriminant(hole_coeffs(alpha, beta, c));
    let (mut lo, mut hi) = (0.78, 1.0);
    assert!(disc(lo) < 0.0 && disc(hi) > 0.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if disc(mid) < 0.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    let oracle = 0.5 * (lo + hi);
    assert!((oracle - 0.785).abs() < 5e-3, "{oracle}");

    let b = locate_bifurcation(
        &Params::new(alpha, beta, 0.78).unwrap(),
        &Params::new(alpha, beta, 1.0).unwrap(),
        |p| Ok(!classify_point(p)?.canard_census.is_empty()),
        1e-10,
    )
    .unwrap();
    assert_eq!(b.event, BoundaryEvent::FsnI);
    assert!((b.params.c() - oracle).abs() <= 1e-6, "{} vs {oracle}", b.params.c());
}

#[test]
fn non_monotone_segment_is_reported() {
    // A folded saddle appears with H crossing the fold and is lost again
    // when the canards annihilate.
    let r = locate_bifurcation(
        &Params::new(0.4, 2.5, 0.05).unwrap(),
        &Params::new(0.4, 2.5, 1.0).unwrap(),
        |p| Ok(classify_point(p)?.has_folded_saddle()),
        1e-8,
    );
    match r {
        Err(woundwave::sweep::SweepError::NonMonotone(b)) => assert_eq!(b.len(), 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn full_grid_regions() {
    let spec = SweepSpec::default_for(2.5);
    let grid = sweep(&spec, 4).unwrap();
    assert_eq!(grid.cells.len(), 200 * 200);
    assert_eq!(grid.failures(), 0);

    let case2 = grid
        .nearest(0.4, std::f64::consts::FRAC_1_SQRT_2)
        .label
        .clone()
        .unwrap();
    assert_eq!(
        case2.canard_census,
        vec![FoldedType::FoldedSaddle, FoldedType::FoldedFocus]
    );
    let case1 = grid.nearest(0.4, 1.0).label.clone().unwrap();
    assert!(case1.canard_census.is_empty());
    assert_eq!(case1.h_side, Sheet::Attracting);

    // Cells without canards have no real quartic roots; a positive
    // discriminant confirms the count is 0 or 4.
    for cell in &grid.cells {
        let l = cell.label.as_ref().unwrap();
        if l.canard_census.is_empty() {
            assert_eq!(l.real_roots, 0, "{cell:?}");
            assert!(
                quartic_discriminant(hole_coeffs(cell.alpha, 2.5, cell.c)) >= 0.0,
                "{cell:?}"
            );
        }
    }

    // Census changes along each column sit within one cell of c3 where it exists.
    let dc = grid.speeds[1] - grid.speeds[0];
    let lines = grid.boundaries();
    assert!(lines.iter().any(|l| l.event == BoundaryEvent::FsnII));
    let mut checked = 0;
    for (i, &alpha) in grid.alphas.iter().enumerate() {
        let Some(c3) = curve_c3(alpha, 2.5) else { continue };
        if c3 > 2.0 || c3 < 2.0 * dc {
            continue;
        }
        let changes: Vec<f64> = (0..grid.speeds.len() - 1)
            .filter(|&j| {
                let a = grid.cell(i, j).label.as_ref().unwrap();
                let b = grid.cell(i, j + 1).label.as_ref().unwrap();
                a.canard_census != b.canard_census
            })
            .map(|j| 0.5 * (grid.speeds[j] + grid.speeds[j + 1]))
            .collect();
        let nearest = changes.iter().map(|c| (c - c3).abs()).fold(f64::INFINITY, f64::min);
        assert!(nearest <= dc, "alpha {alpha} c3 {c3} changes {changes:?}");
        checked += 1;
    }
    assert!(checked > 5, "{checked}");
}
