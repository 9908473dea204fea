use super::*;
use crate::model::RadialProfile;

fn problem(n: usize, ell: usize, re: f64, im: f64) -> ModeProblem {
    ModeProblem::new(n, ell, Complex64::new(re, im), RadialProfile::Bump { epsilon: 0.1 }).unwrap()
}

/// Interior grid of a region, kept clear of its ends so that the
/// difference stencil stays inside.
fn grid(region: Region, count: usize) -> Vec<f64> {
    let (a, b) = region.interval();
    let a = if a == 0.0 { 0.05 } else { a };
    let b = if b == PI { PI - 0.05 } else { b };
    sample_grid(a, b, count, 0.01)
}

fn full_grid(count: usize) -> Vec<f64> {
    residual_grid(count)
}

fn sup_rel(a: &[State], b: &[State]) -> f64 {
    let scale = b.iter().map(|s| s[0].norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x[0] - y[0]).norm()).fold(0.0, f64::max) / scale
}

#[test]
fn cumulative_integrates_polynomials() {
    let f = |x: &[f64]| -> Result<Vec<Complex64>> { Ok(x.iter().map(|t| Complex64::new(3.0 * t * t, 1.0)).collect()) };
    let targets = [0.2, 1.5, -0.7, 0.5];
    let got = cumulative(0.5, &targets, (0.0, PI), 0.1, &f).unwrap();
    for (t, g) in targets.iter().zip(&got) {
        let want = if *t > 0.0 { Complex64::new(t.powi(3) - 0.125, t - 0.5) } else { Complex64::new(-0.125, -0.5) };
        assert!((g - want).norm() < 1e-13, "{t}: {g} vs {want}");
    }
}

#[test]
fn direct_inverse_solves_the_equation() {
    let mp = problem(3, 2, 0.7, 0.3);
    let op = ModeOperator::from_problem(&mp, OperatorKind::Global);
    let src = ModeSource::Gaussian { center: 0.1, width: 0.6 };
    for orientation in [Orientation::Past, Orientation::Future] {
        let g = global_inverse_direct(&mp, &src, orientation).unwrap();
        let r = inverse_residual(&op, &g, &src, &full_grid(12)).unwrap();
        assert!(r < 1e-7, "{orientation:?}: {r}");
    }
}

#[test]
fn assembled_inverse_matches_direct() {
    for (mp, src) in [
        (problem(3, 2, 0.7, 0.3), ModeSource::Gaussian { center: 0.1, width: 0.6 }),
        (problem(2, 1, -1.1, 0.4), ModeSource::Poly { coeffs: vec![1.0, -0.5, 0.25] }),
        (problem(4, 3, 1.3, -0.2), ModeSource::Bump { center: 1.6, half_width: 0.3 }),
    ] {
        let thetas = full_grid(10);
        let d = global_inverse_direct(&mp, &src, Orientation::Past).unwrap();
        let a = global_inverse_assembled(&mp, &src, Orientation::Past).unwrap();
        let dev = sup_rel(&a.eval_many(&thetas).unwrap(), &d.eval_many(&thetas).unwrap());
        assert!(dev < 1e-8, "{mp:?}: {dev}");
        assert!((a.y_minus.a_plus - d.y_minus.a_plus).norm() < 1e-7 * d.y_minus.a_plus.norm().max(1e-3));
        let op = ModeOperator::from_problem(&mp, OperatorKind::Global);
        assert!(inverse_residual(&op, &a, &src, &thetas).unwrap() < 1e-7);
    }
}

#[test]
fn backward_belt_solution_vanishes_before_the_source() {
    let mp = problem(3, 2, 0.5, 0.2);
    let src = ModeSource::Bump { center: 1.7, half_width: 0.25 };
    let sol = backward_solution_desitter(&mp, &src).unwrap();
    let early = sample_grid(FRAC_PI_4, 1.45, 8, 0.01);
    for s in sol.eval_many(&early).unwrap() {
        assert_eq!(s[0], c0());
    }
    let op = ModeOperator::from_problem(&mp, OperatorKind::Global);
    assert!(inverse_residual(&op, &sol, &src, &sample_grid(1.45, 3.0 * FRAC_PI_4 - CONE_GAP, 16, 0.0)).unwrap() < 1e-7);
    assert!(backward_solution_desitter(&mp, &ModeSource::Bump { center: 0.4, half_width: 0.2 }).is_err());
}

#[test]
fn resolvent_is_the_restriction_of_the_global_inverse() {
    let mp = problem(3, 1, 0.8, -0.3);
    let src = ModeSource::Bump { center: 0.45, half_width: 0.2 };
    let thetas = grid(Region::XPlus, 10);
    let r = resolvent_hyperbolic(&mp, &src).unwrap();
    let g = global_inverse_direct(&mp, &src, Orientation::Past).unwrap();
    assert!(sup_rel(&r.eval_many(&thetas).unwrap(), &g.eval_many(&thetas).unwrap()) < 1e-8);
    // constituent picture: u = x^{k}·ũ
    let c = resolvent_cap_constituent(&mp, &src).unwrap();
    let conj: Vec<State> = thetas
        .iter()
        .zip(r.eval_many(&thetas).unwrap())
        .map(|(&t, s)| [s[0] * conjugation_factor(mp.n, mp.sigma, t), c0()])
        .collect();
    assert!(sup_rel(&c.eval_many(&thetas).unwrap(), &conj) < 1e-8);
}

#[test]
fn determinant_factors_through_the_constituents() {
    let mp = problem(3, 2, 0.9, 0.35);
    let det = global_determinant(&mp).unwrap();
    let plus = poles::determinant(&mp, DeterminantKind::CapPlus, mp.sigma).unwrap();
    assert!(det.is_finite() && det.norm() > 0.0 && plus.norm() > 0.0);
}

#[test]
fn direct_solution_is_smooth_at_the_first_light_cone() {
    let mp = problem(3, 2, 0.7, 0.3);
    let g = global_inverse_direct(&mp, &ModeSource::Gaussian { center: -0.2, width: 0.5 }, Orientation::Past).unwrap();
    assert!(g.certificate.unwrap() < 1e-9, "{:?}", g.certificate);
}

#[test]
fn downstream_sources_leave_upstream_regions_at_rest() {
    let mp = problem(3, 2, 0.6, 0.25);
    let src = ModeSource::Bump { center: 2.7, half_width: 0.2 };
    let a = global_inverse_assembled(&mp, &src, Orientation::Past).unwrap();
    let up = sample_grid(0.05, 3.0 * FRAC_PI_4 - 0.01, 30, 0.0);
    assert!(a.eval_many(&up).unwrap().iter().all(|s| s[0].norm() <= 1e-10));
    let op = ModeOperator::from_problem(&mp, OperatorKind::Global);
    let down = sample_grid(3.0 * FRAC_PI_4 + CONE_GAP, PI - POLE_GAP, 20, 0.0);
    assert!(inverse_residual(&op, &a, &src, &down).unwrap() < 1e-7);
}

#[test]
fn future_solutions_vanish_above_a_belt_source() {
    let mp = problem(3, 1, -0.9, 0.3);
    let src = ModeSource::Bump { center: 1.4, half_width: 0.2 };
    let f = global_inverse_direct(&mp, &src, Orientation::Future).unwrap();
    let above = sample_grid(1.61, PI - 0.05, 30, 0.0);
    assert!(f.eval_many(&above).unwrap().iter().all(|s| s[0].norm() <= 1e-12));
    let p = global_inverse_direct(&mp, &src, Orientation::Past).unwrap();
    let below = sample_grid(0.05, 1.19, 30, 0.0);
    assert!(p.eval_many(&below).unwrap().iter().all(|s| s[0].norm() <= 1e-12));
}

#[test]
fn zero_source_gives_zero() {
    let mp = problem(2, 0, 1.2, 0.1);
    let zero = ModeSource::Poly { coeffs: vec![0.0] };
    let r = resolvent_hyperbolic(&mp, &zero).unwrap();
    assert!(r.eval_many(&[0.3, 0.6]).unwrap().iter().all(|s| s[0] == c0()));
}
