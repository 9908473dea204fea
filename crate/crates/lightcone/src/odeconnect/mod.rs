//! ODE machinery: Frobenius bases at the singular points, adaptive
//! integration between them, and connection-coefficient extraction.

pub mod connect;
pub mod frobenius;
pub mod integrate;
pub mod region;

pub use connect::{basis_state, connect, connect_samples, launch, transport, ConnectionData, COLLOCATION_POINTS};
pub use frobenius::{exponents, frobenius_at, local_form, particular_series, Chart, FrobeniusBasis, FrobeniusSeries, LocalForm};
pub use integrate::{ConstantOde, Forced, Integrator, LinearOde, SolutionPath, State};
pub use region::{Anchor, RegionSolution, SourceFn};

use crate::model::{ModeOperator, OperatorKind};
use num_complex::Complex64;

/// Default handoff radius in the local variable.
pub const HANDOFF_RADIUS: f64 = 0.4;

/// Wronskian of two states.
pub fn wronskian(y1: &State, y2: &State) -> Complex64 {
    y1[0] * y2[1] - y1[1] * y2[0]
}

/// exp(∫B/A) for the mode operator, so that its product with the Wronskian
/// of two solutions is constant on each interval free of singular points.
pub fn abel_weight(op: &ModeOperator, theta: f64) -> Complex64 {
    let mu = (2.0 * theta).cos();
    let f = op.profile.value(&Complex64::new(mu, 0.0));
    let damp = (f * (1.0 - mu)).powf(op.half());
    let m = Complex64::new(mu.abs(), 0.0);
    match op.kind {
        OperatorKind::Global => m.powc(1.0 - Complex64::i() * op.sigma) * damp,
        OperatorKind::Cap | OperatorKind::Belt => m.powf(-(op.n as f64 - 3.0) / 2.0) * damp,
    }
}

/// Largest deviation of the Abel-weighted Wronskian of two sampled solutions
/// from its initial value, relative to the size of the products it is formed
/// from (so cancellation between nearly parallel solutions is not counted).
pub fn abel_defect(op: &ModeOperator, u: &[(f64, State)], v: &[(f64, State)]) -> f64 {
    let weighted = |(t, a): &(f64, State), b: &State| {
        let e = abel_weight(op, *t);
        (wronskian(a, b) * e, e.norm() * ((a[0] * b[1]).norm() + (a[1] * b[0]).norm()))
    };
    let (w0, mut scale) = weighted(&u[0], &v[0].1);
    let mut worst: f64 = 0.0;
    for (x, y) in u.iter().zip(v) {
        let (w, s) = weighted(x, &y.1);
        scale = scale.max(s);
        worst = worst.max((w - w0).norm());
    }
    worst / scale.max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModeProblem, RadialProfile};
    use std::f64::consts::FRAC_PI_4;

    fn problem(n: usize, ell: usize, s: Complex64, f: RadialProfile) -> ModeProblem {
        ModeProblem::new(n, ell, s, f).unwrap()
    }

    #[test]
    fn abel_identity_on_mode_problems() {
        let s = Complex64::new(0.8, -0.4);
        for kind in [OperatorKind::Global, OperatorKind::Cap, OperatorKind::Belt] {
            let op = ModeOperator::from_problem(&problem(4, 3, s, RadialProfile::Bump { epsilon: 0.1 }), kind);
            let (a, b) = if kind == OperatorKind::Belt { (0.9, 2.2) } else { (0.2, 0.7) };
            let y1 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5)];
            let y2 = [Complex64::new(0.2, -1.0), Complex64::new(1.0, 0.0)];
            let mut pts: Vec<f64> = (0..=20).map(|i| a + (b - a) * i as f64 / 20.0).collect();
            pts.remove(0);
            let p1 = Integrator::default().run(&op, a, y1, b, &pts).unwrap();
            let p2 = Integrator::default().run(&op, a, y2, b, &pts).unwrap();
            let mut u = vec![(a, y1)];
            u.extend(p1.outputs.iter().cloned());
            let mut v = vec![(a, y2)];
            v.extend(p2.outputs.iter().cloned());
            let d = abel_defect(&op, &u, &v);
            assert!(d < 1e-10, "{kind:?} {d}");
        }
    }

    #[test]
    fn connect_recovers_basis_vectors() {
        let mp = problem(3, 1, Complex64::new(0.7, 0.3), RadialProfile::Bump { epsilon: 0.1 });
        let op = ModeOperator::from_problem(&mp, OperatorKind::Global);
        let b = frobenius_at(&op, Chart::light_cone(FRAC_PI_4), HANDOFF_RADIUS).unwrap();
        for side in [1.0, -1.0] {
            for (i, e) in [[1.0, 0.0], [0.0, 1.0]].iter().enumerate() {
                let coeffs = [Complex64::new(e[0], 0.0), Complex64::new(e[1], 0.0)];
                let start = (b.chart.theta_at(side * 0.4), basis_state(&b, &coeffs, None, b.chart.theta_at(side * 0.4)));
                // the series is not trusted at 0.4; launch from the radius instead
                let start = if b.radius < 0.4 { launch(&b, &coeffs, None, side) } else { start };
                let far = b.chart.theta_at(side * 0.45);
                let out = Integrator::default().run(&op, start.0, start.1, far, &[]).unwrap();
                let (d, _) = transport(&op, out.end(), &b, side, None).unwrap();
                let got = [d.coeff_singular, d.coeff_smooth];
                assert!((got[i] - 1.0).norm() < 1e-11 && got[1 - i].norm() < 1e-11, "{got:?}");
            }
        }
    }

    #[test]
    fn series_matches_integration_in_overlap() {
        let mp = problem(3, 2, Complex64::new(-1.1, 0.6), RadialProfile::Exact);
        for (kind, chart) in [
            (OperatorKind::Global, Chart::light_cone(3.0 * FRAC_PI_4)),
            (OperatorKind::Cap, Chart::pole(0.0)),
            (OperatorKind::Belt, Chart::belt(FRAC_PI_4)),
        ] {
            let op = ModeOperator::from_problem(&mp, kind);
            let b = frobenius_at(&op, chart, HANDOFF_RADIUS).unwrap();
            let side = if chart.is_pole() { 1.0 } else { -1.0 };
            let side = if kind == OperatorKind::Belt { 1.0 } else { side };
            let coeffs = vec![Complex64::new(1.0, 0.0); b.solutions.len()];
            let th0 = chart.theta_at(side * b.radius / 2.0);
            let start = basis_state(&b, &coeffs, None, th0);
            let far = chart.theta_at(side * b.radius);
            let path = Integrator::default().run(&op, th0, start, far, &[]).unwrap();
            let got = path.end().1;
            let want = basis_state(&b, &coeffs, None, far);
            assert!((got[0] - want[0]).norm() < 1e-10 * want[0].norm(), "{kind:?}");
        }
    }

    #[test]
    fn connection_is_radius_independent() {
        let mp = problem(2, 0, Complex64::new(1.3, -0.2), RadialProfile::Bump { epsilon: 0.1 });
        let op = ModeOperator::from_problem(&mp, OperatorKind::Global);
        let start = (1.2, [Complex64::new(0.3, 1.0), Complex64::new(-0.5, 0.2)]);
        let b1 = frobenius_at(&op, Chart::light_cone(3.0 * FRAC_PI_4), 0.15).unwrap();
        let b2 = frobenius_at(&op, Chart::light_cone(3.0 * FRAC_PI_4), 0.1).unwrap();
        let (d1, _) = transport(&op, start, &b1, -1.0, None).unwrap();
        let (d2, _) = transport(&op, start, &b2, -1.0, None).unwrap();
        assert!((d1.coeff_singular - d2.coeff_singular).norm() < 1e-10 * d1.coeff_singular.norm());
        assert!((d1.coeff_smooth - d2.coeff_smooth).norm() < 1e-10 * d1.coeff_smooth.norm());
    }
}
