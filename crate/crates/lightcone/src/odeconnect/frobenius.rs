//! Frobenius expansions at the regular singular points.

use crate::error::{Error, Result};
use crate::model::{ModeOperator, OperatorKind};
use crate::series::Series;
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

const MAX_TERMS: usize = 160;
const TAIL_TOL: f64 = 1e-16;
const MAX_CANCELLATION: f64 = 1e3;

/// Local variable t = sign·(μ − μ₀) about an anchor θ₀. At the poles
/// t = 1 − μ = 2 sin²θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chart {
    pub theta0: f64,
    pub mu0: f64,
    pub sign: f64,
}

impl Chart {
    pub fn light_cone(theta0: f64) -> Self {
        Self { theta0, mu0: 0.0, sign: 1.0 }
    }

    /// Light-cone chart in ν = −μ, positive on the belt.
    pub fn belt(theta0: f64) -> Self {
        Self { theta0, mu0: 0.0, sign: -1.0 }
    }

    pub fn pole(theta0: f64) -> Self {
        Self { theta0, mu0: 1.0, sign: -1.0 }
    }

    pub fn is_pole(&self) -> bool {
        self.mu0 == 1.0
    }

    pub fn t(&self, theta: f64) -> f64 {
        if self.is_pole() {
            2.0 * theta.sin().powi(2)
        } else {
            self.sign * (2.0 * theta).cos()
        }
    }

    pub fn dt_dtheta(&self, theta: f64) -> f64 {
        -2.0 * self.sign * (2.0 * theta).sin()
    }

    /// The θ near the anchor with local coordinate t.
    pub fn theta_at(&self, t: f64) -> f64 {
        let base = if self.is_pole() {
            (t / 2.0).sqrt().asin()
        } else {
            (self.sign * t).clamp(-1.0, 1.0).acos() / 2.0
        };
        if self.theta0 > FRAC_PI_2 {
            std::f64::consts::PI - base
        } else {
            base
        }
    }

    /// Sign of t on the side of the anchor that contains `theta`.
    pub fn side_sign(&self, theta: f64) -> f64 {
        if self.t(theta) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// |t|^r · Σ aₖ tᵏ.
#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusSeries {
    pub exponent: Complex64,
    pub coeffs: Vec<Complex64>,
}

impl FrobeniusSeries {
    fn poly(&self) -> Series {
        Series(self.coeffs.clone())
    }

    /// Value and t-derivative.
    pub fn eval_t(&self, t: f64) -> (Complex64, Complex64) {
        let (g, dg) = self.poly().eval_d(Complex64::new(t, 0.0));
        if self.exponent == Complex64::new(0.0, 0.0) {
            return (g, dg);
        }
        let p = Complex64::new(t.abs(), 0.0).powc(self.exponent);
        (p * g, p * (self.exponent * g / t + dg))
    }

    /// Value and θ-derivative.
    pub fn eval_theta(&self, chart: &Chart, theta: f64) -> [Complex64; 2] {
        let (v, d) = self.eval_t(chart.t(theta));
        [v, d * chart.dt_dtheta(theta)]
    }

    pub(crate) fn tail_ok(&self, r: f64, n: usize) -> bool {
        let terms: Vec<f64> = self.coeffs[..n].iter().enumerate().map(|(k, a)| a.norm() * r.powi(k as i32)).collect();
        let total: f64 = terms.iter().sum();
        let tail = terms[n - 3..].iter().cloned().fold(0.0, f64::max);
        tail <= TAIL_TOL * total || total == 0.0
    }

    fn cancellation(&self, r: f64, n: usize) -> f64 {
        let abs_sum: f64 = self.coeffs[..n].iter().enumerate().map(|(k, a)| a.norm() * r.powi(k as i32)).sum();
        let mut worst: f64 = 1.0;
        for s in [r, -r, 0.5 * r, -0.5 * r] {
            let v = Series(self.coeffs[..n].to_vec()).eval(Complex64::new(s, 0.0)).norm();
            worst = worst.max(abs_sum / v.max(f64::MIN_POSITIVE));
        }
        worst
    }

    pub fn truncate(&mut self, n: usize) {
        self.coeffs.truncate(n);
    }
}

/// Normalized Frobenius solutions at one anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusBasis {
    pub chart: Chart,
    /// Singular then smooth at light cones; just the regular solution at poles.
    pub solutions: Vec<FrobeniusSeries>,
    pub radius: f64,
    pub order: usize,
}

impl FrobeniusBasis {
    pub fn singular(&self) -> &FrobeniusSeries {
        &self.solutions[0]
    }

    pub fn smooth(&self) -> &FrobeniusSeries {
        &self.solutions[self.solutions.len() - 1]
    }

    pub fn roots(&self) -> Vec<Complex64> {
        self.solutions.iter().map(|s| s.exponent).collect()
    }

    /// θ-values of `count` collocation points in the annulus [r/2, r] on the
    /// side of the anchor with t of sign `side`, ordered towards the anchor.
    pub fn annulus(&self, side: f64, count: usize) -> Vec<f64> {
        (0..count)
            .map(|i| {
                let t = self.radius * (1.0 - 0.5 * i as f64 / (count - 1) as f64);
                self.chart.theta_at(side * t)
            })
            .collect()
    }
}

/// Coefficients a, b, c in the local variable of the (1−μ)-multiplied μ-form,
/// reduced to t²a' w'' + t b' w' + c' w = t^{2−v}·rhs.
pub struct LocalForm {
    pub a: Series,
    pub b: Series,
    pub c: Series,
    pub valuation: usize,
}

pub fn local_form(op: &ModeOperator, chart: &Chart, len: usize) -> LocalForm {
    let v = if chart.is_pole() || op.kind != OperatorKind::Global { 2 } else { 1 };
    let mu = Series::affine(chart.mu0, chart.sign, len + 3);
    let [a, b, c] = op.mu_coeffs(&mu);
    let b = b * Complex64::new(chart.sign, 0.0);
    let c = if v == 2 { c } else { c.shift_up(1) };
    let shrink = |s: Series, k: usize| {
        let mut out = s.shift_down(k);
        out.0.truncate(len);
        out
    };
    LocalForm { a: shrink(a, v), b: shrink(b, v - 1), c: shrink(c, 0), valuation: v }
}

impl LocalForm {
    fn q(&self, j: usize, s: Complex64) -> Complex64 {
        self.a.coeff(j) * s * (s - 1.0) + self.b.coeff(j) * s + self.c.coeff(j)
    }

    /// Indicial polynomial roots.
    pub fn indicial_roots(&self) -> [Complex64; 2] {
        let a0 = self.a.coeff(0);
        let b0 = self.b.coeff(0) - a0;
        let c0 = self.c.coeff(0);
        let disc = (b0 * b0 - a0 * c0 * 4.0).sqrt();
        let r1 = (-b0 + disc) / (a0 * 2.0);
        let r2 = (-b0 - disc) / (a0 * 2.0);
        [r1, r2]
    }

    /// Series coefficients of t^r Σ wₖ tᵏ. Without `rhs`, w₀ = 1 and r must be
    /// an indicial root; with `rhs` = Σ gₖ t^{r+k}, w₀ = g₀/Q₀(r).
    pub fn recurrence(&self, r: Complex64, rhs: Option<&Series>, n: usize) -> Result<Vec<Complex64>> {
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        let scale = self.a.coeff(0).norm().max(1.0) * (r.norm() + n as f64).powi(2);
        for k in 0..n {
            let mut acc = rhs.map(|g| g.coeff(k)).unwrap_or_default();
            if k == 0 && rhs.is_none() {
                w[0] = Complex64::new(1.0, 0.0);
                continue;
            }
            for j in 1..=k {
                acc -= self.q(j, r + (k - j) as f64) * w[k - j];
            }
            let q0 = self.q(0, r + k as f64);
            if q0.norm() <= 1e-14 * scale {
                return Err(Error::IntegerDegeneracy { distance: q0.norm() / scale, margin: 1e-14 });
            }
            w[k] = acc / q0;
        }
        Ok(w)
    }
}

/// Exponents used for the normalized solutions at a chart.
pub fn exponents(op: &ModeOperator, chart: &Chart) -> Vec<Complex64> {
    let is = Complex64::i() * op.sigma;
    if chart.is_pole() {
        return vec![Complex64::new(op.ell as f64 / 2.0, 0.0)];
    }
    match op.kind {
        OperatorKind::Global => vec![is, Complex64::new(0.0, 0.0)],
        OperatorKind::Cap | OperatorKind::Belt => {
            let h = op.half();
            vec![(is + h) / 2.0, (-is + h) / 2.0]
        }
    }
}

/// Builds the normalized basis, shrinking the requested radius until the
/// truncated series meets the tail and cancellation bounds.
pub fn frobenius_at(op: &ModeOperator, chart: Chart, radius: f64) -> Result<FrobeniusBasis> {
    let form = local_form(op, &chart, MAX_TERMS);
    let sols: Vec<FrobeniusSeries> = exponents(op, &chart)
        .into_iter()
        .map(|r| Ok(FrobeniusSeries { exponent: r, coeffs: form.recurrence(r, None, MAX_TERMS)? }))
        .collect::<Result<_>>()?;
    let mut r = radius;
    while r > 1e-4 {
        if let Some(n) = usable_order(&sols, r) {
            let solutions = sols
                .iter()
                .cloned()
                .map(|mut s| {
                    s.truncate(n);
                    s
                })
                .collect();
            return Ok(FrobeniusBasis { chart, solutions, radius: r, order: n });
        }
        r *= 0.8;
    }
    Err(Error::RadiusTooSmall { radius })
}

fn usable_order(sols: &[FrobeniusSeries], r: f64) -> Option<usize> {
    let mut n = 12;
    while n <= MAX_TERMS {
        if sols.iter().all(|s| s.tail_ok(r, n)) {
            return sols.iter().all(|s| s.cancellation(r, n) <= MAX_CANCELLATION).then_some(n);
        }
        n += 4;
    }
    None
}

/// Taylor particular solution Σ_{k} wₖ t^{m+k} for a right-hand side of the
/// (1−μ)-multiplied μ-form given as t^m Σ gₖ tᵏ after reduction to standard
/// form. The caller supplies `m` and the series.
pub fn particular_series(op: &ModeOperator, chart: &Chart, m: Complex64, g: &Series, n: usize) -> Result<FrobeniusSeries> {
    let form = local_form(op, chart, n);
    let coeffs = form.recurrence(m, Some(g), n)?;
    Ok(FrobeniusSeries { exponent: m, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModeProblem, RadialProfile};
    use std::f64::consts::FRAC_PI_4;

    fn op(kind: OperatorKind, n: usize, ell: usize, s: Complex64, f: RadialProfile) -> ModeOperator {
        ModeOperator::from_problem(&ModeProblem::new(n, ell, s, f).unwrap(), kind)
    }

    #[test]
    fn light_cone_roots() {
        let s = Complex64::new(0.7, 0.3);
        let o = op(OperatorKind::Global, 3, 0, s, RadialProfile::Exact);
        let form = local_form(&o, &Chart::light_cone(FRAC_PI_4), 10);
        let r = form.indicial_roots();
        let is = Complex64::i() * s;
        assert!(r.iter().any(|x| x.norm() < 1e-13));
        assert!(r.iter().any(|x| (x - is).norm() < 1e-13));
    }

    #[test]
    fn cap_and_belt_roots() {
        let s = Complex64::new(0.4, -0.6);
        for kind in [OperatorKind::Cap, OperatorKind::Belt] {
            let o = op(kind, 4, 2, s, RadialProfile::Bump { epsilon: 0.1 });
            let chart = if kind == OperatorKind::Cap { Chart::light_cone(FRAC_PI_4) } else { Chart::belt(FRAC_PI_4) };
            let r = local_form(&o, &chart, 10).indicial_roots();
            for e in exponents(&o, &chart) {
                assert!(r.iter().any(|x| (x - e).norm() < 1e-12), "{kind:?} {r:?} {e}");
            }
        }
    }

    #[test]
    fn pole_root_is_half_ell() {
        for ell in [0usize, 1, 2, 5] {
            let o = op(OperatorKind::Global, 3, ell, Complex64::new(0.5, 0.1), RadialProfile::Bump { epsilon: 0.1 });
            let r = local_form(&o, &Chart::pole(0.0), 10).indicial_roots();
            assert!(r.iter().any(|x| (x - ell as f64 / 2.0).norm() < 1e-12), "{r:?}");
        }
    }

    #[test]
    fn chart_inverse() {
        for chart in [Chart::light_cone(FRAC_PI_4), Chart::light_cone(3.0 * FRAC_PI_4), Chart::pole(0.0), Chart::pole(std::f64::consts::PI), Chart::belt(3.0 * FRAC_PI_4)] {
            for t in [0.1, 0.05] {
                for side in [1.0, -1.0] {
                    if chart.is_pole() && side < 0.0 {
                        continue;
                    }
                    let th = chart.theta_at(side * t);
                    assert!((chart.t(th) - side * t).abs() < 1e-14);
                    assert!((th - chart.theta0).abs() < 0.3);
                }
            }
        }
    }

    #[test]
    fn basis_solves_the_ode() {
        let o = op(OperatorKind::Global, 3, 2, Complex64::new(0.7, 0.3), RadialProfile::Bump { epsilon: 0.1 });
        let b = frobenius_at(&o, Chart::light_cone(FRAC_PI_4), 0.15).unwrap();
        for s in &b.solutions {
            for th in [0.70, 0.74, 0.83] {
                let h = 1e-4;
                let v = |t: f64| s.eval_theta(&b.chart, t);
                let d2 = (v(th + h)[1] - v(th - h)[1]) / (2.0 * h);
                let [w, d1] = v(th);
                let res = crate::model::apply(&o, th, [w, d1, d2]);
                assert!(res.norm() < 1e-6 * (w.norm() + d1.norm() + d2.norm()), "{res}");
            }
        }
    }
}
