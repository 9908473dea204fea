//! Adaptive Verner 9(8) integration of complex linear second-order ODEs.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// A w'' + B w' + C w = S(θ).
pub trait LinearOde: Sync {
    fn coeffs(&self, theta: f64) -> [Complex64; 3];
    fn source(&self, _theta: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    /// Absolute size below which the step control stops asking for
    /// relative accuracy.
    fn abs_floor(&self) -> f64 {
        0.0
    }
}

impl LinearOde for crate::model::ModeOperator {
    fn coeffs(&self, theta: f64) -> [Complex64; 3] {
        self.theta_coeffs(theta)
    }
}

/// An operator together with a right-hand side.
pub struct Forced<'a> {
    pub ode: &'a dyn LinearOde,
    pub source: &'a (dyn Fn(f64) -> Complex64 + Sync),
}

impl LinearOde for Forced<'_> {
    fn coeffs(&self, theta: f64) -> [Complex64; 3] {
        self.ode.coeffs(theta)
    }
    fn source(&self, theta: f64) -> Complex64 {
        (self.source)(theta)
    }
    // forced solutions start from zero state where the source switches on
    fn abs_floor(&self) -> f64 {
        1e-18
    }
}

/// Constant-coefficient surrogate A w'' + B w' + C w = 0, used in tests.
pub struct ConstantOde(pub [Complex64; 3]);

impl LinearOde for ConstantOde {
    fn coeffs(&self, _theta: f64) -> [Complex64; 3] {
        self.0
    }
}

pub type State = [Complex64; 2];

const C: [f64; 16] = [0.0, 0.03571, 0.09906028091267415, 0.1485904213690112, 0.6134, 0.2327359473605627, 0.5538640526394373, 0.6555, 0.491625, 0.06858, 0.253, 0.6620641795412046, 0.8309, 0.8998, 1.0, 1.0];
const A: [[f64; 16]; 16] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.03571, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-0.03833735636677017, 0.13739763727944432, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0371476053422528, 0.0, 0.11144281602675842, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.674764429871505, 0.0, -9.982382134885293, 7.921017705013789, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.05242104050577351, 0.0, 0.0, 0.17969111891759532, 0.0006237879371938568, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.15924922236476322, 0.0, 0.0, -0.4298429877241087, 0.06665266542726088, 0.757805152571522, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.07283333333333333, 0.0, 0.0, 0.0, 0.0, 0.33593445906651037, 0.2467322076001563, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0729755859375, 0.0, 0.0, 0.0, 0.0, 0.33480097296993333, 0.11841582390506665, -0.0345673828125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.049112136634520964, 0.0, 0.0, 0.0, 0.0, 0.03983857361308652, 0.10696752889393549, -0.021742591654586477, -0.10559564748695649, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-0.027079888186412805, 0.0, 0.0, 0.0, 0.0, 0.0333, -0.16455260700360572, 0.0342826630649739, 0.1585264064439221, 0.2185234256811225, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.055846577691088625, 0.0, 0.0, 0.0, 0.0, 0.09166533166672539, 0.2392399655523627, 0.01023834712248415, -0.0026793313228595426, 0.042356241814742845, 0.2253970470166604, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-0.4802510512725196, 0.0, 0.0, 0.0, 0.0, -6.3596101625559305, -0.2762313898040841, -6.500796633979847, 0.5734765877040957, 1.3471259948681389, 5.936840409706221, 6.590346245333925, 0.0, 0.0, 0.0, 0.0],
    [0.3307533067671401, 0.0, 0.0, 0.0, 0.0, 5.956207776829962, -0.48683164004815277, 4.462055288206771, 0.7410258231442072, -0.7118192034575913, -5.454619594516665, -4.14080372924471, 0.20383197231903866, 0.0, 0.0, 0.0],
    [-0.5847111122998945, 0.0, 0.0, 0.0, 0.0, -12.41268417116267, 1.360245445660928, -22.426105311118683, -0.8828857055865458, 1.7701551285382304, 12.158096519185339, 22.230375204077607, -0.6634483760201249, 0.45096237872581374, 0.0, 0.0],
    [1.9405755498106487, 0.0, 0.0, 0.0, 0.0, 21.977984081145564, 0.8230747326984729, 68.16441683626354, -3.117097463620267, -4.56884102182244, -18.74190987126265, -66.57711839637832, 1.0989155531654418, 0.0, 0.0, 0.0],
];
const B9: [f64; 16] = [0.015006690149797247, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0551809927463813, 0.2384947263782183, 0.12881517742829915, 0.22766231110462157, 1.2295325874375174, 0.04624976662810384, 0.13861963193662938, 0.030800101683194355, 0.0];
const B8: [f64; 16] = [0.018972105324811014, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 3.4081103145494938, 0.1260323883820921, 0.11883750634511497, 0.24910419978386875, -3.2699662199289783, 0.3023798100228883, 0.0, 0.0, 0.04652989552070924];

#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub rtol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self { rtol: 1e-14, h_min: 1e-13, max_steps: 200_000 }
    }
}

/// Accepted steps of one integration. Intermediate values are recovered by
/// integrating again from the nearest knot.
pub struct SolutionPath<'a> {
    ode: &'a dyn LinearOde,
    integrator: Integrator,
    pub knots: Vec<(f64, State)>,
    pub outputs: Vec<(f64, State)>,
    pub steps: usize,
    pub rejected: usize,
}

fn rhs(ode: &dyn LinearOde, t: f64, y: &State) -> State {
    let [a, b, c] = ode.coeffs(t);
    [y[1], (ode.source(t) - b * y[1] - c * y[0]) / a]
}

fn norm(y: &State) -> f64 {
    y[0].norm().max(y[1].norm())
}

impl Integrator {
    fn step(&self, ode: &dyn LinearOde, t: f64, y: &State, h: f64) -> (State, f64) {
        let mut k = [[Complex64::new(0.0, 0.0); 2]; 16];
        for i in 0..16 {
            let mut yi = *y;
            for j in 0..i {
                let aij = A[i][j];
                if aij != 0.0 {
                    yi[0] += k[j][0] * (h * aij);
                    yi[1] += k[j][1] * (h * aij);
                }
            }
            k[i] = rhs(ode, t + C[i] * h, &yi);
        }
        let mut y9 = *y;
        let mut d = [Complex64::new(0.0, 0.0); 2];
        for i in 0..16 {
            for m in 0..2 {
                y9[m] += k[i][m] * (h * B9[i]);
                d[m] += k[i][m] * (h * (B9[i] - B8[i]));
            }
        }
        let scale = norm(y).max(norm(&y9)).max(ode.abs_floor()).max(f64::MIN_POSITIVE);
        (y9, norm(&d) / (self.rtol * scale))
    }

    /// Integrates from (t0, y0) to t1, landing exactly on every point of
    /// `outputs` (which must be ordered from t0 towards t1).
    pub fn run<'a>(&self, ode: &'a dyn LinearOde, t0: f64, y0: State, t1: f64, outputs: &[f64]) -> Result<SolutionPath<'a>> {
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let mut path = SolutionPath {
            ode,
            integrator: *self,
            knots: vec![(t0, y0)],
            outputs: Vec::with_capacity(outputs.len()),
            steps: 0,
            rejected: 0,
        };
        let mut t = t0;
        let mut y = y0;
        let mut h = (t1 - t0).abs().clamp(1e-6, 0.02);
        let mut targets: Vec<(f64, bool)> = outputs.iter().map(|&o| (o, true)).collect();
        targets.push((t1, false));
        for (target, record) in targets {
            if (target - t) * dir < -1e-15 {
                return Err(Error::InvalidInput(format!("output {target} is not ahead of {t}")));
            }
            while (target - t) * dir > 1e-15 {
                if path.steps + path.rejected > self.max_steps {
                    return Err(Error::StiffnessFailure { theta: t, step: h });
                }
                let remaining = (target - t).abs();
                let last = h >= remaining;
                let hs = if last { remaining } else { h };
                let (y_new, err) = self.step(ode, t, &y, dir * hs);
                if !(err.is_finite() && y_new[0].is_finite() && y_new[1].is_finite()) {
                    h *= 0.25;
                    path.rejected += 1;
                    if h < self.h_min {
                        return Err(Error::StiffnessFailure { theta: t, step: h });
                    }
                    continue;
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-1.0 / 9.0)).clamp(0.2, 5.0) };
                if err <= 1.0 {
                    t = if last { target } else { t + dir * hs };
                    y = y_new;
                    path.steps += 1;
                    path.knots.push((t, y));
                    if !last {
                        h = hs * factor;
                    } else {
                        h = h.max(hs * factor);
                    }
                } else {
                    h = hs * factor.min(0.9);
                    path.rejected += 1;
                    if h < self.h_min {
                        return Err(Error::StiffnessFailure { theta: t, step: h });
                    }
                }
            }
            if record {
                path.outputs.push((target, y));
            }
        }
        Ok(path)
    }
}

impl SolutionPath<'_> {
    pub fn end(&self) -> (f64, State) {
        *self.knots.last().expect("path has at least one knot")
    }

    pub fn start(&self) -> (f64, State) {
        self.knots[0]
    }

    /// Whether θ lies inside the integrated interval.
    pub fn covers(&self, theta: f64) -> bool {
        let a = self.knots[0].0;
        let b = self.end().0;
        (theta - a) * (theta - b) <= 0.0
    }

    /// (w, w') at θ inside the integrated interval.
    pub fn eval(&self, theta: f64) -> Result<State> {
        if !self.covers(theta) {
            return Err(Error::InvalidInput(format!("theta = {theta} outside the integrated interval")));
        }
        let idx = self
            .knots
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 .0 - theta).abs().partial_cmp(&(b.1 .0 - theta).abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (t0, y0) = self.knots[idx];
        if t0 == theta {
            return Ok(y0);
        }
        let sub = self.integrator.run(self.ode, t0, y0, theta, &[])?;
        Ok(sub.end().1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn harmonic_oscillator() {
        let ode = ConstantOde([re(1.0), re(0.0), re(1.0)]);
        let p = Integrator::default().run(&ode, 0.0, [re(1.0), re(0.0)], std::f64::consts::FRAC_PI_3, &[]).unwrap();
        let (_, y) = p.end();
        assert!((y[0] - re(0.5)).norm() < 1e-13);
        assert!((y[1] + re(3f64.sqrt() / 2.0)).norm() < 1e-13);
    }

    #[test]
    fn round_trip() {
        let ode = ConstantOde([re(1.0), Complex64::new(0.3, 0.1), Complex64::new(2.0, -0.5)]);
        let y0 = [Complex64::new(0.7, 0.2), Complex64::new(-0.1, 1.0)];
        let it = Integrator::default();
        let f = it.run(&ode, 0.1, y0, 1.4, &[]).unwrap();
        let b = it.run(&ode, 1.4, f.end().1, 0.1, &[]).unwrap();
        let y = b.end().1;
        assert!((y[0] - y0[0]).norm() < 1e-11 && (y[1] - y0[1]).norm() < 1e-11);
    }

    #[test]
    fn outputs_are_hit_exactly() {
        let ode = ConstantOde([re(1.0), re(0.0), re(4.0)]);
        let it = Integrator::default();
        let p = it.run(&ode, 0.0, [re(1.0), re(0.0)], 1.0, &[0.25, 0.5]).unwrap();
        assert_eq!(p.outputs[0].0, 0.25);
        assert!((p.outputs[1].1[0] - re(1f64.cos())).norm() < 1e-13);
        let mid = p.eval(0.77).unwrap();
        assert!((mid[0] - re((1.54f64).cos())).norm() < 1e-13);
    }

    #[test]
    fn ninth_order_convergence() {
        // fixed-step errors on w'' = -w drop by ~2^9 per halving
        let ode = ConstantOde([re(1.0), re(0.0), re(1.0)]);
        let it = Integrator::default();
        let mut errs = Vec::new();
        for n in [2usize, 4] {
            let h = 2.0 / n as f64;
            let mut y = [re(1.0), re(0.0)];
            let mut t = 0.0;
            for _ in 0..n {
                y = it.step(&ode, t, &y, h).0;
                t += h;
            }
            errs.push((y[0] - re(2f64.cos())).norm());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 8.5, "order {order}");
    }
}
