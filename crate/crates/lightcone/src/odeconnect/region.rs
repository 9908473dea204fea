//! Solutions known through Frobenius data at anchors and integration between.

use super::connect::basis_state;
use super::frobenius::{FrobeniusBasis, FrobeniusSeries};
use super::integrate::{Forced, Integrator, LinearOde, State};
use crate::error::Result;
use crate::model::ModeOperator;
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

/// Coordinates of a solution in one Frobenius basis, valid on one side.
#[derive(Debug, Clone)]
pub struct Anchor {
    pub basis: FrobeniusBasis,
    pub coeffs: Vec<Complex64>,
    pub particular: Option<FrobeniusSeries>,
    pub side: f64,
}

impl Anchor {
    pub fn new(basis: FrobeniusBasis, coeffs: Vec<Complex64>, side: f64) -> Self {
        Self { basis, coeffs, particular: None, side }
    }

    pub fn with_particular(mut self, p: FrobeniusSeries) -> Self {
        self.particular = Some(p);
        self
    }

    pub fn covers(&self, theta: f64) -> bool {
        let chart = &self.basis.chart;
        let t = self.side * chart.t(theta);
        (theta - chart.theta0).abs() < FRAC_PI_4 && t > 0.0 && t <= self.basis.radius
    }

    pub fn state(&self, theta: f64) -> State {
        basis_state(&self.basis, &self.coeffs, self.particular.as_ref(), theta)
    }

    /// Launch state at the edge of the radius.
    pub fn launch(&self) -> (f64, State) {
        let theta = self.basis.chart.theta_at(self.side * self.basis.radius);
        (theta, self.state(theta))
    }
}

pub type SourceFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A solution of op·w = source on one interval between singular points.
#[derive(Clone)]
pub struct RegionSolution {
    pub op: ModeOperator,
    pub anchors: Vec<Anchor>,
    pub source: Option<SourceFn>,
    pub start: (f64, State),
}

impl std::fmt::Debug for RegionSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegionSolution").field("op", &self.op).field("anchors", &self.anchors).field("start", &self.start).finish()
    }
}

impl RegionSolution {
    /// Homogeneous solution launched from the first anchor.
    pub fn from_anchors(op: ModeOperator, anchors: Vec<Anchor>) -> Self {
        let start = anchors[0].launch();
        Self { op, anchors, source: None, start }
    }

    pub fn with_source(mut self, source: SourceFn) -> Self {
        self.source = Some(source);
        self
    }

    fn run(&self, thetas: &[f64]) -> Result<Vec<State>> {
        if thetas.is_empty() {
            return Ok(Vec::new());
        }
        let t0 = self.start.0;
        let mut order: Vec<usize> = (0..thetas.len()).collect();
        order.sort_by(|&i, &j| (thetas[i] - t0).abs().total_cmp(&(thetas[j] - t0).abs()));
        let sorted: Vec<f64> = order.iter().map(|&i| thetas[i]).collect();
        let end = *sorted.last().unwrap();
        let src;
        let forced;
        let ode: &dyn LinearOde = match &self.source {
            Some(s) => {
                src = s.clone();
                forced = Forced { ode: &self.op, source: &*src };
                &forced
            }
            None => &self.op,
        };
        let path = Integrator::default().run(ode, t0, self.start.1, end, &sorted)?;
        let mut out = vec![[Complex64::new(0.0, 0.0); 2]; thetas.len()];
        for (k, &i) in order.iter().enumerate() {
            out[i] = path.outputs[k].1;
        }
        Ok(out)
    }

    /// (w, w') at each θ; anchors are used where they apply.
    pub fn eval_many(&self, thetas: &[f64]) -> Result<Vec<State>> {
        let mut out = vec![[Complex64::new(0.0, 0.0); 2]; thetas.len()];
        let mut rest = Vec::new();
        let mut idx = Vec::new();
        for (i, &th) in thetas.iter().enumerate() {
            match self.anchors.iter().find(|a| a.covers(th)) {
                Some(a) => out[i] = a.state(th),
                None => {
                    rest.push(th);
                    idx.push(i);
                }
            }
        }
        for (i, s) in idx.into_iter().zip(self.run(&rest)?) {
            out[i] = s;
        }
        Ok(out)
    }

    pub fn eval(&self, theta: f64) -> Result<Complex64> {
        Ok(self.eval_many(&[theta])?[0][0])
    }

    /// (w, w') at each θ by integration only, ignoring the anchors.
    pub fn integrate_to(&self, thetas: &[f64]) -> Result<Vec<State>> {
        self.run(thetas)
    }
}
