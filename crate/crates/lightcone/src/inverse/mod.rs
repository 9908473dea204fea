//! Mode-level solution operators: the cap resolvent, the backward belt
//! solution, and the global inverse by a direct linear solve and by piecewise
//! assembly from the constituent operators.

pub mod poles;
pub mod source;

pub use poles::{find_poles, holomorphy_defect, union_distance, DeterminantKind, PoleOptions, PoleReport, Window, Zero};
pub use source::{ModeSource, SourceRegion};

use crate::error::{Error, Result};
use crate::linalg::solve;
use crate::model::{ModeOperator, ModeProblem, OperatorKind, Region, DEFAULT_MARGIN};
use crate::odeconnect::{
    abel_weight, basis_state, connect_samples, frobenius_at, transport, wronskian, Anchor, Chart, ConnectionData, Forced, FrobeniusBasis,
    FrobeniusSeries, RegionSolution, SourceFn, State, COLLOCATION_POINTS, HANDOFF_RADIUS,
};
use crate::quad::gauss_legendre;
use crate::scattering::{conjugation_factor, LightConeData};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Arc;

const PARTICULAR_TERMS: usize = 120;
const PANEL_WIDTH: f64 = 0.04;
const PANEL_NODES: usize = 16;
/// Relative change between two panel widths accepted for the Green integrals.
pub const QUAD_TOL: f64 = 1e-12;
const MIN_RADIUS: f64 = 1e-2;

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn c1() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Past solutions are smooth at θ = π/4; future ones at θ = 3π/4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Past,
    Future,
}

/// Anything that yields (w, w') at given angles.
pub trait Evaluate {
    fn eval_many(&self, thetas: &[f64]) -> Result<Vec<State>>;

    fn eval(&self, theta: f64) -> Result<Complex64> {
        Ok(self.eval_many(&[theta])?[0][0])
    }
}

impl Evaluate for RegionSolution {
    fn eval_many(&self, thetas: &[f64]) -> Result<Vec<State>> {
        RegionSolution::eval_many(self, thetas)
    }
}

/// Basis and source expansion at one singular point.
#[derive(Debug, Clone)]
struct Local {
    basis: FrobeniusBasis,
    particular: Option<FrobeniusSeries>,
}

impl Local {
    fn new(op: &ModeOperator, chart: Chart, src: &ModeSource) -> Result<Self> {
        let mut r = HANDOFF_RADIUS.min(0.9 * src.clearance(&chart));
        while r >= MIN_RADIUS {
            let basis = frobenius_at(op, chart, r)?;
            match src.particular(op, op.ell, &chart, basis.radius, PARTICULAR_TERMS)? {
                None => return Ok(Self { basis, particular: None }),
                Some(p) if p.tail_ok(basis.radius, p.coeffs.len()) => return Ok(Self { basis, particular: Some(p) }),
                Some(_) => r = basis.radius * 0.8,
            }
        }
        Err(Error::RadiusTooSmall { radius: r })
    }

    fn launch_theta(&self, side: f64) -> f64 {
        self.basis.chart.theta_at(side * self.basis.radius)
    }

    fn anchor(&self, coeffs: Vec<Complex64>, side: f64, forced: bool) -> Anchor {
        let a = Anchor::new(self.basis.clone(), coeffs, side);
        match (&self.particular, forced) {
            (Some(p), true) => a.with_particular(p.clone()),
            _ => a,
        }
    }

    fn annulus(&self, side: f64) -> Vec<f64> {
        self.basis.annulus(side, COLLOCATION_POINTS)
    }
}

fn source_fn(src: &ModeSource, ell: usize) -> SourceFn {
    let s = src.clone();
    Arc::new(move |th| s.eval(ell, th))
}

/// The four singular points of one mode problem with a given source.
struct Frame {
    op: ModeOperator,
    source: SourceFn,
    support: (f64, f64),
    pole_plus: Local,
    cone_plus: Local,
    cone_minus: Local,
    pole_minus: Local,
}

impl Frame {
    fn new(op: ModeOperator, src: &ModeSource) -> Result<Self> {
        src.validate()?;
        Ok(Self {
            source: source_fn(src, op.ell),
            support: src.support(),
            pole_plus: Local::new(&op, Chart::pole(0.0), src)?,
            cone_plus: Local::new(&op, Chart::light_cone(FRAC_PI_4), src)?,
            cone_minus: Local::new(&op, Chart::light_cone(3.0 * FRAC_PI_4), src)?,
            pole_minus: Local::new(&op, Chart::pole(PI), src)?,
            op,
        })
    }

    fn global(mp: &ModeProblem, src: &ModeSource) -> Result<Self> {
        mp.sp().check_margin(DEFAULT_MARGIN)?;
        Self::new(ModeOperator::from_problem(mp, OperatorKind::Global), src)
    }

    fn cap(&self, region: Region) -> (&Local, &Local) {
        match region {
            Region::XPlus => (&self.pole_plus, &self.cone_plus),
            _ => (&self.pole_minus, &self.cone_minus),
        }
    }

    /// Solution launched from `local` with the given coordinates, forced or not.
    fn solution(&self, local: &Local, coeffs: Vec<Complex64>, side: f64, forced: bool) -> RegionSolution {
        let sol = RegionSolution::from_anchors(self.op.clone(), vec![local.anchor(coeffs, side, forced)]);
        if forced {
            sol.with_source(self.source.clone())
        } else {
            sol
        }
    }

    /// Coordinates of `sol` at `target` on side `side`; the target anchor is
    /// appended to `sol`.
    fn reach(&self, sol: &mut RegionSolution, target: &Local, side: f64) -> Result<ConnectionData> {
        let forced = sol.source.is_some();
        let data = match &sol.source {
            Some(s) => {
                let f = Forced { ode: &self.op, source: &**s };
                transport(&f, sol.start, &target.basis, side, target.particular.as_ref())?.0
            }
            None => transport(&self.op, sol.start, &target.basis, side, None)?.0,
        };
        sol.anchors.push(target.anchor(vec![data.coeff_singular, data.coeff_smooth], side, forced));
        Ok(data)
    }
}

/// Signed ∫_{lower}^{θ} f for every target θ. Panels are aligned with the
/// support and with the targets themselves.
fn cumulative(lower: f64, targets: &[f64], support: (f64, f64), h: f64, f: &dyn Fn(&[f64]) -> Result<Vec<Complex64>>) -> Result<Vec<Complex64>> {
    let (gx, gw) = gauss_legendre(PANEL_NODES);
    let mut out = vec![c0(); targets.len()];
    for dir in [1.0, -1.0] {
        let ahead = |x: f64| (x - lower) * dir;
        let mut idx: Vec<usize> = (0..targets.len()).filter(|&i| ahead(targets[i]) > 0.0).collect();
        if idx.is_empty() {
            continue;
        }
        idx.sort_by(|&i, &j| ahead(targets[i]).total_cmp(&ahead(targets[j])));
        let far = targets[*idx.last().expect("non-empty")];
        let mut bps = vec![lower];
        for c in [support.0, support.1] {
            if ahead(c) > 0.0 && ahead(far) - ahead(c) > 0.0 {
                bps.push(c);
            }
        }
        bps.extend(idx.iter().map(|&i| targets[i]));
        bps.sort_by(|a, b| ahead(*a).total_cmp(&ahead(*b)));
        bps.dedup();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut owner = Vec::new();
        for k in 0..bps.len() - 1 {
            let (a, b) = (bps[k], bps[k + 1]);
            let mid = 0.5 * (a + b);
            if mid <= support.0 || mid >= support.1 {
                continue;
            }
            let m = ((b - a).abs() / h).ceil().max(1.0) as usize;
            let step = (b - a) / m as f64;
            for p in 0..m {
                let lo = a + p as f64 * step;
                for q in 0..PANEL_NODES {
                    nodes.push(lo + 0.5 * step * (gx[q] + 1.0));
                    weights.push(0.5 * step * gw[q]);
                    owner.push(k);
                }
            }
        }
        let vals = if nodes.is_empty() { Vec::new() } else { f(&nodes)? };
        let mut per = vec![c0(); bps.len() - 1];
        for ((v, w), k) in vals.iter().zip(&weights).zip(&owner) {
            per[*k] += v * w;
        }
        let mut cum = vec![c0(); bps.len()];
        for k in 0..per.len() {
            cum[k + 1] = cum[k] + per[k];
        }
        for &i in &idx {
            let k = bps.iter().position(|&b| b == targets[i]).expect("targets are breakpoints");
            out[i] = cum[k];
        }
    }
    Ok(out)
}

/// Variation of parameters on one interval:
/// u = α·y_a + β·y_b + y_b·∫_{la} y_a S/(A W) − y_a·∫_{lb} y_b S/(A W).
#[derive(Clone)]
pub struct Variation {
    op: ModeOperator,
    source: SourceFn,
    support: (f64, f64),
    ya: RegionSolution,
    yb: RegionSolution,
    la: f64,
    lb: f64,
    /// W·E, constant by the Abel identity
    abel: Complex64,
    pub alpha: Complex64,
    pub beta: Complex64,
    /// Frobenius representations used inside their disks
    near: Vec<Anchor>,
}

impl std::fmt::Debug for Variation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Variation").field("la", &self.la).field("lb", &self.lb).field("alpha", &self.alpha).field("beta", &self.beta).finish()
    }
}

impl Variation {
    fn new(frame: &Frame, ya: RegionSolution, yb: RegionSolution, la: f64, lb: f64, at: f64) -> Result<Self> {
        let sa = ya.eval_many(&[at])?[0];
        let sb = yb.eval_many(&[at])?[0];
        let abel = wronskian(&sa, &sb) * abel_weight(&frame.op, at);
        Ok(Self {
            op: frame.op.clone(),
            source: frame.source.clone(),
            support: frame.support,
            ya,
            yb,
            la,
            lb,
            abel,
            alpha: c0(),
            beta: c0(),
            near: Vec::new(),
        })
    }

    fn integrals(&self, thetas: &[f64], h: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let weight = |sol: &RegionSolution, nodes: &[f64]| -> Result<Vec<Complex64>> {
            let states = sol.eval_many(nodes)?;
            Ok(nodes
                .iter()
                .zip(states)
                .map(|(&x, s)| {
                    let a = self.op.theta_coeffs(x)[0];
                    s[0] * (self.source)(x) * abel_weight(&self.op, x) / (a * self.abel)
                })
                .collect())
        };
        let ia = cumulative(self.la, thetas, self.support, h, &|n| weight(&self.ya, n))?;
        let ib = cumulative(self.lb, thetas, self.support, h, &|n| weight(&self.yb, n))?;
        Ok((ia, ib))
    }

    /// Integrals at two panel widths, halving until they agree.
    fn converged_integrals(&self, thetas: &[f64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let mut h = PANEL_WIDTH;
        let mut prev = self.integrals(thetas, h)?;
        for _ in 0..4 {
            h *= 0.5;
            let next = self.integrals(thetas, h)?;
            let scale = next.0.iter().chain(&next.1).map(|z| z.norm()).fold(0.0, f64::max);
            let diff = next.0.iter().zip(&prev.0).chain(next.1.iter().zip(&prev.1)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if diff <= QUAD_TOL * scale.max(f64::MIN_POSITIVE) {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::NoConvergence("Green integrals did not settle under panel refinement".into()))
    }

    /// Evaluation by the integral formula only, ignoring the disks.
    fn formula(&self, thetas: &[f64]) -> Result<Vec<State>> {
        if thetas.is_empty() {
            return Ok(Vec::new());
        }
        let ya = self.ya.eval_many(thetas)?;
        let yb = self.yb.eval_many(thetas)?;
        let (ia, ib) = self.converged_integrals(thetas)?;
        Ok((0..thetas.len())
            .map(|i| {
                let mut s = [c0(); 2];
                for m in 0..2 {
                    s[m] = self.alpha * ya[i][m] + self.beta * yb[i][m] + yb[i][m] * ia[i] - ya[i][m] * ib[i];
                }
                s
            })
            .collect())
    }
}

impl Evaluate for Variation {
    fn eval_many(&self, thetas: &[f64]) -> Result<Vec<State>> {
        let mut out = vec![[c0(); 2]; thetas.len()];
        let mut rest = Vec::new();
        let mut idx = Vec::new();
        for (i, &th) in thetas.iter().enumerate() {
            match self.near.iter().find(|a| a.covers(th)) {
                Some(a) => out[i] = a.state(th),
                None => {
                    rest.push(th);
                    idx.push(i);
                }
            }
        }
        for (i, s) in idx.into_iter().zip(self.formula(&rest)?) {
            out[i] = s;
        }
        Ok(out)
    }
}

/// A cap solve: the piece and its coordinates at the light cone.
struct CapSolve {
    piece: Variation,
    at_cone: ConnectionData,
    regular: ConnectionData,
}

/// Green construction on a cap. `kill` selects the light-cone coordinate
/// that must vanish: 0 for the singular one (X₊ at σ), 1 for the smooth one
/// (X₋, the resolvent at −σ in the global picture).
fn green_cap(frame: &Frame, region: Region, kill: usize) -> Result<CapSolve> {
    let (pole, cone) = frame.cap(region);
    let mut ya = frame.solution(pole, vec![c1()], 1.0, false);
    let regular = frame.reach(&mut ya, cone, 1.0)?;
    let mut e = vec![c0(), c0()];
    e[1 - kill] = c1();
    let yb = frame.solution(cone, e, 1.0, false);
    let lb = cone.launch_theta(1.0);
    let mut piece = Variation::new(frame, ya, yb, pole.basis.chart.theta0, lb, lb)?;
    let ring = cone.annulus(1.0);
    let samples: Vec<(f64, State)> = ring.iter().cloned().zip(piece.formula(&ring)?).collect();
    let v = connect_samples(&cone.basis, &samples, cone.particular.as_ref())?;
    let vk = [v.coeff_singular, v.coeff_smooth][kill];
    let dk = [regular.coeff_singular, regular.coeff_smooth][kill];
    let scale = regular.coeff_singular.norm().max(regular.coeff_smooth.norm());
    if dk.norm() <= 1e-13 * scale {
        return Err(Error::ResolventPole { value: dk.norm() / scale });
    }
    let c = -vk / dk;
    piece.alpha = c;
    let mut coords = [v.coeff_singular + c * regular.coeff_singular, v.coeff_smooth + c * regular.coeff_smooth];
    coords[kill] = c0();
    piece.near.push(cone.anchor(coords.to_vec(), 1.0, true));
    let at_cone = ConnectionData { coeff_singular: coords[0], coeff_smooth: coords[1], cond: v.cond, residual: v.residual };
    Ok(CapSolve { piece, at_cone, regular })
}

/// Belt solve from θ = π/4: smooth coordinate `smooth` plus the source's
/// Taylor part at π/4, continued by a Volterra integral. Returns the piece
/// and its coordinates at 3π/4.
fn volterra_belt(frame: &Frame, smooth: Complex64) -> Result<(Variation, ConnectionData)> {
    let (start, end) = (&frame.cone_plus, &frame.cone_minus);
    let mut ya = frame.solution(start, vec![c1(), c0()], -1.0, false);
    let mut yb = frame.solution(start, vec![c0(), c1()], -1.0, false);
    frame.reach(&mut ya, end, -1.0)?;
    frame.reach(&mut yb, end, -1.0)?;
    let lo = start.launch_theta(-1.0);
    let mut piece = Variation::new(frame, ya.clone(), yb.clone(), lo, lo, lo)?;
    // match the Taylor part at the launch point
    let p = basis_state(&start.basis, &[c0(), c0()], start.particular.as_ref(), lo);
    let sa = ya.eval_many(&[lo])?[0];
    let sb = yb.eval_many(&[lo])?[0];
    let w = wronskian(&sa, &sb);
    piece.alpha = (p[0] * sb[1] - p[1] * sb[0]) / w;
    piece.beta = (sa[0] * p[1] - sa[1] * p[0]) / w + smooth;
    piece.near.push(start.anchor(vec![c0(), smooth], -1.0, true));
    let ring = end.annulus(-1.0);
    let samples: Vec<(f64, State)> = ring.iter().cloned().zip(piece.formula(&ring)?).collect();
    let out = connect_samples(&end.basis, &samples, end.particular.as_ref())?;
    piece.near.push(end.anchor(vec![out.coeff_singular, out.coeff_smooth], -1.0, true));
    Ok((piece, out))
}

/// The cap resolvent in the global (conjugated) picture on X₊: the solution
/// regular at θ = 0 and smooth at θ = π/4.
pub fn resolvent_hyperbolic(mp: &ModeProblem, src: &ModeSource) -> Result<Variation> {
    let frame = Frame::global(mp, src)?;
    Ok(green_cap(&frame, Region::XPlus, 0)?.piece)
}

pub fn resolvent_hyperbolic_mode(mp: &ModeProblem, src: &ModeSource, theta: f64) -> Result<Complex64> {
    if !Region::XPlus.contains(theta) {
        return Err(Error::InvalidInput(format!("theta = {theta} is outside X+")));
    }
    resolvent_hyperbolic(mp, src)?.eval(theta)
}

/// The cap resolvent in the constituent picture, for a bump source S in X₊:
/// solves P·u = x^{k+2}·S with the unconjugated cap operator.
pub fn resolvent_cap_constituent(mp: &ModeProblem, src: &ModeSource) -> Result<Variation> {
    if src.region()? != SourceRegion::Within(Region::XPlus) {
        return Err(Error::InvalidInput("constituent resolvent needs a bump inside X+".into()));
    }
    mp.sp().check_margin(DEFAULT_MARGIN)?;
    let op = ModeOperator::from_problem(mp, OperatorKind::Cap);
    let mut frame = Frame::new(op, src)?;
    let (s, n, sigma) = (src.clone(), mp.n, mp.sigma);
    let ell = mp.ell;
    frame.source = Arc::new(move |th| {
        let x2 = (2.0 * th).cos().abs();
        s.eval(ell, th) * conjugation_factor(n, sigma, th) * x2
    });
    Ok(green_cap(&frame, Region::XPlus, 0)?.piece)
}

/// Backward solution on the belt for a source supported inside it: zero
/// data at θ = π/4, so the solution vanishes below the support.
pub fn backward_solution_desitter(mp: &ModeProblem, src: &ModeSource) -> Result<Variation> {
    if src.region()? != SourceRegion::Within(Region::XZero) {
        return Err(Error::InvalidInput("backward belt solution needs a bump inside the belt".into()));
    }
    let frame = Frame::global(mp, src)?;
    Ok(volterra_belt(&frame, c0())?.0)
}

pub fn backward_solution_desitter_mode(mp: &ModeProblem, src: &ModeSource, theta: f64) -> Result<Complex64> {
    if !Region::XZero.contains(theta) {
        return Err(Error::InvalidInput(format!("theta = {theta} is outside the belt")));
    }
    backward_solution_desitter(mp, src)?.eval(theta)
}

/// One solution piece per region.
#[derive(Clone, Debug)]
pub enum Piece {
    Variation(Box<Variation>),
    Integrated(Box<RegionSolution>),
}

impl Evaluate for Piece {
    fn eval_many(&self, thetas: &[f64]) -> Result<Vec<State>> {
        match self {
            Piece::Variation(v) => v.eval_many(thetas),
            Piece::Integrated(s) => Evaluate::eval_many(&**s, thetas),
        }
    }
}

/// A solution of the global mode equation on (0, π).
#[derive(Clone, Debug)]
pub struct GlobalInverse {
    pub orientation: Orientation,
    /// X₊, belt, X₋ in the past orientation
    pub pieces: [Piece; 3],
    /// light-cone data at θ = π/4 and θ = 3π/4 (past orientation)
    pub y_plus: LightConeData,
    pub y_minus: LightConeData,
    /// determinant and smallest relative pivot of the linear system, if any
    pub det: Option<Complex64>,
    pub min_pivot: Option<f64>,
    /// singular coefficient at θ = π/4 refitted from the integrated X₊
    /// piece, relative to the smooth one
    pub certificate: Option<f64>,
}

impl GlobalInverse {
    fn piece(&self, theta: f64) -> Result<usize> {
        [Region::XPlus, Region::XZero, Region::XMinus]
            .iter()
            .position(|r| r.contains(theta))
            .ok_or_else(|| Error::InvalidInput(format!("theta = {theta} is not inside a region")))
    }
}

impl Evaluate for GlobalInverse {
    fn eval_many(&self, thetas: &[f64]) -> Result<Vec<State>> {
        let flip = self.orientation == Orientation::Future;
        let local: Vec<f64> = thetas.iter().map(|&t| if flip { PI - t } else { t }).collect();
        let mut out = vec![[c0(); 2]; thetas.len()];
        for k in 0..3 {
            let idx: Vec<usize> = (0..local.len()).filter(|&i| self.piece(local[i]).ok() == Some(k)).collect();
            let pts: Vec<f64> = idx.iter().map(|&i| local[i]).collect();
            for (i, s) in idx.iter().zip(self.pieces[k].eval_many(&pts)?) {
                out[*i] = if flip { [s[0], -s[1]] } else { s };
            }
        }
        for &t in &local {
            self.piece(t)?;
        }
        Ok(out)
    }
}

/// Homogeneous part of the 4×4 system in (c, κ, ã₊, ã₋):
/// singular coordinate at π/4 vanishes; smooth and singular coordinates at
/// 3π/4 match between the belt and X₋ through M(σ).
fn system_matrix(sigma: Complex64, d1: &ConnectionData, g: &ConnectionData, d3: &ConnectionData) -> Vec<Vec<Complex64>> {
    let e_minus = (-std::f64::consts::PI * sigma).exp();
    let e_plus = (std::f64::consts::PI * sigma).exp();
    vec![
        vec![d1.coeff_singular, c0(), c0(), c0()],
        vec![d1.coeff_smooth * g.coeff_smooth, -d3.coeff_smooth, c0(), c0()],
        vec![d1.coeff_smooth * g.coeff_singular, c0(), -e_minus, -e_plus],
        vec![c0(), d3.coeff_singular, -c1(), -c1()],
    ]
}

/// Smallest relative pivot treated as singular.
pub const PIVOT_TOL: f64 = 1e-13;

fn past_direct(mp: &ModeProblem, src: &ModeSource) -> Result<GlobalInverse> {
    let frame = Frame::global(mp, src)?;
    let sigma = mp.sigma;
    // X₊: regular solution and a forced solution vanishing to high order at θ = 0
    let mut y1 = frame.solution(&frame.pole_plus, vec![c1()], 1.0, false);
    let d1 = frame.reach(&mut y1, &frame.cone_plus, 1.0)?;
    let mut v1 = frame.solution(&frame.pole_plus, vec![c0()], 1.0, true);
    let f1 = frame.reach(&mut v1, &frame.cone_plus, 1.0)?;
    // belt: smooth solution and the forced Taylor continuation
    let mut g = frame.solution(&frame.cone_plus, vec![c0(), c1()], -1.0, false);
    let dg = frame.reach(&mut g, &frame.cone_minus, -1.0)?;
    let mut fb = frame.solution(&frame.cone_plus, vec![c0(), c0()], -1.0, true);
    let df = frame.reach(&mut fb, &frame.cone_minus, -1.0)?;
    // X₋
    let mut y3 = frame.solution(&frame.pole_minus, vec![c1()], 1.0, false);
    let d3 = frame.reach(&mut y3, &frame.cone_minus, 1.0)?;
    let mut v3 = frame.solution(&frame.pole_minus, vec![c0()], 1.0, true);
    let f3 = frame.reach(&mut v3, &frame.cone_minus, 1.0)?;

    let a = system_matrix(sigma, &d1, &dg, &d3);
    let m1 = f1.coeff_smooth;
    let rhs = vec![
        -f1.coeff_singular,
        f3.coeff_smooth - m1 * dg.coeff_smooth - df.coeff_smooth,
        -m1 * dg.coeff_singular - df.coeff_singular,
        -f3.coeff_singular,
    ];
    let (x, det, min_pivot) = solve(a, rhs);
    if !(min_pivot > PIVOT_TOL) {
        return Err(Error::GlobalPole { pivot: min_pivot });
    }
    let (c, kappa, a_plus, a_minus) = (x[0], x[1], x[2], x[3]);
    let beta = c * d1.coeff_smooth + m1;

    let combine = |hom: &RegionSolution, forced: &RegionSolution, k: Complex64, kh: Complex64| -> RegionSolution {
        let mut out = forced.clone();
        out.start.1 = [forced.start.1[0] + k * hom.start.1[0], forced.start.1[1] + k * hom.start.1[1]];
        for (a, b) in out.anchors.iter_mut().zip(&hom.anchors) {
            for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
                *x += kh * y;
            }
        }
        out
    };
    let plus = combine(&y1, &v1, c, c);
    let belt = combine(&g, &fb, beta, beta);
    let minus = combine(&y3, &v3, kappa, kappa);
    let ring = frame.cone_plus.annulus(1.0);
    let samples: Vec<(f64, State)> = ring.iter().cloned().zip(plus.integrate_to(&ring)?).collect();
    let refit = connect_samples(&frame.cone_plus.basis, &samples, frame.cone_plus.particular.as_ref())?;
    let certificate = refit.coeff_singular.norm() / refit.coeff_smooth.norm().max(f64::MIN_POSITIVE);
    Ok(GlobalInverse {
        orientation: Orientation::Past,
        pieces: [Piece::Integrated(Box::new(plus)), Piece::Integrated(Box::new(belt)), Piece::Integrated(Box::new(minus))],
        y_plus: LightConeData { a_plus: c0(), a_minus: c0(), smooth: beta },
        y_minus: LightConeData { a_plus, a_minus, smooth: kappa * d3.coeff_smooth + f3.coeff_smooth },
        det: Some(det),
        min_pivot: Some(min_pivot),
        certificate: Some(certificate),
    })
}

fn past_assembled(mp: &ModeProblem, src: &ModeSource) -> Result<GlobalInverse> {
    let frame = Frame::global(mp, src)?;
    let plus = green_cap(&frame, Region::XPlus, 0)?;
    let smooth_plus = plus.at_cone.coeff_smooth;
    let (belt, out) = volterra_belt(&frame, smooth_plus)?;
    let mut minus = green_cap(&frame, Region::XMinus, 1)?;
    let d3 = minus.regular;
    if d3.coeff_smooth.norm() <= PIVOT_TOL * d3.coeff_singular.norm() {
        return Err(Error::GlobalPole { pivot: d3.coeff_smooth.norm() / d3.coeff_singular.norm() });
    }
    // X₋ Poisson part at −σ carries the smooth datum from the belt
    let kappa = out.coeff_smooth / d3.coeff_smooth;
    minus.piece.alpha += kappa;
    let cap_singular = minus.at_cone.coeff_singular + kappa * d3.coeff_singular;
    if let Some(a) = minus.piece.near.last_mut() {
        a.coeffs = vec![cap_singular, out.coeff_smooth];
    }
    let split = LightConeData::from_sides(mp.sigma, out.coeff_singular, cap_singular, out.coeff_smooth)?;
    Ok(GlobalInverse {
        orientation: Orientation::Past,
        pieces: [Piece::Variation(Box::new(plus.piece)), Piece::Variation(Box::new(belt)), Piece::Variation(Box::new(minus.piece))],
        y_plus: LightConeData { a_plus: c0(), a_minus: c0(), smooth: smooth_plus },
        y_minus: split,
        det: None,
        min_pivot: None,
        certificate: None,
    })
}

fn oriented(mp: &ModeProblem, src: &ModeSource, orientation: Orientation, f: fn(&ModeProblem, &ModeSource) -> Result<GlobalInverse>) -> Result<GlobalInverse> {
    match orientation {
        Orientation::Past => f(mp, src),
        Orientation::Future => {
            let mut g = f(mp, &src.mirrored())?;
            g.orientation = Orientation::Future;
            Ok(g)
        }
    }
}

/// Global inverse by one linear solve over the regular, smooth and split
/// conditions.
pub fn global_inverse_direct(mp: &ModeProblem, src: &ModeSource, orientation: Orientation) -> Result<GlobalInverse> {
    oriented(mp, src, orientation, past_direct)
}

/// Global inverse assembled from the cap resolvent at σ, the belt Poisson
/// and backward solutions, and the X₋ Poisson operator and resolvent at −σ.
pub fn global_inverse_assembled(mp: &ModeProblem, src: &ModeSource, orientation: Orientation) -> Result<GlobalInverse> {
    oriented(mp, src, orientation, past_assembled)
}

pub fn global_inverse_direct_mode(mp: &ModeProblem, src: &ModeSource, theta: f64) -> Result<Complex64> {
    global_inverse_direct(mp, src, Orientation::Past)?.eval(theta)
}

pub fn global_inverse_assembled_mode(mp: &ModeProblem, src: &ModeSource, theta: f64) -> Result<Complex64> {
    global_inverse_assembled(mp, src, Orientation::Past)?.eval(theta)
}

/// Determinant of the homogeneous global system; zero exactly at the poles
/// of the global inverse.
pub fn global_determinant(mp: &ModeProblem) -> Result<Complex64> {
    let zero = ModeSource::Poly { coeffs: vec![0.0] };
    let frame = Frame::global(mp, &zero)?;
    let mut y1 = frame.solution(&frame.pole_plus, vec![c1()], 1.0, false);
    let d1 = frame.reach(&mut y1, &frame.cone_plus, 1.0)?;
    let mut g = frame.solution(&frame.cone_plus, vec![c0(), c1()], -1.0, false);
    let dg = frame.reach(&mut g, &frame.cone_minus, -1.0)?;
    let mut y3 = frame.solution(&frame.pole_minus, vec![c1()], 1.0, false);
    let d3 = frame.reach(&mut y3, &frame.cone_minus, 1.0)?;
    let (_, det, _) = solve(system_matrix(mp.sigma, &d1, &dg, &d3), vec![c0(); 4]);
    Ok(det)
}

/// Sup-norm of P̃·u − S relative to sup |S| over `thetas`. u'' comes from a
/// fourth-order central difference of u' at steps h and h/2, combined by one
/// Richardson step.
pub fn inverse_residual(op: &ModeOperator, sol: &dyn Evaluate, src: &ModeSource, thetas: &[f64]) -> Result<f64> {
    let h = 1e-3;
    let offsets = [-2.0, -1.0, 1.0, 2.0, -1.0, -0.5, 0.5, 1.0];
    let mut pts = Vec::with_capacity(thetas.len() * 9);
    for &t in thetas {
        pts.push(t);
        pts.extend(offsets.iter().map(|o| t + o * h));
    }
    let states = sol.eval_many(&pts)?;
    let stencil = |s: &[State], step: f64| (s[0][1] - s[1][1] * 8.0 + s[2][1] * 8.0 - s[3][1]) / (12.0 * step);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, &t) in thetas.iter().enumerate() {
        let s = &states[9 * i..9 * i + 9];
        let coarse = stencil(&s[1..5], h);
        let fine = stencil(&s[5..9], 0.5 * h);
        let w2 = (fine * 16.0 - coarse) / 15.0;
        let [a, b, c] = op.theta_coeffs(t);
        let target = src.eval(op.ell, t);
        worst = worst.max((a * w2 + b * s[0][1] + c * s[0][0] - target).norm());
        scale = scale.max(target.norm());
    }
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}

/// Evenly spaced angles in (a, b), avoiding the endpoints by `gap`.
pub fn sample_grid(a: f64, b: f64, count: usize, gap: f64) -> Vec<f64> {
    (0..count).map(|i| a + gap + (b - a - 2.0 * gap) * (i as f64 + 0.5) / count as f64).collect()
}

/// Keeps the difference stencil clear of the light cones, where past and
/// future solutions carry |μ|^{iσ} singularities.
pub const CONE_GAP: f64 = 0.15;
/// Clearance from the poles for residual checks.
pub const POLE_GAP: f64 = 0.05;

/// `count` angles per region, for residual checks.
pub fn residual_grid(count: usize) -> Vec<f64> {
    let mut out = sample_grid(POLE_GAP, FRAC_PI_4 - CONE_GAP, count, 0.0);
    out.extend(sample_grid(FRAC_PI_4 + CONE_GAP, 3.0 * FRAC_PI_4 - CONE_GAP, count, 0.0));
    out.extend(sample_grid(3.0 * FRAC_PI_4 + CONE_GAP, PI - POLE_GAP, count, 0.0));
    out
}

#[cfg(test)]
mod tests;
