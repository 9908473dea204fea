//! One pipeline per command. Each produces records, one per grid point,
//! carrying their own pass flag against the configured tolerances.

use crate::config::{RunConfig, Which};
use lightcone::checks::{ambient_check, hygiene, AmbientReport, HygieneReport};
use lightcone::inverse::{
    backward_solution_desitter, find_poles, global_inverse_assembled, global_inverse_direct, inverse_residual, residual_grid, resolvent_hyperbolic,
    sample_grid, union_distance, DeterminantKind, Evaluate, ModeSource, Orientation, PoleReport, SourceRegion, Zero, CONE_GAP, POLE_GAP,
};
use lightcone::model::{ModeOperator, OperatorKind};
use lightcone::scattering::{
    closed_form_gamma_quotient, fmt17, mode_scattering, pair, smatrix_hyperbolic, symbol_order_check, taylor_matching, ScatteringReport, SigmaSign,
    SymbolReport,
};
use lightcone::{Complex64, ModeProblem, Region, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

/// A result row: serializable, flattenable to CSV, judged against targets.
pub trait Record: Serialize + DeserializeOwned + Send {
    const CSV_HEADER: &'static str;
    fn csv_rows(&self) -> Vec<String>;
    fn pass(&self) -> bool;
}

fn csv_pair(z: [f64; 2]) -> String {
    format!("{},{}", fmt17(z[0]), fmt17(z[1]))
}

fn opt17(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

fn problem(cfg: &RunConfig, ell: usize, sigma: Complex64) -> Result<ModeProblem> {
    let mp = ModeProblem::new(cfg.n, ell, sigma, cfg.profile.clone())?;
    mp.sp().check_margin(cfg.tolerances.margin)?;
    Ok(mp)
}

/// Every (σ, ℓ) pair of the run, σ-major.
pub fn mode_grid(cfg: &RunConfig, default_ell_max: usize) -> Vec<(Complex64, usize)> {
    let ells: Vec<usize> = cfg.ells(default_ell_max).collect();
    cfg.sigmas().into_iter().flat_map(|s| ells.iter().map(move |&l| (s, l))).collect()
}

// ---------------------------------------------------------------- smatrix

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmatrixRecord {
    #[serde(flatten)]
    pub report: ScatteringReport,
    pub pass: bool,
}

impl Record for SmatrixRecord {
    const CSV_HEADER: &'static str = const_concat::SMATRIX;
    fn csv_rows(&self) -> Vec<String> {
        vec![format!("{},{}", self.report.csv_row(), self.pass)]
    }
    fn pass(&self) -> bool {
        self.pass
    }
}

pub fn smatrix(cfg: &RunConfig, sigma: Complex64, ell: usize) -> Result<SmatrixRecord> {
    let mp = problem(cfg, ell, sigma)?;
    let ms = mode_scattering(&mp)?;
    Ok(SmatrixRecord { pass: ms.residual <= cfg.tolerances.product, report: ScatteringReport::new(&mp, &ms) })
}

// --------------------------------------------------------- verify-product

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductRecord {
    #[serde(flatten)]
    pub report: ScatteringReport,
    /// cap scalars against the Gamma quotient, exact profile only
    pub oracle: Option<f64>,
    /// |s₊(σ)·s₊(−σ) − 1|
    pub involution: f64,
    pub pass: bool,
}

impl Record for ProductRecord {
    const CSV_HEADER: &'static str = const_concat::PRODUCT;
    fn csv_rows(&self) -> Vec<String> {
        vec![format!("{},{},{},{}", self.report.csv_row(), opt17(self.oracle), fmt17(self.involution), self.pass)]
    }
    fn pass(&self) -> bool {
        self.pass
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn verify_product(cfg: &RunConfig, sigma: Complex64, ell: usize) -> Result<ProductRecord> {
    let mp = problem(cfg, ell, sigma)?;
    let ms = mode_scattering(&mp)?;
    let reversed = smatrix_hyperbolic(&mp, Region::XPlus, SigmaSign::Minus)?;
    let involution = (ms.s_plus * reversed - 1.0).norm();
    let oracle = if mp.profile.is_exact() {
        let plus = closed_form_gamma_quotient(mp.n, ell, sigma)?;
        let minus = closed_form_gamma_quotient(mp.n, ell, -sigma)?;
        // X₋ at −σ is the mirror image of X₊ at −σ for the exact profile
        Some(rel(ms.s_plus, plus).max(rel(ms.s_minus_rev, minus)))
    } else {
        None
    };
    let t = &cfg.tolerances;
    let pass = ms.residual <= t.product && involution <= t.involution && oracle.is_none_or(|o| o <= t.oracle);
    Ok(ProductRecord { report: ScatteringReport::new(&mp, &ms), oracle, involution, pass })
}

// ---------------------------------------------------------- poisson-check

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorRecord {
    pub n: usize,
    pub ell: usize,
    pub sigma: [f64; 2],
    pub profile: String,
    pub data: [[f64; 2]; 2],
    /// smooth Taylor coefficients at Y₊ from the cap side
    pub from_cap: Vec<[f64; 2]>,
    /// the same from the belt side, transported across the belt and back
    pub from_belt: Vec<[f64; 2]>,
    /// the same from the global connection
    pub from_global: Vec<[f64; 2]>,
    pub max_rel: f64,
    pub pass: bool,
}

impl Record for TaylorRecord {
    const CSV_HEADER: &'static str = "n,ell,sigma_re,sigma_im,profile,k,cap_re,cap_im,belt_re,belt_im,global_re,global_im,max_rel,pass";
    fn csv_rows(&self) -> Vec<String> {
        (0..self.from_cap.len())
            .map(|k| {
                format!(
                    "{},{},{},\"{}\",{k},{},{},{},{},{}",
                    self.n,
                    self.ell,
                    csv_pair(self.sigma),
                    self.profile,
                    csv_pair(self.from_cap[k]),
                    csv_pair(self.from_belt[k]),
                    csv_pair(self.from_global[k]),
                    fmt17(self.max_rel),
                    self.pass
                )
            })
            .collect()
    }
    fn pass(&self) -> bool {
        self.pass
    }
}

pub fn poisson_check(cfg: &RunConfig, sigma: Complex64, ell: usize) -> Result<TaylorRecord> {
    let mp = problem(cfg, ell, sigma)?;
    let data = [cfg.poisson_data[0].0, cfg.poisson_data[1].0];
    let tm = taylor_matching(&mp, data, cfg.taylor_terms)?;
    let pairs = |v: &[Complex64]| v.iter().map(|z| pair(*z)).collect::<Vec<_>>();
    Ok(TaylorRecord {
        n: mp.n,
        ell,
        sigma: pair(sigma),
        profile: mp.profile.label(),
        data: [pair(data[0]), pair(data[1])],
        from_cap: pairs(&tm.from_cap),
        from_belt: pairs(&tm.from_belt),
        from_global: pairs(&tm.from_global),
        max_rel: tm.max_rel,
        pass: tm.max_rel <= cfg.tolerances.taylor,
    })
}

// ----------------------------------------------------------------- invert

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseRecord {
    pub n: usize,
    pub ell: usize,
    pub sigma: [f64; 2],
    pub profile: String,
    pub orientation: Orientation,
    /// relative residual of the 4×4 global solve
    pub direct_residual: f64,
    /// relative residual of the solution assembled from the constituents
    pub assembled_residual: f64,
    /// sup |assembled − direct| / sup |direct| on the residual grid
    pub deviation: f64,
    /// cap resolvent on X₊ (past orientation only)
    pub resolvent_residual: Option<f64>,
    /// backward belt solution, when the source is a bump inside the belt
    pub belt_residual: Option<f64>,
    pub min_pivot: Option<f64>,
    pub pass: bool,
}

impl Record for InverseRecord {
    const CSV_HEADER: &'static str =
        "n,ell,sigma_re,sigma_im,profile,orientation,direct_residual,assembled_residual,deviation,resolvent_residual,belt_residual,min_pivot,pass";
    fn csv_rows(&self) -> Vec<String> {
        let orientation = match self.orientation {
            Orientation::Past => "past",
            Orientation::Future => "future",
        };
        vec![format!(
            "{},{},{},\"{}\",{orientation},{},{},{},{},{},{},{}",
            self.n,
            self.ell,
            csv_pair(self.sigma),
            self.profile,
            fmt17(self.direct_residual),
            fmt17(self.assembled_residual),
            fmt17(self.deviation),
            opt17(self.resolvent_residual),
            opt17(self.belt_residual),
            opt17(self.min_pivot),
            self.pass
        )]
    }
    fn pass(&self) -> bool {
        self.pass
    }
}

fn sup_deviation(a: &dyn Evaluate, b: &dyn Evaluate, thetas: &[f64]) -> Result<f64> {
    let (a, b) = (a.eval_many(thetas)?, b.eval_many(thetas)?);
    let scale = b.iter().map(|s| s[0].norm()).fold(0.0, f64::max);
    let worst = a.iter().zip(&b).map(|(x, y)| (x[0] - y[0]).norm()).fold(0.0, f64::max);
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

pub fn invert(cfg: &RunConfig, sigma: Complex64, ell: usize) -> Result<InverseRecord> {
    let mp = problem(cfg, ell, sigma)?;
    let src = &cfg.source;
    let op = ModeOperator::from_problem(&mp, OperatorKind::Global);
    let grid = residual_grid(cfg.grid_points);
    let direct = global_inverse_direct(&mp, src, cfg.orientation)?;
    let assembled = global_inverse_assembled(&mp, src, cfg.orientation)?;
    let direct_residual = inverse_residual(&op, &direct, src, &grid)?;
    let assembled_residual = inverse_residual(&op, &assembled, src, &grid)?;
    let deviation = sup_deviation(&assembled, &direct, &grid)?;
    let resolvent_residual = match cfg.orientation {
        Orientation::Past => {
            let cap = sample_grid(POLE_GAP, FRAC_PI_4 - CONE_GAP, cfg.grid_points, 0.0);
            Some(inverse_residual(&op, &resolvent_hyperbolic(&mp, src)?, src, &cap)?)
        }
        Orientation::Future => None,
    };
    let belt_residual = match (src, src.region()?) {
        (ModeSource::Bump { .. }, SourceRegion::Within(Region::XZero)) => {
            let belt = sample_grid(FRAC_PI_4 + CONE_GAP, 3.0 * FRAC_PI_4 - CONE_GAP, cfg.grid_points, 0.0);
            Some(inverse_residual(&op, &backward_solution_desitter(&mp, src)?, src, &belt)?)
        }
        _ => None,
    };
    let t = &cfg.tolerances;
    let within = |r: Option<f64>| r.is_none_or(|r| r <= t.inverse);
    let pass = direct_residual <= t.inverse
        && assembled_residual <= t.inverse
        && deviation <= t.pipelines
        && within(resolvent_residual)
        && within(belt_residual);
    Ok(InverseRecord {
        n: mp.n,
        ell,
        sigma: pair(sigma),
        profile: mp.profile.label(),
        orientation: cfg.orientation,
        direct_residual,
        assembled_residual,
        deviation,
        resolvent_residual,
        belt_residual,
        min_pivot: direct.min_pivot,
        pass,
    })
}

// ------------------------------------------------------------- resonances

/// Zeros of one determinant for one mode, with the union check when all
/// three determinants were scanned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRecord {
    pub ell: usize,
    pub reports: Vec<PoleReport>,
    /// Hausdorff distance between the global zeros and the union of the
    /// constituent zeros
    pub union_distance: Option<f64>,
    /// total multiplicity per report, in report order
    pub counts: Vec<usize>,
    pub pass: bool,
}

impl Record for ResonanceRecord {
    const CSV_HEADER: &'static str = "which,n,ell,sigma_re,sigma_im,mult,residual,margin";
    fn csv_rows(&self) -> Vec<String> {
        let name = |w: DeterminantKind| match w {
            DeterminantKind::CapPlus => "x_plus",
            DeterminantKind::CapMinus => "x_minus",
            DeterminantKind::Global => "global",
        };
        self.reports
            .iter()
            .flat_map(|r| {
                r.zeros.iter().map(move |z: &Zero| {
                    format!("{},{},{},{},{},{},{}", name(r.which), r.n, r.ell, csv_pair(z.sigma), z.mult, fmt17(z.residual), fmt17(z.margin))
                })
            })
            .collect()
    }
    fn pass(&self) -> bool {
        self.pass
    }
}

/// Base σ for the pole scans; only n, ℓ and the profile matter.
const SCAN_BASE: Complex64 = Complex64::new(0.5, 0.25);

pub fn resonances(cfg: &RunConfig, ell: usize) -> Result<ResonanceRecord> {
    let base = ModeProblem::new(cfg.n, ell, SCAN_BASE, cfg.profile.clone())?;
    let kinds: Vec<DeterminantKind> = match cfg.which {
        Which::XPlus => vec![DeterminantKind::CapPlus],
        Which::XMinus => vec![DeterminantKind::CapMinus],
        Which::Global => vec![DeterminantKind::Global],
        Which::All => vec![DeterminantKind::Global, DeterminantKind::CapPlus, DeterminantKind::CapMinus],
    };
    let reports = kinds.iter().map(|&k| find_poles(&base, k, cfg.window, cfg.poles)).collect::<Result<Vec<_>>>()?;
    let counts: Vec<usize> = reports.iter().map(|r| r.zeros.iter().map(|z| z.mult).sum()).collect();
    let mut pass = reports.iter().all(|r| r.consistent);
    let union = if cfg.which == Which::All {
        let d = union_distance(&reports[0].zeros, &reports[1].zeros, &reports[2].zeros);
        pass &= d <= cfg.tolerances.union && counts[0] == counts[1] + counts[2];
        Some(d)
    } else {
        None
    };
    Ok(ResonanceRecord { ell, reports, union_distance: union, counts, pass })
}

// ----------------------------------------------------------- symbol-check

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolRecord {
    #[serde(flatten)]
    pub report: SymbolReport,
    pub pass: bool,
}

impl Record for SymbolRecord {
    const CSV_HEADER: &'static str =
        "n,sigma_re,sigma_im,ell_max,c_sigma_re,c_sigma_im,c_minus_sigma_re,c_minus_sigma_im,defect,cauchy,oracle_re,oracle_im,bounded,pass";
    fn csv_rows(&self) -> Vec<String> {
        let r = &self.report;
        let oracle = r.oracle.map(|z| csv_pair(pair(z))).unwrap_or_else(|| ",".into());
        vec![format!(
            "{},{},{},{},{},{},{},{oracle},{},{}",
            r.n,
            csv_pair(r.sigma),
            r.ell_max,
            csv_pair(pair(r.c_sigma)),
            csv_pair(pair(r.c_minus_sigma)),
            fmt17(r.defect),
            fmt17(r.cauchy),
            r.bounded,
            self.pass
        )]
    }
    fn pass(&self) -> bool {
        self.pass
    }
}

pub fn symbol_check(cfg: &RunConfig, sigma: Complex64, ell_max: usize) -> Result<SymbolRecord> {
    let mp = problem(cfg, 1, sigma)?;
    let report = symbol_order_check(&mp.sp(), cfg.n, &cfg.profile, ell_max)?;
    Ok(SymbolRecord { pass: report.defect <= cfg.tolerances.symbol && report.bounded, report })
}

// --------------------------------------------------------------- validate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateRecord {
    #[serde(flatten)]
    pub hygiene: HygieneReport,
    /// exact profile only
    pub ambient: Option<AmbientReport>,
    pub pass: bool,
}

/// Accepted spread of the observed ambient order around 4.
pub const ORDER_SLACK: f64 = 0.5;

impl Record for ValidateRecord {
    const CSV_HEADER: &'static str = "n,ell,sigma_re,sigma_im,profile,conjugation_x_plus,conjugation_x_zero,conjugation_x_minus,indicial,abel,overlap,ambient_residual,ambient_order,pass";
    fn csv_rows(&self) -> Vec<String> {
        let h = &self.hygiene;
        vec![format!(
            "{},{},{},\"{}\",{},{},{},{},{},{},{},{},{}",
            h.n,
            h.ell,
            csv_pair(h.sigma),
            h.profile,
            fmt17(h.conjugation[0]),
            fmt17(h.conjugation[1]),
            fmt17(h.conjugation[2]),
            fmt17(h.indicial),
            fmt17(h.abel),
            fmt17(h.overlap),
            opt17(self.ambient.as_ref().map(|a| a.residual)),
            opt17(self.ambient.as_ref().map(|a| a.order)),
            self.pass
        )]
    }
    fn pass(&self) -> bool {
        self.pass
    }
}

pub fn validate(cfg: &RunConfig, sigma: Complex64, ell: usize) -> Result<ValidateRecord> {
    let mp = problem(cfg, ell, sigma)?;
    let h = hygiene(&mp)?;
    let ambient = if mp.profile.is_exact() { Some(ambient_check(&mp, cfg.ambient_h)?) } else { None };
    let t = &cfg.tolerances;
    let pass = h.conjugation.iter().all(|c| *c <= t.conjugation)
        && h.indicial <= t.hygiene
        && h.abel <= t.hygiene
        && h.overlap <= t.hygiene
        && ambient.as_ref().is_none_or(|a| a.residual <= t.ambient && (a.order - 4.0).abs() <= ORDER_SLACK);
    Ok(ValidateRecord { hygiene: h, ambient, pass })
}

mod const_concat {
    // Scattering columns followed by the per-command extras.
    macro_rules! scattering_then {
        ($extra:literal) => {
            concat!(
                "n,ell,sigma_re,sigma_im,profile,s_plus_re,s_plus_im,s_minus_rev_re,s_minus_rev_im,",
                "S0_00_re,S0_00_im,S0_01_re,S0_01_im,S0_10_re,S0_10_im,S0_11_re,S0_11_im,",
                "S_direct_00_re,S_direct_00_im,S_direct_01_re,S_direct_01_im,S_direct_10_re,S_direct_10_im,S_direct_11_re,S_direct_11_im,",
                "S_product_00_re,S_product_00_im,S_product_01_re,S_product_01_im,S_product_10_re,S_product_10_im,S_product_11_re,S_product_11_im,residual,",
                $extra
            )
        };
    }
    pub const SMATRIX: &str = scattering_then!("pass");
    pub const PRODUCT: &str = scattering_then!("oracle,involution,pass");

    #[test]
    fn headers_extend_the_library_header() {
        use lightcone::scattering::ScatteringReport;
        assert_eq!(SMATRIX, format!("{},pass", ScatteringReport::CSV_HEADER));
        assert_eq!(PRODUCT, format!("{},oracle,involution,pass", ScatteringReport::CSV_HEADER));
    }
}
