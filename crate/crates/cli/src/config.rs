//! Run configuration: one JSON document, optionally overridden by flags.

use lightcone::inverse::{ModeSource, Orientation, PoleOptions, Window};
use lightcone::{Complex64, RadialProfile, SpectralPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::PathBuf;

/// Smallest margin from iℤ a run may be configured with.
pub const MIN_MARGIN: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}, column {column}, field `{field}`: {message}")]
    Parse { line: usize, column: usize, field: String, message: String },
    #[error("config field `{field}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Invalid { field: String, line: Option<usize>, message: String },
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
}

/// A complex spectral parameter, read as "0.7+0.3i", a bare number or a
/// [re, im] pair and written as [re, im].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigma(pub Complex64);

impl Serialize for Sigma {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Sigma {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Real(f64),
            Pair([f64; 2]),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => parse_sigma(&t).map_err(serde::de::Error::custom),
            Raw::Real(r) => Ok(Sigma(Complex64::new(r, 0.0))),
            Raw::Pair([re, im]) => Ok(Sigma(Complex64::new(re, im))),
        }
    }
}

/// Parses "a+bi", "a-bi", "a", "bi", "-i".
pub fn parse_sigma(text: &str) -> Result<Sigma, String> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot read `{text}` as a complex number (expected e.g. 0.7+0.3i)");
    let num = |s: &str| -> Result<f64, String> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => s.parse::<f64>().map_err(|_| bad()),
        }
    };
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return Ok(Sigma(Complex64::new(t.parse().map_err(|_| bad())?, 0.0)));
    };
    // split at the last sign that is not the leading one or part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (body[..i].parse::<f64>().map_err(|_| bad())?, num(&body[i..])?),
        None => (0.0, num(body)?),
    };
    Ok(Sigma(Complex64::new(re, im)))
}

/// Pseudo-random σ drawn from the disk |σ| ≤ max_abs, keeping min_margin
/// away from iℤ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SigmaGrid {
    pub count: usize,
    pub seed: u64,
    pub max_abs: f64,
    pub min_margin: f64,
}

impl Default for SigmaGrid {
    fn default() -> Self {
        Self { count: 20, seed: 1, max_abs: 3.0, min_margin: 0.05 }
    }
}

impl SigmaGrid {
    pub fn points(&self) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let m = self.max_abs;
        let mut out = Vec::with_capacity(self.count);
        while out.len() < self.count {
            let s = Complex64::new(rng.random_range(-m..=m), rng.random_range(-m..=m));
            if s.norm() <= m && SpectralPoint::new(s, 2).margin() >= self.min_margin {
                out.push(s);
            }
        }
        out
    }
}

/// Targets a run is judged against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// refuse σ closer than this to iℤ
    pub margin: f64,
    /// entrywise |S_direct − S_product| relative
    pub product: f64,
    /// numeric cap scalars against the Gamma quotient (exact profile)
    pub oracle: f64,
    /// |s₊(σ)s₊(−σ) − 1|
    pub involution: f64,
    /// smooth Taylor coefficients across Y₊
    pub taylor: f64,
    /// relative residual of every inverse pipeline
    pub inverse: f64,
    /// assembled against direct global inverse
    pub pipelines: f64,
    /// Hausdorff distance between global zeros and the constituent union
    pub union: f64,
    /// |c_σ c_{−σ} − 1|
    pub symbol: f64,
    pub conjugation: f64,
    /// ambient validator residual at `ambient_h`
    pub ambient: f64,
    /// indicial roots, Abel constancy and series overlap
    pub hygiene: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            margin: MIN_MARGIN,
            product: 1e-8,
            oracle: 1e-10,
            involution: 1e-9,
            taylor: 1e-8,
            inverse: 1e-7,
            pipelines: 1e-8,
            union: 1e-6,
            symbol: 1e-4,
            conjugation: 1e-9,
            ambient: 1e-6,
            hygiene: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    XPlus,
    XMinus,
    Global,
    /// all three, plus the union check
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n: usize,
    pub profile: RadialProfile,
    pub sigma: Vec<Sigma>,
    pub sigma_grid: Option<SigmaGrid>,
    pub ell_min: usize,
    /// defaults per command: 5, or 40 for symbol-check
    pub ell_max: Option<usize>,
    pub tolerances: Tolerances,
    pub window: Window,
    pub which: Which,
    pub poles: PoleOptions,
    pub source: ModeSource,
    pub orientation: Orientation,
    /// residual samples per region for the inverse pipelines
    pub grid_points: usize,
    /// global scattering data (b₊, b₋) for poisson-check
    pub poisson_data: [Sigma; 2],
    pub taylor_terms: usize,
    pub ambient_h: f64,
    /// where the report goes; not echoed, so the report does not depend on it
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 3,
            profile: RadialProfile::Exact,
            sigma: Vec::new(),
            sigma_grid: None,
            ell_min: 0,
            ell_max: None,
            tolerances: Tolerances::default(),
            window: Window { re: [-3.0, 3.0], im: [-3.0, -0.1] },
            which: Which::Global,
            poles: PoleOptions::default(),
            source: ModeSource::Gaussian { center: 0.1, width: 0.6 },
            orientation: Orientation::Past,
            grid_points: 12,
            poisson_data: [Sigma(Complex64::new(1.0, 0.0)), Sigma(Complex64::new(0.3, -0.2))],
            taylor_terms: 6,
            ambient_h: 1e-3,
            output: None,
            format: Format::Json,
        }
    }
}

impl RunConfig {
    /// Parses a config document, reporting the line and field path of the
    /// first problem.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::Parse { line: inner.line(), column: inner.column(), field, message: strip_position(&inner.to_string()) }
        })?;
        cfg.check().map_err(|e| match e {
            ConfigError::Invalid { field, message, .. } => {
                let line = line_of_key(text, field.split('.').next_back().unwrap_or(&field));
                ConfigError::Invalid { field, line, message }
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text)
    }

    /// Semantic checks that the schema cannot express.
    pub fn check(&self) -> Result<(), ConfigError> {
        let invalid = |field: &str, message: String| ConfigError::Invalid { field: field.into(), line: None, message };
        if self.n < 2 {
            return Err(invalid("n", format!("dimension {} is below 2", self.n)));
        }
        self.profile.validate().map_err(|e| invalid("profile", format!("{e:?}")))?;
        if !(self.tolerances.margin >= MIN_MARGIN) {
            return Err(invalid("tolerances.margin", format!("{} is below {MIN_MARGIN:e}", self.tolerances.margin)));
        }
        if let Some(l) = self.ell_max {
            if l < self.ell_min {
                return Err(invalid("ell_max", format!("{l} is below ell_min = {}", self.ell_min)));
            }
        }
        if self.grid_points == 0 {
            return Err(invalid("grid_points", "must be positive".into()));
        }
        Ok(())
    }

    /// Explicit σ values followed by the grid, if any.
    pub fn sigmas(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = self.sigma.iter().map(|s| s.0).collect();
        if let Some(g) = &self.sigma_grid {
            out.extend(g.points());
        }
        out
    }

    pub fn ells(&self, default_max: usize) -> std::ops::RangeInclusive<usize> {
        self.ell_min..=self.ell_max.unwrap_or(default_max)
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

/// Profile on the command line: `exact`, `bump:EPS`, `poly:C0,C1,...` or a
/// JSON object.
pub fn parse_profile(text: &str) -> Result<RadialProfile, String> {
    let t = text.trim();
    if t.starts_with('{') {
        return serde_json::from_str(t).map_err(|e| e.to_string());
    }
    let (kind, arg) = t.split_once(':').unwrap_or((t, ""));
    match kind {
        "exact" => Ok(RadialProfile::Exact),
        "bump" => {
            let epsilon = if arg.is_empty() { 0.1 } else { arg.parse().map_err(|_| format!("bad bump epsilon `{arg}`"))? };
            Ok(RadialProfile::Bump { epsilon })
        }
        "poly" => {
            let coeffs = arg.split(',').map(|c| c.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| format!("bad poly coefficients `{arg}`"))?;
            Ok(RadialProfile::Poly { coeffs })
        }
        _ => Err(format!("unknown profile `{t}` (exact, bump:EPS, poly:C0,C1,...)")),
    }
}

/// Window as `re_min:re_max:im_min:im_max`.
pub fn parse_window(text: &str) -> Result<Window, String> {
    let v = text.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| format!("bad window `{text}`"))?;
    if v.len() != 4 {
        return Err(format!("window `{text}` needs four numbers re_min:re_max:im_min:im_max"));
    }
    Ok(Window { re: [v[0], v[1]], im: [v[2], v[3]] })
}
