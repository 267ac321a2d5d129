//! Run configuration: a sectioned `key = value` text format.
//!
//! ```text
//! [run]
//! name = fig3a
//! route = perturbative
//!
//! [trap]
//! omega = 25
//! n_atoms = 10000
//! ```
//!
//! Only `trap.omega` and `trap.n_atoms` are required; every other key has a
//! default, and [`RunConfig::to_ini`] echoes the complete resolved
//! configuration in a form that parses back to an identical value. Unknown
//! sections or keys are rejected with their line number; missing and invalid
//! values are all reported together. A `[notes]` section is accepted and
//! ignored so manifests can annotate presets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::artifacts::Format;
use crate::error::{Error, Result};
use crate::meanfield::VariantTag;
use crate::model::{BlochState, CavityParams, TrapParams};
use crate::quantum::{SseForm, DIMENSION_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Meanfield,
    Perturbative,
    Master,
    Trajectory,
}

impl Route {
    pub const ALL: [Route; 4] = [Route::Meanfield, Route::Perturbative, Route::Master, Route::Trajectory];

    pub fn name(self) -> &'static str {
        match self {
            Route::Meanfield => "meanfield",
            Route::Perturbative => "perturbative",
            Route::Master => "master",
            Route::Trajectory => "trajectory",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }

    pub fn is_quantum(self) -> bool {
        matches!(self, Route::Master | Route::Trajectory)
    }
}

/// Initial condition: explicit Bloch components or coherent-spin angles
/// (`θ` from the `+J_x` axis, `φ` from `J_y` toward `J_z`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialState {
    Bloch(BlochState),
    Coherent { theta: f64, phi: f64 },
}

impl InitialState {
    /// Mean-field vector of the initial condition for spin `j`.
    pub fn bloch(&self, j: f64) -> BlochState {
        match *self {
            InitialState::Bloch(b) => b,
            InitialState::Coherent { theta, phi } => BlochState::new(
                j * theta.cos(),
                j * theta.sin() * phi.cos(),
                j * theta.sin() * phi.sin(),
            ),
        }
    }

    /// Coherent-spin angles; Bloch vectors are mapped to their direction.
    pub fn angles(&self) -> (f64, f64) {
        match *self {
            InitialState::Coherent { theta, phi } => (theta, phi),
            InitialState::Bloch(b) => {
                let r = b.norm_sq().sqrt();
                if r == 0.0 {
                    (std::f64::consts::FRAC_PI_2, 0.0)
                } else {
                    ((b.jx / r).clamp(-1.0, 1.0).acos(), b.jz.atan2(b.jy))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Emission stride; `None` picks one giving about [`DEFAULT_SAMPLES`] samples.
    pub stride: Option<usize>,
}

/// Target number of emitted samples when no stride is given.
pub const DEFAULT_SAMPLES: usize = 2048;

impl IntegratorSettings {
    pub fn resolved_stride(&self) -> usize {
        self.stride.unwrap_or_else(|| {
            let steps = ((self.t_end - self.t0) / self.dt).ceil().max(1.0) as usize;
            steps.div_ceil(DEFAULT_SAMPLES).max(1)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticSettings {
    pub seed: u64,
    pub trajectories: usize,
    pub noise_substeps: u32,
    pub form: SseForm,
    /// Overrides the Γ derived from the cavity drive.
    pub gamma_meas: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    pub route: Route,
    pub variant: VariantTag,
    pub double_count_guard: bool,
    pub trap: TrapParams,
    pub cavity: CavityParams,
    pub initial: InitialState,
    pub phase0: f64,
    pub integrator: IntegratorSettings,
    pub stochastic: StochasticSettings,
    pub out_dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl RunConfig {
    /// Defaults around the two required values.
    pub fn with_required(omega: f64, n_atoms: u32) -> Self {
        Self {
            name: "run".to_string(),
            route: Route::Meanfield,
            variant: VariantTag::Closed,
            double_count_guard: false,
            trap: TrapParams::new(omega, 0.0, 0.0, 0.0, n_atoms),
            cavity: CavityParams::default(),
            initial: InitialState::Coherent {
                theta: std::f64::consts::FRAC_PI_2,
                phi: 0.0,
            },
            phase0: 0.0,
            integrator: IntegratorSettings {
                t0: 0.0,
                t_end: 10.0,
                dt: 1e-3,
                stride: None,
            },
            stochastic: StochasticSettings {
                seed: 0,
                trajectories: 1,
                noise_substeps: 1,
                form: SseForm::Normalized,
                gamma_meas: None,
            },
            out_dir: None,
            formats: vec![Format::Csv],
        }
    }

    /// Γ: the explicit override, else the value implied by the cavity.
    pub fn gamma_meas(&self) -> Result<f64> {
        match self.stochastic.gamma_meas {
            Some(g) => Ok(g),
            None => self.cavity.measurement_strength(),
        }
    }

    /// Every violated invariant, as `section.key: reason`.
    pub fn violations(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        out.extend(self.trap.violations().into_iter().map(|(k, r)| format!("trap.{k}: {r}")));
        out.extend(self.cavity.violations().into_iter().map(|(k, r)| format!("cavity.{k}: {r}")));
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            out.push(format!("run.name: must be non-empty [A-Za-z0-9._-], got {:?}", self.name));
        }
        let it = &self.integrator;
        if !(it.dt > 0.0) || !it.dt.is_finite() {
            out.push(format!("integrator.dt: must be positive, got {}", it.dt));
        }
        if !it.t0.is_finite() || !it.t_end.is_finite() || !(it.t_end >= it.t0) {
            out.push(format!("integrator.t_end: must be ≥ t0 = {}, got {}", it.t0, it.t_end));
        }
        if it.stride == Some(0) {
            out.push("integrator.stride: must be at least 1".to_string());
        }
        if self.stochastic.trajectories == 0 {
            out.push("stochastic.trajectories: must be at least 1".to_string());
        }
        if self.stochastic.noise_substeps == 0 {
            out.push("stochastic.noise_substeps: must be at least 1".to_string());
        }
        if let Some(g) = self.stochastic.gamma_meas {
            if !(g >= 0.0) || !g.is_finite() {
                out.push(format!("stochastic.gamma_meas: must be non-negative, got {g}"));
            }
        }
        if self.route.is_quantum() && self.trap.n_atoms as usize + 1 > DIMENSION_CAP {
            out.push(format!(
                "trap.n_atoms: {} exceeds the quantum dimension cap {}",
                self.trap.n_atoms,
                DIMENSION_CAP - 1
            ));
        }
        if !self.phase0.is_finite() {
            out.push("initial.phase: must be finite".to_string());
        }
        match self.initial {
            InitialState::Bloch(b) => {
                let j = self.trap.spin();
                if ![b.jx, b.jy, b.jz].iter().all(|v| v.is_finite()) {
                    out.push("initial: Bloch components must be finite".to_string());
                } else if b.norm_sq() > j * (j + 1.0) {
                    out.push(format!(
                        "initial: |J|² = {} exceeds j(j+1) = {}",
                        b.norm_sq(),
                        j * (j + 1.0)
                    ));
                }
            }
            InitialState::Coherent { theta, phi } => {
                if !theta.is_finite() || !phi.is_finite() {
                    out.push("initial: theta and phi must be finite".to_string());
                }
            }
        }
        if self.formats.is_empty() {
            out.push("output.formats: at least one format is required".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(v))
        }
    }

    /// Complete configuration in the input format; parses back to `self`.
    pub fn to_ini(&self) -> String {
        let f = crate::artifacts::fmt_f64;
        let mut s = String::new();
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "route = {}", self.route.name());
        let _ = writeln!(s, "variant = {}", self.variant.name());
        let _ = writeln!(s, "double_count_guard = {}", self.double_count_guard);
        let t = &self.trap;
        let _ = writeln!(s, "\n[trap]");
        let _ = writeln!(s, "omega = {}", f(t.omega));
        let _ = writeln!(s, "kappa = {}", f(t.kappa));
        let _ = writeln!(s, "eta = {}", f(t.eta));
        let _ = writeln!(s, "lambda = {}", f(t.lambda));
        let _ = writeln!(s, "n_atoms = {}", t.n_atoms);
        let c = &self.cavity;
        let _ = writeln!(s, "\n[cavity]");
        let _ = writeln!(s, "xi = {}", f(c.xi));
        let _ = writeln!(s, "n_photons = {}", f(c.n_photons));
        let _ = writeln!(s, "gamma = {}", f(c.gamma));
        let _ = writeln!(s, "drive = {}", f(c.drive));
        let _ = writeln!(s, "detuning = {}", f(c.detuning));
        let _ = writeln!(s, "lo_amp = {}", f(c.lo_amp));
        let _ = writeln!(s, "cav_amp = {}", f(c.cav_amp));
        let _ = writeln!(s, "\n[initial]");
        match self.initial {
            InitialState::Bloch(b) => {
                let _ = writeln!(s, "jx = {}", f(b.jx));
                let _ = writeln!(s, "jy = {}", f(b.jy));
                let _ = writeln!(s, "jz = {}", f(b.jz));
            }
            InitialState::Coherent { theta, phi } => {
                let _ = writeln!(s, "theta = {}", f(theta));
                let _ = writeln!(s, "phi = {}", f(phi));
            }
        }
        let _ = writeln!(s, "phase = {}", f(self.phase0));
        let it = &self.integrator;
        let _ = writeln!(s, "\n[integrator]");
        let _ = writeln!(s, "t0 = {}", f(it.t0));
        let _ = writeln!(s, "t_end = {}", f(it.t_end));
        let _ = writeln!(s, "dt = {}", f(it.dt));
        match it.stride {
            Some(k) => {
                let _ = writeln!(s, "stride = {k}");
            }
            None => {
                let _ = writeln!(s, "stride = auto");
            }
        }
        let st = &self.stochastic;
        let _ = writeln!(s, "\n[stochastic]");
        let _ = writeln!(s, "seed = {}", st.seed);
        let _ = writeln!(s, "trajectories = {}", st.trajectories);
        let _ = writeln!(s, "noise_substeps = {}", st.noise_substeps);
        let _ = writeln!(s, "form = {}", st.form.name());
        match st.gamma_meas {
            Some(g) => {
                let _ = writeln!(s, "gamma_meas = {}", f(g));
            }
            None => {
                let _ = writeln!(s, "gamma_meas = auto");
            }
        }
        let _ = writeln!(s, "\n[output]");
        if let Some(d) = &self.out_dir {
            let _ = writeln!(s, "dir = {}", d.display());
        }
        let formats: Vec<&str> = self.formats.iter().map(|f| f.name()).collect();
        let _ = writeln!(s, "formats = {}", formats.join(","));
        s
    }
}

/// Keys accepted in each section; `trap.omega` and `trap.n_atoms` are required.
const SCHEMA: &[(&str, &[&str])] = &[
    ("run", &["name", "route", "variant", "double_count_guard"]),
    ("trap", &["omega", "kappa", "eta", "lambda", "n_atoms"]),
    (
        "cavity",
        &["xi", "n_photons", "gamma", "drive", "detuning", "lo_amp", "cav_amp"],
    ),
    ("initial", &["jx", "jy", "jz", "theta", "phi", "phase"]),
    ("integrator", &["t0", "t_end", "dt", "stride"]),
    (
        "stochastic",
        &["seed", "trajectories", "noise_substeps", "form", "gamma_meas"],
    ),
    ("output", &["dir", "formats"]),
];
const REQUIRED: [&str; 2] = ["trap.omega", "trap.n_atoms"];
const IGNORED_SECTION: &str = "notes";

/// Raw `section.key → (line, value)` after syntax checks.
type RawEntries = BTreeMap<String, (usize, String)>;

fn lex(text: &str) -> Result<RawEntries> {
    let mut entries = RawEntries::new();
    let mut section: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') || content.starts_with(';') {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::ConfigParse {
                line,
                message: format!("malformed section header `{content}`"),
            })?;
            let name = name.trim();
            if name != IGNORED_SECTION && !SCHEMA.iter().any(|(s, _)| *s == name) {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("unknown section `[{name}]`"),
                });
            }
            section = Some(SCHEMA.iter().map(|(s, _)| *s).find(|s| *s == name).unwrap_or(IGNORED_SECTION));
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigParse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| Error::ConfigParse {
            line,
            message: format!("key `{key}` appears before any section"),
        })?;
        if sec == IGNORED_SECTION {
            continue;
        }
        let known = SCHEMA
            .iter()
            .find(|(s, _)| *s == sec)
            .is_some_and(|(_, keys)| keys.contains(&key));
        if !known {
            return Err(Error::ConfigParse {
                line,
                message: format!("unknown key `{key}` in section [{sec}]"),
            });
        }
        let full = format!("{sec}.{key}");
        if let Some((first, _)) = entries.get(&full) {
            return Err(Error::ConfigParse {
                line,
                message: format!("duplicate key `{full}` (first set on line {first})"),
            });
        }
        entries.insert(full, (line, value.to_string()));
    }
    Ok(entries)
}

/// Typed access to raw entries that accumulates every problem.
struct Reader {
    entries: RawEntries,
    problems: Vec<String>,
}

impl Reader {
    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.entries.get(key)
    }

    fn get<T>(&mut self, key: &str, what: &str, parse: impl FnOnce(&str) -> Option<T>) -> Option<T> {
        let (line, v) = self.entries.get(key)?;
        match parse(v) {
            Some(x) => Some(x),
            None => {
                self.problems
                    .push(format!("{key} (line {line}): expected {what}, got `{v}`"));
                None
            }
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> f64 {
        self.get(key, "a number", |v| v.parse().ok()).unwrap_or(default)
    }

    fn auto_f64(&mut self, key: &str) -> Option<f64> {
        self.get(key, "a number or `auto`", |v| match v {
            "auto" => Some(None),
            _ => v.parse().ok().map(Some),
        })
        .flatten()
    }

    fn int<T: std::str::FromStr>(&mut self, key: &str, default: T) -> T {
        self.get(key, "a non-negative integer", |v| v.parse().ok())
            .unwrap_or(default)
    }
}

/// Parses and validates configuration text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let entries = lex(text)?;
    let mut missing: Vec<String> = REQUIRED
        .iter()
        .filter(|k| !entries.contains_key(**k))
        .map(|k| format!("{k}: required key is missing"))
        .collect();
    let mut r = Reader {
        entries,
        problems: Vec::new(),
    };

    let omega = r.f64("trap.omega", 0.0);
    let n_atoms: u32 = r.int("trap.n_atoms", 1);
    let mut cfg = RunConfig::with_required(omega, n_atoms);

    if let Some((_, v)) = r.raw("run.name") {
        cfg.name = v.clone();
    }
    if let Some(route) = r.get("run.route", "one of meanfield|perturbative|master|trajectory", Route::from_name) {
        cfg.route = route;
    }
    if let Some(v) = r.get(
        "run.variant",
        "one of closed|rabi_limit|light_coupled|damped_moments",
        VariantTag::from_name,
    ) {
        cfg.variant = v;
    }
    if let Some(b) = r.get("run.double_count_guard", "true or false", |v| v.parse().ok()) {
        cfg.double_count_guard = b;
    }

    let d = cfg.trap;
    cfg.trap.kappa = r.f64("trap.kappa", d.kappa);
    cfg.trap.eta = r.f64("trap.eta", d.eta);
    cfg.trap.lambda = r.f64("trap.lambda", d.lambda);

    let c = cfg.cavity;
    cfg.cavity = CavityParams {
        xi: r.f64("cavity.xi", c.xi),
        n_photons: r.f64("cavity.n_photons", c.n_photons),
        gamma: r.f64("cavity.gamma", c.gamma),
        drive: r.f64("cavity.drive", c.drive),
        detuning: r.f64("cavity.detuning", c.detuning),
        lo_amp: r.f64("cavity.lo_amp", c.lo_amp),
        cav_amp: r.f64("cavity.cav_amp", c.cav_amp),
    };

    let bloch_keys = ["initial.jx", "initial.jy", "initial.jz"];
    let angle_keys = ["initial.theta", "initial.phi"];
    let has_bloch = bloch_keys.iter().any(|k| r.raw(k).is_some());
    let has_angles = angle_keys.iter().any(|k| r.raw(k).is_some());
    if has_bloch && has_angles {
        r.problems
            .push("initial: give either jx/jy/jz or theta/phi, not both".to_string());
    } else if has_bloch {
        cfg.initial = InitialState::Bloch(BlochState::new(
            r.f64("initial.jx", 0.0),
            r.f64("initial.jy", 0.0),
            r.f64("initial.jz", 0.0),
        ));
    } else if has_angles {
        let (theta0, phi0) = cfg.initial.angles();
        cfg.initial = InitialState::Coherent {
            theta: r.f64("initial.theta", theta0),
            phi: r.f64("initial.phi", phi0),
        };
    }
    cfg.phase0 = r.f64("initial.phase", 0.0);

    let it = cfg.integrator;
    cfg.integrator.t0 = r.f64("integrator.t0", it.t0);
    cfg.integrator.t_end = r.f64("integrator.t_end", it.t_end);
    cfg.integrator.dt = r.f64("integrator.dt", it.dt);
    cfg.integrator.stride = r
        .get("integrator.stride", "a positive integer or `auto`", |v| match v {
            "auto" => Some(None),
            _ => v.parse().ok().map(Some),
        })
        .flatten();

    let st = cfg.stochastic;
    cfg.stochastic.seed = r.int("stochastic.seed", st.seed);
    cfg.stochastic.trajectories = r.int("stochastic.trajectories", st.trajectories);
    cfg.stochastic.noise_substeps = r.int("stochastic.noise_substeps", st.noise_substeps);
    if let Some(form) = r.get("stochastic.form", "normalized or linear_record", |v| match v {
        "normalized" => Some(SseForm::Normalized),
        "linear_record" => Some(SseForm::LinearRecord),
        _ => None,
    }) {
        cfg.stochastic.form = form;
    }
    cfg.stochastic.gamma_meas = r.auto_f64("stochastic.gamma_meas");

    if let Some((_, v)) = r.raw("output.dir") {
        cfg.out_dir = Some(PathBuf::from(v));
    }
    if let Some(formats) = r.get("output.formats", "a comma-separated list of csv|json|svg", |v| {
        v.split(',')
            .map(|f| Format::from_name(f.trim()))
            .collect::<Option<Vec<_>>>()
    }) {
        cfg.formats = formats;
    }

    missing.append(&mut r.problems);
    if missing.is_empty() {
        // Parameter invariants are only meaningful once every value parsed.
        missing = cfg.violations();
    }
    if missing.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::ConfigInvalid(missing))
    }
}

/// Reads, parses and validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = parse_config_str("[trap]\nomega = 2\nn_atoms = 10\n").unwrap();
        let mut expect = RunConfig::with_required(2.0, 10);
        assert_eq!(cfg, expect);
        expect.trap.kappa = 0.5;
        assert_ne!(cfg, expect);
        assert_eq!(cfg.integrator.resolved_stride(), 5);
    }

    #[test]
    fn negative_gamma_names_gamma() {
        let err = parse_config_str("[trap]\nomega = 1\nn_atoms = 4\n[cavity]\ngamma = -1\n").unwrap_err();
        match err {
            Error::ConfigInvalid(v) => {
                assert_eq!(v.len(), 1);
                assert!(v[0].contains("gamma"), "{v:?}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn missing_keys_reported_together() {
        let err = parse_config_str("[run]\nname = x\n[integrator]\ndt = fast\n").unwrap_err();
        let Error::ConfigInvalid(v) = err else { panic!() };
        let joined = v.join("\n");
        assert!(joined.contains("trap.omega"));
        assert!(joined.contains("trap.n_atoms"));
        assert!(joined.contains("integrator.dt (line 4)"));
    }

    #[test]
    fn unknown_key_has_line_number() {
        let err = parse_config_str("[trap]\nomega = 1\n\nomgea = 2\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 4, .. }), "{err}");
        let err = parse_config_str("[traps]\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 1, .. }));
        let err = parse_config_str("omega = 1\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 1, .. }));
        let err = parse_config_str("[trap]\nomega = 1\nomega = 2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn notes_section_is_ignored() {
        let cfg = parse_config_str("# preset\n[notes]\nsource = anything\nfoo = 1\n[trap]\nomega = 1\nn_atoms = 2\n").unwrap();
        assert_eq!(cfg, RunConfig::with_required(1.0, 2));
    }

    #[test]
    fn bloch_and_angles_conflict() {
        let err = parse_config_str("[trap]\nomega = 1\nn_atoms = 2\n[initial]\njx = 0.5\ntheta = 1\n").unwrap_err();
        assert!(err.to_string().contains("either"));
    }

    #[test]
    fn quantum_routes_respect_dimension_cap() {
        let err = parse_config_str("[run]\nroute = master\n[trap]\nomega = 1\nn_atoms = 10000\n").unwrap_err();
        assert!(err.to_string().contains("n_atoms"));
        assert!(parse_config_str("[run]\nroute = meanfield\n[trap]\nomega = 1\nn_atoms = 10000\n").is_ok());
    }

    #[test]
    fn angles_of_bloch_vector() {
        let (th, ph) = InitialState::Bloch(BlochState::new(0.0, 0.0, 2.0)).angles();
        assert!((th - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((ph - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let b = InitialState::Coherent { theta: 0.3, phi: 1.2 }.bloch(5.0);
        let (th, ph) = InitialState::Bloch(b).angles();
        assert!((th - 0.3).abs() < 1e-12 && (ph - 1.2).abs() < 1e-12);
    }

    fn finite(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
        prop_oneof![lo..hi, Just(0.0), Just(1e-300), Just(0.1)]
    }

    fn any_config() -> impl Strategy<Value = RunConfig> {
        (
            (0.1f64..100.0, 1u32..400, finite(0.0, 1.0), finite(0.0, 1.0), finite(-1.0, 1.0)),
            (finite(-1.0, 1.0), finite(0.0, 1e4), finite(0.0, 10.0), finite(-5.0, 5.0)),
            (0usize..4, 0usize..4, any::<bool>(), any::<u64>(), 1usize..1000, prop::option::of(1usize..100)),
            (prop::bool::ANY, -3.0f64..3.0, -3.0f64..3.0, prop::option::of(0.0f64..1.0)),
            prop::collection::vec(0usize..3, 1..4),
        )
            .prop_map(|(t, c, run, init, fmts)| {
                let mut cfg = RunConfig::with_required(t.0, t.1);
                cfg.trap.kappa = t.2;
                cfg.trap.eta = t.3;
                cfg.trap.lambda = t.4;
                cfg.cavity.xi = c.0;
                cfg.cavity.n_photons = c.1;
                cfg.cavity.drive = c.2;
                cfg.cavity.detuning = c.3;
                cfg.route = Route::ALL[run.0];
                cfg.variant = VariantTag::ALL[run.1];
                cfg.double_count_guard = run.2;
                cfg.stochastic.seed = run.3;
                cfg.stochastic.trajectories = run.4;
                cfg.integrator.stride = run.5;
                cfg.initial = if init.0 {
                    InitialState::Coherent { theta: init.1, phi: init.2 }
                } else {
                    InitialState::Bloch(BlochState::new(init.1 * 0.1, init.2 * 0.1, 0.0))
                };
                cfg.stochastic.gamma_meas = init.3;
                cfg.formats = fmts.into_iter().map(|i| Format::ALL[i]).collect();
                cfg.out_dir = Some(PathBuf::from("out/dir"));
                cfg
            })
    }

    proptest! {
        #[test]
        fn echo_round_trips(cfg in any_config()) {
            let parsed = parse_config_str(&cfg.to_ini());
            match (cfg.validate(), parsed) {
                (Ok(()), Ok(p)) => prop_assert_eq!(p, cfg),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "validity mismatch: {a:?} vs {b:?}"),
            }
        }
    }
}
