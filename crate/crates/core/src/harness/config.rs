//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! protocols = pdd, cp, bod(cap=3)
//! truncation = drop_smallest(3)
//! samples = 50
//! ```
//!
//! Every key has a per-experiment default; unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::TruncationPolicy;
use crate::metrics::FidelityConvention;
use crate::spectra::{khz, GaussianComponent, SpectralDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Design,
    Scan,
    Reconstruct,
    Table,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Design => "design",
            Experiment::Scan => "scan",
            Experiment::Reconstruct => "reconstruct",
            Experiment::Table => "table",
        })
    }
}

/// Documented keys with a one-line description, shown by `--help`.
pub const KEYS: &[(&str, &str)] = &[
    ("protocols", "comma list of pdd, cp, bod(cap=3|5, eps=E, n=N, label=L); pdd/cp accept count, tau_min_us, tau_max_us"),
    ("flips", "sign flips M per sequence (default 32)"),
    ("tau_min_us", "shortest PDD/CP interpulse duration in microseconds (default 1)"),
    ("tau_max_us", "longest PDD/CP interpulse duration in microseconds (default 5)"),
    ("count", "number of linearly spaced PDD/CP durations (default 32)"),
    ("bod_tau1_us", "first BOD duration in microseconds (default 5)"),
    ("bod_eps", "BOD band overlap in [0, 1) (default 0.5)"),
    ("bod_cap", "BOD harmonic cap, 3 or 5 (default 3)"),
    ("bod_equalize", "scale BOD amplitudes to equal main peaks (default true)"),
    ("strict_counts", "abort when an explicit BOD n differs from the stopping rule (default false)"),
    ("spectrum", "'+'-joined gaussian(power=HZ2, nu_khz=F, sigma_khz=W) terms"),
    ("spectrum_file", "two-column CSV omega_rad_s,s overriding 'spectrum'"),
    ("scan_start_khz", "first scan center frequency (default 50)"),
    ("scan_stop_khz", "last scan center frequency (default 550)"),
    ("scan_step_khz", "scan step (default 10)"),
    ("scan_power", "scan Gaussian power N in Hz^2 (default 1e8)"),
    ("scan_sigma_khz", "scan Gaussian width (default 30)"),
    ("delta_omega", "grid spacing in rad/s (default 6e3)"),
    ("omega_max", "grid upper end in rad/s (default 2e7)"),
    ("methods", "comma list of estimators: ls, nnls, pinv"),
    ("truncation", "LS policy: none | drop_smallest(r) | keep_fraction(f) | threshold(rel)"),
    ("nnls_truncation", "NNLS policy, same syntax (default none)"),
    ("clip", "zero negative LS samples before scoring (default true)"),
    ("pinv_baseline", "reconstruct: also emit the pseudoinverse estimate per protocol (default true)"),
    ("measurement", "exact | montecarlo"),
    ("samples", "comma list of realizations per filter"),
    ("integrator", "monte-carlo shot integrator: spectral | trapezoid"),
    ("dt", "trapezoid integrator time step in seconds (default automatic)"),
    ("repetitions", "independent repetitions per cell (default 1)"),
    ("seed", "base seed; repetition r uses seed + r (default 1)"),
    ("fidelity", "cosine | literal (default cosine)"),
    ("plot_omega_max_khz", "upper frequency of reconstruct CSV rows (default 600)"),
];

/// `name(key=value, ...)` as written in the config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolSpec {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl ProtocolSpec {
    pub fn param<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::config(format!("protocol {}: bad value {v:?} for {key}", self.name))),
        }
    }

    pub fn check_params(&self, allowed: &[&str]) -> Result<()> {
        for key in self.params.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::config(format!(
                    "protocol {}: unknown parameter {key:?} (allowed: {})",
                    self.name,
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }
}

impl FromStr for ProtocolSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, body) = match s.split_once('(') {
            None => (s, ""),
            Some((name, rest)) => {
                let body = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::config(format!("unbalanced parentheses in {s:?}")))?;
                (name, body)
            }
        };
        let name = name.trim().to_ascii_lowercase();
        if name.is_empty() {
            return Err(Error::config(format!("empty protocol name in {s:?}")));
        }
        let mut params = BTreeMap::new();
        for item in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::config(format!("expected key=value in {s:?}, got {item:?}")))?;
            params.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
        Ok(Self { name, params })
    }
}

impl fmt::Display for ProtocolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            let items: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "({})", items.join(", "))?;
        }
        Ok(())
    }
}

/// Splits on commas that are not inside parentheses.
fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur);
    out.into_iter().map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect()
}

fn parse_spectrum(s: &str) -> Result<SpectralDensity> {
    let mut components = Vec::new();
    for term in s.split('+').map(str::trim).filter(|t| !t.is_empty()) {
        let spec: ProtocolSpec = term.parse()?;
        if spec.name != "gaussian" {
            return Err(Error::config(format!("unknown spectrum term {:?}", spec.name)));
        }
        spec.check_params(&["power", "nu_khz", "sigma_khz"])?;
        let get = |k: &str| -> Result<f64> {
            spec.param(k)?.ok_or_else(|| Error::config(format!("gaussian term needs {k}")))
        };
        components.push(GaussianComponent::new(get("power")?, khz(get("nu_khz")?), khz(get("sigma_khz")?))?);
    }
    SpectralDensity::gaussian_mixture(components)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementKind {
    Exact,
    Montecarlo,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub protocols: Vec<ProtocolSpec>,
    pub flips: usize,
    pub tau_min_us: f64,
    pub tau_max_us: f64,
    pub count: usize,
    pub bod_tau1_us: f64,
    pub bod_eps: f64,
    pub bod_cap: u32,
    pub bod_equalize: bool,
    pub strict_counts: bool,
    pub spectrum: SpectralDensity,
    pub spectrum_label: String,
    pub scan_start_khz: f64,
    pub scan_stop_khz: f64,
    pub scan_step_khz: f64,
    pub scan_power: f64,
    pub scan_sigma_khz: f64,
    pub delta_omega: f64,
    pub omega_max: f64,
    pub methods: Vec<String>,
    pub truncation: TruncationPolicy,
    pub nnls_truncation: TruncationPolicy,
    pub clip: bool,
    pub pinv_baseline: bool,
    pub measurement: MeasurementKind,
    pub samples: Vec<usize>,
    pub integrator: String,
    pub dt: Option<f64>,
    pub repetitions: usize,
    pub seed: u64,
    pub fidelity: FidelityConvention,
    pub plot_omega_max_khz: f64,
    /// Raw `key = value` pairs as read, for the report.
    pub echo: BTreeMap<String, String>,
    pub source: Option<PathBuf>,
}

const DEFAULT_SPECTRUM: &str =
    "gaussian(power=1e8, nu_khz=140, sigma_khz=30) + gaussian(power=5e7, nu_khz=260, sigma_khz=30)";

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let protocols = match experiment {
            Experiment::Design => "bod",
            Experiment::Scan => "pdd, cp, bod(cap=3), bod(cap=5)",
            Experiment::Reconstruct => "pdd, cp, bod(cap=3)",
            Experiment::Table => "pdd, cp, bod(eps=0.75, n=34), bod(eps=0.5, n=17), bod(eps=0.25, n=11)",
        };
        let (methods, truncation, measurement, samples, repetitions) = match experiment {
            Experiment::Design | Experiment::Scan => (vec!["ls"], TruncationPolicy::None, MeasurementKind::Exact, vec![50], 1),
            Experiment::Reconstruct => {
                (vec!["ls"], TruncationPolicy::DropSmallest(3), MeasurementKind::Montecarlo, vec![50], 1)
            }
            Experiment::Table => (
                vec!["ls", "nnls"],
                TruncationPolicy::KeepFraction(0.5),
                MeasurementKind::Montecarlo,
                vec![10, 50, 200],
                250,
            ),
        };
        Self {
            experiment,
            protocols: split_top_level(protocols).iter().map(|p| p.parse().expect("valid default")).collect(),
            flips: 32,
            tau_min_us: 1.0,
            tau_max_us: 5.0,
            count: 32,
            bod_tau1_us: 5.0,
            bod_eps: 0.5,
            bod_cap: 3,
            bod_equalize: true,
            strict_counts: false,
            spectrum: parse_spectrum(DEFAULT_SPECTRUM).expect("valid default"),
            spectrum_label: DEFAULT_SPECTRUM.to_string(),
            scan_start_khz: 50.0,
            scan_stop_khz: 550.0,
            scan_step_khz: 10.0,
            scan_power: 1e8,
            scan_sigma_khz: 30.0,
            delta_omega: 6e3,
            omega_max: 2e7,
            methods: methods.into_iter().map(String::from).collect(),
            truncation,
            nnls_truncation: TruncationPolicy::None,
            clip: true,
            pinv_baseline: true,
            measurement,
            samples,
            integrator: "spectral".into(),
            dt: None,
            repetitions,
            seed: 1,
            fidelity: FidelityConvention::Cosine,
            plot_omega_max_khz: 600.0,
            echo: BTreeMap::new(),
            source: None,
        }
    }

    pub fn from_file(experiment: Experiment, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(experiment, &text)?;
        cfg.source = Some(path.to_path_buf());
        if let Some(file) = cfg.echo.get("spectrum_file").cloned() {
            let resolved = path.parent().map(|p| p.join(&file)).unwrap_or_else(|| PathBuf::from(&file));
            cfg.spectrum = SpectralDensity::from_csv(&resolved)?;
            cfg.spectrum_label = format!("file:{file}");
        }
        Ok(cfg)
    }

    pub fn parse(experiment: Experiment, text: &str) -> Result<Self> {
        let mut cfg = Self::defaults(experiment);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value, got {line:?}", lineno + 1)))?;
            let (key, value) = (key.trim().to_ascii_lowercase(), value.trim().to_string());
            if cfg.echo.insert(key.clone(), value.clone()).is_some() {
                return Err(Error::config(format!("line {}: duplicate key {key:?}", lineno + 1)));
            }
            cfg.set(&key, &value).map_err(|e| match e {
                Error::Config(msg) => Error::config(format!("line {}: {msg}", lineno + 1)),
                other => Error::config(format!("line {}: {other}", lineno + 1)),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::config(format!("bad value {v:?} for {key}")))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(Error::config(format!("bad boolean {v:?} for {key}"))),
            }
        }
        match key {
            "protocols" => {
                self.protocols = split_top_level(value).iter().map(|p| p.parse()).collect::<Result<_>>()?
            }
            "flips" => self.flips = num(key, value)?,
            "tau_min_us" => self.tau_min_us = num(key, value)?,
            "tau_max_us" => self.tau_max_us = num(key, value)?,
            "count" => self.count = num(key, value)?,
            "bod_tau1_us" => self.bod_tau1_us = num(key, value)?,
            "bod_eps" => self.bod_eps = num(key, value)?,
            "bod_cap" => self.bod_cap = num(key, value)?,
            "bod_equalize" => self.bod_equalize = flag(key, value)?,
            "strict_counts" => self.strict_counts = flag(key, value)?,
            "spectrum" => {
                self.spectrum = parse_spectrum(value)?;
                self.spectrum_label = value.to_string();
            }
            // resolved relative to the config file in `from_file`
            "spectrum_file" => {}
            "scan_start_khz" => self.scan_start_khz = num(key, value)?,
            "scan_stop_khz" => self.scan_stop_khz = num(key, value)?,
            "scan_step_khz" => self.scan_step_khz = num(key, value)?,
            "scan_power" => self.scan_power = num(key, value)?,
            "scan_sigma_khz" => self.scan_sigma_khz = num(key, value)?,
            "delta_omega" => self.delta_omega = num(key, value)?,
            "omega_max" => self.omega_max = num(key, value)?,
            "methods" => self.methods = split_top_level(value).into_iter().map(|m| m.to_ascii_lowercase()).collect(),
            "truncation" => self.truncation = value.parse()?,
            "nnls_truncation" => self.nnls_truncation = value.parse()?,
            "clip" => self.clip = flag(key, value)?,
            "pinv_baseline" => self.pinv_baseline = flag(key, value)?,
            "measurement" => {
                self.measurement = match value {
                    "exact" => MeasurementKind::Exact,
                    "montecarlo" => MeasurementKind::Montecarlo,
                    _ => return Err(Error::config(format!("measurement must be exact or montecarlo, got {value:?}"))),
                }
            }
            "samples" => {
                self.samples = split_top_level(value).iter().map(|s| num(key, s)).collect::<Result<_>>()?
            }
            "integrator" => self.integrator = value.to_ascii_lowercase(),
            "dt" => self.dt = Some(num(key, value)?),
            "repetitions" => self.repetitions = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "fidelity" => self.fidelity = value.parse()?,
            "plot_omega_max_khz" => self.plot_omega_max_khz = num(key, value)?,
            _ => {
                let known: Vec<&str> = KEYS.iter().map(|(k, _)| *k).collect();
                return Err(Error::config(format!("unknown key {key:?}; known keys: {}", known.join(", "))));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        if self.protocols.is_empty() {
            return Err(Error::config("no protocols configured"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("no methods configured"));
        }
        if self.samples.is_empty() || self.samples.contains(&0) {
            return Err(Error::config("samples must be a non-empty list of positive counts"));
        }
        if !(self.tau_min_us > 0.0 && self.tau_max_us >= self.tau_min_us) || self.count == 0 {
            return Err(Error::config("need 0 < tau_min_us <= tau_max_us and count >= 1"));
        }
        if !(self.scan_step_khz > 0.0 && self.scan_stop_khz >= self.scan_start_khz && self.scan_start_khz > 0.0) {
            return Err(Error::config("scan range must be positive and increasing"));
        }
        if !(self.delta_omega > 0.0 && self.omega_max > self.delta_omega) {
            return Err(Error::config("need 0 < delta_omega < omega_max"));
        }
        Ok(())
    }

    /// Scan centers in rad/s.
    pub fn scan_centers(&self) -> Vec<f64> {
        let steps = ((self.scan_stop_khz - self.scan_start_khz) / self.scan_step_khz + 1e-9).floor() as usize;
        (0..=steps).map(|i| khz(self.scan_start_khz + i as f64 * self.scan_step_khz)).collect()
    }
}
