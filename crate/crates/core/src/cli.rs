//! Batch front end: a JSON scene configuration in, JSON and CSV reports out.
//!
//! The configuration schema is documented in `docs/config-schema.md`. Exit
//! codes: 0 when every gating verification passes, 1 when one fails, 2 for
//! configuration errors, 3 for numerical non-convergence.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::{assemble, Assembly, AssemblyOptions, Attribution, ClusterModel, StrengthMode};
use crate::crosssec::{
    bound_suite, check_bounds, BoundOptions, BoundVerdicts, CrossSectionReport, SuiteOptions, SuiteOutcome,
};
use crate::error::Error;
use crate::fields::{PointScatterer, PointSource};
use crate::host_sphere::{HostSphere, Truncation};
use crate::media::Medium;
use crate::quadrature::{SphericalGrid, Vec3};
use crate::theorems::{
    low_frequency_sweep, verify_flux_consistency, verify_flux_limit, verify_host_surface, verify_oscs,
    verify_pointlike_overall, AmplitudeScaling, HostQuadrature, SweepTable, Tolerances, VerificationResult,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Names accepted by `verify:<name>` and `verify --name`.
pub const VERIFY_NAMES: &[&str] = &[
    "all",
    "flux_consistency",
    "oscs",
    "pointlike_overall",
    "host_surface",
    "flux_limit",
];

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

// ---------------------------------------------------------------- config

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<ComplexValue> for Complex64 {
    fn from(c: ComplexValue) -> Self {
        Complex64::new(c.re, c.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub density_kg_m3: f64,
    pub compressibility_pa_inv: f64,
    #[serde(default)]
    pub viscosity_pa_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostConfig {
    #[serde(default)]
    pub center_m: [f64; 3],
    pub radius_m: f64,
    pub medium: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub position_m: [f64; 3],
    pub amplitude_pa_m: ComplexValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererConfig {
    pub position_m: [f64; 3],
    #[serde(default = "zero_complex")]
    pub strength_pa_m: ComplexValue,
    #[serde(default)]
    pub monopole_coefficient_m: Option<ComplexValue>,
}

fn zero_complex() -> ComplexValue {
    ComplexValue { re: 0.0, im: 0.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrengthsConfig {
    #[default]
    Fixed,
    SelfConsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Highest frequency; defaults to `omega_rad_s`.
    pub omega_from_rad_s: Option<f64>,
    /// Lowest frequency; defaults to `omega_rad_s / 100`.
    pub omega_to_rad_s: Option<f64>,
    pub points: usize,
    pub scaling: AmplitudeScaling,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            omega_from_rad_s: None,
            omega_to_rad_s: None,
            points: 5,
            scaling: AmplitudeScaling::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub max_extent: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let d = SuiteOptions::default();
        SuiteConfig {
            n_min: d.n_min,
            n_max: d.n_max,
            max_extent: d.max_extent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    /// Fixed truncation order; automatic when absent.
    pub l_trunc: Option<usize>,
    /// Far-field grid polar nodes; chosen from the truncation when absent.
    pub grid_n_theta: Option<usize>,
    /// Far-field grid azimuthal nodes; `2·grid_n_theta` when absent.
    pub grid_n_phi: Option<usize>,
    pub flux_limit_k0r: Vec<f64>,
    /// Radii of the flux-consistency check, as multiples of the enclosing radius.
    pub flux_consistency_radius_factors: [f64; 2],
    pub host_quadrature: HostQuadrature,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub strengths: StrengthsConfig,
    pub self_consistent_tolerance: f64,
    pub self_consistent_max_iterations: usize,
    pub attribution: Attribution,
    pub sweep: SweepConfig,
    pub bounds: BoundOptions,
    pub suite: SuiteConfig,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            l_trunc: None,
            grid_n_theta: None,
            grid_n_phi: None,
            flux_limit_k0r: vec![100.0, 200.0, 400.0],
            flux_consistency_radius_factors: [1.5, 3.0],
            host_quadrature: HostQuadrature::default(),
            tolerances: Tolerances::default(),
            seed: 42,
            strengths: StrengthsConfig::Fixed,
            self_consistent_tolerance: 1e-13,
            self_consistent_max_iterations: 500,
            attribution: Attribution::default(),
            sweep: SweepConfig::default(),
            bounds: BoundOptions::default(),
            suite: SuiteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub schema_version: u32,
    pub media: BTreeMap<String, MediumConfig>,
    pub host: HostConfig,
    pub exterior: String,
    pub source: SourceConfig,
    #[serde(default)]
    pub scatterers: Vec<ScattererConfig>,
    pub omega_rad_s: f64,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<String>,
}

fn default_tasks() -> Vec<String> {
    vec!["report".to_string()]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Task {
    Report,
    Verify(String),
    Sweep,
    Bounds(usize),
}

impl Task {
    pub fn parse(s: &str) -> std::result::Result<Task, String> {
        match s.split_once(':') {
            None if s == "report" => Ok(Task::Report),
            None if s == "sweep" => Ok(Task::Sweep),
            Some(("verify", name)) if VERIFY_NAMES.contains(&name) => Ok(Task::Verify(name.to_string())),
            Some(("verify", name)) => Err(format!(
                "unknown verification '{name}' (expected one of {})",
                VERIFY_NAMES.join(", ")
            )),
            Some(("bounds", n)) => match n.parse::<usize>() {
                Ok(t) if t > 0 => Ok(Task::Bounds(t)),
                _ => Err(format!("bounds task needs a positive trial count, got '{n}'")),
            },
            _ => Err(format!(
                "unknown task '{s}' (expected report, verify:<name>, sweep or bounds:<trials>)"
            )),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Task::Report => write!(f, "report"),
            Task::Verify(name) => write!(f, "verify:{name}"),
            Task::Sweep => write!(f, "sweep"),
            Task::Bounds(n) => write!(f, "bounds:{n}"),
        }
    }
}

/// Configuration error anchored at a line and column of the input file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ConfigError {
    fn at(text: &str, path: &[&str], message: impl Into<String>) -> Self {
        let (line, column) = locate(text, path);
        ConfigError {
            line,
            column,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

/// Position of the last of `needles`, each searched after the previous one.
/// Falls back to the last position found, or the start of the file.
fn locate(text: &str, needles: &[&str]) -> (usize, usize) {
    let mut pos = 0;
    for n in needles {
        match text[pos..].find(n) {
            Some(i) => pos += i,
            None => break,
        }
        if needles.last() != Some(n) {
            pos += n.len();
        }
    }
    let before = &text[..pos];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(pos, |i| pos - i - 1) + 1;
    (line, column)
}

fn quoted(s: &str) -> String {
    format!("\"{s}\"")
}

/// Parses and validates a configuration; returns it with its effective form.
pub fn parse_config(text: &str) -> std::result::Result<SceneConfig, ConfigError> {
    let cfg: SceneConfig = serde_json::from_str(text).map_err(|e| ConfigError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    validate_config(&cfg, text)?;
    Ok(cfg)
}

fn validate_config(cfg: &SceneConfig, text: &str) -> std::result::Result<(), ConfigError> {
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::at(
            text,
            &[&quoted("schema_version")],
            format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                cfg.schema_version
            ),
        ));
    }
    for (name, m) in &cfg.media {
        let key = quoted(name);
        Medium::new(m.density_kg_m3, m.compressibility_pa_inv, m.viscosity_pa_s)
            .map_err(|e| ConfigError::at(text, &["\"media\"", &key], format!("medium '{name}': {e}")))?;
    }
    if !cfg.media.contains_key(&cfg.host.medium) {
        return Err(ConfigError::at(
            text,
            &["\"host\"", "\"medium\""],
            format!("host medium '{}' is not in the media table", cfg.host.medium),
        ));
    }
    if !cfg.media.contains_key(&cfg.exterior) {
        return Err(ConfigError::at(
            text,
            &["\"exterior\""],
            format!("exterior medium '{}' is not in the media table", cfg.exterior),
        ));
    }
    for t in &cfg.tasks {
        Task::parse(t).map_err(|m| ConfigError::at(text, &["\"tasks\"", &quoted(t)], m))?;
    }
    let n = &cfg.numerics;
    if let Some(l) = n.l_trunc {
        if !(1..=crate::specfun::MAX_ORDER - 2).contains(&l) {
            return Err(ConfigError::at(
                text,
                &["\"l_trunc\""],
                format!("l_trunc {l} outside 1..={}", crate::specfun::MAX_ORDER - 2),
            ));
        }
    }
    if n.flux_limit_k0r.len() != 3 || n.flux_limit_k0r.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ConfigError::at(
            text,
            &["\"flux_limit_k0r\""],
            "flux_limit_k0r needs three increasing values",
        ));
    }
    if n.flux_consistency_radius_factors.iter().any(|f| !(*f > 1.0)) {
        return Err(ConfigError::at(
            text,
            &["\"flux_consistency_radius_factors\""],
            "flux consistency radius factors must exceed 1",
        ));
    }
    if n.sweep.points < 4 {
        return Err(ConfigError::at(
            text,
            &["\"sweep\"", "\"points\""],
            "a sweep needs at least four points",
        ));
    }
    if n.suite.n_min < 2 || n.suite.n_max < n.suite.n_min {
        return Err(ConfigError::at(
            text,
            &["\"suite\""],
            "suite sizes must satisfy 2 ≤ n_min ≤ n_max",
        ));
    }
    let model = build_model(cfg).map_err(|e| {
        let anchor: Vec<String> = match &e {
            Error::Domain(m) if m.contains("scatterer") => {
                let idx = m.split_whitespace().find_map(|w| w.parse::<usize>().ok()).unwrap_or(0);
                let mut v = vec![quoted("scatterers")];
                v.extend(std::iter::repeat_n(quoted("position_m"), idx + 1));
                v
            }
            Error::Domain(m) if m.contains("source") => vec![quoted("source")],
            Error::Domain(m) if m.contains("frequency") => vec![quoted("omega_rad_s")],
            Error::Domain(m) if m.contains("exterior") => vec![quoted("exterior")],
            _ => vec![quoted("host")],
        };
        let refs: Vec<&str> = anchor.iter().map(String::as_str).collect();
        ConfigError::at(text, &refs, e.to_string())
    })?;
    if n.strengths == StrengthsConfig::SelfConsistent {
        if let Some(i) = model.scatterers.iter().position(|s| s.monopole_coefficient.is_none()) {
            let mut v = vec![quoted("scatterers")];
            v.extend(std::iter::repeat_n(quoted("position_m"), i + 1));
            let refs: Vec<&str> = v.iter().map(String::as_str).collect();
            return Err(ConfigError::at(
                text,
                &refs,
                format!("self-consistent strengths need monopole_coefficient_m for scatterer {i}"),
            ));
        }
    }
    Ok(())
}

fn medium(cfg: &SceneConfig, name: &str) -> crate::Result<Medium> {
    let m = cfg
        .media
        .get(name)
        .ok_or_else(|| Error::Domain(format!("medium '{name}' is not defined")))?;
    Medium::new(m.density_kg_m3, m.compressibility_pa_inv, m.viscosity_pa_s)
}

pub fn build_model(cfg: &SceneConfig) -> crate::Result<ClusterModel> {
    let v = |p: [f64; 3]| Vec3::new(p[0], p[1], p[2]);
    let host = HostSphere::new(v(cfg.host.center_m), cfg.host.radius_m, medium(cfg, &cfg.host.medium)?)?;
    let source = PointSource::new(v(cfg.source.position_m), cfg.source.amplitude_pa_m.into());
    let scatterers = cfg
        .scatterers
        .iter()
        .map(|s| {
            let p = PointScatterer::new(v(s.position_m), s.strength_pa_m.into());
            match s.monopole_coefficient_m {
                Some(f) => p.with_monopole(f.into()),
                None => p,
            }
        })
        .collect();
    ClusterModel::new(host, medium(cfg, &cfg.exterior)?, source, scatterers, cfg.omega_rad_s)
}

pub fn assembly_options(cfg: &SceneConfig) -> crate::Result<AssemblyOptions> {
    let n = &cfg.numerics;
    let grid = match n.grid_n_theta {
        Some(t) => Some(std::sync::Arc::new(SphericalGrid::new(
            t,
            n.grid_n_phi.unwrap_or(2 * t),
        )?)),
        None => None,
    };
    Ok(AssemblyOptions {
        truncation: n.l_trunc.map_or(Truncation::Auto, Truncation::Fixed),
        grid,
        strengths: match n.strengths {
            StrengthsConfig::Fixed => StrengthMode::Fixed,
            StrengthsConfig::SelfConsistent => StrengthMode::SelfConsistent {
                tol: n.self_consistent_tolerance,
                max_iter: n.self_consistent_max_iterations,
            },
        },
        attribution: n.attribution,
    })
}

/// SHA-256 of the canonical JSON of the effective configuration.
pub fn config_hash(cfg: &SceneConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("configuration serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

// ---------------------------------------------------------------- running

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub far_field_n_theta: usize,
    pub far_field_n_phi: usize,
    pub far_field_nodes: usize,
    pub host_quadrature: HostQuadrature,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub kind: &'static str,
    pub l_trunc: usize,
    pub n_theta: usize,
    pub sigma: f64,
    pub sigma_c: f64,
    pub rel_change_sigma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub l_used: usize,
    pub strengths: Vec<Complex64>,
    pub cross_sections: CrossSectionReport,
    /// Same field, with the host's re-scattering of each wave credited to that scatterer.
    pub cross_sections_alternative: CrossSectionReport,
    pub bounds: BoundVerdicts,
    pub host_series_tail: f64,
    pub host_series_condition: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash_sha256: String,
    pub timestamp_unix_s: u64,
    pub effective_config: SceneConfig,
    pub grids: Option<GridInfo>,
    pub model: Option<ModelSummary>,
    pub convergence: Vec<ConvergenceRow>,
    pub verifications: Vec<VerificationResult>,
    pub sweep: Option<SweepTable>,
    pub bounds_suite: Option<SuiteOutcome>,
    pub exit_code: i32,
    pub status: String,
}

/// What to run, after command-line overrides.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub tasks: Vec<Task>,
    pub sweep_omegas: Option<Vec<f64>>,
}

impl RunPlan {
    pub fn from_config(cfg: &SceneConfig) -> Self {
        RunPlan {
            tasks: cfg.tasks.iter().filter_map(|t| Task::parse(t).ok()).collect(),
            sweep_omegas: None,
        }
    }
}

/// Outcome of a run: the report, the CSV artifacts and the exit code.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub files: BTreeMap<String, String>,
    pub exit_code: i32,
    pub message: String,
}

struct Progress {
    quiet: bool,
}

impl Progress {
    fn say(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

/// Geometric sequence from `from` down to `to` (order normalized to decreasing).
pub fn geometric_omegas(from: f64, to: f64, points: usize) -> Vec<f64> {
    let (hi, lo) = if from >= to { (from, to) } else { (to, from) };
    let step = (lo / hi).ln() / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                lo
            } else {
                hi * (step * i as f64).exp()
            }
        })
        .collect()
}

fn numerical_exit(name: &str, e: &Error) -> (i32, String) {
    if e.is_numerical() {
        (EXIT_NUMERICAL, format!("{name}: numerical non-convergence: {e}"))
    } else {
        (
            EXIT_CONFIG,
            format!("{name}: not applicable to this configuration: {e}"),
        )
    }
}

/// Self-consistent scatterers with `Im f = k₀|f|²` exchange no net power.
fn passive_scatterers(asm: &Assembly, cfg: &SceneConfig) -> bool {
    let k0 = asm.exterior_dm.k.re;
    cfg.numerics.strengths == StrengthsConfig::SelfConsistent
        && asm.model.scatterers.iter().all(|s| {
            s.monopole_coefficient
                .is_some_and(|f| (f.im - k0 * f.norm_sqr()).abs() <= 1e-12 * f.norm().max(k0 * f.norm_sqr()))
        })
}

fn verification_list(name: &str, asm: &Assembly, cfg: &SceneConfig) -> Vec<&'static str> {
    let lossless = asm.host_dm.is_lossless();
    match name {
        "all" => {
            let mut v = vec!["host_surface"];
            if lossless {
                // The overall-SCS formula counts the host source only.
                if passive_scatterers(asm, cfg) {
                    v.push("oscs");
                }
                v.push("pointlike_overall");
            }
            if asm.n_members() >= 2 {
                v.push("flux_limit");
            }
            v
        }
        "flux_consistency" => vec![],
        other => VERIFY_NAMES.iter().copied().filter(|n| *n == other).collect(),
    }
}

fn run_verification(name: &str, asm: &Assembly, cfg: &SceneConfig) -> crate::Result<Vec<VerificationResult>> {
    let n = &cfg.numerics;
    let tol = &n.tolerances;
    match name {
        "oscs" => Ok(vec![verify_oscs(asm, tol)?]),
        "pointlike_overall" => Ok(vec![verify_pointlike_overall(asm, tol)?]),
        "host_surface" => verify_host_surface(asm, &n.host_quadrature, tol),
        "flux_limit" => Ok(vec![verify_flux_limit(asm, &n.flux_limit_k0r, tol)?]),
        other => Err(Error::Domain(format!("unknown verification '{other}'"))),
    }
}

fn convergence_table(
    model: &ClusterModel,
    opts: &AssemblyOptions,
    asm: &Assembly,
) -> crate::Result<Vec<ConvergenceRow>> {
    let l0 = asm.l_used();
    let t0 = asm.grid.n_theta;
    let mut specs: Vec<(&'static str, usize, usize)> =
        [0, 4, 8, 16].iter().map(|d| ("truncation", l0 + d, t0)).collect();
    specs.extend([8, 16].iter().map(|d| ("grid", l0, t0 + d)));
    let rows: Vec<(f64, f64)> = specs
        .par_iter()
        .map(|(_, l, t)| {
            let mut o = opts.clone();
            o.truncation = Truncation::Fixed((*l).min(crate::specfun::MAX_ORDER - 2));
            o.grid = Some(std::sync::Arc::new(SphericalGrid::new(*t, 2 * t)?));
            let a = assemble(model, &o)?;
            let r = CrossSectionReport::from_patterns(&a.patterns)?;
            Ok((r.sigma, r.sigma_c))
        })
        .collect::<crate::Result<_>>()?;
    let reference = rows[3].0;
    Ok(specs
        .iter()
        .zip(rows)
        .map(|((kind, l, t), (sigma, sigma_c))| ConvergenceRow {
            kind,
            l_trunc: *l,
            n_theta: *t,
            sigma,
            sigma_c,
            rel_change_sigma: (sigma - reference).abs() / reference.abs().max(f64::MIN_POSITIVE),
        })
        .collect())
}

/// Runs `plan` on a validated configuration. Never touches the filesystem.
pub fn execute(cfg: &SceneConfig, plan: &RunPlan, quiet: bool) -> RunOutput {
    let progress = Progress { quiet };
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_hash_sha256: config_hash(cfg),
        timestamp_unix_s: timestamp,
        effective_config: cfg.clone(),
        grids: None,
        model: None,
        convergence: Vec::new(),
        verifications: Vec::new(),
        sweep: None,
        bounds_suite: None,
        exit_code: EXIT_OK,
        status: String::new(),
    };
    let mut files = BTreeMap::new();
    let (code, message) = match execute_inner(cfg, plan, &progress, &mut report, &mut files) {
        Ok(()) => {
            let failed: Vec<&str> = report
                .verifications
                .iter()
                .filter(|v| v.is_gating_failure())
                .map(|v| v.name.as_str())
                .collect();
            let inconclusive: Vec<&str> = report
                .verifications
                .iter()
                .filter(|v| v.inconclusive && !v.exploratory)
                .map(|v| v.name.as_str())
                .collect();
            let sweep_failed = report
                .sweep
                .as_ref()
                .is_some_and(|s| !sweep_passes(s, &cfg.numerics.tolerances));
            let bounds_failed = report.bounds_suite.as_ref().is_some_and(|b| !b.summary.passed());
            if !inconclusive.is_empty() {
                (
                    EXIT_NUMERICAL,
                    format!("numerical non-convergence in {}", inconclusive.join(", ")),
                )
            } else if !failed.is_empty() || sweep_failed || bounds_failed {
                let mut names: Vec<String> = failed.iter().map(|s| s.to_string()).collect();
                if sweep_failed {
                    names.push("sweep".into());
                }
                if bounds_failed {
                    names.push("bounds".into());
                }
                (EXIT_FAILED, format!("failed: {}", names.join(", ")))
            } else {
                (EXIT_OK, "all gating verifications passed".to_string())
            }
        }
        Err((code, msg)) => (code, msg),
    };
    report.exit_code = code;
    report.status = message.clone();
    RunOutput {
        report,
        files,
        exit_code: code,
        message,
    }
}

/// Sweep verdict plus, for a lossless host, the point-scatterer surface form at every ω.
pub fn sweep_passes(s: &SweepTable, tol: &Tolerances) -> bool {
    s.verdict
        && s.rows
            .iter()
            .all(|r| r.corrected_residual.is_none_or(|c| c < tol.corollary))
}

type Failure = (i32, String);

fn execute_inner(
    cfg: &SceneConfig,
    plan: &RunPlan,
    progress: &Progress,
    report: &mut RunReport,
    files: &mut BTreeMap<String, String>,
) -> std::result::Result<(), Failure> {
    let model = build_model(cfg).map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    let opts = assembly_options(cfg).map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    let n = &cfg.numerics;

    let stage = format!(
        "assembly for {}",
        plan.tasks.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
    );
    progress.say("assembling cluster");
    let asm = assemble(&model, &opts).map_err(|e| numerical_exit(&stage, &e))?;
    let cs = CrossSectionReport::from_patterns(&asm.patterns).map_err(|e| numerical_exit(&stage, &e))?;
    let alt_patterns = asm
        .patterns_under(match asm.attribution {
            Attribution::HostOwnsScattering => Attribution::ScattererOwnsRescattering,
            Attribution::ScattererOwnsRescattering => Attribution::HostOwnsScattering,
        })
        .map_err(|e| numerical_exit(&stage, &e))?;
    let cs_alt = CrossSectionReport::from_patterns(&alt_patterns).map_err(|e| numerical_exit(&stage, &e))?;
    report.grids = Some(GridInfo {
        far_field_n_theta: asm.grid.n_theta,
        far_field_n_phi: asm.grid.n_phi,
        far_field_nodes: asm.grid.len(),
        host_quadrature: n.host_quadrature.resolved(asm.l_used()),
    });
    files.insert("cross_sections.csv".into(), cross_sections_csv(&cs));
    report.model = Some(ModelSummary {
        l_used: asm.l_used(),
        strengths: asm.strengths.clone(),
        bounds: check_bounds(&cs, &n.bounds),
        cross_sections: cs,
        cross_sections_alternative: cs_alt,
        host_series_tail: asm.interior.tail,
        host_series_condition: asm.interior.condition,
    });

    for task in &plan.tasks {
        match task {
            Task::Report => {
                progress.say("convergence tables");
                report.convergence =
                    convergence_table(&model, &opts, &asm).map_err(|e| numerical_exit("convergence", &e))?;
                files.insert("convergence.csv".into(), convergence_csv(&report.convergence));
            }
            Task::Verify(name) => run_verify_task(name, &asm, cfg, progress, report)?,
            Task::Sweep => {
                let omegas = plan.sweep_omegas.clone().unwrap_or_else(|| {
                    geometric_omegas(
                        n.sweep.omega_from_rad_s.unwrap_or(cfg.omega_rad_s),
                        n.sweep.omega_to_rad_s.unwrap_or(cfg.omega_rad_s / 100.0),
                        n.sweep.points,
                    )
                });
                progress.say(&format!("low-frequency sweep over {} frequencies", omegas.len()));
                let table = low_frequency_sweep(&model, &omegas, n.sweep.scaling, &opts, &n.host_quadrature)
                    .map_err(|e| numerical_exit("sweep", &e))?;
                files.insert("sweep.csv".into(), sweep_csv(&table));
                report.sweep = Some(table);
            }
            Task::Bounds(trials) => {
                progress.say(&format!("inequality suite over {trials} random clusters"));
                let outcome = bound_suite(&SuiteOptions {
                    trials: *trials,
                    seed: n.seed,
                    n_min: n.suite.n_min,
                    n_max: n.suite.n_max,
                    max_extent: n.suite.max_extent,
                    bounds: n.bounds,
                })
                .map_err(|e| numerical_exit("bounds", &e))?;
                files.insert("bounds.csv".into(), bounds_csv(&outcome));
                report.bounds_suite = Some(outcome);
            }
        }
    }
    if !report.verifications.is_empty() {
        files.insert("verifications.csv".into(), verifications_csv(&report.verifications));
        for v in report.verifications.iter().filter(|v| !v.table.is_empty()) {
            files.insert(format!("{}_convergence.csv", v.name), verification_table_csv(v));
        }
    }
    Ok(())
}

fn run_verify_task(
    name: &str,
    asm: &Assembly,
    cfg: &SceneConfig,
    progress: &Progress,
    report: &mut RunReport,
) -> std::result::Result<(), Failure> {
    let n = &cfg.numerics;
    if !report.verifications.iter().any(|v| v.name == "flux_consistency") {
        progress.say("pre-flight flux consistency");
        let r = asm.model.enclosing_radius();
        let f = n.flux_consistency_radius_factors;
        let pre = verify_flux_consistency(asm, f[0] * r, f[1] * r, &n.tolerances)
            .map_err(|e| numerical_exit("flux_consistency", &e))?;
        let ok = pre.passed;
        report.verifications.push(pre);
        if !ok {
            return Err((
                EXIT_NUMERICAL,
                "flux_consistency: far-field flux differs between enclosing radii".into(),
            ));
        }
    }
    let names = verification_list(name, asm, cfg);
    let names: Vec<&str> = names
        .into_iter()
        .filter(|v| !report.verifications.iter().any(|r| r.name.starts_with(v)))
        .collect();
    progress.say(&format!(
        "verifying {}",
        if names.is_empty() { "flux consistency" } else { name }
    ));
    let results: Vec<std::result::Result<Vec<VerificationResult>, Failure>> = names
        .par_iter()
        .map(|v| run_verification(v, asm, cfg).map_err(|e| numerical_exit(v, &e)))
        .collect();
    for r in results {
        report.verifications.extend(r?);
    }
    Ok(())
}

// ---------------------------------------------------------------- CSV

/// 17 significant digits, `.` separator.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_line(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

pub fn cross_sections_csv(cs: &CrossSectionReport) -> String {
    let mut out = String::new();
    csv_line(
        &mut out,
        &["row", "member", "sigma_m2", "ratio", "sigma_c_m2", "ratio_c"].map(String::from),
    );
    let n = cs.n();
    for (j, (s, r)) in cs.sigma_j.iter().zip(&cs.ratios).enumerate() {
        let member = if j + 1 == n { "host" } else { "scatterer" };
        csv_line(
            &mut out,
            &[
                (j + 1).to_string(),
                member.into(),
                fmt_f64(*s),
                fmt_f64(*r),
                String::new(),
                String::new(),
            ],
        );
    }
    csv_line(
        &mut out,
        &[
            "summary".into(),
            "cluster".into(),
            fmt_f64(cs.sigma),
            fmt_f64(1.0),
            fmt_f64(cs.sigma_c),
            fmt_f64(cs.ratio_c),
        ],
    );
    out
}

fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::new();
    csv_line(
        &mut out,
        &[
            "kind",
            "l_trunc",
            "n_theta",
            "sigma_m2",
            "sigma_c_m2",
            "rel_change_sigma",
        ]
        .map(String::from),
    );
    for r in rows {
        csv_line(
            &mut out,
            &[
                r.kind.into(),
                r.l_trunc.to_string(),
                r.n_theta.to_string(),
                fmt_f64(r.sigma),
                fmt_f64(r.sigma_c),
                fmt_f64(r.rel_change_sigma),
            ],
        );
    }
    out
}

fn verifications_csv(results: &[VerificationResult]) -> String {
    let mut out = String::new();
    csv_line(
        &mut out,
        &[
            "name",
            "lhs_re",
            "lhs_im",
            "rhs_re",
            "rhs_im",
            "rel_residual",
            "tolerance",
            "passed",
            "exploratory",
            "inconclusive",
        ]
        .map(String::from),
    );
    for v in results {
        csv_line(
            &mut out,
            &[
                v.name.clone(),
                fmt_f64(v.lhs.re),
                fmt_f64(v.lhs.im),
                fmt_f64(v.rhs.re),
                fmt_f64(v.rhs.im),
                fmt_f64(v.rel_residual),
                fmt_f64(v.tolerance),
                v.passed.to_string(),
                v.exploratory.to_string(),
                v.inconclusive.to_string(),
            ],
        );
    }
    out
}

/// Per-verification convergence table (e.g. flux residuals against radius).
fn verification_table_csv(v: &VerificationResult) -> String {
    let mut out = String::new();
    let keys: Vec<String> = v.table[0].keys().cloned().collect();
    csv_line(&mut out, &keys);
    for row in &v.table {
        let line: Vec<String> = keys
            .iter()
            .map(|k| row.get(k).map_or(String::new(), |x| fmt_f64(*x)))
            .collect();
        csv_line(&mut out, &line);
    }
    out
}

fn sweep_csv(t: &SweepTable) -> String {
    let mut out = String::new();
    csv_line(
        &mut out,
        &[
            "omega_rad_s",
            "sigma_m2",
            "sigma_c_m2",
            "real_residual_b",
            "reactive_b",
            "real_residual_a",
            "reactive_a",
            "corrected_residual",
        ]
        .map(String::from),
    );
    for r in &t.rows {
        csv_line(
            &mut out,
            &[
                fmt_f64(r.omega),
                fmt_f64(r.sigma),
                fmt_f64(r.sigma_c),
                fmt_f64(r.real_residual_b),
                fmt_f64(r.reactive_b),
                fmt_f64(r.real_residual_a),
                fmt_f64(r.reactive_a),
                r.corrected_residual.map_or(String::new(), fmt_f64),
            ],
        );
    }
    out
}

fn bounds_csv(o: &SuiteOutcome) -> String {
    let mut out = String::new();
    csv_line(
        &mut out,
        &[
            "trial",
            "n",
            "constructed",
            "sigma",
            "sigma_c",
            "ratio_c",
            "r_min",
            "r_max",
            "rc_mean",
            "rc_min",
            "rc_max",
            "count",
            "removal",
            "removal_printed",
            "ratio_bound",
            "equality",
        ]
        .map(String::from),
    );
    for r in &o.rows {
        let v = &r.verdicts;
        let count = match v.count {
            crate::crosssec::CountBound::NotApplicable => "not_applicable".to_string(),
            crate::crosssec::CountBound::Applicable { lower, upper } => (lower.holds && upper.holds).to_string(),
        };
        csv_line(
            &mut out,
            &[
                r.trial.to_string(),
                r.n.to_string(),
                r.constructed.to_string(),
                fmt_f64(r.sigma),
                fmt_f64(r.sigma_c),
                fmt_f64(r.ratio_c),
                fmt_f64(v.r_min),
                fmt_f64(v.r_max),
                v.rc_mean.holds.to_string(),
                v.rc_min.holds.to_string(),
                v.rc_max.holds.to_string(),
                count,
                r.removal_holds().to_string(),
                r.removal.iter().all(|c| c.bound_printed.holds).to_string(),
                r.ratio_bound_holds().to_string(),
                r.equality_fires().to_string(),
            ],
        );
    }
    out
}

// ---------------------------------------------------------------- entry point

#[derive(Debug, Parser)]
#[command(
    name = "cluster-scattering",
    version,
    about = "Acoustic cluster scattering: cross sections and identity checks"
)]
pub struct Cli {
    /// Suppress progress messages.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the tasks listed in the configuration.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one verification (or `all`).
    Verify {
        config: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Low-frequency sweep over a geometric frequency grid.
    Sweep {
        config: PathBuf,
        #[arg(long, value_parser = ["omega"])]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> std::result::Result<SceneConfig, (i32, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| (EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| (EXIT_CONFIG, format!("{}: {e}", path.display())))
}

/// Writes `report.json` and the CSV artifacts into `dir`.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(&out.report).map_err(std::io::Error::other)?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    for (name, body) in &out.files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn finish(out: RunOutput, dir: Option<&Path>, quiet: bool) -> i32 {
    if let Some(d) = dir {
        if let Err(e) = write_outputs(d, &out) {
            eprintln!("error: cannot write outputs to {}: {e}", d.display());
            return EXIT_CONFIG;
        }
    }
    if !quiet {
        for v in &out.report.verifications {
            let tag = if v.exploratory {
                "info"
            } else if v.passed {
                "pass"
            } else {
                "FAIL"
            };
            println!(
                "{tag:4} {:34} rel_residual={:.3e} tol={:.1e}",
                v.name, v.rel_residual, v.tolerance
            );
        }
        if let Some(m) = &out.report.model {
            println!(
                "sigma={:.12e} sigma_c={:.12e} L={}",
                m.cross_sections.sigma, m.cross_sections.sigma_c, m.l_used
            );
        }
    }
    if out.exit_code == EXIT_OK {
        if !quiet {
            println!("{}", out.message);
        }
    } else {
        eprintln!("error: {}", out.message);
    }
    out.exit_code
}

/// Parses `args` and runs the CLI; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let quiet = cli.quiet;
    let fail = |(code, msg): (i32, String)| {
        eprintln!("error: {msg}");
        code
    };
    match cli.command {
        Command::Run { config, out } => match load(&config) {
            Ok(cfg) => {
                let plan = RunPlan::from_config(&cfg);
                finish(execute(&cfg, &plan, quiet), Some(&out), quiet)
            }
            Err(e) => fail(e),
        },
        Command::Verify { config, name, out } => match load(&config) {
            Ok(cfg) => match Task::parse(&format!("verify:{name}")) {
                Ok(task) => {
                    let plan = RunPlan {
                        tasks: vec![task],
                        sweep_omegas: None,
                    };
                    finish(execute(&cfg, &plan, quiet), out.as_deref(), quiet)
                }
                Err(m) => fail((EXIT_CONFIG, m)),
            },
            Err(e) => fail(e),
        },
        Command::Sweep {
            config,
            param: _,
            from,
            to,
            points,
            out,
        } => match load(&config) {
            Ok(cfg) => {
                if !(from > 0.0 && to > 0.0 && from.is_finite() && to.is_finite()) || points < 4 {
                    return fail((EXIT_CONFIG, "sweep needs positive --from/--to and --points ≥ 4".into()));
                }
                let plan = RunPlan {
                    tasks: vec![Task::Sweep],
                    sweep_omegas: Some(geometric_omegas(from, to, points)),
                };
                finish(execute(&cfg, &plan, quiet), out.as_deref(), quiet)
            }
            Err(e) => fail(e),
        },
    }
}

pub fn main() -> i32 {
    main_with_args(std::env::args_os())
}
