//! Configuration-driven front end: single-point runs and potential-
//! energy-curve scans over FCIDUMP file lists or built-in lattice
//! models, with CSV/JSON reports.
//!
//! Exit-code contract: 0 success, 1 validation/input error, 2 numerical
//! instability. Scans run geometries concurrently up to `MRRPA_WORKERS`
//! and assemble the report in input order regardless of scheduling.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use mrrpa_core::integrals::{hubbard_model, parse_fcidump, IntegralSet, OrbitalSpaces};
use mrrpa_core::pipeline::{run_single_point, MethodSet, PipelineError, PipelineSettings};

pub const WORKER_ENV: &str = "MRRPA_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{label}: {source}")]
    Geometry {
        label: String,
        #[source]
        source: PipelineError,
    },
}

impl CliError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Geometry { source, .. } if source.is_instability() => 2,
            _ => 1,
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HubbardSpec {
    pub nsite: usize,
    pub t: f64,
    pub u: f64,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default)]
    pub nelec: Option<usize>,
    #[serde(default)]
    pub ms2: Option<i32>,
}

/// One geometry: exactly one of `fcidump` or `hubbard`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryInput {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fcidump: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hubbard: Option<HubbardSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpacesConfig {
    pub core: Vec<usize>,
    pub active: Vec<usize>,
    #[serde(rename = "virtual")]
    pub virtual_orbitals: Vec<usize>,
    pub n_active_electrons: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Auto-scales to the median excitation energy when absent.
    #[serde(default)]
    pub scale: Option<f64>,
}

fn default_nodes() -> usize {
    64
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nodes: 64,
            scale: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ToleranceConfig {
    #[serde(default = "default_drop_tol")]
    pub drop_tol: f64,
    #[serde(default = "default_sector_cap")]
    pub sector_cap: usize,
}

fn default_drop_tol() -> f64 {
    1e-12
}

fn default_sector_cap() -> usize {
    20_000
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            drop_tol: 1e-12,
            sector_cap: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Casci,
    Rpa,
    Tda,
    Quadrature,
    Sosex,
    OrderN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    /// File path, or "-" for stdout.
    #[serde(default = "default_output_path")]
    pub path: String,
    #[serde(default = "default_format")]
    pub format: ReportFormat,
}

fn default_output_path() -> String {
    "-".into()
}

fn default_format() -> ReportFormat {
    ReportFormat::Csv
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            path: "-".into(),
            format: ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub geometries: Vec<GeometryInput>,
    pub spaces: SpacesConfig,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Highest ring order when `order_n` is requested.
    #[serde(default = "default_max_ring_order")]
    pub max_ring_order: u32,
}

fn default_max_ring_order() -> u32 {
    8
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.geometries.is_empty() {
            return Err(CliError::Config("no geometries given".into()));
        }
        if self.methods.is_empty() {
            return Err(CliError::Config("methods must be nonempty".into()));
        }
        for g in &self.geometries {
            match (&g.fcidump, &g.hubbard) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(CliError::Config(format!(
                        "geometry `{}` must give exactly one of fcidump or hubbard",
                        g.label
                    )));
                }
                (Some(path), None) => {
                    if !path.exists() {
                        return Err(CliError::Config(format!(
                            "geometry `{}`: file {} does not exist",
                            g.label,
                            path.display()
                        )));
                    }
                }
                (None, Some(h)) => {
                    if h.nsite < 2 {
                        return Err(CliError::Config(format!(
                            "geometry `{}`: hubbard model needs nsite >= 2",
                            g.label
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn method_set(&self) -> MethodSet {
        MethodSet {
            casci: self.methods.contains(&Method::Casci),
            rpa: self.methods.contains(&Method::Rpa),
            tda: self.methods.contains(&Method::Tda),
            quadrature: self.methods.contains(&Method::Quadrature),
            sosex: self.methods.contains(&Method::Sosex),
            order_n: self.methods.contains(&Method::OrderN),
        }
    }

    fn pipeline_settings(&self) -> PipelineSettings {
        PipelineSettings {
            methods: self.method_set(),
            drop_tol: self.tolerances.drop_tol,
            sector_cap: self.tolerances.sector_cap,
            grid_nodes: self.grid.nodes,
            grid_scale: self.grid.scale,
            max_ring_order: self.max_ring_order,
        }
    }

    fn spaces(&self) -> OrbitalSpaces {
        OrbitalSpaces::new(
            self.spaces.core.clone(),
            self.spaces.active.clone(),
            self.spaces.virtual_orbitals.clone(),
            self.spaces.n_active_electrons,
        )
    }
}

fn load_geometry(g: &GeometryInput) -> Result<IntegralSet<f64>, CliError> {
    if let Some(path) = &g.fcidump {
        let text = std::fs::read_to_string(path)?;
        return parse_fcidump(&text).map_err(|e| CliError::Geometry {
            label: g.label.clone(),
            source: PipelineError::Integrals(e),
        });
    }
    let h = g.hubbard.as_ref().expect("validated");
    let mut set = hubbard_model(h.nsite, h.t, h.u, h.periodic).map_err(|e| CliError::Geometry {
        label: g.label.clone(),
        source: PipelineError::Integrals(e),
    })?;
    if h.nelec.is_some() || h.ms2.is_some() {
        let nelec = h.nelec.unwrap_or(set.nelec());
        let ms2 = h.ms2.unwrap_or(if nelec.is_multiple_of(2) { 0 } else { 1 });
        set = set
            .with_electrons(nelec, ms2)
            .map_err(|e| CliError::Geometry {
                label: g.label.clone(),
                source: PipelineError::Integrals(e),
            })?;
    }
    Ok(set)
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// Quantize to the report precision (12 significant digits) so the
/// emitted formats round-trip exactly.
fn quantize(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryRecord {
    pub label: String,
    pub e_casci: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub de_rpa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub de_rpa_quad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub de_sosex: Option<f64>,
    pub stable: bool,
    pub n_cv: usize,
    pub n_ca: usize,
    pub n_av: usize,
    pub n_aa: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring_orders: Option<Vec<(u32, f64)>>,
    /// Wall-clock total; excluded from report comparisons.
    pub timing_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryFailure {
    pub label: String,
    pub error: String,
    pub instability: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    pub records: Vec<GeometryRecord>,
    pub failures: Vec<GeometryFailure>,
}

impl EnergyReport {
    pub fn exit_code(&self) -> i32 {
        if self.failures.iter().any(|f| f.instability) || self.records.iter().any(|r| !r.stable) {
            2
        } else if !self.failures.is_empty() {
            1
        } else {
            0
        }
    }

    /// Copy with timing fields zeroed, for determinism comparisons.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.records {
            r.timing_ms = 0.0;
        }
        out
    }
}

fn run_one(g: &GeometryInput, cfg: &RunConfig) -> Result<GeometryRecord, CliError> {
    let set = load_geometry(g)?;
    let spaces = cfg.spaces();
    let started = std::time::Instant::now();
    let res = run_single_point(&set, &spaces, &cfg.pipeline_settings()).map_err(|e| {
        CliError::Geometry {
            label: g.label.clone(),
            source: e,
        }
    })?;
    let timing_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(GeometryRecord {
        label: g.label.clone(),
        e_casci: quantize(res.e_casci),
        de_rpa: res.de_rpa_plasmon.map(quantize),
        de_rpa_quad: res.de_rpa_quadrature.map(quantize),
        de_sosex: res.de_sosex.map(quantize),
        stable: res.stable,
        n_cv: res.n_cv,
        n_ca: res.n_ca,
        n_av: res.n_av,
        n_aa: res.n_aa,
        ring_orders: if res.ring_orders.is_empty() {
            None
        } else {
            Some(
                res.ring_orders
                    .iter()
                    .map(|&(n, e)| (n, quantize(e)))
                    .collect(),
            )
        },
        timing_ms: quantize(timing_ms),
    })
}

/// Single-point calculation: the configuration must hold exactly one
/// geometry.
pub fn run(cfg: &RunConfig) -> Result<EnergyReport, CliError> {
    if cfg.geometries.len() != 1 {
        return Err(CliError::Config(format!(
            "run expects exactly one geometry, got {} (use scan)",
            cfg.geometries.len()
        )));
    }
    let record = run_one(&cfg.geometries[0], cfg)?;
    Ok(EnergyReport {
        records: vec![record],
        failures: Vec::new(),
    })
}

fn worker_count(n_jobs: usize) -> usize {
    let available = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let requested = std::env::var(WORKER_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(available);
    requested.min(n_jobs).max(1)
}

/// Scan over every geometry; completed records are kept in input order,
/// failed geometries go to the failure list.
pub fn scan(cfg: &RunConfig) -> EnergyReport {
    let n = cfg.geometries.len();
    let results: Mutex<Vec<Option<Result<GeometryRecord, CliError>>>> =
        Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = worker_count(n);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= n {
                    break;
                }
                let outcome = run_one(&cfg.geometries[idx], cfg);
                results.lock().unwrap()[idx] = Some(outcome);
            });
        }
    });
    let mut report = EnergyReport::default();
    for (idx, slot) in results.into_inner().unwrap().into_iter().enumerate() {
        match slot.expect("every job ran") {
            Ok(record) => report.records.push(record),
            Err(err) => report.failures.push(GeometryFailure {
                label: cfg.geometries[idx].label.clone(),
                instability: matches!(&err, CliError::Geometry { source, .. } if source.is_instability()),
                error: err.to_string(),
            }),
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

pub const CSV_HEADER: &str = "label,e_casci,de_rpa,de_rpa_quad,de_sosex,stable,n_cv,n_ca,n_av,n_aa";

fn csv_float(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.11e}")).unwrap_or_default()
}

pub fn emit_csv(report: &EnergyReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.label,
            format_args!("{:.11e}", r.e_casci),
            csv_float(r.de_rpa),
            csv_float(r.de_rpa_quad),
            csv_float(r.de_sosex),
            r.stable,
            r.n_cv,
            r.n_ca,
            r.n_av,
            r.n_aa
        )
        .unwrap();
    }
    out
}

pub fn emit_json(report: &EnergyReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

pub fn emit(report: &EnergyReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => emit_csv(report),
        ReportFormat::Json => emit_json(report),
    }
}

/// Write to the configured destination ("-" = stdout).
pub fn write_report(report: &EnergyReport, output: &OutputConfig) -> Result<(), CliError> {
    let text = emit(report, output.format);
    if output.path == "-" {
        print!("{text}");
        Ok(())
    } else {
        std::fs::write(&output.path, text)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Self test
// ---------------------------------------------------------------------------

/// Built-in consistency run: cross-route agreement on two lattice
/// fixtures. Returns true when every check holds.
pub fn selftest(mut sink: impl std::io::Write) -> bool {
    use mrrpa_core::fixtures;
    let mut ok = true;
    let mut check = |name: &str, pass: bool, detail: String| {
        let _ = writeln!(
            sink,
            "{} {name} ({detail})",
            if pass { "pass" } else { "FAIL" }
        );
        ok &= pass;
    };

    let settings = PipelineSettings::default();

    let sr = fixtures::dimer_mo::<f64>(4.0, 2, 0);
    let sr_spaces = OrbitalSpaces::with_virtual_complement(2, vec![0], vec![], 0);
    match run_single_point(&sr, &sr_spaces, &settings) {
        Ok(res) => {
            let de = res.de_rpa_plasmon.unwrap_or(f64::NAN);
            let expected = 0.5 * (20.0_f64.sqrt() - 6.0);
            check(
                "dimer SR limit matches closed form",
                (de - expected).abs() < 1e-10,
                format!("{de:.9} vs {expected:.9}"),
            );
            let dq = res.de_rpa_quadrature.unwrap_or(f64::NAN);
            check(
                "dimer SR quadrature agrees",
                (de - dq).abs() < 1e-6,
                format!("plasmon {de:.9}, quadrature {dq:.9}"),
            );
        }
        Err(e) => check("dimer SR limit runs", false, e.to_string()),
    }

    let (set, spaces) = fixtures::four_site_cas22::<f64>(2.0);
    match run_single_point(&set, &spaces, &settings) {
        Ok(res) => {
            let de = res.de_rpa_plasmon.unwrap_or(f64::NAN);
            let dq = res.de_rpa_quadrature.unwrap_or(f64::NAN);
            let ds = res.de_sosex.unwrap_or(f64::NAN);
            check(
                "4-site CAS(2,2) stable",
                res.stable,
                format!("ΔE = {de:.9}"),
            );
            check(
                "4-site plasmon vs quadrature",
                (de - dq).abs() < 1e-6,
                format!("{de:.9} vs {dq:.9}"),
            );
            check(
                "4-site exchange correction reduces magnitude",
                ds > de && de < 0.0,
                format!("RPA {de:.9}, SOSEX {ds:.9}"),
            );
        }
        Err(e) => check("4-site CAS(2,2) runs", false, e.to_string()),
    }
    ok
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dimer_config(methods: &str) -> RunConfig {
        let text = format!(
            r#"{{
              "geometries": [
                {{"label": "dimer", "hubbard": {{"nsite": 2, "t": 1.0, "u": 4.0}}}}
              ],
              "spaces": {{"core": [], "active": [0, 1], "virtual": [], "n_active_electrons": 2}},
              "methods": {methods}
            }}"#
        );
        RunConfig::from_json(&text).unwrap()
    }

    #[test]
    fn full_cas_dimer_rpa_is_zero() {
        let cfg = dimer_config(r#"["rpa"]"#);
        let report = run(&cfg).unwrap();
        assert_eq!(report.records.len(), 1);
        let r = &report.records[0];
        assert!(r.stable);
        assert!(r.de_rpa.unwrap().abs() < 1e-12);
        assert!(r.de_rpa_quad.is_none());
        assert!((r.e_casci - (2.0 - 8.0_f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn both_quadrature_and_plasmon_agree() {
        let cfg = dimer_config(r#"["rpa", "quadrature"]"#);
        let report = run(&cfg).unwrap();
        let r = &report.records[0];
        let (a, b) = (r.de_rpa.unwrap(), r.de_rpa_quad.unwrap());
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn empty_methods_rejected() {
        let text = r#"{
          "geometries": [{"label": "x", "hubbard": {"nsite": 2, "t": 1.0, "u": 4.0}}],
          "spaces": {"core": [], "active": [0,1], "virtual": [], "n_active_electrons": 2},
          "methods": []
        }"#;
        assert!(matches!(
            RunConfig::from_json(text),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn missing_fcidump_rejected_at_validation() {
        let text = r#"{
          "geometries": [{"label": "x", "fcidump": "/nonexistent/path.fcidump"}],
          "spaces": {"core": [], "active": [0,1], "virtual": [], "n_active_electrons": 2},
          "methods": ["rpa"]
        }"#;
        assert!(matches!(
            RunConfig::from_json(text),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn csv_empty_report_is_header_only() {
        let report = EnergyReport::default();
        assert_eq!(emit_csv(&report), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn json_round_trip_identical_records() {
        let cfg = dimer_config(r#"["rpa", "sosex"]"#);
        let report = run(&cfg).unwrap();
        let text = emit_json(&report);
        let again: EnergyReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn ring_orders_appear_in_json_when_requested() {
        // Orbital basis with a coupled single-reference mode: the
        // bonding/antibonding dimer written out as an FCIDUMP.
        let dir = std::env::temp_dir().join(format!("mrrpa-ring-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("dimer.fcidump");
        let set = mrrpa_core::fixtures::dimer_mo::<f64>(4.0, 2, 0);
        std::fs::write(&path, mrrpa_core::integrals::write_fcidump(&set)).unwrap();
        let text = format!(
            r#"{{
              "geometries": [{{"label": "dimer", "fcidump": "{}"}}],
              "spaces": {{"core": [0], "active": [], "virtual": [1], "n_active_electrons": 0}},
              "methods": ["rpa", "order_n"],
              "max_ring_order": 3
            }}"#,
            path.display()
        );
        let cfg = RunConfig::from_json(&text).unwrap();
        let report = run(&cfg).unwrap();
        let orders = report.records[0].ring_orders.as_ref().unwrap();
        assert_eq!(orders.len(), 2);
        assert_eq!(orders[0].0, 2);
        assert!(orders[0].1 < 0.0);
        let json = emit_json(&report);
        assert!(json.contains("ring_orders"));
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn selftest_passes() {
        let mut buf = Vec::new();
        assert!(selftest(&mut buf));
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("pass"));
        assert!(!text.contains("FAIL"));
    }
}
