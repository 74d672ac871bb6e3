//! Configuration, scenario dispatch and run manifests for `enskog-lab`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use enskog_core::analysis::{
    audit_inequality, stability_experiment, write_audit_report, write_stability_report, AuditFamily,
    CouplingMode, StabilityConfig,
};
use enskog_core::kernels::{
    AngularKind, AngularMeasure, BetaProfile, CrossSection, KernelSpec, SigmaForm, SpatialRate,
};
use enskog_core::particles::{run, write_snapshots, InitSpec, RateCap, SimConfig};
use enskog_core::transport::{dual_check, w1_shifted, write_distance_report, DiscreteMeasure, DistanceRow};
use enskog_core::{Error, Result};

pub const DEFAULT_CUTOFF: f64 = 1e-2;
pub const DEFAULT_DELTA: f64 = 0.5;
pub const DEFAULT_LAMBDA_CAP: f64 = 1e6;
pub const DEFAULT_Z_MIN: f64 = 1e-3;
pub const DEFAULT_PROBE_GRID: usize = 3;
pub const DEFAULT_AUDIT_SAMPLES: u64 = 1_000_000;
pub const THREADS_ENV: &str = "ENSKOG_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Stability,
    Metrics,
    Audit,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Stability => "stability",
            Mode::Metrics => "metrics",
            Mode::Audit => "audit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub dimension: usize,
    pub kernel: Option<KernelBlock>,
    pub sim: Option<SimBlock>,
    pub stability: Option<StabilityBlock>,
    pub metrics: Option<MetricsBlock>,
    pub audit: Option<AuditBlock>,
    pub output: Option<PathBuf>,
    #[serde(default = "one")]
    pub threads: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    pub sigma: SigmaBlock,
    pub angular: AngularBlock,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    pub beta: BetaBlock,
    #[serde(default = "default_z_min")]
    pub z_min: f64,
}

fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}

fn default_z_min() -> f64 {
    DEFAULT_Z_MIN
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaBlock {
    pub gamma: f64,
    #[serde(default)]
    pub form: SigmaFormName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaFormName {
    #[default]
    Power,
    Tempered,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngularBlock {
    LongRange { nu: f64 },
    HardSphere,
    Table { thetas: Vec<f64>, densities: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaBlock {
    pub rho: f64,
    #[serde(default)]
    pub profile: BetaProfileName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaProfileName {
    #[default]
    Bump,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Defaults to `[0, t_end]`.
    pub snapshot_times: Option<Vec<f64>>,
    pub init: InitBlock,
    #[serde(default)]
    pub rate_cap: RateCapBlock,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitBlock {
    Point {
        r: Vec<f64>,
        v: Vec<f64>,
    },
    Gaussian {
        r_mean: Vec<f64>,
        r_std: f64,
        v_mean: Vec<f64>,
        v_std: f64,
    },
    UniformBallGaussian {
        center: Vec<f64>,
        radius: f64,
        v_mean: Vec<f64>,
        v_std: f64,
    },
    TwoCluster {
        r_offset: Vec<f64>,
        r_std: f64,
        v_offset: Vec<f64>,
        v_std: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RateCapBlock {
    Auto,
    #[default]
    EnergyBound,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityBlock {
    pub epsilon: f64,
    #[serde(default)]
    pub coupling_mode: CouplingName,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Probe grid points per axis for the singular moment; only valid for
    /// soft potentials.
    pub probes: Option<usize>,
    #[serde(default = "default_lambda_cap")]
    pub cap: f64,
    /// Defaults to the three seeds following `sim.seed`.
    pub calibration_seeds: Option<Vec<u64>>,
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

fn default_lambda_cap() -> f64 {
    DEFAULT_LAMBDA_CAP
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingName {
    #[default]
    Crn,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsBlock {
    /// Measure CSVs (`weight,r1..rd,v1..vd`), relative to the config file.
    pub mu: PathBuf,
    pub nu: PathBuf,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
}

fn default_times() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditBlock {
    pub families: Vec<FamilyBlock>,
    #[serde(default = "default_audit_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_audit_samples() -> u64 {
    DEFAULT_AUDIT_SAMPLES
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyBlock {
    TanakaShift,
    DeflectionShift,
    TestFunctionIncrement,
    CrossSectionDifference {
        gamma: f64,
    },
    CouplingIntegrandHard {
        gamma: f64,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    CouplingIntegrandSoft {
        gamma: f64,
    },
    CollisionOperatorBound {
        gamma: f64,
        nu: f64,
        #[serde(default = "default_cutoff")]
        cutoff: f64,
    },
}

impl FamilyBlock {
    fn family(&self) -> AuditFamily {
        match *self {
            FamilyBlock::TanakaShift => AuditFamily::TanakaShift,
            FamilyBlock::DeflectionShift => AuditFamily::DeflectionShift,
            FamilyBlock::TestFunctionIncrement => AuditFamily::TestFunctionIncrement,
            FamilyBlock::CrossSectionDifference { gamma } => AuditFamily::CrossSectionDifference { gamma },
            FamilyBlock::CouplingIntegrandHard { gamma, delta } => {
                AuditFamily::CouplingIntegrandHard { gamma, delta }
            }
            FamilyBlock::CouplingIntegrandSoft { gamma } => AuditFamily::CouplingIntegrandSoft { gamma },
            FamilyBlock::CollisionOperatorBound { gamma, nu, cutoff } => {
                AuditFamily::CollisionOperatorBound { gamma, nu, cutoff }
            }
        }
    }
}

/// A parsed config with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// Hex SHA-256 of the config file bytes.
    pub hash: String,
    /// Directory against which relative paths are resolved.
    pub base_dir: PathBuf,
}

/// Read, parse and structurally validate a JSON config.
pub fn parse_config(path: &Path) -> Result<LoadedConfig> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let config = parse_config_bytes(&bytes)?;
    let hash = Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig {
        config,
        hash,
        base_dir,
    })
}

pub fn parse_config_bytes(bytes: &[u8]) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            Error::Parse(format!("invalid JSON: {inner}"))
        } else if path == "." {
            Error::Config(inner.to_string())
        } else {
            Error::Config(format!("at `{path}`: {inner}"))
        }
    })?;
    Ok(config)
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

impl ExperimentConfig {
    /// Checks that the blocks needed by `mode` are present and consistent.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        if let Some(m) = self.mode {
            if m != mode {
                return config_err(format!(
                    "config declares mode `{}` but `{}` was requested",
                    m.name(),
                    mode.name()
                ));
            }
        }
        if self.dimension < 3 || self.dimension > enskog_core::vector::MAX_DIM {
            return config_err(format!("dimension {} outside 3..=8", self.dimension));
        }
        if self.threads == 0 {
            return config_err("threads must be >= 1");
        }
        match mode {
            Mode::Simulate => {
                self.sim_config()?;
            }
            Mode::Stability => {
                self.stability_config()?;
            }
            Mode::Metrics => {
                if self.metrics.is_none() {
                    return config_err("mode `metrics` needs a `metrics` block");
                }
            }
            Mode::Audit => {
                let Some(a) = &self.audit else {
                    return config_err("mode `audit` needs an `audit` block");
                };
                if a.families.is_empty() {
                    return config_err("`audit.families` is empty");
                }
            }
        }
        Ok(())
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let Some(k) = &self.kernel else {
            return config_err("missing `kernel` block");
        };
        let cfg = |e: Error| Error::Config(e.to_string());
        let form = match k.sigma.form {
            SigmaFormName::Power => SigmaForm::Power,
            SigmaFormName::Tempered => SigmaForm::Tempered,
        };
        let sigma = CrossSection::new(k.sigma.gamma, form, self.dimension).map_err(cfg)?;
        let kind = match &k.angular {
            AngularBlock::LongRange { nu } => AngularKind::LongRange { nu: *nu },
            AngularBlock::HardSphere => AngularKind::HardSphere,
            AngularBlock::Table { thetas, densities } => AngularKind::Table {
                thetas: thetas.clone(),
                densities: densities.clone(),
            },
        };
        let angular = AngularMeasure::new(kind, k.cutoff).map_err(cfg)?;
        let profile = match k.beta.profile {
            BetaProfileName::Bump => BetaProfile::Bump,
            BetaProfileName::Constant => BetaProfile::Constant,
        };
        let beta = SpatialRate::new(k.beta.rho, profile).map_err(cfg)?;
        KernelSpec::new(self.dimension, sigma, angular, beta, k.z_min).map_err(|e| match e {
            Error::NonNormalizable(m) => Error::Config(format!("angular measure: {m}")),
            other => Error::Config(other.to_string()),
        })
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let Some(s) = &self.sim else {
            return config_err("missing `sim` block");
        };
        let init = match &s.init {
            InitBlock::Point { r, v } => InitSpec::Point {
                r: r.clone(),
                v: v.clone(),
            },
            InitBlock::Gaussian {
                r_mean,
                r_std,
                v_mean,
                v_std,
            } => InitSpec::Gaussian {
                r_mean: r_mean.clone(),
                r_std: *r_std,
                v_mean: v_mean.clone(),
                v_std: *v_std,
            },
            InitBlock::UniformBallGaussian {
                center,
                radius,
                v_mean,
                v_std,
            } => InitSpec::UniformBallGaussian {
                center: center.clone(),
                radius: *radius,
                v_mean: v_mean.clone(),
                v_std: *v_std,
            },
            InitBlock::TwoCluster {
                r_offset,
                r_std,
                v_offset,
                v_std,
            } => InitSpec::TwoCluster {
                r_offset: r_offset.clone(),
                r_std: *r_std,
                v_offset: v_offset.clone(),
                v_std: *v_std,
            },
        };
        let rate_cap = match s.rate_cap {
            RateCapBlock::Auto => RateCap::Auto,
            RateCapBlock::EnergyBound => RateCap::EnergyBound,
            RateCapBlock::Fixed(c) => RateCap::Fixed(c),
        };
        let cfg = SimConfig {
            n: s.n,
            dt: s.dt,
            t_end: s.t_end,
            seed: s.seed,
            kernel: self.kernel_spec()?,
            init,
            rate_cap,
            threads: self.threads,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        enskog_core::particles::snapshot_steps(&cfg, &self.snapshot_times())
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        match &self.sim {
            Some(s) => s.snapshot_times.clone().unwrap_or_else(|| vec![0.0, s.t_end]),
            None => Vec::new(),
        }
    }

    pub fn stability_config(&self) -> Result<StabilityConfig> {
        let sim = self.sim_config()?;
        let Some(b) = &self.stability else {
            return config_err("mode `stability` needs a `stability` block");
        };
        let gamma = sim.kernel.sigma().gamma();
        if gamma >= 0.0 && b.probes.is_some() {
            return config_err(format!(
                "`stability.probes` requested but gamma = {gamma} >= 0 does not use the singular moment"
            ));
        }
        if !(b.cap > 0.0) || !(b.delta > 0.0) {
            return config_err("`stability.cap` and `stability.delta` must be > 0");
        }
        let seed = sim.seed;
        let cfg = StabilityConfig {
            sim,
            epsilon: b.epsilon,
            coupling: match b.coupling_mode {
                CouplingName::Crn => CouplingMode::CommonRandomNumbers,
                CouplingName::Independent => CouplingMode::Independent,
            },
            times: self.snapshot_times(),
            delta: b.delta,
            lambda_cap: b.cap,
            probe_grid: b.probes.unwrap_or(DEFAULT_PROBE_GRID),
            calibration_seeds: b.calibration_seeds.clone().unwrap_or_else(|| {
                (1..=3).map(|k| seed.wrapping_add(k)).collect()
            }),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn seed(&self) -> u64 {
        match (&self.sim, &self.audit) {
            (Some(s), _) => s.seed,
            (None, Some(a)) => a.seed,
            _ => 0,
        }
    }
}

/// Record of one run, written as `manifest.json` next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub mode: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub threads: usize,
    pub wall_time_seconds: f64,
    /// Output files relative to the output directory.
    pub files: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Thread count after applying the environment override.
pub fn effective_threads(config_threads: usize) -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => config_err(format!("{THREADS_ENV}={v:?} is not a positive integer")),
        },
        Err(_) => Ok(config_threads),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn read_measure(base: &Path, p: &Path) -> Result<DiscreteMeasure> {
    let path = base.join(p);
    let f = File::open(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    DiscreteMeasure::read_csv(BufReader::new(f))
}

/// Run `mode` and write its outputs and manifest into `out_dir`.
pub fn run_scenario(mode: Mode, loaded: &LoadedConfig, out_dir: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let mut config = loaded.config.clone();
    config.threads = effective_threads(config.threads)?;
    config.validate(mode)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let files = pool.install(|| dispatch(mode, &config, &loaded.base_dir, out_dir))?;
    let manifest = RunManifest {
        mode: mode.name().to_string(),
        config_hash: loaded.hash.clone(),
        seed: config.seed(),
        version: format!("v{}", env!("CARGO_PKG_VERSION")),
        threads: config.threads,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        files,
    };
    let mut w = create(out_dir, MANIFEST_FILE)?;
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    finish(w)?;
    Ok(manifest)
}

fn dispatch(mode: Mode, config: &ExperimentConfig, base: &Path, out: &Path) -> Result<Vec<String>> {
    match mode {
        Mode::Simulate => {
            let cfg = config.sim_config()?;
            let snaps = run(&cfg, &config.snapshot_times())?;
            let name = "snapshots.csv";
            let mut w = create(out, name)?;
            write_snapshots(&mut w, &snaps)?;
            finish(w)?;
            Ok(vec![name.into()])
        }
        Mode::Stability => {
            let cfg = config.stability_config()?;
            let report = stability_experiment(&cfg)?;
            let name = "stability.csv";
            let mut w = create(out, name)?;
            write_stability_report(&mut w, &report.rows)?;
            finish(w)?;
            Ok(vec![name.into()])
        }
        Mode::Metrics => {
            let m = config.metrics.as_ref().expect("validated");
            let mu = read_measure(base, &m.mu)?;
            let nu = read_measure(base, &m.nu)?;
            if mu.dim() != config.dimension || nu.dim() != config.dimension {
                return config_err(format!(
                    "measure dimensions ({}, {}) differ from `dimension` = {}",
                    mu.dim(),
                    nu.dim(),
                    config.dimension
                ));
            }
            let rows = m
                .times
                .iter()
                .map(|&t| {
                    let (w, coupling) = w1_shifted(&mu, &nu, t)?;
                    let cert = dual_check(&mu, &nu, &coupling, |p, q| {
                        enskog_core::transport::cost_t(p, q, t).expect("dimensions checked")
                    })?;
                    Ok(DistanceRow {
                        t,
                        w1_shifted: w,
                        primal: cert.primal,
                        dual: cert.dual,
                        gap: cert.gap,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let name = "distances.csv";
            let mut w = create(out, name)?;
            write_distance_report(&mut w, &rows)?;
            finish(w)?;
            Ok(vec![name.into()])
        }
        Mode::Audit => {
            let a = config.audit.as_ref().expect("validated");
            let reports = a
                .families
                .iter()
                .map(|f| {
                    audit_inequality(f.family(), a.samples, config.dimension, a.seed)
                        .map_err(|e| match e {
                            Error::InvalidArgument(m) => Error::Config(m),
                            other => other,
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            let name = "audit.csv";
            let mut w = create(out, name)?;
            write_audit_report(&mut w, &reports)?;
            finish(w)?;
            Ok(vec![name.into()])
        }
    }
}

/// Machine-readable error record printed on failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub error: String,
    pub message: String,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        ErrorRecord {
            error: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}
