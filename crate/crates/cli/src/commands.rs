//! Subcommand implementations. Each handler validates its flags, runs the
//! corresponding library operation, writes its data files plus a run
//! manifest into the output directory, and prints a one-line summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use cqad_core::device::{intra_cluster_spacings, load_device_config, ClusterSpec, DeviceConfig};
use cqad_core::dicke::{
    collective_couplings, fidelity_closed_form, fidelity_exact, purity_analytic, tau_min_purity,
    tau_timed, tau_timed_numeric_exact,
};
use cqad_core::dynamics::{
    normalized_collective_population, simulate_rabi_grid, simulate_trace, write_grid_csv,
    write_trace_csv,
};
use cqad_core::readout::{correct_constrained, invert_unconstrained, ProbabilityVector};
use cqad_core::spectroscopy::{sweep_spectrum, write_sweep_csv};

use crate::manifest::{digest_file, RunManifest};

/// Process failure with its exit code: 1 usage, 2 validation, 3 numerical.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Validation(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Validation(m) | Failure::Numerical(m) => m,
        }
    }
}

fn load_config(path: &Path) -> Result<DeviceConfig, Failure> {
    let loaded = load_device_config(path).map_err(|e| Failure::Validation(e.to_string()))?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded.config)
}

fn ensure_out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Validation(format!("cannot create output directory: {e}")))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes)
        .map_err(|e| Failure::Validation(format!("cannot write '{}': {e}", path.display())))
}

fn parse_param<T: std::str::FromStr>(manifest: &RunManifest, key: &str) -> Result<T, Failure> {
    manifest
        .param(key)
        .ok_or_else(|| Failure::Validation(format!("manifest is missing parameter '{key}'")))?
        .parse()
        .map_err(|_| Failure::Validation(format!("manifest parameter '{key}' does not parse")))
}

fn parse_param_opt<T: std::str::FromStr>(
    manifest: &RunManifest,
    key: &str,
) -> Result<Option<T>, Failure> {
    match manifest.param(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| Failure::Validation(format!("manifest parameter '{key}' does not parse"))),
    }
}

fn json_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text.into_bytes()
}

// ---------------------------------------------------------------- spectroscopy

pub struct SpectroscopyRun {
    pub config: PathBuf,
    pub cluster: String,
    pub fmin: f64,
    pub fmax: f64,
    pub points: usize,
}

impl SpectroscopyRun {
    pub fn params(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("config".into(), self.config.display().to_string()),
            ("cluster".into(), self.cluster.clone()),
            ("fmin".into(), self.fmin.to_string()),
            ("fmax".into(), self.fmax.to_string()),
            ("points".into(), self.points.to_string()),
        ])
    }

    pub fn from_manifest(m: &RunManifest) -> Result<Self, Failure> {
        Ok(Self {
            config: PathBuf::from(
                m.param("config")
                    .ok_or_else(|| Failure::Validation("manifest missing 'config'".into()))?,
            ),
            cluster: parse_param(m, "cluster")?,
            fmin: parse_param(m, "fmin")?,
            fmax: parse_param(m, "fmax")?,
            points: parse_param(m, "points")?,
        })
    }

    pub fn run(&self, out_dir: &Path) -> Result<(), Failure> {
        if self.points < 2 {
            return Err(Failure::Usage(format!(
                "--points must be at least 2, got {}",
                self.points
            )));
        }
        if !self.fmin.is_finite() || !self.fmax.is_finite() || self.fmin >= self.fmax {
            return Err(Failure::Usage(format!(
                "--fmin must be below --fmax, got {} / {}",
                self.fmin, self.fmax
            )));
        }
        let config = load_config(&self.config)?;
        let cluster = config
            .find_cluster(&self.cluster)
            .map_err(|e| Failure::Validation(e.to_string()))?;
        let sweep = sweep_spectrum(cluster, self.fmin, self.fmax, self.points)
            .map_err(|e| Failure::Numerical(e.to_string()))?;
        ensure_out_dir(out_dir)?;
        let mut csv = Vec::new();
        write_sweep_csv(&sweep, &mut csv).expect("in-memory write");
        let csv_path = out_dir.join("spectroscopy.csv");
        write_bytes(&csv_path, &csv)?;
        let manifest = RunManifest::new(
            "spectroscopy",
            self.params(),
            Some(digest_file(&self.config).map_err(|e| Failure::Validation(e.to_string()))?),
        );
        manifest
            .write(out_dir)
            .map_err(|e| Failure::Validation(e.to_string()))?;
        println!(
            "wrote {} ({} grid points x {} lines)",
            csv_path.display(),
            self.points,
            sweep.lines_per_point()
        );
        Ok(())
    }
}

// ------------------------------------------------------------------------ rabi

pub struct RabiRun {
    pub config: PathBuf,
    pub cluster: String,
    pub fmin: f64,
    pub fmax: f64,
    pub fpoints: usize,
    pub tmax_us: f64,
    pub tsteps: usize,
    pub t1_us: Option<f64>,
    pub threads: usize,
}

impl RabiRun {
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut p = BTreeMap::from([
            ("config".into(), self.config.display().to_string()),
            ("cluster".into(), self.cluster.clone()),
            ("fmin".into(), self.fmin.to_string()),
            ("fmax".into(), self.fmax.to_string()),
            ("fpoints".into(), self.fpoints.to_string()),
            ("tmax_us".into(), self.tmax_us.to_string()),
            ("tsteps".into(), self.tsteps.to_string()),
            ("threads".into(), self.threads.to_string()),
        ]);
        if let Some(t1) = self.t1_us {
            p.insert("t1_us".into(), t1.to_string());
        }
        p
    }

    pub fn from_manifest(m: &RunManifest) -> Result<Self, Failure> {
        Ok(Self {
            config: PathBuf::from(
                m.param("config")
                    .ok_or_else(|| Failure::Validation("manifest missing 'config'".into()))?,
            ),
            cluster: parse_param(m, "cluster")?,
            fmin: parse_param(m, "fmin")?,
            fmax: parse_param(m, "fmax")?,
            fpoints: parse_param(m, "fpoints")?,
            tmax_us: parse_param(m, "tmax_us")?,
            tsteps: parse_param(m, "tsteps")?,
            t1_us: parse_param_opt(m, "t1_us")?,
            threads: parse_param(m, "threads")?,
        })
    }

    pub fn run(&self, out_dir: &Path) -> Result<(), Failure> {
        if self.fpoints < 2 || self.tsteps < 2 {
            return Err(Failure::Usage(
                "--fpoints and --tsteps must both be at least 2".into(),
            ));
        }
        if !self.fmin.is_finite() || !self.fmax.is_finite() || self.fmin >= self.fmax {
            return Err(Failure::Usage(format!(
                "--fmin must be below --fmax, got {} / {}",
                self.fmin, self.fmax
            )));
        }
        if !self.tmax_us.is_finite() || self.tmax_us <= 0.0 {
            return Err(Failure::Usage("--tmax-us must be positive".into()));
        }
        if let Some(t1) = self.t1_us {
            if !t1.is_finite() || t1 <= 0.0 {
                return Err(Failure::Usage("--t1-us must be positive".into()));
            }
        }
        let config = load_config(&self.config)?;
        let cluster = config
            .find_cluster(&self.cluster)
            .map_err(|e| Failure::Validation(e.to_string()))?;

        let simulate = || {
            simulate_rabi_grid(
                cluster,
                self.fmin,
                self.fmax,
                self.fpoints,
                self.tmax_us,
                self.tsteps,
                self.t1_us,
            )
        };
        let grid = if self.threads == 0 {
            simulate()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.threads)
                .build()
                .map_err(|e| Failure::Numerical(format!("cannot build thread pool: {e}")))?;
            pool.install(simulate)
        }
        .map_err(|e| Failure::Numerical(e.to_string()))?;

        ensure_out_dir(out_dir)?;
        let mut csv = Vec::new();
        write_grid_csv(&grid, &mut csv).expect("in-memory write");
        write_bytes(&out_dir.join("rabi.csv"), &csv)?;
        write_bytes(&out_dir.join("rabi.json"), &json_pretty(&grid))?;
        let manifest = RunManifest::new(
            "rabi",
            self.params(),
            Some(digest_file(&self.config).map_err(|e| Failure::Validation(e.to_string()))?),
        );
        manifest
            .write(out_dir)
            .map_err(|e| Failure::Validation(e.to_string()))?;
        println!(
            "wrote {} and rabi.json ({} x {} grid{})",
            out_dir.join("rabi.csv").display(),
            self.fpoints,
            self.tsteps,
            if self.t1_us.is_some() {
                ", T1 envelope applied"
            } else {
                ""
            }
        );
        Ok(())
    }
}

// ----------------------------------------------------------------------- trace

pub struct TraceRun {
    pub config: PathBuf,
    pub cluster: String,
    pub fq_ghz: Option<f64>,
    pub tmax_us: f64,
    pub tsteps: usize,
    pub t1_us: Option<f64>,
    pub normalized: bool,
}

impl TraceRun {
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut p = BTreeMap::from([
            ("config".into(), self.config.display().to_string()),
            ("cluster".into(), self.cluster.clone()),
            ("tmax_us".into(), self.tmax_us.to_string()),
            ("tsteps".into(), self.tsteps.to_string()),
            ("normalized".into(), self.normalized.to_string()),
        ]);
        if let Some(fq) = self.fq_ghz {
            p.insert("fq_ghz".into(), fq.to_string());
        }
        if let Some(t1) = self.t1_us {
            p.insert("t1_us".into(), t1.to_string());
        }
        p
    }

    pub fn from_manifest(m: &RunManifest) -> Result<Self, Failure> {
        Ok(Self {
            config: PathBuf::from(
                m.param("config")
                    .ok_or_else(|| Failure::Validation("manifest missing 'config'".into()))?,
            ),
            cluster: parse_param(m, "cluster")?,
            fq_ghz: parse_param_opt(m, "fq_ghz")?,
            tmax_us: parse_param(m, "tmax_us")?,
            tsteps: parse_param(m, "tsteps")?,
            t1_us: parse_param_opt(m, "t1_us")?,
            normalized: parse_param(m, "normalized")?,
        })
    }

    pub fn run(&self, out_dir: &Path) -> Result<(), Failure> {
        if self.tsteps < 2 {
            return Err(Failure::Usage("--tsteps must be at least 2".into()));
        }
        if !self.tmax_us.is_finite() || self.tmax_us <= 0.0 {
            return Err(Failure::Usage("--tmax-us must be positive".into()));
        }
        let config = load_config(&self.config)?;
        let cluster = config
            .find_cluster(&self.cluster)
            .map_err(|e| Failure::Validation(e.to_string()))?;
        let fq = self.fq_ghz.unwrap_or_else(|| cluster.mean_frequency_ghz());
        let trace = simulate_trace(cluster, fq, self.tmax_us, self.tsteps, self.t1_us)
            .map_err(|e| Failure::Numerical(e.to_string()))?;
        let normalized = self.normalized.then(|| {
            let col = collective_couplings(cluster);
            normalized_collective_population(&trace, col.n_modes, col.g_bar_mhz)
        });
        ensure_out_dir(out_dir)?;
        let mut csv = Vec::new();
        write_trace_csv(&trace, normalized.as_deref(), &mut csv).expect("in-memory write");
        let path = out_dir.join("trace.csv");
        write_bytes(&path, &csv)?;
        let manifest = RunManifest::new(
            "trace",
            self.params(),
            Some(digest_file(&self.config).map_err(|e| Failure::Validation(e.to_string()))?),
        );
        manifest
            .write(out_dir)
            .map_err(|e| Failure::Validation(e.to_string()))?;
        println!(
            "wrote {} ({} samples at {} GHz)",
            path.display(),
            self.tsteps,
            fq
        );
        Ok(())
    }
}

// ----------------------------------------------------------------------- dicke

pub struct DickeRun {
    pub config: Option<PathBuf>,
    pub cluster: Option<String>,
    pub synthetic_n: Option<usize>,
    pub synthetic_g_mhz: Option<f64>,
    pub synthetic_f0_ghz: Option<f64>,
    pub synthetic_spacing_mhz: Option<f64>,
    pub fq_ghz: Option<f64>,
    pub fidelity_floor: f64,
}

/// Time grid of the report curves: 0–0.25 µs in 2.5 ns steps, comparable to
/// a measured purity trace.
const DICKE_CURVE_TMAX_US: f64 = 0.25;
const DICKE_CURVE_POINTS: usize = 101;

#[derive(Serialize)]
struct TauMinPurityReport {
    from_g_eff_us: f64,
    from_sqrt_n_g_bar_us: f64,
}

#[derive(Serialize)]
struct TauTimedReport {
    fidelity_floor: f64,
    closed_form_mean_spacing_us: Option<f64>,
    numeric_root_exact_us: Option<f64>,
}

#[derive(Serialize)]
struct DickeCurves {
    times_us: Vec<f64>,
    fidelity_exact: Vec<f64>,
    fidelity_closed_form_mean_spacing: Option<Vec<f64>>,
    purity_analytic: Vec<f64>,
    purity_simulated: Vec<f64>,
    population_simulated: Vec<f64>,
}

#[derive(Serialize)]
struct SimulatedPurityMinimum {
    time_us: f64,
    purity: f64,
    grid_step_us: f64,
}

#[derive(Serialize)]
struct DickeReport {
    cluster: String,
    n_modes: usize,
    qubit_frequency_ghz: f64,
    g_eff_mhz: f64,
    g_bar_mhz: f64,
    mean_spacing_mhz: Option<f64>,
    tau_min_purity: TauMinPurityReport,
    tau_timed: TauTimedReport,
    simulated_purity_minimum: Option<SimulatedPurityMinimum>,
    curves: DickeCurves,
}

fn first_local_min(values: &[f64]) -> Option<usize> {
    (1..values.len().saturating_sub(1))
        .find(|&i| values[i] <= values[i - 1] && values[i] <= values[i + 1])
}

impl DickeRun {
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut p = BTreeMap::from([(
            "fidelity_floor".to_string(),
            self.fidelity_floor.to_string(),
        )]);
        if let Some(c) = &self.config {
            p.insert("config".into(), c.display().to_string());
        }
        if let Some(c) = &self.cluster {
            p.insert("cluster".into(), c.clone());
        }
        if let Some(n) = self.synthetic_n {
            p.insert("n_modes".into(), n.to_string());
        }
        if let Some(g) = self.synthetic_g_mhz {
            p.insert("coupling_mhz".into(), g.to_string());
        }
        if let Some(f) = self.synthetic_f0_ghz {
            p.insert("frequency_ghz".into(), f.to_string());
        }
        if let Some(s) = self.synthetic_spacing_mhz {
            p.insert("spacing_mhz".into(), s.to_string());
        }
        if let Some(fq) = self.fq_ghz {
            p.insert("fq_ghz".into(), fq.to_string());
        }
        p
    }

    pub fn from_manifest(m: &RunManifest) -> Result<Self, Failure> {
        Ok(Self {
            config: m.param("config").map(PathBuf::from),
            cluster: m.param("cluster").map(str::to_string),
            synthetic_n: parse_param_opt(m, "n_modes")?,
            synthetic_g_mhz: parse_param_opt(m, "coupling_mhz")?,
            synthetic_f0_ghz: parse_param_opt(m, "frequency_ghz")?,
            synthetic_spacing_mhz: parse_param_opt(m, "spacing_mhz")?,
            fq_ghz: parse_param_opt(m, "fq_ghz")?,
            fidelity_floor: parse_param(m, "fidelity_floor")?,
        })
    }

    fn resolve_cluster(&self) -> Result<(ClusterSpec, Option<String>), Failure> {
        if !(self.fidelity_floor > 0.0 && self.fidelity_floor < 1.0) {
            return Err(Failure::Usage(format!(
                "--fidelity-floor must lie strictly between 0 and 1, got {}",
                self.fidelity_floor
            )));
        }
        match (&self.config, &self.cluster) {
            (Some(config), Some(name)) => {
                let cfg = load_config(config)?;
                let cluster = cfg
                    .find_cluster(name)
                    .map_err(|e| Failure::Validation(e.to_string()))?
                    .clone();
                let digest = digest_file(config).map_err(|e| Failure::Validation(e.to_string()))?;
                Ok((cluster, Some(digest)))
            }
            (None, None) => {
                let (n, g, f0, spacing) = match (
                    self.synthetic_n,
                    self.synthetic_g_mhz,
                    self.synthetic_f0_ghz,
                    self.synthetic_spacing_mhz,
                ) {
                    (Some(n), Some(g), Some(f0), Some(s)) => (n, g, f0, s),
                    _ => {
                        return Err(Failure::Usage(
                            "either --config with --cluster, or all of --n-modes, \
                             --coupling-mhz, --frequency-ghz, --spacing-mhz are required"
                                .into(),
                        ))
                    }
                };
                if n == 0
                    || !(g.is_finite() && g > 0.0)
                    || !(f0.is_finite() && f0 > 0.0)
                    || spacing < 0.0
                {
                    return Err(Failure::Usage(
                        "synthetic cluster needs n >= 1, coupling > 0, frequency > 0, \
                         spacing >= 0"
                            .into(),
                    ));
                }
                Ok((
                    ClusterSpec::synthetic_equal("synthetic", n, f0, spacing, g),
                    None,
                ))
            }
            _ => Err(Failure::Usage(
                "--config and --cluster must be given together".into(),
            )),
        }
    }

    pub fn run(&self, out_dir: &Path) -> Result<(), Failure> {
        let (cluster, digest) = self.resolve_cluster()?;
        let col = collective_couplings(&cluster);
        let fq = self.fq_ghz.unwrap_or_else(|| cluster.mean_frequency_ghz());
        let mean_spacing = intra_cluster_spacings(&cluster)
            .ok()
            .map(|sp| sp.iter().sum::<f64>() / sp.len() as f64);
        let closed_form_tau = match mean_spacing {
            Some(s) if s > 0.0 && cluster.n_modes() >= 2 => {
                Some(tau_timed(cluster.n_modes(), s, self.fidelity_floor))
            }
            _ => None,
        };
        let numeric_tau = tau_timed_numeric_exact(&cluster, self.fidelity_floor);

        let dt = DICKE_CURVE_TMAX_US / (DICKE_CURVE_POINTS - 1) as f64;
        let trace = simulate_trace(&cluster, fq, DICKE_CURVE_TMAX_US, DICKE_CURVE_POINTS, None)
            .map_err(|e| Failure::Numerical(e.to_string()))?;
        let times_us = trace.times_us.clone();
        let fidelity_exact_curve: Vec<f64> = times_us
            .iter()
            .map(|&t| fidelity_exact(&cluster, fq, t))
            .collect();
        let closed_curve = mean_spacing.filter(|&s| s > 0.0).map(|s| {
            times_us
                .iter()
                .map(|&t| fidelity_closed_form(cluster.n_modes(), s, t))
                .collect()
        });
        let purity_analytic_curve: Vec<f64> = times_us
            .iter()
            .map(|&t| purity_analytic(col.g_eff_mhz, t))
            .collect();
        let minimum = first_local_min(&trace.purity).map(|i| SimulatedPurityMinimum {
            time_us: trace.times_us[i],
            purity: trace.purity[i],
            grid_step_us: dt,
        });

        let report = DickeReport {
            cluster: cluster.name.clone(),
            n_modes: col.n_modes,
            qubit_frequency_ghz: fq,
            g_eff_mhz: col.g_eff_mhz,
            g_bar_mhz: col.g_bar_mhz,
            mean_spacing_mhz: mean_spacing,
            tau_min_purity: TauMinPurityReport {
                from_g_eff_us: tau_min_purity(&col, false),
                from_sqrt_n_g_bar_us: tau_min_purity(&col, true),
            },
            tau_timed: TauTimedReport {
                fidelity_floor: self.fidelity_floor,
                closed_form_mean_spacing_us: closed_form_tau,
                numeric_root_exact_us: numeric_tau,
            },
            simulated_purity_minimum: minimum,
            curves: DickeCurves {
                times_us,
                fidelity_exact: fidelity_exact_curve,
                fidelity_closed_form_mean_spacing: closed_curve,
                purity_analytic: purity_analytic_curve,
                purity_simulated: trace.purity.clone(),
                population_simulated: trace.p_excited.clone(),
            },
        };

        ensure_out_dir(out_dir)?;
        let path = out_dir.join("dicke.json");
        write_bytes(&path, &json_pretty(&report))?;
        RunManifest::new("dicke", self.params(), digest)
            .write(out_dir)
            .map_err(|e| Failure::Validation(e.to_string()))?;
        println!(
            "wrote {} (g_eff = {:.4} MHz, tau_minP = {:.1} ns)",
            path.display(),
            col.g_eff_mhz,
            1e3 * tau_min_purity(&col, false)
        );
        Ok(())
    }
}

// --------------------------------------------------------------------- readout

pub struct ReadoutRun {
    pub config: PathBuf,
    pub qubit: String,
    pub p0: Option<f64>,
    pub p1: Option<f64>,
    pub n0: Option<u64>,
    pub n1: Option<u64>,
    pub input: Option<PathBuf>,
}

#[derive(Serialize)]
struct ReadoutRecord {
    p0_noisy: f64,
    p1_noisy: f64,
    p0_unconstrained: f64,
    p1_unconstrained: f64,
    p0_corrected: f64,
    p1_corrected: f64,
}

impl ReadoutRun {
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut p = BTreeMap::from([
            ("config".into(), self.config.display().to_string()),
            ("qubit".into(), self.qubit.clone()),
        ]);
        if let Some(v) = self.p0 {
            p.insert("p0".into(), v.to_string());
        }
        if let Some(v) = self.p1 {
            p.insert("p1".into(), v.to_string());
        }
        if let Some(v) = self.n0 {
            p.insert("n0".into(), v.to_string());
        }
        if let Some(v) = self.n1 {
            p.insert("n1".into(), v.to_string());
        }
        if let Some(path) = &self.input {
            p.insert("input".into(), path.display().to_string());
        }
        p
    }

    pub fn from_manifest(m: &RunManifest) -> Result<Self, Failure> {
        Ok(Self {
            config: PathBuf::from(
                m.param("config")
                    .ok_or_else(|| Failure::Validation("manifest missing 'config'".into()))?,
            ),
            qubit: parse_param(m, "qubit")?,
            p0: parse_param_opt(m, "p0")?,
            p1: parse_param_opt(m, "p1")?,
            n0: parse_param_opt(m, "n0")?,
            n1: parse_param_opt(m, "n1")?,
            input: m.param("input").map(PathBuf::from),
        })
    }

    fn collect_inputs(&self) -> Result<Vec<ProbabilityVector>, Failure> {
        match (self.p0, self.p1, self.n0, self.n1, &self.input) {
            (Some(p0), Some(p1), None, None, None) => {
                Ok(vec![ProbabilityVector::new(p0, p1)
                    .map_err(|e| Failure::Validation(e.to_string()))?])
            }
            (None, None, Some(n0), Some(n1), None) => {
                Ok(vec![counts_to_probabilities(n0 as f64, n1 as f64)?])
            }
            (None, None, None, None, Some(path)) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Failure::Validation(format!("cannot read '{}': {e}", path.display()))
                })?;
                let mut lines = text.lines();
                let counts = match lines.next().map(str::trim) {
                    Some("p0,p1") => false,
                    Some("n0,n1") => true,
                    other => {
                        return Err(Failure::Validation(format!(
                            "input CSV must start with header 'p0,p1' or 'n0,n1', got {other:?}"
                        )))
                    }
                };
                let mut out = Vec::new();
                for (ln, line) in lines.enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let mut fields = line.split(',');
                    let parse = |field: Option<&str>| -> Result<f64, Failure> {
                        field.and_then(|f| f.trim().parse().ok()).ok_or_else(|| {
                            Failure::Validation(format!(
                                "input CSV line {}: expected two numbers, got '{line}'",
                                ln + 2
                            ))
                        })
                    };
                    let a = parse(fields.next())?;
                    let b = parse(fields.next())?;
                    let vector = if counts {
                        counts_to_probabilities(a, b)
                            .map_err(|e| Failure::Validation(format!("line {}: {}", ln + 2, e.message())))?
                    } else {
                        ProbabilityVector::new(a, b)
                            .map_err(|e| Failure::Validation(format!("line {}: {e}", ln + 2)))?
                    };
                    out.push(vector);
                }
                if out.is_empty() {
                    return Err(Failure::Validation("input CSV holds no records".into()));
                }
                Ok(out)
            }
            _ => Err(Failure::Usage(
                "give exactly one of --p0 with --p1, --n0 with --n1, or --input CSV".into(),
            )),
        }
    }

    pub fn run(&self, out_dir: &Path) -> Result<(), Failure> {
        let config = load_config(&self.config)?;
        let matrix = config
            .response_matrix(&self.qubit)
            .map_err(|e| Failure::Validation(e.to_string()))?;
        let inputs = self.collect_inputs()?;
        let mut records = Vec::with_capacity(inputs.len());
        for noisy in &inputs {
            let (u0, u1) = invert_unconstrained(matrix, noisy)
                .map_err(|e| Failure::Numerical(e.to_string()))?;
            let corrected = correct_constrained(matrix, noisy);
            records.push(ReadoutRecord {
                p0_noisy: noisy.p0,
                p1_noisy: noisy.p1,
                p0_unconstrained: u0,
                p1_unconstrained: u1,
                p0_corrected: corrected.p0,
                p1_corrected: corrected.p1,
            });
        }

        ensure_out_dir(out_dir)?;
        let mut csv = String::from(
            "p0_noisy,p1_noisy,p0_unconstrained,p1_unconstrained,p0_corrected,p1_corrected\n",
        );
        for r in &records {
            use cqad_core::output::full_precision as fp;
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fp(r.p0_noisy),
                fp(r.p1_noisy),
                fp(r.p0_unconstrained),
                fp(r.p1_unconstrained),
                fp(r.p0_corrected),
                fp(r.p1_corrected)
            ));
        }
        let path = out_dir.join("readout.csv");
        write_bytes(&path, csv.as_bytes())?;
        RunManifest::new(
            "readout",
            self.params(),
            Some(digest_file(&self.config).map_err(|e| Failure::Validation(e.to_string()))?),
        )
        .write(out_dir)
        .map_err(|e| Failure::Validation(e.to_string()))?;
        let first = &records[0];
        println!(
            "corrected ({}, {}) -> ({:.5}, {:.5}) [unconstrained ({:.5}, {:.5})], wrote {}",
            first.p0_noisy,
            first.p1_noisy,
            first.p0_corrected,
            first.p1_corrected,
            first.p0_unconstrained,
            first.p1_unconstrained,
            path.display()
        );
        Ok(())
    }
}

/// Shot counts to probabilities: p_i = n_i / (n0 + n1).
fn counts_to_probabilities(n0: f64, n1: f64) -> Result<ProbabilityVector, Failure> {
    if n0 < 0.0 || n1 < 0.0 || !n0.is_finite() || !n1.is_finite() {
        return Err(Failure::Validation(format!(
            "counts must be non-negative, got ({n0}, {n1})"
        )));
    }
    let total = n0 + n1;
    if total <= 0.0 {
        return Err(Failure::Validation(
            "counts must not both be zero".into(),
        ));
    }
    ProbabilityVector::new(n0 / total, n1 / total).map_err(|e| Failure::Validation(e.to_string()))
}

// ---------------------------------------------------------------------- replay

pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<(), Failure> {
    let manifest = RunManifest::read(manifest_path).map_err(Failure::Validation)?;
    if let Some(config) = manifest.param("config") {
        let digest = digest_file(Path::new(config))
            .map_err(|e| Failure::Validation(format!("cannot digest '{config}': {e}")))?;
        if digest != manifest.config_digest {
            return Err(Failure::Validation(format!(
                "device file '{config}' no longer matches the manifest digest \
                 ({digest} vs {})",
                manifest.config_digest
            )));
        }
    }
    match manifest.command.as_str() {
        "spectroscopy" => SpectroscopyRun::from_manifest(&manifest)?.run(out_dir),
        "rabi" => RabiRun::from_manifest(&manifest)?.run(out_dir),
        "trace" => TraceRun::from_manifest(&manifest)?.run(out_dir),
        "dicke" => DickeRun::from_manifest(&manifest)?.run(out_dir),
        "readout" => ReadoutRun::from_manifest(&manifest)?.run(out_dir),
        other => Err(Failure::Validation(format!(
            "manifest names unknown command '{other}'"
        ))),
    }
}
