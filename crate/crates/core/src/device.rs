//! Device parameters: qubits, phononic clusters, and readout response
//! matrices, ingested from a JSON device file.
//!
//! Key names carry explicit unit suffixes (`frequency_ghz`, `coupling_mhz`)
//! so stored values are always linear frequencies; the 2π conversion happens
//! once, inside the simulation layers. Two canonical fixtures under
//! `fixtures/` hold the measured parameters of the two bundled devices.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DeviceError;
use crate::readout::ResponseMatrix;
use crate::units::{ghz_to_mhz, ghz_to_rad_per_us};

/// A flux-tunable transmon qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSpec {
    pub name: String,
    pub idle_frequency_ghz: f64,
    pub min_frequency_ghz: f64,
    pub max_frequency_ghz: f64,
    /// Negative for a transmon.
    pub anharmonicity_mhz: f64,
    /// Relaxation time; may feed the optional decay envelope in dynamics.
    pub t1_us: f64,
    /// Stored only.
    pub t2_ramsey_us: f64,
    /// Stored-only readout/resonator metadata.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<QubitMetadata>,
}

/// Resonator and coherence rows that are stored but never consumed by the
/// simulation layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator_frequency_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator_linewidth_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersive_shift_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_echo_us: Option<f64>,
}

impl QubitSpec {
    /// Minimal qubit for synthetic setups: idle frequency and anharmonicity
    /// only, tuning range wide open.
    pub fn bare(name: &str, idle_frequency_ghz: f64, anharmonicity_mhz: f64) -> Self {
        Self {
            name: name.to_string(),
            idle_frequency_ghz,
            min_frequency_ghz: idle_frequency_ghz - 1.0,
            max_frequency_ghz: idle_frequency_ghz + 1.0,
            anharmonicity_mhz,
            t1_us: f64::INFINITY,
            t2_ramsey_us: f64::INFINITY,
            metadata: None,
        }
    }

    fn validate(&self) -> Result<(), DeviceError> {
        if !(self.min_frequency_ghz < self.idle_frequency_ghz
            && self.idle_frequency_ghz < self.max_frequency_ghz)
        {
            return Err(DeviceError::Validation(format!(
                "qubit '{}': min_frequency < idle_frequency < max_frequency violated \
                 ({} / {} / {})",
                self.name, self.min_frequency_ghz, self.idle_frequency_ghz, self.max_frequency_ghz
            )));
        }
        if self.anharmonicity_mhz >= 0.0 {
            return Err(DeviceError::Validation(format!(
                "qubit '{}': anharmonicity < 0 violated (got {})",
                self.name, self.anharmonicity_mhz
            )));
        }
        Ok(())
    }
}

/// One acoustic mode: frequency ω/2π and qubit coupling g/2π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub frequency_ghz: f64,
    pub coupling_mhz: f64,
}

/// A cluster of near-resonant modes, ordered by descending frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub name: String,
    /// Name of the qubit this cluster couples to.
    pub qubit: String,
    pub modes: Vec<ModeSpec>,
}

/// Largest cluster the device files may declare.
pub const MAX_CLUSTER_MODES: usize = 8;

impl ClusterSpec {
    /// Unvalidated constructor for synthetic clusters in analysis code and
    /// tests (degenerate spacings and zero couplings are allowed here; device
    /// files reject both at load).
    pub fn synthetic(name: &str, frequencies_ghz: &[f64], couplings_mhz: &[f64]) -> Self {
        assert_eq!(frequencies_ghz.len(), couplings_mhz.len());
        Self {
            name: name.to_string(),
            qubit: String::new(),
            modes: frequencies_ghz
                .iter()
                .zip(couplings_mhz)
                .map(|(&frequency_ghz, &coupling_mhz)| ModeSpec {
                    frequency_ghz,
                    coupling_mhz,
                })
                .collect(),
        }
    }

    /// Synthetic cluster with `n` equally spaced modes starting at `f0_ghz`
    /// and descending by `spacing_mhz`, all with coupling `g_mhz`.
    pub fn synthetic_equal(
        name: &str,
        n: usize,
        f0_ghz: f64,
        spacing_mhz: f64,
        g_mhz: f64,
    ) -> Self {
        let freqs: Vec<f64> = (0..n)
            .map(|k| f0_ghz - k as f64 * spacing_mhz / 1000.0)
            .collect();
        Self::synthetic(name, &freqs, &vec![g_mhz; n])
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn frequencies_ghz(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.frequency_ghz).collect()
    }

    pub fn couplings_mhz(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.coupling_mhz).collect()
    }

    /// Arithmetic mean of the mode frequencies; used as the numerical frame
    /// reference and as the hybridization-center default.
    pub fn mean_frequency_ghz(&self) -> f64 {
        self.modes.iter().map(|m| m.frequency_ghz).sum::<f64>() / self.modes.len() as f64
    }

    /// Detunings Δ_n = ω_n − ω_qu in rad/µs. Computed from the frequency
    /// difference in GHz before the angular conversion, which avoids
    /// cancelling the multi-GHz carrier in the subtraction.
    pub fn detunings_rad_per_us(&self, qubit_frequency_ghz: f64) -> Vec<f64> {
        self.modes
            .iter()
            .map(|m| ghz_to_rad_per_us(m.frequency_ghz - qubit_frequency_ghz))
            .collect()
    }

    fn validate(&self) -> Result<(), DeviceError> {
        if self.modes.is_empty() || self.modes.len() > MAX_CLUSTER_MODES {
            return Err(DeviceError::Validation(format!(
                "cluster '{}': 1 <= mode count <= {MAX_CLUSTER_MODES} violated (got {})",
                self.name,
                self.modes.len()
            )));
        }
        for (i, m) in self.modes.iter().enumerate() {
            if m.coupling_mhz <= 0.0 {
                return Err(DeviceError::Validation(format!(
                    "cluster '{}' mode {i}: coupling > 0 violated (got {})",
                    self.name, m.coupling_mhz
                )));
            }
            if m.frequency_ghz <= 0.0 {
                return Err(DeviceError::Validation(format!(
                    "cluster '{}' mode {i}: frequency > 0 violated (got {})",
                    self.name, m.frequency_ghz
                )));
            }
        }
        for w in self.modes.windows(2) {
            if w[0].frequency_ghz - w[1].frequency_ghz <= 0.0 {
                return Err(DeviceError::Validation(format!(
                    "cluster '{}': intra-cluster spacing must be positive \
                     (modes must descend in frequency; got {} then {})",
                    self.name, w[0].frequency_ghz, w[1].frequency_ghz
                )));
            }
        }
        Ok(())
    }
}

/// Adjacent intra-cluster spacings δ in MHz, positive by the descending-order
/// invariant. Errors on single-mode clusters, where the result would be empty.
pub fn intra_cluster_spacings(cluster: &ClusterSpec) -> Result<Vec<f64>, DeviceError> {
    if cluster.modes.len() < 2 {
        return Err(DeviceError::SingleModeCluster {
            name: cluster.name.clone(),
        });
    }
    Ok(cluster
        .modes
        .windows(2)
        .map(|w| ghz_to_mhz(w[0].frequency_ghz - w[1].frequency_ghz))
        .collect())
}

/// Full device description as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub name: String,
    /// Inter-cluster spacing Δ_{c,c+1}/2π; informational.
    pub fsr_mhz: f64,
    pub qubits: Vec<QubitSpec>,
    pub clusters: Vec<ClusterSpec>,
    pub response_matrices: BTreeMap<String, ResponseMatrix>,
}

/// Ratio of max coupling to FSR above which the dispersive-separation
/// assumption between clusters gets a validation warning.
pub const FSR_COUPLING_WARN_RATIO: f64 = 0.1;

impl DeviceConfig {
    pub fn find_qubit(&self, name: &str) -> Result<&QubitSpec, DeviceError> {
        self.qubits
            .iter()
            .find(|q| q.name == name)
            .ok_or_else(|| DeviceError::UnknownQubit {
                name: name.to_string(),
                available: self
                    .qubits
                    .iter()
                    .map(|q| q.name.as_str())
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }

    pub fn find_cluster(&self, name: &str) -> Result<&ClusterSpec, DeviceError> {
        self.clusters
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| DeviceError::UnknownCluster {
                name: name.to_string(),
                available: self
                    .clusters
                    .iter()
                    .map(|c| c.name.as_str())
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }

    pub fn response_matrix(&self, qubit: &str) -> Result<&ResponseMatrix, DeviceError> {
        self.response_matrices
            .get(qubit)
            .ok_or_else(|| DeviceError::UnknownQubit {
                name: qubit.to_string(),
                available: self
                    .response_matrices
                    .keys()
                    .map(String::as_str)
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }

    /// Validate every invariant; returns warnings for soft violations.
    pub fn validate(&self) -> Result<Vec<String>, DeviceError> {
        if self.fsr_mhz <= 0.0 {
            return Err(DeviceError::Validation(format!(
                "device '{}': fsr > 0 violated (got {})",
                self.name, self.fsr_mhz
            )));
        }
        for q in &self.qubits {
            q.validate()?;
        }
        let mut warnings = Vec::new();
        for c in &self.clusters {
            c.validate()?;
            if self.qubits.iter().all(|q| q.name != c.qubit) {
                return Err(DeviceError::Validation(format!(
                    "cluster '{}' references unknown qubit '{}'",
                    c.name, c.qubit
                )));
            }
            let gmax = c
                .modes
                .iter()
                .map(|m| m.coupling_mhz)
                .fold(f64::NEG_INFINITY, f64::max);
            if gmax / self.fsr_mhz > FSR_COUPLING_WARN_RATIO {
                warnings.push(format!(
                    "cluster '{}': max coupling {:.3} MHz is not small against the \
                     inter-cluster FSR {:.3} MHz (ratio {:.3} > {FSR_COUPLING_WARN_RATIO})",
                    c.name,
                    gmax,
                    self.fsr_mhz,
                    gmax / self.fsr_mhz
                ));
            }
        }
        for (qubit, m) in &self.response_matrices {
            if self.qubits.iter().all(|q| &q.name != qubit) {
                return Err(DeviceError::Validation(format!(
                    "response matrix references unknown qubit '{qubit}'"
                )));
            }
            m.validate()
                .map_err(|e| DeviceError::Validation(format!("qubit '{qubit}': {e}")))?;
        }
        Ok(warnings)
    }
}

/// A parsed-and-validated device file plus its soft warnings.
#[derive(Debug, Clone)]
pub struct LoadedDevice {
    pub config: DeviceConfig,
    pub warnings: Vec<String>,
}

/// Load a device file, validate all invariants, and report warnings.
pub fn load_device_config(path: &Path) -> Result<LoadedDevice, DeviceError> {
    let text = fs::read_to_string(path).map_err(|source| DeviceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let config: DeviceConfig = serde_json::from_str(&text).map_err(|e| DeviceError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let warnings = config.validate()?;
    Ok(LoadedDevice { config, warnings })
}
