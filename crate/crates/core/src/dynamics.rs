//! Time-domain simulation: qubit population and purity traces from exact
//! single-excitation-sector evolution, 2D vacuum-Rabi grids over
//! (qubit frequency × time), and the static-Dicke-normalized population.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::device::ClusterSpec;
use crate::dicke::static_dicke_population;
use crate::error::DynamicsError;
use crate::hamiltonian::{build_sector_hamiltonian, purity_from_population};
use crate::output::full_precision;

/// Qubit population and purity over a uniform, endpoint-inclusive time grid,
/// starting from |e, ∅⟩.
#[derive(Debug, Clone)]
pub struct PopulationTrace {
    pub times_us: Vec<f64>,
    pub p_excited: Vec<f64>,
    pub purity: Vec<f64>,
    /// Set when a T1 envelope was applied to the population (purity is then
    /// recomputed from the damped population).
    pub envelope_applied: bool,
}

fn time_grid(t_max_us: f64, steps: usize) -> Result<Vec<f64>, DynamicsError> {
    if steps < 2 {
        return Err(DynamicsError::InvalidTimeGrid(format!(
            "at least 2 samples required, got {steps}"
        )));
    }
    if !t_max_us.is_finite() || t_max_us <= 0.0 {
        return Err(DynamicsError::InvalidTimeGrid(format!(
            "t_max must be positive, got {t_max_us}"
        )));
    }
    let dt = t_max_us / (steps - 1) as f64;
    Ok((0..steps).map(|i| i as f64 * dt).collect())
}

/// Exact sector evolution from |e, ∅⟩ at a fixed qubit frequency. One
/// eigendecomposition of the (N+1)-dimensional sector Hamiltonian amortizes
/// over the whole grid. With `t1_us` the excited population is damped by
/// e^{−t/T1} and the purity recomputed from the damped population.
pub fn simulate_trace(
    cluster: &ClusterSpec,
    qubit_frequency_ghz: f64,
    t_max_us: f64,
    steps: usize,
    t1_us: Option<f64>,
) -> Result<PopulationTrace, DynamicsError> {
    let times_us = time_grid(t_max_us, steps)?;
    if let Some(t1) = t1_us {
        if !t1.is_finite() || t1 <= 0.0 {
            return Err(DynamicsError::InvalidTimeGrid(format!(
                "t1 must be positive, got {t1}"
            )));
        }
    }
    let eig = build_sector_hamiltonian(qubit_frequency_ghz, cluster).eigen();
    let mut p_excited = Vec::with_capacity(times_us.len());
    let mut purity = Vec::with_capacity(times_us.len());
    for &t in &times_us {
        let state = eig.state_from_excited(t);
        debug_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
        let mut q = state.population_excited();
        if let Some(t1) = t1_us {
            q *= (-t / t1).exp();
        }
        p_excited.push(q);
        purity.push(purity_from_population(q));
    }
    Ok(PopulationTrace {
        times_us,
        p_excited,
        purity,
        envelope_applied: t1_us.is_some(),
    })
}

/// Vacuum-Rabi landscape: excited population over (qubit frequency × time).
#[derive(Debug, Clone, Serialize)]
pub struct RabiGrid {
    pub qubit_frequencies_ghz: Vec<f64>,
    pub times_us: Vec<f64>,
    /// Row i is the trace at `qubit_frequencies_ghz[i]`.
    pub p_excited: Vec<Vec<f64>>,
}

/// One trace per frequency row, rows computed in parallel. Row order (and
/// thus output bytes) is independent of the thread schedule.
#[allow(clippy::too_many_arguments)]
pub fn simulate_rabi_grid(
    cluster: &ClusterSpec,
    f_min_ghz: f64,
    f_max_ghz: f64,
    f_points: usize,
    t_max_us: f64,
    t_points: usize,
    t1_us: Option<f64>,
) -> Result<RabiGrid, DynamicsError> {
    if f_points < 2 {
        return Err(DynamicsError::InvalidFrequencyGrid(format!(
            "at least 2 frequency points required, got {f_points}"
        )));
    }
    if !f_min_ghz.is_finite() || !f_max_ghz.is_finite() || f_min_ghz >= f_max_ghz {
        return Err(DynamicsError::InvalidFrequencyGrid(format!(
            "f_min < f_max required, got {f_min_ghz} / {f_max_ghz}"
        )));
    }
    let fstep = (f_max_ghz - f_min_ghz) / (f_points - 1) as f64;
    let qubit_frequencies_ghz: Vec<f64> = (0..f_points)
        .map(|i| f_min_ghz + i as f64 * fstep)
        .collect();
    let times_us = time_grid(t_max_us, t_points)?;

    let p_excited: Vec<Vec<f64>> = qubit_frequencies_ghz
        .par_iter()
        .map(|&fq| {
            simulate_trace(cluster, fq, t_max_us, t_points, t1_us)
                .expect("grids validated above")
                .p_excited
        })
        .collect();

    Ok(RabiGrid {
        qubit_frequencies_ghz,
        times_us,
        p_excited,
    })
}

/// Denominator floor below which the normalized population is masked instead
/// of amplifying noise near the static-Dicke zeros.
pub const NORMALIZATION_MASK_THRESHOLD: f64 = 1e-3;

/// Population trace divided by the static-Dicke reference
/// cos²(√N·ḡ_angular·t); samples where the reference is below the masking
/// threshold come back as `None`.
pub fn normalized_collective_population(
    trace: &PopulationTrace,
    n_modes: usize,
    mean_coupling_mhz: f64,
) -> Vec<Option<f64>> {
    assert!(mean_coupling_mhz > 0.0, "mean coupling must be positive");
    trace
        .times_us
        .iter()
        .zip(&trace.p_excited)
        .map(|(&t, &p)| {
            let denom = static_dicke_population(n_modes, mean_coupling_mhz, t);
            (denom >= NORMALIZATION_MASK_THRESHOLD).then(|| p / denom)
        })
        .collect()
}

/// Trace CSV: `time_us,p_excited,purity` plus an optional `normalized`
/// column (blank where masked).
pub fn write_trace_csv<W: Write>(
    trace: &PopulationTrace,
    normalized: Option<&[Option<f64>]>,
    mut w: W,
) -> io::Result<()> {
    match normalized {
        None => writeln!(w, "time_us,p_excited,purity")?,
        Some(_) => writeln!(w, "time_us,p_excited,purity,normalized")?,
    }
    for i in 0..trace.times_us.len() {
        let base = format!(
            "{},{},{}",
            full_precision(trace.times_us[i]),
            full_precision(trace.p_excited[i]),
            full_precision(trace.purity[i])
        );
        match normalized {
            None => writeln!(w, "{base}")?,
            Some(norm) => match norm[i] {
                Some(v) => writeln!(w, "{base},{}", full_precision(v))?,
                None => writeln!(w, "{base},")?,
            },
        }
    }
    Ok(())
}

/// Long-form grid CSV: `frequency_ghz,time_us,p_excited`, frequency-major.
pub fn write_grid_csv<W: Write>(grid: &RabiGrid, mut w: W) -> io::Result<()> {
    writeln!(w, "frequency_ghz,time_us,p_excited")?;
    for (fq, row) in grid.qubit_frequencies_ghz.iter().zip(&grid.p_excited) {
        for (t, p) in grid.times_us.iter().zip(row) {
            writeln!(
                w,
                "{},{},{}",
                full_precision(*fq),
                full_precision(*t),
                full_precision(*p)
            )?;
        }
    }
    Ok(())
}
