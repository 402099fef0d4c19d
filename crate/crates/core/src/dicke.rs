//! Closed-form collective-dynamics quantities: effective couplings,
//! timed-Dicke states, static/timed overlap fidelity (exact, closed-form,
//! and small-phase series), the timed-Dicke transition time, the analytic
//! purity, and the minimum-purity time.

use num_complex::Complex64;

use crate::device::{intra_cluster_spacings, ClusterSpec};
use crate::units::mhz_to_rad_per_us;

/// Collective coupling figures of a cluster: g_eff = √(Σ g_n²) and the plain
/// mean ḡ = Σ g_n / N. The two coincide exactly only for equal couplings;
/// ḡ ≤ g_eff/√N ≤ max g_n always.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectiveCouplings {
    pub g_eff_mhz: f64,
    pub g_bar_mhz: f64,
    pub n_modes: usize,
}

pub fn collective_couplings(cluster: &ClusterSpec) -> CollectiveCouplings {
    let gs = cluster.couplings_mhz();
    let n = gs.len();
    let g_eff_mhz = gs.iter().map(|g| g * g).sum::<f64>().sqrt();
    let g_bar_mhz = gs.iter().sum::<f64>() / n as f64;
    debug_assert!(g_bar_mhz <= g_eff_mhz / (n as f64).sqrt() + 1e-12);
    CollectiveCouplings {
        g_eff_mhz,
        g_bar_mhz,
        n_modes: n,
    }
}

/// The dynamical timed-Dicke state: amplitude_n = g_n e^{iΔ_n t} / g_eff on
/// the single-phonon states, Δ_n = ω_n − ω_qu. At t = 0 (or for degenerate
/// modes, up to a global phase) this is the static Dicke state.
#[derive(Debug, Clone)]
pub struct TimedDickeState {
    pub amplitudes: Vec<Complex64>,
    pub detunings_rad_per_us: Vec<f64>,
    pub time_us: f64,
}

impl TimedDickeState {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

pub fn timed_dicke_state(
    cluster: &ClusterSpec,
    qubit_frequency_ghz: f64,
    t_us: f64,
) -> TimedDickeState {
    let detunings = cluster.detunings_rad_per_us(qubit_frequency_ghz);
    let g_eff = collective_couplings(cluster).g_eff_mhz;
    let amplitudes = cluster
        .couplings_mhz()
        .iter()
        .zip(&detunings)
        .map(|(&g, &d)| Complex64::from_polar(g / g_eff, d * t_us))
        .collect();
    TimedDickeState {
        amplitudes,
        detunings_rad_per_us: detunings,
        time_us: t_us,
    }
}

/// Overlap fidelity |⟨D_static | D(t)⟩|² by direct complex summation,
/// F = |Σ g_n² e^{iΔ_n t}|² / G². Valid for unequal couplings and spacings;
/// the qubit frequency only contributes a global phase.
pub fn fidelity_exact(cluster: &ClusterSpec, qubit_frequency_ghz: f64, t_us: f64) -> f64 {
    let detunings = cluster.detunings_rad_per_us(qubit_frequency_ghz);
    let gs = cluster.couplings_mhz();
    let total: f64 = gs.iter().map(|g| g * g).sum();
    let mut z = Complex64::new(0.0, 0.0);
    for (&g, &d) in gs.iter().zip(&detunings) {
        z += Complex64::from_polar(g * g / total, d * t_us);
    }
    z.norm_sqr()
}

/// Phase below which the Dirichlet ratio is replaced by its analytic limit 1.
const DEGENERATE_PHASE_TOL: f64 = 1e-9;

/// Closed-form fidelity for equal couplings and equal spacing δ:
/// F = (1/N²)(1 − cos[Nη])/(1 − cos[η]) with η = 2π·spacing·t, evaluated via
/// the half-angle form sin²(Nη/2)/sin²(η/2). When η is a multiple of 2π the
/// analytic limit 1 is returned.
pub fn fidelity_closed_form(n_modes: usize, spacing_mhz: f64, t_us: f64) -> f64 {
    let eta = mhz_to_rad_per_us(spacing_mhz) * t_us;
    let half = (eta / 2.0).sin();
    if half.abs() < DEGENERATE_PHASE_TOL {
        return 1.0;
    }
    let ratio = (n_modes as f64 * eta / 2.0).sin() / half;
    (ratio * ratio) / (n_modes as f64 * n_modes as f64)
}

/// Small-phase series of the closed form, 1 + (1 − N²)η²/12. Only accurate
/// for Nη well below 1.
pub fn fidelity_series(n_modes: usize, spacing_mhz: f64, t_us: f64) -> f64 {
    let eta = mhz_to_rad_per_us(spacing_mhz) * t_us;
    let n2 = (n_modes * n_modes) as f64;
    1.0 + (1.0 - n2) * eta * eta / 12.0
}

/// Timed-Dicke transition time from the small-phase expansion:
/// τ = (1/δ)·2√(3 − 3F₀)/√(N² − 1) with δ angular. Equal couplings and equal
/// spacing are assumed by the formula; returns +∞ for zero spacing.
pub fn tau_timed(n_modes: usize, spacing_mhz: f64, fidelity_floor: f64) -> f64 {
    assert!(n_modes >= 2, "tau_timed needs at least two modes");
    assert!(
        fidelity_floor > 0.0 && fidelity_floor < 1.0,
        "fidelity floor must lie in (0, 1)"
    );
    let n2 = (n_modes * n_modes) as f64;
    let eta = 2.0 * (3.0 - 3.0 * fidelity_floor).sqrt() / (n2 - 1.0).sqrt();
    eta / mhz_to_rad_per_us(spacing_mhz)
}

/// First time a fidelity curve crosses below `floor`: forward scan plus
/// bisection. `None` when the curve never drops below the floor within the
/// scan window (degenerate clusters stay at 1 forever).
fn first_time_below(f: impl Fn(f64) -> f64, floor: f64, t_hi_us: f64) -> Option<f64> {
    let steps = 20_000;
    let dt = t_hi_us / steps as f64;
    let mut prev = 0.0;
    for k in 1..=steps {
        let t = k as f64 * dt;
        if f(t) < floor {
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < floor {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        prev = t;
    }
    None
}

/// Numeric transition time on the exact fidelity of a concrete cluster; no
/// symmetry assumption. `None` for degenerate clusters.
pub fn tau_timed_numeric_exact(cluster: &ClusterSpec, fidelity_floor: f64) -> Option<f64> {
    let spacings = intra_cluster_spacings(cluster).ok()?;
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    if mean <= 0.0 {
        return None;
    }
    let window = 20.0 * tau_timed(cluster.n_modes(), mean, fidelity_floor);
    let fq = cluster.mean_frequency_ghz();
    first_time_below(|t| fidelity_exact(cluster, fq, t), fidelity_floor, window)
}

/// Numeric transition time on the equal-coupling closed form.
pub fn tau_timed_numeric_closed_form(
    n_modes: usize,
    spacing_mhz: f64,
    fidelity_floor: f64,
) -> Option<f64> {
    if spacing_mhz <= 0.0 {
        return None;
    }
    let window = 20.0 * tau_timed(n_modes, spacing_mhz, fidelity_floor);
    first_time_below(
        |t| fidelity_closed_form(n_modes, spacing_mhz, t),
        fidelity_floor,
        window,
    )
}

/// Static-Dicke qubit population cos²(√N · ḡ_angular · t), the equal-phase
/// collective exchange all timed traces are normalized against.
pub fn static_dicke_population(n_modes: usize, mean_coupling_mhz: f64, t_us: f64) -> f64 {
    let omega = (n_modes as f64).sqrt() * mhz_to_rad_per_us(mean_coupling_mhz);
    (omega * t_us).cos().powi(2)
}

/// Analytic qubit purity for resonant collective exchange:
/// P(t) = (3 + cos(4 g_eff,angular t))/4.
pub fn purity_analytic(g_eff_mhz: f64, t_us: f64) -> f64 {
    assert!(g_eff_mhz > 0.0, "purity_analytic needs a positive coupling");
    (3.0 + (4.0 * mhz_to_rad_per_us(g_eff_mhz) * t_us).cos()) / 4.0
}

/// Time of the first purity minimum. The default convention divides by
/// g_eff (τ = π/(4 g_eff,angular) = 1/(8 g_eff)); with `use_mean` the
/// √N·ḡ estimate is used instead. Both agree exactly for equal couplings.
pub fn tau_min_purity(collective: &CollectiveCouplings, use_mean: bool) -> f64 {
    let g = if use_mean {
        (collective.n_modes as f64).sqrt() * collective.g_bar_mhz
    } else {
        collective.g_eff_mhz
    };
    1.0 / (8.0 * g)
}
