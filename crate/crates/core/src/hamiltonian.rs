//! Hamiltonian builders: the full truncated-Fock-space Hamiltonian for a
//! qubit coupled to one cluster, and its single-excitation-sector reduction.
//!
//! Both builders work in a numerically shifted frame: the mean cluster mode
//! frequency times the total-excitation operator is subtracted, removing the
//! multi-GHz carrier from the diagonal. Populations, purity, and transition
//! differences are invariant under this shift.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::device::{ClusterSpec, QubitSpec};
use crate::error::QuantumError;
use crate::quantum::{annihilation, creation, embed_operator, number, HilbertLayout, Operator};
use crate::units::{ghz_to_rad_per_us, mhz_to_rad_per_us};

/// Total excitation operator N̂ = â†â + Σ f̂†f̂ for a layout.
pub fn total_excitation_operator(layout: &HilbertLayout) -> Operator {
    let dims = layout.factor_dims();
    let mut total = DMatrix::zeros(layout.dim(), layout.dim());
    for (k, &d) in dims.iter().enumerate() {
        total += embed_operator(&number(d), k, layout).unwrap().entries();
    }
    Operator::new(total, layout.clone()).unwrap()
}

/// Full RWA Hamiltonian of one qubit and one cluster on a truncated Fock
/// space, in the mean-cluster-frequency frame (rad/µs):
///
/// H = (ω_qu − ω_ref) n̂_q + (α/2) â†â†ââ + Σ_n (ω_n − ω_ref) f̂†f̂
///     + Σ_n g_n (f̂†_n â + f̂_n â†)
///
/// The anharmonicity term only acts when the layout keeps three or more
/// qubit levels; it annihilates every state of the single-excitation sector.
pub fn build_full_hamiltonian(
    qubit: &QubitSpec,
    qubit_frequency_ghz: f64,
    cluster: &ClusterSpec,
    layout: &HilbertLayout,
) -> Result<Operator, QuantumError> {
    if layout.n_modes() != cluster.n_modes() {
        return Err(QuantumError::DimensionMismatch {
            context: "layout modes vs cluster modes",
            expected: cluster.n_modes(),
            actual: layout.n_modes(),
        });
    }
    let d = layout.qubit_levels();
    let frame_ghz = cluster.mean_frequency_ghz();
    let dim = layout.dim();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);

    // qubit: detuned number operator plus anharmonicity (α/2) n(n−1)
    let wq = ghz_to_rad_per_us(qubit_frequency_ghz - frame_ghz);
    let alpha = mhz_to_rad_per_us(qubit.anharmonicity_mhz);
    let mut qubit_local = DMatrix::<Complex64>::zeros(d, d);
    for n in 0..d {
        let nf = n as f64;
        qubit_local[(n, n)] = Complex64::new(wq * nf + 0.5 * alpha * nf * (nf - 1.0), 0.0);
    }
    h += embed_operator(&qubit_local, 0, layout)?.entries();

    let a_emb = embed_operator(&annihilation(d), 0, layout)?;
    for (idx, mode) in cluster.modes.iter().enumerate() {
        let cutoff = layout.mode_cutoffs()[idx];
        let wn = ghz_to_rad_per_us(mode.frequency_ghz - frame_ghz);
        h += embed_operator(&number(cutoff), idx + 1, layout)?.entries() * Complex64::new(wn, 0.0);

        let g = mhz_to_rad_per_us(mode.coupling_mhz);
        let fdag = embed_operator(&creation(cutoff), idx + 1, layout)?;
        let fdag_a = fdag.entries() * a_emb.entries();
        h += (&fdag_a + fdag_a.adjoint()) * Complex64::new(g, 0.0);
    }
    Operator::new(h, layout.clone())
}

/// Single-excitation-sector Hamiltonian in the basis
/// [|e, ∅⟩, |g, 1_{ω_1}⟩, ..., |g, 1_{ω_N}⟩]: real symmetric, rad/µs,
/// diagonal (ω_qu, ω_1, ..., ω_N) minus the frame reference, first row/column
/// carrying the couplings 2π·g_n.
///
/// The qubit anharmonicity is absent by construction: â†â†ââ annihilates
/// every single-excitation basis state.
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    matrix: DMatrix<f64>,
    qubit_frequency_ghz: f64,
    frame_reference_ghz: f64,
    cluster: ClusterSpec,
}

/// Sector Hamiltonian in the mean-cluster-frequency frame.
pub fn build_sector_hamiltonian(
    qubit_frequency_ghz: f64,
    cluster: &ClusterSpec,
) -> SectorHamiltonian {
    build_sector_hamiltonian_with_frame(qubit_frequency_ghz, cluster, cluster.mean_frequency_ghz())
}

/// Sector Hamiltonian in an arbitrary reference frame; shifting the frame
/// shifts every eigenvalue by the same constant.
pub fn build_sector_hamiltonian_with_frame(
    qubit_frequency_ghz: f64,
    cluster: &ClusterSpec,
    frame_reference_ghz: f64,
) -> SectorHamiltonian {
    let n = cluster.n_modes();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m[(0, 0)] = ghz_to_rad_per_us(qubit_frequency_ghz - frame_reference_ghz);
    for (i, mode) in cluster.modes.iter().enumerate() {
        m[(i + 1, i + 1)] = ghz_to_rad_per_us(mode.frequency_ghz - frame_reference_ghz);
        let g = mhz_to_rad_per_us(mode.coupling_mhz);
        m[(0, i + 1)] = g;
        m[(i + 1, 0)] = g;
    }
    SectorHamiltonian {
        matrix: m,
        qubit_frequency_ghz,
        frame_reference_ghz,
        cluster: cluster.clone(),
    }
}

impl SectorHamiltonian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn qubit_frequency_ghz(&self) -> f64 {
        self.qubit_frequency_ghz
    }

    pub fn frame_reference_ghz(&self) -> f64 {
        self.frame_reference_ghz
    }

    pub fn cluster(&self) -> &ClusterSpec {
        &self.cluster
    }

    /// Real symmetric eigendecomposition, eigenvalues ascending.
    pub fn eigen(&self) -> SectorEigen {
        let eig = self.matrix.clone().symmetric_eigen();
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        SectorEigen {
            eigenvalues,
            eigenvectors,
        }
    }
}

/// Eigensystem of a sector Hamiltonian (real orthogonal eigenvectors).
#[derive(Debug, Clone)]
pub struct SectorEigen {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SectorEigen {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Sector amplitudes at time `t_us` starting from |e, ∅⟩:
    /// ψ(t) = V e^{−iΛt} Vᵀ e₀. At t = 0 the propagator is the identity and
    /// the initial state is returned without round-tripping the eigenbasis.
    pub fn state_from_excited(&self, t_us: f64) -> SectorState {
        let n = self.eigenvalues.len();
        if t_us == 0.0 {
            return SectorState {
                p: Complex64::new(1.0, 0.0),
                theta: vec![Complex64::new(0.0, 0.0); n - 1],
            };
        }
        let mut psi = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let ck = self.eigenvectors[(0, k)];
            let phase = Complex64::new(0.0, -self.eigenvalues[k] * t_us).exp();
            let w = phase * ck;
            for (i, amp) in psi.iter_mut().enumerate() {
                *amp += w * self.eigenvectors[(i, k)];
            }
        }
        SectorState {
            p: psi[0],
            theta: psi[1..].to_vec(),
        }
    }
}

/// Amplitudes of the single-excitation sector: p on |e, ∅⟩ and ϑ_n on the
/// single-phonon states.
#[derive(Debug, Clone)]
pub struct SectorState {
    pub p: Complex64,
    pub theta: Vec<Complex64>,
}

impl SectorState {
    /// |p|² + Σ |ϑ_n|², which unitarity pins to 1.
    pub fn norm_sqr(&self) -> f64 {
        self.p.norm_sqr() + self.theta.iter().map(|t| t.norm_sqr()).sum::<f64>()
    }

    /// Qubit excited population |p|².
    pub fn population_excited(&self) -> f64 {
        self.p.norm_sqr()
    }

    /// Qubit purity 2|p|⁴ + 1 − 2|p|², the pure-state single-excitation form.
    pub fn purity(&self) -> f64 {
        purity_from_population(self.population_excited())
    }
}

/// Purity of the qubit reduced state as a function of its excited population
/// q: P = 2q² + 1 − 2q. Valid whenever the joint state is pure and confined
/// to the single-excitation sector.
pub fn purity_from_population(q: f64) -> f64 {
    2.0 * q * q + 1.0 - 2.0 * q
}
