//! Dense complex linear algebra and quantum-state primitives.
//!
//! Kets, operators, tensor embedding, Hermitian eigendecomposition, exact
//! propagation, partial trace over the modes, and purity. Everything here is
//! immutable after construction and safe to share across threads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::QuantumError;

/// Dense complex matrix used for operators and eigenvector bases.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex vector used for state amplitudes.
pub type CVector = DVector<Complex64>;

/// Hermiticity threshold: max |H - H†| entry for an operator to count as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Qubit population allowed outside the two lowest levels in `reduce_to_qubit`.
/// In the single-excitation RWA sector leakage is analytically zero, so any
/// excess signals a builder bug.
pub const LEAKAGE_TOL: f64 = 1e-10;

/// Factor structure of the Hilbert space: qubit factor first, then one factor
/// per mode in cluster order.
///
/// Basis index ↔ occupation tuple is the row-major bijection over
/// `[qubit_levels, cutoff_1, ..., cutoff_N]`:
/// `index = ((q * c_1 + n_1) * c_2 + n_2) * ... `, i.e. the qubit level is the
/// most significant digit. Qubit level 0 is |g⟩, level 1 is |e⟩.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertLayout {
    qubit_levels: usize,
    mode_cutoffs: Vec<usize>,
}

impl HilbertLayout {
    /// A layout with `qubit_levels` ≥ 2 and per-mode phonon cutoffs ≥ 2
    /// (cutoff = max phonon number + 1).
    pub fn new(qubit_levels: usize, mode_cutoffs: Vec<usize>) -> Result<Self, QuantumError> {
        if qubit_levels < 2 {
            return Err(QuantumError::InvalidLayout(format!(
                "qubit_levels must be >= 2, got {qubit_levels}"
            )));
        }
        if let Some(&c) = mode_cutoffs.iter().find(|&&c| c < 2) {
            return Err(QuantumError::InvalidLayout(format!(
                "mode cutoffs must be >= 2, got {c}"
            )));
        }
        Ok(Self {
            qubit_levels,
            mode_cutoffs,
        })
    }

    pub fn qubit_levels(&self) -> usize {
        self.qubit_levels
    }

    pub fn mode_cutoffs(&self) -> &[usize] {
        &self.mode_cutoffs
    }

    pub fn n_modes(&self) -> usize {
        self.mode_cutoffs.len()
    }

    /// Dimensions of all factors: `[qubit_levels, cutoff_1, ..., cutoff_N]`.
    pub fn factor_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(1 + self.mode_cutoffs.len());
        dims.push(self.qubit_levels);
        dims.extend_from_slice(&self.mode_cutoffs);
        dims
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.qubit_levels * self.mode_cutoffs.iter().product::<usize>()
    }

    /// Basis index of an occupation tuple `[q, n_1, ..., n_N]`.
    pub fn index_of(&self, occupations: &[usize]) -> usize {
        let dims = self.factor_dims();
        assert_eq!(occupations.len(), dims.len(), "occupation tuple length");
        let mut idx = 0;
        for (&n, &d) in occupations.iter().zip(dims.iter()) {
            assert!(n < d, "occupation {n} exceeds factor dimension {d}");
            idx = idx * d + n;
        }
        idx
    }

    /// Occupation tuple `[q, n_1, ..., n_N]` of a basis index.
    pub fn occupations_of(&self, index: usize) -> Vec<usize> {
        let dims = self.factor_dims();
        let mut rem = index;
        let mut occ = vec![0usize; dims.len()];
        for k in (0..dims.len()).rev() {
            occ[k] = rem % dims[k];
            rem /= dims[k];
        }
        occ
    }

    /// Total excitation number (qubit level plus phonon numbers) of a basis index.
    pub fn total_excitation(&self, index: usize) -> usize {
        self.occupations_of(index).iter().sum()
    }

    /// Basis indices whose total excitation equals `k`, in ascending index order.
    pub fn indices_with_excitation(&self, k: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.total_excitation(i) == k)
            .collect()
    }
}

/// A pure state over a [`HilbertLayout`].
#[derive(Debug, Clone)]
pub struct Ket {
    amplitudes: CVector,
    layout: HilbertLayout,
}

impl Ket {
    pub fn new(amplitudes: CVector, layout: HilbertLayout) -> Result<Self, QuantumError> {
        if amplitudes.len() != layout.dim() {
            return Err(QuantumError::DimensionMismatch {
                context: "ket amplitudes",
                expected: layout.dim(),
                actual: amplitudes.len(),
            });
        }
        Ok(Self { amplitudes, layout })
    }

    /// Basis state for the occupation tuple `[q, n_1, ..., n_N]`.
    pub fn basis(layout: &HilbertLayout, occupations: &[usize]) -> Self {
        let mut amplitudes = CVector::zeros(layout.dim());
        amplitudes[layout.index_of(occupations)] = Complex64::new(1.0, 0.0);
        Self {
            amplitudes,
            layout: layout.clone(),
        }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// ⟨self|other⟩.
    pub fn overlap(&self, other: &Ket) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// A dense operator over a [`HilbertLayout`]. Entries carry rad/µs for
/// Hamiltonians and are dimensionless for projectors and ladder operators.
#[derive(Debug, Clone)]
pub struct Operator {
    entries: CMatrix,
    layout: HilbertLayout,
}

impl Operator {
    pub fn new(entries: CMatrix, layout: HilbertLayout) -> Result<Self, QuantumError> {
        if entries.nrows() != entries.ncols() {
            return Err(QuantumError::DimensionMismatch {
                context: "operator rows vs columns",
                expected: entries.nrows(),
                actual: entries.ncols(),
            });
        }
        if entries.nrows() != layout.dim() {
            return Err(QuantumError::DimensionMismatch {
                context: "operator vs layout",
                expected: layout.dim(),
                actual: entries.nrows(),
            });
        }
        Ok(Self { entries, layout })
    }

    pub fn identity(layout: &HilbertLayout) -> Self {
        Self {
            entries: CMatrix::identity(layout.dim(), layout.dim()),
            layout: layout.clone(),
        }
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// max |H - H†| entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.entries.adjoint();
        (&self.entries - adj)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() < HERMITICITY_TOL
    }

    /// Apply to a ket (dimension-checked).
    pub fn apply(&self, psi: &Ket) -> Result<Ket, QuantumError> {
        if psi.layout != self.layout {
            return Err(QuantumError::DimensionMismatch {
                context: "operator applied to ket",
                expected: self.dim(),
                actual: psi.amplitudes.len(),
            });
        }
        Ok(Ket {
            amplitudes: &self.entries * &psi.amplitudes,
            layout: self.layout.clone(),
        })
    }

    /// max-entry norm of the commutator [self, other].
    pub fn commutator_max_norm(&self, other: &Operator) -> f64 {
        let ab = &self.entries * &other.entries;
        let ba = &other.entries * &self.entries;
        (ab - ba).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Truncated annihilation operator on `dim` levels: a|n⟩ = √n |n−1⟩.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// Truncated creation operator on `dim` levels.
pub fn creation(dim: usize) -> CMatrix {
    annihilation(dim).adjoint()
}

/// Number operator diag(0, 1, ..., dim−1).
pub fn number(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(i as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Embed a single-factor operator into the full space:
/// identity ⊗ … ⊗ local ⊗ … ⊗ identity in layout ordering.
///
/// Factor 0 is the qubit; factor k ≥ 1 is mode k−1.
pub fn embed_operator(
    local: &CMatrix,
    factor_index: usize,
    layout: &HilbertLayout,
) -> Result<Operator, QuantumError> {
    let dims = layout.factor_dims();
    if factor_index >= dims.len() {
        return Err(QuantumError::FactorOutOfRange {
            index: factor_index,
            factors: dims.len(),
        });
    }
    if local.nrows() != local.ncols() || local.nrows() != dims[factor_index] {
        return Err(QuantumError::DimensionMismatch {
            context: "local operator vs factor",
            expected: dims[factor_index],
            actual: local.nrows(),
        });
    }
    let mut out = CMatrix::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        if k == factor_index {
            out = out.kronecker(local);
        } else {
            out = out.kronecker(&CMatrix::identity(d, d));
        }
    }
    Operator::new(out, layout.clone())
}

/// Eigendecomposition of a Hermitian operator: real eigenvalues in ascending
/// order, column k of the unitary paired with eigenvalue k.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// V Λ V† reconstruction.
    pub fn reconstruct(&self) -> CMatrix {
        let lam = CMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            if i == j {
                Complex64::new(self.eigenvalues[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        &self.eigenvectors * lam * self.eigenvectors.adjoint()
    }
}

/// Exact eigendecomposition of a Hermitian operator, eigenvalues ascending.
pub fn hermitian_eigendecomposition(h: &Operator) -> Result<EigenDecomposition, QuantumError> {
    let defect = h.hermiticity_defect();
    if defect >= HERMITICITY_TOL {
        return Err(QuantumError::NotHermitian { defect });
    }
    let eig = h.entries.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Propagate `psi0` under the decomposed Hamiltonian: V e^{−iΛt} V† psi0.
///
/// Exact for the time-independent Hamiltonians used here; `t_us` may be
/// negative (backwards evolution), which the time-reversal checks rely on.
pub fn evolve(psi0: &Ket, eig: &EigenDecomposition, t_us: f64) -> Result<Ket, QuantumError> {
    if psi0.amplitudes.len() != eig.dim() {
        return Err(QuantumError::DimensionMismatch {
            context: "evolve state vs decomposition",
            expected: eig.dim(),
            actual: psi0.amplitudes.len(),
        });
    }
    let mut coeffs = eig.eigenvectors.adjoint() * &psi0.amplitudes;
    for (k, c) in coeffs.iter_mut().enumerate() {
        let phase = -eig.eigenvalues[k] * t_us;
        *c *= Complex64::new(0.0, phase).exp();
    }
    Ok(Ket {
        amplitudes: &eig.eigenvectors * coeffs,
        layout: psi0.layout.clone(),
    })
}

/// Reduced density matrix of the qubit's two lowest levels (|g⟩, |e⟩ order).
#[derive(Debug, Clone, Copy)]
pub struct QubitDensityMatrix {
    entries: [[Complex64; 2]; 2],
}

impl QubitDensityMatrix {
    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i][j]
    }

    /// Population of the excited level |e⟩.
    pub fn population_excited(&self) -> f64 {
        self.entries[1][1].re
    }

    pub fn trace(&self) -> f64 {
        (self.entries[0][0] + self.entries[1][1]).re
    }

    /// tr(ρ²).
    pub fn purity(&self) -> f64 {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                s += self.entries[i][j] * self.entries[j][i];
            }
        }
        s.re
    }
}

/// Trace out all mode factors, keeping the qubit's two lowest levels.
///
/// Fails with [`QuantumError::Leakage`] if population above the first two
/// qubit levels exceeds [`LEAKAGE_TOL`].
pub fn reduce_to_qubit(psi: &Ket) -> Result<QubitDensityMatrix, QuantumError> {
    let layout = &psi.layout;
    let mode_dim: usize = layout.mode_cutoffs.iter().product();
    let d = layout.qubit_levels;

    let mut leaked = 0.0;
    for q in 2..d {
        for m in 0..mode_dim {
            leaked += psi.amplitudes[q * mode_dim + m].norm_sqr();
        }
    }
    if leaked >= LEAKAGE_TOL {
        return Err(QuantumError::Leakage { population: leaked });
    }

    let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
    for m in 0..mode_dim {
        for (i, row) in rho.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e += psi.amplitudes[i * mode_dim + m] * psi.amplitudes[j * mode_dim + m].conj();
            }
        }
    }
    Ok(QubitDensityMatrix { entries: rho })
}
