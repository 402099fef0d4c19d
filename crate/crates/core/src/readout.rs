//! Measurement-error model and correction.
//!
//! A column-stochastic response matrix M maps ideal outcome probabilities to
//! measured ones, ξ_noisy = M ξ_ideal. Correction either inverts M directly
//! (which can leave the probability simplex) or solves the least-squares
//! problem constrained to the simplex.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::ReadoutError;

/// Column-sum and probability-sum tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-9;
/// |det| below which a 2×2 response matrix counts as singular.
pub const SINGULAR_TOL: f64 = 1e-9;

/// 2×2 response matrix with columns (p(0|c), p(1|c)) for prepared state c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseMatrix {
    pub p0_given_0: f64,
    pub p0_given_1: f64,
    pub p1_given_0: f64,
    pub p1_given_1: f64,
}

impl ResponseMatrix {
    pub fn identity() -> Self {
        Self {
            p0_given_0: 1.0,
            p0_given_1: 0.0,
            p1_given_0: 0.0,
            p1_given_1: 1.0,
        }
    }

    /// Construct from entries, validating every invariant.
    pub fn from_entries(
        p0_given_0: f64,
        p0_given_1: f64,
        p1_given_0: f64,
        p1_given_1: f64,
    ) -> Result<Self, ReadoutError> {
        let m = Self {
            p0_given_0,
            p0_given_1,
            p1_given_0,
            p1_given_1,
        };
        m.validate()?;
        Ok(m)
    }

    /// Row i, column j (column = prepared state).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.p0_given_0,
            (0, 1) => self.p0_given_1,
            (1, 0) => self.p1_given_0,
            (1, 1) => self.p1_given_1,
            _ => panic!("index out of range for 2x2 matrix"),
        }
    }

    pub fn determinant(&self) -> f64 {
        self.p0_given_0 * self.p1_given_1 - self.p0_given_1 * self.p1_given_0
    }

    pub fn validate(&self) -> Result<(), ReadoutError> {
        let entries = [
            self.p0_given_0,
            self.p0_given_1,
            self.p1_given_0,
            self.p1_given_1,
        ];
        if entries.iter().any(|&e| !(0.0..=1.0).contains(&e)) {
            return Err(ReadoutError::InvalidResponseMatrix(format!(
                "entries must lie in [0, 1], got {entries:?}"
            )));
        }
        for (c, sum) in [
            (0, self.p0_given_0 + self.p1_given_0),
            (1, self.p0_given_1 + self.p1_given_1),
        ] {
            if (sum - 1.0).abs() >= STOCHASTIC_TOL {
                return Err(ReadoutError::InvalidResponseMatrix(format!(
                    "column {c} sums to {sum}, expected 1 within {STOCHASTIC_TOL:e}"
                )));
            }
        }
        let det = self.determinant();
        if det.abs() < SINGULAR_TOL {
            return Err(ReadoutError::Singular { det });
        }
        Ok(())
    }
}

/// A point on the two-outcome probability simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    pub p0: f64,
    pub p1: f64,
}

impl ProbabilityVector {
    pub fn new(p0: f64, p1: f64) -> Result<Self, ReadoutError> {
        if p0 < 0.0 || p1 < 0.0 {
            return Err(ReadoutError::InvalidProbability(format!(
                "components must be non-negative, got ({p0}, {p1})"
            )));
        }
        if (p0 + p1 - 1.0).abs() >= STOCHASTIC_TOL {
            return Err(ReadoutError::InvalidProbability(format!(
                "components must sum to 1 within {STOCHASTIC_TOL:e}, got {p0} + {p1} = {}",
                p0 + p1
            )));
        }
        Ok(Self { p0, p1 })
    }

    /// Clamp p0 into [0, 1] and set p1 = 1 − p0, so invariants hold exactly.
    fn clamped(p0: f64) -> Self {
        let p0 = p0.clamp(0.0, 1.0);
        Self { p0, p1: 1.0 - p0 }
    }
}

/// Forward model: ξ_noisy = M ξ_ideal. Column-stochasticity keeps the result
/// on the simplex.
pub fn apply_response(m: &ResponseMatrix, ideal: &ProbabilityVector) -> ProbabilityVector {
    let p0 = m.p0_given_0 * ideal.p0 + m.p0_given_1 * ideal.p1;
    ProbabilityVector::clamped(p0)
}

/// Plain inversion M⁻¹ξ. The components always sum to 1 (the rows of M sum
/// column-wise to 1, so M⁻¹ preserves the affine sum) but may be negative.
pub fn invert_unconstrained(
    m: &ResponseMatrix,
    noisy: &ProbabilityVector,
) -> Result<(f64, f64), ReadoutError> {
    let det = m.determinant();
    if det.abs() < SINGULAR_TOL {
        return Err(ReadoutError::Singular { det });
    }
    let p0 = (m.p1_given_1 * noisy.p0 - m.p0_given_1 * noisy.p1) / det;
    let p1 = (-m.p1_given_0 * noisy.p0 + m.p0_given_0 * noisy.p1) / det;
    Ok((p0, p1))
}

/// Least-squares correction constrained to the probability simplex:
/// argmin over {x ≥ 0, Σx = 1} of ‖Mx − ξ_noisy‖₂².
///
/// On the 1-simplex the problem reduces to a scalar quadratic in x₀ over
/// [0, 1], solved in closed form: with u = M(:,0) − M(:,1) and
/// v = M(:,1) − ξ, the unconstrained minimizer is x₀ = −(u·v)/‖u‖², clamped.
/// When plain inversion already lies inside the simplex the two answers agree.
pub fn correct_constrained(m: &ResponseMatrix, noisy: &ProbabilityVector) -> ProbabilityVector {
    let u = [m.p0_given_0 - m.p0_given_1, m.p1_given_0 - m.p1_given_1];
    let v = [m.p0_given_1 - noisy.p0, m.p1_given_1 - noisy.p1];
    let uu = u[0] * u[0] + u[1] * u[1];
    let uv = u[0] * v[0] + u[1] * v[1];
    if uu == 0.0 {
        // Equal columns; every x on the simplex gives the same residual.
        return ProbabilityVector::clamped(0.5);
    }
    ProbabilityVector::clamped(-uv / uu)
}

/// Residual ‖Mx − ξ‖₂² of a candidate correction, for optimality checks.
pub fn residual_norm_sq(
    m: &ResponseMatrix,
    x: &ProbabilityVector,
    noisy: &ProbabilityVector,
) -> f64 {
    let r0 = m.p0_given_0 * x.p0 + m.p0_given_1 * x.p1 - noisy.p0;
    let r1 = m.p1_given_0 * x.p0 + m.p1_given_1 * x.p1 - noisy.p1;
    r0 * r0 + r1 * r1
}

/// Tolerance for activating/releasing constraints in the general-N solver.
const ACTIVE_SET_TOL: f64 = 1e-12;

/// General-N constrained correction: argmin ‖Mx − ξ‖² over {x ≥ 0, Σx = 1},
/// by an active-set sweep on the KKT system. Kept behind the same contract as
/// the 2×2 closed form for forward compatibility with multi-outcome readout.
pub fn correct_constrained_n(m: &DMatrix<f64>, noisy: &[f64]) -> Result<Vec<f64>, ReadoutError> {
    let n = m.ncols();
    if m.nrows() != noisy.len() {
        return Err(ReadoutError::InvalidProbability(format!(
            "noisy vector length {} does not match matrix rows {}",
            noisy.len(),
            m.nrows()
        )));
    }
    let xi = nalgebra::DVector::from_column_slice(noisy);
    let mut active: Vec<bool> = vec![false; n]; // true = pinned at zero

    for _sweep in 0..2 * n + 2 {
        let free: Vec<usize> = (0..n).filter(|&j| !active[j]).collect();
        if free.is_empty() {
            return Err(ReadoutError::InvalidProbability(
                "active-set solver pinned every component".into(),
            ));
        }
        // Equality-constrained least squares on the free set:
        // minimize ‖M_f x_f − ξ‖² s.t. Σ x_f = 1, via the KKT system
        // [ 2 M_fᵀM_f  1 ] [x_f]   [2 M_fᵀ ξ]
        // [ 1ᵀ         0 ] [λ  ] = [1       ]
        let k = free.len();
        let mf = m.select_columns(free.iter());
        let mtm = mf.transpose() * &mf;
        let mtxi = mf.transpose() * &xi;
        let mut kkt = DMatrix::zeros(k + 1, k + 1);
        for i in 0..k {
            for j in 0..k {
                kkt[(i, j)] = 2.0 * mtm[(i, j)];
            }
            kkt[(i, k)] = 1.0;
            kkt[(k, i)] = 1.0;
        }
        let mut rhs = nalgebra::DVector::zeros(k + 1);
        for i in 0..k {
            rhs[i] = 2.0 * mtxi[i];
        }
        rhs[k] = 1.0;
        let sol = kkt
            .lu()
            .solve(&rhs)
            .ok_or(ReadoutError::Singular { det: 0.0 })?;

        if let Some(&worst) = free
            .iter()
            .zip(sol.iter())
            .filter(|(_, &v)| v < -ACTIVE_SET_TOL)
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(j, _)| j)
        {
            active[worst] = true;
            continue;
        }

        let mut x = vec![0.0; n];
        for (i, &j) in free.iter().enumerate() {
            x[j] = sol[i].max(0.0);
        }
        // KKT check on pinned components: releasing one must not lower the
        // objective. Gradient of ‖Mx − ξ‖² is 2 Mᵀ(Mx − ξ); with multiplier λ
        // from the sum constraint, a pinned j wants release if g_j + λ < 0.
        let lambda = sol[k];
        let grad = 2.0 * m.transpose() * (m * nalgebra::DVector::from_column_slice(&x) - &xi);
        let mut released = false;
        for j in 0..n {
            if active[j] && grad[j] + lambda < -ACTIVE_SET_TOL {
                active[j] = false;
                released = true;
            }
        }
        if !released {
            let sum: f64 = x.iter().sum();
            for v in &mut x {
                *v /= sum;
            }
            return Ok(x);
        }
    }
    Err(ReadoutError::InvalidProbability(
        "active-set solver did not converge".into(),
    ))
}
