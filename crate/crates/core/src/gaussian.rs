//! Gaussian phase-space states.
//!
//! Convention: an `N`-mode state has displacement `d` ordered
//! `(q1, p1, ..., qN, pN)` and covariance `Γ` such that the Wigner function is
//! proportional to `exp[-(x - d)ᵀ Γ⁻¹ (x - d)]`. The vacuum has `Γ = I` and a
//! homodyne measurement of any quadrature has variance `Γ_qq / 2` (shot noise
//! is 1/2).

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Smallest eigenvalue tolerated after symmetrization.
pub const PD_TOLERANCE: f64 = -1e-12;

/// Homodyne direction restricted to the two axes: `Q` (angle 0, bit 0) or
/// `P` (angle π/2, bit 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Q,
    P,
}

impl Quadrature {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Quadrature::P
        } else {
            Quadrature::Q
        }
    }

    pub fn bit(self) -> bool {
        matches!(self, Quadrature::P)
    }

    /// Position of this quadrature inside a mode's 2-vector.
    pub fn offset(self) -> usize {
        self.bit() as usize
    }

    pub fn angle(self) -> f64 {
        match self {
            Quadrature::Q => 0.0,
            Quadrature::P => std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn conjugate(self) -> Self {
        Quadrature::from_bit(!self.bit())
    }
}

/// A single-mode Gaussian state. Stack allocated; cipherstates are lists of these.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    displacement: Vector2<f64>,
    covariance: Matrix2<f64>,
}

impl ModeState {
    pub fn vacuum() -> Self {
        Self {
            displacement: Vector2::zeros(),
            covariance: Matrix2::identity(),
        }
    }

    pub fn new(displacement: Vector2<f64>, covariance: Matrix2<f64>) -> Result<Self> {
        let covariance = (covariance + covariance.transpose()) * 0.5;
        let min = covariance.symmetric_eigenvalues().min();
        if !(min > PD_TOLERANCE) || !displacement.iter().all(|x| x.is_finite()) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(Self {
            displacement,
            covariance,
        })
    }

    pub(crate) fn from_parts(displacement: Vector2<f64>, covariance: Matrix2<f64>) -> Self {
        Self {
            displacement,
            covariance,
        }
    }

    pub fn displacement(&self) -> Vector2<f64> {
        self.displacement
    }

    pub fn covariance(&self) -> Matrix2<f64> {
        self.covariance
    }

    pub fn mean(&self, direction: Quadrature) -> f64 {
        self.displacement[direction.offset()]
    }

    /// Variance of a homodyne outcome along `direction`.
    pub fn marginal_variance(&self, direction: Quadrature) -> f64 {
        let o = direction.offset();
        self.covariance[(o, o)] / 2.0
    }

    /// Draws one homodyne outcome along `direction`.
    pub fn homodyne<R: Rng + ?Sized>(&self, direction: Quadrature, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean(direction) + self.marginal_variance(direction).sqrt() * z
    }
}

/// Prepares a coherent state squeezed along `direction` with parameter `r`.
///
/// The covariance is `diag(1/cosh r, cosh r)` for `Q` and
/// `diag(cosh r, 1/cosh r)` for `P`, so the squeezed quadrature has homodyne
/// variance `1 / (2 cosh r)`.
pub fn make_squeezed_coherent(
    displacement: [f64; 2],
    squeeze: f64,
    direction: Quadrature,
) -> Result<ModeState> {
    if !(squeeze >= 0.0) || !squeeze.is_finite() {
        return Err(invalid(format!("squeezing parameter must be >= 0, got {squeeze}")));
    }
    let c = squeeze.cosh();
    let diag = match direction {
        Quadrature::Q => Vector2::new(1.0 / c, c),
        Quadrature::P => Vector2::new(c, 1.0 / c),
    };
    Ok(ModeState::from_parts(
        Vector2::new(displacement[0], displacement[1]),
        Matrix2::from_diagonal(&diag),
    ))
}

/// A multi-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    displacement: DVector<f64>,
    covariance: DMatrix<f64>,
}

/// Outcome of a homodyne measurement on one mode of a [`GaussianState`].
#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneRecord {
    pub outcome: f64,
    pub mode_index: usize,
    pub direction: Quadrature,
    /// State of the remaining modes; `None` when the measured mode was the last one.
    pub conditional_state: Option<GaussianState>,
}

impl GaussianState {
    pub fn new(displacement: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let dim = displacement.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(invalid(format!("displacement length {dim} is not 2N with N >= 1")));
        }
        if covariance.nrows() != dim || covariance.ncols() != dim {
            return Err(Error::LengthMismatch {
                what: "covariance dimension",
                expected: dim,
                actual: covariance.nrows(),
            });
        }
        Self::checked(displacement, covariance)
    }

    fn checked(displacement: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let covariance = (&covariance + covariance.transpose()) * 0.5;
        let state = Self {
            displacement,
            covariance,
        };
        let min = state.min_eigenvalue();
        if !(min > PD_TOLERANCE) || !state.displacement.iter().all(|x| x.is_finite()) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(state)
    }

    pub fn vacuum(num_modes: usize) -> Self {
        Self {
            displacement: DVector::zeros(2 * num_modes),
            covariance: DMatrix::identity(2 * num_modes, 2 * num_modes),
        }
    }

    /// Tensor product of single-mode states.
    pub fn product(modes: &[ModeState]) -> Result<Self> {
        if modes.is_empty() {
            return Err(invalid("a Gaussian state needs at least one mode"));
        }
        let dim = 2 * modes.len();
        let mut displacement = DVector::zeros(dim);
        let mut covariance = DMatrix::zeros(dim, dim);
        for (i, m) in modes.iter().enumerate() {
            displacement.fixed_rows_mut::<2>(2 * i).copy_from(&m.displacement);
            covariance
                .fixed_view_mut::<2, 2>(2 * i, 2 * i)
                .copy_from(&m.covariance);
        }
        Ok(Self {
            displacement,
            covariance,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.displacement.len() / 2
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.covariance.symmetric_eigenvalues().min()
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes() {
            return Err(Error::ModeIndex {
                index: mode,
                len: self.num_modes(),
            });
        }
        Ok(())
    }

    /// Reduced state of one mode.
    pub fn mode(&self, mode: usize) -> Result<ModeState> {
        self.check_mode(mode)?;
        Ok(ModeState::from_parts(
            self.displacement.fixed_rows::<2>(2 * mode).into_owned(),
            self.covariance
                .fixed_view::<2, 2>(2 * mode, 2 * mode)
                .into_owned(),
        ))
    }

    pub fn marginal_variance(&self, mode: usize, direction: Quadrature) -> Result<f64> {
        self.check_mode(mode)?;
        let idx = 2 * mode + direction.offset();
        Ok(self.covariance[(idx, idx)] / 2.0)
    }

    /// Measures quadrature `direction` of `mode` and conditions the rest of
    /// the state on the outcome.
    pub fn homodyne_sample<R: Rng + ?Sized>(
        &self,
        mode: usize,
        direction: Quadrature,
        rng: &mut R,
    ) -> Result<HomodyneRecord> {
        let variance = self.marginal_variance(mode, direction)?;
        let idx = 2 * mode + direction.offset();
        let z: f64 = rng.sample(StandardNormal);
        let outcome = self.displacement[idx] + variance.sqrt() * z;
        let conditional_state = self.condition(mode, direction, outcome)?;
        Ok(HomodyneRecord {
            outcome,
            mode_index: mode,
            direction,
            conditional_state,
        })
    }

    /// Gaussian conditioning on a known homodyne outcome (Schur complement of
    /// the measured quadrature). The measured mode is removed, which traces out
    /// its unmeasured conjugate quadrature.
    pub fn condition(
        &self,
        mode: usize,
        direction: Quadrature,
        outcome: f64,
    ) -> Result<Option<GaussianState>> {
        self.check_mode(mode)?;
        if self.num_modes() == 1 {
            return Ok(None);
        }
        let m = 2 * mode + direction.offset();
        let gamma_mm = self.covariance[(m, m)];
        if !(gamma_mm > 0.0) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: gamma_mm,
            });
        }
        let keep: Vec<usize> = (0..self.displacement.len())
            .filter(|&i| i / 2 != mode)
            .collect();
        let k = keep.len();
        let shift = outcome - self.displacement[m];
        let cross = DVector::from_iterator(k, keep.iter().map(|&i| self.covariance[(i, m)]));
        let displacement = DVector::from_iterator(
            k,
            keep.iter()
                .zip(cross.iter())
                .map(|(&i, &g)| self.displacement[i] + g / gamma_mm * shift),
        );
        let covariance = DMatrix::from_fn(k, k, |a, b| {
            self.covariance[(keep[a], keep[b])] - cross[a] * cross[b] / gamma_mm
        });
        Self::checked(displacement, covariance).map(Some)
    }

    /// Applies a symplectic matrix `S`: `d -> S d`, `Γ -> S Γ Sᵀ`.
    pub fn apply_symplectic(&self, s: &DMatrix<f64>) -> Result<Self> {
        let dim = self.displacement.len();
        if s.nrows() != dim || s.ncols() != dim {
            return Err(Error::LengthMismatch {
                what: "symplectic matrix dimension",
                expected: dim,
                actual: s.nrows(),
            });
        }
        Self::checked(s * &self.displacement, s * &self.covariance * s.transpose())
    }

    /// Mixes modes `i` and `j` on a beamsplitter of the given transmittance.
    ///
    /// With `t = √T`, `ρ = √(1-T)`: `a_i -> t a_i + ρ a_j`,
    /// `a_j -> -ρ a_i + t a_j`, applied to both quadratures.
    pub fn apply_beamsplitter(&self, modes: (usize, usize), transmittance: f64) -> Result<Self> {
        let s = beamsplitter_matrix(self.num_modes(), modes, transmittance)?;
        self.apply_symplectic(&s)
    }

    /// Rotates the phase of `mode` by `angle`: `q -> q cos θ - p sin θ`,
    /// `p -> q sin θ + p cos θ`.
    pub fn rotate(&self, mode: usize, angle: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let dim = self.displacement.len();
        let mut s = DMatrix::identity(dim, dim);
        let (sin, cos) = angle.sin_cos();
        let b = 2 * mode;
        s[(b, b)] = cos;
        s[(b, b + 1)] = -sin;
        s[(b + 1, b)] = sin;
        s[(b + 1, b + 1)] = cos;
        self.apply_symplectic(&s)
    }

    pub fn displace(&self, mode: usize, shift: [f64; 2]) -> Result<Self> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.displacement[2 * mode] += shift[0];
        out.displacement[2 * mode + 1] += shift[1];
        Ok(out)
    }
}

/// Symplectic form `Ω` for `(q1, p1, ..., qN, pN)` ordering.
pub fn symplectic_form(num_modes: usize) -> DMatrix<f64> {
    let dim = 2 * num_modes;
    let mut omega = DMatrix::zeros(dim, dim);
    for i in 0..num_modes {
        omega[(2 * i, 2 * i + 1)] = 1.0;
        omega[(2 * i + 1, 2 * i)] = -1.0;
    }
    omega
}

/// Beamsplitter symplectic matrix on an `num_modes`-mode phase space.
pub fn beamsplitter_matrix(
    num_modes: usize,
    (i, j): (usize, usize),
    transmittance: f64,
) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(invalid(format!(
            "beamsplitter transmittance must lie in [0, 1], got {transmittance}"
        )));
    }
    if i == j {
        return Err(invalid("beamsplitter needs two distinct modes"));
    }
    for &m in &[i, j] {
        if m >= num_modes {
            return Err(Error::ModeIndex {
                index: m,
                len: num_modes,
            });
        }
    }
    let t = transmittance.sqrt();
    let rho = (1.0 - transmittance).sqrt();
    let dim = 2 * num_modes;
    let mut s = DMatrix::identity(dim, dim);
    for o in 0..2 {
        let (a, b) = (2 * i + o, 2 * j + o);
        s[(a, a)] = t;
        s[(a, b)] = rho;
        s[(b, a)] = -rho;
        s[(b, b)] = t;
    }
    Ok(s)
}
