//! Imaging objects as transfer matrices on one photon's mode set.
//!
//! Lossless objects are unitary. A lossy (passive) transfer matrix `T` is
//! embedded as the top-left block of a unitary on twice as many modes; the
//! extra output modes are loss channels and sit outside the detected window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    hermitian_deviation, max_eigenvalue, min_eigenvalue, psd_sqrt, spectral_norm, unitarity_deviation,
};
use crate::{CMatrix, Error, Result, C64};

/// Largest admissible deviation from unitarity.
pub const UNITARY_TOL: f64 = 1e-10;
/// Largest admissible excess of a singular value over 1.
pub const PASSIVE_TOL: f64 = 1e-10;

/// Which photon an object acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Unprimed,
    Primed,
}

/// Square passive transfer matrix with entries T(q, i) = ⟨1_q| ĥ |1_i⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSpec {
    matrix: CMatrix,
    side: Side,
}

impl TransferSpec {
    pub fn new(matrix: CMatrix, side: Side) -> Result<Self> {
        if !matrix.is_square() || matrix.is_empty() {
            return Err(Error::ShapeMismatch {
                expected: "nonempty square matrix".into(),
                got: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        let s = spectral_norm(&matrix);
        if s > 1.0 + PASSIVE_TOL {
            return Err(Error::NotPassive(s));
        }
        Ok(Self { matrix, side })
    }

    /// `U_left · diag(s) · U_right` with Haar factors and singular values uniform on [0, 1].
    pub fn random<R: Rng + ?Sized>(dim: usize, side: Side, rng: &mut R) -> Self {
        let left = haar_matrix(dim, rng);
        let right = haar_matrix(dim, rng);
        let s = nalgebra::DVector::from_fn(dim, |_, _| C64::new(rng.random::<f64>(), 0.0));
        let matrix = left * CMatrix::from_diagonal(&s) * right;
        Self { matrix, side }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Unitary object with a detector window over its leading output modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectOperator {
    matrix: CMatrix,
    side: Side,
    window: usize,
    lossy: bool,
}

impl ObjectOperator {
    /// Lossless object; every output mode is detected.
    pub fn from_unitary(matrix: CMatrix, side: Side) -> Result<Self> {
        if !matrix.is_square() || matrix.is_empty() {
            return Err(Error::ShapeMismatch {
                expected: "nonempty square matrix".into(),
                got: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        let dev = unitarity_deviation(&matrix);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        let window = matrix.nrows();
        Ok(Self { matrix, side, window, lossy: false })
    }

    pub fn identity(dim: usize, side: Side) -> Self {
        Self { matrix: CMatrix::identity(dim, dim), side, window: dim, lossy: false }
    }

    /// Haar-distributed unitary, reproducible from `seed`.
    pub fn haar_random(dim: usize, side: Side, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::haar_random_with(dim, side, &mut rng)
    }

    pub fn haar_random_with<R: Rng + ?Sized>(dim: usize, side: Side, rng: &mut R) -> Self {
        assert!(dim >= 1, "haar_random: dim must be positive");
        Self { matrix: haar_matrix(dim, rng), side, window: dim, lossy: false }
    }

    /// Unitary dilation U = [[T, √(I−TT†)], [√(I−T†T), −T†]] on 2D modes.
    /// Only the first D output modes are detected.
    pub fn dilate(spec: &TransferSpec) -> Result<Self> {
        let t = spec.matrix();
        let d = t.nrows();
        let s = spectral_norm(t);
        if s > 1.0 + PASSIVE_TOL {
            return Err(Error::NotPassive(s));
        }
        let eye = CMatrix::identity(d, d);
        let t_adj = t.adjoint();
        let top_right = psd_sqrt(&(&eye - t * &t_adj));
        let bottom_left = psd_sqrt(&(&eye - &t_adj * t));
        let mut u = CMatrix::zeros(2 * d, 2 * d);
        u.view_mut((0, 0), (d, d)).copy_from(t);
        u.view_mut((0, d), (d, d)).copy_from(&top_right);
        u.view_mut((d, 0), (d, d)).copy_from(&bottom_left);
        u.view_mut((d, d), (d, d)).copy_from(&(-t_adj));
        Ok(Self { matrix: u, side: spec.side(), window: d, lossy: true })
    }

    /// Restricts detection to the first `window` output modes.
    pub fn with_window(mut self, window: usize) -> Result<Self> {
        if window == 0 || window > self.dim() {
            return Err(Error::InvalidWindow { window, dim: self.dim() });
        }
        self.window = window;
        Ok(self)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn is_lossy(&self) -> bool {
        self.lossy
    }

    /// Not a dilation, and every output mode detected.
    pub fn is_lossless(&self) -> bool {
        !self.lossy && self.window == self.dim()
    }

    /// g(k, l) = Σ_{q < window} U(q, k)·U*(q, l).
    pub fn gram_matrix(&self) -> GramMatrix {
        let u = &self.matrix;
        let d = self.dim();
        let matrix = CMatrix::from_fn(d, d, |k, l| {
            (0..self.window).map(|q| u[(q, k)] * u[(q, l)].conj()).sum()
        });
        GramMatrix { matrix }
    }
}

/// Coherence matrix g₂ of an object over its detected output modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    matrix: CMatrix,
}

impl GramMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// (Hermitian deviation, smallest eigenvalue, largest eigenvalue).
    pub fn spectrum_summary(&self) -> (f64, f64, f64) {
        (
            hermitian_deviation(&self.matrix),
            min_eigenvalue(&self.matrix),
            max_eigenvalue(&self.matrix),
        )
    }
}

/// Complex Ginibre matrix → QR → Q·diag(R_ii / |R_ii|).
fn haar_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let z = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = z.qr();
    let q = qr.q();
    let r = qr.r();
    let phases = nalgebra::DVector::from_fn(dim, |i, _| {
        let d = r[(i, i)];
        let n = d.norm();
        if n > 0.0 {
            d / n
        } else {
            C64::new(1.0, 0.0)
        }
    });
    q * CMatrix::from_diagonal(&phases)
}
