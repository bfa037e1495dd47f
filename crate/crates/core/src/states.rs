//! Biphoton states over the two-photon sector |1_i, 1_j'⟩.
//!
//! Pure states are stored as their `M × M'` amplitude matrix φ(i, j'); mixed
//! states as an `(M·M') × (M·M')` density matrix. The tensor basis is ordered
//! unprimed-major: the pair (i, j') sits at index `i·M' + j'` (0-based).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    hermitian_deviation, max_abs_diff, min_eigenvalue, real, trace, zero_pad,
};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Renormalization is applied silently when the squared norm is this close to 1.
pub const RENORMALIZE_TOL: f64 = 1e-9;
/// Normalization tolerance in strict mode and for stored states.
pub const NORM_TOL: f64 = 1e-12;
/// Floor for the smallest eigenvalue of a PSD operator.
pub const PSD_FLOOR: f64 = -1e-10;
/// Trace tolerance for separable ensembles.
pub const ENSEMBLE_TRACE_TOL: f64 = 1e-10;

/// Mode counts and detector windows for the two photons.
///
/// Detected modes are always the leading ones: unprimed modes `0..window_unprimed`
/// and primed modes `0..window_primed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSpace {
    pub unprimed: usize,
    pub primed: usize,
    pub window_unprimed: usize,
    pub window_primed: usize,
}

impl ModeSpace {
    pub fn new(unprimed: usize, primed: usize, window_unprimed: usize, window_primed: usize) -> Result<Self> {
        if unprimed == 0 || primed == 0 {
            return Err(Error::InvalidModeSpace(format!(
                "mode counts must be positive (got {unprimed}, {primed})"
            )));
        }
        if window_unprimed == 0 || window_unprimed > unprimed {
            return Err(Error::InvalidModeSpace(format!(
                "unprimed window {window_unprimed} outside 1..={unprimed}"
            )));
        }
        if window_primed == 0 || window_primed > primed {
            return Err(Error::InvalidModeSpace(format!(
                "primed window {window_primed} outside 1..={primed}"
            )));
        }
        Ok(Self { unprimed, primed, window_unprimed, window_primed })
    }

    /// Every mode detected on both sides.
    pub fn lossless(unprimed: usize, primed: usize) -> Result<Self> {
        Self::new(unprimed, primed, unprimed, primed)
    }

    pub fn is_lossless(&self) -> bool {
        self.window_unprimed == self.unprimed && self.window_primed == self.primed
    }

    /// Dimension of the two-photon sector.
    pub fn pair_dim(&self) -> usize {
        self.unprimed * self.primed
    }

    pub fn basis_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.unprimed && j < self.primed);
        i * self.primed + j
    }

    pub fn basis_pair(&self, index: usize) -> (usize, usize) {
        debug_assert!(index < self.pair_dim());
        (index / self.primed, index % self.primed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Rescale when within [`RENORMALIZE_TOL`] of unit norm.
    Tolerant,
    /// Reject anything further than [`NORM_TOL`] from unit norm.
    Strict,
}

/// Pure two-photon state Σ φ(i, j') |1_i, 1_j'⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonPureState {
    modes: ModeSpace,
    amplitudes: CMatrix,
}

impl BiphotonPureState {
    pub fn from_amplitudes(modes: ModeSpace, amplitudes: CMatrix, policy: Normalization) -> Result<Self> {
        if amplitudes.shape() != (modes.unprimed, modes.primed) {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", modes.unprimed, modes.primed),
                got: format!("{}x{}", amplitudes.nrows(), amplitudes.ncols()),
            });
        }
        let norm_sqr = amplitudes.norm_squared();
        if norm_sqr == 0.0 || !norm_sqr.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let tol = match policy {
            Normalization::Tolerant => RENORMALIZE_TOL,
            Normalization::Strict => NORM_TOL,
        };
        if (norm_sqr - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm_sqr, tol });
        }
        let amplitudes = amplitudes.unscale(norm_sqr.sqrt());
        Ok(Self { modes, amplitudes })
    }

    /// State with φ(i, j') = phi(i)·δ(i, j'), pairing unprimed mode i with primed mode i'.
    pub fn diagonal_entangled(modes: ModeSpace, phi: &[C64]) -> Result<Self> {
        if modes.unprimed != modes.primed {
            return Err(Error::DimensionMismatch(format!(
                "diagonal entanglement needs M = M' (got {} and {})",
                modes.unprimed, modes.primed
            )));
        }
        if phi.len() != modes.unprimed {
            return Err(Error::ShapeMismatch {
                expected: format!("vector of length {}", modes.unprimed),
                got: format!("length {}", phi.len()),
            });
        }
        let diag = CVector::from_column_slice(phi);
        Self::from_amplitudes(modes, CMatrix::from_diagonal(&diag), Normalization::Tolerant)
    }

    /// Complex standard-normal amplitudes, normalized.
    pub fn random<R: Rng + ?Sized>(modes: ModeSpace, rng: &mut R) -> Self {
        let amplitudes = random_gaussian(modes.unprimed, modes.primed, rng);
        let n = amplitudes.norm();
        Self { modes, amplitudes: amplitudes.unscale(n) }
    }

    pub(crate) fn from_parts_unchecked(modes: ModeSpace, amplitudes: CMatrix) -> Self {
        debug_assert_eq!(amplitudes.shape(), (modes.unprimed, modes.primed));
        Self { modes, amplitudes }
    }

    pub fn modes(&self) -> &ModeSpace {
        &self.modes
    }

    pub fn amplitudes(&self) -> &CMatrix {
        &self.amplitudes
    }

    /// Amplitudes flattened in the unprimed-major basis order.
    pub fn flattened(&self) -> CVector {
        let m = self.modes;
        CVector::from_fn(m.pair_dim(), |idx, _| {
            let (i, j) = m.basis_pair(idx);
            self.amplitudes[(i, j)]
        })
    }

    /// Returns phi when φ(i, j') = phi(i)·δ(i, j'); errors otherwise.
    pub fn diagonal_amplitudes(&self) -> Result<Vec<C64>> {
        let off: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                // column-major storage
                let (i, j) = (idx % self.modes.unprimed, idx / self.modes.unprimed);
                i != j
            })
            .map(|(_, z)| z.norm_sqr())
            .sum();
        if off > NORM_TOL {
            return Err(Error::NotDiagonalEntangled(off));
        }
        let n = self.modes.unprimed.min(self.modes.primed);
        Ok((0..n).map(|i| self.amplitudes[(i, i)]).collect())
    }

    /// Embeds into a larger mode space, new modes unoccupied. Windows are kept.
    pub fn padded(&self, unprimed: usize, primed: usize) -> Result<Self> {
        if unprimed < self.modes.unprimed || primed < self.modes.primed {
            return Err(Error::DimensionMismatch(format!(
                "cannot pad a {}x{} state into {}x{}",
                self.modes.unprimed, self.modes.primed, unprimed, primed
            )));
        }
        let modes = ModeSpace::new(unprimed, primed, self.modes.window_unprimed, self.modes.window_primed)?;
        Ok(Self { modes, amplitudes: zero_pad(&self.amplitudes, unprimed, primed) })
    }

    /// γ₁ = φ·φ†.
    pub fn reduced_unprimed(&self) -> ReducedState {
        ReducedState { matrix: &self.amplitudes * self.amplitudes.adjoint() }
    }

    /// γ₂(k', l') = Σ_i φ(i, k')·φ*(i, l').
    pub fn reduced_primed(&self) -> ReducedState {
        ReducedState { matrix: self.amplitudes.transpose() * self.amplitudes.conjugate() }
    }
}

/// Two-photon density matrix in the unprimed-major tensor basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonDensityState {
    modes: ModeSpace,
    matrix: CMatrix,
}

impl BiphotonDensityState {
    pub fn from_matrix(modes: ModeSpace, matrix: CMatrix) -> Result<Self> {
        let d = modes.pair_dim();
        if matrix.shape() != (d, d) {
            return Err(Error::ShapeMismatch {
                expected: format!("{d}x{d}"),
                got: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        validate_operator(&matrix, NORM_TOL)?;
        Ok(Self { modes, matrix })
    }

    /// |Ψ⟩⟨Ψ|.
    pub fn from_pure(state: &BiphotonPureState) -> Self {
        let v = state.flattened();
        Self { modes: state.modes, matrix: &v * v.adjoint() }
    }

    /// Σ_k w_k · A_k ⊗ B_k.
    pub fn from_ensemble(ens: &ClassicalEnsemble) -> Result<Self> {
        let d = ens.modes.pair_dim();
        let mut matrix = CMatrix::zeros(d, d);
        for term in &ens.terms {
            matrix += term.unprimed.kronecker(&term.primed).scale(term.weight);
        }
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > ENSEMBLE_TRACE_TOL || tr.im.abs() > ENSEMBLE_TRACE_TOL {
            return Err(Error::TraceNotOne(tr.re));
        }
        Ok(Self { modes: ens.modes, matrix })
    }

    /// Convex mixture of pure states with the given nonnegative weights.
    pub fn mixture(components: &[(f64, BiphotonPureState)]) -> Result<Self> {
        let first = components.first().ok_or(Error::ZeroNorm)?;
        let modes = first.1.modes;
        let d = modes.pair_dim();
        let mut matrix = CMatrix::zeros(d, d);
        for (w, psi) in components {
            if *w < 0.0 {
                return Err(Error::NegativeWeight(*w));
            }
            if psi.modes != modes {
                return Err(Error::DimensionMismatch("mixture components live in different mode spaces".into()));
            }
            let v = psi.flattened();
            matrix += (&v * v.adjoint()).scale(*w);
        }
        Self::from_matrix(modes, matrix)
    }

    /// Random mixed state of the given rank: random pure components with
    /// uniformly drawn, normalized weights.
    pub fn random<R: Rng + ?Sized>(modes: ModeSpace, rank: usize, rng: &mut R) -> Self {
        let raw: Vec<f64> = (0..rank.max(1)).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let d = modes.pair_dim();
        let mut matrix = CMatrix::zeros(d, d);
        for w in raw {
            let v = BiphotonPureState::random(modes, rng).flattened();
            matrix += (&v * v.adjoint()).scale(w / total);
        }
        Self { modes, matrix }
    }

    pub(crate) fn from_parts_unchecked(modes: ModeSpace, matrix: CMatrix) -> Self {
        Self { modes, matrix }
    }

    pub fn modes(&self) -> &ModeSpace {
        &self.modes
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn padded(&self, unprimed: usize, primed: usize) -> Result<Self> {
        let old = self.modes;
        if unprimed < old.unprimed || primed < old.primed {
            return Err(Error::DimensionMismatch(format!(
                "cannot pad a {}x{} state into {}x{}",
                old.unprimed, old.primed, unprimed, primed
            )));
        }
        let modes = ModeSpace::new(unprimed, primed, old.window_unprimed, old.window_primed)?;
        let d = modes.pair_dim();
        let mut matrix = CMatrix::zeros(d, d);
        for a in 0..old.pair_dim() {
            let (i, j) = old.basis_pair(a);
            for b in 0..old.pair_dim() {
                let (k, l) = old.basis_pair(b);
                matrix[(modes.basis_index(i, j), modes.basis_index(k, l))] = self.matrix[(a, b)];
            }
        }
        Ok(Self { modes, matrix })
    }

    /// Partial trace over the primed modes.
    pub fn reduced_unprimed(&self) -> ReducedState {
        let m = self.modes;
        let matrix = CMatrix::from_fn(m.unprimed, m.unprimed, |i, j| {
            (0..m.primed)
                .map(|k| self.matrix[(m.basis_index(i, k), m.basis_index(j, k))])
                .sum()
        });
        ReducedState { matrix }
    }

    /// Partial trace over the unprimed modes.
    pub fn reduced_primed(&self) -> ReducedState {
        let m = self.modes;
        let matrix = CMatrix::from_fn(m.primed, m.primed, |k, l| {
            (0..m.unprimed)
                .map(|i| self.matrix[(m.basis_index(i, k), m.basis_index(i, l))])
                .sum()
        });
        ReducedState { matrix }
    }

    /// ⟨1_i| ρ |1_i⟩ as an operator on the primed modes (0-based `i`).
    pub fn unprimed_block(&self, i: usize) -> CMatrix {
        let m = self.modes;
        CMatrix::from_fn(m.primed, m.primed, |k, l| self.matrix[(m.basis_index(i, k), m.basis_index(i, l))])
    }

    /// ⟨1_j'| ρ |1_j'⟩ as an operator on the unprimed modes (0-based `j`).
    pub fn primed_block(&self, j: usize) -> CMatrix {
        let m = self.modes;
        CMatrix::from_fn(m.unprimed, m.unprimed, |i, k| self.matrix[(m.basis_index(i, j), m.basis_index(k, j))])
    }
}

/// Either representation of a two-photon state.
#[derive(Debug, Clone, PartialEq)]
pub enum TwoPhotonState {
    Pure(BiphotonPureState),
    Density(BiphotonDensityState),
}

impl TwoPhotonState {
    pub fn modes(&self) -> &ModeSpace {
        match self {
            Self::Pure(s) => s.modes(),
            Self::Density(s) => s.modes(),
        }
    }

    pub fn to_density(&self) -> BiphotonDensityState {
        match self {
            Self::Pure(s) => BiphotonDensityState::from_pure(s),
            Self::Density(s) => s.clone(),
        }
    }

    pub fn padded(&self, unprimed: usize, primed: usize) -> Result<Self> {
        Ok(match self {
            Self::Pure(s) => Self::Pure(s.padded(unprimed, primed)?),
            Self::Density(s) => Self::Density(s.padded(unprimed, primed)?),
        })
    }

    pub fn reduced_unprimed(&self) -> ReducedState {
        match self {
            Self::Pure(s) => s.reduced_unprimed(),
            Self::Density(s) => s.reduced_unprimed(),
        }
    }

    pub fn reduced_primed(&self) -> ReducedState {
        match self {
            Self::Pure(s) => s.reduced_primed(),
            Self::Density(s) => s.reduced_primed(),
        }
    }

    /// Probability of the pair (i, j'), 0-based.
    pub fn pair_probability(&self, i: usize, j: usize) -> f64 {
        match self {
            Self::Pure(s) => s.amplitudes()[(i, j)].norm_sqr(),
            Self::Density(s) => s.matrix()[(s.modes().basis_index(i, j), s.modes().basis_index(i, j))].re,
        }
    }
}

impl From<BiphotonPureState> for TwoPhotonState {
    fn from(s: BiphotonPureState) -> Self {
        Self::Pure(s)
    }
}

impl From<BiphotonDensityState> for TwoPhotonState {
    fn from(s: BiphotonDensityState) -> Self {
        Self::Density(s)
    }
}

/// Single-photon density matrix γ₁(i, j) of one side.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    matrix: CMatrix,
}

impl ReducedState {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        validate_operator(&matrix, NORM_TOL)?;
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        validate_operator(&self.matrix, NORM_TOL)
    }
}

/// One product term w · A ⊗ B of a separable ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleTerm {
    pub weight: f64,
    pub unprimed: CMatrix,
    pub primed: CMatrix,
}

/// Separable mixture Σ_k w_k · A_k ⊗ B_k with PSD factors.
///
/// The factors need not have unit trace; only Σ_k w_k·tr(A_k)·tr(B_k) = 1 is required.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEnsemble {
    modes: ModeSpace,
    terms: Vec<EnsembleTerm>,
    accessible: bool,
}

impl ClassicalEnsemble {
    pub fn new(modes: ModeSpace, terms: Vec<EnsembleTerm>) -> Result<Self> {
        let ens = Self { modes, terms, accessible: true };
        ens.validate()?;
        Ok(ens)
    }

    pub(crate) fn with_accessibility(mut self, accessible: bool) -> Self {
        self.accessible = accessible;
        self
    }

    pub fn modes(&self) -> &ModeSpace {
        &self.modes
    }

    pub fn terms(&self) -> &[EnsembleTerm] {
        &self.terms
    }

    /// Terms with nonzero weight·trace.
    pub fn effective_terms(&self) -> impl Iterator<Item = &EnsembleTerm> {
        self.terms
            .iter()
            .filter(|t| (t.weight * trace(&t.unprimed).re * trace(&t.primed).re).abs() > NORM_TOL)
    }

    /// False when the state needs excitation of undetected (loss) modes.
    pub fn is_accessible(&self) -> bool {
        self.accessible
    }

    pub fn total_trace(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight * (trace(&t.unprimed) * trace(&t.primed)).re)
            .sum()
    }

    /// Checks weights, factor shapes, factor positivity, and total trace.
    pub fn validate(&self) -> Result<()> {
        let m = self.modes;
        for t in &self.terms {
            if t.weight.is_nan() || t.weight < 0.0 {
                return Err(Error::NegativeWeight(t.weight));
            }
            if t.unprimed.shape() != (m.unprimed, m.unprimed) || t.primed.shape() != (m.primed, m.primed) {
                return Err(Error::ShapeMismatch {
                    expected: format!("{0}x{0} and {1}x{1} factors", m.unprimed, m.primed),
                    got: format!(
                        "{}x{} and {}x{}",
                        t.unprimed.nrows(),
                        t.unprimed.ncols(),
                        t.primed.nrows(),
                        t.primed.ncols()
                    ),
                });
            }
            check_psd(&t.unprimed)?;
            check_psd(&t.primed)?;
        }
        let tr = self.total_trace();
        if (tr - 1.0).abs() > ENSEMBLE_TRACE_TOL {
            return Err(Error::TraceNotOne(tr));
        }
        Ok(())
    }
}

fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

fn check_psd(m: &CMatrix) -> Result<()> {
    let h = hermitian_deviation(m);
    if h > NORM_TOL {
        return Err(Error::NotHermitian(h));
    }
    let lo = min_eigenvalue(m);
    if lo < PSD_FLOOR {
        return Err(Error::NotPositive(lo));
    }
    Ok(())
}

/// Hermitian, unit trace within `trace_tol`, PSD.
fn validate_operator(m: &CMatrix, trace_tol: f64) -> Result<()> {
    check_psd(m)?;
    let tr = trace(m);
    if (tr - real(1.0)).norm() > trace_tol {
        return Err(Error::TraceNotOne(tr.re));
    }
    Ok(())
}

/// max elementwise |a - b| between two reduced states.
pub fn reduced_distance(a: &ReducedState, b: &ReducedState) -> f64 {
    max_abs_diff(a.matrix(), b.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn four_mode_amplitudes() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.5), c(0.5), c(-0.5)])
    }

    fn four_mode() -> BiphotonPureState {
        BiphotonPureState::from_amplitudes(ModeSpace::lossless(2, 2).unwrap(), four_mode_amplitudes(), Normalization::Strict)
            .unwrap()
    }

    #[test]
    fn mode_space_rejects_bad_windows() {
        assert!(ModeSpace::new(2, 2, 0, 2).is_err());
        assert!(ModeSpace::new(2, 2, 3, 2).is_err());
        assert!(ModeSpace::new(2, 2, 2, 3).is_err());
        assert!(ModeSpace::new(0, 2, 0, 2).is_err());
        assert!(ModeSpace::new(3, 4, 2, 4).unwrap().window_unprimed == 2);
        assert!(ModeSpace::lossless(3, 4).unwrap().is_lossless());
        assert!(!ModeSpace::new(3, 4, 2, 4).unwrap().is_lossless());
    }

    #[test]
    fn basis_index_is_bijective() {
        for m in 1..=8 {
            for mp in 1..=8 {
                let modes = ModeSpace::lossless(m, mp).unwrap();
                let mut seen = vec![false; modes.pair_dim()];
                for i in 0..m {
                    for j in 0..mp {
                        let idx = modes.basis_index(i, j);
                        assert!(!seen[idx]);
                        seen[idx] = true;
                        assert_eq!(modes.basis_pair(idx), (i, j));
                    }
                }
                assert!(seen.iter().all(|&s| s));
            }
        }
    }

    #[test]
    fn four_mode_state_is_valid() {
        let s = four_mode();
        assert!((s.amplitudes().norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_pair_state() {
        let modes = ModeSpace::lossless(1, 1).unwrap();
        let s = BiphotonPureState::from_amplitudes(modes, CMatrix::from_element(1, 1, c(1.0)), Normalization::Strict)
            .unwrap();
        assert_eq!(s.amplitudes()[(0, 0)], c(1.0));
    }

    #[test]
    fn strict_rejects_unnormalized() {
        let modes = ModeSpace::lossless(2, 2).unwrap();
        let amps = CMatrix::from_row_slice(2, 2, &[c(2.0), c(0.0), c(0.0), c(0.0)]);
        let err = BiphotonPureState::from_amplitudes(modes, amps.clone(), Normalization::Strict).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
        // tolerant mode also refuses a norm this far off
        assert!(BiphotonPureState::from_amplitudes(modes, amps, Normalization::Tolerant).is_err());
    }

    #[test]
    fn tolerant_renormalizes_rounding() {
        let modes = ModeSpace::lossless(2, 2).unwrap();
        let amps = four_mode_amplitudes().scale(1.0 + 2e-10);
        let s = BiphotonPureState::from_amplitudes(modes, amps.clone(), Normalization::Tolerant).unwrap();
        assert!((s.amplitudes().norm_squared() - 1.0).abs() < 1e-15);
        assert!(BiphotonPureState::from_amplitudes(modes, amps, Normalization::Strict).is_err());
    }

    #[test]
    fn rejects_zero_and_bad_shape() {
        let modes = ModeSpace::lossless(2, 2).unwrap();
        assert_eq!(
            BiphotonPureState::from_amplitudes(modes, CMatrix::zeros(2, 2), Normalization::Tolerant).unwrap_err(),
            Error::ZeroNorm
        );
        assert!(matches!(
            BiphotonPureState::from_amplitudes(modes, CMatrix::zeros(2, 3), Normalization::Tolerant),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn diagonal_entangled_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let modes = ModeSpace::lossless(2, 2).unwrap();
        let s = BiphotonPureState::diagonal_entangled(modes, &[c(h), c(h)]).unwrap();
        let expect = CMatrix::from_row_slice(2, 2, &[c(h), c(0.0), c(0.0), c(h)]);
        assert!(max_abs_diff(s.amplitudes(), &expect) < 1e-15);

        let p = BiphotonPureState::diagonal_entangled(modes, &[c(1.0), c(0.0)]).unwrap();
        assert_eq!(p.amplitudes()[(0, 0)], c(1.0));
        assert_eq!(p.amplitudes()[(1, 1)], c(0.0));

        let t = 1.0 / 3f64.sqrt();
        let modes3 = ModeSpace::lossless(3, 3).unwrap();
        let s3 = BiphotonPureState::diagonal_entangled(modes3, &[c(t), c(t), c(t)]).unwrap();
        let expect3 = CMatrix::identity(3, 3).scale(t);
        assert!(max_abs_diff(s3.amplitudes(), &expect3) < 1e-15);
        assert_eq!(s3.diagonal_amplitudes().unwrap().len(), 3);
    }

    #[test]
    fn diagonal_entangled_errors() {
        let rect = ModeSpace::lossless(2, 3).unwrap();
        assert!(matches!(
            BiphotonPureState::diagonal_entangled(rect, &[c(1.0), c(0.0)]),
            Err(Error::DimensionMismatch(_))
        ));
        let sq = ModeSpace::lossless(2, 2).unwrap();
        assert_eq!(BiphotonPureState::diagonal_entangled(sq, &[c(0.0), c(0.0)]).unwrap_err(), Error::ZeroNorm);
    }

    #[test]
    fn non_diagonal_state_is_detected() {
        assert!(matches!(four_mode().diagonal_amplitudes(), Err(Error::NotDiagonalEntangled(_))));
    }

    #[test]
    fn four_mode_density_entries() {
        let rho = BiphotonDensityState::from_pure(&four_mode());
        // outer product of (½, ½, ½, -½)
        let v = [0.5, 0.5, 0.5, -0.5];
        for a in 0..4 {
            for b in 0..4 {
                assert!((rho.matrix()[(a, b)] - c(v[a] * v[b])).norm() < 1e-15);
                assert!((rho.matrix()[(a, b)].norm() - 0.25).abs() < 1e-15);
            }
        }
        let rank = rho.matrix().clone().svd(false, false).rank(1e-10);
        assert_eq!(rank, 1);
        assert!((trace(rho.matrix()).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn product_density_single_entry() {
        let modes = ModeSpace::lossless(2, 2).unwrap();
        let s = BiphotonPureState::diagonal_entangled(modes, &[c(1.0), c(0.0)]).unwrap();
        let rho = BiphotonDensityState::from_pure(&s);
        let mut expect = CMatrix::zeros(4, 4);
        expect[(0, 0)] = c(1.0);
        assert_eq!(rho.matrix(), &expect);
    }

    #[test]
    fn ensemble_density_examples() {
        let modes = ModeSpace::lossless(2, 2).unwrap();
        let p0 = crate::linalg::projector(2, 0);
        let p1 = crate::linalg::projector(2, 1);
        let single = ClassicalEnsemble::new(
            modes,
            vec![EnsembleTerm { weight: 1.0, unprimed: p0.clone(), primed: p0.clone() }],
        )
        .unwrap();
        let from_ens = BiphotonDensityState::from_ensemble(&single).unwrap();
        let s = BiphotonPureState::diagonal_entangled(modes, &[c(1.0), c(0.0)]).unwrap();
        assert_eq!(from_ens.matrix(), BiphotonDensityState::from_pure(&s).matrix());

        let two = ClassicalEnsemble::new(
            modes,
            vec![
                EnsembleTerm { weight: 0.5, unprimed: p0.clone(), primed: p1.clone() },
                EnsembleTerm { weight: 0.5, unprimed: p1, primed: p0 },
            ],
        )
        .unwrap();
        let rho = BiphotonDensityState::from_ensemble(&two).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    assert_eq!(rho.matrix()[(a, b)], c(0.0));
                }
            }
        }
        assert_eq!(rho.matrix()[(1, 1)], c(0.5));
        assert_eq!(rho.matrix()[(2, 2)], c(0.5));
    }

    #[test]
    fn ensemble_rejects_bad_terms() {
        let modes = ModeSpace::lossless(2, 2).unwrap();
        let p0 = crate::linalg::projector(2, 0);
        let neg = ClassicalEnsemble::new(modes, vec![EnsembleTerm { weight: -1.0, unprimed: p0.clone(), primed: p0.clone() }]);
        assert!(matches!(neg, Err(Error::NegativeWeight(_))));
        let half = ClassicalEnsemble::new(modes, vec![EnsembleTerm { weight: 0.5, unprimed: p0.clone(), primed: p0.clone() }]);
        assert!(matches!(half, Err(Error::TraceNotOne(_))));
        let not_psd = ClassicalEnsemble::new(
            modes,
            vec![EnsembleTerm { weight: 1.0, unprimed: p0.scale(-1.0), primed: p0.scale(-1.0) }],
        );
        assert!(matches!(not_psd, Err(Error::NotPositive(_))));
    }

    #[test]
    fn four_mode_reduced_is_half_identity() {
        let g = four_mode().reduced_unprimed();
        assert!(max_abs_diff(g.matrix(), &CMatrix::identity(2, 2).scale(0.5)) < 1e-15);
        // partial trace path
        let g2 = BiphotonDensityState::from_pure(&four_mode()).reduced_unprimed();
        assert!(reduced_distance(&g, &g2) < 1e-15);
    }

    #[test]
    fn reduced_of_product_and_diagonal() {
        let modes = ModeSpace::lossless(2, 2).unwrap();
        let p = BiphotonPureState::diagonal_entangled(modes, &[c(1.0), c(0.0)]).unwrap();
        assert_eq!(p.reduced_unprimed().matrix(), &crate::linalg::projector(2, 0));

        let phi = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let d = BiphotonPureState::diagonal_entangled(modes, &phi).unwrap();
        let g = d.reduced_unprimed();
        let expect = CMatrix::from_diagonal(&nalgebra::dvector![c(0.36), c(0.64)]);
        assert!(max_abs_diff(g.matrix(), &expect) < 1e-15);
    }

    #[test]
    fn padding_preserves_amplitudes_and_windows() {
        let s = four_mode();
        let p = s.padded(4, 3).unwrap();
        assert_eq!(p.modes().window_unprimed, 2);
        assert_eq!(p.modes().window_primed, 2);
        assert_eq!(p.amplitudes()[(1, 1)], c(-0.5));
        assert_eq!(p.amplitudes()[(3, 2)], c(0.0));
        let rho_pad = BiphotonDensityState::from_pure(&s).padded(4, 3).unwrap();
        assert!(max_abs_diff(rho_pad.matrix(), BiphotonDensityState::from_pure(&p).matrix()) < 1e-15);
        assert!(s.padded(1, 2).is_err());
    }

    #[test]
    fn random_reduced_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 2..=4 {
            let modes = ModeSpace::lossless(m, m).unwrap();
            for _ in 0..100 {
                let s = BiphotonPureState::random(modes, &mut rng);
                let g = s.reduced_unprimed();
                g.validate().unwrap();
                let g2 = BiphotonDensityState::from_pure(&s).reduced_unprimed();
                assert!(reduced_distance(&g, &g2) <= 1e-12);
            }
        }
    }

    #[test]
    fn random_mixed_state_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let modes = ModeSpace::lossless(3, 2).unwrap();
        let rho = BiphotonDensityState::random(modes, 3, &mut rng);
        BiphotonDensityState::from_matrix(modes, rho.matrix().clone()).unwrap();
        rho.reduced_unprimed().validate().unwrap();
        rho.reduced_primed().validate().unwrap();
    }
}
