//! Separable states that reproduce bucket-detected statistics of an arbitrary
//! (possibly entangled) two-photon state.
//!
//! Both constructions return states written *before* propagation, so they can
//! be pushed through the same objects as the state they imitate.

use crate::linalg::{projector, trace};
use crate::objects::{ObjectOperator, Side};
use crate::states::{BiphotonDensityState, ClassicalEnsemble, EnsembleTerm, ModeSpace, TwoPhotonState};
use crate::{CMatrix, Error, Result};

/// Largest loss probability for which the product mimic is defined.
pub const MAX_LOSS: f64 = 1.0 - 1e-12;

/// Classically correlated state Σ_i U₁†|1_i⟩⟨1_i|U₁ ⊗ ⟨1_i|U₁ρU₁†|1_i⟩.
///
/// Requires a lossless reference object `h1`. Reproduces the full joint
/// distribution of `rho` for every primed-side object.
pub fn holography_mimic(rho: &BiphotonDensityState, h1: &ObjectOperator) -> Result<ClassicalEnsemble> {
    if h1.side() != Side::Unprimed {
        return Err(Error::WrongSide { expected: Side::Unprimed, got: h1.side() });
    }
    if !h1.is_lossless() {
        return Err(Error::LossyReference);
    }
    let m = rho.modes();
    if m.unprimed > h1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} unprimed modes but the object acts on {}",
            m.unprimed,
            h1.dim()
        )));
    }
    let rho = rho.padded(h1.dim(), m.primed)?;
    let modes = *rho.modes();
    let op = h1.matrix().kronecker(&CMatrix::identity(modes.primed, modes.primed));
    let after = BiphotonDensityState::from_parts_unchecked(modes, &op * rho.matrix() * op.adjoint());
    let u = h1.matrix();
    let terms = (0..modes.unprimed)
        .map(|i| EnsembleTerm {
            weight: 1.0,
            unprimed: u.adjoint() * projector(modes.unprimed, i) * u,
            primed: after.unprimed_block(i),
        })
        .collect();
    ClassicalEnsemble::new(modes, terms)
}

/// Result of [`lossy_product_mimic`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMimic {
    pub ensemble: ClassicalEnsemble,
    /// Probability that the primed photon ends in an undetected mode.
    pub p0: f64,
    /// 0-based primed output mode carrying the loss weight, if one was needed.
    pub spare_mode: Option<usize>,
}

/// Uncorrelated product state
/// `Σ_{j'<N'} ⟨1_j'|U₂ρU₂†|1_j'⟩ ⊗ U₂†(|1_1'⟩⟨1_1'| + P₀/(1−P₀)·|1_s'⟩⟨1_s'|)U₂`.
///
/// Reproduces the bucket-conditioned marginal p̄₁ of `rho` for any unprimed
/// object. `spare_mode` (0-based) must be an undetected output mode of `h2`;
/// it defaults to the last one. The result is flagged inaccessible when it
/// excites primed modes outside the detected window.
pub fn lossy_product_mimic(
    rho: &BiphotonDensityState,
    h2: &ObjectOperator,
    spare_mode: Option<usize>,
) -> Result<ProductMimic> {
    if h2.side() != Side::Primed {
        return Err(Error::WrongSide { expected: Side::Primed, got: h2.side() });
    }
    let m = rho.modes();
    if m.primed > h2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} primed modes but the object acts on {}",
            m.primed,
            h2.dim()
        )));
    }
    let (dim, window) = (h2.dim(), h2.window());
    let spare = match spare_mode {
        Some(s) if s < window || s >= dim => {
            return Err(Error::InvalidSpareMode { spare: s + 1, window, dim });
        }
        Some(s) => Some(s),
        None if dim > window => Some(dim - 1),
        None => None,
    };

    let rho = rho.padded(m.unprimed, dim)?;
    let modes = ModeSpace::new(m.unprimed, dim, m.window_unprimed, window)?;
    let op = CMatrix::identity(m.unprimed, m.unprimed).kronecker(h2.matrix());
    let after = BiphotonDensityState::from_parts_unchecked(modes, &op * rho.matrix() * op.adjoint());

    let mut unprimed = CMatrix::zeros(m.unprimed, m.unprimed);
    for j in 0..window {
        unprimed += after.primed_block(j);
    }
    let p0: f64 = (window..dim).map(|j| trace(&after.primed_block(j)).re).sum();
    if p0 >= MAX_LOSS {
        return Err(Error::AllPhotonsLost(p0));
    }

    let mut carrier = projector(dim, 0);
    if let Some(s) = spare {
        carrier += projector(dim, s).scale(p0 / (1.0 - p0));
    }
    let u = h2.matrix();
    let primed = u.adjoint() * carrier * u;
    let outside: f64 = (window..dim).map(|k| primed[(k, k)].re).sum();

    let ensemble = ClassicalEnsemble::new(modes, vec![EnsembleTerm { weight: 1.0, unprimed, primed }])?
        .with_accessibility(outside <= 1e-12);
    Ok(ProductMimic { ensemble, p0, spare_mode: spare })
}

/// Density state of a mimic ensemble, ready for propagation.
pub fn mimic_state(ens: &ClassicalEnsemble) -> Result<TwoPhotonState> {
    Ok(BiphotonDensityState::from_ensemble(ens)?.into())
}
