//! Propagation through the two objects and the resulting detection statistics.
//!
//! Detector eigenmodes are the computational output basis of each object.
//! Objects act on different photons and therefore commute; propagation is
//! `φ → U₁·φ·U₂ᵀ` for pure states and `(U₁⊗U₂) ρ (U₁⊗U₂)†` for mixed ones.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::objects::{GramMatrix, ObjectOperator, Side};
use crate::states::{BiphotonDensityState, BiphotonPureState, ModeSpace, ReducedState, TwoPhotonState};
use crate::{CMatrix, Error, Result, C64};

/// Values this close below zero are reported as zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// Maps rounding residue in [−CLAMP_TOL, 0] (including −0.0) to +0.0.
pub fn clamp_residue(x: f64) -> f64 {
    if (-CLAMP_TOL..=0.0).contains(&x) {
        0.0
    } else {
        x
    }
}

/// All detection statistics of one scenario. Vectors run over detected
/// unprimed modes q < N, the joint matrix over detected pairs (q, q').
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    /// Unprimed-side marginal ignoring the primed photon.
    pub p1: Vec<f64>,
    /// Unprimed-side marginal conditioned on a click in the primed bucket.
    pub p1_bar: Vec<f64>,
    /// Coincidence probabilities, row q, column q'.
    pub joint: Vec<Vec<f64>>,
    /// Click at q with the primed photon lost.
    pub p1_noclick: Vec<f64>,
    pub p0: f64,
}

impl DetectionReport {
    /// Copy with tiny negative rounding residue set to zero.
    pub fn clamped(&self) -> Self {
        let c = clamp_residue;
        Self {
            p1: self.p1.iter().copied().map(c).collect(),
            p1_bar: self.p1_bar.iter().copied().map(c).collect(),
            joint: self.joint.iter().map(|r| r.iter().copied().map(c).collect()).collect(),
            p1_noclick: self.p1_noclick.iter().copied().map(c).collect(),
            p0: c(self.p0),
        }
    }

    /// max of |p1 − p1_bar − p1_noclick| and |p0 − Σ p1_noclick|.
    pub fn loss_identity_deviation(&self) -> f64 {
        let per_mode = self
            .p1
            .iter()
            .zip(&self.p1_bar)
            .zip(&self.p1_noclick)
            .map(|((a, b), c)| (a - b - c).abs())
            .fold(0.0, f64::max);
        let total = (self.p0 - self.p1_noclick.iter().sum::<f64>()).abs();
        per_mode.max(total)
    }

    /// max_q |p1(q) − p1_bar(q)|.
    pub fn bucket_gap(&self) -> f64 {
        max_vec_diff(&self.p1, &self.p1_bar)
    }

    /// Largest deviation between corresponding fields. Shape mismatches report infinity.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        if self.joint.len() != other.joint.len()
            || self.joint.iter().zip(&other.joint).any(|(a, b)| a.len() != b.len())
            || self.p1.len() != other.p1.len()
        {
            return f64::INFINITY;
        }
        let joint = self
            .joint
            .iter()
            .zip(&other.joint)
            .map(|(a, b)| max_vec_diff(a, b))
            .fold(0.0, f64::max);
        [
            max_vec_diff(&self.p1, &other.p1),
            max_vec_diff(&self.p1_bar, &other.p1_bar),
            max_vec_diff(&self.p1_noclick, &other.p1_noclick),
            (self.p0 - other.p0).abs(),
            joint,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Checks range, bucket-sum and loss identities. Returns a description of the first violation.
    pub fn check_invariants(&self, tol: f64) -> std::result::Result<(), String> {
        let all = self
            .p1
            .iter()
            .chain(&self.p1_bar)
            .chain(&self.p1_noclick)
            .chain(self.joint.iter().flatten())
            .chain(std::iter::once(&self.p0));
        for &x in all {
            if !(-tol..=1.0 + tol).contains(&x) {
                return Err(format!("probability {x} outside [0, 1]"));
            }
        }
        for (q, row) in self.joint.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - self.p1_bar[q]).abs() > tol {
                return Err(format!("bucket sum mismatch at q={q}: {s} vs {}", self.p1_bar[q]));
            }
        }
        let dev = self.loss_identity_deviation();
        if dev > tol {
            return Err(format!("loss decomposition violated by {dev:e}"));
        }
        Ok(())
    }

    pub fn joint_total(&self) -> f64 {
        self.joint.iter().flatten().sum()
    }
}

pub(crate) fn max_vec_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn expect_side(obj: &ObjectOperator, side: Side) -> Result<()> {
    if obj.side() != side {
        return Err(Error::WrongSide { expected: side, got: obj.side() });
    }
    Ok(())
}

/// Applies the unprimed-side object. The state is zero-padded into the
/// object's mode space; the unprimed window becomes the object's window.
pub fn apply_unprimed(state: &TwoPhotonState, h1: &ObjectOperator) -> Result<TwoPhotonState> {
    expect_side(h1, Side::Unprimed)?;
    let m = *state.modes();
    if m.unprimed > h1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} unprimed modes but the object acts on {}",
            m.unprimed,
            h1.dim()
        )));
    }
    let padded = state.padded(h1.dim(), m.primed)?;
    let modes = ModeSpace::new(h1.dim(), m.primed, h1.window(), m.window_primed)?;
    let u = h1.matrix();
    Ok(match padded {
        TwoPhotonState::Pure(s) => TwoPhotonState::Pure(BiphotonPureState::from_parts_unchecked(modes, u * s.amplitudes())),
        TwoPhotonState::Density(s) => {
            let op = u.kronecker(&CMatrix::identity(m.primed, m.primed));
            TwoPhotonState::Density(BiphotonDensityState::from_parts_unchecked(modes, &op * s.matrix() * op.adjoint()))
        }
    })
}

/// Applies the primed-side object; see [`apply_unprimed`].
pub fn apply_primed(state: &TwoPhotonState, h2: &ObjectOperator) -> Result<TwoPhotonState> {
    expect_side(h2, Side::Primed)?;
    let m = *state.modes();
    if m.primed > h2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} primed modes but the object acts on {}",
            m.primed,
            h2.dim()
        )));
    }
    let padded = state.padded(m.unprimed, h2.dim())?;
    let modes = ModeSpace::new(m.unprimed, h2.dim(), m.window_unprimed, h2.window())?;
    let u = h2.matrix();
    Ok(match padded {
        TwoPhotonState::Pure(s) => {
            TwoPhotonState::Pure(BiphotonPureState::from_parts_unchecked(modes, s.amplitudes() * u.transpose()))
        }
        TwoPhotonState::Density(s) => {
            let op = CMatrix::identity(m.unprimed, m.unprimed).kronecker(u);
            TwoPhotonState::Density(BiphotonDensityState::from_parts_unchecked(modes, &op * s.matrix() * op.adjoint()))
        }
    })
}

/// Propagates through both objects. Pure states use the `U₁·φ·U₂ᵀ` sandwich,
/// density matrices a single `U₁⊗U₂` conjugation.
pub fn apply_objects(state: &TwoPhotonState, h1: &ObjectOperator, h2: &ObjectOperator) -> Result<TwoPhotonState> {
    match state {
        TwoPhotonState::Pure(_) => apply_primed(&apply_unprimed(state, h1)?, h2),
        TwoPhotonState::Density(s) => {
            expect_side(h1, Side::Unprimed)?;
            expect_side(h2, Side::Primed)?;
            let m = s.modes();
            if m.unprimed > h1.dim() || m.primed > h2.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "state is {}x{} but objects act on {}x{}",
                    m.unprimed,
                    m.primed,
                    h1.dim(),
                    h2.dim()
                )));
            }
            let padded = s.padded(h1.dim(), h2.dim())?;
            let modes = ModeSpace::new(h1.dim(), h2.dim(), h1.window(), h2.window())?;
            let op = h1.matrix().kronecker(h2.matrix());
            let rho = &op * padded.matrix() * op.adjoint();
            Ok(TwoPhotonState::Density(BiphotonDensityState::from_parts_unchecked(modes, rho)))
        }
    }
}

/// Probabilities of every output pair, including undetected modes.
fn pair_probabilities(evolved: &TwoPhotonState) -> DMatrix<f64> {
    let m = evolved.modes();
    DMatrix::from_fn(m.unprimed, m.primed, |q, r| evolved.pair_probability(q, r))
}

/// p(q, q') over the detected windows of the evolved state.
pub fn joint_distribution(evolved: &TwoPhotonState) -> DMatrix<f64> {
    let m = evolved.modes();
    DMatrix::from_fn(m.window_unprimed, m.window_primed, |q, r| evolved.pair_probability(q, r))
}

/// p1(q) = ⟨1_q| U₁ γ₁ U₁† |1_q⟩ for q in the object's window, from the reduced state.
pub fn marginal_ignoring_primed(state: &TwoPhotonState, h1: &ObjectOperator) -> Result<Vec<f64>> {
    expect_side(h1, Side::Unprimed)?;
    let m = state.modes();
    if m.unprimed > h1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} unprimed modes but the object acts on {}",
            m.unprimed,
            h1.dim()
        )));
    }
    let gamma = state.padded(h1.dim(), m.primed)?.reduced_unprimed();
    let u = h1.matrix();
    let out = u * gamma.matrix() * u.adjoint();
    Ok((0..h1.window()).map(|q| out[(q, q)].re).collect())
}

/// p1(q) = Σ_i Σ_j γ₁(i, j)·h₁(q, i)·h₁*(q, j), evaluated term by term.
pub fn marginal_via_gamma(gamma: &ReducedState, h1: &ObjectOperator) -> Result<Vec<f64>> {
    expect_side(h1, Side::Unprimed)?;
    let n = gamma.dim();
    if n > h1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "reduced state has {n} modes but the object acts on {}",
            h1.dim()
        )));
    }
    let g = gamma.matrix();
    let h = h1.matrix();
    Ok((0..h1.window())
        .map(|q| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    acc += g[(i, j)] * h[(q, i)] * h[(q, j)].conj();
                }
            }
            acc.re
        })
        .collect())
}

/// p̄1(q) = Σ_{q' < N'} p(q, q').
pub fn bucket_marginal(evolved: &TwoPhotonState) -> Vec<f64> {
    joint_distribution(evolved).row_iter().map(|r| r.sum()).collect()
}

/// Primed-side marginal Σ_q p(q, q') over all unprimed output modes, for q' < N'.
pub fn marginal_primed(evolved: &TwoPhotonState) -> Vec<f64> {
    let m = evolved.modes();
    (0..m.window_primed)
        .map(|r| (0..m.unprimed).map(|q| evolved.pair_probability(q, r)).sum())
        .collect()
}

/// p̄1(q) = Σ_i Σ_j phi(i)·phi*(j)·g₂(i, j)·h₁(q, i)·h₁*(q, j) for a
/// diagonal-entangled state with amplitude vector `phi`.
pub fn bucket_via_gram(phi: &[C64], g2: &GramMatrix, h1: &ObjectOperator) -> Result<Vec<f64>> {
    expect_side(h1, Side::Unprimed)?;
    let n = phi.len();
    if n > g2.dim() || n > h1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "amplitude vector of length {n} exceeds object dimensions {} / {}",
            h1.dim(),
            g2.dim()
        )));
    }
    let g = g2.matrix();
    let h = h1.matrix();
    Ok((0..h1.window())
        .map(|q| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    acc += phi[i] * phi[j].conj() * g[(i, j)] * h[(q, i)] * h[(q, j)].conj();
                }
            }
            acc.re
        })
        .collect())
}

/// [`bucket_via_gram`] for a pure state; errors unless it is diagonal-entangled.
pub fn bucket_via_gram_for_state(
    state: &BiphotonPureState,
    h1: &ObjectOperator,
    h2: &ObjectOperator,
) -> Result<Vec<f64>> {
    expect_side(h2, Side::Primed)?;
    let phi = state.diagonal_amplitudes()?;
    bucket_via_gram(&phi, &h2.gram_matrix(), h1)
}

/// Full report for an evolved state. `p1_noclick(q)` collects the weight on
/// undetected primed modes q' ≥ N'.
pub fn loss_decomposition(evolved: &TwoPhotonState) -> DetectionReport {
    let m = *evolved.modes();
    let probs = pair_probabilities(evolved);
    let (n, np) = (m.window_unprimed, m.window_primed);
    let joint: Vec<Vec<f64>> = (0..n).map(|q| (0..np).map(|r| probs[(q, r)]).collect()).collect();
    let p1_bar: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let p1_noclick: Vec<f64> = (0..n).map(|q| (np..m.primed).map(|r| probs[(q, r)]).sum()).collect();
    let p1: Vec<f64> = (0..n).map(|q| (0..m.primed).map(|r| probs[(q, r)]).sum()).collect();
    let p0 = p1_noclick.iter().sum();
    DetectionReport { p1, p1_bar, joint, p1_noclick, p0 }
}

/// Propagate and report in one step.
pub fn detect(state: &TwoPhotonState, h1: &ObjectOperator, h2: &ObjectOperator) -> Result<DetectionReport> {
    Ok(loss_decomposition(&apply_objects(state, h1, h2)?))
}
