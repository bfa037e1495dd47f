//! Scenario file schema and loader.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! arrays. Mode labels in files are 1-based; everything in memory is 0-based.

use serde::{Deserialize, Serialize};

use crate::objects::{ObjectOperator, Side, TransferSpec};
use crate::states::{
    BiphotonDensityState, BiphotonPureState, ClassicalEnsemble, EnsembleTerm, ModeSpace, Normalization,
    TwoPhotonState,
};
use crate::{CMatrix, Error, C64};

pub type Complex = [f64; 2];
pub type MatrixRows = Vec<Vec<Complex>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub modes: ModesSection,
    pub state: StateSection,
    pub object1: ObjectSection,
    pub object2: ObjectSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub analyses: Vec<Analysis>,
    /// 1-based undetected primed output mode for the product mimic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spare_mode: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesSection {
    pub unprimed: usize,
    pub primed: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_unprimed: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_primed: Option<usize>,
}

impl From<ModeSpace> for ModesSection {
    fn from(m: ModeSpace) -> Self {
        Self {
            unprimed: m.unprimed,
            primed: m.primed,
            window_unprimed: Some(m.window_unprimed),
            window_primed: Some(m.window_primed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateSection {
    Pure { amplitudes: MatrixRows },
    Diagonal { phi: Vec<Complex> },
    Ensemble { terms: Vec<TermSection> },
    Density { matrix: MatrixRows },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSection {
    pub weight: f64,
    pub unprimed: MatrixRows,
    pub primed: MatrixRows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObjectSection {
    Identity,
    Unitary { matrix: MatrixRows },
    /// Passive transfer matrix; dilated to a unitary on twice as many modes.
    Lossy { matrix: MatrixRows },
    Haar { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Joint,
    Marginal,
    Bucket,
    LossDecomposition,
    MimicHolography,
    MimicProduct,
}

impl Analysis {
    pub const DEFAULT: [Analysis; 4] = [Analysis::Joint, Analysis::Marginal, Analysis::Bucket, Analysis::LossDecomposition];
}

/// Why a scenario could not be loaded.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read scenario: {0}")]
    Io(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid physics at {path}: {source}")]
    Physics { path: String, source: Error },
}

impl LoadError {
    fn schema(path: &str, message: impl Into<String>) -> Self {
        Self::Schema { path: path.to_string(), message: message.into() }
    }

    fn physics(path: &str, source: Error) -> Self {
        Self::Physics { path: path.to_string(), source }
    }
}

/// A loaded, validated scenario. Lossy objects are already dilated.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub modes: ModeSpace,
    pub state: TwoPhotonState,
    pub h1: ObjectOperator,
    pub h2: ObjectOperator,
    pub analyses: Vec<Analysis>,
    /// 0-based.
    pub spare_mode: Option<usize>,
}

impl ScenarioFile {
    /// Parses JSON, reporting the offending JSON path on failure.
    pub fn from_json(text: &str) -> Result<Self, LoadError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            LoadError::Schema { path, message: e.into_inner().to_string() }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn load(&self) -> Result<Scenario, LoadError> {
        let ms = &self.modes;
        let modes = ModeSpace::new(
            ms.unprimed,
            ms.primed,
            ms.window_unprimed.unwrap_or(ms.unprimed),
            ms.window_primed.unwrap_or(ms.primed),
        )
        .map_err(|e| LoadError::schema("modes", e.to_string()))?;

        let state = self.load_state(modes)?;
        let h1 = load_object(&self.object1, "object1", Side::Unprimed, modes.unprimed, modes.window_unprimed)?;
        let h2 = load_object(&self.object2, "object2", Side::Primed, modes.primed, modes.window_primed)?;

        let mut analyses = if self.analyses.is_empty() { Analysis::DEFAULT.to_vec() } else { self.analyses.clone() };
        analyses.sort();
        analyses.dedup();

        let spare_mode = match self.spare_mode {
            Some(0) => return Err(LoadError::schema("spare_mode", "mode labels are 1-based")),
            Some(s) => Some(s - 1),
            None => None,
        };
        Ok(Scenario { name: self.name.clone(), modes, state, h1, h2, analyses, spare_mode })
    }

    fn load_state(&self, modes: ModeSpace) -> Result<TwoPhotonState, LoadError> {
        match &self.state {
            StateSection::Pure { amplitudes } => {
                let m = parse_matrix(amplitudes, "state.amplitudes", modes.unprimed, modes.primed)?;
                BiphotonPureState::from_amplitudes(modes, m, Normalization::Tolerant)
                    .map(Into::into)
                    .map_err(|e| LoadError::physics("state.amplitudes", e))
            }
            StateSection::Diagonal { phi } => {
                if modes.unprimed != modes.primed {
                    return Err(LoadError::schema("modes", "diagonal states need unprimed = primed"));
                }
                if phi.len() != modes.unprimed {
                    return Err(LoadError::schema(
                        "state.phi",
                        format!("expected {} entries, got {}", modes.unprimed, phi.len()),
                    ));
                }
                let phi: Vec<C64> = phi.iter().map(|&[re, im]| C64::new(re, im)).collect();
                BiphotonPureState::diagonal_entangled(modes, &phi)
                    .map(Into::into)
                    .map_err(|e| LoadError::physics("state.phi", e))
            }
            StateSection::Ensemble { terms } => {
                let mut out = Vec::with_capacity(terms.len());
                for (k, t) in terms.iter().enumerate() {
                    let unprimed = parse_matrix(
                        &t.unprimed,
                        &format!("state.terms[{k}].unprimed"),
                        modes.unprimed,
                        modes.unprimed,
                    )?;
                    let primed =
                        parse_matrix(&t.primed, &format!("state.terms[{k}].primed"), modes.primed, modes.primed)?;
                    out.push(EnsembleTerm { weight: t.weight, unprimed, primed });
                }
                let ens = ClassicalEnsemble::new(modes, out).map_err(|e| LoadError::physics("state.terms", e))?;
                BiphotonDensityState::from_ensemble(&ens)
                    .map(Into::into)
                    .map_err(|e| LoadError::physics("state.terms", e))
            }
            StateSection::Density { matrix } => {
                let d = modes.pair_dim();
                let m = parse_matrix(matrix, "state.matrix", d, d)?;
                BiphotonDensityState::from_matrix(modes, m)
                    .map(Into::into)
                    .map_err(|e| LoadError::physics("state.matrix", e))
            }
        }
    }
}

fn load_object(
    section: &ObjectSection,
    path: &str,
    side: Side,
    dim: usize,
    window: usize,
) -> Result<ObjectOperator, LoadError> {
    let obj = match section {
        ObjectSection::Identity => ObjectOperator::identity(dim, side),
        ObjectSection::Haar { seed } => ObjectOperator::haar_random(dim, side, *seed),
        ObjectSection::Unitary { matrix } => {
            let p = format!("{path}.matrix");
            let m = parse_matrix(matrix, &p, dim, dim)?;
            ObjectOperator::from_unitary(m, side).map_err(|e| LoadError::physics(&p, e))?
        }
        ObjectSection::Lossy { matrix } => {
            let p = format!("{path}.matrix");
            let m = parse_matrix(matrix, &p, dim, dim)?;
            let spec = TransferSpec::new(m, side).map_err(|e| LoadError::physics(&p, e))?;
            ObjectOperator::dilate(&spec).map_err(|e| LoadError::physics(&p, e))?
        }
    };
    obj.with_window(window).map_err(|e| LoadError::schema(path, e.to_string()))
}

fn parse_matrix(rows: &MatrixRows, path: &str, nrows: usize, ncols: usize) -> Result<CMatrix, LoadError> {
    if rows.len() != nrows {
        return Err(LoadError::schema(path, format!("expected {nrows} rows, got {}", rows.len())));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(LoadError::schema(
                &format!("{path}[{r}]"),
                format!("expected {ncols} columns, got {}", row.len()),
            ));
        }
        for (c, z) in row.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(LoadError::schema(&format!("{path}[{r}][{c}]"), "non-finite number"));
            }
        }
    }
    Ok(CMatrix::from_fn(nrows, ncols, |r, c| {
        let [re, im] = rows[r][c];
        C64::new(re, im)
    }))
}

pub fn matrix_rows(m: &CMatrix) -> MatrixRows {
    m.row_iter().map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect()
}
