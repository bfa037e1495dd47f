//! Results of `run`, in JSON and CSV form.

use serde::{Deserialize, Serialize};

use super::scenario::{Analysis, ModesSection, Scenario};
use crate::detection::{apply_objects, clamp_residue, loss_decomposition, marginal_ignoring_primed, max_vec_diff};
use crate::mimicry::{holography_mimic, lossy_product_mimic, mimic_state};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOutput {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    /// Mode space after dilation and padding.
    pub modes: ModesSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginal: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bucket: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_decomposition: Option<LossSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mimic_holography: Option<HolographySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mimic_product: Option<ProductSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    pub p1: Vec<f64>,
    pub p1_bar: Vec<f64>,
    pub p1_noclick: Vec<f64>,
    pub p0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolographySection {
    pub terms: usize,
    pub effective_terms: usize,
    pub joint: Vec<Vec<f64>>,
    pub max_joint_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductSection {
    pub p0: f64,
    /// 1-based.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spare_mode: Option<usize>,
    pub accessible: bool,
    pub bucket: Vec<f64>,
    pub max_bucket_deviation: f64,
}

fn clamp_vec(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(clamp_residue).collect()
}

fn joint_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| max_vec_diff(x, y)).fold(0.0, f64::max)
}

/// Evaluates the requested analyses. Errors are physics violations such as a
/// mimic requested outside its preconditions.
pub fn run_scenario(sc: &Scenario) -> Result<RunOutput, Error> {
    let evolved = apply_objects(&sc.state, &sc.h1, &sc.h2)?;
    let report = loss_decomposition(&evolved);
    let clamped = report.clamped();
    let mut out = RunOutput {
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: sc.name.clone(),
        modes: ModesSection::from(*evolved.modes()),
        joint: None,
        marginal: None,
        bucket: None,
        loss_decomposition: None,
        mimic_holography: None,
        mimic_product: None,
    };
    for a in &sc.analyses {
        match a {
            Analysis::Joint => out.joint = Some(clamped.joint.clone()),
            Analysis::Marginal => out.marginal = Some(clamp_vec(&marginal_ignoring_primed(&sc.state, &sc.h1)?)),
            Analysis::Bucket => out.bucket = Some(clamped.p1_bar.clone()),
            Analysis::LossDecomposition => {
                out.loss_decomposition = Some(LossSection {
                    p1: clamped.p1.clone(),
                    p1_bar: clamped.p1_bar.clone(),
                    p1_noclick: clamped.p1_noclick.clone(),
                    p0: clamped.p0,
                })
            }
            Analysis::MimicHolography => {
                let ens = holography_mimic(&sc.state.to_density(), &sc.h1)?;
                let mimic = loss_decomposition(&apply_objects(&mimic_state(&ens)?, &sc.h1, &sc.h2)?);
                out.mimic_holography = Some(HolographySection {
                    terms: ens.terms().len(),
                    effective_terms: ens.effective_terms().count(),
                    max_joint_deviation: joint_gap(&report.joint, &mimic.joint),
                    joint: mimic.clamped().joint,
                });
            }
            Analysis::MimicProduct => {
                let pm = lossy_product_mimic(&sc.state.to_density(), &sc.h2, sc.spare_mode)?;
                let mimic = loss_decomposition(&apply_objects(&mimic_state(&pm.ensemble)?, &sc.h1, &sc.h2)?);
                out.mimic_product = Some(ProductSection {
                    p0: clamp_residue(pm.p0),
                    spare_mode: pm.spare_mode.map(|s| s + 1),
                    accessible: pm.ensemble.is_accessible(),
                    max_bucket_deviation: max_vec_diff(&report.p1_bar, &mimic.p1_bar),
                    bucket: clamp_vec(&mimic.p1_bar),
                });
            }
        }
    }
    Ok(out)
}

impl RunOutput {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("output serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Long-format CSV: one row per value, mode indices 1-based, values with
    /// 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut rows = vec!["statistic,q,q_prime,value".to_string()];
        let fmt = |x: f64| format!("{x:.16e}");
        let push_vec = |rows: &mut Vec<String>, name: &str, v: &[f64]| {
            for (q, x) in v.iter().enumerate() {
                rows.push(format!("{name},{},,{}", q + 1, fmt(*x)));
            }
        };
        let push_matrix = |rows: &mut Vec<String>, name: &str, m: &[Vec<f64>]| {
            for (q, row) in m.iter().enumerate() {
                for (r, x) in row.iter().enumerate() {
                    rows.push(format!("{name},{},{},{}", q + 1, r + 1, fmt(*x)));
                }
            }
        };
        if let Some(j) = &self.joint {
            push_matrix(&mut rows, "joint", j);
        }
        if let Some(m) = &self.marginal {
            push_vec(&mut rows, "marginal", m);
        }
        if let Some(b) = &self.bucket {
            push_vec(&mut rows, "bucket", b);
        }
        if let Some(l) = &self.loss_decomposition {
            push_vec(&mut rows, "p1", &l.p1);
            push_vec(&mut rows, "p1_bar", &l.p1_bar);
            push_vec(&mut rows, "p1_noclick", &l.p1_noclick);
            rows.push(format!("p0,,,{}", fmt(l.p0)));
        }
        if let Some(h) = &self.mimic_holography {
            push_matrix(&mut rows, "mimic_holography_joint", &h.joint);
            rows.push(format!("mimic_holography_max_joint_deviation,,,{}", fmt(h.max_joint_deviation)));
        }
        if let Some(p) = &self.mimic_product {
            push_vec(&mut rows, "mimic_product_bucket", &p.bucket);
            rows.push(format!("mimic_product_p0,,,{}", fmt(p.p0)));
            rows.push(format!("mimic_product_max_bucket_deviation,,,{}", fmt(p.max_bucket_deviation)));
        }
        let mut s = rows.join("\n");
        s.push('\n');
        s
    }
}
