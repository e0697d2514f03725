//! JSON model files.
//!
//! ```json
//! { "theta": 2, "colors": ["red", "blue"], "nu": [1, 1], "R": [[1, 0], [0, 1]] }
//! ```
//!
//! Weights may be plain JSON numbers or `{"num": int, "den": int}` pairs. When
//! every weight is an integer or such a pair the file is *exact* and can be
//! loaded as a rational model. `nu` may be unnormalized; the loader rescales it
//! and keeps the original total.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{ColorSpace, FiniteMeasure, ReinforcementKernel, UrnModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Ratio { num: i64, den: i64 },
    Number(serde_json::Number),
}

impl Weight {
    pub fn is_exact(&self) -> bool {
        match self {
            Weight::Ratio { .. } => true,
            Weight::Number(n) => n.is_i64() || n.is_u64(),
        }
    }

    pub fn to_scalar<S: Scalar>(&self) -> Result<S> {
        let bad = || Error::ModelFile(format!("cannot represent weight {self:?}"));
        match self {
            Weight::Ratio { num, den } => S::from_ratio(*num, *den).ok_or_else(bad),
            Weight::Number(n) => {
                if let Some(i) = n.as_i64() {
                    S::from_i64(i).ok_or_else(bad)
                } else if let Some(u) = n.as_u64() {
                    S::from_u64(u).ok_or_else(bad)
                } else {
                    n.as_f64().and_then(S::from_f64).ok_or_else(bad)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub theta: Weight,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<Vec<String>>,
    pub nu: Vec<Weight>,
    #[serde(rename = "R")]
    pub kernel: Vec<Vec<Weight>>,
}

impl ModelFile {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ModelFile(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// `true` when every weight is an integer or a `num/den` pair.
    pub fn is_exact(&self) -> bool {
        self.theta.is_exact()
            && self.nu.iter().all(Weight::is_exact)
            && self.kernel.iter().flatten().all(Weight::is_exact)
    }

    /// Total of `nu` as written in the file.
    pub fn nu_total(&self) -> Result<f64> {
        self.nu
            .iter()
            .map(|w| w.to_scalar::<f64>())
            .sum::<Result<f64>>()
    }

    /// Builds the model, normalizing `nu`.
    pub fn model<S: Scalar>(&self) -> Result<UrnModel<S>> {
        let space = match &self.colors {
            Some(labels) => ColorSpace::new(labels.iter().cloned())?,
            None => ColorSpace::numbered(self.nu.len())?,
        };
        let nu = self
            .nu
            .iter()
            .map(Weight::to_scalar)
            .collect::<Result<Vec<S>>>()?;
        let rows = self
            .kernel
            .iter()
            .map(|row| {
                row.iter()
                    .map(Weight::to_scalar)
                    .collect::<Result<Vec<S>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        UrnModel::from_unnormalized(
            self.theta.to_scalar()?,
            space,
            FiniteMeasure::new(nu)?,
            ReinforcementKernel::new(rows)?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn loads_and_normalizes() {
        let file = ModelFile::from_json_str(
            r#"{"theta": 2, "colors": ["a", "b"], "nu": [1, 3], "R": [[1, 0], [0, 1]]}"#,
        )
        .unwrap();
        assert!(file.is_exact());
        assert_eq!(file.nu_total().unwrap(), 4.0);
        let m: UrnModel<f64> = file.model().unwrap();
        assert_eq!(m.nu().weights(), &[0.25, 0.75]);
        let exact: UrnModel<Rational> = file.model().unwrap();
        assert_eq!(exact.nu().weights()[0], Rational::from_ratio(1, 4).unwrap());
    }

    #[test]
    fn rational_pairs_and_floats() {
        let file = ModelFile::from_json_str(
            r#"{"theta": {"num": 1, "den": 2}, "nu": [{"num": 1, "den": 3}, {"num": 2, "den": 3}],
                "R": [[1, 0], [0, 1]]}"#,
        )
        .unwrap();
        assert!(file.is_exact());
        let m: UrnModel<Rational> = file.model().unwrap();
        assert_eq!(*m.theta(), Rational::from_ratio(1, 2).unwrap());
        assert_eq!(m.space().labels(), &["1", "2"]);

        let file =
            ModelFile::from_json_str(r#"{"theta": 1.5, "nu": [0.5, 0.5], "R": [[1, 0], [0, 1]]}"#)
                .unwrap();
        assert!(!file.is_exact());
        assert_eq!(*file.model::<f64>().unwrap().theta(), 1.5);
    }

    #[test]
    fn malformed_files_are_reported() {
        assert!(matches!(
            ModelFile::from_json_str(r#"{"theta": 1, "nu": [1]}"#),
            Err(Error::ModelFile(_))
        ));
        let zero_den =
            ModelFile::from_json_str(r#"{"theta": 1, "nu": [{"num": 1, "den": 0}], "R": [[1]]}"#)
                .unwrap();
        assert!(matches!(
            zero_den.model::<Rational>(),
            Err(Error::ModelFile(_))
        ));
        let ragged =
            ModelFile::from_json_str(r#"{"theta": 1, "nu": [1, 1], "R": [[1, 0], [1]]}"#).unwrap();
        assert!(matches!(
            ragged.model::<f64>(),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
