//! JSON configuration for ad-hoc `solve` invocations.

use serde::Deserialize;
use std::path::Path;

use crate::basis::BasisSpec;
use crate::bundling::SortKey;
use crate::error::{Result, SgbmError};
use crate::grid::TimeGrid;
use crate::problems;
use crate::solver::{BsdeProblem, SchemeConfig};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub scheme: SchemeSection,
    pub regression: RegressionSection,
    pub bundling: BundlingSection,
    pub guard: GuardSection,
    pub mc: McSection,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum ModelSection {
    /// Sine benchmark on Brownian motion.
    Example1,
    /// 5-asset DAX arithmetic basket put (GBM Euler transitions).
    ArithmeticBasketPut,
    /// q-asset geometric basket put (exact GBM transitions).
    GeometricBasketPut { q: usize },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub theta1: f64,
    pub theta2: f64,
    pub picard: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSection {
    pub basis_family: BasisFamily,
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    Monomials,
    WeightedSumPowers,
    GeometricMeanPowers,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundlingSection {
    #[serde(rename = "B")]
    pub b: usize,
    pub sort_key: SortKeyName,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SortKeyName {
    State,
    WeightedSum,
    GeometricMean,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuardSection {
    /// Coefficient bound; the string "inf" means no rejection.
    #[serde(rename = "L", deserialize_with = "de_bound")]
    pub l: f64,
}

fn de_bound<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Number(v) => Ok(v),
        Raw::Text(s) if s == "inf" => Ok(f64::INFINITY),
        Raw::Text(s) => Err(serde::de::Error::custom(format!(
            "guard L must be a number or \"inf\", got \"{s}\""
        ))),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
}

impl SolveConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| SgbmError::Config(format!("invalid config: {e}")))
    }

    /// Assemble the problem and scheme described by the config.
    pub fn build(&self) -> Result<(BsdeProblem, SchemeConfig)> {
        let grid = TimeGrid::uniform(self.grid.t, self.grid.n);
        let problem = match &self.model {
            ModelSection::Example1 => problems::example1(grid),
            ModelSection::ArithmeticBasketPut => problems::arithmetic_basket(grid)?,
            ModelSection::GeometricBasketPut { q } => problems::geometric_basket(grid, *q)?,
        };
        let state_dim = problem.model.state_dim;
        let basis = match self.regression.basis_family {
            BasisFamily::Monomials => BasisSpec::Monomials {
                count: self.regression.q,
            },
            BasisFamily::WeightedSumPowers => {
                let weights = self.regression.weights.clone().ok_or_else(|| {
                    SgbmError::Config("weighted_sum_powers basis requires weights".into())
                })?;
                BasisSpec::WeightedSumPowers {
                    count: self.regression.q,
                    weights,
                }
            }
            BasisFamily::GeometricMeanPowers => BasisSpec::GeometricMeanPowers {
                count: self.regression.q,
                dim: state_dim,
            },
        };
        let sort_key = match self.bundling.sort_key {
            SortKeyName::State => SortKey::Component(0),
            SortKeyName::WeightedSum => {
                let weights = self
                    .regression
                    .weights
                    .clone()
                    .ok_or_else(|| SgbmError::Config("weighted_sum sort key requires weights".into()))?;
                SortKey::WeightedSum(weights)
            }
            SortKeyName::GeometricMean => SortKey::GeometricMean,
        };
        let config = SchemeConfig {
            theta1: self.scheme.theta1,
            theta2: self.scheme.theta2,
            picard_iterations: self.scheme.picard,
            bundles: self.bundling.b,
            coeff_bound: self.guard.l,
            basis,
            sort_key,
            force_beta: false,
        };
        Ok((problem, config))
    }
}
