//! Experiment configuration schema and validation.

use crate::error::{Error, Result};
use crate::fieldsim::ObservableKind;
use crate::kernels::StepLaw;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Exact variance against the Monte-Carlo sample variance over the grid.
    VarianceSweep,
    /// Gaussian-distance decay of the standardized observable over the grid.
    CltRate,
    /// Exact symmetric-sampling variance against its regime prediction.
    SymmetricRegimes,
    /// Deterministic kernel identities over the grid range.
    KernelChecks,
}

impl ExperimentKind {
    pub fn stem(self) -> &'static str {
        match self {
            ExperimentKind::VarianceSweep => "variance-sweep",
            ExperimentKind::CltRate => "clt-rate",
            ExperimentKind::SymmetricRegimes => "symmetric-regimes",
            ExperimentKind::KernelChecks => "kernel-checks",
        }
    }
}

/// One experiment: what to run, on which grid, with which parameters.
///
/// `master_seed` is mandatory; there are no wall-clock defaults anywhere, so
/// a config file pins its outputs byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableKind>,
    pub n_grid: Vec<u64>,
    pub lambda: f64,
    pub p_up: f64,
    #[serde(default)]
    pub replicates: u64,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Standardize Monte-Carlo draws by their sample moments instead of the
    /// exact mean and variance.
    #[serde(default)]
    pub empirical_standardization: bool,
}

fn config_err(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Config {
        field,
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn law(&self) -> Result<StepLaw> {
        StepLaw::new(self.p_up).map_err(|_| {
            config_err("p_up", format!("must lie strictly inside (0,1), got {}", self.p_up))
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(config_err("n_grid", "must be nonempty"));
        }
        if self.n_grid[0] == 0 {
            return Err(config_err("n_grid", "horizons must be at least 1"));
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(config_err("n_grid", "must be strictly increasing"));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(config_err("lambda", "must be positive and finite"));
        }
        self.law()?;

        let needs_observable = !matches!(self.kind, ExperimentKind::KernelChecks);
        if needs_observable && self.observable.is_none() {
            return Err(config_err("observable", "required for this experiment kind"));
        }
        match self.kind {
            ExperimentKind::CltRate => {
                if self.replicates < 100 {
                    return Err(config_err("replicates", "clt-rate needs at least 100"));
                }
                if self.n_grid.len() < 3 {
                    return Err(config_err("n_grid", "clt-rate needs at least 3 horizons"));
                }
                if matches!(self.observable, Some(ObservableKind::WalkPairSum { .. })) {
                    return Err(config_err(
                        "observable",
                        "clt-rate applies to W, D, or Y observables",
                    ));
                }
            }
            ExperimentKind::VarianceSweep => {
                if self.replicates < 2 {
                    return Err(config_err("replicates", "variance-sweep needs at least 2"));
                }
                if matches!(self.observable, Some(ObservableKind::WalkPairSum { .. })) {
                    return Err(config_err(
                        "observable",
                        "variance-sweep needs an exact variance formula (W, D, or Y)",
                    ));
                }
            }
            ExperimentKind::SymmetricRegimes => {
                if self.p_up != 0.5 {
                    return Err(config_err("p_up", "symmetric-regimes requires p_up = 0.5"));
                }
                match &self.observable {
                    Some(ObservableKind::PathSampled { phi }) => {
                        if phi.is_constant() {
                            return Err(config_err("observable", "phi must be non-constant"));
                        }
                    }
                    _ => {
                        return Err(config_err(
                            "observable",
                            "symmetric-regimes applies to the Y observable",
                        ))
                    }
                }
                if !self.n_grid.windows(2).all(|w| w[1] == 2 * w[0]) {
                    return Err(config_err(
                        "n_grid",
                        "symmetric-regimes needs a doubling grid",
                    ));
                }
            }
            ExperimentKind::KernelChecks => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_json() -> String {
        r#"{
            "kind": "clt-rate",
            "observable": {"type": "W", "sites": [0]},
            "n_grid": [64, 128, 256],
            "lambda": 1.0,
            "p_up": 0.5,
            "replicates": 500,
            "master_seed": 7
        }"#
        .to_string()
    }

    #[test]
    fn round_trip() {
        let config = ExperimentConfig::from_json(&base_json()).unwrap();
        let text = serde_json::to_string(&config).unwrap();
        let again = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(again.n_grid, vec![64, 128, 256]);
        assert_eq!(again.kind, ExperimentKind::CltRate);
    }

    #[test]
    fn empty_grid_is_a_schema_error() {
        let bad = base_json().replace("[64, 128, 256]", "[]");
        let err = ExperimentConfig::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("n_grid"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = base_json().replace("\"master_seed\": 7", "\"master_seed\": 7, \"bogus\": 1");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn missing_seed_is_rejected() {
        let bad = base_json().replace("\"master_seed\": 7", "\"empirical_standardization\": false");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn clt_rate_needs_enough_replicates() {
        let bad = base_json().replace("\"replicates\": 500", "\"replicates\": 99");
        let err = ExperimentConfig::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("replicates"), "{err}");
    }

    #[test]
    fn symmetric_regimes_constraints() {
        let good = r#"{
            "kind": "symmetric-regimes",
            "observable": {"type": "Y", "phi": [0.0, 1.0]},
            "n_grid": [256, 512, 1024],
            "lambda": 1.0,
            "p_up": 0.5,
            "master_seed": 1
        }"#;
        assert!(ExperimentConfig::from_json(good).is_ok());
        let drifted = good.replace("0.5", "0.6");
        let err = ExperimentConfig::from_json(&drifted).unwrap_err();
        assert!(err.to_string().contains("p_up"));
        let not_doubling = good.replace("[256, 512, 1024]", "[256, 512, 768]");
        assert!(ExperimentConfig::from_json(&not_doubling).is_err());
    }
}
