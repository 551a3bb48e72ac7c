//! JSON experiment configuration. Every key is optional; missing keys take
//! the defaults below.

use std::path::{Path, PathBuf};

use overlap_search::placement::EAConfig;
use overlap_search::search::{SearchOptions, SensorPolicy};
use overlap_search::{PropagationModel, Scale};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Path-loss model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub p0: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub sigma: f64,
    #[serde(default)]
    pub scale: Scale,
}

impl ModelConfig {
    /// P0 = 20 dB, eta = 1, eps = 10, sigma = 1/sqrt(2).
    pub fn reference() -> Self {
        ModelConfig {
            p0: 20.0,
            eta: 1.0,
            epsilon: 10.0,
            sigma: 0.5f64.sqrt(),
            scale: Scale::Linear,
        }
    }

    /// The deep-tree study: sigma = 0.2.
    pub fn deep_tree() -> Self {
        ModelConfig {
            sigma: 0.2,
            ..Self::reference()
        }
    }

    /// The placement study: sigma = 1, eps = 1e-4.
    pub fn placement() -> Self {
        ModelConfig {
            sigma: 1.0,
            epsilon: 1e-4,
            ..Self::reference()
        }
    }

    pub fn build(&self) -> CliResult<PropagationModel> {
        Ok(
            PropagationModel::new(self.p0, self.eta, self.epsilon, self.sigma)?
                .with_scale(self.scale),
        )
    }
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| tidy(start + i as f64 * step)).collect()
}

/// Drops accumulated binary noise so grid values print as typed.
pub(crate) fn tidy(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorVsAlpha {
    pub model: ModelConfig,
    pub length: f64,
    pub sizes: Vec<usize>,
    pub alphas: Vec<f64>,
    /// Sensor positions as fractions of the region length.
    pub sensor_fractions: [f64; 2],
    pub trials: u64,
}

impl Default for ErrorVsAlpha {
    fn default() -> Self {
        ErrorVsAlpha {
            model: ModelConfig::reference(),
            length: 500.0,
            sizes: vec![8, 16, 32, 64, 128],
            alphas: grid(0.0, 0.5, 0.025),
            sensor_fractions: [0.25, 0.75],
            trials: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthVsAlpha {
    pub n0: usize,
    pub n_beta: usize,
    pub alphas: Vec<f64>,
}

impl Default for DepthVsAlpha {
    fn default() -> Self {
        DepthVsAlpha {
            n0: 100_000,
            n_beta: 1,
            alphas: grid(0.0, 0.245, 0.005),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorVsBeta {
    pub model: ModelConfig,
    pub length: f64,
    pub n0: usize,
    pub n_beta: usize,
    pub betas: Vec<usize>,
    /// Resolution of the scan for an alpha with the requested depth.
    pub alpha_step: f64,
    /// Adds the full-simulation column.
    pub simulate: bool,
    pub trials: u64,
}

impl Default for ErrorVsBeta {
    fn default() -> Self {
        ErrorVsBeta {
            model: ModelConfig::deep_tree(),
            length: 500.0,
            n0: 1 << 14,
            n_beta: 1 << 7,
            betas: (14..=33).collect(),
            alpha_step: 1e-4,
            simulate: false,
            trials: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizePlacement {
    pub model: ModelConfig,
    pub length: f64,
    pub alphas: Vec<f64>,
    /// Grid for the error curve under the alpha-coupled heuristic.
    pub coupled_alphas: Vec<f64>,
    pub ea: EAConfig,
}

impl Default for OptimizePlacement {
    fn default() -> Self {
        OptimizePlacement {
            model: ModelConfig::placement(),
            length: 500.0,
            alphas: grid(0.05, 0.45, 0.05),
            coupled_alphas: grid(0.0, 0.5, 0.01),
            ea: EAConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulate {
    pub model: ModelConfig,
    /// Points per axis; one entry per dimension.
    pub counts: Vec<usize>,
    /// Side lengths; one entry per dimension.
    pub lengths: Vec<f64>,
    pub alpha: f64,
    pub beta: usize,
    pub policy: SensorPolicy,
    pub options: SearchOptions,
    pub trials: u64,
    /// Fixed true location; uniform over the grid when absent.
    pub target: Option<Vec<f64>>,
}

impl Default for Simulate {
    fn default() -> Self {
        Simulate {
            model: ModelConfig::reference(),
            counts: vec![128],
            lengths: vec![500.0],
            alpha: 0.1,
            beta: 5,
            policy: SensorPolicy::fixed_fraction(0.25),
            options: SearchOptions::default(),
            trials: 100_000,
            target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Validate {
    pub model: ModelConfig,
    pub length: f64,
    pub trials: u64,
    pub derivative_step: f64,
    pub derivative_tolerance: f64,
    pub continuous_tolerance: f64,
    pub depth_tolerance: usize,
}

impl Default for Validate {
    fn default() -> Self {
        Validate {
            model: ModelConfig::reference(),
            length: 500.0,
            trials: 1_000_000,
            derivative_step: 1e-4,
            derivative_tolerance: 1e-3,
            continuous_tolerance: 0.01,
            depth_tolerance: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub error_vs_alpha: ErrorVsAlpha,
    pub depth_vs_alpha: DepthVsAlpha,
    pub error_vs_beta: ErrorVsBeta,
    pub optimize_placement: OptimizePlacement,
    pub simulate: Simulate,
    pub validate: Validate,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 2024,
            output_dir: PathBuf::from("out"),
            error_vs_alpha: ErrorVsAlpha::default(),
            depth_vs_alpha: DepthVsAlpha::default(),
            error_vs_beta: ErrorVsBeta::default(),
            optimize_placement: OptimizePlacement::default(),
            simulate: Simulate::default(),
            validate: Validate::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn check(&self) -> CliResult<()> {
        let nonempty = |name: &str, len: usize| {
            if len == 0 {
                Err(CliError::Config(format!("{name} must not be empty")))
            } else {
                Ok(())
            }
        };
        nonempty("error_vs_alpha.sizes", self.error_vs_alpha.sizes.len())?;
        nonempty("error_vs_alpha.alphas", self.error_vs_alpha.alphas.len())?;
        nonempty("depth_vs_alpha.alphas", self.depth_vs_alpha.alphas.len())?;
        nonempty("error_vs_beta.betas", self.error_vs_beta.betas.len())?;
        nonempty(
            "optimize_placement.alphas",
            self.optimize_placement.alphas.len(),
        )?;
        for (name, trials) in [
            ("error_vs_alpha.trials", self.error_vs_alpha.trials),
            ("error_vs_beta.trials", self.error_vs_beta.trials),
            ("simulate.trials", self.simulate.trials),
            ("validate.trials", self.validate.trials),
        ] {
            if trials == 0 {
                return Err(CliError::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.error_vs_beta.alpha_step > 0.0 && self.error_vs_beta.alpha_step < 0.25) {
            return Err(CliError::Config(
                "error_vs_beta.alpha_step must lie in (0, 0.25)".into(),
            ));
        }
        for model in [
            &self.error_vs_alpha.model,
            &self.error_vs_beta.model,
            &self.optimize_placement.model,
            &self.simulate.model,
            &self.validate.model,
        ] {
            model.build()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        c.check().unwrap();
        assert_eq!(c.error_vs_alpha.alphas.len(), 21);
        assert_eq!(*c.error_vs_alpha.alphas.last().unwrap(), 0.5);
        assert_eq!(c.depth_vs_alpha.alphas.len(), 50);
        assert_eq!(c.optimize_placement.alphas.len(), 9);
    }

    #[test]
    fn partial_sections_override_single_keys() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"seed": 5, "simulate": {"alpha": 0.2, "policy": {"placement": "alpha_coupled", "sensors_per_step": 2}}}"#,
        )
        .unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.simulate.alpha, 0.2);
        assert_eq!(c.simulate.beta, 5);
        assert_eq!(c.simulate.policy, SensorPolicy::alpha_coupled());
    }

    #[test]
    fn rejects_bad_values() {
        let bad: ExperimentConfig = serde_json::from_str(
            r#"{"validate": {"model": {"p0": 20, "eta": 1, "epsilon": 10, "sigma": 0}}}"#,
        )
        .unwrap();
        assert!(bad.check().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sede": 1}"#).is_err());
        let empty: ExperimentConfig =
            serde_json::from_str(r#"{"error_vs_beta": {"betas": []}}"#).unwrap();
        assert!(empty.check().is_err());
    }
}
