//! Sensor measurement model and Gaussian likelihood.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Unit in which a sensor reports the expected signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Power ratio `f(d)` where `10 log10 f(d) = P0 - 10 eta log10(d + eps)`.
    #[default]
    Linear,
    /// The level `P0 - 10 eta log10(d + eps)` itself.
    Decibel,
}

/// Log-distance path loss with additive white Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationModel {
    p0: f64,
    eta: f64,
    epsilon: f64,
    sigma: f64,
    scale: Scale,
    noise_enabled: bool,
}

impl PropagationModel {
    /// Reference level `p0` (dB), path-loss exponent `eta`, distance
    /// regularizer `epsilon` and noise standard deviation `sigma`.
    pub fn new(p0: f64, eta: f64, epsilon: f64, sigma: f64) -> Result<Self> {
        if !p0.is_finite() {
            return Err(Error::domain("p0", p0, "finite values"));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::domain("eta", eta, "(0, inf)"));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::domain("epsilon", epsilon, "(0, inf)"));
        }
        check_sigma(sigma)?;
        Ok(PropagationModel {
            p0,
            eta,
            epsilon,
            sigma,
            scale: Scale::default(),
            noise_enabled: true,
        })
    }

    pub fn with_scale(mut self, scale: Scale) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        self.sigma = sigma;
        Ok(self)
    }

    /// Same model, but [`sample_measurements`](Self::sample_measurements)
    /// returns the noiseless expectation.
    pub fn noiseless(mut self) -> Self {
        self.noise_enabled = false;
        self
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn noise_enabled(&self) -> bool {
        self.noise_enabled
    }

    /// `P0 - 10 eta log10(d + eps)`.
    pub fn level_db(&self, distance: f64) -> f64 {
        self.p0 - 10.0 * self.eta * (distance + self.epsilon).log10()
    }

    /// Expected measurement at distance `distance` in the model's scale.
    pub fn mean_at_distance(&self, distance: f64) -> f64 {
        match self.scale {
            Scale::Decibel => self.level_db(distance),
            Scale::Linear => 10f64.powf(self.level_db(distance) / 10.0),
        }
    }

    pub fn expected_measurement(&self, sensor: &[f64], location: &[f64]) -> f64 {
        self.mean_at_distance(distance(sensor, location))
    }

    /// Noiseless measurements every sensor would report for a target at `k`.
    pub fn hypothesis_vector(&self, sensors: &SensorSet, k: &[f64]) -> MeasurementVector {
        MeasurementVector(
            sensors
                .positions()
                .iter()
                .map(|s| self.expected_measurement(s, k))
                .collect(),
        )
    }

    /// Draws one noisy measurement per sensor for a target at `true_location`.
    pub fn sample_measurements<R: Rng + ?Sized>(
        &self,
        sensors: &SensorSet,
        true_location: &[f64],
        rng: &mut R,
    ) -> MeasurementVector {
        let mut z = self.hypothesis_vector(sensors, true_location);
        if self.noise_enabled {
            for v in &mut z.0 {
                let e: f64 = rng.sample(StandardNormal);
                *v += self.sigma * e;
            }
        }
        z
    }

    /// Gaussian log-likelihood of `z` under hypothesis vector `h`.
    pub fn log_likelihood(&self, z: &MeasurementVector, h: &MeasurementVector) -> Result<f64> {
        if z.len() != h.len() {
            return Err(Error::LengthMismatch {
                expected: z.len(),
                actual: h.len(),
            });
        }
        let var = self.sigma * self.sigma;
        let sq = squared_distance(z.values(), h.values());
        let m = z.len() as f64;
        Ok(-sq / (2.0 * var) - 0.5 * m * (2.0 * std::f64::consts::PI * var).ln())
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::domain("sigma", sigma, "(0, inf)"));
    }
    Ok(())
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Ordered, non-empty set of active sensor positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSet(Vec<Point>);

impl SensorSet {
    pub fn new(positions: Vec<Point>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidPolicy("a sensor set cannot be empty".into()));
        }
        let dims = positions[0].len();
        if let Some(bad) = positions.iter().find(|p| p.len() != dims) {
            return Err(Error::LengthMismatch {
                expected: dims,
                actual: bad.len(),
            });
        }
        Ok(SensorSet(positions))
    }

    pub fn positions(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One measurement per sensor, index-aligned with the generating [`SensorSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementVector(pub Vec<f64>);

impl MeasurementVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
