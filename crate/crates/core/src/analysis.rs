//! Per-step and end-to-end error probabilities.
//!
//! With a symmetric sensor pair the maximum-likelihood decision between the
//! two halves reduces to a hyperplane test, so a point `k` in the exclusive
//! part of one half is lost with probability `Q(d_k / sigma)`, where `d_k` is
//! half the distance between its hypothesis vector and its mirror image's.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    check_alpha, retained_count, symmetric_partner, GridRegion, Membership, Partition,
};
use crate::quadrature::{Interval, QuadratureSpec};
use crate::rng::trial_rng;
use crate::search::{HypothesisTable, SearchOptions};
use crate::signal::{distance, PropagationModel, SensorSet};
use crate::stats::BinomialEstimate;

/// Standard normal tail probability `P(N(0, 1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Probability that noise pushes a measurement across a decision boundary
/// `half_gap` away from its mean.
fn crossing_probability(model: &PropagationModel, half_gap: f64) -> f64 {
    if model.noise_enabled() {
        q_function(half_gap / model.sigma())
    } else if half_gap > 0.0 {
        0.0
    } else {
        // Indistinguishable hypotheses: the decision is a coin flip at best.
        0.5
    }
}

/// Half the distance between the hypothesis vectors of `a` and `b`.
pub fn half_gap(model: &PropagationModel, sensors: &SensorSet, a: &[f64], b: &[f64]) -> f64 {
    let ha = model.hypothesis_vector(sensors, a);
    let hb = model.hypothesis_vector(sensors, b);
    0.5 * distance(ha.values(), hb.values())
}

/// Method labels attached to a [`StepErrorReport`].
pub const CLOSED_FORM: &str = "closed_form";
pub const MONTE_CARLO: &str = "monte_carlo";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepErrorReport {
    pub analytic: Option<f64>,
    pub mc_estimate: Option<f64>,
    pub mc_half_width: f64,
    pub trials: u64,
    pub methods: Vec<String>,
}

impl StepErrorReport {
    /// Whether the closed form lies within the Monte Carlo half-width.
    pub fn agrees(&self) -> Option<bool> {
        Some((self.analytic? - self.mc_estimate?).abs() <= self.mc_half_width)
    }
}

/// Checks that `sensors` are one pair mirrored about the centre of `region`
/// along the split axis.
pub fn check_symmetric_pair(
    region: &GridRegion,
    split_dim: usize,
    sensors: &SensorSet,
) -> Result<()> {
    if sensors.len() != 2 {
        return Err(Error::AsymmetricSensors(format!(
            "expected a pair, got {} sensors",
            sensors.len()
        )));
    }
    let p = sensors.positions();
    if p[0].len() != region.dims() {
        return Err(Error::LengthMismatch {
            expected: region.dims(),
            actual: p[0].len(),
        });
    }
    let mirror = symmetric_partner(&p[0], region, split_dim);
    let scale = region
        .axes()
        .iter()
        .map(|a| a.upper().abs().max(a.lower().abs()))
        .fold(1.0, f64::max);
    if distance(&mirror, &p[1]) > 1e-9 * scale {
        return Err(Error::AsymmetricSensors(format!(
            "{:?} mirrors to {:?}, not {:?}",
            p[0], mirror, p[1]
        )));
    }
    Ok(())
}

/// Closed-form step error for a symmetric sensor pair and a uniform prior
/// over `region`: `(2/|H|) sum_{k exclusive to the first half} Q(d_k/sigma)`.
pub fn step_error_symmetric_discrete(
    region: &GridRegion,
    partition: &Partition,
    model: &PropagationModel,
    sensors: &SensorSet,
) -> Result<f64> {
    let dim = partition.split_dim();
    check_symmetric_pair(region, dim, sensors)?;
    let total: f64 = (0..region.len())
        .filter(|&i| partition.membership(region.index_along(i, dim)) == Membership::FirstOnly)
        .map(|i| {
            let k = region.point(i);
            let partner = region.point(region.partner_index(i, dim));
            crossing_probability(model, half_gap(model, sensors, &k, &partner))
        })
        // An empty f64 sum is -0.0.
        .fold(0.0, |acc, term| acc + term);
    Ok(2.0 * total / region.len() as f64)
}

/// Monte Carlo step error with default selection options.
pub fn step_error_monte_carlo(
    region: &GridRegion,
    partition: &Partition,
    model: &PropagationModel,
    sensors: &SensorSet,
    trials: u64,
    master_seed: u64,
) -> Result<StepErrorReport> {
    step_error_monte_carlo_with(
        region,
        partition,
        model,
        sensors,
        trials,
        master_seed,
        SearchOptions::default(),
    )
}

/// Draws the target uniformly over `region`, samples measurements and counts
/// how often the selected half loses it. Works for any sensor layout.
pub fn step_error_monte_carlo_with(
    region: &GridRegion,
    partition: &Partition,
    model: &PropagationModel,
    sensors: &SensorSet,
    trials: u64,
    master_seed: u64,
    options: SearchOptions,
) -> Result<StepErrorReport> {
    if trials == 0 {
        return Err(Error::domain("trials", 0.0, "[1, inf)"));
    }
    if let Some(p) = sensors
        .positions()
        .iter()
        .find(|p| p.len() != region.dims())
    {
        return Err(Error::LengthMismatch {
            expected: region.dims(),
            actual: p.len(),
        });
    }
    let table = HypothesisTable::build(model, sensors, region, partition);
    let errors: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(master_seed, t);
            let index = rng.random_range(0..table.len());
            let membership = table.membership(index);
            if membership == Membership::Shared {
                return 0;
            }
            let z = model.sample_measurements(sensors, &region.point(index), &mut rng);
            let selection = table.decide(z.values(), options);
            u64::from(!membership.in_side(selection.side))
        })
        .sum();
    let estimate = BinomialEstimate::from_counts(errors, trials);
    Ok(StepErrorReport {
        analytic: None,
        mc_estimate: Some(estimate.rate),
        mc_half_width: estimate.half_width,
        trials,
        methods: vec![MONTE_CARLO.to_string()],
    })
}

/// Monte Carlo estimate plus the closed form when the sensors are symmetric.
pub fn step_error_report(
    region: &GridRegion,
    partition: &Partition,
    model: &PropagationModel,
    sensors: &SensorSet,
    trials: u64,
    master_seed: u64,
) -> Result<StepErrorReport> {
    let mut report =
        step_error_monte_carlo(region, partition, model, sensors, trials, master_seed)?;
    match step_error_symmetric_discrete(region, partition, model, sensors) {
        Ok(v) => {
            report.analytic = Some(v);
            report.methods.insert(0, CLOSED_FORM.to_string());
        }
        Err(Error::AsymmetricSensors(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(report)
}

fn check_length(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(name, value, "(0, inf)"))
    }
}

/// `(2/L) int_0^upper Q(d(x)/sigma) dx` on a segment `[0, L]` with sensors at
/// `s` and `L - s`, where `d(x)` is the half gap between `x` and `L - x`.
/// `upper = L(1/2 - alpha)` gives the continuous step error; other upper
/// limits (including ones past `L/2`) are allowed for finite differences.
pub fn exclusive_region_integral_1d(
    length: f64,
    upper: f64,
    model: &PropagationModel,
    sensor_s: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_length("length", length)?;
    if !(0.0..=length).contains(&sensor_s) {
        return Err(Error::domain("sensor_s", sensor_s, "[0, length]"));
    }
    if !(0.0..=length).contains(&upper) {
        return Err(Error::domain("upper", upper, "[0, length]"));
    }
    let sensors = SensorSet::new(vec![vec![sensor_s], vec![length - sensor_s]])?;
    let interval = Interval::new(0.0, upper).with_breakpoints([sensor_s, length - sensor_s]);
    let integral = quad.integrate(&interval, |x| {
        crossing_probability(model, half_gap(model, &sensors, &[x], &[length - x]))
    })?;
    Ok(2.0 * integral / length)
}

/// Continuous-limit step error on `[0, L]` with fixed sensors `{s, L - s}`.
pub fn step_error_continuous_1d(
    length: f64,
    alpha: f64,
    model: &PropagationModel,
    sensor_s: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_alpha(alpha)?;
    exclusive_region_integral_1d(length, length * (0.5 - alpha), model, sensor_s, quad)
}

/// Continuous-limit step error on `[0, lx] x [0, ly]`, split along the
/// longer side (x on ties). `sensors` must be mirrored about that side's
/// centre line.
pub fn step_error_continuous_2d(
    lx: f64,
    ly: f64,
    alpha: f64,
    model: &PropagationModel,
    sensors: &SensorSet,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_length("lx", lx)?;
    check_length("ly", ly)?;
    let dim = if ly > lx { 1 } else { 0 };
    let lengths = [lx, ly];
    let split_length = lengths[dim];
    // Any grid with these extents has the same mirror map.
    let region = GridRegion::rectangle(1, lx, 1, ly)?;
    check_symmetric_pair(&region, dim, sensors)?;

    let p = sensors.positions();
    let along = |axis: usize| [p[0][axis], p[1][axis]];
    let mut ranges = [
        Interval::new(0.0, lx).with_breakpoints(along(0)),
        Interval::new(0.0, ly).with_breakpoints(along(1)),
    ];
    ranges[dim].upper = split_length * (0.5 - alpha);
    ranges[dim]
        .breakpoints
        .extend(along(dim).map(|s| split_length - s));

    let integral = quad.integrate_2d(&ranges[0], &ranges[1], |x, y| {
        let k = [x, y];
        let mut mirror = k;
        mirror[dim] = split_length - k[dim];
        crossing_probability(model, half_gap(model, sensors, &k, &mirror))
    })?;
    Ok(2.0 * integral / (lx * ly))
}

/// `d/d alpha` of the continuous 1D step error:
/// `-2 Q(d(L(1/2 - alpha)) / sigma)`.
pub fn error_derivative_alpha(
    length: f64,
    alpha: f64,
    model: &PropagationModel,
    sensor_s: f64,
) -> Result<f64> {
    if !(0.0..0.5).contains(&alpha) {
        return Err(Error::domain("alpha", alpha, "[0, 0.5)"));
    }
    check_length("length", length)?;
    let sensors = SensorSet::new(vec![vec![sensor_s], vec![length - sensor_s]])?;
    let x = length * (0.5 - alpha);
    Ok(-2.0 * crossing_probability(model, half_gap(model, &sensors, &[x], &[length - x])))
}

/// Probability that at least one of independent steps fails.
pub fn end_to_end_error(step_errors: &[f64]) -> Result<f64> {
    let mut log_survival = 0.0;
    for &p in step_errors {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain("step error", p, "[0, 1]"));
        }
        log_survival += (-p).ln_1p();
    }
    Ok(-log_survival.exp_m1())
}

fn check_depth_args(n0: usize, n_beta: usize, alpha: f64) -> Result<()> {
    if n_beta < 1 || n_beta > n0 {
        return Err(Error::domain("n_beta", n_beta as f64, "[1, n0]"));
    }
    if !(0.0..0.25).contains(&alpha) {
        return Err(Error::domain("alpha", alpha, "[0, 0.25)"));
    }
    Ok(())
}

/// Depth estimate `round(ln(n_beta / n0) / ln(1/2 + alpha))`, ignoring the
/// rounding of point counts.
pub fn tree_depth_approx(n0: usize, n_beta: usize, alpha: f64) -> Result<usize> {
    check_depth_args(n0, n_beta, alpha)?;
    let ratio = ((n_beta as f64).ln() - (n0 as f64).ln()) / (0.5 + alpha).ln();
    Ok(ratio.round() as usize)
}

/// Number of splits until at most `n_beta` points remain along the axis.
pub fn tree_depth_exact(n0: usize, n_beta: usize, alpha: f64) -> Result<usize> {
    check_depth_args(n0, n_beta, alpha)?;
    let (mut n, mut depth) = (n0, 0);
    while n > n_beta {
        n = retained_count(n, alpha)?;
        depth += 1;
    }
    Ok(depth)
}

/// Point counts along the axis after each split, starting from `n0`.
pub fn count_schedule(n0: usize, n_beta: usize, alpha: f64) -> Result<Vec<usize>> {
    check_depth_args(n0, n_beta, alpha)?;
    let mut counts = vec![n0];
    while *counts.last().unwrap() > n_beta {
        counts.push(retained_count(*counts.last().unwrap(), alpha)?);
    }
    Ok(counts)
}
