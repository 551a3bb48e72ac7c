//! Overlapping binary search driven by noisy sensor measurements.
//!
//! Each step splits the current region into two overlapping halves, activates
//! a sensor pair, finds the maximum-likelihood grid point over the whole
//! current region and keeps the half selected from it.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{split, GridRegion, Membership, Partition, Point, Side};
use crate::placement::uniform_heuristic_placement;
use crate::rng::trial_rng;
use crate::signal::{squared_distance, MeasurementVector, PropagationModel, SensorSet};
use crate::stats::BinomialEstimate;

/// Where the sensors of each step go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Symmetric pair at `f L` and `(1 - f) L` along the split axis.
    FixedFraction(f64),
    /// Symmetric pair at `s = (L/2)(1/2 - alpha)` and `L - s`.
    AlphaCoupled,
    /// Like [`Placement::AlphaCoupled`] with `s` snapped down to a multiple of
    /// half a grid step: `s = floor((1/2 - alpha) n) * step / 2`.
    AlphaCoupledSnapped,
    /// Absolute positions for every step. Not necessarily symmetric.
    Explicit(Vec<Vec<Point>>),
}

/// Offsets are measured in region-local coordinates along the split axis;
/// symmetric placements put the other coordinates at the region centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorPolicy {
    pub placement: Placement,
    pub sensors_per_step: usize,
}

impl SensorPolicy {
    pub fn fixed_fraction(fraction: f64) -> Self {
        SensorPolicy {
            placement: Placement::FixedFraction(fraction),
            sensors_per_step: 2,
        }
    }

    pub fn alpha_coupled() -> Self {
        SensorPolicy {
            placement: Placement::AlphaCoupled,
            sensors_per_step: 2,
        }
    }

    pub fn alpha_coupled_snapped() -> Self {
        SensorPolicy {
            placement: Placement::AlphaCoupledSnapped,
            sensors_per_step: 2,
        }
    }

    pub fn explicit(steps: Vec<Vec<Point>>) -> Self {
        let sensors_per_step = steps.first().map_or(0, Vec::len);
        SensorPolicy {
            placement: Placement::Explicit(steps),
            sensors_per_step,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self.placement, Placement::Explicit(_))
    }

    pub fn validate(&self) -> Result<()> {
        match &self.placement {
            Placement::FixedFraction(f) if !(0.0..=1.0).contains(f) => Err(Error::InvalidPolicy(
                format!("fraction {f} is outside [0, 1]"),
            )),
            Placement::Explicit(steps) => {
                if steps.is_empty() {
                    return Err(Error::InvalidPolicy("no sensor positions given".into()));
                }
                if let Some(t) = steps.iter().position(|s| s.len() != self.sensors_per_step) {
                    return Err(Error::InvalidPolicy(format!(
                        "step {} has {} sensors, expected {}",
                        t + 1,
                        steps[t].len(),
                        self.sensors_per_step
                    )));
                }
                Ok(())
            }
            _ if self.sensors_per_step != 2 => Err(Error::InvalidPolicy(format!(
                "symmetric placements activate one pair, not {} sensors",
                self.sensors_per_step
            ))),
            _ => Ok(()),
        }
    }

    /// Sensors for a step splitting `region` as `partition`. `step` is
    /// zero-based.
    pub fn sensors(
        &self,
        region: &GridRegion,
        partition: &Partition,
        alpha: f64,
        step: usize,
    ) -> Result<SensorSet> {
        let dim = partition.split_dim();
        let axis = region.axis(dim);
        let length = axis.length();
        let offset = match &self.placement {
            Placement::FixedFraction(f) => f * length,
            Placement::AlphaCoupled => uniform_heuristic_placement(length, alpha)?,
            Placement::AlphaCoupledSnapped => {
                let halves = ((0.5 - alpha) * axis.count() as f64).floor();
                halves * axis.step() / 2.0
            }
            Placement::Explicit(steps) => {
                let positions = steps.get(step).ok_or_else(|| {
                    Error::InvalidPolicy(format!(
                        "no sensor positions for step {} ({} given)",
                        step + 1,
                        steps.len()
                    ))
                })?;
                return SensorSet::new(positions.clone());
            }
        };
        Ok(symmetric_pair(region, dim, offset))
    }
}

/// Sensor pair at region-local offset `offset` and its mirror along `dim`.
pub fn symmetric_pair(region: &GridRegion, dim: usize, offset: f64) -> SensorSet {
    let axis = region.axis(dim);
    let mut first = region.center();
    let mut second = first.clone();
    first[dim] = axis.lower() + offset;
    second[dim] = axis.lower() + (axis.length() - offset);
    SensorSet::new(vec![first, second]).expect("two sensors")
}

/// How the kept half is chosen from the likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// The half containing the single most likely grid point.
    #[default]
    MaxLikelihood,
    /// The half with the larger summed log-likelihood.
    SumLikelihood,
}

/// Resolution when the most likely point lies in both halves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Keep the half whose exclusive part holds the more likely point. With
    /// symmetric sensors this is the side of the symmetry hyperplane the
    /// measurement falls on.
    #[default]
    ExclusiveLikelihood,
    /// Always keep the first half.
    FirstSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SearchOptions {
    pub selection: SelectionRule,
    pub tie_break: TieBreak,
}

/// Outcome of one selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    /// Enumeration index of the most likely grid point.
    pub ml_index: usize,
    pub side: Side,
    /// Both halves attained the selection criterion.
    pub tie: bool,
}

/// Single pass over `(squared residual, membership)` pairs in enumeration
/// order.
fn decide<I>(items: I, options: SearchOptions) -> Option<Selection>
where
    I: IntoIterator<Item = (f64, Membership)>,
{
    let mut best = (f64::INFINITY, usize::MAX, Membership::Shared);
    let (mut min_first, mut min_second) = (f64::INFINITY, f64::INFINITY);
    let (mut sum_first, mut sum_second) = (0.0, 0.0);
    for (i, (r, m)) in items.into_iter().enumerate() {
        if r < best.0 || best.1 == usize::MAX {
            best = (r, i, m);
        }
        match m {
            Membership::FirstOnly => {
                min_first = min_first.min(r);
                sum_first += r;
            }
            Membership::SecondOnly => {
                min_second = min_second.min(r);
                sum_second += r;
            }
            Membership::Shared => {}
        }
    }
    let (_, ml_index, membership) = best;
    if ml_index == usize::MAX {
        return None;
    }
    let (side, tie) = match options.selection {
        SelectionRule::MaxLikelihood => match membership {
            Membership::FirstOnly => (Side::First, false),
            Membership::SecondOnly => (Side::Second, false),
            Membership::Shared => {
                let side = match options.tie_break {
                    TieBreak::FirstSide => Side::First,
                    TieBreak::ExclusiveLikelihood if min_second < min_first => Side::Second,
                    TieBreak::ExclusiveLikelihood => Side::First,
                };
                (side, true)
            }
        },
        // Both halves hold the same number of points and share the overlap,
        // so the summed likelihoods differ only through the exclusive parts.
        SelectionRule::SumLikelihood => {
            if sum_first < sum_second {
                (Side::First, false)
            } else if sum_second < sum_first {
                (Side::Second, false)
            } else {
                (Side::First, true)
            }
        }
    };
    Some(Selection {
        ml_index,
        side,
        tie,
    })
}

/// Index of the hypothesis whose expected measurements are closest to `z`,
/// the maximum-likelihood point under Gaussian noise. Ties go to the lowest
/// index.
pub fn ml_classify(
    model: &PropagationModel,
    sensors: &SensorSet,
    z: &MeasurementVector,
    hypotheses: &[Point],
) -> Result<usize> {
    if hypotheses.is_empty() {
        return Err(Error::EmptyHypotheses);
    }
    if z.len() != sensors.len() {
        return Err(Error::LengthMismatch {
            expected: sensors.len(),
            actual: z.len(),
        });
    }
    let mut best = (f64::INFINITY, 0);
    for (i, k) in hypotheses.iter().enumerate() {
        let h = model.hypothesis_vector(sensors, k);
        let r = squared_distance(z.values(), h.values());
        if r < best.0 || i == 0 {
            best = (r, i);
        }
    }
    Ok(best.1)
}

/// Chooses the half to keep. `residuals[i]` is `||z - h_i||^2` for the
/// `i`-th point of `parent` in enumeration order.
pub fn select_region(
    partition: &Partition,
    parent: &GridRegion,
    residuals: &[f64],
    options: SearchOptions,
) -> Result<Selection> {
    if residuals.len() != parent.len() {
        return Err(Error::LengthMismatch {
            expected: parent.len(),
            actual: residuals.len(),
        });
    }
    let dim = partition.split_dim();
    decide(
        residuals
            .iter()
            .enumerate()
            .map(|(i, &r)| (r, partition.membership(parent.index_along(i, dim)))),
        options,
    )
    .ok_or(Error::EmptyHypotheses)
}

/// Expected measurement vectors of every point of a region, flattened, with
/// each point's membership in the partition.
#[derive(Debug, Clone)]
pub struct HypothesisTable {
    width: usize,
    values: Vec<f64>,
    membership: Vec<Membership>,
}

impl HypothesisTable {
    pub fn build(
        model: &PropagationModel,
        sensors: &SensorSet,
        region: &GridRegion,
        partition: &Partition,
    ) -> Self {
        let width = sensors.len();
        let dim = partition.split_dim();
        let mut values = Vec::with_capacity(width * region.len());
        let mut membership = Vec::with_capacity(region.len());
        for i in 0..region.len() {
            let k = region.point(i);
            values.extend(
                sensors
                    .positions()
                    .iter()
                    .map(|s| model.expected_measurement(s, &k)),
            );
            membership.push(partition.membership(region.index_along(i, dim)));
        }
        HypothesisTable {
            width,
            values,
            membership,
        }
    }

    pub fn len(&self) -> usize {
        self.membership.len()
    }

    pub fn is_empty(&self) -> bool {
        self.membership.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn membership(&self, i: usize) -> Membership {
        self.membership[i]
    }

    pub fn decide(&self, z: &[f64], options: SearchOptions) -> Selection {
        debug_assert_eq!(z.len(), self.width);
        decide(
            self.values
                .chunks_exact(self.width)
                .zip(&self.membership)
                .map(|(h, &m)| (squared_distance(z, h), m)),
            options,
        )
        .expect("tables are never empty")
    }
}

/// One iteration of the search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub region_before: GridRegion,
    pub partition: Partition,
    pub sensors: SensorSet,
    pub measurements: MeasurementVector,
    pub ml_index: usize,
    pub ml_point: Point,
    pub side: Side,
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchTrace {
    pub steps: Vec<StepRecord>,
    pub final_region: GridRegion,
    /// The true location lies in the final region.
    pub success: bool,
    /// The region stopped being splittable before the requested depth.
    pub terminated_early: bool,
}

impl SearchTrace {
    pub fn depth(&self) -> usize {
        self.steps.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub alpha: f64,
    pub beta: usize,
    pub policy: SensorPolicy,
    #[serde(default)]
    pub options: SearchOptions,
}

impl SearchConfig {
    pub fn new(alpha: f64, beta: usize, policy: SensorPolicy) -> Self {
        SearchConfig {
            alpha,
            beta,
            policy,
            options: SearchOptions::default(),
        }
    }
}

// Bounded so long Monte Carlo runs do not retain every small region they
// visit.
const TABLE_CACHE_LIMIT: usize = 4096;

type TableKey = (usize, Vec<(usize, usize)>);

#[derive(Default)]
struct TableCache {
    tables: HashMap<TableKey, HypothesisTable>,
}

/// A validated search over a fixed space, model and configuration.
#[derive(Debug, Clone)]
pub struct Searcher {
    space: GridRegion,
    model: PropagationModel,
    config: SearchConfig,
}

impl Searcher {
    pub fn new(space: GridRegion, model: PropagationModel, config: SearchConfig) -> Result<Self> {
        if !(0.0..0.25).contains(&config.alpha) {
            return Err(Error::domain("alpha", config.alpha, "[0, 0.25)"));
        }
        if config.beta < 1 {
            return Err(Error::domain("beta", config.beta as f64, "[1, inf)"));
        }
        config.policy.validate()?;
        if let Placement::Explicit(steps) = &config.policy.placement {
            if let Some(p) = steps.iter().flatten().find(|p| p.len() != space.dims()) {
                return Err(Error::LengthMismatch {
                    expected: space.dims(),
                    actual: p.len(),
                });
            }
        }
        Ok(Searcher {
            space,
            model,
            config,
        })
    }

    pub fn space(&self) -> &GridRegion {
        &self.space
    }

    pub fn model(&self) -> &PropagationModel {
        &self.model
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn run<R: Rng + ?Sized>(&self, true_location: &[f64], rng: &mut R) -> Result<SearchTrace> {
        self.run_cached(true_location, rng, &mut TableCache::default())
    }

    fn run_cached<R: Rng + ?Sized>(
        &self,
        true_location: &[f64],
        rng: &mut R,
        cache: &mut TableCache,
    ) -> Result<SearchTrace> {
        if !self.space.contains(true_location) {
            return Err(Error::InvalidGrid(format!(
                "true location {true_location:?} lies outside the search space"
            )));
        }
        let explicit = !self.config.policy.is_symmetric();
        let mut region = self.space.clone();
        let mut steps = Vec::with_capacity(self.config.beta);
        let mut terminated_early = false;
        for t in 0..self.config.beta {
            if !region.can_split() {
                terminated_early = true;
                break;
            }
            let partition = split(&region, self.config.alpha)?;
            let sensors = self
                .config
                .policy
                .sensors(&region, &partition, self.config.alpha, t)?;
            let z = self.model.sample_measurements(&sensors, true_location, rng);

            let key = (
                if explicit { t } else { 0 },
                region
                    .axes()
                    .iter()
                    .map(|a| (a.origin_index(), a.count()))
                    .collect(),
            );
            if cache.tables.len() >= TABLE_CACHE_LIMIT && !cache.tables.contains_key(&key) {
                cache.tables.clear();
            }
            let table = cache.tables.entry(key).or_insert_with(|| {
                HypothesisTable::build(&self.model, &sensors, &region, &partition)
            });
            let selection = table.decide(z.values(), self.config.options);

            let next = partition.side(selection.side).clone();
            steps.push(StepRecord {
                ml_point: region.point(selection.ml_index),
                region_before: region,
                partition,
                sensors,
                measurements: z,
                ml_index: selection.ml_index,
                side: selection.side,
                tie: selection.tie,
            });
            region = next;
        }
        Ok(SearchTrace {
            steps,
            success: region.contains(true_location),
            final_region: region,
            terminated_early,
        })
    }

    /// Fraction of independent searches that keep a target drawn uniformly
    /// from the initial grid. Trial `i` uses stream `(master_seed, i)`.
    pub fn success_rate(&self, trials: u64, master_seed: u64) -> Result<BinomialEstimate> {
        self.success_rate_for(None, trials, master_seed)
    }

    /// Like [`Searcher::success_rate`], but every trial uses `target` when
    /// one is given.
    pub fn success_rate_for(
        &self,
        target: Option<&[f64]>,
        trials: u64,
        master_seed: u64,
    ) -> Result<BinomialEstimate> {
        if trials == 0 {
            return Err(Error::domain("trials", 0.0, "[1, inf)"));
        }
        if let Some(t) = target {
            if !self.space.contains(t) {
                return Err(Error::InvalidGrid(format!(
                    "true location {t:?} lies outside the search space"
                )));
            }
        }
        let successes = (0..trials)
            .into_par_iter()
            .map_init(TableCache::default, |cache, t| {
                let mut rng = trial_rng(master_seed, t);
                let location = match target {
                    Some(fixed) => fixed.to_vec(),
                    None => self.space.point(rng.random_range(0..self.space.len())),
                };
                self.run_cached(&location, &mut rng, cache)
                    .map(|trace| u64::from(trace.success))
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        Ok(BinomialEstimate::from_counts(successes, trials))
    }
}

/// Runs one search with default selection options.
pub fn run_search<R: Rng + ?Sized>(
    space: &GridRegion,
    model: &PropagationModel,
    alpha: f64,
    beta: usize,
    policy: &SensorPolicy,
    true_location: &[f64],
    rng: &mut R,
) -> Result<SearchTrace> {
    Searcher::new(
        space.clone(),
        *model,
        SearchConfig::new(alpha, beta, policy.clone()),
    )?
    .run(true_location, rng)
}

/// Monte Carlo success probability with default selection options.
pub fn success_rate(
    space: &GridRegion,
    model: &PropagationModel,
    alpha: f64,
    beta: usize,
    policy: &SensorPolicy,
    trials: u64,
    master_seed: u64,
) -> Result<BinomialEstimate> {
    Searcher::new(
        space.clone(),
        *model,
        SearchConfig::new(alpha, beta, policy.clone()),
    )?
    .success_rate(trials, master_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::retained_count;
    use crate::rng::trial_rng;

    fn model() -> PropagationModel {
        PropagationModel::new(20.0, 1.0, 10.0, 0.5f64.sqrt()).unwrap()
    }

    #[test]
    fn ml_classify_exact_match() {
        let m = model();
        let sensors = SensorSet::new(vec![vec![125.0], vec![375.0]]).unwrap();
        let hyps = GridRegion::line(8, 500.0).unwrap().points();
        let z = m.hypothesis_vector(&sensors, &hyps[5]);
        assert_eq!(ml_classify(&m, &sensors, &z, &hyps).unwrap(), 5);
        assert_eq!(
            ml_classify(&m, &sensors, &z, &[]),
            Err(Error::EmptyHypotheses)
        );
    }

    #[test]
    fn ml_classify_tie_goes_to_lowest_index() {
        let m = model();
        let sensors = SensorSet::new(vec![vec![0.0]]).unwrap();
        // Equidistant from the sensor, so identical expected measurements.
        let hyps = vec![vec![-10.0], vec![10.0]];
        let z = MeasurementVector(vec![3.0]);
        assert_eq!(ml_classify(&m, &sensors, &z, &hyps).unwrap(), 0);
    }

    #[test]
    fn ml_classify_agrees_with_likelihood_argmax() {
        let m = model();
        let region = GridRegion::line(16, 500.0).unwrap();
        let hyps = region.points();
        let sensors = SensorSet::new(vec![vec![125.0], vec![375.0]]).unwrap();
        let vectors: Vec<_> = hyps
            .iter()
            .map(|k| m.hypothesis_vector(&sensors, k))
            .collect();
        let mut rng = trial_rng(3, 0);
        for _ in 0..1000 {
            let truth = &hyps[rng.random_range(0..hyps.len())];
            let z = m.sample_measurements(&sensors, truth, &mut rng);
            let mut best = (f64::NEG_INFINITY, 0);
            for (i, h) in vectors.iter().enumerate() {
                let ll = m.log_likelihood(&z, h).unwrap();
                if ll > best.0 {
                    best = (ll, i);
                }
            }
            assert_eq!(ml_classify(&m, &sensors, &z, &hyps).unwrap(), best.1);
        }
    }

    fn residuals_with_min_at(n: usize, at: usize) -> Vec<f64> {
        (0..n).map(|i| 1.0 + (i as f64 - at as f64).abs()).collect()
    }

    #[test]
    fn select_region_examples() {
        let region = GridRegion::line(8, 500.0).unwrap();
        let p = split(&region, 0.2).unwrap(); // first 0..6, second 2..8
        let opts = SearchOptions::default();

        let s = select_region(&p, &region, &residuals_with_min_at(8, 7), opts).unwrap();
        assert_eq!((s.side, s.tie, s.ml_index), (Side::Second, false, 7));

        let first = SearchOptions {
            tie_break: TieBreak::FirstSide,
            ..opts
        };
        let s = select_region(&p, &region, &residuals_with_min_at(8, 5), first).unwrap();
        assert_eq!((s.side, s.tie), (Side::First, true));

        // Overlap maximum, but the best exclusive point is on the second side.
        let s = select_region(&p, &region, &residuals_with_min_at(8, 5), opts).unwrap();
        assert_eq!((s.side, s.tie), (Side::Second, true));
        let s = select_region(&p, &region, &residuals_with_min_at(8, 2), opts).unwrap();
        assert_eq!((s.side, s.tie), (Side::First, true));
    }

    #[test]
    fn no_ties_without_overlap() {
        let region = GridRegion::line(8, 500.0).unwrap();
        let p = split(&region, 0.0).unwrap();
        for at in 0..8 {
            let s = select_region(
                &p,
                &region,
                &residuals_with_min_at(8, at),
                SearchOptions::default(),
            )
            .unwrap();
            assert!(!s.tie);
            assert_eq!(s.side, if at < 4 { Side::First } else { Side::Second });
        }
    }

    #[test]
    fn sum_rule_compares_exclusive_parts() {
        let region = GridRegion::line(8, 500.0).unwrap();
        let p = split(&region, 0.2).unwrap();
        let opts = SearchOptions {
            selection: SelectionRule::SumLikelihood,
            ..Default::default()
        };
        let mut r = vec![5.0; 8];
        r[0] = 1.0;
        r[1] = 1.0;
        r[4] = 0.0; // shared point, irrelevant to the sum comparison
        let s = select_region(&p, &region, &r, opts).unwrap();
        assert_eq!((s.side, s.ml_index), (Side::First, 4));
    }

    #[test]
    fn noiseless_searches_always_succeed() {
        let m = model().noiseless();
        for &(alpha, beta) in &[(0.0, 3), (0.1, 5), (0.2, 7), (0.24, 12)] {
            let space = GridRegion::line(32, 500.0).unwrap();
            for (i, loc) in space.points().iter().enumerate() {
                let trace = run_search(
                    &space,
                    &m,
                    alpha,
                    beta,
                    &SensorPolicy::fixed_fraction(0.25),
                    loc,
                    &mut trial_rng(0, i as u64),
                )
                .unwrap();
                assert!(trace.success, "alpha={alpha} beta={beta} loc={loc:?}");
            }
        }
    }

    #[test]
    fn noiseless_2d_searches_succeed() {
        let m = model().noiseless();
        let space = GridRegion::rectangle(8, 400.0, 6, 300.0).unwrap();
        for policy in [
            SensorPolicy::fixed_fraction(0.25),
            SensorPolicy::alpha_coupled(),
        ] {
            for loc in space.points() {
                let trace =
                    run_search(&space, &m, 0.1, 10, &policy, &loc, &mut trial_rng(0, 0)).unwrap();
                assert!(trace.success);
                assert!(trace.terminated_early);
                assert_eq!(trace.final_region.len(), 1);
            }
        }
    }

    #[test]
    fn counts_follow_the_retention_rule() {
        let space = GridRegion::line(100, 500.0).unwrap();
        let trace = run_search(
            &space,
            &model(),
            0.15,
            8,
            &SensorPolicy::alpha_coupled(),
            &[250.0],
            &mut trial_rng(11, 0),
        )
        .unwrap();
        for step in &trace.steps {
            let n = step.region_before.axis(0).count();
            let kept = step.partition.side(step.side).axis(0).count();
            assert_eq!(kept, retained_count(n, 0.15).unwrap());
        }
        assert_eq!(trace.depth(), 8);
    }

    #[test]
    fn tree_depths_for_eight_points() {
        let m = model().noiseless();
        let space = GridRegion::line(8, 500.0).unwrap();
        let policy = SensorPolicy::fixed_fraction(0.25);
        let t = run_search(&space, &m, 0.0, 3, &policy, &[31.25], &mut trial_rng(0, 0)).unwrap();
        assert_eq!(t.final_region.len(), 1);
        let t = run_search(&space, &m, 0.1, 4, &policy, &[31.25], &mut trial_rng(0, 0)).unwrap();
        let counts: Vec<usize> = t
            .steps
            .iter()
            .map(|s| s.partition.side(s.side).len())
            .collect();
        assert_eq!(counts, vec![5, 3, 2, 1]);
    }

    #[test]
    fn search_rejects_bad_parameters() {
        let space = GridRegion::line(8, 500.0).unwrap();
        let policy = SensorPolicy::fixed_fraction(0.25);
        let mut rng = trial_rng(0, 0);
        assert!(run_search(&space, &model(), 0.25, 3, &policy, &[10.0], &mut rng).is_err());
        assert!(run_search(&space, &model(), 0.1, 0, &policy, &[10.0], &mut rng).is_err());
        assert!(run_search(&space, &model(), 0.1, 3, &policy, &[600.0], &mut rng).is_err());
        let three = SensorPolicy {
            placement: Placement::AlphaCoupled,
            sensors_per_step: 3,
        };
        assert!(run_search(&space, &model(), 0.1, 3, &three, &[10.0], &mut rng).is_err());
        let short = SensorPolicy::explicit(vec![vec![vec![1.0], vec![2.0]]]);
        assert!(matches!(
            run_search(&space, &model(), 0.1, 3, &short, &[10.0], &mut rng),
            Err(Error::InvalidPolicy(_))
        ));
    }

    #[test]
    fn replay_is_deterministic() {
        let space = GridRegion::line(64, 500.0).unwrap();
        let policy = SensorPolicy::alpha_coupled();
        let a = run_search(
            &space,
            &model(),
            0.1,
            6,
            &policy,
            &[200.0],
            &mut trial_rng(4, 2),
        )
        .unwrap();
        let b = run_search(
            &space,
            &model(),
            0.1,
            6,
            &policy,
            &[200.0],
            &mut trial_rng(4, 2),
        )
        .unwrap();
        assert_eq!(a, b);
        let r1 = success_rate(&space, &model(), 0.1, 4, &policy, 2000, 8).unwrap();
        let r2 = success_rate(&space, &model(), 0.1, 4, &policy, 2000, 8).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn noiseless_success_rate_is_one() {
        let space = GridRegion::line(64, 500.0).unwrap();
        let r = success_rate(
            &space,
            &model().noiseless(),
            0.2,
            6,
            &SensorPolicy::fixed_fraction(0.25),
            500,
            1,
        )
        .unwrap();
        assert_eq!(r.rate, 1.0);
    }

    /// Without overlap the surviving path is fixed by the target, so the
    /// success probability is the average over targets of the product of
    /// per-step correct-decision probabilities. Reference value from an
    /// independent double-precision evaluation of that average.
    #[test]
    fn success_rate_matches_exact_average() {
        let space = GridRegion::line(128, 500.0).unwrap();
        let r = success_rate(
            &space,
            &model(),
            0.0,
            5,
            &SensorPolicy::fixed_fraction(0.25),
            100_000,
            3,
        )
        .unwrap();
        assert!(r.covers(0.6419738257387607), "{r:?}");
    }

    #[test]
    fn fixed_target_success_rate() {
        let space = GridRegion::line(16, 500.0).unwrap();
        let searcher = Searcher::new(
            space,
            model().with_sigma(0.05).unwrap(),
            SearchConfig::new(0.0, 4, SensorPolicy::fixed_fraction(0.25)),
        )
        .unwrap();
        // Targets near the ends are far from every decision boundary.
        let r = searcher.success_rate_for(Some(&[15.625]), 2000, 1).unwrap();
        assert_eq!(r.rate, 1.0);
        assert!(searcher.success_rate_for(Some(&[-1.0]), 10, 1).is_err());
    }

    #[test]
    fn huge_noise_is_a_coin_flip() {
        let space = GridRegion::line(2, 500.0).unwrap();
        let m = model().with_sigma(1e9).unwrap();
        let r = success_rate(
            &space,
            &m,
            0.0,
            1,
            &SensorPolicy::fixed_fraction(0.25),
            20_000,
            5,
        )
        .unwrap();
        assert!(r.covers(0.5), "{r:?}");
    }

    #[test]
    fn explicit_policy_uses_given_positions() {
        let space = GridRegion::line(16, 160.0).unwrap();
        let steps = vec![vec![vec![10.0], vec![100.0]], vec![vec![20.0], vec![30.0]]];
        let trace = run_search(
            &space,
            &model().noiseless(),
            0.0,
            2,
            &SensorPolicy::explicit(steps.clone()),
            &[15.0],
            &mut trial_rng(0, 0),
        )
        .unwrap();
        assert_eq!(trace.steps[1].sensors.positions(), steps[1].as_slice());
        assert!(trace.success);
    }

    #[test]
    fn snapped_placement_uses_half_steps() {
        let region = GridRegion::line(100, 500.0).unwrap();
        let p = split(&region, 0.1).unwrap();
        let s = SensorPolicy::alpha_coupled_snapped()
            .sensors(&region, &p, 0.1, 0)
            .unwrap();
        // floor(0.4 * 100) = 40 half-steps of 2.5
        assert!((s.positions()[0][0] - 100.0).abs() < 1e-12);
        assert!((s.positions()[1][0] - 400.0).abs() < 1e-12);
    }

    /// When the target sits in the overlap, either half keeps it, so the
    /// tie-break cannot change whether that step succeeds.
    #[test]
    fn tie_break_irrelevant_for_shared_targets() {
        let space = GridRegion::line(16, 500.0).unwrap();
        let m = model().with_sigma(0.3).unwrap();
        let p = split(&space, 0.2).unwrap();
        let sensors = SensorSet::new(vec![vec![125.0], vec![375.0]]).unwrap();
        let table = HypothesisTable::build(&m, &sensors, &space, &p);
        let first = SearchOptions {
            tie_break: TieBreak::FirstSide,
            ..Default::default()
        };
        let mut ties = 0;
        for trial in 0..5000u64 {
            let mut rng = trial_rng(21, trial);
            let idx = rng.random_range(0..space.len());
            if p.membership(idx) != Membership::Shared {
                continue;
            }
            let z = m.sample_measurements(&sensors, &space.point(idx), &mut rng);
            let a = table.decide(z.values(), SearchOptions::default());
            let b = table.decide(z.values(), first);
            assert_eq!(a.tie, b.tie);
            if a.tie {
                ties += 1;
                let loc = space.point(idx);
                assert!(p.side(a.side).contains(&loc));
                assert!(p.side(a.side.other()).contains(&loc));
            }
        }
        assert!(ties > 0);
    }
}
