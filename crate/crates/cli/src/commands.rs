//! One function per subcommand. Each writes its CSV (and optional SVG) into
//! the output directory and returns a short summary for the terminal.

use std::fs::File;
use std::path::{Path, PathBuf};

use overlap_search::analysis::{
    count_schedule, end_to_end_error, error_derivative_alpha, exclusive_region_integral_1d,
    step_error_continuous_1d, step_error_continuous_2d, step_error_monte_carlo,
    step_error_symmetric_discrete, tree_depth_approx, tree_depth_exact,
};
use overlap_search::placement::{optimize_placement_ea, uniform_heuristic_placement, EAConfig};
use overlap_search::rng::trial_rng;
use overlap_search::search::{SearchConfig, Searcher, SensorPolicy};
use overlap_search::{split, GridAxis, GridRegion, PropagationModel, QuadratureSpec, SensorSet};
use rand::Rng;

use crate::config::{self, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::plot::{Chart, Series};

/// Where results go.
#[derive(Debug, Clone)]
pub struct Output {
    pub dir: PathBuf,
    pub plot: bool,
}

impl Output {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn csv(&self, name: &str, header: &[&str]) -> CliResult<csv::Writer<File>> {
        let mut w = csv::Writer::from_path(self.path(name))?;
        w.write_record(header)?;
        Ok(w)
    }

    fn chart(&self, name: &str, chart: &Chart) -> CliResult<()> {
        if self.plot {
            chart.write(&self.path(name))?;
        }
        Ok(())
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn joined(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";")
}

fn segment(n: usize, length: f64) -> CliResult<GridRegion> {
    Ok(GridRegion::line(n, length)?)
}

/// A region of `count` points cut from an `n0`-point segment. Step errors
/// only depend on the size because the sensors move with the region.
fn sub_segment(count: usize, n0: usize, length: f64) -> CliResult<GridRegion> {
    Ok(GridRegion::new(vec![GridAxis::new(0, count, n0, length)?])?)
}

pub fn error_vs_alpha(cfg: &ExperimentConfig, out: &Output) -> CliResult<String> {
    let c = &cfg.error_vs_alpha;
    let model = c.model.build()?;
    let quad = QuadratureSpec::default();
    let [f1, f2] = c.sensor_fractions;
    let mut w = out.csv(
        "error_vs_alpha.csv",
        &[
            "alpha",
            "n",
            "pe_discrete",
            "pe_continuous",
            "pe_mc",
            "mc_half_width",
        ],
    )?;
    let mut discrete_series: Vec<Series> = c
        .sizes
        .iter()
        .map(|n| Series::new(format!("n = {n}"), Vec::new()))
        .collect();
    let mut continuous_series = Series::new("continuous", Vec::new());
    for &alpha in &c.alphas {
        for (&n, series) in c.sizes.iter().zip(&mut discrete_series) {
            let region = segment(n, c.length)?;
            let partition = split(&region, alpha)?;
            let sensors = SensorSet::new(vec![vec![f1 * c.length], vec![f2 * c.length]])?;
            let closed = step_error_symmetric_discrete(&region, &partition, &model, &sensors)?;
            let mc =
                step_error_monte_carlo(&region, &partition, &model, &sensors, c.trials, cfg.seed)?;
            w.write_record([
                num(alpha),
                n.to_string(),
                num(closed),
                String::new(),
                opt(mc.mc_estimate),
                num(mc.mc_half_width),
            ])?;
            series.points.push((alpha, closed));
        }
        let continuous = step_error_continuous_1d(c.length, alpha, &model, f1 * c.length, &quad)?;
        w.write_record([
            num(alpha),
            String::new(),
            String::new(),
            num(continuous),
            String::new(),
            String::new(),
        ])?;
        continuous_series.points.push((alpha, continuous));
    }
    w.flush()?;
    let mut chart = Chart::new("Step error vs overlap", "alpha", "step error");
    chart.series = discrete_series;
    chart.series.push(continuous_series);
    out.chart("error_vs_alpha.svg", &chart)?;
    Ok(format!(
        "{} alphas x {} grid sizes written to {}",
        c.alphas.len(),
        c.sizes.len(),
        out.path("error_vs_alpha.csv").display()
    ))
}

pub fn depth_vs_alpha(cfg: &ExperimentConfig, out: &Output) -> CliResult<String> {
    let c = &cfg.depth_vs_alpha;
    let mut w = out.csv(
        "depth_vs_alpha.csv",
        &["alpha", "beta_exact", "beta_approx"],
    )?;
    let mut exact_series = Series::new("exact", Vec::new());
    let mut approx_series = Series::new("approximation", Vec::new());
    let mut worst = 0;
    for &alpha in &c.alphas {
        let exact = tree_depth_exact(c.n0, c.n_beta, alpha)?;
        let approx = tree_depth_approx(c.n0, c.n_beta, alpha)?;
        worst = worst.max(exact.abs_diff(approx));
        w.write_record([num(alpha), exact.to_string(), approx.to_string()])?;
        exact_series.points.push((alpha, exact as f64));
        approx_series.points.push((alpha, approx as f64));
    }
    w.flush()?;
    let chart = Chart::new("Tree depth vs overlap", "alpha", "depth")
        .with(exact_series)
        .with(approx_series);
    out.chart("depth_vs_alpha.svg", &chart)?;
    Ok(format!("max |exact - approx| = {worst}"))
}

/// Alpha in `[0, 0.25)` on a grid of `step` whose exact depth is `beta`,
/// preferring the one nearest the log-ratio estimate.
fn alpha_for_depth(depths: &[(f64, usize)], n0: usize, n_beta: usize, beta: usize) -> Option<f64> {
    let estimate = (n_beta as f64 / n0 as f64).powf(1.0 / beta as f64) - 0.5;
    depths
        .iter()
        .filter(|(_, d)| *d == beta)
        .map(|(a, _)| *a)
        .min_by(|a, b| (a - estimate).abs().total_cmp(&(b - estimate).abs()))
}

/// Error probability of the whole search predicted by multiplying closed-form
/// step errors over the count schedule.
fn predicted_error(
    model: &PropagationModel,
    policy: &SensorPolicy,
    space: &GridRegion,
    alpha: f64,
    beta: usize,
) -> CliResult<f64> {
    let mut region = space.clone();
    let mut steps = Vec::with_capacity(beta);
    for t in 0..beta {
        if !region.can_split() {
            break;
        }
        let partition = split(&region, alpha)?;
        let sensors = policy.sensors(&region, &partition, alpha, t)?;
        steps.push(step_error_symmetric_discrete(
            &region, &partition, model, &sensors,
        )?);
        region = partition.first().clone();
    }
    Ok(end_to_end_error(&steps)?)
}

pub fn error_vs_beta(cfg: &ExperimentConfig, out: &Output) -> CliResult<String> {
    let c = &cfg.error_vs_beta;
    let model = c.model.build()?;
    let policy = SensorPolicy::alpha_coupled_snapped();
    let steps = (0.25 / c.alpha_step).ceil() as usize;
    let depths: Vec<(f64, usize)> = (0..steps)
        .map(|k| config::tidy(k as f64 * c.alpha_step))
        .filter(|a| *a < 0.25)
        .map(|a| Ok((a, tree_depth_exact(c.n0, c.n_beta, a)?)))
        .collect::<CliResult<_>>()?;

    let mut w = out.csv(
        "error_vs_beta.csv",
        &[
            "beta",
            "feasible",
            "alpha_used",
            "pe_total_analytic",
            "pe_total_mc",
            "mc_half_width",
        ],
    )?;
    let mut analytic_series = Series::new("analytic", Vec::new());
    let mut mc_series = Series::new("simulation", Vec::new());
    let mut feasible = 0;
    for &beta in &c.betas {
        let Some(alpha) = alpha_for_depth(&depths, c.n0, c.n_beta, beta) else {
            w.write_record([
                beta.to_string(),
                "false".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
            continue;
        };
        feasible += 1;
        debug_assert_eq!(count_schedule(c.n0, c.n_beta, alpha)?.len(), beta + 1);
        let space = sub_segment(c.n0, c.n0, c.length)?;
        let analytic = predicted_error(&model, &policy, &space, alpha, beta)?;
        analytic_series.points.push((beta as f64, analytic));
        let (mc, half) = if c.simulate {
            let searcher =
                Searcher::new(space, model, SearchConfig::new(alpha, beta, policy.clone()))?;
            let r = searcher.success_rate(c.trials, cfg.seed)?;
            mc_series.points.push((beta as f64, 1.0 - r.rate));
            (Some(1.0 - r.rate), Some(r.half_width))
        } else {
            (None, None)
        };
        w.write_record([
            beta.to_string(),
            "true".into(),
            num(alpha),
            num(analytic),
            opt(mc),
            opt(half),
        ])?;
    }
    w.flush()?;
    let mut chart = Chart::new("Search error vs tree depth", "beta", "error probability")
        .log_y()
        .with(analytic_series);
    if c.simulate {
        chart = chart.with(mc_series);
    }
    out.chart("error_vs_beta.svg", &chart)?;
    Ok(format!(
        "{feasible} of {} depths reachable from {} to {} points",
        c.betas.len(),
        c.n0,
        c.n_beta
    ))
}

pub fn optimize_placement(cfg: &ExperimentConfig, out: &Output) -> CliResult<String> {
    let c = &cfg.optimize_placement;
    let model = c.model.build()?;
    let quad = QuadratureSpec::default();
    let mut w = out.csv(
        "optimize_placement.csv",
        &["alpha", "ea_s", "heuristic_s", "pe_ea", "pe_heuristic"],
    )?;
    let mut history = out.csv(
        "optimize_placement_history.csv",
        &[
            "alpha",
            "generation",
            "population_best",
            "incumbent",
            "incumbent_s",
        ],
    )?;
    let mut ea_series = Series::new("evolutionary", Vec::new());
    let mut heuristic_series = Series::new("heuristic", Vec::new());
    let mut worst_margin = f64::NEG_INFINITY;
    for (i, &alpha) in c.alphas.iter().enumerate() {
        let objective = |s: f64| step_error_continuous_1d(c.length, alpha, &model, s, &quad);
        let heuristic_s = uniform_heuristic_placement(c.length, alpha)?;
        let heuristic = objective(heuristic_s)?;
        let ea_config = EAConfig {
            seed: c.ea.seed.wrapping_add(cfg.seed).wrapping_add(i as u64),
            ..c.ea
        };
        let result = optimize_placement_ea(objective, (0.0, c.length / 2.0), &ea_config)?;
        worst_margin = worst_margin.max(result.best_value - heuristic);
        w.write_record([
            num(alpha),
            num(result.best_s),
            num(heuristic_s),
            num(result.best_value),
            num(heuristic),
        ])?;
        for g in &result.history {
            history.write_record([
                num(alpha),
                g.generation.to_string(),
                num(g.population_best),
                num(g.incumbent),
                num(g.incumbent_s),
            ])?;
        }
        ea_series.points.push((alpha, result.best_s));
        heuristic_series.points.push((alpha, heuristic_s));
    }
    w.flush()?;
    history.flush()?;

    let mut coupled = out.csv(
        "optimize_placement_coupled.csv",
        &["alpha", "sensor_s", "pe"],
    )?;
    let mut coupled_series = Series::new("alpha-coupled sensors", Vec::new());
    let mut increases = 0;
    let mut previous = f64::INFINITY;
    for &alpha in &c.coupled_alphas {
        let s = uniform_heuristic_placement(c.length, alpha)?;
        let pe = step_error_continuous_1d(c.length, alpha, &model, s, &quad)?;
        if pe > previous {
            increases += 1;
        }
        previous = pe;
        coupled.write_record([num(alpha), num(s), num(pe)])?;
        coupled_series.points.push((alpha, pe));
    }
    coupled.flush()?;

    out.chart(
        "optimize_placement.svg",
        &Chart::new("Sensor offset vs overlap", "alpha", "sensor offset s")
            .with(ea_series)
            .with(heuristic_series),
    )?;
    out.chart(
        "optimize_placement_coupled.svg",
        &Chart::new(
            "Step error with alpha-coupled sensors",
            "alpha",
            "step error",
        )
        .with(coupled_series),
    )?;
    Ok(format!(
        "largest EA - heuristic gap {worst_margin:.3e}; coupled curve rises {increases} times"
    ))
}

pub fn simulate(cfg: &ExperimentConfig, out: &Output) -> CliResult<String> {
    let c = &cfg.simulate;
    if c.counts.len() != c.lengths.len() || c.counts.is_empty() {
        return Err(CliError::Config(
            "simulate.counts and simulate.lengths need one entry per dimension".into(),
        ));
    }
    let axes = c
        .counts
        .iter()
        .zip(&c.lengths)
        .map(|(&n, &l)| GridAxis::full(n, l))
        .collect::<Result<Vec<_>, _>>()?;
    let space = GridRegion::new(axes)?;
    let model = c.model.build()?;
    let searcher = Searcher::new(
        space.clone(),
        model,
        SearchConfig {
            alpha: c.alpha,
            beta: c.beta,
            policy: c.policy.clone(),
            options: c.options,
        },
    )?;
    let estimate = searcher.success_rate_for(c.target.as_deref(), c.trials, cfg.seed)?;
    let predicted = if c.policy.is_symmetric() && c.target.is_none() {
        Some(1.0 - predicted_error(&model, &c.policy, &space, c.alpha, c.beta)?)
    } else {
        None
    };
    let mut w = out.csv(
        "simulate.csv",
        &[
            "alpha",
            "beta",
            "trials",
            "success_rate",
            "half_width",
            "predicted_success",
        ],
    )?;
    w.write_record([
        num(c.alpha),
        c.beta.to_string(),
        c.trials.to_string(),
        num(estimate.rate),
        num(estimate.half_width),
        opt(predicted),
    ])?;
    w.flush()?;

    // Replays the first trial with its own stream.
    let mut rng = trial_rng(cfg.seed, 0);
    let target = match &c.target {
        Some(t) => t.clone(),
        None => space.point(rng.random_range(0..space.len())),
    };
    let trace = searcher.run(&target, &mut rng)?;
    let mut t = out.csv(
        "simulate_trace.csv",
        &[
            "step",
            "split_dim",
            "parent_count",
            "kept_count",
            "side",
            "tie",
            "ml_point",
            "measurements",
            "kept_lower",
            "kept_upper",
            "target",
        ],
    )?;
    for (i, step) in trace.steps.iter().enumerate() {
        let kept = step.partition.side(step.side);
        let lower: Vec<f64> = kept.axes().iter().map(|a| a.lower()).collect();
        let upper: Vec<f64> = kept.axes().iter().map(|a| a.upper()).collect();
        t.write_record([
            (i + 1).to_string(),
            step.partition.split_dim().to_string(),
            step.partition.parent_count().to_string(),
            step.partition.next_count().to_string(),
            step.side.number().to_string(),
            step.tie.to_string(),
            joined(&step.ml_point),
            joined(step.measurements.values()),
            joined(&lower),
            joined(&upper),
            joined(&target),
        ])?;
    }
    t.flush()?;
    Ok(format!(
        "success rate {:.5} +/- {:.5} over {} trials{}",
        estimate.rate,
        estimate.half_width,
        c.trials,
        predicted
            .map(|p| format!(" (product of step errors predicts {p:.5})"))
            .unwrap_or_default()
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn quarter_pair(region: &GridRegion) -> CliResult<SensorSet> {
    let a = region.axis(0);
    let mut first = region.center();
    let mut second = first.clone();
    first[0] = a.lower() + a.length() / 4.0;
    second[0] = a.lower() + 3.0 * a.length() / 4.0;
    Ok(SensorSet::new(vec![first, second])?)
}

fn alpha_steps(step: f64, last: f64) -> Vec<f64> {
    let count = (last / step).round() as usize;
    (0..=count).map(|i| config::tidy(i as f64 * step)).collect()
}

fn check_closed_form(
    c: &config::Validate,
    model: &PropagationModel,
    seed: u64,
) -> CliResult<Check> {
    let mut passed = true;
    let mut worst: f64 = 0.0;
    for n in [8, 16] {
        let region = segment(n, c.length)?;
        let sensors = quarter_pair(&region)?;
        for alpha in [0.0, 0.1, 0.25] {
            let p = split(&region, alpha)?;
            let closed = step_error_symmetric_discrete(&region, &p, model, &sensors)?;
            let mc = step_error_monte_carlo(&region, &p, model, &sensors, c.trials, seed)?;
            let gap = (closed - mc.mc_estimate.unwrap_or(f64::NAN)).abs();
            passed &= gap <= mc.mc_half_width;
            worst = worst.max(gap / mc.mc_half_width);
        }
    }
    Ok(Check {
        name: "closed_form_vs_monte_carlo",
        passed,
        detail: format!(
            "largest gap is {worst:.2} half-widths at {} trials",
            c.trials
        ),
    })
}

fn check_derivative(c: &config::Validate, model: &PropagationModel) -> CliResult<Check> {
    let quad = QuadratureSpec::default();
    let s = c.length / 4.0;
    let h = c.derivative_step;
    let at_zero = error_derivative_alpha(c.length, 0.0, model, s)?;
    let mut worst: f64 = 0.0;
    for alpha in alpha_steps(0.05, 0.45) {
        let closed = error_derivative_alpha(c.length, alpha, model, s)?;
        let upper = |a: f64| c.length * (0.5 - a);
        let fd = (exclusive_region_integral_1d(c.length, upper(alpha + h), model, s, &quad)?
            - exclusive_region_integral_1d(c.length, upper(alpha - h), model, s, &quad)?)
            / (2.0 * h);
        worst = worst.max((fd - closed).abs());
    }
    Ok(Check {
        name: "derivative_vs_finite_difference",
        passed: (at_zero + 1.0).abs() <= 1e-9 && worst <= c.derivative_tolerance,
        detail: format!("derivative at 0 is {at_zero:.12}; largest gap {worst:.3e}"),
    })
}

fn check_continuous_1d(c: &config::Validate, model: &PropagationModel) -> CliResult<Check> {
    let quad = QuadratureSpec::default();
    let region = segment(128, c.length)?;
    let sensors = quarter_pair(&region)?;
    let mut worst: f64 = 0.0;
    for alpha in alpha_steps(0.05, 0.5) {
        let p = split(&region, alpha)?;
        let discrete = step_error_symmetric_discrete(&region, &p, model, &sensors)?;
        let continuous = step_error_continuous_1d(c.length, alpha, model, c.length / 4.0, &quad)?;
        worst = worst.max((discrete - continuous).abs());
    }
    Ok(Check {
        name: "discrete_128_vs_continuous",
        passed: worst <= c.continuous_tolerance,
        detail: format!("largest gap {worst:.5}"),
    })
}

fn check_depth(c: &config::Validate) -> CliResult<Check> {
    let mut worst = (0.0, 0usize, 0usize);
    for alpha in alpha_steps(0.01, 0.24) {
        let exact = tree_depth_exact(100_000, 1, alpha)?;
        let approx = tree_depth_approx(100_000, 1, alpha)?;
        if exact.abs_diff(approx) > worst.1.abs_diff(worst.2) {
            worst = (alpha, exact, approx);
        }
    }
    let gap = worst.1.abs_diff(worst.2);
    let at_zero = tree_depth_exact(100_000, 1, 0.0)?;
    Ok(Check {
        name: "depth_exact_vs_approx",
        passed: gap <= c.depth_tolerance && at_zero == 17,
        detail: format!(
            "largest gap {gap} at alpha {:.2} (exact {}, approx {}); exact depth at 0 is {at_zero}",
            worst.0, worst.1, worst.2
        ),
    })
}

fn check_continuous_2d(c: &config::Validate, model: &PropagationModel) -> CliResult<Check> {
    let region = GridRegion::rectangle(64, c.length, 64, c.length)?;
    let sensors = quarter_pair(&region)?;
    let mut worst: f64 = 0.0;
    for alpha in [0.0, 0.1, 0.2] {
        let p = split(&region, alpha)?;
        let discrete = step_error_symmetric_discrete(&region, &p, model, &sensors)?;
        let continuous = step_error_continuous_2d(
            c.length,
            c.length,
            alpha,
            model,
            &sensors,
            &QuadratureSpec::default_2d(),
        )?;
        worst = worst.max((discrete - continuous).abs());
    }
    Ok(Check {
        name: "discrete_64x64_vs_continuous_2d",
        passed: worst <= c.continuous_tolerance,
        detail: format!("largest gap {worst:.5}"),
    })
}

pub fn run_checks(cfg: &ExperimentConfig) -> CliResult<Vec<Check>> {
    let c = &cfg.validate;
    let model = c.model.build()?;
    Ok(vec![
        check_closed_form(c, &model, cfg.seed)?,
        check_derivative(c, &model)?,
        check_continuous_1d(c, &model)?,
        check_depth(c)?,
        check_continuous_2d(c, &model)?,
    ])
}

pub fn validate(cfg: &ExperimentConfig, out: &Output) -> CliResult<String> {
    let checks = run_checks(cfg)?;
    let mut w = out.csv("validate.csv", &["check", "passed", "detail"])?;
    let mut table = String::new();
    for c in &checks {
        w.write_record([c.name, if c.passed { "true" } else { "false" }, &c.detail])?;
        table.push_str(&format!(
            "{:<34} {:<5} {}\n",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.detail
        ));
    }
    w.flush()?;
    print!("{table}");
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.to_string())
        .collect();
    if failed.is_empty() {
        Ok(format!("all {} checks passed", checks.len()))
    } else {
        Err(CliError::ValidationFailed(failed))
    }
}

/// Creates `dir` if needed.
pub fn prepare_output(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_for_depth_prefers_the_estimate() {
        let depths: Vec<(f64, usize)> = (0..2500)
            .map(|k| k as f64 * 1e-4)
            .map(|a| (a, tree_depth_exact(1 << 14, 1 << 7, a).unwrap()))
            .collect();
        assert_eq!(alpha_for_depth(&depths, 1 << 14, 1 << 7, 7), Some(0.0));
        let a = alpha_for_depth(&depths, 1 << 14, 1 << 7, 14).unwrap();
        assert_eq!(tree_depth_exact(1 << 14, 1 << 7, a).unwrap(), 14);
        assert_eq!(alpha_for_depth(&depths, 1 << 14, 1 << 7, 33), None);
    }

    #[test]
    fn predicted_error_multiplies_step_errors() {
        let model = config::ModelConfig::reference().build().unwrap();
        let space = segment(16, 500.0).unwrap();
        let policy = SensorPolicy::fixed_fraction(0.25);
        let total = predicted_error(&model, &policy, &space, 0.0, 2).unwrap();
        let step = |n: usize| {
            let r = sub_segment(n, 16, 500.0).unwrap();
            let p = split(&r, 0.0).unwrap();
            step_error_symmetric_discrete(&r, &p, &model, &quarter_pair(&r).unwrap()).unwrap()
        };
        let direct = 1.0 - (1.0 - step(16)) * (1.0 - step(8));
        assert!((total - direct).abs() < 1e-15);
    }
}
