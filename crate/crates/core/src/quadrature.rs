//! Numerical integration over intervals and rectangles.
//!
//! Integrands here are bounded but only piecewise smooth (distances to
//! sensors have kinks), so callers pass breakpoints and each smooth piece is
//! integrated separately.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_SIMPSON_DEPTH: u32 = 48;
const MIN_SIMPSON_DEPTH: u32 = 4;
const MAX_PANELS: usize = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Composite Gauss-Legendre; the panel count doubles until two successive
    /// results agree to the tolerance.
    GaussLegendre {
        nodes: usize,
    },
    AdaptiveSimpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub abs_tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::adaptive_simpson(1e-8)
    }
}

/// Closed interval with interior points where the integrand may have a kink.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub breakpoints: Vec<f64>,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Interval {
            lower,
            upper,
            breakpoints: Vec::new(),
        }
    }

    pub fn with_breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(points);
        self
    }

    fn pieces(&self) -> Vec<(f64, f64)> {
        let mut cuts: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .filter(|&p| p > self.lower && p < self.upper)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(self.lower);
        edges.extend(cuts);
        edges.push(self.upper);
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

impl QuadratureSpec {
    pub fn adaptive_simpson(abs_tolerance: f64) -> Self {
        QuadratureSpec {
            scheme: Scheme::AdaptiveSimpson,
            abs_tolerance,
        }
    }

    pub fn gauss_legendre(nodes: usize, abs_tolerance: f64) -> Self {
        QuadratureSpec {
            scheme: Scheme::GaussLegendre { nodes },
            abs_tolerance,
        }
    }

    /// 64-node Gauss-Legendre to 1e-6, used for double integrals.
    pub fn default_2d() -> Self {
        QuadratureSpec::gauss_legendre(64, 1e-6)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tolerance > 0.0 && self.abs_tolerance.is_finite()) {
            return Err(Error::domain(
                "abs_tolerance",
                self.abs_tolerance,
                "(0, inf)",
            ));
        }
        if let Scheme::GaussLegendre { nodes } = self.scheme {
            if nodes < 2 {
                return Err(Error::domain("nodes", nodes as f64, "[2, inf)"));
            }
        }
        Ok(())
    }

    pub fn integrate<F>(&self, interval: &Interval, f: F) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        self.validate()?;
        check_interval(interval)?;
        if interval.upper == interval.lower {
            return Ok(0.0);
        }
        match self.scheme {
            Scheme::AdaptiveSimpson => {
                let width = interval.upper - interval.lower;
                let mut total = 0.0;
                for (a, b) in interval.pieces() {
                    let tol = self.abs_tolerance * (b - a) / width;
                    total += simpson(&f, a, b, tol)?;
                }
                Ok(total)
            }
            Scheme::GaussLegendre { nodes } => {
                let rule = legendre_rule(nodes);
                let pieces = interval.pieces();
                refine(interval, self.abs_tolerance, |panels| {
                    pieces
                        .iter()
                        .map(|&(a, b)| composite(&rule, a, b, panels, &f))
                        .sum()
                })
            }
        }
    }

    /// Double integral over `x` by `y`, with `y` innermost.
    pub fn integrate_2d<F>(&self, x: &Interval, y: &Interval, f: F) -> Result<f64>
    where
        F: Fn(f64, f64) -> f64,
    {
        self.validate()?;
        check_interval(x)?;
        check_interval(y)?;
        if x.upper == x.lower || y.upper == y.lower {
            return Ok(0.0);
        }
        match self.scheme {
            Scheme::AdaptiveSimpson => {
                let inner_tol = self.abs_tolerance
                    / (y.upper - y.lower).max(1.0)
                    / (x.upper - x.lower).max(1.0);
                let inner = QuadratureSpec::adaptive_simpson(inner_tol);
                // Errors inside the outer integrand cannot propagate through
                // the closure, so the first one is stashed and reported.
                let failure = std::cell::RefCell::new(None);
                let total = self.integrate(x, |xv| match inner.integrate(y, |yv| f(xv, yv)) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                })?;
                match failure.into_inner() {
                    Some(e) => Err(e),
                    None => Ok(total),
                }
            }
            Scheme::GaussLegendre { nodes } => {
                let rule = legendre_rule(nodes);
                let (xs, ys) = (x.pieces(), y.pieces());
                refine(x, self.abs_tolerance, |panels| {
                    let mut total = 0.0;
                    for &(xa, xb) in &xs {
                        total += composite(&rule, xa, xb, panels, &|xv| {
                            ys.iter()
                                .map(|&(ya, yb)| composite(&rule, ya, yb, panels, &|yv| f(xv, yv)))
                                .sum()
                        });
                    }
                    total
                })
            }
        }
    }
}

fn check_interval(interval: &Interval) -> Result<()> {
    if !(interval.lower.is_finite() && interval.upper.is_finite())
        || interval.upper < interval.lower
    {
        return Err(Error::Quadrature {
            lower: interval.lower,
            upper: interval.upper,
            detail: "interval must be finite with lower <= upper".into(),
        });
    }
    Ok(())
}

fn legendre_rule(nodes: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(nodes).expect("validated node count"))
}

fn composite<F>(rule: &GaussLegendre, a: f64, b: f64, panels: usize, f: &F) -> f64
where
    F: Fn(f64) -> f64,
{
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            rule.integrate(lo, lo + h, f)
        })
        .sum()
}

fn refine<G>(interval: &Interval, tol: f64, mut estimate: G) -> Result<f64>
where
    G: FnMut(usize) -> f64,
{
    let mut panels = 1;
    let mut previous = estimate(panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let current = estimate(panels);
        if (current - previous).abs() <= tol {
            return Ok(current);
        }
        previous = current;
    }
    Err(Error::Quadrature {
        lower: interval.lower,
        upper: interval.upper,
        detail: format!("no agreement to {tol:e} with {MAX_PANELS} panels"),
    })
}

fn simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= MIN_SIMPSON_DEPTH && delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_SIMPSON_DEPTH || !delta.is_finite() {
        return Err(Error::Quadrature {
            lower: a,
            upper: b,
            detail: format!("adaptive Simpson did not reach {tol:e} (last change {delta:e})"),
        });
    }
    Ok(
        simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1)?
            + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn specs() -> [QuadratureSpec; 2] {
        [
            QuadratureSpec::adaptive_simpson(1e-10),
            QuadratureSpec::gauss_legendre(16, 1e-10),
        ]
    }

    #[test]
    fn polynomials_and_exponentials() {
        for q in specs() {
            let v = q
                .integrate(&Interval::new(0.0, 2.0), |x| x * x * x)
                .unwrap();
            assert!((v - 4.0).abs() < 1e-9);
            let v = q.integrate(&Interval::new(-1.0, 1.0), f64::exp).unwrap();
            assert!((v - (1f64.exp() - (-1f64).exp())).abs() < 1e-9);
        }
    }

    #[test]
    fn kinks_at_breakpoints() {
        for q in specs() {
            let iv = Interval::new(-1.0, 2.0).with_breakpoints([0.3, 5.0, -4.0]);
            let v = q.integrate(&iv, |x| (x - 0.3f64).abs()).unwrap();
            let exact = 0.5 * 1.3 * 1.3 + 0.5 * 1.7 * 1.7;
            assert!((v - exact).abs() < 1e-9, "{v} {exact}");
        }
    }

    #[test]
    fn empty_and_invalid_intervals() {
        let q = QuadratureSpec::default();
        assert_eq!(q.integrate(&Interval::new(1.0, 1.0), |_| 1.0).unwrap(), 0.0);
        assert!(matches!(
            q.integrate(&Interval::new(1.0, 0.0), |_| 1.0),
            Err(Error::Quadrature { .. })
        ));
        assert!(QuadratureSpec::adaptive_simpson(0.0)
            .integrate(&Interval::new(0.0, 1.0), |_| 1.0)
            .is_err());
    }

    #[test]
    fn non_convergence_is_reported() {
        let q = QuadratureSpec::adaptive_simpson(1e-12);
        let r = q.integrate(&Interval::new(0.0, 1.0), |x| {
            if x > 0.1234 {
                f64::NAN
            } else {
                0.0
            }
        });
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn double_integrals() {
        let x = Interval::new(0.0, 1.0);
        let y = Interval::new(0.0, 2.0).with_breakpoints([1.0]);
        for q in [
            QuadratureSpec::default_2d(),
            QuadratureSpec::adaptive_simpson(1e-9),
        ] {
            let v = q
                .integrate_2d(&x, &y, |a, b| a * b + (b - 1.0).abs())
                .unwrap();
            assert!((v - 2.0).abs() < 1e-6, "{v}");
        }
    }
}
