//! Digitized search spaces and the overlapping split rule.
//!
//! A [`GridRegion`] is an axis-aligned block of the step-0 hypothesis grid,
//! stored as integer index ranges. Physical coordinates are always derived
//! from those indices and the step-0 grid parameters, so repeated splitting
//! never accumulates floating-point drift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A location in the search space, one coordinate per axis.
pub type Point = Vec<f64>;

/// Rounds to the nearest integer, resolving exact halves to the even neighbour.
pub fn round_half_even(x: f64) -> f64 {
    let rounded = x.round();
    if (x - x.trunc()).abs() == 0.5 {
        2.0 * (x / 2.0).round()
    } else {
        rounded
    }
}

/// Number of grid points each candidate sub-region keeps along the split axis
/// when a region with `parent_count` points on that axis is split with overlap
/// `alpha`.
///
/// `max(round((1/2 + alpha) * n), ceil(n / 2))` with ties rounded to even.
/// Values of `alpha` up to 0.5 are accepted here for single-step analysis;
/// full searches restrict it further.
pub fn retained_count(parent_count: usize, alpha: f64) -> Result<usize> {
    if parent_count == 0 {
        return Err(Error::domain("parent_count", 0.0, "[1, inf)"));
    }
    check_alpha(alpha)?;
    let n = parent_count as f64;
    let rounded = round_half_even((0.5 + alpha) * n) as usize;
    Ok(rounded.max(parent_count.div_ceil(2)).min(parent_count))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::domain("alpha", alpha, "[0, 0.5]"));
    }
    Ok(())
}

/// One axis of a region: a contiguous run of `count` cells starting at
/// `origin_index` in a step-0 grid of `initial_count` cells over
/// `[0, initial_length]`. Grid points sit at cell centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    origin_index: usize,
    count: usize,
    initial_count: usize,
    initial_length: f64,
}

impl GridAxis {
    pub fn new(
        origin_index: usize,
        count: usize,
        initial_count: usize,
        initial_length: f64,
    ) -> Result<Self> {
        if initial_count == 0 || count == 0 {
            return Err(Error::InvalidGrid("axis counts must be positive".into()));
        }
        if origin_index + count > initial_count {
            return Err(Error::InvalidGrid(format!(
                "slice {}..{} exceeds the {} initial points",
                origin_index,
                origin_index + count,
                initial_count
            )));
        }
        if !(initial_length.is_finite() && initial_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "axis length must be positive and finite, got {initial_length}"
            )));
        }
        Ok(GridAxis {
            origin_index,
            count,
            initial_count,
            initial_length,
        })
    }

    /// The whole step-0 axis.
    pub fn full(initial_count: usize, initial_length: f64) -> Result<Self> {
        Self::new(0, initial_count, initial_count, initial_length)
    }

    pub fn origin_index(&self) -> usize {
        self.origin_index
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn initial_count(&self) -> usize {
        self.initial_count
    }

    pub fn initial_length(&self) -> f64 {
        self.initial_length
    }

    /// Grid spacing, fixed by the step-0 grid.
    pub fn step(&self) -> f64 {
        self.initial_length / self.initial_count as f64
    }

    /// Physical coordinate of local index `i`.
    pub fn coordinate(&self, i: usize) -> f64 {
        let global = (self.origin_index + i) as f64;
        (2.0 * global + 1.0) * self.initial_length / (2.0 * self.initial_count as f64)
    }

    /// Lower edge of the first cell.
    pub fn lower(&self) -> f64 {
        self.origin_index as f64 * self.initial_length / self.initial_count as f64
    }

    /// Physical length covered by the cells of this axis.
    pub fn length(&self) -> f64 {
        self.count as f64 * self.initial_length / self.initial_count as f64
    }

    pub fn upper(&self) -> f64 {
        (self.origin_index + self.count) as f64 * self.initial_length / self.initial_count as f64
    }

    /// Distance between the outermost grid points, `max k - min k`.
    pub fn extent(&self) -> f64 {
        (self.count - 1) as f64 * self.step()
    }

    /// Midpoint between the outermost grid points.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.coordinate(0) + self.coordinate(self.count - 1))
    }

    /// Sub-axis of `count` points starting at local index `start`.
    pub fn slice(&self, start: usize, count: usize) -> Result<Self> {
        if start + count > self.count {
            return Err(Error::InvalidGrid(format!(
                "slice {}..{} exceeds axis of {} points",
                start,
                start + count,
                self.count
            )));
        }
        Self::new(
            self.origin_index + start,
            count,
            self.initial_count,
            self.initial_length,
        )
    }

    /// Local index of the cell containing `x`, if any. The upper edge belongs
    /// to the last cell.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lower() && x <= self.upper()) {
            return None;
        }
        let global = (x / self.step()).floor() as usize;
        let local = global.saturating_sub(self.origin_index);
        Some(local.min(self.count - 1))
    }
}

/// Axis-aligned sub-grid of the step-0 hypothesis grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRegion {
    axes: Vec<GridAxis>,
}

impl GridRegion {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid(
                "a region needs at least one axis".into(),
            ));
        }
        Ok(GridRegion { axes })
    }

    /// Full step-0 grid of `n` points over `[0, length]`.
    pub fn line(n: usize, length: f64) -> Result<Self> {
        Self::new(vec![GridAxis::full(n, length)?])
    }

    /// Full step-0 grid of `nx * ny` points over `[0, lx] x [0, ly]`.
    pub fn rectangle(nx: usize, lx: f64, ny: usize, ly: f64) -> Result<Self> {
        Self::new(vec![GridAxis::full(nx, lx)?, GridAxis::full(ny, ly)?])
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn axis(&self, dim: usize) -> &GridAxis {
        &self.axes[dim]
    }

    /// Number of grid points, the product of axis counts.
    pub fn len(&self) -> usize {
        self.axes.iter().map(GridAxis::count).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn counts(&self) -> Vec<usize> {
        self.axes.iter().map(GridAxis::count).collect()
    }

    /// Row-major local multi-index of a flat index (last axis fastest).
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (d, axis) in self.axes.iter().enumerate().rev() {
            idx[d] = flat % axis.count;
            flat /= axis.count;
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, axis)| acc * axis.count + i)
    }

    /// Number of flat positions between consecutive indices along `dim`.
    pub fn stride(&self, dim: usize) -> usize {
        self.axes[dim + 1..].iter().map(GridAxis::count).product()
    }

    /// Local index along `dim` of the point with this flat index.
    pub fn index_along(&self, flat: usize, dim: usize) -> usize {
        (flat / self.stride(dim)) % self.axes[dim].count
    }

    pub fn point(&self, flat: usize) -> Point {
        self.multi_index(flat)
            .into_iter()
            .zip(&self.axes)
            .map(|(i, axis)| axis.coordinate(i))
            .collect()
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Physical centre of the region's bounding box.
    pub fn center(&self) -> Point {
        self.axes
            .iter()
            .map(|a| 0.5 * (a.lower() + a.upper()))
            .collect()
    }

    /// Flat index of the grid cell containing `location`.
    pub fn locate(&self, location: &[f64]) -> Option<usize> {
        if location.len() != self.axes.len() {
            return None;
        }
        let mut multi = Vec::with_capacity(self.axes.len());
        for (axis, &x) in self.axes.iter().zip(location) {
            multi.push(axis.cell_of(x)?);
        }
        Some(self.flat_index(&multi))
    }

    /// Whether `location` falls inside the cells covered by this region.
    pub fn contains(&self, location: &[f64]) -> bool {
        self.locate(location).is_some()
    }

    /// Axis of greatest physical extent; ties go to the lowest axis index.
    pub fn longest_axis(&self) -> usize {
        let mut best = 0;
        for (d, axis) in self.axes.iter().enumerate().skip(1) {
            if axis.extent() > self.axes[best].extent() {
                best = d;
            }
        }
        best
    }

    pub fn can_split(&self) -> bool {
        self.axes.iter().any(|a| a.count > 1)
    }

    pub fn with_axis(&self, dim: usize, axis: GridAxis) -> GridRegion {
        let mut axes = self.axes.clone();
        axes[dim] = axis;
        GridRegion { axes }
    }

    /// Flat index of the mirror image of `flat` along `dim`.
    pub fn partner_index(&self, flat: usize, dim: usize) -> usize {
        let i = self.index_along(flat, dim);
        let mirrored = self.axes[dim].count - 1 - i;
        flat - i * self.stride(dim) + mirrored * self.stride(dim)
    }
}

/// All grid points of `region` in row-major order.
pub fn enumerate_points(region: &GridRegion) -> Vec<Point> {
    region.points()
}

/// One of the two candidate sub-regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// The sub-region spanning the first indices along the split axis.
    First,
    /// The sub-region spanning the last indices along the split axis.
    Second,
}

impl Side {
    /// 1 or 2.
    pub fn number(self) -> u8 {
        match self {
            Side::First => 1,
            Side::Second => 2,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::First => Side::Second,
            Side::Second => Side::First,
        }
    }
}

/// Where a parent point lands relative to the two candidate sub-regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Membership {
    FirstOnly,
    Shared,
    SecondOnly,
}

impl Membership {
    pub fn in_side(self, side: Side) -> bool {
        !matches!(
            (self, side),
            (Membership::FirstOnly, Side::Second) | (Membership::SecondOnly, Side::First)
        )
    }
}

/// Two overlapping candidate sub-regions of a parent region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    first: GridRegion,
    second: GridRegion,
    split_dim: usize,
    midpoint: f64,
    parent_count: usize,
    next_count: usize,
}

impl Partition {
    pub fn first(&self) -> &GridRegion {
        &self.first
    }

    pub fn second(&self) -> &GridRegion {
        &self.second
    }

    pub fn side(&self, side: Side) -> &GridRegion {
        match side {
            Side::First => &self.first,
            Side::Second => &self.second,
        }
    }

    pub fn split_dim(&self) -> usize {
        self.split_dim
    }

    /// Midpoint of the parent's grid points along the split axis.
    pub fn midpoint(&self) -> f64 {
        self.midpoint
    }

    /// Parent point count along the split axis.
    pub fn parent_count(&self) -> usize {
        self.parent_count
    }

    /// Points each side keeps along the split axis.
    pub fn next_count(&self) -> usize {
        self.next_count
    }

    /// Points shared by both sides along the split axis.
    pub fn overlap_count(&self) -> usize {
        2 * self.next_count - self.parent_count
    }

    /// Points along the split axis that belong to one side only.
    pub fn exclusive_count(&self) -> usize {
        self.parent_count - self.next_count
    }

    /// Overlap half-width in grid steps, measured from the midpoint. Any value
    /// in `[next - (n+1)/2, next - (n-1)/2)` selects the same sub-regions;
    /// this returns the centre of that interval.
    pub fn delta_steps(&self) -> f64 {
        self.next_count as f64 - self.parent_count as f64 / 2.0
    }

    /// Classifies a parent-local index along the split axis.
    pub fn membership(&self, split_index: usize) -> Membership {
        if split_index < self.exclusive_count() {
            Membership::FirstOnly
        } else if split_index >= self.next_count {
            Membership::SecondOnly
        } else {
            Membership::Shared
        }
    }
}

/// Splits `region` along its longest axis into two overlapping halves.
pub fn split(region: &GridRegion, alpha: f64) -> Result<Partition> {
    check_alpha(alpha)?;
    if !region.can_split() {
        return Err(Error::CannotSplit);
    }
    let split_dim = region.longest_axis();
    let axis = region.axis(split_dim);
    let parent_count = axis.count();
    let next_count = retained_count(parent_count, alpha)?;
    let first = region.with_axis(split_dim, axis.slice(0, next_count)?);
    let second = region.with_axis(
        split_dim,
        axis.slice(parent_count - next_count, next_count)?,
    );
    Ok(Partition {
        first,
        second,
        split_dim,
        midpoint: axis.midpoint(),
        parent_count,
        next_count,
    })
}

/// Mirror image of `point` about the centre of `region` along `split_dim`.
/// In region-local coordinates this maps `u` to `L - u`.
pub fn symmetric_partner(point: &[f64], region: &GridRegion, split_dim: usize) -> Point {
    let axis = region.axis(split_dim);
    let mut out = point.to_vec();
    out[split_dim] = 2.0 * axis.lower() + axis.length() - point[split_dim];
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn half_even_rounding() {
        assert_eq!(round_half_even(7.5), 8.0);
        assert_eq!(round_half_even(6.5), 6.0);
        assert_eq!(round_half_even(3.5), 4.0);
        assert_eq!(round_half_even(2.5), 2.0);
        assert_eq!(round_half_even(5.6), 6.0);
        assert_eq!(round_half_even(-2.5), -2.0);
        assert_eq!(round_half_even(4.4), 4.0);
    }

    #[test]
    fn retained_count_examples() {
        assert_eq!(retained_count(8, 0.0).unwrap(), 4);
        assert_eq!(retained_count(8, 0.2).unwrap(), 6);
        assert_eq!(retained_count(10, 0.25).unwrap(), 8);
        assert_eq!(retained_count(7, 0.0).unwrap(), 4);
        assert_eq!(retained_count(1, 0.0).unwrap(), 1);
        assert_eq!(retained_count(2, 0.25).unwrap(), 2);
    }

    #[test]
    fn retained_count_rejects_bad_input() {
        assert!(matches!(
            retained_count(8, 0.6),
            Err(Error::Domain { name: "alpha", .. })
        ));
        assert!(retained_count(8, -0.01).is_err());
        assert!(retained_count(0, 0.1).is_err());
        assert!(retained_count(8, f64::NAN).is_err());
    }

    #[test]
    fn enumerate_examples() {
        let line = GridRegion::line(8, 500.0).unwrap();
        let pts = enumerate_points(&line);
        assert_eq!(pts.len(), 8);
        assert_eq!(pts[0], vec![31.25]);
        assert_eq!(pts[7], vec![468.75]);

        let small = GridRegion::line(4, 4.0).unwrap();
        let xs: Vec<f64> = enumerate_points(&small).into_iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.5, 1.5, 2.5, 3.5]);

        let square = GridRegion::rectangle(2, 2.0, 2, 2.0).unwrap();
        assert_eq!(
            enumerate_points(&square),
            vec![
                vec![0.5, 0.5],
                vec![0.5, 1.5],
                vec![1.5, 0.5],
                vec![1.5, 1.5]
            ]
        );
    }

    #[test]
    fn split_examples_1d() {
        let region = GridRegion::line(8, 500.0).unwrap();
        let p = split(&region, 0.0).unwrap();
        assert_eq!(p.first().axis(0).origin_index(), 0);
        assert_eq!(p.first().axis(0).count(), 4);
        assert_eq!(p.second().axis(0).origin_index(), 4);
        assert_eq!(p.second().axis(0).count(), 4);
        assert_eq!(p.overlap_count(), 0);

        let p = split(&region, 0.2).unwrap();
        assert_eq!(p.first().axis(0).count(), 6);
        assert_eq!(p.second().axis(0).origin_index(), 2);
        assert_eq!(p.overlap_count(), 4);
        assert_eq!(p.midpoint(), 250.0);
    }

    #[test]
    fn split_picks_longest_axis() {
        let region = GridRegion::rectangle(8, 500.0, 4, 500.0).unwrap();
        let p = split(&region, 0.0).unwrap();
        assert_eq!(p.split_dim(), 0);
        assert_eq!(p.first().counts(), vec![4, 4]);

        // fewer points but physically longer
        let region = GridRegion::rectangle(8, 100.0, 4, 500.0).unwrap();
        assert_eq!(split(&region, 0.0).unwrap().split_dim(), 1);

        // equal extent: lowest axis wins
        let square = GridRegion::rectangle(4, 4.0, 4, 4.0).unwrap();
        assert_eq!(split(&square, 0.0).unwrap().split_dim(), 0);
    }

    #[test]
    fn single_point_cannot_split() {
        let region = GridRegion::rectangle(1, 1.0, 1, 1.0).unwrap();
        assert_eq!(split(&region, 0.1), Err(Error::CannotSplit));
    }

    #[test]
    fn partner_examples() {
        let line = GridRegion::line(8, 500.0).unwrap();
        assert_eq!(symmetric_partner(&[100.0], &line, 0), vec![400.0]);
        let square = GridRegion::rectangle(8, 500.0, 8, 500.0).unwrap();
        assert_eq!(
            symmetric_partner(&[100.0, 50.0], &square, 1),
            vec![100.0, 450.0]
        );
        let p = vec![123.0, 77.0];
        assert_eq!(
            symmetric_partner(&symmetric_partner(&p, &square, 0), &square, 0),
            p
        );
    }

    #[test]
    fn partner_of_sub_region_uses_local_frame() {
        let line = GridRegion::line(16, 160.0).unwrap();
        let sub = GridRegion::new(vec![line.axis(0).slice(4, 8).unwrap()]).unwrap();
        // sub covers [40, 120]
        assert_eq!(symmetric_partner(&[45.0], &sub, 0), vec![115.0]);
        assert_eq!(sub.partner_index(0, 0), 7);
    }

    #[test]
    fn locate_and_contains() {
        let square = GridRegion::rectangle(4, 4.0, 2, 2.0).unwrap();
        assert_eq!(square.locate(&[2.5, 0.5]), Some(4));
        assert_eq!(square.locate(&[4.0, 2.0]), Some(7));
        assert!(!square.contains(&[4.1, 1.0]));
        assert!(!square.contains(&[1.0]));
    }

    /// Builds both sub-regions from the midpoint/offset set definition and
    /// compares them with the index slices.
    #[test]
    fn index_slices_match_midpoint_definition() {
        for n in 1..=64usize {
            for k in 0..=50 {
                let alpha = k as f64 / 100.0;
                let region = GridRegion::line(n, 500.0).unwrap();
                if n == 1 {
                    assert!(split(&region, alpha).is_err());
                    continue;
                }
                let p = split(&region, alpha).unwrap();
                let step = region.axis(0).step();
                let offset = p.delta_steps() * step;
                let pts: Vec<f64> = region.points().into_iter().map(|q| q[0]).collect();
                let by_set_1: Vec<f64> = pts
                    .iter()
                    .copied()
                    .filter(|&x| x <= p.midpoint() + offset)
                    .collect();
                let by_set_2: Vec<f64> = pts
                    .iter()
                    .copied()
                    .filter(|&x| x >= p.midpoint() - offset)
                    .collect();
                let slice_1: Vec<f64> = p.first().points().into_iter().map(|q| q[0]).collect();
                let slice_2: Vec<f64> = p.second().points().into_iter().map(|q| q[0]).collect();
                assert_eq!(by_set_1, slice_1, "n={n} alpha={alpha}");
                assert_eq!(by_set_2, slice_2, "n={n} alpha={alpha}");
            }
        }
    }

    proptest! {
        #[test]
        fn retained_count_bounds(n in 1usize..10_000, a in 0.0f64..=0.5, b in 0.0f64..=0.5) {
            let c = retained_count(n, a).unwrap();
            prop_assert!(c >= n.div_ceil(2));
            prop_assert!(c <= n);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(retained_count(n, lo).unwrap() <= retained_count(n, hi).unwrap());
        }

        #[test]
        fn even_split_without_overlap_is_disjoint(half in 1usize..500) {
            let region = GridRegion::line(2 * half, 10.0).unwrap();
            let p = split(&region, 0.0).unwrap();
            prop_assert_eq!(p.overlap_count(), 0);
        }

        #[test]
        fn exclusive_points_pair_up(nx in 1usize..20, ny in 1usize..20, a in 0.0f64..=0.5) {
            let region = GridRegion::rectangle(nx, 3.0 * nx as f64, ny, 2.0 * ny as f64).unwrap();
            prop_assume!(region.can_split());
            let p = split(&region, a).unwrap();
            let d = p.split_dim();
            for flat in 0..region.len() {
                let m = p.membership(region.index_along(flat, d));
                let partner = region.partner_index(flat, d);
                let pm = p.membership(region.index_along(partner, d));
                match m {
                    Membership::FirstOnly => prop_assert_eq!(pm, Membership::SecondOnly),
                    Membership::SecondOnly => prop_assert_eq!(pm, Membership::FirstOnly),
                    Membership::Shared => prop_assert_eq!(pm, Membership::Shared),
                }
                let mirrored = symmetric_partner(&region.point(flat), &region, d);
                let expected = region.point(partner);
                for (x, y) in mirrored.iter().zip(&expected) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn sub_regions_agree_off_axis(nx in 2usize..30, ny in 1usize..30, a in 0.0f64..=0.5) {
            let region = GridRegion::rectangle(nx, 1.0, ny, 1.0).unwrap();
            let p = split(&region, a).unwrap();
            for d in 0..2 {
                if d != p.split_dim() {
                    prop_assert_eq!(p.first().axis(d), region.axis(d));
                    prop_assert_eq!(p.second().axis(d), region.axis(d));
                }
            }
            prop_assert_eq!(p.first().len() + p.second().len(),
                region.len() + p.overlap_count() * region.len() / p.parent_count());
        }
    }
}
