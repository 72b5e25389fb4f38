//! Windows, point patterns, and the cell discretization shared by every
//! integral over `X^∞`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::units::{convert_unit_system, Quantity, UnitExp};

/// Largest window dimension supported; quadrature cost is `cells^(d·n)`.
pub const MAX_DIMENSION: usize = 3;

/// A rectangular window `X` with Lebesgue base measure.
///
/// Each axis is measured in `ι^(1/d)` so the window's hypervolume carries
/// exactly `ι`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseSpace {
    bounds: Vec<(f64, f64)>,
    unit_name: String,
}

impl BaseSpace {
    pub fn new(bounds: Vec<(f64, f64)>, unit_name: impl Into<String>) -> Result<Self> {
        let d = bounds.len();
        if d == 0 || d > MAX_DIMENSION {
            return Err(Error::InvalidSpace(format!(
                "dimension must be in 1..={MAX_DIMENSION}, got {d}"
            )));
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidSpace(format!(
                    "axis {axis}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(BaseSpace {
            bounds,
            unit_name: unit_name.into(),
        })
    }

    /// One-dimensional window `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        BaseSpace::new(vec![(lo, hi)], "iota")
    }

    /// The default desk-scale window `[0, 10]`.
    pub fn desk() -> Self {
        BaseSpace::interval(0.0, 10.0).expect("static window")
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn unit_name(&self) -> &str {
        &self.unit_name
    }

    /// `λ_X(window)`, unit `ι`.
    pub fn measure(&self) -> Quantity {
        let v: f64 = self.bounds.iter().map(|(lo, hi)| hi - lo).product();
        Quantity::new(v, UnitExp::ONE).expect("finite window")
    }

    /// Exponent of `ι` carried by one coordinate.
    pub fn coordinate_unit(&self) -> UnitExp {
        UnitExp::new(1, self.dimension() as i64)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter()
                .zip(&self.bounds)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    /// Scale factor applied to coordinates when relabelling with `1ι = kι'`.
    pub fn coordinate_scale(&self, k: f64) -> f64 {
        let probe = Quantity::new(1.0, self.coordinate_unit()).expect("finite");
        convert_unit_system(probe, k).value()
    }

    /// The same window expressed in a unit system with `1ι = kι'`.
    pub fn relabel(&self, k: f64) -> BaseSpace {
        let s = self.coordinate_scale(k);
        BaseSpace {
            bounds: self.bounds.iter().map(|&(lo, hi)| (lo * s, hi * s)).collect(),
            unit_name: format!("{}*{k}", self.unit_name),
        }
    }
}

/// A finite ordered tuple of points; the empty tuple is `φ = ∅`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointPattern {
    dimension: usize,
    coords: Vec<f64>,
}

impl PointPattern {
    pub fn empty(dimension: usize) -> Self {
        PointPattern {
            dimension,
            coords: Vec::new(),
        }
    }

    pub fn from_points(dimension: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dimension);
        for p in points {
            if p.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Ok(PointPattern { dimension, coords })
    }

    /// Pattern on a line from scalar locations.
    pub fn line(xs: &[f64]) -> Self {
        PointPattern {
            dimension: 1,
            coords: xs.to_vec(),
        }
    }

    pub(crate) fn from_flat(dimension: usize, coords: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len() % dimension, 0);
        PointPattern { dimension, coords }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `|φ|`.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dimension.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dimension.max(1))
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    /// The pattern with its entries reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> PointPattern {
        let mut coords = Vec::with_capacity(self.coords.len());
        for &i in perm {
            coords.extend_from_slice(self.point(i));
        }
        PointPattern {
            dimension: self.dimension,
            coords,
        }
    }

    pub fn has_duplicates(&self) -> bool {
        let n = self.len();
        (0..n).any(|i| (i + 1..n).any(|j| self.point(i) == self.point(j)))
    }

    /// Coordinates rescaled for the unit system with `1ι = kι'`.
    pub fn relabel(&self, space: &BaseSpace, k: f64) -> PointPattern {
        let s = space.coordinate_scale(k);
        PointPattern {
            dimension: self.dimension,
            coords: self.coords.iter().map(|v| v * s).collect(),
        }
    }
}

/// A finite union of disjoint closed intervals, kept sorted and merged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalUnion(Vec<(f64, f64)>);

impl IntervalUnion {
    pub fn new(mut parts: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in &parts {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidRegion(format!("bad interval [{lo}, {hi}]")));
            }
        }
        parts.retain(|(lo, hi)| hi > lo);
        parts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(parts.len());
        for (lo, hi) in parts {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Ok(IntervalUnion(merged))
    }

    pub fn single(lo: f64, hi: f64) -> Result<Self> {
        IntervalUnion::new(vec![(lo, hi)])
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn length(&self) -> f64 {
        self.0.iter().map(|(lo, hi)| hi - lo).sum()
    }

    /// Length of the overlap with `[lo, hi]`.
    pub fn overlap(&self, lo: f64, hi: f64) -> f64 {
        self.0
            .iter()
            .map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0))
            .sum()
    }
}

/// A product of per-axis interval unions inside the window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    axes: Vec<IntervalUnion>,
}

impl Region {
    pub fn new(space: &BaseSpace, axes: Vec<IntervalUnion>) -> Result<Self> {
        if axes.len() != space.dimension() {
            return Err(Error::DimensionMismatch {
                expected: space.dimension(),
                got: axes.len(),
            });
        }
        for (u, &(lo, hi)) in axes.iter().zip(space.bounds()) {
            if u.parts().iter().any(|&(a, b)| a < lo || b > hi) {
                return Err(Error::InvalidRegion(format!(
                    "region {:?} leaves the window [{lo}, {hi}]",
                    u.parts()
                )));
            }
        }
        Ok(Region { axes })
    }

    /// An axis-aligned box given as `(lo, hi)` per axis.
    pub fn boxed(space: &BaseSpace, corners: &[(f64, f64)]) -> Result<Self> {
        let axes = corners
            .iter()
            .map(|&(lo, hi)| IntervalUnion::single(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Region::new(space, axes)
    }

    /// `[lo, hi]` on a one-dimensional window.
    pub fn interval(space: &BaseSpace, lo: f64, hi: f64) -> Result<Self> {
        Region::boxed(space, &[(lo, hi)])
    }

    pub fn whole(space: &BaseSpace) -> Self {
        Region {
            axes: space
                .bounds()
                .iter()
                .map(|&(lo, hi)| IntervalUnion(vec![(lo, hi)]))
                .collect(),
        }
    }

    pub fn axes(&self) -> &[IntervalUnion] {
        &self.axes
    }

    /// `λ_X(region)`, unit `ι`.
    pub fn measure(&self) -> Quantity {
        let v: f64 = self.axes.iter().map(IntervalUnion::length).product();
        Quantity::new(v, UnitExp::ONE).expect("finite region")
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.axes.len()
            && x.iter().zip(&self.axes).all(|(&v, u)| {
                u.parts().iter().any(|&(lo, hi)| v >= lo && v <= hi)
            })
    }
}

/// Tensor-product cell grid over a window: `cells_per_axis^d` equal cells,
/// indexed lexicographically with the first axis most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLayout {
    space: BaseSpace,
    cells_per_axis: usize,
    widths: Vec<f64>,
    count: usize,
    volume: f64,
}

impl CellLayout {
    pub fn new(space: BaseSpace, cells_per_axis: usize) -> Result<Self> {
        if cells_per_axis == 0 {
            return Err(Error::InvalidGrid("cells per axis must be positive".into()));
        }
        let d = space.dimension();
        let count = cells_per_axis
            .checked_pow(d as u32)
            .ok_or_else(|| Error::InvalidGrid("too many cells".into()))?;
        let widths: Vec<f64> = space
            .bounds()
            .iter()
            .map(|(lo, hi)| (hi - lo) / cells_per_axis as f64)
            .collect();
        let volume = widths.iter().product();
        Ok(CellLayout {
            space,
            cells_per_axis,
            widths,
            count,
            volume,
        })
    }

    pub fn space(&self) -> &BaseSpace {
        &self.space
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Volume of one cell (numeric value in `ι`).
    pub fn cell_volume(&self) -> f64 {
        self.volume
    }

    fn axis_index(&self, cell: usize, axis: usize) -> usize {
        let d = self.space.dimension();
        let stride = self.cells_per_axis.pow((d - 1 - axis) as u32);
        (cell / stride) % self.cells_per_axis
    }

    /// Cell containing `x`; cells are half-open except at the upper bound.
    pub fn cell_of(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.space.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dimension(),
                got: x.len(),
            });
        }
        if !self.space.contains(x) {
            return Err(Error::OutOfWindow { point: x.to_vec() });
        }
        let mut idx = 0;
        for (axis, (&v, &(lo, _))) in x.iter().zip(self.space.bounds()).enumerate() {
            let i = (((v - lo) / self.widths[axis]).floor() as usize).min(self.cells_per_axis - 1);
            idx = idx * self.cells_per_axis + i;
        }
        Ok(idx)
    }

    /// Per-axis `(lo, hi)` of a cell.
    pub fn cell_box(&self, cell: usize) -> Vec<(f64, f64)> {
        (0..self.space.dimension())
            .map(|axis| {
                let i = self.axis_index(cell, axis);
                let lo = self.space.bounds()[axis].0 + i as f64 * self.widths[axis];
                (lo, lo + self.widths[axis])
            })
            .collect()
    }

    pub fn midpoint(&self, cell: usize) -> Vec<f64> {
        self.cell_box(cell)
            .into_iter()
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// Fraction of each cell covered by `region`, in `[0, 1]`.
    pub fn coverage(&self, region: &Region) -> Vec<f64> {
        let d = self.space.dimension();
        let per_axis: Vec<Vec<f64>> = (0..d)
            .map(|axis| {
                let lo0 = self.space.bounds()[axis].0;
                let w = self.widths[axis];
                (0..self.cells_per_axis)
                    .map(|i| {
                        let lo = lo0 + i as f64 * w;
                        (region.axes()[axis].overlap(lo, lo + w) / w).clamp(0.0, 1.0)
                    })
                    .collect()
            })
            .collect();
        (0..self.count)
            .map(|cell| {
                (0..d)
                    .map(|axis| per_axis[axis][self.axis_index(cell, axis)])
                    .product()
            })
            .collect()
    }

    /// The same grid in a unit system with `1ι = kι'`.
    pub fn relabel(&self, k: f64) -> CellLayout {
        CellLayout::new(self.space.relabel(k), self.cells_per_axis).expect("relabel keeps validity")
    }

    /// Dyadic sub-box of refinement level `level` inside the cell holding
    /// `x` that itself contains `x`.
    pub fn dyadic_box(&self, x: &[f64], level: u32) -> Result<Vec<(f64, f64)>> {
        let cell = self.cell_of(x)?;
        let parts = 1usize << level;
        Ok(self
            .cell_box(cell)
            .into_iter()
            .zip(x)
            .map(|((lo, hi), &v)| {
                let w = (hi - lo) / parts as f64;
                let j = (((v - lo) / w).floor() as usize).min(parts - 1);
                let a = lo + j as f64 * w;
                (a, a + w)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_validation() {
        assert!(BaseSpace::interval(1.0, 1.0).is_err());
        assert!(BaseSpace::new(vec![], "m").is_err());
        assert!(BaseSpace::new(vec![(0.0, 1.0); 4], "m").is_err());
        let s = BaseSpace::new(vec![(0.0, 2.0), (0.0, 3.0)], "m").unwrap();
        assert_eq!(s.measure().value(), 6.0);
        assert_eq!(s.measure().unit(), UnitExp::ONE);
        assert_eq!(s.coordinate_unit(), UnitExp::new(1, 2));
    }

    #[test]
    fn relabel_scales_measure_by_k() {
        let s = BaseSpace::new(vec![(0.0, 2.0), (1.0, 3.0)], "m").unwrap();
        let r = s.relabel(9.0);
        assert!((r.measure().value() - 36.0).abs() < 1e-12);
        assert_eq!(r.bounds()[1], (3.0, 9.0));
    }

    #[test]
    fn cell_lookup_and_geometry() {
        let layout = CellLayout::new(BaseSpace::desk(), 10).unwrap();
        assert_eq!(layout.len(), 10);
        assert_eq!(layout.cell_of(&[0.0]).unwrap(), 0);
        assert_eq!(layout.cell_of(&[0.99]).unwrap(), 0);
        assert_eq!(layout.cell_of(&[1.0]).unwrap(), 1);
        assert_eq!(layout.cell_of(&[10.0]).unwrap(), 9);
        assert!(matches!(layout.cell_of(&[10.5]), Err(Error::OutOfWindow { .. })));
        assert_eq!(layout.midpoint(3), vec![3.5]);

        let s = BaseSpace::new(vec![(0.0, 2.0), (0.0, 4.0)], "m").unwrap();
        let l2 = CellLayout::new(s, 2).unwrap();
        assert_eq!(l2.cell_of(&[1.5, 0.5]).unwrap(), 2);
        assert_eq!(l2.cell_box(2), vec![(1.0, 2.0), (0.0, 2.0)]);
        assert_eq!(l2.cell_volume(), 2.0);
    }

    #[test]
    fn coverage_of_partial_region() {
        let space = BaseSpace::desk();
        let layout = CellLayout::new(space.clone(), 5).unwrap();
        let r = Region::interval(&space, 1.0, 5.0).unwrap();
        let cov = layout.coverage(&r);
        assert_eq!(cov, vec![0.5, 1.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn interval_union_is_canonical() {
        let u = IntervalUnion::new(vec![(3.0, 4.0), (0.0, 1.0), (0.5, 2.0), (5.0, 5.0)]).unwrap();
        assert_eq!(u.parts(), &[(0.0, 2.0), (3.0, 4.0)]);
        assert_eq!(u.length(), 3.0);
        assert!(IntervalUnion::single(2.0, 1.0).is_err());
    }

    #[test]
    fn regions_stay_inside_the_window() {
        let space = BaseSpace::desk();
        assert!(Region::interval(&space, -1.0, 2.0).is_err());
        assert!(Region::interval(&space, 0.0, 2.0).unwrap().contains(&[1.0]));
    }

    #[test]
    fn dyadic_boxes_shrink_around_point() {
        let layout = CellLayout::new(BaseSpace::desk(), 10).unwrap();
        assert_eq!(layout.dyadic_box(&[3.3], 0).unwrap(), vec![(3.0, 4.0)]);
        assert_eq!(layout.dyadic_box(&[3.3], 1).unwrap(), vec![(3.0, 3.5)]);
        assert_eq!(layout.dyadic_box(&[3.3], 2).unwrap(), vec![(3.25, 3.5)]);
    }

    #[test]
    fn pattern_basics() {
        let p = PointPattern::line(&[1.0, 2.0, 1.0]);
        assert_eq!(p.len(), 3);
        assert!(p.has_duplicates());
        assert_eq!(p.permuted(&[2, 0, 1]).to_vecs(), vec![vec![1.0], vec![1.0], vec![2.0]]);
        assert!(PointPattern::empty(1).is_empty());
        assert!(PointPattern::from_points(2, &[vec![1.0]]).is_err());
    }
}
