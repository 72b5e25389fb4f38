//! Measure and integration on `X^∞ = ⊎_n X^n`.
//!
//! The reference measure `λ_c` weights the `n`-point slice by `c^-n`, which
//! makes every slice unitless and lets a single density `f_Φ = c^n p^(n)`
//! describe the whole process.

pub(crate) mod slice;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{BaseSpace, CellLayout, PointPattern, PointProcessModel, Region};
use crate::units::{checked_add, convert_unit_system, mul, pow, require_unitless, Quantity, UnitExp};

/// Tuple evaluations allowed for brute-force quadrature of one slice.
pub const BRUTE_FORCE_BUDGET: f64 = 2.0e7;

/// `λ_c` is fixed by a length-like constant `c > 0` with unit `ι`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceMeasure {
    c: Quantity,
}

impl ReferenceMeasure {
    pub fn new(c_value: f64) -> Result<Self> {
        if !(c_value.is_finite() && c_value > 0.0) {
            return Err(Error::InvalidReference(c_value));
        }
        Ok(ReferenceMeasure {
            c: Quantity::new(c_value, UnitExp::ONE)?,
        })
    }

    pub fn c(&self) -> Quantity {
        self.c
    }

    pub fn value(&self) -> f64 {
        self.c.value()
    }

    /// `c^n` as a quantity with unit `ι^n`.
    pub fn power(&self, n: i64) -> Quantity {
        pow(self.c, UnitExp::integer(n)).expect("c > 0")
    }

    /// `c` re-expressed with `1ι = kι'`; it is a physical length, so it moves
    /// with the unit system like everything else.
    pub fn relabel(&self, k: f64) -> ReferenceMeasure {
        ReferenceMeasure {
            c: convert_unit_system(self.c, k),
        }
    }
}

/// Discretization shared by all integrals over `X^∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureGrid {
    pub cells_per_axis: usize,
    pub n_max: usize,
    pub tail_tolerance: f64,
}

impl QuadratureGrid {
    pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;

    pub fn new(cells_per_axis: usize, n_max: usize, tail_tolerance: f64) -> Result<Self> {
        if cells_per_axis == 0 {
            return Err(Error::InvalidGrid("cells per axis must be positive".into()));
        }
        if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
            return Err(Error::InvalidGrid(format!(
                "tail tolerance must lie in (0, 1), got {tail_tolerance}"
            )));
        }
        Ok(QuadratureGrid {
            cells_per_axis,
            n_max,
            tail_tolerance,
        })
    }

    /// Grid matching `model`'s cells with the smallest admissible `n_max`.
    pub fn for_model(model: &PointProcessModel, tail_tolerance: f64) -> Result<Self> {
        let g = QuadratureGrid::new(model.layout().cells_per_axis(), 0, tail_tolerance)?;
        Ok(QuadratureGrid {
            n_max: model.truncation_order(tail_tolerance),
            ..g
        })
    }

    /// Checks the grid against a model: same cells, negligible tail.
    pub fn check(&self, model: &PointProcessModel) -> Result<()> {
        let cells = model.layout().cells_per_axis();
        if cells != self.cells_per_axis {
            return Err(Error::GridMismatch {
                grid: self.cells_per_axis,
                model: cells,
            });
        }
        let tail = model.tail_mass(self.n_max);
        if tail >= self.tail_tolerance {
            return Err(Error::TruncationTooShort {
                n_max: self.n_max,
                tail,
                tolerance: self.tail_tolerance,
            });
        }
        Ok(())
    }
}

/// A possibly infinite value of `λ_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum MeasureValue {
    Finite(f64),
    Infinite,
}

impl MeasureValue {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            MeasureValue::Finite(v) => Some(v),
            MeasureValue::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
enum SliceSelection {
    /// Every slice `X^n`, `n ≥ 1`, in full.
    All(Region),
    /// Listed slices, each a product `B_1 × … × B_n`.
    Listed(BTreeMap<usize, Vec<Region>>),
}

/// A measurable subset of `X^∞` built from per-slice products of regions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternSet {
    contains_empty: bool,
    slices: SliceSelection,
}

impl Default for PatternSet {
    fn default() -> Self {
        PatternSet::new()
    }
}

impl PatternSet {
    /// The empty subset.
    pub fn new() -> Self {
        PatternSet {
            contains_empty: false,
            slices: SliceSelection::Listed(BTreeMap::new()),
        }
    }

    /// All of `X^∞`.
    pub fn everything(space: &BaseSpace) -> Self {
        PatternSet {
            contains_empty: true,
            slices: SliceSelection::All(Region::whole(space)),
        }
    }

    /// `{∅}`.
    pub fn empty_pattern() -> Self {
        PatternSet::new().with_empty()
    }

    pub fn with_empty(mut self) -> Self {
        self.contains_empty = true;
        self
    }

    /// Adds the slice `regions[0] × … × regions[n-1]` with `n = regions.len()`.
    pub fn with_slice(mut self, regions: Vec<Region>) -> Result<Self> {
        let n = regions.len();
        if n == 0 {
            return Err(Error::InvalidRegion("use with_empty for the 0-point slice".into()));
        }
        match &mut self.slices {
            SliceSelection::All(_) => {
                return Err(Error::InvalidRegion("set already contains every slice".into()))
            }
            SliceSelection::Listed(map) => {
                if map.insert(n, regions).is_some() {
                    return Err(Error::InvalidRegion(format!("slice {n} given twice")));
                }
            }
        }
        Ok(self)
    }

    /// Adds the full slice `X^n`.
    pub fn with_full_slice(self, space: &BaseSpace, n: usize) -> Result<Self> {
        self.with_slice(vec![Region::whole(space); n])
    }

    pub fn contains_empty(&self) -> bool {
        self.contains_empty
    }

    /// Regions of slice `n ≥ 1`, or `None` if the set misses that slice.
    pub fn slice(&self, n: usize) -> Option<Vec<&Region>> {
        match &self.slices {
            SliceSelection::All(w) => (n >= 1).then(|| vec![w; n]),
            SliceSelection::Listed(map) => map.get(&n).map(|r| r.iter().collect()),
        }
    }

    /// Slice indices `n ≥ 1` present in the set, truncated at `n_max`.
    pub fn slice_indices(&self, n_max: usize) -> Vec<usize> {
        match &self.slices {
            SliceSelection::All(_) => (1..=n_max).collect(),
            SliceSelection::Listed(map) => map.keys().copied().filter(|&n| n <= n_max).collect(),
        }
    }
}

/// `λ_c(B) = 1_B(∅) + Σ_{n≥1} λ_X^n(B ∩ X^n) / c^n`.
pub fn lambda_c(set: &PatternSet, reference: &ReferenceMeasure) -> Result<MeasureValue> {
    let empty = if set.contains_empty { 1.0 } else { 0.0 };
    match &set.slices {
        SliceSelection::All(window) => {
            // λ_X^n(X^n)/c^n = r^n; the exponent n·(1 − 1) vanishes for every n
            let ratio = require_unitless(mul(window.measure(), reference.power(-1)))?;
            if ratio >= 1.0 {
                Ok(MeasureValue::Infinite)
            } else {
                Ok(MeasureValue::Finite(empty + ratio / (1.0 - ratio)))
            }
        }
        SliceSelection::Listed(map) => {
            let mut total = Quantity::unitless(empty)?;
            for (&n, regions) in map {
                let volume = regions
                    .iter()
                    .map(Region::measure)
                    .fold(Quantity::unitless(1.0)?, mul);
                let term = mul(volume, reference.power(-(n as i64)));
                require_unitless(term)?;
                total = checked_add(total, term)?;
            }
            Ok(MeasureValue::Finite(total.value()))
        }
    }
}

/// A real function of point patterns, integrable slice by slice.
pub trait PatternFunction {
    fn eval(&self, pattern: &PointPattern) -> Result<Quantity>;

    /// Closed form of `∫_{B_1×…×B_n} g dx_1⋯dx_n` given the fraction of each
    /// cell covered by every `B_j`. Returns `None` to fall back to
    /// tensor-product midpoint quadrature.
    fn slice_integral(&self, _layout: &CellLayout, _coverage: &[Vec<f64>]) -> Option<Result<Quantity>> {
        None
    }
}

impl<F> PatternFunction for F
where
    F: Fn(&PointPattern) -> Result<Quantity>,
{
    fn eval(&self, pattern: &PointPattern) -> Result<Quantity> {
        self(pattern)
    }
}

/// `φ ↦ p_Φ^(|φ|)(φ)`.
pub struct JanossyFunction<'a>(pub &'a PointProcessModel);

impl PatternFunction for JanossyFunction<'_> {
    fn eval(&self, pattern: &PointPattern) -> Result<Quantity> {
        self.0.janossy(pattern)
    }

    fn slice_integral(&self, _layout: &CellLayout, coverage: &[Vec<f64>]) -> Option<Result<Quantity>> {
        let n = coverage.len() as i64;
        let weights: Vec<&[f64]> = coverage.iter().map(Vec::as_slice).collect();
        let v = self.0.slice_linear(&weights);
        Some(density_slice_term(v, UnitExp::integer(-n), n))
    }
}

/// `φ ↦ f_Φ(φ) = c^|φ| p_Φ^(|φ|)(φ)`.
pub struct PdfFunction<'a> {
    pub model: &'a PointProcessModel,
    pub reference: ReferenceMeasure,
}

impl PatternFunction for PdfFunction<'_> {
    fn eval(&self, pattern: &PointPattern) -> Result<Quantity> {
        Ok(Quantity::unitless(pdf(self.model, &self.reference, pattern)?)?)
    }

    fn slice_integral(&self, _layout: &CellLayout, coverage: &[Vec<f64>]) -> Option<Result<Quantity>> {
        let n = coverage.len() as i64;
        let weights: Vec<&[f64]> = coverage.iter().map(Vec::as_slice).collect();
        let p = self.model.slice_linear(&weights);
        let f = mul(self.reference.power(n), Quantity::new(1.0, UnitExp::integer(-n)).expect("finite"));
        Some(density_slice_term(p * f.value(), f.unit(), n))
    }
}

/// Pairs an integrated value with the unit of `integrand · dx_1⋯dx_n`.
fn density_slice_term(value: f64, integrand_unit: UnitExp, n: i64) -> Result<Quantity> {
    let volume_element = Quantity::new(1.0, UnitExp::integer(n))?;
    Ok(mul(Quantity::new(value, integrand_unit)?, volume_element))
}

/// `∫_B g dλ_c = g(∅)·1_B(∅) + Σ_{n=1}^{n_max} c^-n ∫_{B∩X^n} g dx_1⋯dx_n`.
pub fn integrate(
    g: &dyn PatternFunction,
    set: &PatternSet,
    reference: &ReferenceMeasure,
    layout: &CellLayout,
    grid: &QuadratureGrid,
) -> Result<Quantity> {
    integrate_with(g, set, Some(reference), layout, grid)
}

/// `Σ_n ∫_{B∩X^n} g dx_1⋯dx_n` against the product base measures directly,
/// with no reference constant. With `g = p^(n)` this is `P_Φ(B)`.
pub fn integrate_base(
    g: &dyn PatternFunction,
    set: &PatternSet,
    layout: &CellLayout,
    grid: &QuadratureGrid,
) -> Result<Quantity> {
    integrate_with(g, set, None, layout, grid)
}

fn integrate_with(
    g: &dyn PatternFunction,
    set: &PatternSet,
    reference: Option<&ReferenceMeasure>,
    layout: &CellLayout,
    grid: &QuadratureGrid,
) -> Result<Quantity> {
    if layout.cells_per_axis() != grid.cells_per_axis {
        return Err(Error::GridMismatch {
            grid: grid.cells_per_axis,
            model: layout.cells_per_axis(),
        });
    }
    let mut terms = Vec::new();
    if set.contains_empty() {
        terms.push(g.eval(&PointPattern::empty(layout.space().dimension()))?);
    }
    for n in set.slice_indices(grid.n_max) {
        let regions = set.slice(n).expect("listed slice");
        let coverage: Vec<Vec<f64>> = regions.iter().map(|r| layout.coverage(r)).collect();
        let integral = match g.slice_integral(layout, &coverage) {
            Some(r) => r?,
            None => midpoint_slice(g, layout, &coverage)?,
        };
        let term = match reference {
            Some(r) => mul(r.power(-(n as i64)), integral),
            None => integral,
        };
        terms.push(term);
    }
    let mut it = terms.into_iter();
    let first = it.next().unwrap_or(Quantity::unitless(0.0)?);
    it.try_fold(first, |acc, t| checked_add(acc, t).map_err(Error::from))
}

/// Tensor-product midpoint rule over one slice. A cell repeated `r` times in
/// a tuple is split into `r` strips along the first axis so the evaluation
/// points stay distinct.
fn midpoint_slice(g: &dyn PatternFunction, layout: &CellLayout, coverage: &[Vec<f64>]) -> Result<Quantity> {
    let n = coverage.len();
    let support: Vec<Vec<(usize, f64)>> = coverage
        .iter()
        .map(|cov| {
            cov.iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(c, &w)| (c, w * layout.cell_volume()))
                .collect()
        })
        .collect();
    let work: f64 = support.iter().map(|s| s.len() as f64).product();
    if work > BRUTE_FORCE_BUDGET {
        return Err(Error::QuadratureBudget {
            n,
            work,
            budget: BRUTE_FORCE_BUDGET,
        });
    }
    let d = layout.space().dimension();
    let volume_element = Quantity::new(1.0, UnitExp::integer(n as i64))?;
    if support.iter().any(Vec::is_empty) {
        return Ok(volume_element * Quantity::unitless(0.0)?);
    }
    let mut acc: Option<Quantity> = None;
    let mut idx = vec![0usize; n];
    let mut coords = vec![0.0; n * d];
    loop {
        let cells: Vec<usize> = (0..n).map(|j| support[j][idx[j]].0).collect();
        let weight: f64 = (0..n).map(|j| support[j][idx[j]].1).product();
        for j in 0..n {
            let mut x = layout.midpoint(cells[j]);
            let reps = cells.iter().filter(|&&c| c == cells[j]).count();
            if reps > 1 {
                let rank = cells[..j].iter().filter(|&&c| c == cells[j]).count();
                let (lo, hi) = layout.cell_box(cells[j])[0];
                x[0] = lo + (hi - lo) * (rank as f64 + 0.5) / reps as f64;
            }
            coords[j * d..(j + 1) * d].copy_from_slice(&x);
        }
        let value = g.eval(&PointPattern::from_flat(d, coords.clone()))?;
        let term = mul(Quantity::new(value.value() * weight, value.unit())?, volume_element);
        acc = Some(match acc {
            None => term,
            Some(a) => checked_add(a, term)?,
        });
        // odometer
        let mut j = n;
        loop {
            if j == 0 {
                return Ok(acc.expect("at least one tuple"));
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < support[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// The unitless density `f_Φ(φ) = c^|φ| · p_Φ^(|φ|)(φ)` of `P_Φ` w.r.t. `λ_c`.
pub fn pdf(model: &PointProcessModel, reference: &ReferenceMeasure, pattern: &PointPattern) -> Result<f64> {
    let p = model.janossy(pattern)?;
    let f = mul(reference.power(pattern.len() as i64), p);
    Ok(require_unitless(f)?)
}

/// `P_Φ(B) = Σ_n ∫_{B∩X^n} p^(n) dx_1⋯dx_n`; no reference constant enters.
pub fn prob_measure(model: &PointProcessModel, set: &PatternSet, grid: &QuadratureGrid) -> Result<f64> {
    grid.check(model)?;
    let layout = model.layout();
    let total = integrate_base(&JanossyFunction(model), set, layout, grid)?;
    Ok(require_unitless(total)?)
}

/// `∫_{X^∞} f_Φ dλ_c`, which is `1` up to the cardinality truncation.
pub fn total_mass(model: &PointProcessModel, reference: &ReferenceMeasure, grid: &QuadratureGrid) -> Result<f64> {
    grid.check(model)?;
    let g = PdfFunction {
        model,
        reference: *reference,
    };
    let q = integrate(&g, &PatternSet::everything(model.space()), reference, model.layout(), grid)?;
    Ok(require_unitless(q)?)
}
