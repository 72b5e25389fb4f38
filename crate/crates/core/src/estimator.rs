//! MAP estimation of a point pattern and its dependence on `c`.
//!
//! The score of an `n`-point pattern is `f_Φ = c^n p^(n)`. Within one slice
//! `c^n` is constant, so the best tuple does not depend on `c`. Candidate
//! points are cell midpoints and a pattern uses each cell at most once.
//! Scores are compared in log space; values within [`TIE_TOLERANCE`]
//! (relative) are ties, resolved toward smaller `n` and then toward the
//! lexicographically smaller sorted cell list.

use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::measure::{pdf, QuadratureGrid, ReferenceMeasure, BRUTE_FORCE_BUDGET};
use crate::models::{PointPattern, PointProcessModel, SliceForm};
use crate::units::{Quantity, UnitExp};

/// Relative tolerance under which two log scores are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-12;
/// Target relative width of the bracket around a crossing point.
pub const CROSSING_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapEstimate {
    pub pattern: PointPattern,
    /// Grid cells of the pattern's points, ascending.
    pub cells: Vec<usize>,
    /// `f_Φ` at the estimate (unitless).
    pub score: f64,
    pub c_used: Quantity,
}

impl MapEstimate {
    pub fn cardinality(&self) -> usize {
        self.pattern.len()
    }
}

/// The set-indexed density `X ↦ n! · p^(n)(x_1, …, x_n)` (unit `ι^-n`).
pub struct SetDensityView<'a>(pub &'a PointProcessModel);

impl SetDensityView<'_> {
    pub fn eval(&self, set: &PointPattern) -> Result<Quantity> {
        let p = self.0.janossy(set)?;
        Ok(Quantity::new(
            p.value() * ln_factorial(set.len() as u64).exp(),
            p.unit(),
        )?)
    }

    fn ln_cells(&self, cells: &[usize]) -> f64 {
        ln_factorial(cells.len() as u64) + self.0.janossy_cells(cells).ln()
    }
}

/// Highest-density tuple of distinct cells in slice `n`, sorted ascending,
/// with its log Janossy density.
fn best_tuple(model: &PointProcessModel, n: usize) -> Result<Option<(Vec<usize>, f64)>> {
    let m = model.layout().len();
    if n > m {
        return Ok(None);
    }
    match model.slice_form(n) {
        SliceForm::Zero => Ok(None),
        SliceForm::Product { log_weight, slots } if slots.windows(2).all(|w| w[0] == w[1]) => {
            if n == 0 {
                return Ok(Some((Vec::new(), log_weight)));
            }
            let u = slots[0];
            let mut order: Vec<usize> = (0..m).filter(|&c| u[c] > 0.0).collect();
            if order.len() < n {
                return Ok(None);
            }
            // stable sort keeps smaller indices first among equal values
            order.sort_by(|&a, &b| u[b].total_cmp(&u[a]));
            let mut cells = order[..n].to_vec();
            // cells tied with the n-th value: prefer the smallest indices
            let cutoff = u[cells[n - 1]];
            let above: Vec<usize> = cells.iter().copied().filter(|&c| !ties(u[c].ln(), cutoff.ln())).collect();
            let mut tied: Vec<usize> = (0..m).filter(|&c| u[c] > 0.0 && ties(u[c].ln(), cutoff.ln())).collect();
            tied.sort_unstable();
            cells = above;
            cells.extend(tied.into_iter().take(n - cells.len()));
            cells.sort_unstable();
            let log_p = log_weight + cells.iter().map(|&c| u[c].ln()).sum::<f64>();
            Ok(Some((cells, log_p)))
        }
        _ => {
            let work = binomial_count(m, n);
            if work > BRUTE_FORCE_BUDGET {
                return Err(Error::QuadratureBudget {
                    n,
                    work,
                    budget: BRUTE_FORCE_BUDGET,
                });
            }
            let mut best: Option<(Vec<usize>, f64)> = None;
            let mut comb: Vec<usize> = (0..n).collect();
            loop {
                let p = model.janossy_cells(&comb);
                if p > 0.0 {
                    let lp = p.ln();
                    if best.as_ref().is_none_or(|(_, b)| lp > *b && !ties(lp, *b)) {
                        best = Some((comb.clone(), lp));
                    }
                }
                if !next_combination(&mut comb, m) {
                    return Ok(best);
                }
            }
        }
    }
}

fn binomial_count(m: usize, n: usize) -> f64 {
    (ln_factorial(m as u64) - ln_factorial(n as u64) - ln_factorial((m - n) as u64)).exp()
}

/// Advances an increasing combination of `{0..m}` in lexicographic order.
fn next_combination(comb: &mut [usize], m: usize) -> bool {
    let n = comb.len();
    for i in (0..n).rev() {
        if comb[i] < m - n + i {
            comb[i] += 1;
            for j in i + 1..n {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Arg-max over slices of `objective(n, cells)`; ties go to the earlier `n`.
fn search(
    model: &PointProcessModel,
    grid: &QuadratureGrid,
    objective: impl Fn(usize, &[usize], f64) -> f64,
) -> Result<(Vec<usize>, f64)> {
    grid.check(model)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for n in 0..=grid.n_max {
        let Some((cells, log_p)) = best_tuple(model, n)? else {
            continue;
        };
        let score = objective(n, &cells, log_p);
        if best.as_ref().is_none_or(|(_, b)| score > *b && !ties(score, *b)) {
            best = Some((cells, score));
        }
    }
    best.ok_or_else(|| Error::InvalidModel("no cardinality up to n_max has positive density".into()))
}

fn estimate(model: &PointProcessModel, reference: &ReferenceMeasure, cells: Vec<usize>) -> Result<MapEstimate> {
    let d = model.space().dimension();
    let coords: Vec<Vec<f64>> = cells.iter().map(|&c| model.layout().midpoint(c)).collect();
    let pattern = PointPattern::from_points(d, &coords)?;
    Ok(MapEstimate {
        score: pdf(model, reference, &pattern)?,
        pattern,
        cells,
        c_used: reference.c(),
    })
}

/// `arg sup_{n, x} c^n p^(n)(x_1, …, x_n)` over distinct cell midpoints.
pub fn map_estimate(model: &PointProcessModel, reference: &ReferenceMeasure, grid: &QuadratureGrid) -> Result<MapEstimate> {
    let ln_c = reference.value().ln();
    let (cells, _) = search(model, grid, |n, _, log_p| n as f64 * ln_c + log_p)?;
    estimate(model, reference, cells)
}

/// `arg sup_X (c^|X| / |X|!) · f_Φ(X)` with the set density of
/// [`SetDensityView`]. The `n!` factors cancel, so the arg-max must match
/// [`map_estimate`]; a mismatch is reported as an error.
pub fn set_map_estimate(
    model: &PointProcessModel,
    reference: &ReferenceMeasure,
    grid: &QuadratureGrid,
) -> Result<MapEstimate> {
    let ln_c = reference.value().ln();
    let view = SetDensityView(model);
    let (cells, _) = search(model, grid, |n, cells, _| {
        n as f64 * ln_c - ln_factorial(n as u64) + view.ln_cells(cells)
    })?;
    let set_form = estimate(model, reference, cells)?;
    let direct = map_estimate(model, reference, grid)?;
    if set_form.cells != direct.cells {
        return Err(Error::EstimatorDisagreement(format!(
            "set form chose cells {:?}, tuple form chose {:?}",
            set_form.cells, direct.cells
        )));
    }
    Ok(set_form)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub c: Quantity,
    pub n_hat: usize,
    pub estimate: MapEstimate,
}

/// A value of `c` at which the MAP cardinality changes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub c_star: Quantity,
    /// Bracket `[lo, hi]` in the same unit as `c_star`.
    pub bracket: (f64, f64),
    pub n_below: usize,
    pub n_above: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sensitivity {
    pub rows: Vec<SweepRow>,
    pub crossings: Vec<Crossing>,
}

/// MAP estimates for each `c` (ascending) and the crossings between
/// neighbours with different cardinalities, refined by bisection on `log c`.
pub fn c_sensitivity(model: &PointProcessModel, grid: &QuadratureGrid, c_values: &[f64]) -> Result<Sensitivity> {
    let mut cs = c_values
        .iter()
        .map(|&c| ReferenceMeasure::new(c).map(|_| c))
        .collect::<Result<Vec<_>>>()?;
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    let n_hat = |c: f64| -> Result<usize> { Ok(map_estimate(model, &ReferenceMeasure::new(c)?, grid)?.cardinality()) };
    let mut rows = Vec::with_capacity(cs.len());
    for &c in &cs {
        let estimate = map_estimate(model, &ReferenceMeasure::new(c)?, grid)?;
        rows.push(SweepRow {
            c: estimate.c_used,
            n_hat: estimate.cardinality(),
            estimate,
        });
    }
    let mut crossings = Vec::new();
    for w in rows.windows(2) {
        let (n_lo, n_hi) = (w[0].n_hat, w[1].n_hat);
        if n_lo == n_hi {
            continue;
        }
        let (mut lo, mut hi) = (w[0].c.value(), w[1].c.value());
        while hi - lo > CROSSING_TOLERANCE * lo {
            let mid = (lo * hi).sqrt();
            if n_hat(mid)? == n_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mid = 0.5 * (lo + hi);
        crossings.push(Crossing {
            c_star: Quantity::new(mid, UnitExp::ONE)?,
            bracket: (lo, hi),
            n_below: n_lo,
            n_above: n_hat(hi)?,
        });
    }
    Ok(Sensitivity { rows, crossings })
}
