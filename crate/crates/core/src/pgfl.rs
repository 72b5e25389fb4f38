//! Probability generating functional, its chain differentials, and the
//! recovery of projection measures and Janossy densities from them.
//!
//! `G(h)` is evaluated as the truncated series `Σ_n ∫ ∏h(x_i) p^(n) dx`.
//! Differentials are numeric: central differences along `h ± εη` refined by
//! Richardson extrapolation. A Dirac direction `δ_x` is the limit of
//! `δG(h; 1_B) / λ_X(B)` over dyadic boxes `B ∋ x` shrinking inside the cell
//! holding `x`.

use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::measure::QuadratureGrid;
use crate::models::{CellLayout, PointPattern, PointProcessModel, Region};
use crate::units::{checked_add, mul, require_unitless, Quantity, UnitExp};

/// Richardson levels for both the `ε` ladder and the box ladder.
pub const RICHARDSON_LEVELS: usize = 4;
/// First step of the `ε` ladder; later steps halve it.
pub const INITIAL_STEP: f64 = 1e-2;
/// Allowed relative gap between the last two extrapolants.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-4;
/// Deepest nesting of differentials supported.
pub const MAX_ORDER: usize = 3;

/// Round-off of one series evaluation, in ulps of its absolute term sum.
const ROUNDING_SLACK: f64 = 32.0;
/// Multiple of the propagated round-off tolerated between extrapolants.
const NOISE_MARGIN: f64 = 8.0;

/// A unitless test function `h: X → [0, 1]`, constant on grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    values: Vec<f64>,
}

impl TestFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidTestFunction(format!("value {v} outside [0, 1]")));
        }
        Ok(TestFunction { values })
    }

    pub fn constant(layout: &CellLayout, v: f64) -> Result<Self> {
        TestFunction::new(vec![v; layout.len()])
    }

    /// `h` sampled at cell midpoints.
    pub fn from_fn(layout: &CellLayout, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        TestFunction::new((0..layout.len()).map(|c| f(&layout.midpoint(c))).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A direction for a chain differential.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    /// Arbitrary unitless per-cell values.
    Field(Vec<f64>),
    /// `1_B` for a region `B` of the window.
    Indicator(Region),
    /// `δ_x`, the density of the Dirac measure at `x`.
    Dirac(Vec<f64>),
}

/// A perturbation resolved against the grid.
enum Direction {
    Field(Vec<f64>),
    Dirac(Vec<(Vec<f64>, f64)>),
}

impl Direction {
    fn resolve(p: &Perturbation, layout: &CellLayout) -> Result<Direction> {
        match p {
            Perturbation::Field(v) => {
                if v.len() != layout.len() {
                    return Err(Error::GridMismatch {
                        grid: v.len(),
                        model: layout.len(),
                    });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidTestFunction("perturbation must be finite".into()));
                }
                Ok(Direction::Field(v.clone()))
            }
            Perturbation::Indicator(region) => Ok(Direction::Field(layout.coverage(region))),
            Perturbation::Dirac(x) => {
                let boxes = (0..RICHARDSON_LEVELS as u32)
                    .map(|level| {
                        let corners = layout.dyadic_box(x, level)?;
                        let region = Region::boxed(layout.space(), &corners)?;
                        Ok((layout.coverage(&region), region.measure().value()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Direction::Dirac(boxes))
            }
        }
    }
}

/// `G(h)` by the truncated series; each summand is checked to be unitless.
pub fn pgfl_eval(model: &PointProcessModel, h: &TestFunction, grid: &QuadratureGrid) -> Result<f64> {
    grid.check(model)?;
    model.check_field_len(h.values().len())?;
    let mut total = Quantity::unitless(0.0)?;
    for n in 0..=grid.n_max {
        let weights = vec![h.values(); n];
        let v = model.slice_linear(&weights);
        // ∏h (ι^0) · p^(n) (ι^-n) · dx_1⋯dx_n (ι^n)
        let term = mul(
            Quantity::new(v, UnitExp::integer(-(n as i64)))?,
            Quantity::new(1.0, UnitExp::integer(n as i64))?,
        );
        require_unitless(term)?;
        total = checked_add(total, term)?;
    }
    Ok(total.value())
}

/// The series on an arbitrary real field (used off `[0, 1]` by differences).
fn series(model: &PointProcessModel, h: &[f64], n_max: usize) -> Result<Estimate> {
    let mut total = 0.0;
    let mut magnitude = 0.0;
    for n in 0..=n_max {
        let t = model.slice_linear(&vec![h; n]);
        total += t;
        magnitude += t.abs();
    }
    if !total.is_finite() {
        return Err(Error::NonConvergent("p.g.fl. series overflowed".into()));
    }
    Ok(Estimate {
        value: total,
        noise: ROUNDING_SLACK * f64::EPSILON * magnitude,
    })
}

/// `δG(h; η)`. Unit `ι^-1` for a Dirac direction, unitless otherwise.
pub fn chain_differential(
    model: &PointProcessModel,
    h: &TestFunction,
    eta: &Perturbation,
    grid: &QuadratureGrid,
) -> Result<Quantity> {
    nth_differential(model, h, std::slice::from_ref(eta), grid)
}

/// `δ^n G(h; η_1, …, η_n)` with `δ^n F = δ(δ^{n-1} F)(h; η_n)` and
/// `δ^0 G = G`. Unit `ι^-k` where `k` counts the Dirac directions.
pub fn nth_differential(
    model: &PointProcessModel,
    h: &TestFunction,
    etas: &[Perturbation],
    grid: &QuadratureGrid,
) -> Result<Quantity> {
    if etas.len() > MAX_ORDER {
        return Err(Error::DifferentialOrder(etas.len()));
    }
    grid.check(model)?;
    model.check_field_len(h.values().len())?;
    let layout = model.layout();
    let dirs = etas
        .iter()
        .map(|e| Direction::resolve(e, layout))
        .collect::<Result<Vec<_>>>()?;
    let g = |x: &[f64]| series(model, x, grid.n_max);
    let value = nested(&g, h.values(), &dirs)?.value;
    let unit = etas
        .iter()
        .filter(|e| matches!(e, Perturbation::Dirac(_)))
        .fold(Quantity::new(value, UnitExp::ZERO)?, |acc, _| {
            mul(acc, Quantity::new(1.0, UnitExp::integer(-1)).expect("finite"))
        });
    Ok(unit)
}

/// A computed value with a bound on its accumulated round-off.
#[derive(Debug, Clone, Copy)]
struct Estimate {
    value: f64,
    noise: f64,
}

type Functional<'a> = dyn Fn(&[f64]) -> Result<Estimate> + 'a;

fn nested(f: &Functional<'_>, h: &[f64], dirs: &[Direction]) -> Result<Estimate> {
    match dirs.split_last() {
        None => f(h),
        Some((last, rest)) => {
            let inner = |x: &[f64]| nested(f, x, rest);
            match last {
                Direction::Field(eta) => directional(&inner, h, eta),
                Direction::Dirac(boxes) => {
                    let ratios = boxes
                        .iter()
                        .map(|(cov, measure)| {
                            let d = directional(&inner, h, cov)?;
                            Ok(Estimate {
                                value: d.value / measure,
                                noise: d.noise / measure,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    extrapolate(&ratios, 2.0, 1, "Dirac box limit")
                }
            }
        }
    }
}

/// Central-difference derivative of `f` at `h` along `eta`, extrapolated
/// over `ε_i = INITIAL_STEP · 2^-i`.
fn directional(f: &Functional<'_>, h: &[f64], eta: &[f64]) -> Result<Estimate> {
    if eta.iter().all(|&e| e == 0.0) {
        return Ok(Estimate { value: 0.0, noise: 0.0 });
    }
    let mut estimates = Vec::with_capacity(RICHARDSON_LEVELS);
    let mut plus = h.to_vec();
    let mut minus = h.to_vec();
    for i in 0..RICHARDSON_LEVELS {
        let eps = INITIAL_STEP / f64::from(1u32 << i);
        for (c, (&base, &e)) in h.iter().zip(eta).enumerate() {
            plus[c] = base + eps * e;
            minus[c] = base - eps * e;
        }
        let (a, b) = (f(&plus)?, f(&minus)?);
        let value = (a.value - b.value) / (2.0 * eps);
        estimates.push(Estimate {
            value,
            noise: (a.noise + b.noise) / (2.0 * eps) + f64::EPSILON * value.abs(),
        });
    }
    extrapolate(&estimates, 2.0, 2, "ε ladder")
}

/// Richardson table for a sequence at steps shrinking by `ratio`, with the
/// error expanding in powers `step^(order·j)`. Converged when the last two
/// diagonal entries agree to [`CONVERGENCE_TOLERANCE`] relative, or within
/// their propagated round-off.
fn extrapolate(seq: &[Estimate], ratio: f64, order: i32, what: &str) -> Result<Estimate> {
    let mut table: Vec<Vec<Estimate>> = Vec::with_capacity(seq.len());
    for (i, &s) in seq.iter().enumerate() {
        let mut row = vec![s];
        for j in 1..=i {
            let w = 1.0 / (ratio.powi(order * j as i32) - 1.0);
            let (a, b) = (row[j - 1], table[i - 1][j - 1]);
            row.push(Estimate {
                value: a.value + (a.value - b.value) * w,
                noise: a.noise * (1.0 + w) + b.noise * w,
            });
        }
        table.push(row);
    }
    let last = table.len() - 1;
    let best = table[last][last];
    if last > 0 {
        let prev = table[last - 1][last - 1];
        let gap = (best.value - prev.value).abs();
        let allowed = CONVERGENCE_TOLERANCE * best.value.abs().max(prev.value.abs())
            + NOISE_MARGIN * (best.noise + prev.noise);
        if gap > allowed {
            return Err(Error::NonConvergent(format!(
                "{what}: extrapolants {:e} and {:e} disagree",
                prev.value, best.value
            )));
        }
    }
    Ok(best)
}

/// `P^(n)(B_1 × … × B_n) = δ^n G(0; 1_{B_1}, …, 1_{B_n}) / n!`.
pub fn projection_from_pgfl(model: &PointProcessModel, regions: &[Region], grid: &QuadratureGrid) -> Result<f64> {
    let n = regions.len();
    let zero = TestFunction::constant(model.layout(), 0.0)?;
    let etas: Vec<Perturbation> = regions.iter().cloned().map(Perturbation::Indicator).collect();
    let d = nth_differential(model, &zero, &etas, grid)?;
    Ok(require_unitless(d)? / ln_factorial(n as u64).exp())
}

/// `p^(n)(x_1, …, x_n) = δ^n G(0; δ_{x_1}, …, δ_{x_n}) / n!` for `n ≤ 2`.
pub fn janossy_from_pgfl(model: &PointProcessModel, pattern: &PointPattern, grid: &QuadratureGrid) -> Result<Quantity> {
    let n = pattern.len();
    if n > 2 {
        return Err(Error::DifferentialOrder(n));
    }
    model.pattern_cells(pattern)?;
    let zero = TestFunction::constant(model.layout(), 0.0)?;
    let etas: Vec<Perturbation> = pattern.points().map(|x| Perturbation::Dirac(x.to_vec())).collect();
    let d = nth_differential(model, &zero, &etas, grid)?;
    let inv_fact = Quantity::unitless(1.0 / ln_factorial(n as u64).exp())?;
    Ok(mul(d, inv_fact))
}
