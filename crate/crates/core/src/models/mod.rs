//! Simple finite point-process models on a discretized window.
//!
//! Every spatial function (intensity, location pdf) is held piecewise
//! constant on the cells of a [`CellLayout`]; closed-form profiles are sampled
//! at cell midpoints when a model is built. Janossy densities follow the
//! ordered-tuple convention: `∫_{X^n} p^(n) = P(|Φ| = n)`.

mod sample;
pub mod space;

use std::sync::Arc;

use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::pgfl::TestFunction;
use crate::units::{convert_unit_system, Quantity, UnitExp};

pub use space::{BaseSpace, CellLayout, IntervalUnion, PointPattern, Region};

/// Largest component count for multi-Bernoulli models (bitmask recursions).
pub const MAX_COMPONENTS: usize = 16;

const PMF_TOLERANCE: f64 = 1e-10;
const PDF_TOLERANCE: f64 = 1e-6;

/// A nonnegative piecewise-constant function on the cells, unit `ι^-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    values: Arc<[f64]>,
    cumulative: Arc<[f64]>,
}

impl CellField {
    fn new(values: Vec<f64>, layout: &CellLayout) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::InvalidModel(format!(
                "field has {} cell values but the grid has {} cells",
                values.len(),
                layout.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidModel(format!(
                "field values must be finite and nonnegative, found {v}"
            )));
        }
        let vol = layout.cell_volume();
        let cumulative: Vec<f64> = values
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v * vol;
                Some(*acc)
            })
            .collect();
        Ok(CellField {
            values: values.into(),
            cumulative: cumulative.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∫ field dx` over the window (unitless when the field carries `ι^-1`).
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Cell whose cumulative mass first exceeds `u · total`.
    pub(crate) fn invert(&self, u: f64) -> usize {
        let target = u * self.total();
        let i = self.cumulative.partition_point(|&c| c <= target);
        i.min(self.values.len() - 1)
    }

    fn scaled(&self, s: f64, layout: &CellLayout) -> CellField {
        CellField::new(self.values.iter().map(|v| v * s).collect(), layout).expect("scaling keeps validity")
    }
}

/// One component of a multi-Bernoulli process.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliComponent {
    pub existence: f64,
    pub pdf: CellField,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// Intensity `λ(x)` (unit `ι^-1`); `Λ = ∫ λ` is the expected count.
    Poisson { intensity: CellField },
    /// `n ~ cardinality`, then points i.i.d. from `spatial`.
    IidCluster { cardinality: Vec<f64>, spatial: CellField },
    MultiBernoulli { components: Vec<BernoulliComponent> },
    /// `P(Φ = ∅) = 1`.
    EmptyOnly,
}

/// Shape of the `n`-point Janossy density on the grid.
#[derive(Debug)]
pub(crate) enum SliceForm<'a> {
    /// No mass on this slice.
    Zero,
    /// `p^(n)(x) = exp(log_weight) · ∏_j slots[j](x_j)`.
    Product { log_weight: f64, slots: Vec<&'a [f64]> },
    /// Anything else; evaluated pointwise.
    Mixture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointProcessModel {
    layout: CellLayout,
    kind: ModelKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Poisson,
    IidCluster,
    MultiBernoulli,
    EmptyOnly,
}

impl PointProcessModel {
    pub fn poisson(layout: CellLayout, intensity: Vec<f64>) -> Result<Self> {
        let intensity = CellField::new(intensity, &layout)?;
        Ok(PointProcessModel {
            layout,
            kind: ModelKind::Poisson { intensity },
        })
    }

    /// Poisson process with constant rate (unit `ι^-1`).
    pub fn poisson_constant(layout: CellLayout, rate: f64) -> Result<Self> {
        let n = layout.len();
        PointProcessModel::poisson(layout, vec![rate; n])
    }

    /// Poisson process with an intensity sampled at the cell midpoints.
    pub fn poisson_fn(layout: CellLayout, intensity: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = sample_midpoints(&layout, intensity);
        PointProcessModel::poisson(layout, values)
    }

    pub fn iid_cluster(layout: CellLayout, cardinality: Vec<f64>, spatial: Vec<f64>) -> Result<Self> {
        check_pmf(&cardinality)?;
        let spatial = normalized_pdf(spatial, &layout)?;
        Ok(PointProcessModel {
            layout,
            kind: ModelKind::IidCluster {
                cardinality,
                spatial,
            },
        })
    }

    /// Components as `(existence probability, location pdf per cell)`.
    pub fn multi_bernoulli(layout: CellLayout, components: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if components.len() > MAX_COMPONENTS {
            return Err(Error::InvalidModel(format!(
                "at most {MAX_COMPONENTS} components supported, got {}",
                components.len()
            )));
        }
        let components = components
            .into_iter()
            .map(|(q, pdf)| {
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::InvalidModel(format!(
                        "existence probability {q} outside [0, 1]"
                    )));
                }
                Ok(BernoulliComponent {
                    existence: q,
                    pdf: normalized_pdf(pdf, &layout)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PointProcessModel {
            layout,
            kind: ModelKind::MultiBernoulli { components },
        })
    }

    pub fn empty_only(layout: CellLayout) -> Self {
        PointProcessModel {
            layout,
            kind: ModelKind::EmptyOnly,
        }
    }

    pub fn layout(&self) -> &CellLayout {
        &self.layout
    }

    pub fn space(&self) -> &BaseSpace {
        self.layout.space()
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn tag(&self) -> ModelTag {
        match self.kind {
            ModelKind::Poisson { .. } => ModelTag::Poisson,
            ModelKind::IidCluster { .. } => ModelTag::IidCluster,
            ModelKind::MultiBernoulli { .. } => ModelTag::MultiBernoulli,
            ModelKind::EmptyOnly => ModelTag::EmptyOnly,
        }
    }

    /// Largest cardinality with positive probability, if bounded.
    pub fn max_cardinality(&self) -> Option<usize> {
        match &self.kind {
            ModelKind::Poisson { .. } => None,
            ModelKind::IidCluster { cardinality, .. } => {
                Some(cardinality.iter().rposition(|&p| p > 0.0).unwrap_or(0))
            }
            ModelKind::MultiBernoulli { components } => Some(components.len()),
            ModelKind::EmptyOnly => Some(0),
        }
    }

    /// `p_Φ^(|φ|)(φ)` with unit `ι^-|φ|`.
    pub fn janossy(&self, pattern: &PointPattern) -> Result<Quantity> {
        let cells = self.pattern_cells(pattern)?;
        let v = self.janossy_cells(&cells);
        Ok(Quantity::new(v, UnitExp::integer(-(cells.len() as i64)))?)
    }

    /// Validates `pattern` and maps its points to cells.
    pub(crate) fn pattern_cells(&self, pattern: &PointPattern) -> Result<Vec<usize>> {
        if pattern.dimension() != self.space().dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.space().dimension(),
                got: pattern.dimension(),
            });
        }
        let cells = pattern
            .points()
            .map(|x| self.layout.cell_of(x))
            .collect::<Result<Vec<_>>>()?;
        if pattern.has_duplicates() {
            return Err(Error::DuplicatePoints);
        }
        Ok(cells)
    }

    /// Numeric Janossy density at a tuple of cells. Cells are sorted first
    /// so the value is exactly permutation invariant.
    pub(crate) fn janossy_cells(&self, cells: &[usize]) -> f64 {
        let mut sorted = cells.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        match self.slice_form(n) {
            SliceForm::Zero => 0.0,
            SliceForm::Product { log_weight, slots } => {
                let prod: f64 = slots.iter().zip(&sorted).map(|(s, &c)| s[c]).product();
                log_weight.exp() * prod
            }
            SliceForm::Mixture => {
                let ModelKind::MultiBernoulli { components } = &self.kind else {
                    unreachable!("only multi-Bernoulli slices are mixtures")
                };
                let rows: Vec<Vec<f64>> = sorted
                    .iter()
                    .map(|&c| {
                        components
                            .iter()
                            .map(|k| k.existence * k.pdf.values()[c])
                            .collect()
                    })
                    .collect();
                assignment_sum(components, &rows) / ln_factorial(n as u64).exp()
            }
        }
    }

    pub(crate) fn slice_form(&self, n: usize) -> SliceForm<'_> {
        match &self.kind {
            ModelKind::Poisson { intensity } => {
                let total = intensity.total();
                if n > 0 && total == 0.0 {
                    return SliceForm::Zero;
                }
                SliceForm::Product {
                    log_weight: -total - ln_factorial(n as u64),
                    slots: vec![intensity.values(); n],
                }
            }
            ModelKind::IidCluster {
                cardinality,
                spatial,
            } => match cardinality.get(n) {
                Some(&p) if p > 0.0 => SliceForm::Product {
                    log_weight: p.ln(),
                    slots: vec![spatial.values(); n],
                },
                _ => SliceForm::Zero,
            },
            ModelKind::MultiBernoulli { components } => {
                if n > components.len() {
                    return SliceForm::Zero;
                }
                if n == 0 {
                    let w: f64 = components.iter().map(|c| 1.0 - c.existence).product();
                    return if w > 0.0 {
                        SliceForm::Product {
                            log_weight: w.ln(),
                            slots: Vec::new(),
                        }
                    } else {
                        SliceForm::Zero
                    };
                }
                if components.len() == 1 {
                    let c = &components[0];
                    return if c.existence > 0.0 {
                        SliceForm::Product {
                            log_weight: c.existence.ln(),
                            slots: vec![c.pdf.values()],
                        }
                    } else {
                        SliceForm::Zero
                    };
                }
                SliceForm::Mixture
            }
            ModelKind::EmptyOnly => {
                if n == 0 {
                    SliceForm::Product {
                        log_weight: 0.0,
                        slots: Vec::new(),
                    }
                } else {
                    SliceForm::Zero
                }
            }
        }
    }

    /// `∫_{X^n} ∏_j w_j(x_j) · p^(n)(x) dx` for per-cell slot weights
    /// `w_j` (unitless, any sign). The result is unitless.
    pub(crate) fn slice_linear(&self, weights: &[&[f64]]) -> f64 {
        let n = weights.len();
        let vol = self.layout.cell_volume();
        match self.slice_form(n) {
            SliceForm::Zero => 0.0,
            SliceForm::Product { log_weight, slots } => {
                let mut log_abs = log_weight;
                let mut negative = false;
                for (w, s) in weights.iter().zip(&slots) {
                    let integral: f64 = w.iter().zip(s.iter()).map(|(a, b)| a * b).sum::<f64>() * vol;
                    if integral == 0.0 {
                        return 0.0;
                    }
                    negative ^= integral < 0.0;
                    log_abs += integral.abs().ln();
                }
                let v = log_abs.exp();
                if negative {
                    -v
                } else {
                    v
                }
            }
            SliceForm::Mixture => {
                let ModelKind::MultiBernoulli { components } = &self.kind else {
                    unreachable!("only multi-Bernoulli slices are mixtures")
                };
                let rows: Vec<Vec<f64>> = weights
                    .iter()
                    .map(|w| {
                        components
                            .iter()
                            .map(|k| {
                                let s: f64 = w.iter().zip(k.pdf.values()).map(|(a, b)| a * b).sum();
                                k.existence * s * vol
                            })
                            .collect()
                    })
                    .collect();
                assignment_sum(components, &rows) / ln_factorial(n as u64).exp()
            }
        }
    }

    /// `P(|Φ| = n) = ∫_{X^n} p^(n)`.
    pub fn cardinality_pmf(&self, n: usize) -> f64 {
        match &self.kind {
            ModelKind::Poisson { intensity } => poisson_pmf(intensity.total(), n),
            ModelKind::IidCluster { cardinality, .. } => cardinality.get(n).copied().unwrap_or(0.0),
            ModelKind::EmptyOnly => f64::from(u8::from(n == 0)),
            ModelKind::MultiBernoulli { components } => {
                if n > components.len() {
                    return 0.0;
                }
                // Poisson-binomial recursion
                let mut dist = vec![0.0; components.len() + 1];
                dist[0] = 1.0;
                for (k, c) in components.iter().enumerate() {
                    for j in (0..=k + 1).rev() {
                        let stay = dist[j] * (1.0 - c.existence);
                        let add = if j > 0 { dist[j - 1] * c.existence } else { 0.0 };
                        dist[j] = stay + add;
                    }
                }
                dist[n]
            }
        }
    }

    /// `Σ_{n > n_max} P(|Φ| = n)`.
    pub fn tail_mass(&self, n_max: usize) -> f64 {
        match (&self.kind, self.max_cardinality()) {
            (_, Some(m)) => (n_max + 1..=m).map(|n| self.cardinality_pmf(n)).sum(),
            (ModelKind::Poisson { intensity }, None) => {
                let lambda = intensity.total();
                let mut sum = 0.0;
                let mut n = n_max + 1;
                loop {
                    let t = poisson_pmf(lambda, n);
                    sum += t;
                    if (n as f64) > lambda && (t <= sum * 1e-17 || t == 0.0) {
                        break sum;
                    }
                    n += 1;
                }
            }
            _ => unreachable!("only Poisson models have unbounded cardinality"),
        }
    }

    /// Smallest `n_max` whose cardinality tail mass is below `tolerance`.
    pub fn truncation_order(&self, tolerance: f64) -> usize {
        if let Some(m) = self.max_cardinality() {
            return (0..=m).find(|&n| self.tail_mass(n) < tolerance).unwrap_or(m);
        }
        let mut n = 0;
        while self.tail_mass(n) >= tolerance {
            n += 1;
        }
        n
    }

    /// `E|Φ|` truncated at `n_max`.
    pub fn mean_cardinality(&self, n_max: usize) -> f64 {
        (0..=n_max).map(|n| n as f64 * self.cardinality_pmf(n)).sum()
    }

    /// Closed-form p.g.fl. `G(h)`.
    pub fn pgfl_closed_form(&self, h: &TestFunction) -> Result<f64> {
        self.check_field_len(h.values().len())?;
        let vol = self.layout.cell_volume();
        let dot = |f: &CellField| -> f64 {
            h.values().iter().zip(f.values()).map(|(a, b)| a * b).sum::<f64>() * vol
        };
        Ok(match &self.kind {
            ModelKind::Poisson { intensity } => (dot(intensity) - intensity.total()).exp(),
            ModelKind::IidCluster {
                cardinality,
                spatial,
            } => {
                let s = dot(spatial);
                cardinality
                    .iter()
                    .enumerate()
                    .map(|(n, p)| p * s.powi(n as i32))
                    .sum()
            }
            ModelKind::MultiBernoulli { components } => components
                .iter()
                .map(|c| 1.0 - c.existence + c.existence * dot(&c.pdf))
                .product(),
            ModelKind::EmptyOnly => 1.0,
        })
    }

    pub(crate) fn check_field_len(&self, len: usize) -> Result<()> {
        if len != self.layout.len() {
            return Err(Error::GridMismatch {
                grid: len,
                model: self.layout.len(),
            });
        }
        Ok(())
    }

    /// The same process described in a unit system with `1ι = kι'`:
    /// coordinates stretch and every `ι^-1` field shrinks by `k`.
    pub fn relabel(&self, k: f64) -> PointProcessModel {
        let layout = self.layout.relabel(k);
        let density_scale = {
            let probe = Quantity::new(1.0, UnitExp::integer(-1)).expect("finite");
            convert_unit_system(probe, k).value()
        };
        let kind = match &self.kind {
            ModelKind::Poisson { intensity } => ModelKind::Poisson {
                intensity: intensity.scaled(density_scale, &layout),
            },
            ModelKind::IidCluster {
                cardinality,
                spatial,
            } => ModelKind::IidCluster {
                cardinality: cardinality.clone(),
                spatial: spatial.scaled(density_scale, &layout),
            },
            ModelKind::MultiBernoulli { components } => ModelKind::MultiBernoulli {
                components: components
                    .iter()
                    .map(|c| BernoulliComponent {
                        existence: c.existence,
                        pdf: c.pdf.scaled(density_scale, &layout),
                    })
                    .collect(),
            },
            ModelKind::EmptyOnly => ModelKind::EmptyOnly,
        };
        PointProcessModel { layout, kind }
    }
}

/// Uniform location pdf `1/λ_X(window)` on every cell.
pub fn uniform_pdf(layout: &CellLayout) -> Vec<f64> {
    vec![1.0 / layout.space().measure().value(); layout.len()]
}

/// Samples `f` at cell midpoints.
pub fn sample_midpoints(layout: &CellLayout, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..layout.len()).map(|c| f(&layout.midpoint(c))).collect()
}

/// Samples an unnormalized profile at midpoints and rescales it to a pdf
/// on the grid.
pub fn pdf_from_fn(layout: &CellLayout, f: impl Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
    let raw = sample_midpoints(layout, f);
    let total: f64 = raw.iter().sum::<f64>() * layout.cell_volume();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::InvalidModel("profile has no positive mass on the window".into()));
    }
    Ok(raw.into_iter().map(|v| v / total).collect())
}

/// Truncated Gaussian bump on the window, normalized on the grid.
pub fn gaussian_pdf(layout: &CellLayout, mean: &[f64], sd: f64) -> Result<Vec<f64>> {
    if mean.len() != layout.space().dimension() || !(sd > 0.0) {
        return Err(Error::InvalidModel("gaussian profile needs one mean per axis and sd > 0".into()));
    }
    pdf_from_fn(layout, |x| {
        let r2: f64 = x.iter().zip(mean).map(|(a, m)| (a - m) * (a - m)).sum();
        (-0.5 * r2 / (sd * sd)).exp()
    })
}

fn check_pmf(pmf: &[f64]) -> Result<()> {
    if pmf.is_empty() || pmf.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidModel("cardinality pmf must be nonempty and nonnegative".into()));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > PMF_TOLERANCE {
        return Err(Error::InvalidModel(format!("cardinality pmf sums to {total}, not 1")));
    }
    Ok(())
}

/// Validates that a per-cell pdf integrates to one on the grid (within
/// `PDF_TOLERANCE`) and removes the residual rounding.
fn normalized_pdf(values: Vec<f64>, layout: &CellLayout) -> Result<CellField> {
    let field = CellField::new(values, layout)?;
    let total = field.total();
    if (total - 1.0).abs() > PDF_TOLERANCE {
        return Err(Error::InvalidModel(format!(
            "location pdf integrates to {total} on the grid, not 1"
        )));
    }
    Ok(field.scaled(1.0 / total, layout))
}

pub(crate) fn poisson_pmf(lambda: f64, n: usize) -> f64 {
    if lambda == 0.0 {
        return f64::from(u8::from(n == 0));
    }
    (-lambda + n as f64 * lambda.ln() - ln_factorial(n as u64)).exp()
}

/// `Σ_σ ∏_j rows[j][σ(j)] · ∏_{i ∉ σ} (1 − q_i)` over injective maps σ from
/// slots to components.
fn assignment_sum(components: &[BernoulliComponent], rows: &[Vec<f64>]) -> f64 {
    let k = components.len();
    let n = rows.len();
    if n > k {
        return 0.0;
    }
    let full = 1usize << k;
    let mut dp = vec![0.0; full];
    dp[0] = 1.0;
    let mut total = 0.0;
    for mask in 0..full {
        let v = dp[mask];
        if v == 0.0 {
            continue;
        }
        let j = mask.count_ones() as usize;
        if j == n {
            let rest: f64 = (0..k)
                .filter(|i| mask & (1 << i) == 0)
                .map(|i| 1.0 - components[i].existence)
                .product();
            total += v * rest;
            continue;
        }
        for i in 0..k {
            if mask & (1 << i) == 0 {
                dp[mask | (1 << i)] += v * rows[j][i];
            }
        }
    }
    total
}

#[cfg(test)]
mod tests;
