//! Unit audit of entropy functionals written directly in Janossy densities.
//!
//! Each functional is expanded into its per-cardinality terms. Every term's
//! unit is derived with the checked arithmetic of [`crate::units`], and the
//! terms are then summed (or their logarithms taken) with the same checked
//! operations. A failure is not an error: it becomes the report's
//! [`Verdict`], with the offending terms listed.
//!
//! [`AuditMode::Nondimensionalized`] strips the units after moving to the
//! system with `1ι = kι'` and returns the bare number. That number changes
//! with `k` whenever the verdict is not [`Verdict::WellDefined`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::slice::{log_moment, power};
use crate::measure::{QuadratureGrid, ReferenceMeasure};
use crate::models::{CellLayout, PointProcessModel};
use crate::pgfl::TestFunction;
use crate::units::{
    checked_add, checked_exp, checked_log, convert_unit_system, mul, pow, Quantity, UnitError, UnitExp,
};

use super::MAX_MOMENT;

const UNDEFINED_NOTE: &str = "not a defined quantity: the value depends on the unit system";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "k", rename_all = "snake_case")]
pub enum AuditMode {
    /// Full unit tracking; undefined sums yield no value.
    Checked,
    /// Bare numbers in the unit system `1ι = kι'`.
    Nondimensionalized(f64),
}

impl AuditMode {
    fn validate(self) -> Result<Self> {
        match self {
            AuditMode::Nondimensionalized(k) if !(k.is_finite() && k > 0.0) => {
                Err(Error::InvalidArgument(format!("unit factor k must be positive, got {k}")))
            }
            m => Ok(m),
        }
    }

    fn k(self) -> f64 {
        match self {
            AuditMode::Checked => 1.0,
            AuditMode::Nondimensionalized(k) => k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    WellDefined,
    IncommensurableSum,
    DimensionalLog,
}

/// One cardinality's contribution to an audited functional.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditTerm {
    pub n: usize,
    /// Numeric value in the mode's unit system.
    pub value: f64,
    /// Unit exponent of the term; `None` when it contains an undefined log.
    pub unit_exponent: Option<UnitExp>,
    /// Unit exponent of the logarithm's argument, for log-type integrands.
    pub log_argument_unit: Option<UnitExp>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Offense {
    /// Two terms that cannot be added.
    Incommensurable {
        left_n: usize,
        left_unit: UnitExp,
        right_n: usize,
        right_unit: UnitExp,
    },
    /// A term whose integrand takes the log of a dimensional density.
    DimensionalLog { n: usize, unit: UnitExp },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub functional: String,
    pub mode: AuditMode,
    pub verdict: Verdict,
    pub terms: Vec<AuditTerm>,
    pub offending: Vec<Offense>,
    /// The sum, when one is produced: always in nondimensionalized mode,
    /// only for well-defined sums when checked.
    pub value: Option<Quantity>,
    pub excluded_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl AuditReport {
    /// The unitless value, if the functional is defined.
    pub fn defined_value(&self) -> Option<f64> {
        match (self.verdict, self.value) {
            (Verdict::WellDefined, Some(q)) => q.as_unitless(),
            _ => None,
        }
    }

    /// The bare number returned in nondimensionalized mode.
    pub fn raw_value(&self) -> Option<f64> {
        self.value.map(|q| q.value())
    }

    /// Exponents of the listed terms, in order.
    pub fn exponents(&self) -> Vec<Option<UnitExp>> {
        self.terms.iter().map(|t| t.unit_exponent).collect()
    }
}

/// A unitless nonnegative function on the grid (the `f` of `L(f)`).
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegFunction {
    values: Vec<f64>,
}

impl NonnegFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidTestFunction(format!("f must be finite and nonnegative, found {v}")));
        }
        Ok(NonnegFunction { values })
    }

    pub fn constant(layout: &CellLayout, v: f64) -> Result<Self> {
        NonnegFunction::new(vec![v; layout.len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `e^{-f}`, evaluated through the checked exponential.
    pub fn exp_neg(&self) -> Result<TestFunction> {
        let h = self
            .values
            .iter()
            .map(|&v| Ok(checked_exp(Quantity::unitless(-v)?)?.value()))
            .collect::<Result<Vec<_>>>()?;
        TestFunction::new(h)
    }
}

fn density_unit(n: usize) -> Quantity {
    Quantity::new(1.0, UnitExp::integer(-(n as i64))).expect("finite")
}

fn volume_element(n: usize) -> Quantity {
    Quantity::new(1.0, UnitExp::integer(n as i64)).expect("finite")
}

/// Cardinalities with positive probability up to `n_max`.
fn supported(model: &PointProcessModel, n_max: usize) -> impl Iterator<Item = usize> + '_ {
    (0..=n_max).filter(move |&n| model.cardinality_pmf(n) > 0.0)
}

/// Sums unit-carrying terms, recording every pair that refuses to add.
fn linear_report(functional: &str, mode: AuditMode, terms: Vec<(usize, Quantity)>, excluded_mass: f64) -> AuditReport {
    let k = mode.k();
    let mut offending = Vec::new();
    let mut acc: Option<(usize, Quantity)> = None;
    for &(n, q) in &terms {
        acc = match acc {
            None => Some((n, q)),
            Some((n0, a)) => match checked_add(a, q) {
                Ok(s) => Some((n0, s)),
                Err(UnitError::IncommensurableSum { left, right }) => {
                    offending.push(Offense::Incommensurable {
                        left_n: n0,
                        left_unit: left,
                        right_n: n,
                        right_unit: right,
                    });
                    Some((n0, a))
                }
                Err(e) => unreachable!("addition of finite quantities: {e}"),
            },
        };
    }
    let verdict = if offending.is_empty() {
        Verdict::WellDefined
    } else {
        Verdict::IncommensurableSum
    };
    let value = match mode {
        AuditMode::Checked => match verdict {
            Verdict::WellDefined => Some(acc.map(|(_, q)| q).unwrap_or_else(|| Quantity::unitless(0.0).expect("finite"))),
            _ => None,
        },
        AuditMode::Nondimensionalized(k) => {
            let raw: f64 = terms.iter().map(|(_, q)| convert_unit_system(*q, k).value()).sum();
            Some(Quantity::unitless(raw).expect("finite sum"))
        }
    };
    let note = (matches!(mode, AuditMode::Nondimensionalized(_)) && verdict != Verdict::WellDefined)
        .then(|| UNDEFINED_NOTE.to_string());
    AuditReport {
        functional: functional.to_string(),
        mode,
        verdict,
        terms: terms
            .iter()
            .map(|&(n, q)| AuditTerm {
                n,
                value: convert_unit_system(q, k).value(),
                unit_exponent: Some(q.unit()),
                log_argument_unit: None,
            })
            .collect(),
        offending,
        value,
        excluded_mass,
        note,
    }
}

/// `G^α(h) = Σ_n ∫ ∏h(x_i) · p^(n)(x)^{1−α} dx_1⋯dx_n`; term `n` carries
/// unit `ι^{nα}`.
pub fn clark_igf(
    model: &PointProcessModel,
    h: &TestFunction,
    alpha: UnitExp,
    grid: &QuadratureGrid,
    mode: AuditMode,
) -> Result<AuditReport> {
    clark_named("clark_igf", model, h, alpha, grid, mode)
}

fn clark_named(
    name: &str,
    model: &PointProcessModel,
    h: &TestFunction,
    alpha: UnitExp,
    grid: &QuadratureGrid,
    mode: AuditMode,
) -> Result<AuditReport> {
    let mode = mode.validate()?;
    grid.check(model)?;
    model.check_field_len(h.values().len())?;
    let beta = UnitExp::ONE - alpha;
    let mut terms = Vec::new();
    for n in supported(model, grid.n_max) {
        let v = power(model, n, h.values(), beta.to_f64())?;
        let unit = mul(pow(density_unit(n), beta)?, volume_element(n)).unit();
        terms.push((n, Quantity::new(v, unit)?));
    }
    Ok(linear_report(name, mode, terms, 0.0))
}

/// `G^α` with `f_Φ^{1−α} = (c^n p^(n))^{1−α}` in place of `p^(n)^{1−α}`:
/// the integrand is unitless, so term `n` carries `ι^n` for every `α`.
pub fn clark_igf_f_substituted(
    model: &PointProcessModel,
    reference: &ReferenceMeasure,
    h: &TestFunction,
    alpha: UnitExp,
    grid: &QuadratureGrid,
    mode: AuditMode,
) -> Result<AuditReport> {
    let mode = mode.validate()?;
    grid.check(model)?;
    model.check_field_len(h.values().len())?;
    let beta = UnitExp::ONE - alpha;
    let mut terms = Vec::new();
    for n in supported(model, grid.n_max) {
        let v = power(model, n, h.values(), beta.to_f64())?;
        let f = pow(mul(reference.power(n as i64), density_unit(n)), beta)?;
        let c_factor = reference.value().powf(n as f64 * beta.to_f64());
        let unit = mul(f, volume_element(n)).unit();
        terms.push((n, Quantity::new(v * c_factor, unit)?));
    }
    Ok(linear_report("clark_igf_f_substituted", mode, terms, 0.0))
}

/// `L^α(f) = G^α(e^{−f})`.
pub fn laplace_functional(
    model: &PointProcessModel,
    f: &NonnegFunction,
    alpha: UnitExp,
    grid: &QuadratureGrid,
    mode: AuditMode,
) -> Result<AuditReport> {
    clark_named("laplace_functional", model, &f.exp_neg()?, alpha, grid, mode)
}

/// `log L^α(f)`, taken with the checked logarithm. An undefined `L` stays
/// undefined; a dimensional one turns the verdict into a dimensional log.
pub fn cumulant_functional(
    model: &PointProcessModel,
    f: &NonnegFunction,
    alpha: UnitExp,
    grid: &QuadratureGrid,
    mode: AuditMode,
) -> Result<AuditReport> {
    let mut r = laplace_functional(model, f, alpha, grid, mode)?;
    r.functional = "cumulant_functional".into();
    let Some(l) = r.value else {
        return Ok(r);
    };
    match checked_log(l) {
        Ok(v) => r.value = Some(v),
        Err(UnitError::DimensionalLog { unit }) => {
            r.verdict = Verdict::DimensionalLog;
            let n = r.terms.first().map_or(0, |t| t.n);
            r.offending.push(Offense::DimensionalLog { n, unit });
            r.value = None;
        }
        Err(e) => return Err(e.into()),
    }
    Ok(r)
}

/// Per-slice `∫ (log p^(n))^m p^(n)` with `log` checked on the symbolic
/// density. In system `k` the density reads `p^(n) k^-n`.
fn log_report(
    functional: &str,
    model: &PointProcessModel,
    order: u32,
    sign: f64,
    grid: &QuadratureGrid,
    mode: AuditMode,
) -> Result<AuditReport> {
    let mode = mode.validate()?;
    grid.check(model)?;
    let ln_k = mode.k().ln();
    let mut terms = Vec::new();
    let mut offending = Vec::new();
    let mut excluded = 0.0;
    let mut total = 0.0;
    for n in supported(model, grid.n_max) {
        let s = log_moment(model, n, -(n as f64) * ln_k, order)?;
        excluded += s.excluded_mass;
        let value = sign * s.value + 0.0;
        total += value;
        let arg = density_unit(n);
        let unit_exponent = match checked_log(arg) {
            Ok(_) => Some(UnitExp::ZERO),
            Err(UnitError::DimensionalLog { unit }) => {
                offending.push(Offense::DimensionalLog { n, unit });
                None
            }
            Err(e) => return Err(e.into()),
        };
        terms.push(AuditTerm {
            n,
            value,
            unit_exponent,
            log_argument_unit: Some(arg.unit()),
        });
    }
    let verdict = if offending.is_empty() {
        Verdict::WellDefined
    } else {
        Verdict::DimensionalLog
    };
    let defined = verdict == Verdict::WellDefined;
    let value = match mode {
        AuditMode::Checked if !defined => None,
        _ => Some(Quantity::unitless(total)?),
    };
    let note = (matches!(mode, AuditMode::Nondimensionalized(_)) && !defined).then(|| UNDEFINED_NOTE.to_string());
    Ok(AuditReport {
        functional: functional.to_string(),
        mode,
        verdict,
        terms,
        offending,
        value,
        excluded_mass: excluded,
        note,
    })
}

/// `−Σ_n ∫ log p^(n) · p^(n) dx_1⋯dx_n`.
pub fn shannon_entropy_audit(model: &PointProcessModel, grid: &QuadratureGrid, mode: AuditMode) -> Result<AuditReport> {
    log_report("shannon_entropy", model, 1, -1.0, grid, mode)
}

/// `∫ (log p^(|φ|)(φ))^m P_Φ(dφ)` for `m ≤ 4`.
pub fn entropy_moments_audit(
    model: &PointProcessModel,
    m: u32,
    grid: &QuadratureGrid,
    mode: AuditMode,
) -> Result<AuditReport> {
    if m > MAX_MOMENT {
        return Err(Error::InvalidArgument(format!("moment order {m} exceeds {MAX_MOMENT}")));
    }
    log_report("entropy_moments", model, m, 1.0, grid, mode)
}
