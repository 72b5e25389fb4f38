//! Information functionals built on the unitless density `f_Φ`.
//!
//! Differential entropy uses `f_Φ = c^n p^(n)`, so every logarithm has a
//! unitless argument. KL divergence uses the ratio `p_1^(n)/p_0^(n)`, where
//! both the units and `c` cancel. The [`audit`] submodule evaluates formulas
//! that skip this step and reports where their units break.

pub mod audit;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::slice::{log_moment, log_ratio};
use crate::measure::{pdf, QuadratureGrid, ReferenceMeasure};
use crate::models::PointProcessModel;
use crate::units::{checked_log, mul, pow, Quantity, UnitExp};

pub use audit::{
    clark_igf, clark_igf_f_substituted, cumulant_functional, entropy_moments_audit, laplace_functional,
    shannon_entropy_audit, AuditMode, AuditReport, AuditTerm, NonnegFunction, Offense, Verdict,
};

/// Highest log-moment order supported.
pub const MAX_MOMENT: u32 = 4;

/// An integral over `X^∞` together with the probability mass left out by
/// support restriction (cells where the Janossy density underflows).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportedValue {
    pub value: f64,
    pub excluded_mass: f64,
}

/// `f_Φ` evaluated symbolically on slice `n`: `c^n · p^(n)` with `p^(n)`
/// carrying `ι^-n`. Fails unless the product is unitless.
fn pdf_log_argument(reference: &ReferenceMeasure, n: usize) -> Result<()> {
    let p = Quantity::new(1.0, UnitExp::integer(-(n as i64)))?;
    checked_log(mul(reference.power(n as i64), p))?;
    Ok(())
}

/// `∫ (log f_Φ)^m dP_Φ` by slices, with each log argument checked.
fn pdf_log_moment(
    model: &PointProcessModel,
    reference: &ReferenceMeasure,
    order: u32,
    grid: &QuadratureGrid,
) -> Result<SupportedValue> {
    grid.check(model)?;
    let ln_c = reference.value().ln();
    let mut out = SupportedValue {
        value: 0.0,
        excluded_mass: 0.0,
    };
    for n in 0..=grid.n_max {
        if model.cardinality_pmf(n) == 0.0 {
            continue;
        }
        pdf_log_argument(reference, n)?;
        let s = log_moment(model, n, n as f64 * ln_c, order)?;
        out.value += s.value;
        out.excluded_mass += s.excluded_mass;
    }
    if out.excluded_mass > grid.tail_tolerance {
        return Err(Error::NonpositiveDensity(format!(
            "density underflows on mass {:e}",
            out.excluded_mass
        )));
    }
    Ok(out)
}

/// `−∫ log f_Φ dP_Φ`, with the excluded mass reported.
pub fn differential_entropy_report(
    model: &PointProcessModel,
    reference: &ReferenceMeasure,
    grid: &QuadratureGrid,
) -> Result<SupportedValue> {
    let m = pdf_log_moment(model, reference, 1, grid)?;
    Ok(SupportedValue {
        value: -m.value + 0.0,
        ..m
    })
}

/// `h_c(Φ) = −Σ_n ∫ log(c^n p^(n)) p^(n) dx_1⋯dx_n`.
pub fn differential_entropy(model: &PointProcessModel, reference: &ReferenceMeasure, grid: &QuadratureGrid) -> Result<f64> {
    Ok(differential_entropy_report(model, reference, grid)?.value)
}

/// `∫ (log f_Φ)^m dP_Φ` for `m ≤ 4`. `m = 1` gives minus the entropy.
pub fn corrected_entropy_moments(
    model: &PointProcessModel,
    reference: &ReferenceMeasure,
    m: u32,
    grid: &QuadratureGrid,
) -> Result<f64> {
    if m > MAX_MOMENT {
        return Err(Error::InvalidArgument(format!("moment order {m} exceeds {MAX_MOMENT}")));
    }
    Ok(pdf_log_moment(model, reference, m, grid)?.value)
}

/// `D(P_1 ‖ P_0) = Σ_n ∫ log(p_1^(n)/p_0^(n)) p_1^(n) dx_1⋯dx_n`.
///
/// Both models must share the window and the grid. No reference constant
/// enters.
pub fn kl_divergence(model_1: &PointProcessModel, model_0: &PointProcessModel, grid: &QuadratureGrid) -> Result<f64> {
    if model_1.layout() != model_0.layout() {
        return Err(Error::SpaceMismatch);
    }
    grid.check(model_1)?;
    let mut total = 0.0;
    for n in 0..=grid.n_max {
        if model_1.cardinality_pmf(n) == 0.0 {
            continue;
        }
        let p = Quantity::new(1.0, UnitExp::integer(-(n as i64)))?;
        checked_log(mul(p, pow(p, UnitExp::integer(-1))?))?;
        total += log_ratio(model_1, model_0, n)?.value;
    }
    Ok(total)
}

/// Monte Carlo estimate of the entropy: mean and standard error of
/// `−log f_Φ(φ)` over `sample_count` realizations.
pub fn mc_entropy(
    model: &PointProcessModel,
    reference: &ReferenceMeasure,
    sample_count: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if sample_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo needs at least 2 samples, got {sample_count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Welford accumulation
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..sample_count {
        let phi = model.sample_with(&mut rng);
        let f = pdf(model, reference, &phi)?;
        if !(f > 0.0) {
            return Err(Error::NonpositiveDensity(format!("f = {f} at a sampled pattern")));
        }
        let v = -f.ln();
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (sample_count - 1) as f64;
    Ok((mean + 0.0, (var / sample_count as f64).sqrt()))
}
