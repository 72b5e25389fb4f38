//! Nonlinear integrals over one slice `X^n` of a model's Janossy density.
//!
//! Product-form slices `w ∏_j u_j(x_j)` factor: `log p` is a sum of
//! independent slot terms and `p^β` is a product, so moments and powers
//! reduce to per-slot sums over cells. Other slices are integrated by
//! brute-force enumeration of cell tuples.

use statrs::function::factorial::binomial;

use super::BRUTE_FORCE_BUDGET;
use crate::error::{Error, Result};
use crate::models::{PointProcessModel, SliceForm};

/// Janossy values below this are dropped from log integrands.
pub(crate) const SUPPORT_FLOOR: f64 = 1e-300;

/// A slice integral plus the probability mass dropped by support restriction.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct SliceValue {
    pub value: f64,
    pub excluded_mass: f64,
}

/// `∫_{X^n} (log p^(n)(x) + shift)^order · p^(n)(x) dx`.
pub(crate) fn log_moment(model: &PointProcessModel, n: usize, shift: f64, order: u32) -> Result<SliceValue> {
    let vol = model.layout().cell_volume();
    match model.slice_form(n) {
        SliceForm::Zero => Ok(SliceValue::default()),
        SliceForm::Product { log_weight, slots } => {
            let mut log_mass = log_weight;
            let mut laws = Vec::with_capacity(n);
            for s in &slots {
                let (total, law) = slot_law(s, vol, |c| s[c].ln())?;
                log_mass += total.ln();
                laws.push(law);
            }
            let mass = log_mass.exp();
            if mass == 0.0 {
                return Ok(SliceValue::default());
            }
            let m = shifted_moment(&laws, log_weight + shift, order);
            Ok(SliceValue {
                value: mass * m,
                excluded_mass: 0.0,
            })
        }
        SliceForm::Mixture => {
            let mut out = SliceValue::default();
            for_each_tuple(model.layout().len(), n, |cells| {
                let p = model.janossy_cells(cells);
                let w = p * vol.powi(n as i32);
                if p < SUPPORT_FLOOR {
                    out.excluded_mass += w;
                } else {
                    out.value += w * (p.ln() + shift).powi(order as i32);
                }
                Ok(())
            })?;
            Ok(out)
        }
    }
}

/// `∫_{X^n} log(p1^(n)/p0^(n)) · p1^(n) dx`.
pub(crate) fn log_ratio(p1: &PointProcessModel, p0: &PointProcessModel, n: usize) -> Result<SliceValue> {
    let vol = p1.layout().cell_volume();
    match (p1.slice_form(n), p0.slice_form(n)) {
        (SliceForm::Zero, _) => Ok(SliceValue::default()),
        (_, SliceForm::Zero) => Err(Error::AbsoluteContinuityViolation { n }),
        (
            SliceForm::Product {
                log_weight: w1,
                slots: s1,
            },
            SliceForm::Product {
                log_weight: w0,
                slots: s0,
            },
        ) => {
            let mut log_mass = w1;
            let mut laws = Vec::with_capacity(n);
            for (a, b) in s1.iter().zip(&s0) {
                if a.iter().zip(b.iter()).any(|(&x, &y)| x > 0.0 && y == 0.0) {
                    return Err(Error::AbsoluteContinuityViolation { n });
                }
                let (total, law) = slot_law(a, vol, |c| (a[c] / b[c]).ln())?;
                log_mass += total.ln();
                laws.push(law);
            }
            let mass = log_mass.exp();
            if mass == 0.0 {
                return Ok(SliceValue::default());
            }
            Ok(SliceValue {
                value: mass * shifted_moment(&laws, w1 - w0, 1),
                excluded_mass: 0.0,
            })
        }
        _ => {
            let mut out = SliceValue::default();
            for_each_tuple(p1.layout().len(), n, |cells| {
                let a = p1.janossy_cells(cells);
                let w = a * vol.powi(n as i32);
                if a < SUPPORT_FLOOR {
                    out.excluded_mass += w;
                    return Ok(());
                }
                let b = p0.janossy_cells(cells);
                if b <= 0.0 {
                    return Err(Error::AbsoluteContinuityViolation { n });
                }
                out.value += w * (a / b).ln();
                Ok(())
            })?;
            Ok(out)
        }
    }
}

/// `∫_{X^n} ∏_j h(x_j) · p^(n)(x)^β dx`, restricted to where `p > 0`.
pub(crate) fn power(model: &PointProcessModel, n: usize, h: &[f64], beta: f64) -> Result<f64> {
    let vol = model.layout().cell_volume();
    match model.slice_form(n) {
        SliceForm::Zero => Ok(0.0),
        SliceForm::Product { log_weight, slots } => {
            let mut log_abs = beta * log_weight;
            for s in &slots {
                let integral: f64 = s
                    .iter()
                    .zip(h)
                    .filter(|(&u, _)| u > 0.0)
                    .map(|(&u, &hv)| hv * u.powf(beta))
                    .sum::<f64>()
                    * vol;
                if integral <= 0.0 {
                    return Ok(0.0);
                }
                log_abs += integral.ln();
            }
            Ok(log_abs.exp())
        }
        SliceForm::Mixture => {
            let mut acc = 0.0;
            for_each_tuple(model.layout().len(), n, |cells| {
                let p = model.janossy_cells(cells);
                if p >= SUPPORT_FLOOR {
                    let hw: f64 = cells.iter().map(|&c| h[c]).product();
                    acc += hw * p.powf(beta) * vol.powi(n as i32);
                }
                Ok(())
            })?;
            Ok(acc)
        }
    }
}

/// Normalized cell law `u·vol / ∫u` of one slot together with the value
/// `y(c)` attached to each charged cell. Returns `(∫u, law)`.
fn slot_law(u: &[f64], vol: f64, y: impl Fn(usize) -> f64) -> Result<(f64, Vec<(f64, f64)>)> {
    let total: f64 = u.iter().sum::<f64>() * vol;
    if !(total > 0.0) {
        return Ok((0.0, Vec::new()));
    }
    let law = u
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(c, &v)| (v * vol / total, y(c)))
        .collect();
    Ok((total, law))
}

/// `E[(a + Σ_j Y_j)^order]` for independent `Y_j` with the given laws.
///
/// Works with central moments of each slot to limit cancellation.
fn shifted_moment(laws: &[Vec<(f64, f64)>], a: f64, order: u32) -> f64 {
    let m = order as usize;
    let mut centre = a;
    let mut sum_central = vec![0.0; m + 1];
    sum_central[0] = 1.0;
    for law in laws {
        let mean: f64 = law.iter().map(|(p, y)| p * y).sum();
        let central: Vec<f64> = (0..=m)
            .map(|r| law.iter().map(|(p, y)| p * (y - mean).powi(r as i32)).sum())
            .collect();
        centre += mean;
        let mut next = vec![0.0; m + 1];
        for (r, slot) in next.iter_mut().enumerate() {
            *slot = (0..=r)
                .map(|i| binomial(r as u64, i as u64) * sum_central[i] * central[r - i])
                .sum();
        }
        sum_central = next;
    }
    (0..=m)
        .map(|r| binomial(m as u64, r as u64) * centre.powi((m - r) as i32) * sum_central[r])
        .sum()
}

/// Visits every tuple in `{0..cells}^n` in lexicographic order.
fn for_each_tuple(cells: usize, n: usize, mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    let work = (cells as f64).powi(n as i32);
    if work > BRUTE_FORCE_BUDGET {
        return Err(Error::QuadratureBudget {
            n,
            work,
            budget: BRUTE_FORCE_BUDGET,
        });
    }
    let mut idx = vec![0usize; n];
    loop {
        f(&idx)?;
        let mut j = n;
        loop {
            if j == 0 {
                return Ok(());
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < cells {
                break;
            }
            idx[j] = 0;
        }
    }
}
