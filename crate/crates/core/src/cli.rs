//! Batch commands behind the `ppinfo` binary.
//!
//! Each command takes a parsed [`RunConfig`] and returns its JSON output.
//! Object keys are emitted in sorted order and floats in shortest
//! round-trip form, so equal inputs give byte-identical output. Dimensional
//! numbers are always written as `{"value": …, "unit_exponent": "p/q"}`.

use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::error::Error;
use crate::estimator::{c_sensitivity, map_estimate, set_map_estimate, MapEstimate};
use crate::info::{
    clark_igf, clark_igf_f_substituted, cumulant_functional, differential_entropy_report, entropy_moments_audit,
    kl_divergence, laplace_functional, mc_entropy, shannon_entropy_audit,
};
use crate::measure::prob_measure;
use crate::measure::PatternSet;
use crate::models::{ModelKind, PointPattern, PointProcessModel, Region};
use crate::pgfl::{janossy_from_pgfl, pgfl_eval, projection_from_pgfl, TestFunction};
use crate::units::Quantity;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Entropy,
    Kl,
    Map,
    CSweep,
    Audit,
    PgflCheck,
    Sample,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Entropy,
        Command::Kl,
        Command::Map,
        Command::CSweep,
        Command::Audit,
        Command::PgflCheck,
        Command::Sample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Entropy => "entropy",
            Command::Kl => "kl",
            Command::Map => "map",
            Command::CSweep => "c-sweep",
            Command::Audit => "audit",
            Command::PgflCheck => "pgfl-check",
            Command::Sample => "sample",
        }
    }

    pub fn from_name(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] Error),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

/// Parses `config_text` and runs `command`; `seed` overrides `mc.seed`.
/// Returns the JSON document, newline-terminated.
pub fn run(command: Command, config_text: &str, seed: Option<u64>) -> Result<String, CliError> {
    let mut cfg = RunConfig::parse(config_text)?;
    if let Some(s) = seed {
        cfg.mc.seed = s;
    }
    let out = match command {
        Command::Entropy => cmd_entropy(&cfg)?,
        Command::Kl => cmd_kl(&cfg)?,
        Command::Map => cmd_map(&cfg)?,
        Command::CSweep => cmd_c_sweep(&cfg)?,
        Command::Audit => cmd_audit(&cfg)?,
        Command::PgflCheck => cmd_pgfl_check(&cfg)?,
        Command::Sample => cmd_sample(&cfg)?,
    };
    let mut text = serde_json::to_string_pretty(&out).expect("JSON values serialize");
    text.push('\n');
    Ok(text)
}

fn quantity(q: Quantity) -> Value {
    json!({ "value": q.value(), "unit_exponent": q.unit().to_string() })
}

fn points(pattern: &PointPattern, model: &PointProcessModel) -> Value {
    json!({
        "coordinates": pattern.to_vecs(),
        "unit_exponent": model.space().coordinate_unit().to_string(),
    })
}

pub fn cmd_entropy(cfg: &RunConfig) -> Result<Value, CliError> {
    let model = cfg.model()?;
    let reference = cfg.reference()?;
    let grid = cfg.grid_for(&model)?;
    let de = differential_entropy_report(&model, &reference, &grid)?;
    let (mc_de, mc_stderr) = mc_entropy(&model, &reference, cfg.mc.samples, cfg.mc.seed)?;
    Ok(json!({
        "de": de.value,
        "excluded_mass": de.excluded_mass,
        "mc_de": mc_de,
        "mc_stderr": mc_stderr,
        "mc_samples": cfg.mc.samples,
        "seed": cfg.mc.seed,
        "c": quantity(reference.c()),
        "n_max": grid.n_max,
    }))
}

pub fn cmd_kl(cfg: &RunConfig) -> Result<Value, CliError> {
    let model = cfg.model()?;
    let model_0 = cfg.kl_reference_model()?;
    let grid = cfg.grid_for(&model)?;
    let kl = kl_divergence(&model, &model_0, &grid)?;
    Ok(json!({ "kl": kl, "n_max": grid.n_max }))
}

fn map_row(e: &MapEstimate, model: &PointProcessModel) -> Value {
    json!({
        "c": quantity(e.c_used),
        "n_hat": e.cardinality(),
        "points": points(&e.pattern, model),
        "cells": e.cells,
        "score": e.score,
    })
}

pub fn cmd_map(cfg: &RunConfig) -> Result<Value, CliError> {
    let model = cfg.model()?;
    let reference = cfg.reference()?;
    let grid = cfg.grid_for(&model)?;
    let e = map_estimate(&model, &reference, &grid)?;
    // errors out if the two forms pick different patterns
    set_map_estimate(&model, &reference, &grid)?;
    let mut row = map_row(&e, &model);
    row["set_form_agrees"] = json!(true);
    row["n_max"] = json!(grid.n_max);
    Ok(row)
}

pub fn cmd_c_sweep(cfg: &RunConfig) -> Result<Value, CliError> {
    let model = cfg.model()?;
    let grid = cfg.grid_for(&model)?;
    let s = c_sensitivity(&model, &grid, cfg.c_values()?)?;
    let guidance = match model.kind() {
        ModelKind::MultiBernoulli { components } if !components.is_empty() => {
            let w = model.space().measure();
            json!({
                "window_per_component": quantity(Quantity::new(w.value() / components.len() as f64, w.unit()).map_err(Error::from)?),
            })
        }
        _ => Value::Null,
    };
    Ok(json!({
        "rows": s.rows.iter().map(|r| map_row(&r.estimate, &model)).collect::<Vec<_>>(),
        "crossings": s
            .crossings
            .iter()
            .map(|c| json!({
                "c_star": quantity(c.c_star),
                "bracket": [c.bracket.0, c.bracket.1],
                "n_below": c.n_below,
                "n_above": c.n_above,
            }))
            .collect::<Vec<_>>(),
        "guidance": guidance,
        "n_max": grid.n_max,
    }))
}

pub fn cmd_audit(cfg: &RunConfig) -> Result<Value, CliError> {
    let model = cfg.model()?;
    let grid = cfg.grid_for(&model)?;
    let layout = model.layout();
    let mode = cfg.audit_mode();
    let alpha = cfg.audit.alpha;
    let h = cfg.audit_h(layout)?;
    let f = cfg.audit_f(layout)?;
    let mut reports = vec![
        serde_json::to_value(clark_igf(&model, &h, alpha, &grid, mode)?).expect("serializable"),
    ];
    if cfg.reference.is_some() {
        let reference = cfg.reference()?;
        let r = clark_igf_f_substituted(&model, &reference, &h, alpha, &grid, mode)?;
        reports.push(serde_json::to_value(r).expect("serializable"));
    }
    for r in [
        laplace_functional(&model, &f, alpha, &grid, mode)?,
        cumulant_functional(&model, &f, alpha, &grid, mode)?,
        shannon_entropy_audit(&model, &grid, mode)?,
        entropy_moments_audit(&model, cfg.audit.moment, &grid, mode)?,
    ] {
        reports.push(serde_json::to_value(r).expect("serializable"));
    }
    Ok(json!({
        "alpha": alpha.to_string(),
        "h": cfg.audit.h,
        "f": cfg.audit.f,
        "moment": cfg.audit.moment,
        "n_max": grid.n_max,
        "reports": reports,
    }))
}

/// Error of `approx` relative to `exact`; undefined (null) when the exact
/// value is zero, in which case only the absolute error is meaningful.
fn rel_error(approx: f64, exact: f64) -> Option<f64> {
    if approx == exact {
        Some(0.0)
    } else if exact == 0.0 {
        None
    } else {
        Some((approx - exact).abs() / exact.abs())
    }
}

pub fn cmd_pgfl_check(cfg: &RunConfig) -> Result<Value, CliError> {
    let model = cfg.model()?;
    let grid = cfg.grid_for(&model)?;
    let space = model.space().clone();
    let frac = |t: f64| -> Vec<f64> { space.bounds().iter().map(|&(lo, hi)| lo + t * (hi - lo)).collect() };
    let boxes: Vec<Region> = match &cfg.pgfl_check.boxes {
        Some(bs) => bs
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let corners: Vec<(f64, f64)> = b.iter().map(|a| (a[0], a[1])).collect();
                Region::boxed(&space, &corners).map_err(|e| ConfigError {
                    path: format!("pgfl_check.boxes[{i}]"),
                    message: e.to_string(),
                })
            })
            .collect::<Result<_, _>>()?,
        None => {
            let (a, b, c, d) = (frac(0.0), frac(0.1), frac(0.2), frac(0.3));
            let mk = |lo: &[f64], hi: &[f64]| {
                let corners: Vec<(f64, f64)> = lo.iter().zip(hi).map(|(&l, &h)| (l, h)).collect();
                Region::boxed(&space, &corners)
            };
            vec![mk(&a, &b)?, mk(&c, &d)?]
        }
    };
    let pts: Vec<Vec<f64>> = match &cfg.pgfl_check.points {
        Some(p) => p.clone(),
        None => vec![frac(0.345), frac(0.655)],
    };
    let d = space.dimension();

    let mut moyal = Vec::new();
    for k in 1..=boxes.len().min(2) {
        let regions = boxes[..k].to_vec();
        let from_pgfl = projection_from_pgfl(&model, &regions, &grid)?;
        let set = PatternSet::new().with_slice(regions)?;
        let direct = prob_measure(&model, &set, &grid)?;
        moyal.push(json!({
            "n": k,
            "from_pgfl": from_pgfl,
            "direct": direct,
            "abs_error": (from_pgfl - direct).abs(),
            "rel_error": rel_error(from_pgfl, direct),
        }));
    }
    let mut janossy = Vec::new();
    for k in 0..=pts.len().min(2) {
        let pattern = PointPattern::from_points(d, &pts[..k]).map_err(|e| ConfigError {
            path: "pgfl_check.points".into(),
            message: e.to_string(),
        })?;
        let from_pgfl = janossy_from_pgfl(&model, &pattern, &grid)?;
        let direct = model.janossy(&pattern)?;
        janossy.push(json!({
            "n": k,
            "from_pgfl": quantity(from_pgfl),
            "direct": quantity(direct),
            "abs_error": quantity(Quantity::new((from_pgfl.value() - direct.value()).abs(), direct.unit()).map_err(Error::from)?),
            "rel_error": rel_error(from_pgfl.value(), direct.value()),
        }));
    }
    let max_of = |rows: &[Value]| rows.iter().filter_map(|r| r["rel_error"].as_f64()).fold(0.0, f64::max);
    let moyal_max = max_of(&moyal);
    let janossy_max = max_of(&janossy);
    let one = TestFunction::constant(model.layout(), 1.0).map_err(CliError::Numerical)?;
    Ok(json!({
        "g_of_one": pgfl_eval(&model, &one, &grid)?,
        "moyal": moyal,
        "janossy": janossy,
        "moyal_max_rel_error": moyal_max,
        "janossy_max_rel_error": janossy_max,
        "max_rel_error": moyal_max.max(janossy_max),
        "n_max": grid.n_max,
    }))
}

pub fn cmd_sample(cfg: &RunConfig) -> Result<Value, CliError> {
    let model = cfg.model()?;
    let pattern = model.sample(cfg.mc.seed);
    Ok(json!({
        "seed": cfg.mc.seed,
        "n": pattern.len(),
        "points": points(&pattern, &model),
    }))
}
