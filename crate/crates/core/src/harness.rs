//! End-to-end pipeline, verification of given selections, and batch runs.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclid::derandomized_select;
use crate::generators::{generate, GenSpec};
use crate::maxnorm::{maxnorm_select, Fidelity, RoundRecord, WalkConfig, FINAL_CONSTANT};
use crate::model::{selection_norm, Coefficients, Instance, NormKind, Selection};
use crate::oracle::{brute_force_min, selection_count, OracleResult, ENUMERATION_BUDGET};
use crate::reduction::{extract_core, find_zero_vertex};
use crate::scalar::Scalar;

/// Slack on the Euclidean bound for the rounding error of the final sum.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BalanceConfig {
    pub walk: WalkConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    #[default]
    Success,
    BoundExceeded,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub achieved: f64,
    pub bound: f64,
    pub selection: Vec<usize>,
    pub k: usize,
    pub fractional: usize,
    pub rounds: usize,
    pub restarts: usize,
    pub steps: u64,
    pub seed: u64,
    pub mode: String,
    #[serde(skip)]
    pub status: Status,
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip)]
    pub telemetry: Vec<RoundRecord>,
}

impl BalanceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report fields serialize")
    }
}

/// `√d` for `ℓ2`, `48√d` for `ℓ∞`.
pub fn guaranteed_bound(norm: NormKind, d: usize) -> f64 {
    let root = (d as f64).sqrt();
    match norm {
        NormKind::Euclidean => root,
        NormKind::Maximum => FINAL_CONSTANT * root,
    }
}

fn within(achieved: f64, bound: f64) -> bool {
    achieved <= bound + BOUND_SLACK
}

/// Picks one vector per family of a feasible instance, in the instance's
/// norm.
///
/// A vertex `α` of the zero-sum polytope locks all but `k ≤ d` families;
/// the fractional part `α|_F` is rounded on `V|_F` and the two selections
/// are joined. The reported norm is recomputed from the raw vectors.
pub fn balance<T: Scalar>(
    inst: &Instance<T>,
    witness: Option<&Coefficients<T>>,
    cfg: &BalanceConfig,
) -> Result<BalanceReport> {
    let started = Instant::now();
    let alpha = find_zero_vertex(inst, witness)?;
    let core = extract_core(inst, &alpha)?;
    let half = T::of(0.5);

    let mut choices: Vec<Option<usize>> = (0..inst.n_families())
        .map(|i| {
            let r = inst.family_range(i);
            if core.free_families.binary_search(&i).is_ok() {
                None
            } else {
                alpha.as_slice()[r].iter().position(|&x| x > half)
            }
        })
        .collect();

    let mut report = BalanceReport {
        k: core.k,
        fractional: core.fractional.fractional.len(),
        seed: cfg.walk.seed,
        mode: cfg.walk.mode.as_str().to_string(),
        ..BalanceReport::default()
    };

    if !core.fractional.fractional.is_empty() {
        let restriction = inst.restrict(&core.fractional.fractional)?;
        let sub = &restriction.instance;
        let target = alpha.restrict(&core.fractional.fractional)?;
        let picked = match inst.norm() {
            NormKind::Euclidean => derandomized_select(sub, &target)?.0,
            NormKind::Maximum => {
                let (sel, stats) = maxnorm_select(sub, &target, &cfg.walk)?;
                report.rounds = stats.iteration.rounds.len();
                report.restarts = stats.iteration.restarts();
                report.steps = stats.iteration.steps();
                report.telemetry = stats.iteration.rounds;
                sel
            }
        };
        for (j, &family) in restriction.families.iter().enumerate() {
            let column = restriction.columns[sub.family_range(j).start + picked.choices[j]];
            choices[family] = Some(column - inst.family_range(family).start);
        }
    }

    let choices = choices
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or_else(|| Error::InvariantViolated(format!("family {i} received no member")))
        })
        .collect::<Result<Vec<_>>>()?;
    let selection = Selection::new(inst, choices)?;
    report.achieved = selection_norm(inst, &selection, None).to_f64_lossy();
    report.bound = guaranteed_bound(inst.norm(), inst.dim());
    report.selection = selection.choices;
    report.wall_time = started.elapsed();
    if !within(report.achieved, report.bound) {
        return Err(Error::BoundViolated {
            achieved: report.achieved,
            bound: report.bound,
        });
    }
    Ok(report)
}

/// Process exit status for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible => 2,
        Error::RestartsExhausted { .. } => 3,
        Error::InvalidInstance(_) | Error::OutsideBall { .. } | Error::LengthMismatch { .. } => 4,
        Error::IndexOutOfRange { .. } => 4,
        Error::BoundViolated { .. } => 5,
        _ => 1,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub report: BalanceReport,
    /// Present when the selection space is within the enumeration budget.
    pub oracle: Option<OracleResult<f64>>,
}

impl Verification {
    pub fn within_bound(&self) -> bool {
        within(self.report.achieved, self.report.bound)
    }
}

/// Recomputes the norm of a given selection and, for small instances,
/// the best achievable value.
pub fn verify<T: Scalar>(inst: &Instance<T>, selection: &Selection) -> Result<Verification> {
    let selection = Selection::new(inst, selection.choices.clone())?;
    let achieved = selection_norm(inst, &selection, None).to_f64_lossy();
    let bound = guaranteed_bound(inst.norm(), inst.dim());
    let report = BalanceReport {
        achieved,
        bound,
        selection: selection.choices,
        status: if within(achieved, bound) {
            Status::Success
        } else {
            Status::BoundExceeded
        },
        mode: "verify".into(),
        ..BalanceReport::default()
    };
    let oracle = if selection_count(inst) <= ENUMERATION_BUDGET as u128 {
        let r = brute_force_min(inst, None, inst.norm())?;
        Some(OracleResult {
            best_selection: r.best_selection,
            best_value: r.best_value.to_f64_lossy(),
            enumerated_count: r.enumerated_count,
        })
    } else {
        None
    };
    Ok(Verification { report, oracle })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchFile {
    #[serde(default)]
    pub mode: Fidelity,
    #[serde(default)]
    pub max_restarts: Option<usize>,
    pub specs: Vec<GenSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub kind: String,
    pub norm: String,
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub status: String,
    pub achieved: Option<f64>,
    pub bound: f64,
    pub ratio: Option<f64>,
    pub k: Option<usize>,
    pub fractional: Option<usize>,
    pub rounds: Option<usize>,
    pub restarts: Option<usize>,
    pub steps: Option<u64>,
    pub wall_ms: f64,
}

/// Generates and balances every spec, fanned out over the rayon pool.
/// Each instance is balanced with the spec's own seed. Failures become
/// rows with `status` set to the error message.
pub fn bench(specs: &[GenSpec], cfg: &BalanceConfig) -> Vec<BenchRow> {
    specs
        .par_iter()
        .map(|spec| {
            let started = Instant::now();
            let bound = guaranteed_bound(spec.norm, spec.d);
            let mut row = BenchRow {
                kind: spec.kind.to_string(),
                norm: spec.norm.to_string(),
                d: spec.d,
                n: spec.n,
                m: 0,
                seed: spec.seed,
                status: "ok".into(),
                achieved: None,
                bound,
                ratio: None,
                k: None,
                fractional: None,
                rounds: None,
                restarts: None,
                steps: None,
                wall_ms: 0.0,
            };
            let walk = WalkConfig {
                seed: spec.seed,
                ..cfg.walk
            };
            let outcome = generate::<f64>(spec).and_then(|(inst, w)| {
                row.n = inst.n_families();
                row.m = inst.len();
                balance(&inst, Some(&w), &BalanceConfig { walk })
            });
            match outcome {
                Ok(r) => {
                    row.achieved = Some(r.achieved);
                    row.ratio = Some(r.achieved / bound);
                    row.k = Some(r.k);
                    row.fractional = Some(r.fractional);
                    row.rounds = Some(r.rounds);
                    row.restarts = Some(r.restarts);
                    row.steps = Some(r.steps);
                }
                Err(e) => row.status = e.to_string(),
            }
            row.wall_ms = started.elapsed().as_secs_f64() * 1e3;
            row
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
