//! Rounding a point of `Δ_U` to a selection in the maximum norm.
//!
//! [`skeleton_round`] moves `γ` to a point with at least half of its
//! coordinates at most `δ` while changing `Wγ` by at most `ω(m)` in every
//! row. [`iterate_skeleton`] repeats this on the coordinates that are still
//! large until each family has a single one left, and [`snap_to_vertex`]
//! rounds the result to the nearest selection vector.

mod params;
mod walk;

pub use params::{
    default_delta, faithful_conditions, omega, practical_epsilon, solve_epsilon, step_count,
    Fidelity, WalkConfig, WalkParams, DEFAULT_MAX_RESTARTS, K,
};
pub use walk::{GaussianWalk, StepOutcome, WalkState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Rng;
use crate::model::{Coefficients, Instance, Selection, BALL_SLACK, NONNEG_TOL};
use crate::scalar::{norm_inf, Scalar};

/// Family sums must survive a round to this accuracy.
const FAMILY_SUM_TOL: f64 = 1e-8;
/// Slack on recomputed slab offsets, which the walk checks exactly.
const RECOMPUTE_TOL: f64 = 1e-12;
/// Constant of the telescoped movement bounds.
pub const MOVEMENT_CONSTANT: f64 = 40.0;
/// Constant of the final bound, movement plus snapping.
pub const FINAL_CONSTANT: f64 = 48.0;

/// One line of walk telemetry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub m: usize,
    pub omega: f64,
    pub steps_taken: u64,
    pub restarts: usize,
    pub frozen_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonRound<T> {
    pub gamma: Coefficients<T>,
    pub params: WalkParams<T>,
    /// Steps over every run, failed ones included.
    pub steps: u64,
    /// Failed runs before the successful one.
    pub restarts: usize,
    /// Coordinates at most `δ` in the output.
    pub frozen: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationStats {
    pub delta: f64,
    pub rounds: Vec<RoundRecord>,
    /// `Σ_s ω(m(s))` over executed rounds.
    pub omega_sum: f64,
    /// `‖Uλ − Uμ̂‖∞`.
    pub movement: f64,
}

impl IterationStats {
    pub fn steps(&self) -> u64 {
        self.rounds.iter().map(|r| r.steps_taken).sum()
    }

    pub fn restarts(&self) -> usize {
        self.rounds.iter().map(|r| r.restarts).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MaxnormStats {
    pub iteration: IterationStats,
    /// `max_j |⟨μ − μ̂, U^j⟩|`.
    pub snap_error: f64,
    /// `‖Uλ − Uμ‖∞`.
    pub error: f64,
    pub bound: f64,
}

fn check_max_ball<T: Scalar>(inst: &Instance<T>) -> Result<()> {
    let limit = T::one() + T::tol(BALL_SLACK);
    for c in 0..inst.len() {
        let n = norm_inf(inst.column(c));
        if n > limit {
            return Err(Error::OutsideBall {
                column: c,
                norm: n.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

fn check_round_shape<T: Scalar>(inst: &Instance<T>) -> Result<()> {
    if let Some(i) = (0..inst.n_families()).find(|&i| inst.family_size(i) < 2) {
        return Err(Error::PreconditionViolated(format!(
            "family {i} has fewer than two members"
        )));
    }
    if inst.len() > 2 * inst.dim() {
        return Err(Error::PreconditionViolated(format!(
            "m = {} exceeds 2d = {}",
            inst.len(),
            2 * inst.dim()
        )));
    }
    Ok(())
}

/// One skeleton approximation step.
///
/// Returns `γ̂ ∈ Δ_W` with `‖Wγ − Wγ̂‖∞ ≤ ω(m)` and at least `⌈m/2⌉`
/// coordinates at most `δ`. Both are checked before returning; runs that
/// miss them are repeated with fresh randomness, `cfg.max_restarts` runs in
/// total.
pub fn skeleton_round<T: Scalar>(
    inst: &Instance<T>,
    gamma: &Coefficients<T>,
    cfg: &WalkConfig,
    rng: &mut Rng,
) -> Result<SkeletonRound<T>> {
    check_round_shape(inst)?;
    check_max_ball(inst)?;
    gamma.check_in(inst)?;
    let delta = cfg.resolve_delta(inst.dim(), inst.max_family_size());
    let params = WalkParams::resolve(cfg.mode, inst.len(), inst.dim(), delta)?;
    run_round(inst, gamma, params, cfg.max_restarts, rng)
}

/// [`skeleton_round`] without the simplex check: inside
/// [`iterate_skeleton`] the active coordinates of a family sum to less
/// than one.
fn run_round<T: Scalar>(
    inst: &Instance<T>,
    gamma: &Coefficients<T>,
    params: WalkParams<T>,
    max_restarts: usize,
    rng: &mut Rng,
) -> Result<SkeletonRound<T>> {
    let mut steps = 0u64;
    for run in 0..max_restarts {
        let mut walk = GaussianWalk::new(inst, gamma.as_slice(), params)?;
        let target = walk.target_frozen();
        let completed = loop {
            if walk.frozen_count() >= target {
                break true;
            }
            if walk.state().t >= params.steps {
                break false;
            }
            match walk.step(rng)? {
                StepOutcome::Moved => {}
                StepOutcome::Stuck => break true,
                StepOutcome::LeftRegion => break false,
            }
        };
        steps += walk.state().t;
        if completed && walk.succeeded() {
            let out = Coefficients::new(walk.into_state().gamma);
            let frozen = verify_round(inst, gamma, &out, &params)?;
            return Ok(SkeletonRound {
                gamma: out,
                params,
                steps,
                restarts: run,
                frozen,
            });
        }
    }
    Err(Error::RestartsExhausted { runs: max_restarts })
}

/// Re-checks both round guarantees from scratch and returns the number of
/// coordinates at most `δ`.
fn verify_round<T: Scalar>(
    inst: &Instance<T>,
    before: &Coefficients<T>,
    after: &Coefficients<T>,
    params: &WalkParams<T>,
) -> Result<usize> {
    let diff: Vec<T> = after
        .as_slice()
        .iter()
        .zip(before.as_slice())
        .map(|(&a, &b)| a - b)
        .collect();
    let moved = norm_inf(&inst.apply(&diff));
    if moved > params.omega + T::tol(RECOMPUTE_TOL) {
        return Err(Error::InvariantViolated(format!(
            "round moved {moved}, more than ω = {}",
            params.omega
        )));
    }
    for i in 0..inst.n_families() {
        let r = inst.family_range(i);
        let s: T = diff[r].iter().copied().sum();
        if s.abs() > T::tol(FAMILY_SUM_TOL) {
            return Err(Error::InvariantViolated(format!(
                "round changed the sum of family {i} by {s}"
            )));
        }
    }
    if let Some(c) = after
        .as_slice()
        .iter()
        .position(|&x| x < -T::tol(NONNEG_TOL))
    {
        return Err(Error::InvariantViolated(format!(
            "round left coordinate {c} negative"
        )));
    }
    let frozen = after
        .as_slice()
        .iter()
        .filter(|&&x| x <= params.delta)
        .count();
    if frozen < inst.len().div_ceil(2) {
        return Err(Error::InvariantViolated(format!(
            "only {frozen} of {} coordinates at most δ",
            inst.len()
        )));
    }
    Ok(frozen)
}

/// Coordinates above `δ` in families that have at least two of them.
fn active_set<T: Scalar>(inst: &Instance<T>, mu: &[T], delta: T) -> Vec<usize> {
    let mut active = Vec::new();
    for i in 0..inst.n_families() {
        let big: Vec<usize> = inst.family_range(i).filter(|&c| mu[c] > delta).collect();
        if big.len() >= 2 {
            active.extend(big);
        }
    }
    active
}

/// Skeleton rounds on the large coordinates until every family has exactly
/// one coordinate above `δ`.
///
/// Each round at least halves the active count, so the executed widths
/// telescope: `Σ_s ω(m(s)) ≤ 40√d`, and `≤ 40 √m √ln(4d/m)` for the
/// initial active count `m`. Both are asserted.
pub fn iterate_skeleton<T: Scalar>(
    inst: &Instance<T>,
    lambda: &Coefficients<T>,
    cfg: &WalkConfig,
    rng: &mut Rng,
) -> Result<(Coefficients<T>, IterationStats)> {
    let d = inst.dim();
    if inst.len() > 2 * d {
        return Err(Error::PreconditionViolated(format!(
            "m = {} exceeds 2d = {}",
            inst.len(),
            2 * d
        )));
    }
    check_max_ball(inst)?;
    lambda.check_in(inst)?;
    let delta_f = cfg.resolve_delta(d, inst.max_family_size());
    if delta_f * inst.max_family_size() as f64 >= 1.0 {
        return Err(Error::PreconditionViolated(format!(
            "δ = {delta_f} is not below 1/{}",
            inst.max_family_size()
        )));
    }
    let delta = T::of(delta_f);

    let mut mu = lambda.as_slice().to_vec();
    let mut stats = IterationStats {
        delta: delta_f,
        ..IterationStats::default()
    };
    let mut active = active_set(inst, &mu, delta);
    let initial_m = active.len();
    while !active.is_empty() {
        let restriction = inst.restrict(&active)?;
        let sub = &restriction.instance;
        let gamma = Coefficients::new(active.iter().map(|&c| mu[c]).collect());
        let params = WalkParams::resolve(cfg.mode, sub.len(), d, delta_f)?;
        let round = run_round(sub, &gamma, params, cfg.max_restarts, rng)?;
        for (&c, &x) in active.iter().zip(round.gamma.as_slice()) {
            mu[c] = x;
        }
        stats.omega_sum += params.omega.to_f64_lossy();
        stats.rounds.push(RoundRecord {
            round: stats.rounds.len(),
            m: active.len(),
            omega: params.omega.to_f64_lossy(),
            steps_taken: round.steps,
            restarts: round.restarts,
            frozen_count: round.frozen,
        });
        let next = active_set(inst, &mu, delta);
        if next.len() > active.len() / 2 {
            return Err(Error::InvariantViolated(format!(
                "active set went from {} to {}, not halved",
                active.len(),
                next.len()
            )));
        }
        active = next;
    }

    let mu_hat = Coefficients::new(mu);
    mu_hat.check_in_with(inst, T::tol(FAMILY_SUM_TOL))?;
    let diff: Vec<T> = mu_hat
        .as_slice()
        .iter()
        .zip(lambda.as_slice())
        .map(|(&a, &b)| a - b)
        .collect();
    stats.movement = norm_inf(&inst.apply(&diff)).to_f64_lossy();
    if stats.movement > stats.omega_sum + RECOMPUTE_TOL {
        return Err(Error::InvariantViolated(format!(
            "movement {} exceeds the executed widths {}",
            stats.movement, stats.omega_sum
        )));
    }
    if initial_m > 0 {
        let root_d = MOVEMENT_CONSTANT * (d as f64).sqrt();
        let m = initial_m as f64;
        let small_m = MOVEMENT_CONSTANT * m.sqrt() * (4.0 * d as f64 / m).ln().sqrt();
        if stats.omega_sum > root_d || stats.omega_sum > small_m {
            return Err(Error::BoundViolated {
                achieved: stats.omega_sum,
                bound: root_d.min(small_m),
            });
        }
    }
    Ok((mu_hat, stats))
}

/// Rounds every coefficient at most `δ` to 0 and the remaining one in each
/// family to 1.
///
/// The correction `χ = μ − μ̂` is checked against `|⟨χ, U^j⟩| ≤ 8d²δ`.
pub fn snap_to_vertex<T: Scalar>(
    inst: &Instance<T>,
    mu_hat: &Coefficients<T>,
    delta: T,
) -> Result<Selection> {
    if mu_hat.len() != inst.len() {
        return Err(Error::LengthMismatch {
            expected: inst.len(),
            got: mu_hat.len(),
        });
    }
    let x = mu_hat.as_slice();
    let mut choices = Vec::with_capacity(inst.n_families());
    for i in 0..inst.n_families() {
        let r = inst.family_range(i);
        let above: Vec<usize> = r.clone().filter(|&c| x[c] > delta).collect();
        if above.len() != 1 {
            return Err(Error::AmbiguousFamily {
                family: i,
                above: above.len(),
            });
        }
        choices.push(above[0] - r.start);
    }
    let selection = Selection { choices };
    let mu = selection.to_coefficients(inst);
    let chi: Vec<T> = mu.as_slice().iter().zip(x).map(|(&a, &b)| a - b).collect();
    let err = norm_inf(&inst.apply(&chi));
    let d = T::of(inst.dim() as f64);
    let bound = T::of(8.0) * d * d * delta;
    if err > bound {
        return Err(Error::BoundViolated {
            achieved: err.to_f64_lossy(),
            bound: bound.to_f64_lossy(),
        });
    }
    Ok(selection)
}

/// [`iterate_skeleton`] followed by [`snap_to_vertex`], with
/// `‖Uλ − Uμ‖∞ ≤ 48√d` asserted on the result.
pub fn maxnorm_select<T: Scalar>(
    inst: &Instance<T>,
    lambda: &Coefficients<T>,
    cfg: &WalkConfig,
) -> Result<(Selection, MaxnormStats)> {
    let mut rng = Rng::new(cfg.seed);
    let (mu_hat, iteration) = iterate_skeleton(inst, lambda, cfg, &mut rng)?;
    let delta = T::of(iteration.delta);
    let selection = snap_to_vertex(inst, &mu_hat, delta)?;

    let mu = selection.to_coefficients(inst);
    let chi: Vec<T> = mu
        .as_slice()
        .iter()
        .zip(mu_hat.as_slice())
        .map(|(&a, &b)| a - b)
        .collect();
    let snap_error = norm_inf(&inst.apply(&chi)).to_f64_lossy();
    let total: Vec<T> = mu
        .as_slice()
        .iter()
        .zip(lambda.as_slice())
        .map(|(&a, &b)| a - b)
        .collect();
    let error = norm_inf(&inst.apply(&total)).to_f64_lossy();
    let bound = FINAL_CONSTANT * (inst.dim() as f64).sqrt();
    if error > bound {
        return Err(Error::BoundViolated {
            achieved: error,
            bound,
        });
    }
    Ok((
        selection,
        MaxnormStats {
            iteration,
            snap_error,
            error,
            bound,
        },
    ))
}
