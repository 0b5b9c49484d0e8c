//! Rounding a point of `Δ_U` to a selection in the Euclidean norm.
//!
//! Drawing `w_i = u` with probability `λ(u)` for each family independently
//! gives `E‖Σ w_i − Uλ‖² = Σ_i (Σ_u λ(u)‖u‖² − ‖x_i‖²) ≤ k` where
//! `x_i = U_i λ|_{U_i}`. Fixing the families one at a time by minimizing the
//! exact conditional expectation never increases it, so the greedy choice
//! always lands within `√k` of `Uλ`.

use crate::error::{Error, Result};
use crate::linalg::Rng;
use crate::model::{Coefficients, Instance, Selection, BALL_SLACK};
use crate::scalar::{dot, norm2, Scalar};

/// Relative slack when checking that greedy choices do not raise the
/// conditional expectation.
const MONOTONE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingTrace<T> {
    pub chosen: Vec<usize>,
    /// Conditional expectation before any choice, then after each family.
    pub expectations: Vec<T>,
    pub final_sq_error: T,
}

struct Moments<T> {
    target: Vec<T>,
    means: Vec<Vec<T>>,
    variances: Vec<T>,
}

fn moments<T: Scalar>(inst: &Instance<T>, lambda: &Coefficients<T>) -> Result<Moments<T>> {
    let limit = T::one() + T::tol(BALL_SLACK);
    for c in 0..inst.len() {
        let n = norm2(inst.column(c));
        if n > limit {
            return Err(Error::OutsideBall {
                column: c,
                norm: n.to_f64_lossy(),
            });
        }
    }
    lambda.check_in(inst)?;
    let beta = lambda.as_slice();
    let means: Vec<Vec<T>> = (0..inst.n_families())
        .map(|i| inst.apply_family(i, beta))
        .collect();
    let variances = (0..inst.n_families())
        .map(|i| {
            let second: T = inst
                .family_range(i)
                .map(|c| beta[c] * dot(inst.column(c), inst.column(c)))
                .sum();
            second - dot(&means[i], &means[i])
        })
        .collect();
    let mut target = vec![T::zero(); inst.dim()];
    for x in &means {
        target.iter_mut().zip(x).for_each(|(t, &v)| *t += v);
    }
    Ok(Moments {
        target,
        means,
        variances,
    })
}

/// Draws each family's member from `λ|_{U_i}`, independently.
pub fn sample_selection<T: Scalar>(
    inst: &Instance<T>,
    lambda: &Coefficients<T>,
    rng: &mut Rng,
) -> Result<Selection> {
    lambda.check_in(inst)?;
    let beta = lambda.as_slice();
    let choices = (0..inst.n_families())
        .map(|i| {
            let w: Vec<f64> = beta[inst.family_range(i)]
                .iter()
                .map(|x| x.to_f64_lossy().max(0.0))
                .collect();
            rng.weighted_index(&w)
        })
        .collect();
    Ok(Selection { choices })
}

/// `E‖s + Σ_{i>j} w_i − Uλ‖²` with the first `j = prefix.len()` families
/// fixed to `prefix` and the rest drawn from `λ`.
pub fn conditional_expectation<T: Scalar>(
    prefix: &[usize],
    inst: &Instance<T>,
    lambda: &Coefficients<T>,
) -> Result<T> {
    if prefix.len() > inst.n_families() {
        return Err(Error::LengthMismatch {
            expected: inst.n_families(),
            got: prefix.len(),
        });
    }
    let mo = moments(inst, lambda)?;
    let mut centre: Vec<T> = mo.target.iter().map(|&t| -t).collect();
    for (i, &c) in prefix.iter().enumerate() {
        if c >= inst.family_size(i) {
            return Err(Error::IndexOutOfRange {
                index: c,
                len: inst.family_size(i),
            });
        }
        centre
            .iter_mut()
            .zip(inst.member(i, c))
            .for_each(|(a, &u)| *a += u);
    }
    let mut spread = T::zero();
    for i in prefix.len()..inst.n_families() {
        centre
            .iter_mut()
            .zip(&mo.means[i])
            .for_each(|(a, &u)| *a += u);
        spread += mo.variances[i];
    }
    Ok(dot(&centre, &centre) + spread)
}

/// Greedy derandomization: families in input order, each fixed to the
/// member minimizing the conditional expectation (lowest index on ties).
pub fn derandomized_select<T: Scalar>(
    inst: &Instance<T>,
    lambda: &Coefficients<T>,
) -> Result<(Selection, RoundingTrace<T>)> {
    let mo = moments(inst, lambda)?;
    let n = inst.n_families();
    let d = inst.dim();

    // suffix[j] = Σ_{i≥j} x_i − x and tail[j] = Σ_{i≥j} variance_i.
    let mut suffix = vec![vec![T::zero(); d]; n + 1];
    suffix[n] = mo.target.iter().map(|&t| -t).collect();
    let mut tail = vec![T::zero(); n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1]
            .iter()
            .zip(&mo.means[i])
            .map(|(&a, &b)| a + b)
            .collect();
        tail[i] = tail[i + 1] + mo.variances[i];
    }

    let mut prefix_sum = vec![T::zero(); d];
    let mut chosen = Vec::with_capacity(n);
    let mut expectations = Vec::with_capacity(n + 1);
    expectations.push(dot(&suffix[0], &suffix[0]) + tail[0]);
    let mut scratch = vec![T::zero(); d];
    for i in 0..n {
        let mut best: Option<(usize, T)> = None;
        for (pos, c) in inst.family_range(i).enumerate() {
            for ((s, &p), (&u, &r)) in scratch
                .iter_mut()
                .zip(&prefix_sum)
                .zip(inst.column(c).iter().zip(&suffix[i + 1]))
            {
                *s = p + u + r;
            }
            let value = dot(&scratch, &scratch) + tail[i + 1];
            if best.is_none_or(|(_, b)| value < b) {
                best = Some((pos, value));
            }
        }
        let (pos, value) = best.expect("families are non-empty");
        let prev = *expectations.last().unwrap();
        if value > prev + T::tol(MONOTONE_TOL) * (T::one() + prev.abs()) {
            return Err(Error::InvariantViolated(format!(
                "conditional expectation rose from {prev} to {value} at family {i}"
            )));
        }
        prefix_sum
            .iter_mut()
            .zip(inst.member(i, pos))
            .for_each(|(a, &u)| *a += u);
        chosen.push(pos);
        expectations.push(value);
    }

    let residual: Vec<T> = prefix_sum
        .iter()
        .zip(&mo.target)
        .map(|(&a, &b)| a - b)
        .collect();
    let final_sq_error = dot(&residual, &residual);
    let k = T::of(n as f64);
    if final_sq_error > k + T::tol(1e-9) {
        return Err(Error::InvariantViolated(format!(
            "squared error {final_sq_error} exceeds k = {n}"
        )));
    }
    Ok((
        Selection {
            choices: chosen.clone(),
        },
        RoundingTrace {
            chosen,
            expectations,
            final_sq_error,
        },
    ))
}
