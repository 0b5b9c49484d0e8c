//! Exhaustive minimum over all selections, for small instances.

use crate::error::{Error, Result};
use crate::model::{Instance, NormKind, Selection};
use crate::scalar::Scalar;

/// Largest selection product space [`brute_force_min`] will enumerate.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult<T> {
    pub best_selection: Selection,
    pub best_value: T,
    pub enumerated_count: u64,
}

pub fn selection_count<T: Scalar>(inst: &Instance<T>) -> u128 {
    (0..inst.n_families()).fold(1u128, |acc, i| {
        acc.saturating_mul(inst.family_size(i) as u128)
    })
}

/// Minimum of `‖Σ v_i − shift‖` over every selection, with the
/// lexicographically first minimizer.
///
/// Odometer enumeration keeping one partial sum per prefix length, so each
/// full sum is the same left-to-right fold [`Selection::sum`] computes.
pub fn brute_force_min<T: Scalar>(
    inst: &Instance<T>,
    shift: Option<&[T]>,
    norm: NormKind,
) -> Result<OracleResult<T>> {
    let count = selection_count(inst);
    if count > ENUMERATION_BUDGET as u128 {
        return Err(Error::BudgetExceeded {
            count,
            budget: ENUMERATION_BUDGET,
        });
    }
    let n = inst.n_families();
    let d = inst.dim();
    let sizes: Vec<usize> = (0..n).map(|i| inst.family_size(i)).collect();
    let mut digits = vec![0usize; n];
    // partial[i] = v_0 + ... + v_{i-1} under the current digits.
    let mut partial = vec![vec![T::zero(); d]; n + 1];
    let mut diff = vec![T::zero(); d];

    let refresh_from = |from: usize, digits: &[usize], partial: &mut Vec<Vec<T>>| {
        for i in from..n {
            let (head, tail) = partial.split_at_mut(i + 1);
            for ((out, &a), &b) in tail[0]
                .iter_mut()
                .zip(&head[i])
                .zip(inst.member(i, digits[i]))
            {
                *out = a + b;
            }
        }
    };
    refresh_from(0, &digits, &mut partial);

    let mut best_value = T::infinity();
    let mut best = digits.clone();
    let mut enumerated = 0u64;
    loop {
        enumerated += 1;
        diff.copy_from_slice(&partial[n]);
        if let Some(s) = shift {
            diff.iter_mut().zip(s).for_each(|(x, &y)| *x -= y);
        }
        let value = norm.norm(&diff);
        if value < best_value {
            best_value = value;
            best.copy_from_slice(&digits);
        }
        let mut p = n;
        let changed = loop {
            if p == 0 {
                break None;
            }
            p -= 1;
            digits[p] += 1;
            if digits[p] < sizes[p] {
                break Some(p);
            }
            digits[p] = 0;
        };
        match changed {
            Some(p) => refresh_from(p, &digits, &mut partial),
            None => break,
        }
    }
    Ok(OracleResult {
        best_selection: Selection { choices: best },
        best_value,
        enumerated_count: enumerated,
    })
}
