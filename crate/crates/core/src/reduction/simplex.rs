//! Phase-one simplex on `{Vλ = 0, per-family sums = 1, λ ≥ 0}`.
//!
//! Dense tableau with one artificial column per row and Bland's rule. The
//! returned basis spans independent original columns only; redundant rows
//! are reported so callers can polish the basic solution against the
//! original matrix.

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::scalar::Scalar;

const PIVOT_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-11;
const RATIO_TIE_TOL: f64 = 1e-12;
/// Phase-one objective below this declares feasibility.
pub(crate) const PHASE_ONE_TOL: f64 = 1e-9;

/// Row-major standard-form system: family rows first, then the `d` rows of `V`.
pub(crate) struct StandardForm<T> {
    pub rows: Vec<Vec<T>>,
    pub rhs: Vec<T>,
}

impl<T: Scalar> StandardForm<T> {
    pub fn of(inst: &Instance<T>) -> Self {
        let m = inst.len();
        let mut rows = Vec::with_capacity(inst.n_families() + inst.dim());
        let mut rhs = Vec::with_capacity(rows.capacity());
        for i in 0..inst.n_families() {
            let mut row = vec![T::zero(); m];
            for c in inst.family_range(i) {
                row[c] = T::one();
            }
            rows.push(row);
            rhs.push(T::one());
        }
        for j in 0..inst.dim() {
            rows.push(inst.row(j));
            rhs.push(T::zero());
        }
        StandardForm { rows, rhs }
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        self.rows.iter().map(|r| r[c]).collect()
    }
}

pub(crate) struct PhaseOne {
    /// Basic original columns, one per non-redundant row.
    pub basis: Vec<usize>,
    pub pivots: usize,
}

pub(crate) fn phase_one<T: Scalar>(sf: &StandardForm<T>) -> Result<PhaseOne> {
    let r = sf.rows.len();
    let m = sf.rows.first().map_or(0, Vec::len);
    let cols = m + r;
    let piv_tol = T::tol(PIVOT_TOL);
    let rc_tol = T::tol(REDUCED_COST_TOL);

    // Tableau rows carry `cols` coefficients followed by the right-hand side.
    let mut tab: Vec<Vec<T>> = sf
        .rows
        .iter()
        .zip(&sf.rhs)
        .enumerate()
        .map(|(i, (row, &b))| {
            let mut t = row.clone();
            t.resize(cols + 1, T::zero());
            t[m + i] = T::one();
            t[cols] = b;
            t
        })
        .collect();
    let mut basis: Vec<usize> = (m..cols).collect();
    let mut cost = vec![T::zero(); cols + 1];
    for t in &tab {
        for c in 0..m {
            cost[c] -= t[c];
        }
        cost[cols] -= t[cols];
    }

    let degenerate_cap = 10 * (m + r);
    let budget = 50 * (cols + 1) * (r + 1);
    let mut degenerate_run = 0usize;
    let mut pivots = 0usize;

    while let Some(enter) = (0..cols).find(|&c| cost[c] < -rc_tol) {
        let mut leave: Option<(usize, T)> = None;
        for (i, t) in tab.iter().enumerate() {
            if t[enter] > piv_tol {
                let ratio = t[cols] / t[enter];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        let tie =
                            (ratio - lr).abs() <= T::tol(RATIO_TIE_TOL) * (T::one() + lr.abs());
                        if (ratio < lr && !tie) || (tie && basis[i] < basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let Some((row, ratio)) = leave else {
            return Err(Error::NumericallyDegenerate(
                "phase-one objective unbounded".into(),
            ));
        };
        if ratio <= T::tol(RATIO_TIE_TOL) {
            degenerate_run += 1;
            if degenerate_run > degenerate_cap {
                return Err(Error::NumericallyDegenerate(format!(
                    "{degenerate_run} consecutive degenerate pivots"
                )));
            }
        } else {
            degenerate_run = 0;
        }
        pivot(&mut tab, &mut cost, row, enter);
        basis[row] = enter;
        pivots += 1;
        if pivots > budget {
            return Err(Error::NumericallyDegenerate(format!(
                "no optimum after {pivots} pivots"
            )));
        }
    }

    if -cost[cols] > T::tol(PHASE_ONE_TOL) {
        return Err(Error::Infeasible);
    }

    // Drive zero-valued artificials out of the basis; rows where that is
    // impossible are linear combinations of the others.
    let mut keep = Vec::new();
    for i in 0..r {
        if basis[i] < m {
            keep.push(i);
            continue;
        }
        let best = (0..m)
            .filter(|c| !basis.contains(c))
            .map(|c| (c, tab[i][c].abs()))
            .fold(None, |acc: Option<(usize, T)>, x| match acc {
                Some(a) if a.1 >= x.1 => Some(a),
                _ => Some(x),
            });
        if let Some((c, mag)) = best {
            if mag > piv_tol {
                pivot(&mut tab, &mut cost, i, c);
                basis[i] = c;
                pivots += 1;
                keep.push(i);
            }
        }
    }
    Ok(PhaseOne {
        basis: keep.iter().map(|&i| basis[i]).collect(),
        pivots,
    })
}

fn pivot<T: Scalar>(tab: &mut [Vec<T>], cost: &mut [T], row: usize, col: usize) {
    let p = tab[row][col];
    tab[row].iter_mut().for_each(|x| *x /= p);
    let prow = tab[row].clone();
    for (i, t) in tab.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = t[col];
        if f != T::zero() {
            for (x, &y) in t.iter_mut().zip(&prow) {
                *x -= f * y;
            }
        }
    }
    let f = cost[col];
    if f != T::zero() {
        for (x, &y) in cost.iter_mut().zip(&prow) {
            *x -= f * y;
        }
    }
}
