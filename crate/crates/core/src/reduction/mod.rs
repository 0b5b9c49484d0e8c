//! Reduction to at most `d` free families.
//!
//! A vertex `α` of `P = {λ ∈ Δ_V : Vλ = 0}` has at most `n + d` non-zero
//! coordinates (it is a basic feasible solution of a system with `n + d`
//! equality rows). Families locked by `α` contribute one non-zero each, so
//! at most `k + d` coordinates are fractional, spread over `k ≤ d` free
//! families.

mod simplex;

use crate::error::{Error, Result};
use crate::linalg::{self, Subspace};
use crate::model::{Coefficients, IndexPartition, Instance, FRACTIONAL_TOL};
use crate::scalar::{norm_inf, Scalar};

use simplex::{phase_one, StandardForm};

/// Instances with `‖Vλ‖∞` above this for every `λ ∈ Δ_V` are infeasible.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Required `‖Vα‖∞` of a returned vertex.
pub const VERTEX_RESIDUAL_TOL: f64 = 1e-8;
/// Entries of a polished vertex below this are set to exactly zero.
const ZERO_SNAP: f64 = 1e-13;

/// The integral/fractional split of a vertex of `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionCore<T> {
    pub alpha: Coefficients<T>,
    pub fractional: IndexPartition,
    /// Families free under `alpha`, in increasing order.
    pub free_families: Vec<usize>,
    pub k: usize,
}

/// A vertex of `{λ ∈ Δ_V : Vλ = 0}`.
///
/// With a valid witness the witness is pushed to a vertex along kernel
/// directions of its support; otherwise (or if that fails numerically)
/// phase-one simplex finds a basic feasible solution.
pub fn find_zero_vertex<T: Scalar>(
    inst: &Instance<T>,
    witness: Option<&Coefficients<T>>,
) -> Result<Coefficients<T>> {
    let sf = StandardForm::of(inst);
    if let Some(w) = witness {
        if witness_is_valid(inst, w) {
            if let Some(alpha) = push_to_vertex(inst, &sf, w) {
                check_active_count(inst, &alpha)?;
                return Ok(alpha);
            }
        }
    }
    let p1 = phase_one(&sf)?;
    let alpha = polish(inst, &sf, &p1.basis).ok_or_else(|| {
        Error::NumericallyDegenerate(format!(
            "basic solution after {} pivots misses Vα = 0",
            p1.pivots
        ))
    })?;
    check_active_count(inst, &alpha)?;
    Ok(alpha)
}

fn witness_is_valid<T: Scalar>(inst: &Instance<T>, w: &Coefficients<T>) -> bool {
    w.check_in(inst).is_ok() && norm_inf(&inst.apply(w.as_slice())) <= T::tol(FEASIBILITY_TOL)
}

/// Moves along kernel directions of the support columns until they are
/// independent, zeroing the first coordinate to hit its bound each time
/// (lowest index on ties).
fn push_to_vertex<T: Scalar>(
    inst: &Instance<T>,
    sf: &StandardForm<T>,
    w: &Coefficients<T>,
) -> Option<Coefficients<T>> {
    let m = inst.len();
    let snap = T::tol(crate::model::NONNEG_TOL);
    let mut x: Vec<T> = w
        .as_slice()
        .iter()
        .map(|&v| if v <= snap { T::zero() } else { v })
        .collect();
    for _ in 0..=m {
        let support: Vec<usize> = (0..m).filter(|&c| x[c] > T::zero()).collect();
        // Any `rows + 1` columns are dependent, so a kernel direction of the
        // whole support can be found among the first of them.
        let probe = &support[..support.len().min(sf.rows.len() + 1)];
        let normals: Vec<Vec<T>> = sf
            .rows
            .iter()
            .map(|row| probe.iter().map(|&c| row[c]).collect())
            .collect();
        let kernel = linalg::null_space_basis(&normals, &Subspace::full(probe.len()));
        let Some(first) = kernel.basis().first() else {
            if probe.len() < support.len() {
                return None;
            }
            return polish(inst, sf, &support);
        };
        let tol = T::tol(linalg::RANK_TOL);
        let dir: Vec<T> = if first.iter().any(|&z| z < -tol) {
            first.clone()
        } else {
            first.iter().map(|&z| -z).collect()
        };
        let mut step: Option<(usize, T)> = None;
        for (pos, &z) in dir.iter().enumerate() {
            if z < -tol {
                let t = x[probe[pos]] / -z;
                if step.is_none_or(|(_, best)| t < best) {
                    step = Some((pos, t));
                }
            }
        }
        let (hit, t) = step?;
        for (pos, &z) in dir.iter().enumerate() {
            let c = probe[pos];
            x[c] += t * z;
            if x[c] <= snap {
                x[c] = T::zero();
            }
        }
        x[probe[hit]] = T::zero();
    }
    None
}

/// Re-solves the basic system against the original matrix so that the
/// returned vertex satisfies `Vα = 0` to working precision.
fn polish<T: Scalar>(
    inst: &Instance<T>,
    sf: &StandardForm<T>,
    basis: &[usize],
) -> Option<Coefficients<T>> {
    let m = inst.len();
    let columns: Vec<Vec<T>> = basis.iter().map(|&c| sf.column(c)).collect();
    let xb = linalg::least_squares(&columns, &sf.rhs)?;
    let mut x = vec![T::zero(); m];
    for (&c, &v) in basis.iter().zip(&xb) {
        if v < -T::tol(FRACTIONAL_TOL) {
            return None;
        }
        x[c] = if v.abs() <= T::tol(ZERO_SNAP) {
            T::zero()
        } else {
            v.max(T::zero())
        };
    }
    let alpha = Coefficients::new(x);
    let residual = norm_inf(&inst.apply(alpha.as_slice()));
    (residual <= T::tol(VERTEX_RESIDUAL_TOL) && alpha.check_in(inst).is_ok()).then_some(alpha)
}

/// Active non-negativity constraints at a vertex number at least `m - (n + d)`.
fn check_active_count<T: Scalar>(inst: &Instance<T>, alpha: &Coefficients<T>) -> Result<()> {
    let active = alpha.as_slice().iter().filter(|&&x| x == T::zero()).count();
    let needed = inst.len().saturating_sub(inst.n_families() + inst.dim());
    if active < needed {
        return Err(Error::InvariantViolated(format!(
            "vertex has {active} active bounds, fewer than m - (n + d) = {needed}"
        )));
    }
    Ok(())
}

/// Classifies the coordinates and families of a vertex of `P`.
pub fn extract_core<T: Scalar>(
    inst: &Instance<T>,
    alpha: &Coefficients<T>,
) -> Result<ReductionCore<T>> {
    alpha.check_in(inst)?;
    let residual = norm_inf(&inst.apply(alpha.as_slice()));
    if residual > T::tol(VERTEX_RESIDUAL_TOL) {
        return Err(Error::NotAVertex(format!("‖Vα‖∞ = {residual}")));
    }
    let fractional = alpha.partition();
    let free_families = alpha.free_families(inst);
    let k = free_families.len();
    let d = inst.dim();
    if k > d {
        return Err(Error::NotAVertex(format!(
            "{k} free families exceed dimension {d}"
        )));
    }
    if fractional.fractional.len() > k + d {
        return Err(Error::NotAVertex(format!(
            "{} fractional coordinates exceed k + d = {}",
            fractional.fractional.len(),
            k + d
        )));
    }
    for &i in &free_families {
        let count = fractional
            .fractional
            .iter()
            .filter(|&&c| inst.family_of(c) == i)
            .count();
        if count < 2 {
            return Err(Error::NotAVertex(format!(
                "free family {i} has a single fractional entry"
            )));
        }
    }
    Ok(ReductionCore {
        alpha: alpha.clone(),
        fractional,
        free_families,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NormKind;

    fn signed_basis(d: usize) -> Instance<f64> {
        let fams = (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                let neg = e.iter().map(|x| -x).collect();
                vec![e, neg]
            })
            .collect();
        Instance::new(d, fams, NormKind::Euclidean).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn unique_point_of_two_signed_pairs() {
        let inst = signed_basis(2);
        let alpha = find_zero_vertex(&inst, None).unwrap();
        assert!(close(alpha.as_slice(), &[0.5; 4]));
        let core = extract_core(&inst, &alpha).unwrap();
        assert_eq!(core.fractional.fractional, vec![0, 1, 2, 3]);
        assert_eq!(core.k, 2);
        assert_eq!(core.fractional.fractional.len(), core.k + inst.dim());
    }

    #[test]
    fn zero_vector_is_forced() {
        let inst = Instance::new(1, vec![vec![vec![0.0]]], NormKind::Euclidean).unwrap();
        let alpha = find_zero_vertex(&inst, None).unwrap();
        assert_eq!(alpha.as_slice(), &[1.0]);
        let core = extract_core(&inst, &alpha).unwrap();
        assert_eq!(core.k, 0);
        assert!(core.fractional.fractional.is_empty());
    }

    #[test]
    fn one_dimensional_pair() {
        let inst =
            Instance::new(1, vec![vec![vec![1.0], vec![-1.0]]], NormKind::Euclidean).unwrap();
        let alpha = find_zero_vertex(&inst, None).unwrap();
        assert!(close(alpha.as_slice(), &[0.5, 0.5]));
    }

    #[test]
    fn mixed_locked_and_free() {
        let inst = Instance::new(
            1,
            vec![vec![vec![0.0], vec![1.0]], vec![vec![0.5], vec![-0.5]]],
            NormKind::Euclidean,
        )
        .unwrap();
        let alpha = Coefficients::new(vec![1.0, 0.0, 0.5, 0.5]);
        let core = extract_core(&inst, &alpha).unwrap();
        assert_eq!(core.fractional.fractional, vec![2, 3]);
        assert_eq!(core.fractional.locked, vec![0, 1]);
        assert_eq!(core.k, 1);
        assert_eq!(core.free_families, vec![1]);
    }

    #[test]
    fn infeasible_instance_is_rejected() {
        let inst = Instance::new(1, vec![vec![vec![1.0], vec![0.5]]], NormKind::Euclidean).unwrap();
        assert_eq!(find_zero_vertex(&inst, None), Err(Error::Infeasible));
    }

    #[test]
    fn witness_is_pushed_to_a_vertex() {
        // Three members of one family in R^1; the witness uses all three.
        let inst = Instance::new(
            1,
            vec![vec![vec![1.0], vec![-1.0], vec![0.0]]],
            NormKind::Euclidean,
        )
        .unwrap();
        let w = Coefficients::new(vec![0.25, 0.25, 0.5]);
        let alpha = find_zero_vertex(&inst, Some(&w)).unwrap();
        assert!(extract_core(&inst, &alpha).is_ok());
        let nonzero = alpha.as_slice().iter().filter(|&&x| x > 0.0).count();
        assert!(nonzero <= inst.n_families() + inst.dim());
        // The vertex reached from this witness: the third coordinate is hit first.
        // Either {1,2} at (½,½) or {3} at 1; both are vertices of P.
        assert!(
            close(alpha.as_slice(), &[0.5, 0.5, 0.0]) || close(alpha.as_slice(), &[0.0, 0.0, 1.0])
        );
    }

    #[test]
    fn bad_witness_falls_back_to_phase_one() {
        let inst = signed_basis(2);
        let w = Coefficients::new(vec![1.0, 0.0, 1.0, 0.0]);
        let alpha = find_zero_vertex(&inst, Some(&w)).unwrap();
        assert!(close(alpha.as_slice(), &[0.5; 4]));
    }

    #[test]
    fn non_vertex_is_detected() {
        let inst = Instance::new(
            1,
            vec![vec![vec![1.0], vec![-1.0], vec![0.0]]],
            NormKind::Euclidean,
        )
        .unwrap();
        // Interior point of P: one free family with three fractional entries
        // exceeds k + d = 2.
        let interior = Coefficients::new(vec![0.25, 0.25, 0.5]);
        assert!(matches!(
            extract_core(&inst, &interior),
            Err(Error::NotAVertex(_))
        ));
        let off = Coefficients::new(vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            extract_core(&inst, &off),
            Err(Error::NotAVertex(_))
        ));
    }

    #[test]
    fn single_precision_vertex() {
        let inst = Instance::<f32>::new(1, vec![vec![vec![1.0], vec![-1.0]]], NormKind::Euclidean)
            .unwrap();
        let alpha = find_zero_vertex(&inst, None).unwrap();
        assert!((alpha.as_slice()[0] - 0.5).abs() < 1e-6);
    }
}
