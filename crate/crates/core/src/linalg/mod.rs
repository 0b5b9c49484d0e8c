//! Orthonormal bases of constraint-defined subspaces, projections, and
//! Gaussian sampling on a subspace.

mod rng;

pub use rng::Rng;

use crate::scalar::{axpy, dot, norm2, Scalar};

/// Residual length below which a vector counts as dependent.
pub const RANK_TOL: f64 = 1e-8;

/// A linear subspace of `R^m` given by an orthonormal basis.
///
/// `normals` records every constraint normal the subspace was built to
/// annihilate.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace<T> {
    ambient: usize,
    basis: Vec<Vec<T>>,
    normals: Vec<Vec<T>>,
}

impl<T: Scalar> Subspace<T> {
    /// `R^m` with its standard basis.
    pub fn full(m: usize) -> Self {
        let basis = (0..m)
            .map(|i| {
                let mut e = vec![T::zero(); m];
                e[i] = T::one();
                e
            })
            .collect();
        Subspace {
            ambient: m,
            basis,
            normals: Vec::new(),
        }
    }

    pub fn zero(m: usize) -> Self {
        Subspace {
            ambient: m,
            basis: Vec::new(),
            normals: Vec::new(),
        }
    }

    /// Span of `vectors`, orthonormalized with two-pass Gram–Schmidt.
    pub fn spanned_by(m: usize, vectors: &[Vec<T>]) -> Self {
        let mut basis: Vec<Vec<T>> = Vec::new();
        for v in vectors {
            assert_eq!(v.len(), m);
            if let Some(q) = orthonormal_residual(v, &[&basis]) {
                basis.push(q);
            }
        }
        Subspace {
            ambient: m,
            basis,
            normals: Vec::new(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<T>] {
        &self.basis
    }

    pub fn normals(&self) -> &[Vec<T>] {
        &self.normals
    }

    /// Orthogonal projection `P(u) = Σ ⟨u, b⟩ b`.
    pub fn project(&self, u: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.ambient];
        for b in &self.basis {
            axpy(dot(u, b), b, &mut out);
        }
        out
    }

    /// `Σ g_j b_j` with independent standard normal `g_j`.
    pub fn gaussian_on(&self, rng: &mut Rng) -> Vec<T> {
        let mut out = vec![T::zero(); self.ambient];
        for b in &self.basis {
            axpy(T::of(rng.normal()), b, &mut out);
        }
        out
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> T {
        let mut worst = T::zero();
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate().skip(i) {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot(a, b) - target).abs());
            }
        }
        worst
    }

    /// Largest `|⟨z, b⟩|` over recorded normals `z` and basis vectors `b`.
    pub fn normal_leakage(&self) -> T {
        let mut worst = T::zero();
        for z in &self.normals {
            for b in &self.basis {
                worst = worst.max(dot(z, b).abs());
            }
        }
        worst
    }
}

/// Orthonormal basis of `{x ∈ within : ⟨x, z⟩ = 0 for every z in normals}`.
///
/// The dimension is `dim(within)` minus the numerical rank of the normals
/// projected onto `within`.
pub fn null_space_basis<T: Scalar>(normals: &[Vec<T>], within: &Subspace<T>) -> Subspace<T> {
    let m = within.ambient;
    let tol = T::tol(RANK_TOL);

    let mut constraint = Vec::new();
    for z in normals {
        assert_eq!(z.len(), m, "normal has wrong length");
        let p = within.project(z);
        if let Some(q) = orthonormal_residual(&p, &[&constraint]) {
            constraint.push(q);
        }
    }

    let mut recorded = within.normals.clone();
    recorded.extend(normals.iter().cloned());
    let target = within.dim() - constraint.len().min(within.dim());
    if constraint.is_empty() {
        return Subspace {
            ambient: m,
            basis: within.basis.clone(),
            normals: recorded,
        };
    }

    // Column-pivoted sweep over the basis of `within`: repeatedly take the
    // candidate with the largest residual after removing the constraint
    // directions and the basis vectors accepted so far.
    let mut residuals: Vec<Vec<T>> = within
        .basis
        .iter()
        .map(|b| {
            let mut r = b.clone();
            for _ in 0..2 {
                for q in &constraint {
                    let c = dot(&r, q);
                    axpy(-c, q, &mut r);
                }
            }
            r
        })
        .collect();
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(target);
    while basis.len() < target {
        let (best, len) = residuals
            .iter()
            .enumerate()
            .map(|(i, r)| (i, norm2(r)))
            .fold(
                (usize::MAX, T::zero()),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
        if best == usize::MAX || len <= tol {
            break;
        }
        let cand = residuals.swap_remove(best);
        let Some(q) = orthonormal_residual(&cand, &[&constraint, &basis]) else {
            continue;
        };
        for r in residuals.iter_mut() {
            let c = dot(r, &q);
            axpy(-c, &q, r);
        }
        basis.push(q);
    }
    Subspace {
        ambient: m,
        basis,
        normals: recorded,
    }
}

/// Least-squares solution of `Σ x_j columns[j] ≈ b`; `None` when the
/// columns are numerically dependent.
pub fn least_squares<T: Scalar>(columns: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let k = columns.len();
    let mut q: Vec<Vec<T>> = Vec::with_capacity(k);
    let mut r = vec![vec![T::zero(); k]; k];
    for (j, col) in columns.iter().enumerate() {
        let scale = norm2(col);
        let mut v = col.clone();
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dot(&v, qi);
                r[i][j] += c;
                axpy(-c, qi, &mut v);
            }
        }
        let len = norm2(&v);
        if len.is_nan() || len <= T::tol(1e-10) * (T::one() + scale) {
            return None;
        }
        r[j][j] = len;
        v.iter_mut().for_each(|x| *x /= len);
        q.push(v);
    }
    let qtb: Vec<T> = q.iter().map(|qi| dot(qi, b)).collect();
    let mut x = vec![T::zero(); k];
    for i in (0..k).rev() {
        let mut s = qtb[i];
        for j in i + 1..k {
            s -= r[i][j] * x[j];
        }
        x[i] = s / r[i][i];
    }
    Some(x)
}

/// `v` with its components along every vector of `against` removed (two
/// passes), normalized; `None` if the residual is below the rank tolerance.
fn orthonormal_residual<T: Scalar>(v: &[T], against: &[&[Vec<T>]]) -> Option<Vec<T>> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for set in against {
            for q in set.iter() {
                let c = dot(&r, q);
                axpy(-c, q, &mut r);
            }
        }
    }
    let len = norm2(&r);
    if len <= T::tol(RANK_TOL) {
        return None;
    }
    r.iter_mut().for_each(|x| *x /= len);
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::Rng;
    use super::*;
    use proptest::prelude::*;

    fn e(m: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        v
    }

    #[test]
    fn coordinate_hyperplane() {
        let s = null_space_basis(&[e(3, 0)], &Subspace::full(3));
        assert_eq!(s.dim(), 2);
        assert!(s.basis().iter().all(|b| b[0].abs() < 1e-15));
        assert!(s.orthonormality_defect() < 1e-12);
        assert_eq!(s.normals().len(), 1);
    }

    #[test]
    fn normals_spanning_everything() {
        let s = null_space_basis(&[e(2, 0), vec![1.0, 1.0]], &Subspace::full(2));
        assert_eq!(s.dim(), 0);
        assert!(s.gaussian_on(&mut Rng::new(3)).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn one_pair_and_one_singleton() {
        // Linear part of the coefficient simplex for families {a, b}, {c}.
        let a = null_space_basis(
            &[vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            &Subspace::full(3),
        );
        assert_eq!(a.dim(), 1);
        let within = Subspace::spanned_by(3, &[vec![1.0, -1.0, 0.0], e(3, 2)]);
        let s = null_space_basis(&[e(3, 2)], &within);
        assert_eq!(s.dim(), 1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b = &s.basis()[0];
        let sign = b[0].signum();
        for (x, y) in b.iter().zip([h, -h, 0.0]) {
            assert!((sign * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = Subspace::spanned_by(2, &[vec![h, h]]);
        let p = s.project(&[1.0, 0.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        let inside = s.project(&[0.3, 0.3]);
        assert!((inside[0] - 0.3).abs() < 1e-10 && (inside[1] - 0.3).abs() < 1e-10);
        let perp = s.project(&[1.0, -1.0]);
        assert!(perp.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn f32_subspace() {
        let s = null_space_basis(&[vec![1.0f32, 1.0, 1.0]], &Subspace::full(3));
        assert_eq!(s.dim(), 2);
        assert!(s.orthonormality_defect() < 1e-6);
    }

    #[test]
    fn near_dependent_normals_stay_orthonormal() {
        let m = 6;
        let base: Vec<f64> = (0..m).map(|i| (i as f64 + 1.0).sin()).collect();
        let mut nearly = base.clone();
        nearly[2] += 1e-7;
        let s = null_space_basis(&[base, nearly], &Subspace::full(m));
        assert!(s.orthonormality_defect() < 1e-10);
        assert!(s.normal_leakage() < 1e-8);
    }

    #[test]
    fn least_squares_recovers_combination() {
        let cols = vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]];
        let b = vec![2.0, -1.0, 1.0];
        let x: Vec<f64> = least_squares(&cols, &b).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] + 1.0).abs() < 1e-12);
        assert!(least_squares(&[vec![1.0, 1.0], vec![2.0, 2.0]], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn unit_variance_on_the_line() {
        let s = Subspace::<f64>::full(1);
        let mut rng = Rng::new(11);
        let n = 100_000;
        let var = (0..n)
            .map(|_| s.gaussian_on(&mut rng)[0].powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((0.98..=1.02).contains(&var), "variance {var}");
    }

    fn arb_normals() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
        (2usize..8).prop_flat_map(|m| {
            (
                Just(m),
                prop::collection::vec(prop::collection::vec(-1.0f64..1.0, m), 0..m + 2),
            )
        })
    }

    proptest! {
        #[test]
        fn null_space_invariants((m, normals) in arb_normals()) {
            let s = null_space_basis(&normals, &Subspace::full(m));
            prop_assert!(s.orthonormality_defect() < 1e-10);
            prop_assert!(s.normal_leakage() < 1e-8);
            let trace: f64 = (0..m).map(|i| norm2(&s.project(&e(m, i))).powi(2)).sum();
            prop_assert!((trace - s.dim() as f64).abs() < 1e-8);
            // Nesting: constraining further never grows the subspace.
            let t = null_space_basis(&[e(m, 0)], &s);
            prop_assert!(t.dim() <= s.dim());
            prop_assert!(t.normal_leakage() < 1e-8);
        }

        #[test]
        fn projection_is_idempotent_and_contracting((m, normals) in arb_normals(), u in prop::collection::vec(-2.0f64..2.0, 8)) {
            let s = null_space_basis(&normals, &Subspace::full(m));
            let u = &u[..m];
            let p = s.project(u);
            let pp = s.project(&p);
            for (a, b) in p.iter().zip(&pp) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            prop_assert!(norm2(&p) <= norm2(u) + 1e-12);
        }
    }
}
