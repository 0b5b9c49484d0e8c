//! The Gaussian random walk behind one skeleton round.
//!
//! The walk lives in the polytope
//! `R = {α ∈ Δ_W : |⟨α − Γ_0, W^j⟩| ≤ ω(m) for all j}`. Each step adds
//! `ε Λ_t` with `Λ_t` standard Gaussian on the current subspace `S_t`. A
//! coordinate that drops to `δ` or below is frozen, and a slab that comes
//! within `δ` of its boundary becomes an equality, for the rest of the walk.

use crate::error::{Error, Result};
use crate::linalg::{null_space_basis, Rng, Subspace};
use crate::model::{Instance, NONNEG_TOL};
use crate::scalar::{dot, Scalar};

use super::params::WalkParams;

/// Tolerance on per-family coefficient sums along the walk.
const SUM_DRIFT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct WalkState<T> {
    pub t: u64,
    pub gamma: Vec<T>,
    /// Frozen coordinates, in the order they froze.
    pub frozen: Vec<usize>,
    /// Slabs turned into equalities, in the order they became tight.
    pub tight: Vec<usize>,
    pub subspace: Subspace<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Moved,
    /// `S_t = {0}`; the walk cannot move any further.
    Stuck,
    /// A constraint of `R` is violated; by construction it stays violated.
    LeftRegion,
}

pub struct GaussianWalk<'a, T> {
    inst: &'a Instance<T>,
    rows: Vec<Vec<T>>,
    params: WalkParams<T>,
    start: Vec<T>,
    family_sums: Vec<T>,
    is_frozen: Vec<bool>,
    is_tight: Vec<bool>,
    state: WalkState<T>,
    last_step: Vec<T>,
    slab: Vec<T>,
}

impl<'a, T: Scalar> GaussianWalk<'a, T> {
    pub fn new(inst: &'a Instance<T>, gamma: &[T], params: WalkParams<T>) -> Result<Self> {
        let m = inst.len();
        if gamma.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                got: gamma.len(),
            });
        }
        let indicators: Vec<Vec<T>> = (0..inst.n_families())
            .map(|i| {
                let mut v = vec![T::zero(); m];
                inst.family_range(i).for_each(|c| v[c] = T::one());
                v
            })
            .collect();
        let affine_part = null_space_basis(&indicators, &Subspace::full(m));
        let family_sums = (0..inst.n_families())
            .map(|i| gamma[inst.family_range(i)].iter().copied().sum())
            .collect();
        let mut walk = GaussianWalk {
            inst,
            rows: (0..inst.dim()).map(|j| inst.row(j)).collect(),
            params,
            start: gamma.to_vec(),
            family_sums,
            is_frozen: vec![false; m],
            is_tight: vec![false; inst.dim()],
            state: WalkState {
                t: 0,
                gamma: gamma.to_vec(),
                frozen: Vec::new(),
                tight: Vec::new(),
                subspace: affine_part,
            },
            last_step: vec![T::zero(); m],
            slab: vec![T::zero(); inst.dim()],
        };
        let initial: Vec<usize> = (0..m).filter(|&i| gamma[i] <= params.delta).collect();
        walk.constrain(initial, Vec::new());
        Ok(walk)
    }

    pub fn state(&self) -> &WalkState<T> {
        &self.state
    }

    pub fn params(&self) -> &WalkParams<T> {
        &self.params
    }

    /// `Λ_t` of the most recent step.
    pub fn last_step(&self) -> &[T] {
        &self.last_step
    }

    /// `⟨Γ_t − Γ_0, W^j⟩` for every row `j`.
    pub fn slab_offsets(&self) -> &[T] {
        &self.slab
    }

    pub fn frozen_count(&self) -> usize {
        self.state.frozen.len()
    }

    /// At least half of the coordinates must end up at or below `δ`.
    pub fn target_frozen(&self) -> usize {
        self.inst.len().div_ceil(2)
    }

    pub fn step(&mut self, rng: &mut Rng) -> Result<StepOutcome> {
        let dim_before = self.state.subspace.dim();
        if dim_before == 0 {
            return Ok(StepOutcome::Stuck);
        }
        let mut lambda = self.state.subspace.gaussian_on(rng);
        for (l, &f) in lambda.iter_mut().zip(&self.is_frozen) {
            if f {
                *l = T::zero();
            }
        }
        let eps = self.params.epsilon;
        for (g, &l) in self.state.gamma.iter_mut().zip(&lambda) {
            *g += eps * l;
        }
        self.state.t += 1;
        self.last_step = lambda;

        let moved: Vec<T> = self
            .state
            .gamma
            .iter()
            .zip(&self.start)
            .map(|(&g, &s)| g - s)
            .collect();
        for (s, row) in self.slab.iter_mut().zip(&self.rows) {
            *s = dot(&moved, row);
        }

        for (i, r) in (0..self.inst.n_families()).map(|i| (i, self.inst.family_range(i))) {
            let s: T = self.state.gamma[r].iter().copied().sum();
            if (s - self.family_sums[i]).abs() > T::tol(SUM_DRIFT_TOL) {
                return Err(Error::InvariantViolated(format!(
                    "family {i} sum drifted to {s}"
                )));
            }
        }

        let neg = -T::tol(NONNEG_TOL);
        let omega = self.params.omega;
        if self.state.gamma.iter().any(|&g| g < neg) || self.slab.iter().any(|s| s.abs() > omega) {
            return Ok(StepOutcome::LeftRegion);
        }

        let delta = self.params.delta;
        let mut new_frozen = Vec::new();
        for (i, &g) in self.state.gamma.iter().enumerate() {
            if !self.is_frozen[i] && g <= delta {
                // Γ_{t−1} > δ, so the coordinate can undershoot by at most one step.
                let floor = delta - eps * self.last_step[i].abs();
                if g < floor - T::tol(1e-12) {
                    return Err(Error::InvariantViolated(format!(
                        "coordinate {i} froze at {g} below {floor}"
                    )));
                }
                new_frozen.push(i);
            }
        }
        let new_tight: Vec<usize> = (0..self.rows.len())
            .filter(|&j| !self.is_tight[j] && self.slab[j].abs() >= omega - delta)
            .collect();
        self.constrain(new_frozen, new_tight);
        if self.state.subspace.dim() > dim_before {
            return Err(Error::InvariantViolated("step subspace grew".into()));
        }
        Ok(StepOutcome::Moved)
    }

    /// Post-conditions of a successful round: `Γ ∈ R`, hence
    /// `‖W(Γ − Γ_0)‖∞ ≤ ω(m)`, and at least `⌈m/2⌉` coordinates `≤ δ`.
    pub fn succeeded(&self) -> bool {
        let moved: Vec<T> = self
            .state
            .gamma
            .iter()
            .zip(&self.start)
            .map(|(&g, &s)| g - s)
            .collect();
        let within_slabs = self
            .rows
            .iter()
            .all(|row| dot(&moved, row).abs() <= self.params.omega);
        let nonneg = self.state.gamma.iter().all(|&g| g >= -T::tol(NONNEG_TOL));
        let small = self
            .state
            .gamma
            .iter()
            .filter(|&&g| g <= self.params.delta)
            .count();
        within_slabs && nonneg && small >= self.target_frozen()
    }

    pub fn into_state(self) -> WalkState<T> {
        self.state
    }

    fn constrain(&mut self, frozen: Vec<usize>, tight: Vec<usize>) {
        if frozen.is_empty() && tight.is_empty() {
            return;
        }
        let m = self.inst.len();
        let mut normals = Vec::with_capacity(frozen.len() + tight.len());
        for &i in &frozen {
            self.is_frozen[i] = true;
            let mut e = vec![T::zero(); m];
            e[i] = T::one();
            normals.push(e);
        }
        for &j in &tight {
            self.is_tight[j] = true;
            normals.push(self.rows[j].clone());
        }
        self.state.frozen.extend(frozen);
        self.state.tight.extend(tight);
        self.state.subspace = null_space_basis(&normals, &self.state.subspace);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxnorm::params::Fidelity;
    use crate::model::NormKind;

    fn pair() -> Instance<f64> {
        Instance::new(1, vec![vec![vec![1.0], vec![-1.0]]], NormKind::Maximum).unwrap()
    }

    #[test]
    fn one_dimensional_walk_freezes_one_side() {
        let inst = pair();
        let params = WalkParams::resolve(Fidelity::Practical, 2, 1, 0.05).unwrap();
        let mut walk = GaussianWalk::new(&inst, &[0.5, 0.5], params).unwrap();
        assert_eq!(walk.state().subspace.dim(), 1);
        let mut rng = Rng::new(9);
        while walk.frozen_count() < 1 {
            assert_eq!(walk.step(&mut rng).unwrap(), StepOutcome::Moved);
        }
        // Freezing one coordinate of a two-member family pins the other too.
        assert_eq!(walk.state().subspace.dim(), 0);
        assert_eq!(walk.step(&mut rng).unwrap(), StepOutcome::Stuck);
        assert!(walk.succeeded());
        let g = &walk.state().gamma;
        assert_eq!(g.iter().filter(|&&x| x <= 0.05).count(), 1);
        assert!((g[0] + g[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frozen_coordinates_never_move_and_sets_nest() {
        let inst = Instance::new(
            2,
            vec![
                vec![vec![1.0, 0.5], vec![-1.0, 0.2], vec![0.3, -1.0]],
                vec![vec![0.1, 0.9], vec![-0.4, -0.6]],
            ],
            NormKind::Maximum,
        )
        .unwrap();
        let params = WalkParams::resolve(Fidelity::Practical, 5, 4, 0.05).unwrap();
        let gamma = [0.3, 0.3, 0.4, 0.5, 0.5];
        let mut walk = GaussianWalk::new(&inst, &gamma, params).unwrap();
        let mut rng = Rng::new(2);
        let mut frozen_at: Vec<(usize, f64)> = Vec::new();
        let mut prev_dim = walk.state().subspace.dim();
        for _ in 0..20_000 {
            match walk.step(&mut rng).unwrap() {
                StepOutcome::Moved => {}
                _ => break,
            }
            let st = walk.state();
            for &i in &st.frozen[frozen_at.len()..] {
                frozen_at.push((i, st.gamma[i]));
            }
            for &(i, v) in &frozen_at {
                assert_eq!(st.gamma[i], v);
            }
            assert!(st.subspace.dim() <= prev_dim);
            assert!(st.subspace.orthonormality_defect() < 1e-10);
            prev_dim = st.subspace.dim();
        }
        assert!(!frozen_at.is_empty());
    }
}
