use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Variance budget of a walk: `T = ceil(K / ε²)` steps.
pub const K: f64 = 8.0;
/// Default number of independent runs of one skeleton round.
pub const DEFAULT_MAX_RESTARTS: usize = 200;

/// Slab half-width `ω(m) = 4 √(m ln(8d/m))`, for `1 ≤ m ≤ 2d`.
pub fn omega<T: Scalar>(m: usize, d: usize) -> Result<T> {
    if m < 1 || m > 2 * d {
        return Err(Error::PreconditionViolated(format!(
            "omega needs 1 ≤ m ≤ 2d, got m = {m}, d = {d}"
        )));
    }
    let (m, d) = (T::of(m as f64), T::of(d as f64));
    Ok(T::of(4.0) * (m * (T::of(8.0) * d / m).ln()).sqrt())
}

pub fn step_count(epsilon: f64) -> u64 {
    let t = (K / (epsilon * epsilon)).ceil();
    if t >= u64::MAX as f64 {
        u64::MAX
    } else {
        t as u64
    }
}

/// The three step-size conditions under which a single walk succeeds with
/// probability at least 0.2:
///
/// * `ε ≤ δ / √(24 m ln(dm/ε))`
/// * `22 ε m² ln(K/ε²) ≤ 0.01`
/// * `ε ≤ 1 / √(10 ln T)`
pub fn faithful_conditions(epsilon: f64, m: usize, d: usize, delta: f64) -> [bool; 3] {
    let (m, d) = (m as f64, d as f64);
    let t = (K / (epsilon * epsilon)).ceil();
    [
        epsilon <= delta / (24.0 * m * (d * m / epsilon).ln()).sqrt(),
        22.0 * epsilon * m * m * (K / (epsilon * epsilon)).ln() <= 0.01,
        epsilon <= 1.0 / (10.0 * t.ln()).sqrt(),
    ]
}

/// Largest `ε = 2^{-j}`, `j ≥ 1`, meeting all three faithful conditions.
pub fn solve_epsilon(m: usize, d: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if m == 0 || d == 0 {
        return Err(Error::PreconditionViolated(
            "solve_epsilon needs m, d ≥ 1".into(),
        ));
    }
    (1..1000)
        .map(|j| 0.5f64.powi(j))
        .find(|&eps| faithful_conditions(eps, m, d, delta).iter().all(|&ok| ok))
        .ok_or_else(|| {
            Error::PreconditionViolated("no grid step size satisfies the conditions".into())
        })
}

/// `ε = min(δ/4, 1/√(10 ln T))`, iterated to a fixed point in `T`.
pub fn practical_epsilon(delta: f64) -> f64 {
    let mut eps = delta / 4.0;
    for _ in 0..64 {
        let t = (K / (eps * eps)).ceil();
        let next = (delta / 4.0).min(1.0 / (10.0 * t.ln()).sqrt());
        if next == eps {
            break;
        }
        eps = next;
    }
    eps
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.1) {
        return Err(Error::PreconditionViolated(format!(
            "freeze threshold must lie in (0, 0.1), got {delta}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fidelity {
    /// Step size from the three provable conditions; only tiny instances finish.
    #[serde(rename = "faithful")]
    Faithful,
    /// `ε ≈ δ/4`, relying on verified post-conditions and restarts.
    #[default]
    #[serde(rename = "practical")]
    Practical,
}

impl Fidelity {
    pub fn as_str(self) -> &'static str {
        match self {
            Fidelity::Faithful => "faithful",
            Fidelity::Practical => "practical",
        }
    }
}

impl std::str::FromStr for Fidelity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "faithful" => Ok(Fidelity::Faithful),
            "practical" => Ok(Fidelity::Practical),
            other => Err(format!(
                "unknown mode `{other}` (expected faithful or practical)"
            )),
        }
    }
}

/// User-facing walk settings. `delta: None` picks
/// `min(d^{-3/2}, 1/(1 + max |U_i|), 0.099)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkConfig {
    pub mode: Fidelity,
    pub delta: Option<f64>,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            mode: Fidelity::Practical,
            delta: None,
            max_restarts: DEFAULT_MAX_RESTARTS,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn resolve_delta(&self, d: usize, max_family: usize) -> f64 {
        self.delta.unwrap_or_else(|| default_delta(d, max_family))
    }
}

pub fn default_delta(d: usize, max_family: usize) -> f64 {
    (d as f64)
        .powf(-1.5)
        .min(1.0 / (1.0 + max_family as f64))
        .min(0.099)
}

/// Step parameters of one walk on `m` active coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkParams<T> {
    pub epsilon: T,
    pub delta: T,
    pub steps: u64,
    pub omega: T,
}

impl<T: Scalar> WalkParams<T> {
    pub fn resolve(mode: Fidelity, m: usize, d: usize, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        let epsilon = match mode {
            Fidelity::Faithful => solve_epsilon(m, d, delta)?,
            Fidelity::Practical => practical_epsilon(delta),
        };
        Ok(WalkParams {
            epsilon: T::of(epsilon),
            delta: T::of(delta),
            steps: step_count(epsilon),
            omega: omega(m, d)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_values() {
        let w: f64 = omega(1, 1).unwrap();
        assert!((w - 5.768107546403532).abs() < 1e-12);
        for d in 1..10 {
            let full: f64 = omega(2 * d, d).unwrap();
            assert!((full - 4.0 * (2.0 * d as f64 * 4f64.ln()).sqrt()).abs() < 1e-12);
        }
        assert!(omega::<f64>(0, 1).is_err());
        assert!(omega::<f64>(5, 2).is_err());
    }

    #[test]
    fn omega_is_monotone_on_its_domain() {
        for d in 2..20 {
            let vals: Vec<f64> = (1..=2 * d).map(|m| omega(m, d).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[0] < w[1]), "d = {d}");
        }
    }

    #[test]
    fn epsilon_grid_maximality() {
        for &(m, d, delta) in &[(4, 2, 0.05), (2, 1, 0.05), (3, 2, 0.02), (8, 4, 0.09)] {
            let eps = solve_epsilon(m, d, delta).unwrap();
            assert!(faithful_conditions(eps, m, d, delta).iter().all(|&b| b));
            assert!(!faithful_conditions(2.0 * eps, m, d, delta)
                .iter()
                .all(|&b| b));
            assert!(faithful_conditions(eps / 2.0, m, d, delta)
                .iter()
                .all(|&b| b));
        }
    }

    #[test]
    fn epsilon_regression_constants() {
        // Scripted evaluation of the three inequalities over the grid.
        assert_eq!(solve_epsilon(4, 2, 0.05).unwrap(), 0.5f64.powi(21));
        assert_eq!(step_count(0.5f64.powi(21)), 35_184_372_088_832);
        assert_eq!(solve_epsilon(2, 1, 0.05).unwrap(), 0.5f64.powi(18));
        assert_eq!(step_count(0.5f64.powi(18)), 549_755_813_888);
    }

    #[test]
    fn delta_must_be_small() {
        assert!(solve_epsilon(2, 1, 0.1).is_err());
        assert!(solve_epsilon(2, 1, 0.0).is_err());
        assert!(WalkParams::<f64>::resolve(Fidelity::Practical, 2, 1, 0.2).is_err());
    }

    #[test]
    fn practical_step_size() {
        let eps = practical_epsilon(0.05);
        assert_eq!(eps, 0.0125);
        let p = WalkParams::<f64>::resolve(Fidelity::Practical, 4, 2, 0.05).unwrap();
        assert_eq!(p.steps, step_count(0.0125));
        assert_eq!(p.steps, 51_200);
    }

    #[test]
    fn default_threshold() {
        assert_eq!(default_delta(2, 2), 0.099);
        assert!((default_delta(10, 3) - 10f64.powf(-1.5)).abs() < 1e-15);
        assert_eq!(default_delta(4, 9), 0.1f64.min(0.099));
    }
}
