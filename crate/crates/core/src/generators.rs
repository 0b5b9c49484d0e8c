//! Seeded random instances that are feasible by construction.
//!
//! Every generated instance comes with a witness `λ ∈ Δ_V` with
//! `‖Vλ‖∞ ≤ 1e-10`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Rng;
use crate::model::{Coefficients, Instance, NormKind};
use crate::scalar::{norm_inf, Scalar};

/// Largest `‖Vλ‖∞` a generated witness may have.
pub const WITNESS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    /// Pairs `±v` of scaled cube vertices.
    CubeVertices,
    /// Points on the unit sphere, drift-corrected.
    UnitSphere,
    /// `V_i = {e_i, −e_i}` with `n = d`.
    SharpSigned,
    /// Pairs `±v` of points in the unit ball.
    PairedAntipodal,
    /// Points in the unit ball with Dirichlet weights, drift-corrected.
    DirichletMixture,
}

impl GenKind {
    pub const ALL: [GenKind; 5] = [
        GenKind::CubeVertices,
        GenKind::UnitSphere,
        GenKind::SharpSigned,
        GenKind::PairedAntipodal,
        GenKind::DirichletMixture,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GenKind::CubeVertices => "cube-vertices",
            GenKind::UnitSphere => "unit-sphere",
            GenKind::SharpSigned => "sharp-signed",
            GenKind::PairedAntipodal => "paired-antipodal",
            GenKind::DirichletMixture => "dirichlet-mixture",
        }
    }
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GenKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        GenKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = GenKind::ALL.iter().map(|k| k.as_str()).collect();
                format!(
                    "unknown generator `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

fn default_min_size() -> usize {
    2
}

fn default_max_size() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub d: usize,
    /// Number of families; ignored by [`GenKind::SharpSigned`].
    pub n: usize,
    #[serde(default = "default_min_size")]
    pub min_size: usize,
    #[serde(default = "default_max_size")]
    pub max_size: usize,
    pub norm: NormKind,
    #[serde(default)]
    pub seed: u64,
}

impl GenSpec {
    pub fn new(kind: GenKind, d: usize, n: usize, norm: NormKind, seed: u64) -> Self {
        GenSpec {
            kind,
            d,
            n,
            min_size: default_min_size(),
            max_size: default_max_size(),
            norm,
            seed,
        }
    }

    pub fn with_sizes(mut self, min_size: usize, max_size: usize) -> Self {
        self.min_size = min_size;
        self.max_size = max_size;
        self
    }
}

type Family = Vec<Vec<f64>>;

pub fn generate<T: Scalar>(spec: &GenSpec) -> Result<(Instance<T>, Coefficients<T>)> {
    if spec.d == 0 {
        return Err(Error::Generator("dimension must be positive".into()));
    }
    if spec.n == 0 && spec.kind != GenKind::SharpSigned {
        return Err(Error::Generator("need at least one family".into()));
    }
    if spec.min_size == 0 || spec.min_size > spec.max_size {
        return Err(Error::Generator(format!(
            "bad family size range {}..={}",
            spec.min_size, spec.max_size
        )));
    }
    let mut rng = Rng::new(spec.seed);
    let (families, weights) = match spec.kind {
        GenKind::SharpSigned => sharp_signed(spec.d),
        GenKind::CubeVertices => paired(spec, &mut rng, cube_vertex),
        GenKind::PairedAntipodal => paired(spec, &mut rng, ball_point),
        GenKind::UnitSphere => drift_corrected(spec, &mut rng, sphere_point, uniform_weights),
        GenKind::DirichletMixture => drift_corrected(spec, &mut rng, ball_point, dirichlet_weights),
    };

    let residual = apply(&families, &weights, spec.d);
    let worst = norm_inf(&residual);
    if worst > WITNESS_TOL {
        return Err(Error::Generator(format!(
            "witness residual {worst} too large"
        )));
    }
    let cast: Vec<Vec<Vec<T>>> = families
        .iter()
        .map(|f| {
            f.iter()
                .map(|v| v.iter().map(|&x| T::of(x)).collect())
                .collect()
        })
        .collect();
    let inst = Instance::new(spec.d, cast, spec.norm)?;
    let witness = Coefficients::new(weights.iter().flatten().map(|&x| T::of(x)).collect());
    Ok((inst, witness))
}

fn apply(families: &[Family], weights: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for (f, w) in families.iter().zip(weights) {
        for (v, &l) in f.iter().zip(w) {
            out.iter_mut().zip(v).for_each(|(o, &x)| *o += l * x);
        }
    }
    out
}

fn sharp_signed(d: usize) -> (Vec<Family>, Vec<Vec<f64>>) {
    let families = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            let neg = e.iter().map(|x| -x).collect();
            vec![e, neg]
        })
        .collect();
    (families, vec![vec![0.5, 0.5]; d])
}

fn cube_vertex(rng: &mut Rng, d: usize, norm: NormKind) -> Vec<f64> {
    let scale = match norm {
        NormKind::Euclidean => 1.0 / (d as f64).sqrt(),
        NormKind::Maximum => 1.0,
    };
    (0..d).map(|_| scale * rng.sign()).collect()
}

fn sphere_point(rng: &mut Rng, d: usize, norm: NormKind) -> Vec<f64> {
    match norm {
        NormKind::Euclidean => loop {
            let g: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                break g.into_iter().map(|x| x / n).collect();
            }
        },
        NormKind::Maximum => {
            let mut v: Vec<f64> = (0..d).map(|_| 2.0 * rng.uniform() - 1.0).collect();
            v[rng.below(d)] = rng.sign();
            v
        }
    }
}

fn ball_point(rng: &mut Rng, d: usize, norm: NormKind) -> Vec<f64> {
    match norm {
        NormKind::Euclidean => {
            let r = rng.uniform().powf(1.0 / d as f64);
            sphere_point(rng, d, norm)
                .into_iter()
                .map(|x| r * x)
                .collect()
        }
        NormKind::Maximum => (0..d).map(|_| 2.0 * rng.uniform() - 1.0).collect(),
    }
}

fn family_size(spec: &GenSpec, rng: &mut Rng, floor: usize) -> usize {
    rng.range_inclusive(spec.min_size, spec.max_size).max(floor)
}

/// Random permutation of `0..n`, Fisher-Yates.
fn permutation(rng: &mut Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, rng.below(i + 1));
    }
    p
}

fn shuffled(rng: &mut Rng, family: Family, weights: Vec<f64>) -> (Family, Vec<f64>) {
    let p = permutation(rng, family.len());
    (
        p.iter().map(|&i| family[i].clone()).collect(),
        p.iter().map(|&i| weights[i]).collect(),
    )
}

/// Families containing some `±v`, with the witness `½, ½` on that pair.
fn paired<P>(spec: &GenSpec, rng: &mut Rng, point: P) -> (Vec<Family>, Vec<Vec<f64>>)
where
    P: Fn(&mut Rng, usize, NormKind) -> Vec<f64>,
{
    let mut families = Vec::with_capacity(spec.n);
    let mut weights = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let size = family_size(spec, rng, 2);
        let mut family = Vec::with_capacity(size);
        while family.len() < size {
            let v = point(rng, spec.d, spec.norm);
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            family.push(v);
            if family.len() < size {
                family.push(neg);
            }
        }
        let mut w = vec![0.0; size];
        w[0] = 0.5;
        w[1] = 0.5;
        let (f, w) = shuffled(rng, family, w);
        families.push(f);
        weights.push(w);
    }
    (families, weights)
}

fn uniform_weights(_: &mut Rng, size: usize) -> Vec<f64> {
    vec![1.0 / size as f64; size]
}

fn dirichlet_weights(rng: &mut Rng, size: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..size).map(|_| rng.exponential() + 1e-3).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Random families and weights; the drift `Vλ` is then cancelled by moving
/// the heaviest member of every family, and the whole instance is scaled
/// back into the unit ball.
fn drift_corrected<P, W>(
    spec: &GenSpec,
    rng: &mut Rng,
    point: P,
    weights_of: W,
) -> (Vec<Family>, Vec<Vec<f64>>)
where
    P: Fn(&mut Rng, usize, NormKind) -> Vec<f64>,
    W: Fn(&mut Rng, usize) -> Vec<f64>,
{
    let mut families = Vec::with_capacity(spec.n);
    let mut weights = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let size = family_size(spec, rng, 1);
        families.push(
            (0..size)
                .map(|_| point(rng, spec.d, spec.norm))
                .collect::<Family>(),
        );
        weights.push(weights_of(rng, size));
    }
    let drift = apply(&families, &weights, spec.d);
    let n = spec.n as f64;
    for (f, w) in families.iter_mut().zip(&weights) {
        let (heavy, &lw) = w
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty family");
        for (x, &t) in f[heavy].iter_mut().zip(&drift) {
            *x -= t / (n * lw);
        }
    }
    let largest = families
        .iter()
        .flatten()
        .map(|v| spec.norm.norm(v))
        .fold(0.0f64, f64::max);
    if largest > 1.0 {
        for v in families.iter_mut().flatten() {
            v.iter_mut().for_each(|x| *x /= largest);
        }
    }
    (families, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_is_valid_and_feasible() {
        for kind in GenKind::ALL {
            for norm in [NormKind::Euclidean, NormKind::Maximum] {
                for seed in 0..5 {
                    let spec = GenSpec::new(kind, 4, 6, norm, seed).with_sizes(1, 4);
                    let (inst, w) = generate::<f64>(&spec).unwrap();
                    assert!(inst.validate().is_valid());
                    w.check_in(&inst).unwrap();
                    assert!(norm_inf(&inst.apply(w.as_slice())) <= WITNESS_TOL);
                }
            }
        }
    }

    #[test]
    fn sharp_signed_shape() {
        let (inst, w) = generate::<f64>(&GenSpec::new(
            GenKind::SharpSigned,
            3,
            0,
            NormKind::Euclidean,
            0,
        ))
        .unwrap();
        assert_eq!(inst.n_families(), 3);
        assert_eq!(inst.member(1, 0), &[0.0, 1.0, 0.0]);
        assert_eq!(inst.member(1, 1), &[0.0, -1.0, 0.0]);
        assert_eq!(w.as_slice(), &[0.5; 6]);
    }

    #[test]
    fn antipodal_witness_is_exact() {
        let spec =
            GenSpec::new(GenKind::PairedAntipodal, 5, 9, NormKind::Euclidean, 3).with_sizes(2, 5);
        let (inst, w) = generate::<f64>(&spec).unwrap();
        assert!(inst.apply(w.as_slice()).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dirichlet_example() {
        let spec =
            GenSpec::new(GenKind::DirichletMixture, 4, 6, NormKind::Euclidean, 7).with_sizes(2, 4);
        let (inst, w) = generate::<f64>(&spec).unwrap();
        assert!(norm_inf(&inst.apply(w.as_slice())) <= 1e-10);
        assert!((0..6).all(|i| (2..=4).contains(&inst.family_size(i))));
    }

    #[test]
    fn deterministic() {
        for kind in GenKind::ALL {
            let spec = GenSpec::new(kind, 3, 4, NormKind::Maximum, 11);
            let a = generate::<f64>(&spec).unwrap();
            let b = generate::<f64>(&spec).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in GenKind::ALL {
            assert_eq!(kind.as_str().parse::<GenKind>().unwrap(), kind);
            assert_eq!(serde_json::to_string(&kind).unwrap(), format!("\"{kind}\""));
        }
        assert!("cube".parse::<GenKind>().is_err());
    }

    #[test]
    fn bad_specs() {
        assert!(generate::<f64>(&GenSpec::new(
            GenKind::UnitSphere,
            0,
            3,
            NormKind::Euclidean,
            0
        ))
        .is_err());
        assert!(generate::<f64>(
            &GenSpec::new(GenKind::UnitSphere, 2, 3, NormKind::Euclidean, 0).with_sizes(3, 2)
        )
        .is_err());
    }
}
