#![allow(dead_code)]

use colorbal::generators::{generate, GenKind, GenSpec};
use colorbal::linalg::Rng;
use colorbal::{Coefficients64, Instance64, NormKind};

pub fn signed_basis(d: usize, norm: NormKind) -> Instance64 {
    let fams = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            let neg = e.iter().map(|x| -x).collect();
            vec![e, neg]
        })
        .collect();
    Instance64::new(d, fams, norm).unwrap()
}

/// Random spec with `d` in `d_range`, `n` in `n_range` and family sizes
/// drawn inside `1..=max_size`.
pub fn random_spec(
    rng: &mut Rng,
    kind: GenKind,
    d_range: (usize, usize),
    n_range: (usize, usize),
    max_size: usize,
    norm: NormKind,
) -> GenSpec {
    let d = rng.range_inclusive(d_range.0, d_range.1);
    let n = rng.range_inclusive(n_range.0, n_range.1);
    let lo = rng.range_inclusive(1, max_size);
    let hi = rng.range_inclusive(lo, max_size);
    GenSpec::new(kind, d, n, norm, rng.below(1 << 30) as u64).with_sizes(lo, hi)
}

pub fn instances(
    count: usize,
    seed: u64,
    d_range: (usize, usize),
    n_range: (usize, usize),
    max_size: usize,
    norm: NormKind,
) -> Vec<(GenSpec, Instance64, Coefficients64)> {
    let mut rng = Rng::new(seed);
    (0..count)
        .map(|i| {
            let kind = GenKind::ALL[i % GenKind::ALL.len()];
            let spec = random_spec(&mut rng, kind, d_range, n_range, max_size, norm);
            let (inst, w) = generate::<f64>(&spec).unwrap();
            (spec, inst, w)
        })
        .collect()
}

/// Solves `A x = b` for a tall or square `A` (given by columns) by Gaussian
/// elimination with partial pivoting. `None` if the columns are dependent
/// or the system is inconsistent.
fn solve_columns(columns: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let rows = b.len();
    let k = columns.len();
    let mut a: Vec<Vec<f64>> = (0..rows)
        .map(|r| columns.iter().map(|c| c[r]).chain([b[r]]).collect())
        .collect();
    for (row, col) in (0..k).enumerate() {
        let pivot = (row..rows).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(row, pivot);
        for r in 0..rows {
            if r != row {
                let f = a[r][col] / a[row][col];
                if f != 0.0 {
                    let pivot_row = a[row].clone();
                    for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * p;
                    }
                }
            }
        }
    }
    if a[k..].iter().any(|r| r[k].abs() > 1e-9) {
        return None;
    }
    Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

/// Every vertex of `{λ ∈ Δ_V : Vλ = 0}`, as basic feasible solutions of the
/// standard form with family rows and the rows of `V`.
pub fn zero_polytope_vertices(inst: &Instance64) -> Vec<Vec<f64>> {
    let m = inst.len();
    assert!(m <= 16);
    let n = inst.n_families();
    let d = inst.dim();
    let column = |c: usize| -> Vec<f64> {
        let mut v = vec![0.0; n + d];
        v[inst.family_of(c)] = 1.0;
        v[n..].copy_from_slice(inst.column(c));
        v
    };
    let mut rhs = vec![0.0; n + d];
    rhs[..n].iter_mut().for_each(|x| *x = 1.0);
    let mut found: Vec<Vec<f64>> = Vec::new();
    for mask in 1u32..(1 << m) {
        let support: Vec<usize> = (0..m).filter(|&c| mask >> c & 1 == 1).collect();
        if support.len() > n + d {
            continue;
        }
        let cols: Vec<Vec<f64>> = support.iter().map(|&c| column(c)).collect();
        let Some(x) = solve_columns(&cols, &rhs) else {
            continue;
        };
        if x.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let mut full = vec![0.0; m];
        for (&c, &v) in support.iter().zip(&x) {
            full[c] = v.max(0.0);
        }
        if !found
            .iter()
            .any(|f| f.iter().zip(&full).all(|(a, b)| (a - b).abs() < 1e-9))
        {
            found.push(full);
        }
    }
    found
}

pub fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
