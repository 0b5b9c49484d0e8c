//! Instances, coefficient vectors, selections, and their validation.
//!
//! An [`Instance`] is the vector family matrix `V = (V_1 | ... | V_n)` stored
//! column-major with a family offset table. Coefficients are indexed by
//! column, so family `i` owns the contiguous block
//! [`Instance::family_range`]`(i)`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{norm2, norm_inf, Scalar};

/// Entries within this distance of 0 or 1 count as integral.
pub const FRACTIONAL_TOL: f64 = 1e-9;
/// Additive slack on unit-ball membership.
pub const BALL_SLACK: f64 = 1e-9;
/// Entries at or above `-NONNEG_TOL` count as non-negative.
pub const NONNEG_TOL: f64 = 1e-12;
/// Per-family coefficient sums must be within this of 1.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    #[serde(rename = "l2")]
    Euclidean,
    #[serde(rename = "linf")]
    Maximum,
}

impl NormKind {
    pub fn norm<T: Scalar>(self, v: &[T]) -> T {
        match self {
            NormKind::Euclidean => norm2(v),
            NormKind::Maximum => norm_inf(v),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::Euclidean => "l2",
            NormKind::Maximum => "linf",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "l2" => Ok(NormKind::Euclidean),
            "linf" => Ok(NormKind::Maximum),
            other => Err(format!("unknown norm `{other}` (expected l2 or linf)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    ZeroDimension,
    NoFamilies,
    EmptyFamily {
        family: usize,
    },
    WrongLength {
        family: usize,
        member: usize,
        len: usize,
    },
    NonFinite {
        family: usize,
        member: usize,
    },
    NormExceedsOne {
        family: usize,
        member: usize,
        norm: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroDimension => write!(f, "dimension must be at least 1"),
            Violation::NoFamilies => write!(f, "at least one family is required"),
            Violation::EmptyFamily { family } => write!(f, "empty family {family}"),
            Violation::WrongLength {
                family,
                member,
                len,
            } => {
                write!(f, "vector {member} of family {family} has length {len}")
            }
            Violation::NonFinite { family, member } => {
                write!(
                    f,
                    "vector {member} of family {family} has a non-finite entry"
                )
            }
            Violation::NormExceedsOne {
                family,
                member,
                norm,
            } => {
                write!(
                    f,
                    "norm exceeds 1: vector {member} of family {family} has norm {norm}"
                )
            }
        }
    }
}

/// Every violated instance invariant; empty iff the instance is well formed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_families<T: Scalar>(
    dim: usize,
    families: &[Vec<Vec<T>>],
    norm: NormKind,
) -> ValidationReport {
    let mut violations = Vec::new();
    if dim == 0 {
        violations.push(Violation::ZeroDimension);
    }
    if families.is_empty() {
        violations.push(Violation::NoFamilies);
    }
    let limit = T::one() + T::tol(BALL_SLACK);
    for (family, members) in families.iter().enumerate() {
        if members.is_empty() {
            violations.push(Violation::EmptyFamily { family });
        }
        for (member, v) in members.iter().enumerate() {
            if v.len() != dim {
                violations.push(Violation::WrongLength {
                    family,
                    member,
                    len: v.len(),
                });
                continue;
            }
            if v.iter().any(|x| !x.is_finite()) {
                violations.push(Violation::NonFinite { family, member });
                continue;
            }
            let n = norm.norm(v);
            if n > limit {
                violations.push(Violation::NormExceedsOne {
                    family,
                    member,
                    norm: n.to_f64_lossy(),
                });
            }
        }
    }
    ValidationReport { violations }
}

/// Reports every violated invariant of an instance file.
pub fn validate_instance(file: &InstanceFile) -> ValidationReport {
    validate_families(file.d, &file.families, file.norm)
}

/// The vector family matrix together with its partition into families.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<T> {
    dim: usize,
    norm: NormKind,
    data: Vec<T>,
    offsets: Vec<usize>,
}

impl<T: Scalar> Instance<T> {
    pub fn new(dim: usize, families: Vec<Vec<Vec<T>>>, norm: NormKind) -> Result<Self> {
        let report = validate_families(dim, &families, norm);
        if !report.is_valid() {
            return Err(Error::InvalidInstance(report));
        }
        let mut data = Vec::new();
        let mut offsets = vec![0];
        for members in families {
            for v in members {
                data.extend(v);
            }
            offsets.push(data.len() / dim);
        }
        Ok(Instance {
            dim,
            norm,
            data,
            offsets,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> NormKind {
        self.norm
    }

    pub fn n_families(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Total number of vectors `m`.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn family_range(&self, family: usize) -> Range<usize> {
        self.offsets[family]..self.offsets[family + 1]
    }

    pub fn family_size(&self, family: usize) -> usize {
        self.offsets[family + 1] - self.offsets[family]
    }

    pub fn max_family_size(&self) -> usize {
        (0..self.n_families())
            .map(|i| self.family_size(i))
            .max()
            .unwrap_or(0)
    }

    /// Family owning column `column`.
    pub fn family_of(&self, column: usize) -> usize {
        self.offsets.partition_point(|&o| o <= column) - 1
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn member(&self, family: usize, member: usize) -> &[T] {
        self.column(self.offsets[family] + member)
    }

    /// Row `j` of the family matrix, a vector of length `m`.
    pub fn row(&self, j: usize) -> Vec<T> {
        (0..self.len())
            .map(|c| self.data[c * self.dim + j])
            .collect()
    }

    pub fn families(&self) -> Vec<Vec<Vec<T>>> {
        (0..self.n_families())
            .map(|i| {
                self.family_range(i)
                    .map(|c| self.column(c).to_vec())
                    .collect()
            })
            .collect()
    }

    /// Same vectors, re-checked against another norm's unit ball.
    pub fn with_norm(&self, norm: NormKind) -> Result<Self> {
        if norm == self.norm {
            return Ok(self.clone());
        }
        Instance::new(self.dim, self.families(), norm)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_families(self.dim, &self.families(), self.norm)
    }

    /// `V beta`, accumulated column by column.
    pub fn apply(&self, beta: &[T]) -> Vec<T> {
        assert_eq!(beta.len(), self.len(), "coefficient length mismatch");
        let mut out = vec![T::zero(); self.dim];
        for (c, &b) in beta.iter().enumerate() {
            if b != T::zero() {
                for (o, &x) in out.iter_mut().zip(self.column(c)) {
                    *o += b * x;
                }
            }
        }
        out
    }

    /// `V_i (beta|_{V_i})` for a single family.
    pub fn apply_family(&self, family: usize, beta: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for c in self.family_range(family) {
            for (o, &x) in out.iter_mut().zip(self.column(c)) {
                *o += beta[c] * x;
            }
        }
        out
    }

    /// The sub-instance on the columns in `columns`, keeping original
    /// order. Families that lose every column are dropped.
    pub fn restrict(&self, columns: &[usize]) -> Result<Restriction<T>> {
        let columns = normalized_index_set(columns, self.len())?;
        let mut families: Vec<Vec<Vec<T>>> = Vec::new();
        let mut origin = Vec::new();
        for &c in &columns {
            let f = self.family_of(c);
            if origin.last() != Some(&f) {
                origin.push(f);
                families.push(Vec::new());
            }
            families.last_mut().unwrap().push(self.column(c).to_vec());
        }
        if families.is_empty() {
            return Err(Error::PreconditionViolated(
                "restriction to an empty column set".into(),
            ));
        }
        let instance = Instance::new(self.dim, families, self.norm)?;
        Ok(Restriction {
            instance,
            columns,
            families: origin,
        })
    }
}

/// `V|_J` along with the bookkeeping needed to map back into `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct Restriction<T> {
    pub instance: Instance<T>,
    /// Original column index of each restricted column.
    pub columns: Vec<usize>,
    /// Original family index of each restricted family.
    pub families: Vec<usize>,
}

fn normalized_index_set(idx: &[usize], len: usize) -> Result<Vec<usize>> {
    if let Some(&index) = idx.iter().find(|&&i| i >= len) {
        return Err(Error::IndexOutOfRange { index, len });
    }
    let mut idx = idx.to_vec();
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

pub fn is_fractional<T: Scalar>(x: T) -> bool {
    let tau = T::tol(FRACTIONAL_TOL);
    x > tau && x < T::one() - tau
}

/// A point of the coefficient space `R^m`, usually in `Delta_V`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients<T> {
    entries: Vec<T>,
}

impl<T: Scalar> Coefficients<T> {
    pub fn new(entries: Vec<T>) -> Self {
        Coefficients { entries }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<T> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Uniform weights inside every family.
    pub fn barycenter(inst: &Instance<T>) -> Self {
        let mut entries = vec![T::zero(); inst.len()];
        for i in 0..inst.n_families() {
            let w = T::one() / T::of(inst.family_size(i) as f64);
            for c in inst.family_range(i) {
                entries[c] = w;
            }
        }
        Coefficients { entries }
    }

    /// Checks membership in `Delta_V` up to the crate tolerances.
    pub fn check_in(&self, inst: &Instance<T>) -> Result<()> {
        self.check_in_with(inst, T::tol(SIMPLEX_SUM_TOL))
    }

    pub(crate) fn check_in_with(&self, inst: &Instance<T>, sum_tol: T) -> Result<()> {
        if self.len() != inst.len() {
            return Err(Error::LengthMismatch {
                expected: inst.len(),
                got: self.len(),
            });
        }
        let neg = -T::tol(NONNEG_TOL);
        if let Some((c, x)) = self
            .entries
            .iter()
            .enumerate()
            .find(|(_, &x)| x.is_nan() || x < neg)
        {
            return Err(Error::NotConvexCoefficients(format!("entry {c} is {x}")));
        }
        for i in 0..inst.n_families() {
            let s: T = self.entries[inst.family_range(i)].iter().copied().sum();
            if (s - T::one()).abs() > sum_tol {
                return Err(Error::NotConvexCoefficients(format!(
                    "family {i} sums to {s}"
                )));
            }
        }
        Ok(())
    }

    pub fn family_locked(&self, inst: &Instance<T>, family: usize) -> bool {
        !self.entries[inst.family_range(family)]
            .iter()
            .any(|&x| is_fractional(x))
    }

    pub fn free_families(&self, inst: &Instance<T>) -> Vec<usize> {
        (0..inst.n_families())
            .filter(|&i| !self.family_locked(inst, i))
            .collect()
    }

    pub fn is_selection(&self, inst: &Instance<T>) -> bool {
        self.check_in(inst).is_ok() && (0..inst.n_families()).all(|i| self.family_locked(inst, i))
    }

    /// The selection encoded by a selection vector.
    pub fn to_selection(&self, inst: &Instance<T>) -> Option<Selection> {
        if !self.is_selection(inst) {
            return None;
        }
        let half = T::of(0.5);
        let choices = (0..inst.n_families())
            .map(|i| {
                let r = inst.family_range(i);
                self.entries[r].iter().position(|&x| x > half)
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Selection { choices })
    }

    /// Split of `0..m` into fractional and integral coordinates.
    pub fn partition(&self) -> IndexPartition {
        let fractional = (0..self.len())
            .filter(|&c| is_fractional(self.entries[c]))
            .collect();
        IndexPartition::from_fractional(self.len(), fractional).expect("indices are in range")
    }

    /// `beta|_J`, in increasing index order.
    pub fn restrict(&self, idx: &[usize]) -> Result<Self> {
        let idx = normalized_index_set(idx, self.len())?;
        Ok(Coefficients {
            entries: idx.iter().map(|&c| self.entries[c]).collect(),
        })
    }
}

/// `a ∨ b`: the vector equal to `a` on `a_idx` and to `b` on `b_idx`.
pub fn concatenate<T: Scalar>(
    a: &Coefficients<T>,
    a_idx: &[usize],
    b: &Coefficients<T>,
    b_idx: &[usize],
) -> Result<Coefficients<T>> {
    let m = a_idx.len() + b_idx.len();
    if a.len() != a_idx.len() {
        return Err(Error::LengthMismatch {
            expected: a_idx.len(),
            got: a.len(),
        });
    }
    if b.len() != b_idx.len() {
        return Err(Error::LengthMismatch {
            expected: b_idx.len(),
            got: b.len(),
        });
    }
    let mut entries = vec![T::nan(); m];
    let mut seen = vec![false; m];
    for (idx, src) in [(a_idx, a), (b_idx, b)] {
        for (&c, &x) in idx.iter().zip(src.as_slice()) {
            if c >= m || seen[c] {
                return Err(Error::InvalidPartition { len: m });
            }
            seen[c] = true;
            entries[c] = x;
        }
    }
    Ok(Coefficients { entries })
}

/// Fractional index set `F` and its complement `L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexPartition {
    pub fractional: Vec<usize>,
    pub locked: Vec<usize>,
}

impl IndexPartition {
    pub fn from_fractional(m: usize, fractional: Vec<usize>) -> Result<Self> {
        let fractional = normalized_index_set(&fractional, m)?;
        let mut is_frac = vec![false; m];
        for &c in &fractional {
            is_frac[c] = true;
        }
        let locked = (0..m).filter(|&c| !is_frac[c]).collect();
        Ok(IndexPartition { fractional, locked })
    }

    pub fn len(&self) -> usize {
        self.fractional.len() + self.locked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One chosen member per family.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Selection {
    pub choices: Vec<usize>,
}

impl Selection {
    pub fn new<T: Scalar>(inst: &Instance<T>, choices: Vec<usize>) -> Result<Self> {
        if choices.len() != inst.n_families() {
            return Err(Error::LengthMismatch {
                expected: inst.n_families(),
                got: choices.len(),
            });
        }
        for (i, &c) in choices.iter().enumerate() {
            if c >= inst.family_size(i) {
                return Err(Error::IndexOutOfRange {
                    index: c,
                    len: inst.family_size(i),
                });
            }
        }
        Ok(Selection { choices })
    }

    pub fn to_coefficients<T: Scalar>(&self, inst: &Instance<T>) -> Coefficients<T> {
        let mut entries = vec![T::zero(); inst.len()];
        for (i, &c) in self.choices.iter().enumerate() {
            entries[inst.family_range(i).start + c] = T::one();
        }
        Coefficients { entries }
    }

    /// `v_1 + ... + v_n`, added in family order.
    pub fn sum<T: Scalar>(&self, inst: &Instance<T>) -> Vec<T> {
        let mut s = vec![T::zero(); inst.dim()];
        for (i, &c) in self.choices.iter().enumerate() {
            for (acc, &x) in s.iter_mut().zip(inst.member(i, c)) {
                *acc += x;
            }
        }
        s
    }
}

/// `‖Σ v_i − shift‖` in the instance norm.
pub fn selection_norm<T: Scalar>(inst: &Instance<T>, sel: &Selection, shift: Option<&[T]>) -> T {
    let mut s = sel.sum(inst);
    if let Some(shift) = shift {
        for (x, &y) in s.iter_mut().zip(shift) {
            *x -= y;
        }
    }
    inst.norm().norm(&s)
}

/// On-disk instance format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub d: usize,
    pub norm: NormKind,
    pub families: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

impl InstanceFile {
    pub fn from_instance<T: Scalar>(inst: &Instance<T>, witness: Option<&Coefficients<T>>) -> Self {
        let lift = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>();
        InstanceFile {
            d: inst.dim(),
            norm: inst.norm(),
            families: (0..inst.n_families())
                .map(|i| inst.family_range(i).map(|c| lift(inst.column(c))).collect())
                .collect(),
            witness: witness.map(|w| lift(w.as_slice())),
        }
    }

    pub fn to_instance<T: Scalar>(&self) -> Result<Instance<T>> {
        let families = self
            .families
            .iter()
            .map(|f| {
                f.iter()
                    .map(|v| v.iter().map(|&x| T::of(x)).collect())
                    .collect()
            })
            .collect();
        Instance::new(self.d, families, self.norm)
    }

    pub fn witness<T: Scalar>(&self) -> Option<Coefficients<T>> {
        self.witness
            .as_ref()
            .map(|w| Coefficients::new(w.iter().map(|&x| T::of(x)).collect()))
    }
}
