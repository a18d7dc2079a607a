//! Multi-index arithmetic and the combinatorial enumerations behind the
//! Leibniz and multivariate Faà di Bruno expansions.
//!
//! Multi-indices are totally ordered by the graded-lexicographic order `≺`:
//! lower total order first, and within one total order the index whose first
//! differing component is smaller comes first, so `(0,1) ≺ (1,0)`. Every
//! enumeration in this module is emitted in that order so downstream output is
//! byte-stable.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Largest total order accepted by [`MultiIndex::factorial`].
pub const MAX_FACTORIAL_ORDER: u32 = 20;

/// A d-tuple of non-negative integers `(α_1, …, α_d)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        MultiIndex(components)
    }

    pub fn zeros(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// The unit index `e_i` in dimension `dim`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut c = vec![0; dim];
        c[i] = 1;
        MultiIndex(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    /// `|α| = Σ α_i`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// `α! = α_1! ⋯ α_d!`, exact. Fails for `|α| > 20`.
    pub fn factorial(&self) -> Result<u128> {
        if self.order() > MAX_FACTORIAL_ORDER {
            return Err(Error::Overflow(format!(
                "factorial of {self} exceeds the supported order {MAX_FACTORIAL_ORDER}"
            )));
        }
        self.0.iter().try_fold(1u128, |acc, &c| {
            factorial_u128(c).and_then(|f| acc.checked_mul(f)).ok_or_else(|| {
                Error::Overflow(format!("factorial of {self}"))
            })
        })
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `α − β`, requiring `β ≤ α`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Result<MultiIndex> {
        self.check_dim(other)?;
        if !other.le(self) {
            return Err(Error::NotBelow {
                lower: other.0.clone(),
                upper: self.0.clone(),
            });
        }
        Ok(MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, k: u32) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| a * k).collect())
    }

    /// Multi-binomial coefficient `∏ C(α_i, β_i)` for `β ≤ α`.
    pub fn binomial(&self, beta: &MultiIndex) -> Result<u128> {
        self.check_dim(beta)?;
        if !beta.le(self) {
            return Err(Error::NotBelow {
                lower: beta.0.clone(),
                upper: self.0.clone(),
            });
        }
        self.0.iter().zip(&beta.0).try_fold(1u128, |acc, (&a, &b)| {
            acc.checked_mul(binomial_u128(a, b))
                .ok_or_else(|| Error::Overflow(format!("binomial({self}, {beta})")))
        })
    }

    /// The strict graded-lexicographic order: `self ≺ other`.
    pub fn prec(&self, other: &MultiIndex) -> bool {
        graded_cmp(self, other) == Ordering::Less
    }

    /// All `β` with `0 ≤ β ≤ α`, sorted by `≺`. There are `∏(α_i + 1)` of them.
    pub fn enumerate_le(&self) -> Vec<MultiIndex> {
        let mut out = Vec::with_capacity(self.0.iter().map(|&a| a as usize + 1).product());
        let mut cur = vec![0u32; self.dim()];
        loop {
            out.push(MultiIndex(cur.clone()));
            // odometer increment
            let mut i = 0;
            loop {
                if i == cur.len() {
                    out.sort_by(graded_cmp);
                    return out;
                }
                if cur[i] < self.0[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }

    /// `τ^α = ∏ τ_i^{α_i}`.
    pub fn power_of(&self, tau: &[f64]) -> f64 {
        self.0.iter().zip(tau).map(|(&a, &t)| t.powi(a as i32)).product()
    }

    fn check_dim(&self, other: &MultiIndex) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl<const N: usize> From<[u32; N]> for MultiIndex {
    fn from(v: [u32; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

/// Total order extending `≺` (equal indices compare `Equal`).
pub fn graded_cmp(a: &MultiIndex, b: &MultiIndex) -> Ordering {
    a.order().cmp(&b.order()).then_with(|| a.0.cmp(&b.0))
}

fn factorial_u128(n: u32) -> Option<u128> {
    (1..=n as u128).try_fold(1u128, |acc, k| acc.checked_mul(k))
}

fn binomial_u128(n: u32, k: u32) -> u128 {
    let k = k.min(n - k) as u128;
    let n = n as u128;
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// One element `(k_1,…,k_s; l_1,…,l_s)` of the partition set `p_s(β, λ)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FdbTerm {
    pub multiplicities: Vec<u32>,
    pub indices: Vec<MultiIndex>,
}

impl FdbTerm {
    /// Number of distinct parts `s`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `Σ k_i`.
    pub fn lambda(&self) -> u32 {
        self.multiplicities.iter().sum()
    }

    /// `Σ k_i l_i`.
    pub fn total(&self) -> MultiIndex {
        let dim = self.indices.first().map_or(0, MultiIndex::dim);
        self.indices
            .iter()
            .zip(&self.multiplicities)
            .fold(MultiIndex::zeros(dim), |acc, (l, &k)| acc.add(&l.scale(k)))
    }

    /// `β! / ∏ (k_j! (l_j!)^{k_j})`, the combinatorial weight of this term.
    pub fn weight(&self, beta: &MultiIndex) -> Result<f64> {
        let mut denom = 1u128;
        for (l, &k) in self.indices.iter().zip(&self.multiplicities) {
            let lf = l.factorial()?;
            let kf = factorial_u128(k).ok_or_else(|| Error::Overflow("k!".into()))?;
            let p = lf
                .checked_pow(k)
                .and_then(|p| p.checked_mul(kf))
                .ok_or_else(|| Error::Overflow("Faà di Bruno denominator".into()))?;
            denom = denom
                .checked_mul(p)
                .ok_or_else(|| Error::Overflow("Faà di Bruno denominator".into()))?;
        }
        Ok(beta.factorial()? as f64 / denom as f64)
    }
}

/// Enumerate `⋃_s p_s(β, λ)`: every `(k; l)` with `0 ≺ l_1 ≺ ⋯ ≺ l_s`,
/// `Σ k_i = λ` and `Σ k_i l_i = β`.
pub fn fdb_partitions(beta: &MultiIndex, lambda: u32) -> Result<Vec<FdbTerm>> {
    if beta.is_zero() {
        return Err(Error::InvalidArgument("Faà di Bruno partitions need β > 0".into()));
    }
    if lambda == 0 || lambda > beta.order() {
        return Err(Error::InvalidArgument(format!(
            "λ = {lambda} outside 1..={} for β = {beta}",
            beta.order()
        )));
    }
    let candidates: Vec<MultiIndex> = beta
        .enumerate_le()
        .into_iter()
        .filter(|l| !l.is_zero())
        .collect();
    let mut out = Vec::new();
    let mut ks = Vec::new();
    let mut ls = Vec::new();
    descend(&candidates, 0, beta.clone(), lambda, &mut ks, &mut ls, &mut out);
    Ok(out)
}

fn descend(
    candidates: &[MultiIndex],
    start: usize,
    remaining: MultiIndex,
    budget: u32,
    ks: &mut Vec<u32>,
    ls: &mut Vec<usize>,
    out: &mut Vec<FdbTerm>,
) {
    if budget == 0 {
        if remaining.is_zero() {
            out.push(FdbTerm {
                multiplicities: ks.clone(),
                indices: ls.iter().map(|&i| candidates[i].clone()).collect(),
            });
        }
        return;
    }
    // every remaining part has order >= 1
    if budget > remaining.order() {
        return;
    }
    for (idx, l) in candidates.iter().enumerate().skip(start) {
        let mut k = 1;
        while k <= budget {
            let used = l.scale(k);
            if !used.le(&remaining) {
                break;
            }
            ks.push(k);
            ls.push(idx);
            let rest = remaining.checked_sub(&used).expect("checked le above");
            descend(candidates, idx + 1, rest, budget - k, ks, ls, out);
            ks.pop();
            ls.pop();
            k += 1;
        }
    }
}

/// Every multi-index of dimension `dim` and order `≤ max_order`, in `≺` order,
/// with lookup tables for `ν − e_i`. This is the coefficient layout of the
/// truncated Taylor jets used by the derivative engine.
#[derive(Clone, Debug)]
pub struct GradedIndexSet {
    dim: usize,
    max_order: u32,
    indices: Vec<MultiIndex>,
    /// `lower[j * dim + i]` = position of `indices[j] − e_i`, or `usize::MAX`.
    lower: Vec<usize>,
    /// `ν!` as f64 for each entry.
    factorials: Vec<f64>,
}

impl GradedIndexSet {
    pub fn new(dim: usize, max_order: u32) -> Self {
        let top = MultiIndex(vec![max_order; dim]);
        let indices: Vec<MultiIndex> = top
            .enumerate_le()
            .into_iter()
            .filter(|m| m.order() <= max_order)
            .collect();
        let position = |m: &MultiIndex| indices.binary_search_by(|p| graded_cmp(p, m)).ok();
        let mut lower = vec![usize::MAX; indices.len() * dim];
        for (j, m) in indices.iter().enumerate() {
            for i in 0..dim {
                if m.0[i] > 0 {
                    let mut c = m.0.clone();
                    c[i] -= 1;
                    lower[j * dim + i] = position(&MultiIndex(c)).expect("closed under e_i removal");
                }
            }
        }
        let factorials = indices
            .iter()
            .map(|m| m.factorial().expect("small order") as f64)
            .collect();
        GradedIndexSet {
            dim,
            max_order,
            indices,
            lower,
            factorials,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, j: usize) -> &MultiIndex {
        &self.indices[j]
    }

    pub fn position(&self, m: &MultiIndex) -> Option<usize> {
        if m.dim() != self.dim || m.order() > self.max_order {
            return None;
        }
        self.indices.binary_search_by(|p| graded_cmp(p, m)).ok()
    }

    #[inline]
    pub fn lower(&self, j: usize, i: usize) -> Option<usize> {
        let p = self.lower[j * self.dim + i];
        (p != usize::MAX).then_some(p)
    }

    #[inline]
    pub fn factorial(&self, j: usize) -> f64 {
        self.factorials[j]
    }
}
