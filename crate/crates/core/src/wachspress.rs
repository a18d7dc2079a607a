//! Wachspress coordinates `φ_v = w_v / W` with
//! `w_v = det(M_v) ∏_{f ∉ F_v} h_f` and `W = Σ_u w_u`, their exact mixed
//! partial derivatives, and the certified a-priori bounds on those
//! derivatives.
//!
//! Evaluation happens in a local frame: the polytope is translated so that
//! the vertex mean sits at the origin and scaled to unit diameter. Weights
//! are products of `|F| − d` linear forms, so in physical units they scale
//! like `h_K^{|F|−d}` and underflow quickly for small elements; the local
//! frame keeps them `O(1)` and derivatives are mapped back with the exact
//! factor `h_K^{−|α|}`.
//!
//! Derivatives of `φ_v` are assembled from the Leibniz rule
//! `D^α φ_v = Σ_{β≤α} C(α,β) D^{α−β} w_v D^β(1/W)` and the multivariate
//! Faà di Bruno expansion of `D^β(1/W)`. Jets and both expansions are
//! accumulated in double-double arithmetic and rounded once per value.

use serde::Serialize;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::experiments::sampling;
use crate::multiindex::{fdb_partitions, GradedIndexSet, MultiIndex};
use crate::polytope::{dot, Polytope};

/// Per-polytope precomputation for Wachspress evaluation.
#[derive(Clone, Debug)]
pub struct WachspressBasis {
    polytope: Polytope,
    dim: usize,
    h_k: f64,
    h_star: f64,
    origin: Vec<f64>,
    /// Unit normals (unchanged by the frame map).
    normals: Vec<Vec<f64>>,
    /// Facet offsets in the local frame.
    local_offsets: Vec<f64>,
    local_offsets_dd: Vec<Dd>,
    det_m: Vec<f64>,
    /// `F ∖ F_v` for each vertex.
    complement: Vec<Vec<usize>>,
}

impl WachspressBasis {
    pub fn new(polytope: &Polytope) -> Self {
        let dim = polytope.dim();
        let n_v = polytope.num_vertices();
        let h_k = polytope.diameter();
        let mut origin = vec![0.0; dim];
        for v in polytope.vertices() {
            for (o, c) in origin.iter_mut().zip(v) {
                *o += c / n_v as f64;
            }
        }
        let normals: Vec<Vec<f64>> = polytope.facets().iter().map(|f| f.normal.clone()).collect();
        let local_offsets = polytope
            .facets()
            .iter()
            .map(|f| (f.offset - dot(&f.normal, &origin)) / h_k)
            .collect();
        let local_offsets_dd = polytope
            .facets()
            .iter()
            .map(|f| {
                let shift: Dd = f.normal.iter().zip(&origin).map(|(n, o)| Dd::new(*n) * *o).sum();
                (Dd::new(f.offset) - shift) / Dd::new(h_k)
            })
            .collect();
        let det_m = (0..n_v).map(|v| polytope.det_normal_matrix(v)).collect();
        let complement = (0..n_v)
            .map(|v| {
                let fv = polytope.vertex_facets(v);
                (0..polytope.num_facets()).filter(|f| !fv.contains(f)).collect()
            })
            .collect();
        WachspressBasis {
            polytope: polytope.clone(),
            dim,
            h_k,
            h_star: polytope.h_star(),
            origin,
            normals,
            local_offsets,
            local_offsets_dd,
            det_m,
            complement,
        }
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.det_m.len()
    }

    pub fn num_facets(&self) -> usize {
        self.normals.len()
    }

    pub fn h_k(&self) -> f64 {
        self.h_k
    }

    pub fn h_star(&self) -> f64 {
        self.h_star
    }

    /// `det(M_v)` for every vertex.
    pub fn det_m(&self) -> &[f64] {
        &self.det_m
    }

    /// Polynomial degree of every weight, `|F| − d`.
    pub fn weight_degree(&self) -> u32 {
        (self.num_facets() - self.dim) as u32
    }

    /// Whether `x` lies in the closed polytope (relative tolerance `1e−9`).
    pub fn contains(&self, x: &[f64]) -> bool {
        self.polytope.contains(x)
    }

    pub(crate) fn to_local(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        x.iter().zip(&self.origin).map(|(a, o)| (a - o) / self.h_k).collect()
    }

    fn to_local_dd(&self, x: &[f64]) -> Vec<Dd> {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        let h = Dd::new(self.h_k);
        x.iter().zip(&self.origin).map(|(a, o)| (Dd::new(*a) - Dd::new(*o)) / h).collect()
    }

    fn local_h_dd(&self, f: usize, xi: &[Dd]) -> Dd {
        self.normals[f]
            .iter()
            .zip(xi)
            .fold(self.local_offsets_dd[f], |acc, (n, x)| acc - *x * *n)
    }

    #[inline]
    fn local_h(&self, f: usize, xi: &[f64]) -> f64 {
        self.local_offsets[f] - dot(&self.normals[f], xi)
    }

    fn local_weight(&self, v: usize, xi: &[f64]) -> f64 {
        self.complement[v]
            .iter()
            .fold(self.det_m[v], |acc, &f| acc * self.local_h(f, xi))
    }

    /// `w_v(x)`. Defined for every `x` (it is a polynomial); non-negative on K.
    pub fn weight(&self, v: usize, x: &[f64]) -> f64 {
        let xi = self.to_local(x);
        self.local_weight(v, &xi) * self.h_k.powi(self.weight_degree() as i32)
    }

    /// `W(x) = Σ_v w_v(x)`; strictly positive on K.
    pub fn weight_sum(&self, x: &[f64]) -> f64 {
        let xi = self.to_local(x);
        let s: f64 = (0..self.num_vertices()).map(|v| self.local_weight(v, &xi)).sum();
        s * self.h_k.powi(self.weight_degree() as i32)
    }

    pub fn phi(&self, v: usize, x: &[f64]) -> f64 {
        self.phi_all(x)[v]
    }

    /// `(φ_v(x))_v`.
    pub fn phi_all(&self, x: &[f64]) -> Vec<f64> {
        let xi = self.to_local(x);
        let w: Vec<f64> = (0..self.num_vertices()).map(|v| self.local_weight(v, &xi)).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|wv| wv / total).collect()
    }

    /// `D^ν w_v(x)` by distributing the `|ν|` differentiations over distinct
    /// linear factors (each `∂_i h_f = −(n_f)_i`). Zero for `|ν| > |F| − d`.
    pub fn d_weight_at(&self, v: usize, nu: &MultiIndex, x: &[f64]) -> f64 {
        assert_eq!(nu.dim(), self.dim, "multi-index dimension mismatch");
        let k = nu.order();
        if k > self.weight_degree() {
            return 0.0;
        }
        let xi = self.to_local(x);
        let mut remaining = nu.components().to_vec();
        let mut factors = self.complement[v].clone();
        let local = self.det_m[v] * self.distribute(&mut factors, &mut remaining, &xi);
        local * self.h_k.powi(self.weight_degree() as i32 - k as i32)
    }

    fn distribute(&self, factors: &mut Vec<usize>, nu: &mut [u32], xi: &[f64]) -> f64 {
        let Some(i) = nu.iter().position(|&c| c > 0) else {
            return factors.iter().map(|&f| self.local_h(f, xi)).product();
        };
        nu[i] -= 1;
        let mut total = 0.0;
        for slot in 0..factors.len() {
            let g = -self.normals[factors[slot]][i];
            if g != 0.0 {
                let f = factors.remove(slot);
                total += g * self.distribute(factors, nu, xi);
                factors.insert(slot, f);
            }
        }
        nu[i] += 1;
        total
    }

    /// `D^ν W(x)`.
    pub fn d_weight_sum_at(&self, nu: &MultiIndex, x: &[f64]) -> f64 {
        (0..self.num_vertices()).map(|v| self.d_weight_at(v, nu, x)).sum()
    }

    /// `D^β (1/W)(x)` through the multivariate Faà di Bruno formula.
    pub fn d_inv_w_at(&self, beta: &MultiIndex, x: &[f64]) -> f64 {
        let engine = DerivativeEngine::new(self.dim, beta.order());
        let pd = engine.evaluate(self, x);
        let j = engine.set.position(beta).expect("β in its own index set");
        pd.inv_w[j] / self.h_k.powi(self.weight_degree() as i32) * self.h_k.powi(-(beta.order() as i32))
    }

    /// `D^α φ_v(x)`.
    pub fn d_phi_at(&self, v: usize, alpha: &MultiIndex, x: &[f64]) -> f64 {
        let engine = DerivativeEngine::new(self.dim, alpha.order());
        let plan = engine.plan(alpha, self.h_k);
        engine.evaluate(self, x).d_phi(v, &plan)
    }

    /// `D^α φ_v(x)` for every vertex.
    pub fn d_phi_all(&self, alpha: &MultiIndex, x: &[f64]) -> Vec<f64> {
        let engine = DerivativeEngine::new(self.dim, alpha.order());
        let plan = engine.plan(alpha, self.h_k);
        let pd = engine.evaluate(self, x);
        (0..self.num_vertices()).map(|v| pd.d_phi(v, &plan)).collect()
    }

    /// `∂^m φ_v / ∂τ^m = Σ_{|α|=m} (m!/α!) τ^α D^α φ_v` for a unit direction τ.
    pub fn directional_d_phi(&self, v: usize, tau: &[f64], m: u32, x: &[f64]) -> Result<f64> {
        let engine = DerivativeEngine::new(self.dim, m);
        let dir = engine.directional_plan(tau, m, self.h_k)?;
        Ok(engine.evaluate(self, x).directional(v, &dir))
    }

    /// `((h_*/h_K)^d, det(M_v), 1)`; errors if the sandwich is violated.
    pub fn detm_bounds(&self, v: usize) -> Result<(f64, f64, f64)> {
        let lower = (self.h_star / self.h_k).powi(self.dim as i32);
        let actual = self.det_m[v];
        if !(lower <= actual && actual <= 1.0 + 1e-15) {
            return Err(Error::InvalidPolytope(format!(
                "det(M_{v}) = {actual} outside [{lower}, 1]"
            )));
        }
        Ok((lower, actual, 1.0))
    }

    /// `(|F|−d)! / (|F|−d−k)! · h_K^{|F|−d−k}`, bounding `|∇^k w_v|` on K.
    pub fn bound_grad_w(&self, k: u32) -> Result<f64> {
        grad_w_bound(self.weight_degree(), k, self.h_k)
    }

    /// `|V| · bound_grad_w(k)`, bounding `|D^ν W|` for `|ν| = k`.
    pub fn bound_dw(&self, k: u32) -> Result<f64> {
        Ok(self.num_vertices() as f64 * self.bound_grad_w(k)?)
    }

    /// `h_*^{|F|} / ((d+1)^{|F|−d} h_K^d)`, a lower bound for `W` on K.
    pub fn w_lower_bound(&self) -> f64 {
        w_lower(self.num_facets(), self.dim, self.h_star, self.h_k)
    }

    /// A certified upper bound for `max_{x∈K} |D^α φ_v(x)|` (any v),
    /// assembled term by term from the expansion of `D^α φ_v`.
    pub fn certified_dphi_bound(&self, alpha: &MultiIndex) -> BoundBreakdown {
        // every term is homogeneous of degree −|α| in the length unit, so the
        // sum is formed at unit diameter and mapped back
        let unit = certified_terms(
            alpha,
            self.num_facets(),
            self.num_vertices(),
            self.dim,
            self.h_star / self.h_k,
            1.0,
        );
        let s = self.h_k.powi(-(alpha.order() as i32));
        BoundBreakdown {
            alpha: alpha.clone(),
            total: unit.total * s,
            zero_term: unit.zero_term * s,
            per_term: unit
                .per_term
                .into_iter()
                .map(|t| BoundTerm { value: t.value * s, ..t })
                .collect(),
            w_low: self.w_lower_bound(),
        }
    }

    /// `Λ_α = max_{x∈K} Σ_v |D^α φ_v(x)|` over the default sample grid of
    /// density `m` (2D only).
    pub fn lambda_alpha(&self, alpha: &MultiIndex, m: usize) -> Result<f64> {
        Ok(sampling::lambda_over_grid(self, alpha, m)?.lambda)
    }
}

fn grad_w_bound(degree: u32, k: u32, h_k: f64) -> Result<f64> {
    if k > degree {
        return Err(Error::InvalidArgument(format!(
            "derivative order {k} exceeds the weight degree {degree}"
        )));
    }
    let falling: f64 = ((degree - k + 1)..=degree).map(f64::from).product();
    Ok(falling * h_k.powi((degree - k) as i32))
}

fn w_lower(n_f: usize, dim: usize, h_star: f64, h_k: f64) -> f64 {
    h_star.powi(n_f as i32) / ((dim as f64 + 1.0).powi((n_f - dim) as i32) * h_k.powi(dim as i32))
}

fn certified_terms(
    alpha: &MultiIndex,
    n_f: usize,
    n_v: usize,
    dim: usize,
    h_star: f64,
    h_k: f64,
) -> BoundBreakdown {
    let degree = (n_f - dim) as u32;
    let w_low = w_lower(n_f, dim, h_star, h_k);
    let bgw = |k: u32| grad_w_bound(degree, k, h_k).unwrap_or(0.0);
    let bdw = |k: u32| n_v as f64 * bgw(k);
    let zero_term = if alpha.order() <= degree {
        bgw(alpha.order()) / w_low
    } else {
        0.0
    };
    let mut per_term = Vec::new();
    for beta in alpha.enumerate_le().into_iter().filter(|b| !b.is_zero()) {
        let rest = alpha.checked_sub(&beta).expect("β ≤ α");
        if rest.order() > degree {
            continue;
        }
        let binom = alpha.binomial(&beta).expect("β ≤ α") as f64;
        for lambda in 1..=beta.order() {
            let lam_fact: f64 = (1..=lambda).map(f64::from).product();
            let terms = fdb_partitions(&beta, lambda).expect("β > 0, λ in range");
            for (pid, term) in terms.iter().enumerate() {
                if term.indices.iter().any(|l| l.order() > degree) {
                    continue;
                }
                let prod: f64 = term
                    .indices
                    .iter()
                    .zip(&term.multiplicities)
                    .map(|(l, &k)| bdw(l.order()).powi(k as i32))
                    .product();
                let value = binom
                    * lam_fact
                    * term.weight(&beta).expect("small orders")
                    * bgw(rest.order())
                    * prod
                    * w_low.powi(-(1 + lambda as i32));
                per_term.push(BoundTerm {
                    beta: beta.clone(),
                    lambda,
                    partition: pid,
                    value,
                });
            }
        }
    }
    let total = zero_term + per_term.iter().map(|t| t.value).sum::<f64>();
    BoundBreakdown {
        alpha: alpha.clone(),
        total,
        zero_term,
        per_term,
        w_low,
    }
}

/// One summand of the certified bound, keyed by `(β, λ, partition index)`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BoundTerm {
    #[serde(serialize_with = "ser_multi_index")]
    pub beta: MultiIndex,
    pub lambda: u32,
    pub partition: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BoundBreakdown {
    #[serde(serialize_with = "ser_multi_index")]
    pub alpha: MultiIndex,
    pub total: f64,
    /// The `β = 0` contribution `bound_grad_w(|α|) / W_low`.
    pub zero_term: f64,
    pub per_term: Vec<BoundTerm>,
    pub w_low: f64,
}

fn ser_multi_index<S: serde::Serializer>(m: &MultiIndex, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(m.components())
}

/// Precomputed Faà di Bruno and Leibniz expansions for every multi-index up
/// to a fixed order; evaluates all needed derivatives at a point in one pass
/// over truncated Taylor jets of the weights.
#[derive(Clone, Debug)]
pub struct DerivativeEngine {
    set: GradedIndexSet,
    /// For each position `j` (a multi-index β > 0), the terms of `D^β(1/W)`.
    inv_terms: Vec<Vec<InvTerm>>,
}

#[derive(Clone, Debug)]
struct InvTerm {
    /// `(−1)^λ λ! β! / ∏ k_j! (l_j!)^{k_j}`
    coef: f64,
    lambda: u32,
    /// `(position of l_j, k_j)`
    parts: Vec<(usize, u32)>,
}

/// Leibniz expansion of one `D^α`, with the physical-unit factor folded in.
#[derive(Clone, Debug)]
pub struct AlphaPlan {
    alpha: MultiIndex,
    /// `(C(α,β), position of α−β, position of β)`
    terms: Vec<(f64, usize, usize)>,
    scale: f64,
}

impl AlphaPlan {
    pub fn alpha(&self) -> &MultiIndex {
        &self.alpha
    }
}

/// `Σ_{|α|=m} (m!/α!) τ^α D^α` as a list of Leibniz plans and coefficients.
#[derive(Clone, Debug)]
pub struct DirectionalPlan {
    parts: Vec<(f64, AlphaPlan)>,
}

impl DerivativeEngine {
    pub fn new(dim: usize, max_order: u32) -> Self {
        let set = GradedIndexSet::new(dim, max_order);
        let inv_terms = set
            .indices()
            .iter()
            .map(|beta| {
                if beta.is_zero() {
                    return Vec::new();
                }
                let mut out = Vec::new();
                for lambda in 1..=beta.order() {
                    let lam_fact: f64 = (1..=lambda).map(f64::from).product();
                    let sign = if lambda % 2 == 0 { 1.0 } else { -1.0 };
                    for term in fdb_partitions(beta, lambda).expect("β > 0") {
                        let coef = sign * lam_fact * term.weight(beta).expect("small orders");
                        let parts = term
                            .indices
                            .iter()
                            .zip(&term.multiplicities)
                            .map(|(l, &k)| (set.position(l).expect("l ≤ β"), k))
                            .collect();
                        out.push(InvTerm { coef, lambda, parts });
                    }
                }
                out
            })
            .collect();
        DerivativeEngine { set, inv_terms }
    }

    pub fn index_set(&self) -> &GradedIndexSet {
        &self.set
    }

    /// Leibniz plan for `D^α`, converting local-frame values to physical units
    /// of a polytope with diameter `h_k`.
    pub fn plan(&self, alpha: &MultiIndex, h_k: f64) -> AlphaPlan {
        assert!(
            alpha.order() <= self.set.max_order(),
            "engine order {} too small for {alpha}",
            self.set.max_order()
        );
        let terms = alpha
            .enumerate_le()
            .into_iter()
            .map(|beta| {
                let rest = alpha.checked_sub(&beta).expect("β ≤ α");
                (
                    alpha.binomial(&beta).expect("β ≤ α") as f64,
                    self.set.position(&rest).expect("in set"),
                    self.set.position(&beta).expect("in set"),
                )
            })
            .collect();
        AlphaPlan {
            alpha: alpha.clone(),
            terms,
            scale: h_k.powi(-(alpha.order() as i32)),
        }
    }

    pub fn directional_plan(&self, tau: &[f64], m: u32, h_k: f64) -> Result<DirectionalPlan> {
        let len = tau.iter().map(|t| t * t).sum::<f64>().sqrt();
        if tau.len() != self.set.dim() || (len - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "direction {tau:?} is not a unit vector in dimension {}",
                self.set.dim()
            )));
        }
        let m_fact: f64 = (1..=m).map(f64::from).product();
        let parts = self
            .set
            .indices()
            .iter()
            .filter(|a| a.order() == m)
            .map(|a| {
                let c = m_fact / a.factorial().expect("small order") as f64 * a.power_of(tau);
                (c, self.plan(a, h_k))
            })
            .collect();
        Ok(DirectionalPlan { parts })
    }

    /// Evaluates all weight jets and `D^β(1/W)` at a physical point.
    pub fn evaluate(&self, basis: &WachspressBasis, x: &[f64]) -> PointDerivatives {
        let xi = basis.to_local_dd(x);
        self.evaluate_local(basis, &xi)
    }

    fn evaluate_local(&self, basis: &WachspressBasis, xi: &[Dd]) -> PointDerivatives {
        let n = self.set.len();
        let dim = self.set.dim();
        let n_v = basis.num_vertices();
        let h: Vec<Dd> = (0..basis.num_facets()).map(|f| basis.local_h_dd(f, xi)).collect();

        let mut dw = vec![Dd::ZERO; n_v * n];
        for v in 0..n_v {
            let jet = &mut dw[v * n..(v + 1) * n];
            jet[0] = Dd::new(basis.det_m[v]);
            for &f in &basis.complement[v] {
                let g = &basis.normals[f];
                // multiply the truncated Taylor jet by h_f(ξ + δ) = h_f(ξ) − n_f·δ
                for j in (0..n).rev() {
                    let mut acc = h[f] * jet[j];
                    for (i, gi) in g.iter().enumerate().take(dim) {
                        if let Some(p) = self.set.lower(j, i) {
                            acc = acc - jet[p] * *gi;
                        }
                    }
                    jet[j] = acc;
                }
            }
            for (j, c) in jet.iter_mut().enumerate() {
                *c = *c * self.set.factorial(j);
            }
        }

        let mut dws = vec![Dd::ZERO; n];
        for v in 0..n_v {
            for j in 0..n {
                dws[j] += dw[v * n + j];
            }
        }

        let mut inv_w = vec![Dd::ZERO; n];
        let mut inv_pow = vec![dws[0].recip()];
        let max_lambda = self.set.max_order() as usize;
        for l in 1..=max_lambda {
            inv_pow.push(inv_pow[l - 1] * inv_pow[0]);
        }
        inv_w[0] = inv_pow[0];
        for (j, terms) in self.inv_terms.iter().enumerate().skip(1) {
            inv_w[j] = terms
                .iter()
                .map(|t| {
                    let prod = t
                        .parts
                        .iter()
                        .fold(Dd::new(1.0), |acc, &(p, k)| acc * dws[p].powi(k));
                    inv_pow[t.lambda as usize] * prod * t.coef
                })
                .sum();
        }

        let round = |v: &[Dd]| v.iter().map(|d| d.to_f64()).collect();
        PointDerivatives {
            n,
            dw: round(&dw),
            dw_sum: round(&dws),
            inv_w: round(&inv_w),
            dw_dd: dw,
            inv_w_dd: inv_w,
        }
    }
}

/// Local-frame derivative data at one point.
#[derive(Clone, Debug)]
pub struct PointDerivatives {
    n: usize,
    /// `D^ν ŵ_v`, row per vertex, column per multi-index position.
    pub dw: Vec<f64>,
    /// `D^ν Ŵ`.
    pub dw_sum: Vec<f64>,
    /// `D^β (1/Ŵ)`.
    pub inv_w: Vec<f64>,
    dw_dd: Vec<Dd>,
    inv_w_dd: Vec<Dd>,
}

impl PointDerivatives {
    /// `D^α φ_v` in physical units.
    #[inline]
    pub fn d_phi(&self, v: usize, plan: &AlphaPlan) -> f64 {
        let row = &self.dw_dd[v * self.n..(v + 1) * self.n];
        let sum: Dd = plan
            .terms
            .iter()
            .map(|&(c, rest, beta)| row[rest] * self.inv_w_dd[beta] * c)
            .sum();
        sum.to_f64() * plan.scale
    }

    pub fn directional(&self, v: usize, plan: &DirectionalPlan) -> f64 {
        plan.parts.iter().map(|(c, p)| c * self.d_phi(v, p)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn square() -> WachspressBasis {
        WachspressBasis::new(
            &Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap(),
        )
    }

    fn triangle() -> WachspressBasis {
        WachspressBasis::new(
            &Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap(),
        )
    }

    fn vid(b: &WachspressBasis, x: f64, y: f64) -> usize {
        b.polytope()
            .vertices()
            .iter()
            .position(|v| v[0] == x && v[1] == y)
            .unwrap()
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn square_weights() {
        let b = square();
        let v0 = vid(&b, 0.0, 0.0);
        assert!(close(b.weight(v0, &[0.25, 0.25]), 0.5625, 1e-15));
        for x in [[0.1, 0.9], [0.5, 0.5], [1.0, 0.0]] {
            assert!(close(b.weight_sum(&x), 1.0, 1e-15));
        }
        let phi = b.phi_all(&[0.5, 0.5]);
        assert!(phi.iter().all(|p| close(*p, 0.25, 1e-15)));
        assert!(close(b.d_weight_at(v0, &mi(&[1, 0]), &[0.0, 0.0]), -1.0, 1e-15));
        assert!(close(b.d_weight_at(v0, &mi(&[1, 1]), &[0.3, 0.8]), 1.0, 1e-15));
        assert_eq!(b.d_weight_at(v0, &mi(&[2, 1]), &[0.3, 0.8]), 0.0);
        assert!(close(b.d_weight_sum_at(&mi(&[1, 0]), &[0.3, 0.8]), 0.0, 1e-15));
    }

    #[test]
    fn triangle_weights() {
        let b = triangle();
        let v0 = vid(&b, 0.0, 0.0);
        assert!(close(b.weight(v0, &[0.2, 0.2]), 0.6 / SQRT_2, 1e-15));
        let phi = b.phi_all(&[0.2, 0.3]);
        assert!(close(phi[v0], 0.5, 1e-15));
        // W is affine on a triangle
        let a = b.d_weight_sum_at(&mi(&[1, 0]), &[0.1, 0.1]);
        let c = b.d_weight_sum_at(&mi(&[1, 0]), &[0.5, 0.2]);
        assert!(close(a, c, 1e-15));
        // centroid: each weight is det(M_v) times the distance to the opposite edge
        let g = [1.0 / 3.0, 1.0 / 3.0];
        let direct: f64 = (0..3)
            .map(|v| {
                let opp = (0..3)
                    .find(|f| !b.polytope().vertex_facets(v).contains(f))
                    .unwrap();
                b.det_m()[v] * b.polytope().h_f_at(opp, &g)
            })
            .sum();
        assert!(close(b.weight_sum(&g), direct, 1e-15));
    }

    #[test]
    fn vertex_interpolation() {
        let b = square();
        for (u, v) in b.polytope().vertices().iter().enumerate() {
            let phi = b.phi_all(v);
            for (w, p) in phi.iter().enumerate() {
                assert!(close(*p, if u == w { 1.0 } else { 0.0 }, 1e-14));
            }
        }
    }

    #[test]
    fn inverse_w_quotient_identities() {
        let p = Polytope::from_vertices_2d(&[
            [0.0, 0.0],
            [1.0, 0.1],
            [1.2, 0.8],
            [0.5, 1.1],
            [-0.2, 0.6],
        ])
        .unwrap();
        let b = WachspressBasis::new(&p);
        let x = [0.4, 0.5];
        let w = b.weight_sum(&x);
        let wx = b.d_weight_sum_at(&mi(&[1, 0]), &x);
        let wy = b.d_weight_sum_at(&mi(&[0, 1]), &x);
        let wxx = b.d_weight_sum_at(&mi(&[2, 0]), &x);
        let wxy = b.d_weight_sum_at(&mi(&[1, 1]), &x);
        let expect_xx = -wxx / (w * w) + 2.0 * wx * wx / (w * w * w);
        let expect_xy = -wxy / (w * w) + 2.0 * wx * wy / (w * w * w);
        let got_xx = b.d_inv_w_at(&mi(&[2, 0]), &x);
        let got_xy = b.d_inv_w_at(&mi(&[1, 1]), &x);
        assert!(close(got_xx, expect_xx, 1e-12 * expect_xx.abs().max(1.0)));
        assert!(close(got_xy, expect_xy, 1e-12 * expect_xy.abs().max(1.0)));
        assert!(close(b.d_inv_w_at(&mi(&[0, 0]), &x), 1.0 / w, 1e-14 / w));
    }

    #[test]
    fn inverse_w_on_square_vanishes() {
        let b = square();
        for beta in [mi(&[1, 0]), mi(&[1, 1]), mi(&[0, 3])] {
            assert!(close(b.d_inv_w_at(&beta, &[0.3, 0.6]), 0.0, 1e-14));
        }
    }

    #[test]
    fn phi_derivatives_on_simple_shapes() {
        let b = square();
        let v0 = vid(&b, 0.0, 0.0);
        assert!(close(b.d_phi_at(v0, &mi(&[1, 1]), &[0.2, 0.9]), 1.0, 1e-14));
        assert!(close(b.d_phi_at(v0, &mi(&[0, 0]), &[0.5, 0.5]), 0.25, 1e-15));
        let t = triangle();
        for v in 0..3 {
            for a in [mi(&[2, 0]), mi(&[1, 1]), mi(&[1, 2]), mi(&[0, 3])] {
                assert!(close(t.d_phi_at(v, &a, &[0.2, 0.3]), 0.0, 1e-13));
            }
        }
    }

    #[test]
    fn directional_derivatives() {
        let p = Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.1], [1.2, 0.8], [-0.2, 0.6]])
            .unwrap();
        let b = WachspressBasis::new(&p);
        let x = [0.5, 0.4];
        for v in 0..4 {
            let d = b.directional_d_phi(v, &[1.0, 0.0], 2, &x).unwrap();
            assert!(close(d, b.d_phi_at(v, &mi(&[2, 0]), &x), 1e-12));
            let d = b.directional_d_phi(v, &[0.0, 1.0], 3, &x).unwrap();
            assert!(close(d, b.d_phi_at(v, &mi(&[0, 3]), &x), 1e-11));
        }
        let s = square();
        let v0 = vid(&s, 0.0, 0.0);
        let d = s
            .directional_d_phi(v0, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], 2, &[0.3, 0.3])
            .unwrap();
        assert!(close(d, 1.0, 1e-14));
        assert!(s.directional_d_phi(v0, &[1.0, 1.0], 2, &[0.3, 0.3]).is_err());
    }

    #[test]
    fn detm_bound_examples() {
        let (lo, act, up) = square().detm_bounds(0).unwrap();
        assert!(close(lo, 0.5, 1e-15) && close(act, 1.0, 1e-15) && up == 1.0);
        let hex: Vec<[f64; 2]> = (0..6)
            .map(|k| {
                let t = k as f64 * std::f64::consts::PI / 3.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let h = WachspressBasis::new(&Polytope::from_vertices_2d(&hex).unwrap());
        for v in 0..6 {
            assert!(close(h.detm_bounds(v).unwrap().1, 3f64.sqrt() / 2.0, 1e-14));
        }
        let t = triangle();
        let v = vid(&t, 1.0, 0.0);
        assert!(close(t.detm_bounds(v).unwrap().1, FRAC_1_SQRT_2, 1e-15));
    }

    #[test]
    fn gradient_and_weight_bounds() {
        let s = square();
        assert!(close(s.bound_grad_w(1).unwrap(), 2.0 * SQRT_2, 1e-14));
        assert!(close(s.bound_grad_w(2).unwrap(), 2.0, 1e-14));
        assert!(close(s.bound_grad_w(0).unwrap(), 2.0, 1e-14));
        assert!(s.bound_grad_w(3).is_err());
        assert!(close(s.bound_dw(1).unwrap(), 8.0 * SQRT_2, 1e-13));
        assert!(close(s.bound_dw(0).unwrap(), 8.0, 1e-13));
        assert!(close(s.w_lower_bound(), 1.0 / 18.0, 1e-15));
        assert!(close(triangle().w_lower_bound(), 1.0 / (12.0 * SQRT_2), 1e-15));
        let big = WachspressBasis::new(&s.polytope().scaled(3.0));
        assert!(close(big.w_lower_bound(), 9.0 * s.w_lower_bound(), 1e-14));
    }

    #[test]
    fn certified_bound_structure() {
        let t = triangle();
        let bd = t.certified_dphi_bound(&mi(&[2, 0]));
        assert!(bd.total > 0.0);
        assert_eq!(bd.zero_term, 0.0);
        let sum: f64 = bd.per_term.iter().map(|t| t.value).sum();
        assert!(close(bd.total, sum + bd.zero_term, 1e-12 * bd.total));
        assert!(bd.per_term.iter().all(|t| t.value >= 0.0));
        // |α − β| = 2 exceeds the weight degree 1 for β = 0: only β ≥ (1,0) survive
        assert!(bd.per_term.iter().all(|t| t.beta.order() >= 1));

        let s = square();
        let bd = s.certified_dphi_bound(&mi(&[1, 0]));
        assert!(bd.total >= 1.0);
    }

    #[test]
    fn certified_bound_scales_like_h_to_minus_alpha() {
        let s = square();
        let small = WachspressBasis::new(&s.polytope().scaled(1e-3));
        let a = mi(&[2, 1]);
        let r = small.certified_dphi_bound(&a).total / s.certified_dphi_bound(&a).total;
        assert!(close(r, 1e9, 1e-3));
    }

    #[test]
    fn lambda_on_square() {
        let s = square();
        assert!(close(s.lambda_alpha(&mi(&[1, 0]), 8).unwrap(), 2.0, 1e-12));
        assert!(close(s.lambda_alpha(&mi(&[1, 1]), 8).unwrap(), 4.0, 1e-12));
        assert!(close(s.lambda_alpha(&mi(&[2, 0]), 8).unwrap(), 0.0, 1e-12));
    }
}
