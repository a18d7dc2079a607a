//! Numerical studies of `Λ_α = max_{x∈K} Σ_v |D^α φ_v(x)|`: scaling with the
//! diameter, with the vertex count, and under degeneration of one edge;
//! log-log fits; CSV and SVG output.

pub mod sampling;

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::polygen::{
    convex_hull_2d, family_k, random_convex_polygon, scale_polygon, Family, HistogramBin, MeshStats, RngStream,
};
use crate::polytope::{Polytope, ShapeReport};
use crate::wachspress::{DerivativeEngine, WachspressBasis};
use sampling::{grid_maxima, Probe, SampleGrid};

pub const DEFAULT_DENSITY: usize = 40;

/// All 2D multi-indices with `1 ≤ |α| ≤ max_order`, in graded order.
pub fn alphas_up_to(max_order: u32) -> Vec<MultiIndex> {
    (1..=max_order)
        .flat_map(|k| (0..=k).map(move |i| MultiIndex::new(vec![i, k - i])))
        .collect()
}

fn default_alphas() -> Vec<[u32; 2]> {
    alphas_up_to(3)
        .iter()
        .map(|a| [a.components()[0], a.components()[1]])
        .collect()
}

/// Settings for the `Λ_α` vs `h_K` study.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ScalingHkConfig {
    pub count: usize,
    pub hk_min: f64,
    pub hk_max: f64,
    /// Polygons with `h_*/h_K` below this are redrawn.
    pub min_ratio: f64,
    /// Points whose hull forms each polygon.
    pub n_points: usize,
    pub alphas: Vec<[u32; 2]>,
    pub density: usize,
    /// Sample on [`SampleGrid::refined`] instead of the plain grid.
    pub refine: bool,
    pub seed: u64,
}

impl Default for ScalingHkConfig {
    fn default() -> Self {
        ScalingHkConfig {
            count: 100,
            hk_min: 1e-5,
            hk_max: 1.0,
            min_ratio: 0.01,
            n_points: 20,
            alphas: default_alphas(),
            density: DEFAULT_DENSITY,
            refine: true,
            seed: 0,
        }
    }
}

/// Settings for the `Λ_α` vs `|V|` study.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ScalingNConfig {
    pub count: usize,
    pub min_vertices: usize,
    pub max_vertices: usize,
    pub min_ratio: f64,
    pub alphas: Vec<[u32; 2]>,
    pub density: usize,
    /// Sample on [`SampleGrid::refined`] instead of the plain grid.
    pub refine: bool,
    pub seed: u64,
}

impl Default for ScalingNConfig {
    fn default() -> Self {
        ScalingNConfig {
            count: 100,
            min_vertices: 3,
            max_vertices: 10,
            min_ratio: 0.01,
            alphas: default_alphas(),
            density: DEFAULT_DENSITY,
            refine: true,
            seed: 0,
        }
    }
}

/// Settings for the degeneration study on one family.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct DegenerationConfig {
    pub family: Family,
    /// `a_j = a0 · 2^{−j}` for `j = 0..=halvings`.
    pub a0: f64,
    pub halvings: u32,
    pub alphas: Vec<[u32; 2]>,
    /// Orders of the derivative along the short edge; empty to skip.
    pub tangential_orders: Vec<u32>,
    pub density: usize,
    /// Sample on [`SampleGrid::refined`] instead of the plain grid.
    pub refine: bool,
}

impl Default for DegenerationConfig {
    fn default() -> Self {
        DegenerationConfig {
            family: Family::K3,
            a0: 0.4,
            halvings: 16,
            alphas: default_alphas(),
            tangential_orders: vec![1, 2, 3],
            density: DEFAULT_DENSITY,
            refine: true,
        }
    }
}

fn to_multi(alphas: &[[u32; 2]]) -> Result<Vec<MultiIndex>> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("empty α set".into()));
    }
    Ok(alphas.iter().map(|a| MultiIndex::new(a.to_vec())).collect())
}

/// One row of the scaling studies: a polygon and one `α`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRecord {
    pub polygon_id: usize,
    pub seed: u64,
    pub h_k: f64,
    pub h_star: f64,
    pub n_vertices: usize,
    pub alpha: MultiIndex,
    pub lambda: f64,
    pub per_vertex_max: Vec<f64>,
    /// Certified bound for a single `|D^α φ_v|`.
    pub certified_bound: f64,
}

/// Which derivative a degeneration row measures.
#[derive(Clone, Debug, PartialEq)]
pub enum Derivative {
    Partial(MultiIndex),
    /// `∂^m/∂τ^m` along the unit tangent of the short edge.
    Tangential(u32),
}

impl Derivative {
    pub fn order(&self) -> u32 {
        match self {
            Derivative::Partial(a) => a.order(),
            Derivative::Tangential(m) => *m,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Derivative::Partial(a) => format!("D{a}"),
            Derivative::Tangential(m) => format!("tau^{m}"),
        }
    }
}

/// One row of the degeneration study.
#[derive(Clone, Debug, PartialEq)]
pub struct DegenerationRecord {
    pub family: Family,
    pub step: u32,
    pub a: f64,
    pub h_k: f64,
    pub h_star: f64,
    pub derivative: Derivative,
    pub lambda: f64,
    pub per_vertex_max: Vec<f64>,
}

/// Tabular output with a fixed header.
pub trait Table {
    fn header() -> Vec<&'static str>;
    fn row(&self) -> Vec<String>;
    /// Numeric value of a column, for plotting.
    fn numeric(&self, field: &str) -> Option<f64>;
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

impl Table for ScalingRecord {
    fn header() -> Vec<&'static str> {
        vec![
            "polygon_id",
            "seed",
            "h_k",
            "h_star",
            "h_star_over_h_k",
            "n_vertices",
            "alpha_x",
            "alpha_y",
            "order",
            "lambda",
            "certified_bound",
            "per_vertex_max",
        ]
    }

    fn row(&self) -> Vec<String> {
        let c = self.alpha.components();
        vec![
            self.polygon_id.to_string(),
            self.seed.to_string(),
            num(self.h_k),
            num(self.h_star),
            num(self.h_star / self.h_k),
            self.n_vertices.to_string(),
            c[0].to_string(),
            c[1].to_string(),
            self.alpha.order().to_string(),
            num(self.lambda),
            num(self.certified_bound),
            join(&self.per_vertex_max),
        ]
    }

    fn numeric(&self, field: &str) -> Option<f64> {
        Some(match field {
            "polygon_id" => self.polygon_id as f64,
            "h_k" => self.h_k,
            "h_star" => self.h_star,
            "h_star_over_h_k" => self.h_star / self.h_k,
            "n_vertices" => self.n_vertices as f64,
            "order" => self.alpha.order() as f64,
            "lambda" => self.lambda,
            "certified_bound" => self.certified_bound,
            _ => return None,
        })
    }
}

impl Table for DegenerationRecord {
    fn header() -> Vec<&'static str> {
        vec![
            "family",
            "step",
            "a",
            "h_k",
            "h_star",
            "derivative",
            "order",
            "lambda",
            "per_vertex_max",
        ]
    }

    fn row(&self) -> Vec<String> {
        vec![
            format!("{:?}", self.family),
            self.step.to_string(),
            num(self.a),
            num(self.h_k),
            num(self.h_star),
            self.derivative.label(),
            self.derivative.order().to_string(),
            num(self.lambda),
            join(&self.per_vertex_max),
        ]
    }

    fn numeric(&self, field: &str) -> Option<f64> {
        Some(match field {
            "step" => self.step as f64,
            "a" => self.a,
            "h_k" => self.h_k,
            "h_star" => self.h_star,
            "order" => self.derivative.order() as f64,
            "lambda" => self.lambda,
            _ => {
                let v: usize = field.strip_prefix("vertex_")?.parse().ok()?;
                *self.per_vertex_max.get(v)?
            }
        })
    }
}

/// A shape report tagged with the polygon or cell it describes.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexedReport {
    pub id: usize,
    pub report: ShapeReport,
}

impl Table for IndexedReport {
    fn header() -> Vec<&'static str> {
        vec![
            "id",
            "n_vertices",
            "n_facets",
            "h_k",
            "h_star",
            "rho_k",
            "r_k",
            "w_k",
            "min_edge",
            "min_vertex_gap",
            "min_angle",
            "max_angle",
            "h_star_over_h_k",
            "min_edge_over_h_k",
            "w_k_over_h_k",
            "h_k_over_rho_k",
            "h1",
            "h2",
            "h3",
            "h4",
            "h5",
            "h5_prime",
            "h6",
            "h7",
        ]
    }

    fn row(&self) -> Vec<String> {
        let r = &self.report;
        let mut out = vec![self.id.to_string(), r.n_vertices.to_string(), r.n_facets.to_string()];
        out.extend(
            [
                r.h_k,
                r.h_star,
                r.rho_k,
                r.r_k,
                r.w_k,
                r.min_edge,
                r.min_vertex_gap,
                r.min_angle,
                r.max_angle,
                r.h_star_over_h_k,
                r.min_edge_over_h_k,
                r.w_k_over_h_k,
                r.h_k_over_rho_k,
            ]
            .map(num),
        );
        out.extend([r.h1, r.h2, r.h3, r.h4, r.h5, r.h5_prime, r.h6, r.h7].map(|b| b.to_string()));
        out
    }

    fn numeric(&self, field: &str) -> Option<f64> {
        let r = &self.report;
        Some(match field {
            "id" => self.id as f64,
            "n_vertices" => r.n_vertices as f64,
            "n_facets" => r.n_facets as f64,
            "h_k" => r.h_k,
            "h_star" => r.h_star,
            "rho_k" => r.rho_k,
            "r_k" => r.r_k,
            "w_k" => r.w_k,
            "min_edge" => r.min_edge,
            "min_vertex_gap" => r.min_vertex_gap,
            "min_angle" => r.min_angle,
            "max_angle" => r.max_angle,
            "h_star_over_h_k" => r.h_star_over_h_k,
            "min_edge_over_h_k" => r.min_edge_over_h_k,
            "w_k_over_h_k" => r.w_k_over_h_k,
            "h_k_over_rho_k" => r.h_k_over_rho_k,
            _ => return None,
        })
    }
}

impl Table for HistogramBin {
    fn header() -> Vec<&'static str> {
        vec!["lo", "hi", "count"]
    }

    fn row(&self) -> Vec<String> {
        vec![num(self.lo), num(self.hi), self.count.to_string()]
    }

    fn numeric(&self, field: &str) -> Option<f64> {
        Some(match field {
            "lo" => self.lo,
            "hi" => self.hi,
            "count" => self.count as f64,
            _ => return None,
        })
    }
}

/// Number of cells with a given vertex count.
#[derive(Clone, Debug, PartialEq)]
pub struct NgonCount {
    pub n: usize,
    pub count: usize,
}

impl Table for NgonCount {
    fn header() -> Vec<&'static str> {
        vec!["n", "count"]
    }

    fn row(&self) -> Vec<String> {
        vec![self.n.to_string(), self.count.to_string()]
    }

    fn numeric(&self, field: &str) -> Option<f64> {
        Some(match field {
            "n" => self.n as f64,
            "count" => self.count as f64,
            _ => return None,
        })
    }
}

/// Table views of [`MeshStats`].
pub fn mesh_stats_tables(stats: &MeshStats) -> (Vec<IndexedReport>, Vec<NgonCount>) {
    let reports = stats
        .reports
        .iter()
        .enumerate()
        .map(|(id, r)| IndexedReport { id, report: r.clone() })
        .collect();
    let ngons = stats
        .ngon_counts
        .iter()
        .map(|(&n, &count)| NgonCount { n, count })
        .collect();
    (reports, ngons)
}

/// Maxima of every `α` over the grid of one polygon.
fn polygon_rows(
    polygon: &Polytope,
    polygon_id: usize,
    seed: u64,
    alphas: &[MultiIndex],
    density: usize,
    refine: bool,
) -> Result<Vec<ScalingRecord>> {
    let basis = WachspressBasis::new(polygon);
    let grid = sample_grid(polygon, density, refine)?;
    let max_order = alphas.iter().map(|a| a.order()).max().unwrap_or(0);
    let engine = DerivativeEngine::new(2, max_order);
    let probes: Vec<Probe> = alphas
        .iter()
        .map(|a| Probe::Partial(engine.plan(a, basis.h_k())))
        .collect();
    let maxima = grid_maxima(&basis, &grid, &engine, &probes);
    Ok(alphas
        .iter()
        .zip(maxima)
        .map(|(a, m)| ScalingRecord {
            polygon_id,
            seed,
            h_k: basis.h_k(),
            h_star: basis.h_star(),
            n_vertices: basis.num_vertices(),
            alpha: a.clone(),
            lambda: m.lambda,
            per_vertex_max: m.per_vertex,
            certified_bound: basis.certified_dphi_bound(a).total,
        })
        .collect())
}

fn sample_grid(polygon: &Polytope, density: usize, refine: bool) -> Result<SampleGrid> {
    if refine {
        SampleGrid::refined(polygon, density)
    } else {
        SampleGrid::new(polygon, density)
    }
}

fn ratio(p: &Polytope) -> f64 {
    p.h_star() / p.diameter()
}

/// Random polygons with log-uniform diameters; one record per polygon and `α`,
/// ordered by polygon id then `α`.
pub fn run_scaling_vs_hk(config: &ScalingHkConfig) -> Result<Vec<ScalingRecord>> {
    let alphas = to_multi(&config.alphas)?;
    if !(config.hk_min > 0.0 && config.hk_max >= config.hk_min) {
        return Err(Error::InvalidArgument("h_K range must be positive and ordered".into()));
    }
    let root = RngStream::new(config.seed);
    let rows: Vec<Vec<ScalingRecord>> = (0..config.count)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.substream(i as u64);
            let shape = loop {
                let p = random_convex_polygon(&mut rng, config.n_points);
                if ratio(&p) >= config.min_ratio {
                    break p;
                }
            };
            let (lo, hi) = (config.hk_min.ln(), config.hk_max.ln());
            let h = rng.uniform_in(lo, hi).exp();
            let p = scale_polygon(&shape, h)?;
            polygon_rows(&p, i, rng.seed(), &alphas, config.density, config.refine)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Random polygons with diameter 1 and a prescribed vertex count cycling
/// through `min_vertices..=max_vertices`.
///
/// A polygon with `n` vertices is the hull of `k ≈ e^{3n/8}` uniform points
/// (the expected hull size of `k` points in a square is about `(8/3) ln k`),
/// redrawn until it has exactly `n` vertices and passes the `h_*/h_K` filter.
pub fn run_scaling_vs_n(config: &ScalingNConfig) -> Result<Vec<ScalingRecord>> {
    let alphas = to_multi(&config.alphas)?;
    if config.min_vertices < 3 || config.max_vertices < config.min_vertices {
        return Err(Error::InvalidArgument("vertex range must satisfy 3 ≤ min ≤ max".into()));
    }
    let span = config.max_vertices - config.min_vertices + 1;
    let root = RngStream::new(config.seed);
    let rows: Vec<Vec<ScalingRecord>> = (0..config.count)
        .into_par_iter()
        .map(|i| {
            let n = config.min_vertices + i % span;
            let k = ((3.0 * n as f64 / 8.0).exp().round() as usize).max(n);
            let mut rng = root.substream(i as u64);
            let shape = loop {
                let pts: Vec<[f64; 2]> = (0..k).map(|_| rng.point_in_unit_square()).collect();
                let Ok(hull) = convex_hull_2d(&pts) else { continue };
                if hull.len() != n {
                    continue;
                }
                let Ok(p) = Polytope::from_vertices_2d(&hull) else { continue };
                if ratio(&p) >= config.min_ratio {
                    break p;
                }
            };
            let p = scale_polygon(&shape, 1.0)?;
            polygon_rows(&p, i, rng.seed(), &alphas, config.density, config.refine)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// The family polygons for `a = a0 · 2^{−j}`, stopping at the first `a`
/// that breaks convexity.
pub fn degeneration_polygons(config: &DegenerationConfig) -> Vec<(u32, f64, Polytope)> {
    let mut out = Vec::new();
    for j in 0..=config.halvings {
        let a = config.a0 * 0.5f64.powi(j as i32);
        match family_k(config.family, a) {
            Ok(p) => out.push((j, a, p)),
            Err(_) => break,
        }
    }
    out
}

/// Grid maxima of each configured derivative on the family polygons.
/// Records are ordered by step, then partial derivatives in the configured
/// order, then tangential orders.
pub fn run_degeneration(config: &DegenerationConfig) -> Result<Vec<DegenerationRecord>> {
    let alphas = to_multi(&config.alphas)?;
    let polys = degeneration_polygons(config);
    if polys.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "a0 = {} does not give a valid {:?} polygon",
            config.a0, config.family
        )));
    }
    let max_order = alphas
        .iter()
        .map(|a| a.order())
        .chain(config.tangential_orders.iter().copied())
        .max()
        .unwrap_or(0);
    let engine = DerivativeEngine::new(2, max_order);
    let tangent = config.family.short_edge_tangent();
    let rows: Vec<Vec<DegenerationRecord>> = polys
        .par_iter()
        .map(|(j, a, p)| {
            let basis = WachspressBasis::new(p);
            let grid = sample_grid(p, config.density, config.refine)?;
            let mut derivs = Vec::new();
            let mut probes = Vec::new();
            for al in &alphas {
                derivs.push(Derivative::Partial(al.clone()));
                probes.push(Probe::Partial(engine.plan(al, basis.h_k())));
            }
            for &m in &config.tangential_orders {
                derivs.push(Derivative::Tangential(m));
                probes.push(Probe::Directional(engine.directional_plan(&tangent, m, basis.h_k())?));
            }
            let maxima = grid_maxima(&basis, &grid, &engine, &probes);
            Ok(derivs
                .into_iter()
                .zip(maxima)
                .map(|(d, m)| DegenerationRecord {
                    family: config.family,
                    step: *j,
                    a: *a,
                    h_k: basis.h_k(),
                    h_star: basis.h_star(),
                    derivative: d,
                    lambda: m.lambda,
                    per_vertex_max: m.per_vertex,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two (x, y) pairs".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::InvalidArgument("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LogLogFit {
        slope,
        intercept,
        r2,
        n: xs.len(),
    })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; `NaN` if either
/// side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// A labelled fit, as written to the summary JSON.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FitSummary {
    pub label: String,
    pub x: String,
    pub y: String,
    #[serde(flatten)]
    pub fit: LogLogFit,
}

/// `ln Λ_α` against `ln h_K`, one fit per `α` (records with `Λ_α = 0` are
/// left out).
pub fn fits_vs_hk(records: &[ScalingRecord], alphas: &[MultiIndex]) -> Vec<FitSummary> {
    alphas
        .iter()
        .filter_map(|a| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = records
                .iter()
                .filter(|r| &r.alpha == a && r.lambda > 0.0)
                .map(|r| (r.h_k, r.lambda))
                .unzip();
            fit_loglog(&xs, &ys).ok().map(|fit| FitSummary {
                label: format!("D{a}"),
                x: "h_k".into(),
                y: "lambda".into(),
                fit,
            })
        })
        .collect()
}

/// Per-`n` maximum of `Λ_α` for one `α`.
pub fn max_lambda_per_n(records: &[ScalingRecord], alpha: &MultiIndex) -> Vec<(usize, f64)> {
    let mut out: std::collections::BTreeMap<usize, f64> = Default::default();
    for r in records.iter().filter(|r| &r.alpha == alpha) {
        let e = out.entry(r.n_vertices).or_insert(f64::NEG_INFINITY);
        *e = e.max(r.lambda);
    }
    out.into_iter().collect()
}

/// Records of one derivative, in step order.
pub fn degeneration_series<'a>(
    records: &'a [DegenerationRecord],
    derivative: &Derivative,
) -> Vec<&'a DegenerationRecord> {
    records.iter().filter(|r| &r.derivative == derivative).collect()
}

/// Fits of `Λ` and of each vertex's maximum against `h_*` for every
/// derivative in the table; zero series are skipped.
pub fn degeneration_fits(records: &[DegenerationRecord]) -> Vec<FitSummary> {
    let mut derivs: Vec<Derivative> = Vec::new();
    for r in records {
        if !derivs.contains(&r.derivative) {
            derivs.push(r.derivative.clone());
        }
    }
    let mut out = Vec::new();
    for d in &derivs {
        let series = degeneration_series(records, d);
        let xs: Vec<f64> = series.iter().map(|r| r.h_star).collect();
        let ys: Vec<f64> = series.iter().map(|r| r.lambda).collect();
        if let Ok(fit) = fit_loglog(&xs, &ys) {
            out.push(FitSummary {
                label: d.label(),
                x: "h_star".into(),
                y: "lambda".into(),
                fit,
            });
        }
        let n_v = series.first().map_or(0, |r| r.per_vertex_max.len());
        for v in 0..n_v {
            let ys: Vec<f64> = series.iter().map(|r| r.per_vertex_max[v]).collect();
            if let Ok(fit) = fit_loglog(&xs, &ys) {
                out.push(FitSummary {
                    label: d.label(),
                    x: "h_star".into(),
                    y: format!("vertex_{}", v + 1),
                    fit,
                });
            }
        }
    }
    out
}

/// Writes the header and one line per record.
pub fn write_csv<T: Table, W: std::io::Write>(table: &[T], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(T::header())?;
    for r in table {
        w.write_record(r.row())?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<T: Table>(table: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(table, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn emit_csv<T: Table>(table: &[T], path: &Path) -> Result<()> {
    write_csv(table, std::fs::File::create(path)?)
}

/// Scatter plot of two numeric columns with an optional log-log fit line.
pub fn svg_scatter<T: Table>(table: &[T], x_field: &str, y_field: &str, loglog: bool) -> String {
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter_map(|r| Some((r.numeric(x_field)?, r.numeric(y_field)?)))
        .filter(|(x, y)| x.is_finite() && y.is_finite() && (!loglog || (*x > 0.0 && *y > 0.0)))
        .collect();
    let fit = if loglog {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        fit_loglog(&xs, &ys).ok()
    } else {
        None
    };
    render_svg(&pts, x_field, y_field, loglog, fit)
}

pub fn emit_svg_scatter<T: Table>(
    table: &[T],
    x_field: &str,
    y_field: &str,
    loglog: bool,
    path: &Path,
) -> Result<()> {
    std::fs::write(path, svg_scatter(table, x_field, y_field, loglog))?;
    Ok(())
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(vals: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = vals
            .map(|v| if log { v.log10() } else { v })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        if hi <= lo {
            hi = lo + 1.0;
        }
        Axis { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        (t - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 10.0).ceil().max(1.0) as i32;
            (self.lo as i32..=self.hi as i32)
                .step_by(step as usize)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect()
        } else {
            (0..=4)
                .map(|i| {
                    let v = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                    (v, format!("{v:.3}"))
                })
                .collect()
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_svg(pts: &[(f64, f64)], xl: &str, yl: &str, loglog: bool, fit: Option<LogLogFit>) -> String {
    let ax = Axis::new(pts.iter().map(|p| p.0), loglog);
    let ay = Axis::new(pts.iter().map(|p| p.1), loglog);
    let px = |v: f64| MARGIN + ax.frac(v) * (W - 2.0 * MARGIN);
    let py = |v: f64| H - MARGIN - ay.frac(v) * (H - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, W - MARGIN, H - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for (v, label) in ax.ticks() {
        let x = px(v);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, y0 + 18.0);
    }
    for (v, label) in ay.ticks() {
        let y = py(v);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, x0 - 8.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 15.0,
        escape(xl)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(yl)
    );
    for &(x, y) in pts {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#1f77b4"/>"##, px(x), py(y));
    }
    if let Some(f) = fit {
        let xa = 10f64.powf(ax.lo);
        let xb = 10f64.powf(ax.hi);
        let ya = (f.intercept + f.slope * xa.ln()).exp();
        let yb = (f.intercept + f.slope * xb.ln()).exp();
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" clip-path="url(#plot)"/>"##,
            px(xa),
            py(ya),
            px(xb),
            py(yb)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">slope {:.3}, R² {:.3}</text>"#,
            x1,
            y1 - 10.0,
            f.slope,
            f.r2
        );
    }
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{x0}" y="{y1}" width="{:.2}" height="{:.2}"/></clipPath></defs>"#,
        x1 - x0,
        y0 - y1
    );
    s.push_str("</svg>\n");
    s
}
