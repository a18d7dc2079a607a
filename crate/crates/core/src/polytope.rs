//! Simple, non-degenerate, convex polytopes in facet/vertex form, plus the
//! metric quantities (`h_K`, `h_*`, `ρ_K`, `R_K`, `w_K`, interior angles)
//! and the shape-regularity report built from them.
//!
//! Facets are stored as `h_f(x) = c_f − n_f·x` with unit outward normal `n_f`,
//! so `h_f` is the distance from `x` to the facet's hyperplane and is
//! non-negative on the polytope. Every vertex stores its `d` incident facets
//! ordered so that `det[n_{f_1}, …, n_{f_d}] > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance (times `h_K`) used by geometric predicates.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

const UNIT_NORMAL_TOL: f64 = 1e-12;

/// A facet `{x : n·x = c}` with the ids of the vertices lying on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub vertices: Vec<usize>,
}

impl Facet {
    #[inline]
    pub fn distance(&self, x: &[f64]) -> f64 {
        self.offset - dot(&self.normal, x)
    }
}

#[derive(Clone, Debug)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Facet>,
    vertex_facets: Vec<Vec<usize>>,
    diameter: f64,
    h_star: f64,
}

impl Polytope {
    /// Builds a convex polygon from its vertices given in any order, using
    /// the default relative tolerance.
    pub fn from_vertices_2d(points: &[[f64; 2]]) -> Result<Self> {
        Self::from_vertices_2d_with_tol(points, DEFAULT_REL_TOL)
    }

    /// Vertices are sorted counter-clockwise around their mean, starting from
    /// the first input point (so CCW input keeps its numbering); each edge
    /// becomes a facet. `rel_tol` is scaled by the diameter.
    pub fn from_vertices_2d_with_tol(points: &[[f64; 2]], rel_tol: f64) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(Error::InvalidPolytope(format!(
                "a polygon needs at least 3 vertices, got {n}"
            )));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidPolytope("non-finite coordinate".into()));
        }
        let h = point_set_diameter(points.iter().map(|p| &p[..]));
        let tol = rel_tol * h;
        for i in 0..n {
            for j in i + 1..n {
                if dist(&points[i], &points[j]) <= tol {
                    return Err(Error::DuplicateVertex(i, j));
                }
            }
        }

        let cx = points.iter().map(|p| p[0]).sum::<f64>() / n as f64;
        let cy = points.iter().map(|p| p[1]).sum::<f64>() / n as f64;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let ta = (points[a][1] - cy).atan2(points[a][0] - cx);
            let tb = (points[b][1] - cy).atan2(points[b][0] - cx);
            ta.total_cmp(&tb).then(a.cmp(&b))
        });
        let first = order.iter().position(|&i| i == 0).expect("index 0 present");
        order.rotate_left(first);
        let vertices: Vec<Vec<f64>> = order.iter().map(|&i| points[i].to_vec()).collect();

        let facets: Vec<Facet> = (0..n)
            .map(|i| {
                let a = &vertices[i];
                let b = &vertices[(i + 1) % n];
                let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
                let len = ex.hypot(ey);
                let normal = vec![ey / len, -ex / len];
                let offset = dot(&normal, a);
                Facet {
                    normal,
                    offset,
                    vertices: vec![i, (i + 1) % n],
                }
            })
            .collect();

        // turn test at each vertex: distance of the next vertex from the previous edge
        for i in 0..n {
            let prev = &facets[(i + n - 1) % n];
            let turn = prev.distance(&vertices[(i + 1) % n]);
            if turn < -tol {
                return Err(Error::NonConvex(format!(
                    "reflex turn at vertex ({}, {})",
                    vertices[i][0], vertices[i][1]
                )));
            }
            if turn <= tol {
                return Err(Error::Degenerate(format!(
                    "collinear vertices around ({}, {})",
                    vertices[i][0], vertices[i][1]
                )));
            }
        }

        let vertex_facets = (0..n).map(|i| vec![(i + n - 1) % n, i]).collect();
        Self::assemble(2, vertices, facets, vertex_facets, tol)
    }

    /// General-dimension constructor from explicit facets. Incidence lists on
    /// the facets define `F_v`; all invariants are validated.
    pub fn from_facets(dim: usize, vertices: Vec<Vec<f64>>, facets: Vec<Facet>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPolytope("dimension must be positive".into()));
        }
        if vertices.len() < dim + 1 {
            return Err(Error::InvalidPolytope(format!(
                "{} vertices cannot span dimension {dim}",
                vertices.len()
            )));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != dim) {
            return Err(Error::InvalidPolytope(format!("vertex {v:?} is not {dim}-dimensional")));
        }
        for (fi, f) in facets.iter().enumerate() {
            if f.normal.len() != dim {
                return Err(Error::InvalidPolytope(format!("facet {fi} normal has wrong length")));
            }
            if (norm(&f.normal) - 1.0).abs() > UNIT_NORMAL_TOL {
                return Err(Error::InvalidPolytope(format!("facet {fi} normal is not unit")));
            }
            if let Some(&v) = f.vertices.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidPolytope(format!("facet {fi} references vertex {v}")));
            }
        }
        let mut vertex_facets = vec![Vec::new(); vertices.len()];
        for (fi, f) in facets.iter().enumerate() {
            for &v in &f.vertices {
                if !vertex_facets[v].contains(&fi) {
                    vertex_facets[v].push(fi);
                }
            }
        }
        let h = point_set_diameter(vertices.iter().map(Vec::as_slice));
        Self::assemble(dim, vertices, facets, vertex_facets, DEFAULT_REL_TOL * h)
    }

    fn assemble(
        dim: usize,
        vertices: Vec<Vec<f64>>,
        facets: Vec<Facet>,
        mut vertex_facets: Vec<Vec<usize>>,
        tol: f64,
    ) -> Result<Self> {
        for (v, fs) in vertex_facets.iter().enumerate() {
            if fs.len() != dim {
                return Err(Error::InvalidPolytope(format!(
                    "vertex {v} is incident to {} facets, a simple polytope needs {dim}",
                    fs.len()
                )));
            }
        }
        let mut h_star = f64::INFINITY;
        for (fi, f) in facets.iter().enumerate() {
            for (vi, v) in vertices.iter().enumerate() {
                let hv = f.distance(v);
                if f.vertices.contains(&vi) {
                    if hv.abs() > tol {
                        return Err(Error::InvalidPolytope(format!(
                            "vertex {vi} is off its facet {fi} by {hv:e}"
                        )));
                    }
                } else {
                    if hv < -tol {
                        return Err(Error::NonConvex(format!(
                            "vertex {vi} lies outside facet {fi}"
                        )));
                    }
                    if hv <= tol {
                        return Err(Error::Degenerate(format!(
                            "vertex {vi} lies on the hyperplane of non-incident facet {fi}"
                        )));
                    }
                    h_star = h_star.min(hv);
                }
            }
        }
        for (v, fs) in vertex_facets.iter_mut().enumerate() {
            let mut det = determinant(&normal_matrix(&facets, fs));
            if det < 0.0 && dim >= 2 {
                fs.swap(0, 1);
                det = -det;
            }
            if det <= 0.0 || (dim == 1 && det < 0.0) {
                return Err(Error::Degenerate(format!(
                    "normals at vertex {v} are linearly dependent"
                )));
            }
        }
        let diameter = point_set_diameter(vertices.iter().map(Vec::as_slice));
        Ok(Polytope {
            dim,
            vertices,
            facets,
            vertex_facets,
            diameter,
            h_star,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.vertices[v]
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    /// `F_v`, ordered so that `det(M_v) > 0`.
    pub fn vertex_facets(&self, v: usize) -> &[usize] {
        &self.vertex_facets[v]
    }

    /// `M_v = [n_{f_1}, …, n_{f_d}]` as columns, row-major.
    pub fn normal_matrix(&self, v: usize) -> Vec<Vec<f64>> {
        normal_matrix(&self.facets, &self.vertex_facets[v])
    }

    pub fn det_normal_matrix(&self, v: usize) -> f64 {
        determinant(&self.normal_matrix(v))
    }

    /// `h_f(x) = c_f − n_f·x`.
    #[inline]
    pub fn h_f_at(&self, f: usize, x: &[f64]) -> f64 {
        self.facets[f].distance(x)
    }

    /// `h_K`: the largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `h_*`: the smallest distance from a vertex to a facet not containing it.
    pub fn h_star(&self) -> f64 {
        self.h_star
    }

    /// Point-in-polytope test with the default relative tolerance.
    pub fn contains(&self, x: &[f64]) -> bool {
        let tol = DEFAULT_REL_TOL * self.diameter;
        self.facets.iter().all(|f| f.distance(x) >= -tol)
    }

    /// Uniformly scaled copy `s·K` (about the origin).
    pub fn scaled(&self, s: f64) -> Polytope {
        assert!(s > 0.0, "scale factor must be positive");
        Polytope {
            dim: self.dim,
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().map(|c| c * s).collect())
                .collect(),
            facets: self
                .facets
                .iter()
                .map(|f| Facet {
                    normal: f.normal.clone(),
                    offset: f.offset * s,
                    vertices: f.vertices.clone(),
                })
                .collect(),
            vertex_facets: self.vertex_facets.clone(),
            diameter: self.diameter * s,
            h_star: self.h_star * s,
        }
    }

    /// Translated copy `K + t`.
    pub fn translated(&self, t: &[f64]) -> Polytope {
        let mut out = self.clone();
        for v in &mut out.vertices {
            for (c, dt) in v.iter_mut().zip(t) {
                *c += dt;
            }
        }
        for f in &mut out.facets {
            f.offset += dot(&f.normal, t);
        }
        out
    }

    /// Vertices as 2D points (counter-clockwise for polygons built here).
    pub fn vertices_2d(&self) -> Result<Vec<[f64; 2]>> {
        self.require_2d("vertices_2d")?;
        Ok(self.vertices.iter().map(|v| [v[0], v[1]]).collect())
    }

    fn require_2d(&self, what: &str) -> Result<()> {
        if self.dim != 2 {
            return Err(Error::Unsupported(format!("{what} is only available for d = 2")));
        }
        Ok(())
    }

    /// Edge lengths in boundary order (edge `i` joins `v_i` and `v_{i+1}`).
    pub fn edge_lengths_2d(&self) -> Result<Vec<f64>> {
        self.require_2d("edge lengths")?;
        Ok(self
            .facets
            .iter()
            .map(|f| dist(&self.vertices[f.vertices[0]], &self.vertices[f.vertices[1]]))
            .collect())
    }

    pub fn area_2d(&self) -> Result<f64> {
        let pts = self.vertices_2d()?;
        Ok(polygon_area(&pts))
    }

    /// Smallest distance between two distinct vertices.
    pub fn min_vertex_gap(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.vertices.len() {
            for j in i + 1..self.vertices.len() {
                best = best.min(dist(&self.vertices[i], &self.vertices[j]));
            }
        }
        best
    }

    /// Chebyshev center: the largest inscribed disk `(ρ_K, center)`.
    ///
    /// The optimum of `max r s.t. h_f(x) ≥ r` is attained where three facet
    /// constraints are active, so all facet triples are enumerated.
    pub fn inradius_2d(&self) -> Result<(f64, [f64; 2])> {
        self.require_2d("inradius")?;
        let fs = &self.facets;
        let n = fs.len();
        let slack = 1e-12 * self.diameter;
        let mut best = (f64::NEG_INFINITY, [0.0, 0.0]);
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let rows = [&fs[a], &fs[b], &fs[c]];
                    let m = [
                        [rows[0].normal[0], rows[0].normal[1], 1.0],
                        [rows[1].normal[0], rows[1].normal[1], 1.0],
                        [rows[2].normal[0], rows[2].normal[1], 1.0],
                    ];
                    let rhs = [rows[0].offset, rows[1].offset, rows[2].offset];
                    let Some([x, y, r]) = solve3(m, rhs) else { continue };
                    if r <= best.0 {
                        continue;
                    }
                    if fs.iter().all(|f| f.distance(&[x, y]) >= r - slack) {
                        best = (r, [x, y]);
                    }
                }
            }
        }
        Ok(best)
    }

    /// Minimum enclosing circle of the vertices `(R_K, center)`, by
    /// exhaustive search over vertex pairs and triples.
    pub fn circumradius_2d(&self) -> Result<(f64, [f64; 2])> {
        let pts = self.vertices_2d()?;
        Ok(min_enclosing_circle_exhaustive(&pts))
    }

    /// `w_K`: minimum over facets of the largest vertex distance to the facet.
    pub fn width_2d(&self) -> Result<f64> {
        self.require_2d("width")?;
        Ok(self
            .facets
            .iter()
            .map(|f| {
                self.vertices
                    .iter()
                    .map(|v| f.distance(v))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::INFINITY, f64::min))
    }

    /// Interior angle at each vertex, in radians.
    pub fn interior_angles_2d(&self) -> Result<Vec<f64>> {
        let pts = self.vertices_2d()?;
        let n = pts.len();
        Ok((0..n)
            .map(|i| {
                let p = pts[i];
                let a = [pts[(i + 1) % n][0] - p[0], pts[(i + 1) % n][1] - p[1]];
                let b = [pts[(i + n - 1) % n][0] - p[0], pts[(i + n - 1) % n][1] - p[1]];
                let cross = a[0] * b[1] - a[1] * b[0];
                let dt = a[0] * b[0] + a[1] * b[1];
                cross.abs().atan2(dt)
            })
            .collect())
    }

    pub fn shape_report(&self, thresholds: &Thresholds) -> Result<ShapeReport> {
        ShapeReport::compute(self, thresholds)
    }

    /// Polygon JSON: `{"d": 2, "vertices": [[x, y], ...]}`.
    pub fn to_json(&self) -> PolytopeJson {
        if self.dim == 2 {
            PolytopeJson {
                d: 2,
                vertices: self.vertices.clone(),
                facets: None,
            }
        } else {
            PolytopeJson {
                d: self.dim,
                vertices: self.vertices.clone(),
                facets: Some(
                    self.facets
                        .iter()
                        .map(|f| FacetJson {
                            normal: f.normal.clone(),
                            offset: f.offset,
                            vertices: f.vertices.clone(),
                        })
                        .collect(),
                ),
            }
        }
    }

    pub fn from_json(json: &PolytopeJson) -> Result<Polytope> {
        match (&json.facets, json.d) {
            (None, 2) => {
                let pts = json
                    .vertices
                    .iter()
                    .map(|v| match v.as_slice() {
                        [x, y] => Ok([*x, *y]),
                        _ => Err(Error::InvalidPolytope(format!("vertex {v:?} is not 2D"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Polytope::from_vertices_2d(&pts)
            }
            (None, d) => Err(Error::Unsupported(format!(
                "building a {d}-dimensional polytope from vertices alone; supply facets"
            ))),
            (Some(facets), d) => Polytope::from_facets(
                d,
                json.vertices.clone(),
                facets
                    .iter()
                    .map(|f| Facet {
                        normal: f.normal.clone(),
                        offset: f.offset,
                        vertices: f.vertices.clone(),
                    })
                    .collect(),
            ),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Polytope> {
        let json: PolytopeJson = serde_json::from_str(s)?;
        Polytope::from_json(&json)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolytopeJson {
    pub d: usize,
    pub vertices: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<Vec<FacetJson>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FacetJson {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub vertices: Vec<usize>,
}

/// Constants for the shape-regularity conditions H1–H7.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct Thresholds {
    /// H1: `h_* ≥ C_* h_K`.
    pub c_star: f64,
    /// H2: `|u − v| ≥ D_* h_K` for distinct vertices.
    pub d_star: f64,
    /// H3: `|V| ≤ N_V^*`.
    pub max_vertices: usize,
    /// H4: `|F| ≤ N_F^*`.
    pub max_facets: usize,
    /// H5: `w_K ≥ C h_K`.
    pub c_h5: f64,
    /// H5': `h_K / ρ_K ≤ γ^*`.
    pub gamma_star: f64,
    /// H6: every interior angle `≤ α^*`.
    pub max_angle: f64,
    /// H7: every interior angle `≥ α_*`.
    pub min_angle: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            c_star: 0.01,
            d_star: 0.15,
            max_vertices: 10,
            max_facets: 10,
            c_h5: 0.1,
            gamma_star: 30.0,
            max_angle: 0.95 * std::f64::consts::PI,
            min_angle: 0.05 * std::f64::consts::PI,
        }
    }
}

/// Geometric quantities and shape-condition verdicts for one polygon.
///
/// CSV column order is the field order below.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ShapeReport {
    pub n_vertices: usize,
    pub n_facets: usize,
    pub h_k: f64,
    pub h_star: f64,
    pub rho_k: f64,
    pub r_k: f64,
    pub w_k: f64,
    pub min_edge: f64,
    pub min_vertex_gap: f64,
    pub min_angle: f64,
    pub max_angle: f64,
    pub h_star_over_h_k: f64,
    pub min_edge_over_h_k: f64,
    pub w_k_over_h_k: f64,
    pub h_k_over_rho_k: f64,
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
    pub h4: bool,
    pub h5: bool,
    pub h5_prime: bool,
    pub h6: bool,
    pub h7: bool,
}

impl ShapeReport {
    pub fn compute(p: &Polytope, t: &Thresholds) -> Result<ShapeReport> {
        p.require_2d("shape report")?;
        let h_k = p.diameter();
        let h_star = p.h_star();
        let (rho_k, _) = p.inradius_2d()?;
        let (r_k, _) = p.circumradius_2d()?;
        let w_k = p.width_2d()?;
        let min_edge = p.edge_lengths_2d()?.into_iter().fold(f64::INFINITY, f64::min);
        let min_vertex_gap = p.min_vertex_gap();
        let angles = p.interior_angles_2d()?;
        let min_angle = angles.iter().copied().fold(f64::INFINITY, f64::min);
        let max_angle = angles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(ShapeReport {
            n_vertices: p.num_vertices(),
            n_facets: p.num_facets(),
            h_k,
            h_star,
            rho_k,
            r_k,
            w_k,
            min_edge,
            min_vertex_gap,
            min_angle,
            max_angle,
            h_star_over_h_k: h_star / h_k,
            min_edge_over_h_k: min_edge / h_k,
            w_k_over_h_k: w_k / h_k,
            h_k_over_rho_k: h_k / rho_k,
            h1: h_star >= t.c_star * h_k,
            h2: min_vertex_gap >= t.d_star * h_k,
            h3: p.num_vertices() <= t.max_vertices,
            h4: p.num_facets() <= t.max_facets,
            h5: w_k >= t.c_h5 * h_k,
            h5_prime: h_k / rho_k <= t.gamma_star,
            h6: max_angle <= t.max_angle,
            h7: min_angle >= t.min_angle,
        })
    }
}

// ---- small numeric helpers ------------------------------------------------

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn point_set_diameter<'a>(pts: impl Iterator<Item = &'a [f64]> + Clone) -> f64 {
    let v: Vec<&[f64]> = pts.collect();
    let mut best: f64 = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            best = best.max(dist(v[i], v[j]));
        }
    }
    best
}

/// Signed area (positive for counter-clockwise order).
pub fn polygon_area(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len();
    0.5 * (0..n)
        .map(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

fn normal_matrix(facets: &[Facet], fs: &[usize]) -> Vec<Vec<f64>> {
    let d = fs.len();
    (0..d)
        .map(|row| fs.iter().map(|&f| facets[f].normal[row]).collect())
        .collect()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub(crate) fn determinant(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(r);
            for (x, p) in lower[0][col..n].iter_mut().zip(&upper[col][col..n]) {
                *x -= factor * p;
            }
        }
    }
    det
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(&m);
    if d.abs() < 1e-14 {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for r in 0..3 {
            mk[r][k] = b[r];
        }
        *o = det3(&mk) / d;
    }
    Some(out)
}

/// Smallest circle containing all points, by checking every circle through
/// two (diametral) or three points.
pub fn min_enclosing_circle_exhaustive(pts: &[[f64; 2]]) -> (f64, [f64; 2]) {
    let n = pts.len();
    if n == 1 {
        return (0.0, pts[0]);
    }
    let scale = pts
        .iter()
        .flat_map(|p| pts.iter().map(move |q| dist(p, q)))
        .fold(0.0, f64::max);
    let slack = 1e-12 * scale;
    let encloses = |c: [f64; 2], r: f64| pts.iter().all(|p| dist(p, &c) <= r + slack);
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for i in 0..n {
        for j in i + 1..n {
            let c = [(pts[i][0] + pts[j][0]) / 2.0, (pts[i][1] + pts[j][1]) / 2.0];
            let r = dist(&pts[i], &pts[j]) / 2.0;
            if r < best.0 && encloses(c, r) {
                best = (r, c);
            }
            for k in j + 1..n {
                if let Some(c) = circumcenter(pts[i], pts[j], pts[k]) {
                    let r = dist(&c, &pts[i]);
                    if r < best.0 && encloses(c, r) {
                        best = (r, c);
                    }
                }
            }
        }
    }
    best
}

fn circumcenter(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Option<[f64; 2]> {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    if d.abs() < 1e-300 {
        return None;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    Some([
        a[0] + (cy * b2 - by * c2) / d,
        a[1] + (bx * c2 - cx * b2) / d,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

    fn square() -> Polytope {
        Polytope::from_vertices_2d(&[[1.0, 1.0], [0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap()
    }

    fn fig1_quad() -> Polytope {
        Polytope::from_vertices_2d(&[[1.0, 1.0], [0.0, 0.0], [2.0, 0.0], [2.0, 1.0]]).unwrap()
    }

    fn right_triangle() -> Polytope {
        Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn square_from_any_order() {
        let p = square();
        assert_eq!(p.num_facets(), 4);
        let mut normals: Vec<(i64, i64)> = p
            .facets()
            .iter()
            .map(|f| (f.normal[0].round() as i64, f.normal[1].round() as i64))
            .collect();
        normals.sort();
        assert_eq!(normals, vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);
        assert!(close(p.area_2d().unwrap(), 1.0, 1e-15));
        let ccw = [[2.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]];
        let q = Polytope::from_vertices_2d(&ccw).unwrap();
        for (v, c) in ccw.iter().enumerate() {
            assert_eq!(q.vertex(v), &c[..]);
        }
        for v in 0..4 {
            assert!(close(p.det_normal_matrix(v), 1.0, 1e-15));
        }
    }

    #[test]
    fn builder_errors() {
        let e = Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(e, Err(Error::Degenerate(_))), "{e:?}");
        let e = Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.0], [0.5, 0.1], [0.5, 1.0]]);
        assert!(matches!(e, Err(Error::NonConvex(_))), "{e:?}");
        let e = Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(e, Err(Error::DuplicateVertex(1, 2))), "{e:?}");
        let e = Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.0]]);
        assert!(matches!(e, Err(Error::InvalidPolytope(_))));
    }

    #[test]
    fn h_f_values() {
        let p = square();
        let f = p
            .facets()
            .iter()
            .position(|f| f.normal[0] > 0.5)
            .unwrap();
        assert!(close(p.h_f_at(f, &[0.25, 0.5]), 0.75, 1e-15));
        for (fi, facet) in p.facets().iter().enumerate() {
            for &v in &facet.vertices {
                assert!(close(p.h_f_at(fi, p.vertex(v)), 0.0, 1e-15));
            }
        }
        let q = fig1_quad();
        // facet through (0,0) and (1,1)
        let f = q
            .facets()
            .iter()
            .position(|f| {
                let a = q.vertex(f.vertices[0]);
                let b = q.vertex(f.vertices[1]);
                let has = |p: &[f64], x: f64, y: f64| p[0] == x && p[1] == y;
                (has(a, 0.0, 0.0) || has(b, 0.0, 0.0)) && (has(a, 1.0, 1.0) || has(b, 1.0, 1.0))
            })
            .unwrap();
        assert!(close(q.h_f_at(f, &[2.0, 1.0]), FRAC_1_SQRT_2, 1e-15));
    }

    #[test]
    fn diameter_and_h_star() {
        assert!(close(square().diameter(), SQRT_2, 1e-15));
        assert!(close(fig1_quad().diameter(), 5f64.sqrt(), 1e-15));
        assert!(close(square().scaled(3.0).diameter(), 3.0 * SQRT_2, 1e-14));
        assert!(close(square().h_star(), 1.0, 1e-15));
        assert!(close(fig1_quad().h_star(), FRAC_1_SQRT_2, 1e-15));
        assert!(close(right_triangle().h_star(), FRAC_1_SQRT_2, 1e-15));
    }

    #[test]
    fn inradius_cases() {
        assert!(close(square().inradius_2d().unwrap().0, 0.5, 1e-14));
        let (r, c) = right_triangle().inradius_2d().unwrap();
        assert!(close(r, (2.0 - SQRT_2) / 2.0, 1e-14));
        assert!(close(c[0], r, 1e-14) && close(c[1], r, 1e-14));
        assert!(close(square().scaled(0.2).inradius_2d().unwrap().0, 0.1, 1e-14));
        let thin = Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.001], [0.0, 0.001]])
            .unwrap();
        assert!(close(thin.inradius_2d().unwrap().0, 0.0005, 1e-14));
    }

    #[test]
    fn circumradius_cases() {
        assert!(close(square().circumradius_2d().unwrap().0, FRAC_1_SQRT_2, 1e-14));
        assert!(close(right_triangle().circumradius_2d().unwrap().0, FRAC_1_SQRT_2, 1e-14));
        let obtuse = Polytope::from_vertices_2d(&[[0.0, 0.0], [4.0, 0.0], [1.0, 0.5]]).unwrap();
        let (r, c) = obtuse.circumradius_2d().unwrap();
        assert!(close(r, 2.0, 1e-14));
        assert!(close(c[0], 2.0, 1e-14) && close(c[1], 0.0, 1e-14));
    }

    #[test]
    fn width_cases() {
        assert!(close(square().width_2d().unwrap(), 1.0, 1e-15));
        let eq = Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]])
            .unwrap();
        assert!(close(eq.width_2d().unwrap(), 3f64.sqrt() / 2.0, 1e-15));
        assert!(close(fig1_quad().width_2d().unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn angle_cases() {
        for a in square().interior_angles_2d().unwrap() {
            assert!(close(a, PI / 2.0, 1e-15));
        }
        let eq = Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]])
            .unwrap();
        for a in eq.interior_angles_2d().unwrap() {
            assert!(close(a, PI / 3.0, 1e-14));
        }
        let q = fig1_quad();
        let i = q.vertices().iter().position(|v| v[0] == 0.0 && v[1] == 0.0).unwrap();
        assert!(close(q.interior_angles_2d().unwrap()[i], PI / 4.0, 1e-15));
        let total: f64 = q.interior_angles_2d().unwrap().iter().sum();
        assert!(close(total, 2.0 * PI, 1e-14));
    }

    #[test]
    fn shape_report_cases() {
        let t = Thresholds { c_star: 0.01, ..Thresholds::default() };
        let r = square().shape_report(&t).unwrap();
        assert!(r.h1 && r.h2 && r.h3 && r.h4 && r.h5 && r.h5_prime && r.h6 && r.h7);
        assert!(close(r.h_star_over_h_k, FRAC_1_SQRT_2, 1e-15));

        let thin = Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.001], [0.0, 0.001]])
            .unwrap();
        let r = thin.shape_report(&Thresholds { c_h5: 0.1, ..Thresholds::default() }).unwrap();
        assert!(!r.h5);
        assert!(r.w_k_over_h_k < 0.0011);

        // long quad with one short edge: chunky but with tiny h_*
        let kite = Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.0], [0.505, 0.5], [0.495, 0.5]])
            .unwrap();
        let r = kite.shape_report(&Thresholds::default()).unwrap();
        assert!(r.h5, "w/h = {}", r.w_k_over_h_k);
        assert!(r.h_star_over_h_k < 0.01);
        assert!(!r.h1);
    }

    #[test]
    fn general_dimension_cube() {
        // unit cube with explicit facets
        let mut vertices = Vec::new();
        for i in 0..8u32 {
            vertices.push(vec![(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        let mut facets = Vec::new();
        for axis in 0..3 {
            for side in [0.0, 1.0] {
                let mut normal = vec![0.0; 3];
                normal[axis] = if side == 1.0 { 1.0 } else { -1.0 };
                let offset = if side == 1.0 { 1.0 } else { 0.0 };
                let verts = (0..8).filter(|&v| vertices[v][axis] == side).collect();
                facets.push(Facet { normal, offset, vertices: verts });
            }
        }
        let cube = Polytope::from_facets(3, vertices, facets).unwrap();
        assert!(close(cube.diameter(), 3f64.sqrt(), 1e-15));
        assert!(close(cube.h_star(), 1.0, 1e-15));
        for v in 0..8 {
            assert!(close(cube.det_normal_matrix(v), 1.0, 1e-15));
        }
        assert!(matches!(cube.width_2d(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn non_simple_vertex_rejected() {
        // square pyramid apex touches 4 facets
        let e = Polytope::from_facets(
            3,
            vec![
                vec![0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0],
                vec![1.0, 1.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.5, 0.5, 1.0],
            ],
            {
                let s = 1.0 / (1.25f64).sqrt();
                let side = |nx: f64, ny: f64, off: f64, vs: Vec<usize>| Facet {
                    normal: vec![nx * s, ny * s, 0.5 * s],
                    offset: off * s,
                    vertices: vs,
                };
                vec![
                    Facet { normal: vec![0.0, 0.0, -1.0], offset: 0.0, vertices: vec![0, 1, 2, 3] },
                    side(0.0, -1.0, 0.0, vec![0, 1, 4]),
                    side(1.0, 0.0, 1.0, vec![1, 2, 4]),
                    side(0.0, 1.0, 1.0, vec![2, 3, 4]),
                    side(-1.0, 0.0, 0.0, vec![3, 0, 4]),
                ]
            },
        );
        assert!(matches!(e, Err(Error::InvalidPolytope(_))), "{e:?}");
    }

    #[test]
    fn json_round_trip() {
        let p = fig1_quad();
        let s = serde_json::to_string(&p.to_json()).unwrap();
        assert!(s.starts_with("{\"d\":2,\"vertices\":"));
        let q = Polytope::from_json_str(&s).unwrap();
        assert_eq!(q.vertices(), p.vertices());
    }
}
