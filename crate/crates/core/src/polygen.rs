//! 2D polygon and mesh generation: random convex polygons, the K1/K2/K3
//! degeneration families, Lloyd-relaxed centroidal Voronoi tessellations of
//! the unit square, and short-edge elimination.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::{polygon_area, Polytope, ShapeReport, Thresholds};

/// Seeded pseudo-random stream.
///
/// Backed by ChaCha8 seeded through `SeedableRng::seed_from_u64`, which is
/// specified bit-for-bit and platform independent. Independent tasks use
/// [`RngStream::substream`], whose seed is `seed ^ index`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream(&self, index: u64) -> RngStream {
        RngStream::new(self.seed ^ index)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn point_in_unit_square(&mut self) -> [f64; 2] {
        let x = self.uniform();
        let y = self.uniform();
        [x, y]
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Strictly convex hull in counter-clockwise order, starting from the
/// lowest-leftmost point; collinear boundary points are dropped.
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::AllCollinear);
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in pts.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(Error::AllCollinear);
    }
    Ok(hull)
}

/// Hull of `n_points` uniform samples in the unit square. Redraws in the
/// (practically impossible) event that the hull is not a valid polygon.
pub fn random_convex_polygon(rng: &mut RngStream, n_points: usize) -> Polytope {
    assert!(n_points >= 3, "need at least 3 points");
    loop {
        let pts: Vec<[f64; 2]> = (0..n_points).map(|_| rng.point_in_unit_square()).collect();
        if let Ok(hull) = convex_hull_2d(&pts) {
            if let Ok(p) = Polytope::from_vertices_2d(&hull) {
                return p;
            }
        }
    }
}

/// Uniform scaling about the origin to diameter `h`.
pub fn scale_polygon(p: &Polytope, h: f64) -> Result<Polytope> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("target diameter {h} must be positive")));
    }
    Ok(p.scaled(h / p.diameter()))
}

/// Which degeneration family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Horizontal short edge `v_1 v_2`.
    K1,
    /// Vertical short edge `v_1 v_2`.
    K2,
    /// Diagonal short edge `v_1 v_2`.
    K3,
}

impl Family {
    pub fn from_index(which: u8) -> Result<Family> {
        match which {
            1 => Ok(Family::K1),
            2 => Ok(Family::K2),
            3 => Ok(Family::K3),
            _ => Err(Error::InvalidArgument(format!("unknown family K{which}"))),
        }
    }

    pub fn vertices(self, a: f64) -> [[f64; 2]; 6] {
        match self {
            Family::K1 => [[0.0, 0.0], [a, 0.0], [0.8, 0.4], [0.7, 0.7], [0.1, 1.0], [-0.2, 0.5]],
            Family::K2 => [[0.0, 0.0], [0.0, a], [-0.6, 0.7], [-1.0, 0.4], [-0.9, 0.15], [-0.24, -0.2]],
            Family::K3 => [[0.0, 0.0], [a, a], [0.1, 0.7], [-0.2, 0.8], [-0.5, 0.5], [-0.5, -0.1]],
        }
    }

    /// Unit tangent of the short edge `v_1 → v_2`.
    pub fn short_edge_tangent(self) -> [f64; 2] {
        match self {
            Family::K1 => [1.0, 0.0],
            Family::K2 => [0.0, 1.0],
            Family::K3 => [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        match s.to_ascii_uppercase().as_str() {
            "K1" | "1" => Ok(Family::K1),
            "K2" | "2" => Ok(Family::K2),
            "K3" | "3" => Ok(Family::K3),
            _ => Err(Error::InvalidArgument(format!("unknown family {s:?}"))),
        }
    }
}

/// The hexagon of the given family with parameter `a`; vertex `i` of the
/// result is `v_{i+1}`, and the short edge is `v_1 v_2`.
pub fn family_k(family: Family, a: f64) -> Result<Polytope> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidArgument(format!("family parameter a = {a} not in (0, 1)")));
    }
    Polytope::from_vertices_2d(&family.vertices(a))
}

/// A conforming polygonal tessellation of a rectangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex-id cycles.
    pub cells: Vec<Vec<usize>>,
    /// `[x0, y0, x1, y1]`.
    pub domain: [f64; 4],
}

/// An undirected mesh edge `a < b` with the cells containing it.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshEdge {
    pub a: usize,
    pub b: usize,
    pub cells: Vec<usize>,
}

impl PolyMesh {
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn domain_area(&self) -> f64 {
        (self.domain[2] - self.domain[0]) * (self.domain[3] - self.domain[1])
    }

    /// `sqrt(|Ω| / n_cells)`.
    pub fn characteristic_size(&self) -> f64 {
        (self.domain_area() / self.cells.len() as f64).sqrt()
    }

    pub fn cell_points(&self, c: usize) -> Vec<[f64; 2]> {
        self.cells[c].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_polytope(&self, c: usize) -> Result<Polytope> {
        Polytope::from_vertices_2d(&self.cell_points(c))
    }

    /// Unique edges in `(a, b)` order with their incident cells.
    pub fn edges(&self) -> Vec<MeshEdge> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (c, cell) in self.cells.iter().enumerate() {
            for i in 0..cell.len() {
                let (p, q) = (cell[i], cell[(i + 1) % cell.len()]);
                map.entry((p.min(q), p.max(q))).or_default().push(c);
            }
        }
        map.into_iter()
            .map(|((a, b), cells)| MeshEdge { a, b, cells })
            .collect()
    }

    fn side_tol(&self) -> f64 {
        1e-12 * (self.domain[2] - self.domain[0]).max(self.domain[3] - self.domain[1])
    }

    /// Bit set of the domain sides (left, bottom, right, top) containing `p`.
    fn sides(&self, p: [f64; 2]) -> u8 {
        let t = self.side_tol();
        let mut s = 0;
        if (p[0] - self.domain[0]).abs() <= t {
            s |= 1;
        }
        if (p[1] - self.domain[1]).abs() <= t {
            s |= 2;
        }
        if (p[0] - self.domain[2]).abs() <= t {
            s |= 4;
        }
        if (p[1] - self.domain[3]).abs() <= t {
            s |= 8;
        }
        s
    }

    /// Checks every mesh invariant: ids in range, each cell a valid convex
    /// polygon listed counter-clockwise, areas tiling the domain, interior
    /// edges shared by exactly two cells and boundary edges by one.
    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        if !(self.domain[2] > self.domain[0] && self.domain[3] > self.domain[1]) {
            return Err(Error::InvalidMesh(format!("empty domain {:?}", self.domain)));
        }
        let mut total = 0.0;
        for (c, cell) in self.cells.iter().enumerate() {
            if let Some(&v) = cell.iter().find(|&&v| v >= self.vertices.len()) {
                return Err(Error::InvalidMesh(format!("cell {c} references missing vertex {v}")));
            }
            let pts = self.cell_points(c);
            let area = polygon_area(&pts);
            if area <= 0.0 {
                return Err(Error::InvalidMesh(format!("cell {c} is not counter-clockwise")));
            }
            let p = Polytope::from_vertices_2d(&pts)
                .map_err(|e| Error::InvalidMesh(format!("cell {c}: {e}")))?;
            if p.num_vertices() != cell.len() {
                return Err(Error::InvalidMesh(format!("cell {c} is not a simple convex cycle")));
            }
            total += area;
        }
        let expected = self.domain_area();
        if (total - expected).abs() > 1e-6 * expected {
            return Err(Error::InvalidMesh(format!(
                "cell areas sum to {total}, domain area is {expected}"
            )));
        }
        for e in self.edges() {
            let shared = self.sides(self.vertices[e.a]) & self.sides(self.vertices[e.b]);
            let want = if shared != 0 { 1 } else { 2 };
            if e.cells.len() != want {
                return Err(Error::InvalidMesh(format!(
                    "edge ({}, {}) is shared by {} cells, expected {want}",
                    e.a,
                    e.b,
                    e.cells.len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses the JSON mesh format; call [`PolyMesh::validate`] to check it.
    pub fn from_json_str(s: &str) -> Result<PolyMesh> {
        let mesh: PolyMesh = serde_json::from_str(s)?;
        Ok(mesh)
    }

    /// Axis-aligned `nx × ny` grid of rectangles over `domain`.
    pub fn grid(nx: usize, ny: usize, domain: [f64; 4]) -> PolyMesh {
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([
                    domain[0] + (domain[2] - domain[0]) * i as f64 / nx as f64,
                    domain[1] + (domain[3] - domain[1]) * j as f64 / ny as f64,
                ]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut cells = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        PolyMesh { vertices, cells, domain }
    }
}

const UNIT_SQUARE: [f64; 4] = [0.0, 0.0, 1.0, 1.0];

/// Keeps the part of a convex polygon with `n·x ≤ c`.
fn clip(poly: &[[f64; 2]], n: [f64; 2], c: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let k = poly.len();
    for i in 0..k {
        let p = poly[i];
        let q = poly[(i + 1) % k];
        let sp = n[0] * p[0] + n[1] * p[1] - c;
        let sq = n[0] * q[0] + n[1] * q[1] - c;
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Uniform bucket grid over the unit square for nearest-site queries.
struct SiteGrid {
    g: usize,
    buckets: Vec<Vec<usize>>,
}

impl SiteGrid {
    fn new(sites: &[[f64; 2]]) -> Self {
        let g = ((sites.len() as f64).sqrt().ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); g * g];
        for (i, s) in sites.iter().enumerate() {
            let (bx, by) = Self::bucket(g, *s);
            buckets[by * g + bx].push(i);
        }
        SiteGrid { g, buckets }
    }

    fn bucket(g: usize, p: [f64; 2]) -> (usize, usize) {
        let f = |t: f64| ((t * g as f64).floor().max(0.0) as usize).min(g - 1);
        (f(p[0]), f(p[1]))
    }

    /// Sites in the ring of buckets at Chebyshev distance `k` from `(bx, by)`.
    fn ring(&self, bx: usize, by: usize, k: usize, out: &mut Vec<usize>) {
        let (bx, by, k, g) = (bx as isize, by as isize, k as isize, self.g as isize);
        for y in (by - k)..=(by + k) {
            if y < 0 || y >= g {
                continue;
            }
            for x in (bx - k)..=(bx + k) {
                if x < 0 || x >= g {
                    continue;
                }
                if (x - bx).abs() != k && (y - by).abs() != k {
                    continue;
                }
                out.extend_from_slice(&self.buckets[(y * g + x) as usize]);
            }
        }
    }
}

/// Voronoi cell of site `i` restricted to the unit square.
fn voronoi_cell(i: usize, sites: &[[f64; 2]], grid: &SiteGrid) -> Vec<[f64; 2]> {
    let s = sites[i];
    let mut poly = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let (bx, by) = SiteGrid::bucket(grid.g, s);
    let width = 1.0 / grid.g as f64;
    let mut ring = Vec::new();
    for k in 0..=grid.g {
        ring.clear();
        grid.ring(bx, by, k, &mut ring);
        ring.retain(|&j| j != i);
        ring.sort_by(|&a, &b| dist2(sites[a], s).total_cmp(&dist2(sites[b], s)).then(a.cmp(&b)));
        for &j in &ring {
            let t = sites[j];
            let n = [t[0] - s[0], t[1] - s[1]];
            let c = 0.5 * ((t[0] * t[0] + t[1] * t[1]) - (s[0] * s[0] + s[1] * s[1]));
            poly = clip(&poly, n, c);
        }
        // any site outside rings 0..=k is at least k bucket widths away
        let r2 = poly.iter().map(|p| dist2(*p, s)).fold(0.0, f64::max);
        let reach = k as f64 * width;
        if reach * reach > 4.0 * r2 {
            break;
        }
    }
    poly
}

fn voronoi_cells(sites: &[[f64; 2]]) -> Vec<Vec<[f64; 2]>> {
    let grid = SiteGrid::new(sites);
    (0..sites.len())
        .into_par_iter()
        .map(|i| voronoi_cell(i, sites, &grid))
        .collect()
}

/// Area centroid of a simple polygon.
pub fn polygon_centroid(pts: &[[f64; 2]]) -> [f64; 2] {
    let o = pts[0];
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 1..pts.len().saturating_sub(1) {
        let p = [pts[i][0] - o[0], pts[i][1] - o[1]];
        let q = [pts[i + 1][0] - o[0], pts[i + 1][1] - o[1]];
        let cr = p[0] * q[1] - p[1] * q[0];
        a += cr;
        cx += cr * (p[0] + q[0]);
        cy += cr * (p[1] + q[1]);
    }
    [o[0] + cx / (3.0 * a), o[1] + cy / (3.0 * a)]
}

/// `∫_P |x − s|² dx` for a counter-clockwise polygon.
pub fn polygon_second_moment(pts: &[[f64; 2]], s: [f64; 2]) -> f64 {
    let n = pts.len();
    let mut total = 0.0;
    for i in 0..n {
        let p = [pts[i][0] - s[0], pts[i][1] - s[1]];
        let q = [pts[(i + 1) % n][0] - s[0], pts[(i + 1) % n][1] - s[1]];
        let cr = p[0] * q[1] - q[0] * p[1];
        total += cr * (p[0] * p[0] + p[0] * q[0] + q[0] * q[0] + p[1] * p[1] + p[1] * q[1] + q[1] * q[1]);
    }
    total / 12.0
}

/// CVT energy `Σ_i ∫_{cell_i} |x − site_i|²`.
pub fn cvt_energy(sites: &[[f64; 2]], cells: &[Vec<[f64; 2]>]) -> f64 {
    sites
        .iter()
        .zip(cells)
        .map(|(s, c)| polygon_second_moment(c, *s))
        .sum()
}

/// Outcome of Lloyd relaxation.
#[derive(Clone, Debug)]
pub struct CvtResult {
    pub mesh: PolyMesh,
    /// Final generating sites, one per cell.
    pub sites: Vec<[f64; 2]>,
    /// Number of Lloyd updates applied.
    pub iterations: usize,
    /// Energy of `(sites_k, Voronoi(sites_k))` at each iteration.
    pub energies: Vec<f64>,
}

/// Lloyd-relaxed CVT of the unit square from `n_cells` uniform random sites.
pub fn cvt_mesh(n_cells: usize, rng: &mut RngStream, max_iter: usize, tol: f64) -> Result<PolyMesh> {
    if n_cells == 0 {
        return Err(Error::InvalidArgument("n_cells must be positive".into()));
    }
    let sites: Vec<[f64; 2]> = (0..n_cells).map(|_| rng.point_in_unit_square()).collect();
    Ok(cvt_from_sites(&sites, max_iter, tol)?.mesh)
}

/// Lloyd relaxation of the unit square from given sites: stops once the
/// largest site movement drops below `tol · sqrt(1/n)` or after `max_iter`
/// updates.
pub fn cvt_from_sites(sites: &[[f64; 2]], max_iter: usize, tol: f64) -> Result<CvtResult> {
    if sites.is_empty() {
        return Err(Error::InvalidArgument("no sites".into()));
    }
    if let Some(s) = sites.iter().find(|s| !(0.0..=1.0).contains(&s[0]) || !(0.0..=1.0).contains(&s[1])) {
        return Err(Error::InvalidArgument(format!("site {s:?} outside the unit square")));
    }
    let h = (1.0 / sites.len() as f64).sqrt();
    let mut sites = sites.to_vec();
    let mut energies = Vec::new();
    let mut iterations = 0;
    let mut cells = voronoi_cells(&sites);
    loop {
        energies.push(cvt_energy(&sites, &cells));
        if iterations >= max_iter {
            break;
        }
        let centroids: Vec<[f64; 2]> = cells.par_iter().map(|c| polygon_centroid(c)).collect();
        let moved = sites
            .iter()
            .zip(&centroids)
            .map(|(s, c)| dist2(*s, *c))
            .fold(0.0, f64::max)
            .sqrt();
        if moved < tol * h {
            break;
        }
        sites = centroids;
        iterations += 1;
        cells = voronoi_cells(&sites);
    }
    let mesh = weld(&cells, UNIT_SQUARE, 1e-9 * h)?;
    Ok(CvtResult {
        mesh,
        sites,
        iterations,
        energies,
    })
}

/// Merges coordinates closer than `tol` into shared vertices.
fn weld(cells: &[Vec<[f64; 2]>], domain: [f64; 4], tol: f64) -> Result<PolyMesh> {
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |p: [f64; 2]| ((p[0] / tol).floor() as i64, (p[1] / tol).floor() as i64);
    let mut out_cells = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut ids: Vec<usize> = Vec::with_capacity(cell.len());
        for &p in cell {
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(list) = buckets.get(&(kx + dx, ky + dy)) {
                        for &v in list {
                            if dist2(vertices[v], p) <= tol * tol {
                                found = Some(v);
                                break 'search;
                            }
                        }
                    }
                }
            }
            let id = found.unwrap_or_else(|| {
                vertices.push(p);
                buckets.entry((kx, ky)).or_default().push(vertices.len() - 1);
                vertices.len() - 1
            });
            if ids.last() != Some(&id) {
                ids.push(id);
            }
        }
        while ids.len() > 1 && ids.first() == ids.last() {
            ids.pop();
        }
        if ids.len() < 3 {
            return Err(Error::InvalidMesh("a Voronoi cell collapsed under welding".into()));
        }
        out_cells.push(ids);
    }
    Ok(PolyMesh {
        vertices,
        cells: out_cells,
        domain,
    })
}

/// Result of [`eliminate_short_edges`].
#[derive(Clone, Debug)]
pub struct EliminationOutcome {
    pub mesh: PolyMesh,
    /// Number of vertices removed by edge collapses.
    pub collapsed: usize,
    /// Number of vertices removed because a collapse left them collinear.
    pub merged_collinear: usize,
    /// Short edges (as vertex coordinates) whose collapse would have broken
    /// a cell, left in place.
    pub skipped: Vec<[[f64; 2]; 2]>,
}

struct Workspace<'a> {
    mesh: &'a PolyMesh,
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
    vertex_cells: Vec<BTreeSet<usize>>,
    alive: Vec<bool>,
}

/// A tentative set of cell rewrites.
struct Collapse {
    cells: Vec<(usize, Vec<usize>)>,
    removed: Vec<usize>,
}

impl<'a> Workspace<'a> {
    fn new(mesh: &'a PolyMesh) -> Self {
        let mut vertex_cells = vec![BTreeSet::new(); mesh.vertices.len()];
        for (c, cell) in mesh.cells.iter().enumerate() {
            for &v in cell {
                vertex_cells[v].insert(c);
            }
        }
        Workspace {
            mesh,
            vertices: mesh.vertices.clone(),
            cells: mesh.cells.clone(),
            vertex_cells,
            alive: vec![true; mesh.vertices.len()],
        }
    }

    fn short_edges(&self, threshold: f64) -> Vec<(f64, usize, usize)> {
        let mut seen = BTreeSet::new();
        for cell in &self.cells {
            for i in 0..cell.len() {
                let (p, q) = (cell[i], cell[(i + 1) % cell.len()]);
                seen.insert((p.min(q), p.max(q)));
            }
        }
        let mut out: Vec<(f64, usize, usize)> = seen
            .into_iter()
            .map(|(a, b)| (dist2(self.vertices[a], self.vertices[b]).sqrt(), a, b))
            .filter(|e| e.0 < threshold)
            .collect();
        out.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        out
    }

    fn is_edge(&self, a: usize, b: usize) -> bool {
        self.vertex_cells[a].iter().any(|&c| {
            let cell = &self.cells[c];
            let k = cell.len();
            (0..k).any(|i| {
                let (p, q) = (cell[i], cell[(i + 1) % k]);
                (p == a && q == b) || (p == b && q == a)
            })
        })
    }

    /// Signed distance of `cell[i]` from the line through its neighbours,
    /// positive for a left (convex) turn.
    fn turn(&self, cell: &[usize], i: usize) -> f64 {
        let k = cell.len();
        let p = self.vertices[cell[(i + k - 1) % k]];
        let q = self.vertices[cell[i]];
        let r = self.vertices[cell[(i + 1) % k]];
        let len = dist2(p, r).sqrt();
        if len == 0.0 {
            return 0.0;
        }
        cross(p, q, r) / len
    }

    fn cell_diameter(&self, cell: &[usize]) -> f64 {
        let mut d: f64 = 0.0;
        for (i, &a) in cell.iter().enumerate() {
            for &b in &cell[i + 1..] {
                d = d.max(dist2(self.vertices[a], self.vertices[b]));
            }
        }
        d.sqrt()
    }

    /// Plans removal of `u` in favour of `v`; `None` if any affected cell
    /// would become non-convex or degenerate.
    fn plan(&self, u: usize, v: usize) -> Option<Collapse> {
        let su = self.mesh.sides(self.vertices[u]);
        let sv = self.mesh.sides(self.vertices[v]);
        if su & !sv != 0 {
            return None;
        }
        let mut rewritten: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &c in &self.vertex_cells[u] {
            let mut cell: Vec<usize> = Vec::with_capacity(self.cells[c].len());
            for &w in &self.cells[c] {
                let w = if w == u { v } else { w };
                if cell.last() != Some(&w) {
                    cell.push(w);
                }
            }
            while cell.len() > 1 && cell.first() == cell.last() {
                cell.pop();
            }
            if cell.len() < 3 {
                return None;
            }
            rewritten.insert(c, cell);
        }

        // drop vertices that the move left collinear, provided every cell
        // around them agrees
        let mut removed = vec![u];
        loop {
            let mut flat: Option<usize> = None;
            'cells: for cell in rewritten.values() {
                let tol = 1e-10 * self.cell_diameter(cell);
                for i in 0..cell.len() {
                    let t = self.turn(cell, i);
                    if t < -tol {
                        return None;
                    }
                    if t <= tol {
                        flat = Some(cell[i]);
                        break 'cells;
                    }
                }
            }
            let Some(p) = flat else { break };
            if self.mesh.sides(self.vertices[p]).count_ones() >= 2 {
                return None;
            }
            for &c in &self.vertex_cells[p] {
                rewritten.entry(c).or_insert_with(|| self.cells[c].clone());
            }
            if p == v {
                for &c in &self.vertex_cells[u] {
                    rewritten.entry(c).or_insert_with(|| self.cells[c].clone());
                }
            }
            for cell in rewritten.values_mut() {
                if let Some(i) = cell.iter().position(|&w| w == p) {
                    let tol = 1e-10 * self.cell_diameter(cell);
                    if self.turn(cell, i).abs() > tol {
                        return None;
                    }
                    cell.remove(i);
                    if cell.len() < 3 {
                        return None;
                    }
                }
            }
            removed.push(p);
        }
        for cell in rewritten.values() {
            let pts: Vec<[f64; 2]> = cell.iter().map(|&w| self.vertices[w]).collect();
            if polygon_area(&pts) <= 0.0 || !winds_once(&pts) {
                return None;
            }
        }
        Some(Collapse {
            cells: rewritten.into_iter().collect(),
            removed,
        })
    }

    fn apply(&mut self, plan: Collapse) {
        for (c, cell) in plan.cells {
            for &w in &self.cells[c] {
                self.vertex_cells[w].remove(&c);
            }
            for &w in &cell {
                self.vertex_cells[w].insert(c);
            }
            self.cells[c] = cell;
        }
        for r in plan.removed {
            self.alive[r] = false;
            debug_assert!(self.vertex_cells[r].is_empty());
        }
    }

    fn finish(self) -> PolyMesh {
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        for (i, p) in self.vertices.iter().enumerate() {
            if self.alive[i] && !self.vertex_cells[i].is_empty() {
                remap[i] = vertices.len();
                vertices.push(*p);
            }
        }
        let cells = self
            .cells
            .into_iter()
            .map(|c| c.into_iter().map(|v| remap[v]).collect())
            .collect();
        PolyMesh {
            vertices,
            cells,
            domain: self.mesh.domain,
        }
    }
}

/// Total turning of a closed polygon equals one full turn.
fn winds_once(pts: &[[f64; 2]]) -> bool {
    let k = pts.len();
    let mut total = 0.0;
    for i in 0..k {
        let p = pts[(i + k - 1) % k];
        let q = pts[i];
        let r = pts[(i + 1) % k];
        let a = [q[0] - p[0], q[1] - p[1]];
        let b = [r[0] - q[0], r[1] - q[1]];
        total += (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
    }
    (total - std::f64::consts::TAU).abs() < 1e-6
}

/// Collapses every edge shorter than `threshold_ratio · h`, shortest first,
/// with `h = sqrt(|Ω| / n_cells)`. Each collapse removes one endpoint:
/// the one whose removal keeps all incident cells convex, preferring to
/// keep the endpoint in more cells, then the lower id. A vertex on the
/// domain boundary only moves along the sides it lies on, so corners stay.
/// Edges that cannot be collapsed are left and reported.
pub fn eliminate_short_edges(mesh: &PolyMesh, threshold_ratio: f64) -> Result<EliminationOutcome> {
    mesh.validate()?;
    let threshold = threshold_ratio * mesh.characteristic_size();
    let mut ws = Workspace::new(mesh);
    let mut collapsed = 0;
    let mut merged_collinear = 0;
    let mut skipped;
    loop {
        skipped = Vec::new();
        let mut changed = false;
        for (_, a, b) in ws.short_edges(threshold) {
            if !(ws.alive[a] && ws.alive[b]) || !ws.is_edge(a, b) {
                continue;
            }
            if dist2(ws.vertices[a], ws.vertices[b]).sqrt() >= threshold {
                continue;
            }
            let remove_a = ws.plan(a, b);
            let remove_b = ws.plan(b, a);
            let plan = match (remove_a, remove_b) {
                (Some(pa), Some(pb)) => {
                    let (na, nb) = (ws.vertex_cells[a].len(), ws.vertex_cells[b].len());
                    // keep the endpoint in more cells, then the lower id
                    if na > nb || (na == nb && a < b) {
                        pb
                    } else {
                        pa
                    }
                }
                (Some(p), None) | (None, Some(p)) => p,
                (None, None) => {
                    skipped.push([ws.vertices[a], ws.vertices[b]]);
                    continue;
                }
            };
            merged_collinear += plan.removed.len() - 1;
            collapsed += 1;
            ws.apply(plan);
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let out = ws.finish();
    out.validate()?;
    Ok(EliminationOutcome {
        mesh: out,
        collapsed,
        merged_collinear,
        skipped,
    })
}

/// Count of cells with `h_*/h_K` in `[lo, hi)` (the last bin is closed).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct MeshStats {
    pub reports: Vec<ShapeReport>,
    pub ratio_histogram: Vec<HistogramBin>,
    /// Number of cells per vertex count.
    pub ngon_counts: BTreeMap<usize, usize>,
}

impl MeshStats {
    /// The most common vertex count (smallest on ties).
    pub fn modal_ngon(&self) -> Option<usize> {
        self.ngon_counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(n, _)| *n)
    }

    pub fn min_ratio(&self) -> f64 {
        self.reports.iter().map(|r| r.h_star_over_h_k).fold(f64::INFINITY, f64::min)
    }

    pub fn max_ratio(&self) -> f64 {
        self.reports.iter().map(|r| r.h_star_over_h_k).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub const RATIO_BINS: usize = 20;

/// Per-cell shape reports and the `h_*/h_K` and n-gon histograms.
pub fn mesh_stats(mesh: &PolyMesh, thresholds: &Thresholds) -> Result<MeshStats> {
    let reports = (0..mesh.num_cells())
        .map(|c| mesh.cell_polytope(c)?.shape_report(thresholds))
        .collect::<Result<Vec<_>>>()?;
    let width = 1.0 / RATIO_BINS as f64;
    let mut ratio_histogram: Vec<HistogramBin> = (0..RATIO_BINS)
        .map(|i| HistogramBin {
            lo: i as f64 * width,
            hi: (i + 1) as f64 * width,
            count: 0,
        })
        .collect();
    let mut ngon_counts = BTreeMap::new();
    for r in &reports {
        let bin = ((r.h_star_over_h_k / width).floor() as usize).min(RATIO_BINS - 1);
        ratio_histogram[bin].count += 1;
        *ngon_counts.entry(r.n_vertices).or_insert(0) += 1;
    }
    Ok(MeshStats {
        reports,
        ratio_histogram,
        ngon_counts,
    })
}
