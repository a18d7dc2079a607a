//! Dense sampling of a polygon and the grid maxima used for `Λ_α`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::polytope::Polytope;
use crate::wachspress::{AlphaPlan, DerivativeEngine, DirectionalPlan, WachspressBasis};

/// Sample points of a convex polygon.
///
/// The polygon is fanned into triangles `(c, v_t, v_{t+1})` around the vertex
/// centroid `c`, and each triangle carries the barycentric lattice
/// `(i, j, k) / m`. Points shared between neighbouring triangles are kept once,
/// so the grid holds `n m (m + 1) / 2 + 1` points: `c`, every vertex, `m`
/// points per edge (counting one endpoint), and the interior lattice.
/// Grids of densities `m` and `2m` are nested.
///
/// [`SampleGrid::refined`] adds shrunken copies of the polygon around each
/// vertex so that derivatives varying on the scale of a short edge are
/// resolved.
#[derive(Clone, Debug)]
pub struct SampleGrid {
    polygon: Polytope,
    density: usize,
    refined: bool,
    points: Vec<[f64; 2]>,
}

/// Lattice density of the shrunken copies in a refined grid.
pub const REFINED_DENSITY: usize = 10;

impl SampleGrid {
    pub fn new(polygon: &Polytope, density: usize) -> Result<Self> {
        if density == 0 {
            return Err(Error::InvalidArgument("sample density must be positive".into()));
        }
        let verts = polygon.vertices_2d()?;
        let mut points = Vec::with_capacity(Self::expected_len(verts.len(), density));
        fan_lattice(&verts, density, &mut points);
        Ok(SampleGrid {
            polygon: polygon.clone(),
            density,
            refined: false,
            points,
        })
    }

    /// The density-`m` grid plus, for every vertex `v` with shortest incident
    /// edge `ℓ_v`, the density-[`REFINED_DENSITY`] grids of the copies
    /// `v + 2^{−k}(K − v)` for `k = 1, …, ⌈log₂(h_K/ℓ_v)⌉ + 1`. Points
    /// repeated between copies are kept; the maxima are unaffected.
    pub fn refined(polygon: &Polytope, density: usize) -> Result<Self> {
        let mut grid = Self::new(polygon, density)?;
        let verts = polygon.vertices_2d()?;
        let n = verts.len();
        let h_k = polygon.diameter();
        let mut copy = vec![[0.0; 2]; n];
        for (i, v) in verts.iter().enumerate() {
            let edge = |j: usize| {
                let w = verts[j % n];
                (w[0] - v[0]).hypot(w[1] - v[1])
            };
            let ell = edge(i + 1).min(edge(i + n - 1));
            let levels = (h_k / ell).log2().ceil().max(0.0) as i32 + 1;
            for k in 1..=levels {
                let s = 0.5f64.powi(k);
                for (c, w) in copy.iter_mut().zip(&verts) {
                    *c = [v[0] + s * (w[0] - v[0]), v[1] + s * (w[1] - v[1])];
                }
                fan_lattice(&copy, REFINED_DENSITY, &mut grid.points);
            }
        }
        grid.refined = true;
        Ok(grid)
    }

    /// Expected point count for `n` vertices at density `m`.
    pub fn expected_len(n: usize, m: usize) -> usize {
        n * m * (m + 1) / 2 + 1
    }

    pub fn polygon(&self) -> &Polytope {
        &self.polygon
    }

    pub fn density(&self) -> usize {
        self.density
    }

    pub fn is_refined(&self) -> bool {
        self.refined
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Appends the fan lattice of density `m` of a convex polygon given by its
/// vertices in order.
fn fan_lattice(verts: &[[f64; 2]], m: usize, points: &mut Vec<[f64; 2]>) {
    let n = verts.len();
    let c = [
        verts.iter().map(|v| v[0]).sum::<f64>() / n as f64,
        verts.iter().map(|v| v[1]).sum::<f64>() / n as f64,
    ];
    points.push(c);
    for t in 0..n {
        let a = verts[t];
        let b = verts[(t + 1) % n];
        let da = [a[0] - c[0], a[1] - c[1]];
        let db = [b[0] - c[0], b[1] - c[1]];
        // j ≥ 1 leaves the segment c–v_{t+1} to the next triangle
        for j in 1..=m {
            if j == m {
                points.push(a);
                continue;
            }
            let sj = j as f64 / m as f64;
            for k in 0..=(m - j) {
                let sk = k as f64 / m as f64;
                points.push([c[0] + sj * da[0] + sk * db[0], c[1] + sj * da[1] + sk * db[1]]);
            }
        }
    }
}

/// Maxima of one derivative over a sample grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMaximum {
    /// `max_x Σ_v |D φ_v(x)|`.
    pub lambda: f64,
    /// First sample point attaining `lambda`.
    pub argmax: [f64; 2],
    /// `max_x |D φ_v(x)|` for every vertex.
    pub per_vertex: Vec<f64>,
}

/// A derivative to maximise over the grid.
#[derive(Clone, Debug)]
pub enum Probe {
    Partial(AlphaPlan),
    Directional(DirectionalPlan),
}

/// Grid maxima of several derivatives, evaluated in one pass over the points.
pub fn grid_maxima(
    basis: &WachspressBasis,
    grid: &SampleGrid,
    engine: &DerivativeEngine,
    probes: &[Probe],
) -> Vec<GridMaximum> {
    let n_v = basis.num_vertices();
    let evals: Vec<Vec<f64>> = grid
        .points()
        .par_iter()
        .map(|x| {
            let pd = engine.evaluate(basis, x);
            let mut row = Vec::with_capacity(probes.len() * n_v);
            for probe in probes {
                for v in 0..n_v {
                    let d = match probe {
                        Probe::Partial(p) => pd.d_phi(v, p),
                        Probe::Directional(p) => pd.directional(v, p),
                    };
                    row.push(d.abs());
                }
            }
            row
        })
        .collect();
    (0..probes.len())
        .map(|q| {
            let mut best = GridMaximum {
                lambda: f64::NEG_INFINITY,
                argmax: grid.points()[0],
                per_vertex: vec![0.0; n_v],
            };
            for (x, row) in grid.points().iter().zip(&evals) {
                let vals = &row[q * n_v..(q + 1) * n_v];
                let s: f64 = vals.iter().sum();
                if s > best.lambda {
                    best.lambda = s;
                    best.argmax = *x;
                }
                for (m, v) in best.per_vertex.iter_mut().zip(vals) {
                    *m = m.max(*v);
                }
            }
            best
        })
        .collect()
}

/// `Λ_α` with its argmax and per-vertex maxima over the density-`m` grid.
pub fn lambda_over_grid(basis: &WachspressBasis, alpha: &MultiIndex, m: usize) -> Result<GridMaximum> {
    if basis.dim() != 2 {
        return Err(Error::Unsupported("sampling is implemented for polygons only".into()));
    }
    let grid = SampleGrid::new(basis.polytope(), m)?;
    let engine = DerivativeEngine::new(2, alpha.order());
    let probe = Probe::Partial(engine.plan(alpha, basis.h_k()));
    Ok(grid_maxima(basis, &grid, &engine, &[probe]).remove(0))
}
