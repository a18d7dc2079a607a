//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use wachspress::polygen::{random_convex_polygon, scale_polygon};
use wachspress::{MultiIndex, Polytope, RngStream, WachspressBasis};

/// Random polygon `i` of the test corpus: hull of 20 uniform points, redrawn
/// until `h_*/h_K ≥ 0.01`, scaled to unit diameter.
pub fn corpus_polygon(seed: u64, i: usize) -> Polytope {
    let mut rng = RngStream::new(seed).substream(i as u64);
    loop {
        let p = random_convex_polygon(&mut rng, 20);
        if p.h_star() / p.diameter() >= 0.01 {
            return scale_polygon(&p, 1.0).unwrap();
        }
    }
}

/// Points strictly inside `p`: random convex combinations of the vertices.
pub fn interior_points(p: &Polytope, rng: &mut RngStream, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| {
            let w: Vec<f64> = (0..p.num_vertices()).map(|_| -(1.0 - rng.uniform()).ln()).collect();
            let s: f64 = w.iter().sum();
            let mut x = [0.0; 2];
            for (wi, v) in w.iter().zip(p.vertices()) {
                x[0] += wi / s * v[0];
                x[1] += wi / s * v[1];
            }
            x
        })
        .collect()
}

/// Uniform points on random edges of `p`.
pub fn boundary_points(p: &Polytope, rng: &mut RngStream, n: usize) -> Vec<[f64; 2]> {
    let k = p.num_vertices();
    (0..n)
        .map(|_| {
            let e = ((rng.uniform() * k as f64) as usize).min(k - 1);
            let t = rng.uniform();
            let a = p.vertex(e);
            let b = p.vertex((e + 1) % k);
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect()
}

/// All 2D multi-indices of order at most `k`, lowest order first.
pub fn indices_up_to(k: u32) -> Vec<MultiIndex> {
    (0..=k)
        .flat_map(|n| (0..=n).map(move |i| MultiIndex::new(vec![i, n - i])))
        .collect()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binom(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `D^{(i,j)} w_v(x)` for `i + j ≤ order`, from the Taylor expansion of the
/// product of the linear facet forms about `x`. Indexed `[v][i][j]`.
pub fn weight_derivatives(p: &Polytope, x: [f64; 2], order: usize) -> Vec<Vec<Vec<f64>>> {
    let n = order + 1;
    (0..p.num_vertices())
        .map(|v| {
            let mut c = vec![vec![0.0; n]; n];
            c[0][0] = p.det_normal_matrix(v);
            let incident = p.vertex_facets(v);
            for (f, facet) in p.facets().iter().enumerate() {
                if incident.contains(&f) {
                    continue;
                }
                let h = facet.offset - facet.normal[0] * x[0] - facet.normal[1] * x[1];
                let (gx, gy) = (-facet.normal[0], -facet.normal[1]);
                let mut next = vec![vec![0.0; n]; n];
                for i in 0..n {
                    for j in 0..n - i {
                        let mut t = h * c[i][j];
                        if i > 0 {
                            t += gx * c[i - 1][j];
                        }
                        if j > 0 {
                            t += gy * c[i][j - 1];
                        }
                        next[i][j] = t;
                    }
                }
                c = next;
            }
            for (i, row) in c.iter_mut().enumerate() {
                for (j, e) in row.iter_mut().enumerate() {
                    *e *= factorial(i as u32) * factorial(j as u32);
                }
            }
            c
        })
        .collect()
}

/// `D^{(i,j)} φ_v(x)` by the recursive quotient rule
/// `W D^α φ = D^α w − Σ_{0 ≠ β ≤ α} C(α, β) D^β W D^{α−β} φ`. Indexed `[v][i][j]`.
pub fn quotient_rule_dphi(p: &Polytope, x: [f64; 2], order: usize) -> Vec<Vec<Vec<f64>>> {
    let dw = weight_derivatives(p, x, order);
    let n = order + 1;
    let mut dws = vec![vec![0.0; n]; n];
    for w in &dw {
        for i in 0..n {
            for j in 0..n - i {
                dws[i][j] += w[i][j];
            }
        }
    }
    dw.iter()
        .map(|w| {
            let mut phi = vec![vec![0.0; n]; n];
            for k in 0..n {
                for i in 0..=k {
                    let j = k - i;
                    let mut acc = w[i][j];
                    for bi in 0..=i {
                        for bj in 0..=j {
                            if bi + bj == 0 {
                                continue;
                            }
                            acc -= binom(i as u32, bi as u32)
                                * binom(j as u32, bj as u32)
                                * dws[bi][bj]
                                * phi[i - bi][j - bj];
                        }
                    }
                    phi[i][j] = acc / dws[0][0];
                }
            }
            phi
        })
        .collect()
}

/// Fourth-order central difference of the library's `D^{α − e_i} φ_v` along
/// the first axis `i` with `α_i > 0`, step `h`.
pub fn central_difference(b: &WachspressBasis, v: usize, alpha: &MultiIndex, x: [f64; 2], h: f64) -> f64 {
    let i = alpha.components().iter().position(|&c| c > 0).expect("α ≠ 0");
    let lower = alpha.checked_sub(&MultiIndex::unit(2, i)).unwrap();
    let f = |s: f64| {
        let mut y = x;
        y[i] += s * h;
        b.d_phi_at(v, &lower, &y)
    };
    (8.0 * (f(1.0) - f(-1.0)) - (f(2.0) - f(-2.0))) / (12.0 * h)
}

/// `max_v |a_v − b_v| / max(max_v |b_v|, 1)`.
pub fn vector_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}
