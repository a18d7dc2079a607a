use wachspress::polygen::{
    cvt_energy, cvt_from_sites, cvt_mesh, eliminate_short_edges, mesh_stats, PolyMesh, RATIO_BINS,
};
use wachspress::{RngStream, Thresholds};

fn area(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        / 2.0
}

/// `∫_cell |x − s|²` by the edge-midpoint rule on a fan of triangles (exact
/// for quadratics).
fn quadrature_moment(cell: &[[f64; 2]], s: [f64; 2]) -> f64 {
    let c = cell[0];
    let f = |p: [f64; 2]| (p[0] - s[0]).powi(2) + (p[1] - s[1]).powi(2);
    let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    (1..cell.len() - 1)
        .map(|i| {
            let (a, b) = (cell[i], cell[i + 1]);
            area(&[c, a, b]) * (f(mid(c, a)) + f(mid(a, b)) + f(mid(b, c))) / 3.0
        })
        .sum()
}

#[test]
fn trivial_tessellations() {
    let one = cvt_mesh(1, &mut RngStream::new(1), 200, 1e-6).unwrap();
    assert_eq!(one.num_cells(), 1);
    assert!((area(&one.cell_points(0)) - 1.0).abs() < 1e-14);

    let two = cvt_from_sites(&[[0.25, 0.5], [0.75, 0.5]], 200, 1e-6).unwrap();
    assert_eq!(two.iterations, 0);
    for c in 0..2 {
        let pts = two.mesh.cell_points(c);
        assert_eq!(pts.len(), 4);
        assert!((area(&pts) - 0.5).abs() < 1e-14);
        assert!(pts.iter().all(|p| (p[0] - 0.5).abs() < 1e-14 || p[0] == 0.0 || p[0] == 1.0));
    }

    let four = cvt_from_sites(&[[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]], 200, 1e-6).unwrap();
    assert_eq!(four.iterations, 0);
    assert_eq!(four.mesh.vertices.len(), 9);
    for c in 0..4 {
        assert!((area(&four.mesh.cell_points(c)) - 0.25).abs() < 1e-14);
    }
}

#[test]
fn lloyd_energy_is_monotone_and_matches_quadrature() {
    for (seed, n) in [(1u64, 16usize), (2, 40), (3, 64)] {
        let mut rng = RngStream::new(seed);
        let mut sites: Vec<[f64; 2]> = (0..n).map(|_| rng.point_in_unit_square()).collect();
        let mut prev = f64::INFINITY;
        for _ in 0..15 {
            let step = cvt_from_sites(&sites, 1, 0.0).unwrap();
            assert_eq!(step.iterations, 1);
            let cells: Vec<Vec<[f64; 2]>> = (0..n).map(|c| step.mesh.cell_points(c)).collect();
            let e = cvt_energy(&step.sites, &cells);
            let numeric: f64 = cells.iter().zip(&step.sites).map(|(c, s)| quadrature_moment(c, *s)).sum();
            assert!((e - numeric).abs() <= 1e-12 * numeric);
            assert!((step.energies[1] - e).abs() <= 1e-9 * e);
            assert!(step.energies[1] <= step.energies[0] * (1.0 + 1e-9));
            assert!(numeric <= prev * (1.0 + 1e-9), "n = {n}: energy rose");
            prev = numeric;
            sites = step.sites;
        }
    }
}

#[test]
fn cells_are_voronoi_regions_of_their_sites() {
    let mut rng = RngStream::new(8);
    let sites: Vec<[f64; 2]> = (0..50).map(|_| rng.point_in_unit_square()).collect();
    let res = cvt_from_sites(&sites, 0, 1e-6).unwrap();
    res.mesh.validate().unwrap();
    let d2 = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    for (c, s) in sites.iter().enumerate() {
        for p in res.mesh.cell_points(c) {
            let own = d2(p, *s);
            assert!(sites.iter().all(|t| own <= d2(p, *t) + 1e-9));
        }
    }
    let total: f64 = (0..50).map(|c| area(&res.mesh.cell_points(c))).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn short_edge_elimination_contract() {
    let mesh = cvt_mesh(300, &mut RngStream::new(4), 100, 1e-6).unwrap();
    mesh.validate().unwrap();
    let out = eliminate_short_edges(&mesh, 0.15).unwrap();
    out.mesh.validate().unwrap();
    let threshold = 0.15 * mesh.characteristic_size();
    let skipped = |e: &[[f64; 2]; 2]| out.skipped.iter().any(|s| s == e || [s[1], s[0]] == *e);
    for e in out.mesh.edges() {
        let (a, b) = (out.mesh.vertices[e.a], out.mesh.vertices[e.b]);
        let len = (a[0] - b[0]).hypot(a[1] - b[1]);
        assert!(len >= threshold || skipped(&[a, b]));
    }
    assert_eq!(out.mesh.num_cells(), mesh.num_cells());
    let removed = out.collapsed + out.merged_collinear;
    let used = |m: &PolyMesh| {
        let mut ids: Vec<usize> = m.cells.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    };
    assert_eq!(used(&mesh) - used(&out.mesh), removed);
    let area_of = |m: &PolyMesh| (0..m.num_cells()).map(|c| area(&m.cell_points(c))).sum::<f64>();
    assert!((area_of(&out.mesh) - 1.0).abs() < 1e-12);

    let again = eliminate_short_edges(&out.mesh, 0.15).unwrap();
    assert_eq!(again.collapsed, 0);
    assert_eq!(again.mesh.to_json_string().unwrap(), out.mesh.to_json_string().unwrap());
}

#[test]
fn grid_mesh_statistics() {
    let mesh = PolyMesh::grid(2, 2, [0.0, 0.0, 1.0, 1.0]);
    let stats = mesh_stats(&mesh, &Thresholds::default()).unwrap();
    assert_eq!(stats.reports.len(), 4);
    assert!(stats.reports.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(stats.modal_ngon(), Some(4));
    assert_eq!(stats.ratio_histogram.len(), RATIO_BINS);
    assert_eq!(stats.ratio_histogram.iter().map(|b| b.count).sum::<usize>(), 4);
    let unchanged = eliminate_short_edges(&mesh, 0.15).unwrap();
    assert_eq!(unchanged.mesh, mesh);
}

#[test]
fn cvt_statistics_are_conserved() {
    let mesh = cvt_mesh(200, &mut RngStream::new(6), 100, 1e-6).unwrap();
    let stats = mesh_stats(&mesh, &Thresholds::default()).unwrap();
    assert_eq!(stats.ratio_histogram.iter().map(|b| b.count).sum::<usize>(), 200);
    assert_eq!(stats.ngon_counts.values().sum::<usize>(), 200);
    assert!(stats.min_ratio() > 0.0 && stats.max_ratio() < 1.0);
}

#[test]
fn external_mesh_json_is_audited() {
    let json = r#"{"vertices": [[0,0],[1,0],[1,1],[0,1],[0.5,0]], "cells": [[0,4,1,2,3]], "domain": [0,0,1,1]}"#;
    let m = PolyMesh::from_json_str(json).unwrap();
    assert!(m.validate().is_err() || m.cell_polytope(0).is_err());
    let bad = r#"{"vertices": [[0,0],[1,0]], "cells": [[0,1,2]], "domain": [0,0,1,1]}"#;
    assert!(PolyMesh::from_json_str(bad).map(|m| m.validate()).map_or(true, |r| r.is_err()));
    let good = PolyMesh::grid(3, 2, [0.0, 0.0, 3.0, 2.0]);
    let back = PolyMesh::from_json_str(&good.to_json_string().unwrap()).unwrap();
    assert_eq!(back, good);
    back.validate().unwrap();
}

#[test]
fn cvt_is_independent_of_thread_count() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let m = cvt_mesh(150, &mut RngStream::new(12), 50, 1e-6).unwrap();
            eliminate_short_edges(&m, 0.15).unwrap().mesh.to_json_string().unwrap()
        })
    };
    assert_eq!(run(1), run(3));
}
