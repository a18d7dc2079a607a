mod common;

use common::*;
use wachspress::experiments::sampling::{grid_maxima, Probe};
use wachspress::polygen::{family_k, random_convex_polygon, scale_polygon, Family};
use wachspress::wachspress::DerivativeEngine;
use wachspress::{MultiIndex, RngStream, SampleGrid, WachspressBasis};

#[test]
fn det_normal_matrix_is_sandwiched() {
    let root = RngStream::new(91);
    for i in 0..100 {
        let p = random_convex_polygon(&mut root.substream(i), 20);
        let b = WachspressBasis::new(&p);
        for v in 0..p.num_vertices() {
            let (lo, det, hi) = b.detm_bounds(v).unwrap();
            assert!(lo <= det && det <= hi, "polygon {i}, v {v}");
            assert_eq!(det, b.det_m()[v]);
        }
    }
}

#[test]
fn weight_sum_lower_bound_holds_on_dense_samples() {
    let root = RngStream::new(92);
    for i in 0..20 {
        let mut rng = root.substream(i);
        let p = scale_polygon(&random_convex_polygon(&mut rng, 20), rng.uniform_in(1e-3, 2.0)).unwrap();
        let b = WachspressBasis::new(&p);
        let low = b.w_lower_bound();
        let mut pts = interior_points(&p, &mut rng, 9000);
        pts.extend(boundary_points(&p, &mut rng, 1000));
        pts.extend(p.vertices().iter().map(|v| [v[0], v[1]]));
        for x in pts {
            assert!(b.weight_sum(&x) >= low, "polygon {i} at {x:?}");
        }
    }
}

#[test]
fn certified_bound_dominates_sampled_derivatives() {
    let root = RngStream::new(93);
    let alphas = indices_up_to(3).into_iter().filter(|a| !a.is_zero()).collect::<Vec<_>>();
    let engine = DerivativeEngine::new(2, 3);
    for i in 0..30 {
        let mut rng = root.substream(i);
        let p = scale_polygon(&random_convex_polygon(&mut rng, 20), rng.uniform_in(1e-4, 1.0)).unwrap();
        let b = WachspressBasis::new(&p);
        let grid = SampleGrid::refined(&p, 16).unwrap();
        let probes: Vec<Probe> = alphas.iter().map(|a| Probe::Partial(engine.plan(a, b.h_k()))).collect();
        for (a, m) in alphas.iter().zip(grid_maxima(&b, &grid, &engine, &probes)) {
            let bound = b.certified_dphi_bound(a);
            for pv in &m.per_vertex {
                assert!(*pv <= bound.total, "polygon {i}, α {a}");
            }
            assert!(m.lambda <= bound.total * p.num_vertices() as f64);
        }
    }
}

#[test]
fn bound_breakdown_is_consistent() {
    let p = corpus_polygon(94, 0);
    let b = WachspressBasis::new(&p);
    for a in indices_up_to(3) {
        let br = b.certified_dphi_bound(&a);
        assert_eq!(br.alpha, a);
        let sum = br.zero_term + br.per_term.iter().map(|t| t.value).sum::<f64>();
        assert!((sum - br.total).abs() <= 1e-12 * br.total);
        assert!(br.per_term.iter().all(|t| t.value > 0.0 && !t.beta.is_zero() && t.beta.le(&a)));
        assert_eq!(br.w_low, b.w_lower_bound());
        if a.is_zero() {
            assert!(br.per_term.is_empty());
        }
    }
    let json = serde_json::to_value(b.certified_dphi_bound(&MultiIndex::new(vec![1, 1]))).unwrap();
    assert_eq!(json["alpha"], serde_json::json!([1, 1]));
    assert!(json["per_term"].as_array().unwrap().len() > 1);
}

#[test]
fn bound_grows_as_the_polygon_degenerates() {
    let a = MultiIndex::new(vec![1, 0]);
    let mut prev = 0.0;
    for k in 0..6 {
        let p = family_k(Family::K3, 0.3 * 0.5f64.powi(k)).unwrap();
        let t = WachspressBasis::new(&p).certified_dphi_bound(&a).total;
        assert!(t > prev);
        prev = t;
    }
}

#[test]
fn gradient_bounds_cover_sampled_weight_derivatives() {
    let p = corpus_polygon(95, 1);
    let b = WachspressBasis::new(&p);
    let mut rng = RngStream::new(95);
    let pts = interior_points(&p, &mut rng, 200);
    for k in 0..=3u32 {
        let bound = b.bound_grad_w(k).unwrap();
        for x in &pts {
            for v in 0..p.num_vertices() {
                let grad2: f64 = (0..=k)
                    .map(|i| {
                        let nu = MultiIndex::new(vec![i, k - i]);
                        let d = b.d_weight_at(v, &nu, x);
                        let c = (1..=k).map(f64::from).product::<f64>()
                            / ((1..=i).map(f64::from).product::<f64>() * (1..=k - i).map(f64::from).product::<f64>());
                        c * d * d
                    })
                    .sum();
                assert!(grad2.sqrt() <= bound, "k {k}, v {v}");
            }
        }
    }
    assert!(b.bound_grad_w(b.weight_degree() + 1).is_err());
}
