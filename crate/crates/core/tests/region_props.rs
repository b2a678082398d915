use fracstab_core::regions::{sweep_order, sweep_parameter, OrderSweepMode};
use fracstab_core::{
    boundary_set, classify_window, matignon_check, Bindings, CellVerdict, Coefficient, FracOrder,
    Plane, QuasiPolynomial, RegionMap, Term, TraceOptions, Window,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn basset() -> QuasiPolynomial {
    QuasiPolynomial::new([
        Term::new(Coefficient::param("a"), FracOrder::ONE),
        Term::new(Coefficient::param("b"), FracOrder::new(1, 2).unwrap()),
        Term::new(Coefficient::param("c"), FracOrder::ZERO),
    ])
    .unwrap()
}

fn plane() -> Plane {
    Plane::new("a", "c")
}

fn fix_b(b: f64) -> Bindings {
    [("b".to_string(), b)].into_iter().collect()
}

fn region_map(res: usize) -> RegionMap {
    classify_window(&basset(), &plane(), &fix_b(-2.0), &Window::square(10.0), (res, res)).unwrap()
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

#[test]
fn stable_unstable_neighbours_are_split_by_a_boundary() {
    let map = region_map(128);
    let window = Window::square(10.0);
    let set = boundary_set(&basset(), &plane(), &fix_b(-2.0), &window, &TraceOptions::default()).unwrap();
    let mut segments = Vec::new();
    for line in [set.rrb, set.irb].into_iter().flatten() {
        segments.extend(line.segment_in(&window.expanded(1.5)));
    }
    for branch in &set.crb {
        for w in branch.samples.windows(2) {
            segments.push((w[0].point, w[1].point));
        }
    }
    let (dx, dy) = map.cell_size();
    let diagonal = dx.hypot(dy);
    let (n1, n2) = map.resolution;
    let mut pairs = 0;
    for j in 0..n2 {
        for i in 0..n1 {
            for (k, l) in [(i + 1, j), (i, j + 1)] {
                if k >= n1 || l >= n2 {
                    continue;
                }
                let (u, v) = (map.cell(i, j).verdict, map.cell(k, l).verdict);
                let mixed = matches!(
                    (u, v),
                    (CellVerdict::Stable, CellVerdict::Unstable) | (CellVerdict::Unstable, CellVerdict::Stable)
                );
                if !mixed {
                    continue;
                }
                pairs += 1;
                let (p, q) = (map.center(i, j), map.center(k, l));
                let mid = ((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0);
                let d = segments
                    .iter()
                    .map(|&(a, b)| segment_distance(mid, a, b))
                    .fold(f64::INFINITY, f64::min);
                assert!(d <= diagonal, "cells {p:?} and {q:?} differ {d} away from any boundary");
            }
        }
    }
    assert!(pairs > 0);
}

#[test]
fn doubling_resolution_keeps_region_areas() {
    let coarse = region_map(256);
    let fine = region_map(512);
    let area = |m: &RegionMap, cells: usize| {
        let (dx, dy) = m.cell_size();
        cells as f64 * dx * dy
    };
    let n = coarse.resolution.0;
    for r in &coarse.regions {
        let mut tally = vec![0usize; fine.regions.len()];
        for (k, label) in fine.labels.iter().enumerate() {
            let (i, j) = (k % (2 * n), k / (2 * n));
            if coarse.labels[(j / 2) * n + i / 2] == Some(r.id) {
                if let Some(f) = label {
                    tally[*f] += 1;
                }
            }
        }
        let best = (0..tally.len()).max_by_key(|&f| tally[f]).unwrap();
        let matched = &fine.regions[best];
        assert_eq!(matched.verdict, r.verdict);
        assert_eq!(matched.unstable_roots, r.unstable_roots);
        let (a0, a1) = (area(&coarse, r.cells), area(&fine, matched.cells));
        assert!((a1 - a0).abs() < 0.02 * a0, "region {} area {a0} vs {a1}", r.id);
    }
    assert_eq!(coarse.regions.len(), fine.regions.len());
}

#[test]
fn interior_cells_share_their_region_verdict() {
    let map = region_map(256);
    let (n1, n2) = map.resolution;
    let mut rng = StdRng::seed_from_u64(41);
    let label = |i: usize, j: usize| map.labels[j * n1 + i];
    for r in &map.regions {
        let interior: Vec<(usize, usize)> = (1..n2 - 1)
            .flat_map(|j| (1..n1 - 1).map(move |i| (i, j)))
            .filter(|&(i, j)| {
                [(i, j), (i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
                    .iter()
                    .all(|&(x, y)| label(x, y) == Some(r.id))
            })
            .collect();
        assert!(!interior.is_empty());
        for _ in 0..10 {
            let (i, j) = interior[rng.gen_range(0..interior.len())];
            let (a, c) = map.center(i, j);
            let values: Bindings =
                [("a".into(), a), ("b".into(), -2.0), ("c".into(), c)].into_iter().collect();
            let v = matignon_check(&basset().substitute(&values).unwrap()).unwrap();
            assert_eq!(CellVerdict::from(v.class), r.verdict, "cell ({a}, {c}) in region {}", r.id);
        }
    }
}

#[test]
fn smaller_b_magnitude_grows_the_stable_set() {
    let stack = sweep_parameter(
        &basset(),
        &plane(),
        &Bindings::new(),
        "b",
        &[-5.0, -4.0, -3.0, -2.0, -1.0],
        &Window::square(10.0),
        (64, 64),
    )
    .unwrap();
    let counts: Vec<usize> = stack.layers.iter().map(|l| l.map.count(CellVerdict::Stable)).collect();
    assert!(counts.windows(2).all(|w| w[0] < w[1]), "stable counts {counts:?}");
}

#[test]
fn commensurate_half_order_is_basset() {
    let window = Window::square(10.0);
    let stack = sweep_order(
        &basset(),
        &plane(),
        &fix_b(-2.0),
        &[FracOrder::new(1, 2).unwrap()],
        OrderSweepMode::Commensurate,
        &window,
        (64, 64),
    )
    .unwrap();
    let direct = classify_window(&basset(), &plane(), &fix_b(-2.0), &window, (64, 64)).unwrap();
    assert_eq!(stack.layers[0].map, direct);
}
