//! The construction pipeline against definitions evaluated by brute force.

use std::collections::BTreeSet;

use erdos_box::construct::{
    build_edge_set, expand_lines, find_box, find_boxes, lines_of_boxes, run_instance, run_trials,
    trial_rng, BoxWitness, Edge, EdgeSet,
};
use erdos_box::gf::Vector;
use erdos_box::{Budget, Field, Mode, MultilinearForm, Params};
use num_bigint::BigInt;
use num_rational::BigRational;

fn params(q: u32, s: usize, d: usize, r: usize) -> Params {
    let (p, k) = match q {
        4 => (2, 2),
        9 => (3, 2),
        _ => (q, 1),
    };
    Params::new(d, r, s, Field::new(p, k, None).unwrap()).unwrap()
}

fn tuples(items: &[Vector], d: usize) -> Vec<Vec<Vector>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|t| {
                items.iter().map(move |v| {
                    let mut t = t.clone();
                    t.push(v.clone());
                    t
                })
            })
            .collect();
    }
    out
}

fn all_one(forms: &[MultilinearForm], args: &[Vector]) -> bool {
    let refs: Vec<&Vector> = args.iter().collect();
    forms
        .iter()
        .all(|t| t.evaluate(&refs).unwrap().index() == 1)
}

fn brute_edges(p: &Params, forms: &[MultilinearForm]) -> EdgeSet {
    let nonzero: Vec<Vector> = p.space().nonzero_vectors().collect();
    tuples(&nonzero, p.d())
        .into_iter()
        .filter(|t| all_one(forms, t))
        .map(Edge::new)
        .collect()
}

/// Ordered boxes straight from the definition: pairs of distinct vectors,
/// all corners evaluate to 1. Collinear pairs are not excluded up front.
fn brute_boxes(p: &Params, forms: &[MultilinearForm]) -> BTreeSet<BoxWitness> {
    let vs: Vec<Vector> = p.space().vectors().collect();
    let pairs: Vec<(Vector, Vector)> = vs
        .iter()
        .flat_map(|a| {
            vs.iter()
                .filter(move |b| *b != a)
                .map(move |b| (a.clone(), b.clone()))
        })
        .collect();
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; p.d()];
    loop {
        let w = BoxWitness::new(idx.iter().map(|&i| pairs[i].clone()).collect());
        if (0..1u32 << p.d()).all(|m| all_one(forms, w.corner(m).slots())) {
            out.insert(w);
        }
        let mut j = 0;
        loop {
            if j == p.d() {
                return out;
            }
            idx[j] += 1;
            if idx[j] < pairs.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

#[test]
fn edges_and_boxes_match_definitions() {
    for (q, s, d, r) in [
        (2, 2, 2, 1),
        (3, 2, 2, 1),
        (2, 2, 3, 1),
        (2, 3, 2, 1),
        (4, 2, 2, 1),
    ] {
        let p = params(q, s, d, r);
        for t in 0..6 {
            let forms = p.sample_forms(&mut trial_rng(31, t));
            let edges = build_edge_set(&p, &forms, &Budget::default()).unwrap();
            assert_eq!(edges, brute_edges(&p, &forms), "({q},{s},{d},{r}) #{t}");
            let boxes = find_boxes(&p, &forms, &Budget::default()).unwrap();
            assert_eq!(boxes, brute_boxes(&p, &forms), "({q},{s},{d},{r}) #{t}");
        }
    }
}

#[test]
fn exact_means_by_brute_force() {
    for (q, s, d, r) in [
        (2, 1, 2, 1),
        (2, 2, 2, 1),
        (3, 1, 2, 1),
        (2, 1, 3, 2),
        (3, 2, 2, 1),
    ] {
        let p = params(q, s, d, r);
        let size: u64 = (q as u64).pow((r * s.pow(d as u32)) as u32);
        let mut edges = BigInt::from(0);
        let mut boxes = BigInt::from(0);
        for i in 0..size {
            let forms = p.forms_from_index(i);
            edges += brute_edges(&p, &forms).len();
            if s > 1 && q <= 2 {
                boxes += brute_boxes(&p, &forms).len();
            }
        }
        let stats = run_trials(&p, 0, 0, Mode::Exact, &Budget::default()).unwrap();
        assert_eq!(stats.count() as u64, size);
        let want = BigRational::new(edges, BigInt::from(size));
        assert_eq!(stats.exact_mean(|c| c.edges), want, "({q},{s},{d},{r})");
        if s > 1 && q <= 2 {
            assert_eq!(
                stats.exact_mean(|c| c.boxes),
                BigRational::new(boxes, BigInt::from(size))
            );
        }
    }
}

#[test]
fn named_exact_values() {
    let mean = |q, s, d, r, pick: fn(&erdos_box::construct::Counts) -> u64| {
        run_trials(&params(q, s, d, r), 0, 0, Mode::Exact, &Budget::default())
            .unwrap()
            .exact_mean(pick)
    };
    let rat = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    assert_eq!(mean(2, 1, 2, 1, |c| c.edges), rat(1, 2));
    assert_eq!(mean(2, 2, 2, 1, |c| c.edges), rat(9, 2));
    assert_eq!(mean(3, 1, 2, 1, |c| c.edges), rat(4, 3));
    assert_eq!(mean(2, 2, 2, 1, |c| c.boxes), rat(9, 4));
    assert_eq!(mean(3, 1, 2, 1, |c| c.boxes), rat(0, 1));
}

#[test]
fn line_products_partition_the_family() {
    for (q, s, d, r) in [(3, 2, 2, 1), (2, 2, 3, 1), (4, 2, 2, 1), (2, 3, 2, 1)] {
        let p = params(q, s, d, r);
        let block = ((q as u64) * (q as u64 - 1)).pow(d as u32);
        for t in 0..15 {
            let forms = p.sample_forms(&mut trial_rng(3, t));
            let boxes = find_boxes(&p, &forms, &Budget::default()).unwrap();
            let lines = lines_of_boxes(p.field(), &boxes).unwrap();
            assert_eq!(expand_lines(&lines), boxes);
            // disjointness: the blocks add up to |F| with nothing shared
            let mut seen = BTreeSet::new();
            let mut sum = 0u64;
            for lt in &lines {
                let members = lt.members();
                assert_eq!(members.len() as u64, block);
                assert_eq!(lt.product_size(), block as u128);
                for m in members {
                    assert!(boxes.contains(&m));
                    assert!(seen.insert(m), "a box lies on two line tuples");
                    sum += 1;
                }
            }
            assert_eq!(sum, boxes.len() as u64);
        }
    }
}

#[test]
fn bad_set_within_bounds() {
    let p = params(3, 2, 2, 1);
    let q = 3u64;
    for t in 0..40 {
        let forms = p.sample_forms(&mut trial_rng(17, t));
        let inst = run_instance(&p, &forms, &Budget::default()).unwrap();
        assert!(inst.bad.is_subset(&inst.edges));
        assert!(inst.bad.len() as u64 <= q.pow(2) * inst.lines.len() as u64);
        assert_eq!(inst.pruned.len() + inst.bad.len(), inst.edges.len());
        assert!(inst.box_free());
    }
}

#[test]
fn detector_finds_planted_boxes() {
    let f = Field::new(5, 1, None).unwrap();
    for d in 2..=4usize {
        let parts: Vec<Vec<Vector>> = (0..d)
            .map(|j| {
                (0..2)
                    .map(|i| Vector::from_indices(&f, &[1 + i, j as u32]).unwrap())
                    .collect()
            })
            .collect();
        let complete = EdgeSet::complete(&parts);
        assert_eq!(complete.len(), 1 << d);
        let w = find_box(&complete).expect("complete K(2,..,2) is a box");
        assert!(w.is_box_in(&complete));
        // one missing corner kills the only box
        let first = complete.iter().next().unwrap().clone();
        let broken: EdgeSet = complete.iter().filter(|&e| *e != first).cloned().collect();
        assert!(find_box(&broken).is_none());
    }
}

#[test]
fn pre_deletion_witness_is_in_the_family() {
    let p = params(3, 2, 2, 1);
    let mut hits = 0;
    for t in 0..30 {
        let forms = p.sample_forms(&mut trial_rng(23, t));
        let inst = run_instance(&p, &forms, &Budget::default()).unwrap();
        match find_box(&inst.edges) {
            Some(w) => {
                assert!(inst.boxes.contains(&w));
                hits += 1;
            }
            None => assert!(inst.boxes.is_empty()),
        }
    }
    assert!(hits > 0);
}

#[test]
fn budgets_refuse_large_spaces() {
    let p = params(3, 4, 4, 1);
    let forms = p.sample_forms(&mut trial_rng(0, 0));
    assert!(build_edge_set(&p, &forms, &Budget::default()).is_err());
    assert!(run_trials(
        &params(2, 2, 2, 2),
        0,
        0,
        Mode::Exact,
        &Budget {
            tuples: 1 << 20,
            tensor_space: 16
        }
    )
    .is_err());
    assert!(run_trials(&params(2, 2, 2, 1), 0, 0, Mode::Sampled, &Budget::default()).is_err());
}
