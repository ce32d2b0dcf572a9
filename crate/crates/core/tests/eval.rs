mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use ufs_core::eval::{accuracy, evaluate, hungarian_min_cost, kmeans, nmi, MetricSummary};

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Best agreement over every injective relabeling of predicted ids onto
/// true ids, with both label sets padded to a common size.
pub fn brute_force_accuracy(truth: &[usize], pred: &[usize]) -> f64 {
    let k = truth.iter().chain(pred).max().map_or(0, |m| m + 1);
    let best = permutations(k)
        .iter()
        .map(|perm| truth.iter().zip(pred).filter(|(t, p)| perm[**p] == **t).count())
        .max()
        .unwrap();
    best as f64 / truth.len() as f64
}

fn entropy(counts: &[f64], n: f64) -> f64 {
    counts.iter().filter(|&&c| c > 0.0).map(|&c| -(c / n) * (c / n).ln()).sum()
}

fn oracle_nmi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut joint = vec![vec![0.0; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        joint[x][y] += 1.0;
    }
    let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let pb: Vec<f64> = (0..kb).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let c = joint[i][j];
            if c > 0.0 {
                mi += c / n * (n * c / (pa[i] * pb[j])).ln();
            }
        }
    }
    mi / (entropy(&pa, n) * entropy(&pb, n)).sqrt()
}

fn labels(max_k: usize, len: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..max_k, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn accuracy_equals_brute_force(
        (truth, pred) in (1usize..40).prop_flat_map(|n| (labels(5, n), labels(5, n)))
    ) {
        prop_assert_eq!(accuracy(&truth, &pred).unwrap(), brute_force_accuracy(&truth, &pred));
    }

    #[test]
    fn nmi_is_bounded_symmetric_and_matches_oracle(
        (a, b) in (2usize..40).prop_flat_map(|n| (labels(4, n), labels(4, n)))
    ) {
        let ab = nmi(&a, &b).unwrap();
        let ba = nmi(&b, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-12);
        let distinct = |v: &[usize]| v.iter().collect::<std::collections::BTreeSet<_>>().len();
        if distinct(&a) > 1 && distinct(&b) > 1 {
            prop_assert!((ab - oracle_nmi(&a, &b)).abs() < 1e-12);
        }
    }

    #[test]
    fn nmi_is_one_under_relabeling(a in labels(5, 30), shift in 1usize..5) {
        let b: Vec<usize> = a.iter().map(|&x| (x + shift) % 5 + 7).collect();
        prop_assert_eq!(nmi(&a, &b).unwrap(), 1.0);
        prop_assert_eq!(accuracy(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn hungarian_matches_exhaustive_search(
        cost in (1usize..6).prop_flat_map(|k| prop::collection::vec(prop::collection::vec(-10i32..10, k), k))
    ) {
        let cost: Vec<Vec<f64>> = cost.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
        let k = cost.len();
        let total = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>();
        let found = hungarian_min_cost(&cost);
        let best = permutations(k).iter().map(|p| total(p)).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(total(&found), best);
    }
}

#[test]
fn nmi_of_independent_labelings_is_zero() {
    let a = [0, 0, 1, 1, 0, 0, 1, 1];
    let b = [0, 1, 0, 1, 0, 1, 0, 1];
    assert!(nmi(&a, &b).unwrap().abs() < 1e-15);
}

#[test]
fn accuracy_hand_example() {
    // Predicted {0→1, 1→0} relabels five of six correctly.
    assert!((accuracy(&[0, 0, 0, 1, 1, 1], &[1, 1, 0, 0, 0, 0]).unwrap() - 5.0 / 6.0).abs() < 1e-15);
}

fn blobs(seed: u64) -> (DMatrix<f64>, Vec<usize>) {
    let mut r = common::rng(seed);
    let centers = [(-10.0, 0.0), (10.0, 0.0), (0.0, 12.0)];
    let labels: Vec<usize> = (0..45).map(|i| i % 3).collect();
    let noise = common::uniform(&mut r, 2, 45, -1.0, 1.0);
    let x = DMatrix::from_fn(2, 45, |f, j| {
        let (cx, cy) = centers[labels[j]];
        noise[(f, j)] + if f == 0 { cx } else { cy }
    });
    (x, labels)
}

#[test]
fn kmeans_separates_distant_blobs() {
    let (x, labels) = blobs(1);
    let best = kmeans(&x, 3, 4, 10).unwrap();
    assert_eq!(accuracy(&labels, &best.assignment).unwrap(), 1.0);
    assert_eq!(best.centers.shape(), (3, 2));
    for w in best.inertia_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-9);
    }
    assert_eq!(kmeans(&x, 3, 4, 10).unwrap(), best);
}

#[test]
fn kmeans_restarts_never_worsen_inertia() {
    let (x, _) = blobs(2);
    let one = kmeans(&x, 5, 3, 1).unwrap();
    let many = kmeans(&x, 5, 3, 8).unwrap();
    assert!(many.inertia <= one.inertia);
}

#[test]
fn evaluation_is_seeded_and_uses_population_std() {
    let (x, labels) = blobs(3);
    let a = evaluate(&x, &labels, 3, 12, 5).unwrap();
    assert_eq!(a, evaluate(&x, &labels, 3, 12, 5).unwrap());
    assert_eq!(a.runs, 12);
    let s = MetricSummary::from_runs(&[1.0, 0.0], &[0.5, 0.5]);
    assert_eq!((s.acc_mean, s.acc_std, s.nmi_std), (0.5, 0.5, 0.0));
}
