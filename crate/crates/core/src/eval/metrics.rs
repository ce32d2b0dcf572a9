use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Maps arbitrary labels onto `0..k` in ascending label order.
fn dense(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    // Re-number in sorted order so the result does not depend on first
    // occurrence.
    for (rank, v) in ids.values_mut().enumerate() {
        *v = rank;
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

fn contingency(a: &[usize], b: &[usize]) -> Result<(Vec<Vec<usize>>, usize, usize)> {
    if a.len() != b.len() {
        return Err(Error::dims(format!("label vectors of length {} and {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::param("empty label vectors"));
    }
    let (da, ka) = dense(a);
    let (db, kb) = dense(b);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&i, &j) in da.iter().zip(&db) {
        table[i][j] += 1;
    }
    Ok((table, ka, kb))
}

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// method with potentials). Returns the column assigned to each row.
pub fn hungarian_min_cost(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; row/column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Clustering accuracy: fraction of samples whose predicted cluster, after
/// the best one-to-one relabeling onto the true classes, matches the truth.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let (table, kp, kt) = contingency(y_pred, y_true)?;
    let size = kt.max(kp);
    // Rows: predicted clusters, columns: true classes, padded to square.
    let cost: Vec<Vec<f64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| {
                    if i < kp && j < kt {
                        -(table[i][j] as f64)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let matched: usize = hungarian_min_cost(&cost)
        .into_iter()
        .enumerate()
        .filter(|&(i, j)| i < kp && j < kt)
        .map(|(i, j)| table[i][j])
        .sum();
    Ok(matched as f64 / y_true.len() as f64)
}

/// Normalized mutual information `I(P;Q) / sqrt(H(P)·H(Q))`. When either
/// labeling has a single class the value is 1 for identical partitions and
/// 0 otherwise.
pub fn nmi(p: &[usize], q: &[usize]) -> Result<f64> {
    let (table, kp, kq) = contingency(p, q)?;
    let n = p.len() as f64;

    let same_partition = kp == kq
        && table.iter().all(|row| row.iter().filter(|&&c| c > 0).count() == 1)
        && (0..kq).all(|j| table.iter().filter(|row| row[j] > 0).count() == 1);
    if same_partition {
        return Ok(1.0);
    }

    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let col_sums: Vec<f64> = (0..kq)
        .map(|j| table.iter().map(|r| r[j]).sum::<usize>() as f64)
        .collect();
    let entropy = |sums: &[f64]| -> f64 {
        sums.iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| {
                let pr = s / n;
                -pr * pr.ln()
            })
            .sum()
    };
    let (hp, hq) = (entropy(&row_sums), entropy(&col_sums));
    if hp == 0.0 || hq == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            if count > 0 {
                let joint = count as f64 / n;
                mi += joint * (joint * n * n / (row_sums[i] * col_sums[j])).ln();
            }
        }
    }
    Ok((mi / (hp * hq).sqrt()).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 1, 1], &[1, 1, 1, 0]).unwrap(), 0.75);
        assert_eq!(accuracy(&[0, 1, 2, 2], &[7, 3, 5, 5]).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_with_unequal_alphabets() {
        // Three predicted clusters, two classes: one cluster goes unmatched.
        assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 1, 2, 2]).unwrap(), 0.75);
        // One predicted cluster for two classes.
        assert_eq!(accuracy(&[0, 0, 0, 1], &[4, 4, 4, 4]).unwrap(), 0.75);
    }

    #[test]
    fn length_mismatch() {
        assert!(accuracy(&[0, 1], &[0]).is_err());
        assert!(nmi(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn nmi_examples() {
        assert_eq!(nmi(&[0, 0, 1, 1, 2], &[0, 0, 1, 1, 2]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.0);
        assert_eq!(nmi(&[3, 3, 3], &[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(nmi(&[3, 3, 3], &[1, 2, 1]).unwrap(), 0.0);
        assert_eq!(nmi(&[1, 2, 1], &[3, 3, 3]).unwrap(), 0.0);
    }

    #[test]
    fn nmi_hand_value() {
        // P = (0,0,1,1), Q = (0,0,0,1): I = ln2 − (3/4)·ln(4/3)... computed
        // directly from the joint counts {(0,0):2, (1,0):1, (1,1):1}.
        let ln = f64::ln;
        let mi = 0.5 * ln(0.5 / (0.5 * 0.75)) + 0.25 * ln(0.25 / (0.5 * 0.75)) + 0.25 * ln(0.25 / (0.5 * 0.25));
        let hp = ln(2.0);
        let hq = -(0.75 * ln(0.75) + 0.25 * ln(0.25));
        let expect = mi / (hp * hq).sqrt();
        assert!((nmi(&[0, 0, 1, 1], &[0, 0, 0, 1]).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn hungarian_small() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = hungarian_min_cost(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }
}
