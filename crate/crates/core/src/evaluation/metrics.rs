use itertools::Itertools;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Assignment;

/// Label counts up to which agreement enumerates permutations directly.
pub const EXHAUSTIVE_MAX_K: usize = 4;

fn confusion(est: &Assignment, truth: &Assignment, size: usize) -> Vec<i64> {
    let mut c = vec![0i64; size * size];
    for (&a, &b) in est.labels().iter().zip(truth.labels()) {
        c[a * size + b] += 1;
    }
    c
}

/// Fraction of vertices whose labels coincide under the best relabelling
/// of `est`.
pub fn agreement(est: &Assignment, truth: &Assignment) -> Result<f64> {
    if est.n() != truth.n() {
        return Err(Error::Dimension(format!(
            "assignments cover {} and {} vertices",
            est.n(),
            truth.n()
        )));
    }
    if est.n() == 0 {
        return Ok(1.0);
    }
    let size = est.k().max(truth.k());
    let c = confusion(est, truth, size);
    let best = if size <= EXHAUSTIVE_MAX_K {
        best_by_enumeration(&c, size)
    } else {
        best_by_matching(&c, size)
    };
    Ok(best as f64 / est.n() as f64)
}

fn best_by_enumeration(c: &[i64], size: usize) -> i64 {
    (0..size)
        .permutations(size)
        .map(|p| p.iter().enumerate().map(|(a, &b)| c[a * size + b]).sum::<i64>())
        .max()
        .unwrap_or(0)
}

fn best_by_matching(c: &[i64], size: usize) -> i64 {
    let m = Matrix::from_vec(size, size, c.to_vec()).expect("square confusion matrix");
    kuhn_munkres(&m).0
}

/// One method's objective on one instance against the best known value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub instance_id: String,
    pub method: String,
    pub objective: f64,
    pub bks: f64,
    pub gap_pct: f64,
}

/// `100 (obj - bks) / bks`.
pub fn gap_pct(objective: f64, bks: f64) -> Result<f64> {
    if bks == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(100.0 * (objective - bks) / bks)
}

/// Best known objective: the minimum over every supplied value.
pub fn best_known(objectives: impl IntoIterator<Item = f64>) -> Option<f64> {
    objectives.into_iter().fold(None, |acc, x| match acc {
        Some(b) if b <= x => Some(b),
        _ => Some(x),
    })
}

/// Exact-run summary used by [`compute_gaps`].
#[derive(Debug, Clone, Copy)]
pub struct ExactOutcome {
    pub objective: f64,
    pub bound: f64,
}

/// Gap records for one instance. The exact method reports its own
/// `(UB - LB) / UB`; every other method is measured against the BKS over
/// all supplied objectives, so heuristic gaps may be negative only when the
/// exact incumbent is worse than a heuristic.
pub fn compute_gaps(
    instance_id: &str,
    exact: Option<ExactOutcome>,
    heuristics: &[(String, f64)],
) -> Result<Vec<GapRecord>> {
    let bks = best_known(
        exact
            .iter()
            .map(|e| e.objective)
            .chain(heuristics.iter().map(|h| h.1)),
    )
    .ok_or_else(|| Error::MissingResult(instance_id.to_string()))?;
    let mut out = Vec::with_capacity(heuristics.len() + 1);
    if let Some(e) = exact {
        out.push(GapRecord {
            instance_id: instance_id.to_string(),
            method: "exact".into(),
            objective: e.objective,
            bks,
            gap_pct: gap_pct(e.bound, e.objective).map(|g| -g)?,
        });
    }
    for (method, obj) in heuristics {
        out.push(GapRecord {
            instance_id: instance_id.to_string(),
            method: method.clone(),
            objective: *obj,
            bks,
            gap_pct: gap_pct(*obj, bks)?,
        });
    }
    Ok(out)
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            r[t] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties. `None` when the
/// lengths differ, fewer than two points are given, or either side is
/// constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(l: &[usize], k: usize) -> Assignment {
        Assignment::new(l.to_vec(), k).unwrap()
    }

    #[test]
    fn agreement_examples() {
        let t = a(&[0, 0, 1, 1], 2);
        assert_eq!(agreement(&t, &t).unwrap(), 1.0);
        assert_eq!(agreement(&a(&[1, 1, 0, 0], 2), &t).unwrap(), 1.0);
        assert_eq!(agreement(&a(&[0, 0, 1, 1], 2), &a(&[0, 1, 1, 1], 2)).unwrap(), 0.75);
        assert!(agreement(&a(&[0, 0], 2), &t).is_err());
    }

    #[test]
    fn matching_agrees_with_enumeration() {
        let est = a(&[0, 1, 2, 3, 4, 4, 3, 2, 1, 0, 0, 1], 5);
        let truth = a(&[4, 3, 2, 1, 0, 0, 1, 2, 3, 4, 0, 0], 5);
        let c = confusion(&est, &truth, 5);
        assert_eq!(best_by_matching(&c, 5), best_by_enumeration(&c, 5));
        assert_eq!(agreement(&est, &truth).unwrap(), 10.0 / 12.0);
    }

    #[test]
    fn gap_arithmetic() {
        assert_eq!(gap_pct(10.0, 10.0).unwrap(), 0.0);
        assert!((gap_pct(10.5, 10.0).unwrap() - 5.0).abs() < 1e-12);
        assert!(matches!(gap_pct(1.0, 0.0), Err(Error::ZeroReference)));
    }

    #[test]
    fn compute_gaps_uses_minimum() {
        let recs = compute_gaps(
            "x",
            Some(ExactOutcome { objective: 10.0, bound: 10.0 }),
            &[("em-ls1".into(), 10.5), ("em-ls2".into(), 10.0)],
        )
        .unwrap();
        assert_eq!(recs[0].gap_pct, 0.0);
        assert!((recs[1].gap_pct - 5.0).abs() < 1e-12);
        assert_eq!(recs[2].gap_pct, 0.0);
        assert!(recs.iter().all(|r| r.bks == 10.0));
        assert!(compute_gaps("y", None, &[]).is_err());
    }

    #[test]
    fn exact_gap_is_relative_to_incumbent() {
        let r = compute_gaps("x", Some(ExactOutcome { objective: 10.0, bound: 9.0 }), &[]).unwrap();
        assert!((r[0].gap_pct - 10.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }
}
