//! Rank metrics over per-review gold-term match ranks.

use serde::Serialize;

use crate::error::{Error, Result};

/// Ranks (1-based) at which the gold terms of one review were found. Gold
/// terms that matched no aspect are absent from `matched`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewRanks {
    pub gold_count: usize,
    pub matched: Vec<usize>,
}

impl ReviewRanks {
    pub fn new(gold_count: usize, matched: Vec<usize>) -> Self {
        Self {
            gold_count,
            matched,
        }
    }

    pub fn best_rank(&self) -> Option<usize> {
        self.matched.iter().copied().min()
    }

    pub fn reciprocal_rank(&self) -> f64 {
        self.best_rank().map_or(0.0, |r| 1.0 / r as f64)
    }

    pub fn hit_at(&self, k: usize) -> f64 {
        if self.best_rank().is_some_and(|r| r <= k) {
            1.0
        } else {
            0.0
        }
    }

    pub fn recall_at(&self, k: usize) -> f64 {
        self.matched.iter().filter(|&&r| r <= k).count() as f64 / self.gold_count as f64
    }

    /// Binary-gain nDCG. Each matched position in the top `k` contributes once
    /// no matter how many gold terms landed there; the ideal list places one
    /// relevant aspect at each of the first `min(gold_count, k)` positions.
    pub fn ndcg_at(&self, k: usize) -> f64 {
        let mut positions: Vec<usize> = self.matched.iter().copied().filter(|&r| r <= k).collect();
        positions.sort_unstable();
        positions.dedup();
        let dcg = positions.iter().fold(0.0, |acc, &r| acc + discount(r));
        let idcg = (1..=self.gold_count.min(k)).fold(0.0, |acc, r| acc + discount(r));
        if idcg == 0.0 {
            0.0
        } else {
            dcg / idcg
        }
    }
}

fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mrr: f64,
    pub recall_at_k: f64,
    pub ndcg_at_k: f64,
    pub hit_at_k: f64,
    pub n_reviews: usize,
    pub k: usize,
}

/// Means of the per-review metrics.
pub fn metrics(reviews: &[ReviewRanks], k: usize) -> Result<MetricSummary> {
    if reviews.is_empty() {
        return Err(Error::InvalidData("no reviews to score".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter(
            "metric cutoff must be at least 1".into(),
        ));
    }
    for r in reviews {
        if r.gold_count == 0 || r.matched.len() > r.gold_count || r.matched.contains(&0) {
            return Err(Error::InvalidData(format!(
                "inconsistent rank record: {} gold terms, matched ranks {:?}",
                r.gold_count, r.matched
            )));
        }
    }
    let n = reviews.len() as f64;
    let mean = |f: &dyn Fn(&ReviewRanks) -> f64| reviews.iter().fold(0.0, |acc, r| acc + f(r)) / n;
    Ok(MetricSummary {
        mrr: mean(&|r| r.reciprocal_rank()),
        recall_at_k: mean(&|r| r.recall_at(k)),
        ndcg_at_k: mean(&|r| r.ndcg_at(k)),
        hit_at_k: mean(&|r| r.hit_at(k)),
        n_reviews: reviews.len(),
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn perfect_single_gold() {
        let m = metrics(&[ReviewRanks::new(1, vec![1])], 5).unwrap();
        assert_eq!(
            (m.mrr, m.recall_at_k, m.ndcg_at_k, m.hit_at_k),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn rank_two_single_gold() {
        let r = ReviewRanks::new(1, vec![2]);
        assert_eq!(r.reciprocal_rank(), 0.5);
        assert_abs_diff_eq!(r.ndcg_at(5), 1.0 / 3f64.log2(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.ndcg_at(5), 0.630_929_753_571_457_4, epsilon = 1e-15);
    }

    #[test]
    fn mean_reciprocal_rank() {
        let m = metrics(
            &[ReviewRanks::new(1, vec![2]), ReviewRanks::new(1, vec![4])],
            5,
        )
        .unwrap();
        assert_eq!(m.mrr, 0.375);
    }

    #[test]
    fn ranks_beyond_cutoff_count_for_mrr_only() {
        let r = ReviewRanks::new(1, vec![7]);
        assert_abs_diff_eq!(r.reciprocal_rank(), 1.0 / 7.0);
        assert_eq!((r.hit_at(5), r.recall_at(5), r.ndcg_at(5)), (0.0, 0.0, 0.0));
        assert!(r.ndcg_at(5).is_sign_positive());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(metrics(&[], 5).is_err());
        assert!(metrics(&[ReviewRanks::new(0, vec![])], 5).is_err());
        assert!(metrics(&[ReviewRanks::new(1, vec![1, 2])], 5).is_err());
        assert!(metrics(&[ReviewRanks::new(1, vec![0])], 5).is_err());
    }

    proptest! {
        #[test]
        fn metric_ranges_and_relations(
            gold in 1usize..5,
            ranks in prop::collection::vec(1usize..12, 0..5),
        ) {
            let matched: Vec<usize> = ranks.into_iter().take(gold).collect();
            let r = ReviewRanks::new(gold, matched);
            for x in [r.reciprocal_rank(), r.recall_at(5), r.ndcg_at(5), r.hit_at(5)] {
                prop_assert!((0.0..=1.0).contains(&x));
            }
            prop_assert!(r.hit_at(5) >= r.ndcg_at(5));
            prop_assert_eq!(r.reciprocal_rank() > 0.0, !r.matched.is_empty());
            prop_assert_eq!(r.hit_at(5) == 1.0, r.best_rank().is_some_and(|b| b <= 5));
        }
    }
}
