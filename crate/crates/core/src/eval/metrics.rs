//! Rank metrics for known-item search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::ScoredResult;

/// Relative tolerance under which two scores count as tied. Scores are sums
/// of the same terms added in different orders, so exact float equality
/// would split genuine ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRank {
    pub rank: f64,
    /// False when the target was not retrieved; `rank` is then corpus size + 1.
    pub found: bool,
}

/// Rank of `target_id` in `ranked`. A target tied with others over ranks
/// a..=b gets (a + b) / 2, whatever order the tie-break put them in.
pub fn target_rank(ranked: &[ScoredResult], target_id: &str, corpus_size: usize) -> TargetRank {
    let Some(t) = ranked.iter().find(|r| r.object_id == target_id) else {
        return TargetRank {
            rank: corpus_size as f64 + 1.0,
            found: false,
        };
    };
    let s = t.total_score;
    let above = ranked.iter().filter(|r| r.total_score > s && !tied(r.total_score, s)).count();
    let block = ranked.iter().filter(|r| tied(r.total_score, s)).count();
    let a = above + 1;
    let b = above + block;
    TargetRank {
        rank: (a + b) as f64 / 2.0,
        found: true,
    }
}

pub fn reciprocal_rank(rank: f64) -> f64 {
    1.0 / rank
}

pub fn mrr(ranks: &[f64]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::Eval("mean reciprocal rank of an empty list".into()));
    }
    if let Some(r) = ranks.iter().find(|r| !(**r >= 1.0)) {
        return Err(Error::Eval(format!("rank {r} is below 1")));
    }
    Ok(ranks.iter().map(|&r| reciprocal_rank(r)).sum::<f64>() / ranks.len() as f64)
}

/// NDCG@k with one relevant object: the ideal DCG is 1.
pub fn ndcg_at_k(rank: f64, k: usize) -> f64 {
    if rank > k as f64 {
        0.0
    } else {
        1.0 / (1.0 + rank).log2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn res(id: &str, s: f64) -> ScoredResult {
        ScoredResult {
            object_id: id.into(),
            total_score: s,
            breakdown: BTreeMap::new(),
        }
    }

    #[test]
    fn closed_forms() {
        assert_eq!(mrr(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(ndcg_at_k(1.0, 10), 1.0);
        assert!((mrr(&[3.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(ndcg_at_k(3.0, 10), 0.5);
        assert_eq!(ndcg_at_k(15.0, 10), 0.0);
        assert_eq!(ndcg_at_k(15.0, 20), 0.25);
        assert!(mrr(&[]).is_err());
    }

    #[test]
    fn tie_block_median() {
        let ranked = vec![res("a", 9.0), res("b", 5.0), res("c", 5.0), res("d", 5.0), res("e", 5.0), res("f", 1.0)];
        assert_eq!(target_rank(&ranked, "a", 6).rank, 1.0);
        assert_eq!(target_rank(&ranked, "d", 6).rank, 3.5);
        let missing = target_rank(&ranked, "z", 6);
        assert!(!missing.found);
        assert_eq!(missing.rank, 7.0);
    }
}
