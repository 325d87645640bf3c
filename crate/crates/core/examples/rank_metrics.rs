//! MRR, recall, nDCG and hit at 5 over per-review match ranks.

use latent_aspects::evaluation::{metrics, ReviewRanks};

fn main() -> latent_aspects::Result<()> {
    let reviews = [
        ReviewRanks::new(1, vec![1]),
        ReviewRanks::new(1, vec![2]),
        ReviewRanks::new(2, vec![1, 4]),
        ReviewRanks::new(2, vec![]),
        ReviewRanks::new(1, vec![9]),
    ];
    for r in &reviews {
        println!(
            "{r:?}: rr={:.3} ndcg@5={:.3}",
            r.reciprocal_rank(),
            r.ndcg_at(5)
        );
    }
    let m = metrics(&reviews, 5)?;
    println!(
        "MRR={:.4} recall@5={:.4} nDCG@5={:.4} hit@5={:.4}",
        m.mrr, m.recall_at_k, m.ndcg_at_k, m.hit_at_k
    );
    Ok(())
}
