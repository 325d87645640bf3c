//! Coherence sweep over K on a synthetic corpus with four planted aspects.

use latent_aspects::coherence::sweep_k;
use latent_aspects::lda::TrainConfig;
use latent_aspects::synthetic::{generate, GenerativeMode, SyntheticConfig, TopicSupport};

fn main() -> latent_aspects::Result<()> {
    let (corpus, _) = generate(&SyntheticConfig {
        k: 4,
        v: 40,
        n_docs: 300,
        doc_len: 30,
        alpha: 0.3,
        beta: 1.0,
        mode: GenerativeMode::PerWord,
        support: TopicSupport::Disjoint,
        seed: 1,
    })?;
    let base = TrainConfig {
        iterations: 300,
        burn_in: 100,
        ..TrainConfig::new(2)
    };
    for row in sweep_k(&corpus, &[2, 3, 4, 6, 8], &base, 10)? {
        match row.outcome {
            Ok(r) => println!(
                "K={:<2} mean={:.3} min={:.3} max={:.3}",
                row.k,
                r.mean,
                r.min(),
                r.max()
            ),
            Err(e) => println!("K={:<2} failed: {e}", row.k),
        }
    }
    Ok(())
}
