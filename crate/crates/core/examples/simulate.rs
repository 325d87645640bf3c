//! Generate a corpus with planted aspects, train on it and compare the
//! recovered word distributions with the planted ones.

use latent_aspects::lda::{phi, train, TrainConfig};
use latent_aspects::synthetic::{generate, GenerativeMode, SyntheticConfig, TopicSupport};

fn main() -> latent_aspects::Result<()> {
    let (corpus, truth) = generate(&SyntheticConfig {
        k: 3,
        v: 24,
        n_docs: 200,
        doc_len: 30,
        alpha: 5.0 / 3.0,
        beta: 1.0,
        mode: GenerativeMode::PerWord,
        support: TopicSupport::Disjoint,
        seed: 11,
    })?;
    let model = train(
        &corpus,
        &TrainConfig {
            iterations: 400,
            burn_in: 100,
            seed: 2,
            ..TrainConfig::new(3)
        },
    )?;
    let learned = phi(&model);

    for (p, planted) in truth.phi_true.iter().enumerate() {
        // Map the learned row onto planted word indices before comparing.
        let tv = |row: &Vec<f64>| {
            let mut full = vec![0.0; truth.v];
            for (local, &w) in truth.corpus_word_ids.iter().enumerate() {
                full[w] = row[local];
            }
            0.5 * full
                .iter()
                .zip(planted)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        };
        let (best, dist) = learned
            .iter()
            .enumerate()
            .map(|(k, row)| (k, tv(row)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        println!("planted aspect {p} ~ learned aspect {best}, total variation {dist:.3}");
    }
    Ok(())
}
