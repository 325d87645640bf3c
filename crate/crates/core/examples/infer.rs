//! Fold unseen reviews into a trained model and print the aspect ranking.

use latent_aspects::corpus::{
    build_corpus, english_stopwords, read_line_documents, PreprocessConfig, Preprocessor, Review,
};
use latent_aspects::lda::{fold_in, rank_aspects, train, FoldInConfig, TrainConfig};

fn main() -> latent_aspects::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/reviews.txt");
    let pre = Preprocessor::new(PreprocessConfig {
        stopwords: english_stopwords(),
        ..PreprocessConfig::default()
    });
    let (corpus, _) = build_corpus(&read_line_documents(path.as_ref())?, &pre, "reviews.txt")?;
    let model = train(
        &corpus,
        &TrainConfig {
            seed: 7,
            ..TrainConfig::new(3)
        },
    )?;
    let top = model.top_words(4);

    for (i, text) in [
        "the tuna sashimi was so fresh",
        "a rude waiter and slow service",
        "quantum chromodynamics",
    ]
    .into_iter()
    .enumerate()
    {
        let (ids, oov) = model.vocabulary().encode(&pre.process(text));
        let dist = fold_in(
            &model,
            &Review::new(i.to_string(), ids),
            &FoldInConfig::default().for_review(i),
        );
        println!(
            "{text:?} ({oov} unknown tokens{})",
            if dist.all_oov { ", uniform" } else { "" }
        );
        for (aspect, theta) in rank_aspects(&dist) {
            let words: Vec<&str> = top[aspect]
                .iter()
                .map(|&(w, _)| model.vocabulary().word(w))
                .collect();
            println!("  aspect {aspect} theta={theta:.3} [{}]", words.join(", "));
        }
    }
    Ok(())
}
