//! Train an aspect model on the bundled reviews and print each aspect's top words.

use latent_aspects::corpus::{
    build_corpus, english_stopwords, read_line_documents, PreprocessConfig, Preprocessor,
};
use latent_aspects::lda::{train, TrainConfig};

fn main() -> latent_aspects::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/reviews.txt");
    let pre = Preprocessor::new(PreprocessConfig {
        stopwords: english_stopwords(),
        ..PreprocessConfig::default()
    });
    let (corpus, _) = build_corpus(&read_line_documents(path.as_ref())?, &pre, "reviews.txt")?;

    let config = TrainConfig {
        seed: 7,
        ..TrainConfig::new(3)
    };
    let model = train(&corpus, &config)?;
    for (k, words) in model.top_words(6).iter().enumerate() {
        let list: Vec<String> = words
            .iter()
            .map(|&(w, p)| format!("{}:{p:.3}", model.vocabulary().word(w)))
            .collect();
        println!("aspect {k}: {}", list.join(" "));
    }
    Ok(())
}
