//! Turn raw review lines into an encoded corpus.
//!
//! cargo run --example preprocess [reviews.txt]

use std::path::PathBuf;

use latent_aspects::corpus::{
    build_corpus, english_stopwords, read_line_documents, PreprocessConfig, Preprocessor,
};

fn main() -> latent_aspects::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/tests/data/reviews.txt"
            ))
        });
    let docs = read_line_documents(&path)?;
    let pre = Preprocessor::new(PreprocessConfig {
        stopwords: english_stopwords(),
        ..PreprocessConfig::default()
    });

    println!("{:?}", pre.process(&docs[0].text));
    let (corpus, report) = build_corpus(&docs, &pre, "reviews.txt")?;
    println!(
        "{} reviews, {} tokens kept, {} filtered, {} pruned",
        report.n_documents, report.tokens_kept, report.tokens_filtered, report.tokens_pruned
    );
    println!(
        "vocabulary ({}): {}",
        corpus.vocabulary.len(),
        corpus.vocabulary.words().join(" ")
    );
    Ok(())
}
