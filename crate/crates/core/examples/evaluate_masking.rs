//! Masking sweep on a small SemEval-2014 style file, with taxonomy fallback
//! for gold terms the model never saw.

use latent_aspects::corpus::{
    build_corpus, english_stopwords, read_line_documents, PreprocessConfig, Preprocessor,
};
use latent_aspects::evaluation::{load_semeval, sweep_masking, EvalConfig};
use latent_aspects::lda::{train, TrainConfig};
use latent_aspects::similarity::Taxonomy;

fn main() -> latent_aspects::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");
    let pre = Preprocessor::new(PreprocessConfig {
        stopwords: english_stopwords(),
        ..PreprocessConfig::default()
    });
    let docs = read_line_documents(format!("{data}/reviews.txt").as_ref())?;
    let (corpus, _) = build_corpus(&docs, &pre, "reviews.txt")?;
    let model = train(
        &corpus,
        &TrainConfig {
            seed: 3,
            ..TrainConfig::new(3)
        },
    )?;

    let testset = load_semeval(format!("{data}/semeval2014.xml").as_ref(), &pre)?;
    let taxonomy = Taxonomy::load(format!("{data}/taxonomy.tsv").as_ref(), 1.0)?;
    let reports = sweep_masking(
        &model,
        &testset,
        &[0.0, 0.5, 1.0],
        Some(&taxonomy),
        &EvalConfig::with_seed(3),
    )?;

    println!("fraction   mrr  recall@5  ndcg@5  hit@5  masked");
    for r in &reports {
        println!(
            "{:>8.1} {:>5.3} {:>9.3} {:>7.3} {:>6.3} {:>7}",
            r.fraction,
            r.mrr(),
            r.recall_at_k(),
            r.ndcg_at_k(),
            r.hit_at_k(),
            r.n_masked
        );
    }
    for o in &reports[2].per_review {
        for t in &o.terms {
            println!(
                "{:<4} {:<16} -> {:<10} rank {:?} via {:?}",
                o.review_id,
                t.surface,
                t.target.as_deref().unwrap_or("-"),
                t.rank,
                t.via
            );
        }
    }
    Ok(())
}
