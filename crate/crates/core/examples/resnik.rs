//! Information content and Resnik similarity on a small food/service taxonomy.

use latent_aspects::corpus::Vocabulary;
use latent_aspects::similarity::Taxonomy;

const TAXONOMY: &str = "\
C\troot\t0
C\tfood\t2
C\tsushi\t3
C\tdish\t5
C\tservice\t10
E\tfood\troot
E\tsushi\tfood
E\tdish\tfood
E\tservice\troot
W\tsushi\tsushi
W\tdish\tdish
W\tfood\tfood
W\tservice\tservice
";

fn main() -> latent_aspects::Result<()> {
    let taxonomy = Taxonomy::parse_tsv(TAXONOMY, 0.0)?;
    for c in ["root", "food", "sushi", "dish", "service"] {
        println!("IC({c}) = {:.4}", taxonomy.information_content(c)?);
    }
    let score = taxonomy.resnik("sushi", "dish");
    let lcs = score.lcs.map(|c| taxonomy.concept_name(c));
    println!("resnik(sushi, dish) = {:.4} via {lcs:?}", score.value);
    println!(
        "resnik(sushi, service) = {:.4}",
        taxonomy.resnik("sushi", "service").value
    );

    let vocab = Vocabulary::from_words(vec!["dish".into(), "service".into(), "music".into()])?;
    println!(
        "nearest in vocabulary to sushi: {:?}",
        taxonomy.nearest_in_vocab("sushi", &vocab).map(|(w, _)| w)
    );
    Ok(())
}
