//! Sampler against exact enumeration on tiny corpora, compared through
//! label-invariant statistics.

use latent_aspects::corpus::{Corpus, Review};
use latent_aspects::lda::TrainingState;
use latent_aspects::rng::rng_from_seed;
use latent_aspects::synthetic::exact_posterior;

fn corpus(docs: &[&[usize]], v: usize) -> Corpus {
    let reviews = docs
        .iter()
        .enumerate()
        .map(|(i, d)| Review::new(i.to_string(), d.to_vec()))
        .collect();
    Corpus::from_encoded((0..v).map(|i| format!("w{i}")).collect(), reviews, "oracle").unwrap()
}

/// Largest error of P(z_i = z_j) over token pairs.
fn co_assignment_error(
    corpus: &Corpus,
    k: usize,
    alpha: f64,
    beta: f64,
    sweeps: usize,
    seed: u64,
) -> f64 {
    let exact = exact_posterior(corpus, k, alpha, beta)
        .unwrap()
        .co_assignment();
    let docs: Vec<Vec<usize>> = corpus.reviews.iter().map(|r| r.tokens.clone()).collect();
    let mut rng = rng_from_seed(seed);
    let mut state =
        TrainingState::new(docs, k, corpus.vocabulary.len(), alpha, beta, &mut rng).unwrap();
    for _ in 0..1000 {
        state.sweep(&mut rng);
    }
    let n = corpus.total_tokens();
    let mut together = vec![vec![0u64; n]; n];
    for _ in 0..sweeps {
        state.sweep(&mut rng);
        let z: Vec<usize> = state.assignments().iter().flatten().copied().collect();
        for i in 0..n {
            for j in 0..n {
                together[i][j] += u64::from(z[i] == z[j]);
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((together[i][j] as f64 / sweeps as f64 - exact[i][j]).abs());
        }
    }
    worst
}

#[test]
fn co_assignment_matches_enumeration_with_sparse_prior() {
    let c = corpus(&[&[0, 1, 1], &[2, 2, 0], &[1, 2, 0, 0]], 3);
    let e = co_assignment_error(&c, 2, 2.5, 0.01, 400_000, 1);
    assert!(e < 0.02, "{e}");
}

#[test]
fn co_assignment_matches_enumeration_with_three_topics() {
    let c = corpus(&[&[0, 1], &[1, 2, 3], &[3, 0]], 4);
    assert!(co_assignment_error(&c, 3, 0.5, 0.5, 100_000, 2) < 0.02);
}

#[test]
fn marginals_match_when_labels_mix_quickly() {
    // With a flat word prior the chain switches labels often, so even the
    // label-dependent marginals converge.
    let c = corpus(&[&[0, 1, 1], &[2, 0]], 3);
    let (k, alpha, beta) = (2, 2.5, 1.0);
    let exact = exact_posterior(&c, k, alpha, beta).unwrap().marginals();
    let docs: Vec<Vec<usize>> = c.reviews.iter().map(|r| r.tokens.clone()).collect();
    let mut rng = rng_from_seed(9);
    let mut state = TrainingState::new(docs, k, 3, alpha, beta, &mut rng).unwrap();
    let sweeps = 100_000;
    let mut counts = [[0u64; 2]; 5];
    for _ in 0..sweeps {
        state.sweep(&mut rng);
        for (i, &z) in state.assignments().iter().flatten().enumerate() {
            counts[i][z] += 1;
        }
    }
    for i in 0..5 {
        let l1: f64 = (0..k)
            .map(|t| (counts[i][t] as f64 / sweeps as f64 - exact[i][t]).abs())
            .sum();
        assert!(l1 < 0.02, "token {i}: L1 {l1}");
    }
}
