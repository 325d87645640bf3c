//! Corpus simulator with planted ground truth, and an exact posterior over
//! topic assignments for tiny corpora.
//!
//! Two generative modes are supported. In `PerReview` mode each review draws a
//! single aspect from its mixture and every word comes from that aspect. In
//! `PerWord` mode (standard LDA, the model the sampler fits) every token draws
//! its own aspect.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Review};
use crate::error::{Error, Result};
use crate::lda::log_joint;
use crate::rng::{derive_seed, rng_from_seed};

pub const MAX_EXACT_ASSIGNMENTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GenerativeMode {
    /// One aspect per review, shared by all its words.
    PerReview,
    /// One aspect per word.
    PerWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TopicSupport {
    /// Every topic may emit every word.
    Full,
    /// Topic `k` emits only words of the `k`-th contiguous block of the
    /// vocabulary.
    Disjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub k: usize,
    pub v: usize,
    pub n_docs: usize,
    pub doc_len: usize,
    pub alpha: f64,
    pub beta: f64,
    pub mode: GenerativeMode,
    pub support: TopicSupport,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub mode: GenerativeMode,
    pub seed: u64,
    pub phi_true: Vec<Vec<f64>>,
    pub theta_true: Vec<Vec<f64>>,
    /// Planted aspect of every token, indexed like the corpus reviews.
    pub assignments: Vec<Vec<usize>>,
    /// Planted word index of each corpus vocabulary entry; words never drawn
    /// are absent from the corpus vocabulary.
    pub corpus_word_ids: Vec<usize>,
}

impl GroundTruth {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

pub fn synthetic_word(i: usize) -> String {
    format!("w{i}")
}

/// Draw from a symmetric Dirichlet by normalizing independent Gamma
/// variates. Small shapes are handled in log space so that no component
/// underflows to an all-zero vector.
pub fn sample_dirichlet<R: Rng + ?Sized>(
    dim: usize,
    concentration: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "Dirichlet dimension must be at least 2, got {dim}"
        )));
    }
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Dirichlet concentration must be positive, got {concentration}"
        )));
    }
    // Gamma(a) = Gamma(a + 1) · U^(1/a) for a < 1.
    let (shape, boost) = if concentration < 1.0 {
        (concentration + 1.0, true)
    } else {
        (concentration, false)
    };
    let gamma = Gamma::new(shape, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let logs: Vec<f64> = (0..dim)
        .map(|_| {
            let mut lg = gamma.sample(rng).ln();
            if boost {
                let u: f64 = rng.random();
                lg += u.ln() / concentration;
            }
            lg
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

fn categorical(p: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(p).map_err(|e| Error::Invariant(format!("bad categorical weights: {e}")))
}

fn draw_phi<R: Rng>(config: &SyntheticConfig, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let (k, v) = (config.k, config.v);
    match config.support {
        TopicSupport::Full => (0..k)
            .map(|_| sample_dirichlet(v, config.beta, rng))
            .collect(),
        TopicSupport::Disjoint => {
            if v < 2 * k {
                return Err(Error::InvalidParameter(format!(
                    "disjoint supports need at least two words per topic (V={v}, K={k})"
                )));
            }
            (0..k)
                .map(|t| {
                    let (lo, hi) = (t * v / k, (t + 1) * v / k);
                    let block = sample_dirichlet(hi - lo, config.beta, rng)?;
                    let mut row = vec![0.0; v];
                    row[lo..hi].copy_from_slice(&block);
                    Ok(row)
                })
                .collect()
        }
    }
}

/// Generate a corpus of `n_docs` reviews with `doc_len` tokens each.
pub fn generate(config: &SyntheticConfig) -> Result<(Corpus, GroundTruth)> {
    if config.k < 2 || config.v < 2 || config.n_docs == 0 || config.doc_len == 0 {
        return Err(Error::InvalidParameter(
            "simulation needs K ≥ 2, V ≥ 2 and positive document count and length".into(),
        ));
    }
    let mut rng = rng_from_seed(config.seed);
    let phi_true = draw_phi(config, &mut rng)?;
    let word_dists = phi_true
        .iter()
        .map(|row| categorical(row))
        .collect::<Result<Vec<_>>>()?;

    let docs: Vec<(Vec<f64>, Vec<usize>, Vec<usize>)> = (0..config.n_docs)
        .into_par_iter()
        .map(|d| {
            let mut rng = rng_from_seed(derive_seed(config.seed, d as u64));
            let theta = sample_dirichlet(config.k, config.alpha, &mut rng)?;
            let topic_dist = categorical(&theta)?;
            let mut words = Vec::with_capacity(config.doc_len);
            let mut z = Vec::with_capacity(config.doc_len);
            let review_topic = topic_dist.sample(&mut rng);
            for _ in 0..config.doc_len {
                let t = match config.mode {
                    GenerativeMode::PerReview => review_topic,
                    GenerativeMode::PerWord => topic_dist.sample(&mut rng),
                };
                z.push(t);
                words.push(word_dists[t].sample(&mut rng));
            }
            Ok((theta, words, z))
        })
        .collect::<Result<_>>()?;

    let mut seen = vec![false; config.v];
    for (_, words, _) in &docs {
        for &w in words {
            seen[w] = true;
        }
    }
    let corpus_word_ids: Vec<usize> = (0..config.v).filter(|&w| seen[w]).collect();
    let mut remap = vec![usize::MAX; config.v];
    for (i, &w) in corpus_word_ids.iter().enumerate() {
        remap[w] = i;
    }

    let mut reviews = Vec::with_capacity(docs.len());
    let mut theta_true = Vec::with_capacity(docs.len());
    let mut assignments = Vec::with_capacity(docs.len());
    for (d, (theta, words, z)) in docs.into_iter().enumerate() {
        let tokens = words.iter().map(|&w| remap[w]).collect();
        let mut review = Review::new(format!("doc{d}"), tokens);
        review.raw = words
            .iter()
            .map(|&w| synthetic_word(w))
            .collect::<Vec<_>>()
            .join(" ");
        reviews.push(review);
        theta_true.push(theta);
        assignments.push(z);
    }
    let words = corpus_word_ids.iter().map(|&w| synthetic_word(w)).collect();
    let corpus = Corpus::from_encoded(words, reviews, format!("synthetic:{}", config.seed))?;
    let truth = GroundTruth {
        k: config.k,
        v: config.v,
        mode: config.mode,
        seed: config.seed,
        phi_true,
        theta_true,
        assignments,
        corpus_word_ids,
    };
    Ok((corpus, truth))
}

/// Exact `P(z | w)` over every assignment vector of a small corpus.
#[derive(Debug, Clone)]
pub struct ExactPosterior {
    k: usize,
    doc_lengths: Vec<usize>,
    /// Flattened assignments (documents concatenated), one per configuration.
    pub assignments: Vec<Vec<usize>>,
    pub probabilities: Vec<f64>,
}

impl ExactPosterior {
    /// `P(z_i = k)` for every token in flattened order.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let n: usize = self.doc_lengths.iter().sum();
        let mut out = vec![vec![0.0; self.k]; n];
        for (z, &p) in self.assignments.iter().zip(&self.probabilities) {
            for (i, &t) in z.iter().enumerate() {
                out[i][t] += p;
            }
        }
        out
    }

    /// `P(z_i = z_j)` for every token pair in flattened order.
    pub fn co_assignment(&self) -> Vec<Vec<f64>> {
        let n: usize = self.doc_lengths.iter().sum();
        let mut out = vec![vec![0.0; n]; n];
        for (z, &p) in self.assignments.iter().zip(&self.probabilities) {
            for i in 0..n {
                for j in 0..n {
                    if z[i] == z[j] {
                        out[i][j] += p;
                    }
                }
            }
        }
        out
    }

    pub fn probability_of(&self, z: &[usize]) -> Option<f64> {
        self.assignments
            .iter()
            .position(|a| a == z)
            .map(|i| self.probabilities[i])
    }
}

pub fn exact_posterior_docs(
    docs: &[Vec<usize>],
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
) -> Result<ExactPosterior> {
    if k < 1 {
        return Err(Error::InvalidParameter("K must be positive".into()));
    }
    let n: usize = docs.iter().map(Vec::len).sum();
    let count = u32::try_from(n)
        .ok()
        .and_then(|n| k.checked_pow(n))
        .filter(|&c| c <= MAX_EXACT_ASSIGNMENTS)
        .ok_or_else(|| {
            Error::TooLarge(format!(
                "{k}^{n} assignments exceed {MAX_EXACT_ASSIGNMENTS}"
            ))
        })?;
    let lengths: Vec<usize> = docs.iter().map(Vec::len).collect();

    let mut assignments = Vec::with_capacity(count);
    let mut logs = Vec::with_capacity(count);
    let mut flat = vec![0usize; n];
    for code in 0..count {
        let mut c = code;
        for slot in flat.iter_mut() {
            *slot = c % k;
            c /= k;
        }
        let mut z = Vec::with_capacity(docs.len());
        let mut offset = 0;
        for &len in &lengths {
            z.push(flat[offset..offset + len].to_vec());
            offset += len;
        }
        logs.push(log_joint(docs, &z, k, v, alpha, beta));
        assignments.push(flat.clone());
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(ExactPosterior {
        k,
        doc_lengths: lengths,
        assignments,
        probabilities: weights.into_iter().map(|w| w / total).collect(),
    })
}

pub fn exact_posterior(corpus: &Corpus, k: usize, alpha: f64, beta: f64) -> Result<ExactPosterior> {
    let docs: Vec<Vec<usize>> = corpus.reviews.iter().map(|r| r.tokens.clone()).collect();
    exact_posterior_docs(&docs, k, corpus.vocabulary.len(), alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn config(mode: GenerativeMode) -> SyntheticConfig {
        SyntheticConfig {
            k: 2,
            v: 10,
            n_docs: 30,
            doc_len: 8,
            alpha: 0.5,
            beta: 1.0,
            mode,
            support: TopicSupport::Disjoint,
            seed: 11,
        }
    }

    #[test]
    fn dirichlet_rejects_bad_parameters() {
        let mut rng = rng_from_seed(0);
        assert!(sample_dirichlet(3, 0.0, &mut rng).is_err());
        assert!(sample_dirichlet(3, -1.0, &mut rng).is_err());
        assert!(sample_dirichlet(1, 1.0, &mut rng).is_err());
    }

    #[test]
    fn huge_concentration_is_nearly_uniform() {
        for seed in 0..100 {
            let p = sample_dirichlet(5, 1e6, &mut rng_from_seed(seed)).unwrap();
            let dev = p.iter().map(|x| (x - 0.2).abs()).fold(0.0, f64::max);
            assert!(dev < 0.01, "seed {seed}: deviation {dev}");
        }
    }

    #[test]
    fn empirical_mean_is_uniform() {
        let mut rng = rng_from_seed(1234);
        let mut mean = vec![0.0; 4];
        for _ in 0..10_000 {
            for (m, x) in mean
                .iter_mut()
                .zip(sample_dirichlet(4, 0.3, &mut rng).unwrap())
            {
                *m += x / 10_000.0;
            }
        }
        for m in mean {
            assert_abs_diff_eq!(m, 0.25, epsilon = 0.01);
        }
    }

    #[test]
    fn tiny_concentration_still_normalizes() {
        let mut rng = rng_from_seed(5);
        for _ in 0..200 {
            let p = sample_dirichlet(40, 0.001, &mut rng).unwrap();
            assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
            assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn per_review_mode_shares_one_aspect() {
        let (corpus, truth) = generate(&config(GenerativeMode::PerReview)).unwrap();
        for (review, z) in corpus.reviews.iter().zip(&truth.assignments) {
            assert!(z.iter().all(|&t| t == z[0]));
            let planted: Vec<usize> = review
                .tokens
                .iter()
                .map(|&w| truth.corpus_word_ids[w])
                .collect();
            let half = planted[0] / 5;
            assert!(planted.iter().all(|&w| w / 5 == half));
        }
    }

    #[test]
    fn ground_truth_rows_are_distributions() {
        let (corpus, truth) = generate(&config(GenerativeMode::PerWord)).unwrap();
        assert_eq!(corpus.len(), 30);
        assert_eq!(truth.theta_true.len(), 30);
        for row in truth.phi_true.iter().chain(&truth.theta_true) {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        }
        let json = truth.to_json().unwrap();
        assert!(json.contains("\"mode\":\"per_word\""));
    }

    #[test]
    fn generation_depends_only_on_seed() {
        let c = config(GenerativeMode::PerWord);
        let (a, ta) = generate(&c).unwrap();
        let (b, tb) = generate(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (other, _) = generate(&SyntheticConfig { seed: 12, ..c }).unwrap();
        assert_ne!(a.reviews, other.reviews);
    }

    #[test]
    fn single_token_posterior_is_even() {
        let post = exact_posterior_docs(&[vec![0]], 2, 1, 2.5, 0.01).unwrap();
        assert_eq!(post.probabilities.len(), 2);
        for p in &post.probabilities {
            assert_abs_diff_eq!(*p, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn oversized_instances_are_refused() {
        let docs = vec![vec![0; 21]];
        assert!(matches!(
            exact_posterior_docs(&docs, 2, 1, 1.0, 1.0),
            Err(Error::TooLarge(_))
        ));
        assert!(exact_posterior_docs(&[vec![0; 19]], 2, 1, 1.0, 1.0).is_ok());
    }

    proptest! {
        #[test]
        fn posterior_normalized_and_label_symmetric(
            docs in prop::collection::vec(prop::collection::vec(0usize..3, 1..3), 1..4),
            alpha in 0.1f64..3.0,
            beta in 0.01f64..1.0,
        ) {
            let post = exact_posterior_docs(&docs, 2, 3, alpha, beta).unwrap();
            prop_assert!((post.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (z, &p) in post.assignments.iter().zip(&post.probabilities) {
                let flipped: Vec<usize> = z.iter().map(|&t| 1 - t).collect();
                let q = post.probability_of(&flipped).unwrap();
                prop_assert!((p - q).abs() < 1e-12);
            }
        }
    }
}
