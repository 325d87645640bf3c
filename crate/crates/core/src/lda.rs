//! Latent aspect model trained by collapsed Gibbs sampling.
//!
//! Each token carries a topic (aspect) assignment. With the topic mixtures and
//! topic-word distributions integrated out, the full conditional of one
//! assignment given all others is
//!
//! ```text
//! p(z = k | rest) ∝ (n_dk + α) · (n_kw + β) / (n_k + V·β)
//! ```
//!
//! where every count excludes the token being resampled. Unseen reviews are
//! folded in by running the same update with the trained topic-word counts
//! frozen.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::corpus::{Corpus, Review, Vocabulary};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, AspectRng};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_ALPHA_MASS: f64 = 5.0;

/// Symmetric document-topic prior used when none is given: `5.0 / K`.
pub fn default_alpha(k: usize) -> f64 {
    DEFAULT_ALPHA_MASS / k as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub k: usize,
    /// `None` means `5.0 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    /// Post-burn-in sweeps between accumulated samples. Zero keeps only the
    /// final state.
    pub sample_lag: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            alpha: None,
            beta: DEFAULT_BETA,
            iterations: 1000,
            burn_in: 200,
            sample_lag: 10,
            seed: 0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or_else(|| default_alpha(self.k))
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!(
                "K must be at least 2, got {}",
                self.k
            )));
        }
        let alpha = self.alpha();
        if !(alpha > 0.0 && alpha.is_finite()) || !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "priors must be positive, got alpha={alpha} beta={}",
                self.beta
            )));
        }
        if self.iterations <= self.burn_in {
            return Err(Error::InvalidParameter(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            )));
        }
        Ok(())
    }
}

/// Sampler state: per-token assignments and the count tables they induce.
#[derive(Debug, Clone)]
pub struct TrainingState {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    /// D×K, row-major by document.
    n_dk: Vec<u32>,
    /// V×K, row-major by word so the inner loop over topics is contiguous.
    n_wk: Vec<u32>,
    n_k: Vec<u32>,
}

impl TrainingState {
    /// Uniformly random initial assignments.
    pub fn new<R: Rng>(
        docs: Vec<Vec<usize>>,
        k: usize,
        v: usize,
        alpha: f64,
        beta: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let z = docs
            .iter()
            .map(|doc| doc.iter().map(|_| rng.random_range(0..k)).collect())
            .collect();
        Self::from_assignments(docs, z, k, v, alpha, beta)
    }

    pub fn from_assignments(
        docs: Vec<Vec<usize>>,
        z: Vec<Vec<usize>>,
        k: usize,
        v: usize,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("K must be positive".into()));
        }
        if docs.len() != z.len() {
            return Err(Error::InvalidData(
                "assignment table does not match documents".into(),
            ));
        }
        let mut state = Self {
            k,
            v,
            alpha,
            beta,
            n_dk: vec![0; docs.len() * k],
            n_wk: vec![0; v * k],
            n_k: vec![0; k],
            docs,
            z,
        };
        for d in 0..state.docs.len() {
            if state.docs[d].len() != state.z[d].len() {
                return Err(Error::InvalidData(format!(
                    "document {d}: assignment length mismatch"
                )));
            }
            for i in 0..state.docs[d].len() {
                let (w, t) = (state.docs[d][i], state.z[d][i]);
                if w >= v || t >= k {
                    return Err(Error::InvalidData(format!(
                        "document {d} token {i}: word {w} or topic {t} out of range"
                    )));
                }
                state.n_dk[d * k + t] += 1;
                state.n_wk[w * k + t] += 1;
                state.n_k[t] += 1;
            }
        }
        Ok(state)
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn docs(&self) -> &[Vec<usize>] {
        &self.docs
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.z
    }

    pub fn doc_topic_count(&self, d: usize, t: usize) -> u32 {
        self.n_dk[d * self.k + t]
    }

    pub fn topic_word_count(&self, t: usize, w: usize) -> u32 {
        self.n_wk[w * self.k + t]
    }

    pub fn topic_count(&self, t: usize) -> u32 {
        self.n_k[t]
    }

    /// Normalized full conditional of token `i` of document `d`, with that
    /// token's own contribution removed from every count.
    pub fn conditional(&self, d: usize, i: usize) -> Result<Vec<f64>> {
        let k = self.k;
        let w = self.docs[d][i];
        let current = self.z[d][i];
        let vbeta = self.v as f64 * self.beta;
        let mut p = Vec::with_capacity(k);
        for t in 0..k {
            let own = u32::from(t == current);
            let (ndk, nkw, nk) = (
                self.n_dk[d * k + t].checked_sub(own),
                self.n_wk[w * k + t].checked_sub(own),
                self.n_k[t].checked_sub(own),
            );
            let (Some(ndk), Some(nkw), Some(nk)) = (ndk, nkw, nk) else {
                return Err(Error::Invariant(format!(
                    "counts for document {d} token {i} do not include the token itself"
                )));
            };
            p.push((ndk as f64 + self.alpha) * (nkw as f64 + self.beta) / (nk as f64 + vbeta));
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        Ok(p)
    }

    /// One systematic pass resampling every token in document order.
    pub fn sweep<R: Rng>(&mut self, rng: &mut R) {
        let k = self.k;
        let vbeta = self.v as f64 * self.beta;
        let mut cumulative = vec![0.0f64; k];
        for d in 0..self.docs.len() {
            let doc_row = d * k;
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let word_row = w * k;
                let old = self.z[d][i];
                self.n_dk[doc_row + old] -= 1;
                self.n_wk[word_row + old] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for (t, c) in cumulative.iter_mut().enumerate() {
                    total += (self.n_dk[doc_row + t] as f64 + self.alpha)
                        * (self.n_wk[word_row + t] as f64 + self.beta)
                        / (self.n_k[t] as f64 + vbeta);
                    *c = total;
                }
                let u = rng.random::<f64>() * total;
                let new = cumulative.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.z[d][i] = new;
                self.n_dk[doc_row + new] += 1;
                self.n_wk[word_row + new] += 1;
                self.n_k[new] += 1;
            }
        }
    }

    /// Recount everything from the assignments and compare with the stored
    /// tables.
    pub fn check_consistency(&self) -> Result<()> {
        let fresh = Self::from_assignments(
            self.docs.clone(),
            self.z.clone(),
            self.k,
            self.v,
            self.alpha,
            self.beta,
        )?;
        if fresh.n_dk != self.n_dk || fresh.n_wk != self.n_wk || fresh.n_k != self.n_k {
            return Err(Error::Invariant(
                "count tables diverged from assignments".into(),
            ));
        }
        Ok(())
    }

    pub fn log_joint(&self) -> f64 {
        log_joint(&self.docs, &self.z, self.k, self.v, self.alpha, self.beta)
    }
}

/// Normalized collapsed conditional for token `i` of document `d`.
pub fn gibbs_conditional(state: &TrainingState, d: usize, i: usize) -> Result<Vec<f64>> {
    state.conditional(d, i)
}

/// Collapsed joint `ln P(w, z)` under symmetric Dirichlet priors, including
/// the normalizing constants.
pub fn log_joint(
    docs: &[Vec<usize>],
    z: &[Vec<usize>],
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
) -> f64 {
    let mut n_dk = vec![0usize; k];
    let mut n_kw = vec![0usize; k * v];
    let mut n_k = vec![0usize; k];
    let mut lp = 0.0;
    let doc_norm = ln_gamma(k as f64 * alpha) - k as f64 * ln_gamma(alpha);
    for (doc, zs) in docs.iter().zip(z) {
        n_dk.iter_mut().for_each(|c| *c = 0);
        for (&w, &t) in doc.iter().zip(zs) {
            n_dk[t] += 1;
            n_kw[t * v + w] += 1;
            n_k[t] += 1;
        }
        lp += doc_norm;
        lp += n_dk
            .iter()
            .map(|&c| ln_gamma(c as f64 + alpha))
            .sum::<f64>();
        lp -= ln_gamma(doc.len() as f64 + k as f64 * alpha);
    }
    let topic_norm = ln_gamma(v as f64 * beta) - v as f64 * ln_gamma(beta);
    for t in 0..k {
        lp += topic_norm;
        lp += n_kw[t * v..(t + 1) * v]
            .iter()
            .map(|&c| ln_gamma(c as f64 + beta))
            .sum::<f64>();
        lp -= ln_gamma(n_k[t] as f64 + v as f64 * beta);
    }
    lp
}

/// Trained aspect model: (possibly sample-averaged) topic-word counts plus the
/// priors and vocabulary they were estimated with.
#[derive(Debug, Clone, PartialEq)]
pub struct AspectModel {
    k: usize,
    alpha: f64,
    beta: f64,
    /// K×V, row-major by topic.
    n_kw: Vec<f64>,
    n_k: Vec<f64>,
    vocabulary: Vocabulary,
    iterations: usize,
    seed: u64,
}

impl AspectModel {
    /// Build a model from explicit topic-word counts, one row per topic.
    pub fn from_counts(
        alpha: f64,
        beta: f64,
        counts: Vec<Vec<f64>>,
        vocabulary: Vocabulary,
    ) -> Result<Self> {
        let k = counts.len();
        let v = vocabulary.len();
        if k < 1 || v < 1 {
            return Err(Error::InvalidParameter(
                "model needs at least one topic and one word".into(),
            ));
        }
        if counts.iter().any(|row| row.len() != v) {
            return Err(Error::InvalidData(
                "count rows must match vocabulary size".into(),
            ));
        }
        if counts
            .iter()
            .flatten()
            .any(|&c| !(c >= 0.0 && c.is_finite()))
        {
            return Err(Error::InvalidData(
                "counts must be finite and nonnegative".into(),
            ));
        }
        let n_k = counts.iter().map(|row| row.iter().sum()).collect();
        Ok(Self {
            k,
            alpha,
            beta,
            n_kw: counts.into_iter().flatten().collect(),
            n_k,
            vocabulary,
            iterations: 0,
            seed: 0,
        })
    }

    pub fn num_aspects(&self) -> usize {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn topic_word_count(&self, k: usize, w: usize) -> f64 {
        self.n_kw[k * self.vocab_size() + w]
    }

    pub fn topic_counts(&self) -> &[f64] {
        &self.n_k
    }

    pub fn total_count(&self) -> f64 {
        self.n_k.iter().sum()
    }

    /// Smoothed topic-word distribution `(n_kw + β) / (n_k + V·β)` for one topic.
    pub fn phi_row(&self, k: usize) -> Vec<f64> {
        let v = self.vocab_size();
        let denom = self.n_k[k] + v as f64 * self.beta;
        self.n_kw[k * v..(k + 1) * v]
            .iter()
            .map(|&c| (c + self.beta) / denom)
            .collect()
    }

    /// Word ids of each topic sorted by probability, highest first; ties go to
    /// the smaller word id.
    pub fn ranked_words(&self, k: usize) -> Vec<(usize, f64)> {
        let mut row: Vec<(usize, f64)> = self.phi_row(k).into_iter().enumerate().collect();
        row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        row
    }

    pub fn top_words(&self, n: usize) -> Vec<Vec<(usize, f64)>> {
        (0..self.k)
            .map(|k| {
                let mut r = self.ranked_words(k);
                r.truncate(n);
                r
            })
            .collect()
    }

    /// Relabel topics so that new topic `j` is old topic `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.k];
        if perm.len() != self.k
            || perm
                .iter()
                .any(|&p| p >= self.k || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidParameter(
                "not a permutation of the topics".into(),
            ));
        }
        let v = self.vocab_size();
        let mut out = self.clone();
        for (j, &p) in perm.iter().enumerate() {
            out.n_kw[j * v..(j + 1) * v].copy_from_slice(&self.n_kw[p * v..(p + 1) * v]);
            out.n_k[j] = self.n_k[p];
        }
        Ok(out)
    }

    pub fn check_consistency(&self) -> Result<()> {
        let v = self.vocab_size();
        for k in 0..self.k {
            let row: f64 = self.n_kw[k * v..(k + 1) * v].iter().sum();
            if (row - self.n_k[k]).abs() > 1e-6 * self.n_k[k].max(1.0) {
                return Err(Error::Invariant(format!(
                    "topic {k}: total {} differs from row sum {row}",
                    self.n_k[k]
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let v = self.vocab_size();
        let n_kw = self
            .n_kw
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, &c)| (i / v, i % v, c))
            .collect();
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            seed: self.seed,
            iterations: self.iterations,
            vocabulary: self.vocabulary.words().to_vec(),
            n_k: self.n_k.clone(),
            n_kw,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidData(format!(
                "unsupported model format version {}",
                file.version
            )));
        }
        let v = file.vocabulary.len();
        if file.k < 1 || file.n_k.len() != file.k {
            return Err(Error::InvalidData(
                "model topic totals do not match K".into(),
            ));
        }
        let mut n_kw = vec![0.0; file.k * v];
        let mut previous: Option<(usize, usize)> = None;
        for &(k, w, c) in &file.n_kw {
            if k >= file.k || w >= v {
                return Err(Error::InvalidData(format!(
                    "count triplet ({k}, {w}) out of range"
                )));
            }
            if previous.is_some_and(|p| p >= (k, w)) {
                return Err(Error::InvalidData(
                    "count triplets must be sorted by (k, w)".into(),
                ));
            }
            previous = Some((k, w));
            n_kw[k * v + w] = c;
        }
        let model = Self {
            k: file.k,
            alpha: file.alpha,
            beta: file.beta,
            n_kw,
            n_k: file.n_k,
            vocabulary: Vocabulary::from_words(file.vocabulary)?,
            iterations: file.iterations,
            seed: file.seed,
        };
        model
            .check_consistency()
            .map_err(|e| Error::InvalidData(e.to_string()))?;
        Ok(model)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// CSV with columns `aspect_id,rank,word,probability`; ranks are 1-based.
    pub fn write_top_words_csv<W: Write>(&self, n: usize, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["aspect_id", "rank", "word", "probability"])?;
        for (k, words) in self.top_words(n).iter().enumerate() {
            for (rank, &(w, p)) in words.iter().enumerate() {
                writer.write_record([
                    k.to_string(),
                    (rank + 1).to_string(),
                    self.vocabulary.word(w).to_string(),
                    p.to_string(),
                ])?;
            }
        }
        writer.flush().map_err(|e| Error::io("<top words>", e))?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    #[serde(rename = "K")]
    k: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    iterations: usize,
    vocabulary: Vec<String>,
    n_k: Vec<f64>,
    n_kw: Vec<(usize, usize, f64)>,
}

/// Smoothed K×V topic-word matrix.
pub fn phi(model: &AspectModel) -> Vec<Vec<f64>> {
    (0..model.num_aspects()).map(|k| model.phi_row(k)).collect()
}

/// Run the sampler and return the final state alongside the model.
pub fn train_with_state(
    corpus: &Corpus,
    config: &TrainConfig,
) -> Result<(AspectModel, TrainingState)> {
    config.validate()?;
    if corpus.is_empty() || corpus.total_tokens() == 0 {
        return Err(Error::EmptyCorpus(
            "cannot train on a corpus without tokens".into(),
        ));
    }
    let k = config.k;
    let v = corpus.vocabulary.len();
    if k > corpus.total_tokens() {
        log::warn!(
            "K={k} exceeds the {} training tokens",
            corpus.total_tokens()
        );
    }
    let alpha = config.alpha();
    let mut rng: AspectRng = rng_from_seed(config.seed);
    let docs = corpus.reviews.iter().map(|r| r.tokens.clone()).collect();
    let mut state = TrainingState::new(docs, k, v, alpha, config.beta, &mut rng)?;

    let mut sum_kw = vec![0u64; k * v];
    let mut samples = 0u64;
    for it in 1..=config.iterations {
        state.sweep(&mut rng);
        if cfg!(debug_assertions) || it % 100 == 0 || it == config.iterations {
            state.check_consistency()?;
        }
        if config.sample_lag > 0
            && it > config.burn_in
            && (it - config.burn_in).is_multiple_of(config.sample_lag)
        {
            for t in 0..k {
                for w in 0..v {
                    sum_kw[t * v + w] += u64::from(state.topic_word_count(t, w));
                }
            }
            samples += 1;
        }
    }

    let counts: Vec<Vec<f64>> = (0..k)
        .map(|t| {
            (0..v)
                .map(|w| {
                    if samples > 0 {
                        sum_kw[t * v + w] as f64 / samples as f64
                    } else {
                        f64::from(state.topic_word_count(t, w))
                    }
                })
                .collect()
        })
        .collect();
    let mut model =
        AspectModel::from_counts(alpha, config.beta, counts, corpus.vocabulary.clone())?;
    model.iterations = config.iterations;
    model.seed = config.seed;
    model.check_consistency()?;
    Ok((model, state))
}

pub fn train(corpus: &Corpus, config: &TrainConfig) -> Result<AspectModel> {
    train_with_state(corpus, config).map(|(model, _)| model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldInConfig {
    pub iterations: usize,
    /// Sweeps discarded before the document-topic counts are averaged.
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for FoldInConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            burn_in: 100,
            seed: 0,
        }
    }
}

impl FoldInConfig {
    /// Same schedule, seed derived for one review of a batch.
    pub fn for_review(&self, index: usize) -> Self {
        Self {
            seed: derive_seed(self.seed, index as u64),
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AspectDistribution {
    pub probabilities: Vec<f64>,
    /// No token of the review was in the model vocabulary; the
    /// distribution is uniform.
    pub all_oov: bool,
}

/// Estimate the aspect mixture of an unseen review with the model's
/// topic-word counts held fixed. Token ids must index the model vocabulary.
pub fn fold_in(model: &AspectModel, review: &Review, config: &FoldInConfig) -> AspectDistribution {
    let k = model.num_aspects();
    let v = model.vocab_size();
    let tokens: Vec<usize> = review.tokens.iter().copied().filter(|&w| w < v).collect();
    if tokens.is_empty() {
        return AspectDistribution {
            probabilities: vec![1.0 / k as f64; k],
            all_oov: true,
        };
    }
    let alpha = model.alpha();
    let vbeta = v as f64 * model.beta();
    // Fixed per-token emission weights (n_kw + β) / (n_k + Vβ).
    let emissions: Vec<Vec<f64>> = tokens
        .iter()
        .map(|&w| {
            (0..k)
                .map(|t| {
                    (model.topic_word_count(t, w) + model.beta())
                        / (model.topic_counts()[t] + vbeta)
                })
                .collect()
        })
        .collect();

    let mut rng = rng_from_seed(config.seed);
    let mut z: Vec<usize> = tokens.iter().map(|_| rng.random_range(0..k)).collect();
    let mut n_dk = vec![0u32; k];
    for &t in &z {
        n_dk[t] += 1;
    }
    let iterations = config.iterations.max(1);
    let burn_in = config.burn_in.min(iterations - 1);
    let mut sum_dk = vec![0u64; k];
    let mut cumulative = vec![0.0; k];
    for it in 0..iterations {
        for (i, emission) in emissions.iter().enumerate() {
            n_dk[z[i]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                total += (n_dk[t] as f64 + alpha) * emission[t];
                cumulative[t] = total;
            }
            let u = rng.random::<f64>() * total;
            let new = cumulative.iter().position(|&c| u < c).unwrap_or(k - 1);
            z[i] = new;
            n_dk[new] += 1;
        }
        if it >= burn_in {
            for t in 0..k {
                sum_dk[t] += u64::from(n_dk[t]);
            }
        }
    }
    let samples = (iterations - burn_in) as f64;
    let n_d = tokens.len() as f64;
    let probabilities = sum_dk
        .iter()
        .map(|&c| (c as f64 / samples + alpha) / (n_d + k as f64 * alpha))
        .collect();
    AspectDistribution {
        probabilities,
        all_oov: false,
    }
}

/// Aspects sorted by probability, highest first; exact ties go to the
/// smaller aspect id.
pub fn rank_aspects(distribution: &AspectDistribution) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = distribution
        .probabilities
        .iter()
        .copied()
        .enumerate()
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}

pub fn predict_aspect(
    model: &AspectModel,
    review: &Review,
    config: &FoldInConfig,
) -> Vec<(usize, f64)> {
    rank_aspects(&fold_in(model, review, config))
}
