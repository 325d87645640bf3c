//! UMass topic coherence and the K sweep used to pick the number of aspects.
//!
//! For a topic with top words `v_1 … v_M` ordered by probability,
//!
//! ```text
//! C = Σ_{m=2..M} Σ_{l<m} ln[(D(v_m, v_l) + 1) / D(v_l)]
//! ```
//!
//! where `D(·)` counts training documents containing a word and `D(·,·)`
//! documents containing both.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::lda::{train, AspectModel, TrainConfig};
use crate::rng::derive_seed;

pub const DEFAULT_TOP_M: usize = 20;

/// Sorted document lists per word, for document and co-document frequencies.
#[derive(Debug, Clone)]
pub struct DocumentIndex {
    postings: Vec<Vec<u32>>,
}

impl DocumentIndex {
    pub fn new(corpus: &Corpus) -> Self {
        let mut postings = vec![Vec::new(); corpus.vocabulary.len()];
        for (d, review) in corpus.reviews.iter().enumerate() {
            for &w in &review.tokens {
                let list: &mut Vec<u32> = &mut postings[w];
                if list.last() != Some(&(d as u32)) {
                    list.push(d as u32);
                }
            }
        }
        Self { postings }
    }

    pub fn doc_freq(&self, w: usize) -> usize {
        self.postings[w].len()
    }

    pub fn co_doc_freq(&self, a: usize, b: usize) -> usize {
        let (x, y) = (&self.postings[a], &self.postings[b]);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < x.len() && j < y.len() {
            match x[i].cmp(&y[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// UMass score of one ordered top-word list.
pub fn umass_score(top_words: &[usize], index: &DocumentIndex) -> Result<f64> {
    let mut score = 0.0;
    for m in 1..top_words.len() {
        for l in 0..m {
            let d_l = index.doc_freq(top_words[l]);
            if d_l == 0 {
                return Err(Error::InvalidData(format!(
                    "word id {} never occurs in the reference corpus",
                    top_words[l]
                )));
            }
            let co = index.co_doc_freq(top_words[m], top_words[l]);
            score += ((co as f64 + 1.0) / d_l as f64).ln();
        }
    }
    Ok(score)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceReport {
    pub per_topic: Vec<f64>,
    pub mean: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub top_m: usize,
}

impl CoherenceReport {
    pub fn min(&self) -> f64 {
        self.per_topic.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.per_topic
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Coherence of every topic of `model`, with document statistics taken from
/// `corpus` (the training corpus, whose vocabulary the model shares).
pub fn umass_coherence(
    model: &AspectModel,
    corpus: &Corpus,
    top_m: usize,
) -> Result<CoherenceReport> {
    if top_m < 2 {
        return Err(Error::InvalidParameter(format!(
            "top_m must be at least 2, got {top_m}"
        )));
    }
    if model.vocabulary().words() != corpus.vocabulary.words() {
        return Err(Error::InvalidData(
            "model and corpus vocabularies differ".into(),
        ));
    }
    let index = DocumentIndex::new(corpus);
    let per_topic = model
        .top_words(top_m)
        .iter()
        .map(|words| {
            let ids: Vec<usize> = words.iter().map(|&(w, _)| w).collect();
            umass_score(&ids, &index)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = per_topic.iter().fold(0.0, |acc, c| acc + c) / per_topic.len() as f64;
    Ok(CoherenceReport {
        per_topic,
        mean,
        k: model.num_aspects(),
        top_m,
    })
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub k: usize,
    pub seed: u64,
    /// Failures are kept as messages so the remaining rows still get written.
    pub outcome: std::result::Result<CoherenceReport, String>,
}

/// Seed used for the model with `k` aspects in a sweep.
pub fn sweep_seed(base_seed: u64, k: usize) -> u64 {
    derive_seed(base_seed, k as u64)
}

/// Train one model per K and score it. Rows come back in input order. The
/// prior `alpha` of `base` applies to every K when set; otherwise each model
/// uses `5.0 / K`.
pub fn sweep_k(
    corpus: &Corpus,
    k_values: &[usize],
    base: &TrainConfig,
    top_m: usize,
) -> Result<Vec<SweepRow>> {
    if k_values.is_empty() {
        return Err(Error::InvalidParameter("no K values to sweep".into()));
    }
    if let Some(&bad) = k_values.iter().find(|&&k| k < 2) {
        return Err(Error::InvalidParameter(format!(
            "K must be at least 2, got {bad}"
        )));
    }
    Ok(k_values
        .par_iter()
        .map(|&k| {
            let config = TrainConfig {
                k,
                seed: sweep_seed(base.seed, k),
                ..base.clone()
            };
            let outcome = train(corpus, &config)
                .and_then(|model| umass_coherence(&model, corpus, top_m))
                .map_err(|e| e.to_string());
            if let Err(e) = &outcome {
                log::error!("K={k}: {e}");
            }
            SweepRow {
                k,
                seed: config.seed,
                outcome,
            }
        })
        .collect())
}

/// CSV with columns `K,mean_coherence,per_topic_min,per_topic_max,status`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record([
        "K",
        "mean_coherence",
        "per_topic_min",
        "per_topic_max",
        "status",
    ])?;
    for row in rows {
        match &row.outcome {
            Ok(report) => writer.write_record([
                row.k.to_string(),
                report.mean.to_string(),
                report.min().to_string(),
                report.max().to_string(),
                "ok".to_string(),
            ])?,
            Err(e) => writer.write_record([
                row.k.to_string(),
                String::new(),
                String::new(),
                String::new(),
                format!("error: {e}"),
            ])?,
        }
    }
    writer
        .flush()
        .map_err(|e| Error::io("<coherence csv>", e))?;
    Ok(())
}
