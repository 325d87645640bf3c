//! Masking evaluation: hide gold aspect terms in a share of the test reviews,
//! infer aspects for every review and score where the gold terms surface in
//! the ranked aspects' top words.

pub mod metrics;
pub mod semeval;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{tokenize, Preprocessor, Review, Vocabulary};
use crate::error::{Error, Result};
use crate::lda::{predict_aspect, AspectModel, FoldInConfig};
use crate::rng::rng_from_seed;
use crate::similarity::Taxonomy;

pub use metrics::{metrics, MetricSummary, ReviewRanks};
pub use semeval::{load_semeval, parse_semeval, SemEvalSchema};

/// One annotated aspect term after normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldTerm {
    pub surface: String,
    pub tokens: Vec<String>,
    /// Last normalized token; multi-word terms are matched on it.
    pub head: String,
}

impl GoldTerm {
    /// Returns `None` when the surface form has no word characters at all.
    pub fn new(surface: &str, preprocessor: &Preprocessor) -> Option<Self> {
        let mut tokens = preprocessor.process(surface);
        if tokens.is_empty() {
            // e.g. a term made only of stopwords: keep its raw words.
            tokens = tokenize(surface);
        }
        let head = tokens.last()?.clone();
        Some(Self {
            surface: surface.to_string(),
            tokens,
            head,
        })
    }

    /// Last raw word of the surface form, lowercased.
    fn surface_head(&self) -> Option<String> {
        tokenize(&self.surface).pop()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledReview {
    pub review_id: String,
    pub raw: String,
    /// Normalized tokens, before vocabulary lookup.
    pub tokens: Vec<String>,
    pub gold_terms: Vec<GoldTerm>,
}

impl LabeledReview {
    /// Normalizes text and terms with the training preprocessor. Terms that
    /// normalize to the same tokens are kept once.
    pub fn from_text(
        review_id: impl Into<String>,
        raw: impl Into<String>,
        terms: &[&str],
        preprocessor: &Preprocessor,
    ) -> Self {
        let raw = raw.into();
        let mut seen = HashSet::new();
        let gold_terms = terms
            .iter()
            .filter_map(|t| GoldTerm::new(t, preprocessor))
            .filter(|g| seen.insert(g.tokens.clone()))
            .collect();
        Self {
            review_id: review_id.into(),
            tokens: preprocessor.process(&raw),
            raw,
            gold_terms,
        }
    }

    pub fn encode(&self, vocabulary: &Vocabulary) -> Review {
        encode_tokens(&self.review_id, &self.raw, &self.tokens, vocabulary)
    }
}

fn encode_tokens(id: &str, raw: &str, tokens: &[String], vocabulary: &Vocabulary) -> Review {
    let (ids, _) = vocabulary.encode(tokens);
    Review {
        review_id: id.to_string(),
        raw: raw.to_string(),
        tokens: ids,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskOutcome {
    pub tokens: Vec<String>,
    pub removed: usize,
    /// Some gold token never occurred in the review text.
    pub flagged: bool,
}

/// Delete every token equal to a token of any gold term, keeping order.
pub fn mask(labeled: &LabeledReview) -> MaskOutcome {
    let gold: HashSet<&str> = labeled
        .gold_terms
        .iter()
        .flat_map(|g| g.tokens.iter().map(String::as_str))
        .collect();
    let present: HashSet<&str> = labeled.tokens.iter().map(String::as_str).collect();
    let tokens: Vec<String> = labeled
        .tokens
        .iter()
        .filter(|t| !gold.contains(t.as_str()))
        .cloned()
        .collect();
    MaskOutcome {
        removed: labeled.tokens.len() - tokens.len(),
        flagged: gold.iter().any(|g| !present.contains(g)),
        tokens,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchVia {
    Exact,
    Semantic,
}

impl MatchVia {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchVia::Exact => "exact",
            MatchVia::Semantic => "semantic",
        }
    }
}

/// The word a gold term is looked up as inside the aspects' top words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchTarget {
    pub word: String,
    pub via: MatchVia,
}

/// Top-`n` word ids of every aspect, as sets.
#[derive(Debug, Clone)]
pub struct AspectWords {
    top: Vec<HashSet<usize>>,
}

impl AspectWords {
    pub fn new(model: &AspectModel, n: usize) -> Self {
        Self {
            top: model
                .top_words(n)
                .into_iter()
                .map(|row| row.into_iter().map(|(w, _)| w).collect())
                .collect(),
        }
    }

    pub fn contains(&self, aspect: usize, word: usize) -> bool {
        self.top.get(aspect).is_some_and(|s| s.contains(&word))
    }
}

/// Resolve the lookup word: the head itself when the model knows it,
/// otherwise the most Resnik-similar vocabulary word. Without a taxonomy an
/// unknown head has no target.
pub fn resolve_target(
    gold: &GoldTerm,
    vocabulary: &Vocabulary,
    taxonomy: Option<&Taxonomy>,
) -> Option<MatchTarget> {
    if vocabulary.contains(&gold.head) {
        return Some(MatchTarget {
            word: gold.head.clone(),
            via: MatchVia::Exact,
        });
    }
    let taxonomy = taxonomy?;
    let mut candidates = vec![gold.head.clone()];
    if let Some(raw) = gold.surface_head() {
        if raw != gold.head {
            candidates.push(raw);
        }
    }
    candidates
        .iter()
        .find_map(|c| taxonomy.nearest_in_vocab(c, vocabulary))
        .map(|(word, _)| MatchTarget {
            word,
            via: MatchVia::Semantic,
        })
}

/// 1-based position of the first aspect in `ranking` whose top words contain
/// `target`.
pub fn match_rank(words: &AspectWords, ranking: &[usize], target: usize) -> Option<usize> {
    ranking
        .iter()
        .position(|&a| words.contains(a, target))
        .map(|p| p + 1)
}

/// Which eligible reviews are masked at one fraction. Reviews are shuffled
/// once per seed and the first `round(fraction * n)` are taken, so plans for
/// growing fractions are nested.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaskingPlan {
    pub fraction: f64,
    pub masked_ids: BTreeSet<String>,
    pub seed: u64,
}

impl MaskingPlan {
    pub fn new(eligible_ids: &[String], fraction: f64, seed: u64) -> Result<Self> {
        check_fraction(fraction)?;
        let order = masking_order(eligible_ids.len(), seed);
        let n = (fraction * eligible_ids.len() as f64).round() as usize;
        Ok(Self {
            fraction,
            masked_ids: order[..n]
                .iter()
                .map(|&i| eligible_ids[i].clone())
                .collect(),
            seed,
        })
    }

    pub fn is_masked(&self, review_id: &str) -> bool {
        self.masked_ids.contains(review_id)
    }
}

fn masking_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    order
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "masking fraction {fraction} is outside [0, 1]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Size of each aspect's word list searched for the target.
    pub top_k_words: usize,
    /// Cutoff for recall, nDCG and hit.
    pub metric_k: usize,
    /// Review `i` of the test set folds in with `fold_in.for_review(i)`.
    pub fold_in: FoldInConfig,
    /// Seed of the masking order.
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            top_k_words: 5,
            metric_k: 5,
            fold_in: FoldInConfig::default(),
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            fold_in: FoldInConfig {
                seed,
                ..FoldInConfig::default()
            },
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermMatch {
    pub surface: String,
    pub target: Option<String>,
    pub rank: Option<usize>,
    pub via: Option<MatchVia>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReviewOutcome {
    pub review_id: String,
    pub masked: bool,
    pub flagged: bool,
    /// Tokens deleted by masking.
    pub removed: usize,
    pub all_oov: bool,
    pub predicted_aspect: usize,
    pub terms: Vec<TermMatch>,
}

impl ReviewOutcome {
    pub fn ranks(&self) -> ReviewRanks {
        ReviewRanks::new(
            self.terms.len(),
            self.terms.iter().filter_map(|t| t.rank).collect(),
        )
    }

    /// Best matched rank and how that term was matched.
    pub fn best_match(&self) -> Option<(usize, MatchVia)> {
        self.terms
            .iter()
            .filter_map(|t| Some((t.rank?, t.via?)))
            .min_by_key(|&(r, _)| r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub fraction: f64,
    /// Means over every evaluated review.
    pub all: MetricSummary,
    /// Means over masked reviews only; `None` when nothing was masked.
    pub masked: Option<MetricSummary>,
    pub n_masked: usize,
    pub per_review: Vec<ReviewOutcome>,
}

impl EvalReport {
    pub fn mrr(&self) -> f64 {
        self.all.mrr
    }

    pub fn recall_at_k(&self) -> f64 {
        self.all.recall_at_k
    }

    pub fn ndcg_at_k(&self) -> f64 {
        self.all.ndcg_at_k
    }

    pub fn hit_at_k(&self) -> f64 {
        self.all.hit_at_k
    }

    pub fn n_reviews(&self) -> usize {
        self.all.n_reviews
    }
}

/// Evaluation state shared across fractions: eligible reviews, per-aspect
/// word sets and the resolved match targets.
pub struct Evaluator<'a> {
    model: &'a AspectModel,
    config: EvalConfig,
    /// (test-set index, review) for reviews with at least one gold term.
    eligible: Vec<(usize, &'a LabeledReview)>,
    words: AspectWords,
    targets: HashMap<String, Option<(usize, MatchVia)>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        model: &'a AspectModel,
        testset: &'a [LabeledReview],
        taxonomy: Option<&Taxonomy>,
        config: EvalConfig,
    ) -> Result<Self> {
        if config.top_k_words == 0 || config.metric_k == 0 {
            return Err(Error::InvalidParameter(
                "top-word and metric cutoffs must be at least 1".into(),
            ));
        }
        let eligible: Vec<(usize, &LabeledReview)> = testset
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.gold_terms.is_empty())
            .collect();
        if eligible.is_empty() {
            return Err(Error::InvalidData(
                "test set has no review with a gold aspect term".into(),
            ));
        }
        let mut ids = HashSet::new();
        for (_, r) in &eligible {
            if !ids.insert(r.review_id.as_str()) {
                return Err(Error::InvalidData(format!(
                    "duplicate review id {:?} in test set",
                    r.review_id
                )));
            }
        }

        let vocabulary = model.vocabulary();
        let mut unique: Vec<&GoldTerm> = Vec::new();
        let mut seen = HashSet::new();
        for (_, r) in &eligible {
            for g in &r.gold_terms {
                if seen.insert(g.surface.as_str()) {
                    unique.push(g);
                }
            }
        }
        let targets = unique
            .par_iter()
            .map(|g| {
                let t = resolve_target(g, vocabulary, taxonomy).map(|t| {
                    (
                        vocabulary.id(&t.word).expect("target is a vocabulary word"),
                        t.via,
                    )
                });
                (g.surface.clone(), t)
            })
            .collect();

        Ok(Self {
            model,
            words: AspectWords::new(model, config.top_k_words),
            config,
            eligible,
            targets,
        })
    }

    pub fn eligible_ids(&self) -> Vec<String> {
        self.eligible
            .iter()
            .map(|(_, r)| r.review_id.clone())
            .collect()
    }

    pub fn plan(&self, fraction: f64) -> Result<MaskingPlan> {
        MaskingPlan::new(&self.eligible_ids(), fraction, self.config.seed)
    }

    fn outcome(&self, index: usize, labeled: &LabeledReview, masked: bool) -> ReviewOutcome {
        let vocabulary = self.model.vocabulary();
        let (review, removed, flagged) = if masked {
            let m = mask(labeled);
            (
                encode_tokens(&labeled.review_id, &labeled.raw, &m.tokens, vocabulary),
                m.removed,
                m.flagged,
            )
        } else {
            (labeled.encode(vocabulary), 0, false)
        };
        let all_oov = review.tokens.is_empty();
        let ranking: Vec<usize> =
            predict_aspect(self.model, &review, &self.config.fold_in.for_review(index))
                .into_iter()
                .map(|(a, _)| a)
                .collect();
        let terms = labeled
            .gold_terms
            .iter()
            .map(|g| {
                let target = self.targets.get(&g.surface).copied().flatten();
                let rank = target.and_then(|(w, _)| match_rank(&self.words, &ranking, w));
                TermMatch {
                    surface: g.surface.clone(),
                    target: target.map(|(w, _)| vocabulary.word(w).to_string()),
                    rank,
                    via: rank.and(target.map(|(_, v)| v)),
                }
            })
            .collect();
        ReviewOutcome {
            review_id: labeled.review_id.clone(),
            masked,
            flagged,
            removed,
            all_oov,
            predicted_aspect: ranking[0],
            terms,
        }
    }

    pub fn run(&self, plan: Option<&MaskingPlan>) -> Result<EvalReport> {
        let per_review: Vec<ReviewOutcome> = self
            .eligible
            .par_iter()
            .map(|&(i, r)| self.outcome(i, r, plan.is_some_and(|p| p.is_masked(&r.review_id))))
            .collect();
        let k = self.config.metric_k;
        let ranks: Vec<ReviewRanks> = per_review.iter().map(ReviewOutcome::ranks).collect();
        let masked_ranks: Vec<ReviewRanks> = per_review
            .iter()
            .filter(|o| o.masked)
            .map(ReviewOutcome::ranks)
            .collect();
        Ok(EvalReport {
            fraction: plan.map_or(0.0, |p| p.fraction),
            all: metrics(&ranks, k)?,
            masked: if masked_ranks.is_empty() {
                None
            } else {
                Some(metrics(&masked_ranks, k)?)
            },
            n_masked: masked_ranks.len(),
            per_review,
        })
    }
}

/// Score the test set with nothing masked.
pub fn evaluate(
    model: &AspectModel,
    testset: &[LabeledReview],
    taxonomy: Option<&Taxonomy>,
    config: &EvalConfig,
) -> Result<EvalReport> {
    Evaluator::new(model, testset, taxonomy, *config)?.run(None)
}

/// One report per fraction, in the given order.
pub fn sweep_masking(
    model: &AspectModel,
    testset: &[LabeledReview],
    fractions: &[f64],
    taxonomy: Option<&Taxonomy>,
    config: &EvalConfig,
) -> Result<Vec<EvalReport>> {
    for &f in fractions {
        check_fraction(f)?;
    }
    let evaluator = Evaluator::new(model, testset, taxonomy, *config)?;
    fractions
        .iter()
        .map(|&f| evaluator.run(Some(&evaluator.plan(f)?)))
        .collect()
}

/// `0.0, 0.1, …, 1.0`.
pub fn default_fractions() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(reports: &[EvalReport], out: W) -> Result<()> {
    let k = reports.first().map_or(5, |r| r.all.k);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["fraction".to_string(), "mrr".into()];
    for prefix in ["", "masked_"] {
        if !prefix.is_empty() {
            header.push(format!("{prefix}mrr"));
        }
        header.push(format!("{prefix}recall_at_{k}"));
        header.push(format!("{prefix}ndcg_at_{k}"));
        header.push(format!("{prefix}hit_at_{k}"));
        header.push(if prefix.is_empty() {
            "n_reviews".into()
        } else {
            "n_masked".into()
        });
    }
    w.write_record(&header)?;
    for r in reports {
        let m = r.masked.as_ref();
        w.write_record([
            r.fraction.to_string(),
            r.all.mrr.to_string(),
            r.all.recall_at_k.to_string(),
            r.all.ndcg_at_k.to_string(),
            r.all.hit_at_k.to_string(),
            r.all.n_reviews.to_string(),
            opt(m.map(|m| m.mrr)),
            opt(m.map(|m| m.recall_at_k)),
            opt(m.map(|m| m.ndcg_at_k)),
            opt(m.map(|m| m.hit_at_k)),
            r.n_masked.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<evaluation csv>", e))?;
    Ok(())
}

/// One row per (fraction, review, gold term).
pub fn write_detail_csv<W: Write>(reports: &[EvalReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "fraction",
        "review_id",
        "masked",
        "flagged",
        "all_oov",
        "predicted_aspect",
        "gold_term",
        "target",
        "matched_rank",
        "matched_via",
    ])?;
    for r in reports {
        for o in &r.per_review {
            for t in &o.terms {
                w.write_record([
                    r.fraction.to_string(),
                    o.review_id.clone(),
                    o.masked.to_string(),
                    o.flagged.to_string(),
                    o.all_oov.to_string(),
                    o.predicted_aspect.to_string(),
                    t.surface.clone(),
                    t.target.clone().unwrap_or_default(),
                    t.rank.map(|x| x.to_string()).unwrap_or_default(),
                    t.via.map(|v| v.as_str().to_string()).unwrap_or_default(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<evaluation csv>", e))?;
    Ok(())
}
