//! Review ingestion: tokenizing, filtering, normalizing and encoding raw
//! review text into a [`Corpus`] over a corpus-derived [`Vocabulary`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CORPUS_FORMAT_VERSION: u32 = 1;

/// Bidirectional word/id map. Vocabularies built from a corpus also carry
/// document frequencies; vocabularies restored from a model file do not.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    ids: HashMap<String, usize>,
    doc_freq: Vec<u32>,
    total_docs: usize,
}

impl Vocabulary {
    /// Vocabulary without document statistics.
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        let mut ids = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if ids.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidData(format!(
                    "duplicate vocabulary word {w:?}"
                )));
            }
        }
        Ok(Self {
            words,
            ids,
            doc_freq: Vec::new(),
            total_docs: 0,
        })
    }

    fn with_stats(words: Vec<String>, doc_freq: Vec<u32>, total_docs: usize) -> Result<Self> {
        let mut vocab = Self::from_words(words)?;
        vocab.doc_freq = doc_freq;
        vocab.total_docs = total_docs;
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.ids.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.ids.contains_key(word)
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Number of documents containing `id`, when known.
    pub fn doc_freq(&self, id: usize) -> Option<u32> {
        self.doc_freq.get(id).copied()
    }

    pub fn total_docs(&self) -> usize {
        self.total_docs
    }

    /// Map tokens to ids, skipping out-of-vocabulary tokens. Returns the ids
    /// and the number of skipped tokens.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> (Vec<usize>, usize) {
        let mut ids = Vec::with_capacity(tokens.len());
        let mut oov = 0;
        for t in tokens {
            match self.id(t.as_ref()) {
                Some(id) => ids.push(id),
                None => oov += 1,
            }
        }
        (ids, oov)
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<&str> {
        ids.iter().map(|&i| self.word(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Review {
    pub review_id: String,
    pub raw: String,
    pub tokens: Vec<usize>,
}

impl Review {
    pub fn new(review_id: impl Into<String>, tokens: Vec<usize>) -> Self {
        Self {
            review_id: review_id.into(),
            raw: String::new(),
            tokens,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub reviews: Vec<Review>,
    pub vocabulary: Vocabulary,
    pub source: String,
}

#[derive(Serialize, Deserialize)]
struct CorpusFile {
    version: u32,
    source: String,
    vocabulary: Vec<String>,
    reviews: Vec<ReviewRecord>,
}

#[derive(Serialize, Deserialize)]
struct ReviewRecord {
    id: String,
    tokens: Vec<usize>,
}

impl Corpus {
    /// Assemble a corpus from already-encoded reviews, recomputing document
    /// frequencies.
    pub fn from_encoded(
        words: Vec<String>,
        reviews: Vec<Review>,
        source: impl Into<String>,
    ) -> Result<Self> {
        let v = words.len();
        let mut doc_freq = vec![0u32; v];
        let mut total_docs = 0;
        for r in &reviews {
            if let Some(&bad) = r.tokens.iter().find(|&&t| t >= v) {
                return Err(Error::InvalidData(format!(
                    "review {} has token id {bad} outside vocabulary of size {v}",
                    r.review_id
                )));
            }
            if r.tokens.is_empty() {
                continue;
            }
            total_docs += 1;
            let distinct: BTreeSet<usize> = r.tokens.iter().copied().collect();
            for t in distinct {
                doc_freq[t] += 1;
            }
        }
        Ok(Self {
            reviews,
            vocabulary: Vocabulary::with_stats(words, doc_freq, total_docs)?,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.reviews.iter().map(|r| r.tokens.len()).sum()
    }

    pub fn documents(&self) -> Vec<&[usize]> {
        self.reviews.iter().map(|r| r.tokens.as_slice()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = CorpusFile {
            version: CORPUS_FORMAT_VERSION,
            source: self.source.clone(),
            vocabulary: self.vocabulary.words().to_vec(),
            reviews: self
                .reviews
                .iter()
                .map(|r| ReviewRecord {
                    id: r.review_id.clone(),
                    tokens: r.tokens.clone(),
                })
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CorpusFile = serde_json::from_str(text)?;
        if file.version != CORPUS_FORMAT_VERSION {
            return Err(Error::InvalidData(format!(
                "unsupported corpus format version {}",
                file.version
            )));
        }
        let reviews = file
            .reviews
            .into_iter()
            .map(|r| Review::new(r.id, r.tokens))
            .collect();
        Self::from_encoded(file.vocabulary, reviews, file.source)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Lowercase `text` and split it on every character that is not alphanumeric.
/// Punctuation, whitespace and emoji act as separators and are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Drop tokens containing a digit, tokens with anything other than ASCII
/// letters, and stopwords.
pub fn filter_tokens(tokens: &[String], stopwords: &HashSet<String>) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| keep_token(t, stopwords))
        .cloned()
        .collect()
}

fn keep_token(token: &str, stopwords: &HashSet<String>) -> bool {
    !token.is_empty()
        && !token.chars().any(|c| c.is_numeric())
        && token.chars().all(|c| c.is_ascii_alphabetic())
        && !stopwords.contains(token)
}

/// Built-in English stopword list, in [`parse_stopwords`] format.
pub const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords.txt");

pub fn english_stopwords() -> HashSet<String> {
    parse_stopwords(ENGLISH_STOPWORDS)
}

/// Parse a stopword list: one word per line, `#` starts a comment.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.to_lowercase())
        .collect()
}

pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}

/// Maps a filtered token to its canonical form.
pub trait Normalizer: Send + Sync {
    fn normalize_token(&self, token: &str) -> String;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityNormalizer;

impl Normalizer for IdentityNormalizer {
    fn normalize_token(&self, token: &str) -> String {
        token.to_string()
    }
}

/// Light inflectional suffix stripper.
///
/// Rules, first match wins, and a rule only fires when at least three
/// characters of stem remain:
///
/// | suffix | action | exceptions |
/// |--------|--------|------------|
/// | `ies`  | → `y`  | `eies`, `aies` |
/// | `es`   | drop after `s`, `x`, `z`, `ch`, `sh`; else → `e` | `aes`, `ees`, `oes` |
/// | `s`    | drop   | `us`, `ss` |
/// | `ing`  | drop   | stem needs a vowel |
/// | `ed`   | drop   | stem needs a vowel, not `eed` |
#[derive(Debug, Clone, Copy, Default)]
pub struct SuffixStemmer;

impl SuffixStemmer {
    const MIN_STEM: usize = 3;

    fn has_vowel(s: &str) -> bool {
        s.chars()
            .any(|c| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y'))
    }
}

impl Normalizer for SuffixStemmer {
    fn normalize_token(&self, token: &str) -> String {
        let min = Self::MIN_STEM;
        let ends_any = |s: &str, suffixes: &[&str]| suffixes.iter().any(|x| s.ends_with(x));
        if let Some(stem) = token.strip_suffix("ies") {
            if stem.len() >= min && !ends_any(stem, &["e", "a"]) {
                return format!("{stem}y");
            }
        } else if let Some(base) = token.strip_suffix("es") {
            if !ends_any(base, &["a", "e", "o"]) {
                if base.len() >= min && ends_any(base, &["s", "x", "z", "ch", "sh"]) {
                    return base.to_string();
                }
                if base.len() + 1 >= min {
                    return token[..token.len() - 1].to_string();
                }
            }
        }
        if let Some(stem) = token.strip_suffix('s') {
            if stem.len() >= min && !ends_any(stem, &["u", "s"]) && !token.ends_with("ies") {
                return stem.to_string();
            }
        } else if let Some(stem) = token.strip_suffix("ing") {
            if stem.len() >= min && Self::has_vowel(stem) {
                return stem.to_string();
            }
        } else if let Some(stem) = token.strip_suffix("ed") {
            if stem.len() >= min && !stem.ends_with('e') && Self::has_vowel(stem) {
                return stem.to_string();
            }
        }
        token.to_string()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NormalizerKind {
    #[default]
    Stem,
    Identity,
}

impl NormalizerKind {
    pub fn build(self) -> Box<dyn Normalizer> {
        match self {
            NormalizerKind::Stem => Box::new(SuffixStemmer),
            NormalizerKind::Identity => Box::new(IdentityNormalizer),
        }
    }
}

pub fn normalize(tokens: &[String], normalizer: &dyn Normalizer) -> Vec<String> {
    tokens
        .iter()
        .map(|t| normalizer.normalize_token(t))
        .collect()
}

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub min_doc_freq: usize,
    pub stopwords: HashSet<String>,
    pub normalizer: NormalizerKind,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            min_doc_freq: 2,
            stopwords: HashSet::new(),
            normalizer: NormalizerKind::Stem,
        }
    }
}

/// The tokenize → filter → normalize pipeline shared by training corpora,
/// inference inputs and gold aspect terms.
pub struct Preprocessor {
    stopwords: HashSet<String>,
    normalizer: Box<dyn Normalizer>,
    min_doc_freq: usize,
}

impl Preprocessor {
    pub fn new(config: PreprocessConfig) -> Self {
        let normalizer = config.normalizer.build();
        Self::with_normalizer(config, normalizer)
    }

    /// Use a caller-supplied normalizer (e.g. an external lemmatizer) in place
    /// of the configured one.
    pub fn with_normalizer(config: PreprocessConfig, normalizer: Box<dyn Normalizer>) -> Self {
        Self {
            stopwords: config.stopwords,
            normalizer,
            min_doc_freq: config.min_doc_freq,
        }
    }

    pub fn min_doc_freq(&self) -> usize {
        self.min_doc_freq
    }

    pub fn process(&self, text: &str) -> Vec<String> {
        let filtered = filter_tokens(&tokenize(text), &self.stopwords);
        normalize(&filtered, self.normalizer.as_ref())
    }

    /// Returns the normalized tokens and the number of raw tokens filtered out.
    fn process_counted(&self, text: &str) -> (Vec<String>, usize) {
        let raw = tokenize(text);
        let filtered = filter_tokens(&raw, &self.stopwords);
        let dropped = raw.len() - filtered.len();
        (normalize(&filtered, self.normalizer.as_ref()), dropped)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }
}

/// What preprocessing removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub n_documents: usize,
    pub tokens_kept: usize,
    pub tokens_filtered: usize,
    pub tokens_pruned: usize,
    pub vocabulary_before_pruning: usize,
    pub vocabulary_size: usize,
    pub empty_review_ids: Vec<String>,
}

pub fn build_corpus(
    documents: &[RawDocument],
    preprocessor: &Preprocessor,
    source: &str,
) -> Result<(Corpus, PreprocessReport)> {
    if documents.is_empty() {
        return Err(Error::EmptyCorpus("no documents given".into()));
    }
    if preprocessor.min_doc_freq == 0 {
        return Err(Error::InvalidParameter(
            "min_doc_freq must be at least 1".into(),
        ));
    }

    let processed: Vec<(Vec<String>, usize)> = documents
        .par_iter()
        .map(|d| preprocessor.process_counted(&d.text))
        .collect();

    // First-appearance order over the whole corpus keeps ids deterministic.
    let mut first_seen: Vec<&str> = Vec::new();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for (tokens, _) in &processed {
        let mut seen_here: HashSet<&str> = HashSet::new();
        for t in tokens {
            if seen_here.insert(t.as_str()) {
                let entry = df.entry(t.as_str()).or_insert_with(|| {
                    first_seen.push(t.as_str());
                    0
                });
                *entry += 1;
            }
        }
    }
    let vocabulary_before_pruning = first_seen.len();
    let words: Vec<String> = first_seen
        .iter()
        .filter(|w| df[*w] >= preprocessor.min_doc_freq)
        .map(|w| w.to_string())
        .collect();
    let ids: HashMap<&str, usize> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();

    let mut report = PreprocessReport {
        n_documents: documents.len(),
        vocabulary_before_pruning,
        vocabulary_size: words.len(),
        ..Default::default()
    };
    let mut reviews = Vec::with_capacity(documents.len());
    for (doc, (tokens, filtered)) in documents.iter().zip(&processed) {
        report.tokens_filtered += filtered;
        let encoded: Vec<usize> = tokens
            .iter()
            .filter_map(|t| ids.get(t.as_str()).copied())
            .collect();
        report.tokens_pruned += tokens.len() - encoded.len();
        report.tokens_kept += encoded.len();
        if encoded.is_empty() {
            report.empty_review_ids.push(doc.id.clone());
        }
        reviews.push(Review {
            review_id: doc.id.clone(),
            raw: doc.text.clone(),
            tokens: encoded,
        });
    }
    if report.tokens_kept == 0 {
        return Err(Error::EmptyCorpus(
            "every review is empty after preprocessing".into(),
        ));
    }
    if !report.empty_review_ids.is_empty() {
        log::warn!(
            "{} reviews are empty after preprocessing",
            report.empty_review_ids.len()
        );
    }
    let corpus = Corpus::from_encoded(words, reviews, source)?;
    Ok((corpus, report))
}

/// One review per line; the id is the zero-based line number. Blank lines are
/// kept as (empty) reviews so ids stay aligned with line numbers.
pub fn read_line_documents(path: &Path) -> Result<Vec<RawDocument>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, line)| RawDocument::new(i.to_string(), line))
        .collect())
}

/// Delimited table with a header row containing `review_id` and `text` columns.
pub fn read_delimited_documents(path: &Path, delimiter: u8) -> Result<Vec<RawDocument>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| {
                Error::InvalidData(format!("{}: missing column {name:?}", path.display()))
            })
    };
    let id_col = column("review_id")?;
    let text_col = column("text")?;
    let mut docs = Vec::new();
    for record in reader.records() {
        let record = record?;
        let id = record.get(id_col).unwrap_or("").to_string();
        let text = record.get(text_col).unwrap_or("").to_string();
        docs.push(RawDocument::new(id, text));
    }
    Ok(docs)
}
