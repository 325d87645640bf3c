//! Resnik similarity over a word taxonomy.
//!
//! A taxonomy is a DAG of concepts with corpus frequencies. The probability of
//! a concept is the frequency mass of the concept and all its descendants
//! over the total mass, its information content is `-ln p(c)`, and the
//! similarity of two words is the largest information content among the
//! concepts subsuming a sense of each.
//!
//! Taxonomy files are UTF-8 TSV with three record kinds:
//!
//! ```text
//! C <concept_id> <freq>        concept with raw frequency
//! E <child_id>   <parent_id>   is-a edge
//! W <word>       <concept_id>  word sense
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::{HashMap, VecDeque};
use std::path::Path;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Pseudo-count added to every concept frequency at load time.
pub const DEFAULT_PSEUDO_COUNT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityScore {
    /// Information content of the most informative common subsumer, in nats.
    pub value: f64,
    pub lcs: Option<ConceptId>,
}

impl SimilarityScore {
    pub const NONE: SimilarityScore = SimilarityScore {
        value: 0.0,
        lcs: None,
    };
}

#[derive(Debug, Clone)]
pub struct Taxonomy {
    names: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    word_senses: HashMap<String, Vec<usize>>,
    freq: Vec<f64>,
    cumulative: Vec<f64>,
    total: f64,
    /// Each concept's ancestors including itself, sorted.
    ancestors: Vec<Vec<usize>>,
    ic: Vec<f64>,
}

impl Taxonomy {
    pub fn parse_tsv(text: &str, pseudo_count: f64) -> Result<Self> {
        let mut concepts = Vec::new();
        let mut edges = Vec::new();
        let mut words = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = || Error::Taxonomy(format!("line {}: malformed record {line:?}", n + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            match fields[0] {
                "C" => {
                    let freq: f64 = fields[2].trim().parse().map_err(|_| bad())?;
                    concepts.push((fields[1].to_string(), freq));
                }
                "E" => edges.push((fields[1].to_string(), fields[2].to_string())),
                "W" => words.push((fields[1].to_string(), fields[2].to_string())),
                _ => return Err(bad()),
            }
        }
        Self::from_records(concepts, edges, words, pseudo_count)
    }

    pub fn load(path: &Path, pseudo_count: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text, pseudo_count)
    }

    /// Build from `(id, freq)` concepts, `(child, parent)` edges and
    /// `(word, concept)` senses. Every frequency is increased by
    /// `pseudo_count` before accumulation.
    pub fn from_records(
        concepts: Vec<(String, f64)>,
        edges: Vec<(String, String)>,
        words: Vec<(String, String)>,
        pseudo_count: f64,
    ) -> Result<Self> {
        if !(pseudo_count >= 0.0 && pseudo_count.is_finite()) {
            return Err(Error::Taxonomy(format!(
                "invalid pseudo-count {pseudo_count}"
            )));
        }
        let mut names = Vec::with_capacity(concepts.len());
        let mut index = HashMap::with_capacity(concepts.len());
        let mut freq = Vec::with_capacity(concepts.len());
        for (name, f) in concepts {
            if !(f >= 0.0 && f.is_finite()) {
                return Err(Error::Taxonomy(format!(
                    "concept {name}: invalid frequency {f}"
                )));
            }
            if index.insert(name.clone(), names.len()).is_some() {
                return Err(Error::Taxonomy(format!("duplicate concept {name}")));
            }
            names.push(name);
            freq.push(f);
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Taxonomy(format!("unknown concept {name}")))
        };
        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (child, parent) in &edges {
            let (c, p) = (lookup(child)?, lookup(parent)?);
            if !parents[c].contains(&p) {
                parents[c].push(p);
                children[p].push(c);
            }
        }
        let mut word_senses: HashMap<String, Vec<usize>> = HashMap::new();
        for (word, concept) in &words {
            let c = lookup(concept)?;
            let senses = word_senses.entry(word.clone()).or_default();
            if !senses.contains(&c) {
                senses.push(c);
            }
        }

        // Kahn's algorithm from the roots down; leftovers sit on a cycle.
        let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&c| pending[c] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(c) = queue.pop_front() {
            order.push(c);
            for &child in &children[c] {
                pending[child] -= 1;
                if pending[child] == 0 {
                    queue.push_back(child);
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n)
                .find(|&c| pending[c] > 0)
                .map(|c| names[c].clone())
                .unwrap_or_default();
            return Err(Error::Taxonomy(format!(
                "cycle detected through concept {stuck}"
            )));
        }

        let mut ancestors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &c in &order {
            let mut set = vec![c];
            for &p in &parents[c] {
                set.extend_from_slice(&ancestors[p]);
            }
            set.sort_unstable();
            set.dedup();
            ancestors[c] = set;
        }

        let smoothed: Vec<f64> = freq.iter().map(|f| f + pseudo_count).collect();
        let mut cumulative = vec![0.0; n];
        for (c, anc) in ancestors.iter().enumerate() {
            for &a in anc {
                cumulative[a] += smoothed[c];
            }
        }
        let total: f64 = smoothed.iter().sum();
        if total <= 0.0 {
            return Err(Error::Taxonomy("taxonomy has no frequency mass".into()));
        }
        if let Some(c) = (0..n).find(|&c| cumulative[c] <= 0.0) {
            return Err(Error::Taxonomy(format!(
                "concept {} has zero cumulative frequency; load with a positive pseudo-count",
                names[c]
            )));
        }
        let ic = cumulative
            .iter()
            .map(|&f| (-(f / total).ln()).max(0.0))
            .collect();
        Ok(Self {
            names,
            index,
            parents,
            word_senses,
            freq,
            cumulative,
            total,
            ancestors,
            ic,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn concept(&self, name: &str) -> Option<ConceptId> {
        self.index.get(name).copied().map(ConceptId)
    }

    pub fn concept_name(&self, id: ConceptId) -> &str {
        &self.names[id.0]
    }

    pub fn parents(&self, id: ConceptId) -> impl Iterator<Item = ConceptId> + '_ {
        self.parents[id.0].iter().map(|&p| ConceptId(p))
    }

    pub fn senses(&self, word: &str) -> &[usize] {
        self.word_senses.get(word).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_word(&self, word: &str) -> bool {
        self.word_senses.contains_key(word)
    }

    pub fn raw_frequency(&self, id: ConceptId) -> f64 {
        self.freq[id.0]
    }

    pub fn cumulative_frequency(&self, id: ConceptId) -> f64 {
        self.cumulative[id.0]
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn ic(&self, id: ConceptId) -> f64 {
        self.ic[id.0]
    }

    /// `-ln(cumulative(c) / total)` for a concept named `concept`.
    pub fn information_content(&self, concept: &str) -> Result<f64> {
        self.concept(concept)
            .map(|c| self.ic(c))
            .ok_or_else(|| Error::Taxonomy(format!("unknown concept {concept}")))
    }

    /// Higher IC wins; equal IC goes to the deeper concept (more ancestors),
    /// then to the smaller id.
    fn more_informative(&self, a: usize, b: usize) -> bool {
        self.ic[a]
            .total_cmp(&self.ic[b])
            .then(self.ancestors[a].len().cmp(&self.ancestors[b].len()))
            .then(b.cmp(&a))
            .is_gt()
    }

    /// Most informative concept among the common ancestors of two senses.
    fn best_common(&self, a: usize, b: usize) -> Option<usize> {
        let (x, y) = (&self.ancestors[a], &self.ancestors[b]);
        let (mut i, mut j) = (0, 0);
        let mut best: Option<usize> = None;
        while i < x.len() && j < y.len() {
            match x[i].cmp(&y[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let c = x[i];
                    if best.is_none_or(|b| self.more_informative(c, b)) {
                        best = Some(c);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        best
    }

    pub fn resnik(&self, w1: &str, w2: &str) -> SimilarityScore {
        let mut best: Option<usize> = None;
        for &a in self.senses(w1) {
            for &b in self.senses(w2) {
                if let Some(c) = self.best_common(a, b) {
                    if best.is_none_or(|cur| self.more_informative(c, cur)) {
                        best = Some(c);
                    }
                }
            }
        }
        match best {
            Some(c) => SimilarityScore {
                value: self.ic[c],
                lcs: Some(ConceptId(c)),
            },
            None => SimilarityScore::NONE,
        }
    }

    /// Vocabulary word most similar to `target`; equal scores resolve to the
    /// lexicographically smallest word. `None` when nothing scores above 0.
    pub fn nearest_in_vocab(
        &self,
        target: &str,
        vocabulary: &Vocabulary,
    ) -> Option<(String, SimilarityScore)> {
        if !self.has_word(target) {
            return None;
        }
        let mut best: Option<(&str, SimilarityScore)> = None;
        for word in vocabulary.words() {
            if !self.has_word(word) {
                continue;
            }
            let score = self.resnik(target, word);
            let better = match &best {
                None => true,
                Some((w, s)) => {
                    score.value > s.value || (score.value == s.value && word.as_str() < *w)
                }
            };
            if better {
                best = Some((word, score));
            }
        }
        best.filter(|(_, s)| s.value > 0.0)
            .map(|(w, s)| (w.to_string(), s))
    }
}

/// Free-function form of [`Taxonomy::information_content`].
pub fn information_content(taxonomy: &Taxonomy, concept: &str) -> Result<f64> {
    taxonomy.information_content(concept)
}

pub fn resnik(taxonomy: &Taxonomy, w1: &str, w2: &str) -> SimilarityScore {
    taxonomy.resnik(w1, w2)
}

pub fn nearest_in_vocab(
    taxonomy: &Taxonomy,
    target: &str,
    vocabulary: &Vocabulary,
) -> Option<(String, SimilarityScore)> {
    taxonomy.nearest_in_vocab(target, vocabulary)
}
