//! Posting ingestion: cleaning, segmentation, stop-word filtering, garbled-text
//! detection and near-duplicate removal.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::path::Path;
use std::sync::Arc;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::io;

#[derive(Debug, thiserror::Error)]
pub enum PrepError {
    #[error("unknown segmenter `{0}`")]
    UnknownSegmenter(String),
    #[error("invalid cleaning pattern `{pattern}`: {source}")]
    Pattern {
        pattern: String,
        #[source]
        source: regex::Error,
    },
    #[error("dedup threshold must lie in (0, 1], got {0}")]
    Threshold(f64),
    #[error("duplicate posting id `{0}` in batch")]
    DuplicateId(String),
    #[error("posting on line {line} has an empty id")]
    EmptyId { line: usize },
    #[error(transparent)]
    Io(#[from] io::RecordError),
}

/// A posting as it arrives from a crawl export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPosting {
    pub id: String,
    pub title: String,
    #[serde(rename = "description")]
    pub body: String,
    /// Reference segmentation supplied with the record. When present it is
    /// used instead of running a segmenter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
}

impl RawPosting {
    pub fn new(id: impl Into<String>, title: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            body: body.into(),
            tokens: None,
        }
    }
}

/// A cleaned, segmented posting ready for labeling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    #[serde(rename = "description")]
    pub body: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopList {
    entries: HashSet<String>,
}

impl StopList {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            entries: entries.into_iter().map(Into::into).collect(),
        }
    }

    /// One token per line; blank lines and surrounding whitespace are ignored.
    pub fn parse(text: &str) -> Self {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PrepError> {
        let text = io::read_to_string(path.as_ref())?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn filter_stopwords(tokens: Vec<String>, stops: &StopList) -> Vec<String> {
    tokens.into_iter().filter(|t| !stops.contains(t)).collect()
}

const EMAIL: &str = r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9.\-]+\.[A-Za-z]{2,}";
const URL: &str = r"(?i)\b(?:https?://|www\.)\S+";

/// Default boilerplate patterns for resume-delivery and recruiter noise.
pub const DEFAULT_BOILERPLATE: &[&str] = &[
    r"(?i)\b(?:send|submit|email|mail|forward)\b.*\b(?:resume|cv|curriculum vitae)\b",
    r"(?i)\bapply\s+(?:now|today|at|via|to|online)\b",
    r"(?i)\bequal\s+opportunity\s+employer\b",
    r"(?i)\b(?:contact|call)\s+(?:us|hr)\b",
    r"投递简历|简历投递|发送简历|简历请发|联系电话|联系方式",
];

/// Sentence-level cleaning rules. A sentence matching any rule is removed
/// from the body in full.
#[derive(Debug, Clone)]
pub struct CleaningRules {
    patterns: Vec<Regex>,
}

impl CleaningRules {
    /// Email and URL rules plus the given boilerplate patterns.
    pub fn with_boilerplate<I, S>(boilerplate: I) -> Result<Self, PrepError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut patterns = vec![Regex::new(EMAIL).unwrap(), Regex::new(URL).unwrap()];
        for p in boilerplate {
            let p = p.as_ref();
            patterns.push(Regex::new(p).map_err(|source| PrepError::Pattern {
                pattern: p.to_string(),
                source,
            })?);
        }
        Ok(Self { patterns })
    }

    fn rejects(&self, sentence: &str) -> bool {
        self.patterns.iter().any(|re| re.is_match(sentence))
    }
}

impl Default for CleaningRules {
    fn default() -> Self {
        Self::with_boilerplate(DEFAULT_BOILERPLATE).expect("built-in patterns compile")
    }
}

fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let end = i + c.len_utf8();
        let boundary = match c {
            '\n' | '\r' | '。' | '！' | '？' | '；' => true,
            '.' | '!' | '?' => chars.peek().is_none_or(|&(_, n)| n.is_whitespace()),
            _ => false,
        };
        if boundary {
            out.push(&text[start..end]);
            start = end;
        }
    }
    out.push(&text[start..]);
    out.into_iter()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Removes every sentence containing an email address, a URL or a configured
/// boilerplate pattern. Bodies with nothing to remove come back untouched.
pub fn normalize(raw: RawPosting, rules: &CleaningRules) -> RawPosting {
    let sentences = split_sentences(&raw.body);
    let kept: Vec<&str> = sentences
        .iter()
        .copied()
        .filter(|s| !rules.rejects(s))
        .collect();
    if kept.len() == sentences.len() {
        return raw;
    }
    let body = kept.join(" ");
    RawPosting { body, ..raw }
}

pub trait Segmenter: Send + Sync {
    fn segment(&self, text: &str) -> Vec<String>;
}

/// Lowercased alphanumeric words for alphabetic scripts; overlapping
/// character bigrams for CJK runs (a lone CJK character is kept as is).
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultSegmenter;

/// Splits on whitespace only. Suitable for text that was segmented upstream.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceSegmenter;

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xAC00..=0xD7AF
        | 0xF900..=0xFAFF
        | 0x20000..=0x2A6DF)
}

#[derive(PartialEq, Clone, Copy)]
enum Run {
    None,
    Word,
    Cjk,
}

impl Segmenter for DefaultSegmenter {
    fn segment(&self, text: &str) -> Vec<String> {
        fn flush(kind: Run, buf: &mut Vec<char>, out: &mut Vec<String>) {
            match kind {
                Run::Word => out.push(buf.iter().flat_map(|c| c.to_lowercase()).collect()),
                Run::Cjk if buf.len() == 1 => out.push(buf[0].to_string()),
                Run::Cjk => out.extend(buf.windows(2).map(|w| w.iter().collect::<String>())),
                Run::None => {}
            }
            buf.clear();
        }

        let mut out = Vec::new();
        let mut buf = Vec::new();
        let mut kind = Run::None;
        for c in text.chars() {
            let next = if is_cjk(c) {
                Run::Cjk
            } else if c.is_alphanumeric() {
                Run::Word
            } else {
                Run::None
            };
            if next != kind {
                flush(kind, &mut buf, &mut out);
                kind = next;
            }
            if next != Run::None {
                buf.push(c);
            }
        }
        flush(kind, &mut buf, &mut out);
        out
    }
}

impl Segmenter for WhitespaceSegmenter {
    fn segment(&self, text: &str) -> Vec<String> {
        text.split_whitespace().map(str::to_string).collect()
    }
}

/// Named segmenters. `default` and `whitespace` are always registered.
#[derive(Clone)]
pub struct SegmenterRegistry {
    segmenters: HashMap<String, Arc<dyn Segmenter>>,
}

impl fmt::Debug for SegmenterRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: BTreeSet<_> = self.segmenters.keys().collect();
        f.debug_struct("SegmenterRegistry")
            .field("segmenters", &names)
            .finish()
    }
}

impl Default for SegmenterRegistry {
    fn default() -> Self {
        let mut segmenters: HashMap<String, Arc<dyn Segmenter>> = HashMap::new();
        segmenters.insert("default".into(), Arc::new(DefaultSegmenter));
        segmenters.insert("whitespace".into(), Arc::new(WhitespaceSegmenter));
        Self { segmenters }
    }
}

impl SegmenterRegistry {
    pub fn register(&mut self, id: impl Into<String>, segmenter: Arc<dyn Segmenter>) {
        self.segmenters.insert(id.into(), segmenter);
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn Segmenter>, PrepError> {
        self.segmenters
            .get(id)
            .cloned()
            .ok_or_else(|| PrepError::UnknownSegmenter(id.to_string()))
    }

    pub fn tokenize(&self, text: &str, id: &str) -> Result<Vec<String>, PrepError> {
        Ok(self.get(id)?.segment(text))
    }
}

/// Tokenizes with one of the built-in segmenters.
pub fn tokenize(text: &str, segmenter_id: &str) -> Result<Vec<String>, PrepError> {
    SegmenterRegistry::default().tokenize(text, segmenter_id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    /// Nothing left after cleaning, segmentation and stop-word removal.
    EmptyTokens,
    /// Too many non-letter characters.
    Garbled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discard {
    pub id: String,
    pub reason: DiscardReason,
}

/// Share of non-whitespace characters that are not letters. Zero for blank
/// text.
pub fn non_letter_ratio(text: &str) -> f64 {
    let (mut total, mut other) = (0usize, 0usize);
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        total += 1;
        if !c.is_alphabetic() {
            other += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        other as f64 / total as f64
    }
}

/// The full per-posting preprocessing chain.
#[derive(Clone)]
pub struct Preprocessor {
    pub rules: CleaningRules,
    pub segmenter: Arc<dyn Segmenter>,
    pub stops: StopList,
    /// Postings whose non-letter share exceeds this bound are discarded.
    pub max_non_letter_ratio: f64,
}

impl fmt::Debug for Preprocessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Preprocessor")
            .field("stops", &self.stops.len())
            .field("max_non_letter_ratio", &self.max_non_letter_ratio)
            .finish_non_exhaustive()
    }
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self {
            rules: CleaningRules::default(),
            segmenter: Arc::new(DefaultSegmenter),
            stops: StopList::default(),
            max_non_letter_ratio: 0.5,
        }
    }
}

impl Preprocessor {
    pub fn with_stops(stops: StopList) -> Self {
        Self {
            stops,
            ..Self::default()
        }
    }

    /// Segments and stop-filters free text without cleaning or garbled checks.
    pub fn tokens(&self, text: &str) -> Vec<String> {
        filter_stopwords(self.segmenter.segment(text), &self.stops)
    }

    pub fn prepare(&self, raw: RawPosting) -> Result<Document, Discard> {
        let raw = normalize(raw, &self.rules);
        let text = format!("{} {}", raw.title, raw.body);
        if non_letter_ratio(&text) > self.max_non_letter_ratio {
            return Err(Discard {
                id: raw.id,
                reason: DiscardReason::Garbled,
            });
        }
        let tokens = match raw.tokens {
            Some(t) => filter_stopwords(t, &self.stops),
            None => self.tokens(&text),
        };
        if tokens.is_empty() {
            return Err(Discard {
                id: raw.id,
                reason: DiscardReason::EmptyTokens,
            });
        }
        Ok(Document {
            id: raw.id,
            title: raw.title,
            body: raw.body,
            tokens,
        })
    }
}

const SHINGLE: usize = 4;

/// Hashed character 4-gram shingles of the lowercased, whitespace-collapsed
/// text. Text shorter than one shingle yields a single shingle of itself.
pub fn shingles(text: &str) -> Vec<u64> {
    let collapsed: Vec<char> = text
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .chars()
        .flat_map(char::to_lowercase)
        .collect();
    let hash = |w: &[char]| {
        let mut h = DefaultHasher::new();
        w.hash(&mut h);
        h.finish()
    };
    let mut out: Vec<u64> = if collapsed.is_empty() {
        Vec::new()
    } else if collapsed.len() < SHINGLE {
        vec![hash(&collapsed)]
    } else {
        collapsed.windows(SHINGLE).map(hash).collect()
    };
    out.sort_unstable();
    out.dedup();
    out
}

/// Jaccard index of two sorted, deduplicated shingle sets. Two empty sets
/// count as identical.
pub fn jaccard(a: &[u64], b: &[u64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedDuplicate {
    pub document: Document,
    pub duplicate_of: String,
    pub jaccard: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DedupOutcome {
    pub kept: Vec<Document>,
    pub dropped: Vec<DroppedDuplicate>,
}

/// Near-duplicate removal over body shingles. Documents are visited in id
/// order and dropped when they reach `threshold` against an already kept
/// document, so each duplicate cluster keeps its smallest id.
pub fn dedup(mut docs: Vec<Document>, threshold: f64) -> Result<DedupOutcome, PrepError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(PrepError::Threshold(threshold));
    }
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    let mut kept: Vec<(Document, Vec<u64>)> = Vec::with_capacity(docs.len());
    let mut dropped = Vec::new();
    for doc in docs {
        let sh = shingles(&doc.body);
        let hit = kept.iter().find_map(|(k, ksh)| {
            // |A ∩ B| / |A ∪ B| is bounded by min/max of the set sizes.
            let (lo, hi) = (sh.len().min(ksh.len()), sh.len().max(ksh.len()));
            if hi > 0 && (lo as f64) < threshold * hi as f64 {
                return None;
            }
            let j = jaccard(&sh, ksh);
            (j >= threshold).then(|| (k.id.clone(), j))
        });
        match hit {
            Some((duplicate_of, jaccard)) => dropped.push(DroppedDuplicate {
                document: doc,
                duplicate_of,
                jaccard,
            }),
            None => kept.push((doc, sh)),
        }
    }
    Ok(DedupOutcome {
        kept: kept.into_iter().map(|(d, _)| d).collect(),
        dropped,
    })
}

/// Result of a full ingest pass.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub kept: Vec<Document>,
    pub dropped: Vec<DroppedDuplicate>,
    pub discarded: Vec<Discard>,
}

impl IngestReport {
    pub fn summary(&self) -> String {
        format!(
            "input={} kept={} duplicates={} discarded={}",
            self.kept.len() + self.dropped.len() + self.discarded.len(),
            self.kept.len(),
            self.dropped.len(),
            self.discarded.len()
        )
    }
}

/// Cleans, segments and deduplicates a batch of postings. Ids must be
/// nonempty and unique within the batch.
pub fn ingest(
    postings: Vec<RawPosting>,
    prep: &Preprocessor,
    dedup_threshold: f64,
) -> Result<IngestReport, PrepError> {
    let mut seen = HashSet::new();
    for (line, p) in postings.iter().enumerate() {
        if p.id.is_empty() {
            return Err(PrepError::EmptyId { line: line + 1 });
        }
        if !seen.insert(p.id.as_str()) {
            return Err(PrepError::DuplicateId(p.id.clone()));
        }
    }
    let mut docs = Vec::new();
    let mut discarded = Vec::new();
    for p in postings {
        match prep.prepare(p) {
            Ok(d) => docs.push(d),
            Err(d) => discarded.push(d),
        }
    }
    let outcome = dedup(docs, dedup_threshold)?;
    Ok(IngestReport {
        kept: outcome.kept,
        dropped: outcome.dropped,
        discarded,
    })
}

pub fn load_postings(path: impl AsRef<Path>) -> Result<Vec<RawPosting>, PrepError> {
    Ok(io::read_jsonl(path.as_ref())?)
}
