//! Embedding tables, labeled pair datasets, splits, and batching.
//!
//! File formats:
//!
//! * Embeddings: UTF-8 text, one token per line followed by its
//!   space-separated vector entries; an optional first header line holds two
//!   numbers (`count dim`) and is skipped. LF and CRLF both accepted.
//! * Pairs: 3-column TSV `w1 \t w2 \t label` with label 0 (synonym) or
//!   1 (antonym).
//!
//! Tokens are NFC-normalized on load; no case folding or lemmatization is
//! performed.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Frozen token-to-vector lookup for one language.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    language: String,
    dim: usize,
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

/// Side information from parsing an embedding file.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadStats {
    /// Duplicate tokens encountered (last occurrence kept).
    pub duplicates: usize,
}

fn nfc(token: &str) -> String {
    token.nfc().collect()
}

impl EmbeddingTable {
    /// Build a table from `(token, vector)` entries. Duplicate tokens (after
    /// NFC normalization): last wins.
    pub fn from_entries(
        language: &str,
        dim: usize,
        entries: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self> {
        let mut table = EmbeddingTable {
            language: language.to_string(),
            dim,
            tokens: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
        };
        for (token, vector) in entries {
            table.insert(nfc(&token), vector)?;
        }
        Ok(table)
    }

    fn insert(&mut self, token: String, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "vector for {token:?} has {} entries, table dim is {}",
                vector.len(),
                self.dim
            )));
        }
        if let Some(bad) = vector.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("embedding entry {bad} for {token:?}")));
        }
        match self.index.get(&token) {
            Some(&at) => {
                self.vectors[at] = vector;
                Ok(true)
            }
            None => {
                self.index.insert(token.clone(), self.tokens.len());
                self.tokens.push(token);
                self.vectors.push(vector);
                Ok(false)
            }
        }
    }

    /// Parse an embedding text file. `expected_dim`, when given, must match
    /// the file contents.
    pub fn load(path: &Path, language: &str, expected_dim: Option<usize>) -> Result<(Self, LoadStats)> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Encoding {
            path: path.display().to_string(),
            message: format!("not valid UTF-8: {e}"),
        })?;
        Self::parse(text, language, expected_dim, &path.display().to_string())
    }

    fn parse(
        text: &str,
        language: &str,
        expected_dim: Option<usize>,
        path: &str,
    ) -> Result<(Self, LoadStats)> {
        let mut stats = LoadStats::default();
        let mut table: Option<EmbeddingTable> = None;
        let fmt = |line: usize, message: String| Error::Format {
            path: path.to_string(),
            line,
            message,
        };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            // A first line of exactly two numeric fields is a "count dim"
            // header; skip it.
            if table.is_none()
                && fields.len() == 2
                && fields.iter().all(|f| f.parse::<f64>().is_ok())
            {
                continue;
            }
            if fields.len() < 2 {
                return Err(fmt(
                    line_no,
                    "expected a token followed by vector entries".into(),
                ));
            }
            let token = nfc(fields[0]);
            let mut vector = Vec::with_capacity(fields.len() - 1);
            for f in &fields[1..] {
                let v: f64 = f.parse().map_err(|_| {
                    fmt(line_no, format!("cannot parse {f:?} as a number"))
                })?;
                if !v.is_finite() {
                    return Err(fmt(line_no, format!("non-finite entry {v}")));
                }
                vector.push(v);
            }
            let t = match &mut table {
                Some(t) => t,
                None => {
                    let dim = vector.len();
                    if let Some(exp) = expected_dim {
                        if exp != dim {
                            return Err(fmt(
                                line_no,
                                format!("vector has {dim} entries, expected {exp}"),
                            ));
                        }
                    }
                    table = Some(EmbeddingTable {
                        language: language.to_string(),
                        dim,
                        tokens: Vec::new(),
                        vectors: Vec::new(),
                        index: HashMap::new(),
                    });
                    table.as_mut().unwrap()
                }
            };
            if vector.len() != t.dim {
                return Err(fmt(
                    line_no,
                    format!("vector has {} entries, expected {}", vector.len(), t.dim),
                ));
            }
            if t.insert(token, vector)? {
                stats.duplicates += 1;
            }
        }

        match table {
            Some(t) if !t.tokens.is_empty() => Ok((t, stats)),
            _ => Err(fmt(1, "no embedding rows found".into())),
        }
    }

    /// Write the table in the text format accepted by [`EmbeddingTable::load`],
    /// with a header line. Round-trips bit-exactly.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.tokens.len(), self.dim));
        for (token, vector) in self.tokens.iter().zip(&self.vectors) {
            out.push_str(token);
            for v in vector {
                // `{:?}` prints the shortest representation that parses back
                // to the same f64
                out.push_str(&format!(" {v:?}"));
            }
            out.push('\n');
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Vector for a token (NFC-normalized before lookup).
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(&nfc(token)).map(|&i| self.vectors[i].as_slice())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(&nfc(token))
    }

    /// Tokens in insertion order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|s| s.as_str())
    }
}

/// A word pair with its binary relation label: 0 synonym, 1 antonym.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPair {
    pub w1: String,
    pub w2: String,
    pub label: u8,
    pub language: String,
}

impl LabeledPair {
    pub fn new(w1: &str, w2: &str, label: u8, language: &str) -> Result<Self> {
        let w1 = nfc(w1);
        let w2 = nfc(w2);
        if label > 1 {
            return Err(Error::InvalidInput(format!(
                "label must be 0 or 1, got {label}"
            )));
        }
        if w1 == w2 {
            return Err(Error::InvalidInput(format!(
                "pair has identical words {w1:?}"
            )));
        }
        Ok(LabeledPair {
            w1,
            w2,
            label,
            language: language.to_string(),
        })
    }
}

/// A pair collection with per-language label counts.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub pairs: Vec<LabeledPair>,
}

impl Dataset {
    pub fn new(pairs: Vec<LabeledPair>) -> Self {
        Dataset { pairs }
    }

    /// `language -> (synonym count, antonym count)`.
    pub fn counts(&self) -> BTreeMap<String, (usize, usize)> {
        let mut map: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for p in &self.pairs {
            let entry = map.entry(p.language.clone()).or_default();
            if p.label == 0 {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
        map
    }
}

/// Parse a pairs TSV file.
pub fn load_pairs(path: &Path, language: &str) -> Result<Vec<LabeledPair>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Encoding {
        path: path.display().to_string(),
        message: format!("not valid UTF-8: {e}"),
    })?;
    parse_pairs(text, language, &path.display().to_string())
}

fn parse_pairs(text: &str, language: &str, path: &str) -> Result<Vec<LabeledPair>> {
    let fmt = |line: usize, message: String| Error::Format {
        path: path.to_string(),
        line,
        message,
    };
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(fmt(
                line_no,
                format!("expected 3 tab-separated columns, got {}", fields.len()),
            ));
        }
        let label: u8 = match fields[2].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(fmt(line_no, format!("label must be 0 or 1, got {other:?}")));
            }
        };
        let pair = LabeledPair::new(fields[0], fields[1], label, language)
            .map_err(|e| fmt(line_no, e.to_string()))?;
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Keep only pairs whose both tokens resolve in the table; returns the kept
/// pairs and how many were dropped.
pub fn filter_resolvable(
    pairs: Vec<LabeledPair>,
    table: &EmbeddingTable,
) -> (Vec<LabeledPair>, usize) {
    let total = pairs.len();
    let kept: Vec<LabeledPair> = pairs
        .into_iter()
        .filter(|p| table.contains(&p.w1) && table.contains(&p.w2))
        .collect();
    let dropped = total - kept.len();
    (kept, dropped)
}

/// Stratified train/dev/test split. Label proportions in each split stay
/// within one pair of the global proportion; deterministic under the rng
/// seed.
pub fn stratified_split(
    pairs: &[LabeledPair],
    fractions: (f64, f64, f64),
    rng: &mut Rng,
) -> Result<(Vec<LabeledPair>, Vec<LabeledPair>, Vec<LabeledPair>)> {
    let (ft, fd, fe) = fractions;
    if ft <= 0.0 || fd <= 0.0 || fe <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "split fractions must be positive, got {fractions:?}"
        )));
    }
    if (ft + fd + fe - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "split fractions must sum to 1, got {}",
            ft + fd + fe
        )));
    }

    let mut splits: [Vec<LabeledPair>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for class in 0..=1u8 {
        let mut idx: Vec<usize> = pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.label == class)
            .map(|(i, _)| i)
            .collect();
        rng.shuffle(&mut idx);
        let n = idx.len();
        // floor allocation, remainder to the splits with the largest
        // fractional parts (ties resolved in train, dev, test order)
        let raw = [ft * n as f64, fd * n as f64, fe * n as f64];
        let mut counts = [raw[0] as usize, raw[1] as usize, raw[2] as usize];
        let mut rem: Vec<(usize, f64)> = (0..3)
            .map(|s| (s, raw[s] - counts[s] as f64))
            .collect();
        rem.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let mut leftover = n - counts.iter().sum::<usize>();
        for (s, _) in rem {
            if leftover == 0 {
                break;
            }
            counts[s] += 1;
            leftover -= 1;
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidConfig(format!(
                "split leaves a class with zero pairs (class {class}: {n} pairs, fractions {fractions:?})"
            )));
        }
        let mut cursor = 0;
        for (s, &c) in counts.iter().enumerate() {
            for &i in &idx[cursor..cursor + c] {
                splits[s].push(pairs[i].clone());
            }
            cursor += c;
        }
    }
    let [train, dev, test] = splits;
    Ok((train, dev, test))
}

/// Partition one epoch of pairs into shuffled batches of size `batch_size`
/// (the final batch may be smaller). Every call reshuffles.
pub fn batches(
    pairs: &[LabeledPair],
    batch_size: usize,
    rng: &mut Rng,
) -> Result<Vec<Vec<LabeledPair>>> {
    if pairs.is_empty() {
        return Err(Error::InvalidConfig("cannot batch an empty dataset".into()));
    }
    if batch_size < 2 {
        return Err(Error::InvalidConfig(format!(
            "batch size must be at least 2, got {batch_size}"
        )));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    rng.shuffle(&mut order);
    Ok(order
        .chunks(batch_size)
        .map(|chunk| chunk.iter().map(|&i| pairs[i].clone()).collect())
        .collect())
}
