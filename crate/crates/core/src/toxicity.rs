//! Lexicon-based toxicity rates with a per-decade lexicon adjustment.
//!
//! Toxic words can drift in meaning. The adjustment fixes the ten axes whose
//! poles are most similar to the lexicon in an anchor decade, records which
//! pole each toxic word leans to there, and drops a word from a decade's
//! lexicon when it leans the other way on a strict majority of those axes.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;

use crate::context::ContextTable;
use crate::embedding::{cosine, mean_vector, EmbeddingSpace};
use crate::roster::{column_index, delimited_reader};
use crate::semaxes::{axis_vector, AxisVector, Pole, SemanticAxis};
use crate::{Decade, Error, Group, Result};

pub const DEFAULT_ANCHOR_DECADE: Decade = 1990;
pub const DEFAULT_TOP_AXES: usize = 10;
pub const CONSERVATIVE_LEVEL: &str = "conservative";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub category: String,
    pub level: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToxicLexicon {
    pub words: BTreeMap<String, LexiconEntry>,
    pub version: String,
}

impl ToxicLexicon {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains_key(word)
    }

    pub fn word_set(&self) -> BTreeSet<String> {
        self.words.keys().cloned().collect()
    }
}

/// Parse a delimited lexicon with columns `lemma`, `category`, `level`.
/// Lemmas are lowercased; with `level` set only matching rows are kept.
pub fn parse_lexicon(text: &str, path: &Path, level: Option<&str>) -> Result<ToxicLexicon> {
    let mut reader = delimited_reader(text);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    let lemma_col = column_index(&headers, "lemma", path)?;
    let category_col = column_index(&headers, "category", path)?;
    let level_col = column_index(&headers, "level", path)?;
    let mut words = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
        let field = |c: usize| record.get(c).unwrap_or("").trim();
        let row_level = field(level_col);
        if level.is_some_and(|l| !row_level.eq_ignore_ascii_case(l)) {
            continue;
        }
        let lemma = field(lemma_col).to_lowercase();
        if lemma.is_empty() {
            continue;
        }
        words.entry(lemma).or_insert_with(|| LexiconEntry {
            category: field(category_col).to_string(),
            level: row_level.to_lowercase(),
        });
    }
    if words.is_empty() {
        return Err(Error::EmptyLexicon);
    }
    let version = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(ToxicLexicon { words, version })
}

pub fn load_lexicon(path: &Path, level: Option<&str>) -> Result<ToxicLexicon> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon(&text, path, level)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisAffinity {
    pub axis_id: String,
    pub score: f64,
}

/// Score every axis usable in `space` by the mean, over lexicon words with
/// vectors, of the larger cosine to the two pole means. Returns the `top_n`
/// best, ties broken by axis id.
pub fn rank_axes_by_toxic_affinity(
    space: &EmbeddingSpace,
    lexicon: &ToxicLexicon,
    axes: &[SemanticAxis],
    top_n: usize,
    min_words: usize,
) -> Result<Vec<AxisAffinity>> {
    let toxic: Vec<&[f64]> = lexicon
        .words
        .keys()
        .filter_map(|w| space.usable_vector(w))
        .collect();
    let mut scored = Vec::new();
    for axis in axes {
        let (left, right) = match (
            mean_vector(&axis.left, space, min_words),
            mean_vector(&axis.right, space, min_words),
        ) {
            (Ok((l, _)), Ok((r, _))) => (l, r),
            _ => continue,
        };
        if axis_vector(axis, space, min_words).is_err() {
            continue;
        }
        let mut total = 0.0;
        for v in &toxic {
            total += cosine(v, &left)?.max(cosine(v, &right)?);
        }
        let score = if toxic.is_empty() { 0.0 } else { total / toxic.len() as f64 };
        scored.push(AxisAffinity {
            axis_id: axis.id.clone(),
            score,
        });
    }
    if scored.is_empty() {
        return Err(Error::NoUsableAxes);
    }
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.axis_id.cmp(&b.axis_id))
    });
    if scored.len() < top_n {
        warn!("only {} axes usable in the anchor decade, wanted {top_n}", scored.len());
    }
    scored.truncate(top_n);
    Ok(scored)
}

/// Side of the axis the word leans to. A cosine of exactly zero is `Left`.
pub fn word_side(word: &[f64], axis: &[f64]) -> Result<Pole> {
    Ok(if cosine(word, axis)? > 0.0 { Pole::Right } else { Pole::Left })
}

/// A word is removed when it flipped on a strict majority of the axes.
pub fn is_removed(flips: usize, axes: usize) -> bool {
    2 * flips > axes
}

/// Reference axes and per-word sides fixed in the anchor decade.
#[derive(Debug, Clone, PartialEq)]
pub struct ToxicityAdjustment {
    pub anchor_decade: Decade,
    pub top_axes: Vec<SemanticAxis>,
    pub affinities: Vec<AxisAffinity>,
    /// Side per top axis, for lexicon words with a vector in the anchor space.
    pub reference_sides: BTreeMap<String, Vec<Pole>>,
    pub min_words: usize,
}

pub fn build_adjustment(
    anchor: &EmbeddingSpace,
    lexicon: &ToxicLexicon,
    axes: &[SemanticAxis],
    top_n: usize,
    min_words: usize,
) -> Result<ToxicityAdjustment> {
    let affinities = rank_axes_by_toxic_affinity(anchor, lexicon, axes, top_n, min_words)?;
    let top_axes: Vec<SemanticAxis> = affinities
        .iter()
        .map(|a| {
            axes.iter()
                .find(|x| x.id == a.axis_id)
                .expect("ranked axes come from the input")
                .clone()
        })
        .collect();
    let vectors = top_axes
        .iter()
        .map(|a| axis_vector(a, anchor, min_words))
        .collect::<Result<Vec<AxisVector>>>()?;
    let mut reference_sides = BTreeMap::new();
    for word in lexicon.words.keys() {
        if let Some(v) = anchor.usable_vector(word) {
            let sides = vectors
                .iter()
                .map(|a| word_side(v, &a.vector))
                .collect::<Result<Vec<_>>>()?;
            reference_sides.insert(word.clone(), sides);
        }
    }
    Ok(ToxicityAdjustment {
        anchor_decade: anchor.decade,
        top_axes,
        affinities,
        reference_sides,
        min_words,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdjustedLexicon {
    pub decade: Decade,
    pub retained: BTreeSet<String>,
    pub removed: BTreeSet<String>,
    /// Top axes not usable in this decade's space.
    pub unusable_axes: Vec<String>,
}

/// Recompute the top axes in `space` and split the lexicon into retained and
/// removed words. Words without a vector here or in the anchor are retained.
/// Flips are counted over the axes usable in this decade; the majority is
/// taken over all top axes.
pub fn adjust_lexicon(
    space: &EmbeddingSpace,
    adjustment: &ToxicityAdjustment,
    lexicon: &ToxicLexicon,
) -> Result<AdjustedLexicon> {
    let mut out = AdjustedLexicon {
        decade: space.decade,
        ..Default::default()
    };
    let mut vectors: Vec<Option<AxisVector>> = Vec::with_capacity(adjustment.top_axes.len());
    for axis in &adjustment.top_axes {
        match axis_vector(axis, space, adjustment.min_words) {
            Ok(v) => vectors.push(Some(v)),
            Err(Error::AxisExcluded { .. } | Error::ZeroAxis(_)) => {
                out.unusable_axes.push(axis.id.clone());
                vectors.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    for word in lexicon.words.keys() {
        let (Some(v), Some(reference)) = (space.usable_vector(word), adjustment.reference_sides.get(word)) else {
            out.retained.insert(word.clone());
            continue;
        };
        let mut flips = 0;
        for (axis, &side) in vectors.iter().zip(reference) {
            if let Some(axis) = axis {
                if word_side(v, &axis.vector)? != side {
                    flips += 1;
                }
            }
        }
        if is_removed(flips, adjustment.top_axes.len()) {
            out.removed.insert(word.clone());
        } else {
            out.retained.insert(word.clone());
        }
    }
    Ok(out)
}

/// Percentage of the table's context weight on words of `retained`.
pub fn toxicity_rate(table: &ContextTable, retained: &BTreeSet<String>) -> Result<f64> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let toxic: u64 = table
        .counts()
        .iter()
        .filter(|(w, _)| retained.contains(*w))
        .map(|(_, c)| c)
        .sum();
    Ok(100.0 * toxic as f64 / table.total_weight() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToxicityRow {
    pub decade: Decade,
    pub group: Group,
    pub toxicity_percent: f64,
    pub removed_word_count: usize,
}

pub fn toxicity_csv(rows: &[ToxicityRow]) -> String {
    let mut out = String::from("decade,group,toxicity_percent,removed_word_count\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{}",
            r.decade, r.group, r.toxicity_percent, r.removed_word_count
        );
    }
    out
}

/// `decade,removed_words` with words joined by spaces.
pub fn removed_words_csv(adjusted: &[AdjustedLexicon]) -> String {
    let mut out = String::from("decade,removed_count,removed_words\n");
    for a in adjusted {
        let words: Vec<&str> = a.removed.iter().map(String::as_str).collect();
        let _ = writeln!(out, "{},{},{}", a.decade, words.len(), words.join(" "));
    }
    out
}
