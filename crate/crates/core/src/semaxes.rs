//! Semantic axes: bipolar adjective sets projected against group vectors.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::embedding::{cosine, mean_vector, norm, EmbeddingSpace};
use crate::{Decade, Error, Result};

/// Minimum pole words with vectors for an axis to be used.
pub const MIN_POLE_WORDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticAxis {
    pub id: String,
    pub left: Vec<String>,
    pub right: Vec<String>,
}

/// Axis vector in one decade: mean(right) - mean(left).
#[derive(Debug, Clone, PartialEq)]
pub struct AxisVector {
    pub axis_id: String,
    pub decade: Decade,
    pub vector: Vec<f64>,
    pub used_left: Vec<String>,
    pub used_right: Vec<String>,
}

fn split_pole(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parse `axis_id<TAB>left,words<TAB>right,words` lines. Blank lines and
/// `#` comments are skipped.
pub fn parse_axes(text: &str, path: &Path) -> Result<Vec<SemanticAxis>> {
    let mut seen = HashSet::new();
    let mut axes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(path, i + 1, "expected axis_id<TAB>left<TAB>right"));
        }
        let id = fields[0].trim().to_string();
        let (left, right) = (split_pole(fields[1]), split_pole(fields[2]));
        if left.is_empty() || right.is_empty() {
            return Err(Error::EmptyPole(id));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateAxis(id));
        }
        axes.push(SemanticAxis { id, left, right });
    }
    Ok(axes)
}

pub fn load_axes(path: &Path) -> Result<Vec<SemanticAxis>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_axes(&text, path)
}

pub fn axes_to_text(axes: &[SemanticAxis]) -> String {
    let mut out = String::new();
    for a in axes {
        let _ = writeln!(out, "{}\t{}\t{}", a.id, a.left.join(","), a.right.join(","));
    }
    out
}

/// Build the axis vector in `space`. Fails with [`Error::AxisExcluded`] when
/// either pole has fewer than `min_words` words with vectors, and with
/// [`Error::ZeroAxis`] when the pole means coincide.
pub fn axis_vector(axis: &SemanticAxis, space: &EmbeddingSpace, min_words: usize) -> Result<AxisVector> {
    let excluded = |e: Error| match e {
        Error::TooFewWords { .. } => Error::AxisExcluded {
            axis: axis.id.clone(),
            left: present(&axis.left, space),
            right: present(&axis.right, space),
            min: min_words,
        },
        other => other,
    };
    let (left, used_left) = mean_vector(&axis.left, space, min_words).map_err(excluded)?;
    let (right, used_right) = mean_vector(&axis.right, space, min_words).map_err(excluded)?;
    let vector: Vec<f64> = right.iter().zip(&left).map(|(r, l)| r - l).collect();
    if norm(&vector) == 0.0 {
        return Err(Error::ZeroAxis(axis.id.clone()));
    }
    Ok(AxisVector {
        axis_id: axis.id.clone(),
        decade: space.decade,
        vector,
        used_left,
        used_right,
    })
}

fn present(words: &[String], space: &EmbeddingSpace) -> usize {
    words.iter().filter(|w| space.usable_vector(w).is_some()).count()
}

/// Cosine of a group vector with an axis; positive means nearer the right pole.
pub fn project(group_vector: &[f64], axis: &AxisVector) -> Result<f64> {
    cosine(group_vector, &axis.vector)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Pole {
    Left,
    Right,
}

impl Pole {
    pub fn of_projection(p: f64) -> Pole {
        if p > 0.0 {
            Pole::Right
        } else {
            Pole::Left
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pole::Left => "left",
            Pole::Right => "right",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisDifference {
    pub projection_a: f64,
    pub projection_b: f64,
    pub abs_diff: f64,
    pub pole_a: Pole,
    pub pole_b: Pole,
}

pub fn axis_difference(a: &[f64], b: &[f64], axis: &AxisVector) -> Result<AxisDifference> {
    let pa = project(a, axis)?;
    let pb = project(b, axis)?;
    Ok(AxisDifference {
        projection_a: pa,
        projection_b: pb,
        abs_diff: (pa - pb).abs(),
        pole_a: Pole::of_projection(pa),
        pole_b: Pole::of_projection(pb),
    })
}

/// One axis compared between two group vectors in one decade.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisComparison {
    pub decade: Decade,
    pub axis_id: String,
    pub difference: AxisDifference,
    /// Up to three words of each group's nearer pole, most similar first.
    pub words_a: Vec<String>,
    pub words_b: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcludedAxis {
    pub decade: Decade,
    pub axis_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecadeComparison {
    pub rows: Vec<AxisComparison>,
    pub excluded: Vec<ExcludedAxis>,
}

/// The `n` used pole words most similar to the group vector.
fn representative_words(group: &[f64], words: &[String], space: &EmbeddingSpace, n: usize) -> Vec<String> {
    let mut scored: Vec<(f64, &String)> = words
        .iter()
        .filter_map(|w| {
            let v = space.usable_vector(w)?;
            cosine(group, v).ok().map(|c| (c, w))
        })
        .collect();
    scored.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(Ordering::Equal).then(x.1.cmp(y.1)));
    scored.into_iter().take(n).map(|(_, w)| w.clone()).collect()
}

/// Compare two group vectors on every axis usable in this decade's space.
pub fn compare_decade(
    axes: &[SemanticAxis],
    space: &EmbeddingSpace,
    group_a: &[f64],
    group_b: &[f64],
    min_words: usize,
) -> Result<DecadeComparison> {
    let mut out = DecadeComparison::default();
    for axis in axes {
        let av = match axis_vector(axis, space, min_words) {
            Ok(av) => av,
            Err(e @ (Error::AxisExcluded { .. } | Error::ZeroAxis(_))) => {
                out.excluded.push(ExcludedAxis {
                    decade: space.decade,
                    axis_id: axis.id.clone(),
                    reason: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let difference = axis_difference(group_a, group_b, &av)?;
        let pole_words = |p: Pole| match p {
            Pole::Left => &av.used_left,
            Pole::Right => &av.used_right,
        };
        out.rows.push(AxisComparison {
            decade: space.decade,
            axis_id: axis.id.clone(),
            words_a: representative_words(group_a, pole_words(difference.pole_a), space, 3),
            words_b: representative_words(group_b, pole_words(difference.pole_b), space, 3),
            difference,
        });
    }
    Ok(out)
}

/// Rows sorted by descending absolute difference, ties by axis id, truncated to `top_k`.
pub fn top_axes(rows: &[AxisComparison], top_k: usize) -> Vec<AxisComparison> {
    let mut sorted: Vec<AxisComparison> = rows.to_vec();
    sorted.sort_by(|a, b| {
        b.difference
            .abs_diff
            .partial_cmp(&a.difference.abs_diff)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.axis_id.cmp(&b.axis_id))
    });
    sorted.truncate(top_k.max(1));
    sorted
}
