//! Pre-aligned per-decade word vectors and vector primitives.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;

use crate::{Decade, Error, Result};

/// Word vectors for one decade, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    pub decade: Decade,
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    /// Words whose vector is all zeros (kept, but unusable for cosines).
    pub zero_vectors: BTreeSet<String>,
    /// Duplicate lines replaced by a later line.
    pub duplicates: usize,
}

impl EmbeddingSpace {
    pub fn new(decade: Decade, dim: usize) -> Self {
        EmbeddingSpace {
            decade,
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            zero_vectors: BTreeSet::new(),
            duplicates: 0,
        }
    }

    /// Insert or replace a vector. Returns `true` if the word was already present.
    pub fn insert(&mut self, word: &str, vector: &[f64]) -> bool {
        assert_eq!(vector.len(), self.dim, "vector length must equal dim");
        let is_zero = vector.iter().all(|&x| x == 0.0);
        if is_zero {
            self.zero_vectors.insert(word.to_string());
        } else {
            self.zero_vectors.remove(word);
        }
        if let Some(&i) = self.index.get(word) {
            self.data[i * self.dim..(i + 1) * self.dim].copy_from_slice(vector);
            return true;
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.data.extend_from_slice(vector);
        false
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Vector usable for cosine similarity (present and non-zero).
    pub fn usable_vector(&self, word: &str) -> Option<&[f64]> {
        self.vector(word).filter(|v| v.iter().any(|&x| x != 0.0))
    }

    /// Text format: optional `count dim` header, then `word v1 ... vd`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.len(), self.dim);
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for x in self.row(i) {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn looks_like_header(parts: &[&str]) -> bool {
    parts.len() == 2 && parts.iter().all(|p| p.parse::<usize>().is_ok())
}

/// Load a whitespace-separated vector file. The dimension is taken from the
/// header if present, otherwise from the first vector line. Later duplicates
/// replace earlier ones.
pub fn load_space(path: &Path, decade: Decade) -> Result<EmbeddingSpace> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut space: Option<EmbeddingSpace> = None;
    let mut header_dim = None;
    let mut values = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.is_empty() {
            continue;
        }
        if i == 0 && looks_like_header(&parts) {
            header_dim = Some(parts[1].parse::<usize>().unwrap());
            continue;
        }
        let word = parts[0];
        let found = parts.len() - 1;
        let dim = space.as_ref().map(|s| s.dim).or(header_dim).unwrap_or(found);
        if found != dim || dim == 0 {
            return Err(Error::DimensionMismatch {
                path: path.to_path_buf(),
                line: i + 1,
                expected: dim,
                found,
            });
        }
        values.clear();
        for p in &parts[1..] {
            let x: f64 = p
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad number {p:?}")))?;
            if !x.is_finite() {
                return Err(Error::parse(path, i + 1, "non-finite value"));
            }
            values.push(x);
        }
        let s = space.get_or_insert_with(|| EmbeddingSpace::new(decade, dim));
        if s.insert(word, &values) {
            s.duplicates += 1;
            warn!("{}:{}: duplicate vector for {word:?}, keeping the later one", path.display(), i + 1);
        }
    }
    let space = space.ok_or_else(|| Error::EmptyFile(path.to_path_buf()))?;
    if !space.zero_vectors.is_empty() {
        warn!("{}: {} zero vectors", path.display(), space.zero_vectors.len());
    }
    Ok(space)
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// Cosine similarity, clamped to [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    let uu = dot(u, u);
    let vv = dot(v, v);
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(u, v) / (uu * vv).sqrt()).clamp(-1.0, 1.0))
}

/// Mean of the vectors of `words` present in the space, with the words used.
/// Zero vectors count as absent.
pub fn mean_vector<S: AsRef<str>>(
    words: &[S],
    space: &EmbeddingSpace,
    min_present: usize,
) -> Result<(Vec<f64>, Vec<String>)> {
    let mut sum = vec![0.0; space.dim()];
    let mut used = Vec::new();
    for w in words {
        if let Some(v) = space.usable_vector(w.as_ref()) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            used.push(w.as_ref().to_string());
        }
    }
    if used.len() < min_present.max(1) {
        return Err(Error::TooFewWords {
            found: used.len(),
            min: min_present.max(1),
        });
    }
    let n = used.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok((sum, used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_tmp(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_small_space() {
        let f = write_tmp("cat 1 0 0 0\ndog 0 1 0 0\nfish 0 0 1 0\n");
        let s = load_space(f.path(), 1850).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.dim(), 4);
        assert_eq!(s.vector("dog").unwrap(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn header_line_is_optional() {
        let f = write_tmp("2 3\ncat 1 0 0\ndog 0 1 0\n");
        let s = load_space(f.path(), 1850).unwrap();
        assert_eq!((s.len(), s.dim()), (2, 3));
    }

    #[test]
    fn dimension_mismatch() {
        let f = write_tmp("cat 1 0 0 0\ndog 0 1 0\n");
        assert!(matches!(
            load_space(f.path(), 1850),
            Err(Error::DimensionMismatch { line: 2, expected: 4, found: 3, .. })
        ));
    }

    #[test]
    fn duplicates_last_wins_and_zero_flagged() {
        let f = write_tmp("cat 1 0\ncat 0 2\nnull 0 0\n");
        let s = load_space(f.path(), 1850).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.duplicates, 1);
        assert_eq!(s.vector("cat").unwrap(), &[0.0, 2.0]);
        assert!(s.zero_vectors.contains("null"));
        assert!(s.usable_vector("null").is_none());
    }

    #[test]
    fn empty_file() {
        let f = write_tmp("\n");
        assert!(matches!(load_space(f.path(), 1850), Err(Error::EmptyFile(_))));
    }

    #[test]
    fn text_round_trip() {
        let mut s = EmbeddingSpace::new(1900, 2);
        s.insert("a", &[0.1, -2.5e-7]);
        s.insert("b", &[1.0 / 3.0, 7.0]);
        let f = write_tmp(&s.to_text());
        assert_eq!(load_space(f.path(), 1900).unwrap(), s);
    }

    #[test]
    fn cosine_cases() {
        assert_eq!(cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::ZeroNorm)));
    }

    #[test]
    fn mean_vector_cases() {
        let mut s = EmbeddingSpace::new(1850, 2);
        s.insert("a", &[1.0, 0.0]);
        s.insert("b", &[0.0, 1.0]);
        s.insert("c", &[3.0, 3.0]);
        let (m, used) = mean_vector(&["a", "b"], &s, 1).unwrap();
        assert_eq!(m, vec![0.5, 0.5]);
        assert_eq!(used.len(), 2);
        assert!(matches!(mean_vector(&["a", "x"], &s, 3), Err(Error::TooFewWords { found: 1, min: 3 })));
        let (m, used) = mean_vector(&["a", "x", "b", "y", "c"], &s, 3).unwrap();
        assert_eq!(m, vec![4.0 / 3.0, 4.0 / 3.0]);
        assert_eq!(used, vec!["a", "b", "c"]);
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 3).prop_filter("non-zero", |v| norm(v) > 1e-3)
    }

    proptest! {
        #[test]
        fn cosine_properties(u in vec3(), v in vec3(), a in 0.01f64..100.0, b in 0.01f64..100.0) {
            let c = cosine(&u, &v).unwrap();
            prop_assert!((c - cosine(&v, &u).unwrap()).abs() < 1e-12);
            prop_assert!((cosine(&u, &u).unwrap() - 1.0).abs() < 1e-12);
            let au: Vec<f64> = u.iter().map(|x| a * x).collect();
            let bv: Vec<f64> = v.iter().map(|x| b * x).collect();
            prop_assert!((cosine(&au, &bv).unwrap() - c).abs() < 1e-9);
        }

        #[test]
        fn mean_vector_permutation_invariant(vs in prop::collection::vec(vec3(), 1..6), seed in any::<u64>()) {
            let mut s = EmbeddingSpace::new(1850, 3);
            let words: Vec<String> = (0..vs.len()).map(|i| format!("w{i}")).collect();
            for (w, v) in words.iter().zip(&vs) {
                s.insert(w, v);
            }
            let mut shuffled = words.clone();
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let (m1, _) = mean_vector(&words, &s, 1).unwrap();
            let (m2, _) = mean_vector(&shuffled, &s, 1).unwrap();
            for (a, b) in m1.iter().zip(&m2) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
