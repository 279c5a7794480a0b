//! Per-decade, per-group context word tables and corpus statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::{Decade, Error, Group, PersonId, Result};

/// Weighted context-word counts for one (decade, group).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextTable {
    pub decade: Decade,
    pub group: Group,
    counts: BTreeMap<String, u64>,
    total_weight: u64,
    pub persons_seen: BTreeSet<PersonId>,
    pub ngrams_matched: u64,
}

impl ContextTable {
    pub fn new(decade: Decade, group: Group) -> Self {
        ContextTable {
            decade,
            group,
            counts: BTreeMap::new(),
            total_weight: 0,
            persons_seen: BTreeSet::new(),
            ngrams_matched: 0,
        }
    }

    /// Build a table from word counts (zero counts are ignored).
    pub fn from_counts<I, S>(decade: Decade, group: Group, counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut t = ContextTable::new(decade, group);
        for (w, c) in counts {
            t.add(w, c);
        }
        t
    }

    pub fn add(&mut self, word: impl Into<String>, weight: u64) {
        if weight == 0 {
            return;
        }
        *self.counts.entry(word.into()).or_insert(0) += weight;
        self.total_weight += weight;
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn is_empty(&self) -> bool {
        self.total_weight == 0
    }

    /// `count / total_weight`, 0 for absent words.
    pub fn relative_frequency(&self, word: &str) -> Result<f64> {
        if self.total_weight == 0 {
            return Err(Error::EmptyTable);
        }
        Ok(self.count(word) as f64 / self.total_weight as f64)
    }

    /// Pointwise addition of another table with the same key.
    pub fn merge_from(&mut self, other: &ContextTable) -> Result<()> {
        if self.decade != other.decade || self.group != other.group {
            return Err(Error::KeyMismatch {
                left_decade: self.decade,
                left_group: self.group.to_string(),
                right_decade: other.decade,
                right_group: other.group.to_string(),
            });
        }
        for (w, &c) in &other.counts {
            *self.counts.entry(w.clone()).or_insert(0) += c;
        }
        self.total_weight += other.total_weight;
        self.persons_seen.extend(other.persons_seen.iter().copied());
        self.ngrams_matched += other.ngrams_matched;
        Ok(())
    }

    /// File name used by [`write_tables`].
    pub fn file_name(&self) -> String {
        format!("{}_{}.tsv", self.decade, self.group)
    }

    /// Serialize as a header line followed by `word<TAB>count` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let persons: Vec<String> = self.persons_seen.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(
            out,
            "#decade={}\tgroup={}\ttotal_weight={}\tngrams={}\tpersons={}",
            self.decade,
            self.group,
            self.total_weight,
            self.ngrams_matched,
            persons.join(",")
        );
        for (w, c) in &self.counts {
            let _ = writeln!(out, "{w}\t{c}");
        }
        out
    }

    pub fn from_tsv(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|h| h.strip_prefix('#'))
            .ok_or_else(|| Error::parse(path, 1, "missing table header"))?;
        let mut fields = BTreeMap::new();
        for part in header.split('\t') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::parse(path, 1, format!("bad header field {part:?}")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::parse(path, 1, format!("header lacks {k}")))
        };
        let num = |k: &str| -> Result<u64> {
            get(k)?
                .parse()
                .map_err(|_| Error::parse(path, 1, format!("bad {k}")))
        };
        let decade: Decade = get("decade")?
            .parse()
            .map_err(|_| Error::parse(path, 1, "bad decade"))?;
        let mut table = ContextTable::new(decade, Group::new(get("group")?));
        table.ngrams_matched = num("ngrams")?;
        for id in get("persons")?.split(',').filter(|s| !s.is_empty()) {
            table.persons_seen.insert(
                id.parse()
                    .map_err(|_| Error::parse(path, 1, format!("bad person id {id:?}")))?,
            );
        }
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (w, c) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::parse(path, i + 2, "expected word<TAB>count"))?;
            let c: u64 = c
                .parse()
                .map_err(|_| Error::parse(path, i + 2, format!("bad count {c:?}")))?;
            if c == 0 {
                return Err(Error::parse(path, i + 2, "zero count"));
            }
            table.add(w, c);
        }
        if table.total_weight != num("total_weight")? {
            return Err(Error::parse(path, 1, "total_weight does not match counts"));
        }
        Ok(table)
    }
}

/// Merge tables sharing one (decade, group).
pub fn merge<'a>(tables: impl IntoIterator<Item = &'a ContextTable>) -> Result<Option<ContextTable>> {
    let mut iter = tables.into_iter();
    let Some(first) = iter.next() else {
        return Ok(None);
    };
    let mut acc = first.clone();
    for t in iter {
        acc.merge_from(t)?;
    }
    Ok(Some(acc))
}

/// Tables keyed by (decade, group).
pub type TableSet = BTreeMap<(Decade, Group), ContextTable>;

/// Merge `other` into `into`, keyed by (decade, group).
pub fn merge_sets(into: &mut TableSet, other: TableSet) -> Result<()> {
    for (key, table) in other {
        match into.get_mut(&key) {
            Some(t) => t.merge_from(&table)?,
            None => {
                into.insert(key, table);
            }
        }
    }
    Ok(())
}

pub fn write_tables(dir: &Path, tables: &TableSet) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for t in tables.values() {
        let path = dir.join(t.file_name());
        fs::write(&path, t.to_tsv()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Read every `*.tsv` table in `dir`.
pub fn read_tables(dir: &Path) -> Result<TableSet> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
        .collect();
    paths.sort();
    let mut set = TableSet::new();
    for p in paths {
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let t = ContextTable::from_tsv(&text, &p)?;
        merge_sets(&mut set, [((t.decade, t.group.clone()), t)].into())?;
    }
    Ok(set)
}

/// One row of the per-(decade, group) corpus statistics. `None` marks NA.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextStatsRow {
    pub decade: Decade,
    pub group: Group,
    pub avg_context_words_per_person: Option<f64>,
    pub avg_context_length_per_ngram: Option<f64>,
    pub matched_ngrams: u64,
}

pub fn compute_stats(tables: &TableSet) -> Vec<ContextStatsRow> {
    tables
        .values()
        .map(|t| {
            let w = t.total_weight as f64;
            ContextStatsRow {
                decade: t.decade,
                group: t.group.clone(),
                avg_context_words_per_person: (!t.persons_seen.is_empty())
                    .then(|| w / t.persons_seen.len() as f64),
                avg_context_length_per_ngram: (t.ngrams_matched > 0)
                    .then(|| w / t.ngrams_matched as f64),
                matched_ngrams: t.ngrams_matched,
            }
        })
        .collect()
}

pub fn stats_csv(rows: &[ContextStatsRow]) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
    let mut out = String::from(
        "decade,group,avg_context_words_per_person,avg_context_length_per_ngram,matched_ngrams\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.decade,
            r.group,
            fmt(r.avg_context_words_per_person),
            fmt(r.avg_context_length_per_ngram),
            r.matched_ngrams
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(counts: &[(&str, u64)]) -> ContextTable {
        ContextTable::from_counts(1850, Group::new("GRP_A"), counts.iter().map(|&(w, c)| (w, c)))
    }

    #[test]
    fn merge_adds_pointwise() {
        let mut a = t(&[("a", 2)]);
        a.merge_from(&t(&[("a", 3), ("b", 1)])).unwrap();
        assert_eq!(a, t(&[("a", 5), ("b", 1)]));
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let mut a = t(&[("a", 2), ("c", 7)]);
        let orig = a.clone();
        a.merge_from(&t(&[])).unwrap();
        assert_eq!(a, orig);
    }

    #[test]
    fn merge_key_mismatch() {
        let mut a = t(&[("a", 1)]);
        let b = ContextTable::from_counts(1860, Group::new("GRP_A"), [("a", 1u64)]);
        assert!(matches!(a.merge_from(&b), Err(Error::KeyMismatch { .. })));
        let c = ContextTable::from_counts(1850, Group::new("GRP_B"), [("a", 1u64)]);
        assert!(a.merge_from(&c).is_err());
    }

    #[test]
    fn relative_frequencies() {
        assert_eq!(t(&[("a", 2), ("b", 2)]).relative_frequency("a").unwrap(), 0.5);
        assert_eq!(t(&[("a", 2), ("b", 2)]).relative_frequency("z").unwrap(), 0.0);
        assert_eq!(t(&[("a", 1), ("b", 3)]).relative_frequency("b").unwrap(), 0.75);
        assert!(matches!(t(&[]).relative_frequency("a"), Err(Error::EmptyTable)));
    }

    #[test]
    fn stats_and_na() {
        let mut a = t(&[("a", 60), ("b", 40)]);
        for i in 0..4 {
            a.persons_seen.insert(PersonId(i));
        }
        a.ngrams_matched = 40;
        let mut set = TableSet::new();
        set.insert((1850, a.group.clone()), a);
        set.insert((1860, Group::new("GRP_A")), ContextTable::new(1860, Group::new("GRP_A")));
        let rows = compute_stats(&set);
        assert_eq!(rows[0].avg_context_words_per_person, Some(25.0));
        assert_eq!(rows[0].avg_context_length_per_ngram, Some(2.5));
        assert_eq!(rows[1].avg_context_words_per_person, None);
        assert_eq!(rows[1].avg_context_length_per_ngram, None);
        assert!(stats_csv(&rows).contains("1860,GRP_A,NA,NA,0"));
    }

    #[test]
    fn tsv_round_trip() {
        let mut a = t(&[("spoke", 3), ("length", 3)]);
        a.persons_seen.insert(PersonId(0xabc));
        a.ngrams_matched = 3;
        let back = ContextTable::from_tsv(&a.to_tsv(), Path::new("x")).unwrap();
        assert_eq!(a, back);
    }

    fn arb_table() -> impl Strategy<Value = ContextTable> {
        prop::collection::vec(("[a-e]", 1u64..50), 0..12).prop_map(|v| {
            let mut table = t(&[]);
            for (w, c) in v {
                table.add(w, c);
            }
            table
        })
    }

    proptest! {
        #[test]
        fn merge_commutes_and_associates(a in arb_table(), b in arb_table(), c in arb_table()) {
            let ab = merge([&a, &b]).unwrap().unwrap();
            let ba = merge([&b, &a]).unwrap().unwrap();
            prop_assert_eq!(&ab, &ba);
            let ab_c = merge([&ab, &c]).unwrap().unwrap();
            let bc = merge([&b, &c]).unwrap().unwrap();
            let a_bc = merge([&a, &bc]).unwrap().unwrap();
            prop_assert_eq!(ab_c, a_bc);
        }

        #[test]
        fn relative_frequencies_sum_to_one(a in arb_table()) {
            prop_assume!(!a.is_empty());
            let s: f64 = a.counts().keys().map(|w| a.relative_frequency(w).unwrap()).sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
    }
}
