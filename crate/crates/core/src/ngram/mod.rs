//! N-gram corpus ingestion: record parsing, name matching and context
//! extraction.

mod clean;
mod scan;

use std::ops::Range;

use crate::roster::RosterIndex;
use crate::{bucket_by_decade, Decade, Error, Group, PersonId, Result};

pub use clean::{Cleaned, CleaningRules, BUNDLED_STOPWORDS};
pub use scan::{scan_corpus, scan_lines, write_scan_stats, ScanOptions, ScanOutput, ScanStats};

/// Order of the n-grams this crate ingests.
pub const NGRAM_ORDER: usize = 5;

/// Minimum age at which a person can appear in print.
pub const MIN_AGE_IN_PRINT: i32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearEntry {
    pub year: i32,
    pub match_count: u64,
    pub volume_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramRecord {
    pub tokens: [String; NGRAM_ORDER],
    pub entries: Vec<YearEntry>,
}

fn malformed(line: &str, why: &str) -> Error {
    let mut shown: String = line.chars().take(80).collect();
    if shown.len() < line.len() {
        shown.push('…');
    }
    Error::MalformedLine(format!("{why}: {shown:?}"))
}

/// Parse `w1 w2 w3 w4 w5<TAB>year,match,volume<TAB>...`.
pub fn parse_ngram_line(line: &str) -> Result<NgramRecord> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let mut fields = line.split('\t');
    let ngram = fields.next().unwrap_or("");
    let tokens: Vec<&str> = ngram.split(' ').collect();
    if tokens.len() != NGRAM_ORDER || tokens.iter().any(|t| t.is_empty()) {
        return Err(malformed(line, "expected 5 tokens"));
    }
    let mut entries = Vec::new();
    for field in fields {
        let mut parts = field.split(',');
        let (Some(y), Some(m), Some(v), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(malformed(line, "expected year,match_count,volume_count"));
        };
        let year: i32 = y.parse().map_err(|_| malformed(line, "non-numeric year"))?;
        let match_count: u64 = m.parse().map_err(|_| malformed(line, "non-numeric match count"))?;
        let volume_count: u64 = v.parse().map_err(|_| malformed(line, "non-numeric volume count"))?;
        if match_count == 0 || volume_count == 0 {
            return Err(malformed(line, "zero count"));
        }
        if entries.last().is_some_and(|e: &YearEntry| e.year >= year) {
            return Err(malformed(line, "years not strictly increasing"));
        }
        entries.push(YearEntry {
            year,
            match_count,
            volume_count,
        });
    }
    if entries.is_empty() {
        return Err(malformed(line, "no year entries"));
    }
    let tokens: [String; NGRAM_ORDER] = std::array::from_fn(|i| tokens[i].to_string());
    Ok(NgramRecord { tokens, entries })
}

/// A roster name found in a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameMatch {
    pub person: PersonId,
    pub span: Range<usize>,
}

/// Every run of adjacent raw tokens equal to a roster full name
/// (case-sensitive). Overlapping matches are all reported, ordered by start
/// position, then by candidate order in the index.
pub fn match_person(tokens: &[String], index: &RosterIndex) -> Vec<NameMatch> {
    let mut out = Vec::new();
    for start in 0..tokens.len() {
        for (seq, id) in index.candidates(&tokens[start]) {
            let end = start + seq.len();
            if end <= tokens.len() && tokens[start..end] == seq[..] {
                out.push(NameMatch {
                    person: *id,
                    span: start..end,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BirthGate {
    Accept,
    Reject,
    /// Birth year unknown: accepted, but worth counting.
    AcceptUnknown,
}

/// Accept a year entry only when the person was at least
/// [`MIN_AGE_IN_PRINT`] years old.
pub fn birth_gate(birth_year: Option<i32>, year: i32) -> BirthGate {
    match birth_year {
        None => BirthGate::AcceptUnknown,
        Some(b) if year >= b + MIN_AGE_IN_PRINT => BirthGate::Accept,
        Some(_) => BirthGate::Reject,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextEvent {
    pub decade: Decade,
    pub group: Group,
    pub word: String,
    pub weight: u64,
    pub person: PersonId,
}

/// Cleaned context words of a record outside the name span. Words equal to
/// a (lowercased) token of the name are dropped as well.
pub fn context_words(record: &NgramRecord, span: &Range<usize>, rules: &CleaningRules) -> Vec<String> {
    let name_lower: Vec<String> = record.tokens[span.clone()]
        .iter()
        .map(|t| t.to_lowercase())
        .collect();
    record
        .tokens
        .iter()
        .enumerate()
        .filter(|(i, _)| !span.contains(i))
        .filter_map(|(_, t)| match rules.clean_token(t) {
            Cleaned::Word(w) if !name_lower.contains(&w) => Some(w),
            _ => None,
        })
        .collect()
}

/// One event per (context word, year entry) with the entry's match count as
/// weight.
pub fn extract_context(
    record: &NgramRecord,
    m: &NameMatch,
    rules: &CleaningRules,
    group: &Group,
) -> Vec<ContextEvent> {
    extract_context_where(record, m, rules, group, |_| true)
}

/// [`extract_context`] restricted to the year entries accepted by `keep`.
pub fn extract_context_where(
    record: &NgramRecord,
    m: &NameMatch,
    rules: &CleaningRules,
    group: &Group,
    keep: impl Fn(&YearEntry) -> bool,
) -> Vec<ContextEvent> {
    let words = context_words(record, &m.span, rules);
    let mut events = Vec::new();
    for entry in record.entries.iter().filter(|e| keep(e)) {
        for w in &words {
            events.push(ContextEvent {
                decade: bucket_by_decade(entry.year),
                group: group.clone(),
                word: w.clone(),
                weight: entry.match_count,
                person: m.person,
            });
        }
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roster::{apply_group_map, build_index, parse_roster_text, GroupMap};
    use proptest::prelude::*;
    use std::collections::BTreeMap;
    use std::path::Path;

    fn record(tokens: [&str; 5], entries: &[(i32, u64)]) -> NgramRecord {
        NgramRecord {
            tokens: tokens.map(str::to_string),
            entries: entries
                .iter()
                .map(|&(year, match_count)| YearEntry {
                    year,
                    match_count,
                    volume_count: 1,
                })
                .collect(),
        }
    }

    fn index(names: &[&str]) -> RosterIndex {
        let mut text = String::from("name\tdob\tethnicLabel\toccupation\n");
        for (i, n) in names.iter().enumerate() {
            let label = if i % 2 == 0 { "a" } else { "b" };
            text.push_str(&format!("{n}\t1800\t{label}\tx\n"));
        }
        let mut r = parse_roster_text(&text, Path::new("r")).unwrap();
        let mut labels = BTreeMap::new();
        labels.insert("a".to_string(), Group::new("GRP_A"));
        labels.insert("b".to_string(), Group::new("GRP_B"));
        apply_group_map(&mut r.persons, &GroupMap::new(labels, Group::other()).unwrap(), None);
        build_index(&r.persons)
    }

    #[test]
    fn parse_valid_line() {
        let r = parse_ngram_line("A B C D E\t1901,4,2\t1902,1,1").unwrap();
        assert_eq!(r.tokens, ["A", "B", "C", "D", "E"].map(String::from));
        assert_eq!(
            r.entries,
            vec![
                YearEntry { year: 1901, match_count: 4, volume_count: 2 },
                YearEntry { year: 1902, match_count: 1, volume_count: 1 },
            ]
        );
    }

    #[test]
    fn parse_rejects_bad_lines() {
        for line in [
            "A B C D\t1901,4,2",
            "A B C D E\t1901,x,2",
            "A B C D E F\t1901,4,2",
            "A B C D E",
            "A B C D E\t1901,4",
            "A B C D E\t1901,0,1",
            "A B C D E\t1902,1,1\t1901,1,1",
            "A  B C D E\t1901,4,2",
        ] {
            assert!(matches!(parse_ngram_line(line), Err(Error::MalformedLine(_))), "{line}");
        }
    }

    #[test]
    fn match_exact_case_sensitive() {
        let idx = index(&["Frederick Douglass"]);
        let toks = ["Frederick", "Douglass", "spoke", "at", "length"].map(String::from);
        let m = match_person(&toks, &idx);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].span, 0..2);
        let lower = ["frederick", "douglass", "spoke", "at", "length"].map(String::from);
        assert!(match_person(&lower, &idx).is_empty());
    }

    #[test]
    fn overlapping_matches_reported() {
        let idx = index(&["John Quincy Adams", "Quincy Adams"]);
        let toks = ["John", "Quincy", "Adams", "was", "here"].map(String::from);
        let spans: Vec<_> = match_person(&toks, &idx).into_iter().map(|m| m.span).collect();
        assert_eq!(spans, vec![0..3, 1..3]);
    }

    #[test]
    fn extract_drops_stopwords_and_name() {
        let rules = CleaningRules::bundled();
        let r = record(["Frederick", "Douglass", "spoke", "at", "length"], &[(1855, 3)]);
        let m = NameMatch { person: PersonId(1), span: 0..2 };
        let ev = extract_context(&r, &m, &rules, &Group::new("GRP_A"));
        let got: Vec<_> = ev.iter().map(|e| (e.decade, e.word.as_str(), e.weight)).collect();
        assert_eq!(got, vec![(1850, "spoke", 3), (1850, "length", 3)]);
    }

    #[test]
    fn extract_all_stopwords_is_empty() {
        let rules = CleaningRules::bundled();
        let r = record(["of", "the", "John", "Brown", "and"], &[(1855, 3)]);
        let m = NameMatch { person: PersonId(1), span: 2..4 };
        assert!(extract_context(&r, &m, &rules, &Group::new("GRP_A")).is_empty());
    }

    #[test]
    fn extract_expands_per_year_entry() {
        let rules = CleaningRules::bundled();
        let r = record(["Frederick", "Douglass", "spoke", "at", "length"], &[(1855, 3), (1861, 2)]);
        let m = NameMatch { person: PersonId(1), span: 0..2 };
        let got: Vec<_> = extract_context(&r, &m, &rules, &Group::new("GRP_A"))
            .iter()
            .map(|e| (e.decade, e.word.clone(), e.weight))
            .collect();
        assert_eq!(
            got,
            vec![
                (1850, "spoke".into(), 3),
                (1850, "length".into(), 3),
                (1860, "spoke".into(), 2),
                (1860, "length".into(), 2),
            ]
        );
    }

    #[test]
    fn birth_gate_boundary() {
        assert_eq!(birth_gate(Some(1840), 1845), BirthGate::Reject);
        assert_eq!(birth_gate(Some(1840), 1849), BirthGate::Reject);
        assert_eq!(birth_gate(Some(1840), 1850), BirthGate::Accept);
        assert_eq!(birth_gate(None, 1700), BirthGate::AcceptUnknown);
    }

    fn arb_record() -> impl Strategy<Value = NgramRecord> {
        let tok = prop_oneof![
            Just("the".to_string()),
            Just("_NOUN_".to_string()),
            Just("1887".to_string()),
            "[A-Za-z]{1,6}(_VERB)?",
        ];
        (
            prop::array::uniform5(tok),
            prop::collection::btree_map(1800i32..2000, 1u64..100, 1..4),
        )
            .prop_map(|(tokens, entries)| NgramRecord {
                tokens,
                entries: entries
                    .into_iter()
                    .map(|(year, match_count)| YearEntry { year, match_count, volume_count: 1 })
                    .collect(),
            })
    }

    proptest! {
        #[test]
        fn weight_conservation_and_no_name_leak(r in arb_record(), start in 0usize..4, len in 1usize..3) {
            let rules = CleaningRules::bundled();
            let end = (start + len).min(5);
            let m = NameMatch { person: PersonId(7), span: start..end };
            let events = extract_context(&r, &m, &rules, &Group::new("GRP_A"));
            let words = context_words(&r, &m.span, &rules);
            let total: u64 = events.iter().map(|e| e.weight).sum();
            let mass: u64 = r.entries.iter().map(|e| e.match_count).sum();
            prop_assert_eq!(total, words.len() as u64 * mass);
            for e in &events {
                for t in &r.tokens[m.span.clone()] {
                    prop_assert_ne!(&e.word, t);
                    prop_assert_ne!(&e.word, &t.to_lowercase());
                }
                prop_assert!(e.weight >= 1);
                prop_assert!(!rules.is_stopword(&e.word));
            }
        }
    }
}
