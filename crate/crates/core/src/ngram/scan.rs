//! Parallel shard scanning with a deterministic merge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use log::warn;
use rayon::prelude::*;

use super::{birth_gate, extract_context_where, match_person, parse_ngram_line, BirthGate, CleaningRules};
use crate::context::{merge_sets, ContextTable, TableSet};
use crate::roster::RosterIndex;
use crate::{bucket_by_decade, DecadeRange, Error, PersonId, Result};

const BATCH_LINES: usize = 4096;

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub decades: DecadeRange,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            decades: DecadeRange::default(),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanStats {
    pub lines: u64,
    pub malformed_lines: u64,
    /// Records with at least one roster match.
    pub matched_records: u64,
    /// Year entries dropped because the person was younger than the minimum age.
    pub birth_rejected_entries: u64,
    /// Year entries accepted for persons with unknown birth year.
    pub unknown_birth_entries: u64,
    /// Year entries outside the configured decade range.
    pub out_of_range_entries: u64,
    pub matched_persons: BTreeSet<PersonId>,
    pub failed_shards: Vec<(PathBuf, String)>,
}

impl ScanStats {
    fn absorb(&mut self, other: ScanStats) {
        self.lines += other.lines;
        self.malformed_lines += other.malformed_lines;
        self.matched_records += other.matched_records;
        self.birth_rejected_entries += other.birth_rejected_entries;
        self.unknown_birth_entries += other.unknown_birth_entries;
        self.out_of_range_entries += other.out_of_range_entries;
        self.matched_persons.extend(other.matched_persons);
        self.failed_shards.extend(other.failed_shards);
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScanOutput {
    pub tables: TableSet,
    pub stats: ScanStats,
}

/// Scan an iterator of corpus lines into partial tables.
pub fn scan_lines<I, S>(
    lines: I,
    index: &RosterIndex,
    rules: &CleaningRules,
    opts: &ScanOptions,
) -> ScanOutput
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = ScanOutput::default();
    for line in lines {
        let line = line.as_ref();
        if line.trim().is_empty() {
            continue;
        }
        out.stats.lines += 1;
        let record = match parse_ngram_line(line) {
            Ok(r) => r,
            Err(_) => {
                out.stats.malformed_lines += 1;
                continue;
            }
        };
        let matches = match_person(&record.tokens, index);
        if matches.is_empty() {
            continue;
        }
        out.stats.matched_records += 1;
        for m in &matches {
            let Some(person) = index.person(m.person) else {
                continue;
            };
            let group = index.group_label(person.group_idx);
            let mut accepted = Vec::new();
            for e in &record.entries {
                if !opts.decades.contains(bucket_by_decade(e.year)) {
                    out.stats.out_of_range_entries += 1;
                    continue;
                }
                match birth_gate(person.birth_year, e.year) {
                    BirthGate::Reject => {
                        out.stats.birth_rejected_entries += 1;
                        continue;
                    }
                    BirthGate::AcceptUnknown => out.stats.unknown_birth_entries += 1,
                    BirthGate::Accept => {}
                }
                accepted.push(e.year);
            }
            if accepted.is_empty() {
                continue;
            }
            out.stats.matched_persons.insert(m.person);
            for e in record.entries.iter().filter(|e| accepted.contains(&e.year)) {
                let decade = bucket_by_decade(e.year);
                let table = out
                    .tables
                    .entry((decade, group.clone()))
                    .or_insert_with(|| ContextTable::new(decade, group.clone()));
                table.persons_seen.insert(m.person);
                table.ngrams_matched += e.match_count;
            }
            let events =
                extract_context_where(&record, m, rules, group, |e| accepted.contains(&e.year));
            for ev in events {
                if let Some(t) = out.tables.get_mut(&(ev.decade, ev.group)) {
                    t.add(ev.word, ev.weight);
                }
            }
        }
    }
    out
}

fn open_shard(path: &Path) -> std::io::Result<Box<dyn Read + Send>> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(MultiGzDecoder::new(file)))
    } else {
        Ok(Box::new(file))
    }
}

fn scan_shard(
    path: &Path,
    index: &RosterIndex,
    rules: &CleaningRules,
    opts: &ScanOptions,
) -> std::io::Result<ScanOutput> {
    let mut reader = BufReader::with_capacity(1 << 20, open_shard(path)?);
    let mut buf = Vec::new();
    let mut out = ScanOutput::default();
    let mut batch: Vec<String> = Vec::with_capacity(BATCH_LINES);
    let mut invalid_utf8 = 0;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n > 0 {
            match std::str::from_utf8(&buf) {
                Ok(s) => batch.push(s.to_string()),
                Err(_) => invalid_utf8 += 1,
            }
        }
        if batch.len() >= BATCH_LINES || n == 0 {
            let part = scan_lines(batch.drain(..), index, rules, opts);
            merge_sets(&mut out.tables, part.tables).expect("keys agree by construction");
            out.stats.absorb(part.stats);
        }
        if n == 0 {
            break;
        }
    }
    out.stats.lines += invalid_utf8;
    out.stats.malformed_lines += invalid_utf8;
    Ok(out)
}

/// Scan shard files (plain or `.gz`) in parallel. A shard that fails to read
/// is skipped entirely and listed in [`ScanStats::failed_shards`]. The
/// result does not depend on shard order or partitioning.
pub fn scan_corpus(
    shards: &[PathBuf],
    index: &RosterIndex,
    rules: &CleaningRules,
    opts: &ScanOptions,
) -> Result<ScanOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let parts: Vec<(PathBuf, std::io::Result<ScanOutput>)> = pool.install(|| {
        shards
            .par_iter()
            .map(|p| (p.clone(), scan_shard(p, index, rules, opts)))
            .collect()
    });
    let mut out = ScanOutput::default();
    for (path, part) in parts {
        match part {
            Ok(part) => {
                merge_sets(&mut out.tables, part.tables)?;
                out.stats.absorb(part.stats);
            }
            Err(e) => {
                warn!("skipping shard {}: {e}", path.display());
                out.stats.failed_shards.push((path, e.to_string()));
            }
        }
    }
    out.stats.failed_shards.sort();
    Ok(out)
}

/// CSV with one row per (decade, group):
/// `decade,group,matched_ngrams,matched_persons,total_context_weight`.
pub fn write_scan_stats(tables: &TableSet) -> String {
    let mut out = String::from("decade,group,matched_ngrams,matched_persons,total_context_weight\n");
    let rows: BTreeMap<_, _> = tables.iter().collect();
    for ((decade, group), t) in rows {
        let _ = writeln!(
            out,
            "{decade},{group},{},{},{}",
            t.ngrams_matched,
            t.persons_seen.len(),
            t.total_weight()
        );
    }
    out
}
