//! Pipeline subcommands. Each writes under the configured output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use log::{info, warn};
use portrayal::context::{compute_stats, read_tables, stats_csv, write_tables, TableSet};
use portrayal::diachronic::{correlation_matrix, transition_report, transitions_csv};
use portrayal::embedding::{load_space, EmbeddingSpace};
use portrayal::group_embedding::{read_group_vectors, train_decade, write_group_vectors, TrainerConfig};
use portrayal::ngram::{scan_corpus, write_scan_stats, CleaningRules, ScanOptions};
use portrayal::roster::{apply_group_map, build_index, fetch_roster, parse_roster_export, FetchSource, GroupMap, GroupOverrides};
use portrayal::semaxes::{compare_decade, load_axes, top_axes, AxisComparison, ExcludedAxis};
use portrayal::synth::{write_bundle, Bundle, PlantSpec, VECTOR_PATTERN};
use portrayal::toxicity::{
    adjust_lexicon, build_adjustment, load_lexicon, removed_words_csv, toxicity_csv, toxicity_rate, ToxicityRow,
};
use portrayal::{Decade, Error, Group};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::plot;

type Result<T> = std::result::Result<T, CliError>;

pub const CONTEXT_DIR: &str = "context";
pub const VECTORS_FILE: &str = "vectors/group_vectors.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    Corr,
    Axes,
    Toxicity,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Corr => "corr",
            Analysis::Axes => "axes",
            Analysis::Toxicity => "toxicity",
        }
    }
}

/// Files written by a command, for the manifest.
#[derive(Debug, Default)]
pub struct Written(pub Vec<PathBuf>);

impl Written {
    fn write(&mut self, path: &Path, text: &str) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(path, text).map_err(|e| CliError::io(path, e))?;
        self.0.push(path.to_path_buf());
        Ok(())
    }
}

fn fresh_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// The two contrasted groups: from the config, else the group map targets.
pub fn resolve_groups(cfg: &RunConfig) -> Result<[Group; 2]> {
    let groups = if !cfg.groups.is_empty() {
        cfg.groups.clone()
    } else {
        let map = GroupMap::load(&cfg.require("group_map", &cfg.paths.group_map)?)?;
        map.target_groups()
    };
    match <[Group; 2]>::try_from(groups) {
        Ok(g) => Ok(g),
        Err(g) => Err(CliError::Config(format!(
            "need exactly two groups to contrast, found {}; set `groups`",
            g.len()
        ))),
    }
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<Written> {
    let roster_path = cfg.require("roster", &cfg.paths.roster)?;
    let map_path = cfg.require("group_map", &cfg.paths.group_map)?;
    let shards = cfg.shard_files()?;
    let decades = cfg.decades()?;

    let mut roster = parse_roster_export(&roster_path)?;
    let map = GroupMap::load(&map_path)?;
    let overrides = match &cfg.paths.overrides {
        Some(_) => Some(GroupOverrides::load(&cfg.require("overrides", &cfg.paths.overrides)?)?),
        None => None,
    };
    let labeling = apply_group_map(&mut roster.persons, &map, overrides.as_ref());
    let index = build_index(&roster.persons);
    let rules = match &cfg.paths.stopwords {
        Some(_) => CleaningRules::from_stopword_file(&cfg.require("stopwords", &cfg.paths.stopwords)?)?,
        None => CleaningRules::bundled(),
    };
    info!("scanning {} shards for {} persons", shards.len(), index.len());
    let out = scan_corpus(
        &shards,
        &index,
        &rules,
        &ScanOptions {
            decades,
            workers: cfg.workers,
        },
    )?;
    if out.tables.is_empty() {
        warn!("no roster name matched any n-gram; outputs are empty");
    }

    let dir = cfg.output();
    let context = dir.join(CONTEXT_DIR);
    fresh_dir(&context)?;
    let mut written = Written(write_tables(&context, &out.tables)?);
    written.write(&dir.join("context_stats.csv"), &stats_csv(&compute_stats(&out.tables)))?;
    written.write(&dir.join("scan_stats.csv"), &write_scan_stats(&out.tables))?;

    let s = &out.stats;
    let mut summary = String::from("key,value\n");
    for (k, v) in [
        ("roster_rows", roster.rows_read as u64),
        ("roster_rows_skipped", roster.rows_skipped as u64),
        ("persons", roster.persons.len() as u64),
        ("persons_labeled", labeling.labeled as u64),
        ("persons_other", labeling.other as u64),
        ("persons_ambiguous", labeling.ambiguous as u64),
        ("persons_overridden", labeling.overridden as u64),
        ("shards", shards.len() as u64),
        ("shards_failed", s.failed_shards.len() as u64),
        ("lines", s.lines),
        ("malformed_lines", s.malformed_lines),
        ("matched_records", s.matched_records),
        ("matched_persons", s.matched_persons.len() as u64),
        ("birth_rejected_entries", s.birth_rejected_entries),
        ("unknown_birth_entries", s.unknown_birth_entries),
        ("out_of_range_entries", s.out_of_range_entries),
    ] {
        let _ = writeln!(summary, "{k},{v}");
    }
    written.write(&dir.join("scan_summary.csv"), &summary)?;
    Ok(written)
}

fn load_tables(cfg: &RunConfig) -> Result<TableSet> {
    let dir = cfg.output().join(CONTEXT_DIR);
    if !dir.is_dir() {
        return Err(CliError::Config(format!(
            "{} not found; run `scan` first",
            dir.display()
        )));
    }
    Ok(read_tables(&dir)?)
}

fn load_decade_space(cfg: &RunConfig, decade: Decade) -> Result<Option<EmbeddingSpace>> {
    let path = cfg.embedding_path(decade)?;
    if !path.exists() {
        warn!("{decade}: no vector file at {}, skipped", path.display());
        return Ok(None);
    }
    Ok(Some(load_space(&path, decade)?))
}

/// Train both group vectors for every decade that has two non-empty tables
/// and a vector file. Returns the vector file path.
fn train_into(cfg: &RunConfig, trainer: &TrainerConfig, path: &Path, written: &mut Written) -> Result<PathBuf> {
    let tables = load_tables(cfg)?;
    let [a, b] = resolve_groups(cfg)?;
    let mut vectors = Vec::new();
    for decade in cfg.decades()?.iter() {
        let (Some(ta), Some(tb)) = (tables.get(&(decade, a.clone())), tables.get(&(decade, b.clone()))) else {
            warn!("{decade}: missing context for {a} or {b}, skipped");
            continue;
        };
        if ta.is_empty() || tb.is_empty() {
            warn!("{decade}: empty context table, skipped");
            continue;
        }
        let Some(space) = load_decade_space(cfg, decade)? else {
            continue;
        };
        info!("{decade}: training {a} and {b}");
        let (va, vb) = train_decade(ta, tb, &space, trainer)?;
        vectors.push(va);
        vectors.push(vb);
    }
    if vectors.is_empty() {
        warn!("no decade could be trained");
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let sidecar = write_group_vectors(path, &vectors)?;
    written.0.push(path.to_path_buf());
    written.0.push(sidecar);
    Ok(path.to_path_buf())
}

pub fn cmd_train(cfg: &RunConfig) -> Result<Written> {
    let mut written = Written::default();
    train_into(cfg, &cfg.trainer(), &cfg.output().join(VECTORS_FILE), &mut written)?;
    Ok(written)
}

type VectorsByGroup = BTreeMap<Group, BTreeMap<Decade, Vec<f64>>>;

fn load_vectors(path: &Path) -> Result<VectorsByGroup> {
    if !path.exists() {
        return Err(CliError::Config(format!("{} not found; run `train` first", path.display())));
    }
    let mut out = VectorsByGroup::new();
    for v in read_group_vectors(path)? {
        out.entry(v.group).or_default().insert(v.decade, v.vector);
    }
    Ok(out)
}

fn analyze_corr(cfg: &RunConfig, vectors: &VectorsByGroup, dir: &Path, written: &mut Written) -> Result<()> {
    let decades: Vec<Decade> = cfg.decades()?.iter().collect();
    for group in resolve_groups(cfg)? {
        let Some(by_decade) = vectors.get(&group) else {
            warn!("no vectors for {group}");
            continue;
        };
        let matrix = match correlation_matrix(group.clone(), by_decade, &decades) {
            Ok(m) => m,
            Err(Error::TooFewDecades(n)) => {
                warn!("{group}: only {n} decades with vectors, no correlation matrix");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if !matrix.missing.is_empty() {
            warn!("{group}: no vectors for decades {:?}", matrix.missing);
        }
        written.write(&dir.join(format!("{group}_matrix.csv")), &matrix.to_csv())?;
        if cfg.plots {
            written.write(&dir.join(format!("{group}_matrix.svg")), &plot::heatmap(&matrix))?;
        }
        match transition_report(&matrix) {
            Ok(tests) => written.write(&dir.join(format!("{group}_transitions.csv")), &transitions_csv(&group, &tests))?,
            Err(Error::TooFewTransitions(n)) => warn!("{group}: {n} transitions, need 3 for the transition test"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn axes_rows_csv(rows: &[AxisComparison]) -> String {
    let mut out = String::from("decade,axis,projection_a,projection_b,abs_diff,pole_a,pole_b\n");
    for r in rows {
        let d = &r.difference;
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{},{}",
            r.decade,
            r.axis_id,
            d.projection_a,
            d.projection_b,
            d.abs_diff,
            d.pole_a.as_str(),
            d.pole_b.as_str()
        );
    }
    out
}

fn top_axes_csv(groups: &[Group; 2], rows: &[(usize, AxisComparison)]) -> String {
    let mut out = String::from("decade,rank,axis,abs_diff,group_a,pole_a,words_a,group_b,pole_b,words_b\n");
    for (rank, r) in rows {
        let d = &r.difference;
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{},{},{},{},{},{}",
            r.decade,
            rank,
            r.axis_id,
            d.abs_diff,
            groups[0],
            d.pole_a.as_str(),
            r.words_a.join(" "),
            groups[1],
            d.pole_b.as_str(),
            r.words_b.join(" ")
        );
    }
    out
}

fn excluded_csv(rows: &[ExcludedAxis]) -> String {
    let mut out = String::from("decade,axis,reason\n");
    for r in rows {
        let _ = writeln!(out, "{},{},\"{}\"", r.decade, r.axis_id, r.reason.replace('"', "'"));
    }
    out
}

fn analyze_axes(cfg: &RunConfig, vectors: &VectorsByGroup, dir: &Path, written: &mut Written) -> Result<()> {
    let axes = load_axes(&cfg.require("axes", &cfg.paths.axes)?)?;
    let groups = resolve_groups(cfg)?;
    let mut all = Vec::new();
    let mut top = Vec::new();
    let mut excluded = Vec::new();
    for decade in cfg.decades()?.iter() {
        let va = vectors.get(&groups[0]).and_then(|m| m.get(&decade));
        let vb = vectors.get(&groups[1]).and_then(|m| m.get(&decade));
        let (Some(va), Some(vb)) = (va, vb) else {
            continue;
        };
        let Some(space) = load_decade_space(cfg, decade)? else {
            continue;
        };
        let cmp = compare_decade(&axes, &space, va, vb, cfg.axes.min_words)?;
        if cmp.rows.is_empty() {
            warn!("{decade}: no usable axis");
        }
        top.extend(top_axes(&cmp.rows, cfg.axes.top_k).into_iter().enumerate().map(|(i, r)| (i + 1, r)));
        all.extend(cmp.rows);
        excluded.extend(cmp.excluded);
    }
    written.write(&dir.join("axis_differences.csv"), &axes_rows_csv(&all))?;
    written.write(&dir.join("top_axes.csv"), &top_axes_csv(&groups, &top))?;
    written.write(&dir.join("excluded_axes.csv"), &excluded_csv(&excluded))?;
    Ok(())
}

fn analyze_toxicity(cfg: &RunConfig, dir: &Path, written: &mut Written) -> Result<()> {
    let level = Some(cfg.toxicity.level.as_str()).filter(|l| !l.is_empty());
    let lexicon = load_lexicon(&cfg.require("lexicon", &cfg.paths.lexicon)?, level)?;
    let axes = load_axes(&cfg.require("axes", &cfg.paths.axes)?)?;
    let tables = load_tables(cfg)?;
    let groups = resolve_groups(cfg)?;
    let anchor_decade = cfg.toxicity.anchor_decade;
    let anchor = load_decade_space(cfg, anchor_decade)?.ok_or_else(|| {
        CliError::Config(format!("no vector file for the anchor decade {anchor_decade}"))
    })?;
    let adjustment = build_adjustment(&anchor, &lexicon, &axes, cfg.toxicity.top_axes, cfg.axes.min_words)?;
    info!(
        "{} lexicon words, {} with anchor vectors",
        lexicon.len(),
        adjustment.reference_sides.len()
    );
    let mut anchor_csv = String::from("rank,axis,affinity\n");
    for (i, a) in adjustment.affinities.iter().enumerate() {
        let _ = writeln!(anchor_csv, "{},{},{:.6}", i + 1, a.axis_id, a.score);
    }

    let mut rows = Vec::new();
    let mut adjusted_all = Vec::new();
    for decade in cfg.decades()?.iter() {
        let Some(space) = load_decade_space(cfg, decade)? else {
            continue;
        };
        let adjusted = adjust_lexicon(&space, &adjustment, &lexicon)?;
        for group in &groups {
            let Some(table) = tables.get(&(decade, group.clone())).filter(|t| !t.is_empty()) else {
                continue;
            };
            rows.push(ToxicityRow {
                decade,
                group: group.clone(),
                toxicity_percent: toxicity_rate(table, &adjusted.retained)?,
                removed_word_count: adjusted.removed.len(),
            });
        }
        adjusted_all.push(adjusted);
    }
    written.write(&dir.join("anchor_axes.csv"), &anchor_csv)?;
    written.write(&dir.join("toxicity.csv"), &toxicity_csv(&rows))?;
    written.write(&dir.join("removed_words.csv"), &removed_words_csv(&adjusted_all))?;
    if cfg.plots {
        written.write(&dir.join("toxicity.svg"), &plot::lines(&rows))?;
    }
    Ok(())
}

pub fn cmd_analyze(cfg: &RunConfig, which: Analysis) -> Result<Written> {
    let out = cfg.output();
    let dir = out.join(which.name());
    fresh_dir(&dir)?;
    let mut written = Written::default();
    match which {
        Analysis::Corr => analyze_corr(cfg, &load_vectors(&out.join(VECTORS_FILE))?, &dir, &mut written)?,
        Analysis::Axes => analyze_axes(cfg, &load_vectors(&out.join(VECTORS_FILE))?, &dir, &mut written)?,
        Analysis::Toxicity => analyze_toxicity(cfg, &dir, &mut written)?,
    }
    Ok(written)
}

/// Train and analyze axes for every (k, n) cell of the sweep grid.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Written> {
    if cfg.sweep.k.is_empty() || cfg.sweep.n.is_empty() {
        return Err(CliError::Config("sweep grids must not be empty".into()));
    }
    let root = cfg.output().join("sweep");
    fresh_dir(&root)?;
    let mut written = Written::default();
    for &k in &cfg.sweep.k {
        for &n in &cfg.sweep.n {
            let cell = root.join(format!("k{k}_n{n}"));
            let trainer = TrainerConfig { k, n, ..cfg.trainer() };
            info!("sweep cell k={k} n={n}");
            let path = train_into(cfg, &trainer, &cell.join("group_vectors.txt"), &mut written)?;
            analyze_axes(cfg, &load_vectors(&path)?, &cell, &mut written)?;
        }
    }
    Ok(written)
}

/// scan, train and all three analyses.
pub fn cmd_report(cfg: &RunConfig) -> Result<Written> {
    let mut written = cmd_scan(cfg)?;
    written.0.extend(cmd_train(cfg)?.0);
    for which in [Analysis::Corr, Analysis::Axes, Analysis::Toxicity] {
        written.0.extend(cmd_analyze(cfg, which)?.0);
    }
    Ok(written)
}

/// Run config written next to a synthetic bundle.
pub fn bundle_config(spec: &PlantSpec) -> String {
    let decades = spec.decade_list();
    let last = *decades.last().expect("at least one decade");
    let [a, b] = spec.groups();
    format!(
        "seed = {seed}\noutput_dir = \"out\"\nfirst_decade = {first}\nlast_decade = {last}\ngroups = [\"{a}\", \"{b}\"]\n\n\
         [paths]\nshards = [\"shards\"]\nroster = \"roster.tsv\"\ngroup_map = \"groups.toml\"\n\
         embeddings = \"{VECTOR_PATTERN}\"\naxes = \"axes.tsv\"\nlexicon = \"lexicon.tsv\"\n\n\
         [trainer]\nk = 20000\nn = 4\n\n[toxicity]\nanchor_decade = {last}\n\n[sweep]\nk = [10000, 20000]\nn = [1, 4]\n",
        seed = spec.seed,
        first = decades[0],
    )
}

pub fn cmd_synth(spec: &PlantSpec, dir: &Path) -> Result<(Bundle, Written)> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let bundle = write_bundle(spec, dir)?;
    let mut written = Written::default();
    written.0.push(bundle.roster.clone());
    written.0.push(bundle.group_map.clone());
    written.0.extend(bundle.shards.iter().cloned());
    written.0.extend(bundle.vectors.values().cloned());
    written.0.push(bundle.axes.clone());
    written.0.push(bundle.lexicon.clone());
    written.0.push(bundle.manifest.clone());
    written.write(&dir.join("portrayal.toml"), &bundle_config(spec))?;
    Ok((bundle, written))
}

pub const DEFAULT_QUERY: &str = r#"SELECT ?item ?itemLabel ?dob ?ethnicLabel ?occupationLabel WHERE {
  ?item wdt:P31 wd:Q5 ;
        wdt:P27 wd:Q30 ;
        wdt:P172 ?ethnic ;
        wdt:P569 ?dob ;
        wdt:P106 ?occupation .
  SERVICE wikibase:label { bd:serviceParam wikibase:language "en". }
}"#;

pub fn cmd_fetch_roster(cfg: &RunConfig) -> Result<Written> {
    let out = cfg
        .paths
        .roster
        .as_ref()
        .map(|p| cfg.resolve(p))
        .ok_or_else(|| CliError::Config("paths.roster is not set".into()))?;
    let query = match &cfg.fetch.query {
        Some(q) => {
            let p = cfg.resolve(q);
            fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?
        }
        None => DEFAULT_QUERY.to_string(),
    };
    let fixture = cfg.fetch.fixture.as_ref().map(|p| cfg.resolve(p));
    let timeout = Duration::from_secs(cfg.fetch.timeout_secs.unwrap_or(300));
    let outcome = fetch_roster(cfg.fetch.endpoint.as_deref(), &query, fixture.as_deref(), &out, timeout)?;
    match (outcome.source, &outcome.fallback_reason) {
        (FetchSource::Fixture, Some(reason)) => warn!("endpoint failed ({reason}); roster replayed from fixture"),
        (FetchSource::Fixture, None) => info!("roster replayed from fixture"),
        (FetchSource::Endpoint, _) => info!("roster fetched from endpoint"),
    }
    Ok(Written(vec![out]))
}

#[derive(Serialize)]
struct ManifestFile {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    version: &'a str,
    core_version: &'a str,
    outputs: Vec<ManifestFile>,
}

/// Write `manifest-<command>.json` listing every output with its hash.
pub fn write_manifest(cfg: &RunConfig, command: &str, written: &Written, root: &Path) -> Result<PathBuf> {
    let mut files: Vec<&PathBuf> = written.0.iter().collect();
    files.sort();
    files.dedup();
    let mut outputs = Vec::new();
    for f in files {
        let bytes = fs::read(f).map_err(|e| CliError::io(f, e))?;
        let rel = f.strip_prefix(root).unwrap_or(f);
        outputs.push(ManifestFile {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    let manifest = Manifest {
        command,
        config_hash: &cfg.hash,
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION"),
        core_version: portrayal::VERSION,
        outputs,
    };
    fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
    let path = root.join(format!("manifest-{}.json", command.replace(' ', "-")));
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
