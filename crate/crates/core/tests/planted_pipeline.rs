use std::collections::BTreeMap;

use portrayal::context::TableSet;
use portrayal::diachronic::{correlation_matrix, transition_report};
use portrayal::embedding::load_space;
use portrayal::group_embedding::{train_decade, TrainerConfig};
use portrayal::ngram::{scan_corpus, CleaningRules, ScanOptions};
use portrayal::roster::{apply_group_map, build_index, parse_roster_export, GroupMap};
use portrayal::semaxes::{compare_decade, load_axes, top_axes, Pole, MIN_POLE_WORDS};
use portrayal::synth::{write_bundle, Bundle, PlantSpec};
use portrayal::toxicity::{adjust_lexicon, build_adjustment, load_lexicon, toxicity_rate, CONSERVATIVE_LEVEL};
use portrayal::{Decade, Group};

fn scan(bundle: &Bundle) -> TableSet {
    let mut roster = parse_roster_export(&bundle.roster).unwrap();
    let map = GroupMap::load(&bundle.group_map).unwrap();
    apply_group_map(&mut roster.persons, &map, None);
    let index = build_index(&roster.persons);
    let out = scan_corpus(&bundle.shards, &index, &CleaningRules::bundled(), &ScanOptions::default()).unwrap();
    assert_eq!(out.stats.malformed_lines, 0);
    out.tables
}

fn trainer() -> TrainerConfig {
    TrainerConfig {
        k: 20_000,
        seed: 3,
        ..Default::default()
    }
}

#[test]
fn planted_axis_and_toxicity_are_recovered() {
    let dir = tempfile::tempdir().unwrap();
    let spec = PlantSpec::default();
    let bundle = write_bundle(&spec, dir.path()).unwrap();
    let tables = scan(&bundle);
    let axes = load_axes(&bundle.axes).unwrap();
    let lexicon = load_lexicon(&bundle.lexicon, Some(CONSERVATIVE_LEVEL)).unwrap();
    let [a, b] = spec.groups();
    let last = *spec.decade_list().last().unwrap();
    let anchor = load_space(&bundle.vectors[&last], last).unwrap();
    let adjustment = build_adjustment(&anchor, &lexicon, &axes, 10, MIN_POLE_WORDS).unwrap();
    assert_eq!(adjustment.affinities[0].axis_id, "harsh");

    for decade in spec.decade_list() {
        let space = load_space(&bundle.vectors[&decade], decade).unwrap();
        let ta = &tables[&(decade, a.clone())];
        let tb = &tables[&(decade, b.clone())];
        let (va, vb) = train_decade(ta, tb, &space, &trainer()).unwrap();
        let cmp = compare_decade(&axes, &space, &va.vector, &vb.vector, MIN_POLE_WORDS).unwrap();
        let top = top_axes(&cmp.rows, 2);
        eprintln!(
            "{decade}: {} {:.3} {:.3} | {} {:.3}",
            top[0].axis_id,
            top[0].difference.projection_a,
            top[0].difference.projection_b,
            top[1].axis_id,
            top[1].difference.abs_diff
        );
        assert_eq!(top[0].axis_id, "planted");
        assert_eq!(top[0].difference.pole_a, Pole::Right);
        assert_eq!(top[0].difference.pole_b, Pole::Left);
        assert!(top[0].difference.abs_diff >= 0.2);

        let adjusted = adjust_lexicon(&space, &adjustment, &lexicon).unwrap();
        let ra = toxicity_rate(ta, &adjusted.retained).unwrap();
        let rb = toxicity_rate(tb, &adjusted.retained).unwrap();
        eprintln!("{decade}: toxicity {ra:.3} vs {rb:.3}, removed {}", adjusted.removed.len());
        assert!(ra >= 2.0 * rb);
    }
}

#[test]
fn planted_break_has_largest_ks_statistic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = PlantSpec {
        decades: 5,
        break_after: Some(1),
        ..Default::default()
    };
    let bundle = write_bundle(&spec, dir.path()).unwrap();
    let tables = scan(&bundle);
    let [a, b] = spec.groups();
    let mut by_group: BTreeMap<Group, BTreeMap<Decade, Vec<f64>>> = BTreeMap::new();
    for decade in spec.decade_list() {
        let space = load_space(&bundle.vectors[&decade], decade).unwrap();
        let (va, vb) = train_decade(&tables[&(decade, a.clone())], &tables[&(decade, b.clone())], &space, &trainer()).unwrap();
        by_group.entry(a.clone()).or_default().insert(decade, va.vector);
        by_group.entry(b.clone()).or_default().insert(decade, vb.vector);
    }
    for (group, vectors) in by_group {
        let m = correlation_matrix(group.clone(), &vectors, &spec.decade_list()).unwrap();
        let report = transition_report(&m).unwrap();
        for t in &report {
            eprintln!("{group} {}-{}: D={:.3} p={:.2e}", t.from, t.to, t.statistic, t.p_value);
        }
        let at_break = report.iter().find(|t| (t.from, t.to) == (1960, 1970)).unwrap();
        assert!(report.iter().filter(|t| t.from != 1960).all(|t| t.statistic < at_break.statistic));
    }
}
