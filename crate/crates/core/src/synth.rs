//! Seeded synthetic fixtures with planted ground truth.
//!
//! A bundle contains a roster, a group map, n-gram shards, one vector file
//! per decade, an axes file and a toxic lexicon, all in the production
//! formats. Group A's context leans to the right pole of the planted axis and
//! group B's to the left; group A also sees toxic words at a higher rate.
//! An optional break re-expresses every vector after a chosen decade in
//! shuffled, sign-flipped coordinates, which leaves all cosines intact but
//! decorrelates group vectors across the break.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::context::ContextTable;
use crate::embedding::EmbeddingSpace;
use crate::group_embedding::{derive_seed, Polarity};
use crate::roster::{write_roster_export, RosterRow};
use crate::semaxes::{axes_to_text, SemanticAxis};
use crate::{Decade, Error, Group, Result};

pub const PLANTED_AXIS: &str = "planted";
pub const TOXIC_AXIS: &str = "harsh";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSpec {
    pub seed: u64,
    pub dim: usize,
    pub filler_words: usize,
    /// Words per pole of the planted and toxic axes.
    pub pole_size: usize,
    pub decoy_axes: usize,
    pub decoy_pole_size: usize,
    /// Norm scale of the Gaussian noise added to pole and toxic words.
    pub noise: f64,
    /// Per-decade jitter applied to every vector.
    pub decade_noise: f64,
    pub first_decade: Decade,
    pub decades: usize,
    /// Index of the last decade before the representation break.
    pub break_after: Option<usize>,
    pub ngrams_per_group_per_decade: usize,
    pub persons_per_group: usize,
    /// Probability that a pole context word of group A / B is a right-pole word.
    pub bias_mix: [f64; 2],
    /// Probability that a context word of group A / B is a toxic word.
    pub toxic_rate: [f64; 2],
    /// Probability that a context word is a filler word.
    pub filler_share: f64,
    pub toxic_words: usize,
    pub shards: usize,
}

impl Default for PlantSpec {
    fn default() -> Self {
        PlantSpec {
            seed: 7,
            dim: 50,
            filler_words: 200,
            pole_size: 8,
            decoy_axes: 10,
            decoy_pole_size: 4,
            noise: 0.3,
            decade_noise: 0.02,
            first_decade: 1950,
            decades: 3,
            break_after: None,
            ngrams_per_group_per_decade: 10_000,
            persons_per_group: 25,
            bias_mix: [0.8, 0.2],
            toxic_rate: [0.08, 0.02],
            filler_share: 0.0,
            toxic_words: 6,
            shards: 4,
        }
    }
}

impl PlantSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("synth: {m}")));
        let probs = [
            self.bias_mix[0],
            self.bias_mix[1],
            self.toxic_rate[0],
            self.toxic_rate[1],
            self.filler_share,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("probabilities must be in [0, 1]".into());
        }
        for g in 0..2 {
            if self.toxic_rate[g] + self.filler_share > 1.0 {
                return bad(format!("toxic rate plus filler share exceeds 1 for group {g}"));
            }
        }
        if self.dim < 2 || self.pole_size < 3 || self.decoy_pole_size < 3 {
            return bad("dim must be at least 2 and poles need at least 3 words".into());
        }
        if self.decades == 0 || self.persons_per_group == 0 || self.shards == 0 {
            return bad("decades, persons_per_group and shards must be positive".into());
        }
        if self.toxic_words == 0 {
            return bad("need at least one toxic word".into());
        }
        if let Some(b) = self.break_after {
            if b + 1 >= self.decades {
                return bad(format!("break_after {b} leaves no decade after the break"));
            }
        }
        Ok(())
    }

    pub fn decade_list(&self) -> Vec<Decade> {
        (0..self.decades).map(|i| self.first_decade + 10 * i as Decade).collect()
    }

    pub fn groups(&self) -> [Group; 2] {
        [Group::new("GRP_A"), Group::new("GRP_B")]
    }
}

/// Alphabetic word from an index, so generated words survive token cleaning.
fn word(prefix: &str, mut i: usize) -> String {
    let mut s = String::from(prefix);
    let mut suffix = Vec::new();
    loop {
        suffix.push(b'a' + (i % 26) as u8);
        i /= 26;
        if i == 0 {
            break;
        }
    }
    suffix.reverse();
    s.push_str(std::str::from_utf8(&suffix).unwrap());
    s
}

/// Planted vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub right: Vec<String>,
    pub left: Vec<String>,
    pub toxic: Vec<String>,
    pub filler: Vec<String>,
    pub axes: Vec<SemanticAxis>,
}

pub fn vocabulary(spec: &PlantSpec) -> Vocabulary {
    let list = |p: &str, n: usize| (0..n).map(|i| word(p, i)).collect::<Vec<_>>();
    let right = list("brightq", spec.pole_size);
    let left = list("dimq", spec.pole_size);
    let mut axes = vec![SemanticAxis {
        id: PLANTED_AXIS.into(),
        left: left.clone(),
        right: right.clone(),
    }];
    axes.push(SemanticAxis {
        id: TOXIC_AXIS.into(),
        left: list("gentleq", spec.pole_size),
        right: list("harshq", spec.pole_size),
    });
    for a in 0..spec.decoy_axes {
        axes.push(SemanticAxis {
            id: format!("decoy{a:02}"),
            left: list(&word("lowq", a), spec.decoy_pole_size),
            right: list(&word("highq", a), spec.decoy_pole_size),
        });
    }
    Vocabulary {
        right,
        left,
        toxic: list("vileq", spec.toxic_words),
        filler: list("plainq", spec.filler_words),
        axes,
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// `base + noise * g / sqrt(dim)` with `g` standard normal.
fn jitter(rng: &mut ChaCha8Rng, base: &[f64], noise: f64) -> Vec<f64> {
    if noise == 0.0 {
        return base.to_vec();
    }
    let scale = noise / (base.len() as f64).sqrt();
    base.iter().map(|b| b + scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

const STREAM_SPACE: u64 = 11;
const STREAM_DECADE: u64 = 12;
const STREAM_BREAK: u64 = 13;
const STREAM_CORPUS: u64 = 14;
const STREAM_ROSTER: u64 = 15;

/// The decade-independent space. Planted and toxic directions are orthogonal.
pub fn base_space(spec: &PlantSpec) -> (EmbeddingSpace, Vocabulary) {
    let vocab = vocabulary(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[STREAM_SPACE]));
    let dim = spec.dim;
    let planted = unit(gaussian(&mut rng, dim));
    let raw = gaussian(&mut rng, dim);
    let along: f64 = raw.iter().zip(&planted).map(|(a, b)| a * b).sum();
    let toxic_dir = unit(raw.iter().zip(&planted).map(|(r, p)| r - along * p).collect());
    let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<f64>>();

    let mut space = EmbeddingSpace::new(spec.first_decade, dim);
    let add_pole = |space: &mut EmbeddingSpace, rng: &mut ChaCha8Rng, words: &[String], dir: &[f64]| {
        for w in words {
            let v = jitter(rng, dir, spec.noise);
            space.insert(w, &v);
        }
    };
    add_pole(&mut space, &mut rng, &vocab.right, &planted);
    add_pole(&mut space, &mut rng, &vocab.left, &neg(&planted));
    let toxic_axis = &vocab.axes[1];
    add_pole(&mut space, &mut rng, &toxic_axis.right, &toxic_dir);
    add_pole(&mut space, &mut rng, &toxic_axis.left, &neg(&toxic_dir));
    add_pole(&mut space, &mut rng, &vocab.toxic, &toxic_dir);
    for axis in &vocab.axes[2..] {
        let d = unit(gaussian(&mut rng, dim));
        add_pole(&mut space, &mut rng, &axis.right, &d);
        add_pole(&mut space, &mut rng, &axis.left, &neg(&d));
    }
    for w in &vocab.filler {
        let d = unit(gaussian(&mut rng, dim));
        space.insert(w, &d);
    }
    (space, vocab)
}

/// Space for decade index `i`: the base space plus decade jitter, in
/// permuted, sign-flipped coordinates after the break.
pub fn gen_space(spec: &PlantSpec, i: usize) -> EmbeddingSpace {
    let (base, _) = base_space(spec);
    decade_space(spec, &base, i)
}

fn decade_space(spec: &PlantSpec, base: &EmbeddingSpace, i: usize) -> EmbeddingSpace {
    let dim = spec.dim;
    let decade = spec.first_decade + 10 * i as Decade;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[STREAM_DECADE, i as u64]));
    let transform = match spec.break_after {
        Some(b) if i > b => {
            let mut brng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[STREAM_BREAK]));
            let mut perm: Vec<usize> = (0..dim).collect();
            perm.shuffle(&mut brng);
            let signs: Vec<f64> = (0..dim).map(|_| if brng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
            Some((perm, signs))
        }
        _ => None,
    };
    let mut out = EmbeddingSpace::new(decade, dim);
    for (r, w) in base.words().iter().enumerate() {
        let v = jitter(&mut rng, base.row(r), spec.decade_noise);
        let v = match &transform {
            Some((perm, signs)) => (0..dim).map(|k| signs[k] * v[perm[k]]).collect(),
            None => v,
        };
        out.insert(w, &v);
    }
    out
}

const FIRST_NAMES: [&str; 20] = [
    "Ada", "Basil", "Cora", "Dorian", "Edith", "Felix", "Greta", "Hugo", "Ida", "Jasper", "Kira", "Lionel",
    "Mabel", "Nestor", "Olive", "Percy", "Quinn", "Rosalind", "Silas", "Thea",
];
const LAST_NAMES: [&str; 20] = [
    "Ashdown", "Brackley", "Corrigan", "Dunmore", "Ellery", "Fairbank", "Gilchrist", "Holloway", "Ingram",
    "Jessop", "Kettering", "Lockhart", "Merriweather", "Northcott", "Osgood", "Pemberton", "Quarles",
    "Ravenscroft", "Stanbury", "Thackeray",
];

pub const GROUP_LABELS: [&str; 2] = ["Synthetic Group A", "Synthetic Group B"];

/// Two-token names, `persons_per_group` per group, born 40 years before the
/// first decade.
pub fn gen_roster(spec: &PlantSpec) -> Vec<RosterRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[STREAM_ROSTER]));
    let mut pairs: Vec<(usize, usize)> = (0..FIRST_NAMES.len())
        .flat_map(|f| (0..LAST_NAMES.len()).map(move |l| (f, l)))
        .collect();
    pairs.shuffle(&mut rng);
    let mut rows = Vec::new();
    for g in 0..2 {
        for p in 0..spec.persons_per_group {
            let idx = (g * spec.persons_per_group + p) % pairs.len();
            let (f, l) = pairs[idx];
            let mut name = format!("{} {}", FIRST_NAMES[f], LAST_NAMES[l]);
            let round = (g * spec.persons_per_group + p) / pairs.len();
            if round > 0 {
                name = format!("{} {}{}", FIRST_NAMES[f], LAST_NAMES[l], word("", round));
            }
            rows.push(RosterRow {
                name,
                dob: format!("{}-01-01", spec.first_decade - 40 + (p % 20) as Decade),
                ethnic_label: GROUP_LABELS[g].into(),
                occupation: "writer".into(),
            });
        }
    }
    rows
}

pub fn group_map_toml(spec: &PlantSpec) -> String {
    let [a, b] = spec.groups();
    format!(
        "default = \"OTHER\"\n\n[labels]\n\"{}\" = \"{a}\"\n\"{}\" = \"{b}\"\n",
        GROUP_LABELS[0], GROUP_LABELS[1]
    )
}

/// Which planted class a context word belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WordClass {
    Right,
    Left,
    Toxic,
    Filler,
}

fn draw_word<'a>(rng: &mut ChaCha8Rng, spec: &PlantSpec, vocab: &'a Vocabulary, g: usize) -> (&'a str, WordClass) {
    let u: f64 = rng.random();
    let pick = |rng: &mut ChaCha8Rng, v: &'a [String]| v[rng.random_range(0..v.len())].as_str();
    if u < spec.toxic_rate[g] {
        (pick(rng, &vocab.toxic), WordClass::Toxic)
    } else if u < spec.toxic_rate[g] + spec.filler_share && !vocab.filler.is_empty() {
        (pick(rng, &vocab.filler), WordClass::Filler)
    } else if rng.random_bool(spec.bias_mix[g]) {
        (pick(rng, &vocab.right), WordClass::Right)
    } else {
        (pick(rng, &vocab.left), WordClass::Left)
    }
}

/// Heavy-tailed match count: doubling with probability 0.4, capped at 64.
fn match_count(rng: &mut ChaCha8Rng) -> u64 {
    let mut c = 1;
    while c < 64 && rng.random_bool(0.4) {
        c *= 2;
    }
    c
}

/// Corpus lines split into `spec.shards` shards, plus the weighted count of
/// each planted class per (decade, group).
pub struct Corpus {
    pub shards: Vec<Vec<String>>,
    pub class_weights: BTreeMap<(Decade, Group), BTreeMap<WordClass, u64>>,
}

pub fn gen_corpus(spec: &PlantSpec, roster: &[RosterRow]) -> Corpus {
    let (_, vocab) = base_space(spec);
    let groups = spec.groups();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[STREAM_CORPUS]));
    let mut shards = vec![Vec::new(); spec.shards];
    let mut class_weights: BTreeMap<(Decade, Group), BTreeMap<WordClass, u64>> = BTreeMap::new();
    let mut line_no = 0usize;
    for decade in spec.decade_list() {
        for (g, group) in groups.iter().enumerate() {
            let members: Vec<&RosterRow> = roster.iter().filter(|r| r.ethnic_label == GROUP_LABELS[g]).collect();
            let weights = class_weights.entry((decade, group.clone())).or_default();
            for _ in 0..spec.ngrams_per_group_per_decade {
                let person = members[rng.random_range(0..members.len())];
                let year = decade + rng.random_range(0..10);
                let count = match_count(&mut rng);
                let mut line = person.name.clone();
                for _ in 0..3 {
                    let (w, class) = draw_word(&mut rng, spec, &vocab, g);
                    line.push(' ');
                    line.push_str(w);
                    *weights.entry(class).or_insert(0) += count;
                }
                let _ = write!(line, "\t{year},{count},{}", count.div_ceil(2));
                shards[line_no % spec.shards].push(line);
                line_no += 1;
            }
        }
    }
    Corpus { shards, class_weights }
}

pub fn lexicon_text(vocab: &Vocabulary) -> String {
    let mut out = String::from("lemma\tcategory\tlevel\n");
    for w in &vocab.toxic {
        let _ = writeln!(out, "{w}\tsynthetic\tconservative");
    }
    // inclusive-level rows are filtered out by the default level
    for w in vocab.filler.iter().take(3) {
        let _ = writeln!(out, "{w}\tsynthetic\tinclusive");
    }
    out
}

/// Ground truth written next to a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantManifest {
    pub spec: PlantSpec,
    pub planted_axis: String,
    pub toxic_axis: String,
    /// Group expected on the right pole of the planted axis.
    pub right_group: Group,
    pub left_group: Group,
    /// Group seeded with the higher toxic rate.
    pub toxic_group: Group,
    pub decades: Vec<Decade>,
    pub break_transition: Option<(Decade, Decade)>,
    pub class_weights: Vec<ClassWeightRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeightRow {
    pub decade: Decade,
    pub group: Group,
    pub weights: BTreeMap<WordClass, u64>,
}

pub fn manifest(spec: &PlantSpec, corpus: &Corpus) -> PlantManifest {
    let [a, b] = spec.groups();
    let decades = spec.decade_list();
    let a_right = spec.bias_mix[0] >= spec.bias_mix[1];
    PlantManifest {
        spec: spec.clone(),
        planted_axis: PLANTED_AXIS.into(),
        toxic_axis: TOXIC_AXIS.into(),
        right_group: if a_right { a.clone() } else { b.clone() },
        left_group: if a_right { b.clone() } else { a.clone() },
        toxic_group: if spec.toxic_rate[0] >= spec.toxic_rate[1] { a } else { b },
        break_transition: spec.break_after.map(|i| (decades[i], decades[i + 1])),
        decades,
        class_weights: corpus
            .class_weights
            .iter()
            .map(|((decade, group), w)| ClassWeightRow {
                decade: *decade,
                group: group.clone(),
                weights: w.clone(),
            })
            .collect(),
    }
}

/// Paths of a written bundle, relative names are fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub dir: PathBuf,
    pub roster: PathBuf,
    pub group_map: PathBuf,
    pub shards: Vec<PathBuf>,
    pub vectors: BTreeMap<Decade, PathBuf>,
    pub axes: PathBuf,
    pub lexicon: PathBuf,
    pub manifest: PathBuf,
}

/// File name of the vector file for a decade inside a bundle.
pub const VECTOR_PATTERN: &str = "vectors/{decade}.txt";

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_bundle(spec: &PlantSpec, dir: &Path) -> Result<Bundle> {
    spec.validate()?;
    let mkdir = |p: &Path| fs::create_dir_all(p).map_err(|e| Error::io(p, e));
    mkdir(&dir.join("shards"))?;
    mkdir(&dir.join("vectors"))?;

    let roster = gen_roster(spec);
    let roster_path = dir.join("roster.tsv");
    write_roster_export(&roster_path, &roster)?;
    let group_map = dir.join("groups.toml");
    write(&group_map, &group_map_toml(spec))?;

    let corpus = gen_corpus(spec, &roster);
    let mut shards = Vec::new();
    for (i, lines) in corpus.shards.iter().enumerate() {
        let p = dir.join("shards").join(format!("shard-{i:02}.tsv"));
        let mut text = lines.join("\n");
        text.push('\n');
        write(&p, &text)?;
        shards.push(p);
    }

    let (base, vocab) = base_space(spec);
    let mut vectors = BTreeMap::new();
    for (i, decade) in spec.decade_list().into_iter().enumerate() {
        let p = dir.join(VECTOR_PATTERN.replace("{decade}", &decade.to_string()));
        decade_space(spec, &base, i).write(&p)?;
        vectors.insert(decade, p);
    }
    let axes = dir.join("axes.tsv");
    write(&axes, &axes_to_text(&vocab.axes))?;
    let lexicon = dir.join("lexicon.tsv");
    write(&lexicon, &lexicon_text(&vocab))?;
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest(spec, &corpus)).expect("manifest serializes");
    write(&manifest_path, &(json + "\n"))?;

    Ok(Bundle {
        dir: dir.to_path_buf(),
        roster: roster_path,
        group_map,
        shards,
        vectors,
        axes,
        lexicon,
        manifest: manifest_path,
    })
}

/// Sampling probabilities by direct enumeration over the whole space
/// vocabulary, independent of [`crate::group_embedding::build_distribution`].
/// Words without a usable vector or with zero weight are left out.
pub fn oracle_distribution(
    self_table: &ContextTable,
    other_table: &ContextTable,
    space: &EmbeddingSpace,
    polarity: Polarity,
    floor: f64,
) -> Result<BTreeMap<String, f64>> {
    let total = |t: &ContextTable| t.counts().values().map(|&c| c as u128).sum::<u128>();
    let (ts, to) = (total(self_table), total(other_table));
    let rel = |c: u64, t: u128| if t == 0 { 0.0 } else { c as f64 / t as f64 };
    let mut weights = BTreeMap::new();
    for w in space.words() {
        if space.vector(w).is_none_or(|v| v.iter().all(|&x| x == 0.0)) {
            continue;
        }
        let fs = rel(self_table.counts().get(w).copied().unwrap_or(0), ts);
        let fo = rel(other_table.counts().get(w).copied().unwrap_or(0), to);
        let weight = match polarity {
            Polarity::Positive => fs / if fo > floor { fo } else { floor },
            Polarity::Negative => fo / if fs > floor { fs } else { floor },
        };
        if weight > 0.0 {
            weights.insert(w.clone(), weight);
        }
    }
    let sum: f64 = weights.values().sum();
    if !(sum > 0.0) {
        return Err(Error::DegenerateDistribution);
    }
    weights.values_mut().for_each(|v| *v /= sum);
    Ok(weights)
}
