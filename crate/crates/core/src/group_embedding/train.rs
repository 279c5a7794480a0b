use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{loss_gradient_into, ranking_loss, Label};
use super::sampling::{build_distribution, draw_samples, Polarity, SamplingDistribution, DEFAULT_FLOOR};
use crate::context::ContextTable;
use crate::embedding::{norm, EmbeddingSpace};
use crate::{Decade, Error, Group, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    /// Number of positive samples.
    pub k: usize,
    /// Negatives per positive.
    pub n: usize,
    pub margin: f64,
    pub floor: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Scale of the uniform initialization.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            k: 500_000,
            n: 4,
            margin: 0.5,
            floor: DEFAULT_FLOOR,
            learning_rate: 0.1,
            epochs: 5,
            init_scale: 0.01,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("trainer: {m}")));
        if self.k == 0 {
            return bad("k must be positive");
        }
        if !(self.margin > 0.0 && self.margin < 1.0) {
            return bad("margin must be in (0, 1)");
        }
        if !(self.floor > 0.0) {
            return bad("floor must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.init_scale > 0.0) {
            return bad("init_scale must be positive");
        }
        Ok(())
    }
}

/// Independent RNG stream derived from a root seed (splitmix64 finalizer).
pub fn derive_seed(root: u64, parts: &[u64]) -> u64 {
    let mut h = root ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

const STREAM_POSITIVE: u64 = 1;
const STREAM_NEGATIVE: u64 = 2;
const STREAM_INIT: u64 = 3;
const STREAM_SHUFFLE: u64 = 4;

/// Positive and negative samples as rows of the embedding space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(row, label)` pairs, positives first.
    pub fn labeled(&self) -> impl Iterator<Item = (usize, Label)> + '_ {
        self.positives
            .iter()
            .map(|&r| (r, Label::Positive))
            .chain(self.negatives.iter().map(|&r| (r, Label::Negative)))
    }
}

/// Draw `k` positives and `n * k` negatives.
pub fn draw_sample_set(
    positive: &SamplingDistribution,
    negative: Option<&SamplingDistribution>,
    config: &TrainerConfig,
) -> Result<SampleSet> {
    let pos = draw_samples(positive, config.k, derive_seed(config.seed, &[STREAM_POSITIVE]))?;
    let neg = match negative {
        Some(d) if config.n > 0 => {
            draw_samples(d, config.n * config.k, derive_seed(config.seed, &[STREAM_NEGATIVE]))?
        }
        _ => Vec::new(),
    };
    Ok(SampleSet {
        positives: pos.into_iter().map(|i| positive.rows[i]).collect(),
        negatives: neg
            .into_iter()
            .map(|i| negative.expect("negatives drawn only with a distribution").rows[i])
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub config: TrainerConfig,
    /// Mean loss over the sample set at the final vector.
    pub final_loss: f64,
    /// Mean online loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
    pub positive_vocabulary: usize,
    pub negative_vocabulary: usize,
    pub excluded_positive_mass: f64,
    pub excluded_negative_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupVector {
    pub decade: Decade,
    pub group: Group,
    pub vector: Vec<f64>,
    pub meta: TrainingMeta,
}

/// Plain SGD over shuffled samples. Deterministic given (samples, config).
pub fn train_group_vector(
    samples: &SampleSet,
    space: &EmbeddingSpace,
    config: &TrainerConfig,
    decade: Decade,
    group: Group,
) -> Result<GroupVector> {
    config.validate()?;
    let dim = space.dim();
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[STREAM_INIT]));
    let mut x: Vec<f64> = (0..dim)
        .map(|_| init_rng.random_range(-1.0..1.0) * config.init_scale)
        .collect();

    let mut order: Vec<(usize, Label)> = samples.labeled().collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[STREAM_SHUFFLE]));
    let mut grad = vec![0.0; dim];
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut steps = 0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for (step, &(row, label)) in order.iter().enumerate() {
            let w = space.row(row);
            let loss = loss_gradient_into(&x, w, label, config.margin, &mut grad)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            total += loss;
            for (xi, gi) in x.iter_mut().zip(&grad) {
                *xi -= config.learning_rate * gi;
            }
            steps += 1;
        }
        epoch_losses.push(if order.is_empty() { 0.0 } else { total / order.len() as f64 });
    }
    if x.iter().any(|v| !v.is_finite()) || norm(&x) == 0.0 {
        return Err(Error::NonFiniteLoss {
            epoch: config.epochs,
            step: 0,
        });
    }
    let final_loss = if order.is_empty() {
        0.0
    } else {
        let mut sum = 0.0;
        for &(row, label) in &order {
            sum += ranking_loss(&x, space.row(row), label, config.margin)?;
        }
        sum / order.len() as f64
    };
    Ok(GroupVector {
        decade,
        group,
        vector: x,
        meta: TrainingMeta {
            config: config.clone(),
            final_loss,
            epoch_losses,
            steps,
            positive_vocabulary: 0,
            negative_vocabulary: 0,
            excluded_positive_mass: 0.0,
            excluded_negative_mass: 0.0,
        },
    })
}

fn train_one(
    own: &ContextTable,
    other: &ContextTable,
    space: &EmbeddingSpace,
    config: &TrainerConfig,
) -> Result<GroupVector> {
    let pos = build_distribution(own, other, space, Polarity::Positive, config.floor)?;
    let neg = if config.n > 0 {
        Some(build_distribution(own, other, space, Polarity::Negative, config.floor)?)
    } else {
        None
    };
    let samples = draw_sample_set(&pos, neg.as_ref(), config)?;
    let mut gv = train_group_vector(&samples, space, config, own.decade, own.group.clone())?;
    gv.meta.positive_vocabulary = pos.len();
    gv.meta.excluded_positive_mass = pos.excluded_mass;
    if let Some(neg) = &neg {
        gv.meta.negative_vocabulary = neg.len();
        gv.meta.excluded_negative_mass = neg.excluded_mass;
    }
    Ok(gv)
}

/// Train both group vectors of one decade. Group A draws positives from its
/// own context and negatives from B's, and vice versa; the two trainings are
/// independent and use the same decade seed, so swapping the inputs swaps
/// the outputs.
pub fn train_decade(
    table_a: &ContextTable,
    table_b: &ContextTable,
    space: &EmbeddingSpace,
    config: &TrainerConfig,
) -> Result<(GroupVector, GroupVector)> {
    if table_a.is_empty() || table_b.is_empty() {
        return Err(Error::EmptyTable);
    }
    let decade_config = TrainerConfig {
        seed: derive_seed(config.seed, &[table_a.decade as u64]),
        ..config.clone()
    };
    let (a, b) = rayon::join(
        || train_one(table_a, table_b, space, &decade_config),
        || train_one(table_b, table_a, space, &decade_config),
    );
    Ok((a?, b?))
}

/// Write `decade group v1 ... vd` lines and a JSON metadata sidecar
/// (`<path>.meta.json`). Returns the sidecar path.
pub fn write_group_vectors(path: &Path, vectors: &[GroupVector]) -> Result<PathBuf> {
    let mut out = String::new();
    for gv in vectors {
        let _ = write!(out, "{} {}", gv.decade, gv.group);
        for v in &gv.vector {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;

    #[derive(Serialize)]
    struct Entry<'a> {
        decade: Decade,
        group: &'a Group,
        #[serde(flatten)]
        meta: &'a TrainingMeta,
    }
    let entries: Vec<Entry> = vectors
        .iter()
        .map(|gv| Entry {
            decade: gv.decade,
            group: &gv.group,
            meta: &gv.meta,
        })
        .collect();
    let sidecar = sidecar_path(path);
    let json = serde_json::to_string_pretty(&entries).expect("metadata serializes");
    fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))?;
    Ok(sidecar)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// A vector read back from a group-vector file.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredGroupVector {
    pub decade: Decade,
    pub group: Group,
    pub vector: Vec<f64>,
}

pub fn read_group_vectors(path: &Path) -> Result<Vec<StoredGroupVector>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut dim = None;
    for (i, line) in text.lines().enumerate() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.is_empty() {
            continue;
        }
        if parts.len() < 3 {
            return Err(Error::parse(path, i + 1, "expected decade group v1 ... vd"));
        }
        let decade: Decade = parts[0]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, "bad decade"))?;
        let vector: Vec<f64> = parts[2..]
            .iter()
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, i + 1, "bad vector value"))?;
        let d = *dim.get_or_insert(vector.len());
        if vector.len() != d {
            return Err(Error::DimensionMismatch {
                path: path.to_path_buf(),
                line: i + 1,
                expected: d,
                found: vector.len(),
            });
        }
        out.push(StoredGroupVector {
            decade,
            group: Group::new(parts[1]),
            vector,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cosine;

    fn small_config() -> TrainerConfig {
        TrainerConfig {
            k: 100,
            n: 0,
            ..TrainerConfig::default()
        }
    }

    fn space() -> EmbeddingSpace {
        let mut s = EmbeddingSpace::new(1850, 4);
        s.insert("up", &[1.0, 0.2, 0.0, 0.0]);
        s.insert("side", &[0.0, 0.0, 1.0, 0.3]);
        s
    }

    #[test]
    fn defaults_match_published_settings() {
        let c = TrainerConfig::default();
        assert_eq!((c.k, c.n, c.margin, c.floor), (500_000, 4, 0.5, 1e-5));
        assert!(c.validate().is_ok());
        assert!(TrainerConfig { margin: 1.0, ..c.clone() }.validate().is_err());
        assert!(TrainerConfig { epochs: 0, ..c }.validate().is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, &[1850]), derive_seed(1, &[1860]));
        assert_ne!(derive_seed(1, &[1]), derive_seed(2, &[1]));
        assert_eq!(derive_seed(7, &[3, 4]), derive_seed(7, &[3, 4]));
    }

    #[test]
    fn positive_only_converges() {
        let s = space();
        let row = s.index_of("up").unwrap();
        let samples = SampleSet { positives: vec![row; 100], negatives: vec![] };
        let gv = train_group_vector(&samples, &s, &small_config(), 1850, Group::new("A")).unwrap();
        assert_eq!(gv.meta.steps, 500);
        assert!(cosine(&gv.vector, s.row(row)).unwrap() > 0.99);
        assert!(gv.meta.final_loss < 0.01);
    }

    #[test]
    fn negatives_only_end_below_margin() {
        let s = space();
        let row = s.index_of("up").unwrap();
        let samples = SampleSet { positives: vec![], negatives: vec![row; 400] };
        let gv = train_group_vector(&samples, &s, &small_config(), 1850, Group::new("A")).unwrap();
        assert!(cosine(&gv.vector, s.row(row)).unwrap() <= 0.51);
    }

    #[test]
    fn same_seed_same_vector() {
        let s = space();
        let samples = SampleSet {
            positives: vec![0, 1, 0, 0, 1],
            negatives: vec![1, 1, 0],
        };
        let c = small_config();
        let a = train_group_vector(&samples, &s, &c, 1850, Group::new("A")).unwrap();
        let b = train_group_vector(&samples, &s, &c, 1850, Group::new("A")).unwrap();
        assert_eq!(a.vector, b.vector);
        let other = train_group_vector(&samples, &s, &TrainerConfig { seed: 99, ..c }, 1850, Group::new("A")).unwrap();
        assert_ne!(a.vector, other.vector);
    }

    #[test]
    fn vectors_file_round_trip() {
        let s = space();
        let samples = SampleSet { positives: vec![0; 10], negatives: vec![] };
        let gv = train_group_vector(&samples, &s, &small_config(), 1850, Group::new("GRP_A")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vectors.txt");
        let sidecar = write_group_vectors(&p, std::slice::from_ref(&gv)).unwrap();
        assert!(sidecar.exists());
        let back = read_group_vectors(&p).unwrap();
        assert_eq!(back[0].vector, gv.vector);
        assert_eq!(back[0].group, gv.group);
    }
}
