use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::context::ContextTable;
use crate::embedding::EmbeddingSpace;
use crate::{Error, Result};

/// Floor applied to the contrasting frequency in the sampling weights.
pub const DEFAULT_FLOOR: f64 = 1e-5;

/// Weight of a word as a positive sample: `f_self / max(f_other, floor)`.
pub fn positive_weight(f_self: f64, f_other: f64, floor: f64) -> f64 {
    f_self / f_other.max(floor)
}

/// Weight of a word as a negative sample: `f_other / max(f_self, floor)`.
pub fn negative_weight(f_self: f64, f_other: f64, floor: f64) -> f64 {
    f_other / f_self.max(floor)
}

/// Which side of the contrast a distribution samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Words from the group's own context, weighted by [`positive_weight`].
    Positive,
    /// Words from the other group's context, weighted by [`negative_weight`].
    Negative,
}

/// Categorical distribution over words that have usable vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    pub vocabulary: Vec<String>,
    /// Row of each vocabulary word in the embedding space.
    pub rows: Vec<usize>,
    pub weights: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// Source-table words dropped for lacking a vector.
    pub excluded_words: usize,
    /// Relative frequency mass of the excluded words in the source table.
    pub excluded_mass: f64,
}

impl SamplingDistribution {
    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }
}

fn freq(table: &ContextTable, word: &str) -> f64 {
    if table.is_empty() {
        0.0
    } else {
        table.count(word) as f64 / table.total_weight() as f64
    }
}

/// Build the positive or negative sampling distribution for the group owning
/// `self_table`. Frequencies are relative to each table's total weight.
pub fn build_distribution(
    self_table: &ContextTable,
    other_table: &ContextTable,
    space: &EmbeddingSpace,
    polarity: Polarity,
    floor: f64,
) -> Result<SamplingDistribution> {
    let source = match polarity {
        Polarity::Positive => self_table,
        Polarity::Negative => other_table,
    };
    let mut dist = SamplingDistribution {
        vocabulary: Vec::new(),
        rows: Vec::new(),
        weights: Vec::new(),
        probabilities: Vec::new(),
        excluded_words: 0,
        excluded_mass: 0.0,
    };
    for word in source.counts().keys() {
        let row = match space.index_of(word) {
            Some(r) if space.usable_vector(word).is_some() => r,
            _ => {
                dist.excluded_words += 1;
                dist.excluded_mass += freq(source, word);
                continue;
            }
        };
        let (fs, fo) = (freq(self_table, word), freq(other_table, word));
        let w = match polarity {
            Polarity::Positive => positive_weight(fs, fo, floor),
            Polarity::Negative => negative_weight(fs, fo, floor),
        };
        dist.vocabulary.push(word.clone());
        dist.rows.push(row);
        dist.weights.push(w);
    }
    let total: f64 = dist.weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateDistribution);
    }
    dist.probabilities = dist.weights.iter().map(|w| w / total).collect();
    Ok(dist)
}

/// `count` i.i.d. draws with replacement, returned as indices into the
/// distribution's vocabulary.
pub fn draw_samples(dist: &SamplingDistribution, count: usize, seed: u64) -> Result<Vec<usize>> {
    let index = WeightedIndex::new(&dist.probabilities).map_err(|_| Error::DegenerateDistribution)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| index.sample(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Group;
    use proptest::prelude::*;

    fn table(counts: &[(&str, u64)]) -> ContextTable {
        ContextTable::from_counts(1850, Group::new("GRP_A"), counts.iter().map(|&(w, c)| (w, c)))
    }

    fn space(words: &[&str]) -> EmbeddingSpace {
        let mut s = EmbeddingSpace::new(1850, 2);
        for (i, w) in words.iter().enumerate() {
            s.insert(w, &[1.0, i as f64]);
        }
        s
    }

    #[test]
    fn weight_cases() {
        assert_eq!(positive_weight(0.0, 0.3, DEFAULT_FLOOR), 0.0);
        assert!((positive_weight(0.001, 0.0005, DEFAULT_FLOOR) - 2.0).abs() < 1e-12);
        assert!((positive_weight(0.001, 0.0, DEFAULT_FLOOR) - 100.0).abs() < 1e-9);
        assert_eq!(negative_weight(0.3, 0.0, DEFAULT_FLOOR), 0.0);
        assert!((negative_weight(0.001, 0.002, DEFAULT_FLOOR) - 2.0).abs() < 1e-12);
        assert_eq!(negative_weight(0.0, 0.0, DEFAULT_FLOOR), 0.0);
    }

    #[test]
    fn one_word_vocab() {
        let d = build_distribution(&table(&[("a", 5)]), &table(&[]), &space(&["a"]), Polarity::Positive, DEFAULT_FLOOR)
            .unwrap();
        assert_eq!(d.probabilities, vec![1.0]);
    }

    #[test]
    fn hand_normalization() {
        // equal other-frequencies, self counts 1:3
        let d = build_distribution(
            &table(&[("a", 1), ("b", 3)]),
            &table(&[("a", 1), ("b", 1)]),
            &space(&["a", "b"]),
            Polarity::Positive,
            DEFAULT_FLOOR,
        )
        .unwrap();
        assert!((d.probabilities[0] - 0.25).abs() < 1e-15);
        assert!((d.probabilities[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn missing_vectors_excluded_before_normalization() {
        let d = build_distribution(
            &table(&[("a", 1), ("zzz", 3)]),
            &table(&[]),
            &space(&["a"]),
            Polarity::Positive,
            DEFAULT_FLOOR,
        )
        .unwrap();
        assert_eq!(d.vocabulary, vec!["a"]);
        assert_eq!(d.probabilities, vec![1.0]);
        assert_eq!(d.excluded_words, 1);
        assert!((d.excluded_mass - 0.75).abs() < 1e-15);
    }

    #[test]
    fn degenerate_distribution() {
        // every own-context word lacks a vector
        let r = build_distribution(&table(&[("zzz", 3)]), &table(&[]), &space(&["a"]), Polarity::Positive, DEFAULT_FLOOR);
        assert!(matches!(r, Err(Error::DegenerateDistribution)));
        // negatives from an empty other table
        let r = build_distribution(&table(&[("a", 3)]), &table(&[]), &space(&["a"]), Polarity::Negative, DEFAULT_FLOOR);
        assert!(matches!(r, Err(Error::DegenerateDistribution)));
    }

    #[test]
    fn draws_are_reproducible() {
        let d = build_distribution(&table(&[("a", 5)]), &table(&[]), &space(&["a"]), Polarity::Positive, DEFAULT_FLOOR)
            .unwrap();
        assert_eq!(draw_samples(&d, 5, 1).unwrap(), vec![0; 5]);
        let d = build_distribution(
            &table(&[("a", 1), ("b", 3), ("c", 2)]),
            &table(&[("a", 2)]),
            &space(&["a", "b", "c"]),
            Polarity::Positive,
            DEFAULT_FLOOR,
        )
        .unwrap();
        assert_eq!(draw_samples(&d, 100, 9).unwrap(), draw_samples(&d, 100, 9).unwrap());
        assert_ne!(draw_samples(&d, 100, 9).unwrap(), draw_samples(&d, 100, 10).unwrap());
    }

    proptest! {
        #[test]
        fn weights_are_monotone(fs in 0.0f64..1.0, fo in 0.0f64..1.0, d in 0.0f64..0.5) {
            prop_assert!(positive_weight(fs + d, fo, DEFAULT_FLOOR) >= positive_weight(fs, fo, DEFAULT_FLOOR));
            prop_assert!(positive_weight(fs, fo + d, DEFAULT_FLOOR) <= positive_weight(fs, fo, DEFAULT_FLOOR));
            prop_assert!(negative_weight(fs, fo + d, DEFAULT_FLOOR) >= negative_weight(fs, fo, DEFAULT_FLOOR));
            prop_assert!(negative_weight(fs + d, fo, DEFAULT_FLOOR) <= negative_weight(fs, fo, DEFAULT_FLOOR));
        }

        #[test]
        fn distribution_sums_to_one_and_is_scale_invariant(
            counts in prop::collection::vec((1u64..1000, 0u64..1000), 1..8),
            scale in 2u64..20,
        ) {
            let words: Vec<String> = (0..counts.len()).map(|i| format!("w{i}")).collect();
            let refs: Vec<&str> = words.iter().map(String::as_str).collect();
            let sp = space(&refs);
            let a = ContextTable::from_counts(1850, Group::new("A"), words.iter().cloned().zip(counts.iter().map(|c| c.0)));
            let b = ContextTable::from_counts(1850, Group::new("B"), words.iter().cloned().zip(counts.iter().map(|c| c.1)));
            let a10 = ContextTable::from_counts(1850, Group::new("A"), words.iter().cloned().zip(counts.iter().map(|c| c.0 * scale)));
            let b10 = ContextTable::from_counts(1850, Group::new("B"), words.iter().cloned().zip(counts.iter().map(|c| c.1 * scale)));
            let d = build_distribution(&a, &b, &sp, Polarity::Positive, DEFAULT_FLOOR).unwrap();
            let s: f64 = d.probabilities.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            let d10 = build_distribution(&a10, &b10, &sp, Polarity::Positive, DEFAULT_FLOOR).unwrap();
            for (p, q) in d.probabilities.iter().zip(&d10.probabilities) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
        }
    }
}
