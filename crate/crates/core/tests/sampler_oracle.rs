use portrayal::context::ContextTable;
use portrayal::embedding::EmbeddingSpace;
use portrayal::group_embedding::{build_distribution, Polarity, DEFAULT_FLOOR};
use portrayal::synth::oracle_distribution;
use portrayal::{Error, Group};
use proptest::prelude::*;

fn space(n: usize) -> EmbeddingSpace {
    let mut s = EmbeddingSpace::new(1900, 3);
    for i in 0..n {
        s.insert(&format!("w{i}"), &[1.0, i as f64, 0.5]);
    }
    // present but unusable
    s.insert("zero", &[0.0, 0.0, 0.0]);
    s
}

fn table(group: &str, counts: &[u64]) -> ContextTable {
    let mut t = ContextTable::from_counts(
        1900,
        Group::new(group),
        counts.iter().enumerate().map(|(i, &c)| (format!("w{i}"), c)),
    );
    t.add("zero", 2);
    t.add("novector", 3);
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn build_distribution_matches_enumeration(
        a in prop::collection::vec(0u64..200, 2..12),
        b in prop::collection::vec(0u64..200, 2..12),
        negative in any::<bool>(),
    ) {
        let n = a.len().max(b.len());
        let sp = space(n);
        let (ta, tb) = (table("A", &a), table("B", &b));
        let polarity = if negative { Polarity::Negative } else { Polarity::Positive };
        let oracle = oracle_distribution(&ta, &tb, &sp, polarity, DEFAULT_FLOOR);
        let built = build_distribution(&ta, &tb, &sp, polarity, DEFAULT_FLOOR);
        match (oracle, built) {
            (Ok(o), Ok(d)) => {
                for (w, p) in d.vocabulary.iter().zip(&d.probabilities) {
                    let q = o.get(w).copied().unwrap_or(0.0);
                    prop_assert!((p - q).abs() <= 1e-12, "{w}: {p} vs {q}");
                }
                for (w, q) in &o {
                    prop_assert!(d.vocabulary.contains(w) || *q == 0.0);
                }
            }
            (Err(Error::DegenerateDistribution), Err(Error::DegenerateDistribution)) => {}
            (o, d) => prop_assert!(false, "oracle {o:?} vs built {d:?}"),
        }
    }
}
