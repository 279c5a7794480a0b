//! Decade-to-decade correlation of group vectors and the transition test.
//!
//! For each adjacent pair of decades `t, t+1` the test compares how every
//! other decade correlates with `t` against how it correlates with `t+1`.
//! The absolute differences form the interval sample; the samples of all
//! other intervals, pooled, form the reference. A two-sample
//! Kolmogorov-Smirnov test then flags intervals where the representation
//! moved more than usual.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::{Decade, Error, Group, Result};

/// Sample Pearson correlation.
pub fn pearson(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    if u.len() < 2 {
        return Err(Error::ConstantInput);
    }
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut suv, mut suu, mut svv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (da, db) = (a - mu, b - mv);
        suv += da * db;
        suu += da * da;
        svv += db * db;
    }
    if suu == 0.0 || svv == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok((suv / (suu.sqrt() * svv.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub group: Group,
    pub decades: Vec<Decade>,
    /// Row-major, `values[i][j]` correlates decades `i` and `j`.
    pub values: Vec<Vec<f64>>,
    /// Requested decades that had no vector.
    pub missing: Vec<Decade>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.decades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decades.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[j]).collect()
    }

    /// Matrix as CSV with a `decade` header column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("decade");
        for d in &self.decades {
            let _ = write!(out, ",{d}");
        }
        out.push('\n');
        for (d, row) in self.decades.iter().zip(&self.values) {
            let _ = write!(out, "{d}");
            for v in row {
                let _ = write!(out, ",{v:.6}");
            }
            out.push('\n');
        }
        out
    }
}

/// Correlate every pair of decades in `requested` that has a vector.
pub fn correlation_matrix(
    group: Group,
    vectors: &BTreeMap<Decade, Vec<f64>>,
    requested: &[Decade],
) -> Result<CorrelationMatrix> {
    let mut decades = Vec::new();
    let mut missing = Vec::new();
    for &d in requested {
        if vectors.contains_key(&d) {
            decades.push(d);
        } else {
            missing.push(d);
        }
    }
    if decades.len() < 2 {
        return Err(Error::TooFewDecades(decades.len()));
    }
    let n = decades.len();
    let mut values = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let r = pearson(&vectors[&decades[i]], &vectors[&decades[j]])?;
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        group,
        decades,
        values,
        missing,
    })
}

/// Absolute differences of two columns, skipping rows where either entry is
/// exactly 1.
pub fn column_differences(col_t: &[f64], col_next: &[f64]) -> Vec<f64> {
    col_t
        .iter()
        .zip(col_next)
        .filter(|(a, b)| **a != 1.0 && **b != 1.0)
        .map(|(a, b)| (a - b).abs())
        .collect()
}

/// Interval sample for the transition from decade index `t` to `t + 1`.
/// The two self-correlation rows (the diagonal positions) are dropped.
pub fn transition_samples(matrix: &CorrelationMatrix, t: usize) -> Result<Vec<f64>> {
    if t + 1 >= matrix.len() {
        return Err(Error::IntervalMissing(t));
    }
    Ok(matrix
        .values
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != t && *i != t + 1)
        .map(|(_, row)| (row[t] - row[t + 1]).abs())
        .collect())
}

/// Concatenated samples of every transition except `exclude`.
pub fn pooled_samples(matrix: &CorrelationMatrix, exclude: usize) -> Result<Vec<f64>> {
    let transitions = matrix.len().saturating_sub(1);
    if transitions < 3 {
        return Err(Error::TooFewTransitions(transitions));
    }
    if exclude >= transitions {
        return Err(Error::IntervalMissing(exclude));
    }
    let mut out = Vec::new();
    for t in (0..transitions).filter(|&t| t != exclude) {
        out.extend(transition_samples(matrix, t)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sided two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (m, n) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < m && j < n {
        let x = a[i].min(b[j]);
        while i < m && a[i] <= x {
            i += 1;
        }
        while j < n && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / m as f64 - j as f64 / n as f64).abs());
    }
    let en = (m * n) as f64 / (m + n) as f64;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(en.sqrt() * d),
    })
}

/// Terms smaller than this end the series.
pub const SERIES_TOLERANCE: f64 = 1e-12;

/// `Q(x) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)`, clamped to [0, 1].
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    let mut k = 1.0_f64;
    loop {
        let term = 2.0 * (-2.0 * k * k * lambda * lambda).exp();
        if term < SERIES_TOLERANCE {
            break;
        }
        sum += sign * term;
        sign = -sign;
        k += 1.0;
    }
    sum.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTest {
    pub from: Decade,
    pub to: Decade,
    pub statistic: f64,
    pub p_value: f64,
    pub mean_distance_interval: f64,
    pub mean_distance_rest: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// One test per adjacent decade pair.
pub fn transition_report(matrix: &CorrelationMatrix) -> Result<Vec<TransitionTest>> {
    let transitions = matrix.len().saturating_sub(1);
    let mut out = Vec::with_capacity(transitions);
    for t in 0..transitions {
        let interval = transition_samples(matrix, t)?;
        let rest = pooled_samples(matrix, t)?;
        let ks = ks_two_sample(&interval, &rest)?;
        out.push(TransitionTest {
            from: matrix.decades[t],
            to: matrix.decades[t + 1],
            statistic: ks.statistic,
            p_value: ks.p_value,
            mean_distance_interval: mean(&interval),
            mean_distance_rest: mean(&rest),
        });
    }
    Ok(out)
}

pub fn transitions_csv(group: &Group, tests: &[TransitionTest]) -> String {
    let mut out = String::from("group,interval,statistic,p_value,mean_distance_interval,mean_distance_rest\n");
    for t in tests {
        let _ = writeln!(
            out,
            "{group},{}-{},{:.6},{:.6e},{:.6},{:.6}",
            t.from, t.to, t.statistic, t.p_value, t.mean_distance_interval, t.mean_distance_rest
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(values: Vec<Vec<f64>>) -> CorrelationMatrix {
        CorrelationMatrix {
            group: Group::new("A"),
            decades: (0..values.len() as i32).map(|i| 1850 + 10 * i).collect(),
            values,
            missing: vec![],
        }
    }

    #[test]
    fn pearson_cases() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::ConstantInput)));
        assert!(matches!(pearson(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn matrix_records_missing_decades() {
        let mut v = BTreeMap::new();
        v.insert(1850, vec![1.0, 2.0, 3.0]);
        v.insert(1870, vec![1.0, 2.0, 3.5]);
        let m = correlation_matrix(Group::new("A"), &v, &[1850, 1860, 1870]).unwrap();
        assert_eq!(m.decades, vec![1850, 1870]);
        assert_eq!(m.missing, vec![1860]);
        assert!(matches!(
            correlation_matrix(Group::new("A"), &v, &[1850]),
            Err(Error::TooFewDecades(1))
        ));
    }

    #[test]
    fn worked_column_example() {
        let got = column_differences(&[0.5, 1.0, 0.7, 0.6], &[0.4, 0.8, 1.0, 0.9]);
        assert_eq!(got, vec![(0.5f64 - 0.4).abs(), (0.6f64 - 0.9).abs()]);
        assert!((got[0] - 0.1).abs() < 1e-15 && (got[1] - 0.3).abs() < 1e-15);
        assert!(column_differences(&[0.2, 0.3], &[0.2, 0.3]).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sample_sizes() {
        let m = matrix(vec![vec![1.0, 0.5, 0.4, 0.3]; 4]);
        assert_eq!(transition_samples(&m, 1).unwrap().len(), 2);
        assert!(matches!(transition_samples(&m, 3), Err(Error::IntervalMissing(3))));
        assert_eq!(pooled_samples(&m, 1).unwrap().len(), 4);
        assert_eq!(pooled_samples(&m, 0).unwrap().len(), 4);
        let small = matrix(vec![vec![1.0, 0.5, 0.4]; 3]);
        assert!(matches!(pooled_samples(&small, 0), Err(Error::TooFewTransitions(2))));
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_two_sample(&[0.0; 3], &[1.0; 3]).unwrap().statistic, 1.0);
        let same = ks_two_sample(&[1.0, 2.0, 2.0], &[1.0, 2.0, 2.0]).unwrap();
        assert_eq!((same.statistic, same.p_value), (0.0, 1.0));
        let d = ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[1.5, 2.5, 3.5, 4.5]).unwrap();
        assert_eq!(d.statistic, 0.25);
        assert!(matches!(ks_two_sample(&[], &[1.0]), Err(Error::EmptySample)));
    }

    #[test]
    fn survival_tail() {
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        // Q(1.36) is the familiar 5% critical point
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 1e-3);
        assert!(kolmogorov_survival(3.0) < 1e-6);
    }

    #[test]
    fn planted_break_has_largest_statistic() {
        // decades 0..2 and 3..5 form two blocks
        let n = 6;
        let values: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match (i == j, (i < 3) == (j < 3)) {
                        (true, _) => 1.0,
                        (false, true) => 0.9 - 0.01 * (i + j) as f64,
                        (false, false) => 0.1 + 0.01 * (i + j) as f64,
                    })
                    .collect()
            })
            .collect();
        let report = transition_report(&matrix(values)).unwrap();
        assert_eq!(report.len(), n - 1);
        let best = report
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.statistic.total_cmp(&b.1.statistic))
            .unwrap()
            .0;
        assert_eq!(best, 2);
    }

    proptest! {
        #[test]
        fn ks_self_and_monotone(a in prop::collection::vec(-10.0f64..10.0, 1..30), b in prop::collection::vec(-10.0f64..10.0, 1..30)) {
            let s = ks_two_sample(&a, &a).unwrap();
            prop_assert_eq!((s.statistic, s.p_value), (0.0, 1.0));
            let d = ks_two_sample(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d.statistic));
            let ta: Vec<f64> = a.iter().map(|x| x.exp()).collect();
            let tb: Vec<f64> = b.iter().map(|x| x.exp()).collect();
            prop_assert_eq!(ks_two_sample(&ta, &tb).unwrap().statistic, d.statistic);
        }

        #[test]
        fn pearson_affine(u in prop::collection::vec(-5.0f64..5.0, 3..12), seed in prop::collection::vec(-5.0f64..5.0, 12),
                          scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
            let v: Vec<f64> = seed[..u.len()].to_vec();
            let Ok(r) = pearson(&u, &v) else { return Ok(()); };
            let moved: Vec<f64> = u.iter().map(|x| scale * x + shift).collect();
            prop_assert!((pearson(&moved, &v).unwrap() - r).abs() < 1e-9);
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            prop_assert!((pearson(&u, &neg).unwrap() + r).abs() < 1e-12);
        }

        #[test]
        fn matrix_symmetric(vs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 8), 2..6)) {
            let map: BTreeMap<Decade, Vec<f64>> = vs.iter().enumerate().map(|(i, v)| (1850 + 10 * i as i32, v.clone())).collect();
            let decades: Vec<Decade> = map.keys().copied().collect();
            let m = correlation_matrix(Group::new("A"), &map, &decades).unwrap();
            for i in 0..m.len() {
                prop_assert_eq!(m.values[i][i], 1.0);
                for j in 0..m.len() {
                    prop_assert_eq!(m.values[i][j], m.values[j][i]);
                    prop_assert!((-1.0..=1.0).contains(&m.values[i][j]));
                }
            }
            if m.len() >= 3 {
                prop_assert_eq!(transition_samples(&m, 0).unwrap().len(), m.len() - 2);
            }
        }
    }
}
