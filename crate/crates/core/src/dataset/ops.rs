use std::collections::BTreeSet;

use super::{Catchment, Dataset, SeriesTensor, StaticTable};
use crate::numerics::Matrix;
use crate::{Error, Result};

/// Merges archives that share the same series features.
///
/// Catchments are concatenated in input order. Only static attributes whose
/// names appear in every input survive, sorted by name; no attribute is
/// converted or synthesized. The calendar is cut to the interval covered by
/// every input.
pub fn intersect_static(datasets: &[Dataset]) -> Result<Dataset> {
    if datasets.len() < 2 {
        return Err(Error::Contract("intersect_static needs at least two datasets".into()));
    }
    let first = &datasets[0];
    let feature_set: BTreeSet<&str> = first.series.feature_names.iter().map(String::as_str).collect();
    for d in &datasets[1..] {
        let other: BTreeSet<&str> = d.series.feature_names.iter().map(String::as_str).collect();
        if other != feature_set {
            return Err(Error::Harmonization(format!(
                "series features differ: {feature_set:?} vs {other:?}"
            )));
        }
    }

    let mut shared: BTreeSet<String> = first.static_table.attribute_names.iter().cloned().collect();
    for d in &datasets[1..] {
        let names: BTreeSet<String> = d.static_table.attribute_names.iter().cloned().collect();
        shared = shared.intersection(&names).cloned().collect();
    }
    if shared.is_empty() {
        return Err(Error::Harmonization("no static attribute is shared by all datasets".into()));
    }
    let attribute_names: Vec<String> = shared.into_iter().collect();

    let start = datasets.iter().map(|d| d.series.start_date).max().expect("non-empty");
    let end = datasets.iter().map(|d| d.series.end_date()).min().expect("non-empty");
    if end < start {
        return Err(Error::Alignment(format!(
            "datasets share no calendar days ({start} > {end})"
        )));
    }
    let n_days = (end - start).num_days() as usize + 1;

    let mut catchments = Vec::new();
    let mut static_rows = Vec::new();
    let features = &first.series.feature_names;
    let mut columns: Vec<Vec<Vec<f64>>> = vec![Vec::new(); features.len()];
    for d in datasets {
        let attr_idx: Vec<usize> = attribute_names
            .iter()
            .map(|a| d.static_table.attribute_index(a).expect("in intersection"))
            .collect();
        let offset = (start - d.series.start_date).num_days() as usize;
        for c in &d.catchments {
            if catchments.iter().any(|k: &Catchment| k.id == c.id) {
                return Err(Error::Schema(format!("catchment `{}` appears in more than one dataset", c.id)));
            }
            catchments.push(Catchment {
                id: c.id.clone(),
                source: c.source.clone(),
                index: catchments.len(),
            });
            static_rows.push(attr_idx.iter().map(|&a| d.static_table.values[(c.index, a)]).collect::<Vec<_>>());
            for (f, name) in features.iter().enumerate() {
                let m = d.series.feature(name)?;
                columns[f].push((offset..offset + n_days).map(|t| m[(t, c.index)]).collect());
            }
        }
    }

    let n = catchments.len();
    let values = columns
        .into_iter()
        .map(|cols| Matrix::from_fn(n_days, n, |t, c| cols[c][t]))
        .collect();
    let static_table = StaticTable::new(attribute_names, Matrix::from_rows(&static_rows)?)?;
    let series = SeriesTensor::new(features.clone(), start, values)?;
    Dataset::new(catchments, static_table, series)
}

/// Fills every missing static cell with the mean of its attribute over the
/// non-missing catchments.
pub fn impute_static_means(d: &Dataset) -> Result<Dataset> {
    let table = &d.static_table;
    let (rows, cols) = table.values.shape();
    let mut values = table.values.clone();
    for c in 0..cols {
        let (sum, count) = (0..rows)
            .filter(|&r| !table.is_missing(r, c))
            .fold((0.0, 0usize), |(s, n), r| (s + table.values[(r, c)], n + 1));
        if count == 0 {
            return Err(Error::Imputation(format!(
                "attribute `{}` has no observed values",
                table.attribute_names[c]
            )));
        }
        let mean = sum / count as f64;
        for r in 0..rows {
            if table.is_missing(r, c) {
                values[(r, c)] = mean;
            }
        }
    }
    let mut out = d.clone();
    out.static_table = StaticTable {
        attribute_names: table.attribute_names.clone(),
        values,
        missing_mask: vec![false; rows * cols],
    };
    Ok(out)
}

/// Ordinal month code on an even grid: January → 0, December → 1.
pub fn encode_month_ordinal(month: u32) -> Result<f64> {
    if !(1..=12).contains(&month) {
        return Err(Error::Domain(format!("month must be in 1..=12, got {month}")));
    }
    Ok((month - 1) as f64 / 11.0)
}

/// Recognizes English month names and three-letter abbreviations.
pub fn parse_month(raw: &str) -> Option<u32> {
    const NAMES: [&str; 12] = [
        "january", "february", "march", "april", "may", "june", "july", "august", "september",
        "october", "november", "december",
    ];
    let s = raw.trim().to_ascii_lowercase();
    if s.len() < 3 {
        return None;
    }
    NAMES
        .iter()
        .position(|n| *n == s || (s.len() == 3 && n.starts_with(&s)))
        .map(|i| i as u32 + 1)
}

/// Replaces missing cells of `feature` by the mean of all its observed
/// values across days and catchments.
pub fn impute_series_mean(d: &Dataset, feature: &str) -> Result<Dataset> {
    let f = d.series.feature_index(feature)?;
    let m = &d.series.values[f];
    let mask = &d.series.missing[f];
    let (sum, count) = m
        .values()
        .iter()
        .zip(mask)
        .filter(|(_, missing)| !**missing)
        .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
    if count == 0 {
        return Err(Error::Imputation(format!("series `{feature}` has no observed values")));
    }
    let mean = sum / count as f64;
    let mut out = d.clone();
    for (v, missing) in out.series.values[f].values_mut().iter_mut().zip(mask) {
        if *missing {
            *v = mean;
        }
    }
    out.series.missing[f] = vec![false; mask.len()];
    Ok(out)
}

/// Sample Pearson correlation.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("series lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::DegenerateInput("correlation needs at least two points".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::DegenerateInput("series has zero variance".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;
    use crate::numerics::Rng;

    fn dataset(prefix: &str, n: usize, attrs: &[&str], start: NaiveDate, n_days: usize) -> Dataset {
        let catchments = (0..n)
            .map(|i| Catchment {
                id: format!("{prefix}{i}"),
                source: prefix.to_string(),
                index: i,
            })
            .collect();
        let static_table = StaticTable::new(
            attrs.iter().map(|s| s.to_string()).collect(),
            Matrix::from_fn(n, attrs.len(), |r, c| (r * 10 + c) as f64),
        )
        .unwrap();
        let series = SeriesTensor::new(
            vec!["p".into(), "q".into()],
            start,
            vec![
                Matrix::from_fn(n_days, n, |t, c| (t * 100 + c) as f64),
                Matrix::from_fn(n_days, n, |t, c| -((t * 100 + c) as f64)),
            ],
        )
        .unwrap();
        Dataset::new(catchments, static_table, series).unwrap()
    }

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2000, 1, d).unwrap()
    }

    #[test]
    fn intersection_of_attribute_names() {
        let a = dataset("a", 2, &["a", "b", "c"], day(1), 5);
        let b = dataset("b", 1, &["d", "c", "b"], day(1), 5);
        let m = intersect_static(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(m.static_table.attribute_names, vec!["b", "c"]);
        assert_eq!(m.n_catchments(), 3);
        // b's row keeps its own values for b and c (columns 2 and 1 there)
        assert_eq!(m.static_table.values.row(2), &[2.0, 1.0]);
        let reversed = intersect_static(&[b, a]).unwrap();
        assert_eq!(reversed.static_table.attribute_names, m.static_table.attribute_names);
    }

    #[test]
    fn identical_datasets_double_catchments() {
        let a = dataset("a", 2, &["x", "y"], day(1), 5);
        let mut b = a.clone();
        for c in &mut b.catchments {
            c.id = format!("{}'", c.id);
        }
        let m = intersect_static(&[a, b]).unwrap();
        assert_eq!(m.static_table.attribute_names, vec!["x", "y"]);
        assert_eq!(m.n_catchments(), 4);
    }

    #[test]
    fn three_fixtures() {
        let m = intersect_static(&[
            dataset("a", 3, &["p_mean", "area"], day(1), 4),
            dataset("b", 2, &["p_mean"], day(1), 4),
            dataset("c", 1, &["slope", "p_mean"], day(1), 4),
        ])
        .unwrap();
        assert_eq!(m.static_table.values.shape(), (6, 1));
        let ids: Vec<_> = m.catchments.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["a0", "a1", "a2", "b0", "b1", "c0"]);
    }

    #[test]
    fn intersection_errors_and_calendar() {
        let a = dataset("a", 1, &["x"], day(1), 5);
        let b = dataset("b", 1, &["y"], day(1), 5);
        assert!(matches!(intersect_static(&[a.clone(), b]), Err(Error::Harmonization(_))));
        assert!(intersect_static(&[a.clone()]).is_err());

        let late = dataset("c", 1, &["x"], day(3), 5);
        let m = intersect_static(&[a, late]).unwrap();
        assert_eq!(m.series.start_date, day(3));
        assert_eq!(m.n_days(), 3);
        // a's day 2 is the merged day 0
        assert_eq!(m.series.values[0][(0, 0)], 200.0);
        assert_eq!(m.series.values[0][(0, 1)], 0.0);
    }

    #[test]
    fn static_mean_imputation() {
        let mut d = dataset("a", 3, &["x"], day(1), 2);
        d.static_table = StaticTable::new(
            vec!["x".into()],
            Matrix::new(3, 1, vec![1.0, f64::NAN, 3.0]).unwrap(),
        )
        .unwrap();
        let out = impute_static_means(&d).unwrap();
        assert_eq!(out.static_table.values.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(out.static_table.missing_count(), 0);

        let clean = dataset("a", 3, &["x", "y"], day(1), 2);
        assert_eq!(impute_static_means(&clean).unwrap(), clean);

        d.static_table = StaticTable::new(vec!["x".into()], Matrix::filled(3, 1, f64::NAN)).unwrap();
        assert!(matches!(impute_static_means(&d), Err(Error::Imputation(_))));
    }

    #[test]
    fn static_imputation_matches_loop_oracle() {
        let mut rng = Rng::new(21);
        let mut d = dataset("a", 20, &["a", "b", "c", "d", "e"], day(1), 2);
        let values = Matrix::from_fn(20, 5, |_, _| {
            if rng.bernoulli(0.1) {
                f64::NAN
            } else {
                rng.uniform_range(-5.0, 5.0)
            }
        });
        d.static_table = StaticTable::new(d.static_table.attribute_names.clone(), values.clone()).unwrap();
        let out = impute_static_means(&d).unwrap();
        for c in 0..5 {
            let mut sum = 0.0;
            let mut n = 0.0;
            for r in 0..20 {
                if !values[(r, c)].is_nan() {
                    sum += values[(r, c)];
                    n += 1.0;
                }
            }
            for r in 0..20 {
                let expected = if values[(r, c)].is_nan() { sum / n } else { values[(r, c)] };
                assert_eq!(out.static_table.values[(r, c)], expected);
            }
        }
    }

    #[test]
    fn month_encoding() {
        assert_eq!(encode_month_ordinal(1).unwrap(), 0.0);
        assert_eq!(encode_month_ordinal(12).unwrap(), 1.0);
        assert!((encode_month_ordinal(7).unwrap() - 6.0 / 11.0).abs() < 1e-15);
        assert!(encode_month_ordinal(0).is_err());
        assert!(encode_month_ordinal(13).is_err());
        let codes: Vec<f64> = (1..=12).map(|m| encode_month_ordinal(m).unwrap()).collect();
        assert!(codes.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(parse_month("Sep"), Some(9));
        assert_eq!(parse_month("september"), Some(9));
        assert_eq!(parse_month("ma"), None);
    }

    #[test]
    fn series_mean_imputation() {
        let mut d = dataset("a", 2, &["x"], day(1), 2);
        d.series = SeriesTensor::new(
            vec!["streamflow".into()],
            day(1),
            vec![Matrix::from_rows(&[vec![1.0, f64::NAN], vec![3.0, f64::NAN]]).unwrap()],
        )
        .unwrap();
        let out = impute_series_mean(&d, "streamflow").unwrap();
        assert_eq!(out.series.values[0].values(), &[1.0, 2.0, 3.0, 2.0]);
        assert!(matches!(impute_series_mean(&d, "rain"), Err(Error::Lookup(_))));
        assert_eq!(impute_series_mean(&out, "streamflow").unwrap(), out);
    }

    #[test]
    fn series_imputation_matches_flat_scan() {
        let mut rng = Rng::new(4);
        let mut d = dataset("a", 6, &["x"], day(1), 30);
        let m = Matrix::from_fn(30, 6, |_, _| {
            if rng.bernoulli(0.25) {
                f64::NAN
            } else {
                rng.uniform_range(0.0, 9.0)
            }
        });
        d.series = SeriesTensor::new(vec!["q".into()], day(1), vec![m.clone()]).unwrap();
        let out = impute_series_mean(&d, "q").unwrap();
        let observed: Vec<f64> = m.values().iter().copied().filter(|v| !v.is_nan()).collect();
        let mean = observed.iter().sum::<f64>() / observed.len() as f64;
        for (o, v) in out.series.values[0].values().iter().zip(m.values()) {
            assert_eq!(*o, if v.is_nan() { mean } else { *v });
        }
    }

    #[test]
    fn pearson() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((pearson_correlation(&a, &neg).unwrap() + 1.0).abs() < 1e-15);
        // centered cross products sum to 4, each centered square sum is 5

        assert!((pearson_correlation(&a, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(
            pearson_correlation(&a, &[1.0; 4]),
            Err(Error::DegenerateInput(_))
        ));
    }
}
