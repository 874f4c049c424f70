use crate::data::ChoiceDataset;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_BINS: usize = 255;
pub const DEFAULT_MIN_DATA_IN_BIN: usize = 3;

/// Quantile bins of one column.
///
/// `cuts` holds `n_bins - 1` strictly increasing thresholds, each the midpoint
/// between the largest value of one bin and the smallest value of the next.
/// A value `x` falls in bin `b` when `cuts[b-1] < x <= cuts[b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnBins {
    pub cuts: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl ColumnBins {
    pub fn n_bins(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn bin_of(&self, x: f64) -> usize {
        self.cuts.partition_point(|&c| c < x)
    }

    /// Raw-value interval `(lo, hi]` covered by bin `b` (open ends are infinite).
    pub fn interval(&self, b: usize) -> (f64, f64) {
        let lo = if b == 0 { f64::NEG_INFINITY } else { self.cuts[b - 1] };
        let hi = self.cuts.get(b).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    /// Threshold separating bins `..=b` from `b+1..`.
    pub fn threshold(&self, b: usize) -> f64 {
        self.cuts[b]
    }
}

/// Histogram-ready view of a dataset: per-column bin edges and per-row bin indices.
#[derive(Debug, Clone)]
pub struct BinnedDataset {
    pub max_bins: usize,
    pub min_data_in_bin: usize,
    columns: Vec<ColumnBins>,
    /// column-major bin indices
    bins: Vec<Vec<u16>>,
    n_rows: usize,
}

impl BinnedDataset {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_bins(&self, k: usize) -> &ColumnBins {
        &self.columns[k]
    }

    pub fn bins(&self, k: usize) -> &[u16] {
        &self.bins[k]
    }

    /// Builds a binned view directly from prepared edges and indices.
    pub fn from_parts(columns: Vec<ColumnBins>, bins: Vec<Vec<u16>>) -> Result<Self> {
        let n_rows = bins.first().map_or(0, Vec::len);
        if columns.len() != bins.len() || bins.iter().any(|b| b.len() != n_rows) {
            return Err(Error::InvalidArgument("inconsistent binned columns".into()));
        }
        let max_bins = columns.iter().map(ColumnBins::n_bins).max().unwrap_or(1);
        Ok(BinnedDataset {
            max_bins,
            min_data_in_bin: 1,
            columns,
            bins,
            n_rows,
        })
    }
}

/// Bins every column of `ds` into at most `max_bins` quantile bins.
pub fn bin_features(ds: &ChoiceDataset, max_bins: usize, min_data_in_bin: usize) -> Result<BinnedDataset> {
    let cols: Vec<&[f64]> = (0..ds.n_columns()).map(|k| ds.column_at(k)).collect();
    bin_columns(&cols, max_bins, min_data_in_bin)
}

/// Bins the given equal-length columns.
pub fn bin_columns(cols: &[&[f64]], max_bins: usize, min_data_in_bin: usize) -> Result<BinnedDataset> {
    let n_rows = cols.first().map_or(0, |c| c.len());
    if n_rows == 0 {
        return Err(Error::InvalidArgument("cannot bin an empty dataset".into()));
    }
    if cols.iter().any(|c| c.len() != n_rows) {
        return Err(Error::InvalidArgument("columns differ in length".into()));
    }
    if max_bins < 2 {
        return Err(Error::InvalidArgument("max_bins must be at least 2".into()));
    }
    if max_bins > u16::MAX as usize + 1 {
        return Err(Error::InvalidArgument(format!("max_bins {max_bins} exceeds {}", u16::MAX as usize + 1)));
    }
    if min_data_in_bin == 0 {
        return Err(Error::InvalidArgument("min_data_in_bin must be positive".into()));
    }
    let mut columns = Vec::with_capacity(cols.len());
    let mut bins = Vec::with_capacity(cols.len());
    for values in cols {
        let cb = quantile_bins(values, max_bins, min_data_in_bin);
        bins.push(values.iter().map(|&x| cb.bin_of(x) as u16).collect());
        columns.push(cb);
    }
    Ok(BinnedDataset {
        max_bins,
        min_data_in_bin,
        columns,
        bins,
        n_rows,
    })
}

/// Greedy quantile binning over distinct values: a bin is closed once the
/// cumulative count crosses the next multiple of `n / max_bins`, then bins
/// smaller than `min_data_in_bin` are merged into a neighbour.
pub fn quantile_bins(values: &[f64], max_bins: usize, min_data_in_bin: usize) -> ColumnBins {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for &v in &sorted {
        match distinct.last_mut() {
            Some((last, count)) if *last == v => *count += 1,
            _ => distinct.push((v, 1)),
        }
    }
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    let step = n as f64 / max_bins as f64;

    // groups of distinct-value indices [start, end)
    let mut groups: Vec<(usize, usize, usize)> = Vec::new(); // (start, end, count)
    let mut start = 0;
    let mut cum = 0usize;
    let mut in_bin = 0usize;
    let mut next_target = step;
    for (i, &(_, c)) in distinct.iter().enumerate() {
        cum += c;
        in_bin += c;
        if cum as f64 >= next_target - 1e-9 && cum < n && in_bin >= min_data_in_bin {
            groups.push((start, i + 1, in_bin));
            start = i + 1;
            in_bin = 0;
            next_target = ((cum as f64 / step + 1e-9).floor() + 1.0) * step;
        }
    }
    if start < distinct.len() {
        groups.push((start, distinct.len(), in_bin));
    }

    // merge undersized bins into the smaller neighbour
    while groups.len() > 1 {
        let Some(i) = groups.iter().position(|g| g.2 < min_data_in_bin) else {
            break;
        };
        let target = if i == 0 {
            1
        } else if i == groups.len() - 1 {
            i - 1
        } else if groups[i - 1].2 <= groups[i + 1].2 {
            i - 1
        } else {
            i + 1
        };
        let (a, b) = (i.min(target), i.max(target));
        groups[a] = (groups[a].0, groups[b].1, groups[a].2 + groups[b].2);
        groups.remove(b);
    }
    debug_assert!(groups.len() <= max_bins);

    let cuts = groups
        .windows(2)
        .map(|w| {
            let lo = distinct[w[0].1 - 1].0;
            let hi = distinct[w[1].0].0;
            let mid = lo + (hi - lo) / 2.0;
            if mid < hi {
                mid
            } else {
                lo
            }
        })
        .collect();
    ColumnBins { cuts, min, max }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_column_has_one_bin() {
        let cb = quantile_bins(&[1.0, 1.0, 1.0, 1.0], 255, 3);
        assert_eq!(cb.n_bins(), 1);
    }

    #[test]
    fn uniform_column_matches_exact_deciles() {
        let values: Vec<f64> = (0..1000).map(f64::from).collect();
        let cb = quantile_bins(&values, 10, 3);
        assert_eq!(cb.n_bins(), 10);
        // exact quantile oracle: the k/10 quantile boundary lies between
        // the (100k-1)-th and 100k-th order statistics
        for (k, &cut) in cb.cuts.iter().enumerate() {
            let lo = values[100 * (k + 1) - 1];
            let hi = values[100 * (k + 1)];
            assert!(lo < cut && cut < hi, "cut {k} = {cut}");
        }
        let mut counts = vec![0usize; 10];
        for &v in &values {
            counts[cb.bin_of(v)] += 1;
        }
        assert!(counts.iter().all(|&c| c == 100), "{counts:?}");
    }

    #[test]
    fn singleton_extreme_value_is_merged() {
        let mut values: Vec<f64> = (0..30).map(|i| f64::from(i % 5)).collect();
        values.push(1000.0);
        let cb = quantile_bins(&values, 255, 3);
        assert_eq!(cb.bin_of(1000.0), cb.bin_of(4.0));
        let mut counts = vec![0usize; cb.n_bins()];
        for &v in &values {
            counts[cb.bin_of(v)] += 1;
        }
        assert!(counts.iter().all(|&c| c >= 3), "{counts:?}");
    }

    #[test]
    fn few_distinct_values_get_own_bins() {
        let values: Vec<f64> = (0..100).map(|i| f64::from(i % 4)).collect();
        let cb = quantile_bins(&values, 255, 3);
        assert_eq!(cb.n_bins(), 4);
        assert_eq!(cb.cuts, vec![0.5, 1.5, 2.5]);
    }

    #[test]
    fn rejects_empty_and_tiny_max_bins() {
        let ds = ChoiceDataset::new(vec!["x".into()], vec![vec![]], vec![], None, vec!["a".into(), "b".into()]).unwrap();
        assert!(bin_features(&ds, 255, 3).is_err());
        let ds = ChoiceDataset::new(vec!["x".into()], vec![vec![1.0]], vec![0], None, vec!["a".into(), "b".into()]).unwrap();
        assert!(bin_features(&ds, 1, 3).is_err());
    }

    proptest! {
        #[test]
        fn binning_is_order_preserving_and_bounded(
            values in prop::collection::vec(-1e3f64..1e3, 1..400),
            max_bins in 2usize..40,
            min_data in 1usize..6,
        ) {
            let cb = quantile_bins(&values, max_bins, min_data);
            prop_assert!(cb.n_bins() <= max_bins);
            prop_assert!(cb.cuts.windows(2).all(|w| w[0] < w[1]));
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            for w in sorted.windows(2) {
                prop_assert!(cb.bin_of(w[0]) <= cb.bin_of(w[1]));
            }
            for &v in &values {
                let (lo, hi) = cb.interval(cb.bin_of(v));
                prop_assert!(lo < v && v <= hi);
            }
            let mut counts = vec![0usize; cb.n_bins()];
            for &v in &values {
                counts[cb.bin_of(v)] += 1;
            }
            if cb.n_bins() > 1 {
                prop_assert!(counts.iter().all(|&c| c >= min_data));
            }
        }
    }
}
