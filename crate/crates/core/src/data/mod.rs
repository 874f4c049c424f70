//! Choice tables: loading, quantile binning, grouped folds and resampling.

mod binning;
mod dataset;
mod folds;

pub use binning::{bin_columns, bin_features, quantile_bins, BinnedDataset, ColumnBins, DEFAULT_MAX_BINS, DEFAULT_MIN_DATA_IN_BIN};
pub use dataset::{load_dataset, read_dataset, CategoricalColumn, ChoiceDataset, Schema};
pub use folds::{bootstrap_rows, bootstrap_sample, group_holdout_split, grouped_kfold, FoldAssignment};
