//! Gradient-boosted random utility models.
//!
//! Each alternative's utility is a sum of per-parameter tree ensembles grown on
//! one or two variables, optionally plus a multi-variable block for socio-economic
//! characteristics. Probabilities come from a multinomial or nested logit head.
//! Piecewise-constant utilities can be smoothed into monotone cubic splines, from
//! which marginal utilities and values of time are derived.

pub mod boost;
pub mod data;
pub mod error;
pub mod indicators;
pub mod model_io;
pub mod pcuf;
pub mod prob;
pub mod spec;
pub mod spline;
pub mod synth;
pub mod tree;

pub use boost::{
    bootstrap_utilities, cross_validate, extract_asc, individual_constants, predict_probs, predict_utilities, train,
    train_logged, utility_curve, EnsembleKind, ParameterEnsemble, RUMBoostModel, StepFunction, TrainParams,
};
pub use data::{ChoiceDataset, Schema};
pub use error::{Error, Result};
pub use model_io::{load_model, load_smoothed, save_model, save_smoothed, ModelMeta};
pub use pcuf::{fit_fixed_count, optimize_knot_counts, smoothed_predict, SmoothParams, SmoothedModel, SplineOverride};
pub use prob::{Head, Matrix, UtilityMatrix};
pub use spec::{parse_spec, validate_spec, ModelSpec, Monotone, NestSpec};
pub use spline::{eval_spline, fritsch_carlson, SplineCurve};
pub use tree::{build_tree, leaf_value, split_gain, Node, Tree, TreeParams};
