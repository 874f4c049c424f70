//! The boosting loop over per-parameter ensembles, prediction, constants and
//! step-function extraction.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{bin_columns, bootstrap_sample, group_holdout_split, ChoiceDataset, FoldAssignment};
use crate::error::{Error, Result};
use crate::prob::{cross_entropy, grad_hess, Head, Matrix, UtilityMatrix};
use crate::spec::{validate_spec, ModelSpec, Monotone};
use crate::tree::{build_tree_on_rows, Tree, TreeParams};

/// Hessian floor for the nested head, whose diagonal can vanish for
/// alternatives far from the chosen nest.
const NESTED_HESS_FLOOR: f64 = 1e-6;

/// Boosting settings. Parsed from TOML with [`TrainParams::from_toml`]; absent
/// keys keep their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub num_rounds: usize,
    /// Stop once validation loss has not improved for this many rounds.
    pub early_stopping_rounds: Option<usize>,
    /// Share of groups held out when early stopping runs without a validation set.
    pub valid_share: f64,
    pub min_data_in_leaf: usize,
    pub min_sum_hessian_in_leaf: f64,
    pub min_gain_to_split: f64,
    pub lambda_l1: f64,
    pub lambda_l2: f64,
    pub max_bins: usize,
    pub min_data_in_bin: usize,
    pub bagging_fraction: f64,
    pub bagging_freq: usize,
    /// Column share sampled per round for FE-block trees.
    pub feature_fraction: f64,
    /// Keep the `(J-1)/J` leaf factor under the nested head.
    pub nested_redundancy: bool,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            learning_rate: 0.1,
            num_rounds: 3000,
            early_stopping_rounds: Some(100),
            valid_share: 0.2,
            min_data_in_leaf: 20,
            min_sum_hessian_in_leaf: 1e-3,
            min_gain_to_split: 0.0,
            lambda_l1: 0.0,
            lambda_l2: 0.0,
            max_bins: crate::data::DEFAULT_MAX_BINS,
            min_data_in_bin: crate::data::DEFAULT_MIN_DATA_IN_BIN,
            bagging_fraction: 1.0,
            bagging_freq: 0,
            feature_fraction: 1.0,
            nested_redundancy: true,
            seed: 0,
        }
    }
}

impl TrainParams {
    pub fn from_toml(doc: &str) -> Result<Self> {
        let p: TrainParams = toml::from_str(doc).map_err(|e| Error::InvalidArgument(format!("training parameters: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    /// Canonical TOML form, every key written.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("parameters serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.num_rounds == 0 {
            return bad("number of rounds must be positive");
        }
        if self.early_stopping_rounds == Some(0) {
            return bad("early stopping rounds must be positive");
        }
        if !(self.valid_share > 0.0 && self.valid_share < 1.0) {
            return bad("validation share must lie in (0, 1)");
        }
        if [self.min_sum_hessian_in_leaf, self.min_gain_to_split, self.lambda_l1, self.lambda_l2]
            .iter()
            .any(|v| !(*v >= 0.0 && v.is_finite()))
        {
            return bad("leaf thresholds and penalties must be non-negative");
        }
        if !(self.bagging_fraction > 0.0 && self.bagging_fraction <= 1.0) {
            return bad("bagging fraction must lie in (0, 1]");
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return bad("feature fraction must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Index into `ModelSpec::parameters`.
    Parameter(usize),
    /// Index into `ModelSpec::fe_blocks`.
    FeBlock(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTree {
    /// Boosting round (0-based) that produced the tree.
    pub round: usize,
    pub tree: Tree,
}

/// All trees of one parameter (or FE block) of one alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterEnsemble {
    pub alt: usize,
    pub kind: EnsembleKind,
    pub variables: Vec<String>,
    /// Model feature index of each variable; trees split on these indices.
    pub features: Vec<usize>,
    pub trees: Vec<RoundTree>,
}

impl ParameterEnsemble {
    /// Sum of tree outputs, in tree order.
    #[inline]
    pub fn predict_by(&self, value: impl Fn(usize) -> f64 + Copy) -> f64 {
        let mut s = 0.0;
        for t in &self.trees {
            s += t.tree.predict_by(value);
        }
        s
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.predict_by(|f| row[f])
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn is_fe(&self) -> bool {
        matches!(self.kind, EnsembleKind::FeBlock(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RUMBoostModel {
    pub spec: ModelSpec,
    pub features: Vec<String>,
    /// Observed (min, max) of each feature on the training data.
    pub feature_ranges: Vec<(f64, f64)>,
    /// Parameters in spec order, then FE blocks.
    pub ensembles: Vec<ParameterEnsemble>,
    /// Constants normalised so the reference alternative's is 0.
    pub ascs: Vec<f64>,
    pub trained_rounds: usize,
    pub seed: u64,
}

impl RUMBoostModel {
    /// A model with no trees; feature ranges come from `ds`.
    pub fn untrained(spec: &ModelSpec, ds: &ChoiceDataset) -> Result<Self> {
        let features = spec.variables();
        let mut ranges = Vec::with_capacity(features.len());
        for f in &features {
            let col = ds.require_column(f)?;
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ranges.push(if col.is_empty() { (0.0, 0.0) } else { (lo, hi) });
        }
        Self::with_features(spec.clone(), features, ranges)
    }

    /// A model with no trees over the given features.
    pub fn with_features(spec: ModelSpec, features: Vec<String>, feature_ranges: Vec<(f64, f64)>) -> Result<Self> {
        if features.len() != feature_ranges.len() {
            return Err(Error::Model("feature names and ranges differ in length".into()));
        }
        let index = |v: &String| {
            features
                .iter()
                .position(|f| f == v)
                .ok_or_else(|| Error::Model(format!("variable '{v}' is not a model feature")))
        };
        let mut ensembles = Vec::new();
        for (i, p) in spec.parameters.iter().enumerate() {
            ensembles.push(ParameterEnsemble {
                alt: p.alt,
                kind: EnsembleKind::Parameter(i),
                variables: p.variables.clone(),
                features: p.variables.iter().map(index).collect::<Result<_>>()?,
                trees: Vec::new(),
            });
        }
        for (i, b) in spec.fe_blocks.iter().enumerate() {
            ensembles.push(ParameterEnsemble {
                alt: b.alt,
                kind: EnsembleKind::FeBlock(i),
                variables: b.variables.clone(),
                features: b.variables.iter().map(index).collect::<Result<_>>()?,
                trees: Vec::new(),
            });
        }
        let j = spec.n_alts();
        Ok(RUMBoostModel {
            spec,
            features,
            feature_ranges,
            ensembles,
            ascs: vec![0.0; j],
            trained_rounds: 0,
            seed: 0,
        })
    }

    pub fn n_alts(&self) -> usize {
        self.spec.n_alts()
    }

    pub fn head(&self) -> Head {
        match &self.spec.nest {
            Some(n) => Head::Nested(n.clone()),
            None => Head::Mnl,
        }
    }

    pub fn n_trees(&self) -> usize {
        self.ensembles.iter().map(ParameterEnsemble::n_trees).sum()
    }

    pub fn ensemble(&self, kind: EnsembleKind) -> Option<&ParameterEnsemble> {
        self.ensembles.iter().find(|e| e.kind == kind)
    }

    /// Feature columns of `ds` in model order.
    pub fn feature_columns<'a>(&self, ds: &'a ChoiceDataset) -> Result<Vec<&'a [f64]>> {
        self.features.iter().map(|f| ds.require_column(f)).collect()
    }

    /// Drops every tree grown at or after `rounds`.
    pub fn truncate(&mut self, rounds: usize) {
        for e in &mut self.ensembles {
            e.trees.retain(|t| t.round < rounds);
        }
        self.trained_rounds = self.trained_rounds.min(rounds);
        self.ascs = extract_asc(self);
    }

    /// Raw utilities: per alternative, the sum of its ensembles' outputs.
    pub fn predict_utilities(&self, ds: &ChoiceDataset) -> Result<UtilityMatrix> {
        let cols = self.feature_columns(ds)?;
        self.utilities_with(&cols, ds.n_rows(), |e, _, value| e.predict_by(value))
    }

    /// Evaluates utilities with a custom per-ensemble contribution, summing
    /// ensembles in model order. The closure gets the ensemble, its index and
    /// a feature accessor for the row.
    pub(crate) fn utilities_with<F>(&self, cols: &[&[f64]], n: usize, contribution: F) -> Result<UtilityMatrix>
    where
        F: Fn(&ParameterEnsemble, usize, &dyn Fn(usize) -> f64) -> f64 + Sync,
    {
        let j = self.n_alts();
        let mut data = vec![0.0; n * j];
        data.par_chunks_mut(j.max(1)).enumerate().for_each(|(r, out)| {
            let value = |f: usize| cols[f][r];
            for (k, e) in self.ensembles.iter().enumerate() {
                out[e.alt] += contribution(e, k, &value);
            }
        });
        Matrix::from_vec(n, j, data)
    }

    pub fn predict_probs(&self, ds: &ChoiceDataset) -> Result<Matrix> {
        self.head().probs(&self.predict_utilities(ds)?)
    }

    /// Mean negative log-likelihood on `ds`.
    pub fn cross_entropy(&self, ds: &ChoiceDataset) -> Result<f64> {
        Ok(cross_entropy(&self.predict_probs(ds)?, ds.choice()))
    }

    /// Utilities with every alternative shifted by the reference alternative's
    /// raw constant, so `V_i = ASC_i + sum_k (f_ik(x) - f_ik(0))`.
    pub fn predict_utilities_normalized(&self, ds: &ChoiceDataset) -> Result<UtilityMatrix> {
        let raw = raw_constants(self);
        let shift = raw[self.spec.reference_alt];
        let mut v = self.predict_utilities(ds)?;
        for r in 0..v.n_rows() {
            for x in v.row_mut(r) {
                *x -= shift;
            }
        }
        Ok(v)
    }

    /// Step function of a one-variable parameter.
    pub fn utility_curve(&self, param: usize) -> Result<StepFunction> {
        let e = self
            .ensemble(EnsembleKind::Parameter(param))
            .ok_or_else(|| Error::InvalidArgument(format!("no parameter {param}")))?;
        if e.variables.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "parameter ({}) has two variables; export it with a contour table instead",
                e.variables.join(", ")
            )));
        }
        let f = e.features[0];
        let mut bps: Vec<f64> = e.trees.iter().flat_map(|t| t.tree.thresholds(f)).collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        // interval (b_{k-1}, b_k] is represented by its right end; the last by +inf
        let values = bps
            .iter()
            .copied()
            .chain(std::iter::once(f64::INFINITY))
            .map(|x| e.predict_by(|_| x))
            .collect();
        Ok(StepFunction {
            variable: e.variables[0].clone(),
            breakpoints: bps,
            values,
            domain: self.feature_ranges[f],
        })
    }

    /// Parameter index of `alt`'s one-variable parameter on `variable`.
    pub fn curve_parameter(&self, alt: &str, variable: &str) -> Result<usize> {
        let a = self
            .spec
            .alt_index(alt)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown alternative '{alt}'")))?;
        if let Some(p) = self.spec.find_parameter(a, &[variable]) {
            return Ok(p);
        }
        if self.spec.parameters.iter().any(|p| p.alt == a && p.variables.iter().any(|v| v == variable)) {
            return Err(Error::InvalidArgument(format!(
                "'{variable}' of '{alt}' only enters an interaction; export it with a contour table instead"
            )));
        }
        Err(Error::InvalidArgument(format!("'{alt}' has no parameter on '{variable}'")))
    }
}

/// Piecewise-constant utility curve of one variable. Value `values[k]` holds on
/// `(breakpoints[k-1], breakpoints[k]]`, with open ends below the first and
/// above the last breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub variable: String,
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub domain: (f64, f64),
}

impl StepFunction {
    pub fn constant(variable: &str, value: f64, domain: (f64, f64)) -> Self {
        StepFunction {
            variable: variable.to_string(),
            breakpoints: Vec::new(),
            values: vec![value],
            domain,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.breakpoints.partition_point(|&b| b < x)]
    }

    /// True when consecutive values never move against `direction`.
    pub fn respects(&self, direction: Monotone) -> bool {
        self.values.windows(2).all(|w| match direction {
            Monotone::None => true,
            Monotone::Increasing => w[0] <= w[1],
            Monotone::Decreasing => w[0] >= w[1],
        })
    }

    /// Monotone direction of the values, if any (a flat curve is both).
    pub fn direction(&self) -> Monotone {
        if self.respects(Monotone::Decreasing) && !self.values.windows(2).all(|w| w[0] == w[1]) {
            Monotone::Decreasing
        } else if self.respects(Monotone::Increasing) {
            Monotone::Increasing
        } else {
            Monotone::None
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    /// Rounds completed (1-based).
    pub round: usize,
    pub train_ce: f64,
    pub valid_ce: Option<f64>,
    pub trees_added: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: RUMBoostModel,
    pub log: Vec<RoundLog>,
    /// Round count kept in the model.
    pub best_round: usize,
    pub best_valid_ce: Option<f64>,
}

/// Trains a model. See [`train_logged`].
pub fn train(
    ds: &ChoiceDataset,
    spec: &ModelSpec,
    params: &TrainParams,
    valid: Option<&ChoiceDataset>,
) -> Result<RUMBoostModel> {
    train_logged(ds, spec, params, valid).map(|o| o.model)
}

/// Trains a model and returns the per-round log.
///
/// Every round computes probabilities and derivatives once, grows one
/// candidate tree per ensemble, keeps the best-gain candidate per alternative
/// and applies all accepted trees together. Training ends at `num_rounds`,
/// when no alternative finds a split, or when the validation loss has not
/// improved for `early_stopping_rounds`; in the last case the model is cut back
/// to its best validation round.
///
/// With early stopping but no validation set, a seeded group-aware split of
/// `ds` provides one.
pub fn train_logged(
    ds: &ChoiceDataset,
    spec: &ModelSpec,
    params: &TrainParams,
    valid: Option<&ChoiceDataset>,
) -> Result<TrainOutput> {
    params.validate()?;
    let spec = validate_spec(spec, ds)?;
    if let Some(v) = valid {
        validate_spec(&spec, v)?;
    }
    match (valid, params.early_stopping_rounds) {
        (None, Some(_)) => match group_holdout_split(ds, params.valid_share, params.seed) {
            Ok((tr, va)) if !tr.is_empty() && !va.is_empty() => {
                log::info!(
                    "early stopping on a {}-row group holdout of the training data",
                    va.len()
                );
                fit(&ds.subset(&tr), &spec, params, Some(&ds.subset(&va)))
            }
            _ => {
                log::warn!("too few groups for an early-stopping holdout; training without early stopping");
                fit(ds, &spec, params, None)
            }
        },
        _ => fit(ds, &spec, params, valid),
    }
}

fn tree_params(model: &RUMBoostModel, params: &TrainParams) -> Vec<TreeParams> {
    let j = model.n_alts();
    let redundancy = match (&model.spec.nest, params.nested_redundancy) {
        (Some(_), false) => 1.0,
        _ => TreeParams::redundancy_for(j),
    };
    model
        .ensembles
        .iter()
        .map(|e| {
            let (max_depth, max_leaves, monotone) = match e.kind {
                EnsembleKind::Parameter(i) => {
                    let p = &model.spec.parameters[i];
                    let mono: BTreeMap<usize, Monotone> = e
                        .features
                        .iter()
                        .zip(&p.monotone)
                        .filter(|(_, m)| **m != Monotone::None)
                        .map(|(f, m)| (*f, *m))
                        .collect();
                    (p.max_depth, None, mono)
                }
                EnsembleKind::FeBlock(i) => {
                    let b = &model.spec.fe_blocks[i];
                    (b.max_depth, b.num_leaves, BTreeMap::new())
                }
            };
            TreeParams {
                max_depth,
                max_leaves,
                min_data_in_leaf: params.min_data_in_leaf,
                min_sum_hessian_in_leaf: params.min_sum_hessian_in_leaf,
                min_gain_to_split: params.min_gain_to_split,
                lambda_l1: params.lambda_l1,
                lambda_l2: params.lambda_l2,
                learning_rate: params.learning_rate,
                redundancy,
                allowed_columns: e.features.clone(),
                monotone,
            }
        })
        .collect()
}

fn fit(
    ds: &ChoiceDataset,
    spec: &ModelSpec,
    params: &TrainParams,
    valid: Option<&ChoiceDataset>,
) -> Result<TrainOutput> {
    let mut model = RUMBoostModel::untrained(spec, ds)?;
    model.seed = params.seed;
    let n = ds.n_rows();
    let j = model.n_alts();
    if n == 0 {
        return Err(Error::Validation("training data has no rows".into()));
    }
    let cols = model.feature_columns(ds)?;
    let binned = bin_columns(&cols, params.max_bins, params.min_data_in_bin)?;
    let vcols = match valid {
        Some(v) => Some(model.feature_columns(v)?),
        None => None,
    };
    let head = model.head();
    let base_tp = tree_params(&model, params);
    let early = valid.and(params.early_stopping_rounds);

    let mut v = Matrix::zeros(n, j);
    let mut vv = valid.map(|d| Matrix::zeros(d.n_rows(), j));
    let mut probs = head.probs(&v)?;
    let mut best_ce = match (&vv, valid) {
        (Some(m), Some(d)) => Some(cross_entropy(&head.probs(m)?, d.choice())),
        _ => None,
    };
    let mut best_round = 0usize;
    let mut log = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut rows: Vec<usize> = (0..n).collect();
    let nested = matches!(head, Head::Nested(_));

    let mut rounds_done = 0;
    for round in 0..params.num_rounds {
        let gh = grad_hess(&probs, ds.choice(), &head)?;
        let grads: Vec<Vec<f64>> = (0..j).map(|k| gh.grad.column(k)).collect();
        let hess: Vec<Vec<f64>> = (0..j)
            .map(|k| {
                let mut h = gh.hess.column(k);
                if nested {
                    h.iter_mut().for_each(|x| *x = x.max(NESTED_HESS_FLOOR));
                }
                h
            })
            .collect();
        if params.bagging_fraction < 1.0 && params.bagging_freq > 0 && round % params.bagging_freq == 0 {
            let k = ((n as f64 * params.bagging_fraction).round() as usize).clamp(1, n);
            rows = sample(&mut rng, n, k).into_vec();
            rows.sort_unstable();
        }
        let tps: Vec<TreeParams> = base_tp
            .iter()
            .zip(&model.ensembles)
            .map(|(tp, e)| {
                let mut tp = tp.clone();
                if e.is_fe() && params.feature_fraction < 1.0 && tp.allowed_columns.len() > 1 {
                    let m = tp.allowed_columns.len();
                    let k = ((m as f64 * params.feature_fraction).ceil() as usize).clamp(1, m);
                    let mut pick = sample(&mut rng, m, k).into_vec();
                    pick.sort_unstable();
                    tp.allowed_columns = pick.into_iter().map(|i| e.features[i]).collect();
                }
                tp
            })
            .collect();

        let candidates: Vec<Result<Tree>> = model
            .ensembles
            .par_iter()
            .zip(tps.par_iter())
            .map(|(e, tp)| build_tree_on_rows(&binned, &grads[e.alt], &hess[e.alt], rows.clone(), tp))
            .collect();
        let mut best: Vec<Option<(usize, f64, Tree)>> = vec![None; j];
        for (k, cand) in candidates.into_iter().enumerate() {
            let tree = cand?;
            if tree.is_leaf() {
                continue;
            }
            let alt = model.ensembles[k].alt;
            let gain = tree.total_gain();
            if best[alt].as_ref().is_none_or(|b| gain > b.1) {
                best[alt] = Some((k, gain, tree));
            }
        }
        let accepted: Vec<(usize, Tree)> = best.into_iter().flatten().map(|(k, _, t)| (k, t)).collect();
        if accepted.is_empty() {
            log::info!("no alternative found a split at round {}; stopping", round + 1);
            break;
        }
        for (k, tree) in &accepted {
            let alt = model.ensembles[*k].alt;
            for r in 0..n {
                v.add(r, alt, tree.predict_by(|f| cols[f][r]));
            }
            if let (Some(m), Some(c)) = (vv.as_mut(), vcols.as_ref()) {
                for r in 0..m.n_rows() {
                    m.add(r, alt, tree.predict_by(|f| c[f][r]));
                }
            }
        }
        let added = accepted.len();
        for (k, tree) in accepted {
            model.ensembles[k].trees.push(RoundTree { round, tree });
        }
        rounds_done = round + 1;
        probs = head.probs(&v)?;
        let train_ce = cross_entropy(&probs, ds.choice());
        let valid_ce = match (&vv, valid) {
            (Some(m), Some(d)) => Some(cross_entropy(&head.probs(m)?, d.choice())),
            _ => None,
        };
        log::debug!("round {rounds_done}: train {train_ce:.6} valid {valid_ce:?}");
        log.push(RoundLog {
            round: rounds_done,
            train_ce,
            valid_ce,
            trees_added: added,
        });
        if let (Some(ce), Some(b)) = (valid_ce, best_ce) {
            if ce < b {
                best_ce = Some(ce);
                best_round = rounds_done;
            }
        }
        if let Some(patience) = early {
            if rounds_done - best_round >= patience {
                log::info!("early stopping at round {rounds_done}, best round {best_round}");
                break;
            }
        }
    }
    if early.is_none() {
        best_round = rounds_done;
    }
    model.trained_rounds = rounds_done;
    model.truncate(best_round);
    Ok(TrainOutput {
        model,
        log,
        best_round,
        best_valid_ce: best_ce,
    })
}

/// Raw constants: each alternative's ensembles evaluated with every variable at 0.
fn raw_constants(model: &RUMBoostModel) -> Vec<f64> {
    let mut raw = vec![0.0; model.n_alts()];
    for e in &model.ensembles {
        raw[e.alt] += e.predict_by(|_| 0.0);
    }
    raw
}

/// Constants read off the ensembles at the zero input, relative to the
/// reference alternative.
pub fn extract_asc(model: &RUMBoostModel) -> Vec<f64> {
    let raw = raw_constants(model);
    let reference = raw[model.spec.reference_alt];
    raw.iter()
        .enumerate()
        .map(|(i, &a)| if i == model.spec.reference_alt { 0.0 } else { a - reference })
        .collect()
}

pub fn predict_utilities(model: &RUMBoostModel, ds: &ChoiceDataset) -> Result<UtilityMatrix> {
    model.predict_utilities(ds)
}

pub fn predict_probs(model: &RUMBoostModel, ds: &ChoiceDataset) -> Result<Matrix> {
    model.predict_probs(ds)
}

/// Step function of `alt`'s one-variable parameter on `variable`.
pub fn utility_curve(model: &RUMBoostModel, alt: &str, variable: &str) -> Result<StepFunction> {
    model.utility_curve(model.curve_parameter(alt, variable)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub fold_ce: Vec<f64>,
    pub fold_best_round: Vec<usize>,
    pub mean_ce: f64,
    /// Rounded mean of the per-fold best rounds.
    pub mean_best_round: usize,
}

/// Trains on each fold's complement with early stopping on the held fold.
pub fn cross_validate(
    ds: &ChoiceDataset,
    spec: &ModelSpec,
    params: &TrainParams,
    folds: &FoldAssignment,
) -> Result<CvResult> {
    if folds.fold.len() != ds.n_rows() {
        return Err(Error::InvalidArgument(format!(
            "fold assignment covers {} rows, dataset has {}",
            folds.fold.len(),
            ds.n_rows()
        )));
    }
    let mut fold_ce = Vec::with_capacity(folds.k);
    let mut fold_best_round = Vec::with_capacity(folds.k);
    for f in 0..folds.k {
        let (tr, held) = folds.split(f);
        let (train_ds, held_ds) = (ds.subset(&tr), ds.subset(&held));
        for (side, d) in [("training", &train_ds), ("held-out", &held_ds)] {
            let mut seen = vec![false; ds.n_alts()];
            d.choice().iter().for_each(|&c| seen[c] = true);
            if let Some(c) = seen.iter().position(|s| !s) {
                log::warn!("fold {f}: {side} rows never choose '{}'", ds.alt_names()[c]);
            }
        }
        let out = train_logged(&train_ds, spec, params, Some(&held_ds))?;
        let ce = out.model.cross_entropy(&held_ds)?;
        log::info!("fold {f}: held-out CE {ce:.6} at {} rounds", out.best_round);
        fold_ce.push(ce);
        fold_best_round.push(out.best_round);
    }
    let k = folds.k as f64;
    Ok(CvResult {
        mean_ce: fold_ce.iter().sum::<f64>() / k,
        mean_best_round: (fold_best_round.iter().sum::<usize>() as f64 / k).round() as usize,
        fold_ce,
        fold_best_round,
    })
}

/// Pointwise summary of one curve over bootstrap iterations, on the union of
/// all iterations' breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveBand {
    pub alt: usize,
    pub param: usize,
    pub variable: String,
    pub breakpoints: Vec<f64>,
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub std: Vec<f64>,
}

impl CurveBand {
    pub fn mean_curve(&self, domain: (f64, f64)) -> StepFunction {
        StepFunction {
            variable: self.variable.clone(),
            breakpoints: self.breakpoints.clone(),
            values: self.mean.clone(),
            domain,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BootstrapResult {
    /// One-variable parameter indices, in spec order.
    pub params: Vec<usize>,
    /// `curves[t][k]` is parameter `params[k]` in iteration `t`.
    pub curves: Vec<Vec<StepFunction>>,
    pub bands: Vec<CurveBand>,
}

/// Retrains on `iterations` bootstrap resamples (seeds `seed`, `seed + 1`, ...)
/// and summarises every one-variable curve.
pub fn bootstrap_utilities(
    ds: &ChoiceDataset,
    spec: &ModelSpec,
    params: &TrainParams,
    iterations: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("at least one bootstrap iteration is needed".into()));
    }
    let targets: Vec<usize> = (0..spec.parameters.len())
        .filter(|&p| spec.parameters[p].variables.len() == 1)
        .collect();
    let mut curves = Vec::with_capacity(iterations);
    for t in 0..iterations {
        let sample = bootstrap_sample(ds, seed.wrapping_add(t as u64))?;
        let model = train(&sample, spec, params, None)?;
        curves.push(targets.iter().map(|&p| model.utility_curve(p)).collect::<Result<Vec<_>>>()?);
    }
    let bands = targets
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let mut bps: Vec<f64> = curves.iter().flat_map(|c| c[k].breakpoints.iter().copied()).collect();
            bps.sort_by(f64::total_cmp);
            bps.dedup();
            let points: Vec<f64> = bps.iter().copied().chain(std::iter::once(f64::INFINITY)).collect();
            let t = iterations as f64;
            let (mut mean, mut min, mut max, mut std) = (vec![], vec![], vec![], vec![]);
            for &x in &points {
                let vals: Vec<f64> = curves.iter().map(|c| c[k].eval(x)).collect();
                let m = vals.iter().sum::<f64>() / t;
                mean.push(m);
                min.push(vals.iter().copied().fold(f64::INFINITY, f64::min));
                max.push(vals.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                std.push((vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / t).sqrt());
            }
            CurveBand {
                alt: spec.parameters[p].alt,
                param: p,
                variable: spec.parameters[p].variables[0].clone(),
                breakpoints: bps,
                mean,
                min,
                max,
                std,
            }
        })
        .collect();
    Ok(BootstrapResult {
        params: targets,
        curves,
        bands,
    })
}

/// Per-row sum of each alternative's FE-block ensembles (N x J).
pub fn individual_constants(model: &RUMBoostModel, ds: &ChoiceDataset) -> Result<Matrix> {
    if model.spec.fe_blocks.is_empty() {
        return Err(Error::InvalidArgument("the model has no functional-effect blocks".into()));
    }
    let cols = model.feature_columns(ds)?;
    model.utilities_with(&cols, ds.n_rows(), |e, _, value| if e.is_fe() { e.predict_by(value) } else { 0.0 })
}
