//! Versioned JSON model files. Trees are stored as preorder node lists with raw
//! thresholds; floats are written in shortest round-trip form, so a reloaded
//! model predicts bit-for-bit like the saved one.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boost::{EnsembleKind, RUMBoostModel, RoundTree};
use crate::error::{Error, Result};
use crate::pcuf::{SmoothedModel, SplineOverride};
use crate::spec::parse_spec;
use crate::spline::SplineCurve;
use crate::tree::{Node, Tree};

pub const FORMAT_NAME: &str = "rumboost-model";
pub const FORMAT_VERSION: u32 = 1;

/// Provenance written next to the model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelMeta {
    pub config_hash: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    seed: u64,
    config_hash: Option<String>,
    spec: String,
    features: Vec<FeatureDoc>,
    ascs: Vec<f64>,
    trained_rounds: usize,
    ensembles: Vec<EnsembleDoc>,
    #[serde(default)]
    splines: Vec<SplineDoc>,
    #[serde(default)]
    df: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureDoc {
    name: String,
    min: f64,
    max: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleDoc {
    alt: String,
    kind: EnsembleKind,
    variables: Vec<String>,
    trees: Vec<TreeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    round: usize,
    nodes: Vec<Node>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplineDoc {
    param: usize,
    variable: String,
    knots: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

/// Serializes a (possibly smoothed) model.
pub fn to_json(sm: &SmoothedModel, meta: &ModelMeta) -> String {
    let m = &sm.base;
    let file = ModelFile {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        seed: m.seed,
        config_hash: meta.config_hash.clone(),
        spec: m.spec.to_toml(),
        features: m
            .features
            .iter()
            .zip(&m.feature_ranges)
            .map(|(name, &(min, max))| FeatureDoc {
                name: name.clone(),
                min,
                max,
            })
            .collect(),
        ascs: m.ascs.clone(),
        trained_rounds: m.trained_rounds,
        ensembles: m
            .ensembles
            .iter()
            .map(|e| EnsembleDoc {
                alt: m.spec.alt_names[e.alt].clone(),
                kind: e.kind,
                variables: e.variables.clone(),
                trees: e
                    .trees
                    .iter()
                    .map(|t| TreeDoc {
                        round: t.round,
                        nodes: t.tree.nodes().to_vec(),
                    })
                    .collect(),
            })
            .collect(),
        splines: sm
            .overrides
            .iter()
            .map(|o| SplineDoc {
                param: o.param,
                variable: o.curve.variable.clone(),
                knots: o.curve.knots.clone(),
                values: o.curve.values.clone(),
                derivs: o.curve.derivs.clone(),
            })
            .collect(),
        df: sm.df,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
    s.push('\n');
    s
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

/// Parses a model file.
pub fn from_json(text: &str) -> Result<(SmoothedModel, ModelMeta)> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Format {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    if file.format != FORMAT_NAME {
        return Err(Error::Model(format!("not a model file (format '{}')", file.format)));
    }
    if file.version != FORMAT_VERSION {
        return Err(Error::Model(format!(
            "model format version {} is not supported (expected {FORMAT_VERSION})",
            file.version
        )));
    }
    let spec = parse_spec(&file.spec)?;
    let names = file.features.iter().map(|f| f.name.clone()).collect();
    let ranges = file.features.iter().map(|f| (f.min, f.max)).collect();
    let mut model = RUMBoostModel::with_features(spec, names, ranges)?;
    if file.ensembles.len() != model.ensembles.len() {
        return Err(Error::Model(format!(
            "{} ensembles stored, spec defines {}",
            file.ensembles.len(),
            model.ensembles.len()
        )));
    }
    for (e, doc) in model.ensembles.iter_mut().zip(file.ensembles) {
        if doc.kind != e.kind || doc.variables != e.variables || doc.alt != model.spec.alt_names[e.alt] {
            return Err(Error::Model(format!("ensemble {:?} does not match the spec", doc.kind)));
        }
        for t in doc.trees {
            let tree = Tree::from_nodes(t.nodes)?;
            if let Some(f) = tree.features().into_iter().find(|f| !e.features.contains(f)) {
                return Err(Error::Model(format!(
                    "a tree of ensemble {:?} splits on feature {f} outside its variables",
                    e.kind
                )));
            }
            e.trees.push(RoundTree { round: t.round, tree });
        }
    }
    if file.ascs.len() != model.n_alts() {
        return Err(Error::Model("wrong number of constants".into()));
    }
    model.ascs = file.ascs;
    model.trained_rounds = file.trained_rounds;
    model.seed = file.seed;
    let mut overrides = Vec::with_capacity(file.splines.len());
    for s in file.splines {
        let curve = SplineCurve::from_parts(&s.variable, s.knots, s.values, s.derivs)?;
        overrides.push(SplineOverride { param: s.param, curve });
    }
    let mut sm = SmoothedModel::new(model, overrides, Default::default())?;
    sm.df = file.df;
    Ok((sm, ModelMeta { config_hash: file.config_hash }))
}

pub fn save_smoothed(sm: &SmoothedModel, path: impl AsRef<Path>, meta: &ModelMeta) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(sm, meta)).map_err(|e| Error::io(path, e))
}

pub fn save_model(model: &RUMBoostModel, path: impl AsRef<Path>, meta: &ModelMeta) -> Result<()> {
    save_smoothed(&SmoothedModel::unsmoothed(model.clone()), path, meta)
}

pub fn load_smoothed(path: impl AsRef<Path>) -> Result<(SmoothedModel, ModelMeta)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

/// Loads the tree model, ignoring any splines stored with it.
pub fn load_model(path: impl AsRef<Path>) -> Result<RUMBoostModel> {
    load_smoothed(path).map(|(sm, _)| sm.base)
}
