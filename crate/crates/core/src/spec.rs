//! Utility specification: which variables enter which alternative, under which
//! monotone direction, interaction grouping, nesting and functional-effect blocks.
//!
//! The on-disk form is TOML:
//!
//! ```toml
//! alternatives = ["walk", "cycle", "pt", "drive"]
//! reference_alt = "walk"
//! socio_economic = ["age", "female"]
//!
//! [[parameter]]
//! alt = "drive"
//! variables = ["cost_driving"]
//! monotone = ["decreasing"]
//!
//! [[parameter]]
//! alt = "walk"
//! variables = ["dur_walking", "age"]
//! monotone = ["decreasing", "none"]
//!
//! [[fe_block]]
//! alt = "pt"
//! variables = ["age", "female"]
//! max_depth = 6
//! num_leaves = 74
//!
//! [nest]
//! groups = [["walk"], ["cycle"], ["pt", "drive"]]
//! mu = [1.0, 1.0, 1.167]
//! ```

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::data::ChoiceDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotone {
    #[default]
    None,
    Increasing,
    Decreasing,
}

impl Monotone {
    /// +1, -1 or 0.
    pub fn sign(self) -> i8 {
        match self {
            Monotone::None => 0,
            Monotone::Increasing => 1,
            Monotone::Decreasing => -1,
        }
    }
}

/// One utility parameter: a tree ensemble over one variable, or over a pair
/// of interacting variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpec {
    pub alt: usize,
    pub variables: Vec<String>,
    pub monotone: Vec<Monotone>,
    pub max_depth: usize,
}

/// Unrestricted-interaction ensemble over socio-economic characteristics,
/// producing an individual-specific constant for one alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct FeBlockSpec {
    pub alt: usize,
    pub variables: Vec<String>,
    pub max_depth: usize,
    pub num_leaves: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestSpec {
    nests: Vec<Vec<usize>>,
    mu: Vec<f64>,
    nest_of: Vec<usize>,
}

impl NestSpec {
    pub fn new(nests: Vec<Vec<usize>>, mu: Vec<f64>, n_alts: usize) -> Result<Self> {
        if nests.len() != mu.len() {
            return Err(Error::spec("nest", format!("{} nests but {} mu values", nests.len(), mu.len())));
        }
        for (m, &v) in mu.iter().enumerate() {
            if !(v >= 1.0) || !v.is_finite() {
                return Err(Error::spec(format!("nest.mu[{m}]"), format!("mu must be a finite value >= 1, got {v}")));
            }
        }
        let mut nest_of = vec![usize::MAX; n_alts];
        for (m, members) in nests.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::spec(format!("nest.groups[{m}]"), "empty nest"));
            }
            for &i in members {
                if i >= n_alts {
                    return Err(Error::spec(format!("nest.groups[{m}]"), format!("alternative {i} out of range")));
                }
                if nest_of[i] != usize::MAX {
                    return Err(Error::spec(format!("nest.groups[{m}]"), format!("alternative {i} is in two nests")));
                }
                nest_of[i] = m;
            }
        }
        if let Some(i) = nest_of.iter().position(|&m| m == usize::MAX) {
            return Err(Error::spec("nest.groups", format!("alternative {i} belongs to no nest")));
        }
        Ok(NestSpec { nests, mu, nest_of })
    }

    /// Parses `"walk;cycle;pt,drive"`: nests separated by `;`, members by `,`.
    /// `mu` applies to every nest with more than one member; singleton nests get 1.
    pub fn from_groups_str(groups: &str, mu: f64, alt_names: &[String]) -> Result<Self> {
        let mut nests = Vec::new();
        for (m, part) in groups.split(';').enumerate() {
            let mut members = Vec::new();
            for name in part.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let i = alt_index(alt_names, name).ok_or_else(|| {
                    Error::spec(format!("nest group {m}"), format!("unknown alternative '{name}'"))
                })?;
                members.push(i);
            }
            nests.push(members);
        }
        let mus = nests.iter().map(|n| if n.len() > 1 { mu } else { 1.0 }).collect();
        NestSpec::new(nests, mus, alt_names.len())
    }

    /// All alternatives in their own nest with scale 1.
    pub fn singletons(n_alts: usize) -> Self {
        NestSpec::new((0..n_alts).map(|i| vec![i]).collect(), vec![1.0; n_alts], n_alts).expect("valid singleton nests")
    }

    pub fn nests(&self) -> &[Vec<usize>] {
        &self.nests
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn nest_of(&self, alt: usize) -> usize {
        self.nest_of[alt]
    }

    pub fn n_alts(&self) -> usize {
        self.nest_of.len()
    }

    /// Same partition with every non-singleton nest scaled by `mu`.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        let mus = self.nests.iter().map(|n| if n.len() > 1 { mu } else { 1.0 }).collect();
        NestSpec::new(self.nests.clone(), mus, self.n_alts())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub alt_names: Vec<String>,
    pub parameters: Vec<ParameterSpec>,
    pub fe_blocks: Vec<FeBlockSpec>,
    pub nest: Option<NestSpec>,
    pub reference_alt: usize,
    /// Characteristics of the decision maker, shareable across utilities.
    pub socio_economic: Vec<String>,
    /// Let depth-1 parameters use variables that an FE block of the same
    /// alternative already covers.
    pub allow_fe_overlap: bool,
}

impl ModelSpec {
    pub fn n_alts(&self) -> usize {
        self.alt_names.len()
    }

    pub fn alt_index(&self, name: &str) -> Option<usize> {
        alt_index(&self.alt_names, name)
    }

    /// Every distinct variable referenced by parameters or FE blocks, in first-use order.
    pub fn variables(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.parameters
            .iter()
            .flat_map(|p| p.variables.iter())
            .chain(self.fe_blocks.iter().flat_map(|b| b.variables.iter()))
            .filter(|v| seen.insert(v.as_str()))
            .cloned()
            .collect()
    }

    /// Index of the first parameter of `alt` with exactly these variables.
    pub fn find_parameter(&self, alt: usize, variables: &[&str]) -> Option<usize> {
        self.parameters
            .iter()
            .position(|p| p.alt == alt && p.variables.iter().map(String::as_str).eq(variables.iter().copied()))
    }

    pub fn to_toml(&self) -> String {
        let doc = SpecDoc {
            alternatives: self.alt_names.clone(),
            reference_alt: Some(self.alt_names[self.reference_alt].clone()),
            socio_economic: self.socio_economic.clone(),
            allow_fe_overlap: self.allow_fe_overlap,
            parameter: self
                .parameters
                .iter()
                .map(|p| ParameterDoc {
                    alt: self.alt_names[p.alt].clone(),
                    variables: p.variables.clone(),
                    monotone: Some(p.monotone.clone()),
                    max_depth: Some(p.max_depth),
                })
                .collect(),
            fe_block: self
                .fe_blocks
                .iter()
                .map(|b| FeBlockDoc {
                    alt: self.alt_names[b.alt].clone(),
                    variables: b.variables.clone(),
                    max_depth: b.max_depth,
                    num_leaves: b.num_leaves,
                })
                .collect(),
            nest: self.nest.as_ref().map(|n| NestDoc {
                groups: n
                    .nests
                    .iter()
                    .map(|g| g.iter().map(|&i| self.alt_names[i].clone()).collect())
                    .collect(),
                mu: n.mu.clone(),
            }),
        };
        toml::to_string(&doc).expect("spec document serializes")
    }
}

fn alt_index(names: &[String], name: &str) -> Option<usize> {
    names.iter().position(|n| n == name)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    alternatives: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference_alt: Option<String>,
    #[serde(default)]
    socio_economic: Vec<String>,
    #[serde(default)]
    allow_fe_overlap: bool,
    #[serde(default)]
    parameter: Vec<ParameterDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    fe_block: Vec<FeBlockDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nest: Option<NestDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParameterDoc {
    alt: String,
    variables: Vec<String>,
    #[serde(default)]
    monotone: Option<Vec<Monotone>>,
    #[serde(default)]
    max_depth: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeBlockDoc {
    alt: String,
    variables: Vec<String>,
    max_depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_leaves: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NestDoc {
    groups: Vec<Vec<String>>,
    mu: Vec<f64>,
}

fn line_col(doc: &str, offset: usize) -> (usize, usize) {
    let before = &doc[..offset.min(doc.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, col)
}

/// Parses a spec document and fills defaults (monotone none, depth 1 for
/// single variables and 2 for pairs, no nests, no FE blocks, first
/// alternative as reference).
pub fn parse_spec(doc: &str) -> Result<ModelSpec> {
    let raw: SpecDoc = toml::from_str(doc).map_err(|e| {
        let location = e
            .span()
            .map(|s| {
                let (l, c) = line_col(doc, s.start);
                format!("line {l}, column {c}")
            })
            .unwrap_or_else(|| "document".into());
        Error::spec(location, e.message().to_string())
    })?;

    let names = raw.alternatives;
    if names.len() < 2 {
        return Err(Error::spec("alternatives", "at least two alternatives are required"));
    }
    let mut seen = HashSet::new();
    for n in &names {
        if !seen.insert(n) {
            return Err(Error::spec("alternatives", format!("duplicate alternative '{n}'")));
        }
    }
    let lookup = |loc: &str, name: &str| {
        alt_index(&names, name).ok_or_else(|| Error::spec(loc, format!("unknown alternative '{name}'")))
    };
    let reference_alt = match &raw.reference_alt {
        Some(r) => lookup("reference_alt", r)?,
        None => 0,
    };
    if raw.parameter.is_empty() && raw.fe_block.is_empty() {
        return Err(Error::spec("parameter", "no parameters"));
    }

    let mut parameters = Vec::with_capacity(raw.parameter.len());
    let mut keys = HashSet::new();
    for (idx, p) in raw.parameter.into_iter().enumerate() {
        let loc = format!("parameter[{idx}]");
        let alt = lookup(&loc, &p.alt)?;
        let nvars = p.variables.len();
        if nvars == 0 {
            return Err(Error::spec(&loc, "no variables"));
        }
        if nvars > 2 {
            return Err(Error::spec(&loc, "interaction sets are limited to two variables"));
        }
        if nvars == 2 && p.variables[0] == p.variables[1] {
            return Err(Error::spec(&loc, "a variable is listed twice"));
        }
        let monotone = p.monotone.unwrap_or_else(|| vec![Monotone::None; nvars]);
        if monotone.len() != nvars {
            return Err(Error::spec(&loc, format!("{} monotone entries for {nvars} variables", monotone.len())));
        }
        let max_depth = p.max_depth.unwrap_or(nvars);
        if max_depth == 0 {
            return Err(Error::spec(&loc, "max_depth must be positive"));
        }
        if nvars == 1 && max_depth != 1 {
            return Err(Error::spec(&loc, "single-variable parameters have max_depth 1"));
        }
        let mut key = p.variables.clone();
        key.sort();
        if !keys.insert((alt, key)) {
            return Err(Error::spec(&loc, format!("duplicate parameter for {:?} on '{}'", p.variables, p.alt)));
        }
        parameters.push(ParameterSpec {
            alt,
            variables: p.variables,
            monotone,
            max_depth,
        });
    }

    let mut fe_blocks = Vec::with_capacity(raw.fe_block.len());
    for (idx, b) in raw.fe_block.into_iter().enumerate() {
        let loc = format!("fe_block[{idx}]");
        let alt = lookup(&loc, &b.alt)?;
        if b.variables.is_empty() {
            return Err(Error::spec(&loc, "no variables"));
        }
        if b.max_depth == 0 {
            return Err(Error::spec(&loc, "max_depth must be positive"));
        }
        if b.num_leaves.is_some_and(|l| l < 2) {
            return Err(Error::spec(&loc, "num_leaves must be at least 2"));
        }
        if fe_blocks.iter().any(|f: &FeBlockSpec| f.alt == alt) {
            return Err(Error::spec(&loc, format!("second FE block for '{}'", b.alt)));
        }
        fe_blocks.push(FeBlockSpec {
            alt,
            variables: b.variables,
            max_depth: b.max_depth,
            num_leaves: b.num_leaves,
        });
    }

    let nest = match raw.nest {
        None => None,
        Some(n) => {
            let mut groups = Vec::with_capacity(n.groups.len());
            for (m, g) in n.groups.iter().enumerate() {
                let loc = format!("nest.groups[{m}]");
                groups.push(g.iter().map(|a| lookup(&loc, a)).collect::<Result<Vec<_>>>()?);
            }
            Some(NestSpec::new(groups, n.mu, names.len())?)
        }
    };

    Ok(ModelSpec {
        alt_names: names,
        parameters,
        fe_blocks,
        nest,
        reference_alt,
        socio_economic: raw.socio_economic,
        allow_fe_overlap: raw.allow_fe_overlap,
    })
}

/// Checks the spec against a dataset. Returns the spec unchanged when valid.
///
/// Monotone constraints on 0/1 dummy columns only produce a warning.
pub fn validate_spec(spec: &ModelSpec, ds: &ChoiceDataset) -> Result<ModelSpec> {
    if spec.n_alts() != ds.n_alts() {
        return Err(Error::Validation(format!(
            "spec has {} alternatives, dataset has {}",
            spec.n_alts(),
            ds.n_alts()
        )));
    }
    for v in spec.variables().iter().chain(&spec.socio_economic) {
        ds.require_column(v)?;
    }
    let socio: HashSet<&str> = spec.socio_economic.iter().map(String::as_str).collect();

    // alternative-specific attribute sets must be pairwise disjoint
    let mut owner: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &spec.parameters {
        for v in p.variables.iter().filter(|v| !socio.contains(v.as_str())) {
            match owner.get(v.as_str()) {
                Some(&other) if other != p.alt => {
                    return Err(Error::Validation(format!(
                        "'{v}' is alternative-specific to both '{}' and '{}'; list it under socio_economic if it is shared",
                        spec.alt_names[other], spec.alt_names[p.alt]
                    )));
                }
                _ => {
                    owner.insert(v.as_str(), p.alt);
                }
            }
        }
        for (v, m) in p.variables.iter().zip(&p.monotone) {
            if *m != Monotone::None && is_dummy(ds.column(v).unwrap_or_default()) {
                log::warn!("monotone constraint on 0/1 column '{v}' has no ordering effect beyond its sign");
            }
        }
    }
    for b in &spec.fe_blocks {
        if let Some(v) = b.variables.iter().find(|v| !socio.contains(v.as_str())) {
            return Err(Error::Validation(format!(
                "FE block of '{}' uses '{v}', which is not a socio-economic characteristic",
                spec.alt_names[b.alt]
            )));
        }
        if !spec.allow_fe_overlap {
            for p in spec.parameters.iter().filter(|p| p.alt == b.alt) {
                if let Some(v) = p.variables.iter().find(|v| b.variables.contains(v)) {
                    return Err(Error::Validation(format!(
                        "'{v}' appears in both a parameter and the FE block of '{}'; set allow_fe_overlap to permit it",
                        spec.alt_names[b.alt]
                    )));
                }
            }
        }
    }
    Ok(spec.clone())
}

fn is_dummy(col: &[f64]) -> bool {
    !col.is_empty() && col.iter().all(|&v| v == 0.0 || v == 1.0)
}
