use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column roles for a delimited choice table.
///
/// ```toml
/// choice = "travel_mode"
/// group = "household_id"
/// alternatives = ["walk", "cycle", "pt", "drive"]
/// choice_values = ["1", "2", "3", "4"]
/// ignore = ["trip_id"]
///
/// [[categorical]]
/// column = "purpose"
/// reference = "HBW"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub choice: String,
    #[serde(default)]
    pub group: Option<String>,
    pub alternatives: Vec<String>,
    /// Cell text for each alternative, in alternative order. When absent the
    /// choice cell must hold the zero-based alternative index.
    #[serde(default)]
    pub choice_values: Option<Vec<String>>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default)]
    pub ignore: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<CategoricalColumn>,
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoricalColumn {
    pub column: String,
    /// Level whose dummy is dropped.
    pub reference: String,
    /// Explicit level order; observed levels are sorted when absent.
    #[serde(default)]
    pub levels: Option<Vec<String>>,
}

impl Schema {
    pub fn parse(doc: &str) -> Result<Self> {
        let schema: Schema = toml::from_str(doc).map_err(|e| Error::Schema(e.to_string()))?;
        if schema.alternatives.len() < 2 {
            return Err(Error::Schema("at least two alternatives are required".into()));
        }
        if let Some(values) = &schema.choice_values {
            if values.len() != schema.alternatives.len() {
                return Err(Error::Schema(format!(
                    "choice_values has {} entries but there are {} alternatives",
                    values.len(),
                    schema.alternatives.len()
                )));
            }
        }
        Ok(schema)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let doc = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&doc)
    }

    /// Schema for files produced by [`ChoiceDataset::write_csv`].
    pub fn for_serialized(alt_names: &[String], has_group: bool) -> Self {
        Schema {
            choice: "choice".into(),
            group: has_group.then(|| "group".into()),
            alternatives: alt_names.to_vec(),
            choice_values: None,
            delimiter: ',',
            ignore: Vec::new(),
            categorical: Vec::new(),
        }
    }
}

/// N observations of K real-valued variables together with the chosen
/// alternative and an optional grouping key (household, individual, ...).
///
/// Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceDataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    choice: Vec<usize>,
    groups: Option<Vec<String>>,
    alt_names: Vec<String>,
    index: HashMap<String, usize>,
}

impl ChoiceDataset {
    pub fn new(
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        choice: Vec<usize>,
        groups: Option<Vec<String>>,
        alt_names: Vec<String>,
    ) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Validation(format!(
                "{} column names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if alt_names.len() < 2 {
            return Err(Error::Validation("at least two alternatives are required".into()));
        }
        let n = choice.len();
        let mut index = HashMap::with_capacity(names.len());
        for (k, (name, col)) in names.iter().zip(&columns).enumerate() {
            if index.insert(name.clone(), k).is_some() {
                return Err(Error::Validation(format!("duplicate column name '{name}'")));
            }
            if col.len() != n {
                return Err(Error::Validation(format!(
                    "column '{name}' has {} entries, expected {n}",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "column '{name}' has a non-finite value at row {row}"
                )));
            }
        }
        let j = alt_names.len();
        if let Some(row) = choice.iter().position(|&c| c >= j) {
            return Err(Error::Validation(format!(
                "choice {} at row {row} is outside 0..{}",
                choice[row],
                j - 1
            )));
        }
        if let Some(g) = &groups {
            if g.len() != n {
                return Err(Error::Validation(format!(
                    "group key has {} entries, expected {n}",
                    g.len()
                )));
            }
        }
        Ok(ChoiceDataset {
            names,
            columns,
            choice,
            groups,
            alt_names,
            index,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.choice.len()
    }

    pub fn n_alts(&self) -> usize {
        self.alt_names.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn alt_names(&self) -> &[String] {
        &self.alt_names
    }

    pub fn choice(&self) -> &[usize] {
        &self.choice
    }

    pub fn groups(&self) -> Option<&[String]> {
        self.groups.as_deref()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.column_index(name).map(|k| self.columns[k].as_slice())
    }

    pub fn column_at(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn require_column(&self, name: &str) -> Result<&[f64]> {
        self.column(name)
            .ok_or_else(|| Error::Validation(format!("column '{name}' is not in the dataset")))
    }

    /// Group label per row; rows without a group key are their own group.
    pub fn group_labels(&self) -> Vec<String> {
        match &self.groups {
            Some(g) => g.clone(),
            None => (0..self.n_rows()).map(|i| i.to_string()).collect(),
        }
    }

    /// New dataset holding the given rows, in the given order (repeats allowed).
    pub fn subset(&self, rows: &[usize]) -> ChoiceDataset {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        ChoiceDataset {
            names: self.names.clone(),
            columns,
            choice: rows.iter().map(|&r| self.choice[r]).collect(),
            groups: self
                .groups
                .as_ref()
                .map(|g| rows.iter().map(|&r| g[r].clone()).collect()),
            alt_names: self.alt_names.clone(),
            index: self.index.clone(),
        }
    }

    /// Splits rows by a predicate on one column: (matching, rest).
    pub fn partition_by(
        &self,
        column: &str,
        pred: impl Fn(f64) -> bool,
    ) -> Result<(ChoiceDataset, ChoiceDataset)> {
        let col = self.require_column(column)?;
        let (yes, no): (Vec<usize>, Vec<usize>) = (0..self.n_rows()).partition(|&i| pred(col[i]));
        Ok((self.subset(&yes), self.subset(&no)))
    }

    /// Writes the dataset as comma-separated text with `choice` (and `group`)
    /// columns first. Values use the shortest representation that parses back
    /// to the identical `f64`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["choice".to_string()];
        if self.groups.is_some() {
            header.push("group".to_string());
        }
        header.extend(self.names.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        let mut record = Vec::with_capacity(header.len());
        for i in 0..self.n_rows() {
            record.clear();
            record.push(self.choice[i].to_string());
            if let Some(g) = &self.groups {
                record.push(g[i].clone());
            }
            for col in &self.columns {
                record.push(format!("{}", col[i]));
            }
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Validation(format!("csv error: {e}"))
}

/// Reads a delimited table from `path` according to `schema`.
pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<ChoiceDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(std::io::BufReader::new(file), schema)
}

pub fn read_dataset<R: Read>(input: R, schema: &Schema) -> Result<ChoiceDataset> {
    if !schema.delimiter.is_ascii() {
        return Err(Error::Schema("delimiter must be an ASCII character".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column '{name}' not found in header")))
    };
    let choice_col = find(&schema.choice)?;
    let group_col = schema.group.as_deref().map(find).transpose()?;
    for name in &schema.ignore {
        find(name)?;
    }
    let mut cat_cols = Vec::with_capacity(schema.categorical.len());
    for cat in &schema.categorical {
        cat_cols.push(find(&cat.column)?);
    }
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h) {
            return Err(Error::Schema(format!("duplicate header column '{h}'")));
        }
    }
    let numeric: Vec<usize> = (0..header.len())
        .filter(|&k| {
            k != choice_col
                && Some(k) != group_col
                && !cat_cols.contains(&k)
                && !schema.ignore.contains(&header[k])
        })
        .collect();

    let j = schema.alternatives.len();
    let mut choice = Vec::new();
    let mut groups = group_col.map(|_| Vec::new());
    let mut numeric_values: Vec<Vec<f64>> = vec![Vec::new(); numeric.len()];
    let mut cat_values: Vec<Vec<String>> = vec![Vec::new(); cat_cols.len()];

    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let cell = &rec[choice_col];
        let c = match &schema.choice_values {
            Some(values) => values.iter().position(|v| v == cell).ok_or_else(|| {
                Error::Validation(format!("choice '{cell}' at row {row} matches no alternative"))
            })?,
            None => {
                let c: i64 = cell.parse().map_err(|_| Error::Parse {
                    row,
                    column: schema.choice.clone(),
                    message: format!("'{cell}' is not an integer alternative index"),
                })?;
                if c < 0 || c as usize >= j {
                    return Err(Error::Validation(format!(
                        "choice {c} at row {row} is outside 0..{}",
                        j - 1
                    )));
                }
                c as usize
            }
        };
        choice.push(c);
        if let (Some(g), Some(k)) = (groups.as_mut(), group_col) {
            g.push(rec[k].to_string());
        }
        for (slot, &k) in numeric.iter().enumerate() {
            let cell = &rec[k];
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: header[k].clone(),
                message: if cell.is_empty() {
                    "missing value".into()
                } else {
                    format!("'{cell}' is not numeric")
                },
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: header[k].clone(),
                    message: format!("'{cell}' is not finite"),
                });
            }
            numeric_values[slot].push(v);
        }
        for (slot, &k) in cat_cols.iter().enumerate() {
            if rec[k].is_empty() {
                return Err(Error::Parse {
                    row,
                    column: header[k].clone(),
                    message: "missing value".into(),
                });
            }
            cat_values[slot].push(rec[k].to_string());
        }
    }

    let mut names: Vec<String> = numeric.iter().map(|&k| header[k].clone()).collect();
    let mut columns = numeric_values;
    for (cat, values) in schema.categorical.iter().zip(&cat_values) {
        let levels = categorical_levels(cat, values)?;
        for level in levels.iter().filter(|l| **l != cat.reference) {
            names.push(format!("{}_{}", cat.column, level));
            columns.push(
                values
                    .iter()
                    .map(|v| if v == level { 1.0 } else { 0.0 })
                    .collect(),
            );
        }
    }
    ChoiceDataset::new(names, columns, choice, groups, schema.alternatives.clone())
}

fn categorical_levels(cat: &CategoricalColumn, values: &[String]) -> Result<Vec<String>> {
    let levels = match &cat.levels {
        Some(levels) => {
            if let Some((row, v)) = values
                .iter()
                .enumerate()
                .find(|(_, v)| !levels.contains(v))
            {
                return Err(Error::Parse {
                    row,
                    column: cat.column.clone(),
                    message: format!("level '{v}' is not declared in the schema"),
                });
            }
            levels.clone()
        }
        None => {
            let distinct: BTreeSet<&String> = values.iter().collect();
            let mut levels: Vec<String> = distinct.into_iter().cloned().collect();
            if levels.iter().all(|l| l.parse::<f64>().is_ok()) {
                levels.sort_by(|a, b| {
                    let (a, b): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
                    a.total_cmp(&b)
                });
            }
            levels
        }
    };
    if !levels.contains(&cat.reference) {
        return Err(Error::Schema(format!(
            "reference level '{}' of '{}' is not among its levels {:?}",
            cat.reference, cat.column, levels
        )));
    }
    Ok(levels)
}
