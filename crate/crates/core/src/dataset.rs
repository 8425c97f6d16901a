//! Ranking datasets: typed feature schemas, CSV ingestion, and extraction of
//! pairwise training preferences.
//!
//! A dataset file is a plain CSV whose rows are already sorted by the ground
//! truth ranking, best first. Column types come from a sidecar schema file
//! with one line per feature:
//!
//! ```text
//! goals_for,numeric
//! fiber,binary,no,yes
//! stars,ordinal,low,mid,high
//! ```
//!
//! Binary columns map `<val0>` to 0 and `<val1>` to 1. Ordinal levels are
//! listed worst to best and spread evenly over `[0, 1]`; an individual level
//! can pin its own value with `label=value`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Read;
use std::ops::Deref;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureKind {
    Numeric,
    /// Raw values mapped to 0 and 1 respectively.
    Binary { values: [String; 2] },
    Ordinal(OrdinalScale),
}

impl FeatureKind {
    pub fn name(&self) -> &'static str {
        match self {
            FeatureKind::Numeric => "numeric",
            FeatureKind::Binary { .. } => "binary",
            FeatureKind::Ordinal(_) => "ordinal",
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, FeatureKind::Numeric)
    }

    fn encode(&self, raw: &str) -> std::result::Result<f64, String> {
        match self {
            FeatureKind::Numeric => match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("cannot parse `{raw}` as a finite number")),
            },
            FeatureKind::Binary { values } => {
                if raw == values[0] {
                    Ok(0.0)
                } else if raw == values[1] {
                    Ok(1.0)
                } else {
                    Err(format!(
                        "`{raw}` is not one of the binary values `{}`, `{}`",
                        values[0], values[1]
                    ))
                }
            }
            FeatureKind::Ordinal(scale) => scale
                .encode(raw)
                .ok_or_else(|| format!("unknown ordinal level `{raw}`")),
        }
    }
}

/// Ordered ordinal levels and the numeric value each one encodes to.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalScale {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl OrdinalScale {
    /// Equally spaced levels: level `i` of `L` maps to `i / (L - 1)`, a
    /// single level maps to 0.
    pub fn equally_spaced<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::with_overrides(labels.into_iter().map(|l| (l.into(), None)))
    }

    pub fn with_overrides(levels: impl IntoIterator<Item = (String, Option<f64>)>) -> Result<Self> {
        let levels: Vec<_> = levels.into_iter().collect();
        if levels.is_empty() {
            return Err(Error::InvalidParameter("ordinal scale has no levels".into()));
        }
        let mut seen = HashSet::new();
        for (label, _) in &levels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate ordinal level `{label}`"
                )));
            }
        }
        let last = (levels.len() - 1) as f64;
        let mut labels = Vec::with_capacity(levels.len());
        let mut values = Vec::with_capacity(levels.len());
        for (i, (label, value)) in levels.into_iter().enumerate() {
            let value = match value {
                Some(v) if (0.0..=1.0).contains(&v) => v,
                Some(v) => {
                    return Err(Error::InvalidParameter(format!(
                        "ordinal level `{label}` override {v} is outside [0, 1]"
                    )))
                }
                None if last == 0.0 => 0.0,
                None => i as f64 / last,
            };
            labels.push(label);
            values.push(value);
        }
        Ok(Self { labels, values })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn encode(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: FeatureKind,
}

/// Ordered feature columns; the order defines the feature index.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    columns: Vec<Column>,
}

impl FeatureSchema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate column name `{}`",
                    c.name
                )));
            }
        }
        Ok(Self { columns })
    }

    /// Schema where every column is numeric.
    pub fn numeric<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(
            names
                .into_iter()
                .map(|n| Column {
                    name: n.into(),
                    kind: FeatureKind::Numeric,
                })
                .collect(),
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut columns: Vec<Column> = Vec::new();
        let mut seen = HashSet::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let schema_err = |message: String| Error::Schema {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let name = fields[0];
            if name.is_empty() {
                return Err(schema_err("empty column name".into()));
            }
            let kind = match fields.get(1).copied() {
                Some("numeric") if fields.len() == 2 => FeatureKind::Numeric,
                Some("numeric") => {
                    return Err(schema_err("numeric columns take no extra fields".into()))
                }
                Some("binary") => {
                    if fields.len() != 4 {
                        return Err(schema_err(format!(
                            "binary column `{name}` needs exactly two values"
                        )));
                    }
                    if fields[2] == fields[3] {
                        return Err(schema_err(format!(
                            "binary column `{name}` has two identical values"
                        )));
                    }
                    FeatureKind::Binary {
                        values: [fields[2].to_string(), fields[3].to_string()],
                    }
                }
                Some("ordinal") => {
                    let mut levels = Vec::new();
                    for spec in &fields[2..] {
                        levels.push(parse_level(spec).map_err(schema_err)?);
                    }
                    let scale = OrdinalScale::with_overrides(levels).map_err(|e| match e {
                        Error::InvalidParameter(m) => schema_err(format!("column `{name}`: {m}")),
                        other => other,
                    })?;
                    FeatureKind::Ordinal(scale)
                }
                Some(other) => return Err(schema_err(format!("unknown column kind `{other}`"))),
                None => return Err(schema_err(format!("column `{name}` has no kind"))),
            };
            if !seen.insert(name.to_string()) {
                return Err(schema_err(format!("duplicate column name `{name}`")));
            }
            columns.push(Column {
                name: name.to_string(),
                kind,
            });
        }
        Ok(Self { columns })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Schema { line, message } => Error::Parse {
                path: path.to_path_buf(),
                message: format!("schema line {line}: {message}"),
            },
            other => other,
        })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn dimension(&self) -> usize {
        self.columns.len()
    }

    pub fn ensure_compatible(&self, other: &FeatureSchema) -> Result<()> {
        if self.columns.len() != other.columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} columns vs {} columns",
                self.columns.len(),
                other.columns.len()
            )));
        }
        for (a, b) in self.columns.iter().zip(&other.columns) {
            if a != b {
                return Err(Error::SchemaMismatch(format!(
                    "column `{}` ({}) vs `{}` ({})",
                    a.name,
                    a.kind.name(),
                    b.name,
                    b.kind.name()
                )));
            }
        }
        Ok(())
    }
}

fn parse_level(spec: &str) -> std::result::Result<(String, Option<f64>), String> {
    match spec.split_once('=') {
        Some((label, value)) => {
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| format!("bad override value in `{spec}`"))?;
            Ok((label.trim().to_string(), Some(value)))
        }
        None if spec.is_empty() => Err("empty ordinal level".into()),
        None => Ok((spec.to_string(), None)),
    }
}

/// Feature vector of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectVector(Vec<f64>);

impl ObjectVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ObjectVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ObjectVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// A query set together with its ground-truth order: row 0 is the best object.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingInstance {
    name: String,
    schema: Arc<FeatureSchema>,
    objects: Vec<ObjectVector>,
}

impl RankingInstance {
    pub fn new(
        name: impl Into<String>,
        schema: Arc<FeatureSchema>,
        objects: Vec<ObjectVector>,
    ) -> Result<Self> {
        let d = schema.dimension();
        for o in &objects {
            if o.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: o.len(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            schema,
            objects,
        })
    }

    /// Instance over an all-numeric schema with columns `x1..xd`.
    pub fn from_rows(name: impl Into<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let schema = FeatureSchema::numeric((1..=d).map(|i| format!("x{i}")))?;
        Self::new(
            name,
            Arc::new(schema),
            rows.into_iter().map(ObjectVector::new).collect(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn objects(&self) -> &[ObjectVector] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.schema.dimension()
    }

    /// Values of feature `k` across all objects, in rank order.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.objects.iter().map(|o| o[k]).collect()
    }

    /// Induced sub-ranking over the given rank positions.
    ///
    /// Positions are sorted first, so the result keeps the ground-truth order.
    pub fn subset(&self, positions: &[usize]) -> RankingInstance {
        let mut positions = positions.to_vec();
        positions.sort_unstable();
        positions.dedup();
        RankingInstance {
            name: self.name.clone(),
            schema: Arc::clone(&self.schema),
            objects: positions.iter().map(|&p| self.objects[p].clone()).collect(),
        }
    }

    /// Same objects, same schema, new feature values (column-major input).
    pub(crate) fn with_columns(&self, columns: &[Vec<f64>]) -> RankingInstance {
        let objects = (0..self.len())
            .map(|i| ObjectVector::new(columns.iter().map(|c| c[i]).collect()))
            .collect();
        RankingInstance {
            name: self.name.clone(),
            schema: Arc::clone(&self.schema),
            objects,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Load a dataset CSV using a schema sidecar file.
pub fn load_dataset(data_path: impl AsRef<Path>, schema_path: impl AsRef<Path>) -> Result<RankingInstance> {
    let schema = FeatureSchema::from_file(schema_path)?;
    load_with_schema(data_path, Arc::new(schema))
}

pub fn load_with_schema(data_path: impl AsRef<Path>, schema: Arc<FeatureSchema>) -> Result<RankingInstance> {
    let path = data_path.as_ref();
    let file = fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_dataset(file, path, name, schema)
}

/// Parse CSV content; `path` is only used in error messages.
pub fn read_dataset<R: Read>(
    reader: R,
    path: &Path,
    name: impl Into<String>,
    schema: Arc<FeatureSchema>,
) -> Result<RankingInstance> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    if headers.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let mut indices = Vec::with_capacity(schema.dimension());
    for column in schema.columns() {
        match headers.iter().position(|h| h == column.name) {
            Some(i) => indices.push(i),
            None => {
                return Err(Error::MissingColumn {
                    path: path.to_path_buf(),
                    column: column.name.clone(),
                })
            }
        }
    }

    let display = path.display().to_string();
    let mut objects = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut values = Vec::with_capacity(indices.len());
        for (column, &i) in schema.columns().iter().zip(&indices) {
            let raw = record.get(i).unwrap_or("");
            let value = column.kind.encode(raw).map_err(|message| Error::Cell {
                path: display.clone(),
                line,
                column: column.name.clone(),
                message,
            })?;
            values.push(value);
        }
        objects.push(ObjectVector::new(values));
    }
    if objects.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    RankingInstance::new(name, schema, objects)
}

/// An observed preference: `preferred` is ranked above `dispreferred`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferencePair {
    pub preferred: ObjectVector,
    pub dispreferred: ObjectVector,
}

/// All pairwise preferences extracted from one or more training rankings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PreferenceStore {
    pairs: Vec<PreferencePair>,
}

impl PreferenceStore {
    pub fn from_instances<'a>(instances: impl IntoIterator<Item = &'a RankingInstance>) -> Self {
        let mut store = PreferenceStore::default();
        for instance in instances {
            store.extend(instance);
        }
        store
    }

    fn extend(&mut self, instance: &RankingInstance) {
        let objects = instance.objects();
        for i in 0..objects.len() {
            for j in (i + 1)..objects.len() {
                self.pairs.push(PreferencePair {
                    preferred: objects[i].clone(),
                    dispreferred: objects[j].clone(),
                });
            }
        }
    }

    pub fn pairs(&self) -> &[PreferencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Every pair `(object_i, object_j)` with rank position `i < j`, ordered
/// lexicographically by `(i, j)`.
pub fn extract_pairs(instance: &RankingInstance) -> PreferenceStore {
    PreferenceStore::from_instances(std::iter::once(instance))
}

impl fmt::Display for RankingInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (n={}, d={})", self.name, self.len(), self.dimension())
    }
}
