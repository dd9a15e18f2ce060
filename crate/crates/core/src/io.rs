//! Dataset files: a subset of the attribute-relation (ARFF) text format and
//! CSV with a header row.
//!
//! ARFF support covers `numeric`/`real`/`integer` and nominal `{a,b,...}`
//! attributes, quoted names and values, `%` comments and sparse `{i v, ...}`
//! rows. Nominal features are one-hot encoded. Missing values (`?`) are
//! rejected. Label attributes must hold 0/1.
//!
//! Which columns are labels is decided by [`LabelSpec`]. With
//! [`LabelSpec::Auto`], an ARFF relation name carrying `-C n` marks the first
//! `n` attributes as labels (the last `|n|` when negative), and CSV columns
//! named `label:<name>` are labels. CSV lines starting with `#` are skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::dataset::{Dataset, FeatureSource};
use crate::error::{Error, Result};

pub const LABEL_PREFIX: &str = "label:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelSpec {
    /// `-C n` in an ARFF relation name, or `label:` prefixes in CSV.
    #[default]
    Auto,
    First(usize),
    Last(usize),
    /// Columns whose name starts with `label:`.
    Prefix,
}

/// Loads a dataset, choosing the parser from the file extension (`.arff` or `.csv`).
pub fn load_dataset(path: &Path, labels: LabelSpec) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("arff") => parse_arff(&text, path, labels),
        Some("csv") => parse_csv(&text, path, labels),
        _ => Err(Error::invalid(format!(
            "{}: unknown dataset format (expected .arff or .csv)",
            path.display()
        ))),
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum AttrType {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone)]
struct Attribute {
    name: String,
    kind: AttrType,
}

/// Splits on `sep` outside single or double quotes, unquoting and trimming each field.
fn split_fields(s: &str, sep: char) -> std::result::Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        match (quote, c) {
            (Some(_), '\\') => cur.push(chars.next().ok_or("dangling escape")?),
            (Some(q), c) if c == q => quote = None,
            (Some(_), c) => cur.push(c),
            (None, '\'' | '"') if cur.trim().is_empty() => {
                cur.clear();
                quote = Some(c);
            }
            (None, c) if c == sep => out.push(std::mem::take(&mut cur).trim().to_string()),
            (None, c) => cur.push(c),
        }
    }
    if quote.is_some() {
        return Err("unterminated quote".into());
    }
    out.push(cur.trim().to_string());
    Ok(out)
}

/// Reads one possibly quoted token from the front of `s`; returns it and the remainder.
fn take_token(s: &str) -> std::result::Result<(String, &str), String> {
    let s = s.trim_start();
    match s.chars().next() {
        Some(q @ ('\'' | '"')) => {
            let mut out = String::new();
            let mut iter = s.char_indices().skip(1);
            while let Some((i, c)) = iter.next() {
                if c == '\\' {
                    out.push(iter.next().ok_or("dangling escape")?.1);
                } else if c == q {
                    return Ok((out, &s[i + 1..]));
                } else {
                    out.push(c);
                }
            }
            Err("unterminated quote".into())
        }
        Some(_) => {
            let end = s.find(char::is_whitespace).unwrap_or(s.len());
            Ok((s[..end].to_string(), &s[end..]))
        }
        None => Err("missing name".into()),
    }
}

fn relation_label_count(name: &str) -> Option<i64> {
    let mut parts = name.split_whitespace();
    while let Some(p) = parts.next() {
        if p == "-C" {
            return parts.next()?.parse().ok();
        }
    }
    None
}

fn label_mask(total: usize, spec: LabelSpec, names: &[String], relation_c: Option<i64>) -> std::result::Result<Vec<bool>, String> {
    let first = |q: usize| (0..total).map(|j| j < q).collect::<Vec<_>>();
    let last = |q: usize| (0..total).map(|j| j + q >= total).collect::<Vec<_>>();
    let check = |q: usize| {
        if q == 0 || q >= total {
            Err(format!("label count {q} leaves no labels or no features among {total} columns"))
        } else {
            Ok(q)
        }
    };
    match spec {
        LabelSpec::First(q) => Ok(first(check(q)?)),
        LabelSpec::Last(q) => Ok(last(check(q)?)),
        LabelSpec::Prefix => {
            let mask: Vec<bool> = names.iter().map(|n| n.starts_with(LABEL_PREFIX)).collect();
            check(mask.iter().filter(|&&m| m).count())?;
            Ok(mask)
        }
        LabelSpec::Auto => match relation_c {
            Some(c) if c > 0 => Ok(first(check(c as usize)?)),
            Some(c) if c < 0 => Ok(last(check(c.unsigned_abs() as usize)?)),
            _ if names.iter().any(|n| n.starts_with(LABEL_PREFIX)) => label_mask(total, LabelSpec::Prefix, names, None),
            _ => Err("cannot tell which columns are labels; give a label count".into()),
        },
    }
}

fn parse_label(value: &str) -> std::result::Result<u8, String> {
    match value.parse::<f64>() {
        Ok(v) if v == 0.0 => Ok(0),
        Ok(v) if v == 1.0 => Ok(1),
        _ => Err(format!("label value {value:?} is not 0 or 1")),
    }
}

fn parse_number(value: &str) -> std::result::Result<f64, String> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("{value:?} is not a finite number")),
    }
}

/// Accumulates encoded rows.
struct Encoder {
    attrs: Vec<Attribute>,
    is_label: Vec<bool>,
    features: Vec<f64>,
    labels: Vec<u8>,
    rows: usize,
}

impl Encoder {
    fn sources(&self) -> Vec<FeatureSource> {
        let mut out = Vec::new();
        for (a, _) in self.attrs.iter().zip(&self.is_label).filter(|(_, &l)| !l) {
            match &a.kind {
                AttrType::Numeric => out.push(FeatureSource::Numeric { attribute: a.name.clone() }),
                AttrType::Nominal(values) => out.extend(values.iter().map(|v| FeatureSource::OneHot {
                    attribute: a.name.clone(),
                    value: v.clone(),
                })),
            }
        }
        out
    }

    /// `values[j]` is `None` for an omitted sparse entry.
    fn push(&mut self, values: &[Option<&str>]) -> std::result::Result<(), String> {
        for ((a, &is_label), v) in self.attrs.iter().zip(&self.is_label).zip(values) {
            if *v == Some("?") {
                return Err(format!("missing value for attribute {:?}", a.name));
            }
            if is_label {
                let label = match (v, &a.kind) {
                    (None, _) => 0,
                    (Some(v), _) => parse_label(v).map_err(|e| format!("attribute {:?}: {e}", a.name))?,
                };
                self.labels.push(label);
                continue;
            }
            match &a.kind {
                AttrType::Numeric => self
                    .features
                    .push(v.map_or(Ok(0.0), parse_number).map_err(|e| format!("attribute {:?}: {e}", a.name))?),
                AttrType::Nominal(values) => {
                    let idx = match v {
                        None => 0,
                        Some(v) => values
                            .iter()
                            .position(|x| x == v)
                            .ok_or_else(|| format!("attribute {:?}: undeclared value {v:?}", a.name))?,
                    };
                    self.features.extend((0..values.len()).map(|i| f64::from(u8::from(i == idx))));
                }
            }
        }
        self.rows += 1;
        Ok(())
    }

    fn finish(self, path: &Path) -> Result<Dataset> {
        if self.rows == 0 {
            return Err(parse_err(path, 0, "no data rows"));
        }
        let sources = self.sources();
        let label_names: Vec<String> = self
            .attrs
            .iter()
            .zip(&self.is_label)
            .filter(|(_, &l)| l)
            .map(|(a, _)| a.name.strip_prefix(LABEL_PREFIX).unwrap_or(&a.name).to_string())
            .collect();
        let q = label_names.len();
        let x = Array2::from_shape_vec((self.rows, sources.len()), self.features).expect("row width");
        let y = Array2::from_shape_vec((self.rows, q), self.labels).expect("row width");
        Dataset::with_sources(x, y, label_names, sources).map_err(|e| parse_err(path, 0, e.to_string()))
    }
}

pub fn parse_arff(text: &str, path: &Path, labels: LabelSpec) -> Result<Dataset> {
    let mut relation_c = None;
    let mut attrs: Vec<Attribute> = Vec::new();
    let mut encoder: Option<Encoder> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |m: String| parse_err(path, line_no, m);
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if let Some(enc) = encoder.as_mut() {
            let n_attr = enc.attrs.len();
            if let Some(body) = line.strip_prefix('{') {
                let body = body.strip_suffix('}').ok_or_else(|| err("unterminated sparse row".into()))?;
                let mut values: Vec<Option<String>> = vec![None; n_attr];
                if !body.trim().is_empty() {
                    for entry in split_fields(body, ',').map_err(err)? {
                        let (index, value) = entry
                            .split_once(char::is_whitespace)
                            .ok_or_else(|| err(format!("sparse entry {entry:?} needs an index and a value")))?;
                        let i: usize = index.parse().map_err(|_| err(format!("bad sparse index {index:?}")))?;
                        if i >= n_attr {
                            return Err(err(format!("sparse index {i} out of range for {n_attr} attributes")));
                        }
                        let (value, _) = take_token(value).map_err(err)?;
                        values[i] = Some(value);
                    }
                }
                let refs: Vec<Option<&str>> = values.iter().map(|v| v.as_deref()).collect();
                enc.push(&refs).map_err(err)?;
            } else {
                let values = split_fields(line, ',').map_err(err)?;
                if values.len() != n_attr {
                    return Err(err(format!("expected {n_attr} values, found {}", values.len())));
                }
                let refs: Vec<Option<&str>> = values.iter().map(|v| Some(v.as_str())).collect();
                enc.push(&refs).map_err(err)?;
            }
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            let (name, _) = take_token(&line["@relation".len()..]).map_err(err)?;
            relation_c = relation_label_count(&name);
        } else if lower.starts_with("@attribute") {
            let (name, rest) = take_token(&line["@attribute".len()..]).map_err(err)?;
            let rest = rest.trim();
            let kind = if let Some(body) = rest.strip_prefix('{') {
                let body = body.strip_suffix('}').ok_or_else(|| err("unterminated nominal value list".into()))?;
                let values = split_fields(body, ',').map_err(err)?;
                if values.iter().any(String::is_empty) {
                    return Err(err(format!("attribute {name:?} has an empty nominal value")));
                }
                AttrType::Nominal(values)
            } else {
                match rest.to_ascii_lowercase().as_str() {
                    "numeric" | "real" | "integer" => AttrType::Numeric,
                    other => return Err(err(format!("unsupported attribute type {other:?}"))),
                }
            };
            if attrs.iter().any(|a| a.name == name) {
                return Err(err(format!("duplicate attribute {name:?}")));
            }
            attrs.push(Attribute { name, kind });
        } else if lower.starts_with("@data") {
            let names: Vec<String> = attrs.iter().map(|a| a.name.clone()).collect();
            let is_label = label_mask(attrs.len(), labels, &names, relation_c).map_err(err)?;
            encoder = Some(Encoder {
                attrs: std::mem::take(&mut attrs),
                is_label,
                features: Vec::new(),
                labels: Vec::new(),
                rows: 0,
            });
        } else {
            return Err(err(format!("unexpected header line {line:?}")));
        }
    }
    encoder.ok_or_else(|| parse_err(path, 0, "no @data section"))?.finish(path)
}

pub fn parse_csv(text: &str, path: &Path, labels: LabelSpec) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).from_reader(text.as_bytes());
    let names: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let is_label = label_mask(names.len(), labels, &names, None).map_err(|e| parse_err(path, 1, e))?;
    let mut encoder = Encoder {
        attrs: names
            .into_iter()
            .map(|name| Attribute { name, kind: AttrType::Numeric })
            .collect(),
        is_label,
        features: Vec::new(),
        labels: Vec::new(),
        rows: 0,
    };
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let values: Vec<Option<&str>> = record.iter().map(|v| Some(v.trim())).collect();
        encoder.push(&values).map_err(|e| parse_err(path, line, e))?;
    }
    encoder.finish(path)
}

/// Writes features then `label:`-prefixed label columns. Reals use the
/// shortest representation that parses back to the same value.
pub fn write_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = data.feature_sources().iter().map(FeatureSource::column_name).collect();
    header.extend(data.label_names().iter().map(|n| format!("{LABEL_PREFIX}{n}")));
    w.write_record(&header)?;
    for (x, y) in data.features().rows().into_iter().zip(data.labels().rows()) {
        let row: Vec<String> = x.iter().map(|v| v.to_string()).chain(y.iter().map(|v| v.to_string())).collect();
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn save_csv(data: &Dataset, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(data, std::io::BufWriter::new(file))
}
