//! File formats: sample and decision-log CSV, observed-point CSV, frontier
//! CSV, and JSON for everything else.
//!
//! Readers take a `source` name that appears in error messages together with
//! the 1-based line number and the offending field.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::audit::ObservedPoint;
use crate::error::{Error, Result};
use crate::fairness::Direction;
use crate::frontier::{FrontierMeta, FrontierPoint, FrontierSet};
use crate::policy::{Bound, ThresholdRule};
use crate::population::Sample;

/// Formats `x` with 12 significant digits, shortest form.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("valid float");
    rounded.to_string()
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| io_error(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let reader = open(path)?;
    let mut de = serde_json::Deserializer::from_reader(reader);
    let parse_error = |field: String, e: serde_json::Error| {
        let location = format!(" at line {} column {}", e.line(), e.column());
        let reason = e.to_string();
        Error::Parse {
            file: path.display().to_string(),
            line: e.line() as u64,
            field,
            reason: reason.strip_suffix(&location).unwrap_or(&reason).to_string(),
        }
    };
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = match e.path().to_string() {
            p if p == "." => format!("column {}", e.inner().column()),
            p => p,
        };
        parse_error(field, e.into_inner())
    })?;
    de.end().map_err(|e| parse_error(format!("column {}", e.column()), e))?;
    Ok(value)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_error(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| io_error(path, e))
}

struct Table<'a> {
    source: &'a str,
    columns: BTreeMap<String, usize>,
}

impl<'a> Table<'a> {
    fn new(source: &'a str, headers: &csv::StringRecord, required: &[&str]) -> Result<Self> {
        let columns: BTreeMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        for r in required {
            if !columns.contains_key(*r) {
                return Err(Error::Parse {
                    file: source.to_string(),
                    line: 1,
                    field: r.to_string(),
                    reason: format!("missing column (header is `{}`)", headers.iter().collect::<Vec<_>>().join(",")),
                });
            }
        }
        Ok(Self { source, columns })
    }

    fn has(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    fn fail(&self, rec: &csv::StringRecord, field: &str, reason: impl Into<String>) -> Error {
        Error::Parse {
            file: self.source.to_string(),
            line: rec.position().map_or(0, |p| p.line()),
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    fn raw<'r>(&self, rec: &'r csv::StringRecord, field: &str) -> Result<&'r str> {
        let i = self.columns[field];
        rec.get(i)
            .map(str::trim)
            .ok_or_else(|| self.fail(rec, field, "missing value"))
    }

    fn float(&self, rec: &csv::StringRecord, field: &str) -> Result<f64> {
        let s = self.raw(rec, field)?;
        let x: f64 = s
            .parse()
            .map_err(|_| self.fail(rec, field, format!("`{s}` is not a number")))?;
        if !x.is_finite() {
            return Err(self.fail(rec, field, format!("`{s}` is not finite")));
        }
        Ok(x)
    }

    fn binary(&self, rec: &csv::StringRecord, field: &str) -> Result<u8> {
        match self.raw(rec, field)? {
            "0" => Ok(0),
            "1" => Ok(1),
            s => Err(self.fail(rec, field, format!("`{s}` is not 0 or 1"))),
        }
    }

    fn probability(&self, rec: &csv::StringRecord, field: &str) -> Result<f64> {
        let x = self.float(rec, field)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(self.fail(rec, field, format!("{x} outside [0, 1]")));
        }
        Ok(x)
    }
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader)
}

fn records<R: Read>(
    reader: R,
    source: &str,
    required: &[&str],
    mut row: impl FnMut(&Table, &csv::StringRecord) -> Result<()>,
) -> Result<()> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    let table = Table::new(source, &headers, required)?;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        row(&table, &rec)?;
    }
    Ok(())
}

fn csv_error(source: &str, e: csv::Error) -> Error {
    Error::Parse {
        file: source.to_string(),
        line: e.position().map_or(0, |p| p.line()),
        field: String::new(),
        reason: e.to_string(),
    }
}

/// Reads `p_hat,group[,y][,d]`.
pub fn read_samples<R: Read>(reader: R, source: &str) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    records(reader, source, &["p_hat", "group"], |t, rec| {
        let group = t.raw(rec, "group")?;
        if group.is_empty() {
            return Err(t.fail(rec, "group", "empty group label"));
        }
        let mut s = Sample::new(t.probability(rec, "p_hat")?, group);
        if t.has("y") {
            s.y = Some(t.binary(rec, "y")?);
        }
        if t.has("d") {
            s.d = Some(t.binary(rec, "d")?);
        }
        out.push(s);
        Ok(())
    })?;
    Ok(out)
}

pub fn load_samples(path: &Path) -> Result<Vec<Sample>> {
    read_samples(open(path)?, &path.display().to_string())
}

/// Reads a decision log `p_hat,group,d[,y]`.
pub fn read_decision_log<R: Read>(reader: R, source: &str) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    records(reader, source, &["p_hat", "group", "d"], |t, rec| {
        let mut s = Sample::new(t.probability(rec, "p_hat")?, t.raw(rec, "group")?);
        s.d = Some(t.binary(rec, "d")?);
        if t.has("y") {
            s.y = Some(t.binary(rec, "y")?);
        }
        out.push(s);
        Ok(())
    })?;
    Ok(out)
}

pub fn load_decision_log(path: &Path) -> Result<Vec<Sample>> {
    read_decision_log(open(path)?, &path.display().to_string())
}

pub fn write_samples<W: Write>(writer: W, samples: &[Sample]) -> Result<()> {
    let has_y = samples.iter().any(|s| s.y.is_some());
    let has_d = samples.iter().any(|s| s.d.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["p_hat", "group"];
    if has_y {
        header.push("y");
    }
    if has_d {
        header.push("d");
    }
    let err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(&header).map_err(err)?;
    for s in samples {
        let mut rec = vec![s.p_hat.to_string(), s.group.clone()];
        for (present, v) in [(has_y, s.y), (has_d, s.d)] {
            if present {
                let v = v.ok_or_else(|| Error::InvalidInput("samples mix present and missing columns".into()))?;
                rec.push(v.to_string());
            }
        }
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Reads `e_u,fs[,label]`.
pub fn read_observed<R: Read>(reader: R, source: &str) -> Result<Vec<ObservedPoint>> {
    let mut out = Vec::new();
    records(reader, source, &["e_u", "fs"], |t, rec| {
        let label = if t.has("label") { t.raw(rec, "label")?.to_string() } else { String::new() };
        out.push(ObservedPoint {
            e_u: t.float(rec, "e_u")?,
            fs: t.float(rec, "fs")?,
            label,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn load_observed(path: &Path) -> Result<Vec<ObservedPoint>> {
    read_observed(open(path)?, &path.display().to_string())
}

/// Writes `fs,e_u,group,bound,t`: one row per group, consecutive rows form a point.
pub fn write_frontier_csv<W: Write>(writer: W, points: &[FrontierPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(["fs", "e_u", "group", "bound", "t"]).map_err(err)?;
    for p in points {
        let (fs, e_u) = (format_sig(p.fs), format_sig(p.e_u));
        for (g, r) in &p.rules {
            w.write_record([fs.as_str(), e_u.as_str(), g, &r.bound.to_string(), &format_sig(r.t)])
                .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Reads frontier points back from [`write_frontier_csv`] output. A new
/// point starts whenever `(fs, e_u)` changes or a group label repeats.
pub fn read_frontier_csv<R: Read>(reader: R, source: &str) -> Result<Vec<FrontierPoint>> {
    let mut out: Vec<FrontierPoint> = Vec::new();
    let mut current: Option<FrontierPoint> = None;
    records(reader, source, &["fs", "e_u", "group", "bound", "t"], |t, rec| {
        let fs = t.float(rec, "fs")?;
        let e_u = t.float(rec, "e_u")?;
        let group = t.raw(rec, "group")?.to_string();
        let bound = match t.raw(rec, "bound")? {
            "lower" | "lb" => Bound::Lower,
            "upper" | "ub" => Bound::Upper,
            s => return Err(t.fail(rec, "bound", format!("`{s}` is not lower or upper"))),
        };
        let rule = ThresholdRule::new(bound, t.float(rec, "t")?).map_err(|e| t.fail(rec, "t", e.to_string()))?;
        let continues = current
            .as_ref()
            .is_some_and(|c| c.fs == fs && c.e_u == e_u && !c.rules.contains_key(&group));
        if !continues {
            out.extend(current.take());
            current = Some(FrontierPoint {
                e_u,
                fs,
                rules: BTreeMap::new(),
            });
        }
        current.as_mut().expect("current point").rules.insert(group, rule);
        Ok(())
    })?;
    out.extend(current);
    Ok(out)
}

/// Loads a frontier from JSON, or from CSV when the extension is `.csv`.
///
/// A CSV file carries no metadata. Its direction is inferred from the order
/// of the points (scores descending means maximize) unless `direction` is
/// given; grid fields are left at zero.
pub fn load_frontier(path: &Path, direction: Option<Direction>) -> Result<FrontierSet> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let points = read_frontier_csv(open(path)?, &path.display().to_string())?;
        let inferred = match (points.first(), points.last()) {
            (Some(a), Some(b)) if b.fs < a.fs => Direction::Maximize,
            _ => Direction::Minimize,
        };
        let groups = points.first().map(|p| p.rules.keys().cloned().collect()).unwrap_or_default();
        Ok(FrontierSet {
            points,
            meta: FrontierMeta {
                grid_m: 0,
                n_bins: 0,
                direction: direction.unwrap_or(inferred),
                spec_hash: String::new(),
                groups,
                evaluated: 0,
                skipped: 0,
            },
            sub_frontiers: BTreeMap::new(),
        })
    } else {
        let fr: FrontierSet = load_json(path)?;
        if let Some(d) = direction {
            if d != fr.meta.direction {
                return Err(Error::InvalidInput(format!(
                    "{}: frontier was built for direction {}, not {d}",
                    path.display(),
                    fr.meta.direction
                )));
            }
        }
        Ok(fr)
    }
}
