//! CSV and JSON file formats.
//!
//! - Comparisons: header `i,j,outcome`, one row per observed pair. Item ids
//!   are strings and are numbered in order of first appearance.
//! - Features: header `id,<name>,...`, one row per item.
//! - Rankings: header `id,score,rank`, best item first.
//! - Models: the [`FittedModel`] as JSON.
//!
//! A zero outcome is a draw, which the matrix form cannot distinguish from
//! an unobserved pair, so draws are read but not stored.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::{ComparisonGraph, ComparisonKind, FeatureTable, RankResult};
use crate::error::{Error, Result};
use crate::rankers::FittedModel;
use crate::Matrix;

fn parse_err(path: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn parse_f64(path: &str, line: u64, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(path, line, format!("{what} `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("{what} `{field}` is not finite")));
    }
    Ok(v)
}

/// Parses comparisons. `kind = None` infers ordinal when every outcome lies
/// in `{-1, 0, 1}`, cardinal otherwise. `source` labels error messages.
pub fn parse_comparisons<R: Read>(r: R, kind: Option<ComparisonKind>, source: &str) -> Result<ComparisonGraph> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["i", "j", "outcome"] {
        return Err(parse_err(source, 1, "expected header `i,j,outcome`"));
    }
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen: HashMap<(usize, usize), u64> = HashMap::new();
    let mut intern = |id: &str, ids: &mut Vec<String>| -> usize {
        *index.entry(id.to_string()).or_insert_with(|| {
            ids.push(id.to_string());
            ids.len() - 1
        })
    };
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 3 {
            return Err(parse_err(source, line, format!("expected 3 fields, got {}", rec.len())));
        }
        let (a, b) = (&rec[0], &rec[1]);
        if a.is_empty() || b.is_empty() {
            return Err(parse_err(source, line, "empty item id"));
        }
        if a == b {
            return Err(parse_err(source, line, format!("item `{a}` compared with itself")));
        }
        let outcome = parse_f64(source, line, &rec[2], "outcome")?;
        let i = intern(a, &mut ids);
        let j = intern(b, &mut ids);
        let key = (i.min(j), i.max(j));
        if let Some(first) = seen.insert(key, line) {
            return Err(parse_err(
                source,
                line,
                format!("duplicate comparison of `{a}` and `{b}` (first on line {first})"),
            ));
        }
        rows.push((i, j, outcome));
    }
    let ordinal_like = rows.iter().all(|r| r.2 == 0.0 || r.2.abs() == 1.0);
    let kind = match kind {
        Some(ComparisonKind::Ordinal) if !ordinal_like => {
            return Err(Error::InvalidInput(format!(
                "{source}: ordinal outcomes must be -1, 0 or 1"
            )))
        }
        Some(k) => k,
        None if ordinal_like => ComparisonKind::Ordinal,
        None => ComparisonKind::Cardinal,
    };
    let n = ids.len();
    let mut c = Matrix::zeros(n, n);
    for (i, j, v) in rows {
        c[(i, j)] = v;
        c[(j, i)] = -v;
    }
    ComparisonGraph::new(c, kind, ids)
}

pub fn read_comparisons(path: &Path, kind: Option<ComparisonKind>) -> Result<ComparisonGraph> {
    parse_comparisons(open(path)?, kind, &path.display().to_string())
}

/// Writes observed pairs in row-major upper-triangle order.
pub fn write_comparisons<W: Write>(g: &ComparisonGraph, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["i", "j", "outcome"])?;
    let ids = g.item_ids();
    for (i, j, v) in g.observed_pairs() {
        out.write_record([ids[i].as_str(), ids[j].as_str(), &v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Raw features CSV: ids in file order plus the table.
pub fn parse_features<R: Read>(r: R, sensitive: &[String], source: &str) -> Result<(Vec<String>, FeatureTable)> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || &headers[0] != "id" {
        return Err(parse_err(source, 1, "expected header `id,<feature>,...`"));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if names.is_empty() {
        return Err(parse_err(source, 1, "no feature columns"));
    }
    let p = names.len();
    let mut ids = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != p + 1 {
            return Err(parse_err(
                source,
                line,
                format!("expected {} fields, got {}", p + 1, rec.len()),
            ));
        }
        let id = rec[0].to_string();
        if let Some(first) = seen.insert(id.clone(), line) {
            return Err(parse_err(
                source,
                line,
                format!("duplicate id `{id}` (first on line {first})"),
            ));
        }
        for (k, field) in rec.iter().skip(1).enumerate() {
            values.push(parse_f64(source, line, field, &format!("feature `{}`", names[k]))?);
        }
        ids.push(id);
    }
    let mut sens = Vec::with_capacity(sensitive.len());
    for s in sensitive {
        let k = names
            .iter()
            .position(|n| n == s)
            .ok_or_else(|| Error::param("sensitive", format!("no feature column named `{s}`")))?;
        sens.push(k);
    }
    let table = FeatureTable::new(Matrix::from_row_slice(ids.len(), p, &values), names, sens)?;
    Ok((ids, table))
}

pub fn read_features_raw(path: &Path, sensitive: &[String]) -> Result<(Vec<String>, FeatureTable)> {
    parse_features(open(path)?, sensitive, &path.display().to_string())
}

/// Reorders feature rows to match `item_ids`, rejecting missing and unknown ids.
pub fn align_features(ids: &[String], table: &FeatureTable, item_ids: &[String]) -> Result<FeatureTable> {
    let pos: HashMap<&str, usize> = ids.iter().enumerate().map(|(k, id)| (id.as_str(), k)).collect();
    let mut rows = Vec::with_capacity(item_ids.len());
    for id in item_ids {
        match pos.get(id.as_str()) {
            Some(&k) => rows.push(k),
            None => return Err(Error::InvalidInput(format!("features are missing item `{id}`"))),
        }
    }
    if ids.len() != item_ids.len() {
        let known: std::collections::HashSet<&str> = item_ids.iter().map(String::as_str).collect();
        let extra = ids
            .iter()
            .find(|id| !known.contains(id.as_str()))
            .expect("size differs");
        return Err(Error::InvalidInput(format!(
            "features list item `{extra}`, which appears in no comparison"
        )));
    }
    Ok(table.select_rows(&rows))
}

/// Loads comparisons and, optionally, features aligned to them.
pub fn load_dataset(
    comparisons: &Path,
    features: Option<&Path>,
    kind: Option<ComparisonKind>,
    sensitive: &[String],
) -> Result<(ComparisonGraph, Option<FeatureTable>)> {
    let g = read_comparisons(comparisons, kind)?;
    let f = match features {
        Some(p) => {
            let (ids, table) = read_features_raw(p, sensitive)?;
            Some(align_features(&ids, &table, g.item_ids())?)
        }
        None => None,
    };
    Ok((g, f))
}

pub fn write_features<W: Write>(ids: &[String], table: &FeatureTable, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["id".to_string()];
    header.extend(table.column_names().iter().cloned());
    out.write_record(&header)?;
    for (r, id) in ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend((0..table.p()).map(|c| table.values()[(r, c)].to_string()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// `id,score,rank`, best first.
pub fn write_ranking<W: Write>(ids: &[String], scores: &[f64], ordering: &[usize], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["id", "score", "rank"])?;
    for (pos, &item) in ordering.iter().enumerate() {
        out.write_record([ids[item].clone(), scores[item].to_string(), (pos + 1).to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_rank_result<W: Write>(ids: &[String], r: &RankResult, w: W) -> Result<()> {
    write_ranking(ids, &r.scores, &r.ordering, w)
}

/// Two-column `id,<name>` table.
pub fn write_column<W: Write>(ids: &[String], name: &str, values: &[f64], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["id", name])?;
    for (id, v) in ids.iter().zip(values) {
        out.write_record([id.clone(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_model(model: &FittedModel, path: &Path) -> Result<()> {
    let mut json = serde_json::to_string_pretty(model)?;
    json.push('\n');
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<FittedModel> {
    Ok(serde_json::from_reader(std::io::BufReader::new(open(path)?))?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    std::fs::write(path, json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons_round_trip() {
        let text = "i,j,outcome\na,b,1\na,c,-1\nb,c,1\n";
        let g = parse_comparisons(text.as_bytes(), None, "t").unwrap();
        assert_eq!(g.kind(), ComparisonKind::Ordinal);
        assert_eq!(g.item_ids(), ["a", "b", "c"]);
        let mut buf = Vec::new();
        write_comparisons(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }

    #[test]
    fn fractional_outcome_is_cardinal() {
        let g = parse_comparisons("i,j,outcome\n0,1,0.5\n".as_bytes(), None, "t").unwrap();
        assert_eq!(g.kind(), ComparisonKind::Cardinal);
        assert!(parse_comparisons("i,j,outcome\n0,1,0.5\n".as_bytes(), Some(ComparisonKind::Ordinal), "t").is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let dup = "i,j,outcome\na,b,1\nb,a,-1\n";
        let e = parse_comparisons(dup.as_bytes(), None, "f.csv").unwrap_err();
        assert!(e.to_string().starts_with("f.csv:3:"), "{e}");
        let bad = "i,j,outcome\na,b,1\na,c,x\n";
        let e = parse_comparisons(bad.as_bytes(), None, "f.csv").unwrap_err();
        assert!(e.to_string().contains(":3:"), "{e}");
    }

    #[test]
    fn feature_alignment() {
        let (ids, t) = parse_features("id,x,z\nb,2,1\na,1,0\n".as_bytes(), &["z".into()], "t").unwrap();
        let item_ids = vec!["a".to_string(), "b".to_string()];
        let aligned = align_features(&ids, &t, &item_ids).unwrap();
        assert_eq!(aligned.values()[(0, 0)], 1.0);
        assert_eq!(aligned.sensitive_columns(), [1]);

        let missing = align_features(&ids, &t, &["a".into(), "c".into()]).unwrap_err();
        assert!(missing.to_string().contains("`c`"));
        let extra = align_features(&ids, &t, &["a".into()]).unwrap_err();
        assert!(extra.to_string().contains("`b`"));
    }

    #[test]
    fn ranking_rows() {
        let ids = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let mut buf = Vec::new();
        write_ranking(&ids, &[0.1, 0.3, 0.2], &[1, 2, 0], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "id,score,rank\nb,0.3,1\nc,0.2,2\na,0.1,3\n"
        );
    }
}
