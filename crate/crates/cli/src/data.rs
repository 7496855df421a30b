//! CSV ingestion: partitions, actor attributes and dyadic edge lists.
//!
//! The partition file (or, without one, the attribute file) fixes the actor
//! order; every other file is matched against it by `actor_id`.

use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use erpm::partition::canonicalize;
use erpm::{CovariateStore, Partition};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Input files, kept verbatim in every result for provenance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DataPaths {
    pub partition: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    #[serde(default)]
    pub dyadic: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub partition: Option<Partition>,
    pub covariates: CovariateStore,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn observed(&self) -> Result<&Partition> {
        self.partition
            .as_ref()
            .ok_or_else(|| CliError::Usage("an observed partition (--partition) is required".into()))
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(file))
}

fn records(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut rdr = reader(path)?;
    let csv_err = |source| CliError::Csv {
        path: path.into(),
        source,
    };
    let header = rdr.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_err)?;
    Ok((header, rows))
}

fn index_of(ids: &[String]) -> HashMap<&str, usize> {
    ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
}

fn unique_ids<'a>(path: &Path, ids: impl Iterator<Item = &'a str>) -> Result<Vec<String>> {
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for (row, id) in ids.enumerate() {
        if id.is_empty() {
            return Err(CliError::data(path, format!("row {}: empty actor id", row + 1)));
        }
        if seen.insert(id.to_string(), row).is_some() {
            return Err(CliError::data(path, format!("duplicate actor `{id}`")));
        }
        out.push(id.to_string());
    }
    Ok(out)
}

/// Reads `actor_id,group_id` rows; group labels are arbitrary strings.
pub fn read_partition(path: &Path) -> Result<(Vec<String>, Partition)> {
    let (header, rows) = records(path)?;
    if header.len() != 2 {
        return Err(CliError::data(path, "expected columns actor_id,group_id"));
    }
    let ids = unique_ids(path, rows.iter().map(|r| &r[0]))?;
    let labels: Vec<&str> = rows.iter().map(|r| &r[1]).collect();
    if let Some(i) = labels.iter().position(|l| l.is_empty()) {
        return Err(CliError::data(path, format!("actor `{}` has no group", ids[i])));
    }
    Ok((ids, canonicalize(&labels)?))
}

/// Writes `actor_id,group_id` rows with canonical group numbers.
pub fn write_partition(path: &Path, ids: &[String], p: &Partition) -> Result<()> {
    let mut w = writer(path)?;
    let csv_err = |source| CliError::Csv {
        path: path.into(),
        source,
    };
    w.write_record(["actor_id", "group_id"]).map_err(csv_err)?;
    for (id, g) in ids.iter().zip(p.membership()) {
        w.write_record([id.as_str(), &g.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })
}

pub(crate) fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na")
}

/// Actor ids listed in an attribute file, in file order.
pub fn read_attribute_ids(path: &Path) -> Result<Vec<String>> {
    let (_, rows) = records(path)?;
    unique_ids(path, rows.iter().map(|r| &r[0]))
}

/// Adds every column of `actor_id,<attr...>` to `store`. Columns whose
/// non-missing cells all parse as numbers are numeric, the rest categorical.
/// Empty or `NA` cells, and actors absent from the file, are missing.
pub fn read_attributes(path: &Path, ids: &[String], store: &mut CovariateStore) -> Result<()> {
    let (header, rows) = records(path)?;
    if header.is_empty() {
        return Err(CliError::data(path, "missing header"));
    }
    let index = index_of(ids);
    let file_ids = unique_ids(path, rows.iter().map(|r| &r[0]))?;
    let mut actor_of = Vec::with_capacity(rows.len());
    for id in &file_ids {
        match index.get(id.as_str()) {
            Some(&i) => actor_of.push(i),
            None => return Err(CliError::data(path, format!("unknown actor `{id}`"))),
        }
    }
    for (c, name) in header.iter().enumerate().skip(1) {
        if name.is_empty() {
            return Err(CliError::data(path, format!("column {} has no name", c + 1)));
        }
        let mut cells: Vec<Option<&str>> = vec![None; ids.len()];
        for (row, &i) in rows.iter().zip(&actor_of) {
            cells[i] = Some(&row[c]).filter(|s| !is_missing(s));
        }
        let numeric: Option<Vec<Option<f64>>> = cells
            .iter()
            .map(|c| match c {
                Some(s) => s.parse::<f64>().ok().filter(|x| x.is_finite()).map(Some),
                None => Some(None),
            })
            .collect();
        match numeric {
            Some(values) => store.add_attribute(name, values)?,
            None => {
                let labels: Vec<Option<String>> = cells.iter().map(|c| c.map(String::from)).collect();
                store.add_categorical(name, &labels)?
            }
        }
    }
    Ok(())
}

/// Name a dyadic covariate takes from its file: the file stem.
pub fn covariate_name(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(String::from)
        .ok_or_else(|| CliError::data(path, "cannot derive a covariate name from the file name"))
}

/// Reads an `actor_i,actor_j,value` edge list into a symmetric matrix.
/// Absent pairs are zero; a pair listed in both directions must agree.
pub fn read_dyadic(path: &Path, ids: &[String]) -> Result<Vec<Vec<f64>>> {
    let n = ids.len();
    let mut m = vec![vec![0.0; n]; n];
    let meta = std::fs::metadata(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    if meta.len() == 0 {
        return Ok(m);
    }
    let (header, rows) = records(path)?;
    if header.len() != 3 {
        return Err(CliError::data(path, "expected columns actor_i,actor_j,value"));
    }
    let index = index_of(ids);
    let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
    for row in &rows {
        let actor = |k: usize| {
            index
                .get(&row[k])
                .copied()
                .ok_or_else(|| CliError::data(path, format!("unknown actor `{}`", &row[k])))
        };
        let (i, j) = (actor(0)?, actor(1)?);
        if i == j {
            return Err(CliError::data(path, format!("self pair for actor `{}`", &row[0])));
        }
        let v: f64 = row[2]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| CliError::data(path, format!("bad value `{}`", &row[2])))?;
        let key = (i.min(j), i.max(j));
        if let Some(&old) = seen.get(&key) {
            if old != v {
                return Err(CliError::data(
                    path,
                    format!("conflicting values {old} and {v} for pair ({}, {})", &row[0], &row[1]),
                ));
            }
        }
        seen.insert(key, v);
        m[i][j] = v;
        m[j][i] = v;
    }
    Ok(m)
}

/// Loads every given file. Actor ids come from the partition file, else from
/// the attribute file, else they are `1..=n`.
pub fn load_dataset(paths: &DataPaths, n: Option<usize>) -> Result<Dataset> {
    let (ids, partition) = match (&paths.partition, &paths.attributes) {
        (Some(p), _) => {
            let (ids, part) = read_partition(p)?;
            (ids, Some(part))
        }
        (None, Some(a)) => (read_attribute_ids(a)?, None),
        (None, None) => match n {
            Some(n) => ((1..=n).map(|i| i.to_string()).collect(), None),
            None => {
                return Err(CliError::Usage(
                    "the number of actors is unknown: give --partition, --attributes or n".into(),
                ))
            }
        },
    };
    if let Some(n) = n {
        if n != ids.len() {
            return Err(CliError::Usage(format!(
                "configured n = {n} but the data lists {} actors",
                ids.len()
            )));
        }
    }
    if ids.is_empty() {
        return Err(erpm::Error::EmptyPartition.into());
    }
    let mut covariates = CovariateStore::new(ids.len());
    if let Some(a) = &paths.attributes {
        read_attributes(a, &ids, &mut covariates)?;
    }
    for d in &paths.dyadic {
        let name = covariate_name(d)?;
        if covariates.dyadic(&name).is_ok() {
            return Err(CliError::data(d, format!("dyadic covariate `{name}` loaded twice")));
        }
        covariates.add_dyadic(&name, read_dyadic(d, &ids)?)?;
    }
    Ok(Dataset {
        ids,
        partition,
        covariates,
    })
}
