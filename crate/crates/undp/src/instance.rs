//! Link and demand files.
//!
//! Both are comma-separated with a header row. Header cells are matched after
//! lower-casing and collapsing every run of non-alphanumeric characters to
//! `_`, so `Free travel time (s)` and `free_travel_time_s` name the same
//! column.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use undp_core::{Link, Network, NetworkError, NodeId, OdMatrix, OdPair};

/// Links of the bundled 13-node instance.
pub const REFERENCE_LINKS: &str = include_str!("../../../data/reference/links.csv");
/// Demand matrix of the bundled instance.
pub const REFERENCE_OD: &str = include_str!("../../../data/reference/od.csv");
/// Expansion budget of the bundled instance.
pub const REFERENCE_BUDGET: f64 = 900.0;

const LINK_COLUMNS: [&str; 11] = [
    "origin",
    "destination",
    "free_travel_time_s",
    "capacity",
    "link_division_condition",
    "cycle_length",
    "green_ratio",
    "same_phase_node",
    "capacity_expansion_condition",
    "capacity_expansion",
    "unit_cost",
];

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{file}: line {line}: {message}")]
    Row { file: &'static str, line: u64, message: String },
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: &'static str, column: String },
    #[error("{file}: duplicate column `{column}`")]
    DuplicateColumn { file: &'static str, column: String },
    #[error("{0}: no data rows")]
    Empty(&'static str),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

impl InstanceError {
    /// True when the file could not be read at all.
    pub fn is_io(&self) -> bool {
        matches!(self, InstanceError::Io { .. })
    }
}

/// A network and its demand.
#[derive(Clone, Debug)]
pub struct Instance {
    pub network: Network,
    pub od: OdMatrix,
}

impl Instance {
    pub fn reference() -> Result<Self, InstanceError> {
        Self::parse(REFERENCE_LINKS, REFERENCE_OD, REFERENCE_BUDGET)
    }

    pub fn parse(links: &str, od: &str, budget: f64) -> Result<Self, InstanceError> {
        let network = Network::new(parse_links(links)?, budget)?;
        let od = parse_od(od)?;
        Ok(Instance { network, od })
    }

    pub fn load(links: &Path, od: &Path, budget: f64) -> Result<Self, InstanceError> {
        Self::parse(&read(links)?, &read(od)?, budget)
    }
}

fn read(path: &Path) -> Result<String, InstanceError> {
    fs::read_to_string(path).map_err(|source| InstanceError::Io { path: path.to_path_buf(), source })
}

/// `Free travel time (s)` → `free_travel_time_s`.
pub fn normalize_header(cell: &str) -> String {
    let mut out = String::with_capacity(cell.len());
    for c in cell.trim().chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        } else if !out.is_empty() && !out.ends_with('_') {
            out.push('_');
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    out
}

fn csv_error(file: &'static str, e: csv::Error) -> InstanceError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    };
    InstanceError::Row { file, line, message }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn column_map(file: &'static str, headers: &csv::StringRecord) -> Result<HashMap<String, usize>, InstanceError> {
    let mut map = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        let key = normalize_header(h);
        if map.insert(key.clone(), i).is_some() {
            return Err(InstanceError::DuplicateColumn { file, column: key });
        }
    }
    Ok(map)
}

struct Row<'a> {
    file: &'static str,
    line: u64,
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    fn err(&self, message: String) -> InstanceError {
        InstanceError::Row { file: self.file, line: self.line, message }
    }

    fn number(&self, index: usize, column: &str) -> Result<f64, InstanceError> {
        let cell = &self.record[index];
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(format!("column `{column}`: `{cell}` is not a number"))),
        }
    }

    fn node(&self, index: usize, column: &str) -> Result<NodeId, InstanceError> {
        let cell = &self.record[index];
        cell.parse::<NodeId>()
            .map_err(|_| self.err(format!("column `{column}`: `{cell}` is not a node label")))
    }

    fn flag(&self, index: usize, column: &str) -> Result<bool, InstanceError> {
        match &self.record[index] {
            "1" => Ok(true),
            "-1" | "0" => Ok(false),
            cell => Err(self.err(format!("column `{column}`: expected 1, 0 or -1, found `{cell}`"))),
        }
    }
}

/// Parses a link file. `x_kink` is optional and kept for reference only.
pub fn parse_links(text: &str) -> Result<Vec<Link>, InstanceError> {
    const FILE: &str = "links";
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(FILE, e))?.clone();
    let map = column_map(FILE, &headers)?;
    let mut idx = [0usize; 11];
    for (slot, name) in idx.iter_mut().zip(LINK_COLUMNS) {
        *slot = *map
            .get(name)
            .ok_or_else(|| InstanceError::MissingColumn { file: FILE, column: name.to_string() })?;
    }
    let kink = map.get("x_kink").copied();

    let mut links = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(FILE, e))?;
        let row = Row { file: FILE, line: record.position().map_or(0, |p| p.line()), record: &record };
        let c = |i: usize| LINK_COLUMNS[i];
        let mut link = Link::new(
            row.node(idx[0], c(0))?,
            row.node(idx[1], c(1))?,
            row.number(idx[2], c(2))?,
            row.number(idx[3], c(3))?,
        );
        if row.flag(idx[4], c(4))? {
            link = link.with_signal(row.number(idx[5], c(5))?, row.number(idx[6], c(6))?, row.node(idx[7], c(7))?);
        }
        if row.flag(idx[8], c(8))? {
            link = link.with_expansion(row.number(idx[9], c(9))?, row.number(idx[10], c(10))?);
        }
        if let Some(k) = kink {
            link.printed_x_kink = row.number(k, "x_kink")?;
        }
        links.push(link);
    }
    if links.is_empty() {
        return Err(InstanceError::Empty(FILE));
    }
    Ok(links)
}

/// Parses a square or rectangular demand matrix: the first column holds
/// origins, the header holds destinations. `-`, `0` and empty cells carry no
/// demand.
pub fn parse_od(text: &str) -> Result<OdMatrix, InstanceError> {
    const FILE: &str = "od";
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(FILE, e))?.clone();
    if headers.len() < 2 {
        return Err(InstanceError::Row { file: FILE, line: 1, message: "expected an origin column and destinations".into() });
    }
    let mut destinations = Vec::new();
    let mut seen = HashMap::new();
    for cell in headers.iter().skip(1) {
        let d = cell.parse::<NodeId>().map_err(|_| InstanceError::Row {
            file: FILE,
            line: 1,
            message: format!("`{cell}` is not a destination label"),
        })?;
        if seen.insert(d, ()).is_some() {
            return Err(InstanceError::DuplicateColumn { file: FILE, column: cell.to_string() });
        }
        destinations.push(d);
    }

    let mut pairs = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(FILE, e))?;
        rows += 1;
        let row = Row { file: FILE, line: record.position().map_or(0, |p| p.line()), record: &record };
        let origin = row.node(0, "origin")?;
        for (i, &destination) in destinations.iter().enumerate() {
            let cell = &record[i + 1];
            if cell.is_empty() || cell == "-" {
                continue;
            }
            let demand = row.number(i + 1, &destination.to_string())?;
            if demand < 0.0 {
                return Err(row.err(format!("negative demand {demand} from {origin} to {destination}")));
            }
            if demand > 0.0 {
                pairs.push(OdPair { origin, destination, demand });
            }
        }
    }
    if rows == 0 {
        return Err(InstanceError::Empty(FILE));
    }
    Ok(OdMatrix::new(pairs)?)
}
