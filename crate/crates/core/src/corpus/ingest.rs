use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::DomainDataset;
use crate::error::{Error, Result};

/// One parsed line of a rating log.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInteraction {
    pub user_token: String,
    pub item_token: String,
    pub rating: f64,
    /// Parsed for validation only; splitting is random, not temporal.
    pub timestamp: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    /// Records with `rating >= positive_threshold` are positives.
    pub positive_threshold: f64,
    pub delimiter: char,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { positive_threshold: 0.0, delimiter: ',' }
    }
}

/// Reads a `user,item,rating[,timestamp]` log and binarizes it.
pub fn ingest_interactions(path: &Path, opts: &IngestOptions) -> Result<DomainDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let records = parse_interactions(BufReader::new(file), path, opts.delimiter)?;
    let positives: Vec<(&str, &str)> = records
        .iter()
        .filter(|r| r.rating >= opts.positive_threshold)
        .map(|r| (r.user_token.as_str(), r.item_token.as_str()))
        .collect();
    if positives.is_empty() {
        return Err(Error::EmptyDataset(path.display().to_string()));
    }
    let ds = DomainDataset::from_token_pairs(positives);
    log::info!(
        "{}: {} records, {} positive, {} after duplicate collapse ({} users, {} items)",
        path.display(),
        records.len(),
        ds.raw_records(),
        ds.interactions.len(),
        ds.num_users(),
        ds.num_items()
    );
    Ok(ds)
}

/// Parses records from any reader; `path` labels errors.
pub fn parse_interactions<R: BufRead>(reader: R, path: &Path, delimiter: char) -> Result<Vec<RawInteraction>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line_no = n + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push(parse_line(trimmed, delimiter).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        })?);
    }
    Ok(out)
}

fn parse_line(line: &str, delimiter: char) -> std::result::Result<RawInteraction, String> {
    let fields: Vec<&str> = line.split(delimiter).map(str::trim).collect();
    if !(3..=4).contains(&fields.len()) {
        return Err(format!("expected 3 or 4 fields, found {}", fields.len()));
    }
    if fields[0].is_empty() || fields[1].is_empty() {
        return Err("empty user or item token".into());
    }
    let rating: f64 = fields[2].parse().map_err(|_| format!("bad rating {:?}", fields[2]))?;
    if !rating.is_finite() {
        return Err(format!("non-finite rating {:?}", fields[2]));
    }
    let timestamp = match fields.get(3) {
        Some(t) if !t.is_empty() => Some(t.parse().map_err(|_| format!("bad timestamp {t:?}"))?),
        _ => None,
    };
    Ok(RawInteraction { user_token: fields[0].to_string(), item_token: fields[1].to_string(), rating, timestamp })
}
