//! On-disk layout of a prepared dataset.
//!
//! ```text
//! users.tsv            index<TAB>token
//! {x,y}.items.tsv      index<TAB>token
//! {x,y}.{train,validation,test}.tsv   user_index<TAB>item_index
//! stats.tsv            per-domain summary
//! manifest.toml        seed and sizes
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{CrossDomainDataset, Domain, DomainSplit, IdMap, Interaction, SplitDataset};
use crate::error::{Error, Result};

/// A split dataset together with the token maps needed to report results.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub users: IdMap,
    pub items_x: IdMap,
    pub items_y: IdMap,
    pub split: SplitDataset,
}

impl PreparedData {
    pub fn from_parts(cds: &CrossDomainDataset, split: SplitDataset) -> Self {
        Self {
            users: cds.shared_users.clone(),
            items_x: cds.domain_x.items.clone(),
            items_y: cds.domain_y.items.clone(),
            split,
        }
    }

    pub fn items(&self, d: Domain) -> &IdMap {
        match d {
            Domain::X => &self.items_x,
            Domain::Y => &self.items_y,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    seed: u64,
    num_users: usize,
    num_items_x: usize,
    num_items_y: usize,
    reassigned_x: usize,
    reassigned_y: usize,
}

const PARTS: [&str; 3] = ["train", "validation", "test"];

fn part_of<'a>(s: &'a DomainSplit, part: &str) -> &'a [Interaction] {
    match part {
        "train" => &s.train,
        "validation" => &s.validation,
        _ => &s.test,
    }
}

fn write_file(path: PathBuf, content: &str) -> Result<()> {
    fs::write(&path, content).map_err(|e| Error::io(path, e))
}

fn idmap_text(m: &IdMap) -> String {
    let mut s = String::new();
    for (i, t) in m.tokens().iter().enumerate() {
        writeln!(s, "{i}\t{t}").unwrap();
    }
    s
}

/// Writes the split manifest, id maps, and a statistics summary into `dir`.
pub fn write_prepared(dir: &Path, cds: &CrossDomainDataset, split: &SplitDataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(dir.join("users.tsv"), &idmap_text(&cds.shared_users))?;
    for d in Domain::BOTH {
        write_file(dir.join(format!("{}.items.tsv", d.tag())), &idmap_text(&cds.domain(d).items))?;
        for part in PARTS {
            let mut s = String::new();
            for it in part_of(split.domain(d), part) {
                writeln!(s, "{}\t{}", it.user, it.item).unwrap();
            }
            write_file(dir.join(format!("{}.{part}.tsv", d.tag())), &s)?;
        }
    }

    let mut stats = String::from("domain\tusers\titems\tinteractions\traw_interactions\tdensity_percent\n");
    for (d, st) in Domain::BOTH.iter().zip(cds.stats()) {
        writeln!(
            stats,
            "{d}\t{}\t{}\t{}\t{}\t{:.3}",
            st.users,
            st.items,
            st.interactions,
            st.raw_interactions,
            st.density * 100.0
        )
        .unwrap();
    }
    write_file(dir.join("stats.tsv"), &stats)?;

    let manifest = ManifestFile {
        seed: split.seed,
        num_users: split.num_users,
        num_items_x: split.x.num_items,
        num_items_y: split.y.num_items,
        reassigned_x: split.x.reassigned,
        reassigned_y: split.y.reassigned,
    };
    write_file(dir.join("manifest.toml"), &toml::to_string(&manifest).expect("manifest serializes"))
}

fn read_text(path: PathBuf) -> Result<(PathBuf, String)> {
    let s = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, s))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn read_idmap(path: PathBuf) -> Result<IdMap> {
    let (path, text) = read_text(path)?;
    let mut tokens = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let (idx, tok) = line.split_once('\t').ok_or_else(|| parse_error(&path, n + 1, "expected index<TAB>token"))?;
        let idx: usize = idx.parse().map_err(|_| parse_error(&path, n + 1, "bad index"))?;
        if idx != tokens.len() {
            return Err(parse_error(&path, n + 1, "indices must be contiguous from 0"));
        }
        tokens.push(tok.to_string());
    }
    Ok(IdMap::from_ordered(tokens))
}

fn read_pairs(path: PathBuf, num_users: usize, num_items: usize) -> Result<Vec<Interaction>> {
    let (path, text) = read_text(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let bad = || parse_error(&path, n + 1, "expected user_index<TAB>item_index in range");
        let (u, i) = line.split_once('\t').ok_or_else(bad)?;
        let user: usize = u.parse().map_err(|_| bad())?;
        let item: usize = i.parse().map_err(|_| bad())?;
        if user >= num_users || item >= num_items {
            return Err(bad());
        }
        out.push(Interaction { user, item });
    }
    Ok(out)
}

/// Reads a directory written by [`write_prepared`].
pub fn read_prepared(dir: &Path) -> Result<PreparedData> {
    let (mpath, mtext) = read_text(dir.join("manifest.toml"))?;
    let manifest: ManifestFile = toml::from_str(&mtext).map_err(|e| parse_error(&mpath, 0, e.to_string()))?;
    let users = read_idmap(dir.join("users.tsv"))?;
    let items_x = read_idmap(dir.join("x.items.tsv"))?;
    let items_y = read_idmap(dir.join("y.items.tsv"))?;
    if users.len() != manifest.num_users
        || items_x.len() != manifest.num_items_x
        || items_y.len() != manifest.num_items_y
    {
        return Err(parse_error(&mpath, 0, "id map sizes disagree with manifest"));
    }
    let read_domain = |d: Domain, num_items: usize, reassigned: usize| -> Result<DomainSplit> {
        let mut parts =
            PARTS.iter().map(|p| read_pairs(dir.join(format!("{}.{p}.tsv", d.tag())), users.len(), num_items));
        Ok(DomainSplit {
            num_items,
            train: parts.next().unwrap()?,
            validation: parts.next().unwrap()?,
            test: parts.next().unwrap()?,
            reassigned,
        })
    };
    let split = SplitDataset {
        seed: manifest.seed,
        num_users: users.len(),
        x: read_domain(Domain::X, items_x.len(), manifest.reassigned_x)?,
        y: read_domain(Domain::Y, items_y.len(), manifest.reassigned_y)?,
    };
    Ok(PreparedData { users, items_x, items_y, split })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{align_overlapping_users, split_holdout, DomainDataset};

    #[test]
    fn write_then_read_round_trips() {
        let pairs: Vec<(String, String)> =
            (0..12).flat_map(|u| (0..3).map(move |i| (format!("user{u}"), format!("item{}", (u + i) % 7)))).collect();
        let ds = DomainDataset::from_token_pairs(pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())));
        let cds = align_overlapping_users(&ds, &ds).unwrap();
        let split = split_holdout(&cds, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_prepared(dir.path(), &cds, &split).unwrap();
        let back = read_prepared(dir.path()).unwrap();
        assert_eq!(back, PreparedData::from_parts(&cds, split));
        let line = fs::read_to_string(dir.path().join("users.tsv")).unwrap();
        assert!(line.starts_with("0\tuser0\n"));
    }
}
