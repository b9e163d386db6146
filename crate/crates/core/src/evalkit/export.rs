use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::corpus::{Domain, IdMap};
use crate::error::{Error, Result};
use crate::model::ModelState;
use crate::numcore::DenseMatrix;
use crate::trainer::TrainingData;

pub const USER_EMBEDDINGS_FILE: &str = "user_embeddings.tsv";
pub const ITEM_EMBEDDINGS_FILE: &str = "item_embeddings.tsv";

fn write_rows<'a>(path: &Path, header: &str, rows: impl Iterator<Item = (String, &'a [f64])>) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{header}").map_err(io)?;
    for (prefix, values) in rows {
        write!(w, "{prefix}").map_err(io)?;
        for v in values {
            write!(w, "\t{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn header(prefix: &str, width: usize) -> String {
    let mut h = prefix.to_string();
    for k in 0..width {
        h.push_str(&format!("\tv{k}"));
    }
    h
}

/// Writes `user_embeddings.tsv` (user, domain, component, values) and
/// `item_embeddings.tsv` (item, domain, values) into `dir`.
///
/// The shared component is the fused one that scoring uses, so interleaving
/// it with the specific component per layer block and dotting with an item
/// row reproduces the model's score.
pub fn export_embeddings(
    model: &ModelState,
    data: &TrainingData,
    users: &IdMap,
    items: [&IdMap; 2],
    dir: &Path,
) -> Result<()> {
    let emb = model.embeddings(data.graph_refs())?;
    if users.len() != model.dims.num_users {
        return Err(Error::Lookup(format!("{} user tokens for {} users", users.len(), model.dims.num_users)));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = model.config.shared_dim();
    let mut user_rows: Vec<(String, &[f64])> = Vec::with_capacity(4 * users.len());
    for (u, token) in users.tokens().iter().enumerate() {
        for d in Domain::BOTH {
            let e = emb.domain(d);
            let parts: [(&str, &DenseMatrix); 2] = [("shared", &e.enhanced), ("specific", &e.specific)];
            for (component, m) in parts {
                user_rows.push((format!("{token}\t{}\t{component}", d.tag()), m.row(u)));
            }
        }
    }
    write_rows(&dir.join(USER_EMBEDDINGS_FILE), &header("user\tdomain\tcomponent", width), user_rows.into_iter())?;

    let mut item_rows: Vec<(String, &[f64])> = Vec::new();
    for d in Domain::BOTH {
        let e = emb.domain(d);
        let ids = items[d.index()];
        if ids.len() != e.item_out.rows() {
            return Err(Error::Lookup(format!(
                "{} item tokens for {} items in domain {d}",
                ids.len(),
                e.item_out.rows()
            )));
        }
        for (i, token) in ids.tokens().iter().enumerate() {
            item_rows.push((format!("{token}\t{}", d.tag()), e.item_out.row(i)));
        }
    }
    write_rows(&dir.join(ITEM_EMBEDDINGS_FILE), &header("item\tdomain", model.config.full_dim()), item_rows.into_iter())
}
