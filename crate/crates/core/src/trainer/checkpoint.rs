//! Binary checkpoint layout, all integers little-endian:
//!
//! ```text
//! b"AREIL001"
//! u32 header length, header bytes (TOML: [model], [dims], [meta])
//! per parameter, in store order:
//!     u32 name length, name bytes, u32 rank (= 2), u32 rows, u32 cols,
//!     rows * cols f64, row-major
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CheckpointErrorKind, Error, Result};
use crate::model::{param, ModelConfig, ModelDims, ModelState};
use crate::numcore::{DenseMatrix, ParameterStore};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"AREIL001";

/// Run facts stored next to the parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub config_digest: String,
    pub data_dir: String,
    pub best_epoch: usize,
    pub eval_k: usize,
    /// Validation metrics of the saved parameters, X then Y.
    pub valid_recall: [f64; 2],
    pub valid_ndcg: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    model: ModelConfig,
    dims: ModelDims,
    meta: CheckpointMeta,
}

fn encode(model: &ModelState, meta: &CheckpointMeta) -> Result<Vec<u8>> {
    let header = Header { model: model.config.clone(), dims: model.dims, meta: meta.clone() };
    let text = toml::to_string(&header).map_err(|e| Error::Config(format!("checkpoint header: {e}")))?;
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    for p in model.store.iter() {
        out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.extend_from_slice(&2u32.to_le_bytes());
        out.extend_from_slice(&(p.value.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(p.value.cols() as u32).to_le_bytes());
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save_checkpoint(model: &ModelState, meta: &CheckpointMeta, path: &Path) -> Result<()> {
    let bytes = encode(model, meta)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], CheckpointErrorKind> {
        let end = self.pos.checked_add(n).ok_or(CheckpointErrorKind::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(CheckpointErrorKind::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<usize, CheckpointErrorKind> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
}

fn decode(buf: &[u8]) -> std::result::Result<(ModelState, CheckpointMeta), CheckpointErrorKind> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(CHECKPOINT_MAGIC.len()).map_err(|_| CheckpointErrorKind::BadMagic)? != CHECKPOINT_MAGIC {
        return Err(CheckpointErrorKind::BadMagic);
    }
    let len = r.u32()?;
    let text = std::str::from_utf8(r.take(len)?).map_err(|e| CheckpointErrorKind::Config(e.to_string()))?;
    let header: Header = toml::from_str(text).map_err(|e| CheckpointErrorKind::Config(e.to_string()))?;
    let config = header.model.resolved().map_err(|e| CheckpointErrorKind::Config(e.to_string()))?;
    let shapes = header.dims.shapes(&config);

    let mut store = ParameterStore::new();
    for (k, &(rows, cols)) in shapes.iter().enumerate() {
        let name_len = r.u32()?;
        let name =
            std::str::from_utf8(r.take(name_len)?).map_err(|e| CheckpointErrorKind::Config(e.to_string()))?.to_string();
        let rank = r.u32()?;
        if name != param::NAMES[k] || rank != 2 {
            return Err(CheckpointErrorKind::ShapeMismatch { name });
        }
        let (r0, c0) = (r.u32()?, r.u32()?);
        if (r0, c0) != (rows, cols) {
            return Err(CheckpointErrorKind::ShapeMismatch { name });
        }
        let raw = r.take(rows * cols * 8)?;
        let data = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        let value =
            DenseMatrix::from_vec(rows, cols, data).map_err(|e| CheckpointErrorKind::Config(format!("{name}: {e}")))?;
        store.insert(&name, value).map_err(|e| CheckpointErrorKind::Config(e.to_string()))?;
    }
    if r.pos != buf.len() {
        return Err(CheckpointErrorKind::Config(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    let model =
        ModelState::from_store(&config, header.dims, store).map_err(|e| CheckpointErrorKind::Config(e.to_string()))?;
    Ok((model, header.meta))
}

/// Parameters come back bit-exact; Adam moments are not stored.
pub fn load_checkpoint(path: &Path) -> Result<(ModelState, CheckpointMeta)> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&buf).map_err(|kind| Error::checkpoint(path, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::seeded_rng;

    fn model() -> ModelState {
        let cfg = ModelConfig { embed_dim: 4, gcn_layers: 1, ..Default::default() };
        let dims = ModelDims { num_users: 3, num_items_x: 2, num_items_y: 5 };
        ModelState::new(&cfg, dims, &mut seeded_rng(8)).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let meta = CheckpointMeta { seed: 3, best_epoch: 7, valid_ndcg: [0.1, 0.2], ..Default::default() };
        let bytes = encode(&m, &meta).unwrap();
        let (back, meta_back) = decode(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(meta_back, meta);
        assert_eq!(encode(&back, &meta_back).unwrap(), bytes);
    }

    #[test]
    fn damaged_files_are_rejected() {
        let bytes = encode(&model(), &CheckpointMeta::default()).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(decode(&bad).unwrap_err(), CheckpointErrorKind::BadMagic);
        assert_eq!(decode(&bytes[..3]).unwrap_err(), CheckpointErrorKind::BadMagic);
        assert_eq!(decode(&bytes[..bytes.len() - 1]).unwrap_err(), CheckpointErrorKind::Truncated);
        assert_eq!(decode(&bytes[..20]).unwrap_err(), CheckpointErrorKind::Truncated);
    }

    #[test]
    fn shape_mismatch_is_named() {
        let m = model();
        let text_len = u32::from_le_bytes(encode(&m, &CheckpointMeta::default()).unwrap()[8..12].try_into().unwrap());
        let mut bytes = encode(&m, &CheckpointMeta::default()).unwrap();
        // first parameter's row count sits after its name and rank
        let at = 12 + text_len as usize + 4 + param::NAMES[0].len() + 4;
        bytes[at..at + 4].copy_from_slice(&4u32.to_le_bytes());
        assert_eq!(
            decode(&bytes).unwrap_err(),
            CheckpointErrorKind::ShapeMismatch { name: param::NAMES[0].to_string() }
        );
    }
}
