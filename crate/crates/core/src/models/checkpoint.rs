//! Checkpoint IO: versioned structured text with canonical key order and
//! parameter arrays in declared layer order. Round-trips are bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::NormStats;
use crate::error::{Error, Result};
use crate::trace::write_atomic;

use super::{build, Model, ModelSpec, TrainMeta};

pub const CHECKPOINT_FORMAT: &str = "pai-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    spec: ModelSpec,
    norm: Option<NormStats>,
    schema_hash: u64,
    meta: TrainMeta,
    params: Vec<ParamBlob>,
}

#[derive(Serialize, Deserialize)]
struct ParamBlob {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    let theta = model.flatten();
    let params = model
        .layout()
        .into_iter()
        .map(|e| ParamBlob {
            name: e.name,
            rows: e.rows,
            cols: e.cols,
            data: theta[e.offset..e.offset + e.len].to_vec(),
        })
        .collect();
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        spec: model.spec.clone(),
        norm: model.norm.clone(),
        schema_hash: model.schema_hash,
        meta: model.meta,
        params,
    };
    let text = serde_json::to_string(&file).expect("checkpoint serializes");
    write_atomic(path, text.as_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path)?;
    let file: CheckpointFile = serde_json::from_str(&text)
        .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
    if file.format != CHECKPOINT_FORMAT {
        return Err(Error::CorruptCheckpoint(format!(
            "format '{}' is not '{CHECKPOINT_FORMAT}'",
            file.format
        )));
    }
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion(file.version));
    }
    let mut model = build(&file.spec)?;
    let layout = model.layout();
    if layout.len() != file.params.len() {
        return Err(Error::CorruptCheckpoint(format!(
            "{} parameter arrays, topology declares {}",
            file.params.len(),
            layout.len()
        )));
    }
    let mut theta = Vec::with_capacity(model.param_count());
    for (entry, blob) in layout.iter().zip(&file.params) {
        if blob.name != entry.name
            || blob.data.len() != entry.len
            || blob.rows != entry.rows
            || blob.cols != entry.cols
        {
            return Err(Error::CorruptCheckpoint(format!(
                "parameter '{}' ({}x{}, {} values) does not match declared '{}' ({}x{}, {})",
                blob.name,
                blob.rows,
                blob.cols,
                blob.data.len(),
                entry.name,
                entry.rows,
                entry.cols,
                entry.len
            )));
        }
        if let Some(bad) = blob.data.iter().find(|v| !v.is_finite()) {
            return Err(Error::CorruptCheckpoint(format!(
                "parameter '{}' contains non-finite value {bad}",
                blob.name
            )));
        }
        theta.extend_from_slice(&blob.data);
    }
    model.unflatten(&theta)?;
    model.norm = file.norm;
    model.schema_hash = file.schema_hash;
    model.meta = file.meta;
    Ok(model)
}
