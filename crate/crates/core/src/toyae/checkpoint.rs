//! Parameter checkpoints: one LCT1 blob per parameter tensor plus a JSON
//! manifest carrying names, shapes, and the model geometry.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Shape, VideoTensor};

use super::model::{ModelGeom, ToyAEParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub geom: ModelGeom,
    pub params: Vec<ParamEntry>,
}

fn tensor_dims(params: &ToyAEParams, name: &str) -> (usize, usize) {
    match name {
        "enc_w1" => (params.enc_w1.rows, params.enc_w1.cols),
        "enc_w_mu" => (params.enc_w_mu.rows, params.enc_w_mu.cols),
        "enc_w_lv" => (params.enc_w_lv.rows, params.enc_w_lv.cols),
        "dec_w1" => (params.dec_w1.rows, params.dec_w1.cols),
        "dec_w2" => (params.dec_w2.rows, params.dec_w2.cols),
        "enc_b1" => (1, params.enc_b1.len()),
        "enc_b_mu" => (1, params.enc_b_mu.len()),
        "enc_b_lv" => (1, params.enc_b_lv.len()),
        "dec_b1" => (1, params.dec_b1.len()),
        "dec_b2" => (1, params.dec_b2.len()),
        _ => unreachable!("unknown parameter {name}"),
    }
}

/// Write `manifest.json` plus one `<name>.lct` per parameter into `dir`.
pub fn save_checkpoint(dir: impl AsRef<Path>, params: &ToyAEParams) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for (name, data) in params.tensors() {
        let (rows, cols) = tensor_dims(params, name);
        let file = format!("{name}.lct");
        let t = VideoTensor::<f64>::new(Shape::new(1, 1, rows, cols), data.to_vec())?;
        t.save(dir.join(&file))?;
        entries.push(ParamEntry {
            name: name.to_string(),
            rows,
            cols,
            file,
        });
    }
    let manifest = CheckpointManifest {
        geom: params.geom,
        params: entries,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    fs::write(&path, json).map_err(|e| Error::io(path, e))
}

/// Load a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(manifest_path: impl AsRef<Path>) -> Result<ToyAEParams> {
    let manifest_path = manifest_path.as_ref();
    let json = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: CheckpointManifest = serde_json::from_str(&json)
        .map_err(|e| Error::format("manifest", format!("invalid manifest JSON: {e}")))?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut params = ToyAEParams::zeros_like(manifest.geom);
    for entry in &manifest.params {
        let t = VideoTensor::<f64>::load(dir.join(&entry.file))?;
        let expected = Shape::new(1, 1, entry.rows, entry.cols);
        if t.shape() != expected {
            return Err(Error::format(
                "manifest",
                format!("parameter {} has shape {}, manifest says {expected}", entry.name, t.shape()),
            ));
        }
        let data = t.into_data();
        let slot = params
            .tensors_mut()
            .into_iter()
            .find(|(name, _)| *name == entry.name)
            .ok_or_else(|| Error::format("manifest", format!("unknown parameter {}", entry.name)))?;
        if slot.1.len() != data.len() {
            return Err(Error::format(
                "manifest",
                format!("parameter {} has {} values, model needs {}", entry.name, data.len(), slot.1.len()),
            ));
        }
        *slot.1 = data;
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn checkpoint_round_trip() {
        let geom = ModelGeom {
            in_channels: 1,
            patch_t: 2,
            patch_h: 2,
            patch_w: 2,
            hidden: 8,
            latent_channels: 3,
        };
        let params = ToyAEParams::init(geom, 42);
        let dir = tempdir().unwrap();
        save_checkpoint(dir.path(), &params).unwrap();
        let back = load_checkpoint(dir.path().join("manifest.json")).unwrap();
        assert_eq!(params, back);
    }
}
