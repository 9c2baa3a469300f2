//! Named tensor bundles on disk: a `manifest.json` describing every tensor
//! plus one raw little-endian `f64` file per tensor.
//!
//! ```text
//! <dir>/manifest.json   {"metadata": <any JSON>, "tensors": [{"name", "shape", "file"}]}
//! <dir>/<index>.f64     row-major values, 8 bytes each, little endian
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ndtape::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    metadata: serde_json::Value,
    tensors: Vec<Entry>,
}

/// Write `tensors` under `dir`, creating it if needed.
pub fn save(dir: &Path, metadata: serde_json::Value, tensors: &[(String, &Tensor)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(tensors.len());
    for (i, (name, t)) in tensors.iter().enumerate() {
        let file = format!("{:04}.f64", i);
        let bytes: Vec<u8> = t.data().iter().flat_map(|v| v.to_le_bytes()).collect();
        let path = dir.join(&file);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        entries.push(Entry { name: name.clone(), shape: t.shape().to_vec(), file });
    }
    let manifest = Manifest { metadata, tensors: entries };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
}

/// Read a bundle written by [`save`]: metadata and named tensors in order.
pub fn load(dir: &Path) -> Result<(serde_json::Value, Vec<(String, Tensor)>)> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let mut out = Vec::with_capacity(manifest.tensors.len());
    for e in manifest.tensors {
        let path = dir.join(&e.file);
        let bytes = fs::read(&path).map_err(|err| Error::io(&path, err))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Dataset(format!("{}: length {} is not a multiple of 8", path.display(), bytes.len())));
        }
        let data: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        out.push((e.name, Tensor::new(e.shape, data)?));
    }
    Ok((manifest.metadata, out))
}
