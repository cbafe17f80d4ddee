//! Checkpoint format: a small JSON header (config, tensor shapes in
//! declaration order, step) followed by the flat little-endian f64 parameter
//! blob. Save → load is bit-exact.

use super::model::Model;
use super::{ModelConfig, TrainError};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"EGLB";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    config: ModelConfig,
    shapes: Vec<(String, usize, usize)>,
    step: u64,
}

pub fn save_checkpoint(model: &Model, step: u64, path: &Path) -> Result<(), TrainError> {
    let io = |source| TrainError::CheckpointIo {
        path: path.to_path_buf(),
        source,
    };
    let header = Header {
        version: VERSION,
        config: model.cfg.clone(),
        shapes: model.parameter_shapes().to_vec(),
        step,
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| TrainError::InvalidCheckpoint(format!("header serialization: {e}")))?;
    let file = std::fs::File::create(path).map_err(io)?;
    let mut out = std::io::BufWriter::new(file);
    out.write_all(MAGIC).map_err(io)?;
    out.write_all(&(header_json.len() as u32).to_le_bytes())
        .map_err(io)?;
    out.write_all(&header_json).map_err(io)?;
    for tensor in model.tensors() {
        for v in &tensor.data {
            out.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, u64), TrainError> {
    let io = |source| TrainError::CheckpointIo {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::io::BufReader::new(std::fs::File::open(path).map_err(io)?);
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(TrainError::InvalidCheckpoint("bad magic bytes".into()));
    }
    let mut len = [0u8; 4];
    file.read_exact(&mut len).map_err(io)?;
    let mut header_json = vec![0u8; u32::from_le_bytes(len) as usize];
    file.read_exact(&mut header_json).map_err(io)?;
    let header: Header = serde_json::from_slice(&header_json)
        .map_err(|e| TrainError::InvalidCheckpoint(format!("unreadable header: {e}")))?;
    if header.version != VERSION {
        return Err(TrainError::InvalidCheckpoint(format!(
            "unsupported version {}",
            header.version
        )));
    }
    let mut model = Model::init(&header.config)?;
    if model.parameter_shapes() != header.shapes.as_slice() {
        return Err(TrainError::InvalidCheckpoint(
            "tensor shapes do not match the config".into(),
        ));
    }
    for tensor in model.tensors_mut() {
        let mut buf = [0u8; 8];
        for v in tensor.data.iter_mut() {
            file.read_exact(&mut buf).map_err(io)?;
            *v = f64::from_le_bytes(buf);
        }
    }
    // The blob must end exactly here.
    let mut rest = [0u8; 1];
    match file.read(&mut rest) {
        Ok(0) => {}
        Ok(_) => {
            return Err(TrainError::InvalidCheckpoint(
                "trailing bytes after the parameter blob".into(),
            ))
        }
        Err(e) => return Err(io(e)),
    }
    Ok((model, header.step))
}
