//! Activation frame files: `<name>.f32` holds the concatenated `d`-vectors
//! (little-endian binary32) and the sidecar `<name>.json` lists
//! `(layer_id, offset)` per frame, with `offset` in bytes.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::ActivationFrame;
use crate::io::{read_f32_file, read_json, write_f32_file, write_json};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub layer_id: u32,
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameIndex {
    pub d: usize,
    pub frames: Vec<FrameEntry>,
}

pub fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("json")
}

pub fn write_frames<T: Real>(data: &Path, frames: &[ActivationFrame<T>]) -> Result<()> {
    let d = frames.first().map(|f| f.z.len()).unwrap_or(0);
    let mut values = Vec::with_capacity(frames.len() * d);
    let mut entries = Vec::with_capacity(frames.len());
    for f in frames {
        if f.z.len() != d {
            return Err(Error::dims(format!("frame at layer {}", f.layer_id), d, f.z.len()));
        }
        entries.push(FrameEntry {
            layer_id: f.layer_id,
            offset: (values.len() * 4) as u64,
        });
        values.extend(f.z.iter().map(|x| x.as_f32()));
    }
    write_f32_file(data, &values)?;
    write_json(&sidecar_path(data), &FrameIndex { d, frames: entries })
}

pub fn read_frames<T: Real>(data: &Path) -> Result<Vec<ActivationFrame<T>>> {
    let index: FrameIndex = read_json(&sidecar_path(data))?;
    let values = read_f32_file(data)?;
    let mut frames = Vec::with_capacity(index.frames.len());
    for e in &index.frames {
        if e.offset % 4 != 0 {
            return Err(Error::InvalidData(format!("frame offset {} is not 4-byte aligned", e.offset)));
        }
        let start = (e.offset / 4) as usize;
        let end = start + index.d;
        if end > values.len() {
            return Err(Error::dims(format!("frame at offset {}", e.offset), end, values.len()));
        }
        let z = DVector::from_iterator(index.d, values[start..end].iter().map(|&x| T::of_f32(x)));
        if !crate::scalar::all_finite(z.iter()) {
            return Err(Error::NonFiniteInput("activation frame"));
        }
        frames.push(ActivationFrame::new(e.layer_id, z));
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.f32");
        let frames = vec![
            ActivationFrame::new(2, DVector::from_vec(vec![1.0_f64, -0.5, 0.25])),
            ActivationFrame::new(7, DVector::from_vec(vec![0.0, 3.0, -1.0])),
        ];
        write_frames(&path, &frames).unwrap();
        assert_eq!(read_frames::<f64>(&path).unwrap(), frames);
        let index: FrameIndex = read_json(&sidecar_path(&path)).unwrap();
        assert_eq!(index.frames[1].offset, 12);
    }
}
