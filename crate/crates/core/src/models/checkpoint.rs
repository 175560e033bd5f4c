//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "MHINRCK\0"
//! version      u32      CHECKPOINT_VERSION
//! spec_len     u64      length of the JSON-encoded ModelSpec
//! spec         spec_len bytes, UTF-8 JSON
//! n_tensors    u32      trainable tensors (Model::params order), then fixed ones
//! per tensor:  rows u64, cols u64, rows*cols f64 values
//! n_indices    u64      length of the head index table (0 without heads)
//! indices      n_indices u32
//! ```

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::network::Model;
use super::spec::ModelSpec;
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"MHINRCK\0";

fn bad(e: impl std::fmt::Display) -> Error {
    Error::Checkpoint(e.to_string())
}

pub fn write_checkpoint(model: &Model, mut w: impl Write) -> Result<()> {
    let spec = serde_json::to_vec(model.spec()).map_err(bad)?;
    let tensors: Vec<_> = model
        .params()
        .into_iter()
        .chain(model.fixed_tensors())
        .collect();
    (|| -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LE>(CHECKPOINT_VERSION)?;
        w.write_u64::<LE>(spec.len() as u64)?;
        w.write_all(&spec)?;
        w.write_u32::<LE>(tensors.len() as u32)?;
        for t in &tensors {
            w.write_u64::<LE>(t.rows() as u64)?;
            w.write_u64::<LE>(t.cols() as u64)?;
            for &v in t.values() {
                w.write_f64::<LE>(v)?;
            }
        }
        let indices = model.head_indices().unwrap_or(&[]);
        w.write_u64::<LE>(indices.len() as u64)?;
        for &i in indices {
            w.write_u32::<LE>(i as u32)?;
        }
        w.flush()
    })()
    .map_err(bad)
}

pub fn read_checkpoint(mut r: impl Read) -> Result<Model> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(bad)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = r.read_u32::<LE>().map_err(bad)?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let spec_len = r.read_u64::<LE>().map_err(bad)? as usize;
    let mut spec = vec![0u8; spec_len];
    r.read_exact(&mut spec).map_err(bad)?;
    let spec: ModelSpec = serde_json::from_slice(&spec).map_err(bad)?;
    let mut model = Model::build(&spec)?;

    let count = r.read_u32::<LE>().map_err(bad)? as usize;
    let expected = model.params().len() + model.fixed_tensors().len();
    if count != expected {
        return Err(bad(format!("unexpected tensor count {count}")));
    }
    let mut read_into = |t: &mut crate::nn::Tensor| -> Result<()> {
        let rows = r.read_u64::<LE>().map_err(bad)? as usize;
        let cols = r.read_u64::<LE>().map_err(bad)? as usize;
        if (rows, cols) != t.shape() {
            return Err(bad(format!(
                "tensor shape {rows}x{cols} does not match spec ({}x{})",
                t.rows(),
                t.cols()
            )));
        }
        r.read_f64_into::<LE>(t.values_mut()).map_err(bad)
    };
    for t in model.params_mut() {
        read_into(t)?;
    }
    for t in model.fixed_tensors_mut() {
        read_into(t)?;
    }
    let n_indices = r.read_u64::<LE>().map_err(bad)? as usize;
    if n_indices > 0 {
        let mut raw = vec![0u32; n_indices];
        r.read_u32_into::<LE>(&mut raw).map_err(bad)?;
        model.replace_head_indices(raw.into_iter().map(|i| i as usize).collect())?;
    } else if model.head_indices().is_some() {
        return Err(bad("missing head index table"));
    }
    Ok(model)
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(model, std::io::BufWriter::new(file))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;
    use crate::signal::HeadGrid;

    fn round_trip(spec: &ModelSpec) {
        let mut model = Model::build(spec).unwrap();
        // perturb so the file cannot be reproduced by rebuilding from the spec
        for p in model.params_mut() {
            p.values_mut()
                .iter_mut()
                .for_each(|v| *v = (*v * 3.7).sin());
        }
        let mut bytes = Vec::new();
        write_checkpoint(&model, &mut bytes).unwrap();
        let back = read_checkpoint(bytes.as_slice()).unwrap();
        assert_eq!(back.spec(), model.spec());
        for (a, b) in model.params().iter().zip(back.params()) {
            assert_eq!(a.values(), b.values());
        }
        for (a, b) in model.fixed_tensors().iter().zip(back.fixed_tensors()) {
            assert_eq!(a.values(), b.values());
        }
        assert_eq!(model.head_indices(), back.head_indices());
        let mut again = Vec::new();
        write_checkpoint(&back, &mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn all_kinds_round_trip() {
        round_trip(
            &ModelSpec::multi_head(HeadGrid::new(2, 4), 5)
                .with_hidden(vec![9, 7])
                .with_seed(4),
        );
        round_trip(&ModelSpec::siren(11).with_seed(5));
        round_trip(&ModelSpec::fourier_feature(6, 3).with_seed(6));
    }

    #[test]
    fn rejects_corruption() {
        let model = Model::build(&ModelSpec::siren(4)).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&model, &mut bytes).unwrap();
        let mut wrong_magic = bytes.clone();
        wrong_magic[0] = b'X';
        assert!(read_checkpoint(wrong_magic.as_slice()).is_err());
        let mut wrong_version = bytes.clone();
        wrong_version[8] = 99;
        assert!(read_checkpoint(wrong_version.as_slice()).is_err());
        assert!(read_checkpoint(&bytes[..bytes.len() - 3]).is_err());
    }
}
