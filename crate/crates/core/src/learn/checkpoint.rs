//! Binary model checkpoints.
//!
//! Layout: magic `HPCK`, format version, model kind, training seed, a JSON
//! echo of the model configuration, then each parameter tensor as row-major
//! little-endian f64 with its dimensions.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"HPCK";
const VERSION: u32 = 1;

/// What the tensors parameterize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Classifier,
    Autoencoder,
    RawIq,
}

impl ModelKind {
    fn code(self) -> u8 {
        match self {
            ModelKind::Classifier => 0,
            ModelKind::Autoencoder => 1,
            ModelKind::RawIq => 2,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => ModelKind::Classifier,
            1 => ModelKind::Autoencoder,
            2 => ModelKind::RawIq,
            other => return Err(Error::BadCheckpoint(format!("unknown model kind {other}"))),
        })
    }
}

/// A loaded checkpoint, still in raw tensor form.
pub struct Checkpoint {
    pub kind: ModelKind,
    pub seed: u64,
    pub config_json: String,
    pub tensors: Vec<Array2<f64>>,
}

pub fn save_checkpoint(
    path: &Path,
    kind: ModelKind,
    seed: u64,
    config_json: &str,
    tensors: &[&Array2<f64>],
) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    f.write_all(MAGIC)?;
    f.write_all(&VERSION.to_le_bytes())?;
    f.write_all(&[kind.code()])?;
    f.write_all(&seed.to_le_bytes())?;
    let cfg = config_json.as_bytes();
    f.write_all(&(cfg.len() as u32).to_le_bytes())?;
    f.write_all(cfg)?;
    f.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for t in tensors {
        f.write_all(&(t.nrows() as u32).to_le_bytes())?;
        f.write_all(&(t.ncols() as u32).to_le_bytes())?;
        for v in t.iter() {
            f.write_all(&v.to_le_bytes())?;
        }
    }
    f.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut f = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadCheckpoint(format!(
            "{}: bad magic", path.display()
        )));
    }
    let version = read_u32(&mut f)?;
    if version != VERSION {
        return Err(Error::BadCheckpoint(format!(
            "unsupported version {version}"
        )));
    }
    let mut kind = [0u8; 1];
    f.read_exact(&mut kind)?;
    let kind = ModelKind::from_code(kind[0])?;
    let mut seed = [0u8; 8];
    f.read_exact(&mut seed)?;
    let seed = u64::from_le_bytes(seed);
    let cfg_len = read_u32(&mut f)? as usize;
    if cfg_len > 1 << 20 {
        return Err(Error::BadCheckpoint("config block too large".into()));
    }
    let mut cfg = vec![0u8; cfg_len];
    f.read_exact(&mut cfg)?;
    let config_json = String::from_utf8(cfg)
        .map_err(|_| Error::BadCheckpoint("config is not utf-8".into()))?;
    let n_tensors = read_u32(&mut f)? as usize;
    if n_tensors > 1024 {
        return Err(Error::BadCheckpoint("implausible tensor count".into()));
    }
    let mut tensors = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        let rows = read_u32(&mut f)? as usize;
        let cols = read_u32(&mut f)? as usize;
        if rows.saturating_mul(cols) > 1 << 28 {
            return Err(Error::BadCheckpoint("implausible tensor size".into()));
        }
        let mut data = vec![0.0f64; rows * cols];
        let mut buf = [0u8; 8];
        for v in &mut data {
            f.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        tensors.push(
            Array2::from_shape_vec((rows, cols), data)
                .map_err(|e| Error::BadCheckpoint(e.to_string()))?,
        );
    }
    Ok(Checkpoint {
        kind,
        seed,
        config_json,
        tensors,
    })
}
