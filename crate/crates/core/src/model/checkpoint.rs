//! Binary parameter checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "AIRDELAY-TFT v1\n"
//! u32 header length, header bytes: ModelConfig as JSON
//! u32 tensor count
//! per tensor: u32 name length, name (UTF-8), u32 rank, rank × u64 dims,
//!             numel × f64
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::config::ModelConfig;
use super::params::ModelParams;
use super::ModelError;
use crate::tensor::Tensor;

const MAGIC: &[u8] = b"AIRDELAY-TFT v1\n";

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

pub fn write_checkpoint<W: Write>(mut w: W, config: &ModelConfig, params: &ModelParams) -> Result<(), ModelError> {
    params.validate_against(config)?;
    let header = serde_json::to_vec(config).map_err(|e| bad(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, t) in params.iter() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, ModelError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, ModelError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Reads a checkpoint and checks that its tensors are exactly the set the
/// embedded configuration declares.
pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(ModelConfig, ModelParams), ModelError> {
    let mut magic = vec![0u8; MAGIC.len()];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let header_len = read_u32(&mut r)? as usize;
    let mut header = vec![0u8; header_len];
    r.read_exact(&mut header)?;
    let config: ModelConfig = serde_json::from_slice(&header).map_err(|e| bad(format!("header: {e}")))?;
    config.validate()?;

    let count = read_u32(&mut r)?;
    let mut params = ModelParams::from_map(Default::default());
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| bad("parameter name is not UTF-8"))?;
        let rank = read_u32(&mut r)? as usize;
        if rank == 0 || rank > 8 {
            return Err(bad(format!("{name}: implausible rank {rank}")));
        }
        let shape = (0..rank)
            .map(|_| read_u64(&mut r).map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f64::from_le_bytes(read_u64(&mut r)?.to_le_bytes()));
        }
        let t = Tensor::new(shape, data).map_err(|e| bad(format!("{name}: {e}")))?;
        params.insert(name, t);
    }
    params.validate_against(&config)?;
    Ok((config, params))
}

pub fn save_checkpoint(path: &Path, config: &ModelConfig, params: &ModelParams) -> Result<(), ModelError> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, config, params)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelConfig, ModelParams), ModelError> {
    let bytes = std::fs::read(path)?;
    read_checkpoint(bytes.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ModelConfig {
        ModelConfig {
            hidden_size: 8,
            num_attention_heads: 2,
            encoder_length: 4,
            decoder_length: 4,
            n_past: 2,
            n_known: 3,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let c = small();
        let p = ModelParams::init(&c, 11).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &c, &p).unwrap();
        let (c2, p2) = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(c, c2);
        assert_eq!(p, p2);
    }

    #[test]
    fn header_config_must_match_tensors() {
        let c = small();
        let p = ModelParams::init(&c, 11).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &c, &p).unwrap();
        // Rewrite the header with a different variable count.
        let other = ModelConfig { n_known: 4, ..small() };
        let header = serde_json::to_vec(&other).unwrap();
        let old_len = u32::from_le_bytes(buf[MAGIC.len()..MAGIC.len() + 4].try_into().unwrap()) as usize;
        let mut forged = MAGIC.to_vec();
        forged.extend_from_slice(&(header.len() as u32).to_le_bytes());
        forged.extend_from_slice(&header);
        forged.extend_from_slice(&buf[MAGIC.len() + 4 + old_len..]);
        assert!(read_checkpoint(forged.as_slice()).is_err());
    }

    #[test]
    fn truncated_file_is_an_error() {
        let c = small();
        let p = ModelParams::init(&c, 11).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &c, &p).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_checkpoint(buf.as_slice()).is_err());
        assert!(read_checkpoint(&b"garbage"[..]).is_err());
    }
}
