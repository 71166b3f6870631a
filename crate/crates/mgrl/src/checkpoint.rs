//! Binary network checkpoints.
//!
//! Layout, all integers and floats little-endian: the 8 bytes `MGRLCKPT`,
//! `u32` format version, `u32` layer count `L`, `L` × `u64` widths, then every
//! parameter as `f64` in the network's flat order.

use std::path::Path;

use mgrl_core::approx::Mlp;

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 8] = b"MGRLCKPT";
pub const VERSION: u32 = 1;

pub fn encode(net: &Mlp) -> Vec<u8> {
    let widths = net.widths();
    let mut out = Vec::with_capacity(16 + 8 * widths.len() + 8 * net.n_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(widths.len() as u32).to_le_bytes());
    for &w in widths {
        out.extend_from_slice(&(w as u64).to_le_bytes());
    }
    for &p in net.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Mlp, String> {
    let mut rest = bytes;
    let mut take = |n: usize| -> Result<&[u8], String> {
        if rest.len() < n {
            return Err("truncated".into());
        }
        let (head, tail) = rest.split_at(n);
        rest = tail;
        Ok(head)
    };
    if take(8)? != MAGIC {
        return Err("bad magic bytes".into());
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let layers = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    if !(2..=64).contains(&layers) {
        return Err(format!("implausible layer count {layers}"));
    }
    let widths = (0..layers)
        .map(|_| Ok(u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize))
        .collect::<Result<Vec<_>, String>>()?;
    let bytes_needed = widths
        .windows(2)
        .try_fold(0usize, |acc, w| {
            w[0].checked_mul(w[1])?.checked_add(w[1])?.checked_add(acc)
        })
        .and_then(|n| n.checked_mul(8))
        .ok_or("widths overflow the parameter count")?;
    let body = take(bytes_needed)?;
    let params = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if !rest.is_empty() {
        return Err(format!("{} trailing bytes", rest.len()));
    }
    Mlp::from_params(&widths, params).map_err(|e| e.to_string())
}

pub fn save(net: &Mlp, path: &Path) -> CliResult<()> {
    std::fs::write(path, encode(net)).map_err(|e| CliError::io(path, e))
}

pub fn load(path: &Path) -> CliResult<Mlp> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|message| CliError::Checkpoint {
        path: path.to_path_buf(),
        message,
    })
}
