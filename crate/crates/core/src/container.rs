//! Binary container framing shared by every baked artifact.
//!
//! Layout: 8-byte magic, u32 format version, u32 JSON length, the JSON
//! parameter block (tool version + full bake parameters, for reproducibility),
//! then the format-specific payload. All integers little-endian. Byte layouts
//! of the payloads live in FORMATS.md.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const MAX_HEADER_JSON: usize = 1 << 20;

/// Writes the common header. `params` is any serializable parameter struct;
/// the tool version is injected alongside it.
pub fn write_header<P: Serialize>(
    w: &mut impl Write,
    magic: &[u8; 8],
    version: u32,
    params: &P,
) -> Result<()> {
    #[derive(Serialize)]
    struct Envelope<'a, P> {
        tool_version: &'a str,
        params: &'a P,
    }
    let json = serde_json::to_vec(&Envelope {
        tool_version: TOOL_VERSION,
        params,
    })
    .map_err(|e| Error::Format(format!("header encode: {e}")))?;
    w.write_all(magic)?;
    w.write_all(&version.to_le_bytes())?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    Ok(())
}

/// Reads and validates the common header; returns (version, params).
pub fn read_header<P: DeserializeOwned>(
    r: &mut impl Read,
    magic: &[u8; 8],
    max_version: u32,
) -> Result<(u32, P)> {
    let mut found = [0u8; 8];
    r.read_exact(&mut found)?;
    if &found != magic {
        return Err(Error::Format(format!(
            "bad magic: expected {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&found)
        )));
    }
    let version = read_u32(r)?;
    if version == 0 || version > max_version {
        return Err(Error::Format(format!(
            "unsupported container version {version} (max {max_version})"
        )));
    }
    let json_len = read_u32(r)? as usize;
    if json_len > MAX_HEADER_JSON {
        return Err(Error::Format("oversized header parameter block".into()));
    }
    let mut json = vec![0u8; json_len];
    r.read_exact(&mut json)?;
    #[derive(serde::Deserialize)]
    struct Envelope<P> {
        #[allow(dead_code)]
        tool_version: String,
        params: P,
    }
    let env: Envelope<P> = serde_json::from_slice(&json)
        .map_err(|e| Error::Format(format!("header decode: {e}")))?;
    Ok((version, env.params))
}

pub fn write_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_f32_slice(w: &mut impl Write, data: &[f32]) -> Result<()> {
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_f32_vec(r: &mut impl Read, count: usize) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; count * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
