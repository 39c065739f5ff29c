//! Parameter checkpoints.
//!
//! Layout: the 8-byte magic `UAVNNCK1`, a little-endian `u64` header length,
//! a UTF-8 JSON header describing each network, then every parameter as a
//! little-endian `f64` in header order (per layer: weights row-major, then
//! bias).

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, DenseNetwork, Layer};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"UAVNNCK1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    networks: Vec<NetworkShape>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkShape {
    name: String,
    sizes: Vec<usize>,
    hidden: Activation,
    output: Activation,
}

pub fn encode_checkpoint(networks: &[(&str, &DenseNetwork)]) -> Result<Vec<u8>> {
    let header = Header {
        networks: networks
            .iter()
            .map(|(name, net)| NetworkShape {
                name: name.to_string(),
                sizes: net.sizes(),
                hidden: net.hidden_activation(),
                output: net.output_activation(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let n_params: usize = networks.iter().map(|(_, n)| n.parameter_count()).sum();
    let mut out = Vec::with_capacity(16 + json.len() + 8 * n_params);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, net) in networks {
        for v in net.flat_parameters() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Vec<(String, DenseNetwork)>> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(Error::Checkpoint("missing magic bytes".into()));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body_start = 16usize
        .checked_add(header_len)
        .filter(|end| *end <= bytes.len())
        .ok_or_else(|| Error::Checkpoint("header length exceeds file size".into()))?;
    let header: Header = serde_json::from_slice(&bytes[16..body_start])?;
    let mut values = bytes[body_start..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    if !(bytes.len() - body_start).is_multiple_of(8) {
        return Err(Error::Checkpoint("parameter block is not a whole number of f64".into()));
    }
    let mut out = Vec::with_capacity(header.networks.len());
    for shape in header.networks {
        if shape.sizes.len() < 2 {
            return Err(Error::Checkpoint(format!("network `{}` has fewer than two sizes", shape.name)));
        }
        let mut layers = Vec::with_capacity(shape.sizes.len() - 1);
        for w in shape.sizes.windows(2) {
            let mut take = |n: usize| -> Result<Vec<f64>> {
                let v: Vec<f64> = values.by_ref().take(n).collect();
                if v.len() == n {
                    Ok(v)
                } else {
                    Err(Error::Checkpoint(format!("truncated parameters for `{}`", shape.name)))
                }
            };
            let weights = Array2::from_shape_vec((w[0], w[1]), take(w[0] * w[1])?)
                .map_err(|e| Error::Checkpoint(e.to_string()))?;
            let bias = Array1::from_vec(take(w[1])?);
            layers.push(Layer { weights, bias });
        }
        out.push((shape.name, DenseNetwork::from_layers(layers, shape.hidden, shape.output)?));
    }
    if values.next().is_some() {
        return Err(Error::Checkpoint("trailing parameters after the last network".into()));
    }
    Ok(out)
}

pub fn save_checkpoint(path: &Path, networks: &[(&str, &DenseNetwork)]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, encode_checkpoint(networks)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Vec<(String, DenseNetwork)>> {
    if !path.exists() {
        return Err(Error::MissingCheckpoint(path.display().to_string()));
    }
    decode_checkpoint(&fs::read(path)?)
}
