//! Tensor files and ground-truth sidecars.
//!
//! JSON: `{"dims": [n₁, …, n_d], "values": [...]}` with values in row-major
//! order (first index slowest). Binary: three little-endian `u64` dims
//! followed by little-endian `f64` values in the same order; order-3 only.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{RankOneDecomposition, RankOneTermD, Tensor3, TensorD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorFormat {
    Json,
    Binary,
}

impl TensorFormat {
    /// `.json` is JSON; anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => TensorFormat::Json,
            _ => TensorFormat::Binary,
        }
    }
}

/// A tensor read from a file: order 3, or higher.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTensor {
    Order3(Tensor3),
    OrderD(TensorD),
}

impl AnyTensor {
    pub fn dims(&self) -> Vec<usize> {
        match self {
            AnyTensor::Order3(t) => {
                let (l, m, n) = t.dims();
                vec![l, m, n]
            }
            AnyTensor::OrderD(t) => t.dims().to_vec(),
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            AnyTensor::Order3(t) => t.values(),
            AnyTensor::OrderD(t) => t.values(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

pub fn to_json(dims: &[usize], values: &[f64]) -> Result<String> {
    Ok(serde_json::to_string(&JsonTensor { dims: dims.to_vec(), values: values.to_vec() })?)
}

pub fn from_json(text: &str) -> Result<AnyTensor> {
    let f: JsonTensor = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    build(f.dims, f.values)
}

fn build(dims: Vec<usize>, values: Vec<f64>) -> Result<AnyTensor> {
    let expected = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    match expected {
        _ if dims.len() < 3 => Err(Error::Format(format!("need at least 3 dims, got {}", dims.len()))),
        None => Err(Error::Format(format!("dims {dims:?} overflow"))),
        Some(n) if n != values.len() => {
            Err(Error::Format(format!("dims {dims:?} need {n} values, got {}", values.len())))
        }
        Some(_) if dims.len() == 3 => Ok(AnyTensor::Order3(Tensor3::new([dims[0], dims[1], dims[2]], values)?)),
        Some(_) => Ok(AnyTensor::OrderD(TensorD::new(dims, values)?)),
    }
}

pub fn write_binary<W: Write>(t: &Tensor3, mut w: W) -> Result<()> {
    let (l, m, n) = t.dims();
    let mut buf = Vec::with_capacity(24 + 8 * t.values().len());
    for d in [l, m, n] {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in t.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Tensor3> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 24 {
        return Err(Error::Format(format!("binary header needs 24 bytes, got {}", bytes.len())));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    let dims: Vec<usize> = (0..3)
        .map(|k| usize::try_from(word(k)).map_err(|_| Error::Format("dimension exceeds usize".into())))
        .collect::<Result<_>>()?;
    let body = &bytes[24..];
    if body.len() % 8 != 0 {
        return Err(Error::Format(format!("body length {} is not a multiple of 8", body.len())));
    }
    let values: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    match build(dims, values)? {
        AnyTensor::Order3(t) => Ok(t),
        AnyTensor::OrderD(_) => unreachable!("three dims"),
    }
}

pub fn read_tensor(path: &Path) -> Result<AnyTensor> {
    match TensorFormat::from_path(path) {
        TensorFormat::Json => from_json(&fs::read_to_string(path)?),
        TensorFormat::Binary => Ok(AnyTensor::Order3(read_binary(fs::File::open(path)?)?)),
    }
}

pub fn write_tensor(path: &Path, t: &AnyTensor, format: TensorFormat) -> Result<()> {
    match (format, t) {
        (TensorFormat::Json, t) => fs::write(path, to_json(&t.dims(), t.values())?)?,
        (TensorFormat::Binary, AnyTensor::Order3(t)) => write_binary(t, fs::File::create(path)?)?,
        (TensorFormat::Binary, AnyTensor::OrderD(_)) => {
            return Err(Error::InvalidArgument("binary format holds order-3 tensors only".into()))
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Decomposition {
    Order3(RankOneDecomposition),
    OrderD(Vec<RankOneTermD>),
}

/// Known norms of a generated orthogonal tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `max λ`.
    pub spectral: f64,
    /// `Σ λ`.
    pub nuclear: f64,
    pub decomposition: Decomposition,
}

impl GroundTruth {
    pub fn from_terms(dec: RankOneDecomposition) -> Self {
        GroundTruth { spectral: dec.max_weight(), nuclear: dec.weight_sum(), decomposition: Decomposition::Order3(dec) }
    }

    pub fn from_terms_d(terms: Vec<RankOneTermD>) -> Self {
        let spectral = terms.iter().map(|t| t.weight.abs()).fold(0.0, f64::max);
        let nuclear = terms.iter().map(|t| t.weight.abs()).sum();
        GroundTruth { spectral, nuclear, decomposition: Decomposition::OrderD(terms) }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Format(e.to_string()))
    }
}
