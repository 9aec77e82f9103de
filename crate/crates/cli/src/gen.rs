use std::path::{Path, PathBuf};

use serde::Serialize;
use tensornorm::generators::{gen_gaussian, gen_orthogonal_test, gen_orthogonal_test_d, gen_sequence_example};
use tensornorm::io::{write_tensor, AnyTensor, GroundTruth, TensorFormat};
use tensornorm::{Error, Result, TensorD};

use crate::args::{GenArgs, Kind};

/// `<dir>/<stem>.truth.json` next to `out`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.truth.json"))
}

#[derive(Serialize)]
struct Written {
    tensor: PathBuf,
    sidecar: Option<PathBuf>,
    dims: Vec<usize>,
}

pub fn run(a: &GenArgs) -> Result<u8> {
    if a.kind == Kind::Seq && a.dims.as_ref().is_some_and(|d| d.as_slice() != [3, 3, 3]) {
        return Err(Error::InvalidArgument("--kind seq is always 3x3x3".into()));
    }
    let dims = a.dims.clone().unwrap_or_else(|| vec![4, 10, 10]);
    let dims = &dims;
    if a.kind != Kind::Seq && (dims.len() < 3 || dims.contains(&0)) {
        return Err(Error::InvalidArgument(format!("need at least three positive dims, got {dims:?}")));
    }
    let (tensor, truth) = match a.kind {
        Kind::Orth if dims.len() == 3 => {
            let (t, dec) = gen_orthogonal_test(dims[0], dims[1], dims[2], a.r, a.seed)?;
            (AnyTensor::Order3(t), Some(GroundTruth::from_terms(dec)))
        }
        Kind::Orth => {
            let (t, terms) = gen_orthogonal_test_d(dims, a.r, a.seed)?;
            (AnyTensor::OrderD(t), Some(GroundTruth::from_terms_d(terms)))
        }
        Kind::Gauss if dims.len() == 3 => (AnyTensor::Order3(gen_gaussian(dims[0], dims[1], dims[2], a.seed)), None),
        Kind::Gauss => {
            // Row-major order-d Gaussian entries from the order-3 sampler.
            let rest: usize = dims[2..].iter().product();
            let g = gen_gaussian(dims[0], dims[1], rest, a.seed);
            (AnyTensor::OrderD(TensorD::new(dims.to_vec(), g.values().to_vec())?), None)
        }
        Kind::Seq => (AnyTensor::Order3(gen_sequence_example()), None),
    };
    write_tensor(&a.out, &tensor, TensorFormat::from_path(&a.out))?;
    let sidecar = match truth {
        Some(g) => {
            let p = sidecar_path(&a.out);
            std::fs::write(&p, g.to_json()? + "\n")?;
            Some(p)
        }
        None => None,
    };
    println!("{}", serde_json::to_string(&Written { tensor: a.out.clone(), sidecar, dims: tensor.dims() })?);
    Ok(0)
}
