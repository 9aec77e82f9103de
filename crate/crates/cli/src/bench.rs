//! Sweeps over `(ℓ, n, ε)`.
//!
//! `<norm>_timing.csv` has one row per `(ℓ, n)` and one column per `ε`, each
//! cell the wall-clock seconds of one run on a Gaussian `ℓ × n × n` tensor.
//! `<norm>_error.csv` has one row per `(ℓ, n, ε)` on an orthogonal tensor of
//! known norm (plus the `i + j + k` tensor for the nuclear norm) and carries
//! no timings, so fixed seeds reproduce it exactly.

use std::fs::{self, File};
use std::io;
use std::time::Instant;

use serde::Serialize;
use tensornorm::generators::{gen_gaussian, gen_orthogonal_test, gen_sequence_example};
use tensornorm::nuclear::nuclear_norm_fptas;
use tensornorm::spectral::spectral_norm_fptas;
use tensornorm::{Error, ErrorMode, NormEstimate, Result, Tensor3};

use crate::args::{BenchArgs, NormKind};
use crate::output::write_csv;

#[derive(Debug, Serialize)]
pub struct ErrorRow {
    pub instance: &'static str,
    pub l: usize,
    pub m: usize,
    pub n: usize,
    pub r: Option<usize>,
    pub eps: f64,
    pub q: Option<usize>,
    pub grid_points: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub truth: Option<f64>,
    /// `|value − truth| / truth`.
    pub exact_error: Option<f64>,
    /// `(upper − lower) / upper`.
    pub certified_gap: f64,
    pub certified: bool,
}

fn estimate(norm: NormKind, t: &Tensor3, eps: f64) -> Result<NormEstimate> {
    match norm {
        NormKind::Spectral => spectral_norm_fptas(t, eps, ErrorMode::Relative, None),
        NormKind::Nuclear => Ok(nuclear_norm_fptas(t, eps, ErrorMode::Relative, None)?.0),
    }
}

fn error_row(instance: &'static str, t: &Tensor3, r: Option<usize>, eps: f64, e: &NormEstimate, truth: Option<f64>) -> ErrorRow {
    let (l, m, n) = t.dims();
    ErrorRow {
        instance,
        l,
        m,
        n,
        r,
        eps,
        q: e.q,
        grid_points: e.grid_points,
        value: e.value,
        lower: e.lower,
        upper: e.upper,
        truth,
        exact_error: truth.map(|v| (e.value - v).abs() / v),
        certified_gap: if e.upper > 0.0 { (e.upper - e.lower) / e.upper } else { 0.0 },
        certified: e.certified,
    }
}

fn instance_seed(seed: u64, l: usize, n: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add((l * 1000 + n) as u64)
}

pub fn run(a: &BenchArgs) -> Result<u8> {
    if a.ls.is_empty() || a.ns.is_empty() || a.eps.is_empty() {
        return Err(Error::InvalidArgument("sweep lists must be nonempty".into()));
    }
    if a.ls.iter().chain(&a.ns).any(|&d| d == 0) || a.r == 0 {
        return Err(Error::InvalidArgument("sizes and rank must be positive".into()));
    }
    fs::create_dir_all(&a.out)?;
    let name = match a.norm {
        NormKind::Spectral => "spectral",
        NormKind::Nuclear => "nuclear",
    };

    let timing_path = a.out.join(format!("{name}_timing.csv"));
    let mut timing = csv::Writer::from_writer(File::create(&timing_path)?);
    let mut header = vec!["l".to_string(), "n".to_string()];
    header.extend(a.eps.iter().map(|e| format!("eps={e:e}")));
    timing.write_record(&header).map_err(io::Error::from)?;

    let mut errors = Vec::new();
    for &l in &a.ls {
        for &n in &a.ns {
            let seed = instance_seed(a.seed, l, n);
            let g = gen_gaussian(l, n, n, seed);
            let mut row = vec![l.to_string(), n.to_string()];
            for &eps in &a.eps {
                let started = Instant::now();
                estimate(a.norm, &g, eps)?;
                row.push(format!("{:.6}", started.elapsed().as_secs_f64()));
            }
            timing.write_record(&row).map_err(io::Error::from)?;

            let r = a.r.min(n);
            let (t, dec) = gen_orthogonal_test(l, n, n, r, seed)?;
            let truth = match a.norm {
                NormKind::Spectral => dec.max_weight(),
                NormKind::Nuclear => dec.weight_sum(),
            };
            for &eps in &a.eps {
                let e = estimate(a.norm, &t, eps)?;
                errors.push(error_row("orthogonal", &t, Some(r), eps, &e, Some(truth)));
            }
        }
    }
    timing.flush()?;
    if a.norm == NormKind::Nuclear {
        let t = gen_sequence_example();
        for &eps in &a.eps {
            let e = estimate(a.norm, &t, eps)?;
            errors.push(error_row("sequence", &t, None, eps, &e, None));
        }
    }
    let error_path = a.out.join(format!("{name}_error.csv"));
    write_csv(File::create(&error_path)?, &errors)?;
    println!("{}", serde_json::json!({ "timing": timing_path, "error": error_path }));
    Ok(0)
}
