use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tensornorm::grid::sample_uniform;
use tensornorm::io::{read_tensor, AnyTensor};
use tensornorm::nuclear::{nuclear_grid_for, nuclear_norm_fptas, nuclear_norm_fptas_d, NuclearCertificate, NuclearReport};
use tensornorm::spectral::{best_rank_one, spectral_grid_for, spectral_norm_fptas, spectral_norm_fptas_d};
use tensornorm::{Error, ErrorMode, NormEstimate, Result, Tensor3, UnitPointSet};

use crate::args::{GridChoice, NormArgs};
use crate::output::emit;

/// Wall-clock seconds per phase. Phases run inside the library for
/// order-d inputs are reported as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub grid_build_seconds: Option<f64>,
    pub solve_seconds: f64,
    pub extraction_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneSummary {
    pub lambda: f64,
    pub residual: f64,
    pub identity_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralOutput {
    #[serde(flatten)]
    pub estimate: NormEstimate,
    pub rank_one: Option<RankOneSummary>,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearOutput<D> {
    #[serde(flatten)]
    pub report: NuclearReport<D>,
    pub timing: Timing,
}

#[derive(Serialize)]
struct EstimateRow {
    value: f64,
    lower: f64,
    upper: f64,
    epsilon: f64,
    mode: ErrorMode,
    certified: bool,
    q: Option<usize>,
    grid_points: usize,
    seconds: f64,
    grid_build_seconds: Option<f64>,
    extraction_seconds: Option<f64>,
}

impl EstimateRow {
    fn new(e: &NormEstimate, t: &Timing) -> Self {
        EstimateRow {
            value: e.value,
            lower: e.lower,
            upper: e.upper,
            epsilon: e.epsilon,
            mode: e.mode,
            certified: e.certified,
            q: e.q,
            grid_points: e.grid_points,
            seconds: e.seconds,
            grid_build_seconds: t.grid_build_seconds,
            extraction_seconds: t.extraction_seconds,
        }
    }
}

#[derive(Serialize)]
struct NuclearRow {
    value: f64,
    lower: f64,
    upper: f64,
    epsilon: f64,
    mode: ErrorMode,
    certified: bool,
    q: Option<usize>,
    grid_points: usize,
    seconds: f64,
    grid_build_seconds: Option<f64>,
    solve_seconds: f64,
    extraction_seconds: Option<f64>,
    primal_value: f64,
    dual_bound: f64,
    theta: Option<f64>,
    feas_residual: f64,
    stationarity_residual: f64,
    terms: usize,
}

impl NuclearRow {
    fn new<D>(e: &NormEstimate, c: &NuclearCertificate<D>, t: &Timing, terms: usize) -> Self {
        NuclearRow {
            value: e.value,
            lower: e.lower,
            upper: e.upper,
            epsilon: e.epsilon,
            mode: e.mode,
            certified: e.certified,
            q: e.q,
            grid_points: e.grid_points,
            seconds: e.seconds,
            grid_build_seconds: t.grid_build_seconds,
            solve_seconds: t.solve_seconds,
            extraction_seconds: t.extraction_seconds,
            primal_value: c.primal_value,
            dual_bound: c.dual_bound,
            theta: c.theta,
            feas_residual: c.feas_residual,
            stationarity_residual: c.stationarity_residual,
            terms,
        }
    }
}

/// Reads a tensor file, naming it in I/O errors.
fn read_input(path: &Path) -> Result<AnyTensor> {
    read_tensor(path).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

/// Point set chosen by `--grid`, timed; `None` for `ℓ = 1`, where the
/// solvers need no grid.
fn point_set(
    t: &Tensor3,
    a: &NormArgs,
    hemi: fn(&Tensor3, f64, ErrorMode) -> Result<UnitPointSet>,
) -> Result<(Option<UnitPointSet>, f64)> {
    let started = Instant::now();
    let (l, _, _) = t.dims();
    let set = match a.grid {
        GridChoice::Random(n) => Some(sample_uniform(l, n, a.seed)?),
        GridChoice::Hemisphere if l == 1 => None,
        GridChoice::Hemisphere => Some(hemi(t, a.eps, a.mode.into())?),
    };
    Ok((set, started.elapsed().as_secs_f64()))
}

fn hemisphere_only(a: &NormArgs) -> Result<()> {
    match a.grid {
        GridChoice::Hemisphere => Ok(()),
        GridChoice::Random(_) => {
            Err(Error::InvalidArgument("random point sets are supported for order-3 tensors only".into()))
        }
    }
}

pub fn snorm(a: &NormArgs) -> Result<u8> {
    let mode = a.mode.into();
    let (estimate, rank_one, timing) = match read_input(&a.input)? {
        AnyTensor::Order3(t) => {
            let (set, grid_build) = point_set(&t, a, spectral_grid_for)?;
            let est = spectral_norm_fptas(&t, a.eps, mode, set.as_ref())?;
            let started = Instant::now();
            let fit = best_rank_one(&t, &est)?;
            let extraction = started.elapsed().as_secs_f64();
            let timing = Timing {
                grid_build_seconds: Some(grid_build),
                solve_seconds: est.seconds,
                extraction_seconds: Some(extraction),
            };
            let summary = RankOneSummary { lambda: fit.lambda, residual: fit.residual, identity_gap: fit.identity_gap };
            (est, Some(summary), timing)
        }
        AnyTensor::OrderD(t) => {
            hemisphere_only(a)?;
            let est = spectral_norm_fptas_d(&t, a.eps, mode)?;
            let timing = Timing { grid_build_seconds: None, solve_seconds: est.seconds, extraction_seconds: None };
            (est, None, timing)
        }
    };
    let row = EstimateRow::new(&estimate, &timing);
    emit(a.out.as_deref(), a.format, &SpectralOutput { estimate, rank_one, timing }, &row)?;
    Ok(0)
}

pub fn nnorm(a: &NormArgs) -> Result<u8> {
    let mode = a.mode.into();
    match read_input(&a.input)? {
        AnyTensor::Order3(t) => {
            let (set, grid_build) = point_set(&t, a, nuclear_grid_for)?;
            let (estimate, certificate) = nuclear_norm_fptas(&t, a.eps, mode, set.as_ref())?;
            let timing = Timing {
                grid_build_seconds: Some(grid_build),
                solve_seconds: certificate.solve_seconds,
                extraction_seconds: Some(certificate.extraction_seconds),
            };
            let row = NuclearRow::new(&estimate, &certificate, &timing, certificate.dual_decomposition.terms.len());
            let out = NuclearOutput { report: NuclearReport { estimate, certificate }, timing };
            emit(a.out.as_deref(), a.format, &out, &row)?;
        }
        AnyTensor::OrderD(t) => {
            hemisphere_only(a)?;
            let (estimate, certificate) = nuclear_norm_fptas_d(&t, a.eps, mode)?;
            let timing = Timing {
                grid_build_seconds: None,
                solve_seconds: certificate.solve_seconds,
                extraction_seconds: Some(certificate.extraction_seconds),
            };
            let row = NuclearRow::new(&estimate, &certificate, &timing, certificate.dual_decomposition.len());
            let out = NuclearOutput { report: NuclearReport { estimate, certificate }, timing };
            emit(a.out.as_deref(), a.format, &out, &row)?;
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tensornorm::generators::{gen_orthogonal_test, gen_sequence_example};
    use tensornorm::RankOneDecomposition;

    #[test]
    fn spectral_output_round_trips() {
        let (t, _) = gen_orthogonal_test(3, 4, 4, 2, 1).unwrap();
        let estimate = spectral_norm_fptas(&t, 1e-2, ErrorMode::Relative, None).unwrap();
        let out = SpectralOutput {
            estimate,
            rank_one: Some(RankOneSummary { lambda: 0.1 + 0.2, residual: 1.0 / 3.0, identity_gap: 1e-300 }),
            timing: Timing { grid_build_seconds: Some(0.5), solve_seconds: 0.25, extraction_seconds: None },
        };
        let back: SpectralOutput = serde_json::from_str(&serde_json::to_string_pretty(&out).unwrap()).unwrap();
        assert_eq!(back, out);
    }

    #[test]
    fn nuclear_output_round_trips() {
        let (estimate, certificate) =
            nuclear_norm_fptas(&gen_sequence_example(), 1e-2, ErrorMode::Relative, None).unwrap();
        let out = NuclearOutput {
            report: NuclearReport { estimate, certificate },
            timing: Timing { grid_build_seconds: None, solve_seconds: 1.5, extraction_seconds: Some(0.125) },
        };
        let text = serde_json::to_string_pretty(&out).unwrap();
        let back: NuclearOutput<RankOneDecomposition> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, out);
    }
}
