//! Invariant self-checks on small seeded instances.

use std::io::Write;

use serde::Serialize;
use tensornorm::feasibility::{threshold_bisection, DEAD_ZONE_MAX};
use tensornorm::generators::{gen_gaussian, gen_orthogonal_test};
use tensornorm::grid::{build_hemisphere_grid, hemisphere_point_count};
use tensornorm::nuclear::nuclear_norm_fptas;
use tensornorm::spectral::{best_rank_one, polish_rank_one, spectral_norm_fptas_with};
use tensornorm::{Error, ErrorMode, Exec, NormEstimate, Result};

use crate::args::{Format, VerifyArgs};
use crate::output::sink;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn contraction(seed: u64) -> Result<Check> {
    let t = gen_gaussian(3, 4, 5, seed);
    let g = gen_gaussian(1, 1, 12, seed + 1);
    let v = g.values();
    let (x, y, z) = (&v[0..3], &v[3..7], &v[7..12]);
    let direct = t.evaluate(x, y, z)?;
    let m = t.contract_first(x)?;
    let mut via = 0.0;
    for j in 0..4 {
        for k in 0..5 {
            via += y[j] * m[(j, k)] * z[k];
        }
    }
    let err = (direct - via).abs() / direct.abs().max(1.0);
    Ok(check("contraction_associativity", err <= 1e-12, format!("relative difference {err:e}")))
}

fn point_counts() -> Result<Check> {
    for l in 2..=5 {
        for q in 2..=8 {
            let built = build_hemisphere_grid(l, q)?.len() as u128;
            if built != hemisphere_point_count(l, q) {
                return Ok(check("grid_point_count", false, format!("l={l} q={q}: built {built}")));
            }
        }
    }
    Ok(check("grid_point_count", true, "l in 2..=5, q in 2..=8".into()))
}

fn spectral_sandwich(seed: u64) -> Result<Check> {
    let t = gen_gaussian(3, 5, 5, seed);
    let est = spectral_norm_fptas_with(&t, 1e-2, ErrorMode::Relative, None, Exec::Parallel)?;
    let w = est.witness.clone().ok_or(Error::MissingWitness)?;
    let p = polish_rank_one(&t, &w.x, &w.y, &w.z, 1000, 1e-15)?;
    let ok = est.lower <= p.lambda + 1e-12 && p.lambda <= est.upper + 1e-12;
    Ok(check(
        "spectral_sandwich",
        ok,
        format!("lower {} <= local max {} <= upper {}", est.lower, p.lambda, est.upper),
    ))
}

fn policies_agree(seed: u64) -> Result<Check> {
    let t = gen_gaussian(4, 6, 6, seed);
    let a = spectral_norm_fptas_with(&t, 1e-2, ErrorMode::Relative, None, Exec::Sequential)?;
    let b = spectral_norm_fptas_with(&t, 1e-2, ErrorMode::Relative, None, Exec::Parallel)?;
    let same = |e: &NormEstimate| (e.value.to_bits(), e.upper.to_bits(), e.witness.clone());
    Ok(check("sequential_parallel_identical", same(&a) == same(&b), format!("values {} and {}", a.value, b.value)))
}

fn rank_one_identity(seed: u64) -> Result<Check> {
    let t = gen_gaussian(3, 4, 4, seed);
    let est = spectral_norm_fptas_with(&t, 1e-2, ErrorMode::Relative, None, Exec::Parallel)?;
    let fit = best_rank_one(&t, &est)?;
    Ok(check("best_rank_one_identity", fit.identity_gap <= 1e-10, format!("relative gap {:e}", fit.identity_gap)))
}

fn nuclear_sandwich(seed: u64) -> Result<Vec<Check>> {
    let (t, dec) = gen_orthogonal_test(3, 6, 6, 3, seed)?;
    let (est, cert) = nuclear_norm_fptas(&t, 5e-2, ErrorMode::Relative, None)?;
    let truth = dec.weight_sum();
    let tol = 1e-6 * truth;
    let sandwich = est.lower <= truth + tol && truth <= est.upper + tol;
    let recon = cert.dual_decomposition.assemble(t.dims())?.sub(&t)?.frobenius_norm() / t.frobenius_norm();
    Ok(vec![
        check("nuclear_sandwich", sandwich, format!("lower {} <= {truth} <= upper {}", est.lower, est.upper)),
        check("nuclear_decomposition", recon <= 1e-4, format!("relative reconstruction error {recon:e}")),
    ])
}

fn feasibility_threshold(seed: u64) -> Result<Check> {
    let t = gen_gaussian(2, 3, 3, seed);
    let r = threshold_bisection(&t, 1e-6)?;
    let est = spectral_norm_fptas_with(&t, 1e-6, ErrorMode::Relative, None, Exec::Parallel)?;
    let s2 = est.value * est.value;
    let err = (r.threshold - s2).abs();
    Ok(check(
        "feasibility_threshold",
        err <= 1e-6 + DEAD_ZONE_MAX,
        format!("threshold {} vs squared norm {s2}", r.threshold),
    ))
}

fn json_round_trip(seed: u64) -> Result<Check> {
    let t = gen_gaussian(3, 4, 4, seed);
    let est = spectral_norm_fptas_with(&t, 1e-2, ErrorMode::Relative, None, Exec::Parallel)?;
    let back: NormEstimate = serde_json::from_str(&est.to_json()?)?;
    Ok(check("json_round_trip", back == est, String::new()))
}

pub fn checks(seed: u64) -> Result<Vec<Check>> {
    let mut out = vec![
        contraction(seed)?,
        point_counts()?,
        spectral_sandwich(seed)?,
        policies_agree(seed)?,
        rank_one_identity(seed)?,
    ];
    out.extend(nuclear_sandwich(seed)?);
    out.push(feasibility_threshold(seed)?);
    out.push(json_round_trip(seed)?);
    Ok(out)
}

pub fn run(a: &VerifyArgs) -> Result<u8> {
    let results = checks(a.seed)?;
    let mut w = sink(a.out.as_deref())?;
    match a.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &results)?;
            writeln!(w)?;
        }
        Format::Csv => crate::output::write_csv(&mut w, &results)?,
    }
    w.flush()?;
    Ok(if results.iter().all(|c| c.passed) { 0 } else { 1 })
}
