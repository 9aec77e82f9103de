//! Grid approximation of the tensor spectral norm.
//!
//! For a point set with covering coefficient `θ`, the best slice combination
//! over the set satisfies `max_x ‖T(x,•,•)‖_σ ≥ θ ‖T‖_σ`, so the grid maximum
//! is a lower bound within `(1 − θ)‖T‖_σ` of the truth. Sign symmetry of
//! `x ↦ ‖Σ x_i T_i‖_σ` lets the search run over a hemisphere.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimate::{check_epsilon, resolution_scale, ErrorMode, NormEstimate, Witness};
use crate::exec::{self, Exec};
use crate::grid::{build_hemisphere_grid, resolution_for_error, unit_line, ProductPointSet, UnitPointSet};
use crate::linalg::{sigma_max, top_pair_unchecked};
use crate::tensor::{kron_all, norm, to_vec, Tensor3, TensorD};

/// Lower bound from the leading singular pairs of the slices: the best of
/// `‖T(•, y_i, z_i)‖` over the top pairs `(y_i, z_i)` of each `T_i`, with
/// the attaining witness.
pub fn lower_bound_alpha1(t: &Tensor3) -> (f64, Witness) {
    let (l, _, _) = t.dims();
    let mut best: Option<(f64, Witness)> = None;
    for i in 0..l {
        let (_, y, z) = top_pair_unchecked(&t.slice(i));
        let y = to_vec(&y);
        let z = to_vec(&z);
        let u = t.contract_last_two(&y, &z).expect("pair has slice dims");
        let val = norm(&u);
        if best.as_ref().is_none_or(|b| val > b.0) {
            let x = if val > 0.0 {
                u.iter().map(|v| v / val).collect()
            } else {
                let mut e = vec![0.0; l];
                e[i] = 1.0;
                e
            };
            best = Some((val, Witness { x, y, z, leading: None }));
        }
    }
    best.expect("tensor has at least one slice")
}

/// `min(‖Mat(T)‖_σ, (Σ_i ‖T_i‖_σ²)^{1/2})`.
pub fn upper_bound_alpha2(t: &Tensor3) -> f64 {
    let (l, _, _) = t.dims();
    let flat = sigma_max(&t.flatten());
    let slices: f64 = (0..l).map(|i| sigma_max(&t.slice(i)).powi(2)).sum::<f64>().sqrt();
    flat.min(slices)
}

/// `‖T(x,•,•)‖_σ` for every point, reduced to the first maximizer.
pub(crate) fn grid_max(t: &Tensor3, points: &UnitPointSet, exec: Exec) -> Option<(usize, f64)> {
    let (_, m, n) = t.dims();
    exec::argmax(exec, points.len(), |p| {
        let mut buf = vec![0.0; m * n];
        t.contract_first_into(points.point(p), &mut buf);
        sigma_max(&DMatrix::from_column_slice(n, m, &buf))
    })
}

fn product_grid_max(t: &Tensor3, points: &ProductPointSet, exec: Exec) -> Option<(usize, f64)> {
    let (_, m, n) = t.dims();
    exec::argmax(exec, points.len(), |p| {
        let mut buf = vec![0.0; m * n];
        t.contract_first_into(&points.kron(p), &mut buf);
        sigma_max(&DMatrix::from_column_slice(n, m, &buf))
    })
}

fn witness_at(t: &Tensor3, x: &[f64]) -> (f64, Witness) {
    let c = t.contract_first(x).expect("point has tensor dim");
    let (s, y, z) = top_pair_unchecked(&c);
    (s, Witness { x: x.to_vec(), y: to_vec(&y), z: to_vec(&z), leading: None })
}

/// Rigorous bracket from a grid value, the grid's covering coefficient and
/// an a-priori upper bound.
fn bracket(value: f64, theta: Option<f64>, bound: f64) -> (f64, bool) {
    match theta {
        Some(th) if th > 0.0 => {
            let upper = (value / th).min(value + (1.0 - th) * bound).min(bound);
            (upper.max(value), true)
        }
        _ => (bound.max(value), false),
    }
}

fn finish(mut est: NormEstimate, rigorous: bool, started: Instant) -> NormEstimate {
    est.certified = rigorous && est.gap_within(est.epsilon);
    est.seconds = started.elapsed().as_secs_f64();
    est
}

/// Grid approximation of `‖T‖_σ` with the default execution policy.
///
/// Without an explicit `point_set` the hemisphere grid is sized from `ε`
/// (scaled by the flattening bound in absolute mode). The estimate's
/// `value` and `lower` are the grid maximum. Random point sets carry no
/// covering coefficient and produce uncertified estimates.
pub fn spectral_norm_fptas(
    t: &Tensor3,
    epsilon: f64,
    mode: ErrorMode,
    point_set: Option<&UnitPointSet>,
) -> Result<NormEstimate> {
    spectral_norm_fptas_with(t, epsilon, mode, point_set, Exec::default())
}

pub fn spectral_norm_fptas_with(
    t: &Tensor3,
    epsilon: f64,
    mode: ErrorMode,
    point_set: Option<&UnitPointSet>,
    exec: Exec,
) -> Result<NormEstimate> {
    check_epsilon(epsilon)?;
    let started = Instant::now();
    let (l, _, _) = t.dims();
    let mut est = NormEstimate {
        value: 0.0,
        lower: 0.0,
        upper: 0.0,
        epsilon,
        mode,
        certified: false,
        q: None,
        q_per_mode: None,
        grid_points: 0,
        witness: None,
        seconds: 0.0,
    };
    if l == 1 {
        let (s, w) = witness_at(t, &[1.0]);
        est.value = s;
        est.lower = s;
        est.upper = s;
        est.witness = Some(w);
        return Ok(finish(est, true, started));
    }

    let bound = upper_bound_alpha2(t);
    let built;
    let points = match point_set {
        Some(p) => {
            if p.dim() != l {
                return Err(Error::DimensionMismatch(format!(
                    "point set of dimension {} for a tensor with first mode {l}",
                    p.dim()
                )));
            }
            p
        }
        None => {
            built = spectral_grid_for(t, epsilon, mode)?;
            &built
        }
    };
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    est.q = points.spec().and_then(|s| s.resolution());
    est.grid_points = points.len();

    let (idx, value) = grid_max(t, points, exec).expect("nonempty point set");
    let (_, w) = witness_at(t, points.point(idx));
    let (upper, rigorous) = bracket(value, points.theta(), bound);
    est.value = value;
    est.lower = value;
    est.upper = upper;
    est.witness = Some(w);
    Ok(finish(est, rigorous, started))
}

/// Hemisphere grid used by [`spectral_norm_fptas`] when no point set is
/// given. Requires a first mode of at least two.
pub fn spectral_grid_for(t: &Tensor3, epsilon: f64, mode: ErrorMode) -> Result<UnitPointSet> {
    check_epsilon(epsilon)?;
    let (l, _, _) = t.dims();
    let q = resolution_for_error(l, epsilon, resolution_scale(mode, upper_bound_alpha2(t)))?;
    build_hemisphere_grid(l, q)
}

/// Best rank-one fit at an estimate's witness.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneFit {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// `‖T − λ x⊗y⊗z‖_F`.
    pub residual: f64,
    /// `|residual² − (‖T‖_F² − λ²)| / ‖T‖_F²`.
    pub identity_gap: f64,
}

pub fn best_rank_one(t: &Tensor3, est: &NormEstimate) -> Result<RankOneFit> {
    let w = est.witness.as_ref().ok_or(Error::MissingWitness)?;
    let lambda = t.evaluate(&w.x, &w.y, &w.z)?;
    let (l, m, n) = t.dims();
    let approx = Tensor3::from_fn(l, m, n, |i, j, k| lambda * w.x[i] * w.y[j] * w.z[k]);
    let residual = t.sub(&approx)?.frobenius_norm();
    let fro2 = t.frobenius_norm().powi(2);
    let identity_gap = if fro2 > 0.0 {
        (residual * residual - (fro2 - lambda * lambda)).abs() / fro2
    } else {
        0.0
    };
    Ok(RankOneFit { lambda, x: w.x.clone(), y: w.y.clone(), z: w.z.clone(), residual, identity_gap })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolishResult {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub iterations: usize,
    /// Objective after each half-step, starting with the input value.
    pub history: Vec<f64>,
}

/// Alternating maximization of `T(x, y, z)` from unit starting vectors:
/// `x ∝ T(•, y, z)`, then `(y, z)` the top singular pair of `T(x, •, •)`.
/// Stops when the relative objective change drops below `tol`.
pub fn polish_rank_one(
    t: &Tensor3,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<PolishResult> {
    let start = t.evaluate(x, y, z)?;
    let (mut x, mut y, mut z) = (x.to_vec(), y.to_vec(), z.to_vec());
    let mut history = vec![start];
    let mut current = start;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let u = t.contract_last_two(&y, &z)?;
        let nu = norm(&u);
        if nu == 0.0 {
            break;
        }
        let x_new: Vec<f64> = u.iter().map(|v| v / nu).collect();
        history.push(nu);
        let c = t.contract_first(&x_new)?;
        let (s, yy, zz) = top_pair_unchecked(&c);
        history.push(s);
        let improved = s >= current;
        if improved {
            x = x_new;
            y = to_vec(&yy);
            z = to_vec(&zz);
        }
        let change = (s - current).abs() / current.abs().max(f64::MIN_POSITIVE);
        current = current.max(s);
        if !improved || change < tol {
            break;
        }
    }
    Ok(PolishResult { lambda: current, x, y, z, iterations, history })
}

fn leading_grid(dim: usize, epsilon: f64, scale: f64) -> Result<(UnitPointSet, usize)> {
    if dim == 1 {
        return Ok((unit_line(), 1));
    }
    let q = resolution_for_error(dim, epsilon, scale)?;
    Ok((build_hemisphere_grid(dim, q)?, q))
}

/// Mode order placing the two largest dimensions last (stable otherwise).
pub(crate) fn matrix_modes_last(dims: &[usize]) -> Vec<usize> {
    let d = dims.len();
    let mut by_size: Vec<usize> = (0..d).collect();
    by_size.sort_by(|&a, &b| dims[b].cmp(&dims[a]).then(b.cmp(&a)));
    let mut last_two = [by_size[0], by_size[1]];
    last_two.sort();
    let mut perm: Vec<usize> = (0..d).filter(|k| !last_two.contains(k)).collect();
    perm.extend(last_two);
    perm
}

/// Reordered tensor, its grouped `L × m × n` view and the product grid over
/// the leading modes sized so that `1 − Πθ_k ≤ ε/scale`.
pub(crate) struct LeadingGrid {
    pub perm: Vec<usize>,
    pub grouped: Tensor3,
    pub product: ProductPointSet,
    pub q_per_mode: Vec<usize>,
}

pub(crate) fn leading_grid_for(t: &TensorD, epsilon: f64, scale_of: impl Fn(&Tensor3) -> f64, mode: ErrorMode) -> Result<LeadingGrid> {
    let perm = matrix_modes_last(t.dims());
    let permuted = t.permuted(&perm)?;
    let grouped = permuted.group_leading();
    let d = t.order();
    let lead = &permuted.dims()[..d - 2];
    let nontrivial = lead.iter().filter(|&&n| n > 1).count().max(1);
    let scale = resolution_scale(mode, scale_of(&grouped));
    let share = epsilon / nontrivial as f64;
    let mut sets = Vec::with_capacity(lead.len());
    let mut qs = Vec::with_capacity(lead.len());
    for &n in lead {
        let (s, q) = leading_grid(n, share, scale)?;
        sets.push(s);
        qs.push(q);
    }
    Ok(LeadingGrid { perm, grouped, product: ProductPointSet::new(sets)?, q_per_mode: qs })
}

/// Order-d spectral norm over a product of hemisphere grids, one per mode
/// other than the two largest.
pub fn spectral_norm_fptas_d(t: &TensorD, epsilon: f64, mode: ErrorMode) -> Result<NormEstimate> {
    spectral_norm_fptas_d_with(t, epsilon, mode, Exec::default())
}

pub fn spectral_norm_fptas_d_with(t: &TensorD, epsilon: f64, mode: ErrorMode, exec: Exec) -> Result<NormEstimate> {
    check_epsilon(epsilon)?;
    let started = Instant::now();
    let g = leading_grid_for(t, epsilon, upper_bound_alpha2, mode)?;
    let bound = upper_bound_alpha2(&g.grouped);
    let (idx, value) = product_grid_max(&g.grouped, &g.product, exec).expect("nonempty product");
    let tuple: Vec<Vec<f64>> = g.product.tuple(idx).into_iter().map(|p| p.to_vec()).collect();
    let x = kron_all(tuple.iter().map(|v| v.as_slice()));
    let (_, mut w) = witness_at(&g.grouped, &x);

    // report leading factors in the caller's mode order
    let d = t.order();
    let mut leading = vec![Vec::new(); d];
    for (k, f) in tuple.into_iter().enumerate() {
        leading[g.perm[k]] = f;
    }
    leading[g.perm[d - 2]] = w.y.clone();
    leading[g.perm[d - 1]] = w.z.clone();
    w.leading = Some(leading);

    let (upper, rigorous) = bracket(value, g.product.theta(), bound);
    let est = NormEstimate {
        value,
        lower: value,
        upper,
        epsilon,
        mode,
        certified: false,
        q: None,
        q_per_mode: Some(g.q_per_mode),
        grid_points: g.product.len(),
        witness: Some(w),
        seconds: 0.0,
    };
    Ok(finish(est, rigorous, started))
}

/// `‖T(x,•,•)‖_σ` at a single direction.
pub fn slice_combination_norm(t: &Tensor3, x: &[f64]) -> Result<f64> {
    Ok(sigma_max(&t.contract_first(x)?))
}
