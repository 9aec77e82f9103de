//! Grid relaxation of the tensor nuclear norm.
//!
//! The nuclear norm is the dual of the spectral norm,
//! `‖T‖_* = max{⟨T, Z⟩ : ‖Z‖_σ ≤ 1}`. Replacing the spectral constraint by
//! `‖Z(x,•,•)‖_σ ≤ 1` for every `x` in a grid with covering coefficient `θ`
//! gives a convex program whose optimum `p` satisfies
//! `‖T‖_* ≤ p ≤ ‖T‖_* / θ`.
//!
//! `Z` is restricted to the mode-2 and mode-3 spans of `T` (exact), then
//! the program is solved by a working-set interior-point method when the
//! reduced size allows a dense Newton system, or otherwise by ADMM on the
//! splitting `W_x = Z(x,•,•)`. The ADMM `Z` step is an `ℓ × ℓ` solve and the
//! `W_x` steps are Frobenius projections onto the spectral unit ball;
//! constraints strictly inside the ball are tracked implicitly and only
//! revisited when a Lipschitz bound on `‖Z(x,•,•)‖_σ` could exceed one.
//!
//! Either way the result carries multipliers `Λ_x`, from which a rigorous
//! upper bound and a rank-one decomposition are read off.

use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::barrier;
use crate::error::{Error, Result};
use crate::estimate::{check_epsilon, resolution_scale, ErrorMode, NormEstimate};
use crate::exec::{self, Exec, REDUCE_CHUNK};
use crate::grid::{build_hemisphere_grid, resolution_for_error, UnitPointSet};
use crate::linalg::{nuclear_unchecked, project_in_place, sigma_max, spectral_norm_tier, svd_unchecked};
use crate::spectral::leading_grid_for;
use crate::tensor::{norm, RankOneDecomposition, RankOneTerm, RankOneTermD, Tensor3, TensorD};

/// Gram matrices with a smaller eigenvalue leave the program unbounded.
pub const MIN_GRAM_EIGENVALUE: f64 = 1e-10;
/// Decomposition terms below this fraction of the total weight are dropped.
pub const DROP_TOL: f64 = 1e-8;
/// Largest stationarity residual accepted for decomposition extraction.
pub const MAX_EXTRACTION_RESIDUAL: f64 = 1e-6;

/// Bounds tried, in order, before falling back to a full SVD.
const NORM_TIERS: [f64; 5] = [0.5, 0.8, 0.95, 0.99, 1.0];
/// Steps inside the ball before an explicit point returns to implicit
/// tracking; switching weights more eagerly can cycle.
const DEMOTE_AFTER: usize = 50;
const BALANCE_EVERY: usize = 10;
const BALANCE_RATIO: f64 = 10.0;
const BALANCE_FACTOR: f64 = 2.0;
/// Penalty adaptation only runs during the warm phase.
const BALANCE_UNTIL: usize = 1000;

/// Largest `ℓ m n` solved by the dense interior-point method under
/// [`SolverMethod::Auto`].
pub const DENSE_MAX_VARS: usize = 2000;
/// Duality-gap target of the interior-point method relative to `tol`.
const BARRIER_GAP_FRACTION: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    /// Interior point up to [`DENSE_MAX_VARS`] variables, ADMM beyond.
    #[default]
    Auto,
    /// Working-set interior-point method with a dense Newton system.
    Barrier,
    /// First-order splitting; memory and time per step linear in the size.
    Admm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Primal residual target relative to `1 + ‖Z‖_F`.
    pub tol: f64,
    /// Target for `‖T − Σ_x x⊗Λ_x‖_F / ‖T‖_F`.
    pub stationarity_tol: f64,
    pub max_iters: usize,
    /// Initial penalty; `None` picks `ℓ / |points|`.
    pub rho0: Option<f64>,
    /// Penalty weight of constraints currently inside the ball, relative to
    /// the others.
    pub implicit_weight: f64,
    pub exec: Exec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { method: SolverMethod::Auto, tol: 1e-7, stationarity_tol: 1e-7, max_iters: 50_000, rho0: None, implicit_weight: 1e-3, exec: Exec::default() }
    }
}

/// Converged relaxation.
#[derive(Debug, Clone)]
pub struct Relaxation {
    /// Solver iterate; may violate constraints by `feas_residual`.
    pub z: Tensor3,
    /// `⟨T, Z⟩ / max(1, max_x ‖Z(x,•,•)‖_σ)`, the objective at a feasible point.
    pub value: f64,
    /// `(point index, Λ_x)` for every constraint with a nonzero multiplier.
    pub duals: Vec<(usize, DMatrix<f64>)>,
    pub iterations: usize,
    pub primal_residual: f64,
    /// `‖T − Σ_x x⊗Λ_x‖_F / ‖T‖_F`.
    pub stationarity_residual: f64,
    /// `max(0, max_x ‖Z(x,•,•)‖_σ − 1)` over all points.
    pub feas_residual: f64,
    /// `Σ_x ‖Λ_x‖_* + Σ_i ‖R_i‖_*` with `R = T − Σ_x x⊗Λ_x`; an upper bound
    /// on `‖T‖_*` for any multipliers.
    pub dual_bound: f64,
    /// Full SVDs performed during the solve.
    pub svd_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearCertificate<D = RankOneDecomposition> {
    pub primal_value: f64,
    pub scaled_value: f64,
    /// Covering coefficient of the constraint set; absent for random sets.
    pub theta: Option<f64>,
    pub dual_bound: f64,
    pub feas_residual: f64,
    pub stationarity_residual: f64,
    pub solver_iterations: usize,
    /// Wall-clock seconds in the convex solve.
    #[serde(default)]
    pub solve_seconds: f64,
    /// Wall-clock seconds extracting the decomposition.
    #[serde(default)]
    pub extraction_seconds: f64,
    #[serde(rename = "decomposition")]
    pub dual_decomposition: D,
}

/// Estimate plus certificate, serialized as one flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearReport<D = RankOneDecomposition> {
    #[serde(flatten)]
    pub estimate: NormEstimate,
    #[serde(flatten)]
    pub certificate: NuclearCertificate<D>,
}

impl<D: Serialize> NuclearReport<D> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `Σ_i ‖T_i‖_*`.
pub fn nuclear_upper_bound_slices(t: &Tensor3) -> f64 {
    (0..t.dims().0).map(|i| nuclear_unchecked(&t.slice(i))).sum()
}

/// `‖Mat(T)‖_*`.
pub fn nuclear_lower_bound_flatten(t: &Tensor3) -> f64 {
    nuclear_unchecked(&t.flatten())
}

#[derive(Debug, Clone, Default)]
struct PointState {
    /// Upper bound on `‖Z(x,•,•)‖_σ` when `drift` was `drift_at`.
    bound: f64,
    drift_at: f64,
    /// Empty for implicit points (`W_x = Z(x,•,•)`, `U_x = 0`).
    w: Vec<f64>,
    u: Vec<f64>,
    u_zero: bool,
    /// Consecutive steps an explicit point has spent inside the ball.
    inside: usize,
}

#[derive(Debug, Default)]
struct Partial {
    primal: f64,
    svds: usize,
}

/// `out = Σ_i x_i Z_i` for the flat `ℓ × (m n)` buffer `z`.
fn combine(z: &[f64], x: &[f64], out: &mut [f64]) {
    let block = out.len();
    out.fill(0.0);
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(&z[i * block..(i + 1) * block]) {
            *o += xi * v;
        }
    }
}

/// `acc += x ⊗ c`.
fn scatter(acc: &mut [f64], x: &[f64], c: &[f64]) {
    let block = c.len();
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (a, v) in acc[i * block..(i + 1) * block].iter_mut().zip(c) {
            *a += xi * v;
        }
    }
}

/// `out_i = Σ_j g_ij z_j` on the first mode.
fn apply_mode1(g: &[f64], l: usize, z: &[f64], out: &mut [f64]) {
    let block = z.len() / l;
    out.fill(0.0);
    for i in 0..l {
        for j in 0..l {
            let gij = g[i * l + j];
            if gij == 0.0 {
                continue;
            }
            let (dst, src) = (i * block, j * block);
            for e in 0..block {
                out[dst + e] += gij * z[src + e];
            }
        }
    }
}

fn gram_of(points: &UnitPointSet) -> Vec<f64> {
    let l = points.dim();
    let mut g = vec![0.0; l * l];
    for x in points.iter() {
        for i in 0..l {
            for j in 0..l {
                g[i * l + j] += x[i] * x[j];
            }
        }
    }
    g
}

fn checked_gram(points: &UnitPointSet) -> Result<Vec<f64>> {
    let l = points.dim();
    let g = gram_of(points);
    let min_eig = SymmetricEigen::new(DMatrix::from_row_slice(l, l, &g)).eigenvalues.min();
    if !(min_eig >= MIN_GRAM_EIGENVALUE) {
        return Err(Error::Unbounded { dim: l, min_eigenvalue: min_eig });
    }
    Ok(g)
}

/// One W/U step over a chunk of points at the current `Z`.
#[allow(clippy::too_many_arguments)]
fn w_step(
    states: &mut [PointState],
    first: usize,
    points: &UnitPointSet,
    z: &[f64],
    dims: (usize, usize, usize),
    drift: f64,
) -> Partial {
    let (_, m, n) = dims;
    let block = m * n;
    let k = m.min(n);
    let mut part = Partial::default();
    let mut buf = vec![0.0; block];
    let mut scratch = vec![0.0; 2 * k * k];
    let mut az = vec![0.0; block];
    for (off, st) in states.iter_mut().enumerate() {
        let x = points.point(first + off);
        if st.w.is_empty() {
            if st.bound + (drift - st.drift_at) <= 1.0 - 1e-12 {
                continue;
            }
            combine(z, x, &mut buf);
            if let Some(b) = spectral_norm_tier(&buf, n, m, &NORM_TIERS, &mut scratch) {
                st.bound = b;
                st.drift_at = drift;
                continue;
            }
            // leaves the ball: W = Proj(AZ), U = AZ − W
            let mut w = buf.clone();
            project_in_place(&mut w, n, m);
            part.svds += 1;
            let u: Vec<f64> = buf.iter().zip(&w).map(|(a, b)| a - b).collect();
            part.primal = part.primal.max(norm(&u));
            st.u_zero = u.iter().all(|&v| v == 0.0);
            st.w = w;
            st.u = u;
        } else {
            combine(z, x, &mut az);
            for ((b, a), u) in buf.iter_mut().zip(&az).zip(&st.u) {
                *b = a + u;
            }
            if let Some(b) = spectral_norm_tier(&buf, n, m, &NORM_TIERS, &mut scratch) {
                if st.u_zero {
                    st.inside += 1;
                }
                if st.u_zero && st.inside >= DEMOTE_AFTER {
                    // W = AZ exactly: back to implicit tracking
                    st.bound = b;
                    st.drift_at = drift;
                    st.w = Vec::new();
                    st.u = Vec::new();
                    continue;
                }
                if !st.u_zero {
                    part.primal = part.primal.max(norm(&st.u));
                    st.inside = 0;
                }
                st.w.copy_from_slice(&buf);
                st.u.fill(0.0);
                st.u_zero = true;
            } else {
                st.inside = 0;
                st.w.copy_from_slice(&buf);
                project_in_place(&mut st.w, n, m);
                part.svds += 1;
                let mut r2 = 0.0;
                let mut all_zero = true;
                for e in 0..block {
                    let u = buf[e] - st.w[e];
                    st.u[e] = u;
                    all_zero &= u == 0.0;
                    let r = st.w[e] - az[e];
                    r2 += r * r;
                }
                st.u_zero = all_zero;
                part.primal = part.primal.max(r2.sqrt());
            }
        }
    }
    part
}

/// Largest `‖Z(x,•,•)‖_σ` over all points, or anything `≤ 1` when every
/// constraint holds.
fn max_constraint_norm(z: &[f64], dims: (usize, usize, usize), points: &UnitPointSet, exec: Exec) -> f64 {
    let (_, m, n) = dims;
    let k = m.min(n);
    exec::argmax(exec, points.len(), |p| {
        let mut buf = vec![0.0; m * n];
        let mut scratch = vec![0.0; 2 * k * k];
        combine(z, points.point(p), &mut buf);
        if spectral_norm_tier(&buf, n, m, &[1.0], &mut scratch).is_some() {
            0.0
        } else {
            sigma_max(&DMatrix::from_column_slice(n, m, &buf))
        }
    })
    .map_or(0.0, |(_, v)| v)
}

/// ADMM iterate. Implicit points carry no storage; their `W_x` is
/// `Z(x,•,•)`, so the `Z` buffer doubles as their state.
#[derive(Clone)]
struct Admm<'a> {
    points: &'a UnitPointSet,
    dims: (usize, usize, usize),
    g: Vec<f64>,
    /// Penalty weight of implicit points relative to explicit ones.
    kappa: f64,
    tn: Vec<f64>,
    rho: f64,
    z: Vec<f64>,
    states: Vec<PointState>,
    /// Accumulated `‖ΔZ‖_F`, a Lipschitz bound on every `‖ΔZ(x,•,•)‖_σ`.
    drift: f64,
    sum_wu: Vec<f64>,
    sum_u: Vec<f64>,
    gram_active: Vec<f64>,
    explicit: Vec<usize>,
    primal: f64,
    stationarity: f64,
    svd_count: usize,
}

impl<'a> Admm<'a> {
    fn new(tn: Vec<f64>, points: &'a UnitPointSet, dims: (usize, usize, usize), g: Vec<f64>, kappa: f64, rho: f64) -> Self {
        let (l, m, n) = dims;
        let total = l * m * n;
        Admm {
            points,
            dims,
            g,
            kappa,
            tn,
            rho,
            z: vec![0.0; total],
            states: vec![PointState::default(); points.len()],
            drift: 0.0,
            sum_wu: vec![0.0; total],
            sum_u: vec![0.0; total],
            gram_active: vec![0.0; l * l],
            explicit: Vec::new(),
            primal: f64::INFINITY,
            stationarity: f64::INFINITY,
            svd_count: 0,
        }
    }

    fn total(&self) -> usize {
        self.z.len()
    }

    /// W / U step at the current `(Z, U)` followed by the Z step. Returns
    /// whether the explicit set changed.
    fn step(&mut self, exec: Exec) -> bool {
        let (points, dims, drift) = (self.points, self.dims, self.drift);
        let z = &self.z;
        let parts = exec::map_chunks_mut(exec, &mut self.states, REDUCE_CHUNK, |c, chunk| {
            w_step(chunk, c * REDUCE_CHUNK, points, z, dims, drift)
        });
        self.primal = 0.0;
        for p in &parts {
            self.svd_count += p.svds;
            self.primal = self.primal.max(p.primal);
        }
        self.refresh_sums();
        let explicit: Vec<usize> = self.explicit_indices();
        let changed = explicit != self.explicit;
        self.explicit = explicit;

        // (κ G_implicit + G_explicit) Z⁺ = T/ρ + κ G_implicit Z + Σ_explicit x⊗(W − U)
        let l = dims.0;
        let total = self.total();
        let kappa = self.kappa;
        let g_imp: Vec<f64> = self.g.iter().zip(&self.gram_active).map(|(a, b)| kappa * (a - b)).collect();
        let mut rhs = vec![0.0; total];
        apply_mode1(&g_imp, l, &self.z, &mut rhs);
        for e in 0..total {
            rhs[e] += self.tn[e] / self.rho + self.sum_wu[e];
        }
        let g_eff: Vec<f64> = g_imp.iter().zip(&self.gram_active).map(|(a, b)| a + b).collect();
        let ginv = DMatrix::from_row_slice(l, l, &g_eff)
            .cholesky()
            .expect("weighted Gram matrix stays positive definite")
            .inverse();
        let ginv: Vec<f64> = (0..l * l).map(|e| ginv[(e / l, e % l)]).collect();
        let mut z_next = vec![0.0; total];
        apply_mode1(&ginv, l, &rhs, &mut z_next);
        self.set_z(z_next);
        changed
    }

    fn set_z(&mut self, z: Vec<f64>) {
        let step: f64 = self.z.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        self.drift += step;
        self.z = z;
    }

    fn explicit_indices(&self) -> Vec<usize> {
        (0..self.states.len()).filter(|&p| !self.states[p].w.is_empty()).collect()
    }

    /// Recomputes the explicit-point sums (in index order) and the
    /// stationarity residual.
    fn refresh_sums(&mut self) {
        let l = self.dims.0;
        self.sum_wu.fill(0.0);
        self.sum_u.fill(0.0);
        self.gram_active.fill(0.0);
        let mut diff = vec![0.0; self.dims.1 * self.dims.2];
        for (p, st) in self.states.iter().enumerate() {
            if st.w.is_empty() {
                continue;
            }
            let x = self.points.point(p);
            for ((d, w), u) in diff.iter_mut().zip(&st.w).zip(&st.u) {
                *d = w - u;
            }
            scatter(&mut self.sum_wu, x, &diff);
            scatter(&mut self.sum_u, x, &st.u);
            for i in 0..l {
                for j in 0..l {
                    self.gram_active[i * l + j] += x[i] * x[j];
                }
            }
        }
        let rho = self.rho;
        self.stationarity = self
            .tn
            .iter()
            .zip(&self.sum_u)
            .map(|(t, u)| (t - rho * u).powi(2))
            .sum::<f64>()
            .sqrt();
    }

    fn primal_rel(&self) -> f64 {
        self.primal / (1.0 + norm(&self.z))
    }

    fn rescale_penalty(&mut self, factor: f64) {
        self.rho *= factor;
        for st in self.states.iter_mut().filter(|s| !s.w.is_empty()) {
            st.u.iter_mut().for_each(|v| *v /= factor);
        }
    }
}

/// Solver output in normalized units on the (possibly compressed) tensor.
struct CoreSolution {
    z: Vec<f64>,
    duals: Vec<(usize, Vec<f64>)>,
    iterations: usize,
    primal_residual: f64,
    svd_count: usize,
}

/// Solves `max ⟨T, Z⟩ s.t. ‖Z(x,•,•)‖_σ ≤ 1` for all `x` in `points`.
///
/// `Z` is first restricted to the mode-2 and mode-3 spans of `T`, which
/// leaves the objective unchanged and can only lower the constraint norms.
pub fn solve_relaxation(t: &Tensor3, points: &UnitPointSet, cfg: &SolverConfig) -> Result<Relaxation> {
    let dims = t.dims();
    let (l, m, n) = dims;
    if points.dim() != l {
        return Err(Error::DimensionMismatch(format!(
            "point set of dimension {} for a tensor with first mode {l}",
            points.dim()
        )));
    }
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if !t.values().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let g = checked_gram(points)?;
    let scale = t.frobenius_norm();
    if scale == 0.0 {
        return Ok(Relaxation {
            z: Tensor3::zeros(l, m, n),
            value: 0.0,
            duals: Vec::new(),
            iterations: 0,
            primal_residual: 0.0,
            stationarity_residual: 0.0,
            feas_residual: 0.0,
            dual_bound: 0.0,
            svd_count: 0,
        });
    }
    let (u, v) = mode_bases(t);
    let compressed = (u.ncols() < m || v.ncols() < n).then(|| compress(t, &u, &v));
    let work = compressed.as_ref().unwrap_or(t);
    let wdims = work.dims();
    let tn: Vec<f64> = work.values().iter().map(|x| x / scale).collect();
    let dense = match cfg.method {
        SolverMethod::Barrier => true,
        SolverMethod::Admm => false,
        SolverMethod::Auto => wdims.0 * wdims.1 * wdims.2 <= DENSE_MAX_VARS,
    };
    let barrier_result = dense.then(|| {
        barrier::solve(&tn, wdims, points, BARRIER_GAP_FRACTION * cfg.tol, cfg.tol, cfg.stationarity_tol, cfg.exec)
    });
    let core = match barrier_result {
        Some(Ok(sol)) => {
            CoreSolution { z: sol.z, duals: sol.duals, iterations: sol.newton_steps, primal_residual: 0.0, svd_count: sol.svd_count }
        }
        // under Auto a numerical breakdown falls back to the first-order method
        Some(Err(Error::Numerical(_))) if cfg.method == SolverMethod::Auto => solve_admm(tn, wdims, points, g, cfg)?,
        Some(Err(e)) => return Err(e),
        None => solve_admm(tn, wdims, points, g, cfg)?,
    };
    let (z, duals) = if compressed.is_some() {
        let z = expand_blocks(&core.z, &u, &v);
        let duals = core.duals.into_iter().map(|(p, d)| (p, expand_blocks(&d, &u, &v))).collect();
        (z, duals)
    } else {
        (core.z, core.duals)
    };
    Ok(finish(t, points, scale, &z, duals, core.iterations, core.primal_residual, cfg.exec, core.svd_count))
}

/// Singular values below this fraction of the largest are treated as zero
/// when restricting to the mode spans.
const SPAN_TOL: f64 = 1e-13;

/// Orthonormal bases of the column and row spans of the slices `T_i`.
fn mode_bases(t: &Tensor3) -> (DMatrix<f64>, DMatrix<f64>) {
    let slices = t.slices();
    let (m, n) = slices[0].shape();
    let cols = DMatrix::from_fn(m, n * slices.len(), |r, c| slices[c / n][(r, c % n)]);
    let rows = DMatrix::from_fn(n, m * slices.len(), |r, c| slices[c / m][(c % m, r)]);
    (span_basis(cols), span_basis(rows))
}

fn span_basis(a: DMatrix<f64>) -> DMatrix<f64> {
    let dec = svd_unchecked(a);
    let top = dec.singular_values.first().copied().unwrap_or(0.0);
    let rank = dec.singular_values.iter().take_while(|&&s| s > SPAN_TOL * top).count().max(1);
    dec.left_vectors.columns(0, rank).into_owned()
}

/// Slices `Uᵀ T_i V`.
fn compress(t: &Tensor3, u: &DMatrix<f64>, v: &DMatrix<f64>) -> Tensor3 {
    let slices: Vec<DMatrix<f64>> = t.slices().iter().map(|s| u.transpose() * s * v).collect();
    Tensor3::from_slices(&slices).expect("slices share a shape")
}

/// `U X_i Vᵀ` for each row-major block `X_i` of `flat`.
fn expand_blocks(flat: &[f64], u: &DMatrix<f64>, v: &DMatrix<f64>) -> Vec<f64> {
    let (mc, nc) = (u.ncols(), v.ncols());
    let (m, n) = (u.nrows(), v.nrows());
    let mut out = Vec::with_capacity(flat.len() / (mc * nc) * m * n);
    for block in flat.chunks(mc * nc) {
        let full = u * DMatrix::from_row_slice(mc, nc, block) * v.transpose();
        for j in 0..m {
            for k in 0..n {
                out.push(full[(j, k)]);
            }
        }
    }
    out
}

fn solve_admm(tn: Vec<f64>, dims: (usize, usize, usize), points: &UnitPointSet, g: Vec<f64>, cfg: &SolverConfig) -> Result<CoreSolution> {
    let l = dims.0;
    let kappa = cfg.implicit_weight.clamp(1e-12, 1.0);
    let rho = cfg.rho0.unwrap_or(l as f64 / points.len() as f64) / kappa;
    let mut admm = Admm::new(tn, points, dims, g, kappa, rho);
    admm.step(cfg.exec);
    for iter in 1..=cfg.max_iters {
        if admm.primal_rel() <= cfg.tol && admm.stationarity <= cfg.stationarity_tol {
            let duals = admm
                .states
                .iter()
                .enumerate()
                .filter(|(_, s)| !s.w.is_empty() && !s.u_zero)
                .map(|(p, s)| (p, s.u.iter().map(|u| u * admm.rho).collect()))
                .collect();
            let primal_residual = admm.primal_rel();
            return Ok(CoreSolution { z: admm.z, duals, iterations: iter, primal_residual, svd_count: admm.svd_count });
        }
        if iter % BALANCE_EVERY == 0 && iter <= BALANCE_UNTIL {
            let (r, d) = (admm.primal_rel(), admm.stationarity);
            if r > BALANCE_RATIO * d {
                admm.rescale_penalty(BALANCE_FACTOR);
            } else if d > BALANCE_RATIO * r {
                admm.rescale_penalty(1.0 / BALANCE_FACTOR);
            }
        }
        admm.step(cfg.exec);
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iters,
        primal_residual: admm.primal_rel(),
        stationarity_residual: admm.stationarity,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    t: &Tensor3,
    points: &UnitPointSet,
    scale: f64,
    z: &[f64],
    duals_n: Vec<(usize, Vec<f64>)>,
    iterations: usize,
    primal_residual: f64,
    exec: Exec,
    svd_count: usize,
) -> Relaxation {
    let (l, m, n) = t.dims();
    // R = T − Σ x⊗Λ_x, evaluated in original units
    let mut resid = t.values().to_vec();
    let mut duals = Vec::new();
    for (p, lam) in duals_n {
        let vals: Vec<f64> = lam.iter().map(|v| v * scale).collect();
        let neg: Vec<f64> = vals.iter().map(|v| -v).collect();
        scatter(&mut resid, points.point(p), &neg);
        duals.push((p, DMatrix::from_row_slice(m, n, &vals)));
    }
    let stationarity_residual = norm(&resid) / scale;
    let resid_t = Tensor3::new([l, m, n], resid).expect("dims match");
    let dual_bound = duals.iter().map(|(_, lam)| nuclear_unchecked(lam)).sum::<f64>()
        + nuclear_upper_bound_slices(&resid_t);

    let max_norm = max_constraint_norm(z, (l, m, n), points, exec);
    let shrink = max_norm.max(1.0);
    let inner: f64 = t.values().iter().zip(z).map(|(a, b)| a * b).sum();
    Relaxation {
        z: Tensor3::new([l, m, n], z.to_vec()).expect("dims match"),
        value: inner / shrink,
        duals,
        iterations,
        primal_residual,
        stationarity_residual,
        feas_residual: (max_norm - 1.0).max(0.0),
        dual_bound,
        svd_count,
    }
}

/// Rank-one terms `(σ_j, x, u_j, v_j)` from the SVD of every multiplier,
/// dropping weights below `DROP_TOL` of the total.
pub fn extract_nuclear_decomposition(relax: &Relaxation, points: &UnitPointSet) -> Result<RankOneDecomposition> {
    let terms = extract_indexed(relax, points)?.into_iter().map(|(_, t)| t).collect();
    Ok(RankOneDecomposition { terms })
}

fn extract_indexed(relax: &Relaxation, points: &UnitPointSet) -> Result<Vec<(usize, RankOneTerm)>> {
    if relax.stationarity_residual > MAX_EXTRACTION_RESIDUAL {
        return Err(Error::StationarityTooLarge {
            residual: relax.stationarity_residual,
            limit: MAX_EXTRACTION_RESIDUAL,
        });
    }
    let mut terms = Vec::new();
    for (p, lam) in &relax.duals {
        let x = points.point(*p);
        let dec = svd_unchecked(lam.clone());
        for (j, &s) in dec.singular_values.iter().enumerate() {
            if s <= 0.0 {
                break;
            }
            terms.push((
                *p,
                RankOneTerm {
                    weight: s,
                    x: x.to_vec(),
                    y: dec.left_vectors.column(j).iter().copied().collect(),
                    z: dec.right_vectors.column(j).iter().copied().collect(),
                },
            ));
        }
    }
    let total: f64 = terms.iter().map(|(_, t)| t.weight).sum();
    terms.retain(|(_, t)| t.weight >= DROP_TOL * total);
    Ok(terms)
}

fn estimate_from(
    relax: &Relaxation,
    slices_bound: f64,
    theta: Option<f64>,
    epsilon: f64,
    mode: ErrorMode,
) -> (NormEstimate, f64) {
    let primal = relax.value;
    let (value, rigorous) = match theta {
        Some(th) if th > 0.0 => (th * primal, true),
        _ => (primal, false),
    };
    let upper = relax.dual_bound.min(slices_bound).max(value);
    let est = NormEstimate {
        value,
        lower: value,
        upper,
        epsilon,
        mode,
        certified: false,
        q: None,
        q_per_mode: None,
        grid_points: 0,
        witness: None,
        seconds: 0.0,
    };
    let certified = rigorous && est.gap_within(epsilon);
    (NormEstimate { certified, ..est }, value)
}

/// Grid approximation of `‖T‖_*` with the default solver settings.
///
/// `value = lower = θ · primal_value`, a certified lower bound. `upper` is
/// the smaller of the multiplier bound and `Σ_i ‖T_i‖_*`, both valid for
/// any multipliers. Random point sets carry no `θ`: the value is then the
/// relaxation optimum and the estimate is uncertified.
pub fn nuclear_norm_fptas(
    t: &Tensor3,
    epsilon: f64,
    mode: ErrorMode,
    point_set: Option<&UnitPointSet>,
) -> Result<(NormEstimate, NuclearCertificate)> {
    nuclear_norm_fptas_with(t, epsilon, mode, point_set, &SolverConfig::default())
}

pub fn nuclear_norm_fptas_with(
    t: &Tensor3,
    epsilon: f64,
    mode: ErrorMode,
    point_set: Option<&UnitPointSet>,
    cfg: &SolverConfig,
) -> Result<(NormEstimate, NuclearCertificate)> {
    check_epsilon(epsilon)?;
    let started = Instant::now();
    let (l, _, _) = t.dims();
    let slices_bound = nuclear_upper_bound_slices(t);
    if l == 1 {
        return Ok(matrix_case(t, epsilon, mode, started));
    }
    let built;
    let points = match point_set {
        Some(p) => p,
        None => {
            built = nuclear_grid_for(t, epsilon, mode)?;
            &built
        }
    };
    let solve_started = Instant::now();
    let relax = solve_relaxation(t, points, cfg)?;
    let solve_seconds = solve_started.elapsed().as_secs_f64();
    let extract_started = Instant::now();
    let decomposition = extract_nuclear_decomposition(&relax, points)?;
    let extraction_seconds = extract_started.elapsed().as_secs_f64();
    let (mut est, scaled) = estimate_from(&relax, slices_bound, points.theta(), epsilon, mode);
    est.q = points.spec().and_then(|s| s.resolution());
    est.grid_points = points.len();
    est.seconds = started.elapsed().as_secs_f64();
    let cert = NuclearCertificate {
        primal_value: relax.value,
        scaled_value: scaled,
        theta: points.theta(),
        dual_bound: relax.dual_bound,
        feas_residual: relax.feas_residual,
        stationarity_residual: relax.stationarity_residual,
        solver_iterations: relax.iterations,
        solve_seconds,
        extraction_seconds,
        dual_decomposition: decomposition,
    };
    Ok((est, cert))
}

/// Hemisphere grid used by [`nuclear_norm_fptas`] when no point set is
/// given. Requires a first mode of at least two.
pub fn nuclear_grid_for(t: &Tensor3, epsilon: f64, mode: ErrorMode) -> Result<UnitPointSet> {
    check_epsilon(epsilon)?;
    let (l, _, _) = t.dims();
    let q = resolution_for_error(l, epsilon, resolution_scale(mode, nuclear_upper_bound_slices(t)))?;
    build_hemisphere_grid(l, q)
}

/// `ℓ = 1`: the matrix nuclear norm, with its SVD as the decomposition.
fn matrix_case(t: &Tensor3, epsilon: f64, mode: ErrorMode, started: Instant) -> (NormEstimate, NuclearCertificate) {
    let dec = svd_unchecked(t.slice(0));
    let value: f64 = dec.singular_values.iter().sum();
    let terms = dec
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > DROP_TOL * value)
        .map(|(j, &s)| RankOneTerm {
            weight: s,
            x: vec![1.0],
            y: dec.left_vectors.column(j).iter().copied().collect(),
            z: dec.right_vectors.column(j).iter().copied().collect(),
        })
        .collect();
    let est = NormEstimate {
        value,
        lower: value,
        upper: value,
        epsilon,
        mode,
        certified: true,
        q: None,
        q_per_mode: None,
        grid_points: 1,
        witness: None,
        seconds: started.elapsed().as_secs_f64(),
    };
    let cert = NuclearCertificate {
        primal_value: value,
        scaled_value: value,
        theta: Some(1.0),
        dual_bound: value,
        feas_residual: 0.0,
        stationarity_residual: 0.0,
        solver_iterations: 0,
        solve_seconds: 0.0,
        extraction_seconds: 0.0,
        dual_decomposition: RankOneDecomposition { terms },
    };
    (est, cert)
}

/// Order-d nuclear norm with constraints indexed by a product of hemisphere
/// grids over every mode except the two largest.
pub fn nuclear_norm_fptas_d(
    t: &TensorD,
    epsilon: f64,
    mode: ErrorMode,
) -> Result<(NormEstimate, NuclearCertificate<Vec<RankOneTermD>>)> {
    nuclear_norm_fptas_d_with(t, epsilon, mode, &SolverConfig::default())
}

pub fn nuclear_norm_fptas_d_with(
    t: &TensorD,
    epsilon: f64,
    mode: ErrorMode,
    cfg: &SolverConfig,
) -> Result<(NormEstimate, NuclearCertificate<Vec<RankOneTermD>>)> {
    check_epsilon(epsilon)?;
    let started = Instant::now();
    let g = leading_grid_for(t, epsilon, nuclear_upper_bound_slices, mode)?;
    let slices_bound = nuclear_upper_bound_slices(&g.grouped);
    let points = g.product.to_kron_set();
    let solve_started = Instant::now();
    let relax = solve_relaxation(&g.grouped, &points, cfg)?;
    let solve_seconds = solve_started.elapsed().as_secs_f64();
    let extract_started = Instant::now();
    let terms = extract_indexed(&relax, &points)?;

    let d = t.order();
    let mut terms_d = Vec::with_capacity(terms.len());
    for (idx, term) in &terms {
        let idx = *idx;
        let mut factors = vec![Vec::new(); d];
        for (k, f) in g.product.tuple(idx).into_iter().enumerate() {
            factors[g.perm[k]] = f.to_vec();
        }
        factors[g.perm[d - 2]] = term.y.clone();
        factors[g.perm[d - 1]] = term.z.clone();
        terms_d.push(RankOneTermD { weight: term.weight, factors });
    }
    let extraction_seconds = extract_started.elapsed().as_secs_f64();

    let (mut est, scaled) = estimate_from(&relax, slices_bound, g.product.theta(), epsilon, mode);
    est.q_per_mode = Some(g.q_per_mode);
    est.grid_points = points.len();
    est.seconds = started.elapsed().as_secs_f64();
    let cert = NuclearCertificate {
        primal_value: relax.value,
        scaled_value: scaled,
        theta: g.product.theta(),
        dual_bound: relax.dual_bound,
        feas_residual: relax.feas_residual,
        stationarity_residual: relax.stationarity_residual,
        solver_iterations: relax.iterations,
        solve_seconds,
        extraction_seconds,
        dual_decomposition: terms_d,
    };
    Ok((est, cert))
}
