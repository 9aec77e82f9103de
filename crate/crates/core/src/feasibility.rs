//! The spectral norm as a feasibility threshold of a quadratic system.
//!
//! For `α ≥ 0` the system in `(t, y, z, u)`
//!
//! ```text
//! yᵀTᵢz = t·uᵢ (i = 1..ℓ),   ‖y‖² + ‖z‖² = 2t²,   ‖u‖² = αt²,
//! t² + ‖y‖² + ‖z‖² + ‖u‖² = 3 + α
//! ```
//!
//! is solvable iff `α ≤ ‖T‖_σ²`. The last three equations force `t² = 1`,
//! so a solution is a pair `y = aŷ`, `z = bẑ` with `a² + b² = 2` and
//! `a²b²·s(ŷ, ẑ) = α`, where `s(ŷ, ẑ) = Σᵢ (ŷᵀTᵢẑ)²`. This module builds and
//! checks such candidates and bisects on `α` with a brute-force oracle. It is
//! a demonstration harness for tiny tensors, not a production algorithm.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::grid::build_hemisphere_grid;
use crate::linalg::top_pair_unchecked;
use crate::spectral::{lower_bound_alpha1, polish_rank_one, upper_bound_alpha2};
use crate::tensor::Tensor3;

/// The oracle accepts when the minimal residual norm is at most this.
pub const ORACLE_TOL: f64 = 1e-6;
/// Residual norms in `(ORACLE_TOL, DEAD_ZONE_MAX)` are inconclusive.
pub const DEAD_ZONE_MAX: f64 = 1e-3;
/// Size limits for the brute-force oracle.
pub const MAX_FIRST_DIM: usize = 3;
pub const MAX_SLICE_DIM: usize = 4;

/// Angular resolution of the `ŷ` search grid.
const SEARCH_Q: usize = 24;
/// Number of best grid points refined by alternating maximization.
const REFINE_SEEDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub t: f64,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
}

impl Candidate {
    pub fn zeros(l: usize, m: usize, n: usize) -> Self {
        Candidate { t: 0.0, y: vec![0.0; m], z: vec![0.0; n], u: vec![0.0; l] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadSystemInstance {
    pub tensor: Tensor3,
    pub alpha: f64,
    pub candidate: Candidate,
}

impl QuadSystemInstance {
    pub fn new(tensor: Tensor3, alpha: f64, candidate: Candidate) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be finite and non-negative, got {alpha}")));
        }
        let inst = QuadSystemInstance { tensor, alpha, candidate };
        inst.check_dims()?;
        Ok(inst)
    }

    /// The solution built from unit `y`, `z`: `t = 1`, `uᵢ = yᵀTᵢz` and
    /// `α = ‖u‖²`. Inputs are normalized first.
    pub fn constructive(tensor: Tensor3, y: &[f64], z: &[f64]) -> Result<Self> {
        let y = unit(y)?;
        let z = unit(z)?;
        let u = bilinear(&tensor, &y, &z)?;
        let alpha = dot(&u, &u);
        QuadSystemInstance::new(tensor, alpha, Candidate { t: 1.0, y, z, u })
    }

    fn check_dims(&self) -> Result<()> {
        let (l, m, n) = self.tensor.dims();
        let c = &self.candidate;
        if c.y.len() != m || c.z.len() != n || c.u.len() != l {
            return Err(Error::DimensionMismatch(format!(
                "candidate (y, z, u) has lengths ({}, {}, {}), tensor is {l}x{m}x{n}",
                c.y.len(),
                c.z.len(),
                c.u.len()
            )));
        }
        Ok(())
    }

    pub fn residuals(&self) -> Result<Vec<f64>> {
        residuals(self)
    }

    pub fn residual_norm(&self) -> Result<f64> {
        Ok(dot_self(&residuals(self)?).sqrt())
    }
}

/// The `ℓ + 3` residuals: `[yᵀTᵢz − t·uᵢ]ᵢ`, `‖y‖² + ‖z‖² − 2t²`,
/// `‖u‖² − αt²` and `t² + ‖y‖² + ‖z‖² + ‖u‖² − (3 + α)`.
pub fn residuals(inst: &QuadSystemInstance) -> Result<Vec<f64>> {
    inst.check_dims()?;
    let c = &inst.candidate;
    let bil = bilinear(&inst.tensor, &c.y, &c.z)?;
    let (yy, zz, uu, tt) = (dot_self(&c.y), dot_self(&c.z), dot_self(&c.u), c.t * c.t);
    let mut r: Vec<f64> = bil.iter().zip(&c.u).map(|(b, u)| b - c.t * u).collect();
    r.push(yy + zz - 2.0 * tt);
    r.push(uu - inst.alpha * tt);
    r.push(tt + yy + zz + uu - (3.0 + inst.alpha));
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Feasible,
    Infeasible,
}

/// Brute-force residual minimizer for the system above.
///
/// The search over unit `(ŷ, ẑ)` does not depend on `α`, so it runs once:
/// a hemisphere grid over `ŷ`, the exact best `ẑ` for each `ŷ` (top right
/// singular vector of `[ŷᵀTᵢ]ᵢ`), then alternating refinement of the best
/// few. For a given `α` the best candidate uses `a²b² = min(1, α/s)`.
#[derive(Debug, Clone)]
pub struct FeasibilityOracle {
    tensor: Tensor3,
    y: Vec<f64>,
    z: Vec<f64>,
    best_s: f64,
    search_points: usize,
}

impl FeasibilityOracle {
    pub fn new(tensor: &Tensor3, exec: Exec) -> Result<Self> {
        let (l, m, n) = tensor.dims();
        if l == 0 || m == 0 || n == 0 {
            return Err(Error::InvalidArgument("tensor has an empty mode".into()));
        }
        if l > MAX_FIRST_DIM || m > MAX_SLICE_DIM || n > MAX_SLICE_DIM {
            return Err(Error::InvalidArgument(format!(
                "oracle supports l <= {MAX_FIRST_DIM} and m, n <= {MAX_SLICE_DIM}, got {l}x{m}x{n}"
            )));
        }
        if tensor.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let grid = if m == 1 { None } else { Some(build_hemisphere_grid(m, SEARCH_Q)?) };
        let ys: Vec<Vec<f64>> = match &grid {
            Some(g) => g.iter().map(<[f64]>::to_vec).collect(),
            None => vec![vec![1.0]],
        };
        let scored: Vec<(f64, Vec<f64>)> = map_indexed(exec, ys.len(), |k| best_z(tensor, &ys[k]));
        let mut order: Vec<usize> = (0..ys.len()).collect();
        order.sort_by(|&a, &b| scored[b].0.total_cmp(&scored[a].0));

        let mut best = (f64::NEG_INFINITY, Vec::new(), Vec::new());
        for &k in order.iter().take(REFINE_SEEDS) {
            let (y, z) = refine(tensor, &ys[k], &scored[k].1)?;
            let s = dot_self(&bilinear(tensor, &y, &z)?);
            if s > best.0 {
                best = (s, y, z);
            }
        }
        Ok(FeasibilityOracle { tensor: tensor.clone(), y: best.1, z: best.2, best_s: best.0, search_points: ys.len() })
    }

    /// Largest `s(ŷ, ẑ)` found; a lower bound on `‖T‖_σ²`.
    pub fn best_value(&self) -> f64 {
        self.best_s
    }

    pub fn search_points(&self) -> usize {
        self.search_points
    }

    /// Residual-minimizing candidate for `α` and its residual norm.
    pub fn min_residual(&self, alpha: f64) -> Result<(f64, QuadSystemInstance)> {
        let s = self.best_s;
        let p = if s > 0.0 { (alpha / s).min(1.0) } else { 0.0 };
        // a² + b² = 2 and a²b² = p: a², b² = 1 ± sqrt(1 − p).
        let d = (1.0 - p).max(0.0).sqrt();
        let (a, b) = ((1.0 + d).sqrt(), (1.0 - d).sqrt());
        let y: Vec<f64> = self.y.iter().map(|v| a * v).collect();
        let z: Vec<f64> = self.z.iter().map(|v| b * v).collect();
        let u = bilinear(&self.tensor, &y, &z)?;
        let inst = QuadSystemInstance::new(self.tensor.clone(), alpha, Candidate { t: 1.0, y, z, u })?;
        Ok((inst.residual_norm()?, inst))
    }

    /// Accepts iff the minimal residual is at most [`ORACLE_TOL`]; residuals
    /// in the dead zone yield [`Error::Inconclusive`] with the interval of
    /// thresholds consistent with the observation.
    pub fn decide(&self, alpha: f64) -> Result<Verdict> {
        let (r, _) = self.min_residual(alpha)?;
        if r <= ORACLE_TOL {
            Ok(Verdict::Feasible)
        } else if r >= DEAD_ZONE_MAX {
            Ok(Verdict::Infeasible)
        } else {
            // The shortfall `α − s` enters the last two residuals, so the
            // norm is `√2 (α − s)`.
            Err(Error::Inconclusive { lo: alpha - r / std::f64::consts::SQRT_2, hi: alpha, residual: r })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionResult {
    /// Midpoint of the final bracket; estimates `‖T‖_σ²`.
    pub threshold: f64,
    /// Largest accepted `α`.
    pub lo: f64,
    /// Smallest rejected or inconclusive `α`.
    pub hi: f64,
    pub evaluations: usize,
    /// Accepted and rejected `α` values, in evaluation order.
    pub trace: Vec<(f64, Verdict)>,
    /// Last dead-zone interval met, if any.
    pub ambiguous: Option<(f64, f64)>,
}

/// Bisects `α` over `[α₁², α₂²]` until the bracket is at most `tol` wide.
/// Inconclusive points close the bracket from above, so the result is within
/// `tol + DEAD_ZONE_MAX` of `‖T‖_σ²` given an exact search.
pub fn threshold_bisection(t: &Tensor3, tol: f64) -> Result<BisectionResult> {
    threshold_bisection_with(t, tol, Exec::default())
}

pub fn threshold_bisection_with(t: &Tensor3, tol: f64, exec: Exec) -> Result<BisectionResult> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let oracle = FeasibilityOracle::new(t, exec)?;
    let (a1, _) = lower_bound_alpha1(t);
    let (mut lo, mut hi) = (a1 * a1, upper_bound_alpha2(t).powi(2));
    let mut trace = Vec::new();
    let mut ambiguous = None;
    let mut evaluations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        match oracle.decide(mid) {
            Ok(v) => {
                trace.push((mid, v));
                match v {
                    Verdict::Feasible => lo = mid,
                    Verdict::Infeasible => hi = mid,
                }
            }
            Err(Error::Inconclusive { lo: a, hi: b, .. }) => {
                ambiguous = Some((a, b));
                hi = mid;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(BisectionResult { threshold: 0.5 * (lo + hi), lo, hi, evaluations, trace, ambiguous })
}

/// Best `ẑ` for fixed unit `ŷ`, with `s(ŷ, ẑ)`.
fn best_z(t: &Tensor3, y: &[f64]) -> (f64, Vec<f64>) {
    let (l, m, n) = t.dims();
    let a = DMatrix::from_fn(l, n, |i, k| (0..m).map(|j| y[j] * t.get(i, j, k)).sum());
    let (s, _, v) = top_pair_unchecked(&a);
    (s * s, v.iter().copied().collect())
}

/// Alternating maximization from `(ŷ, ẑ)`, returning refined unit vectors.
fn refine(t: &Tensor3, y: &[f64], z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = t.contract_last_two(y, z)?;
    let nx = dot_self(&x).sqrt();
    if nx == 0.0 {
        return Ok((y.to_vec(), z.to_vec()));
    }
    let x: Vec<f64> = x.iter().map(|v| v / nx).collect();
    let p = polish_rank_one(t, &x, y, z, 500, 1e-15)?;
    Ok((p.y, p.z))
}

fn bilinear(t: &Tensor3, y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    t.contract_last_two(y, z)
}

fn unit(v: &[f64]) -> Result<Vec<f64>> {
    let n = dot_self(v).sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidArgument("vector must be nonzero and finite".into()));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot_self(a: &[f64]) -> f64 {
    dot(a, a)
}
