//! Cutting-plane interior-point solver for the grid relaxation when
//! `ℓ m n` is small enough for a dense Newton system.
//!
//! The program `max ⟨T, Z⟩ s.t. ‖Z(x,•,•)‖_σ ≤ 1` is solved on a working set
//! of points with the barrier `−Σ_x log det(I − MₓᵀMₓ)`, `Mₓ = Z(x,•,•)`.
//! Points of the full set that the working-set solution violates are added
//! and the path is resumed, until every constraint holds to the tolerance.
//! At a central point `t T = Σ_x x ⊗ Gₓ` with `Gₓ` the barrier gradient, so
//! `Λₓ = Gₓ / t` are multipliers with a duality gap below `ν / t`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::exec::{self, Exec, REDUCE_CHUNK};
use crate::grid::UnitPointSet;
use crate::linalg::{sigma_max, spectral_norm_tier};

/// Barrier weight growth per centering.
const MU: f64 = 10.0;
/// Newton decrement `λ²/2` at which a centering stops.
const CENTERED: f64 = 1e-10;
/// Decrement below which further Newton steps are lost in rounding.
const STALLED: f64 = 1e-24;
/// Extra steps at a centered point aimed at the stationarity target; the
/// Newton system's conditioning sets a floor on what they can reach.
const POLISH_STEPS: usize = 3;
const MAX_NEWTON_PER_CENTER: usize = 200;
/// Newton decrement below which the undamped step is taken.
const FULL_STEP: f64 = 0.25;
/// Gap `ν / t` at which intermediate working-set solves stop.
const ROUND_GAP: f64 = 1e-3;
/// Shrink applied to the warm start so the new constraints are strict.
const WARM_MARGIN: f64 = 0.9;
const MAX_ROUNDS: usize = 500;

pub(crate) struct BarrierSolution {
    /// Normalized-units iterate.
    pub z: Vec<f64>,
    /// `(point, Λₓ)` in normalized units, column-major `n × m` blocks.
    pub duals: Vec<(usize, Vec<f64>)>,
    pub newton_steps: usize,
    pub svd_count: usize,
}

/// Gradient and Hessian of `−log det(I − MᵀM)` for the column-major
/// `a × b` buffer `mbuf`.
struct PointTerms {
    grad: Vec<f64>,
    hess: Vec<f64>,
}

fn point_terms(mbuf: &[f64], a: usize, b: usize) -> Option<PointTerms> {
    let m = DMatrix::from_column_slice(a, b, mbuf);
    let c = DMatrix::<f64>::identity(b, b) - m.transpose() * &m;
    let chol = c.cholesky()?;
    let k = chol.inverse();
    let nm = &m * &k;
    let grad: Vec<f64> = nm.iter().map(|v| 2.0 * v).collect();
    // H[(r1,c1),(r2,c2)] = 2 (L[r1,r2] K[c1,c2] + N[r1,c2] N[r2,c1]), L = I + N Mᵀ
    let lm = DMatrix::<f64>::identity(a, a) + &nm * m.transpose();
    let block = a * b;
    let mut hess = vec![0.0; block * block];
    for c1 in 0..b {
        for r1 in 0..a {
            let e1 = c1 * a + r1;
            let row = &mut hess[e1 * block..(e1 + 1) * block];
            for c2 in 0..b {
                let kc = k[(c1, c2)];
                let n1 = nm[(r1, c2)];
                for r2 in 0..a {
                    row[c2 * a + r2] = 2.0 * (lm[(r1, r2)] * kc + n1 * nm[(r2, c1)]);
                }
            }
        }
    }
    Some(PointTerms { grad, hess })
}

fn combine(z: &[f64], x: &[f64], out: &mut [f64]) {
    let block = out.len();
    out.fill(0.0);
    for (i, &xi) in x.iter().enumerate() {
        if xi != 0.0 {
            for (o, v) in out.iter_mut().zip(&z[i * block..(i + 1) * block]) {
                *o += xi * v;
            }
        }
    }
}

/// `(gradient, Hessian, per-point barrier gradients)`.
type Derivatives = (Vec<f64>, DMatrix<f64>, Vec<Vec<f64>>);

struct Problem<'a> {
    tn: &'a [f64],
    dims: (usize, usize, usize),
    points: &'a UnitPointSet,
    /// Target for `‖∇f‖ / t = ‖T − Σ x⊗Λₓ‖_F` at a central point.
    stat_tol: f64,
    exec: Exec,
}

impl Problem<'_> {
    fn block(&self) -> usize {
        self.dims.1 * self.dims.2
    }

    /// Whether every working-set constraint holds strictly at `z`.
    fn inside(&self, active: &[usize], z: &[f64]) -> bool {
        let (_, m, n) = self.dims;
        let block = self.block();
        let k = m.min(n);
        exec::map_indexed(self.exec, active.len(), |i| {
            let mut buf = vec![0.0; block];
            let mut scratch = vec![0.0; 2 * k * k];
            combine(z, self.points.point(active[i]), &mut buf);
            spectral_norm_tier(&buf, n, m, &[1.0], &mut scratch).is_some()
        })
        .into_iter()
        .all(|ok| ok)
    }

    /// Gradient, Hessian and per-point barrier gradients at `z`.
    fn derivatives(&self, active: &[usize], z: &[f64], t: f64) -> Option<Derivatives> {
        let (l, m, n) = self.dims;
        let block = self.block();
        let dim = l * block;
        let terms = exec::map_indexed(self.exec, active.len(), |k| {
            let mut buf = vec![0.0; block];
            combine(z, self.points.point(active[k]), &mut buf);
            point_terms(&buf, n, m)
        });
        let mut grad: Vec<f64> = self.tn.iter().map(|v| -t * v).collect();
        // row-major, lower block triangle only
        let mut hess = vec![0.0; dim * dim];
        let mut point_grads = Vec::with_capacity(active.len());
        for (k, term) in terms.into_iter().enumerate() {
            let term = term?;
            let x = self.points.point(active[k]);
            for i in 0..l {
                if x[i] == 0.0 {
                    continue;
                }
                for (g, v) in grad[i * block..(i + 1) * block].iter_mut().zip(&term.grad) {
                    *g += x[i] * v;
                }
                for j in 0..=i {
                    let w = x[i] * x[j];
                    if w == 0.0 {
                        continue;
                    }
                    for e1 in 0..block {
                        let src = &term.hess[e1 * block..(e1 + 1) * block];
                        let at = (i * block + e1) * dim + j * block;
                        for (d, v) in hess[at..at + block].iter_mut().zip(src) {
                            *d += w * v;
                        }
                    }
                }
            }
            point_grads.push(term.grad);
        }
        for r in 0..dim {
            for c in (r + 1)..dim {
                hess[r * dim + c] = hess[c * dim + r];
            }
        }
        Some((grad, DMatrix::from_vec(dim, dim, hess), point_grads))
    }

    /// Damped Newton centering at `t` from the strictly feasible `z`. The
    /// step `1 / (1 + λ)` keeps self-concordant iterates in the domain and
    /// needs no function values, which lose precision as `t` grows.
    fn center(&self, active: &[usize], z: &mut Vec<f64>, t: f64, steps: &mut usize) -> Result<Vec<Vec<f64>>> {
        let mut polish = 0;
        for _ in 0..MAX_NEWTON_PER_CENTER {
            let (grad, hess, point_grads) = self
                .derivatives(active, z, t)
                .ok_or_else(|| Error::Numerical("barrier iterate left the domain".into()))?;
            let chol = regularized_cholesky(hess)?;
            let g = nalgebra::DVector::from_column_slice(&grad);
            let dir = chol.solve(&g);
            let dec2 = g.dot(&dir).max(0.0);
            *steps += 1;
            let gnorm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            if dec2 / 2.0 <= CENTERED {
                polish += 1;
                if gnorm <= self.stat_tol * t || polish > POLISH_STEPS || dec2 / 2.0 <= STALLED {
                    return Ok(point_grads);
                }
            }
            let lambda = dec2.sqrt();
            let mut alpha = if lambda <= FULL_STEP { 1.0 } else { 1.0 / (1.0 + lambda) };
            loop {
                let trial: Vec<f64> = z.iter().zip(dir.iter()).map(|(a, d)| a - alpha * d).collect();
                if self.inside(active, &trial) {
                    *z = trial;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-12 {
                    return Err(Error::Numerical("barrier step left the domain".into()));
                }
            }
        }
        Err(Error::Numerical("barrier centering did not converge".into()))
    }

    /// Points outside the working set with `‖Z(x,•,•)‖_σ > 1 + tol`, most
    /// violated first, plus the number of SVDs used.
    fn violations(&self, z: &[f64], in_set: &[bool], tol: f64) -> (Vec<(usize, f64)>, usize) {
        let (_, m, n) = self.dims;
        let block = self.block();
        let k = m.min(n);
        let chunks = self.points.len().div_ceil(REDUCE_CHUNK);
        let parts = exec::map_indexed(self.exec, chunks, |c| {
            let mut buf = vec![0.0; block];
            let mut scratch = vec![0.0; 2 * k * k];
            let mut out = Vec::new();
            let end = ((c + 1) * REDUCE_CHUNK).min(self.points.len());
            for p in c * REDUCE_CHUNK..end {
                if in_set[p] {
                    continue;
                }
                combine(z, self.points.point(p), &mut buf);
                if spectral_norm_tier(&buf, n, m, &[1.0 + tol], &mut scratch).is_none() {
                    out.push((p, sigma_max(&DMatrix::from_column_slice(n, m, &buf))));
                }
            }
            out
        });
        let mut all: Vec<(usize, f64)> = parts.into_iter().flatten().collect();
        let svds = all.len();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        (all, svds)
    }

    fn max_norm(&self, z: &[f64], set: &[usize]) -> f64 {
        let (_, m, n) = self.dims;
        let mut buf = vec![0.0; self.block()];
        set.iter()
            .map(|&p| {
                combine(z, self.points.point(p), &mut buf);
                sigma_max(&DMatrix::from_column_slice(n, m, &buf))
            })
            .fold(0.0, f64::max)
    }
}

/// Cholesky factor of `h`, retried with growing diagonal shifts when
/// rounding makes the barrier Hessian numerically indefinite.
fn regularized_cholesky(h: DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let scale = h.diagonal().iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let mut shift = 0.0;
    for _ in 0..8 {
        let mut trial = h.clone();
        for i in 0..trial.nrows() {
            trial[(i, i)] += shift;
        }
        if let Some(c) = trial.cholesky() {
            return Ok(c);
        }
        shift = if shift == 0.0 { 1e-14 * scale } else { shift * 100.0 };
    }
    Err(Error::Numerical("singular barrier Hessian".into()))
}

/// Greedy spanning seed: repeatedly the point with the largest component
/// outside the span of those already chosen.
fn spanning_seed(points: &UnitPointSet) -> Vec<usize> {
    let l = points.dim();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut chosen = Vec::new();
    for _ in 0..l {
        let mut best = (usize::MAX, 1e-6);
        for (p, x) in points.iter().enumerate() {
            let mut r = x.to_vec();
            for b in &basis {
                let d: f64 = r.iter().zip(b).map(|(u, v)| u * v).sum();
                r.iter_mut().zip(b).for_each(|(u, v)| *u -= d * v);
            }
            let nr = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nr > best.1 {
                best = (p, nr);
            }
        }
        if best.0 == usize::MAX {
            break;
        }
        let x = points.point(best.0);
        let mut r = x.to_vec();
        for b in &basis {
            let d: f64 = r.iter().zip(b).map(|(u, v)| u * v).sum();
            r.iter_mut().zip(b).for_each(|(u, v)| *u -= d * v);
        }
        let nr = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        basis.push(r.into_iter().map(|v| v / nr).collect());
        chosen.push(best.0);
    }
    chosen
}

/// Solves the relaxation for the Frobenius-normalized tensor `tn`.
/// `gap_tol` bounds the final duality gap and `feas_tol` the violation of
/// constraints outside the working set.
pub(crate) fn solve(
    tn: &[f64],
    dims: (usize, usize, usize),
    points: &UnitPointSet,
    gap_tol: f64,
    feas_tol: f64,
    stat_tol: f64,
    exec: Exec,
) -> Result<BarrierSolution> {
    let (l, m, n) = dims;
    let block = m * n;
    let prob = Problem { tn, dims, points, stat_tol, exec };
    let mut active = spanning_seed(points);
    if active.len() < l {
        let g = SymmetricEigen::new(DMatrix::from_fn(l, l, |i, j| points.iter().map(|x| x[i] * x[j]).sum::<f64>()));
        return Err(Error::Unbounded { dim: l, min_eigenvalue: g.eigenvalues.min() });
    }
    let mut in_set = vec![false; points.len()];
    for &p in &active {
        in_set[p] = true;
    }
    let add_per_round = (2 * l).max(8);
    let mut z = vec![0.0; l * block];
    let mut t = 1.0;
    let mut steps = 0;
    let mut svd_count = 0;
    let mut target = ROUND_GAP.max(gap_tol);
    for _ in 0..MAX_ROUNDS {
        let mut point_grads;
        loop {
            point_grads = prob.center(&active, &mut z, t, &mut steps)?;
            if (active.len() * m) as f64 / t <= target {
                break;
            }
            t *= MU;
        }
        let (viol, svds) = prob.violations(&z, &in_set, feas_tol);
        svd_count += svds;
        if viol.is_empty() {
            if target > gap_tol {
                // tightening can move z outside constraints not yet tracked
                target = gap_tol;
                continue;
            }
            let duals = active
                .iter()
                .zip(point_grads)
                .map(|(&p, g)| (p, g.into_iter().map(|v| v / t).collect()))
                .collect();
            return Ok(BarrierSolution { z, duals, newton_steps: steps, svd_count });
        }
        for &(p, _) in viol.iter().take(add_per_round) {
            active.push(p);
            in_set[p] = true;
        }
        let worst = prob.max_norm(&z, &active);
        svd_count += active.len();
        z.iter_mut().for_each(|v| *v *= WARM_MARGIN / worst.max(1.0));
        t = (t / MU).max(1.0);
    }
    Err(Error::Numerical(format!("working set still growing after {MAX_ROUNDS} rounds")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_derivatives_match_differences() {
        let (a, b) = (3, 2);
        let m0: Vec<f64> = vec![0.3, -0.2, 0.1, 0.25, 0.05, -0.4];
        let neg_logdet = |v: &[f64]| {
            let m = DMatrix::from_column_slice(a, b, v);
            -(DMatrix::<f64>::identity(b, b) - m.transpose() * &m).determinant().ln()
        };
        let base = point_terms(&m0, a, b).unwrap();
        let h = 1e-6;
        for e in 0..a * b {
            let mut mp = m0.clone();
            mp[e] += h;
            let mut mm = m0.clone();
            mm[e] -= h;
            let fp = point_terms(&mp, a, b).unwrap();
            let fm = point_terms(&mm, a, b).unwrap();
            let g = (neg_logdet(&mp) - neg_logdet(&mm)) / (2.0 * h);
            assert!((g - base.grad[e]).abs() < 1e-6, "grad {e}: {g} vs {}", base.grad[e]);
            for e2 in 0..a * b {
                let hd = (fp.grad[e2] - fm.grad[e2]) / (2.0 * h);
                let he = base.hess[e * a * b + e2];
                assert!((hd - he).abs() < 1e-5, "hess {e},{e2}: {hd} vs {he}");
            }
        }
    }
}
