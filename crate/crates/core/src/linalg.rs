//! Dense matrix kernels: SVD, matrix spectral and nuclear norms, the leading
//! singular pair, and the Frobenius projection onto the spectral-norm unit
//! ball.
//!
//! The factorization itself is nalgebra's Golub–Kahan SVD; this module adds
//! ordering, input validation, and the small-matrix fast paths used by the
//! grid and solver loops. Fast paths operate on column-major `&[f64]` buffers
//! of a fixed `rows × cols` shape.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITERS: usize = 10_000;

/// Thin SVD `A = U Σ Vᵀ` with singular values in nonincreasing order.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    /// `m × k` with orthonormal columns, `k = min(m, n)`.
    pub left_vectors: DMatrix<f64>,
    /// `n × k` with orthonormal columns.
    pub right_vectors: DMatrix<f64>,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.left_vectors.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.right_vectors.transpose()
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.singular_values.iter().filter(|s| **s > tol).count()
    }
}

fn check_finite(a: &DMatrix<f64>) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn svd(a: &DMatrix<f64>) -> Result<SvdResult> {
    check_finite(a)?;
    Ok(svd_unchecked(a.clone()))
}

pub(crate) fn svd_unchecked(a: DMatrix<f64>) -> SvdResult {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return SvdResult {
            singular_values: Vec::new(),
            left_vectors: DMatrix::zeros(m, 0),
            right_vectors: DMatrix::zeros(n, 0),
        };
    }
    let dec = a
        .try_svd(true, true, SVD_EPS, SVD_MAX_ITERS)
        .expect("SVD iteration budget exhausted on finite input");
    let u = dec.u.expect("u requested");
    let vt = dec.v_t.expect("v_t requested");
    let sv = dec.singular_values;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let mut left = DMatrix::zeros(m, k);
    let mut right = DMatrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        values.push(sv[src].max(0.0));
        left.set_column(dst, &u.column(src));
        right.set_column(dst, &vt.row(src).transpose());
    }
    SvdResult {
        singular_values: values,
        left_vectors: left,
        right_vectors: right,
    }
}

pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    check_finite(a)?;
    Ok(sigma_max(a))
}

pub fn nuclear_norm(a: &DMatrix<f64>) -> Result<f64> {
    check_finite(a)?;
    Ok(nuclear_unchecked(a))
}

pub(crate) fn sigma_max(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max().max(0.0)
}

pub(crate) fn nuclear_unchecked(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().iter().sum()
}

/// Leading singular triple `(σ₁, u, v)` with `uᵀ A v = σ₁`.
pub fn top_singular_pair(a: &DMatrix<f64>) -> Result<(f64, DVector<f64>, DVector<f64>)> {
    check_finite(a)?;
    Ok(top_pair_unchecked(a))
}

pub(crate) fn top_pair_unchecked(a: &DMatrix<f64>) -> (f64, DVector<f64>, DVector<f64>) {
    let dec = svd_unchecked(a.clone());
    let u = dec.left_vectors.column(0).into_owned();
    let v = dec.right_vectors.column(0).into_owned();
    (dec.singular_values[0], u, v)
}

/// Nearest matrix (in Frobenius norm) with spectral norm at most one.
pub fn project_spectral_ball(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_finite(a)?;
    let mut out = a.clone();
    let (r, c) = a.shape();
    project_in_place(out.as_mut_slice(), r, c);
    Ok(out)
}

/// Projects the column-major `rows × cols` buffer onto the spectral unit ball
/// in place and returns the largest singular value before projection.
pub(crate) fn project_in_place(buf: &mut [f64], rows: usize, cols: usize) -> f64 {
    let dec = svd_unchecked(DMatrix::from_column_slice(rows, cols, buf));
    let s1 = dec.singular_values.first().copied().unwrap_or(0.0);
    if s1 <= 1.0 {
        return s1;
    }
    // A - B = Σ_{σ>1} (σ-1) u vᵀ
    for (j, &s) in dec.singular_values.iter().enumerate() {
        if s <= 1.0 {
            break;
        }
        let excess = s - 1.0;
        let u = dec.left_vectors.column(j);
        let v = dec.right_vectors.column(j);
        for col in 0..cols {
            let w = excess * v[col];
            let dst = &mut buf[col * rows..(col + 1) * rows];
            for (d, ui) in dst.iter_mut().zip(u.iter()) {
                *d -= w * ui;
            }
        }
    }
    s1
}

/// Returns true when `‖A‖_σ ≤ bound` for the column-major `rows × cols`
/// buffer, decided by a Cholesky factorization of `bound² I − AᵀA` (or the
/// smaller Gram matrix). `scratch` must hold `2 min(rows, cols)²` values.
#[cfg(test)]
pub(crate) fn spectral_norm_at_most(
    buf: &[f64],
    rows: usize,
    cols: usize,
    bound: f64,
    scratch: &mut [f64],
) -> bool {
    spectral_norm_tier(buf, rows, cols, &[bound], scratch).is_some()
}

/// The first of the increasing `tiers` that bounds `‖A‖_σ`, if any. The Gram
/// matrix is formed once and each tier costs one small Cholesky attempt.
/// `scratch` must hold `2 min(rows, cols)²` values.
pub(crate) fn spectral_norm_tier(
    buf: &[f64],
    rows: usize,
    cols: usize,
    tiers: &[f64],
    scratch: &mut [f64],
) -> Option<f64> {
    let k = rows.min(cols);
    let (gram, work) = scratch[..2 * k * k].split_at_mut(k * k);
    gram_lower_into(buf, rows, cols, gram);
    tiers
        .iter()
        .copied()
        .find(|&b| shifted_cholesky_ok(gram, k, b * b, work))
}

/// Lower triangle of the smaller Gram matrix (`AᵀA` or `AAᵀ`), row-major.
fn gram_lower_into(buf: &[f64], rows: usize, cols: usize, g: &mut [f64]) {
    let k = rows.min(cols);
    if rows >= cols {
        for i in 0..cols {
            let ci = &buf[i * rows..(i + 1) * rows];
            for j in 0..=i {
                let cj = &buf[j * rows..(j + 1) * rows];
                g[i * k + j] = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
            }
        }
    } else {
        g.fill(0.0);
        for col in 0..cols {
            let c = &buf[col * rows..(col + 1) * rows];
            for i in 0..rows {
                let ci = c[i];
                if ci == 0.0 {
                    continue;
                }
                for j in 0..=i {
                    g[i * k + j] += ci * c[j];
                }
            }
        }
    }
}

/// Whether `b2 I − G` is positive definite, for `G` given by its lower
/// triangle.
fn shifted_cholesky_ok(gram: &[f64], k: usize, b2: f64, l: &mut [f64]) -> bool {
    for j in 0..k {
        let mut d = b2 - gram[j * k + j];
        for p in 0..j {
            d -= l[j * k + p] * l[j * k + p];
        }
        if d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        l[j * k + j] = d;
        for i in (j + 1)..k {
            let mut s = -gram[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            l[i * k + j] = s / d;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
    }

    fn orthonormality_defect(q: &DMatrix<f64>) -> f64 {
        let g = q.transpose() * q;
        (g - DMatrix::identity(q.ncols(), q.ncols())).amax()
    }

    #[test]
    fn identity_and_diagonal() {
        let i3 = DMatrix::<f64>::identity(3, 3);
        assert_eq!(svd(&i3).unwrap().singular_values, vec![1.0, 1.0, 1.0]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let s = svd(&d).unwrap().singular_values;
        for (a, b) in s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((spectral_norm(&d).unwrap() - 3.0).abs() < 1e-14);
        assert!((nuclear_norm(&d).unwrap() - 6.0).abs() < 1e-13);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        for (m, n, seed) in [(5, 7, 1), (7, 5, 2), (1, 4, 3), (30, 12, 4), (200, 200, 5)] {
            let a = gaussian(m, n, seed);
            let d = svd(&a).unwrap();
            let rel = (d.reconstruct() - &a).norm() / a.norm();
            assert!(rel <= 1e-10, "{m}x{n}: {rel}");
            assert!(orthonormality_defect(&d.left_vectors) <= 1e-10);
            assert!(orthonormality_defect(&d.right_vectors) <= 1e-10);
            assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
            assert!(d.singular_values.iter().all(|s| *s >= 0.0));
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = DMatrix::<f64>::zeros(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&a), Err(Error::NonFinite)));
        assert!(spectral_norm(&a).is_err());
        assert!(project_spectral_ball(&a).is_err());
    }

    #[test]
    fn rank_one_norms() {
        let u = DVector::from_vec(vec![0.6, 0.8]);
        let v = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let a = &u * v.transpose();
        assert!((spectral_norm(&a).unwrap() - 1.0).abs() < 1e-14);
        assert!((nuclear_norm(&a).unwrap() - 1.0).abs() < 1e-14);
        let (s, uu, vv) = top_singular_pair(&a).unwrap();
        assert!((s - 1.0).abs() < 1e-14);
        assert!(((uu.transpose() * &a * vv)[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nuclear_dominates_spectral() {
        for seed in 0..10 {
            let a = gaussian(10, 10, 100 + seed);
            assert!(nuclear_norm(&a).unwrap() > spectral_norm(&a).unwrap());
        }
    }

    #[test]
    fn spectral_norm_against_random_unit_pairs() {
        let a = gaussian(6, 9, 7);
        let s = spectral_norm(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut best = f64::NEG_INFINITY;
        for _ in 0..10_000 {
            let mut u = DVector::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal));
            let mut v = DVector::from_fn(9, |_, _| rng.sample::<f64, _>(StandardNormal));
            u.normalize_mut();
            v.normalize_mut();
            best = best.max((u.transpose() * &a * v)[(0, 0)]);
        }
        assert!(best <= s + 1e-10);
        assert!(best > 0.5 * s);
    }

    #[test]
    fn projection_cases() {
        let a = gaussian(4, 6, 11);
        let inside = &a / (2.0 * spectral_norm(&a).unwrap());
        let p = project_spectral_ball(&inside).unwrap();
        assert!((p - &inside).amax() <= 1e-12);

        let two_i = DMatrix::<f64>::identity(3, 3) * 2.0;
        let p = project_spectral_ball(&two_i).unwrap();
        assert!((p - DMatrix::<f64>::identity(3, 3)).amax() <= 1e-13);
    }

    #[test]
    fn projection_is_nearest_feasible_and_idempotent() {
        let a = gaussian(5, 4, 21) * 3.0;
        let p = project_spectral_ball(&a).unwrap();
        assert!(spectral_norm(&p).unwrap() <= 1.0 + 1e-10);
        let d = (&a - &p).norm();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let b = DMatrix::from_fn(5, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
            let b = &b / spectral_norm(&b).unwrap() * rng.random_range(0.0..1.0);
            assert!((&a - b).norm() >= d - 1e-12);
        }
        let pp = project_spectral_ball(&p).unwrap();
        assert!((pp - &p).amax() <= 1e-12);
    }

    #[test]
    fn cholesky_norm_test_matches_svd() {
        let mut scratch = vec![0.0; 200];
        for (r, c, seed) in [(10, 10, 1), (8, 10, 2), (10, 8, 3), (3, 3, 4), (1, 5, 5)] {
            let a = gaussian(r, c, seed);
            let s = spectral_norm(&a).unwrap();
            for bound in [0.9 * s, 0.999 * s, 1.001 * s, 1.5 * s] {
                let got = spectral_norm_at_most(a.as_slice(), r, c, bound, &mut scratch);
                assert_eq!(got, s <= bound, "{r}x{c} bound/s = {}", bound / s);
            }
        }
    }

    #[test]
    fn tiered_norm_test() {
        let mut scratch = vec![0.0; 200];
        let tiers = [0.5, 0.8, 0.95, 1.0];
        for seed in 0..50 {
            let a = gaussian(6, 9, 100 + seed);
            let s = spectral_norm(&a).unwrap();
            let a = a / (s * (0.31 + 0.02 * seed as f64));
            let s = spectral_norm(&a).unwrap();
            let expect = tiers.iter().copied().find(|&b| s <= b);
            assert_eq!(spectral_norm_tier(a.as_slice(), 6, 9, &tiers, &mut scratch), expect);
        }
    }
}
