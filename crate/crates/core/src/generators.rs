//! Seeded test-tensor generators: i.i.d. Gaussian tensors, the `i + j + k`
//! sequence tensor, and orthogonal rank-one sums whose spectral and nuclear
//! norms are known in closed form.
//!
//! For `T = Σ λ_r x_r ⊗ y_r ⊗ z_r` with `(x_rᵀx_s)(y_rᵀy_s) = z_rᵀz_s = 0`
//! (`r ≠ s`), the flattening `Mat(T)` has the terms as an SVD, hence
//! `‖T‖_σ = max λ_r` and `‖T‖_* = Σ λ_r`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::{assemble_d, norm, RankOneDecomposition, RankOneTerm, RankOneTermD, Tensor3, TensorD};

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub(crate) fn random_unit(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, len);
        let nrm = norm(&v);
        if nrm > 1e-8 {
            return v.into_iter().map(|a| a / nrm).collect();
        }
    }
}

/// `count` orthonormal vectors of length `len` from Gaussian draws
/// (modified Gram–Schmidt, two passes).
pub(crate) fn orthonormal_set(rng: &mut impl Rng, len: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(count <= len, "cannot draw {count} orthonormal vectors in R^{len}");
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v = gaussian_vec(rng, len);
        for _ in 0..2 {
            for b in &basis {
                let d: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= d * bi;
                }
            }
        }
        let nrm = norm(&v);
        if nrm > 1e-6 {
            basis.push(v.into_iter().map(|a| a / nrm).collect());
        }
    }
    basis
}

fn positive_weight(rng: &mut impl Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal).abs() + 0.1
}

pub fn gen_gaussian(l: usize, m: usize, n: usize, seed: u64) -> Tensor3 {
    let mut rng = rng_from(seed);
    Tensor3::from_fn(l, m, n, |_, _, _| rng.sample(StandardNormal))
}

/// The `3 × 3 × 3` tensor with `t_ijk = i + j + k` (indices from one).
pub fn gen_sequence_example() -> Tensor3 {
    Tensor3::from_fn(3, 3, 3, |i, j, k| (i + j + k + 3) as f64)
}

/// Orthogonal rank-`r` tensor with positive weights, returned with its
/// generating decomposition.
///
/// The `z` factors are orthonormal. When `r ≤ m` the `y` factors are
/// orthonormal too and the `x` factors are arbitrary unit vectors; otherwise
/// the terms are split into blocks of at most `m`, each block sharing one of a
/// set of orthonormal `x` vectors and carrying orthonormal `y` factors.
pub fn gen_orthogonal_test(
    l: usize,
    m: usize,
    n: usize,
    r: usize,
    seed: u64,
) -> Result<(Tensor3, RankOneDecomposition)> {
    let max = (l * m).min(n);
    if r == 0 || r > max {
        return Err(Error::InfeasibleRank { rank: r, dims: vec![l, m, n], max });
    }
    let mut rng = rng_from(seed);
    let zs = orthonormal_set(&mut rng, n, r);
    let mut terms = Vec::with_capacity(r);
    if r <= m {
        let ys = orthonormal_set(&mut rng, m, r);
        for (y, z) in ys.into_iter().zip(zs) {
            let x = random_unit(&mut rng, l);
            terms.push(RankOneTerm { weight: positive_weight(&mut rng), x, y, z });
        }
    } else {
        let blocks = r.div_ceil(m);
        let xs = orthonormal_set(&mut rng, l, blocks);
        let mut zs = zs.into_iter();
        for (b, x) in xs.iter().enumerate() {
            let size = m.min(r - b * m);
            for y in orthonormal_set(&mut rng, m, size) {
                let z = zs.next().expect("one z per term");
                terms.push(RankOneTerm { weight: positive_weight(&mut rng), x: x.clone(), y, z });
            }
        }
    }
    let dec = RankOneDecomposition { terms };
    let t = dec.assemble((l, m, n))?;
    Ok((t, dec))
}

/// Order-d analogue: orthonormal factors in the last two modes, arbitrary
/// unit factors elsewhere. Requires `r ≤ min(n_{d-1}, n_d)`.
pub fn gen_orthogonal_test_d(dims: &[usize], r: usize, seed: u64) -> Result<(TensorD, Vec<RankOneTermD>)> {
    let d = dims.len();
    if d < 3 {
        return Err(Error::InvalidArgument(format!("order must be at least 3, got {d}")));
    }
    let max = dims[d - 2].min(dims[d - 1]);
    if r == 0 || r > max {
        return Err(Error::InfeasibleRank { rank: r, dims: dims.to_vec(), max });
    }
    let mut rng = rng_from(seed);
    let a = orthonormal_set(&mut rng, dims[d - 2], r);
    let b = orthonormal_set(&mut rng, dims[d - 1], r);
    let terms: Vec<RankOneTermD> = a
        .into_iter()
        .zip(b)
        .map(|(ya, zb)| {
            let mut factors: Vec<Vec<f64>> = dims[..d - 2].iter().map(|&n| random_unit(&mut rng, n)).collect();
            factors.push(ya);
            factors.push(zb);
            RankOneTermD { weight: positive_weight(&mut rng), factors }
        })
        .collect();
    let t = assemble_d(&terms, dims)?;
    Ok((t, terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn check_orthogonality(dec: &RankOneDecomposition) {
        for (i, a) in dec.terms.iter().enumerate() {
            assert!(a.weight > 0.0);
            for b in &dec.terms[i + 1..] {
                assert!(dot(&a.z, &b.z).abs() <= 1e-12);
                assert!((dot(&a.x, &b.x) * dot(&a.y, &b.y)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn sequence_example_entries() {
        let t = gen_sequence_example();
        assert_eq!(t.dims(), (3, 3, 3));
        assert_eq!(t.get(0, 0, 0), 3.0);
        assert_eq!(t.get(2, 2, 2), 9.0);
        assert_eq!(t.get(0, 1, 2), 6.0);
    }

    #[test]
    fn gaussian_is_seeded() {
        assert_eq!(gen_gaussian(2, 3, 4, 5), gen_gaussian(2, 3, 4, 5));
        assert_ne!(gen_gaussian(2, 3, 4, 5), gen_gaussian(2, 3, 4, 6));
    }

    #[test]
    fn rank_one_orthogonal_tensor() {
        let (t, dec) = gen_orthogonal_test(3, 4, 5, 1, 3).unwrap();
        let lam = dec.terms[0].weight;
        assert!((t.frobenius_norm() - lam).abs() < 1e-12);
        assert!((linalg::spectral_norm(&t.flatten()).unwrap() - lam).abs() < 1e-12);
    }

    #[test]
    fn flattening_singular_values_are_weights() {
        let (t, dec) = gen_orthogonal_test(4, 10, 10, 4, 7).unwrap();
        dec.validate((4, 10, 10)).unwrap();
        check_orthogonality(&dec);
        let sv = linalg::svd(&t.flatten()).unwrap().singular_values;
        let mut w: Vec<f64> = dec.terms.iter().map(|t| t.weight).collect();
        w.sort_by(|a, b| b.total_cmp(a));
        for (i, s) in sv.iter().enumerate() {
            let want = w.get(i).copied().unwrap_or(0.0);
            assert!((s - want).abs() <= 1e-10, "σ_{i} = {s}, want {want}");
        }
    }

    #[test]
    fn rank_above_m_splits_across_x_blocks() {
        let (t, dec) = gen_orthogonal_test(3, 2, 6, 5, 11).unwrap();
        assert_eq!(dec.terms.len(), 5);
        dec.validate((3, 2, 6)).unwrap();
        check_orthogonality(&dec);
        let sv = linalg::svd(&t.flatten()).unwrap().singular_values;
        let mut w: Vec<f64> = dec.terms.iter().map(|t| t.weight).collect();
        w.sort_by(|a, b| b.total_cmp(a));
        for (s, want) in sv.iter().zip(&w) {
            assert!((s - want).abs() <= 1e-10);
        }
    }

    #[test]
    fn infeasible_rank() {
        assert!(matches!(gen_orthogonal_test(2, 2, 3, 4, 0), Err(Error::InfeasibleRank { .. })));
        assert!(gen_orthogonal_test(2, 2, 3, 0, 0).is_err());
        assert!(gen_orthogonal_test_d(&[2, 3, 4, 5], 5, 0).is_err());
    }

    #[test]
    fn order_d_generator_structure() {
        let (t, terms) = gen_orthogonal_test_d(&[2, 3, 8, 10], 4, 5).unwrap();
        assert_eq!(t.dims(), &[2, 3, 8, 10]);
        let g = t.group_leading();
        let sv = linalg::svd(&g.flatten()).unwrap().singular_values;
        let mut w: Vec<f64> = terms.iter().map(|t| t.weight).collect();
        w.sort_by(|a, b| b.total_cmp(a));
        for (s, want) in sv.iter().zip(&w) {
            assert!((s - want).abs() <= 1e-10);
        }
        assert!(sv[4] < 1e-10);
    }

    #[test]
    fn orthonormal_set_is_orthonormal() {
        let mut rng = rng_from(1);
        let b = orthonormal_set(&mut rng, 10, 10);
        for i in 0..10 {
            for j in 0..10 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&b[i], &b[j]) - want).abs() < 1e-14);
            }
        }
    }
}
