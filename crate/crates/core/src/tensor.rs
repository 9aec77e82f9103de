//! Dense order-3 and order-d tensors, multilinear evaluation, contraction,
//! flattening, and rank-one decompositions.
//!
//! A [`Tensor3`] of shape `ℓ × m × n` is stored slice-major: `ℓ` contiguous
//! row-major `m × n` matrices, the `i`-th being the slice obtained by fixing
//! the first index. This is also the order of the `values` array in the
//! tensor file formats.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

fn mismatch(what: &str, expected: usize, got: usize) -> Error {
    Error::DimensionMismatch(format!("{what}: expected length {expected}, got {got}"))
}

fn check_len(what: &str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(mismatch(what, expected, v.len()))
    }
}

impl Tensor3 {
    /// Builds a tensor from values in `(i, j, k)` row-major order.
    pub fn new(dims: [usize; 3], values: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "tensor dimensions must be positive, got {dims:?}"
            )));
        }
        check_len("tensor values", &values, dims.iter().product())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Tensor3 { dims, data: values })
    }

    pub fn zeros(l: usize, m: usize, n: usize) -> Self {
        assert!(l > 0 && m > 0 && n > 0, "tensor dimensions must be positive");
        Tensor3 {
            dims: [l, m, n],
            data: vec![0.0; l * m * n],
        }
    }

    pub fn from_fn(l: usize, m: usize, n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(l, m, n);
        for i in 0..l {
            for j in 0..m {
                for k in 0..n {
                    t.data[(i * m + j) * n + k] = f(i, j, k);
                }
            }
        }
        t
    }

    /// Stacks `ℓ` equally shaped `m × n` slices.
    pub fn from_slices(slices: &[DMatrix<f64>]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidArgument("need at least one slice".into()))?;
        let (m, n) = first.shape();
        if slices.iter().any(|s| s.shape() != (m, n)) {
            return Err(Error::DimensionMismatch("slices differ in shape".into()));
        }
        let mut values = Vec::with_capacity(slices.len() * m * n);
        for s in slices {
            for j in 0..m {
                for k in 0..n {
                    values.push(s[(j, k)]);
                }
            }
        }
        Tensor3::new([slices.len(), m, n], values)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.dims[0], self.dims[1], self.dims[2])
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let [_, m, n] = self.dims;
        self.data[(i * m + j) * n + k]
    }

    /// Row-major storage of slice `i`; equivalently the column-major buffer of
    /// its `n × m` transpose.
    pub fn slice_values(&self, i: usize) -> &[f64] {
        let len = self.dims[1] * self.dims[2];
        &self.data[i * len..(i + 1) * len]
    }

    pub fn slice(&self, i: usize) -> DMatrix<f64> {
        let [_, m, n] = self.dims;
        DMatrix::from_row_slice(m, n, self.slice_values(i))
    }

    pub fn slices(&self) -> Vec<DMatrix<f64>> {
        (0..self.dims[0]).map(|i| self.slice(i)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Tensor3) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn scaled(&self, c: f64) -> Tensor3 {
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &Tensor3) -> Result<Tensor3> {
        self.same_shape(other)?;
        Ok(Tensor3 {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    fn same_shape(&self, other: &Tensor3) -> Result<()> {
        if self.dims == other.dims {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )))
        }
    }

    /// Trilinear form `Σ t_ijk x_i y_j z_k`.
    pub fn evaluate(&self, x: &[f64], y: &[f64], z: &[f64]) -> Result<f64> {
        let [l, m, n] = self.dims;
        check_len("x", x, l)?;
        check_len("y", y, m)?;
        check_len("z", z, n)?;
        let mut total = 0.0;
        for (i, xi) in x.iter().enumerate() {
            let s = self.slice_values(i);
            let mut acc = 0.0;
            for (j, yj) in y.iter().enumerate() {
                let row = &s[j * n..(j + 1) * n];
                acc += yj * row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
            }
            total += xi * acc;
        }
        Ok(total)
    }

    /// `Σ_i x_i T_i` as an `m × n` matrix.
    pub fn contract_first(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_len("x", x, self.dims[0])?;
        let [_, m, n] = self.dims;
        let mut buf = vec![0.0; m * n];
        self.contract_first_into(x, &mut buf);
        Ok(DMatrix::from_row_slice(m, n, &buf))
    }

    /// Writes `Σ_i x_i T_i` into `out` in row-major order (the column-major
    /// buffer of the `n × m` transpose).
    pub(crate) fn contract_first_into(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, t) in out.iter_mut().zip(self.slice_values(i)) {
                *o += xi * t;
            }
        }
    }

    /// `T(•, y, z)`, the vector of `yᵀ T_i z`.
    pub fn contract_last_two(&self, y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        let [l, m, n] = self.dims;
        check_len("y", y, m)?;
        check_len("z", z, n)?;
        Ok((0..l)
            .map(|i| {
                let s = self.slice_values(i);
                (0..m)
                    .map(|j| y[j] * s[j * n..(j + 1) * n].iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
                    .sum()
            })
            .collect())
    }

    /// `(ℓm) × n` matrix stacking the slices top to bottom.
    pub fn flatten(&self) -> DMatrix<f64> {
        let [l, m, n] = self.dims;
        DMatrix::from_row_slice(l * m, n, &self.data)
    }

    pub fn into_order_d(self) -> TensorD {
        TensorD {
            dims: self.dims.to_vec(),
            data: self.data,
        }
    }
}

/// Dense tensor of order `d ≥ 3` in row-major index order.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorD {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl TensorD {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if dims.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "order must be at least 3, got {}",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "tensor dimensions must be positive, got {dims:?}"
            )));
        }
        check_len("tensor values", &values, dims.iter().product())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(TensorD { dims, data: values })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = dims.iter().product();
        TensorD::new(dims, vec![0.0; len])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for k in (0..self.dims.len() - 1).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let off: usize = index.iter().zip(self.strides()).map(|(i, s)| i * s).sum();
        self.data[off]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Tensor with modes reordered: mode `k` of the result is mode `perm[k]`
    /// of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<TensorD> {
        let d = self.order();
        let mut seen = vec![false; d];
        if perm.len() != d || perm.iter().any(|&p| p >= d || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation of 0..{d}")));
        }
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let old_strides = self.strides();
        let src_strides: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let mut out = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; d];
        for _ in 0..self.data.len() {
            let off: usize = idx.iter().zip(&src_strides).map(|(i, s)| i * s).sum();
            out.push(self.data[off]);
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < new_dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        TensorD::new(new_dims, out)
    }

    /// Views the tensor as `L × m × n` with `L` the product of all but the
    /// last two dimensions (row-major grouping of the leading modes).
    pub fn group_leading(&self) -> Tensor3 {
        let d = self.order();
        let lead: usize = self.dims[..d - 2].iter().product();
        Tensor3 {
            dims: [lead, self.dims[d - 2], self.dims[d - 1]],
            data: self.data.clone(),
        }
    }

    /// Multilinear form with one vector per mode.
    pub fn evaluate(&self, factors: &[Vec<f64>]) -> Result<f64> {
        if factors.len() != self.order() {
            return Err(mismatch("factor count", self.order(), factors.len()));
        }
        for (k, f) in factors.iter().enumerate() {
            check_len(&format!("factor {k}"), f, self.dims[k])?;
        }
        let w = kron_all(factors.iter().map(|f| f.as_slice()));
        Ok(w.iter().zip(&self.data).map(|(a, b)| a * b).sum())
    }
}

/// Kronecker product `v₁ ⊗ v₂ ⊗ …` in row-major order.
pub fn kron_all<'a>(vs: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut out = vec![1.0];
    for v in vs {
        let mut next = Vec::with_capacity(out.len() * v.len());
        for a in &out {
            next.extend(v.iter().map(|b| a * b));
        }
        out = next;
    }
    out
}

/// One weighted rank-one term `λ x ⊗ y ⊗ z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneTerm {
    #[serde(rename = "lambda")]
    pub weight: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// Sum of weighted rank-one terms with unit-norm factors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankOneDecomposition {
    pub terms: Vec<RankOneTerm>,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl RankOneDecomposition {
    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight.abs()).sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight.abs()).fold(0.0, f64::max)
    }

    /// Checks factor lengths and unit norms (tolerance `1e-12`).
    pub fn validate(&self, dims: (usize, usize, usize)) -> Result<()> {
        for (idx, t) in self.terms.iter().enumerate() {
            check_len("x", &t.x, dims.0)?;
            check_len("y", &t.y, dims.1)?;
            check_len("z", &t.z, dims.2)?;
            if !t.weight.is_finite() {
                return Err(Error::NonFinite);
            }
            for f in [&t.x, &t.y, &t.z] {
                let nrm = norm(f);
                if (nrm - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "term {idx} has a factor of norm {nrm}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Dense sum of the outer products.
    pub fn assemble(&self, dims: (usize, usize, usize)) -> Result<Tensor3> {
        let (l, m, n) = dims;
        let mut t = Tensor3::zeros(l, m, n);
        for term in &self.terms {
            check_len("x", &term.x, l)?;
            check_len("y", &term.y, m)?;
            check_len("z", &term.z, n)?;
            for i in 0..l {
                let wx = term.weight * term.x[i];
                if wx == 0.0 {
                    continue;
                }
                for j in 0..m {
                    let wxy = wx * term.y[j];
                    let row = &mut t.data[(i * m + j) * n..(i * m + j + 1) * n];
                    for (r, zk) in row.iter_mut().zip(&term.z) {
                        *r += wxy * zk;
                    }
                }
            }
        }
        Ok(t)
    }
}

/// Rank-one term of an order-d tensor, one unit factor per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneTermD {
    #[serde(rename = "lambda")]
    pub weight: f64,
    pub factors: Vec<Vec<f64>>,
}

/// Dense sum `Σ λ_r f₁ ⊗ … ⊗ f_d` over `terms`.
pub fn assemble_d(terms: &[RankOneTermD], dims: &[usize]) -> Result<TensorD> {
    let mut out = TensorD::zeros(dims.to_vec())?;
    for t in terms {
        if t.factors.len() != dims.len() {
            return Err(mismatch("factor count", dims.len(), t.factors.len()));
        }
        for (f, &d) in t.factors.iter().zip(dims) {
            check_len("factor", f, d)?;
        }
        let w = kron_all(t.factors.iter().map(|f| f.as_slice()));
        for (o, v) in out.data.iter_mut().zip(w) {
            *o += t.weight * v;
        }
    }
    Ok(out)
}

pub(crate) fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_tensor(l: usize, m: usize, n: usize, seed: u64) -> Tensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor3::from_fn(l, m, n, |_, _, _| rng.sample(StandardNormal))
    }

    fn random_unit(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let nrm = norm(&v);
        v.into_iter().map(|a| a / nrm).collect()
    }

    #[test]
    fn single_entry_evaluation() {
        let mut vals = vec![0.0; 8];
        vals[0] = 1.0;
        let t = Tensor3::new([2, 2, 2], vals).unwrap();
        assert_eq!(t.evaluate(&[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn sequence_tensor_corner() {
        let t = Tensor3::from_fn(3, 3, 3, |i, j, k| (i + j + k + 3) as f64);
        let e = [1.0, 0.0, 0.0];
        assert_eq!(t.evaluate(&e, &e, &e).unwrap(), 3.0);
    }

    #[test]
    fn evaluate_matches_triple_loop() {
        let t = random_tensor(2, 3, 4, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, y, z) = (random_unit(2, &mut rng), random_unit(3, &mut rng), random_unit(4, &mut rng));
        let mut oracle = 0.0;
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    oracle += t.get(i, j, k) * x[i] * y[j] * z[k];
                }
            }
        }
        assert!((t.evaluate(&x, &y, &z).unwrap() - oracle).abs() <= 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let t = random_tensor(2, 3, 4, 1);
        assert!(matches!(t.evaluate(&[1.0], &[0.0; 3], &[0.0; 4]), Err(Error::DimensionMismatch(_))));
        assert!(t.contract_first(&[1.0, 2.0, 3.0]).is_err());
        assert!(Tensor3::new([2, 2, 2], vec![0.0; 7]).is_err());
        assert!(Tensor3::new([0, 2, 2], vec![]).is_err());
        assert!(matches!(Tensor3::new([1, 1, 1], vec![f64::INFINITY]), Err(Error::NonFinite)));
    }

    #[test]
    fn contraction_selects_and_combines_slices() {
        let t = random_tensor(2, 3, 4, 3);
        assert_eq!(t.contract_first(&[0.0, 1.0]).unwrap(), t.slice(1));
        assert_eq!(t.contract_first(&[0.0, 0.0]).unwrap(), DMatrix::zeros(3, 4));
        let (a, b) = (0.3, -1.7);
        let c = t.contract_first(&[a, b]).unwrap();
        for j in 0..3 {
            for k in 0..4 {
                let want = a * t.get(0, j, k) + b * t.get(1, j, k);
                assert!((c[(j, k)] - want).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn evaluate_is_contraction_then_bilinear() {
        let t = random_tensor(3, 4, 5, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let (x, y, z) = (random_unit(3, &mut rng), random_unit(4, &mut rng), random_unit(5, &mut rng));
            let c = t.contract_first(&x).unwrap();
            let via = (DVector::from_vec(y.clone()).transpose() * c * DVector::from_vec(z.clone()))[(0, 0)];
            let direct = t.evaluate(&x, &y, &z).unwrap();
            assert!((via - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            let u = t.contract_last_two(&y, &z).unwrap();
            let via_u: f64 = u.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!((via_u - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn flatten_layout() {
        let single = random_tensor(1, 3, 4, 6);
        assert_eq!(single.flatten(), single.slice(0));

        let t = Tensor3::new([2, 2, 2], (1..=8).map(f64::from).collect()).unwrap();
        let f = t.flatten();
        assert_eq!(f.shape(), (4, 2));
        // row block i is slice i
        let expect = [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]];
        for (r, row) in expect.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                assert_eq!(f[(r, c)], *v);
            }
        }

        let t = random_tensor(3, 4, 5, 7);
        let rel = (t.flatten().norm() - t.frobenius_norm()).abs() / t.frobenius_norm();
        assert!(rel <= 1e-13);
    }

    #[test]
    fn assemble_single_term() {
        let dec = RankOneDecomposition {
            terms: vec![RankOneTerm {
                weight: 2.0,
                x: vec![1.0, 0.0],
                y: vec![1.0, 0.0, 0.0],
                z: vec![1.0, 0.0],
            }],
        };
        let t = dec.assemble((2, 3, 2)).unwrap();
        assert_eq!(t.get(0, 0, 0), 2.0);
        assert_eq!(t.values().iter().filter(|v| **v != 0.0).count(), 1);
        assert!(dec.assemble((3, 3, 2)).is_err());
    }

    #[test]
    fn assembled_unit_term_has_weight_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let w: f64 = rng.sample(StandardNormal);
            let dec = RankOneDecomposition {
                terms: vec![RankOneTerm {
                    weight: w,
                    x: random_unit(3, &mut rng),
                    y: random_unit(4, &mut rng),
                    z: random_unit(5, &mut rng),
                }],
            };
            dec.validate((3, 4, 5)).unwrap();
            let t = dec.assemble((3, 4, 5)).unwrap();
            assert!((t.frobenius_norm() - w.abs()).abs() <= 1e-12 * w.abs().max(1.0));
        }
    }

    #[test]
    fn assemble_then_subtract_terms_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let terms: Vec<RankOneTerm> = (0..5)
            .map(|_| RankOneTerm {
                weight: rng.sample(StandardNormal),
                x: random_unit(2, &mut rng),
                y: random_unit(3, &mut rng),
                z: random_unit(4, &mut rng),
            })
            .collect();
        let t = RankOneDecomposition { terms: terms.clone() }.assemble((2, 3, 4)).unwrap();
        // direct per-entry summation oracle
        let mut residual = t.clone();
        for term in &terms {
            let mut vals = residual.values().to_vec();
            for i in 0..2 {
                for j in 0..3 {
                    for k in 0..4 {
                        vals[(i * 3 + j) * 4 + k] -= term.weight * term.x[i] * term.y[j] * term.z[k];
                    }
                }
            }
            residual = Tensor3::new([2, 3, 4], vals).unwrap();
        }
        assert!(residual.frobenius_norm() <= 1e-12);
    }

    #[test]
    fn validate_rejects_non_unit_factor() {
        let dec = RankOneDecomposition {
            terms: vec![RankOneTerm { weight: 1.0, x: vec![1.0, 1.0], y: vec![1.0], z: vec![1.0] }],
        };
        assert!(dec.validate((2, 1, 1)).is_err());
    }

    #[test]
    fn order_d_permute_and_group() {
        let vals: Vec<f64> = (0..24).map(f64::from).collect();
        let t = TensorD::new(vec![2, 3, 4], vals).unwrap();
        let p = t.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.dims(), &[4, 2, 3]);
        for a in 0..2 {
            for b in 0..3 {
                for c in 0..4 {
                    assert_eq!(p.get(&[c, a, b]), t.get(&[a, b, c]));
                }
            }
        }
        assert!(t.permuted(&[0, 0, 1]).is_err());
        let g = t.group_leading();
        assert_eq!(g.dims(), (2, 3, 4));
        assert!(TensorD::new(vec![2, 3], vec![0.0; 6]).is_err());

        let t4 = TensorD::new(vec![2, 2, 3, 2], (0..24).map(f64::from).collect()).unwrap();
        let g = t4.group_leading();
        assert_eq!(g.dims(), (4, 3, 2));
        assert_eq!(g.get(3, 2, 1), t4.get(&[1, 1, 2, 1]));
    }

    #[test]
    fn order_d_evaluate_matches_grouped() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let dims = vec![2, 3, 4, 5];
        let vals: Vec<f64> = (0..120).map(|_| rng.sample(StandardNormal)).collect();
        let t = TensorD::new(dims.clone(), vals).unwrap();
        let f: Vec<Vec<f64>> = dims.iter().map(|&d| random_unit(d, &mut rng)).collect();
        let w = kron_all([f[0].as_slice(), f[1].as_slice()]);
        let g = t.group_leading();
        let a = t.evaluate(&f).unwrap();
        let b = g.evaluate(&w, &f[2], &f[3]).unwrap();
        assert!((a - b).abs() <= 1e-12);
        assert!((norm(&w) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn slice_view_is_transpose_buffer() {
        let t = random_tensor(2, 3, 4, 11);
        let view = DMatrix::from_column_slice(4, 3, t.slice_values(1));
        assert_eq!(view.transpose(), t.slice(1));
        assert!((linalg::spectral_norm(&view).unwrap() - linalg::spectral_norm(&t.slice(1)).unwrap()).abs() < 1e-13);
    }
}
