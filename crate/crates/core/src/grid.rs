//! Spherical-coordinate point sets on the unit sphere of `R^ℓ`.
//!
//! With step `δ = π/q`, the hemisphere grid `H(ℓ, q)` takes every angle in
//! `{0, δ, …, (q−1)δ}`; the sphere grid `S(ℓ, q)` widens the last angle to
//! `{0, …, (2q−1)δ}`. Once an angle is zero all later coordinates vanish, so
//! enumeration stops descending there and every emitted point is distinct.
//! Because `H ∪ −H` contains the full coordinate lattice, the covering
//! coefficient `θ = 1 − π²(ℓ−1)/(8q²)` bounds `min_x max_u |uᵀx|`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{random_unit, rng_from};
use crate::tensor::kron_all;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridKind {
    FullSphere { q: usize },
    Hemisphere { q: usize },
    UniformRandom { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub kind: GridKind,
}

impl GridSpec {
    pub fn hemisphere(dim: usize, q: usize) -> Self {
        GridSpec { dim, kind: GridKind::Hemisphere { q } }
    }

    pub fn resolution(&self) -> Option<usize> {
        match self.kind {
            GridKind::FullSphere { q } | GridKind::Hemisphere { q } => Some(q),
            GridKind::UniformRandom { .. } => None,
        }
    }

    /// Angular step `π/q` for deterministic grids.
    pub fn step(&self) -> Option<f64> {
        self.resolution().map(|q| PI / q as f64)
    }

    pub fn build(&self) -> Result<UnitPointSet> {
        match self.kind {
            GridKind::FullSphere { q } => build_sphere_grid(self.dim, q),
            GridKind::Hemisphere { q } => build_hemisphere_grid(self.dim, q),
            GridKind::UniformRandom { count, seed } => sample_uniform(self.dim, count, seed),
        }
    }
}

/// Finite set of unit vectors, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitPointSet {
    dim: usize,
    coords: Vec<f64>,
    theta: Option<f64>,
    spec: Option<GridSpec>,
}

impl UnitPointSet {
    /// Wraps explicit points. `theta` must be a valid covering coefficient
    /// for the set if given.
    pub fn from_points(dim: usize, points: &[Vec<f64>], theta: Option<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("point dimension must be positive".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "point of length {} in a set of dimension {dim}",
                    p.len()
                )));
            }
            let nrm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (nrm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("point has norm {nrm}, expected 1")));
            }
            coords.extend_from_slice(p);
        }
        Ok(UnitPointSet { dim, coords, theta, spec: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Covering coefficient; absent for random sets.
    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    pub fn spec(&self) -> Option<&GridSpec> {
        self.spec.as_ref()
    }

    /// One point per CSV row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn check_angles(phi: &[f64]) -> Result<()> {
    let last = phi.len().saturating_sub(1);
    for (i, &a) in phi.iter().enumerate() {
        let ok = if i == last { (0.0..2.0 * PI).contains(&a) } else { (0.0..=PI).contains(&a) };
        if !ok || !a.is_finite() {
            return Err(Error::InvalidArgument(format!("angle φ_{} = {a} out of range", i + 1)));
        }
    }
    Ok(())
}

/// Unit vector with spherical coordinates `φ₁ … φ_{ℓ−1}`.
pub fn spherical_to_cartesian(phi: &[f64]) -> Result<Vec<f64>> {
    if phi.is_empty() {
        return Err(Error::InvalidArgument("need at least one angle".into()));
    }
    check_angles(phi)?;
    let mut x = Vec::with_capacity(phi.len() + 1);
    let mut sines = 1.0;
    for &a in phi {
        x.push(sines * a.cos());
        sines *= a.sin();
    }
    x.push(sines);
    Ok(x)
}

fn check_grid_args(dim: usize, q: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("grid dimension must be at least 2, got {dim}")));
    }
    if q < 2 {
        return Err(Error::InvalidArgument(format!("grid resolution must be at least 2, got {q}")));
    }
    Ok(())
}

/// Enumerates the lattice depth-first. `last_range` is the number of steps
/// allowed for the final angle.
fn enumerate_grid(dim: usize, q: usize, last_range: usize) -> Vec<f64> {
    let delta = PI / q as f64;
    let table: Vec<(f64, f64)> = (0..last_range.max(q))
        .map(|a| {
            if a == 0 {
                (1.0, 0.0)
            } else {
                let t = a as f64 * delta;
                (t.cos(), t.sin())
            }
        })
        .collect();
    let mut coords = Vec::new();
    let mut prefix = vec![0.0; dim];
    fn rec(
        depth: usize,
        dim: usize,
        q: usize,
        last_range: usize,
        sines: f64,
        table: &[(f64, f64)],
        prefix: &mut Vec<f64>,
        coords: &mut Vec<f64>,
    ) {
        // depth is the 0-based index of the angle being chosen
        let range = if depth == dim - 2 { last_range } else { q };
        for a in 0..range {
            let (c, s) = table[a];
            prefix[depth] = sines * c;
            if depth == dim - 2 {
                prefix[dim - 1] = sines * s;
                coords.extend_from_slice(prefix);
            } else if a == 0 {
                for v in &mut prefix[depth + 1..] {
                    *v = 0.0;
                }
                coords.extend_from_slice(prefix);
            } else {
                rec(depth + 1, dim, q, last_range, sines * s, table, prefix, coords);
            }
        }
    }
    rec(0, dim, q, last_range, 1.0, &table, &mut prefix, &mut coords);
    coords
}

/// `H(ℓ, q)`: one representative of each antipodal pair on the lattice.
pub fn build_hemisphere_grid(dim: usize, q: usize) -> Result<UnitPointSet> {
    check_grid_args(dim, q)?;
    Ok(UnitPointSet {
        dim,
        coords: enumerate_grid(dim, q, q),
        theta: Some(covering_coefficient(q, dim)),
        spec: Some(GridSpec::hemisphere(dim, q)),
    })
}

/// `S(ℓ, q)`: the full-sphere lattice.
pub fn build_sphere_grid(dim: usize, q: usize) -> Result<UnitPointSet> {
    check_grid_args(dim, q)?;
    Ok(UnitPointSet {
        dim,
        coords: enumerate_grid(dim, q, 2 * q),
        theta: Some(covering_coefficient(q, dim)),
        spec: Some(GridSpec { dim, kind: GridKind::FullSphere { q } }),
    })
}

/// Closed-form `|H(ℓ, q)|`: `((q−1)^ℓ − 1)/(q−2)` for `q ≥ 3`, `ℓ` for `q = 2`.
pub fn hemisphere_point_count(dim: usize, q: usize) -> u128 {
    if q == 2 {
        return dim as u128;
    }
    let b = (q - 1) as u128;
    (b.pow(dim as u32) - 1) / (q as u128 - 2)
}

/// `1 − π²(ℓ−1)/(8q²)`.
pub fn covering_coefficient(q: usize, dim: usize) -> f64 {
    let q = q as f64;
    1.0 - PI * PI * (dim as f64 - 1.0) / (8.0 * q * q)
}

/// Smallest `q ≥ 2` with `π²(ℓ−1)·scale/(8q²) ≤ ε`.
pub fn resolution_for_error(dim: usize, epsilon: f64, scale: f64) -> Result<usize> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("scale must be nonnegative, got {scale}")));
    }
    let raw = (PI * PI * (dim as f64 - 1.0) * scale / (8.0 * epsilon)).sqrt();
    // an exact hit may round slightly above an integer; the loop below
    // restores the ceiling where the slack was real
    let mut q = (raw * (1.0 - 1e-12)).ceil() as usize;
    while q >= 1 && PI * PI * (dim as f64 - 1.0) * scale / (8.0 * (q * q) as f64) > epsilon * (1.0 + 1e-12) {
        q += 1;
    }
    Ok(q.max(2))
}

/// `count` i.i.d. uniform points (normalized Gaussians). Carries no θ.
pub fn sample_uniform(dim: usize, count: usize, seed: u64) -> Result<UnitPointSet> {
    if count == 0 {
        return Err(Error::EmptyPointSet);
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("point dimension must be positive".into()));
    }
    let mut rng = rng_from(seed);
    let mut coords = Vec::with_capacity(dim * count);
    for _ in 0..count {
        coords.extend(random_unit(&mut rng, dim));
    }
    Ok(UnitPointSet {
        dim,
        coords,
        theta: None,
        spec: Some(GridSpec { dim, kind: GridKind::UniformRandom { count, seed } }),
    })
}

/// Trivial set `{(1)}` for a mode of dimension one.
pub fn unit_line() -> UnitPointSet {
    UnitPointSet { dim: 1, coords: vec![1.0], theta: Some(1.0), spec: None }
}

/// Cartesian product of point sets, enumerated lazily in row-major order
/// (last factor fastest).
#[derive(Debug, Clone)]
pub struct ProductPointSet {
    sets: Vec<UnitPointSet>,
}

impl ProductPointSet {
    pub fn new(sets: Vec<UnitPointSet>) -> Result<Self> {
        if sets.is_empty() || sets.iter().any(|s| s.is_empty()) {
            return Err(Error::EmptyPointSet);
        }
        Ok(ProductPointSet { sets })
    }

    pub fn factors(&self) -> &[UnitPointSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.iter().map(|s| s.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of the Kronecker-product vectors.
    pub fn kron_dim(&self) -> usize {
        self.sets.iter().map(|s| s.dim()).product()
    }

    /// Product of member θ's when every member has one.
    pub fn theta(&self) -> Option<f64> {
        self.sets.iter().map(|s| s.theta()).product()
    }

    pub fn factor_indices(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.sets.len()];
        for (k, s) in self.sets.iter().enumerate().rev() {
            out[k] = idx % s.len();
            idx /= s.len();
        }
        out
    }

    pub fn tuple(&self, idx: usize) -> Vec<&[f64]> {
        self.factor_indices(idx)
            .into_iter()
            .zip(&self.sets)
            .map(|(i, s)| s.point(i))
            .collect()
    }

    /// `x₁ ⊗ x₂ ⊗ …` for tuple `idx`; a unit vector.
    pub fn kron(&self, idx: usize) -> Vec<f64> {
        kron_all(self.tuple(idx))
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<&[f64]>> + '_ {
        (0..self.len()).map(move |i| self.tuple(i))
    }

    /// Materializes the Kronecker vectors as a point set in `R^{Π ℓ_k}`.
    pub fn to_kron_set(&self) -> UnitPointSet {
        let dim = self.kron_dim();
        let mut coords = Vec::with_capacity(dim * self.len());
        for i in 0..self.len() {
            coords.extend(self.kron(i));
        }
        UnitPointSet { dim, coords, theta: self.theta(), spec: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn assert_unit(set: &UnitPointSet) {
        for p in set.iter() {
            assert!((dot(p, p).sqrt() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn spherical_coordinates() {
        let x = spherical_to_cartesian(&[0.0]).unwrap();
        assert_eq!(x, vec![1.0, 0.0]);
        let x = spherical_to_cartesian(&[PI / 2.0, PI / 2.0]).unwrap();
        assert!(x[0].abs() < 1e-15 && x[1].abs() < 1e-15 && (x[2] - 1.0).abs() < 1e-15);
        for phi in [[0.3, 2.9, 5.5], [3.1, 0.1, 0.0], [1.0, 1.0, 6.2]] {
            let x = spherical_to_cartesian(&phi).unwrap();
            assert!((dot(&x, &x).sqrt() - 1.0).abs() <= 1e-14);
        }
        assert!(spherical_to_cartesian(&[4.0, 0.0]).is_err());
        assert!(spherical_to_cartesian(&[0.0, 2.0 * PI]).is_err());
        assert!(spherical_to_cartesian(&[-0.1]).is_err());
    }

    #[test]
    fn hemisphere_counts_from_table() {
        for (q, count) in [(6, 156), (8, 400), (10, 820), (13, 1885)] {
            assert_eq!(build_hemisphere_grid(4, q).unwrap().len(), count);
        }
        assert_eq!(build_hemisphere_grid(3, 2).unwrap().len(), 3);
    }

    #[test]
    fn hemisphere_count_formula_matches_enumeration() {
        for dim in 2..=6 {
            for q in 2..=12 {
                let set = build_hemisphere_grid(dim, q).unwrap();
                assert_eq!(set.len() as u128, hemisphere_point_count(dim, q), "ℓ={dim} q={q}");
                assert_unit(&set);
            }
        }
    }

    #[test]
    fn hemisphere_points_are_distinct_and_not_antipodal() {
        let set = build_hemisphere_grid(4, 6).unwrap();
        for i in 0..set.len() {
            for j in 0..i {
                let c = dot(set.point(i), set.point(j));
                assert!(c.abs() < 1.0 - 1e-9, "points {i},{j} coincide up to sign");
            }
        }
    }

    #[test]
    fn hemisphere_starts_with_first_axis() {
        let set = build_hemisphere_grid(3, 5).unwrap();
        assert_eq!(set.point(0), &[1.0, 0.0, 0.0]);
        assert!(set.theta().unwrap() > 0.0);
        assert_eq!(set.spec().unwrap().step(), Some(PI / 5.0));
    }

    #[test]
    fn sphere_grid_bounds_and_circle() {
        for dim in 2..=5 {
            for q in 2..=8 {
                let s = build_sphere_grid(dim, q).unwrap();
                assert!(s.len() <= 2 * q.pow(dim as u32 - 1));
                assert_unit(&s);
            }
        }
        let c = build_sphere_grid(2, 4).unwrap();
        assert_eq!(c.len(), 8);
        for (k, p) in c.iter().enumerate() {
            let t = k as f64 * PI / 4.0;
            assert!((p[0] - t.cos()).abs() < 1e-15 && (p[1] - t.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn sphere_grid_nearly_contains_antipodes() {
        // brute-force pairwise search: every −x is within one grid step of
        // a grid point (the polar cap is reached only up to (q−1)δ)
        for (dim, q) in [(3, 6), (4, 5)] {
            let s = build_sphere_grid(dim, q).unwrap();
            let delta = PI / q as f64;
            for x in s.iter() {
                let best = s.iter().map(|u| -dot(u, x)).fold(f64::NEG_INFINITY, f64::max);
                assert!(best >= delta.cos() - 1e-12, "ℓ={dim} q={q} best={best}");
            }
        }
    }

    #[test]
    fn covering_coefficient_values() {
        let th = covering_coefficient(6, 4);
        assert!((th - 0.8972).abs() < 1e-4);
        assert!(((1.0 - covering_coefficient(61, 4)) - 1.0e-3).abs() < 1e-5);
        let mut prev = 0.0;
        for q in 2..200 {
            let t = covering_coefficient(q, 3);
            assert!(t > prev && t < 1.0);
            prev = t;
        }
    }

    #[test]
    fn resolution_values() {
        assert_eq!(resolution_for_error(4, 1e-3, 1.0).unwrap(), 61);
        // the smallest q meeting 1e-1 is 7; q = 6 gives 1 − θ ≈ 0.1028
        assert_eq!(resolution_for_error(4, 1e-1, 1.0).unwrap(), 7);
        assert_eq!(resolution_for_error(4, 1.0 - covering_coefficient(6, 4), 1.0).unwrap(), 6);
        assert_eq!(resolution_for_error(3, 1.0, 0.0).unwrap(), 2);
        for eps in [1e-2, 1e-4, 1e-6] {
            let q = resolution_for_error(2, eps, 1.0).unwrap() as f64;
            assert!((q * eps.sqrt() - 1.1107).abs() <= eps.sqrt());
        }
        assert!(resolution_for_error(3, 0.0, 1.0).is_err());
        assert!(resolution_for_error(3, -1.0, 1.0).is_err());
    }

    #[test]
    fn invalid_grid_arguments() {
        assert!(build_hemisphere_grid(1, 5).is_err());
        assert!(build_hemisphere_grid(3, 1).is_err());
        assert!(build_sphere_grid(3, 0).is_err());
        assert!(matches!(sample_uniform(3, 0, 1), Err(Error::EmptyPointSet)));
    }

    #[test]
    fn uniform_samples() {
        let s = sample_uniform(4, 100_000, 42).unwrap();
        assert!(s.theta().is_none());
        assert_unit(&s);
        let mut mean = [0.0; 4];
        for p in s.iter() {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v / 100_000.0;
            }
        }
        assert!(dot(&mean, &mean).sqrt() <= 0.02);
        assert_eq!(sample_uniform(4, 50, 9).unwrap(), sample_uniform(4, 50, 9).unwrap());
    }

    #[test]
    fn product_sets() {
        let a = build_hemisphere_grid(2, 7).unwrap();
        let b = build_hemisphere_grid(3, 7).unwrap();
        assert_eq!(a.len(), 7);
        assert_eq!(b.len(), 43);
        let p = ProductPointSet::new(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(p.len(), 7 * 43);
        assert_eq!(p.iter().count(), p.len());
        assert!((p.theta().unwrap() - a.theta().unwrap() * b.theta().unwrap()).abs() < 1e-15);
        assert_eq!(p.tuple(44), vec![a.point(1), b.point(1)]);
        let k = p.to_kron_set();
        assert_eq!(k.dim(), 6);
        assert_unit(&k);

        // Order-4 factor sizes: |H(2,q)| = q and |H(3,q)| = q² − q + 1
        assert_eq!(build_hemisphere_grid(3, 10).unwrap().len(), 91);
        assert_eq!(build_hemisphere_grid(3, 22).unwrap().len(), 463);

        let single = ProductPointSet::new(vec![a.clone()]).unwrap();
        assert_eq!(single.len(), a.len());
        for i in 0..a.len() {
            assert_eq!(single.kron(i), a.point(i));
        }
        let r = ProductPointSet::new(vec![a, sample_uniform(3, 5, 1).unwrap()]).unwrap();
        assert!(r.theta().is_none());
        assert!(ProductPointSet::new(vec![]).is_err());
    }

    #[test]
    fn csv_export() {
        let s = build_hemisphere_grid(2, 3).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 2);
    }
}
