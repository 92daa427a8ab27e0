//! Dense tensors over a `d`-dimensional real inner-product space.
//!
//! A [`Tensor`] of order `n` stores its `d^n` coefficients in row-major tuple
//! order: the entry at `(i_1, .., i_n)` lives at `sum_k i_k * d^(n-1-k)`.
//! [`SymTensor`] is the subset invariant under every permutation of the
//! indices. Symmetry is exact: a `SymTensor` can only be produced by
//! [`symmetrize`] or by builders that write one value per index orbit.

use rayon::prelude::*;

use crate::error::{ensure_dim, Error, Result};

/// Work threshold (multiply-adds) above which contractions run in parallel.
const PAR_CONTRACT_WORK: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    order: usize,
    dim: usize,
    coeffs: Vec<f64>,
}

impl Tensor {
    pub fn new(order: usize, dim: usize, coeffs: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidTensor("dimension must be positive".into()));
        }
        let len = entry_count(order, dim)?;
        if coeffs.len() != len {
            return Err(Error::InvalidTensor(format!(
                "order {order}, dim {dim} needs {len} coefficients, got {}",
                coeffs.len()
            )));
        }
        if let Some(pos) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidTensor(format!("non-finite coefficient at {pos}")));
        }
        Ok(Self { order, dim, coeffs })
    }

    pub fn zeros(order: usize, dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        let len = dim.pow(order as u32);
        Self { order, dim, coeffs: vec![0.0; len] }
    }

    /// Order-0 tensor holding a single scalar.
    pub fn scalar(value: f64, dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { order: 0, dim, coeffs: vec![value] }
    }

    /// `e_{i_1} ⊗ .. ⊗ e_{i_n}` with zero-based indices.
    pub fn basis(dim: usize, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
            return Err(Error::InvalidTensor(format!("index {bad} out of range for dim {dim}")));
        }
        let mut t = Tensor::zeros(indices.len(), dim);
        let at = flat_index(indices, dim);
        t.coeffs[at] = 1.0;
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, indices: &[usize]) -> f64 {
        debug_assert_eq!(indices.len(), self.order);
        self.coeffs[flat_index(indices, self.dim)]
    }

    /// Value of an order-0 tensor.
    pub fn as_scalar(&self) -> Option<f64> {
        (self.order == 0).then(|| self.coeffs[0])
    }

    fn check_same_shape(&self, other: &Tensor) -> Result<()> {
        ensure_dim(self.dim, other.dim)?;
        if self.order != other.order {
            return Err(Error::OrderMismatch { expected: self.order, found: other.order });
        }
        Ok(())
    }

    pub fn inner(&self, other: &Tensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Tensor { order: self.order, dim: self.dim, coeffs })
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Tensor { order: self.order, dim: self.dim, coeffs })
    }

    pub fn scale(&self, factor: f64) -> Tensor {
        Tensor {
            order: self.order,
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Plain tensor product `self ⊗ other`.
    pub fn outer(&self, other: &Tensor) -> Result<Tensor> {
        ensure_dim(self.dim, other.dim)?;
        let mut coeffs = Vec::with_capacity(self.coeffs.len() * other.coeffs.len());
        for a in &self.coeffs {
            coeffs.extend(other.coeffs.iter().map(|b| a * b));
        }
        Ok(Tensor { order: self.order + other.order, dim: self.dim, coeffs })
    }

    /// Contraction of order `p`: the first `p` indices of `self` are paired
    /// with the first `p` indices of `other`,
    /// `out[j.., k..] = sum_{i..} self[i.., j..] * other[i.., k..]`.
    ///
    /// Both operands are read as matrices with `d^p` rows, so the result is
    /// `Fᵀ·G` in matricized form.
    pub fn contract(&self, other: &Tensor, p: usize) -> Result<Tensor> {
        ensure_dim(self.dim, other.dim)?;
        if p > self.order.min(other.order) {
            return Err(Error::InvalidContraction { p, n: self.order, m: other.order });
        }
        let d = self.dim;
        let rows = d.pow(p as u32);
        let cf = d.pow((self.order - p) as u32);
        let cg = d.pow((other.order - p) as u32);
        let f = &self.coeffs;
        let g = &other.coeffs;
        let mut out = vec![0.0; cf * cg];

        let fill_row = |j: usize, row: &mut [f64]| {
            for r in 0..rows {
                let a = f[r * cf + j];
                if a != 0.0 {
                    let g_row = &g[r * cg..(r + 1) * cg];
                    for (o, &b) in row.iter_mut().zip(g_row) {
                        *o += a * b;
                    }
                }
            }
        };
        if rows * cf * cg >= PAR_CONTRACT_WORK && cf > 1 {
            out.par_chunks_mut(cg).enumerate().for_each(|(j, row)| fill_row(j, row));
        } else {
            out.chunks_mut(cg).enumerate().for_each(|(j, row)| fill_row(j, row));
        }
        Ok(Tensor { order: self.order + other.order - 2 * p, dim: d, coeffs: out })
    }
}

/// A tensor invariant under all permutations of its indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor(Tensor);

impl SymTensor {
    pub fn scalar(value: f64, dim: usize) -> Self {
        SymTensor(Tensor::scalar(value, dim))
    }

    pub fn zeros(order: usize, dim: usize) -> Self {
        SymTensor(Tensor::zeros(order, dim))
    }

    /// First-order basis vector `e_i` (zero-based).
    pub fn basis_vector(dim: usize, i: usize) -> Result<Self> {
        Tensor::basis(dim, &[i]).map(SymTensor)
    }

    /// Order-1 tensor from a coordinate vector.
    pub fn vector(coords: Vec<f64>) -> Result<Self> {
        let dim = coords.len();
        Tensor::new(1, dim, coords).map(SymTensor)
    }

    /// Builds a symmetric tensor by evaluating `f` once per index multiset
    /// (on the sorted tuple) and writing the value to the whole orbit.
    pub fn from_fn(order: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Tensor::zeros(order, dim);
        let mut orbit = Vec::new();
        for_each_sorted_tuple(order, dim, |tuple| {
            let v = f(tuple);
            orbit_indices(tuple, dim, &mut orbit);
            for &at in &orbit {
                t.coeffs[at] = v;
            }
        });
        if let Some(pos) = t.coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidTensor(format!("non-finite coefficient at {pos}")));
        }
        Ok(SymTensor(t))
    }

    /// Symmetric order-2 tensor from a row-major `dim × dim` matrix; the
    /// two off-diagonal halves are averaged.
    pub fn from_matrix(dim: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(2, dim, data).map(|t| symmetrize(&t))
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    pub fn order(&self) -> usize {
        self.0.order
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0.coeffs
    }

    pub fn get(&self, indices: &[usize]) -> f64 {
        self.0.get(indices)
    }

    pub fn inner(&self, other: &SymTensor) -> Result<f64> {
        self.0.inner(&other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.norm_sq()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn add(&self, other: &SymTensor) -> Result<SymTensor> {
        self.0.add(&other.0).map(SymTensor)
    }

    pub fn scale(&self, factor: f64) -> SymTensor {
        SymTensor(self.0.scale(factor))
    }
}

impl AsRef<Tensor> for SymTensor {
    fn as_ref(&self) -> &Tensor {
        &self.0
    }
}

/// Average of `t` over all permutations of its indices.
///
/// Works one index multiset at a time: the distinct arrangements of each
/// sorted tuple are visited once, so the cost is `O(d^n · n)` rather than
/// `n!` per entry.
pub fn symmetrize(t: &Tensor) -> SymTensor {
    if t.order <= 1 {
        return SymTensor(t.clone());
    }
    let mut out = Tensor::zeros(t.order, t.dim);
    let mut orbit = Vec::new();
    for_each_sorted_tuple(t.order, t.dim, |tuple| {
        orbit_indices(tuple, t.dim, &mut orbit);
        let mean = orbit.iter().map(|&at| t.coeffs[at]).sum::<f64>() / orbit.len() as f64;
        for &at in &orbit {
            out.coeffs[at] = mean;
        }
    });
    SymTensor(out)
}

/// Contraction `f ⊗_p g` of two symmetric tensors.
///
/// `p = 0` is the tensor product; `p = n = m` is the scalar `⟨f, g⟩`.
pub fn contract(f: &SymTensor, g: &SymTensor, p: usize) -> Result<Tensor> {
    f.0.contract(&g.0, p)
}

/// `‖f ⊗_p f‖²`, the squared norm of a self-contraction.
pub fn contraction_norm_sq(f: &SymTensor, p: usize) -> Result<f64> {
    Ok(contract(f, f, p)?.norm_sq())
}

fn entry_count(order: usize, dim: usize) -> Result<usize> {
    let mut len: usize = 1;
    for _ in 0..order {
        len = len
            .checked_mul(dim)
            .ok_or_else(|| Error::InvalidTensor(format!("dim {dim}^{order} overflows")))?;
    }
    Ok(len)
}

pub(crate) fn flat_index(indices: &[usize], dim: usize) -> usize {
    indices.iter().fold(0, |acc, &i| acc * dim + i)
}

/// Calls `f` on every non-decreasing tuple in `{0..dim}^order`, in
/// lexicographic order. Order 0 yields the empty tuple once.
pub(crate) fn for_each_sorted_tuple(order: usize, dim: usize, mut f: impl FnMut(&[usize])) {
    let mut tuple = vec![0usize; order];
    loop {
        f(&tuple);
        // advance: rightmost position that can still grow
        let Some(pos) = (0..order).rev().find(|&k| tuple[k] + 1 < dim) else {
            return;
        };
        let next = tuple[pos] + 1;
        for slot in &mut tuple[pos..] {
            *slot = next;
        }
    }
}

/// Flat indices of all distinct arrangements of the sorted tuple.
fn orbit_indices(sorted: &[usize], dim: usize, out: &mut Vec<usize>) {
    out.clear();
    let mut arr = sorted.to_vec();
    loop {
        out.push(flat_index(&arr, dim));
        if !next_permutation(&mut arr) {
            break;
        }
    }
}

/// Lexicographic successor; false when `arr` is already the last arrangement.
fn next_permutation(arr: &mut [usize]) -> bool {
    let n = arr.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| arr[i] < arr[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| arr[j] > arr[i]).expect("successor exists");
    arr.swap(i, j);
    arr[i + 1..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(dim: usize, idx: &[usize]) -> Tensor {
        Tensor::basis(dim, idx).unwrap()
    }

    #[test]
    fn symmetrize_two_term_average() {
        let s = symmetrize(&e(2, &[0, 1]));
        assert_eq!(s.get(&[0, 1]), 0.5);
        assert_eq!(s.get(&[1, 0]), 0.5);
        assert_eq!(s.get(&[0, 0]), 0.0);
    }

    #[test]
    fn symmetrize_orbit_of_three() {
        let s = symmetrize(&e(2, &[0, 0, 1]));
        for idx in [[0, 0, 1], [0, 1, 0], [1, 0, 0]] {
            assert!((s.get(&idx) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(s.get(&[0, 1, 1]), 0.0);
        assert!((s.coeffs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetrize_is_idempotent() {
        let t = Tensor::new(3, 3, (0..27).map(|i| (i as f64).sin()).collect()).unwrap();
        let s = symmetrize(&t);
        assert_eq!(symmetrize(s.as_tensor()), s);
    }

    #[test]
    fn contract_projection_onto_e1() {
        let f = symmetrize(&e(2, &[0, 0]));
        let out = contract(&f, &f, 1).unwrap();
        assert_eq!(out, e(2, &[0, 0]));
    }

    #[test]
    fn contract_cross_term() {
        let f = symmetrize(&e(2, &[0, 1]));
        let out = contract(&f, &f, 1).unwrap();
        let expected = e(2, &[0, 0]).add(&e(2, &[1, 1])).unwrap().scale(0.25);
        assert_eq!(out, expected);
        let full = contract(&f, &f, 2).unwrap();
        assert_eq!(full.order(), 0);
        assert_eq!(full.as_scalar(), Some(0.5));
    }

    #[test]
    fn contract_zero_is_tensor_product() {
        let f = SymTensor::vector(vec![1.0, 2.0]).unwrap();
        let g = SymTensor::vector(vec![3.0, -1.0]).unwrap();
        let out = contract(&f, &g, 0).unwrap();
        assert_eq!(out.coeffs(), &[3.0, -1.0, 6.0, -2.0]);
        assert!((out.norm() - f.norm() * g.norm()).abs() < 1e-12);
    }

    #[test]
    fn inner_products_of_basis_tensors() {
        assert_eq!(e(2, &[0, 1]).inner(&e(2, &[0, 1])).unwrap(), 1.0);
        assert_eq!(e(2, &[0, 1]).inner(&e(2, &[1, 0])).unwrap(), 0.0);
        assert_eq!(symmetrize(&e(2, &[0, 1])).norm_sq(), 0.5);
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        assert!(matches!(
            e(2, &[0]).inner(&e(3, &[0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            e(2, &[0]).add(&e(2, &[0, 1])),
            Err(Error::OrderMismatch { .. })
        ));
        let f = SymTensor::basis_vector(2, 0).unwrap();
        assert!(matches!(contract(&f, &f, 2), Err(Error::InvalidContraction { .. })));
    }

    #[test]
    fn construction_validates_length_and_finiteness() {
        assert!(Tensor::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Tensor::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(Tensor::new(1, 0, vec![]).is_err());
    }

    #[test]
    fn from_fn_fills_orbits() {
        let s = SymTensor::from_fn(3, 3, |t| (t[0] + 2 * t[1] + 3 * t[2]) as f64).unwrap();
        assert_eq!(s.get(&[2, 0, 1]), s.get(&[0, 1, 2]));
        assert_eq!(s.get(&[0, 1, 2]), 8.0);
    }

    #[test]
    fn sorted_tuples_count_multisets() {
        let mut n = 0;
        for_each_sorted_tuple(3, 4, |_| n += 1);
        assert_eq!(n, 20); // C(4+3-1, 3)
        let mut m = 0;
        for_each_sorted_tuple(0, 4, |t| {
            assert!(t.is_empty());
            m += 1
        });
        assert_eq!(m, 1);
    }
}
