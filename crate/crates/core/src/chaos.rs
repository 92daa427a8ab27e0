//! Multiple Wiener–Itô integrals over a finite orthonormal basis.
//!
//! The isonormal process is realized by a vector `ξ` of independent standard
//! normals, one per basis direction. For a symmetric `f` of order `n`,
//!
//! ```text
//! I_n(f)(ξ) = Σ_{sorted t} f[t] · n!/∏ m_j(t)! · ∏ He_{m_j(t)}(ξ_j)
//! ```
//!
//! where `m(t)` is the multiplicity vector of the sorted tuple `t` and `He_k`
//! are the probabilists' Hermite polynomials. With this normalization
//! `E[I_n(f)²] = n!‖f‖²` holds with no further constants.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_dim, Result};
use crate::tensor::{contract, for_each_sorted_tuple, symmetrize, SymTensor};

/// Independent standard normal coordinates of the isonormal process.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSample(Vec<f64>);

impl GaussianSample {
    pub fn new(xi: Vec<f64>) -> Self {
        GaussianSample(xi)
    }

    pub fn zeros(dim: usize) -> Self {
        GaussianSample(vec![0.0; dim])
    }

    pub fn draw<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        GaussianSample((0..dim).map(|_| rng.sample(StandardNormal)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for GaussianSample {
    fn from(v: Vec<f64>) -> Self {
        GaussianSample(v)
    }
}

/// Probabilists' Hermite polynomial `He_k(x)`.
pub fn hermite(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    match k {
        0 => prev,
        _ => {
            for j in 1..k {
                let next = x * cur - j as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `I_n(f)` evaluated at `ξ`.
pub fn eval_integral(f: &SymTensor, xi: &GaussianSample) -> Result<f64> {
    ensure_dim(f.dim(), xi.len())?;
    let x = xi.as_slice();
    let c = f.coeffs();
    Ok(match f.order() {
        0 => c[0],
        1 => c.iter().zip(x).map(|(a, b)| a * b).sum(),
        // Σ_i f_ii (ξ_i² − 1) + 2 Σ_{i<j} f_ij ξ_i ξ_j, rewritten as ξᵀfξ − tr f
        2 => quadratic_form(c, x) - (0..x.len()).map(|i| c[i * x.len() + i]).sum::<f64>(),
        _ => eval_integral_general(f, x),
    })
}

/// `ξᵀ A ξ` for a row-major square matrix.
pub(crate) fn quadratic_form(a: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    a.chunks_exact(d)
        .zip(x)
        .map(|(row, &xi)| xi * row.iter().zip(x).map(|(r, xj)| r * xj).sum::<f64>())
        .sum()
}

/// Multiplicity-weighted tuple sum, valid for every order.
pub(crate) fn eval_integral_general(f: &SymTensor, x: &[f64]) -> f64 {
    let n = f.order();
    let d = f.dim();
    // he[j * (n + 1) + k] = He_k(ξ_j)
    let mut he = vec![0.0; d * (n + 1)];
    for (j, &xj) in x.iter().enumerate() {
        let row = &mut he[j * (n + 1)..(j + 1) * (n + 1)];
        row[0] = 1.0;
        if n >= 1 {
            row[1] = xj;
        }
        for k in 1..n {
            row[k + 1] = xj * row[k] - k as f64 * row[k - 1];
        }
    }
    let n_fact = factorial(n);
    let mut total = 0.0;
    for_each_sorted_tuple(n, d, |t| {
        let coeff = f.get(t);
        if coeff == 0.0 {
            return;
        }
        let mut weight = n_fact;
        let mut poly = 1.0;
        let mut k = 0;
        while k < t.len() {
            let j = t[k];
            let mut m = 1;
            while k + m < t.len() && t[k + m] == j {
                m += 1;
            }
            weight /= factorial(m);
            poly *= he[j * (n + 1) + m];
            k += m;
        }
        total += coeff * weight * poly;
    });
    total
}

/// A random variable with a finite chaos expansion: one symmetric tensor per
/// order, absent orders meaning zero. Order 0 holds the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosElement {
    dim: usize,
    terms: BTreeMap<usize, SymTensor>,
}

impl ChaosElement {
    pub fn new(dim: usize) -> Self {
        ChaosElement { dim, terms: BTreeMap::new() }
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        let mut c = ChaosElement::new(dim);
        c.terms.insert(0, SymTensor::scalar(value, dim));
        c
    }

    pub fn from_term(f: SymTensor) -> Self {
        let mut c = ChaosElement::new(f.dim());
        c.terms.insert(f.order(), f);
        c
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `f` to the term of its order.
    pub fn add_term(&mut self, f: SymTensor) -> Result<()> {
        ensure_dim(self.dim, f.dim())?;
        let merged = match self.terms.remove(&f.order()) {
            Some(existing) => existing.add(&f)?,
            None => f,
        };
        self.terms.insert(merged.order(), merged);
        Ok(())
    }

    pub fn term(&self, order: usize) -> Option<&SymTensor> {
        self.terms.get(&order)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &SymTensor)> {
        self.terms.iter().map(|(&q, f)| (q, f))
    }

    pub fn mean(&self) -> f64 {
        self.terms.get(&0).map_or(0.0, |c| c.coeffs()[0])
    }

    /// `Σ_{q ≥ 1} q!‖f_q‖²`, using orthogonality of distinct chaoses.
    pub fn variance(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(&q, _)| q > 0)
            .map(|(_, f)| second_moment_exact(f))
            .sum()
    }

    pub fn eval(&self, xi: &GaussianSample) -> Result<f64> {
        ensure_dim(self.dim, xi.len())?;
        self.terms.values().map(|f| eval_integral(f, xi)).sum()
    }
}

/// Evaluates every term of `c` at `ξ` and sums.
pub fn eval_chaos_element(c: &ChaosElement, xi: &GaussianSample) -> Result<f64> {
    c.eval(xi)
}

/// Multiplication formula:
/// `I_n(f)·I_m(g) = Σ_{r=0}^{n∧m} r!·C(n,r)·C(m,r)·I_{n+m−2r}((f ⊗_r g)_s)`.
pub fn product_formula(f: &SymTensor, g: &SymTensor) -> Result<ChaosElement> {
    ensure_dim(f.dim(), g.dim())?;
    let (n, m) = (f.order(), g.order());
    let mut out = ChaosElement::new(f.dim());
    for r in 0..=n.min(m) {
        let weight = factorial(r) * binomial(n, r) * binomial(m, r);
        let term = symmetrize(&contract(f, g, r)?).scale(weight);
        out.add_term(term)?;
    }
    Ok(out)
}

/// `E[I_n(f)²] = n!‖f‖²`.
pub fn second_moment_exact(f: &SymTensor) -> f64 {
    factorial(f.order()) * f.norm_sq()
}

/// Exact `E[I_n(f)⁴]` from self-contractions:
///
/// ```text
/// 3(n!‖f‖²)² + Σ_{p=1}^{n−1} (n!)² C(n,p)² [‖f ⊗_p f‖² + C(2n−2p, n−p) ‖(f ⊗_p f)_s‖²]
/// ```
///
/// The order-`2n` product `f ⊗ f` never appears; only contractions of order
/// `2(n−p) ≤ 2n − 2` are materialized.
pub fn fourth_moment_exact(f: &SymTensor) -> f64 {
    let n = f.order();
    if n == 0 {
        return f.coeffs()[0].powi(4);
    }
    let var = second_moment_exact(f);
    3.0 * var * var + excess_fourth_moment(f)
}

/// `E[I_n(f)⁴] − 3·E[I_n(f)²]²`; nonnegative, zero for `n ≤ 1`.
pub fn excess_fourth_moment(f: &SymTensor) -> f64 {
    let n = f.order();
    let n_fact = factorial(n);
    (1..n)
        .map(|p| {
            let c = contract(f, f, p).expect("self-contraction is well formed");
            let sym_sq = symmetrize(&c).norm_sq();
            n_fact * n_fact * binomial(n, p).powi(2) * (c.norm_sq() + binomial(2 * n - 2 * p, n - p) * sym_sq)
        })
        .sum()
}

/// `‖f ⊗_p f‖²` for `p = 1..n−1`.
pub fn contraction_norms(f: &SymTensor) -> Vec<f64> {
    (1..f.order())
        .map(|p| contract(f, f, p).expect("self-contraction is well formed").norm_sq())
        .collect()
}
