//! Slow reference implementations used to cross-check the fast paths.
//!
//! Nothing here shares code with the tensor or chaos modules beyond the
//! coefficient storage: contractions are plain index loops, symmetrization
//! averages over every permutation, and moments come from expanding the
//! integral as a polynomial and integrating monomials against the Gaussian
//! moment table `E[x^{2k}] = (2k − 1)!!`.

use std::collections::BTreeMap;

use crate::tensor::{SymTensor, Tensor};

fn decode(mut flat: usize, dim: usize, order: usize) -> Vec<usize> {
    let mut idx = vec![0; order];
    for slot in idx.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
    idx
}

fn encode(idx: &[usize], dim: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

/// `out[j, k] = Σ_i f[i, j] g[i, k]` by explicit loops.
pub fn contract(f: &Tensor, g: &Tensor, p: usize) -> Tensor {
    let (n, m, d) = (f.order(), g.order(), f.dim());
    let out_order = n + m - 2 * p;
    let mut out = vec![0.0; d.pow(out_order as u32)];
    for (flat, slot) in out.iter_mut().enumerate() {
        let idx = decode(flat, d, out_order);
        let (j, k) = idx.split_at(n - p);
        for c in 0..d.pow(p as u32) {
            let i = decode(c, d, p);
            let fi: Vec<usize> = i.iter().chain(j).copied().collect();
            let gi: Vec<usize> = i.iter().chain(k).copied().collect();
            *slot += f.coeffs()[encode(&fi, d)] * g.coeffs()[encode(&gi, d)];
        }
    }
    Tensor::new(out_order, d, out).expect("finite output")
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Average over all `n!` index permutations.
pub fn symmetrize(t: &Tensor) -> Tensor {
    let (n, d) = (t.order(), t.dim());
    let perms = permutations(n);
    let mut out = vec![0.0; t.coeffs().len()];
    for (flat, slot) in out.iter_mut().enumerate() {
        let idx = decode(flat, d, n);
        let sum: f64 = perms
            .iter()
            .map(|p| {
                let permuted: Vec<usize> = p.iter().map(|&k| idx[k]).collect();
                t.coeffs()[encode(&permuted, d)]
            })
            .sum();
        *slot = sum / perms.len() as f64;
    }
    Tensor::new(n, d, out).expect("finite output")
}

/// Polynomial in `d` variables: exponent vector to coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn constant(dim: usize, c: f64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![0; dim], c);
        Poly { dim, terms }
    }

    fn add_term(&mut self, exps: Vec<u32>, c: f64) {
        *self.terms.entry(exps).or_insert(0.0) += c;
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly { dim: self.dim, terms: BTreeMap::new() };
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Expectation under independent standard normal variables.
    pub fn gaussian_expectation(&self) -> f64 {
        self.terms.iter().map(|(e, c)| c * e.iter().map(|&k| normal_moment(k)).product::<f64>()).sum()
    }
}

fn normal_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        (1..k).step_by(2).map(|j| j as f64).product()
    }
}

/// Coefficients of `He_k` in increasing powers.
fn hermite_coeffs(k: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for j in 1..k {
        let mut next = vec![0.0; j + 2];
        for (p, c) in cur.iter().enumerate() {
            next[p + 1] += c;
        }
        for (p, c) in prev.iter().enumerate() {
            next[p] -= j as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// `I_n(f)` as a polynomial: `Σ_t f[t] ∏_j He_{m_j(t)}(x_j)` over all index
/// tuples `t`.
pub fn integral_poly(f: &SymTensor) -> Poly {
    let (n, d) = (f.order(), f.dim());
    let mut out = Poly { dim: d, terms: BTreeMap::new() };
    for flat in 0..d.pow(n as u32) {
        let c = f.coeffs()[flat];
        if c == 0.0 {
            continue;
        }
        let idx = decode(flat, d, n);
        let mut term = Poly::constant(d, c);
        for var in 0..d {
            let m = idx.iter().filter(|&&i| i == var).count();
            if m == 0 {
                continue;
            }
            let mut h = Poly { dim: d, terms: BTreeMap::new() };
            for (p, hc) in hermite_coeffs(m).into_iter().enumerate() {
                if hc != 0.0 {
                    let mut e = vec![0; d];
                    e[var] = p as u32;
                    h.add_term(e, hc);
                }
            }
            term = term.mul(&h);
        }
        out = out.add(&term);
    }
    out
}

/// `E[I_n(f)^4]` by symbolic expansion.
pub fn fourth_moment(f: &SymTensor) -> f64 {
    let p = integral_poly(f);
    let sq = p.mul(&p);
    sq.mul(&sq).gaussian_expectation()
}

/// `E[I_n(f)^2]` by symbolic expansion.
pub fn second_moment(f: &SymTensor) -> f64 {
    let p = integral_poly(f);
    p.mul(&p).gaussian_expectation()
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `Σ_p (p! C(n,p)²)² (2n−2p)! ‖sym(f ⊗_p f)‖²`, materializing every
/// contraction.
pub fn fourth_moment_by_contractions(f: &SymTensor) -> f64 {
    let n = f.order();
    (0..=n)
        .map(|p| {
            let c = symmetrize(&contract(f.as_tensor(), f.as_tensor(), p));
            (fact(p) * binom(n, p).powi(2)).powi(2) * fact(2 * n - 2 * p) * c.norm_sq()
        })
        .sum()
}
