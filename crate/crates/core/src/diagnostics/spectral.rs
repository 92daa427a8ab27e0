use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::chaos::factorial;
use crate::error::{Error, Result};
use crate::tensor::SymTensor;

const SYMMETRY_TOL: f64 = 1e-10;

/// Symmetric operator of an order-2 kernel in orthonormal coordinates.
///
/// With eigenvalues `λᵢ`, the second-chaos variable is `I₂(f) = Σ λᵢ(ηᵢ² − 1)`
/// for independent standard normals `ηᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HSOperator {
    kernel: Option<SymTensor>,
    spectrum: Vec<f64>,
}

impl HSOperator {
    pub fn from_kernel(f: &SymTensor) -> Result<Self> {
        if f.order() != 2 {
            return Err(Error::OrderMismatch { expected: 2, found: f.order() });
        }
        let d = f.dim();
        let m = DMatrix::from_row_slice(d, d, f.coeffs());
        let mut spectrum: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        spectrum.sort_by(|a, b| b.total_cmp(a));
        Ok(HSOperator { kernel: Some(f.clone()), spectrum })
    }

    /// Row-major `dim × dim` matrix. Asymmetry up to `1e-10·‖M‖` is averaged
    /// away; anything larger is rejected.
    pub fn from_matrix(dim: usize, data: Vec<f64>) -> Result<Self> {
        crate::error::ensure_dim(dim * dim, data.len())?;
        let norm = data.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut asym = 0.0f64;
        for i in 0..dim {
            for j in 0..i {
                asym = asym.max((data[i * dim + j] - data[j * dim + i]).abs());
            }
        }
        if asym > SYMMETRY_TOL * norm {
            return Err(Error::NonSymmetricKernel { asymmetry: asym });
        }
        Self::from_kernel(&SymTensor::from_matrix(dim, data)?)
    }

    /// Operator known only through its eigenvalues.
    pub fn from_spectrum(mut spectrum: Vec<f64>) -> Self {
        spectrum.sort_by(|a, b| b.total_cmp(a));
        HSOperator { kernel: None, spectrum }
    }

    /// Tensor product of operators; eigenvalues are all pairwise products.
    pub fn kronecker(ops: &[HSOperator]) -> Self {
        let mut spectrum = vec![1.0];
        for op in ops {
            spectrum = spectrum.iter().flat_map(|a| op.spectrum.iter().map(move |b| a * b)).collect();
        }
        Self::from_spectrum(spectrum)
    }

    pub fn kernel(&self) -> Option<&SymTensor> {
        self.kernel.as_ref()
    }

    /// Eigenvalues in decreasing order.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.spectrum.len()
    }

    /// `Tr(M^j) = Σ λᵢ^j`.
    pub fn trace_power(&self, j: u32) -> f64 {
        self.spectrum.iter().map(|l| l.powi(j as i32)).sum()
    }

    /// `κ_j` of `I₂(f)`: `2^{j−1}(j−1)! Σ λᵢ^j` for `j ≥ 2`; `κ₁ = 0`.
    pub fn cumulant(&self, j: u32) -> f64 {
        match j {
            0 | 1 => 0.0,
            _ => 2f64.powi(j as i32 - 1) * factorial(j as usize - 1) * self.trace_power(j),
        }
    }

    pub fn variance(&self) -> f64 {
        self.cumulant(2)
    }

    pub fn fourth_moment(&self) -> f64 {
        self.cumulant(4) + 3.0 * self.variance().powi(2)
    }

    /// `κ₄/κ₂² = 12 Σλ⁴ / (Σλ²)²`.
    pub fn excess_kurtosis(&self) -> f64 {
        self.cumulant(4) / self.variance().powi(2)
    }

    /// `‖f ⊗₁ f‖² / ‖f‖⁴ = Σλ⁴ / (Σλ²)²`.
    pub fn contraction_ratio(&self) -> f64 {
        self.trace_power(4) / self.trace_power(2).powi(2)
    }

    /// `E[exp(iλ I₂(f))] = ∏ exp(−iλλⱼ)(1 − 2iλλⱼ)^{−1/2}`, principal root
    /// per factor.
    pub fn char_function(&self, lambda: f64) -> Complex64 {
        let log: Complex64 = self
            .spectrum
            .iter()
            .map(|&l| {
                let z = Complex64::new(1.0, -2.0 * lambda * l);
                Complex64::new(0.0, -lambda * l) - 0.5 * z.ln()
            })
            .sum();
        log.exp()
    }

    /// One draw of `I₂(f)` in the eigenbasis.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.spectrum
            .iter()
            .map(|&l| {
                let z: f64 = rng.sample(StandardNormal);
                l * (z * z - 1.0)
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{excess_fourth_moment, second_moment_exact};
    use crate::tensor::{symmetrize, Tensor};

    fn cross() -> SymTensor {
        symmetrize(&Tensor::basis(2, &[0, 1]).unwrap())
    }

    #[test]
    fn square_of_one_coordinate() {
        let f = SymTensor::from_matrix(1, vec![1.0]).unwrap();
        let op = HSOperator::from_kernel(&f).unwrap();
        assert_eq!(op.spectrum(), &[1.0]);
        assert!((op.cumulant(2) - 2.0).abs() < 1e-14);
        assert!((op.cumulant(4) - 48.0).abs() < 1e-12);
        assert!((op.fourth_moment() - 60.0).abs() < 1e-12);
    }

    #[test]
    fn cross_term_spectrum_is_symmetric() {
        let op = HSOperator::from_kernel(&cross()).unwrap();
        assert!((op.spectrum()[0] - 0.5).abs() < 1e-15);
        assert!((op.spectrum()[1] + 0.5).abs() < 1e-15);
        assert!(op.cumulant(3).abs() < 1e-15);
        assert!((op.variance() - second_moment_exact(&cross())).abs() < 1e-15);
        assert!((op.cumulant(4) - excess_fourth_moment(&cross())).abs() < 1e-12);
    }

    #[test]
    fn char_function_at_zero_is_one() {
        let op = HSOperator::from_kernel(&cross()).unwrap();
        assert_eq!(op.char_function(0.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn char_function_of_chi_square() {
        // ξ² − 1 has E[e^{iλ(ξ²−1)}] = e^{−iλ}(1 − 2iλ)^{−1/2}
        let op = HSOperator::from_spectrum(vec![1.0]);
        let lam = 0.7;
        let expected = Complex64::new(0.0, -lam).exp() / Complex64::new(1.0, -2.0 * lam).sqrt();
        assert!((op.char_function(lam) - expected).norm() < 1e-14);
    }

    #[test]
    fn rejects_wrong_order_and_asymmetry() {
        let v = SymTensor::vector(vec![1.0, 2.0]).unwrap();
        assert!(matches!(HSOperator::from_kernel(&v), Err(Error::OrderMismatch { .. })));
        assert!(matches!(
            HSOperator::from_matrix(2, vec![1.0, 0.5, 0.0, 1.0]),
            Err(Error::NonSymmetricKernel { .. })
        ));
        let op = HSOperator::from_matrix(2, vec![1.0, 0.5, 0.5 + 1e-13, 1.0]).unwrap();
        assert!((op.spectrum()[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn kronecker_multiplies_eigenvalues() {
        let a = HSOperator::from_spectrum(vec![2.0, -1.0]);
        let b = HSOperator::from_spectrum(vec![3.0, 0.5]);
        let k = HSOperator::kronecker(&[a.clone(), b.clone()]);
        assert_eq!(k.spectrum(), &[6.0, 1.0, -0.5, -3.0]);
        assert!((k.trace_power(2) - a.trace_power(2) * b.trace_power(2)).abs() < 1e-12);
    }
}
