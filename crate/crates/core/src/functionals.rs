//! Weighted quadratic functionals of fBm and of the Brownian sheet.
//!
//! | family  | functional                                   | mean            |
//! |---------|----------------------------------------------|-----------------|
//! | `FBeta` | `∫₀¹ t^{2β} (B^H_t)² dt`                      | `1/(2β+2H+1)`   |
//! | `LEps`  | `∫_ε¹ t^{−2H−1} (B^H_t)² dt`                  | `log(1/ε)`      |
//! | `ABeta` | `∫_{[0,1]ⁿ} ∏ xᵢ^{2βᵢ} W(x)² dx`              | `∏(2βᵢ+2)^{−1}` |
//! | `BEps`  | `∫_{[ε,1]ⁿ} ∏ xᵢ^{−2} W(x)² dx`               | `(log 1/ε)ⁿ`    |
//!
//! Each equals its mean plus `I₂(K)` for an explicit kernel `K`, a product
//! over axes for the sheet families. The chaos route evaluates `I₂` on the
//! embedded kernel; the direct route integrates the squared path.

use rand::Rng;
use serde::Serialize;

use crate::chaos::{eval_integral, GaussianSample};
use crate::diagnostics::HSOperator;
use crate::embed::{embed_axis_kernel, embed_kernel2, multi_index, CovarianceModel, Grid, GridEmbedding, PathSample};
use crate::error::{ensure_dim, Error, Result};
use crate::tensor::SymTensor;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family")]
pub enum FunctionalParams {
    FBeta { hurst: f64, beta: f64 },
    LEps { hurst: f64, eps: f64 },
    ABeta { betas: Vec<f64> },
    BEps { dims: usize, eps: f64 },
}

fn invalid<T>(msg: String) -> Result<T> {
    Err(Error::InvalidParameter(msg))
}

impl FunctionalParams {
    pub fn f_beta(hurst: f64, beta: f64) -> Result<Self> {
        let p = FunctionalParams::FBeta { hurst, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn l_eps(hurst: f64, eps: f64) -> Result<Self> {
        let p = FunctionalParams::LEps { hurst, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn a_beta(betas: Vec<f64>) -> Result<Self> {
        let p = FunctionalParams::ABeta { betas };
        p.validate()?;
        Ok(p)
    }

    pub fn b_eps(dims: usize, eps: f64) -> Result<Self> {
        let p = FunctionalParams::BEps { dims, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let hurst_ok = |h: f64| h > 0.0 && h < 1.0;
        let eps_ok = |e: f64| e > 0.0 && e < 1.0;
        match self {
            FunctionalParams::FBeta { hurst, beta } => {
                if !hurst_ok(*hurst) {
                    return invalid(format!("Hurst parameter {hurst} outside (0, 1)"));
                }
                if !(2.0 * beta + 2.0 * hurst + 1.0 > 0.0) {
                    return invalid(format!("F_beta needs 2β + 2H + 1 > 0, got β = {beta}, H = {hurst}"));
                }
            }
            FunctionalParams::LEps { hurst, eps } => {
                if !hurst_ok(*hurst) {
                    return invalid(format!("Hurst parameter {hurst} outside (0, 1)"));
                }
                if !eps_ok(*eps) {
                    return invalid(format!("eps {eps} outside (0, 1)"));
                }
            }
            FunctionalParams::ABeta { betas } => {
                if betas.is_empty() {
                    return invalid("A_beta needs at least one exponent".into());
                }
                if let Some(b) = betas.iter().find(|b| !(2.0 * **b + 2.0 > 0.0)) {
                    return invalid(format!("A_beta needs every 2β + 2 > 0, got β = {b}"));
                }
            }
            FunctionalParams::BEps { dims, eps } => {
                if *dims == 0 {
                    return invalid("B_eps needs at least one axis".into());
                }
                if !eps_ok(*eps) {
                    return invalid(format!("eps {eps} outside (0, 1)"));
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> &'static str {
        match self {
            FunctionalParams::FBeta { .. } => "F_beta",
            FunctionalParams::LEps { .. } => "L_eps",
            FunctionalParams::ABeta { .. } => "A_beta",
            FunctionalParams::BEps { .. } => "B_eps",
        }
    }

    pub fn is_sheet(&self) -> bool {
        matches!(self, FunctionalParams::ABeta { .. } | FunctionalParams::BEps { .. })
    }

    pub fn axes(&self) -> usize {
        match self {
            FunctionalParams::ABeta { betas } => betas.len(),
            FunctionalParams::BEps { dims, .. } => *dims,
            _ => 1,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            FunctionalParams::FBeta { hurst, beta } => 1.0 / (2.0 * beta + 2.0 * hurst + 1.0),
            FunctionalParams::LEps { eps, .. } => (1.0 / eps).ln(),
            FunctionalParams::ABeta { betas } => betas.iter().map(|b| 1.0 / (2.0 * b + 2.0)).product(),
            FunctionalParams::BEps { dims, eps } => (1.0 / eps).ln().powi(*dims as i32),
        }
    }

    /// Factor `c` with normalized statistic `= c · (functional − mean)`.
    pub fn normalization(&self) -> f64 {
        match self {
            FunctionalParams::FBeta { hurst, beta } => (2.0 * beta + 2.0 * hurst + 1.0).sqrt(),
            FunctionalParams::LEps { eps, .. } => (1.0 / eps).ln().powf(-0.5),
            FunctionalParams::ABeta { betas } => betas.iter().map(|b| (2.0 * b + 2.0).sqrt()).product(),
            FunctionalParams::BEps { dims, eps } => (1.0 / eps).ln().powf(-0.5 * *dims as f64),
        }
    }

    pub fn axis_kernel(&self, axis: usize) -> AxisKernel {
        match self {
            FunctionalParams::FBeta { beta, .. } => AxisKernel::Power { exponent: 2.0 * beta + 1.0 },
            FunctionalParams::LEps { hurst, eps } => AxisKernel::LogCut { hurst: *hurst, eps: *eps },
            FunctionalParams::ABeta { betas } => AxisKernel::Power { exponent: 2.0 * betas[axis] + 1.0 },
            FunctionalParams::BEps { eps, .. } => AxisKernel::InverseCut { eps: *eps },
        }
    }

    /// Errors unless `model` is the process this family is defined on.
    pub fn check_model(&self, model: &CovarianceModel) -> Result<()> {
        let ok = match (self, model) {
            (FunctionalParams::FBeta { hurst, .. } | FunctionalParams::LEps { hurst, .. }, m) => {
                !matches!(m, CovarianceModel::BrownianSheet { .. }) && m.hurst() == Some(*hurst)
            }
            (_, CovarianceModel::BrownianSheet { dims }) => *dims == self.axes(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ModelMismatch(format!("{} with {:?}", self.family(), model)))
        }
    }

    /// Per-axis weight `t^c` on `[cutoff, 1]`, and the exponent `e` of the
    /// second moment `t^e` of the path along that axis.
    fn axis_weight(&self, axis: usize) -> (f64, f64, f64) {
        match self {
            FunctionalParams::FBeta { hurst, beta } => (2.0 * beta, 0.0, 2.0 * hurst),
            FunctionalParams::LEps { hurst, eps } => (-2.0 * hurst - 1.0, *eps, 2.0 * hurst),
            FunctionalParams::ABeta { betas } => (2.0 * betas[axis], 0.0, 1.0),
            FunctionalParams::BEps { eps, .. } => (-2.0, *eps, 1.0),
        }
    }
}

/// One-dimensional factor of a chaos kernel, a function of `m = s ∨ t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisKernel {
    /// `(1 − m^a)/a`, or `−ln m` at `a = 0`.
    Power { exponent: f64 },
    /// `((ε ∨ m)^{−2H} − 1)/(2H)`.
    LogCut { hurst: f64, eps: f64 },
    /// `(ε ∨ m)^{−1} − 1`.
    InverseCut { eps: f64 },
}

impl AxisKernel {
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        let m = s.max(t);
        match *self {
            AxisKernel::Power { exponent } if exponent == 0.0 => -m.ln(),
            AxisKernel::Power { exponent } => -(exponent * m.ln()).exp_m1() / exponent,
            AxisKernel::LogCut { hurst, eps } => (-2.0 * hurst * m.max(eps).ln()).exp_m1() / (2.0 * hurst),
            AxisKernel::InverseCut { eps } => 1.0 / m.max(eps) - 1.0,
        }
    }
}

/// Product kernel `K(s, t) = ∏ kᵢ(sᵢ, tᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosKernel {
    axes: Vec<AxisKernel>,
}

impl ChaosKernel {
    pub fn axes(&self) -> &[AxisKernel] {
        &self.axes
    }

    pub fn eval(&self, s: &[f64], t: &[f64]) -> f64 {
        self.axes.iter().enumerate().map(|(i, k)| k.eval(s[i], t[i])).product()
    }
}

/// Mean and second-chaos kernel of the functional.
pub fn chaos_kernel(p: &FunctionalParams) -> Result<(f64, ChaosKernel)> {
    p.validate()?;
    let axes = (0..p.axes()).map(|i| p.axis_kernel(i)).collect();
    Ok((p.mean(), ChaosKernel { axes }))
}

/// `∫_lo^hi t^c dt` for `0 ≤ lo < hi`; infinite when divergent at 0.
fn power_integral(lo: f64, hi: f64, c: f64) -> f64 {
    if lo == 0.0 {
        return if c > -1.0 { hi.powf(c + 1.0) / (c + 1.0) } else { f64::INFINITY };
    }
    if c == -1.0 {
        return (hi / lo).ln();
    }
    hi.powf(c + 1.0) * -((c + 1.0) * (lo / hi).ln()).exp_m1() / (c + 1.0)
}

/// Quadrature weights at the grid nodes for `∫_cutoff^1 t^c X_t² dt`.
///
/// Each cell's exact weight integral is split evenly between its end nodes.
/// When that integral diverges on the first cell `[0, t₁]`, the path is
/// extrapolated by its second-moment scaling `E X_t² ∝ t^e`, which puts
/// `t₁^{c+1}/(c+e+1)` on node `t₁`.
fn node_weights(grid: &Grid, c: f64, cutoff: f64, e: f64) -> Vec<f64> {
    let nodes = grid.nodes();
    let mut w = vec![0.0; nodes.len()];
    for k in 0..grid.cells() {
        let (a, b) = grid.cell(k);
        let lo = a.max(cutoff);
        if lo >= b {
            continue;
        }
        let integral = power_integral(lo, b, c);
        if integral.is_finite() {
            w[k] += 0.5 * integral;
            w[k + 1] += 0.5 * integral;
        } else {
            w[k + 1] += b.powf(c + 1.0) / (c + e + 1.0);
        }
    }
    w
}

/// The functional computed from the node values of a path.
pub fn direct_evaluate(p: &FunctionalParams, path: &PathSample) -> Result<f64> {
    p.validate()?;
    p.check_model(path.model())?;
    let weights: Vec<Vec<f64>> = (0..p.axes())
        .map(|i| {
            let (c, cutoff, e) = p.axis_weight(i);
            node_weights(path.grid(), c, cutoff, e)
        })
        .collect();
    let npa = path.nodes_per_axis();
    let axes = p.axes();
    let total = path
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(flat, v)| {
            let idx = multi_index(flat, npa, axes);
            let w: f64 = idx.iter().enumerate().map(|(i, &k)| weights[i][k]).product();
            w * v * v
        })
        .sum();
    Ok(total)
}

#[derive(Debug, Clone)]
enum Representation {
    Dense(SymTensor),
    /// Per-axis coordinates of a product kernel on a sheet.
    Kronecker(Vec<SymTensor>),
}

/// A functional prepared on an embedding: the embedded kernel, its spectrum
/// and the normalization, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct StatisticPlan {
    params: FunctionalParams,
    mean: f64,
    normalization: f64,
    repr: Representation,
    operator: HSOperator,
}

impl StatisticPlan {
    pub fn new(p: &FunctionalParams, emb: &GridEmbedding) -> Result<Self> {
        let (mean, kernel) = chaos_kernel(p)?;
        p.check_model(emb.model())?;
        let (repr, operator) = if p.is_sheet() {
            let factors = kernel
                .axes()
                .iter()
                .map(|k| embed_axis_kernel(|s, t| k.eval(s, t), emb))
                .collect::<Result<Vec<_>>>()?;
            let ops = factors.iter().map(HSOperator::from_kernel).collect::<Result<Vec<_>>>()?;
            (Representation::Kronecker(factors), HSOperator::kronecker(&ops))
        } else {
            let m = embed_kernel2(|s, t| kernel.eval(s, t), emb)?;
            let op = HSOperator::from_kernel(&m)?;
            (Representation::Dense(m), op)
        };
        Ok(StatisticPlan { params: p.clone(), mean, normalization: p.normalization(), repr, operator })
    }

    pub fn params(&self) -> &FunctionalParams {
        &self.params
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn generator_count(&self) -> usize {
        self.operator.dim()
    }

    /// Embedded kernel of a one-parameter functional.
    pub fn kernel_tensor(&self) -> Option<&SymTensor> {
        match &self.repr {
            Representation::Dense(m) => Some(m),
            Representation::Kronecker(_) => None,
        }
    }

    /// Per-axis factors of a sheet functional's kernel.
    pub fn axis_factors(&self) -> Option<&[SymTensor]> {
        match &self.repr {
            Representation::Dense(_) => None,
            Representation::Kronecker(f) => Some(f),
        }
    }

    /// Operator of the unnormalized kernel.
    pub fn operator(&self) -> &HSOperator {
        &self.operator
    }

    /// `I₂(K)(ξ)`.
    pub fn chaos_value(&self, xi: &GaussianSample) -> Result<f64> {
        match &self.repr {
            Representation::Dense(m) => eval_integral(m, xi),
            Representation::Kronecker(factors) => {
                ensure_dim(self.generator_count(), xi.len())?;
                let y = kronecker_apply(factors, xi.as_slice());
                let quad: f64 = y.iter().zip(xi.as_slice()).map(|(a, b)| a * b).sum();
                let trace: f64 = factors.iter().map(trace2).product();
                Ok(quad - trace)
            }
        }
    }

    /// Functional value by the chaos route, `mean + I₂(K)(ξ)`.
    pub fn functional_value(&self, xi: &GaussianSample) -> Result<f64> {
        Ok(self.mean + self.chaos_value(xi)?)
    }

    /// Normalized, centered statistic at `ξ`.
    pub fn statistic(&self, xi: &GaussianSample) -> Result<f64> {
        Ok(self.normalization * self.chaos_value(xi)?)
    }

    /// A draw of the normalized statistic in the eigenbasis of the kernel;
    /// same law as [`StatisticPlan::statistic`] at a fresh sample.
    pub fn sample_spectral<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.normalization * self.operator.sample(rng)
    }

    /// Exact variance of the normalized statistic on this embedding.
    pub fn exact_variance(&self) -> f64 {
        self.normalization.powi(2) * self.operator.variance()
    }

    pub fn exact_excess_kurtosis(&self) -> f64 {
        self.operator.excess_kurtosis()
    }

    /// `‖f ⊗₁ f‖² / ‖f‖⁴`.
    pub fn contraction_ratio(&self) -> f64 {
        self.operator.contraction_ratio()
    }
}

fn trace2(f: &SymTensor) -> f64 {
    (0..f.dim()).map(|i| f.get(&[i, i])).sum()
}

/// `(A₁ ⊗ .. ⊗ Aₙ) x` by successive mode products.
fn kronecker_apply(factors: &[SymTensor], x: &[f64]) -> Vec<f64> {
    let d = factors[0].dim();
    let n = factors.len();
    let mut cur = x.to_vec();
    for (k, a) in factors.iter().enumerate() {
        let a = a.coeffs();
        let inner = d.pow((n - 1 - k) as u32);
        let outer = d.pow(k as u32);
        let mut next = vec![0.0; cur.len()];
        for o in 0..outer {
            for i in 0..d {
                let dst = &mut next[(o * d + i) * inner..(o * d + i + 1) * inner];
                for j in 0..d {
                    let aij = a[i * d + j];
                    if aij == 0.0 {
                        continue;
                    }
                    let src = &cur[(o * d + j) * inner..(o * d + j + 1) * inner];
                    for (y, v) in dst.iter_mut().zip(src) {
                        *y += aij * v;
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

/// Normalized statistic at `xi` by the chaos route; builds a
/// [`StatisticPlan`] per call.
pub fn normalized_statistic(p: &FunctionalParams, xi: &GaussianSample, emb: &GridEmbedding) -> Result<f64> {
    StatisticPlan::new(p, emb)?.statistic(xi)
}

/// Exact variance of the normalized `A_β` statistic in the continuum,
/// `2 ∏ 1/(2βᵢ+3)`: each axis kernel has `‖k‖² = 1/((2β+2)(2β+3))`.
pub fn variance_closed_form_sheet(betas: &[f64]) -> Result<f64> {
    FunctionalParams::a_beta(betas.to_vec())?;
    Ok(2.0 * betas.iter().map(|&b| 1.0 / (2.0 * b + 3.0)).product::<f64>())
}

/// Exact variance of the normalized `B_ε` statistic in the continuum.
pub fn variance_closed_form_sheet_eps(dims: usize, eps: f64) -> Result<f64> {
    FunctionalParams::b_eps(dims, eps)?;
    let log = (1.0 / eps).ln();
    let per_axis = (1.0 - eps).powi(2) + 2.0 * (log - 2.0 * (1.0 - eps) + 0.5 * (1.0 - eps * eps));
    Ok(2.0 * (per_axis / log).powi(dims as i32))
}
