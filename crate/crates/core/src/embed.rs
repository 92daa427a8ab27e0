//! Finite orthonormal coordinates for Brownian motion, fractional Brownian
//! motion and the Brownian sheet.
//!
//! The generators are the increments of the process over the cells of a grid
//! (cell indicators for the sheet). Their Gram matrix `G` is factored as
//! `G = L·Lᵀ`, so that increments are `L·ξ` for a [`GaussianSample`] `ξ` and
//! a kernel with collocation matrix `C` has orthonormal coordinates `Lᵀ·C·L`.
//!
//! fBm increment covariances come from the four-point difference of the
//! covariance function `R_H`, never from the singular density
//! `|r − u|^{2H−2}`. The factorization is carried out on the correlation
//! matrix `S⁻¹GS⁻¹` (`S` the increment standard deviations), which keeps
//! geometric grids with cells spanning hundreds of octaves well conditioned.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::chaos::GaussianSample;
use crate::error::{ensure_dim, Error, Result};
use crate::tensor::SymTensor;

const JITTER_START: f64 = 1e-14;
const JITTER_MAX: f64 = 1e-10;
const KERNEL_SYMMETRY_TOL: f64 = 1e-12;

/// Covariance structure of the driving Gaussian process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovarianceModel {
    BrownianMotion,
    FractionalBm { hurst: f64 },
    BrownianSheet { dims: usize },
}

impl CovarianceModel {
    pub fn fractional(hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidParameter(format!("Hurst parameter {hurst} outside (0, 1)")));
        }
        Ok(CovarianceModel::FractionalBm { hurst })
    }

    pub fn sheet(dims: usize) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidParameter("sheet needs at least one axis".into()));
        }
        Ok(CovarianceModel::BrownianSheet { dims })
    }

    /// Number of time axes (1 for processes, `n` for the sheet).
    pub fn axes(&self) -> usize {
        match self {
            CovarianceModel::BrownianSheet { dims } => *dims,
            _ => 1,
        }
    }

    /// Hurst parameter of a one-parameter process; Brownian motion is `1/2`.
    pub fn hurst(&self) -> Option<f64> {
        match self {
            CovarianceModel::BrownianMotion => Some(0.5),
            CovarianceModel::FractionalBm { hurst } => Some(*hurst),
            CovarianceModel::BrownianSheet { .. } => None,
        }
    }

    /// `E[X(s) X(t)]`; `s` and `t` carry one coordinate per axis.
    pub fn covariance(&self, s: &[f64], t: &[f64]) -> f64 {
        match self {
            CovarianceModel::BrownianMotion => s[0].min(t[0]),
            CovarianceModel::FractionalBm { hurst } => fbm_covariance(*hurst, s[0], t[0]),
            CovarianceModel::BrownianSheet { .. } => s.iter().zip(t).map(|(a, b)| a.min(*b)).product(),
        }
    }
}

/// `R_H(t, s) = ½(s^{2H} + t^{2H} − |t − s|^{2H})`.
pub fn fbm_covariance(hurst: f64, t: f64, s: f64) -> f64 {
    let e = 2.0 * hurst;
    0.5 * (s.powf(e) + t.powf(e) - (t - s).abs().powf(e))
}

/// Partition `0 = t_0 < t_1 < .. < t_d = 1` of the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
}

impl Grid {
    pub fn uniform(cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidParameter("grid needs at least one cell".into()));
        }
        let nodes = (0..=cells).map(|k| k as f64 / cells as f64).collect();
        Ok(Grid { nodes })
    }

    /// `cells` cells refining geometrically toward the origin: node `k ≥ 1`
    /// sits at `2^{-(cells-k)/cells_per_octave}` and the first cell is
    /// `[0, t_1]`.
    pub fn geometric(cells: usize, cells_per_octave: usize) -> Result<Self> {
        if cells == 0 || cells_per_octave == 0 {
            return Err(Error::InvalidParameter("geometric grid needs positive sizes".into()));
        }
        let first = 2f64.powf(-((cells - 1) as f64) / cells_per_octave as f64);
        if first < 1e-300 {
            return Err(Error::InvalidParameter(format!(
                "geometric grid with {cells} cells at {cells_per_octave} per octave underflows"
            )));
        }
        let mut nodes = Vec::with_capacity(cells + 1);
        nodes.push(0.0);
        nodes.extend((1..=cells).map(|k| 2f64.powf(-((cells - k) as f64) / cells_per_octave as f64)));
        Ok(Grid { nodes })
    }

    /// One cell `[0, eps]`, then `cells − 1` geometric cells over `[eps, 1]`.
    pub fn anchored(eps: f64, cells: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("anchored grid needs eps in (0,1), got {eps}")));
        }
        if cells < 2 {
            return Err(Error::InvalidParameter("anchored grid needs at least two cells".into()));
        }
        let k = cells - 1;
        let mut nodes = Vec::with_capacity(k + 2);
        nodes.push(0.0);
        let log_eps = eps.ln();
        nodes.extend((0..k).map(|j| (log_eps * (1.0 - j as f64 / k as f64)).exp()));
        nodes.push(1.0);
        Ok(Grid { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        let ok = nodes.len() >= 2
            && nodes[0] == 0.0
            && *nodes.last().unwrap() == 1.0
            && nodes.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::InvalidParameter("grid nodes must increase strictly from 0 to 1".into()));
        }
        Ok(Grid { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.nodes[i], self.nodes[i + 1])
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Grid generators of a covariance model with their factored Gram matrix.
#[derive(Debug, Clone)]
pub struct GridEmbedding {
    model: CovarianceModel,
    grid: Grid,
    /// Standard deviation of each generator.
    scales: Vec<f64>,
    /// Lower Cholesky factor of the generator correlation matrix; `None`
    /// when generators are independent.
    corr_factor: Option<DMatrix<f64>>,
    jitter: f64,
}

/// Embedding of `model` on a uniform grid with `cells` cells per axis.
pub fn build_embedding(model: CovarianceModel, cells: usize) -> Result<GridEmbedding> {
    GridEmbedding::on_grid(model, Grid::uniform(cells)?)
}

impl GridEmbedding {
    pub fn on_grid(model: CovarianceModel, grid: Grid) -> Result<Self> {
        let widths = grid.widths();
        match model {
            CovarianceModel::BrownianMotion => Ok(Self::independent(model, grid, widths.iter().map(|w| w.sqrt()).collect())),
            CovarianceModel::FractionalBm { hurst } => {
                CovarianceModel::fractional(hurst)?;
                if hurst == 0.5 {
                    return Ok(Self::independent(model, grid, widths.iter().map(|w| w.sqrt()).collect()));
                }
                let d = grid.cells();
                let scales: Vec<f64> = widths.iter().map(|w| w.powf(hurst)).collect();
                let mut corr = DMatrix::<f64>::identity(d, d);
                for i in 0..d {
                    for j in 0..i {
                        let r = increment_correlation(hurst, grid.cell(i), grid.cell(j));
                        corr[(i, j)] = r;
                        corr[(j, i)] = r;
                    }
                }
                let (factor, jitter) = cholesky_with_jitter(corr)?;
                Ok(GridEmbedding { model, grid, scales, corr_factor: Some(factor), jitter })
            }
            CovarianceModel::BrownianSheet { dims } => {
                CovarianceModel::sheet(dims)?;
                let total = grid.cells().checked_pow(dims as u32).ok_or_else(|| {
                    Error::InvalidParameter(format!("{} cells over {dims} axes overflows", grid.cells()))
                })?;
                let scales = (0..total)
                    .map(|flat| multi_index(flat, grid.cells(), dims).iter().map(|&c| widths[c].sqrt()).product())
                    .collect();
                Ok(Self::independent(model, grid, scales))
            }
        }
    }

    fn independent(model: CovarianceModel, grid: Grid, scales: Vec<f64>) -> Self {
        GridEmbedding { model, grid, scales, corr_factor: None, jitter: 0.0 }
    }

    pub fn model(&self) -> &CovarianceModel {
        &self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn axes(&self) -> usize {
        self.model.axes()
    }

    /// Number of generators (`cells^axes`); the ambient dimension of
    /// embedded tensors.
    pub fn generator_count(&self) -> usize {
        self.scales.len()
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Diagonal jitter (relative to unit correlations) needed to factor.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn has_independent_generators(&self) -> bool {
        self.corr_factor.is_none()
    }

    /// Gram matrix of the generators, `G_ij = E[ΔX_i ΔX_j]`.
    pub fn gram(&self) -> DMatrix<f64> {
        let d = self.generator_count();
        match self.model {
            CovarianceModel::FractionalBm { hurst } if hurst != 0.5 => DMatrix::from_fn(d, d, |i, j| {
                let r = if i == j { 1.0 } else { increment_correlation(hurst, self.grid.cell(i), self.grid.cell(j)) };
                r * self.scales[i] * self.scales[j]
            }),
            _ => DMatrix::from_fn(d, d, |i, j| if i == j { self.scales[i].powi(2) } else { 0.0 }),
        }
    }

    /// Lower-triangular `L` with `gram ≈ L·Lᵀ`.
    pub fn factor(&self) -> DMatrix<f64> {
        let d = self.generator_count();
        match &self.corr_factor {
            Some(l) => DMatrix::from_fn(d, d, |i, j| self.scales[i] * l[(i, j)]),
            None => DMatrix::from_fn(d, d, |i, j| if i == j { self.scales[i] } else { 0.0 }),
        }
    }

    /// Generator increments `L·ξ`.
    pub fn increments(&self, xi: &GaussianSample) -> Result<Vec<f64>> {
        ensure_dim(self.generator_count(), xi.len())?;
        let x = xi.as_slice();
        Ok(match &self.corr_factor {
            Some(l) => {
                let y = l * DVector::from_column_slice(x);
                y.iter().zip(&self.scales).map(|(v, s)| v * s).collect()
            }
            None => x.iter().zip(&self.scales).map(|(v, s)| v * s).collect(),
        })
    }

    /// Per-axis embedding of a sheet (Brownian motion on the same grid);
    /// the sheet's generators are products of these.
    pub fn axis_embedding(&self) -> GridEmbedding {
        let scales = self.grid.widths().iter().map(|w| w.sqrt()).collect();
        Self::independent(CovarianceModel::BrownianMotion, self.grid.clone(), scales)
    }

    /// Collocation points (cell midpoints), one coordinate per axis.
    pub fn collocation_points(&self) -> Vec<Vec<f64>> {
        let mids = self.grid.midpoints();
        let axes = self.axes();
        (0..self.generator_count())
            .map(|flat| multi_index(flat, self.grid.cells(), axes).iter().map(|&c| mids[c]).collect())
            .collect()
    }
}

/// Row-major multi-index of `flat` over `axes` axes of `cells` cells each.
pub(crate) fn multi_index(mut flat: usize, cells: usize, axes: usize) -> Vec<usize> {
    let mut idx = vec![0; axes];
    for slot in idx.iter_mut().rev() {
        *slot = flat % cells;
        flat /= cells;
    }
    idx
}

fn cholesky_with_jitter(corr: DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if let Some(ch) = Cholesky::new(corr.clone()) {
        return Ok((ch.l(), 0.0));
    }
    let d = corr.nrows();
    // trace/d is 1 for a correlation matrix
    let mut eps = JITTER_START;
    while eps <= JITTER_MAX {
        let mut shifted = corr.clone();
        for i in 0..d {
            shifted[(i, i)] += eps;
        }
        if let Some(ch) = Cholesky::new(shifted) {
            return Ok((ch.l(), eps));
        }
        eps *= 2.0;
    }
    Err(Error::Degenerate(format!("Gram matrix of {d} generators is not positive definite up to jitter {JITTER_MAX:e}")))
}

const GAUSS_LEGENDRE_10: [(f64, f64); 10] = [
    (-0.973_906_528_517_171_7, 0.066_671_344_308_688_14),
    (-0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (-0.679_409_568_299_024_4, 0.219_086_362_515_982),
    (-0.433_395_394_129_247_2, 0.269_266_719_309_996_35),
    (-0.148_874_338_981_631_2, 0.295_524_224_714_752_87),
    (0.148_874_338_981_631_2, 0.295_524_224_714_752_87),
    (0.433_395_394_129_247_2, 0.269_266_719_309_996_35),
    (0.679_409_568_299_024_4, 0.219_086_362_515_982),
    (0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (0.973_906_528_517_171_7, 0.066_671_344_308_688_14),
];

/// `g(y + h) − g(y)` for `g(u) = u^{2H}`, without cancellation when `h ≪ y`.
fn power_step(hurst: f64, y: f64, h: f64) -> f64 {
    let e = 2.0 * hurst;
    if y == 0.0 {
        h.powf(e)
    } else {
        y.powf(e) * (e * (h / y).ln_1p()).exp_m1()
    }
}

/// Correlation of fBm increments over two cells of `[0, 1]`.
///
/// For disjoint cells the covariance is the second difference
/// `½[g(x+a+b) − g(x+a) − g(x+b) + g(x)]`, `g(u) = u^{2H}`, with gap `x` and
/// widths `a`, `b`. Well-separated cells use the integral form
/// `½∫₀^a∫₀^b g''(x+u+v)` by Gauss–Legendre; nearby cells use cancellation-free
/// first differences.
pub(crate) fn increment_correlation(hurst: f64, ci: (f64, f64), cj: (f64, f64)) -> f64 {
    if ci == cj {
        return 1.0;
    }
    if hurst == 0.5 {
        return 0.0;
    }
    let (late, early) = if ci.0 >= cj.1 { (ci, cj) } else { (cj, ci) };
    let x = late.0 - early.1;
    let a = late.1 - late.0;
    let b = early.1 - early.0;
    let scale = a.powf(hurst) * b.powf(hurst);
    if x >= a + b {
        let curvature = 2.0 * hurst * (2.0 * hurst - 1.0);
        let mut mean = 0.0;
        for &(zu, wu) in &GAUSS_LEGENDRE_10 {
            let u = 0.5 * (zu + 1.0) * a;
            for &(zv, wv) in &GAUSS_LEGENDRE_10 {
                let v = 0.5 * (zv + 1.0) * b;
                mean += wu * wv * (x + u + v).powf(2.0 * hurst - 2.0);
            }
        }
        mean *= 0.25 * curvature;
        // ½·a·b·mean / (a^H b^H)
        0.5 * a.powf(1.0 - hurst) * b.powf(1.0 - hurst) * mean
    } else {
        let (small, large) = if a <= b { (a, b) } else { (b, a) };
        0.5 * (power_step(hurst, x + large, small) - power_step(hurst, x, small)) / scale
    }
}

/// Values of a sample path at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    /// Row-major over `(cells + 1)^axes` nodes; zero on the axes.
    values: Vec<f64>,
    nodes_per_axis: usize,
    axes: usize,
    model: CovarianceModel,
    grid: Grid,
    xi: GaussianSample,
}

impl PathSample {
    /// A path with prescribed node values (for synthetic checks); `xi` is
    /// left empty.
    pub fn from_values(values: Vec<f64>, model: CovarianceModel, grid: Grid) -> Result<Self> {
        let axes = model.axes();
        let nodes_per_axis = grid.nodes().len();
        ensure_dim(nodes_per_axis.pow(axes as u32), values.len())?;
        Ok(PathSample { values, nodes_per_axis, axes, model, grid, xi: GaussianSample::zeros(0) })
    }

    pub fn model(&self) -> &CovarianceModel {
        &self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn axes(&self) -> usize {
        self.axes
    }

    pub fn xi(&self) -> &GaussianSample {
        &self.xi
    }

    pub fn value_at(&self, node: &[usize]) -> f64 {
        let flat = node.iter().fold(0, |acc, &k| acc * self.nodes_per_axis + k);
        self.values[flat]
    }

    /// Value at the far corner `(1, .., 1)`.
    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Path of the embedded process driven by `xi`: increments `L·ξ`, summed
/// cumulatively along every axis.
pub fn sample_path(emb: &GridEmbedding, xi: &GaussianSample) -> Result<PathSample> {
    let incr = emb.increments(xi)?;
    let cells = emb.grid().cells();
    let axes = emb.axes();
    let npa = cells + 1;
    let mut values = vec![0.0; npa.pow(axes as u32)];
    for (flat, v) in incr.iter().enumerate() {
        let idx = multi_index(flat, cells, axes);
        let at = idx.iter().fold(0, |acc, &c| acc * npa + c + 1);
        values[at] = *v;
    }
    // cumulative sums along each axis in turn
    for axis in 0..axes {
        let stride = npa.pow((axes - 1 - axis) as u32);
        for start in 0..values.len() {
            let pos = (start / stride) % npa;
            if pos > 0 {
                values[start] += values[start - stride];
            }
        }
    }
    Ok(PathSample { values, nodes_per_axis: npa, axes, model: emb.model, grid: emb.grid.clone(), xi: xi.clone() })
}

/// Orthonormal coordinates of a symmetric kernel: `M = Lᵀ·C·L` with
/// `C_ij = K(mid_i, mid_j)` at cell midpoints.
pub fn embed_kernel2<K>(kernel: K, emb: &GridEmbedding) -> Result<SymTensor>
where
    K: Fn(&[f64], &[f64]) -> f64,
{
    let pts = emb.collocation_points();
    let d = pts.len();
    let c = DMatrix::from_fn(d, d, |i, j| kernel(&pts[i], &pts[j]));
    embed_collocation(c, emb)
}

/// Per-axis kernel `k(s, t)` embedded on the one-dimensional grid of `emb`
/// (Brownian motion, fBm, or one axis of a sheet).
pub fn embed_axis_kernel<K>(kernel: K, emb: &GridEmbedding) -> Result<SymTensor>
where
    K: Fn(f64, f64) -> f64,
{
    let mids = emb.grid().midpoints();
    let d = mids.len();
    let c = DMatrix::from_fn(d, d, |i, j| kernel(mids[i], mids[j]));
    match emb.model() {
        CovarianceModel::BrownianSheet { .. } => embed_collocation(c, &emb.axis_embedding()),
        _ => embed_collocation(c, emb),
    }
}

fn embed_collocation(mut c: DMatrix<f64>, emb: &GridEmbedding) -> Result<SymTensor> {
    let d = c.nrows();
    ensure_dim(emb.generator_count(), d)?;
    let max_abs = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !max_abs.is_finite() {
        return Err(Error::InvalidParameter("kernel is not finite at the collocation points".into()));
    }
    let mut asym = 0.0f64;
    for i in 0..d {
        for j in 0..i {
            asym = asym.max((c[(i, j)] - c[(j, i)]).abs());
        }
    }
    if asym > KERNEL_SYMMETRY_TOL * max_abs.max(f64::MIN_POSITIVE) {
        return Err(Error::NonSymmetricKernel { asymmetry: asym });
    }
    let s = emb.scales();
    for j in 0..d {
        for i in 0..d {
            c[(i, j)] *= s[i] * s[j];
        }
    }
    let m = match &emb.corr_factor {
        Some(l) => l.transpose() * c * l,
        None => c,
    };
    // nalgebra is column-major; M is symmetric up to rounding either way
    let data: Vec<f64> = m.transpose().as_slice().to_vec();
    SymTensor::from_matrix(d, data)
}

/// Kronecker product of per-axis order-2 tensors, in the sheet's row-major
/// generator order.
pub fn kronecker(factors: &[SymTensor]) -> Result<SymTensor> {
    let mut dim = 1usize;
    let mut data = vec![1.0];
    for f in factors {
        if f.order() != 2 {
            return Err(Error::OrderMismatch { expected: 2, found: f.order() });
        }
        let fd = f.dim();
        let nd = dim * fd;
        let mut next = vec![0.0; nd * nd];
        for i in 0..dim {
            for j in 0..dim {
                let a = data[i * dim + j];
                for k in 0..fd {
                    for l in 0..fd {
                        next[(i * fd + k) * nd + (j * fd + l)] = a * f.coeffs()[k * fd + l];
                    }
                }
            }
        }
        dim = nd;
        data = next;
    }
    SymTensor::from_matrix(dim, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_corr(h: f64, ci: (f64, f64), cj: (f64, f64)) -> f64 {
        let r = |t: f64, s: f64| fbm_covariance(h, t, s);
        let cov = r(ci.1, cj.1) - r(ci.1, cj.0) - r(ci.0, cj.1) + r(ci.0, cj.0);
        cov / ((ci.1 - ci.0) * (cj.1 - cj.0)).powf(h)
    }

    #[test]
    fn brownian_gram_is_scaled_identity() {
        let emb = build_embedding(CovarianceModel::BrownianMotion, 5).unwrap();
        let g = emb.gram();
        for i in 0..5 {
            for j in 0..5 {
                let expected = if i == j { 0.2 } else { 0.0 };
                assert!((g[(i, j)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_cell_fbm_has_unit_variance() {
        let emb = build_embedding(CovarianceModel::fractional(0.3).unwrap(), 1).unwrap();
        assert!((emb.gram()[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_cell_fbm_off_diagonal() {
        let emb = build_embedding(CovarianceModel::fractional(0.75).unwrap(), 2).unwrap();
        let expected = 0.5 * (1.0 - 2.0 * 0.5f64.powf(1.5));
        assert!((emb.gram()[(0, 1)] - expected).abs() < 1e-14);
        assert!((expected - 0.146_446_6).abs() < 1e-6);
    }

    #[test]
    fn correlation_matches_four_point_formula_on_moderate_cells() {
        for &h in &[0.3, 0.55, 0.75, 0.9] {
            let grid = Grid::uniform(16).unwrap();
            for i in 0..16 {
                for j in 0..i {
                    let a = increment_correlation(h, grid.cell(i), grid.cell(j));
                    let b = naive_corr(h, grid.cell(i), grid.cell(j));
                    assert!((a - b).abs() < 1e-11, "h={h} i={i} j={j}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn correlation_stays_accurate_across_scales() {
        // a cell of width b = 2^-41 against [1/2, 1]: to first order in b the
        // covariance is ½·b·(g'(1) − g'(1/2)), g'(u) = 2H u^{2H-1}
        let h = 0.75;
        let tiny = (2f64.powi(-41), 2f64.powi(-40));
        let r = increment_correlation(h, (0.5, 1.0), tiny);
        let b = tiny.1 - tiny.0;
        let cov = 0.5 * b * 1.5 * (1.0 - 0.5f64.sqrt());
        let expected = cov / (0.5 * b).powf(h);
        assert!((r - expected).abs() < 1e-8 * expected, "{r} vs {expected}");
    }

    #[test]
    fn geometric_grid_embedding_factors() {
        let grid = Grid::geometric(120, 1).unwrap();
        let emb = GridEmbedding::on_grid(CovarianceModel::fractional(0.75).unwrap(), grid).unwrap();
        let l = emb.factor();
        let g = emb.gram();
        // compare in correlation units: every entry relative to its diagonal scale
        let s = emb.scales();
        let r = &l * l.transpose();
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let err = (r[(i, j)] - g[(i, j)]).abs() / (s[i] * s[j]);
                assert!(err < 1e-9, "({i},{j}) {err}");
            }
        }
    }

    #[test]
    fn anchored_grid_starts_with_eps_cell() {
        let g = Grid::anchored(1e-3, 40).unwrap();
        assert_eq!(g.cells(), 40);
        assert_eq!(g.nodes()[0], 0.0);
        assert!((g.nodes()[1] - 1e-3).abs() < 1e-15);
        assert_eq!(*g.nodes().last().unwrap(), 1.0);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::uniform(0).is_err());
        assert!(Grid::from_nodes(vec![0.0, 0.5, 0.4, 1.0]).is_err());
        assert!(Grid::geometric(5000, 1).is_err());
        assert!(CovarianceModel::fractional(1.0).is_err());
        assert!(CovarianceModel::sheet(0).is_err());
    }

    #[test]
    fn zero_sample_gives_flat_path() {
        let emb = build_embedding(CovarianceModel::fractional(0.7).unwrap(), 8).unwrap();
        let path = sample_path(&emb, &GaussianSample::zeros(8)).unwrap();
        assert!(path.values().iter().all(|&v| v == 0.0));
        assert_eq!(path.values().len(), 9);
    }

    #[test]
    fn sheet_path_is_cumulative_in_both_axes() {
        let emb = build_embedding(CovarianceModel::sheet(2).unwrap(), 2).unwrap();
        let xi = GaussianSample::new(vec![2.0, 4.0, 6.0, 8.0]);
        let path = sample_path(&emb, &xi).unwrap();
        // every cell has area 1/4, scale 1/2
        let close = |a: f64, b: f64| (a - b).abs() < 1e-14;
        assert!(close(path.value_at(&[1, 1]), 1.0));
        assert!(close(path.value_at(&[1, 2]), 3.0));
        assert!(close(path.value_at(&[2, 1]), 4.0));
        assert!(close(path.terminal(), 10.0));
        assert_eq!(path.value_at(&[0, 2]), 0.0);
    }

    #[test]
    fn constant_kernel_on_brownian_grid() {
        let d = 6;
        let emb = build_embedding(CovarianceModel::BrownianMotion, d).unwrap();
        let m = embed_kernel2(|_, _| 1.0, &emb).unwrap();
        for v in m.coeffs() {
            assert!((v - 1.0 / d as f64).abs() < 1e-15);
        }
        assert!((m.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_kernel_is_rejected() {
        let emb = build_embedding(CovarianceModel::BrownianMotion, 4).unwrap();
        let err = embed_kernel2(|s, t| s[0] - 2.0 * t[0], &emb).unwrap_err();
        assert!(matches!(err, Error::NonSymmetricKernel { .. }));
    }

    #[test]
    fn increments_reject_wrong_length() {
        let emb = build_embedding(CovarianceModel::BrownianMotion, 4).unwrap();
        assert!(sample_path(&emb, &GaussianSample::zeros(3)).is_err());
    }
}
