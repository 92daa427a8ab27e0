//! The acceptance suite: ten numbered criteria with pinned tolerances,
//! shared by the `validate` command and the acceptance test target.

pub mod oracle;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

use crate::chaos::{
    eval_integral, excess_fourth_moment, fourth_moment_exact, product_formula, second_moment_exact,
    GaussianSample,
};
use crate::diagnostics::{
    ks_against_std_normal, mean_with_se, summarize, theorem_one_report, HSOperator, KernelSequence, LimitDirection,
};
use crate::embed::{embed_kernel2, sample_path, CovarianceModel, Grid, GridEmbedding};
use crate::error::{Error, Result};
use crate::functionals::{direct_evaluate, variance_closed_form_sheet, FunctionalParams, StatisticPlan};
use crate::rng::{gaussian_sample, par_draws, stream_rng};
use crate::tensor::{contraction_norm_sq, symmetrize, SymTensor, Tensor};

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, Value>,
}

impl CriterionResult {
    /// `[PASS] 3 name: detail`
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("[{tag}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

pub const CRITERIA: [(u32, &str); 10] = [
    (1, "product-formula exactness"),
    (2, "exact-moment oracle"),
    (3, "fourth-moment positive family"),
    (4, "second-chaos negative test"),
    (5, "spectral bridge"),
    (6, "path/chaos coupling"),
    (7, "sheet quantitative limit"),
    (8, "fBm trend suite"),
    (9, "noncentral trend"),
    (10, "determinism"),
];

/// Runs the criteria in `ids` (all when empty) in order. A criterion that
/// errors is reported as failed with the error text.
pub fn run(ids: &[u32], seed: u64) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .filter(|(id, _)| ids.is_empty() || ids.contains(id))
        .map(|&(id, name)| {
            run_criterion(id, seed).unwrap_or_else(|e| CriterionResult {
                id,
                name: name.to_string(),
                passed: false,
                detail: format!("error: {e}"),
                metrics: BTreeMap::new(),
            })
        })
        .collect()
}

pub fn run_criterion(id: u32, seed: u64) -> Result<CriterionResult> {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown criterion {id}")))?
        .1;
    let mut m = Metrics::default();
    let (passed, detail) = match id {
        1 => product_formula_exactness(seed, &mut m)?,
        2 => exact_moment_oracle(seed, &mut m)?,
        3 => positive_family(seed, &mut m)?,
        4 => negative_test(seed, &mut m)?,
        5 => spectral_bridge(seed, &mut m)?,
        6 => coupling(seed, &mut m)?,
        7 => sheet_limit(seed, &mut m)?,
        8 => fbm_trends(seed, &mut m)?,
        9 => noncentral_trend(seed, &mut m)?,
        _ => determinism_probe(seed, &mut m)?,
    };
    Ok(CriterionResult { id, name: name.to_string(), passed, detail, metrics: m.0 })
}

#[derive(Default)]
struct Metrics(BTreeMap<String, Value>);

impl Metrics {
    fn put(&mut self, key: impl Into<String>, v: impl Serialize) {
        self.0.insert(key.into(), json!(v));
    }
}

fn random_sym<R: Rng>(order: usize, dim: usize, rng: &mut R) -> SymTensor {
    let coeffs = (0..dim.pow(order as u32)).map(|_| rng.sample(StandardNormal)).collect();
    symmetrize(&Tensor::new(order, dim, coeffs).expect("finite coefficients"))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn sym_cross() -> SymTensor {
    symmetrize(&Tensor::basis(2, &[0, 1]).expect("valid basis tuple"))
}

fn product_formula_exactness(seed: u64, m: &mut Metrics) -> Result<(bool, String)> {
    const CASES: u64 = 200;
    const DRAWS: usize = 100;
    const TOL: f64 = 1e-9;
    let mut worst = 0.0f64;
    for case in 0..CASES {
        let mut rng = stream_rng(seed, "c1/kernels", case);
        let n = rng.random_range(1..=3);
        let k = rng.random_range(1..=3);
        let d = rng.random_range(1..=6);
        let f = random_sym(n, d, &mut rng);
        let g = random_sym(k, d, &mut rng);
        let prod = product_formula(&f, &g)?;
        let errs = par_draws(seed, &format!("c1/xi/{case}"), DRAWS, |rng| {
            let xi = GaussianSample::draw(d, rng);
            let lhs = eval_integral(&f, &xi).unwrap() * eval_integral(&g, &xi).unwrap();
            let rhs = prod.eval(&xi).unwrap();
            (lhs - rhs).abs() / (1.0 + lhs.abs() + rhs.abs())
        });
        worst = errs.into_iter().fold(worst, f64::max);
    }
    m.put("cases", CASES);
    m.put("draws_per_case", DRAWS);
    m.put("max_scaled_error", worst);
    Ok((worst <= TOL, format!("max |I_n I_m - product| / (1 + |.|) = {worst:.2e} over {CASES}x{DRAWS} (tol {TOL:e})")))
}

fn exact_moment_oracle(seed: u64, m: &mut Metrics) -> Result<(bool, String)> {
    const TOL: f64 = 1e-9;
    const MC_N: usize = 200_000;
    let mut kernels = Vec::new();
    for n in 1..=2usize {
        for d in 1..=3usize {
            // every symmetrized basis tensor, then random ones
            for flat in 0..d.pow(n as u32) {
                let idx: Vec<usize> = (0..n).rev().map(|k| flat / d.pow(k as u32) % d).collect();
                kernels.push(symmetrize(&Tensor::basis(d, &idx)?));
            }
            let mut rng = stream_rng(seed, "c2/kernels", (n * 10 + d) as u64);
            for _ in 0..10 {
                kernels.push(random_sym(n, d, &mut rng));
            }
        }
    }
    let mut worst_symbolic = 0.0f64;
    let mut worst_contraction = 0.0f64;
    for f in &kernels {
        let exact = fourth_moment_exact(f);
        worst_symbolic = worst_symbolic.max(rel_err(exact, oracle::fourth_moment(f)));
        worst_contraction = worst_contraction.max(rel_err(exact, oracle::fourth_moment_by_contractions(f)));
    }
    let oracle_ok = worst_symbolic <= TOL && worst_contraction <= TOL;

    let mut mc_pass = 0;
    let mut worst_z = 0.0f64;
    for k in 0..20u64 {
        let mut rng = stream_rng(seed, "c2/mc-kernels", k);
        let n = rng.random_range(1..=3);
        let d = rng.random_range(2..=4);
        let f = random_sym(n, d, &mut rng);
        let sq = par_draws(seed, &format!("c2/mc/{k}"), MC_N, |rng| {
            eval_integral(&f, &GaussianSample::draw(d, rng)).unwrap().powi(2)
        });
        let (mean, se) = mean_with_se(&sq)?;
        let z = (mean - second_moment_exact(&f)).abs() / se;
        worst_z = worst_z.max(z);
        if z <= 4.0 {
            mc_pass += 1;
        }
    }
    m.put("oracle_kernels", kernels.len());
    m.put("max_rel_error_symbolic", worst_symbolic);
    m.put("max_rel_error_contractions", worst_contraction);
    m.put("isometry_mc_within_4se", mc_pass);
    m.put("isometry_max_z", worst_z);
    Ok((
        oracle_ok && mc_pass == 20,
        format!(
            "fourth moment vs symbolic oracle max rel {worst_symbolic:.1e} on {} kernels; isometry MC {mc_pass}/20 within 4 SE (max z {worst_z:.2})",
            kernels.len()
        ),
    ))
}

/// `(1/√k) Σᵢ sym(e_{2i−1} ⊗ e_{2i})` on `2k` coordinates.
pub fn clt_kernel(k: usize) -> Result<SymTensor> {
    let d = 2 * k;
    let c = 0.5 / (k as f64).sqrt();
    let mut coeffs = vec![0.0; d * d];
    for i in 0..k {
        coeffs[(2 * i) * d + 2 * i + 1] = c;
        coeffs[(2 * i + 1) * d + 2 * i] = c;
    }
    SymTensor::from_matrix(d, coeffs)
}

fn positive_family(seed: u64, m: &mut Metrics) -> Result<(bool, String)> {
    const KS_N: usize = 10_000;
    let ks = [4usize, 16, 64, 256];
    let seq = KernelSequence::new("clt", ks.iter().map(|&k| k as f64).collect(), LimitDirection::Increasing, |k| {
        clt_kernel(k as usize)
    });
    let rep = theorem_one_report(&seq, KS_N, seed)?;
    let excess: Vec<f64> = rep.entries.iter().map(|e| e.normalized_excess).collect();
    let contr: Vec<f64> = rep.entries.iter().map(|e| e.contraction_norms[0]).collect();
    let factor = |xs: &[f64]| xs.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
    let (fe, fc) = (factor(&excess), factor(&contr));
    let last_ks = rep.entries.last().and_then(|e| e.ks).expect("MC requested");
    m.put("k", ks);
    m.put("excess", &excess);
    m.put("contraction_norm", &contr);
    m.put("min_decay_excess", fe);
    m.put("min_decay_contraction", fc);
    m.put("ks_statistic_k256", last_ks.statistic);
    m.put("ks_threshold", last_ks.threshold);
    m.put("verdict", &rep.verdict);
    Ok((
        fe >= 3.0 && fc >= 3.0 && last_ks.passed,
        format!(
            "decay per 4x step: excess {fe:.3}, contraction {fc:.3} (need >= 3); KS D={:.4} vs {:.4} at k=256",
            last_ks.statistic, last_ks.threshold
        ),
    ))
}

fn negative_test(seed: u64, m: &mut Metrics) -> Result<(bool, String)> {
    const N: usize = 10_000;
    const REPS: u64 = 20;
    let f = sym_cross();
    let variance = second_moment_exact(&f);
    let fourth = fourth_moment_exact(&f);
    let fourth_scaled = fourth_moment_exact(&f.scale(2f64.sqrt()));
    let mut fails = 0;
    let mut kurt = Vec::new();
    for r in 0..REPS {
        let xs = par_draws(seed, &format!("c4/rep{r}"), N, |rng| {
            eval_integral(&f, &GaussianSample::draw(2, rng)).unwrap()
        });
        if !ks_against_std_normal(&xs)?.passed {
            fails += 1;
        }
        kurt.push(summarize(&xs)?.kurtosis);
    }
    let mean_kurt = kurt.iter().sum::<f64>() / kurt.len() as f64;
    m.put("variance", variance);
    m.put("fourth_moment", fourth);
    m.put("fourth_moment_sqrt2_scaled", fourth_scaled);
    m.put("ks_failures", fails);
    m.put("mean_sample_kurtosis", mean_kurt);
    let exact_ok = (variance - 1.0).abs() <= 1e-9 && (fourth - 9.0).abs() <= 1e-9;
    Ok((
        exact_ok && fails * 100 >= 95 * REPS as usize,
        format!("variance {variance}, fourth moment {fourth} (need 9); KS rejects {fails}/{REPS}; mean kurtosis {mean_kurt:.2}"),
    ))
}

fn spectral_bridge(seed: u64, m: &mut Metrics) -> Result<(bool, String)> {
    const TOL: f64 = 1e-9;
    let mut worst_excess = 0.0f64;
    let mut worst_contraction = 0.0f64;
    for k in 0..50u64 {
        let mut rng = stream_rng(seed, "c5/kernels", k);
        let d = rng.random_range(2..=12);
        let f = random_sym(2, d, &mut rng);
        let op = HSOperator::from_kernel(&f)?;
        let l4 = op.trace_power(4);
        worst_excess = worst_excess.max(rel_err(excess_fourth_moment(&f), 48.0 * l4));
        worst_contraction = worst_contraction.max(rel_err(contraction_norm_sq(&f, 1)?, l4));
    }
    m.put("kernels", 50);
    m.put("max_rel_error_excess", worst_excess);
    m.put("max_rel_error_contraction", worst_contraction);
    Ok((
        worst_excess <= TOL && worst_contraction <= TOL,
        format!("excess vs 48 sum l^4: {worst_excess:.1e}; contraction vs sum l^4: {worst_contraction:.1e} (tol {TOL:e})"),
    ))
}

fn coupling(seed: u64, m: &mut Metrics) -> Result<(bool, String)> {
    const DRAWS: usize = 100;
    let mut ok = true;
    let mut parts = Vec::new();
    for h in [0.6, 0.75] {
        let p = FunctionalParams::f_beta(h, 0.0)?;
        let mut medians = Vec::new();
        for d in [64usize, 256] {
            let emb = GridEmbedding::on_grid(CovarianceModel::fractional(h)?, Grid::uniform(d)?)?;
            let plan = StatisticPlan::new(&p, &emb)?;
            let tag = format!("c6/H{h}/d{d}");
            let errs = (0..DRAWS as u64)
                .map(|i| {
                    let xi = gaussian_sample(seed, &tag, i, d);
                    let path = sample_path(&emb, &xi)?;
                    Ok((direct_evaluate(&p, &path)? - plan.functional_value(&xi)?).abs())
                })
                .collect::<Result<Vec<f64>>>()?;
            medians.push(median(errs));
        }
        ok &= medians[1] < medians[0];
        m.put(format!("median_error_H{h}_d64"), medians[0]);
        m.put(format!("median_error_H{h}_d256"), medians[1]);
        parts.push(format!("H={h}: {:.2e} -> {:.2e}", medians[0], medians[1]));
    }
    Ok((ok, format!("median |direct - chaos| d=64 -> d=256: {}", parts.join("; "))))
}

/// Per-axis grid for sheet sampling: one cell per octave.
fn sheet_axis_grid(cells: usize) -> Result<Grid> {
    Grid::geometric(cells, 1)
}

fn sheet_limit(seed: u64, m: &mut Metrics) -> Result<(bool, String)> {
    const N: usize = 100_000;
    let schedule = [1e-1, 1e-2, 1e-3];
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [1usize, 2] {
        let target = 2f64.powi(n as i32);
        let values: Vec<f64> = schedule
            .iter()
            .map(|&x| variance_closed_form_sheet(&vec![(x - 2.0) / 2.0; n]))
            .collect::<Result<_>>()?;
        let gaps: Vec<f64> = values.iter().map(|v| (v - target).abs()).collect();
        let final_rel = gaps[2] / target;
        let n_ok = strictly_decreasing(&gaps) && final_rel <= 0.02;
        ok &= n_ok;
        m.put(format!("closed_form_n{n}"), &values);
        m.put(format!("final_rel_gap_n{n}"), final_rel);
        parts.push(format!("n={n}: {:.4} at 1e-3 vs {target} ({:.1}%)", values[2], 100.0 * final_rel));
    }
    let reference = variance_closed_form_sheet(&[-0.995])?;
    let reference_ok = (reference - 1.9802).abs() <= 1e-4;
    ok &= reference_ok;
    m.put("reference_n1_beta_-0.995", reference);

    for (n, cells) in [(1usize, 512usize), (2, 160)] {
        let emb = GridEmbedding::on_grid(CovarianceModel::sheet(n)?, sheet_axis_grid(cells)?)?;
        let plan = StatisticPlan::new(&FunctionalParams::a_beta(vec![-0.995; n])?, &emb)?;
        let xs = par_draws(seed, &format!("c7/n{n}"), N, |rng| plan.sample_spectral(rng));
        let s = summarize(&xs)?;
        let within = (s.kurtosis - 3.0).abs() <= 4.0 * s.se_kurtosis;
        ok &= within;
        m.put(format!("mc_kurtosis_n{n}"), s.kurtosis);
        m.put(format!("mc_kurtosis_se_n{n}"), s.se_kurtosis);
        m.put(format!("mc_variance_n{n}"), s.variance);
        m.put(format!("exact_excess_n{n}"), plan.exact_excess_kurtosis());
        m.put(format!("grid_variance_n{n}"), plan.exact_variance());
        parts.push(format!("MC kurtosis n={n}: {:.3} +/- {:.3}", s.kurtosis, s.se_kurtosis));
    }
    Ok((ok, parts.join("; ")))
}

struct TrendPoint {
    key: f64,
    mc_excess: f64,
    se: f64,
    exact_excess: f64,
    ratio: f64,
    variance: f64,
}

fn trend_point(plan: &StatisticPlan, key: f64, seed: u64, tag: &str, n: usize) -> Result<TrendPoint> {
    let xs = par_draws(seed, tag, n, |rng| plan.sample_spectral(rng));
    let s = summarize(&xs)?;
    Ok(TrendPoint {
        key,
        mc_excess: s.excess_kurtosis(),
        se: s.se_kurtosis,
        exact_excess: plan.exact_excess_kurtosis(),
        ratio: plan.contraction_ratio(),
        variance: s.variance,
    })
}

fn judge_trend(label: &str, pts: &[TrendPoint], m: &mut Metrics) -> (bool, String) {
    let mc: Vec<f64> = pts.iter().map(|p| p.mc_excess).collect();
    let ratios: Vec<f64> = pts.iter().map(|p| p.ratio).collect();
    let last = pts.last().expect("non-empty schedule");
    let decreasing = strictly_decreasing(&mc);
    let final_ok = last.mc_excess.abs() <= 4.0 * last.se;
    let ratio_ok = strictly_decreasing(&ratios);
    m.put(format!("{label}_keys"), pts.iter().map(|p| p.key).collect::<Vec<_>>());
    m.put(format!("{label}_mc_excess"), &mc);
    m.put(format!("{label}_mc_excess_se"), pts.iter().map(|p| p.se).collect::<Vec<_>>());
    m.put(format!("{label}_exact_excess"), pts.iter().map(|p| p.exact_excess).collect::<Vec<_>>());
    m.put(format!("{label}_contraction_ratio"), &ratios);
    m.put(format!("{label}_mc_variance"), pts.iter().map(|p| p.variance).collect::<Vec<_>>());
    let detail = format!(
        "{label}: excess {} ({}), final {:.3} +/- {:.3} ({}), contraction ratio {}",
        mc.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" > "),
        if decreasing { "decreasing" } else { "not decreasing" },
        last.mc_excess,
        last.se,
        if final_ok { "within 4 SE of 0" } else { "not within 4 SE of 0" },
        if ratio_ok { "decreasing" } else { "not decreasing" },
    );
    (decreasing && final_ok && ratio_ok, detail)
}

/// `2β + 2H + 1` schedule of the `F_β` sweep.
pub const BETA_SCHEDULE: [f64; 4] = [1e-1, 0.031_622_776_601_683_79, 1e-2, 0.003_162_277_660_168_379_5];
pub const EPS_SCHEDULE: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

fn fbm_trends(seed: u64, m: &mut Metrics) -> Result<(bool, String)> {
    const H: f64 = 0.75;
    const N: usize = 100_000;
    const CELLS: usize = 512;
    let emb = GridEmbedding::on_grid(CovarianceModel::fractional(H)?, Grid::geometric(CELLS, 1)?)?;
    let beta_pts = BETA_SCHEDULE
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let p = FunctionalParams::f_beta(H, (a - 2.0 * H - 1.0) / 2.0)?;
            trend_point(&StatisticPlan::new(&p, &emb)?, a, seed, &format!("c8/beta/{i}"), N)
        })
        .collect::<Result<Vec<_>>>()?;
    let eps_pts = EPS_SCHEDULE
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let emb = GridEmbedding::on_grid(CovarianceModel::fractional(H)?, Grid::anchored(eps, CELLS)?)?;
            let p = FunctionalParams::l_eps(H, eps)?;
            trend_point(&StatisticPlan::new(&p, &emb)?, eps, seed, &format!("c8/eps/{i}"), N)
        })
        .collect::<Result<Vec<_>>>()?;
    let (b_ok, b_detail) = judge_trend("beta", &beta_pts, m);
    let (e_ok, e_detail) = judge_trend("eps", &eps_pts, m);
    Ok((b_ok && e_ok, format!("{b_detail}; {e_detail}")))
}

fn noncentral_trend(seed: u64, m: &mut Metrics) -> Result<(bool, String)> {
    const H: f64 = 0.7;
    const N: usize = 20_000;
    const CELLS: usize = 256;
    let emb = GridEmbedding::on_grid(CovarianceModel::fractional(H)?, Grid::uniform(CELLS)?)?;
    let ones = embed_kernel2(|_, _| 1.0, &emb)?;
    let mut means = Vec::new();
    let mut exact = Vec::new();
    let mut parts = Vec::new();
    for beta in [1.0, 4.0, 16.0] {
        let p = FunctionalParams::f_beta(H, beta)?;
        let plan = StatisticPlan::new(&p, &emb)?;
        let a = 2.0 * beta + 2.0 * H + 1.0;
        let tag = format!("c9/beta{beta}");
        let sq = (0..N as u64)
            .map(|i| {
                let xi = gaussian_sample(seed, &tag, i, CELLS);
                let b1 = sample_path(&emb, &xi)?.terminal();
                Ok((a * plan.functional_value(&xi)? - b1 * b1).powi(2))
            })
            .collect::<Result<Vec<f64>>>()?;
        let (mean, se) = mean_with_se(&sq)?;
        let diff = plan.kernel_tensor().expect("fBm kernel is dense").scale(a).add(&ones.scale(-1.0))?;
        means.push(mean);
        exact.push(2.0 * diff.norm_sq());
        parts.push(format!("beta={beta}: {mean:.4} +/- {se:.4}"));
    }
    m.put("beta", [1.0, 4.0, 16.0]);
    m.put("mc_mean_sq_distance", &means);
    m.put("grid_exact_mean_sq_distance", &exact);
    Ok((strictly_decreasing(&means), format!("E[(aF - B1^2)^2]: {}", parts.join(", "))))
}

fn determinism_probe(seed: u64, m: &mut Metrics) -> Result<(bool, String)> {
    let emb = GridEmbedding::on_grid(CovarianceModel::fractional(0.75)?, Grid::geometric(64, 1)?)?;
    let plan = StatisticPlan::new(&FunctionalParams::f_beta(0.75, -1.0)?, &emb)?;
    let run = |threads: usize| -> Result<Vec<u64>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let xs = pool.install(|| par_draws(seed, "c10/probe", 20_000, |rng| plan.sample_spectral(rng)));
        let s = pool.install(|| summarize(&xs))?;
        let mut bits: Vec<u64> = xs.iter().map(|v| v.to_bits()).collect();
        bits.extend([s.mean, s.variance, s.kurtosis, s.se_kurtosis].map(f64::to_bits));
        Ok(bits)
    };
    let (a, b) = (run(1)?, run(3)?);
    let same = a == b;
    m.put("probe_values", a.len());
    m.put("bit_identical", same);
    Ok((same, format!("in-process probe with 1 vs 3 threads: {}", if same { "bit-identical" } else { "differs" })))
}
