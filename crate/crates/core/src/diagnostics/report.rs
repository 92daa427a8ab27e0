use rayon::prelude::*;
use serde::Serialize;

use super::stats::{ks_against_std_normal, summarize, KSResult, MomentSummary};
use crate::chaos::{contraction_norms, eval_integral, fourth_moment_exact, second_moment_exact, GaussianSample};
use crate::error::{Error, Result};
use crate::rng::par_draws;
use crate::tensor::SymTensor;

/// Direction in which the schedule key approaches the limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitDirection {
    Increasing,
    Decreasing,
}

type Generator = dyn Fn(f64) -> Result<SymTensor> + Send + Sync;

/// Kernels `f_k` of a fixed order, produced on demand at each schedule key.
pub struct KernelSequence {
    name: String,
    schedule: Vec<f64>,
    direction: LimitDirection,
    generator: Box<Generator>,
}

impl KernelSequence {
    pub fn new<G>(name: impl Into<String>, schedule: Vec<f64>, direction: LimitDirection, generator: G) -> Self
    where
        G: Fn(f64) -> Result<SymTensor> + Send + Sync + 'static,
    {
        KernelSequence { name: name.into(), schedule, direction, generator: Box::new(generator) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schedule(&self) -> &[f64] {
        &self.schedule
    }

    pub fn direction(&self) -> LimitDirection {
        self.direction
    }

    pub fn kernel(&self, key: f64) -> Result<SymTensor> {
        (self.generator)(key)
    }
}

/// Moment and contraction data for one schedule point. `normalized_*`
/// fields divide by the variance (or `‖f‖⁴`), so they are scale free.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub key: f64,
    pub order: usize,
    pub dim: usize,
    pub variance: f64,
    pub fourth_moment: f64,
    pub excess: f64,
    pub normalized_excess: f64,
    pub contraction_norms: Vec<f64>,
    pub normalized_contractions: Vec<f64>,
    pub ks: Option<KSResult>,
    pub summary: Option<MomentSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Verdict {
    /// Excess and every contraction norm fell below half their initial
    /// values and the final normality test passed.
    Consistent,
    Inconsistent,
    /// Variances vanish or blow up along the schedule; no verdict.
    NotNormalizable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub name: String,
    /// Entries ordered toward the limit.
    pub entries: Vec<ReportEntry>,
    pub verdict: Verdict,
}

/// Exact moments and contraction norms of every kernel in `seq`, plus a
/// normality test on `mc_samples` draws of the variance-normalized integral
/// (skipped when `mc_samples` is zero).
pub fn theorem_one_report(seq: &KernelSequence, mc_samples: usize, seed: u64) -> Result<DiagnosticReport> {
    let mut keys = seq.schedule.clone();
    if keys.is_empty() {
        return Err(Error::InvalidParameter("empty schedule".into()));
    }
    if keys.iter().any(|k| !k.is_finite()) {
        return Err(Error::InvalidParameter("schedule keys must be finite".into()));
    }
    keys.sort_by(f64::total_cmp);
    if seq.direction == LimitDirection::Decreasing {
        keys.reverse();
    }
    let entries = keys
        .par_iter()
        .map(|&key| entry(seq, key, mc_samples, seed))
        .collect::<Result<Vec<_>>>()?;
    let order = entries[0].order;
    if entries.iter().any(|e| e.order != order) {
        return Err(Error::OrderMismatch { expected: order, found: entries.iter().find(|e| e.order != order).unwrap().order });
    }
    let verdict = verdict(&entries);
    Ok(DiagnosticReport { name: seq.name.clone(), entries, verdict })
}

fn entry(seq: &KernelSequence, key: f64, mc_samples: usize, seed: u64) -> Result<ReportEntry> {
    let f = seq.kernel(key)?;
    if f.order() < 1 {
        return Err(Error::InvalidParameter("kernel sequences need order at least 1".into()));
    }
    let variance = second_moment_exact(&f);
    let fourth_moment = fourth_moment_exact(&f);
    let excess = fourth_moment - 3.0 * variance * variance;
    let norm4 = f.norm_sq().powi(2);
    let contraction_norms = contraction_norms(&f);
    let normalized_contractions = contraction_norms.iter().map(|c| c / norm4).collect();

    let (ks, summary) = if mc_samples > 0 && variance > 0.0 {
        let sd = variance.sqrt();
        let tag = format!("{}/{key:e}", seq.name);
        let dim = f.dim();
        let xs = par_draws(seed, &tag, mc_samples, |rng| {
            let xi = GaussianSample::draw(dim, rng);
            eval_integral(&f, &xi).expect("sample length matches kernel dim") / sd
        });
        (Some(ks_against_std_normal(&xs)?), Some(summarize(&xs)?))
    } else {
        (None, None)
    };

    Ok(ReportEntry {
        key,
        order: f.order(),
        dim: f.dim(),
        variance,
        fourth_moment,
        excess,
        normalized_excess: excess / (variance * variance),
        contraction_norms,
        normalized_contractions,
        ks,
        summary,
    })
}

fn verdict(entries: &[ReportEntry]) -> Verdict {
    let first = &entries[0];
    let last = &entries[entries.len() - 1];
    if let Some(e) = entries.iter().find(|e| !(e.variance.is_finite() && e.variance > 0.0)) {
        return Verdict::NotNormalizable(format!("variance {} at key {}", e.variance, e.key));
    }
    let ratio = last.variance / first.variance;
    if !(1e-3..=1e3).contains(&ratio) {
        return Verdict::NotNormalizable(format!("variance ratio {ratio:e} between first and last keys"));
    }
    let halved = |a: f64, b: f64| b <= 0.5 * a + 1e-12;
    let excess_ok = halved(first.normalized_excess, last.normalized_excess);
    let contractions_ok = first
        .normalized_contractions
        .iter()
        .zip(&last.normalized_contractions)
        .all(|(&a, &b)| halved(a, b));
    let ks_ok = last.ks.map_or(true, |k| k.passed);
    if excess_ok && contractions_ok && ks_ok {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    }
}
