use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};
use wiener_chaos::chaos::{eval_integral, second_moment_exact, GaussianSample};
use wiener_chaos::diagnostics::{
    ks_against_std_normal, summarize, theorem_one_report, HSOperator, KSResult, KernelSequence, LimitDirection,
    MomentSummary, KS_MIN_SAMPLES,
};
use wiener_chaos::embed::{embed_kernel2, sample_path, CovarianceModel, Grid, GridEmbedding};
use wiener_chaos::functionals::{
    chaos_kernel, direct_evaluate, variance_closed_form_sheet, variance_closed_form_sheet_eps, FunctionalParams,
    StatisticPlan,
};
use wiener_chaos::rng::{gaussian_sample, par_draws};
use wiener_chaos::tensor::{symmetrize, SymTensor, Tensor};
use wiener_chaos::validation::{self, clt_kernel, BETA_SCHEDULE, EPS_SCHEDULE};

use super::output::{col, num, summary, write_json, Column, Table};
use super::{
    Command, Common, DiagnoseArgs, Failure, Family, GridKind, Route, SampleArgs, Statistic, SweepFbmArgs,
    SweepSheetArgs, ValidateArgs,
};

type Outcome = (Option<PathBuf>, Result<(), Failure>);

pub fn run(cmd: &Command) -> Outcome {
    let common = match cmd {
        Command::Diagnose(a) => &a.common,
        Command::SweepFbm(a) => &a.common,
        Command::SweepSheet(a) => &a.common,
        Command::Validate(a) => &a.common,
        Command::Sample(a) => &a.common,
    };
    let dir = common.out.clone();
    if let Err(e) = fs::create_dir_all(&dir) {
        return (None, Err(Failure::Io(format!("cannot create {}: {e}", dir.display()))));
    }
    let result = match cmd {
        Command::Diagnose(a) => diagnose(a),
        Command::SweepFbm(a) => sweep_fbm(a),
        Command::SweepSheet(a) => sweep_sheet(a),
        Command::Validate(a) => validate(a),
        Command::Sample(a) => sample(a),
    };
    (Some(dir), result)
}

pub fn write_timing(dir: &Path, elapsed: Duration, threads: Option<usize>) {
    let t = json!({
        "wall_seconds": elapsed.as_secs_f64(),
        "threads": threads.unwrap_or_else(rayon::current_num_threads),
    });
    // timing is informational; a write failure must not mask the result
    let _ = write_json(&dir.join("timing.json"), &t);
}

/// Run parameters shared by every command; the output path is left out so
/// that summaries do not depend on where they are written.
fn common_config(c: &Common) -> Value {
    json!({ "seed": c.seed })
}

fn finish(c: &Common, command: &str, table: &Table, config: Value, results: Value) -> Result<(), Failure> {
    table.write(&c.out)?;
    write_json(&c.out.join("summary.json"), &summary(command, config, results))?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn mc_columns() -> Vec<Column> {
    vec![
        col("samples", "int", "Monte Carlo draws"),
        col("mc_mean", "float", "sample mean of the normalized statistic"),
        col("mc_mean_se", "float", "jackknife standard error of mc_mean"),
        col("mc_variance", "float", "sample variance"),
        col("mc_variance_se", "float", "jackknife standard error of mc_variance"),
        col("mc_skewness", "float", "sample skewness"),
        col("mc_kurtosis", "float", "sample kurtosis (3 for a normal law)"),
        col("mc_kurtosis_se", "float", "jackknife standard error of mc_kurtosis"),
        col("ks_statistic", "float", "Kolmogorov-Smirnov distance to N(0,1) of the standardized draws"),
        col("ks_threshold", "float", "5% critical value 1.358/sqrt(N)"),
        col("ks_pass", "bool", "ks_statistic <= ks_threshold"),
    ]
}

fn mc_cells(samples: usize, s: Option<&MomentSummary>, ks: Option<&KSResult>) -> Vec<String> {
    let mut row = vec![samples.to_string()];
    match s {
        Some(s) => row.extend(
            [s.mean, s.se_mean, s.variance, s.se_variance, s.skewness, s.kurtosis, s.se_kurtosis].map(num),
        ),
        None => row.extend(std::iter::repeat_n(String::new(), 7)),
    }
    match ks {
        Some(k) => row.extend([num(k.statistic), num(k.threshold), k.passed.to_string()]),
        None => row.extend(std::iter::repeat_n(String::new(), 3)),
    }
    row
}

/// Summary and (when large enough) a normality test of the standardized
/// draws.
fn mc_stats(xs: &[f64]) -> Result<(Option<MomentSummary>, Option<KSResult>), Failure> {
    if xs.len() < 3 {
        return Ok((None, None));
    }
    let s = summarize(xs)?;
    let ks = if xs.len() >= KS_MIN_SAMPLES {
        let sd = s.variance.sqrt();
        let z: Vec<f64> = xs.iter().map(|x| (x - s.mean) / sd).collect();
        Some(ks_against_std_normal(&z)?)
    } else {
        None
    };
    Ok((Some(s), ks))
}

fn fbm_grid(kind: GridKind, cells: usize, eps: Option<f64>) -> Result<Grid, Failure> {
    Ok(match (kind, eps) {
        (GridKind::Uniform, _) => Grid::uniform(cells)?,
        (GridKind::Auto, Some(e)) => Grid::anchored(e, cells)?,
        _ => Grid::geometric(cells, 1)?,
    })
}

fn grid_name(kind: GridKind, eps: Option<f64>) -> &'static str {
    match (kind, eps) {
        (GridKind::Uniform, _) => "uniform",
        (GridKind::Auto, Some(_)) => "anchored",
        _ => "geometric",
    }
}

fn sweep_fbm(a: &SweepFbmArgs) -> Result<(), Failure> {
    let h = a.hurst;
    let model = CovarianceModel::fractional(h)?;
    let beta_mode = !a.beta.is_empty() || !a.offset.is_empty();
    if beta_mode && !a.eps.is_empty() {
        return Err(Failure::Usage("give either --beta/--offset or --eps, not both".into()));
    }
    let points: Vec<(f64, FunctionalParams)> = if !a.eps.is_empty() {
        a.eps.iter().map(|&e| Ok((e, FunctionalParams::l_eps(h, e)?))).collect::<Result<_, Failure>>()?
    } else {
        let betas: Vec<f64> = if !a.beta.is_empty() {
            a.beta.clone()
        } else {
            let offsets = if a.offset.is_empty() { BETA_SCHEDULE.to_vec() } else { a.offset.clone() };
            offsets.iter().map(|o| (o - 2.0 * h - 1.0) / 2.0).collect()
        };
        betas
            .iter()
            .map(|&b| Ok((2.0 * b + 2.0 * h + 1.0, FunctionalParams::f_beta(h, b)?)))
            .collect::<Result<_, Failure>>()?
    };
    let family = points[0].1.family();
    let key_name = if beta_mode || a.eps.is_empty() { "offset" } else { "eps" };

    let mut columns = vec![
        col("family", "string", "F_beta or L_eps"),
        col("hurst", "float", "Hurst parameter H"),
        col("beta", "float", "beta (F_beta)"),
        col("eps", "float", "eps (L_eps)"),
        col("offset", "float", "2 beta + 2H + 1 (F_beta)"),
        col("grid", "string", "grid type"),
        col("cells", "int", "grid cells"),
        col("mean", "float", "exact mean of the functional"),
        col("normalization", "float", "factor applied to functional minus mean"),
        col("grid_variance", "float", "exact variance of the normalized statistic on this grid"),
        col("grid_excess_kurtosis", "float", "exact excess kurtosis on this grid, 12 sum l^4 / (sum l^2)^2"),
        col("contraction_ratio", "float", "||f (x)_1 f||^2 / ||f||^4"),
    ];
    columns.extend(mc_columns());
    let mut table = Table::new("sweep-fbm", columns);

    let shared = if a.eps.is_empty() || a.grid != GridKind::Auto {
        Some(GridEmbedding::on_grid(model, fbm_grid(a.grid, a.cells, None)?)?)
    } else {
        None
    };
    let mut results = Vec::new();
    for (key, p) in &points {
        let eps = match p {
            FunctionalParams::LEps { eps, .. } => Some(*eps),
            _ => None,
        };
        let own;
        let emb = match &shared {
            Some(e) => e,
            None => {
                own = GridEmbedding::on_grid(model, fbm_grid(a.grid, a.cells, eps)?)?;
                &own
            }
        };
        let plan = StatisticPlan::new(p, emb)?;
        let tag = format!("sweep-fbm/{family}/{key:e}");
        let xs = par_draws(a.common.seed, &tag, a.samples, |rng| plan.sample_spectral(rng));
        let (s, ks) = mc_stats(&xs)?;
        let beta = match p {
            FunctionalParams::FBeta { beta, .. } => Some(*beta),
            _ => None,
        };
        let mut row = vec![
            family.to_string(),
            num(h),
            opt(beta),
            opt(eps),
            opt(beta.map(|_| *key)),
            grid_name(a.grid, eps).to_string(),
            emb.grid().cells().to_string(),
            num(plan.mean()),
            num(plan.normalization()),
            num(plan.exact_variance()),
            num(plan.exact_excess_kurtosis()),
            num(plan.contraction_ratio()),
        ];
        row.extend(mc_cells(a.samples, s.as_ref(), ks.as_ref()));
        table.push(row);
        results.push(json!({
            key_name: key,
            "params": p,
            "grid_variance": plan.exact_variance(),
            "grid_excess_kurtosis": plan.exact_excess_kurtosis(),
            "contraction_ratio": plan.contraction_ratio(),
            "mc": s,
            "ks": ks,
        }));
    }
    let last = results.last().cloned().unwrap_or(Value::Null);
    let limit = json!({
        "description": "variance of the normalized statistic at the final schedule point",
        "mc_variance": last["mc"]["variance"],
        "mc_variance_se": last["mc"]["se_variance"],
        "grid_variance": last["grid_variance"],
    });
    let config = json!({
        "hurst": h, "beta": a.beta, "offset": a.offset, "eps": a.eps, "samples": a.samples,
        "cells": a.cells, "grid": format!("{:?}", a.grid).to_lowercase(), "common": common_config(&a.common),
    });
    finish(&a.common, "sweep-fbm", &table, config, json!({ "points": results, "limit_variance_estimate": limit }))
}

fn sheet_grid(kind: GridKind, cells: usize, eps: Option<f64>) -> Result<Grid, Failure> {
    fbm_grid(kind, cells, eps)
}

fn sweep_sheet(a: &SweepSheetArgs) -> Result<(), Failure> {
    let n = a.dims;
    let model = CovarianceModel::sheet(n)?;
    if !a.beta.is_empty() && !a.eps.is_empty() {
        return Err(Failure::Usage("give either --beta or --eps, not both".into()));
    }
    let cells = a.cells.unwrap_or(if n == 1 { 512 } else { 160 });
    let points: Vec<FunctionalParams> = if !a.eps.is_empty() {
        a.eps.iter().map(|&e| FunctionalParams::b_eps(n, e)).collect::<Result<_, _>>()?
    } else {
        // kernel mass sits near exp(-1/(2 beta + 2)); defaults stay inside the grid's reach
        let betas = match (a.beta.is_empty(), n) {
            (false, _) => a.beta.clone(),
            (true, 1) => vec![-0.95, -0.99, -0.995],
            (true, _) => vec![-0.9, -0.95, -0.975],
        };
        betas.iter().map(|&b| FunctionalParams::a_beta(vec![b; n])).collect::<Result<_, _>>()?
    };

    let mut columns = vec![
        col("family", "string", "A_beta or B_eps"),
        col("dims", "int", "sheet dimension n"),
        col("beta", "float", "beta on every axis (A_beta)"),
        col("eps", "float", "eps (B_eps)"),
        col("grid", "string", "per-axis grid type"),
        col("cells", "int", "cells per axis"),
        col("mean", "float", "exact mean of the functional"),
        col("closed_form_variance", "float", "exact continuum variance of the normalized statistic"),
        col("grid_variance", "float", "exact variance of the normalized statistic on this grid"),
        col("grid_excess_kurtosis", "float", "exact excess kurtosis on this grid"),
        col("contraction_ratio", "float", "||f (x)_1 f||^2 / ||f||^4"),
    ];
    columns.extend(mc_columns());
    let mut table = Table::new("sweep-sheet", columns);
    let mut results = Vec::new();
    for p in &points {
        let (beta, eps, closed) = match p {
            FunctionalParams::ABeta { betas } => (Some(betas[0]), None, variance_closed_form_sheet(betas)?),
            FunctionalParams::BEps { eps, .. } => (None, Some(*eps), variance_closed_form_sheet_eps(n, *eps)?),
            _ => unreachable!("sheet families only"),
        };
        let emb = GridEmbedding::on_grid(model, sheet_grid(a.grid, cells, eps)?)?;
        let plan = StatisticPlan::new(p, &emb)?;
        let key = beta.or(eps).unwrap_or_default();
        let tag = format!("sweep-sheet/{}/n{n}/{key:e}", p.family());
        let xs = par_draws(a.common.seed, &tag, a.samples, |rng| plan.sample_spectral(rng));
        let (s, ks) = mc_stats(&xs)?;
        let mut row = vec![
            p.family().to_string(),
            n.to_string(),
            opt(beta),
            opt(eps),
            grid_name(a.grid, eps).to_string(),
            cells.to_string(),
            num(plan.mean()),
            num(closed),
            num(plan.exact_variance()),
            num(plan.exact_excess_kurtosis()),
            num(plan.contraction_ratio()),
        ];
        row.extend(mc_cells(a.samples, s.as_ref(), ks.as_ref()));
        table.push(row);
        results.push(json!({
            "params": p,
            "closed_form_variance": closed,
            "grid_variance": plan.exact_variance(),
            "grid_excess_kurtosis": plan.exact_excess_kurtosis(),
            "contraction_ratio": plan.contraction_ratio(),
            "mc": s,
            "ks": ks,
        }));
    }
    let config = json!({
        "dims": n, "beta": a.beta, "eps": a.eps, "samples": a.samples, "cells": cells,
        "grid": format!("{:?}", a.grid).to_lowercase(), "common": common_config(&a.common),
    });
    finish(&a.common, "sweep-sheet", &table, config, json!({ "points": results }))
}

fn diagnose(a: &DiagnoseArgs) -> Result<(), Failure> {
    let schedule = if !a.schedule.is_empty() {
        a.schedule.clone()
    } else {
        match a.family {
            Family::Clt => vec![4.0, 16.0, 64.0, 256.0],
            Family::ConstantCross | Family::ScaledSquare => vec![1.0, 2.0, 3.0, 4.0],
            Family::FBeta => BETA_SCHEDULE.to_vec(),
            Family::LEps => EPS_SCHEDULE.to_vec(),
        }
    };
    let (h, cells) = (a.hurst, a.cells.unwrap_or(512));
    let seq = match a.family {
        Family::Clt => {
            if let Some(k) = schedule.iter().find(|k| !(**k >= 1.0 && k.fract() == 0.0)) {
                return Err(Failure::Usage(format!("clt schedule needs positive integers, got {k}")));
            }
            KernelSequence::new("clt", schedule, LimitDirection::Increasing, |k| clt_kernel(k as usize))
        }
        Family::ConstantCross => KernelSequence::new("constant-cross", schedule, LimitDirection::Increasing, |_| {
            Ok(symmetrize(&Tensor::basis(2, &[0, 1])?))
        }),
        Family::ScaledSquare => KernelSequence::new("scaled-square", schedule, LimitDirection::Increasing, |_| {
            SymTensor::from_matrix(1, vec![std::f64::consts::FRAC_1_SQRT_2])
        }),
        Family::FBeta => {
            let emb = Arc::new(GridEmbedding::on_grid(CovarianceModel::fractional(h)?, Grid::geometric(cells, 1)?)?);
            for &o in &schedule {
                FunctionalParams::f_beta(h, (o - 2.0 * h - 1.0) / 2.0)?;
            }
            KernelSequence::new("f-beta", schedule, LimitDirection::Decreasing, move |o| {
                normalized_kernel(&FunctionalParams::f_beta(h, (o - 2.0 * h - 1.0) / 2.0)?, &emb)
            })
        }
        Family::LEps => {
            CovarianceModel::fractional(h)?;
            for &e in &schedule {
                FunctionalParams::l_eps(h, e)?;
            }
            KernelSequence::new("l-eps", schedule, LimitDirection::Decreasing, move |e| {
                let emb = GridEmbedding::on_grid(CovarianceModel::fractional(h)?, Grid::anchored(e, cells)?)?;
                normalized_kernel(&FunctionalParams::l_eps(h, e)?, &emb)
            })
        }
    };
    let rep = theorem_one_report(&seq, a.samples, a.common.seed)?;
    let order = rep.entries[0].order;
    let mut columns = vec![
        col("key", "float", "schedule key"),
        col("order", "int", "chaos order n"),
        col("dim", "int", "ambient dimension"),
        col("variance", "float", "n! ||f||^2"),
        col("fourth_moment", "float", "exact E[I_n(f)^4]"),
        col("excess", "float", "fourth_moment - 3 variance^2"),
        col("normalized_excess", "float", "excess / variance^2"),
    ];
    for p in 1..order {
        columns.push(col(format!("contraction_p{p}"), "float", format!("||f (x)_{p} f||^2")));
        columns.push(col(format!("normalized_contraction_p{p}"), "float", format!("||f (x)_{p} f||^2 / ||f||^4")));
    }
    columns.extend(mc_columns());
    let mut table = Table::new("diagnose", columns);
    for e in &rep.entries {
        let mut row = vec![
            num(e.key),
            e.order.to_string(),
            e.dim.to_string(),
            num(e.variance),
            num(e.fourth_moment),
            num(e.excess),
            num(e.normalized_excess),
        ];
        for (c, nc) in e.contraction_norms.iter().zip(&e.normalized_contractions) {
            row.push(num(*c));
            row.push(num(*nc));
        }
        row.extend(mc_cells(a.samples, e.summary.as_ref(), e.ks.as_ref()));
        table.push(row);
    }
    let config = json!({
        "family": format!("{:?}", a.family), "schedule": seq.schedule(), "samples": a.samples,
        "hurst": h, "cells": cells, "common": common_config(&a.common),
    });
    finish(&a.common, "diagnose", &table, config, json!({ "report": rep }))
}

/// Embedded kernel of a functional, scaled by its normalization.
fn normalized_kernel(p: &FunctionalParams, emb: &GridEmbedding) -> wiener_chaos::Result<SymTensor> {
    let (_, k) = chaos_kernel(p)?;
    Ok(embed_kernel2(|s, t| k.eval(s, t), emb)?.scale(p.normalization()))
}

fn validate(a: &ValidateArgs) -> Result<(), Failure> {
    let results = validation::run(&a.only, a.common.seed);
    let mut table = Table::new(
        "validate",
        vec![
            col("id", "int", "criterion number"),
            col("name", "string", "criterion name"),
            col("passed", "bool", "criterion outcome"),
            col("detail", "string", "measured values against the pinned tolerance"),
        ],
    );
    for r in &results {
        println!("{}", r.line());
        table.push(vec![r.id.to_string(), r.name.clone(), r.passed.to_string(), r.detail.clone()]);
    }
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    let config = json!({ "only": a.only, "common": common_config(&a.common) });
    finish(&a.common, "validate", &table, config, json!({ "criteria": results }))?;
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Failed(format!("criteria failed: {}", failed.join(","))))
    }
}

fn sample(a: &SampleArgs) -> Result<(), Failure> {
    let tag = format!("sample/{:?}/{:?}", a.statistic, a.route).to_lowercase();
    let seed = a.common.seed;
    let xs: Vec<f64> = match a.statistic {
        Statistic::Clt | Statistic::ConstantCross => {
            let f = match a.statistic {
                Statistic::Clt => clt_kernel(a.k)?,
                _ => symmetrize(&Tensor::basis(2, &[0, 1])?),
            };
            let sd = second_moment_exact(&f).sqrt();
            match a.route {
                Route::Spectral => {
                    let op = HSOperator::from_kernel(&f)?;
                    par_draws(seed, &tag, a.samples, |rng| op.sample(rng) / sd)
                }
                Route::Chaos => {
                    let d = f.dim();
                    par_draws(seed, &tag, a.samples, |rng| {
                        eval_integral(&f, &GaussianSample::draw(d, rng)).expect("dimension matches") / sd
                    })
                }
                Route::Direct => return Err(Failure::Usage("direct route needs a path functional".into())),
            }
        }
        _ => {
            let p = sample_params(a)?;
            let eps = match &p {
                FunctionalParams::LEps { eps, .. } | FunctionalParams::BEps { eps, .. } => Some(*eps),
                _ => None,
            };
            let model = if p.is_sheet() { CovarianceModel::sheet(p.axes())? } else { CovarianceModel::fractional(a.hurst)? };
            let cells = a.cells.unwrap_or(if p.axes() == 1 { 512 } else { 64 });
            let emb = GridEmbedding::on_grid(model, fbm_grid(a.grid, cells, eps)?)?;
            let plan = StatisticPlan::new(&p, &emb)?;
            match a.route {
                Route::Spectral => par_draws(seed, &tag, a.samples, |rng| plan.sample_spectral(rng)),
                Route::Chaos | Route::Direct => {
                    let dim = emb.generator_count();
                    let route = a.route;
                    (0..a.samples as u64)
                        .map(|i| {
                            let xi = gaussian_sample(seed, &tag, i, dim);
                            if route == Route::Chaos {
                                plan.statistic(&xi)
                            } else {
                                let path = sample_path(&emb, &xi)?;
                                Ok(p.normalization() * (direct_evaluate(&p, &path)? - p.mean()))
                            }
                        })
                        .collect::<wiener_chaos::Result<Vec<f64>>>()?
                }
            }
        }
    };
    let mut table = Table::new(
        "sample",
        vec![col("index", "int", "draw index (RNG stream)"), col("value", "float", "normalized statistic")],
    );
    for (i, x) in xs.iter().enumerate() {
        table.push(vec![i.to_string(), num(*x)]);
    }
    let (s, ks) = mc_stats(&xs)?;
    let config = json!({
        "statistic": format!("{:?}", a.statistic), "route": format!("{:?}", a.route), "hurst": a.hurst,
        "beta": a.beta, "eps": a.eps, "dims": a.dims, "k": a.k, "samples": a.samples, "cells": a.cells,
        "grid": format!("{:?}", a.grid).to_lowercase(), "common": common_config(&a.common),
    });
    finish(&a.common, "sample", &table, config, json!({ "summary": s, "ks": ks }))
}

fn sample_params(a: &SampleArgs) -> Result<FunctionalParams, Failure> {
    let need_eps = || a.eps.ok_or_else(|| Failure::Usage("--eps is required for this statistic".into()));
    let need_beta = || a.beta.first().copied().ok_or_else(|| Failure::Usage("--beta is required".into()));
    Ok(match a.statistic {
        Statistic::FBeta => FunctionalParams::f_beta(a.hurst, need_beta()?)?,
        Statistic::LEps => FunctionalParams::l_eps(a.hurst, need_eps()?)?,
        Statistic::ABeta => {
            let betas = match a.beta.len() {
                0 => return Err(Failure::Usage("--beta is required".into())),
                1 => vec![a.beta[0]; a.dims],
                n if n == a.dims => a.beta.clone(),
                n => return Err(Failure::Usage(format!("{n} beta values for {} axes", a.dims))),
            };
            FunctionalParams::a_beta(betas)?
        }
        Statistic::BEps => FunctionalParams::b_eps(a.dims, need_eps()?)?,
        Statistic::Clt | Statistic::ConstantCross => unreachable!("handled by the caller"),
    })
}
