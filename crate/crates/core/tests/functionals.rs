use wiener_chaos::chaos::GaussianSample;
use wiener_chaos::diagnostics::mean_with_se;
use wiener_chaos::embed::{CovarianceModel, Grid, GridEmbedding};
use wiener_chaos::functionals::{
    chaos_kernel, variance_closed_form_sheet, variance_closed_form_sheet_eps, FunctionalParams, StatisticPlan,
};
use wiener_chaos::rng::par_draws;
use wiener_chaos::Error;

/// Composite Simpson on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// `∫∫ k(s ∨ t)² ds dt = ∫ 2u g(u)² du`, integrated in `x = −ln u`,
/// split at `split` where `g` has a kink.
fn axis_norm_sq(g: impl Fn(f64) -> f64, split: Option<f64>, tail: f64) -> f64 {
    let integrand = |x: f64| {
        let u = (-x).exp();
        2.0 * u * u * g(u).powi(2)
    };
    match split {
        Some(xs) => simpson(integrand, 0.0, xs, 200_000) + simpson(integrand, xs, tail, 200_000),
        None => simpson(integrand, 0.0, tail, 400_000),
    }
}

#[test]
fn sheet_closed_forms_match_quadrature() {
    for (beta, tail) in [(-0.5, 60.0), (-0.75, 80.0), (-0.9, 200.0)] {
        let p = FunctionalParams::a_beta(vec![beta]).unwrap();
        let (_, k) = chaos_kernel(&p).unwrap();
        let norm = axis_norm_sq(|u| k.axes()[0].eval(u, u), None, tail);
        let c2 = 2.0 * beta + 2.0;
        for n in 1..=3usize {
            let quad = 2.0 * (c2 * norm).powi(n as i32);
            let closed = variance_closed_form_sheet(&vec![beta; n]).unwrap();
            assert!((quad - closed).abs() <= 1e-8 * closed, "beta={beta} n={n}: {quad} vs {closed}");
        }
    }
    for eps in [0.3, 0.05, 1e-3] {
        let p = FunctionalParams::b_eps(1, eps).unwrap();
        let (_, k) = chaos_kernel(&p).unwrap();
        let norm = axis_norm_sq(|u| k.axes()[0].eval(u, u), Some((1.0 / eps).ln()), 60.0);
        let c2 = 1.0 / (1.0 / eps).ln();
        for n in 1..=2usize {
            let quad = 2.0 * (c2 * norm).powi(n as i32);
            let closed = variance_closed_form_sheet_eps(n, eps).unwrap();
            assert!((quad - closed).abs() <= 1e-8 * closed, "eps={eps} n={n}: {quad} vs {closed}");
        }
    }
}

#[test]
fn sheet_reference_value() {
    let v = variance_closed_form_sheet(&[-0.995]).unwrap();
    assert!((v - 1.9802).abs() <= 1e-4, "{v}");
}

#[test]
fn l_eps_mean_diverges() {
    let means: Vec<f64> = [1e-1, 1e-2, 1e-4, 1e-8]
        .iter()
        .map(|&e| FunctionalParams::l_eps(0.7, e).unwrap().mean())
        .collect();
    assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
    assert!(means[3] > 18.0);
}

#[test]
fn grid_variance_converges_with_refinement() {
    // same depth (2^-60), finer cells per octave
    let p = FunctionalParams::a_beta(vec![-0.5]).unwrap();
    let target = variance_closed_form_sheet(&[-0.5]).unwrap();
    let gap = |cells: usize, cpo: usize| {
        let emb = GridEmbedding::on_grid(CovarianceModel::sheet(1).unwrap(), Grid::geometric(cells, cpo).unwrap()).unwrap();
        (StatisticPlan::new(&p, &emb).unwrap().exact_variance() - target).abs()
    };
    let gaps = [gap(60, 1), gap(120, 2), gap(240, 4)];
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[2] < 0.01 * target, "{gaps:?}");
}

#[test]
fn brownian_square_integral_has_exact_mean() {
    // ∫ W_t² dt has mean 1/2
    let p = FunctionalParams::f_beta(0.5, 0.0).unwrap();
    let emb = GridEmbedding::on_grid(CovarianceModel::fractional(0.5).unwrap(), Grid::uniform(64).unwrap()).unwrap();
    let plan = StatisticPlan::new(&p, &emb).unwrap();
    let xs = par_draws(5, "bm-square", 20_000, |rng| {
        plan.functional_value(&GaussianSample::draw(plan.generator_count(), rng)).unwrap()
    });
    let (m, se) = mean_with_se(&xs).unwrap();
    assert!((m - 0.5).abs() <= 4.0 * se, "{m} +/- {se}");
}

#[test]
fn f_beta_variance_stays_bounded_along_schedule() {
    let emb = GridEmbedding::on_grid(CovarianceModel::fractional(0.75).unwrap(), Grid::geometric(512, 1).unwrap()).unwrap();
    let vars: Vec<f64> = [1e-1, 1e-2, 3e-3]
        .iter()
        .map(|o| {
            let p = FunctionalParams::f_beta(0.75, (o - 2.5) / 2.0).unwrap();
            StatisticPlan::new(&p, &emb).unwrap().exact_variance()
        })
        .collect();
    assert!(vars.iter().all(|v| v.is_finite() && (0.5..10.0).contains(v)), "{vars:?}");
    let (lo, hi) = vars.iter().fold((f64::MAX, 0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    assert!(hi / lo < 1.5, "{vars:?}");
}

#[test]
fn excess_kurtosis_decays_toward_the_limit() {
    let emb = GridEmbedding::on_grid(CovarianceModel::fractional(0.75).unwrap(), Grid::geometric(512, 1).unwrap()).unwrap();
    let excess: Vec<f64> = [1e-1, 1e-2, 3e-3]
        .iter()
        .map(|o| StatisticPlan::new(&FunctionalParams::f_beta(0.75, (o - 2.5) / 2.0).unwrap(), &emb).unwrap().exact_excess_kurtosis())
        .collect();
    assert!(excess.windows(2).all(|w| w[1] < w[0]), "{excess:?}");
}

#[test]
fn parameter_and_model_errors() {
    assert!(matches!(FunctionalParams::f_beta(0.75, -1.5), Err(Error::InvalidParameter(_))));
    assert!(FunctionalParams::l_eps(0.7, 0.0).is_err());
    assert!(FunctionalParams::a_beta(vec![]).is_err());
    assert!(FunctionalParams::a_beta(vec![-1.0]).is_err());
    assert!(FunctionalParams::b_eps(0, 0.1).is_err());
    let p = FunctionalParams::a_beta(vec![-0.5, -0.5]).unwrap();
    let emb = GridEmbedding::on_grid(CovarianceModel::fractional(0.7).unwrap(), Grid::uniform(8).unwrap()).unwrap();
    assert!(matches!(StatisticPlan::new(&p, &emb), Err(Error::ModelMismatch(_))));
    let sheet1 = GridEmbedding::on_grid(CovarianceModel::sheet(1).unwrap(), Grid::uniform(8).unwrap()).unwrap();
    assert!(matches!(StatisticPlan::new(&p, &sheet1), Err(Error::ModelMismatch(_))));
}
