use wiener_chaos::chaos::second_moment_exact;
use wiener_chaos::diagnostics::mean_with_se;
use wiener_chaos::embed::{
    embed_axis_kernel, embed_kernel2, kronecker, sample_path, CovarianceModel, Grid, GridEmbedding,
};
use wiener_chaos::rng::{gaussian_sample, par_draws};
use wiener_chaos::Error;

/// Increment covariance straight from `R(s, t) = ½(s^2H + t^2H − |t−s|^2H)`.
fn naive_increment_cov(h: f64, (a, b): (f64, f64), (c, d): (f64, f64)) -> f64 {
    let r = |s: f64, t: f64| 0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h));
    r(b, d) - r(b, c) - r(a, d) + r(a, c)
}

#[test]
fn fbm_gram_is_factorable_across_hurst_and_size() {
    for h in [0.55, 0.6, 0.7, 0.75, 0.9] {
        for d in [16, 64, 256] {
            let emb = GridEmbedding::on_grid(CovarianceModel::fractional(h).unwrap(), Grid::uniform(d).unwrap()).unwrap();
            assert!(emb.jitter() <= 1e-10, "H={h} d={d} jitter {}", emb.jitter());
            let g = emb.gram();
            let l = emb.factor();
            let diff = (&l * l.transpose() - &g).abs().max();
            assert!(diff <= 1e-9 * g.abs().max(), "H={h} d={d} reconstruction {diff}");
        }
    }
}

#[test]
fn fbm_gram_matches_covariance_differences() {
    for h in [0.3, 0.6, 0.75] {
        for grid in [Grid::uniform(24).unwrap(), Grid::geometric(24, 2).unwrap()] {
            let emb = GridEmbedding::on_grid(CovarianceModel::fractional(h).unwrap(), grid.clone()).unwrap();
            let g = emb.gram();
            for i in 0..grid.cells() {
                for j in 0..grid.cells() {
                    let want = naive_increment_cov(h, grid.cell(i), grid.cell(j));
                    assert!((g[(i, j)] - want).abs() <= 1e-11, "H={h} ({i},{j}): {} vs {want}", g[(i, j)]);
                }
            }
        }
    }
}

#[test]
fn gram_is_model_covariance_of_increments() {
    let model = CovarianceModel::fractional(0.65).unwrap();
    let grid = Grid::uniform(10).unwrap();
    let emb = GridEmbedding::on_grid(model, grid.clone()).unwrap();
    let g = emb.gram();
    for i in 0..10 {
        let (a, b) = grid.cell(i);
        for j in 0..10 {
            let (c, d) = grid.cell(j);
            let cov = |s: f64, t: f64| model.covariance(&[s], &[t]);
            let want = cov(b, d) - cov(b, c) - cov(a, d) + cov(a, c);
            assert!((g[(i, j)] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn path_variances_match_model() {
    const N: usize = 20_000;
    let cases = [(CovarianceModel::BrownianMotion, 32usize, 1.0), (CovarianceModel::fractional(0.7).unwrap(), 16, 0.5f64.powf(1.4))];
    for (k, (model, node, want)) in cases.into_iter().enumerate() {
        let emb = GridEmbedding::on_grid(model, Grid::uniform(32).unwrap()).unwrap();
        let xs: Vec<f64> = par_draws(7, &format!("path/{k}"), N, |rng| {
            let xi = wiener_chaos::chaos::GaussianSample::draw(emb.generator_count(), rng);
            sample_path(&emb, &xi).unwrap().value_at(&[node]).powi(2)
        });
        let (m, se) = mean_with_se(&xs).unwrap();
        assert!((m - want).abs() <= 4.0 * se, "{model:?}: {m} +/- {se} vs {want}");
    }
}

#[test]
fn sheet_path_has_product_variance() {
    const N: usize = 20_000;
    let emb = GridEmbedding::on_grid(CovarianceModel::sheet(2).unwrap(), Grid::uniform(8).unwrap()).unwrap();
    let xs: Vec<f64> = (0..N as u64)
        .map(|i| {
            let xi = gaussian_sample(11, "sheet", i, emb.generator_count());
            sample_path(&emb, &xi).unwrap().value_at(&[4, 6]).powi(2)
        })
        .collect();
    let (m, se) = mean_with_se(&xs).unwrap();
    assert!((m - 0.5 * 0.75).abs() <= 4.0 * se, "{m} +/- {se}");
}

#[test]
fn max_kernel_norm_converges() {
    // K(s, t) = s ∨ t has 2‖K‖² = 1 on [0, 1]².
    let gap = |d: usize| {
        let emb = GridEmbedding::on_grid(CovarianceModel::BrownianMotion, Grid::uniform(d).unwrap()).unwrap();
        let m = embed_kernel2(|s, t| s[0].max(t[0]), &emb).unwrap();
        (second_moment_exact(&m) - 1.0).abs()
    };
    let (g64, g256) = (gap(64), gap(256));
    assert!(g256 < g64, "{g64} -> {g256}");
    assert!(g256 < 1e-3, "{g256}");
}

#[test]
fn sheet_product_kernel_is_kronecker_of_axes() {
    let emb = GridEmbedding::on_grid(CovarianceModel::sheet(2).unwrap(), Grid::geometric(6, 1).unwrap()).unwrap();
    let k = |s: f64, t: f64| 1.0 - s.max(t).sqrt();
    let full = embed_kernel2(|s, t| k(s[0], t[0]) * k(s[1], t[1]), &emb).unwrap();
    let axis = embed_axis_kernel(k, &emb).unwrap();
    let kron = kronecker(&[axis.clone(), axis]).unwrap();
    assert_eq!(full.dim(), kron.dim());
    for (a, b) in full.coeffs().iter().zip(kron.coeffs()) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn nonsymmetric_kernel_is_rejected() {
    let emb = GridEmbedding::on_grid(CovarianceModel::BrownianMotion, Grid::uniform(4).unwrap()).unwrap();
    let err = embed_kernel2(|s, t| s[0] - 2.0 * t[0], &emb).unwrap_err();
    assert!(matches!(err, Error::NonSymmetricKernel { .. }), "{err:?}");
}

#[test]
fn invalid_models_and_grids_are_rejected() {
    assert!(CovarianceModel::fractional(0.0).is_err());
    assert!(CovarianceModel::fractional(1.0).is_err());
    assert!(CovarianceModel::sheet(0).is_err());
    assert!(Grid::uniform(0).is_err());
    assert!(Grid::from_nodes(vec![0.0, 0.6, 0.4, 1.0]).is_err());
    assert!(Grid::anchored(1.5, 8).is_err());
}
