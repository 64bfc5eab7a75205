use std::f64::consts::PI;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Weibull};

use tallwind::copula::{calibrate, CalibrationOptions};
use tallwind::optimizer::{
    batch_gradient, fd_gradient, optimize, BatchPolicy, NoisyQuadratic, ObjectiveKind, ObjectiveSpec, OptimizerConfig,
    SampledProblem,
};
use tallwind::risk::{cvar, time_average};
use tallwind::surrogate::{base_moment_series, MeanProfileInflow};
use tallwind::synthetic::SyntheticClimate;
use tallwind::turbulence::{spectral_tensor, GridSpec, MannGenerator, SpectralParams, TurbulenceBox};
use tallwind::wind::{mean_wind_speed, turbulence_intensity_profile, ScenarioDistribution};
use tallwind::workflow::{RunConfig, WindLoadProblem};
use tallwind::{BuildingGeometry, Design, LoadConfig, MeanProfileConfig, WindScenario};

/// Two-sided Kolmogorov–Smirnov statistic against a continuous CDF.
fn ks(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Critical value at significance 0.01.
fn ks_critical(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

#[test]
fn spectral_tensor_is_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for gamma in [0.0, 1.0, 3.9, 6.0] {
        let params = SpectralParams::new(1.0, 33.6, gamma).unwrap();
        for _ in 0..300 {
            let scale = 10f64.powf(rng.random_range(-3.5..0.5));
            let k = [0, 1, 2].map(|_| rng.random_range(-1.0..1.0) * scale);
            let phi = spectral_tensor(k, &params);
            let m = Matrix3::from_fn(|i, j| phi[i][j]);
            let norm = m.norm();
            let hermitian_gap = (m - m.adjoint()).norm();
            assert!(hermitian_gap <= 1e-12 * norm.max(1e-300));
            let eig = m.symmetric_eigen().eigenvalues;
            for e in eig.iter() {
                assert!(*e >= -1e-12 * norm, "gamma {gamma}, k {k:?}: eigenvalue {e} vs norm {norm}");
            }
        }
    }
}

#[test]
fn fluctuations_are_statistically_homogeneous() {
    let params = SpectralParams::new(0.1, 20.0, 3.9).unwrap();
    let grid = GridSpec::new([32, 32, 32], [320.0, 320.0, 320.0]).unwrap();
    let generator = MannGenerator::new(params, grid).unwrap();
    let boxes: Vec<TurbulenceBox> = (0..50).map(|s| generator.generate(500 + s).unwrap()).collect();
    // covariance of u at separation 3 cells along x, at two distant base points
    let products = |base: [usize; 3]| -> Vec<f64> {
        boxes
            .iter()
            .map(|b| b.get(0, base[0], base[1], base[2]) * b.get(0, base[0] + 3, base[1], base[2]))
            .collect()
    };
    let pa = products([2, 4, 5]);
    let pb = products([17, 25, 21]);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let se = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64 / v.len() as f64).sqrt()
    };
    let diff = (mean(&pa) - mean(&pb)).abs();
    let bound = 4.0 * (se(&pa).powi(2) + se(&pb).powi(2)).sqrt();
    assert!(diff < bound, "covariances {} vs {} (bound {bound})", mean(&pa), mean(&pb));
    // the same separation in a box-wide average agrees with both point estimates
    let pooled: f64 = boxes
        .iter()
        .map(|b| {
            let mut acc = 0.0;
            for i in 0..29 {
                for j in 0..32 {
                    for k in 0..32 {
                        acc += b.get(0, i, j, k) * b.get(0, i + 3, j, k);
                    }
                }
            }
            acc / (29 * 32 * 32) as f64
        })
        .sum::<f64>()
        / 50.0;
    assert!((mean(&pa) - pooled).abs() < 4.0 * se(&pa));
}

#[test]
fn intensity_profile_follows_reference_shape() {
    let cfg = RunConfig::default();
    let profile = cfg.wind.profile();
    let u_star = 0.4;
    let z0 = 0.05;
    let target = mean_wind_speed(80.0, u_star, z0, &profile).unwrap() / (u_star * (80.0f64 / z0).ln());
    let grid = cfg.turbulence.grid().unwrap();
    let params = tallwind::turbulence::calibrate_energy(target, &cfg.turbulence.shape().unwrap(), &grid).unwrap();
    let generator = MannGenerator::new(params, grid).unwrap();
    let boxes: Vec<TurbulenceBox> = (0..12).map(|s| generator.generate(s).unwrap().scaled(u_star)).collect();
    let heights = [20.0, 50.0, 80.0, 120.0, 180.0];
    let intensity =
        turbulence_intensity_profile(&boxes, |z| mean_wind_speed(z, u_star, z0, &profile).unwrap(), &heights).unwrap();
    for (z, i) in heights.iter().zip(&intensity) {
        let reference = 1.0 / (z / z0).ln();
        assert!((i[0] / reference - 1.0).abs() < 0.2, "z = {z}: {} vs {reference}", i[0]);
    }
}

fn synthetic_distribution() -> ScenarioDistribution {
    let records = SyntheticClimate::basel_like().generate(8_000, 21).unwrap();
    let (model, _) = calibrate(&records, &CalibrationOptions::default()).unwrap();
    ScenarioDistribution::new(model, MeanProfileConfig::default())
}

#[test]
fn scenario_marginals_pass_ks() {
    // one regime, so the speed margin really is Weibull
    let mut climate = SyntheticClimate::basel_like();
    climate.regimes.truncate(1);
    climate.regimes[0].weight = 1.0;
    let records = climate.generate(8_000, 22).unwrap();
    let (model, _) = calibrate(&records, &CalibrationOptions::default()).unwrap();
    let dist = ScenarioDistribution::new(model, MeanProfileConfig::default());
    let model = dist.model.clone().unwrap();
    let profile = MeanProfileConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 10_000;
    let scenarios: Vec<WindScenario> = (0..n).map(|_| dist.sample_scenario(&mut rng).unwrap()).collect();
    let crit = ks_critical(n);

    let z0: Vec<f64> = scenarios.iter().map(|s| s.roughness_length).collect();
    assert!(ks(z0, |x| ((x - 0.01) / 0.09).clamp(0.0, 1.0)) < crit);
    let r: Vec<f64> = scenarios.iter().map(|s| s.seed).collect();
    assert!(ks(r, |x| x.clamp(0.0, 1.0)) < crit);
    let theta: Vec<f64> = scenarios.iter().map(|s| s.direction).collect();
    assert!(ks(theta, |x| model.direction.cdf(x)) < crit);

    // reference-height speeds follow the fitted Weibull truncated at the
    // positivity threshold of u★, which does not depend on z0
    let w = Weibull::new(model.speed.shape, model.speed.scale).unwrap();
    let threshold = 34.5 * profile.coriolis * profile.reference_height / profile.kappa;
    let f0 = w.cdf(threshold);
    let speeds: Vec<f64> = scenarios
        .iter()
        .map(|s| mean_wind_speed(profile.reference_height, s.friction_velocity, s.roughness_length, &profile).unwrap())
        .collect();
    assert!(speeds.iter().all(|&u| u > threshold));
    let d = ks(speeds, |x| ((w.cdf(x) - f0) / (1.0 - f0)).max(0.0));
    assert!(d < crit, "speed KS {d} >= {crit}");
}

#[test]
fn cvar_run_reports_exact_batch_cvar() {
    let q = NoisyQuadratic::new(vec![1.0, -0.5], 0.3, 5);
    let spec = ObjectiveSpec {
        beta: 0.9,
        ..ObjectiveSpec::new(ObjectiveKind::Cvar, vec![-10.0; 2], vec![10.0; 2])
    };
    let config = OptimizerConfig {
        batch: BatchPolicy::Adaptive { initial: 5, max: 64 },
        fd_steps: vec![1e-3; 2],
        max_iterations: 25,
        ..OptimizerConfig::default()
    };
    let rec = optimize(&q, &[3.0, 2.0], &spec, &config).unwrap();
    let last = rec.last().unwrap();
    let values: Vec<f64> = (last.first_sample..last.first_sample + last.batch_size as u64)
        .map(|i| {
            let s = q.draw(i).unwrap();
            time_average(&q.evaluate(&last.design, &s).unwrap())
        })
        .collect();
    let direct = cvar(&values, 0.9).unwrap().value;
    assert!((last.objective - direct).abs() <= 1e-9 * direct.abs(), "{} vs {direct}", last.objective);
    assert!(1.0 - last.objective / rec.iterations[0].objective > 0.0);
}

#[test]
fn cvar_batch_on_time_series_matches_pooled_minimum() {
    let mut cfg = RunConfig::default();
    cfg.turbulence.counts = [64, 8, 16];
    cfg.turbulence.extents = [2048.0, 128.0, 256.0];
    let problem = WindLoadProblem::new(&cfg, Some(synthetic_distribution()), 1, false).unwrap();
    let samples: Vec<_> = (0..6).map(|i| problem.draw(i).unwrap()).collect();
    let design = problem.initial_coordinates();
    let spec = ObjectiveSpec::new(ObjectiveKind::Cvar, vec![0.0, 1.5], vec![2.0 * PI, 6.0]);
    let eval = batch_gradient(&problem, &design, &samples, &spec, &[1e-2, 1e-2]).unwrap();

    // pooled trapezoid-weighted RU objective minimized over every sample value
    let series: Vec<_> = samples.iter().map(|s| problem.evaluate(&design, s).unwrap()).collect();
    let ru = |s: f64| -> f64 {
        let tail: f64 = series
            .iter()
            .map(|m| {
                let v = m.values();
                let n = v.len() - 1;
                let h: Vec<f64> = v.iter().map(|x| (x - s).max(0.0)).collect();
                (0..n).map(|i| 0.5 * (h[i] + h[i + 1])).sum::<f64>() / n as f64
            })
            .sum::<f64>()
            / series.len() as f64;
        s + tail / (1.0 - spec.beta)
    };
    let best = series
        .iter()
        .flat_map(|m| m.values().iter().copied())
        .map(ru)
        .fold(f64::INFINITY, f64::min);
    assert!((eval.objective - best).abs() <= 1e-9 * best, "{} vs {best}", eval.objective);
}

#[test]
fn finite_differences_are_second_order_on_smooth_objectives() {
    let f = |z: &[f64]| Ok(z[0].sin() * (0.5 * z[1]).exp() + z[0] * z[1] * z[1]);
    let grad = |z: &[f64]| [z[0].cos() * (0.5 * z[1]).exp() + z[1] * z[1], 0.5 * z[0].sin() * (0.5 * z[1]).exp() + 2.0 * z[0] * z[1]];
    let z = [0.7, -0.4];
    let exact = grad(&z);
    let errors: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&h| {
            let g = fd_gradient(f, &z, &[h, h], &[-5.0; 2], &[5.0; 2]).unwrap();
            ((g[0] - exact[0]).powi(2) + (g[1] - exact[1]).powi(2)).sqrt()
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log10();
        assert!(order >= 1.8, "errors {errors:?}");
    }
}

#[test]
fn surrogate_gradient_converges_in_roof_diameter() {
    // mean-flow objective, fixed scenario: central differences converge at second order
    let scenario = WindScenario::new(0.35, 1.3, 0.04, 0.2).unwrap();
    let inflow = MeanProfileInflow { scenario, profile: MeanProfileConfig::default() };
    let load = LoadConfig::default();
    let geom = BuildingGeometry::reference(Design::new(0.8, 26.0)).unwrap();
    let j = |a: f64| time_average(&base_moment_series(&geom.with_design(Design::new(0.8, a)).unwrap(), &inflow, &load).unwrap().norm);
    let d = |h: f64| (j(26.0 + h) - j(26.0 - h)) / (2.0 * h);
    let reference = d(1e-3);
    let e1 = (d(0.8) - reference).abs();
    let e2 = (d(0.4) - reference).abs();
    assert!((e1 / e2).log2() >= 1.8, "{e1} {e2}");
}
