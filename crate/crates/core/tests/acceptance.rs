//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal, Weibull};
use statrs::statistics::Statistics;

use tallwind::copula::{calibrate, pseudo_observations, write_records, CalibrationOptions, EmpiricalCopula, WindRecord};
use tallwind::optimizer::{
    gradient_statistics, next_batch_size, norm_test, optimize, BatchPolicy, NoisyQuadratic, ObjectiveKind,
    ObjectiveSpec, OptimizerConfig,
};
use tallwind::risk::{cvar, time_average, value_at_risk};
use tallwind::surrogate::{base_moment_series, MeanProfileInflow, ScenarioInflow, UniformInflow, ZeroInflow};
use tallwind::synthetic::SyntheticClimate;
use tallwind::turbulence::{discrete_band_variance, GridSpec, MannGenerator, SpectralParams};
use tallwind::workflow::{cmd_calibrate, cmd_evaluate, cmd_optimize, Problem, RunConfig};
use tallwind::{BuildingGeometry, Design, LoadConfig, MeanProfileConfig, WindScenario};

fn report(id: &str, ok: bool, detail: String) {
    println!("{} {id}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{id} failed: {detail}");
}

// ---------------------------------------------------------------------------
// 1. Risk measures against sorted tail averages

/// CVaR at level `b/10` from the sorted sample, with integer-exact weights:
/// `[10 Σ_{i>k} x_(i) + (10k − bN) x_(k)] / ((10 − b) N)`, `k = ⌈bN/10⌉`.
fn tail_average_cvar(sorted: &[f64], b: usize) -> f64 {
    let n = sorted.len();
    let k = (b * n).div_ceil(10).max(1);
    let upper: f64 = sorted[k..].iter().sum();
    (10.0 * upper + (10 * k - b * n) as f64 * sorted[k - 1]) / ((10 - b) * n) as f64
}

/// Minimum of the Rockafellar–Uryasev objective over the sample points.
fn brute_force_ru(values: &[f64], beta: f64) -> f64 {
    values
        .iter()
        .map(|&s| s + values.iter().map(|&x| (x - s).max(0.0)).sum::<f64>() / values.len() as f64 / (1.0 - beta))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn ac1_risk_measure_oracles() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for n in 1..=20usize {
        for trial in 0..25 {
            let values: Vec<f64> = (0..n)
                .map(|_| {
                    // every fifth trial uses small integers so ties occur
                    if trial % 5 == 0 {
                        rng.random_range(0..4) as f64
                    } else {
                        rng.random_range(-5.0..20.0)
                    }
                })
                .collect();
            let mut sorted = values.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for b in 1..=9usize {
                let beta = b as f64 / 10.0;
                let got = cvar(&values, beta).unwrap();
                let var = value_at_risk(&values, beta).unwrap();
                let k = (b * n).div_ceil(10).max(1);
                let scale = 1.0 + sorted.iter().map(|x| x.abs()).fold(0.0, f64::max);
                let e1 = (got.value - tail_average_cvar(&sorted, b)).abs() / scale;
                let e2 = (got.value - brute_force_ru(&values, beta)).abs() / scale;
                worst = worst.max(e1).max(e2);
                assert_eq!(var, sorted[k - 1], "VaR n={n} beta={beta}");
                checked += 1;
            }
        }
    }
    let ten: Vec<f64> = (1..=10).map(f64::from).collect();
    let c9 = cvar(&ten, 0.9).unwrap();
    let c5 = cvar(&ten, 0.5).unwrap();
    let exact = value_at_risk(&ten, 0.9).unwrap() == 9.0
        && c9.value == 10.0
        && value_at_risk(&ten, 0.5).unwrap() == 5.0
        && c5.value == 8.0;
    let elapsed = t.elapsed().as_secs_f64();
    report(
        "AC1 risk-measure oracles",
        worst <= 1e-12 && exact && elapsed < 1.0,
        format!("{checked} cases, max rel. error {worst:.1e}, exact (9,10)/(5,8) {exact}, {elapsed:.2}s"),
    );
}

// ---------------------------------------------------------------------------
// 2. CVaR in the β → 0 limit

#[test]
fn ac2_cvar_small_beta_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let xs: Vec<f64> = (0..10_000)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (0.5 * z).exp() * 3.0
        })
        .collect();
    let c = cvar(&xs, 1e-6).unwrap().value;
    let mean = xs.iter().mean();
    let std = xs.iter().std_dev();
    let gap = (c - mean).abs();
    report(
        "AC2 CVaR small-level limit",
        gap < 1e-4 * std,
        format!("|CVaR - mean| = {gap:.3e}, bound {:.3e}", 1e-4 * std),
    );
}

// ---------------------------------------------------------------------------
// 3 and 4. Norm test, batch growth and adaptive-sampling savings

fn benchmark_config(batch: BatchPolicy) -> OptimizerConfig {
    OptimizerConfig {
        step_size: 0.5,
        theta: 0.5,
        batch,
        fd_steps: vec![1e-3, 1e-3],
        tolerance: 0.01,
        stall_window: 3,
        max_iterations: 200,
    }
}

fn benchmark(seed: u64) -> NoisyQuadratic {
    let mut q = NoisyQuadratic::new(vec![1.0, -0.5], 0.2, seed);
    q.offset = 0.1;
    q
}

fn benchmark_spec() -> ObjectiveSpec {
    ObjectiveSpec::new(ObjectiveKind::Mean, vec![-10.0; 2], vec![10.0; 2])
}

#[test]
fn ac3_norm_test_and_batch_growth() {
    let t = Instant::now();
    let g = vec![vec![1.0], vec![3.0]];
    let (mean, var) = gradient_statistics(&g).unwrap();
    let hand = mean == vec![2.0]
        && var == Some(2.0)
        && norm_test(&g, &mean, 0.5).unwrap()
        && !norm_test(&g, &mean, 0.4).unwrap()
        && next_batch_size(&g, &mean, 0.4, 64).unwrap() == 4;

    let config = benchmark_config(BatchPolicy::Adaptive { initial: 2, max: 128 });
    let mut within = 0;
    let mut monotone = true;
    for seed in 0..20 {
        let q = benchmark(seed);
        let rec = optimize(&q, &[3.0, 2.0], &benchmark_spec(), &config).unwrap();
        monotone &= rec.iterations.windows(2).all(|w| w[1].batch_size >= w[0].batch_size);
        if q.distance_to_optimum(rec.final_design().unwrap()) < 0.05 {
            within += 1;
        }
    }
    let elapsed = t.elapsed().as_secs_f64();
    report(
        "AC3 norm test and batch growth",
        hand && monotone && within >= 18 && elapsed < 60.0,
        format!("hand cases {hand}, nondecreasing batches {monotone}, {within}/20 within 0.05, {elapsed:.1}s"),
    );
}

#[test]
fn ac4_adaptive_sampling_savings() {
    let t = Instant::now();
    let adaptive = benchmark_config(BatchPolicy::Adaptive { initial: 2, max: 128 });
    let fixed = benchmark_config(BatchPolicy::Fixed { size: 128 });
    let (mut n_adaptive, mut n_fixed) = (0u64, 0u64);
    let mut all_converged = true;
    for seed in 0..20 {
        let q = benchmark(seed);
        let a = optimize(&q, &[3.0, 2.0], &benchmark_spec(), &adaptive).unwrap();
        let f = optimize(&q, &[3.0, 2.0], &benchmark_spec(), &fixed).unwrap();
        all_converged &= a.converged && f.converged;
        n_adaptive += a.total_samples;
        n_fixed += f.total_samples;
    }
    let saving = 1.0 - n_adaptive as f64 / n_fixed as f64;
    let elapsed = t.elapsed().as_secs_f64();
    report(
        "AC4 adaptive-sampling efficiency",
        all_converged && saving >= 0.4 && elapsed < 300.0,
        format!(
            "adaptive {n_adaptive} vs fixed {n_fixed} samples over 20 seeds, saving {:.1}%, all converged {all_converged}, {elapsed:.1}s",
            100.0 * saving
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. Turbulence synthesis

/// Isotropic von Kármán tensor diagonal summed over the resolved modes: every
/// index except k = 0 and any Nyquist index, weighted by the cell volume.
fn isotropic_band_variance(energy: f64, l: f64, n: usize, extent: f64) -> [f64; 3] {
    let dk = 2.0 * PI / extent;
    let dv = dk * dk * dk;
    let idx = |i: usize| -> Option<f64> {
        if i == n / 2 {
            None
        } else if i < n / 2 {
            Some(i as f64 * dk)
        } else {
            Some((i as f64 - n as f64) * dk)
        }
    };
    let mut acc = [0.0; 3];
    for i in 0..n {
        for j in 0..n {
            for m in 0..n {
                let (Some(k1), Some(k2), Some(k3)) = (idx(i), idx(j), idx(m)) else { continue };
                let k2sum = k1 * k1 + k2 * k2 + k3 * k3;
                if k2sum == 0.0 {
                    continue;
                }
                let k = k2sum.sqrt();
                let kl = k * l;
                let e = energy * l.powf(5.0 / 3.0) * kl.powi(4) / (1.0 + kl * kl).powf(17.0 / 6.0);
                let c = e / (4.0 * PI * k2sum * k2sum);
                for (a, ki) in acc.iter_mut().zip([k1, k2, k3]) {
                    *a += c * (k2sum - ki * ki) * dv;
                }
            }
        }
    }
    acc
}

#[test]
fn ac5_turbulence_synthesis() {
    let t = Instant::now();
    let (n, extent, l) = (64usize, 1024.0, 33.6);
    let params = SpectralParams::new(0.05, l, 0.0).unwrap();
    let grid = GridSpec::new([n; 3], [extent; 3]).unwrap();
    let oracle = isotropic_band_variance(params.energy_coefficient, l, n, extent);
    let library = discrete_band_variance(&params, &grid).unwrap();
    let quadrature_agrees = (0..3).all(|c| (library[c] - oracle[c]).abs() <= 1e-9 * oracle[c]);

    let generator = MannGenerator::new(params, grid).unwrap();
    let first = generator.generate(7).unwrap();
    let single = first.component_variance();
    let single_err = (0..3).map(|c| (single[c] / oracle[c] - 1.0).abs()).fold(0.0, f64::max);

    let mut ensemble = [0.0; 3];
    for seed in 0..50u64 {
        let v = generator.generate(1000 + seed).unwrap().component_variance();
        for c in 0..3 {
            ensemble[c] += v[c] / 50.0;
        }
    }
    let hi = ensemble.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ensemble.iter().cloned().fold(f64::MAX, f64::min);
    let spread = hi / lo - 1.0;

    let again = generator.generate(7).unwrap();
    let identical = first.data().iter().zip(again.data()).all(|(a, b)| a.to_bits() == b.to_bits());
    let elapsed = t.elapsed().as_secs_f64();
    report(
        "AC5 turbulence synthesis",
        quadrature_agrees && single_err < 0.15 && spread < 0.10 && identical && elapsed < 300.0,
        format!(
            "single-box variance error {:.1}%, ensemble spread {:.1}%, quadrature match {quadrature_agrees}, bit-identical {identical}, {elapsed:.1}s",
            100.0 * single_err,
            100.0 * spread
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Copula pipeline

/// Von Mises quantile by a fine cumulative trapezoid table.
struct VonMisesTable {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl VonMisesTable {
    fn new(mu: f64, kappa: f64) -> Self {
        let m = 20_000;
        let grid: Vec<f64> = (0..=m).map(|i| mu - PI + 2.0 * PI * i as f64 / m as f64).collect();
        let pdf: Vec<f64> = grid.iter().map(|t| (kappa * ((t - mu).cos() - 1.0)).exp()).collect();
        let mut cdf = vec![0.0; m + 1];
        for i in 1..=m {
            cdf[i] = cdf[i - 1] + 0.5 * (pdf[i] + pdf[i - 1]) * (grid[i] - grid[i - 1]);
        }
        let total = cdf[m];
        cdf.iter_mut().for_each(|c| *c /= total);
        Self { grid, cdf }
    }

    fn quantile(&self, p: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < p).clamp(1, self.cdf.len() - 1);
        let w = (p - self.cdf[i - 1]) / (self.cdf[i] - self.cdf[i - 1]);
        self.grid[i - 1] + w * (self.grid[i] - self.grid[i - 1])
    }
}

fn kendall_tau_naive(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[i] - x[j]).signum() * (y[i] - y[j]).signum();
            s += a as i64;
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}

/// Largest violation of `max(u+v−1,0) ≤ C(u,v) ≤ min(u,v)` on a 50×50 grid.
fn frechet_violation(c: &EmpiricalCopula) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 1..=50 {
        for j in 1..=50 {
            let (u, v) = (i as f64 / 50.0, j as f64 / 50.0);
            let val = c.cdf(u, v).unwrap();
            worst = worst.max((u + v - 1.0).max(0.0) - val).max(val - u.min(v));
        }
    }
    worst
}

fn max_margin_error(c: &EmpiricalCopula) -> f64 {
    let mut worst: f64 = 0.0;
    for axis in 0..2 {
        let mut xs: Vec<f64> = c.pairs().iter().map(|p| p[axis]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        for (i, x) in xs.iter().enumerate() {
            worst = worst.max((x - i as f64 / n).abs()).max(((i + 1) as f64 / n - x).abs());
        }
    }
    worst
}

#[test]
fn ac6_copula_pipeline() {
    let t = Instant::now();
    let (scale, shape, mu, kappa, tau) = (10.0, 2.0, PI, 4.0, 0.5);
    let rho = (PI * tau / 2.0).sin();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let weibull = Weibull::new(shape, scale).unwrap();
    let vm = VonMisesTable::new(mu, kappa);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let start = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let n = 10_000;
    let records: Vec<WindRecord> = (0..n)
        .map(|i| {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let z2 = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
            let theta = vm.quantile(normal.cdf(z1));
            let speed = weibull.inverse_cdf(normal.cdf(z2));
            WindRecord::new(
                start + chrono::Duration::hours(i as i64),
                speed,
                theta.to_degrees().rem_euclid(360.0),
            )
            .unwrap()
        })
        .collect();
    let options = CalibrationOptions {
        components: 1,
        ..CalibrationOptions::default()
    };
    let (model, _) = calibrate(&records, &options).unwrap();
    let lambda_err = (model.speed.scale / scale - 1.0).abs();
    let k_err = (model.speed.shape / shape - 1.0).abs();
    let mu_hat = model.direction.components()[0].location;
    let mu_err = ((mu_hat - mu + PI).rem_euclid(2.0 * PI) - PI).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let (thetas, speeds): (Vec<f64>, Vec<f64>) = (0..n).map(|_| model.sample_joint(&mut rng).unwrap()).unzip();
    let tau_hat = kendall_tau_naive(&thetas, &speeds);

    // bounds hold exactly for rank-based pseudo-observations and up to the
    // marginal-fit error for the fitted-marginal transform
    let ranks = rank_copula(&records);
    let rank_violation = frechet_violation(&ranks);
    let fitted = pseudo_observations(&records, &model.direction, &model.speed).unwrap();
    let fitted_violation = frechet_violation(&fitted);
    let margin = max_margin_error(&fitted);
    let elapsed = t.elapsed().as_secs_f64();
    report(
        "AC6 copula pipeline",
        lambda_err < 0.05
            && k_err < 0.05
            && mu_err < 0.05
            && (tau_hat - tau).abs() < 0.05
            && rank_violation <= 1e-12
            && fitted_violation <= margin
            && elapsed < 120.0,
        format!(
            "scale err {:.2}%, shape err {:.2}%, location err {mu_err:.4} rad, resampled tau {tau_hat:.3}, Frechet violation {rank_violation:.1e} (ranks) / {fitted_violation:.1e} <= {margin:.1e} (fitted), {elapsed:.1}s",
            100.0 * lambda_err,
            100.0 * k_err
        ),
    );
}

fn rank_copula(records: &[WindRecord]) -> EmpiricalCopula {
    let n = records.len();
    let ranks = |key: &dyn Fn(&WindRecord) -> f64| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| key(&records[a]).partial_cmp(&key(&records[b])).unwrap());
        let mut r = vec![0.0; n];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = (pos + 1) as f64 / n as f64;
        }
        r
    };
    let u = ranks(&|r| r.direction_deg);
    let v = ranks(&|r| r.speed);
    EmpiricalCopula::new(u.into_iter().zip(v).map(|(a, b)| [a, b]).collect()).unwrap()
}

// ---------------------------------------------------------------------------
// 7. Surrogate physics

fn cylinder(n_strips: usize) -> BuildingGeometry {
    BuildingGeometry::new(180.0, [30.0, 30.0], 225.0 * PI, n_strips, Design::new(0.0, 30.0)).unwrap()
}

#[test]
fn ac7_surrogate_physics() {
    let t = Instant::now();
    let load = LoadConfig::default();

    let twisted = BuildingGeometry::reference(Design::new(1.0, 24.0)).unwrap();
    let still = base_moment_series(&twisted, &ZeroInflow, &load).unwrap();
    let zero = still.norm.values().iter().all(|&m| m == 0.0);

    // two strips at 45 m and 135 m on a 30 m cylinder: Cd = 0.2 + 1.8/3.6
    let u = 12.0;
    let two = base_moment_series(&cylinder(2), &UniformInflow { velocity: [u, 0.0, 0.0] }, &load).unwrap();
    let force = 0.5 * 1.225 * 0.7 * 30.0 * 90.0 * u * u;
    let expected = force * (45.0 + 135.0);
    let hand_err = two.norm.values().iter().map(|m| (m - expected).abs() / expected).fold(0.0, f64::max);

    let velocity = [7.0, -3.0, 0.0];
    let base = time_average(&base_moment_series(&twisted, &UniformInflow { velocity }, &load).unwrap().norm);
    let scaling_err = [2.0, 3.5]
        .iter()
        .map(|&c| {
            let v = [c * velocity[0], c * velocity[1], 0.0];
            let m = time_average(&base_moment_series(&twisted, &UniformInflow { velocity: v }, &load).unwrap().norm);
            (m / (c * c * base) - 1.0).abs()
        })
        .fold(0.0, f64::max);

    let profile = MeanProfileConfig::default();
    let scenario = WindScenario::new(0.4, 4.2, 0.05, 0.3).unwrap();
    let inflow = MeanProfileInflow { scenario, profile };
    let m32 = time_average(&base_moment_series(&twisted.with_strips(32).unwrap(), &inflow, &load).unwrap().norm);
    let m64 = time_average(&base_moment_series(&twisted.with_strips(64).unwrap(), &inflow, &load).unwrap().norm);
    let strip_err = (m32 / m64 - 1.0).abs();

    // FD convergence in both design coordinates through a turbulent inflow,
    // the same box at every stencil point
    let params = SpectralParams::new(0.1, 33.6, 3.9).unwrap();
    let grid = GridSpec::new([256, 16, 32], [4096.0, 128.0, 256.0]).unwrap();
    let gust = MannGenerator::new(params, grid).unwrap().generate(scenario.generator_seed()).unwrap();
    let inflow = ScenarioInflow::new(scenario, profile, &gust, true).unwrap();
    let j = |psi: f64, a: f64| -> f64 {
        let g = twisted.with_design(Design::new(psi, a)).unwrap();
        time_average(&base_moment_series(&g, &inflow, &load).unwrap().norm)
    };
    let (psi0, a0) = (1.0, 24.0);
    let mut orders = Vec::new();
    for coord in 0..2 {
        let scale = if coord == 0 { 1.0 } else { 10.0 };
        let d = |h: f64| -> f64 {
            let h = h * scale;
            if coord == 0 {
                (j(psi0 + h, a0) - j(psi0 - h, a0)) / (2.0 * h)
            } else {
                (j(psi0, a0 + h) - j(psi0, a0 - h)) / (2.0 * h)
            }
        };
        let reference = d(1e-4);
        let hs = [0.08, 0.04, 0.02];
        let errs: Vec<f64> = hs.iter().map(|&h| (d(h) - reference).abs()).collect();
        for w in errs.windows(2) {
            orders.push((w[0] / w[1]).log2());
        }
    }
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let elapsed = t.elapsed().as_secs_f64();
    report(
        "AC7 surrogate physics",
        zero && hand_err <= 1e-12 && scaling_err <= 1e-12 && strip_err < 0.01 && min_order >= 1.8 && elapsed < 120.0,
        format!(
            "zero wind {zero}, two-strip rel. error {hand_err:.1e}, quadratic scaling error {scaling_err:.1e}, 32 vs 64 strips {:.3}%, min FD order {min_order:.2}, {elapsed:.1}s",
            100.0 * strip_err
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. The predominant-wind design is poor under the full wind climate

fn study_one(dir: &std::path::Path) -> RunConfig {
    let records = SyntheticClimate::basel_like().generate(20_000, 11).unwrap();
    let data = dir.join("wind.csv");
    write_records(std::fs::File::create(&data).unwrap(), &records).unwrap();
    let mut cfg = RunConfig::default();
    cfg.paths.wind_data = Some(data);
    cfg.paths.output_dir = dir.join("out");
    cfg.design.twist_deg = 160.0;
    cfg.design.roof_diameters = [35.0, 20.0];
    cfg.design.optimize_roof = false;
    cfg.optimizer.max_iterations = 20;
    cfg.optimizer.max_batch = 32;
    cfg
}

#[test]
fn ac8_predominant_wind_design_is_worse() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = study_one(dir.path());
    cmd_calibrate(&cfg).unwrap();
    let mut worse = 0;
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        cfg.master_seed = seed;
        let mut twist = [0.0; 2];
        for (slot, kind) in [Problem::Prob1, Problem::Prob3].into_iter().enumerate() {
            cfg.problem.kind = kind;
            cfg.optimizer.step_size = if kind == Problem::Prob1 { 5.0 } else { 1.0 };
            twist[slot] = cmd_optimize(&cfg).unwrap().summary.final_design.twist_deg;
        }
        let mean1 = cmd_evaluate(&cfg, twist[0], None, 30).unwrap().mean;
        let mean3 = cmd_evaluate(&cfg, twist[1], None, 30).unwrap().mean;
        if mean3 > mean1 {
            worse += 1;
        }
        lines.push(format!(
            "seed {seed}: prob1 {:.1} deg -> {mean1:.4e}, prob3 {:.1} deg -> {mean3:.4e}",
            twist[0], twist[1]
        ));
    }
    for l in &lines {
        println!("    {l}");
    }
    let elapsed = t.elapsed().as_secs_f64();
    report(
        "AC8 predominant-wind design under uncertainty",
        worse >= 4 && elapsed < 1800.0,
        format!("prob3 design worse in {worse}/5 seeds, {elapsed:.0}s"),
    );
}

// ---------------------------------------------------------------------------
// 9. Determinism of full optimization runs

#[test]
fn ac9_optimize_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let records = SyntheticClimate::basel_like().generate(3_000, 5).unwrap();
    let data = dir.path().join("wind.csv");
    write_records(std::fs::File::create(&data).unwrap(), &records).unwrap();
    let mut cfg = RunConfig::default();
    cfg.master_seed = 42;
    cfg.paths.wind_data = Some(data);
    cfg.paths.model = Some(dir.path().join("model.json"));
    cfg.problem.kind = Problem::Prob2;
    cfg.turbulence.counts = [64, 8, 16];
    cfg.turbulence.extents = [2048.0, 128.0, 256.0];
    cfg.optimizer.max_iterations = 4;
    cmd_calibrate(&cfg).unwrap();
    let mut files = Vec::new();
    for (run, workers) in [(0, 1), (1, 2)] {
        cfg.workers = workers;
        cfg.paths.output_dir = dir.path().join(format!("run{run}"));
        let out = cmd_optimize(&cfg).unwrap();
        files.push(std::fs::read(out.record_path).unwrap());
    }
    let identical = files[0] == files[1] && !files[0].is_empty();
    report(
        "AC9 optimize determinism",
        identical,
        format!("record.csv byte-identical across two runs (1 and 2 workers): {identical}, {} bytes", files[0].len()),
    );
}
