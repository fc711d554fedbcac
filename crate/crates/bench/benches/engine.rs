use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use redstress::copula::{calibrate_theta, cm_stats, diagonal, CopulaFamily, CopulaSpec};
use redstress::flowdata::RedemptionSample;
use redstress::liability::{calibrate_im, FundEstimate, ImModel, LiabilityStructure, MomentWeights};
use redstress::riskmeasures::{empirical_measures, max_vs_sum_ratio};
use redstress::simulate::{simulate_cm, SimConfig};
use redstress::zeroinflated::{fit_mle, implied_return_time, zi_cvar, zi_stress, ZiModel};

fn analytics(c: &mut Criterion) {
    let m = ZiModel::beta_musigma(0.1, 0.2, 0.1).unwrap();
    c.bench_function("zi_cvar", |b| b.iter(|| zi_cvar(black_box(&m), 0.99).unwrap()));
    c.bench_function("zi_stress", |b| b.iter(|| zi_stress(black_box(&m), 10.0).unwrap()));
    c.bench_function("implied_return_time", |b| b.iter(|| implied_return_time(black_box(&m), 0.99).unwrap()));
    c.bench_function("max_vs_sum_ratio_table", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for n in [1, 2, 3, 4, 5, 10, 50, 100] {
                for p in [0.0001, 0.001, 0.01, 0.05, 0.1, 0.2, 0.5] {
                    acc += max_vs_sum_ratio(p, n).unwrap();
                }
            }
            acc
        })
    });
}

fn copulas(c: &mut Criterion) {
    let clayton = CopulaSpec::clayton(2.0).unwrap();
    let normal = CopulaSpec::normal(0.5).unwrap();
    c.bench_function("diagonal_clayton", |b| b.iter(|| diagonal(&clayton, black_box(0.9), 20.0).unwrap()));
    c.bench_function("diagonal_normal", |b| b.iter(|| diagonal(&normal, black_box(0.9), 20.0).unwrap()));
    c.bench_function("calibrate_theta_clayton", |b| {
        b.iter(|| calibrate_theta(black_box(0.25), 0.2, 0.05, CopulaFamily::Clayton).unwrap())
    });
    let im = ImModel::new(LiabilityStructure::equal(10).unwrap(), 0.2, 0.5, 0.3).unwrap();
    c.bench_function("cm_stats_normal", |b| b.iter(|| cm_stats(black_box(&im), &normal).unwrap()));
}

fn estimation(c: &mut Criterion) {
    let values: Vec<f64> = (0..20_000)
        .map(|i| if i % 5 == 0 { ((i as f64 * 0.618_034) % 1.0) * 0.3 + 1e-4 } else { 0.0 })
        .collect();
    let sample = RedemptionSample::from_values(None, values.clone()).unwrap();
    c.bench_function("fit_mle_20k", |b| b.iter(|| fit_mle(black_box(&sample)).unwrap()));
    c.bench_function("empirical_measures_20k", |b| {
        b.iter(|| empirical_measures(black_box(&values), 2.0, 0.99, 200).unwrap())
    });
    let fund = FundEstimate { p_hat: 0.0823, mu_hat: 0.0323, sigma_hat: 0.1086, effective_n: 5.0 };
    c.bench_function("calibrate_im_single_fund", |b| {
        b.iter(|| calibrate_im(black_box(&[fund]), &[1.0], MomentWeights::default()).unwrap())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_cm_100k");
    group.sample_size(10);
    let im = ImModel::new(LiabilityStructure::equal(10).unwrap(), 0.2, 0.5, 0.3).unwrap();
    for copula in [CopulaSpec::PRODUCT, CopulaSpec::clayton(2.0).unwrap(), CopulaSpec::normal(0.5).unwrap()] {
        group.bench_with_input(BenchmarkId::from_parameter(copula.family.name()), &copula, |b, cop| {
            b.iter(|| simulate_cm(&im, cop, &SimConfig::new(100_000, 42)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, analytics, copulas, estimation, monte_carlo);
criterion_main!(benches);
