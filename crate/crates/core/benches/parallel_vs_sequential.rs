use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use prs_core::coalition::ObservedAggregation;
use prs_core::dataset::{filter_dataset, generate_synthetic, SynthConfig};
use prs_core::inference::{bootstrap_phi, BootstrapConfig, TeamGame};
use prs_core::xga::{build_features, feature_importance, fit_cloglog, oob_bootstrap_eval, FeatureSpec, GlmConfig, LearnerConfig};
use prs_core::Execution;

fn schedules() -> Vec<Execution> {
    if Execution::parallel_available() {
        vec![Execution::Sequential, Execution::Parallel]
    } else {
        vec![Execution::Sequential]
    }
}

fn bench_prs_bootstrap(c: &mut Criterion) {
    let (ds, _) = generate_synthetic(&SynthConfig::default()).unwrap();
    let ds = filter_dataset(&ds, 60).unwrap();
    let spec = FeatureSpec::xga();
    let model = fit_cloglog(&build_features(&ds.actions, &spec).unwrap(), &GlmConfig::default()).unwrap();
    let games: Vec<TeamGame> = ds
        .team_ids()
        .iter()
        .map(|t| TeamGame::build(&ds, t, &spec, None, ObservedAggregation::Sum).unwrap())
        .collect();
    let mut group = c.benchmark_group("prs_bootstrap");
    group.sample_size(10);
    for refit in [false, true] {
        let cfg = BootstrapConfig { replications: 100, base_seed: 1, refit_model: refit, ..BootstrapConfig::default() };
        for exec in schedules() {
            let id = BenchmarkId::new(format!("{exec:?}"), if refit { "refit" } else { "fixed" });
            group.bench_with_input(id, &cfg, |b, cfg| b.iter(|| bootstrap_phi(&ds, &games, &model, cfg, exec).unwrap()));
        }
    }
    group.finish();
}

fn bench_model_bootstraps(c: &mut Criterion) {
    let (ds, _) = generate_synthetic(&SynthConfig::default()).unwrap();
    let m = build_features(&ds.actions, &FeatureSpec::xga()).unwrap();
    let model = fit_cloglog(&m, &GlmConfig::default()).unwrap();
    let learner = LearnerConfig::default();
    let mut group = c.benchmark_group("model_bootstrap");
    group.sample_size(10);
    for exec in schedules() {
        group.bench_function(BenchmarkId::new("importance", format!("{exec:?}")), |b| {
            b.iter(|| feature_importance(&model, &m, 100, 0.9, 7, exec).unwrap())
        });
        group.bench_function(BenchmarkId::new("oob", format!("{exec:?}")), |b| {
            b.iter(|| oob_bootstrap_eval(&m, &learner, 50, 7, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_prs_bootstrap, bench_model_bootstraps);
criterion_main!(benches);
