use std::collections::BTreeSet;

use prs_core::coalition::{
    compatible_unobserved, estimate_worth, extract_coalitions, player_support, Coalition, ObservedAggregation,
    Provenance, TeamStats,
};
use prs_core::dataset::{
    filter_dataset, generate_synthetic, load_dataset, write_actions, write_players, AliasTable, SynthConfig,
};
use prs_core::inference::{bootstrap_phi, sample_sd, BootstrapConfig, TeamGame};
use prs_core::xga::{build_features, compute_vif_skipping_constant, fit_cloglog, FeatureSpec, GlmConfig};
use prs_core::Execution;

fn filtered() -> prs_core::dataset::Dataset {
    let (ds, _) = generate_synthetic(&SynthConfig::default()).unwrap();
    filter_dataset(&ds, 60).unwrap()
}

#[test]
fn csv_round_trip_preserves_content() {
    let (ds, _) = generate_synthetic(&SynthConfig { actions_per_team: 200, ..SynthConfig::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (a, p) = (dir.path().join("actions.csv"), dir.path().join("players.csv"));
    write_players(&p, &ds.players).unwrap();
    write_actions(&a, &ds.actions).unwrap();
    let back = load_dataset(&a, &p, &AliasTable::default()).unwrap();
    assert!(ds.same_content(&back));
}

#[test]
fn supports_cover_every_observed_coalition() {
    let ds = filtered();
    for team in ds.team_ids() {
        let (roster, observed) = extract_coalitions(&ds, &team).unwrap();
        let team_actions = ds.team_actions(&team).count();
        assert_eq!(observed.values().map(Vec::len).sum::<usize>(), team_actions);
        let unobserved = compatible_unobserved(&observed);
        assert!(unobserved.iter().all(|c| !observed.contains_key(c) && !c.is_empty()));
        for (c, _) in &observed {
            for i in c.members() {
                let s = player_support(&observed, i).unwrap();
                let members: BTreeSet<Coalition> = s.coalitions().collect();
                assert!(members.contains(&c.without(i)), "{team}: {c} missing from support of {i}");
            }
        }
        assert!(roster.len() <= 64);
    }
}

#[test]
fn observed_worth_is_sum_of_in_sample_predictions() {
    let ds = filtered();
    let spec = FeatureSpec::xga();
    let model = fit_cloglog(&build_features(&ds.actions, &spec).unwrap(), &GlmConfig::default()).unwrap();
    let team = &ds.team_ids()[0];
    let (roster, observed) = extract_coalitions(&ds, team).unwrap();
    let unobserved = compatible_unobserved(&observed);
    let stats = TeamStats::from_dataset(&ds, team);
    let table =
        estimate_worth(&ds, &roster, &observed, &unobserved, &model, &stats, ObservedAggregation::Sum).unwrap();
    assert_eq!(table.count(Provenance::ObservedInSample), observed.len());
    assert_eq!(table.count(Provenance::UnobservedOutOfSample), unobserved.len());
    for (c, rows) in &observed {
        let direct: f64 = rows.iter().map(|&r| model.predict_row(&spec.encode(&ds.actions[r]))).sum();
        assert!((table.worth(*c).unwrap() - direct).abs() < 1e-12);
    }
    assert_eq!(table.worth(Coalition::EMPTY), Some(0.0));
}

#[test]
fn xga_design_has_no_strong_collinearity() {
    let ds = filtered();
    let m = build_features(&ds.actions, &FeatureSpec::xga()).unwrap();
    let (report, dropped) = compute_vif_skipping_constant(&m).unwrap();
    assert!(dropped.iter().all(|c| c.contains("penalty")), "unexpected constant columns {dropped:?}");
    for (name, v) in report.columns.iter().zip(&report.values) {
        assert!(*v < 4.0, "VIF of {name} is {v}");
    }
}

#[test]
fn standard_errors_stabilise_with_replications() {
    let ds = filtered();
    let spec = FeatureSpec::xga();
    let model = fit_cloglog(&build_features(&ds.actions, &spec).unwrap(), &GlmConfig::default()).unwrap();
    let team = ds.team_ids()[0].clone();
    let game = TeamGame::build(&ds, &team, &spec, None, ObservedAggregation::Sum).unwrap();
    let se = |b: usize| {
        let cfg = BootstrapConfig { replications: b, base_seed: 9, refit_model: false, ..BootstrapConfig::default() };
        let (m, _) = bootstrap_phi(&ds, std::slice::from_ref(&game), &model, &cfg, Execution::default()).unwrap();
        (0..m[0].players.len()).map(|i| sample_sd(&m[0].column(i))).collect::<Vec<_>>()
    };
    let (small, large) = (se(1000), se(4000));
    for (a, b) in small.iter().zip(&large) {
        if *b > 1e-10 {
            assert!((a - b).abs() / b < 0.15, "SE {a} at B=1000 vs {b} at B=4000");
        }
    }
}
