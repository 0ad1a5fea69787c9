use std::collections::BTreeMap;
use std::time::Instant;

use prs_core::coalition::{
    coalition_distribution, compatible_unobserved, extract_coalitions, ObservedAggregation, SYNTHETIC_RECIPE,
};
use prs_core::dataset::{
    filter_dataset, generate_synthetic, load_dataset, write_actions, write_players, Dataset, FilterStep,
};
use prs_core::inference::{
    bootstrap_phi, efficiency_metric, prs_table, scatter_points, AbsentWorth, BootstrapMeta, EfficiencyRow, PrsRow,
    ScatterPoint, TeamGame, DEFAULT_EPSILON,
};
use prs_core::xga::{
    build_features, compute_vif_skipping_constant, feature_importance, oob_bootstrap_eval, ActionMatrix, FeatureSpec,
    FittedModel, LearnerConfig, MetricReport, ModelParams, OobReport,
};
use prs_core::Execution;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifacts::{file_stem, ArtifactWriter, Manifest, TeamSummary, CONFIG_SNAPSHOT_FILE, MANIFEST_FILE};
use crate::config::{DataSource, ModeName};
use crate::{CliError, Run};

const DEFAULT_K_MAX: usize = 10;

fn load_raw(run: &Run) -> Result<Dataset, CliError> {
    let cfg = &run.cfg;
    match cfg.paths.source {
        DataSource::Files => {
            let aliases = cfg.filter.alias_table()?;
            Ok(load_dataset(&cfg.paths.actions, &cfg.paths.players, &aliases)?)
        }
        DataSource::Synthetic => Ok(generate_synthetic(&cfg.synth)?.0),
    }
}

fn load_filtered(run: &Run) -> Result<Dataset, CliError> {
    let raw = load_raw(run)?;
    Ok(filter_dataset(&raw, run.cfg.filter.min_actions)?)
}

fn select_teams(run: &Run, ds: &Dataset) -> Result<Vec<String>, CliError> {
    let all = ds.team_ids();
    if run.teams.is_empty() {
        return Ok(all);
    }
    for t in &run.teams {
        if !all.contains(t) {
            return Err(CliError::Input(format!("unknown team `{t}`; filtered data has {}", all.join(", "))));
        }
    }
    Ok(run.teams.clone())
}

fn features(ds: &Dataset, spec: &FeatureSpec) -> Result<ActionMatrix, CliError> {
    build_features(&ds.actions, spec).map_err(|e| CliError::stage("features")(e.to_string()))
}

fn fit(learner: &LearnerConfig, m: &ActionMatrix) -> Result<FittedModel, CliError> {
    let model = learner.fit(m, None).map_err(|e| CliError::stage("train")(e.to_string()))?;
    if let Some(col) = &model.train_meta.separation {
        log::warn!("{:?} fit: coefficient of `{col}` reached the separation bound", model.spec.mode);
    }
    if model.train_meta.jitter > 0.0 {
        log::info!("{:?} fit: Hessian needed jitter {:e} (constant or collinear columns)", model.spec.mode, model.train_meta.jitter);
    }
    Ok(model)
}

fn print_filter_log(run: &Run, log: &[FilterStep]) {
    for step in log {
        run.say(format!("filter {step}"));
    }
}

pub fn validate(run: &Run) -> Result<(), CliError> {
    let ds = load_filtered(run)?;
    print_filter_log(run, &ds.filter_log);
    for team in select_teams(run, &ds)? {
        let (roster, observed) = extract_coalitions(&ds, &team).map_err(|e| CliError::stage("coalitions")(e.to_string()))?;
        let actions: usize = observed.values().map(Vec::len).sum();
        run.say(format!(
            "team {team}: {} players, {actions} actions, {} observed coalitions, {} unobserved compatible",
            roster.len(),
            observed.len(),
            compatible_unobserved(&observed).len()
        ));
    }
    Ok(())
}

pub fn synth(run: &Run) -> Result<(), CliError> {
    let (ds, truth) = generate_synthetic(&run.cfg.synth)?;
    let mut out = ArtifactWriter::new(&run.cfg.paths.output)?;
    write_players(&out.path("players.csv"), &ds.players)?;
    write_actions(&out.path("actions.csv"), &ds.actions)?;
    out.json("ground_truth.json", &truth)?;
    run.say(format!(
        "wrote {} players and {} actions to {} (prevalence {:.4})",
        ds.players.len(),
        ds.actions.len(),
        run.cfg.paths.output.display(),
        truth.empirical_prevalence
    ));
    Ok(())
}

fn model_file(mode: ModeName) -> &'static str {
    match mode {
        ModeName::Xg => "model_xg.json",
        ModeName::Xga => "model_xga.json",
    }
}

fn describe_model(run: &Run, model: &FittedModel) {
    let meta = &model.train_meta;
    run.say(format!(
        "{} on {} rows: prevalence {:.4}, {} iterations, converged {}",
        meta.learner.name(),
        meta.rows,
        meta.prevalence,
        meta.iterations,
        meta.converged
    ));
    if let ModelParams::Glm { coefficients, std_errors } = &model.params {
        let names = std::iter::once("(intercept)".to_string()).chain(model.spec.columns());
        for ((name, b), se) in names.zip(coefficients).zip(std_errors) {
            run.say(format!("  {name:<22} {b:>10.5} (se {se:.5})"));
        }
    }
}

pub fn train(run: &Run) -> Result<(), CliError> {
    let ds = load_filtered(run)?;
    let learner = run.cfg.model.learner();
    let mut out = ArtifactWriter::new(&run.cfg.paths.output)?;
    let mut modes = vec![run.cfg.model.mode];
    if run.cfg.model.mode == ModeName::Xga {
        modes.push(ModeName::Xg);
    }
    for mode in modes {
        let spec = match mode {
            ModeName::Xg => FeatureSpec::xg(),
            ModeName::Xga => FeatureSpec::xga(),
        };
        let model = fit(&learner, &features(&ds, &spec)?)?;
        describe_model(run, &model);
        out.bytes(model_file(mode), model.to_json().as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct MetricRow<'a> {
    model: &'a str,
    mode: &'a str,
    metric: &'a str,
    mean: f64,
    se: f64,
}

fn metric_rows<'a>(reports: &'a [(&'a str, OobReport)]) -> Vec<MetricRow<'a>> {
    let mut rows = Vec::new();
    for (mode, r) in reports {
        for ((metric, mean), se) in MetricReport::NAMES.iter().zip(r.mean.values()).zip(r.se.values()) {
            rows.push(MetricRow { model: &r.learner, mode, metric, mean, se });
        }
    }
    rows
}

fn oob_reports(run: &Run, ds: &Dataset) -> Result<Vec<(&'static str, OobReport)>, CliError> {
    let learner = run.cfg.model.learner();
    let ev = &run.cfg.evaluate;
    let mut reports = Vec::new();
    for (mode, spec) in [("xg", FeatureSpec::xg()), ("xga", FeatureSpec::xga())] {
        let m = features(ds, &spec)?;
        let r = oob_bootstrap_eval(&m, &learner, ev.oob_replications, ev.seed, Execution::default())
            .map_err(|e| CliError::stage("evaluate")(e.to_string()))?;
        run.say(format!(
            "{mode:<4} {}: OOB AUC {:.4} (se {:.4}), MCC {:.4}, Brier {:.4}, out-of-bag share {:.3}",
            r.learner, r.mean.auc, r.se.auc, r.mean.mcc, r.mean.brier, r.mean_oob_fraction
        ));
        reports.push((mode, r));
    }
    Ok(reports)
}

#[derive(Debug, Serialize)]
struct VifRow<'a> {
    column: &'a str,
    vif: f64,
    collinear: bool,
}

#[derive(Debug, Serialize)]
struct ImportanceRow<'a> {
    column: &'a str,
    measure: &'a str,
    estimate: f64,
    low: f64,
    high: f64,
    standardized: Option<f64>,
    standardized_low: Option<f64>,
    standardized_high: Option<f64>,
}

pub fn evaluate(run: &Run) -> Result<(), CliError> {
    let ds = load_filtered(run)?;
    let mut out = ArtifactWriter::new(&run.cfg.paths.output)?;
    let reports = oob_reports(run, &ds)?;
    out.csv("metrics.csv", &metric_rows(&reports))?;

    let xga = features(&ds, &FeatureSpec::xga())?;
    let (vif, dropped) = compute_vif_skipping_constant(&xga).map_err(|e| CliError::stage("vif")(e.to_string()))?;
    if !dropped.is_empty() {
        run.say(format!("VIF skips constant columns: {}", dropped.join(", ")));
    }
    let rows: Vec<VifRow> = vif
        .columns
        .iter()
        .zip(&vif.values)
        .zip(&vif.collinear)
        .map(|((column, &vif), &collinear)| VifRow { column, vif, collinear })
        .collect();
    for r in &rows {
        run.say(format!("  VIF {:<22} {:.3}", r.column, r.vif));
    }
    out.csv("vif.csv", &rows)?;

    let spec = run.cfg.model.spec();
    let m = features(&ds, &spec)?;
    let model = fit(&run.cfg.model.learner(), &m)?;
    let imp = feature_importance(
        &model,
        &m,
        run.cfg.evaluate.importance_replications,
        run.cfg.bootstrap.level,
        run.cfg.evaluate.seed,
        Execution::default(),
    )
    .map_err(|e| CliError::stage("importance")(e.to_string()))?;
    let rows: Vec<ImportanceRow> = (0..imp.columns.len())
        .map(|j| ImportanceRow {
            column: &imp.columns[j],
            measure: &imp.measure,
            estimate: imp.estimate[j],
            low: imp.low[j],
            high: imp.high[j],
            standardized: imp.standardized.as_ref().map(|v| v[j]),
            standardized_low: imp.standardized_low.as_ref().map(|v| v[j]),
            standardized_high: imp.standardized_high.as_ref().map(|v| v[j]),
        })
        .collect();
    out.csv("importance.csv", &rows)?;
    Ok(())
}

fn distribution_csv(run: &Run, ds: &Dataset, team: &str) -> Result<(String, usize, usize), CliError> {
    let (roster, observed) = extract_coalitions(ds, team).map_err(|e| CliError::stage("coalitions")(e.to_string()))?;
    let k_max = run.cfg.shapley.k_max.unwrap_or(DEFAULT_K_MAX).min(roster.len());
    let dist =
        coalition_distribution(&observed, roster.len(), k_max).map_err(|e| CliError::stage("coalitions")(e.to_string()))?;
    run.say(format!(
        "team {team}: n = {}, {} observed of {} possible coalitions up to size {k_max}",
        roster.len(),
        dist.total_obs,
        dist.total_all
    ));
    Ok((dist.to_csv(), observed.len(), compatible_unobserved(&observed).len()))
}

pub fn coalitions(run: &Run) -> Result<(), CliError> {
    let ds = load_filtered(run)?;
    let mut out = ArtifactWriter::new(&run.cfg.paths.output)?;
    for team in select_teams(run, &ds)? {
        let (csv, _, unobserved) = distribution_csv(run, &ds, &team)?;
        run.say(format!("team {team}: {unobserved} compatible unobserved coalitions"));
        out.bytes(&format!("coalitions_{}.csv", file_stem(&team)), csv.as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct PrsCsvRow<'a> {
    player: &'a str,
    role: &'a str,
    actions: usize,
    phi_hat: f64,
    phi_boot_mean: f64,
    se: f64,
    prs: Option<f64>,
    ci_low: f64,
    ci_high: f64,
    flag: &'a str,
}

impl<'a> From<&'a PrsRow> for PrsCsvRow<'a> {
    fn from(r: &'a PrsRow) -> Self {
        PrsCsvRow {
            player: &r.player_id,
            role: &r.role,
            actions: r.actions,
            phi_hat: r.phi_hat,
            phi_boot_mean: r.phi_boot_mean,
            se: r.se,
            prs: r.prs,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            flag: if r.degenerate { "degenerate_se" } else { "" },
        }
    }
}

/// Contents of `prs.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrsReport {
    pub base_seed: u64,
    pub replications: usize,
    pub refit_model: bool,
    pub level: f64,
    pub epsilon: f64,
    pub aggregation: ObservedAggregation,
    pub absent_worth: AbsentWorth,
    pub synthetic_recipe: String,
    pub filter_log: Vec<FilterStep>,
    pub model_sha256: String,
    pub bootstrap: BootstrapMeta,
    pub teams: Vec<TeamPrs>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeamPrs {
    pub team_id: String,
    pub n: usize,
    pub rows: Vec<PrsRow>,
}

#[derive(Debug, Serialize)]
struct ScatterCsvRow<'a> {
    player: &'a str,
    prs: f64,
    g90: f64,
    xg90: f64,
    diff: f64,
    team: &'a str,
    quadrant: &'a str,
}

fn write_scatter(run: &Run, out: &mut ArtifactWriter, points: &[ScatterPoint]) -> Result<(), CliError> {
    let rows: Vec<ScatterCsvRow> = points
        .iter()
        .map(|p| ScatterCsvRow {
            player: &p.player_id,
            prs: p.prs,
            g90: p.g90,
            xg90: p.xg90,
            diff: p.diff,
            team: &p.team_id,
            quadrant: p.quadrant.code(),
        })
        .collect();
    out.csv("scatter.csv", &rows)?;
    let mut counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for p in points {
        *counts.entry((p.team_id.as_str(), p.quadrant.code())).or_default() += 1;
    }
    for ((team, q), c) in counts {
        run.say(format!("team {team}: {c} players {q}"));
    }
    Ok(())
}

fn timed<T>(timings: &mut BTreeMap<String, u128>, stage: &str, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
    let start = Instant::now();
    let out = f()?;
    timings.insert(stage.to_string(), start.elapsed().as_millis());
    Ok(out)
}

/// Runs the whole pipeline and writes every artifact plus the manifest.
pub fn run_prs(run: &Run) -> Result<Manifest, CliError> {
    let cfg = &run.cfg;
    if cfg.model.mode != ModeName::Xga {
        return Err(CliError::Input("worth requires model.mode = \"xga\"".into()));
    }
    let mut timings = BTreeMap::new();
    let ds = timed(&mut timings, "load", || load_filtered(run))?;
    print_filter_log(run, &ds.filter_log);
    let teams = select_teams(run, &ds)?;
    let mut out = ArtifactWriter::new(&cfg.paths.output)?;
    let learner = cfg.model.learner();
    let xga_spec = FeatureSpec::xga();

    let (model, xg_model) = timed(&mut timings, "train", || {
        Ok((fit(&learner, &features(&ds, &xga_spec)?)?, fit(&learner, &features(&ds, &FeatureSpec::xg())?)?))
    })?;
    let model_json = model.to_json();
    let model_sha256 = hex::encode(Sha256::digest(model_json.as_bytes()));
    out.bytes("model_xga.json", model_json.as_bytes())?;
    out.bytes("model_xg.json", xg_model.to_json().as_bytes())?;

    let reports = timed(&mut timings, "evaluate", || oob_reports(run, &ds))?;
    out.csv("metrics.csv", &metric_rows(&reports))?;

    let mut games = Vec::new();
    let mut summaries = Vec::new();
    let mut points = Vec::new();
    timed(&mut timings, "coalitions", || {
        for team in &teams {
            let (csv, _, _) = distribution_csv(run, &ds, team)?;
            out.bytes(&format!("coalitions_{}.csv", file_stem(team)), csv.as_bytes())?;
            let game = TeamGame::build(&ds, team, &xga_spec, cfg.shapley.n_override, cfg.shapley.aggregation)
                .map_err(|e| CliError::stage("coalitions")(e.to_string()))?;
            let (_, phi) = game.point_estimate(&ds, &model).map_err(|e| CliError::stage("worth")(e.to_string()))?;
            summaries.push(TeamSummary {
                team_id: team.clone(),
                roster_size: game.roster.len(),
                n: game.n(),
                actions: game.observed.values().map(Vec::len).sum(),
                observed_coalitions: game.observed.len(),
                unobserved_coalitions: game.unobserved.len(),
                players_without_support: (0..game.roster.len())
                    .filter(|&i| phi[i].is_none())
                    .map(|i| game.roster.ids[i].clone())
                    .collect(),
            });
            points.push(phi);
            games.push(game);
        }
        Ok(())
    })?;

    let (matrices, meta) = timed(&mut timings, "bootstrap", || {
        bootstrap_phi(&ds, &games, &model, &cfg.bootstrap, Execution::default())
            .map_err(|e| CliError::stage("bootstrap")(e.to_string()))
    })?;
    if meta.missing > 0 {
        log::warn!("{} of {} replications missing", meta.missing, meta.replications);
    }

    let mut team_prs = Vec::new();
    let mut all_rows = Vec::new();
    for ((game, phi), matrix) in games.iter().zip(&points).zip(&matrices) {
        let rows = prs_table(&ds, phi, matrix, cfg.bootstrap.level, DEFAULT_EPSILON)
            .map_err(|e| CliError::stage("prs")(e.to_string()))?;
        let csv: Vec<PrsCsvRow> = rows.iter().map(PrsCsvRow::from).collect();
        out.csv(&format!("prs_{}.csv", file_stem(&game.roster.team_id)), &csv)?;
        if let Some(top) = rows.first() {
            run.say(format!(
                "team {}: top PRS {} = {}",
                game.roster.team_id,
                top.player_id,
                top.prs.map_or("n/a".to_string(), |p| format!("{p:.3}"))
            ));
        }
        all_rows.extend(rows.iter().cloned());
        team_prs.push(TeamPrs { team_id: game.roster.team_id.clone(), n: game.n(), rows });
    }
    let report = PrsReport {
        base_seed: cfg.bootstrap.base_seed,
        replications: cfg.bootstrap.replications,
        refit_model: cfg.bootstrap.refit_model,
        level: cfg.bootstrap.level,
        epsilon: DEFAULT_EPSILON,
        aggregation: cfg.shapley.aggregation,
        absent_worth: cfg.bootstrap.absent_worth,
        synthetic_recipe: SYNTHETIC_RECIPE.to_string(),
        filter_log: ds.filter_log.clone(),
        model_sha256,
        bootstrap: meta,
        teams: team_prs,
    };
    out.json("prs.json", &report)?;

    let eff = efficiency_metric(&ds, &xg_model, &all_rows).map_err(|e| CliError::stage("efficiency")(e.to_string()))?;
    let eff_rows: Vec<EfficiencyRow> = eff.rows.into_iter().filter(|r| teams.contains(&r.team_id)).collect();
    out.csv("efficiency.csv", &eff_rows)?;
    write_scatter(run, &mut out, &scatter_points(&eff_rows))?;

    let config = cfg.to_toml();
    std::fs::write(out.path(CONFIG_SNAPSHOT_FILE), &config)
        .map_err(|e| CliError::stage("write")(format!("{CONFIG_SNAPSHOT_FILE}: {e}")))?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        base_seed: cfg.bootstrap.base_seed,
        evaluate_seed: cfg.evaluate.seed,
        data_provenance: ds.provenance.clone(),
        teams: summaries,
        artifacts: out.hashes().clone(),
        timings_ms: timings,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::stage("write")(e.to_string()))? + "\n";
    std::fs::write(out.path(MANIFEST_FILE), text).map_err(|e| CliError::stage("write")(format!("{MANIFEST_FILE}: {e}")))?;
    run.say(format!("wrote {} artifacts to {}", manifest.artifacts.len(), cfg.paths.output.display()));
    Ok(manifest)
}

pub fn scatter(run: &Run) -> Result<(), CliError> {
    let mut out = ArtifactWriter::new(&run.cfg.paths.output)?;
    let read = |name: &str| {
        std::fs::read(out.path(name)).map_err(|e| CliError::Input(format!("missing upstream artifact {name}: {e}")))
    };
    let report: PrsReport = serde_json::from_slice(&read("prs.json")?)
        .map_err(|e| CliError::Input(format!("prs.json: {e}")))?;
    let eff = read("efficiency.csv")?;
    let mut rdr = csv::Reader::from_reader(eff.as_slice());
    let mut rows: Vec<EfficiencyRow> = rdr
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(format!("efficiency.csv: {e}")))?;
    let prs: BTreeMap<&str, Option<f64>> =
        report.teams.iter().flat_map(|t| t.rows.iter().map(|r| (r.player_id.as_str(), r.prs))).collect();
    for r in rows.iter_mut() {
        r.prs = prs.get(r.player_id.as_str()).copied().flatten();
    }
    if !run.teams.is_empty() {
        rows.retain(|r| run.teams.contains(&r.team_id));
    }
    write_scatter(run, &mut out, &scatter_points(&rows))
}
