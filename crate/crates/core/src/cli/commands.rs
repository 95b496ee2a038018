use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::artifact::{load_artifact, save_artifact, ArtifactFile, RouterPayload, FORMAT_VERSION};
use super::config::{RouterKind, RunConfig};
use super::{CliError, Context};
use crate::baselines::{fit_avengers_with_k, fit_static};
use crate::consensus::{consensus_scores, fit_norm_stats};
use crate::dataset::{self, Dataset, SyntheticSpec};
use crate::datatools::{filter_generated, kendall_tau, ranking_vector, top2_models, FilterDiagnostic, RankingVector};
use crate::eval::{evaluate, EvalReport, Router};
use crate::router::{self, RoutingDecision};
use crate::{Error, Result};

type CliResult<T> = std::result::Result<T, CliError>;

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required")))
        .context("arguments")
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
        .context("write")
}

fn load(path: &Path) -> CliResult<Dataset> {
    dataset::load_dataset(path).context(path.display())
}

fn json_line(value: &impl Serialize) -> CliResult<String> {
    let mut s = serde_json::to_string(value)
        .map_err(|e| Error::Invariant(e.to_string()))
        .context("serialize")?;
    s.push('\n');
    Ok(s)
}

/// Ensures `d` is over exactly the pool the router was trained on.
fn check_pool(router_pool: &[String], d: &Dataset, what: &Path) -> CliResult<()> {
    if let Some(stray) = d.model_pool().iter().find(|m| !router_pool.contains(m)) {
        return Err(Error::UnknownModel(stray.clone())).context(format!("{}: pool mismatch", what.display()));
    }
    if let Some(missing) = router_pool.iter().find(|m| !d.model_pool().contains(m)) {
        return Err(Error::InvalidArgument(format!("no responses from {missing}")))
            .context(format!("{}: pool mismatch", what.display()));
    }
    Ok(())
}

/// Generates a planted-skill dataset from a TOML spec. `seed` overrides the
/// seed in the TOML file. When `flipped_output` is given and the file sets a
/// positive flip rate, the same dataset with flipped gold labels is written
/// there too.
pub fn cmd_synth(spec_path: &Path, output: &Path, seed: Option<u64>, flipped_output: Option<&Path>) -> CliResult<()> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|source| Error::Io {
            path: spec_path.to_path_buf(),
            source,
        })
        .context("synth")?;
    let mut spec: SyntheticSpec = toml::from_str(&text)
        .map_err(|e| Error::Format(e.to_string()))
        .context(spec_path.display())?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let scenario = dataset::generate_scenario(&spec).context("synth")?;
    dataset::save_dataset(&scenario.dataset, output).context("synth")?;
    if let Some(path) = flipped_output {
        let flipped = scenario
            .dataset_with_flipped_gold()
            .ok_or_else(|| Error::InvalidArgument("spec has label_flip_rate = 0".into()))
            .context("synth")?;
        dataset::save_dataset(&flipped, path).context("synth")?;
    }
    Ok(())
}

/// Task-stratified split of `--input` into `--output` (train) and `test_output`.
pub fn cmd_split(config: &RunConfig, test_output: &Path) -> CliResult<()> {
    let input = required(&config.input, "input")?;
    let output = required(&config.output, "output")?;
    let d = load(input)?;
    let (train, test) = dataset::split_dataset(&d, config.split_fraction, config.seed).context("split")?;
    dataset::save_dataset(&train, output).context("split")?;
    dataset::save_dataset(&test, test_output).context("split")
}

/// Fits the router selected by `config.router` on `d`.
pub fn train_router(config: &RunConfig, d: &Dataset) -> Result<RouterPayload> {
    config.validate()?;
    if let Some(kind) = config.router.static_kind() {
        return fit_static(d, kind, config.seed).map(RouterPayload::Static);
    }
    match config.router {
        RouterKind::Cascal | RouterKind::CascalGt => {
            router::train(d, &config.router_config()).map(RouterPayload::Cascal)
        }
        RouterKind::Avengers => {
            let labels = d.gold_labels()?;
            fit_avengers_with_k(d, &labels, config.avengers_k, config.seed).map(RouterPayload::Avengers)
        }
        _ => unreachable!("static kinds handled above"),
    }
}

pub fn cmd_train(config: &RunConfig) -> CliResult<ArtifactFile> {
    let input = required(&config.input, "input")?;
    let output = required(&config.output, "output")?;
    let d = load(input)?;
    let payload = train_router(config, &d).context(format!("train {}", input.display()))?;
    let artifact = ArtifactFile::new(config.clone(), payload);
    save_artifact(&artifact, output).context("train")?;
    Ok(artifact)
}

#[derive(Serialize)]
struct StreamHeader<'a> {
    format: &'a str,
    version: u32,
    config: &'a RunConfig,
    router_config: &'a RunConfig,
}

#[derive(Serialize)]
#[serde(untagged)]
enum RouteLine {
    Cascal(RoutingDecision),
    Other {
        query_id: String,
        selected: Vec<String>,
        answer: String,
    },
}

/// Routes every record of `--input` through the artifact and writes one
/// decision per line to `--output`.
pub fn cmd_route(config: &RunConfig, artifact_path: &Path) -> CliResult<()> {
    let input = required(&config.input, "input")?;
    let output = required(&config.output, "output")?;
    let artifact = load_artifact(artifact_path).context(artifact_path.display())?;
    let d = load(input)?;
    check_pool(artifact.router.model_pool(), &d, input)?;

    let mut out = json_line(&StreamHeader {
        format: "cascal-route",
        version: FORMAT_VERSION,
        config,
        router_config: &artifact.config,
    })?;
    for (k, rec) in d.records().iter().enumerate() {
        let ctx = || format!("{} record {}", input.display(), k + 1);
        let line = match &artifact.router {
            RouterPayload::Cascal(a) => RouteLine::Cascal(a.route_record(rec).context(ctx())?),
            other => {
                let r = other.answer(rec).context(ctx())?;
                RouteLine::Other {
                    query_id: rec.query_id.clone(),
                    selected: r.selected,
                    answer: r.answer,
                }
            }
        };
        out.push_str(&json_line(&line)?);
    }
    write_file(output, &out)
}

#[derive(Debug, Serialize)]
struct EvalFile<'a> {
    format: &'a str,
    version: u32,
    config: &'a RunConfig,
    router_config: &'a RunConfig,
    #[serde(flatten)]
    report: &'a EvalReport,
}

/// Accuracy of the artifact's router on the gold answers of `--input`.
pub fn cmd_eval(config: &RunConfig, artifact_path: &Path) -> CliResult<EvalReport> {
    let input = required(&config.input, "input")?;
    let output = required(&config.output, "output")?;
    let artifact = load_artifact(artifact_path).context(artifact_path.display())?;
    let d = load(input)?;
    check_pool(artifact.router.model_pool(), &d, input)?;
    let report = evaluate(&artifact.router, &d).context(format!("eval {}", input.display()))?;
    let file = EvalFile {
        format: "cascal-eval-report",
        version: FORMAT_VERSION,
        config,
        router_config: &artifact.config,
        report: &report,
    };
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Invariant(e.to_string()))
        .context("eval")?;
    text.push('\n');
    write_file(output, &text)?;
    Ok(report)
}

#[derive(Serialize)]
struct FilterHeader<'a> {
    format: &'a str,
    version: u32,
    config: &'a RunConfig,
    top2: &'a [String; 2],
    max_other_supporters: usize,
    total: usize,
    retained: usize,
}

/// Consensus filter over a generated dataset. Writes the per-query
/// diagnostics to `--output` and, optionally, the retained records as a
/// dataset.
pub fn cmd_filter(config: &RunConfig, retained_output: Option<&Path>) -> CliResult<Vec<FilterDiagnostic>> {
    let input = required(&config.input, "input")?;
    let output = required(&config.output, "output")?;
    let d = load(input)?;
    let stats = fit_norm_stats(&d).context("filter")?;
    let cm = consensus_scores(&d, &stats).context("filter")?;
    let top2 = top2_models(&cm).context("filter")?;
    let report = filter_generated(&d, &cm, &top2).context("filter")?;

    let mut out = json_line(&FilterHeader {
        format: "cascal-filter-report",
        version: FORMAT_VERSION,
        config,
        top2: &report.top2,
        max_other_supporters: report.max_other_supporters,
        total: d.len(),
        retained: report.retained.len(),
    })?;
    for diag in &report.diagnostics {
        out.push_str(&json_line(diag)?);
    }
    write_file(output, &out)?;
    if let Some(path) = retained_output {
        dataset::save_dataset(&d.subset(&report.retained_indices()), path).context("filter")?;
    }
    Ok(report.diagnostics)
}

fn dataset_ranking(path: &Path) -> CliResult<RankingVector> {
    let d = load(path)?;
    let stats = fit_norm_stats(&d).context(path.display())?;
    Ok(ranking_vector(&consensus_scores(&d, &stats).context(path.display())?))
}

/// Kendall's tau between the consensus rankings of `--input` and
/// `reference`, written as a tab-separated table.
pub fn cmd_tau(config: &RunConfig, reference: &Path) -> CliResult<f64> {
    let input = required(&config.input, "input")?;
    let output = required(&config.output, "output")?;
    let a = dataset_ranking(input)?;
    let b = dataset_ranking(reference)?;
    let tau = kendall_tau(&a, &b).context("tau")?;

    let config_json = serde_json::to_string(config)
        .map_err(|e| Error::Invariant(e.to_string()))
        .context("tau")?;
    let mut out = String::new();
    let _ = writeln!(out, "# format: cascal-tau-report");
    let _ = writeln!(out, "# version: {FORMAT_VERSION}");
    let _ = writeln!(out, "# config: {config_json}");
    let _ = writeln!(out, "model\trank_input\tscore_input\trank_reference\tscore_reference");
    for (rank, entry) in a.models.iter().enumerate() {
        let (rank_b, score_b) = b
            .models
            .iter()
            .enumerate()
            .find(|(_, x)| x.model == entry.model)
            .map(|(r, x)| (r + 1, x.score))
            .expect("pools checked by kendall_tau");
        let _ = writeln!(
            out,
            "{}\t{}\t{:?}\t{}\t{:?}",
            entry.model,
            rank + 1,
            entry.score,
            rank_b,
            score_b
        );
    }
    let _ = writeln!(out, "tau\t{tau:?}");
    write_file(output, &out)?;
    Ok(tau)
}
