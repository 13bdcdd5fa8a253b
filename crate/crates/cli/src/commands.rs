use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use codesift_core::eval::{
    cohen_kappa, compilability_table, dcg, idcg, load_dataset, ndcg_at_k, ndcg_table, paired_t_test, run_pipeline,
    timing_table, PipelineReport,
};
use codesift_core::repair::repair_prompt_for;
use codesift_core::{
    backend_from_config, filter_inventory, rank, EligibleSet, Language, RankedInventory, RelevanceVector,
    RepairStructure, SuggestionInventory,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::args::{EvalCommand, FilterArgs, PipelineArgs, RankArgs, RepairPromptArgs, TableKind};
use crate::config::{resolve_assessor, resolve_pipeline, resolve_policy, FileConfig};
use crate::error::CliError;

fn read_input(path: Option<&Path>) -> Result<String, CliError> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display()))),
        None => {
            let mut buf = String::new();
            io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| CliError::Input(format!("cannot read stdin: {e}")))?;
            Ok(buf)
        }
    }
}

fn parse_input<T: DeserializeOwned>(path: Option<&Path>, what: &str) -> Result<T, CliError> {
    let raw = read_input(path)?;
    serde_json::from_str(&raw).map_err(|e| CliError::Input(format!("malformed {what}: {e}")))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .and_then(|_| if text.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") })
        .map_err(|e| CliError::Runtime(format!("cannot write output: {e}")))
}

fn emit_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    emit(out, &text)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn pipeline(args: &PipelineArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let settings = resolve_pipeline(args)?;
    let records = load_dataset(&settings.dataset, settings.format, settings.language)
        .map_err(|e| CliError::Config(format!("dataset {}: {e}", settings.dataset.display())))?;
    let backend = backend_from_config(&settings.backend).map_err(|e| CliError::Config(e.to_string()))?;
    log::info!("running {} prompts with model {}", records.len(), settings.pipeline.model_id);
    let report = run_pipeline(&records, &settings.pipeline, backend.as_ref()).map_err(|e| match e {
        codesift_core::EvalError::Config(m) => CliError::Config(m),
        other => CliError::Runtime(other.to_string()),
    })?;
    let json = report.to_json().map_err(|e| CliError::Runtime(e.to_string()))?;
    match &settings.out {
        Some(path) => write_file(path, &format!("{json}\n"))?,
        None => emit(out, &json)?,
    }
    if let Some(dir) = &settings.tables {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        let reports = std::slice::from_ref(&report);
        write_file(&dir.join("compilability.csv"), &compilability_table(reports))?;
        write_file(&dir.join("ndcg.csv"), &ndcg_table(reports))?;
        write_file(&dir.join("timing.csv"), &timing_table(reports))?;
    }
    let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
    for row in report.rows.iter().filter(|r| r.error.is_some()) {
        log::warn!("{}/{}: {}", row.dataset, row.task_id, row.error.as_deref().unwrap_or(""));
    }
    if report.has_failures() {
        return Err(CliError::PromptFailures(failed));
    }
    Ok(())
}

pub fn filter(args: &FilterArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let inv: SuggestionInventory = parse_input(args.input.as_deref(), "SuggestionInventory")?;
    inv.validate().map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(lang) = args.language.map(Language::from) {
        if inv.prompt.language != lang {
            return Err(CliError::Input(format!(
                "inventory is {} but --language is {}",
                inv.prompt.language.as_str(),
                lang.as_str()
            )));
        }
    }
    emit_json(out, &filter_inventory(&inv))
}

pub fn rank_cmd(args: &RankArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = FileConfig::load(args.scoring.config.as_deref())?;
    let assessor = resolve_assessor(&args.scoring, &file)?;
    let eligible: EligibleSet = parse_input(args.input.as_deref(), "EligibleSet")?;
    let assessments = assessor.assess_all(&eligible).map_err(|e| CliError::Runtime(e.to_string()))?;
    let ranked = rank(&eligible, &assessments).map_err(|e| CliError::Input(e.to_string()))?;
    emit_json(out, &ranked)
}

pub fn repair_prompt(args: &RepairPromptArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let policy = resolve_policy(args.tau, args.structure.map(RepairStructure::from))?;
    let ranked: RankedInventory = parse_input(args.input.as_deref(), "RankedInventory")?;
    match repair_prompt_for(&ranked, &policy).map_err(|e| CliError::Input(e.to_string()))? {
        Some(rp) if args.json => emit_json(out, &rp),
        Some(rp) => emit(out, &rp.text),
        None => {
            log::info!("top suggestion meets the threshold; no repair prompt");
            Ok(())
        }
    }
}

#[derive(Deserialize)]
struct RaterPair {
    a: Vec<i64>,
    b: Vec<i64>,
}

#[derive(Deserialize)]
struct PairedSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

pub fn eval(cmd: &EvalCommand, out: &mut dyn Write) -> Result<(), CliError> {
    let input_err = |e: codesift_core::EvalError| CliError::Input(e.to_string());
    match cmd {
        EvalCommand::Ndcg { labels } => {
            let labels = match labels {
                Some(l) => l.clone(),
                None => parse_input(None, "label array")?,
            };
            let rel = RelevanceVector::new(labels).map_err(|e| CliError::Input(e.to_string()))?;
            emit_json(
                out,
                &json!({ "k": rel.k(), "dcg": dcg(rel.labels()), "idcg": idcg(rel.k()), "ndcg": ndcg_at_k(&rel) }),
            )
        }
        EvalCommand::Kappa { input } => {
            let pair: RaterPair = parse_input(input.as_deref(), "rater pair")?;
            let kappa = cohen_kappa(&pair.a, &pair.b).map_err(input_err)?;
            emit_json(out, &json!({ "kappa": kappa }))
        }
        EvalCommand::Ttest { input } => {
            let s: PairedSample = parse_input(input.as_deref(), "paired sample")?;
            emit_json(out, &paired_t_test(&s.x, &s.y).map_err(input_err)?)
        }
        EvalCommand::Tables { reports, kind } => {
            let reports = reports
                .iter()
                .map(|p| parse_input::<PipelineReport>(Some(p), "pipeline report"))
                .collect::<Result<Vec<_>, _>>()?;
            let mut text = String::new();
            let sections: [(TableKind, &str, fn(&[PipelineReport]) -> String); 3] = [
                (TableKind::Compilability, "compilability", compilability_table),
                (TableKind::Ndcg, "ndcg", ndcg_table),
                (TableKind::Timing, "timing", timing_table),
            ];
            for (k, name, render) in sections {
                if *kind == k {
                    text.push_str(&render(&reports));
                } else if *kind == TableKind::All {
                    text.push_str(&format!("# {name}\n{}", render(&reports)));
                }
            }
            emit(out, &text)
        }
    }
}
