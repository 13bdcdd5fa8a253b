//! Repair prompts built from analyzer findings, and the single repair round.

use serde::{Deserialize, Serialize};

use crate::error::RepairError;
use crate::generation::{generate, GenerationBackend, GenerationRequest};
use crate::model::{Finding, Language, Prompt, RepairContext, RepairPolicy, RepairStructure, SuggestionInventory};
use crate::quality::QualityAssessment;
use crate::rank::RankedInventory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairPrompt {
    pub structure: RepairStructure,
    pub text: String,
    pub origin_prompt_id: String,
    pub target_position: usize,
    pub findings_used: Vec<Finding>,
}

pub fn needs_repair(top: &QualityAssessment, policy: &RepairPolicy) -> bool {
    top.score < policy.tau
}

fn ordered(findings: &[Finding]) -> Vec<Finding> {
    let mut sorted = findings.to_vec();
    sorted.sort_by_key(|f| (f.line_start.is_none(), f.line_start, f.line_end));
    sorted
}

fn one_line(message: &str) -> String {
    message.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn fix_block(findings: &[Finding], language: Language) -> String {
    let cc = language.comment_marker();
    let mut lines: Vec<String> = findings
        .iter()
        .map(|f| match f.line_start {
            Some(n) => format!("{cc} Fix: At line {n}, {}", one_line(&f.message)),
            None => format!("{cc} Fix: {}", one_line(&f.message)),
        })
        .collect();
    lines.push(format!("{cc} Fixed Code:"));
    lines.join("\n")
}

fn strip_newline(code: &str) -> &str {
    code.strip_suffix('\n').unwrap_or(code)
}

fn p1_text(code: &str, findings: &[Finding], language: Language) -> Result<String, RepairError> {
    if findings.is_empty() {
        return Err(RepairError::NoFindings);
    }
    Ok(format!("{}\n{}", strip_newline(code), fix_block(&ordered(findings), language)))
}

fn p2_text(code: &str, findings: &[Finding], prompt: &Prompt, language: Language) -> Result<String, RepairError> {
    Ok(format!("{}\n{}", p1_text(code, findings, language)?, prompt.text))
}

fn p3_text(code: &str, findings: &[Finding], language: Language) -> Result<String, RepairError> {
    let first = findings
        .iter()
        .filter_map(|f| f.line_start)
        .min()
        .ok_or(RepairError::NoLinedFinding)?;
    let kept: Vec<&str> = strip_newline(code).split('\n').take(first - 1).collect();
    let block = fix_block(&ordered(findings), language);
    Ok(if kept.is_empty() {
        block
    } else {
        format!("{}\n{block}", kept.join("\n"))
    })
}

fn wrap(structure: RepairStructure, text: String, findings: &[Finding]) -> RepairPrompt {
    RepairPrompt {
        structure,
        text,
        origin_prompt_id: String::new(),
        target_position: 0,
        findings_used: ordered(findings),
    }
}

/// Code, then one `Fix:` comment per finding, then `Fixed Code:`.
pub fn build_p1(code: &str, findings: &[Finding], language: Language) -> Result<RepairPrompt, RepairError> {
    Ok(wrap(RepairStructure::P1, p1_text(code, findings, language)?, findings))
}

/// The P1 text followed by the original prompt.
pub fn build_p2(
    code: &str,
    findings: &[Finding],
    original_prompt: &Prompt,
    language: Language,
) -> Result<RepairPrompt, RepairError> {
    Ok(wrap(
        RepairStructure::P2,
        p2_text(code, findings, original_prompt, language)?,
        findings,
    ))
}

/// Code up to the first flagged line, then the comment block.
pub fn build_p3(code: &str, findings: &[Finding], language: Language) -> Result<RepairPrompt, RepairError> {
    Ok(wrap(RepairStructure::P3, p3_text(code, findings, language)?, findings))
}

pub fn build_repair_prompt(
    structure: RepairStructure,
    code: &str,
    findings: &[Finding],
    prompt: &Prompt,
) -> Result<RepairPrompt, RepairError> {
    match structure {
        RepairStructure::P1 => build_p1(code, findings, prompt.language),
        RepairStructure::P2 => build_p2(code, findings, prompt, prompt.language),
        RepairStructure::P3 => build_p3(code, findings, prompt.language),
    }
}

/// Repair prompt for the top-ranked suggestion, or `None` when it already
/// meets the threshold.
pub fn repair_prompt_for(ranked: &RankedInventory, policy: &RepairPolicy) -> Result<Option<RepairPrompt>, RepairError> {
    let top = ranked.top1()?;
    if !needs_repair(&top.assessment, policy) {
        return Ok(None);
    }
    let mut rp = build_repair_prompt(
        policy.structure,
        &top.suggestion.text,
        &top.assessment.findings,
        &ranked.prompt,
    )?;
    rp.origin_prompt_id = ranked.prompt.id.clone();
    rp.target_position = top.suggestion.position;
    Ok(Some(rp))
}

/// Asks the backend to answer a repair prompt. The returned inventory
/// carries the original snippet and findings so filtering splices the fix
/// back in.
pub fn regenerate(
    ranked: &RankedInventory,
    repair_prompt: &RepairPrompt,
    backend: &dyn GenerationBackend,
    request: &GenerationRequest,
) -> Result<SuggestionInventory, RepairError> {
    let top = ranked.top1()?;
    let inventory = generate(&ranked.prompt, &request.with_prompt(repair_prompt.text.clone()), backend)?;
    Ok(inventory.with_repair_context(RepairContext {
        original: top.suggestion.text.clone(),
        findings: top.assessment.findings.clone(),
    }))
}

/// The single repair round: `None` when the top suggestion meets the
/// threshold, otherwise the repair prompt and the regenerated inventory.
pub fn repair_round(
    ranked: &RankedInventory,
    policy: &RepairPolicy,
    backend: &dyn GenerationBackend,
    request: &GenerationRequest,
) -> Result<Option<(RepairPrompt, SuggestionInventory)>, RepairError> {
    let Some(rp) = repair_prompt_for(ranked, policy)? else {
        return Ok(None);
    };
    let inventory = regenerate(ranked, &rp, backend, request)?;
    Ok(Some((rp, inventory)))
}
