//! Static filtering: cleaning heuristics followed by the syntax gate.
//!
//! Heuristics run in a fixed order: splice (repair mode only), fence
//! stripping, prompt completion, sentinel truncation (Python), truncation
//! after the target function (Python), extra-class removal (Java) and brace
//! repair (Java).

use once_cell::sync::Lazy;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::FilterError;
use crate::model::{CodeSuggestion, Finding, Language, Prompt, RepairContext, SuggestionInventory};
use crate::syntax::{check_syntax, top_level_units, UnitKind};

const SENTINELS: &[&str] = &["\n```\n\n##", "\n</code>"];

static PY_DEF: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?m)^[ \t]*(?:async[ \t]+)?def[ \t]+([A-Za-z_][A-Za-z0-9_]*)[ \t]*\(").unwrap());
static JAVA_TYPE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"\b(?:class|interface|enum|record)\s+([A-Za-z_$][A-Za-z0-9_$]*)").unwrap());
static JAVA_METHOD: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?m)^[ \t]*(?:(?:public|private|protected|static|final|abstract|synchronized)\s+)*[A-Za-z_$][\w$<>\[\], ?]*\s+([A-Za-z_$][A-Za-z0-9_$]*)\s*\([^;{]*\)\s*(?:throws\s+[\w$., ]+)?\s*\{").unwrap()
});

/// Why a suggestion did not make it into the eligible set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum DropReason {
    /// Nothing left after cleaning.
    Empty,
    /// The cleaned text is the prompt alone.
    EmptyBody,
    SyntaxError { line: Option<usize>, message: Option<String> },
    TargetNotFound { target: String },
    SpanOutOfRange { start: usize, end: usize, lines: usize },
}

impl DropReason {
    pub fn code(&self) -> &'static str {
        match self {
            DropReason::Empty => "empty",
            DropReason::EmptyBody => "empty_body",
            DropReason::SyntaxError { .. } => "syntax_error",
            DropReason::TargetNotFound { .. } => "target_not_found",
            DropReason::SpanOutOfRange { .. } => "span_out_of_range",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedSuggestion {
    pub position: usize,
    #[serde(flatten)]
    pub reason: DropReason,
}

/// Cleaned suggestions that pass the syntax gate, in original order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EligibleSet {
    pub prompt: Prompt,
    /// Size of the source inventory.
    pub n: usize,
    pub cleaned: Vec<CodeSuggestion>,
    pub x: usize,
    pub dropped: Vec<DroppedSuggestion>,
}

fn split_lines(text: &str) -> Vec<&str> {
    text.split('\n').collect()
}

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

/// H1: keeps the content of the first triple-backtick block.
pub fn h1_strip_fences(text: &str) -> String {
    let lines = split_lines(text);
    let Some(open) = lines.iter().position(|l| is_fence(l)) else {
        return text.to_string();
    };
    let Some(close_rel) = lines[open + 1..].iter().position(|l| is_fence(l)) else {
        return text.to_string();
    };
    lines[open + 1..open + 1 + close_rel].join("\n")
}

/// H2: makes the text start with the full prompt, reusing the longest
/// prompt suffix the text already starts with.
pub fn h2_ensure_prompt(text: &str, prompt: &Prompt) -> String {
    let full = prompt.text.as_str();
    let core = full.trim_end();
    if core.is_empty() || text.contains(core) {
        return text.to_string();
    }
    let overlap = longest_suffix_prefix_overlap(full, text);
    let mut out = String::with_capacity(full.len() + text.len());
    out.push_str(&full[..full.len() - overlap]);
    out.push_str(text);
    out
}

/// Length in bytes of the longest proper suffix of `prompt` that `text`
/// starts with.
fn longest_suffix_prefix_overlap(prompt: &str, text: &str) -> usize {
    let max = prompt.len().min(text.len());
    (1..=max)
        .rev()
        .filter(|&len| prompt.is_char_boundary(prompt.len() - len))
        .find(|&len| text.starts_with(&prompt[prompt.len() - len..]))
        .filter(|&len| len < prompt.len())
        .unwrap_or(0)
}

/// H3: truncates at the first chat-transcript sentinel.
pub fn h3_strip_sentinels(text: &str) -> String {
    SENTINELS
        .iter()
        .filter_map(|s| text.find(s))
        .min()
        .map(|i| text[..i].to_string())
        .unwrap_or_else(|| text.to_string())
}

/// Name of the function the prompt asks for: the dataset's entry point, or
/// the last function/method declared in the prompt text.
pub fn infer_entry_point(prompt: &Prompt) -> Option<String> {
    if let Some(ep) = prompt.entry_point.as_ref().filter(|e| !e.is_empty()) {
        return Some(ep.clone());
    }
    let re = match prompt.language {
        Language::Python => &*PY_DEF,
        Language::Java => &*JAVA_METHOD,
    };
    re.captures_iter(&prompt.text)
        .last()
        .map(|c| c[1].to_string())
}

fn keep_lines(text: &str, last_line: usize) -> String {
    let lines = split_lines(text);
    if last_line >= lines.len() || lines[last_line..].iter().all(|l| l.trim().is_empty()) {
        return text.to_string();
    }
    lines[..last_line].join("\n")
}

/// H4: drops everything after the top-level unit that defines the target
/// function (a method target keeps its enclosing class).
pub fn h4_truncate_after_target(text: &str, prompt: &Prompt) -> Result<String, FilterError> {
    let Some(target) = infer_entry_point(prompt) else {
        return Ok(text.to_string());
    };
    if text.trim().is_empty() {
        return Ok(text.to_string());
    }
    let units = top_level_units(text, Language::Python)?;
    let lines = split_lines(text);
    let method_re = Regex::new(&format!(
        r"^[ \t]+(?:async[ \t]+)?def[ \t]+{}[ \t]*\(",
        regex::escape(&target)
    ))
    .expect("escaped identifier");
    let unit = units
        .iter()
        .rev()
        .find(|u| u.kind == UnitKind::Function && u.name == target)
        .or_else(|| {
            units.iter().rev().find(|u| {
                u.kind == UnitKind::Class
                    && lines[u.line_start - 1..u.line_end.min(lines.len())]
                        .iter()
                        .any(|l| method_re.is_match(l))
            })
        });
    match unit {
        Some(u) => Ok(keep_lines(text, u.line_end)),
        None if declares(&PY_DEF, text, &target) => Ok(text.to_string()),
        None => Err(FilterError::TargetNotFound(target)),
    }
}

/// True when `re` (whose first group is a name) matches `name` somewhere in
/// `text`, even inside a region the parser could not recover.
fn declares(re: &Regex, text: &str, name: &str) -> bool {
    re.captures_iter(text).any(|c| &c[1] == name)
}

/// Name of the first type the prompt declares, if any.
pub fn prompt_class_name(prompt: &Prompt) -> Option<String> {
    JAVA_TYPE.captures(&prompt.text).map(|c| c[1].to_string())
}

/// H5: keeps only the Java class named in the prompt. When the prompt
/// declares no class, classes that do not declare the target method go.
pub fn h5_drop_extra_classes(text: &str, prompt: &Prompt) -> Result<String, FilterError> {
    if text.trim().is_empty() {
        return Ok(text.to_string());
    }
    let lines = split_lines(text);
    let units = top_level_units(text, Language::Java)?;
    let classes: Vec<_> = units.iter().filter(|u| u.kind == UnitKind::Class).collect();
    let extra: Vec<(usize, usize)> = match prompt_class_name(prompt) {
        Some(target) => {
            if !classes.iter().any(|u| u.name == target) {
                if declares(&JAVA_TYPE, text, &target) {
                    return Ok(text.to_string());
                }
                return Err(FilterError::TargetNotFound(target));
            }
            classes
                .iter()
                .filter(|u| u.name != target)
                .map(|u| (u.line_start, u.line_end))
                .collect()
        }
        None => {
            let Some(method) = infer_entry_point(prompt) else {
                return Ok(text.to_string());
            };
            classes
                .iter()
                .filter(|u| {
                    let body = lines[u.line_start - 1..u.line_end.min(lines.len())].join("\n");
                    !declares(&JAVA_METHOD, &body, &method)
                })
                .map(|u| (u.line_start, u.line_end))
                .collect()
        }
    };
    if extra.is_empty() {
        return Ok(text.to_string());
    }
    let kept: Vec<&str> = lines
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !extra.iter().any(|&(s, e)| (s..=e).contains(&(i + 1))))
        .map(|(_, l)| l)
        .collect();
    Ok(kept.join("\n").trim_end().to_string())
}

fn java_parses(code: &str) -> bool {
    check_syntax(code, Language::Java).map(|v| v.ok).unwrap_or(false)
}

/// H6: closes incomplete Java code by appending one or two braces, deleting
/// lines from the bottom until something parses. Returns an empty string
/// when nothing can be salvaged.
pub fn h6_brace_repair(text: &str) -> String {
    brace_repair_counted(text).0
}

/// Brace repair plus the number of parse attempts it took.
fn brace_repair_counted(text: &str) -> (String, usize) {
    let mut attempts = 0;
    let mut lines = split_lines(text);
    let mut current = text.to_string();
    loop {
        if current.trim().is_empty() {
            return (String::new(), attempts);
        }
        attempts += 1;
        if java_parses(&current) {
            return (current, attempts);
        }
        for closing in ["\n}", "\n}}"] {
            attempts += 1;
            let closed = format!("{current}{closing}");
            if java_parses(&closed) {
                return (closed, attempts);
            }
        }
        while lines.last().is_some_and(|l| l.trim().is_empty()) {
            lines.pop();
        }
        lines.pop();
        while lines.last().is_some_and(|l| l.trim().is_empty()) {
            lines.pop();
        }
        current = lines.join("\n");
    }
}

/// H7: replaces the lines covered by the findings with the repaired
/// fragment. Findings without line numbers mean the whole snippet.
pub fn h7_splice_repaired(
    original: &str,
    findings: &[Finding],
    repaired_fragment: &str,
) -> Result<String, FilterError> {
    let spans: Vec<(usize, usize)> = findings.iter().filter_map(Finding::span).collect();
    if spans.is_empty() {
        return Ok(repaired_fragment.to_string());
    }
    let start = spans.iter().map(|s| s.0).min().unwrap_or(1);
    let end = spans.iter().map(|s| s.1).max().unwrap_or(start);
    let lines = split_lines(original.strip_suffix('\n').unwrap_or(original));
    if start == 0 || end > lines.len() {
        return Err(FilterError::SpanOutOfRange {
            start,
            end,
            lines: lines.len(),
        });
    }
    let fragment = repaired_fragment.trim_end_matches('\n');
    let mut out: Vec<&str> = Vec::with_capacity(lines.len());
    out.extend_from_slice(&lines[..start - 1]);
    out.extend(fragment.split('\n'));
    out.extend_from_slice(&lines[end..]);
    Ok(out.join("\n"))
}

fn normalized_body(text: &str) -> String {
    let squeezed: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    squeezed.trim_end_matches('}').to_string()
}

/// True when the cleaned text adds nothing beyond the prompt (ignoring
/// whitespace and closing braces).
pub fn is_prompt_only(text: &str, prompt: &Prompt) -> bool {
    normalized_body(text) == normalized_body(&prompt.text)
}

/// Applies the heuristic chain to one suggestion. `repair_ctx` switches on
/// the splice step for suggestions produced from a repair prompt.
pub fn clean(
    sugg: &CodeSuggestion,
    prompt: &Prompt,
    repair_ctx: Option<&RepairContext>,
) -> Result<CodeSuggestion, FilterError> {
    let mut text = match repair_ctx {
        Some(ctx) => h7_splice_repaired(&ctx.original, &ctx.findings, &sugg.text)?,
        None => sugg.text.clone(),
    };
    text = h1_strip_fences(&text);
    if !text.trim().is_empty() {
        text = h2_ensure_prompt(&text, prompt);
    }
    match sugg.language {
        Language::Python => {
            text = h3_strip_sentinels(&text);
            text = h4_truncate_after_target(&text, prompt)?;
        }
        Language::Java => {
            text = h5_drop_extra_classes(&text, prompt)?;
            text = h6_brace_repair(&text);
        }
    }
    Ok(CodeSuggestion {
        text,
        ..sugg.clone()
    })
}

fn drop_reason_for(err: FilterError) -> DropReason {
    match err {
        FilterError::TargetNotFound(target) => DropReason::TargetNotFound { target },
        FilterError::SpanOutOfRange { start, end, lines } => {
            DropReason::SpanOutOfRange { start, end, lines }
        }
        FilterError::Syntax(e) => DropReason::SyntaxError {
            line: None,
            message: Some(e.to_string()),
        },
    }
}

/// Cleans one suggestion and runs the gate on it.
pub fn gate_suggestion(
    sugg: &CodeSuggestion,
    prompt: &Prompt,
    repair_ctx: Option<&RepairContext>,
) -> Result<CodeSuggestion, DropReason> {
    let cleaned = clean(sugg, prompt, repair_ctx).map_err(drop_reason_for)?;
    if cleaned.text.trim().is_empty() {
        return Err(DropReason::Empty);
    }
    let verdict = check_syntax(&cleaned.text, cleaned.language).map_err(|e| {
        DropReason::SyntaxError {
            line: None,
            message: Some(e.to_string()),
        }
    })?;
    if !verdict.ok {
        return Err(DropReason::SyntaxError {
            line: verdict.first_error_line,
            message: verdict.message,
        });
    }
    if is_prompt_only(&cleaned.text, prompt) {
        return Err(DropReason::EmptyBody);
    }
    Ok(cleaned)
}

/// Cleans every suggestion in parallel and keeps those that parse, in the
/// original order.
pub fn filter_inventory(inv: &SuggestionInventory) -> EligibleSet {
    let ctx = inv.repair_context.as_ref();
    let results: Vec<Result<CodeSuggestion, DropReason>> = inv
        .suggestions
        .par_iter()
        .map(|s| gate_suggestion(s, &inv.prompt, ctx))
        .collect();
    let mut cleaned = Vec::new();
    let mut dropped = Vec::new();
    for (sugg, result) in inv.suggestions.iter().zip(results) {
        match result {
            Ok(c) => cleaned.push(c),
            Err(reason) => dropped.push(DroppedSuggestion {
                position: sugg.position,
                reason,
            }),
        }
    }
    EligibleSet {
        prompt: inv.prompt.clone(),
        n: inv.n,
        x: cleaned.len(),
        cleaned,
        dropped,
    }
}
