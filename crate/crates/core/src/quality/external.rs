//! Adapter for external analyzers run as child processes.
//!
//! The snippet is written to an isolated temp file, the command template is
//! run through `sh -c` with `{file}` (and optionally `{report}`) substituted,
//! and the tool's JSON report is translated into [`Finding`]s through a small
//! per-tool field table.

use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::QualityError;
use crate::model::{Finding, Language, Severity};

pub const DEFAULT_MAX_CONCURRENT_ANALYZERS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    NativeJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSpec {
    pub name: String,
    pub command_template: String,
    #[serde(default)]
    pub report_format: ReportFormat,
    pub timeout_ms: u64,
    pub language: Language,
}

impl AnalyzerSpec {
    pub fn validate(&self) -> Result<(), QualityError> {
        let invalid = |reason: &str| QualityError::InvalidAnalyzer {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.command_template.matches("{file}").count() != 1 {
            return Err(invalid("command_template must contain {file} exactly once"));
        }
        if self.command_template.matches("{report}").count() > 1 {
            return Err(invalid("command_template may contain {report} at most once"));
        }
        if self.timeout_ms == 0 {
            return Err(invalid("timeout_ms must be positive"));
        }
        Ok(())
    }
}

/// Counting semaphore capping concurrent analyzer processes.
pub struct ProcessLimiter {
    slots: Mutex<usize>,
    freed: Condvar,
}

impl ProcessLimiter {
    pub fn new(max: usize) -> Self {
        ProcessLimiter {
            slots: Mutex::new(max.max(1)),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> LimiterGuard<'_> {
        let mut slots = self.slots.lock().unwrap_or_else(|e| e.into_inner());
        while *slots == 0 {
            slots = self.freed.wait(slots).unwrap_or_else(|e| e.into_inner());
        }
        *slots -= 1;
        LimiterGuard { limiter: self }
    }
}

pub struct LimiterGuard<'a> {
    limiter: &'a ProcessLimiter,
}

impl Drop for LimiterGuard<'_> {
    fn drop(&mut self) {
        let mut slots = self.limiter.slots.lock().unwrap_or_else(|e| e.into_inner());
        *slots += 1;
        self.limiter.freed.notify_one();
    }
}

static GLOBAL_LIMITER: Lazy<ProcessLimiter> =
    Lazy::new(|| ProcessLimiter::new(DEFAULT_MAX_CONCURRENT_ANALYZERS));

/// Field names used to pull findings out of one tool's native JSON.
struct ReportTable {
    /// Path to the array of issues (empty for a top-level array).
    results: &'static [&'static str],
    rule_id: &'static [&'static str],
    message: &'static [&'static str],
    line_start: &'static [&'static str],
    line_end: &'static [&'static str],
    severity: &'static [&'static str],
    severity_map: &'static [(&'static str, Severity)],
    /// Whether items carry their own `source` field.
    has_source: bool,
}

static BANDIT: ReportTable = ReportTable {
    results: &["results"],
    rule_id: &["test_id"],
    message: &["issue_text"],
    line_start: &["line_number"],
    line_end: &["line_range", "-1"],
    severity: &["issue_severity"],
    severity_map: &[
        ("HIGH", Severity::Error),
        ("MEDIUM", Severity::Warning),
        ("LOW", Severity::Info),
    ],
    has_source: false,
};

static SARIF: ReportTable = ReportTable {
    results: &["runs", "0", "results"],
    rule_id: &["ruleId"],
    message: &["message", "text"],
    line_start: &["locations", "0", "physicalLocation", "region", "startLine"],
    line_end: &["locations", "0", "physicalLocation", "region", "endLine"],
    severity: &["level"],
    severity_map: &[
        ("error", Severity::Error),
        ("warning", Severity::Warning),
        ("note", Severity::Info),
        ("none", Severity::Info),
    ],
    has_source: false,
};

static NORMALIZED: ReportTable = ReportTable {
    results: &["findings"],
    rule_id: &["rule_id"],
    message: &["message"],
    line_start: &["line_start"],
    line_end: &["line_end"],
    severity: &["severity"],
    severity_map: &[
        ("error", Severity::Error),
        ("warning", Severity::Warning),
        ("info", Severity::Info),
    ],
    has_source: true,
};

fn lookup<'v>(value: &'v Value, path: &[&str]) -> Option<&'v Value> {
    path.iter().try_fold(value, |v, key| match v {
        Value::Array(items) => {
            if *key == "-1" {
                items.last()
            } else {
                key.parse::<usize>().ok().and_then(|i| items.get(i))
            }
        }
        Value::Object(map) => map.get(*key),
        _ => None,
    })
}

fn as_line(v: Option<&Value>) -> Option<usize> {
    v.and_then(Value::as_u64).map(|n| n as usize).filter(|&n| n >= 1)
}

fn pick_table(report: &Value) -> Option<&'static ReportTable> {
    if report.is_array() {
        return Some(&NORMALIZED);
    }
    if lookup(report, SARIF.results).is_some() {
        Some(&SARIF)
    } else if report.get("results").is_some_and(Value::is_array) {
        Some(&BANDIT)
    } else if report.get("findings").is_some_and(Value::is_array) {
        Some(&NORMALIZED)
    } else {
        None
    }
}

/// Translates a native JSON report (Bandit, SARIF, or the normalized
/// findings schema) into findings attributed to `source`.
pub fn translate_report(source: &str, raw: &str) -> Result<Vec<Finding>, QualityError> {
    let parse_err = |reason: String| QualityError::ReportParse {
        name: source.to_string(),
        reason,
    };
    let report: Value = serde_json::from_str(raw).map_err(|e| parse_err(e.to_string()))?;
    let table = pick_table(&report).ok_or_else(|| parse_err("unrecognized report shape".into()))?;
    let items = if report.is_array() {
        report.as_array()
    } else {
        lookup(&report, table.results).and_then(Value::as_array)
    }
    .ok_or_else(|| parse_err("results are not an array".into()))?;

    let mut findings = Vec::with_capacity(items.len());
    for item in items {
        let text = |path: &[&str]| lookup(item, path).and_then(Value::as_str).map(str::to_string);
        let rule_id = text(table.rule_id).ok_or_else(|| parse_err("issue without rule id".into()))?;
        let message = text(table.message).unwrap_or_default();
        let line_start = as_line(lookup(item, table.line_start));
        let line_end = line_start.map(|s| as_line(lookup(item, table.line_end)).unwrap_or(s).max(s));
        let severity = text(table.severity)
            .and_then(|s| {
                table
                    .severity_map
                    .iter()
                    .find(|(k, _)| k.eq_ignore_ascii_case(&s))
                    .map(|(_, v)| *v)
            })
            .unwrap_or(Severity::Warning);
        let source = text(&["source"])
            .filter(|_| table.has_source)
            .unwrap_or_else(|| source.to_string());
        findings.push(Finding {
            rule_id,
            message,
            line_start,
            line_end,
            severity,
            source,
        });
    }
    Ok(findings)
}

/// Drops findings whose span lies entirely inside `region` (inclusive
/// 1-based lines). Findings without lines are kept.
pub fn suppress_region(findings: Vec<Finding>, region: Option<(usize, usize)>) -> Vec<Finding> {
    let Some((rs, re)) = region else {
        return findings;
    };
    findings
        .into_iter()
        .filter(|f| match f.span() {
            Some((s, e)) => s < rs || e > re,
            None => true,
        })
        .collect()
}

fn shell_quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

fn excerpt(bytes: &[u8]) -> String {
    let s = String::from_utf8_lossy(bytes);
    let trimmed = s.trim();
    trimmed.chars().take(400).collect()
}

/// Runs one external analyzer on `code`. Findings located entirely inside
/// `prompt_region` are discarded.
pub fn run_external_analyzer(
    spec: &AnalyzerSpec,
    code: &str,
    prompt_region: Option<(usize, usize)>,
) -> Result<Vec<Finding>, QualityError> {
    run_external_analyzer_limited(spec, code, prompt_region, &GLOBAL_LIMITER)
}

/// Same as [`run_external_analyzer`] but drawing process slots from
/// `limiter` instead of the process-wide default of four.
pub fn run_external_analyzer_limited(
    spec: &AnalyzerSpec,
    code: &str,
    prompt_region: Option<(usize, usize)>,
    limiter: &ProcessLimiter,
) -> Result<Vec<Finding>, QualityError> {
    spec.validate()?;
    let _slot = limiter.acquire();

    let dir = tempfile::tempdir()?;
    let file = dir.path().join(format!("snippet.{}", spec.language.file_extension()));
    std::fs::write(&file, code)?;
    let report_file = dir.path().join("report.json");
    let command = spec
        .command_template
        .replace("{file}", &shell_quote(&file))
        .replace("{report}", &shell_quote(&report_file));

    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .current_dir(dir.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;

    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let out_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout.read_to_end(&mut buf);
        buf
    });
    let err_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });

    let deadline = Instant::now() + Duration::from_millis(spec.timeout_ms);
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Err(QualityError::AnalyzerTimeout {
                name: spec.name.clone(),
                timeout_ms: spec.timeout_ms,
            });
        }
        std::thread::sleep(Duration::from_millis(2));
    };
    let out = out_reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();

    let report = if spec.command_template.contains("{report}") {
        std::fs::read_to_string(&report_file).unwrap_or_default()
    } else {
        String::from_utf8_lossy(&out).into_owned()
    };
    if report.trim().is_empty() {
        if status.success() {
            return Ok(Vec::new());
        }
        return Err(QualityError::AnalyzerCrashed {
            name: spec.name.clone(),
            exit_code: status.code(),
            stderr_excerpt: excerpt(&err),
        });
    }
    let findings = translate_report(&spec.name, &report)?;
    Ok(suppress_region(findings, prompt_region))
}
