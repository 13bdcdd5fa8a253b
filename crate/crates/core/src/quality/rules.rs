//! Bundled line-oriented smell rules. They stand in for external analyzers
//! so the pipeline works offline; each rule mirrors a well-known Bandit or
//! SpotBugs check.

use once_cell::sync::Lazy;
use regex::Regex;

use crate::model::{Finding, Language, Severity};

pub const BUILTIN_SOURCE: &str = "builtin";

macro_rules! re {
    ($name:ident, $pat:expr) => {
        static $name: Lazy<Regex> = Lazy::new(|| Regex::new($pat).unwrap());
    };
}

re!(YAML_LOAD, r"\byaml\.(?:load|load_all)\s*\(");
re!(YAML_SAFE, r"\b(?:C?SafeLoader|BaseLoader)\b");
re!(PY_WEAK_HASH, r"\bhashlib\.(md5|sha1)\s*\(");
re!(PY_WEAK_HASH_NEW, r#"\bhashlib\.new\s*\(\s*['"](md5|sha1|MD5|SHA1)['"]"#);
re!(SUBPROCESS_SHELL, r"\bsubprocess\.(?:call|run|Popen|check_call|check_output)\s*\(.*\bshell\s*=\s*True");
re!(OS_SHELL, r"\bos\.(?:system|popen)\s*\(");
re!(OS_SHELL_LITERAL, r#"\bos\.(?:system|popen)\s*\(\s*(?:'[^'{}%+]*'|"[^"{}%+]*")\s*\)"#);
re!(F_STRING, r#"\b[fF][rR]?("([^"]*)"|'([^']*)')"#);
re!(FORMATTED_LITERAL, r#"("([^"]*)"|'([^']*)')\s*(?:%|\+|\.format\s*\()"#);
re!(SQL_KEYWORD, r"(?i)\b(?:select\s+.+\s+from|insert\s+into|update\s+\w+\s+set|delete\s+from)\b");
re!(FLASK_DEBUG, r"\.run\s*\(.*\bdebug\s*=\s*True");
re!(EXCEPT_HEAD, r"^\s*except\b[^:]*:\s*(?:pass\s*)?(?:#.*)?$");
re!(EXCEPT_INLINE_PASS, r"^\s*except\b[^:]*:\s*pass\s*(?:#.*)?$");
re!(PASS_LINE, r"^\s*pass\s*(?:#.*)?$");
re!(HARDCODED_PASSWORD, r#"(?i)\b\w*(?:password|passwd|pwd|secret)\w*\s*=\s*(?:'([^']+)'|"([^"]+)")"#);
re!(EVAL_EXEC, r#"\b(eval|exec)\s*\(\s*([^\s'")])"#);

re!(JAVA_EXECUTE, r"\.(?:execute|executeQuery|executeUpdate|addBatch|prepareStatement)\s*\(([^;]*)");
re!(JAVA_SQL_CONCAT, r#"(?i)"[^"]*\b(?:select|insert|update|delete)\b[^"]*"\s*\+"#);
re!(JAVA_WEAK_HASH, r#"MessageDigest\.getInstance\s*\(\s*"(MD5|MD2|SHA-?1)"\s*\)"#);
re!(JAVA_EMPTY_CATCH_INLINE, r"\bcatch\s*\([^)]*\)\s*\{\s*\}");
re!(JAVA_CATCH_OPEN, r"\bcatch\s*\([^)]*\)\s*\{\s*$");
re!(JAVA_STRING_EQ, r#"("[^"]*"\s*[!=]=[^=])|([!=]=\s*"[^"]*")"#);
re!(JAVA_IGNORED_RETURN, r"^\s*[A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*\.(?:trim|strip|toUpperCase|toLowerCase|replace|replaceAll|substring|concat|intern)\s*\([^;]*\)\s*;\s*$");

/// Lines that hold code (not comments or docstrings), as (1-based line, text).
fn code_lines(code: &str, language: Language) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut in_block = false;
    for (i, line) in code.lines().enumerate() {
        let trimmed = line.trim_start();
        match language {
            Language::Python => {
                let quotes = line.matches("'''").count() + line.matches("\"\"\"").count();
                if in_block {
                    if quotes % 2 == 1 {
                        in_block = false;
                    }
                    continue;
                }
                if quotes % 2 == 1 {
                    in_block = true;
                    continue;
                }
                let bare_string = trimmed.starts_with("'''") || trimmed.starts_with("\"\"\"");
                if trimmed.starts_with('#') || (bare_string && quotes >= 2) {
                    continue;
                }
            }
            Language::Java => {
                if in_block {
                    if line.contains("*/") {
                        in_block = false;
                    }
                    continue;
                }
                if trimmed.starts_with("/*") {
                    in_block = !trimmed.contains("*/");
                    continue;
                }
                if trimmed.starts_with("//") {
                    continue;
                }
            }
        }
        out.push((i + 1, line));
    }
    out
}

fn finding(rule: &str, message: impl Into<String>, line: usize, severity: Severity) -> Finding {
    Finding::new(rule, message, Some(line), severity, BUILTIN_SOURCE)
}

fn is_sql_string_build(line: &str) -> bool {
    let fstring_sql = F_STRING.captures_iter(line).any(|c| {
        let body = c.get(2).or_else(|| c.get(3)).map_or("", |m| m.as_str());
        body.contains('{') && SQL_KEYWORD.is_match(body)
    });
    let formatted_sql = FORMATTED_LITERAL.captures_iter(line).any(|c| {
        let body = c.get(2).or_else(|| c.get(3)).map_or("", |m| m.as_str());
        SQL_KEYWORD.is_match(body)
    });
    fstring_sql || formatted_sql
}

fn python_rules(code: &str) -> Vec<Finding> {
    let lines = code_lines(code, Language::Python);
    let mut out = Vec::new();
    for (idx, &(no, line)) in lines.iter().enumerate() {
        if YAML_LOAD.is_match(line) && !YAML_SAFE.is_match(line) {
            out.push(finding(
                "unsafe_yaml_load",
                "Use of unsafe yaml load. Allows instantiation of arbitrary objects. Consider yaml.safe_load().",
                no,
                Severity::Error,
            ));
        }
        if let Some(c) = PY_WEAK_HASH
            .captures(line)
            .or_else(|| PY_WEAK_HASH_NEW.captures(line))
        {
            out.push(finding(
                "weak_hash",
                format!(
                    "Use of weak {} hash for security. Consider usedforsecurity=False",
                    c[1].to_ascii_uppercase()
                ),
                no,
                Severity::Warning,
            ));
        }
        if SUBPROCESS_SHELL.is_match(line) {
            out.push(finding(
                "shell_injection",
                "subprocess call with shell=True identified, security issue.",
                no,
                Severity::Error,
            ));
        } else if OS_SHELL.is_match(line) && !OS_SHELL_LITERAL.is_match(line) {
            out.push(finding(
                "shell_injection",
                "Starting a process with a shell, possible injection detected, security issue.",
                no,
                Severity::Error,
            ));
        }
        if is_sql_string_build(line) {
            out.push(finding("sql_injection", "Possible SQL Injection", no, Severity::Error));
        }
        if FLASK_DEBUG.is_match(line) {
            out.push(finding(
                "flask_debug",
                "A Flask app appears to be run with debug=True, which exposes the Werkzeug debugger and allows the execution of arbitrary code.",
                no,
                Severity::Error,
            ));
        }
        if EXCEPT_INLINE_PASS.is_match(line) {
            out.push(finding("try_except_pass", "Try, Except, Pass detected.", no, Severity::Warning));
        } else if EXCEPT_HEAD.is_match(line) {
            let next = lines[idx + 1..].iter().find(|(_, l)| !l.trim().is_empty());
            if let Some(&(pass_no, pass_line)) = next {
                if PASS_LINE.is_match(pass_line) {
                    out.push(
                        finding("try_except_pass", "Try, Except, Pass detected.", no, Severity::Warning)
                            .with_span(no, pass_no),
                    );
                }
            }
        }
        if let Some(c) = HARDCODED_PASSWORD.captures(line) {
            let literal = c.get(1).or_else(|| c.get(2)).map_or("", |m| m.as_str());
            out.push(finding(
                "hardcoded_password",
                format!("Possible hardcoded password: '{literal}'"),
                no,
                Severity::Warning,
            ));
        }
        for c in EVAL_EXEC.captures_iter(line) {
            let start = c.get(0).map_or(0, |m| m.start());
            if line[..start].ends_with('.') {
                continue;
            }
            let message = if &c[1] == "eval" {
                "Use of possibly insecure function - consider using safer ast.literal_eval."
            } else {
                "Use of exec detected."
            };
            out.push(finding("eval_exec", message, no, Severity::Error));
        }
    }
    out
}

fn java_rules(code: &str) -> Vec<Finding> {
    let lines = code_lines(code, Language::Java);
    let mut out = Vec::new();
    for (idx, &(no, line)) in lines.iter().enumerate() {
        let concat_arg = JAVA_EXECUTE
            .captures(line)
            .is_some_and(|c| c[1].contains('+'));
        if concat_arg || JAVA_SQL_CONCAT.is_match(line) {
            out.push(finding(
                "sql_concat",
                "Nonconstant string passed to execute or addBatch method on an SQL statement",
                no,
                Severity::Error,
            ));
        }
        if let Some(c) = JAVA_WEAK_HASH.captures(line) {
            out.push(finding(
                "weak_hash",
                format!("This API {} is not a recommended cryptographic hash function", &c[1]),
                no,
                Severity::Warning,
            ));
        }
        if JAVA_EMPTY_CATCH_INLINE.is_match(line) {
            out.push(finding("empty_catch", "Exception is caught and ignored", no, Severity::Warning));
        } else if JAVA_CATCH_OPEN.is_match(line) {
            let next = lines[idx + 1..].iter().find(|(_, l)| !l.trim().is_empty());
            if let Some(&(close_no, close_line)) = next {
                if close_line.trim_start().starts_with('}') {
                    out.push(
                        finding("empty_catch", "Exception is caught and ignored", no, Severity::Warning)
                            .with_span(no, close_no),
                    );
                }
            }
        }
        if JAVA_STRING_EQ.is_match(line) {
            out.push(finding(
                "string_reference_equality",
                "Comparison of String objects using == or !=",
                no,
                Severity::Warning,
            ));
        }
        if JAVA_IGNORED_RETURN.is_match(line) {
            out.push(finding(
                "ignored_return_value",
                "Return value of method without side effect is ignored",
                no,
                Severity::Warning,
            ));
        }
    }
    out
}

/// Runs the bundled rule set. Findings come back sorted by line, then rule.
pub fn run_builtin_rules(code: &str, language: Language) -> Vec<Finding> {
    let mut findings = match language {
        Language::Python => python_rules(code),
        Language::Java => java_rules(code),
    };
    findings.sort_by(|a, b| (a.line_start, &a.rule_id).cmp(&(b.line_start, &b.rule_id)));
    findings
}
