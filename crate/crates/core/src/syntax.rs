//! Syntax gate: decides whether a snippet parses under its language grammar
//! and locates top-level code units.
//!
//! The verdict uses a strict parser (a full Python 3 parser, and the Java
//! tree-sitter grammar with recovery nodes treated as failures). Unit location
//! uses tree-sitter's error-tolerant trees so heuristics can still work on
//! broken code.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};
use tree_sitter::{Node, Parser, Tree};

use crate::error::SyntaxError;
use crate::model::Language;

const WRAPPER_CLASS: &str = "__CodesiftWrapper__";

const JAVA_TYPE_DECLS: &[&str] = &[
    "class_declaration",
    "interface_declaration",
    "enum_declaration",
    "record_declaration",
    "annotation_type_declaration",
];

const JAVA_TOP_LEVEL_KINDS: &[&str] = &[
    "package_declaration",
    "import_declaration",
    "module_declaration",
    "line_comment",
    "block_comment",
    ";",
    "class_declaration",
    "interface_declaration",
    "enum_declaration",
    "record_declaration",
    "annotation_type_declaration",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxVerdict {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_error_line: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl SyntaxVerdict {
    pub fn valid() -> Self {
        SyntaxVerdict {
            ok: true,
            first_error_line: None,
            message: None,
        }
    }

    pub fn invalid(line: usize, message: impl Into<String>) -> Self {
        SyntaxVerdict {
            ok: false,
            first_error_line: Some(line.max(1)),
            message: Some(message.into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Function,
    Method,
    Class,
    Other,
}

/// A top-level unit with its inclusive, 1-based line range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitSpan {
    pub kind: UnitKind,
    pub name: String,
    pub line_start: usize,
    pub line_end: usize,
}

thread_local! {
    static PYTHON_PARSER: RefCell<Option<Parser>> = const { RefCell::new(None) };
    static JAVA_PARSER: RefCell<Option<Parser>> = const { RefCell::new(None) };
}

fn parse_tree(code: &str, language: Language) -> Result<Tree, SyntaxError> {
    let slot = match language {
        Language::Python => &PYTHON_PARSER,
        Language::Java => &JAVA_PARSER,
    };
    slot.with(|cell| {
        let mut guard = cell.borrow_mut();
        if guard.is_none() {
            let mut parser = Parser::new();
            let grammar: tree_sitter::Language = match language {
                Language::Python => tree_sitter_python::LANGUAGE.into(),
                Language::Java => tree_sitter_java::LANGUAGE.into(),
            };
            parser
                .set_language(&grammar)
                .map_err(|_| SyntaxError::ParserUnavailable(language))?;
            *guard = Some(parser);
        }
        let parser = guard.as_mut().expect("parser initialised above");
        parser
            .parse(code, None)
            .ok_or(SyntaxError::ParserUnavailable(language))
    })
}

/// Strict syntax check. Java snippets without any type declaration are
/// parsed inside a synthetic wrapper class.
pub fn check_syntax(code: &str, language: Language) -> Result<SyntaxVerdict, SyntaxError> {
    match language {
        Language::Python => Ok(check_python(code)),
        Language::Java => check_java(code),
    }
}

fn check_python(code: &str) -> SyntaxVerdict {
    match rustpython_parser::parse(code, rustpython_parser::Mode::Module, "<snippet>") {
        Ok(_) => SyntaxVerdict::valid(),
        Err(err) => {
            let offset = (u32::from(err.offset) as usize).min(code.len());
            let line = line_of_offset(code, offset);
            SyntaxVerdict::invalid(line, err.error.to_string())
        }
    }
}

fn line_of_offset(code: &str, offset: usize) -> usize {
    let mut end = offset;
    while end > 0 && !code.is_char_boundary(end) {
        end -= 1;
    }
    code[..end].bytes().filter(|&b| b == b'\n').count() + 1
}

fn check_java(code: &str) -> Result<SyntaxVerdict, SyntaxError> {
    let tree = parse_tree(code, Language::Java)?;
    let line_count = code.lines().count().max(1);
    if contains_kind(tree.root_node(), JAVA_TYPE_DECLS) {
        return Ok(java_tree_verdict(&tree, |l| l.min(line_count)));
    }
    let wrapped = JavaWrapped::new(code);
    let tree = parse_tree(&wrapped.text, Language::Java)?;
    Ok(java_tree_verdict(&tree, |l| wrapped.original_line(l).min(line_count)))
}

fn java_tree_verdict(tree: &Tree, map_line: impl Fn(usize) -> usize) -> SyntaxVerdict {
    let root = tree.root_node();
    if let Some(node) = first_error_node(root) {
        let line = map_line(node.start_position().row + 1);
        let message = if node.is_missing() {
            format!("missing `{}`", node.kind())
        } else {
            "unexpected syntax".to_string()
        };
        return SyntaxVerdict::invalid(line, message);
    }
    let mut cursor = root.walk();
    for child in root.children(&mut cursor) {
        if !JAVA_TOP_LEVEL_KINDS.contains(&child.kind()) {
            let line = map_line(child.start_position().row + 1);
            return SyntaxVerdict::invalid(
                line,
                format!("`{}` outside of a type declaration", child.kind()),
            );
        }
    }
    SyntaxVerdict::valid()
}

fn first_error_node(node: Node<'_>) -> Option<Node<'_>> {
    if node.is_error() || node.is_missing() {
        return Some(node);
    }
    if !node.has_error() {
        return None;
    }
    let mut cursor = node.walk();
    let children: Vec<Node<'_>> = node.children(&mut cursor).collect();
    children.into_iter().find_map(first_error_node)
}

fn contains_kind(node: Node<'_>, kinds: &[&str]) -> bool {
    if kinds.contains(&node.kind()) {
        return true;
    }
    let mut cursor = node.walk();
    let children: Vec<Node<'_>> = node.children(&mut cursor).collect();
    children.into_iter().any(|c| contains_kind(c, kinds))
}

/// A Java snippet placed inside a synthetic class. Leading package/import
/// lines stay outside the wrapper.
struct JavaWrapped {
    text: String,
    header_lines: usize,
}

impl JavaWrapped {
    fn new(code: &str) -> Self {
        let lines: Vec<&str> = code.split('\n').collect();
        let header_lines = lines
            .iter()
            .take_while(|l| {
                let t = l.trim();
                t.is_empty()
                    || t.starts_with("package ")
                    || t.starts_with("import ")
                    || t.starts_with("//")
            })
            .count();
        let mut text = String::with_capacity(code.len() + 48);
        for l in &lines[..header_lines] {
            text.push_str(l);
            text.push('\n');
        }
        text.push_str("class ");
        text.push_str(WRAPPER_CLASS);
        text.push_str(" {\n");
        text.push_str(&lines[header_lines..].join("\n"));
        text.push_str("\n}\n");
        JavaWrapped { text, header_lines }
    }

    /// Maps a 1-based line of the wrapped text back to the snippet.
    fn original_line(&self, wrapped: usize) -> usize {
        if wrapped <= self.header_lines + 1 {
            wrapped.max(1)
        } else {
            wrapped - 1
        }
    }
}

fn node_lines(node: Node<'_>) -> (usize, usize) {
    let start = node.start_position();
    let end = node.end_position();
    let end_row = if end.column == 0 && end.row > start.row {
        end.row - 1
    } else {
        end.row
    };
    (start.row + 1, end_row + 1)
}

fn node_name(node: Node<'_>, src: &str) -> String {
    node.child_by_field_name("name")
        .and_then(|n| n.utf8_text(src.as_bytes()).ok())
        .unwrap_or_default()
        .to_string()
}

/// Top-level units in source order. Unparseable regions come back as
/// `UnitKind::Other` spans.
pub fn top_level_units(code: &str, language: Language) -> Result<Vec<UnitSpan>, SyntaxError> {
    let units = match language {
        Language::Python => python_units(code)?,
        Language::Java => java_units(code)?,
    };
    Ok(normalize_spans(units))
}

fn python_units(code: &str) -> Result<Vec<UnitSpan>, SyntaxError> {
    let tree = parse_tree(code, Language::Python)?;
    let root = tree.root_node();
    let mut units = Vec::new();
    let mut cursor = root.walk();
    for child in root.children(&mut cursor) {
        let (line_start, line_end) = node_lines(child);
        let (kind, name) = match child.kind() {
            "function_definition" => (UnitKind::Function, node_name(child, code)),
            "class_definition" => (UnitKind::Class, node_name(child, code)),
            "decorated_definition" => match child.child_by_field_name("definition") {
                Some(def) if def.kind() == "class_definition" => {
                    (UnitKind::Class, node_name(def, code))
                }
                Some(def) => (UnitKind::Function, node_name(def, code)),
                None => (UnitKind::Other, String::new()),
            },
            "ERROR" => (UnitKind::Other, String::new()),
            _ => continue,
        };
        units.push(UnitSpan {
            kind,
            name,
            line_start,
            line_end,
        });
    }
    Ok(units)
}

fn java_member_unit(node: Node<'_>, src: &str) -> Option<(UnitKind, String)> {
    match node.kind() {
        k if JAVA_TYPE_DECLS.contains(&k) => Some((UnitKind::Class, node_name(node, src))),
        "method_declaration" | "constructor_declaration" => {
            Some((UnitKind::Method, node_name(node, src)))
        }
        "ERROR" => Some((UnitKind::Other, String::new())),
        _ => None,
    }
}

fn java_units(code: &str) -> Result<Vec<UnitSpan>, SyntaxError> {
    let tree = parse_tree(code, Language::Java)?;
    let root = tree.root_node();
    let mut units = Vec::new();
    if contains_kind(root, JAVA_TYPE_DECLS) {
        let mut cursor = root.walk();
        for child in root.children(&mut cursor) {
            if let Some((kind, name)) = java_member_unit(child, code) {
                let (line_start, line_end) = node_lines(child);
                units.push(UnitSpan {
                    kind,
                    name,
                    line_start,
                    line_end,
                });
            }
        }
        return Ok(units);
    }

    let wrapped = JavaWrapped::new(code);
    let tree = parse_tree(&wrapped.text, Language::Java)?;
    let root = tree.root_node();
    let line_count = code.lines().count().max(1);
    let mut push = |node: Node<'_>, kind: UnitKind, name: String| {
        let (s, e) = node_lines(node);
        let s = wrapped.original_line(s).min(line_count);
        let e = wrapped.original_line(e).min(line_count).max(s);
        units.push(UnitSpan {
            kind,
            name,
            line_start: s,
            line_end: e,
        });
    };
    let mut cursor = root.walk();
    for child in root.children(&mut cursor) {
        let is_wrapper = child.kind() == "class_declaration"
            && node_name(child, &wrapped.text) == WRAPPER_CLASS;
        if is_wrapper {
            if let Some(body) = child.child_by_field_name("body") {
                let mut body_cursor = body.walk();
                for member in body.children(&mut body_cursor) {
                    if let Some((kind, name)) = java_member_unit(member, &wrapped.text) {
                        push(member, kind, name);
                    }
                }
            }
        } else if child.kind() == "ERROR" {
            push(child, UnitKind::Other, String::new());
        }
    }
    Ok(units)
}

/// Sorts spans and trims overlaps so siblings never share a line; error
/// spans give way to named units.
fn normalize_spans(mut units: Vec<UnitSpan>) -> Vec<UnitSpan> {
    units.sort_by_key(|u| (u.line_start, u.line_end));
    let mut out: Vec<UnitSpan> = Vec::with_capacity(units.len());
    for mut unit in units {
        if let Some(prev) = out.last_mut() {
            if unit.line_start <= prev.line_end {
                if prev.kind == UnitKind::Other && unit.kind != UnitKind::Other {
                    if unit.line_start > prev.line_start {
                        prev.line_end = unit.line_start - 1;
                    } else {
                        out.pop();
                    }
                } else {
                    unit.line_start = prev.line_end + 1;
                    if unit.line_start > unit.line_end {
                        continue;
                    }
                }
            }
        }
        out.push(unit);
    }
    out
}
