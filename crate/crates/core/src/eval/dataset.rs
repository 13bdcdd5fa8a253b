use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::EvalError;
use crate::model::{Language, Prompt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    JsonlHumaneval,
    JsonlGeneric,
    CsvPrompts,
}

impl FromStr for DatasetFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "jsonl_humaneval" | "humaneval" => Ok(DatasetFormat::JsonlHumaneval),
            "jsonl_generic" | "jsonl" => Ok(DatasetFormat::JsonlGeneric),
            "csv_prompts" | "csv" => Ok(DatasetFormat::CsvPrompts),
            other => Err(EvalError::MalformedRecord {
                line_no: 0,
                reason: format!("unknown dataset format `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub task_id: String,
    pub prompt: String,
    pub language: Language,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_point: Option<String>,
    pub source_dataset: String,
}

impl DatasetRecord {
    pub fn to_prompt(&self) -> Result<Prompt, EvalError> {
        Ok(Prompt::new(
            self.task_id.clone(),
            self.language,
            self.prompt.clone(),
            self.source_dataset.clone(),
            self.entry_point.clone(),
        )?)
    }
}

fn malformed(line_no: usize, reason: impl Into<String>) -> EvalError {
    EvalError::MalformedRecord {
        line_no,
        reason: reason.into(),
    }
}

fn str_field<'a>(obj: &'a Value, names: &[&str]) -> Option<&'a str> {
    names.iter().find_map(|n| obj.get(*n).and_then(Value::as_str))
}

fn parse_language(raw: Option<&str>, default: Language, line_no: usize) -> Result<Language, EvalError> {
    match raw {
        None => Ok(default),
        Some(s) => s.parse().map_err(|e: crate::error::ModelError| malformed(line_no, e.to_string())),
    }
}

fn from_json(
    obj: &Value,
    format: DatasetFormat,
    language: Language,
    dataset: &str,
    line_no: usize,
) -> Result<DatasetRecord, EvalError> {
    let (id_keys, prompt_keys): (&[&str], &[&str]) = match format {
        DatasetFormat::JsonlHumaneval => (&["task_id"], &["prompt"]),
        _ => (&["task_id", "id"], &["prompt", "text"]),
    };
    let task_id = str_field(obj, id_keys).ok_or_else(|| malformed(line_no, "missing \"task_id\""))?;
    let prompt = str_field(obj, prompt_keys).ok_or_else(|| malformed(line_no, "missing \"prompt\""))?;
    if prompt.is_empty() {
        return Err(malformed(line_no, "empty \"prompt\""));
    }
    Ok(DatasetRecord {
        task_id: task_id.to_string(),
        prompt: prompt.to_string(),
        language: parse_language(str_field(obj, &["language"]), language, line_no)?,
        entry_point: str_field(obj, &["entry_point"]).map(str::to_string),
        source_dataset: str_field(obj, &["dataset", "source_dataset"]).unwrap_or(dataset).to_string(),
    })
}

/// Reads prompts from a benchmark file. `language` applies to records that
/// do not name one; the dataset name defaults to the file stem.
pub fn load_dataset(path: &Path, format: DatasetFormat, language: Language) -> Result<Vec<DatasetRecord>, EvalError> {
    let raw = fs::read_to_string(path)?;
    let dataset = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_default();
    let records = match format {
        DatasetFormat::JsonlHumaneval | DatasetFormat::JsonlGeneric => raw
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, line)| {
                let obj: Value = serde_json::from_str(line).map_err(|e| malformed(i + 1, e.to_string()))?;
                from_json(&obj, format, language, &dataset, i + 1)
            })
            .collect::<Result<Vec<_>, _>>()?,
        DatasetFormat::CsvPrompts => {
            let mut reader = csv::Reader::from_reader(raw.as_bytes());
            let mut out = Vec::new();
            for (i, row) in reader.deserialize::<BTreeMap<String, String>>().enumerate() {
                let line_no = i + 2;
                let row = row.map_err(|e| malformed(line_no, e.to_string()))?;
                let obj = serde_json::to_value(&row).map_err(|e| malformed(line_no, e.to_string()))?;
                out.push(from_json(&obj, format, language, &dataset, line_no)?);
            }
            out
        }
    };
    let mut seen = HashSet::new();
    for (i, r) in records.iter().enumerate() {
        if !seen.insert((r.source_dataset.as_str(), r.task_id.as_str())) {
            return Err(malformed(i + 1, format!("duplicate task_id `{}`", r.task_id)));
        }
    }
    Ok(records)
}

/// Manual relevance labels: prompt id to (position to 2 or 3).
pub type ManualLabels = BTreeMap<String, BTreeMap<usize, u8>>;

pub fn load_labels(path: &Path) -> Result<ManualLabels, EvalError> {
    let raw = fs::read_to_string(path)?;
    let labels: ManualLabels = serde_json::from_str(&raw).map_err(|e| malformed(e.line(), e.to_string()))?;
    for per_prompt in labels.values() {
        for (&position, &label) in per_prompt {
            if !(2..=3).contains(&label) {
                return Err(EvalError::IllegalLabel { position, label });
            }
        }
    }
    Ok(labels)
}
