#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use codesift_core::error::GenerationError;
use codesift_core::eval::{run_pipeline, DatasetRecord, PipelineConfig};
use codesift_core::generation::fixture_key;
use codesift_core::{record_fixture, BackendKind, GenerationBackend, GenerationRequest, Language};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const N: usize = 10;

/// One prompt family: the prompt, a clean body, a flawed body, a broken
/// body, and the single-line fix a repair answer would contain.
struct Family {
    language: Language,
    prompt: fn(usize) -> String,
    clean: &'static str,
    flawed: &'static str,
    broken: &'static str,
    /// Marker found in repair prompts built from the flawed body.
    marker: &'static str,
    fix: &'static str,
}

const FAMILIES: [Family; 4] = [
    Family {
        language: Language::Python,
        prompt: |i| format!("import hashlib\n\ndef digest_{i}(data):\n    \"\"\"Return a hex digest of data.\"\"\"\n"),
        clean: "    return hashlib.sha256(data).hexdigest()\n",
        flawed: "    return hashlib.md5(data).hexdigest()\n",
        broken: "    return hashlib.sha256(data\n",
        marker: "hashlib.md5",
        fix: "    return hashlib.sha256(data).hexdigest()",
    },
    Family {
        language: Language::Python,
        prompt: |i| {
            format!("import yaml\n\ndef load_{i}(path):\n    \"\"\"Parse a YAML file.\"\"\"\n    with open(path) as f:\n")
        },
        clean: "        return yaml.safe_load(f)\n",
        flawed: "        return yaml.load(f, Loader=yaml.FullLoader)\n",
        broken: "        return yaml.safe_load(f\n",
        marker: "yaml.load(",
        fix: "        return yaml.safe_load(f)",
    },
    Family {
        language: Language::Java,
        prompt: |i| format!("public class Auth{i} {{\n    public boolean isAdmin(String role) {{\n"),
        clean: "        return \"admin\".equals(role);\n    }\n}\n",
        flawed: "        return role == \"admin\";\n    }\n}\n",
        broken: "        return role.equals(\n",
        marker: "role == \"admin\"",
        fix: "        return \"admin\".equals(role);",
    },
    Family {
        language: Language::Java,
        prompt: |i| format!("import java.security.MessageDigest;\n\npublic class Hash{i} {{\n    public static byte[] hash(String s) throws Exception {{\n"),
        clean: "        return MessageDigest.getInstance(\"SHA-256\").digest(s.getBytes());\n    }\n}\n",
        flawed: "        return MessageDigest.getInstance(\"MD5\").digest(s.getBytes());\n    }\n}\n",
        broken: "        return MessageDigest.getInstance(\n",
        marker: "\"MD5\"",
        fix: "        return MessageDigest.getInstance(\"SHA-256\").digest(s.getBytes());",
    },
];

/// A dataset with scripted completions. Prompt mixes cover all-clean,
/// all-flawed (repair), all-broken (x = 0) and random mixtures.
pub struct Scenario {
    pub records: Vec<DatasetRecord>,
    pub completions: HashMap<String, Vec<String>>,
}

pub fn scenario(count: usize, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut completions = HashMap::new();
    for i in 0..count {
        let family = &FAMILIES[i % FAMILIES.len()];
        let prompt = (family.prompt)(i);
        let (clean, flawed) = match i % 5 {
            0 => (N, 0),
            1 => (0, N),
            2 => (0, 0),
            _ => {
                let c = rng.gen_range(0..=N);
                (c, rng.gen_range(0..=N - c))
            }
        };
        let mut texts: Vec<String> = std::iter::repeat(family.clean)
            .take(clean)
            .chain(std::iter::repeat(family.flawed).take(flawed))
            .chain(std::iter::repeat(family.broken).take(N - clean - flawed))
            .map(str::to_string)
            .collect();
        texts.shuffle(&mut rng);
        records.push(DatasetRecord {
            task_id: format!("task/{i:03}"),
            prompt: prompt.clone(),
            language: family.language,
            entry_point: None,
            source_dataset: "acceptance".into(),
        });
        completions.insert(prompt, texts);
    }
    Scenario { records, completions }
}

/// Serves scripted completions; repair prompts get a fixed answer (every
/// third family member keeps the flaw so some repairs fail) and every
/// request is logged.
pub struct ScriptedBackend {
    completions: HashMap<String, Vec<String>>,
    pub log: Mutex<BTreeMap<String, (GenerationRequest, Vec<String>)>>,
}

impl ScriptedBackend {
    pub fn new(completions: HashMap<String, Vec<String>>) -> Self {
        ScriptedBackend {
            completions,
            log: Mutex::new(BTreeMap::new()),
        }
    }

    fn repair_answer(&self, prompt_text: &str, n: usize) -> Vec<String> {
        let family = FAMILIES.iter().find(|f| prompt_text.contains(f.marker));
        let answer = match family {
            Some(f) if prompt_text.contains("Auth1") || prompt_text.contains("digest_2") => {
                f.flawed.trim_end().lines().next().unwrap_or("").to_string()
            }
            Some(f) => f.fix.to_string(),
            None => String::new(),
        };
        vec![answer; n]
    }
}

impl GenerationBackend for ScriptedBackend {
    fn complete(&self, req: &GenerationRequest) -> Result<Vec<String>, GenerationError> {
        let mut out = self
            .completions
            .get(&req.prompt_text)
            .cloned()
            .unwrap_or_else(|| self.repair_answer(&req.prompt_text, req.n));
        out.truncate(req.n);
        let key = fixture_key(&req.prompt_text, &req.model_id, req.n);
        self.log.lock().unwrap().insert(key, (req.clone(), out.clone()));
        Ok(out)
    }
}

pub struct ReplayFiles {
    pub dataset: PathBuf,
    pub fixtures: PathBuf,
    pub records: Vec<DatasetRecord>,
}

/// Writes a dataset and a replay fixture covering every request (including
/// repair prompts) a default-config run for `model` makes.
pub fn write_replay(dir: &Path, count: usize, seed: u64, model: &str) -> ReplayFiles {
    let sc = scenario(count, seed);
    let backend = ScriptedBackend::new(sc.completions);
    let cfg = PipelineConfig::new(model, BackendKind::Replay);
    run_pipeline(&sc.records, &cfg, &backend).expect("recording run");

    let dataset = dir.join("acceptance.jsonl");
    let lines: Vec<String> = sc
        .records
        .iter()
        .map(|r| {
            serde_json::json!({
                "task_id": r.task_id,
                "prompt": r.prompt,
                "language": r.language.as_str(),
            })
            .to_string()
        })
        .collect();
    fs::write(&dataset, lines.join("\n") + "\n").unwrap();

    let fixtures = dir.join("fixtures.jsonl");
    let _ = fs::remove_file(&fixtures);
    for (req, completions) in backend.log.into_inner().unwrap().into_values() {
        record_fixture(&req, &completions, &fixtures).expect("fixture record");
    }
    ReplayFiles {
        dataset,
        fixtures,
        records: sc.records,
    }
}
