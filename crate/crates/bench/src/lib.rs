//! Sample inventories for the criterion benches.

use codesift_core::{Language, Prompt, SuggestionInventory};

pub const PY_PROMPT: &str = "import hashlib\n\ndef digest(data):\n    \"\"\"Hex digest of data.\"\"\"\n";
pub const JAVA_PROMPT: &str =
    "import java.sql.*;\n\npublic class Dao {\n    public ResultSet find(Connection c, String name) throws SQLException {\n";

const PY_COMPLETIONS: [&str; 5] = [
    "    return hashlib.sha256(data).hexdigest()\n",
    "    return hashlib.md5(data).hexdigest()\n",
    "```python\nimport hashlib\n\ndef digest(data):\n    return hashlib.sha1(data).hexdigest()\n```\nThis hashes the data.",
    "    return hashlib.sha256(data\n",
    "    h = hashlib.sha256()\n    h.update(data)\n    return h.hexdigest()\n\n\ndef main():\n    print(digest(b'x'))\n",
];

const JAVA_COMPLETIONS: [&str; 6] = [
    "        PreparedStatement p = c.prepareStatement(\"SELECT * FROM t WHERE n = ?\");\n        p.setString(1, name);\n        return p.executeQuery();\n    }\n}\n",
    "        Statement s = c.createStatement();\n        return s.executeQuery(\"SELECT * FROM t WHERE n = '\" + name + \"'\");\n    }\n}\n",
    "        PreparedStatement p = c.prepareStatement(\"SELECT 1\");\n        return p.executeQuery();\n    }\n",
    "        return c.createStatement().executeQuery(\"SELECT 1\");\n    }\n}\n\nclass Main {\n    public static void main(String[] a) {}\n}\n",
    "        Statement s = c.createStatement();\n        return s.executeQuery(\"SELECT",
    "\n",
];

/// An inventory of `n` suggestions cycling through a fixed mix of clean,
/// flawed, fenced, truncated, over-long and empty completions.
pub fn sample_inventory(language: Language, n: usize) -> SuggestionInventory {
    let (text, pool): (&str, &[&str]) = match language {
        Language::Python => (PY_PROMPT, &PY_COMPLETIONS),
        Language::Java => (JAVA_PROMPT, &JAVA_COMPLETIONS),
    };
    let prompt = Prompt::new("bench", language, text, "bench", None).expect("bench prompt");
    let completions = (0..n).map(|i| pool[i % pool.len()].to_string()).collect();
    SuggestionInventory::from_completions(prompt, completions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use codesift_core::filter_inventory;

    #[test]
    fn inventories_have_eligible_and_dropped_members() {
        for lang in [Language::Python, Language::Java] {
            let eligible = filter_inventory(&sample_inventory(lang, 10));
            assert_eq!(eligible.n, 10);
            assert!(eligible.x > 0 && eligible.x < 10, "{lang:?}: x = {}", eligible.x);
        }
    }
}
