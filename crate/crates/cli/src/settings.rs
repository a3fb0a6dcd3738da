//! The `aetheria.toml` document: experiment defaults plus filesystem paths.
//!
//! ```toml
//! [experiment]
//! n_rounds = 2
//! turn_order = "strict_first"
//!
//! [experiment.models]
//! endpoint = "https://api.openai.com/v1"
//! debater_model = "..."
//!
//! [paths]
//! runs_dir = "runs"
//! library = "library.jsonl"
//! ```
//!
//! Relative paths resolve against the working directory. Secrets are read
//! from the environment only.

use std::path::{Path, PathBuf};

use aetheria_core::config::ExperimentConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Log store used by `moderate` and `serve`.
    pub runs_dir: PathBuf,
    pub library: PathBuf,
    /// Votes and imported flags.
    pub review_dir: PathBuf,
    /// Template directory replacing the built-in prompts.
    pub prompts_dir: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            runs_dir: "runs".into(),
            library: "library.jsonl".into(),
            review_dir: "review".into(),
            prompts_dir: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub experiment: ExperimentConfig,
    pub paths: Paths,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// A missing `path` is an error; `None` yields defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Settings::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use aetheria_core::model::TurnOrder;

    #[test]
    fn empty_document_is_default() {
        assert_eq!(Settings::parse("").unwrap(), Settings::default());
    }

    #[test]
    fn nested_tables_parse() {
        let s = Settings::parse(
            "[experiment]\nn_rounds = 3\nturn_order = \"loose_first\"\n[experiment.models]\ndebater_model = \"d\"\n[paths]\nlibrary = \"lib.jsonl\"\n",
        )
        .unwrap();
        assert_eq!(s.experiment.n_rounds, 3);
        assert_eq!(s.experiment.turn_order, TurnOrder::LooseFirst);
        assert_eq!(s.experiment.models.debater_model, "d");
        assert_eq!(s.experiment.k_retrieval, ExperimentConfig::default().k_retrieval);
        assert_eq!(s.paths.library, PathBuf::from("lib.jsonl"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Settings::parse("[experiment]\nrounds = 3\n").is_err());
        assert!(Settings::parse("[paths]\nrun_dir = \"x\"\n").is_err());
        assert!(Settings::parse("n_rounds = 3\n").is_err());
    }
}
