//! Prompt templates with `{name}` placeholders.
//!
//! Debater templates exist per (role, modality, round kind); the Supporter,
//! Arbiter and Curator have one template each. A templates directory holds
//! one file per template, named like `strict_debater.text_image.rebuttal.txt`
//! or `arbiter.txt`. `{{` and `}}` render literal braces.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{AgentRole, Modality};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("template {name}: unknown placeholder {{{placeholder}}}")]
    UnknownPlaceholder { name: String, placeholder: String },
    #[error("template {name}: placeholder {{{placeholder}}} not allowed here")]
    ForbiddenPlaceholder { name: String, placeholder: String },
    #[error("template {name}: unbalanced brace at byte {offset}")]
    Unbalanced { name: String, offset: usize },
    #[error("template {name}: no value supplied for {{{placeholder}}}")]
    MissingValue { name: String, placeholder: String },
    #[error("missing template file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("reading template {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundKind {
    Opening,
    Rebuttal,
}

impl RoundKind {
    pub fn for_round(round: u32) -> Self {
        if round <= 1 {
            RoundKind::Opening
        } else {
            RoundKind::Rebuttal
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RoundKind::Opening => "opening",
            RoundKind::Rebuttal => "rebuttal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    name: String,
    segments: Vec<Segment>,
}

impl Template {
    /// Parses `text`, rejecting placeholders outside `allowed`.
    pub fn parse(name: &str, text: &str, allowed: &[&str]) -> Result<Self, PromptError> {
        let mut segments = Vec::new();
        let mut literal = String::new();
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'{' if bytes.get(i + 1) == Some(&b'{') => {
                    literal.push('{');
                    i += 2;
                }
                b'}' if bytes.get(i + 1) == Some(&b'}') => {
                    literal.push('}');
                    i += 2;
                }
                b'{' => {
                    let end = text[i + 1..]
                        .find('}')
                        .map(|e| i + 1 + e)
                        .ok_or(PromptError::Unbalanced { name: name.into(), offset: i })?;
                    let slot = &text[i + 1..end];
                    if !allowed.contains(&slot) {
                        return Err(PromptError::UnknownPlaceholder {
                            name: name.into(),
                            placeholder: slot.into(),
                        });
                    }
                    if !literal.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut literal)));
                    }
                    segments.push(Segment::Slot(slot.into()));
                    i = end + 1;
                }
                b'}' => return Err(PromptError::Unbalanced { name: name.into(), offset: i }),
                _ => {
                    let ch = text[i..].chars().next().expect("in bounds");
                    literal.push(ch);
                    i += ch.len_utf8();
                }
            }
        }
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        Ok(Template { name: name.into(), segments })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn placeholders(&self) -> BTreeSet<&str> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Slot(name) => Some(name.as_str()),
                Segment::Literal(_) => None,
            })
            .collect()
    }

    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, PromptError> {
        let mut out = String::new();
        for segment in &self.segments {
            match segment {
                Segment::Literal(text) => out.push_str(text),
                Segment::Slot(slot) => {
                    let value = values.iter().find(|(k, _)| k == slot).map(|(_, v)| *v).ok_or_else(|| {
                        PromptError::MissingValue { name: self.name.clone(), placeholder: slot.clone() }
                    })?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

pub const DEBATER_PLACEHOLDERS: &[&str] = &["input", "briefing", "own_last", "opponent_last", "round"];
pub const SUPPORTER_PLACEHOLDERS: &[&str] = &["input", "precedents"];
pub const ARBITER_PLACEHOLDERS: &[&str] = &["input", "briefing", "transcript", "trajectories"];
pub const CURATOR_PLACEHOLDERS: &[&str] =
    &["input", "ground_truth", "verdict", "outcome", "briefing", "transcript", "report"];

macro_rules! builtin {
    ($($file:literal),* $(,)?) => {
        &[$(($file, include_str!(concat!("../templates/", $file)))),*]
    };
}

const BUILTIN: &[(&str, &str)] = builtin![
    "strict_debater.text_only.opening.txt",
    "strict_debater.text_only.rebuttal.txt",
    "strict_debater.image_only.opening.txt",
    "strict_debater.image_only.rebuttal.txt",
    "strict_debater.text_image.opening.txt",
    "strict_debater.text_image.rebuttal.txt",
    "loose_debater.text_only.opening.txt",
    "loose_debater.text_only.rebuttal.txt",
    "loose_debater.image_only.opening.txt",
    "loose_debater.image_only.rebuttal.txt",
    "loose_debater.text_image.opening.txt",
    "loose_debater.text_image.rebuttal.txt",
    "supporter.txt",
    "arbiter.txt",
    "curator.txt",
];

pub fn debater_file_name(role: AgentRole, modality: Modality, kind: RoundKind) -> String {
    format!("{}.{}.{}.txt", role.as_str(), modality.as_str(), kind.as_str())
}

/// Every template the pipeline needs, validated at load time.
#[derive(Debug, Clone)]
pub struct PromptSet {
    debaters: HashMap<(AgentRole, Modality, RoundKind), Template>,
    supporter: Template,
    arbiter: Template,
    curator: Template,
}

impl PromptSet {
    /// The templates compiled into the crate.
    pub fn builtin() -> Self {
        Self::from_source(|name| {
            BUILTIN
                .iter()
                .find(|(file, _)| *file == name)
                .map(|(_, text)| text.to_string())
                .ok_or_else(|| PromptError::MissingFile(PathBuf::from(name)))
        })
        .expect("built-in templates are valid")
    }

    /// Loads every template from `dir`; any missing file is an error.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, PromptError> {
        let dir = dir.as_ref();
        Self::from_source(|name| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| {
                if source.kind() == std::io::ErrorKind::NotFound {
                    PromptError::MissingFile(path)
                } else {
                    PromptError::Io { path, source }
                }
            })
        })
    }

    /// Writes the built-in templates to `dir`, e.g. as a starting point for edits.
    pub fn export_builtin(dir: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::create_dir_all(dir.as_ref())?;
        for (file, text) in BUILTIN {
            std::fs::write(dir.as_ref().join(file), text)?;
        }
        Ok(())
    }

    fn from_source(mut read: impl FnMut(&str) -> Result<String, PromptError>) -> Result<Self, PromptError> {
        let mut debaters = HashMap::new();
        for role in [AgentRole::StrictDebater, AgentRole::LooseDebater] {
            for modality in Modality::ALL {
                for kind in [RoundKind::Opening, RoundKind::Rebuttal] {
                    let name = debater_file_name(role, modality, kind);
                    let template = Template::parse(&name, &read(&name)?, DEBATER_PLACEHOLDERS)?;
                    if kind == RoundKind::Opening {
                        for forbidden in ["own_last", "opponent_last"] {
                            if template.placeholders().contains(forbidden) {
                                return Err(PromptError::ForbiddenPlaceholder {
                                    name,
                                    placeholder: forbidden.into(),
                                });
                            }
                        }
                    }
                    debaters.insert((role, modality, kind), template);
                }
            }
        }
        let supporter = Template::parse("supporter.txt", &read("supporter.txt")?, SUPPORTER_PLACEHOLDERS)?;
        let arbiter = Template::parse("arbiter.txt", &read("arbiter.txt")?, ARBITER_PLACEHOLDERS)?;
        let curator = Template::parse("curator.txt", &read("curator.txt")?, CURATOR_PLACEHOLDERS)?;
        Ok(PromptSet { debaters, supporter, arbiter, curator })
    }

    pub fn debater(&self, role: AgentRole, modality: Modality, kind: RoundKind) -> &Template {
        self.debaters
            .get(&(role, modality, kind))
            .unwrap_or_else(|| panic!("no debater template for {role}/{modality}/{}", kind.as_str()))
    }

    pub fn supporter(&self) -> &Template {
        &self.supporter
    }

    pub fn arbiter(&self) -> &Template {
        &self.arbiter
    }

    pub fn curator(&self) -> &Template {
        &self.curator
    }
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}
