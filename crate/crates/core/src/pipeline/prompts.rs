use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pipeline stages that talk to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Identify,
    Merge,
    Rewrite,
    Conclusion,
    Expand,
    Attach,
    Linked,
    Implicit,
    Undercut,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Identify,
        Stage::Merge,
        Stage::Rewrite,
        Stage::Conclusion,
        Stage::Expand,
        Stage::Attach,
        Stage::Linked,
        Stage::Implicit,
        Stage::Undercut,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Identify => "identify",
            Stage::Merge => "merge",
            Stage::Rewrite => "rewrite",
            Stage::Conclusion => "conclusion",
            Stage::Expand => "expand",
            Stage::Attach => "attach",
            Stage::Linked => "linked",
            Stage::Implicit => "implicit",
            Stage::Undercut => "undercut",
        }
    }

    fn placeholders(self) -> &'static [&'static str] {
        match self {
            Stage::Identify => &["text"],
            Stage::Merge | Stage::Conclusion => &["text", "components"],
            Stage::Rewrite => &["text", "components", "count"],
            Stage::Expand => &["text", "components", "target", "candidates", "relations"],
            Stage::Attach => &["text", "components", "relations_so_far", "target", "candidates", "relations"],
            Stage::Linked => &["text", "target", "premises", "candidates"],
            Stage::Implicit => &["text", "components", "premises", "target"],
            Stage::Undercut => &["text", "attacker", "target", "inferences"],
        }
    }

    fn builtin(self) -> &'static str {
        match self {
            Stage::Identify => include_str!("../../templates/identify.txt"),
            Stage::Merge => include_str!("../../templates/merge.txt"),
            Stage::Rewrite => include_str!("../../templates/rewrite.txt"),
            Stage::Conclusion => include_str!("../../templates/conclusion.txt"),
            Stage::Expand => include_str!("../../templates/expand.txt"),
            Stage::Attach => include_str!("../../templates/attach.txt"),
            Stage::Linked => include_str!("../../templates/linked.txt"),
            Stage::Implicit => include_str!("../../templates/implicit.txt"),
            Stage::Undercut => include_str!("../../templates/undercut.txt"),
        }
    }
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("cannot read template {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("template {stage}: missing section '--- {section} ---'")]
    MissingSection { stage: &'static str, section: &'static str },
    #[error("template {stage}: unknown placeholder {{{name}}}")]
    UnknownPlaceholder { stage: &'static str, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub system: String,
    pub user: String,
    pub reminder: String,
}

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([a-z_]+)\}").unwrap());

impl Template {
    /// Parses the sectioned file format. Lines before the first section
    /// marker that start with `#` are comments.
    pub fn parse(stage: Stage, source: &str) -> Result<Self, TemplateError> {
        let mut sections: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let mut current: Option<&str> = None;
        for line in source.lines() {
            let trimmed = line.trim();
            if let Some(name) = trimmed.strip_prefix("--- ").and_then(|rest| rest.strip_suffix(" ---")) {
                current = Some(name);
                sections.entry(name).or_default();
                continue;
            }
            if let Some(name) = current {
                sections.get_mut(name).expect("section exists").push(line);
            }
        }
        let mut take = |section: &'static str| -> Result<String, TemplateError> {
            let lines =
                sections.remove(section).ok_or(TemplateError::MissingSection { stage: stage.as_str(), section })?;
            Ok(lines.join("\n").trim().to_owned())
        };
        let template = Template { system: take("system")?, user: take("user")?, reminder: take("reminder")? };
        for body in [&template.system, &template.user, &template.reminder] {
            for cap in PLACEHOLDER.captures_iter(body) {
                if !stage.placeholders().contains(&&cap[1]) {
                    return Err(TemplateError::UnknownPlaceholder { stage: stage.as_str(), name: cap[1].to_owned() });
                }
            }
        }
        Ok(template)
    }
}

/// Substitutes `{name}` placeholders in one pass, so inserted values are
/// never re-expanded.
pub(crate) fn render(body: &str, vars: &[(&str, &str)]) -> String {
    PLACEHOLDER
        .replace_all(body, |cap: &regex::Captures| {
            vars.iter().find(|(k, _)| *k == &cap[1]).map(|(_, v)| v.to_string()).unwrap_or_else(|| cap[0].to_owned())
        })
        .into_owned()
}

/// One template per stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    templates: BTreeMap<Stage, Template>,
}

impl PromptTemplates {
    pub fn builtin() -> Self {
        let templates = Stage::ALL
            .iter()
            .map(|&s| (s, Template::parse(s, s.builtin()).expect("built-in template is valid")))
            .collect();
        PromptTemplates { templates }
    }

    /// Built-in templates, overridden by any `<stage>.txt` present in `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let mut out = PromptTemplates::builtin();
        for stage in Stage::ALL {
            let path = dir.as_ref().join(format!("{}.txt", stage.as_str()));
            if !path.exists() {
                continue;
            }
            let source =
                std::fs::read_to_string(&path).map_err(|source| TemplateError::Io { path: path.clone(), source })?;
            out.templates.insert(stage, Template::parse(stage, &source)?);
        }
        Ok(out)
    }

    pub fn get(&self, stage: Stage) -> &Template {
        &self.templates[&stage]
    }
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates::builtin()
    }
}
