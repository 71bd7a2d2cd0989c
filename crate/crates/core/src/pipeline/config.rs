use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::llm::{hex, ChatRequest, EndpointConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// On/off switches for the optional stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub merge: bool,
    pub rewrite: bool,
    pub attach_unvisited: bool,
    pub linked: bool,
    pub implicit: bool,
    pub undercut: bool,
    /// Reject edges that would close a cycle.
    pub dag_enforcement: bool,
    pub reduction: bool,
    /// Offer "partial attack" as a third relation label.
    pub partial_attack: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            merge: true,
            rewrite: true,
            attach_unvisited: true,
            linked: true,
            implicit: true,
            undercut: true,
            dag_enforcement: true,
            reduction: true,
            partial_attack: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub temperature: f64,
    pub seed: Option<u64>,
    pub max_output_tokens: u32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { name: "gpt-5-mini".into(), temperature: 0.0, seed: Some(42), max_output_tokens: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub stages: StageToggles,
    pub model: ModelConfig,
    /// Re-asks after an unparseable answer, on top of the first request.
    pub max_parse_retries: u32,
    /// Minimum character-overlap similarity for assigning a source span.
    pub alignment_threshold: f64,
    /// Directory with per-stage template files overriding the built-in ones.
    pub templates_dir: Option<PathBuf>,
    pub endpoint: EndpointConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stages: StageToggles::default(),
            model: ModelConfig::default(),
            max_parse_retries: 2,
            alignment_threshold: 0.8,
            templates_dir: None,
            endpoint: EndpointConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Every stage switched on.
    pub fn full() -> Self {
        PipelineConfig::default()
    }

    /// Mandatory stages only.
    pub fn minimal() -> Self {
        PipelineConfig {
            stages: StageToggles {
                merge: false,
                rewrite: false,
                attach_unvisited: false,
                linked: false,
                implicit: false,
                undercut: false,
                dag_enforcement: true,
                reduction: false,
                partial_attack: false,
            },
            ..PipelineConfig::default()
        }
    }

    /// Setting used against benchmark schemes: mandatory stages plus the
    /// partial-attack label.
    pub fn external() -> Self {
        let mut config = PipelineConfig::minimal();
        config.stages.partial_attack = true;
        config
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "full" | "default" => Some(PipelineConfig::full()),
            "minimal" => Some(PipelineConfig::minimal()),
            "external" => Some(PipelineConfig::external()),
            _ => None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: PipelineConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Loads a TOML config. A relative `templates_dir` is resolved against
    /// the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        let mut config = PipelineConfig::from_toml(&text)?;
        if let (Some(dir), Some(parent)) = (&config.templates_dir, path.parent()) {
            if dir.is_relative() {
                config.templates_dir = Some(parent.join(dir));
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.stages.undercut && !self.stages.dag_enforcement {
            return Err(ConfigError::Invalid("stages.undercut requires stages.dag_enforcement".into()));
        }
        if self.max_parse_retries == 0 || self.max_parse_retries > 10 {
            return Err(ConfigError::Invalid("max_parse_retries must be between 1 and 10".into()));
        }
        if !(0.0..=1.0).contains(&self.alignment_threshold) {
            return Err(ConfigError::Invalid("alignment_threshold must lie in [0, 1]".into()));
        }
        if self.model.temperature.is_nan() || self.model.temperature < 0.0 {
            return Err(ConfigError::Invalid("model.temperature must be >= 0".into()));
        }
        if self.model.max_output_tokens == 0 {
            return Err(ConfigError::Invalid("model.max_output_tokens must be positive".into()));
        }
        if self.model.name.trim().is_empty() {
            return Err(ConfigError::Invalid("model.name must be non-empty".into()));
        }
        Ok(())
    }

    /// SHA-256 over the settings that influence the graph. Endpoint details
    /// and the template location are excluded.
    pub fn digest(&self) -> String {
        let payload =
            serde_json::to_vec(&(&self.stages, &self.model, self.max_parse_retries, self.alignment_threshold))
                .expect("config serializes");
        hex(&Sha256::digest(&payload))
    }

    pub(crate) fn request(&self, system_prompt: String, user_prompt: String) -> ChatRequest {
        ChatRequest {
            system_prompt,
            user_prompt,
            model_name: self.model.name.clone(),
            temperature: self.model.temperature,
            seed: self.model.seed,
            max_output_tokens: self.model.max_output_tokens,
        }
    }
}
