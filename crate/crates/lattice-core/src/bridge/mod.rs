//! The bridge to external text generators: prompt assembly, backend
//! invocation, and strict validation (with bounded repair) of what comes
//! back, so nothing unvalidated ever reaches the compiler.
//!
//! Two backends ship: a deterministic rule-based mock used by every offline
//! test and demo, and a remote HTTP adapter configured through
//! `LATTICE_LLM_URL` / `LATTICE_LLM_TOKEN`.

mod mock;
mod prompts;
mod remote;
mod validate;

pub use mock::MockGenerator;
pub use prompts::{
    build_caption_prompt, build_config_prompt, build_layout_prompt, summary_text, CaptionPayload,
    CAPTION_HEIGHTMAP_PROMPT_VERSION, CAPTION_LAYOUT_PROMPT_VERSION, CONFIG_PROMPT_VERSION,
    LAYOUT_PROMPT_VERSION,
};
pub use remote::RemoteGenerator;
pub use validate::{
    validate_config_response, validate_layout_response, Repair, RepairKind,
    DEFAULT_REPAIR_BUDGET,
};

use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, EnvironmentConfig};
use crate::layout::{LayoutError, LayoutMatrix};

#[derive(Debug, thiserror::Error)]
pub enum BridgeError {
    #[error("response is unrepairable: {rows_found} matrix rows found, {cells_touched} cells needed repair (budget {budget_cells})")]
    Unrepairable {
        rows_found: usize,
        cells_touched: usize,
        budget_cells: usize,
    },
    #[error("no JSON object found in response")]
    NoJsonFound,
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("transport error after {attempts} attempt(s): {detail}")]
    Transport { attempts: u32, detail: String },
    #[error("backend returned status {status}: {excerpt}")]
    Backend { status: u16, excerpt: String },
    #[error("remote endpoint not configured: {0}")]
    MissingEndpoint(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTask {
    Layout,
    Config,
    CaptionLayout,
    CaptionHeightmap,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Attachments {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heightmap_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
}

/// A fully assembled prompt: versioned system prompt plus user instruction.
/// Prompt bytes depend only on (template version, inputs), so identical
/// inputs produce identical prompts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub task: PromptTask,
    pub template_version: String,
    pub system_prompt: String,
    pub user_instruction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attachments: Option<Attachments>,
}

/// A validated generator response: the raw text, the typed payload it was
/// validated into, and the repairs applied on the way. The repair log is
/// empty exactly when the extracted content was already well-formed.
#[derive(Clone, Debug)]
pub struct GeneratorResponse {
    pub raw_text: String,
    pub payload: Payload,
    pub repairs: Vec<Repair>,
}

#[derive(Clone, Debug)]
pub enum Payload {
    Layout(LayoutMatrix),
    Config(EnvironmentConfig),
}

impl Payload {
    pub fn as_layout(&self) -> Option<&LayoutMatrix> {
        match self {
            Payload::Layout(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_config(&self) -> Option<&EnvironmentConfig> {
        match self {
            Payload::Config(c) => Some(c),
            _ => None,
        }
    }
}

/// A configured generator backend.
pub enum Backend {
    Mock(MockGenerator),
    Remote(RemoteGenerator),
}

impl Backend {
    pub fn generate(&self, bundle: &PromptBundle) -> Result<String, BridgeError> {
        match self {
            Backend::Mock(g) => g.generate(bundle),
            Backend::Remote(g) => g.generate(bundle),
        }
    }
}

/// Send one prompt to the backend and return the raw response text.
pub fn invoke_generator(bundle: &PromptBundle, backend: &Backend) -> Result<String, BridgeError> {
    backend.generate(bundle)
}
