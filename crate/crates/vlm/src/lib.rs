//! Multimodal prompt composition and VLM backends.
//!
//! [`build_prompt`] turns a rendered plot (plus optional neighbor context and
//! dataset metadata) into a [`PromptBundle`]. [`VlmClient`] sends bundles to
//! an OpenAI-compatible chat-completions endpoint; [`mock_vlm_respond`] is a
//! deterministic stand-in that verbalizes the weighted KNN decision.

mod client;
mod error;
mod mock;
mod prompt;

pub use client::{EndpointConfig, RawResponse, TokenUsage, VlmClient};
pub use error::VlmError;
pub use mock::mock_vlm_respond;
pub use prompt::{
    build_prompt, build_prompt_with, metadata_paragraph, PromptBundle, PromptMode, PromptTemplate,
};
