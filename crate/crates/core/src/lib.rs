//! Multi-agent content moderation: a tiered debate between a strict and a
//! loose moderator, settled by an arbiter and grounded in a case library that
//! grows from past failures.

pub mod arbiter;
pub mod clock;
pub mod config;
pub mod curator;
pub mod debate;
pub mod eval;
pub mod jsonl;
pub mod library;
pub mod log_store;
pub mod model;
pub mod pipeline;
pub mod preprocessor;
pub mod prompts;
pub mod provider;
pub mod sections;
pub mod supporter;
