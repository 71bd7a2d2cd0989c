//! Reconstruction of argument graphs from natural-language text and
//! evaluation of reconstructed graphs against gold annotations.

pub mod corpus;
pub mod diagram;
pub mod eval;
pub mod graph;
pub mod llm;
pub mod pipeline;
pub mod text;
