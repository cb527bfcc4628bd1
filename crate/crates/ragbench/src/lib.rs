//! Comparative retrieval-augmented generation benchmarking engine.
//!
//! The crate is organised as a pipeline: [`corpus`] loads documents,
//! [`chunking`] splits them, [`embedding`] turns chunks into vectors,
//! [`vector_index`] stores and searches them, [`retrieval`] ranks results,
//! [`generation`] assembles prompts and produces answers, [`evaluation`]
//! scores those answers, and [`runner`] orchestrates complete experiments
//! described by a config file.

pub mod binfmt;
pub mod chunking;
pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod evaluation;
pub mod generation;
pub mod http;
pub mod retrieval;
pub mod runner;
pub mod tokenize;
pub mod vector_index;
