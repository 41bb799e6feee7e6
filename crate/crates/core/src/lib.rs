//! Testbed for measuring how JavaScript obfuscation shifts the accuracy
//! of fingerprinting-script detection.
//!
//! The pipeline: generate or ingest a labeled script corpus, obfuscate
//! each script with seeded transform profiles, execute originals and
//! variants in a deterministic sandbox with stubbed browser APIs, train
//! static (AST-feature) and dynamic (trace-feature) decision trees,
//! classify both groups, and report per-obfuscator confusion matrices,
//! verdict flips, and AST size deltas. A small intercepting proxy serves
//! obfuscated replacements for mapped script URLs.

pub mod ast;
pub mod detect;
pub mod harness;
pub mod lexer;
pub mod obfuscate;
pub mod parser;
pub mod printer;
pub mod rng;
pub mod sandbox;
pub mod script;
