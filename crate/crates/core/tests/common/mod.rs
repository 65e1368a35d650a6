#![allow(dead_code)]

pub mod oracle;
pub mod props;

use std::path::PathBuf;

use twolevel::engine::{AnalysisResult, Engine};
use twolevel::grammario::{load_file, GrammarSnapshot, Loaded};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn grammar(name: &str) -> GrammarSnapshot {
    match load_file(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}")) {
        Loaded::Single(g) => g,
        Loaded::Cascade { .. } => panic!("{name} is a cascade"),
    }
}

pub fn analyze(g: &GrammarSnapshot, surface: &str) -> Vec<AnalysisResult> {
    Engine::new(g).analyze(surface).unwrap().collect()
}

pub fn generate(g: &GrammarSnapshot, lex: &[&str]) -> Vec<AnalysisResult> {
    Engine::new(g).generate(lex).unwrap().collect()
}

pub fn surfaces(rs: &[AnalysisResult]) -> Vec<String> {
    let mut s: Vec<String> = rs.iter().map(|r| r.surface_string()).collect();
    s.sort();
    s.dedup();
    s
}
