//! Composition of a front grammar with a back grammar that reads the
//! front's surface as its single lexical tape.

use serde::Serialize;

use crate::engine::{AnalysisResult, Engine, EngineError, EngineOptions};
use crate::grammario::{check_cascade, GrammarSnapshot};

pub const DEFAULT_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CascadeError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("cascade: {0}")]
    Alphabet(String),
    #[error("cascade: more than {cap} intermediate forms")]
    Overflow { cap: usize },
}

/// One result through both stages; `front` carries the lexical tapes and
/// `back` the final surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeResult {
    pub intermediate: String,
    pub front: AnalysisResult,
    pub back: AnalysisResult,
}

impl CascadeResult {
    pub fn surface_string(&self) -> String {
        self.back.surface_string()
    }

    pub fn lexical_strings(&self) -> Vec<String> {
        self.front.lexical_strings()
    }
}

pub struct Cascade<'g> {
    front: Engine<'g>,
    back: Engine<'g>,
    pub cap: usize,
}

fn push_distinct(seen: &mut Vec<Vec<String>>, form: &[String], cap: usize) -> Result<bool, CascadeError> {
    if seen.iter().any(|s| s == form) {
        return Ok(false);
    }
    if seen.len() == cap {
        return Err(CascadeError::Overflow { cap });
    }
    seen.push(form.to_vec());
    Ok(true)
}

impl<'g> Cascade<'g> {
    pub fn new(front: &'g GrammarSnapshot, back: &'g GrammarSnapshot) -> Result<Self, CascadeError> {
        Self::with_options(front, back, EngineOptions::default())
    }

    pub fn with_options(
        front: &'g GrammarSnapshot,
        back: &'g GrammarSnapshot,
        options: EngineOptions,
    ) -> Result<Self, CascadeError> {
        check_cascade(front, back).map_err(CascadeError::Alphabet)?;
        Ok(Cascade {
            front: Engine::with_options(front, options.clone()),
            back: Engine::with_options(back, options),
            cap: DEFAULT_CAP,
        })
    }

    /// Front generation, then back generation on each distinct front surface.
    pub fn generate(&self, lexical: &[&str]) -> Result<Vec<CascadeResult>, CascadeError> {
        let mut seen = Vec::new();
        let mut out = Vec::new();
        for f in self.front.generate(lexical)? {
            if !push_distinct(&mut seen, &f.surface, self.cap)? {
                continue;
            }
            let tape = [f.surface.clone()];
            for b in self.back.two_level_analysis(None, Some(&tape))? {
                out.push(CascadeResult {
                    intermediate: f.surface_string(),
                    front: f.clone(),
                    back: b,
                });
            }
        }
        Ok(out)
    }

    /// Back analysis, then front analysis of each distinct intermediate.
    pub fn analyze(&self, surface: &str) -> Result<Vec<CascadeResult>, CascadeError> {
        let mut seen = Vec::new();
        let mut out = Vec::new();
        for b in self.back.analyze(surface)? {
            let mid = b.lexical[0].clone();
            if !push_distinct(&mut seen, &mid, self.cap)? {
                continue;
            }
            for f in self.front.two_level_analysis(Some(&mid), None)? {
                out.push(CascadeResult {
                    intermediate: mid.concat(),
                    front: f,
                    back: b.clone(),
                });
            }
        }
        Ok(out)
    }
}
