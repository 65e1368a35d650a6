//! Multi-tape morpheme storage: one character trie per lexical tape.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::featstruct::FeatureCategory;
use crate::rulebase::{LexicalExpr, Term, BOUNDARY};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrieNode {
    pub edges: BTreeMap<String, usize>,
    /// Categories of morphemes ending here. Homographs share a node.
    pub accepts: Vec<FeatureCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trie {
    nodes: Vec<TrieNode>,
}

impl Default for Trie {
    fn default() -> Self {
        Trie {
            nodes: vec![TrieNode::default()],
        }
    }
}

impl Trie {
    pub const ROOT: usize = 0;

    pub fn node(&self, id: usize) -> &TrieNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn step(&self, from: usize, sym: &str) -> Option<usize> {
        self.nodes[from].edges.get(sym).copied()
    }

    pub fn insert(&mut self, symbols: &[String], category: FeatureCategory) {
        let mut cur = Self::ROOT;
        for s in symbols {
            cur = match self.nodes[cur].edges.get(s) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let id = self.nodes.len() - 1;
                    self.nodes[cur].edges.insert(s.clone(), id);
                    id
                }
            };
        }
        if !self.nodes[cur].accepts.contains(&category) {
            self.nodes[cur].accepts.push(category);
        }
    }

    /// Categories accepted after walking `symbols` from the root.
    pub fn lookup(&self, symbols: &[String]) -> &[FeatureCategory] {
        let mut cur = Self::ROOT;
        for s in symbols {
            match self.step(cur, s) {
                Some(n) => cur = n,
                None => return &[],
            }
        }
        &self.nodes[cur].accepts
    }
}

/// A lexical tape is either backed by a trie or free (any symbol of its
/// alphabet, no morphemes, no boundaries).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TapeStore {
    Trie(Trie),
    Free(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("tape {0} does not exist")]
    NoSuchTape(usize),
    #[error("symbol `{symbol}` is not in the alphabet of tape {tape}")]
    NotInAlphabet { tape: usize, symbol: String },
    #[error("empty morpheme")]
    EmptyMorpheme,
    #[error("tape {0} is free and holds no morphemes")]
    FreeTape(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lexicon {
    tapes: Vec<TapeStore>,
    alphabets: Vec<Vec<String>>,
}

/// Current trie node per lexical tape (index 0 is tape 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct LexPointers(pub Vec<usize>);

impl LexPointers {
    pub fn roots(tapes: usize) -> Self {
        LexPointers(vec![Trie::ROOT; tapes])
    }
}

/// Categories found at one boundary event, per tape. Tapes that did not
/// cross a boundary hold `None`.
pub type LexCats = Vec<Option<FeatureCategory>>;

pub fn at_all_roots(ptrs: &LexPointers) -> bool {
    ptrs.0.iter().all(|&p| p == Trie::ROOT)
}

impl Lexicon {
    /// `alphabets[i]` is the alphabet of tape `i + 1`.
    pub fn new(alphabets: Vec<Vec<String>>, free: &[usize]) -> Self {
        let tapes = alphabets
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if free.contains(&(i + 1)) {
                    TapeStore::Free(a.clone())
                } else {
                    TapeStore::Trie(Trie::default())
                }
            })
            .collect();
        Lexicon { tapes, alphabets }
    }

    pub fn tapes(&self) -> usize {
        self.tapes.len()
    }

    pub fn store(&self, tape: usize) -> Option<&TapeStore> {
        tape.checked_sub(1).and_then(|i| self.tapes.get(i))
    }

    pub fn is_free(&self, tape: usize) -> bool {
        matches!(self.store(tape), Some(TapeStore::Free(_)))
    }

    pub fn insert_morpheme(
        &mut self,
        tape: usize,
        symbols: &[String],
        category: FeatureCategory,
    ) -> Result<(), LexiconError> {
        if tape == 0 || tape > self.tapes.len() {
            return Err(LexiconError::NoSuchTape(tape));
        }
        if symbols.is_empty() {
            return Err(LexiconError::EmptyMorpheme);
        }
        let alphabet = &self.alphabets[tape - 1];
        if let Some(bad) = symbols
            .iter()
            .find(|s| *s == BOUNDARY || !alphabet.contains(s))
        {
            return Err(LexiconError::NotInAlphabet {
                tape,
                symbol: bad.clone(),
            });
        }
        match &mut self.tapes[tape - 1] {
            TapeStore::Trie(t) => {
                t.insert(symbols, category);
                Ok(())
            }
            TapeStore::Free(_) => Err(LexiconError::FreeTape(tape)),
        }
    }

    /// Advances one tape by one non-boundary symbol.
    pub fn step(&self, tape: usize, node: usize, sym: &str) -> Option<usize> {
        match self.store(tape)? {
            TapeStore::Trie(t) => t.step(node, sym),
            TapeStore::Free(alpha) => alpha.iter().any(|a| a == sym).then_some(node),
        }
    }

    pub fn accepts(&self, tape: usize, node: usize) -> &[FeatureCategory] {
        match self.store(tape) {
            Some(TapeStore::Trie(t)) => &t.node(node).accepts,
            _ => &[],
        }
    }

    /// Walks the instantiated expression `lex` from `ptrs`.
    ///
    /// A boundary symbol requires an accepting node and resets that tape to
    /// its root. In a step where some tape crosses a boundary, every other
    /// tape must sit at its root and consume nothing. Each result pairs the
    /// new pointers with the categories found (`None` when no boundary was
    /// crossed); homographs yield one result per category combination. An
    /// empty result means there is no transition.
    pub fn lexical_transitions(
        &self,
        lex: &LexicalExpr,
        ptrs: &LexPointers,
    ) -> Vec<(LexPointers, Option<LexCats>)> {
        let n = self.tapes();
        if lex.tapes() != n || ptrs.0.len() != n {
            return Vec::new();
        }
        let mut new_ptrs = ptrs.clone();
        let mut found: Vec<Option<&[FeatureCategory]>> = vec![None; n];
        for (i, tape) in lex.0.iter().enumerate() {
            let t = i + 1;
            let mut node = ptrs.0[i];
            for term in tape {
                let sym = match term {
                    Term::Sym(s) => s,
                    Term::Var(_) => return Vec::new(),
                };
                if sym == BOUNDARY {
                    let acc = self.accepts(t, node);
                    if acc.is_empty() || found[i].is_some() {
                        return Vec::new();
                    }
                    found[i] = Some(acc);
                    node = Trie::ROOT;
                } else {
                    match self.step(t, node, sym) {
                        Some(next) => node = next,
                        None => return Vec::new(),
                    }
                }
            }
            new_ptrs.0[i] = node;
        }
        if found.iter().all(Option::is_none) {
            return vec![(new_ptrs, None)];
        }
        // boundary synchronisation
        for (i, tape) in lex.0.iter().enumerate() {
            if found[i].is_none() && !self.is_free(i + 1) && (!tape.is_empty() || ptrs.0[i] != Trie::ROOT) {
                return Vec::new();
            }
        }
        let mut combos: Vec<LexCats> = vec![Vec::with_capacity(n)];
        for f in &found {
            combos = match f {
                None => combos
                    .into_iter()
                    .map(|mut c| {
                        c.push(None);
                        c
                    })
                    .collect(),
                Some(cats) => combos
                    .iter()
                    .flat_map(|c| {
                        cats.iter().map(move |cat| {
                            let mut c = c.clone();
                            c.push(Some(cat.clone()));
                            c
                        })
                    })
                    .collect(),
            };
        }
        combos
            .into_iter()
            .map(|c| (new_ptrs.clone(), Some(c)))
            .collect()
    }
}
