//! Turning a parsed source into a ready-to-run grammar snapshot.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::featstruct::FeatureCategory;
use crate::lexicon::Lexicon;
use crate::rulebase::{
    expand_rule, Alphabet, ExpansionRule, RuleBase, RuleError, Term, TwoLevelRule, VariableSet,
    BOUNDARY,
};
use crate::wordgrammar::{SynRule, WordGrammar};

use super::print;
use super::syntax::{parse_grammar, Diagnostic, GrammarSource, Item, Morpheme, Pos};

/// One or more diagnostics explaining why a grammar could not be loaded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
pub struct LoadError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.diagnostics.iter().map(ToString::to_string).collect();
        f.write_str(&lines.join("\n"))
    }
}

impl From<Diagnostic> for LoadError {
    fn from(d: Diagnostic) -> Self {
        LoadError {
            diagnostics: vec![d],
        }
    }
}

/// A lexicon entry after tokenisation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Word {
    pub tape: usize,
    pub symbols: Vec<String>,
    pub category: FeatureCategory,
}

/// An immutable, fully validated grammar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrammarSnapshot {
    /// Number of lexical tapes.
    pub tapes: usize,
    /// Alphabets of tapes 0 (surface) to `tapes`.
    pub alphabets: Vec<Alphabet>,
    pub sets: BTreeMap<String, VariableSet>,
    pub expansions: Vec<ExpansionRule>,
    pub rules: RuleBase,
    pub lexicon: Lexicon,
    pub grammar: WordGrammar,
    pub words: Vec<Word>,
    pub tape_of: BTreeMap<String, usize>,
    pub free: Vec<usize>,
    pub declared_starts: BTreeSet<String>,
}

impl GrammarSnapshot {
    /// Returns a copy with rule `id` switched on or off. An expanded
    /// schema id switches all its expansions.
    pub fn toggle_rule(&self, id: &str, enabled: bool) -> Result<GrammarSnapshot, RuleError> {
        let ids: Vec<String> = self
            .rules
            .compiled(crate::rulebase::Direction::Analysis)
            .iter()
            .filter(|r| r.id == id || r.origin.as_deref() == Some(id))
            .map(|r| r.id.clone())
            .collect();
        if ids.is_empty() {
            return Err(RuleError::UnknownRule(id.to_string()));
        }
        let mut out = self.clone();
        for rid in ids {
            out.rules = out.rules.toggle_rule(&rid, enabled)?;
        }
        Ok(out)
    }

    /// Rules in source order, written orientation.
    pub fn source_rules(&self) -> &[TwoLevelRule] {
        self.rules.compiled(crate::rulebase::Direction::Analysis)
    }

    pub fn surface_alphabet(&self) -> &[String] {
        &self.alphabets[0].symbols
    }
}

/// Either a single grammar or a two-stage cascade.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Loaded {
    Single(GrammarSnapshot),
    Cascade {
        front: GrammarSnapshot,
        back: GrammarSnapshot,
    },
}

/// Splits `text` into alphabet symbols, longest match first.
fn tokenize_morpheme(text: &str, alphabet: &[String]) -> Option<Vec<String>> {
    let mut by_len: Vec<&String> = alphabet.iter().filter(|s| !s.is_empty()).collect();
    by_len.sort_by_key(|s| std::cmp::Reverse(s.len()));
    let mut out = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let sym = by_len.iter().find(|s| rest.starts_with(s.as_str()))?;
        out.push((*sym).clone());
        rest = &rest[sym.len()..];
    }
    Some(out)
}

struct Checker<'a> {
    diags: Vec<Diagnostic>,
    alphabets: &'a [Alphabet],
    sets: &'a BTreeMap<String, VariableSet>,
}

impl Checker<'_> {
    fn check_rule(&mut self, r: &TwoLevelRule, pos: Pos, tapes: usize) {
        let id = &r.id;
        let bad = |d: &mut Vec<Diagnostic>, msg: String| d.push(Diagnostic::at(pos, msg));
        for (field, e) in [("llc", &r.llc), ("lex", &r.lex), ("rlc", &r.rlc)] {
            if e.tapes() != tapes {
                bad(
                    &mut self.diags,
                    format!("rule {id}: {field} has {} tapes, expected {tapes}", e.tapes()),
                );
                return;
            }
            for (i, tape) in e.0.iter().enumerate() {
                for t in tape {
                    if let Term::Sym(s) = t {
                        if s != BOUNDARY && !self.alphabets[i + 1].contains(s) {
                            bad(
                                &mut self.diags,
                                format!("rule {id}: `{s}` is not in the alphabet of tape {}", i + 1),
                            );
                        }
                    }
                }
            }
        }
        if r.lex.is_empty() && r.surf.is_empty() {
            bad(
                &mut self.diags,
                format!("rule {id}: every lexical tape and the surface centre are empty"),
            );
        }
        if r.features.len() != tapes {
            bad(
                &mut self.diags,
                format!("rule {id}: features list has {} entries, expected {tapes}", r.features.len()),
            );
        }
        for e in [&r.lsc, &r.surf, &r.rsc] {
            for t in &e.0 {
                if let Term::Sym(s) = t {
                    if !self.alphabets[0].contains(s) {
                        bad(
                            &mut self.diags,
                            format!("rule {id}: `{s}` is not in the surface alphabet"),
                        );
                    }
                }
            }
        }
        for c in &r.variables {
            if !self.sets.contains_key(&c.set) {
                bad(&mut self.diags, format!("rule {id}: unknown set `{}`", c.set));
            }
        }
        for v in r.expression_variables() {
            let n = r.variables.iter().filter(|c| c.var == v).count();
            if n != 1 {
                bad(
                    &mut self.diags,
                    format!("rule {id}: variable {v} needs exactly one set constraint, found {n}"),
                );
            }
        }
    }
}

/// Validates and compiles a parsed source. `include` and `cascade`
/// clauses must already have been resolved (see [`load_file`]).
pub fn load(src: &GrammarSource) -> Result<GrammarSnapshot, LoadError> {
    let mut diags = Vec::new();
    let mut alpha_map: BTreeMap<usize, (Vec<String>, Pos)> = BTreeMap::new();
    let mut sets = BTreeMap::new();
    let mut expansions = Vec::new();
    let mut expand_ids = BTreeSet::new();
    let mut tape_of = BTreeMap::new();
    let mut free = Vec::new();
    let mut starts = BTreeSet::new();

    for (item, pos) in src.iter() {
        match item {
            Item::Alphabet { tape, symbols } => {
                if alpha_map.insert(*tape, (symbols.clone(), pos)).is_some() {
                    diags.push(Diagnostic::at(pos, format!("alphabet of tape {tape} declared twice")));
                }
                if *tape == 0 && symbols.iter().any(|s| s == BOUNDARY) {
                    diags.push(Diagnostic::at(pos, "the boundary cannot be a surface symbol"));
                }
            }
            Item::Set { id, members } => {
                if members.is_empty() {
                    diags.push(Diagnostic::at(pos, format!("set {id} is empty")));
                }
                let set = VariableSet {
                    id: id.clone(),
                    members: members.clone(),
                };
                if sets.insert(id.clone(), set).is_some() {
                    diags.push(Diagnostic::at(pos, format!("set {id} declared twice")));
                }
            }
            Item::Expansion(e) => expansions.push(e.clone()),
            Item::Expand(id) => {
                expand_ids.insert(id.clone());
            }
            Item::TapeOf { symbol, tape } => {
                tape_of.insert(symbol.clone(), *tape);
            }
            Item::FreeTape(n) => free.push(*n),
            Item::Start(s) => {
                starts.insert(s.clone());
            }
            Item::Include(p) => diags.push(Diagnostic::at(pos, format!("unresolved include `{p}`"))),
            Item::Cascade { .. } => {
                diags.push(Diagnostic::at(pos, "cascade clauses are only allowed in grammar files"))
            }
            Item::Rule(_) | Item::Word { .. } | Item::SynRule { .. } => {}
        }
    }

    let tapes = alpha_map.keys().next_back().copied().unwrap_or(0);
    let mut alphabets = Vec::new();
    for t in 0..=tapes {
        match alpha_map.get(&t) {
            Some((symbols, _)) => alphabets.push(Alphabet {
                tape: t,
                symbols: symbols.clone(),
            }),
            None => {
                diags.push(Diagnostic::new(format!("no alphabet declared for tape {t}")));
                alphabets.push(Alphabet {
                    tape: t,
                    symbols: Vec::new(),
                });
            }
        }
    }
    if tapes == 0 {
        diags.push(Diagnostic::new("at least one lexical tape alphabet is required"));
    }
    for &n in &free {
        if n == 0 || n > tapes {
            diags.push(Diagnostic::new(format!("free_tape({n}) names no lexical tape")));
        }
    }
    for (sym, &t) in &tape_of {
        if t == 0 || t > tapes {
            diags.push(Diagnostic::new(format!("tape_of({sym}, {t}) names no lexical tape")));
        }
    }
    if !diags.is_empty() {
        return Err(LoadError { diagnostics: diags });
    }

    // rules
    let mut rules: Vec<TwoLevelRule> = Vec::new();
    let mut rule_pos = Vec::new();
    let mut seen_templates = BTreeSet::new();
    let mut checker = Checker {
        diags: Vec::new(),
        alphabets: &alphabets,
        sets: &sets,
    };
    for (item, pos) in src.iter() {
        let Item::Rule(t) = item else { continue };
        seen_templates.insert(t.id.clone());
        let made = if expand_ids.contains(&t.id) {
            expand_rule(t, &expansions, tapes)
        } else {
            t.to_rule(tapes).map(|r| vec![r])
        };
        match made {
            Ok(rs) => {
                for r in rs {
                    checker.check_rule(&r, pos, tapes);
                    rule_pos.push(pos);
                    rules.push(r);
                }
            }
            Err(e) => checker.diags.push(Diagnostic::at(pos, e.to_string())),
        }
    }
    let mut diags = checker.diags;
    for id in &expand_ids {
        if !seen_templates.contains(id) {
            diags.push(Diagnostic::new(format!("expand({id}) names no rule")));
        }
    }
    let mut ids = BTreeSet::new();
    for (r, pos) in rules.iter().zip(&rule_pos) {
        if !ids.insert(r.id.clone()) {
            diags.push(Diagnostic::at(*pos, format!("rule id {} used twice", r.id)));
        }
    }

    // lexicon
    let free_alphas: Vec<Vec<String>> = alphabets[1..].iter().map(|a| a.symbols.clone()).collect();
    let mut lexicon = Lexicon::new(free_alphas, &free);
    let mut words = Vec::new();
    let mut lexical_syms = BTreeSet::new();
    for (item, pos) in src.iter() {
        let Item::Word { morpheme, category } = item else {
            continue;
        };
        let tape = match tape_of.get(&category.symbol) {
            Some(&t) => t,
            None if tapes == 1 => 1,
            None => {
                diags.push(Diagnostic::at(
                    pos,
                    format!("no tape_of declaration for category {}", category.symbol),
                ));
                continue;
            }
        };
        let symbols = match morpheme {
            Morpheme::List(l) => l.clone(),
            Morpheme::Atom(a) => match tokenize_morpheme(a, &alphabets[tape].symbols) {
                Some(s) => s,
                None => {
                    diags.push(Diagnostic::at(
                        pos,
                        format!("morpheme `{a}` cannot be spelled with the alphabet of tape {tape}"),
                    ));
                    continue;
                }
            },
        };
        if let Err(e) = lexicon.insert_morpheme(tape, &symbols, category.clone()) {
            diags.push(Diagnostic::at(pos, format!("morpheme `{}`: {e}", symbols.concat())));
            continue;
        }
        lexical_syms.insert(category.symbol.clone());
        words.push(Word {
            tape,
            symbols,
            category: category.clone(),
        });
    }

    // word grammar
    let syn: Vec<SynRule> = src
        .items
        .iter()
        .filter_map(|i| match i {
            Item::SynRule { id, mother, daughters } => Some(SynRule {
                id: id.clone(),
                mother: mother.clone(),
                daughters: daughters.clone(),
            }),
            _ => None,
        })
        .collect();
    let grammar = match WordGrammar::new(syn, &lexical_syms, &starts) {
        Ok(g) => Some(g),
        Err(e) => {
            diags.push(Diagnostic::new(e.to_string()));
            None
        }
    };
    // Rule errors are already reported with positions above.
    let rulebase = match RuleBase::new(&rules) {
        Ok(rb) => Some(rb),
        Err(e) => {
            if diags.is_empty() {
                diags.push(Diagnostic::new(e.to_string()));
            }
            None
        }
    };
    if !diags.is_empty() {
        return Err(LoadError { diagnostics: diags });
    }
    Ok(GrammarSnapshot {
        tapes,
        alphabets,
        sets,
        expansions,
        rules: rulebase.expect("checked"),
        lexicon,
        grammar: grammar.expect("checked"),
        words,
        tape_of,
        free,
        declared_starts: starts,
    })
}

/// Parses and loads grammar text.
pub fn load_str(text: &str) -> Result<GrammarSnapshot, LoadError> {
    load(&parse_grammar(text)?)
}

fn read_source(path: &Path, depth: usize) -> Result<GrammarSource, LoadError> {
    if depth > 16 {
        return Err(Diagnostic::new(format!("{}: includes nested too deeply", path.display())).into());
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Diagnostic::new(format!("{}: {e}", path.display())))?;
    let src = parse_grammar(&text).map_err(|d| {
        d.in_file(path)
    })?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut out = GrammarSource::default();
    for (item, pos) in src.iter() {
        match item {
            Item::Include(p) => {
                let inner = read_source(&dir.join(p), depth + 1)?;
                out.items.extend(inner.items);
                out.positions.extend(inner.positions);
            }
            Item::Cascade { front, back } => {
                out.items.push(Item::Cascade {
                    front: dir.join(front).to_string_lossy().into_owned(),
                    back: dir.join(back).to_string_lossy().into_owned(),
                });
                out.positions.push(pos);
            }
            other => {
                out.items.push(other.clone());
                out.positions.push(pos);
            }
        }
    }
    Ok(out)
}

/// Reads a grammar file with its includes resolved relative to it.
pub fn read_grammar_file(path: impl AsRef<Path>) -> Result<GrammarSource, LoadError> {
    read_source(path.as_ref(), 0)
}

fn with_path(path: &Path, e: LoadError) -> LoadError {
    LoadError {
        diagnostics: e
            .diagnostics
            .into_iter()
            .map(|d| d.in_file(path))
            .collect(),
    }
}

/// A back stage reads the front stage's surface as its only lexical tape.
pub fn check_cascade(front: &GrammarSnapshot, back: &GrammarSnapshot) -> Result<(), String> {
    if back.tapes != 1 {
        return Err(format!("the back grammar has {} lexical tapes, expected 1", back.tapes));
    }
    let surface: BTreeSet<&String> = front.surface_alphabet().iter().collect();
    let lexical: BTreeSet<&String> = back.alphabets[1]
        .symbols
        .iter()
        .filter(|s| *s != BOUNDARY)
        .collect();
    if surface != lexical {
        return Err("the front surface alphabet differs from the back lexical alphabet".into());
    }
    Ok(())
}

/// Loads a grammar file. A file whose only clause is `cascade(F, B)`
/// yields the two stages.
pub fn load_file(path: impl AsRef<Path>) -> Result<Loaded, LoadError> {
    let path = path.as_ref();
    let src = read_grammar_file(path)?;
    let cascades: Vec<(String, String)> = src
        .items
        .iter()
        .filter_map(|i| match i {
            Item::Cascade { front, back } => Some((front.clone(), back.clone())),
            _ => None,
        })
        .collect();
    match cascades.as_slice() {
        [] => load(&src).map(Loaded::Single).map_err(|e| with_path(path, e)),
        [(front, back)] if src.items.len() == 1 => {
            let stage = |p: &str| -> Result<GrammarSnapshot, LoadError> {
                let pb = PathBuf::from(p);
                match load_file(&pb)? {
                    Loaded::Single(g) => Ok(g),
                    Loaded::Cascade { .. } => Err(Diagnostic::new(format!(
                        "{p}: a cascade stage cannot itself be a cascade"
                    ))
                    .into()),
                }
            };
            let (front, back) = (stage(front)?, stage(back)?);
            check_cascade(&front, &back)
                .map_err(|m| LoadError::from(Diagnostic::new(m).in_file(path)))?;
            Ok(Loaded::Cascade { front, back })
        }
        _ => Err(Diagnostic::new(format!(
            "{}: a cascade file holds exactly one cascade clause and nothing else",
            path.display()
        ))
        .into()),
    }
}

/// Canonical text of a loaded grammar. Expanded rules appear concretely,
/// each preceded by a comment naming its schema.
pub fn print_snapshot(g: &GrammarSnapshot) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    for a in &g.alphabets {
        line(print::print_item(&Item::Alphabet {
            tape: a.tape,
            symbols: a.symbols.clone(),
        }));
    }
    for s in g.sets.values() {
        line(print::print_item(&Item::Set {
            id: s.id.clone(),
            members: s.members.clone(),
        }));
    }
    for (sym, &tape) in &g.tape_of {
        line(print::print_item(&Item::TapeOf {
            symbol: sym.clone(),
            tape,
        }));
    }
    for &n in &g.free {
        line(print::print_item(&Item::FreeTape(n)));
    }
    for s in &g.declared_starts {
        line(print::print_item(&Item::Start(s.clone())));
    }
    for e in &g.expansions {
        line(print::print_expansion(e));
    }
    for r in g.source_rules() {
        if let Some(o) = &r.origin {
            line(format!("% expanded from {o}"));
        }
        line(print::rule(r));
    }
    for w in &g.words {
        line(print::print_word(&w.symbols, &w.category));
    }
    for r in &g.grammar.rules {
        line(print::print_item(&Item::SynRule {
            id: r.id.clone(),
            mother: r.mother.clone(),
            daughters: r.daughters.clone(),
        }));
    }
    out
}
