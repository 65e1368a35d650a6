//! The two-level interpreter: partition search, coercion by obligatory
//! rules, and the analysis/generation driver.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::featstruct::{unify_category, Bindings, FeatureCategory, FeatureValue};
use crate::grammario::GrammarSnapshot;
use crate::lexicon::{at_all_roots, LexCats, LexPointers};
use crate::rulebase::{
    Direction, LexicalExpr, Operator, RuleBase, Term, TwoLevelRule, VariableSet, BOUNDARY,
};
use crate::wordgrammar::{Leaf, NextCats, ParseTree};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("exactly one of the surface and lexical sides must be given")]
    Usage,
    #[error("expected {expected} lexical strings, got {found}")]
    TapeCount { expected: usize, found: usize },
    #[error("`{input}` cannot be spelled with the alphabet of tape {tape}")]
    Spelling { tape: usize, input: String },
}

/// Order in which rules are tried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RuleOrder {
    /// Most specific rules first, per direction.
    #[default]
    Precedence,
    Source,
}

#[derive(Debug, Clone, Default)]
pub struct EngineOptions {
    pub order: RuleOrder,
    pub trace: bool,
    /// Maximum number of partition steps; defaults to 4 × input + 16.
    pub max_steps: Option<usize>,
}

/// One rule application in a partition. Contexts hold the whole material
/// before and after the centre, in reading order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionStep {
    pub rule_id: String,
    pub lsc: Vec<String>,
    pub surf: Vec<String>,
    pub rsc: Vec<String>,
    pub llc: Vec<Vec<String>>,
    pub lex: Vec<Vec<String>>,
    pub rlc: Vec<Vec<String>>,
    /// Categories found when this step crossed a boundary.
    pub lex_cats: Option<LexCats>,
}

/// `Id/Surf/Lex` triple kept after coercion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Pairing {
    pub rule_id: String,
    pub surf: Vec<String>,
    pub lex: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisResult {
    pub surface: Vec<String>,
    /// Lexical symbols per tape, boundaries included.
    pub lexical: Vec<Vec<String>>,
    pub partition: Vec<PartitionStep>,
    pub pairings: Vec<Pairing>,
    /// Morphemes in the order found, with resolved categories.
    pub morphemes: Vec<Leaf>,
    /// `None` when the grammar has no word grammar.
    pub parse: Option<ParseTree>,
    pub bindings: BTreeMap<String, FeatureValue>,
}

impl AnalysisResult {
    pub fn surface_string(&self) -> String {
        self.surface.concat()
    }

    pub fn lexical_string(&self, tape: usize) -> String {
        self.lexical[tape - 1].concat()
    }

    pub fn lexical_strings(&self) -> Vec<String> {
        self.lexical.iter().map(|t| t.concat()).collect()
    }

    pub fn rule_ids(&self) -> Vec<&str> {
        self.partition.iter().map(|s| s.rule_id.as_str()).collect()
    }

    /// First morpheme whose category has `symbol`.
    pub fn morpheme(&self, symbol: &str) -> Option<&Leaf> {
        self.morphemes.iter().find(|m| m.category.symbol == symbol)
    }
}

impl fmt::Display for AnalysisResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} <- {}",
            self.surface_string(),
            self.lexical_strings().join(" / ")
        )?;
        for m in &self.morphemes {
            write!(f, "\n  {} {}", m.morpheme, m.category)?;
        }
        if let Some(p) = &self.parse {
            write!(f, "\n  {}", p.bracketed())?;
        }
        Ok(())
    }
}

type Local = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Slot {
    Known(String),
    OneOf(Vec<String>),
}

impl Slot {
    fn known(&self) -> Option<&str> {
        match self {
            Slot::Known(s) => Some(s),
            Slot::OneOf(_) => None,
        }
    }
}

/// Consumed material plus pending material. On a closed tape `todo` is the
/// rest of the input; on an open tape it holds only what right contexts
/// have committed so far.
#[derive(Debug, Clone)]
struct Tape {
    done: Vec<String>,
    todo: Vec<Slot>,
    open: bool,
}

impl Tape {
    fn closed(symbols: &[String]) -> Self {
        Tape {
            done: Vec::new(),
            todo: symbols.iter().cloned().map(Slot::Known).collect(),
            open: false,
        }
    }

    fn open() -> Self {
        Tape {
            done: Vec::new(),
            todo: Vec::new(),
            open: true,
        }
    }
}

#[derive(Debug, Clone)]
struct StepRec {
    rule_id: String,
    surf: (usize, usize),
    lex: Vec<(usize, usize)>,
    cats: Option<LexCats>,
}

#[derive(Debug, Clone)]
struct State {
    surf: Tape,
    lex: Vec<Tape>,
    ptrs: LexPointers,
    next: NextCats,
    features: Vec<(usize, FeatureCategory)>,
    leaves: Vec<Leaf>,
    morph_start: Vec<usize>,
    binds: Bindings,
    steps: Vec<StepRec>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Unbound variables are enumerated and bound.
    Centre,
    /// Unbound variables against unknown material only narrow it.
    Context,
}

fn domain<'s>(
    rule: &TwoLevelRule,
    sets: &'s BTreeMap<String, VariableSet>,
    var: &str,
) -> Option<&'s [String]> {
    rule.set_of(var)
        .and_then(|s| sets.get(s))
        .map(|s| s.members.as_slice())
}

fn sets_hold(rule: &TwoLevelRule, sets: &BTreeMap<String, VariableSet>, local: &Local) -> bool {
    local
        .iter()
        .all(|(v, s)| domain(rule, sets, v).is_none_or(|d| d.contains(s)))
}

/// Matches a reversed left context against consumed history.
fn match_back(pattern: &[Term], done: &[String], local: &mut Local) -> bool {
    if pattern.len() > done.len() {
        return false;
    }
    for (i, t) in pattern.iter().enumerate() {
        let s = &done[done.len() - 1 - i];
        match t {
            Term::Sym(x) => {
                if x != s {
                    return false;
                }
            }
            Term::Var(v) => match local.get(v) {
                Some(b) if b != s => return false,
                Some(_) => {}
                None => {
                    local.insert(v.clone(), s.clone());
                }
            },
        }
    }
    true
}

struct Matcher<'a> {
    rule: &'a TwoLevelRule,
    sets: &'a BTreeMap<String, VariableSet>,
    /// Symbols that may be emitted on an open tape; `None` allows any.
    alphabet: Option<&'a [String]>,
    open: bool,
    mode: Mode,
}

impl Matcher<'_> {
    fn emit_ok(&self, s: &str) -> bool {
        self.alphabet.is_none_or(|a| a.iter().any(|x| x == s))
    }

    /// All ways `terms` fit `todo` from position `start`; yields the
    /// extended bindings and the updated pending material.
    fn run(&self, terms: &[Term], start: usize, local: Local, todo: Vec<Slot>) -> Vec<(Local, Vec<Slot>)> {
        let mut out = Vec::new();
        self.go(terms, 0, start, local, todo, &mut out);
        out
    }

    fn put(todo: &mut Vec<Slot>, p: usize, slot: Slot) {
        if p < todo.len() {
            todo[p] = slot;
        } else {
            todo.push(slot);
        }
    }

    fn go(
        &self,
        terms: &[Term],
        i: usize,
        start: usize,
        local: Local,
        todo: Vec<Slot>,
        out: &mut Vec<(Local, Vec<Slot>)>,
    ) {
        if i == terms.len() {
            out.push((local, todo));
            return;
        }
        let p = start + i;
        let slot = todo.get(p).cloned();
        if slot.is_none() && !self.open {
            return;
        }
        let fixed = match &terms[i] {
            Term::Sym(s) => Some(s.clone()),
            Term::Var(v) => local.get(v).cloned(),
        };
        if let Some(s) = fixed {
            let ok = match &slot {
                None => self.emit_ok(&s),
                Some(Slot::Known(k)) => *k == s,
                Some(Slot::OneOf(set)) => set.contains(&s),
            };
            if ok {
                let mut t = todo;
                Self::put(&mut t, p, Slot::Known(s));
                self.go(terms, i + 1, start, local, t, out);
            }
            return;
        }
        let Term::Var(v) = &terms[i] else { unreachable!() };
        let dom = domain(self.rule, self.sets, v);
        let narrowed = |set: &[String]| -> Vec<String> {
            match dom {
                Some(d) => d.iter().filter(|x| set.contains(x)).cloned().collect(),
                None => set.to_vec(),
            }
        };
        match (self.mode, slot) {
            (_, Some(Slot::Known(k))) => {
                let mut l = local;
                l.insert(v.clone(), k);
                self.go(terms, i + 1, start, l, todo, out);
            }
            (Mode::Centre, Some(Slot::OneOf(set))) => {
                for c in narrowed(&set) {
                    let mut l = local.clone();
                    l.insert(v.clone(), c.clone());
                    let mut t = todo.clone();
                    Self::put(&mut t, p, Slot::Known(c));
                    self.go(terms, i + 1, start, l, t, out);
                }
            }
            (Mode::Centre, None) => {
                let Some(d) = dom else { return };
                for c in d.iter().filter(|c| self.emit_ok(c)) {
                    let mut l = local.clone();
                    l.insert(v.clone(), c.clone());
                    let mut t = todo.clone();
                    Self::put(&mut t, p, Slot::Known(c.clone()));
                    self.go(terms, i + 1, start, l, t, out);
                }
            }
            (Mode::Context, Some(Slot::OneOf(set))) => {
                let n = narrowed(&set);
                if !n.is_empty() {
                    let mut t = todo;
                    Self::put(&mut t, p, Slot::OneOf(n));
                    self.go(terms, i + 1, start, local, t, out);
                }
            }
            (Mode::Context, None) => {
                let Some(d) = dom else { return };
                let n: Vec<String> = d.iter().filter(|c| self.emit_ok(c)).cloned().collect();
                if !n.is_empty() {
                    let mut t = todo;
                    Self::put(&mut t, p, Slot::OneOf(n));
                    self.go(terms, i + 1, start, local, t, out);
                }
            }
        }
    }
}

fn ground(symbols: &[String]) -> Vec<Slot> {
    symbols.iter().cloned().map(Slot::Known).collect()
}

/// Finds an enabled obligatory rule that matches the step's lexical centre
/// and all its contexts but cannot produce the step's surface centre, and
/// whose features unify with `cats`. Returns its id.
pub fn invalid_partition(
    rules: &RuleBase,
    sets: &BTreeMap<String, VariableSet>,
    step: &PartitionStep,
    cats: Option<&LexCats>,
) -> Option<String> {
    rules
        .compiled(Direction::Analysis)
        .iter()
        .filter(|r| r.enabled && r.op == Operator::Obligatory)
        .find(|r| violates(r, sets, step, cats))
        .map(|r| r.id.clone())
}

fn violates(
    rule: &TwoLevelRule,
    sets: &BTreeMap<String, VariableSet>,
    step: &PartitionStep,
    cats: Option<&LexCats>,
) -> bool {
    let n = rule.lex.tapes();
    if step.lex.len() != n {
        return false;
    }
    let exact = |m: &Matcher, terms: &[Term], sym: &[String], local: Local| -> Vec<Local> {
        if terms.len() != sym.len() {
            return Vec::new();
        }
        m.run(terms, 0, local, ground(sym))
            .into_iter()
            .map(|(l, _)| l)
            .collect()
    };
    let m = |mode| Matcher {
        rule,
        sets,
        alphabet: None,
        open: false,
        mode,
    };
    let ctx = m(Mode::Context);
    let mut locals = vec![Local::new()];
    for i in 0..n {
        locals = locals
            .into_iter()
            .flat_map(|l| exact(&ctx, &rule.lex.0[i], &step.lex[i], l))
            .filter_map(|mut l| match_back(&rule.llc.0[i], &step.llc[i], &mut l).then_some(l))
            .flat_map(|l| ctx.run(&rule.rlc.0[i], 0, l, ground(&step.rlc[i])))
            .map(|(l, _)| l)
            .collect();
    }
    let locals: Vec<Local> = locals
        .into_iter()
        .filter_map(|mut l| match_back(&rule.lsc.0, &step.lsc, &mut l).then_some(l))
        .flat_map(|l| ctx.run(&rule.rsc.0, 0, l, ground(&step.rsc)))
        .map(|(l, _)| l)
        .filter(|l| sets_hold(rule, sets, l))
        .collect();
    if locals.is_empty() || !features_unify(rule, cats) {
        return false;
    }
    // violated unless some assignment lets the rule produce the surface
    let centre = m(Mode::Centre);
    locals.into_iter().any(|l| {
        exact(&centre, &rule.surf.0, &step.surf, l)
            .iter()
            .all(|l2| !sets_hold(rule, sets, l2))
    })
}

fn features_unify(rule: &TwoLevelRule, cats: Option<&LexCats>) -> bool {
    let Some(cats) = cats else { return true };
    let mut binds = Bindings::new();
    for (f, c) in rule.features.iter().zip(cats) {
        if let (Some(f), Some(c)) = (f, c) {
            match unify_category(c, &f.rename("inv"), &binds) {
                Some(b) => binds = b,
                None => return false,
            }
        }
    }
    true
}

/// Checks every step against the obligatory rules, last step first. A
/// boundary step's categories govern it and the earlier steps of the same
/// morpheme. Returns the `Id/Surf/Lex` projection, or the id of the rule
/// that coerces the partition away.
pub fn coerce(
    rules: &RuleBase,
    sets: &BTreeMap<String, VariableSet>,
    steps: &[PartitionStep],
) -> Result<Vec<Pairing>, String> {
    let mut current: Option<&LexCats> = None;
    let mut out = Vec::with_capacity(steps.len());
    for step in steps.iter().rev() {
        if let Some(c) = &step.lex_cats {
            current = Some(c);
        }
        if let Some(id) = invalid_partition(rules, sets, step, current) {
            return Err(id);
        }
        out.push(Pairing {
            rule_id: step.rule_id.clone(),
            surf: step.surf.clone(),
            lex: step.lex.clone(),
        });
    }
    out.reverse();
    Ok(out)
}

fn spell(input: &str, alphabet: &[String], boundary: bool) -> Option<Vec<String>> {
    let mut syms: Vec<&str> = alphabet.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
    if boundary {
        syms.extend([BOUNDARY, "#"]);
    }
    syms.sort_by_key(|s| std::cmp::Reverse(s.len()));
    let mut out = Vec::new();
    let mut rest = input;
    while !rest.is_empty() {
        let s = syms.iter().find(|s| rest.starts_with(**s))?;
        out.push(if *s == "#" { BOUNDARY.to_string() } else { s.to_string() });
        rest = &rest[s.len()..];
    }
    Some(out)
}

/// Runs searches against one grammar snapshot.
#[derive(Debug, Clone)]
pub struct Engine<'g> {
    grammar: &'g GrammarSnapshot,
    options: EngineOptions,
}

impl<'g> Engine<'g> {
    pub fn new(grammar: &'g GrammarSnapshot) -> Self {
        Engine {
            grammar,
            options: EngineOptions::default(),
        }
    }

    pub fn with_options(grammar: &'g GrammarSnapshot, options: EngineOptions) -> Self {
        Engine { grammar, options }
    }

    pub fn grammar(&self) -> &'g GrammarSnapshot {
        self.grammar
    }

    /// Splits a surface string into surface symbols.
    pub fn spell_surface(&self, input: &str) -> Result<Vec<String>, EngineError> {
        spell(input, self.grammar.surface_alphabet(), false).ok_or_else(|| EngineError::Spelling {
            tape: 0,
            input: input.to_string(),
        })
    }

    /// Splits lexical strings (one per tape; `#` or `♭` for boundaries).
    pub fn spell_lexical(&self, inputs: &[&str]) -> Result<Vec<Vec<String>>, EngineError> {
        if inputs.len() != self.grammar.tapes {
            return Err(EngineError::TapeCount {
                expected: self.grammar.tapes,
                found: inputs.len(),
            });
        }
        inputs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                spell(s, &self.grammar.alphabets[i + 1].symbols, true).ok_or_else(|| {
                    EngineError::Spelling {
                        tape: i + 1,
                        input: s.to_string(),
                    }
                })
            })
            .collect()
    }

    pub fn analyze(&self, surface: &str) -> Result<Solutions<'g>, EngineError> {
        let s = self.spell_surface(surface)?;
        self.two_level_analysis(Some(&s), None)
    }

    pub fn generate(&self, lexical: &[&str]) -> Result<Solutions<'g>, EngineError> {
        let l = self.spell_lexical(lexical)?;
        self.two_level_analysis(None, Some(&l))
    }

    /// Starts a search with exactly one side given.
    pub fn two_level_analysis(
        &self,
        surface: Option<&[String]>,
        lexical: Option<&[Vec<String>]>,
    ) -> Result<Solutions<'g>, EngineError> {
        let g = self.grammar;
        let n = g.tapes;
        let (direction, surf, lex, size) = match (surface, lexical) {
            (Some(s), None) => (Direction::Analysis, Tape::closed(s), vec![Tape::open(); n], s.len()),
            (None, Some(l)) => {
                if l.len() != n {
                    return Err(EngineError::TapeCount {
                        expected: n,
                        found: l.len(),
                    });
                }
                let size = l.iter().map(Vec::len).sum();
                (
                    Direction::Generation,
                    Tape::open(),
                    l.iter().map(|t| Tape::closed(t)).collect(),
                    size,
                )
            }
            _ => return Err(EngineError::Usage),
        };
        let rules: Vec<&'g TwoLevelRule> = match self.options.order {
            RuleOrder::Precedence => g.rules.ordered(direction).filter(|r| r.enabled).collect(),
            RuleOrder::Source => g.rules.compiled(direction).iter().filter(|r| r.enabled).collect(),
        };
        let start = State {
            surf,
            lex,
            ptrs: LexPointers::roots(n),
            next: g.grammar.follow.initial().clone(),
            features: Vec::new(),
            leaves: Vec::new(),
            morph_start: vec![0; n],
            binds: Bindings::new(),
            steps: Vec::new(),
        };
        Ok(Solutions {
            grammar: g,
            direction,
            rules,
            trace_on: self.options.trace,
            trace: Vec::new(),
            max_steps: self.options.max_steps.unwrap_or(4 * size + 16),
            stack: vec![start],
            pending: VecDeque::new(),
        })
    }
}

/// Lazy stream of analyses, explored depth first.
pub struct Solutions<'g> {
    grammar: &'g GrammarSnapshot,
    direction: Direction,
    rules: Vec<&'g TwoLevelRule>,
    trace_on: bool,
    trace: Vec<String>,
    max_steps: usize,
    stack: Vec<State>,
    pending: VecDeque<AnalysisResult>,
}

struct Candidate {
    local: Local,
    lex: Vec<Vec<Slot>>,
    surf: Vec<Slot>,
}

impl<'g> Solutions<'g> {
    /// Takes the trace lines produced so far.
    pub fn drain_trace(&mut self) -> Vec<String> {
        std::mem::take(&mut self.trace)
    }

    fn note(&mut self, line: impl FnOnce() -> String) {
        if self.trace_on {
            self.trace.push(line());
        }
    }

    fn is_final(&self, st: &State) -> bool {
        st.surf.todo.is_empty()
            && st.lex.iter().all(|t| t.todo.is_empty())
            && at_all_roots(&st.ptrs)
            && st.next.eos
            && st.features.is_empty()
    }

    fn expand(&mut self, st: &State) -> Vec<State> {
        let mut children = Vec::new();
        if st.steps.len() >= self.max_steps {
            let limit = self.max_steps;
            self.note(|| format!("RULE - step limit {limit} reached"));
            return children;
        }
        let rules = self.rules.clone();
        for rule in rules {
            self.apply(rule, st, &mut children);
        }
        children
    }

    fn apply(&mut self, rule: &TwoLevelRule, st: &State, out: &mut Vec<State>) {
        let g = self.grammar;
        let n = g.tapes;
        let sets = &g.sets;
        let mut local = Local::new();
        let ctx_ok = (0..n).all(|i| match_back(&rule.llc.0[i], &st.lex[i].done, &mut local))
            && match_back(&rule.lsc.0, &st.surf.done, &mut local);
        if !ctx_ok {
            self.note(|| format!("CTX {} left context fails", rule.id));
            return;
        }

        let surf_matcher = |mode| Matcher {
            rule,
            sets,
            alphabet: Some(g.surface_alphabet()),
            open: st.surf.open,
            mode,
        };
        let lex_matcher = |i: usize, mode| Matcher {
            rule,
            sets,
            alphabet: None,
            open: st.lex[i].open,
            mode,
        };

        // centres, the known side first
        let mut cands = vec![Candidate {
            local,
            lex: st.lex.iter().map(|t| t.todo.clone()).collect(),
            surf: st.surf.todo.clone(),
        }];
        let surf_centre = |cands: Vec<Candidate>| -> Vec<Candidate> {
            let m = surf_matcher(Mode::Centre);
            cands
                .into_iter()
                .flat_map(|c| {
                    let lex = c.lex;
                    m.run(&rule.surf.0, 0, c.local, c.surf)
                        .into_iter()
                        .map(move |(local, surf)| Candidate {
                            local,
                            lex: lex.clone(),
                            surf,
                        })
                })
                .collect()
        };
        let lex_centre = |mut cands: Vec<Candidate>| -> Vec<Candidate> {
            for i in 0..n {
                let m = lex_matcher(i, Mode::Centre);
                cands = cands
                    .into_iter()
                    .flat_map(|c| {
                        let (lex, surf) = (c.lex, c.surf);
                        m.run(&rule.lex.0[i], 0, c.local, lex[i].clone())
                            .into_iter()
                            .map(move |(local, t)| {
                                let mut lex = lex.clone();
                                lex[i] = t;
                                Candidate {
                                    local,
                                    lex,
                                    surf: surf.clone(),
                                }
                            })
                    })
                    .collect();
            }
            cands
        };
        cands = match self.direction {
            Direction::Analysis => lex_centre(surf_centre(cands)),
            Direction::Generation => surf_centre(lex_centre(cands)),
        };
        if cands.is_empty() {
            self.note(|| format!("CTX {} centre does not match", rule.id));
            return;
        }

        // right contexts
        for i in 0..n {
            let m = lex_matcher(i, Mode::Context);
            let at = rule.lex.0[i].len();
            cands = cands
                .into_iter()
                .flat_map(|c| {
                    let (lex, surf) = (c.lex, c.surf);
                    m.run(&rule.rlc.0[i], at, c.local, lex[i].clone())
                        .into_iter()
                        .map(move |(local, t)| {
                            let mut lex = lex.clone();
                            lex[i] = t;
                            Candidate {
                                local,
                                lex,
                                surf: surf.clone(),
                            }
                        })
                })
                .collect();
        }
        let m = surf_matcher(Mode::Context);
        let at = rule.surf.0.len();
        cands = cands
            .into_iter()
            .flat_map(|c| {
                let lex = c.lex;
                m.run(&rule.rsc.0, at, c.local, c.surf)
                    .into_iter()
                    .map(move |(local, surf)| Candidate {
                        local,
                        lex: lex.clone(),
                        surf,
                    })
            })
            .collect();
        if cands.is_empty() {
            self.note(|| format!("CTX {} right context fails", rule.id));
            return;
        }
        let before = cands.len();
        cands.retain(|c| sets_hold(rule, sets, &c.local));
        if cands.len() < before {
            self.note(|| format!("SET {} variable outside its set", rule.id));
        }

        for c in cands {
            let centre = LexicalExpr(
                (0..n)
                    .map(|i| {
                        c.lex[i][..rule.lex.0[i].len()]
                            .iter()
                            .map(|s| Term::Sym(s.known().expect("centre is ground").to_string()))
                            .collect()
                    })
                    .collect(),
            );
            let transitions = g.lexicon.lexical_transitions(&centre, &st.ptrs);
            if transitions.is_empty() {
                self.note(|| format!("TRIE {} no transition on {centre}", rule.id));
                continue;
            }
            for (ptrs, cats) in transitions {
                if let Some(child) = self.advance(rule, st, &c, ptrs, cats) {
                    self.note(|| {
                        format!(
                            "EMIT {} {} : {}",
                            rule.id,
                            centre,
                            child.surf.done[st.surf.done.len()..].concat()
                        )
                    });
                    out.push(child);
                }
            }
        }
    }

    fn advance(
        &mut self,
        rule: &TwoLevelRule,
        st: &State,
        c: &Candidate,
        ptrs: LexPointers,
        cats: Option<LexCats>,
    ) -> Option<State> {
        let g = self.grammar;
        let n = g.tapes;
        let k = st.steps.len();
        let mut next = st.clone();
        next.ptrs = ptrs;
        let mut lex_span = Vec::with_capacity(n);
        for i in 0..n {
            let m = rule.lex.0[i].len();
            let tape = &mut next.lex[i];
            let from = tape.done.len();
            tape.todo = c.lex[i].clone();
            tape.done
                .extend(tape.todo.drain(..m).map(|s| s.known().unwrap().to_string()));
            lex_span.push((from, tape.done.len()));
        }
        let from = next.surf.done.len();
        next.surf.todo = c.surf.clone();
        let m = rule.surf.0.len();
        let emitted: Vec<String> = next.surf.todo.drain(..m).map(|s| s.known().unwrap().to_string()).collect();
        next.surf.done.extend(emitted);
        let surf_span = (from, next.surf.done.len());

        for (i, f) in rule.features.iter().enumerate() {
            if let Some(f) = f {
                next.features.push((i, f.rename(&format!("s{k}"))));
            }
        }

        let mut renamed: Option<LexCats> = None;
        if let Some(cats) = &cats {
            let rc: LexCats = cats
                .iter()
                .enumerate()
                .map(|(i, c)| c.as_ref().map(|c| c.rename(&format!("m{k}t{i}"))))
                .collect();
            for c in rc.iter().flatten() {
                next.binds = c.apply_guards(&next.binds)?;
            }
            let mut kept = Vec::new();
            for (i, f) in std::mem::take(&mut next.features) {
                match &rc[i] {
                    Some(c) => match unify_category(c, &f, &next.binds) {
                        Some(b) => next.binds = b,
                        None => {
                            self.note(|| format!("FEAT {} {f} does not unify with {c}", rule.id));
                            return None;
                        }
                    },
                    None => kept.push((i, f)),
                }
            }
            next.features = kept;
            for (i, c) in rc.iter().enumerate() {
                let Some(c) = c else { continue };
                if !next.next.contains(&c.symbol) {
                    self.note(|| format!("FOLLOW {} {} may not come next", rule.id, c.symbol));
                    return None;
                }
                next.next = g.grammar.follow.follow(&c.symbol);
                let done = &next.lex[i].done;
                let morpheme = done[next.morph_start[i]..done.len() - 1].concat();
                next.morph_start[i] = done.len();
                next.leaves.push(Leaf {
                    category: c.clone(),
                    morpheme,
                });
            }
            renamed = Some(rc);
        }
        next.steps.push(StepRec {
            rule_id: rule.id.clone(),
            surf: surf_span,
            lex: lex_span,
            cats: renamed,
        });
        Some(next)
    }

    fn finish(&mut self, st: &State) {
        let g = self.grammar;
        let surface = st.surf.done.clone();
        let lexical: Vec<Vec<String>> = st.lex.iter().map(|t| t.done.clone()).collect();
        let binds = &st.binds;
        let partition: Vec<PartitionStep> = st
            .steps
            .iter()
            .map(|s| PartitionStep {
                rule_id: s.rule_id.clone(),
                lsc: surface[..s.surf.0].to_vec(),
                surf: surface[s.surf.0..s.surf.1].to_vec(),
                rsc: surface[s.surf.1..].to_vec(),
                llc: lexical.iter().zip(&s.lex).map(|(t, sp)| t[..sp.0].to_vec()).collect(),
                lex: lexical.iter().zip(&s.lex).map(|(t, sp)| t[sp.0..sp.1].to_vec()).collect(),
                rlc: lexical.iter().zip(&s.lex).map(|(t, sp)| t[sp.1..].to_vec()).collect(),
                lex_cats: s
                    .cats
                    .as_ref()
                    .map(|cs| cs.iter().map(|c| c.as_ref().map(|c| c.resolve(binds))).collect()),
            })
            .collect();
        let pairings = match coerce(&g.rules, &g.sets, &partition) {
            Ok(p) => p,
            Err(id) => {
                self.note(|| format!("COERCE {} rejects {}", id, surface.concat()));
                return;
            }
        };
        let morphemes: Vec<Leaf> = st
            .leaves
            .iter()
            .map(|l| Leaf {
                category: l.category.resolve(binds),
                morpheme: l.morpheme.clone(),
            })
            .collect();
        let bindings = binds.resolved();
        let result = AnalysisResult {
            surface,
            lexical,
            partition,
            pairings,
            morphemes,
            parse: None,
            bindings,
        };
        if g.grammar.is_trivial() {
            self.pending.push_back(result);
            return;
        }
        let parses = g.grammar.shift_reduce(&result.morphemes);
        if parses.is_empty() {
            self.note(|| format!("PARSE no parse for {}", result.surface_string()));
        }
        for p in parses {
            let mut r = result.clone();
            r.parse = Some(p);
            self.pending.push_back(r);
        }
    }
}

impl Iterator for Solutions<'_> {
    type Item = AnalysisResult;

    fn next(&mut self) -> Option<AnalysisResult> {
        loop {
            if let Some(r) = self.pending.pop_front() {
                return Some(r);
            }
            let st = self.stack.pop()?;
            if self.is_final(&st) {
                self.finish(&st);
            }
            let mut children = self.expand(&st);
            children.reverse();
            self.stack.extend(children);
        }
    }
}
