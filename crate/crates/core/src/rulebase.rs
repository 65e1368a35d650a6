//! Two-level rules: source form, compiled form, precedence ordering,
//! schema expansion and enable/disable toggling.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::featstruct::{is_variable_name, FeatureCategory};

/// Lexical morpheme boundary.
pub const BOUNDARY: &str = "♭";

/// One position of a rule expression: a literal symbol or a variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Term {
    Sym(String),
    Var(String),
}

impl Term {
    /// Classifies an identifier by the uppercase-initial convention.
    pub fn from_ident(s: &str) -> Term {
        if is_variable_name(s) {
            Term::Var(s.to_string())
        } else {
            Term::Sym(s.to_string())
        }
    }

    pub fn sym(s: &str) -> Term {
        Term::Sym(s.to_string())
    }

    pub fn var(s: &str) -> Term {
        Term::Var(s.to_string())
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, Term::Sym(s) if s == BOUNDARY)
    }

    pub fn var_name(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Sym(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Sym(s) if s == BOUNDARY => f.write_str("#"),
            Term::Sym(s) | Term::Var(s) => f.write_str(s),
        }
    }
}

fn fmt_terms(terms: &[Term]) -> String {
    let parts: Vec<String> = terms.iter().map(ToString::to_string).collect();
    format!("[{}]", parts.join(","))
}

/// Per-tape lexical expression; tape `i` (1-based) is `tapes[i - 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct LexicalExpr(pub Vec<Vec<Term>>);

impl LexicalExpr {
    pub fn empty(tapes: usize) -> Self {
        LexicalExpr(vec![Vec::new(); tapes])
    }

    pub fn tapes(&self) -> usize {
        self.0.len()
    }

    /// An expression whose every tape is empty imposes nothing.
    pub fn is_empty(&self) -> bool {
        self.0.iter().all(Vec::is_empty)
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.0.iter().flatten()
    }

    fn reversed(&self) -> Self {
        LexicalExpr(
            self.0
                .iter()
                .map(|t| t.iter().rev().cloned().collect())
                .collect(),
        )
    }
}

impl fmt::Display for LexicalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|t| fmt_terms(t)).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct SurfaceExpr(pub Vec<Term>);

impl SurfaceExpr {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn reversed(&self) -> Self {
        SurfaceExpr(self.0.iter().rev().cloned().collect())
    }
}

impl fmt::Display for SurfaceExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_terms(&self.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Operator {
    /// `=>`
    Optional,
    /// `<=>`
    Obligatory,
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operator::Optional => "=>",
            Operator::Obligatory => "<=>",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    Analysis,
    Generation,
}

/// A `set(Var)` constraint of a rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VarConstraint {
    pub set: String,
    pub var: String,
}

impl VarConstraint {
    pub fn new(set: &str, var: &str) -> Self {
        VarConstraint {
            set: set.to_string(),
            var: var.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariableSet {
    pub id: String,
    /// Members in declaration order.
    pub members: Vec<String>,
}

impl VariableSet {
    pub fn contains(&self, sym: &str) -> bool {
        self.members.iter().any(|m| m == sym)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    /// 0 is the surface tape, 1..=N the lexical tapes.
    pub tape: usize,
    pub symbols: Vec<String>,
}

impl Alphabet {
    pub fn contains(&self, sym: &str) -> bool {
        self.symbols.iter().any(|s| s == sym)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwoLevelRule {
    pub id: String,
    pub llc: LexicalExpr,
    pub lex: LexicalExpr,
    pub rlc: LexicalExpr,
    pub op: Operator,
    pub lsc: SurfaceExpr,
    pub surf: SurfaceExpr,
    pub rsc: SurfaceExpr,
    pub variables: Vec<VarConstraint>,
    /// One entry per lexical tape; `None` leaves that tape unconstrained.
    pub features: Vec<Option<FeatureCategory>>,
    pub enabled: bool,
    /// Set once left contexts have been reversed for a direction.
    pub compiled: Option<Direction>,
    pub precedence: u8,
    /// Id of the schema this rule was expanded from.
    pub origin: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("rule {id}: every lexical tape and the surface centre are empty")]
    EmptyCentre { id: String },
    #[error("rule {id}: {field} has {found} tapes, expected {expected}")]
    TapeCount {
        id: String,
        field: &'static str,
        found: usize,
        expected: usize,
    },
    #[error("rule {id}: schematic symbol `{symbol}` has no matching expansion")]
    NoExpansion { id: String, symbol: String },
    #[error("rule {id}: schematic symbols in {field} have differing expansion counts")]
    UnevenExpansion { id: String, field: &'static str },
    #[error("rule {id}: flat expression in {field} needs expanding")]
    FlatExpression { id: String, field: &'static str },
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
}

impl TwoLevelRule {
    /// Rule with empty contexts, no variables and no features.
    pub fn new(id: &str, tapes: usize, lex: LexicalExpr, op: Operator, surf: SurfaceExpr) -> Self {
        TwoLevelRule {
            id: id.to_string(),
            llc: LexicalExpr::empty(tapes),
            lex,
            rlc: LexicalExpr::empty(tapes),
            op,
            lsc: SurfaceExpr::default(),
            surf,
            rsc: SurfaceExpr::default(),
            variables: Vec::new(),
            features: vec![None; tapes],
            enabled: true,
            compiled: None,
            precedence: 0,
            origin: None,
        }
    }

    pub fn tapes(&self) -> usize {
        self.lex.tapes()
    }

    pub fn set_of(&self, var: &str) -> Option<&str> {
        self.variables
            .iter()
            .find(|c| c.var == var)
            .map(|c| c.set.as_str())
    }

    /// Every variable that occurs in one of the six expressions.
    pub fn expression_variables(&self) -> BTreeSet<String> {
        let lexical = [&self.llc, &self.lex, &self.rlc]
            .into_iter()
            .flat_map(|e| e.terms());
        let surface = [&self.lsc, &self.surf, &self.rsc]
            .into_iter()
            .flat_map(|e| e.0.iter());
        lexical
            .chain(surface)
            .filter_map(|t| t.var_name().map(str::to_string))
            .collect()
    }

    /// Left contexts in written (left-to-right) order, whatever the
    /// compilation state.
    pub fn written_llc(&self) -> LexicalExpr {
        match self.compiled {
            Some(_) => self.llc.reversed(),
            None => self.llc.clone(),
        }
    }

    pub fn written_lsc(&self) -> SurfaceExpr {
        match self.compiled {
            Some(_) => self.lsc.reversed(),
            None => self.lsc.clone(),
        }
    }
}

/// The six-bit precedence value. Bit order within each trio is
/// (left context, centre, right context), most significant first; the trio
/// of the input side of `direction` takes the high bits.
pub fn precedence(rule: &TwoLevelRule, direction: Direction) -> u8 {
    let bit = |set: bool| u8::from(set);
    let surface =
        bit(!rule.lsc.is_empty()) << 2 | bit(!rule.surf.is_empty()) << 1 | bit(!rule.rsc.is_empty());
    let lexical =
        bit(!rule.llc.is_empty()) << 2 | bit(!rule.lex.is_empty()) << 1 | bit(!rule.rlc.is_empty());
    match direction {
        Direction::Analysis => surface << 3 | lexical,
        Direction::Generation => lexical << 3 | surface,
    }
}

/// Converts a rule to its internal form for `direction`: left contexts are
/// stored reversed so they can be matched against reversed history, and the
/// precedence value is filled in.
pub fn compile_rule(src: &TwoLevelRule, direction: Direction) -> Result<TwoLevelRule, RuleError> {
    if src.lex.is_empty() && src.surf.is_empty() {
        return Err(RuleError::EmptyCentre { id: src.id.clone() });
    }
    let n = src.lex.tapes();
    for (field, expr) in [("llc", &src.llc), ("rlc", &src.rlc)] {
        if expr.tapes() != n {
            return Err(RuleError::TapeCount {
                id: src.id.clone(),
                field,
                found: expr.tapes(),
                expected: n,
            });
        }
    }
    if src.compiled == Some(direction) {
        return Ok(src.clone());
    }
    let mut out = src.clone();
    out.llc = src.written_llc().reversed();
    out.lsc = src.written_lsc().reversed();
    out.compiled = Some(direction);
    out.precedence = precedence(src, direction);
    Ok(out)
}

/// Stable sort by descending precedence; ties keep source order.
pub fn order_rules(rules: &[TwoLevelRule]) -> Vec<TwoLevelRule> {
    let mut out = rules.to_vec();
    out.sort_by_key(|r| std::cmp::Reverse(r.precedence));
    out
}

/// `expand(symbol, expansion, variables)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionRule {
    pub symbol: Term,
    pub expansion: LexicalExpr,
    pub variables: Vec<VarConstraint>,
}

impl ExpansionRule {
    fn head_set(&self) -> Option<&str> {
        let name = self.symbol.var_name()?;
        self.variables
            .iter()
            .find(|c| c.var == name)
            .map(|c| c.set.as_str())
    }

    fn instantiate(&self, occurrence: &Term) -> (LexicalExpr, Vec<VarConstraint>) {
        let rename = |t: &Term| -> Term {
            match (t, &self.symbol, occurrence) {
                (Term::Var(v), Term::Var(head), _) if v == head => occurrence.clone(),
                _ => t.clone(),
            }
        };
        let expr = LexicalExpr(
            self.expansion
                .0
                .iter()
                .map(|tape| tape.iter().map(rename).collect())
                .collect(),
        );
        let vars = self
            .variables
            .iter()
            .map(|c| match (&self.symbol, occurrence) {
                (Term::Var(head), Term::Var(occ)) if c.var == *head => VarConstraint::new(&c.set, occ),
                _ => c.clone(),
            })
            .collect();
        (expr, vars)
    }
}

/// A lexical expression as written: either per-tape, or a flat sequence
/// meant for schema expansion (`[]` is the flat empty list).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum LexLayout {
    Flat(Vec<Term>),
    Tapes(Vec<Vec<Term>>),
}

impl LexLayout {
    /// Converts to a per-tape expression without expansion.
    pub fn to_expr(&self, tapes: usize) -> Option<LexicalExpr> {
        match self {
            LexLayout::Tapes(t) => Some(LexicalExpr(t.clone())),
            LexLayout::Flat(f) if f.is_empty() => Some(LexicalExpr::empty(tapes)),
            LexLayout::Flat(f) if tapes == 1 => Some(LexicalExpr(vec![f.clone()])),
            LexLayout::Flat(_) => None,
        }
    }
}

/// A rule as written in a grammar file, before expansion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleTemplate {
    pub id: String,
    pub llc: LexLayout,
    pub lex: LexLayout,
    pub rlc: LexLayout,
    pub op: Operator,
    pub lsc: SurfaceExpr,
    pub surf: SurfaceExpr,
    pub rsc: SurfaceExpr,
    pub variables: Vec<VarConstraint>,
    pub features: Vec<Option<FeatureCategory>>,
}

impl RuleTemplate {
    fn finish(
        &self,
        id: String,
        llc: LexicalExpr,
        lex: LexicalExpr,
        rlc: LexicalExpr,
        variables: Vec<VarConstraint>,
        tapes: usize,
        origin: Option<String>,
    ) -> TwoLevelRule {
        let features = if self.features.is_empty() {
            vec![None; tapes]
        } else {
            self.features.clone()
        };
        TwoLevelRule {
            id,
            llc,
            lex,
            rlc,
            op: self.op,
            lsc: self.lsc.clone(),
            surf: self.surf.clone(),
            rsc: self.rsc.clone(),
            variables,
            features,
            enabled: true,
            compiled: None,
            precedence: 0,
            origin,
        }
    }

    /// The template as a rule, with no expansion applied.
    pub fn to_rule(&self, tapes: usize) -> Result<TwoLevelRule, RuleError> {
        let conv = |layout: &LexLayout, field: &'static str| {
            layout.to_expr(tapes).ok_or_else(|| RuleError::FlatExpression {
                id: self.id.clone(),
                field,
            })
        };
        Ok(self.finish(
            self.id.clone(),
            conv(&self.llc, "llc")?,
            conv(&self.lex, "lex")?,
            conv(&self.rlc, "rlc")?,
            self.variables.clone(),
            tapes,
            None,
        ))
    }
}

fn is_schematic(term: &Term, rule_vars: &[VarConstraint], exp: &ExpansionRule) -> bool {
    if *term == exp.symbol {
        return true;
    }
    match (term, exp.head_set()) {
        (Term::Var(v), Some(head_set)) => rule_vars.iter().any(|c| c.var == *v && c.set == head_set),
        _ => false,
    }
}

/// Expands one flat expression into its variants. All schematic occurrences
/// in one expression take the same expansion ordinal.
fn expand_layout(
    layout: &LexLayout,
    field: &'static str,
    template: &RuleTemplate,
    expansions: &[ExpansionRule],
    tapes: usize,
) -> Result<Vec<(LexicalExpr, Vec<VarConstraint>)>, RuleError> {
    let flat = match layout {
        LexLayout::Tapes(t) => return Ok(vec![(LexicalExpr(t.clone()), Vec::new())]),
        LexLayout::Flat(f) => f,
    };
    let per_term: Vec<Vec<&ExpansionRule>> = flat
        .iter()
        .map(|t| {
            expansions
                .iter()
                .filter(|e| is_schematic(t, &template.variables, e))
                .collect()
        })
        .collect();
    let counts: BTreeSet<usize> = per_term.iter().map(Vec::len).filter(|&n| n > 0).collect();
    let variants = match counts.len() {
        0 => {
            if flat.is_empty() {
                return Ok(vec![(LexicalExpr::empty(tapes), Vec::new())]);
            }
            if tapes == 1 {
                return Ok(vec![(LexicalExpr(vec![flat.clone()]), Vec::new())]);
            }
            let symbol = flat.first().map(ToString::to_string).unwrap_or_default();
            return Err(RuleError::NoExpansion {
                id: template.id.clone(),
                symbol,
            });
        }
        1 => *counts.iter().next().unwrap(),
        _ => {
            return Err(RuleError::UnevenExpansion {
                id: template.id.clone(),
                field,
            })
        }
    };
    let mut out = Vec::with_capacity(variants);
    for k in 0..variants {
        let mut tapes_out: Vec<Vec<Term>> = vec![Vec::new(); tapes];
        let mut vars = Vec::new();
        for (term, exps) in flat.iter().zip(&per_term) {
            if exps.is_empty() {
                // literal material defaults to the first tape
                tapes_out[0].push(term.clone());
                continue;
            }
            let (expr, v) = exps[k].instantiate(term);
            if expr.tapes() != tapes {
                return Err(RuleError::TapeCount {
                    id: template.id.clone(),
                    field,
                    found: expr.tapes(),
                    expected: tapes,
                });
            }
            for (dst, src) in tapes_out.iter_mut().zip(expr.0) {
                dst.extend(src);
            }
            vars.extend(v);
        }
        out.push((LexicalExpr(tapes_out), vars));
    }
    Ok(out)
}

/// Expands a schema into concrete rules. Variants of LLC, Lex and RLC are
/// combined as a cartesian product; ids are the schema id with `_1`, `_2`,
/// ... appended. A template without schematic symbols comes back as is.
pub fn expand_rule(
    template: &RuleTemplate,
    expansions: &[ExpansionRule],
    tapes: usize,
) -> Result<Vec<TwoLevelRule>, RuleError> {
    let llcs = expand_layout(&template.llc, "llc", template, expansions, tapes)?;
    let lexes = expand_layout(&template.lex, "lex", template, expansions, tapes)?;
    let rlcs = expand_layout(&template.rlc, "rlc", template, expansions, tapes)?;
    let total = llcs.len() * lexes.len() * rlcs.len();
    let any_expanded = [&template.llc, &template.lex, &template.rlc]
        .iter()
        .any(|s| matches!(s, LexLayout::Flat(f) if !f.is_empty()) && tapes > 1);
    if total == 1 && !any_expanded {
        let (llc, _) = llcs.into_iter().next().unwrap();
        let (lex, _) = lexes.into_iter().next().unwrap();
        let (rlc, _) = rlcs.into_iter().next().unwrap();
        return Ok(vec![template.finish(
            template.id.clone(),
            llc,
            lex,
            rlc,
            template.variables.clone(),
            tapes,
            None,
        )]);
    }
    let mut out = Vec::with_capacity(total);
    for (llc, v1) in &llcs {
        for (lex, v2) in &lexes {
            for (rlc, v3) in &rlcs {
                let mut vars = template.variables.clone();
                for c in v1.iter().chain(v2).chain(v3) {
                    if !vars.contains(c) {
                        vars.push(c.clone());
                    }
                }
                let id = format!("{}_{}", template.id, out.len() + 1);
                out.push(template.finish(
                    id,
                    llc.clone(),
                    lex.clone(),
                    rlc.clone(),
                    vars,
                    tapes,
                    Some(template.id.clone()),
                ));
            }
        }
    }
    Ok(out)
}

/// Rules compiled for both directions, with their precedence orderings and
/// the enabled flags. Toggling produces a new value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleBase {
    analysis: Vec<TwoLevelRule>,
    generation: Vec<TwoLevelRule>,
    analysis_order: Vec<usize>,
    generation_order: Vec<usize>,
}

fn precedence_order(rules: &[TwoLevelRule]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rules.len()).collect();
    idx.sort_by(|&a, &b| rules[b].precedence.cmp(&rules[a].precedence));
    idx
}

impl RuleBase {
    pub fn new(rules: &[TwoLevelRule]) -> Result<Self, RuleError> {
        let analysis = rules
            .iter()
            .map(|r| compile_rule(r, Direction::Analysis))
            .collect::<Result<Vec<_>, _>>()?;
        let generation = rules
            .iter()
            .map(|r| compile_rule(r, Direction::Generation))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RuleBase {
            analysis_order: precedence_order(&analysis),
            generation_order: precedence_order(&generation),
            analysis,
            generation,
        })
    }

    pub fn len(&self) -> usize {
        self.analysis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.analysis.is_empty()
    }

    /// Rules compiled for `direction`, in source order.
    pub fn compiled(&self, direction: Direction) -> &[TwoLevelRule] {
        match direction {
            Direction::Analysis => &self.analysis,
            Direction::Generation => &self.generation,
        }
    }

    /// Rules compiled for `direction`, most specific first.
    pub fn ordered(&self, direction: Direction) -> impl Iterator<Item = &TwoLevelRule> {
        let (rules, order) = match direction {
            Direction::Analysis => (&self.analysis, &self.analysis_order),
            Direction::Generation => (&self.generation, &self.generation_order),
        };
        order.iter().map(move |&i| &rules[i])
    }

    pub fn get(&self, id: &str) -> Option<&TwoLevelRule> {
        self.analysis.iter().find(|r| r.id == id)
    }

    pub fn is_enabled(&self, id: &str) -> Option<bool> {
        self.get(id).map(|r| r.enabled)
    }

    /// Returns a copy with rule `id` switched on or off.
    pub fn toggle_rule(&self, id: &str, enabled: bool) -> Result<RuleBase, RuleError> {
        let pos = self
            .analysis
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| RuleError::UnknownRule(id.to_string()))?;
        let mut out = self.clone();
        out.analysis[pos].enabled = enabled;
        out.generation[pos].enabled = enabled;
        Ok(out)
    }
}
