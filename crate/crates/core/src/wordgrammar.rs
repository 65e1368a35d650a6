//! Unification word grammar over morpheme categories.
//!
//! The follow table is computed over bare category symbols and prunes the
//! two-level search; feature checking happens when the completed category
//! sequence is reduced by [`WordGrammar::shift_reduce`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::featstruct::{unify_category, Bindings, FeatureCategory};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynRule {
    pub id: String,
    pub mother: FeatureCategory,
    pub daughters: Vec<FeatureCategory>,
}

impl SynRule {
    fn renamed(&self, suffix: &str) -> SynRule {
        SynRule {
            id: self.id.clone(),
            mother: self.mother.rename(suffix),
            daughters: self.daughters.iter().map(|d| d.rename(suffix)).collect(),
        }
    }
}

/// Categories that may come next, and whether the word may end here.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NextCats {
    pub cats: BTreeSet<String>,
    pub eos: bool,
}

impl NextCats {
    pub fn contains(&self, symbol: &str) -> bool {
        self.cats.contains(symbol)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FollowTable {
    bos: NextCats,
    table: BTreeMap<String, NextCats>,
}

impl FollowTable {
    /// `follow(bos)`.
    pub fn initial(&self) -> &NextCats {
        &self.bos
    }

    /// Unknown symbols follow nothing.
    pub fn follow(&self, symbol: &str) -> NextCats {
        self.table.get(symbol).cloned().unwrap_or_default()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &String> {
        self.table.keys()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("word grammar has no start category")]
    NoStart,
}

/// Start categories: declared ones if any, otherwise every mother that is
/// never a daughter plus every mother with a bar-0 instance.
pub fn start_symbols(rules: &[SynRule], declared: &BTreeSet<String>) -> BTreeSet<String> {
    if !declared.is_empty() {
        return declared.clone();
    }
    let daughters: BTreeSet<&str> = rules
        .iter()
        .flat_map(|r| r.daughters.iter().map(|d| d.symbol.as_str()))
        .collect();
    rules
        .iter()
        .filter(|r| !daughters.contains(r.mother.symbol.as_str()) || r.mother.bar_level() == Some(0))
        .map(|r| r.mother.symbol.clone())
        .collect()
}

/// Computes first/last sets over bare symbols and from them the follow
/// table for every lexical category.
pub fn build_follow(
    rules: &[SynRule],
    lexical: &BTreeSet<String>,
    declared_starts: &BTreeSet<String>,
) -> Result<FollowTable, GrammarError> {
    if rules.is_empty() && lexical.is_empty() && declared_starts.is_empty() {
        // purely phonological grammar: the empty category sequence is a word
        return Ok(FollowTable {
            bos: NextCats {
                cats: BTreeSet::new(),
                eos: true,
            },
            table: BTreeMap::new(),
        });
    }
    if rules.is_empty() && declared_starts.is_empty() {
        // lexicon only: any non-empty morpheme sequence
        let all = NextCats {
            cats: lexical.clone(),
            eos: true,
        };
        return Ok(FollowTable {
            bos: NextCats {
                cats: lexical.clone(),
                eos: false,
            },
            table: lexical.iter().map(|s| (s.clone(), all.clone())).collect(),
        });
    }
    let starts = start_symbols(rules, declared_starts);
    if starts.is_empty() {
        return Err(GrammarError::NoStart);
    }

    // rules reachable from a start symbol
    let mut reachable: BTreeSet<String> = starts.clone();
    loop {
        let before = reachable.len();
        for r in rules {
            if reachable.contains(&r.mother.symbol) {
                reachable.extend(r.daughters.iter().map(|d| d.symbol.clone()));
            }
        }
        if reachable.len() == before {
            break;
        }
    }
    let live: Vec<&SynRule> = rules
        .iter()
        .filter(|r| reachable.contains(&r.mother.symbol))
        .collect();

    let mut first: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut last: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for sym in &reachable {
        if lexical.contains(sym) {
            first.entry(sym.clone()).or_default().insert(sym.clone());
            last.entry(sym.clone()).or_default().insert(sym.clone());
        }
    }
    loop {
        let mut changed = false;
        for r in &live {
            let (Some(d0), Some(dn)) = (r.daughters.first(), r.daughters.last()) else {
                continue;
            };
            let f = first.get(&d0.symbol).cloned().unwrap_or_default();
            let l = last.get(&dn.symbol).cloned().unwrap_or_default();
            let fm = first.entry(r.mother.symbol.clone()).or_default();
            let n = fm.len();
            fm.extend(f);
            changed |= fm.len() != n;
            let lm = last.entry(r.mother.symbol.clone()).or_default();
            let n = lm.len();
            lm.extend(l);
            changed |= lm.len() != n;
        }
        if !changed {
            break;
        }
    }

    let mut table: BTreeMap<String, NextCats> = lexical
        .iter()
        .map(|s| (s.clone(), NextCats::default()))
        .collect();
    let empty = BTreeSet::new();
    for r in &live {
        for pair in r.daughters.windows(2) {
            let next = first.get(&pair[1].symbol).unwrap_or(&empty);
            for t in last.get(&pair[0].symbol).unwrap_or(&empty) {
                table.entry(t.clone()).or_default().cats.extend(next.iter().cloned());
            }
        }
    }
    let mut bos = NextCats::default();
    for s in &starts {
        bos.cats.extend(first.get(s).unwrap_or(&empty).iter().cloned());
        for t in last.get(s).unwrap_or(&empty) {
            table.entry(t.clone()).or_default().eos = true;
        }
    }
    Ok(FollowTable { bos, table })
}

/// A morpheme category handed to the parser.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leaf {
    pub category: FeatureCategory,
    pub morpheme: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParseTree {
    pub category: FeatureCategory,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ParseTree>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub morpheme: Option<String>,
}

impl ParseTree {
    fn leaf(leaf: &Leaf) -> Self {
        ParseTree {
            category: leaf.category.clone(),
            rule: None,
            children: Vec::new(),
            morpheme: Some(leaf.morpheme.clone()),
        }
    }

    fn resolve(&self, binds: &Bindings) -> Self {
        ParseTree {
            category: self.category.resolve(binds),
            rule: self.rule.clone(),
            children: self.children.iter().map(|c| c.resolve(binds)).collect(),
            morpheme: self.morpheme.clone(),
        }
    }

    /// Rule ids in pre-order.
    pub fn rule_sequence(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_rules(&mut out);
        out
    }

    fn collect_rules(&self, out: &mut Vec<String>) {
        if let Some(r) = &self.rule {
            out.push(r.clone());
        }
        for c in &self.children {
            c.collect_rules(out);
        }
    }

    /// Leaf morphemes, left to right.
    pub fn leaves(&self) -> Vec<&ParseTree> {
        if self.children.is_empty() {
            return vec![self];
        }
        self.children.iter().flat_map(|c| c.leaves()).collect()
    }

    /// Every node, pre-order.
    pub fn nodes(&self) -> Vec<&ParseTree> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.nodes());
        }
        out
    }

    /// One-line bracketing with full categories.
    pub fn bracketed(&self) -> String {
        match &self.morpheme {
            Some(m) => format!("({} {})", self.category, m),
            None => {
                let kids: Vec<String> = self.children.iter().map(ParseTree::bracketed).collect();
                format!("({} {})", self.category, kids.join(" "))
            }
        }
    }

    /// Bracketing that shows only symbols and bar levels on inner nodes.
    pub fn skeleton(&self) -> String {
        let label = match self.category.get("bar") {
            Some(v) if self.morpheme.is_none() => format!("{}:[bar={}]", self.category.symbol, v),
            _ => self.category.symbol.clone(),
        };
        match &self.morpheme {
            Some(m) => format!("({label} {m})"),
            None => {
                let kids: Vec<String> = self.children.iter().map(ParseTree::skeleton).collect();
                format!("({label} {})", kids.join(" "))
            }
        }
    }

    /// Indented multi-line rendering.
    pub fn indented(&self) -> String {
        let mut out = String::new();
        self.write_indented(&mut out, 0);
        out
    }

    fn write_indented(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        match &self.morpheme {
            Some(m) => {
                let _ = writeln!(out, "{pad}({} {m})", self.category);
            }
            None => {
                let _ = writeln!(out, "{pad}({}", self.category);
                for c in &self.children {
                    c.write_indented(out, depth + 1);
                }
                let _ = writeln!(out, "{pad})");
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordGrammar {
    pub rules: Vec<SynRule>,
    pub starts: BTreeSet<String>,
    pub follow: FollowTable,
    /// Symbols that some rule builds at bar level 0.
    bar_zero: BTreeSet<String>,
}

#[derive(Clone)]
struct Node {
    cat: FeatureCategory,
    tree: ParseTree,
    unary: usize,
}

#[derive(Clone)]
struct SrState {
    stack: Vec<Node>,
    pos: usize,
    binds: Bindings,
}

impl WordGrammar {
    pub fn new(
        rules: Vec<SynRule>,
        lexical: &BTreeSet<String>,
        declared_starts: &BTreeSet<String>,
    ) -> Result<Self, GrammarError> {
        let follow = build_follow(&rules, lexical, declared_starts)?;
        let starts = start_symbols(&rules, declared_starts);
        let bar_zero = rules
            .iter()
            .filter(|r| r.mother.bar_level() == Some(0))
            .map(|r| r.mother.symbol.clone())
            .collect();
        Ok(WordGrammar {
            rules,
            starts,
            follow,
            bar_zero,
        })
    }

    /// True when the word grammar imposes no structure at all.
    pub fn is_trivial(&self) -> bool {
        self.rules.is_empty() && self.starts.is_empty()
    }

    /// A single remaining category finishes a parse when it is at bar level
    /// 0, or is a start symbol that no rule builds at bar level 0.
    pub fn is_complete(&self, cat: &FeatureCategory) -> bool {
        cat.bar_level() == Some(0)
            || (self.starts.contains(&cat.symbol) && !self.bar_zero.contains(&cat.symbol))
    }

    /// Every complete parse of the category sequence, ordered by their
    /// pre-order rule id sequences.
    pub fn shift_reduce(&self, leaves: &[Leaf]) -> Vec<ParseTree> {
        let mut found: BTreeMap<(Vec<String>, String), ParseTree> = BTreeMap::new();
        let mut agenda = vec![SrState {
            stack: Vec::new(),
            pos: 0,
            binds: Bindings::new(),
        }];
        let mut fresh = 0usize;
        while let Some(st) = agenda.pop() {
            if st.pos == leaves.len() && st.stack.len() == 1 {
                let top = st.stack[0].cat.resolve(&st.binds);
                if self.is_complete(&top) {
                    let tree = st.stack[0].tree.resolve(&st.binds);
                    let key = (tree.rule_sequence(), tree.bracketed());
                    found.entry(key).or_insert(tree);
                }
            }
            let mut next = Vec::new();
            for rule in &self.rules {
                let k = rule.daughters.len();
                if k == 0 || k > st.stack.len() {
                    continue;
                }
                let base = st.stack.len() - k;
                if k == 1 && st.stack[base].unary > self.rules.len() {
                    continue;
                }
                fresh += 1;
                let r = rule.renamed(&format!("r{fresh}"));
                let Some(mut binds) = r.mother.apply_guards(&st.binds) else {
                    continue;
                };
                let mut ok = true;
                for (d, node) in r.daughters.iter().zip(&st.stack[base..]) {
                    match unify_category(d, &node.cat, &binds) {
                        Some(b) => binds = b,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let mut stack = st.stack[..base].to_vec();
                let children = st.stack[base..].iter().map(|n| n.tree.clone()).collect();
                let unary = if k == 1 { st.stack[base].unary + 1 } else { 0 };
                stack.push(Node {
                    cat: r.mother.clone(),
                    tree: ParseTree {
                        category: r.mother.clone(),
                        rule: Some(r.id.clone()),
                        children,
                        morpheme: None,
                    },
                    unary,
                });
                next.push(SrState {
                    stack,
                    pos: st.pos,
                    binds,
                });
            }
            if st.pos < leaves.len() {
                let leaf = &leaves[st.pos];
                let mut stack = st.stack.clone();
                stack.push(Node {
                    cat: leaf.category.clone(),
                    tree: ParseTree::leaf(leaf),
                    unary: 0,
                });
                next.push(SrState {
                    stack,
                    pos: st.pos + 1,
                    binds: st.binds.clone(),
                });
            }
            agenda.extend(next.into_iter().rev());
        }
        found.into_values().collect()
    }
}
