//! Tokenizer and term parser for `.mtg` grammar files.
//!
//! Files are sequences of Prolog-like terms, each ending in `.`; `%` starts
//! a comment. `#` and `♭` both denote the morpheme boundary.

use std::fmt;

use serde::Serialize;

use crate::featstruct::{is_variable_name, CategoryError, FeatureCategory, FeatureValue};
use crate::rulebase::{
    ExpansionRule, LexLayout, Operator, RuleTemplate, SurfaceExpr, Term, VarConstraint, BOUNDARY,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub file: Option<std::path::PathBuf>,
    pub pos: Option<Pos>,
    pub message: String,
}

impl Diagnostic {
    pub fn at(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            file: None,
            pos: Some(pos),
            message: message.into(),
        }
    }

    pub fn in_file(mut self, path: &std::path::Path) -> Self {
        self.file.get_or_insert_with(|| path.to_path_buf());
        self
    }

    pub fn new(message: impl Into<String>) -> Self {
        Diagnostic {
            file: None,
            pos: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{}:", file.display())?;
            if self.pos.is_none() {
                f.write_str(" ")?;
            }
        }
        match self.pos {
            Some(p) => write!(f, "{p}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// A morpheme as written in a `synword` term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Morpheme {
    /// An atom such as `c1vc2vc3`, split against the tape alphabet on load.
    Atom(String),
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Item {
    Alphabet { tape: usize, symbols: Vec<String> },
    Set { id: String, members: Vec<String> },
    Rule(RuleTemplate),
    Expansion(ExpansionRule),
    /// `expand(RuleId).`
    Expand(String),
    Word { morpheme: Morpheme, category: FeatureCategory },
    SynRule { id: String, mother: FeatureCategory, daughters: Vec<FeatureCategory> },
    TapeOf { symbol: String, tape: usize },
    Start(String),
    FreeTape(usize),
    Include(String),
    Cascade { front: String, back: String },
}

/// Parsed grammar file: items in source order plus their positions.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GrammarSource {
    pub items: Vec<Item>,
    pub positions: Vec<Pos>,
}

impl GrammarSource {
    pub fn iter(&self) -> impl Iterator<Item = (&Item, Pos)> {
        self.items.iter().zip(self.positions.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Colon,
    Eq,
    Pipe,
    Amp,
    Optional,
    Obligatory,
    Boundary,
    Ident(String),
    Quoted(String),
}

fn is_delim(c: char) -> bool {
    c.is_whitespace() || "()[],.:=|&%'#♭".contains(c)
}

fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        if rest.starts_with("<=>") {
            out.push((Tok::Obligatory, pos));
            advance(3, &mut i, &mut col);
            continue;
        }
        if rest.starts_with("=>") {
            out.push((Tok::Optional, pos));
            advance(2, &mut i, &mut col);
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            ':' => Some(Tok::Colon),
            '=' => Some(Tok::Eq),
            '|' => Some(Tok::Pipe),
            '&' => Some(Tok::Amp),
            '#' | '♭' => Some(Tok::Boundary),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, pos));
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '\'' {
            let mut s = String::new();
            let mut j = i + 1;
            loop {
                match chars.get(j) {
                    None | Some('\n') => return Err(Diagnostic::at(pos, "unterminated quoted atom")),
                    Some('\'') if chars.get(j + 1) == Some(&'\'') => {
                        s.push('\'');
                        j += 2;
                    }
                    Some('\'') => {
                        j += 1;
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        j += 1;
                    }
                }
            }
            out.push((Tok::Quoted(s), pos));
            let n = j - i;
            advance(n, &mut i, &mut col);
            continue;
        }
        let start = i;
        while i < chars.len() && !is_delim(chars[i]) && !(chars[i] == '<' && chars.get(i + 1) == Some(&'=')) {
            i += 1;
        }
        if i == start {
            return Err(Diagnostic::at(pos, format!("unexpected character `{c}`")));
        }
        col += i - start;
        out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
    }
    Ok(out)
}

/// Generic term tree.
#[derive(Debug, Clone)]
enum PTerm {
    Atom { text: String, quoted: bool, pos: Pos },
    Boundary(Pos),
    Op(Operator, Pos),
    List(Vec<PTerm>, Pos),
    Compound(String, Vec<PTerm>, Pos),
    Cat(FeatureCategory, Pos),
}

impl PTerm {
    fn pos(&self) -> Pos {
        match self {
            PTerm::Atom { pos, .. }
            | PTerm::Boundary(pos)
            | PTerm::Op(_, pos)
            | PTerm::List(_, pos)
            | PTerm::Compound(_, _, pos)
            | PTerm::Cat(_, pos) => *pos,
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Pos, Diagnostic> {
        let pos = self.pos();
        match self.next() {
            Some((t, p)) if t == want => Ok(p),
            _ => Err(Diagnostic::at(pos, format!("expected {what}"))),
        }
    }

    fn value_atom(&mut self) -> Result<(String, bool), Diagnostic> {
        let pos = self.pos();
        match self.next() {
            Some((Tok::Ident(s), _)) => Ok((s, false)),
            Some((Tok::Quoted(s), _)) => Ok((s, true)),
            _ => Err(Diagnostic::at(pos, "expected a feature value")),
        }
    }

    fn feature_value(&mut self) -> Result<FeatureValue, Diagnostic> {
        let pos = self.pos();
        let (first, quoted) = self.value_atom()?;
        match self.peek() {
            Some(Tok::Pipe) => {
                let mut items = vec![first];
                while self.peek() == Some(&Tok::Pipe) {
                    self.next();
                    items.push(self.value_atom()?.0);
                }
                let distinct: std::collections::BTreeSet<&String> = items.iter().collect();
                if distinct.len() != items.len() {
                    return Err(Diagnostic::at(pos, "repeated member in disjunction"));
                }
                Ok(FeatureValue::disjunction(items).expect("nonempty"))
            }
            Some(Tok::Amp) => {
                let mut items = vec![first];
                while self.peek() == Some(&Tok::Amp) {
                    self.next();
                    items.push(self.value_atom()?.0);
                }
                Ok(FeatureValue::Conjunction(items))
            }
            _ if !quoted && is_variable_name(&first) => Ok(FeatureValue::Variable(first)),
            _ => Ok(FeatureValue::Atom(first)),
        }
    }

    fn category_body(&mut self, symbol: String, pos: Pos) -> Result<PTerm, Diagnostic> {
        self.expect(Tok::LBrack, "`[` after `:`")?;
        let mut pairs = Vec::new();
        if self.peek() != Some(&Tok::RBrack) {
            loop {
                let (attr, _) = self.value_atom()?;
                self.expect(Tok::Eq, "`=` in feature")?;
                pairs.push((attr, self.feature_value()?));
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.next();
                    }
                    _ => break,
                }
            }
        }
        self.expect(Tok::RBrack, "`]` closing feature list")?;
        let cat = FeatureCategory::from_pairs(symbol, pairs)
            .map_err(|e: CategoryError| Diagnostic::at(pos, e.to_string()))?;
        Ok(PTerm::Cat(cat, pos))
    }

    fn term(&mut self) -> Result<PTerm, Diagnostic> {
        let pos = self.pos();
        match self.next() {
            Some((Tok::Ident(s), _)) => match self.peek() {
                Some(Tok::LParen) => {
                    self.next();
                    let mut args = Vec::new();
                    if self.peek() != Some(&Tok::RParen) {
                        loop {
                            args.push(self.term()?);
                            match self.peek() {
                                Some(Tok::Comma) => {
                                    self.next();
                                }
                                _ => break,
                            }
                        }
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(PTerm::Compound(s, args, pos))
                }
                Some(Tok::Colon) => {
                    self.next();
                    self.category_body(s, pos)
                }
                _ => Ok(PTerm::Atom {
                    text: s,
                    quoted: false,
                    pos,
                }),
            },
            Some((Tok::Quoted(s), _)) => {
                if self.peek() == Some(&Tok::Colon) {
                    self.next();
                    return self.category_body(s, pos);
                }
                Ok(PTerm::Atom {
                    text: s,
                    quoted: true,
                    pos,
                })
            }
            Some((Tok::Boundary, _)) => Ok(PTerm::Boundary(pos)),
            Some((Tok::Optional, _)) => Ok(PTerm::Op(Operator::Optional, pos)),
            Some((Tok::Obligatory, _)) => Ok(PTerm::Op(Operator::Obligatory, pos)),
            Some((Tok::LBrack, _)) => {
                let mut items = Vec::new();
                if self.peek() != Some(&Tok::RBrack) {
                    loop {
                        items.push(self.term()?);
                        match self.peek() {
                            Some(Tok::Comma) => {
                                self.next();
                            }
                            _ => break,
                        }
                    }
                }
                self.expect(Tok::RBrack, "`]`")?;
                Ok(PTerm::List(items, pos))
            }
            _ => Err(Diagnostic::at(pos, "expected a term")),
        }
    }
}

fn err<T>(t: &PTerm, msg: impl Into<String>) -> Result<T, Diagnostic> {
    Err(Diagnostic::at(t.pos(), msg))
}

fn atom(t: &PTerm, what: &str) -> Result<String, Diagnostic> {
    match t {
        PTerm::Atom { text, .. } => Ok(text.clone()),
        _ => err(t, format!("expected {what}")),
    }
}

fn number(t: &PTerm, what: &str) -> Result<usize, Diagnostic> {
    atom(t, what)?
        .parse()
        .or_else(|_| err(t, format!("expected {what}")))
}

fn list<'a>(t: &'a PTerm, what: &str) -> Result<&'a [PTerm], Diagnostic> {
    match t {
        PTerm::List(items, _) => Ok(items),
        _ => err(t, format!("expected a list for {what}")),
    }
}

fn symbol(t: &PTerm) -> Result<String, Diagnostic> {
    match t {
        PTerm::Atom { text, .. } => Ok(text.clone()),
        PTerm::Boundary(_) => Ok(BOUNDARY.to_string()),
        _ => err(t, "expected a symbol"),
    }
}

fn expr_term(t: &PTerm) -> Result<Term, Diagnostic> {
    match t {
        PTerm::Atom { text, quoted: false, .. } => Ok(Term::from_ident(text)),
        PTerm::Atom { text, quoted: true, .. } => Ok(Term::Sym(text.clone())),
        PTerm::Boundary(_) => Ok(Term::Sym(BOUNDARY.to_string())),
        _ => err(t, "expected a symbol or variable"),
    }
}

fn surface(t: &PTerm) -> Result<SurfaceExpr, Diagnostic> {
    Ok(SurfaceExpr(
        list(t, "a surface expression")?
            .iter()
            .map(expr_term)
            .collect::<Result<_, _>>()?,
    ))
}

fn lex_spec(t: &PTerm) -> Result<LexLayout, Diagnostic> {
    let items = list(t, "a lexical expression")?;
    if !items.is_empty() && items.iter().all(|i| matches!(i, PTerm::List(..))) {
        let tapes = items
            .iter()
            .map(|tape| {
                list(tape, "a tape")?
                    .iter()
                    .map(expr_term)
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(LexLayout::Tapes(tapes));
    }
    Ok(LexLayout::Flat(
        items.iter().map(expr_term).collect::<Result<_, _>>()?,
    ))
}

fn lex_tapes(t: &PTerm) -> Result<crate::rulebase::LexicalExpr, Diagnostic> {
    match lex_spec(t)? {
        LexLayout::Tapes(tapes) => Ok(crate::rulebase::LexicalExpr(tapes)),
        LexLayout::Flat(_) => err(t, "expected a list of per-tape lists"),
    }
}

fn var_constraints(t: &PTerm) -> Result<Vec<VarConstraint>, Diagnostic> {
    list(t, "variables")?
        .iter()
        .map(|c| match c {
            PTerm::Compound(set, args, _) if args.len() == 1 => {
                Ok(VarConstraint::new(set, &atom(&args[0], "a variable")?))
            }
            _ => err(c, "expected set(Var)"),
        })
        .collect()
}

fn category(t: &PTerm) -> Result<FeatureCategory, Diagnostic> {
    match t {
        PTerm::Cat(c, _) => Ok(c.clone()),
        PTerm::Atom { text, .. } => Ok(FeatureCategory::bare(text.clone())),
        _ => err(t, "expected a category"),
    }
}

fn rule_features(t: &PTerm) -> Result<Vec<Option<FeatureCategory>>, Diagnostic> {
    list(t, "features")?
        .iter()
        .map(|entry| match entry {
            PTerm::List(items, _) if items.is_empty() => Ok(None),
            PTerm::List(items, _) if items.len() == 1 => category(&items[0]).map(Some),
            PTerm::Cat(c, _) => Ok(Some(c.clone())),
            _ => err(entry, "expected [] or [category] per tape"),
        })
        .collect()
}

fn convert(t: &PTerm) -> Result<Item, Diagnostic> {
    let PTerm::Compound(name, args, _) = t else {
        return err(t, "expected a clause such as tl_rule(...)");
    };
    let arity = |n: usize| -> Result<(), Diagnostic> {
        if args.len() == n {
            Ok(())
        } else {
            err(t, format!("{name} takes {n} arguments, found {}", args.len()))
        }
    };
    match name.as_str() {
        "tl_alphabet" => {
            arity(2)?;
            Ok(Item::Alphabet {
                tape: number(&args[0], "a tape number")?,
                symbols: list(&args[1], "symbols")?
                    .iter()
                    .map(symbol)
                    .collect::<Result<_, _>>()?,
            })
        }
        "tl_set" => {
            arity(2)?;
            Ok(Item::Set {
                id: atom(&args[0], "a set id")?,
                members: list(&args[1], "members")?
                    .iter()
                    .map(symbol)
                    .collect::<Result<_, _>>()?,
            })
        }
        "tl_rule" => {
            arity(10)?;
            let op = match &args[4] {
                PTerm::Op(op, _) => *op,
                other => return err(other, "expected => or <=>"),
            };
            Ok(Item::Rule(RuleTemplate {
                id: atom(&args[0], "a rule id")?,
                llc: lex_spec(&args[1])?,
                lex: lex_spec(&args[2])?,
                rlc: lex_spec(&args[3])?,
                op,
                lsc: surface(&args[5])?,
                surf: surface(&args[6])?,
                rsc: surface(&args[7])?,
                variables: var_constraints(&args[8])?,
                features: rule_features(&args[9])?,
            }))
        }
        "expand" if args.len() == 1 => Ok(Item::Expand(atom(&args[0], "a rule id")?)),
        "expand" => {
            arity(3)?;
            Ok(Item::Expansion(ExpansionRule {
                symbol: expr_term(&args[0])?,
                expansion: lex_tapes(&args[1])?,
                variables: var_constraints(&args[2])?,
            }))
        }
        "synword" => {
            arity(2)?;
            let morpheme = match &args[0] {
                PTerm::Atom { text, .. } => Morpheme::Atom(text.clone()),
                PTerm::List(items, _) => {
                    Morpheme::List(items.iter().map(symbol).collect::<Result<_, _>>()?)
                }
                other => return err(other, "expected a morpheme"),
            };
            Ok(Item::Word {
                morpheme,
                category: category(&args[1])?,
            })
        }
        "synrule" => {
            arity(3)?;
            Ok(Item::SynRule {
                id: atom(&args[0], "a rule id")?,
                mother: category(&args[1])?,
                daughters: list(&args[2], "daughters")?
                    .iter()
                    .map(category)
                    .collect::<Result<_, _>>()?,
            })
        }
        "tape_of" => {
            arity(2)?;
            Ok(Item::TapeOf {
                symbol: atom(&args[0], "a category symbol")?,
                tape: number(&args[1], "a tape number")?,
            })
        }
        "start" => {
            arity(1)?;
            Ok(Item::Start(atom(&args[0], "a category symbol")?))
        }
        "free_tape" => {
            arity(1)?;
            Ok(Item::FreeTape(number(&args[0], "a tape number")?))
        }
        "include" => {
            arity(1)?;
            Ok(Item::Include(atom(&args[0], "a path")?))
        }
        "cascade" => {
            arity(2)?;
            Ok(Item::Cascade {
                front: atom(&args[0], "a path")?,
                back: atom(&args[1], "a path")?,
            })
        }
        other => err(t, format!("unknown clause `{other}`")),
    }
}

/// Parses grammar text into its term list. Stops at the first syntax error.
pub fn parse_grammar(text: &str) -> Result<GrammarSource, Diagnostic> {
    let toks = tokenize(text)?;
    let end = Pos {
        line: text.lines().count().max(1),
        col: 1,
    };
    let mut p = Parser { toks, at: 0, end };
    let mut src = GrammarSource::default();
    while p.peek().is_some() {
        let pos = p.pos();
        let t = p.term()?;
        p.expect(Tok::Dot, "`.` ending the clause")?;
        src.items.push(convert(&t)?);
        src.positions.push(pos);
    }
    Ok(src)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_set() {
        let src = parse_grammar("tl_set(radical, [k,t,b]).").unwrap();
        assert_eq!(
            src.items,
            vec![Item::Set {
                id: "radical".into(),
                members: vec!["k".into(), "t".into(), "b".into()]
            }]
        );
    }

    #[test]
    fn empty_text_is_empty_source() {
        assert!(parse_grammar("% nothing\n").unwrap().items.is_empty());
    }

    #[test]
    fn rule_with_features_and_boundary() {
        let src = parse_grammar(
            "tl_rule(R5, [[],[],[]], [[c2],[C],[]], [[],[],[]], <=>, [], [C], [], \
             [radical(C)], [[], [root:[measure=p`al]], []]).\n\
             tl_rule(R1, [[],[],[]], [[#],[♭],[#]], [[],[],[]], =>, [], [], [], [], [[],[],[]]).",
        )
        .unwrap();
        let Item::Rule(r5) = &src.items[0] else { panic!() };
        assert_eq!(r5.op, Operator::Obligatory);
        assert_eq!(r5.features[1].as_ref().unwrap().to_string(), "root:[measure=p`al]");
        assert_eq!(r5.lex, LexLayout::Tapes(vec![vec![Term::sym("c2")], vec![Term::var("C")], vec![]]));
        let Item::Rule(r1) = &src.items[1] else { panic!() };
        assert_eq!(r1.lex, LexLayout::Tapes(vec![vec![Term::sym(BOUNDARY)]; 3]));
        assert_eq!(src.positions[1].line, 2);
    }

    #[test]
    fn categories_with_disjunction_and_conjunction() {
        let src = parse_grammar(
            "synrule(rule8, stem:[bar=0,npg=NPG], [vim:[type=pref,circum=yes,npg=s&3&m], \
             root:[measure=M,measure=p`al|pa``el]]).",
        )
        .unwrap();
        let Item::SynRule { daughters, .. } = &src.items[0] else { panic!() };
        assert_eq!(
            daughters[0].get("npg"),
            Some(&FeatureValue::Conjunction(vec!["s".into(), "3".into(), "m".into()]))
        );
        assert_eq!(daughters[1].guards.len(), 1);
    }

    #[test]
    fn quoted_atoms_escape_quotes() {
        let src = parse_grammar("synword(x, vocalism:[measure='''af`el']).").unwrap();
        let Item::Word { category, .. } = &src.items[0] else { panic!() };
        assert_eq!(category.get("measure"), Some(&FeatureValue::atom("'af`el")));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_grammar("tl_set(radical, [k,t,b])\ntl_set(x, [a]).").unwrap_err();
        assert_eq!(e.pos, Some(Pos { line: 2, col: 1 }));
        let e = parse_grammar("tl_bogus(1).").unwrap_err();
        assert!(e.message.contains("unknown clause"));
        let e = parse_grammar("tl_set(radical, [k,t,b]).\n  tl_set(x, [a)").unwrap_err();
        assert_eq!(e.pos.unwrap().line, 2);
    }

    #[test]
    fn flat_and_tape_lexical_specs() {
        let src = parse_grammar(
            "tl_rule(R8, [], [V1], [C,V2], <=>, [], [], [], [vowel(V1),vowel(V2),radical(C)], [[],[],[]]).",
        )
        .unwrap();
        let Item::Rule(r) = &src.items[0] else { panic!() };
        assert_eq!(r.llc, LexLayout::Flat(vec![]));
        assert_eq!(r.rlc, LexLayout::Flat(vec![Term::var("C"), Term::var("V2")]));
    }
}
