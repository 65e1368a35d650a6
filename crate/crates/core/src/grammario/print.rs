//! Canonical text for grammar sources and loaded snapshots.

use crate::featstruct::{is_variable_name, FeatureCategory, FeatureValue};
use crate::rulebase::{
    ExpansionRule, LexLayout, LexicalExpr, SurfaceExpr, Term, TwoLevelRule, VarConstraint, BOUNDARY,
};

use super::syntax::{GrammarSource, Item, Morpheme};

fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || is_variable_name(s)
        || s.contains("=>")
        || s.contains("<=")
        || s.chars().any(|c| c.is_whitespace() || "()[],.:=|&%'#♭".contains(c))
}

/// An atom, quoted when it would not read back as the same atom.
pub fn atom(s: &str) -> String {
    if needs_quotes(s) {
        format!("'{}'", s.replace('\'', "''"))
    } else {
        s.to_string()
    }
}

/// An identifier in a position where case carries no meaning.
fn ident(s: &str) -> String {
    if is_variable_name(s) && !needs_quotes(&s.to_lowercase()) {
        s.to_string()
    } else {
        atom(s)
    }
}

fn symbol(s: &str) -> String {
    if s == BOUNDARY {
        "#".to_string()
    } else {
        atom(s)
    }
}

fn term(t: &Term) -> String {
    match t {
        Term::Sym(s) => symbol(s),
        Term::Var(v) => v.clone(),
    }
}

fn terms(ts: &[Term]) -> String {
    format!("[{}]", ts.iter().map(term).collect::<Vec<_>>().join(","))
}

fn lexical(e: &LexicalExpr) -> String {
    format!("[{}]", e.0.iter().map(|t| terms(t)).collect::<Vec<_>>().join(","))
}

fn lex_spec(s: &LexLayout) -> String {
    match s {
        LexLayout::Flat(ts) => terms(ts),
        LexLayout::Tapes(tapes) => format!(
            "[{}]",
            tapes.iter().map(|t| terms(t)).collect::<Vec<_>>().join(",")
        ),
    }
}

fn surface(s: &SurfaceExpr) -> String {
    terms(&s.0)
}

fn value(v: &FeatureValue) -> String {
    match v {
        FeatureValue::Variable(x) => x.clone(),
        FeatureValue::Atom(a) => atom(a),
        FeatureValue::Disjunction(set) => set.iter().map(|a| atom(a)).collect::<Vec<_>>().join("|"),
        FeatureValue::Conjunction(seq) => seq.iter().map(|a| atom(a)).collect::<Vec<_>>().join("&"),
    }
}

/// `symbol:[attr=value,...]`, with guards as repeated attributes.
pub fn category(c: &FeatureCategory) -> String {
    let mut parts = Vec::new();
    for (k, v) in &c.features {
        parts.push(format!("{}={}", atom(k), value(v)));
        if let FeatureValue::Variable(var) = v {
            for (g, gv) in &c.guards {
                if g == var {
                    parts.push(format!("{}={}", atom(k), value(gv)));
                }
            }
        }
    }
    format!("{}:[{}]", atom(&c.symbol), parts.join(","))
}

fn constraints(vs: &[VarConstraint]) -> String {
    format!(
        "[{}]",
        vs.iter()
            .map(|c| format!("{}({})", atom(&c.set), c.var))
            .collect::<Vec<_>>()
            .join(",")
    )
}

fn features(fs: &[Option<FeatureCategory>]) -> String {
    format!(
        "[{}]",
        fs.iter()
            .map(|f| match f {
                None => "[]".to_string(),
                Some(c) => format!("[{}]", category(c)),
            })
            .collect::<Vec<_>>()
            .join(",")
    )
}

fn symbols(ss: &[String]) -> String {
    format!("[{}]", ss.iter().map(|s| symbol(s)).collect::<Vec<_>>().join(","))
}

fn expansion(e: &ExpansionRule) -> String {
    format!(
        "expand({}, {}, {}).",
        term(&e.symbol),
        lexical(&e.expansion),
        constraints(&e.variables)
    )
}

/// A compiled or source rule in written (unreversed) orientation.
pub fn rule(r: &TwoLevelRule) -> String {
    format!(
        "tl_rule({}, {}, {}, {}, {}, {}, {}, {}, {}, {}).",
        ident(&r.id),
        lexical(&r.written_llc()),
        lexical(&r.lex),
        lexical(&r.rlc),
        r.op,
        surface(&r.written_lsc()),
        surface(&r.surf),
        surface(&r.rsc),
        constraints(&r.variables),
        features(&r.features)
    )
}

fn item(it: &Item) -> String {
    match it {
        Item::Alphabet { tape, symbols: s } => format!("tl_alphabet({tape}, {}).", symbols(s)),
        Item::Set { id, members } => format!("tl_set({}, {}).", atom(id), symbols(members)),
        Item::Rule(t) => format!(
            "tl_rule({}, {}, {}, {}, {}, {}, {}, {}, {}, {}).",
            ident(&t.id),
            lex_spec(&t.llc),
            lex_spec(&t.lex),
            lex_spec(&t.rlc),
            t.op,
            surface(&t.lsc),
            surface(&t.surf),
            surface(&t.rsc),
            constraints(&t.variables),
            features(&t.features)
        ),
        Item::Expansion(e) => expansion(e),
        Item::Expand(id) => format!("expand({}).", ident(id)),
        Item::Word { morpheme, category: c } => {
            let m = match morpheme {
                Morpheme::Atom(a) => atom(a),
                Morpheme::List(l) => symbols(l),
            };
            format!("synword({m}, {}).", category(c))
        }
        Item::SynRule { id, mother, daughters } => format!(
            "synrule({}, {}, [{}]).",
            ident(id),
            category(mother),
            daughters.iter().map(category).collect::<Vec<_>>().join(", ")
        ),
        Item::TapeOf { symbol: s, tape } => format!("tape_of({}, {tape}).", atom(s)),
        Item::Start(s) => format!("start({}).", atom(s)),
        Item::FreeTape(n) => format!("free_tape({n})."),
        Item::Include(p) => format!("include({}).", atom(p)),
        Item::Cascade { front, back } => format!("cascade({}, {}).", atom(front), atom(back)),
    }
}

/// Prints a parsed source; reading the output back gives the same items.
pub fn print_source(src: &GrammarSource) -> String {
    let mut out = String::new();
    for it in &src.items {
        out.push_str(&item(it));
        out.push('\n');
    }
    out
}

pub(crate) fn print_expansion(e: &ExpansionRule) -> String {
    expansion(e)
}

pub(crate) fn print_word(symbols_: &[String], c: &FeatureCategory) -> String {
    format!("synword({}, {}).", symbols(symbols_), category(c))
}

pub(crate) fn print_item(it: &Item) -> String {
    item(it)
}

#[cfg(test)]
mod tests {
    use super::super::syntax::parse_grammar;
    use super::*;

    #[test]
    fn quoting() {
        assert_eq!(atom("k"), "k");
        assert_eq!(atom("Ab"), "'Ab'");
        assert_eq!(atom("it's"), "'it''s'");
        assert_eq!(atom(""), "''");
        assert_eq!(symbol(BOUNDARY), "#");
    }

    #[test]
    fn source_round_trip() {
        let text = "tl_alphabet(0, [k,t,b,a,'X']).\n\
                    tl_rule(R5, [[],[],[]], [[c2],[C],[]], [[],[],[]], <=>, [], [C], [], [radical(C)], [[],[root:[measure=M,measure=p`al|pa``el]],[]]).\n\
                    tl_rule(R8, [], [V1], [C,V2], <=>, [], [], [], [vowel(V1)], []).\n\
                    synword(c1vc2vc3, pattern:[measure=p`al]).\n\
                    synrule(r, stem:[bar=0], [vim:[npg=s&3&m], x:[]]).\n\
                    expand(V, [[v],[],[V]], [vowel(V)]).\nexpand(R8).\ncascade('a.mtg', 'b.mtg').\n";
        let src = parse_grammar(text).unwrap();
        let printed = print_source(&src);
        assert_eq!(parse_grammar(&printed).unwrap().items, src.items);
        assert_eq!(print_source(&parse_grammar(&printed).unwrap()), printed);
    }
}
