mod common;

use common::{analyze, grammar};
use twolevel::featstruct::FeatureValue;
use twolevel::wordgrammar::ParseTree;

// The trees as drawn, with the pattern written cvcvc.
const ETKTEB: &str = "(stem:[bar=-1] (reflexive ʼet) \
    (stem:[bar=-2] (pattern cvcvc) (root ktb) (vocalism ae)))";
const NETKATBUN: &str = "(stem:[bar=0] (vim ne) \
    (stem:[bar=-1] (reflexive ʼet) \
    (stem:[bar=-2] (pattern cvcvc) (root ktb) (vocalism aa))) \
    (vim un))";

fn drawn(t: &ParseTree) -> String {
    t.skeleton().replace("c1", "c").replace("c2", "c").replace("c3", "c")
}

fn trees(word: &str) -> Vec<ParseTree> {
    let g = grammar("syriac.mtg");
    analyze(&g, word)
        .into_iter()
        .map(|r| r.parse.expect("parse tree"))
        .collect()
}

fn find<'a>(t: &'a ParseTree, symbol: &str) -> Vec<&'a ParseTree> {
    t.nodes().into_iter().filter(|n| n.category.symbol == symbol).collect()
}

#[test]
fn reflexive_stem() {
    let ts = trees("ʼetkteb");
    assert_eq!(ts.len(), 1);
    let top = &ts[0];
    assert_eq!(top.skeleton().split(' ').next(), Some("(stem:[bar=0]"));
    assert_eq!(top.children.len(), 1);
    assert_eq!(drawn(&top.children[0]), ETKTEB);
    assert_eq!(
        top.category.get("mood"),
        Some(&FeatureValue::Atom("pass".into()))
    );
}

#[test]
fn circumfixed_stem() {
    let ts = trees("netkatbun");
    assert!(!ts.is_empty());
    assert!(ts.iter().any(|t| drawn(t) == NETKATBUN));
    for t in &ts {
        let shape = drawn(t).replace("(vocalism ae)", "(vocalism aa)");
        assert_eq!(shape, NETKATBUN);
        let vims = find(t, "vim");
        assert_eq!(vims.len(), 2);
        let npg: Vec<_> = vims.iter().map(|v| v.category.get("npg").cloned()).collect();
        assert!(npg[0].is_some());
        assert_eq!(npg[0], npg[1]);
        assert_eq!(t.category.get("npg").cloned(), npg[0]);
        assert_eq!(vims[0].category.get("type"), Some(&FeatureValue::Atom("pref".into())));
        assert_eq!(vims[1].category.get("type"), Some(&FeatureValue::Atom("suff".into())));
    }
}

#[test]
fn circumfix_halves_must_agree() {
    assert!(trees("netkatben").is_empty());
    assert!(trees("ʼetkatbun").is_empty());
}

#[test]
fn bar_levels_descend() {
    for t in trees("netkatbun").iter().chain(trees("ʼetkteb").iter()) {
        for n in t.nodes() {
            let Some(FeatureValue::Atom(b)) = n.category.get("bar") else { continue };
            let b: i32 = b.parse().unwrap();
            for c in &n.children {
                if let Some(FeatureValue::Atom(cb)) = c.category.get("bar") {
                    assert!(cb.parse::<i32>().unwrap() < b);
                }
            }
        }
    }
}
