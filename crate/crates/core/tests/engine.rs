mod common;

use common::*;
use twolevel::featstruct::FeatureValue;

#[test]
fn ktab_has_one_analysis() {
    let g = grammar("listing1.mtg");
    let rs = analyze(&g, "ktab");
    assert_eq!(rs.len(), 1, "{rs:#?}");
    let r = &rs[0];
    assert_eq!(r.lexical_strings(), vec!["c1vc2vc3♭", "ktb♭", "aa♭"]);
    assert_eq!(r.rule_ids(), vec!["R2", "R4", "R5", "R3", "R2", "R1"]);
    assert_eq!(
        r.morpheme("root").unwrap().category.get("measure"),
        Some(&FeatureValue::atom("p`al"))
    );
}

#[test]
fn ktab_generates_back() {
    let g = grammar("listing1.mtg");
    assert_eq!(surfaces(&generate(&g, &["c1vc2vc3#", "ktb#", "aa#"])), vec!["ktab"]);
}

#[test]
fn katab_is_coerced_away() {
    let g = grammar("listing1.mtg");
    assert!(analyze(&g, "katab").is_empty());
    let off = g.toggle_rule("R4", false).unwrap();
    assert!(!analyze(&off, "katab").is_empty());
}

#[test]
fn katteb_by_gemination() {
    let g = grammar("ktb.mtg");
    assert_eq!(surfaces(&generate(&g, &["c1vc2vc3#", "ktb#", "ae#"])), vec!["katteb"]);
    let rs = analyze(&g, "katteb");
    assert_eq!(rs.len(), 1, "{rs:#?}");
    assert!(rs[0].rule_ids().contains(&"R6"));
    assert_eq!(
        rs[0].morpheme("root").unwrap().category.get("measure"),
        Some(&FeatureValue::atom("pa``el"))
    );
}

#[test]
fn suffix_and_prefix_deletions() {
    let g = grammar("affix.mtg");
    let rs = analyze(&g, "katbeh");
    assert_eq!(rs.len(), 1, "{rs:#?}");
    assert_eq!(rs[0].lexical_strings(), vec!["c1vc2vc3♭eh♭", "ktb♭", "aa♭"]);
    assert!(rs[0].rule_ids().contains(&"R7"));
    let rs = analyze(&g, "wkatbeh");
    assert_eq!(rs.len(), 1, "{rs:#?}");
    assert_eq!(rs[0].lexical_strings(), vec!["wa♭c1vc2vc3♭eh♭", "ktb♭", "aa♭"]);
    assert!(rs[0].rule_ids().contains(&"R9"));
    assert!(analyze(&g, "wakatbeh").is_empty());
    assert!(analyze(&g, "katabeh").is_empty());
}
