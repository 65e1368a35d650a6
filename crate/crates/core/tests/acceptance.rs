//! One PASS/FAIL line per acceptance criterion; fails if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{analyze, fixture, generate, grammar, oracle, props, surfaces};
use num_bigint::BigInt;
use num_rational::BigRational;
use twolevel::cascade::Cascade;
use twolevel::featstruct::FeatureValue;
use twolevel::grammario::{load_file, print_snapshot, Loaded};
use twolevel::throughput::estimate;

const KTAB: [&str; 3] = ["c1vc2vc3#", "ktb#", "aa#"];
const FIRST_ANALYSIS_LIMIT: Duration = Duration::from_secs(1);
const ESTIMATE_TOLERANCE: f64 = 1e-9;
const ORACLE_MAX_LEN: usize = 6;

fn derivation() {
    let g = grammar("listing1.mtg");
    let start = Instant::now();
    let rs = analyze(&g, "ktab");
    let elapsed = start.elapsed();
    assert_eq!(rs.len(), 1);
    assert_eq!(rs[0].lexical_strings(), ["c1vc2vc3♭", "ktb♭", "aa♭"]);
    assert_eq!(
        rs[0].morpheme("root").unwrap().category.get("measure"),
        Some(&FeatureValue::atom("p`al"))
    );
    assert_eq!(surfaces(&generate(&g, &KTAB)), ["ktab"]);
    assert!(elapsed < FIRST_ANALYSIS_LIMIT, "{elapsed:?}");
}

fn gemination() {
    let g = grammar("ktb.mtg");
    let gen = generate(&g, &["c1vc2vc3#", "ktb#", "ae#"]);
    assert_eq!(surfaces(&gen), ["katteb"]);
    assert!(gen.iter().all(|r| r.rule_ids().contains(&"R6")));
    let rs = analyze(&g, "katteb");
    assert_eq!(rs.len(), 1);
    assert!(rs[0].rule_ids().contains(&"R6"));
    assert_eq!(
        rs[0].morpheme("root").unwrap().category.get("measure"),
        Some(&FeatureValue::atom("pa``el"))
    );
}

fn coercion() {
    let g = grammar("listing1.mtg");
    let off = g.toggle_rule("R4", false).unwrap();
    assert!(analyze(&g, "katab").is_empty());
    assert!(!analyze(&off, "katab").is_empty());
    for gr in [&g, &off] {
        let expected = oracle::analyses(gr);
        for w in oracle::strings(gr.surface_alphabet(), ORACLE_MAX_LEN) {
            let got: std::collections::BTreeSet<oracle::Reading> = analyze(gr, &w)
                .iter()
                .map(|r| (r.lexical_strings(), r.rule_ids().iter().map(|s| s.to_string()).collect()))
                .collect();
            assert_eq!(got, expected.get(&w).cloned().unwrap_or_default(), "{w}");
        }
    }
}

fn affixes() {
    let g = grammar("affix.mtg");
    let rs = analyze(&g, "katbeh");
    assert_eq!(rs.len(), 1);
    assert_eq!(rs[0].lexical_strings(), ["c1vc2vc3♭eh♭", "ktb♭", "aa♭"]);
    assert!(rs[0].rule_ids().contains(&"R7"));
    let rs = analyze(&g, "wkatbeh");
    assert_eq!(rs.len(), 1);
    assert_eq!(rs[0].lexical_strings(), ["wa♭c1vc2vc3♭eh♭", "ktb♭", "aa♭"]);
    assert!(rs[0].rule_ids().iter().any(|id| id.starts_with("R8_") || *id == "R9"));
    let printed = print_snapshot(&grammar("expand.mtg"));
    let golden = std::fs::read_to_string(fixture("expand_r8.golden")).unwrap();
    assert_eq!(printed.as_bytes(), golden.as_bytes());
    assert_eq!(printed.matches("% expanded from R8").count(), 4);
}

fn trees() {
    let g = grammar("syriac.mtg");
    let drawn = |w: &str| -> Vec<String> {
        analyze(&g, w)
            .iter()
            .map(|r| r.parse.as_ref().unwrap().skeleton().replace("c1", "c").replace("c2", "c").replace("c3", "c"))
            .collect()
    };
    let etkteb = drawn("ʼetkteb");
    assert_eq!(etkteb.len(), 1);
    assert!(etkteb[0].contains(
        "(stem:[bar=-1] (reflexive ʼet) (stem:[bar=-2] (pattern cvcvc) (root ktb) (vocalism ae)))"
    ));
    let expected = "(stem:[bar=0] (vim ne) (stem:[bar=-1] (reflexive ʼet) \
                 (stem:[bar=-2] (pattern cvcvc) (root ktb) (vocalism aa))) (vim un))";
    assert!(drawn("netkatbun").iter().any(|t| t == expected));
    for r in analyze(&g, "netkatbun") {
        let t = r.parse.unwrap();
        let npg: Vec<_> = t
            .nodes()
            .into_iter()
            .filter(|n| n.category.symbol == "vim")
            .map(|n| n.category.get("npg").cloned())
            .collect();
        assert_eq!(npg.len(), 2);
        assert!(npg[0].is_some() && npg[0] == npg[1]);
    }
    assert!(drawn("netkatben").is_empty());
}

fn cascade() {
    let Loaded::Cascade { front, back } = load_file(fixture("cascade.mtg")).unwrap() else {
        panic!("not a cascade")
    };
    let c = Cascade::new(&front, &back).unwrap();
    let out: Vec<String> = c.generate(&KTAB).unwrap().iter().map(|r| r.surface_string()).collect();
    assert!(out.iter().any(|s| s == "ktab"));
    assert!(out.iter().any(|s| s == "ktb"));
}

fn exact(n: usize, freqs: &[u64], t_first: (i64, i64), t_sub: (i64, i64)) -> BigRational {
    let r = |(a, b): (i64, i64)| BigRational::new(BigInt::from(a), BigInt::from(b));
    let total: BigInt = freqs.iter().map(|&f| BigInt::from(f)).sum();
    let mut num = r(t_first) * BigRational::from_integer(BigInt::from(n));
    for &f in freqs {
        num += r(t_sub) * BigRational::from_integer(BigInt::from(f) - 1);
    }
    num / BigRational::from_integer(total)
}

fn to_f64(q: &BigRational) -> f64 {
    // twelve decimal places is beyond the tolerance
    let scale = BigInt::from(10).pow(12);
    let scaled = (q * BigRational::from_integer(scale.clone())).round().to_integer();
    scaled.to_string().parse::<f64>().unwrap() / 1e12
}

fn throughput() {
    let cases: [(usize, &[u64]); 4] = [(1, &[2]), (1, &[1]), (2, &[3, 1]), (5, &[1, 4, 9, 2, 30])];
    for (n, freqs) in cases {
        let want = to_f64(&exact(n, freqs, (5324, 1000), (54, 1000)));
        let got = estimate(n, freqs, 5.324, 0.054).unwrap().sec_per_word;
        assert!(((got - want) / want).abs() < ESTIMATE_TOLERANCE, "{n} {freqs:?}: {got} vs {want}");
    }
    let p = estimate(1, &[2], 5.324, 0.054).unwrap().sec_per_word;
    assert!((p - 2.689).abs() < ESTIMATE_TOLERANCE);
}

fn properties() {
    let start = Instant::now();
    props::analysis_and_generation_invert_each_other();
    props::pairings_reconstruct_both_sides();
    props::ordering_is_a_stable_precedence_permutation();
    props::results_do_not_depend_on_rule_order();
    props::trie_agrees_with_linear_scan();
    props::follow_table_admits_every_derivation();
    props::fixtures_survive_print_and_reparse();
    assert!(start.elapsed() < Duration::from_secs(60));
}

fn main() {
    let criteria: [(&str, fn()); 8] = [
        ("derivation of ktab", derivation),
        ("gemination in katteb", gemination),
        ("obligatory deletion against exhaustive oracle", coercion),
        ("affix deletions and R8 expansion", affixes),
        ("word grammar trees", trees),
        ("vowel deletion cascade", cascade),
        ("throughput estimate", throughput),
        ("property suites", properties),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let ok = catch_unwind(AssertUnwindSafe(check)).is_ok();
        // a failing check has already printed its panic message
        println!("{} {}: {name}", if ok { "PASS" } else { "FAIL" }, i + 1);
        if !ok {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
