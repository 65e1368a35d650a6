//! Property checks shared by the property suite and the acceptance run.

use std::collections::{BTreeMap, BTreeSet};

use super::{analyze, fixture, generate, grammar};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use twolevel::engine::{AnalysisResult, Engine, EngineOptions, RuleOrder};
use twolevel::featstruct::FeatureCategory;
use twolevel::grammario::{load, parse_grammar, print_source, read_grammar_file, GrammarSnapshot, Item};
use twolevel::lexicon::{Lexicon, TapeStore};
use twolevel::rulebase::{order_rules, Direction};

pub const FIXTURE_WORDS: &[(&str, &[&str])] = &[
    ("listing1.mtg", &["ktab", "katab"]),
    ("ktb.mtg", &["ktab", "katteb"]),
    ("affix.mtg", &["ktab", "katteb", "katbeh", "wkatbeh", "wktab"]),
    ("syriac.mtg", &["ʼetkteb", "netkatbun", "ktab", "ʼaktab"]),
];

const ALL_FIXTURES: &[&str] = &[
    "listing1.mtg",
    "ktb.mtg",
    "expand.mtg",
    "affix.mtg",
    "syriac.mtg",
    "back.mtg",
    "identity.mtg",
    "cascade.mtg",
    "identity_cascade.mtg",
];

fn readings(rs: &[AnalysisResult]) -> BTreeSet<(String, Vec<String>)> {
    rs.iter().map(|r| (r.surface_string(), r.lexical_strings())).collect()
}

pub fn analysis_and_generation_invert_each_other() {
    let mut checked = 0;
    for (name, words) in FIXTURE_WORDS {
        let g = grammar(name);
        for w in *words {
            for r in analyze(&g, w) {
                checked += 1;
                let lex = r.lexical_strings();
                let lex: Vec<&str> = lex.iter().map(String::as_str).collect();
                let gen = generate(&g, &lex);
                assert!(gen.iter().any(|x| x.surface_string() == *w), "{name}: {w} from {lex:?}");
                for s in gen {
                    let back = analyze(&g, &s.surface_string());
                    assert!(
                        back.iter().any(|b| b.lexical_strings() == s.lexical_strings()),
                        "{name}: {lex:?} -> {}",
                        s.surface_string()
                    );
                }
            }
        }
    }
    assert!(checked >= 8, "only {checked} analyses exercised");
}

pub fn pairings_reconstruct_both_sides() {
    for (name, words) in FIXTURE_WORDS {
        let g = grammar(name);
        for w in *words {
            for r in analyze(&g, w) {
                let surf: String = r.pairings.iter().flat_map(|p| p.surf.iter().cloned()).collect();
                assert_eq!(surf, *w, "{name}");
                for (i, tape) in r.lexical.iter().enumerate() {
                    let lex: Vec<String> = r.pairings.iter().flat_map(|p| p.lex[i].iter().cloned()).collect();
                    assert_eq!(&lex, tape, "{name}: {w} tape {}", i + 1);
                }
                assert_eq!(r.pairings.len(), r.partition.len());
            }
        }
    }
}

pub fn ordering_is_a_stable_precedence_permutation() {
    for name in ["listing1.mtg", "affix.mtg", "syriac.mtg"] {
        let g = grammar(name);
        for d in [Direction::Analysis, Direction::Generation] {
            let compiled = g.rules.compiled(d);
            let ordered = order_rules(compiled);
            let ids = |rs: &[twolevel::rulebase::TwoLevelRule]| {
                let mut v: Vec<String> = rs.iter().map(|r| r.id.clone()).collect();
                v.sort();
                v
            };
            assert_eq!(ids(&ordered), ids(compiled));
            for pair in ordered.windows(2) {
                assert!(pair[0].precedence >= pair[1].precedence);
                if pair[0].precedence == pair[1].precedence {
                    let pos = |id: &str| compiled.iter().position(|r| r.id == id).unwrap();
                    assert!(pos(&pair[0].id) < pos(&pair[1].id));
                }
            }
        }
    }
}

fn shuffled_rules(name: &str, rng: &mut StdRng) -> GrammarSnapshot {
    let mut src = read_grammar_file(fixture(name)).unwrap();
    let slots: Vec<usize> = src
        .items
        .iter()
        .enumerate()
        .filter(|(_, it)| matches!(it, Item::Rule(_)))
        .map(|(i, _)| i)
        .collect();
    let mut rules: Vec<Item> = slots.iter().map(|&i| src.items[i].clone()).collect();
    rules.shuffle(rng);
    for (slot, item) in slots.iter().zip(rules) {
        src.items[*slot] = item;
    }
    load(&src).unwrap()
}

pub fn results_do_not_depend_on_rule_order() {
    let mut rng = StdRng::seed_from_u64(7);
    for (name, words) in FIXTURE_WORDS {
        let g = grammar(name);
        let source = EngineOptions { order: RuleOrder::Source, ..EngineOptions::default() };
        for w in *words {
            let base = readings(&analyze(&g, w));
            let by_source: Vec<_> = Engine::with_options(&g, source.clone()).analyze(w).unwrap().collect();
            assert_eq!(readings(&by_source), base, "{name}: {w}");
            for _ in 0..5 {
                let h = shuffled_rules(name, &mut rng);
                assert_eq!(readings(&analyze(&h, w)), base, "{name}: {w}");
            }
        }
    }
}

pub fn trie_agrees_with_linear_scan() {
    let alphabet: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
    let mut rng = StdRng::seed_from_u64(11);
    let random_word = |rng: &mut StdRng| -> Vec<String> {
        let len = rng.gen_range(1..=6);
        (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())].clone()).collect()
    };
    let morphemes: Vec<(Vec<String>, FeatureCategory)> = (0..1000)
        .map(|i| (random_word(&mut rng), FeatureCategory::bare(format!("m{}", i % 7))))
        .collect();
    let mut lx = Lexicon::new(vec![alphabet.clone()], &[]);
    for (m, c) in &morphemes {
        lx.insert_morpheme(1, m, c.clone()).unwrap();
    }
    let Some(TapeStore::Trie(trie)) = lx.store(1) else { panic!("tape 1 is not a trie") };
    let probes: Vec<Vec<String>> = (0..1000).map(|_| random_word(&mut rng)).collect();
    for p in morphemes.iter().map(|(m, _)| m).chain(&probes) {
        // identical entries are stored once
        let mut linear: Vec<&FeatureCategory> = Vec::new();
        for (_, c) in morphemes.iter().filter(|(m, _)| m == p) {
            if !linear.contains(&c) {
                linear.push(c);
            }
        }
        let found: Vec<&FeatureCategory> = trie.lookup(p).iter().collect();
        assert_eq!(found, linear, "{p:?}");
        // step-by-step walk agrees with lookup
        let mut node = Some(0);
        for s in p {
            node = node.and_then(|n| lx.step(1, n, s));
        }
        assert_eq!(node.map_or(0, |n| lx.accepts(1, n).len()), linear.len());
    }
}

/// Category sequences derivable from `symbol` within `depth` rule applications.
fn derive(
    rules: &BTreeMap<String, Vec<Vec<String>>>,
    lexical: &BTreeSet<String>,
    symbol: &str,
    depth: usize,
) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    if lexical.contains(symbol) {
        out.push(vec![symbol.to_string()]);
    }
    if depth == 0 {
        return out;
    }
    for daughters in rules.get(symbol).into_iter().flatten() {
        let mut partial: Vec<Vec<String>> = vec![Vec::new()];
        for d in daughters {
            let tails = derive(rules, lexical, d, depth - 1);
            partial = partial
                .iter()
                .flat_map(|p| {
                    tails.iter().map(move |t| {
                        let mut p = p.clone();
                        p.extend(t.iter().cloned());
                        p
                    })
                })
                .collect();
        }
        out.extend(partial);
    }
    out
}

pub fn follow_table_admits_every_derivation() {
    let g = grammar("syriac.mtg");
    let wg = &g.grammar;
    let mut rules: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    for r in &wg.rules {
        rules
            .entry(r.mother.symbol.clone())
            .or_default()
            .push(r.daughters.iter().map(|d| d.symbol.clone()).collect());
    }
    let lexical: BTreeSet<String> = g.words.iter().map(|w| w.category.symbol.clone()).collect();
    let mut seen = BTreeSet::new();
    for start in &wg.starts {
        for seq in derive(&rules, &lexical, start, 5) {
            if !seq.iter().all(|s| lexical.contains(s)) || !seen.insert(seq.clone()) {
                continue;
            }
            let table = &wg.follow;
            assert!(table.initial().contains(&seq[0]), "{seq:?}");
            for pair in seq.windows(2) {
                assert!(table.follow(&pair[0]).contains(&pair[1]), "{seq:?}");
            }
            assert!(table.follow(seq.last().unwrap()).eos, "{seq:?}");
        }
    }
    assert!(seen.len() >= 5, "{seen:?}");
    assert!(seen.contains(&vec![
        "vim".to_string(),
        "reflexive".into(),
        "pattern".into(),
        "root".into(),
        "vocalism".into(),
        "vim".into()
    ]));
}

pub fn fixtures_survive_print_and_reparse() {
    for name in ALL_FIXTURES {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let src = parse_grammar(&text).unwrap();
        let printed = print_source(&src);
        let again = parse_grammar(&printed).unwrap();
        assert_eq!(again.items, src.items, "{name}");
        assert_eq!(print_source(&again), printed, "{name}");
    }
}
