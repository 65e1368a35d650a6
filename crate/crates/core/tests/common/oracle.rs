//! Exhaustive generate-and-filter analyser for single-morpheme-per-tape
//! grammars whose only feature is a word-wide `measure`.
//!
//! Every lexical word is paired with every sequence of rule instances whose
//! lexical centres tile all tapes at once; a sequence survives when each
//! instance's contexts hold against the whole word and no obligatory rule
//! that matches an instance's lexical side and contexts would have written
//! a different surface.

use std::collections::{BTreeMap, BTreeSet};

use twolevel::featstruct::FeatureValue;
use twolevel::grammario::GrammarSnapshot;
use twolevel::rulebase::{Operator, Term, TwoLevelRule, BOUNDARY};

/// Lexical tapes (with boundaries) and the rule ids of one analysis.
pub type Reading = (Vec<String>, Vec<String>);

#[derive(Clone)]
struct Instance {
    rule: usize,
    lex: Vec<Vec<String>>,
    surf: Vec<String>,
}

struct Rule {
    id: String,
    obligatory: bool,
    llc: Vec<Vec<Term>>,
    lex: Vec<Vec<Term>>,
    rlc: Vec<Vec<Term>>,
    lsc: Vec<Term>,
    surf: Vec<Term>,
    rsc: Vec<Term>,
    sets: BTreeMap<String, Vec<String>>,
    measure: Option<String>,
}

fn measure_of(v: Option<&FeatureValue>) -> Option<String> {
    match v {
        Some(FeatureValue::Atom(a)) => Some(a.clone()),
        _ => None,
    }
}

fn rules(g: &GrammarSnapshot) -> Vec<Rule> {
    let mut out: Vec<Rule> = g
        .source_rules()
        .iter()
        .filter(|r| r.enabled)
        .map(|r: &TwoLevelRule| Rule {
            id: r.id.clone(),
            obligatory: r.op == Operator::Obligatory,
            llc: r.written_llc().0,
            lex: r.lex.0.clone(),
            rlc: r.rlc.0.clone(),
            lsc: r.written_lsc().0,
            surf: r.surf.0.clone(),
            rsc: r.rsc.0.clone(),
            sets: r
                .variables
                .iter()
                .map(|c| (c.var.clone(), g.sets[&c.set].members.clone()))
                .collect(),
            measure: r.features.iter().flatten().find_map(|c| measure_of(c.get("measure"))),
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

type Env = BTreeMap<String, String>;

fn vars(ts: &[Term], out: &mut BTreeSet<String>) {
    for t in ts {
        if let Term::Var(v) = t {
            out.insert(v.clone());
        }
    }
}

/// Every assignment of the rule's centre variables.
fn centre_envs(r: &Rule) -> Vec<Env> {
    let mut vs = BTreeSet::new();
    for t in &r.lex {
        vars(t, &mut vs);
    }
    vars(&r.surf, &mut vs);
    let mut envs = vec![Env::new()];
    for v in vs {
        let members = &r.sets[&v];
        envs = envs
            .into_iter()
            .flat_map(|e| {
                let v = &v;
                members.iter().map(move |m| {
                    let mut e = e.clone();
                    e.insert(v.clone(), m.clone());
                    e
                })
            })
            .collect();
    }
    envs
}

fn inst(ts: &[Term], env: &Env) -> Vec<String> {
    ts.iter()
        .map(|t| match t {
            Term::Sym(s) => s.clone(),
            Term::Var(v) => env[v].clone(),
        })
        .collect()
}

/// `pattern` against `text` symbol by symbol; unbound variables range over their set.
fn unify(pattern: &[Term], text: &[String], env: &mut Env, r: &Rule) -> bool {
    if pattern.len() != text.len() {
        return false;
    }
    for (t, s) in pattern.iter().zip(text) {
        match t {
            Term::Sym(x) => {
                if x != s {
                    return false;
                }
            }
            Term::Var(v) => match env.get(v) {
                Some(b) if b != s => return false,
                Some(_) => {}
                None => {
                    if !r.sets[v].contains(s) {
                        return false;
                    }
                    env.insert(v.clone(), s.clone());
                }
            },
        }
    }
    true
}

fn left_ok(ctx: &[Term], before: &[String], env: &mut Env, r: &Rule) -> bool {
    ctx.len() <= before.len() && unify(ctx, &before[before.len() - ctx.len()..], env, r)
}

fn right_ok(ctx: &[Term], after: &[String], env: &mut Env, r: &Rule) -> bool {
    ctx.len() <= after.len() && unify(ctx, &after[..ctx.len()], env, r)
}

struct Word<'a> {
    tapes: &'a [Vec<String>],
    surface: Vec<String>,
    // per instance: lexical offsets per tape and surface offset at its start
    starts: Vec<(Vec<usize>, usize)>,
}

/// Whether rule `r`'s lexical side and all contexts fit instance `k`,
/// with `env` extended; the centre surface is not consulted.
fn fits(r: &Rule, w: &Word, k: usize, inst_: &Instance, env: &mut Env) -> bool {
    let (lo, so) = &w.starts[k];
    for (i, tape) in w.tapes.iter().enumerate() {
        let end = lo[i] + inst_.lex[i].len();
        if !unify(&r.lex[i], &inst_.lex[i], env, r)
            || !left_ok(&r.llc[i], &tape[..lo[i]], env, r)
            || !right_ok(&r.rlc[i], &tape[end..], env, r)
        {
            return false;
        }
    }
    let send = so + inst_.surf.len();
    left_ok(&r.lsc, &w.surface[..*so], env, r) && right_ok(&r.rsc, &w.surface[send..], env, r)
}

fn survives(rs: &[Rule], w: &Word, seq: &[Instance], measure: &str) -> bool {
    for (k, x) in seq.iter().enumerate() {
        let own = &rs[x.rule];
        if own.measure.as_deref().is_some_and(|m| m != measure) {
            return false;
        }
        // contexts of the rule that licensed the instance
        let ok = centre_envs(own).into_iter().any(|mut env| {
            inst(&own.surf, &env) == x.surf && fits(own, w, k, x, &mut env)
        });
        if !ok {
            return false;
        }
        // coercion by every other obligatory rule
        for r in rs.iter().filter(|r| r.obligatory) {
            if r.measure.as_deref().is_some_and(|m| m != measure) {
                continue;
            }
            if r.lex.len() != x.lex.len() || r.lex.iter().zip(&x.lex).any(|(p, t)| p.len() != t.len()) {
                continue;
            }
            let mut env = Env::new();
            if !fits(r, w, k, x, &mut env) {
                continue;
            }
            let mut e2 = env.clone();
            if !unify(&r.surf, &x.surf, &mut e2, r) {
                return false;
            }
        }
    }
    true
}

fn tilings(rs: &[Rule], tapes: &[Vec<String>], pos: Vec<usize>, acc: &mut Vec<Instance>, out: &mut Vec<Vec<Instance>>) {
    if pos.iter().zip(tapes).all(|(p, t)| *p == t.len()) {
        out.push(acc.clone());
        return;
    }
    for (ri, r) in rs.iter().enumerate() {
        assert!(r.lex.iter().any(|t| !t.is_empty()), "rule {} consumes nothing", r.id);
        for env in centre_envs(r) {
            let lex: Vec<Vec<String>> = r.lex.iter().map(|t| inst(t, &env)).collect();
            let fits = lex.iter().enumerate().all(|(i, l)| {
                pos[i] + l.len() <= tapes[i].len() && tapes[i][pos[i]..pos[i] + l.len()] == l[..]
            });
            if !fits {
                continue;
            }
            let next: Vec<usize> = pos.iter().zip(&lex).map(|(p, l)| p + l.len()).collect();
            acc.push(Instance { rule: ri, lex, surf: inst(&r.surf, &env) });
            tilings(rs, tapes, next, acc, out);
            acc.pop();
        }
    }
}

/// Surface string to the set of its readings.
pub fn analyses(g: &GrammarSnapshot) -> BTreeMap<String, BTreeSet<Reading>> {
    let rs = rules(g);
    let mut per_tape: Vec<Vec<(Vec<String>, Option<String>)>> = vec![Vec::new(); g.tapes];
    for w in &g.words {
        let mut syms = w.symbols.clone();
        syms.push(BOUNDARY.to_string());
        per_tape[w.tape - 1].push((syms, measure_of(w.category.get("measure"))));
    }
    let mut combos: Vec<Vec<(Vec<String>, Option<String>)>> = vec![Vec::new()];
    for tape in &per_tape {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                tape.iter().map(move |m| {
                    let mut c = c.clone();
                    c.push(m.clone());
                    c
                })
            })
            .collect();
    }
    let mut out: BTreeMap<String, BTreeSet<Reading>> = BTreeMap::new();
    for combo in combos {
        let fixed: BTreeSet<&String> = combo.iter().filter_map(|(_, m)| m.as_ref()).collect();
        if fixed.len() != 1 {
            continue;
        }
        let measure = fixed.into_iter().next().unwrap().clone();
        let tapes: Vec<Vec<String>> = combo.into_iter().map(|(s, _)| s).collect();
        let mut seqs = Vec::new();
        tilings(&rs, &tapes, vec![0; tapes.len()], &mut Vec::new(), &mut seqs);
        for seq in seqs {
            let surface: Vec<String> = seq.iter().flat_map(|x| x.surf.clone()).collect();
            let mut starts = Vec::new();
            let (mut lo, mut so) = (vec![0; tapes.len()], 0);
            for x in &seq {
                starts.push((lo.clone(), so));
                for (i, l) in x.lex.iter().enumerate() {
                    lo[i] += l.len();
                }
                so += x.surf.len();
            }
            let w = Word { tapes: &tapes, surface, starts };
            if survives(&rs, &w, &seq, &measure) {
                let lexical = tapes.iter().map(|t| t.concat()).collect();
                let ids = seq.iter().map(|x| rs[x.rule].id.clone()).collect();
                out.entry(w.surface.concat()).or_default().insert((lexical, ids));
            }
        }
    }
    out
}

/// All strings over `alphabet` up to `max` symbols.
pub fn strings(alphabet: &[String], max: usize) -> Vec<String> {
    let mut all = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..max {
        layer = layer
            .iter()
            .flat_map(|p| alphabet.iter().map(move |a| format!("{p}{a}")))
            .collect();
        all.extend(layer.iter().cloned());
    }
    all
}
