//! Text rendering of analyses.

use clap::ValueEnum;
use twolevel::cascade::CascadeResult;
use twolevel::engine::AnalysisResult;
use twolevel::wordgrammar::ParseTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreeFormat {
    Bracketed,
    Indented,
    Skeleton,
    None,
}

fn cell(symbols: &[String]) -> String {
    if symbols.is_empty() {
        "-".to_string()
    } else {
        symbols.concat()
    }
}

pub fn tree(t: &ParseTree, format: TreeFormat) -> Option<String> {
    match format {
        TreeFormat::Bracketed => Some(t.bracketed()),
        TreeFormat::Skeleton => Some(t.skeleton()),
        TreeFormat::Indented => Some(t.indented().trim_end().to_string()),
        TreeFormat::None => None,
    }
}

pub fn analysis(n: usize, r: &AnalysisResult, format: TreeFormat) -> String {
    let mut out = format!("{n}. {}\n", r.surface_string());
    out.push_str(&format!("   lexical: {}\n", r.lexical_strings().join(" / ")));
    out.push_str("   partition:\n");
    let width = r.pairings.iter().map(|p| p.rule_id.chars().count()).max().unwrap_or(0);
    for p in &r.pairings {
        let lex: Vec<String> = p.lex.iter().map(|t| cell(t)).collect();
        out.push_str(&format!(
            "     {:<width$}  {:<4} {}\n",
            p.rule_id,
            cell(&p.surf),
            lex.join(" ")
        ));
    }
    if !r.morphemes.is_empty() {
        out.push_str("   morphemes:\n");
        for m in &r.morphemes {
            out.push_str(&format!("     {} {}\n", m.morpheme, m.category));
        }
    }
    if let Some(t) = r.parse.as_ref().and_then(|t| tree(t, format)) {
        out.push_str("   tree:\n");
        for line in t.lines() {
            out.push_str(&format!("     {line}\n"));
        }
    }
    out
}

pub fn cascaded(n: usize, r: &CascadeResult, format: TreeFormat) -> String {
    let mut out = analysis(n, &r.front, format);
    out = out.replacen(
        &format!("{n}. {}\n", r.front.surface_string()),
        &format!("{n}. {} (via {})\n", r.surface_string(), r.intermediate),
        1,
    );
    out
}
