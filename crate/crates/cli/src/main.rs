//! Command-line front end: analyse, generate, toggle rules, run corpora and
//! estimate throughput.

mod batch;
mod render;
mod session;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twolevel::cascade::{Cascade, CascadeResult};
use twolevel::engine::{AnalysisResult, Engine, EngineError, EngineOptions, RuleOrder, Solutions};
use twolevel::grammario::{GrammarSnapshot, Loaded};
use twolevel::rulebase::{Direction, Operator};
use twolevel::throughput::estimate;

use batch::BatchReport;
use render::TreeFormat;
use session::OpenError;

const OK: u8 = 0;
const NO_ANALYSIS: u8 = 1;
const LOAD_ERROR: u8 = 2;
const USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "twolevel", version, about = "Multi-tape two-level morphology")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct SearchFlags {
    /// Print search trace lines to stderr.
    #[arg(long)]
    trace: bool,
    /// Print every result instead of the first.
    #[arg(long)]
    all: bool,
    #[arg(long, value_enum, default_value = "bracketed")]
    tree_format: TreeFormat,
    /// Print results as JSON.
    #[arg(long)]
    json: bool,
    /// Try rules in file order instead of by precedence.
    #[arg(long)]
    source_order: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse a surface word.
    Analyze {
        grammar: PathBuf,
        word: String,
        #[command(flatten)]
        flags: SearchFlags,
    },
    /// Generate surface forms from one lexical string per tape.
    Generate {
        grammar: PathBuf,
        #[arg(required = true)]
        lexical: Vec<String>,
        #[command(flatten)]
        flags: SearchFlags,
    },
    /// List rules or switch them on and off for later commands.
    Rules {
        grammar: PathBuf,
        #[arg(long)]
        list: bool,
        #[arg(long, value_name = "ID")]
        off: Vec<String>,
        #[arg(long, value_name = "ID")]
        on: Vec<String>,
        /// Forget all toggles.
        #[arg(long)]
        reset: bool,
    },
    /// Analyse a word list, one word per line.
    Batch {
        grammar: PathBuf,
        wordlist: PathBuf,
        /// Write per-word rows as CSV (`-` for stdout).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Seconds per word when repeated words hit a cache.
    Estimate {
        /// Distinct words; defaults to the number of frequencies.
        #[arg(long)]
        n: Option<usize>,
        /// Frequencies, comma separated.
        #[arg(long, value_delimiter = ',', required_unless_present = "freqs_file")]
        freqs: Vec<u64>,
        /// File with one frequency per line.
        #[arg(long)]
        freqs_file: Option<PathBuf>,
        #[arg(long, default_value_t = 5.324)]
        t_first: f64,
        #[arg(long, default_value_t = 0.054)]
        t_sub: f64,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("twolevel: {msg}");
    ExitCode::from(code)
}

fn open(path: &Path) -> Result<Loaded, ExitCode> {
    session::open(&session::resolve(path)).map_err(|e| match e {
        OpenError::Load(e) => fail(LOAD_ERROR, e),
        OpenError::Session(m) => fail(LOAD_ERROR, m),
    })
}

fn options(flags: &SearchFlags) -> EngineOptions {
    EngineOptions {
        order: if flags.source_order { RuleOrder::Source } else { RuleOrder::Precedence },
        trace: flags.trace,
        ..EngineOptions::default()
    }
}

/// Pulls results lazily so the trace interleaves with them.
fn collect(
    search: Result<Solutions<'_>, EngineError>,
    flags: &SearchFlags,
) -> Result<Vec<AnalysisResult>, ExitCode> {
    let mut it = search.map_err(|e| fail(USAGE, e))?;
    let mut out = Vec::new();
    loop {
        let next = it.next();
        for line in it.drain_trace() {
            eprintln!("{line}");
        }
        match next {
            Some(r) => {
                out.push(r);
                if !flags.all {
                    break;
                }
            }
            None => break,
        }
    }
    Ok(out)
}

fn print_single(rs: &[AnalysisResult], flags: &SearchFlags) -> ExitCode {
    if rs.is_empty() {
        println!("no analysis");
        return ExitCode::from(NO_ANALYSIS);
    }
    if flags.json {
        println!("{}", serde_json::to_string_pretty(rs).expect("results serialize"));
    } else {
        for (i, r) in rs.iter().enumerate() {
            print!("{}", render::analysis(i + 1, r, flags.tree_format));
        }
    }
    ExitCode::from(OK)
}

fn print_cascaded(rs: Vec<CascadeResult>, flags: &SearchFlags) -> ExitCode {
    let rs: Vec<CascadeResult> = if flags.all { rs } else { rs.into_iter().take(1).collect() };
    if rs.is_empty() {
        println!("no analysis");
        return ExitCode::from(NO_ANALYSIS);
    }
    if flags.json {
        println!("{}", serde_json::to_string_pretty(&rs).expect("results serialize"));
    } else {
        for (i, r) in rs.iter().enumerate() {
            print!("{}", render::cascaded(i + 1, r, flags.tree_format));
        }
    }
    ExitCode::from(OK)
}

fn cascade<'g>(front: &'g GrammarSnapshot, back: &'g GrammarSnapshot, flags: &SearchFlags) -> Result<Cascade<'g>, ExitCode> {
    if flags.trace {
        eprintln!("twolevel: tracing is not available through a cascade");
    }
    let opts = EngineOptions { trace: false, ..options(flags) };
    Cascade::with_options(front, back, opts).map_err(|e| fail(LOAD_ERROR, e))
}

fn analyze(grammar: &Path, word: &str, flags: &SearchFlags) -> ExitCode {
    let loaded = match open(grammar) {
        Ok(l) => l,
        Err(c) => return c,
    };
    match &loaded {
        Loaded::Single(g) => {
            let engine = Engine::with_options(g, options(flags));
            match collect(engine.analyze(word), flags) {
                Ok(rs) => print_single(&rs, flags),
                Err(c) => c,
            }
        }
        Loaded::Cascade { front, back } => match cascade(front, back, flags) {
            Ok(c) => match c.analyze(word) {
                Ok(rs) => print_cascaded(rs, flags),
                Err(e) => fail(USAGE, e),
            },
            Err(code) => code,
        },
    }
}

fn generate(grammar: &Path, lexical: &[String], flags: &SearchFlags) -> ExitCode {
    let loaded = match open(grammar) {
        Ok(l) => l,
        Err(c) => return c,
    };
    let lex: Vec<&str> = lexical.iter().map(String::as_str).collect();
    let (surfaces, code) = match &loaded {
        Loaded::Single(g) => {
            let engine = Engine::with_options(g, options(flags));
            let all = SearchFlags { all: true, ..*flags };
            match collect(engine.generate(&lex), &all) {
                Ok(rs) if flags.all || flags.json => return print_single(&rs, flags),
                Ok(rs) => (rs.iter().map(AnalysisResult::surface_string).collect::<Vec<_>>(), OK),
                Err(c) => return c,
            }
        }
        Loaded::Cascade { front, back } => match cascade(front, back, flags) {
            Ok(c) => match c.generate(&lex) {
                Ok(rs) if flags.all || flags.json => return print_cascaded(rs, flags),
                Ok(rs) => (rs.iter().map(CascadeResult::surface_string).collect(), OK),
                Err(e) => return fail(USAGE, e),
            },
            Err(code) => return code,
        },
    };
    if surfaces.is_empty() {
        println!("no analysis");
        return ExitCode::from(NO_ANALYSIS);
    }
    let mut seen = Vec::new();
    for s in surfaces {
        if !seen.contains(&s) {
            println!("{s}");
            seen.push(s);
        }
    }
    ExitCode::from(code)
}

fn rule_table(g: &GrammarSnapshot, stage: Option<&str>) {
    for r in g.rules.compiled(Direction::Analysis) {
        let op = match r.op {
            Operator::Optional => "=>",
            Operator::Obligatory => "<=>",
        };
        let state = if r.enabled { "on" } else { "off" };
        let origin = r.origin.as_deref().map(|o| format!(" (from {o})")).unwrap_or_default();
        let stage = stage.map(|s| format!("{s} ")).unwrap_or_default();
        println!("{stage}{:<8} {op:<3} {state:<3} {:06b}{origin}", r.id, r.precedence);
    }
}

fn rules(grammar: &Path, list: bool, off: &[String], on: &[String], reset: bool) -> ExitCode {
    let path = session::resolve(grammar);
    let mut toggles = if reset {
        session::Toggles::new()
    } else {
        match session::read(&path) {
            Ok(t) => t,
            Err(e) => return fail(LOAD_ERROR, e),
        }
    };
    for id in off {
        toggles.insert(id.clone(), false);
    }
    for id in on {
        toggles.insert(id.clone(), true);
    }
    let loaded = match twolevel::grammario::load_file(&path) {
        Ok(l) => l,
        Err(e) => return fail(LOAD_ERROR, e),
    };
    let loaded = match session::apply(loaded, &toggles) {
        Ok(l) => l,
        Err(e) => return fail(USAGE, e),
    };
    if reset || !off.is_empty() || !on.is_empty() {
        if let Err(e) = session::write(&path, &toggles) {
            return fail(LOAD_ERROR, e);
        }
    }
    if list || (off.is_empty() && on.is_empty() && !reset) {
        match &loaded {
            Loaded::Single(g) => rule_table(g, None),
            Loaded::Cascade { front, back } => {
                rule_table(front, Some("front"));
                rule_table(back, Some("back"));
            }
        }
    }
    ExitCode::from(OK)
}

fn batch(grammar: &Path, wordlist: &Path, csv: Option<&Path>) -> ExitCode {
    let loaded = match open(grammar) {
        Ok(l) => l,
        Err(c) => return c,
    };
    let text = match std::fs::read_to_string(wordlist) {
        Ok(t) => t,
        Err(e) => return fail(USAGE, format!("{}: {e}", wordlist.display())),
    };
    let words: Vec<String> = text.lines().map(|l| l.trim().to_string()).collect();
    let report = match &loaded {
        Loaded::Single(g) => BatchReport::run(g, &words),
        Loaded::Cascade { front, back } => match Cascade::new(front, back) {
            Ok(c) => BatchReport::run_cascade(&c, &words),
            Err(e) => return fail(LOAD_ERROR, e),
        },
    };
    let written = match csv {
        Some(p) if p == Path::new("-") => report.write_csv(std::io::stdout().lock()),
        Some(p) => match std::fs::File::create(p) {
            Ok(f) => report.write_csv(f),
            Err(e) => return fail(USAGE, format!("{}: {e}", p.display())),
        },
        None => Ok(()),
    };
    if let Err(e) = written {
        return fail(USAGE, e);
    }
    let summary = report.summary();
    if csv == Some(Path::new("-")) {
        eprint!("{summary}");
    } else {
        print!("{summary}");
    }
    ExitCode::from(OK)
}

fn estimate_cmd(n: Option<usize>, freqs: &[u64], file: Option<&Path>, t_first: f64, t_sub: f64) -> ExitCode {
    let mut freqs = freqs.to_vec();
    if let Some(p) = file {
        let text = match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return fail(USAGE, format!("{}: {e}", p.display())),
        };
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            match line.trim().parse() {
                Ok(f) => freqs.push(f),
                Err(e) => return fail(USAGE, format!("{}:{}: {e}", p.display(), i + 1)),
            }
        }
    }
    match estimate(n.unwrap_or(freqs.len()), &freqs, t_first, t_sub) {
        Ok(e) => {
            println!("sec/word: {:.9}", e.sec_per_word);
            println!("words/sec: {:.9}", e.words_per_sec);
            ExitCode::from(OK)
        }
        Err(e) => fail(USAGE, e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match &cli.command {
        Command::Analyze { grammar, word, flags } => analyze(grammar, word, flags),
        Command::Generate { grammar, lexical, flags } => generate(grammar, lexical, flags),
        Command::Rules { grammar, list, off, on, reset } => rules(grammar, *list, off, on, *reset),
        Command::Batch { grammar, wordlist, csv } => batch(grammar, wordlist, csv.as_deref()),
        Command::Estimate { n, freqs, freqs_file, t_first, t_sub } => {
            estimate_cmd(*n, freqs, freqs_file.as_deref(), *t_first, *t_sub)
        }
    };
    let _ = std::io::stdout().flush();
    code
}
