//! Reading, validating and printing `.mtg` grammars.

mod load;
mod print;
mod syntax;

pub use load::{
    check_cascade, load, load_file, load_str, print_snapshot, read_grammar_file, GrammarSnapshot, LoadError,
    Loaded, Word,
};
pub use print::{atom as print_atom, category as print_category, print_source, rule as print_rule};
pub use syntax::{parse_grammar, Diagnostic, GrammarSource, Item, Morpheme, Pos};
