//! Rule toggles persisted next to the grammar file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use twolevel::grammario::{load_file, GrammarSnapshot, LoadError, Loaded};

pub type Toggles = BTreeMap<String, bool>;

pub fn sidecar(grammar: &Path) -> PathBuf {
    let mut name = grammar.as_os_str().to_owned();
    name.push(".toggles.json");
    PathBuf::from(name)
}

pub fn read(grammar: &Path) -> Result<Toggles, String> {
    let path = sidecar(grammar);
    match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display())),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Toggles::new()),
        Err(e) => Err(format!("{}: {e}", path.display())),
    }
}

pub fn write(grammar: &Path, toggles: &Toggles) -> Result<(), String> {
    let path = sidecar(grammar);
    let text = serde_json::to_string_pretty(toggles).map_err(|e| e.to_string())?;
    std::fs::write(&path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

fn apply_one(g: &GrammarSnapshot, id: &str, on: bool) -> Option<GrammarSnapshot> {
    g.toggle_rule(id, on).ok()
}

/// Applies toggles to whichever stage defines each rule.
pub fn apply(loaded: Loaded, toggles: &Toggles) -> Result<Loaded, String> {
    let mut loaded = loaded;
    for (id, &on) in toggles {
        loaded = match loaded {
            Loaded::Single(g) => match apply_one(&g, id, on) {
                Some(g) => Loaded::Single(g),
                None => return Err(format!("unknown rule {id}")),
            },
            Loaded::Cascade { front, back } => match (apply_one(&front, id, on), apply_one(&back, id, on)) {
                (None, None) => return Err(format!("unknown rule {id}")),
                (f, b) => Loaded::Cascade {
                    front: f.unwrap_or(front),
                    back: b.unwrap_or(back),
                },
            },
        };
    }
    Ok(loaded)
}

/// Why a grammar could not be opened.
pub enum OpenError {
    Load(LoadError),
    Session(String),
}

/// Relative paths missing from the working directory are looked up under
/// `TWOLEVEL_GRAMMAR_DIR`.
pub fn resolve(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os("TWOLEVEL_GRAMMAR_DIR") {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

pub fn open(path: &Path) -> Result<Loaded, OpenError> {
    let loaded = load_file(path).map_err(OpenError::Load)?;
    let toggles = read(path).map_err(OpenError::Session)?;
    apply(loaded, &toggles).map_err(OpenError::Session)
}
