//! Flat PATR-style feature categories and their unification.
//!
//! A category is a symbol plus a map from attribute names to values. Values
//! are atoms, variables, disjunctions (`a|b`) or conjunctions (`a&b&c`).
//! Unification never mutates its inputs; it returns an extended [`Bindings`]
//! store, so every search branch can keep its own copy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

/// Attribute names that denote the bar level of a category.
const BAR_ALIASES: &[&str] = &["bar", "X̄", "Xbar", "xbar"];

/// Canonical spelling of an attribute name.
pub fn canonical_attr(name: &str) -> &str {
    if BAR_ALIASES.contains(&name) {
        "bar"
    } else {
        name
    }
}

/// True for identifiers that denote variables (uppercase initial).
pub fn is_variable_name(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_uppercase())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Atom(String),
    Variable(String),
    Disjunction(BTreeSet<String>),
    Conjunction(Vec<String>),
}

impl FeatureValue {
    pub fn atom(s: impl Into<String>) -> Self {
        FeatureValue::Atom(s.into())
    }

    pub fn var(s: impl Into<String>) -> Self {
        FeatureValue::Variable(s.into())
    }

    /// Builds a disjunction, collapsing to an atom when only one distinct
    /// member remains. Returns `None` for an empty member set.
    pub fn disjunction<I, S>(members: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = members.into_iter().map(Into::into).collect();
        match set.len() {
            0 => None,
            1 => set.into_iter().next().map(FeatureValue::Atom),
            _ => Some(FeatureValue::Disjunction(set)),
        }
    }

    pub fn conjunction<I, S>(members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let seq: Vec<String> = members.into_iter().map(Into::into).collect();
        if seq.len() == 1 {
            FeatureValue::Atom(seq.into_iter().next().unwrap())
        } else {
            FeatureValue::Conjunction(seq)
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, FeatureValue::Variable(_))
    }

    fn rename(&self, suffix: &str) -> Self {
        match self {
            FeatureValue::Variable(v) => FeatureValue::Variable(format!("{v}_{suffix}")),
            other => other.clone(),
        }
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::Atom(a) | FeatureValue::Variable(a) => f.write_str(a),
            FeatureValue::Disjunction(set) => {
                let parts: Vec<&str> = set.iter().map(String::as_str).collect();
                f.write_str(&parts.join("|"))
            }
            FeatureValue::Conjunction(seq) => f.write_str(&seq.join("&")),
        }
    }
}

/// Substitution store mapping variable names to values.
///
/// A variable may be bound to another variable (aliasing) or to a
/// disjunction that later unifications narrow.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Bindings {
    map: BTreeMap<String, FeatureValue>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, var: &str) -> Option<&FeatureValue> {
        self.map.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &FeatureValue)> {
        self.map.iter()
    }

    /// Follows variable links. Returns the last variable in the chain (if the
    /// value was reached through one) and the final value, which is either a
    /// non-variable or an unbound variable.
    pub fn deref(&self, value: &FeatureValue) -> (Option<String>, FeatureValue) {
        let mut last_var = None;
        let mut cur = value.clone();
        while let FeatureValue::Variable(name) = &cur {
            match self.map.get(name) {
                Some(next) => {
                    last_var = Some(name.clone());
                    cur = next.clone();
                }
                None => return (Some(name.clone()), cur),
            }
        }
        (last_var, cur)
    }

    /// Fully resolved value: variables bound to a value are replaced by it.
    pub fn resolve(&self, value: &FeatureValue) -> FeatureValue {
        self.deref(value).1
    }

    fn bind(&mut self, var: String, value: FeatureValue) {
        // occurs check: a variable never ends up bound to itself
        if let FeatureValue::Variable(v) = &value {
            if *v == var {
                return;
            }
            if let (_, FeatureValue::Variable(end)) = self.deref(&value) {
                if end == var {
                    return;
                }
            }
        }
        self.map.insert(var, value);
    }

    /// All variables with their resolved values, for reporting.
    pub fn resolved(&self) -> BTreeMap<String, FeatureValue> {
        self.map
            .keys()
            .map(|k| (k.clone(), self.resolve(&FeatureValue::Variable(k.clone()))))
            .collect()
    }
}

/// Unifies two non-variable values.
fn unify_ground(a: &FeatureValue, b: &FeatureValue) -> Option<FeatureValue> {
    use FeatureValue::*;
    match (a, b) {
        (Atom(x), Atom(y)) => (x == y).then(|| a.clone()),
        (Atom(x), Disjunction(set)) | (Disjunction(set), Atom(x)) => {
            set.contains(x).then(|| Atom(x.clone()))
        }
        (Disjunction(s), Disjunction(t)) => {
            FeatureValue::disjunction(s.intersection(t).cloned())
        }
        (Conjunction(x), Conjunction(y)) => (x == y).then(|| a.clone()),
        _ => None,
    }
}

/// Unifies two values under `binds`, returning the extended bindings and the
/// common value. `None` means the values do not unify.
pub fn unify_value(
    a: &FeatureValue,
    b: &FeatureValue,
    binds: &Bindings,
) -> Option<(Bindings, FeatureValue)> {
    let (var_a, val_a) = binds.deref(a);
    let (var_b, val_b) = binds.deref(b);
    let mut out = binds.clone();
    match (&val_a, &val_b) {
        (FeatureValue::Variable(x), FeatureValue::Variable(y)) => {
            if x != y {
                out.bind(x.clone(), val_b.clone());
            }
            Some((out, val_b))
        }
        (FeatureValue::Variable(x), _) => {
            out.bind(x.clone(), val_b.clone());
            Some((out, val_b))
        }
        (_, FeatureValue::Variable(y)) => {
            out.bind(y.clone(), val_a.clone());
            Some((out, val_a))
        }
        _ => {
            let common = unify_ground(&val_a, &val_b)?;
            // narrow the variables that led here
            for var in [var_a, var_b].into_iter().flatten() {
                if binds.get(&var) != Some(&common) {
                    out.bind(var, common.clone());
                }
            }
            Some((out, common))
        }
    }
}

/// A category symbol with a feature map.
///
/// `guards` holds extra constraints on variables that arise when a source
/// term lists the same attribute twice (`measure=M,measure=p`al|pa``el`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FeatureCategory {
    pub symbol: String,
    pub features: BTreeMap<String, FeatureValue>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub guards: Vec<(String, FeatureValue)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("attribute `{attr}` of `{symbol}` has inconsistent values")]
pub struct CategoryError {
    pub symbol: String,
    pub attr: String,
}

impl FeatureCategory {
    pub fn bare(symbol: impl Into<String>) -> Self {
        FeatureCategory {
            symbol: symbol.into(),
            features: BTreeMap::new(),
            guards: Vec::new(),
        }
    }

    /// Builds a category from attribute/value pairs as written in a source
    /// term. Repeated attributes are pre-unified into one entry.
    pub fn from_pairs<I, S>(symbol: impl Into<String>, pairs: I) -> Result<Self, CategoryError>
    where
        I: IntoIterator<Item = (S, FeatureValue)>,
        S: AsRef<str>,
    {
        let symbol = symbol.into();
        let mut features: BTreeMap<String, FeatureValue> = BTreeMap::new();
        let mut guards: Vec<(String, FeatureValue)> = Vec::new();
        let mut check = Bindings::new();
        for (attr, value) in pairs {
            let attr = canonical_attr(attr.as_ref()).to_string();
            let err = || CategoryError {
                symbol: symbol.clone(),
                attr: attr.clone(),
            };
            match features.get(&attr).cloned() {
                None => {
                    features.insert(attr, value);
                }
                Some(existing) => {
                    let (next, common) = unify_value(&existing, &value, &check).ok_or_else(err)?;
                    check = next;
                    match (&existing, &value) {
                        (FeatureValue::Variable(v), _) => guards.push((v.clone(), value)),
                        (_, FeatureValue::Variable(v)) => {
                            guards.push((v.clone(), existing.clone()));
                            features.insert(attr, value.clone());
                        }
                        _ => {
                            features.insert(attr, common);
                        }
                    }
                }
            }
        }
        Ok(FeatureCategory {
            symbol,
            features,
            guards,
        })
    }

    pub fn with(mut self, attr: &str, value: FeatureValue) -> Self {
        self.features.insert(canonical_attr(attr).to_string(), value);
        self
    }

    pub fn get(&self, attr: &str) -> Option<&FeatureValue> {
        self.features.get(canonical_attr(attr))
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for v in self.features.values() {
            if let FeatureValue::Variable(name) = v {
                out.insert(name.clone());
            }
        }
        for (name, v) in &self.guards {
            out.insert(name.clone());
            if let FeatureValue::Variable(other) = v {
                out.insert(other.clone());
            }
        }
        out
    }

    /// Renames every variable apart by appending `_suffix`.
    pub fn rename(&self, suffix: &str) -> Self {
        FeatureCategory {
            symbol: self.symbol.clone(),
            features: self
                .features
                .iter()
                .map(|(k, v)| (k.clone(), v.rename(suffix)))
                .collect(),
            guards: self
                .guards
                .iter()
                .map(|(k, v)| (format!("{k}_{suffix}"), v.rename(suffix)))
                .collect(),
        }
    }

    /// Adds this category's guard constraints to `binds`.
    pub fn apply_guards(&self, binds: &Bindings) -> Option<Bindings> {
        let mut b = binds.clone();
        for (var, value) in &self.guards {
            b = unify_value(&FeatureValue::Variable(var.clone()), value, &b)?.0;
        }
        Some(b)
    }

    /// Substitutes bindings into the category. A variable bound to a
    /// disjunction is kept (with a guard) so that sharing survives.
    pub fn resolve(&self, binds: &Bindings) -> FeatureCategory {
        let binds = self.apply_guards(binds).unwrap_or_else(|| binds.clone());
        let mut guards = Vec::new();
        let features = self
            .features
            .iter()
            .map(|(k, v)| {
                let (last_var, val) = binds.deref(v);
                let out = match (&last_var, &val) {
                    (Some(var), FeatureValue::Disjunction(_)) => {
                        if !guards.iter().any(|(g, _): &(String, FeatureValue)| g == var) {
                            guards.push((var.clone(), val.clone()));
                        }
                        FeatureValue::Variable(var.clone())
                    }
                    _ => val,
                };
                (k.clone(), out)
            })
            .collect();
        FeatureCategory {
            symbol: self.symbol.clone(),
            features,
            guards,
        }
    }

    /// The `bar` attribute as an integer, if present and ground.
    pub fn bar_level(&self) -> Option<i64> {
        match self.get("bar") {
            Some(FeatureValue::Atom(a)) => a.parse().ok(),
            _ => None,
        }
    }
}

impl fmt::Display for FeatureCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:[", self.symbol)?;
        let mut first = true;
        for (k, v) in &self.features {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{k}={v}")?;
            if let FeatureValue::Variable(var) = v {
                for (g, gv) in &self.guards {
                    if g == var {
                        write!(f, ",{k}={gv}")?;
                    }
                }
            }
        }
        f.write_str("]")
    }
}

/// Unifies two categories. Symbols must match; shared attributes must
/// unify; attributes present on one side only are unconstrained.
pub fn unify_category(
    a: &FeatureCategory,
    b: &FeatureCategory,
    binds: &Bindings,
) -> Option<Bindings> {
    if a.symbol != b.symbol {
        return None;
    }
    let mut out = a.apply_guards(binds)?;
    out = b.apply_guards(&out)?;
    for (attr, va) in &a.features {
        if let Some(vb) = b.features.get(attr) {
            out = unify_value(va, vb, &out)?.0;
        }
    }
    Some(out)
}
