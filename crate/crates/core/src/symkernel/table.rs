use std::collections::BTreeMap;

use serde::Serialize;

use super::poly::Var;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Position,
    Velocity,
    Acceleration,
    Momentum,
    Multiplier,
    Parameter,
    Time,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
    /// For velocities and accelerations, the position they differentiate.
    pub base: Option<Var>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymbolError {
    #[error("symbol `{0}` is already registered with a different kind")]
    KindClash(String),
    #[error("`{0}` is not a valid identifier")]
    BadName(String),
}

/// Registry of named symbols. Ids are dense and never reused, so an `Expr`
/// built against one table stays meaningful as the table grows.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    symbols: Vec<Symbol>,
    by_name: BTreeMap<String, Var>,
    derivs: BTreeMap<Var, (Var, Var)>,
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    fn insert(&mut self, name: String, kind: SymbolKind, base: Option<Var>) -> Result<Var, SymbolError> {
        if let Some(&id) = self.by_name.get(&name) {
            return if self.symbols[id as usize].kind == kind {
                Ok(id)
            } else {
                Err(SymbolError::KindClash(name))
            };
        }
        let id = self.symbols.len() as Var;
        self.by_name.insert(name.clone(), id);
        self.symbols.push(Symbol { name, kind, base });
        Ok(id)
    }

    /// Registers a plain symbol. Re-registering the same name with the same
    /// kind returns the existing id.
    pub fn add(&mut self, name: &str, kind: SymbolKind) -> Result<Var, SymbolError> {
        if !is_identifier(name) {
            return Err(SymbolError::BadName(name.to_string()));
        }
        if kind == SymbolKind::Position {
            return self.add_position(name);
        }
        self.insert(name.to_string(), kind, None)
    }

    /// Registers a position together with its `d(..)` and `dd(..)` symbols.
    pub fn add_position(&mut self, name: &str) -> Result<Var, SymbolError> {
        if !is_identifier(name) {
            return Err(SymbolError::BadName(name.to_string()));
        }
        let q = self.insert(name.to_string(), SymbolKind::Position, None)?;
        if !self.derivs.contains_key(&q) {
            let v = self.insert(format!("d({name})"), SymbolKind::Velocity, Some(q))?;
            let a = self.insert(format!("dd({name})"), SymbolKind::Acceleration, Some(q))?;
            self.derivs.insert(q, (v, a));
        }
        Ok(q)
    }

    pub fn get(&self, name: &str) -> Option<Var> {
        self.by_name.get(name).copied()
    }

    pub fn symbol(&self, v: Var) -> &Symbol {
        &self.symbols[v as usize]
    }

    pub fn name(&self, v: Var) -> &str {
        &self.symbols[v as usize].name
    }

    pub fn kind(&self, v: Var) -> SymbolKind {
        self.symbols[v as usize].kind
    }

    pub fn velocity(&self, q: Var) -> Option<Var> {
        self.derivs.get(&q).map(|d| d.0)
    }

    pub fn acceleration(&self, q: Var) -> Option<Var> {
        self.derivs.get(&q).map(|d| d.1)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &Symbol)> {
        self.symbols.iter().enumerate().map(|(i, s)| (i as Var, s))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }
}
