use serde::Serialize;

use crate::chart::Role;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Identity,
    Sigma1,
    Sigma1Tilde,
    Sigma2,
    Sigma3,
    Sigma3Tilde,
}

/// A way of embedding the reduced phase space: which chart coordinates it
/// pins to constants and how many integral constants that occupies.
pub trait Embedding: Send + Sync {
    fn kind(&self) -> EmbeddingKind;
    fn name(&self) -> &'static str;
    /// Typeset symbol, e.g. `σ̃₃`.
    fn symbol(&self) -> &'static str;
    /// Whether this is the Table-1 choice for `first` first-class and
    /// `second` second-class constraints.
    fn selects(&self, first: usize, second: usize, gauge_fixing: bool) -> bool;
    fn fixes(&self, role: Role) -> bool;
    /// Integral constants occupied, with `r = F` and `s = S/2`.
    fn occupied(&self, r: usize, s: usize) -> usize;
    /// Quasi-canonical: gauge coordinates `Ξ` stay free.
    fn quasi(&self) -> bool {
        self.fixes(Role::Psi) && !self.fixes(Role::Xi)
    }
}

struct Builtin {
    kind: EmbeddingKind,
    name: &'static str,
    symbol: &'static str,
    fixed: &'static [Role],
    selects: fn(usize, usize, bool) -> bool,
    occupied: fn(usize, usize) -> usize,
}

impl Embedding for Builtin {
    fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    fn name(&self) -> &'static str {
        self.name
    }

    fn symbol(&self) -> &'static str {
        self.symbol
    }

    fn selects(&self, first: usize, second: usize, gauge_fixing: bool) -> bool {
        (self.selects)(first, second, gauge_fixing)
    }

    fn fixes(&self, role: Role) -> bool {
        self.fixed.contains(&role)
    }

    fn occupied(&self, r: usize, s: usize) -> usize {
        (self.occupied)(r, s)
    }
}

const BUILTINS: [Builtin; 6] = [
    Builtin {
        kind: EmbeddingKind::Identity,
        name: "identity",
        symbol: "id",
        fixed: &[],
        selects: |f, s, _| f == 0 && s == 0,
        occupied: |_, _| 0,
    },
    Builtin {
        kind: EmbeddingKind::Sigma1,
        name: "sigma1",
        symbol: "σ₁",
        fixed: &[Role::Xi, Role::Psi],
        selects: |f, s, g| f > 0 && s == 0 && g,
        occupied: |r, _| 2 * r,
    },
    Builtin {
        kind: EmbeddingKind::Sigma1Tilde,
        name: "sigma1_tilde",
        symbol: "σ̃₁",
        fixed: &[Role::Psi],
        selects: |f, s, g| f > 0 && s == 0 && !g,
        occupied: |r, _| r,
    },
    Builtin {
        kind: EmbeddingKind::Sigma2,
        name: "sigma2",
        symbol: "σ₂",
        fixed: &[Role::ThetaUp, Role::ThetaDown],
        selects: |f, s, _| f == 0 && s > 0,
        occupied: |_, s| 2 * s,
    },
    Builtin {
        kind: EmbeddingKind::Sigma3,
        name: "sigma3",
        symbol: "σ₃",
        fixed: &[Role::Xi, Role::Psi, Role::ThetaUp, Role::ThetaDown],
        selects: |f, s, g| f > 0 && s > 0 && g,
        occupied: |r, s| 2 * r + 2 * s,
    },
    Builtin {
        kind: EmbeddingKind::Sigma3Tilde,
        name: "sigma3_tilde",
        symbol: "σ̃₃",
        fixed: &[Role::Psi, Role::ThetaUp, Role::ThetaDown],
        selects: |f, s, g| f > 0 && s > 0 && !g,
        occupied: |r, s| r + 2 * s,
    },
];

/// Embeddings of systems with both classes that leave the second-class
/// pairs or the physical pairs unpinned; they admit no map ι.
const INVALID: [&str; 6] = [
    "sigma3_1",
    "sigma3_2",
    "sigma3_tilde_1",
    "sigma3^(1)",
    "sigma3^(2)",
    "sigma3_tilde^(1)",
];

pub struct EmbeddingRegistry {
    embeddings: Vec<Box<dyn Embedding>>,
}

impl EmbeddingRegistry {
    pub fn empty() -> Self {
        EmbeddingRegistry {
            embeddings: Vec::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        for b in BUILTINS {
            r.register(Box::new(b));
        }
        r
    }

    pub fn register(&mut self, e: Box<dyn Embedding>) {
        self.embeddings.retain(|x| x.name() != e.name());
        self.embeddings.push(e);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.embeddings.iter().map(|e| e.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Embedding> {
        if INVALID.contains(&name) {
            return Err(Error::Input(format!(
                "embedding `{name}` is not admissible: the map ι does not exist"
            )));
        }
        self.embeddings
            .iter()
            .find(|e| e.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| {
                Error::Input(format!(
                    "unknown embedding `{name}`; known embeddings: {}",
                    self.names().join(", ")
                ))
            })
    }

    pub fn select(&self, first: usize, second: usize, gauge_fixing: bool) -> Result<&dyn Embedding> {
        self.embeddings
            .iter()
            .find(|e| e.selects(first, second, gauge_fixing))
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::Internal("no embedding matches the constraint structure".into()))
    }
}

impl Default for EmbeddingRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
