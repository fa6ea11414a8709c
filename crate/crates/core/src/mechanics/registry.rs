use std::collections::BTreeMap;

use super::{
    counter_term, legendre, ostrogradsky_reduce, pons_reduce, CounterTerm, FirstOrderSystem,
    LagrangianSystem,
};
use crate::error::{Error, Result};
use crate::symkernel::SymbolTable;

/// Output of a reduction path.
#[derive(Clone, Debug)]
pub struct Reduced {
    pub system: FirstOrderSystem,
    /// The order-1 Lagrangian that was Legendre transformed, if any.
    pub lagrangian: Option<LagrangianSystem>,
    pub counter_term: Option<CounterTerm>,
}

pub trait Reduction: Send + Sync {
    fn name(&self) -> &'static str;
    fn reduce(&self, sys: &LagrangianSystem, table: &mut SymbolTable) -> Result<Reduced>;
}

struct Legendre;
struct Ssok;
struct Pons;
struct CounterTermPath;

impl Reduction for Legendre {
    fn name(&self) -> &'static str {
        "legendre"
    }

    fn reduce(&self, sys: &LagrangianSystem, table: &mut SymbolTable) -> Result<Reduced> {
        Ok(Reduced {
            system: legendre(sys, table)?,
            lagrangian: Some(sys.clone()),
            counter_term: None,
        })
    }
}

impl Reduction for Ssok {
    fn name(&self) -> &'static str {
        "ssok"
    }

    fn reduce(&self, sys: &LagrangianSystem, table: &mut SymbolTable) -> Result<Reduced> {
        Ok(Reduced {
            system: ostrogradsky_reduce(sys, table)?,
            lagrangian: (sys.order == 1).then(|| sys.clone()),
            counter_term: None,
        })
    }
}

impl Reduction for Pons {
    fn name(&self) -> &'static str {
        "pons"
    }

    fn reduce(&self, sys: &LagrangianSystem, table: &mut SymbolTable) -> Result<Reduced> {
        let first = if sys.order == 2 {
            pons_reduce(sys, table)?
        } else {
            sys.clone()
        };
        Ok(Reduced {
            system: legendre(&first, table)?,
            lagrangian: Some(first),
            counter_term: None,
        })
    }
}

impl Reduction for CounterTermPath {
    fn name(&self) -> &'static str {
        "counter-term"
    }

    fn reduce(&self, sys: &LagrangianSystem, table: &mut SymbolTable) -> Result<Reduced> {
        if sys.order == 1 {
            return Legendre.reduce(sys, table);
        }
        let ct = counter_term(sys, table)?;
        Ok(Reduced {
            system: legendre(&ct.reduced, table)?,
            lagrangian: Some(ct.reduced.clone()),
            counter_term: Some(ct),
        })
    }
}

/// Reduction paths by name.
pub struct ReductionRegistry {
    paths: BTreeMap<&'static str, Box<dyn Reduction>>,
}

impl ReductionRegistry {
    pub fn empty() -> Self {
        ReductionRegistry {
            paths: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Legendre));
        r.register(Box::new(Ssok));
        r.register(Box::new(Pons));
        r.register(Box::new(CounterTermPath));
        r
    }

    pub fn register(&mut self, path: Box<dyn Reduction>) {
        self.paths.insert(path.name(), path);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.paths.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Reduction> {
        self.paths.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            Error::Input(format!(
                "unknown reduction path `{name}`; known paths: {}",
                self.names().join(", ")
            ))
        })
    }

    /// Picks `name`, or `legendre` for order 1 and `counter-term` for order 2.
    pub fn reduce(
        &self,
        name: Option<&str>,
        sys: &LagrangianSystem,
        table: &mut SymbolTable,
    ) -> Result<Reduced> {
        let name = name.unwrap_or(if sys.order == 1 { "legendre" } else { "counter-term" });
        self.get(name)?.reduce(sys, table)
    }
}

impl Default for ReductionRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
