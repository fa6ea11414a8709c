//! Exact symbolic kernel: rational-function expressions over named symbols.

mod expr;
mod parse;
mod poly;
mod table;

pub use expr::{Expr, ExprDisplay, SubstError};
pub use parse::{parse_expr, ParseError};
pub use poly::{gcd, Monomial, Poly, Var};
pub use table::{is_identifier, Symbol, SymbolError, SymbolKind, SymbolTable};

pub(crate) use poly::to_f64;
