//! Multiplier expressions, the catalog built from them and the Λ operator.

pub mod catalog;
pub mod expr;
pub mod lambda;
pub mod region;

pub use catalog::{build_l, build_m, Catalog};
pub use expr::{Expr, ExtKind, Node};
pub use lambda::{lambda_eval, lambda_eval_composed, lambda_eval_radius, LambdaPlan, Memo};
pub use region::{eval_chi, Inner, Region};
