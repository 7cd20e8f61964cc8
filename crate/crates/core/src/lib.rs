//! Monge-Ampère geometry on the 4D phase space `T*R²`.
//!
//! Expressions in `x, y, p, q` with exact differentiation, effective 2-forms
//! and their Pfaffians, generalized complex and product structures built from
//! a Monge-Ampère structure, the quadric of anticommuting combinations, and
//! Courant-bracket integrability checks.

pub mod cli;
pub mod courant;
pub mod expr;
pub mod gen;
pub mod ma;
pub mod phase;
pub mod quadric;
