//! Principals with delegation, information-flow labels over them, and
//! inference of minimum-authority labels for a small security-typed language.

pub mod delegation;
pub mod label;
pub mod oracle;
pub mod principal;
pub mod solver;
pub mod surface;
pub mod syntax;

pub use delegation::{Decider, DelegationContext, DelegationEntry};
pub use label::{Label, LabelContext, Proj};
pub use principal::{AtomName, Monomial, NormalForm, Principal};
