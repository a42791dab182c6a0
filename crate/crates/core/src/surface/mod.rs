//! A small straight-line security-typed language with hosts, trust
//! assumptions, downgrades and label-polymorphic functions.

pub mod ast;
mod check;
mod parser;

pub use check::{
    check_program, check_program_with, check_source, program_contexts, CheckError, CheckKind, CheckReport, Diagnostic,
    FunctionReport, Report, SpecializationReport, VariableReport, Verdict,
};
pub use parser::parse_program;
