//! Exact probabilistic opacity measures for finite probabilistic automata.

pub mod algebra;
pub mod automaton;
pub mod dfa;
pub mod observation;
pub mod prob;
pub mod product;
pub mod regex;
pub mod measures;
pub mod models;
pub mod sched;
pub mod oracle;
pub mod cli;
