//! Tree spanners restricted to v-concentrated spanning trees: reduction
//! graphs built from 3-CNF formulas, witness tree 7-spanners, assignment
//! extraction, and brute-force oracles for small graphs.

pub mod cnf;
mod dsu;
pub mod graph;
pub mod reduction;
pub mod witness;
pub mod oracles;
pub mod decider;
