//! Graph polynomials evaluated three ways: guarded deconstruction recursions, second-order subset
//! expansions and direct enumeration oracles.

pub mod budget;
pub mod catalog;
pub mod corpus;
pub mod logic;
pub mod polyring;
pub mod recurrence;
pub mod structures;
pub mod synthesis;
pub mod translation;
