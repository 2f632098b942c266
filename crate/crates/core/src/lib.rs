//! Warded Datalog± reasoning with harmless equality-generating dependencies.
//!
//! The pipeline is: parse a program ([`syntax`]), certify it statically
//! ([`analysis`]), run the relaxed warded chase over the TGDs ([`chase`]),
//! apply the EGDs to fixpoint over that result ([`egd`]), and answer queries
//! over the unified instance ([`reason`]).

pub mod analysis;
pub mod chase;
pub mod egd;
pub mod model;
pub mod reason;
pub mod syntax;
