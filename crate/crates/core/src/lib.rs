#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amdahl;
pub mod ledger;
pub mod timeline;
pub mod comm;
pub mod modifiers;
pub mod dataio;
