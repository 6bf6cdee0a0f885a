pub(crate) mod basic;
pub mod conv;
pub mod signal;
