//! File formats: Matrix Market (array and coordinate) and CSV tables.

pub mod matrix_market;
pub mod table;
