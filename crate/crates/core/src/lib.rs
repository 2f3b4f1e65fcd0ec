pub mod densities;
pub mod error;
pub mod grid;
pub mod posterior;
pub mod precision;
pub mod quad;
