pub mod analysis;
pub mod backend;
pub mod cli;
pub mod definition;
pub mod error;
pub mod finite_system;
pub mod operator;
pub mod scalar;
pub mod shift_system;
pub mod weights;
