//! Laws of birth, death and birth-death processes time-changed by Lévy
//! subordinators, evaluated analytically and by Monte Carlo.

pub mod bernstein;
pub mod cli;
pub mod config;
pub mod error;
pub mod montecarlo;
pub mod expr;
pub mod birth;
pub mod birthdeath;
pub mod death;
pub mod differences;
pub mod numerics;
pub mod process;
pub mod table;

pub use bernstein::{BernsteinFunction, LevyMeasure};
pub use error::{Error, Estimate, Result, Warning};
