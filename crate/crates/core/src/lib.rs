//! Time-periodic solutions of the forced, pinned-pinned, variable-coefficient beam
//! ω²ρ(x)u_tt + (p(x)u_xx)_xx = εf(t, x, u) on [0, π].

pub mod asymptotics;
pub mod basis;
pub mod coefficients;
pub mod config;
pub mod eigensolver;
pub mod error;
pub mod fields;
pub mod forcing;
pub mod grid;
pub mod linop;
pub mod lyapunov_schmidt;
pub mod nash_moser;
pub mod report;
pub mod sieve;

pub use error::{Error, Result};
