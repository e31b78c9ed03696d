//! Additive dimension toolkit.
//!
//! Exact computation of sumsets, representation functions, dissociativity
//! certificates, additive dimension bounds and higher energies for finite
//! sets in `Z^d` and `Z/NZ`, together with the constructive procedures
//! (dissociated peeling, asymmetric Balog–Szemerédi–Gowers, Freiman models,
//! energy decompositions) and an experiment harness that checks inequalities
//! on generated instance families.

pub mod decompose;
pub mod dissociation;
pub mod energy;
pub mod error;
pub mod groundset;
pub mod growth;
pub mod harness;
pub mod modular;
pub mod numbers;
pub mod setfile;

pub use error::{Error, Result};
pub use groundset::{Ambient, GroundSet, RepFn};

/// Default search budget in states.
pub const DEFAULT_BUDGET: u64 = 1 << 26;

/// Budget limiting exhaustive searches. `ADLAB_BUDGET` overrides the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Budget(pub u64);

impl Default for Budget {
    fn default() -> Self {
        Budget(DEFAULT_BUDGET)
    }
}

impl Budget {
    pub fn from_env() -> Self {
        std::env::var("ADLAB_BUDGET")
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Budget)
            .unwrap_or_default()
    }
}
