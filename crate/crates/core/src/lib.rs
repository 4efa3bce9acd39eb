//! Weyl quantization of phase-space symbols on finite grids, with tools for
//! their spectra along group actions on state spaces.

pub mod checks;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod phase;
pub mod scenario;
pub mod spectra;
pub mod spectral_set;
pub mod symbol;
pub mod weyl;

pub use error::{Error, Result};
pub use phase::{make_grid, symplectic_form, ComplexFn, Grid, PhaseFunction, PhasePoint, RealFn};
pub use spectral_set::SpectralSet;
pub use symbol::{eval_symbol, parse_symbol, SymbolExpr};
pub use weyl::{build_op_matrix, build_op_matrix_direct, OperatorMatrix, SampledSymbol};
pub use dynamics::{ActionKind, ActionSpec, StatePoint, StateSymbol};
pub use scenario::{builtin_catalog, load_scenario, load_scenario_with, Scenario};

/// The guide in `book/`, compiled so its snippets run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/quantization.md")]
    mod quantization {}
    #[doc = include_str!("../../../book/src/moyal.md")]
    mod moyal {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/essential.md")]
    mod essential {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
