//! Acceptance thresholds. Every pass/fail decision in the library, the CLI
//! `--check` flag and the acceptance suite reads this one table.

/// Tolerances of the acceptance criteria, versioned as a whole.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub version: u32,
    /// `‖fast − direct‖` for quantization.
    pub oracle_equivalence: f64,
    /// Relative error of `Op(f#g)` against `Op(f)Op(g)`.
    pub morphism: f64,
    /// Minimal shrink factor of the second-order Moyal remainder when ħ halves.
    pub expansion_ratio: f64,
    /// Off-diagonal norm of a quantized multiplication symbol.
    pub multiplication_offdiag: f64,
    /// Spectra of `F` and `F∘𝒯_Z` under the translation action.
    pub orbit_equispectral: f64,
    /// Distance from sub-orbit eigenvalues to the spectrum of the generic point.
    pub spectral_inclusion: f64,
    /// Predicted essential spectrum against the truncation-stable estimate.
    pub essential: f64,
    /// Radius around the radial limit that must hold all but finitely many
    /// stable eigenvalues.
    pub vo_radius: f64,
    /// Allowed change, between ladder rungs, of the number of eigenvalues
    /// outside [`Thresholds::vo_radius`].
    pub vo_count_slack: usize,
    /// Pairwise spectral distance over base points of a minimal system.
    pub pairwise: f64,
    pub isolation_gap: f64,
    /// Edge margin for isolated-eigenvalue claims, in grid resolutions.
    pub edge_margin: f64,
    /// `d_to_classical` at the smallest ħ of a sweep.
    pub sweep_final: f64,
    /// Largest increase of `d_to_classical` from one sweep row to the next.
    pub sweep_step: f64,
    /// Ball average of a non-constant torus monomial at `R = 200`.
    pub ergodic_torus: f64,
    /// Ball average of a decaying gaussian at `R = 100`.
    pub ergodic_decay: f64,
    /// `‖fast − direct‖` bound and equivariance residual of scenario symbols.
    pub equivariance: f64,
}

pub const THRESHOLDS: Thresholds = Thresholds {
    version: 1,
    oracle_equivalence: 1e-10,
    morphism: 1e-3,
    expansion_ratio: 3.5,
    multiplication_offdiag: 1e-12,
    orbit_equispectral: 5e-2,
    spectral_inclusion: 5e-2,
    essential: 5e-2,
    vo_radius: 0.1,
    vo_count_slack: 2,
    pairwise: 5e-2,
    isolation_gap: 0.1,
    edge_margin: 2.0,
    sweep_final: 0.1,
    sweep_step: 0.02,
    ergodic_torus: 0.02,
    ergodic_decay: 1e-3,
    equivariance: 1e-10,
};

/// One evaluated check: a measured value against its threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `value ≤ bound`.
    pub fn at_most(name: &str, value: f64, bound: f64) -> Check {
        Check {
            name: name.to_string(),
            passed: value <= bound,
            detail: format!("{value:.3e} <= {bound:.1e}"),
        }
    }

    /// Passes when `value ≥ bound`.
    pub fn at_least(name: &str, value: f64, bound: f64) -> Check {
        Check {
            name: name.to_string(),
            passed: value >= bound,
            detail: format!("{value:.3e} >= {bound:.1e}"),
        }
    }

    pub fn holds(name: &str, passed: bool, detail: impl Into<String>) -> Check {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_published_tolerances() {
        let t = THRESHOLDS;
        assert_eq!(t.version, 1);
        assert_eq!(
            [t.oracle_equivalence, t.morphism, t.expansion_ratio, t.multiplication_offdiag],
            [1e-10, 1e-3, 3.5, 1e-12]
        );
        assert_eq!(
            [t.orbit_equispectral, t.spectral_inclusion, t.essential, t.vo_radius, t.pairwise],
            [5e-2, 5e-2, 5e-2, 0.1, 5e-2]
        );
        assert_eq!([t.isolation_gap, t.edge_margin, t.sweep_final, t.sweep_step], [0.1, 2.0, 0.1, 0.02]);
        assert_eq!([t.ergodic_torus, t.ergodic_decay], [0.02, 1e-3]);
        assert_eq!(t.vo_count_slack, 2);
    }

    #[test]
    fn check_rendering() {
        let c = Check::at_most("sweep final", 0.04, 0.1);
        assert!(c.passed);
        assert_eq!(c.to_string(), "PASS sweep final: 4.000e-2 <= 1.0e-1");
        assert!(!Check::at_least("ratio", 3.0, 3.5).passed);
    }
}
