//! Phase-space primitives: points of Ξ = 𝒳 × 𝒳*, the canonical symplectic
//! form, and the uniform grids used to discretize configuration and momentum
//! space.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::symbol::SymbolExpr;

/// A function on the planar phase space `ℝ²`, the input of quantization.
pub trait PhaseFunction: Sync {
    fn eval(&self, x: f64, xi: f64) -> Result<Complex64>;

    /// Real-valued functions quantize to Hermitian matrices.
    fn is_real(&self) -> bool {
        true
    }

    /// Declared sup bound, if any.
    fn bound(&self) -> Option<f64> {
        None
    }
}

impl PhaseFunction for SymbolExpr {
    fn eval(&self, x: f64, xi: f64) -> Result<Complex64> {
        self.eval_planar(x, xi).map(|v| Complex64::new(v, 0.0))
    }

    fn bound(&self) -> Option<f64> {
        SymbolExpr::bound(self)
    }
}

impl<T: PhaseFunction + ?Sized> PhaseFunction for &T {
    fn eval(&self, x: f64, xi: f64) -> Result<Complex64> {
        (**self).eval(x, xi)
    }

    fn is_real(&self) -> bool {
        (**self).is_real()
    }

    fn bound(&self) -> Option<f64> {
        (**self).bound()
    }
}

/// Real phase function backed by a closure.
pub struct RealFn<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> PhaseFunction for RealFn<F> {
    fn eval(&self, x: f64, xi: f64) -> Result<Complex64> {
        Ok(Complex64::new((self.0)(x, xi), 0.0))
    }
}

/// Complex phase function backed by a closure.
pub struct ComplexFn<F>(pub F);

impl<F: Fn(f64, f64) -> Complex64 + Sync> PhaseFunction for ComplexFn<F> {
    fn eval(&self, x: f64, xi: f64) -> Result<Complex64> {
        Ok((self.0)(x, xi))
    }

    fn is_real(&self) -> bool {
        false
    }
}

/// A point `X = (x, ξ)` of phase space `ℝⁿ × ℝⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != xi.len() {
            return Err(Error::Dimension {
                expected: x.len().max(1),
                found: xi.len(),
            });
        }
        if x.iter().chain(xi.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("phase point has non-finite entries".into()));
        }
        Ok(PhasePoint { x, xi })
    }

    /// The one-dimensional point `(x, ξ) ∈ ℝ²`.
    pub fn planar(x: f64, xi: f64) -> Self {
        PhasePoint {
            x: vec![x],
            xi: vec![xi],
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn origin(n: usize) -> Self {
        PhasePoint {
            x: vec![0.0; n],
            xi: vec![0.0; n],
        }
    }

    pub fn add(&self, other: &PhasePoint) -> Result<PhasePoint> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(PhasePoint {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a + b).collect(),
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, s: f64) -> PhasePoint {
        PhasePoint {
            x: self.x.iter().map(|v| v * s).collect(),
            xi: self.xi.iter().map(|v| v * s).collect(),
        }
    }

    /// Euclidean norm on `ℝ²ⁿ`.
    pub fn norm(&self) -> f64 {
        self.x
            .iter()
            .chain(self.xi.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// First coordinates `(x₁, ξ₁)`, the only ones used by planar symbols.
    pub(crate) fn first_pair(&self) -> (f64, f64) {
        (self.x[0], self.xi[0])
    }
}

/// `[[X, Y]] = x·η − y·ξ` for `X = (x, ξ)`, `Y = (y, η)`.
pub fn symplectic_form(a: &PhasePoint, b: &PhasePoint) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let x_eta: f64 = a.x.iter().zip(&b.xi).map(|(x, eta)| x * eta).sum();
    let y_xi: f64 = b.x.iter().zip(&a.xi).map(|(y, xi)| y * xi).sum();
    Ok(x_eta - y_xi)
}

/// Uniform periodic grid on `[-L, L)` with `N` nodes, `N` a power of two.
///
/// The momentum grid depends on ħ: `N` nodes uniformly covering the Nyquist
/// interval `[-πħ/Δx, πħ/Δx)`, so that
/// `Σ_m exp(i (x_j - x_k) ξ_m / ħ) = N δ_jk` holds for every ħ.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    half_width: f64,
    n: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Invalid(format!(
                "grid half-width L must be positive, got {half_width}"
            )));
        }
        if !n.is_power_of_two() {
            return Err(Error::Invalid(format!(
                "grid size N must be a power of two, got {n}"
            )));
        }
        if n < 8 {
            return Err(Error::Invalid(format!("grid size N must be at least 8, got {n}")));
        }
        Ok(Grid {
            half_width,
            n,
            spacing: 2.0 * half_width / n as f64,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Half-spacing node `-L + pΔx/2`, `p ∈ [0, 2N)`. For `p = j + k` this is
    /// the midpoint `(x_j + x_k)/2`.
    pub fn midpoint(&self, p: usize) -> f64 {
        -self.half_width + 0.5 * p as f64 * self.spacing
    }

    /// Momentum-grid step `Δξ = 2πħ / (N Δx)`.
    pub fn dual_spacing(&self, hbar: f64) -> f64 {
        2.0 * PI * hbar / (self.n as f64 * self.spacing)
    }

    /// `ξ_m = (m - N/2) Δξ`, `m = 0..N`.
    pub fn dual_node(&self, m: usize, hbar: f64) -> f64 {
        (m as f64 - (self.n / 2) as f64) * self.dual_spacing(hbar)
    }

    pub fn dual_nodes(&self, hbar: f64) -> Vec<f64> {
        (0..self.n).map(|m| self.dual_node(m, hbar)).collect()
    }

    /// Default spectral resolution `4·Δx`.
    pub fn default_resolution(&self) -> f64 {
        4.0 * self.spacing
    }
}

/// Validates `(L, N)` and builds the grid.
pub fn make_grid(half_width: f64, n: usize) -> Result<Grid> {
    Grid::new(half_width, n)
}
