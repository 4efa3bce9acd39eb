//! Weyl quantization on a truncated periodic grid.
//!
//! For a phase function `F` the operator `Op^ħ(F)` acts by
//!
//! ```text
//! [Op^ħ(F) u](x) = (2πħ)⁻¹ ∫∫ exp(i(x-y)ξ/ħ) F((x+y)/2, ξ) u(y) dy dξ
//! ```
//!
//! On the grid `x_j = -L + jΔx` with the Nyquist momentum grid `ξ_m` the
//! `dy` and `dξ` integrals become sums, and the matrix entry (quadrature weight
//! `Δx` included) is
//!
//! ```text
//! M_jk = N⁻¹ Σ_m F((x_j+x_k)/2, ξ_m) exp(i(x_j-x_k)ξ_m/ħ).
//! ```
//!
//! Because `(x_j-x_k)ξ_m/ħ = 2π(j-k)m/N - π(j-k)`, every midpoint line
//! `p = j+k` is a single inverse DFT of the symbol along `ξ`, which gives the
//! `O(N² log N)` assembly in [`build_op_matrix`]. The grid is periodic, so
//! the midpoint of a pair is taken on the circle `[-L, L)`: pairs that are
//! closer across the seam than inside the box use the line shifted by `L`.
//! This adds one line (`2N` in total) and keeps a symbol localized at the
//! centre from coupling the two ends of the box. [`build_op_matrix_direct`]
//! evaluates the same sum literally and serves as its oracle.
//!
//! The Moyal product [`moyal_product`] works on symbols sampled over the
//! `N × N` phase grid and uses the Fourier form of the twisted product:
//! plane waves compose as
//! `e^{iK·X} # e^{iK'·X} = e^{-(iħ/2)(k_x k'_ξ - k_ξ k'_x)} e^{i(K+K')·X}`.
//! The sampled box is treated as periodic in both directions.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::phase::{Grid, PhaseFunction};

/// Default size guard for the brute-force assembly.
pub const DIRECT_MAX_N: usize = 128;

/// Matrix of `Op^ħ(F)` on a grid.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    entries: DMatrix<Complex64>,
    grid: Grid,
    hbar: f64,
    hermitian_defect: f64,
    provenance: String,
}

impl OperatorMatrix {
    pub fn from_parts(
        entries: DMatrix<Complex64>,
        grid: Grid,
        hbar: f64,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if entries.nrows() != grid.len() || entries.ncols() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                found: entries.nrows(),
            });
        }
        check_hbar(hbar)?;
        let defect = hermitian_defect(&entries);
        Ok(OperatorMatrix {
            entries,
            grid,
            hbar,
            hermitian_defect: defect,
            provenance: provenance.into(),
        })
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Largest entry of `|M - M†|` before symmetrization.
    pub fn hermitian_defect(&self) -> f64 {
        self.hermitian_defect
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn is_hermitian(&self) -> bool {
        hermitian_defect(&self.entries) == 0.0
    }

    /// Row-major CSV, one matrix row per line, each entry written as `re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in self.entries.row_iter() {
            let line: Vec<String> = row.iter().map(|z| format!("{:e},{:e}", z.re, z.im)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in j..n {
            worst = worst.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    worst
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar > 0.0 && hbar <= 1.0 {
        Ok(())
    } else {
        Err(Error::HbarRange(hbar))
    }
}

/// Midpoint lines of the pair `(j, k)` on the periodic grid.
///
/// The torus midpoint of `x_j` and `x_k` sits half the signed periodic
/// separation away from `x_k`, which is line `j + k` for pairs closer than
/// `L` and line `j + k + N (mod 2N)` for pairs that wrap. At separation
/// exactly `L` both midpoints qualify and the entry averages them.
fn torus_lines(j: usize, k: usize, n: usize) -> (usize, Option<usize>) {
    let d = 2 * j.abs_diff(k);
    let same = j + k;
    let wrapped = (j + k + n) % (2 * n);
    match d.cmp(&n) {
        std::cmp::Ordering::Less => (same, None),
        std::cmp::Ordering::Greater => (wrapped, None),
        std::cmp::Ordering::Equal => (same, Some(wrapped)),
    }
}

/// Torus midpoint of nodes `j` and `k` (see [`torus_lines`]).
fn torus_midpoints(grid: &Grid, j: usize, k: usize) -> (f64, Option<f64>) {
    let (a, b) = torus_lines(j, k, grid.len());
    (grid.midpoint(a), b.map(|b| grid.midpoint(b)))
}

/// Samples `F(mid_p, ξ_m)` for every midpoint line `p ∈ [0, 2N)`.
fn midpoint_lines<F: PhaseFunction + ?Sized>(
    f: &F,
    grid: &Grid,
    hbar: f64,
) -> Result<Vec<Vec<Complex64>>> {
    let n = grid.len();
    let xi = grid.dual_nodes(hbar);
    let bound = f.bound();
    (0..2 * n)
        .into_par_iter()
        .map(|p| {
            let x = grid.midpoint(p);
            xi.iter()
                .map(|&k| {
                    let v = f.eval(x, k)?;
                    if let Some(m) = bound {
                        if v.norm() > m * (1.0 + 1e-12) {
                            return Err(Error::Unbounded { value: v.norm(), bound: m });
                        }
                    }
                    Ok(v)
                })
                .collect()
        })
        .collect()
}

/// Fast assembly from precomputed midpoint lines.
fn assemble_from_lines(lines: &[Vec<Complex64>], n: usize) -> DMatrix<Complex64> {
    let ifft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(n);
    let scale = 1.0 / n as f64;
    let transformed: Vec<Vec<Complex64>> = lines
        .par_iter()
        .map(|line| {
            let mut buf = line.clone();
            ifft.process(&mut buf);
            buf.iter_mut().for_each(|z| *z *= scale);
            buf
        })
        .collect();
    DMatrix::from_fn(n, n, |j, k| {
        let d = (j + n - k) % n;
        let z = match torus_lines(j, k, n) {
            (a, None) => transformed[a][d],
            (a, Some(b)) => 0.5 * (transformed[a][d] + transformed[b][d]),
        };
        if (j + k) % 2 == 0 {
            z
        } else {
            -z
        }
    })
}

fn finish(
    mut entries: DMatrix<Complex64>,
    real: bool,
    grid: &Grid,
    hbar: f64,
    provenance: String,
) -> OperatorMatrix {
    let defect = hermitian_defect(&entries);
    if real {
        let adj = entries.adjoint();
        entries = (entries + adj).map(|z| z * 0.5);
    }
    OperatorMatrix {
        entries,
        grid: grid.clone(),
        hbar,
        hermitian_defect: defect,
        provenance,
    }
}

/// `Op^ħ(F)` by one inverse FFT per midpoint line, `O(N² log N)`.
///
/// Real `F` yields the Hermitian part of the assembled matrix; the defect
/// removed by symmetrization is kept in [`OperatorMatrix::hermitian_defect`].
pub fn build_op_matrix<F: PhaseFunction + ?Sized>(
    f: &F,
    grid: &Grid,
    hbar: f64,
) -> Result<OperatorMatrix> {
    check_hbar(hbar)?;
    let lines = midpoint_lines(f, grid, hbar)?;
    let entries = assemble_from_lines(&lines, grid.len());
    Ok(finish(entries, f.is_real(), grid, hbar, "fft".into()))
}

/// Brute-force assembly of the same sum, refused above [`DIRECT_MAX_N`].
pub fn build_op_matrix_direct<F: PhaseFunction + ?Sized>(
    f: &F,
    grid: &Grid,
    hbar: f64,
) -> Result<OperatorMatrix> {
    build_op_matrix_direct_limited(f, grid, hbar, DIRECT_MAX_N)
}

pub fn build_op_matrix_direct_limited<F: PhaseFunction + ?Sized>(
    f: &F,
    grid: &Grid,
    hbar: f64,
    max_n: usize,
) -> Result<OperatorMatrix> {
    check_hbar(hbar)?;
    let n = grid.len();
    if n > max_n {
        return Err(Error::Invalid(format!(
            "direct assembly refused for N={n} (limit {max_n})"
        )));
    }
    let x = grid.nodes();
    let xi = grid.dual_nodes(hbar);
    let bound = f.bound();
    let mut entries = DMatrix::zeros(n, n);
    let eval = |x: f64, m: f64| -> Result<Complex64> {
        let v = f.eval(x, m)?;
        if let Some(b) = bound {
            if v.norm() > b * (1.0 + 1e-12) {
                return Err(Error::Unbounded { value: v.norm(), bound: b });
            }
        }
        Ok(v)
    };
    for j in 0..n {
        for k in 0..n {
            let (mid, tie) = torus_midpoints(grid, j, k);
            let mut acc = Complex64::new(0.0, 0.0);
            for &m in &xi {
                let v = match tie {
                    None => eval(mid, m)?,
                    Some(other) => 0.5 * (eval(mid, m)? + eval(other, m)?),
                };
                acc += v * Complex64::from_polar(1.0, (x[j] - x[k]) * m / hbar);
            }
            entries[(j, k)] = acc / n as f64;
        }
    }
    Ok(finish(entries, f.is_real(), grid, hbar, "direct".into()))
}

/// A symbol sampled on the phase grid `x_j × ξ_m`, stored row-major in `j`.
#[derive(Clone, Debug)]
pub struct SampledSymbol {
    values: Vec<Complex64>,
    grid: Grid,
    hbar: f64,
}

impl SampledSymbol {
    pub fn sample<F: PhaseFunction + ?Sized>(f: &F, grid: &Grid, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        let x = grid.nodes();
        let xi = grid.dual_nodes(hbar);
        let rows: Result<Vec<Vec<Complex64>>> = x
            .par_iter()
            .map(|&a| xi.iter().map(|&b| f.eval(a, b)).collect())
            .collect();
        let values: Vec<Complex64> = rows?.into_iter().flatten().collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("sampled symbol has non-finite values".into()));
        }
        Ok(SampledSymbol {
            values,
            grid: grid.clone(),
            hbar,
        })
    }

    pub fn from_values(values: Vec<Complex64>, grid: &Grid, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        let n = grid.len();
        if values.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                found: values.len(),
            });
        }
        Ok(SampledSymbol {
            values,
            grid: grid.clone(),
            hbar,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at `(x_j, ξ_m)`.
    pub fn at(&self, j: usize, m: usize) -> Complex64 {
        self.values[j * self.grid.len() + m]
    }

    fn check_compatible(&self, other: &SampledSymbol) -> Result<()> {
        if self.grid != other.grid || self.hbar != other.hbar {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn zip_with(
        &self,
        other: &SampledSymbol,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<SampledSymbol> {
        self.check_compatible(other)?;
        Ok(SampledSymbol {
            values: self.values.iter().zip(&other.values).map(|(a, b)| op(*a, *b)).collect(),
            grid: self.grid.clone(),
            hbar: self.hbar,
        })
    }

    pub fn map(&self, op: impl Fn(Complex64) -> Complex64) -> SampledSymbol {
        SampledSymbol {
            values: self.values.iter().map(|a| op(*a)).collect(),
            grid: self.grid.clone(),
            hbar: self.hbar,
        }
    }

    /// Sup norm over the grid.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Sup norm over nodes with `|x| ≤ rx` and `|ξ| ≤ rxi`.
    pub fn sup_norm_within(&self, rx: f64, rxi: f64) -> f64 {
        let n = self.grid.len();
        let mut worst = 0.0f64;
        for j in 0..n {
            if self.grid.node(j).abs() > rx {
                continue;
            }
            for m in 0..n {
                if self.grid.dual_node(m, self.hbar).abs() <= rxi {
                    worst = worst.max(self.at(j, m).norm());
                }
            }
        }
        worst
    }

    /// Quantizes the sampled symbol. Odd midpoint lines fall between grid
    /// nodes and are filled by trigonometric interpolation along `x`.
    pub fn quantize(&self) -> Result<OperatorMatrix> {
        let n = self.grid.len();
        let half = self.half_shifted();
        let lines: Vec<Vec<Complex64>> = (0..2 * n)
            .map(|p| {
                let j = p / 2;
                if p % 2 == 0 {
                    self.values[j * n..(j + 1) * n].to_vec()
                } else {
                    half[j * n..(j + 1) * n].to_vec()
                }
            })
            .collect();
        let real = self.values.iter().all(|z| z.im == 0.0);
        let entries = assemble_from_lines(&lines, n);
        Ok(finish(entries, real, &self.grid, self.hbar, "sampled".into()))
    }

    /// Values at `(x_j + Δx/2, ξ_m)`.
    fn half_shifted(&self) -> Vec<Complex64> {
        let n = self.grid.len();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for m in 0..n {
            for j in 0..n {
                col[j] = self.values[j * n + m];
            }
            fwd.process(&mut col);
            for (p, c) in col.iter_mut().enumerate() {
                let s = signed(p, n);
                // The Nyquist mode has no unambiguous half shift; keep its
                // real (cosine) part.
                *c *= if 2 * s.unsigned_abs() as usize == n {
                    Complex64::new((PI * s as f64 / n as f64).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, PI * s as f64 / n as f64)
                };
            }
            inv.process(&mut col);
            for j in 0..n {
                out[j * n + m] = col[j] / n as f64;
            }
        }
        out
    }
}

/// Centered representative of a frequency index.
fn signed(p: usize, n: usize) -> i64 {
    if p < n / 2 {
        p as i64
    } else {
        p as i64 - n as i64
    }
}

/// 2-D DFT normalized so that `f_{jm} = Σ_{p,q} a_{pq} e^{2πi(pj+qm)/N}`.
fn fft2(values: &[Complex64], n: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let fwd = planner.plan_fft_forward(n);
    let mut data = values.to_vec();
    for row in data.chunks_mut(n) {
        fwd.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for q in 0..n {
        for p in 0..n {
            col[p] = data[p * n + q];
        }
        fwd.process(&mut col);
        for p in 0..n {
            data[p * n + q] = col[p];
        }
    }
    let scale = 1.0 / (n * n) as f64;
    data.iter_mut().for_each(|z| *z *= scale);
    data
}

fn ifft2(coeffs: &[Complex64], n: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let inv = planner.plan_fft_inverse(n);
    let mut data = coeffs.to_vec();
    for row in data.chunks_mut(n) {
        inv.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for q in 0..n {
        for p in 0..n {
            col[p] = data[p * n + q];
        }
        inv.process(&mut col);
        for p in 0..n {
            data[p * n + q] = col[p];
        }
    }
    data
}

/// `f #^ħ g` for the translation action, by twisted convolution of the
/// Fourier coefficients.
///
/// On the phase grid the twist `(ħ/2)(k_x k'_ξ - k_ξ k'_x)` reduces to
/// `π(p q' - q p')/N` for integer frequencies, independently of `L` and ħ.
/// The convolution over the `ξ`-frequency is done by FFT for every pair of
/// `x`-frequencies, `O(N³ log N)` in total.
pub fn moyal_product(f: &SampledSymbol, g: &SampledSymbol) -> Result<SampledSymbol> {
    f.check_compatible(g)?;
    let n = f.grid.len();
    let mut planner = FftPlanner::new();
    let a = fft2(&f.values, n, &mut planner);
    let b = fft2(&g.values, n, &mut planner);
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    // FFT along q of every row of b.
    let b_hat: Vec<Vec<Complex64>> = b
        .chunks(n)
        .map(|row| {
            let mut r = row.to_vec();
            fwd.process(&mut r);
            r
        })
        .collect();
    // e^{iπk/N}, indexed by k mod 2N.
    let twiddle: Vec<Complex64> = (0..2 * n)
        .map(|k| Complex64::from_polar(1.0, PI * k as f64 / n as f64))
        .collect();
    let tw = |k: i64| twiddle[k.rem_euclid(2 * n as i64) as usize];

    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|pp| {
            let big_p = signed(pp, n);
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            let mut alpha = vec![Complex64::new(0.0, 0.0); n];
            for p in 0..n {
                let sp = signed(p, n);
                let row_a = &a[p * n..(p + 1) * n];
                if row_a.iter().all(|z| z.norm_sqr() == 0.0) {
                    continue;
                }
                let r = (pp + n - p) % n;
                for q in 0..n {
                    let sq = signed(q, n);
                    alpha[q] = row_a[q] * tw(sq * big_p);
                }
                fwd.process(&mut alpha);
                for (z, w) in alpha.iter_mut().zip(&b_hat[r]) {
                    *z *= w;
                }
                inv.process(&mut alpha);
                for (qq, z) in alpha.iter().enumerate() {
                    let sqq = signed(qq, n);
                    acc[qq] += z * tw(-sp * sqq) / n as f64;
                }
            }
            acc
        })
        .collect();
    let c: Vec<Complex64> = rows.into_iter().flatten().collect();
    let values = ifft2(&c, n, &mut planner);
    Ok(SampledSymbol {
        values,
        grid: f.grid.clone(),
        hbar: f.hbar,
    })
}

/// `{f, g} = ∂_x f ∂_ξ g − ∂_ξ f ∂_x g` by fourth-order central differences
/// on the periodic phase grid.
///
/// With this sign `f #^ħ g = f g + (iħ/2){f, g} + O(ħ²)` and `{x, ξ} = 1`,
/// matching `[Op(x), Op(ξ)] = iħ`.
pub fn poisson_bracket(f: &SampledSymbol, g: &SampledSymbol) -> Result<SampledSymbol> {
    f.check_compatible(g)?;
    let n = f.grid.len();
    let hx = f.grid.spacing();
    let hxi = f.grid.dual_spacing(f.hbar);
    let d = |s: &SampledSymbol, j: usize, m: usize, along_x: bool| -> Complex64 {
        let at = |o: i64| {
            if along_x {
                s.at(((j as i64 + o).rem_euclid(n as i64)) as usize, m)
            } else {
                s.at(j, ((m as i64 + o).rem_euclid(n as i64)) as usize)
            }
        };
        let h = if along_x { hx } else { hxi };
        (-at(2) + at(1) * 8.0 - at(-1) * 8.0 + at(-2)) / (12.0 * h)
    };
    let mut values = Vec::with_capacity(n * n);
    for j in 0..n {
        for m in 0..n {
            values.push(d(f, j, m, true) * d(g, j, m, false) - d(f, j, m, false) * d(g, j, m, true));
        }
    }
    Ok(SampledSymbol {
        values,
        grid: f.grid.clone(),
        hbar: f.hbar,
    })
}

/// `‖(M − ζ)⁻¹‖ = 1 / dist(ζ, sp M)` for Hermitian `M`.
pub fn resolvent_norm(m: &OperatorMatrix, zeta: Complex64) -> Result<f64> {
    if zeta.im == 0.0 {
        return Err(Error::Invalid(format!(
            "resolvent needs a non-real spectral parameter, got {zeta}"
        )));
    }
    let values = crate::spectra::eigenvalues(m)?;
    let dist = values
        .iter()
        .map(|&l| (Complex64::new(l, 0.0) - zeta).norm())
        .fold(f64::INFINITY, f64::min);
    Ok(1.0 / dist)
}
