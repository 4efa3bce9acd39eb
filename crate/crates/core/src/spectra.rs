//! Spectral toolkit: eigenvalues, Hausdorff distance, union closure,
//! truncation-stable spectra and isolated-eigenvalue detection.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;
use num_complex::Complex64;

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::dynamics::{
    classify_kind, non_generic_suborbits, pullback_symbol, quasi_orbit_of, ActionSpec, Kind,
    QuasiOrbit, SpectrumHint, StatePoint, StateSymbol,
};
use crate::error::{Error, Result};
use crate::phase::{make_grid, Grid, PhaseFunction};
use crate::spectral_set::SpectralSet;
use crate::weyl::{build_op_matrix, OperatorMatrix};

/// Relative residual bound of the eigen-solver contract.
pub const SOLVER_TOLERANCE: f64 = 1e-8;

/// Largest multiplicity a cluster may have and still count as a finitely
/// degenerate eigenvalue. Larger clusters proxy infinite multiplicity.
pub const DEGENERACY_CAP: usize = 8;

/// All eigenvalues of a Hermitian operator matrix, ascending, with the
/// residual of every eigenpair checked against `1e-8·‖M‖`.
pub fn eigenvalues(m: &OperatorMatrix) -> Result<Vec<f64>> {
    if !m.is_hermitian() {
        return Err(Error::NonHermitian(m.hermitian_defect()));
    }
    hermitian_eigenvalues(m.entries())
}

/// [`eigenvalues`] for a bare matrix. Rejects matrices that are not
/// Hermitian up to rounding.
pub fn hermitian_eigenvalues(a: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            found: a.ncols(),
        });
    }
    let size = a.iter().fold(0.0f64, |s, z| s.max(z.norm()));
    let defect = (0..n)
        .flat_map(|j| (0..n).map(move |k| (j, k)))
        .fold(0.0f64, |s, (j, k)| s.max((a[(j, k)] - a[(k, j)].conj()).norm()));
    if defect > 1e-12 * size {
        return Err(Error::NonHermitian(defect));
    }
    let eig = SymmetricEigen::new(a.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let bound = SOLVER_TOLERANCE * scale.max(f64::MIN_POSITIVE);
    let av = a * &eig.eigenvectors;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let residual = av
            .column(k)
            .iter()
            .zip(eig.eigenvectors.column(k).iter())
            .map(|(mv, v)| (mv - v * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if !(residual <= bound) && residual > f64::EPSILON {
            return Err(Error::SolverResidual { residual, bound });
        }
    }
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Spectrum of `M` at the grid's default resolution.
pub fn eigen_spectrum(m: &OperatorMatrix) -> Result<SpectralSet> {
    SpectralSet::new(eigenvalues(m)?, m.grid().default_resolution())
}

fn directed(a: &SpectralSet, b: &SpectralSet) -> f64 {
    a.values()
        .iter()
        .map(|&v| b.distance_to(v))
        .fold(0.0, f64::max)
}

/// Hausdorff distance `max(sup_a d(a,B), sup_b d(b,A))`.
pub fn hausdorff(a: &SpectralSet, b: &SpectralSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("hausdorff needs non-empty sets"));
    }
    Ok(directed(a, b).max(directed(b, a)))
}

/// Sorted union at the coarsest resolution among the parts.
pub fn union_closure(parts: &[SpectralSet]) -> Result<SpectralSet> {
    if parts.is_empty() {
        return Err(Error::Empty("union_closure needs at least one part"));
    }
    let resolution = parts.iter().map(SpectralSet::resolution).fold(0.0, f64::max);
    let values = parts.iter().flat_map(|p| p.values().iter().copied()).collect();
    SpectralSet::new(values, resolution)
}

/// Values in `window` whose nearest distinct neighbour is farther than
/// `gap`. Values within the set's resolution form one cluster; clusters
/// with more than [`DEGENERACY_CAP`] members are not isolated.
pub fn isolated_eigenvalues(s: &SpectralSet, gap: f64, window: (f64, f64)) -> Result<Vec<f64>> {
    if !(gap > 0.0) {
        return Err(Error::Invalid(format!("gap must be positive, got {gap}")));
    }
    let mut clusters: Vec<(f64, f64, usize)> = Vec::new();
    for &v in s.values() {
        match clusters.last_mut() {
            Some((_, hi, count)) if v - *hi <= s.resolution() => {
                *hi = v;
                *count += 1;
            }
            _ => clusters.push((v, v, 1)),
        }
    }
    let mut out = Vec::new();
    for (i, &(lo, hi, count)) in clusters.iter().enumerate() {
        let left = if i > 0 { lo - clusters[i - 1].1 } else { f64::INFINITY };
        let right = clusters.get(i + 1).map_or(f64::INFINITY, |c| c.0 - hi);
        let centre = 0.5 * (lo + hi);
        if count <= DEGENERACY_CAP
            && left > gap
            && right > gap
            && centre >= window.0
            && centre <= window.1
        {
            out.push(centre);
        }
    }
    Ok(out)
}

/// Output of [`truncation_stable_spectrum`].
#[derive(Clone, Debug)]
pub struct StableSpectrum {
    /// Eigenvalues of the largest rung that persisted down the ladder.
    pub stable: SpectralSet,
    /// Eigenvalues of the largest rung rejected as truncation artifacts.
    pub discarded: Vec<f64>,
    /// Spectra of every rung, in ladder order.
    pub rungs: Vec<SpectralSet>,
}

/// Flags the members of `cur` that have a partner in `prev` within `tol`,
/// greedy nearest-neighbour on sorted lists. Each member of `prev` absorbs
/// at most `⌈|cur|/|prev|⌉` partners, so one-to-one when the sizes agree.
fn matched(prev: &[f64], cur: &[f64], tol: f64) -> Vec<bool> {
    let capacity = cur.len().div_ceil(prev.len().max(1));
    let mut used = vec![0usize; prev.len()];
    let mut out = vec![false; cur.len()];
    for (i, &v) in cur.iter().enumerate() {
        let start = prev.partition_point(|&p| p < v);
        let (mut lo, mut hi) = (start, start);
        let mut best: Option<usize> = None;
        loop {
            let left = (lo > 0).then(|| lo - 1);
            let right = (hi < prev.len()).then_some(hi);
            let dl = left.map_or(f64::INFINITY, |k| v - prev[k]);
            let dr = right.map_or(f64::INFINITY, |k| prev[k] - v);
            if dl.min(dr) > tol {
                break;
            }
            if dl <= dr {
                let k = left.unwrap();
                if used[k] < capacity {
                    best = Some(k);
                    break;
                }
                lo -= 1;
            } else {
                let k = right.unwrap();
                if used[k] < capacity {
                    best = Some(k);
                    break;
                }
                hi += 1;
            }
        }
        if let Some(k) = best {
            used[k] += 1;
            out[i] = true;
        }
    }
    out
}

/// Fraction of all eigenvalues lying within `radius` of `t`.
fn density(s: &SpectralSet, t: f64, radius: f64) -> f64 {
    s.count_within(t, radius) as f64 / s.len() as f64
}

/// Truncation-stable part of the spectrum along a ladder of `(L, N)` rungs.
///
/// An eigenvalue of the last rung is kept when it has a partner within the
/// last rung's resolution on every earlier rung and its normalized local
/// density (fraction of eigenvalues within that resolution) changes by a
/// factor in `[1/2, 2]` between consecutive rungs.
pub fn truncation_stable_spectrum<B>(builder: B, ladder: &[(f64, usize)]) -> Result<StableSpectrum>
where
    B: Fn(f64, usize) -> Result<OperatorMatrix>,
{
    if ladder.len() < 2 {
        return Err(Error::Invalid("ladder needs at least two rungs".into()));
    }
    let mut rungs = Vec::with_capacity(ladder.len());
    for &(l, n) in ladder {
        rungs.push(eigen_spectrum(&builder(l, n)?)?);
    }
    let last = rungs.last().unwrap().values().to_vec();
    let tol = rungs.last().unwrap().resolution();
    let mut keep = vec![true; last.len()];
    // Chain matches from the last rung downwards; a value survives if its
    // partner on each lower rung itself has a partner further down.
    let mut current: Vec<f64> = last.clone();
    let mut alive: Vec<usize> = (0..last.len()).collect();
    for r in (0..rungs.len() - 1).rev() {
        let prev = rungs[r].values();
        let hits = matched(prev, &current, tol);
        let mut next_current = Vec::new();
        let mut next_alive = Vec::new();
        for (pos, &idx) in alive.iter().enumerate() {
            let v = current[pos];
            let upper = &rungs[r + 1];
            let lower = &rungs[r];
            let ratio = density(upper, v, tol) / density(lower, v, tol).max(f64::MIN_POSITIVE);
            if hits[pos] && (0.5..=2.0).contains(&ratio) {
                next_current.push(v);
                next_alive.push(idx);
            } else {
                keep[idx] = false;
            }
        }
        current = next_current;
        alive = next_alive;
    }
    let stable_values: Vec<f64> = last.iter().zip(&keep).filter(|(_, k)| **k).map(|(v, _)| *v).collect();
    let discarded = last.iter().zip(&keep).filter(|(_, k)| !**k).map(|(v, _)| *v).collect();
    Ok(StableSpectrum {
        stable: SpectralSet::new(stable_values, tol)?,
        discarded,
        rungs,
    })
}

/// Approximates `R_asy(F) = ∩_K closure F(Ξ∖K)` by sampling the exterior
/// of discs of the given radii.
///
/// Each exterior `|X| ≥ r` is sampled on a polar grid with radii
/// `r·e^s`, `s ∈ [0, 8]`, so the tail covers eight e-folds. Values of the
/// outermost tail are kept when both preceding tails contain a value within
/// their sampling gap (the widest gap between consecutive sorted samples,
/// at least [`ASYMPTOTIC_RESOLUTION`]).
pub fn asymptotic_range<F: PhaseFunction + ?Sized>(
    f: &F,
    radii: &[f64],
    samples_per_radius: usize,
) -> Result<SpectralSet> {
    if radii.len() < 3 {
        return Err(Error::Invalid("asymptotic_range needs at least three radii".into()));
    }
    if radii.windows(2).any(|w| !(w[0] < w[1])) || radii[0] <= 0.0 {
        return Err(Error::Invalid("radii must be positive and increasing".into()));
    }
    if samples_per_radius < 4 {
        return Err(Error::Invalid("samples_per_radius must be at least 4".into()));
    }
    let n_s = (2.0 * (samples_per_radius as f64).sqrt()).ceil() as usize;
    let n_theta = samples_per_radius.div_ceil(n_s);
    let tail = |r: f64| -> Result<SpectralSet> {
        let mut values = Vec::with_capacity(n_s * n_theta);
        for a in 0..n_s {
            let rho = r * (8.0 * a as f64 / (n_s - 1) as f64).exp();
            for b in 0..n_theta {
                let theta = std::f64::consts::TAU * (b as f64 + 0.5) / n_theta as f64;
                let v = f.eval(rho * theta.cos(), rho * theta.sin())?;
                values.push(v.re);
            }
        }
        SpectralSet::new(values, ASYMPTOTIC_RESOLUTION)
    };
    let k = radii.len();
    let outer = tail(radii[k - 1])?;
    let prev1 = tail(radii[k - 2])?;
    let prev2 = tail(radii[k - 3])?;
    let gap = |s: &SpectralSet| {
        s.values()
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(ASYMPTOTIC_RESOLUTION, f64::max)
    };
    let (tol1, tol2) = (gap(&prev1), gap(&prev2));
    let kept = outer
        .values()
        .iter()
        .copied()
        .filter(|&v| prev1.distance_to(v) <= tol1 && prev2.distance_to(v) <= tol2)
        .collect();
    Ok(SpectralSet::new(kept, ASYMPTOTIC_RESOLUTION)?.merged())
}

/// Merge resolution of [`asymptotic_range`].
pub const ASYMPTOTIC_RESOLUTION: f64 = 1e-3;

/// Gap used to single out isolated eigenvalues before comparing a
/// truncation-stable spectrum with a predicted essential spectrum.
pub const ISOLATION_GAP: f64 = 0.1;

/// Padding of the essential window `[min, max]` of the prediction.
pub const ESS_WINDOW_PAD: f64 = 0.02;

/// Predicted and numerically estimated essential spectrum of `H_σ`.
#[derive(Clone, Debug)]
pub struct EssentialSpectrumReport {
    /// The quasi-orbit `E_σ`.
    pub quasi_orbit: QuasiOrbit,
    /// Union of the asymptotic-Hamiltonian spectra (first kind) or the
    /// whole spectrum of `H_σ` (second kind).
    pub predicted: SpectralSet,
    /// Truncation-stable spectrum of `H_σ` without isolated eigenvalues,
    /// restricted to the padded essential window. A numerical proxy.
    pub numerical: SpectralSet,
    /// `hausdorff(predicted, numerical)`; infinite when the window holds no
    /// stable eigenvalue.
    pub hausdorff_distance: f64,
    /// Spectrum of each asymptotic Hamiltonian, keyed by sub-orbit id.
    pub per_suborbit: BTreeMap<String, SpectralSet>,
    /// Isolated eigenvalues removed from the stable set.
    pub isolated: Vec<f64>,
    pub method_notes: Vec<String>,
}

impl EssentialSpectrumReport {
    /// One row per value: `value,source` with source `predicted`,
    /// `numerical` or `suborbit:<id>`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "value,source")?;
        for v in self.predicted.values() {
            writeln!(out, "{v},predicted")?;
        }
        for v in self.numerical.values() {
            writeln!(out, "{v},numerical")?;
        }
        for (id, s) in &self.per_suborbit {
            for v in s.values() {
                writeln!(out, "{v},suborbit:{id}")?;
            }
        }
        Ok(())
    }
}

/// Spectrum of `H_σ = Op(f∘Θ_σ)` for the generating point of `e`, in
/// closed form when the table gives a hint.
fn quasi_orbit_spectrum(
    a: &ActionSpec,
    f: &StateSymbol,
    e: &QuasiOrbit,
    grid: &Grid,
    hbar: f64,
) -> Result<(SpectralSet, &'static str)> {
    let pulled = pullback_symbol(f, a, &e.generating_point)?;
    let resolution = grid.default_resolution();
    let real = |v: Result<Complex64>| v.map(|z| z.re);
    let (values, method) = match e.hint {
        Some(SpectrumHint::Constant) => (vec![real(pulled.eval(0.0, 0.0))?], "constant"),
        Some(SpectrumHint::MultiplicationX) => (
            grid.nodes()
                .into_iter()
                .map(|x| real(pulled.eval(x, 0.0)))
                .collect::<Result<_>>()?,
            "multiplier on the x-grid",
        ),
        Some(SpectrumHint::MultiplicationXi) => (
            grid.dual_nodes(hbar)
                .into_iter()
                .map(|xi| real(pulled.eval(0.0, xi)))
                .collect::<Result<_>>()?,
            "multiplier on the ξ-grid",
        ),
        None => (eigenvalues(&build_op_matrix(&pulled, grid, hbar)?)?, "eigenvalues"),
    };
    Ok((SpectralSet::new(values, resolution)?, method))
}

/// Essential spectrum of `H_σ = Op^ħ(f∘Θ_σ)` predicted from the quasi-orbit
/// table and checked against the truncation-stable spectrum along `ladder`.
/// Predictions are made on the grid of the last rung.
///
/// First kind: the union of the spectra of the asymptotic Hamiltonians
/// `H_{σ(F)}` over the non-generic cover of `E_σ`. Second kind: the whole
/// spectrum of `H_σ`, which has no discrete part.
pub fn predicted_ess_spectrum(
    a: &ActionSpec,
    sigma: &StatePoint,
    f: &StateSymbol,
    ladder: &[(f64, usize)],
    hbar: f64,
) -> Result<EssentialSpectrumReport> {
    if !(hbar > 0.0 && hbar <= 1.0) {
        return Err(Error::HbarRange(hbar));
    }
    let &(l, n) = ladder.last().ok_or(Error::Empty("ladder"))?;
    let grid = make_grid(l, n)?;
    let e = quasi_orbit_of(a, sigma)?;
    let pulled = pullback_symbol(f, a, sigma)?;
    let mut notes = Vec::new();
    let mut per_suborbit = BTreeMap::new();
    let predicted = match classify_kind(&e)? {
        Kind::First => {
            let subs = non_generic_suborbits(a, &e)?;
            let parts: Vec<(String, SpectralSet, &str)> = subs
                .par_iter()
                .map(|sub| {
                    let (s, method) = quasi_orbit_spectrum(a, f, sub, &grid, hbar)?;
                    Ok((sub.id.clone(), s, method))
                })
                .collect::<Result<_>>()?;
            for (id, s, method) in parts {
                notes.push(format!("suborbit {id}: {method}"));
                per_suborbit.insert(id, s);
            }
            if per_suborbit.is_empty() {
                notes.push("no non-generic points; non-compact state space adds 0".into());
                SpectralSet::new(vec![0.0], grid.default_resolution())?
            } else {
                let parts: Vec<SpectralSet> = per_suborbit.values().cloned().collect();
                union_closure(&parts)?
            }
        }
        Kind::Second => {
            let (s, method) = quasi_orbit_spectrum(a, f, &e, &grid, hbar)?;
            notes.push(format!("second kind, purely essential: {method}"));
            s
        }
    };
    let stable = truncation_stable_spectrum(
        |l, n| build_op_matrix(&pulled, &make_grid(l, n)?, hbar),
        ladder,
    )?;
    notes.push(format!(
        "truncation proxy: {} stable, {} discarded",
        stable.stable.len(),
        stable.discarded.len()
    ));
    let isolated = isolated_eigenvalues(&stable.stable, ISOLATION_GAP, (f64::NEG_INFINITY, f64::INFINITY))?;
    let (lo, hi) = (predicted.min().unwrap(), predicted.max().unwrap());
    let kept = stable
        .stable
        .values()
        .iter()
        .copied()
        .filter(|v| !isolated.contains(v))
        .collect();
    let numerical = SpectralSet::new(kept, stable.stable.resolution())?
        .restrict(lo - ESS_WINDOW_PAD, hi + ESS_WINDOW_PAD);
    let hausdorff_distance = if numerical.is_empty() {
        notes.push("no stable eigenvalue in the essential window".into());
        f64::INFINITY
    } else {
        hausdorff(&predicted, &numerical)?
    };
    Ok(EssentialSpectrumReport {
        quasi_orbit: e,
        predicted,
        numerical,
        hausdorff_distance,
        per_suborbit,
        isolated,
        method_notes: notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ActionKind, Profile, Radial};
    use crate::phase::RealFn;
    use crate::symbol::parse_symbol;
    use proptest::prelude::*;

    fn set(v: &[f64]) -> SpectralSet {
        SpectralSet::new(v.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn eigen_examples() {
        let g = make_grid(8.0, 32).unwrap();
        let m = build_op_matrix(&RealFn(|_, _| 2.5), &g, 1.0).unwrap();
        let s = eigen_spectrum(&m).unwrap();
        assert_eq!(s.len(), 32);
        assert!(s.values().iter().all(|v| (v - 2.5).abs() <= 1e-12));

        let m = build_op_matrix(&RealFn(|x: f64, _| x.tanh()), &g, 1.0).unwrap();
        let s = eigen_spectrum(&m).unwrap();
        for (v, x) in s.values().iter().zip(g.nodes()) {
            assert!((v - x.tanh()).abs() <= 1e-12);
        }

        let swap = DMatrix::from_fn(2, 2, |i, j| Complex64::new(if i == j { 0.0 } else { 1.0 }, 0.0));
        let s = hermitian_eigenvalues(&swap).unwrap();
        assert!((s[0] + 1.0).abs() <= 1e-14 && (s[1] - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn hausdorff_examples() {
        let s = set(&[0.0, 0.3, 2.0]);
        assert_eq!(hausdorff(&s, &s).unwrap(), 0.0);
        assert_eq!(hausdorff(&set(&[0.0]), &set(&[1.0])).unwrap(), 1.0);
        assert_eq!(hausdorff(&set(&[0.0, 2.0]), &set(&[1.0])).unwrap(), 1.0);
        assert!(matches!(hausdorff(&set(&[]), &s), Err(Error::Empty(_))));
    }

    #[test]
    fn union_examples() {
        assert_eq!(union_closure(&[set(&[1.0]), set(&[2.0])]).unwrap().values(), &[1.0, 2.0]);
        let s = SpectralSet::new(vec![0.5, -1.0], 0.1).unwrap();
        assert_eq!(union_closure(std::slice::from_ref(&s)).unwrap(), s);
        assert!(union_closure(&[]).is_err());
    }

    #[test]
    fn isolated_examples() {
        let mut v = vec![0.0; 50];
        v.push(5.0);
        let s = SpectralSet::new(v, 0.01).unwrap();
        assert_eq!(isolated_eigenvalues(&s, 1.0, (-10.0, 10.0)).unwrap(), vec![5.0]);
        let dense: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        let s = SpectralSet::new(dense, 0.0).unwrap();
        assert!(isolated_eigenvalues(&s, 0.02, (-1.0, 2.0)).unwrap().is_empty());
        assert!(isolated_eigenvalues(&s, 0.0, (-1.0, 2.0)).is_err());
    }

    #[test]
    fn stable_spectrum_of_constant() {
        let out = truncation_stable_spectrum(
            |l, n| build_op_matrix(&RealFn(|_, _| 0.75), &make_grid(l, n).unwrap(), 1.0),
            &[(4.0, 32), (8.0, 64)],
        )
        .unwrap();
        assert_eq!(out.stable.len(), 64);
        assert!(out.stable.values().iter().all(|v| (v - 0.75).abs() <= 1e-12));
        assert!(out.discarded.is_empty());
    }

    #[test]
    fn stable_spectrum_of_multiplication() {
        let out = truncation_stable_spectrum(
            |l, n| build_op_matrix(&RealFn(|x: f64, _| x.tanh()), &make_grid(l, n).unwrap(), 1.0),
            &[(6.0, 128), (8.0, 256)],
        )
        .unwrap();
        let s = &out.stable;
        assert!(s.min().unwrap() <= -0.99 && s.max().unwrap() >= 0.99);
        let interval = SpectralSet::interval(-1.0, 1.0, 0.01).unwrap();
        assert!(hausdorff(s, &interval).unwrap() <= 0.05);
        assert!(truncation_stable_spectrum(|_, _| unreachable!(), &[(1.0, 8)]).is_err());
    }

    #[test]
    fn asymptotic_range_examples() {
        let radial = RealFn(|x: f64, xi: f64| (x * x + xi * xi).tanh());
        let r = asymptotic_range(&radial, &[2.0, 3.0, 4.0], 400).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.values()[0] - 1.0).abs() <= 1e-12);

        let c = asymptotic_range(&RealFn(|_, _| -0.3), &[1.0, 2.0, 3.0], 100).unwrap();
        assert_eq!(c.values(), &[-0.3]);

        let slow = RealFn(|x: f64, xi: f64| (1.0 + x.hypot(xi)).ln().sin());
        let e = std::f64::consts::E;
        let r = asymptotic_range(&slow, &[e.powi(4), e.powi(5), e.powi(6)], 4000).unwrap();
        let interval = SpectralSet::interval(-1.0, 1.0, 0.01).unwrap();
        assert!(hausdorff(&r, &interval).unwrap() <= 0.05);
        assert!(asymptotic_range(&slow, &[1.0, 2.0], 100).is_err());
    }

    #[test]
    fn stable_spectrum_of_gaussian_is_compact() {
        // Op(e^{-x²-ξ²}) at ħ = 1 is half the ground-state projection.
        let f = RealFn(|x: f64, xi: f64| (-x * x - xi * xi).exp());
        let out = truncation_stable_spectrum(
            |l, n| build_op_matrix(&f, &make_grid(l, n).unwrap(), 1.0),
            &[(8.0, 128), (8.0, 256)],
        )
        .unwrap();
        let nonzero: Vec<f64> = out.stable.values().iter().copied().filter(|v| v.abs() > 1e-3).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((nonzero[0] - 0.5).abs() <= 1e-3);
        let small = out.stable.values().iter().filter(|v| v.abs() <= 1e-3).count();
        assert_eq!(small, out.stable.len() - 1);
    }



    #[test]
    fn quantum_plane_semi_axis_is_multiplication() {
        let a = ActionSpec::new(ActionKind::RealQuantumPlane);
        let f = StateSymbol::Expr(parse_symbol("(1 + x - xi)*gaussian(x)*gaussian(xi)").unwrap());
        let ladder = [(6.0, 64), (8.0, 128)];
        let r = predicted_ess_spectrum(&a, &StatePoint::interior(1.0, 0.0), &f, &ladder, 1.0).unwrap();
        let grid = make_grid(8.0, 128).unwrap();
        let closed: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|x| (1.0 + x.exp()) * (-(x.exp()).powi(2)).exp())
            .collect();
        assert_eq!(r.predicted, SpectralSet::new(closed, grid.default_resolution()).unwrap());
        assert!(r.method_notes.iter().any(|n| n.contains("purely essential")));
    }

    #[test]
    fn quarter_plane_prediction_is_union_of_semi_axes() {
        let a = ActionSpec::new(ActionKind::RealQuantumPlane);
        let f = StateSymbol::Expr(parse_symbol("(1 + x - xi)*gaussian(x)*gaussian(xi)").unwrap());
        let ladder = [(6.0, 64), (8.0, 128)];
        let r = predicted_ess_spectrum(&a, &StatePoint::interior(1.0, 1.0), &f, &ladder, 1.0).unwrap();
        let x = predicted_ess_spectrum(&a, &StatePoint::interior(1.0, 0.0), &f, &ladder, 1.0).unwrap();
        let xi = predicted_ess_spectrum(&a, &StatePoint::interior(0.0, 1.0), &f, &ladder, 1.0).unwrap();
        let u = union_closure(&[x.predicted, xi.predicted]).unwrap();
        assert_eq!(r.predicted, u);
        assert_eq!(r.per_suborbit.keys().collect::<Vec<_>>(), ["X+", "Xi+"]);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("value,source\n"));
        assert!(text.contains(",suborbit:Xi+\n"));
    }

    #[test]
    fn radial_limit_is_the_prediction() {
        let a = ActionSpec::new(ActionKind::RadialVo).with_boundary_samples(4);
        let f = StateSymbol::Radial(Radial {
            base: 0.0,
            amp: 1.0,
            profile: Profile::Tanh,
        });
        let r = predicted_ess_spectrum(&a, &StatePoint::interior(0.0, 0.0), &f, &[(6.0, 64), (8.0, 128)], 1.0)
            .unwrap();
        assert_eq!(r.predicted.values(), &[1.0; 4]);
        assert!(r.hausdorff_distance <= ESS_WINDOW_PAD);
    }

    #[test]
    fn minimal_torus_prediction_is_its_spectrum() {
        let a = ActionSpec::new(ActionKind::from_id("torus-ap", None).unwrap());
        let f = StateSymbol::Expr(parse_symbol("cos(x) + cos(xi)").unwrap());
        let sigma = StatePoint::tagged("torus", &[0.2, 0.1]);
        let r = predicted_ess_spectrum(&a, &sigma, &f, &[(8.0, 64), (8.0, 128)], 1.0).unwrap();
        assert!(r.per_suborbit.is_empty());
        assert!(r.method_notes.iter().any(|n| n.contains("purely essential")));
        assert_eq!(r.predicted.len(), 128);
        assert!(predicted_ess_spectrum(&a, &sigma, &f, &[(8.0, 64), (8.0, 128)], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn hausdorff_is_a_metric(
            a in prop::collection::vec(-5.0f64..5.0, 1..20),
            b in prop::collection::vec(-5.0f64..5.0, 1..20),
            c in prop::collection::vec(-5.0f64..5.0, 1..20),
        ) {
            let (a, b, c) = (set(&a), set(&b), set(&c));
            let ab = hausdorff(&a, &b).unwrap();
            prop_assert_eq!(ab, hausdorff(&b, &a).unwrap());
            prop_assert!(ab <= hausdorff(&a, &c).unwrap() + hausdorff(&c, &b).unwrap() + 1e-12);
            prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        }
    }
}
