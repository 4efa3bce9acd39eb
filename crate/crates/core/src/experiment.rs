//! Running scenarios: spectra at base points, essential-spectrum reports,
//! ħ sweeps, random base points and the deformed-product checks, each
//! written as CSV and judged against [`THRESHOLDS`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::checks::{Check, THRESHOLDS};
use crate::dynamics::{pullback_symbol, quasi_orbit_of, task_rng, ActionSpec, Pullback, StatePoint};
use crate::error::{Error, Result};
use crate::phase::{make_grid, Grid, PhaseFunction};
use crate::scenario::{Experiment, Scenario};
use crate::spectra::{eigen_spectrum, hausdorff, isolated_eigenvalues, predicted_ess_spectrum, EssentialSpectrumReport};
use crate::spectral_set::SpectralSet;
use crate::weyl::{build_op_matrix, moyal_product, poisson_bracket, OperatorMatrix, SampledSymbol};

/// Samples per axis of the box used by [`classical_range`].
pub const CLASSICAL_SAMPLES: usize = 201;

/// Resolution attached to [`classical_range`].
pub const CLASSICAL_RESOLUTION: f64 = 0.02;

impl Scenario {
    pub fn main_grid(&self) -> Result<Grid> {
        make_grid(self.grid.0, self.grid.1)
    }

    pub fn pullback(&self, sigma: &StatePoint) -> Result<Pullback> {
        pullback_symbol(&self.symbol, &self.action, sigma)
    }

    /// `H^ħ_σ` on the main grid.
    pub fn hamiltonian(&self, sigma: &StatePoint, hbar: f64) -> Result<OperatorMatrix> {
        let m = build_op_matrix(&self.pullback(sigma)?, &self.main_grid()?, hbar)?;
        Ok(m.with_provenance(format!("{} at {sigma}, hbar={hbar}", self.name)))
    }

    /// Eigenvalues of `H^ħ_σ`, at the scenario's resolution if it sets one.
    pub fn spectrum(&self, sigma: &StatePoint, hbar: f64) -> Result<SpectralSet> {
        let s = eigen_spectrum(&self.hamiltonian(sigma, hbar)?)?;
        Ok(match self.resolution {
            Some(eps) => s.with_resolution(eps),
            None => s,
        })
    }
}

fn box_samples(f: &Pullback, half_width: f64, out: &mut Vec<f64>) -> Result<()> {
    let q = CLASSICAL_SAMPLES;
    let node = |i: usize| -half_width + 2.0 * half_width * i as f64 / (q - 1) as f64;
    let rows: Vec<Vec<f64>> = (0..q)
        .into_par_iter()
        .map(|i| (0..q).map(|j| f.eval(node(i), node(j)).map(|z| z.re)).collect())
        .collect::<Result<_>>()?;
    out.extend(rows.into_iter().flatten());
    Ok(())
}

/// `closure f(E_σ)` sampled: `F_σ` on a box over the main grid's window,
/// plus the same box for the generating point of every quasi-orbit in the
/// non-generic cover of `E_σ`, transitively.
pub fn classical_range(scenario: &Scenario, sigma: &StatePoint) -> Result<SpectralSet> {
    let a = &scenario.action;
    if !scenario.symbol.is_real() {
        return Err(Error::Invalid(format!(
            "classical range needs a real symbol, `{}` is complex",
            scenario.symbol
        )));
    }
    let e = quasi_orbit_of(a, sigma)?;
    let mut generators = vec![sigma.clone()];
    let mut seen = vec![e.id.clone()];
    let mut queue = e.non_generic_cover.clone();
    while let Some(id) = queue.pop() {
        if seen.contains(&id) {
            continue;
        }
        let sub = a.lookup(&id)?;
        generators.push(sub.generating_point.clone());
        queue.extend(sub.non_generic_cover.iter().cloned());
        seen.push(id);
    }
    let mut values = Vec::new();
    for g in &generators {
        box_samples(&pullback_symbol(&scenario.symbol, a, g)?, scenario.grid.0, &mut values)?;
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    SpectralSet::new(values, CLASSICAL_RESOLUTION)
}

/// One row of an ħ sweep.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub hbar: f64,
    pub spectrum: SpectralSet,
    /// `hausdorff(spectrum, classical_range)`.
    pub d_to_classical: f64,
    /// Wall-clock time of the build and eigensolve. The only
    /// non-reproducible number in any output.
    pub runtime_ms: u64,
}

/// Spectra of `H^ħ_σ` over the ħ schedule, sorted by decreasing ħ.
/// Rows are computed concurrently and emitted whether or not the distance
/// to the classical range decreases.
pub fn run_hbar_sweep(scenario: &Scenario, sigma: &StatePoint) -> Result<Vec<SweepRow>> {
    if scenario.hbar_schedule.is_empty() {
        return Err(Error::Empty("hbar schedule"));
    }
    let classical = classical_range(scenario, sigma)?;
    let mut schedule = scenario.hbar_schedule.clone();
    schedule.sort_by(|a, b| b.total_cmp(a));
    schedule
        .par_iter()
        .map(|&hbar| {
            let start = Instant::now();
            let spectrum = scenario.spectrum(sigma, hbar)?;
            let runtime_ms = start.elapsed().as_millis() as u64;
            let d_to_classical = hausdorff(&spectrum, &classical)?;
            Ok(SweepRow {
                hbar,
                spectrum,
                d_to_classical,
                runtime_ms,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "hbar,d_to_classical,n_eigenvalues,runtime_ms")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.hbar, r.d_to_classical, r.spectrum.len(), r.runtime_ms)?;
    }
    Ok(())
}

/// Checks of a sweep: the last row is close to the classical range and no
/// row moves away from it by more than the step tolerance.
pub fn sweep_checks(rows: &[SweepRow]) -> Vec<Check> {
    let t = THRESHOLDS;
    let last = rows.last().map_or(f64::INFINITY, |r| r.d_to_classical);
    let step = rows
        .windows(2)
        .map(|w| w[1].d_to_classical - w[0].d_to_classical)
        .fold(f64::NEG_INFINITY, f64::max);
    vec![
        Check::at_most("sweep final distance", last, t.sweep_final),
        Check::at_most("sweep largest increase", step.max(0.0), t.sweep_step),
    ]
}

/// Output of [`run_random_experiment`].
#[derive(Clone, Debug)]
pub struct RandomReport {
    pub points: Vec<StatePoint>,
    pub spectra: Vec<SpectralSet>,
    /// `max_j hausdorff(sp_i, sp_j)` for each sample `i`.
    pub max_pairwise: Vec<f64>,
    /// Isolated eigenvalues of each sample away from the edge margin.
    pub isolated: Vec<Vec<f64>>,
}

impl RandomReport {
    pub fn max_pairwise_distance(&self) -> f64 {
        self.max_pairwise.iter().copied().fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "sample_id,max_pairwise_d,n_isolated")?;
        for (i, (d, iso)) in self.max_pairwise.iter().zip(&self.isolated).enumerate() {
            writeln!(out, "{i},{d},{}", iso.len())?;
        }
        Ok(())
    }

    pub fn checks(&self) -> Vec<Check> {
        let n_isolated: usize = self.isolated.iter().map(Vec::len).sum();
        vec![
            Check::at_most("random pairwise distance", self.max_pairwise_distance(), THRESHOLDS.pairwise),
            Check::holds(
                "random isolated eigenvalues",
                n_isolated == 0,
                format!("{n_isolated} isolated over {} samples", self.points.len()),
            ),
        ]
    }
}

/// Isolated eigenvalues of `s` (gap [`THRESHOLDS`]`.isolation_gap`) away
/// from the edge margin of its range.
pub fn interior_isolated(s: &SpectralSet) -> Result<Vec<f64>> {
    let t = THRESHOLDS;
    let (lo, hi) = (s.min().ok_or(Error::Empty("spectrum"))?, s.max().unwrap());
    let margin = t.edge_margin * s.resolution();
    isolated_eigenvalues(s, t.isolation_gap, (lo + margin, hi - margin))
}

/// Spectra at `count` base points drawn uniformly from the state space of
/// an ergodic action, sample `i` from the stream `(seed, i)`.
pub fn run_random_experiment(scenario: &Scenario, count: usize, seed: u64) -> Result<RandomReport> {
    if !scenario.action.is_ergodic() {
        return Err(Error::Invalid(format!(
            "the random experiment needs an ergodic action, `{}` is not",
            scenario.action.id()
        )));
    }
    if count < 2 {
        return Err(Error::Invalid("count ≥ 2 required".into()));
    }
    let hbar = scenario.hbar();
    let points: Vec<StatePoint> = (0..count as u64)
        .map(|i| scenario.action.sample_state(&mut task_rng(seed, i)))
        .collect();
    let spectra: Vec<SpectralSet> = points
        .par_iter()
        .map(|p| scenario.spectrum(p, hbar))
        .collect::<Result<_>>()?;
    let mut max_pairwise = vec![0.0f64; count];
    for i in 0..count {
        for j in 0..i {
            let d = hausdorff(&spectra[i], &spectra[j])?;
            max_pairwise[i] = max_pairwise[i].max(d);
            max_pairwise[j] = max_pairwise[j].max(d);
        }
    }
    let isolated = spectra.iter().map(interior_isolated).collect::<Result<_>>()?;
    Ok(RandomReport {
        points,
        spectra,
        max_pairwise,
        isolated,
    })
}

/// Output of [`run_moyal_check`].
#[derive(Clone, Debug)]
pub struct MoyalReport {
    /// `(N, ‖Op(f#g) − Op(f)Op(g)‖ / (‖Op(f)‖‖Op(g)‖))` on the grid and on
    /// the grid with `N` doubled.
    pub morphism: Vec<(usize, f64)>,
    /// `(ħ, ‖f#g − fg − (iħ/2){f,g}‖∞)` along the expansion schedule.
    pub remainders: Vec<(f64, f64)>,
}

impl MoyalReport {
    /// Shrink factors of consecutive remainders.
    pub fn ratios(&self) -> Vec<f64> {
        self.remainders.windows(2).map(|w| w[0].1 / w[1].1).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "quantity,parameter,value")?;
        for (n, e) in &self.morphism {
            writeln!(out, "morphism,N={n},{e}")?;
        }
        for (h, r) in &self.remainders {
            writeln!(out, "remainder,hbar={h},{r}")?;
        }
        for (w, r) in self.remainders.windows(2).zip(self.ratios()) {
            writeln!(out, "ratio,hbar={},{r}", w[1].0)?;
        }
        Ok(())
    }

    pub fn checks(&self) -> Vec<Check> {
        let t = THRESHOLDS;
        let first = self.morphism.first().map_or(f64::INFINITY, |m| m.1);
        let decreasing = self.morphism.windows(2).all(|w| w[1].1 < w[0].1);
        let worst_ratio = self.ratios().into_iter().fold(f64::INFINITY, f64::min);
        vec![
            Check::at_most("morphism error", first, t.morphism),
            Check::holds(
                "morphism decreases with N",
                decreasing,
                self.morphism
                    .iter()
                    .map(|(n, e)| format!("N={n}: {e:.3e}"))
                    .collect::<Vec<_>>()
                    .join(", "),
            ),
            Check::at_least("expansion shrink factor", worst_ratio, t.expansion_ratio),
        ]
    }
}

/// Spectral norm, the largest singular value.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// Relative error of `Op(f#g)` against `Op(f)Op(g)`.
pub fn morphism_error<F, G>(f: &F, g: &G, grid: &Grid, hbar: f64) -> Result<f64>
where
    F: PhaseFunction + ?Sized,
    G: PhaseFunction + ?Sized,
{
    let fs = SampledSymbol::sample(f, grid, hbar)?;
    let gs = SampledSymbol::sample(g, grid, hbar)?;
    let star = moyal_product(&fs, &gs)?.quantize()?;
    let (of, og) = (build_op_matrix(f, grid, hbar)?, build_op_matrix(g, grid, hbar)?);
    let diff = star.entries() - of.entries() * og.entries();
    Ok(operator_norm(&diff) / (operator_norm(of.entries()) * operator_norm(og.entries())))
}

/// `‖f#g − fg − (iħ/2){f,g}‖∞` over the grid.
pub fn expansion_remainder<F, G>(f: &F, g: &G, grid: &Grid, hbar: f64) -> Result<f64>
where
    F: PhaseFunction + ?Sized,
    G: PhaseFunction + ?Sized,
{
    let fs = SampledSymbol::sample(f, grid, hbar)?;
    let gs = SampledSymbol::sample(g, grid, hbar)?;
    let star = moyal_product(&fs, &gs)?;
    let product = fs.zip_with(&gs, |a, b| a * b)?;
    let bracket = poisson_bracket(&fs, &gs)?;
    let half = Complex64::new(0.0, hbar / 2.0);
    let rem = star
        .zip_with(&product, |a, b| a - b)?
        .zip_with(&bracket, |a, b| a - half * b)?;
    Ok(rem.sup_norm())
}

/// Morphism error at `ħ = schedule[0]` on `(L, N)` and `(L, 2N)`, and the
/// expansion remainder at the rest of the schedule on `(expansion_L, N)`.
pub fn run_moyal_check(scenario: &Scenario) -> Result<MoyalReport> {
    let pair = scenario
        .moyal
        .as_ref()
        .ok_or_else(|| Error::Invalid(format!("scenario `{}` declares no Moyal pair", scenario.name)))?;
    if scenario.hbar_schedule.len() < 3 {
        return Err(Error::Invalid("moyal-check needs at least three ħ values".into()));
    }
    let (l, n) = scenario.grid;
    let hbar = scenario.hbar();
    let morphism = [n, 2 * n]
        .par_iter()
        .map(|&size| Ok((size, morphism_error(&pair.f, &pair.g, &make_grid(l, size)?, hbar)?)))
        .collect::<Result<_>>()?;
    let grid = make_grid(pair.expansion_half_width, n)?;
    let remainders = scenario.hbar_schedule[1..]
        .par_iter()
        .map(|&h| Ok((h, expansion_remainder(&pair.expansion_f, &pair.expansion_g, &grid, h)?)))
        .collect::<Result<_>>()?;
    Ok(MoyalReport { morphism, remainders })
}

/// Check of an essential-spectrum report against the essential tolerance.
pub fn ess_checks(report: &EssentialSpectrumReport) -> Vec<Check> {
    vec![Check::at_most(
        &format!("essential spectrum on {}", report.quasi_orbit.id),
        report.hausdorff_distance,
        THRESHOLDS.essential,
    )]
}

/// Knobs of [`run_experiment`] that do not belong to the scenario.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Also write `H_σ` of every base point as `matrix_<i>.csv`.
    pub dump_matrix: bool,
}

/// Files written and checks evaluated by one experiment.
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub experiment: Experiment,
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl ExperimentOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: PathBuf, fill: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<PathBuf> {
    let mut buf = Vec::new();
    fill(&mut buf).map_err(io_error(&path))?;
    fs::write(&path, buf).map_err(io_error(&path))?;
    Ok(path)
}

/// Runs one experiment and writes its CSV under `out_dir/<output path>/`.
///
/// `spectrum` writes `spectrum.csv` with every base point at the first ħ;
/// `ess-spectrum` writes `ess.csv` for the first base point; `sweep` runs
/// the schedule at the first base point; `random` draws `samples` points
/// from `seed`; `moyal-check` writes `moyal.csv`.
pub fn run_experiment(
    scenario: &Scenario,
    experiment: Experiment,
    out_dir: &Path,
    options: &RunOptions,
) -> Result<ExperimentOutcome> {
    let dir = out_dir.join(&scenario.output_path);
    fs::create_dir_all(&dir).map_err(io_error(&dir))?;
    let sigma = &scenario.base_points[0];
    let mut files = Vec::new();
    let checks = match experiment {
        Experiment::Spectrum => {
            let hbar = scenario.hbar();
            let matrices: Vec<OperatorMatrix> = scenario
                .base_points
                .par_iter()
                .map(|p| scenario.hamiltonian(p, hbar))
                .collect::<Result<_>>()?;
            let spectra: Vec<SpectralSet> = matrices.par_iter().map(eigen_spectrum).collect::<Result<_>>()?;
            files.push(write_file(dir.join("spectrum.csv"), |out| {
                writeln!(out, "point_id,value")?;
                for (i, s) in spectra.iter().enumerate() {
                    for v in s.values() {
                        writeln!(out, "{i},{v}")?;
                    }
                }
                Ok(())
            })?);
            if options.dump_matrix {
                for (i, m) in matrices.iter().enumerate() {
                    files.push(write_file(dir.join(format!("matrix_{i}.csv")), |out| m.write_csv(out))?);
                }
            }
            Vec::new()
        }
        Experiment::Ess => {
            let report = predicted_ess_spectrum(
                &scenario.action,
                sigma,
                &scenario.symbol,
                &scenario.ladder,
                scenario.hbar(),
            )?;
            files.push(write_file(dir.join("ess.csv"), |out| report.write_csv(out))?);
            ess_checks(&report)
        }
        Experiment::Sweep => {
            let rows = run_hbar_sweep(scenario, sigma)?;
            files.push(write_file(dir.join("sweep.csv"), |out| write_sweep_csv(&rows, out))?);
            sweep_checks(&rows)
        }
        Experiment::Random => {
            let report = run_random_experiment(scenario, scenario.samples, scenario.seed)?;
            files.push(write_file(dir.join("random.csv"), |out| report.write_csv(out))?);
            report.checks()
        }
        Experiment::MoyalCheck => {
            let report = run_moyal_check(scenario)?;
            files.push(write_file(dir.join("moyal.csv"), |out| report.write_csv(out))?);
            report.checks()
        }
    };
    Ok(ExperimentOutcome {
        experiment,
        files,
        checks,
    })
}

/// Sup over base points of `|F_σ(X) − F_{Θ_Y σ}(X − Y)|`-type residual for
/// the scenario's pulled-back family: `F(Θ_Y σ, X)` against `F(σ, X+Y)`.
pub fn scenario_equivariance(scenario: &Scenario, samples: usize, seed: u64) -> Result<f64> {
    let a: &ActionSpec = &scenario.action;
    crate::dynamics::equivariance_residual(
        |sigma, x| pullback_symbol(&scenario.symbol, a, sigma)?.eval(x.x[0], x.xi[0]),
        a,
        samples,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{builtin_catalog, load_scenario};

    const TORUS: &str = "[action]\nid = torus-ap\nfrequencies = 1, 0; 0, 7*pi/8\n[symbol]\nexpr = cos(x) + cos(xi)\n[grid]\nL = 7*pi\nN = 64\n[run]\nname = small-torus\nexperiments = spectrum, random\nhbar = 1, 0.5\nbase_points = torus(0, 0)\nsamples = 3\n";

    #[test]
    fn classical_range_of_trig_symbol() {
        let s = load_scenario(TORUS).unwrap();
        let r = classical_range(&s, &s.base_points[0]).unwrap();
        let full = SpectralSet::interval(-2.0, 2.0, 0.01).unwrap();
        assert!(hausdorff(&r, &full).unwrap() <= CLASSICAL_RESOLUTION);
    }

    #[test]
    fn classical_range_of_constant_and_origin() {
        let text = TORUS.replace("cos(x) + cos(xi)", "0.75");
        let s = load_scenario(&text).unwrap();
        assert_eq!(classical_range(&s, &s.base_points[0]).unwrap().values(), [0.75]);

        let plane = "[action]\nid = real-quantum-plane\n[symbol]\nexpr = (1 + x - xi)*gaussian(x)*gaussian(xi)\n[grid]\nL = 4\nN = 32\n[run]\nname = p\nexperiments = spectrum\nhbar = 1\nbase_points = (0, 0)\n";
        let s = load_scenario(plane).unwrap();
        assert_eq!(classical_range(&s, &s.base_points[0]).unwrap().values(), [1.0]);
    }

    #[test]
    fn constant_sweep_is_exact() {
        let text = TORUS.replace("cos(x) + cos(xi)", "0.75").replace("hbar = 1, 0.5", "hbar = 0.25, 1, 0.5");
        let s = load_scenario(&text).unwrap();
        let rows = run_hbar_sweep(&s, &s.base_points[0]).unwrap();
        assert_eq!(rows.iter().map(|r| r.hbar).collect::<Vec<_>>(), [1.0, 0.5, 0.25]);
        for r in rows {
            assert!(r.d_to_classical <= 1e-12);
            assert!(r.spectrum.values().iter().all(|v| (v - 0.75).abs() <= 1e-12));
        }
    }

    #[test]
    fn random_experiment_contract() {
        let s = load_scenario(TORUS).unwrap();
        let e = run_random_experiment(&s, 1, 0).unwrap_err();
        assert_eq!(e.to_string(), "count ≥ 2 required");
        let a = run_random_experiment(&s, 3, 11).unwrap();
        let b = run_random_experiment(&s, 3, 11).unwrap();
        assert_eq!(a.points, b.points);
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
        assert_ne!(a.points, run_random_experiment(&s, 3, 12).unwrap().points);

        let plane = TORUS.replace("id = torus-ap", "id = translation").replace("experiments = spectrum, random", "experiments = spectrum").replace("torus(0, 0)", "(0, 0)").replace("frequencies = 1, 0; 0, 7*pi/8\n", "");
        let s = load_scenario(&plane).unwrap();
        assert!(run_random_experiment(&s, 3, 0).is_err());
    }

    #[test]
    fn outputs_are_written_per_scenario() {
        let s = load_scenario(TORUS).unwrap();
        let dir = std::env::temp_dir().join(format!("rieffel-exp-{}", std::process::id()));
        let out = run_experiment(&s, Experiment::Spectrum, &dir, &RunOptions { dump_matrix: true }).unwrap();
        assert_eq!(out.files.len(), 2);
        let text = fs::read_to_string(dir.join("small-torus/spectrum.csv")).unwrap();
        assert_eq!(text.lines().next(), Some("point_id,value"));
        assert_eq!(text.lines().count(), 65);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn builtin_families_are_equivariant() {
        for s in builtin_catalog() {
            let r = scenario_equivariance(&s, 200, 3).unwrap();
            assert!(r <= THRESHOLDS.equivariance, "{}: {r:e}", s.name);
        }
    }

    #[test]
    fn quantum_plane_norm_is_attained_on_the_open_quadrant() {
        let s = builtin_catalog().into_iter().find(|s| s.name == "quantum-plane-grid").unwrap();
        let s = Scenario { grid: (8.0, 256), ..s };
        let norm = |p: &StatePoint| {
            let m = s.hamiltonian(p, 1.0).unwrap();
            operator_norm(m.entries())
        };
        let sigma = StatePoint::interior(1.0, 1.0);
        let generic = norm(&sigma);
        let e = quasi_orbit_of(&s.action, &sigma).unwrap();
        let sup = e
            .non_generic_cover
            .iter()
            .map(|id| norm(&s.action.lookup(id).unwrap().generating_point))
            .fold(generic, f64::max);
        assert!(sup <= generic * 1.01, "sup {sup} generic {generic}");
    }
}
