use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rieffel(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rieffel"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("failed to spawn rieffel")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_TORUS: &str = "\
[action]
id = torus-ap
frequencies = 1, 0; 0, 7*pi/8

[symbol]
expr = cos(x) + cos(xi)

[grid]
L = 7*pi
N = 128

[run]
name = small-torus
experiments = spectrum, ess-spectrum, random
hbar = 1, 0.5
base_points = torus(0, 0); torus(1.3, 0.4)
samples = 3
";

#[test]
fn catalog_lists_builtins_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = rieffel(&["catalog"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(names.len(), 8);
    let line = |n: &str| text.lines().find(|l| l.starts_with(n)).unwrap().to_string();
    assert!(line("quantum-plane-grid").contains("real quantum plane"));
    assert!(line("vo-radial-tanh").contains("asymptotic range"));
}

#[test]
fn run_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("torus.cfg"), SMALL_TORUS).unwrap();
    for out in ["a", "b"] {
        let o = rieffel(&["run", "--config", "torus.cfg", "--seed", "7", "--out", out], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for file in ["spectrum.csv", "ess.csv", "random.csv"] {
        let a = fs::read(dir.path().join("a/small-torus").join(file)).unwrap();
        let b = fs::read(dir.path().join("b/small-torus").join(file)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{file}");
    }
    let header = fs::read_to_string(dir.path().join("a/small-torus/random.csv")).unwrap();
    assert!(header.starts_with("sample_id,max_pairwise_d,n_isolated\n"));
}

#[test]
fn seed_changes_random_draws() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("torus.cfg"), SMALL_TORUS).unwrap();
    for (seed, out) in [("1", "a"), ("2", "b")] {
        let o = rieffel(&["random", "--config", "torus.cfg", "--seed", seed, "--out", out], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = fs::read(dir.path().join("a/small-torus/random.csv")).unwrap();
    let b = fs::read(dir.path().join("b/small-torus/random.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn missing_config_exits_1_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = rieffel(&["run", "--config", "missing.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.cfg"));
}

#[test]
fn invalid_values_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("torus.cfg"), SMALL_TORUS).unwrap();
    let o = rieffel(&["run", "--config", "torus.cfg", "--set", "run.hbar=0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("hbar must be in (0,1]"));

    let o = rieffel(&["run", "--config", "torus.cfg", "--set", "grid.width=3"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    fs::write(dir.path().join("bad.cfg"), "[action]\nid = torus-ap\n[nope]\n").unwrap();
    let o = rieffel(&["run", "--config", "bad.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"));

    let o = rieffel(&["random", "--config", "builtin:gaussian-compact", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    let o = rieffel(&["run", "--no-such-flag"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(rieffel(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn failed_check_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("torus.cfg"), SMALL_TORUS).unwrap();
    // On a 32-point grid at ħ = 1 the spectrum is far from [-2, 2].
    let args = ["sweep", "--config", "torus.cfg", "--set", "grid.N=32", "--set", "run.hbar=1", "--check"];
    let o = rieffel(&args, dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL sweep final distance"));
    let o = rieffel(&args[..args.len() - 1], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/small-torus/sweep.csv")).unwrap();
    assert!(csv.starts_with("hbar,d_to_classical,n_eigenvalues,runtime_ms\n"));
}

#[test]
fn dump_matrix_writes_one_file_per_base_point() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("torus.cfg"), SMALL_TORUS).unwrap();
    let o = rieffel(
        &["spectrum", "--config", "torus.cfg", "--set", "grid.N=32", "--dump-matrix", "-v"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("out/small-torus/matrix_0.csv").exists());
    assert!(dir.path().join("out/small-torus/matrix_1.csv").exists());
    assert!(stdout(&o).contains("wrote"));
}

#[test]
fn builtin_moyal_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = rieffel(&["moyal-check", "--config", "builtin:moyal-gaussians", "--check"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/moyal-gaussians/moyal.csv")).unwrap();
    assert!(csv.starts_with("quantity,parameter,value\nmorphism,N=256,"));
}
