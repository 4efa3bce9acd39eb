//! Declarative experiments: a scenario binds a catalog action, a symbol on
//! its state space, base points, a grid and an ħ schedule. Scenarios are
//! loaded from the config format of [`crate::config`]; the built-in
//! catalog is a set of such configs shipped in `configs/`.

use std::fmt;

use crate::config::RawConfig;
use crate::dynamics::{pullback_symbol, ActionKind, ActionSpec, Profile, Radial, StatePoint, StateSymbol};
use crate::error::{Error, Result};
use crate::phase::make_grid;
use crate::symbol::{parse_constant, parse_symbol, SymbolExpr};

/// Experiments a scenario can request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    Spectrum,
    Ess,
    Sweep,
    Random,
    MoyalCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Spectrum,
        Experiment::Ess,
        Experiment::Sweep,
        Experiment::Random,
        Experiment::MoyalCheck,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Ess => "ess-spectrum",
            Experiment::Sweep => "sweep",
            Experiment::Random => "random",
            Experiment::MoyalCheck => "moyal-check",
        }
    }

    pub fn parse(text: &str) -> Option<Experiment> {
        match text.trim() {
            "spectrum" => Some(Experiment::Spectrum),
            "ess-spectrum" | "ess" => Some(Experiment::Ess),
            "sweep" => Some(Experiment::Sweep),
            "random" => Some(Experiment::Random),
            "moyal-check" => Some(Experiment::MoyalCheck),
            _ => None,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Symbols for the deformed-product checks, all on the translation action.
#[derive(Clone, Debug, PartialEq)]
pub struct MoyalPair {
    /// Pair for `Op(f#g) = Op(f)Op(g)`.
    pub f: SymbolExpr,
    pub g: SymbolExpr,
    /// Pair for the second-order expansion of `f#^ħg`.
    pub expansion_f: SymbolExpr,
    pub expansion_g: SymbolExpr,
    /// Half-width of the grid used for the expansion.
    pub expansion_half_width: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub action: ActionSpec,
    pub symbol: StateSymbol,
    pub moyal: Option<MoyalPair>,
    pub base_points: Vec<StatePoint>,
    /// `(L, N)` of the main grid.
    pub grid: (f64, usize),
    /// Rungs for truncation-stable spectra, the last one being the finest.
    pub ladder: Vec<(f64, usize)>,
    /// Spectral resolution override; the grid default `4·Δx` otherwise.
    pub resolution: Option<f64>,
    pub hbar_schedule: Vec<f64>,
    pub experiments: Vec<Experiment>,
    pub seed: u64,
    /// Number of base points drawn by the random experiment.
    pub samples: usize,
    /// Output directory name under the CLI's `--out`.
    pub output_path: String,
}

impl Scenario {
    /// ħ used by the single-ħ experiments: the first schedule entry.
    pub fn hbar(&self) -> f64 {
        self.hbar_schedule[0]
    }
}

struct Reader<'a> {
    raw: &'a RawConfig,
}

impl Reader<'_> {
    fn opt(&self, section: &str, key: &str) -> Option<&str> {
        self.raw.value(section, key)
    }

    fn req(&self, section: &str, key: &str) -> Result<&str> {
        self.opt(section, key)
            .ok_or_else(|| Error::validation(&format!("{section}.{key}"), "missing required key"))
    }

    fn fail(&self, section: &str, key: &str, message: impl Into<String>) -> Error {
        Error::validation(&format!("{section}.{key}"), message)
    }

    fn number(&self, section: &str, key: &str, text: &str) -> Result<f64> {
        parse_constant(text).map_err(|e| self.fail(section, key, e.to_string()))
    }

    fn opt_number(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.opt(section, key)
            .map(|t| self.number(section, key, t))
            .transpose()
    }

    fn integer(&self, section: &str, key: &str, text: &str) -> Result<u64> {
        text.trim()
            .parse::<u64>()
            .map_err(|_| self.fail(section, key, format!("expected a non-negative integer, got `{}`", text.trim())))
    }

    fn symbol(&self, key: &str) -> Result<Option<SymbolExpr>> {
        self.opt("symbol", key)
            .map(|t| parse_symbol(t).map_err(|e| self.fail("symbol", key, e.to_string())))
            .transpose()
    }
}

/// Parses and validates a scenario config.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    load_scenario_with(text, &[])
}

/// [`load_scenario`] with dotted overrides (`grid.N=512`) applied after
/// parsing and before validation.
pub fn load_scenario_with(text: &str, overrides: &[String]) -> Result<Scenario> {
    let mut raw = RawConfig::parse(text)?;
    for o in overrides {
        raw.apply_override(o)?;
    }
    validate(&raw)
}

fn parse_frequencies(r: &Reader, text: &str) -> Result<[[f64; 2]; 2]> {
    let rows: Vec<&str> = text.split(';').collect();
    let bad = || r.fail("action", "frequencies", "expected a 2×2 matrix `a, b; c, d`");
    if rows.len() != 2 {
        return Err(bad());
    }
    let mut m = [[0.0; 2]; 2];
    for (i, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 2 {
            return Err(bad());
        }
        for (j, c) in cols.iter().enumerate() {
            m[i][j] = r.number("action", "frequencies", c)?;
        }
    }
    if (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs() < 1e-12 {
        return Err(r.fail("action", "frequencies", "matrix must be invertible"));
    }
    Ok(m)
}

fn validate_action(r: &Reader) -> Result<ActionSpec> {
    let id = r.req("action", "id")?;
    let frequencies = r
        .opt("action", "frequencies")
        .map(|t| parse_frequencies(r, t))
        .transpose()?;
    let kind = ActionKind::from_id(id.trim(), frequencies).map_err(|e| r.fail("action", "id", e.to_string()))?;
    let mut action = ActionSpec::new(kind);
    if let Some(t) = r.opt("action", "boundary_samples") {
        let k = r.integer("action", "boundary_samples", t)?;
        if k == 0 {
            return Err(r.fail("action", "boundary_samples", "must be at least 1"));
        }
        action = action.with_boundary_samples(k as usize);
    }
    Ok(action)
}

const RADIAL_KEYS: [&str; 3] = ["profile", "base", "amp"];

fn validate_symbol(r: &Reader) -> Result<(StateSymbol, Option<SymbolExpr>)> {
    let reject = |keys: &[&str], why: &str| match keys.iter().find(|k| r.opt("symbol", k).is_some()) {
        Some(k) => Err(r.fail("symbol", k, why.to_string())),
        None => Ok(()),
    };
    match (r.opt("symbol", "expr"), r.opt("symbol", "name")) {
        (Some(_), Some(_)) => Err(r.fail("symbol", "name", "give either `expr` or `name`, not both")),
        (None, None) => Err(r.fail("symbol", "expr", "missing: give `expr` or `name`")),
        (Some(_), None) => {
            reject(&RADIAL_KEYS, "only applies to named radial symbols")?;
            reject(&["trig", "mode"], "only applies to named symbols")?;
            let expr = r.symbol("expr")?.unwrap();
            Ok((StateSymbol::Expr(expr), r.symbol("partner")?))
        }
        (None, Some(name)) => {
            reject(&["partner", "expansion", "expansion_partner"], "only applies to expression symbols")?;
            let radial = || -> Result<Radial> {
                let profile = r
                    .opt("symbol", "profile")
                    .map(Profile::parse)
                    .transpose()
                    .map_err(|e| r.fail("symbol", "profile", e.to_string()))?
                    .unwrap_or(Profile::Tanh);
                Ok(Radial {
                    base: r.opt_number("symbol", "base")?.unwrap_or(0.0),
                    amp: r.opt_number("symbol", "amp")?.unwrap_or(1.0),
                    profile,
                })
            };
            let trig = || -> Result<SymbolExpr> {
                r.symbol("trig")?
                    .ok_or_else(|| r.fail("symbol", "trig", "missing: the torus factor h(θ1, θ2)"))
            };
            let symbol = match name.trim() {
                "radial" => {
                    reject(&["trig", "mode"], "not used by `radial`")?;
                    StateSymbol::Radial(radial()?)
                }
                "radial-times-trig" => {
                    reject(&["mode"], "not used by `radial-times-trig`")?;
                    StateSymbol::RadialTimesTrig { g: radial()?, h: trig()? }
                }
                "radial-plus-trig" => {
                    reject(&["mode"], "not used by `radial-plus-trig`")?;
                    StateSymbol::RadialPlusTrig { g: radial()?, h: trig()? }
                }
                "tanh-product" => {
                    reject(&RADIAL_KEYS, "not used by `tanh-product`")?;
                    reject(&["trig", "mode"], "not used by `tanh-product`")?;
                    StateSymbol::TanhProduct
                }
                "torus-mode" => {
                    reject(&RADIAL_KEYS, "not used by `torus-mode`")?;
                    reject(&["trig"], "not used by `torus-mode`")?;
                    let text = r.req("symbol", "mode")?;
                    let k: Vec<i32> = text
                        .split(',')
                        .map(|t| t.trim().parse::<i32>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| r.fail("symbol", "mode", "expected two integers `k1, k2`"))?;
                    if k.len() != 2 {
                        return Err(r.fail("symbol", "mode", "expected two integers `k1, k2`"));
                    }
                    StateSymbol::TorusMode([k[0], k[1]])
                }
                other => {
                    return Err(r.fail(
                        "symbol",
                        "name",
                        format!(
                            "unknown symbol `{other}` (expected radial, radial-times-trig, radial-plus-trig, tanh-product or torus-mode)"
                        ),
                    ))
                }
            };
            Ok((symbol, None))
        }
    }
}

fn parse_ladder(r: &Reader, text: &str) -> Result<Vec<(f64, usize)>> {
    let mut rungs = Vec::new();
    for item in text.split(',') {
        let (l, n) = item
            .split_once(':')
            .ok_or_else(|| r.fail("grid", "ladder", "expected rungs `L:N, L:N, ...`"))?;
        let l = r.number("grid", "ladder", l)?;
        let n = r.integer("grid", "ladder", n)? as usize;
        make_grid(l, n).map_err(|e| r.fail("grid", "ladder", e.to_string()))?;
        rungs.push((l, n));
    }
    Ok(rungs)
}

fn check_ladder(r: &Reader, ladder: &[(f64, usize)]) -> Result<()> {
    if ladder.len() < 2 {
        return Err(r.fail("grid", "ladder", "needs at least two rungs"));
    }
    if ladder.windows(2).any(|w| w[1].0 < w[0].0 || w[1].1 <= w[0].1) {
        return Err(r.fail(
            "grid",
            "ladder",
            "rungs must have non-decreasing L and increasing N",
        ));
    }
    Ok(())
}

fn validate(raw: &RawConfig) -> Result<Scenario> {
    let r = Reader { raw };
    let action = validate_action(&r)?;
    let (symbol, partner) = validate_symbol(&r)?;
    symbol
        .check_compatible(&action)
        .map_err(|e| r.fail("symbol", if raw.value("symbol", "name").is_some() { "name" } else { "expr" }, e.to_string()))?;

    let l = r.number("grid", "L", r.req("grid", "L")?)?;
    let n = r.integer("grid", "N", r.req("grid", "N")?)? as usize;
    make_grid(l, n).map_err(|e| r.fail("grid", if l > 0.0 { "N" } else { "L" }, e.to_string()))?;
    let ladder = match r.opt("grid", "ladder") {
        Some(t) => parse_ladder(&r, t)?,
        None if n >= 16 => vec![(l, n / 2), (l, n)],
        None => return Err(r.fail("grid", "ladder", "N is too small for the default ladder (L, N/2), (L, N)")),
    };
    check_ladder(&r, &ladder)?;
    let resolution = r.opt_number("grid", "resolution")?;
    if let Some(eps) = resolution {
        if !(eps > 0.0) {
            return Err(r.fail("grid", "resolution", format!("must be positive, got {eps}")));
        }
    }

    let name = r.req("run", "name")?.trim().to_string();
    if !name
        .chars()
        .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_')
    {
        return Err(r.fail("run", "name", "use lowercase letters, digits, `-` and `_` only"));
    }
    let description = r.opt("run", "description").unwrap_or("").to_string();

    let mut experiments = Vec::new();
    for item in r.req("run", "experiments")?.split(',') {
        let e = Experiment::parse(item).ok_or_else(|| {
            r.fail(
                "run",
                "experiments",
                format!(
                    "unknown experiment `{}` (expected spectrum, ess-spectrum, sweep, random or moyal-check)",
                    item.trim()
                ),
            )
        })?;
        if experiments.contains(&e) {
            return Err(r.fail("run", "experiments", format!("`{e}` listed twice")));
        }
        experiments.push(e);
    }

    let mut hbar_schedule = Vec::new();
    for item in r.req("run", "hbar")?.split(',') {
        let h = r.number("run", "hbar", item)?;
        if !(h > 0.0 && h <= 1.0) {
            return Err(r.fail("run", "hbar", format!("hbar must be in (0,1], got {h}")));
        }
        hbar_schedule.push(h);
    }

    let mut base_points = Vec::new();
    for item in r.req("run", "base_points")?.split(';') {
        let p: StatePoint = item.parse().map_err(|e: Error| r.fail("run", "base_points", e.to_string()))?;
        action
            .validate_point(&p)
            .map_err(|e| r.fail("run", "base_points", format!("{p}: {e}")))?;
        pullback_symbol(&symbol, &action, &p).map_err(|e| r.fail("run", "base_points", format!("{p}: {e}")))?;
        base_points.push(p);
    }

    let seed = r.opt("run", "seed").map(|t| r.integer("run", "seed", t)).transpose()?.unwrap_or(0);
    let samples = r
        .opt("run", "samples")
        .map(|t| r.integer("run", "samples", t))
        .transpose()?
        .unwrap_or(5) as usize;
    let output_path = r.opt("run", "out").unwrap_or(&name).trim().to_string();

    if experiments.contains(&Experiment::Random) && !action.is_ergodic() {
        return Err(r.fail(
            "run",
            "experiments",
            format!("`random` needs an ergodic action (torus-ap), not `{}`", action.id()),
        ));
    }
    let expansion_half_width = r.opt_number("grid", "expansion_L")?.unwrap_or(l);
    if !(expansion_half_width > 0.0) {
        return Err(r.fail("grid", "expansion_L", "must be positive"));
    }
    let moyal = match (&symbol, partner) {
        (StateSymbol::Expr(f), Some(g)) => {
            let expansion_f = r.symbol("expansion")?.unwrap_or_else(|| f.clone());
            let expansion_g = r.symbol("expansion_partner")?.unwrap_or_else(|| g.clone());
            Some(MoyalPair {
                f: f.clone(),
                g,
                expansion_f,
                expansion_g,
                expansion_half_width,
            })
        }
        _ => {
            if raw.value("symbol", "expansion").is_some() || raw.value("symbol", "expansion_partner").is_some() {
                return Err(r.fail("symbol", "partner", "expansion symbols need a `partner`"));
            }
            None
        }
    };
    if experiments.contains(&Experiment::MoyalCheck) {
        if moyal.is_none() {
            return Err(r.fail("symbol", "partner", "`moyal-check` needs a partner symbol"));
        }
        if action.kind != ActionKind::Translation {
            return Err(r.fail("action", "id", "`moyal-check` runs on the translation action"));
        }
        if hbar_schedule.len() < 3 {
            return Err(r.fail(
                "run",
                "hbar",
                "`moyal-check` needs the morphism ħ followed by at least two expansion ħ values",
            ));
        }
    }

    Ok(Scenario {
        name,
        description,
        action,
        symbol,
        moyal,
        base_points,
        grid: (l, n),
        ladder,
        resolution,
        hbar_schedule,
        experiments,
        seed,
        samples,
        output_path,
    })
}

/// Config texts of the built-in scenarios, sorted by name.
pub const BUILTIN_CONFIGS: [(&str, &str); 8] = [
    ("gaussian-compact", include_str!("../../../configs/gaussian-compact.cfg")),
    ("moyal-gaussians", include_str!("../../../configs/moyal-gaussians.cfg")),
    ("quantum-plane-grid", include_str!("../../../configs/quantum-plane-grid.cfg")),
    ("torus-harper", include_str!("../../../configs/torus-harper.cfg")),
    ("vo-plus-ap", include_str!("../../../configs/vo-plus-ap.cfg")),
    ("vo-radial-tanh", include_str!("../../../configs/vo-radial-tanh.cfg")),
    ("vo-tensor-vo-tanh", include_str!("../../../configs/vo-tensor-vo-tanh.cfg")),
    ("vo-times-ap", include_str!("../../../configs/vo-times-ap.cfg")),
];

pub fn builtin_config(name: &str) -> Option<&'static str> {
    BUILTIN_CONFIGS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// The built-in scenarios, sorted by name.
pub fn builtin_catalog() -> Vec<Scenario> {
    BUILTIN_CONFIGS
        .iter()
        .map(|(name, text)| load_scenario(text).unwrap_or_else(|e| panic!("built-in scenario {name}: {e}")))
        .collect()
}

/// One line per built-in scenario: name, action, symbol and the expected
/// result.
pub fn print_catalog() -> String {
    let mut out = String::new();
    for s in builtin_catalog() {
        out.push_str(&format!(
            "{:<20} {:<20} {:<44} {}\n",
            s.name,
            s.action.id(),
            s.symbol.to_string(),
            s.description
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[action]\nid = translation\n[symbol]\nexpr = cos(x)+cos(xi)\n[grid]\nL = 8\nN = 256\n[run]\nname = minimal\nexperiments = spectrum\nhbar = 1\nbase_points = (0, 0)\n";

    fn field_of(e: Error) -> String {
        match e {
            Error::Validation { field, .. } => field,
            other => panic!("validation error expected, got {other}"),
        }
    }

    #[test]
    fn minimal_config_loads() {
        let s = load_scenario(MINIMAL).unwrap();
        assert_eq!(s.name, "minimal");
        assert_eq!(s.grid, (8.0, 256));
        assert_eq!(s.ladder, [(8.0, 128), (8.0, 256)]);
        assert_eq!(s.output_path, "minimal");
        assert_eq!(s.experiments, [Experiment::Spectrum]);
        assert_eq!(s.seed, 0);
    }

    #[test]
    fn hbar_out_of_range() {
        let text = MINIMAL.replace("hbar = 1", "hbar = 0");
        let e = load_scenario(&text).unwrap_err();
        assert!(e.to_string().contains("hbar must be in (0,1]"), "{e}");
        assert_eq!(field_of(e), "run.hbar");
        let e = load_scenario_with(MINIMAL, &["run.hbar=1, 2".into()]).unwrap_err();
        assert!(e.to_string().contains("hbar must be in (0,1]"));
    }

    #[test]
    fn base_point_must_match_state_space() {
        let text = MINIMAL
            .replace("id = translation", "id = real-quantum-plane")
            .replace("(0, 0)", "torus(0, 0)");
        assert_eq!(field_of(load_scenario(&text).unwrap_err()), "run.base_points");
    }

    #[test]
    fn overrides_apply_before_validation() {
        let s = load_scenario_with(MINIMAL, &["grid.N=512".into(), "run.seed=42".into()]).unwrap();
        assert_eq!(s.grid.1, 512);
        assert_eq!(s.seed, 42);
        assert!(load_scenario_with(MINIMAL, &["grid.N=500".into()]).is_err());
        assert!(load_scenario_with(MINIMAL, &["grid.M=512".into()]).is_err());
    }

    #[test]
    fn validation_names_fields() {
        let cases = [
            ("id = translation", "id = torus", "action.id"),
            ("expr = cos(x)+cos(xi)", "expr = cos(x", "symbol.expr"),
            ("N = 256", "N = 255", "grid.N"),
            ("experiments = spectrum", "experiments = spectrum, random", "run.experiments"),
            ("experiments = spectrum", "experiments = plot", "run.experiments"),
            ("name = minimal", "name = Minimal Run", "run.name"),
        ];
        for (from, to, expected) in cases {
            let e = load_scenario(&MINIMAL.replace(from, to)).unwrap_err();
            assert_eq!(field_of(e), expected, "{to}");
        }
        let missing = MINIMAL.replace("base_points = (0, 0)\n", "");
        assert_eq!(field_of(load_scenario(&missing).unwrap_err()), "run.base_points");
        let radial = MINIMAL.replace("id = translation", "id = radial-vo");
        assert_eq!(field_of(load_scenario(&radial).unwrap_err()), "symbol.expr");
    }

    #[test]
    fn named_symbols_and_parameters() {
        let text = "[action]\nid = vo-ap\nfrequencies = 1, 0; 0, 7*pi/8\n[symbol]\nname = radial-times-trig\nbase = 1\namp = 0.5\ntrig = cos(x) + cos(xi)\n[grid]\nL = 7*pi\nN = 64\n[run]\nname = t\nexperiments = spectrum\nhbar = 1\nbase_points = finite(0, 0, 1.3, 0.4)\n";
        let s = load_scenario(text).unwrap();
        assert_eq!(s.action.kind.frequencies().unwrap()[1][1], 7.0 * std::f64::consts::PI / 8.0);
        assert!(matches!(s.symbol, StateSymbol::RadialTimesTrig { .. }));
        let bad = text.replace("trig = cos(x) + cos(xi)", "trig = tanh(x)");
        assert_eq!(field_of(load_scenario(&bad).unwrap_err()), "symbol.name");
        let extra = text.replace("base = 1", "base = 1\nmode = 1, 0");
        assert_eq!(field_of(load_scenario(&extra).unwrap_err()), "symbol.mode");
        let singular = text.replace("1, 0; 0, 7*pi/8", "1, 2; 2, 4");
        assert_eq!(field_of(load_scenario(&singular).unwrap_err()), "action.frequencies");
    }

    #[test]
    fn catalog_is_complete_and_sorted() {
        let names: Vec<String> = builtin_catalog().into_iter().map(|s| s.name).collect();
        assert_eq!(
            names,
            [
                "gaussian-compact",
                "moyal-gaussians",
                "quantum-plane-grid",
                "torus-harper",
                "vo-plus-ap",
                "vo-radial-tanh",
                "vo-tensor-vo-tanh",
                "vo-times-ap"
            ]
        );
        let listing = print_catalog();
        let line = |name: &str| listing.lines().find(|l| l.starts_with(name)).unwrap().to_string();
        assert!(line("quantum-plane-grid").contains("real quantum plane"));
        assert!(line("vo-radial-tanh").contains("asymptotic range"));
        assert_eq!(listing, print_catalog());
    }
}
