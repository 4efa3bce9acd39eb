//! Group actions `Θ` of `Ξ = ℝ²` on state spaces `Σ`, their quasi-orbit
//! tables, symbols on `Σ` and the pullbacks `F_σ = f∘Θ_σ` that get
//! quantized.
//!
//! The quasi-orbit structure of each catalog action is analytic metadata:
//! limit sets at infinity are written down, not computed. Points of `Σ∖Ξ`
//! (and points of non-planar state spaces) carry a tag from the action's
//! boundary alphabet plus real coordinates:
//!
//! | action               | tags and coordinates                                  |
//! |----------------------|-------------------------------------------------------|
//! | `translation`        | interior only                                         |
//! | `radial-vo`          | `inf(φ)`: the direction `φ` on the circle at infinity |
//! | `torus-ap`           | `torus(θ₁, θ₂)` only                                  |
//! | `vo-ap`              | `finite(x, ξ, θ₁, θ₂)`, `inf(φ, θ₁, θ₂)`              |
//! | `vo-tensor-vo`       | `x+inf(ξ)`, `x-inf(ξ)`, `xi+inf(x)`, `xi-inf(x)`, and the four corners such as `x+inf,xi-inf()` |
//! | `real-quantum-plane` | interior only                                         |

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phase::{PhaseFunction, PhasePoint};
use crate::symbol::{parse_constant, SymbolExpr};

/// Per-task random stream: the same `(seed, task)` always yields the same
/// numbers, whatever thread runs the task.
pub fn task_rng(seed: u64, task: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task);
    rng
}

/// A point of the state space `Σ`.
#[derive(Clone, Debug, PartialEq)]
pub enum StatePoint {
    Interior(PhasePoint),
    Boundary { tag: String, coords: Vec<f64> },
}

impl StatePoint {
    pub fn interior(x: f64, xi: f64) -> Self {
        StatePoint::Interior(PhasePoint::planar(x, xi))
    }

    pub fn tagged(tag: &str, coords: &[f64]) -> Self {
        StatePoint::Boundary {
            tag: tag.to_string(),
            coords: coords.to_vec(),
        }
    }

    fn tag(&self) -> Option<&str> {
        match self {
            StatePoint::Interior(_) => None,
            StatePoint::Boundary { tag, .. } => Some(tag),
        }
    }

    fn coords(&self) -> &[f64] {
        match self {
            StatePoint::Interior(_) => &[],
            StatePoint::Boundary { coords, .. } => coords,
        }
    }
}

impl fmt::Display for StatePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |c: &[f64]| c.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(", ");
        match self {
            StatePoint::Interior(p) => write!(f, "({})", list(&[p.x.clone(), p.xi.clone()].concat())),
            StatePoint::Boundary { tag, coords } => write!(f, "{tag}({})", list(coords)),
        }
    }
}

impl std::str::FromStr for StatePoint {
    type Err = Error;

    /// `(x, xi)` for interior points, `tag(c1, c2, ...)` otherwise.
    /// Coordinates may be constant expressions such as `pi/4`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Invalid(format!("malformed state point `{s}`"));
        let open = s.find('(').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let coords = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(parse_constant).collect::<Result<Vec<_>>>()?
        };
        let tag = s[..open].trim();
        if tag.is_empty() {
            if coords.len() != 2 {
                return Err(Error::Invalid(format!(
                    "interior point `{s}` needs two coordinates (x, xi)"
                )));
            }
            Ok(StatePoint::interior(coords[0], coords[1]))
        } else {
            Ok(StatePoint::Boundary {
                tag: tag.to_string(),
                coords,
            })
        }
    }
}

/// The catalog of actions, addressed in configs by [`ActionKind::id`].
#[derive(Clone, Debug, PartialEq)]
pub enum ActionKind {
    /// `Σ = Ξ`, `Θ_X(Y) = Y + X`.
    Translation,
    /// `Σ = Ξ ⊔ S¹`, translations inside, fixed points at infinity.
    RadialVo,
    /// `Σ = T²`, `Θ_X(θ) = θ + A·X mod 2π`.
    TorusAp { frequencies: [[f64; 2]; 2] },
    /// `Σ = (Ξ ⊔ S¹) × T²` with the diagonal action.
    VoAp { frequencies: [[f64; 2]; 2] },
    /// `Σ = Ω × Ω*`, `Ω = [−∞, +∞]`, translations per factor.
    VoTensorVo,
    /// `Σ = ℝ²`, `Θ_(x,ξ)(y, η) = (eˣy, e^ξη)`.
    RealQuantumPlane,
}

/// Frequency matrix with rationally independent entries, so the torus
/// action is minimal.
pub const DEFAULT_FREQUENCIES: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, std::f64::consts::SQRT_2]];

pub const ACTION_IDS: [&str; 6] = [
    "translation",
    "radial-vo",
    "torus-ap",
    "vo-ap",
    "vo-tensor-vo",
    "real-quantum-plane",
];

const TENSOR_TAGS: [&str; 8] = [
    "x+inf",
    "x-inf",
    "xi+inf",
    "xi-inf",
    "x+inf,xi+inf",
    "x+inf,xi-inf",
    "x-inf,xi+inf",
    "x-inf,xi-inf",
];

impl ActionKind {
    pub fn id(&self) -> &'static str {
        match self {
            ActionKind::Translation => "translation",
            ActionKind::RadialVo => "radial-vo",
            ActionKind::TorusAp { .. } => "torus-ap",
            ActionKind::VoAp { .. } => "vo-ap",
            ActionKind::VoTensorVo => "vo-tensor-vo",
            ActionKind::RealQuantumPlane => "real-quantum-plane",
        }
    }

    /// Looks up a catalog id. `frequencies` only applies to the torus
    /// factors and defaults to [`DEFAULT_FREQUENCIES`].
    pub fn from_id(id: &str, frequencies: Option<[[f64; 2]; 2]>) -> Result<Self> {
        let a = frequencies.unwrap_or(DEFAULT_FREQUENCIES);
        let kind = match id {
            "translation" => ActionKind::Translation,
            "radial-vo" => ActionKind::RadialVo,
            "torus-ap" => ActionKind::TorusAp { frequencies: a },
            "vo-ap" => ActionKind::VoAp { frequencies: a },
            "vo-tensor-vo" => ActionKind::VoTensorVo,
            "real-quantum-plane" => ActionKind::RealQuantumPlane,
            _ => {
                return Err(Error::Invalid(format!(
                    "unknown action `{id}` (expected one of {})",
                    ACTION_IDS.join(", ")
                )))
            }
        };
        if frequencies.is_some() && kind.frequencies().is_none() {
            return Err(Error::Invalid(format!("action `{id}` takes no frequency matrix")));
        }
        Ok(kind)
    }

    pub fn frequencies(&self) -> Option<[[f64; 2]; 2]> {
        match self {
            ActionKind::TorusAp { frequencies } | ActionKind::VoAp { frequencies } => Some(*frequencies),
            _ => None,
        }
    }
}

/// First or second kind, in the sense of whether the orbit algebra of a
/// point contains `C₀(Ξ)` or meets it trivially.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    First,
    Second,
}

/// Closed-form shape of `H_σ` for the generating point of a quasi-orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumHint {
    /// `F_σ(x, ξ)` depends on `x` only: multiplication by `F_σ(x, 0)`.
    MultiplicationX,
    /// `F_σ(x, ξ)` depends on `ξ` only: Fourier multiplier `F_σ(0, ξ)`.
    MultiplicationXi,
    /// `σ` is a fixed point, `H_σ = f(σ)·id`.
    Constant,
}

impl fmt::Display for SpectrumHint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpectrumHint::MultiplicationX => "multiplication operator by f(Θ_(x,0)σ)",
            SpectrumHint::MultiplicationXi => "Fourier multiplier by f(Θ_(0,ξ)σ)",
            SpectrumHint::Constant => "constant f(σ)",
        })
    }
}

/// An entry of a quasi-orbit table.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiOrbit {
    pub id: String,
    pub kind: Kind,
    pub minimal: bool,
    /// A point generating the quasi-orbit.
    pub generating_point: StatePoint,
    /// Ids of quasi-orbits covering the non-generic points.
    pub non_generic_cover: Vec<String>,
    pub hint: Option<SpectrumHint>,
    /// Distance within which sampled orbit points of the generating point
    /// must approach each cover representative.
    pub witness_distance: f64,
}

impl QuasiOrbit {
    fn new(id: impl Into<String>, kind: Kind, generating_point: StatePoint) -> Self {
        QuasiOrbit {
            id: id.into(),
            kind,
            minimal: true,
            generating_point,
            non_generic_cover: Vec::new(),
            hint: None,
            witness_distance: 0.0,
        }
    }

    fn covered_by(mut self, cover: Vec<String>, witness_distance: f64) -> Self {
        self.minimal = cover.is_empty();
        self.non_generic_cover = cover;
        self.witness_distance = witness_distance;
        self
    }

    fn hinted(mut self, hint: SpectrumHint) -> Self {
        self.hint = Some(hint);
        self
    }
}

/// A catalog action with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSpec {
    pub kind: ActionKind,
    /// Number of sampled directions standing in for the circle at infinity
    /// in quasi-orbit covers.
    pub boundary_samples: usize,
}

/// Witness tolerance in the compactified metric.
const WITNESS_DISTANCE: f64 = 0.05;
const WITNESS_DISTANCE_TORUS: f64 = 0.1;

impl ActionSpec {
    pub fn new(kind: ActionKind) -> Self {
        ActionSpec {
            kind,
            boundary_samples: 8,
        }
    }

    pub fn with_boundary_samples(mut self, k: usize) -> Self {
        self.boundary_samples = k.max(1);
        self
    }

    pub fn id(&self) -> &'static str {
        self.kind.id()
    }

    /// Phase-space dimension `n`; numerics are planar.
    pub fn dim(&self) -> usize {
        1
    }

    pub fn boundary_alphabet(&self) -> &'static [&'static str] {
        match self.kind {
            ActionKind::Translation | ActionKind::RealQuantumPlane => &[],
            ActionKind::RadialVo => &["inf"],
            ActionKind::TorusAp { .. } => &["torus"],
            ActionKind::VoAp { .. } => &["finite", "inf"],
            ActionKind::VoTensorVo => &TENSOR_TAGS,
        }
    }

    /// The action acts ergodically (and here minimally) on its state space.
    pub fn is_ergodic(&self) -> bool {
        matches!(self.kind, ActionKind::TorusAp { .. })
    }

    fn has_interior(&self) -> bool {
        matches!(
            self.kind,
            ActionKind::Translation
                | ActionKind::RadialVo
                | ActionKind::VoTensorVo
                | ActionKind::RealQuantumPlane
        )
    }

    fn tag_arity(&self, tag: &str) -> usize {
        match (&self.kind, tag) {
            (ActionKind::RadialVo, _) => 1,
            (ActionKind::TorusAp { .. }, _) => 2,
            (ActionKind::VoAp { .. }, "finite") => 4,
            (ActionKind::VoAp { .. }, _) => 3,
            (ActionKind::VoTensorVo, t) if t.contains(',') => 0,
            _ => 1,
        }
    }

    /// Checks that `σ` is a point of this action's state space.
    pub fn validate_point(&self, sigma: &StatePoint) -> Result<()> {
        match sigma {
            StatePoint::Interior(p) => {
                if !self.has_interior() {
                    return Err(Error::Invalid(format!(
                        "`{}` has no interior points; use one of the tags {}",
                        self.id(),
                        self.boundary_alphabet().join(", ")
                    )));
                }
                if p.dim() != self.dim() {
                    return Err(Error::Dimension {
                        expected: self.dim(),
                        found: p.dim(),
                    });
                }
                Ok(())
            }
            StatePoint::Boundary { tag, coords } => {
                if !self.boundary_alphabet().contains(&tag.as_str()) {
                    return Err(Error::UnknownTag {
                        tag: tag.clone(),
                        action: self.id().to_string(),
                    });
                }
                let arity = self.tag_arity(tag);
                if coords.len() != arity {
                    return Err(Error::Invalid(format!(
                        "tag `{tag}` of `{}` takes {arity} coordinate(s), got {}",
                        self.id(),
                        coords.len()
                    )));
                }
                if coords.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Invalid("state point has non-finite coordinates".into()));
                }
                Ok(())
            }
        }
    }

    /// `Θ_X(σ)`.
    pub fn act(&self, sigma: &StatePoint, x: &PhasePoint) -> Result<StatePoint> {
        self.validate_point(sigma)?;
        if x.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(self.act_unchecked(sigma, x.first_pair()))
    }

    fn act_unchecked(&self, sigma: &StatePoint, (dx, dxi): (f64, f64)) -> StatePoint {
        let torus = |a: &[[f64; 2]; 2], t1: f64, t2: f64| {
            (
                (t1 + a[0][0] * dx + a[0][1] * dxi).rem_euclid(TAU),
                (t2 + a[1][0] * dx + a[1][1] * dxi).rem_euclid(TAU),
            )
        };
        match (&self.kind, sigma) {
            (ActionKind::RealQuantumPlane, StatePoint::Interior(p)) => {
                StatePoint::interior(dx.exp() * p.x[0], dxi.exp() * p.xi[0])
            }
            (_, StatePoint::Interior(p)) => StatePoint::interior(p.x[0] + dx, p.xi[0] + dxi),
            (_, StatePoint::Boundary { tag, coords }) => {
                let c = coords;
                let moved = match (&self.kind, tag.as_str()) {
                    (ActionKind::TorusAp { frequencies }, _) => {
                        let (t1, t2) = torus(frequencies, c[0], c[1]);
                        vec![t1, t2]
                    }
                    (ActionKind::VoAp { frequencies }, "finite") => {
                        let (t1, t2) = torus(frequencies, c[2], c[3]);
                        vec![c[0] + dx, c[1] + dxi, t1, t2]
                    }
                    (ActionKind::VoAp { frequencies }, _) => {
                        let (t1, t2) = torus(frequencies, c[1], c[2]);
                        vec![c[0], t1, t2]
                    }
                    (ActionKind::VoTensorVo, "x+inf" | "x-inf") => vec![c[0] + dxi],
                    (ActionKind::VoTensorVo, "xi+inf" | "xi-inf") => vec![c[0] + dx],
                    _ => c.clone(),
                };
                StatePoint::Boundary {
                    tag: tag.clone(),
                    coords: moved,
                }
            }
        }
    }

    /// Distance in a compact model of `Σ`: the plane is shrunk into the
    /// unit disc by `X ↦ X/(1+|X|)` for radial systems and per coordinate
    /// by `tanh` for the tensor system, torus angles use the circle
    /// distance, and the quantum plane keeps the Euclidean metric. Points
    /// of different strata are infinitely far apart when no common model
    /// applies.
    pub fn distance(&self, a: &StatePoint, b: &StatePoint) -> f64 {
        let angle = |s: f64, t: f64| {
            let d = (s - t).rem_euclid(TAU);
            d.min(TAU - d)
        };
        let disc = |sigma: &StatePoint, offset: usize| -> [f64; 2] {
            match sigma {
                StatePoint::Interior(p) => shrink(p.x[0], p.xi[0]),
                StatePoint::Boundary { tag, coords } if tag == "inf" => {
                    [coords[0].cos(), coords[0].sin()]
                }
                StatePoint::Boundary { coords, .. } => shrink(coords[offset], coords[offset + 1]),
            }
        };
        match &self.kind {
            ActionKind::Translation | ActionKind::RealQuantumPlane => match (a, b) {
                (StatePoint::Interior(p), StatePoint::Interior(q)) => {
                    (p.x[0] - q.x[0]).hypot(p.xi[0] - q.xi[0])
                }
                _ => f64::INFINITY,
            },
            ActionKind::RadialVo => {
                let (p, q) = (disc(a, 0), disc(b, 0));
                (p[0] - q[0]).hypot(p[1] - q[1])
            }
            ActionKind::TorusAp { .. } => {
                let (p, q) = (a.coords(), b.coords());
                angle(p[0], q[0]).max(angle(p[1], q[1]))
            }
            ActionKind::VoAp { .. } => {
                let (p, q) = (disc(a, 0), disc(b, 0));
                let (s, t) = (a.coords(), b.coords());
                let k = |sigma: &StatePoint| if sigma.tag() == Some("finite") { 2 } else { 1 };
                let (i, j) = (k(a), k(b));
                (p[0] - q[0])
                    .hypot(p[1] - q[1])
                    .max(angle(s[i], t[j]))
                    .max(angle(s[i + 1], t[j + 1]))
            }
            ActionKind::VoTensorVo => {
                let (p, q) = (tensor_coords(a), tensor_coords(b));
                (p[0] - q[0]).abs().max((p[1] - q[1]).abs())
            }
        }
    }

    /// Random point of `Σ` for property checks.
    pub fn sample_state(&self, rng: &mut impl Rng) -> StatePoint {
        let mut u = |r: f64| rng.gen_range(-r..r);
        match &self.kind {
            ActionKind::Translation | ActionKind::RealQuantumPlane => StatePoint::interior(u(2.0), u(2.0)),
            ActionKind::RadialVo => {
                if u(1.0) < 0.0 {
                    StatePoint::interior(u(3.0), u(3.0))
                } else {
                    StatePoint::tagged("inf", &[u(PI)])
                }
            }
            ActionKind::TorusAp { .. } => StatePoint::tagged("torus", &[u(PI) + PI, u(PI) + PI]),
            ActionKind::VoAp { .. } => {
                if u(1.0) < 0.0 {
                    StatePoint::tagged("finite", &[u(3.0), u(3.0), u(PI) + PI, u(PI) + PI])
                } else {
                    StatePoint::tagged("inf", &[u(PI), u(PI) + PI, u(PI) + PI])
                }
            }
            ActionKind::VoTensorVo => {
                let pick = ((u(1.0) + 1.0) * 4.5) as usize;
                match pick {
                    0..=3 => StatePoint::tagged(TENSOR_TAGS[pick], &[u(3.0)]),
                    4..=7 => StatePoint::tagged(TENSOR_TAGS[pick], &[]),
                    _ => StatePoint::interior(u(3.0), u(3.0)),
                }
            }
        }
    }

    fn boundary_angles(&self) -> Vec<f64> {
        let k = self.boundary_samples;
        (0..k).map(|i| TAU * i as f64 / k as f64).collect()
    }

    /// The full quasi-orbit table, with the circle at infinity represented
    /// by `boundary_samples` directions.
    pub fn quasi_orbits(&self) -> Vec<QuasiOrbit> {
        match &self.kind {
            ActionKind::Translation => vec![self.lookup("Xi").unwrap()],
            ActionKind::RadialVo => {
                let mut out = vec![self.lookup("Sigma").unwrap()];
                out.extend(self.boundary_angles().into_iter().map(|p| self.boundary_orbit(p)));
                out
            }
            ActionKind::TorusAp { .. } => vec![self.lookup("T2").unwrap()],
            ActionKind::VoAp { .. } => {
                let mut out = vec![self.lookup("sheet").unwrap()];
                out.extend(self.boundary_angles().into_iter().map(|p| self.boundary_orbit(p)));
                out
            }
            ActionKind::VoTensorVo => std::iter::once("Sigma")
                .chain(TENSOR_TAGS)
                .map(|id| self.lookup(id).unwrap())
                .collect(),
            ActionKind::RealQuantumPlane => {
                ["Q++", "Q+-", "Q-+", "Q--", "X+", "X-", "Xi+", "Xi-", "O"]
                    .iter()
                    .map(|id| self.lookup(id).unwrap())
                    .collect()
            }
        }
    }

    fn boundary_orbit(&self, phi: f64) -> QuasiOrbit {
        let id = format!("inf:{phi:.6}");
        match self.kind {
            ActionKind::VoAp { .. } => QuasiOrbit::new(id, Kind::Second, StatePoint::tagged("inf", &[phi, 0.0, 0.0])),
            _ => QuasiOrbit::new(id, Kind::Second, StatePoint::tagged("inf", &[phi]))
                .hinted(SpectrumHint::Constant),
        }
    }

    /// Table entry by id.
    pub fn lookup(&self, id: &str) -> Result<QuasiOrbit> {
        let missing = || Error::Uncataloged(format!("{} (no quasi-orbit `{id}`)", self.id()));
        let inf_cover = || -> Vec<String> {
            self.boundary_angles()
                .into_iter()
                .map(|p| self.boundary_orbit(p).id)
                .collect()
        };
        let e = match (&self.kind, id) {
            (ActionKind::Translation, "Xi") => QuasiOrbit::new(id, Kind::First, StatePoint::interior(0.0, 0.0)),
            (ActionKind::RadialVo, "Sigma") => QuasiOrbit::new(id, Kind::First, StatePoint::interior(0.0, 0.0))
                .covered_by(inf_cover(), WITNESS_DISTANCE),
            (ActionKind::TorusAp { .. }, "T2") => {
                QuasiOrbit::new(id, Kind::Second, StatePoint::tagged("torus", &[0.0, 0.0]))
            }
            (ActionKind::VoAp { .. }, "sheet") => QuasiOrbit::new(
                id,
                Kind::First,
                StatePoint::tagged("finite", &[0.0, 0.0, 0.0, 0.0]),
            )
            .covered_by(inf_cover(), WITNESS_DISTANCE_TORUS),
            (ActionKind::RadialVo | ActionKind::VoAp { .. }, _) if id.starts_with("inf:") => {
                let phi: f64 = id[4..].parse().map_err(|_| missing())?;
                self.boundary_orbit(phi)
            }
            (ActionKind::VoTensorVo, "Sigma") => {
                let cover = TENSOR_TAGS[..4].iter().map(|s| s.to_string()).collect();
                QuasiOrbit::new(id, Kind::First, StatePoint::interior(0.0, 0.0))
                    .covered_by(cover, WITNESS_DISTANCE)
            }
            (ActionKind::VoTensorVo, t) if TENSOR_TAGS.contains(&t) => {
                if t.contains(',') {
                    QuasiOrbit::new(id, Kind::Second, StatePoint::tagged(t, &[]))
                        .hinted(SpectrumHint::Constant)
                } else {
                    let corners = TENSOR_TAGS[4..]
                        .iter()
                        .filter(|c| c.split(',').any(|part| part == t))
                        .map(|c| c.to_string())
                        .collect();
                    let hint = if t.starts_with("xi") {
                        SpectrumHint::MultiplicationX
                    } else {
                        SpectrumHint::MultiplicationXi
                    };
                    QuasiOrbit::new(id, Kind::Second, StatePoint::tagged(t, &[0.0]))
                        .covered_by(corners, WITNESS_DISTANCE)
                        .hinted(hint)
                }
            }
            (ActionKind::RealQuantumPlane, _) => {
                let sign = |c: char| if c == '+' { 1.0 } else { -1.0 };
                let chars: Vec<char> = id.chars().collect();
                match id {
                    "O" => QuasiOrbit::new(id, Kind::Second, StatePoint::interior(0.0, 0.0))
                        .hinted(SpectrumHint::Constant),
                    "X+" | "X-" => QuasiOrbit::new(id, Kind::Second, StatePoint::interior(sign(chars[1]), 0.0))
                        .covered_by(vec!["O".into()], WITNESS_DISTANCE)
                        .hinted(SpectrumHint::MultiplicationX),
                    "Xi+" | "Xi-" => QuasiOrbit::new(id, Kind::Second, StatePoint::interior(0.0, sign(chars[2])))
                        .covered_by(vec!["O".into()], WITNESS_DISTANCE)
                        .hinted(SpectrumHint::MultiplicationXi),
                    "Q++" | "Q+-" | "Q-+" | "Q--" => {
                        let (sy, se) = (chars[1], chars[2]);
                        QuasiOrbit::new(id, Kind::First, StatePoint::interior(sign(sy), sign(se)))
                            .covered_by(vec![format!("X{sy}"), format!("Xi{se}")], WITNESS_DISTANCE)
                    }
                    _ => return Err(missing()),
                }
            }
            _ => return Err(missing()),
        };
        Ok(e)
    }

    /// Whether `σ` lies in the quasi-orbit `e`, from the closed-form
    /// description of each table entry.
    pub fn contains(&self, e: &QuasiOrbit, sigma: &StatePoint) -> Result<bool> {
        self.validate_point(sigma)?;
        let c = sigma.coords();
        let same_angle = |a: f64, b: f64| {
            let d = (a - b).rem_euclid(TAU);
            d.min(TAU - d) <= 1e-9
        };
        Ok(match (&self.kind, e.id.as_str()) {
            (ActionKind::Translation, _) | (ActionKind::TorusAp { .. }, _) => true,
            (ActionKind::RadialVo, "Sigma") | (ActionKind::VoTensorVo, "Sigma") => true,
            (ActionKind::RadialVo, _) => sigma.tag() == Some("inf") && same_angle(c[0], e.generating_point.coords()[0]),
            (ActionKind::VoAp { frequencies: a }, "sheet") => match sigma.tag() {
                Some("finite") => {
                    let g = e.generating_point.coords();
                    let invariant = |p: &[f64], i: usize| p[2 + i] - a[i][0] * p[0] - a[i][1] * p[1];
                    (0..2).all(|i| same_angle(invariant(c, i), invariant(g, i)))
                }
                _ => true,
            },
            (ActionKind::VoAp { .. }, _) => {
                sigma.tag() == Some("inf") && same_angle(c[0], e.generating_point.coords()[0])
            }
            (ActionKind::VoTensorVo, id) => match sigma.tag() {
                None => false,
                Some(t) => t == id || (!id.contains(',') && t.split(',').any(|part| part == id)),
            },
            (ActionKind::RealQuantumPlane, id) => {
                let p = match sigma {
                    StatePoint::Interior(p) => (p.x[0], p.xi[0]),
                    _ => unreachable!("validated"),
                };
                let side = |v: f64, c: char| match c {
                    '+' => v >= 0.0,
                    _ => v <= 0.0,
                };
                let chars: Vec<char> = id.chars().collect();
                match id {
                    "O" => p == (0.0, 0.0),
                    "X+" | "X-" => p.1 == 0.0 && side(p.0, chars[1]),
                    "Xi+" | "Xi-" => p.0 == 0.0 && side(p.1, chars[2]),
                    _ => side(p.0, chars[1]) && side(p.1, chars[2]),
                }
            }
        })
    }
}

fn shrink(x: f64, xi: f64) -> [f64; 2] {
    let r = x.hypot(xi);
    [x / (1.0 + r), xi / (1.0 + r)]
}

fn tensor_coords(sigma: &StatePoint) -> [f64; 2] {
    match sigma {
        StatePoint::Interior(p) => [p.x[0].tanh(), p.xi[0].tanh()],
        StatePoint::Boundary { tag, coords } => {
            let mut out = [f64::NAN; 2];
            for part in tag.split(',') {
                match part {
                    "x+inf" => out[0] = 1.0,
                    "x-inf" => out[0] = -1.0,
                    "xi+inf" => out[1] = 1.0,
                    _ => out[1] = -1.0,
                }
            }
            for v in out.iter_mut().filter(|v| v.is_nan()) {
                *v = coords[0].tanh();
            }
            out
        }
    }
}

/// `E_σ`, the table entry generated by `σ`.
pub fn quasi_orbit_of(a: &ActionSpec, sigma: &StatePoint) -> Result<QuasiOrbit> {
    a.validate_point(sigma)?;
    let c = sigma.coords();
    match (&a.kind, sigma) {
        (ActionKind::Translation, _) => a.lookup("Xi"),
        (ActionKind::RadialVo | ActionKind::VoTensorVo, StatePoint::Interior(_)) => a.lookup("Sigma"),
        (ActionKind::RadialVo, _) => Ok(a.boundary_orbit(c[0].rem_euclid(TAU))),
        (ActionKind::TorusAp { .. }, _) => {
            let mut e = a.lookup("T2")?;
            e.generating_point = sigma.clone();
            Ok(e)
        }
        (ActionKind::VoAp { .. }, _) if sigma.tag() == Some("finite") => {
            let mut e = a.lookup("sheet")?;
            e.generating_point = sigma.clone();
            Ok(e)
        }
        (ActionKind::VoAp { .. }, _) => {
            let mut e = a.boundary_orbit(c[0].rem_euclid(TAU));
            e.generating_point = sigma.clone();
            Ok(e)
        }
        (ActionKind::VoTensorVo, StatePoint::Boundary { tag, coords }) => {
            let mut e = a.lookup(tag)?;
            if !coords.is_empty() {
                e.generating_point = sigma.clone();
            }
            Ok(e)
        }
        (ActionKind::RealQuantumPlane, StatePoint::Interior(p)) => {
            let s = |v: f64| if v > 0.0 { '+' } else { '-' };
            let (y, eta) = (p.x[0], p.xi[0]);
            let id = match (y == 0.0, eta == 0.0) {
                (true, true) => "O".to_string(),
                (false, true) => format!("X{}", s(y)),
                (true, false) => format!("Xi{}", s(eta)),
                (false, false) => format!("Q{}{}", s(y), s(eta)),
            };
            let mut e = a.lookup(&id)?;
            e.generating_point = sigma.clone();
            Ok(e)
        }
        _ => Err(Error::Uncataloged(a.id().to_string())),
    }
}

/// The table's kind, after checking the minimal-implies-second-kind rule.
pub fn classify_kind(e: &QuasiOrbit) -> Result<Kind> {
    if e.minimal && e.id != "Xi" && e.kind != Kind::Second {
        return Err(Error::Invalid(format!(
            "quasi-orbit `{}` is minimal but labeled first kind",
            e.id
        )));
    }
    if e.minimal != e.non_generic_cover.is_empty() {
        return Err(Error::Invalid(format!(
            "quasi-orbit `{}`: minimality disagrees with its cover",
            e.id
        )));
    }
    Ok(e.kind)
}

/// The covering of the non-generic points of a first-kind quasi-orbit by
/// sub-quasi-orbits, in table order.
pub fn non_generic_suborbits(a: &ActionSpec, e: &QuasiOrbit) -> Result<Vec<QuasiOrbit>> {
    if classify_kind(e)? == Kind::Second {
        return Err(Error::SecondKind(e.id.clone()));
    }
    e.non_generic_cover.iter().map(|id| a.lookup(id)).collect()
}

/// Largest, over the cover representatives of `e`, of the smallest
/// distance reached by `samples` random orbit points `Θ_X(σ_E)`. The
/// displacements `X` have log-uniform length in `[1, 10⁶]` and uniform
/// direction, so both bounded and far-out parts of the orbit get visited.
pub fn orbit_witness(a: &ActionSpec, e: &QuasiOrbit, samples: usize, seed: u64) -> Result<f64> {
    let reps: Vec<StatePoint> = e
        .non_generic_cover
        .iter()
        .map(|id| a.lookup(id).map(|f| f.generating_point))
        .collect::<Result<_>>()?;
    if reps.is_empty() {
        return Ok(0.0);
    }
    let chunks = 64usize;
    let per_chunk = samples.div_ceil(chunks);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = task_rng(seed, c as u64);
            let mut best = vec![f64::INFINITY; reps.len()];
            for _ in 0..per_chunk {
                let r = (rng.gen::<f64>() * 1e6f64.ln()).exp();
                let t = rng.gen::<f64>() * TAU;
                let moved = a.act_unchecked(&e.generating_point, (r * t.cos(), r * t.sin()));
                for (b, rep) in best.iter_mut().zip(&reps) {
                    *b = b.min(a.distance(&moved, rep));
                }
            }
            best
        })
        .reduce(
            || vec![f64::INFINITY; reps.len()],
            |x, y| x.iter().zip(&y).map(|(p, q)| p.min(*q)).collect(),
        );
    Ok(best.into_iter().fold(0.0, f64::max))
}

/// Profile `φ` of a radial symbol `g(X) = base + amp·φ(|X|²)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// `tanh t`, limit 1.
    Tanh,
    /// `(2/π)·atan t`, limit 1.
    Atan,
    /// `e^{-t}`, limit 0.
    Gaussian,
}

impl Profile {
    pub fn parse(name: &str) -> Result<Self> {
        match name.trim() {
            "tanh" => Ok(Profile::Tanh),
            "atan" => Ok(Profile::Atan),
            "gaussian" => Ok(Profile::Gaussian),
            other => Err(Error::Invalid(format!(
                "unknown radial profile `{other}` (expected tanh, atan or gaussian)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Tanh => "tanh",
            Profile::Atan => "atan",
            Profile::Gaussian => "gaussian",
        }
    }

    fn apply(self, t: f64) -> f64 {
        match self {
            Profile::Tanh => t.tanh(),
            Profile::Atan => 2.0 * t.atan() / PI,
            Profile::Gaussian => (-t).exp(),
        }
    }

    fn limit(self) -> f64 {
        match self {
            Profile::Tanh | Profile::Atan => 1.0,
            Profile::Gaussian => 0.0,
        }
    }
}

/// A vanishing-oscillation radial symbol with a known limit at infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Radial {
    pub base: f64,
    pub amp: f64,
    pub profile: Profile,
}

impl Radial {
    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        self.base + self.amp * self.profile.apply(x * x + xi * xi)
    }

    /// The value on the whole circle at infinity.
    pub fn limit(&self) -> f64 {
        self.base + self.amp * self.profile.limit()
    }

    fn bound(&self) -> f64 {
        self.base.abs() + self.amp.abs()
    }
}

impl fmt::Display for Radial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*{}(|X|^2)", self.base, self.amp, self.profile.name())
    }
}

/// A bounded continuous function on `Σ`.
///
/// Free expressions only know the interior (or torus angles, read as
/// `x = θ₁`, `xi = θ₂`); symbols that must be evaluated at infinity are
/// named shapes with closed-form boundary values.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSymbol {
    Expr(SymbolExpr),
    Radial(Radial),
    /// `g(X)·h(θ)` on the `vo-ap` system.
    RadialTimesTrig { g: Radial, h: SymbolExpr },
    /// `g(X) + h(θ)` on the `vo-ap` system.
    RadialPlusTrig { g: Radial, h: SymbolExpr },
    /// `tanh(x)·tanh(ξ)` extended to `Ω × Ω*`.
    TanhProduct,
    /// `e^{i(k₁θ₁ + k₂θ₂)}` on the torus.
    TorusMode([i32; 2]),
}

impl fmt::Display for StateSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSymbol::Expr(e) => write!(f, "{e}"),
            StateSymbol::Radial(g) => write!(f, "{g}"),
            StateSymbol::RadialTimesTrig { g, h } => write!(f, "({g})*({h})"),
            StateSymbol::RadialPlusTrig { g, h } => write!(f, "({g}) + ({h})"),
            StateSymbol::TanhProduct => write!(f, "tanh(x)*tanh(xi)"),
            StateSymbol::TorusMode([a, b]) => write!(f, "exp(i({a}θ1 + {b}θ2))"),
        }
    }
}

impl StateSymbol {
    pub fn is_real(&self) -> bool {
        !matches!(self, StateSymbol::TorusMode(_))
    }

    pub fn bound(&self) -> Option<f64> {
        match self {
            StateSymbol::Expr(e) => e.bound(),
            StateSymbol::Radial(g) => Some(g.bound()),
            StateSymbol::RadialTimesTrig { g, h } => h.bound().map(|m| m * g.bound()),
            StateSymbol::RadialPlusTrig { g, h } => h.bound().map(|m| m + g.bound()),
            StateSymbol::TanhProduct | StateSymbol::TorusMode(_) => Some(1.0),
        }
    }

    /// Checks that the symbol is defined on the whole state space of `a`.
    /// Free expressions are rejected wherever `Σ` has points at infinity.
    pub fn check_compatible(&self, a: &ActionSpec) -> Result<()> {
        let ok = match (self, &a.kind) {
            (StateSymbol::Expr(e), ActionKind::TorusAp { .. }) => {
                check_periodic(e)?;
                true
            }
            (StateSymbol::Expr(_), ActionKind::Translation | ActionKind::RealQuantumPlane) => true,
            (StateSymbol::Radial(_), ActionKind::Translation | ActionKind::RadialVo) => true,
            (StateSymbol::RadialTimesTrig { h, .. } | StateSymbol::RadialPlusTrig { h, .. }, ActionKind::VoAp { .. }) => {
                check_periodic(h)?;
                true
            }
            (StateSymbol::TanhProduct, ActionKind::VoTensorVo | ActionKind::Translation) => true,
            (StateSymbol::TorusMode(_), ActionKind::TorusAp { .. }) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "symbol `{self}` is not defined on the state space of `{}`",
                a.id()
            )))
        }
    }

    /// `f(σ)`.
    pub fn eval(&self, a: &ActionSpec, sigma: &StatePoint) -> Result<Complex64> {
        let real = |v: f64| Ok(Complex64::new(v, 0.0));
        let no_boundary = || {
            Err(Error::Invalid(format!(
                "symbol `{self}` has no value at the boundary point {sigma} of `{}`",
                a.id()
            )))
        };
        let c = sigma.coords();
        match (self, sigma) {
            (StateSymbol::Expr(e), StatePoint::Interior(p)) => real(e.eval_planar(p.x[0], p.xi[0])?),
            (StateSymbol::Expr(e), _) if sigma.tag() == Some("torus") => real(e.eval_planar(c[0], c[1])?),
            (StateSymbol::Radial(g), StatePoint::Interior(p)) => real(g.eval(p.x[0], p.xi[0])),
            (StateSymbol::Radial(g), _) if sigma.tag() == Some("inf") => real(g.limit()),
            (StateSymbol::RadialTimesTrig { g, h }, _) => match sigma.tag() {
                Some("finite") => real(g.eval(c[0], c[1]) * h.eval_planar(c[2], c[3])?),
                Some("inf") => real(g.limit() * h.eval_planar(c[1], c[2])?),
                _ => no_boundary(),
            },
            (StateSymbol::RadialPlusTrig { g, h }, _) => match sigma.tag() {
                Some("finite") => real(g.eval(c[0], c[1]) + h.eval_planar(c[2], c[3])?),
                Some("inf") => real(g.limit() + h.eval_planar(c[1], c[2])?),
                _ => no_boundary(),
            },
            (StateSymbol::TanhProduct, StatePoint::Interior(p)) => real(p.x[0].tanh() * p.xi[0].tanh()),
            (StateSymbol::TanhProduct, StatePoint::Boundary { .. }) => {
                let t = tensor_coords(sigma);
                real(t[0] * t[1])
            }
            (StateSymbol::TorusMode([k1, k2]), _) if sigma.tag() == Some("torus") => {
                Ok(Complex64::from_polar(1.0, *k1 as f64 * c[0] + *k2 as f64 * c[1]))
            }
            _ => no_boundary(),
        }
    }
}

/// Torus symbols are written in the angles; they must be `2π`-periodic in
/// each of them.
fn check_periodic(e: &SymbolExpr) -> Result<()> {
    for i in 0..7 {
        let (t1, t2) = (0.37 + 0.91 * i as f64, 1.13 - 0.57 * i as f64);
        let v = e.eval_planar(t1, t2)?;
        for (s1, s2) in [(t1 + TAU, t2), (t1, t2 + TAU)] {
            if (e.eval_planar(s1, s2)? - v).abs() > 1e-9 * (1.0 + v.abs()) {
                return Err(Error::Invalid(format!(
                    "torus symbol `{e}` is not 2π-periodic in both angles"
                )));
            }
        }
    }
    Ok(())
}

/// The phase function `F_σ = f∘Θ_σ`, ready for quantization.
#[derive(Clone, Debug)]
pub struct Pullback {
    symbol: StateSymbol,
    action: ActionSpec,
    base: StatePoint,
}

impl Pullback {
    pub fn base(&self) -> &StatePoint {
        &self.base
    }

    pub fn symbol(&self) -> &StateSymbol {
        &self.symbol
    }

    pub fn action(&self) -> &ActionSpec {
        &self.action
    }

    /// `F_σ` moved to another base point of the same system.
    pub fn at(&self, base: StatePoint) -> Result<Pullback> {
        pullback_symbol(&self.symbol, &self.action, &base)
    }
}

impl PhaseFunction for Pullback {
    fn eval(&self, x: f64, xi: f64) -> Result<Complex64> {
        let moved = self.action.act_unchecked(&self.base, (x, xi));
        self.symbol.eval(&self.action, &moved)
    }

    fn is_real(&self) -> bool {
        self.symbol.is_real()
    }

    fn bound(&self) -> Option<f64> {
        self.symbol.bound()
    }
}

/// `F_σ(X) = f(Θ_X(σ))`.
pub fn pullback_symbol(f: &StateSymbol, a: &ActionSpec, sigma: &StatePoint) -> Result<Pullback> {
    a.validate_point(sigma)?;
    f.check_compatible(a)?;
    f.eval(a, sigma)?;
    Ok(Pullback {
        symbol: f.clone(),
        action: a.clone(),
        base: sigma.clone(),
    })
}

/// Largest `|Θ_X(Θ_Y σ) − Θ_{X+Y} σ|` in the action's metric over seeded
/// samples with `X, Y` in `[−3, 3]²`.
pub fn group_law_residual(a: &ActionSpec, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = task_rng(seed, 0);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let sigma = a.sample_state(&mut rng);
        let x = PhasePoint::planar(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let y = PhasePoint::planar(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let lhs = a.act(&a.act(&sigma, &y)?, &x)?;
        let rhs = a.act(&sigma, &x.add(&y)?)?;
        worst = worst.max(a.distance(&lhs, &rhs));
    }
    Ok(worst)
}

/// `max |F(Θ_Y σ, X) − F(σ, X+Y)|` over seeded samples of `σ`, and of
/// `X, Y` in `[−3, 3]²`.
pub fn equivariance_residual<F>(family: F, a: &ActionSpec, samples: usize, seed: u64) -> Result<f64>
where
    F: Fn(&StatePoint, &PhasePoint) -> Result<Complex64>,
{
    let mut rng = task_rng(seed, 0);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let sigma = a.sample_state(&mut rng);
        let x = PhasePoint::planar(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let y = PhasePoint::planar(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let moved = a.act(&sigma, &y)?;
        let lhs = family(&moved, &x)?;
        let rhs = family(&sigma, &x.add(&y)?)?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Quadrature points per axis used by [`ergodic_average`] by default.
pub const BALL_QUADRATURE_POINTS: usize = 401;

/// `(1/|B_R|)∫_{B_R} g(Θ_X σ) dX` by the tensor midpoint rule on the
/// bounding box, restricted to cell centres inside the ball. The ball's
/// area is measured by the same rule, so constants average exactly.
pub fn ergodic_average(
    g: &StateSymbol,
    a: &ActionSpec,
    sigma: &StatePoint,
    radius: f64,
    quadrature_points: usize,
) -> Result<Complex64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Invalid(format!("ball radius must be positive, got {radius}")));
    }
    if quadrature_points == 0 {
        return Err(Error::Invalid("quadrature_points must be positive".into()));
    }
    a.validate_point(sigma)?;
    let q = quadrature_points;
    let h = 2.0 * radius / q as f64;
    let node = |i: usize| -radius + (i as f64 + 0.5) * h;
    let rows: Vec<(Complex64, usize)> = (0..q)
        .into_par_iter()
        .map(|i| {
            let x = node(i);
            let mut sum = Complex64::new(0.0, 0.0);
            let mut count = 0;
            for j in 0..q {
                let xi = node(j);
                if x * x + xi * xi <= radius * radius {
                    sum += g.eval(a, &a.act_unchecked(sigma, (x, xi)))?;
                    count += 1;
                }
            }
            Ok((sum, count))
        })
        .collect::<Result<_>>()?;
    let (sum, count) = rows
        .into_iter()
        .fold((Complex64::new(0.0, 0.0), 0usize), |(s, c), (t, d)| (s + t, c + d));
    Ok(sum / count as f64)
}
