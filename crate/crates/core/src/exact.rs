//! Closed-form decaying solutions used as oracles for the solver.
//!
//! Every family below satisfies `J(inv_lap(w), w) = 0` pointwise for all
//! t >= 0, so the full nonlinear equation reduces to the heat equation on
//! its modes and the solution is known in closed form: a time-independent
//! basic part `-a cos y` plus harmonics decaying as `e^{-nu |k|^2 t}`.
//! Irrational aspect ratios are carried as exact rational tags for the
//! squared value, so resonance conditions are checked in integer arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::{TorusConfig, DEFAULT_RESOLUTION};
use crate::norms::l2_norm;
use crate::ops::{inv_laplacian, jacobian};

/// Exact rational tag for a squared aspect ratio: `alpha^2 = num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaSq {
    pub num: u32,
    pub den: u32,
}

impl AlphaSq {
    /// Tag for `alpha^2 = num/den`.
    pub fn of(num: u32, den: u32) -> Self {
        AlphaSq { num, den }
    }

    /// Tag for integer `alpha^2 = k`.
    pub fn integer(k: u32) -> Self {
        AlphaSq { num: k, den: 1 }
    }

    /// Tag for the square torus, `alpha = 1`.
    pub fn unit() -> Self {
        AlphaSq { num: 1, den: 1 }
    }

    /// `alpha^2` as a float.
    pub fn value(&self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }

    /// `alpha` as a float.
    pub fn alpha(&self) -> f64 {
        self.value().sqrt()
    }
}

/// Amplitudes of one diagonal harmonic: `cos` and `sin` coefficients of the
/// `index`-th multiple of a base wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicAmp {
    pub index: i64,
    pub cos: f64,
    pub sin: f64,
}

impl HarmonicAmp {
    pub fn new(index: i64, cos: f64, sin: f64) -> Self {
        HarmonicAmp { index, cos, sin }
    }
}

/// Shared fields of the separable-product families: amplitudes of
/// `sin/cos(n alpha x) * sin/cos(m y)` products, all decaying at the single
/// rate `nu (alpha^2 n^2 + m^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrupoleCore {
    pub alpha_sq: AlphaSq,
    pub n: i64,
    pub m: i64,
    /// `sin(n alpha x) sin(m y)` amplitude.
    pub sin_sin: f64,
    /// `cos(n alpha x) sin(m y)` amplitude.
    pub cos_sin: f64,
    /// `sin(n alpha x) cos(m y)` amplitude.
    pub sin_cos: f64,
    /// `cos(n alpha x) cos(m y)` amplitude.
    pub cos_cos: f64,
}

/// One closed-form solution family with its free coefficients.
///
/// All families are exact solutions of the vorticity equation; see `eval`
/// for the time dependence. Serialized as a JSON object tagged by `variant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ExactSpec {
    /// `-a cos y - e^{-nu t} cos y`: the basic flow plus its slowest decay.
    BasicNonstationary { a: u8 },
    /// `-a cos y + sum_n e^{-n^2 nu t} (cos_n cos ny + sin_n sin ny)`:
    /// horizontal unidirectional flow.
    Unidirectional { a: u8, modes: Vec<HarmonicAmp> },
    /// Low-frequency flow on the extended domain with `alpha^2 + beta^2 = 1`
    /// and `1/beta` integer: `-a cos y - e^{-nu t} cos y + e^{-nu t} (c1 sin y
    /// + c2 cos y + products of sin/cos(alpha x) with sin/cos(beta y))`.
    /// Every perturbation mode sits on the unit circle and decays at the
    /// minimum rate `nu`.
    ExtendedLowMode {
        a: u8,
        alpha_sq: AlphaSq,
        /// `1/beta`, kept as the integer the domain condition requires.
        inv_beta: u32,
        /// `sin y` amplitude.
        sin_y: f64,
        /// `cos y` amplitude.
        cos_y: f64,
        /// `sin(alpha x) sin(beta y)` amplitude.
        sin_sin: f64,
        /// `cos(alpha x) cos(beta y)` amplitude.
        cos_cos: f64,
        /// `sin(alpha x) cos(beta y)` amplitude.
        sin_cos: f64,
        /// `cos(alpha x) sin(beta y)` amplitude.
        cos_sin: f64,
    },
    /// Bar flow along `n alpha x + m y = const`: each harmonic `k` carries
    /// `cos/sin(k(n alpha x + m y))` decaying at `nu (n^2 alpha^2 + m^2) k^2`.
    BarFlow {
        alpha_sq: AlphaSq,
        n: i64,
        m: i64,
        modes: Vec<HarmonicAmp>,
    },
    /// Single-rate product state `e^{-nu (alpha^2 n^2 + m^2) t}` times a
    /// combination of `sin/cos(n alpha x) * sin/cos(m y)`.
    TaylorQuadrupole {
        #[serde(flatten)]
        core: QuadrupoleCore,
    },
    /// Quadrupole plus pure-y harmonics `jy_sin sin jy + jy_cos cos jy`,
    /// resonant when `alpha^2 n^2 + m^2 = j^2`.
    Resonant3 {
        #[serde(flatten)]
        core: QuadrupoleCore,
        j: i64,
        jy_sin: f64,
        jy_cos: f64,
    },
    /// Quadrupole plus pure-x and pure-y harmonics, resonant when
    /// `alpha^2 n^2 + m^2 = alpha^2 i^2 = j^2`.
    Resonant4 {
        #[serde(flatten)]
        core: QuadrupoleCore,
        i: i64,
        ix_sin: f64,
        ix_cos: f64,
        j: i64,
        jy_sin: f64,
        jy_cos: f64,
    },
    /// `d nu (sqrt(alpha)/(sqrt(2) pi)) e^{-(alpha^2+1) nu t} sin(alpha x + y)`:
    /// a single-mode solution whose initial size scales with `nu` and whose
    /// decay rate stays at the unenhanced value `(alpha^2 + 1) nu`.
    RemarkCounterexample { d: f64, alpha: f64 },
}

impl ExactSpec {
    /// Amplitude `a` of the stationary basic part `-a cos y`.
    pub fn basic_a(&self) -> u8 {
        match self {
            ExactSpec::BasicNonstationary { a }
            | ExactSpec::Unidirectional { a, .. }
            | ExactSpec::ExtendedLowMode { a, .. } => *a,
            _ => 0,
        }
    }
}

/// One decaying harmonic: real `cos`/`sin` amplitudes at lattice mode
/// `(j, m)`, decaying as `e^{-nu lambda t}` with `lambda = |k|^2`.
struct DecayTerm {
    j: i64,
    m: i64,
    cos: f64,
    sin: f64,
    lambda: f64,
}

impl DecayTerm {
    fn active(&self) -> bool {
        self.cos != 0.0 || self.sin != 0.0
    }
}

/// Expands products `sin/cos(A) * sin/cos(B)` with `A` at lattice `(j, 0)`
/// and `B` at `(0, m)` into the sum modes `(j, m)` and `(j, -m)`.
fn push_product_terms(
    terms: &mut Vec<DecayTerm>,
    j: i64,
    m: i64,
    sin_sin: f64,
    cos_sin: f64,
    sin_cos: f64,
    cos_cos: f64,
    lambda: f64,
) {
    terms.push(DecayTerm {
        j,
        m,
        cos: 0.5 * (cos_cos - sin_sin),
        sin: 0.5 * (sin_cos + cos_sin),
        lambda,
    });
    terms.push(DecayTerm {
        j,
        m: -m,
        cos: 0.5 * (cos_cos + sin_sin),
        sin: 0.5 * (sin_cos - cos_sin),
        lambda,
    });
}

fn quadrupole_terms(core: &QuadrupoleCore, terms: &mut Vec<DecayTerm>) {
    let lambda = quadrupole_lambda(core);
    push_product_terms(
        terms,
        core.n,
        core.m,
        core.sin_sin,
        core.cos_sin,
        core.sin_cos,
        core.cos_cos,
        lambda,
    );
}

/// `alpha^2 n^2 + m^2` from the rational tag; exact when the resonance
/// conditions hold (the numerator is then an integer multiple of `den`).
fn quadrupole_lambda(core: &QuadrupoleCore) -> f64 {
    (f64::from(core.alpha_sq.num) * (core.n * core.n) as f64
        + f64::from(core.alpha_sq.den) * (core.m * core.m) as f64)
        / f64::from(core.alpha_sq.den)
}

/// The decaying harmonics of a family, labeled in the lattice of its
/// canonical grid. `nu` only affects `RemarkCounterexample`, whose initial
/// amplitude is proportional to `nu`.
fn decay_terms(spec: &ExactSpec, nu: f64) -> Vec<DecayTerm> {
    let mut terms = Vec::new();
    match spec {
        ExactSpec::BasicNonstationary { .. } => {
            terms.push(DecayTerm {
                j: 0,
                m: 1,
                cos: -1.0,
                sin: 0.0,
                lambda: 1.0,
            });
        }
        ExactSpec::Unidirectional { modes, .. } => {
            for h in modes {
                terms.push(DecayTerm {
                    j: 0,
                    m: h.index,
                    cos: h.cos,
                    sin: h.sin,
                    lambda: (h.index * h.index) as f64,
                });
            }
        }
        ExactSpec::ExtendedLowMode {
            inv_beta,
            sin_y,
            cos_y,
            sin_sin,
            cos_cos,
            sin_cos,
            cos_sin,
            ..
        } => {
            terms.push(DecayTerm {
                j: 0,
                m: i64::from(*inv_beta),
                cos: cos_y - 1.0,
                sin: *sin_y,
                lambda: 1.0,
            });
            push_product_terms(&mut terms, 1, 1, *sin_sin, *cos_sin, *sin_cos, *cos_cos, 1.0);
        }
        ExactSpec::BarFlow {
            alpha_sq,
            n,
            m,
            modes,
        } => {
            let base = (f64::from(alpha_sq.num) * (n * n) as f64
                + f64::from(alpha_sq.den) * (m * m) as f64)
                / f64::from(alpha_sq.den);
            for h in modes {
                terms.push(DecayTerm {
                    j: h.index * n,
                    m: h.index * m,
                    cos: h.cos,
                    sin: h.sin,
                    lambda: base * (h.index * h.index) as f64,
                });
            }
        }
        ExactSpec::TaylorQuadrupole { core } => quadrupole_terms(core, &mut terms),
        ExactSpec::Resonant3 {
            core,
            j,
            jy_sin,
            jy_cos,
        } => {
            quadrupole_terms(core, &mut terms);
            terms.push(DecayTerm {
                j: 0,
                m: *j,
                cos: *jy_cos,
                sin: *jy_sin,
                lambda: (j * j) as f64,
            });
        }
        ExactSpec::Resonant4 {
            core,
            i,
            ix_sin,
            ix_cos,
            j,
            jy_sin,
            jy_cos,
        } => {
            quadrupole_terms(core, &mut terms);
            terms.push(DecayTerm {
                j: *i,
                m: 0,
                cos: *ix_cos,
                sin: *ix_sin,
                lambda: f64::from(core.alpha_sq.num) * (i * i) as f64
                    / f64::from(core.alpha_sq.den),
            });
            terms.push(DecayTerm {
                j: 0,
                m: *j,
                cos: *jy_cos,
                sin: *jy_sin,
                lambda: (j * j) as f64,
            });
        }
        ExactSpec::RemarkCounterexample { d, alpha } => {
            let amp = d * nu * alpha.sqrt() / (std::f64::consts::SQRT_2 * std::f64::consts::PI);
            terms.push(DecayTerm {
                j: 1,
                m: 1,
                cos: 0.0,
                sin: amp,
                lambda: alpha * alpha + 1.0,
            });
        }
    }
    terms
}

fn check_amplitude(violations: &mut Vec<Error>, name: &str, value: f64) {
    if !value.is_finite() {
        violations.push(Error::InvalidConfig(format!(
            "amplitude {name} must be finite, got {value}"
        )));
    }
}

fn check_alpha_sq(violations: &mut Vec<Error>, tag: &AlphaSq) {
    if tag.num == 0 || tag.den == 0 {
        violations.push(Error::InvalidConfig(format!(
            "alpha^2 tag {}/{} must have positive numerator and denominator",
            tag.num, tag.den
        )));
    }
}

fn check_quadrupole_core(violations: &mut Vec<Error>, core: &QuadrupoleCore) {
    check_alpha_sq(violations, &core.alpha_sq);
    if core.n < 1 || core.m < 1 {
        violations.push(Error::InvalidConfig(format!(
            "product modes require n >= 1 and m >= 1, got n = {}, m = {}",
            core.n, core.m
        )));
    }
    for (name, value) in [
        ("sin_sin", core.sin_sin),
        ("cos_sin", core.cos_sin),
        ("sin_cos", core.sin_cos),
        ("cos_cos", core.cos_cos),
    ] {
        check_amplitude(violations, name, value);
    }
}

/// `alpha^2 n^2 + m^2 = j^2` in exact integer arithmetic on the tag.
fn y_resonance_holds(tag: &AlphaSq, n: i64, m: i64, j: i64) -> bool {
    let p = i128::from(tag.num);
    let q = i128::from(tag.den);
    let (n, m, j) = (i128::from(n), i128::from(m), i128::from(j));
    p * n * n + q * m * m == q * j * j
}

/// `alpha^2 i^2 = j^2` in exact integer arithmetic on the tag.
fn x_resonance_holds(tag: &AlphaSq, i: i64, j: i64) -> bool {
    let p = i128::from(tag.num);
    let q = i128::from(tag.den);
    let (i, j) = (i128::from(i), i128::from(j));
    p * i * i == q * j * j
}

/// Checks every arithmetic condition of the family; the returned list is
/// empty exactly when the spec describes a genuine solution. Violations are
/// data, not failures: callers decide what to do with them.
pub fn validate(spec: &ExactSpec) -> Vec<Error> {
    let mut violations = Vec::new();
    let basic = spec.basic_a();
    if basic > 1 {
        violations.push(Error::InvalidConfig(format!(
            "forcing amplitude a must be 0 or 1, got {basic}"
        )));
    }
    match spec {
        ExactSpec::BasicNonstationary { .. } => {}
        ExactSpec::Unidirectional { modes, .. } => {
            for h in modes {
                if h.index < 1 {
                    violations.push(Error::InvalidConfig(format!(
                        "unidirectional harmonics require n >= 1, got {}",
                        h.index
                    )));
                }
                check_amplitude(&mut violations, "cos", h.cos);
                check_amplitude(&mut violations, "sin", h.sin);
            }
        }
        ExactSpec::ExtendedLowMode {
            alpha_sq,
            inv_beta,
            sin_y,
            cos_y,
            sin_sin,
            cos_cos,
            sin_cos,
            cos_sin,
            ..
        } => {
            check_alpha_sq(&mut violations, alpha_sq);
            if *inv_beta < 1 {
                violations.push(Error::InvalidConfig(
                    "extended domain requires 1/beta >= 1".into(),
                ));
            } else {
                // alpha^2 + beta^2 = 1 with beta = 1/q:
                // num q^2 + den = den q^2 exactly.
                let p = u128::from(alpha_sq.num);
                let q_den = u128::from(alpha_sq.den);
                let q2 = u128::from(*inv_beta) * u128::from(*inv_beta);
                if p * q2 + q_den != q_den * q2 {
                    violations.push(Error::ResonanceViolated(format!(
                        "extended domain requires alpha^2 + beta^2 = 1: \
                         {}/{} + 1/{} != 1",
                        alpha_sq.num,
                        alpha_sq.den,
                        inv_beta * inv_beta
                    )));
                }
            }
            for (name, value) in [
                ("sin_y", *sin_y),
                ("cos_y", *cos_y),
                ("sin_sin", *sin_sin),
                ("cos_cos", *cos_cos),
                ("sin_cos", *sin_cos),
                ("cos_sin", *cos_sin),
            ] {
                check_amplitude(&mut violations, name, value);
            }
        }
        ExactSpec::BarFlow {
            alpha_sq,
            n,
            m,
            modes,
        } => {
            check_alpha_sq(&mut violations, alpha_sq);
            if *n == 0 && *m == 0 {
                violations.push(Error::InvalidConfig(
                    "bar flow direction (n, m) must be nonzero".into(),
                ));
            }
            for h in modes {
                if h.index == 0 {
                    violations.push(Error::InvalidConfig(
                        "bar flow harmonics require k != 0".into(),
                    ));
                }
                check_amplitude(&mut violations, "cos", h.cos);
                check_amplitude(&mut violations, "sin", h.sin);
            }
        }
        ExactSpec::TaylorQuadrupole { core } => check_quadrupole_core(&mut violations, core),
        ExactSpec::Resonant3 {
            core,
            j,
            jy_sin,
            jy_cos,
        } => {
            check_quadrupole_core(&mut violations, core);
            check_amplitude(&mut violations, "jy_sin", *jy_sin);
            check_amplitude(&mut violations, "jy_cos", *jy_cos);
            if *j < 1 {
                violations.push(Error::InvalidConfig(format!(
                    "resonant harmonic requires j >= 1, got {j}"
                )));
            } else if !y_resonance_holds(&core.alpha_sq, core.n, core.m, *j) {
                violations.push(Error::ResonanceViolated(format!(
                    "alpha^2 n^2 + m^2 = j^2 fails for alpha^2 = {}/{}, \
                     n = {}, m = {}, j = {}",
                    core.alpha_sq.num, core.alpha_sq.den, core.n, core.m, j
                )));
            }
        }
        ExactSpec::Resonant4 {
            core,
            i,
            ix_sin,
            ix_cos,
            j,
            jy_sin,
            jy_cos,
        } => {
            check_quadrupole_core(&mut violations, core);
            for (name, value) in [
                ("ix_sin", *ix_sin),
                ("ix_cos", *ix_cos),
                ("jy_sin", *jy_sin),
                ("jy_cos", *jy_cos),
            ] {
                check_amplitude(&mut violations, name, value);
            }
            if *i < 1 || *j < 1 {
                violations.push(Error::InvalidConfig(format!(
                    "resonant harmonics require i >= 1 and j >= 1, got i = {i}, j = {j}"
                )));
            } else {
                if !y_resonance_holds(&core.alpha_sq, core.n, core.m, *j) {
                    violations.push(Error::ResonanceViolated(format!(
                        "alpha^2 n^2 + m^2 = j^2 fails for alpha^2 = {}/{}, \
                         n = {}, m = {}, j = {}",
                        core.alpha_sq.num, core.alpha_sq.den, core.n, core.m, j
                    )));
                }
                if !x_resonance_holds(&core.alpha_sq, *i, *j) {
                    violations.push(Error::ResonanceViolated(format!(
                        "alpha^2 i^2 = j^2 fails for alpha^2 = {}/{}, i = {}, j = {}",
                        core.alpha_sq.num, core.alpha_sq.den, i, j
                    )));
                }
            }
        }
        ExactSpec::RemarkCounterexample { d, alpha } => {
            if !(d.is_finite() && *d > 0.0) {
                violations.push(Error::NonPositiveValue {
                    t: 0.0,
                    value: *d,
                });
            }
            if !(alpha.is_finite() && *alpha >= 1.0) {
                violations.push(Error::InvalidConfig(format!(
                    "counterexample mode requires alpha >= 1, got {alpha}"
                )));
            }
        }
    }
    violations
}

/// The squared aspect ratio the family's canonical grid must carry, if any.
fn required_alpha_sq(spec: &ExactSpec) -> Option<f64> {
    match spec {
        ExactSpec::BasicNonstationary { .. } | ExactSpec::Unidirectional { .. } => None,
        ExactSpec::ExtendedLowMode { alpha_sq, .. } | ExactSpec::BarFlow { alpha_sq, .. } => {
            Some(alpha_sq.value())
        }
        ExactSpec::TaylorQuadrupole { core }
        | ExactSpec::Resonant3 { core, .. }
        | ExactSpec::Resonant4 { core, .. } => Some(core.alpha_sq.value()),
        ExactSpec::RemarkCounterexample { alpha, .. } => Some(alpha * alpha),
    }
}

/// `beta` of the family's canonical grid: `1/inv_beta` for the extended
/// domain, 1 otherwise.
fn required_beta(spec: &ExactSpec) -> f64 {
    match spec {
        ExactSpec::ExtendedLowMode { inv_beta, .. } => 1.0 / f64::from(*inv_beta),
        _ => 1.0,
    }
}

const DOMAIN_MATCH_TOLERANCE: f64 = 1e-12;

fn check_domain(spec: &ExactSpec, grid: &TorusConfig) -> Result<()> {
    let beta_req = required_beta(spec);
    if (grid.beta - beta_req).abs() > DOMAIN_MATCH_TOLERANCE {
        return Err(Error::IncompatibleDomain(format!(
            "family requires beta = {beta_req}, grid has beta = {}",
            grid.beta
        )));
    }
    if let Some(alpha_sq) = required_alpha_sq(spec) {
        let actual = grid.alpha * grid.alpha;
        if (actual - alpha_sq).abs() > DOMAIN_MATCH_TOLERANCE * alpha_sq.max(1.0) {
            return Err(Error::IncompatibleDomain(format!(
                "family requires alpha^2 = {alpha_sq}, grid has alpha^2 = {actual}"
            )));
        }
    }
    Ok(())
}

/// A torus that realizes the family's domain at the default resolution.
pub fn default_grid(spec: &ExactSpec) -> Result<TorusConfig> {
    let alpha = required_alpha_sq(spec).map_or(1.0, f64::sqrt);
    TorusConfig::with_beta(
        alpha,
        required_beta(spec),
        DEFAULT_RESOLUTION,
        DEFAULT_RESOLUTION,
    )
}

/// The exact coefficient field at time `t` under viscosity `nu`.
///
/// The grid must realize the family's domain: matching `alpha` and `beta`
/// (to 1e-12) and every active mode inside the dealias box. The stationary
/// part `-a cos y` is time-independent; every other harmonic carries its
/// initial amplitude times `e^{-nu |k|^2 t}`.
pub fn eval(spec: &ExactSpec, nu: f64, t: f64, grid: &TorusConfig) -> Result<SpectralField> {
    if let Some(first) = validate(spec).into_iter().next() {
        return Err(first);
    }
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "viscosity must be positive, got {nu}"
        )));
    }
    if !t.is_finite() {
        return Err(Error::InvalidConfig(format!("time must be finite, got {t}")));
    }
    grid.validate()?;
    check_domain(spec, grid)?;
    let mut w = SpectralField::zeros(grid);
    let a = f64::from(spec.basic_a());
    if a != 0.0 {
        w.add_cos(0, grid.unit_y_mode(), -a)
            .map_err(|e| incompatible(e, 0, grid.unit_y_mode()))?;
    }
    for term in decay_terms(spec, nu) {
        if !term.active() {
            continue;
        }
        if !grid.in_dealias_box(term.j, term.m) {
            return Err(Error::IncompatibleDomain(format!(
                "mode ({}, {}) lies outside the dealias box ({} x {})",
                term.j,
                term.m,
                grid.cutoff_x(),
                grid.cutoff_y()
            )));
        }
        let decay = (-nu * term.lambda * t).exp();
        if term.cos != 0.0 {
            w.add_cos(term.j, term.m, term.cos * decay)
                .map_err(|e| incompatible(e, term.j, term.m))?;
        }
        if term.sin != 0.0 {
            w.add_sin(term.j, term.m, term.sin * decay)
                .map_err(|e| incompatible(e, term.j, term.m))?;
        }
    }
    Ok(w)
}

fn incompatible(e: Error, j: i64, m: i64) -> Error {
    Error::IncompatibleDomain(format!("mode ({j}, {m}) cannot be placed: {e}"))
}

/// Decay rate `nu |k|^2` of every active harmonic, keyed by its lattice mode
/// on the canonical grid. The stationary basic part is excluded. Requires a
/// spec that passes `validate`.
pub fn analytic_rates(spec: &ExactSpec, nu: f64) -> Vec<((i64, i64), f64)> {
    let mut out: Vec<((i64, i64), f64)> = Vec::new();
    for term in decay_terms(spec, nu) {
        if !term.active() {
            continue;
        }
        if out.iter().any(|((j, m), _)| *j == term.j && *m == term.m) {
            continue;
        }
        out.push(((term.j, term.m), nu * term.lambda));
    }
    out
}

/// `l2(J(inv_lap(w), w)) / l2(w)^2` for an arbitrary field: zero exactly
/// when the field solves the stationary Euler equation.
pub fn euler_residual_field(w: &SpectralField) -> Result<f64> {
    let denom = l2_norm(w);
    if denom == 0.0 {
        return Err(Error::InvalidConfig(
            "stationarity residual of the zero field is undefined".into(),
        ));
    }
    let psi = inv_laplacian(w);
    let j = jacobian(&psi, w)?;
    Ok(l2_norm(&j) / (denom * denom))
}

/// Stationarity residual of the family evaluated at time `t`; below 1e-10
/// for every valid family at every `t >= 0`.
pub fn euler_stationarity_residual(
    spec: &ExactSpec,
    nu: f64,
    t: f64,
    grid: &TorusConfig,
) -> Result<f64> {
    let w = eval(spec, nu, t, grid)?;
    euler_residual_field(&w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// The four-vortex transition state: low-mode flow on the domain
    /// `[0, 4 pi / sqrt(3)) x [0, 4 pi)`.
    fn four_vortex() -> ExactSpec {
        ExactSpec::ExtendedLowMode {
            a: 1,
            alpha_sq: AlphaSq::of(3, 4),
            inv_beta: 2,
            sin_y: 0.0,
            cos_y: 2.0,
            sin_sin: 1.0,
            cos_cos: 0.0,
            sin_cos: 0.0,
            cos_sin: 0.0,
        }
    }

    /// Two-harmonic bar flow along `x sqrt(6)/2 + y = const`.
    fn double_bar() -> ExactSpec {
        ExactSpec::BarFlow {
            alpha_sq: AlphaSq::of(3, 2),
            n: 1,
            m: 1,
            modes: vec![HarmonicAmp::new(2, 0.0, 1.0), HarmonicAmp::new(4, 1.0, 0.0)],
        }
    }

    /// Quadrupole plus resonant `sin 3y` on the `alpha^2 = 5` torus.
    fn resonant_triple() -> ExactSpec {
        ExactSpec::Resonant3 {
            core: QuadrupoleCore {
                alpha_sq: AlphaSq::integer(5),
                n: 1,
                m: 2,
                sin_sin: 1.0,
                cos_sin: 0.0,
                sin_cos: 0.0,
                cos_cos: 0.3,
            },
            j: 3,
            jy_sin: 0.4,
            jy_cos: 0.0,
        }
    }

    /// Quadrupole plus resonant `sin 5y` and `0.3 sin 5x` on the square torus.
    fn resonant_quadruple() -> ExactSpec {
        ExactSpec::Resonant4 {
            core: QuadrupoleCore {
                alpha_sq: AlphaSq::unit(),
                n: 4,
                m: 3,
                sin_sin: 0.4,
                cos_sin: 0.0,
                sin_cos: 0.0,
                cos_cos: 0.5,
            },
            i: 5,
            ix_sin: 0.3,
            ix_cos: 0.0,
            j: 5,
            jy_sin: 1.0,
            jy_cos: 0.0,
        }
    }

    #[test]
    fn counterexample_initial_norm_is_d_times_nu() {
        let spec = ExactSpec::RemarkCounterexample { d: 1.0, alpha: 2.0 };
        let grid = TorusConfig::new(2.0, 32, 32).unwrap();
        let w = eval(&spec, 0.01, 0.0, &grid).unwrap();
        assert_relative_eq!(l2_norm(&w), 0.01, max_relative = 1e-12);
        // Single sine mode at (1, 1): half-coefficient -i amp / 2.
        let amp = 0.01 * 2.0f64.sqrt() / (2.0f64.sqrt() * std::f64::consts::PI);
        let c = w.coeff(1, 1);
        assert_abs_diff_eq!(c.re, 0.0, epsilon = 1e-18);
        assert_relative_eq!(c.im, -0.5 * amp, max_relative = 1e-14);
        assert_eq!(w.coeff(2, 0).norm(), 0.0, "no other modes are active");
    }

    #[test]
    fn four_vortex_cosine_parts_cancel_at_t0() {
        let spec = four_vortex();
        let grid = default_grid(&spec).unwrap();
        assert_relative_eq!(grid.lx(), 4.0 * std::f64::consts::PI / 3.0f64.sqrt());
        assert_relative_eq!(grid.ly(), 4.0 * std::f64::consts::PI);
        let w0 = eval(&spec, 0.01, 0.0, &grid).unwrap();
        // -a cos y - cos y + 2 cos y cancels, leaving the four-vortex state.
        assert_abs_diff_eq!(w0.coeff(0, 2).norm(), 0.0, epsilon = 1e-16);
        // sin sin opens into cosine pairs of amplitude 1/2, so the stored
        // half-coefficients are 1/4.
        assert_relative_eq!(w0.coeff(1, -1).re, 0.25, max_relative = 1e-14);
        assert_relative_eq!(w0.coeff(1, 1).re, -0.25, max_relative = 1e-14);
        // As t grows the field tends to the basic part -cos y.
        let late = eval(&spec, 0.01, 2000.0, &grid).unwrap();
        assert_relative_eq!(late.coeff(0, 2).re, -0.5, max_relative = 1e-8);
        assert_abs_diff_eq!(late.coeff(1, 1).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn per_mode_decay_matches_analytic_rates() {
        let spec = double_bar();
        let grid = default_grid(&spec).unwrap();
        let rates = analytic_rates(&spec, 0.01);
        assert_eq!(rates.len(), 2);
        assert_eq!(rates[0].0, (2, 2));
        assert_relative_eq!(rates[0].1, 0.1, max_relative = 1e-14);
        assert_eq!(rates[1].0, (4, 4));
        assert_relative_eq!(rates[1].1, 0.4, max_relative = 1e-14);
        let t = 2.5;
        let w0 = eval(&spec, 0.01, 0.0, &grid).unwrap();
        let wt = eval(&spec, 0.01, t, &grid).unwrap();
        for &((j, m), rate) in &rates {
            let ratio = wt.coeff(j, m).norm() / w0.coeff(j, m).norm();
            assert_relative_eq!(ratio, (-rate * t).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn resonance_arithmetic_is_exact() {
        assert!(validate(&resonant_triple()).is_empty(), "5 + 4 = 9 holds");
        assert!(
            validate(&resonant_quadruple()).is_empty(),
            "16 + 9 = 25 = 25 holds"
        );
        let broken = ExactSpec::Resonant3 {
            core: QuadrupoleCore {
                alpha_sq: AlphaSq::unit(),
                n: 1,
                m: 1,
                sin_sin: 1.0,
                cos_sin: 0.0,
                sin_cos: 0.0,
                cos_cos: 0.0,
            },
            j: 2,
            jy_sin: 1.0,
            jy_cos: 0.0,
        };
        let violations = validate(&broken);
        assert_eq!(violations.len(), 1, "1 + 1 != 4 is the only violation");
        assert!(matches!(violations[0], Error::ResonanceViolated(_)));
    }

    #[test]
    fn extended_domain_condition_is_exact() {
        assert!(validate(&four_vortex()).is_empty(), "3/4 + 1/4 = 1 holds");
        let mut broken = four_vortex();
        if let ExactSpec::ExtendedLowMode { alpha_sq, .. } = &mut broken {
            *alpha_sq = AlphaSq::of(1, 2);
        }
        assert!(
            validate(&broken)
                .iter()
                .any(|e| matches!(e, Error::ResonanceViolated(_))),
            "1/2 + 1/4 != 1 must be flagged"
        );
    }

    #[test]
    fn eval_rejects_incompatible_grids() {
        let spec = double_bar();
        let square = TorusConfig::new(1.0, 32, 32).unwrap();
        assert!(matches!(
            eval(&spec, 0.01, 0.0, &square),
            Err(Error::IncompatibleDomain(_))
        ));
        let tall = ExactSpec::Unidirectional {
            a: 0,
            modes: vec![HarmonicAmp::new(60, 1.0, 0.0)],
        };
        let grid = TorusConfig::new(1.0, 128, 128).unwrap();
        assert!(
            matches!(eval(&tall, 0.01, 0.0, &grid), Err(Error::IncompatibleDomain(_))),
            "mode 60 exceeds the dealias cutoff {}",
            grid.cutoff_y()
        );
    }

    #[test]
    fn single_rate_families_are_self_similar() {
        for spec in [resonant_triple(), resonant_quadruple()] {
            let grid = default_grid(&spec).unwrap();
            let nu = 0.01;
            let t = 7.0;
            let rate = analytic_rates(&spec, nu)[0].1;
            for &(_, r) in &analytic_rates(&spec, nu) {
                assert_eq!(r, rate, "resonant families decay at a single rate");
            }
            let w0 = eval(&spec, nu, 0.0, &grid).unwrap();
            let wt = eval(&spec, nu, t, &grid).unwrap();
            let mut scaled = w0.clone();
            scaled.scale((-rate * t).exp());
            assert!(
                wt.max_coeff_diff(&scaled).unwrap() < 1e-14,
                "eval(t) must equal e^(-rate t) eval(0) coefficientwise"
            );
        }
    }

    #[test]
    fn families_solve_the_stationary_euler_equation() {
        let nu = 0.01;
        for (spec, bound) in [
            (double_bar(), 1e-10),
            (resonant_triple(), 1e-10),
            (resonant_quadruple(), 1e-10),
            (four_vortex(), 1e-10),
            (ExactSpec::RemarkCounterexample { d: 1.0, alpha: 2.0 }, 1e-10),
            (ExactSpec::BasicNonstationary { a: 1 }, 1e-10),
        ] {
            let grid = default_grid(&spec).unwrap();
            for t in [0.0, 10.0] {
                let r = euler_stationarity_residual(&spec, nu, t, &grid).unwrap();
                assert!(
                    r < bound,
                    "{spec:?} at t = {t}: residual {r:.3e} exceeds {bound:.0e}"
                );
            }
        }
    }

    #[test]
    fn corrupted_field_fails_stationarity() {
        let spec = resonant_triple();
        let grid = default_grid(&spec).unwrap();
        let mut w = eval(&spec, 0.01, 0.0, &grid).unwrap();
        w.add_cos(2, 1, 0.5).unwrap();
        let r = euler_residual_field(&w).unwrap();
        assert!(
            r > 1e-3,
            "off-family mode must break stationarity, got residual {r:.3e}"
        );
    }

    #[test]
    fn spec_json_round_trips() {
        for spec in [
            four_vortex(),
            double_bar(),
            resonant_triple(),
            resonant_quadruple(),
            ExactSpec::BasicNonstationary { a: 1 },
            ExactSpec::Unidirectional {
                a: 1,
                modes: vec![HarmonicAmp::new(2, 0.5, -0.25)],
            },
            ExactSpec::RemarkCounterexample { d: 0.5, alpha: 1.0 },
        ] {
            let json = serde_json::to_string(&spec).unwrap();
            let back: ExactSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(back, spec, "round trip through {json}");
        }
    }
}
