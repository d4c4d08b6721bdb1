//! Closed-form amplitudes of the atom-field state and the truncated field state.
//!
//! With the atom initially excited and the field coherent, the dynamics
//! decomposes into independent two-dimensional manifolds
//! `{|2, n+1⟩, |1, n⟩}`. Inside manifold `n` the amplitudes are
//!
//! ```text
//! C₂,ₙ₊₁(t) = c_n (m₂ e^{m₁t} - m₁ e^{m₂t}) / (m₂ - m₁)
//! C₁,ₙ(t)   = -c_n e^{-i h(n) t} g f(n+1) √(n+1) φ(t)
//! ```
//!
//! where `c_n = e^{-|β|²/2} βⁿ/√(n!)`, `2m₁,₂ = i h ± i D` and
//! `φ(t) = (e^{m₁t} - e^{m₂t}) / (m₁ - m₂)`. The ground amplitude is the
//! reduced form that follows from `m₁m₂ = g² (n+1) f²(n+1)`; it stays finite
//! when the manifold decouples (`f(n+1) = 0`).

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::deform::ModelParams;
use crate::error::{Error, Result};
use crate::special::{expm1, ln_factorial, ln_factorials};

/// Below this value of `|m₁ - m₂| |t|` the divided difference uses its series.
pub const PHI_SERIES_THRESHOLD: f64 = 1e-6;

pub const DEFAULT_TRUNCATION_EPS: f64 = 1e-12;
pub const DEFAULT_TRUNCATION_CAP: usize = 4096;

/// Eigen-frequencies of one manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldFrequencies {
    /// Generalized detuning `h(n)`.
    pub h: f64,
    /// Rabi-like splitting `D = √(4 k² + h²)`.
    pub splitting: f64,
    /// Coupling `k = g f(n+1) √(n+1)`.
    pub coupling: f64,
    pub m1: C64,
    pub m2: C64,
}

/// Computes `h`, `D` and the purely imaginary roots `m₁ = i(h+D)/2`, `m₂ = i(h-D)/2`.
///
/// The root of smaller magnitude is taken from `m₁ m₂ = k²` so that it keeps
/// full relative precision when `|h| ≫ k`.
pub fn manifold_frequencies(params: &ModelParams, n: u64) -> Result<ManifoldFrequencies> {
    let h = params.h_detuning(n)?;
    let k = params.manifold_coupling(n)?;
    let d = (2.0 * k).hypot(h);
    let k2 = k * k;
    let (w1, w2) = if h >= 0.0 {
        let big = 0.5 * (h + d);
        let small = if big == 0.0 { 0.0 } else { -k2 / big };
        (big, small)
    } else {
        let big = 0.5 * (h - d);
        let small = -k2 / big;
        (small, big)
    };
    Ok(ManifoldFrequencies { h, splitting: d, coupling: k, m1: C64::new(0.0, w1), m2: C64::new(0.0, w2) })
}

/// Divided difference `(e^{m₁t} - e^{m₂t}) / (m₁ - m₂)`, continuous through `m₁ = m₂`.
pub fn phi_stable(m1: C64, m2: C64, t: f64) -> C64 {
    let delta = m2 - m1;
    let lead = (m1 * t).exp();
    if delta.norm() * t.abs() > PHI_SERIES_THRESHOLD {
        lead * expm1(delta * t) / delta
    } else {
        let x = delta * t;
        lead * t * (1.0 + x / 2.0 + x * x / 6.0)
    }
}

/// Coherent-state amplitude `e^{-|β|²/2} βⁿ / √(n!)`, evaluated in log space.
pub fn initial_amplitude(beta: C64, n: u64, ln_fact_n: f64) -> C64 {
    let r = beta.norm();
    if r == 0.0 {
        return if n == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    let log_mag = -0.5 * r * r + n as f64 * r.ln() - 0.5 * ln_fact_n;
    C64::from_polar(log_mag.exp(), n as f64 * beta.arg())
}

/// Poisson weight `e^{-λ} λⁿ / n!` with `λ = |β|²`.
pub fn poisson_weight(beta_mag: f64, n: u64) -> f64 {
    initial_amplitude(C64::new(beta_mag, 0.0), n, ln_factorial(n as usize)).norm_sqr()
}

fn manifold_pair(params: &ModelParams, n: u64, t: f64, c0: C64) -> Result<(C64, C64)> {
    let fr = manifold_frequencies(params, n)?;
    let phi = phi_stable(fr.m1, fr.m2, t);
    let excited = c0 * ((fr.m1 * t).exp() - fr.m1 * phi);
    let ground = -c0 * C64::from_polar(1.0, -fr.h * t) * fr.coupling * phi;
    Ok((excited, ground))
}

/// `(C₂,ₙ₊₁(t), C₁,ₙ(t))` of manifold `n`.
pub fn manifold_amplitudes(params: &ModelParams, n: u64, t: f64) -> Result<(C64, C64)> {
    let c0 = initial_amplitude(params.beta, n, ln_factorial(n as usize));
    manifold_pair(params, n, t, c0)
}

/// `C₂,ₙ₊₁(t)`, the amplitude of `|2, n+1⟩`.
pub fn amplitude_excited(params: &ModelParams, n: u64, t: f64) -> Result<C64> {
    manifold_amplitudes(params, n, t).map(|(e, _)| e)
}

/// `C₁,ₙ(t)`, the amplitude of `|1, n⟩`.
pub fn amplitude_ground(params: &ModelParams, n: u64, t: f64) -> Result<C64> {
    manifold_amplitudes(params, n, t).map(|(_, g)| g)
}

/// Poisson tail mass `Σ_{k ≥ n} e^{-λ} λ^k / k!`, summed directly.
///
/// Only accurate for `n` past the mode; callers use it beyond the truncation floor.
pub fn poisson_tail(beta_mag: f64, n: usize) -> f64 {
    let lambda = beta_mag * beta_mag;
    if lambda == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let mut term = (-lambda + n as f64 * lambda.ln() - ln_factorial(n)).exp();
    let mut sum = 0.0;
    let mut k = n;
    while term > 0.0 && term > 1e-18 * sum {
        sum += term;
        k += 1;
        term *= lambda / k as f64;
    }
    sum
}

/// Smallest truncation whose neglected Poisson tail is below `eps`, never
/// below `max(20, ⌈|β|² + 10|β| + 20⌉)`.
pub fn truncation_level(beta_mag: f64, eps: f64) -> usize {
    let floor = (beta_mag * beta_mag + 10.0 * beta_mag + 20.0).ceil().max(20.0) as usize;
    let mut levels = floor;
    while poisson_tail(beta_mag, levels) >= eps {
        levels += 1;
    }
    levels
}

/// Truncation policy for [`evolve_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub eps: f64,
    pub cap: usize,
    /// Lower bound on the number of manifolds, for callers that need specific levels.
    pub min_levels: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { eps: DEFAULT_TRUNCATION_EPS, cap: DEFAULT_TRUNCATION_CAP, min_levels: 0 }
    }
}

impl Truncation {
    pub fn with_eps(eps: f64) -> Self {
        Self { eps, ..Self::default() }
    }

    /// Number of manifolds to keep for a given `|β|`.
    pub fn levels(&self, beta_mag: f64) -> Result<usize> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParams(format!("truncation tolerance must lie in (0, 1), got {}", self.eps)));
        }
        let floor = (beta_mag * beta_mag + 10.0 * beta_mag + 20.0).ceil();
        if floor > self.cap as f64 {
            return Err(Error::TruncationTooLarge { required: floor.min(usize::MAX as f64) as usize, cap: self.cap });
        }
        let levels = truncation_level(beta_mag, self.eps).max(self.min_levels);
        if levels > self.cap {
            return Err(Error::TruncationTooLarge { required: levels, cap: self.cap });
        }
        Ok(levels)
    }
}

/// Reduced field state at a fixed time, truncated to `N` manifolds.
///
/// `excited[n]` is `C₂,ₙ₊₁` and sits on Fock level `n+1`; `ground[n]` is
/// `C₁,ₙ` on level `n`. The field density matrix is
/// `|E⟩⟨E| + |G⟩⟨G|` with `|E⟩ = Σ excited[n] |n+1⟩`, `|G⟩ = Σ ground[n] |n⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    t: f64,
    params: ModelParams,
    excited: Vec<C64>,
    ground: Vec<C64>,
    tail_mass: f64,
}

impl FieldState {
    /// Builds a state from explicit amplitude arrays, e.g. a prepared test state.
    pub fn from_parts(
        params: ModelParams,
        t: f64,
        excited: Vec<C64>,
        ground: Vec<C64>,
        tail_mass: f64,
    ) -> Result<Self> {
        if excited.is_empty() || excited.len() != ground.len() {
            return Err(Error::InvalidState(format!(
                "amplitude arrays must be non-empty and of equal length ({} vs {})",
                excited.len(),
                ground.len()
            )));
        }
        if !(0.0..1.0).contains(&tail_mass) {
            return Err(Error::InvalidState(format!("tail mass {tail_mass} outside [0, 1)")));
        }
        if excited.iter().chain(&ground).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        Ok(Self { t, params, excited, ground, tail_mass })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Truncation level `N`.
    pub fn levels(&self) -> usize {
        self.excited.len()
    }

    pub fn excited(&self) -> &[C64] {
        &self.excited
    }

    pub fn ground(&self) -> &[C64] {
        &self.ground
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Retained probability `Σ |excited|² + |ground|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.excited.iter().zip(&self.ground).map(|(e, g)| e.norm_sqr() + g.norm_sqr()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&FieldStateDoc::from(self)).expect("field state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FieldStateDoc = serde_json::from_str(text).map_err(|e| Error::InvalidState(e.to_string()))?;
        doc.params.validate()?;
        if doc.excited.len() != doc.levels {
            return Err(Error::InvalidState(format!(
                "N = {} but {} amplitudes supplied",
                doc.levels,
                doc.excited.len()
            )));
        }
        let pairs = |v: Vec<[f64; 2]>| v.into_iter().map(|[re, im]| C64::new(re, im)).collect();
        Self::from_parts(doc.params, doc.t, pairs(doc.excited), pairs(doc.ground), doc.tail_mass)
    }
}

#[derive(Serialize, Deserialize)]
struct FieldStateDoc {
    t: f64,
    #[serde(rename = "N")]
    levels: usize,
    tail_mass: f64,
    params: ModelParams,
    excited: Vec<[f64; 2]>,
    ground: Vec<[f64; 2]>,
}

impl From<&FieldState> for FieldStateDoc {
    fn from(s: &FieldState) -> Self {
        let pairs = |v: &[C64]| v.iter().map(|z| [z.re, z.im]).collect();
        Self {
            t: s.t,
            levels: s.levels(),
            tail_mass: s.tail_mass,
            params: s.params.clone(),
            excited: pairs(&s.excited),
            ground: pairs(&s.ground),
        }
    }
}

/// Evolves the initial state `|2⟩ ⊗ |β⟩` to time `t` with the default cap.
pub fn evolve(params: &ModelParams, t: f64, eps: f64) -> Result<FieldState> {
    evolve_with(params, t, &Truncation::with_eps(eps))
}

pub fn evolve_with(params: &ModelParams, t: f64, truncation: &Truncation) -> Result<FieldState> {
    params.validate()?;
    if !t.is_finite() {
        return Err(Error::InvalidParams(format!("time must be finite, got {t}")));
    }
    let beta_mag = params.beta.norm();
    let levels = truncation.levels(beta_mag)?;
    let ln_fact = ln_factorials(levels);
    let mut excited = Vec::with_capacity(levels);
    let mut ground = Vec::with_capacity(levels);
    for (n, &lf) in ln_fact.iter().enumerate().take(levels) {
        let c0 = initial_amplitude(params.beta, n as u64, lf);
        let (e, g) = manifold_pair(params, n as u64, t, c0)?;
        excited.push(e);
        ground.push(g);
    }
    Ok(FieldState { t, params: params.clone(), excited, ground, tail_mass: poisson_tail(beta_mag, levels) })
}
