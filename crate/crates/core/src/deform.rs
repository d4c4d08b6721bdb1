//! Deformation functions `f(n)` and the quantities derived from them.
//!
//! The deformed ladder operators are `A = a f(n)` and `A† = f(n) a†`. Everything
//! downstream only needs `f` evaluated at non-negative integers, the commutator
//! function `[A, A†] = (n+1) f²(n+1) - n f²(n)` and the generalized detuning
//! `h(n) = Ω f²(n) + (ω₂ - ω₁)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `|f(n)|` accepted before evaluation is rejected.
pub const MAX_DEFORMATION_MAGNITUDE: f64 = 1e12;

/// Real polynomial in `n`, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidDeformation("polynomial needs at least one coefficient".into()));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidDeformation(format!("polynomial coefficient {c} is not finite")));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}

/// The function `f(n)` that deforms the field operators.
#[derive(Debug, Clone, PartialEq)]
pub enum Deformation {
    /// `f(n) = 1`, the ordinary Jaynes-Cummings model.
    Identity,
    /// `f(n) = sin(n)`.
    Sin,
    /// `f(n) = 1 / sin(n)`, with `f(0) = 0`.
    InvSin,
    /// `f(n) = ln(n)`, with `f(0) = 0`.
    Ln,
    Polynomial(Polynomial),
}

impl Deformation {
    /// The three deformations plotted in the figure set, in plotting order.
    pub fn figure_kinds() -> Vec<Deformation> {
        vec![Deformation::Sin, Deformation::InvSin, Deformation::Ln]
    }

    /// Evaluates `f(n)`.
    ///
    /// `Ln` and `InvSin` are undefined at zero; they return 0 there since
    /// `f(0)` only ever enters through `n f²(n)` or `h(0)`.
    pub fn eval_f(&self, n: u64) -> Result<f64> {
        let x = n as f64;
        let value = match self {
            Deformation::Identity => 1.0,
            Deformation::Sin => x.sin(),
            Deformation::InvSin if n == 0 => 0.0,
            Deformation::InvSin => 1.0 / x.sin(),
            Deformation::Ln if n == 0 => 0.0,
            Deformation::Ln => x.ln(),
            Deformation::Polynomial(p) => p.eval(x),
        };
        if !value.is_finite() || value.abs() > MAX_DEFORMATION_MAGNITUDE {
            return Err(Error::MagnitudeOverflow { n, value });
        }
        Ok(value)
    }

    /// `g(n) = (n+1) f²(n+1) - n f²(n)`, the value of `[A, A†]` on `|n⟩`.
    pub fn g_commutator(&self, n: u64) -> Result<f64> {
        let next = self.eval_f(n + 1)?;
        let here = self.eval_f(n)?;
        Ok((n + 1) as f64 * next * next - n as f64 * here * here)
    }
}

impl fmt::Display for Deformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deformation::Identity => f.write_str("identity"),
            Deformation::Sin => f.write_str("sin"),
            Deformation::InvSin => f.write_str("invsin"),
            Deformation::Ln => f.write_str("ln"),
            Deformation::Polynomial(p) => {
                f.write_str("poly:")?;
                for (i, c) in p.coeffs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c:?}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Deformation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim();
        match token {
            "identity" => Ok(Deformation::Identity),
            "sin" => Ok(Deformation::Sin),
            "invsin" => Ok(Deformation::InvSin),
            "ln" => Ok(Deformation::Ln),
            _ => {
                let Some(list) = token.strip_prefix("poly:") else {
                    return Err(Error::InvalidDeformation(format!(
                        "unknown deformation '{token}' (expected identity, sin, invsin, ln or poly:c0,c1,...)"
                    )));
                };
                let coeffs = list
                    .split(',')
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidDeformation(format!("bad polynomial coefficient '{c}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Polynomial::new(coeffs).map(Deformation::Polynomial)
            }
        }
    }
}

impl Serialize for Deformation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Deformation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let token = String::deserialize(d)?;
        token.parse().map_err(serde::de::Error::custom)
    }
}

/// Physical parameters of the deformed atom-cavity model (dimensionless, ħ = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Atom-field coupling.
    pub g: f64,
    /// Field mode frequency Ω.
    pub omega: f64,
    /// Ground-level frequency ω₁.
    pub w1: f64,
    /// Excited-level frequency ω₂.
    pub w2: f64,
    /// Amplitude of the initial coherent field.
    #[serde(with = "complex_pair")]
    pub beta: C64,
    pub deformation: Deformation,
}

impl ModelParams {
    /// The configuration used throughout the figure set:
    /// g = 0.5, β = 2, Ω = 1, ω₁ = ω₂ = 100.
    pub fn figure_defaults(deformation: Deformation) -> Self {
        Self { g: 0.5, omega: 1.0, w1: 100.0, w2: 100.0, beta: C64::new(2.0, 0.0), deformation }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::InvalidParams(format!("coupling g must be finite and non-negative, got {}", self.g)));
        }
        for (name, v) in [("omega", self.omega), ("w1", self.w1), ("w2", self.w2)] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        if !(self.beta.re.is_finite() && self.beta.im.is_finite()) {
            return Err(Error::InvalidParams("beta must be finite".into()));
        }
        Ok(())
    }

    /// Advisory text when the coupling is not small against the atomic
    /// frequencies, where the rotating-wave form of the model is questionable.
    pub fn weak_coupling_warning(&self) -> Option<String> {
        let scale = self.w1.abs().min(self.w2.abs());
        if self.g >= 0.1 * scale {
            Some(format!(
                "warning: coupling g = {} is not small against min(|w1|, |w2|) = {}; \
                 the rotating-wave approximation may not hold",
                self.g, scale
            ))
        } else {
            None
        }
    }

    /// Generalized detuning `h(n) = Ω f²(n) + (ω₂ - ω₁)`.
    pub fn h_detuning(&self, n: u64) -> Result<f64> {
        let f = self.deformation.eval_f(n)?;
        Ok(self.omega * f * f + (self.w2 - self.w1))
    }

    /// Matrix element `g f(n+1) √(n+1)` linking `|2, n+1⟩` and `|1, n⟩`.
    pub fn manifold_coupling(&self, n: u64) -> Result<f64> {
        let f = self.deformation.eval_f(n + 1)?;
        Ok(self.g * f * ((n + 1) as f64).sqrt())
    }
}

/// Serializes a complex number as `[re, im]`.
pub(crate) mod complex_pair {
    use num_complex::Complex64 as C64;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&z.re)?;
        t.serialize_element(&z.im)?;
        t.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}
