//! Normally ordered moments `⟨a†ᵖ a^q⟩` of the reduced field state and the
//! scalar witnesses built from them.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::FieldState;
use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::special::falling;

pub const MAX_MOMENT_ORDER: usize = 4;

/// `⟨a†a⟩` below which the Mandel parameter is undefined.
pub const VACUUM_MEAN: f64 = 1e-14;

const DIAGONAL_IM_TOL: f64 = 1e-12;

/// `⟨a†ᵖ a^q⟩ = Σ_n [C*₂,ₘ₊₁ C₂,ₙ₊₁ √((m+1)!(n+1)!)/(n+1-q)! + C*₁,ₘ C₁,ₙ √(m! n!)/(n-q)!]`
/// with `m = n + p - q`. Terms whose shifted index leaves `[0, N)` are dropped.
pub fn moment(state: &FieldState, p: usize, q: usize) -> Result<C64> {
    if p > MAX_MOMENT_ORDER || q > MAX_MOMENT_ORDER {
        return Err(Error::IndexOrderTooHigh { p, q });
    }
    // One summation order for both (p, q) and (q, p) keeps the result exactly Hermitian.
    if p < q {
        return Ok(moment(state, q, p)?.conj());
    }
    let exc = state.excited();
    let gnd = state.ground();
    let levels = state.levels();
    let mut sum = C64::new(0.0, 0.0);
    for n in 0..levels {
        let Some(m) = (n + p).checked_sub(q) else { continue };
        if m >= levels {
            continue;
        }
        // excited branch: |n+1⟩ → a^q → |n+1-q⟩ ← a^p ← |m+1⟩
        if n + 1 >= q {
            let coef = (falling(m + 1, p) * falling(n + 1, q)).sqrt();
            sum += exc[m].conj() * exc[n] * coef;
        }
        if n >= q {
            let coef = (falling(m, p) * falling(n, q)).sqrt();
            sum += gnd[m].conj() * gnd[n] * coef;
        }
    }
    Ok(sum)
}

fn diagonal_moment(state: &FieldState, order: usize) -> Result<f64> {
    let z = moment(state, order, order)?;
    if z.im.abs() >= DIAGONAL_IM_TOL {
        return Err(Error::ComplexDiagonal { im: z.im });
    }
    Ok(z.re)
}

/// `p(n) = |C₂,ₙ₊₁|² + |C₁,ₙ|²`, the weight of manifold `n`.
pub fn photon_number_dist(state: &FieldState, n: usize) -> Result<f64> {
    if n >= state.levels() {
        return Err(Error::OutOfRange { n, levels: state.levels() });
    }
    Ok(state.excited()[n].norm_sqr() + state.ground()[n].norm_sqr())
}

/// Diagonal of the field density matrix in the Fock basis, levels `0..=N`:
/// `⟨m|ρ|m⟩ = |C₂,ₘ|² + |C₁,ₘ|²`.
pub fn level_populations(state: &FieldState) -> Vec<f64> {
    let levels = state.levels();
    (0..=levels)
        .map(|m| {
            let e = if m >= 1 { state.excited()[m - 1].norm_sqr() } else { 0.0 };
            let g = if m < levels { state.ground()[m].norm_sqr() } else { 0.0 };
            e + g
        })
        .collect()
}

/// Mandel parameter `Q_M = ⟨a†²a²⟩/⟨a†a⟩ - ⟨a†a⟩`.
pub fn mandel_q(state: &FieldState) -> Result<f64> {
    let mean = diagonal_moment(state, 1)?;
    if mean < VACUUM_MEAN {
        return Err(Error::VacuumState { mean });
    }
    Ok(diagonal_moment(state, 2)? / mean - mean)
}

/// Lowest-order antibunching `d₍₁₎ = ⟨a†²a²⟩ - ⟨a†a⟩²`.
pub fn antibunching_d1(state: &FieldState) -> Result<f64> {
    let mean = diagonal_moment(state, 1)?;
    Ok(diagonal_moment(state, 2)? - mean * mean)
}

/// Quadrature squeezing parameters `(s_x, s_p)`, each `4⟨(Δ·)²⟩ - 1`.
pub fn squeezing(state: &FieldState) -> Result<(f64, f64)> {
    let n1 = diagonal_moment(state, 1)?;
    let a1 = moment(state, 0, 1)?;
    let a2 = moment(state, 0, 2)?;
    let (ad1, ad2) = (a1.conj(), a2.conj());
    let cross = 2.0 * a1 * ad1;
    let s_x = 2.0 * n1 + a2 + ad2 - a1 * a1 - ad1 * ad1 - cross;
    let s_p = 2.0 * n1 - a2 - ad2 + a1 * a1 + ad1 * ad1 - cross;
    for s in [s_x, s_p] {
        if s.im.abs() >= DIAGONAL_IM_TOL {
            return Err(Error::ComplexDiagonal { im: s.im });
        }
    }
    Ok((s_x.re, s_p.re))
}

/// Scalar witnesses of one field state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub t: f64,
    pub mean_n: f64,
    pub q_mandel: f64,
    pub d1: f64,
    pub s_x: f64,
    pub s_p: f64,
}

impl WitnessRecord {
    pub const CSV_HEADER: &'static str = "t,mean_n,q_mandel,d1,s_x,s_p";

    pub fn evaluate(state: &FieldState) -> Result<Self> {
        let mean_n = diagonal_moment(state, 1)?;
        let (s_x, s_p) = squeezing(state)?;
        Ok(Self { t: state.t(), mean_n, q_mandel: mandel_q(state)?, d1: antibunching_d1(state)?, s_x, s_p })
    }

    pub fn csv_row(&self) -> String {
        [self.t, self.mean_n, self.q_mandel, self.d1, self.s_x, self.s_p]
            .iter()
            .map(|&v| fmt_num(v))
            .collect::<Vec<_>>()
            .join(",")
    }
}
