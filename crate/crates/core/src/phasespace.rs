//! Wigner and Husimi Q functions of the reduced field state.
//!
//! The field density matrix is `ρ = |E⟩⟨E| + |G⟩⟨G|` (see [`FieldState`]).
//! The Wigner function is evaluated through the displaced parity
//!
//! ```text
//! W(γ) = (2/π) Σ_k (-1)^k ⟨γ,k|ρ|γ,k⟩ = (2/π) Tr[ρ D(2γ) P]
//! ```
//!
//! which needs the matrix elements `⟨m|D(α)|n⟩` only on the retained levels,
//! so no cut-off in `k` is involved. Matrix elements come from a normalized
//! form of the Laguerre three-term recurrence, run along each diagonal.

use std::f64::consts::{FRAC_1_PI, FRAC_2_PI};
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dynamics::{initial_amplitude, FieldState};
use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::special::ln_factorials;

/// Largest Fock index accepted by the overlap routines.
pub const MAX_FOCK_INDEX: usize = 4096;

/// Largest number of nodes in a phase-space grid.
pub const MAX_GRID_POINTS: usize = 10_000_000;

const RESCALE: f64 = 1e150;

/// Runs the normalized Laguerre recurrence for diagonal offset `d` at
/// `x = |α|²`, calling `emit(j, value)` with `value = e^{-x/2} |α|^d
/// √(j!/(j+d)!) L_j^{(d)}(x)` for `j = 0..len`.
fn diagonal_walk(
    abs_alpha: f64,
    d: usize,
    len: usize,
    ln_fact: &[f64],
    sqrt_int: &[f64],
    mut emit: impl FnMut(usize, f64),
) {
    if len == 0 {
        return;
    }
    let x = abs_alpha * abs_alpha;
    if abs_alpha == 0.0 {
        if d == 0 {
            (0..len).for_each(|j| emit(j, 1.0));
        } else {
            (0..len).for_each(|j| emit(j, 0.0));
        }
        return;
    }
    let mut log_pref = -0.5 * x + d as f64 * abs_alpha.ln() - 0.5 * ln_fact[d];
    let mut factor = log_pref.exp();
    let mut prev = 0.0;
    let mut cur = 1.0;
    emit(0, factor * cur);
    for j in 0..len - 1 {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + d as f64 - x) * cur - sqrt_int[j] * sqrt_int[j + d] * prev)
            / (sqrt_int[j + 1] * sqrt_int[j + 1 + d]);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_pref += RESCALE.ln();
            factor = log_pref.exp();
        }
        emit(j + 1, factor * cur);
    }
}

fn sqrt_table(max: usize) -> Vec<f64> {
    (0..=max).map(|k| (k as f64).sqrt()).collect()
}

/// `⟨m|D(α)|n⟩` for all `m, n < dim`, row-major.
#[derive(Debug, Clone)]
pub struct DisplacementTable {
    dim: usize,
    data: Vec<C64>,
}

impl DisplacementTable {
    pub fn new(alpha: C64, dim: usize) -> Result<Self> {
        if dim > MAX_FOCK_INDEX + 1 {
            return Err(Error::OrderOverflow { order: dim - 1 });
        }
        let ln_fact = ln_factorials(dim);
        let sqrt_int = sqrt_table(2 * dim + 1);
        Ok(Self::build(alpha, dim, &ln_fact, &sqrt_int))
    }

    fn build(alpha: C64, dim: usize, ln_fact: &[f64], sqrt_int: &[f64]) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        let r = alpha.norm();
        let unit = if r == 0.0 { C64::new(1.0, 0.0) } else { alpha / r };
        let minus_conj_unit = -unit.conj();
        let mut lower_phase = C64::new(1.0, 0.0);
        let mut upper_phase = C64::new(1.0, 0.0);
        for d in 0..dim {
            diagonal_walk(r, d, dim - d, ln_fact, sqrt_int, |j, v| {
                // m = j + d ≥ n = j carries α^d, the transpose carries (-α*)^d
                data[(j + d) * dim + j] = lower_phase * v;
                if d > 0 {
                    data[j * dim + j + d] = upper_phase * v;
                }
            });
            lower_phase *= unit;
            upper_phase *= minus_conj_unit;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.data[m * self.dim + n]
    }
}

/// `⟨γ,k|n⟩ = ⟨k|D(γ)†|n⟩`, the overlap of a displaced number state with a Fock state.
///
/// For `n ≥ k` this is `e^{-|γ|²/2} √(k!/n!) (γ*)^{n-k} L_k^{(n-k)}(|γ|²)`; for
/// `n < k` the roles swap and the phase becomes `(-γ)^{k-n}`.
pub fn displaced_number_overlap(gamma: C64, k: usize, n: usize) -> Result<C64> {
    let order = k.max(n);
    if order > MAX_FOCK_INDEX {
        return Err(Error::OrderOverflow { order });
    }
    let (d, j) = if n >= k { (n - k, k) } else { (k - n, n) };
    let ln_fact = ln_factorials(d);
    let sqrt_int = sqrt_table(order + 1);
    let r = gamma.norm();
    let mut value = 0.0;
    diagonal_walk(r, d, j + 1, &ln_fact, &sqrt_int, |i, v| {
        if i == j {
            value = v;
        }
    });
    let unit = if r == 0.0 { C64::new(1.0, 0.0) } else { gamma / r };
    let phase = if n >= k { unit.conj().powu(d as u32) } else { (-unit).powu(d as u32) };
    Ok(phase * value)
}

/// How the Wigner function treats the density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WignerMode {
    /// Full reduced density matrix, coherences included.
    Full,
    /// Fock-diagonal part only, `Σ_n ρ_nn W_n(γ)`: the series that keeps only
    /// `|C|²` terms. Diagnostic use.
    DiagonalOnly,
}

/// Per-state data reused across many phase-space points.
#[derive(Debug, Clone)]
pub struct PhaseSpaceEvaluator {
    dim: usize,
    excited_levels: Vec<C64>,
    ground_levels: Vec<C64>,
    populations: Vec<f64>,
    ln_fact: Vec<f64>,
    sqrt_int: Vec<f64>,
}

impl PhaseSpaceEvaluator {
    pub fn new(state: &FieldState) -> Result<Self> {
        let levels = state.levels();
        let dim = levels + 1;
        if levels > MAX_FOCK_INDEX {
            return Err(Error::OrderOverflow { order: levels });
        }
        let zero = C64::new(0.0, 0.0);
        let mut excited_levels = vec![zero; dim];
        let mut ground_levels = vec![zero; dim];
        excited_levels[1..].copy_from_slice(state.excited());
        ground_levels[..levels].copy_from_slice(state.ground());
        let populations = excited_levels.iter().zip(&ground_levels).map(|(e, g)| e.norm_sqr() + g.norm_sqr()).collect();
        Ok(Self {
            dim,
            excited_levels,
            ground_levels,
            populations,
            ln_fact: ln_factorials(dim),
            sqrt_int: sqrt_table(2 * dim + 1),
        })
    }

    /// `(2/π) ⟨E|D(2γ)P|E⟩ + (2/π) ⟨G|D(2γ)P|G⟩` before taking the real part.
    pub fn wigner_complex(&self, gamma: C64) -> C64 {
        let table = DisplacementTable::build(2.0 * gamma, self.dim, &self.ln_fact, &self.sqrt_int);
        let mut total = C64::new(0.0, 0.0);
        for branch in [&self.excited_levels, &self.ground_levels] {
            let parity: Vec<C64> = branch.iter().enumerate().map(|(n, &z)| if n % 2 == 0 { z } else { -z }).collect();
            for (m, psi_m) in branch.iter().enumerate() {
                if psi_m.norm_sqr() == 0.0 {
                    continue;
                }
                let row = &table.data[m * self.dim..(m + 1) * self.dim];
                let y: C64 = row.iter().zip(&parity).map(|(x, u)| x * u).sum();
                total += psi_m.conj() * y;
            }
        }
        total * FRAC_2_PI
    }

    pub fn wigner(&self, gamma: C64, mode: WignerMode) -> f64 {
        match mode {
            WignerMode::Full => self.wigner_complex(gamma).re,
            WignerMode::DiagonalOnly => {
                let mut sum = 0.0;
                diagonal_walk(2.0 * gamma.norm(), 0, self.dim, &self.ln_fact, &self.sqrt_int, |l, v| {
                    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                    sum += sign * self.populations[l] * v;
                });
                FRAC_2_PI * sum
            }
        }
    }

    /// `(1/π) ⟨α|ρ|α⟩`.
    pub fn husimi(&self, alpha: C64) -> f64 {
        let conj = alpha.conj();
        let mut a = C64::new(0.0, 0.0);
        let mut b = C64::new(0.0, 0.0);
        for n in 0..self.dim {
            let bra = initial_amplitude(conj, n as u64, self.ln_fact[n]);
            a += self.ground_levels[n] * bra;
            b += self.excited_levels[n] * bra;
        }
        FRAC_1_PI * (a.norm_sqr() + b.norm_sqr())
    }

    pub fn eval(&self, kind: PhaseSpaceKind, z: C64) -> f64 {
        match kind {
            PhaseSpaceKind::Wigner => self.wigner(z, WignerMode::Full),
            PhaseSpaceKind::WignerDiagonal => self.wigner(z, WignerMode::DiagonalOnly),
            PhaseSpaceKind::HusimiQ => self.husimi(z),
        }
    }
}

/// Wigner function `W(γ)` of the reduced field state.
pub fn wigner(state: &FieldState, gamma: C64) -> Result<f64> {
    Ok(PhaseSpaceEvaluator::new(state)?.wigner(gamma, WignerMode::Full))
}

pub fn wigner_with(state: &FieldState, gamma: C64, mode: WignerMode) -> Result<f64> {
    Ok(PhaseSpaceEvaluator::new(state)?.wigner(gamma, mode))
}

/// Husimi function `Q(α) = (1/π) ⟨α|ρ|α⟩`.
pub fn husimi_q(state: &FieldState, alpha: C64) -> Result<f64> {
    Ok(PhaseSpaceEvaluator::new(state)?.husimi(alpha))
}

/// The displaced-number-state series `(2/π) Σ_{k<k_max} (-1)^k ⟨γ,k|ρ|γ,k⟩`
/// evaluated term by term from [`displaced_number_overlap`].
///
/// Slow; it exists to cross-check [`wigner`] and to study the `k` cut-off.
pub fn wigner_series(state: &FieldState, gamma: C64, k_max: usize, mode: WignerMode) -> Result<f64> {
    let ev = PhaseSpaceEvaluator::new(state)?;
    let mut sum = 0.0;
    for k in 0..k_max {
        let overlaps = (0..ev.dim).map(|l| displaced_number_overlap(gamma, k, l)).collect::<Result<Vec<_>>>()?;
        let term = match mode {
            WignerMode::Full => [&ev.excited_levels, &ev.ground_levels]
                .iter()
                .map(|branch| branch.iter().zip(&overlaps).map(|(c, o)| c * o).sum::<C64>().norm_sqr())
                .sum::<f64>(),
            WignerMode::DiagonalOnly => {
                ev.populations.iter().zip(&overlaps).map(|(p, o)| p * o.norm_sqr()).sum::<f64>()
            }
        };
        sum += if k % 2 == 0 { term } else { -term };
    }
    Ok(FRAC_2_PI * sum)
}

/// Rectangular sampling window; nodes include both edges.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { re_min: -3.0, re_max: 3.0, im_min: -3.0, im_max: 3.0, n_re: 121, n_im: 121 }
    }
}

impl GridSpec {
    pub fn square(half_width: f64, nodes: usize) -> Self {
        Self {
            re_min: -half_width,
            re_max: half_width,
            im_min: -half_width,
            im_max: half_width,
            n_re: nodes,
            n_im: nodes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bounds = [self.re_min, self.re_max, self.im_min, self.im_max];
        if bounds.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidGrid("window bounds must be finite".into()));
        }
        if !(self.re_min < self.re_max && self.im_min < self.im_max) {
            return Err(Error::InvalidGrid("window must have min < max on both axes".into()));
        }
        if self.n_re < 2 || self.n_im < 2 {
            return Err(Error::InvalidGrid("need at least 2 nodes per axis".into()));
        }
        let points = self.n_re.saturating_mul(self.n_im);
        if points > MAX_GRID_POINTS {
            return Err(Error::GridTooLarge { points });
        }
        Ok(())
    }

    pub fn step_re(&self) -> f64 {
        (self.re_max - self.re_min) / (self.n_re - 1) as f64
    }

    pub fn step_im(&self) -> f64 {
        (self.im_max - self.im_min) / (self.n_im - 1) as f64
    }

    pub fn re_at(&self, i: usize) -> f64 {
        self.re_min + i as f64 * self.step_re()
    }

    pub fn im_at(&self, j: usize) -> f64 {
        self.im_min + j as f64 * self.step_im()
    }

    pub fn node(&self, i: usize, j: usize) -> C64 {
        C64::new(self.re_at(i), self.im_at(j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseSpaceKind {
    Wigner,
    /// Wigner function of the Fock-diagonal part only.
    WignerDiagonal,
    HusimiQ,
}

impl PhaseSpaceKind {
    pub fn name(&self) -> &'static str {
        match self {
            PhaseSpaceKind::Wigner => "wigner",
            PhaseSpaceKind::WignerDiagonal => "wigner-diagonal",
            PhaseSpaceKind::HusimiQ => "husimi",
        }
    }
}

/// A phase-space function sampled on a grid; `values` is row-major with
/// `n_im` rows of `n_re` entries, rows in increasing imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceField {
    pub spec: GridSpec,
    pub kind: PhaseSpaceKind,
    pub values: Vec<f64>,
    /// Rectangle-rule integral `Σ values · Δre · Δim`.
    pub integral: f64,
}

impl PhaseSpaceField {
    pub fn value(&self, i_re: usize, j_im: usize) -> f64 {
        self.values[j_im * self.spec.n_re + i_re]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Matrix layout: two comment lines (kind and window, resolution) then one
    /// comma-separated row per imaginary-axis node.
    pub fn to_csv_matrix(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# kind={} window={},{},{},{}",
            self.kind.name(),
            fmt_num(s.re_min),
            fmt_num(s.re_max),
            fmt_num(s.im_min),
            fmt_num(s.im_max)
        );
        let _ = writeln!(out, "# resolution={},{}", s.n_re, s.n_im);
        for row in self.values.chunks(s.n_re) {
            let line: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Long layout: header `re,im,value` then one line per node.
    pub fn to_csv_long(&self) -> String {
        let s = &self.spec;
        let mut out = String::from("re,im,value\n");
        for j in 0..s.n_im {
            for i in 0..s.n_re {
                let _ = writeln!(out, "{},{},{}", fmt_num(s.re_at(i)), fmt_num(s.im_at(j)), fmt_num(self.value(i, j)));
            }
        }
        out
    }
}

/// Evaluates a phase-space function at every node of `spec`, rows in parallel.
pub fn eval_grid(state: &FieldState, spec: &GridSpec, kind: PhaseSpaceKind) -> Result<PhaseSpaceField> {
    spec.validate()?;
    let ev = PhaseSpaceEvaluator::new(state)?;
    let rows: Vec<Vec<f64>> = (0..spec.n_im)
        .into_par_iter()
        .map(|j| (0..spec.n_re).map(|i| ev.eval(kind, spec.node(i, j))).collect())
        .collect();
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    let integral = values.iter().sum::<f64>() * spec.step_re() * spec.step_im();
    Ok(PhaseSpaceField { spec: *spec, kind, values, integral })
}
