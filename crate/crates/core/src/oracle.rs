//! Brute-force propagation of the per-manifold equations of motion.
//!
//! Each manifold obeys
//!
//! ```text
//! dC₂,ₙ₊₁/dt =  k e^{+i h(n) t} C₁,ₙ
//! dC₁,ₙ/dt   = -k e^{-i h(n) t} C₂,ₙ₊₁,      k = g f(n+1) √(n+1)
//! ```
//!
//! starting from `C₂,ₙ₊₁(0) = e^{-|β|²/2} βⁿ/√(n!)`, `C₁,ₙ(0) = 0`. This is the
//! system whose solution is the closed form in [`crate::dynamics`]; the
//! coupling `k` and the minus sign in the second line are both required for
//! that (the pair without them has the wrong characteristic roots and does
//! not conserve the manifold norm). The integrator is classical fixed-step RK4.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::deform::ModelParams;
use crate::dynamics::{initial_amplitude, manifold_amplitudes, poisson_tail, FieldState, Truncation};
use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::special::ln_factorials;

/// Upper bound on `dt · (|k| + |h|)` for a single RK4 step.
pub const MAX_STEP_PHASE: f64 = 0.1;

/// Phase per step targeted when a step is split into substeps.
pub const SUBSTEP_PHASE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeMethod {
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSettings {
    /// Output step, and integration step unless substeps are allowed.
    pub dt: f64,
    pub t_end: f64,
    pub method: OdeMethod,
    /// Largest number of equal substeps each `dt` may be split into for
    /// rapidly rotating manifolds. `1` keeps the step fixed at `dt`.
    pub max_substeps: usize,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self { dt: 1e-4, t_end: 1.0, method: OdeMethod::Rk4, max_substeps: 1 }
    }
}

impl OdeSettings {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, ..Self::default() }
    }

    pub fn with_substeps(mut self, max_substeps: usize) -> Self {
        self.max_substeps = max_substeps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidSettings(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidSettings(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return Err(Error::InvalidSettings(format!("dt = {} exceeds t_end = {}", self.dt, self.t_end)));
        }
        if self.max_substeps == 0 {
            return Err(Error::InvalidSettings("max_substeps must be at least 1".into()));
        }
        Ok(())
    }

    /// Output times `0, dt, 2dt, ...`, ending exactly at `t_end`.
    fn sample_times(&self) -> Vec<f64> {
        if self.t_end == 0.0 {
            return vec![0.0];
        }
        let steps = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        let mut times: Vec<f64> = (0..steps).map(|i| i as f64 * self.dt).collect();
        times.push(self.t_end);
        times
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    /// `C₂,ₙ₊₁`
    pub excited: C64,
    /// `C₁,ₙ`
    pub ground: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n: usize,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub const CSV_HEADER: &'static str = "t,re_c2,im_c2,re_c1,im_c1";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_num(p.t),
                fmt_num(p.excited.re),
                fmt_num(p.excited.im),
                fmt_num(p.ground.re),
                fmt_num(p.ground.im)
            );
        }
        out
    }

    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory has at least the initial point")
    }
}

struct Manifold {
    coupling: f64,
    h: f64,
}

impl Manifold {
    fn rhs(&self, t: f64, y: [C64; 2]) -> [C64; 2] {
        let rot = C64::from_polar(1.0, self.h * t);
        [self.coupling * rot * y[1], -self.coupling * rot.conj() * y[0]]
    }

    fn rk4(&self, t: f64, y: [C64; 2], h: f64) -> [C64; 2] {
        let add = |y: [C64; 2], k: [C64; 2], s: f64| [y[0] + k[0] * s, y[1] + k[1] * s];
        let k1 = self.rhs(t, y);
        let k2 = self.rhs(t + 0.5 * h, add(y, k1, 0.5 * h));
        let k3 = self.rhs(t + 0.5 * h, add(y, k2, 0.5 * h));
        let k4 = self.rhs(t + h, add(y, k3, h));
        [
            y[0] + (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) * (h / 6.0),
            y[1] + (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) * (h / 6.0),
        ]
    }
}

fn integrate(
    params: &ModelParams,
    n: usize,
    settings: &OdeSettings,
    c0: C64,
    mut record: impl FnMut(f64, [C64; 2]),
) -> Result<[C64; 2]> {
    settings.validate()?;
    let manifold = Manifold { coupling: params.manifold_coupling(n as u64)?, h: params.h_detuning(n as u64)? };
    let rate = manifold.coupling.abs() + manifold.h.abs();
    let phase = settings.dt * rate;
    let substeps = ((phase / SUBSTEP_PHASE).ceil() as usize).clamp(1, settings.max_substeps);
    let sub_phase = phase / substeps as f64;
    if settings.t_end > 0.0 && sub_phase > MAX_STEP_PHASE {
        return Err(Error::StepTooLarge { n, rate_dt: sub_phase });
    }
    let times = settings.sample_times();
    let mut y = [c0, C64::new(0.0, 0.0)];
    record(times[0], y);
    for w in times.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        for s in 0..substeps {
            y = manifold.rk4(w[0] + s as f64 * h, y, h);
        }
        record(w[1], y);
    }
    Ok(y)
}

fn start_amplitude(params: &ModelParams, n: usize) -> C64 {
    let ln_fact = ln_factorials(n);
    initial_amplitude(params.beta, n as u64, ln_fact[n])
}

/// Integrates manifold `n` from 0 to `t_end`, recording every output step.
pub fn propagate_manifold(params: &ModelParams, n: usize, settings: &OdeSettings) -> Result<Trajectory> {
    params.validate()?;
    let mut points = Vec::new();
    integrate(params, n, settings, start_amplitude(params, n), |t, y| {
        points.push(TrajectoryPoint { t, excited: y[0], ground: y[1] })
    })?;
    Ok(Trajectory { n, points })
}

/// Integrates every retained manifold to `t_end` and assembles the field state.
pub fn propagate_state(params: &ModelParams, settings: &OdeSettings, eps: f64) -> Result<FieldState> {
    propagate_state_with(params, settings, &Truncation::with_eps(eps))
}

pub fn propagate_state_with(
    params: &ModelParams,
    settings: &OdeSettings,
    truncation: &Truncation,
) -> Result<FieldState> {
    params.validate()?;
    settings.validate()?;
    let beta_mag = params.beta.norm();
    let levels = truncation.levels(beta_mag)?;
    let ln_fact = ln_factorials(levels);
    let finals = (0..levels)
        .into_par_iter()
        .map(|n| {
            let c0 = initial_amplitude(params.beta, n as u64, ln_fact[n]);
            integrate(params, n, settings, c0, |_, _| {})
        })
        .collect::<Result<Vec<_>>>()?;
    let (excited, ground) = finals.into_iter().map(|y| (y[0], y[1])).unzip();
    FieldState::from_parts(params.clone(), settings.t_end, excited, ground, poisson_tail(beta_mag, levels))
}

/// Largest disagreement between the integrator and the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub levels: usize,
    /// Max over manifolds and output times of `max(|ΔC₂|, |ΔC₁|)`.
    pub max_deviation: f64,
    pub worst_manifold: usize,
    pub worst_t: f64,
    /// Max over manifolds and times of `| |C₂|² + |C₁|² - |C₂(0)|² |`.
    pub max_norm_drift: f64,
}

/// Compares every output sample of every retained manifold with the closed form.
pub fn validate_closed_form(
    params: &ModelParams,
    settings: &OdeSettings,
    truncation: &Truncation,
) -> Result<ValidationReport> {
    params.validate()?;
    settings.validate()?;
    let levels = truncation.levels(params.beta.norm())?;
    let per_manifold = (0..levels)
        .into_par_iter()
        .map(|n| {
            let c0 = start_amplitude(params, n);
            let norm0 = c0.norm_sqr();
            let mut worst = (0.0f64, 0.0f64);
            let mut drift = 0.0f64;
            let mut failure = None;
            integrate(params, n, settings, c0, |t, y| {
                match manifold_amplitudes(params, n as u64, t) {
                    Ok((e, g)) => {
                        let dev = (y[0] - e).norm().max((y[1] - g).norm());
                        if dev > worst.0 {
                            worst = (dev, t);
                        }
                    }
                    Err(err) => failure = Some(err),
                }
                drift = drift.max((y[0].norm_sqr() + y[1].norm_sqr() - norm0).abs());
            })?;
            if let Some(err) = failure {
                return Err(err);
            }
            Ok((worst, drift))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report =
        ValidationReport { levels, max_deviation: 0.0, worst_manifold: 0, worst_t: 0.0, max_norm_drift: 0.0 };
    for (n, ((dev, t), drift)) in per_manifold.into_iter().enumerate() {
        if dev > report.max_deviation {
            report.max_deviation = dev;
            report.worst_manifold = n;
            report.worst_t = t;
        }
        report.max_norm_drift = report.max_norm_drift.max(drift);
    }
    Ok(report)
}
