//! Parameter sweeps over time, field amplitude, field frequency and photon
//! number, evaluated concurrently and emitted in a fixed row order.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deform::{complex_pair, Deformation, ModelParams};
use crate::dynamics::{evolve, FieldState, DEFAULT_TRUNCATION_EPS};
use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::moments::{antibunching_d1, mandel_q, photon_number_dist, squeezing};
use crate::phasespace::{husimi_q, wigner, MAX_GRID_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Time,
    BetaMag,
    /// Square grid over `(Re β, Im β)`; the range applies to both components.
    BetaComplexGrid,
    OmegaField,
    PhotonIndex,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] = [
        SweepAxis::Time,
        SweepAxis::BetaMag,
        SweepAxis::BetaComplexGrid,
        SweepAxis::OmegaField,
        SweepAxis::PhotonIndex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Time => "time",
            SweepAxis::BetaMag => "beta_mag",
            SweepAxis::BetaComplexGrid => "beta_complex_grid",
            SweepAxis::OmegaField => "omega_field",
            SweepAxis::PhotonIndex => "photon_index",
        }
    }

    fn columns(self) -> &'static [&'static str] {
        match self {
            SweepAxis::Time => &["t"],
            SweepAxis::BetaMag => &["beta_mag"],
            SweepAxis::BetaComplexGrid => &["beta_re", "beta_im"],
            SweepAxis::OmegaField => &["omega"],
            SweepAxis::PhotonIndex => &["n"],
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        SweepAxis::ALL
            .into_iter()
            .find(|a| {
                a.name() == key
                    || (key == "beta" && *a == SweepAxis::BetaMag)
                    || (key == "omega" && *a == SweepAxis::OmegaField)
            })
            .ok_or_else(|| Error::InvalidSweep(format!("unknown axis '{s}'")))
    }
}

/// Quantities a sweep can tabulate. Columns always appear in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Pnd,
    Mandel,
    D1,
    Squeeze,
    Wigner,
    Husimi,
}

impl Witness {
    pub const ALL: [Witness; 6] =
        [Witness::Pnd, Witness::Mandel, Witness::D1, Witness::Squeeze, Witness::Wigner, Witness::Husimi];

    pub fn name(self) -> &'static str {
        match self {
            Witness::Pnd => "pnd",
            Witness::Mandel => "mandel",
            Witness::D1 => "d1",
            Witness::Squeeze => "squeeze",
            Witness::Wigner => "wigner",
            Witness::Husimi => "husimi",
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Witness::Pnd => &["p_n"],
            Witness::Mandel => &["q_mandel"],
            Witness::D1 => &["d1"],
            Witness::Squeeze => &["s_x", "s_p"],
            Witness::Wigner => &["wigner"],
            Witness::Husimi => &["husimi"],
        }
    }
}

impl FromStr for Witness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = match key.as_str() {
            "antibunch" | "antibunching" => "d1",
            "q" | "husimi_q" => "husimi",
            "p" | "p_n" => "pnd",
            other => other,
        };
        Witness::ALL
            .into_iter()
            .find(|w| w.name() == key)
            .ok_or_else(|| Error::InvalidSweep(format!("unknown witness '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub name: String,
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    /// Values held fixed; the deformation field is replaced by each entry of `kinds`.
    pub fixed: ModelParams,
    pub t: f64,
    pub witnesses: Vec<Witness>,
    pub kinds: Vec<Deformation>,
    /// Photon number for the `pnd` witness on axes other than `photon_index`.
    pub pnd_n: usize,
    /// Phase-space point for the `wigner` and `husimi` witnesses.
    #[serde(with = "complex_pair")]
    pub probe: C64,
    pub eps: f64,
}

impl SweepSpec {
    /// A spec over `axis` with the figure defaults for everything else.
    pub fn new(name: &str, axis: SweepAxis, witnesses: &[Witness]) -> Self {
        let (start, stop, count) = default_range(axis);
        Self {
            name: name.to_string(),
            axis,
            start,
            stop,
            count,
            fixed: ModelParams::figure_defaults(Deformation::Sin),
            t: 1.0,
            witnesses: witnesses.to_vec(),
            kinds: Deformation::figure_kinds(),
            pnd_n: 5,
            probe: C64::new(0.0, 0.0),
            eps: DEFAULT_TRUNCATION_EPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSweep(msg));
        if self.count < 2 {
            return bad(format!("count must be at least 2, got {}", self.count));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return bad(format!("range must satisfy start < stop, got [{}, {}]", self.start, self.stop));
        }
        if self.witnesses.is_empty() {
            return bad("no witnesses requested".into());
        }
        if self.kinds.is_empty() {
            return bad("no deformation kinds requested".into());
        }
        if !self.t.is_finite() {
            return bad(format!("t must be finite, got {}", self.t));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if !(self.probe.re.is_finite() && self.probe.im.is_finite()) {
            return bad("probe point must be finite".into());
        }
        self.fixed.validate()?;
        match self.axis {
            SweepAxis::BetaMag if self.start < 0.0 => {
                return bad(format!("beta_mag must be non-negative, got start {}", self.start))
            }
            SweepAxis::PhotonIndex => {
                if self.start < 0.0 {
                    return bad(format!("photon index must be non-negative, got start {}", self.start));
                }
                for x in self.nodes() {
                    if (x - x.round()).abs() > 1e-9 {
                        return bad(format!(
                            "photon_index range [{}, {}] with {} nodes has non-integer node {x}",
                            self.start, self.stop, self.count
                        ));
                    }
                }
            }
            _ => {}
        }
        if self.points() > MAX_GRID_POINTS {
            return Err(Error::GridTooLarge { points: self.points() });
        }
        Ok(())
    }

    /// Axis node values, ending exactly on `stop`.
    pub fn nodes(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.stop } else { self.start + i as f64 * step }).collect()
    }

    /// Number of axis points per kind.
    pub fn points(&self) -> usize {
        match self.axis {
            SweepAxis::BetaComplexGrid => self.count.saturating_mul(self.count),
            _ => self.count,
        }
    }

    fn witnesses_sorted(&self) -> Vec<Witness> {
        let mut w = self.witnesses.clone();
        w.sort();
        w.dedup();
        w
    }

    pub fn columns(&self) -> Vec<&'static str> {
        let mut cols = self.axis.columns().to_vec();
        cols.push("kind");
        for w in self.witnesses_sorted() {
            cols.extend_from_slice(w.columns());
        }
        cols.push("status");
        cols
    }

    /// Coordinates of axis point `i` (one value, or two on the complex grid).
    fn coordinates(&self, nodes: &[f64], i: usize) -> Vec<f64> {
        match self.axis {
            SweepAxis::BetaComplexGrid => vec![nodes[i / self.count], nodes[i % self.count]],
            _ => vec![nodes[i]],
        }
    }

    /// Parameters, time and photon number at one node.
    pub fn node_setup(&self, kind: &Deformation, coords: &[f64]) -> (ModelParams, f64, usize) {
        let mut params = self.fixed.clone();
        params.deformation = kind.clone();
        let mut t = self.t;
        let mut n = self.pnd_n;
        match self.axis {
            SweepAxis::Time => t = coords[0],
            SweepAxis::BetaMag => {
                let phase = if self.fixed.beta.norm() > 0.0 { self.fixed.beta.arg() } else { 0.0 };
                params.beta = C64::from_polar(coords[0], phase);
            }
            SweepAxis::BetaComplexGrid => params.beta = C64::new(coords[0], coords[1]),
            SweepAxis::OmegaField => params.omega = coords[0],
            SweepAxis::PhotonIndex => n = coords[0].round() as usize,
        }
        (params, t, n)
    }
}

/// Default `(start, stop, count)` per axis.
pub fn default_range(axis: SweepAxis) -> (f64, f64, usize) {
    match axis {
        SweepAxis::Time => (0.0, 10.0, 201),
        SweepAxis::BetaMag => (0.1, 4.0, 101),
        SweepAxis::BetaComplexGrid => (-3.0, 3.0, 41),
        SweepAxis::OmegaField => (0.1, 5.0, 101),
        SweepAxis::PhotonIndex => (0.0, 15.0, 16),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: Vec<f64>,
    pub kind: Deformation,
    /// One entry per witness column; `NaN` where evaluation failed.
    pub values: Vec<f64>,
    /// `"ok"`, or the code of the first failure at this node.
    pub status: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub spec: SweepSpec,
    pub columns: Vec<&'static str>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status != "ok").count()
    }

    /// Values of column `name` across all rows.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let axis_cols = self.spec.axis.columns().len();
        let idx = self.columns.iter().position(|&c| c == name)?;
        if idx < axis_cols {
            return Some(self.rows.iter().map(|r| r.axis[idx]).collect());
        }
        let v = idx.checked_sub(axis_cols + 1)?;
        if v >= self.columns.len() - axis_cols - 2 {
            return None;
        }
        Some(self.rows.iter().map(|r| r.values[v]).collect())
    }

    pub fn rows_for<'a>(&'a self, kind: &'a Deformation) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows.iter().filter(move |r| &r.kind == kind)
    }

    pub fn to_csv(&self) -> String {
        let spec = serde_json::to_string(&self.spec).expect("sweep spec serializes");
        let mut out = format!("# spec: {spec}\n{}\n", self.columns.join(","));
        for row in &self.rows {
            for &x in &row.axis {
                out.push_str(&fmt_num(x));
                out.push(',');
            }
            // polynomial kinds carry commas
            let kind = row.kind.to_string();
            if kind.contains(',') {
                let _ = write!(out, "\"{kind}\"");
            } else {
                out.push_str(&kind);
            }
            for &v in &row.values {
                out.push(',');
                out.push_str(&fmt_num(v));
            }
            let _ = writeln!(out, ",{}", row.status);
        }
        out
    }

    /// JSON document `{spec, columns, rows}`; failed values become `null`.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sweep table serializes");
        s.push('\n');
        s
    }
}

/// Evaluates the requested witnesses on an already evolved state, in column order.
fn witness_values(
    state: &FieldState,
    witnesses: &[Witness],
    n: usize,
    probe: C64,
    values: &mut Vec<f64>,
) -> Option<Error> {
    let mut first = None;
    let mut keep = |r: Result<f64>, values: &mut Vec<f64>| match r {
        Ok(v) => values.push(v),
        Err(e) => {
            values.push(f64::NAN);
            first.get_or_insert(e);
        }
    };
    for &w in witnesses {
        match w {
            Witness::Pnd => keep(photon_number_dist(state, n), values),
            Witness::Mandel => keep(mandel_q(state), values),
            Witness::D1 => keep(antibunching_d1(state), values),
            Witness::Squeeze => match squeezing(state) {
                Ok((sx, sp)) => values.extend([sx, sp]),
                Err(e) => {
                    keep(Err(e.clone()), values);
                    keep(Err(e), values);
                }
            },
            Witness::Wigner => keep(wigner(state, probe), values),
            Witness::Husimi => keep(husimi_q(state, probe), values),
        }
    }
    first
}

fn evaluate_node(
    spec: &SweepSpec,
    witnesses: &[Witness],
    width: usize,
    kind: &Deformation,
    coords: Vec<f64>,
) -> SweepRow {
    let (params, t, n) = spec.node_setup(kind, &coords);
    let mut values = Vec::with_capacity(width);
    let failure = match evolve(&params, t, spec.eps) {
        Ok(state) => witness_values(&state, witnesses, n, spec.probe, &mut values),
        Err(e) => {
            values.resize(width, f64::NAN);
            Some(e)
        }
    };
    SweepRow { axis: coords, kind: kind.clone(), values, status: failure.map_or("ok", |e| e.code()) }
}

/// Tabulates the witnesses over every (kind, axis point) pair. Rows are
/// ordered by kind (as listed in the spec) and then by axis point, whatever
/// the number of worker threads. Failing nodes are kept with `NaN` values and
/// the failure code in the status column.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let witnesses = spec.witnesses_sorted();
    let columns = spec.columns();
    let width = columns.len() - spec.axis.columns().len() - 2;
    let nodes = spec.nodes();
    let points = spec.points();
    let rows = (0..spec.kinds.len() * points)
        .into_par_iter()
        .map(|idx| {
            let kind = &spec.kinds[idx / points];
            evaluate_node(spec, &witnesses, width, kind, spec.coordinates(&nodes, idx % points))
        })
        .collect();
    Ok(SweepTable { spec: spec.clone(), columns, rows })
}

/// Canned sweeps for the six figure families, with all three figure
/// deformations and the common parameters g = 0.5, β = 2, Ω = 1,
/// ω₁ = ω₂ = 100, t = 1, n = 5.
pub fn default_figure_specs() -> Vec<SweepSpec> {
    vec![
        SweepSpec::new("fig1", SweepAxis::BetaMag, &[Witness::Pnd]),
        SweepSpec::new("fig2", SweepAxis::Time, &[Witness::Mandel]),
        SweepSpec::new("fig3", SweepAxis::BetaComplexGrid, &[Witness::Wigner]),
        SweepSpec::new("fig4", SweepAxis::Time, &[Witness::D1]),
        SweepSpec::new("fig5", SweepAxis::Time, &[Witness::Squeeze]),
        SweepSpec::new("fig6", SweepAxis::BetaComplexGrid, &[Witness::Husimi]),
    ]
}
