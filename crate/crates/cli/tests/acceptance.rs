//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero if any fail.

use std::f64::consts::{FRAC_1_PI, FRAC_2_PI};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use djcm::dynamics::{evolve, manifold_amplitudes, FieldState, Truncation};
use djcm::moments::{antibunching_d1, level_populations, mandel_q, moment};
use djcm::oracle::{propagate_manifold, validate_closed_form, OdeSettings};
use djcm::phasespace::{displaced_number_overlap, eval_grid, wigner, GridSpec, PhaseSpaceKind};
use djcm::sweep::{default_figure_specs, run_sweep, SweepAxis, SweepSpec, SweepTable, Witness};
use djcm::{Deformation, ModelParams};
use num_complex::Complex64 as C64;
use rand::{rngs::StdRng, Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn all_kinds() -> [Deformation; 4] {
    [Deformation::Identity, Deformation::Sin, Deformation::InvSin, Deformation::Ln]
}

/// Poisson(n; λ) by running product, independent of the library's log-space form.
fn poisson(lambda: f64, n: usize) -> f64 {
    (1..=n).fold((-lambda).exp(), |p, k| p * lambda / k as f64)
}

fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect()
}

fn conservation() -> Outcome {
    let mut worst = 0.0f64;
    for kind in all_kinds() {
        let p = ModelParams::figure_defaults(kind);
        for n in 0..44u64 {
            let target = poisson(4.0, n as usize);
            for t in linspace(0.0, 10.0, 201) {
                let (e, g) = manifold_amplitudes(&p, n, t).expect("figure parameters are valid");
                worst = worst.max((e.norm_sqr() + g.norm_sqr() - target).abs());
            }
        }
    }
    outcome(worst <= 1e-10, format!("max |weight - Poisson| = {worst:.3e} (tol 1e-10)"))
}

fn manifold_deviation(p: &ModelParams, n: usize, dt: f64, t_end: f64) -> f64 {
    let traj = propagate_manifold(p, n, &OdeSettings::new(dt, t_end)).expect("non-stiff manifold");
    traj.points
        .iter()
        .map(|pt| {
            let (e, g) = manifold_amplitudes(p, n as u64, pt.t).unwrap();
            (pt.excited - e).norm().max((pt.ground - g).norm())
        })
        .fold(0.0, f64::max)
}

fn oracle_equivalence() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for kind in all_kinds() {
        let p = ModelParams::figure_defaults(kind.clone());
        let settings = OdeSettings::new(1e-4, 5.0).with_substeps(4096);
        match validate_closed_form(&p, &settings, &Truncation::default()) {
            Ok(r) => {
                pass &= r.max_deviation <= 1e-8;
                let ratio = manifold_deviation(&p, 5, 0.01, 5.0) / manifold_deviation(&p, 5, 0.005, 5.0);
                pass &= (8.0..=32.0).contains(&ratio);
                parts.push(format!("{kind}: dev {:.2e}, order ratio {ratio:.2}", r.max_deviation));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{kind}: {e}"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn jcm_reduction() -> Outcome {
    let p = ModelParams {
        g: 0.5,
        omega: 0.0,
        w1: 100.0,
        w2: 100.0,
        beta: C64::new(2.0, 0.0),
        deformation: Deformation::Identity,
    };
    let mut worst = 0.0f64;
    for n in 0..=20usize {
        let pn = poisson(4.0, n);
        for t in linspace(0.0, 10.0, 100) {
            let (_, g) = manifold_amplitudes(&p, n as u64, t).unwrap();
            let expect = pn * (p.g * ((n + 1) as f64).sqrt() * t).sin().powi(2);
            worst = worst.max((g.norm_sqr() - expect).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max deviation {worst:.3e} (tol 1e-10)"))
}

fn moment_identities() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (mut d1_err, mut herm_err, mut n2_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let kind = all_kinds()[rng.gen_range(0..4)].clone();
        let t = rng.gen_range(0.0..10.0);
        let beta = C64::from_polar(rng.gen_range(0.0..=3.0), rng.gen_range(0.0..std::f64::consts::TAU));
        let p = ModelParams { beta, ..ModelParams::figure_defaults(kind) };
        let s = evolve(&p, t, 1e-12).unwrap();
        let mean = moment(&s, 1, 1).unwrap().re;
        d1_err = d1_err.max((antibunching_d1(&s).unwrap() - mean * mandel_q(&s).unwrap()).abs());
        for a in 0..=4 {
            for b in 0..=4 {
                herm_err = herm_err.max((moment(&s, a, b).unwrap() - moment(&s, b, a).unwrap().conj()).norm());
            }
        }
        let via_moments = moment(&s, 2, 2).unwrap().re + mean;
        let via_levels: f64 = level_populations(&s).iter().enumerate().map(|(m, w)| (m * m) as f64 * w).sum();
        n2_err = n2_err.max((via_moments - via_levels).abs());
    }
    outcome(
        d1_err <= 1e-9 && herm_err <= 1e-12 && n2_err <= 1e-9,
        format!("d1 {d1_err:.2e} (1e-9), hermiticity {herm_err:.2e} (1e-12), <n^2> {n2_err:.2e} (1e-9)"),
    )
}

fn initial_moments() -> Outcome {
    let mut worst = 0.0f64;
    for kind in all_kinds() {
        let s = evolve(&ModelParams::figure_defaults(kind), 0.0, 1e-12).unwrap();
        let checks = [
            (moment(&s, 1, 1).unwrap().re, 5.0),
            (moment(&s, 2, 2).unwrap().re, 24.0),
            (mandel_q(&s).unwrap(), -0.2),
            (antibunching_d1(&s).unwrap(), -1.0),
        ];
        for (got, want) in checks {
            worst = worst.max((got - want).abs());
        }
    }
    outcome(worst <= 1e-9, format!("max deviation {worst:.3e} (tol 1e-9)"))
}

fn phase_space_normalization(husimi_min: &mut f64) -> Outcome {
    let grid = GridSpec::square(6.0, 241);
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in Deformation::figure_kinds() {
        let s = evolve(&ModelParams::figure_defaults(kind.clone()), 1.0, 1e-12).unwrap();
        let w = eval_grid(&s, &grid, PhaseSpaceKind::Wigner).unwrap();
        let q = eval_grid(&s, &grid, PhaseSpaceKind::HusimiQ).unwrap();
        let w_abs = w.max().max(-w.min());
        *husimi_min = husimi_min.min(q.min());
        pass &= (w.integral - 1.0).abs() <= 1e-3
            && (q.integral - 1.0).abs() <= 1e-3
            && q.min() >= -1e-12
            && q.max() <= FRAC_1_PI + 1e-9
            && w_abs <= FRAC_2_PI + 1e-9;
        parts.push(format!(
            "{kind}: intW {:.6}, intQ {:.6}, Q in [{:.2e}, {:.4}], max|W| {:.4}",
            w.integral,
            q.integral,
            q.min(),
            q.max(),
            w_abs
        ));
    }
    outcome(pass, parts.join("; "))
}

fn fock_checks() -> Outcome {
    let mut exact = true;
    for k in 0..=20 {
        for n in 0..=20 {
            let v = displaced_number_overlap(C64::new(0.0, 0.0), k, n).unwrap();
            exact &= v == C64::new(if k == n { 1.0 } else { 0.0 }, 0.0);
        }
    }
    let mut worst = 0.0f64;
    for m in 0..=5usize {
        let levels = 8;
        let zero = C64::new(0.0, 0.0);
        let mut ground = vec![zero; levels];
        ground[m] = C64::new(1.0, 0.0);
        let params = ModelParams::figure_defaults(Deformation::Identity);
        let s = FieldState::from_parts(params, 0.0, vec![zero; levels], ground, 0.0).unwrap();
        let want = FRAC_2_PI * if m % 2 == 0 { 1.0 } else { -1.0 };
        worst = worst.max((wigner(&s, zero).unwrap() - want).abs());
    }
    outcome(exact && worst <= 1e-9, format!("overlap exact: {exact}; max |W(0) - 2(-1)^m/pi| = {worst:.2e}"))
}

fn sweep_on(axis: SweepAxis, witness: Witness) -> SweepTable {
    run_sweep(&SweepSpec::new("check", axis, &[witness])).unwrap()
}

fn qualitative_claims(husimi_min: f64) -> Vec<(&'static str, Outcome)> {
    let specs = default_figure_specs();
    let mut out = Vec::new();

    // p(5) against |β|: one interior maximum near 0.25
    let fig1 = run_sweep(&specs[0]).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in Deformation::figure_kinds() {
        let v: Vec<f64> = fig1.rows_for(&kind).map(|r| r.values[0]).collect();
        let peaks = (1..v.len() - 1).filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1]).count();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        pass &= peaks == 1 && (max - 0.25).abs() <= 0.05;
        parts.push(format!("{kind}: {peaks} peak(s), max {max:.4}"));
    }
    out.push(("8a", outcome(pass, format!("p(5) vs beta, want max 0.25 +- 0.05: {}", parts.join("; ")))));

    // squeezing parameters positive along t, β and Ω
    let mut min_sx = f64::INFINITY;
    let mut min_sp = f64::INFINITY;
    for axis in [SweepAxis::Time, SweepAxis::BetaMag, SweepAxis::OmegaField] {
        let table = sweep_on(axis, Witness::Squeeze);
        min_sx = min_sx.min(table.column("s_x").unwrap().into_iter().fold(f64::INFINITY, f64::min));
        min_sp = min_sp.min(table.column("s_p").unwrap().into_iter().fold(f64::INFINITY, f64::min));
    }
    out.push((
        "8b",
        outcome(min_sx > 0.0 && min_sp > 0.0, format!("s_x, s_p > 0: min s_x {min_sx:.4}, min s_p {min_sp:.4}")),
    ));

    // Husimi function non-negative: grids above plus the β-plane, t and Ω sweeps
    let mut q_min = husimi_min;
    let fig6 = run_sweep(&specs[5]).unwrap();
    for table in [fig6, sweep_on(SweepAxis::Time, Witness::Husimi), sweep_on(SweepAxis::OmegaField, Witness::Husimi)] {
        q_min = q_min.min(table.column("husimi").unwrap().into_iter().fold(f64::INFINITY, f64::min));
    }
    out.push(("8c", outcome(q_min >= -1e-12, format!("Husimi Q >= 0: min {q_min:.3e} (floor -1e-12)"))));

    // Mandel parameter negative somewhere on every t, β, Ω sweep
    let mut pass = true;
    let mut parts = Vec::new();
    for axis in [SweepAxis::Time, SweepAxis::BetaMag, SweepAxis::OmegaField] {
        let table = sweep_on(axis, Witness::Mandel);
        for kind in Deformation::figure_kinds() {
            let min = table.rows_for(&kind).map(|r| r.values[0]).fold(f64::INFINITY, f64::min);
            pass &= min < 0.0;
            parts.push(format!("{axis}/{kind} {min:.3}"));
        }
    }
    out.push(("8d", outcome(pass, format!("min Q_M per sweep: {}", parts.join(", ")))));
    out
}

fn cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_djcm");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let status = Command::new(bin).args(["figures", "--out-dir"]).arg(d.path()).output().unwrap();
        if !status.status.success() {
            return outcome(false, format!("figures exited with {}", status.status));
        }
    }
    let read = |dir: &Path, i: usize| fs::read(dir.join(format!("fig{i}.csv"))).unwrap_or_default();
    let identical = (1..=6).all(|i| {
        let a = read(dirs[0].path(), i);
        !a.is_empty() && a == read(dirs[1].path(), i)
    });
    let validate = Command::new(bin).arg("validate").output().unwrap();
    let printed = String::from_utf8_lossy(&validate.stdout);
    let deviation = printed.lines().find(|l| l.starts_with("max deviation")).unwrap_or("max deviation: ?").to_string();
    outcome(
        identical && validate.status.success(),
        format!("fig1-6 byte-identical: {identical}; validate exit {:?}, {deviation}", validate.status.code()),
    )
}

type Row = (String, Outcome, f64);

/// Runs one criterion; `budget` is its runtime limit in seconds, if it has one.
fn timed(results: &mut Vec<Row>, id: &str, name: &str, budget: Option<f64>, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let mut o = f();
    let secs = start.elapsed().as_secs_f64();
    if let Some(limit) = budget {
        o.pass &= secs < limit;
        o.detail.push_str(&format!("; runtime budget {limit} s"));
    }
    results.push((format!("{id} {name}"), o, secs));
}

fn main() {
    let mut results: Vec<Row> = Vec::new();
    let mut husimi_min = f64::INFINITY;
    timed(&mut results, "1", "per-manifold conservation", Some(1.0), conservation);
    timed(&mut results, "2", "oracle equivalence", Some(30.0), oracle_equivalence);
    timed(&mut results, "3", "JCM reduction", None, jcm_reduction);
    timed(&mut results, "4", "moment identities", None, moment_identities);
    timed(&mut results, "5", "t = 0 moments", None, initial_moments);
    timed(&mut results, "6", "phase-space normalization", Some(60.0), || phase_space_normalization(&mut husimi_min));
    timed(&mut results, "7", "Fock spot checks", None, fock_checks);
    let start = Instant::now();
    let quotes = qualitative_claims(husimi_min);
    let share = start.elapsed().as_secs_f64() / quotes.len() as f64;
    for (id, o) in quotes {
        let name = match id {
            "8a" => "p(5) peak",
            "8b" => "squeezing positive",
            "8c" => "Husimi non-negative",
            _ => "Mandel negative",
        };
        results.push((format!("{id} {name}"), o, share));
    }
    timed(&mut results, "9", "CLI determinism", None, cli_determinism);

    let mut failed = 0;
    for (name, o, secs) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{tag} [{name}] {} ({secs:.2} s)", o.detail);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
