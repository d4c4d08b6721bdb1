mod args;
mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::Path;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};
use djcm::dynamics::{evolve_with, FieldState, Truncation};
use djcm::format::fmt_num;
use djcm::moments::{antibunching_d1, mandel_q, photon_number_dist, squeezing};
use djcm::oracle::{propagate_state_with, validate_closed_form, OdeSettings};
use djcm::phasespace::{eval_grid, PhaseSpaceField, PhaseSpaceKind};
use djcm::sweep::{default_figure_specs, run_sweep, SweepSpec};
use serde_json::json;

use args::{Cli, Command, Engine, EngineArgs, Format, GridArgs, ModelArgs, OutputArgs};

/// A failure with its exit status: 2 for unusable input, 1 for everything
/// that goes wrong while computing or writing.
#[derive(Debug)]
struct Failure {
    status: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { status: 2, message: message.into() }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self { status: 1, message: message.into() }
    }
}

impl From<djcm::Error> for Failure {
    fn from(e: djcm::Error) -> Self {
        use djcm::Error::*;
        match e {
            InvalidDeformation(_)
            | InvalidParams(_)
            | InvalidGrid(_)
            | GridTooLarge { .. }
            | InvalidSettings(_)
            | InvalidSweep(_) => Failure::usage(e.to_string()),
            _ => Failure::runtime(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("DJCM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("DJCM_THREADS must be a non-negative integer, got '{raw}'")))?;
    if n > 0 {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn write_output(out: &OutputArgs, text: &str) -> CliResult<()> {
    write_to(&out.output, text)
}

fn write_to(path: &Path, text: &str) -> CliResult<()> {
    if path == Path::new("-") {
        let mut stdout = io::stdout().lock();
        return match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
                Err(Failure::runtime(format!("cannot write to standard output: {e}")))
            }
            _ => Ok(()),
        };
    }
    fs::write(path, text).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
}

fn warn_coupling(model: &ModelArgs) {
    if let Some(w) = model.params().weak_coupling_warning() {
        eprintln!("{w}");
    }
}

fn compute_state(model: &ModelArgs, engine: &EngineArgs, truncation: &Truncation) -> CliResult<FieldState> {
    let params = model.params();
    params.validate()?;
    warn_coupling(model);
    let state = match engine.engine {
        Engine::ClosedForm => evolve_with(&params, engine.t, truncation)?,
        Engine::Oracle => {
            if engine.t < 0.0 {
                return Err(Failure::usage("the oracle engine integrates forward only; t must be non-negative"));
            }
            propagate_state_with(&params, &engine.ode(engine.t), truncation)?
        }
    };
    Ok(state)
}

fn state_for(model: &ModelArgs, engine: &EngineArgs) -> CliResult<FieldState> {
    compute_state(model, engine, &model.truncation())
}

fn to_json(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain JSON value");
    s.push('\n');
    s
}

fn cmd_evolve(a: &args::EvolveArgs) -> CliResult<()> {
    let state = state_for(&a.model, &a.engine)?;
    let text = match a.out.format {
        Format::Json => {
            let mut s = state.to_json();
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from("n,re_c2,im_c2,re_c1,im_c1\n");
            for (n, (e, g)) in state.excited().iter().zip(state.ground()).enumerate() {
                let _ = writeln!(s, "{n},{},{},{},{}", fmt_num(e.re), fmt_num(e.im), fmt_num(g.re), fmt_num(g.im));
            }
            s
        }
    };
    write_output(&a.out, &text)
}

fn cmd_pnd(a: &args::PndArgs) -> CliResult<()> {
    let mut truncation = a.model.truncation();
    truncation.min_levels = a.n_max.saturating_add(1);
    let state = compute_state(&a.model, &a.engine, &truncation)?;
    let p = (0..=a.n_max).map(|n| photon_number_dist(&state, n)).collect::<Result<Vec<_>, _>>()?;
    let text = match a.out.format {
        Format::Json => to_json(&json!({ "t": state.t(), "p_n": p })),
        Format::Csv => {
            let mut s = String::from("n,p_n\n");
            for (n, v) in p.iter().enumerate() {
                let _ = writeln!(s, "{n},{}", fmt_num(*v));
            }
            s
        }
    };
    write_output(&a.out, &text)
}

enum Scalar {
    Mandel,
    Antibunch,
    Squeeze,
}

fn cmd_scalar(a: &args::ScalarArgs, which: Scalar) -> CliResult<()> {
    let state = state_for(&a.model, &a.engine)?;
    let (names, values): (&[&str], Vec<f64>) = match which {
        Scalar::Mandel => (&["q_mandel"], vec![mandel_q(&state)?]),
        Scalar::Antibunch => (&["d1"], vec![antibunching_d1(&state)?]),
        Scalar::Squeeze => {
            let (sx, sp) = squeezing(&state)?;
            (&["s_x", "s_p"], vec![sx, sp])
        }
    };
    let text = match a.out.format {
        Format::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert("t".into(), json!(state.t()));
            for (name, v) in names.iter().zip(&values) {
                doc.insert((*name).into(), json!(v));
            }
            to_json(&serde_json::Value::Object(doc))
        }
        Format::Csv => {
            let row: Vec<String> = std::iter::once(state.t()).chain(values).map(fmt_num).collect();
            format!("t,{}\n{}\n", names.join(","), row.join(","))
        }
    };
    write_output(&a.out, &text)
}

fn field_json(field: &PhaseSpaceField, t: f64) -> String {
    let s = &field.spec;
    let rows: Vec<&[f64]> = field.values.chunks(s.n_re).collect();
    to_json(&json!({
        "kind": field.kind.name(),
        "t": t,
        "window": [s.re_min, s.re_max, s.im_min, s.im_max],
        "resolution": [s.n_re, s.n_im],
        "integral": field.integral,
        "values": rows,
    }))
}

fn cmd_grid(a: &GridArgs, kind: PhaseSpaceKind) -> CliResult<()> {
    let spec = a.grid.spec();
    spec.validate()?;
    let state = state_for(&a.model, &a.engine)?;
    let field = eval_grid(&state, &spec, kind)?;
    let text = match (a.out.format, a.grid.long) {
        (Format::Json, _) => field_json(&field, state.t()),
        (Format::Csv, true) => field.to_csv_long(),
        (Format::Csv, false) => field.to_csv_matrix(),
    };
    write_output(&a.out, &text)
}

fn cmd_sweep(a: &args::SweepArgs) -> CliResult<()> {
    let mut spec = SweepSpec::new("sweep", a.axis, &a.witness);
    spec.start = a.start.unwrap_or(spec.start);
    spec.stop = a.stop.unwrap_or(spec.stop);
    spec.count = a.count.unwrap_or(spec.count);
    spec.fixed = a.model.params();
    spec.t = a.t;
    spec.kinds = a.kinds.clone();
    spec.pnd_n = a.pnd_n;
    spec.probe = a.probe;
    spec.eps = a.model.eps;
    warn_coupling(&a.model);
    let table = run_sweep(&spec)?;
    if table.failures() > 0 {
        eprintln!("note: {} of {} rows failed; see the status column", table.failures(), table.rows.len());
    }
    let text = match a.out.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    write_output(&a.out, &text)
}

fn cmd_figures(a: &args::FiguresArgs) -> CliResult<()> {
    fs::create_dir_all(&a.out_dir)
        .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", a.out_dir.display())))?;
    for spec in default_figure_specs() {
        let table = run_sweep(&spec)?;
        let path = a.out_dir.join(format!("{}.csv", spec.name));
        write_to(&path, &table.to_csv())?;
        println!("wrote {} ({} rows, {} flagged)", path.display(), table.rows.len(), table.failures());
    }
    Ok(())
}

fn cmd_validate(a: &args::ValidateArgs) -> CliResult<()> {
    let params = a.model.params();
    params.validate()?;
    warn_coupling(&a.model);
    let settings = OdeSettings::new(a.dt, a.t_end).with_substeps(a.max_substeps);
    let report = validate_closed_form(&params, &settings, &a.model.truncation())?;
    println!("deformation: {}", params.deformation);
    println!("manifolds: {}", report.levels);
    println!("max deviation: {}", fmt_num(report.max_deviation));
    println!("worst manifold: {} at t = {}", report.worst_manifold, fmt_num(report.worst_t));
    println!("max norm drift: {}", fmt_num(report.max_norm_drift));
    if report.max_deviation > a.tol {
        return Err(Failure::runtime(format!(
            "deviation {} exceeds tolerance {}",
            fmt_num(report.max_deviation),
            fmt_num(a.tol)
        )));
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Evolve(a) => cmd_evolve(a),
        Command::Pnd(a) => cmd_pnd(a),
        Command::Mandel(a) => cmd_scalar(a, Scalar::Mandel),
        Command::Antibunch(a) => cmd_scalar(a, Scalar::Antibunch),
        Command::Squeeze(a) => cmd_scalar(a, Scalar::Squeeze),
        Command::Wigner(a) => {
            let kind = if a.diagonal_only { PhaseSpaceKind::WignerDiagonal } else { PhaseSpaceKind::Wigner };
            cmd_grid(&a.common, kind)
        }
        Command::Husimi(a) => cmd_grid(a, PhaseSpaceKind::HusimiQ),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Figures(a) => cmd_figures(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn run(argv: Vec<OsString>) -> CliResult<()> {
    let mut cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        cmd = cmd.mut_subcommand(name, |s| s.args_override_self(true));
    }
    let argv = config::expand(argv, &cmd).map_err(|e| Failure::usage(e.0))?;
    let matches = match cmd.try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return Err(Failure { status: if e.use_stderr() { 2 } else { 0 }, message: String::new() });
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| Failure::usage(e.to_string()))?;
    configure_threads()?;
    dispatch(&cli)
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let outcome = std::panic::catch_unwind(|| run(argv));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
                if f.status == 2 {
                    eprintln!("run 'djcm --help' for usage");
                }
            }
            ExitCode::from(f.status)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(1)
        }
    }
}
