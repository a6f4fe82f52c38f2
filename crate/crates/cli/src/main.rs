use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use opts_core::lin3f::compare;
use opts_core::net_model::parse_unvalidated;
use opts_core::opts::{evaluate_taps, tap_combinations, taps_from_index, OptsError};
use opts_core::zbus_pf::{feasibility, write_solution_csv};
use opts_core::{
    constants_balanced, constants_from_solution, import_objective, linear_powerflow, optimality_gap, parse_feeder,
    run_opts, solve_zbus, validate, ConstantsMode, FeederModel, OptsConfig, PowerFlowSolution, TapVector,
};
use rayon::prelude::*;
use serde_json::json;

const EXIT_INPUT: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

/// Objectives closer than this are treated as ties by `bruteforce`.
const TIE_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "opts", version, about = "Regulator tap selection and three-phase power flow for radial feeders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Z-bus power flow at fixed taps; writes the bus voltages.
    Powerflow(Shared),
    /// Linearize, solve the tap LP, snap and verify.
    Opts(Shared),
    /// Linear model against the exact power flow at zero taps.
    Lindiff(Shared),
    /// Exhaustive search over the tap grid.
    Bruteforce {
        #[command(flatten)]
        shared: Shared,
        /// Refuse grids with more combinations than this.
        #[arg(long, default_value_t = 100_000)]
        cap: usize,
    },
    /// Check a feeder file and list every violation.
    Validate(Shared),
}

#[derive(Args)]
struct Shared {
    #[arg(long)]
    feeder: PathBuf,
    /// Lower voltage limit used inside the LP.
    #[arg(long)]
    vmin: Option<f64>,
    /// Upper voltage limit used inside the LP.
    #[arg(long)]
    vmax: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum)]
    constants: Option<Constants>,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Known lower bound on the import, used for the optimality gap.
    #[arg(long)]
    lower_bound: Option<f64>,
    /// A single value for every regulator phase, or one comma-separated value per phase.
    #[arg(long, allow_hyphen_values = true)]
    taps: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Constants {
    Balanced,
    Base,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }
}

impl From<OptsError> for Failure {
    fn from(e: OptsError) -> Failure {
        match e {
            OptsError::Config(_) | OptsError::Topology(_) => Failure::input(e.to_string()),
            _ => Failure::numeric(e.to_string()),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Powerflow(s) => cmd_powerflow(s),
        Command::Opts(s) => cmd_opts(s),
        Command::Lindiff(s) => cmd_lindiff(s),
        Command::Bruteforce { shared, cap } => cmd_bruteforce(shared, *cap),
        Command::Validate(s) => cmd_validate(s),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<FeederModel, Failure> {
    parse_feeder(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Flags override the feeder's embedded defaults, which override the built-ins.
fn config(model: &FeederModel, s: &Shared) -> Result<OptsConfig, Failure> {
    let mut cfg = OptsConfig::for_feeder(model);
    if let Some(v) = s.vmin {
        cfg.v_min = v;
    }
    if let Some(v) = s.vmax {
        cfg.v_max = v;
    }
    if let Some(t) = s.tol {
        cfg.zbus.tol = t;
    }
    if let Some(n) = s.max_iter {
        cfg.zbus.max_iter = n;
    }
    match s.constants {
        Some(Constants::Balanced) => cfg.constants_mode = ConstantsMode::Balanced,
        Some(Constants::Base) => cfg.constants_mode = ConstantsMode::FromZeroTapSolution,
        None => {}
    }
    cfg.check()?;
    Ok(cfg)
}

fn parse_taps(model: &FeederModel, text: Option<&str>) -> Result<TapVector, Failure> {
    let zero = TapVector::zeros(model);
    let Some(text) = text else {
        return Ok(zero);
    };
    let values: Vec<i32> = text
        .split(',')
        .map(|t| t.trim().parse::<i32>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::input(format!("--taps {text:?}: {e}")))?;
    let n = zero.flat().len();
    let flat = match values.len() {
        1 => vec![values[0]; n],
        k if k == n => values,
        k => return Err(Failure::input(format!("--taps has {k} values, the feeder has {n} regulator phases"))),
    };
    TapVector::from_flat(model, &flat).ok_or_else(|| Failure::input("--taps does not fit the feeder"))
}

fn emit(out: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    let res = match out {
        Some(p) => fs::File::create(p).and_then(|f| {
            let mut w = io::BufWriter::new(f);
            body(&mut w)?;
            w.flush()
        }),
        None => {
            let mut w = io::stdout().lock();
            body(&mut w)
        }
    };
    res.map_err(|e| Failure::input(format!("writing output: {e}")))
}

fn emit_json(out: Option<&Path>, value: &serde_json::Value) -> Result<(), Failure> {
    emit(out, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn min_magnitude(model: &FeederModel, sol: &PowerFlowSolution) -> (f64, String, char) {
    let mut best = (f64::INFINITY, String::new(), ' ');
    for (b, v) in sol.voltages.iter().enumerate() {
        if b == sol.slack {
            continue;
        }
        for (p, x) in v.iter() {
            if x.norm() < best.0 {
                best = (x.norm(), model.buses[b].id.clone(), p.as_char());
            }
        }
    }
    best
}

fn cmd_powerflow(s: &Shared) -> Outcome {
    let model = load(&s.feeder)?;
    let cfg = config(&model, s)?;
    let taps = parse_taps(&model, s.taps.as_deref())?;
    let ratios = taps.to_ratios(&model).map_err(|e| Failure::input(e.to_string()))?;
    let sol = solve_zbus(&model, &ratios, &cfg.zbus, None).map_err(|e| Failure::numeric(e.to_string()))?;
    if !sol.converged {
        return Err(Failure::numeric(format!(
            "power flow did not converge ({} iterations, residual {:e})",
            sol.iterations, sol.residual
        )));
    }
    let objective = import_objective(&sol, &model).map_err(|e| Failure::numeric(e.to_string()))?;
    let (vmin, bus, phase) = min_magnitude(&model, &sol);
    match s.format {
        Format::Csv => emit(s.out.as_deref(), |w| write_solution_csv(&model, &sol, w))?,
        Format::Json => {
            let buses: Vec<_> = model
                .buses
                .iter()
                .zip(&sol.voltages)
                .map(|(b, v)| {
                    let values: Vec<[f64; 2]> = v.values().iter().map(|x| [x.re, x.im]).collect();
                    json!({"bus": b.id, "phases": v.mask().to_string(), "voltage": values})
                })
                .collect();
            let value = json!({
                "objective": objective,
                "iterations": sol.iterations,
                "min_magnitude": {"value": vmin, "bus": bus, "phase": phase.to_string()},
                "buses": buses,
            });
            emit_json(s.out.as_deref(), &value)?;
        }
    }
    eprintln!("converged in {} iterations, import {objective:.6}", sol.iterations);
    eprintln!("min |v| {vmin:.4} at bus {bus} phase {phase}");
    if !feasibility(&sol, cfg.verify_vmin, cfg.verify_vmax) {
        eprintln!("voltages leave the band [{}, {}]", cfg.verify_vmin, cfg.verify_vmax);
    }
    Ok(0)
}

fn cmd_opts(s: &Shared) -> Outcome {
    let model = load(&s.feeder)?;
    let cfg = config(&model, s)?;
    let mut report = run_opts(&model, &cfg)?;
    if let Some(lb) = s.lower_bound {
        report.gap_percent = Some(optimality_gap(report.objective_verified, lb)?);
    }
    match s.format {
        Format::Json => emit_json(s.out.as_deref(), &report.to_json(&model))?,
        Format::Csv => emit(s.out.as_deref(), |w| {
            report.write_summary_csv(&mut *w)?;
            writeln!(w)?;
            report.write_taps_csv(&model, w)
        })?,
    }
    if report.feasible {
        Ok(0)
    } else {
        eprintln!(
            "verified voltages ({:.4}, {:.4}) leave the band [{}, {}]",
            report.v_envelope.0, report.v_envelope.1, cfg.verify_vmin, cfg.verify_vmax
        );
        Ok(EXIT_INFEASIBLE)
    }
}

fn cmd_lindiff(s: &Shared) -> Outcome {
    let model = load(&s.feeder)?;
    let cfg = config(&model, s)?;
    let taps = parse_taps(&model, s.taps.as_deref())?;
    let ratios = taps.to_ratios(&model).map_err(|e| Failure::input(e.to_string()))?;
    let exact = solve_zbus(&model, &ratios, &cfg.zbus, None).map_err(|e| Failure::numeric(e.to_string()))?;
    if !exact.converged {
        return Err(Failure::numeric("power flow did not converge"));
    }
    // balanced constants unless asked otherwise
    let k = match s.constants {
        Some(Constants::Base) => constants_from_solution(&model, &exact).map_err(|e| Failure::numeric(e.to_string()))?,
        _ => constants_balanced(&model),
    };
    let lin = linear_powerflow(&model, &k, &ratios).map_err(|e| Failure::numeric(e.to_string()))?;
    let d = compare(&lin, &exact);
    let cell = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
    match s.format {
        Format::Csv => emit(s.out.as_deref(), |w| {
            writeln!(w, "max_diff_a,max_diff_b,max_diff_c,min_linear,min_exact")?;
            writeln!(
                w,
                "{},{},{},{:.6},{:.6}",
                cell(d.max_diff[0]),
                cell(d.max_diff[1]),
                cell(d.max_diff[2]),
                d.min_linear,
                d.min_exact
            )
        })?,
        Format::Json => emit_json(
            s.out.as_deref(),
            &json!({"max_diff": d.max_diff, "min_linear": d.min_linear, "min_exact": d.min_exact}),
        )?,
    }
    Ok(0)
}

fn cmd_bruteforce(s: &Shared, cap: usize) -> Outcome {
    let model = load(&s.feeder)?;
    let cfg = config(&model, s)?;
    let n = tap_combinations(&model);
    if n > cap {
        return Err(Failure::input(format!("{n} tap combinations exceed the cap of {cap}")));
    }
    let results: Vec<Option<(f64, bool)>> = (0..n)
        .into_par_iter()
        .map(|k| evaluate_taps(&model, &taps_from_index(&model, k), &cfg))
        .collect::<Result<_, _>>()?;
    let feasible: Vec<(usize, f64)> = results
        .iter()
        .enumerate()
        .filter_map(|(k, r)| match r {
            Some((obj, true)) => Some((k, *obj)),
            _ => None,
        })
        .collect();
    let Some(lowest) = feasible.iter().map(|&(_, o)| o).min_by(f64::total_cmp) else {
        eprintln!("no feasible tap setting among {n} combinations");
        return Ok(EXIT_INFEASIBLE);
    };
    // among near-ties prefer taps closest to neutral, then the lexicographically smaller
    let key = |t: &TapVector| {
        let flat = t.flat();
        (flat.iter().map(|x| x.abs()).collect::<Vec<_>>(), flat)
    };
    let (best_k, best_obj) = feasible
        .iter()
        .filter(|&&(_, o)| o <= lowest + TIE_TOL * (1.0 + lowest.abs()))
        .min_by_key(|&&(k, _)| key(&taps_from_index(&model, k)))
        .copied()
        .unwrap();
    let taps = taps_from_index(&model, best_k);
    let evaluated = results.iter().filter(|r| r.is_some()).count();
    match s.format {
        Format::Csv => emit(s.out.as_deref(), |w| {
            writeln!(w, "objective,taps,combinations,converged,feasible")?;
            let t: Vec<String> = taps.flat().iter().map(|x| x.to_string()).collect();
            writeln!(w, "{best_obj:.9},{},{n},{evaluated},{}", t.join(" "), feasible.len())
        })?,
        Format::Json => emit_json(
            s.out.as_deref(),
            &json!({
                "objective": best_obj,
                "taps": taps.flat(),
                "combinations": n,
                "converged": evaluated,
                "feasible": feasible.len(),
            }),
        )?,
    }
    Ok(0)
}

fn cmd_validate(s: &Shared) -> Outcome {
    let text = read(&s.feeder)?;
    let model = parse_unvalidated(&text).map_err(|e| Failure::input(format!("{}: {e}", s.feeder.display())))?;
    let violations = validate(&model);
    if violations.is_empty() {
        println!("ok: {} buses, {} lines, {} regulators", model.buses.len(), model.lines.len(), model.svrs.len());
        return Ok(0);
    }
    for v in &violations {
        eprintln!("{v}");
    }
    Ok(EXIT_INPUT)
}
