//! Command-line surface: phase breakdowns, gravimetric offsets and error
//! budgets, parameter sweeps, reduced-light-speed validation runs, and
//! spacetime-diagram data export. All outputs are plain CSV or aligned
//! text, deterministic across runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use lightpulse_cli::scenario_file::ScenarioFile;
use lightpulse_cli::CliError;
use lightpulse_core::gravimetry::{error_budget, offset_report};
use lightpulse_core::oracle::extract_series;
use lightpulse_core::perturbation::total_phase;
use lightpulse_core::trajectory::{
    interaction_delay, propagate_idealized, solve_exact_interaction_time,
};
use lightpulse_core::{Arm, MechanismKind, PhaseBreakdown, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scale {
    Linear,
    Log,
}

#[derive(Parser)]
#[command(
    name = "lightpulse",
    about = "Phase engine for light-pulse atom interferometers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the phase breakdown of a scenario.
    Phase {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Zero-fringe offset and gravity-uncertainty budget.
    Gravimetry {
        #[arg(long)]
        scenario: PathBuf,
        /// Phase uncertainty of the measurement (rad).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        delta_phi: f64,
        /// Initial-velocity spread (m/s).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        delta_v0: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Sweep one scenario parameter and emit a CSV of phase breakdowns.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Dotted parameter path, e.g. atom.v0_m_s.
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        start: f64,
        #[arg(long, allow_negative_numbers = true)]
        stop: f64,
        #[arg(long)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Scale::Linear)]
        scale: Scale,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduced-light-speed validation run with series extraction.
    Oracle {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated artificial light speeds (m/s).
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e5, 3e5, 1e6, 3e6, 1e7])]
        ctilde: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the effective field on a (t, z) grid plus interaction events.
    Diagram {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        z_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        z_max: Option<f64>,
        #[arg(long, default_value_t = 41)]
        z_count: usize,
        #[arg(long, allow_negative_numbers = true)]
        t_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 41)]
        t_count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Scientific-notation float formatting: locale-independent, shortest
/// round-trip digits, bit-stable across runs.
fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| {
            CliError::computation(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<(ScenarioFile, Scenario), CliError> {
    let file = ScenarioFile::load(path)?;
    let built = file.build()?;
    for w in &built.warnings {
        eprintln!("warning: {w}");
    }
    Ok((file, built.scenario))
}

fn breakdown_csv(header_extra: Option<&str>, rows: &[(Option<f64>, PhaseBreakdown)]) -> String {
    let mut text = String::new();
    if let Some(extra) = header_extra {
        text.push_str(extra);
        text.push(',');
    }
    text.push_str(&PhaseBreakdown::COLUMNS.join(","));
    text.push('\n');
    for (param, b) in rows {
        if let Some(p) = param {
            let _ = write!(text, "{},", fmt(*p));
        }
        let cols: Vec<String> = b.values().iter().map(|v| fmt(*v)).collect();
        text.push_str(&cols.join(","));
        text.push('\n');
    }
    text
}

fn cmd_phase(
    scenario: PathBuf,
    out: Option<PathBuf>,
    format: Format,
) -> Result<(), CliError> {
    let (_, s) = load(&scenario)?;
    let b = total_phase(&s)?;
    let content = match format {
        Format::Csv => breakdown_csv(None, &[(None, b)]),
        Format::Table => {
            let mut text = String::new();
            for (name, value) in PhaseBreakdown::COLUMNS.iter().zip(b.values()) {
                let _ = writeln!(text, "{name:<14} {} rad", fmt(value));
            }
            text
        }
    };
    emit(&out, &content)
}

fn cmd_gravimetry(
    scenario: PathBuf,
    delta_phi: f64,
    delta_v0: f64,
    out: Option<PathBuf>,
    format: Format,
) -> Result<(), CliError> {
    let (_, s) = load(&scenario)?;
    let report = offset_report(&s)?;
    // The published uncertainty budgets cover the single-photon gravimeter.
    let budget = if s.mechanism.kind == MechanismKind::Spt {
        let (compensated, gamma_prior) = match &s.compensation {
            Some(c) => (true, c.gamma_prior),
            None => (false, 0.0),
        };
        Some(error_budget(&s, delta_phi, delta_v0, compensated, gamma_prior)?)
    } else {
        if delta_phi != 0.0 || delta_v0 != 0.0 {
            eprintln!(
                "warning: uncertainty budget is derived for the single-photon mechanism; \
                 delta_g left empty"
            );
        }
        None
    };
    let delta_g = budget.map(|b| fmt(b.delta_g)).unwrap_or_default();
    let content = match format {
        Format::Csv => format!(
            "mechanism,gamma_analytic,gamma_numeric,delta_phi_rad,delta_v0_m_s,delta_g_m_s2\n\
             {},{},{},{},{},{}\n",
            report.mechanism.name(),
            fmt(report.gamma_analytic),
            fmt(report.gamma_numeric),
            fmt(delta_phi),
            fmt(delta_v0),
            delta_g
        ),
        Format::Table => {
            let mut text = String::new();
            let _ = writeln!(text, "mechanism      {}", report.mechanism.name());
            let _ = writeln!(text, "gamma_analytic {}", fmt(report.gamma_analytic));
            let _ = writeln!(text, "gamma_numeric  {}", fmt(report.gamma_numeric));
            if !delta_g.is_empty() {
                let _ = writeln!(text, "delta_g        {delta_g} m/s^2");
            }
            text
        }
    };
    emit(&out, &content)
}

fn cmd_sweep(
    scenario: PathBuf,
    param: String,
    start: f64,
    stop: f64,
    count: usize,
    scale: Scale,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    if count < 2 {
        return Err(CliError::validation("sweep count must be at least 2".into()));
    }
    if start == stop {
        return Err(CliError::validation(
            "sweep start and stop must differ".into(),
        ));
    }
    if scale == Scale::Log && (start <= 0.0 || stop <= 0.0) {
        return Err(CliError::validation(
            "log-scale sweeps need positive bounds".into(),
        ));
    }
    let (file, _) = load(&scenario)?;
    // Validate the parameter path up front for a clean exit code.
    file.clone().set_parameter(&param, start)?;
    let grid: Vec<f64> = (0..count)
        .map(|i| {
            let frac = i as f64 / (count - 1) as f64;
            match scale {
                Scale::Linear => start + frac * (stop - start),
                Scale::Log => start * (stop / start).powf(frac),
            }
        })
        .collect();
    let rows: Vec<(Option<f64>, PhaseBreakdown)> = grid
        .par_iter()
        .map(|&value| {
            let mut patched = file.clone();
            patched.set_parameter(&param, value)?;
            let built = patched.build()?;
            let b = total_phase(&built.scenario)?;
            Ok((Some(value), b))
        })
        .collect::<Result<_, CliError>>()?;
    emit(&out, &breakdown_csv(Some("param_value"), &rows))
}

fn cmd_oracle(
    scenario: PathBuf,
    ctilde: Vec<f64>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let (_, s) = load(&scenario)?;
    let run = extract_series(&s, &ctilde)?;
    let mut csv = String::from("c_tilde,exact_phase,model_phase,residual\n");
    for i in 0..run.c_tilde.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt(run.c_tilde[i]),
            fmt(run.exact_phase[i]),
            fmt(run.model_phase[i]),
            fmt(run.fit_residuals[i])
        );
    }
    emit(&out, &csv)?;
    println!(
        "series:   a0 = {}  a1 = {}  a2 = {}",
        fmt(run.a0),
        fmt(run.a1),
        fmt(run.a2)
    );
    println!(
        "engine:   a0 = {}  a1 = {}  a2 = {}",
        fmt(run.model_a0),
        fmt(run.model_a1),
        fmt(run.model_a2)
    );
    println!(
        "checks:   unperturbed {}  residual slope {:.3}",
        fmt(run.unperturbed),
        run.residual_slope
    );
    if run.pass() {
        println!("verdict:  PASS");
        Ok(())
    } else {
        println!(
            "verdict:  FAIL (a0 {}, a1 {}, slope {}, fit {})",
            if run.a0_ok() { "ok" } else { "off" },
            if run.a1_ok() { "ok" } else { "off" },
            if run.slope_ok() { "ok" } else { "off" },
            if run.fit_ok { "ok" } else { "off" }
        );
        Err(CliError::computation(
            "oracle series disagrees with the perturbative engine".into(),
        ))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_diagram(
    scenario: PathBuf,
    z_min: Option<f64>,
    z_max: Option<f64>,
    z_count: usize,
    t_min: Option<f64>,
    t_max: Option<f64>,
    t_count: usize,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let (_, s) = load(&scenario)?;
    if z_count < 2 || t_count < 2 {
        return Err(CliError::validation(
            "diagram grid needs at least 2 points per axis".into(),
        ));
    }
    let (a1, a2) = propagate_idealized(
        &s.geometry,
        &s.mechanism,
        &s.species,
        &s.initial,
        s.gravity,
        &s.constants,
    );
    let total_t = s.geometry.total_time();
    // Default window: the pulse sequence, with height spanning the arms.
    let mut z_lo = f64::INFINITY;
    let mut z_hi = f64::NEG_INFINITY;
    for traj in [&a1, &a2] {
        for seg in traj.segments() {
            for t in [seg.t_start, seg.t_end, -seg.v_start / seg.accel.min(-1e-300)] {
                if t >= seg.t_start && t <= seg.t_end {
                    let z = seg.position(t);
                    z_lo = z_lo.min(z);
                    z_hi = z_hi.max(z);
                }
            }
        }
    }
    let pad = 0.1 * (z_hi - z_lo).max(1e-3);
    let z_lo = z_min.unwrap_or(z_lo - pad);
    let z_hi = z_max.unwrap_or(z_hi + pad);
    let t_lo = t_min.unwrap_or(0.0);
    let t_hi = t_max.unwrap_or(total_t);
    for (name, v) in [("z", z_lo), ("z", z_hi), ("t", t_lo), ("t", t_hi)] {
        if !v.is_finite() {
            return Err(CliError::validation(format!(
                "diagram {name} bound is not finite"
            )));
        }
    }
    if z_lo == z_hi || t_lo == t_hi {
        return Err(CliError::validation("diagram grid is degenerate".into()));
    }

    let mut csv =
        String::from("record,z_m,t_s,phi_eff_rad,pulse_index,arm,T_l_s,delay_s,t_star_s\n");
    for i in 0..t_count {
        let t = t_lo + (t_hi - t_lo) * i as f64 / (t_count - 1) as f64;
        for j in 0..z_count {
            let z = z_lo + (z_hi - z_lo) * j as f64 / (z_count - 1) as f64;
            let (dominant, remainder) = s.field.phase_split(s.gravity, z, t, &s.constants);
            let _ = writeln!(
                csv,
                "field,{},{},{},,,,,",
                fmt(z),
                fmt(t),
                fmt(dominant + remainder)
            );
        }
    }
    for (idx, pulse) in s.geometry.pulses().iter().enumerate() {
        for (arm_name, arm, traj) in [("1", Arm::One, &a1), ("2", Arm::Two, &a2)] {
            if pulse.weight(arm) == 0 {
                continue;
            }
            let delay = interaction_delay(traj, pulse.time, &s.constants)?;
            let t_star = solve_exact_interaction_time(traj, pulse.time, s.constants.c)?;
            let _ = writeln!(
                csv,
                "event,,,,{idx},{arm_name},{},{},{}",
                fmt(pulse.time),
                fmt(delay),
                fmt(t_star)
            );
        }
    }
    emit(&out, &csv)
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Phase {
            scenario,
            out,
            format,
        } => cmd_phase(scenario, out, format),
        Command::Gravimetry {
            scenario,
            delta_phi,
            delta_v0,
            out,
            format,
        } => cmd_gravimetry(scenario, delta_phi, delta_v0, out, format),
        Command::Sweep {
            scenario,
            param,
            start,
            stop,
            count,
            scale,
            out,
        } => cmd_sweep(scenario, param, start, stop, count, scale, out),
        Command::Oracle {
            scenario,
            ctilde,
            out,
        } => cmd_oracle(scenario, ctilde, out),
        Command::Diagram {
            scenario,
            z_min,
            z_max,
            z_count,
            t_min,
            t_max,
            t_count,
            out,
        } => cmd_diagram(scenario, z_min, z_max, z_count, t_min, t_max, t_count, out),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
